#pragma once

#include "tailnet/normal.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

namespace tailnet {

/// Subset of coordinates as a bit mask; bit j set means coordinate j (0-based).
using Subset = std::uint32_t;

Subset make_subset(std::initializer_list<int> indices);
Subset make_subset(const std::vector<int>& indices);
std::vector<int> subset_members(Subset s);
int subset_size(Subset s);
inline bool subset_contains(Subset s, int j) { return (s >> j) & 1u; }
inline Subset full_subset(int d) { return d >= 32 ? ~Subset(0) : ((Subset(1) << d) - 1); }

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Exact Pareto law with survival theta * t^-alpha above theta^(1/alpha).
struct ParetoMargin {
    double alpha = 1.0;
    double theta = 1.0;

    ParetoMargin() = default;
    ParetoMargin(double alpha, double theta);

    double survival(double t) const;
    /// Inverse of the survival function on (0, 1].
    double quantile(double u) const;
    /// Lower end of the support, theta^(1/alpha).
    double lower() const;
};

class CorrelationMatrix {
public:
    /// Validates symmetry, unit diagonal, off-diagonal range and positive definiteness.
    explicit CorrelationMatrix(Eigen::MatrixXd m);
    static CorrelationMatrix equicorrelation(int d, double rho);
    static CorrelationMatrix identity(int d);

    int dim() const { return static_cast<int>(m_.rows()); }
    const Eigen::MatrixXd& matrix() const { return m_; }
    double operator()(int i, int j) const { return m_(i, j); }
    /// Principal sub-matrix on the members of s (in increasing order).
    Eigen::MatrixXd sub(Subset s) const;
    /// Lower Cholesky factor.
    const Eigen::MatrixXd& cholesky() const { return chol_; }

private:
    Eigen::MatrixXd m_;
    Eigen::MatrixXd chol_;
};

enum class MoVariant { Equal, Proportional, General };

std::string to_string(MoVariant v);

/// Shock rates lambda_S for every nonempty subset S.
class MoRateFamily {
public:
    static MoRateFamily equal(int d, double lambda = 1.0);
    static MoRateFamily proportional(int d, double lambda = 1.0);
    /// rates[mask] for mask in 1 .. 2^d - 1; rates[0] is ignored.
    static MoRateFamily general(int d, std::vector<double> rates);

    int dim() const { return d_; }
    MoVariant variant() const { return variant_; }
    double lambda() const { return lambda_; }
    double rate(Subset s) const;
    /// Sum of lambda_J over all J containing j.
    double total_rate(int j) const;

private:
    MoRateFamily(int d, MoVariant v, double lambda, std::vector<double> rates);
    int d_;
    MoVariant variant_;
    double lambda_;
    std::vector<double> rates_;
};

/// eta_j^S = lambda_S / sum_{J containing j} lambda_J. Throws DomainError if j is not in S.
double mo_eta(const MoRateFamily& rates, int j, Subset S);

enum class DependenceKind { Iid, Gaussian, MarshallOlkin };

std::string to_string(DependenceKind k);

struct RiskModel {
    ParetoMargin margin;
    DependenceKind kind = DependenceKind::Iid;
    int d = 2;
    std::optional<CorrelationMatrix> sigma;
    std::optional<MoRateFamily> mo;

    static RiskModel iid(ParetoMargin margin, int d);
    static RiskModel gaussian(ParetoMargin margin, CorrelationMatrix sigma);
    static RiskModel marshall_olkin(ParetoMargin margin, MoRateFamily rates);
};

/// Default cap on the dimension for which all 2^d - 1 shocks are drawn.
constexpr int kMaxShockDim = 16;

/// Draws rows of Z. Row r consumes a fixed block of counters, so any row can
/// be generated independently of the others.
class ModelSampler {
public:
    ModelSampler(const RiskModel& model, std::uint64_t seed, int maxShockDim = kMaxShockDim);
    int dim() const { return model_.d; }
    void draw(std::uint64_t row, double* z) const;

private:
    RiskModel model_;
    std::uint64_t seed_;
    std::uint64_t slots_;
    std::vector<double> shockRates_;
    std::vector<double> totalRates_;
};

/// n x d sample matrix of Z; deterministic in (model, n, seed) for any thread count.
RowMatrix sample(const RiskModel& model, std::size_t n, std::uint64_t seed, unsigned threads = 1,
                 int maxShockDim = kMaxShockDim);

/// P(F_j(Z_j) > 1 - u_j for all j).
double survival_copula(const RiskModel& model, const Eigen::VectorXd& u);
/// Gaussian survival copula with the integrator error estimate.
OrthantResult gaussian_survival_copula(const CorrelationMatrix& sigma, const Eigen::VectorXd& u);
/// Closed-form Marshall-Olkin survival copula.
double mo_survival_copula(const MoRateFamily& rates, const Eigen::VectorXd& u);

// Three-dimensional mixture of (U, V, min(U, V)) and its coordinate rotations.

/// n x 3 draws; each row picks one of the three arrangements with probability 1/3.
RowMatrix bernstein_mixture_sample(std::size_t n, std::uint64_t seed);
/// Common marginal CDF 4u/3 - u^2/3 on [0, 1].
double mixture_cdf(double x);
/// Level c with F(c) = 1 - u, i.e. 2 - sqrt(1 + 3u).
double mixture_threshold(double u);
/// Pairwise (and triple) survival copula value (sqrt(1 + 3u) - 1)^2.
double mixture_pair_survival(double u);

struct CornerEstimate {
    double value = 0.0;
    double se = 0.0;
    std::size_t hits = 0;
    std::size_t hitsReference = 0;
    std::size_t draws = 0;
};

/// Monte Carlo estimate of the mixture survival copula on the diagonal,
/// P(F(Z_j) > 1 - u for j in S), for |S| >= 2.
///
/// Every such event forces U and V above the threshold, so (U, V) is drawn
/// uniformly on the corner box (1 - delta, 1)^2 and the hit fraction is scaled
/// by delta^2. `reference` (optional, may be 0) is counted on the same draws.
CornerEstimate mixture_corner_estimate(Subset S, double u, std::size_t n, std::uint64_t seed,
                                       Subset reference = 0);

} // namespace tailnet
