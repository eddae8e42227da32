#pragma once

#include "tailnet/copula.hpp"
#include "tailnet/covar.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tailnet {

/// Law of a nonzero adjacency weight: point mass or uniform on [lo, hi].
struct WeightSpec {
    enum class Kind { Point, Uniform };
    Kind kind = Kind::Point;
    double lo = 1.0;
    double hi = 1.0;

    static WeightSpec point(double value);
    static WeightSpec uniform(double lo, double hi);
    /// E[W^p].
    double moment(double p) const;
};

class BipartiteNetwork {
public:
    /// edgeProb is q x d with entries in [0, 1]; every row needs a positive entry.
    BipartiteNetwork(Eigen::MatrixXd edgeProb, WeightSpec weights);

    int q() const { return static_cast<int>(p_.rows()); }
    int d() const { return static_cast<int>(p_.cols()); }
    const Eigen::MatrixXd& edge_prob() const { return p_; }
    const WeightSpec& weights() const { return w_; }

private:
    Eigen::MatrixXd p_;
    WeightSpec w_;
};

/// Draw number `index` of the adjacency matrix. Rows that come out all zero are
/// redrawn, which conditions on the absence of trivial rows.
Eigen::MatrixXd sample_adjacency(const BipartiteNetwork& net, std::uint64_t seed, std::uint64_t index = 0);

/// Either a fixed matrix or a random network.
class AdjacencyLaw {
public:
    static AdjacencyLaw deterministic(Eigen::MatrixXd a);
    static AdjacencyLaw random(BipartiteNetwork net);

    bool is_deterministic() const { return fixed_.has_value(); }
    int q() const;
    int d() const;
    /// 1 where P(a_kj > 0) > 0, else 0.
    Eigen::MatrixXd support() const;
    Eigen::MatrixXd draw(std::uint64_t seed, std::uint64_t index) const;
    const std::optional<Eigen::MatrixXd>& fixed() const { return fixed_; }
    const std::optional<BipartiteNetwork>& network() const { return net_; }

private:
    std::optional<Eigen::MatrixXd> fixed_;
    std::optional<BipartiteNetwork> net_;
};

/// Minimum number of columns whose positive entries jointly reach at least k rows.
int cover_index(const Eigen::MatrixXd& a, int k);

/// A row of the derived two-row matrix: sum or maximum over a set of agents.
struct RowSpec {
    enum class Op { Sum, Max };
    Op op = Op::Sum;
    std::vector<int> agents; // 0-based

    Eigen::RowVectorXd apply(const Eigen::MatrixXd& a) const;
    double value(const Eigen::VectorXd& x) const;
};

/// Maps the q x d exposure matrix (and X = A Z) to a bivariate problem.
struct PairSelector {
    RowSpec first;
    RowSpec second;

    /// (X_k, X_m), 0-based agents.
    static PairSelector pair(int k, int m);
    /// (sum over S, sum over T).
    static PairSelector aggregate(std::vector<int> S, std::vector<int> T);
    /// (X_k, max over the other agents).
    static PairSelector one_vs_max(int k, int q);
    PairSelector swapped() const { return {second, first}; }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& a) const;
    YPair value(const Eigen::VectorXd& x) const;
    void validate(int q) const;
};

/// The 2 x d matrix (e^S, e^T)^T A.
Eigen::MatrixXd aggregate(const Eigen::MatrixXd& a, const std::vector<int>& S, const std::vector<int>& T);

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

/// Default number of adjacency draws for moment terms of a random network.
constexpr std::size_t kMomentDraws = 100000;

/// Expectations over the law of the derived two-row matrix. Deterministic laws
/// are evaluated exactly from a single matrix.
class PairMoments {
public:
    PairMoments(const AdjacencyLaw& law, const PairSelector& selector, std::size_t draws = kMomentDraws,
                std::uint64_t seed = 0);

    int d() const { return d_; }
    /// Same draws with the two derived rows exchanged.
    PairMoments swapped() const;
    bool exact() const { return draws_.size() == 1; }
    /// 1 where P(a'_rl > 0) > 0 for the derived rows r = 0, 1.
    const Eigen::MatrixXd& support() const { return support_; }
    /// Mean and standard error of f over the derived matrices.
    Estimate expect(const std::function<double(const Eigen::MatrixXd&)>& f) const;
    /// sum_l E[a'_rl^p].
    Estimate row_moment(int r, double p) const;
    /// sum over ordered pairs (l, j) of E[a'_0l^p a'_1j^s].
    Estimate cross_moment(double p, double s) const;

private:
    int d_ = 0;
    std::vector<Eigen::MatrixXd> draws_;
    Eigen::MatrixXd support_;

    PairMoments() = default;
};

/// Whether the two derived rows can share an object, and the Gaussian correlation summary.
struct OverlapProfile {
    bool overlap = false;
    /// Columns that are not almost surely zero in both rows.
    std::vector<int> activeColumns;
    std::optional<double> rhoVee;
    std::optional<double> rhoStar;
    /// Largest off-diagonal correlation among the active columns.
    std::optional<double> rhoVeeActive;
};

OverlapProfile overlap_profile(const Eigen::MatrixXd& support, const RiskModel& model);

enum class NetworkCase { Overlap, DisjointIid, DisjointMoEqual, DisjointMoProportional, DisjointGaussian };

std::string to_string(NetworkCase c);

NetworkCase resolve_case(const OverlapProfile& profile, const RiskModel& model);

/// mu-bar_1([0, x]^c) = sum_l E[max(a_1l/x1, a_2l/x2)^alpha].
Estimate mu_bar_1(const PairMoments& m, const RiskModel& model, const Eigen::Vector2d& x);
/// mu-bar_2((x, inf)) for overlapping portfolios. Throws DispatchError when the rows cannot overlap.
Estimate mu_bar_2_overlap(const PairMoments& m, const RiskModel& model, const Eigen::Vector2d& x);
/// mu-bar_2((x, inf)) for portfolios on disjoint objects, per dependence family.
Estimate disjoint_mu_bar_2(const PairMoments& m, const RiskModel& model, const Eigen::Vector2d& x);
/// The Gaussian limit on the second cone of the full model evaluated on the preimage
/// of (x, inf), summed over the cross pairs (l, j). Zero when no cross pair attains gamma_2.
Estimate gaussian_full_mu_bar_2(const PairMoments& m, const RiskModel& model, const Eigen::Vector2d& x);

/// C(rho, alpha) of the Gaussian network scale function.
double gaussian_c(double rho, double alpha);
/// D(rho, alpha, A): sum over ordered pairs with rho_lj = rho.
Estimate gaussian_d(const PairMoments& m, const CorrelationMatrix& sigma, double rho, double alpha);

/// Inverse scale function b^<- of the second-cone limit selected by the case.
PowerLog network_binv2(NetworkCase c, const RiskModel& model, const OverlapProfile& profile);

/// Asymptotic P(X1 > t x1, X2 > t x2).
double network_joint_tail(NetworkCase c, const PairMoments& m, const RiskModel& model, const Eigen::Vector2d& x,
                          double t);
/// Asymptotic P(X1 > t x1 | X2 > t x2).
double network_cond_prob(NetworkCase c, const PairMoments& m, const RiskModel& model, const Eigen::Vector2d& x,
                         double t);

/// Level function g of the case; the CoVaR level is upsilon * g(gamma).
GSpec network_level(NetworkCase c, const RiskModel& model, const OverlapProfile& profile);

struct NetworkCovar {
    double level = 0.0;
    /// Asymptotic VaR_gamma(X2) = (theta sum_l E[a_2l^alpha] / gamma)^(1/alpha).
    double var2 = 0.0;
    double value = 0.0;
    /// Branch formulas valid for small / large upsilon (Marshall-Olkin cases only; both
    /// equal `value` otherwise).
    double lowBranch = 0.0;
    double highBranch = 0.0;
    bool twoBranches = false;
};

NetworkCovar network_covar(NetworkCase c, const PairMoments& m, const RiskModel& model, double upsilon,
                           double gamma);

EciReport network_eci(NetworkCase c, const RiskModel& model, const OverlapProfile& profile);

struct OneVsMaxReport {
    NetworkCase networkCase = NetworkCase::Overlap;
    double mu1 = 0.0;
    double mu2 = 0.0;
    double condProb12 = 0.0;
    double condProb21 = 0.0;
    NetworkCovar covar12;
    NetworkCovar covar21;
    EciReport eci12;
    EciReport eci21;
};

/// Y = (X_k, max_{m != k} X_m): both conditional probabilities, both CoVaR
/// directions and both ECIs.
OneVsMaxReport one_vs_max(const AdjacencyLaw& law, const RiskModel& model, int k, const Eigen::Vector2d& x, double t,
                          double upsilon, double gamma, std::size_t draws = kMomentDraws, std::uint64_t seed = 0);

} // namespace tailnet
