#pragma once

#include "tailnet/copula.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <vector>

namespace tailnet {

/// Minimiser of z' Sigma^-1 z over z >= 1.
struct QpSolution {
    /// Index set I (bits refer to the rows of the matrix passed to solve_qp).
    Subset I = 0;
    Eigen::VectorXd eStar;
    double gamma = 0.0;
    /// h = Sigma_I^-1 1_I, ordered like the members of I.
    Eigen::VectorXd h;

    std::vector<int> index() const { return subset_members(I); }
};

/// Largest dimension accepted by the index-set enumeration (2^d - 1 candidates).
constexpr int kMaxQpDim = 20;

/// Tolerance deciding e*_j == 1 versus e*_j > 1.
constexpr double kUnitTolerance = 1e-9;

/// Solves the program by enumerating index sets I and keeping the one with
/// Sigma_I^-1 1_I > 0 and Sigma_JI Sigma_I^-1 1_I >= 1_J. Throws
/// DegeneracyError when zero or several candidates pass.
QpSolution solve_qp(const Eigen::MatrixXd& sigma);
QpSolution solve_qp(const CorrelationMatrix& sigma);

/// c * t^a * (kappa + lambda * log t)^p.
struct PowerLog {
    double c = 1.0;
    double a = 0.0;
    double p = 0.0;
    double kappa = 1.0;
    double lambda = 0.0;

    double operator()(double t) const;
};

nlohmann::json to_json(const PowerLog& f);

/// Regular-variation data of a model on the cone of points with at least i
/// positive coordinates.
struct ConeSpec {
    int i = 1;
    double alpha_i = 0.0;
    /// Inverse scale function b_i^<-.
    PowerLog binv;
    /// Subsets attaining gamma_i (Gaussian models only).
    std::vector<Subset> argminSets;
    /// Smallest |I_S| over argminSets (Gaussian models only).
    int cardI = 0;
};

nlohmann::json to_json(const ConeSpec& spec);

/// Rectangle {v : v_s > z_s for s in S}; z has one entry per coordinate and
/// only the entries in S are read.
struct RectSet {
    int d = 0;
    Subset S = 0;
    Eigen::VectorXd z;

    static RectSet make(int d, Subset S, const Eigen::VectorXd& z);
    /// Rectangle with all thresholds in S equal to `value`.
    static RectSet uniform(int d, Subset S, double value);
    RectSet scaled(double factor) const;
};

ConeSpec gaussian_cone_spec(const CorrelationMatrix& sigma, double alpha, double theta, int i);

struct UpsilonTerm {
    double value = 0.0;
    double orthantError = 0.0;
    QpSolution qp;
};

/// The constant Upsilon_S of the Gaussian tail expansion on the members of S.
UpsilonTerm gaussian_upsilon(const CorrelationMatrix& sigma, Subset S);

double gaussian_mu(const CorrelationMatrix& sigma, double alpha, int i, const RectSet& rect);

/// Leading-order approximation of P(Z in t * rect).
double gaussian_tail_asymptotic(const CorrelationMatrix& sigma, double alpha, double theta,
                                const RectSet& rect, double t);

ConeSpec mo_cone_spec(MoVariant variant, double alpha, double theta, int d, int i);
double mo_mu(MoVariant variant, double alpha, int d, int i, const RectSet& rect);

bool mutual_ai_gaussian(const CorrelationMatrix& sigma);
bool pairwise_ai_gaussian(const CorrelationMatrix& sigma);

enum class SupportMass { Positive, Zero };

SupportMass gaussian_support_mass(const CorrelationMatrix& sigma, int i, Subset S);

struct AiRatioRow {
    double u = 0.0;
    double ratio = 0.0;
    double se = 0.0;
    bool exact = false;
    bool reliable = true;
    std::size_t hits = 0;
};

/// Minimum tail hits before an empirical ratio is considered reliable.
constexpr std::size_t kMinTailHits = 20;

/// C_S(u,...,u) / C_{S without ell}(u,...,u) along a decreasing grid. Exact for
/// i.i.d. and Marshall-Olkin models, Monte Carlo counting for Gaussian models.
std::vector<AiRatioRow> empirical_ai_ratio(const RiskModel& model, Subset S, int ell,
                                           const std::vector<double>& uGrid, std::size_t n,
                                           std::uint64_t seed, unsigned threads = 1);

/// Same ratio for the three-dimensional mixture, by corner-conditioned sampling.
std::vector<AiRatioRow> empirical_ai_ratio_mixture(Subset S, int ell, const std::vector<double>& uGrid,
                                                   std::size_t n, std::uint64_t seed);

} // namespace tailnet
