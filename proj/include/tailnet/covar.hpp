#pragma once

#include "tailnet/copula.hpp"
#include "tailnet/mrv.hpp"

#include <limits>
#include <span>
#include <string>
#include <vector>

namespace tailnet {

struct YPair {
    double y1 = 0.0;
    double y2 = 0.0;
};

/// Index (1-based) of the order statistic used as VaR_gamma: ceil(n (1 - gamma)),
/// clamped to [1, n]. A relative slack of 1e-9 absorbs rounding in n * gamma.
std::size_t var_rank(std::size_t n, double gamma);

/// Plug-in VaR_gamma of an ascending sample.
double var_empirical(std::span<const double> sorted, double gamma);

/// Minimum number of pairs above VaR_gamma2(Y2) before a CoVaR estimate is trusted.
constexpr std::size_t kMinExceedances = 20;

/// VaR_gamma1 of Y1 among the pairs with Y2 > VaR_gamma2(Y2). Throws ReliabilityError
/// when fewer than `minExceed` pairs remain.
double covar_empirical(std::span<const YPair> pairs, double gamma1, double gamma2,
                       std::size_t minExceed = kMinExceedances);

/// g(gamma) = gamma^beta * (-c log gamma)^q.
struct GSpec {
    double beta = 0.0;
    double q = 0.0;
    double c = 1.0;

    double operator()(double gamma) const;
};

struct CovarQuery {
    double gamma = 0.01;
    double upsilon = 0.5;
    GSpec g;
};

/// h(y) = mu_2((y, inf) x (1, inf)) as a piecewise power function c * y^-e.
class HFunction {
public:
    struct Piece {
        double lo;
        double hi;
        double c;
        double e;
    };

    HFunction(std::vector<Piece> pieces, std::string label);

    /// max(y, 1)^-alpha: comonotone coordinates.
    static HFunction strong(double alpha);
    /// y^-alpha: independent coordinates.
    static HFunction independent(double alpha);
    /// Bivariate Marshall-Olkin: y^-alpha above 1, y^-(alpha w) below with w = 1/2 (equal) or 1/3 (proportional).
    static HFunction marshall_olkin(MoVariant variant, double alpha);
    /// Bivariate Gaussian: Upsilon * y^(-alpha / (1 + rho)).
    static HFunction gaussian(double alpha, double rho);

    double operator()(double y) const;
    /// Inverse on the strictly decreasing branch; v must lie in (0, r).
    double inverse(double v) const;
    /// lim_{y -> 0} h(y), possibly infinite.
    double r() const { return r_; }
    /// Left end of the strictly decreasing branch.
    double l() const { return l_; }
    const std::string& label() const { return label_; }
    const std::vector<Piece>& pieces() const { return pieces_; }

private:
    std::vector<Piece> pieces_;
    std::string label_;
    double r_ = 0.0;
    double l_ = 0.0;
};

/// The argument upsilon * g(gamma) * gamma * b2^<-(VaR_gamma) fed to h^-1.
double covar_level_argument(const PowerLog& b2inv, double varGamma, const CovarQuery& query);

/// VaR_gamma * h^-1(upsilon g(gamma) gamma b2^<-(VaR_gamma)).
double covar_asymptotic_generic(const HFunction& h, const PowerLog& b2inv, double varGamma,
                                const CovarQuery& query);

/// Exact VaR of a Pareto(alpha, theta) margin.
double pareto_var(double alpha, double theta, double gamma);

/// Closed-form CoVaR_{upsilon gamma^beta | gamma} for the bivariate Marshall-Olkin
/// families. At the boundary beta (1/2 or 1/3) the first branch is used for
/// upsilon <= 1 and the second one above.
double covar_asymptotic_mo(MoVariant variant, double alpha, double theta, double beta, double upsilon,
                           double gamma);

/// Constant B*(rho, alpha) of the bivariate Gaussian CoVaR.
double gaussian_bstar(double rho, double alpha);

/// Bivariate Gaussian CoVaR. Throws DomainError when g grows faster than
/// gamma^((1-rho)/(1+rho)) (-log gamma)^(-rho/(1+rho)).
double covar_asymptotic_gauss(double alpha, double theta, double rho, double upsilon, double gamma,
                              const GSpec& g);

/// The level function at the boundary of the Gaussian growth condition.
GSpec gaussian_boundary_g(double rho);

struct EciReport {
    double eci = 0.0;
    double beta = 0.0;
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    /// Number of grid points entering the regression (empirical reports only).
    std::size_t points = 0;
};

/// alpha1 / (alpha2 - alpha1), infinite when the indices coincide.
EciReport eci(double alpha1, double alpha2);

/// Band factor around VaR_gamma(Y2) used by eci_empirical.
constexpr double kEciBand = 2.0;

/// Regresses log g_hat(gamma) on log gamma, where g_hat(gamma) is the fraction of pairs
/// with Y2 > VaR_gamma(Y2) that also have Y1 > kEciBand * VaR_gamma(Y2), divided by upsilon.
/// The index is the reciprocal slope. Grid points with fewer than kMinExceedances
/// conditioning pairs or fewer than 10 hits are skipped.
EciReport eci_empirical(std::span<const YPair> pairs, const std::vector<double>& gammaGrid, double upsilon);

} // namespace tailnet
