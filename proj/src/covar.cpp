#include "tailnet/covar.hpp"

#include "tailnet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace tailnet {

namespace {

void check_level(double gamma, const char* name) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError(std::string(name) + " must lie in (0, 1)");
}

// Minimum number of conditional exceedances of the band for a grid point to enter the ECI fit.
constexpr std::size_t kEciMinHits = 10;

} // namespace

// ---------------------------------------------------------------- empirical quantiles

std::size_t var_rank(std::size_t n, double gamma) {
    const double x = static_cast<double>(n) - static_cast<double>(n) * gamma;
    const double k = std::ceil(x - 1e-9 * std::max(1.0, x));
    if (k < 1.0) return 1;
    if (k > static_cast<double>(n)) return n;
    return static_cast<std::size_t>(k);
}

double var_empirical(std::span<const double> sorted, double gamma) {
    if (sorted.empty()) throw DomainError("var_empirical: empty sample");
    check_level(gamma, "gamma");
    return sorted[var_rank(sorted.size(), gamma) - 1];
}

double covar_empirical(std::span<const YPair> pairs, double gamma1, double gamma2, std::size_t minExceed) {
    if (pairs.empty()) throw DomainError("covar_empirical: empty sample");
    check_level(gamma1, "gamma1");
    check_level(gamma2, "gamma2");
    std::vector<double> y2(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) y2[k] = pairs[k].y2;
    const std::size_t rank = var_rank(y2.size(), gamma2);
    std::nth_element(y2.begin(), y2.begin() + (rank - 1), y2.end());
    const double v = y2[rank - 1];

    std::vector<double> y1;
    for (const auto& p : pairs)
        if (p.y2 > v) y1.push_back(p.y1);
    if (y1.size() < minExceed) {
        std::ostringstream os;
        os << "covar_empirical: only " << y1.size() << " pairs exceed VaR of Y2 (need " << minExceed << ")";
        throw ReliabilityError(os.str(), y1.size());
    }
    std::sort(y1.begin(), y1.end());
    return var_empirical(y1, gamma1);
}

// ---------------------------------------------------------------- level function

double GSpec::operator()(double gamma) const {
    double v = std::pow(gamma, beta);
    if (q != 0.0) v *= std::pow(-c * std::log(gamma), q);
    return v;
}

// ---------------------------------------------------------------- h function

HFunction::HFunction(std::vector<Piece> pieces, std::string label)
    : pieces_(std::move(pieces)), label_(std::move(label)) {
    if (pieces_.empty()) throw DomainError("HFunction needs at least one piece");
    for (std::size_t k = 0; k < pieces_.size(); ++k) {
        const auto& p = pieces_[k];
        if (!(p.lo < p.hi) || !(p.c > 0.0) || !(p.e >= 0.0)) throw DomainError("HFunction: malformed piece");
        if (k == 0 && p.lo != 0.0) throw DomainError("HFunction: first piece must start at 0");
        if (k > 0 && p.lo != pieces_[k - 1].hi) throw DomainError("HFunction: pieces must be contiguous");
    }
    if (pieces_.back().hi != INFINITY) throw DomainError("HFunction: last piece must extend to infinity");
    const auto& first = pieces_.front();
    r_ = first.e > 0.0 ? INFINITY : first.c;
    l_ = 0.0;
    for (const auto& p : pieces_) {
        if (p.e > 0.0) break;
        l_ = p.hi;
    }
}

HFunction HFunction::strong(double alpha) {
    if (!(alpha > 0.0)) throw DomainError("alpha must be > 0");
    return HFunction({{0.0, 1.0, 1.0, 0.0}, {1.0, INFINITY, 1.0, alpha}}, "strong");
}

HFunction HFunction::independent(double alpha) {
    if (!(alpha > 0.0)) throw DomainError("alpha must be > 0");
    return HFunction({{0.0, INFINITY, 1.0, alpha}}, "independent");
}

HFunction HFunction::marshall_olkin(MoVariant variant, double alpha) {
    if (!(alpha > 0.0)) throw DomainError("alpha must be > 0");
    if (variant == MoVariant::General) throw DomainError("h is tabulated only for the equal and proportional families");
    const double w = variant == MoVariant::Equal ? 0.5 : 1.0 / 3.0;
    return HFunction({{0.0, 1.0, 1.0, alpha * w}, {1.0, INFINITY, 1.0, alpha}}, "mo-" + to_string(variant));
}

HFunction HFunction::gaussian(double alpha, double rho) {
    if (!(alpha > 0.0)) throw DomainError("alpha must be > 0");
    if (!(rho > -1.0 && rho < 1.0)) throw DomainError("rho must lie in (-1, 1)");
    const double upsilon = std::pow(1.0 + rho, 1.5) / (2.0 * std::numbers::pi * std::sqrt(1.0 - rho));
    return HFunction({{0.0, INFINITY, upsilon, alpha / (1.0 + rho)}}, "gaussian");
}

double HFunction::operator()(double y) const {
    if (!(y > 0.0)) throw DomainError("h is defined for y > 0");
    for (const auto& p : pieces_)
        if (y < p.hi) return p.c * std::pow(y, -p.e);
    return 0.0;
}

double HFunction::inverse(double v) const {
    if (!(v > 0.0 && v < r_)) {
        std::ostringstream os;
        os << "h^-1 is defined on (0, " << r_ << "), got " << v;
        throw DomainError(os.str());
    }
    for (const auto& p : pieces_) {
        if (p.e == 0.0) continue;
        const double top = p.c * std::pow(p.lo, -p.e); // infinite when lo = 0
        const double bottom = p.hi == INFINITY ? 0.0 : p.c * std::pow(p.hi, -p.e);
        if (v <= top && v > bottom) return std::pow(v / p.c, -1.0 / p.e);
    }
    throw DomainError("h^-1: value not attained on the decreasing branch");
}

// ---------------------------------------------------------------- asymptotic CoVaR

double covar_level_argument(const PowerLog& b2inv, double varGamma, const CovarQuery& query) {
    check_level(query.gamma, "gamma");
    if (!(query.upsilon > 0.0)) throw DomainError("upsilon must be > 0");
    if (!(varGamma > 0.0)) throw DomainError("VaR must be > 0");
    return query.upsilon * query.g(query.gamma) * query.gamma * b2inv(varGamma);
}

double covar_asymptotic_generic(const HFunction& h, const PowerLog& b2inv, double varGamma, const CovarQuery& query) {
    const double v = covar_level_argument(b2inv, varGamma, query);
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw DomainError("level argument is not a positive number: regime (b) requires a positive argument "
                          "tending to 0");
    }
    if (!(v < h.r())) {
        std::ostringstream os;
        os << "level argument " << v << " is not below r = " << h.r()
           << ": regime (a) needs it strictly inside (0, r) and regime (c) needs it to approach r from below";
        throw DomainError(os.str());
    }
    return varGamma * h.inverse(v);
}

double pareto_var(double alpha, double theta, double gamma) {
    check_level(gamma, "gamma");
    return std::pow(theta / gamma, 1.0 / alpha);
}

double covar_asymptotic_mo(MoVariant variant, double alpha, double theta, double beta, double upsilon, double gamma) {
    if (variant == MoVariant::General) throw DomainError("closed form needs the equal or proportional family");
    if (!(alpha > 0.0) || !(theta > 0.0)) throw DomainError("alpha and theta must be > 0");
    if (!(beta >= 0.0)) throw DomainError("beta must be >= 0");
    if (!(upsilon > 0.0)) throw DomainError("upsilon must be > 0");
    const double var = pareto_var(alpha, theta, gamma);
    const double boundary = variant == MoVariant::Equal ? 0.5 : 1.0 / 3.0;
    const double m = variant == MoVariant::Equal ? 2.0 : 3.0;
    const double level = upsilon * std::pow(gamma, beta);
    const bool first = beta > boundary || (beta == boundary && upsilon <= 1.0);
    if (first) return std::pow(level, -1.0 / alpha) * std::pow(gamma, 1.0 / (m * alpha)) * var;
    return std::pow(level, -m / alpha) * std::pow(gamma, 1.0 / alpha) * var;
}

double gaussian_bstar(double rho, double alpha) {
    return std::pow(4.0 * std::numbers::pi, -rho / alpha) * std::pow(1.0 + rho, 3.0 * (1.0 + rho) / (2.0 * alpha)) *
           std::pow(1.0 - rho, -(1.0 + rho) / (2.0 * alpha));
}

GSpec gaussian_boundary_g(double rho) {
    return GSpec{(1.0 - rho) / (1.0 + rho), -rho / (1.0 + rho), 1.0};
}

double covar_asymptotic_gauss(double alpha, double theta, double rho, double upsilon, double gamma, const GSpec& g) {
    if (!(alpha > 0.0) || !(theta > 0.0)) throw DomainError("alpha and theta must be > 0");
    if (!(rho > -1.0 && rho < 1.0)) throw DomainError("rho must lie in (-1, 1)");
    if (!(upsilon > 0.0)) throw DomainError("upsilon must be > 0");
    check_level(gamma, "gamma");
    const GSpec edge = gaussian_boundary_g(rho);
    constexpr double tol = 1e-12;
    const bool ok = g.beta > edge.beta + tol || (std::abs(g.beta - edge.beta) <= tol && g.q <= edge.q + tol);
    if (!ok) throw DomainError("g grows faster than gamma^((1-rho)/(1+rho)) (-log gamma)^(-rho/(1+rho))");
    const double var = pareto_var(alpha, theta, gamma);
    return gaussian_bstar(rho, alpha) * std::pow(upsilon * g(gamma), -(1.0 + rho) / alpha) *
           std::pow(gamma, (1.0 - rho) / alpha) * std::pow(std::log(1.0 / gamma), -rho / alpha) * var;
}

// ---------------------------------------------------------------- ECI

EciReport eci(double alpha1, double alpha2) {
    if (!(alpha1 > 0.0) || !(alpha2 >= alpha1)) throw DomainError("eci needs alpha2 >= alpha1 > 0");
    EciReport r;
    r.alpha1 = alpha1;
    r.alpha2 = alpha2;
    if (alpha2 == alpha1) {
        r.eci = INFINITY;
        r.beta = 0.0;
    } else {
        r.beta = alpha2 / alpha1 - 1.0;
        r.eci = alpha1 / (alpha2 - alpha1);
    }
    return r;
}

EciReport eci_empirical(std::span<const YPair> pairs, const std::vector<double>& gammaGrid, double upsilon) {
    if (pairs.empty()) throw DomainError("eci_empirical: empty sample");
    if (!(upsilon > 0.0)) throw DomainError("upsilon must be > 0");
    if (gammaGrid.empty()) throw DomainError("eci_empirical: empty grid");
    for (double g : gammaGrid) check_level(g, "gamma grid value");
    const auto [lo, hi] = std::minmax_element(gammaGrid.begin(), gammaGrid.end());
    if (std::log10(*hi / *lo) < 1.5 - 1e-12) throw DomainError("eci_empirical: gamma grid must span at least 1.5 decades");

    std::vector<YPair> sorted(pairs.begin(), pairs.end());
    std::sort(sorted.begin(), sorted.end(), [](const YPair& a, const YPair& b) { return a.y2 < b.y2; });
    const std::size_t n = sorted.size();

    std::vector<double> xs, ys;
    for (double gamma : gammaGrid) {
        const std::size_t rank = var_rank(n, gamma);
        const double v = sorted[rank - 1].y2;
        std::size_t cond = 0, hits = 0;
        for (std::size_t k = rank; k < n; ++k) {
            if (!(sorted[k].y2 > v)) continue;
            ++cond;
            if (sorted[k].y1 > kEciBand * v) ++hits;
        }
        if (cond < kMinExceedances || hits < kEciMinHits) continue;
        const double gHat = static_cast<double>(hits) / static_cast<double>(cond) / upsilon;
        xs.push_back(std::log(gamma));
        ys.push_back(std::log(gHat));
    }
    if (xs.size() < 4) {
        std::ostringstream os;
        os << "eci_empirical: only " << xs.size() << " usable grid points (need 4)";
        throw ReliabilityError(os.str(), xs.size());
    }
    const double m = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        mx += xs[k];
        my += ys[k];
    }
    mx /= m;
    my /= m;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sxy += (xs[k] - mx) * (ys[k] - my);
        sxx += (xs[k] - mx) * (xs[k] - mx);
    }
    EciReport r;
    r.beta = sxy / sxx;
    r.eci = r.beta > 0.0 ? 1.0 / r.beta : INFINITY;
    r.points = xs.size();
    r.alpha1 = NAN;
    r.alpha2 = NAN;
    return r;
}

} // namespace tailnet
