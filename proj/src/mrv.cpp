#include "tailnet/mrv.hpp"

#include "tailnet/errors.hpp"
#include "tailnet/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace tailnet {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Eigen::MatrixXd principal(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
    const auto k = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd out(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = 0; b < k; ++b) out(a, b) = m(idx[a], idx[b]);
    return out;
}

Eigen::MatrixXd block(const Eigen::MatrixXd& m, const std::vector<int>& rows, const std::vector<int>& cols) {
    Eigen::MatrixXd out(rows.size(), cols.size());
    for (std::size_t a = 0; a < rows.size(); ++a)
        for (std::size_t b = 0; b < cols.size(); ++b) out(a, b) = m(rows[a], cols[b]);
    return out;
}

void check_cone_order(int i, int d) {
    if (i < 1 || i > d) throw DomainError("cone order i must lie in 1..d");
}

void check_rect(const RectSet& rect, int d) {
    if (rect.d != d) throw DomainError("rectangle dimension does not match the model");
}

} // namespace

// ---------------------------------------------------------------- quadratic program

QpSolution solve_qp(const Eigen::MatrixXd& sigma) {
    const int d = static_cast<int>(sigma.rows());
    if (d < 1 || sigma.cols() != d) throw DomainError("solve_qp: matrix must be square");
    if (d > kMaxQpDim) throw CapacityError("solve_qp enumerates 2^d - 1 index sets; d exceeds the cap", kMaxQpDim);
    {
        Eigen::LLT<Eigen::MatrixXd> llt(sigma);
        if (llt.info() != Eigen::Success) throw ModelError("solve_qp: matrix is not positive definite");
    }

    std::vector<Subset> passing;
    QpSolution best;
    const Subset full = full_subset(d);
    for (Subset I = 1; I <= full; ++I) {
        const auto idx = subset_members(I);
        const Eigen::MatrixXd sI = principal(sigma, idx);
        const Eigen::VectorXd h = sI.llt().solve(Eigen::VectorXd::Ones(idx.size()));
        if ((h.array() <= 0.0).any()) continue;
        std::vector<int> jdx;
        for (int j = 0; j < d; ++j)
            if (!subset_contains(I, j)) jdx.push_back(j);
        Eigen::VectorXd eJ;
        if (!jdx.empty()) {
            eJ = block(sigma, jdx, idx) * h;
            if ((eJ.array() < 1.0 - 1e-10).any()) continue;
        }
        passing.push_back(I);
        best.I = I;
        best.h = h;
        best.gamma = h.sum();
        best.eStar = Eigen::VectorXd::Ones(d);
        for (std::size_t k = 0; k < jdx.size(); ++k) best.eStar(jdx[k]) = eJ(k);
    }
    if (passing.size() != 1) {
        std::ostringstream os;
        os << "solve_qp: " << passing.size() << " candidate index sets passed the optimality checks";
        throw DegeneracyError(os.str(), passing);
    }
    return best;
}

QpSolution solve_qp(const CorrelationMatrix& sigma) { return solve_qp(sigma.matrix()); }

// ---------------------------------------------------------------- power-log form

double PowerLog::operator()(double t) const {
    double v = c * std::pow(t, a);
    if (p != 0.0) v *= std::pow(kappa + lambda * std::log(t), p);
    return v;
}

nlohmann::json to_json(const PowerLog& f) {
    return {{"c", f.c}, {"a", f.a}, {"p", f.p}, {"kappa", f.kappa}, {"lambda", f.lambda}};
}

nlohmann::json to_json(const ConeSpec& spec) {
    nlohmann::json sets = nlohmann::json::array();
    for (Subset s : spec.argminSets) {
        nlohmann::json members = nlohmann::json::array();
        for (int j : subset_members(s)) members.push_back(j + 1);
        sets.push_back(members);
    }
    return {{"i", spec.i},
            {"alpha_i", spec.alpha_i},
            {"binv", to_json(spec.binv)},
            {"argmin_sets", sets},
            {"cardI", spec.cardI}};
}

RectSet RectSet::make(int d, Subset S, const Eigen::VectorXd& z) {
    if (d < 1 || z.size() != d) throw DomainError("rectangle thresholds need one entry per coordinate");
    if (S == 0 || (S & ~full_subset(d)) != 0) throw DomainError("rectangle subset must be nonempty and inside 1..d");
    for (int s : subset_members(S))
        if (!(z(s) > 0.0) || !std::isfinite(z(s))) throw DomainError("rectangle thresholds must be positive");
    return RectSet{d, S, z};
}

RectSet RectSet::uniform(int d, Subset S, double value) {
    return make(d, S, Eigen::VectorXd::Constant(d, value));
}

RectSet RectSet::scaled(double factor) const {
    return make(d, S, z * factor);
}

// ---------------------------------------------------------------- Gaussian cones

ConeSpec gaussian_cone_spec(const CorrelationMatrix& sigma, double alpha, double theta, int i) {
    const int d = sigma.dim();
    check_cone_order(i, d);
    if (!(alpha > 0.0) || !(theta > 0.0)) throw DomainError("alpha and theta must be > 0");
    ConeSpec spec;
    spec.i = i;
    if (i == 1) {
        spec.alpha_i = alpha;
        spec.binv = PowerLog{1.0 / theta, alpha, 0.0, 1.0, 0.0};
        for (int j = 0; j < d; ++j) spec.argminSets.push_back(Subset(1) << j);
        spec.cardI = 1;
        return spec;
    }

    struct Candidate {
        Subset S;
        double gamma;
        int cardI;
    };
    std::vector<Candidate> all;
    double gammaMin = INFINITY;
    const Subset full = full_subset(d);
    for (Subset S = 1; S <= full; ++S) {
        if (subset_size(S) < i) continue;
        const QpSolution qp = solve_qp(sigma.sub(S));
        all.push_back({S, qp.gamma, subset_size(qp.I)});
        gammaMin = std::min(gammaMin, qp.gamma);
    }
    int cardI = d + 1;
    for (const auto& c : all) {
        if (std::abs(c.gamma - gammaMin) <= 1e-10 * gammaMin) {
            spec.argminSets.push_back(c.S);
            cardI = std::min(cardI, c.cardI);
        }
    }
    spec.alpha_i = alpha * gammaMin;
    spec.cardI = cardI;
    spec.binv = PowerLog{std::pow(kTwoPi, -gammaMin / 2.0) * std::pow(theta, -gammaMin), alpha * gammaMin,
                         (cardI - gammaMin) / 2.0, 0.0, 2.0 * alpha};
    return spec;
}

UpsilonTerm gaussian_upsilon(const CorrelationMatrix& sigma, Subset S) {
    if (S == 0 || (S & ~full_subset(sigma.dim())) != 0) throw DomainError("subset outside the model dimension");
    const Eigen::MatrixXd sS = sigma.sub(S);
    UpsilonTerm out;
    out.qp = solve_qp(sS);
    const auto idx = subset_members(out.qp.I);
    std::vector<int> jdx;
    for (int k = 0; k < sS.rows(); ++k)
        if (!subset_contains(out.qp.I, k)) jdx.push_back(k);

    const Eigen::MatrixXd sI = principal(sS, idx);
    double value = std::pow(kTwoPi, -static_cast<double>(idx.size()) / 2.0) / std::sqrt(sI.determinant());
    for (Eigen::Index k = 0; k < out.qp.h.size(); ++k) value /= out.qp.h(k);

    if (!jdx.empty()) {
        const Eigen::MatrixXd sJI = block(sS, jdx, idx);
        const Eigen::MatrixXd cond = principal(sS, jdx) - sJI * sI.llt().solve(sJI.transpose());
        Eigen::VectorXd lower(jdx.size());
        for (std::size_t k = 0; k < jdx.size(); ++k)
            lower(k) = std::abs(out.qp.eStar(jdx[k]) - 1.0) <= kUnitTolerance ? 0.0 : -INFINITY;
        const OrthantResult orth = mvn_upper_orthant(cond, lower);
        value *= orth.value;
        out.orthantError = orth.error;
    }
    out.value = value;
    return out;
}

double gaussian_mu(const CorrelationMatrix& sigma, double alpha, int i, const RectSet& rect) {
    const int d = sigma.dim();
    check_cone_order(i, d);
    check_rect(rect, d);
    const int k = subset_size(rect.S);
    if (k < i) throw DomainError("gaussian_mu needs |S| >= i");
    if (i == 1) {
        if (k != 1) return 0.0;
        return std::pow(rect.z(std::countr_zero(rect.S)), -alpha);
    }
    const ConeSpec spec = gaussian_cone_spec(sigma, alpha, 1.0, i);
    if (std::find(spec.argminSets.begin(), spec.argminSets.end(), rect.S) == spec.argminSets.end()) return 0.0;
    const UpsilonTerm ups = gaussian_upsilon(sigma, rect.S);
    if (subset_size(ups.qp.I) != spec.cardI) return 0.0;
    const auto members = subset_members(rect.S);
    double value = ups.value;
    const auto local = subset_members(ups.qp.I);
    for (std::size_t m = 0; m < local.size(); ++m)
        value *= std::pow(rect.z(members[local[m]]), -alpha * ups.qp.h(m));
    return value;
}

double gaussian_tail_asymptotic(const CorrelationMatrix& sigma, double alpha, double theta, const RectSet& rect,
                                double t) {
    const int d = sigma.dim();
    check_rect(rect, d);
    if (!(alpha > 0.0) || !(theta > 0.0)) throw DomainError("alpha and theta must be > 0");
    if (!(t > 1.0)) throw DomainError("tail asymptotic needs 2 alpha log t > 0");
    const double floor = std::pow(theta, 1.0 / alpha);
    for (int s : subset_members(rect.S))
        if (!(t * rect.z(s) > floor)) throw DomainError("tail asymptotic needs t * z_s above the Pareto support start");

    const UpsilonTerm ups = gaussian_upsilon(sigma, rect.S);
    const double gamma = ups.qp.gamma;
    const int cardI = subset_size(ups.qp.I);
    double value = ups.value * std::pow(kTwoPi, gamma / 2.0) * std::pow(theta, gamma) * std::pow(t, -alpha * gamma);
    value *= std::pow(2.0 * alpha * std::log(t), (gamma - cardI) / 2.0);
    const auto members = subset_members(rect.S);
    const auto local = subset_members(ups.qp.I);
    for (std::size_t m = 0; m < local.size(); ++m)
        value *= std::pow(rect.z(members[local[m]]), -alpha * ups.qp.h(m));
    return value;
}

// ---------------------------------------------------------------- Marshall-Olkin cones

namespace {

double mo_weight(MoVariant variant, int d, int j) {
    // exponent weight of the j-th largest threshold, j = 1..i
    const double half = std::ldexp(1.0, -(j - 1));
    if (variant == MoVariant::Equal) return half;
    return (1.0 - static_cast<double>(j - 1) / (d + 1)) * half;
}

void check_named_variant(MoVariant variant) {
    if (variant == MoVariant::General)
        throw DomainError("closed-form cone data exist only for the equal and proportional rate families");
}

} // namespace

ConeSpec mo_cone_spec(MoVariant variant, double alpha, double theta, int d, int i) {
    check_named_variant(variant);
    check_cone_order(i, d);
    if (!(alpha > 0.0) || !(theta > 0.0)) throw DomainError("alpha and theta must be > 0");
    ConeSpec spec;
    spec.i = i;
    if (variant == MoVariant::Equal)
        spec.alpha_i = (2.0 - std::ldexp(1.0, -(i - 1))) * alpha;
    else
        spec.alpha_i = alpha * (2.0 * d - (d - i) * std::ldexp(1.0, -(i - 1))) / (d + 1);
    // b_i(t) = theta^(1/alpha) t^(1/alpha_i)  =>  b_i^<-(x) = theta^(-alpha_i/alpha) x^alpha_i
    spec.binv = PowerLog{std::pow(theta, -spec.alpha_i / alpha), spec.alpha_i, 0.0, 1.0, 0.0};
    const Subset full = full_subset(d);
    for (Subset S = 1; S <= full; ++S)
        if (subset_size(S) == i) spec.argminSets.push_back(S);
    spec.cardI = i;
    return spec;
}

double mo_mu(MoVariant variant, double alpha, int d, int i, const RectSet& rect) {
    check_named_variant(variant);
    check_cone_order(i, d);
    check_rect(rect, d);
    const int k = subset_size(rect.S);
    if (k < i) throw DomainError("mo_mu needs |S| >= i");
    if (k != i) return 0.0;
    std::vector<double> z;
    for (int s : subset_members(rect.S)) z.push_back(rect.z(s));
    std::sort(z.begin(), z.end(), std::greater<double>());
    double value = 1.0;
    for (int j = 1; j <= i; ++j) value *= std::pow(z[j - 1], -alpha * mo_weight(variant, d, j));
    return value;
}

// ---------------------------------------------------------------- asymptotic independence

bool mutual_ai_gaussian(const CorrelationMatrix& sigma) {
    const int d = sigma.dim();
    if (d > kMaxQpDim) throw CapacityError("mutual AI check enumerates all subsets; d exceeds the cap", kMaxQpDim);
    const Subset full = full_subset(d);
    for (Subset S = 1; S <= full; ++S) {
        if (subset_size(S) < 2) continue;
        const Eigen::MatrixXd sS = sigma.sub(S);
        const Eigen::VectorXd w = sS.llt().solve(Eigen::VectorXd::Ones(sS.rows()));
        if ((w.array() <= 0.0).any()) return false;
    }
    return true;
}

bool pairwise_ai_gaussian(const CorrelationMatrix& sigma) {
    for (int i = 0; i < sigma.dim(); ++i)
        for (int j = 0; j < sigma.dim(); ++j)
            if (i != j && !(std::abs(sigma(i, j)) < 1.0)) return false;
    return true;
}

SupportMass gaussian_support_mass(const CorrelationMatrix& sigma, int i, Subset S) {
    check_cone_order(i, sigma.dim());
    if (subset_size(S) != i) throw DomainError("support classification needs |S| = i");
    if (i == 1) return SupportMass::Positive;
    const ConeSpec spec = gaussian_cone_spec(sigma, 1.0, 1.0, i);
    if (std::find(spec.argminSets.begin(), spec.argminSets.end(), S) == spec.argminSets.end()) return SupportMass::Zero;
    const QpSolution qp = solve_qp(sigma.sub(S));
    return subset_size(qp.I) == spec.cardI ? SupportMass::Positive : SupportMass::Zero;
}

namespace {

void check_ai_arguments(int d, Subset S, int ell, const std::vector<double>& uGrid) {
    if ((S & ~full_subset(d)) != 0 || subset_size(S) < 2) throw DomainError("ratio needs a subset with |S| >= 2");
    if (ell < 0 || !subset_contains(S, ell)) throw DomainError("ratio needs ell in S");
    if (uGrid.empty()) throw DomainError("empty u grid");
    for (std::size_t k = 0; k < uGrid.size(); ++k) {
        if (!(uGrid[k] > 0.0 && uGrid[k] < 1.0)) throw DomainError("u grid values must lie in (0, 1)");
        if (k > 0 && !(uGrid[k] < uGrid[k - 1])) throw DomainError("u grid must be strictly decreasing");
    }
}

} // namespace

std::vector<AiRatioRow> empirical_ai_ratio(const RiskModel& model, Subset S, int ell, const std::vector<double>& uGrid,
                                           std::size_t n, std::uint64_t seed, unsigned threads) {
    check_ai_arguments(model.d, S, ell, uGrid);
    const Subset rest = S & ~(Subset(1) << ell);
    std::vector<AiRatioRow> rows;

    if (model.kind != DependenceKind::Gaussian) {
        for (double u : uGrid) {
            Eigen::VectorXd num = Eigen::VectorXd::Ones(model.d), den = Eigen::VectorXd::Ones(model.d);
            for (int j : subset_members(S)) num(j) = u;
            for (int j : subset_members(rest)) den(j) = u;
            AiRatioRow row;
            row.u = u;
            row.ratio = survival_copula(model, num) / survival_copula(model, den);
            row.exact = true;
            rows.push_back(row);
        }
        return rows;
    }

    if (n < 1) throw DomainError("sample size must be >= 1");
    const ModelSampler sampler(model, seed);
    const std::size_t g = uGrid.size();
    std::vector<double> q(g);
    for (std::size_t k = 0; k < g; ++k) q[k] = model.margin.quantile(uGrid[k]);

    constexpr std::size_t kChunk = 1 << 15;
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<std::vector<std::size_t>> numCounts(chunks, std::vector<std::size_t>(g, 0));
    std::vector<std::vector<std::size_t>> denCounts(chunks, std::vector<std::size_t>(g, 0));
    const auto restMembers = subset_members(rest);
    parallel_for(chunks, threads, [&](std::size_t c) {
        std::vector<double> z(model.d);
        const std::size_t end = std::min(n, (c + 1) * kChunk);
        for (std::size_t r = c * kChunk; r < end; ++r) {
            sampler.draw(r, z.data());
            double m = INFINITY;
            for (int j : restMembers) m = std::min(m, z[j]);
            for (std::size_t k = 0; k < g; ++k) {
                if (!(m > q[k])) break; // grid decreasing in u means thresholds increasing
                ++denCounts[c][k];
                if (z[ell] > q[k]) ++numCounts[c][k];
            }
        }
    });
    for (std::size_t k = 0; k < g; ++k) {
        std::size_t num = 0, den = 0;
        for (std::size_t c = 0; c < chunks; ++c) {
            num += numCounts[c][k];
            den += denCounts[c][k];
        }
        AiRatioRow row;
        row.u = uGrid[k];
        row.hits = num;
        if (den == 0) {
            row.ratio = NAN;
            row.se = NAN;
            row.reliable = false;
        } else {
            const double r = static_cast<double>(num) / static_cast<double>(den);
            row.ratio = r;
            row.se = std::sqrt(r * (1.0 - r) / static_cast<double>(den));
            row.reliable = num >= kMinTailHits;
        }
        rows.push_back(row);
    }
    return rows;
}

std::vector<AiRatioRow> empirical_ai_ratio_mixture(Subset S, int ell, const std::vector<double>& uGrid, std::size_t n,
                                                   std::uint64_t seed) {
    check_ai_arguments(3, S, ell, uGrid);
    const Subset rest = S & ~(Subset(1) << ell);
    std::vector<AiRatioRow> rows;
    for (double u : uGrid) {
        AiRatioRow row;
        row.u = u;
        if (subset_size(rest) >= 2) {
            const CornerEstimate est = mixture_corner_estimate(S, u, n, seed, rest);
            row.hits = est.hits;
            if (est.hitsReference == 0) {
                row.ratio = NAN;
                row.se = NAN;
                row.reliable = false;
            } else {
                const double r = static_cast<double>(est.hits) / static_cast<double>(est.hitsReference);
                row.ratio = r;
                row.se = std::sqrt(r * (1.0 - r) / static_cast<double>(est.hitsReference));
                row.reliable = est.hits >= kMinTailHits;
            }
        } else {
            // the reference event is a single coordinate, whose probability is u exactly
            const CornerEstimate est = mixture_corner_estimate(S, u, n, seed);
            row.hits = est.hits;
            row.ratio = est.value / u;
            row.se = est.se / u;
            row.reliable = est.hits >= kMinTailHits;
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace tailnet
