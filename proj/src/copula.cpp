#include "tailnet/copula.hpp"

#include "tailnet/errors.hpp"
#include "tailnet/parallel.hpp"
#include "tailnet/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace tailnet {

Subset make_subset(std::initializer_list<int> indices) {
    return make_subset(std::vector<int>(indices));
}

Subset make_subset(const std::vector<int>& indices) {
    Subset s = 0;
    for (int j : indices) {
        if (j < 0 || j >= 32) throw DomainError("subset index out of range");
        s |= Subset(1) << j;
    }
    return s;
}

std::vector<int> subset_members(Subset s) {
    std::vector<int> out;
    for (int j = 0; s != 0; ++j, s >>= 1)
        if (s & 1u) out.push_back(j);
    return out;
}

int subset_size(Subset s) { return std::popcount(s); }

// ---------------------------------------------------------------- margins

ParetoMargin::ParetoMargin(double a, double t) : alpha(a), theta(t) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ModelError("margin.alpha must be > 0");
    if (!(theta > 0.0) || !std::isfinite(theta)) throw ModelError("margin.theta must be > 0");
}

double ParetoMargin::lower() const { return std::pow(theta, 1.0 / alpha); }

double ParetoMargin::survival(double t) const {
    if (t <= lower()) return 1.0;
    return theta * std::pow(t, -alpha);
}

double ParetoMargin::quantile(double u) const {
    if (!(u > 0.0 && u <= 1.0)) throw DomainError("Pareto quantile needs u in (0, 1]");
    return std::pow(theta / u, 1.0 / alpha);
}

// ---------------------------------------------------------------- correlation

CorrelationMatrix::CorrelationMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
    const Eigen::Index d = m_.rows();
    if (d < 1 || m_.cols() != d) throw ModelError("correlation matrix must be square");
    for (Eigen::Index i = 0; i < d; ++i) {
        if (std::abs(m_(i, i) - 1.0) > 1e-12) throw ModelError("correlation matrix needs unit diagonal");
        for (Eigen::Index j = 0; j < d; ++j) {
            if (std::abs(m_(i, j) - m_(j, i)) > 1e-12) throw ModelError("correlation matrix must be symmetric");
            if (i != j && !(std::abs(m_(i, j)) < 1.0))
                throw ModelError("off-diagonal correlations must lie in (-1, 1)");
        }
    }
    m_ = 0.5 * (m_ + m_.transpose());
    m_.diagonal().setOnes();
    Eigen::LLT<Eigen::MatrixXd> llt(m_);
    const double minEig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m_, Eigen::EigenvaluesOnly)
                              .eigenvalues()
                              .minCoeff();
    if (llt.info() != Eigen::Success || !(minEig > 0.0))
        throw ModelError("correlation matrix is not positive definite");
    chol_ = llt.matrixL();
}

CorrelationMatrix CorrelationMatrix::equicorrelation(int d, double rho) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(d, d, rho);
    m.diagonal().setOnes();
    return CorrelationMatrix(m);
}

CorrelationMatrix CorrelationMatrix::identity(int d) {
    return CorrelationMatrix(Eigen::MatrixXd::Identity(d, d));
}

Eigen::MatrixXd CorrelationMatrix::sub(Subset s) const {
    const auto idx = subset_members(s);
    const auto k = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd out(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = 0; b < k; ++b) out(a, b) = m_(idx[a], idx[b]);
    return out;
}

// ---------------------------------------------------------------- MO rates

std::string to_string(MoVariant v) {
    switch (v) {
    case MoVariant::Equal: return "equal";
    case MoVariant::Proportional: return "proportional";
    case MoVariant::General: return "general";
    }
    return "?";
}

MoRateFamily::MoRateFamily(int d, MoVariant v, double lambda, std::vector<double> rates)
    : d_(d), variant_(v), lambda_(lambda), rates_(std::move(rates)) {
    if (d < 1 || d > 30) throw ModelError("Marshall-Olkin dimension must be in 1..30");
    if (!(lambda > 0.0)) throw ModelError("Marshall-Olkin rate must be > 0");
}

MoRateFamily MoRateFamily::equal(int d, double lambda) {
    return MoRateFamily(d, MoVariant::Equal, lambda, {});
}

MoRateFamily MoRateFamily::proportional(int d, double lambda) {
    return MoRateFamily(d, MoVariant::Proportional, lambda, {});
}

MoRateFamily MoRateFamily::general(int d, std::vector<double> rates) {
    if (d < 1 || d > 20) throw CapacityError("general Marshall-Olkin rates limited to d <= 20", 20);
    const std::size_t need = std::size_t(1) << d;
    if (rates.size() != need) throw ModelError("general Marshall-Olkin rates must cover all 2^d - 1 subsets");
    for (std::size_t s = 1; s < need; ++s)
        if (!(rates[s] > 0.0)) throw ModelError("every Marshall-Olkin shock rate must be > 0");
    return MoRateFamily(d, MoVariant::General, 1.0, std::move(rates));
}

double MoRateFamily::rate(Subset s) const {
    if (s == 0 || (s & ~full_subset(d_)) != 0) throw DomainError("shock subset outside 1..2^d-1");
    switch (variant_) {
    case MoVariant::Equal: return lambda_;
    case MoVariant::Proportional: return lambda_ * subset_size(s);
    case MoVariant::General: return rates_[s];
    }
    return 0.0;
}

double MoRateFamily::total_rate(int j) const {
    if (j < 0 || j >= d_) throw DomainError("coordinate out of range");
    switch (variant_) {
    case MoVariant::Equal: return lambda_ * std::ldexp(1.0, d_ - 1);
    case MoVariant::Proportional:
        // sum_k k * C(d-1, k-1) = (d + 1) 2^(d-2)
        return lambda_ * (d_ + 1) * std::ldexp(1.0, d_ - 2);
    case MoVariant::General: {
        double total = 0.0;
        const Subset full = full_subset(d_);
        for (Subset s = 1; s <= full; ++s)
            if (subset_contains(s, j)) total += rates_[s];
        return total;
    }
    }
    return 0.0;
}

double mo_eta(const MoRateFamily& rates, int j, Subset S) {
    if (j < 0 || j >= rates.dim() || !subset_contains(S, j))
        throw DomainError("mo_eta: coordinate is not a member of the subset");
    return rates.rate(S) / rates.total_rate(j);
}

// ---------------------------------------------------------------- models

std::string to_string(DependenceKind k) {
    switch (k) {
    case DependenceKind::Iid: return "iid";
    case DependenceKind::Gaussian: return "gaussian";
    case DependenceKind::MarshallOlkin: return "mo";
    }
    return "?";
}

RiskModel RiskModel::iid(ParetoMargin margin, int d) {
    if (d < 1) throw ModelError("dimension must be >= 1");
    RiskModel m;
    m.margin = margin;
    m.kind = DependenceKind::Iid;
    m.d = d;
    return m;
}

RiskModel RiskModel::gaussian(ParetoMargin margin, CorrelationMatrix sigma) {
    RiskModel m;
    m.margin = margin;
    m.kind = DependenceKind::Gaussian;
    m.d = sigma.dim();
    m.sigma = std::move(sigma);
    return m;
}

RiskModel RiskModel::marshall_olkin(ParetoMargin margin, MoRateFamily rates) {
    RiskModel m;
    m.margin = margin;
    m.kind = DependenceKind::MarshallOlkin;
    m.d = rates.dim();
    m.mo = std::move(rates);
    return m;
}

// ---------------------------------------------------------------- sampling

ModelSampler::ModelSampler(const RiskModel& model, std::uint64_t seed, int maxShockDim)
    : model_(model), seed_(seed) {
    switch (model_.kind) {
    case DependenceKind::Iid:
    case DependenceKind::Gaussian: slots_ = static_cast<std::uint64_t>(model_.d); break;
    case DependenceKind::MarshallOlkin: {
        if (model_.d > maxShockDim)
            throw CapacityError("Marshall-Olkin sampling enumerates 2^d - 1 shocks; d exceeds the cap",
                                static_cast<std::size_t>(maxShockDim));
        const Subset full = full_subset(model_.d);
        slots_ = full;
        shockRates_.assign(std::size_t(full) + 1, 0.0);
        for (Subset s = 1; s <= full; ++s) shockRates_[s] = model_.mo->rate(s);
        totalRates_.resize(model_.d);
        for (int j = 0; j < model_.d; ++j) totalRates_[j] = model_.mo->total_rate(j);
        break;
    }
    }
    if (model_.kind == DependenceKind::Gaussian && !model_.sigma) throw ModelError("Gaussian model without sigma");
}

void ModelSampler::draw(std::uint64_t row, double* z) const {
    CounterRng rng(seed_, Stream::ModelSample, row * slots_);
    const int d = model_.d;
    const double a = model_.margin.alpha;
    const double theta = model_.margin.theta;
    switch (model_.kind) {
    case DependenceKind::Iid:
        for (int j = 0; j < d; ++j) z[j] = std::pow(theta / rng.uniform(), 1.0 / a);
        break;
    case DependenceKind::Gaussian: {
        const Eigen::MatrixXd& L = model_.sigma->cholesky();
        double n[64];
        double* normals = n;
        std::vector<double> heap;
        if (d > 64) {
            heap.resize(d);
            normals = heap.data();
        }
        for (int j = 0; j < d; ++j) normals[j] = rng.normal();
        for (int j = 0; j < d; ++j) {
            double x = 0.0;
            for (int k = 0; k <= j; ++k) x += L(j, k) * normals[k];
            z[j] = std::pow(theta / normal_survival(x), 1.0 / a);
        }
        break;
    }
    case DependenceKind::MarshallOlkin: {
        for (int j = 0; j < d; ++j) z[j] = INFINITY;
        const Subset full = full_subset(d);
        for (Subset s = 1; s <= full; ++s) {
            const double e = rng.exponential(shockRates_[s]);
            for (Subset rest = s; rest != 0; rest &= rest - 1) {
                const int j = std::countr_zero(rest);
                if (e < z[j]) z[j] = e;
            }
        }
        for (int j = 0; j < d; ++j) {
            const double u = std::exp(-totalRates_[j] * z[j]);
            z[j] = std::pow(theta / u, 1.0 / a);
        }
        break;
    }
    }
}

RowMatrix sample(const RiskModel& model, std::size_t n, std::uint64_t seed, unsigned threads, int maxShockDim) {
    if (n < 1) throw DomainError("sample size must be >= 1");
    const ModelSampler sampler(model, seed, maxShockDim);
    RowMatrix out(static_cast<Eigen::Index>(n), model.d);
    constexpr std::size_t kChunk = 1 << 14;
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    parallel_for(chunks, threads, [&](std::size_t c) {
        const std::size_t end = std::min(n, (c + 1) * kChunk);
        for (std::size_t r = c * kChunk; r < end; ++r) sampler.draw(r, out.row(r).data());
    });
    return out;
}

// ---------------------------------------------------------------- survival copula

static void check_unit_vector(const Eigen::VectorXd& u, int d) {
    if (u.size() != d) throw DomainError("survival copula: dimension mismatch");
    for (Eigen::Index j = 0; j < u.size(); ++j)
        if (!(u(j) > 0.0 && u(j) <= 1.0)) throw DomainError("survival copula arguments must lie in (0, 1]");
}

double mo_survival_copula(const MoRateFamily& rates, const Eigen::VectorXd& u) {
    const int d = rates.dim();
    check_unit_vector(u, d);
    if (d > 24) throw CapacityError("closed-form Marshall-Olkin copula enumerates 2^d subsets", 24);
    std::vector<double> logu(d), total(d);
    for (int j = 0; j < d; ++j) {
        logu[j] = std::log(u(j));
        total[j] = rates.total_rate(j);
    }
    // min_j u_j^eta_j = exp(min_j eta_j log u_j)
    double logC = 0.0;
    const Subset full = full_subset(d);
    for (Subset s = 1; s <= full; ++s) {
        const double lam = rates.rate(s);
        double m = 0.0;
        for (Subset rest = s; rest != 0; rest &= rest - 1) {
            const int j = std::countr_zero(rest);
            m = std::min(m, lam / total[j] * logu[j]);
        }
        logC += m;
    }
    return std::exp(logC);
}

OrthantResult gaussian_survival_copula(const CorrelationMatrix& sigma, const Eigen::VectorXd& u) {
    check_unit_vector(u, sigma.dim());
    Eigen::VectorXd lower(u.size());
    for (Eigen::Index j = 0; j < u.size(); ++j)
        lower(j) = u(j) >= 1.0 ? -INFINITY : -normal_quantile(u(j));
    return mvn_upper_orthant(sigma.matrix(), lower);
}

double survival_copula(const RiskModel& model, const Eigen::VectorXd& u) {
    switch (model.kind) {
    case DependenceKind::Iid: {
        check_unit_vector(u, model.d);
        return u.prod();
    }
    case DependenceKind::Gaussian: return gaussian_survival_copula(*model.sigma, u).value;
    case DependenceKind::MarshallOlkin: return mo_survival_copula(*model.mo, u);
    }
    return 0.0;
}

// ---------------------------------------------------------------- mixture

namespace {

void arrange(double u, double v, double pick, double* z) {
    const double m = std::min(u, v);
    if (pick < 1.0 / 3.0) {
        z[0] = u; z[1] = v; z[2] = m;
    } else if (pick < 2.0 / 3.0) {
        z[0] = u; z[1] = m; z[2] = v;
    } else {
        z[0] = m; z[1] = u; z[2] = v;
    }
}

} // namespace

RowMatrix bernstein_mixture_sample(std::size_t n, std::uint64_t seed) {
    if (n < 1) throw DomainError("sample size must be >= 1");
    RowMatrix out(static_cast<Eigen::Index>(n), 3);
    CounterRng rng(seed, Stream::Mixture);
    for (std::size_t r = 0; r < n; ++r) {
        rng.seek(3 * r);
        const double u = rng.uniform();
        const double v = rng.uniform();
        const double pick = rng.uniform();
        arrange(u, v, pick, out.row(r).data());
    }
    return out;
}

double mixture_cdf(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return 4.0 * x / 3.0 - x * x / 3.0;
}

double mixture_threshold(double u) {
    if (!(u > 0.0 && u <= 1.0)) throw DomainError("mixture threshold needs u in (0, 1]");
    return 2.0 - std::sqrt(1.0 + 3.0 * u);
}

double mixture_pair_survival(double u) {
    if (!(u > 0.0 && u <= 1.0)) throw DomainError("mixture survival needs u in (0, 1]");
    const double r = std::sqrt(1.0 + 3.0 * u) - 1.0;
    return r * r;
}

CornerEstimate mixture_corner_estimate(Subset S, double u, std::size_t n, std::uint64_t seed, Subset reference) {
    if ((S & ~full_subset(3)) != 0 || subset_size(S) < 2)
        throw DomainError("corner estimate needs a subset of {1,2,3} with at least two members");
    if (reference != 0 && ((reference & ~full_subset(3)) != 0 || subset_size(reference) < 2))
        throw DomainError("corner reference subset needs at least two members");
    if (n < 1) throw DomainError("sample size must be >= 1");
    const double c = mixture_threshold(u);
    const double delta = std::min(1.0, 2.0 * (1.0 - c));
    CounterRng rng(seed, Stream::Mixture);
    CornerEstimate est;
    est.draws = n;
    double z[3];
    for (std::size_t r = 0; r < n; ++r) {
        rng.seek(3 * r);
        const double uu = 1.0 - delta * rng.uniform();
        const double vv = 1.0 - delta * rng.uniform();
        arrange(uu, vv, rng.uniform(), z);
        bool hit = true, hitRef = reference != 0;
        for (int j = 0; j < 3; ++j) {
            if (subset_contains(S, j) && !(z[j] > c)) hit = false;
            if (subset_contains(reference, j) && !(z[j] > c)) hitRef = false;
        }
        est.hits += hit;
        est.hitsReference += hitRef;
    }
    const double p = static_cast<double>(est.hits) / static_cast<double>(n);
    est.value = delta * delta * p;
    est.se = delta * delta * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    return est;
}

} // namespace tailnet
