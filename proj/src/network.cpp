#include "tailnet/network.hpp"

#include "tailnet/errors.hpp"
#include "tailnet/mrv.hpp"
#include "tailnet/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

namespace tailnet {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr double kRhoTie = 1e-12;

double pos_pow(double a, double p) { return a > 0.0 ? std::pow(a, p) : 0.0; }

void check_model_dim(const PairMoments& m, const RiskModel& model) {
    if (m.d() != model.d) throw ModelError("network has a different number of objects than the model");
}

// Weight of the larger threshold in the bivariate Marshall-Olkin second-cone limit.
double mo_max_weight(MoVariant v, int d) {
    if (v == MoVariant::Equal) return 0.5;
    if (v == MoVariant::Proportional) return static_cast<double>(d) / (2.0 * (d + 1));
    throw DomainError("closed forms need the equal or proportional rate family");
}

} // namespace

// ---------------------------------------------------------------- weights and networks

WeightSpec WeightSpec::point(double value) {
    if (!(value > 0.0) || !std::isfinite(value)) throw ModelError("point weight must be positive and finite");
    return WeightSpec{Kind::Point, value, value};
}

WeightSpec WeightSpec::uniform(double lo, double hi) {
    if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi)) throw ModelError("uniform weights need 0 < lo <= hi < inf");
    return WeightSpec{Kind::Uniform, lo, hi};
}

double WeightSpec::moment(double p) const {
    if (kind == Kind::Point || hi == lo) return std::pow(lo, p);
    if (p == -1.0) return std::log(hi / lo) / (hi - lo);
    return (std::pow(hi, p + 1.0) - std::pow(lo, p + 1.0)) / ((p + 1.0) * (hi - lo));
}

BipartiteNetwork::BipartiteNetwork(Eigen::MatrixXd edgeProb, WeightSpec weights)
    : p_(std::move(edgeProb)), w_(weights) {
    if (p_.rows() < 1 || p_.cols() < 1) throw ModelError("network needs q >= 1 and d >= 1");
    if ((p_.array() < 0.0).any() || (p_.array() > 1.0).any() || !p_.allFinite())
        throw ModelError("edge probabilities must lie in [0, 1]");
    for (Eigen::Index k = 0; k < p_.rows(); ++k)
        if (p_.row(k).maxCoeff() <= 0.0) throw ModelError("agent " + std::to_string(k + 1) + " has no possible edge");
    if (!(w_.lo > 0.0) || !(w_.hi >= w_.lo)) throw ModelError("weights must be bounded away from zero");
}

Eigen::MatrixXd sample_adjacency(const BipartiteNetwork& net, std::uint64_t seed, std::uint64_t index) {
    CounterRng rng(mix64(seed ^ mix64((index + 1) * kGolden)), Stream::Adjacency);
    const auto& p = net.edge_prob();
    const auto& w = net.weights();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(net.q(), net.d());
    for (int k = 0; k < net.q(); ++k) {
        bool nonzero = false;
        while (!nonzero) {
            for (int j = 0; j < net.d(); ++j) {
                const double u = rng.uniform();
                const double v = rng.uniform();
                if (u < p(k, j)) {
                    a(k, j) = w.kind == WeightSpec::Kind::Point ? w.lo : w.lo + (w.hi - w.lo) * v;
                    nonzero = true;
                } else {
                    a(k, j) = 0.0;
                }
            }
        }
    }
    return a;
}

AdjacencyLaw AdjacencyLaw::deterministic(Eigen::MatrixXd a) {
    if (a.rows() < 1 || a.cols() < 1) throw ModelError("adjacency matrix must be nonempty");
    if ((a.array() < 0.0).any() || !a.allFinite()) throw ModelError("adjacency entries must be finite and >= 0");
    for (Eigen::Index k = 0; k < a.rows(); ++k)
        if (a.row(k).maxCoeff() <= 0.0) throw ModelError("adjacency row " + std::to_string(k + 1) + " is zero");
    AdjacencyLaw law;
    law.fixed_ = std::move(a);
    return law;
}

AdjacencyLaw AdjacencyLaw::random(BipartiteNetwork net) {
    AdjacencyLaw law;
    law.net_ = std::move(net);
    return law;
}

int AdjacencyLaw::q() const { return fixed_ ? static_cast<int>(fixed_->rows()) : net_->q(); }
int AdjacencyLaw::d() const { return fixed_ ? static_cast<int>(fixed_->cols()) : net_->d(); }

Eigen::MatrixXd AdjacencyLaw::support() const {
    const Eigen::MatrixXd& m = fixed_ ? *fixed_ : net_->edge_prob();
    return (m.array() > 0.0).cast<double>();
}

Eigen::MatrixXd AdjacencyLaw::draw(std::uint64_t seed, std::uint64_t index) const {
    if (fixed_) return *fixed_;
    return sample_adjacency(*net_, seed, index);
}

int cover_index(const Eigen::MatrixXd& a, int k) {
    const int q = static_cast<int>(a.rows());
    const int d = static_cast<int>(a.cols());
    if (k < 1 || k > q) throw DomainError("cover_index needs 1 <= k <= q");
    if (d > kMaxQpDim) throw CapacityError("cover_index enumerates column subsets; d exceeds the cap", kMaxQpDim);
    std::vector<std::uint64_t> rows(d, 0);
    for (int j = 0; j < d; ++j)
        for (int r = 0; r < q; ++r)
            if (a(r, j) > 0.0) rows[j] |= std::uint64_t(1) << r;
    int best = d + 1;
    for (Subset cols = 1; cols <= full_subset(d); ++cols) {
        const int size = subset_size(cols);
        if (size >= best) continue;
        std::uint64_t covered = 0;
        for (int j : subset_members(cols)) covered |= rows[j];
        if (std::popcount(covered) >= k) best = size;
    }
    if (best > d) throw DomainError("no set of columns reaches k rows (the matrix has zero rows)");
    return best;
}

// ---------------------------------------------------------------- row selection

Eigen::RowVectorXd RowSpec::apply(const Eigen::MatrixXd& a) const {
    Eigen::RowVectorXd out = a.row(agents.front());
    for (std::size_t k = 1; k < agents.size(); ++k) {
        if (op == Op::Sum)
            out += a.row(agents[k]);
        else
            out = out.cwiseMax(a.row(agents[k]));
    }
    return out;
}

double RowSpec::value(const Eigen::VectorXd& x) const {
    double out = x(agents.front());
    for (std::size_t k = 1; k < agents.size(); ++k) out = op == Op::Sum ? out + x(agents[k]) : std::max(out, x(agents[k]));
    return out;
}

PairSelector PairSelector::pair(int k, int m) {
    if (k == m) throw DomainError("pair selector needs two distinct agents");
    return {RowSpec{RowSpec::Op::Sum, {k}}, RowSpec{RowSpec::Op::Sum, {m}}};
}

PairSelector PairSelector::aggregate(std::vector<int> S, std::vector<int> T) {
    if (S.empty() || T.empty()) throw DomainError("aggregate needs nonempty agent sets");
    return {RowSpec{RowSpec::Op::Sum, std::move(S)}, RowSpec{RowSpec::Op::Sum, std::move(T)}};
}

PairSelector PairSelector::one_vs_max(int k, int q) {
    if (q < 2) throw DomainError("one-vs-max needs at least two agents");
    if (k < 0 || k >= q) throw DomainError("agent index out of range");
    std::vector<int> others;
    for (int m = 0; m < q; ++m)
        if (m != k) others.push_back(m);
    return {RowSpec{RowSpec::Op::Sum, {k}}, RowSpec{RowSpec::Op::Max, others}};
}

Eigen::MatrixXd PairSelector::apply(const Eigen::MatrixXd& a) const {
    Eigen::MatrixXd out(2, a.cols());
    out.row(0) = first.apply(a);
    out.row(1) = second.apply(a);
    return out;
}

YPair PairSelector::value(const Eigen::VectorXd& x) const { return {first.value(x), second.value(x)}; }

void PairSelector::validate(int q) const {
    for (const RowSpec* r : {&first, &second}) {
        if (r->agents.empty()) throw DomainError("selector rows need at least one agent");
        for (int k : r->agents)
            if (k < 0 || k >= q) throw DomainError("selector agent index out of range");
    }
}

Eigen::MatrixXd aggregate(const Eigen::MatrixXd& a, const std::vector<int>& S, const std::vector<int>& T) {
    const PairSelector sel = PairSelector::aggregate(S, T);
    sel.validate(static_cast<int>(a.rows()));
    return sel.apply(a);
}

// ---------------------------------------------------------------- moments

PairMoments::PairMoments(const AdjacencyLaw& law, const PairSelector& selector, std::size_t draws, std::uint64_t seed)
    : d_(law.d()) {
    selector.validate(law.q());
    support_ = (selector.apply(law.support()).array() > 0.0).cast<double>();
    if (law.is_deterministic()) {
        draws_.push_back(selector.apply(*law.fixed()));
        return;
    }
    if (draws < 2) throw DomainError("random networks need at least two moment draws");
    const std::uint64_t key = mix64(seed ^ static_cast<std::uint64_t>(Stream::NetworkMoments) * kGolden);
    draws_.reserve(draws);
    for (std::size_t i = 0; i < draws; ++i) draws_.push_back(selector.apply(law.draw(key, i)));
}

PairMoments PairMoments::swapped() const {
    PairMoments out;
    out.d_ = d_;
    out.support_ = support_.colwise().reverse();
    out.draws_.reserve(draws_.size());
    for (const auto& m : draws_) out.draws_.push_back(m.colwise().reverse());
    return out;
}

Estimate PairMoments::expect(const std::function<double(const Eigen::MatrixXd&)>& f) const {
    if (draws_.size() == 1) return {f(draws_.front()), 0.0};
    // Kahan-compensated sums in draw order keep the result independent of everything but the draws.
    double sum = 0.0, comp = 0.0, sumSq = 0.0, compSq = 0.0;
    for (const auto& m : draws_) {
        const double v = f(m);
        double y = v - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        y = v * v - compSq;
        t = sumSq + y;
        compSq = (t - sumSq) - y;
        sumSq = t;
    }
    const double n = static_cast<double>(draws_.size());
    const double mean = sum / n;
    const double var = std::max(0.0, (sumSq - n * mean * mean) / (n - 1.0));
    return {mean, std::sqrt(var / n)};
}

Estimate PairMoments::row_moment(int r, double p) const {
    return expect([r, p](const Eigen::MatrixXd& a) {
        double s = 0.0;
        for (Eigen::Index l = 0; l < a.cols(); ++l) s += pos_pow(a(r, l), p);
        return s;
    });
}

Estimate PairMoments::cross_moment(double p, double s) const {
    return expect([p, s](const Eigen::MatrixXd& a) {
        double s0 = 0.0, s1 = 0.0;
        for (Eigen::Index l = 0; l < a.cols(); ++l) {
            s0 += pos_pow(a(0, l), p);
            s1 += pos_pow(a(1, l), s);
        }
        return s0 * s1;
    });
}

// ---------------------------------------------------------------- overlap and dispatch

OverlapProfile overlap_profile(const Eigen::MatrixXd& support, const RiskModel& model) {
    if (support.rows() != 2) throw DomainError("overlap profile needs the two derived rows");
    const int d = static_cast<int>(support.cols());
    if (d != model.d) throw ModelError("network has a different number of objects than the model");
    OverlapProfile p;
    for (int l = 0; l < d; ++l) {
        if (support(0, l) > 0.0 && support(1, l) > 0.0) p.overlap = true;
        if (support(0, l) > 0.0 || support(1, l) > 0.0) p.activeColumns.push_back(l);
    }
    if (model.kind == DependenceKind::Gaussian) {
        const auto& s = *model.sigma;
        for (int l = 0; l < d; ++l) {
            for (int j = 0; j < d; ++j) {
                if (l == j) continue;
                const double r = s(l, j);
                if (!p.rhoVee || r > *p.rhoVee) p.rhoVee = r;
                const bool active = (support(0, l) > 0.0 || support(1, l) > 0.0) &&
                                    (support(0, j) > 0.0 || support(1, j) > 0.0);
                if (active && (!p.rhoVeeActive || r > *p.rhoVeeActive)) p.rhoVeeActive = r;
                if (support(0, l) > 0.0 && support(1, j) > 0.0 && (!p.rhoStar || r > *p.rhoStar)) p.rhoStar = r;
            }
        }
    }
    return p;
}

std::string to_string(NetworkCase c) {
    switch (c) {
    case NetworkCase::Overlap: return "overlap";
    case NetworkCase::DisjointIid: return "disjoint-iid";
    case NetworkCase::DisjointMoEqual: return "disjoint-mo-equal";
    case NetworkCase::DisjointMoProportional: return "disjoint-mo-proportional";
    case NetworkCase::DisjointGaussian: return "disjoint-gaussian";
    }
    return "unknown";
}

NetworkCase resolve_case(const OverlapProfile& profile, const RiskModel& model) {
    if (profile.overlap) return NetworkCase::Overlap;
    switch (model.kind) {
    case DependenceKind::Iid: return NetworkCase::DisjointIid;
    case DependenceKind::MarshallOlkin:
        if (model.mo->variant() == MoVariant::Equal) return NetworkCase::DisjointMoEqual;
        if (model.mo->variant() == MoVariant::Proportional) return NetworkCase::DisjointMoProportional;
        throw DispatchError("disjoint portfolios are covered only for the equal and proportional rate families");
    case DependenceKind::Gaussian:
        if (!profile.rhoStar) throw ModelError("no admissible object pair defines rho*");
        return NetworkCase::DisjointGaussian;
    }
    throw DispatchError("unknown dependence family");
}

namespace {

void expect_case(NetworkCase c, const PairMoments& m, const RiskModel& model) {
    check_model_dim(m, model);
    const NetworkCase actual = resolve_case(overlap_profile(m.support(), model), model);
    if (actual != c)
        throw DispatchError("requested case " + to_string(c) + " but the network resolves to " + to_string(actual));
}

double rho_star(const PairMoments& m, const RiskModel& model) {
    return *overlap_profile(m.support(), model).rhoStar;
}

} // namespace

// ---------------------------------------------------------------- limit measures

Estimate mu_bar_1(const PairMoments& m, const RiskModel& model, const Eigen::Vector2d& x) {
    check_model_dim(m, model);
    if (!(x.array() > 0.0).all()) throw DomainError("thresholds must be positive");
    const double alpha = model.margin.alpha;
    return m.expect([&](const Eigen::MatrixXd& a) {
        double s = 0.0;
        for (Eigen::Index l = 0; l < a.cols(); ++l) s += pos_pow(std::max(a(0, l) / x(0), a(1, l) / x(1)), alpha);
        return s;
    });
}

Estimate mu_bar_2_overlap(const PairMoments& m, const RiskModel& model, const Eigen::Vector2d& x) {
    check_model_dim(m, model);
    if (!(x.array() > 0.0).all()) throw DomainError("thresholds must be positive");
    if (!overlap_profile(m.support(), model).overlap)
        throw DispatchError("the rows share no object, so this measure vanishes; use the disjoint-case operations");
    const double alpha = model.margin.alpha;
    return m.expect([&](const Eigen::MatrixXd& a) {
        double s = 0.0;
        for (Eigen::Index l = 0; l < a.cols(); ++l) s += pos_pow(std::min(a(0, l) / x(0), a(1, l) / x(1)), alpha);
        return s;
    });
}

double gaussian_c(double rho, double alpha) {
    return std::pow(2.0 * std::numbers::pi, -1.0 / (1.0 + rho)) * std::pow(2.0 * alpha, rho / (1.0 + rho));
}

Estimate gaussian_d(const PairMoments& m, const CorrelationMatrix& sigma, double rho, double alpha) {
    const int d = sigma.dim();
    if (m.d() != d) throw ModelError("network has a different number of objects than the model");
    std::vector<std::pair<int, int>> pairs;
    for (int l = 0; l < d; ++l)
        for (int j = 0; j < d; ++j)
            if (l != j && std::abs(sigma(l, j) - rho) <= kRhoTie) pairs.emplace_back(l, j);
    const double p = alpha / (1.0 + rho);
    const double front = std::pow(1.0 + rho, 1.5) / (2.0 * std::numbers::pi * std::sqrt(1.0 - rho));
    Estimate e = m.expect([&](const Eigen::MatrixXd& a) {
        double s = 0.0;
        for (const auto& [l, j] : pairs) s += pos_pow(a(0, l), p) * pos_pow(a(1, j), p);
        return s;
    });
    return {front * e.value, front * e.se};
}

Estimate disjoint_mu_bar_2(const PairMoments& m, const RiskModel& model, const Eigen::Vector2d& x) {
    check_model_dim(m, model);
    if (!(x.array() > 0.0).all()) throw DomainError("thresholds must be positive");
    const OverlapProfile profile = overlap_profile(m.support(), model);
    if (profile.overlap) throw DispatchError("the rows share an object; use the overlap-case operations");
    const double alpha = model.margin.alpha;
    switch (resolve_case(profile, model)) {
    case NetworkCase::DisjointIid: {
        const Estimate c = m.cross_moment(alpha, alpha);
        const double f = std::pow(x(0) * x(1), -alpha);
        return {f * c.value, f * c.se};
    }
    case NetworkCase::DisjointMoEqual:
    case NetworkCase::DisjointMoProportional: {
        const double w = mo_max_weight(model.mo->variant(), model.d);
        return m.expect([&](const Eigen::MatrixXd& a) {
            double s = 0.0;
            for (Eigen::Index l = 0; l < a.cols(); ++l) {
                if (a(0, l) <= 0.0) continue;
                for (Eigen::Index j = 0; j < a.cols(); ++j) {
                    if (a(1, j) <= 0.0) continue;
                    const double u = a(0, l) / x(0), v = a(1, j) / x(1);
                    s += std::pow(std::min(u, v), alpha) * std::pow(std::max(u, v), alpha * w);
                }
            }
            return s;
        });
    }
    case NetworkCase::DisjointGaussian: {
        const double rho = *profile.rhoStar;
        const Estimate dd = gaussian_d(m, *model.sigma, rho, alpha);
        const double f = std::pow(x(0) * x(1), -alpha / (1.0 + rho));
        return {f * dd.value, f * dd.se};
    }
    case NetworkCase::Overlap: break;
    }
    throw DispatchError("unreachable network case");
}

Estimate gaussian_full_mu_bar_2(const PairMoments& m, const RiskModel& model, const Eigen::Vector2d& x) {
    check_model_dim(m, model);
    if (model.kind != DependenceKind::Gaussian) throw DispatchError("this limit is defined for Gaussian models");
    if (!(x.array() > 0.0).all()) throw DomainError("thresholds must be positive");
    const OverlapProfile profile = overlap_profile(m.support(), model);
    if (profile.overlap) throw DispatchError("the rows share an object; use the overlap-case operations");
    const auto& sigma = *model.sigma;
    const double alpha = model.margin.alpha;
    const ConeSpec spec = gaussian_cone_spec(sigma, alpha, 1.0, 2);

    struct Term {
        int l, j;
        double coef, hl, hj;
    };
    std::vector<Term> terms;
    const auto& sup = m.support();
    for (int l = 0; l < model.d; ++l) {
        for (int j = 0; j < model.d; ++j) {
            if (l == j || sup(0, l) <= 0.0 || sup(1, j) <= 0.0) continue;
            const Subset S = make_subset({l, j});
            if (std::find(spec.argminSets.begin(), spec.argminSets.end(), S) == spec.argminSets.end()) continue;
            const UpsilonTerm ups = gaussian_upsilon(sigma, S);
            if (subset_size(ups.qp.I) != spec.cardI || subset_size(ups.qp.I) != 2) continue;
            // local order of S is increasing index
            const double hLow = ups.qp.h(0), hHigh = ups.qp.h(1);
            const double hl = l < j ? hLow : hHigh;
            const double hj = l < j ? hHigh : hLow;
            terms.push_back({l, j, ups.value * std::pow(x(0), -alpha * hl) * std::pow(x(1), -alpha * hj), hl, hj});
        }
    }
    if (terms.empty()) return {0.0, 0.0};
    return m.expect([&](const Eigen::MatrixXd& a) {
        double s = 0.0;
        for (const auto& t : terms) s += t.coef * pos_pow(a(0, t.l), alpha * t.hl) * pos_pow(a(1, t.j), alpha * t.hj);
        return s;
    });
}

// ---------------------------------------------------------------- tail asymptotics

PowerLog network_binv2(NetworkCase c, const RiskModel& model, const OverlapProfile& profile) {
    const double alpha = model.margin.alpha, theta = model.margin.theta;
    switch (c) {
    case NetworkCase::Overlap: return PowerLog{1.0 / theta, alpha, 0.0, 1.0, 0.0};
    case NetworkCase::DisjointIid: return PowerLog{std::pow(theta, -2.0), 2.0 * alpha, 0.0, 1.0, 0.0};
    case NetworkCase::DisjointMoEqual:
    case NetworkCase::DisjointMoProportional: {
        const double a2 = alpha * (1.0 + mo_max_weight(model.mo->variant(), model.d));
        return PowerLog{std::pow(theta, -a2 / alpha), a2, 0.0, 1.0, 0.0};
    }
    case NetworkCase::DisjointGaussian: {
        const double rho = *profile.rhoStar;
        return PowerLog{gaussian_c(rho, alpha) * std::pow(theta, -2.0 / (1.0 + rho)), 2.0 * alpha / (1.0 + rho),
                        rho / (1.0 + rho), 0.0, 1.0};
    }
    }
    throw DispatchError("unknown network case");
}

double network_joint_tail(NetworkCase c, const PairMoments& m, const RiskModel& model, const Eigen::Vector2d& x,
                          double t) {
    expect_case(c, m, model);
    if (!(t > 1.0)) throw DomainError("t must exceed 1");
    const OverlapProfile profile = overlap_profile(m.support(), model);
    const double mu = c == NetworkCase::Overlap ? mu_bar_2_overlap(m, model, x).value : disjoint_mu_bar_2(m, model, x).value;
    return mu / network_binv2(c, model, profile)(t);
}

double network_cond_prob(NetworkCase c, const PairMoments& m, const RiskModel& model, const Eigen::Vector2d& x,
                         double t) {
    expect_case(c, m, model);
    if (!(t > 1.0)) throw DomainError("t must exceed 1");
    const double alpha = model.margin.alpha, theta = model.margin.theta;
    const double s2 = m.row_moment(1, alpha).value;
    switch (c) {
    case NetworkCase::Overlap: return std::pow(x(1), alpha) * mu_bar_2_overlap(m, model, x).value / s2;
    case NetworkCase::DisjointIid: {
        const double b1inv = std::pow(t, alpha) / theta;
        return std::pow(x(0), -alpha) * m.cross_moment(alpha, alpha).value / (b1inv * s2);
    }
    case NetworkCase::DisjointMoEqual:
    case NetworkCase::DisjointMoProportional: {
        const double w = mo_max_weight(model.mo->variant(), model.d);
        return std::pow(theta * std::pow(t, -alpha), w) * std::pow(x(1), alpha) * disjoint_mu_bar_2(m, model, x).value /
               s2;
    }
    case NetworkCase::DisjointGaussian: {
        const double rho = rho_star(m, model);
        const double dd = gaussian_d(m, *model.sigma, rho, alpha).value;
        return std::pow(theta * std::pow(t, -alpha), (1.0 - rho) / (1.0 + rho)) *
               std::pow(std::log(t), -rho / (1.0 + rho)) * std::pow(x(0), -alpha / (1.0 + rho)) *
               std::pow(x(1), alpha * rho / (1.0 + rho)) * dd / (gaussian_c(rho, alpha) * s2);
    }
    }
    throw DispatchError("unknown network case");
}

GSpec network_level(NetworkCase c, const RiskModel& model, const OverlapProfile& profile) {
    switch (c) {
    case NetworkCase::Overlap: return GSpec{0.0, 0.0, 1.0};
    case NetworkCase::DisjointIid: return GSpec{1.0, 0.0, 1.0};
    case NetworkCase::DisjointMoEqual:
    case NetworkCase::DisjointMoProportional: return GSpec{mo_max_weight(model.mo->variant(), model.d), 0.0, 1.0};
    case NetworkCase::DisjointGaussian: {
        const double rho = *profile.rhoStar;
        return GSpec{(1.0 - rho) / (1.0 + rho), -rho / (1.0 + rho), 1.0 / model.margin.alpha};
    }
    }
    throw DispatchError("unknown network case");
}

NetworkCovar network_covar(NetworkCase c, const PairMoments& m, const RiskModel& model, double upsilon, double gamma) {
    expect_case(c, m, model);
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in (0, 1)");
    if (!(upsilon > 0.0)) throw DomainError("upsilon must be > 0");
    const double alpha = model.margin.alpha, theta = model.margin.theta;
    const OverlapProfile profile = overlap_profile(m.support(), model);
    const double s1 = m.row_moment(0, alpha).value;
    const double s2 = m.row_moment(1, alpha).value;

    NetworkCovar out;
    out.level = upsilon * network_level(c, model, profile)(gamma);
    out.var2 = std::pow(theta * s2 / gamma, 1.0 / alpha);
    switch (c) {
    case NetworkCase::Overlap:
        out.value = std::pow(upsilon, -1.0 / alpha) * std::pow(s1 / s2, 1.0 / alpha) * out.var2;
        break;
    case NetworkCase::DisjointIid:
        out.value = std::pow(upsilon, -1.0 / alpha) *
                    std::pow(m.cross_moment(alpha, alpha).value / (s2 * s2), 1.0 / alpha) * out.var2;
        break;
    case NetworkCase::DisjointMoEqual:
    case NetworkCase::DisjointMoProportional: {
        const double w = mo_max_weight(model.mo->variant(), model.d);
        const double e = 1.0 + w; // exponent of the VaR normalisation
        const double low = std::pow(upsilon, -1.0 / alpha) * std::pow(m.cross_moment(alpha, alpha * w).value, 1.0 / alpha) /
                           std::pow(s2, e / alpha);
        const double high = std::pow(upsilon, -1.0 / (w * alpha)) *
                            std::pow(m.cross_moment(alpha * w, alpha).value, 1.0 / (w * alpha)) /
                            std::pow(s2, e / (w * alpha));
        out.lowBranch = low * out.var2;
        out.highBranch = high * out.var2;
        out.twoBranches = true;
        out.value = upsilon <= 1.0 ? out.lowBranch : out.highBranch;
        return out;
    }
    case NetworkCase::DisjointGaussian: {
        const double rho = *profile.rhoStar;
        const double dd = gaussian_d(m, *model.sigma, rho, alpha).value;
        out.value = std::pow(upsilon, -(1.0 + rho) / alpha) * std::pow(dd / gaussian_c(rho, alpha), (1.0 + rho) / alpha) /
                    std::pow(s2, 2.0 / alpha) * out.var2;
        break;
    }
    }
    out.lowBranch = out.highBranch = out.value;
    return out;
}

EciReport network_eci(NetworkCase c, const RiskModel& model, const OverlapProfile& profile) {
    const double alpha = model.margin.alpha;
    EciReport r;
    r.alpha1 = alpha;
    switch (c) {
    case NetworkCase::Overlap:
        r.alpha2 = alpha;
        r.eci = INFINITY;
        r.beta = 0.0;
        return r;
    case NetworkCase::DisjointIid:
        r.alpha2 = 2.0 * alpha;
        r.eci = 1.0;
        break;
    case NetworkCase::DisjointMoEqual:
        r.alpha2 = 1.5 * alpha;
        r.eci = 2.0;
        break;
    case NetworkCase::DisjointMoProportional:
        r.alpha2 = alpha * (3.0 * model.d + 2.0) / (2.0 * (model.d + 1.0));
        r.eci = 2.0 + 2.0 / model.d;
        break;
    case NetworkCase::DisjointGaussian: {
        if (!profile.rhoStar) throw ModelError("no admissible object pair defines rho*");
        const double rho = *profile.rhoStar;
        r.alpha2 = 2.0 * alpha / (1.0 + rho);
        r.eci = (1.0 + rho) / (1.0 - rho);
        break;
    }
    }
    r.beta = 1.0 / r.eci;
    return r;
}

OneVsMaxReport one_vs_max(const AdjacencyLaw& law, const RiskModel& model, int k, const Eigen::Vector2d& x, double t,
                          double upsilon, double gamma, std::size_t draws, std::uint64_t seed) {
    const PairMoments m(law, PairSelector::one_vs_max(k, law.q()), draws, seed);
    const PairMoments back = m.swapped();
    const OverlapProfile profile = overlap_profile(m.support(), model);
    OneVsMaxReport r;
    r.networkCase = resolve_case(profile, model);
    r.mu1 = mu_bar_1(m, model, x).value;
    r.mu2 = r.networkCase == NetworkCase::Overlap ? mu_bar_2_overlap(m, model, x).value
                                                  : disjoint_mu_bar_2(m, model, x).value;
    r.condProb12 = network_cond_prob(r.networkCase, m, model, x, t);
    r.condProb21 = network_cond_prob(r.networkCase, back, model, Eigen::Vector2d(x(1), x(0)), t);
    r.covar12 = network_covar(r.networkCase, m, model, upsilon, gamma);
    r.covar21 = network_covar(r.networkCase, back, model, upsilon, gamma);
    r.eci12 = network_eci(r.networkCase, model, profile);
    r.eci21 = network_eci(r.networkCase, model, overlap_profile(back.support(), model));
    return r;
}

} // namespace tailnet
