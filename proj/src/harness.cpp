#include "tailnet/harness.hpp"

#include "tailnet/errors.hpp"
#include "tailnet/parallel.hpp"
#include "tailnet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace tailnet {

namespace {

constexpr std::uint64_t kAdjacencyTag = 0xA5A5A5A55A5A5A5AULL;

struct BatchRange {
    std::uint64_t begin;
    std::uint64_t end;
};

BatchRange batch_range(std::size_t n, std::size_t b) {
    const std::size_t base = n / kBatches, extra = n % kBatches;
    const std::size_t begin = b * base + std::min(b, extra);
    return {begin, begin + base + (b < extra ? 1 : 0)};
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double batch_se(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

std::optional<double> ratio_of(double emp, double asym) {
    if (std::isfinite(emp) && std::isfinite(asym) && emp > 0.0 && asym > 0.0) return emp / asym;
    return std::nullopt;
}

std::vector<int> pair_coordinates(const Scenario& s) {
    const auto members = subset_members(s.study.subset);
    if (members.size() != 2) throw DomainError("bivariate studies need a two-coordinate subset");
    return members;
}

std::string study_name(const Scenario& s) {
    switch (s.study.quantity) {
    case StudyQuantity::Tail: return "tail";
    case StudyQuantity::Cond: return "cond";
    case StudyQuantity::Covar: return "covar";
    }
    return "unknown";
}

// Network context shared by the tail and CoVaR studies.
struct NetworkContext {
    PairMoments moments;
    OverlapProfile profile;
    NetworkCase networkCase;
};

NetworkContext network_context(const Scenario& s) {
    PairMoments m(*s.network, s.study.selector, s.study.momentDraws, s.study.seed);
    OverlapProfile p = overlap_profile(m.support(), s.model);
    const NetworkCase c = resolve_case(p, s.model);
    return {std::move(m), std::move(p), c};
}

double model_tail_asymptotic(const Scenario& s, double t) {
    const auto& z = s.study.z;
    const Subset S = s.study.subset;
    const double alpha = s.model.margin.alpha, theta = s.model.margin.theta;
    const int i = subset_size(S);
    switch (s.kind) {
    case ScenarioKind::Iid: {
        double p = 1.0;
        for (int j : subset_members(S)) p *= s.model.margin.survival(t * z(j));
        return p;
    }
    case ScenarioKind::Comonotone: {
        double zmax = 0.0;
        for (int j : subset_members(S)) zmax = std::max(zmax, z(j));
        return s.model.margin.survival(t * zmax);
    }
    case ScenarioKind::Gaussian:
        return gaussian_tail_asymptotic(*s.model.sigma, alpha, theta, RectSet::make(s.model.d, S, z), t);
    case ScenarioKind::MarshallOlkin: {
        const MoVariant v = s.model.mo->variant();
        const ConeSpec spec = mo_cone_spec(v, alpha, theta, s.model.d, i);
        return mo_mu(v, alpha, s.model.d, i, RectSet::make(s.model.d, S, z)) / spec.binv(t);
    }
    case ScenarioKind::Mixture: break;
    }
    throw DispatchError("no tail asymptotic for this dependence kind");
}

// Default level function and closed-form CoVaR of the bivariate models.
GSpec default_level(const Scenario& s) {
    if (s.study.g) return *s.study.g;
    switch (s.kind) {
    case ScenarioKind::Iid: return GSpec{1.0, 0.0, 1.0};
    case ScenarioKind::Comonotone: return GSpec{0.0, 0.0, 1.0};
    case ScenarioKind::MarshallOlkin:
        return GSpec{s.model.mo->variant() == MoVariant::Proportional ? 1.0 / 3.0 : 0.5, 0.0, 1.0};
    case ScenarioKind::Gaussian: {
        const auto ab = pair_coordinates(s);
        return gaussian_boundary_g((*s.model.sigma)(ab[0], ab[1]));
    }
    case ScenarioKind::Mixture: break;
    }
    throw DispatchError("no CoVaR level function for this dependence kind");
}

double model_covar_asymptotic(const Scenario& s, const GSpec& g, double gamma) {
    const double alpha = s.model.margin.alpha, theta = s.model.margin.theta, ups = s.study.upsilon;
    const CovarQuery query{gamma, ups, g};
    const double var = pareto_var(alpha, theta, gamma);
    switch (s.kind) {
    case ScenarioKind::Iid:
        return covar_asymptotic_generic(HFunction::independent(alpha), PowerLog{std::pow(theta, -2.0), 2.0 * alpha, 0.0, 1.0, 0.0},
                                        var, query);
    case ScenarioKind::Comonotone:
        return covar_asymptotic_generic(HFunction::strong(alpha), PowerLog{1.0 / theta, alpha, 0.0, 1.0, 0.0}, var, query);
    case ScenarioKind::MarshallOlkin:
        if (s.model.d != 2) throw DomainError("the Marshall-Olkin CoVaR closed form is bivariate");
        if (g.q != 0.0) throw DomainError("the Marshall-Olkin CoVaR closed form needs g(gamma) = gamma^beta");
        return covar_asymptotic_mo(s.model.mo->variant(), alpha, theta, g.beta, ups, gamma);
    case ScenarioKind::Gaussian: {
        const auto ab = pair_coordinates(s);
        return covar_asymptotic_gauss(alpha, theta, (*s.model.sigma)(ab[0], ab[1]), ups, gamma, g);
    }
    case ScenarioKind::Mixture: break;
    }
    throw DispatchError("no CoVaR asymptotic for this dependence kind");
}

bool by_y2_desc(const YPair& a, const YPair& b) { return a.y2 > b.y2 || (a.y2 == b.y2 && a.y1 > b.y1); }

std::vector<YPair> top_pairs(std::vector<YPair> all, std::size_t m) {
    if (all.size() > m) {
        std::nth_element(all.begin(), all.begin() + (m - 1), all.end(), by_y2_desc);
        all.resize(m);
    }
    std::sort(all.begin(), all.end(), by_y2_desc);
    return all;
}

} // namespace

// ---------------------------------------------------------------- sources

std::uint64_t grid_seed(std::uint64_t seed, std::size_t point) {
    return mix64(stream_key(seed, static_cast<std::uint64_t>(Stream::Study)) + point);
}

PairSource::PairSource(const Scenario& scenario, std::uint64_t seed)
    : s_(&scenario), seed_(seed), adjacencySeed_(mix64(seed ^ kAdjacencyTag)), d_(scenario.model.d) {
    if (scenario.kind == ScenarioKind::Mixture)
        throw DispatchError("mixture scenarios are sampled only through check-ai");
    if (scenario.has_risk_model()) sampler_.emplace(scenario.model, seed);
    if (!scenario.network) {
        const auto ab = subset_members(scenario.study.subset);
        if (ab.size() >= 2) {
            a_ = ab[0];
            b_ = ab[1];
        } else if (d_ < 2) {
            a_ = b_ = 0;
        }
    }
}

void PairSource::draw_z(std::uint64_t row, double* z) const {
    if (sampler_) {
        sampler_->draw(row, z);
        return;
    }
    // comonotone: one uniform drives every coordinate
    CounterRng rng(seed_, Stream::ModelSample, row);
    const double v = s_->model.margin.quantile(rng.uniform());
    for (int j = 0; j < d_; ++j) z[j] = v;
}

YPair PairSource::operator()(std::uint64_t row) const {
    double buf[64];
    std::vector<double> heap;
    double* z = buf;
    if (d_ > 64) {
        heap.resize(d_);
        z = heap.data();
    }
    draw_z(row, z);
    if (!s_->network) return {z[a_], z[b_]};
    const Eigen::MatrixXd a = s_->network->draw(adjacencySeed_, row);
    const Eigen::VectorXd x = a * Eigen::Map<const Eigen::VectorXd>(z, d_);
    return s_->study.selector.value(x);
}

std::vector<YPair> sample_pairs(const Scenario& scenario, std::size_t n, std::uint64_t seed, unsigned threads) {
    const PairSource src(scenario, seed);
    std::vector<YPair> out(n);
    parallel_for(kBatches, threads, [&](std::size_t b) {
        const auto r = batch_range(n, b);
        for (std::uint64_t i = r.begin; i < r.end; ++i) out[i] = src(i);
    });
    return out;
}

// ---------------------------------------------------------------- studies

StudyResult run_tail_study(const Scenario& s, unsigned threads) {
    const StudyConfig& c = s.study;
    if (c.quantity == StudyQuantity::Covar) throw DomainError("run_tail_study needs quantity tail or cond");
    if (c.quantity == StudyQuantity::Cond && !s.network) throw DomainError("conditional studies need a network");
    std::optional<NetworkContext> net;
    if (s.network) net.emplace(network_context(s));

    StudyResult result{study_name(s), c.seed, s.echo(c.seed), {}};
    const std::size_t n = c.mcBudget;
    for (std::size_t g = 0; g < c.grid.size(); ++g) {
        const double t = c.grid[g];
        const PairSource src(s, grid_seed(c.seed, g));
        // hits[b] counts the joint event, cond[b] the conditioning event Y2 > t x2.
        std::vector<std::size_t> hits(kBatches, 0), cond(kBatches, 0);
        parallel_for(kBatches, threads, [&](std::size_t b) {
            const auto r = batch_range(n, b);
            std::vector<double> z(src.d());
            for (std::uint64_t i = r.begin; i < r.end; ++i) {
                if (s.network) {
                    const YPair y = src(i);
                    const bool second = y.y2 > t * c.x(1);
                    cond[b] += second;
                    hits[b] += second && y.y1 > t * c.x(0);
                } else {
                    src.draw_z(i, z.data());
                    bool all = true;
                    for (int j : subset_members(c.subset)) all = all && z[j] > t * c.z(j);
                    hits[b] += all;
                }
            }
        });

        StudyRow row;
        row.grid = t;
        std::size_t totalHits = 0, totalCond = 0;
        for (std::size_t b = 0; b < kBatches; ++b) {
            totalHits += hits[b];
            totalCond += cond[b];
        }
        row.hits = totalHits;
        if (c.quantity == StudyQuantity::Tail) {
            std::vector<double> p(kBatches);
            for (std::size_t b = 0; b < kBatches; ++b) {
                const auto r = batch_range(n, b);
                p[b] = static_cast<double>(hits[b]) / static_cast<double>(r.end - r.begin);
            }
            row.empirical = static_cast<double>(totalHits) / static_cast<double>(n);
            row.se = batch_se(p);
            row.asymptotic = net ? network_joint_tail(net->networkCase, net->moments, s.model, c.x, t)
                                 : model_tail_asymptotic(s, t);
        } else {
            // ratio estimator with batch-means variance
            if (totalCond == 0) {
                row.empirical = NAN;
                row.se = NAN;
            } else {
                const double R = static_cast<double>(totalHits) / static_cast<double>(totalCond);
                const double cbar = static_cast<double>(totalCond) / kBatches;
                double ss = 0.0;
                for (std::size_t b = 0; b < kBatches; ++b) {
                    const double e = static_cast<double>(hits[b]) - R * static_cast<double>(cond[b]);
                    ss += e * e;
                }
                row.empirical = R;
                row.se = std::sqrt(ss / (kBatches * (kBatches - 1.0))) / cbar;
            }
            row.asymptotic = network_cond_prob(net->networkCase, net->moments, s.model, c.x, t);
        }
        row.flag = totalHits < kMinTailHits;
        row.ratio = ratio_of(row.empirical, row.asymptotic);
        result.rows.push_back(row);
    }
    return result;
}

double covar_from_top(std::span<const YPair> top, std::size_t n, double gamma1, double gamma2, std::size_t* hits,
                      std::size_t minExceed) {
    if (n == 0 || top.empty()) throw DomainError("covar_from_top: empty sample");
    if (!(gamma1 > 0.0 && gamma1 < 1.0) || !(gamma2 > 0.0 && gamma2 < 1.0))
        throw DomainError("covar_from_top: levels must lie in (0, 1)");
    const std::size_t rank = var_rank(n, gamma2);
    const std::size_t fromTop = n - rank; // 0-based position of VaR_gamma2 in decreasing order
    if (fromTop >= top.size()) throw DomainError("covar_from_top: top list too short for gamma2");
    const double v = top[fromTop].y2;
    std::vector<double> y1;
    for (std::size_t k = 0; k < fromTop; ++k)
        if (top[k].y2 > v) y1.push_back(top[k].y1);
    if (y1.size() < minExceed)
        throw ReliabilityError("only " + std::to_string(y1.size()) + " pairs exceed VaR of Y2 (need " +
                                   std::to_string(minExceed) + ")",
                               y1.size());
    std::sort(y1.begin(), y1.end());
    const double est = var_empirical(y1, gamma1);
    if (hits) *hits = static_cast<std::size_t>(y1.end() - std::upper_bound(y1.begin(), y1.end(), est));
    return est;
}

StudyResult run_covar_study(const Scenario& s, unsigned threads) {
    const StudyConfig& c = s.study;
    if (c.quantity != StudyQuantity::Covar) throw DomainError("run_covar_study needs quantity covar");
    std::optional<NetworkContext> net;
    GSpec g;
    if (s.network) {
        net.emplace(network_context(s));
        g = network_level(net->networkCase, s.model, net->profile);
    } else {
        g = default_level(s);
    }

    StudyResult result{study_name(s), c.seed, s.echo(c.seed), {}};
    const std::size_t n = c.mcBudget;
    for (std::size_t gi = 0; gi < c.grid.size(); ++gi) {
        const double gamma = c.grid[gi];
        const double gamma1 = c.upsilon * g(gamma);
        if (!(gamma1 > 0.0 && gamma1 < 1.0))
            throw DomainError("the CoVaR level upsilon * g(gamma) = " + format_number(gamma1) + " is outside (0, 1)");
        const PairSource src(s, grid_seed(c.seed, gi));
        const std::size_t m = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * gamma)) + 1;
        std::vector<std::vector<YPair>> tops(kBatches);
        std::vector<double> est(kBatches, NAN);
        parallel_for(kBatches, threads, [&](std::size_t b) {
            const auto r = batch_range(n, b);
            std::vector<YPair> all(r.end - r.begin);
            for (std::uint64_t i = r.begin; i < r.end; ++i) all[i - r.begin] = src(i);
            tops[b] = top_pairs(std::move(all), m);
            try {
                est[b] = covar_from_top(tops[b], r.end - r.begin, gamma1, gamma, nullptr, 1);
            } catch (const ReliabilityError&) {
            } catch (const DomainError&) {
            }
        });
        std::vector<YPair> merged;
        for (const auto& t : tops) merged.insert(merged.end(), t.begin(), t.end());
        merged = top_pairs(std::move(merged), m);

        StudyRow row;
        row.grid = gamma;
        try {
            row.empirical = covar_from_top(merged, n, gamma1, gamma, &row.hits, 1);
        } catch (const ReliabilityError&) {
            row.empirical = NAN;
        }
        std::vector<double> ok;
        for (double e : est)
            if (std::isfinite(e)) ok.push_back(e);
        row.se = ok.size() == kBatches ? batch_se(ok) : NAN;
        row.asymptotic = net ? network_covar(net->networkCase, net->moments, s.model, c.upsilon, gamma).value
                             : model_covar_asymptotic(s, g, gamma);
        row.flag = !std::isfinite(row.empirical) || row.hits < kMinTailHits;
        row.ratio = ratio_of(row.empirical, row.asymptotic);
        result.rows.push_back(row);
    }
    return result;
}

// ---------------------------------------------------------------- QP oracle

BruteForceQp brute_force_qp(const Eigen::MatrixXd& sigma, double gridStep, double zmax) {
    const int d = static_cast<int>(sigma.rows());
    if (d < 1 || d > 5) throw DomainError("brute_force_qp supports 1 <= d <= 5");
    if (!(gridStep > 0.0) || !(zmax >= 1.0)) throw DomainError("brute_force_qp: bad grid");
    const Eigen::MatrixXd Q = sigma.inverse();
    const int steps = static_cast<int>(std::floor((zmax - 1.0) / gridStep + 1e-9)) + 1;
    Eigen::VectorXd z = Eigen::VectorXd::Ones(d), best = z;
    double bestValue = z.dot(Q * z);
    std::vector<int> idx(d, 0);
    while (true) {
        int k = 0;
        while (k < d && ++idx[k] == steps) idx[k++] = 0;
        if (k == d) break;
        for (int j = 0; j < d; ++j) z(j) = 1.0 + gridStep * idx[j];
        const double v = z.dot(Q * z);
        if (v < bestValue) {
            bestValue = v;
            best = z;
        }
    }
    // Projected coordinate descent; exact minimisation along each axis.
    z = best;
    for (int sweep = 0; sweep < 1000000; ++sweep) {
        double change = 0.0;
        for (int i = 0; i < d; ++i) {
            double off = 0.0;
            for (int j = 0; j < d; ++j)
                if (j != i) off += Q(i, j) * z(j);
            const double next = std::max(1.0, -off / Q(i, i));
            change = std::max(change, std::abs(next - z(i)));
            z(i) = next;
        }
        if (change < 1e-15) break;
    }
    return {z, z.dot(Q * z)};
}

// ---------------------------------------------------------------- output

std::string format_number(double v) {
    if (!std::isfinite(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(std::ostream& out, const StudyResult& r) {
    out << "grid,empirical,stderr,asymptotic,ratio,flag\n";
    for (const auto& row : r.rows) {
        out << format_number(row.grid) << ',' << format_number(row.empirical) << ',' << format_number(row.se) << ','
            << format_number(row.asymptotic) << ',' << (row.ratio ? format_number(*row.ratio) : "") << ','
            << (row.flag ? 1 : 0) << '\n';
    }
}

nlohmann::json to_json(const StudyResult& r) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"grid", num(row.grid)},
                        {"empirical", num(row.empirical)},
                        {"stderr", num(row.se)},
                        {"asymptotic", num(row.asymptotic)},
                        {"ratio", row.ratio ? num(*row.ratio) : nlohmann::json(nullptr)},
                        {"flag", row.flag},
                        {"hits", row.hits}});
    }
    return {{"study", r.study}, {"seed", r.seed}, {"scenario", r.scenario}, {"rows", rows}};
}

} // namespace tailnet
