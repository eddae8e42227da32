// Command-line front end: every subcommand reads one scenario file.

#include "tailnet/errors.hpp"
#include "tailnet/harness.hpp"
#include "tailnet/mrv.hpp"
#include "tailnet/scenario.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace tailnet;
using nlohmann::json;

namespace {

struct Options {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::string out;
    unsigned threads = 1;
    std::size_t n = 1000;
    bool empirical = false;
};

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json members_1based(Subset s) {
    json out = json::array();
    for (int j : subset_members(s)) out.push_back(j + 1);
    return out;
}

/// Loads the scenario, applying --seed and forcing the study quantity when asked.
Scenario load(const Options& o, std::optional<std::string> quantity = std::nullopt) {
    Scenario s = load_scenario(o.scenario);
    if (!o.seed && !quantity) return s;
    json doc = s.source;
    if (!doc.contains("study") || !doc["study"].is_object()) doc["study"] = json::object();
    if (o.seed) doc["study"]["seed"] = *o.seed;
    if (quantity) {
        const auto cur = doc["study"].value("quantity", std::string("tail"));
        const bool isCovar = cur == "covar";
        if ((*quantity == "covar") != isCovar) {
            doc["study"]["quantity"] = *quantity;
            // a grid meant for the other kind of study would not parse
            doc["study"].erase("grid");
        }
    }
    return parse_scenario(doc);
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw SchemaError("--out", "cannot open " + path + " for writing");
    f << text;
}

void emit_study(const Options& o, const StudyResult& r) {
    if (ends_with(o.out, ".json")) {
        write_text(o.out, to_json(r).dump(2) + "\n");
        return;
    }
    std::ostringstream os;
    write_csv(os, r);
    write_text(o.out, os.str());
}

void emit_json(const Options& o, const json& j) {
    const std::string text = j.dump(2) + "\n";
    std::cout << text;
    if (!o.out.empty()) write_text(o.out, text);
}

// ---------------------------------------------------------------- subcommands

void cmd_sample(const Options& o) {
    const Scenario s = load(o);
    std::ostringstream os;
    int d = s.model.d;
    RowMatrix z;
    if (s.kind == ScenarioKind::Mixture) {
        z = bernstein_mixture_sample(o.n, s.study.seed);
    } else {
        z.resize(static_cast<Eigen::Index>(o.n), d);
        const PairSource src(s, s.study.seed);
        for (std::size_t i = 0; i < o.n; ++i) src.draw_z(i, z.row(i).data());
    }
    d = static_cast<int>(z.cols());
    for (int j = 0; j < d; ++j) os << (j ? "," : "") << 'z' << (j + 1);
    os << '\n';
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        for (int j = 0; j < d; ++j) os << (j ? "," : "") << format_number(z(i, j));
        os << '\n';
    }
    write_text(o.out, os.str());
}

void cmd_tailprob(const Options& o) {
    Scenario s = load(o);
    if (s.study.quantity == StudyQuantity::Covar) s = load(o, "tail");
    emit_study(o, run_tail_study(s, o.threads));
}

void cmd_covar(const Options& o) { emit_study(o, run_covar_study(load(o, "covar"), o.threads)); }

void cmd_qp(const Options& o) {
    const Scenario s = load(o);
    if (s.kind != ScenarioKind::Gaussian) throw DispatchError("qp needs a Gaussian dependence model");
    const QpSolution q = solve_qp(*s.model.sigma);
    json e = json::array(), h = json::array();
    for (Eigen::Index j = 0; j < q.eStar.size(); ++j) e.push_back(q.eStar(j));
    for (Eigen::Index j = 0; j < q.h.size(); ++j) h.push_back(q.h(j));
    emit_json(o, {{"gamma", q.gamma}, {"I", members_1based(q.I)}, {"e_star", e}, {"h", h}});
}

json ratio_rows(const std::vector<AiRatioRow>& rows) {
    json out = json::array();
    for (const auto& r : rows)
        out.push_back({{"u", r.u}, {"ratio", num(r.ratio)}, {"stderr", num(r.se)}, {"exact", r.exact},
                       {"reliable", r.reliable}, {"hits", r.hits}});
    return out;
}

// A ratio sequence "vanishes" when it falls at least like sqrt(u) across the grid.
bool vanishes(const std::vector<AiRatioRow>& rows) {
    const auto& a = rows.front();
    const auto& b = rows.back();
    return b.ratio <= a.ratio * std::sqrt(b.u / a.u);
}

void cmd_check_ai(const Options& o) {
    const Scenario s = load(o);
    json out{{"kind", to_string(s.kind)}};
    const std::vector<double> uGrid{1e-1, 1e-2, 1e-3};
    switch (s.kind) {
    case ScenarioKind::Gaussian:
        out["method"] = "exact";
        out["pairwise"] = pairwise_ai_gaussian(*s.model.sigma);
        out["mutual"] = mutual_ai_gaussian(*s.model.sigma);
        break;
    case ScenarioKind::MarshallOlkin: {
        out["method"] = "exact";
        out["pairwise"] = true;
        out["mutual"] = true;
        const Subset full = full_subset(s.model.d);
        if (s.model.d >= 2)
            out["ratios"] = ratio_rows(empirical_ai_ratio(s.model, full, s.model.d - 1, uGrid, 0, s.study.seed));
        break;
    }
    case ScenarioKind::Iid:
        out["method"] = "exact";
        out["pairwise"] = true;
        out["mutual"] = true;
        break;
    case ScenarioKind::Comonotone:
        out["method"] = "exact";
        out["pairwise"] = false;
        out["mutual"] = false;
        break;
    case ScenarioKind::Mixture: {
        out["method"] = "empirical";
        const auto pair = empirical_ai_ratio_mixture(make_subset({0, 1}), 1, uGrid, s.study.mcBudget, s.study.seed);
        const auto triple = empirical_ai_ratio_mixture(make_subset({0, 1, 2}), 2, uGrid, s.study.mcBudget, s.study.seed);
        out["pairwise"] = vanishes(pair);
        out["mutual"] = vanishes(pair) && vanishes(triple);
        out["pairwise_ratios"] = ratio_rows(pair);
        out["mutual_ratios"] = ratio_rows(triple);
        break;
    }
    }
    emit_json(o, out);
}

json eci_json(const EciReport& r) {
    return {{"eci", num(r.eci)}, {"beta", num(r.beta)}, {"alpha1", num(r.alpha1)}, {"alpha2", num(r.alpha2)}};
}

EciReport bivariate_eci(const Scenario& s) {
    const double alpha = s.model.margin.alpha;
    switch (s.kind) {
    case ScenarioKind::Iid: return eci(alpha, 2.0 * alpha);
    case ScenarioKind::Comonotone: return eci(alpha, alpha);
    case ScenarioKind::MarshallOlkin: {
        if (s.model.mo->variant() == MoVariant::General)
            throw DispatchError("closed-form ECI needs the equal or proportional rate family");
        return eci(alpha, mo_cone_spec(s.model.mo->variant(), alpha, s.model.margin.theta, s.model.d, 2).alpha_i);
    }
    case ScenarioKind::Gaussian: {
        const auto ab = subset_members(s.study.subset);
        if (ab.size() != 2) throw DomainError("ECI needs a two-coordinate subset");
        const double rho = (*s.model.sigma)(ab[0], ab[1]);
        return eci(alpha, 2.0 * alpha / (1.0 + rho));
    }
    case ScenarioKind::Mixture: break;
    }
    throw DispatchError("no closed-form ECI for this dependence kind");
}

void cmd_eci(const Options& o) {
    const Scenario s = load(o);
    json out{{"kind", to_string(s.kind)}};
    if (s.network) {
        const PairMoments m(*s.network, s.study.selector, 2, s.study.seed);
        const OverlapProfile p = overlap_profile(m.support(), s.model);
        const NetworkCase c = resolve_case(p, s.model);
        out["case"] = to_string(c);
        out["analytic"] = eci_json(network_eci(c, s.model, p));
    } else {
        out["analytic"] = eci_json(bivariate_eci(s));
    }
    if (o.empirical) {
        std::vector<double> grid;
        if (s.study.quantity == StudyQuantity::Covar && s.study.grid.size() >= 4) {
            grid = s.study.grid;
        } else {
            for (int k = 0; k <= 8; ++k) grid.push_back(std::pow(10.0, -1.0 - 0.25 * k));
        }
        const auto pairs = sample_pairs(s, s.study.mcBudget, grid_seed(s.study.seed, 0), o.threads);
        const EciReport r = eci_empirical(pairs, grid, s.study.upsilon);
        json e = eci_json(r);
        e["points"] = r.points;
        out["empirical"] = e;
    }
    emit_json(o, out);
}

json covar_json(const NetworkCovar& c) {
    return {{"level", num(c.level)},           {"var2", num(c.var2)},           {"value", num(c.value)},
            {"low_branch", num(c.lowBranch)}, {"high_branch", num(c.highBranch)}, {"two_branches", c.twoBranches}};
}

void cmd_network_study(const Options& o) {
    const Scenario s = load(o);
    if (!s.network) throw SchemaError("network", "network-study needs a network section");
    const auto& st = s.study;
    json out{{"kind", to_string(s.kind)}, {"seed", st.seed}};
    if (st.oneVsMax) {
        const auto r = one_vs_max(*s.network, s.model, *st.oneVsMax, st.x, st.t, st.upsilon, st.gamma, st.momentDraws,
                                  st.seed);
        out["case"] = to_string(r.networkCase);
        out["one_vs_max"] = {{"agent", *st.oneVsMax + 1},     {"mu_bar_1", num(r.mu1)},
                             {"mu_bar_2", num(r.mu2)},          {"cond_prob_12", num(r.condProb12)},
                             {"cond_prob_21", num(r.condProb21)}, {"covar_12", covar_json(r.covar12)},
                             {"covar_21", covar_json(r.covar21)}, {"eci_12", eci_json(r.eci12)},
                             {"eci_21", eci_json(r.eci21)}};
    } else {
        const PairMoments m(*s.network, st.selector, st.momentDraws, st.seed);
        const OverlapProfile p = overlap_profile(m.support(), s.model);
        const NetworkCase c = resolve_case(p, s.model);
        out["case"] = to_string(c);
        out["overlap"] = p.overlap;
        if (p.rhoStar) out["rho_star"] = *p.rhoStar;
        out["mu_bar_1"] = num(mu_bar_1(m, s.model, st.x).value);
        const Estimate mu2 = c == NetworkCase::Overlap ? mu_bar_2_overlap(m, s.model, st.x)
                                                       : disjoint_mu_bar_2(m, s.model, st.x);
        out["mu_bar_2"] = {{"value", num(mu2.value)}, {"stderr", num(mu2.se)}};
        if (c == NetworkCase::DisjointGaussian)
            out["gaussian_full_mu_bar_2"] = num(gaussian_full_mu_bar_2(m, s.model, st.x).value);
        out["joint_tail"] = num(network_joint_tail(c, m, s.model, st.x, st.t));
        out["cond_prob"] = num(network_cond_prob(c, m, s.model, st.x, st.t));
        out["covar"] = covar_json(network_covar(c, m, s.model, st.upsilon, st.gamma));
        out["eci"] = eci_json(network_eci(c, s.model, p));
    }
    if (s.network->is_deterministic()) {
        json ci = json::array();
        for (int k = 1; k <= s.network->q(); ++k) ci.push_back(cover_index(*s.network->fixed(), k));
        out["cover_index"] = ci;
    }
    const StudyResult r = st.quantity == StudyQuantity::Covar ? run_covar_study(s, o.threads) : run_tail_study(s, o.threads);
    if (o.out.empty()) {
        out["study"] = to_json(r);
        std::cout << out.dump(2) << "\n";
    } else {
        std::cout << out.dump(2) << "\n";
        emit_study(o, r);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Heavy-tailed dependence, CoVaR and bipartite network risk studies"};
    app.require_subcommand(1);
    Options o;
    auto common = [&o](CLI::App* sub) {
        sub->add_option("--scenario", o.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "Override study.seed");
        sub->add_option("--out", o.out, "Output path; .json selects JSON, anything else CSV");
        sub->add_option("--threads", o.threads, "Worker cap (results do not depend on it)")
            ->check(CLI::Range(1u, 1024u));
    };
    auto* sample = app.add_subcommand("sample", "Draw rows of Z");
    common(sample);
    sample->add_option("--n", o.n, "Number of rows")->check(CLI::Range(std::size_t(1), std::size_t(100000000)));
    auto* tail = app.add_subcommand("tailprob", "Tail probability study");
    common(tail);
    auto* qp = app.add_subcommand("qp", "Solve the quadratic program of a Gaussian model");
    common(qp);
    auto* ai = app.add_subcommand("check-ai", "Pairwise and mutual asymptotic independence");
    common(ai);
    auto* covar = app.add_subcommand("covar", "CoVaR study");
    common(covar);
    auto* eciCmd = app.add_subcommand("eci", "Extreme CoVaR index");
    common(eciCmd);
    eciCmd->add_flag("--empirical", o.empirical, "Also estimate the index from a sample");
    auto* net = app.add_subcommand("network-study", "Network tail, CoVaR and ECI comparison");
    common(net);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*sample) cmd_sample(o);
        else if (*tail) cmd_tailprob(o);
        else if (*qp) cmd_qp(o);
        else if (*ai) cmd_check_ai(o);
        else if (*covar) cmd_covar(o);
        else if (*eciCmd) cmd_eci(o);
        else if (*net) cmd_network_study(o);
        return 0;
    } catch (const ReliabilityError& e) {
        std::cerr << "reliability: " << e.what() << " (count " << e.count() << ")\n";
        return 3;
    } catch (const CapacityError& e) {
        std::cerr << "capacity: " << e.what() << " (limit " << e.limit() << ")\n";
        return 2;
    } catch (const SchemaError& e) {
        std::cerr << "schema: " << e.what() << "\n";
        return 2;
    } catch (const DegeneracyError& e) {
        std::cerr << "degenerate: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
