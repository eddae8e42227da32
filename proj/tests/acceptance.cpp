// Acceptance suite: one [PASS]/[FAIL] line per criterion.

#include "cli_util.hpp"
#include "oracles.hpp"

#include "tailnet/covar.hpp"
#include "tailnet/errors.hpp"
#include "tailnet/harness.hpp"
#include "tailnet/mrv.hpp"
#include "tailnet/network.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

using namespace tailnet;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("[%s] AC%d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

CorrelationMatrix witness_matrix(double r12, double r3) {
    Eigen::Matrix3d m;
    m << 1, r12, r3, r12, 1, r3, r3, r3, 1;
    return CorrelationMatrix(m);
}

Outcome qp_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    oracle::Gen g(2024);
    double worst = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const int d = 2 + rep % 4;
        const Eigen::MatrixXd sigma = g.correlation(d, g.uniform(0.05, 0.5));
        const double exact = solve_qp(sigma).gamma;
        const double brute = brute_force_qp(sigma).value;
        worst = std::max(worst, std::abs(exact - brute) / exact);
    }
    const double secs = elapsed_since(t0);
    return {worst <= 1e-6 && secs < 30.0, fmt("max relative gap %.3g over 200 matrices, %.1f s", worst, secs)};
}

Outcome mo_exactness() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = parse_scenario(json{{"margin", {{"alpha", 1}, {"theta", 1}}},
                                       {"dependence", {{"kind", "mo"}, {"mo_variant", "equal"}, {"d", 2}}},
                                       {"study", {{"mc_budget", 10000000}, {"grid", {10}}, {"seed", 1}}}});
    const auto row = run_tail_study(s).rows.at(0);
    const double exact = std::pow(10.0, -1.5);
    const double z = std::abs(row.empirical - exact) / row.se;
    const double secs = elapsed_since(t0);
    return {z <= 3.0 && secs < 60.0,
            fmt("estimate %.6f vs %.6f, %.2f s.e. (se %.2g)", row.empirical, exact, z, row.se)};
}

Outcome cone_spectra() {
    const double alpha = 1.7;
    const auto s = CorrelationMatrix::equicorrelation(3, 0.5);
    bool ok = true;
    std::ostringstream os;
    os << "gaussian";
    for (int i = 1; i <= 3; ++i) {
        const double got = gaussian_cone_spec(s, alpha, 1.0, i).alpha_i / alpha;
        const double enumerated = oracle::subset_min_quadratic(s.matrix(), i);
        ok = ok && std::abs(got - enumerated) <= 1e-12 && std::abs(got - oracle::equicorr_gamma(i, 0.5)) <= 1e-12;
        os << " " << got;
    }
    const double eq[] = {1.0, 1.5, 1.75};
    os << "; mo equal";
    for (int i = 1; i <= 3; ++i) {
        const double got = mo_cone_spec(MoVariant::Equal, alpha, 1.0, 3, i).alpha_i / alpha;
        ok = ok && std::abs(got - eq[i - 1]) <= 1e-12;
        os << " " << got;
    }
    const double pr[] = {1.0, 4.0 / 3.0};
    os << "; mo proportional";
    for (int i = 1; i <= 2; ++i) {
        const double got = mo_cone_spec(MoVariant::Proportional, alpha, 1.0, 2, i).alpha_i / alpha;
        ok = ok && std::abs(got - pr[i - 1]) <= 1e-12;
        os << " " << got;
    }
    return {ok, os.str()};
}

Outcome ai_classification() {
    const bool equi = mutual_ai_gaussian(CorrelationMatrix::equicorrelation(3, 0.5));
    const bool witness = mutual_ai_gaussian(witness_matrix(0.6, 0.6 * std::sqrt(2.0)));
    const double u = 1e-3;
    const auto est = mixture_corner_estimate(make_subset({0, 1, 2}), u, 2000000, 11);
    const double exact = oracle::mixture_pair(u);
    const double rel = std::abs(est.value - exact) / exact;
    const double scaled = est.value / (u * u);
    const bool ok = equi && !witness && rel <= 0.05 && std::abs(scaled / 2.25 - 1.0) <= 0.05;
    return {ok, std::string("equicorrelation mutual=") + (equi ? "true" : "false") +
                    ", witness mutual=" + (witness ? "true" : "false") +
                    fmt(", C(u,u,u)/u^2 = %.4f (closed form %.4f, rel. gap %.3g)", scaled, exact / (u * u), rel)};
}

Outcome eci_table() {
    bool ok = true;
    std::ostringstream os;
    auto expect = [&](const char* name, double got, double want) {
        const bool match = std::isinf(want) ? std::isinf(got) : std::abs(got - want) <= 1e-12 * want;
        ok = ok && match;
        os << name << "=" << got << (match ? "" : "(!)") << " ";
    };
    const double a = 1.3;
    expect("strong", eci(a, a).eci, INFINITY);
    expect("independent", eci(a, 2 * a).eci, 1.0);
    expect("mo-equal", eci(a, mo_cone_spec(MoVariant::Equal, a, 1.0, 2, 2).alpha_i).eci, 2.0);
    expect("mo-prop", eci(a, mo_cone_spec(MoVariant::Proportional, a, 1.0, 2, 2).alpha_i).eci, 3.0);
    const double rho = 0.35;
    expect("gauss", eci(a, gaussian_cone_spec(CorrelationMatrix::equicorrelation(2, rho), a, 1.0, 2).alpha_i).eci,
           (1 + rho) / (1 - rho));

    const ParetoMargin m(a, 1.0);
    const int d = 4;
    Eigen::MatrixXd sel = Eigen::MatrixXd::Zero(2, d);
    sel(0, 0) = 1;
    sel(1, 1) = 1;
    const PairMoments disjoint(AdjacencyLaw::deterministic(sel), PairSelector::pair(0, 1));
    const PairMoments shared(AdjacencyLaw::deterministic(Eigen::MatrixXd::Ones(2, d)), PairSelector::pair(0, 1));
    auto net = [&](const RiskModel& model, const PairMoments& pm) {
        const auto prof = overlap_profile(pm.support(), model);
        return network_eci(resolve_case(prof, model), model, prof).eci;
    };
    expect("net-iid", net(RiskModel::iid(m, d), disjoint), 1.0);
    expect("net-mo-equal", net(RiskModel::marshall_olkin(m, MoRateFamily::equal(d)), disjoint), 2.0);
    expect("net-mo-prop", net(RiskModel::marshall_olkin(m, MoRateFamily::proportional(d)), disjoint), 2.0 + 2.0 / d);
    Eigen::MatrixXd sg = Eigen::MatrixXd::Constant(d, d, 0.2);
    sg.diagonal().setOnes();
    sg(0, 1) = sg(1, 0) = 0.45;
    expect("net-gauss", net(RiskModel::gaussian(m, CorrelationMatrix(sg)), disjoint), 1.45 / 0.55);
    expect("net-overlap", net(RiskModel::iid(m, d), shared), INFINITY);
    return {ok, os.str()};
}

Outcome covar_mo() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = parse_scenario(json{{"margin", {{"alpha", 1}, {"theta", 1}}},
                                       {"dependence", {{"kind", "mo"}, {"mo_variant", "equal"}, {"d", 2}}},
                                       {"study",
                                        {{"quantity", "covar"},
                                         {"mc_budget", 10000000},
                                         {"grid", {1e-3}},
                                         {"beta", 0.5},
                                         {"upsilon", 0.5},
                                         {"seed", 1}}}});
    const auto row = run_covar_study(s).rows.at(0);
    const double closed = covar_asymptotic_mo(MoVariant::Equal, 1.0, 1.0, 0.5, 0.5, 1e-3);
    const double ratio = row.empirical / closed;
    const double secs = elapsed_since(t0);
    return {std::abs(ratio - 1.0) <= 0.15 && row.asymptotic == closed && secs < 300.0,
            fmt("empirical %.1f vs closed form %.1f, ratio %.4f, %.0f exceedances", row.empirical, closed, ratio,
                static_cast<double>(row.hits))};
}

Outcome covar_network() {
    const auto s = parse_scenario(json{{"margin", {{"alpha", 1}, {"theta", 1}}},
                                       {"dependence", {{"kind", "iid"}, {"d", 2}}},
                                       {"network", {{"matrix", {{1, 0}, {0, 1}}}}},
                                       {"study",
                                        {{"quantity", "covar"},
                                         {"mc_budget", 10000000},
                                         {"grid", {1e-3}},
                                         {"upsilon", 50},
                                         {"seed", 1}}}});
    const auto row = run_covar_study(s).rows.at(0);
    if (!row.ratio) return {false, "no ratio"};
    return {std::abs(*row.ratio - 1.0) <= 0.10,
            fmt("upsilon 50: empirical %.2f vs display %.2f, ratio %.4f, %.0f exceedances", row.empirical,
                row.asymptotic, *row.ratio, static_cast<double>(row.hits))};
}

Outcome gaussian_slow() {
    const double rho = 0.5;
    const auto sigma = CorrelationMatrix::equicorrelation(2, rho);
    const RectSet rect = RectSet::uniform(2, make_subset({0, 1}), 1.0);
    std::vector<double> ratios;
    for (double t : {1e4, 1e6, 1e8})
        ratios.push_back(gaussian_tail_asymptotic(sigma, 1.0, 1.0, rect, t) / oracle::gauss_joint_exceedance(rho, 1.0, 1.0, t));
    bool trend = true;
    for (std::size_t k = 1; k < ratios.size(); ++k)
        trend = trend && std::abs(ratios[k] - 1.0) < std::abs(ratios[k - 1] - 1.0);
    const bool last = ratios.back() >= 0.75 && ratios.back() <= 1.25;

    const double gamma = 1e-8, ups = 1.0;
    const GSpec g = gaussian_boundary_g(rho);
    const double exact = oracle::gauss_covar_exact(rho, 1.0, 1.0, ups * g(gamma), gamma);
    const double cr = covar_asymptotic_gauss(1.0, 1.0, rho, ups, gamma, g) / exact;
    const bool covarOk = cr >= 0.7 && cr <= 1.3;
    return {trend && last && covarOk,
            fmt("orthant ratios %.4f, %.4f, %.4f; CoVaR ratio %.4f at gamma 1e-8", ratios[0], ratios[1], ratios[2], cr)};
}

Outcome witness() {
    const double rho = 0.3;
    const auto sigma = witness_matrix(rho, std::sqrt(2.0) * rho);
    const auto model = RiskModel::gaussian(ParetoMargin(1.0, 1.0), sigma);
    Eigen::MatrixXd a(2, 3);
    a << 1, 0, 0, 0, 1, 0;
    const PairMoments m(AdjacencyLaw::deterministic(a), PairSelector::pair(0, 1));
    const auto prof = overlap_profile(m.support(), model);
    const Eigen::Vector2d x(1.0, 1.0);
    const double full = gaussian_full_mu_bar_2(m, model, x).value;
    const double reduced = disjoint_mu_bar_2(m, model, x).value;
    const bool ok = full == 0.0 && reduced > 0.0 && prof.rhoStar && *prof.rhoStar == rho &&
                    resolve_case(prof, model) == NetworkCase::DisjointGaussian;
    return {ok, fmt("full-model measure %.17g, reduced measure %.6f, rho* %.2f", full, reduced, prof.rhoStar.value_or(NAN))};
}

Outcome determinism() {
    const std::string dir = (std::filesystem::temp_directory_path() / "tailnet_tests").string();
    struct Case {
        std::string cmd;
        std::string name;
        std::string body;
    };
    const std::vector<Case> cases{
        {"tailprob", "det_mo.json",
         R"({"margin":{"alpha":1,"theta":1},"dependence":{"kind":"mo","d":2},"study":{"mc_budget":300000,"seed":7}})"},
        {"tailprob", "det_gauss.json",
         R"({"margin":{"alpha":2,"theta":1},"dependence":{"kind":"gaussian","rho":0.4,"d":3},"study":{"mc_budget":200000,"subset":[1,3]}})"},
        {"covar", "det_covar.json",
         R"({"margin":{"alpha":1,"theta":1},"dependence":{"kind":"mo","d":2},"study":{"mc_budget":300000,"quantity":"covar"}})"},
        {"network-study", "det_net.json",
         R"({"margin":{"alpha":1,"theta":1},"dependence":{"kind":"iid","d":3},"network":{"q":2,"d":3,"edge_prob":0.6,"weights":{"kind":"uniform","lo":1,"hi":2}},"study":{"mc_budget":100000,"moment_draws":2000,"quantity":"cond"}})"},
        {"sample", "det_sample.json",
         R"({"margin":{"alpha":1,"theta":1},"dependence":{"kind":"mo","mo_variant":"proportional","d":3}})"},
    };
    int identical = 0;
    for (const auto& c : cases) {
        const std::string path = cli::write_temp(c.name, c.body);
        const std::string extra = c.cmd == "sample" ? " --n 5000" : "";
        std::vector<std::string> outputs;
        for (const char* threads : {"1", "4", "1"}) {
            const std::string out = dir + "/" + c.name + "." + threads + ".out.csv";
            std::filesystem::remove(out);
            const auto r = cli::run(c.cmd + " --scenario " + path + " --seed 42 --threads " + threads + extra +
                                    (c.cmd == "network-study" ? "" : " --out " + out));
            if (r.code != 0) return {false, c.cmd + " exited with " + std::to_string(r.code)};
            outputs.push_back(c.cmd == "network-study" ? r.out : cli::slurp(out));
        }
        if (!outputs[0].empty() && outputs[0] == outputs[1] && outputs[0] == outputs[2]) ++identical;
    }
    return {identical == static_cast<int>(cases.size()),
            std::to_string(identical) + "/" + std::to_string(cases.size()) +
                " subcommands byte-identical across reruns and --threads 1/4"};
}

} // namespace

int main() {
    report(1, "QP oracle", qp_oracle);
    report(2, "MO exactness", mo_exactness);
    report(3, "cone spectra", cone_spectra);
    report(4, "AI classification", ai_classification);
    report(5, "ECI table", eci_table);
    report(6, "CoVaR convergence (MO)", covar_mo);
    report(7, "CoVaR convergence (network)", covar_network);
    report(8, "Gaussian slow convergence", gaussian_slow);
    report(9, "zero-measure witness", witness);
    report(10, "determinism", determinism);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
