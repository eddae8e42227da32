#include "tailnet/scenario.hpp"

#include "tailnet/errors.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace tailnet {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

const json& require(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.is_object()) throw SchemaError(path.empty() ? "$" : path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(join(path, key), "missing required field");
    return *it;
}

const json* optional(const json& obj, const std::string& key) {
    auto it = obj.find(key);
    return it == obj.end() || it->is_null() ? nullptr : &*it;
}

double number(const json& v, const std::string& path) {
    if (!v.is_number()) throw SchemaError(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw SchemaError(path, "expected a finite number");
    return x;
}

double positive(const json& v, const std::string& path) {
    const double x = number(v, path);
    if (!(x > 0.0)) throw SchemaError(path, "expected a positive number");
    return x;
}

std::int64_t integer(const json& v, const std::string& path) {
    if (!v.is_number_integer() && !v.is_number_unsigned()) throw SchemaError(path, "expected an integer");
    return v.get<std::int64_t>();
}

std::string text(const json& v, const std::string& path) {
    if (!v.is_string()) throw SchemaError(path, "expected a string");
    return v.get<std::string>();
}

std::vector<double> numbers(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) throw SchemaError(path, "expected a nonempty array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], index(path, i)));
    return out;
}

Eigen::MatrixXd matrix(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) throw SchemaError(path, "expected a nonempty array of rows");
    const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
    if (cols == 0) throw SchemaError(index(path, 0), "expected a nonempty row");
    Eigen::MatrixXd m(v.size(), cols);
    for (std::size_t r = 0; r < v.size(); ++r) {
        const auto row = numbers(v[r], index(path, r));
        if (row.size() != cols) throw SchemaError(index(path, r), "rows must have equal length");
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = row[c];
    }
    return m;
}

/// 1-based agent or coordinate list to 0-based indices below `bound`.
std::vector<int> members(const json& v, const std::string& path, int bound) {
    if (!v.is_array() || v.empty()) throw SchemaError(path, "expected a nonempty array of 1-based indices");
    std::vector<int> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto k = integer(v[i], index(path, i));
        if (k < 1 || k > bound) throw SchemaError(index(path, i), "index out of range 1.." + std::to_string(bound));
        out.push_back(static_cast<int>(k - 1));
    }
    return out;
}

MoVariant mo_variant(const std::string& s, const std::string& path) {
    if (s == "equal") return MoVariant::Equal;
    if (s == "proportional") return MoVariant::Proportional;
    if (s == "general") return MoVariant::General;
    throw SchemaError(path, "expected \"equal\", \"proportional\" or \"general\"");
}

int dependence_dim(const json& dep, const std::string& path) {
    const json* d = optional(dep, "d");
    if (!d) throw SchemaError(join(path, "d"), "missing required field");
    const auto v = integer(*d, join(path, "d"));
    if (v < 1) throw SchemaError(join(path, "d"), "dimension must be >= 1");
    return static_cast<int>(v);
}

void parse_dependence(const json& doc, Scenario& s) {
    const std::string path = "dependence";
    const json& dep = require(doc, "", path);
    const std::string kind = text(require(dep, path, "kind"), join(path, "kind"));
    const ParetoMargin margin = s.model.margin;
    if (kind == "iid") {
        s.kind = ScenarioKind::Iid;
        s.model = RiskModel::iid(margin, dependence_dim(dep, path));
    } else if (kind == "gaussian") {
        s.kind = ScenarioKind::Gaussian;
        if (const json* sigma = optional(dep, "sigma")) {
            s.model = RiskModel::gaussian(margin, CorrelationMatrix(matrix(*sigma, join(path, "sigma"))));
        } else if (const json* rho = optional(dep, "rho")) {
            s.model = RiskModel::gaussian(
                margin, CorrelationMatrix::equicorrelation(dependence_dim(dep, path), number(*rho, join(path, "rho"))));
        } else {
            throw SchemaError(join(path, "sigma"), "Gaussian dependence needs sigma (or rho with d)");
        }
    } else if (kind == "mo") {
        s.kind = ScenarioKind::MarshallOlkin;
        const json* v = optional(dep, "mo_variant");
        const MoVariant variant = v ? mo_variant(text(*v, join(path, "mo_variant")), join(path, "mo_variant"))
                                    : MoVariant::Equal;
        const json* lam = optional(dep, "lambda");
        const double lambda = lam ? positive(*lam, join(path, "lambda")) : 1.0;
        if (variant == MoVariant::General) {
            const json* r = optional(dep, "rates");
            if (!r) throw SchemaError(join(path, "rates"), "the general rate family needs rates");
            auto rates = numbers(*r, join(path, "rates"));
            const int d = dependence_dim(dep, path);
            if (d > 20 || rates.size() != (std::size_t(1) << d) - 1)
                throw SchemaError(join(path, "rates"), "expected 2^d - 1 rates ordered by subset mask");
            rates.insert(rates.begin(), 0.0);
            s.model = RiskModel::marshall_olkin(margin, MoRateFamily::general(d, std::move(rates)));
        } else {
            const int d = dependence_dim(dep, path);
            s.model = RiskModel::marshall_olkin(margin, variant == MoVariant::Equal ? MoRateFamily::equal(d, lambda)
                                                                                     : MoRateFamily::proportional(d, lambda));
        }
    } else if (kind == "comonotone") {
        s.kind = ScenarioKind::Comonotone;
        const json* d = optional(dep, "d");
        s.model = RiskModel::iid(margin, d ? dependence_dim(dep, path) : 2);
    } else if (kind == "mixture") {
        s.kind = ScenarioKind::Mixture;
        s.model = RiskModel::iid(margin, 3);
    } else {
        throw SchemaError(join(path, "kind"), "expected iid, gaussian, mo, comonotone or mixture");
    }
}

void parse_network(const json& net, Scenario& s) {
    const std::string path = "network";
    if (!net.is_object()) throw SchemaError(path, "expected an object");
    if (const json* m = optional(net, "matrix")) {
        s.network = AdjacencyLaw::deterministic(matrix(*m, join(path, "matrix")));
    } else {
        const auto q = integer(require(net, path, "q"), join(path, "q"));
        const auto d = integer(require(net, path, "d"), join(path, "d"));
        if (q < 1) throw SchemaError(join(path, "q"), "must be >= 1");
        if (d < 1) throw SchemaError(join(path, "d"), "must be >= 1");
        const json& p = require(net, path, "edge_prob");
        Eigen::MatrixXd prob;
        if (p.is_number()) {
            prob = Eigen::MatrixXd::Constant(q, d, number(p, join(path, "edge_prob")));
        } else {
            prob = matrix(p, join(path, "edge_prob"));
            if (prob.rows() != q || prob.cols() != d) throw SchemaError(join(path, "edge_prob"), "expected a q x d matrix");
        }
        WeightSpec w = WeightSpec::point(1.0);
        if (const json* wj = optional(net, "weights")) {
            const std::string wp = join(path, "weights");
            const std::string kind = text(require(*wj, wp, "kind"), join(wp, "kind"));
            if (kind == "point") {
                const json* v = optional(*wj, "lo");
                w = WeightSpec::point(v ? positive(*v, join(wp, "lo")) : 1.0);
            } else if (kind == "uniform") {
                w = WeightSpec::uniform(positive(require(*wj, wp, "lo"), join(wp, "lo")),
                                        positive(require(*wj, wp, "hi"), join(wp, "hi")));
            } else {
                throw SchemaError(join(wp, "kind"), "expected \"point\" or \"uniform\"");
            }
        }
        s.network = AdjacencyLaw::random(BipartiteNetwork(prob, w));
    }
    if (s.network->d() != s.model.d)
        throw SchemaError(join(path, "d"), "network has " + std::to_string(s.network->d()) +
                                               " objects but the dependence model has " + std::to_string(s.model.d));
}

void parse_study(const json* st, Scenario& s) {
    StudyConfig& c = s.study;
    const std::string path = "study";
    const json empty = json::object();
    const json& obj = st ? *st : empty;
    if (!obj.is_object()) throw SchemaError(path, "expected an object");

    if (const json* q = optional(obj, "quantity")) {
        const std::string v = text(*q, join(path, "quantity"));
        if (v == "tail") c.quantity = StudyQuantity::Tail;
        else if (v == "cond") c.quantity = StudyQuantity::Cond;
        else if (v == "covar") c.quantity = StudyQuantity::Covar;
        else throw SchemaError(join(path, "quantity"), "expected tail, cond or covar");
    }
    if (const json* g = optional(obj, "grid")) {
        c.grid = numbers(*g, join(path, "grid"));
        for (std::size_t i = 0; i < c.grid.size(); ++i)
            if (!(c.grid[i] > 0.0)) throw SchemaError(index(join(path, "grid"), i), "grid values must be positive");
        bool up = true, down = true;
        for (std::size_t i = 1; i < c.grid.size(); ++i) {
            up = up && c.grid[i] > c.grid[i - 1];
            down = down && c.grid[i] < c.grid[i - 1];
        }
        if (!up && !down) throw SchemaError(join(path, "grid"), "grid must be strictly monotone");
    }
    if (const json* n = optional(obj, "mc_budget")) {
        const auto v = integer(*n, join(path, "mc_budget"));
        if (v < 10000) throw SchemaError(join(path, "mc_budget"), "must be >= 10000");
        c.mcBudget = static_cast<std::size_t>(v);
    }
    if (const json* v = optional(obj, "seed")) {
        if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0))
            throw SchemaError(join(path, "seed"), "expected a nonnegative integer");
        c.seed = v->get<std::uint64_t>();
    }
    const int d = s.model.d;
    c.subset = full_subset(std::min(d, 2));
    if (const json* v = optional(obj, "subset")) c.subset = make_subset(members(*v, join(path, "subset"), d));
    c.z = Eigen::VectorXd::Ones(d);
    if (const json* v = optional(obj, "z")) {
        const auto z = numbers(*v, join(path, "z"));
        if (static_cast<int>(z.size()) != d) throw SchemaError(join(path, "z"), "expected one threshold per coordinate");
        for (int j = 0; j < d; ++j) {
            if (!(z[j] > 0.0)) throw SchemaError(index(join(path, "z"), j), "thresholds must be positive");
            c.z(j) = z[j];
        }
    }
    if (const json* v = optional(obj, "x")) {
        const auto x = numbers(*v, join(path, "x"));
        if (x.size() != 2) throw SchemaError(join(path, "x"), "expected two thresholds");
        for (int j = 0; j < 2; ++j) {
            if (!(x[j] > 0.0)) throw SchemaError(index(join(path, "x"), j), "thresholds must be positive");
            c.x(j) = x[j];
        }
    }
    if (const json* v = optional(obj, "upsilon")) c.upsilon = positive(*v, join(path, "upsilon"));
    if (const json* v = optional(obj, "beta")) c.g = GSpec{number(*v, join(path, "beta")), 0.0, 1.0};
    if (const json* v = optional(obj, "g")) {
        const std::string gp = join(path, "g");
        GSpec g;
        g.beta = number(require(*v, gp, "beta"), join(gp, "beta"));
        if (const json* q = optional(*v, "q")) g.q = number(*q, join(gp, "q"));
        if (const json* cc = optional(*v, "c")) g.c = positive(*cc, join(gp, "c"));
        c.g = g;
    }
    if (const json* v = optional(obj, "gamma")) {
        c.gamma = number(*v, join(path, "gamma"));
        if (!(c.gamma > 0.0 && c.gamma < 1.0)) throw SchemaError(join(path, "gamma"), "must lie in (0, 1)");
    }
    if (const json* v = optional(obj, "t")) {
        c.t = number(*v, join(path, "t"));
        if (!(c.t > 1.0)) throw SchemaError(join(path, "t"), "must exceed 1");
    }
    if (const json* v = optional(obj, "moment_draws")) {
        const auto n = integer(*v, join(path, "moment_draws"));
        if (n < 2) throw SchemaError(join(path, "moment_draws"), "must be >= 2");
        c.momentDraws = static_cast<std::size_t>(n);
    }

    const int q = s.network ? s.network->q() : 0;
    int selectors = 0;
    if (const json* v = optional(obj, "pair")) {
        ++selectors;
        if (!s.network) throw SchemaError(join(path, "pair"), "agent selection needs a network");
        const auto ks = members(*v, join(path, "pair"), q);
        if (ks.size() != 2 || ks[0] == ks[1]) throw SchemaError(join(path, "pair"), "expected two distinct agents");
        c.selector = PairSelector::pair(ks[0], ks[1]);
    }
    if (const json* v = optional(obj, "aggregate")) {
        ++selectors;
        if (!s.network) throw SchemaError(join(path, "aggregate"), "agent selection needs a network");
        const std::string ap = join(path, "aggregate");
        c.selector = PairSelector::aggregate(members(require(*v, ap, "S"), join(ap, "S"), q),
                                             members(require(*v, ap, "T"), join(ap, "T"), q));
    }
    if (const json* v = optional(obj, "one_vs_max")) {
        ++selectors;
        if (!s.network) throw SchemaError(join(path, "one_vs_max"), "agent selection needs a network");
        if (q < 2) throw SchemaError(join(path, "one_vs_max"), "needs at least two agents");
        const auto k = integer(*v, join(path, "one_vs_max"));
        if (k < 1 || k > q) throw SchemaError(join(path, "one_vs_max"), "agent out of range 1.." + std::to_string(q));
        c.oneVsMax = static_cast<int>(k - 1);
        c.selector = PairSelector::one_vs_max(static_cast<int>(k - 1), q);
    }
    if (selectors > 1) throw SchemaError(path, "give at most one of pair, aggregate and one_vs_max");
    if (s.network && selectors == 0) {
        if (q < 2) throw SchemaError("network.q", "network studies need at least two agents");
        c.selector = PairSelector::pair(0, 1);
    }

    if (c.grid.empty()) {
        if (c.quantity == StudyQuantity::Covar) c.grid = {1e-2, 1e-3, 1e-4};
        else c.grid = {1e1, 1e2, 1e3, 1e4};
    }
    if (c.quantity == StudyQuantity::Covar) {
        for (std::size_t i = 0; i < c.grid.size(); ++i)
            if (!(c.grid[i] < 1.0)) throw SchemaError(index(join(path, "grid"), i), "CoVaR levels must lie in (0, 1)");
    } else {
        for (std::size_t i = 0; i < c.grid.size(); ++i)
            if (!(c.grid[i] > 1.0)) throw SchemaError(index(join(path, "grid"), i), "scales must exceed 1");
    }
}

} // namespace

std::string to_string(ScenarioKind k) {
    switch (k) {
    case ScenarioKind::Iid: return "iid";
    case ScenarioKind::Gaussian: return "gaussian";
    case ScenarioKind::MarshallOlkin: return "mo";
    case ScenarioKind::Comonotone: return "comonotone";
    case ScenarioKind::Mixture: return "mixture";
    }
    return "unknown";
}

nlohmann::json Scenario::echo(std::uint64_t seed) const {
    json out = source;
    if (!out.contains("study") || !out["study"].is_object()) out["study"] = json::object();
    out["study"]["seed"] = seed;
    return out;
}

Scenario parse_scenario(const json& doc) {
    if (!doc.is_object()) throw SchemaError("$", "scenario must be a JSON object");
    Scenario s;
    s.source = doc;
    const json& m = require(doc, "", "margin");
    const double alpha = positive(require(m, "margin", "alpha"), "margin.alpha");
    const json* th = optional(m, "theta");
    const double theta = th ? positive(*th, "margin.theta") : 1.0;
    s.model.margin = ParetoMargin(alpha, theta);
    parse_dependence(doc, s);
    if (const json* net = optional(doc, "network")) {
        if (!s.has_risk_model()) throw SchemaError("network", "networks need an iid, gaussian or mo dependence model");
        parse_network(*net, s);
    }
    parse_study(optional(doc, "study"), s);
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("$", "cannot open scenario file " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError("$", std::string("invalid JSON: ") + e.what());
    }
    return parse_scenario(doc);
}

} // namespace tailnet
