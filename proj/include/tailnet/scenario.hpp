#pragma once

#include "tailnet/copula.hpp"
#include "tailnet/covar.hpp"
#include "tailnet/network.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace tailnet {

/// Dependence structures a scenario may name. Comonotone and Mixture have no
/// RiskModel counterpart and are only sampled.
enum class ScenarioKind { Iid, Gaussian, MarshallOlkin, Comonotone, Mixture };

enum class StudyQuantity { Tail, Cond, Covar };

struct StudyConfig {
    std::vector<double> grid;
    std::size_t mcBudget = 1000000;
    std::uint64_t seed = 1;
    StudyQuantity quantity = StudyQuantity::Tail;
    /// Coordinates of the tail event (0-based) and their thresholds.
    Subset subset = 0;
    Eigen::VectorXd z;
    /// Thresholds of the two derived network rows.
    Eigen::Vector2d x{1.0, 1.0};
    double upsilon = 0.5;
    /// Level function; unset means the model's own boundary choice.
    std::optional<GSpec> g;
    PairSelector selector = PairSelector::pair(0, 1);
    /// Set when the study asks for the one-vs-max construction (0-based agent).
    std::optional<int> oneVsMax;
    std::size_t momentDraws = kMomentDraws;
    /// Level and scale of the single-point queries (network-study).
    double gamma = 1e-3;
    double t = 1e3;
};

struct Scenario {
    nlohmann::json source;
    ScenarioKind kind = ScenarioKind::Iid;
    /// Margins and dimension for every kind; the dependence part is only meaningful
    /// for Iid, Gaussian and MarshallOlkin.
    RiskModel model;
    std::optional<AdjacencyLaw> network;
    StudyConfig study;

    bool has_risk_model() const {
        return kind == ScenarioKind::Iid || kind == ScenarioKind::Gaussian || kind == ScenarioKind::MarshallOlkin;
    }
    /// The document with study.seed replaced by `seed`.
    nlohmann::json echo(std::uint64_t seed) const;
};

std::string to_string(ScenarioKind k);

/// Throws SchemaError (with a field path) for shape problems and ModelError for
/// invalid model parameters.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::string& path);

} // namespace tailnet
