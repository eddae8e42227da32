#pragma once

#include "tailnet/scenario.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tailnet {

/// Number of batches behind every standard error; also the unit of parallel work.
constexpr std::size_t kBatches = 32;

struct StudyRow {
    double grid = 0.0;
    double empirical = 0.0;
    double se = 0.0;
    double asymptotic = 0.0;
    /// empirical / asymptotic, present only when both are finite and positive.
    std::optional<double> ratio;
    /// Fewer than kMinTailHits tail observations behind the estimate.
    bool flag = false;
    std::size_t hits = 0;
};

struct StudyResult {
    std::string study;
    std::uint64_t seed = 0;
    nlohmann::json scenario;
    std::vector<StudyRow> rows;
};

/// Draws the bivariate observation Y of a scenario: (Z_a, Z_b) for the two
/// coordinates of study.subset, or the selected rows of X = A Z for networks.
class PairSource {
public:
    PairSource(const Scenario& scenario, std::uint64_t seed);
    YPair operator()(std::uint64_t row) const;
    /// Full draw of Z for the given row (d entries).
    void draw_z(std::uint64_t row, double* z) const;
    int d() const { return d_; }

private:
    const Scenario* s_;
    std::optional<ModelSampler> sampler_;
    std::uint64_t seed_;
    std::uint64_t adjacencySeed_;
    int d_;
    int a_ = 0;
    int b_ = 1;
};

/// Seed owned by grid point `point` of a study.
std::uint64_t grid_seed(std::uint64_t seed, std::size_t point);

/// n pairs from the scenario's pair source; deterministic for any thread count.
std::vector<YPair> sample_pairs(const Scenario& scenario, std::size_t n, std::uint64_t seed, unsigned threads = 1);

/// Tail (or, for networks, conditional) probabilities along a t-grid against the
/// closed-form asymptotics.
StudyResult run_tail_study(const Scenario& scenario, unsigned threads = 1);

/// Empirical CoVaR_{upsilon g(gamma) | gamma} along a gamma-grid against the
/// closed-form asymptotics.
StudyResult run_covar_study(const Scenario& scenario, unsigned threads = 1);

/// CoVaR from the pairs with the largest Y2, sorted by decreasing Y2, out of a
/// sample of size n. Agrees with covar_empirical on the full sample whenever
/// `top` holds at least n * gamma2 + 1 pairs. Returns the number of pairs with
/// Y1 above the estimate through `hits`.
double covar_from_top(std::span<const YPair> top, std::size_t n, double gamma1, double gamma2,
                      std::size_t* hits = nullptr, std::size_t minExceed = kMinExceedances);

struct BruteForceQp {
    Eigen::VectorXd z;
    double value = 0.0;
};

/// Grid search over [1, zmax]^d followed by coordinate descent on z' Sigma^-1 z
/// subject to z >= 1. Test oracle for solve_qp.
BruteForceQp brute_force_qp(const Eigen::MatrixXd& sigma, double gridStep = 0.25, double zmax = 3.0);

/// `%.17g`, or an empty field for non-finite values.
std::string format_number(double v);

void write_csv(std::ostream& out, const StudyResult& r);
nlohmann::json to_json(const StudyResult& r);

} // namespace tailnet
