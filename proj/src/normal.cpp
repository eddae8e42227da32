#include "tailnet/normal.hpp"

#include "tailnet/errors.hpp"
#include "tailnet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace tailnet {

namespace {

constexpr std::uint64_t kIntegratorSeed = 0x6A09E667F3BCC909ULL;

const int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53,
                       59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131};

double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

// E[N | N < a] for standard normal N.
double truncated_mean_upper(double a) {
    const double p = normal_cdf(a);
    if (p > 1e-300) return -normal_pdf(a) / p;
    // Mills ratio expansion for a -> -infinity.
    return a + 1.0 / a;
}

struct Prepared {
    std::size_t m = 0;
    Eigen::MatrixXd L;
    Eigen::VectorXd b;
};

Prepared prioritised_cholesky(Eigen::MatrixXd sigma, Eigen::VectorXd b) {
    const Eigen::Index m = sigma.rows();
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd yhat = Eigen::VectorXd::Zero(m);

    for (Eigen::Index i = 0; i < m; ++i) {
        Eigen::Index best = i;
        double bestProb = INFINITY;
        for (Eigen::Index j = i; j < m; ++j) {
            double var = sigma(j, j);
            double shift = 0.0;
            for (Eigen::Index k = 0; k < i; ++k) {
                var -= L(j, k) * L(j, k);
                shift += L(j, k) * yhat(k);
            }
            if (var <= 0.0) throw ModelError("covariance is not positive definite");
            const double prob = normal_cdf((b(j) - shift) / std::sqrt(var));
            if (prob < bestProb) {
                bestProb = prob;
                best = j;
            }
        }
        if (best != i) {
            sigma.row(i).swap(sigma.row(best));
            sigma.col(i).swap(sigma.col(best));
            std::swap(b(i), b(best));
            L.row(i).swap(L.row(best));
        }
        double var = sigma(i, i);
        double shift = 0.0;
        for (Eigen::Index k = 0; k < i; ++k) {
            var -= L(i, k) * L(i, k);
            shift += L(i, k) * yhat(k);
        }
        L(i, i) = std::sqrt(var);
        for (Eigen::Index j = i + 1; j < m; ++j) {
            double s = sigma(j, i);
            for (Eigen::Index k = 0; k < i; ++k) s -= L(j, k) * L(i, k);
            L(j, i) = s / L(i, i);
        }
        yhat(i) = truncated_mean_upper((b(i) - shift) / L(i, i));
    }
    return {static_cast<std::size_t>(m), L, b};
}

double sov_integrand(const Prepared& p, const double* w, std::vector<double>& y) {
    const std::size_t m = p.m;
    double f = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
        double s = p.b(i);
        for (std::size_t k = 0; k < i; ++k) s -= p.L(i, k) * y[k];
        const double e = normal_cdf(s / p.L(i, i));
        f *= e;
        if (f == 0.0) return 0.0;
        if (i + 1 < m) {
            const double q = std::clamp(w[i] * e, 1e-300, 1.0 - 1e-16);
            y[i] = normal_quantile(q);
        }
    }
    return f;
}

} // namespace

OrthantResult mvn_upper_orthant(const Eigen::MatrixXd& cov, const Eigen::VectorXd& lower,
                                const OrthantOptions& options) {
    const Eigen::Index d = cov.rows();
    if (cov.cols() != d || lower.size() != d) throw DomainError("orthant: dimension mismatch");

    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < d; ++i) {
        if (std::isnan(lower(i))) throw DomainError("orthant: NaN threshold");
        if (lower(i) == INFINITY) return {0.0, 0.0, 0};
        if (lower(i) > -INFINITY) active.push_back(i);
    }
    const std::size_t m = active.size();
    if (m == 0) return {1.0, 0.0, 0};
    if (m == 1) {
        const Eigen::Index i = active[0];
        return {normal_survival(lower(i) / std::sqrt(cov(i, i))), 0.0, 0};
    }
    if (m > std::size(kPrimes) + 1) throw CapacityError("orthant: dimension too large", std::size(kPrimes) + 1);

    Eigen::MatrixXd sigma(m, m);
    Eigen::VectorXd b(m);
    for (std::size_t i = 0; i < m; ++i) {
        b(i) = -lower(active[i]);
        for (std::size_t j = 0; j < m; ++j) sigma(i, j) = cov(active[i], active[j]);
    }
    const Prepared prep = prioritised_cholesky(sigma, b);

    const std::size_t dim = m - 1;
    std::vector<double> z(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        const double r = std::sqrt(static_cast<double>(kPrimes[k]));
        z[k] = r - std::floor(r);
    }
    std::vector<std::vector<double>> shifts(options.shifts, std::vector<double>(dim));
    CounterRng rng(kIntegratorSeed, Stream::NormalIntegrator);
    for (auto& s : shifts)
        for (auto& v : s) v = rng.uniform();

    std::vector<double> w(dim), y(m);
    OrthantResult result;
    for (std::size_t n = options.minPoints;; n *= 2) {
        std::vector<double> estimates(options.shifts, 0.0);
        for (unsigned s = 0; s < options.shifts; ++s) {
            double acc = 0.0;
            for (std::size_t j = 1; j <= n; ++j) {
                for (std::size_t k = 0; k < dim; ++k) {
                    double x = static_cast<double>(j) * z[k] + shifts[s][k];
                    x -= std::floor(x);
                    w[k] = std::abs(2.0 * x - 1.0);
                }
                acc += sov_integrand(prep, w.data(), y);
            }
            estimates[s] = acc / static_cast<double>(n);
        }
        double mean = 0.0;
        for (double e : estimates) mean += e;
        mean /= options.shifts;
        double var = 0.0;
        for (double e : estimates) var += (e - mean) * (e - mean);
        var /= static_cast<double>(options.shifts) * (options.shifts - 1);
        result.value = mean;
        result.error = 3.0 * std::sqrt(var);
        result.points = n * options.shifts;
        if (result.error <= std::max(options.relTarget * mean, options.absFloor)) break;
        if (n * 2 > options.maxPoints) break;
    }
    return result;
}

} // namespace tailnet
