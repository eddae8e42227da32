#include "oracles.hpp"

#include "tailnet/errors.hpp"
#include "tailnet/harness.hpp"
#include "tailnet/mrv.hpp"

#include <doctest.h>

using namespace tailnet;

namespace {

CorrelationMatrix witness_matrix(double r12, double r3) {
    Eigen::Matrix3d m;
    m << 1, r12, r3, r12, 1, r3, r3, r3, 1;
    return CorrelationMatrix(m);
}

} // namespace

TEST_SUITE("qp") {
    TEST_CASE("identity") {
        const auto q = solve_qp(CorrelationMatrix::identity(3));
        CHECK(q.I == make_subset({0, 1, 2}));
        CHECK(q.gamma == doctest::Approx(3.0));
        CHECK(q.eStar.isApprox(Eigen::Vector3d::Ones()));
        CHECK(q.h.isApprox(Eigen::Vector3d::Ones()));
    }

    TEST_CASE("bivariate equicorrelation") {
        const auto q = solve_qp(CorrelationMatrix::equicorrelation(2, 0.5));
        CHECK(q.gamma == doctest::Approx(4.0 / 3.0));
        CHECK(q.eStar.isApprox(Eigen::Vector2d::Ones()));
        CHECK(q.h(0) == doctest::Approx(2.0 / 3.0));
        CHECK(q.h(1) == doctest::Approx(2.0 / 3.0));
    }

    TEST_CASE("inactive third coordinate") {
        const double r = 0.6 * std::sqrt(2.0);
        const auto s = witness_matrix(0.6, r);
        const auto q = solve_qp(s);
        CHECK(q.I == make_subset({0, 1}));
        CHECK(q.gamma == doctest::Approx(1.25).epsilon(1e-12));
        CHECK(q.eStar(2) == doctest::Approx(r * 1.25).epsilon(1e-12));
        const auto bf = brute_force_qp(s.matrix(), 0.01, 3.0);
        CHECK(bf.value == doctest::Approx(q.gamma).epsilon(1e-9));
    }

    TEST_CASE("solution structure on random matrices") {
        oracle::Gen g(101);
        for (int rep = 0; rep < 60; ++rep) {
            const int d = g.integer(2, 6);
            const CorrelationMatrix s(g.correlation(d));
            const auto q = solve_qp(s);
            const Eigen::MatrixXd inv = s.matrix().inverse();
            CHECK(q.gamma > 1.0 - 1e-12);
            CHECK(q.eStar.dot(inv * q.eStar) == doctest::Approx(q.gamma).epsilon(1e-10));
            CHECK((q.eStar.array() >= 1.0 - 1e-10).all());
            CHECK((q.h.array() > 0.0).all());
            for (int j : subset_members(q.I)) CHECK(q.eStar(j) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }

    TEST_CASE("brute force agrees on random matrices") {
        oracle::Gen g(7);
        for (int rep = 0; rep < 40; ++rep) {
            const int d = g.integer(2, 5);
            const Eigen::MatrixXd m = g.correlation(d);
            const auto q = solve_qp(CorrelationMatrix(m));
            CHECK(brute_force_qp(m).value == doctest::Approx(q.gamma).epsilon(1e-6));
        }
    }

    TEST_CASE("capacity and validation errors") {
        CHECK_THROWS_AS(solve_qp(Eigen::MatrixXd::Identity(21, 21)), CapacityError);
        Eigen::Matrix2d bad;
        bad << 1, 2, 2, 1;
        CHECK_THROWS_AS(solve_qp(Eigen::MatrixXd(bad)), ModelError);
    }
}

TEST_SUITE("cones") {
    TEST_CASE("gaussian exponents against subset enumeration") {
        for (int d : {2, 3, 4}) {
            for (double rho : {-0.2, 0.0, 0.3, 0.5, 0.8}) {
                if (rho < -1.0 / (d - 1)) continue;
                const auto s = CorrelationMatrix::equicorrelation(d, rho);
                for (int i = 1; i <= d; ++i) {
                    const auto c = gaussian_cone_spec(s, 1.5, 2.0, i);
                    CHECK(c.alpha_i == doctest::Approx(1.5 * oracle::equicorr_gamma(i, rho)).epsilon(1e-12));
                    if (rho >= 0.0)
                        CHECK(c.alpha_i == doctest::Approx(1.5 * oracle::subset_min_quadratic(s.matrix(), i)).epsilon(1e-12));
                }
            }
        }
    }

    TEST_CASE("first cone and identity") {
        const auto c1 = gaussian_cone_spec(CorrelationMatrix::equicorrelation(3, 0.4), 2.0, 3.0, 1);
        CHECK(c1.alpha_i == 2.0);
        // b1(t) = (theta t)^(1/alpha)  =>  b1^<-(x) = x^alpha / theta
        CHECK(c1.binv(5.0) == doctest::Approx(25.0 / 3.0));
        for (int k = 1; k <= 4; ++k)
            CHECK(gaussian_cone_spec(CorrelationMatrix::identity(4), 1.0, 1.0, k).alpha_i == doctest::Approx(k));
    }

    TEST_CASE("third exponent of the zero-measure example") {
        const double rho = 0.3;
        const auto s = witness_matrix(rho, std::sqrt(2.0) * rho);
        CHECK(gaussian_cone_spec(s, 1.0, 1.0, 2).alpha_i == doctest::Approx(2.0 / (1.0 + std::sqrt(2.0) * rho)).epsilon(1e-12));
        CHECK(gaussian_cone_spec(s, 1.0, 1.0, 3).alpha_i ==
              doctest::Approx((3.0 - (4.0 * std::sqrt(2.0) - 1.0) * rho) / (1.0 + rho - 4.0 * rho * rho)).epsilon(1e-12));
        // h1 + h2 + h3 from the quadratic program
        CHECK(gaussian_cone_spec(s, 1.0, 1.0, 3).alpha_i ==
              doctest::Approx((2.0 * (1.0 - std::sqrt(2.0) * rho) + 1.0 - (2.0 * std::sqrt(2.0) - 1.0) * rho) /
                              (1.0 + rho - 4.0 * rho * rho)).epsilon(1e-12));
    }

    TEST_CASE("strict ordering of the gaussian exponents") {
        oracle::Gen g(77);
        for (int rep = 0; rep < 40; ++rep) {
            const int d = g.integer(2, 5);
            const CorrelationMatrix s(g.correlation(d));
            double prev = 0.0;
            for (int i = 1; i <= d; ++i) {
                const double a = gaussian_cone_spec(s, 1.0, 1.0, i).alpha_i;
                CHECK(a > prev);
                prev = a;
            }
        }
    }

    TEST_CASE("marshall-olkin exponents") {
        const double expectEq[] = {1.0, 1.5, 1.75};
        for (int i = 1; i <= 3; ++i) CHECK(mo_cone_spec(MoVariant::Equal, 1.0, 1.0, 3, i).alpha_i == expectEq[i - 1]);
        CHECK(mo_cone_spec(MoVariant::Proportional, 1.0, 1.0, 2, 1).alpha_i == 1.0);
        CHECK(mo_cone_spec(MoVariant::Proportional, 1.0, 1.0, 2, 2).alpha_i == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
        CHECK_THROWS_AS(mo_cone_spec(MoVariant::General, 1.0, 1.0, 2, 2), DomainError);
    }

    TEST_CASE("marshall-olkin limit measure example") {
        const auto r = RectSet::make(2, make_subset({0, 1}), Eigen::Vector2d(2, 3));
        CHECK(mo_mu(MoVariant::Equal, 1.0, 2, 2, r) == doctest::Approx(1.0 / 3.0 / std::sqrt(2.0)).epsilon(1e-14));
    }

    TEST_CASE("marshall-olkin limit matches the exact joint tail") {
        // P(Z1 > t z1, Z2 > t z2) b2^<-(t) is constant for the bivariate model
        const auto spec = mo_cone_spec(MoVariant::Equal, 1.0, 1.0, 2, 2);
        for (double t : {10.0, 1e3, 1e6}) {
            const double exact = oracle::mo2_joint_survival(1, 1, 1, 1, 1, 2 * t, 3 * t);
            const auto r = RectSet::make(2, make_subset({0, 1}), Eigen::Vector2d(2, 3));
            CHECK(exact * spec.binv(t) == doctest::Approx(mo_mu(MoVariant::Equal, 1.0, 2, 2, r)).epsilon(1e-12));
        }
    }

    TEST_CASE("homogeneity of every limit measure") {
        oracle::Gen g(5);
        const auto sigma = CorrelationMatrix::equicorrelation(3, 0.4);
        for (int rep = 0; rep < 10; ++rep) {
            for (int i = 1; i <= 3; ++i) {
                Subset S = 0;
                while (subset_size(S) != i) S = static_cast<Subset>(g.integer(1, 7));
                Eigen::Vector3d z(g.uniform(0.5, 3), g.uniform(0.5, 3), g.uniform(0.5, 3));
                const auto r = RectSet::make(3, S, z);
                for (double lam : {0.5, 2.0, 10.0}) {
                    for (auto v : {MoVariant::Equal, MoVariant::Proportional}) {
                        const double a = mo_cone_spec(v, 1.3, 1.0, 3, i).alpha_i;
                        CHECK(mo_mu(v, 1.3, 3, i, r.scaled(lam)) ==
                              doctest::Approx(std::pow(lam, -a) * mo_mu(v, 1.3, 3, i, r)).epsilon(1e-12));
                    }
                    const double a = gaussian_cone_spec(sigma, 1.3, 1.0, i).alpha_i;
                    CHECK(gaussian_mu(sigma, 1.3, i, r.scaled(lam)) ==
                          doctest::Approx(std::pow(lam, -a) * gaussian_mu(sigma, 1.3, i, r)).epsilon(1e-9));
                }
            }
        }
    }

    TEST_CASE("nesting holds for equal rates and fails for proportional rates") {
        const Eigen::Vector3d z(1.5, 2.0, 4.0);
        const Subset S = make_subset({0, 2});
        const auto r3 = RectSet::make(3, S, z);
        const auto r2 = RectSet::make(2, make_subset({0, 1}), Eigen::Vector2d(1.5, 4.0));
        CHECK(mo_mu(MoVariant::Equal, 1.0, 3, 2, r3) == doctest::Approx(mo_mu(MoVariant::Equal, 1.0, 2, 2, r2)).epsilon(1e-14));
        CHECK(std::abs(mo_mu(MoVariant::Proportional, 1.0, 3, 2, r3) - mo_mu(MoVariant::Proportional, 1.0, 2, 2, r2)) > 1e-3);
    }

    TEST_CASE("gaussian limit constant") {
        for (double rho : {-0.3, 0.0, 0.5}) {
            const auto s = CorrelationMatrix::equicorrelation(2, rho);
            const double v = gaussian_mu(s, 1.0, 2, RectSet::uniform(2, make_subset({0, 1}), 1.0));
            CHECK(v == doctest::Approx(std::pow(1 + rho, 1.5) / (2 * std::numbers::pi * std::sqrt(1 - rho))).epsilon(1e-12));
        }
        const auto w = witness_matrix(0.6, 0.6 * std::sqrt(2.0));
        CHECK(gaussian_mu(w, 1.0, 2, RectSet::uniform(3, make_subset({0, 1}), 1.0)) == 0.0);
    }

    TEST_CASE("gaussian limit against the exact orthant probability") {
        for (double rho : {-0.3, 0.0, 0.5}) {
            const auto s = CorrelationMatrix::equicorrelation(2, rho);
            const auto spec = gaussian_cone_spec(s, 1.0, 1.0, 2);
            const double mu = gaussian_mu(s, 1.0, 2, RectSet::uniform(2, make_subset({0, 1}), 1.0));
            const double t = 1e8;
            const double exact = oracle::gauss_joint_exceedance(rho, 1.0, 1.0, t);
            CHECK(exact * spec.binv(t) == doctest::Approx(mu).epsilon(0.2));
        }
    }

    TEST_CASE("gaussian tail asymptotic") {
        const auto s0 = CorrelationMatrix::identity(2);
        const auto r = RectSet::uniform(2, make_subset({0, 1}), 1.0);
        for (double t : {10.0, 1e3})
            CHECK(gaussian_tail_asymptotic(s0, 1.5, 2.0, r, t) == doctest::Approx(4.0 * std::pow(t, -3.0)).epsilon(1e-12));
        const auto s = CorrelationMatrix::equicorrelation(2, 0.5);
        const double t = 1e6;
        const double ratio = gaussian_tail_asymptotic(s, 1.0, 1.0, r, t) / oracle::gauss_joint_exceedance(0.5, 1.0, 1.0, t);
        CHECK(ratio > 0.75);
        CHECK(ratio < 1.25);
        // doubling t scales by 2^(-alpha gamma) up to a slowly varying factor
        const double q = gaussian_tail_asymptotic(s, 1.0, 1.0, r, 2 * t) / gaussian_tail_asymptotic(s, 1.0, 1.0, r, t);
        CHECK(q == doctest::Approx(std::pow(2.0, -4.0 / 3.0)).epsilon(0.02));
    }
}

TEST_SUITE("asymptotic independence") {
    TEST_CASE("gaussian verdicts") {
        for (int d : {2, 3, 5})
            for (double rho : {-0.1, 0.2, 0.5, 0.9}) {
                const auto s = CorrelationMatrix::equicorrelation(d, rho);
                CHECK(mutual_ai_gaussian(s));
                CHECK(pairwise_ai_gaussian(s));
            }
        CHECK(mutual_ai_gaussian(CorrelationMatrix::identity(4)));
        CHECK_FALSE(mutual_ai_gaussian(witness_matrix(0.6, 0.6 * std::sqrt(2.0))));
        CHECK(pairwise_ai_gaussian(witness_matrix(0.6, 0.6 * std::sqrt(2.0))));
    }

    TEST_CASE("mutual implies pairwise on random matrices") {
        oracle::Gen g(21);
        for (int rep = 0; rep < 100; ++rep) {
            const int d = g.integer(2, 5);
            const CorrelationMatrix s(g.correlation(d, 0.05));
            if (!mutual_ai_gaussian(s)) continue;
            for (int a = 0; a < d; ++a)
                for (int b = a + 1; b < d; ++b) {
                    const Eigen::Matrix2d p = s.sub(make_subset({a, b}));
                    CHECK((p.inverse() * Eigen::Vector2d::Ones()).minCoeff() > 0.0);
                }
        }
    }

    TEST_CASE("support mass") {
        const auto eq = CorrelationMatrix::equicorrelation(3, 0.5);
        for (Subset S = 1; S <= 7; ++S) CHECK(gaussian_support_mass(eq, subset_size(S), S) == SupportMass::Positive);
        const auto w = witness_matrix(0.6, 0.6 * std::sqrt(2.0));
        CHECK(gaussian_support_mass(w, 2, make_subset({0, 1})) == SupportMass::Zero);
        CHECK(gaussian_support_mass(w, 1, make_subset({2})) == SupportMass::Positive);
    }

    TEST_CASE("exact ratios") {
        const std::vector<double> grid{0.1, 0.01, 0.001};
        const auto iid = empirical_ai_ratio(RiskModel::iid(ParetoMargin(1, 1), 3), 7, 2, grid, 0, 1);
        for (const auto& r : iid) CHECK(r.ratio == doctest::Approx(r.u).epsilon(1e-12));
        const auto mo = empirical_ai_ratio(RiskModel::marshall_olkin(ParetoMargin(1, 1), MoRateFamily::equal(2)), 3, 1, grid, 0, 1);
        for (const auto& r : mo) CHECK(r.ratio == doctest::Approx(std::sqrt(r.u)).epsilon(1e-12));
    }

    TEST_CASE("gaussian ratios by counting are thread invariant") {
        const auto m = RiskModel::gaussian(ParetoMargin(1, 1), CorrelationMatrix::equicorrelation(2, 0.5));
        const std::vector<double> grid{0.1, 0.01};
        const auto a = empirical_ai_ratio(m, 3, 1, grid, 200000, 3, 1);
        const auto b = empirical_ai_ratio(m, 3, 1, grid, 200000, 3, 4);
        for (std::size_t k = 0; k < grid.size(); ++k) CHECK(a[k].ratio == b[k].ratio);
        CHECK(a[1].ratio < a[0].ratio);
    }

    TEST_CASE("mixture ratios") {
        const std::vector<double> grid{0.1, 0.01, 0.001};
        const auto triple = empirical_ai_ratio_mixture(7, 2, grid, 100000, 2);
        CHECK(triple.back().ratio > 0.9);
        const auto pair = empirical_ai_ratio_mixture(3, 1, grid, 100000, 2);
        CHECK(pair.back().ratio == doctest::Approx(oracle::mixture_pair(1e-3) / 1e-3).epsilon(0.05));
    }
}
