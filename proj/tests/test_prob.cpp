#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dare/prob.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace dare;

namespace {

// Independent route to Phi through std::erf.
double erf_cdf(double x) { return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)); }

// Composite Simpson over [lo, hi] with n (even) intervals.
template <class F>
double simpson(F f, double lo, double hi, int n) {
    const double h = (hi - lo) / n;
    double s = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
    return s * h / 3.0;
}

struct Moments {
    double mass, mean, var;
};

// Brute-force moments of N(t; m, v) * lik(t).
template <class L>
Moments quadrature_moments(double m, double v, L lik, int n = 1000000) {
    const double sd = std::sqrt(v);
    const double lo = m - 12 * sd, hi = m + 12 * sd;
    auto dens = [&](double t) { return std::exp(-0.5 * (t - m) * (t - m) / v) / std::sqrt(2 * std::numbers::pi * v); };
    const double z = simpson([&](double t) { return dens(t) * lik(t); }, lo, hi, n);
    const double m1 = simpson([&](double t) { return t * dens(t) * lik(t); }, lo, hi, n) / z;
    const double m2 = simpson([&](double t) { return (t - m1) * (t - m1) * dens(t) * lik(t); }, lo, hi, n) / z;
    return {z, m1, m2};
}

}  // namespace

TEST_CASE("std_normal_pdf") {
    CHECK(std_normal_pdf(0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-15));
    CHECK(std_normal_pdf(1.0) == doctest::Approx(0.24197072451914335).epsilon(1e-14));
    CHECK(std_normal_pdf(40.0) == 0.0);
    CHECK(std_normal_pdf(-1e3) == 0.0);
}

TEST_CASE("std_normal_cdf") {
    CHECK(std_normal_cdf(0.0) == 0.5);
    CHECK(std::abs(std_normal_cdf(40.0) - 1.0) <= 1e-15);
    CHECK(std_normal_cdf(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-14));
    for (double x = -30.0; x <= 30.0; x += 0.37) CHECK(std::abs(std_normal_cdf(x) + std_normal_cdf(-x) - 1.0) <= 1e-12);
}

TEST_CASE("std_normal_log_cdf is accurate in both tails") {
    // 1 + erf(x) cancels below about -5, so the erf route is only used above it.
    for (double x = -4.9; x < 7.9; x += 0.1) CHECK(std_normal_log_cdf(x) == doctest::Approx(std::log(erf_cdf(x))).epsilon(1e-10));
    // Across the switch to the continued fraction.
    for (double x = -12.0; x <= -6.0; x += 0.25)
        CHECK(std_normal_log_cdf(x) == doctest::Approx(std::log(0.5 * std::erfc(-x / std::numbers::sqrt2))).epsilon(1e-12));
    // Deep tail: log Phi(-40) from the asymptotic series to many terms.
    const double x = -40.0;
    const double series = 1 - 1 / (x * x) + 3 / std::pow(x, 4) - 15 / std::pow(x, 6) + 105 / std::pow(x, 8);
    CHECK(std_normal_log_cdf(x) == doctest::Approx(-0.5 * x * x - std::log(-x) - 0.5 * std::log(2 * std::numbers::pi) + std::log(series)).epsilon(1e-12));
    CHECK(std_normal_log_cdf(9.0) == doctest::Approx(-0.5 * std::erfc(9.0 / std::numbers::sqrt2)).epsilon(1e-8));
}

TEST_CASE("prob_correct examples") {
    CHECK(prob_correct(0.0, 7.3) == 0.5);
    CHECK(prob_correct(1.0, 1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-12));
    CHECK(prob_correct(-2.0, 4.0) == doctest::Approx(3.167124183311992e-05).epsilon(1e-10));
    CHECK_THROWS_AS(prob_correct(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(prob_correct(1.0, -2.0), std::invalid_argument);
}

TEST_CASE("prob_correct symmetry and monotonicity on a grid") {
    for (double tau : {0.01, 0.3, 1.0, 4.0, 50.0}) {
        double prev = -1.0;
        for (double t = -6.0; t <= 6.0; t += 0.05) {
            const double p = prob_correct(t, tau);
            CHECK(std::abs(p + prob_correct(-t, tau) - 1.0) <= 1e-12);
            CHECK(p >= prev);
            prev = p;
        }
    }
    for (double t : {-2.0, -0.5, 0.5, 2.0}) {
        double prev = prob_correct(t, 0.01);
        for (double tau = 0.02; tau < 20.0; tau *= 1.3) {
            const double p = prob_correct(t, tau);
            if (t > 0) CHECK(p >= prev);
            else CHECK(p <= prev);
            prev = p;
        }
    }
}

TEST_CASE("prob_correct matches its integral representation") {
    // P(c=T) = int phi(sqrt(tau)(x - t)) step(x) sqrt(tau) dx.
    for (double tau : {0.25, 1.0, 3.0}) {
        for (double t = -2.0; t <= 2.0; t += 0.5) {
            const double sd = 1.0 / std::sqrt(tau);
            const double hi = t + 12 * sd;
            const double integral = hi <= 0.0 ? 0.0 : simpson([&](double x) {
                const double u = std::sqrt(tau) * (x - t);
                return std::exp(-0.5 * u * u) / std::sqrt(2 * std::numbers::pi) * std::sqrt(tau);
            }, 0.0, hi, 20000);
            CHECK(std::abs(integral - prob_correct(t, tau)) <= 1e-8);
        }
    }
}

TEST_CASE("gaussian_entropy") {
    CHECK(std::abs(gaussian_entropy(1.0 / (2 * std::numbers::pi * std::numbers::e))) <= 1e-15);
    CHECK(gaussian_entropy(1.0) == doctest::Approx(1.4189385332046727).epsilon(1e-15));
    const double v = 0.37;
    CHECK(gaussian_entropy(std::exp(2.0) * v) - gaussian_entropy(v) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(gaussian_entropy(0.0), std::invalid_argument);
}

TEST_CASE("probit_factor_moments: truncation limit") {
    const auto post = probit_factor_moments(Gaussian1D(0.0, 1.0), 1e14, true);
    CHECK(post.mean() == doctest::Approx(0.7978845608028654).epsilon(1e-6));
    CHECK(post.variance() == doctest::Approx(0.36338022763241866).epsilon(1e-6));
}

TEST_CASE("probit_factor_moments: vanishing discrimination leaves the prior") {
    const Gaussian1D prior(0.7, 2.3);
    for (bool c : {true, false}) {
        const auto post = probit_factor_moments(prior, 1e-20, c);
        CHECK(std::abs(post.mean() - prior.mean()) <= 1e-9);
        CHECK(std::abs(post.variance() - prior.variance()) <= 1e-9);
    }
}

TEST_CASE("probit_factor_moments matches dense quadrature") {
    struct Case { double m, v, tau; };
    for (const auto& cs : {Case{1.0, 0.25, 1.0}, Case{0.0, 1.0, 1.0}, Case{-1.5, 2.0, 0.5}, Case{2.0, 0.5, 4.0},
                           Case{-0.3, 0.1, 10.0}, Case{0.4, 3.0, 0.2}}) {
        for (bool c : {true, false}) {
            const double sgn = c ? 1.0 : -1.0;
            const auto q = quadrature_moments(cs.m, cs.v, [&](double t) { return erf_cdf(sgn * std::sqrt(cs.tau) * t); });
            const auto post = probit_factor_moments(Gaussian1D(cs.m, cs.v), cs.tau, c);
            CHECK(std::abs(post.mean() - q.mean) <= 1e-8);
            CHECK(std::abs(post.variance() - q.var) <= 1e-8);
            CHECK(post.variance() < cs.v);
        }
    }
}

TEST_CASE("probit_factor_moments flags negligible evidence") {
    CHECK_THROWS_AS(probit_factor_moments(Gaussian1D(-60.0, 1e-4), 1e6, true), NegligibleEvidence);
    // Deep but representable tail is still handled.
    const auto post = probit_factor_moments(Gaussian1D(-20.0, 1.0), 1.0, true);
    CHECK(post.variance() > 0.0);
    CHECK(post.variance() < 1.0);
}

TEST_CASE("gated_probit_moments reduces to the probit factor and matches quadrature") {
    const double m = 0.3, v = 0.8, tau = 2.0;
    const auto q = quadrature_moments(m, v, [&](double t) { return 0.125 + 0.6 * erf_cdf(std::sqrt(tau) * t); });
    const auto g = gated_probit_moments(m, v, tau, 0.125, 0.6, +1);
    CHECK(std::exp(g.log_z) == doctest::Approx(q.mass).epsilon(1e-9));
    CHECK(std::abs(g.mean - q.mean) <= 1e-8);
    CHECK(std::abs(g.variance - q.var) <= 1e-8);
}

TEST_CASE("Gaussian natural round trip") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> mean(-50, 50), logv(-8, 8);
    for (int i = 0; i < 1000; ++i) {
        const Gaussian1D g(mean(rng), std::exp(logv(rng)));
        const auto back = Gaussian1D::from_natural(g.natural());
        CHECK(std::abs(back.variance() - g.variance()) <= 1e-12 * g.variance());
        CHECK(std::abs(back.mean() - g.mean()) <= 1e-12 * std::max(1.0, std::abs(g.mean())));
    }
    CHECK_THROWS_AS(Gaussian1D(0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(Gaussian1D::from_natural({-1.0, 0.0}), std::invalid_argument);
}

TEST_CASE("GammaDist") {
    const GammaDist g(2.0, 0.5);
    CHECK(g.mean() == 1.0);
    CHECK(g.variance() == 0.5);
    const auto back = GammaDist::from_natural(g.natural());
    CHECK(back.shape() == doctest::Approx(2.0));
    CHECK(back.scale() == doctest::Approx(0.5));
    const auto mm = GammaDist::from_moments(3.0, 0.25);
    CHECK(mm.mean() == doctest::Approx(3.0));
    CHECK(mm.variance() == doctest::Approx(0.25));
    CHECK_THROWS_AS(GammaDist(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(GammaDist(1.0, -1.0), std::invalid_argument);
}

TEST_CASE("Discrete invariants and mode tie-break") {
    CHECK_THROWS_AS(Discrete(Eigen::Vector2d(0.6, 0.6)), std::invalid_argument);
    CHECK_THROWS_AS(Discrete(Eigen::Vector2d(-0.1, 1.1)), std::invalid_argument);
    CHECK(Discrete::uniform(4).mode() == 0);
    CHECK(Discrete(Eigen::Vector3d(0.2, 0.5, 0.3)).mode() == 1);
    CHECK(Discrete::point_mass(3, 2).mode() == 2);
    CHECK(total_variation(Discrete::point_mass(2, 0), Discrete::point_mass(2, 1)) == 1.0);
}

TEST_CASE("gamma_quadrature integrates Gamma moments") {
    for (const auto& g : {GammaDist(2.0, 0.5), GammaDist(0.6, 3.0), GammaDist(40.0, 0.01), GammaDist(1e6, 1e-6)}) {
        const auto rule = gamma_quadrature(g, 32);
        CHECK(rule.weights.sum() == doctest::Approx(1.0));
        const double m1 = rule.weights.dot(rule.nodes);
        const double m2 = rule.weights.dot(rule.nodes.cwiseProduct(rule.nodes));
        CHECK(m1 == doctest::Approx(g.mean()).epsilon(1e-10));
        CHECK(m2 - m1 * m1 == doctest::Approx(g.variance()).epsilon(1e-6));
        // E[1/(1+tau)] against dense quadrature of the density.
        const double exact = simpson([&](double t) { return t <= 0 ? 0.0 : std::exp(g.log_density(t)) / (1.0 + t); },
                                     1e-12, g.mean() + 40 * std::sqrt(g.variance()), 400000);
        if (g.shape() >= 1.0 && g.shape() < 100)
            CHECK(rule.weights.dot((1.0 + rule.nodes.array()).inverse().matrix()) == doctest::Approx(exact).epsilon(1e-7));
    }
}
