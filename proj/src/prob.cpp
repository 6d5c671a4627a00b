#include "dare/prob.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace dare {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))

/// Mills ratio R(z) = Phi(-z) / phi(z) for z >= 8, by backward evaluation of
/// the continued fraction 1/(z + 1/(z + 2/(z + 3/(z + ...)))).
double mills_ratio(double z) {
    double t = z;
    for (int n = 80; n >= 1; --n) t = z + n / t;
    return 1.0 / t;
}

double log_sum_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

// ---------------------------------------------------------------------------

Gaussian1D::Gaussian1D(double mean, double variance) : mean_(mean), variance_(variance) {
    if (!(variance > 0.0) || !std::isfinite(variance) || !std::isfinite(mean))
        throw std::invalid_argument("Gaussian1D: variance must be positive and finite");
}

Gaussian1D Gaussian1D::from_natural(const GaussianNat& nat) {
    if (!(nat.precision > 0.0)) throw std::invalid_argument("Gaussian1D: improper natural parameters");
    const double var = 1.0 / nat.precision;
    return {nat.shift * var, var};
}

double Gaussian1D::stddev() const { return std::sqrt(variance_); }

// ---------------------------------------------------------------------------

GammaDist::GammaDist(double shape, double scale) : shape_(shape), scale_(scale) {
    if (!(shape > 0.0) || !(scale > 0.0) || !std::isfinite(shape) || !std::isfinite(scale))
        throw std::invalid_argument("GammaDist: shape and scale must be positive and finite");
}

GammaDist GammaDist::from_natural(const GammaNat& nat) {
    if (!nat.proper()) throw std::invalid_argument("GammaDist: improper natural parameters");
    return {nat.alpha + 1.0, 1.0 / nat.rate};
}

GammaDist GammaDist::from_moments(double mean, double variance) {
    if (!(mean > 0.0) || !(variance > 0.0)) throw std::invalid_argument("GammaDist: moments must be positive");
    return {mean * mean / variance, variance / mean};
}

GammaDist GammaDist::point_mass(double value) {
    return from_moments(value, kPointMassVariance);
}

double GammaDist::log_density(double tau) const {
    if (tau <= 0.0) return -std::numeric_limits<double>::infinity();
    return (shape_ - 1.0) * std::log(tau) - tau / scale_ - std::lgamma(shape_) - shape_ * std::log(scale_);
}

// ---------------------------------------------------------------------------

Discrete::Discrete(Eigen::VectorXd probs) : probs_(std::move(probs)) {
    if (probs_.size() == 0) throw std::invalid_argument("Discrete: empty option set");
    for (Eigen::Index i = 0; i < probs_.size(); ++i)
        if (!(probs_[i] >= 0.0 && probs_[i] <= 1.0)) throw std::invalid_argument("Discrete: entry outside [0,1]");
    if (std::abs(probs_.sum() - 1.0) > 1e-9) throw std::invalid_argument("Discrete: entries do not sum to 1");
}

Discrete Discrete::uniform(int num_options) {
    return Discrete(Eigen::VectorXd::Constant(num_options, 1.0 / num_options));
}

Discrete Discrete::point_mass(int num_options, int option) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(num_options);
    p[option] = 1.0;
    return Discrete(std::move(p));
}

Discrete Discrete::from_log_weights(const Eigen::VectorXd& log_weights) {
    const double m = log_weights.maxCoeff();
    Eigen::VectorXd p = (log_weights.array() - m).exp().matrix();
    p /= p.sum();
    return Discrete(std::move(p));
}

int Discrete::mode(double tie_tolerance) const {
    const double best = probs_.maxCoeff();
    for (int k = 0; k < size(); ++k)
        if (probs_[k] >= best - tie_tolerance) return k;
    return 0;
}

double total_variation(const Discrete& a, const Discrete& b) {
    if (a.size() != b.size()) throw std::invalid_argument("total_variation: option counts differ");
    return 0.5 * (a.probs() - b.probs()).cwiseAbs().sum();
}

// ---------------------------------------------------------------------------

double std_normal_log_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

double std_normal_pdf(double x) { return std::exp(std_normal_log_pdf(x)); }

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double std_normal_log_cdf(double x) {
    if (x < -8.0) return std_normal_log_pdf(x) + std::log(mills_ratio(-x));
    if (x > 8.0) return std::log1p(-std::exp(std_normal_log_pdf(x)) * mills_ratio(x));
    return std::log(std_normal_cdf(x));
}

double prob_correct(double t, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("prob_correct: tau must be positive");
    return std_normal_cdf(std::sqrt(tau) * t);
}

double gaussian_entropy(double variance) {
    if (!(variance > 0.0)) throw std::invalid_argument("gaussian_entropy: variance must be positive");
    return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * variance);
}

GatedMoments gated_probit_moments(double mean, double variance, double tau, double flat, double probit,
                                  int sign) {
    // Z(m) = flat + probit * Phi(sign * m / S), S^2 = v + 1/tau.
    const double s2 = variance + 1.0 / tau;
    const double s = std::sqrt(s2);
    const double z = sign * mean / s;
    const double log_phi_mass = std_normal_log_cdf(z);
    const double neg_inf = -std::numeric_limits<double>::infinity();
    const double log_probit = probit > 0.0 ? std::log(probit) + log_phi_mass : neg_inf;
    const double log_flat = flat > 0.0 ? std::log(flat) : neg_inf;
    const double log_z = log_sum_exp(log_flat, log_probit);
    if (!(log_z > std::log(kNegligibleMass)))
        throw NegligibleEvidence("gated probit factor has negligible mass under its prior");

    // r = probit * phi(z) / Z; d log Z / dm = sign * r / S; d^2 log Z / dm^2 = -z r / S^2 - g^2.
    const double r = probit > 0.0 ? std::exp(std::log(probit) + std_normal_log_pdf(z) - log_z) : 0.0;
    const double g = sign * r / s;
    const double h = -z * r / s2 - g * g;
    const double new_mean = mean + variance * g;
    const double new_var = std::max(variance + variance * variance * h, kVarianceFloor);
    return {log_z, new_mean, new_var, log_phi_mass};
}

Gaussian1D probit_factor_moments(const Gaussian1D& prior_t, double tau, bool observed_c) {
    if (!(tau > 0.0)) throw std::invalid_argument("probit_factor_moments: tau must be positive");
    const auto m = gated_probit_moments(prior_t.mean(), prior_t.variance(), tau, 0.0, 1.0, observed_c ? 1 : -1);
    return {m.mean, m.variance};
}

// ---------------------------------------------------------------------------

QuadratureRule gamma_quadrature(const GammaDist& gamma, int num_nodes) {
    if (num_nodes < 1) throw std::invalid_argument("gamma_quadrature: need at least one node");
    const double alpha = gamma.shape() - 1.0;
    Eigen::VectorXd diag(num_nodes);
    Eigen::VectorXd sub(std::max(num_nodes - 1, 0));
    for (int i = 0; i < num_nodes; ++i) diag[i] = 2.0 * i + alpha + 1.0;
    for (int i = 1; i < num_nodes; ++i) sub[i - 1] = std::sqrt(i * (i + alpha));

    QuadratureRule rule;
    if (num_nodes == 1) {
        rule.nodes = Eigen::VectorXd::Constant(1, gamma.mean());
        rule.weights = Eigen::VectorXd::Ones(1);
        return rule;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    rule.nodes = gamma.scale() * solver.eigenvalues();
    rule.weights = solver.eigenvectors().row(0).transpose().array().square().matrix();
    rule.weights /= rule.weights.sum();
    return rule;
}

}  // namespace dare
