#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dare {

/// Raised when a likelihood has essentially no mass under the prior and
/// moment matching cannot be carried out.
class NegligibleEvidence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr double kVarianceFloor = 1e-10;
constexpr double kPointMassVariance = 1e-12;
constexpr double kNegligibleMass = 1e-300;

// ---------------------------------------------------------------------------
// Gaussian

/// Natural parameters of a (possibly improper) univariate Gaussian factor:
/// density proportional to exp(shift * x - precision * x^2 / 2).
struct GaussianNat {
    double precision = 0.0;
    double shift = 0.0;

    GaussianNat& operator+=(const GaussianNat& o) { precision += o.precision; shift += o.shift; return *this; }
    GaussianNat& operator-=(const GaussianNat& o) { precision -= o.precision; shift -= o.shift; return *this; }
    friend GaussianNat operator+(GaussianNat a, const GaussianNat& b) { return a += b; }
    friend GaussianNat operator-(GaussianNat a, const GaussianNat& b) { return a -= b; }
    friend GaussianNat operator*(double s, const GaussianNat& a) { return {s * a.precision, s * a.shift}; }

    [[nodiscard]] bool proper() const { return precision > 0.0; }
};

class Gaussian1D {
public:
    Gaussian1D() = default;
    Gaussian1D(double mean, double variance);

    static Gaussian1D from_natural(const GaussianNat& nat);
    static Gaussian1D point_mass(double value) { return {value, kPointMassVariance}; }

    [[nodiscard]] double mean() const { return mean_; }
    [[nodiscard]] double variance() const { return variance_; }
    [[nodiscard]] double stddev() const;
    [[nodiscard]] double precision() const { return 1.0 / variance_; }
    [[nodiscard]] double precision_mean() const { return mean_ / variance_; }
    [[nodiscard]] GaussianNat natural() const { return {precision(), precision_mean()}; }

    friend bool operator==(const Gaussian1D&, const Gaussian1D&) = default;

private:
    double mean_ = 0.0;
    double variance_ = 1.0;
};

// ---------------------------------------------------------------------------
// Gamma, shape/scale form. The density is proportional to
// tau^(shape-1) exp(-tau/scale).

/// Natural parameters: density proportional to tau^alpha * exp(-rate * tau).
/// A proper Gamma has alpha > -1 and rate > 0 (shape = alpha + 1, scale = 1/rate).
struct GammaNat {
    double alpha = 0.0;
    double rate = 0.0;

    GammaNat& operator+=(const GammaNat& o) { alpha += o.alpha; rate += o.rate; return *this; }
    GammaNat& operator-=(const GammaNat& o) { alpha -= o.alpha; rate -= o.rate; return *this; }
    friend GammaNat operator+(GammaNat a, const GammaNat& b) { return a += b; }
    friend GammaNat operator-(GammaNat a, const GammaNat& b) { return a -= b; }
    friend GammaNat operator*(double s, const GammaNat& a) { return {s * a.alpha, s * a.rate}; }

    [[nodiscard]] bool proper() const { return alpha > -1.0 && rate > 0.0; }
};

class GammaDist {
public:
    GammaDist() = default;
    GammaDist(double shape, double scale);

    static GammaDist from_natural(const GammaNat& nat);
    static GammaDist from_moments(double mean, double variance);
    /// Near-degenerate Gamma concentrated at `value` (variance 1e-12).
    static GammaDist point_mass(double value);

    [[nodiscard]] double shape() const { return shape_; }
    [[nodiscard]] double scale() const { return scale_; }
    [[nodiscard]] double mean() const { return shape_ * scale_; }
    [[nodiscard]] double variance() const { return shape_ * scale_ * scale_; }
    [[nodiscard]] GammaNat natural() const { return {shape_ - 1.0, 1.0 / scale_}; }
    [[nodiscard]] double log_density(double tau) const;

    friend bool operator==(const GammaDist&, const GammaDist&) = default;

private:
    double shape_ = 1.0;
    double scale_ = 1.0;
};

// ---------------------------------------------------------------------------
// Discrete distribution over a finite option set.

class Discrete {
public:
    Discrete() = default;
    explicit Discrete(Eigen::VectorXd probs);

    static Discrete uniform(int num_options);
    static Discrete point_mass(int num_options, int option);
    /// Normalises exp(log_weights); entries of -inf become exact zeros.
    static Discrete from_log_weights(const Eigen::VectorXd& log_weights);

    [[nodiscard]] const Eigen::VectorXd& probs() const { return probs_; }
    [[nodiscard]] int size() const { return static_cast<int>(probs_.size()); }
    [[nodiscard]] double operator[](int k) const { return probs_[k]; }
    /// Most probable option; entries within `tie_tolerance` of the maximum
    /// are tied and resolved toward the lowest index.
    [[nodiscard]] int mode(double tie_tolerance = 1e-4) const;

private:
    Eigen::VectorXd probs_;
};

/// Half the L1 distance between two distributions over the same options.
double total_variation(const Discrete& a, const Discrete& b);

// ---------------------------------------------------------------------------
// Scalar kernels

double std_normal_pdf(double x);
double std_normal_log_pdf(double x);
double std_normal_cdf(double x);
/// log Phi(x), accurate far into both tails.
double std_normal_log_cdf(double x);

/// P(correct | t, tau) = Phi(sqrt(tau) * t). Throws std::invalid_argument for tau <= 0.
double prob_correct(double t, double tau);

/// Differential entropy (nats) of a Gaussian with the given variance.
double gaussian_entropy(double variance);

/// Moment-matched Gaussian for t after multiplying `prior_t` by
/// Phi(sqrt(tau) t) (observed_c) or 1 - Phi(sqrt(tau) t) (otherwise).
/// Throws NegligibleEvidence when the likelihood mass is below 1e-300.
Gaussian1D probit_factor_moments(const Gaussian1D& prior_t, double tau, bool observed_c);

/// Tilted moments of t ~ N(mean, variance) under the weight
/// flat + probit * Phi(sign * sqrt(tau) * t), with flat, probit >= 0.
struct GatedMoments {
    double log_z;
    double mean;
    double variance;
    double log_phi_mass;  ///< log E[Phi(sign * sqrt(tau) * t)] under the prior
};
GatedMoments gated_probit_moments(double mean, double variance, double tau, double flat, double probit,
                                  int sign);

// ---------------------------------------------------------------------------
// Quadrature

/// Nodes and normalised weights for expectations under a distribution.
struct QuadratureRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

/// Gauss rule for expectations under Gamma(shape, scale) (generalised
/// Gauss-Laguerre via Golub-Welsch).
QuadratureRule gamma_quadrature(const GammaDist& gamma, int num_nodes);

}  // namespace dare
