#pragma once

#include "dare/model.hpp"
#include "dare/prob.hpp"

#include <cstddef>
#include <optional>

namespace dare {

struct EpConfig {
    int max_sweeps = 100;
    double convergence_eps = 1e-4;  ///< max absolute change of any marginal natural parameter per sweep
    double damping = 0.8;           ///< weight of the fresh message; 1 disables damping
    int tau_quadrature_nodes = 32;  ///< Learned discrimination only

    void check() const;
};

struct InferenceReport {
    Posteriors posteriors;
    int sweeps_used = 0;
    bool converged = false;
    double max_residual = 0.0;
    std::size_t skipped_updates = 0;      ///< improper cavity or negligible evidence
    std::size_t variance_floor_hits = 0;  ///< projections clipped to the variance floor
    bool degenerate = false;              ///< floor hits recurred in the final sweep
};

/// Expectation propagation over the gated-probit response model.
///
/// Cells are visited in the graph's (question-major) order. Each visit forms
/// the cavity of the four incident variables, computes the exact tilted
/// distribution by summing the two gate branches (and a quadrature over the
/// precision when it is learned), projects onto Gaussian/Gamma/Discrete
/// families, and stores the damped natural-parameter message.
InferenceReport infer(const FactorGraph& graph, const EpConfig& config = {});

/// Cavity beliefs incident on one cell factor.
struct CellCavity {
    Gaussian1D ability;
    Gaussian1D difficulty;
    /// Expectation rule for the precision under its cavity (one node when fixed).
    QuadratureRule precision;
    Discrete answer;
    int response = 0;
};

/// Exact tilted statistics of one cell, and the outgoing EP messages they imply.
struct CellUpdate {
    double log_evidence = 0.0;
    Gaussian1D ability;     ///< projected tilted marginal
    Gaussian1D difficulty;  ///< projected tilted marginal
    double precision_mean = 0.0;
    double precision_variance = 0.0;
    Eigen::VectorXd answer_log_message;  ///< log message to the answer variable, unnormalised
    double p_correct = 0.5;
    Gaussian1D t;

    GaussianNat to_ability;
    GaussianNat to_difficulty;
};

/// Tilted moments and messages for a single cell. Throws NegligibleEvidence
/// when the tilted normaliser is below 1e-300.
CellUpdate cell_message_update(const CellCavity& cavity);

/// Precision quadrature rule re-weighted from `rule` (built for `rule_source`)
/// toward the Gamma with natural parameters `target`.
QuadratureRule reweight_rule(const QuadratureRule& rule, const GammaNat& rule_source, const GammaNat& target);

/// E[Phi(sqrt(tau) (a - d))] under independent marginals.
double expected_prob_correct(const Gaussian1D& ability, const Gaussian1D& difficulty, const QuadratureRule& precision);

/// Expectation rule for the precision of question `q` under `post`.
QuadratureRule precision_rule(const FactorGraph& graph, const Posteriors& post, std::size_t q, int nodes);

/// Predictive distribution of participant p's response to question q.
Discrete predictive_response(const FactorGraph& graph, const Posteriors& post, std::size_t participant,
                             std::size_t question, int tau_nodes = 32);

/// Cell posterior for a possibly unobserved (p, q) pair under `post`.
CellPosterior query_cell(const FactorGraph& graph, const Posteriors& post, std::size_t participant,
                         std::size_t question, int tau_nodes = 32);

}  // namespace dare
