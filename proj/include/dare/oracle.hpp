#pragma once

#include "dare/model.hpp"

namespace dare {

/// Grid/enumeration settings for the brute-force posterior.
struct OracleConfig {
    int grid_points = 21;       ///< per continuous ability/difficulty dimension
    double grid_range = 4.0;    ///< half-width of the grid in prior standard deviations
    int tau_grid_points = 15;   ///< Learned mode only; quantile-spaced Gamma nodes
    int max_participants = 3;
    int max_questions = 3;
    int max_options = 3;
};

/// Exact posteriors (up to grid resolution) for tiny instances: enumeration
/// over answers and grid integration over abilities, difficulties and
/// precisions, using the fact that each column touches only its own
/// difficulty/precision/answer. Throws ValidationError when the instance
/// exceeds the configured caps.
Posteriors exact_posteriors(const ResponseDataset& data, const GoldSet& gold, const PriorSpec& priors,
                            ModelVariant variant = ModelVariant::Full, const OracleConfig& config = {});

/// Marginal likelihood of the observed responses on the same grid, with gold
/// answers treated as given. Ratios of evidences yield exact predictives.
double exact_evidence(const ResponseDataset& data, const GoldSet& gold, const PriorSpec& priors,
                      ModelVariant variant = ModelVariant::Full, const OracleConfig& config = {});

}  // namespace dare
