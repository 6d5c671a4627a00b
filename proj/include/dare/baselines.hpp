#pragma once

#include "dare/ep.hpp"
#include "dare/model.hpp"

#include <optional>
#include <vector>

namespace dare {

/// Per-question modal response; std::nullopt marks a question nobody answered.
/// Ties go to the lowest option index.
std::vector<std::optional<int>> majority_vote(const ResponseDataset& data);

/// Builds the graph for `variant` and runs EP on it.
InferenceReport infer_variant(const ResponseDataset& data, const GoldSet& gold, const PriorSpec& priors,
                              ModelVariant variant, const EpConfig& config = {});

/// Mode of every answer posterior (lowest index among ties).
std::vector<int> inferred_answers(const Posteriors& post);

struct ScoreVector {
    std::vector<int> raw_score;        ///< responses matching the true answers
    std::vector<int> model_raw_score;  ///< responses matching the inferred answers
};

/// Raw scores against `truth` (questions missing from it never count) and
/// model raw scores against the modes of `post`.
ScoreVector model_raw_scores(const ResponseDataset& data, const Posteriors& post, const GoldSet& truth);

/// Fraction of a question's respondents who chose its gold option; nullopt
/// when nobody responded.
std::vector<std::optional<double>> solve_rates(const ResponseDataset& data, const GoldSet& gold);

/// Static test of `budget` questions: for i = 1..budget, the unused question
/// whose solve rate is nearest i / (budget + 1), ties to the lowest id.
std::vector<std::size_t> static_question_set(const ResponseDataset& data, const GoldSet& gold, int budget);

}  // namespace dare
