#pragma once

#include "dare/ep.hpp"
#include "dare/model.hpp"

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dare {

/// Entropy reduction 0.5 * ln(var_before / var_after) in nats.
double entropy_reduction(double var_before, double var_after);

/// A question bank with every answer known and question parameters
/// calibrated on a reference population.
struct QuestionBank {
    std::vector<QuestionSpec> questions;
    GoldSet gold;           ///< total
    QuestionClamps clamps;  ///< difficulty and precision per question

    /// Throws ValidationError naming every question without a gold answer
    /// or with missing clamps.
    void check() const;
};

/// Posterior-mean question parameters inferred from `data` with all gold
/// answers revealed, optionally leaving one participant out.
QuestionClamps calibrate(const ResponseDataset& data, const GoldSet& gold, const PriorSpec& priors,
                         const EpConfig& ep = {}, std::optional<std::size_t> leave_out = std::nullopt);

struct SessionSettings {
    PriorSpec priors;  ///< only the ability prior is used
    EpConfig ep;
    int budget = 10;
};

/// One adaptive test session. Transitions return new values and never
/// modify the state they start from.
struct SessionState {
    std::shared_ptr<const QuestionBank> bank;
    std::string participant;
    SessionSettings settings;
    std::vector<std::pair<std::size_t, int>> asked;  ///< (question index, response) in order
    Gaussian1D ability;
    bool converged = true;  ///< of the inference behind `ability`

    [[nodiscard]] bool is_asked(std::size_t q) const;
    [[nodiscard]] bool exhausted() const;
};

class SessionExhausted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DuplicateQuestion : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

SessionState start_session(std::shared_ptr<const QuestionBank> bank, std::string participant,
                           const SessionSettings& settings);

/// Ability posterior and convergence flag for the session's evidence plus one
/// optional extra response.
struct AbilityFit {
    Gaussian1D ability;
    bool converged = true;
};
AbilityFit fit_ability(const SessionState& state, std::optional<std::pair<std::size_t, int>> extra = std::nullopt);

struct ResponseBranch {
    int response = 0;
    double probability = 0.0;  ///< predictive probability under the current state
    double variance_after = 0.0;
    bool converged = true;
};

struct QuestionScore {
    std::size_t question = 0;
    double expected_entropy_reduction = 0.0;
    std::vector<ResponseBranch> breakdown;
    bool reliable = true;  ///< every branch converged
};

/// Predictive distribution of the participant's response to `question`.
Discrete session_predictive(const SessionState& state, std::size_t question);

/// Scores an unasked question by full re-inference for every response.
QuestionScore score_question(const SessionState& state, std::size_t question);

/// Optional restriction of the candidate questions (by index).
using CandidateFilter = std::vector<bool>;

/// Highest-scoring unasked, reliable question; ties go to the lowest id.
/// Throws SessionExhausted when the budget is spent or nothing is scorable.
QuestionScore select_next(const SessionState& state, const CandidateFilter* allowed = nullptr);
std::size_t next_question(const SessionState& state, const CandidateFilter* allowed = nullptr);

/// Throws ValidationError for an unknown question or out-of-range response,
/// DuplicateQuestion for a question already answered and SessionExhausted
/// when the budget is spent.
SessionState submit_response(const SessionState& state, std::size_t question, int response);

/// Correct answers so far plus the expected number correct on the rest.
double estimate_raw_score(const SessionState& state);

}  // namespace dare
