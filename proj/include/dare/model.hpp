#pragma once

#include "dare/prob.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dare {

/// Raised when a dataset, gold set or configuration breaks a structural rule.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<std::string> violations);
    [[nodiscard]] const std::vector<std::string>& violations() const { return violations_; }

private:
    std::vector<std::string> violations_;
};

struct QuestionSpec {
    std::string id;
    int num_options = 2;
    std::optional<std::string> display_text;
    std::vector<std::string> option_texts;  ///< empty, or exactly num_options labels
};

struct ResponseRecord {
    std::size_t participant = 0;  ///< index into ResponseDataset::participants
    std::size_t question = 0;     ///< index into ResponseDataset::questions
    int response = 0;             ///< option index
};

/// Sparse participant x question response matrix. Questions and participants
/// are addressed by dense index; ids are kept for ingestion and output.
struct ResponseDataset {
    std::vector<QuestionSpec> questions;
    std::vector<std::string> participants;
    std::vector<ResponseRecord> records;

    std::size_t add_question(QuestionSpec spec);
    /// Returns the index of `id`, declaring it if new.
    std::size_t participant_index(const std::string& id);
    [[nodiscard]] std::optional<std::size_t> find_question(const std::string& id) const;
    [[nodiscard]] std::optional<std::size_t> find_participant(const std::string& id) const;
    /// Records of one question, in insertion order.
    [[nodiscard]] std::vector<ResponseRecord> records_for_question(std::size_t q) const;
    [[nodiscard]] std::vector<ResponseRecord> records_for_participant(std::size_t p) const;

    /// Copy restricted to the given participants (order preserved as given).
    [[nodiscard]] ResponseDataset subset_participants(const std::vector<std::size_t>& keep) const;

    friend bool operator==(const ResponseDataset& a, const ResponseDataset& b);
};

/// Known correct options, keyed by question index.
using GoldSet = std::map<std::size_t, int>;

enum class DiscriminationMode { Learned, Fixed };

struct PriorSpec {
    Gaussian1D ability{0.0, 1.0};
    Gaussian1D difficulty{0.0, 1.0};
    GammaDist precision{2.0, 0.5};
    DiscriminationMode discrimination = DiscriminationMode::Learned;
    double fixed_precision = 1.0;  ///< used when discrimination == Fixed

    void check() const;
};

enum class ModelVariant { Full, QuestionOnly, ParticipantOnly };

std::string to_string(ModelVariant v);
ModelVariant parse_variant(const std::string& s);

struct CellPosterior {
    std::size_t participant = 0;
    std::size_t question = 0;
    double p_correct = 0.5;
    Discrete response_dist;
    Gaussian1D t;
};

struct Posteriors {
    std::vector<Discrete> answer;        ///< per question
    std::vector<Gaussian1D> ability;     ///< per participant
    std::vector<Gaussian1D> difficulty;  ///< per question
    std::vector<GammaDist> precision;    ///< per question
    std::vector<CellPosterior> cells;    ///< per observed cell, graph order
};

// ---------------------------------------------------------------------------
// Declarative factor graph

struct PrecisionNode {
    GammaDist prior;
    std::optional<double> fixed;  ///< point mass when set
};

struct AnswerNode {
    int num_options = 2;
    std::optional<int> gold;
};

struct CellFactor {
    std::size_t participant = 0;
    std::size_t question = 0;
    int response = 0;
};

struct FactorGraph {
    std::vector<Gaussian1D> ability_prior;
    std::vector<bool> ability_clamped;
    std::vector<Gaussian1D> difficulty_prior;
    std::vector<bool> difficulty_clamped;
    std::vector<PrecisionNode> precision;
    std::vector<AnswerNode> answer;
    std::vector<CellFactor> cells;  ///< sorted question-major, participant-minor

    [[nodiscard]] std::size_t num_participants() const { return ability_prior.size(); }
    [[nodiscard]] std::size_t num_questions() const { return answer.size(); }
    /// Ability, difficulty, precision and answer variables, counting clamped ones.
    [[nodiscard]] std::size_t num_latent_variables() const {
        return num_participants() + 3 * num_questions();
    }
    /// Posteriors carrying only the prior/clamp of every variable.
    [[nodiscard]] Posteriors prior_posteriors() const;
};

/// Point estimates of question parameters used to clamp a graph.
struct QuestionClamps {
    std::vector<double> difficulty;
    std::vector<double> precision;
};

std::vector<std::string> validate(const ResponseDataset& data, const GoldSet& gold);

FactorGraph build_graph(const ResponseDataset& data, const GoldSet& gold, const PriorSpec& priors,
                        ModelVariant variant = ModelVariant::Full);

/// Clamps every difficulty and precision of `graph` to the given values.
void clamp_questions(FactorGraph& graph, const QuestionClamps& clamps);

}  // namespace dare
