#pragma once

#include "dare/ep.hpp"
#include "dare/eval.hpp"
#include "dare/model.hpp"

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dare {

/// A file could not be read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FileManifest {
    std::string responses;
    std::string questions;
    std::optional<std::string> gold;
};

/// A dataset as read from files, with the label of every option index.
struct LoadedDataset {
    ResponseDataset data;
    GoldSet gold;
    /// option_labels[q][k] is the file label of option k of question q.
    std::vector<std::vector<std::string>> option_labels;
};

/// Reads the three CSV files (header rows mandatory).
///
/// Option labels resolve per question: against the question's option texts
/// when it has them, otherwise as integer indices when every label of the
/// question is one, otherwise by the sorted order of its distinct labels.
/// Every problem is reported with its file, line and column in one
/// ValidationError; unreadable files raise IoError.
LoadedDataset load_dataset(const FileManifest& manifest);

/// Writes files that load_dataset reads back into an identical dataset.
void save_dataset(const LoadedDataset& loaded, const FileManifest& manifest);

/// Labels for a dataset with no file of origin: option texts when present,
/// otherwise the option indices.
std::vector<std::vector<std::string>> default_option_labels(const ResponseDataset& data);

/// Relevance judgments in the TREC crowdsourcing shape.
///
/// `judgments` lines are `topic worker doc label` and `qrels` lines are
/// `topic [iteration] doc label`, separated by whitespace or commas; blank
/// lines and lines starting with '#' are skipped. A question is a
/// (topic, doc) pair with options "irrelevant" and "relevant"; labels >= 1
/// count as relevant. Questions without a qrel are dropped, and a worker's
/// repeated judgment of a question keeps the first one.
LoadedDataset load_trec(const std::string& judgments, const std::string& qrels);

/// The `num_questions` questions with the most responses (ties by id), then
/// only the workers with at least `min_answers` responses among them.
LoadedDataset trec_subset(const LoadedDataset& loaded, int num_questions = 369, int min_answers = 30);

/// Posteriors together with the ids needed to interpret them.
struct PosteriorsDocument {
    std::vector<std::string> question_ids;
    std::vector<std::vector<std::string>> option_labels;
    std::vector<std::string> participant_ids;
    Posteriors posteriors;
    bool include_cells = false;  ///< cells carry participant, question and p_correct only
};

PosteriorsDocument make_document(const LoadedDataset& loaded, Posteriors posteriors, bool include_cells = false);

/// JSON text with sorted keys and shortest round-trip number formatting.
/// Throws ValidationError if an answer distribution does not sum to 1
/// within 1e-9.
std::string posteriors_to_json(const PosteriorsDocument& doc);
PosteriorsDocument posteriors_from_json(const std::string& text);
void save_posteriors(const PosteriorsDocument& doc, const std::string& path);
PosteriorsDocument load_posteriors(const std::string& path);

// Configuration ------------------------------------------------------------

nlohmann::json to_json(const PriorSpec& p);
nlohmann::json to_json(const EpConfig& c);
/// Fields absent from `j` keep their value in `base`.
PriorSpec priors_from_json(const nlohmann::json& j, PriorSpec base = {});
EpConfig ep_from_json(const nlohmann::json& j, EpConfig base = {});

/// Applies DARE_PRIOR_ABILITY ("mean,variance"), DARE_PRIOR_DIFFICULTY
/// ("mean,variance"), DARE_PRIOR_PRECISION ("shape,scale") and
/// DARE_DISCRIMINATION ("learned" or "fixed:<v>") from the environment.
PriorSpec priors_from_env(PriorSpec base = {});

/// Parses "learned" or "fixed:<v>" into `priors`.
void apply_discrimination(PriorSpec& priors, const std::string& text);

// Experiment output ---------------------------------------------------------

/// `series,x,mean,sd,sem,n`; an undefined mean is written as "undefined".
std::string summary_csv(const MetricReport& report);
/// `series,x,index,value`.
std::string records_csv(const MetricReport& report);

/// Shortest decimal text that reads back as the same double.
std::string format_double(double v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace dare
