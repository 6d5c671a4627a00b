#include "dare/model.hpp"

#include <algorithm>
#include <set>
#include <tuple>
#include <utility>

namespace dare {

namespace {

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out = "validation failed";
    for (const auto& l : lines) out += "\n  " + l;
    return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : std::runtime_error(join_lines(violations)), violations_(std::move(violations)) {}

// ---------------------------------------------------------------------------

std::size_t ResponseDataset::add_question(QuestionSpec spec) {
    questions.push_back(std::move(spec));
    return questions.size() - 1;
}

std::size_t ResponseDataset::participant_index(const std::string& id) {
    if (auto found = find_participant(id)) return *found;
    participants.push_back(id);
    return participants.size() - 1;
}

std::optional<std::size_t> ResponseDataset::find_question(const std::string& id) const {
    for (std::size_t i = 0; i < questions.size(); ++i)
        if (questions[i].id == id) return i;
    return std::nullopt;
}

std::optional<std::size_t> ResponseDataset::find_participant(const std::string& id) const {
    for (std::size_t i = 0; i < participants.size(); ++i)
        if (participants[i] == id) return i;
    return std::nullopt;
}

std::vector<ResponseRecord> ResponseDataset::records_for_question(std::size_t q) const {
    std::vector<ResponseRecord> out;
    for (const auto& r : records)
        if (r.question == q) out.push_back(r);
    return out;
}

std::vector<ResponseRecord> ResponseDataset::records_for_participant(std::size_t p) const {
    std::vector<ResponseRecord> out;
    for (const auto& r : records)
        if (r.participant == p) out.push_back(r);
    return out;
}

ResponseDataset ResponseDataset::subset_participants(const std::vector<std::size_t>& keep) const {
    ResponseDataset out;
    out.questions = questions;
    std::vector<std::ptrdiff_t> remap(participants.size(), -1);
    for (std::size_t i = 0; i < keep.size(); ++i) {
        remap.at(keep[i]) = static_cast<std::ptrdiff_t>(i);
        out.participants.push_back(participants[keep[i]]);
    }
    for (const auto& r : records) {
        if (r.participant < remap.size() && remap[r.participant] >= 0)
            out.records.push_back({static_cast<std::size_t>(remap[r.participant]), r.question, r.response});
    }
    return out;
}

bool operator==(const ResponseDataset& a, const ResponseDataset& b) {
    if (a.participants != b.participants || a.questions.size() != b.questions.size() ||
        a.records.size() != b.records.size())
        return false;
    for (std::size_t i = 0; i < a.questions.size(); ++i) {
        const auto& x = a.questions[i];
        const auto& y = b.questions[i];
        if (x.id != y.id || x.num_options != y.num_options || x.display_text != y.display_text ||
            x.option_texts != y.option_texts)
            return false;
    }
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        const auto& x = a.records[i];
        const auto& y = b.records[i];
        if (x.participant != y.participant || x.question != y.question || x.response != y.response) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------

void PriorSpec::check() const {
    if (discrimination == DiscriminationMode::Fixed && !(fixed_precision > 0.0))
        throw ValidationError({"fixed discrimination requires a positive precision"});
}

std::string to_string(ModelVariant v) {
    switch (v) {
        case ModelVariant::Full: return "full";
        case ModelVariant::QuestionOnly: return "question";
        case ModelVariant::ParticipantOnly: return "participant";
    }
    return "full";
}

ModelVariant parse_variant(const std::string& s) {
    if (s == "full" || s == "dare") return ModelVariant::Full;
    if (s == "question" || s == "question-only") return ModelVariant::QuestionOnly;
    if (s == "participant" || s == "participant-only") return ModelVariant::ParticipantOnly;
    throw ValidationError({"unknown model variant '" + s + "' (expected full|question|participant)"});
}

// ---------------------------------------------------------------------------

std::vector<std::string> validate(const ResponseDataset& data, const GoldSet& gold) {
    std::vector<std::string> out;
    std::set<std::string> seen_ids;
    for (std::size_t q = 0; q < data.questions.size(); ++q) {
        const auto& spec = data.questions[q];
        if (spec.num_options < 2)
            out.push_back("question '" + spec.id + "': num_options " + std::to_string(spec.num_options) + " < 2");
        if (!spec.option_texts.empty() && static_cast<int>(spec.option_texts.size()) != spec.num_options)
            out.push_back("question '" + spec.id + "': " + std::to_string(spec.option_texts.size()) +
                          " option texts for " + std::to_string(spec.num_options) + " options");
        if (!seen_ids.insert(spec.id).second) out.push_back("question '" + spec.id + "': duplicate id");
    }

    std::set<std::pair<std::size_t, std::size_t>> cells;
    for (std::size_t i = 0; i < data.records.size(); ++i) {
        const auto& r = data.records[i];
        const std::string where = "record " + std::to_string(i);
        if (r.question >= data.questions.size()) {
            out.push_back(where + ": unknown question index " + std::to_string(r.question));
            continue;
        }
        if (r.participant >= data.participants.size()) {
            out.push_back(where + ": unknown participant index " + std::to_string(r.participant));
            continue;
        }
        const auto& spec = data.questions[r.question];
        if (r.response < 0 || r.response >= spec.num_options)
            out.push_back(where + ": response " + std::to_string(r.response) + " out of range for question '" +
                          spec.id + "'");
        if (!cells.insert({r.participant, r.question}).second)
            out.push_back(where + ": duplicate response for (participant '" + data.participants[r.participant] +
                          "', question '" + spec.id + "')");
    }

    for (const auto& [q, option] : gold) {
        if (q >= data.questions.size()) {
            out.push_back("gold: unknown question index " + std::to_string(q));
            continue;
        }
        const auto& spec = data.questions[q];
        if (option < 0 || option >= spec.num_options)
            out.push_back("gold: option " + std::to_string(option) + " out of range for question '" + spec.id + "'");
    }
    return out;
}

FactorGraph build_graph(const ResponseDataset& data, const GoldSet& gold, const PriorSpec& priors,
                        ModelVariant variant) {
    if (auto violations = validate(data, gold); !violations.empty()) throw ValidationError(std::move(violations));
    priors.check();

    FactorGraph g;
    const std::size_t np = data.participants.size();
    const std::size_t nq = data.questions.size();

    const bool clamp_ability = variant == ModelVariant::QuestionOnly;
    const bool clamp_difficulty = variant == ModelVariant::ParticipantOnly;
    g.ability_prior.assign(np, clamp_ability ? Gaussian1D::point_mass(priors.ability.mean()) : priors.ability);
    g.ability_clamped.assign(np, clamp_ability);
    g.difficulty_prior.assign(
        nq, clamp_difficulty ? Gaussian1D::point_mass(priors.difficulty.mean()) : priors.difficulty);
    g.difficulty_clamped.assign(nq, clamp_difficulty);

    PrecisionNode prec{priors.precision, std::nullopt};
    if (priors.discrimination == DiscriminationMode::Fixed) prec.fixed = priors.fixed_precision;
    g.precision.assign(nq, prec);

    g.answer.resize(nq);
    for (std::size_t q = 0; q < nq; ++q) {
        g.answer[q].num_options = data.questions[q].num_options;
        if (auto it = gold.find(q); it != gold.end()) g.answer[q].gold = it->second;
    }

    g.cells.reserve(data.records.size());
    for (const auto& r : data.records) g.cells.push_back({r.participant, r.question, r.response});
    std::sort(g.cells.begin(), g.cells.end(), [](const CellFactor& a, const CellFactor& b) {
        return std::tie(a.question, a.participant) < std::tie(b.question, b.participant);
    });
    return g;
}

void clamp_questions(FactorGraph& graph, const QuestionClamps& clamps) {
    if (clamps.difficulty.size() != graph.num_questions() || clamps.precision.size() != graph.num_questions())
        throw ValidationError({"question clamps do not match the question count"});
    for (std::size_t q = 0; q < graph.num_questions(); ++q) {
        graph.difficulty_prior[q] = Gaussian1D::point_mass(clamps.difficulty[q]);
        graph.difficulty_clamped[q] = true;
        if (!(clamps.precision[q] > 0.0)) throw ValidationError({"clamped precision must be positive"});
        graph.precision[q].fixed = clamps.precision[q];
    }
}

Posteriors FactorGraph::prior_posteriors() const {
    Posteriors post;
    post.ability = ability_prior;
    post.difficulty = difficulty_prior;
    for (const auto& node : precision)
        post.precision.push_back(node.fixed ? GammaDist::point_mass(*node.fixed) : node.prior);
    for (const auto& node : answer)
        post.answer.push_back(node.gold ? Discrete::point_mass(node.num_options, *node.gold)
                                        : Discrete::uniform(node.num_options));
    return post;
}

}  // namespace dare
