#include "dare/baselines.hpp"

#include <cmath>

namespace dare {

std::vector<std::optional<int>> majority_vote(const ResponseDataset& data) {
    std::vector<std::vector<int>> counts(data.questions.size());
    for (std::size_t q = 0; q < data.questions.size(); ++q) counts[q].assign(data.questions[q].num_options, 0);
    for (const auto& r : data.records) ++counts.at(r.question).at(r.response);

    std::vector<std::optional<int>> out(data.questions.size());
    for (std::size_t q = 0; q < counts.size(); ++q) {
        int best = -1, best_count = 0;
        for (int k = 0; k < static_cast<int>(counts[q].size()); ++k)
            if (counts[q][k] > best_count) {
                best = k;
                best_count = counts[q][k];
            }
        if (best >= 0) out[q] = best;
    }
    return out;
}

InferenceReport infer_variant(const ResponseDataset& data, const GoldSet& gold, const PriorSpec& priors,
                              ModelVariant variant, const EpConfig& config) {
    return infer(build_graph(data, gold, priors, variant), config);
}

std::vector<int> inferred_answers(const Posteriors& post) {
    std::vector<int> out;
    out.reserve(post.answer.size());
    for (const auto& a : post.answer) out.push_back(a.mode());
    return out;
}

ScoreVector model_raw_scores(const ResponseDataset& data, const Posteriors& post, const GoldSet& truth) {
    const auto modes = inferred_answers(post);
    ScoreVector s;
    s.raw_score.assign(data.participants.size(), 0);
    s.model_raw_score.assign(data.participants.size(), 0);
    for (const auto& r : data.records) {
        if (auto it = truth.find(r.question); it != truth.end() && it->second == r.response) ++s.raw_score[r.participant];
        if (modes.at(r.question) == r.response) ++s.model_raw_score[r.participant];
    }
    return s;
}

std::vector<std::optional<double>> solve_rates(const ResponseDataset& data, const GoldSet& gold) {
    std::vector<int> solved(data.questions.size(), 0), answered(data.questions.size(), 0);
    for (const auto& r : data.records) {
        ++answered.at(r.question);
        if (auto it = gold.find(r.question); it != gold.end() && it->second == r.response) ++solved[r.question];
    }
    std::vector<std::optional<double>> out(data.questions.size());
    for (std::size_t q = 0; q < out.size(); ++q)
        if (answered[q] > 0) out[q] = static_cast<double>(solved[q]) / answered[q];
    return out;
}

std::vector<std::size_t> static_question_set(const ResponseDataset& data, const GoldSet& gold, int budget) {
    const std::size_t nq = data.questions.size();
    if (budget < 0 || static_cast<std::size_t>(budget) > nq)
        throw ValidationError({"static set: budget " + std::to_string(budget) + " exceeds the " + std::to_string(nq) +
                               " available questions"});
    std::vector<std::string> missing;
    for (std::size_t q = 0; q < nq; ++q)
        if (!gold.count(q)) missing.push_back("static set: question '" + data.questions[q].id + "' has no gold answer");
    if (!missing.empty()) throw ValidationError(std::move(missing));

    const auto rates = solve_rates(data, gold);
    std::vector<bool> used(nq, false);
    for (std::size_t q = 0; q < nq; ++q) used[q] = !rates[q].has_value();

    std::vector<std::size_t> chosen;
    for (int i = 1; i <= budget; ++i) {
        const double target = static_cast<double>(i) / (budget + 1);
        std::optional<std::size_t> best;
        double best_gap = 0.0;
        for (std::size_t q = 0; q < nq; ++q) {
            if (used[q]) continue;
            const double gap = std::abs(*rates[q] - target);
            if (!best || gap < best_gap || (gap == best_gap && data.questions[q].id < data.questions[*best].id)) {
                best = q;
                best_gap = gap;
            }
        }
        if (!best) throw ValidationError({"static set: fewer answered questions than the budget"});
        used[*best] = true;
        chosen.push_back(*best);
    }
    return chosen;
}

}  // namespace dare
