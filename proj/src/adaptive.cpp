#include "dare/adaptive.hpp"

#include <algorithm>
#include <cmath>

namespace dare {

namespace {

QuadratureRule precision_node(double tau) {
    return {Eigen::VectorXd::Constant(1, tau), Eigen::VectorXd::Ones(1)};
}

double prob_correct_under(const SessionState& s, std::size_t q) {
    const auto& c = s.bank->clamps;
    return expected_prob_correct(s.ability, Gaussian1D::point_mass(c.difficulty[q]), precision_node(c.precision[q]));
}

}  // namespace

double entropy_reduction(double var_before, double var_after) {
    if (!(var_before > 0.0) || !(var_after > 0.0))
        throw std::invalid_argument("entropy_reduction: variances must be positive");
    return 0.5 * std::log(var_before / var_after);
}

void QuestionBank::check() const {
    std::vector<std::string> v;
    for (std::size_t q = 0; q < questions.size(); ++q) {
        const auto it = gold.find(q);
        if (it == gold.end())
            v.push_back("bank: question '" + questions[q].id + "' has no gold answer");
        else if (it->second < 0 || it->second >= questions[q].num_options)
            v.push_back("bank: gold option for '" + questions[q].id + "' out of range");
        if (questions[q].num_options < 2) v.push_back("bank: question '" + questions[q].id + "' has fewer than 2 options");
    }
    if (clamps.difficulty.size() != questions.size() || clamps.precision.size() != questions.size())
        v.emplace_back("bank: calibration does not cover every question");
    else
        for (std::size_t q = 0; q < questions.size(); ++q)
            if (!(clamps.precision[q] > 0.0)) v.push_back("bank: question '" + questions[q].id + "' has nonpositive precision");
    if (!v.empty()) throw ValidationError(std::move(v));
}

QuestionClamps calibrate(const ResponseDataset& data, const GoldSet& gold, const PriorSpec& priors, const EpConfig& ep,
                         std::optional<std::size_t> leave_out) {
    ResponseDataset ref = data;
    if (leave_out) {
        std::vector<std::size_t> keep;
        for (std::size_t p = 0; p < data.participants.size(); ++p)
            if (p != *leave_out) keep.push_back(p);
        ref = data.subset_participants(keep);
    }
    const auto post = infer(build_graph(ref, gold, priors), ep).posteriors;
    QuestionClamps c;
    for (std::size_t q = 0; q < data.questions.size(); ++q) {
        c.difficulty.push_back(post.difficulty[q].mean());
        c.precision.push_back(priors.discrimination == DiscriminationMode::Fixed ? priors.fixed_precision
                                                                                 : post.precision[q].mean());
    }
    return c;
}

bool SessionState::is_asked(std::size_t q) const {
    for (const auto& [aq, r] : asked)
        if (aq == q) return true;
    return false;
}

bool SessionState::exhausted() const {
    return static_cast<int>(asked.size()) >= settings.budget || asked.size() >= bank->questions.size();
}

SessionState start_session(std::shared_ptr<const QuestionBank> bank, std::string participant,
                           const SessionSettings& settings) {
    bank->check();
    settings.priors.check();
    settings.ep.check();
    if (settings.budget < 0) throw ValidationError({"session: budget must be nonnegative"});
    SessionState s;
    s.bank = std::move(bank);
    s.participant = std::move(participant);
    s.settings = settings;
    s.ability = settings.priors.ability;
    return s;
}

AbilityFit fit_ability(const SessionState& state, std::optional<std::pair<std::size_t, int>> extra) {
    // Only answered questions touch the ability, so the graph holds just those.
    std::vector<std::pair<std::size_t, int>> evidence = state.asked;
    if (extra) evidence.push_back(*extra);
    if (evidence.empty()) return {state.settings.priors.ability, true};
    // The same evidence must give the same fit whatever order it was asked in.
    std::sort(evidence.begin(), evidence.end());

    const QuestionBank& bank = *state.bank;
    FactorGraph g;
    g.ability_prior = {state.settings.priors.ability};
    g.ability_clamped = {false};
    for (std::size_t i = 0; i < evidence.size(); ++i) {
        const std::size_t q = evidence[i].first;
        g.difficulty_prior.push_back(Gaussian1D::point_mass(bank.clamps.difficulty[q]));
        g.difficulty_clamped.push_back(true);
        g.precision.push_back({state.settings.priors.precision, bank.clamps.precision[q]});
        g.answer.push_back({bank.questions[q].num_options, bank.gold.at(q)});
        g.cells.push_back({0, i, evidence[i].second});
    }
    const auto rep = infer(g, state.settings.ep);
    return {rep.posteriors.ability[0], rep.converged};
}

Discrete session_predictive(const SessionState& state, std::size_t question) {
    const int k = state.bank->questions.at(question).num_options;
    const double pi = prob_correct_under(state, question);
    Eigen::VectorXd p = Eigen::VectorXd::Constant(k, (1.0 - pi) / k);
    p[state.bank->gold.at(question)] += pi;
    p /= p.sum();
    return Discrete(std::move(p));
}

QuestionScore score_question(const SessionState& state, std::size_t question) {
    const auto& bank = *state.bank;
    if (question >= bank.questions.size()) throw ValidationError({"score: unknown question index"});
    if (state.is_asked(question)) throw DuplicateQuestion("score: question '" + bank.questions[question].id + "' already asked");

    const Discrete pred = session_predictive(state, question);
    const int gold = bank.gold.at(question);
    const double before = state.ability.variance();

    // Every wrong response yields the same likelihood, hence the same fit.
    std::optional<AbilityFit> wrong_fit;
    QuestionScore score;
    score.question = question;
    for (int r = 0; r < pred.size(); ++r) {
        AbilityFit fit;
        if (r != gold && wrong_fit) {
            fit = *wrong_fit;
        } else {
            fit = fit_ability(state, std::pair{question, r});
            if (r != gold) wrong_fit = fit;
        }
        score.breakdown.push_back({r, pred[r], fit.ability.variance(), fit.converged});
        score.expected_entropy_reduction += pred[r] * entropy_reduction(before, fit.ability.variance());
        score.reliable = score.reliable && fit.converged;
    }
    return score;
}

QuestionScore select_next(const SessionState& state, const CandidateFilter* allowed) {
    if (state.exhausted()) throw SessionExhausted("session budget exhausted");
    const auto& bank = *state.bank;
    std::optional<QuestionScore> best;
    for (std::size_t q = 0; q < bank.questions.size(); ++q) {
        if (state.is_asked(q) || (allowed && !(*allowed)[q])) continue;
        QuestionScore s = score_question(state, q);
        if (!s.reliable) continue;
        if (!best || s.expected_entropy_reduction > best->expected_entropy_reduction ||
            (s.expected_entropy_reduction == best->expected_entropy_reduction &&
             bank.questions[q].id < bank.questions[best->question].id))
            best = std::move(s);
    }
    if (!best) throw SessionExhausted("no scorable question left");
    return *best;
}

std::size_t next_question(const SessionState& state, const CandidateFilter* allowed) {
    return select_next(state, allowed).question;
}

SessionState submit_response(const SessionState& state, std::size_t question, int response) {
    const auto& bank = *state.bank;
    if (question >= bank.questions.size()) throw ValidationError({"submit: unknown question index"});
    const auto& spec = bank.questions[question];
    if (response < 0 || response >= spec.num_options)
        throw ValidationError({"submit: response " + std::to_string(response) + " out of range for question '" +
                               spec.id + "'"});
    if (state.is_asked(question)) throw DuplicateQuestion("submit: question '" + spec.id + "' already answered");
    if (state.exhausted()) throw SessionExhausted("session budget exhausted");

    SessionState next = state;
    next.asked.emplace_back(question, response);
    const AbilityFit fit = fit_ability(next);
    next.ability = fit.ability;
    next.converged = fit.converged;
    return next;
}

double estimate_raw_score(const SessionState& state) {
    const auto& bank = *state.bank;
    double total = 0.0;
    for (std::size_t q = 0; q < bank.questions.size(); ++q) {
        bool seen = false;
        for (const auto& [aq, r] : state.asked)
            if (aq == q) {
                seen = true;
                total += r == bank.gold.at(q) ? 1.0 : 0.0;
            }
        if (!seen) {
            const double pi = prob_correct_under(state, q);
            total += pi + (1.0 - pi) / bank.questions[q].num_options;
        }
    }
    return total;
}

}  // namespace dare
