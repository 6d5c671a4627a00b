#include "dare/eval.hpp"

#include "dare/adaptive.hpp"
#include "dare/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dare {

namespace {

constexpr std::uint64_t kCrowdStream = 0xC7;
constexpr std::uint64_t kRevealStream = 0x9E;

struct Stats {
    double mean = 0.0, sd = 0.0, sem = 0.0;
};

Stats stats_of(const std::vector<double>& v) {
    Stats s;
    if (v.empty()) return s;
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / (v.size() - 1));
        s.sem = s.sd / std::sqrt(static_cast<double>(v.size()));
    }
    return s;
}

// `k` distinct indices from [0, n), sorted, as a pure function of the key.
std::vector<std::size_t> draw_subset(std::size_t n, std::size_t k, std::uint64_t seed, std::uint64_t stream,
                                     std::uint64_t i, std::uint64_t j) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    KeyedRng rng(seed, stream, i, j);
    for (std::size_t t = 0; t < k; ++t) {
        const auto pick = t + std::min(n - t - 1, static_cast<std::size_t>(rng.uniform() * (n - t)));
        std::swap(idx[t], idx[pick]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

LabelledData population_of(const ExperimentSpec& spec) {
    if (spec.data) {
        const auto problems = validate(spec.data->data, spec.data->gold);
        if (!problems.empty()) throw ValidationError(problems);
        for (std::size_t q = 0; q < spec.data->data.questions.size(); ++q)
            if (!spec.data->gold.count(q))
                throw ValidationError({"eval: question '" + spec.data->data.questions[q].id + "' has no gold answer"});
        return *spec.data;
    }
    auto s = sample(spec.population);
    return {std::move(s.data), std::move(s.gold)};
}

int correct_count(const std::vector<int>& modes, const GoldSet& gold) {
    int n = 0;
    for (const auto& [q, g] : gold) n += modes.at(q) == g;
    return n;
}

void add_row(MetricReport& r, const std::string& series, int x, const std::vector<double>& values) {
    const Stats s = stats_of(values);
    r.summary.push_back({series, x, s.mean, s.sd, s.sem, static_cast<int>(values.size())});
    for (std::size_t i = 0; i < values.size(); ++i) r.records.push_back({series, x, static_cast<int>(i), values[i]});
}

// Crowds are drawn from one stream so every experiment using crowd size s and
// repetition r sees the same participants.
std::vector<std::size_t> crowd(const ExperimentSpec& spec, std::size_t population, int size, int rep) {
    return draw_subset(population, size, spec.seed, kCrowdStream, size, rep);
}

int reps_for(const ExperimentSpec& spec, std::size_t population, int size) {
    return static_cast<std::size_t>(size) == population ? 1 : spec.repetitions;
}

}  // namespace

std::string to_string(Experiment e) {
    switch (e) {
        case Experiment::CrowdCurve: return "crowd-curve";
        case Experiment::GoldCurve: return "gold-curve";
        case Experiment::ScatterSkill: return "scatter-skill";
        case Experiment::AdaptiveVsStatic: return "adaptive-vs-static";
    }
    return "crowd-curve";
}

Experiment parse_experiment(const std::string& s) {
    for (auto e : {Experiment::CrowdCurve, Experiment::GoldCurve, Experiment::ScatterSkill, Experiment::AdaptiveVsStatic})
        if (to_string(e) == s) return e;
    throw ValidationError(
        {"unknown experiment '" + s + "' (expected crowd-curve|gold-curve|scatter-skill|adaptive-vs-static)"});
}

EpConfig ExperimentSpec::default_eval_ep() {
    EpConfig c;
    c.tau_quadrature_nodes = 16;
    return c;
}

void ExperimentSpec::check() const {
    std::vector<std::string> v;
    if (repetitions < 1) v.emplace_back("eval: repetitions must be >= 1");
    auto list = [&](const std::vector<int>& xs, const char* name, int lo) {
        if (xs.empty()) v.push_back(std::string("eval: ") + name + " must be nonempty");
        if (!std::is_sorted(xs.begin(), xs.end()) || std::adjacent_find(xs.begin(), xs.end()) != xs.end())
            v.push_back(std::string("eval: ") + name + " must be strictly increasing");
        if (!xs.empty() && xs.front() < lo)
            v.push_back(std::string("eval: ") + name + " must be >= " + std::to_string(lo));
    };
    switch (experiment) {
        case Experiment::CrowdCurve: list(crowd_sizes, "crowd sizes", 1); break;
        case Experiment::GoldCurve:
            list(reveal_counts, "reveal counts", 0);
            if (gold_crowd_size < 1) v.emplace_back("eval: gold crowd size must be >= 1");
            break;
        case Experiment::AdaptiveVsStatic: list(budgets, "budgets", 0); break;
        case Experiment::ScatterSkill: break;
    }
    if (!v.empty()) throw ValidationError(std::move(v));
    priors.check();
    ep.check();
    if (!data) population.check();
}

const SummaryRow& MetricReport::at(const std::string& series, int x) const {
    for (const auto& r : summary)
        if (r.series == series && r.x == x) return r;
    throw std::out_of_range("no summary row " + series + "@" + std::to_string(x));
}

namespace metrics {

double rmse(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || a.size() != b.size()) throw std::invalid_argument("rmse: inputs must be nonempty and equal length");
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(ss / a.size());
}

std::optional<double> r_squared(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.empty() || x.size() != y.size()) throw std::invalid_argument("r_squared: inputs must be nonempty and equal length");
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return sxy * sxy / (sxx * syy);
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.empty() || predicted.size() != truth.size())
        throw std::invalid_argument("accuracy: inputs must be nonempty and equal length");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) hit += predicted[i] == truth[i];
    return static_cast<double>(hit) / predicted.size();
}

}  // namespace metrics

MetricReport run_crowd_curve(const ExperimentSpec& spec) {
    spec.check();
    const auto pop = population_of(spec);
    const std::size_t n = pop.data.participants.size();
    if (static_cast<std::size_t>(spec.crowd_sizes.back()) > n)
        throw ValidationError({"eval: crowd size " + std::to_string(spec.crowd_sizes.back()) + " exceeds the population of " +
                               std::to_string(n)});

    MetricReport report{Experiment::CrowdCurve, "correct_answers", {}, {}};
    const ModelVariant variants[] = {ModelVariant::Full, ModelVariant::ParticipantOnly, ModelVariant::QuestionOnly};
    for (int size : spec.crowd_sizes) {
        std::vector<double> model_counts[3], majority;
        for (int rep = 0; rep < reps_for(spec, n, size); ++rep) {
            const auto sub = pop.data.subset_participants(crowd(spec, n, size, rep));
            for (int m = 0; m < 3; ++m) {
                const auto post = infer_variant(sub, {}, spec.priors, variants[m], spec.ep).posteriors;
                model_counts[m].push_back(correct_count(inferred_answers(post), pop.gold));
            }
            const auto votes = majority_vote(sub);
            int hits = 0;
            for (const auto& [q, g] : pop.gold) hits += votes[q] && *votes[q] == g;
            majority.push_back(hits);
        }
        for (int m = 0; m < 3; ++m) add_row(report, to_string(variants[m]), size, model_counts[m]);
        add_row(report, "majority", size, majority);
    }
    return report;
}

MetricReport run_gold_curve(const ExperimentSpec& spec) {
    spec.check();
    const auto pop = population_of(spec);
    const std::size_t n = pop.data.participants.size(), nq = pop.data.questions.size();
    if (static_cast<std::size_t>(spec.gold_crowd_size) > n)
        throw ValidationError({"eval: crowd size " + std::to_string(spec.gold_crowd_size) + " exceeds the population of " +
                               std::to_string(n)});
    if (static_cast<std::size_t>(spec.reveal_counts.back()) >= nq)
        throw ValidationError({"eval: reveal count " + std::to_string(spec.reveal_counts.back()) +
                               " leaves no question of " + std::to_string(nq) + " to infer"});

    MetricReport report{Experiment::GoldCurve, "remaining_accuracy", {}, {}};
    for (int i : spec.reveal_counts) {
        std::vector<double> acc;
        for (int rep = 0; rep < reps_for(spec, n, spec.gold_crowd_size); ++rep) {
            const auto sub = pop.data.subset_participants(crowd(spec, n, spec.gold_crowd_size, rep));
            const auto shown = draw_subset(nq, i, spec.seed, kRevealStream, i, rep);
            GoldSet revealed;
            for (auto q : shown) revealed[q] = pop.gold.at(q);
            const auto modes =
                inferred_answers(infer_variant(sub, revealed, spec.priors, ModelVariant::Full, spec.ep).posteriors);
            int hits = 0;
            for (const auto& [q, g] : pop.gold)
                if (!revealed.count(q)) hits += modes[q] == g;
            acc.push_back(static_cast<double>(hits) / (nq - i));
        }
        add_row(report, "full", i, acc);
    }
    return report;
}

MetricReport run_scatter_skill(const ExperimentSpec& spec) {
    spec.check();
    const auto pop = population_of(spec);
    const auto post = infer_variant(pop.data, {}, spec.priors, ModelVariant::Full, spec.ep).posteriors;
    const auto scores = model_raw_scores(pop.data, post, pop.gold);

    MetricReport report{Experiment::ScatterSkill, "r_squared", {}, {}};
    std::vector<double> raw(scores.raw_score.begin(), scores.raw_score.end());
    std::vector<double> model(scores.model_raw_score.begin(), scores.model_raw_score.end());
    for (std::size_t p = 0; p < raw.size(); ++p) {
        report.records.push_back({"raw_score", 0, static_cast<int>(p), raw[p]});
        report.records.push_back({"model_raw_score", 0, static_cast<int>(p), model[p]});
    }
    report.summary.push_back({"r_squared", 0, metrics::r_squared(raw, model), 0.0, 0.0, static_cast<int>(raw.size())});
    return report;
}

MetricReport run_adaptive_vs_static(const ExperimentSpec& spec) {
    spec.check();
    const auto pop = population_of(spec);
    const std::size_t np = pop.data.participants.size(), nq = pop.data.questions.size();
    if (static_cast<std::size_t>(spec.budgets.back()) > nq)
        throw ValidationError({"eval: budget " + std::to_string(spec.budgets.back()) + " exceeds the " +
                               std::to_string(nq) + " questions"});

    // Every replay reads responses from the matrix, so it must be complete.
    std::vector<std::vector<int>> response(np, std::vector<int>(nq, -1));
    for (const auto& r : pop.data.records) response[r.participant][r.question] = r.response;
    for (std::size_t p = 0; p < np; ++p)
        for (std::size_t q = 0; q < nq; ++q)
            if (response[p][q] < 0)
                throw ValidationError({"eval: participant '" + pop.data.participants[p] + "' has no response to '" +
                                       pop.data.questions[q].id + "'"});

    std::vector<std::vector<std::size_t>> static_sets;
    for (int b : spec.budgets) static_sets.push_back(static_question_set(pop.data, pop.gold, b));

    const std::size_t nb = spec.budgets.size();
    std::vector<std::vector<double>> err_static(nb), err_adaptive(nb);
    SessionSettings settings{spec.priors, spec.ep, static_cast<int>(nq)};
    for (std::size_t p = 0; p < np; ++p) {
        auto bank = std::make_shared<QuestionBank>();
        bank->questions = pop.data.questions;
        bank->gold = pop.gold;
        bank->clamps = calibrate(pop.data, pop.gold, spec.priors, spec.ep, p);
        std::shared_ptr<const QuestionBank> cbank = bank;

        double truth = 0.0;
        for (std::size_t q = 0; q < nq; ++q) truth += response[p][q] == pop.gold.at(q);

        for (std::size_t k = 0; k < nb; ++k) {
            auto s = start_session(cbank, pop.data.participants[p], settings);
            for (auto q : static_sets[k]) s = submit_response(s, q, response[p][q]);
            err_static[k].push_back(estimate_raw_score(s) - truth);
        }

        auto s = start_session(cbank, pop.data.participants[p], settings);
        for (std::size_t k = 0; k < nb; ++k) {
            const auto b = static_cast<std::size_t>(spec.budgets[k]);
            if (b == nq) {
                // With every question asked the fit depends only on the set of
                // answers, so selection order cannot change the outcome.
                for (std::size_t q = 0; q < nq; ++q)
                    if (!s.is_asked(q)) s = submit_response(s, q, response[p][q]);
            }
            while (s.asked.size() < b) {
                const auto q = next_question(s);
                s = submit_response(s, q, response[p][q]);
            }
            err_adaptive[k].push_back(estimate_raw_score(s) - truth);
        }
    }

    MetricReport report{Experiment::AdaptiveVsStatic, "rmse", {}, {}};
    auto summarise = [&](const std::string& arm, int b, const std::vector<double>& err) {
        std::vector<double> abs_err, sq;
        for (double e : err) {
            abs_err.push_back(std::abs(e));
            sq.push_back(e * e);
        }
        const double rmse = metrics::rmse(err, std::vector<double>(err.size(), 0.0));
        // Delta-method standard error of the RMSE.
        const double sem = rmse > 0.0 ? stats_of(sq).sem / (2.0 * rmse) : 0.0;
        report.summary.push_back({arm, b, rmse, stats_of(abs_err).sd, sem, static_cast<int>(err.size())});
        for (std::size_t i = 0; i < err.size(); ++i) report.records.push_back({arm, b, static_cast<int>(i), abs_err[i]});
    };
    for (std::size_t k = 0; k < nb; ++k) {
        summarise("static", spec.budgets[k], err_static[k]);
        summarise("adaptive", spec.budgets[k], err_adaptive[k]);
    }
    return report;
}

MetricReport run_experiment(const ExperimentSpec& spec) {
    switch (spec.experiment) {
        case Experiment::CrowdCurve: return run_crowd_curve(spec);
        case Experiment::GoldCurve: return run_gold_curve(spec);
        case Experiment::ScatterSkill: return run_scatter_skill(spec);
        case Experiment::AdaptiveVsStatic: return run_adaptive_vs_static(spec);
    }
    throw std::logic_error("unhandled experiment");
}

}  // namespace dare
