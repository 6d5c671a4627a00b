#pragma once

#include "dare/ep.hpp"
#include "dare/model.hpp"
#include "dare/synth.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dare {

enum class Experiment { CrowdCurve, GoldCurve, ScatterSkill, AdaptiveVsStatic };

std::string to_string(Experiment e);
/// Accepts the kebab-case names used on the command line ("crowd-curve", ...).
Experiment parse_experiment(const std::string& s);

/// A dataset with a total gold set, supplied instead of a synthetic population.
struct LabelledData {
    ResponseDataset data;
    GoldSet gold;
};

struct ExperimentSpec {
    Experiment experiment = Experiment::CrowdCurve;
    SynthConfig population;             ///< used when `data` is empty
    std::optional<LabelledData> data;
    PriorSpec priors;                   ///< model priors for inference
    EpConfig ep = default_eval_ep();
    int repetitions = 200;
    std::vector<int> crowd_sizes{2, 5, 10, 20, 40};
    std::vector<int> reveal_counts{0, 5, 10, 20, 40};
    int gold_crowd_size = 20;           ///< crowd size for the gold curve
    std::vector<int> budgets{2, 5, 10, 20};
    std::uint64_t seed = 1;

    /// Throws ValidationError listing every violated constraint.
    void check() const;

    static EpConfig default_eval_ep();
};

/// Summary of one (series, setting) cell of an experiment.
struct SummaryRow {
    std::string series;  ///< aggregator, arm or statistic name
    int x = 0;           ///< crowd size, reveal count or budget
    std::optional<double> mean;  ///< empty when the statistic is undefined
    double sd = 0.0;             ///< spread of the row-level records
    double sem = 0.0;            ///< standard error of `mean`
    int n = 0;
};

/// One row-level value (a repetition, or a participant for per-person metrics).
struct RecordRow {
    std::string series;
    int x = 0;
    int index = 0;
    double value = 0.0;
};

struct MetricReport {
    Experiment experiment = Experiment::CrowdCurve;
    std::string metric;
    std::vector<SummaryRow> summary;
    std::vector<RecordRow> records;

    /// The summary row for (series, x); throws std::out_of_range if absent.
    [[nodiscard]] const SummaryRow& at(const std::string& series, int x) const;
};

namespace metrics {
/// Root mean squared difference. Throws std::invalid_argument on empty or
/// mismatched inputs.
double rmse(const std::vector<double>& a, const std::vector<double>& b);
/// Squared Pearson correlation; empty when either vector has zero variance.
std::optional<double> r_squared(const std::vector<double>& x, const std::vector<double>& y);
/// Fraction of positions where the two vectors agree.
double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);
}  // namespace metrics

/// Correctly inferred answers for random crowds of each size, under the full
/// model, the two reduced models and majority vote.
MetricReport run_crowd_curve(const ExperimentSpec& spec);

/// Accuracy on the unrevealed questions for random crowds of
/// `gold_crowd_size` with i questions revealed, for each reveal count i.
MetricReport run_gold_curve(const ExperimentSpec& spec);

/// Raw vs model raw scores with gold hidden; the summary row "r_squared"
/// has no mean when the statistic is undefined.
MetricReport run_scatter_skill(const ExperimentSpec& spec);

/// RMSE of estimated vs true raw score for the static and adaptive arms.
/// Records hold per-participant absolute errors; the summary sd is their spread.
MetricReport run_adaptive_vs_static(const ExperimentSpec& spec);

MetricReport run_experiment(const ExperimentSpec& spec);

}  // namespace dare
