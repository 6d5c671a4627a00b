#include "dare/oracle.hpp"

#include <boost/math/distributions/gamma.hpp>

#include <cmath>
#include <numeric>

namespace dare {

namespace {

struct Grid {
    std::vector<double> nodes;
    std::vector<double> weights;  ///< normalised prior mass per node
};

Grid point_grid(double value) { return {{value}, {1.0}}; }

/// Trapezoid rule over mean +/- range*sd, weighted by the Gaussian prior density.
Grid gaussian_grid(const Gaussian1D& prior, int points, double range) {
    Grid g;
    const double sd = prior.stddev();
    const double lo = prior.mean() - range * sd;
    const double step = 2.0 * range * sd / (points - 1);
    for (int j = 0; j < points; ++j) {
        const double x = lo + j * step;
        const double z = (x - prior.mean()) / sd;
        const double trap = (j == 0 || j == points - 1) ? 0.5 : 1.0;
        g.nodes.push_back(x);
        g.weights.push_back(trap * std::exp(-0.5 * z * z));
    }
    const double total = std::accumulate(g.weights.begin(), g.weights.end(), 0.0);
    for (auto& w : g.weights) w /= total;
    return g;
}

Grid gamma_quantile_grid(const GammaDist& prior, int points) {
    const boost::math::gamma_distribution<double> dist(prior.shape(), prior.scale());
    Grid g;
    for (int i = 0; i < points; ++i) {
        g.nodes.push_back(boost::math::quantile(dist, (i + 0.5) / points));
        g.weights.push_back(1.0 / points);
    }
    return g;
}

struct MomentAcc {
    double w = 0.0, s1 = 0.0, s2 = 0.0;
    void add(double weight, double x) {
        w += weight;
        s1 += weight * x;
        s2 += weight * x * x;
    }
    [[nodiscard]] double mean() const { return s1 / w; }
    [[nodiscard]] double variance() const { return std::max(s2 / w - mean() * mean(), 0.0); }
};

struct Solved {
    Posteriors post;
    double evidence = 0.0;
};

Solved solve(const ResponseDataset& data, const GoldSet& gold, const PriorSpec& priors, ModelVariant variant,
             const OracleConfig& cfg) {
    if (auto v = validate(data, gold); !v.empty()) throw ValidationError(std::move(v));
    priors.check();
    const int np = static_cast<int>(data.participants.size());
    const int nq = static_cast<int>(data.questions.size());
    int max_k = 0;
    for (const auto& q : data.questions) max_k = std::max(max_k, q.num_options);
    if (np > cfg.max_participants || nq > cfg.max_questions || max_k > cfg.max_options)
        throw ValidationError({"oracle refuses instance of " + std::to_string(np) + " participants x " +
                               std::to_string(nq) + " questions x " + std::to_string(max_k) +
                               " options (caps " + std::to_string(cfg.max_participants) + "x" +
                               std::to_string(cfg.max_questions) + "x" + std::to_string(cfg.max_options) + ")"});
    if (cfg.grid_points < 11) throw ValidationError({"oracle grid_points must be >= 11"});

    const FactorGraph graph = build_graph(data, gold, priors, variant);
    const bool learned = priors.discrimination == DiscriminationMode::Learned;

    std::vector<Grid> a_grid(np), d_grid(nq);
    for (int p = 0; p < np; ++p)
        a_grid[p] = graph.ability_clamped[p] ? point_grid(priors.ability.mean())
                                             : gaussian_grid(priors.ability, cfg.grid_points, cfg.grid_range);
    for (int q = 0; q < nq; ++q)
        d_grid[q] = graph.difficulty_clamped[q] ? point_grid(priors.difficulty.mean())
                                                : gaussian_grid(priors.difficulty, cfg.grid_points, cfg.grid_range);
    const Grid tau_grid =
        learned ? gamma_quantile_grid(priors.precision, cfg.tau_grid_points) : point_grid(priors.fixed_precision);
    const int nt = static_cast<int>(tau_grid.nodes.size());

    // Observed (participant, response) per column.
    std::vector<std::vector<std::pair<int, int>>> obs(nq);
    for (const auto& r : data.records)
        obs[r.question].emplace_back(static_cast<int>(r.participant), r.response);

    // Phi(sqrt(tau) (a - d)) for every (p, a-node, q, d-node, tau-node).
    auto phi_index = [&](int q, int p, int ja, int jd, int jt) {
        return (((static_cast<std::size_t>(q) * np + p) * a_grid[p].nodes.size() + ja) * d_grid[q].nodes.size() + jd) *
                   nt + jt;
    };
    std::size_t phi_size = 0;
    for (int q = 0; q < nq; ++q)
        for (int p = 0; p < np; ++p) phi_size = std::max(phi_size, phi_index(q, p, 0, 0, 0) + a_grid[p].nodes.size() * d_grid[q].nodes.size() * nt);
    std::vector<double> phi(phi_size);
    for (int q = 0; q < nq; ++q)
        for (int p = 0; p < np; ++p)
            for (std::size_t ja = 0; ja < a_grid[p].nodes.size(); ++ja)
                for (std::size_t jd = 0; jd < d_grid[q].nodes.size(); ++jd)
                    for (int jt = 0; jt < nt; ++jt)
                        phi[phi_index(q, p, ja, jd, jt)] = std_normal_cdf(
                            std::sqrt(tau_grid.nodes[jt]) * (a_grid[p].nodes[ja] - d_grid[q].nodes[jd]));

    std::vector<int> answer_lo(nq), answer_hi(nq);
    for (int q = 0; q < nq; ++q) {
        if (auto it = gold.find(q); it != gold.end()) {
            answer_lo[q] = it->second;
            answer_hi[q] = it->second + 1;
        } else {
            answer_lo[q] = 0;
            answer_hi[q] = data.questions[q].num_options;
        }
    }

    // Accumulators.
    double z_total = 0.0;
    std::vector<MomentAcc> acc_a(np), acc_d(nq), acc_tau(nq);
    std::vector<std::vector<double>> acc_y(nq);
    for (int q = 0; q < nq; ++q) acc_y[q].assign(data.questions[q].num_options, 0.0);
    // Cells indexed like graph.cells.
    std::vector<std::vector<int>> cell_slot(nq, std::vector<int>(np, -1));
    for (std::size_t c = 0; c < graph.cells.size(); ++c)
        cell_slot[graph.cells[c].question][graph.cells[c].participant] = static_cast<int>(c);
    std::vector<double> acc_pc(graph.cells.size(), 0.0);
    std::vector<MomentAcc> acc_t(graph.cells.size());

    std::vector<int> ja(np, 0);
    std::vector<std::vector<double>> table(nq);
    std::vector<double> col_mass(nq);

    const auto table_index = [&](int q, int y, int jd, int jt) {
        return (static_cast<std::size_t>(y) * d_grid[q].nodes.size() + jd) * nt + jt;
    };

    for (;;) {
        double wa = 1.0;
        for (int p = 0; p < np; ++p) wa *= a_grid[p].weights[ja[p]];

        for (int q = 0; q < nq; ++q) {
            const int k = data.questions[q].num_options;
            const std::size_t nd = d_grid[q].nodes.size();
            auto& t = table[q];
            t.assign(static_cast<std::size_t>(k) * nd * nt, 0.0);
            double mass = 0.0;
            for (int y = answer_lo[q]; y < answer_hi[q]; ++y) {
                const double py = gold.count(q) ? 1.0 : 1.0 / k;
                for (std::size_t jd = 0; jd < nd; ++jd)
                    for (int jt = 0; jt < nt; ++jt) {
                        double w = py * d_grid[q].weights[jd] * tau_grid.weights[jt];
                        for (const auto& [p, r] : obs[q]) {
                            const double pc = phi[phi_index(q, p, ja[p], jd, jt)];
                            w *= pc * (r == y ? 1.0 : 0.0) + (1.0 - pc) / k;
                        }
                        t[table_index(q, y, jd, jt)] = w;
                        mass += w;
                    }
            }
            col_mass[q] = mass;
        }

        double w_all = wa;
        for (int q = 0; q < nq; ++q) w_all *= col_mass[q];
        z_total += w_all;
        for (int p = 0; p < np; ++p) acc_a[p].add(w_all, a_grid[p].nodes[ja[p]]);

        for (int q = 0; q < nq; ++q) {
            double w_minus = wa;
            for (int o = 0; o < nq; ++o)
                if (o != q) w_minus *= col_mass[o];
            if (w_minus == 0.0) continue;
            const int k = data.questions[q].num_options;
            const std::size_t nd = d_grid[q].nodes.size();
            for (int y = answer_lo[q]; y < answer_hi[q]; ++y)
                for (std::size_t jd = 0; jd < nd; ++jd)
                    for (int jt = 0; jt < nt; ++jt) {
                        const double w = w_minus * table[q][table_index(q, y, jd, jt)];
                        if (w == 0.0) continue;
                        acc_y[q][y] += w;
                        acc_d[q].add(w, d_grid[q].nodes[jd]);
                        acc_tau[q].add(w, tau_grid.nodes[jt]);
                        for (const auto& [p, r] : obs[q]) {
                            const int c = cell_slot[q][p];
                            const double pc = phi[phi_index(q, p, ja[p], jd, jt)];
                            const double lik = pc * (r == y ? 1.0 : 0.0) + (1.0 - pc) / k;
                            if (r == y) acc_pc[c] += w * pc / lik;
                            acc_t[c].add(w, a_grid[p].nodes[ja[p]] - d_grid[q].nodes[jd]);
                        }
                    }
        }

        int p = 0;
        for (; p < np; ++p) {
            if (++ja[p] < static_cast<int>(a_grid[p].nodes.size())) break;
            ja[p] = 0;
        }
        if (p == np) break;
    }

    if (!(z_total > 0.0)) throw NegligibleEvidence("oracle: evidence underflowed on the grid");

    Posteriors post;
    for (int p = 0; p < np; ++p)
        post.ability.push_back(graph.ability_clamped[p]
                                   ? graph.ability_prior[p]
                                   : Gaussian1D(acc_a[p].mean(), std::max(acc_a[p].variance(), kVarianceFloor)));
    for (int q = 0; q < nq; ++q) {
        post.difficulty.push_back(graph.difficulty_clamped[q]
                                      ? graph.difficulty_prior[q]
                                      : Gaussian1D(acc_d[q].mean(), std::max(acc_d[q].variance(), kVarianceFloor)));
        post.precision.push_back(learned ? GammaDist::from_moments(acc_tau[q].mean(), acc_tau[q].variance())
                                         : GammaDist::point_mass(priors.fixed_precision));
        Eigen::VectorXd y(acc_y[q].size());
        for (std::size_t k = 0; k < acc_y[q].size(); ++k) y[k] = acc_y[q][k];
        y /= y.sum();
        post.answer.emplace_back(std::move(y));
    }
    for (std::size_t c = 0; c < graph.cells.size(); ++c) {
        const auto& cell = graph.cells[c];
        CellPosterior cp;
        cp.participant = cell.participant;
        cp.question = cell.question;
        cp.p_correct = std::clamp(acc_pc[c] / acc_t[c].w, 0.0, 1.0);
        cp.response_dist = Discrete::point_mass(graph.answer[cell.question].num_options, cell.response);
        cp.t = Gaussian1D(acc_t[c].mean(), std::max(acc_t[c].variance(), kVarianceFloor));
        post.cells.push_back(std::move(cp));
    }
    return {std::move(post), z_total};
}

}  // namespace

Posteriors exact_posteriors(const ResponseDataset& data, const GoldSet& gold, const PriorSpec& priors,
                            ModelVariant variant, const OracleConfig& config) {
    return solve(data, gold, priors, variant, config).post;
}

double exact_evidence(const ResponseDataset& data, const GoldSet& gold, const PriorSpec& priors,
                      ModelVariant variant, const OracleConfig& config) {
    return solve(data, gold, priors, variant, config).evidence;
}

}  // namespace dare
