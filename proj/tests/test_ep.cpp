#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dare/ep.hpp"
#include "dare/oracle.hpp"
#include "dare/synth.hpp"

#include <chrono>
#include <cmath>

using namespace dare;

namespace {

PriorSpec fixed_priors(double tau = 1.0) {
    PriorSpec s;
    s.discrimination = DiscriminationMode::Fixed;
    s.fixed_precision = tau;
    return s;
}

ResponseDataset single_response(int k, int response) {
    ResponseDataset d;
    d.add_question({"q", k, std::nullopt, {}});
    d.participant_index("p");
    d.records.push_back({0, 0, response});
    return d;
}

QuadratureRule one_node(double tau) { return {Eigen::VectorXd::Constant(1, tau), Eigen::VectorXd::Ones(1)}; }

double max_nat_diff(const Posteriors& a, const Posteriors& b) {
    double r = 0.0;
    auto g = [&](const Gaussian1D& x, const Gaussian1D& y) {
        r = std::max({r, std::abs(x.precision() - y.precision()), std::abs(x.precision_mean() - y.precision_mean())});
    };
    for (std::size_t p = 0; p < a.ability.size(); ++p) g(a.ability[p], b.ability[p]);
    for (std::size_t q = 0; q < a.difficulty.size(); ++q) {
        g(a.difficulty[q], b.difficulty[q]);
        const auto na = a.precision[q].natural();
        const auto nb = b.precision[q].natural();
        r = std::max({r, std::abs(na.alpha - nb.alpha), std::abs(na.rate - nb.rate)});
        const Eigen::VectorXd la = a.answer[q].probs().array().log();
        const Eigen::VectorXd lb = b.answer[q].probs().array().log();
        r = std::max(r, (la - lb).cwiseAbs().maxCoeff());
    }
    return r;
}

bool bitwise_equal(const Posteriors& a, const Posteriors& b) {
    if (a.ability != b.ability || a.difficulty != b.difficulty || a.precision != b.precision) return false;
    for (std::size_t q = 0; q < a.answer.size(); ++q)
        if (a.answer[q].probs() != b.answer[q].probs()) return false;
    for (std::size_t c = 0; c < a.cells.size(); ++c)
        if (a.cells[c].p_correct != b.cells[c].p_correct || !(a.cells[c].t == b.cells[c].t)) return false;
    return true;
}

}  // namespace

TEST_CASE("config validation") {
    EpConfig c;
    CHECK_NOTHROW(c.check());
    c.damping = 0.0;
    CHECK_THROWS_AS(c.check(), ValidationError);
    c = {};
    c.max_sweeps = 0;
    CHECK_THROWS_AS(c.check(), ValidationError);
    c = {};
    c.convergence_eps = 0.0;
    CHECK_THROWS_AS(c.check(), ValidationError);
    c = {};
    c.tau_quadrature_nodes = 1;
    CHECK_THROWS_AS(c.check(), ValidationError);
}

TEST_CASE("cold start single response gives three quarters") {
    for (const auto& pri : {fixed_priors(), PriorSpec{}}) {
        const auto rep = infer(build_graph(single_response(2, 1), {}, pri));
        CHECK(rep.converged);
        CHECK(std::abs(rep.posteriors.answer[0][1] - 0.75) < 1e-2);
    }
}

TEST_CASE("gold matching the response: p_correct is two thirds") {
    const CellCavity cav{Gaussian1D(0.0, 1.0), Gaussian1D::point_mass(0.0), one_node(1.0), Discrete::point_mass(2, 1),
                         1};
    const auto up = cell_message_update(cav);
    CHECK(up.p_correct == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("gold differing from the response: p_correct is zero and t gets the failure factor") {
    const Gaussian1D a(0.4, 0.7);
    const CellCavity cav{a, Gaussian1D::point_mass(0.0), one_node(1.3), Discrete::point_mass(3, 0), 2};
    const auto up = cell_message_update(cav);
    CHECK(up.p_correct == 0.0);
    const auto expected = probit_factor_moments(Gaussian1D(0.4, 0.7 + kPointMassVariance), 1.3, false);
    CHECK(up.t.mean() == doctest::Approx(expected.mean()).epsilon(1e-9));
    CHECK(up.t.variance() == doctest::Approx(expected.variance()).epsilon(1e-9));
}

TEST_CASE("learned precision: messages match a dense quadrature over tau") {
    // Reference: Simpson over u = sqrt(tau) on [0, sqrt(30)] (smooth in u,
    // unlike in tau) against the Gamma cavity density, and Simpson over t.
    struct Case {
        Gaussian1D a, d;
        GammaDist tau;
        Eigen::VectorXd y;
        int r;
    };
    Eigen::VectorXd y3(3);
    y3 << 0.5, 0.3, 0.2;
    Eigen::VectorXd y2(2);
    y2 << 0.1, 0.9;
    const std::vector<Case> cases = {
        {Gaussian1D(0.3, 1.0), Gaussian1D(-0.2, 0.8), GammaDist(2.0, 0.5), y3, 0},
        {Gaussian1D(1.2, 0.4), Gaussian1D(0.1, 0.3), GammaDist(3.5, 0.4), y3, 2},
        {Gaussian1D(-0.5, 0.6), Gaussian1D(0.5, 1.1), GammaDist(2.5, 0.6), y2, 0},
    };
    // The error of the Gauss rule decays algebraically (sqrt(tau) enters the
    // integrand); 64 nodes reach 1e-6, the default 32 stay within 1e-5.
    for (const auto& [nodes, tol] : {std::pair{64, 1e-6}, std::pair{32, 1e-5}}) {
        for (const auto& c : cases) {
            const CellCavity cav{c.a, c.d, gamma_quadrature(c.tau, nodes), Discrete(c.y), c.r};
            const auto up = cell_message_update(cav);
            CAPTURE(nodes);

            const double m = c.a.mean() - c.d.mean();
            const double v = c.a.variance() + c.d.variance();
            const int k = static_cast<int>(c.y.size());
            const double rho = c.y[c.r];
            const int nt = 3000, nx = 1200;
            const double u_hi = std::sqrt(30.0), h_u = u_hi / nt;
            const double sd = std::sqrt(v), x_lo = m - 10 * sd, h_x = 20 * sd / nx;
            double z = 0, s_t = 0, s_tt = 0, s_tau = 0, s_tau2 = 0, s_pc = 0;
            for (int i = 0; i <= nt; ++i) {
                const double u = i * h_u;
                if (u == 0.0) continue;  // density vanishes at zero for shape > 1
                const double tau = u * u;
                const double wt = (i == nt ? 1.0 : (i % 2 ? 4.0 : 2.0)) * 2.0 * u * std::exp(c.tau.log_density(tau));
                for (int j = 0; j <= nx; ++j) {
                    const double x = x_lo + j * h_x;
                    const double wx = (j == 0 || j == nx ? 1.0 : (j % 2 ? 4.0 : 2.0)) * std::exp(-0.5 * (x - m) * (x - m) / v);
                    const double phi = 0.5 * std::erfc(-std::sqrt(tau) * x / std::sqrt(2.0));
                    const double lik = rho * phi + (1.0 - phi) / k;
                    const double w = wt * wx * lik;
                    z += w;
                    s_t += w * x;
                    s_tt += w * x * x;
                    s_tau += w * tau;
                    s_tau2 += w * tau * tau;
                    s_pc += wt * wx * rho * phi;
                }
            }
            const double t_mean = s_t / z, t_var = s_tt / z - t_mean * t_mean;
            const double tau_mean = s_tau / z, tau_var = s_tau2 / z - tau_mean * tau_mean;
            CHECK(std::abs(up.t.mean() - t_mean) < tol);
            CHECK(std::abs(up.t.variance() - t_var) < tol);
            CHECK(std::abs(up.precision_mean - tau_mean) < tol);
            CHECK(std::abs(up.precision_variance - tau_var) < tol);
            CHECK(std::abs(up.p_correct - s_pc / z) < tol);
            // Ability moments follow from t through the chain rule.
            const double va = c.a.variance();
            CHECK(std::abs(up.ability.mean() - (c.a.mean() + va * (t_mean - m) / v)) < tol);
            CHECK(std::abs(up.ability.variance() - (va + va * va * (t_var - v) / (v * v))) < tol);
        }
    }
}

TEST_CASE("reweighting a rule reproduces the target Gamma moments") {
    const GammaDist src(2.0, 0.5), dst(3.0, 0.4);
    const auto rule = reweight_rule(gamma_quadrature(src, 32), src.natural(), dst.natural());
    const double mean = rule.weights.dot(rule.nodes);
    const double second = rule.weights.dot(rule.nodes.cwiseProduct(rule.nodes));
    CHECK(mean == doctest::Approx(dst.mean()).epsilon(1e-6));
    CHECK(second - mean * mean == doctest::Approx(dst.variance()).epsilon(1e-4));
}

TEST_CASE("report flags: convergence and non-convergence") {
    SynthConfig cfg;
    cfg.num_participants = 8;
    cfg.num_questions = 6;
    cfg.num_options = 4;
    cfg.seed = 3;
    const auto s = sample(cfg);
    const auto g = build_graph(s.data, {}, cfg.priors);
    const auto rep = infer(g);
    CHECK(rep.converged);
    CHECK(rep.max_residual <= EpConfig{}.convergence_eps);
    CHECK(rep.sweeps_used >= 1);
    CHECK(rep.posteriors.cells.size() == s.data.records.size());

    EpConfig one;
    one.max_sweeps = 1;
    const auto short_rep = infer(g, one);
    CHECK_FALSE(short_rep.converged);
    CHECK(short_rep.sweeps_used == 1);
    CHECK(short_rep.max_residual > one.convergence_eps);
}

TEST_CASE("idempotence at convergence") {
    for (auto pri : {fixed_priors(), PriorSpec{}}) {
        SynthConfig cfg;
        cfg.num_participants = 10;
        cfg.num_questions = 8;
        cfg.num_options = 3;
        cfg.priors = pri;
        cfg.seed = 21;
        const auto s = sample(cfg);
        const auto g = build_graph(s.data, {{0, s.gold.at(0)}}, pri);
        EpConfig c;
        const auto rep = infer(g, c);
        REQUIRE(rep.converged);
        c.max_sweeps = rep.sweeps_used + 1;
        c.convergence_eps = 1e-300;
        const auto more = infer(g, c);
        CHECK(more.sweeps_used == rep.sweeps_used + 1);
        CHECK(max_nat_diff(rep.posteriors, more.posteriors) <= EpConfig{}.convergence_eps);
    }
}

TEST_CASE("schedule determinism") {
    SynthConfig cfg;
    cfg.num_participants = 15;
    cfg.num_questions = 10;
    cfg.response_density = 0.7;
    cfg.seed = 8;
    const auto s = sample(cfg);
    const auto g = build_graph(s.data, {}, cfg.priors);
    const auto a = infer(g);
    const auto b = infer(g);
    CHECK(a.sweeps_used == b.sweeps_used);
    CHECK(a.max_residual == b.max_residual);
    CHECK(bitwise_equal(a.posteriors, b.posteriors));
}

TEST_CASE("fixed and nearly degenerate learned precision agree") {
    const double tau0 = 1.7;
    SynthConfig cfg;
    cfg.num_participants = 8;
    cfg.num_questions = 6;
    cfg.num_options = 3;
    cfg.priors = fixed_priors(tau0);
    cfg.seed = 5;
    const auto s = sample(cfg);
    const GoldSet gold{{2, s.gold.at(2)}};
    PriorSpec learned;
    learned.precision = GammaDist(1e6, 1e-6 * tau0);
    EpConfig tight;
    tight.convergence_eps = 1e-7;
    tight.max_sweeps = 400;
    const auto f = infer(build_graph(s.data, gold, fixed_priors(tau0)), tight).posteriors;
    const auto l = infer(build_graph(s.data, gold, learned), tight).posteriors;
    for (std::size_t p = 0; p < f.ability.size(); ++p) {
        CHECK(std::abs(f.ability[p].mean() - l.ability[p].mean()) < 1e-3);
        CHECK(std::abs(f.ability[p].variance() - l.ability[p].variance()) < 1e-3);
    }
    for (std::size_t q = 0; q < f.difficulty.size(); ++q) {
        CHECK(std::abs(f.difficulty[q].mean() - l.difficulty[q].mean()) < 1e-3);
        CHECK(std::abs(f.difficulty[q].variance() - l.difficulty[q].variance()) < 1e-3);
        CHECK(std::abs(l.precision[q].mean() - tau0) < 1e-3);
        CHECK(total_variation(f.answer[q], l.answer[q]) < 1e-3);
    }
    for (std::size_t c = 0; c < f.cells.size(); ++c) CHECK(std::abs(f.cells[c].p_correct - l.cells[c].p_correct) < 1e-3);
}

TEST_CASE("revealing one gold answer can widen an exact ability posterior") {
    // Conditioning reduces variance only on average: the exact posterior of
    // participant 1 widens when question 2's answer is revealed.
    SynthConfig cfg;
    cfg.num_participants = 3;
    cfg.num_questions = 3;
    cfg.num_options = 2;
    cfg.seed = 28;
    cfg.priors.discrimination = DiscriminationMode::Fixed;
    const auto s = sample(cfg);
    const auto before = exact_posteriors(s.data, {}, cfg.priors);
    const auto after = exact_posteriors(s.data, {{2, s.gold.at(2)}}, cfg.priors);
    CHECK(after.ability[1].variance() > before.ability[1].variance() + 1e-2);
}

TEST_CASE("revealing a gold answer never widens a respondent's ability posterior in expectation") {
    EpConfig tight;
    tight.convergence_eps = 1e-9;
    tight.max_sweeps = 2000;
    int checked = 0;
    for (std::uint64_t seed = 1; seed <= 16; ++seed) {
        SynthConfig cfg;
        cfg.num_participants = 6;
        cfg.num_questions = 5;
        cfg.num_options = 3;
        cfg.response_density = 0.8;
        cfg.seed = seed;
        if (seed % 2) cfg.priors = fixed_priors();
        const auto s = sample(cfg);
        GoldSet gold;
        for (std::size_t q = 0; q < 5; ++q) {
            const auto before = infer(build_graph(s.data, gold, cfg.priors), tight).posteriors;
            std::vector<double> expected(6, 0.0);
            for (int k = 0; k < 3; ++k) {
                GoldSet more = gold;
                more[q] = k;
                const auto after = infer(build_graph(s.data, more, cfg.priors), tight).posteriors;
                for (std::size_t p = 0; p < 6; ++p) expected[p] += before.answer[q][k] * after.ability[p].variance();
            }
            for (const auto& r : s.data.records_for_question(q)) {
                CHECK(expected[r.participant] <= before.ability[r.participant].variance() + 1e-6);
                ++checked;
            }
            gold[q] = s.gold.at(q);
        }
    }
    CHECK(checked > 300);
}

TEST_CASE("runtime per sweep is linear in the number of cells") {
    auto time_for = [](int participants) {
        SynthConfig cfg;
        cfg.num_participants = participants;
        cfg.num_questions = 40;
        cfg.seed = 2;
        const auto s = sample(cfg);
        const auto g = build_graph(s.data, {}, cfg.priors);
        EpConfig c;
        c.max_sweeps = 8;
        c.convergence_eps = 1e-300;
        double best = 1e300;
        for (int rep = 0; rep < 3; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto r = infer(g, c);
            const auto t1 = std::chrono::steady_clock::now();
            REQUIRE(r.sweeps_used == 8);
            best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
        }
        return best;
    };
    const double small = time_for(40);
    const double large = time_for(80);
    MESSAGE("40x40: " << small << " s, 80x40: " << large << " s");
    CHECK(large / small <= 2.5);
}

TEST_CASE("predictive response") {
    ResponseDataset d;
    d.add_question({"q", 4, std::nullopt, {}});
    d.participant_index("p");

    SUBCASE("prior only is uniform") {
        for (const auto& pri : {fixed_priors(), PriorSpec{}}) {
            const auto g = build_graph(d, {}, pri);
            const auto pred = predictive_response(g, g.prior_posteriors(), 0, 0);
            for (int k = 0; k < 4; ++k) CHECK(std::abs(pred[k] - 0.25) < 1e-3);
            CHECK(std::abs(pred.probs().sum() - 1.0) < 1e-9);
        }
    }
    SUBCASE("a very able participant answers gold") {
        const auto g = build_graph(d, {{0, 2}}, fixed_priors());
        auto post = g.prior_posteriors();
        post.ability[0] = Gaussian1D(6.0, 1e-6);
        post.difficulty[0] = Gaussian1D::point_mass(0.0);
        const auto pred = predictive_response(g, post, 0, 0);
        CHECK(pred[2] >= 0.99);
        const auto cell = query_cell(g, post, 0, 0);
        CHECK(cell.p_correct > 0.99);
        CHECK(cell.response_dist.probs() == pred.probs());
    }
}

TEST_CASE("predictive response agrees with the exact predictive on small instances") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SynthConfig cfg;
        cfg.num_participants = 3;
        cfg.num_questions = 2;
        cfg.num_options = 2;
        cfg.priors = fixed_priors();
        cfg.seed = seed;
        auto s = sample(cfg);
        // Hold out participant 2's answer to question 1 and predict it.
        ResponseDataset data = s.data;
        std::erase_if(data.records, [](const ResponseRecord& r) { return r.participant == 2 && r.question == 1; });
        const auto g = build_graph(data, {}, cfg.priors);
        const auto post = infer(g).posteriors;
        const auto pred = predictive_response(g, post, 2, 1);

        OracleConfig oc;
        oc.grid_points = 31;
        const double z = exact_evidence(data, {}, cfg.priors, ModelVariant::Full, oc);
        Eigen::VectorXd exact(2);
        for (int k = 0; k < 2; ++k) {
            auto with = data;
            with.records.push_back({2, 1, k});
            exact[k] = exact_evidence(with, {}, cfg.priors, ModelVariant::Full, oc) / z;
        }
        CHECK(std::abs(exact.sum() - 1.0) < 1e-9);
        CHECK(total_variation(pred, Discrete(exact / exact.sum())) < 0.05);
    }
}

TEST_CASE("negligible evidence is skipped and counted") {
    // Gold disagrees with every response while a point-mass ability sits
    // far above a point-mass difficulty: the failure branch has no mass.
    ResponseDataset d;
    d.add_question({"q", 2, std::nullopt, {}});
    d.participant_index("p");
    d.records.push_back({0, 0, 1});
    PriorSpec pri = fixed_priors(4.0);
    pri.ability = Gaussian1D(60.0, 1e-6);
    pri.difficulty = Gaussian1D(0.0, 1e-6);
    const auto rep = infer(build_graph(d, {{0, 0}}, pri));
    CHECK(rep.skipped_updates > 0);
    CHECK(rep.posteriors.ability[0].mean() == doctest::Approx(60.0));
}

TEST_CASE("coarse precision rules stay finite on a large revealed instance") {
    SynthConfig cfg;
    cfg.seed = 1;
    const auto s = sample(cfg);
    EpConfig c;
    c.tau_quadrature_nodes = 16;
    const auto rep = infer(build_graph(s.data, s.gold, cfg.priors), c);
    for (const auto& t : rep.posteriors.precision) {
        CHECK(std::isfinite(t.shape()));
        CHECK(std::isfinite(t.scale()));
        CHECK(t.mean() < 50.0);
    }
}
