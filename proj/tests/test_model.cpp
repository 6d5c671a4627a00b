#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dare/ep.hpp"
#include "dare/model.hpp"
#include "dare/synth.hpp"

#include <algorithm>
#include <numeric>

using namespace dare;

namespace {

ResponseDataset grid_dataset(int np, int nq, int k) {
    ResponseDataset d;
    for (int q = 0; q < nq; ++q) d.add_question({"q" + std::to_string(q), k, std::nullopt, {}});
    for (int p = 0; p < np; ++p) d.participant_index("p" + std::to_string(p));
    for (int p = 0; p < np; ++p)
        for (int q = 0; q < nq; ++q)
            d.records.push_back({static_cast<std::size_t>(p), static_cast<std::size_t>(q), (p + q) % k});
    return d;
}

PriorSpec fixed_priors(double tau = 1.0) {
    PriorSpec s;
    s.discrimination = DiscriminationMode::Fixed;
    s.fixed_precision = tau;
    return s;
}

bool contains(const std::vector<std::string>& v, const std::string& needle) {
    return std::any_of(v.begin(), v.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

}  // namespace

TEST_CASE("well-formed dataset validates cleanly") {
    CHECK(validate(grid_dataset(2, 3, 4), {{0, 1}}).empty());
}

TEST_CASE("duplicate cell is one violation naming the pair") {
    auto d = grid_dataset(2, 2, 3);
    d.records.push_back({1, 0, 2});
    const auto v = validate(d, {});
    REQUIRE(v.size() == 1);
    CHECK(contains(v, "participant 'p1'"));
    CHECK(contains(v, "question 'q0'"));
}

TEST_CASE("gold option equal to num_options is one range violation") {
    const auto d = grid_dataset(1, 2, 3);
    const auto v = validate(d, {{1, 3}});
    REQUIRE(v.size() == 1);
    CHECK(contains(v, "out of range"));
}

TEST_CASE("other structural violations") {
    auto d = grid_dataset(1, 1, 2);
    d.add_question({"q1", 1, std::nullopt, {}});
    d.add_question({"q2", 3, std::nullopt, {"a", "b"}});
    d.add_question({"q0", 2, std::nullopt, {}});
    d.records.push_back({0, 9, 0});
    d.records.push_back({0, 1, 5});
    const auto v = validate(d, {{17, 0}});
    CHECK(contains(v, "num_options 1 < 2"));
    CHECK(contains(v, "2 option texts for 3 options"));
    CHECK(contains(v, "duplicate id"));
    CHECK(contains(v, "unknown question index 9"));
    CHECK(contains(v, "response 5 out of range"));
    CHECK(contains(v, "gold: unknown question index 17"));
    CHECK_THROWS_AS(build_graph(d, {}, PriorSpec{}), ValidationError);
}

TEST_CASE("graph counts for a complete 2x3 matrix") {
    const auto g = build_graph(grid_dataset(2, 3, 4), {}, PriorSpec{});
    CHECK(g.num_latent_variables() == 2 + 3 * 3);
    CHECK(g.cells.size() == 6);
    for (std::size_t c = 1; c < g.cells.size(); ++c) {
        const auto& a = g.cells[c - 1];
        const auto& b = g.cells[c];
        CHECK((a.question < b.question || (a.question == b.question && a.participant < b.participant)));
    }
}

TEST_CASE("gold entries become clamped answer nodes") {
    const auto g = build_graph(grid_dataset(2, 3, 4), {{2, 3}}, PriorSpec{});
    CHECK_FALSE(g.answer[0].gold.has_value());
    REQUIRE(g.answer[2].gold.has_value());
    CHECK(*g.answer[2].gold == 3);
    const auto post = infer(g).posteriors;
    CHECK(post.answer[2][3] == 1.0);
}

TEST_CASE("variants clamp the right family") {
    const auto data = grid_dataset(3, 2, 2);
    PriorSpec pri;
    pri.ability = Gaussian1D(0.3, 2.0);
    pri.difficulty = Gaussian1D(-0.2, 1.5);
    const auto qo = build_graph(data, {}, pri, ModelVariant::QuestionOnly);
    for (std::size_t p = 0; p < 3; ++p) {
        CHECK(qo.ability_clamped[p]);
        CHECK(qo.ability_prior[p] == Gaussian1D::point_mass(0.3));
    }
    const auto post = infer(qo).posteriors;
    for (const auto& a : post.ability) CHECK(a == Gaussian1D::point_mass(0.3));

    const auto po = build_graph(data, {}, pri, ModelVariant::ParticipantOnly);
    for (std::size_t q = 0; q < 2; ++q) CHECK(po.difficulty_prior[q] == Gaussian1D::point_mass(-0.2));
    for (const auto& d : infer(po).posteriors.difficulty) CHECK(d == Gaussian1D::point_mass(-0.2));

    CHECK(parse_variant(to_string(ModelVariant::ParticipantOnly)) == ModelVariant::ParticipantOnly);
    CHECK_THROWS_AS(parse_variant("both"), ValidationError);
}

TEST_CASE("no evidence gives the priors back") {
    ResponseDataset d;
    d.add_question({"q", 3, std::nullopt, {}});
    d.participant_index("lonely");
    PriorSpec pri;
    pri.ability = Gaussian1D(1.0, 0.5);
    const auto g = build_graph(d, {}, pri);
    const auto rep = infer(g);
    CHECK(rep.posteriors.ability[0] == pri.ability);
    CHECK(rep.posteriors.difficulty[0] == pri.difficulty);
    CHECK(rep.posteriors.precision[0] == pri.precision);
    CHECK(rep.posteriors.answer[0].probs() == Discrete::uniform(3).probs());
    const auto prior = g.prior_posteriors();
    CHECK(prior.ability[0] == rep.posteriors.ability[0]);
}

TEST_CASE("participant and question relabelling permutes posteriors") {
    SynthConfig cfg;
    cfg.num_participants = 6;
    cfg.num_questions = 5;
    cfg.num_options = 3;
    cfg.priors = fixed_priors();
    cfg.seed = 11;
    const auto s = sample(cfg);
    const auto base = infer(build_graph(s.data, {}, cfg.priors)).posteriors;

    // Reverse both participant and question order.
    ResponseDataset perm;
    for (std::size_t q = 5; q-- > 0;) perm.add_question(s.data.questions[q]);
    for (std::size_t p = 6; p-- > 0;) perm.participants.push_back(s.data.participants[p]);
    for (const auto& r : s.data.records) perm.records.push_back({5 - r.participant, 4 - r.question, r.response});
    const auto moved = infer(build_graph(perm, {}, cfg.priors)).posteriors;

    for (std::size_t p = 0; p < 6; ++p) {
        CHECK(moved.ability[5 - p].mean() == doctest::Approx(base.ability[p].mean()).epsilon(1e-3));
        CHECK(moved.ability[5 - p].variance() == doctest::Approx(base.ability[p].variance()).epsilon(1e-3));
    }
    for (std::size_t q = 0; q < 5; ++q) {
        CHECK(moved.difficulty[4 - q].mean() == doctest::Approx(base.difficulty[q].mean()).epsilon(1e-3));
        CHECK(total_variation(moved.answer[4 - q], base.answer[q]) < 1e-3);
    }
}

TEST_CASE("option relabelling permutes the answer distribution") {
    SynthConfig cfg;
    cfg.num_participants = 5;
    cfg.num_questions = 4;
    cfg.num_options = 3;
    cfg.priors = fixed_priors();
    cfg.seed = 4;
    const auto s = sample(cfg);
    const GoldSet gold{{1, s.gold.at(1)}};
    const auto base = infer(build_graph(s.data, gold, cfg.priors)).posteriors;

    const int perm[3] = {2, 0, 1};
    auto relabelled = s.data;
    for (auto& r : relabelled.records)
        if (r.question == 0 || r.question == 1) r.response = perm[r.response];
    const GoldSet gold2{{1, perm[s.gold.at(1)]}};
    const auto moved = infer(build_graph(relabelled, gold2, cfg.priors)).posteriors;

    for (int k = 0; k < 3; ++k) {
        CHECK(moved.answer[0][perm[k]] == doctest::Approx(base.answer[0][k]).epsilon(1e-3));
        CHECK(moved.answer[1][perm[k]] == doctest::Approx(base.answer[1][k]).epsilon(1e-3));
    }
    for (std::size_t p = 0; p < 5; ++p)
        CHECK(moved.ability[p].mean() == doctest::Approx(base.ability[p].mean()).epsilon(1e-3));
    for (std::size_t q = 0; q < 4; ++q)
        CHECK(moved.difficulty[q].variance() == doctest::Approx(base.difficulty[q].variance()).epsilon(1e-3));
}

TEST_CASE("gold question yields a point mass regardless of responses") {
    auto d = grid_dataset(4, 1, 3);
    for (auto& r : d.records) r.response = 0;
    const auto post = infer(build_graph(d, {{0, 2}}, PriorSpec{})).posteriors;
    CHECK(post.answer[0].probs() == Discrete::point_mass(3, 2).probs());
}

TEST_CASE("prior and question clamps are checked") {
    PriorSpec bad = fixed_priors();
    bad.fixed_precision = 0.0;
    CHECK_THROWS_AS(bad.check(), ValidationError);

    auto g = build_graph(grid_dataset(2, 2, 2), {}, PriorSpec{});
    CHECK_THROWS_AS(clamp_questions(g, {{0.0}, {1.0}}), ValidationError);
    CHECK_THROWS_AS(clamp_questions(g, {{0.0, 0.0}, {1.0, -1.0}}), ValidationError);
    clamp_questions(g, {{0.5, -0.5}, {2.0, 3.0}});
    CHECK(g.difficulty_clamped[1]);
    CHECK(*g.precision[1].fixed == 3.0);
}

TEST_CASE("dataset helpers") {
    auto d = grid_dataset(3, 2, 2);
    CHECK(d.participant_index("p1") == 1);
    CHECK(d.participant_index("new") == 3);
    CHECK(d.find_question("q1") == std::optional<std::size_t>(1));
    CHECK_FALSE(d.find_question("zz").has_value());
    CHECK(d.records_for_question(1).size() == 3);
    CHECK(d.records_for_participant(2).size() == 2);
    const auto sub = d.subset_participants({2, 0});
    CHECK(sub.participants == std::vector<std::string>{"p2", "p0"});
    CHECK(sub.records.size() == 4);
    for (const auto& r : sub.records) CHECK(r.participant < 2);
    CHECK(sub == d.subset_participants({2, 0}));
    CHECK_FALSE(sub == d);
}
