// Command-line driver: inference, synthetic data, experiments, static test
// sets and the session server.

#include "dare/baselines.hpp"
#include "dare/eval.hpp"
#include "dare/io.hpp"
#include "dare/service.hpp"
#include "dare/synth.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <filesystem>
#include <iostream>

using namespace dare;
using nlohmann::json;

namespace {

constexpr const char* kFooter = R"(Environment:
  DARE_PRIOR_ABILITY     default ability prior as "mean,variance"
  DARE_PRIOR_DIFFICULTY  default difficulty prior as "mean,variance"
  DARE_PRIOR_PRECISION   default precision prior as "shape,scale"
  DARE_DISCRIMINATION    "learned" or "fixed:<v>"
Flags override the environment, which overrides built-in defaults.

Exit status: 0 success, 1 invalid input or usage, 2 runtime failure.)";

struct ModelFlags {
    std::optional<std::string> priors;
    std::optional<std::string> discrimination;
    std::optional<int> ep_max_sweeps;
    std::optional<double> ep_eps;
    std::optional<double> ep_damping;
    std::optional<int> ep_tau_nodes;
    std::uint64_t seed = 1;

    void add_to(CLI::App* app) {
        app->add_option("--seed", seed, "Random seed")->capture_default_str();
        app->add_option("--priors", priors, "Priors as a JSON file or inline JSON object");
        app->add_option("--discrimination", discrimination, "learned | fixed:<v>");
        app->add_option("--ep-max-sweeps", ep_max_sweeps, "EP sweep limit");
        app->add_option("--ep-eps", ep_eps, "EP convergence tolerance");
        app->add_option("--ep-damping", ep_damping, "EP damping in (0, 1]");
        app->add_option("--ep-tau-nodes", ep_tau_nodes, "Quadrature nodes over the precision");
    }

    [[nodiscard]] PriorSpec resolve_priors() const {
        PriorSpec p = priors_from_env();
        if (priors) {
            const std::string text = !priors->empty() && priors->front() == '{' ? *priors : read_file(*priors);
            json j;
            try {
                j = json::parse(text);
            } catch (const json::exception& e) {
                throw ValidationError({std::string("--priors: ") + e.what()});
            }
            p = priors_from_json(j, p);
        }
        if (discrimination) apply_discrimination(p, *discrimination);
        p.check();
        return p;
    }

    [[nodiscard]] EpConfig resolve_ep(EpConfig c) const {
        if (ep_max_sweeps) c.max_sweeps = *ep_max_sweeps;
        if (ep_eps) c.convergence_eps = *ep_eps;
        if (ep_damping) c.damping = *ep_damping;
        if (ep_tau_nodes) c.tau_quadrature_nodes = *ep_tau_nodes;
        c.check();
        return c;
    }
};

struct DataFlags {
    std::string responses, questions;
    std::optional<std::string> gold;

    void add_to(CLI::App* app, bool required) {
        auto* r = app->add_option("--responses", responses, "participant_id,question_id,response CSV");
        auto* q = app->add_option("--questions", questions, "question_id,num_options[,...] CSV");
        if (required) {
            r->required();
            q->required();
        }
        app->add_option("--gold", gold, "question_id,correct_option CSV");
    }
    [[nodiscard]] FileManifest manifest() const { return {responses, questions, gold}; }
};

void log_config(const std::string& command, const json& config) {
    std::cerr << "config " << json{{"command", command}, {"settings", config}}.dump() << "\n";
}

std::vector<int> parse_list(const std::string& text, const char* what) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ValidationError({std::string(what) + ": '" + item + "' is not an integer"});
        }
    }
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"Joint inference of answers, abilities and difficulties from multiple-choice responses"};
    app.footer(kFooter);
    app.require_subcommand(1);

    // infer ---------------------------------------------------------------
    auto* infer_cmd = app.add_subcommand("infer", "Infer posteriors from a response dataset");
    DataFlags infer_data;
    ModelFlags infer_model;
    std::string infer_out, variant = "full";
    std::optional<std::string> bank_out;
    bool with_cells = false;
    infer_data.add_to(infer_cmd, true);
    infer_model.add_to(infer_cmd);
    infer_cmd->add_option("--variant", variant, "full | question | participant")->capture_default_str();
    infer_cmd->add_option("--out", infer_out, "Posteriors JSON path")->required();
    infer_cmd->add_flag("--cells", with_cells, "Include per-cell p_correct");
    infer_cmd->add_option("--bank-out", bank_out, "Also write a calibrated question bank (needs every gold answer)");

    // synth ---------------------------------------------------------------
    auto* synth_cmd = app.add_subcommand("synth", "Sample a synthetic dataset");
    ModelFlags synth_model;
    SynthConfig synth_cfg;
    std::string synth_dir;
    synth_model.add_to(synth_cmd);
    synth_cmd->add_option("--participants", synth_cfg.num_participants)->capture_default_str();
    synth_cmd->add_option("--questions", synth_cfg.num_questions)->capture_default_str();
    synth_cmd->add_option("--options", synth_cfg.num_options)->capture_default_str();
    synth_cmd->add_option("--density", synth_cfg.response_density, "Fraction of observed cells")->capture_default_str();
    synth_cmd->add_option("--out-dir", synth_dir, "Directory for responses/questions/gold/truth CSVs")->required();

    // eval ----------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "Run an experiment and print its summary");
    ModelFlags eval_model;
    DataFlags eval_data;
    std::string experiment;
    std::optional<std::string> crowd_sizes, reveal_counts, budgets, out_prefix;
    ExperimentSpec spec;
    eval_cmd->add_option("experiment", experiment, "crowd-curve | gold-curve | scatter-skill | adaptive-vs-static")->required();
    eval_model.add_to(eval_cmd);
    eval_data.add_to(eval_cmd, false);
    eval_cmd->add_option("--repetitions", spec.repetitions)->capture_default_str();
    eval_cmd->add_option("--crowd-sizes", crowd_sizes, "Comma-separated, default 2,5,10,20,40");
    eval_cmd->add_option("--reveal-counts", reveal_counts, "Comma-separated, default 0,5,10,20,40");
    eval_cmd->add_option("--gold-crowd-size", spec.gold_crowd_size)->capture_default_str();
    eval_cmd->add_option("--budgets", budgets, "Comma-separated, default 2,5,10,20");
    eval_cmd->add_option("--participants", spec.population.num_participants, "Synthetic population")->capture_default_str();
    eval_cmd->add_option("--questions-count", spec.population.num_questions, "Synthetic population")->capture_default_str();
    eval_cmd->add_option("--options", spec.population.num_options, "Synthetic population")->capture_default_str();
    eval_cmd->add_option("--out-prefix", out_prefix, "Write <prefix>.summary.csv and <prefix>.records.csv");

    // static-set ----------------------------------------------------------
    auto* static_cmd = app.add_subcommand("static-set", "Choose a static test of a given size");
    DataFlags static_data;
    int budget = 0;
    static_data.add_to(static_cmd, true);
    static_cmd->add_option("--budget", budget, "Number of questions")->required();

    // serve ---------------------------------------------------------------
    auto* serve_cmd = app.add_subcommand("serve", "Run the adaptive session HTTP service");
    std::string data_dir = "dare-data", host = "127.0.0.1";
    int port = 8080;
    std::vector<std::string> bank_files;
    serve_cmd->add_option("--data-dir", data_dir, "Event logs and banks")->capture_default_str();
    serve_cmd->add_option("--host", host)->capture_default_str();
    serve_cmd->add_option("--port", port)->capture_default_str();
    serve_cmd->add_option("--bank", bank_files, "Register a bank file as <id>=<path.json>");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (*infer_cmd) {
        const PriorSpec priors = infer_model.resolve_priors();
        const EpConfig ep = infer_model.resolve_ep({});
        const ModelVariant v = parse_variant(variant);
        log_config("infer", {{"priors", to_json(priors)}, {"ep", to_json(ep)}, {"variant", to_string(v)},
                             {"seed", infer_model.seed}, {"responses", infer_data.responses},
                             {"questions", infer_data.questions}, {"gold", infer_data.gold.value_or("")},
                             {"out", infer_out}, {"cells", with_cells}});
        const auto loaded = load_dataset(infer_data.manifest());
        const auto rep = infer_variant(loaded.data, loaded.gold, priors, v, ep);
        save_posteriors(make_document(loaded, rep.posteriors, with_cells), infer_out);
        std::cout << "wrote " << infer_out << ": " << loaded.data.questions.size() << " questions, "
                  << loaded.data.participants.size() << " participants, " << rep.sweeps_used << " sweeps, "
                  << (rep.converged ? "converged" : "not converged") << "\n";
        if (bank_out) {
            const auto bank = calibrated_bank(loaded, priors, ep);
            write_file(*bank_out, bank_to_json(bank, SessionSettings{priors, ep, 10}).dump(2) + "\n");
            std::cout << "wrote " << *bank_out << "\n";
        }
        return rep.converged ? 0 : 2;
    }

    if (*synth_cmd) {
        synth_cfg.priors = synth_model.resolve_priors();
        synth_cfg.seed = synth_model.seed;
        log_config("synth", {{"priors", to_json(synth_cfg.priors)}, {"seed", synth_cfg.seed},
                             {"participants", synth_cfg.num_participants}, {"questions", synth_cfg.num_questions},
                             {"options", synth_cfg.num_options}, {"density", synth_cfg.response_density},
                             {"out_dir", synth_dir}});
        const auto s = sample(synth_cfg);
        std::filesystem::create_directories(synth_dir);
        const auto path = [&](const char* name) { return (std::filesystem::path(synth_dir) / name).string(); };
        save_dataset({s.data, s.gold, {}}, {path("responses.csv"), path("questions.csv"), path("gold.csv")});
        std::string truth = "kind,id,value\n";
        for (std::size_t p = 0; p < s.abilities.size(); ++p)
            truth += "ability," + s.data.participants[p] + "," + format_double(s.abilities[p]) + "\n";
        for (std::size_t q = 0; q < s.difficulties.size(); ++q) {
            truth += "difficulty," + s.data.questions[q].id + "," + format_double(s.difficulties[q]) + "\n";
            truth += "precision," + s.data.questions[q].id + "," + format_double(s.precisions[q]) + "\n";
        }
        write_file(path("truth.csv"), truth);
        std::cout << "wrote " << s.data.records.size() << " responses to " << synth_dir << "\n";
        return 0;
    }

    if (*eval_cmd) {
        spec.experiment = parse_experiment(experiment);
        spec.priors = eval_model.resolve_priors();
        spec.population.priors = spec.priors;
        spec.population.seed = eval_model.seed;
        spec.seed = eval_model.seed;
        spec.ep = eval_model.resolve_ep(ExperimentSpec::default_eval_ep());
        if (crowd_sizes) spec.crowd_sizes = parse_list(*crowd_sizes, "--crowd-sizes");
        if (reveal_counts) spec.reveal_counts = parse_list(*reveal_counts, "--reveal-counts");
        if (budgets) spec.budgets = parse_list(*budgets, "--budgets");
        json cfg = {{"experiment", to_string(spec.experiment)}, {"priors", to_json(spec.priors)}, {"ep", to_json(spec.ep)},
                    {"seed", spec.seed}, {"repetitions", spec.repetitions}, {"crowd_sizes", spec.crowd_sizes},
                    {"reveal_counts", spec.reveal_counts}, {"gold_crowd_size", spec.gold_crowd_size},
                    {"budgets", spec.budgets}};
        if (!eval_data.responses.empty() || !eval_data.questions.empty()) {
            if (eval_data.responses.empty() || eval_data.questions.empty() || !eval_data.gold)
                throw ValidationError({"eval: a supplied dataset needs --responses, --questions and --gold"});
            const auto loaded = load_dataset(eval_data.manifest());
            spec.data = LabelledData{loaded.data, loaded.gold};
            cfg["responses"] = eval_data.responses;
            cfg["questions"] = eval_data.questions;
            cfg["gold"] = *eval_data.gold;
        } else {
            cfg["population"] = {{"participants", spec.population.num_participants},
                                 {"questions", spec.population.num_questions},
                                 {"options", spec.population.num_options}};
        }
        log_config("eval", cfg);
        const auto report = run_experiment(spec);
        std::cout << summary_csv(report);
        if (out_prefix) {
            write_file(*out_prefix + ".summary.csv", summary_csv(report));
            write_file(*out_prefix + ".records.csv", records_csv(report));
        }
        return 0;
    }

    if (*static_cmd) {
        log_config("static-set", {{"responses", static_data.responses}, {"questions", static_data.questions},
                                  {"gold", static_data.gold.value_or("")}, {"budget", budget}});
        if (!static_data.gold) throw ValidationError({"static-set: --gold is required"});
        const auto loaded = load_dataset(static_data.manifest());
        const auto rates = solve_rates(loaded.data, loaded.gold);
        std::cout << "question_id,solve_rate\n";
        for (auto q : static_question_set(loaded.data, loaded.gold, budget))
            std::cout << loaded.data.questions[q].id << "," << format_double(*rates[q]) << "\n";
        return 0;
    }

    if (*serve_cmd) {
        log_config("serve", {{"data_dir", data_dir}, {"host", host}, {"port", port}, {"banks", bank_files}});
        SessionService service(data_dir);
        for (const auto& spec_text : bank_files) {
            const auto eq = spec_text.find('=');
            if (eq == std::string::npos) throw ValidationError({"--bank expects <id>=<path>"});
            service.put_bank(spec_text.substr(0, eq), json::parse(read_file(spec_text.substr(eq + 1))));
        }
        httplib::Server server;
        mount_routes(server, service);
        std::cerr << "listening on " << host << ":" << port << "\n";
        if (!server.listen(host, port)) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
        return 0;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ValidationError& e) {
        for (const auto& v : e.violations()) std::cerr << "error: " << v << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
