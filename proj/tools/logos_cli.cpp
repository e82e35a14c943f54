// Command-line driver: evaluation, LHS scoring, curation, the toy training
// loop, CHI prompt assembly, metric correlation, and report re-rendering.
//
// Exit codes: 0 ok, 1 input error, 2 judge transport exhaustion,
// 3 partial results written.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "logos/chi.hpp"
#include "logos/curation.hpp"
#include "logos/dataset.hpp"
#include "logos/judge.hpp"
#include "logos/report.hpp"
#include "logos/toy.hpp"

namespace fs = std::filesystem;
using namespace logos;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitTransport = 2;
constexpr int kExitPartial = 3;

void write_output(const std::string& out_path, const std::string& content) {
    if (out_path.empty() || out_path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
    out << content;
}

struct CommonOptions {
    std::string config_path;
    std::string judges_mode = "mock";  // mock | live
    std::string cache_dir;
    uint64_t seed = 0;
    bool seed_set = false;
    double rel_tol = 0.0;
    bool rel_tol_set = false;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "JSON config file (see README)");
    cmd->add_option("--judges", opts.judges_mode, "Judge transports: mock or live")
        ->check(CLI::IsMember({"mock", "live"}));
    cmd->add_option("--cache-dir", opts.cache_dir, "Judge cache directory (overrides config)");
    cmd->add_option("--seed", opts.seed, "Seed (overrides config)")
        ->each([&](const std::string&) { opts.seed_set = true; });
    cmd->add_option("--rel-tol", opts.rel_tol,
                    "Default numeric answer tolerance (overrides config)")
        ->each([&](const std::string&) { opts.rel_tol_set = true; });
}

EvalConfig resolve_config(const CommonOptions& opts) {
    EvalConfig config;
    if (!opts.config_path.empty()) {
        config = load_eval_config(opts.config_path);
    } else {
        config.gateway = GatewayConfig::offline_defaults();
    }
    if (!opts.cache_dir.empty()) config.gateway.cache_dir = opts.cache_dir;
    if (opts.seed_set) config.seed = opts.seed;
    if (opts.rel_tol_set) config.default_rel_tolerance = opts.rel_tol;
    return config;
}

int emit_report(const EvalReport& report, const std::string& out_path,
                const std::string& format_name) {
    const auto format = parse_report_format(format_name);
    if (!format) throw std::runtime_error("unknown format '" + format_name + "'");
    write_output(out_path, render_report(report, *format));
    if (report.n_incomplete > 0) {
        std::cerr << "warning: " << report.n_incomplete
                  << " question(s) incomplete; partial results written\n";
        return kExitPartial;
    }
    return kExitOk;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::istringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        rows.push_back(std::move(fields));
    }
    return rows;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reasoning-chain hallucination evaluation and GRPO training toolkit"};
    app.require_subcommand(1);

    // ---- evaluate ----------------------------------------------------------
    auto* evaluate = app.add_subcommand("evaluate", "Run all three metric tiers");
    std::string eval_dataset, eval_responses, eval_out, eval_format = "table-text";
    CommonOptions eval_opts;
    evaluate->add_option("--dataset", eval_dataset, "Dataset file (line-delimited records)")
        ->required();
    evaluate->add_option("--responses", eval_responses, "Model responses file")->required();
    evaluate->add_option("--out", eval_out, "Output path (default stdout)");
    evaluate->add_option("--format", eval_format, "table-text, csv, or json")
        ->check(CLI::IsMember({"table-text", "csv", "json"}));
    add_common(evaluate, eval_opts);

    // ---- lhs ---------------------------------------------------------------
    auto* lhs_cmd = app.add_subcommand("lhs", "Run the LHS tier only");
    std::string lhs_dataset, lhs_responses, lhs_out, lhs_format = "table-text";
    CommonOptions lhs_opts;
    lhs_cmd->add_option("--dataset", lhs_dataset, "Dataset file")->required();
    lhs_cmd->add_option("--responses", lhs_responses, "Model responses file")->required();
    lhs_cmd->add_option("--out", lhs_out, "Output path (default stdout)");
    lhs_cmd->add_option("--format", lhs_format, "table-text, csv, or json")
        ->check(CLI::IsMember({"table-text", "csv", "json"}));
    add_common(lhs_cmd, lhs_opts);

    // ---- curate ------------------------------------------------------------
    auto* curate = app.add_subcommand("curate", "Difficulty filter + balanced sampling");
    std::string cur_traces, cur_dataset, cur_out;
    int cur_min_describers = 0;  // 0 = every describer in the trace
    int cur_min_errors = 0;      // 0 = majority of solvers
    int cur_target = 3;
    double cur_imbalance = kDefaultMaxImbalance;
    uint64_t cur_seed = 7;
    curate->add_option("--traces", cur_traces, "Perception trace file")->required();
    curate->add_option("--dataset", cur_dataset, "Dataset file (topics for balancing)")
        ->required();
    curate->add_option("--min-describers-ok", cur_min_describers,
                       "Verified describers required (0 = all of them)");
    curate->add_option("--min-solver-errors", cur_min_errors,
                       "Solver errors required (0 = majority)");
    curate->add_option("--target-per-topic", cur_target, "Target sample size per topic");
    curate->add_option("--max-imbalance", cur_imbalance, "Max per-topic count ratio");
    curate->add_option("--seed", cur_seed, "Sampling seed");
    curate->add_option("--out", cur_out, "Output path (default stdout)");

    // ---- train-sim ---------------------------------------------------------
    auto* train = app.add_subcommand("train-sim", "Curriculum GRPO on the synthetic task set");
    int tr_tasks = 200, tr_group = 8, tr_stages = 1, tr_epochs = 10;
    double tr_epsilon = 0.2, tr_step = 0.5, tr_decay = 0.99;
    uint64_t tr_seed = 7, tr_task_seed = 12345;
    std::string tr_out;
    train->add_option("--tasks", tr_tasks, "Synthetic task count");
    train->add_option("--task-seed", tr_task_seed, "Task generator seed");
    train->add_option("--seed", tr_seed, "Training seed");
    train->add_option("--group-size", tr_group, "Rollout group size G");
    train->add_option("--stages", tr_stages, "Curriculum rounds k after stage 1");
    train->add_option("--epochs", tr_epochs, "Epochs per stage");
    train->add_option("--epsilon", tr_epsilon, "Clip range");
    train->add_option("--step-size", tr_step, "Gradient step size");
    train->add_option("--decay", tr_decay, "Step decay per epoch");
    train->add_option("--out", tr_out, "Training log path (default stdout)");

    // ---- chi ---------------------------------------------------------------
    auto* chi = app.add_subcommand("chi", "Assemble a hint-augmented prompt");
    std::string chi_question, chi_topic, chi_out;
    bool chi_no_topic = false, chi_no_question = false;
    CommonOptions chi_opts;
    chi->add_option("--question", chi_question, "Question text")->required();
    chi->add_option("--topic", chi_topic, "Skip classification and use this topic");
    chi->add_flag("--no-topic-hint", chi_no_topic, "Drop the topic hint section");
    chi->add_flag("--no-question-hint", chi_no_question, "Drop the question hint section");
    chi->add_option("--out", chi_out, "Output path (default stdout)");
    add_common(chi, chi_opts);

    // ---- correlate ---------------------------------------------------------
    auto* correlate = app.add_subcommand("correlate", "Pearson matrix over metric columns");
    std::string cor_scores, cor_out;
    std::vector<std::string> cor_reports;
    correlate->add_option("--scores", cor_scores,
                          "CSV with columns model,accuracy,f_step,f_claim,lhs_mean[,lhs_std]");
    correlate->add_option("--reports", cor_reports, "JSON report files (alternative input)");
    correlate->add_option("--out", cor_out, "Output path (default stdout)");

    // ---- report ------------------------------------------------------------
    auto* report_cmd = app.add_subcommand("report", "Re-render a JSON report");
    std::string rep_in, rep_out, rep_format = "table-text";
    report_cmd->add_option("--in", rep_in, "JSON report file")->required();
    report_cmd->add_option("--format", rep_format, "table-text, csv, or json")
        ->check(CLI::IsMember({"table-text", "csv", "json"}));
    report_cmd->add_option("--out", rep_out, "Output path (default stdout)");

    // ---- init --------------------------------------------------------------
    auto* init = app.add_subcommand("init", "Write editable config, templates, and hints");
    std::string init_dir = "data";
    init->add_option("--dir", init_dir, "Target directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*evaluate) {
            const auto config = resolve_config(eval_opts);
            JudgeGateway gateway(config.gateway);
            if (eval_opts.judges_mode == "mock") gateway.force_mock();
            const auto report = run_evaluate(eval_dataset, eval_responses, config, gateway);
            return emit_report(report, eval_out, eval_format);
        }

        if (*lhs_cmd) {
            const auto config = resolve_config(lhs_opts);
            JudgeGateway gateway(config.gateway);
            if (lhs_opts.judges_mode == "mock") gateway.force_mock();
            const auto report = run_lhs_only(lhs_dataset, lhs_responses, config, gateway);
            return emit_report(report, lhs_out, lhs_format);
        }

        if (*curate) {
            const auto traces = load_traces(cur_traces);
            std::vector<std::string> kept;
            if (cur_min_describers == 0 || cur_min_errors == 0) {
                // Per-trace defaults: every describer verified, majority of
                // solvers wrong.
                for (const auto& t : traces) {
                    const int need_ok = cur_min_describers == 0
                                            ? static_cast<int>(t.describers.size())
                                            : cur_min_describers;
                    const int need_wrong = cur_min_errors == 0
                                               ? static_cast<int>(t.solvers.size()) / 2 + 1
                                               : cur_min_errors;
                    const auto one = difficulty_filter({t}, need_ok, need_wrong);
                    kept.insert(kept.end(), one.begin(), one.end());
                }
            } else {
                kept = difficulty_filter(traces, cur_min_describers, cur_min_errors);
            }

            const auto records = load_dataset(cur_dataset);
            std::map<std::string, Topic> topic_of;
            for (const auto& rec : records) topic_of[rec.id] = rec.topic;
            std::map<Topic, std::vector<std::string>> by_topic;
            for (const auto& id : kept) {
                auto it = topic_of.find(id);
                if (it == topic_of.end())
                    throw std::runtime_error("trace id '" + id + "' not in dataset");
                by_topic[it->second].push_back(id);
            }
            const auto sampled = balance_sample(by_topic, cur_target, cur_imbalance, cur_seed);
            std::ostringstream out;
            out << "# difficulty-kept " << kept.size() << " of " << traces.size()
                << ", balanced sample " << sampled.size() << " (max imbalance " << cur_imbalance
                << ", seed " << cur_seed << ")\n";
            for (const auto& id : sampled) out << id << '\n';
            write_output(cur_out, out.str());
            return kExitOk;
        }

        if (*train) {
            const auto tasks = toy::make_task_set(tr_tasks, tr_task_seed);
            toy::TrainConfig cfg;
            cfg.group_size = tr_group;
            cfg.epochs_per_stage = tr_epochs;
            cfg.curriculum_rounds = tr_stages;
            cfg.step_size = tr_step;
            cfg.step_decay = tr_decay;
            cfg.epsilon = tr_epsilon;
            cfg.seed = tr_seed;
            const auto log = toy::run_curriculum(tasks, cfg);
            write_output(tr_out, log.to_jsonl());
            std::cerr << "final greedy accuracy " << log.epochs.back().accuracy << " over "
                      << tasks.size() << " tasks\n";
            return kExitOk;
        }

        if (*chi) {
            const auto config = resolve_config(chi_opts);
            JudgeGateway gateway(config.gateway);
            if (chi_opts.judges_mode == "mock") gateway.force_mock();
            const HintLibrary hints = config.hints_dir.empty()
                                          ? HintLibrary()
                                          : HintLibrary::from_directory(config.hints_dir);
            Topic topic;
            if (!chi_topic.empty()) {
                const auto parsed = parse_topic(chi_topic);
                if (!parsed) throw std::runtime_error("unknown topic '" + chi_topic + "'");
                topic = *parsed;
            } else {
                topic = classify_question(chi_question, gateway,
                                          config.gateway.roles.classifier);
            }
            ChiOptions options;
            options.topic_hint = !chi_no_topic;
            options.question_hint = !chi_no_question;
            const auto prompt = assemble_chi_prompt(chi_question, topic, hints, gateway,
                                                    config.gateway.roles.hinter, options);
            write_output(chi_out, prompt.rendered + "\n");
            return kExitOk;
        }

        if (*correlate) {
            std::array<std::vector<double>, 4> series;
            if (!cor_scores.empty()) {
                const auto rows = read_csv(cor_scores);
                if (rows.size() < 2) throw std::runtime_error("scores CSV has no data rows");
                for (size_t i = 1; i < rows.size(); ++i) {  // skip header
                    const auto& row = rows[i];
                    if (row.size() < 5)
                        throw std::runtime_error("scores CSV row " + std::to_string(i + 1) +
                                                 ": expected at least 5 columns");
                    for (int m = 0; m < 4; ++m) series[m].push_back(std::stod(row[m + 1]));
                }
            } else if (!cor_reports.empty()) {
                std::vector<EvalReport> reports;
                for (const auto& path : cor_reports) {
                    std::ifstream in(path);
                    if (!in) throw std::runtime_error("cannot open '" + path + "'");
                    std::ostringstream body;
                    body << in.rdbuf();
                    reports.push_back(parse_report_json(body.str()));
                }
                const auto matrix = metric_correlation(reports);
                write_output(cor_out, render_correlation(matrix));
                return kExitOk;
            } else {
                throw std::runtime_error("correlate: provide --scores or --reports");
            }
            if (series[0].size() < 3)
                throw std::runtime_error("correlate: need at least 3 rows");
            const auto matrix = metric_correlation_series(series);
            write_output(cor_out, render_correlation(matrix));
            return kExitOk;
        }

        if (*report_cmd) {
            std::ifstream in(rep_in);
            if (!in) throw std::runtime_error("cannot open '" + rep_in + "'");
            std::ostringstream body;
            body << in.rdbuf();
            const auto report = parse_report_json(body.str());
            const auto format = parse_report_format(rep_format);
            if (!format) throw std::runtime_error("unknown format '" + rep_format + "'");
            write_output(rep_out, render_report(report, *format));
            return kExitOk;
        }

        if (*init) {
            fs::create_directories(fs::path(init_dir) / "templates");
            for (const auto& [id, body] : builtin_templates()) {
                std::ofstream out(fs::path(init_dir) / "templates" / (id + ".txt"));
                out << body;
            }
            HintLibrary().write_directory((fs::path(init_dir) / "hints").string());
            EvalConfig config;
            config.gateway = GatewayConfig::offline_defaults();
            config.gateway.templates_dir = (fs::path(init_dir) / "templates").string();
            config.gateway.cache_dir = ".logos-cache";
            config.hints_dir = (fs::path(init_dir) / "hints").string();
            std::ofstream out(fs::path(init_dir) / "config.mock.json");
            out << eval_config_to_json(config);
            std::cout << "wrote " << init_dir << "/config.mock.json, templates/, hints/\n";
            return kExitOk;
        }
    } catch (const TransportError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitTransport;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInputError;
    }
    return kExitOk;
}
