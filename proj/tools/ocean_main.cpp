#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ocean/corpus.hpp"
#include "ocean/experiments.hpp"
#include "ocean/extraction.hpp"
#include "ocean/gateway.hpp"
#include "ocean/inventory.hpp"
#include "ocean/metrics.hpp"
#include "ocean/preference.hpp"
#include "ocean/prompting.hpp"
#include "ocean/synth.hpp"
#include "ocean/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ocean;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitBackend = 3;

std::vector<corpus::Session> load_corpus(const std::string& path) {
    return corpus::load_sessions(path);
}

void write_manifest(const fs::path& out_dir, const std::string& command, const json& config,
                    const json& stats) {
    json manifest;
    manifest["command"] = command;
    manifest["config"] = config;
    manifest["config_sha256"] = util::sha256_hex(config.dump());
    manifest["stats"] = stats;
    manifest["version"] = kVersion;
    fs::create_directories(out_dir);
    util::write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

std::string row_markdown(const std::string& label, const experiments::EvalRow& row) {
    std::string os = "| Model | Cell | O | C | E | A | N | Avg. |\n";
    os += "| --- | --- | --- | --- | --- | --- | --- | --- |\n";
    os += "| " + row.model_name + " | " + label + " |";
    for (const experiments::DimensionEval& dim : row.dims) {
        os += " ";
        if (dim.corr) os += util::format_fixed(dim.corr->r, 3) + dim.corr->stars;
        os += " |";
    }
    os += " " + (row.avg_r ? util::format_fixed(*row.avg_r, 3) : std::string()) + " |\n";
    return os;
}

struct ConditionFlags {
    std::string method = "roleplay_and_questionnaire";
    std::string role;
    std::string role_name;
    double granularity = 1.0;

    prompting::PromptCondition resolve() const {
        prompting::PromptCondition condition;
        condition.method = prompting::method_from_name(method);
        if (role.empty()) {
            bool roleplay = condition.method == prompting::Method::roleplay_and_questionnaire ||
                            condition.method == prompting::Method::roleplay_only;
            condition.role = roleplay ? prompting::Role::client : prompting::Role::no_role;
        } else {
            condition.role = prompting::role_from_name(role);
        }
        condition.granularity = granularity;
        if (!role_name.empty()) condition = prompting::with_named_role(condition, role_name);
        prompting::validate(condition);
        return condition;
    }

    void add_flags(CLI::App* cmd) {
        cmd->add_option("--method", method,
                        "questionnaire_only | roleplay_and_questionnaire | roleplay_only | "
                        "baseline_direct")
            ->capture_default_str();
        cmd->add_option("--role", role, "client | counselor | observer | no_role");
        cmd->add_option("--role-name", role_name, "persona name for counselor/observer roles");
        cmd->add_option("--granularity", granularity, "fraction of dialogue kept, (0, 1]")
            ->capture_default_str();
    }

    json to_json() const {
        json j;
        j["method"] = method;
        j["role"] = role;
        j["role_name"] = role_name;
        j["granularity"] = granularity;
        return j;
    }
};

struct BackendFlags {
    std::string backend = "simulator";
    std::string model = "simulator";
    std::string endpoint;
    double temperature = 0.0;
    double noise_sd = 0.0;
    double refusal_rate = 0.0;
    bool length_noise = false;
    std::uint64_t seed = 42;
    std::string salt;
    std::string cache;  // empty -> <out>/cache
    int max_in_flight = 4;

    void add_flags(CLI::App* cmd) {
        cmd->add_option("--backend", backend, "simulator | remote")->capture_default_str();
        cmd->add_option("--model", model, "model name")->capture_default_str();
        cmd->add_option("--endpoint", endpoint, "remote base url, e.g. https://host:8000/v1");
        cmd->add_option("--temperature", temperature, "sampling temperature")
            ->capture_default_str();
        cmd->add_option("--noise-sd", noise_sd, "simulator answer noise")->capture_default_str();
        cmd->add_option("--refusal-rate", refusal_rate, "simulator refusal probability")
            ->capture_default_str();
        cmd->add_flag("--length-noise", length_noise,
                      "scale simulator noise by 1/sqrt(granularity)");
        cmd->add_option("--seed", seed, "simulator seed")->capture_default_str();
        cmd->add_option("--salt", salt, "extra simulator answer salt");
        cmd->add_option("--cache", cache, "completion cache directory (default <out>/cache)");
        cmd->add_option("--max-in-flight", max_in_flight, "parallel requests")
            ->capture_default_str();
    }

    std::shared_ptr<gateway::Gateway> make_gateway(const std::vector<corpus::Session>& sessions,
                                                   const std::optional<fs::path>& cache_dir) const {
        gateway::BackendConfig config;
        config.model_name = model;
        config.temperature = temperature;
        config.max_in_flight = max_in_flight;
        config.cache_dir = cache_dir;
        std::shared_ptr<gateway::Backend> be;
        if (backend == "remote") {
            if (endpoint.empty())
                throw CLI::ValidationError("--endpoint", "required with --backend remote");
            config.kind = gateway::BackendConfig::Kind::remote;
            config.endpoint_url = endpoint;
            be = std::make_shared<gateway::RemoteBackend>(config);
        } else if (backend == "simulator" || backend == "sim") {
            config.kind = gateway::BackendConfig::Kind::simulator;
            gateway::SimulatorOptions options;
            options.noise_sd = noise_sd;
            options.refusal_rate = refusal_rate;
            options.seed = seed;
            options.length_dependent_noise = length_noise;
            options.salt_suffix = salt;
            std::map<std::string, TraitScores> latents;
            for (const corpus::Session& session : sessions)
                if (session.ground_truth) latents[session.session_id] = *session.ground_truth;
            be = std::make_shared<gateway::SimulatorBackend>(config, options, latents);
        } else {
            throw CLI::ValidationError("--backend", "unknown backend '" + backend + "'");
        }
        return std::make_shared<gateway::Gateway>(be);
    }

    json to_json() const {
        json j;
        j["backend"] = backend;
        j["model"] = model;
        j["endpoint"] = endpoint;
        j["temperature"] = temperature;
        j["noise_sd"] = noise_sd;
        j["refusal_rate"] = refusal_rate;
        j["length_noise"] = length_noise;
        j["seed"] = seed;
        j["salt"] = salt;
        j["max_in_flight"] = max_in_flight;
        return j;
    }
};

struct ScoringFlags {
    std::string policy = "prorate";
    int min_items = 10;
    std::string scale = "mean";
    std::string template_dir;
    std::string rules_dir;

    void add_flags(CLI::App* cmd) {
        cmd->add_option("--score-policy", policy, "strict | prorate")->capture_default_str();
        cmd->add_option("--min-items", min_items, "prorate: answers required per domain")
            ->capture_default_str();
        cmd->add_option("--score-scale", scale, "mean (1-5) | sum (12-60), display only")
            ->capture_default_str();
        cmd->add_option("--template-dir", template_dir, "prompt template directory")
            ->check(CLI::ExistingDirectory);
        cmd->add_option("--rules-dir", rules_dir, "extraction pattern directory")
            ->check(CLI::ExistingDirectory);
    }

    experiments::RunOptions resolve() const {
        experiments::RunOptions options;
        if (policy == "strict")
            options.score_policy = inventory::ScorePolicy::strict;
        else if (policy == "prorate")
            options.score_policy = inventory::ScorePolicy::prorate;
        else
            throw CLI::ValidationError("--score-policy", "must be strict or prorate");
        options.min_items_per_domain = min_items;
        if (!template_dir.empty()) options.templates = prompting::TemplateSet::load(template_dir);
        if (!rules_dir.empty()) options.parse_rules = extraction::ParseRules::from_dir(rules_dir);
        if (scale != "mean" && scale != "sum")
            throw CLI::ValidationError("--score-scale", "must be mean or sum");
        return options;
    }

    double display_factor() const { return scale == "sum" ? 12.0 : 1.0; }

    json to_json() const {
        json j;
        j["score_policy"] = policy;
        j["min_items"] = min_items;
        j["score_scale"] = scale;
        j["template_dir"] = template_dir;
        j["rules_dir"] = rules_dir;
        return j;
    }
};

std::string predictions_csv(const std::vector<experiments::PredictionRecord>& records,
                            double factor) {
    std::string csv = "session_id,O,C,E,A,N,answered,refusals,unparseable\n";
    for (const experiments::PredictionRecord& record : records) {
        csv += record.session_id;
        for (Domain d : kDomains) {
            csv += ",";
            if (record.predicted)
                csv += util::format_fixed(record.predicted->get(d) * factor, 4);
        }
        csv += "," + std::to_string(record.answered) + "," + std::to_string(record.refusal_count) +
               "," + std::to_string(record.unparseable_count) + "\n";
    }
    return csv;
}

std::string skips_text(const std::string& cell_id,
                       const std::vector<experiments::SkipEntry>& skips) {
    std::string out;
    for (const experiments::SkipEntry& skip : skips)
        out += cell_id + "\t" + skip.session_id + "\t" + skip.reason + "\n";
    return out;
}

int guarded(const std::function<void()>& body) {
    try {
        body();
        return 0;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const prompting::RoleMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const gateway::GatewayError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const experiments::CellFailed& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"counseling-dialogue personality profiler"};
    app.set_version_flag("--version", kVersion);
    app.set_config("--config", "", "TOML config; flags override file values");
    app.require_subcommand(1);

    std::function<int()> action;

    // validate
    {
        auto* cmd = app.add_subcommand("validate", "lint a corpus and print its statistics");
        auto corpus_path = std::make_shared<std::string>();
        auto out_dir = std::make_shared<std::string>();
        cmd->add_option("--corpus", *corpus_path, "corpus jsonl")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--out", *out_dir, "write stats.md and manifest here");
        cmd->callback([&action, corpus_path, out_dir] {
            action = [corpus_path, out_dir] {
                return guarded([&] {
                    std::vector<corpus::Session> sessions = load_corpus(*corpus_path);
                    std::string table = corpus::stats_markdown(sessions);
                    std::cout << table;
                    if (!out_dir->empty()) {
                        fs::path dir(*out_dir);
                        fs::create_directories(dir);
                        util::write_file_atomic(dir / "stats.md", table);
                        json config{{"corpus", *corpus_path}};
                        write_manifest(dir, "validate", config,
                                       json{{"sessions", sessions.size()}});
                    }
                });
            };
        });
    }

    // simulate-corpus
    {
        auto* cmd = app.add_subcommand("simulate-corpus",
                                       "generate a synthetic corpus with known traits");
        auto config = std::make_shared<synth::SynthConfig>();
        auto out_file = std::make_shared<std::string>();
        cmd->add_option("--n", config->n_sessions, "session count")->capture_default_str();
        cmd->add_option("--seed", config->seed, "generator seed")->capture_default_str();
        cmd->add_option("--clients", config->n_clients, "distinct clients")
            ->capture_default_str();
        cmd->add_option("--counselors", config->n_counselors, "distinct counselors")
            ->capture_default_str();
        cmd->add_option("--out", *out_file, "output corpus jsonl")->required();
        cmd->callback([&action, config, out_file] {
            action = [config, out_file] {
                return guarded([&] {
                    std::vector<corpus::Session> sessions = synth::simulate_corpus(*config);
                    corpus::save_sessions(sessions, *out_file);
                    json jconfig{{"n", config->n_sessions},
                                 {"seed", config->seed},
                                 {"clients", config->n_clients},
                                 {"counselors", config->n_counselors},
                                 {"out", *out_file}};
                    json manifest{{"command", "simulate-corpus"},
                                  {"config", jconfig},
                                  {"config_sha256", util::sha256_hex(jconfig.dump())},
                                  {"stats", json{{"sessions", sessions.size()}}},
                                  {"version", kVersion}};
                    util::write_file_atomic(*out_file + ".manifest.json",
                                            manifest.dump(2) + "\n");
                    std::cout << "wrote " << sessions.size() << " sessions to " << *out_file
                              << "\n";
                });
            };
        });
    }

    // audit-anon
    {
        auto* cmd = app.add_subcommand("audit-anon",
                                       "scan a corpus for likely de-anonymization leaks");
        auto corpus_path = std::make_shared<std::string>();
        auto markers_file = std::make_shared<std::string>();
        cmd->add_option("--corpus", *corpus_path, "corpus jsonl")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--markers-file", *markers_file,
                        "placeholder markers, one per line ('#' comments)")
            ->check(CLI::ExistingFile);
        cmd->callback([&action, corpus_path, markers_file] {
            action = [corpus_path, markers_file] {
                int findings = 0;
                int rc = guarded([&] {
                    std::vector<corpus::Session> sessions = load_corpus(*corpus_path);
                    std::vector<std::string> markers = {"[NAME]",     "[PHONE]", "[EMAIL]",
                                                        "[LOCATION]", "[DATE]",  "[ID]"};
                    if (!markers_file->empty()) {
                        markers.clear();
                        for (const std::string& line :
                             util::split_lines(util::read_file(*markers_file))) {
                            std::string t = util::trim(line);
                            if (!t.empty() && t[0] != '#') markers.push_back(t);
                        }
                    }
                    for (const corpus::Session& session : sessions)
                        for (const corpus::AnonFinding& f :
                             corpus::audit_anonymization(session, markers)) {
                            ++findings;
                            std::cout << session.session_id << "\tutterance "
                                      << f.utterance_index << "\t" << f.kind << "\t" << f.excerpt
                                      << "\n";
                        }
                    std::cout << findings << " finding(s)\n";
                });
                if (rc != 0) return rc;
                return findings == 0 ? 0 : kExitData;
            };
        });
    }

    // predict
    {
        auto* cmd = app.add_subcommand("predict", "run one prediction cell over a corpus");
        auto corpus_path = std::make_shared<std::string>();
        auto out_dir = std::make_shared<std::string>();
        auto condition_flags = std::make_shared<ConditionFlags>();
        auto backend_flags = std::make_shared<BackendFlags>();
        auto scoring_flags = std::make_shared<ScoringFlags>();
        cmd->add_option("--corpus", *corpus_path, "corpus jsonl")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--out", *out_dir, "output directory")->required();
        condition_flags->add_flags(cmd);
        backend_flags->add_flags(cmd);
        scoring_flags->add_flags(cmd);
        cmd->callback([&action, corpus_path, out_dir, condition_flags, backend_flags,
                       scoring_flags] {
            action = [corpus_path, out_dir, condition_flags, backend_flags, scoring_flags] {
                return guarded([&] {
                    std::vector<corpus::Session> sessions = load_corpus(*corpus_path);
                    prompting::PromptCondition condition = condition_flags->resolve();
                    experiments::RunOptions options = scoring_flags->resolve();
                    fs::path out(*out_dir);
                    fs::path cache = backend_flags->cache.empty() ? out / "cache"
                                                                  : fs::path(backend_flags->cache);
                    std::shared_ptr<gateway::Gateway> gw =
                        backend_flags->make_gateway(sessions, cache);

                    experiments::CellResult cell =
                        experiments::run_cell(sessions, condition, *gw, options);
                    std::string cell_id =
                        experiments::cell_id_for(backend_flags->model, condition);

                    fs::create_directories(out / "records");
                    fs::create_directories(out / "tables");
                    std::string lines;
                    for (const experiments::PredictionRecord& record : cell.records)
                        lines += experiments::record_to_json_line(record) + "\n";
                    util::write_file_atomic(out / "records" / (cell_id + ".jsonl"), lines);

                    std::string responses;
                    for (const extraction::ItemResponse& r : cell.responses) {
                        preference::ResponseRecord record;
                        record.session_id = r.session_id;
                        record.item_index = r.item_index;
                        record.model_name = r.model_name;
                        record.raw_text = r.raw_text;
                        record.condition = condition;
                        responses += preference::response_to_json_line(record) + "\n";
                    }
                    util::write_file_atomic(out / "responses.jsonl", responses);
                    util::write_file_atomic(out / "skips.log", skips_text(cell_id, cell.skips));
                    util::write_file_atomic(
                        out / "predictions.csv",
                        predictions_csv(cell.records, scoring_flags->display_factor()));

                    std::string table;
                    try {
                        experiments::EvalRow row =
                            experiments::evaluate_cell(cell.records, sessions);
                        table = row_markdown(cell_id, row);
                    } catch (const metrics::TooFewValues& e) {
                        table = std::string("too few scored sessions to evaluate: ") + e.what() +
                                "\n";
                    }
                    util::write_file_atomic(out / "tables" / "cell.md", table);
                    std::cout << table;

                    json config = condition_flags->to_json();
                    config.update(backend_flags->to_json());
                    config.update(scoring_flags->to_json());
                    config["corpus"] = *corpus_path;
                    json stats{{"backend_calls", gw->backend_calls()},
                               {"cache_hits", gw->cache_hits()},
                               {"cache_warnings", gw->cache_warnings()},
                               {"records", cell.records.size()},
                               {"skips", cell.skips.size()}};
                    write_manifest(out, "predict", config, stats);
                    std::cout << cell.records.size() << " records, " << cell.skips.size()
                              << " skips, " << gw->backend_calls() << " backend calls, "
                              << gw->cache_hits() << " cache hits\n";
                });
            };
        });
    }

    // evaluate
    {
        auto* cmd = app.add_subcommand("evaluate", "correlate stored records with ground truth");
        auto records_path = std::make_shared<std::string>();
        auto corpus_path = std::make_shared<std::string>();
        auto out_dir = std::make_shared<std::string>();
        cmd->add_option("--records", *records_path, "records jsonl from predict/sweep")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--corpus", *corpus_path, "corpus jsonl")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--out", *out_dir, "write cell.md and manifest here");
        cmd->callback([&action, records_path, corpus_path, out_dir] {
            action = [records_path, corpus_path, out_dir] {
                return guarded([&] {
                    std::vector<corpus::Session> sessions = load_corpus(*corpus_path);
                    std::vector<experiments::PredictionRecord> records;
                    for (const std::string& line :
                         util::split_lines(util::read_file(*records_path)))
                        if (!line.empty())
                            records.push_back(experiments::record_from_json_line(line));
                    experiments::EvalRow row = experiments::evaluate_cell(records, sessions);
                    std::string table = row_markdown(
                        experiments::cell_id_for(row.model_name, row.condition), row);
                    std::cout << table;
                    if (!out_dir->empty()) {
                        fs::path dir(*out_dir);
                        fs::create_directories(dir / "tables");
                        util::write_file_atomic(dir / "tables" / "cell.md", table);
                        json config{{"records", *records_path}, {"corpus", *corpus_path}};
                        write_manifest(dir, "evaluate", config,
                                       json{{"records", records.size()}});
                    }
                });
            };
        });
    }

    // sweep (alias: run)
    {
        auto* cmd = app.add_subcommand("sweep", "run the full experiment grid");
        cmd->alias("run");
        auto corpus_path = std::make_shared<std::string>();
        auto grid_path = std::make_shared<std::string>();
        auto out_dir = std::make_shared<std::string>();
        auto cache_dir = std::make_shared<std::string>();
        auto max_in_flight = std::make_shared<int>(4);
        auto scoring_flags = std::make_shared<ScoringFlags>();
        cmd->add_option("--corpus", *corpus_path, "corpus jsonl")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--grid", *grid_path, "grid toml")->required()->check(CLI::ExistingFile);
        cmd->add_option("--out", *out_dir, "output directory")->required();
        cmd->add_option("--cache", *cache_dir, "completion cache directory (default <out>/cache)");
        cmd->add_option("--max-in-flight", *max_in_flight, "parallel requests")
            ->capture_default_str();
        scoring_flags->add_flags(cmd);
        cmd->callback([&action, corpus_path, grid_path, out_dir, cache_dir, max_in_flight,
                       scoring_flags] {
            action = [corpus_path, grid_path, out_dir, cache_dir, max_in_flight, scoring_flags] {
                return guarded([&] {
                    std::vector<corpus::Session> sessions = load_corpus(*corpus_path);
                    experiments::Grid grid = experiments::parse_grid_file(*grid_path);
                    experiments::RunOptions options = scoring_flags->resolve();
                    std::string cache = cache_dir->empty()
                                            ? (fs::path(*out_dir) / "cache").string()
                                            : *cache_dir;
                    experiments::GatewayFactory factory = experiments::default_gateway_factory(
                        sessions, cache, *max_in_flight);
                    experiments::SweepOutcome outcome =
                        experiments::sweep(sessions, grid, factory, *out_dir, options);

                    std::size_t failed = 0;
                    for (const experiments::CellOutcome& cell : outcome.cells)
                        if (cell.failed) ++failed;
                    json config{{"corpus", *corpus_path},
                                {"grid", *grid_path},
                                {"grid_sha256", util::sha256_hex(util::read_file(*grid_path))}};
                    config.update(scoring_flags->to_json());
                    json stats{{"backend_calls", outcome.backend_calls},
                               {"cache_hits", outcome.cache_hits},
                               {"cells", outcome.cells.size()},
                               {"failed_cells", failed}};
                    write_manifest(*out_dir, "sweep", config, stats);
                    std::cout << "ran " << outcome.cells.size() << " table rows, " << failed
                              << " failed; " << outcome.backend_calls << " backend calls, "
                              << outcome.cache_hits << " cache hits\n"
                              << "tables and plot data under " << *out_dir << "\n";
                });
            };
        });
    }

    // reliability
    {
        auto* cmd = app.add_subcommand("reliability", "repeat one cell and report stability");
        auto corpus_path = std::make_shared<std::string>();
        auto out_dir = std::make_shared<std::string>();
        auto tries = std::make_shared<int>(10);
        auto condition_flags = std::make_shared<ConditionFlags>();
        auto backend_flags = std::make_shared<BackendFlags>();
        auto scoring_flags = std::make_shared<ScoringFlags>();
        cmd->add_option("--corpus", *corpus_path, "corpus jsonl")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--out", *out_dir, "output directory")->required();
        cmd->add_option("--tries", *tries, "number of repeated passes")->capture_default_str();
        condition_flags->add_flags(cmd);
        backend_flags->add_flags(cmd);
        scoring_flags->add_flags(cmd);
        cmd->callback([&action, corpus_path, out_dir, tries, condition_flags, backend_flags,
                       scoring_flags] {
            action = [corpus_path, out_dir, tries, condition_flags, backend_flags,
                      scoring_flags] {
                return guarded([&] {
                    if (*tries < 2)
                        throw CLI::ValidationError("--tries", "need at least 2 tries");
                    std::vector<corpus::Session> sessions = load_corpus(*corpus_path);
                    prompting::PromptCondition condition = condition_flags->resolve();
                    experiments::RunOptions options = scoring_flags->resolve();
                    fs::path out(*out_dir);
                    fs::path cache = backend_flags->cache.empty() ? out / "cache"
                                                                  : fs::path(backend_flags->cache);
                    const bool sampling = backend_flags->temperature > 0.0;
                    std::vector<std::shared_ptr<gateway::Gateway>> used;
                    experiments::TryGatewayFactory factory = [&](int t) {
                        BackendFlags per_try = *backend_flags;
                        fs::path dir = cache;
                        if (sampling) {
                            per_try.salt = backend_flags->salt + "#try" + std::to_string(t);
                            dir = cache / ("try" + std::to_string(t));
                        }
                        auto gw = per_try.make_gateway(sessions, dir);
                        used.push_back(gw);
                        return gw;
                    };
                    experiments::ReliabilityReport report = experiments::reliability_run(
                        sessions, condition, factory, *tries, options);
                    std::string table = experiments::reliability_markdown(report);
                    fs::create_directories(out);
                    util::write_file_atomic(out / "reliability.md", table);
                    std::cout << table;

                    std::uint64_t calls = 0, hits = 0;
                    for (const auto& gw : used) {
                        calls += gw->backend_calls();
                        hits += gw->cache_hits();
                    }
                    json config = condition_flags->to_json();
                    config.update(backend_flags->to_json());
                    config.update(scoring_flags->to_json());
                    config["corpus"] = *corpus_path;
                    config["tries"] = *tries;
                    write_manifest(out, "reliability", config,
                                   json{{"backend_calls", calls}, {"cache_hits", hits}});
                });
            };
        });
    }

    // outliers
    {
        auto* cmd = app.add_subcommand("outliers",
                                       "flag sessions with unusual prediction error");
        auto records_path = std::make_shared<std::string>();
        auto corpus_path = std::make_shared<std::string>();
        auto out_dir = std::make_shared<std::string>();
        cmd->add_option("--records", *records_path, "records jsonl from predict/sweep")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--corpus", *corpus_path, "corpus jsonl")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--out", *out_dir, "write outliers.md and manifest here");
        cmd->callback([&action, records_path, corpus_path, out_dir] {
            action = [records_path, corpus_path, out_dir] {
                return guarded([&] {
                    std::vector<corpus::Session> sessions = load_corpus(*corpus_path);
                    std::vector<experiments::PredictionRecord> records;
                    for (const std::string& line :
                         util::split_lines(util::read_file(*records_path)))
                        if (!line.empty())
                            records.push_back(experiments::record_from_json_line(line));
                    experiments::OutlierReport report =
                        experiments::outlier_review(records, sessions);
                    std::string table = experiments::outlier_markdown(report);
                    std::cout << table;
                    if (!out_dir->empty()) {
                        fs::path dir(*out_dir);
                        fs::create_directories(dir);
                        util::write_file_atomic(dir / "outliers.md", table);
                        json config{{"records", *records_path}, {"corpus", *corpus_path}};
                        write_manifest(dir, "outliers", config,
                                       json{{"sessions", report.session_ids.size()},
                                            {"outliers", report.outlier_sessions.size()}});
                    }
                });
            };
        });
    }

    // build-prefs
    {
        auto* cmd = app.add_subcommand("build-prefs",
                                       "build preference pairs from stored responses");
        auto corpus_path = std::make_shared<std::string>();
        auto responses = std::make_shared<std::vector<std::string>>();
        auto out_dir = std::make_shared<std::string>();
        auto scoring_flags = std::make_shared<ScoringFlags>();
        cmd->add_option("--corpus", *corpus_path, "corpus jsonl")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--responses", *responses,
                        "responses.jsonl files from predict runs (2+ models)")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--out", *out_dir, "output directory")->required();
        scoring_flags->add_flags(cmd);
        cmd->callback([&action, corpus_path, responses, out_dir, scoring_flags] {
            action = [corpus_path, responses, out_dir, scoring_flags] {
                return guarded([&] {
                    std::vector<corpus::Session> sessions = load_corpus(*corpus_path);
                    experiments::RunOptions options = scoring_flags->resolve();
                    std::vector<preference::ResponseRecord> records;
                    for (const std::string& path : *responses)
                        for (const std::string& line : util::split_lines(util::read_file(path)))
                            if (!line.empty())
                                records.push_back(preference::response_from_json_line(line));
                    preference::BuildResult result = preference::build_pairs(
                        records, sessions, options.parse_rules, options.templates);
                    preference::ExportStats stats = preference::export_dataset(
                        result, sessions, options.parse_rules, *out_dir);
                    bool ok =
                        preference::jsonl_round_trips((fs::path(*out_dir) / "dpo.jsonl").string()) &&
                        preference::jsonl_round_trips((fs::path(*out_dir) / "sft.jsonl").string());
                    if (!ok) throw preference::ExportInvariant("jsonl round trip mismatch");

                    json config{{"corpus", *corpus_path}, {"responses", *responses}};
                    config.update(scoring_flags->to_json());
                    json jstats{{"groups", result.stats.groups_total},
                                {"groups_skipped", result.stats.groups_skipped},
                                {"pairs_dropped", result.stats.pairs_dropped},
                                {"dpo_lines", stats.dpo_lines},
                                {"sft_lines", stats.sft_lines}};
                    write_manifest(*out_dir, "build-prefs", config, jstats);
                    std::cout << stats.dpo_lines << " preference pairs, " << stats.sft_lines
                              << " sft examples (" << result.stats.groups_skipped
                              << " groups skipped, " << result.stats.pairs_dropped
                              << " pairs dropped)\n";
                });
            };
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }
    return action ? action() : kExitUsage;
}
