#include "ocean/experiments.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include <json.hpp>
#include "ocean/util.hpp"

namespace ocean::experiments {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool questionnaire_method(prompting::Method m) {
    return m == prompting::Method::questionnaire_only ||
           m == prompting::Method::roleplay_and_questionnaire;
}

prompting::Role main_role(prompting::Method m) {
    if (m == prompting::Method::roleplay_and_questionnaire ||
        m == prompting::Method::roleplay_only)
        return prompting::Role::client;
    return prompting::Role::no_role;
}

std::string dkey(Domain d) { return std::string(1, domain_letter(d)); }

std::string sanitize(const std::string& raw) {
    std::string out;
    bool dash = false;
    for (char c : raw) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            dash = false;
        } else if (!dash && !out.empty()) {
            out += '-';
            dash = true;
        }
    }
    while (!out.empty() && out.back() == '-') out.pop_back();
    return out;
}

std::string star_cell(const std::optional<metrics::CorrelationResult>& corr) {
    if (!corr) return "";
    return util::format_fixed(corr->r, 3) + corr->stars;
}

json condition_to_json(const prompting::PromptCondition& condition) {
    json j;
    j["method"] = prompting::method_name(condition.method);
    j["role"] = prompting::role_name(condition.role);
    if (condition.role_persona_name) j["role_name"] = *condition.role_persona_name;
    j["granularity"] = condition.granularity;
    return j;
}

prompting::PromptCondition condition_from_json(const json& j) {
    prompting::PromptCondition condition;
    condition.method = prompting::method_from_name(j.at("method").get<std::string>());
    condition.role = prompting::role_from_name(j.at("role").get<std::string>());
    if (j.contains("role_name")) condition.role_persona_name = j.at("role_name").get<std::string>();
    condition.granularity = j.at("granularity").get<double>();
    return condition;
}

struct TableRow {
    std::string table;
    std::string label;
    std::string cell_id;
};

}  // namespace

std::string record_to_json_line(const PredictionRecord& record) {
    json j = condition_to_json(record.condition);
    j["session_id"] = record.session_id;
    j["model"] = record.model_name;
    j["answered"] = record.answered;
    j["refusals"] = record.refusal_count;
    j["unparseable"] = record.unparseable_count;
    if (record.predicted) {
        json p;
        for (Domain d : kDomains) p[dkey(d)] = record.predicted->get(d);
        j["predicted"] = p;
    } else {
        j["predicted"] = nullptr;
    }
    return j.dump();
}

PredictionRecord record_from_json_line(const std::string& line) {
    json j = json::parse(line);
    PredictionRecord record;
    record.session_id = j.at("session_id").get<std::string>();
    record.model_name = j.at("model").get<std::string>();
    record.condition = condition_from_json(j);
    record.answered = j.at("answered").get<int>();
    record.refusal_count = j.at("refusals").get<int>();
    record.unparseable_count = j.at("unparseable").get<int>();
    if (!j.at("predicted").is_null()) {
        TraitScores scores;
        for (Domain d : kDomains) scores.set(d, j.at("predicted").at(dkey(d)).get<double>());
        record.predicted = scores;
    }
    return record;
}

CellResult run_cell(const std::vector<corpus::Session>& sessions,
                    const prompting::PromptCondition& condition, gateway::Gateway& gw,
                    const RunOptions& options) {
    prompting::PromptBuilder builder(options.templates);
    const inventory::Instrument& instrument = inventory::Instrument::bundled();
    const bool questionnaire = questionnaire_method(condition.method);

    CellResult out;
    std::vector<prompting::PromptBundle> bundles;
    std::vector<bool> built(sessions.size(), false);
    std::vector<std::string> build_failure(sessions.size());

    for (std::size_t s = 0; s < sessions.size(); ++s) {
        try {
            if (questionnaire) {
                std::vector<prompting::PromptBundle> session_bundles;
                for (const inventory::Item& item : instrument.items())
                    session_bundles.push_back(
                        builder.build_item_prompt(sessions[s], condition, item));
                for (auto& bundle : session_bundles) bundles.push_back(std::move(bundle));
            } else {
                bundles.push_back(builder.build_direct_prompt(sessions[s], condition));
            }
            built[s] = true;
        } catch (const std::exception& e) {
            build_failure[s] = std::string("prompt build: ") + e.what();
            out.skips.push_back({sessions[s].session_id, build_failure[s]});
        }
    }

    std::vector<gateway::BatchItem> batch = gw.run_batch(bundles);

    std::size_t hard_failures = 0;
    std::string first_failure;
    std::size_t cursor = 0;
    for (std::size_t s = 0; s < sessions.size(); ++s) {
        if (!built[s]) {
            ++hard_failures;
            if (first_failure.empty()) first_failure = build_failure[s];
            continue;
        }
        const corpus::Session& session = sessions[s];
        PredictionRecord record;
        record.session_id = session.session_id;
        record.model_name = gw.backend().config().model_name;
        record.condition = condition;

        if (questionnaire) {
            std::vector<extraction::ItemResponse> responses;
            std::size_t errored = 0;
            std::string first_error;
            for (const inventory::Item& item : instrument.items()) {
                const gateway::BatchItem& slot = batch[cursor++];
                if (!slot.ok()) {
                    ++errored;
                    if (first_error.empty()) first_error = slot.error;
                    continue;
                }
                extraction::ItemResponse response;
                response.session_id = session.session_id;
                response.item_index = item.index;
                response.model_name = slot.completion->model_name;
                response.raw_text = slot.completion->text;
                response.parsed = extraction::parse_choice(response.raw_text, options.parse_rules);
                responses.push_back(std::move(response));
            }
            if (responses.empty()) {
                ++hard_failures;
                std::string reason = "backend: " + first_error;
                if (first_failure.empty()) first_failure = reason;
                out.skips.push_back({session.session_id, reason});
                continue;
            }
            if (errored > 0)
                out.skips.push_back({session.session_id,
                                     std::to_string(errored) + " item calls failed; first: " +
                                         first_error});
            extraction::SheetSummary summary = extraction::assemble_sheet(responses);
            record.answered = summary.answered;
            record.refusal_count = summary.refusal_count;
            record.unparseable_count = summary.unparseable_count;
            out.sheets[session.session_id] = summary.sheet;
            for (auto& response : responses) out.responses.push_back(std::move(response));
            try {
                record.predicted = instrument.score_responses(summary.sheet, options.score_policy,
                                                              options.min_items_per_domain);
            } catch (const inventory::IncompleteSheet& e) {
                out.skips.push_back({session.session_id, e.what()});
            }
        } else {
            const gateway::BatchItem& slot = batch[cursor++];
            if (!slot.ok()) {
                ++hard_failures;
                std::string reason = "backend: " + slot.error;
                if (first_failure.empty()) first_failure = reason;
                out.skips.push_back({session.session_id, reason});
                continue;
            }
            extraction::DirectParse parsed =
                extraction::parse_direct(slot.completion->text, options.parse_rules);
            if (parsed.kind == extraction::ParseKind::choice) {
                record.predicted = parsed.scores;
            } else if (parsed.kind == extraction::ParseKind::refusal) {
                record.refusal_count = 1;
                out.skips.push_back({session.session_id, "refusal"});
            } else {
                record.unparseable_count = 1;
                out.skips.push_back({session.session_id, "unparseable direct answer"});
            }
        }
        out.records.push_back(std::move(record));
    }

    if (!sessions.empty() && hard_failures == sessions.size())
        throw CellFailed(first_failure.empty() ? "all sessions failed" : first_failure);
    return out;
}

EvalRow evaluate_cell(const std::vector<PredictionRecord>& records,
                      const std::vector<corpus::Session>& sessions) {
    std::map<std::string, const corpus::Session*> by_id;
    for (const corpus::Session& session : sessions) by_id[session.session_id] = &session;

    std::vector<const PredictionRecord*> scored;
    for (const PredictionRecord& record : records)
        if (record.predicted) scored.push_back(&record);
    if (scored.size() < 3) throw metrics::TooFewValues(scored.size());

    EvalRow row;
    row.model_name = scored.front()->model_name;
    row.condition = scored.front()->condition;
    row.n_scored = scored.size();

    for (std::size_t k = 0; k < kDomains.size(); ++k) {
        Domain d = kDomains[k];
        std::vector<double> predicted, truth;
        for (const PredictionRecord* record : scored) {
            auto it = by_id.find(record->session_id);
            if (it == by_id.end())
                throw std::runtime_error("record references unknown session " + record->session_id);
            if (!it->second->ground_truth)
                throw std::runtime_error("session missing ground truth: " + record->session_id);
            predicted.push_back(record->predicted->get(d));
            truth.push_back(it->second->ground_truth->get(d));
        }
        row.dims[k].mae = metrics::mae(predicted, truth);
        try {
            row.dims[k].corr = metrics::pearson(predicted, truth);
        } catch (const metrics::DegenerateInput&) {
            row.dims[k].corr.reset();
        }
    }

    bool all = true;
    double sum = 0;
    for (const DimensionEval& dim : row.dims) {
        if (!dim.corr) {
            all = false;
            break;
        }
        sum += dim.corr->r;
    }
    if (all) row.avg_r = sum / static_cast<double>(kDomains.size());
    return row;
}

Grid parse_grid(const minitoml::Document& doc) {
    Grid grid;
    if (!doc.has_table("sweep")) throw GridError("missing [sweep] table");
    const minitoml::Table& sweep = doc.table("sweep");

    if (!sweep.has("methods")) throw GridError("missing sweep.methods");
    for (const std::string& name : sweep.at("methods").as_string_array()) {
        try {
            grid.methods.push_back(prompting::method_from_name(name));
        } catch (const std::exception&) {
            throw GridError("unknown method '" + name + "'");
        }
    }
    if (grid.methods.empty()) throw GridError("sweep.methods is empty");

    if (sweep.has("roles")) {
        for (const std::string& name : sweep.at("roles").as_string_array()) {
            try {
                grid.roles.push_back(prompting::role_from_name(name));
            } catch (const std::exception&) {
                throw GridError("unknown role '" + name + "'");
            }
        }
    }
    if (sweep.has("role_names")) grid.role_names = sweep.at("role_names").as_string_array();
    if (sweep.has("granularities")) {
        grid.granularities = sweep.at("granularities").as_double_array();
        for (double g : grid.granularities)
            if (!(g > 0.0 && g <= 1.0)) throw GridError("granularity out of (0, 1]");
    } else {
        grid.granularities = {1.0};
    }

    if (doc.table_arrays.count("models") == 0) throw GridError("missing [[models]]");
    std::set<std::string> seen;
    for (const minitoml::Table& t : doc.array("models")) {
        ModelSpec spec;
        spec.name = t.get_string("name", "");
        if (spec.name.empty()) throw GridError("model without name");
        if (!seen.insert(spec.name).second) throw GridError("duplicate model '" + spec.name + "'");
        spec.backend = t.get_string("backend", "simulator");
        if (spec.backend != "simulator" && spec.backend != "remote")
            throw GridError("unknown backend '" + spec.backend + "'");
        spec.size_b = t.get_double("size_b", 0.0);
        spec.endpoint = t.get_string("endpoint", "");
        if (spec.backend == "remote" && spec.endpoint.empty())
            throw GridError("remote model '" + spec.name + "' needs an endpoint");
        spec.temperature = t.get_double("temperature", 0.0);
        spec.noise_sd = t.get_double("noise_sd", 0.0);
        spec.refusal_rate = t.get_double("refusal_rate", 0.0);
        spec.length_dependent_noise = t.get_bool("length_dependent_noise", false);
        spec.seed = static_cast<std::uint64_t>(t.get_int("seed", 42));
        grid.models.push_back(std::move(spec));
    }
    return grid;
}

Grid parse_grid_file(const std::string& path) { return parse_grid(minitoml::parse_file(path)); }

GatewayFactory default_gateway_factory(const std::vector<corpus::Session>& sessions,
                                       const std::optional<std::string>& cache_dir,
                                       int max_in_flight) {
    auto latents = std::make_shared<std::map<std::string, TraitScores>>();
    for (const corpus::Session& session : sessions)
        if (session.ground_truth) (*latents)[session.session_id] = *session.ground_truth;

    return [latents, cache_dir, max_in_flight](const ModelSpec& spec) {
        gateway::BackendConfig config;
        config.model_name = spec.name;
        config.temperature = spec.temperature;
        config.max_in_flight = max_in_flight;
        if (cache_dir) config.cache_dir = fs::path(*cache_dir) / sanitize(spec.name);
        std::shared_ptr<gateway::Backend> backend;
        if (spec.backend == "remote") {
            config.kind = gateway::BackendConfig::Kind::remote;
            config.endpoint_url = spec.endpoint;
            backend = std::make_shared<gateway::RemoteBackend>(config);
        } else {
            config.kind = gateway::BackendConfig::Kind::simulator;
            gateway::SimulatorOptions options;
            options.noise_sd = spec.noise_sd;
            options.refusal_rate = spec.refusal_rate;
            options.seed = spec.seed;
            options.length_dependent_noise = spec.length_dependent_noise;
            backend = std::make_shared<gateway::SimulatorBackend>(config, options, *latents);
        }
        return std::make_shared<gateway::Gateway>(backend);
    };
}

std::string cell_id_for(const std::string& model_name,
                        const prompting::PromptCondition& condition) {
    std::string id = sanitize(model_name) + "__" + prompting::method_name(condition.method) +
                     "__" + prompting::role_name(condition.role);
    if (condition.role_persona_name) id += "--" + sanitize(*condition.role_persona_name);
    int g = static_cast<int>(std::lround(condition.granularity * 100.0));
    char buf[8];
    std::snprintf(buf, sizeof(buf), "g%03d", g);
    return id + "__" + buf;
}

SweepOutcome sweep(const std::vector<corpus::Session>& sessions, const Grid& grid,
                   const GatewayFactory& factory, const std::string& out_dir,
                   const RunOptions& options) {
    fs::create_directories(fs::path(out_dir) / "tables");
    fs::create_directories(fs::path(out_dir) / "plots");
    fs::create_directories(fs::path(out_dir) / "records");

    prompting::Method ablation_method = grid.methods.front();
    for (prompting::Method m : grid.methods)
        if (m == prompting::Method::roleplay_and_questionnaire) ablation_method = m;
    const bool ablation_is_roleplay = ablation_method != prompting::Method::questionnaire_only &&
                                      ablation_method != prompting::Method::baseline_direct;

    // enumerate (table, label, condition, model); cells shared between tables run once
    struct PlannedRow {
        std::string table;
        std::string label;
        const ModelSpec* model;
        prompting::PromptCondition condition;
    };
    std::vector<PlannedRow> plan;
    for (const ModelSpec& model : grid.models) {
        for (prompting::Method m : grid.methods) {
            prompting::PromptCondition c;
            c.method = m;
            c.role = main_role(m);
            plan.push_back({"methods", prompting::method_name(m), &model, c});
        }
        if (ablation_is_roleplay) {
            for (prompting::Role role : grid.roles) {
                prompting::PromptCondition c;
                c.method = ablation_method;
                c.role = role;
                plan.push_back({"roles", prompting::role_name(role), &model, c});
                if (role == prompting::Role::counselor || role == prompting::Role::observer) {
                    for (const std::string& persona : grid.role_names) {
                        prompting::PromptCondition named = prompting::with_named_role(c, persona);
                        plan.push_back(
                            {"roles", prompting::role_name(role) + "-" + persona, &model, named});
                    }
                }
            }
        }
        {
            prompting::PromptCondition c;
            c.method = ablation_method;
            c.role = main_role(ablation_method);
            plan.push_back({"models", model.name, &model, c});
            for (double g : grid.granularities) {
                prompting::PromptCondition gc = c;
                gc.granularity = g;
                plan.push_back({"granularity", util::format_fixed(g, 2), &model, gc});
            }
        }
    }

    SweepOutcome outcome;
    std::map<std::string, std::shared_ptr<gateway::Gateway>> gateways;
    struct RanCell {
        CellResult result;
        EvalRow row;
        bool evaluated = false;
        bool failed = false;
        std::string failure;
    };
    std::map<std::string, RanCell> ran;
    std::string skips_log;

    for (const PlannedRow& planned : plan) {
        std::string cell_id = cell_id_for(planned.model->name, planned.condition);
        auto it = ran.find(cell_id);
        if (it == ran.end()) {
            RanCell cell;
            try {
                auto& gw = gateways[planned.model->name];
                if (!gw) gw = factory(*planned.model);
                cell.result = run_cell(sessions, planned.condition, *gw, options);
                cell.row = evaluate_cell(cell.result.records, sessions);
                cell.evaluated = true;
            } catch (const std::exception& e) {
                cell.failed = true;
                cell.failure = e.what();
            }
            for (const SkipEntry& skip : cell.result.skips)
                skips_log += cell_id + "\t" + skip.session_id + "\t" + skip.reason + "\n";
            if (!cell.failed) {
                std::string lines;
                for (const PredictionRecord& record : cell.result.records)
                    lines += record_to_json_line(record) + "\n";
                util::write_file_atomic(fs::path(out_dir) / "records" / (cell_id + ".jsonl"),
                                        lines);
            }
            it = ran.emplace(cell_id, std::move(cell)).first;
        }
        CellOutcome co;
        co.cell_id = cell_id;
        co.table = planned.table;
        co.row_label = planned.label;
        co.failed = it->second.failed;
        co.failure = it->second.failure;
        co.n_skips = it->second.result.skips.size();
        if (it->second.evaluated) co.row = it->second.row;
        co.row.model_name = planned.model->name;
        outcome.cells.push_back(std::move(co));
    }

    util::write_file_atomic(fs::path(out_dir) / "skips.log", skips_log);

    auto emit_table = [&](const std::string& table, const std::string& title,
                          const std::string& label_header, const std::string& file) {
        std::ostringstream os;
        os << "# " << title << "\n\n";
        os << "| Model | " << label_header << " | O | C | E | A | N | Avg. |\n";
        os << "| --- | --- | --- | --- | --- | --- | --- | --- |\n";
        std::string failures;
        for (const CellOutcome& co : outcome.cells) {
            if (co.table != table) continue;
            if (co.failed) {
                failures += "- " + co.cell_id + ": " + co.failure + "\n";
                continue;
            }
            os << "| " << co.row.model_name << " | " << co.row_label << " |";
            for (const DimensionEval& dim : co.row.dims) os << " " << star_cell(dim.corr) << " |";
            os << " " << (co.row.avg_r ? util::format_fixed(*co.row.avg_r, 3) : "") << " |\n";
        }
        if (!failures.empty()) os << "\nFailed cells:\n\n" << failures;
        util::write_file_atomic(fs::path(out_dir) / "tables" / file, os.str());
    };
    emit_table("methods", "Method comparison", "Method", "methods.md");
    emit_table("roles", "Role ablation", "Role", "roles.md");
    emit_table("models", "Model comparison", "Model", "models.md");
    emit_table("granularity", "Dialogue granularity ablation", "Granularity", "granularity.md");

    {
        std::string csv = "model,granularity,dimension,r\n";
        for (const CellOutcome& co : outcome.cells) {
            if (co.table != "granularity" || co.failed) continue;
            for (std::size_t k = 0; k < kDomains.size(); ++k)
                if (co.row.dims[k].corr)
                    csv += co.row.model_name + "," +
                           util::format_fixed(co.row.condition.granularity, 2) + "," +
                           domain_letter(kDomains[k]) + "," +
                           util::format_fixed(co.row.dims[k].corr->r, 6) + "\n";
        }
        util::write_file_atomic(fs::path(out_dir) / "plots" / "granularity_pcc.csv", csv);
    }
    {
        std::map<std::string, double> size_by_model;
        for (const ModelSpec& model : grid.models) size_by_model[model.name] = model.size_b;
        std::string csv = "model,size_b,avg_r\n";
        for (const CellOutcome& co : outcome.cells) {
            if (co.table != "models" || co.failed || !co.row.avg_r) continue;
            csv += co.row.model_name + "," +
                   util::format_fixed(size_by_model[co.row.model_name], 3) + "," +
                   util::format_fixed(*co.row.avg_r, 6) + "\n";
        }
        util::write_file_atomic(fs::path(out_dir) / "plots" / "model_size_pcc.csv", csv);
    }
    {
        std::map<std::string, const corpus::Session*> by_id;
        for (const corpus::Session& session : sessions) by_id[session.session_id] = &session;
        std::string csv = "model,dimension,session_id,abs_error\n";
        for (const CellOutcome& co : outcome.cells) {
            if (co.table != "models" || co.failed) continue;
            const RanCell& cell = ran.at(co.cell_id);
            for (const PredictionRecord& record : cell.result.records) {
                if (!record.predicted) continue;
                const corpus::Session* session = by_id.at(record.session_id);
                for (std::size_t k = 0; k < kDomains.size(); ++k) {
                    double err = std::fabs(record.predicted->get(kDomains[k]) -
                                           session->ground_truth->get(kDomains[k]));
                    csv += co.row.model_name + std::string(",") + domain_letter(kDomains[k]) +
                           "," + record.session_id + "," + util::format_fixed(err, 6) + "\n";
                }
            }
        }
        util::write_file_atomic(fs::path(out_dir) / "plots" / "mae_dimensions.csv", csv);
    }

    for (auto& [name, gw] : gateways) {
        outcome.backend_calls += gw->backend_calls();
        outcome.cache_hits += gw->cache_hits();
    }
    return outcome;
}

OutlierReport outlier_review(const std::vector<PredictionRecord>& records,
                             const std::vector<corpus::Session>& sessions) {
    std::map<std::string, const corpus::Session*> by_id;
    for (const corpus::Session& session : sessions) by_id[session.session_id] = &session;

    OutlierReport report;
    for (const PredictionRecord& record : records) {
        if (!record.predicted) continue;
        auto it = by_id.find(record.session_id);
        if (it == by_id.end() || !it->second->ground_truth) continue;
        double sum = 0;
        for (Domain d : kDomains)
            sum += std::fabs(record.predicted->get(d) - it->second->ground_truth->get(d));
        report.session_ids.push_back(record.session_id);
        report.session_mae.push_back(sum / static_cast<double>(kDomains.size()));
    }
    report.summary = metrics::iqr_outliers(report.session_mae);

    std::map<std::string, std::size_t> by_client;
    for (std::size_t idx : report.summary.outlier_indices) {
        const std::string& session_id = report.session_ids[idx];
        report.outlier_sessions.push_back(session_id);
        ++by_client[by_id.at(session_id)->client_id];
    }
    for (const auto& [client_id, count] : by_client) {
        ClientShare share;
        share.client_id = client_id;
        share.outlier_count = count;
        share.share = static_cast<double>(count) /
                      static_cast<double>(report.outlier_sessions.size());
        report.clients.push_back(std::move(share));
    }
    std::sort(report.clients.begin(), report.clients.end(),
              [](const ClientShare& a, const ClientShare& b) {
                  if (a.outlier_count != b.outlier_count) return a.outlier_count > b.outlier_count;
                  return a.client_id < b.client_id;
              });
    return report;
}

std::string outlier_markdown(const OutlierReport& report) {
    std::ostringstream os;
    os << "# Outlier review\n\n";
    os << "Sessions scored: " << report.session_ids.size() << "\n\n";
    os << "| Q1 | Q3 | IQR | Lower fence | Upper fence | Outliers |\n";
    os << "| --- | --- | --- | --- | --- | --- |\n";
    os << "| " << util::format_fixed(report.summary.q1, 4) << " | "
       << util::format_fixed(report.summary.q3, 4) << " | "
       << util::format_fixed(report.summary.iqr, 4) << " | "
       << util::format_fixed(report.summary.lower_fence, 4) << " | "
       << util::format_fixed(report.summary.upper_fence, 4) << " | "
       << report.outlier_sessions.size() << " |\n\n";
    if (!report.outlier_sessions.empty()) {
        os << "| Session | MAE |\n| --- | --- |\n";
        for (std::size_t idx : report.summary.outlier_indices)
            os << "| " << report.session_ids[idx] << " | "
               << util::format_fixed(report.session_mae[idx], 4) << " |\n";
        os << "\n| Client | Outlier sessions | Share |\n| --- | --- | --- |\n";
        for (const ClientShare& share : report.clients)
            os << "| " << share.client_id << " | " << share.outlier_count << " | "
               << util::format_fixed(share.share * 100.0, 1) << "% |\n";
    }
    return os.str();
}

ReliabilityReport reliability_run(const std::vector<corpus::Session>& sessions,
                                  const prompting::PromptCondition& condition,
                                  const TryGatewayFactory& factory, int n_tries,
                                  const RunOptions& options) {
    if (n_tries < 2) throw std::invalid_argument("need at least 2 tries");
    const inventory::Instrument& instrument = inventory::Instrument::bundled();

    ReliabilityReport report;
    report.n_tries = n_tries;
    std::vector<std::vector<inventory::ResponseSheet>> runs;

    for (int t = 0; t < n_tries; ++t) {
        std::shared_ptr<gateway::Gateway> gw = factory(t);
        CellResult cell = run_cell(sessions, condition, *gw, options);

        std::array<std::optional<metrics::CorrelationResult>, 5> row{};
        try {
            EvalRow eval = evaluate_cell(cell.records, sessions);
            for (std::size_t k = 0; k < kDomains.size(); ++k) row[k] = eval.dims[k].corr;
        } catch (const metrics::TooFewValues&) {
        }
        report.per_try.push_back(row);

        // alpha over keyed item values, complete sheets only
        std::vector<std::vector<double>> matrix;
        for (const corpus::Session& session : sessions) {
            auto it = cell.sheets.find(session.session_id);
            if (it == cell.sheets.end() ||
                it->second.size() != instrument.items().size())
                continue;
            std::vector<double> rowv;
            for (const inventory::Item& item : instrument.items())
                rowv.push_back(
                    inventory::Instrument::keyed_value(item, it->second.at(item.index)));
            matrix.push_back(std::move(rowv));
        }
        std::optional<double> alpha;
        if (matrix.size() >= 2) {
            try {
                alpha = metrics::cronbach_alpha(matrix);
            } catch (const std::exception&) {
            }
        }
        report.per_try_alpha.push_back(alpha);

        std::vector<inventory::ResponseSheet> aligned;
        for (const corpus::Session& session : sessions) {
            auto it = cell.sheets.find(session.session_id);
            aligned.push_back(it == cell.sheets.end() ? inventory::ResponseSheet{} : it->second);
        }
        runs.push_back(std::move(aligned));
    }

    for (std::size_t k = 0; k < kDomains.size(); ++k) {
        std::vector<double> values;
        for (const auto& row : report.per_try)
            if (row[k]) values.push_back(row[k]->r);
        if (values.empty()) continue;
        double mean = 0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        double var = 0;
        for (double v : values) var += (v - mean) * (v - mean);
        report.mean_r[k] = mean;
        report.std_r[k] = std::sqrt(var / static_cast<double>(values.size()));
    }

    {
        double sum = 0;
        std::size_t count = 0;
        for (const auto& alpha : report.per_try_alpha)
            if (alpha) {
                sum += *alpha;
                ++count;
            }
        if (count > 0) report.mean_alpha = sum / static_cast<double>(count);
    }

    report.kappas = metrics::test_retest(runs, instrument);
    return report;
}

std::string reliability_markdown(const ReliabilityReport& report) {
    std::ostringstream os;
    os << "# Reliability over " << report.n_tries << " tries\n\n";
    os << "| Try | O | C | E | A | N | Avg. |\n";
    os << "| --- | --- | --- | --- | --- | --- | --- |\n";
    for (std::size_t t = 0; t < report.per_try.size(); ++t) {
        os << "| " << (t + 1) << " |";
        bool all = true;
        double sum = 0;
        for (const auto& corr : report.per_try[t]) {
            os << " " << star_cell(corr) << " |";
            if (corr)
                sum += corr->r;
            else
                all = false;
        }
        os << " " << (all ? util::format_fixed(sum / 5.0, 3) : "") << " |\n";
    }
    auto stat_row = [&os](const std::string& label,
                          const std::array<std::optional<double>, 5>& values) {
        os << "| " << label << " |";
        bool all = true;
        double sum = 0;
        for (const auto& v : values) {
            os << " " << (v ? util::format_fixed(*v, 3) : "") << " |";
            if (v)
                sum += *v;
            else
                all = false;
        }
        os << " " << (all ? util::format_fixed(sum / 5.0, 3) : "") << " |\n";
    };
    stat_row("Avg.", report.mean_r);
    stat_row("Std", report.std_r);

    os << "\nCronbach alpha per try:";
    for (const auto& alpha : report.per_try_alpha)
        os << " " << (alpha ? util::format_fixed(*alpha, 4) : "-");
    os << "\n";
    if (report.mean_alpha) os << "Mean alpha: " << util::format_fixed(*report.mean_alpha, 4) << "\n";

    os << "\n| Domain | Test-retest kappa |\n| --- | --- |\n";
    for (Domain d : kDomains)
        os << "| " << domain_name(d) << " | "
           << util::format_fixed(report.kappas.by_domain.at(d), 4) << " |\n";
    os << "| Avg. | " << util::format_fixed(report.kappas.avg, 4) << " |\n";
    return os.str();
}

}  // namespace ocean::experiments
