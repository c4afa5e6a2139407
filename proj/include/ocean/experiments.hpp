#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocean/corpus.hpp"
#include "ocean/extraction.hpp"
#include "ocean/gateway.hpp"
#include "ocean/inventory.hpp"
#include "ocean/metrics.hpp"
#include "ocean/minitoml.hpp"
#include "ocean/prompting.hpp"

namespace ocean::experiments {

class CellFailed : public std::runtime_error {
  public:
    explicit CellFailed(const std::string& why) : std::runtime_error("cell failed: " + why) {}
};

class GridError : public std::runtime_error {
  public:
    explicit GridError(const std::string& why) : std::runtime_error("bad grid: " + why) {}
};

struct RunOptions {
    inventory::ScorePolicy score_policy = inventory::ScorePolicy::prorate;
    int min_items_per_domain = 10;
    extraction::ParseRules parse_rules = extraction::ParseRules::defaults();
    prompting::TemplateSet templates = prompting::TemplateSet::builtin_english();
};

struct SkipEntry {
    std::string session_id;
    std::string reason;
};

struct PredictionRecord {
    std::string session_id;
    std::string model_name;
    prompting::PromptCondition condition;
    std::optional<TraitScores> predicted;  // present only when scoring succeeded
    int answered = 0;                      // sheet coverage out of 60
    int refusal_count = 0;
    int unparseable_count = 0;
};

std::string record_to_json_line(const PredictionRecord& record);
PredictionRecord record_from_json_line(const std::string& line);

struct CellResult {
    std::vector<PredictionRecord> records;  // one per session that produced answers
    std::vector<SkipEntry> skips;
    // raw per-item answers (questionnaire methods), kept for preference building
    std::vector<extraction::ItemResponse> responses;
    // assembled sheets by session, kept for reliability runs
    std::map<std::string, inventory::ResponseSheet> sheets;
};

// Runs one (condition, backend) cell over the corpus: builds prompts, batches
// them through the gateway, parses and scores. Per-session problems become
// skip entries; throws CellFailed only when every session failed outright.
CellResult run_cell(const std::vector<corpus::Session>& sessions,
                    const prompting::PromptCondition& condition, gateway::Gateway& gw,
                    const RunOptions& options = {});

struct DimensionEval {
    std::optional<metrics::CorrelationResult> corr;  // blank when input degenerate
    double mae = 0.0;
};

struct EvalRow {
    std::string model_name;
    prompting::PromptCondition condition;
    std::size_t n_scored = 0;
    std::array<DimensionEval, 5> dims{};   // OCEAN order as in kDomains
    std::optional<double> avg_r;           // mean of the five r values when all present
};

// Per-dimension correlation and MAE between predictions and ground truth.
// Requires at least 3 scored records; degenerate dimensions yield blank cells.
EvalRow evaluate_cell(const std::vector<PredictionRecord>& records,
                      const std::vector<corpus::Session>& sessions);

struct ModelSpec {
    std::string name;
    std::string backend = "simulator";  // "simulator" | "remote"
    double size_b = 0.0;                // parameter count in billions (registry metadata)
    std::string endpoint;               // remote only
    double temperature = 0.0;
    double noise_sd = 0.0;              // simulator only
    double refusal_rate = 0.0;
    bool length_dependent_noise = false;
    std::uint64_t seed = 42;
};

struct Grid {
    std::vector<prompting::Method> methods;
    std::vector<prompting::Role> roles;      // role ablation rows
    std::vector<std::string> role_names;     // named personas (counselor/observer)
    std::vector<double> granularities;
    std::vector<ModelSpec> models;
};

Grid parse_grid(const minitoml::Document& doc);
Grid parse_grid_file(const std::string& path);

using GatewayFactory =
    std::function<std::shared_ptr<gateway::Gateway>(const ModelSpec& model)>;

// builds simulator gateways from session ground truths; remote specs need the
// credential environment variable at call time
GatewayFactory default_gateway_factory(const std::vector<corpus::Session>& sessions,
                                       const std::optional<std::string>& cache_dir,
                                       int max_in_flight = 4);

struct CellOutcome {
    std::string cell_id;
    std::string table;  // which report the cell feeds: methods|roles|models|granularity
    std::string row_label;
    EvalRow row;
    bool failed = false;
    std::string failure;
    std::size_t n_skips = 0;
};

struct SweepOutcome {
    std::vector<CellOutcome> cells;
    std::uint64_t backend_calls = 0;
    std::uint64_t cache_hits = 0;
};

// Runs the grid and writes tables/*.md, plots/*.csv, records/*.jsonl and
// skips.log under out_dir. Cell failures are annotated, not fatal.
SweepOutcome sweep(const std::vector<corpus::Session>& sessions, const Grid& grid,
                   const GatewayFactory& factory, const std::string& out_dir,
                   const RunOptions& options = {});

std::string cell_id_for(const std::string& model_name, const prompting::PromptCondition& condition);

struct ClientShare {
    std::string client_id;
    std::size_t outlier_count = 0;
    double share = 0.0;  // of all outlier sessions
};

struct OutlierReport {
    metrics::OutlierSummary summary;  // over per-session MAE values
    std::vector<std::string> session_ids;          // sessions in summary input order
    std::vector<double> session_mae;               // aligned with session_ids
    std::vector<std::string> outlier_sessions;
    std::vector<ClientShare> clients;              // sorted by descending count
};

OutlierReport outlier_review(const std::vector<PredictionRecord>& records,
                             const std::vector<corpus::Session>& sessions);

std::string outlier_markdown(const OutlierReport& report);

// gateway per try; simulator factories vary the answer salt per try only when
// the backend samples (temperature > 0)
using TryGatewayFactory = std::function<std::shared_ptr<gateway::Gateway>(int try_index)>;

struct ReliabilityReport {
    int n_tries = 0;
    // rows = tries, columns = OCEAN; blank when a dimension was degenerate
    std::vector<std::array<std::optional<metrics::CorrelationResult>, 5>> per_try;
    std::array<std::optional<double>, 5> mean_r{};
    std::array<std::optional<double>, 5> std_r{};
    std::vector<std::optional<double>> per_try_alpha;  // complete sheets only
    std::optional<double> mean_alpha;
    metrics::RetestKappas kappas;
};

ReliabilityReport reliability_run(const std::vector<corpus::Session>& sessions,
                                  const prompting::PromptCondition& condition,
                                  const TryGatewayFactory& factory, int n_tries,
                                  const RunOptions& options = {});

std::string reliability_markdown(const ReliabilityReport& report);

}  // namespace ocean::experiments
