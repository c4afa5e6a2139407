#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocean/corpus.hpp"
#include "ocean/extraction.hpp"
#include "ocean/prompting.hpp"

namespace ocean::preference {

class MissingGroundTruth : public std::runtime_error {
  public:
    explicit MissingGroundTruth(const std::string& session_id)
        : std::runtime_error("session has no ground truth: " + session_id) {}
};

class IoError : public std::runtime_error {
  public:
    explicit IoError(const std::string& why) : std::runtime_error("io error: " + why) {}
};

class ExportInvariant : public std::runtime_error {
  public:
    explicit ExportInvariant(const std::string& why)
        : std::runtime_error("export invariant violated: " + why) {}
};

// one model's raw answer to one questionnaire item
struct ResponseRecord {
    std::string session_id;
    int item_index = 0;
    std::string model_name;
    std::string raw_text;
    prompting::PromptCondition condition;
};

std::string response_to_json_line(const ResponseRecord& record);
ResponseRecord response_from_json_line(const std::string& line);

// absolute Likert distance to the item ground truth; refusals and unparseable
// answers are Undefined, which sorts worse than any defined error
struct ItemError {
    std::optional<int> value;  // empty = Undefined

    bool defined() const { return value.has_value(); }
};

bool error_less(const ItemError& a, const ItemError& b);    // defined < undefined
bool error_equal(const ItemError& a, const ItemError& b);

ItemError item_error(const extraction::ParsedChoice& parsed, int item_index,
                     const corpus::Session& session);

struct PreferencePair {
    std::vector<prompting::ChatMessage> prompt;
    std::string chosen;
    std::string rejected;
    ItemError chosen_error;
    ItemError rejected_error;
    std::string session_id;
    int item_index = 0;
    std::string chosen_model;
    std::string rejected_model;
};

struct SftExample {
    std::vector<prompting::ChatMessage> prompt;
    std::string completion;
};

struct BuildStats {
    std::size_t groups_total = 0;
    std::size_t groups_skipped = 0;   // fewer than 2 distinct models
    std::size_t pairs_dropped = 0;    // equal error and identical parsed choice
    std::size_t pairs_built = 0;
};

struct BuildResult {
    std::vector<PreferencePair> pairs;
    std::vector<SftExample> sft;
    BuildStats stats;
};

// Groups responses by (session, item, condition), orders each group by
// (error, raw text length, model name) and pairs the two extremes. Prompts are
// rebuilt from the corpus, so outputs are deterministic in the inputs.
BuildResult build_pairs(const std::vector<ResponseRecord>& responses,
                        const std::vector<corpus::Session>& sessions,
                        const extraction::ParseRules& rules,
                        const prompting::TemplateSet& templates);

struct ExportStats {
    std::size_t dpo_lines = 0;
    std::size_t sft_lines = 0;
};

// Writes dpo.jsonl, sft.jsonl and meta.toml. Re-parses every chosen/rejected
// text and rechecks chosen_error <= rejected_error before anything is written.
ExportStats export_dataset(const BuildResult& result,
                           const std::vector<corpus::Session>& sessions,
                           const extraction::ParseRules& rules, const std::string& out_dir);

// true when every jsonl line re-serializes to the exact same bytes
bool jsonl_round_trips(const std::string& path);

// the training-slot document written next to the datasets
std::string meta_toml_text();

}  // namespace ocean::preference
