#include "ocean/preference.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <tuple>

#include <json.hpp>
#include "ocean/inventory.hpp"
#include "ocean/util.hpp"

namespace ocean::preference {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

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

json messages_to_json(const std::vector<prompting::ChatMessage>& messages) {
    json arr = json::array();
    for (const prompting::ChatMessage& m : messages)
        arr.push_back(json{{"content", m.content}, {"role", m.role}});
    return arr;
}

struct Candidate {
    const ResponseRecord* record = nullptr;
    extraction::ParsedChoice parsed;
    ItemError error;
};

// total order: error ascending (Undefined last), then raw text length, then model name
bool candidate_less(const Candidate& a, const Candidate& b) {
    if (!error_equal(a.error, b.error)) return error_less(a.error, b.error);
    if (a.record->raw_text.size() != b.record->raw_text.size())
        return a.record->raw_text.size() < b.record->raw_text.size();
    return a.record->model_name < b.record->model_name;
}

}  // namespace

std::string response_to_json_line(const ResponseRecord& record) {
    json j = condition_to_json(record.condition);
    j["session_id"] = record.session_id;
    j["item"] = record.item_index;
    j["model"] = record.model_name;
    j["text"] = record.raw_text;
    return j.dump();
}

ResponseRecord response_from_json_line(const std::string& line) {
    json j = json::parse(line);
    ResponseRecord record;
    record.session_id = j.at("session_id").get<std::string>();
    record.item_index = j.at("item").get<int>();
    record.model_name = j.at("model").get<std::string>();
    record.raw_text = j.at("text").get<std::string>();
    record.condition = condition_from_json(j);
    return record;
}

bool error_less(const ItemError& a, const ItemError& b) {
    if (a.defined() && b.defined()) return *a.value < *b.value;
    return a.defined() && !b.defined();
}

bool error_equal(const ItemError& a, const ItemError& b) {
    if (a.defined() != b.defined()) return false;
    return !a.defined() || *a.value == *b.value;
}

ItemError item_error(const extraction::ParsedChoice& parsed, int item_index,
                     const corpus::Session& session) {
    if (parsed.kind != extraction::ParseKind::choice) return {};

    if (session.item_ground_truth) {
        auto it = session.item_ground_truth->find(item_index);
        if (it != session.item_ground_truth->end())
            return {std::abs(parsed.choice - it->second)};
    }
    if (session.ground_truth) {
        const inventory::Item& item = inventory::Instrument::bundled().item(item_index);
        int target = inventory::Instrument::target_choice_for_item(item, *session.ground_truth);
        return {std::abs(parsed.choice - target)};
    }
    throw MissingGroundTruth(session.session_id);
}

BuildResult build_pairs(const std::vector<ResponseRecord>& responses,
                        const std::vector<corpus::Session>& sessions,
                        const extraction::ParseRules& rules,
                        const prompting::TemplateSet& templates) {
    std::map<std::string, const corpus::Session*> by_id;
    for (const corpus::Session& session : sessions) by_id[session.session_id] = &session;

    // group key orders the output: session, item, then the condition fields
    using GroupKey = std::tuple<std::string, int, std::string, std::string, std::string, double>;
    std::map<GroupKey, std::vector<Candidate>> groups;
    for (const ResponseRecord& record : responses) {
        auto it = by_id.find(record.session_id);
        if (it == by_id.end())
            throw std::runtime_error("response references unknown session " + record.session_id);
        Candidate candidate;
        candidate.record = &record;
        candidate.parsed = extraction::parse_choice(record.raw_text, rules);
        candidate.error = item_error(candidate.parsed, record.item_index, *it->second);
        GroupKey key{record.session_id,
                     record.item_index,
                     prompting::method_name(record.condition.method),
                     prompting::role_name(record.condition.role),
                     record.condition.role_persona_name.value_or(""),
                     record.condition.granularity};
        groups[key].push_back(std::move(candidate));
    }

    prompting::PromptBuilder builder(templates);
    const inventory::Instrument& instrument = inventory::Instrument::bundled();

    BuildResult out;
    for (auto& [key, group] : groups) {
        ++out.stats.groups_total;
        std::vector<std::string> models;
        for (const Candidate& c : group) models.push_back(c.record->model_name);
        std::sort(models.begin(), models.end());
        models.erase(std::unique(models.begin(), models.end()), models.end());
        if (models.size() < 2) {
            ++out.stats.groups_skipped;
            continue;
        }

        auto [lo, hi] = std::minmax_element(group.begin(), group.end(), candidate_less);
        if (error_equal(lo->error, hi->error) && lo->parsed == hi->parsed) {
            ++out.stats.pairs_dropped;
            continue;
        }

        const corpus::Session& session = *by_id.at(lo->record->session_id);
        prompting::PromptBundle bundle = builder.build_item_prompt(
            session, lo->record->condition, instrument.item(lo->record->item_index));

        PreferencePair pair;
        pair.prompt = bundle.messages;
        pair.chosen = lo->record->raw_text;
        pair.rejected = hi->record->raw_text;
        pair.chosen_error = lo->error;
        pair.rejected_error = hi->error;
        pair.session_id = lo->record->session_id;
        pair.item_index = lo->record->item_index;
        pair.chosen_model = lo->record->model_name;
        pair.rejected_model = hi->record->model_name;

        if (lo->parsed.kind == extraction::ParseKind::choice) {
            SftExample sft;
            sft.prompt = bundle.messages;
            sft.completion = lo->record->raw_text;
            out.sft.push_back(std::move(sft));
        }
        out.pairs.push_back(std::move(pair));
        ++out.stats.pairs_built;
    }
    return out;
}

std::string meta_toml_text() {
    return
        "# training slots for the external preference trainer; defaults mirror\n"
        "# the reference configuration, edit before launching\n"
        "\n"
        "[training]\n"
        "seed = 42\n"
        "optimizer = \"AdamW\"\n"
        "learning_rate = 1e-6\n"
        "train_epochs = 3\n"
        "per_device_train_batch_size = 1\n"
        "gradient_accumulation_steps = 2\n"
        "warmup_ratio = 0.1\n"
        "lr_scheduler_type = \"cosine\"\n"
        "data_type = \"bfloat16\"\n";
}

ExportStats export_dataset(const BuildResult& result,
                           const std::vector<corpus::Session>& sessions,
                           const extraction::ParseRules& rules, const std::string& out_dir) {
    std::map<std::string, const corpus::Session*> by_id;
    for (const corpus::Session& session : sessions) by_id[session.session_id] = &session;

    std::string dpo;
    for (const PreferencePair& pair : result.pairs) {
        auto it = by_id.find(pair.session_id);
        if (it == by_id.end())
            throw ExportInvariant("pair references unknown session " + pair.session_id);
        ItemError chosen_error =
            item_error(extraction::parse_choice(pair.chosen, rules), pair.item_index, *it->second);
        ItemError rejected_error = item_error(extraction::parse_choice(pair.rejected, rules),
                                              pair.item_index, *it->second);
        if (error_less(rejected_error, chosen_error))
            throw ExportInvariant("chosen error exceeds rejected error for session " +
                                  pair.session_id + " item " + std::to_string(pair.item_index));
        json j;
        j["prompt"] = messages_to_json(pair.prompt);
        j["chosen"] = pair.chosen;
        j["rejected"] = pair.rejected;
        dpo += j.dump() + "\n";
    }

    std::string sft;
    for (const SftExample& example : result.sft) {
        if (extraction::parse_choice(example.completion, rules).kind !=
            extraction::ParseKind::choice)
            throw ExportInvariant("sft completion does not parse to a choice");
        json j;
        j["prompt"] = messages_to_json(example.prompt);
        j["completion"] = example.completion;
        sft += j.dump() + "\n";
    }

    try {
        fs::create_directories(out_dir);
        util::write_file_atomic(fs::path(out_dir) / "dpo.jsonl", dpo);
        util::write_file_atomic(fs::path(out_dir) / "sft.jsonl", sft);
        util::write_file_atomic(fs::path(out_dir) / "meta.toml", meta_toml_text());
    } catch (const std::exception& e) {
        throw IoError(e.what());
    }
    return {result.pairs.size(), result.sft.size()};
}

bool jsonl_round_trips(const std::string& path) {
    std::string text = util::read_file(path);
    std::string rebuilt;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(start, end - start);
        if (!line.empty()) rebuilt += json::parse(line).dump() + "\n";
        start = end + 1;
    }
    return rebuilt == text;
}

}  // namespace ocean::preference
