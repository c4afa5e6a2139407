#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ocean/extraction.hpp"
#include "ocean/inventory.hpp"
#include "ocean/minitoml.hpp"
#include "ocean/preference.hpp"
#include "ocean/prompting.hpp"

using namespace ocean;
using extraction::ParseKind;
using preference::ItemError;
using preference::ResponseRecord;

namespace {

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name)
        : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

corpus::Session flat_session(const std::string& id) {
    const inventory::Instrument& inst = inventory::Instrument::bundled();
    corpus::Session s;
    s.session_id = id;
    s.client_id = "c-1";
    s.counselor_id = "t-1";
    s.utterances = {{corpus::Speaker::counselor, "How are you?"},
                    {corpus::Speaker::client, "Managing, mostly."}};
    TraitScores latent;
    for (Domain d : kDomains) latent.set(d, 3.0);
    inventory::ResponseSheet sheet;
    for (const inventory::Item& item : inst.items())
        sheet[item.index] = inventory::Instrument::target_choice_for_item(item, latent);
    s.item_ground_truth = sheet;
    s.ground_truth = inst.score_responses(sheet, inventory::ScorePolicy::strict);
    return s;
}

prompting::PromptCondition client_condition() {
    prompting::PromptCondition c;
    c.method = prompting::Method::roleplay_and_questionnaire;
    c.role = prompting::Role::client;
    return c;
}

ResponseRecord record(const std::string& session, int item, const std::string& model,
                      const std::string& text) {
    ResponseRecord r;
    r.session_id = session;
    r.item_index = item;
    r.model_name = model;
    r.raw_text = text;
    r.condition = client_condition();
    return r;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

const extraction::ParseRules kRules = extraction::ParseRules::defaults();

}  // namespace

TEST_CASE("response records round-trip through json lines") {
    ResponseRecord r = record("s-9", 17, "m-large", "My choice is 4.");
    r.condition.role = prompting::Role::counselor;
    r.condition.role_persona_name = "Carl Rogers";
    r.condition.granularity = 0.3;

    std::string line = preference::response_to_json_line(r);
    CHECK(line.substr(0, 15) == "{\"granularity\":");
    ResponseRecord back = preference::response_from_json_line(line);
    CHECK(back.session_id == r.session_id);
    CHECK(back.item_index == r.item_index);
    CHECK(back.model_name == r.model_name);
    CHECK(back.raw_text == r.raw_text);
    CHECK(back.condition == r.condition);
    CHECK(preference::response_to_json_line(back) == line);

    ResponseRecord plain = record("s-1", 1, "m", "text");
    std::string plain_line = preference::response_to_json_line(plain);
    CHECK(plain_line.find("role_name") == std::string::npos);
    CHECK(preference::response_from_json_line(plain_line).condition == plain.condition);
}

TEST_CASE("item errors order with undefined last") {
    ItemError zero{0}, one{1}, two{2}, undefined{};

    CHECK(preference::error_less(zero, one));
    CHECK(preference::error_less(one, two));
    CHECK(preference::error_less(two, undefined));
    CHECK(!preference::error_less(undefined, two));
    CHECK(!preference::error_less(undefined, undefined));
    CHECK(!preference::error_less(one, one));

    CHECK(preference::error_equal(one, one));
    CHECK(preference::error_equal(undefined, undefined));
    CHECK(!preference::error_equal(one, two));
    CHECK(!preference::error_equal(one, undefined));
}

TEST_CASE("item errors derive from item truth, then summary truth") {
    corpus::Session full = flat_session("s-1");
    (*full.item_ground_truth)[1] = 5;

    CHECK(preference::item_error({ParseKind::choice, 3}, 1, full).value == 2);
    CHECK(preference::item_error({ParseKind::choice, 5}, 1, full).value == 0);

    // items absent from the sheet fall back to the target implied by the summary
    corpus::Session sparse = flat_session("s-2");
    sparse.item_ground_truth->erase(1);
    CHECK(preference::item_error({ParseKind::choice, 3}, 1, sparse).value == 0);
    CHECK(preference::item_error({ParseKind::choice, 1}, 1, sparse).value == 2);

    corpus::Session summary_only = flat_session("s-3");
    summary_only.item_ground_truth.reset();
    CHECK(preference::item_error({ParseKind::choice, 4}, 1, summary_only).value == 1);

    corpus::Session bare = flat_session("s-4");
    bare.item_ground_truth.reset();
    bare.ground_truth.reset();
    CHECK_THROWS_WITH_AS(preference::item_error({ParseKind::choice, 3}, 1, bare),
                         "session has no ground truth: s-4", preference::MissingGroundTruth);

    // refusals and unparseable answers are undefined without consulting truth
    CHECK(!preference::item_error({ParseKind::refusal, 0}, 1, bare).defined());
    CHECK(!preference::item_error({ParseKind::unparseable, 0}, 1, bare).defined());
}

TEST_CASE("pair building keeps the lowest-error answer as chosen") {
    std::vector<corpus::Session> sessions = {flat_session("s-1")};
    prompting::TemplateSet templates = prompting::TemplateSet::builtin_english();

    std::vector<ResponseRecord> responses = {
        record("s-1", 1, "noisy", "My choice is 1. Disagree (strongly)."),
        record("s-1", 1, "good", "My choice is 3."),
    };
    preference::BuildResult result =
        preference::build_pairs(responses, sessions, kRules, templates);

    CHECK(result.stats.groups_total == 1);
    CHECK(result.stats.pairs_built == 1);
    CHECK(result.stats.groups_skipped == 0);
    CHECK(result.stats.pairs_dropped == 0);
    REQUIRE(result.pairs.size() == 1);

    const preference::PreferencePair& pair = result.pairs[0];
    CHECK(pair.chosen == "My choice is 3.");
    CHECK(pair.rejected == "My choice is 1. Disagree (strongly).");
    CHECK(pair.chosen_model == "good");
    CHECK(pair.rejected_model == "noisy");
    CHECK(pair.chosen_error.value == 0);
    CHECK(pair.rejected_error.value == 2);
    CHECK(pair.session_id == "s-1");
    CHECK(pair.item_index == 1);

    // the prompt is rebuilt from the corpus, not carried in the responses
    prompting::PromptBuilder builder(templates);
    prompting::PromptBundle bundle = builder.build_item_prompt(
        sessions[0], client_condition(), inventory::Instrument::bundled().item(1));
    CHECK(pair.prompt == bundle.messages);

    REQUIRE(result.sft.size() == 1);
    CHECK(result.sft[0].completion == "My choice is 3.");
    CHECK(result.sft[0].prompt == bundle.messages);
}

TEST_CASE("pair building tie-breaks and skip rules") {
    std::vector<corpus::Session> sessions = {flat_session("s-1")};
    prompting::TemplateSet templates = prompting::TemplateSet::builtin_english();

    // equal error, different answers: shorter raw text wins
    preference::BuildResult by_length = preference::build_pairs(
        {record("s-1", 1, "a", "My choice is 4, I believe."),
         record("s-1", 1, "b", "My choice is 2.")},
        sessions, kRules, templates);
    REQUIRE(by_length.pairs.size() == 1);
    CHECK(by_length.pairs[0].chosen == "My choice is 2.");
    CHECK(by_length.pairs[0].chosen_error.value == 1);
    CHECK(by_length.pairs[0].rejected_error.value == 1);

    // equal error and length: model name decides
    preference::BuildResult by_model = preference::build_pairs(
        {record("s-1", 1, "zeta", "My choice is 4."), record("s-1", 1, "alpha", "My choice is 2.")},
        sessions, kRules, templates);
    REQUIRE(by_model.pairs.size() == 1);
    CHECK(by_model.pairs[0].chosen_model == "alpha");

    // identical parse with identical error carries no signal
    preference::BuildResult dropped = preference::build_pairs(
        {record("s-1", 1, "a", "My choice is 3."), record("s-1", 1, "b", "3. Neutral (no opinion)")},
        sessions, kRules, templates);
    CHECK(dropped.stats.pairs_dropped == 1);
    CHECK(dropped.pairs.empty());
    CHECK(dropped.sft.empty());

    // both refusing is equally uninformative
    preference::BuildResult refusals = preference::build_pairs(
        {record("s-1", 1, "a", "As an AI model, I have no personality."),
         record("s-1", 1, "b", "As a language model, I cannot answer.")},
        sessions, kRules, templates);
    CHECK(refusals.stats.pairs_dropped == 1);

    // one model alone cannot form a pair
    preference::BuildResult solo = preference::build_pairs(
        {record("s-1", 1, "a", "My choice is 3."), record("s-1", 1, "a", "My choice is 1.")},
        sessions, kRules, templates);
    CHECK(solo.stats.groups_skipped == 1);
    CHECK(solo.pairs.empty());

    // a refusal loses to any parsed answer and never reaches the sft set
    preference::BuildResult vs_refusal = preference::build_pairs(
        {record("s-1", 1, "a", "As an AI model, I have no personality."),
         record("s-1", 1, "b", "My choice is 1.")},
        sessions, kRules, templates);
    REQUIRE(vs_refusal.pairs.size() == 1);
    CHECK(vs_refusal.pairs[0].chosen == "My choice is 1.");
    CHECK(!vs_refusal.pairs[0].rejected_error.defined());
    CHECK(vs_refusal.sft.size() == 1);

    // groups split by item and by condition
    ResponseRecord other_gran = record("s-1", 1, "b", "My choice is 1.");
    other_gran.condition.granularity = 0.5;
    preference::BuildResult split_groups = preference::build_pairs(
        {record("s-1", 1, "a", "My choice is 3."), other_gran,
         record("s-1", 2, "a", "My choice is 3."), record("s-1", 2, "b", "My choice is 2.")},
        sessions, kRules, templates);
    CHECK(split_groups.stats.groups_total == 3);
    CHECK(split_groups.stats.groups_skipped == 2);
    CHECK(split_groups.stats.pairs_built == 1);

    CHECK_THROWS_WITH_AS(
        preference::build_pairs({record("ghost", 1, "a", "My choice is 3.")}, sessions, kRules,
                                templates),
        "response references unknown session ghost", std::runtime_error);
}

TEST_CASE("exports are deterministic and enforce their invariants") {
    std::vector<corpus::Session> sessions = {flat_session("s-1")};
    prompting::TemplateSet templates = prompting::TemplateSet::builtin_english();
    std::vector<ResponseRecord> responses = {
        record("s-1", 1, "good", "My choice is 3."),
        record("s-1", 1, "noisy", "My choice is 1. Disagree (strongly)."),
        record("s-1", 2, "good", "As an AI model, I have no personality."),
        record("s-1", 2, "noisy", "My choice is 4."),
    };
    preference::BuildResult result =
        preference::build_pairs(responses, sessions, kRules, templates);
    REQUIRE(result.pairs.size() == 2);

    TempDir a("ocean-test-preference-a");
    TempDir b("ocean-test-preference-b");
    preference::ExportStats stats =
        preference::export_dataset(result, sessions, kRules, a.path.string());
    preference::export_dataset(result, sessions, kRules, b.path.string());

    CHECK(stats.dpo_lines == 2);
    CHECK(stats.sft_lines == 2);
    for (const char* name : {"dpo.jsonl", "sft.jsonl", "meta.toml"})
        CHECK(read_file(a.path / name) == read_file(b.path / name));

    std::string dpo = read_file(a.path / "dpo.jsonl");
    CHECK(dpo.substr(0, 10) == "{\"chosen\":");
    CHECK(preference::jsonl_round_trips((a.path / "dpo.jsonl").string()));
    CHECK(preference::jsonl_round_trips((a.path / "sft.jsonl").string()));

    CHECK(read_file(a.path / "meta.toml") == preference::meta_toml_text());

    // a hand-swapped pair must fail the re-derived error check
    preference::BuildResult swapped = result;
    std::swap(swapped.pairs[0].chosen, swapped.pairs[0].rejected);
    TempDir c("ocean-test-preference-c");
    CHECK_THROWS_WITH_AS(
        preference::export_dataset(swapped, sessions, kRules, (c.path / "out").string()),
        "export invariant violated: chosen error exceeds rejected error for session s-1 item 1",
        preference::ExportInvariant);
    CHECK(!std::filesystem::exists(c.path / "out" / "dpo.jsonl"));

    preference::BuildResult bad_sft = result;
    bad_sft.sft[0].completion = "gibberish";
    CHECK_THROWS_WITH_AS(
        preference::export_dataset(bad_sft, sessions, kRules, (c.path / "out2").string()),
        "export invariant violated: sft completion does not parse to a choice",
        preference::ExportInvariant);

    preference::BuildResult orphan = result;
    orphan.pairs[0].session_id = "ghost";
    CHECK_THROWS_AS(preference::export_dataset(orphan, sessions, kRules, (c.path / "o3").string()),
                    preference::ExportInvariant);
}

TEST_CASE("the training-slot document is stable and parseable") {
    std::string text = preference::meta_toml_text();
    CHECK(text ==
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
          "data_type = \"bfloat16\"\n");

    minitoml::Document doc = minitoml::parse(text);
    const minitoml::Table& training = doc.table("training");
    CHECK(training.at("seed").as_int() == 42);
    CHECK(training.at("optimizer").as_string() == "AdamW");
    CHECK(training.at("learning_rate").as_double() == 1e-6);
    CHECK(training.at("train_epochs").as_int() == 3);
    CHECK(training.at("per_device_train_batch_size").as_int() == 1);
    CHECK(training.at("gradient_accumulation_steps").as_int() == 2);
    CHECK(training.at("warmup_ratio").as_double() == 0.1);
    CHECK(training.at("lr_scheduler_type").as_string() == "cosine");
    CHECK(training.at("data_type").as_string() == "bfloat16");
    CHECK(training.values.size() == 9);
}

TEST_CASE("jsonl round-trip detection") {
    TempDir dir("ocean-test-preference-jsonl");
    auto write = [&](const char* name, const std::string& content) {
        std::ofstream out(dir.path / name, std::ios::binary);
        out << content;
        return (dir.path / name).string();
    };

    CHECK(preference::jsonl_round_trips(write("good.jsonl", "{\"a\":1}\n{\"b\":[1,2]}\n")));
    CHECK(preference::jsonl_round_trips(write("empty.jsonl", "")));
    CHECK(!preference::jsonl_round_trips(write("spaced.jsonl", "{ \"a\": 1 }\n")));
    CHECK(!preference::jsonl_round_trips(write("no-newline.jsonl", "{\"a\":1}")));
}
