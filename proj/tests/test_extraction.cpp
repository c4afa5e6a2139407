#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ocean/extraction.hpp"

using namespace ocean;
using extraction::ParseKind;
using extraction::ParsedChoice;
using extraction::ParseRules;

namespace {

std::filesystem::path repo_root() {
    const char* root = std::getenv("OCEAN_REPO_ROOT");
    REQUIRE(root != nullptr);
    return root;
}

ParsedChoice choice_of(const std::string& text) {
    static const ParseRules rules = ParseRules::defaults();
    return extraction::parse_choice(text, rules);
}

}  // namespace

TEST_CASE("refusal phrases dominate everything else") {
    const std::vector<std::string> refusals = {
        "As an AI model, I have no personality.",
        "As a language model, I cannot pick an option.",
        "I have no personality to speak of.",
        "I cannot answer that question.",
        "Sorry, I can't answer this.",
        "I'm unable to answer such personal items.",
        "Well, I am an AI after all.",
        "\xe4\xbd\x9c\xe4\xb8\xba"
        "AI\xef\xbc\x8c\xe6\x88\x91\xe4\xb8\x8d\xe8\x83\xbd\xe5\x9b\x9e\xe7\xad\x94\xe3\x80\x82",
        "\xe4\xbd\x9c\xe4\xb8\xba\xe4\xba\xba\xe5\xb7\xa5\xe6\x99\xba\xe8\x83\xbd\xe5\x8a\xa9"
        "\xe6\x89\x8b\xe6\x88\x91\xe4\xb8\x8d\xe4\xbe\xbf\xe4\xbd\x9c\xe7\xad\x94\xe3\x80\x82",
        "\xe4\xbd\x9c\xe4\xb8\xba\xe4\xb8\x80\xe4\xb8\xaa"
        "AI\xe6\x88\x91\xe6\xb2\xa1\xe6\x9c\x89\xe5\x81\x8f\xe5\xa5\xbd\xe3\x80\x82",
        "\xe6\x88\x91\xe6\xb2\xa1\xe6\x9c\x89\xe4\xb8\xaa\xe6\x80\xa7\xe5\x8f\xaf\xe8\xa8\x80"
        "\xe3\x80\x82",
        "\xe8\xbf\x99\xe4\xb8\xaa\xe9\x97\xae\xe9\xa2\x98\xe6\x88\x91\xe6\x97\xa0\xe6\xb3\x95"
        "\xe5\x9b\x9e\xe7\xad\x94\xe3\x80\x82",
    };
    REQUIRE(refusals.size() >= 10);
    for (const std::string& text : refusals)
        CHECK(choice_of(text) == ParsedChoice{ParseKind::refusal, 0});

    // a digit after the refusal does not rescue the answer
    CHECK(choice_of("As an AI model, I have no personality. My choice is 3.") ==
          ParsedChoice{ParseKind::refusal, 0});
}

TEST_CASE("keyword followed by a nearby digit wins") {
    CHECK(choice_of("My choice is 3. Agree.") == ParsedChoice{ParseKind::choice, 3});
    CHECK(choice_of("I select 5 without hesitation") == ParsedChoice{ParseKind::choice, 5});
    CHECK(choice_of("the best option: 2") == ParsedChoice{ParseKind::choice, 2});
    CHECK(choice_of("\xe6\x88\x91\xe7\x9a\x84\xe9\x80\x89\xe6\x8b\xa9\xe6\x98\xaf"
                    "3\xe3\x80\x82") == ParsedChoice{ParseKind::choice, 3});  // 我的选择是3。

    // fullwidth digits count the same
    CHECK(choice_of("My choice is \xef\xbc\x93.") == ParsedChoice{ParseKind::choice, 3});

    // the window is 12 code points, so CJK context still reaches the digit
    CHECK(choice_of("\xe9\x80\x89\xe6\x8b\xa9\xef\xbc\x8c\xe6\x88\x91\xe8\x80\x83\xe8\x99\x91"
                    "\xe5\xbe\x88\xe4\xb9\x85\xe7\x84\xb6\xe5\x90\x8e\xe5\x86\xb3\xe5\xae\x9a"
                    "\xe4\xba\x86"
                    "3") == ParsedChoice{ParseKind::choice, 3});

    // the window crosses sentence ends while the fallback scan does not
    CHECK(choice_of("Option noted. 4 I say.") == ParsedChoice{ParseKind::choice, 4});
    CHECK(choice_of("Option noted, no commitment yet. I lean 4 today.") ==
          ParsedChoice{ParseKind::unparseable, 0});

    // digit out of the window but inside the first sentence still parses
    CHECK(choice_of("choice: hmm, definitely leaning 4") == ParsedChoice{ParseKind::choice, 4});
}

TEST_CASE("numbered option lines need a label word") {
    CHECK(choice_of("I thought hard.\n4. Agree (a little)\nThat is all.") ==
          ParsedChoice{ParseKind::choice, 4});
    CHECK(choice_of("I thought hard.\n4. whatever\nThat is all.") ==
          ParsedChoice{ParseKind::unparseable, 0});
    CHECK(choice_of("I thought hard.\n \t2. Disagree (strongly)") ==
          ParsedChoice{ParseKind::choice, 2});
    CHECK(choice_of("\xef\xbc\x93\xe3\x80\x81\xe5\x90\x8c\xe6\x84\x8f") ==
          ParsedChoice{ParseKind::choice, 3});  // ３、同意
    CHECK(choice_of("1. Disagree (strongly)\nReason: simulated.") ==
          ParsedChoice{ParseKind::choice, 1});
}

TEST_CASE("fallback takes the first standalone digit of the first sentence") {
    CHECK(choice_of("After thinking it over I settle on 3 for this item. Reason: simulated.") ==
          ParsedChoice{ParseKind::choice, 3});
    CHECK(choice_of("2. whatever") == ParsedChoice{ParseKind::choice, 2});
    CHECK(choice_of("I rate it 4.5 out of 5.") == ParsedChoice{ParseKind::choice, 5});
    CHECK(choice_of("I scored 10 on it") == ParsedChoice{ParseKind::unparseable, 0});
    CHECK(choice_of("Maybe 12345") == ParsedChoice{ParseKind::unparseable, 0});
    CHECK(choice_of("First thought! 4 then.") == ParsedChoice{ParseKind::unparseable, 0});
    CHECK(choice_of("\xe6\x88\x91\xe7\xbb\x99\xe5\x87\xba\xef\xbc\x94\xe5\x88\x86") ==
          ParsedChoice{ParseKind::choice, 4});  // 我给出４分
    CHECK(choice_of("no digits at all") == ParsedChoice{ParseKind::unparseable, 0});
    CHECK(choice_of("") == ParsedChoice{ParseKind::unparseable, 0});
    CHECK(choice_of("zero 0 and six 6 only") == ParsedChoice{ParseKind::unparseable, 0});
}

TEST_CASE("direct trait answers parse, clamp, and refuse") {
    ParseRules rules = ParseRules::defaults();

    extraction::DirectParse exact =
        extraction::parse_direct("O=3.2 C=4.1 E=2.0 A=5.0 N=1.3. Reason: simulated.", rules);
    CHECK(exact.kind == ParseKind::choice);
    CHECK(exact.clamped == false);
    CHECK(exact.scores.o == 3.2);
    CHECK(exact.scores.c == 4.1);
    CHECK(exact.scores.e == 2.0);
    CHECK(exact.scores.a == 5.0);
    CHECK(exact.scores.n == 1.3);

    extraction::DirectParse wordy = extraction::parse_direct(
        "Sure thing. O = 3.5, then C=4; E=2, A=4.5 and finally N=1.", rules);
    CHECK(wordy.kind == ParseKind::choice);
    CHECK(wordy.scores.o == 3.5);
    CHECK(wordy.scores.c == 4.0);
    CHECK(wordy.scores.n == 1.0);

    extraction::DirectParse clamped =
        extraction::parse_direct("O=0.5 C=6 E=3 A=3 N=-2", rules);
    CHECK(clamped.kind == ParseKind::choice);
    CHECK(clamped.clamped == true);
    CHECK(clamped.scores.o == 1.0);
    CHECK(clamped.scores.c == 5.0);
    CHECK(clamped.scores.n == 1.0);

    CHECK(extraction::parse_direct("As an AI model, I have no personality.", rules).kind ==
          ParseKind::refusal);
    CHECK(extraction::parse_direct("O=3 C=4 E=2 A=5", rules).kind == ParseKind::unparseable);
    CHECK(extraction::parse_direct("o=3 c=3 e=3 a=3 n=3", rules).kind == ParseKind::unparseable);
    CHECK(extraction::parse_direct("", rules).kind == ParseKind::unparseable);
}

TEST_CASE("sheets assemble with per-kind counters") {
    auto resp = [](int item, ParsedChoice parsed) {
        extraction::ItemResponse r;
        r.session_id = "s-1";
        r.item_index = item;
        r.model_name = "m";
        r.parsed = parsed;
        return r;
    };
    std::vector<extraction::ItemResponse> responses = {
        resp(1, {ParseKind::choice, 4}),
        resp(2, {ParseKind::refusal, 0}),
        resp(3, {ParseKind::unparseable, 0}),
        resp(4, {ParseKind::choice, 1}),
    };
    extraction::SheetSummary summary = extraction::assemble_sheet(responses);
    CHECK(summary.answered == 2);
    CHECK(summary.refusal_count == 1);
    CHECK(summary.unparseable_count == 1);
    CHECK(summary.sheet == inventory::ResponseSheet{{1, 4}, {4, 1}});

    responses.push_back(resp(2, {ParseKind::choice, 5}));
    CHECK_THROWS_WITH_AS(extraction::assemble_sheet(responses),
                         "duplicate response for item 2", std::invalid_argument);
}

TEST_CASE("rejection rate counts refusals only") {
    CHECK(extraction::rejection_rate({}) == 0.0);
    std::vector<ParsedChoice> parses = {{ParseKind::refusal, 0},
                                        {ParseKind::choice, 3},
                                        {ParseKind::unparseable, 0},
                                        {ParseKind::choice, 1}};
    CHECK(extraction::rejection_rate(parses) == 0.25);
}

TEST_CASE("rule files load from disk and match the built-in behavior") {
    ParseRules defaults = ParseRules::defaults();
    ParseRules disk = ParseRules::from_dir(repo_root() / "config" / "extraction");
    CHECK(disk.refusal_phrases.size() == defaults.refusal_phrases.size());
    CHECK(disk.choice_keywords.size() == defaults.choice_keywords.size());
    CHECK(disk.option_label_words.size() == defaults.option_label_words.size());

    const std::vector<std::string> fixtures = {
        "As an AI model, I have no personality.",
        "My choice is 3.",
        "1. Disagree (strongly)\nReason: simulated.",
        "After thinking it over I settle on 3 for this item. Reason: simulated.",
        "gibberish",
    };
    for (const std::string& text : fixtures)
        CHECK(extraction::parse_choice(text, disk) == extraction::parse_choice(text, defaults));

    std::filesystem::path dir =
        std::filesystem::temp_directory_path() / "ocean-test-extraction-rules";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    auto write = [&](const char* name, const char* content) {
        std::ofstream out(dir / name);
        out << content;
    };
    write("refusal_phrases.txt", "# comment\n\n  spaced phrase  \n");
    write("choice_keywords.txt", "pick\n");
    write("option_labels.txt", "agree\n");
    ParseRules custom = ParseRules::from_dir(dir);
    CHECK(custom.refusal_phrases == std::vector<std::string>{"spaced phrase"});
    CHECK(extraction::parse_choice("I pick 2", custom) == ParsedChoice{ParseKind::choice, 2});
    CHECK(extraction::parse_choice("a spaced phrase then 3", custom) ==
          ParsedChoice{ParseKind::refusal, 0});
    // stock keyword "option" is not in the custom list, so the digit after the
    // sentence end stays out of reach
    CHECK(extraction::parse_choice("Option noted. 4 I say.", custom) ==
          ParsedChoice{ParseKind::unparseable, 0});

    write("choice_keywords.txt", "# nothing but comments\n");
    CHECK_THROWS_AS(ParseRules::from_dir(dir), std::runtime_error);
    std::filesystem::remove_all(dir);
}
