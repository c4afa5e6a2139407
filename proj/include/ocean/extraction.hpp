#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocean/inventory.hpp"
#include "ocean/traits.hpp"

namespace ocean::extraction {

enum class ParseKind { choice, refusal, unparseable };

struct ParsedChoice {
    ParseKind kind = ParseKind::unparseable;
    int choice = 0;  // valid only when kind == choice
    bool operator==(const ParsedChoice&) const = default;
};

struct DirectParse {
    ParseKind kind = ParseKind::unparseable;
    TraitScores scores;
    bool clamped = false;
};

// editable pattern lists; files hold one entry per line, '#' comments
struct ParseRules {
    std::vector<std::string> refusal_phrases;
    std::vector<std::string> choice_keywords;
    std::vector<std::string> option_label_words;

    static ParseRules defaults();
    static ParseRules from_dir(const std::filesystem::path& dir);
};

// Precedence: refusal phrases, then keyword followed by a digit within 12
// characters, then an option line ("4." / "4、" + label word), then the first
// standalone digit 1-5 in the first sentence. ASCII and fullwidth digits.
ParsedChoice parse_choice(const std::string& text, const ParseRules& rules);

// "O=<x> C=<x> E=<x> A=<x> N=<x>" with reals; values clamped into [1,5]
DirectParse parse_direct(const std::string& text, const ParseRules& rules);

struct ItemResponse {
    std::string session_id;
    int item_index = 0;
    std::string model_name;
    std::string raw_text;
    ParsedChoice parsed;
};

struct SheetSummary {
    inventory::ResponseSheet sheet;
    int answered = 0;
    int refusal_count = 0;
    int unparseable_count = 0;
};

// responses of one session from one model; duplicate item indices are a bug
SheetSummary assemble_sheet(const std::vector<ItemResponse>& responses);

// share of refusals; unparseable answers are not refusals
double rejection_rate(const std::vector<ParsedChoice>& parses);

}  // namespace ocean::extraction
