#include "ocean/extraction.hpp"

#include <regex>
#include <set>

#include "ocean/util.hpp"

namespace ocean::extraction {

namespace {

struct CodePoint {
    char32_t value = 0;
    std::size_t byte_offset = 0;
    std::size_t byte_length = 0;
};

std::vector<CodePoint> decode_utf8(const std::string& s) {
    std::vector<CodePoint> out;
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        CodePoint cp;
        cp.byte_offset = i;
        if (c < 0x80) {
            cp.value = c;
            cp.byte_length = 1;
        } else if ((c & 0xe0) == 0xc0 && i + 1 < s.size()) {
            cp.value = static_cast<char32_t>((c & 0x1f) << 6 | (s[i + 1] & 0x3f));
            cp.byte_length = 2;
        } else if ((c & 0xf0) == 0xe0 && i + 2 < s.size()) {
            cp.value = static_cast<char32_t>((c & 0x0f) << 12 | (s[i + 1] & 0x3f) << 6 |
                                             (s[i + 2] & 0x3f));
            cp.byte_length = 3;
        } else if ((c & 0xf8) == 0xf0 && i + 3 < s.size()) {
            cp.value = static_cast<char32_t>((c & 0x07) << 18 | (s[i + 1] & 0x3f) << 12 |
                                             (s[i + 2] & 0x3f) << 6 | (s[i + 3] & 0x3f));
            cp.byte_length = 4;
        } else {
            cp.value = 0xfffd;
            cp.byte_length = 1;
        }
        i += cp.byte_length;
        out.push_back(cp);
    }
    return out;
}

// 1..5 from ASCII or fullwidth digits, 0 otherwise
int digit_value(char32_t cp) {
    if (cp >= U'1' && cp <= U'5') return static_cast<int>(cp - U'0');
    if (cp >= 0xff11 && cp <= 0xff15) return static_cast<int>(cp - 0xff10);
    return 0;
}

bool is_any_digit(char32_t cp) {
    return (cp >= U'0' && cp <= U'9') || (cp >= 0xff10 && cp <= 0xff19);
}

// a digit is standalone when it is not part of a longer number or a decimal
bool standalone_at(const std::vector<CodePoint>& cps, std::size_t i) {
    if (i > 0) {
        char32_t prev = cps[i - 1].value;
        if (is_any_digit(prev)) return false;
        if (prev == U'.' && i > 1 && is_any_digit(cps[i - 2].value)) return false;
    }
    if (i + 1 < cps.size()) {
        char32_t next = cps[i + 1].value;
        if (is_any_digit(next)) return false;
        if (next == U'.' && i + 2 < cps.size() && is_any_digit(cps[i + 2].value)) return false;
    }
    return true;
}

std::vector<std::string> load_pattern_file(const std::filesystem::path& path) {
    std::vector<std::string> out;
    for (const std::string& line : util::split_lines(util::read_file(path))) {
        std::string t = util::trim(line);
        if (t.empty() || t[0] == '#') continue;
        out.push_back(t);
    }
    return out;
}

}  // namespace

ParseRules ParseRules::defaults() {
    ParseRules r;
    r.refusal_phrases = {
        "as an ai",        "as a language model", "have no personality",
        "cannot answer",   "can't answer",        "unable to answer",
        "i am an ai",      "作为ai",              "作为人工智能",
        "作为一个ai",      "没有个性",            "无法回答",
    };
    r.choice_keywords = {"choice", "option", "select", "选择"};
    r.option_label_words = {"disagree", "neutral", "agree", "不同意", "中立", "同意"};
    return r;
}

ParseRules ParseRules::from_dir(const std::filesystem::path& dir) {
    ParseRules r;
    r.refusal_phrases = load_pattern_file(dir / "refusal_phrases.txt");
    r.choice_keywords = load_pattern_file(dir / "choice_keywords.txt");
    r.option_label_words = load_pattern_file(dir / "option_labels.txt");
    if (r.refusal_phrases.empty() || r.choice_keywords.empty() || r.option_label_words.empty())
        throw std::runtime_error("parse rule files in " + dir.string() + " are empty");
    return r;
}

ParsedChoice parse_choice(const std::string& text, const ParseRules& rules) {
    std::string lower = util::to_lower(text);

    for (const std::string& phrase : rules.refusal_phrases)
        if (lower.find(util::to_lower(phrase)) != std::string::npos)
            return {ParseKind::refusal, 0};

    std::vector<CodePoint> cps = decode_utf8(lower);

    // keyword followed by a digit within 12 characters
    std::size_t best_pos = std::string::npos, best_len = 0;
    for (const std::string& kw : rules.choice_keywords) {
        std::string k = util::to_lower(kw);
        std::size_t pos = lower.find(k);
        while (pos != std::string::npos) {
            if (pos < best_pos) {
                best_pos = pos;
                best_len = k.size();
            }
            pos = lower.find(k, pos + 1);
        }
    }
    if (best_pos != std::string::npos) {
        std::size_t start_cp = 0;
        while (start_cp < cps.size() && cps[start_cp].byte_offset < best_pos + best_len) ++start_cp;
        for (std::size_t i = start_cp; i < cps.size() && i < start_cp + 12; ++i) {
            int v = digit_value(cps[i].value);
            if (v != 0 && standalone_at(cps, i)) return {ParseKind::choice, v};
        }
    }

    // option line: digit, '.' or '、', then a label word
    std::size_t line_start = 0;
    while (line_start <= lower.size()) {
        std::size_t nl = lower.find('\n', line_start);
        std::string line = lower.substr(
            line_start, nl == std::string::npos ? std::string::npos : nl - line_start);
        std::vector<CodePoint> lcps = decode_utf8(line);
        std::size_t i = 0;
        while (i < lcps.size() && (lcps[i].value == U' ' || lcps[i].value == U'\t')) ++i;
        if (i + 1 < lcps.size()) {
            int v = digit_value(lcps[i].value);
            char32_t punct = lcps[i + 1].value;
            if (v != 0 && (punct == U'.' || punct == 0x3001)) {
                std::string rest = line.substr(lcps[i + 1].byte_offset + lcps[i + 1].byte_length);
                for (const std::string& label : rules.option_label_words)
                    if (rest.find(util::to_lower(label)) != std::string::npos)
                        return {ParseKind::choice, v};
            }
        }
        if (nl == std::string::npos) break;
        line_start = nl + 1;
    }

    // first standalone digit in the first sentence
    std::size_t sentence_end = cps.size();
    for (std::size_t i = 0; i < cps.size(); ++i) {
        char32_t c = cps[i].value;
        bool decimal_dot = c == U'.' && i > 0 && i + 1 < cps.size() &&
                           is_any_digit(cps[i - 1].value) && is_any_digit(cps[i + 1].value);
        if ((c == U'.' && !decimal_dot) || c == U'!' || c == U'?' || c == U'\n' || c == 0x3002 ||
            c == 0xff01 || c == 0xff1f) {
            sentence_end = i;
            break;
        }
    }
    for (std::size_t i = 0; i < sentence_end; ++i) {
        int v = digit_value(cps[i].value);
        if (v != 0 && standalone_at(cps, i)) return {ParseKind::choice, v};
    }

    return {ParseKind::unparseable, 0};
}

DirectParse parse_direct(const std::string& text, const ParseRules& rules) {
    std::string lower = util::to_lower(text);
    for (const std::string& phrase : rules.refusal_phrases)
        if (lower.find(util::to_lower(phrase)) != std::string::npos)
            return {ParseKind::refusal, {}, false};

    static const std::regex pattern(
        R"(O\s*=\s*(-?[0-9]+(?:\.[0-9]+)?)[\s\S]*?C\s*=\s*(-?[0-9]+(?:\.[0-9]+)?)[\s\S]*?E\s*=\s*(-?[0-9]+(?:\.[0-9]+)?)[\s\S]*?A\s*=\s*(-?[0-9]+(?:\.[0-9]+)?)[\s\S]*?N\s*=\s*(-?[0-9]+(?:\.[0-9]+)?))");
    std::smatch m;
    if (!std::regex_search(text, m, pattern)) return {ParseKind::unparseable, {}, false};

    DirectParse out;
    out.kind = ParseKind::choice;
    for (std::size_t i = 0; i < kDomains.size(); ++i) {
        double v = std::stod(m[i + 1].str());
        if (v < 1.0) {
            v = 1.0;
            out.clamped = true;
        } else if (v > 5.0) {
            v = 5.0;
            out.clamped = true;
        }
        out.scores.set(kDomains[i], v);
    }
    return out;
}

SheetSummary assemble_sheet(const std::vector<ItemResponse>& responses) {
    SheetSummary out;
    std::set<int> seen;
    for (const ItemResponse& r : responses) {
        if (!seen.insert(r.item_index).second)
            throw std::invalid_argument("duplicate response for item " +
                                        std::to_string(r.item_index));
        switch (r.parsed.kind) {
            case ParseKind::choice:
                out.sheet[r.item_index] = r.parsed.choice;
                ++out.answered;
                break;
            case ParseKind::refusal:
                ++out.refusal_count;
                break;
            case ParseKind::unparseable:
                ++out.unparseable_count;
                break;
        }
    }
    return out;
}

double rejection_rate(const std::vector<ParsedChoice>& parses) {
    if (parses.empty()) return 0.0;
    std::size_t refusals = 0;
    for (const ParsedChoice& p : parses)
        if (p.kind == ParseKind::refusal) ++refusals;
    return static_cast<double>(refusals) / static_cast<double>(parses.size());
}

}  // namespace ocean::extraction
