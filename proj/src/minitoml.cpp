#include "ocean/minitoml.hpp"

#include <cctype>
#include <cstdlib>

#include "ocean/util.hpp"

namespace ocean::minitoml {

namespace {

const char* kind_name(Value::Kind kind) {
    switch (kind) {
        case Value::Kind::String: return "string";
        case Value::Kind::Integer: return "integer";
        case Value::Kind::Float: return "float";
        case Value::Kind::Boolean: return "boolean";
        case Value::Kind::Array: return "array";
    }
    return "?";
}

[[noreturn]] void type_error(Value::Kind want, Value::Kind got) {
    throw std::runtime_error(std::string("toml value is ") + kind_name(got) + ", wanted " +
                             kind_name(want));
}

struct Cursor {
    const std::string& text;
    std::size_t pos = 0;
    int line;

    bool done() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }

    void skip_ws() {
        while (!done() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    }
};

[[noreturn]] void fail(const Cursor& c, const std::string& why) { throw ParseError(c.line, why); }

std::string parse_basic_string(Cursor& c) {
    ++c.pos;  // opening quote
    std::string out;
    while (true) {
        if (c.done()) fail(c, "unterminated string");
        char ch = c.text[c.pos++];
        if (ch == '"') return out;
        if (ch == '\n') fail(c, "newline in string");
        if (ch == '\\') {
            if (c.done()) fail(c, "dangling escape");
            char esc = c.text[c.pos++];
            switch (esc) {
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case 'r': out += '\r'; break;
                default: fail(c, std::string("unsupported escape \\") + esc);
            }
            continue;
        }
        out += ch;
    }
}

Value parse_scalar(Cursor& c);

Value parse_array(Cursor& c) {
    ++c.pos;  // '['
    Value out;
    out.kind = Value::Kind::Array;
    while (true) {
        c.skip_ws();
        if (c.done()) fail(c, "unterminated array");
        if (c.peek() == ']') {
            ++c.pos;
            return out;
        }
        out.items.push_back(parse_scalar(c));
        c.skip_ws();
        if (c.done()) fail(c, "unterminated array");
        if (c.peek() == ',') {
            ++c.pos;
            continue;
        }
        if (c.peek() == ']') {
            ++c.pos;
            return out;
        }
        fail(c, "expected ',' or ']' in array");
    }
}

Value parse_scalar(Cursor& c) {
    c.skip_ws();
    if (c.done()) fail(c, "missing value");
    char ch = c.peek();
    if (ch == '"') {
        Value v;
        v.kind = Value::Kind::String;
        v.str = parse_basic_string(c);
        return v;
    }
    if (ch == '[') return parse_array(c);

    std::size_t start = c.pos;
    while (!c.done()) {
        char t = c.peek();
        if (t == ',' || t == ']' || t == '#' || t == '\n' || t == ' ' || t == '\t') break;
        ++c.pos;
    }
    std::string token = c.text.substr(start, c.pos - start);
    if (token.empty()) fail(c, "missing value");

    Value v;
    if (token == "true" || token == "false") {
        v.kind = Value::Kind::Boolean;
        v.boolean = (token == "true");
        return v;
    }
    bool looks_float = token.find_first_of(".eE") != std::string::npos &&
                       token.find_first_not_of("+-0123456789.eE") == std::string::npos;
    char* end = nullptr;
    if (!looks_float) {
        long long n = std::strtoll(token.c_str(), &end, 10);
        if (end && *end == '\0') {
            v.kind = Value::Kind::Integer;
            v.integer = n;
            v.number = static_cast<double>(n);
            return v;
        }
    }
    end = nullptr;
    double d = std::strtod(token.c_str(), &end);
    if (!end || *end != '\0') fail(c, "bad value '" + token + "'");
    v.kind = Value::Kind::Float;
    v.number = d;
    return v;
}

bool bare_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

}  // namespace

const std::string& Value::as_string() const {
    if (kind != Kind::String) type_error(Kind::String, kind);
    return str;
}

std::int64_t Value::as_int() const {
    if (kind != Kind::Integer) type_error(Kind::Integer, kind);
    return integer;
}

double Value::as_double() const {
    if (kind == Kind::Integer) return static_cast<double>(integer);
    if (kind != Kind::Float) type_error(Kind::Float, kind);
    return number;
}

bool Value::as_bool() const {
    if (kind != Kind::Boolean) type_error(Kind::Boolean, kind);
    return boolean;
}

const std::vector<Value>& Value::as_array() const {
    if (kind != Kind::Array) type_error(Kind::Array, kind);
    return items;
}

std::vector<std::string> Value::as_string_array() const {
    std::vector<std::string> out;
    for (const Value& v : as_array()) out.push_back(v.as_string());
    return out;
}

std::vector<double> Value::as_double_array() const {
    std::vector<double> out;
    for (const Value& v : as_array()) out.push_back(v.as_double());
    return out;
}

const Value& Table::at(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) throw std::runtime_error("missing toml key '" + key + "'");
    return it->second;
}

std::string Table::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second.as_string();
}

std::int64_t Table::get_int(const std::string& key, std::int64_t fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second.as_int();
}

double Table::get_double(const std::string& key, double fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second.as_double();
}

bool Table::get_bool(const std::string& key, bool fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second.as_bool();
}

const Table& Document::table(const std::string& name) const {
    auto it = tables.find(name);
    if (it == tables.end()) throw std::runtime_error("missing toml table [" + name + "]");
    return it->second;
}

const std::vector<Table>& Document::array(const std::string& name) const {
    auto it = table_arrays.find(name);
    if (it == table_arrays.end()) throw std::runtime_error("missing toml array [[" + name + "]]");
    return it->second;
}

Document parse(const std::string& text) {
    Document doc;
    Table* current = &doc.root;

    std::vector<std::string> lines = util::split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        int line_no = static_cast<int>(i) + 1;
        Cursor c{lines[i], 0, line_no};
        c.skip_ws();
        if (c.done() || c.peek() == '#') continue;

        if (c.peek() == '[') {
            bool is_array = c.pos + 1 < c.text.size() && c.text[c.pos + 1] == '[';
            c.pos += is_array ? 2 : 1;
            std::size_t start = c.pos;
            while (!c.done() && bare_key_char(c.peek())) ++c.pos;
            std::string name = c.text.substr(start, c.pos - start);
            if (name.empty()) fail(c, "empty table name");
            if (is_array) {
                if (c.pos + 1 >= c.text.size() || c.text[c.pos] != ']' || c.text[c.pos + 1] != ']')
                    fail(c, "expected ]]");
                c.pos += 2;
                doc.table_arrays[name].emplace_back();
                current = &doc.table_arrays[name].back();
            } else {
                if (c.done() || c.peek() != ']') fail(c, "expected ]");
                ++c.pos;
                if (doc.tables.count(name)) fail(c, "duplicate table [" + name + "]");
                current = &doc.tables[name];
            }
            c.skip_ws();
            if (!c.done() && c.peek() != '#') fail(c, "trailing characters after table header");
            continue;
        }

        std::size_t start = c.pos;
        while (!c.done() && bare_key_char(c.peek())) ++c.pos;
        std::string key = c.text.substr(start, c.pos - start);
        if (key.empty()) fail(c, "expected key");
        c.skip_ws();
        if (c.done() || c.peek() != '=') fail(c, "expected '=' after key '" + key + "'");
        ++c.pos;
        Value v = parse_scalar(c);
        c.skip_ws();
        if (!c.done() && c.peek() != '#') fail(c, "trailing characters after value");
        if (current->values.count(key)) fail(c, "duplicate key '" + key + "'");
        current->values[key] = std::move(v);
    }
    return doc;
}

Document parse_file(const std::string& path) { return parse(util::read_file(path)); }

std::string quote(const std::string& raw) {
    std::string out = "\"";
    for (char c : raw) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default: out += c;
        }
    }
    out += '"';
    return out;
}

}  // namespace ocean::minitoml
