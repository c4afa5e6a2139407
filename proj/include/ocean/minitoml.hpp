#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace ocean::minitoml {

// Small TOML subset: [table], [[array-of-tables]], key = scalar or flat array,
// basic "..." strings, integers, floats, booleans, # comments. Enough for the
// grid/config files this project ships; not a general TOML implementation.

class ParseError : public std::runtime_error {
public:
    ParseError(int line, const std::string& why)
        : std::runtime_error("toml parse error at line " + std::to_string(line) + ": " + why),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

struct Value {
    enum class Kind { String, Integer, Float, Boolean, Array };

    Kind kind = Kind::String;
    std::string str;
    std::int64_t integer = 0;
    double number = 0.0;
    bool boolean = false;
    std::vector<Value> items;

    const std::string& as_string() const;
    std::int64_t as_int() const;
    double as_double() const;  // accepts integers too
    bool as_bool() const;
    const std::vector<Value>& as_array() const;

    std::vector<std::string> as_string_array() const;
    std::vector<double> as_double_array() const;
};

struct Table {
    std::map<std::string, Value> values;

    bool has(const std::string& key) const { return values.count(key) != 0; }
    const Value& at(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
};

struct Document {
    Table root;                                          // keys before any header
    std::map<std::string, Table> tables;                 // [name]
    std::map<std::string, std::vector<Table>> table_arrays;  // [[name]]

    bool has_table(const std::string& name) const { return tables.count(name) != 0; }
    const Table& table(const std::string& name) const;
    const std::vector<Table>& array(const std::string& name) const;
};

Document parse(const std::string& text);
Document parse_file(const std::string& path);

// formatting helpers for writers that emit this subset
std::string quote(const std::string& raw);

}  // namespace ocean::minitoml
