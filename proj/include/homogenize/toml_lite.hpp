#pragma once

// A small reader for the flat TOML subset used by problem and run config
// files: [table] headers, key = value lines, basic/literal strings, integers,
// floats, booleans and (nested, multi-line) arrays. Keys inside a table are
// stored as "table.key".

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace homog::toml {

struct Value {
    using Array = std::vector<Value>;
    std::variant<bool, std::int64_t, double, std::string, Array> data;

    bool is_string() const { return std::holds_alternative<std::string>(data); }
    bool is_array() const { return std::holds_alternative<Array>(data); }
    bool is_number() const {
        return std::holds_alternative<std::int64_t>(data) || std::holds_alternative<double>(data);
    }

    const std::string& as_string(std::string_view key) const;
    double as_double(std::string_view key) const;
    std::int64_t as_int(std::string_view key) const;
    bool as_bool(std::string_view key) const;
    const Array& as_array(std::string_view key) const;
};

class Document {
public:
    bool contains(const std::string& key) const { return values_.count(key) != 0; }
    const Value& at(const std::string& key) const;

    std::string get_string(const std::string& key, std::optional<std::string> fallback = {}) const;
    double get_double(const std::string& key, std::optional<double> fallback = {}) const;
    std::int64_t get_int(const std::string& key, std::optional<std::int64_t> fallback = {}) const;
    bool get_bool(const std::string& key, std::optional<bool> fallback = {}) const;
    std::vector<double> get_doubles(const std::string& key, std::optional<std::vector<double>> fallback = {}) const;
    std::vector<std::string> get_strings(const std::string& key) const;

    const std::map<std::string, Value>& values() const { return values_; }
    std::map<std::string, Value>& values() { return values_; }

private:
    std::map<std::string, Value> values_;
};

/// Parse TOML text; throws homog::Error(Config) with a line number on error.
Document parse(std::string_view text);
Document parse_file(const std::string& path);

}  // namespace homog::toml
