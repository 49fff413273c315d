#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace mlirl::toml {

/// Minimal TOML subset used by the experiment config format: [section]
/// headers, `key = value` lines with string/integer/float/boolean values,
/// and # comments. Keys are stored as "section.key".
class Table {
public:
    bool contains(const std::string& dotted_key) const;

    std::string get_string(const std::string& dotted_key) const;
    std::int64_t get_int(const std::string& dotted_key) const;
    double get_double(const std::string& dotted_key) const;
    bool get_bool(const std::string& dotted_key) const;

    std::string get_string_or(const std::string& dotted_key, std::string fallback) const;
    std::int64_t get_int_or(const std::string& dotted_key, std::int64_t fallback) const;
    double get_double_or(const std::string& dotted_key, double fallback) const;
    bool get_bool_or(const std::string& dotted_key, bool fallback) const;

    void set_string(const std::string& dotted_key, const std::string& value);
    void set_int(const std::string& dotted_key, std::int64_t value);
    void set_double(const std::string& dotted_key, double value);
    void set_bool(const std::string& dotted_key, bool value);

    /// Serialize, grouping keys under their [section] headers.
    std::string dump() const;

private:
    enum class Kind { kString, kInt, kDouble, kBool };
    struct Value {
        Kind kind;
        std::string text;  // canonical text form
    };
    const Value& at(const std::string& key) const;
    std::map<std::string, Value> values_;
};

Table parse(const std::string& text);
Table parse_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const Table& table);

}  // namespace mlirl::toml
