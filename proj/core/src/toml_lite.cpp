#include "mlirl/toml_lite.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "mlirl/errors.hpp"
#include "mlirl/io.hpp"

namespace mlirl::toml {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

bool valid_key(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
    return true;
}

}  // namespace

bool Table::contains(const std::string& key) const { return values_.count(key) > 0; }

const Table::Value& Table::at(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("config: missing key \"" + key + "\"");
    return it->second;
}

std::string Table::get_string(const std::string& key) const {
    const Value& v = at(key);
    if (v.kind != Kind::kString)
        throw ConfigError("config: key \"" + key + "\" is not a string");
    return v.text;
}

std::int64_t Table::get_int(const std::string& key) const {
    const Value& v = at(key);
    if (v.kind != Kind::kInt)
        throw ConfigError("config: key \"" + key + "\" is not an integer");
    return std::stoll(v.text);
}

double Table::get_double(const std::string& key) const {
    const Value& v = at(key);
    if (v.kind != Kind::kDouble && v.kind != Kind::kInt)
        throw ConfigError("config: key \"" + key + "\" is not a number");
    return std::stod(v.text);
}

bool Table::get_bool(const std::string& key) const {
    const Value& v = at(key);
    if (v.kind != Kind::kBool)
        throw ConfigError("config: key \"" + key + "\" is not a boolean");
    return v.text == "true";
}

std::string Table::get_string_or(const std::string& key, std::string fallback) const {
    return contains(key) ? get_string(key) : std::move(fallback);
}
std::int64_t Table::get_int_or(const std::string& key, std::int64_t fallback) const {
    return contains(key) ? get_int(key) : fallback;
}
double Table::get_double_or(const std::string& key, double fallback) const {
    return contains(key) ? get_double(key) : fallback;
}
bool Table::get_bool_or(const std::string& key, bool fallback) const {
    return contains(key) ? get_bool(key) : fallback;
}

void Table::set_string(const std::string& key, const std::string& value) {
    values_[key] = Value{Kind::kString, value};
}
void Table::set_int(const std::string& key, std::int64_t value) {
    values_[key] = Value{Kind::kInt, std::to_string(value)};
}
void Table::set_double(const std::string& key, double value) {
    values_[key] = Value{Kind::kDouble, format_double(value)};
}
void Table::set_bool(const std::string& key, bool value) {
    values_[key] = Value{Kind::kBool, value ? "true" : "false"};
}

std::string Table::dump() const {
    // Top-level keys must precede every [section] header; the map's
    // lexicographic order then groups the remaining keys by section.
    std::ostringstream out;
    auto emit = [&out](const std::string& name, const Value& value) {
        out << name << " = ";
        switch (value.kind) {
            case Kind::kString: out << '"' << value.text << '"'; break;
            case Kind::kDouble:
                out << value.text;
                if (value.text.find('.') == std::string::npos &&
                    value.text.find('e') == std::string::npos &&
                    value.text.find("inf") == std::string::npos &&
                    value.text.find("nan") == std::string::npos)
                    out << ".0";
                break;
            default: out << value.text; break;
        }
        out << '\n';
    };

    for (const auto& [key, value] : values_)
        if (key.rfind('.') == std::string::npos) emit(key, value);

    std::string section;
    for (const auto& [key, value] : values_) {
        const auto dot = key.rfind('.');
        if (dot == std::string::npos) continue;
        const std::string key_section = key.substr(0, dot);
        if (key_section != section) {
            out << "\n[" << key_section << "]\n";
            section = key_section;
        }
        emit(key.substr(dot + 1), value);
    }
    return out.str();
}

Table parse(const std::string& text) {
    Table table;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find('#');
        // A # inside a quoted string would be ripped out here; the subset
        // this reader supports never quotes #.
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!valid_key(section))
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": invalid section name");
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string raw = trim(line.substr(eq + 1));
        if (!valid_key(key))
            throw ConfigError("config line " + std::to_string(line_no) + ": invalid key");
        if (raw.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": missing value");

        const std::string dotted = section.empty() ? key : section + "." + key;
        if (raw.front() == '"') {
            if (raw.size() < 2 || raw.back() != '"')
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": unterminated string");
            table.set_string(dotted, raw.substr(1, raw.size() - 2));
        } else if (raw == "true" || raw == "false") {
            table.set_bool(dotted, raw == "true");
        } else {
            std::int64_t int_value = 0;
            auto int_result =
                std::from_chars(raw.data(), raw.data() + raw.size(), int_value);
            if (int_result.ec == std::errc() && int_result.ptr == raw.data() + raw.size()) {
                table.set_int(dotted, int_value);
                continue;
            }
            try {
                size_t consumed = 0;
                const double value = std::stod(raw, &consumed);
                if (consumed != raw.size()) throw std::invalid_argument(raw);
                table.set_double(dotted, value);
            } catch (const std::exception&) {
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": cannot parse value \"" + raw + "\"");
            }
        }
    }
    return table;
}

Table parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

void write_file(const std::filesystem::path& path, const Table& table) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << table.dump();
    if (!out) throw ConfigError("failed writing " + path.string());
}

}  // namespace mlirl::toml
