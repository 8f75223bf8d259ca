#include "fatigue/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fatigue/errors.hpp"

namespace fatigue {

namespace {

class Parser {
public:
    Parser(const std::string& text, const std::string& origin) : s_(text), origin_(origin) {}

    std::map<std::string, std::map<std::string, ConfigValue>> run() {
        std::map<std::string, std::map<std::string, ConfigValue>> tables;
        std::string section;
        tables[section];
        while (true) {
            skip_blank_lines();
            if (eof()) break;
            if (peek() == '[') {
                ++pos_;
                skip_inline_space();
                section = bare_key(true);
                skip_inline_space();
                expect(']');
                if (tables.count(section) && !tables[section].empty()) error("table [" + section + "] defined twice");
                tables[section];
            } else {
                const std::string key = bare_key(false);
                skip_inline_space();
                expect('=');
                skip_inline_space();
                ConfigValue v = value();
                auto& table = tables[section];
                if (table.count(key)) error("duplicate key '" + key + "'");
                table[key] = std::move(v);
            }
            end_of_line();
        }
        return tables;
    }

private:
    [[noreturn]] void error(const std::string& what) const {
        throw ValidationError(origin_ + ":" + std::to_string(line_) + ": " + what);
    }

    bool eof() const { return pos_ >= s_.size(); }
    char peek() const { return eof() ? '\0' : s_[pos_]; }

    void skip_inline_space() {
        while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++pos_;
    }

    void skip_comment() {
        if (peek() == '#') {
            while (!eof() && peek() != '\n') ++pos_;
        }
    }

    void skip_blank_lines() {
        while (!eof()) {
            skip_inline_space();
            skip_comment();
            if (peek() == '\n') {
                ++pos_;
                ++line_;
            } else {
                break;
            }
        }
    }

    // Whitespace, comments and newlines inside arrays.
    void skip_array_space() {
        while (!eof()) {
            skip_inline_space();
            skip_comment();
            if (peek() == '\n') {
                ++pos_;
                ++line_;
            } else {
                break;
            }
        }
    }

    void end_of_line() {
        skip_inline_space();
        skip_comment();
        if (eof()) return;
        if (peek() != '\n') error(std::string("unexpected character '") + peek() + "' after value");
        ++pos_;
        ++line_;
    }

    void expect(char c) {
        if (peek() != c) error(std::string("expected '") + c + "'");
        ++pos_;
    }

    std::string bare_key(bool dotted) {
        const std::size_t start = pos_;
        while (!eof()) {
            const char c = peek();
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || (dotted && c == '.')) {
                ++pos_;
            } else {
                break;
            }
        }
        if (pos_ == start) error("expected a key");
        return s_.substr(start, pos_ - start);
    }

    ConfigValue value() {
        ConfigValue v;
        v.line = line_;
        const char c = peek();
        if (c == '"') {
            v.kind = ConfigValue::Kind::string;
            v.text = basic_string();
        } else if (c == '[') {
            ++pos_;
            v.kind = ConfigValue::Kind::array;
            skip_array_space();
            while (peek() != ']') {
                if (eof()) error("unterminated array");
                v.items.push_back(value());
                skip_array_space();
                if (peek() == ',') {
                    ++pos_;
                    skip_array_space();
                } else if (peek() != ']') {
                    error("expected ',' or ']' in array");
                }
            }
            ++pos_;
        } else if (s_.compare(pos_, 4, "true") == 0) {
            v.kind = ConfigValue::Kind::boolean;
            v.boolean = true;
            pos_ += 4;
        } else if (s_.compare(pos_, 5, "false") == 0) {
            v.kind = ConfigValue::Kind::boolean;
            pos_ += 5;
        } else {
            v.kind = ConfigValue::Kind::number;
            v.number = number();
        }
        return v;
    }

    std::string basic_string() {
        expect('"');
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') error("unterminated string");
            const char c = s_[pos_++];
            if (c == '"') break;
            if (c == '\\') {
                if (eof()) error("unterminated escape");
                const char e = s_[pos_++];
                switch (e) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    default: error(std::string("unsupported escape \\") + e);
                }
            } else {
                out += c;
            }
        }
        return out;
    }

    double number() {
        const std::size_t start = pos_;
        while (!eof()) {
            const char c = peek();
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' || c == '_') {
                ++pos_;
            } else {
                break;
            }
        }
        std::string t = s_.substr(start, pos_ - start);
        if (t.empty()) error("expected a value");
        std::string digits;
        for (char c : t) {
            if (c != '_') digits += c;
        }
        if (digits == "inf" || digits == "+inf") return HUGE_VAL;
        if (digits == "-inf") return -HUGE_VAL;
        const char* b = digits.data();
        if (*b == '+') ++b;
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(b, digits.data() + digits.size(), v);
        if (ec != std::errc() || ptr != digits.data() + digits.size()) error("invalid number '" + t + "'");
        return v;
    }

    const std::string& s_;
    std::string origin_;
    std::size_t pos_ = 0;
    int line_ = 1;
};

std::string qualified(const std::string& section, const std::string& key) {
    return section.empty() ? key : section + "." + key;
}

}  // namespace

nlohmann::json ConfigValue::to_json() const {
    switch (kind) {
        case Kind::number:
            return number;
        case Kind::boolean:
            return boolean;
        case Kind::string:
            return text;
        case Kind::array: {
            nlohmann::json a = nlohmann::json::array();
            for (const auto& i : items) a.push_back(i.to_json());
            return a;
        }
    }
    return nullptr;
}

Config Config::parse(const std::string& source, const std::string& origin) {
    Config c;
    c.origin_ = origin;
    c.source_ = source;
    c.tables_ = Parser(c.source_, origin).run();
    return c;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    Config c = parse(ss.str(), path.string());
    c.base_dir_ = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    return c;
}

const ConfigValue* Config::find(const std::string& section, const std::string& key) const {
    const auto t = tables_.find(section);
    if (t == tables_.end()) return nullptr;
    const auto v = t->second.find(key);
    if (v == t->second.end()) return nullptr;
    used_.insert(qualified(section, key));
    return &v->second;
}

void Config::fail(const std::string& section, const std::string& key, const std::string& what) const {
    const auto t = tables_.find(section);
    int line = 0;
    if (t != tables_.end()) {
        const auto v = t->second.find(key);
        if (v != t->second.end()) line = v->second.line;
    }
    std::string where = origin_;
    if (line > 0) where += ":" + std::to_string(line);
    throw ValidationError(where + ": [" + section + "] " + key + ": " + what);
}

const ConfigValue& Config::require(const std::string& section, const std::string& key) const {
    const ConfigValue* v = find(section, key);
    if (!v) fail(section, key, "missing required key");
    return *v;
}

bool Config::has(const std::string& section, const std::string& key) const {
    const auto t = tables_.find(section);
    return t != tables_.end() && t->second.count(key) > 0;
}

bool Config::has_section(const std::string& section) const { return tables_.count(section) > 0; }

double Config::number(const std::string& section, const std::string& key) const {
    const ConfigValue& v = require(section, key);
    if (v.kind != ConfigValue::Kind::number) fail(section, key, "expected a number");
    return v.number;
}

double Config::number_or(const std::string& section, const std::string& key, double fallback) const {
    return has(section, key) ? number(section, key) : fallback;
}

int Config::integer(const std::string& section, const std::string& key) const {
    const double v = number(section, key);
    if (v != std::floor(v) || std::abs(v) > 2e9) fail(section, key, "expected an integer");
    return static_cast<int>(v);
}

int Config::integer_or(const std::string& section, const std::string& key, int fallback) const {
    return has(section, key) ? integer(section, key) : fallback;
}

bool Config::boolean_or(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const ConfigValue& v = require(section, key);
    if (v.kind != ConfigValue::Kind::boolean) fail(section, key, "expected true or false");
    return v.boolean;
}

std::string Config::string(const std::string& section, const std::string& key) const {
    const ConfigValue& v = require(section, key);
    if (v.kind != ConfigValue::Kind::string) fail(section, key, "expected a string");
    return v.text;
}

std::string Config::string_or(const std::string& section, const std::string& key,
                              const std::string& fallback) const {
    return has(section, key) ? string(section, key) : fallback;
}

std::vector<double> Config::numbers(const std::string& section, const std::string& key) const {
    const ConfigValue& v = require(section, key);
    if (v.kind == ConfigValue::Kind::number) return {v.number};
    if (v.kind != ConfigValue::Kind::array) fail(section, key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& i : v.items) {
        if (i.kind != ConfigValue::Kind::number) fail(section, key, "expected an array of numbers");
        out.push_back(i.number);
    }
    return out;
}

std::vector<int> Config::integers(const std::string& section, const std::string& key) const {
    std::vector<int> out;
    for (double d : numbers(section, key)) {
        if (d != std::floor(d) || std::abs(d) > 2e9) fail(section, key, "expected integers");
        out.push_back(static_cast<int>(d));
    }
    return out;
}

void Config::apply_override(const std::string& assignment, const std::string& default_section) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ValidationError("override '" + assignment + "' is not of the form key=value");
    }
    std::string lhs = assignment.substr(0, eq);
    std::string section = default_section;
    const auto dot = lhs.rfind('.');
    if (dot != std::string::npos) {
        section = lhs.substr(0, dot);
        lhs = lhs.substr(dot + 1);
    }
    const Config tmp = parse("v = " + assignment.substr(eq + 1) + "\n", "override '" + assignment + "'");
    ConfigValue v = tmp.tables_.at("").at("v");
    v.line = 0;
    tables_[section][lhs] = std::move(v);
}

std::vector<std::string> Config::unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [section, table] : tables_) {
        for (const auto& [key, v] : table) {
            if (!used_.count(qualified(section, key))) out.push_back(qualified(section, key));
        }
    }
    return out;
}

nlohmann::json Config::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [section, table] : tables_) {
        if (table.empty()) continue;
        nlohmann::json t = nlohmann::json::object();
        for (const auto& [key, v] : table) t[key] = v.to_json();
        if (section.empty()) {
            for (auto& [k, v] : t.items()) j[k] = v;
        } else {
            j[section] = t;
        }
    }
    return j;
}

}  // namespace fatigue
