#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

namespace fatigue {

/**
 * Value of a config entry. The accepted syntax is the TOML subset used by
 * scenario files: [tables], key = value, numbers, booleans, basic strings and
 * (possibly multi-line) arrays of those.
 */
struct ConfigValue {
    enum class Kind { number, boolean, string, array };

    Kind kind = Kind::number;
    double number = 0.0;
    bool boolean = false;
    std::string text;
    std::vector<ConfigValue> items;
    int line = 0;

    [[nodiscard]] nlohmann::json to_json() const;
};

class Config {
public:
    static Config parse(const std::string& source, const std::string& origin = "<config>");
    static Config load(const std::filesystem::path& path);

    [[nodiscard]] bool has(const std::string& section, const std::string& key) const;
    [[nodiscard]] bool has_section(const std::string& section) const;

    [[nodiscard]] double number(const std::string& section, const std::string& key) const;
    [[nodiscard]] double number_or(const std::string& section, const std::string& key, double fallback) const;
    [[nodiscard]] int integer(const std::string& section, const std::string& key) const;
    [[nodiscard]] int integer_or(const std::string& section, const std::string& key, int fallback) const;
    [[nodiscard]] bool boolean_or(const std::string& section, const std::string& key, bool fallback) const;
    [[nodiscard]] std::string string(const std::string& section, const std::string& key) const;
    [[nodiscard]] std::string string_or(const std::string& section, const std::string& key,
                                        const std::string& fallback) const;
    [[nodiscard]] std::vector<double> numbers(const std::string& section, const std::string& key) const;
    [[nodiscard]] std::vector<int> integers(const std::string& section, const std::string& key) const;

    /// Parse "section.key=value" (or "key=value" within `default_section`) and set it.
    void apply_override(const std::string& assignment, const std::string& default_section);

    /// Entries never read through the accessors, as "section.key".
    [[nodiscard]] std::vector<std::string> unused_keys() const;

    [[nodiscard]] nlohmann::json to_json() const;
    [[nodiscard]] const std::string& origin() const { return origin_; }
    [[nodiscard]] const std::string& source() const { return source_; }
    [[nodiscard]] std::filesystem::path base_directory() const { return base_dir_; }

private:
    const ConfigValue* find(const std::string& section, const std::string& key) const;
    const ConfigValue& require(const std::string& section, const std::string& key) const;
    [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& what) const;

    std::map<std::string, std::map<std::string, ConfigValue>> tables_;
    std::string origin_;
    std::string source_;
    std::filesystem::path base_dir_;
    mutable std::set<std::string> used_;
};

}  // namespace fatigue
