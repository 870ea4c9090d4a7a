#pragma once
// JSON configuration reading with unit-suffixed keys.
//
// A Reader hands out values key by key and records the value it actually used
// (defaults included) in a canonical document. reject_unknown() then compares
// the input against that document, so a misspelt key anywhere is an error.
// Errors carry `file:line:` of the offending key.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sympcool::cli {

using nlohmann::json;

/// A configuration problem; maps to exit code 2.
class ConfigFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigSource {
public:
    /// Parses `path`; a missing file or malformed JSON is a ConfigFailure.
    static std::shared_ptr<ConfigSource> load(const std::string& path);
    /// An empty configuration (every value takes its default).
    static std::shared_ptr<ConfigSource> empty();
    static std::shared_ptr<ConfigSource> from_json(json root, std::string name);

    /// Value given on the command line; it wins over the file.
    void override_value(const std::string& key, json value, const std::string& flag);

    [[nodiscard]] const json& root() const { return root_; }
    [[nodiscard]] std::string locate(const std::string& key) const;

private:
    std::string name_;
    std::string text_;
    json root_ = json::object();
    std::map<std::string, std::string> flags_;
};

class Reader {
public:
    Reader(std::shared_ptr<const ConfigSource> src, const json* node, json* canon,
           std::string path = {});

    double number(const std::string& key, double fallback);
    double number(const std::string& key);  ///< required
    std::optional<double> optional_number(const std::string& key);
    std::int64_t integer(const std::string& key, std::int64_t fallback);
    bool boolean(const std::string& key, bool fallback);
    std::string text(const std::string& key, const std::string& fallback);
    std::optional<std::string> optional_text(const std::string& key);
    std::vector<double> numbers(const std::string& key);
    std::vector<double> numbers(const std::string& key, std::vector<double> fallback);
    std::optional<std::vector<double>> optional_numbers(const std::string& key);
    [[nodiscard]] bool has(const std::string& key) const;

    /// Nested object; an absent key reads as an empty object.
    Reader object(const std::string& key);
    /// Array of objects; absent reads as empty.
    std::vector<Reader> objects(const std::string& key);

    [[noreturn]] void fail(const std::string& key, const std::string& message) const;

private:
    const json* find(const std::string& key) const;
    void record(const std::string& key, json value);

    std::shared_ptr<const ConfigSource> src_;
    const json* node_;
    json* canon_;
    std::string path_;
};

/// Throws ConfigFailure for the first key of `src` that has no counterpart in `canon`.
void reject_unknown(const ConfigSource& src, const json& canon);

}  // namespace sympcool::cli
