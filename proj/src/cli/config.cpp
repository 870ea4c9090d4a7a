#include "config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace sympcool::cli {

namespace {

int line_at(const std::string& text, std::size_t offset) {
    int line = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

std::string type_name(const json& v) {
    return v.is_number() ? "number" : v.is_string() ? "string" : v.is_boolean() ? "boolean"
         : v.is_array() ? "array" : v.is_object() ? "object" : "null";
}

}  // namespace

std::shared_ptr<ConfigSource> ConfigSource::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigFailure(path + ":1: cannot open configuration file");
    std::ostringstream ss;
    ss << in.rdbuf();
    auto src = std::make_shared<ConfigSource>();
    src->name_ = path;
    src->text_ = ss.str();
    try {
        src->root_ = json::parse(src->text_);
    } catch (const json::parse_error& e) {
        throw ConfigFailure(path + ":" + std::to_string(line_at(src->text_, e.byte)) +
                            ": malformed JSON (" + e.what() + ")");
    }
    if (!src->root_.is_object())
        throw ConfigFailure(path + ":1: configuration must be a JSON object");
    return src;
}

std::shared_ptr<ConfigSource> ConfigSource::empty() {
    auto src = std::make_shared<ConfigSource>();
    src->name_ = "<defaults>";
    return src;
}

std::shared_ptr<ConfigSource> ConfigSource::from_json(json root, std::string name) {
    auto src = std::make_shared<ConfigSource>();
    src->name_ = std::move(name);
    src->text_ = root.dump(2);
    src->root_ = std::move(root);
    return src;
}

void ConfigSource::override_value(const std::string& key, json value, const std::string& flag) {
    root_[key] = std::move(value);
    flags_[key] = flag;
}

std::string ConfigSource::locate(const std::string& key) const {
    if (auto it = flags_.find(key); it != flags_.end()) return it->second;
    const std::string quoted = "\"" + key + "\"";
    std::size_t pos = 0;
    while ((pos = text_.find(quoted, pos)) != std::string::npos) {
        std::size_t after = text_.find_first_not_of(" \t\r\n", pos + quoted.size());
        if (after != std::string::npos && text_[after] == ':')
            return name_ + ":" + std::to_string(line_at(text_, pos));
        pos += quoted.size();
    }
    return name_ + ":1";
}

Reader::Reader(std::shared_ptr<const ConfigSource> src, const json* node, json* canon,
               std::string path)
    : src_(std::move(src)), node_(node), canon_(canon), path_(std::move(path)) {}

const json* Reader::find(const std::string& key) const {
    if (node_ == nullptr || !node_->is_object()) return nullptr;
    auto it = node_->find(key);
    return it == node_->end() ? nullptr : &*it;
}

bool Reader::has(const std::string& key) const { return find(key) != nullptr; }

void Reader::record(const std::string& key, json value) { (*canon_)[key] = std::move(value); }

void Reader::fail(const std::string& key, const std::string& message) const {
    throw ConfigFailure(src_->locate(key) + ": " + path_ + key + ": " + message);
}

std::optional<double> Reader::optional_number(const std::string& key) {
    const json* v = find(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_number()) fail(key, "expected a number, got " + type_name(*v));
    const double x = v->get<double>();
    if (!std::isfinite(x)) fail(key, "value must be finite");
    record(key, x);
    return x;
}

double Reader::number(const std::string& key, double fallback) {
    auto v = optional_number(key);
    if (!v) record(key, fallback);
    return v.value_or(fallback);
}

double Reader::number(const std::string& key) {
    auto v = optional_number(key);
    if (!v) fail(key, "required key is missing");
    return *v;
}

std::int64_t Reader::integer(const std::string& key, std::int64_t fallback) {
    const json* v = find(key);
    if (v == nullptr) {
        record(key, fallback);
        return fallback;
    }
    if (!v->is_number_integer()) fail(key, "expected an integer, got " + type_name(*v));
    const auto x = v->get<std::int64_t>();
    record(key, x);
    return x;
}

bool Reader::boolean(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (v == nullptr) {
        record(key, fallback);
        return fallback;
    }
    if (!v->is_boolean()) fail(key, "expected true or false, got " + type_name(*v));
    record(key, v->get<bool>());
    return v->get<bool>();
}

std::optional<std::string> Reader::optional_text(const std::string& key) {
    const json* v = find(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_string()) fail(key, "expected a string, got " + type_name(*v));
    record(key, v->get<std::string>());
    return v->get<std::string>();
}

std::string Reader::text(const std::string& key, const std::string& fallback) {
    auto v = optional_text(key);
    if (!v) record(key, fallback);
    return v.value_or(fallback);
}

std::optional<std::vector<double>> Reader::optional_numbers(const std::string& key) {
    const json* v = find(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_array()) fail(key, "expected an array of numbers, got " + type_name(*v));
    std::vector<double> out;
    for (const auto& e : *v) {
        if (!e.is_number()) fail(key, "expected an array of numbers");
        out.push_back(e.get<double>());
        if (!std::isfinite(out.back())) fail(key, "values must be finite");
    }
    record(key, out);
    return out;
}

std::vector<double> Reader::numbers(const std::string& key) {
    auto v = optional_numbers(key);
    if (!v) fail(key, "required key is missing");
    return *v;
}

std::vector<double> Reader::numbers(const std::string& key, std::vector<double> fallback) {
    auto v = optional_numbers(key);
    if (!v) record(key, fallback);
    return v.value_or(std::move(fallback));
}

Reader Reader::object(const std::string& key) {
    const json* v = find(key);
    if (v != nullptr && !v->is_object()) fail(key, "expected an object, got " + type_name(*v));
    json& slot = (*canon_)[key];
    if (!slot.is_object()) slot = json::object();
    return Reader(src_, v, &slot, path_ + key + ".");
}

std::vector<Reader> Reader::objects(const std::string& key) {
    const json* v = find(key);
    std::vector<Reader> out;
    if (v == nullptr) return out;
    if (!v->is_array()) fail(key, "expected an array of objects, got " + type_name(*v));
    json& slot = (*canon_)[key];
    slot = json::array();
    for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_object()) fail(key, "expected an array of objects");
        slot.push_back(json::object());
    }
    for (std::size_t i = 0; i < v->size(); ++i)
        out.emplace_back(src_, &(*v)[i], &slot[i], path_ + key + "[" + std::to_string(i) + "].");
    return out;
}

namespace {

void compare(const ConfigSource& src, const json& given, const json& canon,
             const std::string& path) {
    if (given.is_object()) {
        for (auto it = given.begin(); it != given.end(); ++it) {
            if (!canon.is_object() || !canon.contains(it.key()))
                throw ConfigFailure(src.locate(it.key()) + ": unknown key '" + path + it.key() +
                                    "'");
            compare(src, it.value(), canon.at(it.key()), path + it.key() + ".");
        }
    } else if (given.is_array() && canon.is_array()) {
        for (std::size_t i = 0; i < given.size() && i < canon.size(); ++i)
            compare(src, given[i], canon[i], path);
    }
}

}  // namespace

void reject_unknown(const ConfigSource& src, const json& canon) {
    compare(src, src.root(), canon, "");
}

}  // namespace sympcool::cli
