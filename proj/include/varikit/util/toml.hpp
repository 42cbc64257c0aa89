#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace varikit {

// Small TOML-subset reader: [sections], bare keys, strings, integers,
// floats, booleans, flat arrays, # comments. Enough for the project's
// configuration files; not a general TOML implementation.
class TomlValue {
public:
    using Array = std::vector<TomlValue>;

    TomlValue() = default;
    explicit TomlValue(std::string v) : value_(std::move(v)) {}
    explicit TomlValue(int64_t v) : value_(v) {}
    explicit TomlValue(double v) : value_(v) {}
    explicit TomlValue(bool v) : value_(v) {}
    explicit TomlValue(Array v) : value_(std::move(v)) {}

    bool is_string() const { return std::holds_alternative<std::string>(value_); }
    bool is_int() const { return std::holds_alternative<int64_t>(value_); }
    bool is_float() const { return std::holds_alternative<double>(value_); }
    bool is_bool() const { return std::holds_alternative<bool>(value_); }
    bool is_array() const { return std::holds_alternative<Array>(value_); }

    const std::string& as_string() const;
    int64_t as_int() const;
    double as_float() const;  // accepts integers
    bool as_bool() const;
    const Array& as_array() const;

private:
    std::variant<std::monostate, std::string, int64_t, double, bool, Array> value_;
};

class TomlTable {
public:
    static TomlTable parse_file(const std::string& path);
    static TomlTable parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& section, const std::string& key) const;
    const TomlValue& get(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    int64_t get_int(const std::string& section, const std::string& key, int64_t fallback) const;
    int64_t get_int(const std::string& section, const std::string& key) const;
    double get_float(const std::string& section, const std::string& key, double fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::vector<double> get_float_array(const std::string& section, const std::string& key) const;
    std::vector<int64_t> get_int_array(const std::string& section, const std::string& key) const;
    std::vector<std::string> get_string_array(const std::string& section,
                                              const std::string& key) const;

    const std::map<std::string, std::map<std::string, TomlValue>>& sections() const {
        return sections_;
    }

private:
    std::map<std::string, std::map<std::string, TomlValue>> sections_;
    std::string origin_;
};

}  // namespace varikit
