#include "varikit/util/toml.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace varikit {

namespace {

[[noreturn]] void fail(const std::string& origin, size_t line, const std::string& msg) {
    throw std::runtime_error(origin + ":" + std::to_string(line) + ": " + msg);
}

std::string_view trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Strips a trailing comment that is not inside a string literal.
std::string_view strip_comment(std::string_view s) {
    bool in_string = false;
    for (size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
        } else if (c == '"') {
            in_string = true;
        } else if (c == '#') {
            return s.substr(0, i);
        }
    }
    return s;
}

struct ValueParser {
    std::string_view text;
    size_t pos = 0;
    const std::string& origin;
    size_t line;

    void skip_ws() {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    }

    TomlValue parse_value() {
        skip_ws();
        if (pos >= text.size()) fail(origin, line, "expected a value");
        char c = text[pos];
        if (c == '"') return parse_string();
        if (c == '[') return parse_array();
        return parse_scalar();
    }

    TomlValue parse_string() {
        ++pos;  // opening quote
        std::string out;
        while (pos < text.size() && text[pos] != '"') {
            char c = text[pos++];
            if (c == '\\') {
                if (pos >= text.size()) fail(origin, line, "dangling escape in string");
                char esc = text[pos++];
                switch (esc) {
                    case 'n': out.push_back('\n'); break;
                    case 't': out.push_back('\t'); break;
                    case 'r': out.push_back('\r'); break;
                    case '"': out.push_back('"'); break;
                    case '\\': out.push_back('\\'); break;
                    default: fail(origin, line, std::string("unsupported escape \\") + esc);
                }
            } else {
                out.push_back(c);
            }
        }
        if (pos >= text.size()) fail(origin, line, "unterminated string");
        ++pos;  // closing quote
        return TomlValue(std::move(out));
    }

    TomlValue parse_array() {
        ++pos;  // '['
        TomlValue::Array items;
        skip_ws();
        if (pos < text.size() && text[pos] == ']') {
            ++pos;
            return TomlValue(std::move(items));
        }
        while (true) {
            items.push_back(parse_value());
            skip_ws();
            if (pos < text.size() && text[pos] == ',') {
                ++pos;
                skip_ws();
                if (pos < text.size() && text[pos] == ']') {  // trailing comma
                    ++pos;
                    return TomlValue(std::move(items));
                }
                continue;
            }
            if (pos < text.size() && text[pos] == ']') {
                ++pos;
                return TomlValue(std::move(items));
            }
            fail(origin, line, "expected ',' or ']' in array");
        }
    }

    TomlValue parse_scalar() {
        size_t start = pos;
        while (pos < text.size() && text[pos] != ',' && text[pos] != ']' && text[pos] != ' ' &&
               text[pos] != '\t') {
            ++pos;
        }
        std::string tok(text.substr(start, pos - start));
        if (tok == "true") return TomlValue(true);
        if (tok == "false") return TomlValue(false);

        bool looks_float = tok.find('.') != std::string::npos ||
                           tok.find('e') != std::string::npos ||
                           tok.find('E') != std::string::npos ||
                           tok == "inf" || tok == "nan";
        if (!looks_float) {
            int64_t iv = 0;
            auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), iv);
            if (ec == std::errc() && p == tok.data() + tok.size()) return TomlValue(iv);
        }
        try {
            size_t used = 0;
            double dv = std::stod(tok, &used);
            if (used == tok.size()) return TomlValue(dv);
        } catch (...) {
        }
        fail(origin, line, "cannot parse value: " + tok);
    }
};

}  // namespace

const std::string& TomlValue::as_string() const {
    if (!is_string()) throw std::runtime_error("TOML value is not a string");
    return std::get<std::string>(value_);
}
int64_t TomlValue::as_int() const {
    if (!is_int()) throw std::runtime_error("TOML value is not an integer");
    return std::get<int64_t>(value_);
}
double TomlValue::as_float() const {
    if (is_int()) return static_cast<double>(std::get<int64_t>(value_));
    if (!is_float()) throw std::runtime_error("TOML value is not a number");
    return std::get<double>(value_);
}
bool TomlValue::as_bool() const {
    if (!is_bool()) throw std::runtime_error("TOML value is not a boolean");
    return std::get<bool>(value_);
}
const TomlValue::Array& TomlValue::as_array() const {
    if (!is_array()) throw std::runtime_error("TOML value is not an array");
    return std::get<Array>(value_);
}

TomlTable TomlTable::parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
}

TomlTable TomlTable::parse_string(const std::string& text, const std::string& origin) {
    TomlTable table;
    table.origin_ = origin;
    std::string section;
    size_t line_no = 0;
    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view body = trim(strip_comment(raw));
        if (body.empty()) continue;
        if (body.front() == '[') {
            if (body.back() != ']') fail(origin, line_no, "unterminated section header");
            section = std::string(trim(body.substr(1, body.size() - 2)));
            if (section.empty()) fail(origin, line_no, "empty section name");
            table.sections_[section];
            continue;
        }
        size_t eq = std::string_view::npos;
        bool in_string = false;
        for (size_t i = 0; i < body.size(); ++i) {
            if (body[i] == '"') in_string = !in_string;
            if (body[i] == '=' && !in_string) {
                eq = i;
                break;
            }
        }
        if (eq == std::string_view::npos) fail(origin, line_no, "expected key = value");
        std::string key(trim(body.substr(0, eq)));
        if (key.empty()) fail(origin, line_no, "empty key");
        std::string_view rhs = trim(body.substr(eq + 1));
        if (rhs.empty()) fail(origin, line_no, "missing value for key " + key);
        ValueParser parser{rhs, 0, origin, line_no};
        TomlValue value = parser.parse_value();
        parser.skip_ws();
        if (parser.pos != rhs.size()) fail(origin, line_no, "trailing characters after value");
        table.sections_[section][key] = std::move(value);
    }
    return table;
}

bool TomlTable::has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
}

const TomlValue& TomlTable::get(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    if (s == sections_.end() || !s->second.count(key)) {
        throw std::runtime_error(origin_ + ": missing key [" + section + "] " + key);
    }
    return s->second.at(key);
}

std::string TomlTable::get_string(const std::string& section, const std::string& key) const {
    return get(section, key).as_string();
}
std::string TomlTable::get_string(const std::string& section, const std::string& key,
                                  const std::string& fallback) const {
    return has(section, key) ? get(section, key).as_string() : fallback;
}
int64_t TomlTable::get_int(const std::string& section, const std::string& key,
                           int64_t fallback) const {
    return has(section, key) ? get(section, key).as_int() : fallback;
}
int64_t TomlTable::get_int(const std::string& section, const std::string& key) const {
    return get(section, key).as_int();
}
double TomlTable::get_float(const std::string& section, const std::string& key,
                            double fallback) const {
    return has(section, key) ? get(section, key).as_float() : fallback;
}
bool TomlTable::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    return has(section, key) ? get(section, key).as_bool() : fallback;
}
std::vector<double> TomlTable::get_float_array(const std::string& section,
                                               const std::string& key) const {
    std::vector<double> out;
    for (const TomlValue& v : get(section, key).as_array()) out.push_back(v.as_float());
    return out;
}
std::vector<int64_t> TomlTable::get_int_array(const std::string& section,
                                              const std::string& key) const {
    std::vector<int64_t> out;
    for (const TomlValue& v : get(section, key).as_array()) out.push_back(v.as_int());
    return out;
}
std::vector<std::string> TomlTable::get_string_array(const std::string& section,
                                                     const std::string& key) const {
    std::vector<std::string> out;
    for (const TomlValue& v : get(section, key).as_array()) out.push_back(v.as_string());
    return out;
}

}  // namespace varikit
