#include "homogenize/toml_lite.hpp"

#include "homogenize/error.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace homog::toml {

namespace {

[[noreturn]] void type_error(std::string_view key, const char* want) {
    throw Error(ErrorKind::Config, "key '" + std::string(key) + "' must be " + want);
}

class Reader {
public:
    explicit Reader(std::string_view text) : s_(text) {}

    Document run() {
        Document doc;
        std::string table;
        while (true) {
            skip_blank_lines();
            if (eof()) break;
            if (peek() == '[') {
                ++pos_;
                skip_ws();
                table = key();
                skip_ws();
                expect(']');
                end_of_line();
                continue;
            }
            std::string k = key();
            skip_ws();
            expect('=');
            skip_ws();
            Value v = value();
            end_of_line();
            const std::string full = table.empty() ? k : table + "." + k;
            if (doc.contains(full)) fail("duplicate key '" + full + "'");
            doc.values().emplace(full, std::move(v));
        }
        return doc;
    }

private:
    bool eof() const { return pos_ >= s_.size(); }
    char peek() const { return eof() ? '\0' : s_[pos_]; }

    [[noreturn]] void fail(const std::string& msg) const {
        int line = 1;
        for (std::size_t i = 0; i < pos_ && i < s_.size(); ++i) line += s_[i] == '\n';
        throw Error(ErrorKind::Config, "line " + std::to_string(line) + ": " + msg);
    }

    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    void skip_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
    }

    void skip_comment() {
        if (peek() == '#') {
            while (!eof() && peek() != '\n') ++pos_;
        }
    }

    // Whitespace, comments and newlines (used inside arrays and between entries).
    void skip_blank_lines() {
        while (!eof()) {
            skip_ws();
            skip_comment();
            if (peek() == '\n' || peek() == '\r') {
                ++pos_;
                continue;
            }
            break;
        }
    }

    void end_of_line() {
        skip_ws();
        skip_comment();
        if (eof()) return;
        if (peek() == '\r') ++pos_;
        if (peek() != '\n') fail("unexpected content after value");
        ++pos_;
    }

    std::string key() {
        if (peek() == '"') return basic_string();
        std::string out;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' ||
                          peek() == '-' || peek() == '.')) {
            out += s_[pos_++];
        }
        if (out.empty()) fail("expected a key");
        return out;
    }

    std::string basic_string() {
        expect('"');
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            char c = s_[pos_++];
            if (c == '"') break;
            if (c == '\\') {
                if (eof()) fail("bad escape");
                char e = s_[pos_++];
                switch (e) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    default: fail(std::string("unsupported escape \\") + e);
                }
                continue;
            }
            out += c;
        }
        return out;
    }

    std::string literal_string() {
        expect('\'');
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            char c = s_[pos_++];
            if (c == '\'') break;
            out += c;
        }
        return out;
    }

    Value value() {
        const char c = peek();
        if (c == '"') return Value{basic_string()};
        if (c == '\'') return Value{literal_string()};
        if (c == '[') {
            ++pos_;
            Value::Array arr;
            while (true) {
                skip_blank_lines();
                if (peek() == ']') {
                    ++pos_;
                    break;
                }
                arr.push_back(value());
                skip_blank_lines();
                if (peek() == ',') {
                    ++pos_;
                    continue;
                }
                skip_blank_lines();
                expect(']');
                break;
            }
            return Value{std::move(arr)};
        }
        if (s_.compare(pos_, 4, "true") == 0) {
            pos_ += 4;
            return Value{true};
        }
        if (s_.compare(pos_, 5, "false") == 0) {
            pos_ += 5;
            return Value{false};
        }
        const std::size_t start = pos_;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' ||
                          peek() == '-' || peek() == '.' || peek() == '_')) {
            ++pos_;
        }
        std::string tok;
        for (char ch : s_.substr(start, pos_ - start)) {
            if (ch != '_') tok += ch;
        }
        if (tok.empty()) fail("expected a value");
        const bool is_float = tok.find_first_of(".eEn") != std::string::npos;  // n: inf/nan
        if (!is_float) {
            std::int64_t iv = 0;
            const char* b = tok.data() + (tok[0] == '+' ? 1 : 0);
            auto res = std::from_chars(b, tok.data() + tok.size(), iv);
            if (res.ec == std::errc() && res.ptr == tok.data() + tok.size()) return Value{iv};
        }
        char* end = nullptr;
        const double dv = std::strtod(tok.c_str(), &end);
        if (end != tok.c_str() + tok.size()) fail("malformed value '" + tok + "'");
        return Value{dv};
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

}  // namespace

const std::string& Value::as_string(std::string_view key) const {
    if (!is_string()) type_error(key, "a string");
    return std::get<std::string>(data);
}

double Value::as_double(std::string_view key) const {
    if (auto* i = std::get_if<std::int64_t>(&data)) return static_cast<double>(*i);
    if (auto* d = std::get_if<double>(&data)) return *d;
    type_error(key, "a number");
}

std::int64_t Value::as_int(std::string_view key) const {
    if (auto* i = std::get_if<std::int64_t>(&data)) return *i;
    type_error(key, "an integer");
}

bool Value::as_bool(std::string_view key) const {
    if (auto* b = std::get_if<bool>(&data)) return *b;
    type_error(key, "a boolean");
}

const Value::Array& Value::as_array(std::string_view key) const {
    if (!is_array()) type_error(key, "an array");
    return std::get<Array>(data);
}

const Value& Document::at(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw Error(ErrorKind::Config, "missing key '" + key + "'");
    return it->second;
}

std::string Document::get_string(const std::string& key, std::optional<std::string> fallback) const {
    if (!contains(key) && fallback) return *fallback;
    return at(key).as_string(key);
}

double Document::get_double(const std::string& key, std::optional<double> fallback) const {
    if (!contains(key) && fallback) return *fallback;
    return at(key).as_double(key);
}

std::int64_t Document::get_int(const std::string& key, std::optional<std::int64_t> fallback) const {
    if (!contains(key) && fallback) return *fallback;
    return at(key).as_int(key);
}

bool Document::get_bool(const std::string& key, std::optional<bool> fallback) const {
    if (!contains(key) && fallback) return *fallback;
    return at(key).as_bool(key);
}

std::vector<double> Document::get_doubles(const std::string& key,
                                          std::optional<std::vector<double>> fallback) const {
    if (!contains(key) && fallback) return *fallback;
    std::vector<double> out;
    for (const auto& v : at(key).as_array(key)) out.push_back(v.as_double(key));
    return out;
}

std::vector<std::string> Document::get_strings(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& v : at(key).as_array(key)) out.push_back(v.as_string(key));
    return out;
}

Document parse(std::string_view text) { return Reader(text).run(); }

Document parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

}  // namespace homog::toml
