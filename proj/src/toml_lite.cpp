#include "mllmsent/toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <string>
#include <vector>

#include "mllmsent/error.hpp"

namespace mllmsent::toml {

namespace {

class Parser {
public:
    explicit Parser(std::string_view text) : s_(text) {}

    nlohmann::json document() {
        nlohmann::json root = nlohmann::json::object();
        nlohmann::json* table = &root;
        while (true) {
            skip_blank_lines();
            if (eof()) break;
            if (peek() == '[') {
                table = header(root);
            } else {
                key_value(*table);
            }
            end_of_line();
        }
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("config line " + std::to_string(line_) + ": " + what);
    }

    bool eof() const { return pos_ >= s_.size(); }
    char peek() const { return eof() ? '\0' : s_[pos_]; }
    char get() {
        char c = s_[pos_++];
        if (c == '\n') ++line_;
        return c;
    }

    void skip_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
    }
    void skip_comment() {
        if (peek() == '#') {
            while (!eof() && peek() != '\n') ++pos_;
        }
    }
    void skip_blank_lines() {
        while (!eof()) {
            skip_ws();
            skip_comment();
            if (peek() == '\r' || peek() == '\n') {
                get();
            } else {
                break;
            }
        }
    }
    // inside arrays: whitespace, newlines and comments are insignificant
    void skip_all() {
        while (!eof()) {
            skip_ws();
            skip_comment();
            if (peek() == '\r' || peek() == '\n') {
                get();
            } else {
                break;
            }
        }
    }
    void end_of_line() {
        skip_ws();
        skip_comment();
        if (peek() == '\r') get();
        if (eof()) return;
        if (peek() != '\n') fail(std::string("unexpected '") + peek() + "'");
        get();
    }
    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        get();
    }

    std::vector<std::string> key() {
        std::vector<std::string> parts;
        while (true) {
            skip_ws();
            if (peek() == '"') {
                parts.push_back(basic_string());
            } else if (peek() == '\'') {
                parts.push_back(literal_string());
            } else {
                std::string part;
                while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) ||
                                  peek() == '_' || peek() == '-')) {
                    part += get();
                }
                if (part.empty()) fail("expected a key");
                parts.push_back(std::move(part));
            }
            skip_ws();
            if (peek() != '.') break;
            get();
        }
        return parts;
    }

    nlohmann::json* descend(nlohmann::json& node, const std::string& part) {
        auto& child = node[part];
        if (child.is_null()) child = nlohmann::json::object();
        if (child.is_array()) {
            if (child.empty() || !child.back().is_object()) fail("'" + part + "' is not a table");
            return &child.back();
        }
        if (!child.is_object()) fail("'" + part + "' is not a table");
        return &child;
    }

    nlohmann::json* header(nlohmann::json& root) {
        get();
        bool array = peek() == '[';
        if (array) get();
        auto parts = key();
        expect(']');
        if (array) expect(']');

        nlohmann::json* node = &root;
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = descend(*node, parts[i]);
        if (!array) return descend(*node, parts.back());

        auto& arr = (*node)[parts.back()];
        if (arr.is_null()) arr = nlohmann::json::array();
        if (!arr.is_array()) fail("'" + parts.back() + "' is not an array of tables");
        arr.push_back(nlohmann::json::object());
        return &arr.back();
    }

    void key_value(nlohmann::json& table) {
        auto parts = key();
        skip_ws();
        expect('=');
        skip_ws();
        auto v = value();
        nlohmann::json* node = &table;
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = descend(*node, parts[i]);
        if (node->contains(parts.back())) fail("duplicate key '" + parts.back() + "'");
        (*node)[parts.back()] = std::move(v);
    }

    nlohmann::json value() {
        char c = peek();
        if (c == '"') return basic_string();
        if (c == '\'') return literal_string();
        if (c == '[') return array();
        if (c == '{') return inline_table();
        if (s_.substr(pos_).starts_with("true")) {
            pos_ += 4;
            return true;
        }
        if (s_.substr(pos_).starts_with("false")) {
            pos_ += 5;
            return false;
        }
        return number();
    }

    std::string basic_string() {
        expect('"');
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            char c = get();
            if (c == '"') break;
            if (c != '\\') {
                out += c;
                continue;
            }
            if (eof()) fail("unterminated escape");
            char e = get();
            switch (e) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case 'r': out += '\r'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                case 'u': {
                    if (pos_ + 4 > s_.size()) fail("short \\u escape");
                    unsigned cp = 0;
                    auto hex = s_.substr(pos_, 4);
                    auto [p, ec] = std::from_chars(hex.data(), hex.data() + 4, cp, 16);
                    if (ec != std::errc{} || p != hex.data() + 4) fail("bad \\u escape");
                    pos_ += 4;
                    if (cp < 0x80) {
                        out += static_cast<char>(cp);
                    } else if (cp < 0x800) {
                        out += static_cast<char>(0xC0 | (cp >> 6));
                        out += static_cast<char>(0x80 | (cp & 0x3F));
                    } else {
                        out += static_cast<char>(0xE0 | (cp >> 12));
                        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
                        out += static_cast<char>(0x80 | (cp & 0x3F));
                    }
                    break;
                }
                default: fail(std::string("unknown escape \\") + e);
            }
        }
        return out;
    }

    std::string literal_string() {
        expect('\'');
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            char c = get();
            if (c == '\'') break;
            out += c;
        }
        return out;
    }

    nlohmann::json array() {
        expect('[');
        nlohmann::json out = nlohmann::json::array();
        while (true) {
            skip_all();
            if (peek() == ']') {
                get();
                return out;
            }
            out.push_back(value());
            skip_all();
            if (peek() == ',') {
                get();
                continue;
            }
            skip_all();
            expect(']');
            return out;
        }
    }

    nlohmann::json inline_table() {
        expect('{');
        nlohmann::json out = nlohmann::json::object();
        skip_ws();
        if (peek() == '}') {
            get();
            return out;
        }
        while (true) {
            key_value(out);
            skip_ws();
            if (peek() == ',') {
                get();
                continue;
            }
            expect('}');
            return out;
        }
    }

    nlohmann::json number() {
        std::string text;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' ||
                          peek() == '-' || peek() == '.' || peek() == '_')) {
            char c = get();
            if (c != '_') text += c;
        }
        if (text.empty()) fail("expected a value");
        const char* b = text.data();
        const char* e = b + text.size();
        if (*b == '+') ++b;
        bool is_float = text.find_first_of(".eE") != std::string::npos && text.find("0x") == std::string::npos;
        if (text == "inf" || text == "+inf" || text == "-inf" || text == "nan") is_float = true;
        if (!is_float) {
            long long v = 0;
            auto [p, ec] = std::from_chars(b, e, v);
            if (ec == std::errc{} && p == e) return v;
            fail("invalid value '" + text + "'");
        }
        double d = 0.0;
        auto [p, ec] = std::from_chars(b, e, d);
        if (ec != std::errc{} || p != e) fail("invalid number '" + text + "'");
        return d;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
};

}  // namespace

nlohmann::json parse(std::string_view text) { return Parser(text).document(); }

}  // namespace mllmsent::toml
