#pragma once

// Small structured text format used for scenario and batch-matrix files.
//
//   document  = { statement }
//   statement = key value NEWLINE
//   value     = scalar | block | list
//   block     = "{" { statement } "}"
//   list      = "[" [ value { ("," | NEWLINE) value } ] "]"
//   scalar    = number | string | symbol | bool
//
// "#" starts a comment running to end of line. Keys and symbols are
// [A-Za-z_][A-Za-z0-9_-]*. Strings are double-quoted with \" \\ \n \t \r
// escapes. Duplicate keys within one block are rejected. The writer emits a
// canonical form: keys sorted, two-space indent, shortest round-trip float
// formatting, trailing newline.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cornersim::text {

struct ParseError : std::runtime_error {
    int line = 0;
    int column = 0;
    ParseError(int l, int c, const std::string& message)
        : std::runtime_error(std::to_string(l) + ":" + std::to_string(c) + ": " + message),
          line(l),
          column(c) {}
};

struct Value {
    enum class Kind { Int, Float, Bool, Symbol, String, List, Block };

    Kind kind = Kind::Int;
    std::int64_t int_value = 0;
    double float_value = 0.0;
    bool bool_value = false;
    std::string text;                                   // Symbol / String payload
    std::vector<Value> items;                           // List
    std::vector<std::pair<std::string, Value>> entries; // Block, insertion order
    int line = 0;
    int column = 0;

    static Value of_int(std::int64_t v) { Value x; x.kind = Kind::Int; x.int_value = v; return x; }
    static Value of_float(double v) { Value x; x.kind = Kind::Float; x.float_value = v; return x; }
    static Value of_bool(bool v) { Value x; x.kind = Kind::Bool; x.bool_value = v; return x; }
    static Value of_symbol(std::string s) { Value x; x.kind = Kind::Symbol; x.text = std::move(s); return x; }
    static Value of_string(std::string s) { Value x; x.kind = Kind::String; x.text = std::move(s); return x; }
    static Value list() { Value x; x.kind = Kind::List; return x; }
    static Value block() { Value x; x.kind = Kind::Block; return x; }

    bool is_number() const { return kind == Kind::Int || kind == Kind::Float; }
    double as_double() const {
        return kind == Kind::Int ? static_cast<double>(int_value) : float_value;
    }

    const Value* find(std::string_view key) const {
        for (const auto& [k, v] : entries) {
            if (k == key) return &v;
        }
        return nullptr;
    }
    Value& set(const std::string& key, Value v) {
        entries.emplace_back(key, std::move(v));
        return entries.back().second;
    }
};

// ---------------------------------------------------------------------------
// Lexing / parsing
// ---------------------------------------------------------------------------

namespace detail {

struct Cursor {
    std::string_view src;
    size_t pos = 0;
    int line = 1;
    int col = 1;

    bool eof() const { return pos >= src.size(); }
    char peek() const { return src[pos]; }
    char advance() {
        const char c = src[pos++];
        if (c == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
        return c;
    }
    [[noreturn]] void fail(const std::string& message) const { throw ParseError(line, col, message); }
};

inline bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
inline bool is_ident_char(char c) {
    return is_ident_start(c) || (c >= '0' && c <= '9') || c == '-';
}
inline bool is_number_start(char c) { return (c >= '0' && c <= '9') || c == '-' || c == '+'; }

// Skip spaces, tabs, carriage returns and comments. Newlines are significant.
inline void skip_inline_space(Cursor& cur) {
    while (!cur.eof()) {
        const char c = cur.peek();
        if (c == ' ' || c == '\t' || c == '\r') {
            cur.advance();
        } else if (c == '#') {
            while (!cur.eof() && cur.peek() != '\n') cur.advance();
        } else {
            break;
        }
    }
}

inline void skip_blank(Cursor& cur) {
    for (;;) {
        skip_inline_space(cur);
        if (!cur.eof() && cur.peek() == '\n') {
            cur.advance();
        } else {
            break;
        }
    }
}

inline std::string lex_ident(Cursor& cur) {
    std::string out;
    while (!cur.eof() && is_ident_char(cur.peek())) out.push_back(cur.advance());
    return out;
}

inline Value lex_number(Cursor& cur) {
    const int line = cur.line;
    const int col = cur.col;
    const size_t start = cur.pos;
    bool is_float = false;
    if (!cur.eof() && (cur.peek() == '-' || cur.peek() == '+')) cur.advance();
    while (!cur.eof()) {
        const char c = cur.peek();
        if (c >= '0' && c <= '9') {
            cur.advance();
        } else if (c == '.' || c == 'e' || c == 'E') {
            is_float = true;
            cur.advance();
            if (!cur.eof() && (cur.peek() == '-' || cur.peek() == '+')) cur.advance();
        } else {
            break;
        }
    }
    const std::string_view lexeme = cur.src.substr(start, cur.pos - start);
    Value v;
    if (!is_float) {
        std::int64_t out = 0;
        const auto [ptr, ec] = std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), out);
        if (ec == std::errc() && ptr == lexeme.data() + lexeme.size()) {
            v = Value::of_int(out);
            v.line = line;
            v.column = col;
            return v;
        }
        is_float = true;  // e.g. overflow; fall through to double
    }
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), out);
    if (ec != std::errc() || ptr != lexeme.data() + lexeme.size()) {
        throw ParseError(line, col, "malformed number '" + std::string(lexeme) + "'");
    }
    v = Value::of_float(out);
    v.line = line;
    v.column = col;
    return v;
}

inline Value lex_string(Cursor& cur) {
    const int line = cur.line;
    const int col = cur.col;
    cur.advance();  // opening quote
    std::string out;
    for (;;) {
        if (cur.eof()) throw ParseError(line, col, "unterminated string");
        const char c = cur.advance();
        if (c == '"') break;
        if (c == '\n') throw ParseError(line, col, "newline inside string");
        if (c == '\\') {
            if (cur.eof()) throw ParseError(cur.line, cur.col, "dangling escape");
            const char e = cur.advance();
            switch (e) {
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case 'r': out.push_back('\r'); break;
                default:
                    throw ParseError(cur.line, cur.col, std::string("unknown escape '\\") + e + "'");
            }
        } else if (static_cast<unsigned char>(c) < 0x20) {
            throw ParseError(cur.line, cur.col, "raw control character in string");
        } else {
            out.push_back(c);
        }
    }
    Value v = Value::of_string(std::move(out));
    v.line = line;
    v.column = col;
    return v;
}

inline Value parse_value(Cursor& cur, int depth);

inline Value parse_block_body(Cursor& cur, int depth, bool top_level) {
    Value block = Value::block();
    block.line = cur.line;
    block.column = cur.col;
    if (depth > 64) cur.fail("nesting too deep");
    for (;;) {
        skip_blank(cur);
        if (cur.eof()) {
            if (top_level) break;
            cur.fail("unterminated block; expected '}'");
        }
        if (cur.peek() == '}') {
            if (top_level) cur.fail("unexpected '}' at top level");
            cur.advance();
            break;
        }
        if (!is_ident_start(cur.peek())) {
            cur.fail(std::string("expected key, found '") + cur.peek() + "'");
        }
        const int key_line = cur.line;
        const int key_col = cur.col;
        std::string key = lex_ident(cur);
        if (block.find(key) != nullptr) {
            throw ParseError(key_line, key_col, "duplicate key '" + key + "'");
        }
        skip_inline_space(cur);
        if (cur.eof() || cur.peek() == '\n') cur.fail("key '" + key + "' has no value");
        Value val = parse_value(cur, depth + 1);
        skip_inline_space(cur);
        if (!cur.eof() && cur.peek() != '\n' && cur.peek() != '}') {
            cur.fail("unexpected trailing content after value of '" + key + "'");
        }
        block.entries.emplace_back(std::move(key), std::move(val));
    }
    return block;
}

inline Value parse_list(Cursor& cur, int depth) {
    Value list = Value::list();
    list.line = cur.line;
    list.column = cur.col;
    cur.advance();  // '['
    for (;;) {
        skip_blank(cur);
        if (cur.eof()) cur.fail("unterminated list; expected ']'");
        if (cur.peek() == ']') {
            cur.advance();
            break;
        }
        list.items.push_back(parse_value(cur, depth + 1));
        skip_blank(cur);
        if (!cur.eof() && cur.peek() == ',') cur.advance();
    }
    return list;
}

inline Value parse_value(Cursor& cur, int depth) {
    if (depth > 64) cur.fail("nesting too deep");
    skip_inline_space(cur);
    if (cur.eof()) cur.fail("expected a value");
    const char c = cur.peek();
    const int line = cur.line;
    const int col = cur.col;
    if (c == '{') {
        cur.advance();
        Value v = parse_block_body(cur, depth + 1, false);
        v.line = line;
        v.column = col;
        return v;
    }
    if (c == '[') return parse_list(cur, depth);
    if (c == '"') return lex_string(cur);
    if (is_number_start(c)) return lex_number(cur);
    if (is_ident_start(c)) {
        std::string word = lex_ident(cur);
        Value v;
        if (word == "true") {
            v = Value::of_bool(true);
        } else if (word == "false") {
            v = Value::of_bool(false);
        } else {
            v = Value::of_symbol(std::move(word));
        }
        v.line = line;
        v.column = col;
        return v;
    }
    cur.fail(std::string("unexpected character '") + c + "'");
}

inline void write_indent(std::string& out, int depth) {
    out.append(static_cast<size_t>(depth) * 2, ' ');
}

inline void write_float(std::string& out, double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    std::string_view s(buf, static_cast<size_t>(ptr - buf));
    out.append(s);
    // Keep the float-ness visible so the value re-parses with the same type.
    if (s.find('.') == std::string_view::npos && s.find('e') == std::string_view::npos &&
        s.find("inf") == std::string_view::npos && s.find("nan") == std::string_view::npos) {
        out.append(".0");
    }
}

inline void write_string(std::string& out, const std::string& s) {
    out.push_back('"');
    for (const char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default: out.push_back(c);
        }
    }
    out.push_back('"');
}

inline void write_value(std::string& out, const Value& v, int depth);

inline void write_block_entries(std::string& out, const Value& block, int depth) {
    // Canonical order: keys sorted lexicographically.
    std::vector<const std::pair<std::string, Value>*> sorted;
    sorted.reserve(block.entries.size());
    for (const auto& e : block.entries) sorted.push_back(&e);
    std::sort(sorted.begin(), sorted.end(),
              [](const auto* a, const auto* b) { return a->first < b->first; });
    for (const auto* entry : sorted) {
        write_indent(out, depth);
        out += entry->first;
        out.push_back(' ');
        write_value(out, entry->second, depth);
        out.push_back('\n');
    }
}

inline void write_value(std::string& out, const Value& v, int depth) {
    switch (v.kind) {
        case Value::Kind::Int:
            out += std::to_string(v.int_value);
            break;
        case Value::Kind::Float:
            write_float(out, v.float_value);
            break;
        case Value::Kind::Bool:
            out += v.bool_value ? "true" : "false";
            break;
        case Value::Kind::Symbol:
            out += v.text;
            break;
        case Value::Kind::String:
            write_string(out, v.text);
            break;
        case Value::Kind::List: {
            bool all_scalar = true;
            for (const auto& item : v.items) {
                if (item.kind == Value::Kind::List || item.kind == Value::Kind::Block) {
                    all_scalar = false;
                    break;
                }
            }
            if (v.items.empty()) {
                out += "[]";
            } else if (all_scalar) {
                out.push_back('[');
                for (size_t i = 0; i < v.items.size(); ++i) {
                    if (i) out += ", ";
                    write_value(out, v.items[i], depth);
                }
                out.push_back(']');
            } else {
                out += "[\n";
                for (const auto& item : v.items) {
                    write_indent(out, depth + 1);
                    write_value(out, item, depth + 1);
                    out.push_back('\n');
                }
                write_indent(out, depth);
                out.push_back(']');
            }
            break;
        }
        case Value::Kind::Block:
            out += "{\n";
            write_block_entries(out, v, depth + 1);
            write_indent(out, depth);
            out.push_back('}');
            break;
    }
}

}  // namespace detail

/// Parse a document into its top-level block. Throws ParseError with
/// line/column on any malformed input.
inline Value parse_document(std::string_view src) {
    detail::Cursor cur{src};
    return detail::parse_block_body(cur, 0, true);
}

/// Canonical serialization: sorted keys, two-space indent, trailing newline.
inline std::string write_document(const Value& block) {
    std::string out;
    detail::write_block_entries(out, block, 0);
    return out;
}

}  // namespace cornersim::text
