#pragma once

// Minimal `key = value` text documents used for plant parameters,
// normalization stats and run configuration. `#` starts a comment.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "comfort/errors.hpp"

namespace comfort {

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline bool parse_double(std::string_view text, double& out) {
    text = trim(text);
    if (text.empty()) return false;
    // from_chars for double is available in libstdc++ 11.
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

inline bool parse_uint64(std::string_view text, unsigned long long& out) {
    text = trim(text);
    if (text.empty()) return false;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

// %.17g round-trips an IEEE double exactly.
inline std::string format_g(double v, int significant) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", significant, v);
    return buf;
}

inline std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

}  // namespace detail

class KeyValueDoc {
public:
    static KeyValueDoc parse(std::istream& in, const std::string& source) {
        KeyValueDoc doc;
        doc.source_ = source;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string_view view = line;
            if (auto hash = view.find('#'); hash != std::string_view::npos)
                view = view.substr(0, hash);
            view = detail::trim(view);
            if (view.empty()) continue;
            const auto eq = view.find('=');
            if (eq == std::string_view::npos)
                throw ParseError(source, lineno, "expected `key = value`");
            const std::string key(detail::trim(view.substr(0, eq)));
            const std::string value(detail::trim(view.substr(eq + 1)));
            if (key.empty()) throw ParseError(source, lineno, "empty key");
            if (doc.entries_.count(key))
                throw ParseError(source, lineno, "duplicate key '" + key + "'");
            doc.entries_[key] = {value, lineno};
        }
        return doc;
    }

    static KeyValueDoc load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open '" + path + "'");
        return parse(in, path);
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    const std::string& get_string(const std::string& key) const { return at(key).value; }

    double get_double(const std::string& key) const {
        const Entry& e = at(key);
        double v = 0.0;
        if (!detail::parse_double(e.value, v))
            throw ParseError(source_, e.line, "key '" + key + "': not a number: " + e.value);
        return v;
    }

    double get_double(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }

    unsigned long long get_uint(const std::string& key) const {
        const Entry& e = at(key);
        unsigned long long v = 0;
        if (!detail::parse_uint64(e.value, v))
            throw ParseError(source_, e.line,
                             "key '" + key + "': not a non-negative integer: " + e.value);
        return v;
    }

    unsigned long long get_uint(const std::string& key, unsigned long long fallback) const {
        return has(key) ? get_uint(key) : fallback;
    }

    const std::string& source() const noexcept { return source_; }

private:
    struct Entry {
        std::string value;
        std::size_t line = 0;
    };

    const Entry& at(const std::string& key) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) throw ParseError(source_, 0, "missing key '" + key + "'");
        return it->second;
    }

    std::string source_;
    std::map<std::string, Entry> entries_;
};

}  // namespace comfort
