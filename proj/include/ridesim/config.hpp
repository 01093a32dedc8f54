#pragma once

// Flat key = value configuration files. '#' starts a comment; lists are comma separated.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ridesim/csv.hpp"
#include "ridesim/errors.hpp"

namespace ridesim {

// Shortest decimal text that round-trips to the same double.
inline std::string format_double(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc{}) throw Error("number formatting failed");
    return std::string(buf, end);
}

inline std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t h) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = digits[h & 0xf];
    return s;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Config {
public:
    Config() = default;

    static Config parse(std::string_view text, const std::string& source = "<config>") {
        Config c;
        std::size_t line_no = 0, pos = 0;
        while (pos <= text.size()) {
            const auto nl = text.find('\n', pos);
            std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
            pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
            ++line_no;
            if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
            line = csv::trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected key = value");
            const std::string key(csv::trim(line.substr(0, eq)));
            if (key.empty()) throw ParseError(source, line_no, "empty key");
            if (!c.values_.emplace(key, std::string(csv::trim(line.substr(eq + 1)))).second)
                throw ParseError(source, line_no, "duplicate key '" + key + "'");
        }
        return c;
    }

    static Config load(const std::filesystem::path& path) {
        Config c = parse(read_file(path), path.string());
        c.dir_ = path.parent_path();
        return c;
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

    std::string str(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
        used_.insert(key);
        return it->second;
    }
    std::string str(const std::string& key, const std::string& fallback) const {
        return has(key) ? str(key) : fallback;
    }

    double num(const std::string& key) const {
        auto v = csv::to_double(str(key));
        if (!v) throw ConfigError("config key '" + key + "' is not a number");
        return *v;
    }
    double num(const std::string& key, double fallback) const { return has(key) ? num(key) : fallback; }

    long long integer(const std::string& key) const {
        auto v = csv::to_int(str(key));
        if (!v) throw ConfigError("config key '" + key + "' is not an integer");
        return *v;
    }
    long long integer(const std::string& key, long long fallback) const {
        return has(key) ? integer(key) : fallback;
    }

    bool flag(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const auto v = str(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigError("config key '" + key + "' is not a boolean");
    }

    std::vector<std::string> list(const std::string& key) const {
        std::vector<std::string> out;
        const auto raw = str(key);
        if (csv::trim(raw).empty()) return out;
        for (auto f : csv::split(raw)) out.emplace_back(csv::trim(f));
        return out;
    }

    std::vector<double> numbers(const std::string& key) const {
        std::vector<double> out;
        for (const auto& s : list(key)) {
            auto v = csv::to_double(s);
            if (!v) throw ConfigError("config key '" + key + "' holds a non-numeric entry '" + s + "'");
            out.push_back(*v);
        }
        return out;
    }

    // Relative paths resolve against the config file's directory.
    std::filesystem::path path(const std::string& key) const {
        std::filesystem::path p = str(key);
        return p.is_relative() ? dir_ / p : p;
    }

    // Keys present in the file but never read.
    std::vector<std::string> unused() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : values_)
            if (!used_.count(k)) out.push_back(k);
        return out;
    }

    // Canonical sorted text; independent of comments, spacing and key order.
    std::string canonical() const {
        std::string s;
        for (const auto& [k, v] : values_) s += k + "=" + v + "\n";
        return s;
    }

    const std::map<std::string, std::string>& values() const noexcept { return values_; }

private:
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
    std::filesystem::path dir_;
};

} // namespace ridesim
