#pragma once

#include <charconv>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ridesim/errors.hpp"

namespace ridesim::csv {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

inline std::optional<double> to_double(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    double v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::optional<long long> to_int(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    long long v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

struct Row {
    std::size_t line;
    std::vector<std::string> fields;
};

// Reads a headed CSV file. The header must match `expected` column-for-column.
// Blank lines are skipped.
inline std::vector<Row> read(const std::string& path, const std::vector<std::string>& expected) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");

    std::vector<Row> rows;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
            line.erase(0, 3);
        if (trim(line).empty()) continue;
        auto cols = split(line);
        if (!have_header) {
            if (cols.size() != expected.size())
                throw ParseError(path, lineno, "header has " + std::to_string(cols.size()) +
                                                   " columns, expected " +
                                                   std::to_string(expected.size()));
            for (std::size_t i = 0; i < cols.size(); ++i)
                if (cols[i] != expected[i])
                    throw ParseError(path, lineno, "unexpected header column '" +
                                                       std::string(cols[i]) + "', expected '" +
                                                       expected[i] + "'");
            have_header = true;
            continue;
        }
        if (cols.size() != expected.size())
            throw ParseError(path, lineno, "expected " + std::to_string(expected.size()) +
                                               " fields, got " + std::to_string(cols.size()));
        Row r{lineno, {}};
        r.fields.reserve(cols.size());
        for (auto c : cols) r.fields.emplace_back(c);
        rows.push_back(std::move(r));
    }
    if (!have_header) throw ParseError(path, 0, "empty file (missing header)");
    return rows;
}

} // namespace ridesim::csv
