#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "infomarket/error.hpp"

namespace infomarket::io {

/// Daily closing prices with ISO-8601 dates.
struct EmpiricalSeries {
    std::vector<std::string> dates;
    std::vector<double> closes;
};

namespace detail {

inline bool is_iso_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
        if (s[i] < '0' || s[i] > '9') return false;
    }
    const int month = (s[5] - '0') * 10 + (s[6] - '0');
    const int day = (s[8] - '0') * 10 + (s[9] - '0');
    return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

/// Splits on commas, semicolons, tabs or spaces; empty fields are dropped.
inline std::vector<std::string_view> fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    const auto sep = [](char c) { return c == ',' || c == ';' || c == '\t' || c == ' ' || c == '\r'; };
    while (i < line.size()) {
        while (i < line.size() && sep(line[i])) ++i;
        const std::size_t start = i;
        while (i < line.size() && !sep(line[i])) ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

}  // namespace detail

/// Parses "date close" rows. Blank lines and lines starting with '#' are
/// skipped; a first data line that does not start with a date is taken as a
/// header. Errors carry the 1-based line number.
[[nodiscard]] inline EmpiricalSeries parse_empirical(std::string_view text) {
    EmpiricalSeries s;
    bool seen_row = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        const auto f = detail::fields(line);
        if (f.empty() || f.front().front() == '#') continue;
        if (!seen_row) {
            seen_row = true;
            if (!detail::is_iso_date(f.front())) continue;  // header
        }
        if (f.size() < 2) throw FormatError("expected a date and a closing price", line_no);
        if (!detail::is_iso_date(f[0])) {
            throw FormatError("'" + std::string(f[0]) + "' is not an ISO-8601 date (YYYY-MM-DD)", line_no);
        }
        const auto& close_field = f.back();
        double close = 0.0;
        const auto [ptr, ec] = std::from_chars(close_field.data(), close_field.data() + close_field.size(), close);
        if (ec != std::errc{} || ptr != close_field.data() + close_field.size()) {
            throw FormatError("cannot parse closing price '" + std::string(close_field) + "'", line_no);
        }
        if (!(close > 0.0) || !std::isfinite(close)) {
            throw FormatError("closing price must be positive, got " + std::string(close_field), line_no);
        }
        if (!s.dates.empty() && !(s.dates.back() < f[0])) {
            throw FormatError("date " + std::string(f[0]) + " does not follow " + s.dates.back(), line_no);
        }
        s.dates.emplace_back(f[0]);
        s.closes.push_back(close);
    }
    if (s.closes.size() < 2) throw SampleSizeError("empirical series needs at least two prices");
    return s;
}

[[nodiscard]] inline EmpiricalSeries load_empirical(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ResourceError("cannot open empirical file '" + path.string() + "'");
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return parse_empirical(text);
    } catch (const FormatError& e) {
        throw FormatError(path.filename().string() + ": " + e.what(), e.line());
    }
}

/// Base-10 log returns log10(p_t) - log10(p_{t-1}).
[[nodiscard]] inline std::vector<double> log10_returns(const EmpiricalSeries& s) {
    std::vector<double> r;
    r.reserve(s.closes.size() - 1);
    for (std::size_t t = 1; t < s.closes.size(); ++t) r.push_back(std::log10(s.closes[t]) - std::log10(s.closes[t - 1]));
    return r;
}

}  // namespace infomarket::io
