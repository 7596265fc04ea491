#pragma once

#include "ignis/error.hpp"
#include "ignis/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace ignis {

// ---------------------------------------------------------------------------
// CSV (RFC 4180)
// ---------------------------------------------------------------------------

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] std::optional<std::size_t> column(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) return std::nullopt;
        return static_cast<std::size_t>(it - header.begin());
    }
};

/// Parses RFC 4180 text: quoted fields may hold commas, doubled quotes and
/// line breaks; CRLF and LF line endings are both accepted. A leading UTF-8
/// byte-order mark is skipped. The first record is the header.
inline CsvTable parse_csv(std::string_view text) {
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") {
        text.remove_prefix(3);
    }
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        if (!(record.size() == 1 && record[0].empty())) {
            records.push_back(std::move(record));
        }
        record.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            if (!field_started && field.empty()) {
                in_quotes = true;
                field_started = true;
            } else {
                field.push_back(c);
            }
            break;
        case ',':
            end_field();
            break;
        case '\r':
            if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_record();
            break;
        case '\n':
            end_record();
            break;
        default:
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) {
        throw FormatError("csv: unterminated quoted field");
    }
    if (!field.empty() || !record.empty()) {
        end_record();
    }
    if (records.empty()) {
        throw FormatError("csv: missing header row");
    }
    CsvTable t;
    t.header = std::move(records.front());
    t.rows.assign(std::make_move_iterator(records.begin() + 1), std::make_move_iterator(records.end()));
    return t;
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot open " + path);
    }
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return parse_csv(text);
}

/// Strict numeric cell: surrounding blanks allowed, nothing else.
inline std::optional<double> parse_number(const std::string& cell) {
    const auto first = cell.find_first_not_of(" \t");
    if (first == std::string::npos) return std::nullopt;
    const auto last = cell.find_last_not_of(" \t");
    const std::string s = cell.substr(first, last - first + 1);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

// ---------------------------------------------------------------------------
// Dates
// ---------------------------------------------------------------------------

/// Calendar timestamp; ordering is chronological.
struct Timestamp {
    int year = 0;
    int month = 0;
    int day = 0;
    int seconds = 0; // seconds since midnight

    auto operator<=>(const Timestamp&) const = default;
};

/// ISO-8601 `YYYY-MM-DD`, optionally followed by `THH:MM[:SS]` (or a space).
/// Any trailing fraction or zone designator is ignored.
inline std::optional<Timestamp> parse_iso_date(const std::string& text) {
    Timestamp ts;
    int consumed = 0;
    if (std::sscanf(text.c_str(), "%4d-%2d-%2d%n", &ts.year, &ts.month, &ts.day, &consumed) != 3 ||
        consumed != 10) {
        return std::nullopt;
    }
    if (ts.month < 1 || ts.month > 12 || ts.day < 1 || ts.day > 31) {
        return std::nullopt;
    }
    if (text.size() > 10) {
        const char sep = text[10];
        if (sep != 'T' && sep != ' ') return std::nullopt;
        int h = 0;
        int m = 0;
        int s = 0;
        const int got = std::sscanf(text.c_str() + 11, "%2d:%2d:%2d", &h, &m, &s);
        if (got < 2 || h > 23 || m > 59 || s > 60) return std::nullopt;
        ts.seconds = h * 3600 + m * 60 + s;
    }
    return ts;
}

/// Year and month of a timestamp, used as the monthly grouping key.
struct YearMonth {
    int year;
    int month;

    auto operator<=>(const YearMonth&) const = default;

    [[nodiscard]] std::string str() const {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
        return buf;
    }
};

// ---------------------------------------------------------------------------
// Bivariate series
// ---------------------------------------------------------------------------

struct BivariateSeries {
    std::pair<std::string, std::string> labels;
    std::optional<std::vector<Timestamp>> timestamps;
    std::vector<double> x;
    std::vector<double> y;
    std::size_t dropped = 0;

    [[nodiscard]] std::size_t size() const noexcept { return x.size(); }
};

/// Loads two numeric columns (and optionally an ISO-8601 time column) from a
/// CSV file with a header row. Rows with any unparseable cell are dropped and
/// counted; rows are then stable-sorted by time.
inline BivariateSeries series_from_table(const CsvTable& table, const std::string& col_x,
                                         const std::string& col_y,
                                         const std::optional<std::string>& col_time = std::nullopt) {
    auto require = [&](const std::string& name) {
        const auto idx = table.column(name);
        if (!idx) throw MissingColumn("missing column '" + name + "'");
        return *idx;
    };
    const std::size_t ix = require(col_x);
    const std::size_t iy = require(col_y);
    std::optional<std::size_t> it;
    if (col_time) it = require(*col_time);

    struct Row {
        Timestamp t;
        double x;
        double y;
    };
    std::vector<Row> kept;
    std::size_t dropped = 0;
    for (const auto& rec : table.rows) {
        const auto cell = [&](std::size_t k) -> std::string {
            return k < rec.size() ? rec[k] : std::string();
        };
        const auto xv = parse_number(cell(ix));
        const auto yv = parse_number(cell(iy));
        std::optional<Timestamp> tv = Timestamp{};
        if (it) tv = parse_iso_date(cell(*it));
        if (!xv || !yv || !tv) {
            ++dropped;
            continue;
        }
        kept.push_back({*tv, *xv, *yv});
    }
    if (kept.empty()) {
        throw EmptyAfterCleaning("no usable rows after cleaning (" + std::to_string(dropped) +
                                 " dropped)");
    }
    if (it) {
        std::stable_sort(kept.begin(), kept.end(),
                         [](const Row& a, const Row& b) { return a.t < b.t; });
    }
    BivariateSeries s;
    s.labels = {col_x, col_y};
    s.dropped = dropped;
    if (it) s.timestamps.emplace();
    for (const auto& r : kept) {
        s.x.push_back(r.x);
        s.y.push_back(r.y);
        if (it) s.timestamps->push_back(r.t);
    }
    return s;
}

inline BivariateSeries load_bivariate_csv(const std::string& path, const std::string& col_x,
                                          const std::string& col_y,
                                          const std::optional<std::string>& col_time = std::nullopt) {
    return series_from_table(read_csv(path), col_x, col_y, col_time);
}

/// rᵢ = ln(pᵢ₊₁/pᵢ).
inline std::vector<double> log_returns(std::span<const double> prices) {
    if (prices.size() < 2) {
        throw TooFewObservations("log_returns: need at least 2 prices");
    }
    for (std::size_t i = 0; i < prices.size(); ++i) {
        if (!(prices[i] > 0.0)) {
            throw NonPositivePrice("log_returns: price at index " + std::to_string(i) +
                                   " is not positive");
        }
    }
    std::vector<double> r(prices.size() - 1);
    for (std::size_t i = 0; i + 1 < prices.size(); ++i) {
        r[i] = std::log(prices[i + 1] / prices[i]);
    }
    return r;
}

inline std::vector<double> difference(std::span<const double> series) {
    if (series.size() < 2) {
        throw TooFewObservations("difference: need at least 2 values");
    }
    std::vector<double> d(series.size() - 1);
    for (std::size_t i = 0; i + 1 < series.size(); ++i) {
        d[i] = series[i + 1] - series[i];
    }
    return d;
}

/// Empirical quantile with linear interpolation between order statistics,
/// h = (n − 1)p (the spreadsheet PERCENTILE convention).
inline double quantile_linear(std::vector<double> values, double p) {
    if (values.empty()) {
        throw TooFewObservations("quantile: empty input");
    }
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

struct MonthlyAggregate {
    std::vector<YearMonth> months;
    std::vector<double> mean;
    std::vector<double> p99;
    /// Calendar months between the first and last key that had no data.
    std::vector<YearMonth> skipped;
};

/// Per calendar month: arithmetic mean and 99th percentile, chronological.
inline MonthlyAggregate monthly_aggregate(std::span<const Timestamp> timestamps,
                                          std::span<const double> values) {
    if (timestamps.size() != values.size()) {
        throw LengthMismatch("monthly_aggregate: length mismatch");
    }
    std::map<YearMonth, std::vector<double>> groups;
    for (std::size_t i = 0; i < values.size(); ++i) {
        groups[{timestamps[i].year, timestamps[i].month}].push_back(values[i]);
    }
    MonthlyAggregate out;
    std::optional<YearMonth> prev;
    for (auto& [key, vals] : groups) {
        if (prev) {
            YearMonth gap = *prev;
            for (;;) {
                gap.month = gap.month == 12 ? 1 : gap.month + 1;
                if (gap.month == 1) ++gap.year;
                if (!(gap < key)) break;
                out.skipped.push_back(gap);
            }
        }
        prev = key;
        out.months.push_back(key);
        out.mean.push_back(std::accumulate(vals.begin(), vals.end(), 0.0) /
                           static_cast<double>(vals.size()));
        out.p99.push_back(quantile_linear(std::move(vals), 0.99));
    }
    return out;
}

/// Probability-integral transform of both coordinates.
inline PseudoObservations to_pseudo(const BivariateSeries& s) {
    return pseudo_observations(s.x, s.y);
}

} // namespace ignis
