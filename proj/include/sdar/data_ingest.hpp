/**
 * @file data_ingest.hpp
 * @brief Return-series loading, weekly realized volatility and sample splits.
 */

#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sdar {

/// Input problem (missing file, bad cell, domain violation). `row()` is the
/// 1-based line number in the source file when the error refers to one.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what, std::optional<std::size_t> row = std::nullopt)
        : std::runtime_error(what), row_(row) {}
    std::optional<std::size_t> row() const noexcept { return row_; }

private:
    std::optional<std::size_t> row_;
};

struct ReturnSeries {
    std::vector<double> values;
    std::optional<std::vector<std::string>> labels;

    std::size_t size() const noexcept { return values.size(); }
};

struct TimeSeries {
    std::vector<double> values;
    std::optional<std::vector<std::string>> labels;

    TimeSeries() = default;
    explicit TimeSeries(std::vector<double> v, std::optional<std::vector<std::string>> l = std::nullopt)
        : values(std::move(v)), labels(std::move(l)) {}

    std::size_t size() const noexcept { return values.size(); }
    std::span<const double> view() const noexcept { return values; }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    s = s.substr(first, last - first + 1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

inline std::optional<double> parse_double(std::string_view cell) {
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const auto* end = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
    if (ec != std::errc{} || ptr != end || cell.empty()) return std::nullopt;
    return value;
}

inline bool is_index(std::string_view s) {
    return !s.empty() && s.find_first_not_of("0123456789") == std::string_view::npos;
}

}  // namespace detail

/// A parsed single numeric column plus optional first-column labels.
struct CsvColumn {
    std::vector<double> values;
    std::optional<std::vector<std::string>> labels;
};

/// Reads one numeric column from CSV text with a header row. `column` is a
/// header name, a 0-based index given as digits, or empty for the last
/// column. When the file has more than one column and the selected one is
/// not the first, the first column is carried along as labels.
inline CsvColumn read_csv_column(std::istream& in, std::string_view column) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        for (auto cell : detail::split_csv_line(line)) header.emplace_back(cell);
        break;
    }
    if (header.empty()) throw DataError("CSV input has no header row");

    std::size_t col = header.size() - 1;
    if (!column.empty()) {
        bool found = false;
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == column) {
                col = i;
                found = true;
                break;
            }
        }
        if (!found && detail::is_index(column)) {
            std::size_t idx = 0;
            std::from_chars(column.data(), column.data() + column.size(), idx);
            if (idx < header.size()) {
                col = idx;
                found = true;
            }
        }
        if (!found) throw DataError("column '" + std::string(column) + "' not found in CSV header", line_no);
    }
    const bool with_labels = header.size() > 1 && col != 0;

    CsvColumn out;
    std::vector<std::string> labels;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (col >= cells.size()) {
            throw DataError("row " + std::to_string(line_no) + ": missing column '" + header[col] + "'", line_no);
        }
        const auto value = detail::parse_double(cells[col]);
        if (!value) {
            throw DataError("row " + std::to_string(line_no) + ": non-numeric cell '" + std::string(cells[col]) + "'", line_no);
        }
        if (!std::isfinite(*value)) {
            throw DataError("row " + std::to_string(line_no) + ": non-finite value", line_no);
        }
        out.values.push_back(*value);
        if (with_labels) labels.emplace_back(cells[0]);
    }
    if (with_labels) out.labels = std::move(labels);
    return out;
}

inline CsvColumn read_csv_column(const std::string& path, std::string_view column) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open input file '" + path + "'");
    return read_csv_column(in, column);
}

inline ReturnSeries load_returns(std::istream& in, std::string_view column = {}) {
    auto parsed = read_csv_column(in, column);
    if (parsed.values.empty()) throw DataError("return series is empty");
    return ReturnSeries{std::move(parsed.values), std::move(parsed.labels)};
}

inline ReturnSeries load_returns(const std::string& path, std::string_view column = {}) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open input file '" + path + "'");
    return load_returns(in, column);
}

inline TimeSeries load_series(const std::string& path, std::string_view column = {}) {
    auto parsed = read_csv_column(path, column);
    return TimeSeries(std::move(parsed.values), std::move(parsed.labels));
}

/// Weekly realized volatility: square root of the sum of squared returns in
/// consecutive blocks of `week_len`; a trailing partial block is dropped.
/// Labels, when present, are those of the last day in each block.
inline TimeSeries realized_volatility(const ReturnSeries& returns, std::size_t week_len) {
    if (week_len == 0) throw std::invalid_argument("week_len must be positive");
    if (returns.values.empty()) throw DataError("return series is empty");
    if (returns.size() < week_len) {
        throw DataError("insufficient data: " + std::to_string(returns.size()) + " returns for week length " +
                        std::to_string(week_len));
    }
    const std::size_t weeks = returns.size() / week_len;
    std::vector<double> vol(weeks);
    std::optional<std::vector<std::string>> labels;
    if (returns.labels) labels.emplace(weeks);
    for (std::size_t w = 0; w < weeks; ++w) {
        double ss = 0.0;
        for (std::size_t s = w * week_len; s < (w + 1) * week_len; ++s) ss += returns.values[s] * returns.values[s];
        vol[w] = std::sqrt(ss);
        if (labels) (*labels)[w] = (*returns.labels)[(w + 1) * week_len - 1];
    }
    return TimeSeries(std::move(vol), std::move(labels));
}

inline TimeSeries log_transform(const TimeSeries& vol) {
    std::vector<double> out(vol.size());
    for (std::size_t i = 0; i < vol.size(); ++i) {
        if (!(vol.values[i] > 0.0)) {
            throw DataError("log_transform: nonpositive value at index " + std::to_string(i));
        }
        out[i] = std::log(vol.values[i]);
    }
    return TimeSeries(std::move(out), vol.labels);
}

/// Estimation / holdout split; both parts are nonempty.
inline std::pair<TimeSeries, TimeSeries> split(const TimeSeries& series, std::size_t n_train) {
    if (n_train < 1 || n_train >= series.size()) {
        throw std::invalid_argument("split: n_train must lie in [1, " + std::to_string(series.size()) + ")");
    }
    const auto cut = static_cast<std::ptrdiff_t>(n_train);
    TimeSeries head(std::vector<double>(series.values.begin(), series.values.begin() + cut));
    TimeSeries tail(std::vector<double>(series.values.begin() + cut, series.values.end()));
    if (series.labels) {
        head.labels.emplace(series.labels->begin(), series.labels->begin() + cut);
        tail.labels.emplace(series.labels->begin() + cut, series.labels->end());
    }
    return {std::move(head), std::move(tail)};
}

}  // namespace sdar
