/*
 * This file is part of lmmes, a library for effect size estimation in
 * linear mixed models.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#pragma once

#include "lmmes/dataset.hpp"
#include "lmmes/errors.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace lmmes {

/// Shortest decimal representation that round-trips to the same double.
inline std::string format_double(double v) {
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) throw NumericalFailure("failed to format floating point value");
    return std::string(buf.data(), ptr);
}

namespace detail {

// One CSV record: comma separated, double-quote quoting with "" escapes.
// Embedded line breaks inside quoted fields are not supported.
inline std::vector<std::string> split_csv_record(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (in_quotes)
        throw CsvError("line " + std::to_string(line_no) + ": unterminated quoted field");
    fields.push_back(cur);
    return fields;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

inline double parse_numeric_cell(const std::string& cell, const std::string& column, std::size_t line_no) {
    if (cell.empty())
        throw CsvError("line " + std::to_string(line_no) + ": missing value in column " + column);
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw CsvError("line " + std::to_string(line_no) + ": cannot parse '" + cell +
                       "' in column " + column + " as a number (declare the column categorical?)");
    if (!std::isfinite(v))
        throw CsvError("line " + std::to_string(line_no) + ": non-finite value in column " + column);
    return v;
}

} // namespace detail

/// Reads a CSV data set. The header row is mandatory; columns are numeric
/// unless listed in `categorical`. Missing cells are rejected.
inline DatasetFrame read_csv(std::istream& in, const std::string& response_name,
                             const std::set<std::string>& categorical = {}) {
    std::string line;
    if (!std::getline(in, line)) throw CsvError("empty input: header row required");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = detail::split_csv_record(line, 1);
    for (const auto& h : header)
        if (h.empty()) throw CsvError("header contains an empty column name");

    std::vector<std::vector<std::string>> cells(header.size());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = detail::split_csv_record(line, line_no);
        if (fields.size() != header.size())
            throw CsvError("line " + std::to_string(line_no) + ": expected " +
                           std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
        for (std::size_t j = 0; j < fields.size(); ++j) cells[j].push_back(std::move(fields[j]));
    }
    if (cells.front().empty()) throw CsvError("no data rows");

    for (const auto& name : categorical)
        if (std::find(header.begin(), header.end(), name) == header.end())
            throw ColumnNotFound(name);

    std::vector<std::pair<std::string, Column>> columns;
    columns.reserve(header.size());
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (categorical.count(header[j])) {
            columns.emplace_back(header[j], CategoricalColumn::from_labels(cells[j]));
        } else {
            NumericColumn num;
            num.values.resize(static_cast<Eigen::Index>(cells[j].size()));
            for (std::size_t i = 0; i < cells[j].size(); ++i)
                num.values[static_cast<Eigen::Index>(i)] =
                    detail::parse_numeric_cell(cells[j][i], header[j], i + 2);
            columns.emplace_back(header[j], std::move(num));
        }
    }
    return DatasetFrame(std::move(columns), response_name);
}

inline DatasetFrame read_csv_file(const std::string& path, const std::string& response_name,
                                  const std::set<std::string>& categorical = {}) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open input file: " + path);
    return read_csv(in, response_name, categorical);
}

inline void write_csv(const DatasetFrame& frame, std::ostream& out) {
    const auto& names = frame.column_names();
    std::vector<const Column*> cols;
    cols.reserve(names.size());
    for (std::size_t j = 0; j < names.size(); ++j) {
        if (j > 0) out << ',';
        out << detail::csv_escape(names[j]);
        cols.push_back(&frame.column(names[j]));
    }
    out << '\n';
    const Eigen::Index n = frame.n_rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            if (j > 0) out << ',';
            if (const auto* num = std::get_if<NumericColumn>(cols[j])) {
                out << format_double(num->values[i]);
            } else {
                const auto& cat = std::get<CategoricalColumn>(*cols[j]);
                out << detail::csv_escape(cat.levels[static_cast<std::size_t>(cat.codes[static_cast<std::size_t>(i)])]);
            }
        }
        out << '\n';
    }
}

} // namespace lmmes
