/*
 * This file is part of lmmes, a library for effect size estimation in
 * linear mixed models.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#pragma once

#include "lmmes/errors.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace lmmes {

struct NumericColumn {
    Eigen::VectorXd values;
};

/// Categorical column stored as integer codes into a sorted level list.
/// Level order is the lexicographic order of the labels; code 0 is the
/// reference level for treatment coding.
struct CategoricalColumn {
    std::vector<std::string> levels;
    std::vector<std::int32_t> codes;

    static CategoricalColumn from_labels(const std::vector<std::string>& labels) {
        CategoricalColumn col;
        std::set<std::string> uniq(labels.begin(), labels.end());
        col.levels.assign(uniq.begin(), uniq.end());
        col.codes.reserve(labels.size());
        for (const auto& lab : labels) {
            auto it = std::lower_bound(col.levels.begin(), col.levels.end(), lab);
            col.codes.push_back(static_cast<std::int32_t>(it - col.levels.begin()));
        }
        return col;
    }

    std::size_t n_levels() const noexcept { return levels.size(); }
};

using Column = std::variant<NumericColumn, CategoricalColumn>;

/// Immutable column-oriented data set with a designated numeric response.
///
/// Invariants enforced at construction: all columns share the same length
/// n >= 1, every numeric value is finite (missing data is rejected, not
/// imputed), categorical codes are in range, and the response column exists
/// and is numeric.
class DatasetFrame {
public:
    DatasetFrame(std::vector<std::pair<std::string, Column>> columns, std::string response_name)
        : response_name_(std::move(response_name)) {
        if (columns.empty()) throw ValidationError("data set has no columns");
        names_.reserve(columns.size());
        columns_.reserve(columns.size());
        for (auto& [name, col] : columns) {
            if (name.empty()) throw ValidationError("empty column name");
            if (std::find(names_.begin(), names_.end(), name) != names_.end())
                throw ValidationError("duplicate column name: " + name);
            names_.push_back(name);
            columns_.push_back(std::move(col));
        }
        n_ = column_length(columns_.front());
        if (n_ < 1) throw ValidationError("data set has no rows");
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            if (column_length(columns_[i]) != n_)
                throw ValidationError("column " + names_[i] + " has inconsistent length");
            validate_column(names_[i], columns_[i]);
        }
        auto it = std::find(names_.begin(), names_.end(), response_name_);
        if (it == names_.end()) throw ColumnNotFound(response_name_);
        response_index_ = static_cast<std::size_t>(it - names_.begin());
        if (!std::holds_alternative<NumericColumn>(columns_[response_index_]))
            throw InvalidResponse("response column " + response_name_ + " must be numeric");
    }

    Eigen::Index n_rows() const noexcept { return n_; }
    const std::vector<std::string>& column_names() const noexcept { return names_; }
    const std::string& response_name() const noexcept { return response_name_; }

    bool has_column(const std::string& name) const {
        return std::find(names_.begin(), names_.end(), name) != names_.end();
    }

    const Column& column(const std::string& name) const {
        auto it = std::find(names_.begin(), names_.end(), name);
        if (it == names_.end()) throw ColumnNotFound(name);
        return columns_[static_cast<std::size_t>(it - names_.begin())];
    }

    const Eigen::VectorXd& response() const {
        return std::get<NumericColumn>(columns_[response_index_]).values;
    }

private:
    static Eigen::Index column_length(const Column& col) {
        if (const auto* num = std::get_if<NumericColumn>(&col)) return num->values.size();
        return static_cast<Eigen::Index>(std::get<CategoricalColumn>(col).codes.size());
    }

    static void validate_column(const std::string& name, const Column& col) {
        if (const auto* num = std::get_if<NumericColumn>(&col)) {
            for (Eigen::Index i = 0; i < num->values.size(); ++i) {
                if (!std::isfinite(num->values[i]))
                    throw ValidationError("column " + name + " contains a non-finite value at row " +
                                          std::to_string(i + 1));
            }
            return;
        }
        const auto& cat = std::get<CategoricalColumn>(col);
        if (cat.levels.empty()) throw ValidationError("categorical column " + name + " has no levels");
        for (std::size_t i = 0; i < cat.codes.size(); ++i) {
            if (cat.codes[i] < 0 || static_cast<std::size_t>(cat.codes[i]) >= cat.levels.size())
                throw ValidationError("categorical column " + name + " has an out-of-range code at row " +
                                      std::to_string(i + 1));
        }
    }

    std::vector<std::string> names_;
    std::vector<Column> columns_;
    std::string response_name_;
    std::size_t response_index_ = 0;
    Eigen::Index n_ = 0;
};

} // namespace lmmes
