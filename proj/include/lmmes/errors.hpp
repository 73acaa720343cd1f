/*
 * This file is part of lmmes, a library for effect size estimation in
 * linear mixed models.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lmmes {

/// Base class of all lmmes errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input data or model specification. CLI exit code 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Numerical breakdown during computation. CLI exit code 3.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// File system or stream failure. CLI exit code 4.
class IoError : public Error {
public:
    using Error::Error;
};

class ColumnNotFound : public ValidationError {
public:
    explicit ColumnNotFound(const std::string& name)
        : ValidationError("column not found: " + name), column_(name) {}
    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

class InvalidResponse : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InvalidModelSpec : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class RankDeficientDesign : public ValidationError {
public:
    explicit RankDeficientDesign(std::vector<std::string> dependent)
        : ValidationError(compose(dependent)), dependent_columns_(std::move(dependent)) {}
    const std::vector<std::string>& dependent_columns() const noexcept { return dependent_columns_; }

private:
    static std::string compose(const std::vector<std::string>& cols) {
        std::string msg = "design matrix is rank deficient";
        if (!cols.empty()) {
            msg += "; linearly dependent columns:";
            for (const auto& c : cols) msg += " " + c;
        }
        return msg;
    }
    std::vector<std::string> dependent_columns_;
};

class DimensionMismatch : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InvalidArgument : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InvalidR2 : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InsufficientGroupData : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InsufficientDf : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Response with zero variance; no variance component is identifiable.
class DegenerateResponse : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class CsvError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class CovarianceNotPD : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class HypothesisSingular : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NumericalFailure : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace lmmes
