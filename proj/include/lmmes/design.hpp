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

#include <Eigen/Dense>

#include <algorithm>
#include <string>
#include <vector>

namespace lmmes {

/// Partitioned fixed-effects design plus random-intercept grouping factors.
///
/// `fixed_block1` holds the variables of interest, `fixed_block2` the
/// conditioning variables, `random_groups` the categorical factors whose
/// indicator matrices enter the covariance structure.
struct ModelSpec {
    std::vector<std::string> fixed_block1;
    std::vector<std::string> fixed_block2;
    std::vector<std::string> random_groups;
};

/// Encoded design: x has an intercept in column 0, then the block-1 columns,
/// then the block-2 columns. Categorical regressors are treatment coded with
/// the lexicographically first level as reference.
struct EncodedDesign {
    Eigen::MatrixXd x;
    std::vector<std::string> column_names; // one per column of x
    Eigen::Index p1 = 0;
    Eigen::Index p2 = 0;
    std::vector<Eigen::MatrixXd> z_blocks; // n x q_i indicator matrices
    std::vector<std::string> z_factor_names;
    std::vector<std::vector<std::string>> z_level_names;

    Eigen::Index n() const noexcept { return x.rows(); }
    Eigen::Index p() const noexcept { return x.cols(); }

    /// Selector R1 = (0 : I_{p1} : 0) picking the block-1 coefficients.
    Eigen::MatrixXd block1_selector() const {
        Eigen::MatrixXd r = Eigen::MatrixXd::Zero(p1, p());
        for (Eigen::Index i = 0; i < p1; ++i) r(i, 1 + i) = 1.0;
        return r;
    }

    /// Selector (0 : I_{p-1}) picking every non-intercept coefficient.
    Eigen::MatrixXd nonintercept_selector() const {
        Eigen::MatrixXd r = Eigen::MatrixXd::Zero(p() - 1, p());
        for (Eigen::Index i = 0; i + 1 < p(); ++i) r(i, 1 + i) = 1.0;
        return r;
    }
};

namespace detail {

inline void append_encoded_column(const DatasetFrame& frame, const std::string& name,
                                  std::vector<Eigen::VectorXd>& cols, std::vector<std::string>& names) {
    const Column& col = frame.column(name); // throws ColumnNotFound
    if (const auto* num = std::get_if<NumericColumn>(&col)) {
        cols.push_back(num->values);
        names.push_back(name);
        return;
    }
    const auto& cat = std::get<CategoricalColumn>(col);
    const Eigen::Index n = frame.n_rows();
    // Treatment coding: level 0 (lexicographically first) is the reference.
    for (std::size_t lev = 1; lev < cat.levels.size(); ++lev) {
        Eigen::VectorXd ind = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i)
            if (static_cast<std::size_t>(cat.codes[static_cast<std::size_t>(i)]) == lev) ind[i] = 1.0;
        cols.push_back(std::move(ind));
        names.push_back(name + "=" + cat.levels[lev]);
    }
}

inline void check_disjoint_blocks(const ModelSpec& spec, const std::string& response) {
    auto check_unique = [](const std::vector<std::string>& v, const char* what) {
        for (std::size_t i = 0; i < v.size(); ++i)
            for (std::size_t j = i + 1; j < v.size(); ++j)
                if (v[i] == v[j])
                    throw InvalidModelSpec(std::string("duplicate column in ") + what + ": " + v[i]);
    };
    check_unique(spec.fixed_block1, "block 1");
    check_unique(spec.fixed_block2, "block 2");
    check_unique(spec.random_groups, "random factors");
    for (const auto& a : spec.fixed_block1)
        if (std::find(spec.fixed_block2.begin(), spec.fixed_block2.end(), a) != spec.fixed_block2.end())
            throw InvalidModelSpec("column " + a + " appears in both fixed-effect blocks");
    for (const auto& lists : {&spec.fixed_block1, &spec.fixed_block2, &spec.random_groups})
        for (const auto& a : *lists)
            if (a == response)
                throw InvalidModelSpec("response column " + a + " cannot be used as a regressor");
}

} // namespace detail

/// Builds the encoded fixed design X = (1 : X1 : X2) and the random-factor
/// indicator matrices. Throws RankDeficientDesign naming the offending
/// columns when X does not have full column rank.
inline EncodedDesign encode_design(const DatasetFrame& frame, const ModelSpec& spec) {
    detail::check_disjoint_blocks(spec, frame.response_name());

    const Eigen::Index n = frame.n_rows();
    std::vector<Eigen::VectorXd> cols;
    std::vector<std::string> names;
    cols.push_back(Eigen::VectorXd::Ones(n));
    names.push_back("(intercept)");

    for (const auto& name : spec.fixed_block1) detail::append_encoded_column(frame, name, cols, names);
    const Eigen::Index p1 = static_cast<Eigen::Index>(cols.size()) - 1;
    for (const auto& name : spec.fixed_block2) detail::append_encoded_column(frame, name, cols, names);
    const Eigen::Index p2 = static_cast<Eigen::Index>(cols.size()) - 1 - p1;

    const Eigen::Index p = static_cast<Eigen::Index>(cols.size());
    if (p > n - 1)
        throw InvalidModelSpec("model has p = " + std::to_string(p) + " coefficients but only n = " +
                               std::to_string(n) + " observations (need p <= n - 1)");

    EncodedDesign enc;
    enc.x.resize(n, p);
    for (Eigen::Index j = 0; j < p; ++j) enc.x.col(j) = cols[static_cast<std::size_t>(j)];
    enc.column_names = std::move(names);
    enc.p1 = p1;
    enc.p2 = p2;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(enc.x);
    if (qr.rank() < p) {
        // Pivot order: the first rank(X) pivoted columns form an independent
        // set; the remainder are (numerically) linear combinations of them.
        std::vector<std::string> dependent;
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index j = qr.rank(); j < p; ++j)
            dependent.push_back(enc.column_names[static_cast<std::size_t>(perm[j])]);
        std::sort(dependent.begin(), dependent.end());
        throw RankDeficientDesign(std::move(dependent));
    }

    for (const auto& name : spec.random_groups) {
        const Column& col = frame.column(name);
        const auto* cat = std::get_if<CategoricalColumn>(&col);
        if (cat == nullptr)
            throw InvalidModelSpec("random factor " + name + " must be a categorical column");
        const Eigen::Index q = static_cast<Eigen::Index>(cat->levels.size());
        Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, q);
        for (Eigen::Index i = 0; i < n; ++i) z(i, cat->codes[static_cast<std::size_t>(i)]) = 1.0;
        enc.z_blocks.push_back(std::move(z));
        enc.z_factor_names.push_back(name);
        enc.z_level_names.push_back(cat->levels);
    }
    return enc;
}

/// Variance-ratio parameterization of the covariance structure:
/// V = I_n + sum_i k_i Z_i Z_i^T with k_i = sigma_i^2 / sigma^2 >= 0.
struct CovarianceStructure {
    Eigen::VectorXd ratios;
    std::vector<Eigen::MatrixXd> group_matrices;

    CovarianceStructure(Eigen::VectorXd k, std::vector<Eigen::MatrixXd> z)
        : ratios(std::move(k)), group_matrices(std::move(z)) {
        if (ratios.size() != static_cast<Eigen::Index>(group_matrices.size()))
            throw DimensionMismatch("ratio count does not match the number of grouping matrices");
        for (Eigen::Index i = 0; i < ratios.size(); ++i) {
            if (!std::isfinite(ratios[i]) || ratios[i] < 0.0)
                throw InvalidArgument("variance ratio " + std::to_string(i + 1) + " must be finite and >= 0");
        }
        const Eigen::Index n = group_matrices.empty() ? 0 : group_matrices.front().rows();
        for (const auto& z : group_matrices) {
            if (z.rows() != n) throw DimensionMismatch("grouping matrices have inconsistent row counts");
            for (Eigen::Index i = 0; i < z.rows(); ++i) {
                double row_sum = 0.0;
                for (Eigen::Index j = 0; j < z.cols(); ++j) {
                    if (z(i, j) != 0.0 && z(i, j) != 1.0)
                        throw InvalidArgument("grouping matrix entries must be 0 or 1");
                    row_sum += z(i, j);
                }
                if (row_sum != 1.0)
                    throw InvalidArgument("grouping matrix rows must contain exactly one 1");
            }
        }
    }
};

/// Materializes V = I_n + sum_i k_i Z_i Z_i^T. Symmetric by construction;
/// V - I is positive semidefinite, so V is positive definite.
inline Eigen::MatrixXd build_v(const CovarianceStructure& cov, Eigen::Index n) {
    for (const auto& z : cov.group_matrices)
        if (z.rows() != n)
            throw DimensionMismatch("grouping matrix has " + std::to_string(z.rows()) +
                                    " rows, expected " + std::to_string(n));
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index i = 0; i < cov.ratios.size(); ++i) {
        if (cov.ratios[i] == 0.0) continue;
        const auto& z = cov.group_matrices[static_cast<std::size_t>(i)];
        v.noalias() += cov.ratios[i] * (z * z.transpose());
    }
    return v;
}

} // namespace lmmes
