/*
 * This file is part of lmmes, a library for effect size estimation in
 * linear mixed models.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#pragma once

#include "lmmes/analyze.hpp"
#include "lmmes/csv.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace lmmes {

namespace detail {

/// 17 significant digits: enough to reproduce the double exactly on parse.
inline std::string json_number(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string text_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.7g", v);
    return buf;
}

inline std::string json_escape(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    out += '"';
    return out;
}

inline std::string json_string_array(const std::vector<std::string>& items) {
    std::string out = "[";
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += ",";
        out += json_escape(items[i]);
    }
    out += "]";
    return out;
}

inline std::string json_number_array(const Eigen::VectorXd& values) {
    std::string out = "[";
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (i > 0) out += ",";
        out += json_number(values[i]);
    }
    out += "]";
    return out;
}

} // namespace detail

inline std::string report_to_json(const EffectSizeReport& rep) {
    using detail::json_escape;
    using detail::json_number;
    using detail::json_number_array;
    using detail::json_string_array;

    std::ostringstream os;
    os << "{\n";
    os << "  \"model\": {\n";
    os << "    \"response\": " << json_escape(rep.response_name) << ",\n";
    os << "    \"block1\": " << json_string_array(rep.block1_columns) << ",\n";
    os << "    \"block2\": " << json_string_array(rep.block2_columns) << ",\n";
    os << "    \"random\": " << json_string_array(rep.random_factors) << ",\n";
    os << "    \"n\": " << rep.n << ",\n";
    os << "    \"p\": " << rep.p << ",\n";
    os << "    \"p1\": " << rep.p1 << ",\n";
    os << "    \"p2\": " << rep.p2 << ",\n";
    os << "    \"nu\": " << rep.nu << ",\n";
    os << "    \"coefficient_names\": " << json_string_array(rep.coefficient_names) << ",\n";
    os << "    \"beta_hat\": " << json_number_array(rep.beta_hat) << "\n";
    os << "  },\n";
    os << "  \"variance_components\": {\n";
    os << "    \"estimated\": " << (rep.k_estimated ? "true" : "false") << ",\n";
    os << "    \"k\": " << json_number_array(rep.k) << ",\n";
    os << "    \"sigma2\": " << json_number(rep.sigma2_hat) << ",\n";
    os << "    \"sigma_u2\": " << json_number_array(rep.sigma_u2_hat) << ",\n";
    os << "    \"criterion\": " << (rep.criterion_value ? json_number(*rep.criterion_value) : "null") << ",\n";
    os << "    \"iterations\": " << (rep.iterations ? std::to_string(*rep.iterations) : "null") << ",\n";
    os << "    \"converged\": " << (rep.converged ? "true" : "false") << "\n";
    os << "  },\n";
    os << "  \"effect_size\": {\n";
    os << "    \"f2_operational\": " << json_number(rep.f2_operational) << ",\n";
    os << "    \"f2_exact\": " << (rep.f2_exact ? json_number(*rep.f2_exact) : "null") << ",\n";
    os << "    \"r2_full\": " << json_number(rep.r2_ab) << ",\n";
    os << "    \"r2_reduced\": " << json_number(rep.r2_a) << ",\n";
    os << "    \"f2_via_r2\": " << json_number(rep.f2_via_r2) << ",\n";
    os << "    \"magnitude\": " << json_escape(rep.f2_label) << "\n";
    os << "  },\n";
    os << "  \"block1_test\": {\n";
    os << "    \"f\": " << json_number(rep.f_stat) << ",\n";
    os << "    \"df1\": " << rep.f_df1 << ",\n";
    os << "    \"df2\": " << rep.f_df2 << ",\n";
    os << "    \"p_value\": " << json_number(rep.p_value) << "\n";
    os << "  },\n";
    if (rep.two_group) {
        const TwoGroupEffect& tg = *rep.two_group;
        os << "  \"two_group\": {\n";
        os << "    \"cohens_d\": " << json_number(tg.d) << ",\n";
        os << "    \"magnitude\": " << json_escape(rep.d_label) << ",\n";
        os << "    \"welch_t\": " << json_number(tg.welch_t) << ",\n";
        os << "    \"welch_df\": " << json_number(tg.welch_df) << ",\n";
        os << "    \"p_value\": " << json_number(tg.welch_p) << ",\n";
        os << "    \"mean0\": " << json_number(tg.mean0) << ",\n";
        os << "    \"mean1\": " << json_number(tg.mean1) << ",\n";
        os << "    \"n0\": " << tg.n0 << ",\n";
        os << "    \"n1\": " << tg.n1 << "\n";
        os << "  },\n";
        os << "  \"d_star\": " << (rep.d_star_value ? json_number(*rep.d_star_value) : "null") << ",\n";
    } else {
        os << "  \"two_group\": null,\n";
        os << "  \"d_star\": null,\n";
    }
    os << "  \"warnings\": " << json_string_array(rep.warnings) << "\n";
    os << "}\n";
    return os.str();
}

inline std::string report_to_text(const EffectSizeReport& rep) {
    using detail::text_number;
    auto join = [](const std::vector<std::string>& v) {
        if (v.empty()) return std::string("(none)");
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i > 0) out += ", ";
            out += v[i];
        }
        return out;
    };

    std::ostringstream os;
    os << "effect size report\n";
    os << "------------------\n";
    os << "response:         " << rep.response_name << "\n";
    os << "block 1:          " << join(rep.block1_columns) << "\n";
    os << "block 2:          " << join(rep.block2_columns) << "\n";
    os << "random factors:   " << join(rep.random_factors) << "\n";
    os << "n / p / nu:       " << rep.n << " / " << rep.p << " / " << rep.nu << "\n";
    os << "\nvariance components\n";
    if (rep.k.size() == 0) {
        os << "  none (fixed-effects model, V = I)\n";
        os << "  sigma2:         " << text_number(rep.sigma2_hat) << "\n";
    } else {
        os << "  k " << (rep.k_estimated ? "(REML estimate)" : "(supplied)") << ":";
        for (Eigen::Index i = 0; i < rep.k.size(); ++i) os << " " << text_number(rep.k[i]);
        os << "\n";
        os << "  sigma2:         " << text_number(rep.sigma2_hat) << "\n";
        os << "  sigma_u2:      ";
        for (Eigen::Index i = 0; i < rep.sigma_u2_hat.size(); ++i)
            os << " " << text_number(rep.sigma_u2_hat[i]);
        os << "\n";
        if (rep.iterations)
            os << "  optimizer:      " << (rep.converged ? "converged" : "did not converge") << " ("
               << *rep.iterations << " iterations)\n";
    }
    os << "\nfixed effects\n";
    for (Eigen::Index i = 0; i < rep.beta_hat.size(); ++i)
        os << "  " << rep.coefficient_names[static_cast<std::size_t>(i)] << ": "
           << text_number(rep.beta_hat[i]) << "\n";
    os << "\neffect size of block 1\n";
    os << "  f2 (operational): " << text_number(rep.f2_operational) << "  [" << rep.f2_label << "]\n";
    if (rep.f2_exact) os << "  f2 (exact, known V): " << text_number(*rep.f2_exact) << "\n";
    os << "  R2 full model:    " << text_number(rep.r2_ab) << "\n";
    os << "  R2 reduced model: " << text_number(rep.r2_a) << "\n";
    os << "  f2 via R2:        " << text_number(rep.f2_via_r2) << "\n";
    os << "  F(" << rep.f_df1 << ", " << rep.f_df2 << "):        " << text_number(rep.f_stat) << "\n";
    os << "  p-value:          " << text_number(rep.p_value) << "\n";
    if (rep.two_group) {
        const TwoGroupEffect& tg = *rep.two_group;
        os << "\ntwo-group comparison of the response\n";
        os << "  cohen's d:        " << text_number(tg.d) << "  [" << rep.d_label << "]\n";
        os << "  welch t:          " << text_number(tg.welch_t) << " (df " << text_number(tg.welch_df)
           << ", p " << text_number(tg.welch_p) << ")\n";
        os << "  group means:      " << text_number(tg.mean0) << " (n=" << tg.n0 << ") vs "
           << text_number(tg.mean1) << " (n=" << tg.n1 << ")\n";
        if (rep.d_star_value) os << "  d*:               " << text_number(*rep.d_star_value) << "\n";
    }
    for (const auto& w : rep.warnings) os << "\nwarning: " << w << "\n";
    return os.str();
}

/// Two-column CSV `k,f2`; the REML estimate, when present, is appended after
/// a `# k-hat` marker line.
inline void write_curve_csv(const CurveResult& curve, std::ostream& out) {
    out << "k,f2\n";
    for (const auto& [k, f2] : curve.points) out << format_double(k) << ',' << format_double(f2) << '\n';
    if (curve.estimated_point) {
        out << "# k-hat\n";
        out << format_double(curve.estimated_point->first) << ',' << format_double(curve.estimated_point->second)
            << '\n';
    }
}

} // namespace lmmes
