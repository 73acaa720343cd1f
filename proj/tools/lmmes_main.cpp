/*
 * This file is part of lmmes, a library for effect size estimation in
 * linear mixed models.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the
 * project root for license information.
 *
 * Command line front end: `analyze` runs the effect-size pipeline on a CSV
 * data set, `curve` sweeps f^2 over a grid of variance ratios, `generate`
 * writes a synthetic random-intercept data set.
 */
#include "lmmes/lmmes.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace {

struct AnalyzeArgs {
    std::string input;
    std::string response;
    std::vector<std::string> block1;
    std::vector<std::string> block2;
    std::vector<std::string> random_factors;
    std::vector<std::string> categorical;
    std::vector<double> k_override;
    std::string format = "text";
    std::string output;
    std::string k_grid; // curve only
};

struct GenerateArgs {
    long long n = 0;
    long long levels = 0;
    double beta0 = 0.0, beta1 = 0.0, beta2 = 0.0;
    double sigma2 = 1.0;
    double sigma_u2 = 0.0;
    double p_group1 = 0.5;
    double x2_mean = 0.0;
    double x2_sd = 1.0;
    double x2_corr = 0.4;
    double group_link = 0.5;
    std::uint64_t seed = 0;
    std::string output;
};

void add_model_flags(CLI::App* cmd, AnalyzeArgs& args) {
    cmd->add_option("--input", args.input, "input CSV file (header row required)")->required();
    cmd->add_option("--response", args.response, "response column name")->required();
    cmd->add_option("--block1", args.block1, "block-1 columns (variables of interest)")
        ->required()
        ->delimiter(',');
    cmd->add_option("--block2", args.block2, "block-2 columns (conditioning variables)")->delimiter(',');
    cmd->add_option("--random", args.random_factors, "random-intercept grouping factors")->delimiter(',');
    cmd->add_option("--categorical", args.categorical, "columns to read as categorical")->delimiter(',');
    cmd->add_option("--k", args.k_override,
                    "variance ratio override (one value per random factor); skips estimation")
        ->delimiter(',');
    cmd->add_option("--output", args.output, "output file (default: stdout)");
}

lmmes::AnalysisOptions make_options(const AnalyzeArgs& args) {
    lmmes::AnalysisOptions options;
    if (!args.k_override.empty()) {
        Eigen::VectorXd k(static_cast<Eigen::Index>(args.k_override.size()));
        for (std::size_t i = 0; i < args.k_override.size(); ++i) {
            if (!(args.k_override[i] >= 0.0))
                throw lmmes::InvalidArgument("--k values must be >= 0");
            k[static_cast<Eigen::Index>(i)] = args.k_override[i];
        }
        options.k_override = k;
    }
    return options;
}

lmmes::DatasetFrame load_frame(const AnalyzeArgs& args) {
    std::set<std::string> categorical(args.categorical.begin(), args.categorical.end());
    return lmmes::read_csv_file(args.input, args.response, categorical);
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream out(path);
    if (!out) throw lmmes::IoError("cannot open output file: " + path);
    out << content;
    if (!out) throw lmmes::IoError("failed writing output file: " + path);
}

// "start:end:step" (inclusive of end up to rounding) or a comma list.
std::vector<double> parse_k_grid(const std::string& spec) {
    if (spec.empty()) throw lmmes::InvalidArgument("--k-grid is required");
    std::vector<double> grid;
    if (spec.find(':') != std::string::npos) {
        double start = 0.0, end = 0.0, step = 0.0;
        char c1 = 0, c2 = 0;
        std::istringstream is(spec);
        if (!(is >> start >> c1 >> end >> c2 >> step) || c1 != ':' || c2 != ':' || !is.eof())
            throw lmmes::InvalidArgument("cannot parse --k-grid '" + spec + "' (expected start:end:step)");
        if (step <= 0.0) throw lmmes::InvalidArgument("--k-grid step must be > 0");
        for (int i = 0;; ++i) {
            const double k = start + i * step;
            if (k > end + 1e-9 * std::max(1.0, std::fabs(end))) break;
            grid.push_back(k);
        }
    } else {
        std::istringstream is(spec);
        std::string tok;
        while (std::getline(is, tok, ',')) {
            if (tok.empty()) continue;
            grid.push_back(std::stod(tok));
        }
    }
    if (grid.empty()) throw lmmes::InvalidArgument("--k-grid '" + spec + "' yields no grid points");
    return grid;
}

int run_analyze(const AnalyzeArgs& args) {
    if (args.format != "text" && args.format != "json")
        throw lmmes::InvalidArgument("--format must be 'text' or 'json'");
    const lmmes::DatasetFrame frame = load_frame(args);
    const lmmes::ModelSpec spec{args.block1, args.block2, args.random_factors};
    const lmmes::EffectSizeReport report = lmmes::analyze(frame, spec, make_options(args));
    write_output(args.output,
                 args.format == "json" ? lmmes::report_to_json(report) : lmmes::report_to_text(report));
    return 0;
}

int run_curve(const AnalyzeArgs& args) {
    const std::vector<double> grid = parse_k_grid(args.k_grid);
    const lmmes::DatasetFrame frame = load_frame(args);
    const lmmes::ModelSpec spec{args.block1, args.block2, args.random_factors};
    const lmmes::CurveResult result = lmmes::curve(frame, spec, grid, make_options(args));
    std::ostringstream os;
    lmmes::write_curve_csv(result, os);
    write_output(args.output, os.str());
    return 0;
}

int run_generate(const GenerateArgs& args) {
    lmmes::GenConfig cfg;
    cfg.n = static_cast<Eigen::Index>(args.n);
    cfg.n_levels = static_cast<Eigen::Index>(args.levels);
    cfg.beta0 = args.beta0;
    cfg.beta1 = args.beta1;
    cfg.beta2 = args.beta2;
    cfg.sigma2 = args.sigma2;
    cfg.sigma_u2 = args.sigma_u2;
    cfg.p_group1 = args.p_group1;
    cfg.x2_mean = args.x2_mean;
    cfg.x2_sd = args.x2_sd;
    cfg.x2_x1_corr = args.x2_corr;
    cfg.group_link = args.group_link;
    cfg.seed = args.seed;
    const lmmes::DatasetFrame frame = lmmes::generate(cfg);
    std::ostringstream os;
    lmmes::write_csv(frame, os);
    write_output(args.output, os.str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"effect sizes for linear mixed models"};
    app.require_subcommand(1);

    AnalyzeArgs analyze_args;
    CLI::App* analyze_cmd = app.add_subcommand("analyze", "run the effect-size pipeline on a CSV data set");
    add_model_flags(analyze_cmd, analyze_args);
    analyze_cmd->add_option("--format", analyze_args.format, "output format: text or json")
        ->check(CLI::IsMember({"text", "json"}));

    AnalyzeArgs curve_args;
    CLI::App* curve_cmd = app.add_subcommand("curve", "sweep f2 over a grid of variance ratios");
    add_model_flags(curve_cmd, curve_args);
    curve_cmd->add_option("--k-grid", curve_args.k_grid, "grid as start:end:step or a comma list")->required();

    GenerateArgs gen_args;
    CLI::App* gen_cmd = app.add_subcommand("generate", "write a synthetic random-intercept data set");
    gen_cmd->add_option("--n", gen_args.n, "number of observations")->required();
    gen_cmd->add_option("--levels", gen_args.levels, "number of grouping-factor levels")->required();
    gen_cmd->add_option("--beta0", gen_args.beta0, "intercept")->required();
    gen_cmd->add_option("--beta1", gen_args.beta1, "X1 coefficient")->required();
    gen_cmd->add_option("--beta2", gen_args.beta2, "X2 coefficient")->required();
    gen_cmd->add_option("--sigma2", gen_args.sigma2, "error variance");
    gen_cmd->add_option("--sigma-u2", gen_args.sigma_u2, "random-intercept variance");
    gen_cmd->add_option("--p-group1", gen_args.p_group1, "marginal P(X1 = 1)");
    gen_cmd->add_option("--x2-mean", gen_args.x2_mean, "X2 location");
    gen_cmd->add_option("--x2-sd", gen_args.x2_sd, "X2 scale");
    gen_cmd->add_option("--x2-corr", gen_args.x2_corr, "X1-X2 correlation");
    gen_cmd->add_option("--group-link", gen_args.group_link, "strength of the X1-prevalence link to u");
    gen_cmd->add_option("--seed", gen_args.seed, "RNG seed");
    gen_cmd->add_option("--output", gen_args.output, "output CSV file (default: stdout)");

    try {
        app.parse(argc, argv);
        if (analyze_cmd->parsed()) return run_analyze(analyze_args);
        if (curve_cmd->parsed()) return run_curve(curve_args);
        return run_generate(gen_args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const lmmes::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const lmmes::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const lmmes::NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
