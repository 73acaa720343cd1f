// End-to-end tests of the `lmmes` command line tool. Each test shells out to
// the binary (path injected by the build) and inspects exit codes and files.
#include "lmmes/analyze.hpp"
#include "lmmes/csv.hpp"
#include "lmmes/report_io.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef LMMES_CLI_PATH
#error "LMMES_CLI_PATH must be defined by the build"
#endif

namespace {

namespace fs = std::filesystem;

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

RunResult run_cli(const std::string& args, const std::string& env_prefix = "") {
    static int counter = 0;
    const fs::path dir = fs::temp_directory_path();
    const fs::path out = dir / ("lmmes_cli_out_" + std::to_string(++counter) + ".txt");
    const fs::path err = dir / ("lmmes_cli_err_" + std::to_string(counter) + ".txt");
    const std::string cmd = env_prefix + std::string(LMMES_CLI_PATH) + " " + args + " > " +
                            out.string() + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    RunResult res;
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    res.out = slurp(out);
    res.err = slurp(err);
    fs::remove(out);
    fs::remove(err);
    return res;
}

/// A small generated CSV on disk, shared by the analyze/curve tests.
const fs::path& sample_csv() {
    static fs::path path = [] {
        const fs::path p = fs::temp_directory_path() / "lmmes_cli_sample.csv";
        const std::string args = "generate --n 400 --levels 10 --beta0 50 --beta1 14 --beta2 5 "
                                 "--sigma2 393.4455 --sigma-u2 180.4234 --p-group1 0.313 --seed 42 "
                                 "--output " + p.string();
        REQUIRE(run_cli(args).exit_code == 0);
        return p;
    }();
    return path;
}

const std::string kModelFlags = " --response Y --block1 X1 --block2 X2 --random Z --categorical Z";

} // namespace

TEST_CASE("generate writes a deterministic CSV", "[cli]") {
    const fs::path a = fs::temp_directory_path() / "lmmes_gen_a.csv";
    const fs::path b = fs::temp_directory_path() / "lmmes_gen_b.csv";
    const std::string base = "generate --n 1000 --levels 15 --beta0 50 --beta1 14 --beta2 5 "
                             "--sigma2 393.4455 --sigma-u2 180.4234 --p-group1 0.313 --seed 7 --output ";
    REQUIRE(run_cli(base + a.string()).exit_code == 0);
    REQUIRE(run_cli(base + b.string()).exit_code == 0);
    const std::string ca = slurp(a), cb = slurp(b);
    REQUIRE(ca == cb);

    // 1001 lines: header plus one row per observation, 15 distinct Z values
    REQUIRE(std::count(ca.begin(), ca.end(), '\n') == 1001);
    std::istringstream in(ca);
    const auto frame = lmmes::read_csv(in, "Y", {"Z"});
    REQUIRE(std::get<lmmes::CategoricalColumn>(frame.column("Z")).levels.size() == 15);

    fs::remove(a);
    fs::remove(b);
}

TEST_CASE("generate output is independent of the thread cap", "[cli]") {
    const fs::path a = fs::temp_directory_path() / "lmmes_gen_t1.csv";
    const fs::path b = fs::temp_directory_path() / "lmmes_gen_t8.csv";
    const std::string base = "generate --n 500 --levels 10 --beta0 1 --beta1 2 --beta2 3 "
                             "--sigma2 4 --sigma-u2 2 --seed 99 --output ";
    REQUIRE(run_cli(base + a.string(), "LMM_ES_THREADS=1 ").exit_code == 0);
    REQUIRE(run_cli(base + b.string(), "LMM_ES_THREADS=8 ").exit_code == 0);
    REQUIRE(slurp(a) == slurp(b));
    fs::remove(a);
    fs::remove(b);
}

TEST_CASE("generate validates its configuration", "[cli]") {
    REQUIRE(run_cli("generate --n 10 --levels 15 --beta0 0 --beta1 0 --beta2 0 --seed 1").exit_code == 2);
    REQUIRE(run_cli("generate --n 10 --levels 2 --beta0 0 --beta1 0 --beta2 0 --p-group1 2 --seed 1")
                .exit_code == 2);
}

TEST_CASE("generate reports I/O failures with exit 4", "[cli]") {
    const auto res = run_cli("generate --n 20 --levels 2 --beta0 0 --beta1 1 --beta2 1 --seed 1 "
                             "--output /nonexistent-dir/out.csv");
    REQUIRE(res.exit_code == 4);
}

TEST_CASE("analyze emits a JSON report", "[cli]") {
    const auto res = run_cli("analyze --input " + sample_csv().string() + kModelFlags + " --format json");
    REQUIRE(res.exit_code == 0);
    const auto j = nlohmann::json::parse(res.out);
    REQUIRE(j["model"]["n"].get<int>() == 400);
    REQUIRE(j["variance_components"]["estimated"].get<bool>());
    REQUIRE(j["effect_size"]["f2_operational"].get<double>() > 0.0);
    REQUIRE(j["two_group"]["cohens_d"].is_number());
}

TEST_CASE("analyze with a k override matches the library pipeline byte for byte", "[cli]") {
    const auto res = run_cli("analyze --input " + sample_csv().string() + kModelFlags +
                             " --k 0.5 --format json");
    REQUIRE(res.exit_code == 0);

    const auto frame = lmmes::read_csv_file(sample_csv().string(), "Y", {"Z"});
    lmmes::AnalysisOptions opts;
    opts.k_override = Eigen::VectorXd::Constant(1, 0.5);
    const auto rep = lmmes::analyze(frame, {{"X1"}, {"X2"}, {"Z"}}, opts);
    REQUIRE(res.out == lmmes::report_to_json(rep));
}

TEST_CASE("analyze maps validation problems to exit 2", "[cli]") {
    const auto missing = run_cli("analyze --input " + sample_csv().string() +
                                 " --response NOPE --block1 X1 --categorical Z");
    REQUIRE(missing.exit_code == 2);
    REQUIRE(missing.err.find("NOPE") != std::string::npos);

    REQUIRE(run_cli("analyze --input /no/such/file.csv" + kModelFlags).exit_code == 2);
    REQUIRE(run_cli("analyze --input " + sample_csv().string() + kModelFlags + " --k -1").exit_code == 2);
    REQUIRE(run_cli("analyze --input " + sample_csv().string()).exit_code == 2); // missing required flags
    REQUIRE(run_cli("analyze --input " + sample_csv().string() + kModelFlags + " --format yaml")
                .exit_code == 2);
    REQUIRE(run_cli("frobnicate").exit_code == 2);
}

TEST_CASE("curve emits the grid and the estimated ratio", "[cli]") {
    const auto res = run_cli("curve --input " + sample_csv().string() + kModelFlags + " --k-grid 0:2:0.1");
    REQUIRE(res.exit_code == 0);
    std::istringstream in(res.out);
    std::string line;
    REQUIRE(std::getline(in, line));
    REQUIRE(line == "k,f2");
    int data_rows = 0;
    bool saw_khat_marker = false;
    while (std::getline(in, line)) {
        if (line == "# k-hat") {
            saw_khat_marker = true;
            continue;
        }
        if (!line.empty()) ++data_rows;
    }
    REQUIRE(saw_khat_marker);
    REQUIRE(data_rows == 22); // 21 grid rows plus the k-hat row
}

TEST_CASE("curve with a pinned k has exactly the grid rows", "[cli]") {
    const auto res = run_cli("curve --input " + sample_csv().string() + kModelFlags +
                             " --k-grid 0:2:0.1 --k 0");
    REQUIRE(res.exit_code == 0);
    std::istringstream in(res.out);
    std::string line;
    std::getline(in, line); // header
    std::vector<std::string> rows;
    while (std::getline(in, line))
        if (!line.empty()) rows.push_back(line);
    REQUIRE(rows.size() == 21);
    REQUIRE(res.out.find("# k-hat") == std::string::npos);

    // first row is the fixed-effects value, recomputed independently here
    const auto frame = lmmes::read_csv_file(sample_csv().string(), "Y", {"Z"});
    const auto enc = lmmes::encode_design(frame, {{"X1"}, {"X2"}, {"Z"}});
    const auto fit = lmmes::gls_fit(frame.response(), enc.x,
                                    Eigen::MatrixXd::Identity(enc.n(), enc.n()));
    const double expected = lmmes::f2_exact(fit, enc.block1_selector());
    const std::string first = rows.front();
    const auto comma = first.find(',');
    REQUIRE(first.substr(0, comma) == "0");
    REQUIRE(std::stod(first.substr(comma + 1)) == Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("curve rejects an empty grid", "[cli]") {
    REQUIRE(run_cli("curve --input " + sample_csv().string() + kModelFlags + " --k-grid 1:0:0.5")
                .exit_code == 2);
    REQUIRE(run_cli("curve --input " + sample_csv().string() + kModelFlags + " --k-grid 0:1:-0.5")
                .exit_code == 2);
}
