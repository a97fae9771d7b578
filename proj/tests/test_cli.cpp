#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fisher/cli.hpp"
#include "fisher/fmat.hpp"
#include "fisher/solvers.hpp"

using namespace fisher;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult run(std::vector<std::string> args) {
    args.insert(args.begin(), "fisher-solve");
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("fisher_cli_test_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("bad usage exits with 2") {
    CHECK(run({}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    const auto r = run({"bench", "--method", "nope", "--n", "4", "--m", "8"});
    CHECK(r.code == 2);
    CHECK(r.err.find("Usage") != std::string::npos);
    CHECK(run({"bench", "--n", "4"}).code == 2);
}

TEST_CASE("bench prints one CSV row") {
    const auto r = run({"bench", "--method", "chol", "--n", "8", "--m", "300", "--lambda", "1e-3", "--seed", "0",
                        "--repeats", "2", "--warmup", "0"});
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string header, row, extra;
    std::getline(lines, header);
    std::getline(lines, row);
    CHECK(header == "method,n,m,lambda,seed,repeats,median_s,min_s,rel_residual,status");
    CHECK(row.starts_with("chol,8,300,0.001,0,2,"));
    CHECK(row.ends_with(",ok"));
    CHECK_FALSE(std::getline(lines, extra));
}

TEST_CASE("bench rows are byte-stable apart from timing columns") {
    auto strip_timing = [](const std::string& out) {
        std::string row = out.substr(out.find('\n') + 1);
        std::vector<std::string> cols;
        std::stringstream ss(row);
        for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
        cols[6] = cols[7] = "";
        std::string joined;
        for (const auto& c : cols) joined += c + ",";
        return joined;
    };
    const std::vector<std::string> args{"bench", "--method", "eigh", "--n", "6", "--m", "100", "--seed", "3",
                                        "--repeats", "1", "--warmup", "0"};
    CHECK(strip_timing(run(args).out) == strip_timing(run(args).out));
}

TEST_CASE("bench failure modes") {
    const auto refused = run({"bench", "--method", "naive", "--n", "1", "--m", "5000", "--repeats", "1",
                              "--warmup", "0", "--no-header"});
    CHECK(refused.code == 1);
    CHECK(refused.out.find(",refused") != std::string::npos);

    const auto realpart = run({"bench", "--method", "chol", "--kind", "complex", "--variant", "realpart", "--n", "3",
                               "--m", "40", "--repeats", "1", "--warmup", "0"});
    CHECK(realpart.code == 0);
    CHECK(realpart.err.find("effective n = 6") != std::string::npos);

    CHECK(run({"bench", "--method", "chol", "--variant", "hermitian", "--n", "3", "--m", "40"}).code == 1);
}

TEST_CASE("check runs the oracle comparison") {
    const auto r = run({"check", "--n", "8", "--m", "64", "--seed", "42"});
    CHECK(r.code == 0);
    CHECK(r.out.find("check passed") != std::string::npos);
    CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("scaling prints rows and a fit") {
    const auto r = run({"scaling", "--method", "chol", "--fix", "n=4", "--vary", "m=2000:16000:3", "--repeats", "1",
                        "--warmup", "0"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("chol,4,2000,") != std::string::npos);
    CHECK(r.out.find("chol,4,16000,") != std::string::npos);
    CHECK(r.out.find("# scaling method=chol fixed n=4 vary m exponent=") != std::string::npos);
    CHECK(run({"scaling", "--fix", "n=4", "--vary", "n=10:100:3"}).code == 2);
    CHECK(run({"scaling", "--fix", "q=4", "--vary", "m=10:100:3"}).code == 2);
}

TEST_CASE("gen then solve round trip") {
    TempDir tmp;
    const std::string prefix = (tmp.path / "p").string();
    REQUIRE(run({"gen", "--n", "5", "--m", "30", "--seed", "9", "--kind", "structured", "--out", prefix}).code == 0);
    const std::string s_bytes = slurp(prefix + ".S.fmat");
    REQUIRE(run({"gen", "--n", "5", "--m", "30", "--seed", "9", "--kind", "structured", "--out", prefix}).code == 0);
    CHECK(slurp(prefix + ".S.fmat") == s_bytes);

    const std::string x1 = (tmp.path / "x1.fmat").string(), x2 = (tmp.path / "x2.fmat").string();
    REQUIRE(run({"solve", prefix + ".S.fmat", prefix + ".v.fmat", "--lambda", "0.01", "--out", x1}).code == 0);
    REQUIRE(run({"solve", prefix + ".S.fmat", prefix + ".v.fmat", "--lambda", "0.01", "--out", x2}).code == 0);
    CHECK(slurp(x1) == slurp(x2));

    const auto S = std::get<ScoreMatrix<double>>(read_fmat(std::filesystem::path(prefix + ".S.fmat")));
    const auto v = std::get<ScoreMatrix<double>>(read_fmat(std::filesystem::path(prefix + ".v.fmat")));
    const auto x = std::get<ScoreMatrix<double>>(read_fmat(std::filesystem::path(x1)));
    const DampedSystem<double> sys(S, 0.01, v.col(0));
    CHECK(residual(sys, Vector<double>(x.col(0)), Variant::Plain).rel <= 1e-8);

    const std::string xr = (tmp.path / "xr.fmat").string();
    REQUIRE(run({"solve", prefix + ".S.fmat", prefix + ".f.fmat", "--lambda", "0.01", "--method", "rvb", "--out",
                 xr}).code == 0);
    const auto xrvb = std::get<ScoreMatrix<double>>(read_fmat(std::filesystem::path(xr)));
    CHECK((xrvb - x).norm() <= 1e-8 * std::max(1.0, x.norm()));

    CHECK(run({"solve", prefix + ".S.fmat", prefix + ".v.fmat", "--lambda", "0", "--out", x1}).code == 1);
    CHECK(run({"solve", (tmp.path / "missing.fmat").string(), prefix + ".v.fmat", "--lambda", "1", "--out", x1})
              .code == 1);
}

TEST_CASE("complex solve variants through files") {
    TempDir tmp;
    const std::string prefix = (tmp.path / "c").string();
    REQUIRE(run({"gen", "--n", "3", "--m", "20", "--kind", "complex", "--variant", "realpart", "--out", prefix})
                .code == 0);
    const std::string x = (tmp.path / "x.fmat").string();
    REQUIRE(run({"solve", prefix + ".S.fmat", prefix + ".v.fmat", "--lambda", "0.1", "--variant", "realpart",
                 "--out", x}).code == 0);
    CHECK(std::holds_alternative<ScoreMatrix<double>>(read_fmat(std::filesystem::path(x))));
    REQUIRE(run({"solve", prefix + ".S.fmat", prefix + ".v.fmat", "--lambda", "0.1", "--out", x}).code == 0);
    CHECK(std::holds_alternative<ScoreMatrix<cplx>>(read_fmat(std::filesystem::path(x))));
    CHECK(run({"solve", prefix + ".S.fmat", prefix + ".v.fmat", "--lambda", "0.1", "--variant", "plain", "--out", x})
              .code == 2);
}
