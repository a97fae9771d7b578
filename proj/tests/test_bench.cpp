#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "fisher/bench.hpp"
#include "fisher/rng.hpp"
#include "fisher/solvers.hpp"

using namespace fisher;

TEST_CASE("xoshiro256** reference stream") {
    // Seeded by splitmix64(0); values from an independent Python port of the
    // reference C code.
    Xoshiro256 rng(0);
    CHECK(rng() == 0x99ec5f36cb75f2b4ULL);
    CHECK(rng() == 0xbf6e1f784956452aULL);
    CHECK(rng() == 0x1a5f849d4933e6e0ULL);
    Xoshiro256 other(1);
    CHECK(other() != 0x99ec5f36cb75f2b4ULL);
}

TEST_CASE("normals have unit variance") {
    Xoshiro256 rng(123);
    double sum = 0.0, sum_sq = 0.0;
    const int count = 200000;
    for (int i = 0; i < count; ++i) {
        const double z = rng.normal();
        sum += z;
        sum_sq += z * z;
    }
    CHECK(std::abs(sum / count) < 0.01);
    CHECK(std::abs(sum_sq / count - 1.0) < 0.02);
}

TEST_CASE("generate_problem is deterministic") {
    const auto a = generate_real_problem(42, 8, 50, 1e-3);
    const auto b = generate_real_problem(42, 8, 50, 1e-3);
    CHECK(a.system.S() == b.system.S());
    CHECK(a.system.v() == b.system.v());
    CHECK(a.system.S() != generate_real_problem(43, 8, 50, 1e-3).system.S());

    const auto c = generate_complex_problem(42, 3, 7, 1.0);
    const auto d = generate_complex_problem(42, 3, 7, 1.0);
    CHECK(c.system.S() == d.system.S());
    CHECK(c.system.v() == d.system.v());
    CHECK(generate_complex_problem(42, 3, 7, 1.0, true).system.v().imag().isZero(0.0));
}

TEST_CASE("generate_problem shapes and kinds") {
    const auto minimal = generate_real_problem(0, 1, 1, 1.0);
    CHECK(minimal.system.rows() == 1);
    CHECK(minimal.system.cols() == 1);

    const AnyProblem any = generate_problem(5, 4, 9, 0.1, ProblemKind::ComplexGaussian);
    CHECK(std::holds_alternative<Problem<cplx>>(any));

    const auto structured = std::get<Problem<double>>(generate_problem(5, 4, 9, 0.1, ProblemKind::Structured));
    REQUIRE(structured.f.has_value());
    CHECK((structured.system.v() - structured.system.S().transpose() * *structured.f).norm() == 0.0);

    const auto rvb = solve_rvb(structured.system.S(), 0.1, *structured.f);
    const auto chol = solve_chol(structured.system);
    CHECK((rvb.x - chol.x).norm() <= 1e-8 * std::max(1.0, chol.x.norm()));

    CHECK_THROWS_AS(generate_real_problem(0, 0, 4, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(generate_real_problem(0, 2, 4, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(generate_real_problem(0, Eigen::Index(1) << 40, Eigen::Index(1) << 40, 1.0), std::length_error);
}

TEST_CASE("median") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
    CHECK(median({}) == 0.0);
}

TEST_CASE("time_method records") {
    const auto problem = generate_real_problem(1, 8, 256, 1e-3, true);
    BenchOptions options;
    options.warmup = 1;
    options.repeats = 3;
    options.seed = 1;
    const BenchRecord r = time_method(problem.system, Method::Chol, options);
    CHECK(r.status == RunStatus::Ok);
    CHECK(r.samples.size() == 3);
    CHECK(r.min_seconds <= r.median_seconds);
    CHECK(r.rel_residual <= 1e-6);
    CHECK(r.effective_n == 8);

    for (const Method m : {Method::SvdEigh, Method::SvdDirect, Method::Naive, Method::Cg}) {
        CAPTURE(to_string(m));
        CHECK(time_method(problem.system, m, options).status == RunStatus::Ok);
    }
    CHECK(time_method(problem.system, Method::Rvb, options, &*problem.f).status == RunStatus::Ok);
    CHECK_THROWS_AS(time_method(problem.system, Method::Rvb, options), std::invalid_argument);

    options.repeats = 0;
    CHECK_THROWS_AS(time_method(problem.system, Method::Chol, options), std::invalid_argument);
}

TEST_CASE("time_method variants and kind mismatches") {
    const auto cx = generate_complex_problem(2, 4, 64, 1e-2, true);
    BenchOptions options;
    options.warmup = 0;
    options.repeats = 1;

    options.variant = Variant::Plain;
    CHECK_THROWS_AS(time_method(cx.system, Method::Chol, options), std::invalid_argument);

    options.variant = Variant::RealPart;
    const BenchRecord rp = time_method(cx.system, Method::Chol, options);
    CHECK(rp.status == RunStatus::Ok);
    CHECK(rp.effective_n == 8);
    CHECK(time_method(cx.system, Method::SvdEigh, options).status == RunStatus::Ok);
    CHECK(time_method(cx.system, Method::Naive, options).status == RunStatus::Ok);

    options.variant = Variant::Hermitian;
    CHECK(time_method(cx.system, Method::Chol, options).status == RunStatus::Ok);

    const auto real = generate_real_problem(2, 4, 64, 1e-2);
    CHECK_THROWS_AS(time_method(real.system, Method::Chol, options), std::invalid_argument);
}

TEST_CASE("naive oracle cap is reported as refused") {
    const auto big = generate_real_problem(0, 1, 100000, 1e-3);
    BenchOptions options;
    options.warmup = 0;
    options.repeats = 1;
    const BenchRecord r = time_method(big.system, Method::Naive, options);
    CHECK(r.status == RunStatus::Refused);
    CHECK(r.samples.empty());
}

TEST_CASE("cg non-convergence is flagged in the record") {
    const auto problem = generate_real_problem(3, 16, 64, 1e-6);
    BenchOptions options;
    options.warmup = 0;
    options.repeats = 1;
    options.cg_tol = 1e-14;
    options.cg_max_iter = 1;
    CHECK(time_method(problem.system, Method::Cg, options).status == RunStatus::NotConverged);
}

TEST_CASE("chol beats the dense oracle at n=16, m=2048") {
    const auto problem = generate_real_problem(1, 16, 2048, 1e-3);
    BenchOptions options;
    options.warmup = 1;
    options.repeats = 3;
    const auto chol = time_method(problem.system, Method::Chol, options);
    const auto naive = time_method(problem.system, Method::Naive, options);
    REQUIRE(chol.status == RunStatus::Ok);
    REQUIRE(naive.status == RunStatus::Ok);
    CHECK(chol.median_seconds < naive.median_seconds);
}

TEST_CASE("fit_power_law on exact and published data") {
    SUBCASE("exact linear law") {
        const std::vector<std::pair<double, double>> pts{{1e4, 1.0}, {2e4, 2.0}, {4e4, 4.0}};
        const ScalingFit fit = fit_power_law(pts, Axis::VaryM);
        CHECK(fit.exponent == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("published chol timings, fixed n = 2048") {
        const std::vector<std::pair<double, double>> pts{
            {1e4, 11.27}, {2e4, 17.63}, {5e4, 37.67}, {1e5, 71.27}, {2e5, 140.79}};
        // Least-squares slope computed independently: 0.8471.
        CHECK(fit_power_law(pts, Axis::VaryM).exponent == doctest::Approx(0.8471).epsilon(1e-3));
    }
    SUBCASE("published chol timings, fixed m = 1e5") {
        const std::vector<std::pair<double, double>> pts{
            {256, 1.69}, {512, 5.15}, {1024, 17.28}, {2048, 71.25}, {4096, 295.20}};
        // Least-squares slope computed independently: 1.8687.
        CHECK(fit_power_law(pts, Axis::VaryN).exponent == doctest::Approx(1.8687).epsilon(1e-3));
    }
    SUBCASE("insufficient data") {
        const std::vector<std::pair<double, double>> two{{1.0, 1.0}, {8.0, 2.0}};
        CHECK_THROWS_AS(fit_power_law(two, Axis::VaryM), std::invalid_argument);
        const std::vector<std::pair<double, double>> narrow{{1.0, 1.0}, {2.0, 2.0}, {3.0, 3.0}};
        CHECK_THROWS_AS(fit_power_law(narrow, Axis::VaryM), std::invalid_argument);
    }
}

TEST_CASE("fit_scaling validates records") {
    auto make = [](Method method, Eigen::Index n, Eigen::Index m, double seconds) {
        BenchRecord r;
        r.method = method;
        r.n = n;
        r.m = m;
        r.median_seconds = seconds;
        return r;
    };
    const std::vector<BenchRecord> good{make(Method::Chol, 4, 100, 1.0), make(Method::Chol, 4, 200, 2.0),
                                        make(Method::Chol, 4, 400, 4.0)};
    const ScalingFit fit = fit_scaling(good, Axis::VaryM);
    CHECK(fit.exponent == doctest::Approx(1.0));
    CHECK(fit.points.size() == 3);

    std::vector<BenchRecord> mixed = good;
    mixed[1].method = Method::SvdEigh;
    CHECK_THROWS_AS(fit_scaling(mixed, Axis::VaryM), std::invalid_argument);
    std::vector<BenchRecord> unfixed = good;
    unfixed[2].n = 8;
    CHECK_THROWS_AS(fit_scaling(unfixed, Axis::VaryM), std::invalid_argument);
}

TEST_CASE("CSV schema") {
    CHECK(csv_header() == "method,n,m,lambda,seed,repeats,median_s,min_s,rel_residual,status");
    BenchRecord r;
    r.method = Method::SvdEigh;
    r.n = 256;
    r.m = 100000;
    r.lambda = 1e-3;
    r.seed = 7;
    r.repeats = 5;
    r.median_seconds = 0.25;
    r.min_seconds = 0.125;
    r.rel_residual = 3e-15;
    CHECK(to_csv_row(r) == "eigh,256,100000,0.001,7,5,0.25,0.125,3e-15,ok");
    r.status = RunStatus::NotConverged;
    CHECK(to_csv_row(r).ends_with(",not_converged"));
}

TEST_CASE("thread configuration from the environment") {
    ::setenv("FISHER_SOLVE_THREADS", "1", 1);
    CHECK(configure_threads_from_env() == 1);
    ::setenv("FISHER_SOLVE_THREADS", "abc", 1);
    CHECK_THROWS_AS(configure_threads_from_env(), std::invalid_argument);
    ::unsetenv("FISHER_SOLVE_THREADS");
}
