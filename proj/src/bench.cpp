#include "fisher/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "fisher/rng.hpp"
#include "fisher/solvers.hpp"

namespace fisher {

namespace {

void check_shape(Eigen::Index n, Eigen::Index m, std::size_t scalar_bytes) {
    if (n < 1 || m < 1)
        throw std::invalid_argument("problem dimensions must be >= 1, got n=" + std::to_string(n) +
                                    " m=" + std::to_string(m));
    const auto limit = static_cast<std::size_t>(std::numeric_limits<std::ptrdiff_t>::max()) / scalar_bytes;
    if (static_cast<std::size_t>(n) > limit / static_cast<std::size_t>(m))
        throw std::length_error("problem of size " + std::to_string(n) + "x" + std::to_string(m) +
                                " exceeds addressable memory");
}

std::string format_double(double value) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ec == std::errc() ? end : buf);
}

struct Outcome {
    double seconds = 0.0;
    double rel_residual = 0.0;
    bool converged = true;
    double probe = 0.0;
};

template <typename Scalar>
Outcome outcome_of(const Solution<Scalar>& sol, double extra_seconds = 0.0) {
    Outcome o;
    o.seconds = sol.wall_seconds + extra_seconds;
    o.rel_residual = sol.rel_residual;
    o.converged = sol.converged;
    o.probe = sol.x.size() > 0 ? std::abs(sol.x(0)) : 0.0;
    return o;
}

template <typename Scalar>
Outcome run_same_kind(const DampedSystem<Scalar>& system, Method method, const BenchOptions& options,
                      const Vector<Scalar>* f) {
    switch (method) {
        case Method::Chol:
            return outcome_of(solve_chol(system));
        case Method::SvdEigh:
            return outcome_of(solve_svd_eigh(system));
        case Method::SvdDirect:
            return outcome_of(solve_svd_direct(system));
        case Method::Naive:
            return outcome_of(solve_naive(system, options.naive_cap));
        case Method::Rvb:
            return outcome_of(solve_rvb(system.S(), system.lambda(), *f));
        case Method::Cg:
            return outcome_of(solve_cg(system, options.cg_tol, options.cg_max_iter));
    }
    throw std::invalid_argument("unknown method");
}

Outcome run_realpart(const DampedSystem<cplx>& system, Method method, const BenchOptions& options) {
    switch (method) {
        case Method::Chol:
            return outcome_of(solve_realpart(system));
        case Method::Naive:
            return outcome_of(solve_naive_realpart(system, options.naive_cap));
        default: {
            detail::Stopwatch clock;
            DampedSystem<double> stacked(concat_real_imag(system.S()), system.lambda(), system.v().real());
            const double concat_seconds = clock.seconds();
            Outcome o = run_same_kind<double>(stacked, method, options, nullptr);
            o.seconds += concat_seconds;
            return o;
        }
    }
}

template <typename Scalar>
void check_supported(Method method, Variant variant, const Vector<Scalar>* f) {
    if constexpr (is_complex_v<Scalar>) {
        if (variant == Variant::Plain)
            throw std::invalid_argument("complex scores need the hermitian or realpart variant");
        if (variant == Variant::RealPart && method == Method::Rvb)
            throw std::invalid_argument("rvb is not available for the realpart variant");
    } else {
        if (variant != Variant::Plain)
            throw std::invalid_argument(std::string(to_string(variant)) + " variant needs complex scores");
    }
    if (method == Method::Rvb && f == nullptr)
        throw std::invalid_argument("rvb needs the coefficient vector f (use a structured problem)");
}

template <typename Scalar>
Outcome run_once(const DampedSystem<Scalar>& system, Method method, const BenchOptions& options,
                 const Vector<Scalar>* f) {
    if constexpr (is_complex_v<Scalar>) {
        if (options.variant == Variant::RealPart) return run_realpart(system, method, options);
    }
    return run_same_kind(system, method, options, f);
}

}  // namespace

ProblemKind parse_problem_kind(std::string_view name) {
    if (name == "real") return ProblemKind::RealGaussian;
    if (name == "complex") return ProblemKind::ComplexGaussian;
    if (name == "structured") return ProblemKind::Structured;
    throw std::invalid_argument("unknown problem kind '" + std::string(name) + "'");
}

Problem<double> generate_real_problem(std::uint64_t seed, Eigen::Index n, Eigen::Index m, double lambda,
                                      bool structured) {
    check_shape(n, m, sizeof(double));
    validate_lambda(lambda);
    Xoshiro256 rng(seed);
    ScoreMatrix<double> S(n, m);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j) S(i, j) = rng.normal();
    S /= std::sqrt(static_cast<double>(n));

    if (!structured) {
        Vector<double> v(m);
        for (Eigen::Index j = 0; j < m; ++j) v(j) = rng.normal();
        return {DampedSystem<double>(std::move(S), lambda, std::move(v)), std::nullopt};
    }
    Vector<double> f(n);
    for (Eigen::Index i = 0; i < n; ++i) f(i) = rng.normal();
    Vector<double> v = S.transpose() * f;
    return {DampedSystem<double>(std::move(S), lambda, std::move(v)), std::move(f)};
}

Problem<cplx> generate_complex_problem(std::uint64_t seed, Eigen::Index n, Eigen::Index m, double lambda,
                                       bool real_rhs) {
    check_shape(n, m, sizeof(cplx));
    validate_lambda(lambda);
    Xoshiro256 rng(seed);
    ScoreMatrix<cplx> S(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            const double re = rng.normal();
            const double im = rng.normal();
            S(i, j) = cplx(re, im);
        }
    }
    S /= std::sqrt(static_cast<double>(n));
    Vector<cplx> v(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const double re = rng.normal();
        const double im = real_rhs ? 0.0 : rng.normal();
        v(j) = cplx(re, im);
    }
    return {DampedSystem<cplx>(std::move(S), lambda, std::move(v)), std::nullopt};
}

AnyProblem generate_problem(std::uint64_t seed, Eigen::Index n, Eigen::Index m, double lambda, ProblemKind kind) {
    switch (kind) {
        case ProblemKind::RealGaussian:
            return generate_real_problem(seed, n, m, lambda, false);
        case ProblemKind::Structured:
            return generate_real_problem(seed, n, m, lambda, true);
        case ProblemKind::ComplexGaussian:
            return generate_complex_problem(seed, n, m, lambda, false);
    }
    throw std::invalid_argument("unknown problem kind");
}

std::string_view to_string(RunStatus status) {
    switch (status) {
        case RunStatus::Ok:
            return "ok";
        case RunStatus::Failed:
            return "failed";
        case RunStatus::NotConverged:
            return "not_converged";
        case RunStatus::Refused:
            return "refused";
        case RunStatus::Error:
            return "error";
    }
    return "error";
}

double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) return values[mid];
    return 0.5 * (values[mid - 1] + values[mid]);
}

template <typename Scalar>
BenchRecord time_method(const DampedSystem<Scalar>& system, Method method, const BenchOptions& options,
                        const Vector<Scalar>* f) {
    if (options.warmup < 0) throw std::invalid_argument("warmup must be >= 0");
    if (options.repeats < 1) throw std::invalid_argument("repeats must be >= 1");
    check_supported<Scalar>(method, options.variant, f);

    BenchRecord record;
    record.method = method;
    record.variant = options.variant;
    record.n = system.rows();
    record.m = system.cols();
    record.effective_n = options.variant == Variant::RealPart ? 2 * system.rows() : system.rows();
    record.lambda = system.lambda();
    record.seed = options.seed;
    record.repeats = options.repeats;

    volatile double sink = 0.0;
    Outcome last;
    try {
        for (int i = 0; i < options.warmup; ++i) sink = sink + run_once(system, method, options, f).probe;
        for (int i = 0; i < options.repeats; ++i) {
            last = run_once(system, method, options, f);
            sink = sink + last.probe;
            record.samples.push_back(last.seconds);
        }
    } catch (const OracleRefused& e) {
        record.status = RunStatus::Refused;
        record.message = e.what();
        return record;
    } catch (const FactorizationError& e) {
        record.status = RunStatus::Failed;
        record.message = e.what();
        return record;
    } catch (const std::exception& e) {
        record.status = RunStatus::Error;
        record.message = e.what();
        return record;
    }

    record.median_seconds = median(record.samples);
    record.min_seconds = *std::min_element(record.samples.begin(), record.samples.end());
    record.rel_residual = last.rel_residual;
    if (!last.converged) {
        record.status = RunStatus::NotConverged;
    } else if (!(last.rel_residual <= kRecordResidualLimit)) {
        record.status = RunStatus::Failed;
        record.message = "relative residual " + format_double(last.rel_residual) + " above limit";
    }
    return record;
}

template BenchRecord time_method<double>(const DampedSystem<double>&, Method, const BenchOptions&,
                                         const Vector<double>*);
template BenchRecord time_method<cplx>(const DampedSystem<cplx>&, Method, const BenchOptions&,
                                       const Vector<cplx>*);

ScalingFit fit_power_law(std::span<const std::pair<double, double>> points, Axis axis) {
    if (points.size() < 3) throw std::invalid_argument("scaling fit needs at least 3 points");
    const auto [lo, hi] = std::minmax_element(points.begin(), points.end(),
                                              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (!(lo->first > 0.0) || hi->first < 4.0 * lo->first)
        throw std::invalid_argument("scaling fit needs sizes spanning at least 4x");

    const auto count = static_cast<double>(points.size());
    double mean_x = 0.0, mean_y = 0.0;
    for (const auto& [size, seconds] : points) {
        if (!(seconds > 0.0)) throw std::invalid_argument("scaling fit needs positive timings");
        mean_x += std::log(size);
        mean_y += std::log(seconds);
    }
    mean_x /= count;
    mean_y /= count;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [size, seconds] : points) {
        const double dx = std::log(size) - mean_x;
        const double dy = std::log(seconds) - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    ScalingFit fit;
    fit.axis = axis;
    fit.exponent = sxy / sxx;
    const double ss_res = std::max(0.0, syy - fit.exponent * sxy);
    fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    fit.points.assign(points.begin(), points.end());
    return fit;
}

ScalingFit fit_scaling(std::span<const BenchRecord> records, Axis axis) {
    if (records.size() < 3) throw std::invalid_argument("scaling fit needs at least 3 records");
    std::set<Eigen::Index> fixed;
    std::vector<std::pair<double, double>> points;
    for (const auto& r : records) {
        if (r.method != records.front().method)
            throw std::invalid_argument("scaling fit needs records of a single method");
        if (r.status != RunStatus::Ok)
            throw std::invalid_argument("scaling fit got a record with status " + std::string(to_string(r.status)));
        fixed.insert(axis == Axis::VaryN ? r.m : r.n);
        points.emplace_back(static_cast<double>(axis == Axis::VaryN ? r.n : r.m), r.median_seconds);
    }
    if (fixed.size() != 1) throw std::invalid_argument("scaling fit needs a common fixed dimension");
    return fit_power_law(points, axis);
}

std::string csv_header() { return "method,n,m,lambda,seed,repeats,median_s,min_s,rel_residual,status"; }

std::string to_csv_row(const BenchRecord& r) {
    std::ostringstream out;
    out << to_string(r.method) << ',' << r.n << ',' << r.m << ',' << format_double(r.lambda) << ',' << r.seed << ','
        << r.repeats << ',' << format_double(r.median_seconds) << ',' << format_double(r.min_seconds) << ','
        << format_double(r.rel_residual) << ',' << to_string(r.status);
    return out.str();
}

int configure_threads_from_env() {
    if (const char* env = std::getenv("FISHER_SOLVE_THREADS")) {
        int threads = 0;
        const std::string_view text(env);
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), threads);
        if (ec != std::errc() || ptr != text.data() + text.size() || threads < 0)
            throw std::invalid_argument("FISHER_SOLVE_THREADS must be a non-negative integer, got '" +
                                        std::string(text) + "'");
        if (threads > 0) Eigen::setNbThreads(threads);
    }
    return Eigen::nbThreads();
}

}  // namespace fisher
