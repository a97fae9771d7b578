#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fisher/core.hpp"

namespace fisher {

enum class ProblemKind { RealGaussian, ComplexGaussian, Structured };

ProblemKind parse_problem_kind(std::string_view name);

/// A generated system. Structured problems also carry f with v = S^T f.
template <typename Scalar>
struct Problem {
    DampedSystem<Scalar> system;
    std::optional<Vector<Scalar>> f;
};

using AnyProblem = std::variant<Problem<double>, Problem<cplx>>;

/// S and v (or f) drawn as i.i.d. standard normals from Xoshiro256 in
/// row-major order, S scaled by 1/sqrt(n). Structured problems draw f after S
/// and set v = S^T f.
Problem<double> generate_real_problem(std::uint64_t seed, Eigen::Index n, Eigen::Index m, double lambda,
                                      bool structured = false);

/// Complex entries draw the real part then the imaginary part. With
/// real_rhs the imaginary parts of v are skipped (zero), for the real-part
/// variant.
Problem<cplx> generate_complex_problem(std::uint64_t seed, Eigen::Index n, Eigen::Index m, double lambda,
                                       bool real_rhs = false);

AnyProblem generate_problem(std::uint64_t seed, Eigen::Index n, Eigen::Index m, double lambda, ProblemKind kind);

enum class RunStatus { Ok, Failed, NotConverged, Refused, Error };

std::string_view to_string(RunStatus status);

inline constexpr double kRecordResidualLimit = 1e-6;

struct BenchOptions {
    int warmup = 2;
    int repeats = 5;
    Variant variant = Variant::Plain;
    std::uint64_t seed = 0;  // copied into the record only
    double cg_tol = 1e-10;
    long cg_max_iter = 10000;
    Eigen::Index naive_cap = 4096;
};

struct BenchRecord {
    Method method = Method::Chol;
    Variant variant = Variant::Plain;
    Eigen::Index n = 0;
    Eigen::Index m = 0;
    Eigen::Index effective_n = 0;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    int repeats = 0;
    double median_seconds = 0.0;
    double min_seconds = 0.0;
    double rel_residual = 0.0;
    RunStatus status = RunStatus::Ok;
    std::string message;
    std::vector<double> samples;
};

/// Runs warmup unmeasured solves then repeats measured ones; records the
/// median and minimum solver wall time and the residual of the last solve.
/// Solver failures land in the record's status. Method / scalar-kind
/// mismatches throw std::invalid_argument. Rvb needs f.
template <typename Scalar>
BenchRecord time_method(const DampedSystem<Scalar>& system, Method method, const BenchOptions& options,
                        const Vector<Scalar>* f = nullptr);

double median(std::vector<double> values);

enum class Axis { VaryN, VaryM };

struct ScalingFit {
    Axis axis = Axis::VaryM;
    double exponent = 0.0;
    double r_squared = 0.0;
    std::vector<std::pair<double, double>> points;  // (size, median seconds)
};

/// Least-squares slope of log(seconds) against log(size).
ScalingFit fit_power_law(std::span<const std::pair<double, double>> points, Axis axis);

/// Needs >= 3 records of one method with a common fixed dimension and sizes
/// spanning at least 4x.
ScalingFit fit_scaling(std::span<const BenchRecord> records, Axis axis);

std::string csv_header();
std::string to_csv_row(const BenchRecord& record);

/// Applies FISHER_SOLVE_THREADS (0 or unset = library default). Returns the
/// thread count in effect.
int configure_threads_from_env();

}  // namespace fisher
