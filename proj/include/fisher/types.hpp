#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace fisher {

using cplx = std::complex<double>;

// Scores are stored one sample per row so that S S^T contracts over the long
// axis with unit stride.
template <typename Scalar>
using ScoreMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
inline constexpr bool is_complex_v = Eigen::NumTraits<Scalar>::IsComplex;

enum class ScalarKind { Real64, Complex128 };

template <typename Scalar>
inline constexpr ScalarKind scalar_kind_v = is_complex_v<Scalar> ? ScalarKind::Complex128 : ScalarKind::Real64;

enum class Method { Chol, SvdEigh, SvdDirect, Naive, Rvb, Cg };

/// Which operator the system uses: S^T S (real), S^H S (complex) or Re[S^H S]
/// (complex scores, real right-hand side and solution).
enum class Variant { Plain, Hermitian, RealPart };

std::string_view to_string(Method method);
std::string_view to_string(Variant variant);
std::string_view to_string(ScalarKind kind);
Method parse_method(std::string_view name);
Variant parse_variant(std::string_view name);

/// Cholesky of the n x n Gram matrix hit a non-positive pivot. Only reachable
/// through catastrophic round-off since lambda > 0; retry with a larger lambda.
class FactorizationError : public std::runtime_error {
public:
    FactorizationError(const std::string& what, std::ptrdiff_t pivot)
        : std::runtime_error(what), pivot_(pivot) {}

    std::ptrdiff_t pivot() const noexcept { return pivot_; }

private:
    std::ptrdiff_t pivot_;
};

/// The dense m x m oracle refused a problem above its size cap.
class OracleRefused : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Integer bookkeeping of the scalar slots a solver holds at once.
struct WorkspaceStats {
    std::size_t peak_slots = 0;
    std::size_t largest_block = 0;
};

template <typename Scalar>
struct Solution {
    Vector<Scalar> x;
    Method method = Method::Chol;
    Variant variant = Variant::Plain;
    double abs_residual = 0.0;
    double rel_residual = 0.0;
    double wall_seconds = 0.0;
    std::optional<long> iterations;  // Cg only
    bool converged = true;
    WorkspaceStats workspace;
};

struct Residual {
    double abs = 0.0;
    double rel = 0.0;
};

}  // namespace fisher
