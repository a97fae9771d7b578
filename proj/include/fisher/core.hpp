#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "fisher/types.hpp"

namespace fisher {

template <typename Derived>
void validate_scores(const Eigen::MatrixBase<Derived>& S) {
    if (S.rows() < 1 || S.cols() < 1)
        throw std::invalid_argument("score matrix must have at least one row and one column, got " +
                                    std::to_string(S.rows()) + "x" + std::to_string(S.cols()));
    if (!S.allFinite())
        throw std::invalid_argument("score matrix contains non-finite entries");
}

inline void validate_lambda(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("damping lambda must be finite and > 0, got " + std::to_string(lambda));
}

/// The damped system (S^T S + lambda I) x = v. Immutable once constructed.
template <typename Scalar>
class DampedSystem {
public:
    DampedSystem(ScoreMatrix<Scalar> S, double lambda, Vector<Scalar> v)
        : S_(std::move(S)), lambda_(lambda), v_(std::move(v)) {
        validate_scores(S_);
        validate_lambda(lambda_);
        if (v_.size() != S_.cols())
            throw std::invalid_argument("right-hand side has length " + std::to_string(v_.size()) +
                                        " but S has " + std::to_string(S_.cols()) + " columns");
        if (!v_.allFinite()) throw std::invalid_argument("right-hand side contains non-finite entries");
    }

    const ScoreMatrix<Scalar>& S() const noexcept { return S_; }
    double lambda() const noexcept { return lambda_; }
    const Vector<Scalar>& v() const noexcept { return v_; }
    Eigen::Index rows() const noexcept { return S_.rows(); }
    Eigen::Index cols() const noexcept { return S_.cols(); }

private:
    ScoreMatrix<Scalar> S_;
    double lambda_;
    Vector<Scalar> v_;
};

/// Records how many scalar slots a solver holds simultaneously.
class WorkspaceTracker {
public:
    void acquire(std::size_t slots) {
        current_ += slots;
        stats_.peak_slots = std::max(stats_.peak_slots, current_);
        stats_.largest_block = std::max(stats_.largest_block, slots);
    }
    void release(std::size_t slots) { current_ -= std::min(slots, current_); }
    const WorkspaceStats& stats() const noexcept { return stats_; }

private:
    std::size_t current_ = 0;
    WorkspaceStats stats_;
};

/// W = S S^H + lambda I (n x n), exactly symmetric / Hermitian.
template <typename Scalar>
Matrix<Scalar> gram(const ScoreMatrix<Scalar>& S, double lambda) {
    validate_scores(S);
    validate_lambda(lambda);
    const Eigen::Index n = S.rows();
    Matrix<Scalar> W = Matrix<Scalar>::Zero(n, n);
    W.template selfadjointView<Eigen::Lower>().rankUpdate(S);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < j; ++i) W(i, j) = Eigen::numext::conj(W(j, i));
        W(j, j) = Scalar(Eigen::numext::real(W(j, j)) + lambda);
    }
    return W;
}

namespace detail {

inline double rel_floor(double norm_v) { return std::max(norm_v, std::numeric_limits<double>::epsilon()); }

template <typename Scalar, typename XScalar>
void check_variant(Variant variant) {
    constexpr bool s_cplx = is_complex_v<Scalar>;
    constexpr bool x_cplx = is_complex_v<XScalar>;
    switch (variant) {
        case Variant::Plain:
            if (s_cplx || x_cplx) throw std::invalid_argument("plain variant requires real S and x");
            return;
        case Variant::Hermitian:
            if (!s_cplx || !x_cplx) throw std::invalid_argument("hermitian variant requires complex S and x");
            return;
        case Variant::RealPart:
            if (!s_cplx || x_cplx) throw std::invalid_argument("real-part variant requires complex S and real x");
            return;
    }
}

}  // namespace detail

/// ||A x - v|| for A = S^T S + lambda I (or the chosen variant), evaluated as
/// S^H (S x) + lambda x. The m x m operator is never formed.
template <typename Scalar, typename VDerived, typename XDerived>
Residual residual(const ScoreMatrix<Scalar>& S, double lambda, const Eigen::MatrixBase<VDerived>& v,
                  const Eigen::MatrixBase<XDerived>& x, Variant variant) {
    using XScalar = typename XDerived::Scalar;
    detail::check_variant<Scalar, XScalar>(variant);
    if (x.size() != S.cols() || v.size() != S.cols())
        throw std::invalid_argument("vector length does not match the " + std::to_string(S.cols()) +
                                    " columns of S");
    Residual out;
    if constexpr (is_complex_v<Scalar> && !is_complex_v<XScalar>) {
        const Vector<Scalar> xs = x.template cast<Scalar>();
        const Vector<Scalar> Sx = S * xs;
        const Vector<double> Ax = (S.adjoint() * Sx).real() + lambda * x;
        const Vector<double> vr = v.real();
        out.abs = (Ax - vr).norm();
        out.rel = out.abs / detail::rel_floor(vr.norm());
    } else {
        const Vector<Scalar> Sx = S * x;
        const Vector<Scalar> Ax = S.adjoint() * Sx + lambda * x;
        out.abs = (Ax - v).norm();
        out.rel = out.abs / detail::rel_floor(v.norm());
    }
    return out;
}

template <typename Scalar, typename XDerived>
Residual residual(const DampedSystem<Scalar>& system, const Eigen::MatrixBase<XDerived>& x, Variant variant) {
    return residual(system.S(), system.lambda(), system.v(), x, variant);
}

template <typename Scalar>
constexpr Variant default_variant() {
    return is_complex_v<Scalar> ? Variant::Hermitian : Variant::Plain;
}

}  // namespace fisher
