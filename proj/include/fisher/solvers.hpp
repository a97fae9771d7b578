#pragma once

#include <chrono>
#include <string>
#include <type_traits>
#include <utility>

#include "fisher/core.hpp"
#include "fisher/sr.hpp"

namespace fisher {

inline constexpr Eigen::Index kDefaultNaiveCap = 4096;
inline constexpr double kDefaultSigmaFloor = 1e-12;

namespace detail {

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

inline std::size_t slots(Eigen::Index a, Eigen::Index b = 1) {
    return static_cast<std::size_t>(a) * static_cast<std::size_t>(b);
}

template <typename Scalar, typename VDerived>
void fill_residual(Solution<Scalar>& sol, const ScoreMatrix<typename VDerived::Scalar>& S, double lambda,
                   const Eigen::MatrixBase<VDerived>& v) {
    const Residual r = residual(S, lambda, v, sol.x, sol.variant);
    sol.abs_residual = r.abs;
    sol.rel_residual = r.rel;
}

}  // namespace detail

/// Lower Cholesky factor L of W = S S^H + lambda I, plus an n-vector of
/// scratch. One solve at a time; may be moved between solves.
template <typename Scalar>
class CholWorkspace {
public:
    CholWorkspace() = default;
    CholWorkspace(const ScoreMatrix<Scalar>& S, double lambda) { factorize(S, lambda); }

    void factorize(const ScoreMatrix<Scalar>& S, double lambda) {
        L_ = gram(S, lambda);
        const Eigen::Index failed = Eigen::internal::llt_inplace<Scalar, Eigen::Lower>::blocked(L_);
        if (failed >= 0) {
            L_.resize(0, 0);
            throw FactorizationError("Cholesky of S S^T + lambda I failed at pivot " + std::to_string(failed) +
                                         "; retry with a larger lambda",
                                     failed);
        }
        L_.template triangularView<Eigen::StrictlyUpper>().setZero();
        scratch_.resize(L_.rows());
    }

    Eigen::Index size() const noexcept { return L_.rows(); }
    const Matrix<Scalar>& lower() const noexcept { return L_; }

    /// t <- (L L^H)^{-1} t via forward then back substitution.
    template <typename Derived>
    void solve_in_place(Eigen::MatrixBase<Derived>& t) const {
        L_.template triangularView<Eigen::Lower>().solveInPlace(t);
        L_.adjoint().template triangularView<Eigen::Upper>().solveInPlace(t);
    }

    /// x = (v - S^H L^{-H} L^{-1} S v) / lambda, right to left. Q = L^{-1} S
    /// is never formed.
    Vector<Scalar> apply(const ScoreMatrix<Scalar>& S, double lambda, const Vector<Scalar>& v) {
        scratch_.noalias() = S * v;
        solve_in_place(scratch_);
        Vector<Scalar> x(S.cols());
        x.noalias() = S.adjoint() * scratch_;
        x = (v - x) / lambda;
        return x;
    }

private:
    Matrix<Scalar> L_;
    Vector<Scalar> scratch_;
};

namespace detail {

template <typename Scalar>
Vector<Scalar> chol_solve(const ScoreMatrix<Scalar>& S, double lambda, const Vector<Scalar>& v,
                          WorkspaceTracker& tracker) {
    const Eigen::Index n = S.rows();
    tracker.acquire(slots(n, n));  // W, factored in place into L
    tracker.acquire(slots(n));     // S v, overwritten by both triangular solves
    CholWorkspace<Scalar> ws(S, lambda);
    tracker.acquire(slots(S.cols()));  // x
    return ws.apply(S, lambda, v);
}

}  // namespace detail

/// Solves (S^T S + lambda I) x = v in O(n^3 + n^2 m) time and O(n^2 + m)
/// extra memory.
template <typename Scalar>
Solution<Scalar> solve_chol(const DampedSystem<Scalar>& system) {
    Solution<Scalar> sol;
    sol.method = Method::Chol;
    sol.variant = default_variant<Scalar>();
    WorkspaceTracker tracker;
    detail::Stopwatch clock;
    sol.x = detail::chol_solve(system.S(), system.lambda(), system.v(), tracker);
    sol.wall_seconds = clock.seconds();
    sol.workspace = tracker.stats();
    detail::fill_residual(sol, system.S(), system.lambda(), system.v());
    return sol;
}

/// (S^H S + lambda I) x = v for complex S: every transpose becomes a conjugate
/// transpose.
inline Solution<cplx> solve_chol_hermitian(const DampedSystem<cplx>& system) { return solve_chol(system); }

/// (Re[S^H S] + lambda I) x = v with real v, through the real 2n x m
/// stacking of Re(S) and Im(S).
inline Solution<double> solve_realpart(const DampedSystem<cplx>& system) {
    if (!system.v().imag().isZero(0.0))
        throw std::invalid_argument("real-part variant needs a real right-hand side");
    Solution<double> sol;
    sol.method = Method::Chol;
    sol.variant = Variant::RealPart;
    WorkspaceTracker tracker;
    detail::Stopwatch clock;
    tracker.acquire(detail::slots(2 * system.rows(), system.cols()));
    const ScoreMatrix<double> C = concat_real_imag(system.S());
    const Vector<double> v = system.v().real();
    sol.x = detail::chol_solve(C, system.lambda(), v, tracker);
    sol.wall_seconds = clock.seconds();
    sol.workspace = tracker.stats();
    detail::fill_residual(sol, system.S(), system.lambda(), system.v());
    return sol;
}

/// Thin SVD S = U diag(sigma) V^H with sigma strictly positive and
/// nonincreasing. Rank zero (all factors empty) is valid.
template <typename Scalar>
struct ThinSvd {
    Matrix<Scalar> U;      // n x r
    Vector<double> sigma;  // r
    Matrix<Scalar> V;      // m x r

    Eigen::Index rank() const noexcept { return sigma.size(); }
};

/// Tall-and-skinny SVD through the eigendecomposition of the n x n Gram
/// S S^H = U Sigma^2 U^H, finished by V = S^H U Sigma^{-1}. Singular values
/// at or below sigma_floor * sigma_max are truncated.
template <typename Scalar>
ThinSvd<Scalar> thin_svd_eigh(const ScoreMatrix<Scalar>& S, double sigma_floor = kDefaultSigmaFloor) {
    validate_scores(S);
    if (S.rows() > S.cols())
        throw std::invalid_argument("thin_svd_eigh needs n <= m, got " + std::to_string(S.rows()) + "x" +
                                    std::to_string(S.cols()));
    if (!(sigma_floor >= 0.0)) throw std::invalid_argument("sigma_floor must be >= 0");

    const Eigen::Index n = S.rows();
    Matrix<Scalar> G = Matrix<Scalar>::Zero(n, n);
    G.template selfadjointView<Eigen::Lower>().rankUpdate(S);
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(G, Eigen::ComputeEigenvectors);
    if (eig.info() != Eigen::Success) throw FactorizationError("eigensolver did not converge", -1);

    // Eigen returns ascending eigenvalues.
    const Vector<double>& evals = eig.eigenvalues();
    const double sigma_max = std::sqrt(std::max(evals(n - 1), 0.0));
    const double cutoff = sigma_floor * sigma_max;
    Eigen::Index r = 0;
    while (r < n) {
        const double s = std::sqrt(std::max(evals(n - 1 - r), 0.0));
        if (s <= cutoff || s == 0.0) break;
        ++r;
    }

    ThinSvd<Scalar> out;
    out.U.resize(n, r);
    out.sigma.resize(r);
    for (Eigen::Index i = 0; i < r; ++i) {
        out.U.col(i) = eig.eigenvectors().col(n - 1 - i);
        out.sigma(i) = std::sqrt(evals(n - 1 - i));
    }
    out.V.noalias() = S.adjoint() * out.U;
    out.V *= out.sigma.cwiseInverse().template cast<Scalar>().asDiagonal();
    return out;
}

/// Thin SVD from a general dense routine (divide and conquer bidiagonal SVD).
/// Exact-zero singular values are dropped.
template <typename Scalar>
ThinSvd<Scalar> thin_svd_direct(const ScoreMatrix<Scalar>& S) {
    validate_scores(S);
    Eigen::BDCSVD<Matrix<Scalar>> svd(Matrix<Scalar>(S), Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw FactorizationError("dense SVD did not converge", -1);
    const auto& sv = svd.singularValues();
    Eigen::Index r = 0;
    while (r < sv.size() && sv(r) > 0.0) ++r;
    ThinSvd<Scalar> out;
    out.U = svd.matrixU().leftCols(r);
    out.sigma = sv.head(r);
    out.V = svd.matrixV().leftCols(r);
    return out;
}

/// x = V (Sigma^2 + lambda I)^{-1} V^H v + (v - V V^H v) / lambda, with V
/// applied right to left. Residuals use the factored operator
/// V Sigma^2 V^H + lambda I.
template <typename Scalar>
Solution<Scalar> solve_svd_from_factors(const ThinSvd<Scalar>& svd, double lambda,
                                        const std::type_identity_t<Vector<Scalar>>& v) {
    validate_lambda(lambda);
    if (svd.V.rows() != v.size() && svd.rank() > 0)
        throw std::invalid_argument("right-hand side length " + std::to_string(v.size()) +
                                    " does not match V with " + std::to_string(svd.V.rows()) + " rows");
    if (svd.U.cols() != svd.rank() || svd.V.cols() != svd.rank())
        throw std::invalid_argument("inconsistent SVD factor shapes");

    Solution<Scalar> sol;
    sol.method = Method::SvdEigh;
    sol.variant = default_variant<Scalar>();
    detail::Stopwatch clock;
    if (svd.rank() == 0) {
        sol.x = v / lambda;
    } else {
        const Vector<Scalar> y = svd.V.adjoint() * v;
        const Vector<Scalar> coef =
            y.cwiseQuotient((svd.sigma.array().square() + lambda).matrix().template cast<Scalar>()) - y / lambda;
        sol.x = v / lambda;
        sol.x.noalias() += svd.V * coef;
    }
    sol.wall_seconds = clock.seconds();
    sol.workspace.peak_slots = detail::slots(v.size()) + 2 * detail::slots(svd.rank());
    sol.workspace.largest_block = detail::slots(v.size());

    Vector<Scalar> Ax = lambda * sol.x;
    if (svd.rank() > 0) {
        const Vector<Scalar> Vx = svd.V.adjoint() * sol.x;
        Ax.noalias() += svd.V * (svd.sigma.array().square().matrix().template cast<Scalar>().cwiseProduct(Vx));
    }
    sol.abs_residual = (Ax - v).norm();
    sol.rel_residual = sol.abs_residual / detail::rel_floor(v.norm());
    return sol;
}

namespace detail {

template <typename Scalar>
void finish_svd_solution(Solution<Scalar>& sol, const DampedSystem<Scalar>& system, const ThinSvd<Scalar>& svd,
                         Method method, double seconds) {
    sol.method = method;
    sol.wall_seconds += seconds;
    const Eigen::Index n = system.rows(), m = system.cols(), r = svd.rank();
    WorkspaceStats ws;
    ws.largest_block = std::max(slots(m, r), slots(n, n));
    ws.peak_slots = slots(n, n) + slots(n, r) + slots(m, r) + slots(r) + sol.workspace.peak_slots;
    if (method == Method::SvdDirect) ws.peak_slots += slots(n, m);  // dense routine works on a copy
    sol.workspace = ws;
    fill_residual(sol, system.S(), system.lambda(), system.v());
}

}  // namespace detail

template <typename Scalar>
Solution<Scalar> solve_svd_eigh(const DampedSystem<Scalar>& system, double sigma_floor = kDefaultSigmaFloor) {
    detail::Stopwatch clock;
    const ThinSvd<Scalar> svd = thin_svd_eigh(system.S(), sigma_floor);
    const double factor_seconds = clock.seconds();
    Solution<Scalar> sol = solve_svd_from_factors(svd, system.lambda(), system.v());
    detail::finish_svd_solution(sol, system, svd, Method::SvdEigh, factor_seconds);
    return sol;
}

template <typename Scalar>
Solution<Scalar> solve_svd_direct(const DampedSystem<Scalar>& system) {
    detail::Stopwatch clock;
    const ThinSvd<Scalar> svd = thin_svd_direct(system.S());
    const double factor_seconds = clock.seconds();
    Solution<Scalar> sol = solve_svd_from_factors(svd, system.lambda(), system.v());
    detail::finish_svd_solution(sol, system, svd, Method::SvdDirect, factor_seconds);
    return sol;
}

namespace detail {

inline void check_naive_cap(Eigen::Index m, Eigen::Index cap) {
    if (m > cap)
        throw OracleRefused("dense oracle refuses m = " + std::to_string(m) + " (cap " + std::to_string(cap) +
                            "); it forms an m x m matrix");
}

}  // namespace detail

/// Dense oracle: forms A = S^H S + lambda I (m x m) and solves with LDL^T.
template <typename Scalar>
Solution<Scalar> solve_naive(const DampedSystem<Scalar>& system, Eigen::Index cap = kDefaultNaiveCap) {
    detail::check_naive_cap(system.cols(), cap);
    Solution<Scalar> sol;
    sol.method = Method::Naive;
    sol.variant = default_variant<Scalar>();
    detail::Stopwatch clock;
    const Eigen::Index m = system.cols();
    Matrix<Scalar> A = Matrix<Scalar>::Identity(m, m) * Scalar(system.lambda());
    A.template selfadjointView<Eigen::Lower>().rankUpdate(system.S().adjoint());
    sol.x = A.template selfadjointView<Eigen::Lower>().ldlt().solve(system.v());
    sol.wall_seconds = clock.seconds();
    sol.workspace.peak_slots = 2 * detail::slots(m, m) + detail::slots(m);
    sol.workspace.largest_block = detail::slots(m, m);
    detail::fill_residual(sol, system.S(), system.lambda(), system.v());
    return sol;
}

/// Dense oracle for (Re[S^H S] + lambda I) x = v.
inline Solution<double> solve_naive_realpart(const DampedSystem<cplx>& system, Eigen::Index cap = kDefaultNaiveCap) {
    detail::check_naive_cap(system.cols(), cap);
    if (!system.v().imag().isZero(0.0))
        throw std::invalid_argument("real-part variant needs a real right-hand side");
    Solution<double> sol;
    sol.method = Method::Naive;
    sol.variant = Variant::RealPart;
    detail::Stopwatch clock;
    const Eigen::Index m = system.cols();
    Matrix<double> A = (system.S().adjoint() * system.S()).real();
    A.diagonal().array() += system.lambda();
    sol.x = A.ldlt().solve(Vector<double>(system.v().real()));
    sol.wall_seconds = clock.seconds();
    sol.workspace.peak_slots = 4 * detail::slots(m, m) + detail::slots(m);
    sol.workspace.largest_block = 2 * detail::slots(m, m);
    detail::fill_residual(sol, system.S(), system.lambda(), system.v());
    return sol;
}

/// x = S^H (S S^H + lambda I)^{-1} f, the least-squares-structured solve for
/// right-hand sides v = S^H f. Residuals are reported against that v.
template <typename Scalar>
Solution<Scalar> solve_rvb(const ScoreMatrix<Scalar>& S, double lambda, const std::type_identity_t<Vector<Scalar>>& f) {
    validate_scores(S);
    validate_lambda(lambda);
    if (f.size() != S.rows())
        throw std::invalid_argument("coefficient vector has length " + std::to_string(f.size()) + ", expected " +
                                    std::to_string(S.rows()));
    Solution<Scalar> sol;
    sol.method = Method::Rvb;
    sol.variant = default_variant<Scalar>();
    WorkspaceTracker tracker;
    detail::Stopwatch clock;
    tracker.acquire(detail::slots(S.rows(), S.rows()));
    tracker.acquire(detail::slots(S.rows()));
    const CholWorkspace<Scalar> ws(S, lambda);
    Vector<Scalar> y = f;
    ws.solve_in_place(y);
    tracker.acquire(detail::slots(S.cols()));
    sol.x.noalias() = S.adjoint() * y;
    sol.wall_seconds = clock.seconds();
    sol.workspace = tracker.stats();
    const Vector<Scalar> v = S.adjoint() * f;
    detail::fill_residual(sol, S, lambda, v);
    return sol;
}

/// Unpreconditioned conjugate gradient on A = S^H S + lambda I with
/// matrix-free products. Stops once the recurrence residual drops below
/// tol * ||v||; otherwise returns the best iterate seen with converged = false.
template <typename Scalar>
Solution<Scalar> solve_cg(const DampedSystem<Scalar>& system, double tol, long max_iter) {
    if (!(tol > 0.0)) throw std::invalid_argument("cg tolerance must be > 0");
    if (max_iter < 1) throw std::invalid_argument("cg max_iter must be >= 1");
    const auto& S = system.S();
    const double lambda = system.lambda();
    const Eigen::Index m = system.cols();

    Solution<Scalar> sol;
    sol.method = Method::Cg;
    sol.variant = default_variant<Scalar>();
    detail::Stopwatch clock;

    Vector<Scalar> x = Vector<Scalar>::Zero(m);
    Vector<Scalar> r = system.v();
    Vector<Scalar> p = r;
    Vector<Scalar> Ap(m);
    Vector<Scalar> Sp(S.rows());
    Vector<Scalar> best_x = x;
    double rs = r.squaredNorm();
    double best_rs = rs;
    const double target = tol * detail::rel_floor(system.v().norm());

    long iter = 0;
    bool converged = std::sqrt(rs) <= target;
    while (!converged && iter < max_iter) {
        Sp.noalias() = S * p;
        Ap.noalias() = S.adjoint() * Sp;
        Ap += lambda * p;
        const double pAp = Eigen::numext::real(p.dot(Ap));
        if (!(pAp > 0.0)) break;
        const double alpha = rs / pAp;
        x += alpha * p;
        r -= alpha * Ap;
        ++iter;
        const double rs_new = r.squaredNorm();
        if (rs_new < best_rs) {
            best_rs = rs_new;
            best_x = x;
        }
        if (std::sqrt(rs_new) <= target) {
            converged = true;
            break;
        }
        p = r + (rs_new / rs) * p;
        rs = rs_new;
    }

    sol.x = converged ? std::move(x) : std::move(best_x);
    sol.wall_seconds = clock.seconds();
    sol.iterations = iter;
    sol.converged = converged;
    sol.workspace.peak_slots = 5 * detail::slots(m) + detail::slots(S.rows());
    sol.workspace.largest_block = detail::slots(m);
    detail::fill_residual(sol, S, lambda, system.v());
    return sol;
}

}  // namespace fisher
