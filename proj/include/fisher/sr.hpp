#pragma once

#include <cmath>

#include "fisher/core.hpp"

namespace fisher {

/// Raw per-sample log-derivatives O_ij = d log psi(x_i) / d theta_j.
template <typename Scalar>
using RawScores = ScoreMatrix<Scalar>;

/// S = (O - mean_over_rows(O)) / sqrt(n).
template <typename Scalar>
ScoreMatrix<Scalar> center_scores(const RawScores<Scalar>& O) {
    validate_scores(O);
    const auto n = static_cast<double>(O.rows());
    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> mean = O.colwise().mean();
    ScoreMatrix<Scalar> S = O.rowwise() - mean;
    S /= std::sqrt(n);
    return S;
}

/// Stacks Re(S) on top of Im(S) into a real 2n x m matrix C, for which
/// C^T C = Re[S^H S].
ScoreMatrix<double> concat_real_imag(const ScoreMatrix<cplx>& S);

}  // namespace fisher
