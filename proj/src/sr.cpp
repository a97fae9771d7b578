#include "fisher/sr.hpp"

namespace fisher {

ScoreMatrix<double> concat_real_imag(const ScoreMatrix<cplx>& S) {
    validate_scores(S);
    const Eigen::Index n = S.rows();
    ScoreMatrix<double> C(2 * n, S.cols());
    C.topRows(n) = S.real();
    C.bottomRows(n) = S.imag();
    return C;
}

}  // namespace fisher
