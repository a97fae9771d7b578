#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <variant>

#include "fisher/types.hpp"

namespace fisher {

// FMAT v1 layout, all integers and floats little-endian:
//   "FMAT" | 0x01 | scalar byte (0 real64, 1 complex128) | rows u64 | cols u64
//   | row-major payload (complex entries interleaved re, im)
// Vectors are stored as rows x 1.

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using AnyMatrix = std::variant<ScoreMatrix<double>, ScoreMatrix<cplx>>;

void write_fmat(std::ostream& out, const ScoreMatrix<double>& matrix);
void write_fmat(std::ostream& out, const ScoreMatrix<cplx>& matrix);
AnyMatrix read_fmat(std::istream& in);

void write_fmat(const std::filesystem::path& path, const ScoreMatrix<double>& matrix);
void write_fmat(const std::filesystem::path& path, const ScoreMatrix<cplx>& matrix);
AnyMatrix read_fmat(const std::filesystem::path& path);

template <typename Scalar>
ScoreMatrix<Scalar> as_column(const Vector<Scalar>& v) {
    return ScoreMatrix<Scalar>(Eigen::Map<const ScoreMatrix<Scalar>>(v.data(), v.size(), 1));
}

}  // namespace fisher
