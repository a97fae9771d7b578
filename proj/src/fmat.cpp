#include "fisher/fmat.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

namespace fisher {

namespace {

constexpr std::array<char, 4> kMagic{'F', 'M', 'A', 'T'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kReal = 0;
constexpr std::uint8_t kComplex = 1;

void put_u64(std::ostream& out, std::uint64_t value) {
    std::array<char, 8> bytes;
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
    out.write(bytes.data(), bytes.size());
}

std::uint64_t get_u64(std::istream& in) {
    std::array<unsigned char, 8> bytes;
    if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size()))
        throw FormatError("FMAT: truncated stream");
    std::uint64_t value = 0;
    for (int i = 0; i < 8; ++i) value |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return value;
}

void put_f64(std::ostream& out, double value) { put_u64(out, std::bit_cast<std::uint64_t>(value)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

void put_header(std::ostream& out, std::uint8_t scalar, Eigen::Index rows, Eigen::Index cols) {
    out.write(kMagic.data(), kMagic.size());
    out.put(static_cast<char>(kVersion));
    out.put(static_cast<char>(scalar));
    put_u64(out, static_cast<std::uint64_t>(rows));
    put_u64(out, static_cast<std::uint64_t>(cols));
}

template <typename Scalar>
ScoreMatrix<Scalar> read_payload(std::istream& in, std::uint64_t rows, std::uint64_t cols) {
    constexpr std::uint64_t limit = static_cast<std::uint64_t>(std::numeric_limits<Eigen::Index>::max());
    if (rows > limit || cols > limit || (cols != 0 && rows > limit / cols / sizeof(Scalar)))
        throw FormatError("FMAT: dimensions " + std::to_string(rows) + "x" + std::to_string(cols) + " too large");
    ScoreMatrix<Scalar> m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if constexpr (is_complex_v<Scalar>) {
                const double re = get_f64(in);
                const double im = get_f64(in);
                m(i, j) = Scalar(re, im);
            } else {
                m(i, j) = get_f64(in);
            }
        }
    }
    return m;
}

template <typename Matrix>
void write_file(const std::filesystem::path& path, const Matrix& matrix) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_fmat(out, matrix);
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

void write_fmat(std::ostream& out, const ScoreMatrix<double>& matrix) {
    put_header(out, kReal, matrix.rows(), matrix.cols());
    for (Eigen::Index i = 0; i < matrix.rows(); ++i)
        for (Eigen::Index j = 0; j < matrix.cols(); ++j) put_f64(out, matrix(i, j));
}

void write_fmat(std::ostream& out, const ScoreMatrix<cplx>& matrix) {
    put_header(out, kComplex, matrix.rows(), matrix.cols());
    for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
        for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
            put_f64(out, matrix(i, j).real());
            put_f64(out, matrix(i, j).imag());
        }
    }
}

AnyMatrix read_fmat(std::istream& in) {
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw FormatError("FMAT: bad magic");
    const int version = in.get();
    if (version != kVersion) throw FormatError("FMAT: unsupported version " + std::to_string(version));
    const int scalar = in.get();
    const std::uint64_t rows = get_u64(in);
    const std::uint64_t cols = get_u64(in);
    if (scalar == kReal) return read_payload<double>(in, rows, cols);
    if (scalar == kComplex) return read_payload<cplx>(in, rows, cols);
    throw FormatError("FMAT: unknown scalar byte " + std::to_string(scalar));
}

void write_fmat(const std::filesystem::path& path, const ScoreMatrix<double>& matrix) { write_file(path, matrix); }
void write_fmat(const std::filesystem::path& path, const ScoreMatrix<cplx>& matrix) { write_file(path, matrix); }

AnyMatrix read_fmat(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_fmat(in);
}

}  // namespace fisher
