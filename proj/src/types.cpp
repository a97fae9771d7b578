#include "fisher/types.hpp"

#include <array>
#include <utility>

namespace fisher {

namespace {

constexpr std::array<std::pair<Method, std::string_view>, 6> kMethodNames{{
    {Method::Chol, "chol"},
    {Method::SvdEigh, "eigh"},
    {Method::SvdDirect, "svd"},
    {Method::Naive, "naive"},
    {Method::Rvb, "rvb"},
    {Method::Cg, "cg"},
}};

constexpr std::array<std::pair<Variant, std::string_view>, 3> kVariantNames{{
    {Variant::Plain, "plain"},
    {Variant::Hermitian, "hermitian"},
    {Variant::RealPart, "realpart"},
}};

}  // namespace

std::string_view to_string(Method method) {
    for (const auto& [m, name] : kMethodNames)
        if (m == method) return name;
    return "unknown";
}

std::string_view to_string(Variant variant) {
    for (const auto& [v, name] : kVariantNames)
        if (v == variant) return name;
    return "unknown";
}

std::string_view to_string(ScalarKind kind) { return kind == ScalarKind::Real64 ? "real64" : "complex128"; }

Method parse_method(std::string_view name) {
    for (const auto& [m, n] : kMethodNames)
        if (n == name) return m;
    throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

Variant parse_variant(std::string_view name) {
    for (const auto& [v, n] : kVariantNames)
        if (n == name) return v;
    throw std::invalid_argument("unknown variant '" + std::string(name) + "'");
}

}  // namespace fisher
