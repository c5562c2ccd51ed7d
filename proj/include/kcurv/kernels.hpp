#pragma once

// Flat per-node kernels behind the n = 2 solvers and the sampler.
// Every kernel has a scalar reference and an AVX2 variant; the public entry
// points dispatch once at runtime. Both variants perform the same IEEE
// operations in the same order (no FMA contraction), so they agree bitwise.

#include <cstddef>
#include <span>

namespace kcurv::kernels {

/// Radial graph X = rho x over S^2. Derivatives are covariant, expressed in
/// the orthonormal frame (e_theta, e_phi) of the unit sphere.
struct RadialInputs {
    std::span<const double> rho;
    std::span<const double> d1, d2;           // grad rho
    std::span<const double> h11, h12, h22;    // Hess rho
};

/// Graph x -> (x, g(x)) over a planar domain.
struct GraphInputs {
    std::span<const double> gx, gy;
    std::span<const double> gxx, gxy, gyy;
};

/// Shape operator in an orthonormal tangent frame of the surface and its
/// invariants. `aux` is the support value u = <X, nu> (radial) or
/// w = sqrt(1 + |Dg|^2) (graph).
struct CurvatureOutputs {
    std::span<double> aux;
    std::span<double> a11, a12, a22;
    std::span<double> sigma1, sigma2;
    std::span<double> lambda_min, lambda_max;
};

enum class Isa { Scalar, Avx2 };

bool avx2_available() noexcept;
Isa active_isa() noexcept;
/// Overrides dispatch (tests, KCURV_FORCE_SCALAR). Requesting AVX2 on a CPU
/// without it falls back to scalar.
void set_isa(Isa isa) noexcept;

void radial_curvature(const RadialInputs& in, const CurvatureOutputs& out);
void graph_curvature(const GraphInputs& in, const CurvatureOutputs& out);

/// Elementary symmetric functions e_0..e_{l_max} of `count` spectra of length
/// n, stored entry-major: values[i * count + s] is entry i of spectrum s.
/// out[l * count + s] receives e_l of spectrum s.
void esym_batch(std::span<const double> values, int n, std::size_t count, int l_max,
                std::span<double> out);

namespace scalar {
void radial_curvature(const RadialInputs& in, const CurvatureOutputs& out);
void graph_curvature(const GraphInputs& in, const CurvatureOutputs& out);
void esym_batch(std::span<const double> values, int n, std::size_t count, int l_max,
                std::span<double> out);
}  // namespace scalar

namespace avx2 {
void radial_curvature(const RadialInputs& in, const CurvatureOutputs& out);
void graph_curvature(const GraphInputs& in, const CurvatureOutputs& out);
void esym_batch(std::span<const double> values, int n, std::size_t count, int l_max,
                std::span<double> out);
}  // namespace avx2

}  // namespace kcurv::kernels
