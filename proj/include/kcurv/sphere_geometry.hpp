#pragma once

// Radial graphs X(x) = rho(x) x over S^2 on a staggered latitude-longitude
// grid, and the geometry entering sigma_k(A) = <X, nu>^p phi(X).
//
// Orientation: nu is the outer normal and h_ij = <D_{e_i} nu, e_j>, so the
// round sphere of radius r has principal curvatures +1/r.

#include "kcurv/polynomial.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace kcurv {

/// Colatitudes theta_i = (i + 1/2) pi / n_theta (no node on a pole),
/// longitudes phi_j = 2 pi j / n_phi. Rows i = -1 and i = n_theta are ghosts
/// that resolve across the pole to longitude j + n_phi / 2.
class SphericalGrid {
public:
    /// n_theta >= 8, n_phi >= 8 and even.
    SphericalGrid(int n_theta, int n_phi);

    int n_theta() const noexcept { return n_theta_; }
    int n_phi() const noexcept { return n_phi_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(n_theta_) * n_phi_; }
    double dtheta() const noexcept { return dtheta_; }
    double dphi() const noexcept { return dphi_; }

    double theta(int i) const noexcept { return (i + 0.5) * dtheta_; }
    double phi(int j) const noexcept { return j * dphi_; }
    int row(std::size_t k) const noexcept { return static_cast<int>(k / n_phi_); }
    int col(std::size_t k) const noexcept { return static_cast<int>(k % n_phi_); }

    /// Node index for any i in [-1, n_theta] and any integer j.
    std::size_t index(int i, int j) const noexcept;

    const Eigen::Vector3d& node(std::size_t k) const { return nodes_[k]; }
    Eigen::Vector3d e_theta(std::size_t k) const;
    Eigen::Vector3d e_phi(std::size_t k) const;
    double sin_theta(std::size_t k) const { return sin_[static_cast<std::size_t>(row(k))]; }
    double cos_theta(std::size_t k) const { return cos_[static_cast<std::size_t>(row(k))]; }

    /// Cell-area quadrature weights; they sum to 4 pi.
    std::span<const double> weights() const noexcept { return weights_; }

    /// 3x3 neighbourhood of node k: entry 3 * (di + 1) + (dj + 1).
    const std::array<std::size_t, 9>& stencil(std::size_t k) const { return stencil_[k]; }

private:
    int n_theta_;
    int n_phi_;
    double dtheta_;
    double dphi_;
    std::vector<double> sin_, cos_;
    std::vector<Eigen::Vector3d> nodes_;
    std::vector<double> weights_;
    std::vector<std::array<std::size_t, 9>> stencil_;
};

using GridPtr = std::shared_ptr<const SphericalGrid>;

inline GridPtr make_grid(int n_theta, int n_phi) {
    return std::make_shared<const SphericalGrid>(n_theta, n_phi);
}

/// rho > 0 per node.
struct RadialField {
    GridPtr grid;
    std::vector<double> rho;

    static RadialField constant(GridPtr grid, double r);
    /// Samples f(x) at every node.
    template <class F>
    static RadialField sample(GridPtr grid, F&& f) {
        RadialField out{grid, std::vector<double>(grid->size())};
        for (std::size_t k = 0; k < grid->size(); ++k) out.rho[k] = f(grid->node(k));
        return out;
    }
};

/// Covariant derivatives of rho on the unit sphere, components in the
/// orthonormal frame (e_theta, e_phi). Structure of arrays.
struct TangentialDerivatives {
    std::vector<double> d1, d2;
    std::vector<double> h11, h12, h22;

    void resize(std::size_t n);
};

/// Second-order centred differences with pole ghosting.
TangentialDerivatives tangential_derivatives(const RadialField& field);
void tangential_derivatives(const SphericalGrid& grid, std::span<const double> rho,
                            TangentialDerivatives& out);

/// Shape operator in an orthonormal frame of the surface, per node.
struct CurvatureFields {
    std::vector<double> u;
    std::vector<double> a11, a12, a22;
    std::vector<double> sigma1, sigma2;
    std::vector<double> lambda_min, lambda_max;

    void resize(std::size_t n);
};

/// Hot path for residual evaluation: no validation, no throwing.
void radial_curvature_fields(const SphericalGrid& grid, std::span<const double> rho,
                             TangentialDerivatives& derivs, CurvatureFields& out);

struct SurfaceGeometry {
    GridPtr grid;
    std::vector<double> rho;
    TangentialDerivatives derivs;
    CurvatureFields curv;
    std::vector<Eigen::Vector3d> X;
    std::vector<Eigen::Vector3d> nu;
    /// Metric in the (e_theta, e_phi) frame of the unit sphere: rho^2 I + grad rho grad rho^T.
    std::vector<Eigen::Matrix2d> metric;

    std::size_t size() const noexcept { return rho.size(); }
    /// Second fundamental form in an orthonormal frame of the surface.
    Eigen::Matrix2d h(std::size_t k) const;
    std::array<double, 2> lambda(std::size_t k) const { return {curv.lambda_min[k], curv.lambda_max[k]}; }
};

/// Throws GeometryError naming the nodes where rho <= 0 / not finite, or
/// where the support value is not positive.
SurfaceGeometry radial_geometry(const RadialField& field);

struct StructureResiduals {
    std::vector<double> gauss;    ///< |grad^2 X + h nu| per node (Frobenius, orthonormal frame)
    std::vector<double> support;  ///< |grad u - h <grad X, X>| per node
    double gauss_max = 0.0;
    double support_max = 0.0;
};

/// Discrete check of grad_i grad_j X = -h_ij nu and grad_i <X, nu> = h_il <grad_l X, X>.
/// X is differenced directly with centred stencils rescaled to be exact on
/// first-degree trigonometric modes, so round spheres give round-off residuals.
StructureResiduals structure_equation_residuals(const SurfaceGeometry& geom);

/// Rotates samples by `shift` longitude cells.
RadialField shift_longitude(const RadialField& field, int shift);

/// Samples `field` at the nodes of `target`. Requires the longitudes to nest
/// (field n_phi a multiple of target n_phi); colatitude uses 4-point Lagrange
/// interpolation through the pole ghosts.
std::vector<double> resample(const RadialField& field, const SphericalGrid& target);

/// phi(x) per node; throws DomainError if phi <= 0 anywhere.
std::vector<double> sample_positive(const SphericalGrid& grid, const SpherePolynomial& phi);

/// Principal curvatures (ascending) of x^2/a^2 + y^2/b^2 + z^2/c^2 = 1 at a
/// point on it, from the projected Hessian of the implicit function.
std::array<double, 2> ellipsoid_principal_curvatures(double a, double b, double c,
                                                     const Eigen::Vector3d& p);
/// Radial function of that ellipsoid.
double ellipsoid_radius(double a, double b, double c, const Eigen::Vector3d& x);

/// Vertices X per node; quads split into triangles, polar caps fanned.
void write_obj(std::ostream& os, const SurfaceGeometry& geom);
/// theta,phi,rho,u,lambda1,lambda2,sigma_k
void write_csv(std::ostream& os, const SurfaceGeometry& geom, int k);

}  // namespace kcurv
