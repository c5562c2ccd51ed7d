#include "kcurv/sphere_geometry.hpp"

#include "kcurv/errors.hpp"
#include "kcurv/format.hpp"
#include "kcurv/kernels.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

namespace kcurv {

using std::numbers::pi;

SphericalGrid::SphericalGrid(int n_theta, int n_phi) : n_theta_(n_theta), n_phi_(n_phi) {
    if (n_theta < 8 || n_phi < 8) throw DomainError("spherical grid needs n_theta >= 8 and n_phi >= 8");
    if (n_phi % 2 != 0) throw DomainError("n_phi must be even (cross-pole ghost pairing)");
    dtheta_ = pi / n_theta;
    dphi_ = 2.0 * pi / n_phi;
    sin_.resize(static_cast<std::size_t>(n_theta));
    cos_.resize(static_cast<std::size_t>(n_theta));
    for (int i = 0; i < n_theta; ++i) {
        sin_[static_cast<std::size_t>(i)] = std::sin(theta(i));
        cos_[static_cast<std::size_t>(i)] = std::cos(theta(i));
    }
    nodes_.resize(size());
    weights_.resize(size());
    stencil_.resize(size());
    const double band = 2.0 * std::sin(0.5 * dtheta_);
    for (int i = 0; i < n_theta; ++i) {
        const double st = sin_[static_cast<std::size_t>(i)];
        const double ct = cos_[static_cast<std::size_t>(i)];
        for (int j = 0; j < n_phi; ++j) {
            const std::size_t k = index(i, j);
            const double p = phi(j);
            Eigen::Vector3d x(st * std::cos(p), st * std::sin(p), ct);
            nodes_[k] = x / x.norm();
            // exact cell area: dphi * (cos theta_i^- - cos theta_i^+)
            weights_[k] = dphi_ * band * st;
            for (int di = -1; di <= 1; ++di) {
                for (int dj = -1; dj <= 1; ++dj) stencil_[k][3 * (di + 1) + (dj + 1)] = index(i + di, j + dj);
            }
        }
    }
}

std::size_t SphericalGrid::index(int i, int j) const noexcept {
    if (i < 0) {
        i = -1 - i;
        j += n_phi_ / 2;
    } else if (i >= n_theta_) {
        i = 2 * n_theta_ - 1 - i;
        j += n_phi_ / 2;
    }
    j %= n_phi_;
    if (j < 0) j += n_phi_;
    return static_cast<std::size_t>(i) * n_phi_ + static_cast<std::size_t>(j);
}

Eigen::Vector3d SphericalGrid::e_theta(std::size_t k) const {
    const double p = phi(col(k));
    const double ct = cos_theta(k);
    return {ct * std::cos(p), ct * std::sin(p), -sin_theta(k)};
}

Eigen::Vector3d SphericalGrid::e_phi(std::size_t k) const {
    const double p = phi(col(k));
    return {-std::sin(p), std::cos(p), 0.0};
}

RadialField RadialField::constant(GridPtr grid, double r) {
    const std::size_t n = grid->size();
    return {std::move(grid), std::vector<double>(n, r)};
}

void TangentialDerivatives::resize(std::size_t n) {
    d1.resize(n);
    d2.resize(n);
    h11.resize(n);
    h12.resize(n);
    h22.resize(n);
}

void CurvatureFields::resize(std::size_t n) {
    u.resize(n);
    a11.resize(n);
    a12.resize(n);
    a22.resize(n);
    sigma1.resize(n);
    sigma2.resize(n);
    lambda_min.resize(n);
    lambda_max.resize(n);
}

void tangential_derivatives(const SphericalGrid& grid, std::span<const double> rho,
                            TangentialDerivatives& out) {
    const std::size_t n = grid.size();
    out.resize(n);
    const double inv2dt = 1.0 / (2.0 * grid.dtheta());
    const double inv2dp = 1.0 / (2.0 * grid.dphi());
    const double invdt2 = 1.0 / (grid.dtheta() * grid.dtheta());
    const double invdp2 = 1.0 / (grid.dphi() * grid.dphi());
    const double inv4dtdp = 1.0 / (4.0 * grid.dtheta() * grid.dphi());
    for (std::size_t k = 0; k < n; ++k) {
        const auto& s = grid.stencil(k);
        // s[3*(di+1) + (dj+1)]
        const double c = rho[s[4]];
        const double north = rho[s[1]], south = rho[s[7]];
        const double west = rho[s[3]], east = rho[s[5]];
        const double r_t = (south - north) * inv2dt;
        const double r_p = (east - west) * inv2dp;
        const double r_tt = (south - 2.0 * c + north) * invdt2;
        const double r_pp = (east - 2.0 * c + west) * invdp2;
        const double r_tp = (rho[s[8]] - rho[s[6]] - rho[s[2]] + rho[s[0]]) * inv4dtdp;
        const double st = grid.sin_theta(k);
        const double cot = grid.cos_theta(k) / st;
        out.d1[k] = r_t;
        out.d2[k] = r_p / st;
        out.h11[k] = r_tt;
        out.h12[k] = (r_tp - cot * r_p) / st;
        out.h22[k] = r_pp / (st * st) + cot * r_t;
    }
}

TangentialDerivatives tangential_derivatives(const RadialField& field) {
    TangentialDerivatives out;
    tangential_derivatives(*field.grid, field.rho, out);
    return out;
}

void radial_curvature_fields(const SphericalGrid& grid, std::span<const double> rho,
                             TangentialDerivatives& derivs, CurvatureFields& out) {
    tangential_derivatives(grid, rho, derivs);
    out.resize(grid.size());
    kernels::radial_curvature({rho, derivs.d1, derivs.d2, derivs.h11, derivs.h12, derivs.h22},
                              {out.u, out.a11, out.a12, out.a22, out.sigma1, out.sigma2,
                               out.lambda_min, out.lambda_max});
}

Eigen::Matrix2d SurfaceGeometry::h(std::size_t k) const {
    Eigen::Matrix2d a;
    a << curv.a11[k], curv.a12[k], curv.a12[k], curv.a22[k];
    return a;
}

namespace {

std::string node_list(const std::vector<std::size_t>& nodes) {
    std::string s;
    for (std::size_t i = 0; i < nodes.size() && i < 8; ++i) s += (i ? ", " : "") + std::to_string(nodes[i]);
    if (nodes.size() > 8) s += ", ...";
    return s;
}

}  // namespace

SurfaceGeometry radial_geometry(const RadialField& field) {
    const SphericalGrid& grid = *field.grid;
    if (field.rho.size() != grid.size()) throw DomainError("radial field size does not match grid");
    std::vector<std::size_t> bad;
    for (std::size_t k = 0; k < field.rho.size(); ++k) {
        if (!(field.rho[k] > 0.0) || !std::isfinite(field.rho[k])) bad.push_back(k);
    }
    if (!bad.empty()) {
        throw GeometryError("degenerate metric: rho not positive and finite at node(s) " + node_list(bad), bad);
    }

    SurfaceGeometry g;
    g.grid = field.grid;
    g.rho = field.rho;
    radial_curvature_fields(grid, g.rho, g.derivs, g.curv);

    const std::size_t n = grid.size();
    g.X.resize(n);
    g.nu.resize(n);
    g.metric.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double r = g.rho[k];
        const double p1 = g.derivs.d1[k], p2 = g.derivs.d2[k];
        const Eigen::Vector3d& x = grid.node(k);
        g.X[k] = r * x;
        Eigen::Vector3d nu = r * x - p1 * grid.e_theta(k) - p2 * grid.e_phi(k);
        g.nu[k] = nu / nu.norm();
        g.metric[k] << r * r + p1 * p1, p1 * p2, p1 * p2, r * r + p2 * p2;
        if (!(g.curv.u[k] > 0.0)) bad.push_back(k);
    }
    if (!bad.empty()) {
        throw GeometryError("support function <X,nu> <= 0 at node(s) " + node_list(bad), bad);
    }
    return g;
}

StructureResiduals structure_equation_residuals(const SurfaceGeometry& geom) {
    const SphericalGrid& grid = *geom.grid;
    const std::size_t n = grid.size();
    const double dt = grid.dtheta(), dp = grid.dphi();
    // centred stencils rescaled to be exact on sin/cos of unit frequency
    const double second_t = 1.0 / (4.0 * std::pow(std::sin(0.5 * dt), 2));
    const double second_p = 1.0 / (4.0 * std::pow(std::sin(0.5 * dp), 2));
    const double mixed = 1.0 / (4.0 * std::sin(dt) * std::sin(dp));
    const double plain_t = 1.0 / (2.0 * dt), plain_p = 1.0 / (2.0 * dp);

    StructureResiduals out;
    out.gauss.resize(n);
    out.support.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& s = grid.stencil(k);
        const auto& X = geom.X;
        const Eigen::Vector3d x_tt = (X[s[7]] - 2.0 * X[s[4]] + X[s[1]]) * second_t;
        const Eigen::Vector3d x_pp = (X[s[5]] - 2.0 * X[s[4]] + X[s[3]]) * second_p;
        const Eigen::Vector3d x_tp = (X[s[8]] - X[s[6]] - X[s[2]] + X[s[0]]) * mixed;
        const Eigen::Vector3d& nu = geom.nu[k];
        const double st = grid.sin_theta(k);

        // normal part of the coordinate Hessian of X (its tangential part is the
        // Christoffel term), moved to the sphere frame
        Eigen::Matrix2d normal;
        normal(0, 0) = x_tt.dot(nu);
        normal(0, 1) = normal(1, 0) = x_tp.dot(nu) / st;
        normal(1, 1) = x_pp.dot(nu) / (st * st);

        const double r = geom.rho[k];
        const Eigen::Vector2d p(geom.derivs.d1[k], geom.derivs.d2[k]);
        const double w = std::sqrt(r * r + p.squaredNorm());
        const double c = 1.0 / (w * (r + w));
        const Eigen::Matrix2d inv_sqrt_metric = (Eigen::Matrix2d::Identity() - c * p * p.transpose()) / r;

        const Eigen::Matrix2d gauss = inv_sqrt_metric * normal * inv_sqrt_metric + geom.h(k);
        out.gauss[k] = gauss.norm();

        // second fundamental form in the sphere frame, g^{-1} <grad X, X> = rho p / W^2
        Eigen::Matrix2d hess;
        hess << geom.derivs.h11[k], geom.derivs.h12[k], geom.derivs.h12[k], geom.derivs.h22[k];
        const Eigen::Matrix2d h_sphere =
            (r * r * Eigen::Matrix2d::Identity() + 2.0 * p * p.transpose() - r * hess) / w;
        const Eigen::Vector2d rhs = h_sphere * (r * p) / (w * w);
        const auto& u = geom.curv.u;
        const Eigen::Vector2d du((u[s[7]] - u[s[1]]) * plain_t, (u[s[5]] - u[s[3]]) * plain_p / st);
        out.support[k] = (inv_sqrt_metric * (du - rhs)).norm();

        out.gauss_max = std::max(out.gauss_max, out.gauss[k]);
        out.support_max = std::max(out.support_max, out.support[k]);
    }
    return out;
}

RadialField shift_longitude(const RadialField& field, int shift) {
    const SphericalGrid& grid = *field.grid;
    RadialField out{field.grid, std::vector<double>(grid.size())};
    for (int i = 0; i < grid.n_theta(); ++i) {
        for (int j = 0; j < grid.n_phi(); ++j) out.rho[grid.index(i, j + shift)] = field.rho[grid.index(i, j)];
    }
    return out;
}

std::vector<double> resample(const RadialField& field, const SphericalGrid& target) {
    const SphericalGrid& src = *field.grid;
    if (src.n_phi() % target.n_phi() != 0) {
        throw DomainError("resample: source longitudes must be a multiple of target longitudes");
    }
    const int stride = src.n_phi() / target.n_phi();
    std::vector<double> out(target.size());
    for (int it = 0; it < target.n_theta(); ++it) {
        const double s = target.theta(it) / src.dtheta() - 0.5;
        int i0 = static_cast<int>(std::floor(s));
        double frac = s - i0;
        // exact hit: use the node itself
        if (std::abs(frac) < 1e-12 || std::abs(frac - 1.0) < 1e-12) {
            if (std::abs(frac - 1.0) < 1e-12) ++i0;
            for (int jt = 0; jt < target.n_phi(); ++jt) {
                out[target.index(it, jt)] = field.rho[src.index(i0, jt * stride)];
            }
            continue;
        }
        // Lagrange weights on rows i0-1, i0, i0+1, i0+2 (offsets -1, 0, 1, 2)
        const double x = frac;
        const std::array<double, 4> wgt = {
            -x * (x - 1.0) * (x - 2.0) / 6.0,
            (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0,
            -(x + 1.0) * x * (x - 2.0) / 2.0,
            (x + 1.0) * x * (x - 1.0) / 6.0,
        };
        for (int jt = 0; jt < target.n_phi(); ++jt) {
            double v = 0.0;
            for (int m = 0; m < 4; ++m) v += wgt[static_cast<std::size_t>(m)] * field.rho[src.index(i0 - 1 + m, jt * stride)];
            out[target.index(it, jt)] = v;
        }
    }
    return out;
}

std::vector<double> sample_positive(const SphericalGrid& grid, const SpherePolynomial& phi) {
    std::vector<double> out(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Eigen::Vector3d& x = grid.node(k);
        out[k] = phi({x.x(), x.y(), x.z()});
        if (!(out[k] > 0.0) || !std::isfinite(out[k])) {
            throw DomainError("phi must be positive at every grid node (node " + std::to_string(k) +
                              " has phi = " + fmt17(out[k]) + ")");
        }
    }
    return out;
}

double ellipsoid_radius(double a, double b, double c, const Eigen::Vector3d& x) {
    return 1.0 / std::sqrt(x.x() * x.x() / (a * a) + x.y() * x.y() / (b * b) + x.z() * x.z() / (c * c));
}

std::array<double, 2> ellipsoid_principal_curvatures(double a, double b, double c,
                                                     const Eigen::Vector3d& p) {
    const Eigen::Vector3d grad(2.0 * p.x() / (a * a), 2.0 * p.y() / (b * b), 2.0 * p.z() / (c * c));
    const Eigen::Vector3d n = grad.normalized();
    const Eigen::Matrix3d hess = Eigen::Vector3d(2.0 / (a * a), 2.0 / (b * b), 2.0 / (c * c)).asDiagonal();
    // orthonormal tangent basis
    Eigen::Vector3d t1 = n.unitOrthogonal();
    Eigen::Vector3d t2 = n.cross(t1);
    Eigen::Matrix<double, 3, 2> t;
    t << t1, t2;
    const Eigen::Matrix2d shape = t.transpose() * hess * t / grad.norm();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(shape, Eigen::EigenvaluesOnly);
    return {es.eigenvalues()(0), es.eigenvalues()(1)};
}

void write_obj(std::ostream& os, const SurfaceGeometry& geom) {
    const SphericalGrid& grid = *geom.grid;
    os << "# radial graph over S^2, " << grid.n_theta() << " x " << grid.n_phi() << " nodes\n";
    for (const auto& x : geom.X) os << "v " << fmt17(x.x()) << ' ' << fmt17(x.y()) << ' ' << fmt17(x.z()) << '\n';
    auto id = [&](int i, int j) { return grid.index(i, j) + 1; };
    for (int i = 0; i + 1 < grid.n_theta(); ++i) {
        for (int j = 0; j < grid.n_phi(); ++j) {
            const auto a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
            os << "f " << a << ' ' << b << ' ' << c << '\n';
            os << "f " << a << ' ' << c << ' ' << d << '\n';
        }
    }
    const int last = grid.n_theta() - 1;
    for (int j = 1; j + 1 < grid.n_phi(); ++j) {
        os << "f " << id(0, 0) << ' ' << id(0, j) << ' ' << id(0, j + 1) << '\n';
        os << "f " << id(last, 0) << ' ' << id(last, j + 1) << ' ' << id(last, j) << '\n';
    }
}

void write_csv(std::ostream& os, const SurfaceGeometry& geom, int k) {
    const SphericalGrid& grid = *geom.grid;
    os << "theta,phi,rho,u,lambda1,lambda2,sigma_k\n";
    for (std::size_t n = 0; n < geom.size(); ++n) {
        const double sk = k == 1 ? geom.curv.sigma1[n] : geom.curv.sigma2[n];
        os << fmt17(grid.theta(grid.row(n))) << ',' << fmt17(grid.phi(grid.col(n))) << ','
           << fmt17(geom.rho[n]) << ',' << fmt17(geom.curv.u[n]) << ',' << fmt17(geom.curv.lambda_min[n])
           << ',' << fmt17(geom.curv.lambda_max[n]) << ',' << fmt17(sk) << '\n';
    }
}

}  // namespace kcurv
