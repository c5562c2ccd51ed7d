#include "kcurv/errors.hpp"
#include "kcurv/sphere_geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace kcurv;
using std::numbers::pi;

namespace {

constexpr double kA = 1.0, kB = 1.15, kC = 0.9;

// Independent closed form: K = 1 / (a^2 b^2 c^2 S^2), S = sum x_i^2 / a_i^4,
// kappa1 + kappa2 = (|grad F|^2 tr Hess F - grad F^T Hess F grad F) / |grad F|^3.
std::array<double, 2> ellipsoid_oracle(const Eigen::Vector3d& p) {
    const Eigen::Vector3d ax(kA, kB, kC);
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += p(i) * p(i) / std::pow(ax(i), 4);
    const double K = 1.0 / (std::pow(kA * kB * kC, 2) * s * s);
    Eigen::Vector3d grad;
    Eigen::Vector3d hess;
    for (int i = 0; i < 3; ++i) {
        grad(i) = 2 * p(i) / (ax(i) * ax(i));
        hess(i) = 2 / (ax(i) * ax(i));
    }
    const double g2 = grad.squaredNorm();
    const double mean = (g2 * hess.sum() - grad.dot(hess.cwiseProduct(grad))) / std::pow(g2, 1.5);
    const double disc = std::sqrt(std::max(0.0, mean * mean - 4 * K));
    return {(mean - disc) / 2, (mean + disc) / 2};
}

RadialField ellipsoid_field(int nt) {
    return RadialField::sample(make_grid(nt, 2 * nt),
                               [](const Eigen::Vector3d& x) { return ellipsoid_radius(kA, kB, kC, x); });
}

double ellipsoid_curvature_error(int nt) {
    const auto geom = radial_geometry(ellipsoid_field(nt));
    double err = 0.0;
    for (std::size_t k = 0; k < geom.size(); ++k) {
        const auto exact = ellipsoid_oracle(geom.X[k]);
        const auto got = geom.lambda(k);
        err = std::max({err, std::abs(got[0] - exact[0]), std::abs(got[1] - exact[1])});
    }
    return err;
}

}  // namespace

TEST_CASE("build_grid: sizes, parity, quadrature") {
    SphericalGrid g(8, 8);
    CHECK(g.size() == 64);
    double total = 0.0;
    for (double w : g.weights()) total += w;
    CHECK(std::abs(total - 4 * pi) <= 1e-10 * 4 * pi);
    CHECK(SphericalGrid(16, 32).size() == 512);
    CHECK_THROWS_AS(SphericalGrid(8, 7), DomainError);
    CHECK_THROWS_AS(SphericalGrid(6, 8), DomainError);

    SphericalGrid h(24, 48);
    for (std::size_t k = 0; k < h.size(); ++k) {
        REQUIRE(std::abs(h.node(k).norm() - 1.0) <= 1e-14);
        REQUIRE(std::abs(std::abs(h.node(k).z()) - 1.0) > 1e-3);
    }
}

TEST_CASE("ghost rows resolve across the pole") {
    SphericalGrid g(8, 16);
    CHECK(g.index(-1, 3) == g.index(0, 11));
    CHECK(g.index(8, 0) == g.index(7, 8));
    CHECK(g.index(2, -1) == g.index(2, 15));
    // the ghost of (0, j) sits at the mirrored colatitude, i.e. the node across the pole
    const Eigen::Vector3d ghost(-g.sin_theta(0) * std::cos(g.phi(3)), -g.sin_theta(0) * std::sin(g.phi(3)),
                                g.cos_theta(0));
    CHECK((g.node(g.index(-1, 3)) - ghost).norm() < 1e-14);
}

TEST_CASE("tangential_derivatives: constant field") {
    const auto f = RadialField::constant(make_grid(16, 32), 1.7);
    const auto d = tangential_derivatives(f);
    for (std::size_t k = 0; k < f.rho.size(); ++k) {
        REQUIRE(std::abs(d.d1[k]) <= 1e-12);
        REQUIRE(std::abs(d.d2[k]) <= 1e-12);
        REQUIRE(std::abs(d.h11[k]) + std::abs(d.h12[k]) + std::abs(d.h22[k]) <= 1e-12);
    }
}

TEST_CASE("tangential_derivatives: degree-one harmonic, second order") {
    // rho = x3 + 2 keeps rho > 0; Hess x3 = -x3 I, grad x3 = (-sin theta, 0)
    auto error_at = [](int nt) {
        const auto f = RadialField::sample(make_grid(nt, 2 * nt), [](const Eigen::Vector3d& x) { return x.z() + 2; });
        const auto d = tangential_derivatives(f);
        const auto& g = *f.grid;
        double err = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) {
            const double z = g.node(k).z();
            err = std::max({err, std::abs(d.h11[k] + z), std::abs(d.h22[k] + z), std::abs(d.h12[k]),
                            std::abs(d.d1[k] + g.sin_theta(k)), std::abs(d.d2[k])});
        }
        return err;
    };
    const double e1 = error_at(16), e2 = error_at(32), e3 = error_at(64);
    CHECK(e1 < 1e-2);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
    CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("radial_geometry: round spheres are exact") {
    for (double r : {0.3, 1.0, 2.0, 3.7}) {
        const auto geom = radial_geometry(RadialField::constant(make_grid(32, 64), r));
        for (std::size_t k = 0; k < geom.size(); ++k) {
            REQUIRE(std::abs(geom.curv.u[k] - r) <= 1e-12);
            REQUIRE(std::abs(geom.curv.lambda_min[k] - 1 / r) <= 1e-10);
            REQUIRE(std::abs(geom.curv.lambda_max[k] - 1 / r) <= 1e-10);
            REQUIRE(std::abs(geom.nu[k].norm() - 1) <= 1e-12);
            REQUIRE((geom.nu[k] - geom.grid->node(k)).norm() <= 1e-12);
        }
    }
    const auto two = radial_geometry(RadialField::constant(make_grid(16, 32), 2.0));
    CHECK(two.curv.u[5] == doctest::Approx(2.0));
    CHECK(two.curv.sigma2[5] == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("radial_geometry: ellipsoid curvatures converge at second order") {
    const double e1 = ellipsoid_curvature_error(16);
    const double e2 = ellipsoid_curvature_error(32);
    const double e3 = ellipsoid_curvature_error(64);
    MESSAGE("ellipsoid curvature errors " << e1 << " " << e2 << " " << e3);
    CHECK(std::log2(e1 / e2) >= 1.8);
    CHECK(std::log2(e2 / e3) >= 1.8);
}

TEST_CASE("library ellipsoid curvatures match the closed form") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n01;
    for (int i = 0; i < 50; ++i) {
        Eigen::Vector3d x(n01(rng), n01(rng), n01(rng));
        x.normalize();
        const Eigen::Vector3d p = ellipsoid_radius(kA, kB, kC, x) * x;
        const auto a = ellipsoid_principal_curvatures(kA, kB, kC, p);
        const auto b = ellipsoid_oracle(p);
        CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-10));
        CHECK(a[1] == doctest::Approx(b[1]).epsilon(1e-10));
    }
}

TEST_CASE("support function identity holds to O(h^2)") {
    // grad rho from the closed form: rho = Q^{-1/2}, grad_T Q = P (2 M x)
    auto err_at = [](int nt) {
        const auto f = ellipsoid_field(nt);
        const auto geom = radial_geometry(f);
        const auto& g = *f.grid;
        const Eigen::Vector3d m(1 / (kA * kA), 1 / (kB * kB), 1 / (kC * kC));
        double err = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) {
            const Eigen::Vector3d& x = g.node(k);
            const double q = x.dot(m.cwiseProduct(x));
            Eigen::Vector3d dq = 2 * m.cwiseProduct(x);
            dq -= dq.dot(x) * x;
            const Eigen::Vector3d grad = -0.5 * std::pow(q, -1.5) * dq;
            const double rho = f.rho[k];
            const double u = rho * rho / std::sqrt(rho * rho + grad.squaredNorm());
            err = std::max(err, std::abs(geom.curv.u[k] - u));
        }
        return err;
    };
    const double e1 = err_at(16), e2 = err_at(32);
    CHECK(e1 < 1e-2);
    CHECK(std::log2(e1 / e2) >= 1.8);
}

TEST_CASE("structure equations: exact for spheres, second order for ellipsoids") {
    const auto round = structure_equation_residuals(radial_geometry(RadialField::constant(make_grid(16, 32), 1.3)));
    CHECK(round.gauss_max <= 1e-10);
    CHECK(round.support_max <= 1e-10);

    const auto r1 = structure_equation_residuals(radial_geometry(ellipsoid_field(16)));
    const auto r2 = structure_equation_residuals(radial_geometry(ellipsoid_field(32)));
    const auto r3 = structure_equation_residuals(radial_geometry(ellipsoid_field(64)));
    MESSAGE("gauss " << r1.gauss_max << " " << r2.gauss_max << " " << r3.gauss_max);
    MESSAGE("support " << r1.support_max << " " << r2.support_max << " " << r3.support_max);
    CHECK(std::log2(r1.gauss_max / r2.gauss_max) >= 1.8);
    CHECK(std::log2(r2.gauss_max / r3.gauss_max) >= 1.8);
    // the support identity differentiates u once more and is pre-asymptotic on the coarsest grid
    CHECK(std::log2(r2.support_max / r3.support_max) >= 1.8);

    // rough input is outside the contract and shows up as a large residual
    auto noisy = ellipsoid_field(32);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    for (double& r : noisy.rho) r += u(rng);
    CHECK(structure_equation_residuals(radial_geometry(noisy)).gauss_max > 100 * r2.gauss_max);
}

TEST_CASE("rotation by a longitude shift is equivariant") {
    auto f = RadialField::sample(make_grid(16, 32), [](const Eigen::Vector3d& x) {
        return 1.0 + 0.2 * x.x() * x.y() + 0.1 * x.z() + 0.05 * x.x();
    });
    const int shift = 5;
    const auto g0 = radial_geometry(f);
    const auto g1 = radial_geometry(shift_longitude(f, shift));
    const auto& grid = *f.grid;
    const Eigen::Matrix3d rot = Eigen::AngleAxisd(shift * grid.dphi(), Eigen::Vector3d::UnitZ()).toRotationMatrix();
    for (int i = 0; i < grid.n_theta(); ++i) {
        for (int j = 0; j < grid.n_phi(); ++j) {
            const auto a = grid.index(i, j), b = grid.index(i, j + shift);
            REQUIRE(g1.curv.u[b] == doctest::Approx(g0.curv.u[a]).epsilon(1e-13));
            REQUIRE(g1.curv.lambda_min[b] == doctest::Approx(g0.curv.lambda_min[a]).epsilon(1e-12));
            REQUIRE(g1.curv.lambda_max[b] == doctest::Approx(g0.curv.lambda_max[a]).epsilon(1e-12));
            REQUIRE((g1.X[b] - rot * g0.X[a]).norm() <= 1e-12);
            REQUIRE((g1.nu[b] - rot * g0.nu[a]).norm() <= 1e-12);
        }
    }
}

TEST_CASE("starshapedness guard names bad nodes") {
    auto f = RadialField::constant(make_grid(8, 8), 1.0);
    f.rho[10] = -0.1;
    try {
        (void)radial_geometry(f);
        FAIL("expected GeometryError");
    } catch (const GeometryError& e) {
        CHECK(e.nodes() == std::vector<std::size_t>{10});
    }
}

TEST_CASE("resample: fourth-order colatitude interpolation through the pole") {
    auto smooth = [](const Eigen::Vector3d& x) { return 1.0 + 0.3 * x.z() + 0.2 * x.x() * x.z(); };
    const auto fine = RadialField::sample(make_grid(48, 96), smooth);
    const SphericalGrid coarse(16, 32);
    const auto vals = resample(fine, coarse);
    double err = 0.0;
    for (std::size_t k = 0; k < coarse.size(); ++k) err = std::max(err, std::abs(vals[k] - smooth(coarse.node(k))));
    CHECK(err < 1e-5);
    // exact node hit when the grids nest in colatitude
    const auto nested = resample(fine, SphericalGrid(16, 32));
    CHECK(nested.size() == coarse.size());
    CHECK_THROWS_AS(resample(fine, SphericalGrid(16, 36)), DomainError);
}

TEST_CASE("OBJ and CSV export") {
    const auto geom = radial_geometry(RadialField::constant(make_grid(8, 8), 1.0));
    std::ostringstream obj, csv;
    write_obj(obj, geom);
    write_csv(csv, geom, 2);
    int v = 0, f = 0;
    std::istringstream in(obj.str());
    for (std::string line; std::getline(in, line);) {
        if (line.rfind("v ", 0) == 0) ++v;
        if (line.rfind("f ", 0) == 0) ++f;
    }
    CHECK(v == 64);
    CHECK(f == 2 * 7 * 8 + 2 * 6);  // quads + both polar fans; closed surface has 2V - 4 faces
    CHECK(f == 2 * v - 4);
    CHECK(csv.str().rfind("theta,phi,rho,u,lambda1,lambda2,sigma_k\n", 0) == 0);
}
