#include "kcurv/errors.hpp"
#include "kcurv/graph_solver.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace kcurv;

namespace {

RectGridPtr square(int n) { return make_rect_grid(-1, 1, -1, 1, n, n); }

GraphProblem manufactured_problem(const ExactGraph& exact, int n, int k, double q) {
    GraphProblem prob;
    prob.grid = square(n);
    prob.k = k;
    prob.q = q;
    prob.H_samples = manufactured_H(exact, prob.grid, k, q);
    prob.boundary = exact.sample(prob.grid).g;
    return prob;
}

// smooth, zero on the boundary of [-1,1]^2
GraphField perturbed(const GraphField& f, double amp) {
    GraphField out = f;
    const auto& grid = *f.grid;
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const double x = grid.x(grid.col(n)), y = grid.y(grid.row(n));
        out.g[n] += amp * std::cos(std::numbers::pi * x / 2) * std::cos(std::numbers::pi * y / 2);
    }
    return out;
}

double max_error(const GraphField& f, const ExactGraph& exact) {
    const auto ref = exact.sample(f.grid);
    double e = 0;
    for (std::size_t n = 0; n < f.g.size(); ++n) e = std::max(e, std::abs(f.g[n] - ref.g[n]));
    return e;
}

}  // namespace

TEST_CASE("graph_shape: worked values") {
    const double R = 2.0;
    auto s = graph_shape(Eigen::Vector2d::Zero(), -Eigen::Matrix2d::Identity() / R);
    CHECK(s.lambda[0] == doctest::Approx(1 / R).epsilon(1e-15));
    CHECK(s.lambda[1] == doctest::Approx(1 / R).epsilon(1e-15));
    CHECK(s.A_norm == doctest::Approx(std::sqrt(2.0) / R));

    s = graph_shape(Eigen::Vector2d(0.3, -0.7), Eigen::Matrix2d::Zero());
    CHECK(s.lambda[0] == 0.0);
    CHECK(s.lambda[1] == 0.0);

    const auto cap = sphere_cap(R);
    for (double angle : {0.0, 0.4, 2.1}) {
        const double x = 0.5 * R * std::cos(angle), y = 0.5 * R * std::sin(angle);
        s = graph_shape(cap.grad(x, y), cap.hess(x, y));
        CHECK(std::abs(s.lambda[0] - 1 / R) <= 1e-12);
        CHECK(std::abs(s.lambda[1] - 1 / R) <= 1e-12);
    }
}

TEST_CASE("graph_shape: paraboloid closed form") {
    // g = alpha |x|^2: tangential -2 alpha / w, radial -2 alpha / w^3
    const double alpha = -0.5;
    const auto par = paraboloid(alpha);
    const double x = 0.3, y = -0.8;
    const double w = std::sqrt(1 + 4 * alpha * alpha * (x * x + y * y));
    const auto s = graph_shape(par.grad(x, y), par.hess(x, y));
    CHECK(s.lambda[0] == doctest::Approx(-2 * alpha / (w * w * w)).epsilon(1e-14));
    CHECK(s.lambda[1] == doctest::Approx(-2 * alpha / w).epsilon(1e-14));
}

TEST_CASE("manufactured_H") {
    const auto grid = square(8);
    const auto cap = sphere_cap(2.0);
    for (double h : manufactured_H(cap, grid, 2, 0.0)) REQUIRE(h == doctest::Approx(0.25).epsilon(1e-14));

    const auto h0 = manufactured_H(cap, grid, 2, 0.0);
    const auto h1 = manufactured_H(cap, grid, 2, 1.5);
    for (std::size_t n = 0; n < grid->size(); ++n) {
        const auto p = cap.grad(grid->x(grid->col(n)), grid->y(grid->row(n)));
        REQUIRE(h1[n] == doctest::Approx(h0[n] * std::pow(1 + p.squaredNorm(), 0.75)).epsilon(1e-14));
    }

    const auto par = paraboloid(-0.5);
    const auto hp = manufactured_H(par, grid, 1, 1.0);
    for (std::size_t n = 0; n < grid->size(); ++n) {
        const double x = grid->x(grid->col(n)), y = grid->y(grid->row(n));
        const double w = std::sqrt(1 + x * x + y * y);
        REQUIRE(hp[n] == doctest::Approx((1 / w + 1 / (w * w * w)) * w).epsilon(1e-13));
    }
    CHECK_THROWS_AS(manufactured_H(paraboloid(0.5), grid, 2, 1.0), ConeViolation);
}

TEST_CASE("graph_residual: flat fields") {
    GraphProblem prob;
    prob.grid = square(8);
    prob.boundary.assign(prob.grid->size(), 0.0);
    const GraphField flat{prob.grid, std::vector<double>(prob.grid->size(), 0.0)};

    prob.k = 1;
    for (double q : {-1.0, 0.0, 2.5}) {
        prob.q = q;
        for (double r : graph_residual(flat, prob)) REQUIRE(r == -1.0);
    }
    prob.k = 2;
    CHECK_THROWS_AS(graph_residual(flat, prob), ConeViolation);
}

TEST_CASE("graph_residual: manufactured cap is O(h^2)") {
    const auto cap = sphere_cap(2.0);
    double prev = 0;
    for (int n : {8, 16, 32}) {
        const auto prob = manufactured_problem(cap, n, 2, 1.0);
        double m = 0;
        for (double r : graph_residual(cap.sample(prob.grid), prob)) m = std::max(m, std::abs(r));
        if (prev > 0) CHECK(std::log2(prev / m) >= 1.8);
        prev = m;
    }
}

TEST_CASE("dirichlet_newton_solve: recovery and admissibility") {
    const auto cap = sphere_cap(2.0);
    for (double q : {-1.0, 0.0, 1.0}) {
        std::vector<double> err;
        for (int n : {16, 32, 64}) {
            const auto prob = manufactured_problem(cap, n, 2, q);
            SolveReport rep;
            const auto sol = dirichlet_newton_solve(perturbed(cap.sample(prob.grid), 1e-2), prob, {1e-10, 30}, rep);
            REQUIRE(rep.converged);
            for (const auto& it : rep.history) REQUIRE(it.min_cone_margin > 0);
            for (std::size_t m = 0; m < prob.grid->size(); ++m) {
                if (prob.grid->on_boundary(m)) REQUIRE(sol.g[m] == prob.boundary[m]);
            }
            err.push_back(max_error(sol, cap));
        }
        CHECK(std::log2(err[0] / err[1]) >= 1.8);
        CHECK(std::log2(err[1] / err[2]) >= 1.8);
    }
}

TEST_CASE("dirichlet_newton_solve: exact discrete solution takes no steps") {
    const auto cap = sphere_cap(2.0);
    const auto prob = manufactured_problem(cap, 16, 2, 0.0);
    SolveReport rep;
    const auto sol = dirichlet_newton_solve(cap.sample(prob.grid), prob, {1e-10, 30}, rep);
    SolveReport again;
    (void)dirichlet_newton_solve(sol, prob, {1e-10, 30}, again);
    CHECK(again.iterations == 0);
}

TEST_CASE("x1 <-> x2 symmetric data give a symmetric solution") {
    const auto cap = sphere_cap(2.0);
    GraphProblem prob;
    prob.grid = square(20);
    prob.k = 2;
    prob.q = 0.5;
    // H = 0.25 + 0.05 (x1^2 + x2^2) - 0.02 g
    prob.H = GraphPolynomial({{0.25, {0, 0, 0}}, {0.05, {2, 0, 0}}, {0.05, {0, 2, 0}}, {-0.02, {0, 0, 1}}});
    prob.boundary = cap.sample(prob.grid).g;
    SolveReport rep;
    const auto sol = dirichlet_newton_solve(cap.sample(prob.grid), prob, {1e-11, 30}, rep);
    const auto& g = *prob.grid;
    for (int j = 0; j <= g.ny(); ++j)
        for (int i = 0; i <= g.nx(); ++i) REQUIRE(std::abs(sol.g[g.index(i, j)] - sol.g[g.index(j, i)]) <= 1e-9);
}

TEST_CASE("tilted cap is recovered") {
    const auto tc = tilted_cap(2.0, 0.3, -0.1);
    std::vector<double> err;
    for (int n : {16, 32}) {
        const auto prob = manufactured_problem(tc, n, 2, 0.5);
        SolveReport rep;
        err.push_back(max_error(dirichlet_newton_solve(perturbed(tc.sample(prob.grid), 1e-2), prob, {1e-10, 30}, rep), tc));
    }
    CHECK(std::log2(err[0] / err[1]) >= 1.8);
}

TEST_CASE("curvature_bound_probe") {
    const double R = 2.0;
    const auto cap = sphere_cap(R);
    GraphProblem prob;
    prob.grid = square(64);
    prob.boundary = cap.sample(prob.grid).g;
    const auto probe = curvature_bound_probe(cap.sample(prob.grid), prob);
    const double a = std::sqrt(2.0) / R;
    CHECK(probe.sup_interior_A == doctest::Approx(a).epsilon(1e-3));
    CHECK(probe.sup_boundary_A == doctest::Approx(a).epsilon(1e-3));
    CHECK(probe.ratio == doctest::Approx(a / (1 + a)).epsilon(2e-3));

    // near-flat: k = 1 with tiny H from zero boundary data
    GraphProblem flat;
    flat.grid = square(16);
    flat.k = 1;
    flat.H = GraphPolynomial::constant(1e-6);
    flat.boundary.assign(flat.grid->size(), 0.0);
    SolveReport rep;
    const auto sol = dirichlet_newton_solve({flat.grid, flat.boundary}, flat, {1e-14, 30}, rep);
    CHECK(curvature_bound_probe(sol, flat).sup_interior_A < 1e-5);
}

TEST_CASE("campaign over q") {
    GraphProblem base;
    base.grid = square(8);
    base.k = 2;
    base.H = GraphPolynomial::constant(0.25);
    const auto camp = run_graph_campaign(base, sphere_cap(2.0), {-1, -0.5, 0, 0.5, 1}, {16, 32}, {1e-10, 40});
    REQUIRE(camp.rows.size() == 10);
    for (const auto& r : camp.rows) {
        CHECK(r.converged);
        CHECK(std::isfinite(r.probe.ratio));
        CHECK(r.probe.ratio > 0);
    }
    CHECK(camp.regime_consistent);
    CHECK(camp.max_ratio_variation <= 0.10);
}

TEST_CASE("validation") {
    GraphProblem prob;
    prob.grid = square(8);
    prob.boundary.assign(prob.grid->size(), 0.0);
    CHECK(prob.validate().empty());
    prob.q = 2;
    CHECK(prob.validate().size() == 1);
    prob.k = 3;
    CHECK_THROWS_AS(prob.validate(), DomainError);
    prob.k = 2;
    prob.boundary.pop_back();
    CHECK_THROWS_AS(prob.validate(), DomainError);
    CHECK_THROWS_AS(make_rect_grid(0, 1, 0, 1, 2, 8), DomainError);
}
