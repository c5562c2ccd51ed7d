#pragma once

// sigma_k(lambda) = H(x, g) (1 + |Dg|^2)^{-q/2} for graphs over a rectangle,
// Dirichlet data on the boundary nodes. Curvatures are taken with respect to
// the upward normal, so a spherical cap is positive.

#include "kcurv/newton.hpp"
#include "kcurv/polynomial.hpp"
#include "kcurv/symmfunc.hpp"

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace kcurv {

/// Uniform node grid on [x0,x1] x [y0,y1] with nx by ny intervals.
/// Node (i, j) has index j * (nx + 1) + i.
class RectGrid {
public:
    RectGrid(double x0, double x1, double y0, double y1, int nx, int ny);

    int nx() const noexcept { return nx_; }
    int ny() const noexcept { return ny_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>((nx_ + 1) * (ny_ + 1)); }
    std::size_t index(int i, int j) const noexcept { return static_cast<std::size_t>(j * (nx_ + 1) + i); }
    int col(std::size_t k) const noexcept { return static_cast<int>(k % static_cast<std::size_t>(nx_ + 1)); }
    int row(std::size_t k) const noexcept { return static_cast<int>(k / static_cast<std::size_t>(nx_ + 1)); }
    bool on_boundary(std::size_t k) const noexcept;
    double x(int i) const noexcept { return x0_ + i * hx_; }
    double y(int j) const noexcept { return y0_ + j * hy_; }
    double hx() const noexcept { return hx_; }
    double hy() const noexcept { return hy_; }
    double x0() const noexcept { return x0_; }
    double x1() const noexcept { return x1_; }
    double y0() const noexcept { return y0_; }
    double y1() const noexcept { return y1_; }

    /// Interior node indices in row-major order; position = unknown number.
    const std::vector<std::size_t>& interior() const noexcept { return interior_; }

private:
    double x0_, x1_, y0_, y1_;
    int nx_, ny_;
    double hx_, hy_;
    std::vector<std::size_t> interior_;
};

using RectGridPtr = std::shared_ptr<const RectGrid>;
RectGridPtr make_rect_grid(double x0, double x1, double y0, double y1, int nx, int ny);

struct GraphField {
    RectGridPtr grid;
    std::vector<double> g;
};

/// Closed-form graph with first and second derivatives, for manufactured
/// solutions and error measurement.
struct ExactGraph {
    std::string name;
    std::function<double(double, double)> value;
    std::function<Eigen::Vector2d(double, double)> grad;
    std::function<Eigen::Matrix2d(double, double)> hess;

    GraphField sample(const RectGridPtr& grid) const;
};

/// Upper hemisphere of radius R centred above (cx, cy).
ExactGraph sphere_cap(double R, double cx = 0.0, double cy = 0.0);
/// g = alpha |x|^2 (admissible for alpha < 0 under the upward-normal convention).
ExactGraph paraboloid(double alpha);
/// Cap plus the linear tilt b1 x1 + b2 x2.
ExactGraph tilted_cap(double R, double b1, double b2);

struct GraphProblem {
    RectGridPtr grid;
    int k = 2;
    double q = 0.0;
    /// H(x1, x2, g); ignored when H_samples is set.
    GraphPolynomial H = GraphPolynomial::constant(1.0);
    /// Per-node values of H (manufactured right-hand sides).
    std::optional<std::vector<double>> H_samples;
    /// Dirichlet values; only boundary entries are read. Size = grid->size().
    std::vector<double> boundary;

    /// DomainError on k outside [1, 2], non-finite q, size mismatches or
    /// H <= 0 on the sample set. Warns for q > 1.
    std::vector<std::string> validate() const;
};

struct GraphShape {
    Spectrum lambda;   ///< ascending
    double A_norm;
};

GraphShape graph_shape(const Eigen::Vector2d& Dg, const Eigen::Matrix2d& D2g);

/// sigma_k(lambda) - H w^{-q} at interior nodes (row-major interior order).
/// Throws ConeViolation listing nodes outside Gamma_2 when k = 2; k = 1 is
/// elliptic everywhere and carries no cone constraint.
std::vector<double> graph_residual(const GraphField& field, const GraphProblem& prob);

/// H = sigma_k(lambda[g_exact]) w^q from closed-form derivatives, at every
/// node. Throws ConeViolation where g_exact leaves Gamma_2 (k = 2).
std::vector<double> manufactured_H(const ExactGraph& exact, const RectGridPtr& grid, int k, double q);

NewtonSystem graph_system(const GraphProblem& prob);

/// Newton on the interior unknowns; boundary entries of the result are the
/// prescribed data. Throws ConeViolation for an inadmissible start and
/// NewtonFailure on nonconvergence.
GraphField dirichlet_newton_solve(const GraphField& start, const GraphProblem& prob, const NewtonOptions& opts,
                                  SolveReport& report);

/// Per-node derivatives and curvature on all nodes: centred differences in
/// the interior, second-order one-sided stencils on the boundary.
struct GraphGeometry {
    std::vector<double> gx, gy, gxx, gxy, gyy;
    std::vector<double> w, lambda1, lambda2, sigma1, sigma2, A_norm;
};

GraphGeometry graph_geometry(const GraphField& field);

struct CurvatureBoundProbe {
    double sup_interior_A = 0.0;
    double sup_boundary_A = 0.0;
    double ratio = 0.0;   ///< sup_interior_A / (1 + sup_boundary_A)
    double q = 0.0;
    int k = 0;
    int nx = 0, ny = 0;
};

CurvatureBoundProbe curvature_bound_probe(const GraphField& field, const GraphProblem& prob);

struct CampaignRow {
    double q = 0.0;
    int nx = 0, ny = 0;
    bool converged = false;
    int iterations = 0;
    CurvatureBoundProbe probe;
    std::string message;
};

struct GraphCampaign {
    std::vector<CampaignRow> rows;
    /// for each grid: every q <= 0 run converged whenever the q in (0, 1]
    /// runs converged
    bool regime_consistent = true;
    /// max over q <= 1 and successive grids of |r_h - r_{h/2}| / r_h
    double max_ratio_variation = 0.0;
};

/// Solves `base` for every q and every square grid of `sizes` intervals on
/// the same rectangle. Boundary data and the start are `data` sampled on each
/// grid; H must be the polynomial form.
GraphCampaign run_graph_campaign(const GraphProblem& base, const ExactGraph& data, const std::vector<double>& qs,
                                 const std::vector<int>& sizes, const NewtonOptions& opts);

}  // namespace kcurv
