#include "kcurv/graph_solver.hpp"

#include "kcurv/kernels.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace kcurv {

namespace {

struct Tap {
    int offset;
    double weight;
};

// Second-order 1-D stencils on nodes 0..n: centred inside, one-sided at the ends.
std::vector<Tap> first_stencil(int i, int n, double h) {
    if (i == 0) return {{0, -1.5 / h}, {1, 2.0 / h}, {2, -0.5 / h}};
    if (i == n) return {{0, 1.5 / h}, {-1, -2.0 / h}, {-2, 0.5 / h}};
    return {{-1, -0.5 / h}, {1, 0.5 / h}};
}

std::vector<Tap> second_stencil(int i, int n, double h) {
    const double s = 1.0 / (h * h);
    if (i == 0) return {{0, 2 * s}, {1, -5 * s}, {2, 4 * s}, {3, -s}};
    if (i == n) return {{0, 2 * s}, {-1, -5 * s}, {-2, 4 * s}, {-3, -s}};
    return {{-1, s}, {0, -2 * s}, {1, s}};
}

struct NodeDerivs {
    double gx, gy, gxx, gxy, gyy;
};

NodeDerivs node_derivatives(const RectGrid& grid, std::span<const double> g, int i, int j) {
    const auto fx = first_stencil(i, grid.nx(), grid.hx());
    const auto fy = first_stencil(j, grid.ny(), grid.hy());
    const auto sx = second_stencil(i, grid.nx(), grid.hx());
    const auto sy = second_stencil(j, grid.ny(), grid.hy());
    NodeDerivs d{0, 0, 0, 0, 0};
    for (const auto& t : fx) d.gx += t.weight * g[grid.index(i + t.offset, j)];
    for (const auto& t : fy) d.gy += t.weight * g[grid.index(i, j + t.offset)];
    for (const auto& t : sx) d.gxx += t.weight * g[grid.index(i + t.offset, j)];
    for (const auto& t : sy) d.gyy += t.weight * g[grid.index(i, j + t.offset)];
    for (const auto& a : fx)
        for (const auto& b : fy) d.gxy += a.weight * b.weight * g[grid.index(i + a.offset, j + b.offset)];
    return d;
}

struct Columns {
    std::vector<double> gx, gy, gxx, gxy, gyy;
    std::vector<double> w, a11, a12, a22, s1, s2, lmin, lmax;

    void resize(std::size_t n) {
        for (auto* v : {&gx, &gy, &gxx, &gxy, &gyy, &w, &a11, &a12, &a22, &s1, &s2, &lmin, &lmax}) v->resize(n);
    }
    void curvature() {
        kernels::graph_curvature({gx, gy, gxx, gxy, gyy}, {w, a11, a12, a22, s1, s2, lmin, lmax});
    }
};

void fill_nodes(const RectGrid& grid, std::span<const double> g, const std::vector<std::size_t>& nodes, Columns& c) {
    c.resize(nodes.size());
    for (std::size_t m = 0; m < nodes.size(); ++m) {
        const auto d = node_derivatives(grid, g, grid.col(nodes[m]), grid.row(nodes[m]));
        c.gx[m] = d.gx;
        c.gy[m] = d.gy;
        c.gxx[m] = d.gxx;
        c.gxy[m] = d.gxy;
        c.gyy[m] = d.gyy;
    }
    c.curvature();
}

inline double sigma_k_of(int k, double s1, double s2) { return k == 1 ? s1 : s2; }
inline double cone_margin(int k, double s1, double s2) { return k == 1 ? s1 : std::min(s1, s2); }

double h_at(const GraphProblem& prob, std::size_t node, double g) {
    if (prob.H_samples) return (*prob.H_samples)[node];
    const auto& grid = *prob.grid;
    return prob.H({grid.x(grid.col(node)), grid.y(grid.row(node)), g});
}

struct GraphScratch {
    std::vector<double> g;
    Columns cols;
};

Evaluation evaluate(const GraphProblem& prob, GraphScratch& s, std::span<double> residual) {
    const auto& grid = *prob.grid;
    const auto& interior = grid.interior();
    fill_nodes(grid, s.g, interior, s.cols);
    Evaluation ev;
    ev.min_cone_margin = std::numeric_limits<double>::infinity();
    ev.min_aux = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < interior.size(); ++m) {
        const double margin = cone_margin(prob.k, s.cols.s1[m], s.cols.s2[m]);
        ev.min_cone_margin = std::min(ev.min_cone_margin, margin);
        ev.min_aux = std::min(ev.min_aux, s.cols.w[m]);
        // sigma_1 is linear in A, so k = 1 is elliptic without a cone constraint
        if (prob.k > 1 && (!(margin > 0.0) || !std::isfinite(margin))) ev.violations.push_back(interior[m]);
        const std::size_t node = interior[m];
        residual[m] = sigma_k_of(prob.k, s.cols.s1[m], s.cols.s2[m]) -
                      h_at(prob, node, s.g[node]) * std::pow(s.cols.w[m], -prob.q);
    }
    ev.admissible = ev.violations.empty();
    return ev;
}

void check_field(const GraphField& field, const GraphProblem& prob) {
    if (!field.grid || field.g.size() != prob.grid->size() || field.grid->nx() != prob.grid->nx() ||
        field.grid->ny() != prob.grid->ny()) {
        throw DomainError("graph field does not match the problem grid");
    }
}

}  // namespace

RectGrid::RectGrid(double x0, double x1, double y0, double y1, int nx, int ny)
    : x0_(x0), x1_(x1), y0_(y0), y1_(y1), nx_(nx), ny_(ny) {
    if (!(x1 > x0) || !(y1 > y0)) throw DomainError("rectangle must have positive extent");
    if (nx < 4 || ny < 4) throw DomainError("rectangle grid needs at least 4 intervals per axis");
    hx_ = (x1 - x0) / nx;
    hy_ = (y1 - y0) / ny;
    for (int j = 1; j < ny; ++j)
        for (int i = 1; i < nx; ++i) interior_.push_back(index(i, j));
}

bool RectGrid::on_boundary(std::size_t k) const noexcept {
    const int i = col(k), j = row(k);
    return i == 0 || j == 0 || i == nx_ || j == ny_;
}

RectGridPtr make_rect_grid(double x0, double x1, double y0, double y1, int nx, int ny) {
    return std::make_shared<const RectGrid>(x0, x1, y0, y1, nx, ny);
}

GraphField ExactGraph::sample(const RectGridPtr& grid) const {
    GraphField f{grid, std::vector<double>(grid->size())};
    for (std::size_t k = 0; k < grid->size(); ++k) f.g[k] = value(grid->x(grid->col(k)), grid->y(grid->row(k)));
    return f;
}

ExactGraph sphere_cap(double R, double cx, double cy) {
    if (!(R > 0.0)) throw DomainError("cap radius must be positive");
    auto rad2 = [R, cx, cy](double x, double y) {
        const double r2 = R * R - (x - cx) * (x - cx) - (y - cy) * (y - cy);
        if (!(r2 > 0.0)) throw DomainError("point outside the cap footprint");
        return r2;
    };
    ExactGraph e;
    e.name = "cap";
    e.value = [rad2](double x, double y) { return std::sqrt(rad2(x, y)); };
    e.grad = [rad2, cx, cy](double x, double y) {
        const double s = std::sqrt(rad2(x, y));
        return Eigen::Vector2d(-(x - cx) / s, -(y - cy) / s);
    };
    e.hess = [rad2, cx, cy](double x, double y) {
        const double r2 = rad2(x, y), s = std::sqrt(r2);
        const Eigen::Vector2d d(x - cx, y - cy);
        // D^2 sqrt(R^2 - |d|^2) = -I/s - d d^T / s^3
        return Eigen::Matrix2d(-Eigen::Matrix2d::Identity() / s - d * d.transpose() / (r2 * s));
    };
    return e;
}

ExactGraph paraboloid(double alpha) {
    ExactGraph e;
    e.name = "paraboloid";
    e.value = [alpha](double x, double y) { return alpha * (x * x + y * y); };
    e.grad = [alpha](double x, double y) { return Eigen::Vector2d(2 * alpha * x, 2 * alpha * y); };
    e.hess = [alpha](double, double) { return Eigen::Matrix2d(2 * alpha * Eigen::Matrix2d::Identity()); };
    return e;
}

ExactGraph tilted_cap(double R, double b1, double b2) {
    ExactGraph cap = sphere_cap(R);
    ExactGraph e;
    e.name = "tilted_cap";
    e.value = [cap, b1, b2](double x, double y) { return cap.value(x, y) + b1 * x + b2 * y; };
    e.grad = [cap, b1, b2](double x, double y) { return Eigen::Vector2d(cap.grad(x, y) + Eigen::Vector2d(b1, b2)); };
    e.hess = cap.hess;
    return e;
}

std::vector<std::string> GraphProblem::validate() const {
    if (!grid) throw DomainError("graph problem has no grid");
    if (k < 1 || k > 2) throw DomainError("graph problem needs 1 <= k <= 2 (n = 2)");
    if (!std::isfinite(q)) throw DomainError("q must be finite");
    if (boundary.size() != grid->size()) throw DomainError("boundary data must cover every grid node");
    for (std::size_t n = 0; n < grid->size(); ++n) {
        if (grid->on_boundary(n) && !std::isfinite(boundary[n])) throw DomainError("non-finite boundary value");
    }
    if (H_samples) {
        if (H_samples->size() != grid->size()) throw DomainError("H samples must cover every grid node");
        for (std::size_t n : grid->interior()) {
            if (!((*H_samples)[n] > 0.0)) throw DomainError("H must be positive");
        }
    }
    std::vector<std::string> warnings;
    if (q > 1.0) warnings.emplace_back("q > 1: outside the range of the interior curvature estimate");
    return warnings;
}

GraphShape graph_shape(const Eigen::Vector2d& Dg, const Eigen::Matrix2d& D2g) {
    const double w = std::sqrt(1.0 + Dg.squaredNorm());
    const Eigen::Matrix2d gamma = Eigen::Matrix2d::Identity() - Dg * Dg.transpose() / (w * (1.0 + w));
    const Eigen::Matrix2d a = -gamma * D2g * gamma / w;
    const Eigen::Matrix2d sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(sym, Eigen::EigenvaluesOnly);
    const Eigen::Vector2d ev = es.eigenvalues();
    return {Spectrum{ev(0), ev(1)}, ev.norm()};
}

std::vector<double> graph_residual(const GraphField& field, const GraphProblem& prob) {
    prob.validate();
    check_field(field, prob);
    GraphScratch s;
    s.g = field.g;
    std::vector<double> r(prob.grid->interior().size());
    const Evaluation ev = evaluate(prob, s, r);
    if (!ev.admissible) {
        throw ConeViolation("graph spectrum outside Gamma_" + std::to_string(prob.k) + " at " +
                                std::to_string(ev.violations.size()) + " node(s), first " +
                                std::to_string(ev.violations.front()),
                            ev.violations);
    }
    return r;
}

std::vector<double> manufactured_H(const ExactGraph& exact, const RectGridPtr& grid, int k, double q) {
    if (k < 1 || k > 2) throw DomainError("manufactured_H needs 1 <= k <= 2");
    std::vector<double> H(grid->size());
    std::vector<std::size_t> bad;
    for (std::size_t n = 0; n < grid->size(); ++n) {
        const double x = grid->x(grid->col(n)), y = grid->y(grid->row(n));
        const Eigen::Vector2d p = exact.grad(x, y);
        const auto shape = graph_shape(p, exact.hess(x, y));
        const double s1 = sigma(shape.lambda, 1), s2 = sigma(shape.lambda, 2);
        if (k > 1 && !(cone_margin(k, s1, s2) > 0.0)) bad.push_back(n);
        H[n] = sigma_k_of(k, s1, s2) * std::pow(1.0 + p.squaredNorm(), 0.5 * q);
    }
    if (!bad.empty()) {
        throw ConeViolation(exact.name + " leaves Gamma_" + std::to_string(k) + " at " + std::to_string(bad.size()) +
                                " node(s)",
                            bad);
    }
    return H;
}

NewtonSystem graph_system(const GraphProblem& prob) {
    const RectGrid& grid = *prob.grid;
    const auto& interior = grid.interior();
    std::vector<long> unknown_of(grid.size(), -1);
    for (std::size_t m = 0; m < interior.size(); ++m) unknown_of[interior[m]] = static_cast<long>(m);

    NewtonSystem sys;
    sys.unknowns = interior.size();
    sys.column_rows.resize(interior.size());
    for (std::size_t m = 0; m < interior.size(); ++m) {
        const int i = grid.col(interior[m]), j = grid.row(interior[m]);
        for (int dj = -1; dj <= 1; ++dj) {
            for (int di = -1; di <= 1; ++di) {
                const long u = unknown_of[grid.index(i + di, j + dj)];
                if (u >= 0) sys.column_rows[m].push_back(static_cast<std::size_t>(u));
            }
        }
    }
    auto scratch = std::make_shared<GraphScratch>();
    scratch->g = prob.boundary;
    sys.residual = [prob, scratch](std::span<const double> x, std::span<double> r) {
        const auto& interior = prob.grid->interior();
        for (std::size_t m = 0; m < interior.size(); ++m) scratch->g[interior[m]] = x[m];
        return evaluate(prob, *scratch, r);
    };
    return sys;
}

GraphField dirichlet_newton_solve(const GraphField& start, const GraphProblem& prob, const NewtonOptions& opts,
                                  SolveReport& report) {
    prob.validate();
    check_field(start, prob);
    const auto& interior = prob.grid->interior();
    std::vector<double> x(interior.size());
    for (std::size_t m = 0; m < interior.size(); ++m) x[m] = start.g[interior[m]];
    const auto sol = newton_solve(graph_system(prob), std::move(x), opts, report);
    GraphField out{prob.grid, prob.boundary};
    for (std::size_t m = 0; m < interior.size(); ++m) out.g[interior[m]] = sol[m];
    return out;
}

GraphGeometry graph_geometry(const GraphField& field) {
    const RectGrid& grid = *field.grid;
    std::vector<std::size_t> all(grid.size());
    for (std::size_t n = 0; n < all.size(); ++n) all[n] = n;
    Columns c;
    fill_nodes(grid, field.g, all, c);
    GraphGeometry geo;
    geo.gx = std::move(c.gx);
    geo.gy = std::move(c.gy);
    geo.gxx = std::move(c.gxx);
    geo.gxy = std::move(c.gxy);
    geo.gyy = std::move(c.gyy);
    geo.w = std::move(c.w);
    geo.lambda1 = std::move(c.lmin);
    geo.lambda2 = std::move(c.lmax);
    geo.sigma1 = std::move(c.s1);
    geo.sigma2 = std::move(c.s2);
    geo.A_norm.resize(all.size());
    for (std::size_t n = 0; n < all.size(); ++n) geo.A_norm[n] = std::hypot(geo.lambda1[n], geo.lambda2[n]);
    return geo;
}

CurvatureBoundProbe curvature_bound_probe(const GraphField& field, const GraphProblem& prob) {
    check_field(field, prob);
    const auto geo = graph_geometry(field);
    CurvatureBoundProbe probe;
    for (std::size_t n = 0; n < geo.A_norm.size(); ++n) {
        double& sup = field.grid->on_boundary(n) ? probe.sup_boundary_A : probe.sup_interior_A;
        sup = std::max(sup, geo.A_norm[n]);
    }
    probe.ratio = probe.sup_interior_A / (1.0 + probe.sup_boundary_A);
    probe.q = prob.q;
    probe.k = prob.k;
    probe.nx = field.grid->nx();
    probe.ny = field.grid->ny();
    return probe;
}

GraphCampaign run_graph_campaign(const GraphProblem& base, const ExactGraph& data, const std::vector<double>& qs,
                                 const std::vector<int>& sizes, const NewtonOptions& opts) {
    if (!base.grid) throw DomainError("campaign needs a base grid for the domain");
    GraphCampaign out;
    for (int size : sizes) {
        const auto grid = make_rect_grid(base.grid->x0(), base.grid->x1(), base.grid->y0(), base.grid->y1(), size, size);
        const GraphField start = data.sample(grid);
        for (double q : qs) {
            GraphProblem prob = base;
            prob.grid = grid;
            prob.q = q;
            prob.boundary = start.g;
            if (prob.H_samples) throw DomainError("campaign data must give H as a polynomial");
            CampaignRow row;
            row.q = q;
            row.nx = row.ny = size;
            SolveReport rep;
            try {
                const auto sol = dirichlet_newton_solve(start, prob, opts, rep);
                row.converged = true;
                row.iterations = rep.iterations;
                row.probe = curvature_bound_probe(sol, prob);
                row.message = "converged";
            } catch (const NewtonFailure& e) {
                row.iterations = e.report().iterations;
                row.message = e.what();
            } catch (const ConeViolation& e) {
                row.message = e.what();
            }
            out.rows.push_back(row);
        }
    }

    for (int size : sizes) {
        bool positive_ok = true, nonpositive_ok = true;
        for (const auto& r : out.rows) {
            if (r.nx != size) continue;
            if (r.q <= 0.0) nonpositive_ok = nonpositive_ok && r.converged;
            else if (r.q <= 1.0) positive_ok = positive_ok && r.converged;
        }
        if (positive_ok && !nonpositive_ok) out.regime_consistent = false;
    }
    for (double q : qs) {
        if (q > 1.0) continue;
        for (std::size_t s = 1; s < sizes.size(); ++s) {
            const CampaignRow* coarse = nullptr;
            const CampaignRow* fine = nullptr;
            for (const auto& r : out.rows) {
                if (r.q != q) continue;
                if (r.nx == sizes[s - 1]) coarse = &r;
                if (r.nx == sizes[s]) fine = &r;
            }
            if (coarse && fine && coarse->converged && fine->converged) {
                out.max_ratio_variation = std::max(
                    out.max_ratio_variation, std::abs(fine->probe.ratio - coarse->probe.ratio) / coarse->probe.ratio);
            }
        }
    }
    return out;
}

}  // namespace kcurv
