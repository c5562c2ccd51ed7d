// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "kcurv/config.hpp"
#include "kcurv/errors.hpp"
#include "kcurv/format.hpp"
#include "kcurv/graph_solver.hpp"
#include "kcurv/inequality_lab.hpp"
#include "kcurv/measure_solver.hpp"
#include "kcurv/sphere_geometry.hpp"
#include "kcurv/symmfunc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace kcurv;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome r;
    try {
        r = body();
    } catch (const std::exception& e) {
        r = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < budget_s;
    const bool ok = r.pass && in_time;
    if (!ok) ++failures;
    std::printf("%s criterion %2d  %-44s %8.2fs / %.0fs  %s%s\n", ok ? "PASS" : "FAIL", id, title, secs, budget_s,
                r.detail.c_str(), in_time ? "" : "  [over time budget]");
    std::fflush(stdout);
}

std::string g3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

SpherePolynomial tilted_phi(double c) {
    return SpherePolynomial({{1.0, {0, 0, 0}}, {c, {0, 0, 1}}});
}

MeasureProblem measure_problem(int n_theta, SpherePolynomial phi, double p) {
    MeasureProblem prob;
    prob.op = OperatorSpec::sigma_k(2);
    prob.p = p;
    prob.phi = std::move(phi);
    prob.grid = make_grid(n_theta, 2 * n_theta);
    return prob;
}

std::vector<double> uniform(std::mt19937_64& rng, int n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) x = u(rng);
    return v;
}

Spectrum admissible(std::mt19937_64& rng, int n, int k) {
    for (;;) {
        Spectrum s(uniform(rng, n, -1.0, 2.0));
        if (in_gamma_k(s, k).inside) return s;
    }
}

SymTensor2 random_sym(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = u(rng);
    return SymTensor2::symmetrized(m);
}

double rel(double approx, double exact) { return std::abs(approx - exact) / std::max(std::abs(exact), 1e-300); }

// relative error against the magnitude of the terms being summed: sigma_l(|lambda|)
double term_scale(const Spectrum& s, int l) {
    std::vector<double> a(s.values().begin(), s.values().end());
    for (double& x : a) x = std::abs(x);
    return sigma(Spectrum(a), l);
}

Outcome symmetric_oracle() {
    std::mt19937_64 rng(20240601);
    std::uniform_int_distribution<int> dim(1, 8);
    double worst = 0.0, worst_plain = 0.0;
    int evaluations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = dim(rng);
        const Spectrum s(uniform(rng, n, -2.0, 2.0));
        for (int l = 0; l <= n; ++l) {
            const double a = sigma(s, l), b = sigma_subset_oracle(s, l);
            worst = std::max(worst, std::abs(a - b) / std::max(term_scale(s, l), 1e-300));
            if (std::abs(b) > 1e-3 * term_scale(s, l)) worst_plain = std::max(worst_plain, rel(a, b));
            ++evaluations;
        }
    }
    return {worst <= 1e-12, std::to_string(evaluations) + " values, max rel err " + g3(worst) +
                                " (well-conditioned subset " + g3(worst_plain) + ")"};
}

Outcome derivative_consistency() {
    std::mt19937_64 rng(77);
    double worst_grad = 0.0, worst_op = 0.0, worst_hess = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + trial % 5;
        const int k = 1 + (trial / 5) % n;
        const Spectrum s = admissible(rng, n, k);

        // sigma_grad, fourth-order central differences
        const auto g = sigma_grad(s, k);
        const double h = 1e-3;
        for (int i = 0; i < n; ++i) {
            auto at = [&](double t) {
                std::vector<double> v(s.values().begin(), s.values().end());
                v[static_cast<std::size_t>(i)] += t;
                return sigma(Spectrum(v), k);
            };
            const double fd = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
            worst_grad = std::max(worst_grad, std::abs(fd - g[static_cast<std::size_t>(i)]) / (1 + std::abs(fd)));
        }

        // operator_value_grad at a random symmetric matrix with this spectrum
        Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(random_sym(rng, n).matrix()).householderQ();
        Eigen::VectorXd d(n);
        for (int i = 0; i < n; ++i) d(i) = s[i];
        const SymTensor2 a = SymTensor2::symmetrized(q * d.asDiagonal() * q.transpose());
        const OperatorSpec op = (k >= 2 && trial % 2 == 1) ? OperatorSpec::quotient(k, k - 1) : OperatorSpec::sigma_k(k);
        const auto vg = operator_value_grad(a, op);
        const SymTensor2 b = random_sym(rng, n);
        auto f = [&](double t) { return operator_value(eigen_spectrum(SymTensor2::symmetrized(a.matrix() + t * b.matrix())), op); };
        const double fd = (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h);
        const double an = (vg.grad.matrix().array() * b.matrix().array()).sum();
        worst_op = std::max(worst_op, std::abs(fd - an) / (1 + std::abs(fd)));

        // sigma_hess_dir: sigma_k(a + t b) is a polynomial in t
        auto p = [&](double t) { return sigma(SymTensor2(a.matrix() + t * b.matrix()), k); };
        const double hh = 1e-3;
        const double fd2 = (-p(2 * hh) + 16 * p(hh) - 30 * p(0) + 16 * p(-hh) - p(-2 * hh)) / (12 * hh * hh);
        const double an2 = sigma_hess_dir(a, b, k);
        worst_hess = std::max(worst_hess, std::abs(fd2 - an2) / (1 + std::abs(fd2)));
    }
    const double worst = std::max({worst_grad, worst_op, worst_hess});
    return {worst <= 1e-6, "max rel err: sigma_grad " + g3(worst_grad) + ", operator_value_grad " + g3(worst_op) +
                               ", sigma_hess_dir " + g3(worst_hess)};
}

Outcome round_sphere() {
    double worst_u = 0.0, worst_lambda = 0.0, worst_res = 0.0;
    for (double r : {0.5, 0.8, 1.0, 1.7, 3.2}) {
        const auto grid = make_grid(32, 64);
        const auto field = RadialField::constant(grid, r);
        const auto geom = radial_geometry(field);
        for (std::size_t n = 0; n < grid->size(); ++n) {
            worst_u = std::max(worst_u, std::abs(geom.curv.u[n] - r) / r);
            worst_lambda = std::max({worst_lambda, std::abs(geom.curv.lambda_min[n] * r - 1),
                                     std::abs(geom.curv.lambda_max[n] * r - 1)});
        }
        for (double p : {-0.5, 0.5, 1.0, 2.0}) {
            for (int k : {1, 2}) {
                MeasureProblem prob;
                prob.op = OperatorSpec::sigma_k(k);
                prob.p = p;
                prob.grid = grid;
                const double exact = binomial(2, k) * std::pow(r, -k) - std::pow(r, p);
                const double scale = binomial(2, k) * std::pow(r, -k) + std::pow(r, p);
                for (double v : residual(field, prob)) worst_res = std::max(worst_res, std::abs(v - exact) / scale);
            }
        }
    }
    const double tol = 64 * std::numeric_limits<double>::epsilon();
    return {worst_u <= tol && worst_lambda <= tol && worst_res <= tol,
            "5 radii, rel err u " + g3(worst_u) + ", lambda " + g3(worst_lambda) + ", residual " + g3(worst_res)};
}

Outcome continuity_anchor() {
    const auto prob = measure_problem(24, SpherePolynomial::constant(1.0), 1.0);
    const auto res = homotopy_solve(prob, {});
    double dev = 0.0;
    for (double r : res.field.rho) dev = std::max(dev, std::abs(r - 1.0));

    const NewtonOptions opts{1e-12, 50};
    const std::vector<RadialField> starts{
        RadialField::constant(prob.grid, 0.8),
        RadialField::sample(prob.grid, [](const Eigen::Vector3d& x) { return ellipsoid_radius(1.0, 1.2, 0.85, x); })};
    double start_dev = 0.0;
    bool all = true;
    for (const auto& s : starts) {
        SolveReport rep;
        const auto sol = newton_solve(s, prob, opts, rep);
        all = all && rep.converged;
        for (double r : sol.rho) start_dev = std::max(start_dev, std::abs(r - 1.0));
    }
    const auto probe = uniqueness_probe(prob, starts, opts);
    all = all && probe.complete;
    return {all && dev <= 1e-8 && start_dev <= 1e-8 && probe.max_distance <= 1e-8,
            "homotopy |rho-1| " + g3(dev) + ", two starts |rho-1| " + g3(start_dev) + ", probe distance " +
                g3(probe.max_distance)};
}

Outcome existence_run() {
    bool ok = true;
    std::string detail;
    for (double p : {0.5, 1.0}) {
        std::vector<RadialField> sols;
        double res_max = 0.0, u_min = 1e300, margin = 1e300;
        bool completed = true;
        for (int nt : {12, 24, 48}) {
            const auto prob = measure_problem(nt, tilted_phi(0.2), p);
            const auto r = homotopy_solve(prob, {});
            completed = completed && r.trace.completed && r.trace.states.back().t == 1.0;
            res_max = std::max(res_max, max_abs(residual(r.field, prob)));
            const auto geom = radial_geometry(r.field);
            for (std::size_t n = 0; n < geom.size(); ++n) {
                u_min = std::min(u_min, geom.curv.u[n]);
                margin = std::min({margin, geom.curv.sigma1[n], geom.curv.sigma2[n]});
            }
            sols.push_back(r.field);
        }
        std::vector<double> diff;
        for (std::size_t i = 0; i + 1 < sols.size(); ++i) {
            const auto fine = resample(sols[i + 1], *sols[i].grid);
            double d = 0.0;
            for (std::size_t n = 0; n < fine.size(); ++n) d = std::max(d, std::abs(fine[n] - sols[i].rho[n]));
            diff.push_back(d);
        }
        const double order = std::log2(diff[0] / diff[1]);
        const bool this_ok = completed && res_max <= 1e-8 && margin > 0 && u_min > 0 && order >= 1.8;
        ok = ok && this_ok;
        detail += (detail.empty() ? "" : "; ") + std::string("p=") + g3(p) + ": residual " + g3(res_max) +
                  ", min cone margin " + g3(margin) + ", u_min " + g3(u_min) + ", order " + g3(order);
    }
    return {ok, detail};
}

GraphField bumped(const GraphField& f, double amp) {
    GraphField out = f;
    const auto& g = *f.grid;
    for (std::size_t n = 0; n < g.size(); ++n) {
        out.g[n] += amp * std::cos(std::numbers::pi * g.x(g.col(n)) / 2) * std::cos(std::numbers::pi * g.y(g.row(n)) / 2);
    }
    return out;
}

Outcome graph_recovery() {
    const auto cap = sphere_cap(2.0);
    bool ok = true;
    std::string detail;
    for (double q : {-1.0, 0.0, 1.0}) {
        std::vector<double> err;
        bool admissible = true;
        for (int n : {16, 32, 64}) {
            GraphProblem prob;
            prob.grid = make_rect_grid(-1, 1, -1, 1, n, n);
            prob.k = 2;
            prob.q = q;
            prob.H_samples = manufactured_H(cap, prob.grid, 2, q);
            prob.boundary = cap.sample(prob.grid).g;
            SolveReport rep;
            const auto sol = dirichlet_newton_solve(bumped(cap.sample(prob.grid), 1e-2), prob, {1e-10, 30}, rep);
            for (const auto& it : rep.history) admissible = admissible && it.min_cone_margin > 0 && it.min_aux > 0;
            const auto ref = cap.sample(prob.grid);
            double e = 0.0;
            for (std::size_t m = 0; m < sol.g.size(); ++m) e = std::max(e, std::abs(sol.g[m] - ref.g[m]));
            err.push_back(e);
        }
        const double o1 = std::log2(err[0] / err[1]), o2 = std::log2(err[1] / err[2]);
        ok = ok && admissible && o1 >= 1.8 && o2 >= 1.8;
        detail += (detail.empty() ? "" : "; ") + std::string("q=") + g3(q) + ": orders " + g3(o1) + ", " + g3(o2) +
                  (admissible ? "" : " (inadmissible iterate)");
    }
    return {ok, detail};
}

Outcome probe_stability() {
    GraphProblem base;
    base.grid = make_rect_grid(-1, 1, -1, 1, 16, 16);
    base.k = 2;
    base.H = GraphPolynomial::constant(0.25);
    const auto camp = run_graph_campaign(base, sphere_cap(2.0), {-1.0, -0.5, 0.0, 0.5, 1.0}, {16, 32, 64}, {1e-10, 40});
    bool converged = true;
    for (const auto& r : camp.rows) converged = converged && r.converged;
    return {converged && camp.max_ratio_variation <= 0.10,
            std::to_string(camp.rows.size()) + " runs, max successive ratio variation " +
                g3(100 * camp.max_ratio_variation) + "%"};
}

Outcome inequality_campaign() {
    const auto cfg = parse_config_text(R"({"mode": "verify-inequalities", "seed": 1,
                                           "inequalities": {"ivochkina": false}})");
    std::uint64_t hard = 0, samples = 0, inconclusive = 0, checks = 0;
    bool identical = true;
    for (const auto& sc : cfg.inequalities->runs) {
        std::string digest[2];
        for (int pass = 0; pass < 2; ++pass) {
            std::ostringstream csv;
            const auto s = run_campaign(sc, &csv);
            digest[pass] = sha256_hex(csv.str());
            if (pass == 0) {
                hard += s.hard_failures();
                samples += s.samples;
                inconclusive += s.gll.inconclusive + s.krylov.inconclusive;
                checks += s.gll.pass + s.gll.fail + s.gll.inconclusive + s.krylov.pass + s.krylov.fail +
                          s.krylov.inconclusive;
            }
        }
        identical = identical && digest[0] == digest[1];
    }
    return {hard == 0 && identical && samples == 10000 * cfg.inequalities->runs.size(),
            std::to_string(cfg.inequalities->runs.size()) + " (n,k) pairs, " + std::to_string(samples) +
                " samples, " + std::to_string(checks) + " checks, " + std::to_string(hard) + " hard failures, " +
                std::to_string(inconclusive) + " inconclusive, rerun " + (identical ? "identical" : "DIFFERS")};
}

Outcome ivochkina_boundary() {
    bool ok = true;
    std::string detail;
    for (double q : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
        const auto r = check_ivochkina_condition(2, q, 3.0, 61);
        ok = ok && (r.holds == (q <= 0.0));
        detail += (detail.empty() ? "" : ", ") + std::string("q=") + g3(q) + (r.holds ? " holds" : " fails");
    }
    return {ok, detail};
}

Outcome structure_equations() {
    std::vector<double> res;
    for (int nt : {16, 32, 64}) {
        const auto grid = make_grid(nt, 2 * nt);
        const auto field = RadialField::sample(grid, [](const Eigen::Vector3d& x) {
            return ellipsoid_radius(1.0, 1.15, 0.9, x) * (1.0 + 0.05 * x(0) * x(1));
        });
        res.push_back(structure_equation_residuals(radial_geometry(field)).gauss_max);
    }
    const double o1 = std::log2(res[0] / res[1]), o2 = std::log2(res[1] / res[2]);
    return {o1 >= 1.8 && o2 >= 1.8, "residuals " + g3(res[0]) + ", " + g3(res[1]) + ", " + g3(res[2]) + "; orders " +
                                        g3(o1) + ", " + g3(o2)};
}

}  // namespace

int main() {
    criterion(1, "symmetric functions vs subset enumeration", 5, symmetric_oracle);
    criterion(2, "derivatives vs finite differences", 10, derivative_consistency);
    criterion(3, "round sphere exactness", 5, round_sphere);
    criterion(4, "continuity anchor and uniqueness", 60, continuity_anchor);
    criterion(5, "nontrivial existence run", 600, existence_run);
    criterion(6, "graph manufactured recovery", 300, graph_recovery);
    criterion(7, "interior curvature probe stability", 600, probe_stability);
    criterion(8, "inequality campaign", 300, inequality_campaign);
    criterion(9, "Ivochkina condition boundary", 30, ivochkina_boundary);
    criterion(10, "structure equation consistency", 60, structure_equations);
    std::printf("%s: %d of 10 criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
    return failures == 0 ? 0 : 1;
}
