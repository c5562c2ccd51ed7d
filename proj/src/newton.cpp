#include "kcurv/newton.hpp"

#include "kcurv/format.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace kcurv {

namespace {

double max_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double squared_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

NewtonIterate snapshot(int it, std::span<const double> r, const Evaluation& ev) {
    NewtonIterate out;
    out.iteration = it;
    out.residual_max = max_norm(r);
    out.residual_l2 = std::sqrt(squared_norm(r));
    out.min_cone_margin = ev.min_cone_margin;
    out.min_aux = ev.min_aux;
    return out;
}

}  // namespace

std::vector<int> color_columns(const NewtonSystem& system) {
    const std::size_t n = system.unknowns;
    // row -> columns touching it
    std::vector<std::vector<std::size_t>> row_cols(n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t r : system.column_rows[j]) row_cols[r].push_back(j);
    }
    std::vector<int> color(n, -1);
    std::vector<std::size_t> stamp;
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t r : system.column_rows[j]) {
            for (std::size_t other : row_cols[r]) {
                const int c = color[other];
                if (c >= 0) {
                    if (stamp.size() <= static_cast<std::size_t>(c)) stamp.resize(static_cast<std::size_t>(c) + 1, n);
                    stamp[static_cast<std::size_t>(c)] = j;
                }
            }
        }
        int c = 0;
        while (static_cast<std::size_t>(c) < stamp.size() && stamp[static_cast<std::size_t>(c)] == j) ++c;
        color[j] = c;
    }
    return color;
}

Eigen::SparseMatrix<double> assemble_jacobian(const NewtonSystem& system, std::span<const double> x,
                                              std::span<const double> r0, const std::vector<int>& colors) {
    const std::size_t n = system.unknowns;
    const int n_colors = colors.empty() ? 0 : *std::max_element(colors.begin(), colors.end()) + 1;
    std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(n_colors));
    for (std::size_t j = 0; j < n; ++j) groups[static_cast<std::size_t>(colors[j])].push_back(j);

    const double root_eps = std::sqrt(std::numeric_limits<double>::epsilon());
    std::vector<double> xp(x.begin(), x.end());
    std::vector<double> rp(n);
    std::vector<double> step(n);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(n * 9);
    for (const auto& group : groups) {
        for (std::size_t j : group) {
            // exact representable step
            const double h = root_eps * (1.0 + std::abs(x[j]));
            xp[j] = x[j] + h;
            step[j] = xp[j] - x[j];
        }
        system.residual(xp, rp);
        for (std::size_t j : group) {
            for (std::size_t r : system.column_rows[j]) {
                triplets.emplace_back(static_cast<int>(r), static_cast<int>(j), (rp[r] - r0[r]) / step[j]);
            }
            xp[j] = x[j];
        }
    }
    Eigen::SparseMatrix<double> jac(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    jac.setFromTriplets(triplets.begin(), triplets.end());
    return jac;
}

std::vector<double> newton_solve(const NewtonSystem& system, std::vector<double> x,
                                 const NewtonOptions& opts, SolveReport& report) {
    const std::size_t n = system.unknowns;
    report = SolveReport{};
    std::vector<double> r(n);
    Evaluation ev = system.residual(x, r);
    if (!ev.admissible) {
        throw ConeViolation("Newton start is not admissible (cone or support-function violation at " +
                                std::to_string(ev.violations.size()) + " node(s))",
                            ev.violations);
    }
    report.history.push_back(snapshot(0, r, ev));
    const auto colors = system.jacobian ? std::vector<int>{} : color_columns(system);

    std::vector<double> trial(n), r_trial(n);
    for (int it = 0;; ++it) {
        const double res_max = report.history.back().residual_max;
        if (res_max <= opts.tol) {
            report.converged = true;
            report.iterations = it;
            report.message = "converged";
            return x;
        }
        if (it >= opts.max_iter) {
            report.iterations = it;
            report.message = "max_iter exceeded (residual " + fmt17(res_max) + ")";
            throw NewtonFailure("Newton: " + report.message, report, x);
        }

        const auto jac = system.jacobian ? system.jacobian(x, r) : assemble_jacobian(system, x, r, colors);
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.analyzePattern(jac);
        lu.factorize(jac);
        if (lu.info() != Eigen::Success) {
            report.iterations = it;
            report.message = "singular Jacobian";
            throw NewtonFailure("Newton: " + report.message, report, x);
        }
        const Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(n));
        const Eigen::VectorXd delta = lu.solve(-rv);
        if (!delta.allFinite()) {
            report.iterations = it;
            report.message = "non-finite Newton direction";
            throw NewtonFailure("Newton: " + report.message, report, x);
        }

        const double f0 = squared_norm(r);
        double lambda = 1.0;
        int vetoed = 0;
        bool accepted = false;
        Evaluation ev_trial;
        int b = 0;
        for (; b <= opts.max_backtracks; ++b, lambda *= opts.backtrack) {
            for (std::size_t j = 0; j < n; ++j) trial[j] = x[j] + lambda * delta[static_cast<Eigen::Index>(j)];
            ev_trial = system.residual(trial, r_trial);
            if (!ev_trial.admissible) {
                ++vetoed;
                continue;
            }
            // Armijo on f = |R|^2 along the Newton direction, f'(0) = -2 f
            if (squared_norm(r_trial) <= (1.0 - 2.0 * opts.armijo * lambda) * f0) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            report.iterations = it;
            report.message = "line search found no admissible decreasing step (" + std::to_string(vetoed) +
                             " trial points vetoed)";
            throw NewtonFailure("Newton: " + report.message, report, x);
        }
        x.swap(trial);
        r.swap(r_trial);
        NewtonIterate snap = snapshot(it + 1, r, ev_trial);
        snap.damping = lambda;
        snap.backtracks = b;
        snap.vetoed = vetoed;
        report.history.push_back(snap);
    }
}

}  // namespace kcurv
