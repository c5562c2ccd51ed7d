#pragma once

// Damped Newton iteration on a discretized residual, shared by the sphere and
// graph solvers. The Jacobian is assembled from forward differences of the
// residual, one column per unknown; columns with disjoint row supports are
// perturbed together, which yields the same column values at a fraction of
// the residual evaluations.

#include "kcurv/errors.hpp"

#include <Eigen/SparseCore>

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace kcurv {

/// Outcome of one residual evaluation.
struct Evaluation {
    bool admissible = true;         ///< every node in the cone and aux > 0
    double min_cone_margin = 0.0;   ///< min over nodes of min_{l<=k} sigma_l
    double min_aux = 0.0;           ///< min support value u (sphere) or w (graph)
    std::vector<std::size_t> violations;
};

/// Residual callback: fills `residual` (one entry per unknown) from `x`.
using ResidualFn = std::function<Evaluation(std::span<const double> x, std::span<double> residual)>;

struct NewtonSystem {
    std::size_t unknowns = 0;
    ResidualFn residual;
    /// column_rows[j]: residual rows that depend on unknown j
    std::vector<std::vector<std::size_t>> column_rows;
    /// Optional replacement for the coloured forward-difference Jacobian,
    /// called with x and r0 = R(x).
    std::function<Eigen::SparseMatrix<double>(std::span<const double> x, std::span<const double> r0)> jacobian;
};

struct NewtonOptions {
    double tol = 1e-10;            ///< max-norm residual target
    int max_iter = 50;
    double armijo = 1e-4;          ///< on the squared 2-norm
    double backtrack = 0.5;
    int max_backtracks = 40;
};

struct NewtonIterate {
    int iteration = 0;
    double residual_max = 0.0;
    double residual_l2 = 0.0;
    double damping = 0.0;          ///< step length accepted to reach this iterate (0 for the start)
    int backtracks = 0;
    int vetoed = 0;                ///< trial points rejected for leaving the cone or u <= 0
    double min_cone_margin = 0.0;
    double min_aux = 0.0;
};

struct SolveReport {
    bool converged = false;
    int iterations = 0;
    std::vector<NewtonIterate> history;
    std::string message;

    double final_residual() const { return history.empty() ? 0.0 : history.back().residual_max; }
};

class NewtonFailure : public NonConvergence {
public:
    NewtonFailure(const std::string& what, SolveReport report, std::vector<double> last)
        : NonConvergence(what), report_(std::move(report)), last_(std::move(last)) {}
    const SolveReport& report() const noexcept { return report_; }
    /// Last accepted (admissible) state.
    const std::vector<double>& last_state() const noexcept { return last_; }

private:
    SolveReport report_;
    std::vector<double> last_;
};

/// Greedy distance-1 colouring of the columns (columns sharing a row get distinct colours).
std::vector<int> color_columns(const NewtonSystem& system);

/// Forward-difference Jacobian at x, given residual r0 = R(x).
/// Column step: sqrt(machine eps) * (1 + |x_j|).
Eigen::SparseMatrix<double> assemble_jacobian(const NewtonSystem& system, std::span<const double> x,
                                              std::span<const double> r0, const std::vector<int>& colors);

/// Throws ConeViolation if `start` is not admissible, NewtonFailure on
/// line-search breakdown, a singular Jacobian or max_iter.
std::vector<double> newton_solve(const NewtonSystem& system, std::vector<double> start,
                                 const NewtonOptions& opts, SolveReport& report);

}  // namespace kcurv
