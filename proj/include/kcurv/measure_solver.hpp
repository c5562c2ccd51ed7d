#pragma once

// F(A) = <X, nu>^p phi(X) for radial graphs over S^2, F = sigma_k or the
// quotient sigma_k / sigma_l, solved by damped Newton driven along the
// continuity path phi_t = 1 - t + t phi.

#include "kcurv/newton.hpp"
#include "kcurv/polynomial.hpp"
#include "kcurv/sphere_geometry.hpp"
#include "kcurv/symmfunc.hpp"

#include <string>
#include <vector>

namespace kcurv {

struct MeasureProblem {
    OperatorSpec op = OperatorSpec::sigma_k(2);
    double p = 1.0;
    SpherePolynomial phi = SpherePolynomial::constant(1.0);
    GridPtr grid;

    /// Hard rules (DomainError): p != 0, op valid for n = 2, k + p - l != 0,
    /// phi > 0 at every node. Returns warnings for regimes without a
    /// guarantee (p > 1, quotient operators).
    std::vector<std::string> validate() const;
};

/// Radius r > 0 of the round solution for phi = 1:
/// C(n,k) r^{-k} = r^p, or (C(n,k)/C(n,l)) r^{-(k-l)} = r^p for the quotient.
double initial_sphere_radius(const OperatorSpec& op, double p, int n);

/// F(A) - u^p phi at every node (phi_t with t = 1). Throws ConeViolation
/// listing nodes outside Gamma_k, GeometryError for u <= 0.
std::vector<double> residual(const RadialField& field, const MeasureProblem& prob);

/// Residual system for phi_t; exposed for Jacobian checks.
NewtonSystem measure_system(const MeasureProblem& prob, double t);

/// Throws ConeViolation for an inadmissible start, NewtonFailure otherwise.
RadialField newton_solve(const RadialField& start, const MeasureProblem& prob, const NewtonOptions& opts,
                         SolveReport& report, double t = 1.0);

struct HomotopySchedule {
    double dt_initial = 0.1;
    double dt_min = 1e-4;
    NewtonOptions newton{1e-10, 30};
};

struct TraceEntry {
    double t = 0.0;
    int newton_iters = 0;
    double final_residual = 0.0;
    double min_cone_margin = 0.0;
    double min_u = 0.0;
};

struct StepRecord {
    double t_from = 0.0;
    double t_to = 0.0;
    bool accepted = false;
    std::string note;
};

struct HomotopyTrace {
    std::vector<TraceEntry> states;
    std::vector<StepRecord> steps;
    bool completed = false;
};

struct HomotopyResult {
    RadialField field;
    HomotopyTrace trace;
    SolveReport last_report;
};

class ContinuationFailure : public NonConvergence {
public:
    ContinuationFailure(const std::string& what, HomotopyResult partial)
        : NonConvergence(what), partial_(std::move(partial)) {}
    const HomotopyResult& partial() const noexcept { return partial_; }

private:
    HomotopyResult partial_;
};

/// Continuation in t from the round solution at t = 0. Halves dt on Newton
/// failure, doubles it after two consecutive first-try successes; throws
/// ContinuationFailure once dt falls below dt_min.
HomotopyResult homotopy_solve(const MeasureProblem& prob, const HomotopySchedule& schedule);

struct BoundsReport {
    double rho_min = 0.0, rho_max = 0.0;
    double u_min = 0.0;
    double sigma1_max = 0.0;
    double phi_min = 0.0, phi_max = 0.0;
    int homogeneity = 0;
    double residual_max = 0.0;
    bool admissible = false;
    bool verified = false;       ///< admissible, residual <= tol and u_min > 0
    bool hard_failure = false;   ///< u_min <= 0
};

BoundsReport verify_apriori_bounds(const RadialField& field, const MeasureProblem& prob, double tol = 1e-6);

struct UniquenessReport {
    double max_distance = 0.0;   ///< max over converged pairs of max-node |rho_a - rho_b|
    std::vector<bool> converged;
    std::vector<std::string> messages;
    bool complete = false;       ///< every run converged
};

UniquenessReport uniqueness_probe(const MeasureProblem& prob, const std::vector<RadialField>& starts,
                                  const NewtonOptions& opts);

}  // namespace kcurv
