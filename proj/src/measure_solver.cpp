#include "kcurv/measure_solver.hpp"

#include "kcurv/format.hpp"
#include "kcurv/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace kcurv {

namespace {

constexpr int kDim = 2;

struct MeasureScratch {
    TangentialDerivatives derivs;
    CurvatureFields curv;
};

// F and the cone margin from the invariants of a 2x2 shape operator
inline double operator_from_invariants(const OperatorSpec& op, double s1, double s2) {
    const double num = op.k == 1 ? s1 : s2;
    if (op.kind == OperatorKind::SigmaK || op.l == 0) return num;
    return num / s1;  // quotient with l = 1 (n = 2 leaves no other option)
}

inline double cone_margin(int k, double s1, double s2) { return k == 1 ? s1 : std::min(s1, s2); }

std::vector<double> blended_phi(const MeasureProblem& prob, double t) {
    auto phi = sample_positive(*prob.grid, prob.phi);
    for (double& v : phi) v = (1.0 - t) + t * v;
    return phi;
}

// Shared evaluation: fills residual, returns admissibility info.
Evaluation evaluate(const MeasureProblem& prob, std::span<const double> phi_t, std::span<const double> rho,
                    MeasureScratch& scratch, std::span<double> residual) {
    const SphericalGrid& grid = *prob.grid;
    radial_curvature_fields(grid, rho, scratch.derivs, scratch.curv);
    const auto& c = scratch.curv;
    Evaluation ev;
    ev.min_cone_margin = std::numeric_limits<double>::infinity();
    ev.min_aux = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const double margin = cone_margin(prob.op.k, c.sigma1[n], c.sigma2[n]);
        const double u = c.u[n];
        ev.min_cone_margin = std::min(ev.min_cone_margin, margin);
        ev.min_aux = std::min(ev.min_aux, u);
        const bool ok = rho[n] > 0.0 && margin > 0.0 && u > 0.0 && std::isfinite(margin) && std::isfinite(u);
        if (!ok) ev.violations.push_back(n);
        residual[n] = operator_from_invariants(prob.op, c.sigma1[n], c.sigma2[n]) - std::pow(u, prob.p) * phi_t[n];
    }
    ev.admissible = ev.violations.empty();
    return ev;
}

// Jacobian by the chain rule through the pointwise kernel. At node n the
// residual depends on q = (rho, d1, d2, h11, h12, h22), each an exact linear
// stencil in rho; only dR/dq is differenced. Differencing whole columns
// instead loses the cancellation between the O(1 / (sin^2 theta h^2)) entries
// of the first rows, which stalls Newton on fine grids.
Eigen::SparseMatrix<double> chain_jacobian(const MeasureProblem& prob, std::span<const double> phi_t,
                                           std::span<const double> rho) {
    const SphericalGrid& grid = *prob.grid;
    const std::size_t n = grid.size();
    constexpr std::size_t kVars = 6;
    constexpr std::size_t kCopies = kVars + 1;
    TangentialDerivatives d;
    tangential_derivatives(grid, rho, d);

    // copy c of node i lives at c * n + i; copy 0 is the base point
    std::vector<double> in[kVars];
    const std::vector<double>* base[kVars] = {nullptr, &d.d1, &d.d2, &d.h11, &d.h12, &d.h22};
    for (std::size_t v = 0; v < kVars; ++v) {
        in[v].resize(kCopies * n);
        const double* src = v == 0 ? rho.data() : base[v]->data();
        for (std::size_t c = 0; c < kCopies; ++c) std::copy(src, src + n, in[v].begin() + static_cast<std::ptrdiff_t>(c * n));
    }
    const double root_eps = std::sqrt(std::numeric_limits<double>::epsilon());
    std::vector<double> step(kVars * n);
    for (std::size_t v = 0; v < kVars; ++v) {
        for (std::size_t i = 0; i < n; ++i) {
            double& q = in[v][(v + 1) * n + i];
            const double q0 = q;
            q = q0 + root_eps * (1.0 + std::abs(q0));
            step[v * n + i] = q - q0;
        }
    }
    CurvatureFields out;
    out.resize(kCopies * n);
    kernels::radial_curvature({in[0], in[1], in[2], in[3], in[4], in[5]},
                              {out.u, out.a11, out.a12, out.a22, out.sigma1, out.sigma2, out.lambda_min,
                               out.lambda_max});
    auto value = [&](std::size_t idx, std::size_t node) {
        return operator_from_invariants(prob.op, out.sigma1[idx], out.sigma2[idx]) -
               std::pow(out.u[idx], prob.p) * phi_t[node];
    };

    const double inv2dt = 1.0 / (2.0 * grid.dtheta());
    const double inv2dp = 1.0 / (2.0 * grid.dphi());
    const double invdt2 = 1.0 / (grid.dtheta() * grid.dtheta());
    const double invdp2 = 1.0 / (grid.dphi() * grid.dphi());
    const double inv4dtdp = 1.0 / (4.0 * grid.dtheta() * grid.dphi());
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(9 * n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r0 = value(i, i);
        double g[kVars];
        for (std::size_t v = 0; v < kVars; ++v) g[v] = (value((v + 1) * n + i, i) - r0) / step[v * n + i];
        const double st = grid.sin_theta(i);
        const double cot = grid.cos_theta(i) / st;
        // weights of the nine stencil slots, s[3 * (di + 1) + (dj + 1)]
        double w[9] = {};
        w[4] += g[0] - 2.0 * g[3] * invdt2 - 2.0 * g[5] * invdp2 / (st * st);
        w[7] += g[1] * inv2dt + g[3] * invdt2 + g[5] * cot * inv2dt;
        w[1] += -g[1] * inv2dt + g[3] * invdt2 - g[5] * cot * inv2dt;
        w[5] += g[2] * inv2dp / st - g[4] * cot * inv2dp / st + g[5] * invdp2 / (st * st);
        w[3] += -g[2] * inv2dp / st + g[4] * cot * inv2dp / st + g[5] * invdp2 / (st * st);
        w[8] += g[4] * inv4dtdp / st;
        w[0] += g[4] * inv4dtdp / st;
        w[6] -= g[4] * inv4dtdp / st;
        w[2] -= g[4] * inv4dtdp / st;
        const auto& s = grid.stencil(i);
        for (int m = 0; m < 9; ++m) {
            triplets.emplace_back(static_cast<int>(i), static_cast<int>(s[static_cast<std::size_t>(m)]), w[m]);
        }
    }
    Eigen::SparseMatrix<double> jac(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    jac.setFromTriplets(triplets.begin(), triplets.end());  // sums slots that coincide across a pole
    return jac;
}

void check_field(const RadialField& field, const MeasureProblem& prob) {
    if (field.grid.get() != prob.grid.get() && (field.grid->n_theta() != prob.grid->n_theta() ||
                                                field.grid->n_phi() != prob.grid->n_phi())) {
        throw DomainError("field grid does not match problem grid");
    }
    if (field.rho.size() != prob.grid->size()) throw DomainError("field size does not match problem grid");
}

}  // namespace

std::vector<std::string> MeasureProblem::validate() const {
    if (!grid) throw DomainError("measure problem has no grid");
    op.validate(kDim);
    if (p == 0.0) {
        throw DomainError("p = 0 is excluded: the gradient estimate requires p != 0");
    }
    if (!std::isfinite(p)) throw DomainError("p must be finite");
    (void)initial_sphere_radius(op, p, kDim);
    (void)sample_positive(*grid, phi);
    std::vector<std::string> warnings;
    if (p > 1.0) warnings.emplace_back("p > 1: outside the range with an existence guarantee; continuation may fail");
    if (op.kind == OperatorKind::Quotient) {
        warnings.emplace_back("quotient operator: experimental, continuation may fail");
    }
    return warnings;
}

double initial_sphere_radius(const OperatorSpec& op, double p, int n) {
    op.validate(n);
    const int l = op.kind == OperatorKind::Quotient ? op.l : 0;
    const double exponent = op.k - l + p;
    if (exponent == 0.0 || !std::isfinite(exponent)) {
        throw DomainError("no round start solution: k - l + p = 0");
    }
    const double coef = op.kind == OperatorKind::Quotient ? binomial(n, op.k) / binomial(n, op.l)
                                                          : binomial(n, op.k);
    // coef * r^{-(k-l)} = r^p  <=>  r^{k-l+p} = coef
    return std::pow(coef, 1.0 / exponent);
}

std::vector<double> residual(const RadialField& field, const MeasureProblem& prob) {
    prob.validate();
    check_field(field, prob);
    (void)radial_geometry(field);  // rho > 0 and u > 0 gate
    MeasureScratch scratch;
    std::vector<double> r(field.rho.size());
    const auto phi = blended_phi(prob, 1.0);
    const Evaluation ev = evaluate(prob, phi, field.rho, scratch, r);
    if (!ev.admissible) {
        throw ConeViolation("spectrum outside Gamma_" + std::to_string(prob.op.k) + " at " +
                                std::to_string(ev.violations.size()) + " node(s), first " +
                                std::to_string(ev.violations.front()),
                            ev.violations);
    }
    return r;
}

NewtonSystem measure_system(const MeasureProblem& prob, double t) {
    const SphericalGrid& grid = *prob.grid;
    NewtonSystem sys;
    sys.unknowns = grid.size();
    sys.column_rows.resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        auto& rows = sys.column_rows[k];
        const auto& s = grid.stencil(k);
        rows.assign(s.begin(), s.end());
        std::sort(rows.begin(), rows.end());
        rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    }
    auto scratch = std::make_shared<MeasureScratch>();
    auto phi = std::make_shared<const std::vector<double>>(blended_phi(prob, t));
    sys.residual = [prob, scratch, phi](std::span<const double> x, std::span<double> r) {
        return evaluate(prob, *phi, x, *scratch, r);
    };
    sys.jacobian = [prob, phi](std::span<const double> x, std::span<const double>) {
        return chain_jacobian(prob, *phi, x);
    };
    return sys;
}

RadialField newton_solve(const RadialField& start, const MeasureProblem& prob, const NewtonOptions& opts,
                         SolveReport& report, double t) {
    prob.validate();
    check_field(start, prob);
    const NewtonSystem sys = measure_system(prob, t);
    auto rho = kcurv::newton_solve(sys, start.rho, opts, report);
    return {prob.grid, std::move(rho)};
}

HomotopyResult homotopy_solve(const MeasureProblem& prob, const HomotopySchedule& schedule) {
    prob.validate();
    if (!(schedule.dt_initial > 0.0) || !(schedule.dt_min > 0.0)) {
        throw DomainError("homotopy steps must be positive");
    }
    HomotopyResult result;
    const double r0 = initial_sphere_radius(prob.op, prob.p, kDim);
    result.field = RadialField::constant(prob.grid, r0);

    auto record = [&](double t, const SolveReport& rep) {
        const auto& last = rep.history.back();
        result.trace.states.push_back({t, rep.iterations, last.residual_max, last.min_cone_margin, last.min_aux});
        result.last_report = rep;
    };

    SolveReport rep;
    try {
        result.field = newton_solve(result.field, prob, schedule.newton, rep, 0.0);
    } catch (const NonConvergence& e) {
        result.trace.steps.push_back({0.0, 0.0, false, e.what()});
        throw ContinuationFailure(std::string("round start did not converge: ") + e.what(), result);
    }
    record(0.0, rep);
    result.trace.steps.push_back({0.0, 0.0, true, "round start r = " + fmt17(r0)});

    double t = 0.0;
    double dt = schedule.dt_initial;
    int first_try_successes = 0;
    bool first_try = true;
    while (t < 1.0) {
        const double t_next = std::min(1.0, t + dt);
        try {
            RadialField next = newton_solve(result.field, prob, schedule.newton, rep, t_next);
            result.field = std::move(next);
            result.trace.steps.push_back({t, t_next, true, std::to_string(rep.iterations) + " Newton iterations"});
            record(t_next, rep);
            t = t_next;
            first_try_successes = first_try ? first_try_successes + 1 : 0;
            first_try = true;
            if (first_try_successes >= 2) {
                dt *= 2.0;
                first_try_successes = 0;
            }
        } catch (const NonConvergence& e) {
            result.trace.steps.push_back({t, t_next, false, e.what()});
            first_try = false;
            first_try_successes = 0;
            dt *= 0.5;
            if (dt < schedule.dt_min) {
                throw ContinuationFailure("continuation stalled at t = " + fmt17(t) + ": step below " +
                                              fmt17(schedule.dt_min),
                                          result);
            }
        }
    }
    result.trace.completed = true;
    return result;
}

BoundsReport verify_apriori_bounds(const RadialField& field, const MeasureProblem& prob, double tol) {
    prob.validate();
    check_field(field, prob);
    BoundsReport rep;
    rep.homogeneity = prob.op.homogeneity();
    const auto phi = sample_positive(*prob.grid, prob.phi);
    rep.phi_min = *std::min_element(phi.begin(), phi.end());
    rep.phi_max = *std::max_element(phi.begin(), phi.end());
    rep.rho_min = *std::min_element(field.rho.begin(), field.rho.end());
    rep.rho_max = *std::max_element(field.rho.begin(), field.rho.end());

    MeasureScratch scratch;
    std::vector<double> r(field.rho.size());
    const Evaluation ev = evaluate(prob, phi, field.rho, scratch, r);
    rep.u_min = *std::min_element(scratch.curv.u.begin(), scratch.curv.u.end());
    rep.sigma1_max = *std::max_element(scratch.curv.sigma1.begin(), scratch.curv.sigma1.end());
    rep.residual_max = 0.0;
    for (double v : r) rep.residual_max = std::max(rep.residual_max, std::abs(v));
    rep.admissible = ev.admissible;
    rep.hard_failure = !(rep.u_min > 0.0);
    rep.verified = ev.admissible && !rep.hard_failure && rep.residual_max <= tol;
    return rep;
}

UniquenessReport uniqueness_probe(const MeasureProblem& prob, const std::vector<RadialField>& starts,
                                  const NewtonOptions& opts) {
    UniquenessReport out;
    std::vector<std::vector<double>> solutions;
    for (const auto& s : starts) {
        SolveReport rep;
        try {
            solutions.push_back(newton_solve(s, prob, opts, rep).rho);
            out.converged.push_back(true);
            out.messages.push_back("converged in " + std::to_string(rep.iterations) + " iterations");
        } catch (const std::exception& e) {
            out.converged.push_back(false);
            out.messages.emplace_back(e.what());
        }
    }
    for (std::size_t a = 0; a < solutions.size(); ++a) {
        for (std::size_t b = a + 1; b < solutions.size(); ++b) {
            for (std::size_t k = 0; k < solutions[a].size(); ++k) {
                out.max_distance = std::max(out.max_distance, std::abs(solutions[a][k] - solutions[b][k]));
            }
        }
    }
    out.complete = std::all_of(out.converged.begin(), out.converged.end(), [](bool c) { return c; });
    return out;
}

}  // namespace kcurv
