#include "kcurv/run.hpp"

#include "kcurv/errors.hpp"
#include "kcurv/format.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <numbers>
#include <sstream>

namespace kcurv {

using nlohmann::json;

namespace fs = std::filesystem;

namespace {

void dump_rec(const json& j, int indent, int depth, std::string& out) {
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close(static_cast<std::size_t>(indent * depth), ' ');
    const char* nl = indent > 0 ? "\n" : "";
    switch (j.type()) {
    case json::value_t::object: {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += "{";
        out += nl;
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) out += std::string(",") + nl;
            first = false;
            out += pad + json(it.key()).dump() + (indent > 0 ? ": " : ":");
            dump_rec(it.value(), indent, depth + 1, out);
        }
        out += nl + close + "}";
        return;
    }
    case json::value_t::array: {
        if (j.empty()) {
            out += "[]";
            return;
        }
        out += "[";
        out += nl;
        bool first = true;
        for (const auto& v : j) {
            if (!first) out += std::string(",") + nl;
            first = false;
            out += pad;
            dump_rec(v, indent, depth + 1, out);
        }
        out += nl + close + "]";
        return;
    }
    case json::value_t::number_float: {
        const double v = j.get<double>();
        out += std::isfinite(v) ? fmt17(v) : "null";
        return;
    }
    default: out += j.dump(); return;
    }
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + p.string());
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
}

void say(const RunOptions& opts, const std::string& line) {
    if (opts.log) *opts.log << line << '\n';
}

json history_json(const SolveReport& rep) {
    json h = json::array();
    for (const auto& it : rep.history) {
        h.push_back({{"iteration", it.iteration},
                     {"residual_max", it.residual_max},
                     {"residual_l2", it.residual_l2},
                     {"damping", it.damping},
                     {"backtracks", it.backtracks},
                     {"vetoed", it.vetoed},
                     {"min_cone_margin", it.min_cone_margin},
                     {"min_aux", it.min_aux}});
    }
    return h;
}

json residual_history(const SolveReport& rep) {
    json h = json::array();
    for (const auto& it : rep.history) h.push_back(it.residual_max);
    return h;
}

json trace_json(const HomotopyTrace& tr) {
    json states = json::array(), steps = json::array();
    for (const auto& s : tr.states) {
        states.push_back({{"t", s.t},
                          {"newton_iterations", s.newton_iters},
                          {"final_residual", s.final_residual},
                          {"min_cone_margin", s.min_cone_margin},
                          {"min_u", s.min_u}});
    }
    for (const auto& s : tr.steps) {
        steps.push_back({{"t_from", s.t_from}, {"t_to", s.t_to}, {"accepted", s.accepted}, {"note", s.note}});
    }
    return {{"states", states}, {"steps", steps}, {"completed", tr.completed}};
}

json bounds_json(const BoundsReport& b) {
    return {{"rho_min", b.rho_min},       {"rho_max", b.rho_max},
            {"u_min", b.u_min},           {"sigma1_max", b.sigma1_max},
            {"phi_min", b.phi_min},       {"phi_max", b.phi_max},
            {"homogeneity", b.homogeneity}, {"residual_max", b.residual_max},
            {"admissible", b.admissible}, {"verified", b.verified},
            {"hard_failure", b.hard_failure}};
}

json probe_json(const CurvatureBoundProbe& p) {
    return {{"sup_interior_A", p.sup_interior_A}, {"sup_boundary_A", p.sup_boundary_A}, {"ratio", p.ratio},
            {"q", p.q}, {"k", p.k}, {"nx", p.nx}, {"ny", p.ny}};
}

json kind_json(const KindSummary& s) {
    return {{"pass", s.pass},
            {"fail", s.fail},
            {"inconclusive", s.inconclusive},
            {"worst_margin", s.worst_margin},
            {"worst_seed_index", s.worst_index},
            {"failing_seed_indices", s.failures}};
}

int total_iterations(const HomotopyTrace& tr) {
    int n = 0;
    for (const auto& s : tr.states) n += s.newton_iters;
    return n;
}

// smooth bump vanishing on the rectangle boundary
GraphField perturbed_start(const ExactGraph& data, const RectGridPtr& grid, double amp) {
    GraphField f = data.sample(grid);
    if (amp == 0.0) return f;
    const auto& g = *grid;
    for (std::size_t n = 0; n < g.size(); ++n) {
        const double sx = (g.x(g.col(n)) - g.x0()) / (g.x1() - g.x0());
        const double sy = (g.y(g.row(n)) - g.y0()) / (g.y1() - g.y0());
        f.g[n] += amp * std::sin(std::numbers::pi * sx) * std::sin(std::numbers::pi * sy);
    }
    return f;
}

double max_graph_error(const GraphField& f, const ExactGraph& exact) {
    const auto ref = exact.sample(f.grid);
    double e = 0.0;
    for (std::size_t n = 0; n < f.g.size(); ++n) e = std::max(e, std::abs(f.g[n] - ref.g[n]));
    return e;
}

int solve_measure(const RunConfig& cfg, const fs::path& dir, const RunOptions& opts) {
    const auto& block = *cfg.measure;
    const auto& prob = block.problem;
    json report;
    report["mode"] = to_string(cfg.mode);
    report["warnings"] = cfg.warnings;
    report["config_echo"] = cfg.echo;
    int code = kExitOk;
    try {
        say(opts, "continuation from the round solution on a " + std::to_string(prob.grid->n_theta()) + "x" +
                      std::to_string(prob.grid->n_phi()) + " grid");
        const auto res = homotopy_solve(prob, cfg.solver.homotopy);
        const auto bounds = verify_apriori_bounds(res.field, prob, std::max(1e-6, cfg.solver.newton.tol));
        report["iterations"] = total_iterations(res.trace);
        report["residual_history"] = residual_history(res.last_report);
        report["newton_history"] = history_json(res.last_report);
        report["trace"] = trace_json(res.trace);
        report["bounds_report"] = bounds_json(bounds);
        report["converged"] = true;

        const auto geom = radial_geometry(res.field);
        auto csv = open_out(dir / "solution.csv");
        write_csv(csv, geom, prob.op.k);
        auto obj = open_out(dir / "surface.obj");
        write_obj(obj, geom);

        if (!block.uniqueness_radii.empty()) {
            std::vector<RadialField> starts{res.field};
            for (double r : block.uniqueness_radii) starts.push_back(RadialField::constant(prob.grid, r));
            const auto u = uniqueness_probe(prob, starts, cfg.solver.newton);
            report["uniqueness"] = {{"max_distance", u.max_distance},
                                    {"converged", u.converged},
                                    {"messages", u.messages},
                                    {"complete", u.complete}};
        }
        say(opts, "completed: " + std::to_string(total_iterations(res.trace)) + " Newton iterations, residual " +
                      fmt17(bounds.residual_max));
        if (bounds.hard_failure || !bounds.admissible) code = kExitHardFailure;
    } catch (const ContinuationFailure& e) {
        report["converged"] = false;
        report["failure"] = e.what();
        report["trace"] = trace_json(e.partial().trace);
        report["iterations"] = total_iterations(e.partial().trace);
        report["residual_history"] = residual_history(e.partial().last_report);
        say(opts, std::string("no convergence: ") + e.what());
        code = kExitNonConvergence;
    }
    write_text(dir / "report.json", dump_json17(report) + "\n");
    return code;
}

int solve_graph(const RunConfig& cfg, const fs::path& dir, const RunOptions& opts) {
    const auto& block = *cfg.graph;
    const auto& prob = block.problem;
    json report;
    report["mode"] = to_string(cfg.mode);
    report["warnings"] = cfg.warnings;
    report["config_echo"] = cfg.echo;
    int code = kExitOk;
    const auto start = perturbed_start(block.data, prob.grid, block.start_perturbation);
    SolveReport rep;
    try {
        say(opts, "Dirichlet solve on a " + std::to_string(prob.grid->nx()) + "x" + std::to_string(prob.grid->ny()) +
                      " grid");
        const auto sol = dirichlet_newton_solve(start, prob, cfg.solver.newton, rep);
        const auto geo = graph_geometry(sol);
        auto csv = open_out(dir / "solution.csv");
        csv << "x1,x2,g,lambda1,lambda2,A_norm\n";
        const auto& g = *prob.grid;
        for (std::size_t n = 0; n < g.size(); ++n) {
            csv << fmt17(g.x(g.col(n))) << ',' << fmt17(g.y(g.row(n))) << ',' << fmt17(sol.g[n]) << ','
                << fmt17(geo.lambda1[n]) << ',' << fmt17(geo.lambda2[n]) << ',' << fmt17(geo.A_norm[n]) << '\n';
        }
        const auto probe = curvature_bound_probe(sol, prob);
        write_text(dir / "probe.json", dump_json17(probe_json(probe)) + "\n");
        report["converged"] = true;
        if (block.manufactured) report["max_error_vs_exact"] = max_graph_error(sol, block.data);
        say(opts, "converged in " + std::to_string(rep.iterations) + " iterations");
    } catch (const NewtonFailure& e) {
        rep = e.report();
        report["converged"] = false;
        report["failure"] = e.what();
        code = kExitNonConvergence;
        say(opts, std::string("no convergence: ") + e.what());
    } catch (const ConeViolation& e) {
        report["converged"] = false;
        report["failure"] = e.what();
        code = kExitHardFailure;
        say(opts, std::string("inadmissible start: ") + e.what());
    }
    report["iterations"] = rep.iterations;
    report["residual_history"] = residual_history(rep);
    report["newton_history"] = history_json(rep);

    if (block.campaign) {
        GraphProblem base = prob;
        base.H_samples.reset();
        say(opts, "q campaign over " + std::to_string(block.campaign->q.size()) + " exponents");
        const auto camp = run_graph_campaign(base, block.data, block.campaign->q, block.campaign->sizes,
                                             cfg.solver.newton);
        auto csv = open_out(dir / "campaign.csv");
        csv << "q,grid,sup_int_A,sup_bnd_A,ratio,converged,iterations\n";
        for (const auto& r : camp.rows) {
            csv << fmt17(r.q) << ',' << r.nx << 'x' << r.ny << ',';
            if (r.converged) {
                csv << fmt17(r.probe.sup_interior_A) << ',' << fmt17(r.probe.sup_boundary_A) << ','
                    << fmt17(r.probe.ratio);
            } else {
                csv << ",,";
            }
            csv << ',' << (r.converged ? 1 : 0) << ',' << r.iterations << '\n';
        }
        report["campaign"] = {{"regime_consistent", camp.regime_consistent},
                              {"max_ratio_variation", camp.max_ratio_variation}};
    }
    write_text(dir / "report.json", dump_json17(report) + "\n");
    return code;
}

int verify_inequalities(const RunConfig& cfg, const fs::path& dir, const RunOptions& opts) {
    const auto& block = *cfg.inequalities;
    json summary;
    summary["config_echo"] = cfg.echo;
    json runs = json::array();
    std::uint64_t hard = 0;
    for (const auto& sc : block.runs) {
        const std::string name = "campaign_n" + std::to_string(sc.n) + "_k" + std::to_string(sc.k) + ".csv";
        auto csv = open_out(dir / name);
        const auto s = run_campaign(sc, &csv);
        csv.flush();
        if (!csv) throw std::runtime_error("cannot write " + name);
        hard += s.hard_failures();
        runs.push_back({{"n", s.n},
                        {"k", s.k},
                        {"seed", s.seed},
                        {"samples", s.samples},
                        {"alpha", sc.alpha_list},
                        {"file", name},
                        {"gll", kind_json(s.gll)},
                        {"krylov", kind_json(s.krylov)},
                        {"gll_sum3", kind_json(s.gll_sum3)},
                        {"implication_violations", s.implication_violations},
                        {"hard_failures", s.hard_failures()}});
        say(opts, "n=" + std::to_string(s.n) + " k=" + std::to_string(s.k) + ": " +
                      std::to_string(s.hard_failures()) + " hard failures");
    }
    summary["runs"] = runs;
    summary["hard_failures"] = hard;
    summary["pass"] = hard == 0;

    if (block.ivochkina) {
        const auto& iv = *block.ivochkina;
        auto csv = open_out(dir / "ivochkina.csv");
        csv << "k,q,p_max,resolution,bound_M2,holds,worst_margin,worst_p1,worst_p2\n";
        json scans = json::array();
        for (double q : iv.q) {
            const auto r = check_ivochkina_condition(iv.k, q, iv.p_max, iv.resolution);
            csv << iv.k << ',' << fmt17(q) << ',' << fmt17(iv.p_max) << ',' << iv.resolution << ','
                << fmt17(r.bound_M2) << ',' << (r.holds ? 1 : 0) << ',' << fmt17(r.worst_margin) << ','
                << fmt17(r.worst_point(0)) << ',' << fmt17(r.worst_point(1)) << '\n';
            scans.push_back({{"k", iv.k},
                             {"q", q},
                             {"holds", r.holds},
                             {"worst_margin", r.worst_margin},
                             {"worst_point", {r.worst_point(0), r.worst_point(1)}}});
        }
        summary["ivochkina"] = scans;
    }
    write_text(dir / "summary.json", dump_json17(summary) + "\n");
    return hard == 0 ? kExitOk : kExitHardFailure;
}

int study_mode(const RunConfig& cfg, const fs::path& dir, const RunOptions& opts) {
    const auto table = convergence_study(cfg, opts.log);
    auto csv = open_out(dir / "convergence.csv");
    write_study_csv(csv, table);
    json report;
    report["config_echo"] = cfg.echo;
    report["reference"] = table.reference;
    report["complete"] = table.complete;
    if (!table.message.empty()) report["message"] = table.message;
    write_text(dir / "report.json", dump_json17(report) + "\n");
    return table.complete ? kExitOk : kExitNonConvergence;
}

void write_manifest(const RunConfig& cfg, const fs::path& dir, const std::string& started, int code) {
    json files = json::array();
    std::vector<fs::path> paths;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().filename() != "manifest.json") paths.push_back(e.path());
    }
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) {
        const auto bytes = read_file(p);
        files.push_back({{"path", fs::relative(p, dir).generic_string()},
                         {"bytes", bytes.size()},
                         {"sha256", sha256_hex(bytes)}});
    }
    files.push_back({{"path", "manifest.json"}, {"note", "this file; not checksummed"}});
    json m = {{"tool", "kcurv"},
              {"version", kToolVersion},
              {"mode", to_string(cfg.mode)},
              {"seed", cfg.seed},
              {"config", cfg.echo},
              {"input_sha256", cfg.source_sha256},
              {"started", started},
              {"finished", utc_now()},
              {"exit_code", code},
              {"files", files}};
    write_text(dir / "manifest.json", dump_json17(m) + "\n");
}

double sphere_h(int n_theta) { return std::numbers::pi / n_theta; }

}  // namespace

std::string dump_json17(const json& j, int indent) {
    std::string out;
    dump_rec(j, indent, 0, out);
    return out;
}

void override_seed(RunConfig& cfg, std::uint64_t seed) {
    cfg.seed = seed;
    cfg.echo["seed"] = seed;
    if (cfg.inequalities) {
        for (auto& r : cfg.inequalities->runs) r.seed = seed;
    }
}

StudyTable convergence_study(const RunConfig& cfg, std::ostream* log) {
    if (!cfg.study) throw ConfigError("convergence study needs a study block");
    const auto& s = *cfg.study;
    StudyTable t;
    auto note = [&](const std::string& line) {
        if (log) *log << line << '\n';
    };
    std::vector<RadialField> solutions;   // successive-difference studies

    for (const auto& g : s.grids) {
        StudyRow row;
        row.a = g[0];
        row.b = g[1];
        try {
            switch (s.problem) {
            case StudyProblem::EllipsoidCurvature: {
                t.reference = "closed-form ellipsoid principal curvatures";
                const auto grid = make_grid(g[0], g[1]);
                const auto [a, b, c] = s.axes;
                const auto field = RadialField::sample(grid, [&](const Eigen::Vector3d& x) {
                    return ellipsoid_radius(a, b, c, x);
                });
                const auto geom = radial_geometry(field);
                double e = 0.0;
                for (std::size_t n = 0; n < grid->size(); ++n) {
                    const auto exact = ellipsoid_principal_curvatures(a, b, c, field.rho[n] * grid->node(n));
                    e = std::max({e, std::abs(geom.curv.lambda_min[n] - exact[0]),
                                  std::abs(geom.curv.lambda_max[n] - exact[1])});
                }
                row.h = sphere_h(g[0]);
                row.error = e;
                break;
            }
            case StudyProblem::ConstantField: {
                t.reference = "round sphere: lambda = 1/r, u = r";
                const auto grid = make_grid(g[0], g[1]);
                const auto geom = radial_geometry(RadialField::constant(grid, s.radius));
                double e = 0.0;
                for (std::size_t n = 0; n < grid->size(); ++n) {
                    e = std::max({e, std::abs(geom.curv.lambda_min[n] - 1.0 / s.radius),
                                  std::abs(geom.curv.lambda_max[n] - 1.0 / s.radius),
                                  std::abs(geom.curv.u[n] - s.radius) / s.radius});
                }
                row.h = sphere_h(g[0]);
                row.error = e;
                break;
            }
            case StudyProblem::Measure: {
                t.reference = "next finer grid, resampled onto this grid";
                MeasureProblem prob = s.measure->problem;
                prob.grid = make_grid(g[0], g[1]);
                const auto res = homotopy_solve(prob, cfg.solver.homotopy);
                solutions.push_back(res.field);
                row.h = sphere_h(g[0]);
                break;
            }
            case StudyProblem::GraphManufactured: {
                t.reference = "manufactured exact graph";
                const auto& base = *s.graph;
                const auto& r = *base.problem.grid;
                GraphProblem prob = base.problem;
                prob.grid = make_rect_grid(r.x0(), r.x1(), r.y0(), r.y1(), g[0], g[1]);
                prob.boundary = base.data.sample(prob.grid).g;
                prob.H_samples = manufactured_H(base.data, prob.grid, prob.k, prob.q);
                SolveReport rep;
                const auto sol = dirichlet_newton_solve(perturbed_start(base.data, prob.grid, base.start_perturbation),
                                                        prob, cfg.solver.newton, rep);
                row.h = std::max(prob.grid->hx(), prob.grid->hy());
                row.error = max_graph_error(sol, base.data);
                break;
            }
            }
        } catch (const std::exception& e) {
            t.complete = false;
            t.message = "grid " + std::to_string(g[0]) + "x" + std::to_string(g[1]) + ": " + e.what();
            note("study aborted: " + t.message);
            break;
        }
        note("grid " + std::to_string(g[0]) + "x" + std::to_string(g[1]) + " done");
        t.rows.push_back(row);
    }

    if (s.problem == StudyProblem::Measure) {
        for (std::size_t i = 0; i + 1 < solutions.size(); ++i) {
            const auto fine = resample(solutions[i + 1], *solutions[i].grid);
            double d = 0.0;
            for (std::size_t n = 0; n < fine.size(); ++n) d = std::max(d, std::abs(fine[n] - solutions[i].rho[n]));
            t.rows[i].error = d;
        }
    }
    // observed order between consecutive rows; undefined at the round-off floor
    for (std::size_t i = 1; i < t.rows.size(); ++i) {
        const auto& prev = t.rows[i - 1];
        auto& row = t.rows[i];
        if (!prev.error || !row.error) continue;
        if (*prev.error > 1e-12 && *row.error > 1e-12) {
            row.order = std::log(*prev.error / *row.error) / std::log(prev.h / row.h);
        }
    }
    return t;
}

void write_study_csv(std::ostream& os, const StudyTable& t) {
    os << "grid_a,grid_b,h,error";
    if (t.has_order_column()) os << ",order";
    os << '\n';
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        os << r.a << ',' << r.b << ',' << fmt17(r.h) << ',';
        if (r.error) os << fmt17(*r.error);
        if (t.has_order_column()) {
            os << ',';
            if (r.order) os << fmt17(*r.order);
            else if (i > 0 && r.error && t.rows[i - 1].error) os << "n/a";
        }
        os << '\n';
    }
}

int run(const RunConfig& cfg, const RunOptions& opts) {
    const std::string started = utc_now();
    std::error_code ec;
    fs::create_directories(opts.out_dir, ec);
    if (ec || !fs::is_directory(opts.out_dir)) {
        say(opts, "cannot create output directory " + opts.out_dir.string());
        return kExitUsage;
    }
    for (const auto& w : cfg.warnings) say(opts, "warning: " + w);
    int code = kExitOk;
    try {
        switch (cfg.mode) {
        case Mode::SolveMeasure: code = solve_measure(cfg, opts.out_dir, opts); break;
        case Mode::SolveGraph: code = solve_graph(cfg, opts.out_dir, opts); break;
        case Mode::VerifyInequalities: code = verify_inequalities(cfg, opts.out_dir, opts); break;
        case Mode::ConvergenceStudy: code = study_mode(cfg, opts.out_dir, opts); break;
        }
    } catch (const NonConvergence& e) {
        say(opts, std::string("no convergence: ") + e.what());
        code = kExitNonConvergence;
    } catch (const std::exception& e) {
        say(opts, std::string("failure: ") + e.what());
        code = kExitHardFailure;
    }
    write_manifest(cfg, opts.out_dir, started, code);
    return code;
}

}  // namespace kcurv
