#include "kcurv/config.hpp"

#include "kcurv/errors.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace kcurv {

using nlohmann::json;

namespace {

// Maps a key path to the line where it appears, by scanning for each key
// in turn. Good enough for hand-written configs.
class Locator {
public:
    explicit Locator(std::string_view text) : text_(text) {}

    int line_of(const std::vector<std::string>& path) const {
        std::size_t pos = 0;
        for (const auto& key : path) {
            if (key.empty() || key.front() == '[') continue;
            const auto found = text_.find("\"" + key + "\"", pos);
            if (found == std::string_view::npos) break;
            pos = found;
        }
        return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<long>(pos), '\n'));
    }

private:
    std::string_view text_;
};

std::string join(const std::vector<std::string>& path) {
    std::string s;
    for (const auto& p : path) s += "/" + p;
    return s.empty() ? "/" : s;
}

// Strict view of one JSON object: every key must be consumed.
class Block {
public:
    Block(const json& j, std::vector<std::string> path, const Locator& loc, json& echo)
        : j_(j), path_(std::move(path)), loc_(loc), echo_(echo) {
        if (!j_.is_object()) fail("expected an object");
        echo_ = json::object();
    }

    [[noreturn]] void fail(const std::string& msg, const std::string& key = {}) const {
        auto p = path_;
        if (!key.empty()) p.push_back(key);
        throw ConfigError("config line " + std::to_string(loc_.line_of(p)) + ": " + join(p) + ": " + msg);
    }

    bool has(const std::string& key) const { return j_.contains(key); }
    std::vector<std::string> path(const std::string& key) const {
        auto p = path_;
        p.push_back(key);
        return p;
    }
    const json& raw(const std::string& key) {
        used_.insert(key);
        return j_.at(key);
    }
    json& echo(const std::string& key) { return echo_[key]; }
    const Locator& locator() const { return loc_; }

    double number(const std::string& key, double def) {
        double v = def;
        if (has(key)) {
            const auto& x = raw(key);
            if (!x.is_number()) fail("expected a number", key);
            v = x.get<double>();
            if (!std::isfinite(v)) fail("must be finite", key);
        }
        echo_[key] = v;
        return v;
    }
    long integer(const std::string& key, long def) {
        long v = def;
        if (has(key)) {
            const auto& x = raw(key);
            if (!x.is_number_integer()) fail("expected an integer", key);
            v = x.get<long>();
        }
        echo_[key] = v;
        return v;
    }
    bool boolean(const std::string& key, bool def) {
        bool v = def;
        if (has(key)) {
            const auto& x = raw(key);
            if (!x.is_boolean()) fail("expected true or false", key);
            v = x.get<bool>();
        }
        echo_[key] = v;
        return v;
    }
    std::string string(const std::string& key, const std::string& def) {
        std::string v = def;
        if (has(key)) {
            const auto& x = raw(key);
            if (!x.is_string()) fail("expected a string", key);
            v = x.get<std::string>();
        }
        echo_[key] = v;
        return v;
    }
    std::vector<double> numbers(const std::string& key, std::vector<double> def) {
        if (has(key)) {
            const auto& x = raw(key);
            if (!x.is_array()) fail("expected an array of numbers", key);
            def.clear();
            for (const auto& e : x) {
                if (!e.is_number()) fail("expected an array of numbers", key);
                def.push_back(e.get<double>());
                if (!std::isfinite(def.back())) fail("entries must be finite", key);
            }
        }
        echo_[key] = def;
        return def;
    }
    std::vector<long> integers(const std::string& key, std::vector<long> def) {
        if (has(key)) {
            const auto& x = raw(key);
            if (!x.is_array()) fail("expected an array of integers", key);
            def.clear();
            for (const auto& e : x) {
                if (!e.is_number_integer()) fail("expected an array of integers", key);
                def.push_back(e.get<long>());
            }
        }
        echo_[key] = def;
        return def;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!used_.count(it.key())) fail("unknown key", it.key());
        }
    }

private:
    const json& j_;
    std::vector<std::string> path_;
    const Locator& loc_;
    json& echo_;
    std::set<std::string> used_;
};

// Polynomial: a number (constant) or [{"coef": c, "powers": [a, b, c]}, ...].
Polynomial<3> polynomial(Block& b, const std::string& key, double def) {
    if (!b.has(key)) {
        b.echo(key) = json::array({json{{"coef", def}, {"powers", {0, 0, 0}}}});
        return Polynomial<3>::constant(def);
    }
    const auto& x = b.raw(key);
    std::vector<Polynomial<3>::Monomial> terms;
    if (x.is_number()) {
        terms.push_back({x.get<double>(), {0, 0, 0}});
    } else if (x.is_array()) {
        for (const auto& t : x) {
            if (!t.is_object() || !t.contains("coef") || !t.contains("powers") || t.size() != 2 ||
                !t["coef"].is_number() || !t["powers"].is_array() || t["powers"].size() != 3) {
                b.fail("each term needs exactly \"coef\" (number) and \"powers\" (3 integers)", key);
            }
            Polynomial<3>::Monomial m;
            m.coef = t["coef"].get<double>();
            for (std::size_t i = 0; i < 3; ++i) {
                if (!t["powers"][i].is_number_integer() || t["powers"][i].get<int>() < 0) {
                    b.fail("powers must be non-negative integers", key);
                }
                m.powers[i] = t["powers"][i].get<int>();
            }
            terms.push_back(m);
        }
    } else {
        b.fail("expected a number or a list of terms", key);
    }
    json echo = json::array();
    for (const auto& m : terms) echo.push_back({{"coef", m.coef}, {"powers", m.powers}});
    b.echo(key) = echo;
    return Polynomial<3>(std::move(terms));
}

template <class F>
auto domain_guard(Block& b, const std::string& key, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const DomainError& e) {
        b.fail(e.what(), key);
    } catch (const ConeViolation& e) {
        b.fail(e.what(), key);
    }
}

SolverSettings parse_solver(Block& b) {
    SolverSettings s;
    s.newton.tol = b.number("tol", 1e-10);
    if (!(s.newton.tol > 0.0)) b.fail("tol must be positive", "tol");
    s.newton.max_iter = static_cast<int>(b.integer("max_iter", 50));
    if (s.newton.max_iter < 1) b.fail("max_iter must be at least 1", "max_iter");
    s.newton.armijo = b.number("armijo", 1e-4);
    s.newton.backtrack = b.number("backtrack", 0.5);
    if (!(s.newton.backtrack > 0.0 && s.newton.backtrack < 1.0)) b.fail("backtrack must lie in (0, 1)", "backtrack");
    s.newton.max_backtracks = static_cast<int>(b.integer("max_backtracks", 40));
    s.homotopy.dt_initial = b.number("dt_initial", 0.1);
    s.homotopy.dt_min = b.number("dt_min", 1e-4);
    if (!(s.homotopy.dt_initial > 0.0) || !(s.homotopy.dt_min > 0.0)) b.fail("homotopy steps must be positive");
    s.homotopy.newton = s.newton;
    s.homotopy.newton.max_iter = static_cast<int>(b.integer("homotopy_max_iter", 30));
    b.finish();
    return s;
}

GridPtr parse_sphere_grid(Block& parent, const std::string& key, int nt_def) {
    json& echo = parent.echo(key);
    const json empty = json::object();
    Block g(parent.has(key) ? parent.raw(key) : empty, parent.path(key), parent.locator(), echo);
    const long nt = g.integer("n_theta", nt_def);
    const long np = g.integer("n_phi", 2 * nt);
    g.finish();
    return domain_guard(g, "n_theta", [&] { return make_grid(static_cast<int>(nt), static_cast<int>(np)); });
}

MeasureBlock parse_measure(Block& b) {
    MeasureBlock m;
    const long k = b.integer("k", 2);
    const long l = b.integer("l", 0);
    m.problem.op = l == 0 ? OperatorSpec::sigma_k(static_cast<int>(k)) : OperatorSpec::quotient(static_cast<int>(k), static_cast<int>(l));
    domain_guard(b, l == 0 ? "k" : "l", [&] { m.problem.op.validate(2); return 0; });
    m.problem.p = b.number("p", 1.0);
    if (m.problem.p == 0.0) b.fail("p = 0 is excluded: the gradient estimate requires p != 0", "p");
    m.problem.phi = polynomial(b, "phi", 1.0);
    m.problem.grid = parse_sphere_grid(b, "grid", 24);
    m.uniqueness_radii = b.numbers("uniqueness_radii", {});
    for (double r : m.uniqueness_radii) {
        if (!(r > 0.0)) b.fail("radii must be positive", "uniqueness_radii");
    }
    b.finish();
    (void)domain_guard(b, "phi", [&] { return m.problem.validate(); });
    return m;
}

ExactGraph parse_graph_data(Block& parent, const std::string& key) {
    json& echo = parent.echo(key);
    const json empty = json::object();
    Block d(parent.has(key) ? parent.raw(key) : empty, parent.path(key), parent.locator(), echo);
    const std::string type = d.string("type", "cap");
    ExactGraph e;
    if (type == "cap") {
        const double R = d.number("R", 2.0);
        e = domain_guard(d, "R", [&] { return sphere_cap(R); });
    } else if (type == "paraboloid") {
        e = paraboloid(d.number("alpha", -0.5));
    } else if (type == "tilted_cap") {
        const double R = d.number("R", 2.0);
        const auto tilt = d.numbers("tilt", {0.0, 0.0});
        if (tilt.size() != 2) d.fail("tilt needs two entries", "tilt");
        e = domain_guard(d, "R", [&] { return tilted_cap(R, tilt[0], tilt[1]); });
    } else {
        d.fail("unknown boundary type (cap, paraboloid, tilted_cap)", "type");
    }
    d.finish();
    return e;
}

GraphBlock parse_graph(Block& b) {
    GraphBlock g;
    const auto dom = b.numbers("domain", {-1.0, 1.0, -1.0, 1.0});
    if (dom.size() != 4) b.fail("domain is [x0, x1, y0, y1]", "domain");
    json& gecho = b.echo("grid");
    const json empty = json::object();
    Block gb(b.has("grid") ? b.raw("grid") : empty, b.path("grid"), b.locator(), gecho);
    const long nx = gb.integer("nx", 32);
    const long ny = gb.integer("ny", nx);
    gb.finish();
    g.problem.grid = domain_guard(gb, "nx", [&] {
        return make_rect_grid(dom[0], dom[1], dom[2], dom[3], static_cast<int>(nx), static_cast<int>(ny));
    });
    g.problem.k = static_cast<int>(b.integer("k", 2));
    g.problem.q = b.number("q", 0.0);
    g.manufactured = b.boolean("manufactured", false);
    if (g.manufactured && b.has("H")) b.fail("H is derived when manufactured is true", "H");
    g.problem.H = polynomial(b, "H", 0.25);
    g.data = parse_graph_data(b, "boundary");
    g.start_perturbation = b.number("start_perturbation", 0.0);
    if (b.has("campaign")) {
        json& cecho = b.echo("campaign");
        Block c(b.raw("campaign"), b.path("campaign"), b.locator(), cecho);
        GraphCampaignBlock camp;
        camp.q = c.numbers("q", camp.q);
        const auto sizes = c.integers("sizes", {16, 32, 64});
        camp.sizes.assign(sizes.begin(), sizes.end());
        if (camp.q.empty() || camp.sizes.empty()) c.fail("campaign needs q values and sizes");
        for (int s : camp.sizes) {
            if (s < 4) c.fail("sizes must be at least 4", "sizes");
        }
        c.finish();
        g.campaign = camp;
    }
    b.finish();
    domain_guard(b, "boundary", [&] {
        g.problem.boundary = g.data.sample(g.problem.grid).g;
        if (g.manufactured) {
            g.problem.H_samples = manufactured_H(g.data, g.problem.grid, g.problem.k, g.problem.q);
        }
        return 0;
    });
    domain_guard(b, "k", [&] { return g.problem.validate(); });
    return g;
}

InequalityBlock parse_inequalities(Block& b, std::uint64_t seed) {
    InequalityBlock out;
    const auto ns = b.integers("n", {2, 3, 4, 5, 6});
    const auto ks = b.integers("k", {});
    auto alphas = b.numbers("alpha", {0.25, 0.5, 1.0, 2.0});
    const auto ps = b.numbers("alpha_from_p", {-1.0, 0.5});
    for (double p : ps) {
        if (!(p < 1.0)) b.fail("alpha = 1/(1-p) needs p < 1", "alpha_from_p");
        alphas.push_back(1.0 / (1.0 - p));
    }
    std::vector<double> unique;
    for (double a : alphas) {
        if (std::find(unique.begin(), unique.end(), a) == unique.end()) unique.push_back(a);
    }
    const long count = b.integer("sample_count", 10000);
    if (count < 0) b.fail("sample_count must be non-negative", "sample_count");
    const auto box = b.numbers("box", {-1.0, 2.0});
    if (box.size() != 2) b.fail("box is [lo, hi]", "box");
    const double scale = b.number("direction_scale", 1.0);
    for (long n : ns) {
        std::vector<long> kk = ks;
        if (kk.empty())
            for (long k = 2; k <= n; ++k) kk.push_back(k);
        for (long k : kk) {
            if (k > n) b.fail("k = " + std::to_string(k) + " exceeds n = " + std::to_string(n) + " (need 1 <= k <= n)", "k");
            SampleConfig c;
            c.n = static_cast<int>(n);
            c.k = static_cast<int>(k);
            c.alpha_list = unique;
            c.sample_count = static_cast<std::uint64_t>(count);
            c.seed = seed;
            c.box_lo = box[0];
            c.box_hi = box[1];
            c.direction_scale = scale;
            domain_guard(b, "n", [&] { c.validate(); return 0; });
            out.runs.push_back(c);
        }
    }
    if (out.runs.empty()) b.fail("no valid (n, k) pair selected", "n");
    if (!b.has("ivochkina") || !b.raw("ivochkina").is_boolean()) {
        json& iecho = b.echo("ivochkina");
        const json empty = json::object();
        Block iv(b.has("ivochkina") ? b.raw("ivochkina") : empty, b.path("ivochkina"), b.locator(), iecho);
        IvochkinaScan scan;
        scan.k = static_cast<int>(iv.integer("k", 2));
        scan.q = iv.numbers("q", scan.q);
        scan.p_max = iv.number("p_max", 3.0);
        scan.resolution = static_cast<int>(iv.integer("resolution", 61));
        if (scan.k < 1) iv.fail("k must be positive", "k");
        if (!(scan.p_max > 0.0)) iv.fail("p_max must be positive", "p_max");
        if (scan.resolution < 16) iv.fail("resolution must be at least 16", "resolution");
        iv.finish();
        out.ivochkina = scan;
    } else {
        if (b.raw("ivochkina").get<bool>()) out.ivochkina = IvochkinaScan{};
        b.echo("ivochkina") = out.ivochkina.has_value();
    }
    b.finish();
    return out;
}

StudyBlock parse_study(Block& b) {
    StudyBlock s;
    const std::string problem = b.string("problem", "ellipsoid-curvature");
    if (problem == "ellipsoid-curvature") s.problem = StudyProblem::EllipsoidCurvature;
    else if (problem == "constant-field") s.problem = StudyProblem::ConstantField;
    else if (problem == "measure") s.problem = StudyProblem::Measure;
    else if (problem == "graph-manufactured") s.problem = StudyProblem::GraphManufactured;
    else b.fail("unknown study problem (ellipsoid-curvature, constant-field, measure, graph-manufactured)", "problem");

    if (!b.has("grids")) b.fail("grids is required", "grids");
    const auto& grids = b.raw("grids");
    if (!grids.is_array() || grids.empty()) b.fail("grids must be a non-empty list of [a, b] pairs", "grids");
    for (const auto& g : grids) {
        if (!g.is_array() || g.size() != 2 || !g[0].is_number_integer() || !g[1].is_number_integer()) {
            b.fail("grids must be a non-empty list of [a, b] pairs", "grids");
        }
        s.grids.push_back({g[0].get<int>(), g[1].get<int>()});
    }
    b.echo("grids") = s.grids;
    const auto axes = b.numbers("axes", {1.0, 1.15, 0.9});
    if (axes.size() != 3 || *std::min_element(axes.begin(), axes.end()) <= 0.0) {
        b.fail("axes are three positive numbers", "axes");
    }
    std::copy(axes.begin(), axes.end(), s.axes.begin());
    s.radius = b.number("radius", 1.0);
    if (!(s.radius > 0.0)) b.fail("radius must be positive", "radius");

    if (s.problem == StudyProblem::Measure) {
        if (!b.has("measure")) b.fail("measure study needs a measure block", "measure");
        Block m(b.raw("measure"), b.path("measure"), b.locator(), b.echo("measure"));
        s.measure = parse_measure(m);
    }
    if (s.problem == StudyProblem::GraphManufactured) {
        if (!b.has("graph")) b.fail("graph study needs a graph block", "graph");
        Block g(b.raw("graph"), b.path("graph"), b.locator(), b.echo("graph"));
        s.graph = parse_graph(g);
        if (!s.graph->manufactured) g.fail("graph study needs manufactured = true", "manufactured");
    }
    b.finish();
    // build every grid now so a bad size fails at parse time
    for (const auto& g : s.grids) {
        domain_guard(b, "grids", [&] {
            if (s.problem == StudyProblem::GraphManufactured) {
                const auto& r = *s.graph->problem.grid;
                (void)make_rect_grid(r.x0(), r.x1(), r.y0(), r.y1(), g[0], g[1]);
            } else {
                (void)make_grid(g[0], g[1]);
            }
            return 0;
        });
    }
    return s;
}

}  // namespace

std::string to_string(Mode m) {
    switch (m) {
    case Mode::SolveMeasure: return "solve-measure";
    case Mode::SolveGraph: return "solve-graph";
    case Mode::VerifyInequalities: return "verify-inequalities";
    case Mode::ConvergenceStudy: return "convergence-study";
    }
    return "?";
}

std::optional<Mode> parse_mode(std::string_view s) {
    for (Mode m : {Mode::SolveMeasure, Mode::SolveGraph, Mode::VerifyInequalities, Mode::ConvergenceStudy}) {
        if (s == to_string(m)) return m;
    }
    return std::nullopt;
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

RunConfig parse_config_text(std::string_view text, std::optional<Mode> expected) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto byte = std::min<std::size_t>(e.byte, text.size());
        const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
        throw ConfigError("config line " + std::to_string(line) + ": malformed JSON: " + e.what());
    }
    const Locator loc(text);
    RunConfig cfg;
    cfg.source_sha256 = sha256_hex(text);
    Block root(doc, {}, loc, cfg.echo);

    const std::string mode_text = root.string("mode", expected ? to_string(*expected) : "");
    const auto mode = parse_mode(mode_text);
    if (!mode) root.fail("mode must be one of solve-measure, solve-graph, verify-inequalities, convergence-study", "mode");
    if (expected && *mode != *expected) {
        root.fail("file is for " + mode_text + " but " + to_string(*expected) + " was requested", "mode");
    }
    cfg.mode = *mode;
    const long seed = root.integer("seed", 1);
    if (seed < 0) root.fail("seed must be non-negative", "seed");
    cfg.seed = static_cast<std::uint64_t>(seed);

    {
        const json empty = json::object();
        Block s(root.has("solver") ? root.raw("solver") : empty, {"solver"}, loc, root.echo("solver"));
        cfg.solver = parse_solver(s);
    }

    static const char* blocks[] = {"measure", "graph", "inequalities", "study"};
    const char* wanted = blocks[static_cast<int>(cfg.mode)];
    for (const char* name : blocks) {
        if (root.has(name) && std::string(name) != wanted) {
            root.fail(std::string("block does not belong to mode ") + to_string(cfg.mode), name);
        }
    }
    const json empty = json::object();
    const json& body = root.has(wanted) ? root.raw(wanted) : empty;
    Block b(body, {wanted}, loc, root.echo(wanted));
    switch (cfg.mode) {
    case Mode::SolveMeasure:
        cfg.measure = parse_measure(b);
        for (auto& w : cfg.measure->problem.validate()) cfg.warnings.push_back(w);
        break;
    case Mode::SolveGraph:
        cfg.graph = parse_graph(b);
        for (auto& w : cfg.graph->problem.validate()) cfg.warnings.push_back(w);
        break;
    case Mode::VerifyInequalities: cfg.inequalities = parse_inequalities(b, cfg.seed); break;
    case Mode::ConvergenceStudy:
        if (!root.has("study")) root.fail("convergence-study needs a study block", "study");
        cfg.study = parse_study(b);
        break;
    }
    root.finish();
    return cfg;
}

RunConfig parse_config(const std::filesystem::path& path, std::optional<Mode> expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), expected);
}

}  // namespace kcurv
