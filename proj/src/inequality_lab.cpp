#include "kcurv/inequality_lab.hpp"

#include "kcurv/errors.hpp"
#include "kcurv/format.hpp"
#include "kcurv/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace kcurv {

namespace {

constexpr double kSlack = 1e-9;
constexpr std::size_t kBlock = 8;
constexpr std::uint64_t kMaxAttempts = 10000;   // one acceptance per 1e4 draws
constexpr std::size_t kFailuresKept = 20;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void require_inside(const Spectrum& lambda, int k) {
    if (k < 1 || k > lambda.size()) throw DomainError("k out of range for the spectrum");
    if (!in_gamma_k(lambda, k).inside) throw ConeViolation("spectrum outside Gamma_" + std::to_string(k));
}

struct GllParts {
    double lhs, rhs;
};

GllParts gll_parts(const Spectrum& lambda, const SymTensor2& B, double alpha, int k) {
    const auto A = SymTensor2::diagonal(lambda.values());
    const double sk = sigma(lambda, k);
    const double s1 = sigma(lambda, 1);
    const auto grad = sigma_grad(lambda, k);
    double dk = 0.0, tr = 0.0;
    for (int i = 0; i < lambda.size(); ++i) {
        dk += grad[static_cast<std::size_t>(i)] * B(i, i);
        tr += B(i, i);
    }
    const double a = dk / sk, b = tr / s1;
    return {sigma_hess_dir(A, B, k), sk * (a - b) * ((alpha + 1.0) * a - (alpha - 1.0) * b)};
}

Verdict gll_verdict(const Spectrum& lambda, int k, double margin, double rhs) {
    if (near_cone_boundary(lambda, k)) return Verdict::Inconclusive;
    return margin >= -kSlack * (1.0 + std::abs(rhs)) ? Verdict::Pass : Verdict::Fail;
}

void tally(KindSummary& s, const CheckRecord& r, std::uint64_t index, bool& first) {
    switch (r.verdict) {
    case Verdict::Pass: ++s.pass; break;
    case Verdict::Fail:
        ++s.fail;
        if (s.failures.size() < kFailuresKept) s.failures.push_back(index);
        break;
    case Verdict::Inconclusive: ++s.inconclusive; return;
    }
    if (first || r.margin < s.worst_margin) {
        s.worst_margin = r.margin;
        s.worst_index = index;
        first = false;
    }
}

void write_row(std::ostream& out, const CheckRecord& r, int n, std::uint64_t index, bool with_lhs) {
    out << to_string(r.kind) << ',' << n << ',' << r.k << ',' << fmt17(r.alpha) << ',' << index << ',';
    if (with_lhs) out << fmt17(r.lhs);
    out << ',' << fmt17(r.rhs) << ',' << fmt17(r.margin) << ',' << (r.pass() ? 1 : 0) << ','
        << to_string(r.verdict);
    for (double l : r.lambda) out << ',' << fmt17(l);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            out << ',';
            if (r.B.size() != 0) out << fmt17(r.B(i, j));
        }
    }
    out << '\n';
}

}  // namespace

void SampleConfig::validate() const {
    if (n < 2 || n > 8) throw DomainError("sampling needs 2 <= n <= 8");
    if (k < 2 || k > n) throw DomainError("sampling needs 2 <= k <= n");
    for (double a : alpha_list) {
        if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("alpha must be positive");
    }
    if (!(box_hi > box_lo) || !std::isfinite(box_lo) || !std::isfinite(box_hi)) {
        throw DomainError("spectrum box must be a non-empty finite interval");
    }
    if (!(direction_scale > 0.0) || !std::isfinite(direction_scale)) {
        throw DomainError("direction scale must be positive");
    }
}

std::mt19937_64 sample_rng(std::uint64_t seed, int n, int k, std::uint64_t index) {
    std::uint64_t key = splitmix64(seed);
    key = splitmix64(key ^ (static_cast<std::uint64_t>(n) << 32 | static_cast<std::uint64_t>(k)));
    key = splitmix64(key ^ index);
    return std::mt19937_64(key);
}

Spectrum sample_gamma_k(const SampleConfig& cfg, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(cfg.box_lo, cfg.box_hi);
    const auto n = static_cast<std::size_t>(cfg.n);
    std::vector<double> block(n * kBlock), e((n + 1) * kBlock);
    for (std::uint64_t attempts = 0; attempts < kMaxAttempts; attempts += kBlock) {
        // draw sample-major so the sequence does not depend on the block layout
        for (std::size_t s = 0; s < kBlock; ++s)
            for (std::size_t i = 0; i < n; ++i) block[i * kBlock + s] = u(rng);
        kernels::esym_batch(block, cfg.n, kBlock, cfg.k, e);
        for (std::size_t s = 0; s < kBlock; ++s) {
            bool inside = true;
            for (int l = 1; l <= cfg.k && inside; ++l) inside = e[static_cast<std::size_t>(l) * kBlock + s] > 0.0;
            if (inside) {
                std::vector<double> v(n);
                for (std::size_t i = 0; i < n; ++i) v[i] = block[i * kBlock + s];
                return Spectrum(std::move(v));
            }
        }
    }
    throw DomainError("Gamma_" + std::to_string(cfg.k) + " acceptance rate below 1e-4 for the spectrum box");
}

SymTensor2 sample_direction(int n, double scale, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            m(i, j) = u(rng);
            m(j, i) = m(i, j);
        }
    }
    return SymTensor2(std::move(m));
}

std::string to_string(CheckKind kind) {
    switch (kind) {
    case CheckKind::Gll: return "gll";
    case CheckKind::Krylov: return "krylov";
    case CheckKind::GllSum3: return "gll_sum3";
    }
    return "?";
}

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

bool near_cone_boundary(const Spectrum& lambda, int k) {
    const int n = lambda.size();
    const double s1 = sigma(lambda, 1);
    return sigma(lambda, k) / binomial(n, k) < 1e-8 * std::pow(s1 / n, k);
}

CheckRecord check_gll(const Spectrum& lambda, const SymTensor2& B, double alpha, int k) {
    require_inside(lambda, k);
    if (B.size() != lambda.size()) throw DomainError("direction size does not match the spectrum");
    const auto parts = gll_parts(lambda, B, alpha, k);
    CheckRecord r;
    r.kind = CheckKind::Gll;
    r.k = k;
    r.alpha = alpha;
    r.lambda.assign(lambda.values().begin(), lambda.values().end());
    r.B = B.matrix();
    r.lhs = parts.lhs;
    r.rhs = parts.rhs;
    r.margin = parts.rhs - parts.lhs;
    r.verdict = gll_verdict(lambda, k, r.margin, r.rhs);
    return r;
}

CheckRecord check_gll_sum(const Spectrum& lambda, const std::vector<SymTensor2>& Bs, double alpha, int k) {
    require_inside(lambda, k);
    CheckRecord r;
    r.kind = CheckKind::GllSum3;
    r.k = k;
    r.alpha = alpha;
    r.lambda.assign(lambda.values().begin(), lambda.values().end());
    for (const auto& B : Bs) {
        if (B.size() != lambda.size()) throw DomainError("direction size does not match the spectrum");
        const auto parts = gll_parts(lambda, B, alpha, k);
        r.lhs += parts.lhs;
        r.rhs += parts.rhs;
    }
    r.margin = r.rhs - r.lhs;
    r.verdict = gll_verdict(lambda, k, r.margin, r.rhs);
    return r;
}

KrylovValue check_krylov_convexity(const Spectrum& lambda, const SymTensor2& B, double alpha, int k) {
    require_inside(lambda, k);
    if (B.size() != lambda.size()) throw DomainError("direction size does not match the spectrum");
    KrylovValue out;
    const Eigen::MatrixXd A = SymTensor2::diagonal(lambda.values()).matrix();
    const double bnorm = B.matrix().norm();
    if (bnorm == 0.0) return out;

    bool outside = false;
    auto f = [&](double t) {
        const SymTensor2 m(A + t * B.matrix());
        const double s1 = m.matrix().trace();
        const auto spec = eigen_spectrum(m);
        if (!in_gamma_k(spec, k).inside) outside = true;
        return std::pow(s1 / sigma(spec, k), alpha);
    };
    auto five_point = [](double fm2, double fm1, double f0, double fp1, double fp2, double h) {
        return (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h);
    };

    // the natural size of the second derivative is f0 |B|^2 / |A|^2
    const double f0 = f(0.0);
    const double scale = f0 * bnorm * bnorm / A.squaredNorm();
    out.inconclusive = true;
    double best = std::numeric_limits<double>::infinity();
    double h = 0.05 * A.norm() / bnorm;
    for (int attempt = 0; attempt < 40; ++attempt, h *= 0.5) {
        outside = false;
        const double fm2 = f(-2 * h), fm1 = f(-h), fmh = f(-0.5 * h), fph = f(0.5 * h), fp1 = f(h), fp2 = f(2 * h);
        if (outside) continue;
        const double coarse = five_point(fm2, fm1, f0, fp1, fp2, h);
        const double fine = five_point(fm1, fmh, f0, fph, fp1, 0.5 * h);
        const double value = (16.0 * fine - coarse) / 15.0;
        const double error = std::abs(value - fine);
        if (!std::isfinite(value)) break;
        if (error >= best) break;   // rounding has taken over
        best = error;
        out.value = value;
        out.error = error;
        out.step = h;
        if (error <= 1e-6 * (std::abs(value) + scale)) {
            out.inconclusive = false;
            break;
        }
    }
    return out;
}

IvochkinaResult check_ivochkina_condition(int k, double q, double p_max, int resolution) {
    if (k < 1) throw DomainError("k must be positive");
    if (!(p_max > 0.0) || !std::isfinite(p_max)) throw DomainError("gradient box must be bounded and non-empty");
    if (resolution < 16) throw DomainError("scan needs at least 16 nodes per axis");
    if (!std::isfinite(q)) throw DomainError("q must be finite");
    constexpr int n = 2;
    const double beta = (k - q) / (2.0 * k);
    IvochkinaResult res;
    res.bound_M2 = 2.0 * p_max * p_max;
    const double denom = 2.0 * std::sqrt(static_cast<double>(n)) * (1.0 + res.bound_M2);
    res.worst_margin = std::numeric_limits<double>::infinity();
    for (int a = 0; a < resolution; ++a) {
        for (int b = 0; b < resolution; ++b) {
            const Eigen::Vector2d p(-p_max + 2.0 * p_max * a / (resolution - 1),
                                    -p_max + 2.0 * p_max * b / (resolution - 1));
            const double s = p.squaredNorm();
            // Hessian of (1+s)^beta: tangential and radial eigenvalues
            const double tangential = 2.0 * beta * std::pow(1.0 + s, beta - 1.0);
            const double radial = 2.0 * beta * std::pow(1.0 + s, beta - 2.0) * (1.0 + (2.0 * beta - 1.0) * s);
            const double chi = std::pow(1.0 + s, beta);
            const double margin = k * std::min(tangential, radial) + chi / denom;
            if (margin < res.worst_margin) {
                res.worst_margin = margin;
                res.worst_point = p;
            }
        }
    }
    res.holds = res.worst_margin >= 0.0;
    return res;
}

std::string campaign_csv_header(int n) {
    std::string h = "kind,n,k,alpha,seed_index,lhs,rhs,margin,pass,status";
    for (int i = 1; i <= n; ++i) h += ",lambda" + std::to_string(i);
    for (int i = 1; i <= n; ++i)
        for (int j = i; j <= n; ++j) h += ",B" + std::to_string(i) + std::to_string(j);
    return h;
}

CampaignSummary run_campaign(const SampleConfig& cfg, std::ostream* csv) {
    cfg.validate();
    CampaignSummary sum;
    sum.n = cfg.n;
    sum.k = cfg.k;
    sum.seed = cfg.seed;
    sum.samples = cfg.sample_count;
    if (csv) *csv << campaign_csv_header(cfg.n) << '\n';

    bool first_gll = true, first_kry = true, first_sum = true;
    for (std::uint64_t idx = 0; idx < cfg.sample_count; ++idx) {
        auto rng = sample_rng(cfg.seed, cfg.n, cfg.k, idx);
        const Spectrum lambda = sample_gamma_k(cfg, rng);
        std::vector<SymTensor2> dirs;
        for (int d = 0; d < 3; ++d) dirs.push_back(sample_direction(cfg.n, cfg.direction_scale, rng));

        for (double alpha : cfg.alpha_list) {
            const CheckRecord gll = check_gll(lambda, dirs[0], alpha, cfg.k);
            tally(sum.gll, gll, idx, first_gll);

            const KrylovValue kv = check_krylov_convexity(lambda, dirs[0], alpha, cfg.k);
            CheckRecord kry;
            kry.kind = CheckKind::Krylov;
            kry.k = cfg.k;
            kry.alpha = alpha;
            kry.lambda = gll.lambda;
            kry.B = gll.B;
            kry.rhs = kv.value;
            kry.margin = kv.value;
            if (kv.inconclusive || near_cone_boundary(lambda, cfg.k)) kry.verdict = Verdict::Inconclusive;
            else kry.verdict = kv.value >= -kSlack * (1.0 + std::abs(kv.value)) ? Verdict::Pass : Verdict::Fail;
            tally(sum.krylov, kry, idx, first_kry);
            if (kry.verdict == Verdict::Pass && gll.verdict == Verdict::Fail) ++sum.implication_violations;

            const CheckRecord s3 = check_gll_sum(lambda, dirs, alpha, cfg.k);
            tally(sum.gll_sum3, s3, idx, first_sum);

            if (csv) {
                write_row(*csv, gll, cfg.n, idx, true);
                write_row(*csv, kry, cfg.n, idx, false);
                write_row(*csv, s3, cfg.n, idx, true);
            }
        }
    }
    return sum;
}

}  // namespace kcurv
