#pragma once

// Randomised checks of the algebraic inequalities behind the second-order
// estimates: the concavity inequality for sigma_k (per direction and summed
// over three directions), convexity of (sigma_1/sigma_k)^alpha on Gamma_k,
// and the structural gradient condition for the graph right-hand side.

#include "kcurv/symmfunc.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace kcurv {

struct SampleConfig {
    int n = 3;
    int k = 2;
    std::vector<double> alpha_list{0.25, 0.5, 1.0, 2.0};
    std::uint64_t sample_count = 10000;
    std::uint64_t seed = 1;
    double box_lo = -1.0, box_hi = 2.0;   ///< spectrum entries
    double direction_scale = 1.0;         ///< B entries in [-scale, scale]

    /// DomainError unless 2 <= k <= n <= 8, alphas positive, box non-empty.
    void validate() const;
};

/// Independent generator for sample `index` of the stream (seed, n, k):
/// identical regardless of evaluation order.
std::mt19937_64 sample_rng(std::uint64_t seed, int n, int k, std::uint64_t index);

/// Rejection sample from the box into Gamma_k, candidates drawn in blocks of 8.
/// Throws DomainError when the acceptance rate drops below 1e-4.
Spectrum sample_gamma_k(const SampleConfig& cfg, std::mt19937_64& rng);

/// Symmetric direction with upper-triangle entries uniform in [-scale, scale].
SymTensor2 sample_direction(int n, double scale, std::mt19937_64& rng);

enum class CheckKind { Gll, Krylov, GllSum3 };
enum class Verdict { Pass, Fail, Inconclusive };

std::string to_string(CheckKind kind);
std::string to_string(Verdict v);

struct CheckRecord {
    CheckKind kind = CheckKind::Gll;
    int k = 0;
    double alpha = 0.0;
    std::vector<double> lambda;
    Eigen::MatrixXd B;        ///< empty for the summed form
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;      ///< rhs - lhs
    Verdict verdict = Verdict::Pass;
    bool pass() const noexcept { return verdict == Verdict::Pass; }
};

/// sigma_k(lambda) below 1e-8 C(n,k) (sigma_1/n)^k: both sides degenerate.
bool near_cone_boundary(const Spectrum& lambda, int k);

/// lhs = d^2/dt^2 sigma_k(diag(lambda) + tB), with a = F'sigma_k/sigma_k and
/// b = tr B / sigma_1: rhs = sigma_k (a - b)((alpha+1) a - (alpha-1) b).
/// Pass iff margin >= -1e-9 (1 + |rhs|). Throws ConeViolation outside Gamma_k.
CheckRecord check_gll(const Spectrum& lambda, const SymTensor2& B, double alpha, int k);

/// Both sides of check_gll summed over several directions.
CheckRecord check_gll_sum(const Spectrum& lambda, const std::vector<SymTensor2>& Bs, double alpha, int k);

struct KrylovValue {
    double value = 0.0;       ///< d^2/dt^2 (sigma_1/sigma_k)^alpha (diag(lambda) + tB) at t = 0
    double error = 0.0;       ///< |Richardson - finer five-point estimate|
    double step = 0.0;
    bool inconclusive = false;
};

/// Five-point second difference at h and h/2 combined by Richardson
/// extrapolation. The step halves until the whole stencil stays in Gamma_k;
/// an unstable estimate is flagged inconclusive.
KrylovValue check_krylov_convexity(const Spectrum& lambda, const SymTensor2& B, double alpha, int k);

struct IvochkinaResult {
    bool holds = true;
    double worst_margin = 0.0;   ///< min over the scan of k lambda_min + chi^{1/k} / (2 sqrt(n)(1 + M^2))
    Eigen::Vector2d worst_point = Eigen::Vector2d::Zero();
    double bound_M2 = 0.0;       ///< (max |p|)^2 over the box
};

/// Scans p over the square [-p_max, p_max]^2 with `resolution` nodes per
/// axis, for chi^{1/k} = (1 + |p|^2)^{(k-q)/(2k)} (H = 1, n = 2).
IvochkinaResult check_ivochkina_condition(int k, double q, double p_max, int resolution);

struct KindSummary {
    std::uint64_t pass = 0, fail = 0, inconclusive = 0;
    double worst_margin = 0.0;          ///< over conclusive records
    std::uint64_t worst_index = 0;
    std::vector<std::uint64_t> failures;   ///< first few failing sample indices
};

struct CampaignSummary {
    int n = 0, k = 0;
    std::uint64_t seed = 0;
    std::uint64_t samples = 0;
    KindSummary gll, krylov, gll_sum3;
    /// Krylov value >= 0 but the per-direction check failed at the same (sample, alpha)
    std::uint64_t implication_violations = 0;
    std::uint64_t hard_failures() const noexcept {
        return gll.fail + krylov.fail + gll_sum3.fail + implication_violations;
    }
};

/// Header line of the campaign CSV for dimension n.
std::string campaign_csv_header(int n);

/// Runs every check for every sample and alpha; rows go to `csv` when given.
CampaignSummary run_campaign(const SampleConfig& cfg, std::ostream* csv);

}  // namespace kcurv
