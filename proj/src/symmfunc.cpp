#include "kcurv/symmfunc.hpp"

#include "kcurv/errors.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <string>

namespace kcurv {

namespace {

void check_finite(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) throw DomainError("spectrum entry is not finite");
    }
}

void check_order(int l, int lo, int hi, const char* what) {
    if (l < lo || l > hi) {
        throw DomainError(std::string(what) + ": index " + std::to_string(l) + " outside [" +
                          std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
}

void check_same_shape(const SymTensor2& a, const SymTensor2& b) {
    if (a.size() != b.size()) throw DomainError("tensor shape mismatch");
}

}  // namespace

Spectrum::Spectrum(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw DomainError("spectrum must have n >= 1 entries");
    check_finite(values_);
}

Spectrum::Spectrum(std::initializer_list<double> values)
    : Spectrum(std::vector<double>(values)) {}

SymTensor2::SymTensor2(Eigen::MatrixXd m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() == 0) throw DomainError("tensor must be square, n >= 1");
    for (Eigen::Index i = 0; i < m_.rows(); ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            if (m_(i, j) != m_(j, i)) throw DomainError("tensor is not symmetric");
        }
    }
    if (!m_.allFinite()) throw DomainError("tensor entry is not finite");
}

SymTensor2 SymTensor2::symmetrized(const Eigen::MatrixXd& m) {
    Eigen::MatrixXd s = 0.5 * (m + m.transpose());
    return SymTensor2(std::move(s));
}

SymTensor2 SymTensor2::identity(int n) { return SymTensor2(Eigen::MatrixXd::Identity(n, n)); }

SymTensor2 SymTensor2::zero(int n) { return SymTensor2(Eigen::MatrixXd::Zero(n, n)); }

SymTensor2 SymTensor2::diagonal(std::span<const double> d) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d.size()),
                                              static_cast<Eigen::Index>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = d[i];
    return SymTensor2(std::move(m));
}

void OperatorSpec::validate(int n) const {
    check_order(k, 1, n, "operator order k");
    if (kind == OperatorKind::Quotient) check_order(l, 0, k - 1, "quotient denominator l");
}

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double c = 1.0;
    for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return std::round(c);
}

std::vector<double> sigma_all(std::span<const double> values, int l_max) {
    std::vector<double> e(static_cast<std::size_t>(l_max) + 1, 0.0);
    e[0] = 1.0;
    int seen = 0;
    for (double x : values) {
        ++seen;
        // descending l so e[l-1] still holds the previous prefix
        for (int l = std::min(seen, l_max); l >= 1; --l) e[l] += x * e[l - 1];
    }
    return e;
}

double sigma(const Spectrum& spec, int l) {
    check_order(l, 0, spec.size(), "sigma");
    return sigma_all(spec.values(), l)[static_cast<std::size_t>(l)];
}

double sigma_subset_oracle(const Spectrum& spec, int l) {
    const int n = spec.size();
    if (n > 12) throw DomainError("subset enumeration refused for n > 12");
    check_order(l, 0, n, "sigma_subset_oracle");
    double sum = 0.0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (std::popcount(mask) != l) continue;
        double prod = 1.0;
        for (int i = 0; i < n; ++i) {
            if (mask & (1u << i)) prod *= spec[i];
        }
        sum += prod;
    }
    return sum;
}

std::vector<double> sigma_grad(const Spectrum& spec, int l) {
    const int n = spec.size();
    check_order(l, 1, n, "sigma_grad");
    std::vector<double> grad(static_cast<std::size_t>(n));
    std::vector<double> rest;
    rest.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        rest.clear();
        for (int j = 0; j < n; ++j) {
            if (j != i) rest.push_back(spec[j]);
        }
        grad[static_cast<std::size_t>(i)] = sigma_all(rest, l - 1)[static_cast<std::size_t>(l - 1)];
    }
    return grad;
}

Spectrum eigen_spectrum(const SymTensor2& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.matrix(), Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& ev = es.eigenvalues();
    return Spectrum(std::vector<double>(ev.data(), ev.data() + ev.size()));
}

double sigma(const SymTensor2& a, int l) {
    check_order(l, 0, a.size(), "sigma");
    if (l == 0) return 1.0;
    return sigma(eigen_spectrum(a), l);
}

std::vector<double> sigma_line_coefficients(const SymTensor2& a, const SymTensor2& b, int l) {
    check_same_shape(a, b);
    check_order(l, 0, a.size(), "sigma_line_coefficients");
    if (l == 0) return {1.0};

    const double norm_a = a.matrix().norm();
    const double norm_b = b.matrix().norm();
    // t = scale * s, s in [-1, 1]; balances |A| against scale*|B|
    const double scale = (norm_a > 0.0 && norm_b > 0.0) ? norm_a / norm_b : 1.0;

    const int m = l + 1;
    std::vector<double> s(static_cast<std::size_t>(m));
    std::vector<double> dd(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        s[j] = std::cos((2.0 * j + 1.0) * std::numbers::pi / (2.0 * m));
        Eigen::MatrixXd at = a.matrix() + (scale * s[j]) * b.matrix();
        dd[j] = sigma(SymTensor2(std::move(at)), l);
    }
    // Newton divided differences: dd[j] = f[s_0..s_j]; equal samples give exact zeros
    for (int level = 1; level < m; ++level) {
        for (int j = m - 1; j >= level; --j) {
            dd[j] = (dd[j] - dd[j - 1]) / (s[j] - s[j - level]);
        }
    }
    // Horner expansion of the Newton form into monomials of s
    std::vector<double> coef(static_cast<std::size_t>(m), 0.0);
    coef[0] = dd[m - 1];
    int deg = 0;
    for (int j = m - 2; j >= 0; --j) {
        // coef <- coef * (s - s_j) + dd[j]
        for (int d = deg + 1; d >= 1; --d) coef[d] = coef[d - 1] - s[j] * coef[d];
        coef[0] = -s[j] * coef[0] + dd[j];
        ++deg;
    }
    double pw = 1.0;
    for (int d = 0; d < m; ++d) {
        coef[d] /= pw;
        pw *= scale;
    }
    return coef;
}

double sigma_hess_dir(const SymTensor2& a, const SymTensor2& b, int l) {
    check_same_shape(a, b);
    check_order(l, 1, a.size(), "sigma_hess_dir");
    if (l == 1) return 0.0;
    return 2.0 * sigma_line_coefficients(a, b, l)[2];
}

ConeMembership in_gamma_k(const Spectrum& spec, int k) {
    check_order(k, 1, spec.size(), "in_gamma_k");
    const auto e = sigma_all(spec.values(), k);
    ConeMembership out{true, e[1]};
    for (int l = 1; l <= k; ++l) {
        out.margin = std::min(out.margin, e[static_cast<std::size_t>(l)]);
        if (!(e[static_cast<std::size_t>(l)] > 0.0)) out.inside = false;
    }
    return out;
}

double operator_value(const Spectrum& spec, const OperatorSpec& op) {
    op.validate(spec.size());
    const auto e = sigma_all(spec.values(), op.k);
    if (op.kind == OperatorKind::SigmaK) return e[static_cast<std::size_t>(op.k)];
    const double den = e[static_cast<std::size_t>(op.l)];
    if (!(den > 0.0)) throw ConeViolation("quotient denominator sigma_" + std::to_string(op.l) + " <= 0");
    return e[static_cast<std::size_t>(op.k)] / den;
}

std::vector<double> operator_grad(const Spectrum& spec, const OperatorSpec& op) {
    op.validate(spec.size());
    auto gk = sigma_grad(spec, op.k);
    if (op.kind == OperatorKind::SigmaK) return gk;
    const auto e = sigma_all(spec.values(), op.k);
    const double num = e[static_cast<std::size_t>(op.k)];
    const double den = e[static_cast<std::size_t>(op.l)];
    if (!(den > 0.0)) throw ConeViolation("quotient denominator sigma_" + std::to_string(op.l) + " <= 0");
    std::vector<double> gl(gk.size(), 0.0);
    if (op.l >= 1) gl = sigma_grad(spec, op.l);
    for (std::size_t i = 0; i < gk.size(); ++i) gk[i] = (gk[i] * den - num * gl[i]) / (den * den);
    return gk;
}

OperatorValueGrad operator_value_grad(const SymTensor2& a, const OperatorSpec& op) {
    op.validate(a.size());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.matrix());
    const Eigen::VectorXd& ev = es.eigenvalues();
    const Spectrum spec(std::vector<double>(ev.data(), ev.data() + ev.size()));
    const double value = operator_value(spec, op);
    const auto g = operator_grad(spec, op);
    // first derivative of a spectral function needs no divided differences:
    // dF/dA = Q diag(df/dlambda) Q^T, well defined even at repeated eigenvalues
    const Eigen::VectorXd gv = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
    const Eigen::MatrixXd& q = es.eigenvectors();
    Eigen::MatrixXd grad = q * gv.asDiagonal() * q.transpose();
    return {value, SymTensor2::symmetrized(grad)};
}

}  // namespace kcurv
