#pragma once

// Elementary symmetric functions of principal-curvature spectra and of
// symmetric matrices, Garding cone membership and the sigma_k / quotient
// curvature operators.

#include <Eigen/Dense>

#include <initializer_list>
#include <span>
#include <vector>

namespace kcurv {

/// Principal curvatures (lambda_1, ..., lambda_n). Always n >= 1, all entries finite.
class Spectrum {
public:
    explicit Spectrum(std::vector<double> values);
    Spectrum(std::initializer_list<double> values);

    int size() const noexcept { return static_cast<int>(values_.size()); }
    double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }
    std::span<const double> values() const noexcept { return values_; }

private:
    std::vector<double> values_;
};

/// Symmetric n x n tensor in an orthonormal frame. Symmetry is exact as stored.
class SymTensor2 {
public:
    /// Throws DomainError unless `m` is square and exactly symmetric.
    explicit SymTensor2(Eigen::MatrixXd m);

    static SymTensor2 symmetrized(const Eigen::MatrixXd& m);
    static SymTensor2 identity(int n);
    static SymTensor2 zero(int n);
    static SymTensor2 diagonal(std::span<const double> d);

    int size() const noexcept { return static_cast<int>(m_.rows()); }
    const Eigen::MatrixXd& matrix() const noexcept { return m_; }
    double operator()(int i, int j) const { return m_(i, j); }

private:
    Eigen::MatrixXd m_;
};

enum class OperatorKind { SigmaK, Quotient };

/// F = sigma_k, or F = sigma_k / sigma_l (0 <= l < k).
struct OperatorSpec {
    OperatorKind kind = OperatorKind::SigmaK;
    int k = 1;
    int l = 0;

    static OperatorSpec sigma_k(int k) { return {OperatorKind::SigmaK, k, 0}; }
    static OperatorSpec quotient(int k, int l) { return {OperatorKind::Quotient, k, l}; }

    /// Degree of homogeneity: k for sigma_k, k - l for the quotient.
    int homogeneity() const noexcept { return kind == OperatorKind::SigmaK ? k : k - l; }
    /// Throws DomainError unless 1 <= k <= n and (quotient) 0 <= l < k.
    void validate(int n) const;
};

double binomial(int n, int k);

/// e_0 .. e_{l_max} of `values` by the one-pass recurrence.
std::vector<double> sigma_all(std::span<const double> values, int l_max);

/// sigma_l(lambda), 0 <= l <= n, sigma_0 = 1.
double sigma(const Spectrum& spec, int l);

/// Enumerates every size-l index subset. Independent of `sigma`; n <= 12.
double sigma_subset_oracle(const Spectrum& spec, int l);

/// d sigma_l / d lambda_i = sigma_{l-1}(lambda | i), 1 <= l <= n.
std::vector<double> sigma_grad(const Spectrum& spec, int l);

/// Eigenvalues of a symmetric tensor, ascending.
Spectrum eigen_spectrum(const SymTensor2& a);

double sigma(const SymTensor2& a, int l);

/// Monomial coefficients c_0..c_l of the polynomial t -> sigma_l(A + tB),
/// recovered by interpolation at l+1 Chebyshev nodes.
std::vector<double> sigma_line_coefficients(const SymTensor2& a, const SymTensor2& b, int l);

/// d^2/dt^2 sigma_l(A + tB) at t = 0, i.e. sigma_l^{ij,mq} B_ij B_mq.
double sigma_hess_dir(const SymTensor2& a, const SymTensor2& b, int l);

struct ConeMembership {
    bool inside = false;
    double margin = 0.0;  ///< min_{1<=l<=k} sigma_l, raw (not normalized)
};

/// lambda in Gamma_k iff sigma_l(lambda) > 0 for l = 1..k.
ConeMembership in_gamma_k(const Spectrum& spec, int k);

/// F(lambda) for a spectral operator.
double operator_value(const Spectrum& spec, const OperatorSpec& op);
/// dF/dlambda_i.
std::vector<double> operator_grad(const Spectrum& spec, const OperatorSpec& op);

struct OperatorValueGrad {
    double value;
    SymTensor2 grad;  ///< dF/dA_ij
};

/// Value and matrix gradient of F(A) = f(eigenvalues of A).
/// Throws ConeViolation for a quotient whose denominator sigma_l(A) <= 0.
OperatorValueGrad operator_value_grad(const SymTensor2& a, const OperatorSpec& op);

}  // namespace kcurv
