#pragma once

#include <array>
#include <vector>

namespace kcurv {

/// Sparse polynomial in a fixed number of variables, stored as a list of
/// monomials coef * v_0^e_0 * v_1^e_1 * ...
template <std::size_t Vars>
class Polynomial {
public:
    struct Monomial {
        double coef = 0.0;
        std::array<int, Vars> powers{};
    };

    Polynomial() = default;
    explicit Polynomial(std::vector<Monomial> terms) : terms_(std::move(terms)) {}

    static Polynomial constant(double c) { return Polynomial({Monomial{c, {}}}); }

    double operator()(const std::array<double, Vars>& v) const {
        double sum = 0.0;
        for (const auto& t : terms_) {
            double m = t.coef;
            for (std::size_t i = 0; i < Vars; ++i) {
                for (int e = 0; e < t.powers[i]; ++e) m *= v[i];
            }
            sum += m;
        }
        return sum;
    }

    /// True when every monomial has all exponents zero.
    bool is_constant() const {
        for (const auto& t : terms_) {
            for (int e : t.powers) {
                if (e != 0) return false;
            }
        }
        return true;
    }

    const std::vector<Monomial>& terms() const noexcept { return terms_; }

private:
    std::vector<Monomial> terms_;
};

/// phi on S^2 as a polynomial in (x1, x2, x3).
using SpherePolynomial = Polynomial<3>;
/// H(x1, x2, g).
using GraphPolynomial = Polynomial<3>;

}  // namespace kcurv
