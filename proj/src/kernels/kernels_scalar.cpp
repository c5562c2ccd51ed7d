// Scalar reference kernels. Compiled with -ffp-contract=off.

#include "kcurv/kernels.hpp"

#include <cmath>

namespace kcurv::kernels::scalar {

namespace {

struct Shape {
    double a11, a12, a22;
};

inline void finish(const Shape& a, const CurvatureOutputs& out, std::size_t i) {
    out.a11[i] = a.a11;
    out.a12[i] = a.a12;
    out.a22[i] = a.a22;
    const double s1 = a.a11 + a.a22;
    const double s2 = a.a11 * a.a22 - a.a12 * a.a12;
    const double half_diff = 0.5 * (a.a11 - a.a22);
    const double disc = std::sqrt(half_diff * half_diff + a.a12 * a.a12);
    const double mean = 0.5 * s1;
    out.sigma1[i] = s1;
    out.sigma2[i] = s2;
    out.lambda_min[i] = mean - disc;
    out.lambda_max[i] = mean + disc;
}

// returns M h M for M = I - c p p^T, all 2x2 symmetric
inline Shape sandwich(double c, double p1, double p2, double h11, double h12, double h22) {
    const double m11 = 1.0 - c * (p1 * p1);
    const double m12 = -(c * (p1 * p2));
    const double m22 = 1.0 - c * (p2 * p2);
    // hm = h * M
    const double t11 = h11 * m11 + h12 * m12;
    const double t12 = h11 * m12 + h12 * m22;
    const double t21 = h12 * m11 + h22 * m12;
    const double t22 = h12 * m12 + h22 * m22;
    Shape s;
    s.a11 = m11 * t11 + m12 * t21;
    s.a12 = m11 * t12 + m12 * t22;
    s.a22 = m12 * t12 + m22 * t22;
    return s;
}

}  // namespace

void radial_curvature(const RadialInputs& in, const CurvatureOutputs& out) {
    const std::size_t n = in.rho.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double r = in.rho[i];
        const double p1 = in.d1[i];
        const double p2 = in.d2[i];
        const double r2 = r * r;
        const double w2 = r2 + (p1 * p1 + p2 * p2);
        const double w = std::sqrt(w2);
        out.aux[i] = r2 / w;
        // h = (rho^2 I + 2 p p^T - rho Hess) / W ; A = g^{-1/2} h g^{-1/2}
        // g^{-1/2} = (I - c p p^T) / rho, c = 1 / (W (rho + W))
        const double h11 = (r2 + 2.0 * (p1 * p1) - r * in.h11[i]) / w;
        const double h12 = (2.0 * (p1 * p2) - r * in.h12[i]) / w;
        const double h22 = (r2 + 2.0 * (p2 * p2) - r * in.h22[i]) / w;
        const double c = 1.0 / (w * (r + w));
        Shape a = sandwich(c, p1, p2, h11, h12, h22);
        a.a11 /= r2;
        a.a12 /= r2;
        a.a22 /= r2;
        finish(a, out, i);
    }
}

void graph_curvature(const GraphInputs& in, const CurvatureOutputs& out) {
    const std::size_t n = in.gx.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double p1 = in.gx[i];
        const double p2 = in.gy[i];
        const double w = std::sqrt(1.0 + (p1 * p1 + p2 * p2));
        out.aux[i] = w;
        // A = -gamma D2g gamma / w, gamma = I - p p^T / (w (1 + w))
        const double c = 1.0 / (w * (1.0 + w));
        Shape a = sandwich(c, p1, p2, in.gxx[i], in.gxy[i], in.gyy[i]);
        a.a11 = -a.a11 / w;
        a.a12 = -a.a12 / w;
        a.a22 = -a.a22 / w;
        finish(a, out, i);
    }
}

void esym_batch(std::span<const double> values, int n, std::size_t count, int l_max,
                std::span<double> out) {
    for (std::size_t s = 0; s < count; ++s) {
        out[s] = 1.0;
        for (int l = 1; l <= l_max; ++l) out[static_cast<std::size_t>(l) * count + s] = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = values[static_cast<std::size_t>(i) * count + s];
            for (int l = l_max; l >= 1; --l) {
                double& el = out[static_cast<std::size_t>(l) * count + s];
                el = el + x * out[static_cast<std::size_t>(l - 1) * count + s];
            }
        }
    }
}

}  // namespace kcurv::kernels::scalar
