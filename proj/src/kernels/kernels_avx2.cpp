// AVX2 kernels, four doubles per lane group. Compiled with -mavx2 and
// -ffp-contract=off; only reached when the CPU reports AVX2.
// Operation order mirrors kernels_scalar.cpp exactly.

#include "kcurv/kernels.hpp"

#include <immintrin.h>

namespace kcurv::kernels::avx2 {

namespace {

struct Shape4 {
    __m256d a11, a12, a22;
};

inline __m256d load(std::span<const double> v, std::size_t i) { return _mm256_loadu_pd(v.data() + i); }
inline void store(std::span<double> v, std::size_t i, __m256d x) { _mm256_storeu_pd(v.data() + i, x); }

inline Shape4 sandwich(__m256d c, __m256d p1, __m256d p2, __m256d h11, __m256d h12, __m256d h22) {
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d zero = _mm256_setzero_pd();
    const __m256d m11 = _mm256_sub_pd(one, _mm256_mul_pd(c, _mm256_mul_pd(p1, p1)));
    const __m256d m12 = _mm256_sub_pd(zero, _mm256_mul_pd(c, _mm256_mul_pd(p1, p2)));
    const __m256d m22 = _mm256_sub_pd(one, _mm256_mul_pd(c, _mm256_mul_pd(p2, p2)));
    const __m256d t11 = _mm256_add_pd(_mm256_mul_pd(h11, m11), _mm256_mul_pd(h12, m12));
    const __m256d t12 = _mm256_add_pd(_mm256_mul_pd(h11, m12), _mm256_mul_pd(h12, m22));
    const __m256d t21 = _mm256_add_pd(_mm256_mul_pd(h12, m11), _mm256_mul_pd(h22, m12));
    const __m256d t22 = _mm256_add_pd(_mm256_mul_pd(h12, m12), _mm256_mul_pd(h22, m22));
    Shape4 s;
    s.a11 = _mm256_add_pd(_mm256_mul_pd(m11, t11), _mm256_mul_pd(m12, t21));
    s.a12 = _mm256_add_pd(_mm256_mul_pd(m11, t12), _mm256_mul_pd(m12, t22));
    s.a22 = _mm256_add_pd(_mm256_mul_pd(m12, t12), _mm256_mul_pd(m22, t22));
    return s;
}

inline void finish(const Shape4& a, const CurvatureOutputs& out, std::size_t i) {
    const __m256d half = _mm256_set1_pd(0.5);
    store(out.a11, i, a.a11);
    store(out.a12, i, a.a12);
    store(out.a22, i, a.a22);
    const __m256d s1 = _mm256_add_pd(a.a11, a.a22);
    const __m256d s2 = _mm256_sub_pd(_mm256_mul_pd(a.a11, a.a22), _mm256_mul_pd(a.a12, a.a12));
    const __m256d hd = _mm256_mul_pd(half, _mm256_sub_pd(a.a11, a.a22));
    const __m256d disc =
        _mm256_sqrt_pd(_mm256_add_pd(_mm256_mul_pd(hd, hd), _mm256_mul_pd(a.a12, a.a12)));
    const __m256d mean = _mm256_mul_pd(half, s1);
    store(out.sigma1, i, s1);
    store(out.sigma2, i, s2);
    store(out.lambda_min, i, _mm256_sub_pd(mean, disc));
    store(out.lambda_max, i, _mm256_add_pd(mean, disc));
}

template <class In>
In tail(const In& in, std::size_t from);

template <>
RadialInputs tail(const RadialInputs& in, std::size_t from) {
    return {in.rho.subspan(from), in.d1.subspan(from), in.d2.subspan(from),
            in.h11.subspan(from), in.h12.subspan(from), in.h22.subspan(from)};
}

template <>
GraphInputs tail(const GraphInputs& in, std::size_t from) {
    return {in.gx.subspan(from), in.gy.subspan(from), in.gxx.subspan(from), in.gxy.subspan(from),
            in.gyy.subspan(from)};
}

CurvatureOutputs tail_out(const CurvatureOutputs& out, std::size_t from) {
    return {out.aux.subspan(from),    out.a11.subspan(from),    out.a12.subspan(from),
            out.a22.subspan(from),    out.sigma1.subspan(from), out.sigma2.subspan(from),
            out.lambda_min.subspan(from), out.lambda_max.subspan(from)};
}

}  // namespace

void radial_curvature(const RadialInputs& in, const CurvatureOutputs& out) {
    const std::size_t n = in.rho.size();
    const std::size_t body = n - n % 4;
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d two = _mm256_set1_pd(2.0);
    for (std::size_t i = 0; i < body; i += 4) {
        const __m256d r = load(in.rho, i);
        const __m256d p1 = load(in.d1, i);
        const __m256d p2 = load(in.d2, i);
        const __m256d r2 = _mm256_mul_pd(r, r);
        const __m256d p11 = _mm256_mul_pd(p1, p1);
        const __m256d p12 = _mm256_mul_pd(p1, p2);
        const __m256d p22 = _mm256_mul_pd(p2, p2);
        const __m256d w = _mm256_sqrt_pd(_mm256_add_pd(r2, _mm256_add_pd(p11, p22)));
        store(out.aux, i, _mm256_div_pd(r2, w));
        const __m256d h11 = _mm256_div_pd(
            _mm256_sub_pd(_mm256_add_pd(r2, _mm256_mul_pd(two, p11)), _mm256_mul_pd(r, load(in.h11, i))), w);
        const __m256d h12 =
            _mm256_div_pd(_mm256_sub_pd(_mm256_mul_pd(two, p12), _mm256_mul_pd(r, load(in.h12, i))), w);
        const __m256d h22 = _mm256_div_pd(
            _mm256_sub_pd(_mm256_add_pd(r2, _mm256_mul_pd(two, p22)), _mm256_mul_pd(r, load(in.h22, i))), w);
        const __m256d c = _mm256_div_pd(one, _mm256_mul_pd(w, _mm256_add_pd(r, w)));
        Shape4 a = sandwich(c, p1, p2, h11, h12, h22);
        a.a11 = _mm256_div_pd(a.a11, r2);
        a.a12 = _mm256_div_pd(a.a12, r2);
        a.a22 = _mm256_div_pd(a.a22, r2);
        finish(a, out, i);
    }
    if (body < n) scalar::radial_curvature(tail(in, body), tail_out(out, body));
}

void graph_curvature(const GraphInputs& in, const CurvatureOutputs& out) {
    const std::size_t n = in.gx.size();
    const std::size_t body = n - n % 4;
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d zero = _mm256_setzero_pd();
    for (std::size_t i = 0; i < body; i += 4) {
        const __m256d p1 = load(in.gx, i);
        const __m256d p2 = load(in.gy, i);
        const __m256d w = _mm256_sqrt_pd(
            _mm256_add_pd(one, _mm256_add_pd(_mm256_mul_pd(p1, p1), _mm256_mul_pd(p2, p2))));
        store(out.aux, i, w);
        const __m256d c = _mm256_div_pd(one, _mm256_mul_pd(w, _mm256_add_pd(one, w)));
        Shape4 a = sandwich(c, p1, p2, load(in.gxx, i), load(in.gxy, i), load(in.gyy, i));
        a.a11 = _mm256_div_pd(_mm256_sub_pd(zero, a.a11), w);
        a.a12 = _mm256_div_pd(_mm256_sub_pd(zero, a.a12), w);
        a.a22 = _mm256_div_pd(_mm256_sub_pd(zero, a.a22), w);
        finish(a, out, i);
    }
    if (body < n) scalar::graph_curvature(tail(in, body), tail_out(out, body));
}

void esym_batch(std::span<const double> values, int n, std::size_t count, int l_max,
                std::span<double> out) {
    const std::size_t body = count - count % 4;
    constexpr int kMaxOrder = 16;
    if (l_max >= kMaxOrder) {
        scalar::esym_batch(values, n, count, l_max, out);
        return;
    }
    __m256d e[kMaxOrder];
    for (std::size_t s = 0; s < body; s += 4) {
        e[0] = _mm256_set1_pd(1.0);
        for (int l = 1; l <= l_max; ++l) e[l] = _mm256_setzero_pd();
        for (int i = 0; i < n; ++i) {
            const __m256d x = _mm256_loadu_pd(values.data() + static_cast<std::size_t>(i) * count + s);
            for (int l = l_max; l >= 1; --l) e[l] = _mm256_add_pd(e[l], _mm256_mul_pd(x, e[l - 1]));
        }
        for (int l = 0; l <= l_max; ++l) _mm256_storeu_pd(out.data() + static_cast<std::size_t>(l) * count + s, e[l]);
    }
    for (std::size_t s = body; s < count; ++s) {
        double acc[kMaxOrder];
        acc[0] = 1.0;
        for (int l = 1; l <= l_max; ++l) acc[l] = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = values[static_cast<std::size_t>(i) * count + s];
            for (int l = l_max; l >= 1; --l) acc[l] = acc[l] + x * acc[l - 1];
        }
        for (int l = 0; l <= l_max; ++l) out[static_cast<std::size_t>(l) * count + s] = acc[l];
    }
}

}  // namespace kcurv::kernels::avx2
