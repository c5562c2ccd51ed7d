#include "kcurv/kernels.hpp"

#include <atomic>
#include <cstdlib>

namespace kcurv::kernels {

namespace {

Isa detect() noexcept {
    if (const char* force = std::getenv("KCURV_FORCE_SCALAR"); force && *force && *force != '0') {
        return Isa::Scalar;
    }
    return avx2_available() ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<Isa>& current() noexcept {
    static std::atomic<Isa> isa{detect()};
    return isa;
}

}  // namespace

bool avx2_available() noexcept {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

void set_isa(Isa isa) noexcept {
    if (isa == Isa::Avx2 && !avx2_available()) isa = Isa::Scalar;
    current().store(isa, std::memory_order_relaxed);
}

void radial_curvature(const RadialInputs& in, const CurvatureOutputs& out) {
    if (active_isa() == Isa::Avx2) {
        avx2::radial_curvature(in, out);
    } else {
        scalar::radial_curvature(in, out);
    }
}

void graph_curvature(const GraphInputs& in, const CurvatureOutputs& out) {
    if (active_isa() == Isa::Avx2) {
        avx2::graph_curvature(in, out);
    } else {
        scalar::graph_curvature(in, out);
    }
}

void esym_batch(std::span<const double> values, int n, std::size_t count, int l_max,
                std::span<double> out) {
    if (active_isa() == Isa::Avx2) {
        avx2::esym_batch(values, n, count, l_max, out);
    } else {
        scalar::esym_batch(values, n, count, l_max, out);
    }
}

}  // namespace kcurv::kernels
