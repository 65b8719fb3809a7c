#include "mtr/kernels/kernels.hpp"

#include <atomic>
#include <cstdlib>

namespace mtr::kern {

namespace {

std::atomic<bool> g_force_scalar{false};

bool env_force_scalar() {
    const char* v = std::getenv("MTR_FORCE_SCALAR");
    return v != nullptr && v[0] == '1';
}

}  // namespace

bool avx2_runtime_supported() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

void force_scalar(bool on) { g_force_scalar.store(on); }

const Kernels& active() {
    static const bool env_forced = env_force_scalar();
    if (env_forced || g_force_scalar.load()) return scalar();
    static const Kernels* best = [] {
        const Kernels* v = avx2();
        if (v != nullptr && avx2_runtime_supported()) return v;
        return &scalar();
    }();
    return *best;
}

}  // namespace mtr::kern
