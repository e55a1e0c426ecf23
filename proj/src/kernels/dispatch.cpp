#include <cstdlib>
#include <cstring>

#include "kernel_impls.hpp"

namespace fdce::kernels {

namespace {

constexpr KernelTable kScalar{
    "scalar",         scalar::cmul,      scalar::cmul_conj, scalar::scale_real,
    scalar::abs2,     scalar::dot_conj,  scalar::axpy,      scalar::sq_dist,
};

#if defined(FDCE_HAVE_AVX2)
constexpr KernelTable kAvx2{
    "avx2",         avx2::cmul,     avx2::cmul_conj, avx2::scale_real,
    avx2::abs2,     avx2::dot_conj, avx2::axpy,      avx2::sq_dist,
};

bool cpu_has_avx2() noexcept {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

const KernelTable& select() noexcept {
  const char* env = std::getenv("FDCE_SIMD");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return kScalar;
  if (const KernelTable* t = avx2_table()) return *t;
  return kScalar;
}

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

const KernelTable* avx2_table() noexcept {
#if defined(FDCE_HAVE_AVX2)
  static const bool ok = cpu_has_avx2();
  return ok ? &kAvx2 : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() noexcept {
  static const KernelTable& table = select();
  return table;
}

}  // namespace fdce::kernels
