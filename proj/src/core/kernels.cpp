#include "core/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <string>

#include "core/errors.hpp"

namespace hhi::core::kern {

namespace {

const Table kScalarTable = {
    &gemm_nn_ref<float>, &gemm_nt_ref<float>, &gemm_tn_ref<float>,
    &axpy_ref<float>,    &scale_ref<float>,   &ew_add_ref<float>,
    &ew_sub_ref<float>,  &ew_mul_ref<float>,  &ew_mul_acc_ref<float>,
    &adam_update_ref<float>, &all_finite_ref<float>, &reduce_sum_ref<float>,
};

bool cpu_has_avx2() {
#if defined(HHI_BUILD_AVX2) && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa pick_default() {
  const char* env = std::getenv("HHI_SIMD");
  if (env != nullptr) {
    std::string v(env);
    if (v == "scalar") return Isa::kScalar;
    if (v == "avx2") {
      if (!cpu_has_avx2()) {
        throw ConfigError("HHI_SIMD=avx2 requested but this CPU or build lacks AVX2+FMA");
      }
      return Isa::kAvx2;
    }
    if (!v.empty() && v != "auto") {
      throw ConfigError("HHI_SIMD must be one of scalar|avx2|auto, got '" + v + "'");
    }
  }
  return cpu_has_avx2() ? Isa::kAvx2 : Isa::kScalar;
}

Isa g_isa = pick_default();

}  // namespace

#if defined(HHI_BUILD_AVX2)
const Table& avx2_table();  // defined in kernels_avx2.cpp
#endif

const Table& table_for(Isa isa) {
#if defined(HHI_BUILD_AVX2)
  if (isa == Isa::kAvx2) return avx2_table();
#endif
  return kScalarTable;
}

const Table& table() { return table_for(g_isa); }

Isa active_isa() { return g_isa; }

bool isa_supported(Isa isa) {
  return isa == Isa::kScalar || cpu_has_avx2();
}

void force_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw ConfigError("requested SIMD backend is not supported on this CPU/build");
  }
  g_isa = isa;
}

const char* isa_name(Isa isa) {
  return isa == Isa::kAvx2 ? "avx2" : "scalar";
}

}  // namespace hhi::core::kern
