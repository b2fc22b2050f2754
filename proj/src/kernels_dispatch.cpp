// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <mutex>

#include "boxrank/error.hpp"
#include "boxrank/kernels.hpp"

namespace boxrank::kern {

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* resolve(std::string_view name) {
  if (name == "scalar") return &scalar_table();
  if (name == "avx2") {
    const KernelTable* t = avx2_table();
    if (t == nullptr || !cpu_has_avx2())
      throw ConfigError("avx2 kernels unavailable on this machine");
    return t;
  }
  if (name == "auto" || name.empty()) {
    const KernelTable* t = avx2_table();
    if (t != nullptr && cpu_has_avx2()) return t;
    return &scalar_table();
  }
  throw ConfigError(msg("unknown kernel variant '", name,
                        "' (expected auto, scalar or avx2)"));
}

const KernelTable*& slot() {
  static const KernelTable* active_table = nullptr;
  return active_table;
}

std::mutex& mu() {
  static std::mutex m;
  return m;
}

}  // namespace

const KernelTable& active() {
  std::lock_guard<std::mutex> lock(mu());
  const KernelTable*& t = slot();
  if (t == nullptr) {
    const char* env = std::getenv("BOXRANK_KERNELS");
    t = resolve(env != nullptr ? env : "auto");
  }
  return *t;
}

void select(std::string_view name) {
  const KernelTable* t = resolve(name);
  std::lock_guard<std::mutex> lock(mu());
  slot() = t;
}

std::string active_name() { return active().name; }

}  // namespace boxrank::kern
