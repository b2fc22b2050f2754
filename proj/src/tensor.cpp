// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#include "boxrank/tensor.hpp"

namespace boxrank {

namespace {
#ifdef NDEBUG
bool g_finite_checks = false;
#else
bool g_finite_checks = true;
#endif
}  // namespace

bool finite_checks_enabled() { return g_finite_checks; }
void set_finite_checks(bool on) { g_finite_checks = on; }

}  // namespace boxrank
