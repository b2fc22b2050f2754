// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace boxrank {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace boxrank
