// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "asp/version.hpp"

#ifndef ASP_VERSION
#define ASP_VERSION "unknown"
#endif

namespace asp {

const char* version() { return ASP_VERSION; }

}  // namespace asp
