// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace asp {

/// git describe of the source tree at configure time, or the release number.
const char* version();

}  // namespace asp
