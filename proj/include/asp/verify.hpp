// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace asp::verify {

enum class Kind { Gradient, Oracle, Invariant };
const char* kind_name(Kind kind);

struct Options {
  std::size_t gradient_cases = 100;
  std::size_t render_scenes = 50;
  std::uint64_t seed = 42;
};

/// Outcome of one suite. `measured` is the worst error over all cases and
/// passes when it is at most `tolerance` (strictly below for gradients).
struct SuiteResult {
  std::string name;
  Kind kind = Kind::Gradient;
  std::size_t cases = 0;
  double tolerance = 0.0;
  double measured = 0.0;
  bool passed = false;
  double seconds = 0.0;
};

struct Suite {
  std::string name;
  Kind kind;
  std::function<SuiteResult(const Options&)> run;
};

const std::vector<Suite>& suites();

/// Runs the suites whose names start with one of `filters` (all when empty).
/// Throws UsageError when a filter matches nothing.
std::vector<SuiteResult> run_suites(const Options& options, const std::vector<std::string>& filters = {},
                                    const std::function<void(const SuiteResult&)>& on_result = {});

/// One aligned line per suite: name, kind, cases, tolerance, measured, PASS/FAIL.
std::string format_report(const std::vector<SuiteResult>& results);
std::string format_line(const SuiteResult& r);

bool all_passed(const std::vector<SuiteResult>& results);

}  // namespace asp::verify
