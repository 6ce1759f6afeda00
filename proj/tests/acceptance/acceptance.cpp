// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite. Prints exactly one "PASS <id>: ..." or "FAIL <id>: ..."
// line per criterion and exits nonzero when any criterion fails. Stages run
// on the default synthetic scene and default configuration.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <unistd.h>

#include "asp/attention.hpp"
#include "asp/bench.hpp"
#include "asp/checkpoint.hpp"
#include "asp/losses.hpp"
#include "asp/parallel.hpp"
#include "asp/pipeline.hpp"
#include "asp/scene.hpp"
#include "asp/verify.hpp"

namespace {

using Clock = std::chrono::steady_clock;
namespace pl = asp::pipeline;

int failures = 0;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void report(const char* id, bool pass, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string format(const char* f, auto... args) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Mean absolute error of the static render against the rest views, averaged
// over the training ring.
double ring_l1(const asp::ParamStore& store, const asp::scene::SyntheticScene& sc) {
  const auto model = pl::Model::from_store(store);
  double total = 0.0;
  for (std::size_t k = 0; k < sc.cameras.size(); ++k) {
    const auto img = model.render_static(store, sc.cameras[k], sc.background);
    double s = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) s += std::fabs(img[i] - sc.neutral[k][i]);
    total += s / static_cast<double>(img.size());
  }
  return total / static_cast<double>(sc.cameras.size());
}

void gradient_integrity() {
  const auto t0 = Clock::now();
  asp::verify::Options o;
  const auto results = asp::verify::run_suites(o, {"gradient/"});
  const double seconds = since(t0);
  double worst_ratio = 0.0;
  std::string worst;
  std::size_t min_cases = results.empty() ? 0 : results.front().cases;
  for (const auto& r : results) {
    min_cases = std::min(min_cases, r.cases);
    const double ratio = r.measured / r.tolerance;
    if (ratio >= worst_ratio) {
      worst_ratio = ratio;
      worst = format("%s err %.3e tol %.0e", r.name.c_str(), r.measured, r.tolerance);
    }
  }
  report("gradient_integrity",
         asp::verify::all_passed(results) && results.size() >= 12 && min_cases >= 100 && seconds < 300.0,
         format("%zu modules x >= %zu cases, worst %s, %.1fs (< 300s)", results.size(), min_cases, worst.c_str(),
                seconds));
}

void renderer_equivalence() {
  asp::verify::Options o;
  const auto results = asp::verify::run_suites(o, {"oracle/render_"});
  std::string detail;
  for (const auto& r : results) {
    detail += format("%s%s %zu scenes err %.3e tol %.0e", detail.empty() ? "" : "; ", r.name.c_str() + 7, r.cases,
                     r.measured, r.tolerance);
  }
  report("renderer_equivalence", results.size() == 2 && asp::verify::all_passed(results) && o.render_scenes >= 50,
         detail + " (<= 200 splats, 64x64)");
}

void esaa_complexity() {
  const auto t0 = Clock::now();
  asp::bench::AttentionBenchOptions o;
  o.lengths = {256, 512, 1024, 2048, 4096};
  o.ratios = {0.005};
  o.d_model = 64;
  asp::attention::AgentConfig cfg;
  cfg.ratio = 0.005;
  o.fixed_agents = cfg.agent_count(4096);
  const auto rows = asp::bench::bench_attention(o);
  std::vector<double> n, agent, full;
  for (const auto& r : rows) {
    n.push_back(static_cast<double>(r.length));
    agent.push_back(static_cast<double>(r.agent_macs));
    full.push_back(static_cast<double>(r.full_macs));
  }
  const double ea = asp::bench::fit_exponent(n, agent);
  const double ef = asp::bench::fit_exponent(n, full);
  const auto& last = rows.back();
  const double speedup = last.full_seconds / last.agent_seconds;
  const double seconds = since(t0);
  report("esaa_complexity", ea <= 1.1 && ef >= 1.9 && speedup >= 5.0 && seconds < 120.0,
         format("n=%zu agent exponent %.3f (<= 1.1), full exponent %.3f (>= 1.9), speedup %.1fx at N=4096 (>= 5), "
                "%.1fs (< 120s)",
                o.fixed_agents, ea, ef, speedup, seconds));
}

void zero_deform_identity(const asp::ParamStore& stage1, const asp::scene::SyntheticScene& sc) {
  asp::ParamStore store = stage1;
  std::size_t zeroed = 0;
  for (const auto& name : store.names()) {
    if (name.starts_with("kan_deform/")) {
      store.at(name).fill(0.0);
      ++zeroed;
    }
  }
  asp::attention::ConditionTrack track;
  track.audio_width = sc.track.audio_width;
  track.rows.assign(sc.track.rows.begin(), sc.track.rows.begin() + 50);
  const auto frames = pl::render_sequence(store, track, sc.cameras, sc.background);
  const auto model = pl::Model::from_store(store);
  std::size_t identical = 0;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    identical += frames[t] == model.render_static(store, sc.cameras[t % sc.cameras.size()], sc.background);
  }
  report("zero_deform_identity", zeroed > 0 && frames.size() == 50 && identical == 50,
         format("%zu of %zu frames bit-identical to the static render", identical, frames.size()));
}

asp::ParamStore stage1_convergence(const asp::scene::SyntheticScene& sc, const pl::TrainConfig& cfg) {
  const auto t0 = Clock::now();
  const double initial = ring_l1(pl::initialize(sc, cfg), sc);
  const auto result = pl::train_static(sc, cfg);
  const double seconds = since(t0);
  const double final_l1 = ring_l1(result.params, sc);
  const auto model = pl::Model::from_store(result.params);
  const double heldout =
      pl::psnr(model.render_static(result.params, sc.heldout_camera, sc.background), sc.heldout_neutral);
  const double ratio = final_l1 / initial;
  report("stage1_convergence",
         cfg.static_iterations <= 2000 && ratio <= 0.10 && heldout >= 28.0 && seconds < 1800.0,
         format("L1 %.5f -> %.5f (%.1f%% of initial, <= 10%%) in %zu iterations, held-out PSNR %.2f dB (>= 28), "
                "%.0fs (< 1800s)",
                initial, final_l1, 100.0 * ratio, cfg.static_iterations, heldout, seconds));
  return result.params;
}

void stage2_coupling(const asp::scene::SyntheticScene& sc, const pl::TrainConfig& cfg, const asp::ParamStore& s1) {
  const auto t0 = Clock::now();
  const auto result = pl::train_deform(sc, cfg, s1);
  const double seconds = since(t0);
  const auto r = pl::evaluate_model(result.params, sc, sc.train_frames(), sc.frames.size());
  report("stage2_audio_coupling", r.aperture_pearson >= 0.8 && seconds < 2700.0,
         format("test split (%zu frames) aperture-audio Pearson %.4f (>= 0.8), PSNR %.2f dB, %zu iterations, "
                "%.0fs (< 2700s)",
                r.frames.size(), r.aperture_pearson, r.mean_psnr, cfg.deform_iterations, seconds));
}

void table_iv_trend(const asp::scene::SyntheticScene& sc, pl::TrainConfig cfg, const asp::ParamStore& s1) {
  const auto t0 = Clock::now();
  cfg.deform_iterations = 1000;
  asp::bench::RatioSweepOptions o;
  const auto rows = asp::bench::ratio_sweep(sc, s1, cfg, o);
  bool decreasing = rows.size() == 4;
  std::string detail;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && !(rows[i].esaa_fps < rows[i - 1].esaa_fps)) decreasing = false;
    detail += format("%s%.2f%% n=%zu %.1f fps (psnr %.2f, r %.3f)", i ? "; " : "", 100.0 * rows[i].ratio,
                     rows[i].probe_agents, rows[i].esaa_fps, rows[i].test_psnr, rows[i].test_pearson);
  }
  report("table_iv_trend", decreasing,
         "throughput at " + std::to_string(o.probe_length) + " tokens strictly decreasing: " + detail +
             format("; quality not asserted, %.0fs", since(t0)));
}

void determinism_roundtrip(const asp::scene::SyntheticScene& sc, pl::TrainConfig cfg) {
  cfg.static_iterations = 150;
  cfg.deform_iterations = 60;
  const auto a1 = pl::train_static(sc, cfg).params;
  const auto b1 = pl::train_static(sc, cfg).params;
  const auto a2 = pl::train_deform(sc, cfg, a1).params;
  const auto b2 = pl::train_deform(sc, cfg, b1).params;
  const auto path = std::filesystem::temp_directory_path() / ("asp_acceptance_" + std::to_string(::getpid()) + ".ckpt");
  asp::save_checkpoint(path, a2);
  const auto back = asp::load_checkpoint(path);
  std::filesystem::remove(path);
  asp::attention::ConditionTrack track;
  track.audio_width = sc.track.audio_width;
  track.rows.assign(sc.track.rows.begin(), sc.track.rows.begin() + 20);
  const bool renders = pl::render_sequence(back, track, sc.cameras, sc.background) ==
                       pl::render_sequence(a2, track, sc.cameras, sc.background);
  report("determinism_roundtrip", a1 == b1 && a2 == b2 && back == a2 && renders,
         format("stage-1 rerun %s, stage-2 rerun %s, checkpoint %s, renders %s (%zu threads)",
                a1 == b1 ? "identical" : "differs", a2 == b2 ? "identical" : "differs",
                back == a2 ? "identical" : "differs", renders ? "identical" : "differ", asp::num_threads()));
}

void ppe_exactness() {
  std::size_t checked = 0;
  double worst = 0.0;
  for (long period : {1L, 25L, 40L, 97L}) {
    for (std::size_t d : {2UL, 16UL, 64UL, 65UL}) {
      const auto zero = asp::attention::ppe(0, d, period);
      for (std::size_t i = 0; i < d; ++i) worst = std::max(worst, std::fabs(zero[i] - (i % 2 ? 1.0 : 0.0)));
      for (long t = -2000; t <= 2000; ++t) {
        const auto a = asp::attention::ppe(t, d, period);
        const auto b = asp::attention::ppe(t + period, d, period);
        if (a != b) worst = std::max(worst, 1.0);
        ++checked;
      }
    }
  }
  report("ppe_exactness", worst == 0.0,
         format("%zu (t, period, width) triples periodic bit-exactly, ppe(0) = [0, 1, 0, 1, ...]", checked));
}

}  // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::string(argv[1]) == "--no-training";
  const auto t0 = Clock::now();
  gradient_integrity();
  renderer_equivalence();
  esaa_complexity();
  ppe_exactness();
  if (!quick) {
    const pl::TrainConfig cfg;
    const auto sc = asp::scene::generate_scene(asp::scene::SceneSpec{});
    const auto s1 = stage1_convergence(sc, cfg);
    zero_deform_identity(s1, sc);
    stage2_coupling(sc, cfg, s1);
    table_iv_trend(sc, cfg, s1);
    determinism_roundtrip(sc, cfg);
  }
  std::printf("%d failed, %.0fs total\n", failures, since(t0));
  return failures == 0 ? 0 : 1;
}
