// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "asp/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <unistd.h>

#include "asp/attention.hpp"
#include "asp/checkpoint.hpp"
#include "asp/error.hpp"
#include "asp/finite_diff.hpp"
#include "asp/kan.hpp"
#include "asp/losses.hpp"
#include "asp/pipeline.hpp"
#include "asp/splatter.hpp"
#include "asp/triplane.hpp"

namespace asp::verify {

namespace {

using LossFn = std::function<ad::Var(ad::Graph&, const ParamStore&, bool)>;

NdArray uniform(std::mt19937_64& rng, Shape shape, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  NdArray a(std::move(shape));
  for (double& v : a.data()) v = u(rng);
  return a;
}

ad::Var projection(ad::Var x, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return ad::sum(ad::mul(x, x.graph().constant(uniform(rng, x.shape(), -1.0, 1.0))));
}

// Worst relative error between backward() and central differences over the
// named entries of `store`.
double gradient_error(const LossFn& loss, const ParamStore& store, const std::vector<std::string>& names) {
  ad::Graph g;
  const auto grads = g.backward(loss(g, store, true));
  double worst = 0.0;
  for (const auto& name : names) {
    const NdArray fd = ad::finite_diff(
        [&](const NdArray& x) {
          ParamStore s = store;
          s.set(name, x);
          ad::Graph h;
          return loss(h, s, false).value().item();
        },
        store.at(name));
    const auto it = grads.find(name);
    const NdArray analytic = it == grads.end() ? NdArray(fd.shape(), 0.0) : it->second;
    worst = std::max(worst, ad::relative_error(analytic, fd));
  }
  return worst;
}

std::vector<std::string> names_with_prefix(const ParamStore& store, const std::string& prefix) {
  std::vector<std::string> out;
  for (const auto& name : store.names()) {
    if (name.starts_with(prefix)) out.push_back(name);
  }
  return out;
}

SuiteResult gradient_suite(const std::string& name, double tol, const Options& o,
                           const std::function<double(std::mt19937_64&, std::size_t)>& one_case) {
  SuiteResult r{name, Kind::Gradient, o.gradient_cases, tol, 0.0, false, 0.0};
  std::mt19937_64 rng(o.seed ^ std::hash<std::string>{}(name));
  for (std::size_t c = 0; c < o.gradient_cases; ++c) r.measured = std::max(r.measured, one_case(rng, c));
  r.passed = r.measured < tol;
  return r;
}

// Triplane: tables plus query points, points kept inside cells of the finest
// grid so bilinear kinks are not straddled.
double triplane_case(std::mt19937_64& rng, std::size_t) {
  triplane::TriplaneConfig c;
  c.levels = 2;
  c.base_resolution = 2;
  c.growth_factor = 2.0;
  c.log2_table_size = 4;
  c.features = 2;
  const triplane::TriplaneEncoder enc(c);
  ParamStore s;
  triplane::init_tables(s, c, rng);
  const int finest = c.resolution(c.levels - 1);
  const double width = 2.0 / finest;
  std::uniform_int_distribution<int> cell(0, finest - 1);
  std::uniform_real_distribution<double> frac(0.2, 0.8);
  NdArray pts(Shape{3, 3});
  for (double& v : pts.data()) v = -1.0 + width * (cell(rng) + frac(rng));
  s.set("points", pts);
  const std::uint64_t w = rng();
  auto loss = [&](ad::Graph& g, const ParamStore& st, bool t) {
    return projection(enc.encode(g, st, g.parameter(st, "points", t), t), w);
  };
  return gradient_error(loss, s, s.names());
}

double kan_case(std::mt19937_64& rng, std::size_t index, bool deform) {
  const ParamLayout layout{static_cast<int>(index % 2)};
  kan::KanConfig c;
  c.widths = {3, 4, layout.width()};
  const kan::KanNetwork net(deform ? "kan_deform" : "kan_static", c);
  ParamStore s;
  net.init(s, rng, false, 1.0);
  s.set("input", uniform(rng, {3, 3}, -0.95, 0.95));
  const std::uint64_t w = rng();
  auto loss = [&](ad::Graph& g, const ParamStore& st, bool t) {
    ad::Var x = g.parameter(st, "input", t);
    return projection(deform ? kan::map_deform(g, net, st, x, layout, t) : kan::map_static(g, net, st, x, layout, t),
                      w);
  };
  return gradient_error(loss, s, s.names());
}

ParamStore attention_store(std::mt19937_64& rng, std::size_t spatial, std::size_t audio,
                           const attention::AgentConfig& cfg) {
  ParamStore s;
  attention::init_parameters(s, spatial, audio, cfg, rng);
  for (const auto& name : s.names()) {
    if (name.ends_with("_b") || name.ends_with("_b1") || name.ends_with("_b2") || name.ends_with("null_token")) {
      s.set(name, uniform(rng, s.at(name).shape(), -0.5, 0.5));
    }
  }
  return s;
}

double attention_case(std::mt19937_64& rng, std::size_t index, const std::string& prefix) {
  const std::size_t audio = 3;
  attention::AgentConfig cfg;
  cfg.d_model = 4;
  cfg.ratio = 0.25;
  ParamStore s = attention_store(rng, 3, audio, cfg);
  s.set("spatial", uniform(rng, {8, 3}, -1.0, 1.0));
  attention::ConditionRow row;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t i = 0; i < audio; ++i) row.audio.push_back(u(rng));
  row.blink = 0.5 * (u(rng) + 1.0);
  for (double& p : row.pose) p = 0.3 * u(rng);
  row.timestep = static_cast<long>(index);
  const std::uint64_t w = rng();
  auto loss = [&](ad::Graph& g, const ParamStore& st, bool t) {
    return projection(attention::deform_features(g, st, g.parameter(st, "spatial", t), row, cfg, t), w);
  };
  auto names = names_with_prefix(s, prefix);
  if (prefix == "esaa/") names.push_back("spatial");
  return gradient_error(loss, s, names);
}

splat::Camera small_camera(int size, double focal) {
  return splat::Camera::look_at({0, 0, -3}, {0, 0, 0}, {0, -1, 0}, focal, size, size);
}

NdArray random_raw(std::mt19937_64& rng, std::size_t n, const ParamLayout& layout, double spread) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  NdArray raw(Shape{n, layout.width()});
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) raw(i, c) = spread * u(rng);
    for (int c = 0; c < 3; ++c) raw(i, 3 + c) = -2.6 + 0.5 * u(rng);
    for (int c = 0; c < 4; ++c) raw(i, 6 + c) = u(rng) + (c == 0 ? 1.5 : 0.0);
    for (std::size_t c = 0; c < layout.sh_width(); ++c) raw(i, 10 + c) = (c < 3 ? 0.8 : 0.3) * u(rng);
    raw(i, layout.opacity()) = 1.5 * u(rng);
  }
  return raw;
}

double renderer_case(std::mt19937_64& rng, std::size_t index) {
  static constexpr int kDegrees[] = {0, 1, 3};
  const ParamLayout layout{kDegrees[index % 3]};
  splat::Camera cam = small_camera(16, 18.0);
  ParamStore s;
  s.set("raw", random_raw(rng, 5, layout, 0.5));
  const std::uint64_t w = rng();
  auto loss = [&](ad::Graph& g, const ParamStore& st, bool t) {
    return projection(splat::render(g.parameter(st, "raw", t), layout, cam, {0.2, 0.3, 0.4}), w);
  };
  return gradient_error(loss, s, {"raw"});
}

// Two images whose pixels differ by at least 1e-3, so |a - b| has no kink
// within a finite-difference step.
ParamStore image_pair(std::mt19937_64& rng) {
  NdArray a = uniform(rng, {11, 12, 3}, 0.0, 1.0);
  NdArray b = uniform(rng, {11, 12, 3}, 0.0, 1.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::fabs(a[i] - b[i]) < 1e-3) b[i] = a[i] + (b[i] < a[i] ? -1e-3 : 1e-3);
  }
  ParamStore s;
  s.set("img", a);
  s.set("gt", b);
  return s;
}

NdArray random_mask(std::mt19937_64& rng) {
  NdArray m(Shape{11, 12});
  std::bernoulli_distribution on(0.3);
  for (double& v : m.data()) v = on(rng) ? 1.0 : 0.0;
  m[0] = 1.0;
  return m;
}

using ImageLoss = std::function<ad::Var(ad::Var, ad::Var, const NdArray&)>;

double loss_case(std::mt19937_64& rng, const ImageLoss& f) {
  const ParamStore s = image_pair(rng);
  const NdArray mask = random_mask(rng);
  auto loss = [&](ad::Graph& g, const ParamStore& st, bool t) {
    return f(g.parameter(st, "img", t), g.parameter(st, "gt", t), mask);
  };
  return gradient_error(loss, s, {"img", "gt"});
}

losses::LossWeights random_weights(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  return {u(rng), u(rng), u(rng)};
}

double max_abs_diff(const NdArray& a, const NdArray& b) {
  if (a.shape() != b.shape()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

SuiteResult render_equivalence(const Options& o, const std::string& name, double termination, double opacity_bias,
                               double tol) {
  SuiteResult r{name, Kind::Oracle, o.render_scenes, tol, 0.0, false, 0.0};
  std::mt19937_64 rng(o.seed ^ std::hash<std::string>{}(name));
  const splat::Camera cam = small_camera(64, 60.0);
  splat::RenderOptions opts;
  opts.termination = termination;
  std::uniform_int_distribution<std::size_t> count(1, 200);
  for (std::size_t k = 0; k < o.render_scenes; ++k) {
    const ParamLayout layout{static_cast<int>(k % 4)};
    NdArray raw = random_raw(rng, count(rng), layout, 0.8);
    for (std::size_t i = 0; i < raw.dim(0); ++i) raw(i, layout.opacity()) += opacity_bias;
    const auto cloud = gaussians::activate(raw, layout);
    const auto splats = splat::project_cloud(cloud, cam, opts);
    const splat::Rgb bg{0.3, 0.3, 0.3};
    r.measured = std::max(r.measured, max_abs_diff(splat::rasterize(splats, cam, bg, opts),
                                                   splat::rasterize_reference(splats, cam, bg, opts)));
  }
  r.passed = r.measured <= tol;
  return r;
}

SuiteResult ppe_suite(const Options&) {
  SuiteResult r{"invariant/ppe_periodicity", Kind::Invariant, 0, 0.0, 0.0, false, 0.0};
  for (long period : {1L, 7L, 25L, 60L}) {
    for (std::size_t d : {2UL, 7UL, 64UL}) {
      const auto zero = attention::ppe(0, d, period);
      for (std::size_t i = 0; i < d; ++i) r.measured = std::max(r.measured, std::fabs(zero[i] - (i % 2 ? 1.0 : 0.0)));
      for (long t = -50; t <= 400; ++t) {
        const auto a = attention::ppe(t, d, period);
        const auto b = attention::ppe(t + period, d, period);
        for (std::size_t i = 0; i < d; ++i) r.measured = std::max(r.measured, std::fabs(a[i] - b[i]));
        ++r.cases;
      }
    }
  }
  r.passed = r.measured == 0.0;
  return r;
}

pipeline::ModelConfig small_model() {
  pipeline::ModelConfig m;
  m.gaussians = 60;
  m.kan_hidden = 8;
  m.triplane.log2_table_size = 10;
  m.agents.d_model = 16;
  m.agents.ratio = 0.05;
  m.audio_width = 4;
  return m;
}

ParamStore small_store(std::mt19937_64& rng, const pipeline::ModelConfig& m) {
  const NdArray seeds = gaussians::stratified_seeds(rng, m.gaussians, {-0.6, -0.6, -0.6}, {0.6, 0.6, 0.6});
  return pipeline::Model(m).init(seeds, rng);
}

std::vector<splat::Camera> ring(std::size_t n, int size) {
  std::vector<splat::Camera> cams;
  for (std::size_t k = 0; k < n; ++k) {
    const double a = -0.4 + 0.8 * static_cast<double>(k) / static_cast<double>(std::max<std::size_t>(n - 1, 1));
    cams.push_back(splat::Camera::look_at({3 * std::sin(a), 0, -3 * std::cos(a)}, {0, 0, 0}, {0, -1, 0},
                                          size * 0.9, size, size));
  }
  return cams;
}

attention::ConditionTrack random_track(std::mt19937_64& rng, std::size_t frames, std::size_t audio) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  attention::ConditionTrack track;
  track.audio_width = audio;
  for (std::size_t t = 0; t < frames; ++t) {
    attention::ConditionRow row;
    for (std::size_t i = 0; i < audio; ++i) row.audio.push_back(u(rng));
    row.blink = u(rng);
    for (double& p : row.pose) p = u(rng) - 0.5;
    row.timestep = static_cast<long>(t);
    track.rows.push_back(std::move(row));
  }
  return track;
}

SuiteResult zero_deform_suite(const Options& o) {
  SuiteResult r{"invariant/zero_deform_identity", Kind::Invariant, 50, 0.0, 0.0, false, 0.0};
  std::mt19937_64 rng(o.seed);
  const auto m = small_model();
  ParamStore s = small_store(rng, m);
  for (const auto& name : names_with_prefix(s, "kan_deform/")) s.at(name).fill(0.0);
  const auto cams = ring(3, 32);
  const splat::Rgb bg{0.1, 0.2, 0.3};
  const auto track = random_track(rng, 50, m.audio_width);
  const auto frames = pipeline::render_sequence(s, track, cams, bg);
  const pipeline::Model model = pipeline::Model::from_store(s);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const NdArray ref = model.render_static(s, cams[t % cams.size()], bg);
    if (!(frames[t] == ref)) r.measured = std::max(r.measured, std::max(max_abs_diff(frames[t], ref), 1e-300));
  }
  r.passed = frames.size() == 50 && r.measured == 0.0;
  return r;
}

SuiteResult checkpoint_suite(const Options& o) {
  SuiteResult r{"invariant/checkpoint_roundtrip", Kind::Invariant, 3, 0.0, 0.0, false, 0.0};
  std::mt19937_64 rng(o.seed + 1);
  const auto m = small_model();
  const auto cams = ring(3, 32);
  const auto path = std::filesystem::temp_directory_path() /
                    ("asp_verify_" + std::to_string(::getpid()) + ".ckpt");
  bool same = true;
  for (std::size_t k = 0; k < r.cases; ++k) {
    const ParamStore s = small_store(rng, m);
    save_checkpoint(path, s);
    const ParamStore back = load_checkpoint(path);
    same = same && back == s;
    const auto track = random_track(rng, 4, m.audio_width);
    const auto a = pipeline::render_sequence(s, track, cams, {0, 0, 0});
    const auto b = pipeline::render_sequence(back, track, cams, {0, 0, 0});
    for (std::size_t t = 0; t < a.size(); ++t) r.measured = std::max(r.measured, max_abs_diff(a[t], b[t]));
  }
  std::filesystem::remove(path);
  if (!same) r.measured = std::max(r.measured, 1e-300);
  r.passed = r.measured == 0.0;
  return r;
}

// backward(l1 + dssim) against backward(l1) + backward(dssim).
SuiteResult linearity_suite(const Options& o) {
  SuiteResult r{"invariant/gradient_linearity", Kind::Invariant, 20, 1e-12, 0.0, false, 0.0};
  std::mt19937_64 rng(o.seed + 2);
  for (std::size_t k = 0; k < r.cases; ++k) {
    const ParamStore s = image_pair(rng);
    auto grad = [&](int which) {
      ad::Graph g;
      ad::Var a = g.parameter(s, "img", true);
      ad::Var b = g.constant(s.at("gt"));
      ad::Var l = which == 0 ? losses::l1_loss(a, b)
                  : which == 1 ? losses::dssim_loss(a, b)
                               : ad::add(losses::l1_loss(a, b), losses::dssim_loss(a, b));
      return g.backward(l).at("img");
    };
    NdArray sum = grad(0);
    const NdArray d = grad(1);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += d[i];
    r.measured = std::max(r.measured, ad::relative_error(grad(2), sum));
  }
  r.passed = r.measured <= r.tolerance;
  return r;
}

std::vector<Suite> build_suites() {
  std::vector<Suite> out;
  auto grad = [&](std::string name, double tol, std::function<double(std::mt19937_64&, std::size_t)> f) {
    out.push_back({name, Kind::Gradient,
                   [name, tol, f](const Options& o) { return gradient_suite(name, tol, o, f); }});
  };
  grad("gradient/triplane", 1e-4, triplane_case);
  grad("gradient/kan_static", 1e-4, [](std::mt19937_64& rng, std::size_t i) { return kan_case(rng, i, false); });
  grad("gradient/kan_deform", 1e-4, [](std::mt19937_64& rng, std::size_t i) { return kan_case(rng, i, true); });
  grad("gradient/esaa", 1e-4, [](std::mt19937_64& rng, std::size_t i) { return attention_case(rng, i, "esaa/"); });
  grad("gradient/fusion", 1e-4,
       [](std::mt19937_64& rng, std::size_t i) { return attention_case(rng, i, "fusion/"); });
  grad("gradient/renderer", 1e-3, renderer_case);
  grad("gradient/loss_l1", 1e-4, [](std::mt19937_64& rng, std::size_t) {
    return loss_case(rng, [](ad::Var a, ad::Var b, const NdArray&) { return losses::l1_loss(a, b); });
  });
  grad("gradient/loss_dssim", 1e-4, [](std::mt19937_64& rng, std::size_t) {
    return loss_case(rng, [](ad::Var a, ad::Var b, const NdArray&) { return losses::dssim_loss(a, b); });
  });
  grad("gradient/loss_lip", 1e-4, [](std::mt19937_64& rng, std::size_t) {
    return loss_case(rng, [](ad::Var a, ad::Var b, const NdArray& m) { return losses::lip_loss(a, b, m); });
  });
  grad("gradient/loss_lpips", 1e-4, [](std::mt19937_64& rng, std::size_t) {
    return loss_case(rng, [](ad::Var a, ad::Var b, const NdArray&) { return losses::lpips_loss(a, b); });
  });
  grad("gradient/loss_stage1", 1e-4, [](std::mt19937_64& rng, std::size_t) {
    const auto w = random_weights(rng);
    return loss_case(rng, [w](ad::Var a, ad::Var b, const NdArray&) { return losses::stage1_loss(a, b, w); });
  });
  grad("gradient/loss_stage2", 1e-4, [](std::mt19937_64& rng, std::size_t) {
    const auto w = random_weights(rng);
    return loss_case(rng, [w](ad::Var a, ad::Var b, const NdArray& m) { return losses::stage2_loss(a, b, m, w); });
  });
  out.push_back({"oracle/render_tiled_vs_reference", Kind::Oracle, [](const Options& o) {
                   return render_equivalence(o, "oracle/render_tiled_vs_reference", 0.0, 0.0, 1e-5);
                 }});
  out.push_back({"oracle/render_early_termination", Kind::Oracle, [](const Options& o) {
                   return render_equivalence(o, "oracle/render_early_termination", splat::RenderOptions{}.termination,
                                             4.0, 1e-3);
                 }});
  out.push_back({"invariant/ppe_periodicity", Kind::Invariant, ppe_suite});
  out.push_back({"invariant/zero_deform_identity", Kind::Invariant, zero_deform_suite});
  out.push_back({"invariant/checkpoint_roundtrip", Kind::Invariant, checkpoint_suite});
  out.push_back({"invariant/gradient_linearity", Kind::Invariant, linearity_suite});
  return out;
}

}  // namespace

const char* kind_name(Kind kind) {
  switch (kind) {
    case Kind::Gradient:
      return "gradient";
    case Kind::Oracle:
      return "oracle";
    case Kind::Invariant:
      return "invariant";
  }
  return "?";
}

const std::vector<Suite>& suites() {
  static const std::vector<Suite> all = build_suites();
  return all;
}

std::vector<SuiteResult> run_suites(const Options& options, const std::vector<std::string>& filters,
                                    const std::function<void(const SuiteResult&)>& on_result) {
  if (options.gradient_cases == 0 || options.render_scenes == 0) {
    throw ValidationError("verify: case counts must be positive");
  }
  for (const auto& f : filters) {
    const bool hit = std::any_of(suites().begin(), suites().end(), [&](const Suite& s) { return s.name.starts_with(f); });
    if (!hit) throw UsageError("verify: no suite matches '" + f + "'");
  }
  std::vector<SuiteResult> out;
  for (const auto& suite : suites()) {
    if (!filters.empty() &&
        std::none_of(filters.begin(), filters.end(), [&](const std::string& f) { return suite.name.starts_with(f); })) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    SuiteResult r;
    try {
      r = suite.run(options);
    } catch (const NumericError&) {
      r = {suite.name, suite.kind, 0, 0.0, std::numeric_limits<double>::infinity(), false, 0.0};
    }
    if (std::isnan(r.measured)) r.passed = false;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (on_result) on_result(r);
    out.push_back(r);
  }
  return out;
}

std::string format_line(const SuiteResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-34s %-9s cases=%-5zu tol=%-8.1e err=%-10.3e %5.1fs %s", r.name.c_str(),
                kind_name(r.kind), r.cases, r.tolerance, r.measured, r.seconds, r.passed ? "PASS" : "FAIL");
  return buf;
}

std::string format_report(const std::vector<SuiteResult>& results) {
  std::string out;
  for (const auto& r : results) out += format_line(r) + "\n";
  return out;
}

bool all_passed(const std::vector<SuiteResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const SuiteResult& r) { return r.passed; });
}

}  // namespace asp::verify
