// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
//
// audiosplat command-line entry point: gen, train, render, eval, verify, bench.
//
// Exit codes: 0 ok, 1 usage, 2 validation, 3 numeric. Failures print one
// line "error[<kind>]: <message>" to stderr.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "asp/bench.hpp"
#include "asp/binary_io.hpp"
#include "asp/checkpoint.hpp"
#include "asp/config.hpp"
#include "asp/error.hpp"
#include "asp/graph.hpp"
#include "asp/image_io.hpp"
#include "asp/parallel.hpp"
#include "asp/pipeline.hpp"
#include "asp/scene_io.hpp"
#include "asp/verify.hpp"
#include "asp/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  bool force = false;
  std::size_t threads = 0;
  std::string out;
};

struct Manifest {
  std::string command;
  const Common* common = nullptr;
  json inputs = json::object();
  json config = json::object();
  std::vector<std::string> artifacts;
  json summary = json::object();
};

void add_common(CLI::App* app, Common& c, bool needs_out) {
  app->add_option("--config", c.config, "key = value configuration file");
  app->add_option("--seed", c.seed, "seed override (default 42)");
  app->add_flag("--force", c.force, "replace existing outputs");
  app->add_option("--threads", c.threads, "worker threads (default: hardware concurrency)");
  auto* out = app->add_option("--out", c.out, "output directory");
  if (needs_out) out->required();
}

asp::pipeline::RunConfig resolve(const Common& c, CLI::App* app) {
  asp::pipeline::RunConfig rc = c.config.empty() ? asp::pipeline::RunConfig{} : asp::pipeline::load_config(c.config);
  if (app->count("--seed") > 0) {
    rc.scene.seed = c.seed;
    rc.train.seed = c.seed;
  }
  if (c.threads > 0) asp::set_num_threads(c.threads);
  return rc;
}

json config_json(const asp::pipeline::RunConfig& rc) {
  json j = json::object();
  for (const auto& [k, v] : asp::pipeline::resolved_config(rc)) {
    const json parsed = json::parse(v, nullptr, false);
    j[k] = parsed.is_number() || parsed.is_boolean() ? parsed : json(v);
  }
  return j;
}

fs::path canonical_or_absolute(const fs::path& p) {
  std::error_code ec;
  const fs::path c = fs::weakly_canonical(p, ec);
  return ec ? fs::absolute(p) : c;
}

// Output directory checks: --out and the inputs never nest, and existing
// runs are replaced only with --force.
void prepare_out(const Common& c, const std::vector<fs::path>& inputs) {
  const fs::path out = canonical_or_absolute(c.out);
  const std::string prefix = out.string() + "/";
  for (const auto& in : inputs) {
    const fs::path p = canonical_or_absolute(in);
    if (p == out || p.string().starts_with(prefix)) {
      throw asp::ValidationError("--out " + c.out + " contains input " + in.string());
    }
    if (out.string().starts_with(p.string() + "/")) {
      throw asp::ValidationError("--out " + c.out + " is inside input " + in.string());
    }
  }
  if (fs::exists(out / "manifest.json") && !c.force) {
    throw asp::ValidationError(c.out + " already holds a run; pass --force to replace it");
  }
  fs::create_directories(out);
}

void write_manifest(const Manifest& m, const fs::path& dir) {
  json j;
  j["command"] = m.command;
  j["version"] = asp::version();
  j["seed"] = m.config.contains("seed") ? m.config["seed"] : json(m.common->seed);
  j["threads"] = asp::num_threads();
  j["config"] = m.config;
  j["inputs"] = m.inputs;
  j["artifacts"] = m.artifacts;
  j["summary"] = m.summary;
  asp::io::write_text_atomic(dir / "manifest.json", j.dump(2) + "\n");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string loss_csv(const std::vector<asp::pipeline::LossRecord>& log) {
  std::string s = "iteration,view,loss,l1,lr\n";
  for (const auto& r : log) {
    s += std::to_string(r.iteration) + "," + std::to_string(r.view) + "," + fmt(r.loss) + "," + fmt(r.l1) + "," +
         fmt(r.lr) + "\n";
  }
  return s;
}

asp::pipeline::ProgressFn progress(const char* stage, std::size_t every) {
  const auto start = std::chrono::steady_clock::now();
  return [stage, every, start](const asp::pipeline::LossRecord& r) {
    if ((r.iteration + 1) % every != 0) return;
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::fprintf(stderr, "%s it %zu loss %.5f l1 %.5f %.1fs\n", stage, r.iteration + 1, r.loss, r.l1, s);
  };
}

std::vector<asp::splat::Camera> ring_cameras(const fs::path& path) {
  std::vector<asp::splat::Camera> cams;
  for (auto& [name, cam] : asp::scene::read_cameras(path)) {
    if (name != "heldout") cams.push_back(cam);
  }
  if (cams.empty()) throw asp::ValidationError(path.string() + ": no ring cameras");
  return cams;
}

asp::splat::Rgb parse_rgb(const std::string& text) {
  asp::splat::Rgb c{};
  std::istringstream in(text);
  std::string part;
  for (int i = 0; i < 3; ++i) {
    if (!std::getline(in, part, ',')) throw asp::UsageError("--background expects r,g,b");
    try {
      c[i] = std::stod(part);
    } catch (const std::exception&) {
      throw asp::UsageError("--background expects r,g,b, got '" + text + "'");
    }
  }
  return c;
}

// ---- gen ----

int cmd_gen(const Common& c, CLI::App* app) {
  auto rc = resolve(c, app);
  const fs::path out = c.out;
  if (fs::exists(out) && !c.force) {
    throw asp::ValidationError(out.string() + " exists; pass --force to replace it");
  }
  if (!c.config.empty() && canonical_or_absolute(c.config).string().starts_with(canonical_or_absolute(out).string() + "/")) {
    throw asp::ValidationError("--config lives inside --out " + c.out);
  }
  const auto scene = asp::scene::generate_scene(rc.scene);
  asp::scene::save_scene(scene, out, c.force);
  Manifest m{"gen", &c};
  if (!c.config.empty()) m.inputs["config"] = c.config;
  m.config = config_json(rc);
  m.artifacts = {"scene.txt", "cameras.txt", "track.f32", "keypoints.txt", "frames/", "masks/", "neutral/"};
  m.summary["frames"] = scene.frames.size();
  m.summary["train_frames"] = scene.train_frames();
  write_manifest(m, out);
  std::printf("scene %s: %zu frames, %zu cameras, %dx%d\n", out.c_str(), scene.frames.size(), scene.cameras.size(),
              rc.scene.image_size, rc.scene.image_size);
  return 0;
}

// ---- train ----

struct TrainArgs {
  int stage = 0;
  std::string scene;
  std::string init;
};

int cmd_train(const Common& c, const TrainArgs& a, CLI::App* app) {
  auto rc = resolve(c, app);
  if (a.stage == 2 && a.init.empty()) {
    throw asp::UsageError("stage 2 needs a stage-1 checkpoint (--init)");
  }
  if (a.stage == 2 && !fs::exists(a.init)) throw asp::UsageError("stage-1 checkpoint not found: " + a.init);
  std::vector<fs::path> inputs{a.scene};
  if (!a.init.empty()) inputs.push_back(a.init);
  const auto scene = asp::scene::load_scene(a.scene);
  prepare_out(c, inputs);
  const fs::path out = c.out;
  rc.train.model.audio_width = scene.spec.audio_width;
  rc.train.validate();

  Manifest m{"train", &c};
  m.inputs["scene"] = a.scene;
  if (!c.config.empty()) m.inputs["config"] = c.config;
  m.config = config_json(rc);
  m.config["stage"] = a.stage;

  asp::pipeline::TrainResult r;
  std::string ckpt;
  if (a.stage == 1) {
    r = asp::pipeline::train_static(scene, rc.train, progress("stage1", 100));
    ckpt = "stage1.ckpt";
    const auto model = asp::pipeline::Model::from_store(r.params);
    const double heldout =
        asp::pipeline::psnr(model.render_static(r.params, scene.heldout_camera, scene.background), scene.heldout_neutral);
    m.summary["heldout_psnr"] = heldout;
    std::printf("stage 1: heldout psnr %.3f\n", heldout);
  } else {
    m.inputs["init"] = a.init;
    const auto s1 = asp::load_checkpoint(a.init);
    r = asp::pipeline::train_deform(scene, rc.train, s1, progress("stage2", 100));
    ckpt = "stage2.ckpt";
  }
  asp::save_checkpoint(out / ckpt, r.params);
  asp::io::write_text_atomic(out / "loss.csv", loss_csv(r.log));
  m.artifacts = {ckpt, "loss.csv"};
  if (!r.log.empty()) {
    m.summary["iterations"] = r.log.size();
    m.summary["first_loss"] = r.log.front().loss;
    m.summary["final_loss"] = r.log.back().loss;
    std::printf("stage %d: %zu iterations, loss %.6f -> %.6f\n", a.stage, r.log.size(), r.log.front().loss,
                r.log.back().loss);
  }
  write_manifest(m, out);
  return 0;
}

// ---- render ----

struct RenderArgs {
  std::string checkpoint;
  std::string track;
  std::string cameras;
  std::string scene;
  std::string background = "0,0,0";
};

int cmd_render(const Common& c, const RenderArgs& a, CLI::App* app) {
  resolve(c, app);
  std::string track_path = a.track, cams_path = a.cameras;
  asp::splat::Rgb bg = parse_rgb(a.background);
  std::vector<fs::path> inputs{a.checkpoint};
  if (!a.scene.empty()) {
    if (track_path.empty()) track_path = (fs::path(a.scene) / "track.f32").string();
    if (cams_path.empty()) cams_path = (fs::path(a.scene) / "cameras.txt").string();
    if (app->count("--background") == 0) bg = asp::scene::load_scene(a.scene).background;
    inputs.push_back(a.scene);
  }
  if (track_path.empty() || cams_path.empty()) throw asp::UsageError("render needs --track and --cameras, or --scene");
  for (const auto& p : {fs::path(a.checkpoint), fs::path(track_path), fs::path(cams_path)}) {
    if (!fs::exists(p)) throw asp::UsageError("input not found: " + p.string());
  }
  inputs.push_back(track_path);
  inputs.push_back(cams_path);
  const auto store = asp::load_checkpoint(a.checkpoint);
  const auto track = asp::scene::read_track(track_path);
  const auto cams = ring_cameras(cams_path);
  prepare_out(c, inputs);
  const fs::path out = c.out;
  const auto frames = asp::pipeline::render_sequence(store, track, cams, bg);
  fs::create_directories(out / "frames");
  Manifest m{"render", &c};
  m.inputs = {{"checkpoint", a.checkpoint}, {"track", track_path}, {"cameras", cams_path}};
  m.config["background"] = a.background;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const std::string base = "frames/" + asp::scene::frame_name(t);
    asp::io::write_float_image(out / (base + ".f32"), frames[t]);
    asp::io::write_png(out / (base + ".png"), frames[t]);
    m.artifacts.push_back(base + ".png");
    m.artifacts.push_back(base + ".f32");
  }
  m.summary["frames"] = frames.size();
  write_manifest(m, out);
  std::printf("rendered %zu frames to %s\n", frames.size(), (out / "frames").c_str());
  return 0;
}

// ---- eval ----

struct EvalArgs {
  std::string checkpoint;
  std::string scene;
  std::string split = "test";
};

int cmd_eval(const Common& c, const EvalArgs& a, CLI::App* app) {
  resolve(c, app);
  if (!fs::exists(a.checkpoint)) throw asp::UsageError("checkpoint not found: " + a.checkpoint);
  const auto scene = asp::scene::load_scene(a.scene);
  const auto store = asp::load_checkpoint(a.checkpoint);
  prepare_out(c, {a.checkpoint, a.scene});
  const fs::path out = c.out;
  std::size_t begin = 0, end = scene.frames.size();
  if (a.split == "test") {
    begin = scene.train_frames();
  } else if (a.split == "train") {
    end = scene.train_frames();
  } else if (a.split != "all") {
    throw asp::UsageError("--split must be train, test or all");
  }
  const auto report = asp::pipeline::evaluate_model(store, scene, begin, end);
  const auto model = asp::pipeline::Model::from_store(store);
  const double heldout =
      asp::pipeline::psnr(model.render_static(store, scene.heldout_camera, scene.background), scene.heldout_neutral);

  std::string csv = "frame,psnr,ssim,keypoint_distance,aperture_proxy,audio0\n";
  for (const auto& f : report.frames) {
    csv += std::to_string(f.frame) + "," + fmt(f.psnr) + "," + fmt(f.ssim) + "," + fmt(f.keypoint_distance) + "," +
           fmt(f.aperture_proxy) + "," + fmt(f.audio0) + "\n";
  }
  asp::io::write_text_atomic(out / "metrics.csv", csv);
  Manifest m{"eval", &c};
  m.inputs = {{"checkpoint", a.checkpoint}, {"scene", a.scene}};
  m.config["split"] = a.split;
  m.artifacts = {"metrics.csv"};
  m.summary = {{"frames", report.frames.size()},
               {"mean_psnr", report.mean_psnr},
               {"mean_ssim", report.mean_ssim},
               {"mean_keypoint_distance", report.mean_keypoint_distance},
               {"aperture_pearson", report.aperture_pearson},
               {"heldout_psnr", heldout}};
  write_manifest(m, out);
  std::printf("%s split: %zu frames psnr %.3f ssim %.4f kp %.3f pearson %.4f heldout-psnr %.3f\n", a.split.c_str(),
              report.frames.size(), report.mean_psnr, report.mean_ssim, report.mean_keypoint_distance,
              report.aperture_pearson, heldout);
  return 0;
}

// ---- verify ----

struct VerifyArgs {
  std::vector<std::string> suites;
  std::size_t cases = 100;
  std::size_t scenes = 50;
  std::string fault_op;
  double fault_factor = 1.5;
  bool list = false;
};

int cmd_verify(const Common& c, const VerifyArgs& a, CLI::App* app) {
  auto rc = resolve(c, app);
  if (a.list) {
    for (const auto& s : asp::verify::suites()) std::printf("%-34s %s\n", s.name.c_str(), asp::verify::kind_name(s.kind));
    return 0;
  }
  prepare_out(c, {});
  asp::verify::Options o;
  o.gradient_cases = a.cases;
  o.render_scenes = a.scenes;
  o.seed = rc.train.seed;
  if (!a.fault_op.empty()) {
    asp::ad::set_gradient_fault(a.fault_op, a.fault_factor);
    std::printf("fault injected: op %s x%g\n", a.fault_op.c_str(), a.fault_factor);
  }
  const auto results = asp::verify::run_suites(o, a.suites, [](const asp::verify::SuiteResult& r) {
    std::printf("%s\n", asp::verify::format_line(r).c_str());
    std::fflush(stdout);
  });
  asp::ad::clear_gradient_fault();
  const bool ok = asp::verify::all_passed(results);
  const fs::path out = c.out;
  asp::io::write_text_atomic(out / "verify.txt", asp::verify::format_report(results));
  Manifest m{"verify", &c};
  m.config = {{"seed", o.seed}, {"cases", a.cases}, {"scenes", a.scenes}};
  if (!a.fault_op.empty()) m.config["fault"] = a.fault_op + "*" + fmt(a.fault_factor);
  m.artifacts = {"verify.txt"};
  json suites = json::array();
  for (const auto& r : results) {
    suites.push_back({{"name", r.name},
                      {"kind", asp::verify::kind_name(r.kind)},
                      {"cases", r.cases},
                      {"tolerance", r.tolerance},
                      {"measured", std::isfinite(r.measured) ? json(r.measured) : json("inf")},
                      {"passed", r.passed}});
  }
  m.summary = {{"passed", ok}, {"suites", suites}};
  write_manifest(m, out);
  const auto failed = std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.passed; });
  std::printf("%zu suites, %td failed\n", results.size(), failed);
  if (!ok) {
    throw asp::ValidationError("verify: " + std::to_string(failed) + " of " + std::to_string(results.size()) +
                               " suites failed");
  }
  return 0;
}

// ---- bench ----

struct BenchArgs {
  std::vector<std::size_t> lengths;
  std::vector<double> ratios;
  std::size_t d_model = 64;
  std::size_t repeats = 3;
  std::size_t fixed_agents = 0;
  bool no_full = false;
  std::string scene;
  std::string init;
  std::size_t probe = 4096;
  bool no_train = false;
};

int cmd_bench(const Common& c, const BenchArgs& a, CLI::App* app) {
  auto rc = resolve(c, app);
  std::vector<fs::path> inputs;
  if (!a.scene.empty()) inputs.push_back(a.scene);
  if (!a.init.empty()) inputs.push_back(a.init);
  if (a.scene.empty() != a.init.empty()) throw asp::UsageError("the ratio sweep needs both --scene and --init");
  asp::bench::AttentionBenchOptions o;
  if (!a.lengths.empty()) o.lengths = a.lengths;
  if (!a.ratios.empty()) {
    o.ratios.clear();
    for (double r : a.ratios) o.ratios.push_back(r / 100.0);
  }
  o.d_model = a.d_model;
  o.repeats = a.repeats;
  o.fixed_agents = a.fixed_agents;
  o.full = !a.no_full;
  o.seed = rc.train.seed;
  o.validate();
  prepare_out(c, inputs);
  const fs::path out = c.out;
  Manifest m{"bench", &c};
  m.config = {{"seed", o.seed}, {"d_model", o.d_model}, {"repeats", o.repeats}, {"fixed_agents", o.fixed_agents},
              {"full", o.full}};
  json lengths = json::array(), ratios = json::array();
  for (auto n : o.lengths) lengths.push_back(n);
  for (auto r : o.ratios) ratios.push_back(r);
  m.config["lengths"] = lengths;
  m.config["ratios"] = ratios;

  const auto rows = asp::bench::bench_attention(o);
  asp::io::write_text_atomic(out / "attention.csv", asp::bench::attention_csv(rows));
  m.artifacts.push_back("attention.csv");
  std::printf("%s", asp::bench::attention_csv(rows).c_str());

  if (!a.scene.empty()) {
    if (!fs::exists(a.init)) throw asp::UsageError("stage-1 checkpoint not found: " + a.init);
    const auto scene = asp::scene::load_scene(a.scene);
    const auto s1 = asp::load_checkpoint(a.init);
    rc.train.model.audio_width = scene.spec.audio_width;
    asp::bench::RatioSweepOptions so;
    so.ratios = o.ratios;
    so.probe_length = a.probe;
    so.repeats = a.repeats;
    so.train = !a.no_train;
    const auto sweep = asp::bench::ratio_sweep(scene, s1, rc.train, so);
    asp::io::write_text_atomic(out / "ratios.csv", asp::bench::ratio_csv(sweep));
    m.artifacts.push_back("ratios.csv");
    m.inputs = {{"scene", a.scene}, {"init", a.init}};
    m.config["train"] = config_json(rc);
    m.config["probe_length"] = a.probe;
    std::printf("%s", asp::bench::ratio_csv(sweep).c_str());
  }
  write_manifest(m, out);
  return 0;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

int fail(const char* kind, const std::string& msg, int code) {
  std::fprintf(stderr, "error[%s]: %s\n", kind, one_line(msg).c_str());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"audio-driven Gaussian splatting on synthetic talking-head scenes"};
  app.set_version_flag("--version", std::string(asp::version()));
  app.require_subcommand(1);

  Common gen_c, train_c, render_c, eval_c, verify_c, bench_c;
  verify_c.out = "runs/verify";
  bench_c.out = "runs/bench";

  auto* gen = app.add_subcommand("gen", "generate a synthetic scene directory");
  add_common(gen, gen_c, true);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "stage 1 (static) or stage 2 (deformation) training");
  add_common(train, train_c, true);
  train->add_option("--stage", ta.stage, "1 or 2")->required()->check(CLI::IsMember({1, 2}));
  train->add_option("--scene", ta.scene, "scene directory")->required();
  train->add_option("--init", ta.init, "stage-1 checkpoint (stage 2)");

  RenderArgs ra;
  auto* render = app.add_subcommand("render", "render a condition track to PNG and float frames");
  add_common(render, render_c, true);
  render->add_option("--checkpoint", ra.checkpoint, "checkpoint")->required();
  render->add_option("--track", ra.track, "track.f32");
  render->add_option("--cameras", ra.cameras, "cameras.txt (heldout is skipped)");
  render->add_option("--scene", ra.scene, "take track, cameras and background from a scene");
  render->add_option("--background", ra.background, "r,g,b");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "image, keypoint and sync metrics on a scene split");
  add_common(eval, eval_c, true);
  eval->add_option("--checkpoint", ea.checkpoint, "checkpoint")->required();
  eval->add_option("--scene", ea.scene, "scene directory")->required();
  eval->add_option("--split", ea.split, "train, test or all");

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "gradient, oracle and invariant suites");
  add_common(verify, verify_c, false);
  verify->add_option("--suite", va.suites, "run suites with this name prefix (repeatable)");
  verify->add_option("--cases", va.cases, "randomized cases per gradient suite");
  verify->add_option("--scenes", va.scenes, "scenes per renderer oracle suite");
  verify->add_option("--fault-op", va.fault_op, "test hook: scale the backward of this graph op");
  verify->add_option("--fault-factor", va.fault_factor, "factor for --fault-op");
  verify->add_flag("--list", va.list, "list suites and exit");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "attention cost grid and agent-ratio sweep");
  add_common(bench, bench_c, false);
  bench->add_option("--lengths", ba.lengths, "token counts N")->delimiter(',');
  bench->add_option("--ratios", ba.ratios, "agent ratios in percent")->delimiter(',');
  bench->add_option("--d-model", ba.d_model, "feature width");
  bench->add_option("--repeats", ba.repeats, "timing repeats (minimum is kept)");
  bench->add_option("--fixed-agents", ba.fixed_agents, "use this agent count for every row");
  bench->add_flag("--no-full", ba.no_full, "skip the quadratic baseline");
  bench->add_option("--scene", ba.scene, "scene for the ratio sweep");
  bench->add_option("--init", ba.init, "stage-1 checkpoint for the ratio sweep");
  bench->add_option("--probe", ba.probe, "token count for sweep throughput");
  bench->add_flag("--no-train", ba.no_train, "sweep throughput only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 1);
  }

  try {
    if (*gen) return cmd_gen(gen_c, gen);
    if (*train) return cmd_train(train_c, ta, train);
    if (*render) return cmd_render(render_c, ra, render);
    if (*eval) return cmd_eval(eval_c, ea, eval);
    if (*verify) return cmd_verify(verify_c, va, verify);
    if (*bench) return cmd_bench(bench_c, ba, bench);
  } catch (const asp::UsageError& e) {
    return fail("usage", e.what(), 1);
  } catch (const asp::NumericError& e) {
    return fail("numeric", e.what(), 3);
  } catch (const asp::Error& e) {
    return fail("validation", e.what(), 2);
  } catch (const fs::filesystem_error& e) {
    return fail("validation", e.what(), 2);
  } catch (const std::exception& e) {
    return fail("validation", e.what(), 2);
  }
  return 1;
}
