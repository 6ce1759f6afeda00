// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "asp/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "asp/error.hpp"

namespace asp::bench {
namespace {

using Clock = std::chrono::steady_clock;

NdArray uniform(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  NdArray a(Shape{rows, cols});
  for (double& v : a.data()) v = dist(rng);
  return a;
}

template <typename Fn>
double min_seconds(std::size_t repeats, Fn&& fn) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto t0 = Clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(Clock::now() - t0).count());
  }
  return best;
}

std::string g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

void AttentionBenchOptions::validate() const {
  if (lengths.empty() || ratios.empty()) throw ValidationError("bench: length and ratio lists must be nonempty");
  for (std::size_t n : lengths)
    if (n == 0) throw ValidationError("bench: lengths must be positive");
  for (double r : ratios)
    if (!(r > 0.0 && r <= 1.0)) throw ValidationError("bench: ratios must be in (0, 1]");
  if (d_model == 0 || conditions == 0 || repeats == 0) {
    throw ValidationError("bench: d_model, conditions and repeats must be positive");
  }
}

std::vector<AttentionBenchRow> bench_attention(const AttentionBenchOptions& options) {
  options.validate();
  std::vector<AttentionBenchRow> rows;
  for (std::size_t length : options.lengths) {
    std::mt19937_64 rng(options.seed + length);
    const NdArray x = uniform(rng, length, options.d_model);
    const NdArray c = uniform(rng, options.conditions, options.d_model);
    attention::AgentConfig agents;
    agents.d_model = options.d_model;
    ParamStore store;
    attention::init_parameters(store, options.d_model, 1, agents, rng);

    std::uint64_t full_macs = 0;
    double full_seconds = 0.0;
    if (options.full) {
      full_seconds = min_seconds(options.repeats, [&] {
        ad::Graph gr;
        attention::reset_mac_count();
        attention::full_cross_attention(gr.constant(x), gr.constant(c));
        full_macs = attention::mac_count();
      });
    }
    for (double ratio : options.ratios) {
      agents.ratio = ratio;
      AttentionBenchRow row;
      row.length = length;
      row.ratio = ratio;
      row.agents = options.fixed_agents ? options.fixed_agents : agents.agent_count(length);
      if (row.agents > length) throw ValidationError("bench: more agents than tokens");
      row.agent_seconds = min_seconds(options.repeats, [&] {
        ad::Graph gr;
        attention::reset_mac_count();
        attention::agent_cross_attention(gr, store, gr.constant(x), gr.constant(c), row.agents, false);
        row.agent_macs = attention::mac_count();
      });
      row.full_macs = full_macs;
      row.full_seconds = full_seconds;
      rows.push_back(row);
    }
  }
  return rows;
}

std::string attention_csv(const std::vector<AttentionBenchRow>& rows) {
  std::string out = "length,ratio,agents,agent_macs,full_macs,agent_seconds,full_seconds\n";
  for (const auto& r : rows) {
    out += std::to_string(r.length) + "," + g(r.ratio) + "," + std::to_string(r.agents) + "," +
           std::to_string(r.agent_macs) + "," + std::to_string(r.full_macs) + "," + g(r.agent_seconds) + "," +
           g(r.full_seconds) + "\n";
  }
  return out;
}

double fit_exponent(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("fit_exponent: need two or more paired samples");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ValidationError("fit_exponent: samples must be positive");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  if (sxx == 0.0) throw ValidationError("fit_exponent: x values are all equal");
  return sxy / sxx;
}

std::vector<RatioRow> ratio_sweep(const scene::SyntheticScene& scene, const ParamStore& stage1,
                                  const pipeline::TrainConfig& config, const RatioSweepOptions& options) {
  if (options.ratios.empty()) throw ValidationError("ratio sweep: no ratios");
  if (options.probe_length == 0 || options.probe_rows == 0 || options.repeats == 0) {
    throw ValidationError("ratio sweep: probe_length, probe_rows and repeats must be positive");
  }
  const pipeline::Model base = pipeline::Model::from_store(stage1);
  std::mt19937_64 rng(config.seed);
  const NdArray probe_points = gaussians::stratified_seeds(rng, options.probe_length, scene.bounds_lo, scene.bounds_hi);
  const NdArray probe = base.static_model().features(stage1, probe_points);
  const std::size_t rows = std::min(options.probe_rows, scene.track.size());

  std::vector<RatioRow> out;
  std::vector<ParamStore> stores;
  std::vector<pipeline::Model> models;
  for (double ratio : options.ratios) {
    ParamStore store = stage1;
    store.set_meta("agent_ratio_ppm", static_cast<double>(std::llround(ratio * 1e6)));
    const pipeline::Model model = pipeline::Model::from_store(store);
    RatioRow row;
    row.ratio = ratio;
    row.agents = model.config().agents.agent_count(model.config().gaussians);
    row.probe_agents = model.config().agents.agent_count(options.probe_length);

    if (options.train) {
      const auto t0 = Clock::now();
      store = pipeline::train_deform(scene, config, store).params;
      row.train_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
      const auto report = pipeline::evaluate_model(store, scene, scene.train_frames(), scene.frames.size());
      row.test_psnr = report.mean_psnr;
      row.test_pearson = report.aperture_pearson;
    }
    out.push_back(row);
    stores.push_back(std::move(store));
    models.push_back(model);
  }

  // Timing rounds interleave the ratios so that load drift hits all of them.
  std::vector<double> esaa(out.size(), std::numeric_limits<double>::infinity());
  std::vector<double> decoder(out.size(), std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < options.repeats; ++r) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto& store = stores[i];
      const auto& model = models[i];
      esaa[i] = std::min(esaa[i], min_seconds(1, [&] {
        for (std::size_t t = 0; t < rows; ++t) {
          ad::Graph gr;
          attention::deform_features(gr, store, gr.constant(probe), scene.track.rows[t], model.config().agents, false);
        }
      }));
      decoder[i] = std::min(decoder[i], min_seconds(1, [&] {
        for (std::size_t t = 0; t < rows; ++t) {
          ad::Graph gr;
          model.deltas(gr, store, gr.constant(probe), scene.track.rows[t], false);
        }
      }));
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].esaa_fps = static_cast<double>(rows) / esaa[i];
    out[i].decoder_fps = static_cast<double>(rows) / decoder[i];
  }
  return out;
}

std::string ratio_csv(const std::vector<RatioRow>& rows) {
  std::string out = "ratio,agents,probe_agents,esaa_fps,decoder_fps,test_psnr,test_pearson,train_seconds\n";
  for (const auto& r : rows) {
    out += g(r.ratio) + "," + std::to_string(r.agents) + "," + std::to_string(r.probe_agents) + "," + g(r.esaa_fps) +
           "," + g(r.decoder_fps) + "," + g(r.test_psnr) + "," + g(r.test_pearson) + "," + g(r.train_seconds) + "\n";
  }
  return out;
}

}  // namespace asp::bench
