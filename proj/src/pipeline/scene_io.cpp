// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "asp/scene_io.hpp"

#include <cstdio>
#include <map>
#include <sstream>

#include "asp/binary_io.hpp"
#include "asp/config.hpp"
#include "asp/error.hpp"
#include "asp/image_io.hpp"

namespace asp::scene {
namespace fs = std::filesystem;
namespace {

std::string num17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string num9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double to_double(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw ValidationError(where + ": bad number '" + s + "'");
  return v;
}

std::vector<double> numbers(const std::string& text, const std::string& where) {
  std::istringstream in(text);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(to_double(tok, where));
  return out;
}

std::map<std::string, std::string> read_key_values(const fs::path& path) {
  std::map<std::string, std::string> m;
  for (auto& [k, v] : pipeline::parse_key_values(io::read_text(path), path.string())) m[k] = v;
  return m;
}

const std::string& need(const std::map<std::string, std::string>& m, const std::string& key, const fs::path& path) {
  const auto it = m.find(key);
  if (it == m.end()) throw ValidationError(path.string() + ": missing key '" + key + "'");
  return it->second;
}

std::string scene_text(const SyntheticScene& s) {
  std::ostringstream o;
  o << "seed = " << s.spec.seed << "\n";
  o << "image_size = " << s.spec.image_size << "\n";
  o << "frames = " << s.spec.frames << "\n";
  o << "cameras = " << s.spec.cameras << "\n";
  o << "audio_width = " << s.spec.audio_width << "\n";
  o << "ring_degrees = " << num17(s.spec.ring_degrees) << "\n";
  o << "heldout_degrees = " << num17(s.spec.heldout_degrees) << "\n";
  o << "camera_distance = " << num17(s.spec.camera_distance) << "\n";
  o << "test_fraction = " << num17(s.spec.test_fraction) << "\n";
  o << "background = " << num17(s.background[0]) << " " << num17(s.background[1]) << " " << num17(s.background[2])
    << "\n";
  o << "bounds_lo = " << num17(s.bounds_lo[0]) << " " << num17(s.bounds_lo[1]) << " " << num17(s.bounds_lo[2]) << "\n";
  o << "bounds_hi = " << num17(s.bounds_hi[0]) << " " << num17(s.bounds_hi[1]) << " " << num17(s.bounds_hi[2]) << "\n";
  o << "landmarks_rest =";
  for (double v : s.landmarks_rest.data()) o << " " << num9(v);
  o << "\n";
  return o.str();
}

std::array<double, 3> triple(const std::string& text, const std::string& where) {
  const auto v = numbers(text, where);
  if (v.size() != 3) throw ValidationError(where + ": expected 3 numbers");
  return {v[0], v[1], v[2]};
}

}  // namespace

std::string frame_name(std::size_t t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", t);
  return buf;
}

void write_track(const fs::path& path, const attention::ConditionTrack& track) {
  track.validate();
  const std::string header = "ASPTRACK1 frames=" + std::to_string(track.size()) +
                             " audio=" + std::to_string(track.audio_width) + " blink=1 pose=6 timestep=1\n";
  io::ByteWriter out;
  out.bytes(header.data(), header.size());
  for (const auto& row : track.rows) {
    for (double v : row.audio) out.f32(static_cast<float>(v));
    out.f32(static_cast<float>(row.blink));
    for (double v : row.pose) out.f32(static_cast<float>(v));
    out.f32(static_cast<float>(row.timestep));
  }
  io::write_file_atomic(path, out.buffer());
}

attention::ConditionTrack read_track(const fs::path& path) {
  const std::vector<char> data = io::read_file(path);
  const auto nl = std::find(data.begin(), data.end(), '\n');
  if (nl == data.end()) throw ValidationError(path.string() + ": missing track header");
  std::istringstream header(std::string(data.begin(), nl));
  std::string magic, field;
  header >> magic;
  if (magic != "ASPTRACK1") throw ValidationError(path.string() + ": not a track file");
  std::map<std::string, long long> widths;
  while (header >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw ValidationError(path.string() + ": bad header field '" + field + "'");
    widths[field.substr(0, eq)] = std::stoll(field.substr(eq + 1));
  }
  for (const char* k : {"frames", "audio", "blink", "pose", "timestep"}) {
    if (!widths.count(k)) throw ValidationError(path.string() + ": header lacks '" + k + "'");
  }
  if (widths["blink"] != 1 || widths["pose"] != 6 || widths["timestep"] != 1 || widths["audio"] < 1 ||
      widths["frames"] < 0) {
    throw ValidationError(path.string() + ": unsupported track widths");
  }
  attention::ConditionTrack track;
  track.audio_width = static_cast<std::size_t>(widths["audio"]);
  io::ByteReader in(std::vector<char>(nl + 1, data.end()), path.string());
  for (long long t = 0; t < widths["frames"]; ++t) {
    attention::ConditionRow row;
    for (std::size_t c = 0; c < track.audio_width; ++c) row.audio.push_back(in.f32());
    row.blink = in.f32();
    for (double& v : row.pose) v = in.f32();
    row.timestep = static_cast<long>(in.f32());
    track.rows.push_back(std::move(row));
  }
  if (!in.at_end()) throw ValidationError(path.string() + ": trailing bytes after track rows");
  track.validate();
  return track;
}

void write_cameras(const fs::path& path, const std::vector<std::pair<std::string, splat::Camera>>& cameras) {
  std::string out = "# name width height fx fy cx cy R00 R01 R02 t0 R10 R11 R12 t1 R20 R21 R22 t2\n";
  for (const auto& [name, c] : cameras) {
    out += name + " " + std::to_string(c.width) + " " + std::to_string(c.height) + " " + num17(c.fx) + " " +
           num17(c.fy) + " " + num17(c.cx) + " " + num17(c.cy);
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) out += " " + num17(c.rotation[r][k]);
      out += " " + num17(c.translation[r]);
    }
    out += "\n";
  }
  io::write_text_atomic(path, out);
}

std::vector<std::pair<std::string, splat::Camera>> read_cameras(const fs::path& path) {
  std::istringstream in(io::read_text(path));
  std::vector<std::pair<std::string, splat::Camera>> out;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    if (line.empty() || line[0] == '#') continue;
    const std::string where = path.string() + ":" + std::to_string(no);
    std::istringstream ls(line);
    std::string name;
    ls >> name;
    std::string rest;
    std::getline(ls, rest);
    const auto v = numbers(rest, where);
    if (v.size() != 18) throw ValidationError(where + ": expected 18 numbers after the camera name");
    splat::Camera c;
    c.width = static_cast<int>(v[0]);
    c.height = static_cast<int>(v[1]);
    c.fx = v[2];
    c.fy = v[3];
    c.cx = v[4];
    c.cy = v[5];
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) c.rotation[r][k] = v[6 + 4 * r + k];
      c.translation[r] = v[6 + 4 * r + 3];
    }
    c.validate();
    out.emplace_back(name, c);
  }
  return out;
}

void save_scene(const SyntheticScene& scene, const fs::path& dir, bool force) {
  scene.validate();
  if (fs::exists(dir) && !force) {
    throw ValidationError("output directory exists (use --force to replace): " + dir.string());
  }
  const fs::path tmp = dir.string() + ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp / "frames");
  fs::create_directories(tmp / "masks");
  fs::create_directories(tmp / "neutral");
  io::write_text_atomic(tmp / "scene.txt", scene_text(scene));
  std::vector<std::pair<std::string, splat::Camera>> cams;
  for (std::size_t k = 0; k < scene.cameras.size(); ++k) cams.emplace_back("cam" + std::to_string(k), scene.cameras[k]);
  cams.emplace_back("heldout", scene.heldout_camera);
  write_cameras(tmp / "cameras.txt", cams);
  write_track(tmp / "track.f32", scene.track);
  std::string kp;
  for (std::size_t t = 0; t < scene.frames.size(); ++t) {
    kp += std::to_string(t) + " " + num9(scene.apertures[t]);
    for (double v : scene.keypoints[t].data()) kp += " " + num9(v);
    kp += "\n";
    io::write_float_image(tmp / "frames" / (frame_name(t) + ".f32"), scene.frames[t]);
    io::write_png(tmp / "masks" / (frame_name(t) + ".png"), scene.masks[t]);
  }
  io::write_text_atomic(tmp / "keypoints.txt", kp);
  for (std::size_t k = 0; k < scene.neutral.size(); ++k) {
    io::write_float_image(tmp / "neutral" / ("cam" + std::to_string(k) + ".f32"), scene.neutral[k]);
  }
  io::write_float_image(tmp / "neutral" / "heldout.f32", scene.heldout_neutral);
  fs::remove_all(dir);
  fs::rename(tmp, dir);
}

std::vector<std::string> check_scene_layout(const fs::path& dir) {
  std::vector<std::string> problems;
  if (!fs::is_directory(dir)) return {"not a directory: " + dir.string()};
  for (const char* f : {"scene.txt", "cameras.txt", "track.f32", "keypoints.txt"}) {
    if (!fs::is_regular_file(dir / f)) problems.push_back("missing " + std::string(f));
  }
  for (const char* d : {"frames", "masks", "neutral"}) {
    if (!fs::is_directory(dir / d)) problems.push_back("missing directory " + std::string(d));
  }
  if (!problems.empty()) return problems;
  try {
    const auto kv = read_key_values(dir / "scene.txt");
    const std::size_t frames = static_cast<std::size_t>(to_double(need(kv, "frames", dir / "scene.txt"), "frames"));
    const std::size_t cameras = static_cast<std::size_t>(to_double(need(kv, "cameras", dir / "scene.txt"), "cameras"));
    const auto track = read_track(dir / "track.f32");
    if (track.size() != frames) problems.push_back("track has " + std::to_string(track.size()) + " rows, expected " +
                                                   std::to_string(frames));
    const auto cams = read_cameras(dir / "cameras.txt");
    if (cams.size() != cameras + 1) problems.push_back("cameras.txt lists " + std::to_string(cams.size()) +
                                                       " cameras, expected " + std::to_string(cameras + 1));
    for (std::size_t t = 0; t < frames; ++t) {
      if (!fs::is_regular_file(dir / "frames" / (frame_name(t) + ".f32"))) {
        problems.push_back("missing frames/" + frame_name(t) + ".f32");
      }
      if (!fs::is_regular_file(dir / "masks" / (frame_name(t) + ".png"))) {
        problems.push_back("missing masks/" + frame_name(t) + ".png");
      }
    }
    for (std::size_t k = 0; k < cameras; ++k) {
      if (!fs::is_regular_file(dir / "neutral" / ("cam" + std::to_string(k) + ".f32"))) {
        problems.push_back("missing neutral/cam" + std::to_string(k) + ".f32");
      }
    }
    if (!fs::is_regular_file(dir / "neutral" / "heldout.f32")) problems.push_back("missing neutral/heldout.f32");
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  return problems;
}

SyntheticScene load_scene(const fs::path& dir) {
  if (!fs::exists(dir)) throw UsageError("scene directory not found: " + dir.string());
  const auto problems = check_scene_layout(dir);
  if (!problems.empty()) throw ValidationError(dir.string() + ": " + problems.front());
  SyntheticScene s;
  const fs::path st = dir / "scene.txt";
  const auto kv = read_key_values(st);
  s.spec.seed = static_cast<std::uint64_t>(to_double(need(kv, "seed", st), "seed"));
  s.spec.image_size = static_cast<int>(to_double(need(kv, "image_size", st), "image_size"));
  s.spec.frames = static_cast<std::size_t>(to_double(need(kv, "frames", st), "frames"));
  s.spec.cameras = static_cast<std::size_t>(to_double(need(kv, "cameras", st), "cameras"));
  s.spec.audio_width = static_cast<std::size_t>(to_double(need(kv, "audio_width", st), "audio_width"));
  s.spec.ring_degrees = to_double(need(kv, "ring_degrees", st), "ring_degrees");
  s.spec.heldout_degrees = to_double(need(kv, "heldout_degrees", st), "heldout_degrees");
  s.spec.camera_distance = to_double(need(kv, "camera_distance", st), "camera_distance");
  s.spec.test_fraction = to_double(need(kv, "test_fraction", st), "test_fraction");
  s.background = triple(need(kv, "background", st), st.string());
  s.bounds_lo = triple(need(kv, "bounds_lo", st), st.string());
  s.bounds_hi = triple(need(kv, "bounds_hi", st), st.string());
  const auto lm = numbers(need(kv, "landmarks_rest", st), st.string());
  if (lm.size() != kLandmarks * 3) throw ValidationError(st.string() + ": landmarks_rest needs 12 numbers");
  s.landmarks_rest = NdArray(Shape{kLandmarks, 3}, lm);
  for (double& v : s.landmarks_rest.data()) v = static_cast<float>(v);

  for (auto& [name, cam] : read_cameras(dir / "cameras.txt")) {
    if (name == "heldout") {
      s.heldout_camera = cam;
    } else {
      s.cameras.push_back(cam);
    }
  }
  s.track = read_track(dir / "track.f32");
  std::istringstream kp(io::read_text(dir / "keypoints.txt"));
  std::string line;
  while (std::getline(kp, line)) {
    if (line.empty()) continue;
    const auto v = numbers(line, (dir / "keypoints.txt").string());
    if (v.size() != 2 + 2 * kLandmarks || v[0] != static_cast<double>(s.keypoints.size())) {
      throw ValidationError((dir / "keypoints.txt").string() + ": bad row " + std::to_string(s.keypoints.size()));
    }
    s.apertures.push_back(static_cast<float>(v[1]));
    s.keypoints.emplace_back(Shape{kLandmarks, 2}, std::vector<double>(v.begin() + 2, v.end()));
    for (double& x : s.keypoints.back().data()) x = static_cast<float>(x);
  }
  for (std::size_t t = 0; t < s.spec.frames; ++t) {
    s.frames.push_back(io::read_float_image(dir / "frames" / (frame_name(t) + ".f32")));
    s.masks.push_back(io::read_png(dir / "masks" / (frame_name(t) + ".png")));
  }
  for (std::size_t k = 0; k < s.spec.cameras; ++k) {
    s.neutral.push_back(io::read_float_image(dir / "neutral" / ("cam" + std::to_string(k) + ".f32")));
  }
  s.heldout_neutral = io::read_float_image(dir / "neutral" / "heldout.f32");
  s.validate();
  return s;
}

}  // namespace asp::scene
