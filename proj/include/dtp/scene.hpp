#pragma once

#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

#include "dtp/codec.hpp"

namespace dtp::scene {

// Parametric motion primitives. Each yields the offset of a tracked point at
// frame t (1-based) relative to its start position.
struct LinearMode {
  double vx = 0.0;
  double vy = 0.0;
};

enum class Axis { Horizontal, Vertical };

struct OscillationMode {
  Axis axis = Axis::Vertical;
  double amplitude = 0.0;
  double period = 30.0;
};

struct ArcMode {
  double radius = 0.0;
  double angular_rate = 0.0;  // radians per frame
  double orientation = 0.0;   // start angle on the circle, radians
};

using MotionMode = std::variant<LinearMode, OscillationMode, ArcMode>;

std::pair<double, double> mode_offset(const MotionMode& mode, int t);

// A scene type: the set of futures its context admits, with draw weights.
struct MotionModeSet {
  int type_id = 0;
  std::vector<MotionMode> modes;
  std::vector<double> mode_weights;
};

struct SceneSpec {
  int height = 16;
  int width = 20;
  int horizon = 30;  // T
  std::vector<MotionModeSet> scene_types;
  double actor_radius = 3.0;
  double noise_sigma = 0.05;
  bool coordinate_channels = true;

  // Feature channels: actor mask, one-hot scene type, optional row/col coords.
  int feature_channels() const {
    return 1 + static_cast<int>(scene_types.size()) +
           (coordinate_channels ? 2 : 0);
  }
  std::size_t feature_size() const {
    return static_cast<std::size_t>(feature_channels()) * height * width;
  }

  void validate() const;

  // Two oscillatory scene types (left/right and up/down), two symmetric
  // modes each.
  static SceneSpec defaults();
};

struct SceneSample {
  // Channel-major layout: features[(f*height + r)*width + c].
  std::vector<double> features;
  codec::TrajectoryField truth;
  int type_id = 0;
  int mode_id = 0;  // index into the scene type's mode list
  int center_row = 0;
  int center_col = 0;
  std::uint64_t seed = 0;
};

struct Dataset {
  SceneSpec spec;
  std::uint64_t seed = 0;
  std::vector<SceneSample> train;
  std::vector<SceneSample> test;
};

SceneSample generate_scene(const SceneSpec& spec, std::uint64_t rng_seed);

// Train/test drawn from the same spec with disjoint seed streams; samples are
// generated in parallel but stored by index, so output is deterministic.
Dataset build_dataset(const SceneSpec& spec, int n_train, int n_test,
                      std::uint64_t seed);

// Noiseless trajectory field for one (type, mode) at a given actor center.
// Used as the mode template in evaluation probes.
codec::TrajectoryField render_mode_field(const SceneSpec& spec, int type_id,
                                         int mode_idx, int center_row,
                                         int center_col);

std::vector<double> render_features(const SceneSpec& spec, int type_id,
                                    int center_row, int center_col);

bool in_actor_disk(const SceneSpec& spec, int r, int c, int center_row,
                   int center_col);

// Recover metadata from a feature tensor (used when loading dataset files,
// which store features and trajectories only).
int type_from_features(const SceneSpec& spec,
                       const std::vector<double>& features);
std::pair<int, int> center_from_features(const SceneSpec& spec,
                                         const std::vector<double>& features);

}  // namespace dtp::scene
