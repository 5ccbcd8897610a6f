#include "dtp/scene.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "dtp/parallel.hpp"
#include "dtp/rng.hpp"

namespace dtp::scene {

namespace {

constexpr double kTwoPi = 6.28318530717958647692528676655900577;

// Substream tags for build_dataset.
constexpr std::uint64_t kStreamTrain = 0x7452414e;  // "TRAN"
constexpr std::uint64_t kStreamTest = 0x74455354;   // "TEST"

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

struct PlacementRange {
  int lo_row, hi_row, lo_col, hi_col;
};

PlacementRange placement_range(const SceneSpec& spec) {
  PlacementRange p;
  p.lo_row = static_cast<int>(std::ceil(spec.actor_radius));
  p.hi_row = spec.height - 1 - p.lo_row;
  p.lo_col = static_cast<int>(std::ceil(spec.actor_radius));
  p.hi_col = spec.width - 1 - p.lo_col;
  require(p.lo_row <= p.hi_row && p.lo_col <= p.hi_col,
          "actor_radius too large for grid");
  return p;
}

}  // namespace

std::pair<double, double> mode_offset(const MotionMode& mode, int t) {
  if (const auto* lin = std::get_if<LinearMode>(&mode)) {
    return {lin->vx * t, lin->vy * t};
  }
  if (const auto* osc = std::get_if<OscillationMode>(&mode)) {
    const double s = osc->amplitude * std::sin(kTwoPi * t / osc->period);
    return osc->axis == Axis::Horizontal ? std::pair{s, 0.0}
                                         : std::pair{0.0, s};
  }
  const auto& arc = std::get<ArcMode>(mode);
  const double a0 = arc.orientation;
  const double at = a0 + arc.angular_rate * t;
  return {arc.radius * (std::cos(at) - std::cos(a0)),
          arc.radius * (std::sin(at) - std::sin(a0))};
}

void SceneSpec::validate() const {
  require(height >= 1 && width >= 1 && horizon >= 1,
          "scene grid dims and horizon must be >= 1");
  require(!scene_types.empty(), "spec needs at least one scene type");
  require(noise_sigma >= 0.0, "noise_sigma must be >= 0");
  require(actor_radius > 0.0, "actor_radius must be > 0");
  for (const auto& st : scene_types) {
    require(!st.modes.empty(), "scene type needs at least one mode");
    require(st.modes.size() == st.mode_weights.size(),
            "mode/weight count mismatch");
    double sum = 0.0;
    for (double w : st.mode_weights) {
      require(w >= 0.0, "mode weights must be nonnegative");
      sum += w;
    }
    require(std::abs(sum - 1.0) <= 1e-9, "mode weights must sum to 1");
  }
}

SceneSpec SceneSpec::defaults() {
  // Two scene types whose modes are exact sign-flips of each other: circular
  // sweeps entered from opposite sides. Both axes carry signal, the motion
  // keeps changing direction (so first-frame extrapolation fails), and the
  // mode mean is exactly zero (so a unimodal regressor must collapse).
  SceneSpec spec;
  const double rate = kTwoPi / 30.0;
  const double radius = 2.0;
  MotionModeSet left_right;
  left_right.type_id = 0;
  left_right.modes = {ArcMode{radius, rate, kTwoPi / 4.0},
                      ArcMode{radius, rate, 3.0 * kTwoPi / 4.0}};
  left_right.mode_weights = {0.5, 0.5};
  MotionModeSet up_down;
  up_down.type_id = 1;
  up_down.modes = {ArcMode{radius, rate, 0.0},
                   ArcMode{radius, rate, kTwoPi / 2.0}};
  up_down.mode_weights = {0.5, 0.5};
  spec.scene_types = {left_right, up_down};
  return spec;
}

bool in_actor_disk(const SceneSpec& spec, int r, int c, int center_row,
                   int center_col) {
  const double dr = r - center_row;
  const double dc = c - center_col;
  return dr * dr + dc * dc <= spec.actor_radius * spec.actor_radius;
}

std::vector<double> render_features(const SceneSpec& spec, int type_id,
                                    int center_row, int center_col) {
  const int h = spec.height, w = spec.width;
  std::vector<double> f(spec.feature_size(), 0.0);
  auto chan = [&](int ch) { return f.data() + static_cast<std::size_t>(ch) * h * w; };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (in_actor_disk(spec, r, c, center_row, center_col))
        chan(0)[r * w + c] = 1.0;
    }
  }
  double* onehot = chan(1 + type_id);
  for (int i = 0; i < h * w; ++i) onehot[i] = 1.0;
  if (spec.coordinate_channels) {
    double* rows = chan(1 + static_cast<int>(spec.scene_types.size()));
    double* cols = rows + h * w;
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        rows[r * w + c] = h > 1 ? 2.0 * r / (h - 1) - 1.0 : 0.0;
        cols[r * w + c] = w > 1 ? 2.0 * c / (w - 1) - 1.0 : 0.0;
      }
    }
  }
  return f;
}

codec::TrajectoryField render_mode_field(const SceneSpec& spec, int type_id,
                                         int mode_idx, int center_row,
                                         int center_col) {
  const auto& mode = spec.scene_types.at(type_id).modes.at(mode_idx);
  codec::TrajectoryField field(spec.height, spec.width, spec.horizon);
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      if (!in_actor_disk(spec, r, c, center_row, center_col)) continue;
      for (int t = 1; t <= spec.horizon; ++t) {
        const auto [dx, dy] = mode_offset(mode, t);
        field.at(r, c, t - 1, 0) = dx;
        field.at(r, c, t - 1, 1) = dy;
      }
    }
  }
  return field;
}

SceneSample generate_scene(const SceneSpec& spec, std::uint64_t rng_seed) {
  spec.validate();
  const PlacementRange range = placement_range(spec);
  Rng rng(rng_seed);

  SceneSample sample;
  sample.seed = rng_seed;
  sample.center_row =
      static_cast<int>(rng.uniform_int(range.lo_row, range.hi_row));
  sample.center_col =
      static_cast<int>(rng.uniform_int(range.lo_col, range.hi_col));
  sample.type_id = static_cast<int>(
      rng.uniform_int(0, static_cast<std::int64_t>(spec.scene_types.size()) - 1));

  const auto& type = spec.scene_types[sample.type_id];
  const double u = rng.uniform01();
  double cum = 0.0;
  sample.mode_id = static_cast<int>(type.modes.size()) - 1;
  for (std::size_t m = 0; m < type.modes.size(); ++m) {
    cum += type.mode_weights[m];
    if (u < cum) {
      sample.mode_id = static_cast<int>(m);
      break;
    }
  }

  sample.features =
      render_features(spec, sample.type_id, sample.center_row, sample.center_col);
  sample.truth = render_mode_field(spec, sample.type_id, sample.mode_id,
                                   sample.center_row, sample.center_col);
  if (spec.noise_sigma > 0.0) {
    for (int r = 0; r < spec.height; ++r) {
      for (int c = 0; c < spec.width; ++c) {
        if (!in_actor_disk(spec, r, c, sample.center_row, sample.center_col))
          continue;
        for (int t = 0; t < spec.horizon; ++t) {
          sample.truth.at(r, c, t, 0) += spec.noise_sigma * rng.normal();
          sample.truth.at(r, c, t, 1) += spec.noise_sigma * rng.normal();
        }
      }
    }
  }
  return sample;
}

Dataset build_dataset(const SceneSpec& spec, int n_train, int n_test,
                      std::uint64_t seed) {
  spec.validate();
  require(n_train >= 0 && n_test >= 0, "sample counts must be >= 0");
  Dataset ds;
  ds.spec = spec;
  ds.seed = seed;
  ds.train.resize(n_train);
  ds.test.resize(n_test);
  parallel_for(static_cast<std::size_t>(n_train), [&](std::size_t i) {
    ds.train[i] = generate_scene(spec, derive_seed(seed, kStreamTrain, i));
  });
  parallel_for(static_cast<std::size_t>(n_test), [&](std::size_t i) {
    ds.test[i] = generate_scene(spec, derive_seed(seed, kStreamTest, i));
  });
  return ds;
}

int type_from_features(const SceneSpec& spec,
                       const std::vector<double>& features) {
  const std::size_t hw = static_cast<std::size_t>(spec.height) * spec.width;
  int best = 0;
  double best_v = -1.0;
  for (std::size_t t = 0; t < spec.scene_types.size(); ++t) {
    const double v = features[(1 + t) * hw];  // one-hot channels are constant
    if (v > best_v) {
      best_v = v;
      best = static_cast<int>(t);
    }
  }
  return best;
}

std::pair<int, int> center_from_features(const SceneSpec& spec,
                                         const std::vector<double>& features) {
  // The actor disk is symmetric about its center, so the mask centroid is the
  // center exactly.
  double sr = 0.0, sc = 0.0, n = 0.0;
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      if (features[static_cast<std::size_t>(r) * spec.width + c] > 0.5) {
        sr += r;
        sc += c;
        n += 1.0;
      }
    }
  }
  if (n == 0.0) return {0, 0};
  return {static_cast<int>(std::lround(sr / n)),
          static_cast<int>(std::lround(sc / n))};
}

}  // namespace dtp::scene
