#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dtp/codec.hpp"
#include "dtp/cvae.hpp"
#include "dtp/scene.hpp"
#include "dtp/trainer.hpp"

namespace dtp::io {

// Dataset file: magic "DTPD1\n", a one-line structured-text header, then
// little-endian f32 payload, samples in index order (train then test):
// features (H*W*F), trajectories (H*W*T*2), mode_id as one float.
struct DatasetFile {
  scene::Dataset data;
  int coeffs_per_axis = 5;  // codec K echoed for downstream stages
};

void write_dataset(const DatasetFile& file, const std::string& path);
DatasetFile load_dataset(const std::string& path);

// Checkpoint file: magic "DTPC1\n", a one-line header (model kind, model
// config echo, training config echo, parameter count), then the little-endian
// f64 parameters in canonical layout order. Load o save is bit-exact.
struct Checkpoint {
  cvae::ModelKind kind = cvae::ModelKind::Cvae;
  cvae::CvaeConfig config;
  train::TrainConfig train_echo;
  nn::ParamStore params;
};

void write_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Zero-filled parameter store with the canonical layout for (config, kind).
nn::ParamStore make_param_layout(const cvae::CvaeConfig& cfg,
                                 cvae::ModelKind kind);

using CsvValue = std::variant<std::int64_t, double, std::string>;
using CsvRow = std::vector<CsvValue>;

// RFC-4180-style quoting, header row first, reals printed with 9 significant
// digits (trailing zeros kept).
void emit_csv(std::span<const std::string> header,
              std::span<const CsvRow> rows, const std::string& path);
std::string format_real(double v);

// One group of direction-colored segments per nonzero-motion cell, plus the
// hue legend pinwheel. Byte-identical for identical fields.
void render_trajectory_svg(const codec::TrajectoryField& field,
                           const std::string& path);

}  // namespace dtp::io
