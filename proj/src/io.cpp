#include "dtp/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "dtp/serde.hpp"

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

namespace dtp::io {

namespace {

using nlohmann::json;

constexpr char kDatasetMagic[] = "DTPD1\n";
constexpr char kCheckpointMagic[] = "DTPC1\n";

void fail(const std::string& msg) { throw std::runtime_error(msg); }

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open for reading: " + path);
  return in;
}

void write_f32(std::ostream& out, std::span<const double> values) {
  std::vector<float> buf(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    buf[i] = static_cast<float>(values[i]);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

std::vector<double> read_f32(std::istream& in, std::size_t count,
                             const std::string& path) {
  std::vector<float> buf(count);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (!in) fail("truncated payload in " + path);
  return {buf.begin(), buf.end()};
}

// "key=value" tokens separated by single spaces; values contain no spaces
// (JSON values are compact-dumped).
std::map<std::string, std::string> parse_header_line(const std::string& line) {
  std::map<std::string, std::string> out;
  std::istringstream ss(line);
  std::string token;
  while (ss >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) fail("malformed header token: " + token);
    out[token.substr(0, eq)] = token.substr(eq + 1);
  }
  return out;
}

const std::string& header_field(const std::map<std::string, std::string>& h,
                                const std::string& key,
                                const std::string& path) {
  auto it = h.find(key);
  if (it == h.end()) fail("missing header field '" + key + "' in " + path);
  return it->second;
}

void expect_magic(std::istream& in, const char* magic,
                  const std::string& path) {
  char buf[8] = {};
  in.read(buf, 6);
  if (!in || std::memcmp(buf, magic, 6) != 0)
    fail("bad magic in " + path);
}

void write_sample(std::ostream& out, const scene::SceneSample& s) {
  write_f32(out, s.features);
  write_f32(out, s.truth.data);
  const double mode_id = static_cast<double>(s.mode_id);
  write_f32(out, std::span<const double>{&mode_id, 1});
}

scene::SceneSample read_sample(std::istream& in, const scene::SceneSpec& spec,
                               const std::string& path) {
  scene::SceneSample s;
  s.features = read_f32(in, spec.feature_size(), path);
  s.truth = codec::TrajectoryField(spec.height, spec.width, spec.horizon);
  s.truth.data =
      read_f32(in, static_cast<std::size_t>(spec.height) * spec.width *
                       spec.horizon * 2,
               path);
  s.mode_id = static_cast<int>(std::lround(read_f32(in, 1, path)[0]));
  s.type_id = scene::type_from_features(spec, s.features);
  const auto [cr, cc] = scene::center_from_features(spec, s.features);
  s.center_row = cr;
  s.center_col = cc;
  return s;
}

}  // namespace

void write_dataset(const DatasetFile& file, const std::string& path) {
  auto out = open_out(path);
  out.write(kDatasetMagic, 6);
  const json spec_json = file.data.spec;
  out << "height=" << file.data.spec.height
      << " width=" << file.data.spec.width << " T=" << file.data.spec.horizon
      << " K=" << file.coeffs_per_axis
      << " F=" << file.data.spec.feature_channels()
      << " n_train=" << file.data.train.size()
      << " n_test=" << file.data.test.size() << " seed=" << file.data.seed
      << " spec=" << spec_json.dump() << "\n";
  for (const auto& s : file.data.train) write_sample(out, s);
  for (const auto& s : file.data.test) write_sample(out, s);
  if (!out) fail("write failed: " + path);
}

DatasetFile load_dataset(const std::string& path) {
  auto in = open_in(path);
  expect_magic(in, kDatasetMagic, path);
  std::string line;
  if (!std::getline(in, line)) fail("missing header line in " + path);
  const auto header = parse_header_line(line);
  DatasetFile file;
  file.data.spec =
      json::parse(header_field(header, "spec", path)).get<scene::SceneSpec>();
  file.coeffs_per_axis = std::stoi(header_field(header, "K", path));
  file.data.seed = std::stoull(header_field(header, "seed", path));
  const auto n_train = std::stoul(header_field(header, "n_train", path));
  const auto n_test = std::stoul(header_field(header, "n_test", path));
  if (std::stoi(header_field(header, "height", path)) != file.data.spec.height ||
      std::stoi(header_field(header, "width", path)) != file.data.spec.width ||
      std::stoi(header_field(header, "T", path)) != file.data.spec.horizon ||
      std::stoi(header_field(header, "F", path)) !=
          file.data.spec.feature_channels())
    fail("header dims disagree with generator spec in " + path);
  file.data.train.reserve(n_train);
  file.data.test.reserve(n_test);
  for (std::size_t i = 0; i < n_train; ++i)
    file.data.train.push_back(read_sample(in, file.data.spec, path));
  for (std::size_t i = 0; i < n_test; ++i)
    file.data.test.push_back(read_sample(in, file.data.spec, path));
  char extra;
  if (in.read(&extra, 1)) fail("trailing bytes in " + path);
  return file;
}

nn::ParamStore make_param_layout(const cvae::CvaeConfig& cfg,
                                 cvae::ModelKind kind) {
  // Same insertion order as cvae::make_params, zero-filled.
  Rng dummy(0);
  nn::ParamStore params = cvae::make_params(cfg, kind, dummy);
  params.fill(0.0);
  return params;
}

void write_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  auto out = open_out(path);
  out.write(kCheckpointMagic, 6);
  const json cfg_json = ckpt.config;
  const json train_json = ckpt.train_echo;
  out << "kind="
      << (ckpt.kind == cvae::ModelKind::Cvae ? "cvae" : "regressor")
      << " config=" << cfg_json.dump() << " train=" << train_json.dump()
      << " count=" << ckpt.params.total_size() << "\n";
  const auto flat = ckpt.params.to_flat();
  out.write(reinterpret_cast<const char*>(flat.data()),
            static_cast<std::streamsize>(flat.size() * sizeof(double)));
  if (!out) fail("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  auto in = open_in(path);
  expect_magic(in, kCheckpointMagic, path);
  std::string line;
  if (!std::getline(in, line)) fail("missing header line in " + path);
  const auto header = parse_header_line(line);
  Checkpoint ckpt;
  const std::string kind = header_field(header, "kind", path);
  if (kind == "cvae") {
    ckpt.kind = cvae::ModelKind::Cvae;
  } else if (kind == "regressor") {
    ckpt.kind = cvae::ModelKind::Regressor;
  } else {
    fail("unknown model kind '" + kind + "' in " + path);
  }
  ckpt.config = json::parse(header_field(header, "config", path))
                    .get<cvae::CvaeConfig>();
  ckpt.train_echo = json::parse(header_field(header, "train", path))
                        .get<train::TrainConfig>();
  const auto count = std::stoul(header_field(header, "count", path));
  ckpt.params = make_param_layout(ckpt.config, ckpt.kind);
  if (ckpt.params.total_size() != count)
    fail("parameter count mismatch in " + path);
  std::vector<double> flat(count);
  in.read(reinterpret_cast<char*>(flat.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) fail("truncated payload in " + path);
  ckpt.params.from_flat(flat);
  char extra;
  if (in.read(&extra, 1)) fail("trailing bytes in " + path);
  return ckpt;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%#.9g", v);
  return buf;
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_cell(const CsvValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&v)) return format_real(*d);
  return csv_escape(std::get<std::string>(v));
}

}  // namespace

void emit_csv(std::span<const std::string> header,
              std::span<const CsvRow> rows, const std::string& path) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(header[i]);
  }
  out << "\r\n";
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::invalid_argument("csv row width mismatch");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << csv_cell(row[i]);
    }
    out << "\r\n";
  }
  if (!out) fail("write failed: " + path);
}

namespace {

std::string format_px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string hsv_hex(double hue_deg, double sat, double val) {
  const double h = std::fmod(std::fmod(hue_deg, 360.0) + 360.0, 360.0) / 60.0;
  const int i = static_cast<int>(h) % 6;
  const double f = h - std::floor(h);
  const double p = val * (1.0 - sat);
  const double q = val * (1.0 - sat * f);
  const double t = val * (1.0 - sat * (1.0 - f));
  double r = 0, g = 0, b = 0;
  switch (i) {
    case 0: r = val; g = t; b = p; break;
    case 1: r = q; g = val; b = p; break;
    case 2: r = p; g = val; b = t; break;
    case 3: r = p; g = q; b = val; break;
    case 4: r = t; g = p; b = val; break;
    default: r = val; g = p; b = q; break;
  }
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                static_cast<int>(std::lround(r * 255.0)),
                static_cast<int>(std::lround(g * 255.0)),
                static_cast<int>(std::lround(b * 255.0)));
  return buf;
}

constexpr double kCellPx = 24.0;
constexpr double kPi = 3.14159265358979323846264338327950288;

}  // namespace

void render_trajectory_svg(const codec::TrajectoryField& field,
                           const std::string& path) {
  field.validate();
  const double grid_w = field.width * kCellPx;
  const double grid_h = field.height * kCellPx;
  const double legend_cx = grid_w + 55.0;
  const double legend_cy = 55.0;
  const double legend_r = 40.0;
  const double canvas_w = grid_w + 110.0;
  const double canvas_h = std::max(grid_h, 120.0);

  double max_speed = 0.0;
  for (int r = 0; r < field.height; ++r) {
    for (int c = 0; c < field.width; ++c) {
      double px = 0.0, py = 0.0;
      for (int t = 0; t < field.horizon; ++t) {
        const double vx = field.at(r, c, t, 0) - px;
        const double vy = field.at(r, c, t, 1) - py;
        max_speed = std::max(max_speed, std::hypot(vx, vy));
        px = field.at(r, c, t, 0);
        py = field.at(r, c, t, 1);
      }
    }
  }

  auto out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
      << format_px(canvas_w) << "\" height=\"" << format_px(canvas_h)
      << "\" viewBox=\"0 0 " << format_px(canvas_w) << " "
      << format_px(canvas_h) << "\">\n";
  out << "<rect width=\"" << format_px(canvas_w) << "\" height=\""
      << format_px(canvas_h) << "\" fill=\"#ffffff\"/>\n";

  for (int r = 0; r < field.height; ++r) {
    for (int c = 0; c < field.width; ++c) {
      bool moving = false;
      for (int t = 0; t < field.horizon && !moving; ++t)
        moving = field.at(r, c, t, 0) != 0.0 || field.at(r, c, t, 1) != 0.0;
      if (!moving) continue;
      out << "<g class=\"traj\">\n";
      const double x0 = (c + 0.5) * kCellPx;
      const double y0 = (r + 0.5) * kCellPx;
      double px = 0.0, py = 0.0;
      for (int t = 0; t < field.horizon; ++t) {
        const double ox = field.at(r, c, t, 0);
        const double oy = field.at(r, c, t, 1);
        const double vx = ox - px;
        const double vy = oy - py;
        const double speed = std::hypot(vx, vy);
        if (speed > 0.0) {
          const double hue =
              std::fmod(std::atan2(vy, vx) * 180.0 / kPi + 360.0, 360.0);
          const double value = max_speed > 0.0 ? speed / max_speed : 0.0;
          out << "<line x1=\"" << format_px(x0 + px * kCellPx) << "\" y1=\""
              << format_px(y0 + py * kCellPx) << "\" x2=\""
              << format_px(x0 + ox * kCellPx) << "\" y2=\""
              << format_px(y0 + oy * kCellPx) << "\" stroke=\""
              << hsv_hex(hue, 1.0, value)
              << "\" stroke-width=\"1.50\" stroke-linecap=\"round\"/>\n";
        }
        px = ox;
        py = oy;
      }
      out << "</g>\n";
    }
  }

  // Hue legend: direction pinwheel.
  out << "<g class=\"legend\">\n";
  for (int w = 0; w < 36; ++w) {
    const double a0 = w * 10.0 * kPi / 180.0;
    const double a1 = (w + 1) * 10.0 * kPi / 180.0;
    out << "<path d=\"M " << format_px(legend_cx) << " "
        << format_px(legend_cy) << " L "
        << format_px(legend_cx + legend_r * std::cos(a0)) << " "
        << format_px(legend_cy + legend_r * std::sin(a0)) << " A "
        << format_px(legend_r) << " " << format_px(legend_r) << " 0 0 1 "
        << format_px(legend_cx + legend_r * std::cos(a1)) << " "
        << format_px(legend_cy + legend_r * std::sin(a1)) << " Z\" fill=\""
        << hsv_hex(w * 10.0 + 5.0, 1.0, 1.0) << "\"/>\n";
  }
  out << "</g>\n</svg>\n";
  if (!out) fail("write failed: " + path);
}

}  // namespace dtp::io
