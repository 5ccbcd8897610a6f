#include "dtp/protocol.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "dtp/parallel.hpp"
#include "dtp/rng.hpp"

namespace dtp::protocol {

namespace {

constexpr std::uint64_t kStreamDraw = 0x44524157;  // "DRAW"

eval::DirMag dirmag_of_split(const codec::NormalizedSpectral& ns) {
  eval::DirMag d;
  d.direction = ns.direction.flatten_channel_major();
  d.mag_x = ns.mag_x;
  d.mag_y = ns.mag_y;
  return d;
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace

eval::DirMag dirmag_of_field(const codec::TrajectoryField& field, int k) {
  return dirmag_of_split(codec::split_normalize(codec::encode_field(field, k)));
}

std::vector<double> spectral_vec_of_field(const codec::TrajectoryField& field,
                                          int k) {
  return codec::encode_field(field, k).flatten_channel_major();
}

SplitSet prepare_split(const std::vector<scene::SceneSample>& samples, int k) {
  SplitSet out;
  out.gts.resize(samples.size());
  out.spectral.resize(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const auto spec = codec::encode_field(samples[i].truth, k);
    out.spectral[i] = spec.flatten_channel_major();
    out.gts[i] = dirmag_of_split(codec::split_normalize(spec));
  });
  return out;
}

ImageSampleSummary summarize_model_samples(
    const cvae::CvaeConfig& cfg, const nn::ParamStore& params,
    const scene::SceneSample& image, const eval::DirMag& gt,
    const std::vector<double>& gt_spectral,
    const std::vector<std::vector<double>>* mode_templates, int n, int n_max,
    std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("summarize: n must be >= 1");
  ImageSampleSummary out;
  out.dists.dim_dir = gt.direction.size();
  out.dists.d2_dir.reserve(n);
  out.dists.d2_mag.reserve(n);
  if (n_max > 0) out.min_ed_prefix.reserve(n_max);
  if (mode_templates) out.mode_counts.assign(mode_templates->size(), 0);

  const auto code = cvae::image_tower(cfg, params, image.features);
  Rng rng(seed);
  double running_min = std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) {
    const auto z = rng.normal_vec(static_cast<std::size_t>(cfg.latent_dim));
    const auto pred = cvae::decode(cfg, params, code, z);

    double d2d = 0.0;
    for (std::size_t i = 0; i < pred.direction.size(); ++i) {
      const double d = pred.direction[i] - gt.direction[i];
      d2d += d * d;
    }
    const double dmx = pred.mag_x - gt.mag_x;
    const double dmy = pred.mag_y - gt.mag_y;
    out.dists.d2_dir.push_back(d2d);
    out.dists.d2_mag.push_back(dmx * dmx + dmy * dmy);

    if (j < n_max || mode_templates) {
      const auto vec = cvae::prediction_spectral_vec(pred);
      if (j < n_max) {
        running_min = std::min(running_min, std::sqrt(sq_dist(vec, gt_spectral)));
        out.min_ed_prefix.push_back(running_min);
      }
      if (mode_templates)
        out.mode_counts[nearest_mode(vec, *mode_templates)]++;
    }
  }
  return out;
}

std::vector<eval::ParzenDists> model_parzen_dists(
    const cvae::CvaeConfig& cfg, const nn::ParamStore& params,
    const std::vector<scene::SceneSample>& images, const SplitSet& split,
    int n, std::uint64_t seed) {
  std::vector<eval::ParzenDists> dists(images.size());
  parallel_for(images.size(), [&](std::size_t i) {
    dists[i] = summarize_model_samples(cfg, params, images[i], split.gts[i],
                                       split.spectral[i], nullptr, n, 0,
                                       derive_seed(seed, kStreamDraw, i))
                   .dists;
  });
  return dists;
}

namespace {

NllResult score_with_bandwidths(const std::vector<eval::ParzenDists>& test_dists,
                                double h_dir, double h_mag, int n_boot,
                                std::uint64_t boot_seed) {
  NllResult res;
  res.h_dir = h_dir;
  res.h_mag = h_mag;
  res.per_image_ll.resize(test_dists.size());
  parallel_for(test_dists.size(), [&](std::size_t i) {
    res.per_image_ll[i] = eval::parzen_ll_from_dists(test_dists[i], h_dir, h_mag);
  });
  double mean = 0.0;
  for (double v : res.per_image_ll) mean += v;
  res.mean_ll = mean / static_cast<double>(res.per_image_ll.size());
  res.nll = -res.mean_ll;
  res.se = eval::bootstrap_se_mean(res.per_image_ll, n_boot, boot_seed);
  return res;
}

std::vector<eval::ParzenDists> singleton_dists(
    const std::vector<eval::DirMag>& outputs, const SplitSet& split) {
  std::vector<eval::ParzenDists> dists(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    dists[i] = eval::parzen_dists(
        std::span<const eval::DirMag>{&outputs[i], 1}, split.gts[i]);
  }
  return dists;
}

}  // namespace

NllResult parzen_protocol(const std::vector<eval::ParzenDists>& val_dists,
                          const std::vector<eval::ParzenDists>& test_dists,
                          const eval::ParzenConfig& pc, int n_boot,
                          std::uint64_t boot_seed) {
  const auto [h_dir, h_mag] = eval::gridsearch_bandwidth_dists(
      val_dists, pc.h_dir_grid, pc.h_mag_grid);
  NllResult res =
      score_with_bandwidths(test_dists, h_dir, h_mag, n_boot, boot_seed);
  res.bandwidth_fit = "val";
  return res;
}

NllResult single_gaussian_protocol(const std::vector<eval::DirMag>& val_outputs,
                                   const SplitSet& val,
                                   const std::vector<eval::DirMag>& test_outputs,
                                   const SplitSet& test,
                                   const eval::ParzenConfig& pc,
                                   bool fit_on_test, int n_boot,
                                   std::uint64_t boot_seed) {
  const auto test_dists = singleton_dists(test_outputs, test);
  const auto fit_dists =
      fit_on_test ? test_dists : singleton_dists(val_outputs, val);
  const auto [h_dir, h_mag] = eval::gridsearch_bandwidth_dists(
      fit_dists, pc.h_dir_grid, pc.h_mag_grid);
  NllResult res =
      score_with_bandwidths(test_dists, h_dir, h_mag, n_boot, boot_seed);
  res.bandwidth_fit = fit_on_test ? "test" : "val";
  return res;
}

std::vector<std::vector<double>> mode_template_spectra(
    const scene::SceneSpec& spec, const scene::SceneSample& sample, int k) {
  const auto& type = spec.scene_types.at(sample.type_id);
  std::vector<std::vector<double>> templates(type.modes.size());
  for (std::size_t m = 0; m < type.modes.size(); ++m) {
    const auto field = scene::render_mode_field(
        spec, sample.type_id, static_cast<int>(m), sample.center_row,
        sample.center_col);
    templates[m] = spectral_vec_of_field(field, k);
  }
  return templates;
}

int nearest_mode(const std::vector<double>& spectral,
                 const std::vector<std::vector<double>>& templates) {
  if (templates.empty())
    throw std::invalid_argument("nearest_mode: no templates");
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < templates.size(); ++m) {
    const double d = sq_dist(spectral, templates[m]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(m);
    }
  }
  return best;
}

}  // namespace dtp::protocol
