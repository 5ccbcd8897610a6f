#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dtp/eval.hpp"
#include "dtp/io.hpp"
#include "dtp/scene.hpp"

// Higher-level evaluation pipelines composed from the eval primitives:
// per-image sample reduction, bandwidth selection on held-out images, Parzen
// scoring, and bootstrap error bars. Samples are drawn per image and reduced
// immediately; full sample sets are never held across images.

namespace dtp::protocol {

// Per-image split ground truths and recombined spectral vectors.
struct SplitSet {
  std::vector<eval::DirMag> gts;
  std::vector<std::vector<double>> spectral;
};
SplitSet prepare_split(const std::vector<scene::SceneSample>& samples, int k);

eval::DirMag dirmag_of_field(const codec::TrajectoryField& field, int k);
std::vector<double> spectral_vec_of_field(const codec::TrajectoryField& field,
                                          int k);

// Everything the scoring protocols need from one image's n model samples.
struct ImageSampleSummary {
  eval::ParzenDists dists;             // squared distances to the split gt
  std::vector<double> min_ed_prefix;   // running min distance over the first
                                       // n_max samples, spectral space
  std::vector<int> mode_counts;        // nearest-template tallies over all n
};

// Draws n predictions for one image and reduces them on the fly.
ImageSampleSummary summarize_model_samples(
    const cvae::CvaeConfig& cfg, const nn::ParamStore& params,
    const scene::SceneSample& image, const eval::DirMag& gt,
    const std::vector<double>& gt_spectral,
    const std::vector<std::vector<double>>* mode_templates, int n, int n_max,
    std::uint64_t seed);

// Parzen distance caches for a whole split, parallel over images.
std::vector<eval::ParzenDists> model_parzen_dists(
    const cvae::CvaeConfig& cfg, const nn::ParamStore& params,
    const std::vector<scene::SceneSample>& images, const SplitSet& split,
    int n, std::uint64_t seed);

struct NllResult {
  double mean_ll = 0.0;
  double nll = 0.0;  // -mean_ll
  double se = 0.0;   // bootstrap SE of mean_ll over test images
  double h_dir = 0.0;
  double h_mag = 0.0;
  std::string bandwidth_fit;  // "val" or "test"
  std::vector<double> per_image_ll;
};

// Parzen scoring with bandwidths grid-searched on the validation caches.
NllResult parzen_protocol(const std::vector<eval::ParzenDists>& val_dists,
                          const std::vector<eval::ParzenDists>& test_dists,
                          const eval::ParzenConfig& pc, int n_boot,
                          std::uint64_t boot_seed);

// Single-Gaussian scoring for deterministic outputs (regressor or the
// constant-velocity stand-in); bandwidths fit on test upper-bounds the
// baseline the way the original protocol does.
NllResult single_gaussian_protocol(const std::vector<eval::DirMag>& val_outputs,
                                   const SplitSet& val,
                                   const std::vector<eval::DirMag>& test_outputs,
                                   const SplitSet& test,
                                   const eval::ParzenConfig& pc,
                                   bool fit_on_test, int n_boot,
                                   std::uint64_t boot_seed);

// Noiseless per-mode template spectra for a sample's scene type at its actor
// position; used for nearest-mode assignment probes.
std::vector<std::vector<double>> mode_template_spectra(
    const scene::SceneSpec& spec, const scene::SceneSample& sample, int k);
int nearest_mode(const std::vector<double>& spectral,
                 const std::vector<std::vector<double>>& templates);

}  // namespace dtp::protocol
