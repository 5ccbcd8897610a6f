#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "dtp/codec.hpp"
#include "dtp/cvae.hpp"

namespace dtp::eval {

// Samples and ground truths enter the likelihood machinery in split form:
// a flat normalized-direction vector plus the two magnitudes.
using DirMag = cvae::Prediction;

// Log-spaced 0.01 .. 10, 13 points.
std::vector<double> default_bandwidth_grid();

struct ParzenConfig {
  int n_samples = 800;
  std::vector<double> h_dir_grid = default_bandwidth_grid();
  std::vector<double> h_mag_grid = default_bandwidth_grid();
};

// log[(1/N) sum_j N(gt_dir; s_j_dir, h_dir^2 I) * N(gt_mag; s_j_mag, h_mag^2 I)]
// via log-sum-exp. Direction and magnitude factors carry their own bandwidth.
double parzen_log_likelihood(std::span<const DirMag> samples, const DirMag& gt,
                             double h_dir, double h_mag);

// Squared distances cached per (sample set, gt) so a bandwidth grid search
// does not recompute them.
struct ParzenDists {
  std::vector<double> d2_dir;
  std::vector<double> d2_mag;
  std::size_t dim_dir = 0;
};
ParzenDists parzen_dists(std::span<const DirMag> samples, const DirMag& gt);
double parzen_ll_from_dists(const ParzenDists& dists, double h_dir,
                            double h_mag);

// Maximizes the mean log-likelihood over the validation images. Grids must be
// sorted ascending; ties resolve to the smaller bandwidths.
std::pair<double, double> gridsearch_bandwidth(
    const std::vector<std::vector<DirMag>>& sample_sets,
    std::span<const DirMag> gts, std::span<const double> h_dir_grid,
    std::span<const double> h_mag_grid);

// Same search over precomputed distance caches (one per validation image);
// large sample sets can be reduced to these without being held in memory.
std::pair<double, double> gridsearch_bandwidth_dists(
    std::span<const ParzenDists> dists, std::span<const double> h_dir_grid,
    std::span<const double> h_mag_grid);

// Single-Gaussian log-density centered at a deterministic output; identical
// to the Parzen estimate with one sample.
double regressor_likelihood(const DirMag& output, const DirMag& gt,
                            double h_dir, double h_mag);

// mean_min_distance[n-1] = mean over images of the minimum Euclidean
// distance between ground truth and the first n samples, in recombined
// spectral coordinates. Nested prefixes make it non-increasing exactly.
struct MinEdCurve {
  std::vector<double> mean_min_distance;
};

// sampler(image_index, n, seed) -> n flat spectral vectors for that image.
using SpectralSampler = std::function<std::vector<std::vector<double>>(
    std::size_t, int, std::uint64_t)>;

MinEdCurve min_ed_curve(const SpectralSampler& sampler,
                        std::span<const std::vector<double>> gt_spectral,
                        int n_max, std::uint64_t seed);

// i.i.d. draws from N(output, h^2) in split coordinates.
std::vector<DirMag> gaussian_sampler_around(const DirMag& output, double h_dir,
                                            double h_mag, int n,
                                            std::uint64_t seed);

struct ClusterReport {
  std::vector<std::vector<double>> centroids;
  std::vector<int> counts;
  std::vector<int> assignment;          // per sample
  std::vector<double> mean_magnitude;   // per cluster: mean member RMS
  std::vector<int> by_magnitude;        // cluster ids, descending magnitude
  std::vector<double> sse_trace;        // within-cluster SSE per Lloyd iter
};

// Lloyd's algorithm with k-means++ seeding; <= 100 iterations or centroid
// shift < 1e-6; empty clusters re-seeded from the farthest point.
ClusterReport kmeans_cluster(std::span<const std::vector<double>> samples,
                             int k, std::uint64_t seed);

// Decode along the segment z(t) = (1-t) z_a + t z_b, t = 0 .. 1 in `steps`
// equal stops.
std::vector<cvae::Prediction> latent_interpolate(
    const cvae::CvaeConfig& cfg, const nn::ParamStore& params,
    std::span<const double> features, std::span<const double> z_a,
    std::span<const double> z_b, int steps);

// offset(t) = t * first_offset per cell. first_offsets is H*W*2, cell-major.
codec::TrajectoryField constant_velocity_extrapolate(
    std::span<const double> first_offsets, int height, int width, int t);
// Extrapolates the ground truth's own frame-1 motion over its horizon.
codec::TrajectoryField constant_velocity_from_truth(
    const codec::TrajectoryField& truth);

double bootstrap_se_mean(std::span<const double> values, int n_boot,
                         std::uint64_t seed);

}  // namespace dtp::eval
