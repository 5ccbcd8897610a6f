#include "dtp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "dtp/parallel.hpp"
#include "dtp/rng.hpp"

namespace dtp::eval {

namespace {

constexpr double kLn2Pi = 1.83787706640934548356065947281123527;
constexpr std::uint64_t kStreamMinEd = 0x4d494e45;  // "MINE"

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace

std::vector<double> default_bandwidth_grid() {
  std::vector<double> grid(13);
  for (int i = 0; i < 13; ++i)
    grid[i] = std::pow(10.0, -2.0 + 3.0 * i / 12.0);
  return grid;
}

ParzenDists parzen_dists(std::span<const DirMag> samples, const DirMag& gt) {
  require(!samples.empty(), "parzen: at least one sample required");
  ParzenDists out;
  out.dim_dir = gt.direction.size();
  out.d2_dir.resize(samples.size());
  out.d2_mag.resize(samples.size());
  const double gm[2] = {gt.mag_x, gt.mag_y};
  for (std::size_t j = 0; j < samples.size(); ++j) {
    require(samples[j].direction.size() == out.dim_dir,
            "parzen: sample direction dim mismatch");
    out.d2_dir[j] = sq_dist(samples[j].direction, gt.direction);
    const double dmx = samples[j].mag_x - gm[0];
    const double dmy = samples[j].mag_y - gm[1];
    out.d2_mag[j] = dmx * dmx + dmy * dmy;
  }
  return out;
}

double parzen_ll_from_dists(const ParzenDists& dists, double h_dir,
                            double h_mag) {
  require(h_dir > 0.0 && h_mag > 0.0, "parzen: bandwidths must be > 0");
  const std::size_t n = dists.d2_dir.size();
  const double d_dir = static_cast<double>(dists.dim_dir);
  const double norm = -0.5 * d_dir * (kLn2Pi + 2.0 * std::log(h_dir)) -
                      0.5 * 2.0 * (kLn2Pi + 2.0 * std::log(h_mag));
  // Exponents only; the normalizer is shared by every component.
  std::vector<double> ex(n);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    ex[j] = -0.5 * dists.d2_dir[j] / (h_dir * h_dir) -
            0.5 * dists.d2_mag[j] / (h_mag * h_mag);
    mx = std::max(mx, ex[j]);
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) sum += std::exp(ex[j] - mx);
  return norm + mx + std::log(sum) - std::log(static_cast<double>(n));
}

double parzen_log_likelihood(std::span<const DirMag> samples, const DirMag& gt,
                             double h_dir, double h_mag) {
  return parzen_ll_from_dists(parzen_dists(samples, gt), h_dir, h_mag);
}

std::pair<double, double> gridsearch_bandwidth_dists(
    std::span<const ParzenDists> dists, std::span<const double> h_dir_grid,
    std::span<const double> h_mag_grid) {
  require(!dists.empty(), "gridsearch: no validation images");
  require(!h_dir_grid.empty() && !h_mag_grid.empty(),
          "gridsearch: grids must be nonempty");
  double best_ll = -std::numeric_limits<double>::infinity();
  std::pair<double, double> best{h_dir_grid[0], h_mag_grid[0]};
  for (double hd : h_dir_grid) {
    for (double hm : h_mag_grid) {
      double mean = 0.0;
      for (const auto& d : dists) mean += parzen_ll_from_dists(d, hd, hm);
      mean /= static_cast<double>(dists.size());
      if (mean > best_ll) {  // strict: ties keep the smaller bandwidths
        best_ll = mean;
        best = {hd, hm};
      }
    }
  }
  return best;
}

std::pair<double, double> gridsearch_bandwidth(
    const std::vector<std::vector<DirMag>>& sample_sets,
    std::span<const DirMag> gts, std::span<const double> h_dir_grid,
    std::span<const double> h_mag_grid) {
  require(!sample_sets.empty() && sample_sets.size() == gts.size(),
          "gridsearch: validation sets and ground truths must align");
  std::vector<ParzenDists> dists(sample_sets.size());
  parallel_for(sample_sets.size(), [&](std::size_t i) {
    dists[i] = parzen_dists(sample_sets[i], gts[i]);
  });
  return gridsearch_bandwidth_dists(dists, h_dir_grid, h_mag_grid);
}

double regressor_likelihood(const DirMag& output, const DirMag& gt,
                            double h_dir, double h_mag) {
  return parzen_log_likelihood(std::span<const DirMag>{&output, 1}, gt, h_dir,
                               h_mag);
}

MinEdCurve min_ed_curve(const SpectralSampler& sampler,
                        std::span<const std::vector<double>> gt_spectral,
                        int n_max, std::uint64_t seed) {
  require(n_max >= 1, "min_ed_curve: n_max must be >= 1");
  require(!gt_spectral.empty(), "min_ed_curve: empty test set");
  const std::size_t n_images = gt_spectral.size();
  std::vector<std::vector<double>> per_image(n_images);
  parallel_for(n_images, [&](std::size_t i) {
    const auto samples =
        sampler(i, n_max, derive_seed(seed, kStreamMinEd, i));
    require(static_cast<int>(samples.size()) == n_max,
            "min_ed_curve: sampler returned wrong count");
    auto& mins = per_image[i];
    mins.resize(n_max);
    double running = std::numeric_limits<double>::infinity();
    for (int n = 0; n < n_max; ++n) {
      running = std::min(running,
                         std::sqrt(sq_dist(samples[n], gt_spectral[i])));
      mins[n] = running;
    }
  });
  MinEdCurve curve;
  curve.mean_min_distance.assign(n_max, 0.0);
  for (std::size_t i = 0; i < n_images; ++i) {  // index order
    for (int n = 0; n < n_max; ++n)
      curve.mean_min_distance[n] += per_image[i][n];
  }
  for (double& v : curve.mean_min_distance)
    v /= static_cast<double>(n_images);
  return curve;
}

std::vector<DirMag> gaussian_sampler_around(const DirMag& output, double h_dir,
                                            double h_mag, int n,
                                            std::uint64_t seed) {
  require(n >= 1, "gaussian_sampler_around: n must be >= 1");
  require(h_dir > 0.0 && h_mag > 0.0,
          "gaussian_sampler_around: bandwidths must be > 0");
  Rng rng(seed);
  std::vector<DirMag> out(n);
  for (auto& s : out) {
    s.direction.resize(output.direction.size());
    for (std::size_t i = 0; i < s.direction.size(); ++i)
      s.direction[i] = output.direction[i] + h_dir * rng.normal();
    s.mag_x = output.mag_x + h_mag * rng.normal();
    s.mag_y = output.mag_y + h_mag * rng.normal();
  }
  return out;
}

ClusterReport kmeans_cluster(std::span<const std::vector<double>> samples,
                             int k, std::uint64_t seed) {
  require(k >= 1, "kmeans: k must be >= 1");
  require(static_cast<std::size_t>(k) <= samples.size(),
          "kmeans: k exceeds sample count");
  const std::size_t n = samples.size();
  const std::size_t dim = samples[0].size();
  Rng rng(seed);

  // k-means++ seeding.
  std::vector<std::vector<double>> centroids;
  centroids.reserve(k);
  centroids.push_back(
      samples[static_cast<std::size_t>(rng.uniform_int(0, n - 1))]);
  std::vector<double> d2(n);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& cen : centroids)
        best = std::min(best, sq_dist(samples[i], cen));
      d2[i] = best;
      total += best;
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double u = rng.uniform01() * total;
      double cum = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        cum += d2[i];
        if (u < cum) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(rng.uniform_int(0, n - 1));
    }
    centroids.push_back(samples[pick]);
  }

  ClusterReport report;
  report.assignment.assign(n, 0);
  std::vector<double> dist_to_centroid(n, 0.0);
  for (int iter = 0; iter < 100; ++iter) {
    // Assign.
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int c = 0; c < k; ++c) {
        const double d = sq_dist(samples[i], centroids[c]);
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      report.assignment[i] = arg;
      dist_to_centroid[i] = best;
      sse += best;
    }
    report.sse_trace.push_back(sse);

    // Re-seed empty clusters from the farthest point.
    std::vector<int> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) counts[report.assignment[i]]++;
    bool reseeded = false;
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[report.assignment[i]] <= 1) continue;  // keep clusters alive
        if (dist_to_centroid[i] > far_d) {
          far_d = dist_to_centroid[i];
          far = i;
        }
      }
      centroids[c] = samples[far];
      counts[report.assignment[far]]--;
      report.assignment[far] = c;
      dist_to_centroid[far] = 0.0;
      counts[c] = 1;
      reseeded = true;
    }

    // Update.
    std::vector<std::vector<double>> next(k, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      auto& acc = next[report.assignment[i]];
      const auto& s = samples[i];
      for (std::size_t d = 0; d < dim; ++d) acc[d] += s[d];
    }
    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t d = 0; d < dim; ++d)
        next[c][d] /= static_cast<double>(counts[c]);
      shift = std::max(shift, std::sqrt(sq_dist(next[c], centroids[c])));
      centroids[c] = std::move(next[c]);
    }
    if (shift < 1e-6 && !reseeded) break;
  }

  // Final assignment against the final centroids.
  report.centroids = centroids;
  report.counts.assign(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int c = 0; c < k; ++c) {
      const double d = sq_dist(samples[i], centroids[c]);
      if (d < best) {
        best = d;
        arg = c;
      }
    }
    report.assignment[i] = arg;
    report.counts[arg]++;
  }
  report.mean_magnitude.assign(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s2 = 0.0;
    for (double v : samples[i]) s2 += v * v;
    report.mean_magnitude[report.assignment[i]] +=
        std::sqrt(s2 / static_cast<double>(dim));
  }
  for (int c = 0; c < k; ++c) {
    if (report.counts[c] > 0) report.mean_magnitude[c] /= report.counts[c];
  }
  report.by_magnitude.resize(k);
  for (int c = 0; c < k; ++c) report.by_magnitude[c] = c;
  std::stable_sort(report.by_magnitude.begin(), report.by_magnitude.end(),
                   [&](int a, int b) {
                     return report.mean_magnitude[a] > report.mean_magnitude[b];
                   });
  return report;
}

std::vector<cvae::Prediction> latent_interpolate(
    const cvae::CvaeConfig& cfg, const nn::ParamStore& params,
    std::span<const double> features, std::span<const double> z_a,
    std::span<const double> z_b, int steps) {
  require(steps >= 2, "latent_interpolate: steps must be >= 2");
  require(z_a.size() == z_b.size() &&
              static_cast<int>(z_a.size()) == cfg.latent_dim,
          "latent_interpolate: z dim mismatch");
  const auto code = cvae::image_tower(cfg, params, features);
  std::vector<cvae::Prediction> out;
  out.reserve(steps);
  std::vector<double> z(z_a.size());
  for (int s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) / (steps - 1);
    for (std::size_t i = 0; i < z.size(); ++i)
      z[i] = (1.0 - t) * z_a[i] + t * z_b[i];
    out.push_back(cvae::decode(cfg, params, code, z));
  }
  return out;
}

codec::TrajectoryField constant_velocity_extrapolate(
    std::span<const double> first_offsets, int height, int width, int t) {
  require(t >= 1, "constant_velocity: T must be >= 1");
  require(first_offsets.size() ==
              static_cast<std::size_t>(height) * width * 2,
          "constant_velocity: first offset buffer size mismatch");
  codec::TrajectoryField out(height, width, t);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const std::size_t base = static_cast<std::size_t>(r * width + c) * 2;
      for (int n = 0; n < t; ++n) {
        out.at(r, c, n, 0) = (n + 1) * first_offsets[base];
        out.at(r, c, n, 1) = (n + 1) * first_offsets[base + 1];
      }
    }
  }
  return out;
}

codec::TrajectoryField constant_velocity_from_truth(
    const codec::TrajectoryField& truth) {
  std::vector<double> first(static_cast<std::size_t>(truth.height) *
                            truth.width * 2);
  for (int r = 0; r < truth.height; ++r) {
    for (int c = 0; c < truth.width; ++c) {
      first[static_cast<std::size_t>(r * truth.width + c) * 2] =
          truth.at(r, c, 0, 0);
      first[static_cast<std::size_t>(r * truth.width + c) * 2 + 1] =
          truth.at(r, c, 0, 1);
    }
  }
  return constant_velocity_extrapolate(first, truth.height, truth.width,
                                       truth.horizon);
}

double bootstrap_se_mean(std::span<const double> values, int n_boot,
                         std::uint64_t seed) {
  require(!values.empty(), "bootstrap: empty values");
  require(n_boot >= 2, "bootstrap: need at least 2 resamples");
  Rng rng(seed);
  const std::size_t n = values.size();
  std::vector<double> means(n_boot);
  for (int b = 0; b < n_boot; ++b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += values[static_cast<std::size_t>(rng.uniform_int(0, n - 1))];
    means[b] = acc / static_cast<double>(n);
  }
  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= n_boot;
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  return std::sqrt(var / n_boot);
}

}  // namespace dtp::eval
