#pragma once

#include <span>
#include <vector>

namespace dtp::codec {

// Per-cell motion tracks over a grid. Offsets are (dx, dy) in grid units,
// measured at frames 1..T relative to the cell's start position.
// Layout: data[((r*width + c)*horizon + t)*2 + axis], axis 0 = x, 1 = y.
struct TrajectoryField {
  int height = 0;
  int width = 0;
  int horizon = 0;  // T
  std::vector<double> data;

  TrajectoryField() = default;
  TrajectoryField(int h, int w, int t);

  double& at(int r, int c, int t, int axis) {
    return data[(static_cast<std::size_t>(r * width + c) * horizon + t) * 2 +
                axis];
  }
  double at(int r, int c, int t, int axis) const {
    return data[(static_cast<std::size_t>(r * width + c) * horizon + t) * 2 +
                axis];
  }

  void validate() const;  // throws std::invalid_argument
};

// Truncated-DCT representation: K retained coefficients per axis per cell.
// Layout: coeffs[((r*width + c)*2 + axis)*coeffs_per_axis + k].
struct SpectralField {
  int height = 0;
  int width = 0;
  int coeffs_per_axis = 0;  // K
  std::vector<double> coeffs;

  SpectralField() = default;
  SpectralField(int h, int w, int k);

  double& at(int r, int c, int axis, int k) {
    return coeffs[(static_cast<std::size_t>(r * width + c) * 2 + axis) *
                      coeffs_per_axis +
                  k];
  }
  double at(int r, int c, int axis, int k) const {
    return coeffs[(static_cast<std::size_t>(r * width + c) * 2 + axis) *
                      coeffs_per_axis +
                  k];
  }

  std::size_t dim() const { return coeffs.size(); }  // H*W*2K

  // Canonical evaluation layout: 2K channels by height by width, x-coefficient
  // channels 0..K-1 first, then y. With 16x20 and K=5 this is the 10x16x20
  // space (3200 dimensions). The x block is the first K*H*W entries.
  std::vector<double> flatten_channel_major() const;
  static SpectralField from_channel_major(std::span<const double> flat, int h,
                                          int w, int k);

  void validate() const;
};

// Spectral field split into a unit-RMS direction plus per-axis magnitudes.
struct NormalizedSpectral {
  SpectralField direction;
  double mag_x = 0.0;
  double mag_y = 0.0;
};

// Orthonormal DCT-II of the full signal:
//   X_k = c_k * sum_n x_n cos(pi*(2n+1)*k / (2T)),
//   c_0 = sqrt(1/T), c_k = sqrt(2/T) for k >= 1.
std::vector<double> dct_forward(std::span<const double> signal);

// Inverse of dct_forward; accepts K <= T coefficients and zero-pads the rest.
std::vector<double> dct_inverse(std::span<const double> coeffs, int t);

SpectralField encode_field(const TrajectoryField& traj, int k);
TrajectoryField decode_field(const SpectralField& spec, int t);

NormalizedSpectral split_normalize(const SpectralField& spec);
SpectralField recombine(const NormalizedSpectral& ns);

}  // namespace dtp::codec
