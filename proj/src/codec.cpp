#include "dtp/codec.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dtp::codec {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr double kZeroMotionFloor = 1e-12;

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

TrajectoryField::TrajectoryField(int h, int w, int t)
    : height(h),
      width(w),
      horizon(t),
      data(static_cast<std::size_t>(h) * w * t * 2, 0.0) {
  require(h >= 1 && w >= 1 && t >= 1, "trajectory field dims must be >= 1");
}

void TrajectoryField::validate() const {
  require(height >= 1 && width >= 1 && horizon >= 1,
          "trajectory field dims must be >= 1");
  require(data.size() == static_cast<std::size_t>(height) * width * horizon * 2,
          "trajectory field data length mismatch");
  require(all_finite(data), "trajectory field contains non-finite values");
}

SpectralField::SpectralField(int h, int w, int k)
    : height(h),
      width(w),
      coeffs_per_axis(k),
      coeffs(static_cast<std::size_t>(h) * w * 2 * k, 0.0) {
  require(h >= 1 && w >= 1 && k >= 1, "spectral field dims must be >= 1");
}

void SpectralField::validate() const {
  require(height >= 1 && width >= 1 && coeffs_per_axis >= 1,
          "spectral field dims must be >= 1");
  require(coeffs.size() ==
              static_cast<std::size_t>(height) * width * 2 * coeffs_per_axis,
          "spectral field coeff length mismatch");
  require(all_finite(coeffs), "spectral field contains non-finite values");
}

std::vector<double> SpectralField::flatten_channel_major() const {
  const int k = coeffs_per_axis;
  std::vector<double> flat(dim());
  std::size_t i = 0;
  for (int axis = 0; axis < 2; ++axis) {
    for (int c0 = 0; c0 < k; ++c0) {
      for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) flat[i++] = at(r, c, axis, c0);
      }
    }
  }
  return flat;
}

SpectralField SpectralField::from_channel_major(std::span<const double> flat,
                                                int h, int w, int k) {
  require(flat.size() == static_cast<std::size_t>(h) * w * 2 * k,
          "channel-major buffer length mismatch");
  SpectralField out(h, w, k);
  std::size_t i = 0;
  for (int axis = 0; axis < 2; ++axis) {
    for (int c0 = 0; c0 < k; ++c0) {
      for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) out.at(r, c, axis, c0) = flat[i++];
      }
    }
  }
  return out;
}

std::vector<double> dct_forward(std::span<const double> signal) {
  const int t = static_cast<int>(signal.size());
  require(t >= 1, "dct_forward: empty signal");
  std::vector<double> out(t);
  const double c0 = std::sqrt(1.0 / t);
  const double ck = std::sqrt(2.0 / t);
  for (int k = 0; k < t; ++k) {
    double acc = 0.0;
    const double w = kPi * k / (2.0 * t);
    for (int n = 0; n < t; ++n) acc += signal[n] * std::cos(w * (2 * n + 1));
    out[k] = (k == 0 ? c0 : ck) * acc;
  }
  return out;
}

std::vector<double> dct_inverse(std::span<const double> coeffs, int t) {
  const int k_count = static_cast<int>(coeffs.size());
  require(k_count >= 1, "dct_inverse: empty coefficients");
  require(t >= k_count, "dct_inverse: T must be >= coefficient count");
  std::vector<double> out(t, 0.0);
  const double c0 = std::sqrt(1.0 / t);
  const double ck = std::sqrt(2.0 / t);
  for (int n = 0; n < t; ++n) {
    double acc = 0.0;
    for (int k = 0; k < k_count; ++k) {
      const double basis = std::cos(kPi * k * (2 * n + 1) / (2.0 * t));
      acc += (k == 0 ? c0 : ck) * coeffs[k] * basis;
    }
    out[n] = acc;
  }
  return out;
}

SpectralField encode_field(const TrajectoryField& traj, int k) {
  traj.validate();
  require(k >= 1 && k <= traj.horizon,
          "encode_field: K out of range [1, T], K=" + std::to_string(k) +
              " T=" + std::to_string(traj.horizon));
  const int t = traj.horizon;
  SpectralField out(traj.height, traj.width, k);
  const double c0 = std::sqrt(1.0 / t);
  const double ck = std::sqrt(2.0 / t);
  std::vector<double> signal(t);
  for (int r = 0; r < traj.height; ++r) {
    for (int c = 0; c < traj.width; ++c) {
      for (int axis = 0; axis < 2; ++axis) {
        for (int n = 0; n < t; ++n) signal[n] = traj.at(r, c, n, axis);
        for (int kk = 0; kk < k; ++kk) {
          double acc = 0.0;
          const double w = kPi * kk / (2.0 * t);
          for (int n = 0; n < t; ++n) acc += signal[n] * std::cos(w * (2 * n + 1));
          out.at(r, c, axis, kk) = (kk == 0 ? c0 : ck) * acc;
        }
      }
    }
  }
  return out;
}

TrajectoryField decode_field(const SpectralField& spec, int t) {
  spec.validate();
  require(t >= spec.coeffs_per_axis,
          "decode_field: T must be >= K, T=" + std::to_string(t) +
              " K=" + std::to_string(spec.coeffs_per_axis));
  const int k = spec.coeffs_per_axis;
  TrajectoryField out(spec.height, spec.width, t);
  const double c0 = std::sqrt(1.0 / t);
  const double ck = std::sqrt(2.0 / t);
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      for (int axis = 0; axis < 2; ++axis) {
        for (int n = 0; n < t; ++n) {
          double acc = 0.0;
          for (int kk = 0; kk < k; ++kk) {
            const double basis = std::cos(kPi * kk * (2 * n + 1) / (2.0 * t));
            acc += (kk == 0 ? c0 : ck) * spec.at(r, c, axis, kk) * basis;
          }
          out.at(r, c, n, axis) = acc;
        }
      }
    }
  }
  return out;
}

NormalizedSpectral split_normalize(const SpectralField& spec) {
  spec.validate();
  NormalizedSpectral ns;
  ns.direction = spec;
  const std::size_t per_axis =
      static_cast<std::size_t>(spec.height) * spec.width * spec.coeffs_per_axis;
  double sum2[2] = {0.0, 0.0};
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      for (int axis = 0; axis < 2; ++axis) {
        for (int k = 0; k < spec.coeffs_per_axis; ++k) {
          const double v = spec.at(r, c, axis, k);
          sum2[axis] += v * v;
        }
      }
    }
  }
  const double mags[2] = {std::sqrt(sum2[0] / static_cast<double>(per_axis)),
                          std::sqrt(sum2[1] / static_cast<double>(per_axis))};
  ns.mag_x = mags[0];
  ns.mag_y = mags[1];
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      for (int axis = 0; axis < 2; ++axis) {
        for (int k = 0; k < spec.coeffs_per_axis; ++k) {
          double& v = ns.direction.at(r, c, axis, k);
          v = mags[axis] < kZeroMotionFloor ? 0.0 : v / mags[axis];
        }
      }
    }
  }
  return ns;
}

SpectralField recombine(const NormalizedSpectral& ns) {
  ns.direction.validate();
  SpectralField out = ns.direction;
  for (int r = 0; r < out.height; ++r) {
    for (int c = 0; c < out.width; ++c) {
      for (int axis = 0; axis < 2; ++axis) {
        const double mag = axis == 0 ? ns.mag_x : ns.mag_y;
        for (int k = 0; k < out.coeffs_per_axis; ++k)
          out.at(r, c, axis, k) *= mag;
      }
    }
  }
  return out;
}

}  // namespace dtp::codec
