#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dtp/codec.hpp"
#include "dtp/nn.hpp"
#include "dtp/rng.hpp"

namespace dtp::cvae {

// Latent-conditioned trajectory model. Three dense towers: an image tower
// shared by all pathways, an encoder tower producing the posterior
// Q(z | X, Y) (training only), and a decoder tower that fuses the image code
// with z and emits the normalized direction field plus the two magnitudes.
struct CvaeConfig {
  int height = 16;
  int width = 20;
  int coeffs_per_axis = 5;   // K
  int feature_channels = 5;  // F
  int latent_dim = 8;        // 0 disables the latent pathway entirely

  // Hidden widths; the last image width is the image code dimension, which
  // must be a multiple of latent_dim so z can be replicated across it.
  std::vector<int> image_hidden = {64, 48};
  std::vector<int> encoder_hidden = {48};
  std::vector<int> decoder_hidden = {96};

  // How the replicated z joins the image code at the decoder input.
  enum class Fusion { Gating, Additive };
  Fusion fusion = Fusion::Gating;

  enum class Activation { Tanh, Relu };
  Activation activation = Activation::Tanh;

  // Magnitudes from a disjoint trunk fed by the image code alone (default):
  // the latent variables then encode only the normalized trajectories, and
  // magnitude estimates stay put as z varies. The alternative shares the
  // z-fused decoder trunk, conditioning magnitudes on z as well.
  bool separate_magnitude_trunk = true;

  // Pool the direction field to its 2K channel means before the encoder
  // sees it. The posterior is then independent of spatial location, so the
  // latent code cannot smuggle actor placement past the image pathway.
  bool pooled_encoder = true;

  double kl_weight = 1.0;

  int input_dim() const { return feature_channels * height * width; }
  int direction_dim() const { return height * width * 2 * coeffs_per_axis; }
  int image_code_dim() const {
    return image_hidden.empty() ? input_dim() : image_hidden.back();
  }
  int encoder_input_dim() const {
    return image_code_dim() +
           (pooled_encoder ? 2 * coeffs_per_axis : direction_dim()) + 2;
  }

  void validate() const;

  nn::NetSpec image_spec() const;
  nn::NetSpec encoder_trunk_spec() const;
  nn::NetSpec decoder_trunk_spec() const;
  nn::NetSpec magnitude_trunk_spec() const;
};

enum class ModelKind { Cvae, Regressor };

struct GaussianPosterior {
  std::vector<double> mu;         // mu'
  std::vector<double> log_sigma;  // log sigma', exponentiated on use
  std::vector<double> sigma() const;
};

struct Prediction {
  std::vector<double> direction;  // channel-major, direction_dim() entries
  double mag_x = 0.0;
  double mag_y = 0.0;
};

struct LossBreakdown {
  double direction = 0.0;
  double mag_x = 0.0;
  double mag_y = 0.0;
  double kl = 0.0;  // unweighted
  double total = 0.0;
};

// Target in the form the loss consumes: flattened unit-RMS direction plus
// magnitudes.
struct PreparedTarget {
  std::vector<double> direction;
  double mag_x = 0.0;
  double mag_y = 0.0;
};

PreparedTarget prepare_target(const codec::NormalizedSpectral& ns);
PreparedTarget prepare_target(const codec::TrajectoryField& truth, int k);

// Canonical parameter layout for a model kind; Glorot-uniform weights, zero
// biases.
nn::ParamStore make_params(const CvaeConfig& cfg, ModelKind kind, Rng& rng);

std::vector<double> image_tower(const CvaeConfig& cfg,
                                const nn::ParamStore& params,
                                std::span<const double> features);

GaussianPosterior encode(const CvaeConfig& cfg, const nn::ParamStore& params,
                         std::span<const double> image_code,
                         const codec::NormalizedSpectral& y);
GaussianPosterior encode(const CvaeConfig& cfg, const nn::ParamStore& params,
                         std::span<const double> image_code,
                         const PreparedTarget& y);

// z = mu' + eta o sigma'
std::vector<double> reparameterize(const GaussianPosterior& post,
                                   std::span<const double> eta);

Prediction decode(const CvaeConfig& cfg, const nn::ParamStore& params,
                  std::span<const double> image_code,
                  std::span<const double> z);

// 1/2 sum_d (mu_d^2 + sigma_d^2 - 1 - ln sigma_d^2)
double kl_std_normal(const GaussianPosterior& post);

// Decoder with the latent fusion inactive (z = 0).
Prediction regressor_forward(const CvaeConfig& cfg,
                             const nn::ParamStore& params,
                             std::span<const double> features);

// ||Y_norm - Y_norm_hat||^2 + (M_x - M_x_hat)^2 + (M_y - M_y_hat)^2
//   + kl_weight * KL[Q || N(0,1)]
// For ModelKind::Regressor the KL term is absent and z is fixed to 0.
LossBreakdown loss(const CvaeConfig& cfg, const nn::ParamStore& params,
                   std::span<const double> features, const PreparedTarget& y,
                   std::span<const double> eta, ModelKind kind);
LossBreakdown loss(const CvaeConfig& cfg, const nn::ParamStore& params,
                   std::span<const double> features,
                   const codec::NormalizedSpectral& y,
                   std::span<const double> eta, ModelKind kind);

// Same value plus exact reverse-mode gradients of every parameter,
// accumulated (+=) into grads. kl_weight overrides cfg.kl_weight when >= 0
// (the trainer uses this for warmup schedules).
LossBreakdown loss_backward(const CvaeConfig& cfg,
                            const nn::ParamStore& params,
                            std::span<const double> features,
                            const PreparedTarget& y,
                            std::span<const double> eta, ModelKind kind,
                            nn::GradStore& grads, double kl_weight = -1.0);

// n prior draws z ~ N(0, I) decoded against one image; never reads Y and
// never touches encoder parameters.
std::vector<Prediction> sample_predictions(const CvaeConfig& cfg,
                                           const nn::ParamStore& params,
                                           std::span<const double> features,
                                           int n, std::uint64_t seed);

codec::SpectralField prediction_to_spectral(const CvaeConfig& cfg,
                                            const Prediction& pred);
codec::TrajectoryField prediction_to_field(const CvaeConfig& cfg,
                                           const Prediction& pred, int t);

// Recombined spectral coordinates as a flat channel-major vector; the first
// half of the direction block is the x axis, so recombination is a blockwise
// scale by the magnitudes.
std::vector<double> prediction_spectral_vec(const Prediction& pred);

}  // namespace dtp::cvae
