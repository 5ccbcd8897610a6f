#include "dtp/cvae.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dtp::cvae {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x > 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

nn::NetSpec mlp_spec(int input_dim, const std::vector<int>& hidden,
                     CvaeConfig::Activation act) {
  nn::NetSpec spec;
  int dim = input_dim;
  for (int h : hidden) {
    spec.push_back(nn::affine(dim, h));
    spec.push_back(act == CvaeConfig::Activation::Tanh ? nn::tanh_layer()
                                                       : nn::relu());
    dim = h;
  }
  return spec;
}

nn::NetSpec head_spec(int in, int out) { return {nn::affine(in, out)}; }

// Everything the backward pass needs from one forward evaluation.
struct ForwardPieces {
  nn::Tape img_tape, enc_tape, mu_tape, ls_tape, dec_tape, dir_tape, mag_trunk_tape,
      mag_tape;
  std::vector<double> code;
  GaussianPosterior post;
  std::vector<double> z;
  std::vector<double> fused;
  std::vector<double> dir_hat;
  std::vector<double> mag_pre;
};

}  // namespace

void CvaeConfig::validate() const {
  require(height >= 1 && width >= 1 && coeffs_per_axis >= 1 &&
              feature_channels >= 1,
          "model dims must be >= 1");
  require(latent_dim >= 0, "latent_dim must be >= 0");
  for (int h : image_hidden) require(h >= 1, "hidden widths must be >= 1");
  for (int h : encoder_hidden) require(h >= 1, "hidden widths must be >= 1");
  for (int h : decoder_hidden) require(h >= 1, "hidden widths must be >= 1");
  if (latent_dim > 0) {
    require(image_code_dim() % latent_dim == 0,
            "image code dim must be a multiple of latent_dim");
  }
  require(kl_weight >= 0.0, "kl_weight must be >= 0");
}

nn::NetSpec CvaeConfig::image_spec() const {
  return mlp_spec(input_dim(), image_hidden, activation);
}
nn::NetSpec CvaeConfig::encoder_trunk_spec() const {
  return mlp_spec(encoder_input_dim(), encoder_hidden, activation);
}
nn::NetSpec CvaeConfig::decoder_trunk_spec() const {
  return mlp_spec(image_code_dim(), decoder_hidden, activation);
}
nn::NetSpec CvaeConfig::magnitude_trunk_spec() const {
  return mlp_spec(image_code_dim(), decoder_hidden, activation);
}

std::vector<double> GaussianPosterior::sigma() const {
  std::vector<double> s(log_sigma.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::exp(log_sigma[i]);
  return s;
}

PreparedTarget prepare_target(const codec::NormalizedSpectral& ns) {
  PreparedTarget t;
  t.direction = ns.direction.flatten_channel_major();
  t.mag_x = ns.mag_x;
  t.mag_y = ns.mag_y;
  return t;
}

PreparedTarget prepare_target(const codec::TrajectoryField& truth, int k) {
  return prepare_target(codec::split_normalize(codec::encode_field(truth, k)));
}

nn::ParamStore make_params(const CvaeConfig& cfg, ModelKind kind, Rng& rng) {
  cfg.validate();
  nn::ParamStore params;
  nn::init_mlp_params(params, cfg.image_spec(), "img", rng);
  if (kind == ModelKind::Cvae && cfg.latent_dim > 0) {
    const int enc_out = cfg.encoder_hidden.empty() ? cfg.encoder_input_dim()
                                                   : cfg.encoder_hidden.back();
    nn::init_mlp_params(params, cfg.encoder_trunk_spec(), "enc", rng);
    nn::init_mlp_params(params, head_spec(enc_out, cfg.latent_dim), "enc_mu",
                        rng);
    nn::init_mlp_params(params, head_spec(enc_out, cfg.latent_dim), "enc_ls",
                        rng);
  }
  const int dec_out = cfg.decoder_hidden.empty() ? cfg.image_code_dim()
                                                 : cfg.decoder_hidden.back();
  nn::init_mlp_params(params, cfg.decoder_trunk_spec(), "dec", rng);
  nn::init_mlp_params(params, head_spec(dec_out, cfg.direction_dim()),
                      "dec_dir", rng);
  if (cfg.separate_magnitude_trunk) {
    nn::init_mlp_params(params, cfg.magnitude_trunk_spec(), "mag", rng);
    nn::init_mlp_params(params, head_spec(dec_out, 2), "dec_mag", rng);
  } else {
    nn::init_mlp_params(params, head_spec(dec_out, 2), "dec_mag", rng);
  }
  return params;
}

std::vector<double> image_tower(const CvaeConfig& cfg,
                                const nn::ParamStore& params,
                                std::span<const double> features) {
  require(static_cast<int>(features.size()) == cfg.input_dim(),
          "image_tower: feature dim mismatch");
  return nn::forward(cfg.image_spec(), params, "img", features);
}

namespace {

GaussianPosterior encode_impl(const CvaeConfig& cfg,
                              const nn::ParamStore& params,
                              std::span<const double> image_code,
                              std::span<const double> dir, double mag_x,
                              double mag_y, ForwardPieces* fp) {
  require(static_cast<int>(image_code.size()) == cfg.image_code_dim(),
          "encode: image code dim mismatch");
  require(static_cast<int>(dir.size()) == cfg.direction_dim(),
          "encode: direction dim mismatch");
  std::vector<double> enc_in;
  enc_in.reserve(cfg.encoder_input_dim());
  enc_in.insert(enc_in.end(), image_code.begin(), image_code.end());
  if (cfg.pooled_encoder) {
    // Channel-major layout: each of the 2K channels is one contiguous
    // H*W block.
    const int hw = cfg.height * cfg.width;
    for (int ch = 0; ch < 2 * cfg.coeffs_per_axis; ++ch) {
      double mean = 0.0;
      for (int i = 0; i < hw; ++i) mean += dir[ch * hw + i];
      enc_in.push_back(mean / hw);
    }
  } else {
    enc_in.insert(enc_in.end(), dir.begin(), dir.end());
  }
  enc_in.push_back(mag_x);
  enc_in.push_back(mag_y);
  const int enc_out = cfg.encoder_hidden.empty() ? cfg.encoder_input_dim()
                                                 : cfg.encoder_hidden.back();
  const auto h = nn::forward(cfg.encoder_trunk_spec(), params, "enc", enc_in,
                             fp ? &fp->enc_tape : nullptr);
  GaussianPosterior post;
  post.mu = nn::forward(head_spec(enc_out, cfg.latent_dim), params, "enc_mu", h,
                        fp ? &fp->mu_tape : nullptr);
  post.log_sigma = nn::forward(head_spec(enc_out, cfg.latent_dim), params,
                               "enc_ls", h, fp ? &fp->ls_tape : nullptr);
  return post;
}

Prediction decode_impl(const CvaeConfig& cfg, const nn::ParamStore& params,
                       std::span<const double> image_code,
                       std::span<const double> z, ForwardPieces* fp) {
  require(static_cast<int>(image_code.size()) == cfg.image_code_dim(),
          "decode: image code dim mismatch");
  require(static_cast<int>(z.size()) == cfg.latent_dim,
          "decode: latent dim mismatch");
  const int c = cfg.image_code_dim();
  const int l = cfg.latent_dim;
  std::vector<double> fused(image_code.begin(), image_code.end());
  if (l > 0) {
    if (cfg.fusion == CvaeConfig::Fusion::Gating) {
      for (int i = 0; i < c; ++i) fused[i] *= 1.0 + z[i % l];
    } else {
      for (int i = 0; i < c; ++i) fused[i] += z[i % l];
    }
  }
  const int dec_out = cfg.decoder_hidden.empty() ? c : cfg.decoder_hidden.back();
  const auto trunk = nn::forward(cfg.decoder_trunk_spec(), params, "dec", fused,
                                 fp ? &fp->dec_tape : nullptr);
  Prediction pred;
  pred.direction =
      nn::forward(head_spec(dec_out, cfg.direction_dim()), params, "dec_dir",
                  trunk, fp ? &fp->dir_tape : nullptr);
  std::vector<double> mag_pre;
  if (cfg.separate_magnitude_trunk) {
    // Latent-free pathway: the magnitude trunk reads the raw image code.
    const auto mag_trunk =
        nn::forward(cfg.magnitude_trunk_spec(), params, "mag", image_code,
                    fp ? &fp->mag_trunk_tape : nullptr);
    mag_pre = nn::forward(head_spec(dec_out, 2), params, "dec_mag", mag_trunk,
                          fp ? &fp->mag_tape : nullptr);
  } else {
    mag_pre = nn::forward(head_spec(dec_out, 2), params, "dec_mag", trunk,
                          fp ? &fp->mag_tape : nullptr);
  }
  pred.mag_x = softplus(mag_pre[0]);
  pred.mag_y = softplus(mag_pre[1]);
  if (fp) {
    fp->fused = std::move(fused);
    fp->mag_pre = std::move(mag_pre);
  }
  return pred;
}

}  // namespace

GaussianPosterior encode(const CvaeConfig& cfg, const nn::ParamStore& params,
                         std::span<const double> image_code,
                         const codec::NormalizedSpectral& y) {
  const auto flat = y.direction.flatten_channel_major();
  return encode_impl(cfg, params, image_code, flat, y.mag_x, y.mag_y, nullptr);
}

GaussianPosterior encode(const CvaeConfig& cfg, const nn::ParamStore& params,
                         std::span<const double> image_code,
                         const PreparedTarget& y) {
  return encode_impl(cfg, params, image_code, y.direction, y.mag_x, y.mag_y,
                     nullptr);
}

std::vector<double> reparameterize(const GaussianPosterior& post,
                                   std::span<const double> eta) {
  require(eta.size() == post.mu.size(), "reparameterize: eta dim mismatch");
  std::vector<double> z(post.mu.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    z[i] = post.mu[i] + eta[i] * std::exp(post.log_sigma[i]);
  return z;
}

Prediction decode(const CvaeConfig& cfg, const nn::ParamStore& params,
                  std::span<const double> image_code,
                  std::span<const double> z) {
  return decode_impl(cfg, params, image_code, z, nullptr);
}

double kl_std_normal(const GaussianPosterior& post) {
  double kl = 0.0;
  for (std::size_t i = 0; i < post.mu.size(); ++i) {
    const double mu = post.mu[i];
    const double ls = post.log_sigma[i];
    kl += 0.5 * (mu * mu + std::exp(2.0 * ls) - 1.0 - 2.0 * ls);
  }
  return kl;
}

Prediction regressor_forward(const CvaeConfig& cfg,
                             const nn::ParamStore& params,
                             std::span<const double> features) {
  const auto code = image_tower(cfg, params, features);
  const std::vector<double> z(cfg.latent_dim, 0.0);
  return decode(cfg, params, code, z);
}

namespace {

LossBreakdown loss_core(const CvaeConfig& cfg, const nn::ParamStore& params,
                        std::span<const double> features,
                        const PreparedTarget& y, std::span<const double> eta,
                        ModelKind kind, double kl_weight,
                        nn::GradStore* grads) {
  cfg.validate();
  require(static_cast<int>(features.size()) == cfg.input_dim(),
          "loss: feature dim mismatch");
  require(static_cast<int>(y.direction.size()) == cfg.direction_dim(),
          "loss: target direction dim mismatch");
  const bool latent = kind == ModelKind::Cvae && cfg.latent_dim > 0;
  if (latent)
    require(static_cast<int>(eta.size()) == cfg.latent_dim,
            "loss: eta dim mismatch");

  ForwardPieces fp;
  fp.code = nn::forward(cfg.image_spec(), params, "img", features,
                        grads ? &fp.img_tape : nullptr);

  if (latent) {
    fp.post = encode_impl(cfg, params, fp.code, y.direction, y.mag_x, y.mag_y,
                          grads ? &fp : nullptr);
    fp.z = reparameterize(fp.post, eta);
  } else {
    fp.z.assign(cfg.latent_dim, 0.0);
  }

  const Prediction pred = decode_impl(cfg, params, fp.code, fp.z, &fp);
  fp.dir_hat = pred.direction;

  LossBreakdown out;
  for (int i = 0; i < cfg.direction_dim(); ++i) {
    const double d = pred.direction[i] - y.direction[i];
    out.direction += d * d;
  }
  out.mag_x = (pred.mag_x - y.mag_x) * (pred.mag_x - y.mag_x);
  out.mag_y = (pred.mag_y - y.mag_y) * (pred.mag_y - y.mag_y);
  out.kl = latent ? kl_std_normal(fp.post) : 0.0;
  const double w = latent ? kl_weight : 0.0;
  out.total = out.direction + out.mag_x + out.mag_y + w * out.kl;

  if (!grads) return out;

  // Output-side gradients.
  std::vector<double> d_dir(cfg.direction_dim());
  for (int i = 0; i < cfg.direction_dim(); ++i)
    d_dir[i] = 2.0 * (pred.direction[i] - y.direction[i]);
  std::vector<double> d_mag_pre(2);
  d_mag_pre[0] = 2.0 * (pred.mag_x - y.mag_x) * sigmoid(fp.mag_pre[0]);
  d_mag_pre[1] = 2.0 * (pred.mag_y - y.mag_y) * sigmoid(fp.mag_pre[1]);

  const int c = cfg.image_code_dim();
  const int l = cfg.latent_dim;
  const int dec_out = cfg.decoder_hidden.empty() ? c : cfg.decoder_hidden.back();

  auto d_trunk = nn::backward(head_spec(dec_out, cfg.direction_dim()), params,
                              "dec_dir", fp.dir_tape, d_dir, *grads);
  std::vector<double> d_fused;
  std::vector<double> d_code_from_mag;  // separate-trunk path bypasses fusion
  if (cfg.separate_magnitude_trunk) {
    const auto d_mag_trunk = nn::backward(head_spec(dec_out, 2), params,
                                          "dec_mag", fp.mag_tape, d_mag_pre,
                                          *grads);
    d_code_from_mag = nn::backward(cfg.magnitude_trunk_spec(), params, "mag",
                                   fp.mag_trunk_tape, d_mag_trunk, *grads);
    d_fused = nn::backward(cfg.decoder_trunk_spec(), params, "dec",
                           fp.dec_tape, d_trunk, *grads);
  } else {
    const auto d_trunk_mag = nn::backward(head_spec(dec_out, 2), params,
                                          "dec_mag", fp.mag_tape, d_mag_pre,
                                          *grads);
    for (int i = 0; i < dec_out; ++i) d_trunk[i] += d_trunk_mag[i];
    d_fused = nn::backward(cfg.decoder_trunk_spec(), params, "dec",
                           fp.dec_tape, d_trunk, *grads);
  }

  // Fusion backward: split d_fused into the image-code path and the z path.
  // With z fixed at 0 (regressor, or latent_dim 0) the fusion is the identity
  // in the code and the z path carries nothing.
  std::vector<double> d_code(c, 0.0);
  std::vector<double> d_z(l, 0.0);
  if (latent) {
    if (cfg.fusion == CvaeConfig::Fusion::Gating) {
      for (int i = 0; i < c; ++i) {
        d_code[i] = d_fused[i] * (1.0 + fp.z[i % l]);
        d_z[i % l] += d_fused[i] * fp.code[i];
      }
    } else {
      for (int i = 0; i < c; ++i) {
        d_code[i] = d_fused[i];
        d_z[i % l] += d_fused[i];
      }
    }
  } else {
    d_code = d_fused;
  }
  if (!d_code_from_mag.empty()) {
    for (int i = 0; i < c; ++i) d_code[i] += d_code_from_mag[i];
  }

  if (latent) {
    // Through z = mu + eta o exp(ls), plus the KL term itself.
    std::vector<double> d_mu(l), d_ls(l);
    for (int j = 0; j < l; ++j) {
      const double sig = std::exp(fp.post.log_sigma[j]);
      d_mu[j] = d_z[j] + kl_weight * fp.post.mu[j];
      d_ls[j] = d_z[j] * eta[j] * sig +
                kl_weight * (std::exp(2.0 * fp.post.log_sigma[j]) - 1.0);
    }
    const int enc_out = cfg.encoder_hidden.empty() ? cfg.encoder_input_dim()
                                                   : cfg.encoder_hidden.back();
    auto d_h = nn::backward(head_spec(enc_out, l), params, "enc_mu",
                            fp.mu_tape, d_mu, *grads);
    const auto d_h2 = nn::backward(head_spec(enc_out, l), params, "enc_ls",
                                   fp.ls_tape, d_ls, *grads);
    for (int i = 0; i < enc_out; ++i) d_h[i] += d_h2[i];
    const auto d_enc_in = nn::backward(cfg.encoder_trunk_spec(), params, "enc",
                                       fp.enc_tape, d_h, *grads);
    // The encoder consumes the image code too.
    for (int i = 0; i < c; ++i) d_code[i] += d_enc_in[i];
  }

  nn::backward(cfg.image_spec(), params, "img", fp.img_tape, d_code, *grads);
  return out;
}

}  // namespace

LossBreakdown loss(const CvaeConfig& cfg, const nn::ParamStore& params,
                   std::span<const double> features, const PreparedTarget& y,
                   std::span<const double> eta, ModelKind kind) {
  return loss_core(cfg, params, features, y, eta, kind, cfg.kl_weight,
                   nullptr);
}

LossBreakdown loss(const CvaeConfig& cfg, const nn::ParamStore& params,
                   std::span<const double> features,
                   const codec::NormalizedSpectral& y,
                   std::span<const double> eta, ModelKind kind) {
  return loss_core(cfg, params, features, prepare_target(y), eta, kind,
                   cfg.kl_weight, nullptr);
}

LossBreakdown loss_backward(const CvaeConfig& cfg,
                            const nn::ParamStore& params,
                            std::span<const double> features,
                            const PreparedTarget& y,
                            std::span<const double> eta, ModelKind kind,
                            nn::GradStore& grads, double kl_weight) {
  return loss_core(cfg, params, features, y, eta, kind,
                   kl_weight >= 0.0 ? kl_weight : cfg.kl_weight, &grads);
}

std::vector<Prediction> sample_predictions(const CvaeConfig& cfg,
                                           const nn::ParamStore& params,
                                           std::span<const double> features,
                                           int n, std::uint64_t seed) {
  require(n >= 1, "sample_predictions: n must be >= 1");
  const auto code = image_tower(cfg, params, features);
  Rng rng(seed);
  std::vector<Prediction> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const auto z = rng.normal_vec(static_cast<std::size_t>(cfg.latent_dim));
    out.push_back(decode(cfg, params, code, z));
  }
  return out;
}

codec::SpectralField prediction_to_spectral(const CvaeConfig& cfg,
                                            const Prediction& pred) {
  codec::NormalizedSpectral ns;
  ns.direction = codec::SpectralField::from_channel_major(
      pred.direction, cfg.height, cfg.width, cfg.coeffs_per_axis);
  ns.mag_x = pred.mag_x;
  ns.mag_y = pred.mag_y;
  return codec::recombine(ns);
}

codec::TrajectoryField prediction_to_field(const CvaeConfig& cfg,
                                           const Prediction& pred, int t) {
  return codec::decode_field(prediction_to_spectral(cfg, pred), t);
}

std::vector<double> prediction_spectral_vec(const Prediction& pred) {
  std::vector<double> v = pred.direction;
  const std::size_t half = v.size() / 2;
  for (std::size_t i = 0; i < half; ++i) v[i] *= pred.mag_x;
  for (std::size_t i = half; i < v.size(); ++i) v[i] *= pred.mag_y;
  return v;
}

}  // namespace dtp::cvae
