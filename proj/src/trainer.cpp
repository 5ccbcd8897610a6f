#include "dtp/trainer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "dtp/parallel.hpp"
#include "dtp/rng.hpp"

namespace dtp::train {

namespace {

constexpr std::uint64_t kStreamShuffle = 0x53484600;  // "SHF"
constexpr std::uint64_t kStreamEtaEval = 0x45544100;  // "ETA"
constexpr std::uint64_t kStreamEtaTrain = 0x45545200;  // "ETR"
constexpr std::uint64_t kStreamInit = 0x494e4900;     // "INI"

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

struct Prepared {
  const std::vector<double>* features;
  cvae::PreparedTarget target;
};

std::vector<Prepared> prepare(const std::vector<scene::SceneSample>& samples,
                              const cvae::CvaeConfig& cfg) {
  std::vector<Prepared> out(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    out[i].features = &samples[i].features;
    out[i].target =
        cvae::prepare_target(samples[i].truth, cfg.coeffs_per_axis);
  });
  return out;
}

cvae::LossBreakdown mean_loss(const std::vector<Prepared>& prepared,
                              const cvae::CvaeConfig& cfg,
                              const nn::ParamStore& params,
                              cvae::ModelKind kind, std::uint64_t seed,
                              double kl_weight) {
  std::vector<cvae::LossBreakdown> per(prepared.size());
  parallel_for(prepared.size(), [&](std::size_t i) {
    const auto eta = Rng(derive_seed(seed, kStreamEtaEval, i))
                         .normal_vec(static_cast<std::size_t>(cfg.latent_dim));
    per[i] = cvae::loss(cfg, params, *prepared[i].features, prepared[i].target,
                        eta, kind);
  });
  cvae::LossBreakdown mean;
  for (const auto& b : per) {  // index order, reproducible
    mean.direction += b.direction;
    mean.mag_x += b.mag_x;
    mean.mag_y += b.mag_y;
    mean.kl += b.kl;
  }
  const double n = static_cast<double>(prepared.size());
  mean.direction /= n;
  mean.mag_x /= n;
  mean.mag_y /= n;
  mean.kl /= n;
  mean.total = mean.direction + mean.mag_x + mean.mag_y + kl_weight * mean.kl;
  return mean;
}

}  // namespace

void TrainConfig::validate() const {
  require(epochs >= 1, "epochs must be >= 1");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(kl_warmup_epochs >= 0, "kl_warmup_epochs must be >= 0");
}

TrainResult train(const std::vector<scene::SceneSample>& samples,
                  cvae::ModelKind kind, const cvae::CvaeConfig& cfg,
                  const TrainConfig& tc, const CheckpointSink& on_checkpoint) {
  cfg.validate();
  tc.validate();
  require(!samples.empty(), "train: empty training set");

  const auto prepared = prepare(samples, cfg);
  Rng init_rng(derive_seed(tc.seed, kStreamInit));
  nn::ParamStore params = cvae::make_params(cfg, kind, init_rng);
  nn::AdamState adam = nn::AdamState::like(params);

  const std::size_t n = samples.size();
  const std::size_t batch = static_cast<std::size_t>(tc.batch_size);
  // Per-batch gradients are accumulated into a fixed number of contiguous
  // chunks (samples in index order within a chunk, chunks merged in order),
  // which keeps the reduction identical across runs and thread counts.
  constexpr std::size_t kChunks = 8;
  std::vector<nn::GradStore> chunk_grads;
  for (std::size_t c = 0; c < kChunks; ++c)
    chunk_grads.push_back(nn::ParamStore::zeros_like(params));
  std::vector<std::size_t> order(n);

  TrainHistory history;
  long step = 0;
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    const double warm =
        tc.kl_warmup_epochs > 0
            ? std::min(1.0, static_cast<double>(epoch + 1) / tc.kl_warmup_epochs)
            : 1.0;
    const double kl_weight = cfg.kl_weight * warm;

    // history[0] is a dedicated pre-update evaluation (it must reproduce
    // evaluate_loss at the initial parameters); later epochs record the
    // running training mean instead of paying for an extra pass.
    if (epoch == 0) {
      const auto initial =
          mean_loss(prepared, cfg, params, kind, tc.seed, kl_weight);
      if (!std::isfinite(initial.total))
        throw std::runtime_error("train: non-finite loss at epoch 0");
      history.epochs.push_back(initial);
    }
    cvae::LossBreakdown running;

    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(tc.seed, kStreamShuffle, epoch));
    for (std::size_t i = n; i > 1; --i) {
      const auto j = static_cast<std::size_t>(
          shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }

    for (std::size_t start = 0, b = 0; start < n; start += batch, ++b) {
      const std::size_t count = std::min(batch, n - start);
      const std::size_t per_chunk = (count + kChunks - 1) / kChunks;
      std::vector<cvae::LossBreakdown> chunk_loss(kChunks);
      parallel_for(kChunks, [&](std::size_t c) {
        const std::size_t lo = c * per_chunk;
        const std::size_t hi = std::min(count, lo + per_chunk);
        if (lo >= hi) return;
        chunk_grads[c].fill(0.0);
        for (std::size_t s = lo; s < hi; ++s) {  // in-order within the chunk
          const std::size_t idx = order[start + s];
          const auto eta =
              Rng(derive_seed(tc.seed, kStreamEtaTrain + epoch, idx))
                  .normal_vec(static_cast<std::size_t>(cfg.latent_dim));
          const auto terms = cvae::loss_backward(cfg, params,
                                                 *prepared[idx].features,
                                                 prepared[idx].target, eta,
                                                 kind, chunk_grads[c],
                                                 kl_weight);
          chunk_loss[c].direction += terms.direction;
          chunk_loss[c].mag_x += terms.mag_x;
          chunk_loss[c].mag_y += terms.mag_y;
          chunk_loss[c].kl += terms.kl;
          chunk_loss[c].total += terms.total;
        }
      });
      double batch_total = chunk_loss[0].total;
      nn::GradStore& acc = chunk_grads[0];
      for (std::size_t c = 1; c < kChunks; ++c) {  // merge chunks in order
        if (c * per_chunk >= count) break;
        acc.accumulate(chunk_grads[c]);
        batch_total += chunk_loss[c].total;
      }
      if (!std::isfinite(batch_total))
        throw std::runtime_error("train: non-finite loss in batch " +
                                 std::to_string(b) + " of epoch " +
                                 std::to_string(epoch));
      for (std::size_t c = 0; c < kChunks && c * per_chunk < count; ++c) {
        running.direction += chunk_loss[c].direction;
        running.mag_x += chunk_loss[c].mag_x;
        running.mag_y += chunk_loss[c].mag_y;
        running.kl += chunk_loss[c].kl;
        running.total += chunk_loss[c].total;
      }
      acc.scale(1.0 / static_cast<double>(count));
      nn::adam_step(params, acc, adam, tc.adam, ++step);
    }

    if (epoch >= 1) {
      const double dn = static_cast<double>(n);
      running.direction /= dn;
      running.mag_x /= dn;
      running.mag_y /= dn;
      running.kl /= dn;
      running.total /= dn;
      history.epochs.push_back(running);
    }

    if (on_checkpoint && tc.checkpoint_every > 0 &&
        (epoch + 1) % tc.checkpoint_every == 0)
      on_checkpoint(epoch, params);
  }
  return {std::move(params), std::move(history)};
}

cvae::LossBreakdown evaluate_loss(
    const std::vector<scene::SceneSample>& samples, const cvae::CvaeConfig& cfg,
    const nn::ParamStore& params, cvae::ModelKind kind, std::uint64_t seed) {
  require(!samples.empty(), "evaluate_loss: empty sample set");
  const auto prepared = prepare(samples, cfg);
  return mean_loss(prepared, cfg, params, kind, seed, cfg.kl_weight);
}

}  // namespace dtp::train
