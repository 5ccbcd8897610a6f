#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dtp/cvae.hpp"
#include "dtp/nn.hpp"
#include "dtp/scene.hpp"

namespace dtp::train {

struct TrainConfig {
  int epochs = 80;
  int batch_size = 32;
  nn::AdamConfig adam;
  // Linear KL warmup over this many epochs (0 = constant cfg.kl_weight).
  int kl_warmup_epochs = 0;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // epochs; 0 disables

  void validate() const;
};

// history.epochs[0] is the mean per-term loss over the full training set
// before any update (same eta stream as evaluate_loss); later entries are
// the running training means of their epochs.
struct TrainHistory {
  std::vector<cvae::LossBreakdown> epochs;
};

struct TrainResult {
  nn::ParamStore params;
  TrainHistory history;
};

using CheckpointSink =
    std::function<void(int epoch, const nn::ParamStore& params)>;

// Deterministic given (samples, model config, train config): fixed shuffle
// order, per-sample-index eta draws, and batch gradients reduced in sample
// index order. Aborts with a diagnostic naming the batch if the loss goes
// non-finite.
TrainResult train(const std::vector<scene::SceneSample>& samples,
                  cvae::ModelKind kind, const cvae::CvaeConfig& cfg,
                  const TrainConfig& tc,
                  const CheckpointSink& on_checkpoint = nullptr);

// Mean per-term loss over a sample set with the eta stream evaluate/epoch-0
// training would use; matches history.epochs[0] for the training set.
cvae::LossBreakdown evaluate_loss(const std::vector<scene::SceneSample>& samples,
                                  const cvae::CvaeConfig& cfg,
                                  const nn::ParamStore& params,
                                  cvae::ModelKind kind, std::uint64_t seed);

}  // namespace dtp::train
