#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dtp/rng.hpp"

namespace dtp::nn {

enum class LayerKind { Affine, Relu, Tanh };

struct LayerSpec {
  LayerKind kind = LayerKind::Affine;
  int input_dim = 0;   // affine only
  int output_dim = 0;  // affine only
};

using NetSpec = std::vector<LayerSpec>;

inline LayerSpec affine(int in, int out) {
  return {LayerKind::Affine, in, out};
}
inline LayerSpec relu() { return {LayerKind::Relu, 0, 0}; }
inline LayerSpec tanh_layer() { return {LayerKind::Tanh, 0, 0}; }

void validate_spec(const NetSpec& spec);
int spec_output_dim(const NetSpec& spec, int input_dim);

// Named flat parameter vectors with a deterministic canonical order (the
// insertion order, which is fixed by the network spec that created them).
class ParamStore {
 public:
  std::vector<double>& add(const std::string& name, std::size_t size);
  bool has(std::string_view name) const;
  std::vector<double>& at(std::string_view name);
  const std::vector<double>& at(std::string_view name) const;

  std::size_t entry_count() const { return entries_.size(); }
  const std::string& name(std::size_t i) const { return entries_[i].first; }
  std::vector<double>& values(std::size_t i) { return entries_[i].second; }
  const std::vector<double>& values(std::size_t i) const {
    return entries_[i].second;
  }

  std::size_t total_size() const;
  void fill(double v);
  void accumulate(const ParamStore& other);  // += , layouts must match
  void scale(double s);

  std::vector<double> to_flat() const;
  void from_flat(std::span<const double> flat);

  static bool congruent(const ParamStore& a, const ParamStore& b);
  static ParamStore zeros_like(const ParamStore& other);

 private:
  std::vector<std::pair<std::string, std::vector<double>>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

using GradStore = ParamStore;

// Cached activations from forward. acts[0] is the input; acts[i] is the
// output of layer i-1.
struct Tape {
  std::vector<std::vector<double>> acts;
};

// Affine parameters are named "<prefix>.L<i>.W" (row-major, out x in) and
// "<prefix>.L<i>.b".
void add_mlp_params(ParamStore& params, const NetSpec& spec,
                    std::string_view prefix);
// Glorot-uniform weights, zero biases.
void init_mlp_params(ParamStore& params, const NetSpec& spec,
                     std::string_view prefix, Rng& rng);

std::vector<double> forward(const NetSpec& spec, const ParamStore& params,
                            std::string_view prefix,
                            std::span<const double> input,
                            Tape* tape = nullptr);

// Reverse-mode gradients; parameter gradients are accumulated (+=) into
// grads, the return value is the gradient with respect to the input.
std::vector<double> backward(const NetSpec& spec, const ParamStore& params,
                             std::string_view prefix, const Tape& tape,
                             std::span<const double> output_grad,
                             GradStore& grads);

// Central differences (L(p+eps) - L(p-eps)) / (2 eps), per parameter.
GradStore finite_diff_grad(
    const std::function<double(const ParamStore&)>& loss_fn,
    const ParamStore& params, double epsilon);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  GradStore m;
  GradStore v;
  static AdamState like(const ParamStore& params);
};

// Bias-corrected adaptive update; step starts at 1.
void adam_step(ParamStore& params, const GradStore& grads, AdamState& state,
               const AdamConfig& cfg, long step);

}  // namespace dtp::nn
