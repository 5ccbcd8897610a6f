#include "dtp/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace dtp::nn {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

std::string weight_name(std::string_view prefix, std::size_t layer) {
  return std::string(prefix) + ".L" + std::to_string(layer) + ".W";
}
std::string bias_name(std::string_view prefix, std::size_t layer) {
  return std::string(prefix) + ".L" + std::to_string(layer) + ".b";
}

}  // namespace

void validate_spec(const NetSpec& spec) {
  for (const auto& layer : spec) {
    if (layer.kind == LayerKind::Affine) {
      require(layer.input_dim >= 1 && layer.output_dim >= 1,
              "affine layer dims must be >= 1");
    }
  }
}

int spec_output_dim(const NetSpec& spec, int input_dim) {
  int dim = input_dim;
  for (const auto& layer : spec) {
    if (layer.kind == LayerKind::Affine) {
      require(layer.input_dim == dim, "affine input dim mismatch in spec");
      dim = layer.output_dim;
    }
  }
  return dim;
}

std::vector<double>& ParamStore::add(const std::string& name,
                                     std::size_t size) {
  require(index_.find(name) == index_.end(),
          "duplicate parameter entry: " + name);
  index_.emplace(name, entries_.size());
  entries_.emplace_back(name, std::vector<double>(size, 0.0));
  return entries_.back().second;
}

bool ParamStore::has(std::string_view name) const {
  return index_.find(std::string(name)) != index_.end();
}

std::vector<double>& ParamStore::at(std::string_view name) {
  auto it = index_.find(std::string(name));
  require(it != index_.end(), "missing parameter entry: " + std::string(name));
  return entries_[it->second].second;
}

const std::vector<double>& ParamStore::at(std::string_view name) const {
  auto it = index_.find(std::string(name));
  require(it != index_.end(), "missing parameter entry: " + std::string(name));
  return entries_[it->second].second;
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.size();
  return n;
}

void ParamStore::fill(double v) {
  for (auto& e : entries_) {
    for (double& x : e.second) x = v;
  }
}

void ParamStore::accumulate(const ParamStore& other) {
  require(congruent(*this, other), "parameter layout mismatch in accumulate");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& src = other.entries_[i].second;
    auto& dst = entries_[i].second;
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
}

void ParamStore::scale(double s) {
  for (auto& e : entries_) {
    for (double& x : e.second) x *= s;
  }
}

std::vector<double> ParamStore::to_flat() const {
  std::vector<double> flat;
  flat.reserve(total_size());
  for (const auto& e : entries_)
    flat.insert(flat.end(), e.second.begin(), e.second.end());
  return flat;
}

void ParamStore::from_flat(std::span<const double> flat) {
  require(flat.size() == total_size(), "flat buffer size mismatch");
  std::size_t off = 0;
  for (auto& e : entries_) {
    std::copy(flat.begin() + off, flat.begin() + off + e.second.size(),
              e.second.begin());
    off += e.second.size();
  }
}

bool ParamStore::congruent(const ParamStore& a, const ParamStore& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  for (std::size_t i = 0; i < a.entries_.size(); ++i) {
    if (a.entries_[i].first != b.entries_[i].first ||
        a.entries_[i].second.size() != b.entries_[i].second.size())
      return false;
  }
  return true;
}

ParamStore ParamStore::zeros_like(const ParamStore& other) {
  ParamStore out;
  for (const auto& e : other.entries_) out.add(e.first, e.second.size());
  return out;
}

void add_mlp_params(ParamStore& params, const NetSpec& spec,
                    std::string_view prefix) {
  validate_spec(spec);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (spec[i].kind != LayerKind::Affine) continue;
    params.add(weight_name(prefix, i),
               static_cast<std::size_t>(spec[i].input_dim) * spec[i].output_dim);
    params.add(bias_name(prefix, i),
               static_cast<std::size_t>(spec[i].output_dim));
  }
}

void init_mlp_params(ParamStore& params, const NetSpec& spec,
                     std::string_view prefix, Rng& rng) {
  add_mlp_params(params, spec, prefix);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (spec[i].kind != LayerKind::Affine) continue;
    const double bound =
        std::sqrt(6.0 / (spec[i].input_dim + spec[i].output_dim));
    for (double& w : params.at(weight_name(prefix, i)))
      w = rng.uniform(-bound, bound);
  }
}

std::vector<double> forward(const NetSpec& spec, const ParamStore& params,
                            std::string_view prefix,
                            std::span<const double> input, Tape* tape) {
  std::vector<double> x(input.begin(), input.end());
  if (tape) {
    tape->acts.clear();
    tape->acts.push_back(x);
  }
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const auto& layer = spec[i];
    switch (layer.kind) {
      case LayerKind::Affine: {
        require(static_cast<int>(x.size()) == layer.input_dim,
                "forward: affine input dim mismatch at layer " +
                    std::to_string(i));
        const auto& w = params.at(weight_name(prefix, i));
        const auto& b = params.at(bias_name(prefix, i));
        std::vector<double> y(layer.output_dim);
        const int in = layer.input_dim;
        for (int o = 0; o < layer.output_dim; ++o) {
          const double* row = w.data() + static_cast<std::size_t>(o) * in;
          double acc = b[o];
          for (int j = 0; j < in; ++j) acc += row[j] * x[j];
          y[o] = acc;
        }
        x = std::move(y);
        break;
      }
      case LayerKind::Relu:
        for (double& v : x) v = v > 0.0 ? v : 0.0;
        break;
      case LayerKind::Tanh:
        for (double& v : x) v = std::tanh(v);
        break;
    }
    if (tape) tape->acts.push_back(x);
  }
  return x;
}

std::vector<double> backward(const NetSpec& spec, const ParamStore& params,
                             std::string_view prefix, const Tape& tape,
                             std::span<const double> output_grad,
                             GradStore& grads) {
  require(tape.acts.size() == spec.size() + 1,
          "backward: tape does not match network spec");
  require(output_grad.size() == tape.acts.back().size(),
          "backward: output gradient dim mismatch");
  std::vector<double> g(output_grad.begin(), output_grad.end());
  for (std::size_t ii = spec.size(); ii-- > 0;) {
    const auto& layer = spec[ii];
    const auto& in_act = tape.acts[ii];
    const auto& out_act = tape.acts[ii + 1];
    switch (layer.kind) {
      case LayerKind::Affine: {
        require(static_cast<int>(in_act.size()) == layer.input_dim &&
                    static_cast<int>(out_act.size()) == layer.output_dim,
                "backward: tape dims do not match affine layer " +
                    std::to_string(ii));
        const auto& w = params.at(weight_name(prefix, ii));
        auto& gw = grads.at(weight_name(prefix, ii));
        auto& gb = grads.at(bias_name(prefix, ii));
        const int in = layer.input_dim;
        std::vector<double> gx(in, 0.0);
        for (int o = 0; o < layer.output_dim; ++o) {
          const double go = g[o];
          gb[o] += go;
          const double* row = w.data() + static_cast<std::size_t>(o) * in;
          double* grow = gw.data() + static_cast<std::size_t>(o) * in;
          for (int j = 0; j < in; ++j) {
            grow[j] += go * in_act[j];
            gx[j] += go * row[j];
          }
        }
        g = std::move(gx);
        break;
      }
      case LayerKind::Relu:
        require(in_act.size() == out_act.size() && g.size() == in_act.size(),
                "backward: tape dims do not match relu layer");
        for (std::size_t j = 0; j < g.size(); ++j)
          g[j] = in_act[j] > 0.0 ? g[j] : 0.0;
        break;
      case LayerKind::Tanh:
        require(in_act.size() == out_act.size() && g.size() == in_act.size(),
                "backward: tape dims do not match tanh layer");
        for (std::size_t j = 0; j < g.size(); ++j)
          g[j] *= 1.0 - out_act[j] * out_act[j];
        break;
    }
  }
  return g;
}

GradStore finite_diff_grad(
    const std::function<double(const ParamStore&)>& loss_fn,
    const ParamStore& params, double epsilon) {
  require(epsilon > 0.0, "finite_diff_grad: epsilon must be > 0");
  ParamStore work = params;
  GradStore grads = ParamStore::zeros_like(params);
  for (std::size_t e = 0; e < work.entry_count(); ++e) {
    auto& vals = work.values(e);
    auto& gvals = grads.values(e);
    for (std::size_t j = 0; j < vals.size(); ++j) {
      const double saved = vals[j];
      vals[j] = saved + epsilon;
      const double up = loss_fn(work);
      vals[j] = saved - epsilon;
      const double down = loss_fn(work);
      vals[j] = saved;
      gvals[j] = (up - down) / (2.0 * epsilon);
    }
  }
  return grads;
}

AdamState AdamState::like(const ParamStore& params) {
  return {ParamStore::zeros_like(params), ParamStore::zeros_like(params)};
}

void adam_step(ParamStore& params, const GradStore& grads, AdamState& state,
               const AdamConfig& cfg, long step) {
  require(step >= 1, "adam_step: step must be >= 1");
  require(ParamStore::congruent(params, grads) &&
              ParamStore::congruent(params, state.m) &&
              ParamStore::congruent(params, state.v),
          "adam_step: layout mismatch");
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t e = 0; e < params.entry_count(); ++e) {
    auto& p = params.values(e);
    const auto& g = grads.values(e);
    auto& m = state.m.values(e);
    auto& v = state.v.values(e);
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p[j] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

}  // namespace dtp::nn
