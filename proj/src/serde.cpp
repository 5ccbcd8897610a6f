#include "dtp/serde.hpp"

#include <stdexcept>

namespace dtp::scene {

using nlohmann::json;

void to_json(json& j, const MotionMode& mode) {
  if (const auto* lin = std::get_if<LinearMode>(&mode)) {
    j = json{{"kind", "linear"}, {"vx", lin->vx}, {"vy", lin->vy}};
  } else if (const auto* osc = std::get_if<OscillationMode>(&mode)) {
    j = json{{"kind", "oscillation"},
             {"axis", osc->axis == Axis::Horizontal ? "horizontal" : "vertical"},
             {"amplitude", osc->amplitude},
             {"period", osc->period}};
  } else {
    const auto& arc = std::get<ArcMode>(mode);
    j = json{{"kind", "arc"},
             {"radius", arc.radius},
             {"angular_rate", arc.angular_rate},
             {"orientation", arc.orientation}};
  }
}

void from_json(const json& j, MotionMode& mode) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "linear") {
    mode = LinearMode{j.value("vx", 0.0), j.value("vy", 0.0)};
  } else if (kind == "oscillation") {
    OscillationMode osc;
    const std::string axis = j.value("axis", "vertical");
    if (axis != "horizontal" && axis != "vertical")
      throw std::invalid_argument("unknown oscillation axis: " + axis);
    osc.axis = axis == "horizontal" ? Axis::Horizontal : Axis::Vertical;
    osc.amplitude = j.value("amplitude", 0.0);
    osc.period = j.value("period", 30.0);
    mode = osc;
  } else if (kind == "arc") {
    mode = ArcMode{j.value("radius", 0.0), j.value("angular_rate", 0.0),
                   j.value("orientation", 0.0)};
  } else {
    throw std::invalid_argument("unknown motion mode kind: " + kind);
  }
}

void to_json(json& j, const MotionModeSet& set) {
  j = json{{"type_id", set.type_id},
           {"modes", set.modes},
           {"weights", set.mode_weights}};
}

void from_json(const json& j, MotionModeSet& set) {
  set.type_id = j.value("type_id", 0);
  set.modes = j.at("modes").get<std::vector<MotionMode>>();
  set.mode_weights = j.at("weights").get<std::vector<double>>();
}

void to_json(json& j, const SceneSpec& spec) {
  j = json{{"height", spec.height},
           {"width", spec.width},
           {"horizon", spec.horizon},
           {"scene_types", spec.scene_types},
           {"actor_radius", spec.actor_radius},
           {"noise_sigma", spec.noise_sigma},
           {"coordinate_channels", spec.coordinate_channels}};
}

void from_json(const json& j, SceneSpec& spec) {
  const SceneSpec defaults = SceneSpec::defaults();
  spec.height = j.value("height", defaults.height);
  spec.width = j.value("width", defaults.width);
  spec.horizon = j.value("horizon", defaults.horizon);
  spec.scene_types = j.contains("scene_types")
                         ? j.at("scene_types").get<std::vector<MotionModeSet>>()
                         : defaults.scene_types;
  spec.actor_radius = j.value("actor_radius", defaults.actor_radius);
  spec.noise_sigma = j.value("noise_sigma", defaults.noise_sigma);
  spec.coordinate_channels =
      j.value("coordinate_channels", defaults.coordinate_channels);
}

}  // namespace dtp::scene

namespace dtp::cvae {

using nlohmann::json;

void to_json(json& j, const CvaeConfig& cfg) {
  j = json{{"height", cfg.height},
           {"width", cfg.width},
           {"coeffs_per_axis", cfg.coeffs_per_axis},
           {"feature_channels", cfg.feature_channels},
           {"latent_dim", cfg.latent_dim},
           {"image_hidden", cfg.image_hidden},
           {"encoder_hidden", cfg.encoder_hidden},
           {"decoder_hidden", cfg.decoder_hidden},
           {"fusion",
            cfg.fusion == CvaeConfig::Fusion::Gating ? "gating" : "additive"},
           {"activation",
            cfg.activation == CvaeConfig::Activation::Tanh ? "tanh" : "relu"},
           {"separate_magnitude_trunk", cfg.separate_magnitude_trunk},
           {"pooled_encoder", cfg.pooled_encoder},
           {"kl_weight", cfg.kl_weight}};
}

void from_json(const json& j, CvaeConfig& cfg) {
  const CvaeConfig defaults;
  cfg.height = j.value("height", defaults.height);
  cfg.width = j.value("width", defaults.width);
  cfg.coeffs_per_axis = j.value("coeffs_per_axis", defaults.coeffs_per_axis);
  cfg.feature_channels = j.value("feature_channels", defaults.feature_channels);
  cfg.latent_dim = j.value("latent_dim", defaults.latent_dim);
  cfg.image_hidden = j.value("image_hidden", defaults.image_hidden);
  cfg.encoder_hidden = j.value("encoder_hidden", defaults.encoder_hidden);
  cfg.decoder_hidden = j.value("decoder_hidden", defaults.decoder_hidden);
  const std::string fusion = j.value("fusion", std::string("gating"));
  if (fusion != "gating" && fusion != "additive")
    throw std::invalid_argument("unknown fusion kind: " + fusion);
  cfg.fusion = fusion == "gating" ? CvaeConfig::Fusion::Gating
                                  : CvaeConfig::Fusion::Additive;
  const std::string act = j.value(
      "activation", defaults.activation == CvaeConfig::Activation::Tanh
                        ? std::string("tanh")
                        : std::string("relu"));
  if (act != "tanh" && act != "relu")
    throw std::invalid_argument("unknown activation: " + act);
  cfg.activation = act == "tanh" ? CvaeConfig::Activation::Tanh
                                 : CvaeConfig::Activation::Relu;
  cfg.separate_magnitude_trunk =
      j.value("separate_magnitude_trunk", defaults.separate_magnitude_trunk);
  cfg.pooled_encoder = j.value("pooled_encoder", defaults.pooled_encoder);
  cfg.kl_weight = j.value("kl_weight", defaults.kl_weight);
}

}  // namespace dtp::cvae

namespace dtp::train {

using nlohmann::json;

void to_json(json& j, const TrainConfig& cfg) {
  j = json{{"epochs", cfg.epochs},
           {"batch_size", cfg.batch_size},
           {"lr", cfg.adam.lr},
           {"beta1", cfg.adam.beta1},
           {"beta2", cfg.adam.beta2},
           {"adam_eps", cfg.adam.eps},
           {"kl_warmup_epochs", cfg.kl_warmup_epochs},
           {"seed", cfg.seed},
           {"checkpoint_every", cfg.checkpoint_every}};
}

void from_json(const json& j, TrainConfig& cfg) {
  const TrainConfig defaults;
  cfg.epochs = j.value("epochs", defaults.epochs);
  cfg.batch_size = j.value("batch_size", defaults.batch_size);
  cfg.adam.lr = j.value("lr", defaults.adam.lr);
  cfg.adam.beta1 = j.value("beta1", defaults.adam.beta1);
  cfg.adam.beta2 = j.value("beta2", defaults.adam.beta2);
  cfg.adam.eps = j.value("adam_eps", defaults.adam.eps);
  cfg.kl_warmup_epochs = j.value("kl_warmup_epochs", defaults.kl_warmup_epochs);
  cfg.seed = j.value("seed", defaults.seed);
  cfg.checkpoint_every = j.value("checkpoint_every", defaults.checkpoint_every);
}

}  // namespace dtp::train
