#pragma once

#include "json.hpp"

#include "dtp/cvae.hpp"
#include "dtp/scene.hpp"
#include "dtp/trainer.hpp"

// JSON round-trips for configuration structs. Fields absent from the input
// keep their defaults, so config files can be partial overrides.

namespace dtp::scene {

void to_json(nlohmann::json& j, const MotionMode& mode);
void from_json(const nlohmann::json& j, MotionMode& mode);
void to_json(nlohmann::json& j, const MotionModeSet& set);
void from_json(const nlohmann::json& j, MotionModeSet& set);
void to_json(nlohmann::json& j, const SceneSpec& spec);
void from_json(const nlohmann::json& j, SceneSpec& spec);

}  // namespace dtp::scene

namespace dtp::cvae {

void to_json(nlohmann::json& j, const CvaeConfig& cfg);
void from_json(const nlohmann::json& j, CvaeConfig& cfg);

}  // namespace dtp::cvae

namespace dtp::train {

void to_json(nlohmann::json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);

}  // namespace dtp::train
