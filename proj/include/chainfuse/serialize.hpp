#pragma once

#include "chainfuse/chains.hpp"
#include "chainfuse/evaluation.hpp"
#include "chainfuse/fusion.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace chainfuse {

inline constexpr int kModelFormatVersion = 1;

// Versioned JSON containers. Doubles are written in shortest round-trip form,
// so loading a saved model yields an object equal to the original.
std::string serialize(const ChainModel& model);
std::string serialize(const EnsembleModel& model);
std::string serialize(const FusionModel& model);
std::string serialize(const TrainedClassifier& model);

ChainModel deserialize_chain(std::string_view text);
EnsembleModel deserialize_ensemble(std::string_view text);
FusionModel deserialize_fusion(std::string_view text);
TrainedClassifier deserialize_classifier(std::string_view text);

void save_classifier(const TrainedClassifier& model, const std::filesystem::path& path);
TrainedClassifier load_classifier(const std::filesystem::path& path);

}  // namespace chainfuse
