#ifndef CAM_CONFIG_FILE_HPP_
#define CAM_CONFIG_FILE_HPP_

#include <string>

#include "cam/trainer.hpp"

namespace cam {

/// Hyper-parameter preset as published for a dataset: intra/separation loss
/// weights and the base learning rate.
struct NamedPreset {
  double alpha;
  double beta;
  double base_lr;
};

/// Looks up a preset by dataset name (dtd, fgvc_aircraft, sun397,
/// caltech101, oxford_pets, food101, flowers102, ucf101, stanford_cars,
/// imagenet, eurosat). Throws ConfigError for unknown names.
NamedPreset lookup_preset(const std::string& name);

/// Reads a JSON training config. Every field is optional; omitted fields
/// keep their defaults (epochs and gammas resolve from the shot presets).
/// A "preset" field applies a named preset before the explicit fields.
/// Unknown fields are rejected with their path. An optional "normalize"
/// field controls feature normalization on ingestion (default true).
struct FileConfig {
  TrainConfig train;
  bool normalize = true;
};

FileConfig parse_config_json(const std::string& text);
FileConfig load_config_file(const std::string& path);

}  // namespace cam

#endif  // CAM_CONFIG_FILE_HPP_
