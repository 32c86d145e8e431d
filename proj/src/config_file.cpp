#include "cam/config_file.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "cam/error.hpp"

namespace cam {

using nlohmann::json;

NamedPreset lookup_preset(const std::string& name) {
  static const std::map<std::string, NamedPreset> presets = {
      {"dtd", {5.0, 0.5, 20.0}},
      {"fgvc_aircraft", {5.0, 0.01, 2.0}},
      {"sun397", {100.0, 0.01, 20.0}},
      {"caltech101", {10.0, 0.01, 0.2}},
      {"oxford_pets", {1.0, 0.1, 0.02}},
      {"food101", {1.0, 0.5, 20.0}},
      {"flowers102", {10.0, 0.5, 0.002}},
      {"ucf101", {5.0, 0.1, 20.0}},
      {"stanford_cars", {10.0, 0.5, 0.2}},
      {"imagenet", {10.0, 0.1, 2.0}},
      {"eurosat", {100.0, 2.0, 20.0}},
  };
  const auto it = presets.find(name);
  if (it == presets.end()) {
    std::string known;
    for (const auto& [key, value] : presets) {
      if (!known.empty()) known += ", ";
      known += key;
    }
    throw Error(ErrorCode::kConfigError,
                "config.preset: unknown preset \"" + name + "\" (known: " +
                    known + ")");
  }
  return it->second;
}

namespace {

template <typename T>
void read_field(const json& obj, const char* name, T& into) {
  if (!obj.contains(name)) return;
  try {
    into = obj.at(name).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kConfigError,
                std::string("config.") + name + ": wrong type");
  }
}

}  // namespace

FileConfig parse_config_json(const std::string& text) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError,
                std::string("config is not valid JSON: ") + e.what());
  }
  if (!obj.is_object())
    throw Error(ErrorCode::kConfigError, "config root must be an object");

  static const std::set<std::string> known = {
      "preset",     "shots",      "epochs",    "warmup_epochs",
      "warmup_lr",  "base_lr",    "batch_size", "alpha",
      "beta",       "gamma1",     "gamma2",    "convention",
      "tau",        "epsilon",    "heads",     "sigma_init",
      "unified_cov_threshold",    "seed",      "adapter_enabled",
      "momentum",   "normalize"};
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (known.find(it.key()) == known.end())
      throw Error(ErrorCode::kConfigError,
                  "config." + it.key() + ": unknown field");

  FileConfig out;
  if (obj.contains("preset")) {
    std::string name;
    read_field(obj, "preset", name);
    const NamedPreset preset = lookup_preset(name);
    out.train.weights.alpha = preset.alpha;
    out.train.weights.beta = preset.beta;
    out.train.base_lr = preset.base_lr;
  }
  read_field(obj, "shots", out.train.shots);
  read_field(obj, "epochs", out.train.epochs);
  read_field(obj, "warmup_epochs", out.train.warmup_epochs);
  read_field(obj, "warmup_lr", out.train.warmup_lr);
  read_field(obj, "base_lr", out.train.base_lr);
  read_field(obj, "batch_size", out.train.batch_size);
  read_field(obj, "alpha", out.train.weights.alpha);
  read_field(obj, "beta", out.train.weights.beta);
  read_field(obj, "gamma1", out.train.gamma1);
  read_field(obj, "gamma2", out.train.gamma2);
  if (obj.contains("convention")) {
    std::string convention;
    read_field(obj, "convention", convention);
    if (convention == "fecam")
      out.train.convention = ShrinkageConvention::kFecamStyle;
    else if (convention == "literal")
      out.train.convention = ShrinkageConvention::kLiteral;
    else
      throw Error(ErrorCode::kConfigError,
                  "config.convention: must be \"fecam\" or \"literal\"");
  }
  read_field(obj, "tau", out.train.tau);
  read_field(obj, "epsilon", out.train.epsilon);
  read_field(obj, "heads", out.train.heads);
  read_field(obj, "sigma_init", out.train.sigma_init);
  read_field(obj, "unified_cov_threshold", out.train.unified_cov_threshold);
  read_field(obj, "seed", out.train.seed);
  read_field(obj, "adapter_enabled", out.train.adapter_enabled);
  read_field(obj, "momentum", out.train.momentum);
  read_field(obj, "normalize", out.normalize);

  try {
    out.train.resolved().validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigError, e.what());
  }
  return out;
}

FileConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::kConfigError, path + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_json(ss.str());
}

}  // namespace cam
