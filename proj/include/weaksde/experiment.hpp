#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "weaksde/analysis.hpp"
#include "weaksde/errors.hpp"
#include "weaksde/models.hpp"
#include "weaksde/noise.hpp"
#include "weaksde/samplers.hpp"
#include "weaksde/schemes.hpp"

namespace weaksde {

using json = nlohmann::json;

/// Runtime failure inside an experiment; keeps the kind of the underlying error.
struct ExperimentError : Error {
  ExperimentError(const std::string& context, const Error& cause)
      : Error(context + ": " + cause.what()), inner_kind(cause.kind()) {}
  const char* kind() const noexcept override { return inner_kind.c_str(); }

  std::string inner_kind;
};

// Parsers for config sub-trees: the runtime object plus the normalized JSON echoed in reports.
// `key` is the path used in error messages.
std::pair<NoiseSpec, json> parse_noise(const json& j, const std::string& key);
std::pair<SdeModel, json> parse_model(const json& j, const std::string& key);
std::pair<TargetDensity, json> parse_target(const json& j, const std::string& key);

struct SchemeEntry {
  std::string label;
  Scheme scheme;
};

struct WeakOrderSpec {
  SdeModel model;
  std::vector<SchemeEntry> schemes;
  TestFunctionKind test_function = TestFunctionKind::Identity;
  std::vector<double> eps_list;
  double horizon = 1.0;
  std::size_t n_paths = 100000;
};

struct ChainSpec {
  TargetDensity target;
  double eps = 0.01;
  std::size_t n_steps = 1000000;
  std::size_t burn_in = 100000;
  std::size_t thin = 1;
  double init = 0.0;
};

struct SampleSpec {
  ChainSpec chain;
  std::string variant_name;
  UlaVariant variant;
  std::size_t bins = 50;
  Interval range{0, 0};
  bool write_samples = true;
};

struct SgdSpec {
  ChainSpec chain;
  double m1 = 0.0;
  double m2 = 0.0;
  NoiseSpec shape = NoiseSpec::skewed_reference();
  std::size_t bins = 50;
  Interval range{0, 0};
  bool write_samples = true;
};

struct SgldVariantSpec {
  std::string name;  // gaussian | skewed | adaptive_two_point
  SgldDiffusion diffusion;
};

struct SgldBetaSpec {
  ChainSpec chain;
  double m1 = 0.0;
  double m2 = 0.0;
  NoiseSpec shape = NoiseSpec::skewed_reference();
  std::vector<SgldVariantSpec> variants;
  double gamma1 = 0.9;
  double gamma2 = 0.999;
};

struct MomentCheckSpec {
  std::vector<std::pair<std::string, NoiseSpec>> noises;
  std::size_t n = 1000000;
  std::vector<int> orders{1, 2, 3, 4};
  double z_threshold = 5.0;
};

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  int threads = 0;  // 0: OpenMP default
  std::string output_dir = "out";

  std::optional<WeakOrderSpec> weak_order;
  std::optional<SampleSpec> sample;
  std::optional<SgdSpec> sgd;
  std::optional<SgldBetaSpec> sgld;
  std::optional<MomentCheckSpec> moments;

  json canonical;  // the config with every default filled in
};

/// Strict parse: unknown keys, wrong types and out-of-range values throw ConfigError naming the key.
ExperimentConfig parse_config(const json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

struct ExperimentReport {
  json config;
  std::filesystem::path output_dir;
  std::vector<std::string> files;  // CSVs, relative to output_dir
  std::vector<std::string> plots;  // SVGs, relative to output_dir
  json summary;
  double runtime_seconds = 0.0;

  json to_json() const;
};

struct RunOptions {
  std::optional<std::filesystem::path> output_dir;
  std::optional<int> threads;
  bool plots = true;
};

/// Runs the experiment, writes CSVs, plots and report.json into the output directory.
ExperimentReport run_experiment(ExperimentConfig config, const RunOptions& options = {});
ExperimentReport run_config_file(const std::filesystem::path& path, const RunOptions& options = {});

}  // namespace weaksde
