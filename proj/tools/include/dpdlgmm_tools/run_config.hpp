#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpdlgmm/data_io.hpp"
#include "dpdlgmm/generative.hpp"
#include "dpdlgmm/train.hpp"

namespace dpdlgmm::cli {

/// Bad command line or configuration file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DataSource { Csv, Idx, Synthetic };

/// Everything a training run needs. See README.md for the file grammar.
struct RunConfig {
  TrainConfig train;

  DataSource source = DataSource::Csv;
  std::filesystem::path data_path;                 // csv file or idx image file
  std::optional<std::filesystem::path> idx_labels;
  std::optional<std::string> label_column;
  std::optional<double> binarize_threshold;
  SyntheticSpec synthetic;

  EmissionKind emission = EmissionKind::Gaussian;
  std::vector<int> layer_dims;  // p_L .. p_1, top first
  std::vector<int> hidden{64};

  double label_fraction = 0.0;
  std::array<double, 3> split_ratios{1.0, 0.0, 0.0};
  std::uint64_t split_seed = 0;

  std::filesystem::path output_dir = ".";
  int checkpoint_every = 0;  // outer iterations between checkpoints, 0 = final only
  int predict_samples = 100;

  /// Latent sizes in model order p_1 .. p_L.
  std::vector<int> latent_dims() const;
  ModelSpec model_spec(int data_dim) const;

  /// Range checks, plus existence of referenced files when `check_paths`.
  void validate(bool check_paths = true) const;
};

/// Parsed key = value pairs in file order. Blank lines and lines starting
/// with '#' are ignored.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

KeyValues parse_key_values(const std::string& text);

/// Builds a RunConfig; relative paths are resolved against `base_dir`.
/// Throws ConfigError on unknown keys or malformed values.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir);

/// Reads and parses a configuration file (paths relative to its directory).
RunConfig load_run_config(const std::filesystem::path& path, std::string* text = nullptr);

/// The synth_* settings of a configuration. Other keys are checked but unused.
SyntheticSpec parse_synthetic_config(const std::string& text);

/// Loads, masks and splits the data named by the configuration. Returns the
/// training part; `parts` receives all three parts when non-null.
Dataset load_training_data(const RunConfig& cfg, Split* parts = nullptr);

}  // namespace dpdlgmm::cli
