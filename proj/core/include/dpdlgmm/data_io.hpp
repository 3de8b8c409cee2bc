#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpdlgmm/types.hpp"

namespace dpdlgmm {

/// Malformed or unreadable input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMissingLabel = -1;

struct DatasetMeta {
  std::string name;
  bool binarized = false;
  std::array<double, 3> split_ratios{1.0, 0.0, 0.0};
};

/// Samples in rows. Labels are 0-based cluster indices (kMissingLabel where
/// absent); an empty vector means the data set carries no labels at all.
struct Dataset {
  Matrix x;
  std::vector<int> labels;
  DatasetMeta meta;

  int size() const { return static_cast<int>(x.rows()); }
  int dim() const { return static_cast<int>(x.cols()); }
  bool has_labels() const { return !labels.empty(); }
  int labeled_count() const;

  /// Throws DataError on non-finite values or bad label entries.
  void validate() const;
};

/// Comma-separated reals with an optional header row. The header is detected
/// by any non-numeric field in the first row. If `label_column` is given the
/// header must contain it; that column holds 1-based labels, with an empty
/// field or "NA" marking a missing one.
Dataset load_csv(const std::filesystem::path& path,
                 const std::optional<std::string>& label_column = std::nullopt);

/// True when the file has a header row naming `column`.
bool csv_has_column(const std::filesystem::path& path, const std::string& column);

/// Writes x (and a trailing "y" column of 1-based labels if present) with a
/// header row x1..xp. Doubles are written with 17 significant digits.
void save_csv(const std::filesystem::path& path, const Dataset& data);

/// MNIST-style IDX files: unsigned-byte images (magic 0x00000803) and an
/// optional label file (magic 0x00000801). Pixels are divided by 255 and, if
/// `binarize_threshold` is set, mapped to 1 where >= threshold and 0 elsewhere.
Dataset load_idx_images(const std::filesystem::path& images,
                        const std::optional<std::filesystem::path>& labels = std::nullopt,
                        std::optional<double> binarize_threshold = std::nullopt);

void write_idx_images(const std::filesystem::path& path, int rows, int cols,
                      const std::vector<std::uint8_t>& pixels);
void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels);

enum class Nonlinearity { Linear, Tanh };

Nonlinearity parse_nonlinearity(const std::string& name);
std::string to_string(Nonlinearity kind);

struct SyntheticSpec {
  int clusters = 3;
  int n_per_cluster = 100;
  int latent_dim = 2;
  int data_dim = 10;
  double separation = 10.0;
  Nonlinearity nonlinearity = Nonlinearity::Linear;
  double noise_scale = 0.1;
  std::uint64_t seed = 0;
};

/// Gaussian clusters in a latent space mapped to data space.
///
/// Latent centers sit on a circle (on a line when latent_dim = 1) with
/// neighbouring centers `separation` apart; each cluster has unit latent
/// spread. A latent u becomes A u for Linear, where A has orthonormal
/// columns, and A u + tanh(C u) for Tanh. Gaussian noise of standard
/// deviation noise_scale is added last. Rows are grouped by cluster.
Dataset make_synthetic_mixture(const SyntheticSpec& spec);

/// Rows of `data` in the given order.
Dataset subset(const Dataset& data, const std::vector<int>& rows);

struct Split {
  Dataset train, valid, test;
};

/// Disjoint permutation split with sizes from cumulative rounding of the
/// ratios. When labels exist the permutation interleaves classes so each
/// part keeps the class proportions.
Split split(const Dataset& data, const std::array<double, 3>& ratios, std::uint64_t seed);

/// Keeps round(fraction * N) labels, drawn at random but spread over the
/// classes in proportion to their size, and marks the rest missing.
Dataset mask_labels(const Dataset& data, double fraction, std::uint64_t seed);

}  // namespace dpdlgmm
