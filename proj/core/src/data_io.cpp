#include "dpdlgmm/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/QR>

namespace dpdlgmm {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string_view rest(line);
  while (true) {
    const auto comma = rest.find(',');
    out.push_back(trim(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

std::optional<double> parse_real(const std::string& field) {
  if (field.empty()) return std::nullopt;
  const char* begin = field.data();
  const char* end = begin + field.size();
  if (*begin == '+') ++begin;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::string where(const std::filesystem::path& path, size_t line, size_t column) {
  return path.string() + ": row " + std::to_string(line) + ", column " + std::to_string(column);
}

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw DataError(path.string() + ": truncated IDX header");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::vector<std::uint8_t> read_bytes(std::istream& in, size_t count,
                                     const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes(count);
  if (count > 0 && !in.read(reinterpret_cast<char*>(bytes.data()),
                            static_cast<std::streamsize>(count)))
    throw DataError(path.string() + ": truncated IDX payload, expected " + std::to_string(count) +
                    " bytes");
  return bytes;
}

// Class-interleaved permutation: each class is shuffled, its j-th member keyed
// by (j + 0.5) / n_class, and rows are sorted by key.
std::vector<int> stratified_order(const Dataset& data, Rng& rng) {
  const int n = data.size();
  std::map<int, std::vector<int>> by_class;
  for (int i = 0; i < n; ++i) by_class[data.has_labels() ? data.labels[i] : 0].push_back(i);
  struct Keyed {
    double key;
    int cls;
    int row;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(static_cast<size_t>(n));
  for (auto& [cls, rows] : by_class) {
    std::shuffle(rows.begin(), rows.end(), rng);
    const double nc = static_cast<double>(rows.size());
    for (size_t j = 0; j < rows.size(); ++j)
      keyed.push_back({(static_cast<double>(j) + 0.5) / nc, cls, rows[j]});
  }
  std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    return a.key != b.key ? a.key < b.key : a.cls < b.cls;
  });
  std::vector<int> order;
  order.reserve(keyed.size());
  for (const auto& k : keyed) order.push_back(k.row);
  return order;
}

}  // namespace

int Dataset::labeled_count() const {
  return static_cast<int>(
      std::count_if(labels.begin(), labels.end(), [](int y) { return y != kMissingLabel; }));
}

void Dataset::validate() const {
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (!std::isfinite(x(i, j)))
        throw DataError("non-finite value at row " + std::to_string(i + 1) + ", column " +
                        std::to_string(j + 1));
    }
  }
  if (!labels.empty()) {
    if (static_cast<Eigen::Index>(labels.size()) != x.rows())
      throw DataError("label count " + std::to_string(labels.size()) + " != row count " +
                      std::to_string(x.rows()));
    for (size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] < kMissingLabel)
        throw DataError("invalid label at row " + std::to_string(i + 1));
    }
  }
}

Dataset load_csv(const std::filesystem::path& path, const std::optional<std::string>& label_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file " + path.string());

  std::vector<std::vector<std::string>> rows;
  std::vector<size_t> line_numbers;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    rows.push_back(split_fields(line));
    line_numbers.push_back(line_no);
  }

  Dataset data;
  data.meta.name = path.stem().string();
  if (rows.empty()) {
    if (label_column) throw DataError(path.string() + ": empty file has no column " + *label_column);
    return data;
  }

  std::vector<std::string> header;
  const bool has_header = std::any_of(rows.front().begin(), rows.front().end(),
                                      [](const std::string& f) { return !parse_real(f); });
  if (has_header) {
    header = rows.front();
    rows.erase(rows.begin());
    line_numbers.erase(line_numbers.begin());
  }

  const size_t width = has_header ? header.size() : (rows.empty() ? 0 : rows.front().size());
  std::optional<size_t> label_index;
  if (label_column) {
    const auto it = std::find(header.begin(), header.end(), *label_column);
    if (it == header.end())
      throw DataError(path.string() + ": no column named '" + *label_column + "'");
    label_index = static_cast<size_t>(it - header.begin());
  }

  const size_t p = width - (label_index ? 1 : 0);
  data.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
  if (label_index) data.labels.assign(rows.size(), kMissingLabel);
  for (size_t r = 0; r < rows.size(); ++r) {
    const auto& fields = rows[r];
    if (fields.size() != width)
      throw DataError(path.string() + ": row " + std::to_string(line_numbers[r]) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(width));
    Eigen::Index col = 0;
    for (size_t c = 0; c < width; ++c) {
      if (label_index && c == *label_index) {
        const std::string& f = fields[c];
        if (f.empty() || f == "NA") continue;
        const auto v = parse_real(f);
        if (!v || *v != std::floor(*v) || *v < 1.0)
          throw DataError(where(path, line_numbers[r], c + 1) + ": label '" + f +
                          "' is not a positive integer");
        data.labels[r] = static_cast<int>(*v) - 1;
        continue;
      }
      const auto v = parse_real(fields[c]);
      if (!v)
        throw DataError(where(path, line_numbers[r], c + 1) + ": cannot parse '" + fields[c] +
                        "'");
      if (!std::isfinite(*v))
        throw DataError(where(path, line_numbers[r], c + 1) + ": non-finite value '" +
                        fields[c] + "'");
      data.x(static_cast<Eigen::Index>(r), col++) = *v;
    }
  }
  return data;
}

bool csv_has_column(const std::filesystem::path& path, const std::string& column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    return std::find(fields.begin(), fields.end(), column) != fields.end();
  }
  return false;
}

void save_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  for (int j = 0; j < data.dim(); ++j) out << (j ? "," : "") << 'x' << j + 1;
  if (data.has_labels()) out << (data.dim() ? "," : "") << 'y';
  out << '\n';
  for (int i = 0; i < data.size(); ++i) {
    for (int j = 0; j < data.dim(); ++j) out << (j ? "," : "") << data.x(i, j);
    if (data.has_labels()) {
      out << (data.dim() ? "," : "");
      if (data.labels[i] != kMissingLabel) out << data.labels[i] + 1;
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

Dataset load_idx_images(const std::filesystem::path& images,
                        const std::optional<std::filesystem::path>& labels,
                        std::optional<double> binarize_threshold) {
  std::ifstream in(images, std::ios::binary);
  if (!in) throw DataError("cannot open image file " + images.string());
  const std::uint32_t magic = read_be32(in, images);
  if (magic != 0x00000803u) {
    std::ostringstream msg;
    msg << images.string() << ": bad IDX image magic 0x" << std::hex << magic;
    throw DataError(msg.str());
  }
  const std::uint32_t n = read_be32(in, images);
  const std::uint32_t h = read_be32(in, images);
  const std::uint32_t w = read_be32(in, images);
  const size_t p = static_cast<size_t>(h) * w;
  const auto pixels = read_bytes(in, static_cast<size_t>(n) * p, images);

  Dataset data;
  data.meta.name = images.stem().string();
  data.meta.binarized = binarize_threshold.has_value();
  data.x.resize(n, static_cast<Eigen::Index>(p));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < p; ++j) {
      double v = pixels[i * p + j] / 255.0;
      if (binarize_threshold) v = v >= *binarize_threshold ? 1.0 : 0.0;
      data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }

  if (labels) {
    std::ifstream lin(*labels, std::ios::binary);
    if (!lin) throw DataError("cannot open label file " + labels->string());
    const std::uint32_t lmagic = read_be32(lin, *labels);
    if (lmagic != 0x00000801u) {
      std::ostringstream msg;
      msg << labels->string() << ": bad IDX label magic 0x" << std::hex << lmagic;
      throw DataError(msg.str());
    }
    const std::uint32_t ln = read_be32(lin, *labels);
    if (ln != n)
      throw DataError(labels->string() + ": " + std::to_string(ln) + " labels for " +
                      std::to_string(n) + " images");
    const auto bytes = read_bytes(lin, ln, *labels);
    data.labels.assign(bytes.begin(), bytes.end());
  }
  return data;
}

void write_idx_images(const std::filesystem::path& path, int rows, int cols,
                      const std::vector<std::uint8_t>& pixels) {
  if (rows <= 0 || cols <= 0 || pixels.size() % (static_cast<size_t>(rows) * cols) != 0)
    throw std::invalid_argument("write_idx_images: pixel count does not match image shape");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_be32(out, 0x00000803u);
  write_be32(out, static_cast<std::uint32_t>(pixels.size() / (static_cast<size_t>(rows) * cols)));
  write_be32(out, static_cast<std::uint32_t>(rows));
  write_be32(out, static_cast<std::uint32_t>(cols));
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
}

void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_be32(out, 0x00000801u);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
}

Nonlinearity parse_nonlinearity(const std::string& name) {
  if (name == "linear") return Nonlinearity::Linear;
  if (name == "tanh") return Nonlinearity::Tanh;
  throw std::invalid_argument("unknown nonlinearity '" + name + "' (expected linear or tanh)");
}

std::string to_string(Nonlinearity kind) {
  return kind == Nonlinearity::Linear ? "linear" : "tanh";
}

Dataset make_synthetic_mixture(const SyntheticSpec& spec) {
  if (spec.clusters < 1 || spec.n_per_cluster < 0 || spec.latent_dim < 1 || spec.data_dim < 1)
    throw std::invalid_argument("make_synthetic_mixture: clusters and dims must be >= 1");
  if (!(spec.separation >= 0.0) || !(spec.noise_scale >= 0.0))
    throw std::invalid_argument("make_synthetic_mixture: separation and noise must be >= 0");

  Rng rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int K = spec.clusters;
  const int q = spec.latent_dim;
  const int p = spec.data_dim;

  Matrix centers = Matrix::Zero(K, q);
  if (K > 1) {
    if (q == 1) {
      for (int k = 0; k < K; ++k) centers(k, 0) = spec.separation * (k - 0.5 * (K - 1));
    } else {
      const double radius = spec.separation / (2.0 * std::sin(std::numbers::pi / K));
      for (int k = 0; k < K; ++k) {
        const double angle = 2.0 * std::numbers::pi * k / K;
        centers(k, 0) = radius * std::cos(angle);
        centers(k, 1) = radius * std::sin(angle);
      }
    }
  }

  const int m = std::max(p, q);
  Matrix g(m, m);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
  const Matrix a = Eigen::HouseholderQR<Matrix>(g).householderQ() * Matrix::Identity(m, m);
  const Matrix map = a.topLeftCorner(p, q);
  Matrix c(p, q);
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = normal(rng) / std::sqrt(q);

  Dataset data;
  data.meta.name = "synthetic";
  const int n = K * spec.n_per_cluster;
  data.x.resize(n, p);
  data.labels.resize(static_cast<size_t>(n));
  Vector u(q);
  int row = 0;
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < spec.n_per_cluster; ++i, ++row) {
      for (int j = 0; j < q; ++j) u[j] = centers(k, j) + normal(rng);
      Vector x = map * u;
      if (spec.nonlinearity == Nonlinearity::Tanh) x += (c * u).array().tanh().matrix();
      for (int j = 0; j < p; ++j) x[j] += spec.noise_scale * normal(rng);
      data.x.row(row) = x.transpose();
      data.labels[static_cast<size_t>(row)] = k;
    }
  }
  return data;
}

Dataset subset(const Dataset& data, const std::vector<int>& rows) {
  Dataset out;
  out.meta = data.meta;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), data.x.cols());
  if (data.has_labels()) out.labels.reserve(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    const int r = rows[i];
    if (r < 0 || r >= data.size()) throw std::out_of_range("subset: row index out of range");
    out.x.row(static_cast<Eigen::Index>(i)) = data.x.row(r);
    if (data.has_labels()) out.labels.push_back(data.labels[static_cast<size_t>(r)]);
  }
  return out;
}

Split split(const Dataset& data, const std::array<double, 3>& ratios, std::uint64_t seed) {
  double total = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0)) throw std::invalid_argument("split: ratios must be non-negative");
    total += r;
  }
  if (!(total > 0.0) || total > 1.0 + 1e-12)
    throw std::invalid_argument("split: ratios must be positive and sum to at most 1");

  Rng rng(seed);
  const auto order = stratified_order(data, rng);
  const double n = static_cast<double>(order.size());
  std::array<size_t, 4> bounds{0, 0, 0, 0};
  double cumulative = 0.0;
  for (int k = 0; k < 3; ++k) {
    cumulative += ratios[k];
    bounds[k + 1] = std::min(order.size(), static_cast<size_t>(std::llround(cumulative * n)));
  }

  std::array<Dataset, 3> parts;
  for (int k = 0; k < 3; ++k) {
    std::vector<int> rows(order.begin() + static_cast<std::ptrdiff_t>(bounds[k]),
                          order.begin() + static_cast<std::ptrdiff_t>(bounds[k + 1]));
    std::shuffle(rows.begin(), rows.end(), rng);
    parts[k] = subset(data, rows);
    parts[k].meta.split_ratios = ratios;
  }
  return {std::move(parts[0]), std::move(parts[1]), std::move(parts[2])};
}

Dataset mask_labels(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!data.has_labels()) throw std::invalid_argument("mask_labels: data set has no labels");
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw std::invalid_argument("mask_labels: fraction must lie in [0, 1]");
  for (int y : data.labels) {
    if (y == kMissingLabel) throw std::invalid_argument("mask_labels: labels must be complete");
  }
  Rng rng(seed);
  const auto order = stratified_order(data, rng);
  const auto keep = static_cast<size_t>(std::llround(fraction * static_cast<double>(order.size())));
  Dataset out = data;
  std::fill(out.labels.begin(), out.labels.end(), kMissingLabel);
  for (size_t i = 0; i < keep; ++i) {
    const auto r = static_cast<size_t>(order[i]);
    out.labels[r] = data.labels[r];
  }
  return out;
}

}  // namespace dpdlgmm
