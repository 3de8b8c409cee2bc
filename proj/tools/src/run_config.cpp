#include "dpdlgmm_tools/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

namespace dpdlgmm::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
  throw ConfigError("config key '" + key + "': cannot parse '" + value + "' as " + expected);
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

int to_int32(const std::string& key, const std::string& v) {
  const long long out = to_int(key, v);
  if (out < std::numeric_limits<int>::min() || out > std::numeric_limits<int>::max())
    bad_value(key, v, "a 32-bit integer");
  return static_cast<int>(out);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "an unsigned integer");
  return out;
}

double to_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    bad_value(key, v, "a finite real");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "a boolean");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  if (trim(v).empty()) return out;
  for (const auto& item : split_list(v)) out.push_back(to_int32(key, item));
  return out;
}

using Setter = std::function<void(const std::string& key, const std::string& value)>;

std::map<std::string, Setter> synthetic_setters(SyntheticSpec& s) {
  return {
      {"synth_clusters", [&](auto& k, auto& v) { s.clusters = to_int32(k, v); }},
      {"synth_n_per_cluster", [&](auto& k, auto& v) { s.n_per_cluster = to_int32(k, v); }},
      {"synth_latent_dim", [&](auto& k, auto& v) { s.latent_dim = to_int32(k, v); }},
      {"synth_data_dim", [&](auto& k, auto& v) { s.data_dim = to_int32(k, v); }},
      {"synth_separation", [&](auto& k, auto& v) { s.separation = to_real(k, v); }},
      {"synth_nonlinearity",
       [&](auto&, auto& v) {
         try {
           s.nonlinearity = parse_nonlinearity(v);
         } catch (const std::invalid_argument& e) {
           throw ConfigError(e.what());
         }
       }},
      {"synth_noise", [&](auto& k, auto& v) { s.noise_scale = to_real(k, v); }},
      {"synth_seed", [&](auto& k, auto& v) { s.seed = to_u64(k, v); }},
  };
}

void apply_settings(const KeyValues& kv, std::map<std::string, Setter>& setters) {
  std::set<std::string> seen;
  for (const auto& [key, value] : kv) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("config key '" + key + "' given twice");
    it->second(key, value);
  }
}

void validate_synthetic(const SyntheticSpec& s) {
  if (s.clusters < 1) throw ConfigError("synth_clusters must be >= 1");
  if (s.n_per_cluster < 0) throw ConfigError("synth_n_per_cluster must be >= 0");
  if (s.latent_dim < 1 || s.data_dim < 1) throw ConfigError("synthetic dims must be >= 1");
  if (s.separation < 0.0 || s.noise_scale < 0.0)
    throw ConfigError("synth_separation and synth_noise must be >= 0");
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues out;
  std::stringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    out.emplace_back(key, trim(t.substr(eq + 1)));
  }
  return out;
}

std::vector<int> RunConfig::latent_dims() const {
  return {layer_dims.rbegin(), layer_dims.rend()};
}

ModelSpec RunConfig::model_spec(int data_dim) const {
  ModelSpec spec;
  spec.emission = emission;
  spec.data_dim = data_dim;
  spec.latent_dims = latent_dims();
  spec.hidden = hidden;
  return spec;
}

void RunConfig::validate(bool check_paths) const {
  try {
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (layer_dims.empty()) throw ConfigError("layer_dims must list at least one latent layer");
  for (int d : layer_dims)
    if (d < 1) throw ConfigError("layer_dims entries must be >= 1");
  for (int h : hidden)
    if (h < 1) throw ConfigError("hidden widths must be >= 1");
  if (!(label_fraction >= 0.0 && label_fraction <= 1.0))
    throw ConfigError("label_fraction must lie in [0, 1]");
  double total = 0.0;
  for (double r : split_ratios) {
    if (r < 0.0) throw ConfigError("split ratios must be non-negative");
    total += r;
  }
  if (!(split_ratios[0] > 0.0) || total > 1.0 + 1e-12)
    throw ConfigError("split ratios need a positive training share and a sum <= 1");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  if (predict_samples < 1) throw ConfigError("predict_samples must be >= 1");
  if (binarize_threshold && !(*binarize_threshold >= 0.0 && *binarize_threshold <= 1.0))
    throw ConfigError("binarize_threshold must lie in [0, 1]");
  if (source == DataSource::Synthetic) validate_synthetic(synthetic);
  if (source == DataSource::Csv && binarize_threshold)
    throw ConfigError("binarize_threshold applies to idx data only");
  if (source != DataSource::Synthetic && data_path.empty())
    throw ConfigError("config key 'data' is required for csv and idx sources");
  if (check_paths && source != DataSource::Synthetic) {
    if (!std::filesystem::exists(data_path))
      throw DataError("data file not found: " + data_path.string());
    if (idx_labels && !std::filesystem::exists(*idx_labels))
      throw DataError("label file not found: " + idx_labels->string());
  }
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig c;
  auto resolve = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_absolute() ? p : base_dir / p;
  };
  std::map<std::string, Setter> setters = {
      {"truncation", [&](auto& k, auto& v) { c.train.truncation = to_int32(k, v); }},
      {"eta", [&](auto& k, auto& v) { c.train.eta = to_real(k, v); }},
      {"alpha", [&](auto& k, auto& v) { c.train.alpha = to_real(k, v); }},
      {"mc_samples", [&](auto& k, auto& v) { c.train.mc_samples = to_int32(k, v); }},
      {"epochs", [&](auto& k, auto& v) { c.train.epochs = to_int32(k, v); }},
      {"max_outer_iters", [&](auto& k, auto& v) { c.train.max_outer_iters = to_int32(k, v); }},
      {"elbo_rel_tol", [&](auto& k, auto& v) { c.train.elbo_rel_tol = to_real(k, v); }},
      {"seed", [&](auto& k, auto& v) { c.train.seed = to_u64(k, v); }},
      {"batch_size", [&](auto& k, auto& v) { c.train.batch_size = to_int32(k, v); }},
      {"init_temperature", [&](auto& k, auto& v) { c.train.init_temperature = to_real(k, v); }},
      {"kmeans_iters", [&](auto& k, auto& v) { c.train.kmeans_iters = to_int32(k, v); }},
      {"svi",
       [&](auto& k, auto& v) {
         if (to_bool(k, v)) {
           if (!c.train.svi) c.train.svi = SviConfig{};
         } else {
           c.train.svi.reset();
         }
       }},
      {"svi_batch_size",
       [&](auto& k, auto& v) {
         if (!c.train.svi) c.train.svi = SviConfig{};
         c.train.svi->batch_size = to_int32(k, v);
       }},
      {"svi_tau",
       [&](auto& k, auto& v) {
         if (!c.train.svi) c.train.svi = SviConfig{};
         c.train.svi->tau = to_real(k, v);
       }},
      {"svi_kappa",
       [&](auto& k, auto& v) {
         if (!c.train.svi) c.train.svi = SviConfig{};
         c.train.svi->kappa = to_real(k, v);
       }},
      {"data_source",
       [&](auto& k, auto& v) {
         if (v == "csv") c.source = DataSource::Csv;
         else if (v == "idx") c.source = DataSource::Idx;
         else if (v == "synthetic") c.source = DataSource::Synthetic;
         else bad_value(k, v, "csv, idx or synthetic");
       }},
      {"data", [&](auto&, auto& v) { c.data_path = resolve(v); }},
      {"idx_labels", [&](auto&, auto& v) { c.idx_labels = resolve(v); }},
      {"label_column", [&](auto&, auto& v) { c.label_column = v; }},
      {"binarize_threshold", [&](auto& k, auto& v) { c.binarize_threshold = to_real(k, v); }},
      {"emission",
       [&](auto&, auto& v) {
         try {
           c.emission = parse_emission_kind(v);
         } catch (const std::invalid_argument& e) {
           throw ConfigError(e.what());
         }
       }},
      {"layer_dims", [&](auto& k, auto& v) { c.layer_dims = to_int_list(k, v); }},
      {"hidden", [&](auto& k, auto& v) { c.hidden = to_int_list(k, v); }},
      {"label_fraction", [&](auto& k, auto& v) { c.label_fraction = to_real(k, v); }},
      {"split",
       [&](auto& k, auto& v) {
         const auto items = split_list(v);
         if (items.size() != 3) bad_value(k, v, "three comma-separated ratios");
         for (int i = 0; i < 3; ++i) c.split_ratios[i] = to_real(k, items[i]);
       }},
      {"split_seed", [&](auto& k, auto& v) { c.split_seed = to_u64(k, v); }},
      {"output_dir", [&](auto&, auto& v) { c.output_dir = resolve(v); }},
      {"checkpoint_every", [&](auto& k, auto& v) { c.checkpoint_every = to_int32(k, v); }},
      {"predict_samples", [&](auto& k, auto& v) { c.predict_samples = to_int32(k, v); }},
  };
  setters.merge(synthetic_setters(c.synthetic));
  c.output_dir = base_dir;
  apply_settings(parse_key_values(text), setters);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, std::string* text) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  if (text) *text = buf.str();
  return parse_run_config(buf.str(), path.parent_path().empty() ? "." : path.parent_path());
}

SyntheticSpec parse_synthetic_config(const std::string& text) {
  const RunConfig c = parse_run_config(text, ".");
  validate_synthetic(c.synthetic);
  return c.synthetic;
}

Dataset load_training_data(const RunConfig& cfg, Split* parts) {
  Dataset data;
  switch (cfg.source) {
    case DataSource::Csv:
      data = load_csv(cfg.data_path, cfg.label_column);
      break;
    case DataSource::Idx:
      data = load_idx_images(cfg.data_path, cfg.idx_labels, cfg.binarize_threshold);
      break;
    case DataSource::Synthetic:
      data = make_synthetic_mixture(cfg.synthetic);
      break;
  }
  data.validate();
  if (data.size() == 0) throw DataError("data set is empty");

  Split split_parts = split(data, cfg.split_ratios, cfg.split_seed);
  Dataset train = std::move(split_parts.train);
  if (train.has_labels()) {
    if (cfg.label_fraction > 0.0) {
      if (train.labeled_count() != train.size())
        throw DataError("label_fraction needs a fully labeled data set");
      train = mask_labels(train, cfg.label_fraction, cfg.split_seed);
    } else {
      train.labels.clear();
    }
  } else if (cfg.label_fraction > 0.0) {
    throw DataError("label_fraction > 0 but the data carry no labels");
  }
  for (int y : train.labels) {
    if (y >= cfg.train.truncation)
      throw DataError("label " + std::to_string(y + 1) + " exceeds truncation " +
                      std::to_string(cfg.train.truncation));
  }
  if (parts) {
    parts->train = train;
    parts->valid = std::move(split_parts.valid);
    parts->test = std::move(split_parts.test);
  }
  return train;
}

}  // namespace dpdlgmm::cli
