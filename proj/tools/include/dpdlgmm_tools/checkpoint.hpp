#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dpdlgmm/generative.hpp"
#include "dpdlgmm/train.hpp"
#include "dpdlgmm/variational.hpp"

namespace dpdlgmm::cli {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Trained model plus what is needed to resume or reproduce it.
struct Checkpoint {
  std::string config_text;       // the configuration file, verbatim
  GenerativeParams theta;
  InferenceNets nets;
  StickPosterior gamma;
  double eta = 1.0;
  Vector cluster_mass;           // N_t of the final responsibilities
  std::string rng_state;         // textual mt19937_64 state
  std::vector<TraceRecord> trace;

  /// Minimal variational state for prediction (responsibilities are empty).
  VariationalState variational_state() const;
  Rng rng() const;
};

/// Binary layout: magic "DPDLGMM\0", u32 version, then length-prefixed
/// little-endian fields. Doubles are stored bit for bit.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

/// Throws DataError on a missing, truncated or foreign file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint make_checkpoint(const Trainer& trainer, std::string config_text, Rng rng);

}  // namespace dpdlgmm::cli
