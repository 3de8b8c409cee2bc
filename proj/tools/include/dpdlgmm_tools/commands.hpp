#pragma once

#include <filesystem>
#include <functional>
#include <string>

namespace dpdlgmm::cli {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,      // bad command line or configuration
  kExitData = 2,       // unreadable or inconsistent data, checkpoint or output path
  kExitNumerical = 3,  // non-finite ELBO or responsibilities
};

/// Runs `body`, prints any error to stderr and maps it to an exit code.
int run_guarded(const std::function<void()>& body);

// Each command returns an exit code and never throws.

/// Trains per the configuration; writes <output_dir>/checkpoint.bin and
/// <output_dir>/trace.csv (iter, elbo, N_1..N_T, seconds).
int cmd_train(const std::filesystem::path& config);

/// One CSV row per input row: p_1..p_T then the 1-based argmax label.
int cmd_predict(const std::filesystem::path& checkpoint, const std::filesystem::path& data,
                const std::filesystem::path& out);

/// `cluster` is a 1-based index or "all"; rows are "cluster,x1..xp".
int cmd_generate(const std::filesystem::path& checkpoint, const std::string& cluster,
                 long count, const std::filesystem::path& out);

/// Rows are "cluster,mu1..mu_p,phi_1..phi_T" for the recognition mean of the
/// given 1-based layer under the most responsible cluster.
int cmd_export_latents(const std::filesystem::path& checkpoint,
                       const std::filesystem::path& data, int layer,
                       const std::filesystem::path& out);

/// Writes a synthetic mixture (with a y column of true labels) as CSV.
int cmd_synth(const std::filesystem::path& config, const std::filesystem::path& out);

}  // namespace dpdlgmm::cli
