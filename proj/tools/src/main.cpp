#include <CLI11.hpp>

#include "dpdlgmm_tools/commands.hpp"

namespace cli = dpdlgmm::cli;

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet-process deep latent Gaussian mixture: training and inference"};
  app.require_subcommand(1);
  app.footer("Log verbosity: DPDLGMM_LOG=quiet|error|warn|info|debug (default warn).\n"
             "Exit codes: 0 ok, 1 usage/config, 2 data, 3 numerical failure.");

  std::string config, checkpoint, data, out, cluster;
  long count = 0;
  int layer = 0;

  auto* train = app.add_subcommand("train", "Train a model from a configuration file");
  train->add_option("config", config, "Configuration file")->required();

  auto* predict = app.add_subcommand("predict", "Predictive cluster probabilities for new rows");
  predict->add_option("checkpoint", checkpoint)->required();
  predict->add_option("data", data, "CSV of inputs")->required();
  predict->add_option("out", out, "Output CSV")->required();

  auto* generate = app.add_subcommand("generate", "Ancestral samples from trained clusters");
  generate->add_option("checkpoint", checkpoint)->required();
  generate->add_option("cluster", cluster, "1-based cluster index or 'all'")->required();
  generate->add_option("count", count, "Samples per cluster")->required();
  generate->add_option("out", out, "Output CSV")->required();

  auto* latents = app.add_subcommand("export-latents", "Recognition means of one latent layer");
  latents->add_option("checkpoint", checkpoint)->required();
  latents->add_option("data", data, "CSV of inputs")->required();
  latents->add_option("layer", layer, "1-based layer, 1 is next to the data")->required();
  latents->add_option("out", out, "Output CSV")->required();

  auto* synth = app.add_subcommand("synth", "Write a synthetic mixture data set");
  synth->add_option("config", config, "File of synth_* keys")->required();
  synth->add_option("out", out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  if (*train) return cli::cmd_train(config);
  if (*predict) return cli::cmd_predict(checkpoint, data, out);
  if (*generate) return cli::cmd_generate(checkpoint, cluster, count, out);
  if (*latents) return cli::cmd_export_latents(checkpoint, data, layer, out);
  if (*synth) return cli::cmd_synth(config, out);
  return cli::kExitUsage;
}
