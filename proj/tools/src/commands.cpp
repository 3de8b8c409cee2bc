#include "dpdlgmm_tools/commands.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dpdlgmm/data_io.hpp"
#include "dpdlgmm/log.hpp"
#include "dpdlgmm/train.hpp"
#include "dpdlgmm_tools/checkpoint.hpp"
#include "dpdlgmm_tools/run_config.hpp"

namespace dpdlgmm::cli {

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  return out;
}

void close_output(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw DataError("write failed: " + path.string());
}

// Settings stored with the checkpoint; paths in it are not revisited.
RunConfig checkpoint_config(const Checkpoint& ckpt) {
  return parse_run_config(ckpt.config_text, ".");
}

// Input rows for a trained model, dropping the label column (the configured
// one, else "y") if the file carries one.
Matrix load_inputs(const std::filesystem::path& path, const RunConfig& cfg, int data_dim) {
  Dataset data;
  const std::string label = cfg.label_column.value_or("y");
  if (csv_has_column(path, label)) {
    data = load_csv(path, label);
  } else {
    data = load_csv(path);
  }
  if (data.size() > 0 && data.dim() != data_dim)
    throw DataError(path.string() + ": dimension mismatch, expected " + std::to_string(data_dim) +
                    " columns, found " + std::to_string(data.dim()));
  return data.x;
}

void write_trace_header(std::ostream& out, int truncation) {
  out << "iter,elbo";
  for (int t = 1; t <= truncation; ++t) out << ",N_" << t;
  out << ",seconds\n";
}

void write_trace_row(std::ostream& out, const TraceRecord& r) {
  out << r.iteration << ',' << r.elbo;
  for (Eigen::Index t = 0; t < r.cluster_mass.size(); ++t) out << ',' << r.cluster_mass[t];
  out << ',' << r.seconds << '\n';
}

}  // namespace

int run_guarded(const std::function<void()>& body) {
  try {
    body();
    return kExitOk;
  } catch (const ConfigError& e) {
    log(LogLevel::Error, e.what());
    return kExitUsage;
  } catch (const DataError& e) {
    log(LogLevel::Error, e.what());
    return kExitData;
  } catch (const NumericalError& e) {
    log(LogLevel::Error, std::string("numerical failure: ") + e.what());
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    log(LogLevel::Error, e.what());
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    log(LogLevel::Error, e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    log(LogLevel::Error, e.what());
    return kExitData;
  }
}

int cmd_train(const std::filesystem::path& config) {
  return run_guarded([&] {
    std::string text;
    const RunConfig cfg = load_run_config(config, &text);
    cfg.validate();
    const Dataset data = load_training_data(cfg);
    Trainer trainer(data.x, data.labels, cfg.model_spec(data.dim()), cfg.train);

    std::filesystem::create_directories(cfg.output_dir);
    const auto trace_path = cfg.output_dir / "trace.csv";
    const auto ckpt_path = cfg.output_dir / "checkpoint.bin";
    std::ofstream trace = open_output(trace_path);
    write_trace_header(trace, cfg.train.truncation);

    trainer.run([&](const TraceRecord& rec) {
      write_trace_row(trace, rec);
      trace.flush();
      if (cfg.checkpoint_every > 0 && rec.iteration % cfg.checkpoint_every == 0) {
        save_checkpoint(cfg.output_dir / ("checkpoint_" + std::to_string(rec.iteration) + ".bin"),
                        make_checkpoint(trainer, text, trainer.rng()));
      }
    });
    close_output(trace, trace_path);
    save_checkpoint(ckpt_path, make_checkpoint(trainer, text, trainer.rng()));
    log(LogLevel::Info, "wrote " + ckpt_path.string() + " and " + trace_path.string());
  });
}

int cmd_predict(const std::filesystem::path& checkpoint, const std::filesystem::path& data,
                const std::filesystem::path& out) {
  return run_guarded([&] {
    const Checkpoint ckpt = load_checkpoint(checkpoint);
    const RunConfig cfg = checkpoint_config(ckpt);
    const Matrix x = load_inputs(data, cfg, ckpt.theta.spec.data_dim);
    const VariationalState state = ckpt.variational_state();
    Rng rng = ckpt.rng();
    const int T = ckpt.theta.truncation();

    std::ofstream os = open_output(out);
    if (x.rows() > 0) {
      for (int t = 1; t <= T; ++t) os << "p_" << t << ',';
      os << "label\n";
    }
    for (Eigen::Index n = 0; n < x.rows(); ++n) {
      const Vector p = predict_cluster(x.row(n).transpose(), state, ckpt.theta,
                                       cfg.predict_samples, rng);
      Eigen::Index best = 0;
      for (int t = 0; t < T; ++t) {
        os << p[t] << ',';
        if (p[t] > p[best]) best = t;
      }
      os << best + 1 << '\n';
    }
    close_output(os, out);
  });
}

int cmd_generate(const std::filesystem::path& checkpoint, const std::string& cluster, long count,
                 const std::filesystem::path& out) {
  return run_guarded([&] {
    if (count < 0) throw ConfigError("count must be >= 0");
    const Checkpoint ckpt = load_checkpoint(checkpoint);
    const int T = ckpt.theta.truncation();
    int first = 0, last = T - 1;
    if (cluster != "all") {
      int k = 0;
      const auto [ptr, ec] = std::from_chars(cluster.data(), cluster.data() + cluster.size(), k);
      if (ec != std::errc() || ptr != cluster.data() + cluster.size())
        throw ConfigError("cluster must be an integer in 1.." + std::to_string(T) +
                          " or 'all', got '" + cluster + "'");
      if (k < 1 || k > T)
        throw ConfigError("cluster " + cluster + " out of range 1.." + std::to_string(T));
      first = last = k - 1;
    }
    Rng rng = ckpt.rng();
    std::ofstream os = open_output(out);
    if (count > 0) {
      os << "cluster";
      for (int j = 1; j <= ckpt.theta.spec.data_dim; ++j) os << ",x" << j;
      os << '\n';
    }
    for (int t = first; t <= last; ++t) {
      for (long i = 0; i < count; ++i) {
        const Vector x = sample_from_cluster(ckpt.theta, t, rng);
        os << t + 1;
        for (Eigen::Index j = 0; j < x.size(); ++j) os << ',' << x[j];
        os << '\n';
      }
    }
    close_output(os, out);
  });
}

int cmd_export_latents(const std::filesystem::path& checkpoint, const std::filesystem::path& data,
                       int layer, const std::filesystem::path& out) {
  return run_guarded([&] {
    const Checkpoint ckpt = load_checkpoint(checkpoint);
    const int L = ckpt.theta.num_layers();
    if (layer < 1 || layer > L)
      throw ConfigError("layer " + std::to_string(layer) + " out of range 1.." +
                        std::to_string(L));
    const RunConfig cfg = checkpoint_config(ckpt);
    const Matrix x = load_inputs(data, cfg, ckpt.theta.spec.data_dim);
    const Vector log_pi = expected_log_pi_all(ckpt.gamma);
    Rng rng = ckpt.rng();
    const int T = ckpt.theta.truncation();
    const int p = ckpt.theta.spec.latent_dims[static_cast<size_t>(layer - 1)];

    std::ofstream os = open_output(out);
    if (x.rows() > 0) {
      os << "cluster";
      for (int j = 1; j <= p; ++j) os << ",mu" << j;
      for (int t = 1; t <= T; ++t) os << ",phi_" << t;
      os << '\n';
    }
    for (Eigen::Index n = 0; n < x.rows(); ++n) {
      const Vector xn = x.row(n).transpose();
      const Vector scores =
          responsibility_scores(xn, log_pi, ckpt.nets, ckpt.theta, cfg.train.mc_samples, rng);
      const double norm = log_sum_exp(scores);
      if (!std::isfinite(norm))
        throw NumericalError("responsibilities of row " + std::to_string(n + 1) +
                             " cannot be normalized");
      const Vector phi = (scores.array() - norm).exp().matrix();
      Eigen::Index best = 0;
      for (int t = 1; t < T; ++t)
        if (phi[t] > phi[best]) best = t;
      const Vector mu =
          ckpt.nets.recognize(static_cast<int>(best), xn)[static_cast<size_t>(layer - 1)].mean;
      os << best + 1;
      for (Eigen::Index j = 0; j < mu.size(); ++j) os << ',' << mu[j];
      for (int t = 0; t < T; ++t) os << ',' << phi[t];
      os << '\n';
    }
    close_output(os, out);
  });
}

int cmd_synth(const std::filesystem::path& config, const std::filesystem::path& out) {
  return run_guarded([&] {
    std::ifstream in(config);
    if (!in) throw ConfigError("cannot open config file " + config.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const SyntheticSpec spec = parse_synthetic_config(buf.str());
    save_csv(out, make_synthetic_mixture(spec));
  });
}

}  // namespace dpdlgmm::cli
