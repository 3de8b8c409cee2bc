#include "dpdlgmm_tools/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dpdlgmm/data_io.hpp"
#include "dpdlgmm/gradients.hpp"

namespace dpdlgmm::cli {

namespace {

constexpr char kMagic[8] = {'D', 'P', 'D', 'L', 'G', 'M', 'M', '\0'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void i32(int v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void vec(std::span<const double> v) {
    u64(v.size());
    for (double d : v) f64(d);
  }
  void ints(const std::vector<int>& v) {
    u64(v.size());
    for (int d : v) i32(d);
  }

 private:
  void le(std::uint64_t v, int bytes) {
    char b[8];
    for (int i = 0; i < bytes; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.write(b, bytes);
  }
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  int i32() { return static_cast<int>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = length(1);
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  Vector vec() {
    const auto n = length(8);
    Vector v(static_cast<Eigen::Index>(n));
    for (size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = f64();
    return v;
  }
  Vector vec(size_t expected, const char* what) {
    Vector v = vec();
    if (static_cast<size_t>(v.size()) != expected)
      throw DataError(name_ + ": " + what + " has " + std::to_string(v.size()) +
                      " entries, expected " + std::to_string(expected));
    return v;
  }
  std::vector<int> ints() {
    const auto n = length(4);
    std::vector<int> v(n);
    for (auto& d : v) d = i32();
    return v;
  }
  void raw(char* dst, size_t n) {
    if (n > 0 && !in_.read(dst, static_cast<std::streamsize>(n)))
      throw DataError(name_ + ": truncated checkpoint");
  }

 private:
  // Guards against absurd lengths from corrupt files.
  size_t length(size_t elem) {
    const auto n = u64();
    if (n > (std::uint64_t{1} << 34) / elem) throw DataError(name_ + ": corrupt length field");
    return static_cast<size_t>(n);
  }
  std::uint64_t le(int bytes) {
    unsigned char b[8];
    raw(reinterpret_cast<char*>(b), static_cast<size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= std::uint64_t{b[i]} << (8 * i);
    return v;
  }
  std::istream& in_;
  std::string name_;
};

}  // namespace

VariationalState Checkpoint::variational_state() const {
  VariationalState s;
  s.gamma = gamma;
  s.nets = nets;
  s.eta = eta;
  return s;
}

Rng Checkpoint::rng() const {
  Rng r;
  std::istringstream in(rng_state);
  in >> r;
  if (!in) throw DataError("checkpoint holds an unreadable RNG state");
  return r;
}

Checkpoint make_checkpoint(const Trainer& trainer, std::string config_text, Rng rng) {
  Checkpoint c;
  c.config_text = std::move(config_text);
  c.theta = trainer.theta();
  c.nets = trainer.state().nets;
  c.gamma = trainer.state().gamma;
  c.eta = trainer.state().eta;
  c.cluster_mass = cluster_mass(trainer.state().resp.phi);
  std::ostringstream rs;
  rs << rng;
  c.rng_state = rs.str();
  c.trace = trainer.trace();
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof kMagic);
  Writer w(out);
  w.u32(kCheckpointVersion);
  w.str(ckpt.config_text);

  const ModelSpec& spec = ckpt.theta.spec;
  w.u32(static_cast<std::uint32_t>(spec.emission));
  w.i32(spec.data_dim);
  w.ints(spec.latent_dims);
  w.ints(spec.hidden);
  w.i32(ckpt.theta.truncation());
  w.f64(ckpt.eta);

  for (const auto& c : ckpt.theta.clusters) {
    w.vec({c.top_mean.data(), static_cast<size_t>(c.top_mean.size())});
    w.vec({c.top_var.data(), static_cast<size_t>(c.top_var.size())});
  }
  GenerativeParams theta = ckpt.theta;
  InferenceNets nets = ckpt.nets;
  const auto blocks = param_blocks(theta, nets);
  w.u64(blocks.size());
  for (const auto& b : blocks) w.vec(b);

  w.vec({ckpt.gamma.gamma1.data(), static_cast<size_t>(ckpt.gamma.gamma1.size())});
  w.vec({ckpt.gamma.gamma2.data(), static_cast<size_t>(ckpt.gamma.gamma2.size())});
  w.vec({ckpt.cluster_mass.data(), static_cast<size_t>(ckpt.cluster_mass.size())});
  w.str(ckpt.rng_state);

  w.u64(ckpt.trace.size());
  for (const auto& r : ckpt.trace) {
    w.i32(r.iteration);
    w.f64(r.elbo);
    w.vec({r.cluster_mass.data(), static_cast<size_t>(r.cluster_mass.size())});
    w.f64(r.seconds);
  }
  if (!out) throw DataError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  const std::string name = path.string();
  Reader r(in, name);
  char magic[8];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw DataError(name + ": not a dpdlgmm checkpoint");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw DataError(name + ": unsupported checkpoint version " + std::to_string(version));

  Checkpoint c;
  c.config_text = r.str();
  ModelSpec spec;
  const std::uint32_t emission = r.u32();
  if (emission > static_cast<std::uint32_t>(EmissionKind::Gaussian))
    throw DataError(name + ": unknown emission kind");
  spec.emission = static_cast<EmissionKind>(emission);
  spec.data_dim = r.i32();
  spec.latent_dims = r.ints();
  spec.hidden = r.ints();
  const int T = r.i32();
  c.eta = r.f64();
  try {
    spec.validate();
    if (T < 1) throw std::invalid_argument("truncation < 1");
  } catch (const std::invalid_argument& e) {
    throw DataError(name + ": bad model header: " + e.what());
  }

  // Build the shapes, then overwrite every value.
  Rng scratch(0);
  c.theta = make_generative(spec, T, scratch);
  c.nets = make_inference_nets(spec, T, scratch);
  const auto top = static_cast<size_t>(spec.latent_dims.back());
  for (auto& cl : c.theta.clusters) {
    cl.top_mean = r.vec(top, "top-layer mean");
    cl.top_var = r.vec(top, "top-layer variance");
  }
  const auto blocks = param_blocks(c.theta, c.nets);
  if (r.u64() != blocks.size()) throw DataError(name + ": parameter block count mismatch");
  for (const auto& b : blocks) {
    const Vector v = r.vec(b.size(), "parameter block");
    std::copy(v.data(), v.data() + v.size(), b.begin());
  }

  Vector g1 = r.vec(static_cast<size_t>(T - 1), "gamma1");
  Vector g2 = r.vec(static_cast<size_t>(T - 1), "gamma2");
  c.gamma.gamma1 = std::move(g1);
  c.gamma.gamma2 = std::move(g2);
  c.cluster_mass = r.vec(static_cast<size_t>(T), "cluster mass");
  c.rng_state = r.str();

  const auto n_trace = r.u64();
  for (std::uint64_t i = 0; i < n_trace; ++i) {
    TraceRecord rec;
    rec.iteration = r.i32();
    rec.elbo = r.f64();
    rec.cluster_mass = r.vec(static_cast<size_t>(T), "trace cluster mass");
    rec.seconds = r.f64();
    c.trace.push_back(std::move(rec));
  }
  return c;
}

}  // namespace dpdlgmm::cli
