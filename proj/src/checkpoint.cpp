#include "rntc/checkpoint.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rntc/binary_io.hpp"
#include "rntc/errors.hpp"

namespace rntc {

namespace {

constexpr char kMagic[8] = {'R', 'N', 'T', 'C', 'C', 'K', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

/// Shortest decimal that round-trips.
std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

void write_main_spec(std::ostream& out, const MainNetSpec& spec) {
  io::write_u32(out, static_cast<std::uint32_t>(spec.widths.size()));
  for (int w : spec.widths) io::write_u32(out, static_cast<std::uint32_t>(w));
  io::write_u32(out, static_cast<std::uint32_t>(spec.hidden.size()));
  for (Activation a : spec.hidden) io::write_u8(out, a == Activation::Sin ? 0 : 1);
}

MainNetSpec read_main_spec(std::istream& in) {
  MainNetSpec spec;
  const std::uint32_t nw = io::read_u32(in);
  if (nw < 2 || nw > 64) throw IoError("checkpoint: corrupt main-network spec");
  for (std::uint32_t i = 0; i < nw; ++i) spec.widths.push_back(static_cast<int>(io::read_u32(in)));
  const std::uint32_t na = io::read_u32(in);
  if (na > 64) throw IoError("checkpoint: corrupt main-network spec");
  for (std::uint32_t i = 0; i < na; ++i) spec.hidden.push_back(io::read_u8(in) == 0 ? Activation::Sin : Activation::Selu);
  return spec;
}

void write_hyper_spec(std::ostream& out, const HyperNetSpec& spec) {
  io::write_u32(out, static_cast<std::uint32_t>(spec.in_channels));
  io::write_u32(out, static_cast<std::uint32_t>(spec.input_size));
  io::write_u32(out, static_cast<std::uint32_t>(spec.blocks.size()));
  for (const auto& b : spec.blocks) {
    io::write_u32(out, static_cast<std::uint32_t>(b.out_channels));
    io::write_u32(out, static_cast<std::uint32_t>(b.kernel));
  }
  io::write_u64(out, static_cast<std::uint64_t>(spec.output_size));
}

HyperNetSpec read_hyper_spec(std::istream& in) {
  HyperNetSpec spec;
  spec.in_channels = static_cast<int>(io::read_u32(in));
  spec.input_size = static_cast<int>(io::read_u32(in));
  const std::uint32_t nb = io::read_u32(in);
  if (nb > 32) throw IoError("checkpoint: corrupt hypernetwork spec");
  for (std::uint32_t i = 0; i < nb; ++i) {
    ConvBlock b;
    b.out_channels = static_cast<int>(io::read_u32(in));
    b.kernel = static_cast<int>(io::read_u32(in));
    spec.blocks.push_back(b);
  }
  spec.output_size = static_cast<Eigen::Index>(io::read_u64(in));
  return spec;
}

}  // namespace

std::string train_config_echo(const TrainConfig& c) {
  std::ostringstream out;
  out << "mode = " << to_string(c.mode) << "\n"
      << "gamma = " << num(c.gamma) << "\n"
      << "epochs = " << c.epochs << "\n"
      << "batch_size = " << c.batch_size << "\n"
      << "learning_rate = " << num(c.learning_rate) << "\n"
      << "lr_drop_epochs = ";
  for (std::size_t i = 0; i < c.lr_drop_epochs.size(); ++i) out << (i ? "," : "") << c.lr_drop_epochs[i];
  out << "\n"
      << "lr_drop_factor = " << num(c.lr_drop_factor) << "\n"
      << "seed = " << c.seed << "\n"
      << "mse_epochs = " << c.mse_epochs << "\n"
      << "nodes_per_sample = " << c.nodes_per_sample << "\n"
      << "val_fraction = " << num(c.val_fraction) << "\n"
      << "grad_clip = " << num(c.grad_clip) << "\n"
      << "exp_cap = " << num(c.exp_cap) << "\n";
  return out.str();
}

void save_checkpoint(const std::string& path, const ValueModel& model, const std::string& config_echo,
                     const std::string& config_hash) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint '" + path + "' for writing");
  out.write(kMagic, sizeof kMagic);
  io::write_u32(out, kVersion);
  io::write_u8(out, model.mode() == HeadMode::Residual ? 0 : 1);
  write_geometry(out, model.geometry());
  write_main_spec(out, model.main().spec());
  write_hyper_spec(out, model.hyper().spec());
  io::write_string(out, config_hash);
  io::write_string(out, config_echo);
  const Eigen::VectorXf params = model.hyper().params().cast<float>();
  io::write_u64(out, static_cast<std::uint64_t>(params.size()));
  io::write_f32_array(out, params.data(), static_cast<std::size_t>(params.size()));
  if (!out) throw IoError("failed writing checkpoint '" + path + "'");
}

ValueModel load_checkpoint(const std::string& path, CheckpointInfo* info) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw IoError("'" + path + "' is not a checkpoint file");
  }
  if (io::read_u32(in) != kVersion) throw IoError("checkpoint '" + path + "' has an unsupported version");
  CheckpointInfo meta;
  meta.mode = io::read_u8(in) == 0 ? HeadMode::Residual : HeadMode::Direct;
  meta.geometry = read_geometry(in);
  meta.main = read_main_spec(in);
  meta.hyper = read_hyper_spec(in);
  meta.config_hash = io::read_string(in);
  meta.config_echo = io::read_string(in);

  ScaleProfile profile;
  profile.scale = meta.geometry.scale;
  profile.grid_n = meta.geometry.nx;
  profile.grid_ntheta = meta.geometry.ntheta;
  profile.sdf_size = meta.geometry.sdf_size;
  profile.main = meta.main;
  profile.hyper = meta.hyper;
  ValueModel model = [&] {
    try {
      return ValueModel(profile, meta.mode, meta.geometry);
    } catch (const ConfigError& e) {
      throw IoError("checkpoint '" + path + "' holds an inconsistent spec: " + e.what());
    }
  }();

  const std::uint64_t count = io::read_u64(in);
  if (count != static_cast<std::uint64_t>(model.hyper().params().size())) {
    throw IoError("checkpoint '" + path + "' parameter count does not match its spec");
  }
  Eigen::VectorXf params(static_cast<Eigen::Index>(count));
  io::read_f32_array(in, params.data(), count);
  model.hyper().params() = params.cast<double>();
  if (info) *info = std::move(meta);
  return model;
}

}  // namespace rntc
