#include "rntc/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <numbers>
#include <random>
#include <thread>

#include "rntc/binary_io.hpp"
#include "rntc/errors.hpp"

namespace rntc {

namespace {

constexpr char kMagic[8] = {'R', 'N', 'T', 'C', 'D', 'A', 'T', 'A'};
constexpr std::uint32_t kVersion = 1;

float f32(double v) { return static_cast<float>(v); }

}  // namespace

void write_geometry(std::ostream& out, const DatasetGeometry& g) {
  io::write_u32(out, g.scale == Scale::Paper ? 0u : 1u);
  io::write_u32(out, static_cast<std::uint32_t>(g.nx));
  io::write_u32(out, static_cast<std::uint32_t>(g.ny));
  io::write_u32(out, static_cast<std::uint32_t>(g.ntheta));
  io::write_u32(out, static_cast<std::uint32_t>(g.sdf_size));
  io::write_u32(out, static_cast<std::uint32_t>(g.past_steps));
  io::write_f32(out, f32(g.past_dt));
  io::write_f32(out, f32(g.window_size));
  io::write_f32(out, f32(g.inflation));
  io::write_f32(out, f32(g.horizon));
  io::write_f32(out, f32(g.clamp));
}

DatasetGeometry read_geometry(std::istream& in) {
  DatasetGeometry g;
  const std::uint32_t scale = io::read_u32(in);
  if (scale > 1) throw IoError("dataset: unknown scale tag");
  g.scale = scale == 0 ? Scale::Paper : Scale::Desk;
  g.nx = static_cast<int>(io::read_u32(in));
  g.ny = static_cast<int>(io::read_u32(in));
  g.ntheta = static_cast<int>(io::read_u32(in));
  g.sdf_size = static_cast<int>(io::read_u32(in));
  g.past_steps = static_cast<int>(io::read_u32(in));
  g.past_dt = io::read_f32(in);
  g.window_size = io::read_f32(in);
  g.inflation = io::read_f32(in);
  g.horizon = io::read_f32(in);
  g.clamp = io::read_f32(in);
  if (g.nx < 2 || g.ny < 2 || g.ntheta < 1 || g.sdf_size < 1 || g.past_steps < 1 || g.nx > 4096 || g.ny > 4096 ||
      g.ntheta > 4096 || g.sdf_size > 4096 || g.past_steps > 64) {
    throw IoError("dataset: corrupt geometry header");
  }
  return g;
}

TrajectorySample sample_scenario(std::uint64_t seed, std::uint64_t id, int attempt, const SamplerConfig& config) {
  TrajectorySample sample;
  sample.id = id;
  sample.seed = io::mix_seed(seed, id, static_cast<std::uint64_t>(attempt));
  std::mt19937_64 rng(sample.seed);
  std::uniform_int_distribution<int> count_dist(config.allow_empty ? 0 : 1, config.max_obstacles);
  const double half = 0.5 * config.window_size;
  std::uniform_real_distribution<double> pos(-half, half);
  std::uniform_real_distribution<double> speed(0.0, config.max_speed);
  std::uniform_real_distribution<double> heading(0.0, 2.0 * std::numbers::pi);
  const int n = count_dist(rng);
  for (int k = 0; k < n; ++k) {
    Obstacle o;
    o.center = {pos(rng), pos(rng)};
    o.radius = config.obstacle_radius;
    const double s = speed(rng), h = heading(rng);
    o.velocity = {s * std::cos(h), s * std::sin(h)};
    sample.obstacles.push_back(o);
  }
  return sample;
}

std::vector<TrajectorySample> generate_scenarios(std::uint64_t seed, int count, const SamplerConfig& config) {
  if (count < 1) throw ConfigError("generate_scenarios: count must be >= 1");
  std::vector<TrajectorySample> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(sample_scenario(seed, static_cast<std::uint64_t>(i), 0, config));
  return out;
}

DatasetGeometry DatasetGeometry::from_profile(const ScaleProfile& profile) {
  DatasetGeometry g;
  g.scale = profile.scale;
  g.nx = g.ny = profile.grid_n;
  g.ntheta = profile.grid_ntheta;
  g.sdf_size = profile.sdf_size;
  g.past_steps = profile.hyper.in_channels;
  return g;
}

StateGrid DatasetGeometry::state_grid() const {
  return StateGrid::centered(Eigen::Vector2d::Zero(), window_size, nx, ny, ntheta);
}

GridSpec DatasetGeometry::raster_spec() const {
  return GridSpec::covering(Eigen::Vector2d::Zero(), window_size, sdf_size);
}

bool DatasetGeometry::compatible(const DatasetGeometry& o) const {
  return scale == o.scale && nx == o.nx && ny == o.ny && ntheta == o.ntheta && sdf_size == o.sdf_size &&
         past_steps == o.past_steps && f32(past_dt) == f32(o.past_dt) && f32(window_size) == f32(o.window_size) &&
         f32(inflation) == f32(o.inflation) && f32(horizon) == f32(o.horizon) && f32(clamp) == f32(o.clamp);
}

Eigen::ArrayXf raster_payload(const SdfGrid& grid) {
  const Eigen::Index nx = grid.values.rows(), ny = grid.values.cols();
  Eigen::ArrayXf out(nx * ny);
  for (Eigen::Index i = 0; i < nx; ++i) {
    for (Eigen::Index j = 0; j < ny; ++j) out[i * ny + j] = static_cast<float>(grid.values(i, j));
  }
  return out;
}

Eigen::ArrayXf sdf_stack(const EnvironmentSnapshot& snapshot, const GridSpec& spec, int past_steps, double past_dt,
                         double inflation, double clamp) {
  const Eigen::Index cells = static_cast<Eigen::Index>(spec.nx) * spec.ny;
  Eigen::ArrayXf out(cells * past_steps);
  for (int k = 0; k < past_steps; ++k) {
    out.segment(k * cells, cells) = raster_payload(rasterize(predict(snapshot, -k * past_dt), spec, inflation, clamp));
  }
  return out;
}

TrainingPair label(const TrajectorySample& sample, const LabelConfig& config) {
  const DatasetGeometry& g = config.geometry;
  EnvironmentSnapshot snapshot;
  snapshot.obstacles = sample.obstacles;
  snapshot.window_size = g.window_size;

  const StateGrid grid = g.state_grid();
  TrainingPair pair;
  pair.id = sample.id;
  pair.seed = sample.seed;
  pair.obstacles = sample.obstacles;
  pair.sdf_pair = sdf_stack(snapshot, g.raster_spec(), g.past_steps, g.past_dt, g.inflation, g.clamp);
  pair.failure = raster_payload(rasterize(snapshot, grid.xy_spec(), g.inflation, g.clamp));

  BrtOptions options = config.brt;
  options.horizon = g.horizon;
  options.time_invariant = std::all_of(sample.obstacles.begin(), sample.obstacles.end(),
                                       [](const Obstacle& o) { return o.velocity.isZero(0.0); });
  const BrtResult result = solve_brt(snapshot_failure(snapshot, grid, g.inflation, g.clamp), grid, options, config.limits);
  pair.value = result.value.values.cast<float>();
  pair.converged = result.converged;
  return pair;
}

DatasetWriter::DatasetWriter(const std::string& path, const DatasetGeometry& geometry, const std::string& config_hash)
    : out_(path, std::ios::binary | std::ios::trunc), geometry_(geometry) {
  if (!out_) throw IoError("cannot open '" + path + "' for writing");
  out_.write(kMagic, sizeof(kMagic));
  io::write_u32(out_, kVersion);
  write_geometry(out_, geometry_);
  io::write_string(out_, config_hash);
  count_offset_ = out_.tellp();
  io::write_u64(out_, 0);
}

DatasetWriter::~DatasetWriter() {
  try {
    close();
  } catch (...) {
  }
}

void DatasetWriter::append(const TrainingPair& pair) {
  const auto& g = geometry_;
  const Eigen::Index raster = static_cast<Eigen::Index>(g.sdf_size) * g.sdf_size * g.past_steps;
  const Eigen::Index cells = static_cast<Eigen::Index>(g.nx) * g.ny;
  if (pair.sdf_pair.size() != raster || pair.failure.size() != cells || pair.value.size() != cells * g.ntheta) {
    throw IoError("dataset: pair does not match the file geometry");
  }
  for (Eigen::Index c = 0; c < cells; ++c) {
    if ((pair.value.segment(c * g.ntheta, g.ntheta) > pair.failure[c]).any()) {
      throw NumericalError("dataset: value exceeds failure function (pair " + std::to_string(pair.id) + ")");
    }
  }
  io::write_u64(out_, pair.id);
  io::write_u64(out_, pair.seed);
  io::write_u32(out_, static_cast<std::uint32_t>(pair.obstacles.size()));
  for (const auto& o : pair.obstacles) {
    io::write_f32(out_, f32(o.center.x()));
    io::write_f32(out_, f32(o.center.y()));
    io::write_f32(out_, f32(o.radius));
    io::write_f32(out_, f32(o.velocity.x()));
    io::write_f32(out_, f32(o.velocity.y()));
  }
  io::write_f32_array(out_, pair.sdf_pair.data(), static_cast<std::size_t>(pair.sdf_pair.size()));
  io::write_f32_array(out_, pair.failure.data(), static_cast<std::size_t>(pair.failure.size()));
  io::write_f32_array(out_, pair.value.data(), static_cast<std::size_t>(pair.value.size()));
  io::write_u8(out_, pair.converged ? 1 : 0);
  ++count_;
}

void DatasetWriter::close() {
  if (closed_) return;
  closed_ = true;
  out_.seekp(count_offset_);
  io::write_u64(out_, count_);
  out_.close();
  if (out_.fail()) throw IoError("dataset: failed to finalize file");
}

DatasetReader::DatasetReader(const std::string& path) : in_(path, std::ios::binary) {
  if (!in_) throw IoError("cannot open dataset '" + path + "'");
  char magic[8];
  in_.read(magic, sizeof(magic));
  if (in_.gcount() != sizeof(magic) || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw IoError("'" + path + "' is not a dataset file");
  }
  const std::uint32_t version = io::read_u32(in_);
  if (version != kVersion) throw IoError("dataset: unsupported version " + std::to_string(version));
  geometry_ = read_geometry(in_);
  config_hash_ = io::read_string(in_, 256);
  count_ = io::read_u64(in_);
}

DatasetReader::DatasetReader(const std::string& path, const DatasetGeometry& expected) : DatasetReader(path) {
  if (!geometry_.compatible(expected)) {
    throw IoError("dataset '" + path + "' geometry (" + to_string(geometry_.scale) + ", " + std::to_string(geometry_.nx) +
                  "x" + std::to_string(geometry_.ny) + "x" + std::to_string(geometry_.ntheta) +
                  ") does not match the configured geometry (" + to_string(expected.scale) + ", " +
                  std::to_string(expected.nx) + "x" + std::to_string(expected.ny) + "x" +
                  std::to_string(expected.ntheta) + ")");
  }
}

std::optional<TrainingPair> DatasetReader::next() {
  if (read_ >= count_) return std::nullopt;
  const auto& g = geometry_;
  TrainingPair pair;
  pair.id = io::read_u64(in_);
  pair.seed = io::read_u64(in_);
  const std::uint32_t n = io::read_u32(in_);
  if (n > 1024) throw IoError("dataset: corrupt obstacle count");
  for (std::uint32_t k = 0; k < n; ++k) {
    Obstacle o;
    o.center.x() = io::read_f32(in_);
    o.center.y() = io::read_f32(in_);
    o.radius = io::read_f32(in_);
    o.velocity.x() = io::read_f32(in_);
    o.velocity.y() = io::read_f32(in_);
    pair.obstacles.push_back(o);
  }
  pair.sdf_pair.resize(static_cast<Eigen::Index>(g.sdf_size) * g.sdf_size * g.past_steps);
  pair.failure.resize(static_cast<Eigen::Index>(g.nx) * g.ny);
  pair.value.resize(pair.failure.size() * g.ntheta);
  io::read_f32_array(in_, pair.sdf_pair.data(), static_cast<std::size_t>(pair.sdf_pair.size()));
  io::read_f32_array(in_, pair.failure.data(), static_cast<std::size_t>(pair.failure.size()));
  io::read_f32_array(in_, pair.value.data(), static_cast<std::size_t>(pair.value.size()));
  const std::uint8_t flag = io::read_u8(in_);
  if (flag > 1) throw IoError("dataset: corrupt convergence flag");
  pair.converged = flag == 1;
  ++read_;
  return pair;
}

std::vector<TrainingPair> read_dataset(const std::string& path, const std::optional<DatasetGeometry>& expected) {
  DatasetReader reader = expected ? DatasetReader(path, *expected) : DatasetReader(path);
  std::vector<TrainingPair> pairs;
  pairs.reserve(static_cast<std::size_t>(reader.count()));
  while (auto pair = reader.next()) pairs.push_back(std::move(*pair));
  return pairs;
}

GenerationStats generate_dataset(const std::string& path, std::uint64_t seed, int count, const LabelConfig& config,
                                 const SamplerConfig& sampler, int workers,
                                 const std::function<void(std::uint64_t, std::uint64_t)>& progress,
                                 const std::string& config_hash) {
  if (count < 1) throw ConfigError("gen-data: count must be >= 1");
  workers = std::max(1, workers);
  constexpr int kMaxAttempts = 64;
  DatasetWriter writer(path, config.geometry, config_hash);
  GenerationStats stats;

  struct Slot {
    TrainingPair pair;
    std::uint64_t dropped = 0;
  };
  const int chunk = std::max(1, workers * 4);
  for (int begin = 0; begin < count; begin += chunk) {
    const int end = std::min(count, begin + chunk);
    std::vector<Slot> slots(static_cast<std::size_t>(end - begin));
    std::atomic<int> cursor{begin};
    auto work = [&]() {
      for (int id = cursor++; id < end; id = cursor++) {
        Slot& slot = slots[static_cast<std::size_t>(id - begin)];
        for (int attempt = 0;; ++attempt) {
          TrainingPair pair = label(sample_scenario(seed, static_cast<std::uint64_t>(id), attempt, sampler), config);
          if (pair.converged || attempt + 1 >= kMaxAttempts) {
            slot.pair = std::move(pair);
            break;
          }
          ++slot.dropped;
        }
      }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    for (auto& slot : slots) {
      writer.append(slot.pair);
      stats.dropped += slot.dropped;
      ++stats.written;
    }
    if (progress) progress(stats.written, stats.dropped);
  }
  writer.close();
  return stats;
}

}  // namespace rntc
