#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rntc/geometry.hpp"
#include "rntc/hj.hpp"
#include "rntc/scale.hpp"

namespace rntc {

/// Random local obstacle configurations around a robot at the window center.
struct SamplerConfig {
  double window_size = kWindowSize;
  int max_obstacles = 4;
  double obstacle_radius = 0.3;
  double max_speed = 1.0;
  /// Include zero-obstacle windows (count drawn from {0..max}); otherwise {1..max}.
  bool allow_empty = true;
};

/// Obstacle states at the split time t = 0, in window coordinates (window centered at the origin).
struct TrajectorySample {
  std::uint64_t id = 0;
  std::uint64_t seed = 0;
  std::vector<Obstacle> obstacles;
};

/// Scenario `id`, resampling attempt `attempt`; reproducible from (seed, id, attempt).
TrajectorySample sample_scenario(std::uint64_t seed, std::uint64_t id, int attempt, const SamplerConfig& config = {});
std::vector<TrajectorySample> generate_scenarios(std::uint64_t seed, int count, const SamplerConfig& config = {});

/// Grid geometry and timing shared by every pair of a dataset file.
struct DatasetGeometry {
  Scale scale = Scale::Desk;
  int nx = 50;
  int ny = 50;
  int ntheta = 15;
  int sdf_size = 52;
  int past_steps = 2;       ///< K: rasters per hypernetwork input
  double past_dt = 0.4;     ///< spacing between them, seconds
  double window_size = kWindowSize;
  double inflation = kDefaultInflation;
  double horizon = 4.0;     ///< future horizon used for labelling, seconds
  double clamp = kSdfClamp;

  static DatasetGeometry from_profile(const ScaleProfile& profile);
  StateGrid state_grid() const;
  GridSpec raster_spec() const;
  /// Exact match on every field after float32 storage rounding.
  bool compatible(const DatasetGeometry& other) const;
};

/// Geometry block shared by dataset and checkpoint headers.
void write_geometry(std::ostream& out, const DatasetGeometry& geometry);
DatasetGeometry read_geometry(std::istream& in);

/// Hypernetwork input, current failure raster and ground-truth value function for one scenario.
struct TrainingPair {
  std::uint64_t id = 0;
  std::uint64_t seed = 0;
  std::vector<Obstacle> obstacles;
  Eigen::ArrayXf sdf_pair;  ///< K x sdf_size^2; channel 0 = now, channel 1 = now - past_dt; index i * n + j
  Eigen::ArrayXf failure;   ///< nx * ny, index i * ny + j
  Eigen::ArrayXf value;     ///< StateGrid order
  bool converged = false;
};

struct LabelConfig {
  DatasetGeometry geometry;
  BrtOptions brt;
  ControlLimits limits;
};

/// Raster payload (index i * n + j) of an SdfGrid.
Eigen::ArrayXf raster_payload(const SdfGrid& grid);

/// Stacks the K past rasters (now first) of `snapshot` over `spec`.
Eigen::ArrayXf sdf_stack(const EnvironmentSnapshot& snapshot, const GridSpec& spec, int past_steps, double past_dt,
                         double inflation, double clamp);

/// Runs the HJ solver on the future of `sample` and assembles the pair.
TrainingPair label(const TrajectorySample& sample, const LabelConfig& config);

/// Streams pairs to a dataset file. The pair count in the header is patched on close().
class DatasetWriter {
 public:
  DatasetWriter(const std::string& path, const DatasetGeometry& geometry, const std::string& config_hash = "");
  ~DatasetWriter();
  DatasetWriter(const DatasetWriter&) = delete;
  DatasetWriter& operator=(const DatasetWriter&) = delete;

  /// Rejects pairs violating value <= failure (a solver bug) with NumericalError.
  void append(const TrainingPair& pair);
  void close();
  std::uint64_t count() const { return count_; }

 private:
  std::ofstream out_;
  std::streampos count_offset_;
  DatasetGeometry geometry_;
  std::uint64_t count_ = 0;
  bool closed_ = false;
};

class DatasetReader {
 public:
  explicit DatasetReader(const std::string& path);
  /// Throws IoError unless the file geometry matches `expected`.
  DatasetReader(const std::string& path, const DatasetGeometry& expected);

  const DatasetGeometry& geometry() const { return geometry_; }
  const std::string& config_hash() const { return config_hash_; }
  std::uint64_t count() const { return count_; }
  /// Next pair, or nullopt after the last one. Throws IoError on truncation.
  std::optional<TrainingPair> next();

 private:
  std::ifstream in_;
  DatasetGeometry geometry_;
  std::string config_hash_;
  std::uint64_t count_ = 0;
  std::uint64_t read_ = 0;
};

std::vector<TrainingPair> read_dataset(const std::string& path, const std::optional<DatasetGeometry>& expected = {});

struct GenerationStats {
  std::uint64_t written = 0;
  std::uint64_t dropped = 0;
};

/// Labels `count` scenarios with `workers` threads, resampling dropped (non-converged) pairs,
/// and writes them in id order. Output bytes do not depend on the worker count.
GenerationStats generate_dataset(const std::string& path, std::uint64_t seed, int count, const LabelConfig& config,
                                 const SamplerConfig& sampler, int workers,
                                 const std::function<void(std::uint64_t done, std::uint64_t dropped)>& progress = {},
                                 const std::string& config_hash = "");

}  // namespace rntc
