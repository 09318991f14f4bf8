#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "optiwing/flow.hpp"
#include "optiwing/geometry.hpp"

namespace optiwing::data {

constexpr int kSchemaVersion = 1;
constexpr const char* kDataRootEnv = "OPTIWING_DATA_ROOT";

enum class Dimensionality { two_d, three_d };

std::string to_string(Dimensionality d);
Dimensionality dimensionality_from_string(const std::string& s);

struct AeroCoefficients {
  double cl = 0.0;
  double cd = 0.0;
  double l_over_d() const { return cl / cd; }
};

struct CaseDescriptor {
  std::string case_id;
  Dimensionality dim = Dimensionality::three_d;
  flow::FlowCondition condition;
  double alpha_opt = 0.0;
  std::string initial_airfoil;   // identity used for 2D-3D pairing
  bool initial_sim_failed = false;  // coefficients come from the first
                                    // successful evaluation instead
  AeroCoefficients coeff_initial;
  AeroCoefficients coeff_optimized;
  std::string initial_file;   // relative to the dataset root
  std::string optimized_file;

  bool condition_in_bounds = true;  // Table-2 bounds; flagged, never clamped
  bool alpha_in_bounds = true;

  bool has_initial_sim() const { return !initial_sim_failed; }
};

struct SkipRecord {
  std::string case_id;
  std::string reason;
};

/// Immutable after load_manifest; concurrent case loads are safe.
struct DatasetIndex {
  std::filesystem::path root;
  int schema_version = kSchemaVersion;
  Dimensionality dim = Dimensionality::three_d;
  double half_span = 2.5;
  std::vector<CaseDescriptor> cases;
  std::vector<SkipRecord> skipped;

  const CaseDescriptor* find(const std::string& case_id) const;
};

struct WingCase {
  CaseDescriptor desc;
  geom::WingGeometry initial;
  geom::WingGeometry optimized;
};

struct SplitCounts {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

struct SplitAssignment {
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;
  std::uint64_t seed = 0;
};

struct PairingResult {
  std::vector<std::pair<std::string, std::string>> pairs;  // (2d id, 3d id)
  std::vector<std::string> unmatched_2d;
  std::vector<std::string> unmatched_3d;
};

/// Reads manifest.json under root and validates every listed case down to
/// its geometry files. Malformed cases become skip records; out-of-bounds
/// conditions are flagged on the descriptor, never clamped or dropped.
DatasetIndex load_manifest(const std::filesystem::path& root);

/// Loads the geometry pair for one indexed case.
WingCase load_case(const DatasetIndex& index, const std::string& case_id);

/// Uniform seeded shuffle into disjoint train/val/test id lists. Counts must
/// not exceed the number of indexed cases; identical seeds give identical
/// assignments on every platform.
SplitAssignment split_dataset(const DatasetIndex& index, std::uint64_t seed,
                              const SplitCounts& counts);

/// Matches 2D and 3D cases by shared initial-airfoil identity plus an
/// identical flow condition. An empty pairing is valid.
PairingResult pair_2d_3d(const DatasetIndex& index2d, const DatasetIndex& index3d);

/// Canonical columnar slice file (columns x,y,z,cp; slices grouped by
/// contiguous z). Doubles are written with round-trip precision, so a
/// write/read cycle is bit-identical.
void write_slices(const std::filesystem::path& path, const geom::WingGeometry& w);
geom::WingGeometry read_slices(const std::filesystem::path& path);

/// Manifest writer used by the ingest pipeline and the synthetic generator.
void write_manifest(const std::filesystem::path& root, Dimensionality dim,
                    double half_span, const std::vector<CaseDescriptor>& cases);

/// Latents flat-record file: one row per section, 90 comma-separated values
/// (30 x, 30 y, 30 w).
void write_latents(const std::filesystem::path& path,
                   const std::vector<std::array<double, 90>>& rows);
std::vector<std::array<double, 90>> read_latents(const std::filesystem::path& path);

/// Resolves the dataset root from an explicit argument or OPTIWING_DATA_ROOT.
std::filesystem::path resolve_data_root(const std::string& cli_value);

}  // namespace optiwing::data
