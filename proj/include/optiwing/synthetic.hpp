#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "optiwing/dataset.hpp"
#include "optiwing/geometry.hpp"

namespace optiwing::synth {

/// Desk-scale synthetic dataset generator. Produces a paired 2D/3D dataset in
/// the canonical format with the structural properties of the real release:
///  - airfoil-like sections drawn from a fixed 8-mode linear shape family;
///  - "optimized" designs displaced within the same family by smooth
///    nonlinear functions of the flow condition, plus a small irreducible
///    per-case component (optimizer variability stand-in);
///  - spanwise modulation that concentrates shape changes toward the tip;
///  - trailing-edge dihedral offsets embedded in the slices;
///  - volume fractions kept inside [vmin, 1.2] by construction;
///  - surface pressure fields of fixed linear rank per family (2D initial /
///    2D optimized / 3D initial / 3D optimized target 19 / 17 / 24 / 28
///    effective dimensions).
struct SyntheticConfig {
  int n_cases = 120;
  std::uint64_t seed = 7;
  int section_points = 161;
  int n_slices = 9;
  double half_span = 2.5;
  bool with_pressure = true;
  double pair_fraction = 0.88;       // share of 3D cases with 2D counterparts
  double sim_failed_fraction = 0.03; // flagged initial-sim failures
};

struct SyntheticRoots {
  std::filesystem::path root3d;
  std::filesystem::path root2d;
};

constexpr int kShapeModes = 8;
using ShapeCoeffs = std::array<double, kShapeModes>;

/// Section of the shape family at the given mode coefficients; closed loop
/// of n_points in canonical orientation.
geom::Section family_section(const ShapeCoeffs& coeffs, int n_points);

/// Writes the paired datasets under out_dir/{wing3d,airfoil2d}.
SyntheticRoots generate_dataset(const std::filesystem::path& out_dir,
                                const SyntheticConfig& cfg = {});

}  // namespace optiwing::synth
