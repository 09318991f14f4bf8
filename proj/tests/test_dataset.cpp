#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "optiwing/dataset.hpp"
#include "optiwing/synthetic.hpp"

using namespace optiwing;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

synth::SyntheticRoots small_dataset(const fs::path& dir, int n = 10,
                                    std::uint64_t seed = 4) {
  synth::SyntheticConfig cfg;
  cfg.n_cases = n;
  cfg.seed = seed;
  cfg.section_points = 121;
  return synth::generate_dataset(dir, cfg);
}

}  // namespace

TEST_CASE("empty directory loads as an empty index") {
  const fs::path dir = fresh_dir("ow_empty");
  const data::DatasetIndex index = data::load_manifest(dir);
  CHECK(index.cases.empty());
  CHECK(index.skipped.empty());
  CHECK_THROWS(data::load_manifest(dir / "missing"));
}

TEST_CASE("synthetic dataset loads fully") {
  const fs::path dir = fresh_dir("ow_load");
  const auto roots = small_dataset(dir);
  const data::DatasetIndex index = data::load_manifest(roots.root3d);
  CHECK(index.cases.size() == 10);
  CHECK(index.skipped.empty());
  CHECK(index.dim == data::Dimensionality::three_d);

  const data::WingCase c = data::load_case(index, index.cases.front().case_id);
  CHECK(c.initial.slices.size() == 9);
  CHECK(c.optimized.slices.size() == 9);
  CHECK(c.initial.span_stations == c.optimized.span_stations);
  CHECK(c.initial.half_span == 2.5);
  CHECK(c.optimized.has_pressure());
  CHECK(geom::validate(c.optimized).empty());
  CHECK(c.desc.condition_in_bounds);
  CHECK(c.desc.alpha_in_bounds);
  CHECK(c.desc.coeff_initial.l_over_d() ==
        c.desc.coeff_initial.cl / c.desc.coeff_initial.cd);
  CHECK_THROWS(data::load_case(index, "nope"));
}

TEST_CASE("slice files round trip bit-identically") {
  const fs::path dir = fresh_dir("ow_roundtrip");
  const auto roots = small_dataset(dir, 2);
  const data::DatasetIndex index = data::load_manifest(roots.root3d);
  const data::WingCase c = data::load_case(index, index.cases.front().case_id);

  const fs::path copy = dir / "copy.csv";
  data::write_slices(copy, c.optimized);
  const geom::WingGeometry back = data::read_slices(copy);
  REQUIRE(back.slices.size() == c.optimized.slices.size());
  for (std::size_t k = 0; k < back.slices.size(); ++k) {
    CHECK(back.span_stations[k] == c.optimized.span_stations[k]);
    REQUIRE(back.slices[k].coords.size() == c.optimized.slices[k].coords.size());
    for (std::size_t p = 0; p < back.slices[k].coords.size(); ++p) {
      CHECK(back.slices[k].coords[p].x == c.optimized.slices[k].coords[p].x);
      CHECK(back.slices[k].coords[p].y == c.optimized.slices[k].coords[p].y);
      CHECK(back.cp[k][p] == c.optimized.cp[k][p]);
    }
  }
}

TEST_CASE("corrupt case becomes a skip record, the rest load") {
  const fs::path dir = fresh_dir("ow_corrupt");
  const auto roots = small_dataset(dir, 5);
  // Truncate one geometry file mid-number.
  const data::DatasetIndex before = data::load_manifest(roots.root3d);
  const fs::path victim = roots.root3d / before.cases[2].optimized_file;
  {
    std::ifstream in(victim);
    std::string contents((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
    std::ofstream out(victim, std::ios::trunc);
    out << contents.substr(0, contents.size() / 2);
    out << "\nnot,a,number,row\n";
  }
  const data::DatasetIndex after = data::load_manifest(roots.root3d);
  CHECK(after.cases.size() == 4);
  REQUIRE(after.skipped.size() == 1);
  CHECK(after.skipped.front().case_id == before.cases[2].case_id);
  CHECK_FALSE(after.skipped.front().reason.empty());
}

TEST_CASE("out-of-bounds conditions are flagged, never clamped") {
  const fs::path dir = fresh_dir("ow_flags");
  const auto roots = small_dataset(dir, 2);
  // Rewrite the manifest with one condition pushed outside Table bounds.
  const fs::path manifest = roots.root3d / "manifest.json";
  std::ifstream in(manifest);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  data::DatasetIndex index = data::load_manifest(roots.root3d);
  std::vector<data::CaseDescriptor> cases(index.cases.begin(), index.cases.end());
  cases[0].condition.mach = 1.3;  // outside [0.4, 0.9]
  data::write_manifest(roots.root3d, index.dim, index.half_span, cases);

  const data::DatasetIndex flagged = data::load_manifest(roots.root3d);
  REQUIRE(flagged.cases.size() == 2);
  CHECK_FALSE(flagged.cases[0].condition_in_bounds);
  CHECK(flagged.cases[0].condition.mach == 1.3);  // unclamped
  CHECK(flagged.cases[1].condition_in_bounds);
}

TEST_CASE("split determinism and structure") {
  const fs::path dir = fresh_dir("ow_split");
  const auto roots = small_dataset(dir, 12);
  const data::DatasetIndex index = data::load_manifest(roots.root3d);

  const data::SplitAssignment a = data::split_dataset(index, 7, {8, 2, 2});
  const data::SplitAssignment b = data::split_dataset(index, 7, {8, 2, 2});
  CHECK(a.train_ids == b.train_ids);
  CHECK(a.val_ids == b.val_ids);
  CHECK(a.test_ids == b.test_ids);
  CHECK(a.train_ids.size() == 8);
  CHECK(a.val_ids.size() == 2);
  CHECK(a.test_ids.size() == 2);

  // Disjoint and exhaustive over the selected counts.
  std::vector<std::string> all = a.train_ids;
  all.insert(all.end(), a.val_ids.begin(), a.val_ids.end());
  all.insert(all.end(), a.test_ids.begin(), a.test_ids.end());
  std::sort(all.begin(), all.end());
  CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());

  const data::SplitAssignment c = data::split_dataset(index, 8, {8, 2, 2});
  CHECK(a.train_ids != c.train_ids);

  const data::SplitAssignment everything = data::split_dataset(index, 7, {12, 0, 0});
  CHECK(everything.train_ids.size() == 12);
  CHECK(everything.val_ids.empty());

  CHECK_THROWS(data::split_dataset(index, 7, {12, 1, 0}));
}

TEST_CASE("2d-3d pairing on the synthetic roots") {
  const fs::path dir = fresh_dir("ow_pair");
  const auto roots = small_dataset(dir, 20, 9);
  const data::DatasetIndex i3 = data::load_manifest(roots.root3d);
  const data::DatasetIndex i2 = data::load_manifest(roots.root2d);
  REQUIRE(i2.cases.size() > 0);
  REQUIRE(i2.cases.size() < i3.cases.size());

  const data::PairingResult pairing = data::pair_2d_3d(i2, i3);
  CHECK(pairing.pairs.size() == i2.cases.size());
  CHECK(pairing.unmatched_2d.empty());
  CHECK(pairing.unmatched_3d.size() == i3.cases.size() - i2.cases.size());
}

TEST_CASE("pairing fixtures: disjoint, identical and partial overlap") {
  auto make_index = [](std::vector<std::pair<std::string, std::string>> id_foil,
                       double mach) {
    data::DatasetIndex idx;
    for (auto& [id, foil] : id_foil) {
      data::CaseDescriptor d;
      d.case_id = id;
      d.initial_airfoil = foil;
      d.condition = {mach, 5e6, 0.8, 0.9};
      idx.cases.push_back(d);
    }
    return idx;
  };
  const auto disjoint2 = make_index({{"a", "f1"}, {"b", "f2"}}, 0.5);
  const auto disjoint3 = make_index({{"w", "g1"}, {"x", "g2"}}, 0.5);
  CHECK(data::pair_2d_3d(disjoint2, disjoint3).pairs.empty());

  const auto same2 = make_index({{"a", "f1"}, {"b", "f2"}}, 0.5);
  const auto same3 = make_index({{"w", "f1"}, {"x", "f2"}}, 0.5);
  CHECK(data::pair_2d_3d(same2, same3).pairs.size() == 2);

  const auto part2 = make_index({{"a", "f1"}, {"b", "f2"}, {"c", "f3"}, {"d", "f9"}, {"e", "f8"}}, 0.6);
  const auto part3 = make_index({{"u", "f1"}, {"v", "f2"}, {"w", "f3"}, {"y", "h1"}, {"z", "h2"}}, 0.6);
  const data::PairingResult partial = data::pair_2d_3d(part2, part3);
  CHECK(partial.pairs.size() == 3);
  CHECK(partial.unmatched_2d.size() == 2);
  CHECK(partial.unmatched_3d.size() == 2);
}

TEST_CASE("latent records round trip") {
  const fs::path dir = fresh_dir("ow_latents");
  std::vector<std::array<double, 90>> rows(3);
  Rng rng(17, 0);
  for (auto& row : rows) {
    for (double& v : row) v = rng.normal();
  }
  data::write_latents(dir / "z.csv", rows);
  const auto back = data::read_latents(dir / "z.csv");
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < 90; ++j) CHECK(back[i][j] == rows[i][j]);
  }
}

TEST_CASE("data root resolution") {
  CHECK(data::resolve_data_root("/explicit/path") == fs::path("/explicit/path"));
  ::setenv(data::kDataRootEnv, "/from/env", 1);
  CHECK(data::resolve_data_root("") == fs::path("/from/env"));
  ::unsetenv(data::kDataRootEnv);
  CHECK_THROWS(data::resolve_data_root(""));
}

TEST_CASE("duplicate case ids are skipped") {
  const fs::path dir = fresh_dir("ow_dup");
  const auto roots = small_dataset(dir, 2);
  data::DatasetIndex index = data::load_manifest(roots.root3d);
  std::vector<data::CaseDescriptor> cases(index.cases.begin(), index.cases.end());
  cases.push_back(cases.front());  // duplicate id
  data::write_manifest(roots.root3d, index.dim, index.half_span, cases);
  const data::DatasetIndex again = data::load_manifest(roots.root3d);
  CHECK(again.cases.size() == 2);
  REQUIRE(again.skipped.size() == 1);
  CHECK(again.skipped.front().reason == "duplicate case_id");
}
