// optiwing: dataset ingestion, Bezier fitting, diffusion training and
// generation, evaluation, analyses and wall-spacing estimates from one
// binary. Exit codes: 0 success, 1 computation failure, 2 usage/input error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "optiwing/analysis.hpp"
#include "optiwing/dataset.hpp"
#include "optiwing/diffusion.hpp"
#include "optiwing/evaluation.hpp"
#include "optiwing/flow.hpp"
#include "optiwing/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace optiwing;

namespace {

constexpr const char* kVersion = "0.1.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_run_manifest(const fs::path& out_dir, const std::string& command,
                        const json& config_echo, std::uint64_t seed) {
  fs::create_directories(out_dir);
  json j;
  j["command"] = command;
  j["config"] = config_echo;
  j["seed"] = seed;
  j["version"] = kVersion;
  std::ofstream out(out_dir / "run_manifest.json");
  out << j.dump(1) << '\n';
}

data::DatasetIndex load_index_checked(const std::string& root_arg) {
  const fs::path root = data::resolve_data_root(root_arg);
  if (!fs::exists(root)) {
    throw UsageError("data root does not exist: " + root.string());
  }
  return data::load_manifest(root);
}

pipeline::TrainingConfig read_training_config(const std::string& path,
                                              json& echo) {
  pipeline::TrainingConfig cfg;
  echo = json::object();
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw UsageError(std::string("bad config file: ") + e.what());
  }
  if (j.value("schema_version", 1) != 1) {
    throw UsageError("unsupported config schema_version");
  }
  cfg.preset = j.value("preset", cfg.preset);
  cfg.n_t = j.value("n_t", cfg.n_t);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.resample_points = j.value("resample_points", cfg.resample_points);
  if (j.contains("weights")) {
    cfg.weights.shape = j["weights"].at(0).get<double>();
    cfg.weights.alpha = j["weights"].at(1).get<double>();
    cfg.weights.eta = j["weights"].at(2).get<double>();
  }
  echo = j;
  return cfg;
}

data::SplitCounts split_counts_for(const data::DatasetIndex& index, const json& cfg) {
  data::SplitCounts counts;
  if (cfg.contains("counts")) {
    counts.train = cfg["counts"].value("train", 0);
    counts.val = cfg["counts"].value("val", 0);
    counts.test = cfg["counts"].value("test", 0);
  } else {
    // Default 85/5/10, the release's split proportions.
    const std::size_t n = index.cases.size();
    counts.val = std::max<std::size_t>(1, n / 20);
    counts.test = std::max<std::size_t>(1, n / 10);
    counts.train = n - counts.val - counts.test;
  }
  return counts;
}

json split_to_json(const data::SplitAssignment& s) {
  return json{{"seed", s.seed},
              {"train", s.train_ids},
              {"val", s.val_ids},
              {"test", s.test_ids}};
}

data::SplitAssignment split_from_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read split file " + path.string());
  json j;
  in >> j;
  data::SplitAssignment s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.train_ids = j.at("train").get<std::vector<std::string>>();
  s.val_ids = j.at("val").get<std::vector<std::string>>();
  s.test_ids = j.at("test").get<std::vector<std::string>>();
  return s;
}

void write_plot_spec(const fs::path& path, const std::string& kind,
                     const std::string& title, const std::string& xlabel,
                     const std::string& ylabel, const std::string& csv,
                     const std::vector<std::pair<std::string, std::string>>& series) {
  json j;
  j["kind"] = kind;
  j["title"] = title;
  j["xlabel"] = xlabel;
  j["ylabel"] = ylabel;
  j["csv"] = csv;
  j["series"] = json::array();
  for (const auto& [x, y] : series) {
    j["series"].push_back({{"x", x}, {"y", y}});
  }
  std::ofstream out(path);
  out << j.dump(1) << '\n';
}

int cmd_ingest(const std::string& root_arg, const fs::path& out_dir) {
  const data::DatasetIndex index = load_index_checked(root_arg);
  fs::create_directories(out_dir);

  json report;
  report["root"] = index.root.string();
  report["valid_cases"] = index.cases.size();
  report["skipped"] = json::array();
  for (const auto& s : index.skipped) {
    report["skipped"].push_back({{"case_id", s.case_id}, {"reason", s.reason}});
  }
  report["flagged_conditions"] = json::array();
  for (const auto& c : index.cases) {
    if (!c.condition_in_bounds || !c.alpha_in_bounds) {
      report["flagged_conditions"].push_back(c.case_id);
    }
  }
  std::ofstream rep(out_dir / "validation_report.json");
  rep << report.dump(1) << '\n';
  data::write_manifest(out_dir, index.dim, index.half_span, index.cases);

  std::cout << "ingested " << index.cases.size() << " cases, skipped "
            << index.skipped.size() << '\n';
  if (index.cases.empty()) {
    std::cerr << "no valid cases under " << index.root << '\n';
    return 1;
  }
  return 0;
}

int cmd_ywall(double mach, double reynolds, double t_inf, double l_ref,
              double y_plus) {
  flow::WallSpacingInputs in;
  in.mach = mach;
  in.reynolds = reynolds;
  in.t_inf = t_inf;
  in.l_ref = l_ref;
  in.y_plus = y_plus;
  const flow::WallSpacingResult r = flow::off_wall_distance(in);
  std::cout << "speed_of_sound_m_per_s " << r.a << '\n'
            << "velocity_m_per_s " << r.u << '\n'
            << "viscosity_pa_s " << r.mu << '\n'
            << "density_kg_per_m3 " << r.rho << '\n'
            << "skin_friction " << r.cf << '\n'
            << "wall_shear_pa " << r.tau_w << '\n'
            << "friction_velocity_m_per_s " << r.u_tau << '\n'
            << "off_wall_distance_m " << r.delta << '\n';
  return 0;
}

std::vector<diff::Conditioning> read_conditions(const fs::path& path,
                                                const std::string& root_arg,
                                                int resample_points) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read conditions file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw UsageError(std::string("bad conditions file: ") + e.what());
  }
  std::vector<diff::Conditioning> out;
  for (const json& row : j) {
    diff::Conditioning c;
    c.condition.mach = row.at("mach").get<double>();
    c.condition.reynolds = row.at("reynolds").get<double>();
    c.condition.cl_con = row.at("cl_con").get<double>();
    c.condition.vmin_frac = row.at("vmin_frac").get<double>();
    geom::Section section;
    if (row.contains("initial_section")) {
      const geom::WingGeometry w = data::read_slices(row["initial_section"].get<std::string>());
      if (w.slices.empty()) throw UsageError("empty initial section file");
      section = w.slices.front();
    } else if (row.contains("initial_case")) {
      const data::DatasetIndex index = load_index_checked(root_arg);
      const data::WingCase wc = data::load_case(index, row["initial_case"].get<std::string>());
      section = wc.initial.slices.front();
    } else {
      throw UsageError("condition row needs initial_section or initial_case");
    }
    const geom::Section resampled = geom::resample_section(section, resample_points);
    c.z_a0 = bezier::encode(resampled).first;
    out.push_back(std::move(c));
  }
  return out;
}

struct SplitIdsArgs {
  std::string split_file;
  std::string which = "test";
};

std::vector<std::string> resolve_split_ids(const data::DatasetIndex& index,
                                           const SplitIdsArgs& args,
                                           std::uint64_t seed, const json& cfg_echo,
                                           data::SplitAssignment* out_split = nullptr) {
  data::SplitAssignment split;
  if (!args.split_file.empty()) {
    split = split_from_json_file(args.split_file);
  } else {
    split = data::split_dataset(index, seed, split_counts_for(index, cfg_echo));
  }
  if (out_split) *out_split = split;
  if (args.which == "train") return split.train_ids;
  if (args.which == "val") return split.val_ids;
  if (args.which == "test") return split.test_ids;
  throw UsageError("unknown split name: " + args.which);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"optiwing: optimized-wing dataset and generative-model toolkit"};
  app.require_subcommand(1);

  std::string data_root;
  std::uint64_t seed = 7;
  std::string out_dir = "out";
  std::string config_path;
  app.add_option("--data-root", data_root,
                 "dataset root (default: $OPTIWING_DATA_ROOT)");
  app.add_option("--seed", seed, "run seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--config", config_path, "training config file (json)");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate the synthetic desk-scale dataset");
  int synth_n = 120;
  bool synth_no_pressure = false;
  synth_cmd->add_option("--n", synth_n, "number of 3D cases");
  synth_cmd->add_flag("--no-pressure", synth_no_pressure, "omit cp columns");

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "validate a dataset root and write a normalized manifest");

  // split
  auto* split_cmd = app.add_subcommand("split", "write a train/val/test split");
  std::size_t n_train = 0, n_val = 0, n_test = 0;
  split_cmd->add_option("--train", n_train, "train count");
  split_cmd->add_option("--val", n_val, "val count");
  split_cmd->add_option("--test", n_test, "test count");

  // fit-bezier
  auto* fit_cmd = app.add_subcommand("fit-bezier", "encode all case sections to Bezier latents");
  int fit_points = 161;
  fit_cmd->add_option("--points", fit_points, "resampled points per section");

  // train
  auto* train_cmd = app.add_subcommand("train", "train the latent diffusion model");
  std::string resume_path;
  int override_epochs = -1;
  std::string override_preset;
  train_cmd->add_option("--resume", resume_path, "checkpoint to resume from");
  train_cmd->add_option("--epochs", override_epochs, "override config epochs");
  train_cmd->add_option("--preset", override_preset, "override network preset (desk|paper)");

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "sample designs for a conditions file");
  std::string ckpt_path, conditions_path;
  gen_cmd->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();
  gen_cmd->add_option("--conditions", conditions_path, "conditions json")->required();

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "metric report over a dataset split");
  std::string eval_ckpt;
  SplitIdsArgs eval_split;
  int passes = 10;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
  eval_cmd->add_option("--split", eval_split.which, "train|val|test");
  eval_cmd->add_option("--split-file", eval_split.split_file, "split json from `split`");
  eval_cmd->add_option("--passes", passes, "sampling passes");

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "dataset analyses");
  auto* pca_cmd = analyze_cmd->add_subcommand("pca", "cumulative explained variance");
  std::string pca_space = "geometry";
  std::string pca_set = "optimized";
  pca_cmd->add_option("--space", pca_space, "geometry|pressure");
  pca_cmd->add_option("--set", pca_set, "initial|optimized");
  auto* diff_cmd = analyze_cmd->add_subcommand("diff", "aggregate initial-vs-optimized differences");
  std::string diff_kind = "shape";
  diff_cmd->add_option("--kind", diff_kind, "shape|pressure");
  auto* ld_cmd = analyze_cmd->add_subcommand("ld", "lift-to-drag distribution");
  std::string ld_axis = "mach";
  int ld_bins = 6;
  ld_cmd->add_option("--axis", ld_axis, "mach|reynolds");
  ld_cmd->add_option("--bins", ld_bins, "bin count");

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "data-size ablation sweep");
  std::string sizes_arg = "50,100";
  int ablate_repeats = 2, ablate_passes = 10;
  ablate_cmd->add_option("--sizes", sizes_arg, "comma-separated training sizes");
  ablate_cmd->add_option("--repeats", ablate_repeats, "models per size");
  ablate_cmd->add_option("--passes", ablate_passes, "eval passes per model");

  // ywall
  auto* ywall_cmd = app.add_subcommand("ywall", "first-cell off-wall distance estimate");
  double yw_mach = 0.5, yw_re = 5e6, yw_t = 300.0, yw_l = 1.0, yw_yplus = 1.0;
  ywall_cmd->add_option("--mach", yw_mach, "Mach number")->required();
  ywall_cmd->add_option("--reynolds", yw_re, "Reynolds number")->required();
  ywall_cmd->add_option("--t", yw_t, "freestream temperature, K");
  ywall_cmd->add_option("--l", yw_l, "reference length, m");
  ywall_cmd->add_option("--yplus", yw_yplus, "target y+");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;  // --help
    std::cerr << e.what() << '\n';
    return 2;
  }

  const fs::path out(out_dir);
  try {
    json cfg_echo;
    pipeline::TrainingConfig train_cfg = read_training_config(config_path, cfg_echo);
    train_cfg.seed = seed;
    if (cfg_echo.contains("seed")) train_cfg.seed = cfg_echo["seed"].get<std::uint64_t>();

    if (*synth_cmd) {
      synth::SyntheticConfig cfg;
      cfg.n_cases = synth_n;
      cfg.seed = seed;
      cfg.with_pressure = !synth_no_pressure;
      const auto roots = synth::generate_dataset(out, cfg);
      write_run_manifest(out, "synth", {{"n", synth_n}, {"pressure", !synth_no_pressure}}, seed);
      std::cout << "wing3d: " << roots.root3d.string() << '\n'
                << "airfoil2d: " << roots.root2d.string() << '\n';
      return 0;
    }

    if (*ingest_cmd) {
      write_run_manifest(out, "ingest", {{"data_root", data_root}}, seed);
      return cmd_ingest(data_root, out);
    }

    if (*split_cmd) {
      const data::DatasetIndex index = load_index_checked(data_root);
      data::SplitCounts counts{n_train, n_val, n_test};
      if (counts.train + counts.val + counts.test == 0) {
        counts = split_counts_for(index, cfg_echo);
      }
      const data::SplitAssignment split = data::split_dataset(index, seed, counts);
      fs::create_directories(out);
      std::ofstream f(out / "split.json");
      f << split_to_json(split).dump(1) << '\n';
      write_run_manifest(out, "split",
                         {{"train", counts.train}, {"val", counts.val}, {"test", counts.test}},
                         seed);
      std::cout << "split written to " << (out / "split.json").string() << '\n';
      return 0;
    }

    if (*fit_cmd) {
      const data::DatasetIndex index = load_index_checked(data_root);
      if (index.cases.empty()) throw UsageError("no cases to fit");
      data::SplitAssignment all;
      all.seed = seed;
      for (const auto& c : index.cases) all.train_ids.push_back(c.case_id);
      const pipeline::EncodedDataset encoded =
          pipeline::encode_dataset(index, all, fit_points, out / "latents", &std::cout);
      // Fit-error summary over every optimized slice.
      std::vector<double> all_mse;
      for (const auto& e : encoded.cases) {
        all_mse.insert(all_mse.end(), e.fit_mse.begin(), e.fit_mse.end());
      }
      std::sort(all_mse.begin(), all_mse.end());
      std::ofstream f(out / "fit_summary.csv");
      f << "quantile,mse\n";
      for (double q : {0.0, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0}) {
        const auto idx = static_cast<std::size_t>(q * (all_mse.size() - 1));
        f << q << ',' << all_mse[idx] << '\n';
      }
      write_run_manifest(out, "fit-bezier", {{"points", fit_points}}, seed);
      std::cout << "fitted " << encoded.cases.size() << " cases, median slice mse "
                << all_mse[all_mse.size() / 2] << '\n';
      return 0;
    }

    if (*train_cmd) {
      if (override_epochs > 0) train_cfg.epochs = override_epochs;
      if (!override_preset.empty()) train_cfg.preset = override_preset;
      const data::DatasetIndex index = load_index_checked(data_root);
      const data::SplitAssignment split =
          data::split_dataset(index, train_cfg.seed, split_counts_for(index, cfg_echo));
      const pipeline::EncodedDataset encoded = pipeline::encode_dataset(
          index, split, train_cfg.resample_points, out / "latents", &std::cout);
      json echo = cfg_echo;
      echo["epochs"] = train_cfg.epochs;
      echo["preset"] = train_cfg.preset;
      echo["n_t"] = train_cfg.n_t;
      echo["weights"] = {train_cfg.weights.shape, train_cfg.weights.alpha,
                         train_cfg.weights.eta};
      write_run_manifest(out, "train", echo, train_cfg.seed);
      const pipeline::TrainResult r = pipeline::train_model(
          encoded, train_cfg, out, &std::cout,
          resume_path.empty() ? fs::path{} : fs::path(resume_path));
      std::ofstream f(out / "split.json");
      f << split_to_json(split).dump(1) << '\n';
      std::cout << "checkpoint: " << r.checkpoint_path.string() << '\n'
                << "final loss: "
                << (r.loss_curve.empty() ? 0.0 : r.loss_curve.back()) << '\n';
      return 0;
    }

    if (*gen_cmd) {
      const diff::LoadedCheckpoint ck = diff::load_checkpoint(ckpt_path);
      const auto conds = read_conditions(conditions_path, data_root, 161);
      write_run_manifest(out, "generate",
                         {{"checkpoint", ckpt_path}, {"conditions", conditions_path}},
                         seed);
      if (conds.empty()) {
        std::cout << "no conditions, nothing to generate\n";
        return 0;
      }
      const auto gens = pipeline::generate_batch(ck, conds, seed);
      std::ofstream alphas(out / "alphas.csv");
      alphas << "index,alpha_deg\n";
      for (std::size_t i = 0; i < gens.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "gen_%04zu.csv", i);
        data::write_slices(out / name, gens[i].wing);
        alphas << i << ',' << gens[i].alpha << '\n';
      }
      std::cout << "generated " << gens.size() << " designs under " << out.string()
                << '\n';
      return 0;
    }

    if (*eval_cmd) {
      const diff::LoadedCheckpoint ck = diff::load_checkpoint(eval_ckpt);
      const data::DatasetIndex index = load_index_checked(data_root);
      data::SplitAssignment split;
      const std::vector<std::string> ids =
          resolve_split_ids(index, eval_split, seed, cfg_echo, &split);
      if (ids.empty()) throw UsageError("selected split is empty");
      const pipeline::EncodedDataset encoded = pipeline::encode_dataset(
          index, split, 161, out / "latents", &std::cout);
      pipeline::EvalOptions opts;
      opts.passes = passes;
      opts.seed = seed;
      const pipeline::EvalResult r = pipeline::evaluate_split(ck, encoded, ids, opts);
      write_run_manifest(out, "evaluate",
                         {{"checkpoint", eval_ckpt}, {"split", eval_split.which},
                          {"passes", passes}},
                         seed);
      pipeline::write_report_json(out / "report.json", r);
      pipeline::write_profiles_csv(out / "profiles.csv", r.report);
      write_plot_spec(out / "profiles.plot.json", "line", "Spanwise metrics",
                      "slice", "value", "profiles.csv",
                      {{"slice", "mse_shape"}, {"slice", "mmd_shape"}, {"slice", "vendi"}});
      std::cout << "shape mse " << r.report.mse_shape.mean << " +- "
                << r.report.mse_shape.stddev << '\n'
                << "alpha mse " << r.report.mse_alpha.mean << " +- "
                << r.report.mse_alpha.stddev << '\n'
                << "vendi normalized " << r.report.vendi_normalized.mean << '\n'
                << "volume satisfaction " << r.report.vol_constraint_pct.mean << "%\n";
      return 0;
    }

    if (*analyze_cmd) {
      const data::DatasetIndex index = load_index_checked(data_root);
      if (index.cases.empty()) throw UsageError("no cases to analyze");
      fs::create_directories(out);

      if (*pca_cmd) {
        std::vector<geom::WingGeometry> wings;
        for (const auto& c : index.cases) {
          const data::WingCase wc = data::load_case(index, c.case_id);
          wings.push_back(pca_set == "initial" ? wc.initial : wc.optimized);
        }
        const Eigen::MatrixXd feats = pca_space == "pressure"
                                          ? analysis::pressure_features(wings)
                                          : analysis::geometry_features(wings);
        const analysis::PcaResult r = analysis::pca_cumulative(feats);
        std::ofstream f(out / "pca.csv");
        f << "component,ratio,cumulative\n";
        for (std::size_t i = 0; i < r.cumulative.size(); ++i) {
          f << (i + 1) << ',' << r.explained_variance_ratio[i] << ','
            << r.cumulative[i] << '\n';
        }
        write_plot_spec(out / "pca.plot.json", "line", "Cumulative explained variance",
                        "components", "cumulative", "pca.csv",
                        {{"component", "cumulative"}});
        write_run_manifest(out, "analyze pca",
                           {{"space", pca_space}, {"set", pca_set}}, seed);
        std::cout << "components for 99%: " << r.n_for(0.99) << '\n';
        return 0;
      }

      if (*diff_cmd) {
        std::vector<std::pair<geom::WingGeometry, geom::WingGeometry>> pairs;
        for (const auto& c : index.cases) {
          const data::WingCase wc = data::load_case(index, c.case_id);
          pairs.emplace_back(wc.initial, wc.optimized);
        }
        const analysis::DifferenceProfile p = analysis::aggregate_difference(
            pairs, analysis::default_span_fractions(), 100,
            diff_kind == "pressure" ? analysis::DiffKind::pressure
                                    : analysis::DiffKind::shape);
        std::ofstream f(out / "diff_profile.csv");
        f << "span_fraction,chord_fraction,mean_abs,std\n";
        for (std::size_t s = 0; s < p.span_fractions.size(); ++s) {
          for (std::size_t c = 0; c < p.chord_stations.size(); ++c) {
            f << p.span_fractions[s] << ',' << p.chord_stations[c] << ','
              << p.mean_abs[s][c] << ',' << p.stddev[s][c] << '\n';
          }
        }
        write_plot_spec(out / "diff_profile.plot.json", "line",
                        "Aggregate differences", "chord fraction", "mean |delta|",
                        "diff_profile.csv", {{"chord_fraction", "mean_abs"}});
        write_run_manifest(out, "analyze diff", {{"kind", diff_kind}}, seed);
        double overall = 0.0;
        for (const auto& row : p.mean_abs) {
          for (double v : row) overall = std::max(overall, v);
        }
        std::cout << "max mean |delta|: " << overall << '\n';
        return 0;
      }

      if (*ld_cmd) {
        const analysis::LdSummary s = analysis::ld_distribution(
            index.cases,
            ld_axis == "reynolds" ? analysis::LdAxis::reynolds : analysis::LdAxis::mach,
            ld_bins);
        std::ofstream f(out / "ld_bins.csv");
        f << "lo,hi,count,mean_initial,mean_optimized,median_initial,"
             "median_optimized,q25_initial,q75_initial,q25_optimized,q75_optimized\n";
        for (const auto& b : s.bins) {
          f << b.lo << ',' << b.hi << ',' << b.count << ',' << b.mean_initial << ','
            << b.mean_optimized << ',' << b.median_initial << ',' << b.median_optimized
            << ',' << b.q25_initial << ',' << b.q75_initial << ',' << b.q25_optimized
            << ',' << b.q75_optimized << '\n';
        }
        write_plot_spec(out / "ld_bins.plot.json", "line", "L/D distribution",
                        ld_axis, "L/D", "ld_bins.csv",
                        {{"lo", "mean_initial"}, {"lo", "mean_optimized"}});
        write_run_manifest(out, "analyze ld", {{"axis", ld_axis}, {"bins", ld_bins}}, seed);
        std::cout << "bins written\n";
        return 0;
      }
      throw UsageError("analyze needs a subcommand: pca, diff or ld");
    }

    if (*ablate_cmd) {
      const data::DatasetIndex index = load_index_checked(data_root);
      const data::SplitAssignment split =
          data::split_dataset(index, train_cfg.seed, split_counts_for(index, cfg_echo));
      const pipeline::EncodedDataset encoded = pipeline::encode_dataset(
          index, split, train_cfg.resample_points, out / "latents", &std::cout);
      std::vector<int> sizes;
      std::stringstream ss(sizes_arg);
      std::string tok;
      while (std::getline(ss, tok, ',')) sizes.push_back(std::stoi(tok));
      write_run_manifest(out, "ablate",
                         {{"sizes", sizes}, {"repeats", ablate_repeats},
                          {"passes", ablate_passes}},
                         train_cfg.seed);
      const auto curves = pipeline::run_wing_ablation(
          encoded, sizes, ablate_repeats, ablate_passes, train_cfg, out / "models",
          &std::cout);
      for (const auto& [name, curve] : curves) {
        std::ofstream f(out / ("ablation_" + name + ".csv"));
        f << "size,mean,std,failed\n";
        for (std::size_t i = 0; i < curve.sizes.size(); ++i) {
          f << curve.sizes[i] << ',' << curve.values[i].mean << ','
            << curve.values[i].stddev << ',' << (curve.failed[i] ? 1 : 0) << '\n';
        }
        if (curve.sizes.size() >= 2 && curve.values.front().mean != 0.0) {
          const auto rates = analysis::marginal_improvement_rate(curve);
          std::ofstream rf(out / ("ablation_" + name + "_rates.csv"));
          rf << "from,to,pct_per_sample\n";
          for (std::size_t i = 0; i < rates.size(); ++i) {
            rf << curve.sizes[i] << ',' << curve.sizes[i + 1] << ',' << rates[i] << '\n';
          }
        }
      }
      std::cout << "ablation curves written\n";
      return 0;
    }

    if (*ywall_cmd) {
      return cmd_ywall(yw_mach, yw_re, yw_t, yw_l, yw_yplus);
    }

    throw UsageError("no subcommand given");
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
