#include "optiwing/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <thread>
#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace optiwing::pipeline {

namespace {

using nlohmann::json;

std::uint64_t condition_key(const diff::Conditioning& c) {
  auto hash_doubles = [](std::uint64_t h, const double* p, std::size_t n) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
    return h;
  };
  std::uint64_t h = 1469598103934665603ull;
  const double cond[4] = {c.condition.mach, c.condition.reynolds,
                          c.condition.cl_con, c.condition.vmin_frac};
  h = hash_doubles(h, cond, 4);
  const auto flat = c.z_a0.to_flat();
  h = hash_doubles(h, flat.data(), flat.size());
  return h;
}

json encoded_case_to_json(const diff::EncodedCase& e, double init_volume,
                          double truth_volume) {
  json j;
  j["repr"] = "logw-v1";
  j["case_id"] = e.case_id;
  j["alpha"] = e.state.alpha;
  j["vmin_frac"] = e.vmin_frac;
  j["init_volume"] = init_volume;
  j["truth_volume"] = truth_volume;
  j["eta_y"] = std::vector<double>(e.state.eta_y.data(),
                                   e.state.eta_y.data() + e.state.eta_y.size());
  j["fit_mse"] = e.fit_mse;
  j["condition"] = {{"mach", e.cond.condition.mach},
                    {"reynolds", e.cond.condition.reynolds},
                    {"cl_con", e.cond.condition.cl_con},
                    {"vmin_frac", e.cond.condition.vmin_frac}};
  std::vector<double> zw(e.state.z_w.data(), e.state.z_w.data() + e.state.z_w.size());
  j["z_w"] = zw;
  const auto a0 = e.cond.z_a0.to_flat();
  j["z_a0"] = std::vector<double>(a0.begin(), a0.end());
  return j;
}

bool encoded_case_from_json(const json& j, diff::EncodedCase& e,
                            double& init_volume, double& truth_volume) {
  try {
    if (j.value("repr", "") != "logw-v1") return false;
    e.case_id = j.at("case_id").get<std::string>();
    e.state.alpha = j.at("alpha").get<double>();
    e.vmin_frac = j.at("vmin_frac").get<double>();
    init_volume = j.at("init_volume").get<double>();
    truth_volume = j.at("truth_volume").get<double>();
    const auto eta = j.at("eta_y").get<std::vector<double>>();
    if (eta.size() != diff::kSlices) return false;
    for (int k = 0; k < diff::kSlices; ++k) e.state.eta_y(k) = eta[static_cast<std::size_t>(k)];
    e.fit_mse = j.at("fit_mse").get<std::vector<double>>();
    e.cond.condition.mach = j.at("condition").at("mach").get<double>();
    e.cond.condition.reynolds = j.at("condition").at("reynolds").get<double>();
    e.cond.condition.cl_con = j.at("condition").at("cl_con").get<double>();
    e.cond.condition.vmin_frac = j.at("condition").at("vmin_frac").get<double>();
    const auto zw = j.at("z_w").get<std::vector<double>>();
    if (zw.size() != static_cast<std::size_t>(diff::kLatentDim * diff::kSlices)) return false;
    std::copy(zw.begin(), zw.end(), e.state.z_w.data());
    const auto a0 = j.at("z_a0").get<std::vector<double>>();
    if (a0.size() != static_cast<std::size_t>(bezier::kLatentSize)) return false;
    std::array<double, bezier::kLatentSize> flat{};
    std::copy(a0.begin(), a0.end(), flat.begin());
    e.cond.z_a0 = bezier::BezierLatent::from_flat(flat);
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

std::vector<diff::TrainItem> make_items(const EncodedDataset& encoded,
                                        const std::vector<std::string>& ids,
                                        const diff::Normalizer& norm) {
  std::vector<diff::TrainItem> items;
  items.reserve(ids.size());
  for (const std::string& id : ids) {
    const diff::EncodedCase* e = encoded.find(id);
    if (!e) throw std::runtime_error("make_items: missing encoded case " + id);
    items.push_back({norm.normalize(e->state), norm.conditioning_vector(e->cond)});
  }
  return items;
}

diff::Normalizer fit_normalizer(const EncodedDataset& encoded,
                                const std::vector<std::string>& train_ids) {
  std::vector<diff::DesignState> states;
  std::vector<diff::Conditioning> conds;
  for (const std::string& id : train_ids) {
    const diff::EncodedCase* e = encoded.find(id);
    if (!e) throw std::runtime_error("fit_normalizer: missing encoded case " + id);
    states.push_back(e->state);
    conds.push_back(e->cond);
  }
  return diff::Normalizer::fit(states, conds);
}

}  // namespace

nn::UNetConfig TrainingConfig::net_config() const {
  if (preset == "paper") return nn::UNetConfig::paper();
  if (preset == "desk") return nn::UNetConfig::desk();
  throw std::invalid_argument("unknown network preset: " + preset);
}

const diff::EncodedCase* EncodedDataset::find(const std::string& case_id) const {
  for (const diff::EncodedCase& e : cases) {
    if (e.case_id == case_id) return &e;
  }
  return nullptr;
}

double EncodedDataset::init_volume(const std::string& case_id) const {
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (cases[i].case_id == case_id) return init_volumes[i];
  }
  throw std::runtime_error("init_volume: unknown case " + case_id);
}

std::vector<const diff::EncodedCase*> EncodedDataset::subset(
    const std::vector<std::string>& ids) const {
  std::vector<const diff::EncodedCase*> out;
  out.reserve(ids.size());
  for (const std::string& id : ids) {
    const diff::EncodedCase* e = find(id);
    if (!e) throw std::runtime_error("subset: unknown case " + id);
    out.push_back(e);
  }
  return out;
}

EncodedDataset encode_dataset(const data::DatasetIndex& index,
                              const data::SplitAssignment& split,
                              int resample_points,
                              const std::filesystem::path& cache_dir,
                              std::ostream* log) {
  EncodedDataset out;
  out.split = split;
  std::vector<std::string> all_ids;
  for (const auto* ids : {&split.train_ids, &split.val_ids, &split.test_ids}) {
    all_ids.insert(all_ids.end(), ids->begin(), ids->end());
  }
  if (!cache_dir.empty()) std::filesystem::create_directories(cache_dir);

  std::size_t done = 0;
  for (const std::string& id : all_ids) {
    const std::filesystem::path cache_file =
        cache_dir.empty() ? std::filesystem::path{} : cache_dir / (id + ".json");
    bool loaded = false;
    if (!cache_file.empty() && std::filesystem::exists(cache_file)) {
      std::ifstream in(cache_file);
      json j;
      in >> j;
      diff::EncodedCase e;
      double iv = 0.0, tv = 0.0;
      if (encoded_case_from_json(j, e, iv, tv)) {
        out.cases.push_back(std::move(e));
        out.init_volumes.push_back(iv);
        out.truth_volumes.push_back(tv);
        loaded = true;
      }
    }
    if (!loaded) {
      const data::WingCase c = data::load_case(index, id);
      diff::EncodedCase e = diff::encode_case(c, resample_points);
      const double iv = geom::wing_volume(c.initial);
      const double tv = geom::wing_volume(c.optimized);
      if (!cache_file.empty()) {
        std::ofstream cache_out(cache_file);
        cache_out << encoded_case_to_json(e, iv, tv).dump() << '\n';
      }
      out.cases.push_back(std::move(e));
      out.init_volumes.push_back(iv);
      out.truth_volumes.push_back(tv);
    }
    ++done;
    if (log && done % 16 == 0) {
      *log << "encoded " << done << "/" << all_ids.size() << " cases\n";
    }
  }
  return out;
}

TrainResult train_model(const EncodedDataset& encoded, const TrainingConfig& cfg,
                        const std::filesystem::path& out_dir,
                        std::ostream* log,
                        const std::filesystem::path& resume) {
  std::filesystem::create_directories(out_dir);
  const diff::ScheduleSet scheds = diff::default_schedules(cfg.n_t);

  diff::Normalizer norm;
  std::unique_ptr<diff::UNetDenoiser> model;
  int epoch0 = 0;
  if (!resume.empty()) {
    diff::LoadedCheckpoint ck = diff::load_checkpoint(resume);
    norm = ck.normalizer;
    model = std::move(ck.model);
    epoch0 = ck.meta.epoch;
  } else {
    norm = fit_normalizer(encoded, encoded.split.train_ids);
    model = std::make_unique<diff::UNetDenoiser>(cfg.net_config(), cfg.seed);
  }

  const std::vector<diff::TrainItem> items =
      make_items(encoded, encoded.split.train_ids, norm);
  if (items.empty()) throw std::runtime_error("train_model: empty training split");

  nn::Adam adam(cfg.lr);
  Rng root(cfg.seed, Rng::hash_key("train"));
  TrainResult result;

  const auto t_start = std::chrono::steady_clock::now();
  int epoch = epoch0;
  for (; epoch < epoch0 + cfg.epochs; ++epoch) {
    // Linear decay to a tenth of the base rate across the run.
    double progress = static_cast<double>(epoch - epoch0) / cfg.epochs;
    if (cfg.max_seconds > 0.0) {
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
              .count();
      progress = std::max(progress, elapsed / cfg.max_seconds);
    }
    adam.set_lr(cfg.lr * (1.0 - 0.9 * std::min(1.0, progress)));
    Rng epoch_rng = root.fork(static_cast<std::uint64_t>(epoch));
    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    epoch_rng.shuffle(order);

    double epoch_loss = 0.0;
    int steps = 0;
    for (std::size_t off = 0; off < order.size();
         off += static_cast<std::size_t>(cfg.batch_size)) {
      std::vector<diff::TrainItem> batch;
      for (std::size_t i = off;
           i < std::min(order.size(), off + static_cast<std::size_t>(cfg.batch_size));
           ++i) {
        batch.push_back(items[order[i]]);
      }
      epoch_loss += diff::training_step(*model, adam, scheds, batch, cfg.weights,
                                        epoch_rng);
      ++steps;
    }
    result.loss_curve.push_back(epoch_loss / std::max(steps, 1));

    if (log && (epoch - epoch0) % std::max(1, cfg.epochs / 20) == 0) {
      *log << "epoch " << epoch << " loss " << result.loss_curve.back() << '\n';
    }
    if (cfg.max_seconds > 0.0) {
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
              .count();
      if (elapsed > cfg.max_seconds) {
        ++epoch;
        break;
      }
    }
  }
  result.epochs_completed = epoch - epoch0;

  diff::CheckpointMeta meta;
  meta.net_cfg = model->net().config();
  meta.n_t = cfg.n_t;
  meta.weights = cfg.weights;
  meta.seed = cfg.seed;
  meta.epoch = epoch;
  meta.preset = cfg.preset;
  result.checkpoint_path = out_dir / "model.owckpt";
  diff::save_checkpoint(result.checkpoint_path, *model, meta, norm, scheds);

  std::ofstream curve(out_dir / "loss_curve.csv");
  curve << "epoch,loss\n";
  for (std::size_t i = 0; i < result.loss_curve.size(); ++i) {
    curve << (epoch0 + static_cast<int>(i)) << ',' << result.loss_curve[i] << '\n';
  }
  return result;
}

std::vector<Generated> generate_batch(const diff::LoadedCheckpoint& ck,
                                      const std::vector<diff::Conditioning>& conds,
                                      std::uint64_t seed) {
  std::vector<Generated> out(conds.size());
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng stream(seed, condition_key(conds[i]));
      const Eigen::VectorXd cond_vec = ck.normalizer.conditioning_vector(conds[i]);
      const diff::DesignState normed =
          diff::sample(cond_vec, *ck.model, ck.schedules, stream);
      Generated g;
      g.state = ck.normalizer.denormalize(normed);
      auto [wing, alpha] = diff::assemble_wing(g.state);
      g.wing = std::move(wing);
      g.alpha = alpha;
      out[i] = std::move(g);
    }
  };
  if (conds.size() >= 2) {
    const std::size_t mid = conds.size() / 2;
    std::thread worker([&] { run(mid, conds.size()); });
    run(0, mid);
    worker.join();
  } else {
    run(0, conds.size());
  }
  return out;
}

std::vector<metrics::Feature> slice_features(const diff::DesignState& physical,
                                             int n_chord, int decode_points) {
  const auto [wing, alpha] = diff::assemble_wing(physical, decode_points);
  (void)alpha;
  const std::vector<double> stations = geom::cosine_stations(n_chord);
  std::vector<metrics::Feature> out;
  out.reserve(wing.slices.size());
  for (const geom::Section& raw : wing.slices) {
    geom::Section s = raw;
    if (!s.coords.empty()) s.coords.back() = s.coords.front();  // close decoded loop
    const geom::SurfaceSamples ss = geom::sample_surfaces(s, stations);
    metrics::Feature f;
    f.reserve(2 * static_cast<std::size_t>(n_chord));
    f.insert(f.end(), ss.y_upper.begin(), ss.y_upper.end());
    f.insert(f.end(), ss.y_lower.begin(), ss.y_lower.end());
    out.push_back(std::move(f));
  }
  return out;
}

EvalResult evaluate_split(const diff::LoadedCheckpoint& ck,
                          const EncodedDataset& encoded,
                          const std::vector<std::string>& split_ids,
                          const EvalOptions& opts) {
  if (split_ids.empty()) throw std::invalid_argument("evaluate_split: empty split");
  const auto truth_cases = encoded.subset(split_ids);
  const std::size_t n_cases = truth_cases.size();

  // Truth features, volumes and alphas (fixed across passes).
  std::vector<std::vector<metrics::Feature>> truth_by_slice(
      diff::kSlices, std::vector<metrics::Feature>(n_cases));
  std::vector<double> truth_alpha_n(n_cases);
  std::vector<double> init_volumes(n_cases);
  std::vector<double> vmins(n_cases);
  for (std::size_t i = 0; i < n_cases; ++i) {
    const auto feats = slice_features(truth_cases[i]->state, opts.n_chord);
    for (int k = 0; k < diff::kSlices; ++k) {
      truth_by_slice[static_cast<std::size_t>(k)][i] = feats[static_cast<std::size_t>(k)];
    }
    truth_alpha_n[i] = truth_cases[i]->state.alpha / ck.normalizer.alpha_scale;
    init_volumes[i] = encoded.init_volume(truth_cases[i]->case_id);
    vmins[i] = truth_cases[i]->vmin_frac;
  }

  double truth_vendi = 0.0;
  {
    std::vector<double> per_slice;
    for (int k = 0; k < diff::kSlices; ++k) {
      per_slice.push_back(
          metrics::vendi_avg(truth_by_slice[static_cast<std::size_t>(k)], opts.kernel));
    }
    truth_vendi = std::accumulate(per_slice.begin(), per_slice.end(), 0.0) /
                  static_cast<double>(per_slice.size());
  }

  std::vector<double> pass_mse_shape, pass_mmd_shape, pass_mse_alpha,
      pass_mmd_alpha, pass_vendi, pass_vendi_norm, pass_vol;
  std::vector<double> mse_profile_acc(diff::kSlices, 0.0);
  std::vector<double> mmd_profile_acc(diff::kSlices, 0.0);
  std::vector<double> vendi_profile_acc(diff::kSlices, 0.0);
  std::vector<double> case_shape_err(n_cases, 0.0);
  std::vector<double> case_alpha_err(n_cases, 0.0);

  for (int pass = 0; pass < opts.passes; ++pass) {
    const std::uint64_t pass_seed =
        Rng(opts.seed, Rng::hash_key("eval-pass")).fork(static_cast<std::uint64_t>(pass)).next_u64();
    std::vector<diff::Conditioning> conds;
    conds.reserve(n_cases);
    for (const auto* e : truth_cases) conds.push_back(e->cond);
    const std::vector<Generated> gens = generate_batch(ck, conds, pass_seed);

    std::vector<std::vector<metrics::Feature>> gen_by_slice(
        diff::kSlices, std::vector<metrics::Feature>(n_cases));
    std::vector<double> gen_alpha_n(n_cases);
    std::vector<double> gen_volumes(n_cases);
    for (std::size_t i = 0; i < n_cases; ++i) {
      const auto feats = slice_features(gens[i].state, opts.n_chord);
      for (int k = 0; k < diff::kSlices; ++k) {
        gen_by_slice[static_cast<std::size_t>(k)][i] = feats[static_cast<std::size_t>(k)];
      }
      gen_alpha_n[i] = gens[i].alpha / ck.normalizer.alpha_scale;
      geom::WingGeometry closed = gens[i].wing;
      for (auto& s : closed.slices) {
        if (!s.coords.empty()) s.coords.back() = s.coords.front();
      }
      gen_volumes[i] = geom::wing_volume(closed);
      case_alpha_err[i] +=
          std::pow((gens[i].alpha - truth_cases[i]->state.alpha), 2.0);
    }

    const metrics::SpanwiseResult mse_sw = metrics::spanwise_average(
        [](const metrics::FeatureSet& g, const metrics::FeatureSet& t) {
          return metrics::mse_set(t, g);
        },
        gen_by_slice, truth_by_slice);
    const metrics::SpanwiseResult mmd_sw = metrics::spanwise_average(
        [&](const metrics::FeatureSet& g, const metrics::FeatureSet& t) {
          return metrics::mmd_avg(g, t, opts.kernel);
        },
        gen_by_slice, truth_by_slice);

    std::vector<double> vendi_profile;
    for (int k = 0; k < diff::kSlices; ++k) {
      vendi_profile.push_back(
          metrics::vendi_avg(gen_by_slice[static_cast<std::size_t>(k)], opts.kernel));
    }
    const double vendi_sw =
        std::accumulate(vendi_profile.begin(), vendi_profile.end(), 0.0) /
        static_cast<double>(vendi_profile.size());

    // Alpha metrics on the [0, 1]-scaled values.
    double alpha_se = 0.0;
    metrics::FeatureSet gen_alpha_set, truth_alpha_set;
    for (std::size_t i = 0; i < n_cases; ++i) {
      const double d = gen_alpha_n[i] - truth_alpha_n[i];
      alpha_se += d * d * ck.normalizer.alpha_scale * ck.normalizer.alpha_scale;
      gen_alpha_set.push_back({gen_alpha_n[i]});
      truth_alpha_set.push_back({truth_alpha_n[i]});
    }

    // Per-case shape error for the correlation diagnostics.
    for (std::size_t i = 0; i < n_cases; ++i) {
      double acc = 0.0;
      for (int k = 0; k < diff::kSlices; ++k) {
        acc += metrics::mse(truth_by_slice[static_cast<std::size_t>(k)][i],
                            gen_by_slice[static_cast<std::size_t>(k)][i]);
      }
      case_shape_err[i] += acc / diff::kSlices;
    }

    pass_mse_shape.push_back(mse_sw.average);
    pass_mmd_shape.push_back(mmd_sw.average);
    pass_mse_alpha.push_back(alpha_se / static_cast<double>(n_cases));
    pass_mmd_alpha.push_back(metrics::mmd_avg(gen_alpha_set, truth_alpha_set, opts.kernel));
    pass_vendi.push_back(vendi_sw);
    pass_vendi_norm.push_back(vendi_sw / truth_vendi);
    pass_vol.push_back(metrics::volume_satisfaction(gen_volumes, init_volumes, vmins));
    for (int k = 0; k < diff::kSlices; ++k) {
      const auto ki = static_cast<std::size_t>(k);
      mse_profile_acc[ki] += mse_sw.profile[ki];
      mmd_profile_acc[ki] += mmd_sw.profile[ki];
      vendi_profile_acc[ki] += vendi_profile[ki];
    }
  }

  EvalResult out;
  out.report.passes = opts.passes;
  out.report.mse_shape = metrics::stat_of(pass_mse_shape);
  out.report.mmd_shape_spanwise_avg = metrics::stat_of(pass_mmd_shape);
  out.report.mse_alpha = metrics::stat_of(pass_mse_alpha);
  out.report.mmd_alpha = metrics::stat_of(pass_mmd_alpha);
  out.report.vendi_spanwise_avg = metrics::stat_of(pass_vendi);
  out.report.vendi_normalized = metrics::stat_of(pass_vendi_norm);
  out.report.vol_constraint_pct = metrics::stat_of(pass_vol);
  for (int k = 0; k < diff::kSlices; ++k) {
    const auto ki = static_cast<std::size_t>(k);
    out.report.shape_mse_profile.push_back(mse_profile_acc[ki] / opts.passes);
    out.report.shape_mmd_profile.push_back(mmd_profile_acc[ki] / opts.passes);
    out.report.vendi_profile.push_back(vendi_profile_acc[ki] / opts.passes);
  }

  // Spearman diagnostics on per-case mean errors vs inputs.
  if (n_cases >= 3) {
    for (double& v : case_shape_err) v /= opts.passes;
    for (double& v : case_alpha_err) v /= opts.passes;
    const std::vector<std::pair<std::string, std::vector<double>>> inputs = [&] {
      std::vector<double> mach, re, cl, vmin;
      for (const auto* e : truth_cases) {
        mach.push_back(e->cond.condition.mach);
        re.push_back(e->cond.condition.reynolds);
        cl.push_back(e->cond.condition.cl_con);
        vmin.push_back(e->cond.condition.vmin_frac);
      }
      return std::vector<std::pair<std::string, std::vector<double>>>{
          {"mach", mach}, {"reynolds", re}, {"cl_con", cl}, {"vmin_frac", vmin}};
    }();
    for (const auto& [name, values] : inputs) {
      out.correlations.push_back(
          {name, "mse_shape", metrics::spearman(values, case_shape_err)});
      out.correlations.push_back(
          {name, "mse_alpha", metrics::spearman(values, case_alpha_err)});
    }
  }
  return out;
}

std::map<std::string, analysis::AblationCurve> run_wing_ablation(
    const EncodedDataset& encoded, const std::vector<int>& sizes, int repeats,
    int passes, const TrainingConfig& cfg, const std::filesystem::path& work_dir,
    std::ostream* log) {
  std::filesystem::create_directories(work_dir);

  // Keyed checkpoints produced by the train function, consumed by eval.
  auto train_fn = [&](const std::vector<std::string>& ids, int repeat) {
    EncodedDataset sub = encoded;
    sub.split.train_ids = ids;
    TrainingConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(repeat) * 7919 +
             static_cast<std::uint64_t>(ids.size());
    const std::filesystem::path dir =
        work_dir / ("n" + std::to_string(ids.size()) + "_r" + std::to_string(repeat));
    const TrainResult r = train_model(sub, c, dir, log);
    return r.checkpoint_path.string();
  };
  auto eval_fn = [&](const std::string& ck_path, int pass) {
    const diff::LoadedCheckpoint ck = diff::load_checkpoint(ck_path);
    EvalOptions opts;
    opts.passes = 1;
    opts.seed = 1234 + static_cast<std::uint64_t>(pass);
    const EvalResult r = evaluate_split(ck, encoded, encoded.split.test_ids, opts);
    return std::map<std::string, double>{
        {"mse_shape", r.report.mse_shape.mean},
        {"mmd_shape", r.report.mmd_shape_spanwise_avg.mean},
        {"mse_alpha", r.report.mse_alpha.mean},
        {"vendi_normalized", r.report.vendi_normalized.mean},
        {"vol_pct", r.report.vol_constraint_pct.mean}};
  };
  return analysis::run_ablation(encoded.split.train_ids, sizes, repeats, passes,
                                train_fn, eval_fn, cfg.seed);
}

void write_report_json(const std::filesystem::path& path, const EvalResult& r) {
  json j;
  auto stat = [](const metrics::Stat& s) {
    return json{{"mean", s.mean}, {"std", s.stddev}};
  };
  j["mse_shape"] = stat(r.report.mse_shape);
  j["mmd_shape_spanwise_avg"] = stat(r.report.mmd_shape_spanwise_avg);
  j["mse_alpha"] = stat(r.report.mse_alpha);
  j["mmd_alpha"] = stat(r.report.mmd_alpha);
  j["vendi_spanwise_avg"] = stat(r.report.vendi_spanwise_avg);
  j["vendi_normalized"] = stat(r.report.vendi_normalized);
  j["vol_constraint_pct"] = stat(r.report.vol_constraint_pct);
  j["passes"] = r.report.passes;
  j["correlations"] = json::array();
  for (const auto& c : r.correlations) {
    j["correlations"].push_back({{"input", c.input_name},
                                 {"error", c.error_name},
                                 {"rho", c.result.defined ? c.result.rho : 0.0},
                                 {"p_value", c.result.defined ? c.result.p_value : 1.0},
                                 {"defined", c.result.defined}});
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << j.dump(1) << '\n';
}

void write_profiles_csv(const std::filesystem::path& path,
                        const metrics::MetricReport& r) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << "slice,mse_shape,mmd_shape,vendi\n";
  for (std::size_t k = 0; k < r.shape_mse_profile.size(); ++k) {
    out << k << ',' << r.shape_mse_profile[k] << ',' << r.shape_mmd_profile[k]
        << ',' << r.vendi_profile[k] << '\n';
  }
}

}  // namespace optiwing::pipeline
