#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "optiwing/analysis.hpp"
#include "optiwing/dataset.hpp"
#include "optiwing/diffusion.hpp"
#include "optiwing/metrics.hpp"

namespace optiwing::pipeline {

struct TrainingConfig {
  std::string preset = "desk";  // desk | paper
  int n_t = 1000;
  diff::LossWeights weights;
  double lr = 1e-4;
  int batch_size = 64;
  int epochs = 2000;
  std::uint64_t seed = 7;
  int resample_points = 161;
  double max_seconds = 0.0;  // 0 = epoch-bound (reproducible)

  nn::UNetConfig net_config() const;
};

struct EncodedDataset {
  std::vector<diff::EncodedCase> cases;
  std::vector<double> init_volumes;   // aligned with cases
  std::vector<double> truth_volumes;  // optimized geometry volumes
  data::SplitAssignment split;

  const diff::EncodedCase* find(const std::string& case_id) const;
  double init_volume(const std::string& case_id) const;
  std::vector<const diff::EncodedCase*> subset(
      const std::vector<std::string>& ids) const;
};

/// Encodes every case named by the split through the Bezier codec. Results
/// are cached per case under cache_dir (when given) so repeated runs skip
/// refitting.
EncodedDataset encode_dataset(const data::DatasetIndex& index,
                              const data::SplitAssignment& split,
                              int resample_points = 161,
                              const std::filesystem::path& cache_dir = {},
                              std::ostream* log = nullptr);

struct TrainResult {
  std::filesystem::path checkpoint_path;
  std::vector<double> loss_curve;  // mean loss per epoch
  int epochs_completed = 0;
};

/// Trains the conditional latent diffusion model on the dataset's training
/// split and writes a checkpoint plus a loss-curve CSV under out_dir.
/// `resume` continues from an existing checkpoint (epoch counter included).
TrainResult train_model(const EncodedDataset& encoded, const TrainingConfig& cfg,
                        const std::filesystem::path& out_dir,
                        std::ostream* log = nullptr,
                        const std::filesystem::path& resume = {});

struct Generated {
  diff::DesignState state;  // physical
  geom::WingGeometry wing;
  double alpha = 0.0;
};

/// Samples one design per conditioning row. Noise streams are keyed by the
/// condition content, so permuting the batch permutes the outputs.
std::vector<Generated> generate_batch(const diff::LoadedCheckpoint& ck,
                                      const std::vector<diff::Conditioning>& conds,
                                      std::uint64_t seed);

struct EvalOptions {
  int passes = 10;
  metrics::KernelConfig kernel;
  int n_chord = 100;
  std::uint64_t seed = 99;
};

struct CorrelationEntry {
  std::string input_name;
  std::string error_name;
  metrics::SpearmanResult result;
};

struct EvalResult {
  metrics::MetricReport report;
  std::vector<CorrelationEntry> correlations;
};

/// Table-5 style evaluation: repeated sampling passes over one split,
/// spanwise-averaged metrics with mean and standard deviation across passes.
EvalResult evaluate_split(const diff::LoadedCheckpoint& ck,
                          const EncodedDataset& encoded,
                          const std::vector<std::string>& split_ids,
                          const EvalOptions& opts);

/// Per-slice surface features (upper then lower y at cosine chord stations)
/// of an assembled design state.
std::vector<metrics::Feature> slice_features(const diff::DesignState& physical,
                                             int n_chord = 100,
                                             int decode_points = 161);

/// Data-size ablation over the encoded dataset's training split: trains
/// `repeats` models per size and evaluates each with `passes` passes on the
/// test split. Metrics: mse_shape, mmd_shape, mse_alpha, vendi_normalized,
/// vol_pct.
std::map<std::string, analysis::AblationCurve> run_wing_ablation(
    const EncodedDataset& encoded, const std::vector<int>& sizes, int repeats,
    int passes, const TrainingConfig& cfg, const std::filesystem::path& work_dir,
    std::ostream* log = nullptr);

void write_report_json(const std::filesystem::path& path, const EvalResult& r);
void write_profiles_csv(const std::filesystem::path& path,
                        const metrics::MetricReport& r);

}  // namespace optiwing::pipeline
