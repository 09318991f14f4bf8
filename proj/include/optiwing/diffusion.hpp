#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "optiwing/bezier.hpp"
#include "optiwing/dataset.hpp"
#include "optiwing/flow.hpp"
#include "optiwing/nn.hpp"
#include "optiwing/rng.hpp"

namespace optiwing::diff {

constexpr int kSlices = 9;
constexpr int kLatentDim = bezier::kLatentSize;  // 90

enum class Head { shape, alpha, eta };

/// Linear variance schedule with precomputed cumulative products.
struct DiffusionSchedule {
  std::vector<double> betas;
  std::vector<double> alphas;      // 1 - beta_t
  std::vector<double> alpha_bars;  // cumulative products
  double beta_start = 0.0;
  double beta_end = 0.0;
  int n_t = 0;
};

/// Per-head schedule defaults: beta_end 0.02 everywhere; beta_start 1e-6 for
/// the shape head (small shape detail survives longer), 1e-4 for alpha and
/// eta.
DiffusionSchedule make_schedule(Head head, int n_t = 1000);
DiffusionSchedule make_schedule(double beta_start, double beta_end, int n_t);

struct ScheduleSet {
  DiffusionSchedule shape;
  DiffusionSchedule alpha;
  DiffusionSchedule eta;

  std::uint64_t hash() const;
};
ScheduleSet default_schedules(int n_t = 1000);

/// The diffusion state: per-slice section latents, spanwise offsets and the
/// angle of attack. Whether values are physical or normalized depends on
/// context (training and sampling run normalized; assembly runs physical).
struct DesignState {
  Eigen::MatrixXd z_w{kLatentDim, kSlices};  // latent dim x slice
  Eigen::VectorXd eta_y{kSlices};
  double alpha = 0.0;

  static DesignState zero();
};

struct Conditioning {
  flow::FlowCondition condition;
  bezier::BezierLatent z_a0;  // encoded initial section
};

struct DenoiserOutput {
  Eigen::MatrixXd eps_shape{kLatentDim, kSlices};
  Eigen::VectorXd eps_eta{kSlices};
  double eps_alpha = 0.0;
};

/// Noise-prediction model interface; deterministic given parameters and
/// inputs. cond_vec is the normalized conditioning vector.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual DenoiserOutput predict(const DesignState& noised, int t,
                                 const Eigen::VectorXd& cond_vec) const = 0;
};

/// Per-dimension standardization fitted on the training split. Alpha maps
/// [0, 10] degrees to [0, 1]; conditions map to [-1, 1] over the sampled
/// parameter bounds.
struct Normalizer {
  Eigen::MatrixXd shape_mean{kLatentDim, kSlices};
  Eigen::MatrixXd shape_std{kLatentDim, kSlices};
  Eigen::VectorXd eta_mean{kSlices};
  Eigen::VectorXd eta_std{kSlices};
  Eigen::VectorXd a0_mean{kLatentDim};
  Eigen::VectorXd a0_std{kLatentDim};
  double alpha_scale = 10.0;

  DesignState normalize(const DesignState& physical) const;
  DesignState denormalize(const DesignState& normalized) const;
  Eigen::VectorXd conditioning_vector(const Conditioning& c) const;  // 4 + 90

  static Normalizer fit(const std::vector<DesignState>& physical_states,
                        const std::vector<Conditioning>& conds);
};

/// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps, per head with that
/// head's schedule; one t for all heads. Returns (x_t, eps).
struct NoisedState {
  DesignState x_t;
  DesignState eps;
};
NoisedState forward_noise(const DesignState& x0, int t, const ScheduleSet& s,
                          Rng& rng);

/// Posterior mean given the true (or predicted) noise:
/// mu = (x_t - beta_t / sqrt(1 - alpha_bar_t) * eps) / sqrt(alpha_t).
DesignState posterior_mean(const DesignState& x_t, const DesignState& eps,
                           int t, const ScheduleSet& s);

struct LossWeights {
  double shape = 500.0;
  double alpha = 1.0;
  double eta = 9.0;
};

struct TrainItem {
  DesignState x0;  // normalized
  Eigen::VectorXd cond_vec;
};

/// The UNet-backed denoiser: state packs into a (92 x 9) activation (90
/// latent channels, one eta channel, one broadcast alpha channel).
class UNetDenoiser : public Denoiser {
 public:
  UNetDenoiser(const nn::UNetConfig& cfg, std::uint64_t seed);

  DenoiserOutput predict(const DesignState& noised, int t,
                         const Eigen::VectorXd& cond_vec) const override;

  nn::UNet& net() { return *net_; }
  const nn::UNet& net() const { return *net_; }

  /// Parameter-synchronized twin used to halve training wall time on a
  /// second core; created on first use.
  nn::UNet& shadow_net();
  void sync_shadow();

  static nn::Mat pack(const DesignState& s);
  static DenoiserOutput unpack(const nn::Mat& out);

 private:
  std::unique_ptr<nn::UNet> net_;
  std::unique_ptr<nn::UNet> shadow_;
};

/// One optimizer step over a batch: weighted epsilon-prediction MSE
/// (shape : alpha : eta = 500 : 1 : 9 by default), gradients through the
/// network, Adam update. Returns the batch loss. Throws on a non-finite
/// loss.
double training_step(UNetDenoiser& model, nn::Adam& adam, const ScheduleSet& s,
                     const std::vector<TrainItem>& batch, const LossWeights& w,
                     Rng& rng);

/// Loss only (no update); used by oracle tests.
double training_loss(const Denoiser& model, const ScheduleSet& s,
                     const std::vector<TrainItem>& batch, const LossWeights& w,
                     Rng& rng);

/// Loss over externally noised items (no sampling inside); a denoiser that
/// returns each item's true eps scores exactly zero.
struct NoisedItem {
  DesignState x_t;
  DesignState eps;
  int t = 0;
  Eigen::VectorXd cond_vec;
};
double training_loss_prenoised(const Denoiser& model,
                               const std::vector<NoisedItem>& items,
                               const LossWeights& w);

/// Ancestral DDPM sampling over the full schedule, sigma_t^2 = beta_t, in
/// normalized space. The posterior mean is formed through the implied clean
/// state, clamped to +-5 normalized units per element (inactive for a
/// well-trained denoiser, keeps weak ones finite). Deterministic for a
/// fixed rng stream.
DesignState sample(const Eigen::VectorXd& cond_vec, const Denoiser& model,
                   const ScheduleSet& s, Rng& rng);

/// Decodes the 9 slice latents, applies the spanwise offsets, and attaches
/// linearly spaced span stations over [0, half_span].
std::pair<geom::WingGeometry, double> assemble_wing(const DesignState& physical,
                                                    int n_points = 161,
                                                    double half_span = 2.5);

/// Dataset case -> physical design state + conditioning. The dihedral offset
/// of each optimized slice is read from its trailing edge relative to the
/// initial slice, and removed before encoding.
struct EncodedCase {
  std::string case_id;
  DesignState state;  // physical
  Conditioning cond;
  std::vector<double> fit_mse;  // per optimized slice
  double vmin_frac = 0.0;
};
EncodedCase encode_case(const data::WingCase& c, int resample_points = 161,
                        const bezier::FitOptions& opts = {});

/// Model checkpoint: versioned binary blob with an embedded hyperparameter
/// manifest; loading validates the schedule hash.
struct CheckpointMeta {
  nn::UNetConfig net_cfg;
  int n_t = 1000;
  LossWeights weights;
  std::uint64_t seed = 0;
  int epoch = 0;
  std::string preset = "desk";
};

void save_checkpoint(const std::filesystem::path& path, const UNetDenoiser& model,
                     const CheckpointMeta& meta, const Normalizer& norm,
                     const ScheduleSet& scheds);

struct LoadedCheckpoint {
  std::unique_ptr<UNetDenoiser> model;
  CheckpointMeta meta;
  Normalizer normalizer;
  ScheduleSet schedules;
};
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace optiwing::diff
