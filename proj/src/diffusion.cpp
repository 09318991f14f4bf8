#include "optiwing/diffusion.hpp"

#include <cmath>
#include <fstream>
#include <type_traits>
#include <cstring>
#include <thread>
#include <stdexcept>

#include "json.hpp"

namespace optiwing::diff {

namespace {

constexpr double kStdFloor = 1e-8;

void fill_normal(Eigen::MatrixXd& m, Rng& rng) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.normal();
  }
}

void fill_normal(Eigen::VectorXd& v, Rng& rng) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

void check_t(int t, const ScheduleSet& s) {
  if (t < 0 || t >= s.shape.n_t) {
    throw std::invalid_argument("timestep out of range");
  }
}

}  // namespace

DiffusionSchedule make_schedule(double beta_start, double beta_end, int n_t) {
  if (n_t < 1) throw std::invalid_argument("make_schedule: n_t must be >= 1");
  if (beta_start >= beta_end) {
    throw std::invalid_argument("make_schedule: beta_start must be < beta_end");
  }
  DiffusionSchedule s;
  s.beta_start = beta_start;
  s.beta_end = beta_end;
  s.n_t = n_t;
  s.betas.resize(static_cast<std::size_t>(n_t));
  s.alphas.resize(static_cast<std::size_t>(n_t));
  s.alpha_bars.resize(static_cast<std::size_t>(n_t));
  double bar = 1.0;
  for (int t = 0; t < n_t; ++t) {
    const double beta =
        n_t == 1 ? beta_start
                 : beta_start + (beta_end - beta_start) * t / static_cast<double>(n_t - 1);
    const auto i = static_cast<std::size_t>(t);
    s.betas[i] = beta;
    s.alphas[i] = 1.0 - beta;
    bar *= s.alphas[i];
    s.alpha_bars[i] = bar;
  }
  return s;
}

DiffusionSchedule make_schedule(Head head, int n_t) {
  const double beta_start = head == Head::shape ? 1e-6 : 1e-4;
  return make_schedule(beta_start, 0.02, n_t);
}

ScheduleSet default_schedules(int n_t) {
  return ScheduleSet{make_schedule(Head::shape, n_t), make_schedule(Head::alpha, n_t),
                     make_schedule(Head::eta, n_t)};
}

std::uint64_t ScheduleSet::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (const DiffusionSchedule* s : {&shape, &alpha, &eta}) {
    h = fnv1a(h, s->betas.data(), s->betas.size() * sizeof(double));
  }
  return h;
}

DesignState DesignState::zero() {
  DesignState s;
  s.z_w.setZero();
  s.eta_y.setZero();
  s.alpha = 0.0;
  return s;
}

DesignState Normalizer::normalize(const DesignState& physical) const {
  DesignState out;
  out.z_w = (physical.z_w - shape_mean).cwiseQuotient(shape_std);
  out.eta_y = (physical.eta_y - eta_mean).cwiseQuotient(eta_std);
  out.alpha = physical.alpha / alpha_scale;
  return out;
}

DesignState Normalizer::denormalize(const DesignState& normalized) const {
  DesignState out;
  out.z_w = normalized.z_w.cwiseProduct(shape_std) + shape_mean;
  out.eta_y = normalized.eta_y.cwiseProduct(eta_std) + eta_mean;
  out.alpha = normalized.alpha * alpha_scale;
  return out;
}

Eigen::VectorXd Normalizer::conditioning_vector(const Conditioning& c) const {
  Eigen::VectorXd v(4 + kLatentDim);
  const flow::ParameterBounds b;
  auto scale = [](double x, double lo, double hi) {
    return (2.0 * x - (hi + lo)) / (hi - lo);
  };
  v(0) = scale(c.condition.mach, b.mach.lower, b.mach.upper);
  v(1) = scale(c.condition.reynolds, b.reynolds.lower, b.reynolds.upper);
  v(2) = scale(c.condition.cl_con, b.cl_con.lower, b.cl_con.upper);
  v(3) = scale(c.condition.vmin_frac, b.vmin_frac.lower, b.vmin_frac.upper);
  const auto flat = c.z_a0.to_flat();
  for (int i = 0; i < kLatentDim; ++i) {
    v(4 + i) = (flat[static_cast<std::size_t>(i)] - a0_mean(i)) / a0_std(i);
  }
  return v;
}

Normalizer Normalizer::fit(const std::vector<DesignState>& physical_states,
                           const std::vector<Conditioning>& conds) {
  if (physical_states.empty() || conds.empty()) {
    throw std::invalid_argument("Normalizer::fit: empty training data");
  }
  Normalizer n;
  const auto count = static_cast<double>(physical_states.size());

  n.shape_mean.setZero();
  n.eta_mean.setZero();
  for (const DesignState& s : physical_states) {
    n.shape_mean += s.z_w;
    n.eta_mean += s.eta_y;
  }
  n.shape_mean /= count;
  n.eta_mean /= count;

  Eigen::MatrixXd shape_var = Eigen::MatrixXd::Zero(kLatentDim, kSlices);
  Eigen::VectorXd eta_var = Eigen::VectorXd::Zero(kSlices);
  for (const DesignState& s : physical_states) {
    shape_var += (s.z_w - n.shape_mean).cwiseAbs2();
    eta_var += (s.eta_y - n.eta_mean).cwiseAbs2();
  }
  n.shape_std = (shape_var / count).cwiseSqrt().cwiseMax(kStdFloor);
  n.eta_std = (eta_var / count).cwiseSqrt().cwiseMax(kStdFloor);

  n.a0_mean.setZero();
  for (const Conditioning& c : conds) {
    const auto flat = c.z_a0.to_flat();
    for (int i = 0; i < kLatentDim; ++i) n.a0_mean(i) += flat[static_cast<std::size_t>(i)];
  }
  n.a0_mean /= static_cast<double>(conds.size());
  Eigen::VectorXd a0_var = Eigen::VectorXd::Zero(kLatentDim);
  for (const Conditioning& c : conds) {
    const auto flat = c.z_a0.to_flat();
    for (int i = 0; i < kLatentDim; ++i) {
      const double d = flat[static_cast<std::size_t>(i)] - n.a0_mean(i);
      a0_var(i) += d * d;
    }
  }
  n.a0_std = (a0_var / static_cast<double>(conds.size())).cwiseSqrt().cwiseMax(kStdFloor);
  return n;
}

NoisedState forward_noise(const DesignState& x0, int t, const ScheduleSet& s,
                          Rng& rng) {
  check_t(t, s);
  NoisedState out;
  fill_normal(out.eps.z_w, rng);
  fill_normal(out.eps.eta_y, rng);
  out.eps.alpha = rng.normal();

  const auto i = static_cast<std::size_t>(t);
  const double sa_shape = std::sqrt(s.shape.alpha_bars[i]);
  const double sn_shape = std::sqrt(1.0 - s.shape.alpha_bars[i]);
  const double sa_alpha = std::sqrt(s.alpha.alpha_bars[i]);
  const double sn_alpha = std::sqrt(1.0 - s.alpha.alpha_bars[i]);
  const double sa_eta = std::sqrt(s.eta.alpha_bars[i]);
  const double sn_eta = std::sqrt(1.0 - s.eta.alpha_bars[i]);

  out.x_t.z_w = sa_shape * x0.z_w + sn_shape * out.eps.z_w;
  out.x_t.eta_y = sa_eta * x0.eta_y + sn_eta * out.eps.eta_y;
  out.x_t.alpha = sa_alpha * x0.alpha + sn_alpha * out.eps.alpha;
  return out;
}

DesignState posterior_mean(const DesignState& x_t, const DesignState& eps,
                           int t, const ScheduleSet& s) {
  check_t(t, s);
  const auto i = static_cast<std::size_t>(t);
  DesignState mu;
  mu.z_w = (x_t.z_w - (s.shape.betas[i] / std::sqrt(1.0 - s.shape.alpha_bars[i])) * eps.z_w) /
           std::sqrt(s.shape.alphas[i]);
  mu.eta_y = (x_t.eta_y - (s.eta.betas[i] / std::sqrt(1.0 - s.eta.alpha_bars[i])) * eps.eta_y) /
             std::sqrt(s.eta.alphas[i]);
  mu.alpha = (x_t.alpha - (s.alpha.betas[i] / std::sqrt(1.0 - s.alpha.alpha_bars[i])) * eps.alpha) /
             std::sqrt(s.alpha.alphas[i]);
  return mu;
}

UNetDenoiser::UNetDenoiser(const nn::UNetConfig& cfg, std::uint64_t seed)
    : net_(std::make_unique<nn::UNet>(cfg, seed)) {}

nn::UNet& UNetDenoiser::shadow_net() {
  if (!shadow_) {
    shadow_ = std::make_unique<nn::UNet>(net_->config(), 0);
    sync_shadow();
  }
  return *shadow_;
}

void UNetDenoiser::sync_shadow() {
  if (!shadow_) return;
  const auto src = net_->parameters();
  const auto dst = shadow_->parameters();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i]->value = src[i]->value;
  }
}

nn::Mat UNetDenoiser::pack(const DesignState& s) {
  nn::Mat x(kLatentDim + 2, kSlices);
  x.topRows(kLatentDim) = s.z_w;
  x.row(kLatentDim) = s.eta_y.transpose();
  x.row(kLatentDim + 1).setConstant(s.alpha);
  return x;
}

DenoiserOutput UNetDenoiser::unpack(const nn::Mat& out) {
  DenoiserOutput o;
  o.eps_shape = out.topRows(kLatentDim);
  o.eps_eta = out.row(kLatentDim).transpose();
  o.eps_alpha = out.row(kLatentDim + 1).mean();
  return o;
}

DenoiserOutput UNetDenoiser::predict(const DesignState& noised, int t,
                                     const Eigen::VectorXd& cond_vec) const {
  nn::UNetWorkspace* ws = net_->make_workspace();
  const nn::Mat out = net_->forward(pack(noised), t, cond_vec, *ws);
  net_->free_workspace(ws);
  return unpack(out);
}

namespace {

struct HeadErrors {
  double shape_se = 0.0;
  double eta_se = 0.0;
  double alpha_se = 0.0;
};

double weighted_loss(const HeadErrors& e, const LossWeights& w, std::size_t batch) {
  const double b = static_cast<double>(batch);
  const double mse_shape = e.shape_se / (kLatentDim * kSlices * b);
  const double mse_eta = e.eta_se / (kSlices * b);
  const double mse_alpha = e.alpha_se / b;
  return w.shape * mse_shape + w.alpha * mse_alpha + w.eta * mse_eta;
}

}  // namespace

namespace {

// Forward/backward over a slice of the pre-noised batch, accumulating into
// the given net's gradients.
HeadErrors run_span(nn::UNet& net, const std::vector<NoisedItem>& items,
                    std::size_t begin, std::size_t end, const LossWeights& w,
                    double batch_size) {
  HeadErrors errs;
  nn::UNetWorkspace* ws = net.make_workspace();
  for (std::size_t i = begin; i < end; ++i) {
    const NoisedItem& item = items[i];
    const nn::Mat out =
        net.forward(UNetDenoiser::pack(item.x_t), item.t, item.cond_vec, *ws);
    const DenoiserOutput pred = UNetDenoiser::unpack(out);

    const Eigen::MatrixXd dshape = pred.eps_shape - item.eps.z_w;
    const Eigen::VectorXd deta = pred.eps_eta - item.eps.eta_y;
    const double dalpha = pred.eps_alpha - item.eps.alpha;
    errs.shape_se += dshape.squaredNorm();
    errs.eta_se += deta.squaredNorm();
    errs.alpha_se += dalpha * dalpha;

    nn::Mat dout(kLatentDim + 2, kSlices);
    dout.topRows(kLatentDim) =
        (2.0 * w.shape / (kLatentDim * kSlices * batch_size)) * dshape;
    dout.row(kLatentDim) = (2.0 * w.eta / (kSlices * batch_size)) * deta.transpose();
    // The alpha prediction is the mean over positions.
    dout.row(kLatentDim + 1)
        .setConstant(2.0 * w.alpha / batch_size * dalpha / kSlices);
    net.backward(dout, *ws);
  }
  net.free_workspace(ws);
  return errs;
}

}  // namespace

double training_step(UNetDenoiser& model, nn::Adam& adam, const ScheduleSet& s,
                     const std::vector<TrainItem>& batch, const LossWeights& w,
                     Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("training_step: empty batch");
  nn::UNet& net = model.net();
  net.zero_grad();

  // Noise is drawn up front so results do not depend on thread scheduling.
  std::vector<NoisedItem> items;
  items.reserve(batch.size());
  for (const TrainItem& item : batch) {
    const int t =
        static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(s.shape.n_t)));
    NoisedState noised = forward_noise(item.x0, t, s, rng);
    items.push_back({std::move(noised.x_t), std::move(noised.eps), t, item.cond_vec});
  }

  const double b = static_cast<double>(batch.size());
  HeadErrors errs;
  if (batch.size() >= 8) {
    nn::UNet& twin = model.shadow_net();
    twin.zero_grad();
    const std::size_t mid = items.size() / 2;
    HeadErrors twin_errs;
    std::thread worker([&] { twin_errs = run_span(twin, items, mid, items.size(), w, b); });
    errs = run_span(net, items, 0, mid, w, b);
    worker.join();
    errs.shape_se += twin_errs.shape_se;
    errs.eta_se += twin_errs.eta_se;
    errs.alpha_se += twin_errs.alpha_se;
    const auto main_params = net.parameters();
    const auto twin_params = twin.parameters();
    for (std::size_t i = 0; i < main_params.size(); ++i) {
      main_params[i]->grad += twin_params[i]->grad;
    }
  } else {
    errs = run_span(net, items, 0, items.size(), w, b);
  }

  const double loss = weighted_loss(errs, w, batch.size());
  if (!std::isfinite(loss)) {
    throw std::runtime_error("training_step: non-finite loss");
  }
  adam.step(net.parameters());
  model.sync_shadow();
  return loss;
}

double training_loss(const Denoiser& model, const ScheduleSet& s,
                     const std::vector<TrainItem>& batch, const LossWeights& w,
                     Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("training_loss: empty batch");
  HeadErrors errs;
  for (const TrainItem& item : batch) {
    const int t = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(s.shape.n_t)));
    const NoisedState noised = forward_noise(item.x0, t, s, rng);
    const DenoiserOutput pred = model.predict(noised.x_t, t, item.cond_vec);
    errs.shape_se += (pred.eps_shape - noised.eps.z_w).squaredNorm();
    errs.eta_se += (pred.eps_eta - noised.eps.eta_y).squaredNorm();
    const double da = pred.eps_alpha - noised.eps.alpha;
    errs.alpha_se += da * da;
  }
  const double loss = weighted_loss(errs, w, batch.size());
  if (!std::isfinite(loss)) {
    throw std::runtime_error("training_loss: non-finite loss");
  }
  return loss;
}

double training_loss_prenoised(const Denoiser& model,
                               const std::vector<NoisedItem>& items,
                               const LossWeights& w) {
  if (items.empty()) throw std::invalid_argument("training_loss_prenoised: empty batch");
  HeadErrors errs;
  for (const NoisedItem& item : items) {
    const DenoiserOutput pred = model.predict(item.x_t, item.t, item.cond_vec);
    errs.shape_se += (pred.eps_shape - item.eps.z_w).squaredNorm();
    errs.eta_se += (pred.eps_eta - item.eps.eta_y).squaredNorm();
    const double da = pred.eps_alpha - item.eps.alpha;
    errs.alpha_se += da * da;
  }
  const double loss = weighted_loss(errs, w, items.size());
  if (!std::isfinite(loss)) {
    throw std::runtime_error("training_loss_prenoised: non-finite loss");
  }
  return loss;
}

namespace {

// Posterior-mean step computed through the implied clean-state estimate,
// which is clamped to a generous band in normalized units. Algebraically
// identical to the epsilon form when the clamp is inactive; with an
// imperfect denoiser it keeps the 1/sqrt(alpha_bar) amplification of early
// prediction errors from blowing up the trajectory.
constexpr double kX0Clip = 5.0;

template <typename T>
T clipped_posterior(const T& x_t, const T& eps, const DiffusionSchedule& s, int t) {
  const auto i = static_cast<std::size_t>(t);
  const double ab = s.alpha_bars[i];
  const double ab_prev = ab / s.alphas[i];
  T x0 = (x_t - std::sqrt(1.0 - ab) * eps) / std::sqrt(ab);
  if constexpr (std::is_same_v<T, double>) {
    x0 = std::clamp(x0, -kX0Clip, kX0Clip);
  } else {
    x0 = x0.cwiseMax(-kX0Clip).cwiseMin(kX0Clip);
  }
  const double c0 = std::sqrt(ab_prev) * s.betas[i] / (1.0 - ab);
  const double ct = std::sqrt(s.alphas[i]) * (1.0 - ab_prev) / (1.0 - ab);
  return c0 * x0 + ct * x_t;
}

}  // namespace

DesignState sample(const Eigen::VectorXd& cond_vec, const Denoiser& model,
                   const ScheduleSet& s, Rng& rng) {
  DesignState x;
  fill_normal(x.z_w, rng);
  fill_normal(x.eta_y, rng);
  x.alpha = rng.normal();

  for (int t = s.shape.n_t - 1; t >= 0; --t) {
    const DenoiserOutput pred = model.predict(x, t, cond_vec);
    DesignState mu;
    mu.z_w = clipped_posterior<Eigen::MatrixXd>(x.z_w, pred.eps_shape, s.shape, t);
    mu.eta_y = clipped_posterior<Eigen::VectorXd>(x.eta_y, pred.eps_eta, s.eta, t);
    mu.alpha = clipped_posterior<double>(x.alpha, pred.eps_alpha, s.alpha, t);
    if (!mu.z_w.allFinite() || !mu.eta_y.allFinite() || !std::isfinite(mu.alpha)) {
      throw std::runtime_error("sample: non-finite intermediate state");
    }
    if (t > 0) {
      const auto i = static_cast<std::size_t>(t);
      DesignState z;
      fill_normal(z.z_w, rng);
      fill_normal(z.eta_y, rng);
      z.alpha = rng.normal();
      mu.z_w += std::sqrt(s.shape.betas[i]) * z.z_w;
      mu.eta_y += std::sqrt(s.eta.betas[i]) * z.eta_y;
      mu.alpha += std::sqrt(s.alpha.betas[i]) * z.alpha;
    }
    x = std::move(mu);
  }
  return x;
}

std::pair<geom::WingGeometry, double> assemble_wing(const DesignState& physical,
                                                    int n_points,
                                                    double half_span) {
  geom::WingGeometry w;
  w.half_span = half_span;
  for (int k = 0; k < kSlices; ++k) {
    std::array<double, bezier::kLatentSize> flat{};
    for (int i = 0; i < kLatentDim; ++i) {
      flat[static_cast<std::size_t>(i)] = physical.z_w(i, k);
    }
    // The state carries log-weights; the codec wants positive weights.
    for (int i = 2 * bezier::kNumControl; i < kLatentDim; ++i) {
      flat[static_cast<std::size_t>(i)] =
          std::exp(std::clamp(flat[static_cast<std::size_t>(i)], -6.0, 6.0));
    }
    const bezier::BezierLatent latent = bezier::BezierLatent::from_flat(flat);
    geom::Section s = bezier::decode(latent, n_points);
    for (geom::Vec2& p : s.coords) p.y += physical.eta_y(k);
    w.slices.push_back(std::move(s));
    w.span_stations.push_back(half_span * k / static_cast<double>(kSlices - 1));
  }
  return {std::move(w), physical.alpha};
}

EncodedCase encode_case(const data::WingCase& c, int resample_points,
                        const bezier::FitOptions& opts) {
  if (c.optimized.slices.size() != static_cast<std::size_t>(kSlices)) {
    throw std::invalid_argument("encode_case: expected a 9-slice stack");
  }
  EncodedCase out;
  out.case_id = c.desc.case_id;
  out.cond.condition = c.desc.condition;
  out.vmin_frac = c.desc.condition.vmin_frac;
  out.state.alpha = c.desc.alpha_opt;

  // Initial-section latent for conditioning (root slice of the extrusion).
  const geom::Section init_root =
      geom::resample_section(c.initial.slices.front(), resample_points);
  out.cond.z_a0 = bezier::encode(init_root, opts).first;

  std::vector<geom::Section> unshifted(static_cast<std::size_t>(kSlices));
  for (int k = 0; k < kSlices; ++k) {
    const auto ki = static_cast<std::size_t>(k);
    const double eta = geom::trailing_edge_y(c.optimized.slices[ki]) -
                       geom::trailing_edge_y(c.initial.slices[ki]);
    out.state.eta_y(k) = eta;
    geom::Section s = c.optimized.slices[ki];
    for (geom::Vec2& p : s.coords) p.y -= eta;
    unshifted[ki] = geom::resample_section(s, resample_points);
  }
  const auto fits = bezier::encode_batch(unshifted, opts);
  out.fit_mse.reserve(static_cast<std::size_t>(kSlices));
  for (int k = 0; k < kSlices; ++k) {
    const auto& [latent, report] = fits[static_cast<std::size_t>(k)];
    const auto flat = latent.to_flat();
    for (int i = 0; i < kLatentDim; ++i) {
      // Weights enter the diffusion state in log space: errors there stay
      // multiplicative and the decoded curve cannot cross a zero or negative
      // denominator.
      const double v = flat[static_cast<std::size_t>(i)];
      out.state.z_w(i, k) = i < 2 * bezier::kNumControl ? v : std::log(v);
    }
    out.fit_mse.push_back(report.mse);
  }
  return out;
}

namespace {

using nlohmann::json;

constexpr char kCheckpointMagic[8] = {'O', 'W', 'C', 'K', 'P', 'T', '0', '1'};

json unet_cfg_to_json(const nn::UNetConfig& c) {
  return json{{"in_channels", c.in_channels}, {"length", c.length},
              {"w0", c.w0},                   {"w1", c.w1},
              {"w2", c.w2},                   {"cond_channels", c.cond_channels},
              {"temb_dim", c.temb_dim},       {"cond_inputs", c.cond_inputs}};
}

nn::UNetConfig unet_cfg_from_json(const json& j) {
  nn::UNetConfig c;
  c.in_channels = j.at("in_channels").get<int>();
  c.length = j.at("length").get<int>();
  c.w0 = j.at("w0").get<int>();
  c.w1 = j.at("w1").get<int>();
  c.w2 = j.at("w2").get<int>();
  c.cond_channels = j.at("cond_channels").get<int>();
  c.temb_dim = j.at("temb_dim").get<int>();
  c.cond_inputs = j.at("cond_inputs").get<int>();
  return c;
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  const auto rows = static_cast<std::int64_t>(m.rows());
  const auto cols = static_cast<std::int64_t>(m.cols());
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double)) * m.size());
}

Eigen::MatrixXd read_matrix(std::istream& in) {
  std::int64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof rows);
  in.read(reinterpret_cast<char*>(&cols), sizeof cols);
  Eigen::MatrixXd m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double)) * m.size());
  if (!in) throw std::runtime_error("checkpoint: truncated matrix");
  return m;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const UNetDenoiser& model,
                     const CheckpointMeta& meta, const Normalizer& norm,
                     const ScheduleSet& scheds) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);

  json manifest;
  manifest["net"] = unet_cfg_to_json(meta.net_cfg);
  manifest["n_t"] = meta.n_t;
  manifest["weights"] = {meta.weights.shape, meta.weights.alpha, meta.weights.eta};
  manifest["seed"] = meta.seed;
  manifest["epoch"] = meta.epoch;
  manifest["preset"] = meta.preset;
  manifest["schedule_hash"] = scheds.hash();
  manifest["alpha_scale"] = norm.alpha_scale;
  const std::string text = manifest.dump();
  const auto len = static_cast<std::uint64_t>(text.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));

  write_matrix(out, norm.shape_mean);
  write_matrix(out, norm.shape_std);
  write_matrix(out, norm.eta_mean);
  write_matrix(out, norm.eta_std);
  write_matrix(out, norm.a0_mean);
  write_matrix(out, norm.a0_std);
  model.net().write(out);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path.string());
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  const json manifest = json::parse(text);

  LoadedCheckpoint out;
  out.meta.net_cfg = unet_cfg_from_json(manifest.at("net"));
  out.meta.n_t = manifest.at("n_t").get<int>();
  out.meta.weights.shape = manifest.at("weights").at(0).get<double>();
  out.meta.weights.alpha = manifest.at("weights").at(1).get<double>();
  out.meta.weights.eta = manifest.at("weights").at(2).get<double>();
  out.meta.seed = manifest.at("seed").get<std::uint64_t>();
  out.meta.epoch = manifest.at("epoch").get<int>();
  out.meta.preset = manifest.value("preset", "desk");

  out.normalizer.alpha_scale = manifest.value("alpha_scale", 10.0);
  out.normalizer.shape_mean = read_matrix(in);
  out.normalizer.shape_std = read_matrix(in);
  out.normalizer.eta_mean = read_matrix(in);
  out.normalizer.eta_std = read_matrix(in);
  out.normalizer.a0_mean = read_matrix(in);
  out.normalizer.a0_std = read_matrix(in);

  out.schedules = default_schedules(out.meta.n_t);
  const auto stored_hash = manifest.at("schedule_hash").get<std::uint64_t>();
  if (stored_hash != out.schedules.hash()) {
    throw std::runtime_error("checkpoint schedule hash mismatch");
  }

  out.model = std::make_unique<UNetDenoiser>(out.meta.net_cfg, out.meta.seed);
  out.model->net().read(in);
  return out;
}

}  // namespace optiwing::diff
