#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "optiwing/rng.hpp"

namespace optiwing::nn {

using Mat = Eigen::MatrixXd;  // channels x length
using Vec = Eigen::VectorXd;

/// Trainable tensor with gradient and Adam moments.
struct Param {
  Mat value;
  Mat grad;
  Mat m;
  Mat v;

  void init(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng);
  void zero_grad() { grad.setZero(); }
  Eigen::Index count() const { return value.size(); }
};

struct ConvCache {
  Mat cols;
  Eigen::Index l_in = 0;
};

/// 1D convolution over (channels x length) activations, im2col based.
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(int in_ch, int out_ch, int kernel, int stride, int pad, Rng& rng,
         bool zero_init = false);

  Mat forward(const Mat& x, ConvCache& cache) const;
  /// Accumulates weight gradients and returns the input gradient.
  Mat backward(const Mat& dy, const ConvCache& cache);

  Param weight;  // out_ch x (in_ch * kernel)
  Param bias;    // out_ch x 1
  int in_ch = 0, out_ch = 0, kernel = 1, stride = 1, pad = 0;
};

struct NormCache {
  Mat x_hat;
  Vec inv_sigma;
};

/// Per-position normalization over channels with learned per-channel
/// gain/bias.
class ChannelNorm {
 public:
  ChannelNorm() = default;
  explicit ChannelNorm(int channels);

  Mat forward(const Mat& x, NormCache& cache) const;
  Mat backward(const Mat& dy, const NormCache& cache);

  Param gain;  // channels x 1
  Param offset;
  int channels = 0;
};

struct DenseCache {
  Vec x;
};

class Dense {
 public:
  Dense() = default;
  Dense(int in_dim, int out_dim, Rng& rng);

  Vec forward(const Vec& x, DenseCache& cache) const;
  Vec backward(const Vec& dy, const DenseCache& cache);

  Param weight;  // out x in
  Param bias;    // out x 1
};

Mat silu(const Mat& x);
Mat silu_backward(const Mat& dy, const Mat& x);

/// Linear interpolation resize along the length axis.
Mat resize_linear(const Mat& x, Eigen::Index l_out);
Mat resize_linear_backward(const Mat& dy, Eigen::Index l_in);

/// Sinusoidal embedding of an integer timestep.
Vec timestep_embedding(int t, int dim);

struct UNetConfig {
  int in_channels = 92;
  int length = 9;
  // The entry and exit widths must exceed in_channels: the head is a linear
  // map of the last feature stage per position, and predicting 92 noise
  // channels through a narrower stage caps the achievable loss.
  int w0 = 96;
  int w1 = 64;
  int w2 = 64;
  // Wide enough to carry the initial-section latent through the bottleneck
  // concatenation; the conditioning vector has 94 inputs.
  int cond_channels = 128;
  int temb_dim = 64;
  int cond_inputs = 94;

  static UNetConfig desk();   // ~0.3M parameters
  static UNetConfig paper();  // ~1.9M parameters
};

/// Forward activations and layer caches for one sample. Separate workspaces
/// make concurrent inference with a frozen model safe.
struct UNetWorkspace;

/// 1D convolutional U-Net over the per-slice latent channels. The timestep
/// embedding enters every block as a per-channel bias; the condition
/// embedding is concatenated on the channel axis at the bottleneck.
class UNet {
 public:
  UNet(const UNetConfig& cfg, std::uint64_t seed);
  ~UNet();
  UNet(const UNet&) = delete;
  UNet& operator=(const UNet&) = delete;

  /// x: (in_channels x length); cond: raw conditioning vector.
  Mat forward(const Mat& x, int t, const Vec& cond, UNetWorkspace& ws) const;
  /// Backward for the most recent forward through the same workspace;
  /// accumulates parameter gradients.
  Mat backward(const Mat& dout, UNetWorkspace& ws);

  UNetWorkspace* make_workspace() const;
  void free_workspace(UNetWorkspace* ws) const;

  void zero_grad();
  std::vector<Param*> parameters();
  std::size_t parameter_count() const;

  void write(std::ostream& out) const;
  void read(std::istream& in);

  const UNetConfig& config() const { return cfg_; }

 private:
  struct Layers;
  UNetConfig cfg_;
  Layers* layers_;
};

class Adam {
 public:
  explicit Adam(double lr = 1e-4, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<Param*>& params);
  void set_lr(double lr) { lr_ = lr; }
  long steps() const { return step_count_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long step_count_ = 0;
};

}  // namespace optiwing::nn
