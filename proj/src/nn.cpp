#include "optiwing/nn.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace optiwing::nn {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Eigen::Index conv_out_len(Eigen::Index l, int kernel, int stride, int pad) {
  return (l + 2 * pad - kernel) / stride + 1;
}

}  // namespace

void Param::init(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
  value.resize(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      value(i, j) = stddev * rng.normal();
    }
  }
  grad = Mat::Zero(rows, cols);
  m = Mat::Zero(rows, cols);
  v = Mat::Zero(rows, cols);
}

Conv1d::Conv1d(int in_ch_, int out_ch_, int kernel_, int stride_, int pad_,
               Rng& rng, bool zero_init)
    : in_ch(in_ch_), out_ch(out_ch_), kernel(kernel_), stride(stride_), pad(pad_) {
  const double stddev =
      zero_init ? 0.0 : std::sqrt(2.0 / (static_cast<double>(in_ch) * kernel));
  weight.init(out_ch, static_cast<Eigen::Index>(in_ch) * kernel, stddev, rng);
  bias.init(out_ch, 1, 0.0, rng);
}

Mat Conv1d::forward(const Mat& x, ConvCache& cache) const {
  if (x.rows() != in_ch) throw std::invalid_argument("Conv1d: channel mismatch");
  const Eigen::Index l_in = x.cols();
  const Eigen::Index l_out = conv_out_len(l_in, kernel, stride, pad);
  cache.l_in = l_in;
  cache.cols.resize(static_cast<Eigen::Index>(in_ch) * kernel, l_out);
  for (Eigen::Index o = 0; o < l_out; ++o) {
    for (int kk = 0; kk < kernel; ++kk) {
      const Eigen::Index src = o * stride + kk - pad;
      for (int c = 0; c < in_ch; ++c) {
        cache.cols(static_cast<Eigen::Index>(c) * kernel + kk, o) =
            (src >= 0 && src < l_in) ? x(c, src) : 0.0;
      }
    }
  }
  Mat y = weight.value * cache.cols;
  y.colwise() += bias.value.col(0);
  return y;
}

Mat Conv1d::backward(const Mat& dy, const ConvCache& cache) {
  weight.grad.noalias() += dy * cache.cols.transpose();
  bias.grad.col(0) += dy.rowwise().sum();
  const Mat dcols = weight.value.transpose() * dy;
  Mat dx = Mat::Zero(in_ch, cache.l_in);
  const Eigen::Index l_out = dcols.cols();
  for (Eigen::Index o = 0; o < l_out; ++o) {
    for (int kk = 0; kk < kernel; ++kk) {
      const Eigen::Index src = o * stride + kk - pad;
      if (src < 0 || src >= cache.l_in) continue;
      for (int c = 0; c < in_ch; ++c) {
        dx(c, src) += dcols(static_cast<Eigen::Index>(c) * kernel + kk, o);
      }
    }
  }
  return dx;
}

ChannelNorm::ChannelNorm(int channels_) : channels(channels_) {
  gain.value = Mat::Ones(channels, 1);
  gain.grad = Mat::Zero(channels, 1);
  gain.m = Mat::Zero(channels, 1);
  gain.v = Mat::Zero(channels, 1);
  offset.value = Mat::Zero(channels, 1);
  offset.grad = Mat::Zero(channels, 1);
  offset.m = Mat::Zero(channels, 1);
  offset.v = Mat::Zero(channels, 1);
}

Mat ChannelNorm::forward(const Mat& x, NormCache& cache) const {
  const Eigen::Index c = x.rows();
  const Eigen::Index l = x.cols();
  cache.x_hat.resize(c, l);
  cache.inv_sigma.resize(l);
  for (Eigen::Index j = 0; j < l; ++j) {
    const double mu = x.col(j).mean();
    const double var = (x.col(j).array() - mu).square().mean();
    const double inv = 1.0 / std::sqrt(var + 1e-5);
    cache.inv_sigma(j) = inv;
    cache.x_hat.col(j) = (x.col(j).array() - mu) * inv;
  }
  Mat y = cache.x_hat;
  y.array().colwise() *= gain.value.col(0).array();
  y.colwise() += offset.value.col(0);
  return y;
}

Mat ChannelNorm::backward(const Mat& dy, const NormCache& cache) {
  const Eigen::Index c = dy.rows();
  const Eigen::Index l = dy.cols();
  offset.grad.col(0) += dy.rowwise().sum();
  gain.grad.col(0) += (dy.array() * cache.x_hat.array()).rowwise().sum().matrix();
  Mat dx(c, l);
  for (Eigen::Index j = 0; j < l; ++j) {
    const Eigen::ArrayXd dxhat =
        dy.col(j).array() * gain.value.col(0).array();
    const double mean_dxhat = dxhat.mean();
    const double mean_dxhat_xhat = (dxhat * cache.x_hat.col(j).array()).mean();
    dx.col(j) = cache.inv_sigma(j) *
                (dxhat - mean_dxhat - cache.x_hat.col(j).array() * mean_dxhat_xhat);
  }
  return dx;
}

Dense::Dense(int in_dim, int out_dim, Rng& rng) {
  weight.init(out_dim, in_dim, std::sqrt(2.0 / in_dim), rng);
  bias.init(out_dim, 1, 0.0, rng);
}

Vec Dense::forward(const Vec& x, DenseCache& cache) const {
  cache.x = x;
  return weight.value * x + bias.value.col(0);
}

Vec Dense::backward(const Vec& dy, const DenseCache& cache) {
  weight.grad.noalias() += dy * cache.x.transpose();
  bias.grad.col(0) += dy;
  return weight.value.transpose() * dy;
}

Mat silu(const Mat& x) {
  return x.unaryExpr([](double v) { return v * sigmoid(v); });
}

Mat silu_backward(const Mat& dy, const Mat& x) {
  Mat dx(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double s = sigmoid(x(i, j));
      dx(i, j) = dy(i, j) * s * (1.0 + x(i, j) * (1.0 - s));
    }
  }
  return dx;
}

Mat resize_linear(const Mat& x, Eigen::Index l_out) {
  const Eigen::Index l_in = x.cols();
  if (l_out == l_in) return x;
  Mat y(x.rows(), l_out);
  for (Eigen::Index j = 0; j < l_out; ++j) {
    const double src = l_out == 1
                           ? 0.0
                           : static_cast<double>(j) * (l_in - 1) / (l_out - 1);
    const auto j0 = static_cast<Eigen::Index>(src);
    const Eigen::Index j1 = std::min(j0 + 1, l_in - 1);
    const double w = src - static_cast<double>(j0);
    y.col(j) = (1.0 - w) * x.col(j0) + w * x.col(j1);
  }
  return y;
}

Mat resize_linear_backward(const Mat& dy, Eigen::Index l_in) {
  const Eigen::Index l_out = dy.cols();
  if (l_out == l_in) return dy;
  Mat dx = Mat::Zero(dy.rows(), l_in);
  for (Eigen::Index j = 0; j < l_out; ++j) {
    const double src = l_out == 1
                           ? 0.0
                           : static_cast<double>(j) * (l_in - 1) / (l_out - 1);
    const auto j0 = static_cast<Eigen::Index>(src);
    const Eigen::Index j1 = std::min(j0 + 1, l_in - 1);
    const double w = src - static_cast<double>(j0);
    dx.col(j0) += (1.0 - w) * dy.col(j);
    dx.col(j1) += w * dy.col(j);
  }
  return dx;
}

Vec timestep_embedding(int t, int dim) {
  Vec e(dim);
  const int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    e(2 * i) = std::sin(t * freq);
    e(2 * i + 1) = std::cos(t * freq);
  }
  if (dim % 2 == 1) e(dim - 1) = 0.0;
  return e;
}

UNetConfig UNetConfig::desk() { return UNetConfig{}; }

UNetConfig UNetConfig::paper() {
  UNetConfig c;
  c.w0 = 168;
  c.w1 = 200;
  c.w2 = 240;
  c.cond_channels = 128;
  c.temb_dim = 128;
  return c;
}

// A residual-free block: pre-norm, SiLU, conv, then FiLM-style timestep
// conditioning (per-channel scale and shift). The multiplicative gain lets
// the denoiser track the noise-level-dependent amplification that
// epsilon-prediction needs near the small-beta end of the schedule.
struct ConvBlock {
  ChannelNorm norm;
  Conv1d conv;
  Dense tproj;  // shift
  Dense gproj;  // scale (about 1 + projection)

  ConvBlock() = default;
  ConvBlock(int in_ch, int out_ch, int temb_dim, Rng& rng)
      : norm(in_ch),
        conv(in_ch, out_ch, 3, 1, 1, rng),
        tproj(temb_dim, out_ch, rng),
        gproj(temb_dim, out_ch, rng) {
    gproj.weight.value *= 0.1;  // start near identity gain
  }
};

struct ConvBlockCache {
  NormCache norm;
  Mat pre_silu;
  ConvCache conv;
  DenseCache tproj;
  DenseCache gproj;
  Mat conv_out;
  Vec gain;
};

struct UNetWorkspace {
  // Embedding path
  DenseCache t1, t2, c1, c2;
  Vec temb_pre, temb_raw, cond_pre;
  Vec temb;  // final time embedding
  // Trunk caches
  ConvCache conv_in;
  ConvBlockCache b1, b2, bm, bm2, bu1, bu2;
  Mat h1, h3;                 // skip sources
  Mat pre_down1, pre_down2;   // silu inputs
  ConvCache down1, down2;
  Mat h4_cat_in;              // bottleneck input before cond concat (for split)
  ConvCache convu1, convu2;
  Mat h6, h7;                 // resize inputs
  Mat pre_head;
  ConvCache head;
  // input skip path
  Mat x_in;
  DenseCache inskip;
  Vec in_gain;
  // accumulated temb gradient during backward
  Vec dtemb;
};

struct UNet::Layers {
  Conv1d conv_in;
  ConvBlock b1;
  Conv1d down1;
  ConvBlock b2;
  Conv1d down2;
  ConvBlock bm;
  ConvBlock bm2;
  Conv1d convu1;
  ConvBlock bu1;
  Conv1d convu2;
  ConvBlock bu2;
  Conv1d head;
  Dense time1, time2;
  Dense cond1, cond2;
  Dense inskip;  // timestep-gated copy of the input added to the output

  Layers(const UNetConfig& c, Rng& rng)
      : conv_in(c.in_channels + c.cond_channels, c.w0, 3, 1, 1, rng),
        b1(c.w0, c.w0, c.temb_dim, rng),
        down1(c.w0, c.w1, 3, 2, 1, rng),
        b2(c.w1, c.w1, c.temb_dim, rng),
        down2(c.w1, c.w2, 3, 2, 1, rng),
        bm(c.w2 + c.cond_channels, c.w2, c.temb_dim, rng),
        bm2(c.w2, c.w2, c.temb_dim, rng),
        convu1(c.w2, c.w1, 3, 1, 1, rng),
        bu1(2 * c.w1, c.w1, c.temb_dim, rng),
        convu2(c.w1, c.w0, 3, 1, 1, rng),
        bu2(2 * c.w0, c.w0, c.temb_dim, rng),
        head(c.w0, c.in_channels, 1, 1, 0, rng, /*zero_init=*/true),
        time1(c.temb_dim, c.temb_dim, rng),
        time2(c.temb_dim, c.temb_dim, rng),
        cond1(c.cond_inputs, 4 * c.cond_channels, rng),
        cond2(4 * c.cond_channels, c.cond_channels, rng),
        inskip(c.temb_dim, c.in_channels, rng) {
    inskip.weight.value.setZero();  // output starts as the pure conv path
  }
};

namespace {

Mat block_forward(const ConvBlock& blk, const Mat& x, const Vec& temb,
                  ConvBlockCache& cache) {
  cache.pre_silu = blk.norm.forward(x, cache.norm);
  cache.conv_out = blk.conv.forward(silu(cache.pre_silu), cache.conv);
  cache.gain = Vec::Ones(cache.conv_out.rows()) + blk.gproj.forward(temb, cache.gproj);
  Mat h = cache.conv_out.array().colwise() * cache.gain.array();
  const Vec tb = blk.tproj.forward(temb, cache.tproj);
  h.colwise() += tb;
  return h;
}

// Returns dx; accumulates the temb gradient.
Mat block_backward(ConvBlock& blk, const Mat& dy, ConvBlockCache& cache,
                   Vec& dtemb) {
  dtemb += blk.tproj.backward(dy.rowwise().sum(), cache.tproj);
  const Vec dgain = (dy.array() * cache.conv_out.array()).rowwise().sum();
  dtemb += blk.gproj.backward(dgain, cache.gproj);
  const Mat dconv = dy.array().colwise() * cache.gain.array();
  const Mat dsilu_out = blk.conv.backward(dconv, cache.conv);
  const Mat dpre = silu_backward(dsilu_out, cache.pre_silu);
  return blk.norm.backward(dpre, cache.norm);
}

void collect(ConvBlock& b, std::vector<Param*>& out) {
  out.push_back(&b.norm.gain);
  out.push_back(&b.norm.offset);
  out.push_back(&b.conv.weight);
  out.push_back(&b.conv.bias);
  out.push_back(&b.tproj.weight);
  out.push_back(&b.tproj.bias);
  out.push_back(&b.gproj.weight);
  out.push_back(&b.gproj.bias);
}

void collect(Conv1d& c, std::vector<Param*>& out) {
  out.push_back(&c.weight);
  out.push_back(&c.bias);
}

void collect(Dense& d, std::vector<Param*>& out) {
  out.push_back(&d.weight);
  out.push_back(&d.bias);
}

}  // namespace

UNet::UNet(const UNetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  Rng rng(seed, Rng::hash_key("unet-init"));
  layers_ = new Layers(cfg, rng);
}

UNet::~UNet() { delete layers_; }

UNetWorkspace* UNet::make_workspace() const { return new UNetWorkspace(); }
void UNet::free_workspace(UNetWorkspace* ws) const { delete ws; }

Mat UNet::forward(const Mat& x, int t, const Vec& cond, UNetWorkspace& ws) const {
  const Layers& L = *layers_;
  if (cond.size() != cfg_.cond_inputs) {
    throw std::invalid_argument("UNet: conditioning size mismatch");
  }

  // Time and condition embeddings.
  ws.temb_raw = timestep_embedding(t, cfg_.temb_dim);
  ws.temb_pre = L.time1.forward(ws.temb_raw, ws.t1);
  ws.temb = L.time2.forward(silu(ws.temb_pre), ws.t2);

  ws.cond_pre = L.cond1.forward(cond, ws.c1);
  const Vec cvec = L.cond2.forward(silu(ws.cond_pre), ws.c2);

  // Encoder. The embedded conditioning rides along as input channels
  // (broadcast over the length axis) in addition to the bottleneck concat.
  Mat xin(x.rows() + cvec.size(), x.cols());
  xin.topRows(x.rows()) = x;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    xin.col(j).tail(cvec.size()) = cvec;
  }
  const Mat h0 = L.conv_in.forward(xin, ws.conv_in);
  ws.h1 = block_forward(L.b1, h0, ws.temb, ws.b1);
  ws.pre_down1 = ws.h1;
  const Mat h2 = L.down1.forward(silu(ws.pre_down1), ws.down1);
  ws.h3 = block_forward(L.b2, h2, ws.temb, ws.b2);
  ws.pre_down2 = ws.h3;
  const Mat h4 = L.down2.forward(silu(ws.pre_down2), ws.down2);

  // Bottleneck with condition channels broadcast along the length axis.
  Mat mid_in(h4.rows() + cvec.size(), h4.cols());
  mid_in.topRows(h4.rows()) = h4;
  for (Eigen::Index j = 0; j < h4.cols(); ++j) {
    mid_in.col(j).tail(cvec.size()) = cvec;
  }
  ws.h4_cat_in = mid_in;
  const Mat h5 = block_forward(L.bm, mid_in, ws.temb, ws.bm);
  ws.h6 = block_forward(L.bm2, h5, ws.temb, ws.bm2);

  // Decoder.
  const Mat u1 = resize_linear(ws.h6, ws.h3.cols());
  const Mat u1c = L.convu1.forward(u1, ws.convu1);
  Mat cat1(u1c.rows() + ws.h3.rows(), u1c.cols());
  cat1.topRows(u1c.rows()) = u1c;
  cat1.bottomRows(ws.h3.rows()) = ws.h3;
  ws.h7 = block_forward(L.bu1, cat1, ws.temb, ws.bu1);

  const Mat u2 = resize_linear(ws.h7, ws.h1.cols());
  const Mat u2c = L.convu2.forward(u2, ws.convu2);
  Mat cat2(u2c.rows() + ws.h1.rows(), u2c.cols());
  cat2.topRows(u2c.rows()) = u2c;
  cat2.bottomRows(ws.h1.rows()) = ws.h1;
  ws.pre_head = block_forward(L.bu2, cat2, ws.temb, ws.bu2);

  ws.x_in = x;
  // Exponential gate: reaches the 1/sqrt(1-alpha_bar) amplification that
  // epsilon-prediction needs at small noise levels; zero weights start it at
  // the identity denoiser, which is correct in the high-noise limit.
  const Vec skip_raw = L.inskip.forward(ws.temb, ws.inskip);
  ws.in_gain = skip_raw.unaryExpr(
      [](double v) { return std::exp(std::clamp(v, -8.0, 8.0)); });
  Mat out = L.head.forward(silu(ws.pre_head), ws.head);
  out += (x.array().colwise() * ws.in_gain.array()).matrix();
  return out;
}

Mat UNet::backward(const Mat& dout, UNetWorkspace& ws) {
  Layers& L = *layers_;
  ws.dtemb = Vec::Zero(cfg_.temb_dim);

  Vec dgain_in = (dout.array() * ws.x_in.array()).rowwise().sum();
  dgain_in.array() *= ws.in_gain.array();  // d exp(s)/ds = exp(s)
  ws.dtemb += L.inskip.backward(dgain_in, ws.inskip);
  const Mat dx_skip = (dout.array().colwise() * ws.in_gain.array()).matrix();

  const Mat dph_silu = L.head.backward(dout, ws.head);
  const Mat dpre_head = silu_backward(dph_silu, ws.pre_head);
  const Mat dcat2 = block_backward(L.bu2, dpre_head, ws.bu2, ws.dtemb);

  const Mat du2c = dcat2.topRows(L.convu2.out_ch);
  Mat dh1 = dcat2.bottomRows(ws.h1.rows());
  const Mat du2 = L.convu2.backward(du2c, ws.convu2);
  const Mat dh7 = resize_linear_backward(du2, ws.h7.cols());

  const Mat dcat1 = block_backward(L.bu1, dh7, ws.bu1, ws.dtemb);
  const Mat du1c = dcat1.topRows(L.convu1.out_ch);
  Mat dh3 = dcat1.bottomRows(ws.h3.rows());
  const Mat du1 = L.convu1.backward(du1c, ws.convu1);
  const Mat dh6 = resize_linear_backward(du1, ws.h6.cols());

  const Mat dh5 = block_backward(L.bm2, dh6, ws.bm2, ws.dtemb);
  const Mat dmid_in = block_backward(L.bm, dh5, ws.bm, ws.dtemb);

  const Eigen::Index w2 = dmid_in.rows() - cfg_.cond_channels;
  const Mat dh4 = dmid_in.topRows(w2);
  Vec dcvec = Vec::Zero(cfg_.cond_channels);
  for (Eigen::Index j = 0; j < dmid_in.cols(); ++j) {
    dcvec += dmid_in.col(j).tail(cfg_.cond_channels);
  }

  const Mat dpre_down2_silu = L.down2.backward(dh4, ws.down2);
  dh3 += silu_backward(dpre_down2_silu, ws.pre_down2);
  const Mat dh2 = block_backward(L.b2, dh3, ws.b2, ws.dtemb);

  const Mat dpre_down1_silu = L.down1.backward(dh2, ws.down1);
  dh1 += silu_backward(dpre_down1_silu, ws.pre_down1);
  const Mat dh0 = block_backward(L.b1, dh1, ws.b1, ws.dtemb);

  const Mat dxin = L.conv_in.backward(dh0, ws.conv_in);
  Mat dx = dxin.topRows(cfg_.in_channels);
  dx += dx_skip;
  for (Eigen::Index j = 0; j < dxin.cols(); ++j) {
    dcvec += dxin.col(j).tail(cfg_.cond_channels);
  }

  // Condition embedding path.
  const Vec dcond_pre_silu = L.cond2.backward(dcvec, ws.c2);
  const Vec dcond_pre = silu_backward(dcond_pre_silu, ws.cond_pre);
  L.cond1.backward(dcond_pre, ws.c1);

  // Time embedding path.
  const Vec dtemb_pre_silu = L.time2.backward(ws.dtemb, ws.t2);
  const Vec dtemb_pre = silu_backward(dtemb_pre_silu, ws.temb_pre);
  L.time1.backward(dtemb_pre, ws.t1);

  return dx;
}

std::vector<Param*> UNet::parameters() {
  Layers& L = *layers_;
  std::vector<Param*> out;
  collect(L.conv_in, out);
  collect(L.b1, out);
  collect(L.down1, out);
  collect(L.b2, out);
  collect(L.down2, out);
  collect(L.bm, out);
  collect(L.bm2, out);
  collect(L.convu1, out);
  collect(L.bu1, out);
  collect(L.convu2, out);
  collect(L.bu2, out);
  collect(L.head, out);
  collect(L.time1, out);
  collect(L.time2, out);
  collect(L.cond1, out);
  collect(L.cond2, out);
  collect(L.inskip, out);
  return out;
}

void UNet::zero_grad() {
  for (Param* p : parameters()) p->zero_grad();
}

std::size_t UNet::parameter_count() const {
  std::size_t n = 0;
  for (Param* p : const_cast<UNet*>(this)->parameters()) {
    n += static_cast<std::size_t>(p->count());
  }
  return n;
}

void UNet::write(std::ostream& out) const {
  for (Param* p : const_cast<UNet*>(this)->parameters()) {
    const auto rows = static_cast<std::int64_t>(p->value.rows());
    const auto cols = static_cast<std::int64_t>(p->value.cols());
    out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
    out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(sizeof(double)) * p->value.size());
  }
}

void UNet::read(std::istream& in) {
  for (Param* p : parameters()) {
    std::int64_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), sizeof rows);
    in.read(reinterpret_cast<char*>(&cols), sizeof cols);
    if (rows != p->value.rows() || cols != p->value.cols()) {
      throw std::runtime_error("UNet::read: parameter shape mismatch");
    }
    in.read(reinterpret_cast<char*>(p->value.data()),
            static_cast<std::streamsize>(sizeof(double)) * p->value.size());
  }
  if (!in) throw std::runtime_error("UNet::read: truncated parameter blob");
}

void Adam::step(const std::vector<Param*>& params) {
  ++step_count_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
  for (Param* p : params) {
    p->m = beta1_ * p->m + (1.0 - beta1_) * p->grad;
    p->v = beta2_ * p->v + (1.0 - beta2_) * p->grad.cwiseProduct(p->grad);
    const Mat m_hat = p->m / bc1;
    const Mat v_hat = p->v / bc2;
    p->value.array() -=
        lr_ * m_hat.array() / (v_hat.array().sqrt() + eps_);
  }
}

}  // namespace optiwing::nn
