#include "greensurrogate/unet.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "greensurrogate/error.hpp"
#include "greensurrogate/rng.hpp"

namespace gsurr {

using MatMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

void UNetConfig::validate() const {
  require(in_channels >= 1 && in_channels <= 3, "in_channels must be 1, 2 or 3");
  require(first_channels >= 1, "first_channels must be at least 1");
  require(depth >= 2, "depth must be at least 2");
  require(depth <= 12 && (static_cast<long>(first_channels) << (depth - 1)) <= (1L << 16),
          "depth/first_channels too large");
  require(n >= 3 && m >= 3, "grid must be at least 3x3");
  const int factor = 1 << (depth - 1);
  if (n % factor != 0 || m % factor != 0) {
    fail(ErrorKind::invalid_argument, "grid " + std::to_string(n) + "x" + std::to_string(m) +
                                          " is not divisible by 2^(depth-1) = " + std::to_string(factor));
  }
}

namespace {

// Tensors are channel-major: channel c occupies [c * P, (c + 1) * P) with
// P = H * W and pixel index x + W * y. Viewed as a column-major P x C
// matrix, each column is one channel.

void im2col3x3(const double* in, int cin, int H, int W, double* col) {
  const std::size_t P = static_cast<std::size_t>(H) * W;
  for (int ci = 0; ci < cin; ++ci) {
    const double* src = in + ci * P;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        double* dst = col + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * P;
        const int dx = kx - 1;
        for (int y = 0; y < H; ++y) {
          double* row = dst + static_cast<std::size_t>(y) * W;
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= H) {
            std::fill(row, row + W, 0.0);
            continue;
          }
          const double* srow = src + static_cast<std::size_t>(sy) * W;
          const int x_begin = std::max(0, -dx);
          const int x_end = std::min(W, W - dx);
          std::fill(row, row + x_begin, 0.0);
          std::copy(srow + x_begin + dx, srow + x_end + dx, row + x_begin);
          std::fill(row + x_end, row + W, 0.0);
        }
      }
    }
  }
}

void col2im3x3(const double* col, int cin, int H, int W, double* in) {
  const std::size_t P = static_cast<std::size_t>(H) * W;
  std::fill(in, in + P * cin, 0.0);
  for (int ci = 0; ci < cin; ++ci) {
    double* dst = in + ci * P;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const double* src = col + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * P;
        const int dx = kx - 1;
        for (int y = 0; y < H; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= H) continue;
          const double* row = src + static_cast<std::size_t>(y) * W;
          double* drow = dst + static_cast<std::size_t>(sy) * W;
          const int x_begin = std::max(0, -dx);
          const int x_end = std::min(W, W - dx);
          for (int x = x_begin; x < x_end; ++x) drow[x + dx] += row[x];
        }
      }
    }
  }
}

void relu_inplace(double* v, std::size_t count) {
  for (std::size_t k = 0; k < count; ++k) v[k] = v[k] > 0.0 ? v[k] : 0.0;
}

// Zeroes gradient entries whose forward activation was clipped.
void relu_backward(const double* activation, double* grad, std::size_t count) {
  for (std::size_t k = 0; k < count; ++k) {
    if (!(activation[k] > 0.0)) grad[k] = 0.0;
  }
}

}  // namespace

class UNet::Workspace {
 public:
  struct Level {
    int H = 0;
    int W = 0;
    std::vector<double> input;   // encoder conv a input (pooled or network input)
    std::vector<double> enc_a;   // after ReLU
    std::vector<double> enc_b;   // after ReLU; skip connection and pool source
    std::vector<std::uint32_t> pool_argmax;
    std::vector<double> concat;  // [enc_b, upconv output]
    std::vector<double> dec_a;
    std::vector<double> dec_b;
  };

  std::vector<Level> levels;
  std::vector<double> col;
  std::vector<double> dcol;
  std::vector<double> upconv_rows;  // P_in x (Cout * 4)
  std::vector<double> grad_a;
  std::vector<double> grad_b;
  std::vector<double> grad_c;
  Grid grid;
  bool has_tape = false;
};

UNet::UNet(const UNetConfig& config) : config_(config) {
  config_.validate();
  std::size_t offset = 0;
  auto add = [&](std::string name, LayerKind kind, int cin, int cout, int level) {
    std::size_t taps = kind == LayerKind::conv3x3 ? 9 : (kind == LayerKind::upconv2x2 ? 4 : 1);
    LayerSpec spec{std::move(name), kind, cin, cout, level, offset,
                   taps * static_cast<std::size_t>(cin) * static_cast<std::size_t>(cout), 0,
                   static_cast<std::size_t>(cout)};
    spec.bias_offset = spec.weight_offset + spec.weight_count;
    offset = spec.bias_offset + spec.bias_count;
    layers_.push_back(std::move(spec));
  };
  const int D = config_.depth;
  for (int l = 0; l < D; ++l) {
    const int cin = l == 0 ? config_.in_channels : config_.level_channels(l - 1);
    add("enc" + std::to_string(l) + ".conv_a", LayerKind::conv3x3, cin, config_.level_channels(l), l);
    add("enc" + std::to_string(l) + ".conv_b", LayerKind::conv3x3, config_.level_channels(l),
        config_.level_channels(l), l);
  }
  for (int l = D - 2; l >= 0; --l) {
    const int c = config_.level_channels(l);
    add("dec" + std::to_string(l) + ".up", LayerKind::upconv2x2, config_.level_channels(l + 1), c, l);
    add("dec" + std::to_string(l) + ".conv_a", LayerKind::conv3x3, 2 * c, c, l);
    add("dec" + std::to_string(l) + ".conv_b", LayerKind::conv3x3, c, c, l);
  }
  add("head", LayerKind::conv1x1, config_.first_channels, 1, 0);
  param_count_ = offset;
}

UNet::~UNet() = default;

void UNet::WorkspaceDeleter::operator()(Workspace* ws) const noexcept { delete ws; }

UNet::WorkspacePtr UNet::make_workspace() const {
  WorkspacePtr ws(new Workspace());
  const int D = config_.depth;
  ws->levels.resize(static_cast<std::size_t>(D));
  std::size_t max_col = 0;
  std::size_t max_act = 0;
  for (int l = 0; l < D; ++l) {
    auto& lv = ws->levels[static_cast<std::size_t>(l)];
    lv.W = config_.n >> l;
    lv.H = config_.m >> l;
    const std::size_t P = static_cast<std::size_t>(lv.H) * lv.W;
    const std::size_t c = static_cast<std::size_t>(config_.level_channels(l));
    const std::size_t cin = l == 0 ? static_cast<std::size_t>(config_.in_channels) : c / 2;
    lv.input.resize(P * cin);
    lv.enc_a.resize(P * c);
    lv.enc_b.resize(P * c);
    if (l + 1 < D) {
      lv.pool_argmax.resize(P * c / 4);
      lv.concat.resize(P * 2 * c);
      lv.dec_a.resize(P * c);
      lv.dec_b.resize(P * c);
      max_col = std::max(max_col, P * 9 * 2 * c);
      max_act = std::max(max_act, P * 2 * c);
    }
    max_col = std::max(max_col, P * 9 * std::max(cin, c));
    max_act = std::max(max_act, P * c);
  }
  ws->col.resize(max_col);
  ws->dcol.resize(max_col);
  ws->upconv_rows.resize(max_act);
  ws->grad_a.resize(max_act);
  ws->grad_b.resize(max_act);
  ws->grad_c.resize(max_act);
  return ws;
}

void UNet::check(const UNetParams& params) const {
  if (!(params.config == config_)) fail(ErrorKind::invalid_argument, "parameters belong to a different UNetConfig");
  if (params.values.size() != param_count_) fail(ErrorKind::invalid_argument, "parameter vector has wrong size");
}

UNetParams UNet::init(std::uint64_t seed) const {
  UNetParams params{config_, std::vector<double>(param_count_, 0.0)};
  std::mt19937_64 engine(mix_seed(seed));
  for (const LayerSpec& layer : layers_) {
    double fan_in = 0.0;
    double gain = 6.0;  // ReLU layers
    switch (layer.kind) {
      case LayerKind::conv3x3:
        fan_in = 9.0 * layer.in_channels;
        break;
      case LayerKind::upconv2x2:
        fan_in = layer.in_channels;
        gain = 3.0;
        break;
      case LayerKind::conv1x1:
        fan_in = layer.in_channels;
        gain = 3.0;
        break;
    }
    const double bound = std::sqrt(gain / fan_in);
    for (std::size_t k = 0; k < layer.weight_count; ++k) {
      params.values[layer.weight_offset + k] = uniform(engine, -bound, bound);
    }
  }
  return params;
}

namespace {

void conv3x3_forward(const double* in, int cin, int H, int W, const double* weights, const double* bias, int cout,
                     double* out, double* col) {
  const Eigen::Index P = static_cast<Eigen::Index>(H) * W;
  im2col3x3(in, cin, H, W, col);
  ConstMatMap cols(col, P, 9 * cin);
  ConstMatMap w(weights, 9 * cin, cout);
  MatMap o(out, P, cout);
  o.noalias() = cols * w;
  o.rowwise() += ConstVecMap(bias, cout).transpose();
}

// `dout` is the gradient w.r.t. the conv output (pre-activation).
void conv3x3_backward(const double* in, int cin, int H, int W, const double* weights, int cout, const double* dout,
                      double* dweights, double* dbias, double* din, double* col, double* dcol) {
  const Eigen::Index P = static_cast<Eigen::Index>(H) * W;
  im2col3x3(in, cin, H, W, col);
  ConstMatMap cols(col, P, 9 * cin);
  ConstMatMap d(dout, P, cout);
  MatMap(dweights, 9 * cin, cout).noalias() = cols.transpose() * d;
  VecMap(dbias, cout) = d.colwise().sum().transpose();
  if (din != nullptr) {
    MatMap dc(dcol, P, 9 * cin);
    dc.noalias() = d * ConstMatMap(weights, 9 * cin, cout).transpose();
    col2im3x3(dcol, cin, H, W, din);
  }
}

void maxpool_forward(const double* in, int channels, int H, int W, double* out, std::uint32_t* argmax) {
  const int Ho = H / 2;
  const int Wo = W / 2;
  const std::size_t P = static_cast<std::size_t>(H) * W;
  const std::size_t Po = static_cast<std::size_t>(Ho) * Wo;
  for (int c = 0; c < channels; ++c) {
    const double* src = in + c * P;
    for (int y = 0; y < Ho; ++y) {
      for (int x = 0; x < Wo; ++x) {
        std::uint32_t best = static_cast<std::uint32_t>((2 * y) * W + 2 * x);
        for (std::uint32_t cand : {static_cast<std::uint32_t>((2 * y) * W + 2 * x + 1),
                                   static_cast<std::uint32_t>((2 * y + 1) * W + 2 * x),
                                   static_cast<std::uint32_t>((2 * y + 1) * W + 2 * x + 1)}) {
          if (src[cand] > src[best]) best = cand;
        }
        const std::size_t o = c * Po + static_cast<std::size_t>(y) * Wo + x;
        out[o] = src[best];
        argmax[o] = best;
      }
    }
  }
}

void maxpool_backward(const double* dout, const std::uint32_t* argmax, int channels, int H, int W, double* din) {
  const std::size_t P = static_cast<std::size_t>(H) * W;
  const std::size_t Po = P / 4;
  std::fill(din, din + P * channels, 0.0);
  for (int c = 0; c < channels; ++c) {
    for (std::size_t o = 0; o < Po; ++o) din[c * P + argmax[c * Po + o]] += dout[c * Po + o];
  }
}

// Input is at (H, W); output at (2H, 2W). Weights are [cin][cout][2][2].
void upconv_forward(const double* in, int cin, int H, int W, const double* weights, const double* bias, int cout,
                    double* out, double* rows) {
  const Eigen::Index P = static_cast<Eigen::Index>(H) * W;
  const int Wo = 2 * W;
  const std::size_t Po = static_cast<std::size_t>(4) * P;
  MatMap y(rows, P, 4 * cout);
  y.noalias() = ConstMatMap(in, P, cin) * ConstMatMap(weights, 4 * cout, cin).transpose();
  for (int co = 0; co < cout; ++co) {
    double* dst = out + co * Po;
    for (int ky = 0; ky < 2; ++ky) {
      for (int kx = 0; kx < 2; ++kx) {
        const double* src = rows + (static_cast<std::size_t>(co) * 4 + ky * 2 + kx) * P;
        for (int yy = 0; yy < H; ++yy) {
          for (int xx = 0; xx < W; ++xx) {
            dst[static_cast<std::size_t>(2 * yy + ky) * Wo + 2 * xx + kx] = src[yy * W + xx] + bias[co];
          }
        }
      }
    }
  }
}

void upconv_backward(const double* in, int cin, int H, int W, const double* weights, int cout, const double* dout,
                     double* dweights, double* dbias, double* din, double* rows) {
  const Eigen::Index P = static_cast<Eigen::Index>(H) * W;
  const int Wo = 2 * W;
  const std::size_t Po = static_cast<std::size_t>(4) * P;
  for (int co = 0; co < cout; ++co) {
    const double* src = dout + co * Po;
    double total = 0.0;
    for (std::size_t k = 0; k < Po; ++k) total += src[k];
    dbias[co] = total;
    for (int ky = 0; ky < 2; ++ky) {
      for (int kx = 0; kx < 2; ++kx) {
        double* dst = rows + (static_cast<std::size_t>(co) * 4 + ky * 2 + kx) * P;
        for (int yy = 0; yy < H; ++yy) {
          for (int xx = 0; xx < W; ++xx) dst[yy * W + xx] = src[static_cast<std::size_t>(2 * yy + ky) * Wo + 2 * xx + kx];
        }
      }
    }
  }
  ConstMatMap dy(rows, P, 4 * cout);
  MatMap(dweights, 4 * cout, cin).noalias() = dy.transpose() * ConstMatMap(in, P, cin);
  MatMap(din, P, cin).noalias() = dy * ConstMatMap(weights, 4 * cout, cin);
}

}  // namespace

Field UNet::forward(const UNetParams& params, const InputTensor& input, Workspace& ws) const {
  check(params);
  if (input.channels != config_.in_channels || input.grid.n() != config_.n || input.grid.m() != config_.m ||
      input.data.size() != input.grid.size() * static_cast<std::size_t>(input.channels)) {
    fail(ErrorKind::invalid_argument, "input tensor shape does not match the network configuration");
  }
  const double* theta = params.values.data();
  const int D = config_.depth;
  std::size_t layer = 0;

  std::copy(input.data.begin(), input.data.end(), ws.levels[0].input.begin());
  for (int l = 0; l < D; ++l) {
    auto& lv = ws.levels[static_cast<std::size_t>(l)];
    const std::size_t P = static_cast<std::size_t>(lv.H) * lv.W;
    const LayerSpec& a = layers_[layer++];
    const LayerSpec& b = layers_[layer++];
    conv3x3_forward(lv.input.data(), a.in_channels, lv.H, lv.W, theta + a.weight_offset, theta + a.bias_offset,
                    a.out_channels, lv.enc_a.data(), ws.col.data());
    relu_inplace(lv.enc_a.data(), P * a.out_channels);
    conv3x3_forward(lv.enc_a.data(), b.in_channels, lv.H, lv.W, theta + b.weight_offset, theta + b.bias_offset,
                    b.out_channels, lv.enc_b.data(), ws.col.data());
    relu_inplace(lv.enc_b.data(), P * b.out_channels);
    if (l + 1 < D) {
      maxpool_forward(lv.enc_b.data(), b.out_channels, lv.H, lv.W, ws.levels[static_cast<std::size_t>(l) + 1].input.data(),
                      lv.pool_argmax.data());
    }
  }

  const double* below = ws.levels[static_cast<std::size_t>(D) - 1].enc_b.data();
  for (int l = D - 2; l >= 0; --l) {
    auto& lv = ws.levels[static_cast<std::size_t>(l)];
    const auto& lower = ws.levels[static_cast<std::size_t>(l) + 1];
    const std::size_t P = static_cast<std::size_t>(lv.H) * lv.W;
    const LayerSpec& up = layers_[layer++];
    const LayerSpec& a = layers_[layer++];
    const LayerSpec& b = layers_[layer++];
    const std::size_t c = static_cast<std::size_t>(up.out_channels);
    std::copy(lv.enc_b.begin(), lv.enc_b.end(), lv.concat.begin());
    upconv_forward(below, up.in_channels, lower.H, lower.W, theta + up.weight_offset, theta + up.bias_offset,
                   up.out_channels, lv.concat.data() + P * c, ws.upconv_rows.data());
    conv3x3_forward(lv.concat.data(), a.in_channels, lv.H, lv.W, theta + a.weight_offset, theta + a.bias_offset,
                    a.out_channels, lv.dec_a.data(), ws.col.data());
    relu_inplace(lv.dec_a.data(), P * c);
    conv3x3_forward(lv.dec_a.data(), b.in_channels, lv.H, lv.W, theta + b.weight_offset, theta + b.bias_offset,
                    b.out_channels, lv.dec_b.data(), ws.col.data());
    relu_inplace(lv.dec_b.data(), P * c);
    below = lv.dec_b.data();
  }

  const LayerSpec& head = layers_[layer];
  const auto& top = ws.levels[0];
  const Eigen::Index P = static_cast<Eigen::Index>(top.H) * top.W;
  Field out(input.grid);
  VecMap o(out.values().data(), P);
  o.noalias() = ConstMatMap(below, P, head.in_channels) * ConstVecMap(theta + head.weight_offset, head.in_channels);
  o.array() += theta[head.bias_offset];
  out.zero_boundary();
  ws.grid = input.grid;
  ws.has_tape = true;
  return out;
}

void UNet::backward(const UNetParams& params, Workspace& ws, const Field& upstream, std::span<double> grad) const {
  check(params);
  require(ws.has_tape, "backward called without a recorded forward pass");
  require_same_grid(ws.grid, upstream.grid(), "UNet::backward");
  require(grad.size() == param_count_, "gradient buffer has wrong size");
  const double* theta = params.values.data();
  double* g = grad.data();
  const int D = config_.depth;

  // Head. The boundary mask passes no gradient to masked nodes.
  std::size_t layer = layers_.size() - 1;
  const LayerSpec& head = layers_[layer];
  const auto& top = ws.levels[0];
  const Eigen::Index P0 = static_cast<Eigen::Index>(top.H) * top.W;
  Field masked = upstream;
  masked.zero_boundary();
  ConstVecMap dout(masked.values().data(), P0);
  const double* head_in = D >= 2 ? top.dec_b.data() : top.enc_b.data();
  VecMap(g + head.weight_offset, head.in_channels).noalias() = ConstMatMap(head_in, P0, head.in_channels).transpose() * dout;
  g[head.bias_offset] = dout.sum();

  double* dcur = ws.grad_a.data();  // gradient w.r.t. the current decoder output
  MatMap(dcur, P0, head.in_channels).noalias() = dout * ConstVecMap(theta + head.weight_offset, head.in_channels).transpose();

  // Decoder, top level first.
  for (int l = 0; l <= D - 2; ++l) {
    auto& lv = ws.levels[static_cast<std::size_t>(l)];
    const auto& lower = ws.levels[static_cast<std::size_t>(l) + 1];
    const std::size_t P = static_cast<std::size_t>(lv.H) * lv.W;
    // Decoder layers for level l were declared as up, conv_a, conv_b.
    const std::size_t base = static_cast<std::size_t>(2 * D) + static_cast<std::size_t>(3 * (D - 2 - l));
    const LayerSpec& up = layers_[base];
    const LayerSpec& a = layers_[base + 1];
    const LayerSpec& b = layers_[base + 2];
    const std::size_t c = static_cast<std::size_t>(b.out_channels);

    relu_backward(lv.dec_b.data(), dcur, P * c);
    double* d_deca = ws.grad_b.data();
    conv3x3_backward(lv.dec_a.data(), b.in_channels, lv.H, lv.W, theta + b.weight_offset, b.out_channels, dcur,
                     g + b.weight_offset, g + b.bias_offset, d_deca, ws.col.data(), ws.dcol.data());
    relu_backward(lv.dec_a.data(), d_deca, P * c);
    double* d_concat = ws.grad_c.data();
    conv3x3_backward(lv.concat.data(), a.in_channels, lv.H, lv.W, theta + a.weight_offset, a.out_channels, d_deca,
                     g + a.weight_offset, g + a.bias_offset, d_concat, ws.col.data(), ws.dcol.data());

    // d_concat = [d skip, d upconv]. Stash the skip gradient in the
    // encoder-level slot before the buffers are reused.
    const double* below_out = l + 1 == D - 1 ? lower.enc_b.data() : lower.dec_b.data();
    double* d_below = ws.grad_a.data();
    // grad_a currently holds dcur for this level, which is no longer needed.
    upconv_backward(below_out, up.in_channels, lower.H, lower.W, theta + up.weight_offset, up.out_channels,
                    d_concat + P * c, g + up.weight_offset, g + up.bias_offset, d_below, ws.upconv_rows.data());
    // Keep the skip gradient for the encoder pass in the level's dec_b slot
    // (dec_b activations of this level are no longer needed).
    std::copy(d_concat, d_concat + P * c, lv.dec_b.begin());
    dcur = d_below;
  }

  // Encoder, bottom level first. `dcur` holds the gradient w.r.t. enc_b of
  // the bottom level.
  for (int l = D - 1; l >= 0; --l) {
    auto& lv = ws.levels[static_cast<std::size_t>(l)];
    const std::size_t P = static_cast<std::size_t>(lv.H) * lv.W;
    const LayerSpec& a = layers_[static_cast<std::size_t>(2 * l)];
    const LayerSpec& b = layers_[static_cast<std::size_t>(2 * l) + 1];
    const std::size_t c = static_cast<std::size_t>(b.out_channels);
    double* d_encb = ws.grad_b.data();
    if (l == D - 1) {
      std::copy(dcur, dcur + P * c, d_encb);
    } else {
      // Skip gradient plus the gradient arriving through the pool.
      maxpool_backward(dcur, lv.pool_argmax.data(), static_cast<int>(c), lv.H, lv.W, d_encb);
      for (std::size_t k = 0; k < P * c; ++k) d_encb[k] += lv.dec_b[k];
    }
    relu_backward(lv.enc_b.data(), d_encb, P * c);
    double* d_enca = ws.grad_c.data();
    conv3x3_backward(lv.enc_a.data(), b.in_channels, lv.H, lv.W, theta + b.weight_offset, b.out_channels, d_encb,
                     g + b.weight_offset, g + b.bias_offset, d_enca, ws.col.data(), ws.dcol.data());
    relu_backward(lv.enc_a.data(), d_enca, P * c);
    double* d_input = l > 0 ? ws.grad_a.data() : nullptr;
    conv3x3_backward(lv.input.data(), a.in_channels, lv.H, lv.W, theta + a.weight_offset, a.out_channels, d_enca,
                     g + a.weight_offset, g + a.bias_offset, d_input, ws.col.data(), ws.dcol.data());
    dcur = d_input;
  }
  ws.has_tape = false;
}

std::size_t param_count(const UNetConfig& config) { return UNet(config).param_count(); }

UNetParams init_unet(const UNetConfig& config, std::uint64_t seed) { return UNet(config).init(seed); }

Field forward(const UNetParams& params, const InputTensor& input) {
  UNet net(params.config);
  auto ws = net.make_workspace();
  return net.forward(params, input, *ws);
}

std::vector<double> gradient(const UNetParams& params, const InputTensor& input, const Field& upstream) {
  UNet net(params.config);
  auto ws = net.make_workspace();
  net.forward(params, input, *ws);
  std::vector<double> grad(net.param_count());
  net.backward(params, *ws, upstream, grad);
  return grad;
}

}  // namespace gsurr
