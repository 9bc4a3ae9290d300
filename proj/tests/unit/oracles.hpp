#pragma once

// Independent reference implementations. None of these call into the
// library's stencil, quadrature or network code.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>

#include "greensurrogate/grid.hpp"
#include "greensurrogate/unet.hpp"

namespace oracle {

using Coef = std::function<double(double, double)>;

// Interior matrix of -div(a grad u) + r u written straight from the
// five-point formula, one row at a time.
inline Eigen::MatrixXd dense_operator(const gsurr::Grid& g, const Coef& a, const Coef& r) {
  const int ni = g.n() - 2, mi = g.m() - 2;
  const double h1 = g.h1(), h2 = g.h2();
  const auto x = [&](int i) { return g.domain().x0 + (i == g.n() - 1 ? g.domain().L1 : i * h1); };
  const auto y = [&](int j) { return g.domain().y0 + (j == g.m() - 1 ? g.domain().L2 : j * h2); };
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(ni * mi, ni * mi);
  for (int j = 1; j <= mi; ++j) {
    for (int i = 1; i <= ni; ++i) {
      const int row = (i - 1) + ni * (j - 1);
      const double ce = a(0.5 * (x(i) + x(i + 1)), y(j)) / (h1 * h1);
      const double cw = a(0.5 * (x(i) + x(i - 1)), y(j)) / (h1 * h1);
      const double cn = a(x(i), 0.5 * (y(j) + y(j + 1))) / (h2 * h2);
      const double cs = a(x(i), 0.5 * (y(j) + y(j - 1))) / (h2 * h2);
      A(row, row) = ce + cw + cn + cs + r(x(i), y(j));
      if (i < ni) A(row, row + 1) = -ce;
      if (i > 1) A(row, row - 1) = -cw;
      if (j < mi) A(row, row + ni) = -cn;
      if (j > 1) A(row, row - ni) = -cs;
    }
  }
  return A;
}

inline Eigen::VectorXd interior_vector(const gsurr::Field& f) {
  const gsurr::Grid& g = f.grid();
  const int ni = g.n() - 2, mi = g.m() - 2;
  Eigen::VectorXd v(ni * mi);
  for (int j = 1; j <= mi; ++j)
    for (int i = 1; i <= ni; ++i) v((i - 1) + ni * (j - 1)) = f(i, j);
  return v;
}

inline gsurr::Field from_interior(const gsurr::Grid& g, const Eigen::VectorXd& v) {
  gsurr::Field f(g);
  const int ni = g.n() - 2, mi = g.m() - 2;
  for (int j = 1; j <= mi; ++j)
    for (int i = 1; i <= ni; ++i) f(i, j) = v((i - 1) + ni * (j - 1));
  return f;
}

// Mass of the isotropic Gaussian of width sigma centred at (cx, cy) inside
// the rectangle, via the error function.
inline double gaussian_mass(const gsurr::RectDomain& d, double cx, double cy, double sigma) {
  const double s = sigma * std::sqrt(2.0);
  const double mx = 0.5 * (std::erf((d.x0 + d.L1 - cx) / s) - std::erf((d.x0 - cx) / s));
  const double my = 0.5 * (std::erf((d.y0 + d.L2 - cy) / s) - std::erf((d.y0 - cy) / s));
  return mx * my;
}

// U-Net parameter count from the layer shapes.
inline std::size_t unet_params(int cin, int c1, int depth) {
  std::size_t total = 0;
  auto conv = [&](std::size_t ci, std::size_t co, std::size_t k) { total += ci * co * k * k + co; };
  std::size_t prev = static_cast<std::size_t>(cin);
  for (int l = 0; l < depth; ++l) {
    const std::size_t c = static_cast<std::size_t>(c1) << l;
    conv(prev, c, 3);
    conv(c, c, 3);
    prev = c;
  }
  for (int l = depth - 2; l >= 0; --l) {
    const std::size_t c = static_cast<std::size_t>(c1) << l;
    total += prev * c * 4 + c;  // 2x2 transposed conv
    conv(2 * c, c, 3);
    conv(c, c, 3);
    prev = c;
  }
  conv(prev, 1, 1);
  return total;
}

inline gsurr::Field random_interior_field(const gsurr::Grid& g, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  gsurr::Field f(g);
  for (int j = 1; j < g.m() - 1; ++j)
    for (int i = 1; i < g.n() - 1; ++i) f(i, j) = u(rng);
  return f;
}

// Plain-loop U-Net forward pass. Tensors are [channel][y][x]; parameters are
// consumed in declaration order with conv weights [co][ci][ky][kx] and
// transposed-conv weights [ci][co][ky][kx].
struct Tensor {
  int c = 0, h = 0, w = 0;
  std::vector<double> v;
  Tensor(int c_, int h_, int w_) : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_ * h_ * w_), 0.0) {}
  double& at(int ch, int y, int x) { return v[static_cast<std::size_t>((ch * h + y) * w + x)]; }
  double at(int ch, int y, int x) const { return v[static_cast<std::size_t>((ch * h + y) * w + x)]; }
};

class NaiveUNet {
 public:
  explicit NaiveUNet(const std::vector<double>& p) : p_(p) {}

  Tensor conv(const Tensor& in, int cout, int k, bool relu) {
    Tensor out(cout, in.h, in.w);
    const std::size_t w0 = pos_;
    pos_ += static_cast<std::size_t>(cout * in.c * k * k);
    const std::size_t b0 = pos_;
    pos_ += static_cast<std::size_t>(cout);
    const int r = k / 2;
    for (int co = 0; co < cout; ++co)
      for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < in.w; ++x) {
          double s = p_[b0 + static_cast<std::size_t>(co)];
          for (int ci = 0; ci < in.c; ++ci)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int sy = y + ky - r, sx = x + kx - r;
                if (sy < 0 || sx < 0 || sy >= in.h || sx >= in.w) continue;
                s += p_[w0 + static_cast<std::size_t>(((co * in.c + ci) * k + ky) * k + kx)] * in.at(ci, sy, sx);
              }
          out.at(co, y, x) = relu ? std::max(0.0, s) : s;
        }
    return out;
  }

  static Tensor pool(const Tensor& in) {
    Tensor out(in.c, in.h / 2, in.w / 2);
    for (int c = 0; c < in.c; ++c)
      for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x)
          out.at(c, y, x) = std::max(std::max(in.at(c, 2 * y, 2 * x), in.at(c, 2 * y, 2 * x + 1)),
                                     std::max(in.at(c, 2 * y + 1, 2 * x), in.at(c, 2 * y + 1, 2 * x + 1)));
    return out;
  }

  Tensor up(const Tensor& in, int cout) {
    Tensor out(cout, in.h * 2, in.w * 2);
    const std::size_t w0 = pos_;
    pos_ += static_cast<std::size_t>(in.c * cout * 4);
    const std::size_t b0 = pos_;
    pos_ += static_cast<std::size_t>(cout);
    for (int co = 0; co < cout; ++co)
      for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x) {
          double s = p_[b0 + static_cast<std::size_t>(co)];
          for (int ci = 0; ci < in.c; ++ci)
            s += p_[w0 + static_cast<std::size_t>(((ci * cout + co) * 2 + y % 2) * 2 + x % 2)] * in.at(ci, y / 2, x / 2);
          out.at(co, y, x) = s;
        }
    return out;
  }

  static Tensor concat(const Tensor& a, const Tensor& b) {
    Tensor out(a.c + b.c, a.h, a.w);
    std::copy(a.v.begin(), a.v.end(), out.v.begin());
    std::copy(b.v.begin(), b.v.end(), out.v.begin() + static_cast<std::ptrdiff_t>(a.v.size()));
    return out;
  }

  Tensor run(const Tensor& input, int c1, int depth) {
    pos_ = 0;
    std::vector<Tensor> skips;
    Tensor x = input;
    for (int l = 0; l < depth; ++l) {
      if (l > 0) x = pool(x);
      x = conv(x, c1 << l, 3, true);
      x = conv(x, c1 << l, 3, true);
      skips.push_back(x);
    }
    for (int l = depth - 2; l >= 0; --l) {
      x = up(x, c1 << l);
      x = concat(skips[static_cast<std::size_t>(l)], x);
      x = conv(x, c1 << l, 3, true);
      x = conv(x, c1 << l, 3, true);
    }
    x = conv(x, 1, 1, false);
    for (int y = 0; y < x.h; ++y)
      for (int xx = 0; xx < x.w; ++xx)
        if (y == 0 || xx == 0 || y == x.h - 1 || xx == x.w - 1) x.at(0, y, xx) = 0.0;
    return x;
  }

  std::size_t consumed() const { return pos_; }

 private:
  const std::vector<double>& p_;
  std::size_t pos_ = 0;
};

}  // namespace oracle
