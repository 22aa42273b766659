#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nfce/tensor.hpp"

namespace nfce::ad {
namespace {

[[noreturn]] void shape_error(const std::string& op, const std::string& detail) {
  throw std::invalid_argument(op + ": " + detail);
}

template <typename T>
bool wants_grad(const Node<T>& n, std::size_t i) {
  return n.inputs[i]->requires_grad;
}

// c[m, n] += op(a)[m, k] * op(b)[k, n]; a stored [k, m] when ta, b stored [n, k] when tb.
template <typename T>
void gemm_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t n, std::size_t k, bool ta, bool tb) {
  if (!tb) {
    for (std::size_t i = 0; i < m; ++i) {
      T* crow = c + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const T av = ta ? a[p * m + i] : a[i * k + p];
        const T* brow = b + p * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
    return;
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const T* bcol = b + j * k;
      T acc = T(0);
      if (ta) {
        for (std::size_t p = 0; p < k; ++p) acc += a[p * m + i] * bcol[p];
      } else {
        const T* arow = a + i * k;
        for (std::size_t p = 0; p < k; ++p) acc += arow[p] * bcol[p];
      }
      c[i * n + j] += acc;
    }
  }
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape())
    shape_error(op, "shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}

struct ConvDims {
  std::size_t h, w, cin, ho, wo, cout, k, cig, cog, groups, stride, pad;
};

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias, int stride, int groups) {
  if (x.rank() != 3) shape_error("conv2d", "input must be [H, W, C], got " + shape_string(x.shape()));
  if (kernel.rank() != 4) shape_error("conv2d", "kernel must be [k, k, Cin/groups, Cout]");
  if (stride < 1 || groups < 1) shape_error("conv2d", "stride and groups must be >= 1");
  ConvDims d{};
  d.h = x.dim(0);
  d.w = x.dim(1);
  d.cin = x.dim(2);
  d.k = kernel.dim(0);
  d.cout = kernel.dim(3);
  d.groups = static_cast<std::size_t>(groups);
  d.stride = static_cast<std::size_t>(stride);
  if (kernel.dim(1) != d.k || d.k % 2 == 0) shape_error("conv2d", "kernel must be square with odd size");
  if (d.cin % d.groups || d.cout % d.groups) shape_error("conv2d", "features not divisible by groups");
  d.cig = d.cin / d.groups;
  d.cog = d.cout / d.groups;
  if (kernel.dim(2) != d.cig)
    shape_error("conv2d", "kernel expects " + std::to_string(kernel.dim(2)) + " input features per group, input has " +
                              std::to_string(d.cig));
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != d.cout)) shape_error("conv2d", "bias must be [Cout]");
  d.ho = (d.h + d.stride - 1) / d.stride;
  d.wo = (d.w + d.stride - 1) / d.stride;
  d.pad = d.k / 2;

  const T* xd = x.data().data();
  const T* wd = kernel.data().data();
  std::vector<T> y(d.ho * d.wo * d.cout, T(0));
  const bool depthwise = d.cig == 1 && d.cog == 1;

  // Visits every (output position, kernel tap) pair with a valid input position.
  auto for_each_tap = [d](auto&& fn) {
    for (std::size_t oh = 0; oh < d.ho; ++oh)
      for (std::size_t ow = 0; ow < d.wo; ++ow)
        for (std::size_t kh = 0; kh < d.k; ++kh) {
          const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * d.stride + kh) - static_cast<std::ptrdiff_t>(d.pad);
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(d.h)) continue;
          for (std::size_t kw = 0; kw < d.k; ++kw) {
            const std::ptrdiff_t iw =
                static_cast<std::ptrdiff_t>(ow * d.stride + kw) - static_cast<std::ptrdiff_t>(d.pad);
            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(d.w)) continue;
            fn((oh * d.wo + ow) * d.cout, (static_cast<std::size_t>(ih) * d.w + static_cast<std::size_t>(iw)) * d.cin,
               (kh * d.k + kw) * d.cig * d.cout);
          }
        }
  };

  if (bias.defined()) {
    const T* bd = bias.data().data();
    for (std::size_t p = 0; p < d.ho * d.wo; ++p) std::copy(bd, bd + d.cout, y.begin() + p * d.cout);
  }
  for_each_tap([&](std::size_t yo, std::size_t xo, std::size_t wo) {
    T* out = y.data() + yo;
    const T* in = xd + xo;
    const T* wk = wd + wo;
    if (depthwise) {
      for (std::size_t c = 0; c < d.cout; ++c) out[c] += in[c] * wk[c];
      return;
    }
    for (std::size_t g = 0; g < d.groups; ++g)
      for (std::size_t ci = 0; ci < d.cig; ++ci) {
        const T xv = in[g * d.cig + ci];
        const T* wrow = wk + ci * d.cout + g * d.cog;
        T* orow = out + g * d.cog;
        for (std::size_t co = 0; co < d.cog; ++co) orow[co] += xv * wrow[co];
      }
  });

  std::vector<Tensor<T>> inputs{x, kernel};
  if (bias.defined()) inputs.push_back(bias);
  return make_result<T>({d.ho, d.wo, d.cout}, std::move(y), std::move(inputs),
                        [d, depthwise, for_each_tap](Node<T>& self) {
                          const T* dy = self.grad.data();
                          const auto& xn = *self.inputs[0];
                          const auto& wn = *self.inputs[1];
                          T* dx = wants_grad(self, 0) ? self.inputs[0]->ensure_grad().data() : nullptr;
                          T* dw = wants_grad(self, 1) ? self.inputs[1]->ensure_grad().data() : nullptr;
                          for_each_tap([&](std::size_t yo, std::size_t xo, std::size_t wo) {
                            const T* g_out = dy + yo;
                            const T* in = xn.data.data() + xo;
                            const T* wk = wn.data.data() + wo;
                            if (depthwise) {
                              if (dx)
                                for (std::size_t c = 0; c < d.cout; ++c) dx[xo + c] += g_out[c] * wk[c];
                              if (dw)
                                for (std::size_t c = 0; c < d.cout; ++c) dw[wo + c] += g_out[c] * in[c];
                              return;
                            }
                            for (std::size_t g = 0; g < d.groups; ++g)
                              for (std::size_t ci = 0; ci < d.cig; ++ci) {
                                const T* wrow = wk + ci * d.cout + g * d.cog;
                                const T* grow = g_out + g * d.cog;
                                if (dx) {
                                  T acc = T(0);
                                  for (std::size_t co = 0; co < d.cog; ++co) acc += grow[co] * wrow[co];
                                  dx[xo + g * d.cig + ci] += acc;
                                }
                                if (dw) {
                                  const T xv = in[g * d.cig + ci];
                                  T* dwrow = dw + wo + ci * d.cout + g * d.cog;
                                  for (std::size_t co = 0; co < d.cog; ++co) dwrow[co] += xv * grow[co];
                                }
                              }
                          });
                          if (self.inputs.size() > 2 && wants_grad(self, 2)) {
                            T* db = self.inputs[2]->ensure_grad().data();
                            for (std::size_t p = 0; p < d.ho * d.wo; ++p)
                              for (std::size_t c = 0; c < d.cout; ++c) db[c] += dy[p * d.cout + c];
                          }
                        });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps) {
  if (x.rank() == 0) shape_error("layer_norm", "scalar input");
  if (!(eps > T(0))) shape_error("layer_norm", "eps must be positive");
  const std::size_t c = x.shape().back();
  if (gain.numel() != c || bias.numel() != c) shape_error("layer_norm", "gain/bias must match the feature axis");
  const std::size_t positions = x.numel() / c;
  const T* xd = x.data().data();
  const T* gd = gain.data().data();
  const T* bd = bias.data().data();

  std::vector<T> y(x.numel());
  std::vector<T> xhat(x.numel());
  std::vector<T> rstd(positions);
  for (std::size_t p = 0; p < positions; ++p) {
    const T* row = xd + p * c;
    T mean = T(0);
    for (std::size_t i = 0; i < c; ++i) mean += row[i];
    mean /= static_cast<T>(c);
    T var = T(0);
    for (std::size_t i = 0; i < c; ++i) var += (row[i] - mean) * (row[i] - mean);
    var /= static_cast<T>(c);
    rstd[p] = T(1) / std::sqrt(var + eps);
    for (std::size_t i = 0; i < c; ++i) {
      xhat[p * c + i] = (row[i] - mean) * rstd[p];
      y[p * c + i] = xhat[p * c + i] * gd[i] + bd[i];
    }
  }
  return make_result<T>(x.shape(), std::move(y), {x, gain, bias},
                        [c, positions, xhat = std::move(xhat), rstd = std::move(rstd)](Node<T>& self) {
                          const T* dy = self.grad.data();
                          const T* g = self.inputs[1]->data.data();
                          if (wants_grad(self, 0)) {
                            T* dx = self.inputs[0]->ensure_grad().data();
                            for (std::size_t p = 0; p < positions; ++p) {
                              T mean_dxhat = T(0);
                              T mean_dxhat_xhat = T(0);
                              for (std::size_t i = 0; i < c; ++i) {
                                const T dxh = dy[p * c + i] * g[i];
                                mean_dxhat += dxh;
                                mean_dxhat_xhat += dxh * xhat[p * c + i];
                              }
                              mean_dxhat /= static_cast<T>(c);
                              mean_dxhat_xhat /= static_cast<T>(c);
                              for (std::size_t i = 0; i < c; ++i) {
                                const T dxh = dy[p * c + i] * g[i];
                                dx[p * c + i] += rstd[p] * (dxh - mean_dxhat - xhat[p * c + i] * mean_dxhat_xhat);
                              }
                            }
                          }
                          if (wants_grad(self, 1)) {
                            T* dg = self.inputs[1]->ensure_grad().data();
                            for (std::size_t p = 0; p < positions; ++p)
                              for (std::size_t i = 0; i < c; ++i) dg[i] += dy[p * c + i] * xhat[p * c + i];
                          }
                          if (wants_grad(self, 2)) {
                            T* db = self.inputs[2]->ensure_grad().data();
                            for (std::size_t p = 0; p < positions; ++p)
                              for (std::size_t i = 0; i < c; ++i) db[i] += dy[p * c + i];
                          }
                        });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  if (axis >= x.rank()) shape_error("softmax", "axis " + std::to_string(axis) + " out of range");
  std::size_t outer = 1;
  std::size_t inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
  for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
  const std::size_t len = x.dim(axis);
  const T* xd = x.data().data();
  std::vector<T> y(x.numel());
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      T mx = xd[base];
      for (std::size_t i = 1; i < len; ++i) mx = std::max(mx, xd[base + i * inner]);
      T total = T(0);
      for (std::size_t i = 0; i < len; ++i) {
        const T e = std::exp(xd[base + i * inner] - mx);
        y[base + i * inner] = e;
        total += e;
      }
      for (std::size_t i = 0; i < len; ++i) y[base + i * inner] /= total;
    }
  auto result = make_result<T>(x.shape(), std::move(y), {x}, nullptr);
  if (result.requires_grad()) {
    result.node()->backward_fn = [outer, inner, len](Node<T>& self) {
      const T* dy = self.grad.data();
      const T* yd = self.data.data();
      T* dx = self.inputs[0]->ensure_grad().data();
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t in = 0; in < inner; ++in) {
          const std::size_t base = o * len * inner + in;
          T dot = T(0);
          for (std::size_t i = 0; i < len; ++i) dot += dy[base + i * inner] * yd[base + i * inner];
          for (std::size_t i = 0; i < len; ++i)
            dx[base + i * inner] += yd[base + i * inner] * (dy[base + i * inner] - dot);
        }
    };
  }
  return result;
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  const T* xd = x.data().data();
  std::vector<T> y(x.numel());
  const T inv_sqrt2 = T(0.70710678118654752440);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = xd[i] * T(0.5) * (T(1) + std::erf(xd[i] * inv_sqrt2));
  return make_result<T>(x.shape(), std::move(y), {x}, [inv_sqrt2](Node<T>& self) {
    const T* dy = self.grad.data();
    const T* xv = self.inputs[0]->data.data();
    T* dx = self.inputs[0]->ensure_grad().data();
    const T inv_sqrt_2pi = T(0.39894228040143267794);
    for (std::size_t i = 0; i < self.data.size(); ++i) {
      const T cdf = T(0.5) * (T(1) + std::erf(xv[i] * inv_sqrt2));
      const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * xv[i] * xv[i]);
      dx[i] += dy[i] * (cdf + xv[i] * pdf);
    }
  });
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool ta, bool tb) {
  if (a.rank() != 2 || b.rank() != 2) shape_error("matmul", "operands must be 2-D");
  const std::size_t m = ta ? a.dim(1) : a.dim(0);
  const std::size_t k = ta ? a.dim(0) : a.dim(1);
  const std::size_t kb = tb ? b.dim(1) : b.dim(0);
  const std::size_t n = tb ? b.dim(0) : b.dim(1);
  if (k != kb)
    shape_error("matmul", "inner extents differ: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  std::vector<T> c(m * n, T(0));
  gemm_acc(a.data().data(), b.data().data(), c.data(), m, n, k, ta, tb);
  return make_result<T>({m, n}, std::move(c), {a, b}, [m, n, k, ta, tb](Node<T>& self) {
    const T* dc = self.grad.data();
    const T* ad = self.inputs[0]->data.data();
    const T* bd = self.inputs[1]->data.data();
    if (wants_grad(self, 0)) {
      T* da = self.inputs[0]->ensure_grad().data();
      if (!ta)
        gemm_acc(dc, bd, da, m, k, n, false, !tb);  // dC op(B)^T
      else
        gemm_acc(bd, dc, da, k, m, n, tb, true);  // op(B) dC^T
    }
    if (wants_grad(self, 1)) {
      T* db = self.inputs[1]->ensure_grad().data();
      if (!tb)
        gemm_acc(ad, dc, db, k, n, m, !ta, false);  // op(A)^T dC
      else
        gemm_acc(dc, ad, db, n, k, m, true, ta);  // dC^T op(A)
    }
  });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> y(a.numel());
  const T* ad = a.data().data();
  const T* bd = b.data().data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = ad[i] + bd[i];
  return make_result<T>(a.shape(), std::move(y), {a, b}, [](Node<T>& self) {
    const T* dy = self.grad.data();
    for (std::size_t s = 0; s < 2; ++s) {
      if (!wants_grad(self, s)) continue;
      T* dx = self.inputs[s]->ensure_grad().data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] += dy[i];
    }
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  std::vector<T> y(a.numel());
  const T* ad = a.data().data();
  const T* bd = b.data().data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = ad[i] - bd[i];
  return make_result<T>(a.shape(), std::move(y), {a, b}, [](Node<T>& self) {
    const T* dy = self.grad.data();
    if (wants_grad(self, 0)) {
      T* dx = self.inputs[0]->ensure_grad().data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] += dy[i];
    }
    if (wants_grad(self, 1)) {
      T* dx = self.inputs[1]->ensure_grad().data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] -= dy[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> y(a.numel());
  const T* ad = a.data().data();
  const T* bd = b.data().data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = ad[i] * bd[i];
  return make_result<T>(a.shape(), std::move(y), {a, b}, [](Node<T>& self) {
    const T* dy = self.grad.data();
    const T* av = self.inputs[0]->data.data();
    const T* bv = self.inputs[1]->data.data();
    if (wants_grad(self, 0)) {
      T* dx = self.inputs[0]->ensure_grad().data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] += dy[i] * bv[i];
    }
    if (wants_grad(self, 1)) {
      T* dx = self.inputs[1]->ensure_grad().data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] += dy[i] * av[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> y(a.data().begin(), a.data().end());
  for (auto& v : y) v *= factor;
  return make_result<T>(a.shape(), std::move(y), {a}, [factor](Node<T>& self) {
    T* dx = self.inputs[0]->ensure_grad().data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] += factor * self.grad[i];
  });
}

template <typename T>
Tensor<T> div_scalar(const Tensor<T>& a, const Tensor<T>& s) {
  if (s.numel() != 1) shape_error("div_scalar", "divisor must have one element");
  const T sv = s.data()[0];
  std::vector<T> y(a.data().begin(), a.data().end());
  for (auto& v : y) v /= sv;
  return make_result<T>(a.shape(), std::move(y), {a, s}, [](Node<T>& self) {
    const T* dy = self.grad.data();
    const T sval = self.inputs[1]->data[0];
    if (wants_grad(self, 0)) {
      T* dx = self.inputs[0]->ensure_grad().data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] += dy[i] / sval;
    }
    if (wants_grad(self, 1)) {
      // d(a/s)/ds = -a/s^2 = -y/s
      T acc = T(0);
      for (std::size_t i = 0; i < self.grad.size(); ++i) acc += dy[i] * self.data[i];
      self.inputs[1]->ensure_grad()[0] -= acc / sval;
    }
  });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (shape_numel(shape) != x.numel())
    shape_error("reshape", "cannot view " + shape_string(x.shape()) + " as " + shape_string(shape));
  return make_result<T>(std::move(shape), std::vector<T>(x.data().begin(), x.data().end()), {x}, [](Node<T>& self) {
    T* dx = self.inputs[0]->ensure_grad().data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> slice_last(const Tensor<T>& x, std::size_t begin, std::size_t count) {
  const std::size_t c = x.shape().back();
  if (begin + count > c || count == 0) shape_error("slice_last", "feature range out of bounds");
  const std::size_t rows = x.numel() / c;
  std::vector<T> y(rows * count);
  const T* xd = x.data().data();
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(xd + r * c + begin, count, y.begin() + r * count);
  Shape shape = x.shape();
  shape.back() = count;
  return make_result<T>(std::move(shape), std::move(y), {x}, [rows, c, begin, count](Node<T>& self) {
    T* dx = self.inputs[0]->ensure_grad().data();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t i = 0; i < count; ++i) dx[r * c + begin + i] += self.grad[r * count + i];
  });
}

template <typename T>
Tensor<T> concat_last(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) shape_error("concat_last", "no inputs");
  Shape lead = parts.front().shape();
  lead.pop_back();
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    Shape l = p.shape();
    const std::size_t w = l.back();
    l.pop_back();
    if (l != lead) shape_error("concat_last", "leading extents differ");
    widths.push_back(w);
    total += w;
  }
  const std::size_t rows = shape_numel(lead);
  std::vector<T> y(rows * total);
  std::size_t offset = 0;
  for (std::size_t s = 0; s < parts.size(); ++s) {
    const T* pd = parts[s].data().data();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(pd + r * widths[s], widths[s], y.begin() + r * total + offset);
    offset += widths[s];
  }
  Shape shape = lead;
  shape.push_back(total);
  return make_result<T>(std::move(shape), std::move(y), parts, [rows, total, widths](Node<T>& self) {
    std::size_t off = 0;
    for (std::size_t s = 0; s < widths.size(); ++s) {
      if (wants_grad(self, s)) {
        T* dx = self.inputs[s]->ensure_grad().data();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t i = 0; i < widths[s]; ++i) dx[r * widths[s] + i] += self.grad[r * total + off + i];
      }
      off += widths[s];
    }
  });
}

namespace {

// Index map shared by rows_to_features / features_to_rows. For the split
// layout [H/2, W, 2C] and merged layout [H, W, C], returns the merged index
// of split element (h, w, f).
struct RowSplit {
  std::size_t half_h, w, c;
  std::size_t merged(std::size_t h, std::size_t wi, std::size_t f) const {
    const std::size_t part = f / c;  // 0: upper rows, 1: lower rows
    return ((part * half_h + h) * w + wi) * c + (f % c);
  }
  std::size_t split(std::size_t h, std::size_t wi, std::size_t f) const { return (h * w + wi) * 2 * c + f; }
};

template <typename T>
Tensor<T> permute_rows(const Tensor<T>& x, const RowSplit& rs, bool to_split, Shape out_shape) {
  std::vector<T> y(x.numel());
  std::vector<std::size_t> map(x.numel());  // map[out] = in
  for (std::size_t h = 0; h < rs.half_h; ++h)
    for (std::size_t wi = 0; wi < rs.w; ++wi)
      for (std::size_t f = 0; f < 2 * rs.c; ++f) {
        const std::size_t s = rs.split(h, wi, f);
        const std::size_t m = rs.merged(h, wi, f);
        if (to_split)
          map[s] = m;
        else
          map[m] = s;
      }
  const T* xd = x.data().data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = xd[map[i]];
  return make_result<T>(std::move(out_shape), std::move(y), {x}, [map = std::move(map)](Node<T>& self) {
    T* dx = self.inputs[0]->ensure_grad().data();
    for (std::size_t i = 0; i < map.size(); ++i) dx[map[i]] += self.grad[i];
  });
}

}  // namespace

template <typename T>
Tensor<T> rows_to_features(const Tensor<T>& x) {
  if (x.rank() != 3) shape_error("rows_to_features", "input must be [H, W, C]");
  if (x.dim(0) % 2) shape_error("rows_to_features", "receive dimension H=" + std::to_string(x.dim(0)) + " is odd");
  const RowSplit rs{x.dim(0) / 2, x.dim(1), x.dim(2)};
  return permute_rows(x, rs, true, {rs.half_h, rs.w, 2 * rs.c});
}

template <typename T>
Tensor<T> features_to_rows(const Tensor<T>& x) {
  if (x.rank() != 3) shape_error("features_to_rows", "input must be [H, W, C]");
  if (x.dim(2) % 2) shape_error("features_to_rows", "feature count C=" + std::to_string(x.dim(2)) + " is odd");
  const RowSplit rs{x.dim(0), x.dim(1), x.dim(2) / 2};
  return permute_rows(x, rs, false, {2 * rs.half_h, rs.w, rs.c});
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T total = T(0);
  for (T v : x.data()) total += v;
  return make_result<T>({1}, {total}, {x}, [](Node<T>& self) {
    const T g = self.grad[0];
    for (T& v : self.inputs[0]->ensure_grad()) v += g;
  });
}

template <typename T>
Tensor<T> mse_loss(const Tensor<T>& prediction, const Tensor<T>& target) {
  require_same_shape(prediction, target, "mse_loss");
  const std::size_t n = prediction.numel();
  const T* p = prediction.data().data();
  const T* t = target.data().data();
  T total = T(0);
  for (std::size_t i = 0; i < n; ++i) total += (p[i] - t[i]) * (p[i] - t[i]);
  return make_result<T>({1}, {total / static_cast<T>(n)}, {prediction, target}, [n](Node<T>& self) {
    const T g = self.grad[0] * T(2) / static_cast<T>(n);
    const T* pv = self.inputs[0]->data.data();
    const T* tv = self.inputs[1]->data.data();
    if (wants_grad(self, 0)) {
      T* dp = self.inputs[0]->ensure_grad().data();
      for (std::size_t i = 0; i < n; ++i) dp[i] += g * (pv[i] - tv[i]);
    }
    if (wants_grad(self, 1)) {
      T* dt = self.inputs[1]->ensure_grad().data();
      for (std::size_t i = 0; i < n; ++i) dt[i] -= g * (pv[i] - tv[i]);
    }
  });
}

#define NFCE_INSTANTIATE_OPS(T)                                                                  \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int);     \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);        \
  template Tensor<T> softmax(const Tensor<T>&, std::size_t);                                     \
  template Tensor<T> gelu(const Tensor<T>&);                                                     \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&, bool, bool);                     \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> scale(const Tensor<T>&, T);                                                 \
  template Tensor<T> div_scalar(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                           \
  template Tensor<T> slice_last(const Tensor<T>&, std::size_t, std::size_t);                     \
  template Tensor<T> concat_last(const std::vector<Tensor<T>>&);                                 \
  template Tensor<T> rows_to_features(const Tensor<T>&);                                         \
  template Tensor<T> features_to_rows(const Tensor<T>&);                                         \
  template Tensor<T> sum(const Tensor<T>&);                                                      \
  template Tensor<T> mse_loss(const Tensor<T>&, const Tensor<T>&);

NFCE_INSTANTIATE_OPS(float)
NFCE_INSTANTIATE_OPS(double)

}  // namespace nfce::ad
