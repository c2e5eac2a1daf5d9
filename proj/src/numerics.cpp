#include "ordsr/numerics.hpp"

#include <Eigen/Core>
#include <string>

#include "ordsr/errors.hpp"

namespace ordsr::numerics {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using Map = Eigen::Map<RowMatrix>;

struct Geometry {
  std::size_t batch, channels, in_h, in_w, k_h, k_w, out_h, out_w;
  int stride, pad;

  std::size_t patch() const { return channels * k_h * k_w; }
  std::size_t positions() const { return out_h * out_w; }
};

std::size_t output_extent(std::size_t in, std::size_t k, int stride, int pad, const char* axis) {
  const long padded = static_cast<long>(in) + 2L * pad;
  if (padded < static_cast<long>(k)) {
    throw DimensionError(std::string("conv2d: kernel ") + axis + " " + std::to_string(k) +
                         " exceeds padded input " + axis + " " + std::to_string(padded));
  }
  if ((padded - static_cast<long>(k)) % stride != 0) {
    throw DimensionError(std::string("conv2d: input ") + axis + " " + std::to_string(in) +
                         " with pad " + std::to_string(pad) + " and kernel " + std::to_string(k) +
                         " is not divisible by stride " + std::to_string(stride));
  }
  return static_cast<std::size_t>((padded - static_cast<long>(k)) / stride + 1);
}

void check_stride_pad(int stride, int pad) {
  if (stride < 1) throw ParameterError("conv2d: stride must be positive");
  if (pad < 0) throw ParameterError("conv2d: pad must be non-negative");
}

Geometry conv_geometry(const Shape& in, const Shape& f, int stride, int pad) {
  check_stride_pad(stride, pad);
  if (in.c != f.c) {
    throw DimensionError("conv2d: input channels " + std::to_string(in.c) +
                         " != filter input channels " + std::to_string(f.c));
  }
  return Geometry{in.n, in.c, in.h, in.w, f.h, f.w,
                  output_extent(in.h, f.h, stride, pad, "height"),
                  output_extent(in.w, f.w, stride, pad, "width"), stride, pad};
}

// Column matrix of shape (C*kH*kW, N*outH*outW).
RowMatrix im2col(const Tensor& input, const Geometry& g) {
  const std::size_t positions = g.positions();
  RowMatrix cols = RowMatrix::Zero(static_cast<Eigen::Index>(g.patch()),
                                   static_cast<Eigen::Index>(g.batch * positions));
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ki = 0; ki < g.k_h; ++ki) {
      for (std::size_t kj = 0; kj < g.k_w; ++kj) {
        const std::size_t row = (c * g.k_h + ki) * g.k_w + kj;
        double* dst = cols.row(static_cast<Eigen::Index>(row)).data();
        for (std::size_t n = 0; n < g.batch; ++n) {
          for (std::size_t oy = 0; oy < g.out_h; ++oy) {
            const long iy = static_cast<long>(oy) * g.stride + static_cast<long>(ki) - g.pad;
            if (iy < 0 || iy >= static_cast<long>(g.in_h)) continue;
            for (std::size_t ox = 0; ox < g.out_w; ++ox) {
              const long ix = static_cast<long>(ox) * g.stride + static_cast<long>(kj) - g.pad;
              if (ix < 0 || ix >= static_cast<long>(g.in_w)) continue;
              dst[n * positions + oy * g.out_w + ox] =
                  input.at(n, c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
            }
          }
        }
      }
    }
  }
  return cols;
}

// Scatter-add of a column matrix back into an (N, C, H, W) image; inverse layout of im2col.
Tensor col2im(const RowMatrix& cols, const Geometry& g) {
  Tensor out(Shape{g.batch, g.channels, g.in_h, g.in_w});
  const std::size_t positions = g.positions();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ki = 0; ki < g.k_h; ++ki) {
      for (std::size_t kj = 0; kj < g.k_w; ++kj) {
        const std::size_t row = (c * g.k_h + ki) * g.k_w + kj;
        const double* src = cols.row(static_cast<Eigen::Index>(row)).data();
        for (std::size_t n = 0; n < g.batch; ++n) {
          for (std::size_t oy = 0; oy < g.out_h; ++oy) {
            const long iy = static_cast<long>(oy) * g.stride + static_cast<long>(ki) - g.pad;
            if (iy < 0 || iy >= static_cast<long>(g.in_h)) continue;
            for (std::size_t ox = 0; ox < g.out_w; ++ox) {
              const long ix = static_cast<long>(ox) * g.stride + static_cast<long>(kj) - g.pad;
              if (ix < 0 || ix >= static_cast<long>(g.in_w)) continue;
              out.at(n, c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) +=
                  src[n * positions + oy * g.out_w + ox];
            }
          }
        }
      }
    }
  }
  return out;
}

// (N, C, oH, oW) tensor -> (C, N*oH*oW) matrix.
RowMatrix to_channel_major(const Tensor& t) {
  const Shape& s = t.shape();
  const std::size_t positions = s.h * s.w;
  RowMatrix m(static_cast<Eigen::Index>(s.c), static_cast<Eigen::Index>(s.n * positions));
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const double* src = t.raw() + t.offset(n, c, 0, 0);
      std::copy(src, src + positions, m.row(static_cast<Eigen::Index>(c)).data() + n * positions);
    }
  }
  return m;
}

Tensor from_channel_major(const RowMatrix& m, const Shape& s) {
  Tensor t(s);
  const std::size_t positions = s.h * s.w;
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const double* src = m.row(static_cast<Eigen::Index>(c)).data() + n * positions;
      std::copy(src, src + positions, t.raw() + t.offset(n, c, 0, 0));
    }
  }
  return t;
}

ConstMap filter_matrix(const Tensor& filters) {
  const Shape& f = filters.shape();
  return ConstMap(filters.raw(), static_cast<Eigen::Index>(f.n),
                  static_cast<Eigen::Index>(f.c * f.h * f.w));
}

// Geometry of the convolution whose adjoint is transposed_conv2d(input, filters, stride).
Geometry transposed_geometry(const Shape& in, const Shape& f, int stride) {
  check_stride_pad(stride, 0);
  if (in.c != f.n) {
    throw DimensionError("transposed_conv2d: input channels " + std::to_string(in.c) +
                         " != filter input channels " + std::to_string(f.n));
  }
  const std::size_t out_h = (in.h - 1) * static_cast<std::size_t>(stride) + f.h;
  const std::size_t out_w = (in.w - 1) * static_cast<std::size_t>(stride) + f.w;
  if (in.h == 0 || in.w == 0) throw DimensionError("transposed_conv2d: empty spatial input");
  return Geometry{in.n, f.c, out_h, out_w, f.h, f.w, in.h, in.w, stride, 0};
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& filters, int stride, int pad) {
  const Geometry g = conv_geometry(input.shape(), filters.shape(), stride, pad);
  const RowMatrix cols = im2col(input, g);
  const RowMatrix out = filter_matrix(filters) * cols;
  return from_channel_major(out, Shape{g.batch, filters.shape().n, g.out_h, g.out_w});
}

ConvGrads conv2d_backward(const Tensor& input, const Tensor& filters, int stride, int pad,
                          const Tensor& upstream) {
  const Geometry g = conv_geometry(input.shape(), filters.shape(), stride, pad);
  const Shape expected{g.batch, filters.shape().n, g.out_h, g.out_w};
  if (!(upstream.shape() == expected)) {
    throw DimensionError("conv2d_backward: upstream shape " + upstream.shape().str() +
                         " != output shape " + expected.str());
  }
  const RowMatrix cols = im2col(input, g);
  const RowMatrix grad_out = to_channel_major(upstream);

  ConvGrads grads{Tensor(), Tensor::zeros_like(filters)};
  Map(grads.filters.raw(), static_cast<Eigen::Index>(filters.shape().n),
      static_cast<Eigen::Index>(g.patch())) = grad_out * cols.transpose();
  const RowMatrix grad_cols = filter_matrix(filters).transpose() * grad_out;
  grads.input = col2im(grad_cols, g);
  return grads;
}

Tensor transposed_conv2d(const Tensor& input, const Tensor& filters, int stride) {
  const Geometry g = transposed_geometry(input.shape(), filters.shape(), stride);
  const RowMatrix cols = filter_matrix(filters).transpose() * to_channel_major(input);
  return col2im(cols, g);
}

ConvGrads transposed_conv2d_backward(const Tensor& input, const Tensor& filters, int stride,
                                     const Tensor& upstream) {
  const Geometry g = transposed_geometry(input.shape(), filters.shape(), stride);
  const Shape expected{g.batch, g.channels, g.in_h, g.in_w};
  if (!(upstream.shape() == expected)) {
    throw DimensionError("transposed_conv2d_backward: upstream shape " + upstream.shape().str() +
                         " != output shape " + expected.str());
  }
  const RowMatrix up_cols = im2col(upstream, g);
  ConvGrads grads{Tensor(), Tensor::zeros_like(filters)};
  Map(grads.filters.raw(), static_cast<Eigen::Index>(filters.shape().n),
      static_cast<Eigen::Index>(g.patch())) = to_channel_major(input) * up_cols.transpose();
  grads.input = from_channel_major(filter_matrix(filters) * up_cols, input.shape());
  return grads;
}

Tensor relu(const Tensor& input) {
  Tensor out = input;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& upstream) {
  require_same_shape(input, upstream, "relu_backward");
  Tensor out = upstream;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(input[i] > 0.0)) out[i] = 0.0;
  }
  return out;
}

void add_channel_bias(Tensor& x, const Tensor& bias) {
  const Shape& s = x.shape();
  if (bias.size() != s.c) {
    throw DimensionError("add_channel_bias: bias length " + std::to_string(bias.size()) +
                         " != channels " + std::to_string(s.c));
  }
  const std::size_t positions = s.h * s.w;
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      double* p = x.raw() + x.offset(n, c, 0, 0);
      for (std::size_t i = 0; i < positions; ++i) p[i] += bias[c];
    }
  }
}

Tensor channel_bias_backward(const Tensor& upstream) {
  const Shape& s = upstream.shape();
  Tensor grad(Shape{1, s.c, 1, 1});
  const std::size_t positions = s.h * s.w;
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const double* p = upstream.raw() + upstream.offset(n, c, 0, 0);
      for (std::size_t i = 0; i < positions; ++i) grad[c] += p[i];
    }
  }
  return grad;
}

}  // namespace ordsr::numerics
