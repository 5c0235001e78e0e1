#include "ibw/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ibw/errors.hpp"
#include "ibw/kernels.hpp"

namespace ibw {

std::size_t shape_size(const Tensor::Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_string(const Tensor::Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size())
    throw DimensionError("tensor shape " + shape_string(shape_) + " does not match " +
                         std::to_string(data_.size()) + " values");
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor(Shape{values.size()}, std::vector<double>(values));
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(Shape{n}, std::move(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor(Shape{r, c}, std::move(data));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(Shape{n, n});
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size())
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_string(shape_));
  return shape_[axis];
}

std::size_t Tensor::row_size() const {
  if (shape_.empty()) return 1;
  std::size_t n = 1;
  for (std::size_t i = 1; i < shape_.size(); ++i) n *= shape_[i];
  return n;
}

std::span<double> Tensor::row(std::size_t r) {
  const std::size_t w = row_size();
  return std::span<double>(data_).subspan(r * w, w);
}

std::span<const double> Tensor::row(std::size_t r) const {
  const std::size_t w = row_size();
  return std::span<const double>(data_).subspan(r * w, w);
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size())
    throw DimensionError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  return Tensor(std::move(shape), data_);
}

Tensor Tensor::slice_rows(std::size_t begin, std::size_t end) const {
  if (shape_.empty() || begin > end || end > shape_[0])
    throw DimensionError("row slice out of range for " + shape_string(shape_));
  const std::size_t w = row_size();
  Shape s = shape_;
  s[0] = end - begin;
  return Tensor(std::move(s), std::vector<double>(data_.begin() + static_cast<std::ptrdiff_t>(begin * w),
                                                  data_.begin() + static_cast<std::ptrdiff_t>(end * w)));
}

Tensor Tensor::gather_rows(std::span<const std::size_t> rows) const {
  if (shape_.empty()) throw DimensionError("gather_rows needs rank >= 1");
  const std::size_t w = row_size();
  Shape s = shape_;
  s[0] = rows.size();
  Tensor out(std::move(s));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= shape_[0]) throw DimensionError("gather_rows index out of range");
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(rows[i] * w), w,
                out.data_.begin() + static_cast<std::ptrdiff_t>(i * w));
  }
  return out;
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

// ---- elementwise ----

namespace {

double apply(UnaryOp op, double v) {
  switch (op) {
    case UnaryOp::Identity: return v;
    case UnaryOp::Negate: return -v;
    case UnaryOp::Square: return v * v;
    case UnaryOp::Sqrt: return std::sqrt(v);
    case UnaryOp::Exp: return std::exp(v);
    case UnaryOp::Log: return std::log(v);
    case UnaryOp::Abs: return std::fabs(v);
    case UnaryOp::Relu: return v > 0.0 ? v : 0.0;
  }
  return v;
}

double apply(BinaryOp op, double a, double b) {
  switch (op) {
    case BinaryOp::Add: return a + b;
    case BinaryOp::Sub: return a - b;
    case BinaryOp::Mul: return a * b;
    case BinaryOp::Div: return a / b;
    case BinaryOp::Max: return std::max(a, b);
    case BinaryOp::Min: return std::min(a, b);
  }
  return a;
}

}  // namespace

Tensor map(UnaryOp op, const Tensor& t) {
  Tensor out(t.shape());
  auto src = t.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = apply(op, src[i]);
  return out;
}

Tensor map(const Tensor& t, const std::function<double(double)>& f) {
  Tensor out(t.shape());
  auto src = t.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

Tensor zip(BinaryOp op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = apply(op, a[i], b[i]);
    return out;
  }
  if (b.size() == 1) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = apply(op, a[i], b[0]);
    return out;
  }
  if (a.size() == 1) {
    Tensor out(b.shape());
    for (std::size_t i = 0; i < b.size(); ++i) out[i] = apply(op, a[0], b[i]);
    return out;
  }
  throw DimensionError("cannot combine " + shape_string(a.shape()) + " with " + shape_string(b.shape()));
}

double reduce_all(Reduction op, const Tensor& t) {
  auto d = t.data();
  switch (op) {
    case Reduction::Sum: {
      double s = 0.0;
      for (double v : d) s += v;
      return s;
    }
    case Reduction::Mean: {
      if (d.empty()) throw DimensionError("mean of an empty tensor");
      double s = 0.0;
      for (double v : d) s += v;
      return s / static_cast<double>(d.size());
    }
    case Reduction::Max: {
      if (d.empty()) throw DimensionError("max of an empty tensor");
      return *std::max_element(d.begin(), d.end());
    }
  }
  return 0.0;
}

Tensor reduce(Reduction op, const Tensor& t, std::optional<std::size_t> axis) {
  if (!axis) return Tensor::scalar(reduce_all(op, t));
  const auto& shape = t.shape();
  if (*axis >= shape.size())
    throw DimensionError("reduction axis out of range for " + shape_string(shape));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < *axis; ++i) outer *= shape[i];
  for (std::size_t i = *axis + 1; i < shape.size(); ++i) inner *= shape[i];
  const std::size_t len = shape[*axis];
  if (len == 0 && op != Reduction::Sum) throw DimensionError("reduction over an empty axis");

  Tensor::Shape out_shape;
  for (std::size_t i = 0; i < shape.size(); ++i)
    if (i != *axis) out_shape.push_back(shape[i]);
  Tensor out(out_shape, op == Reduction::Max ? -std::numeric_limits<double>::infinity() : 0.0);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t l = 0; l < len; ++l) {
      for (std::size_t in = 0; in < inner; ++in) {
        const double v = t[(o * len + l) * inner + in];
        double& acc = out[o * inner + in];
        acc = op == Reduction::Max ? std::max(acc, v) : acc + v;
      }
    }
  }
  if (op == Reduction::Mean)
    for (auto& v : out.data()) v /= static_cast<double>(len);
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2)
    throw DimensionError("matmul needs two matrices, got " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
  if (a.dim(1) != b.dim(0))
    throw DimensionError("matmul inner extents differ: " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  Tensor c({a.dim(0), b.dim(1)});
  kernels::parallel::gemm({.m = a.dim(0), .n = b.dim(1), .k = a.dim(1)}, a.data(), b.data(), c.data());
  return c;
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw DimensionError("transpose needs a matrix");
  Tensor t({a.dim(1), a.dim(0)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < a.dim(1); ++j) t(j, i) = a(i, j);
  return t;
}

}  // namespace ibw
