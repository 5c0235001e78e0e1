#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ibw {

// Dense row-major array of doubles. Extents may be zero (an empty batch is a
// valid [0 x d] tensor). A rank-0 tensor holds one value.
class Tensor {
 public:
  using Shape = std::vector<std::size_t>;

  Tensor() : shape_{0}, data_{} {}
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value);
  static Tensor vector(std::initializer_list<double> values);
  static Tensor vector(std::vector<double> values);
  // Nested initializer, one inner list per row.
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor identity(std::size_t n);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t dim(std::size_t axis) const;
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }
  // Matrix element access; requires rank 2.
  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * shape_[1] + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * shape_[1] + c]; }

  // Row r of a rank>=1 tensor viewed as [dim(0) x rest].
  std::span<double> row(std::size_t r);
  std::span<const double> row(std::size_t r) const;
  std::size_t row_size() const;

  Tensor reshaped(Shape shape) const;
  // Rows [begin, end) of the leading axis.
  Tensor slice_rows(std::size_t begin, std::size_t end) const;
  Tensor gather_rows(std::span<const std::size_t> rows) const;

  bool all_finite() const;

  // Exact (bitwise-value) equality of shape and contents.
  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

std::size_t shape_size(const Tensor::Shape& shape);
std::string shape_string(const Tensor::Shape& shape);

// ---- elementwise / reduction operations ----

enum class UnaryOp { Identity, Negate, Square, Sqrt, Exp, Log, Abs, Relu };
enum class BinaryOp { Add, Sub, Mul, Div, Max, Min };
enum class Reduction { Sum, Mean, Max };

Tensor map(UnaryOp op, const Tensor& t);
Tensor map(const Tensor& t, const std::function<double(double)>& f);

// Operands must have equal shapes, or one of them must hold a single value
// (rank 0 or size 1), which is broadcast.
Tensor zip(BinaryOp op, const Tensor& a, const Tensor& b);

// Full reduction to a rank-0 tensor, or along one axis.
Tensor reduce(Reduction op, const Tensor& t, std::optional<std::size_t> axis = std::nullopt);
double reduce_all(Reduction op, const Tensor& t);

// [m x k] x [k x n] -> [m x n], OpenMP kernel.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

}  // namespace ibw
