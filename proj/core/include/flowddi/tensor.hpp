#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace flowddi {

// Dense 64-bit float tensor of rank 1 or 2. Scalars are represented as
// shape {1}. No broadcasting beyond the row-bias helper in the tape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);  // zero-filled
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  static Tensor scalar(double v);
  static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<std::size_t> shape, double v);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool is_scalar() const { return data_.size() == 1; }
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  std::size_t rows() const;  // rank-2 only
  std::size_t cols() const;

  double item() const;  // scalar only

  double& at(std::size_t i) { return data_[i]; }
  double at(std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols_unchecked() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_unchecked() + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::span<const double> row(std::size_t r) const;  // rank-2 only

  void fill(double v);
  bool all_finite() const;

  bool operator==(const Tensor& o) const = default;

 private:
  std::size_t cols_unchecked() const { return shape_.back(); }

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// Plain (gradient-free) kernels. The tape forwards reuse these, and the
// sampling/enumeration paths call them directly.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor add_row_bias(const Tensor& m, const Tensor& bias);  // {r,c} + {1,c}
Tensor exp(const Tensor& a);
Tensor log_clamped(const Tensor& a, double floor);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
Tensor log_softmax_rows(const Tensor& a);
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows);
Tensor gather_cols(const Tensor& a, std::span<const std::size_t> cols);
Tensor slice_cols(const Tensor& a, std::size_t first, std::size_t count);
Tensor concat_cols(const Tensor& a, const Tensor& b);
double sum(const Tensor& a);
double mean(const Tensor& a);

}  // namespace flowddi
