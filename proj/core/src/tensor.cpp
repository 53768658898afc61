#include "flowddi/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flowddi/errors.hpp"

namespace flowddi {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ContractError(what);
}

std::string shape_str(const Tensor& t) {
  std::string s = "{";
  for (std::size_t i = 0; i < t.shape().size(); ++i) {
    if (i) s += ",";
    s += std::to_string(t.shape()[i]);
  }
  return s + "}";
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {
  require(!shape_.empty() && shape_.size() <= 2, "tensor rank must be 1 or 2");
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  require(!shape_.empty() && shape_.size() <= 2, "tensor rank must be 1 or 2");
  require(data_.size() == shape_product(shape_), "tensor value count does not match shape");
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
  Tensor t(std::move(shape));
  t.fill(v);
  return t;
}

std::size_t Tensor::rows() const {
  require(rank() == 2, "rows() requires a rank-2 tensor");
  return shape_[0];
}

std::size_t Tensor::cols() const {
  require(rank() == 2, "cols() requires a rank-2 tensor");
  return shape_[1];
}

double Tensor::item() const {
  require(is_scalar(), "item() requires a scalar tensor");
  return data_[0];
}

std::span<const double> Tensor::row(std::size_t r) const {
  require(rank() == 2, "row() requires a rank-2 tensor");
  return {data_.data() + r * shape_[1], shape_[1]};
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && b.rank() == 2, "matmul requires rank-2 tensors");
  require(a.cols() == b.rows(),
          "matmul shape mismatch: " + shape_str(a) + " x " + shape_str(b));
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.data() + i * k;
    double* orow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  require(a.rank() == 2, "transpose requires a rank-2 tensor");
  Tensor out({a.cols(), a.rows()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.same_shape(b), "add shape mismatch: " + shape_str(a) + " vs " + shape_str(b));
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.at(i) += b.at(i);
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require(a.same_shape(b), "sub shape mismatch: " + shape_str(a) + " vs " + shape_str(b));
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.at(i) -= b.at(i);
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require(a.same_shape(b), "mul shape mismatch: " + shape_str(a) + " vs " + shape_str(b));
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.at(i) *= b.at(i);
  return out;
}

Tensor scale(const Tensor& a, double c) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.at(i) *= c;
  return out;
}

Tensor add_scalar(const Tensor& a, double c) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.at(i) += c;
  return out;
}

Tensor add_row_bias(const Tensor& m, const Tensor& bias) {
  require(m.rank() == 2 && bias.rank() == 2 && bias.rows() == 1 && bias.cols() == m.cols(),
          "add_row_bias requires {r,c} + {1,c}");
  Tensor out = m;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out.at(i, j) += bias.at(0, j);
  return out;
}

Tensor exp(const Tensor& a) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = std::exp(out.at(i));
  return out;
}

Tensor log_clamped(const Tensor& a, double floor) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i)
    out.at(i) = std::log(std::max(out.at(i), floor));
  return out;
}

Tensor tanh(const Tensor& a) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = std::tanh(out.at(i));
  return out;
}

Tensor relu(const Tensor& a) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = std::max(out.at(i), 0.0);
  return out;
}

namespace {

// Rows of rank-1 inputs are the whole vector.
std::pair<std::size_t, std::size_t> row_view(const Tensor& a) {
  if (a.rank() == 2) return {a.rows(), a.cols()};
  return {1, a.size()};
}

}  // namespace

Tensor softmax_rows(const Tensor& a) {
  auto [r, c] = row_view(a);
  require(c > 0, "softmax_rows requires nonempty rows");
  Tensor out = a;
  for (std::size_t i = 0; i < r; ++i) {
    double* row = out.data() + i * c;
    double mx = row[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double total = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      row[j] = std::exp(row[j] - mx);
      total += row[j];
    }
    for (std::size_t j = 0; j < c; ++j) row[j] /= total;
  }
  return out;
}

Tensor log_softmax_rows(const Tensor& a) {
  auto [r, c] = row_view(a);
  require(c > 0, "log_softmax_rows requires nonempty rows");
  Tensor out = a;
  for (std::size_t i = 0; i < r; ++i) {
    double* row = out.data() + i * c;
    double mx = row[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double total = 0.0;
    for (std::size_t j = 0; j < c; ++j) total += std::exp(row[j] - mx);
    const double lse = mx + std::log(total);
    for (std::size_t j = 0; j < c; ++j) row[j] -= lse;
  }
  return out;
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows) {
  require(a.rank() == 2, "gather_rows requires a rank-2 tensor");
  Tensor out({rows.size(), a.cols()});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] < a.rows(), "gather_rows index out of range");
    for (std::size_t j = 0; j < a.cols(); ++j) out.at(i, j) = a.at(rows[i], j);
  }
  return out;
}

Tensor gather_cols(const Tensor& a, std::span<const std::size_t> cols) {
  require(a.rank() == 2, "gather_cols requires a rank-2 tensor");
  Tensor out({a.rows(), cols.size()});
  for (std::size_t j = 0; j < cols.size(); ++j) {
    require(cols[j] < a.cols(), "gather_cols index out of range");
    for (std::size_t i = 0; i < a.rows(); ++i) out.at(i, j) = a.at(i, cols[j]);
  }
  return out;
}

Tensor slice_cols(const Tensor& a, std::size_t first, std::size_t count) {
  require(a.rank() == 2, "slice_cols requires a rank-2 tensor");
  require(first + count <= a.cols(), "slice_cols range out of bounds");
  Tensor out({a.rows(), count});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < count; ++j) out.at(i, j) = a.at(i, first + j);
  return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && b.rank() == 2 && a.rows() == b.rows(),
          "concat_cols requires matching row counts");
  Tensor out({a.rows(), a.cols() + b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out.at(i, j) = a.at(i, j);
    for (std::size_t j = 0; j < b.cols(); ++j) out.at(i, a.cols() + j) = b.at(i, j);
  }
  return out;
}

double sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return s;
}

double mean(const Tensor& a) {
  require(a.size() > 0, "mean of empty tensor");
  return sum(a) / static_cast<double>(a.size());
}

}  // namespace flowddi
