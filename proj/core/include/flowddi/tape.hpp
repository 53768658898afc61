#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "flowddi/tensor.hpp"

namespace flowddi {

// Handle into a Tape. Only valid for the tape that produced it.
struct Value {
  std::uint32_t id = 0;
};

// Reverse-mode gradient tape over Tensor primitives. One tape per training
// step; operations record a pull-back closure in topological order and
// backward() walks them in reverse.
class Tape {
 public:
  // log() clamps its argument at this floor so losses never produce -inf.
  static constexpr double kLogFloor = 1e-300;

  Value parameter(const Tensor& v);  // leaf that receives a gradient
  Value constant(Tensor v);          // leaf without a gradient

  const Tensor& value(Value v) const { return nodes_[v.id].value; }
  // Zero for leaves the output does not depend on. Only meaningful after
  // backward().
  const Tensor& grad(Value v) const { return nodes_[v.id].grad; }

  Value matmul(Value a, Value b);
  Value transpose(Value a);
  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value mul(Value a, Value b);
  Value scale(Value a, double c);
  Value add_scalar(Value a, double c);
  Value add_row_bias(Value m, Value bias);
  Value exp(Value a);
  Value log(Value a);  // ln(max(x, kLogFloor))
  Value tanh(Value a);
  Value relu(Value a);
  Value softmax_row(Value a);
  Value log_softmax_row(Value a);
  Value gather_rows(Value a, std::vector<std::size_t> rows);
  Value gather_cols(Value a, std::vector<std::size_t> cols);
  Value slice_cols(Value a, std::size_t first, std::size_t count);
  Value concat_cols(Value a, Value b);
  Value sum(Value a);   // scalar
  Value mean(Value a);  // scalar

  // Populates grad() for every node reachable from `output`. The output
  // must be scalar.
  void backward(Value output);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::function<void(Tape&, const Tensor&)> pull;
  };

  Value push(Tensor value, bool requires_grad,
             std::function<void(Tape&, const Tensor&)> pull);
  bool needs(Value v) const { return nodes_[v.id].requires_grad; }
  void accumulate(Value v, const Tensor& delta);
  Tensor& grad_mut(Value v) { return nodes_[v.id].grad; }

  std::vector<Node> nodes_;
};

}  // namespace flowddi
