#include "flowddi/tape.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "flowddi/errors.hpp"

namespace flowddi {

namespace {

void add_into(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst.at(i) += src.at(i);
}

std::pair<std::size_t, std::size_t> row_view(const Tensor& a) {
  if (a.rank() == 2) return {a.rows(), a.cols()};
  return {std::size_t{1}, a.size()};
}

}  // namespace

Value Tape::push(Tensor value, bool requires_grad,
                 std::function<void(Tape&, const Tensor&)> pull) {
  Value v{static_cast<std::uint32_t>(nodes_.size())};
  nodes_.push_back(Node{std::move(value), Tensor{}, requires_grad, std::move(pull)});
  return v;
}

Value Tape::parameter(const Tensor& v) { return push(v, true, nullptr); }

Value Tape::constant(Tensor v) { return push(std::move(v), false, nullptr); }

void Tape::accumulate(Value v, const Tensor& delta) {
  if (!needs(v)) return;
  add_into(nodes_[v.id].grad, delta);
}

Value Tape::matmul(Value a, Value b) {
  Tensor out = flowddi::matmul(value(a), value(b));
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, const Tensor& g) {
    if (t.needs(a)) t.accumulate(a, flowddi::matmul(g, flowddi::transpose(t.value(b))));
    if (t.needs(b)) t.accumulate(b, flowddi::matmul(flowddi::transpose(t.value(a)), g));
  });
}

Value Tape::transpose(Value a) {
  return push(flowddi::transpose(value(a)), needs(a), [a](Tape& t, const Tensor& g) {
    t.accumulate(a, flowddi::transpose(g));
  });
}

Value Tape::add(Value a, Value b) {
  return push(flowddi::add(value(a), value(b)), needs(a) || needs(b),
              [a, b](Tape& t, const Tensor& g) {
                t.accumulate(a, g);
                t.accumulate(b, g);
              });
}

Value Tape::sub(Value a, Value b) {
  return push(flowddi::sub(value(a), value(b)), needs(a) || needs(b),
              [a, b](Tape& t, const Tensor& g) {
                t.accumulate(a, g);
                if (t.needs(b)) t.accumulate(b, flowddi::scale(g, -1.0));
              });
}

Value Tape::mul(Value a, Value b) {
  return push(flowddi::mul(value(a), value(b)), needs(a) || needs(b),
              [a, b](Tape& t, const Tensor& g) {
                if (t.needs(a)) t.accumulate(a, flowddi::mul(g, t.value(b)));
                if (t.needs(b)) t.accumulate(b, flowddi::mul(g, t.value(a)));
              });
}

Value Tape::scale(Value a, double c) {
  return push(flowddi::scale(value(a), c), needs(a), [a, c](Tape& t, const Tensor& g) {
    t.accumulate(a, flowddi::scale(g, c));
  });
}

Value Tape::add_scalar(Value a, double c) {
  return push(flowddi::add_scalar(value(a), c), needs(a),
              [a](Tape& t, const Tensor& g) { t.accumulate(a, g); });
}

Value Tape::add_row_bias(Value m, Value bias) {
  return push(flowddi::add_row_bias(value(m), value(bias)), needs(m) || needs(bias),
              [m, bias](Tape& t, const Tensor& g) {
                t.accumulate(m, g);
                if (t.needs(bias)) {
                  Tensor gb({std::size_t{1}, g.cols()});
                  for (std::size_t i = 0; i < g.rows(); ++i)
                    for (std::size_t j = 0; j < g.cols(); ++j) gb.at(0, j) += g.at(i, j);
                  t.accumulate(bias, gb);
                }
              });
}

Value Tape::exp(Value a) {
  Value out{static_cast<std::uint32_t>(nodes_.size())};
  return push(flowddi::exp(value(a)), needs(a), [a, out](Tape& t, const Tensor& g) {
    t.accumulate(a, flowddi::mul(g, t.value(out)));
  });
}

Value Tape::log(Value a) {
  return push(flowddi::log_clamped(value(a), kLogFloor), needs(a),
              [a](Tape& t, const Tensor& g) {
                if (!t.needs(a)) return;
                const Tensor& x = t.value(a);
                Tensor ga = g;
                for (std::size_t i = 0; i < ga.size(); ++i)
                  ga.at(i) /= std::max(x.at(i), kLogFloor);
                t.accumulate(a, ga);
              });
}

Value Tape::tanh(Value a) {
  Value out{static_cast<std::uint32_t>(nodes_.size())};
  return push(flowddi::tanh(value(a)), needs(a), [a, out](Tape& t, const Tensor& g) {
    if (!t.needs(a)) return;
    const Tensor& y = t.value(out);
    Tensor ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i) ga.at(i) *= 1.0 - y.at(i) * y.at(i);
    t.accumulate(a, ga);
  });
}

Value Tape::relu(Value a) {
  return push(flowddi::relu(value(a)), needs(a), [a](Tape& t, const Tensor& g) {
    if (!t.needs(a)) return;
    const Tensor& x = t.value(a);
    Tensor ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i)
      if (x.at(i) <= 0.0) ga.at(i) = 0.0;
    t.accumulate(a, ga);
  });
}

Value Tape::softmax_row(Value a) {
  Value out{static_cast<std::uint32_t>(nodes_.size())};
  return push(flowddi::softmax_rows(value(a)), needs(a), [a, out](Tape& t, const Tensor& g) {
    if (!t.needs(a)) return;
    const Tensor& y = t.value(out);
    auto [r, c] = row_view(y);
    Tensor ga = g;
    for (std::size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += g.at(i * c + j) * y.at(i * c + j);
      for (std::size_t j = 0; j < c; ++j)
        ga.at(i * c + j) = y.at(i * c + j) * (g.at(i * c + j) - dot);
    }
    t.accumulate(a, ga);
  });
}

Value Tape::log_softmax_row(Value a) {
  Value out{static_cast<std::uint32_t>(nodes_.size())};
  return push(flowddi::log_softmax_rows(value(a)), needs(a),
              [a, out](Tape& t, const Tensor& g) {
                if (!t.needs(a)) return;
                const Tensor& y = t.value(out);
                auto [r, c] = row_view(y);
                Tensor ga = g;
                for (std::size_t i = 0; i < r; ++i) {
                  double gsum = 0.0;
                  for (std::size_t j = 0; j < c; ++j) gsum += g.at(i * c + j);
                  for (std::size_t j = 0; j < c; ++j)
                    ga.at(i * c + j) = g.at(i * c + j) - std::exp(y.at(i * c + j)) * gsum;
                }
                t.accumulate(a, ga);
              });
}

Value Tape::gather_rows(Value a, std::vector<std::size_t> rows) {
  Tensor out = flowddi::gather_rows(value(a), rows);
  return push(std::move(out), needs(a),
              [a, rows = std::move(rows)](Tape& t, const Tensor& g) {
                if (!t.needs(a)) return;
                Tensor& ga = t.grad_mut(a);
                for (std::size_t i = 0; i < rows.size(); ++i)
                  for (std::size_t j = 0; j < g.cols(); ++j)
                    ga.at(rows[i], j) += g.at(i, j);
              });
}

Value Tape::gather_cols(Value a, std::vector<std::size_t> cols) {
  Tensor out = flowddi::gather_cols(value(a), cols);
  return push(std::move(out), needs(a),
              [a, cols = std::move(cols)](Tape& t, const Tensor& g) {
                if (!t.needs(a)) return;
                Tensor& ga = t.grad_mut(a);
                for (std::size_t j = 0; j < cols.size(); ++j)
                  for (std::size_t i = 0; i < g.rows(); ++i)
                    ga.at(i, cols[j]) += g.at(i, j);
              });
}

Value Tape::slice_cols(Value a, std::size_t first, std::size_t count) {
  return push(flowddi::slice_cols(value(a), first, count), needs(a),
              [a, first, count](Tape& t, const Tensor& g) {
                if (!t.needs(a)) return;
                Tensor& ga = t.grad_mut(a);
                for (std::size_t i = 0; i < g.rows(); ++i)
                  for (std::size_t j = 0; j < count; ++j)
                    ga.at(i, first + j) += g.at(i, j);
              });
}

Value Tape::concat_cols(Value a, Value b) {
  const std::size_t ca = value(a).cols();
  return push(flowddi::concat_cols(value(a), value(b)), needs(a) || needs(b),
              [a, b, ca](Tape& t, const Tensor& g) {
                if (t.needs(a)) t.accumulate(a, flowddi::slice_cols(g, 0, ca));
                if (t.needs(b)) t.accumulate(b, flowddi::slice_cols(g, ca, g.cols() - ca));
              });
}

Value Tape::sum(Value a) {
  return push(Tensor::scalar(flowddi::sum(value(a))), needs(a),
              [a](Tape& t, const Tensor& g) {
                if (!t.needs(a)) return;
                t.accumulate(a, Tensor::full(t.value(a).shape(), g.item()));
              });
}

Value Tape::mean(Value a) {
  const double n = static_cast<double>(value(a).size());
  return push(Tensor::scalar(flowddi::mean(value(a))), needs(a),
              [a, n](Tape& t, const Tensor& g) {
                if (!t.needs(a)) return;
                t.accumulate(a, Tensor::full(t.value(a).shape(), g.item() / n));
              });
}

void Tape::backward(Value output) {
  if (!value(output).is_scalar())
    throw ContractError("backward requires a scalar output");
  for (std::uint32_t i = 0; i <= output.id; ++i) {
    Node& node = nodes_[i];
    if (node.requires_grad)
      node.grad = Tensor::zeros(node.value.shape());
  }
  // Leaves never touched by the output keep an all-zero gradient.
  Node& out_node = nodes_[output.id];
  if (!out_node.requires_grad) return;
  out_node.grad = Tensor::scalar(1.0);
  for (std::uint32_t i = output.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.requires_grad && node.pull) node.pull(*this, node.grad);
  }
}

}  // namespace flowddi
