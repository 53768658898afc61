#include <doctest.h>

#include <cmath>
#include <functional>

#include "flowddi/errors.hpp"
#include "flowddi/gradcheck.hpp"
#include "flowddi/rng.hpp"
#include "flowddi/tape.hpp"

using namespace flowddi;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t.at(i) = rng.uniform() * 4.0 - 2.0;
  return t;
}

// Checks one scalar-valued tape program against central differences.
void check_gradients(const std::function<Value(Tape&, const std::vector<Value>&)>& program,
                     std::vector<Tensor> inputs, double tol = 1e-4) {
  auto run = [&](bool wants_grads) {
    Tape tape;
    std::vector<Value> handles;
    for (const Tensor& t : inputs) handles.push_back(tape.parameter(t));
    Value out = program(tape, handles);
    std::vector<Tensor> grads;
    double loss = tape.value(out).item();
    if (wants_grads) {
      tape.backward(out);
      for (Value h : handles) grads.push_back(tape.grad(h));
    }
    return std::make_pair(loss, grads);
  };
  auto analytic = run(true).second;
  std::vector<Tensor*> params;
  for (Tensor& t : inputs) params.push_back(&t);
  auto eval = [&] { return run(false).first; };
  auto report = finite_difference_check(eval, params, analytic, 1e-5, tol);
  CAPTURE(report.max_rel_err);
  CHECK(report.ok());
}

}  // namespace

TEST_SUITE("tape") {

TEST_CASE("derivative of x*x at 3 is 6") {
  Tape tape;
  Value x = tape.parameter(Tensor::scalar(3.0));
  Value y = tape.mul(x, x);
  tape.backward(y);
  CHECK(tape.grad(x).item() == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("gradient of sum of softmax is zero") {
  Tape tape;
  Value v = tape.parameter(Tensor({1, 5}, {0.3, -1.2, 0.8, 2.0, -0.5}));
  Value out = tape.sum(tape.softmax_row(v));
  tape.backward(out);
  for (double g : tape.grad(v).values()) CHECK(std::abs(g) < 1e-12);
}

TEST_CASE("untouched leaves get zero gradient") {
  Tape tape;
  Value used = tape.parameter(Tensor::scalar(2.0));
  Value unused = tape.parameter(Tensor({2, 2}, {1, 2, 3, 4}));
  Value out = tape.mul(used, used);
  tape.backward(out);
  for (double g : tape.grad(unused).values()) CHECK(g == 0.0);
}

TEST_CASE("backward requires a scalar output") {
  Tape tape;
  Value v = tape.parameter(Tensor({2}, {1.0, 2.0}));
  CHECK_THROWS_AS(tape.backward(v), ContractError);
}

TEST_CASE("every primitive passes a finite-difference check on random inputs") {
  Rng rng(17);

  SUBCASE("matmul") {
    check_gradients(
        [](Tape& t, const std::vector<Value>& in) {
          return t.sum(t.matmul(in[0], in[1]));
        },
        {random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)});
  }
  SUBCASE("transpose and mul") {
    check_gradients(
        [](Tape& t, const std::vector<Value>& in) {
          return t.sum(t.mul(t.transpose(in[0]), in[1]));
        },
        {random_tensor({3, 4}, rng), random_tensor({4, 3}, rng)});
  }
  SUBCASE("add sub scale add_scalar") {
    check_gradients(
        [](Tape& t, const std::vector<Value>& in) {
          return t.sum(t.add_scalar(t.scale(t.sub(t.add(in[0], in[1]), in[1]), 2.5), -1.0));
        },
        {random_tensor({2, 3}, rng), random_tensor({2, 3}, rng)});
  }
  SUBCASE("exp log") {
    check_gradients(
        [](Tape& t, const std::vector<Value>& in) {
          return t.sum(t.log(t.add_scalar(t.exp(in[0]), 1.0)));
        },
        {random_tensor({3, 3}, rng)});
  }
  SUBCASE("tanh") {
    check_gradients(
        [](Tape& t, const std::vector<Value>& in) { return t.sum(t.tanh(in[0])); },
        {random_tensor({4}, rng)});
  }
  SUBCASE("relu") {
    // Keep entries away from the kink.
    Tensor x({6}, {-1.7, -0.4, 0.3, 1.1, 1.9, -0.9});
    check_gradients(
        [](Tape& t, const std::vector<Value>& in) {
          return t.sum(t.mul(t.relu(in[0]), in[0]));
        },
        {x});
  }
  SUBCASE("softmax_row") {
    check_gradients(
        [&](Tape& t, const std::vector<Value>& in) {
          return t.sum(t.mul(t.softmax_row(in[0]), in[1]));
        },
        {random_tensor({2, 5}, rng), random_tensor({2, 5}, rng)});
  }
  SUBCASE("log_softmax_row") {
    check_gradients(
        [&](Tape& t, const std::vector<Value>& in) {
          return t.sum(t.mul(t.log_softmax_row(in[0]), in[1]));
        },
        {random_tensor({2, 5}, rng), random_tensor({2, 5}, rng)});
  }
  SUBCASE("gather slice concat bias") {
    check_gradients(
        [](Tape& t, const std::vector<Value>& in) {
          Value g = t.gather_rows(in[0], {2, 0, 2});
          Value c = t.concat_cols(g, t.slice_cols(g, 0, 1));
          Value picked = t.gather_cols(c, {0, 2});
          return t.mean(t.add_row_bias(picked, in[1]));
        },
        {random_tensor({3, 2}, rng), random_tensor({1, 2}, rng)});
  }
}

TEST_CASE("finite_difference_check flags a corrupted gradient") {
  Rng rng(3);
  Tensor x = random_tensor({3}, rng);
  Tensor analytic({3});
  double base;
  {
    Tape tape;
    Value v = tape.parameter(x);
    Value out = tape.sum(tape.mul(v, v));
    tape.backward(out);
    analytic = tape.grad(v);
    base = tape.value(out).item();
  }
  (void)base;
  analytic.at(1) += 0.5;  // corruption
  std::vector<Tensor*> params{&x};
  auto eval = [&] {
    Tape tape;
    Value v = tape.parameter(x);
    return tape.value(tape.sum(tape.mul(v, v))).item();
  };
  auto report = finite_difference_check(eval, params, {analytic}, 1e-5, 1e-4);
  CHECK_FALSE(report.ok());
  REQUIRE(report.flagged.size() == 1);
  CHECK(report.flagged[0].index == 1);
}

TEST_CASE("quadratic form gradient is near machine precision") {
  Rng rng(11);
  Tensor x = random_tensor({4}, rng);
  std::vector<Tensor*> params{&x};
  Tensor analytic({4});
  {
    Tape tape;
    Value v = tape.parameter(x);
    tape.backward(tape.sum(tape.mul(v, v)));
    // recompute grads freshly inside eval below
    Tape t2;
    Value v2 = t2.parameter(x);
    Value out = t2.sum(t2.mul(v2, v2));
    t2.backward(out);
    analytic = t2.grad(v2);
  }
  auto eval = [&] {
    Tape tape;
    Value v = tape.parameter(x);
    return tape.value(tape.sum(tape.mul(v, v))).item();
  };
  auto report = finite_difference_check(eval, params, {analytic}, 1e-5, 1e-4);
  CHECK(report.max_rel_err < 1e-8);
}

}  // TEST_SUITE
