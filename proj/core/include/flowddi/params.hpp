#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "flowddi/tensor.hpp"

namespace flowddi {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Ordered collection of named parameter tensors. Insertion order is part of
// the contract: it fixes the gradient vector layout and the checkpoint blob
// layout.
class ParameterSet {
 public:
  Tensor& add(std::string name, Tensor init);
  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t size() const { return items_.size(); }
  const std::vector<NamedTensor>& items() const { return items_; }
  std::vector<Tensor*> tensors();

  bool all_finite() const;

 private:
  std::size_t index_of(std::string_view name) const;

  std::vector<NamedTensor> items_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// In-place plain gradient-descent update; grads must align with
// params.items() order.
void gradient_step(ParameterSet& params, const std::vector<Tensor>& grads, double learning_rate);

// Rescales grads in place so their global L2 norm is at most max_norm.
// No-op when max_norm <= 0. Returns the pre-clip norm.
double clip_gradient_norm(std::vector<Tensor>& grads, double max_norm);

// Adam with bias correction. State tensors are created lazily on the first
// step and must then see the same parameter layout every step.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(double learning_rate, double beta1 = 0.9,
                         double beta2 = 0.999, double epsilon = 1e-8);

  void step(ParameterSet& params, const std::vector<Tensor>& grads);

 private:
  double learning_rate_;
  double beta1_;
  double beta2_;
  double epsilon_;
  long steps_ = 0;
  std::vector<Tensor> first_moment_;
  std::vector<Tensor> second_moment_;
};

// Checkpoint layout: <stem>.json manifest (parameter names, shapes, byte
// offsets, plus free-form string metadata) and <stem>.bin with the raw
// little-endian float64 values concatenated in manifest order.
void save_checkpoint(const ParameterSet& params,
                     const std::map<std::string, std::string>& meta,
                     const std::filesystem::path& stem);

struct Checkpoint {
  ParameterSet params;
  std::map<std::string, std::string> meta;
};

Checkpoint load_checkpoint(const std::filesystem::path& stem);

bool checkpoint_exists(const std::filesystem::path& stem);

}  // namespace flowddi
