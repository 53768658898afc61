#include "flowddi/params.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "flowddi/errors.hpp"

namespace flowddi {

using ordered_json = nlohmann::ordered_json;

Tensor& ParameterSet::add(std::string name, Tensor init) {
  if (index_.count(name))
    throw ContractError("duplicate parameter name: " + name);
  index_.emplace(name, items_.size());
  items_.push_back(NamedTensor{std::move(name), std::move(init)});
  return items_.back().tensor;
}

std::size_t ParameterSet::index_of(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end())
    throw ContractError("unknown parameter name: " + std::string(name));
  return it->second;
}

Tensor& ParameterSet::at(std::string_view name) { return items_[index_of(name)].tensor; }

const Tensor& ParameterSet::at(std::string_view name) const {
  return items_[index_of(name)].tensor;
}

bool ParameterSet::contains(std::string_view name) const { return index_.count(name) > 0; }

std::vector<Tensor*> ParameterSet::tensors() {
  std::vector<Tensor*> out;
  out.reserve(items_.size());
  for (auto& item : items_) out.push_back(&item.tensor);
  return out;
}

bool ParameterSet::all_finite() const {
  for (const auto& item : items_)
    if (!item.tensor.all_finite()) return false;
  return true;
}

void gradient_step(ParameterSet& params, const std::vector<Tensor>& grads,
                   double learning_rate) {
  if (grads.size() != params.size())
    throw ContractError("gradient count does not match parameter count");
  auto tensors = params.tensors();
  for (std::size_t p = 0; p < tensors.size(); ++p) {
    Tensor& t = *tensors[p];
    if (!t.same_shape(grads[p]))
      throw ContractError("gradient shape mismatch for parameter " +
                          params.items()[p].name);
    for (std::size_t i = 0; i < t.size(); ++i)
      t.at(i) -= learning_rate * grads[p].at(i);
  }
}

double clip_gradient_norm(std::vector<Tensor>& grads, double max_norm) {
  double total = 0.0;
  for (const Tensor& g : grads)
    for (double v : g.values()) total += v * v;
  const double norm = std::sqrt(total);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (Tensor& g : grads)
      for (std::size_t i = 0; i < g.size(); ++i) g.at(i) *= factor;
  }
  return norm;
}

AdamOptimizer::AdamOptimizer(double learning_rate, double beta1, double beta2,
                             double epsilon)
    : learning_rate_(learning_rate), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

void AdamOptimizer::step(ParameterSet& params, const std::vector<Tensor>& grads) {
  if (grads.size() != params.size())
    throw ContractError("gradient count does not match parameter count");
  if (first_moment_.empty()) {
    for (const Tensor& g : grads) {
      first_moment_.push_back(Tensor::zeros(g.shape()));
      second_moment_.push_back(Tensor::zeros(g.shape()));
    }
  }
  ++steps_;
  const double correction1 = 1.0 - std::pow(beta1_, steps_);
  const double correction2 = 1.0 - std::pow(beta2_, steps_);
  auto tensors = params.tensors();
  for (std::size_t p = 0; p < tensors.size(); ++p) {
    Tensor& t = *tensors[p];
    if (!t.same_shape(grads[p]))
      throw ContractError("gradient shape mismatch for parameter " +
                          params.items()[p].name);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double g = grads[p].at(i);
      double& m = first_moment_[p].at(i);
      double& v = second_moment_[p].at(i);
      m = beta1_ * m + (1.0 - beta1_) * g;
      v = beta2_ * v + (1.0 - beta2_) * g * g;
      t.at(i) -= learning_rate_ * (m / correction1) /
                 (std::sqrt(v / correction2) + epsilon_);
    }
  }
}

void save_checkpoint(const ParameterSet& params,
                     const std::map<std::string, std::string>& meta,
                     const std::filesystem::path& stem) {
  ordered_json manifest;
  manifest["format"] = "flowddi-checkpoint-v1";
  ordered_json entries = ordered_json::array();
  std::size_t offset = 0;
  for (const auto& item : params.items()) {
    ordered_json e;
    e["name"] = item.name;
    e["shape"] = item.tensor.shape();
    e["byte_offset"] = offset;
    entries.push_back(e);
    offset += item.tensor.size() * sizeof(double);
  }
  manifest["parameters"] = entries;
  manifest["meta"] = meta;

  auto json_path = stem;
  json_path += ".json";
  std::ofstream jf(json_path);
  if (!jf) throw ValidationError("cannot write checkpoint manifest: " + json_path.string());
  jf << manifest.dump(2) << "\n";

  auto bin_path = stem;
  bin_path += ".bin";
  std::ofstream bf(bin_path, std::ios::binary);
  if (!bf) throw ValidationError("cannot write checkpoint blob: " + bin_path.string());
  for (const auto& item : params.items()) {
    bf.write(reinterpret_cast<const char*>(item.tensor.data()),
             static_cast<std::streamsize>(item.tensor.size() * sizeof(double)));
  }
}

bool checkpoint_exists(const std::filesystem::path& stem) {
  auto json_path = stem;
  json_path += ".json";
  auto bin_path = stem;
  bin_path += ".bin";
  return std::filesystem::exists(json_path) && std::filesystem::exists(bin_path);
}

Checkpoint load_checkpoint(const std::filesystem::path& stem) {
  auto json_path = stem;
  json_path += ".json";
  std::ifstream jf(json_path);
  if (!jf) throw MissingPrerequisiteError("checkpoint manifest not found: " + json_path.string());
  ordered_json manifest;
  try {
    jf >> manifest;
  } catch (const std::exception& e) {
    throw ParseError("bad checkpoint manifest " + json_path.string() + ": " + e.what());
  }
  if (manifest.value("format", "") != "flowddi-checkpoint-v1")
    throw ParseError("unrecognized checkpoint format in " + json_path.string());

  auto bin_path = stem;
  bin_path += ".bin";
  std::ifstream bf(bin_path, std::ios::binary);
  if (!bf) throw MissingPrerequisiteError("checkpoint blob not found: " + bin_path.string());
  std::vector<char> blob((std::istreambuf_iterator<char>(bf)),
                         std::istreambuf_iterator<char>());

  Checkpoint ckpt;
  for (const auto& e : manifest.at("parameters")) {
    const std::string name = e.at("name").get<std::string>();
    const auto shape = e.at("shape").get<std::vector<std::size_t>>();
    const std::size_t offset = e.at("byte_offset").get<std::size_t>();
    std::size_t count = 1;
    for (std::size_t d : shape) count *= d;
    if (offset + count * sizeof(double) > blob.size())
      throw ParseError("checkpoint blob too short for parameter " + name);
    std::vector<double> values(count);
    std::memcpy(values.data(), blob.data() + offset, count * sizeof(double));
    ckpt.params.add(name, Tensor(shape, std::move(values)));
  }
  if (manifest.contains("meta"))
    ckpt.meta = manifest.at("meta").get<std::map<std::string, std::string>>();
  return ckpt;
}

}  // namespace flowddi
