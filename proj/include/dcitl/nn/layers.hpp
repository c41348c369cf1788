#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcitl/common/rng.hpp"
#include "dcitl/nn/tensor.hpp"

namespace dcitl::nn {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;  // same shape as value

  Parameter(std::string n, std::vector<std::size_t> shape)
      : name(std::move(n)), value(shape), grad(std::move(shape)) {}
};

// Gradients of one parameter set, aligned with ParameterSet order.
using GradientSet = std::vector<Tensor>;

// Non-owning ordered view over the parameters of a model.
class ParameterSet {
 public:
  ParameterSet() = default;
  explicit ParameterSet(std::vector<Parameter*> entries) : entries_(std::move(entries)) {}

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  Parameter& operator[](std::size_t i) const { return *entries_[i]; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  void append(const ParameterSet& other);
  void zero_grad() const;
  GradientSet gradients() const;
  std::size_t scalar_count() const;

 private:
  std::vector<Parameter*> entries_;
};

// A differentiable layer operating on a leading batch axis.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string kind() const = 0;
  // Pure inference; never touches the backward cache.
  virtual Tensor infer(const Tensor& input) const = 0;
  // Training forward: caches what backward needs.
  virtual Tensor forward(const Tensor& input) { return infer(input); }
  // Accumulates parameter gradients and returns d loss / d input.
  virtual Tensor backward(const Tensor& grad_output) = 0;

  virtual std::vector<Parameter*> parameters() { return {}; }
  virtual void initialize(Rng& /*rng*/) {}
  virtual std::unique_ptr<Layer> clone() const = 0;
  virtual nlohmann::json descriptor() const = 0;
};

// x' = x A^T + b, input [n, in] -> [n, out].
class Linear final : public Layer {
 public:
  Linear(std::size_t in, std::size_t out);

  std::string kind() const override { return "linear"; }
  Tensor infer(const Tensor& input) const override;
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  void initialize(Rng& rng) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Linear>(*this); }
  nlohmann::json descriptor() const override;

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }

 private:
  void check(const Tensor& input) const;

  std::size_t in_, out_;
  Parameter weight_;  // [out, in]
  Parameter bias_;    // [out]
  Tensor cached_input_;
};

// Valid 1-D convolution over time: [n, L, C] -> [n, L - width + 1, filters].
class Conv1d final : public Layer {
 public:
  Conv1d(std::size_t channels, std::size_t width, std::size_t filters);

  std::string kind() const override { return "conv1d"; }
  Tensor infer(const Tensor& input) const override;
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  void initialize(Rng& rng) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv1d>(*this); }
  nlohmann::json descriptor() const override;

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  void check(const Tensor& input) const;

  std::size_t channels_, width_, filters_;
  Parameter weight_;  // [filters, width, channels]
  Parameter bias_;    // [filters]
  Tensor cached_input_;
};

class Relu final : public Layer {
 public:
  std::string kind() const override { return "relu"; }
  Tensor infer(const Tensor& input) const override;
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Relu>(*this); }
  nlohmann::json descriptor() const override { return {{"kind", "relu"}}; }

 private:
  Tensor cached_input_;
};

// Max over the time axis: [n, T, F] -> [n, F]. Ties resolve to the first
// position.
class MaxPoolOverTime final : public Layer {
 public:
  std::string kind() const override { return "maxpool_time"; }
  Tensor infer(const Tensor& input) const override;
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  std::unique_ptr<Layer> clone() const override {
    return std::make_unique<MaxPoolOverTime>(*this);
  }
  nlohmann::json descriptor() const override { return {{"kind", "maxpool_time"}}; }

 private:
  std::vector<std::size_t> input_shape_;
  std::vector<std::size_t> argmax_;
};

// Inverted dropout; identity at inference.
class Dropout final : public Layer {
 public:
  explicit Dropout(double rate, std::uint64_t seed = 0);

  std::string kind() const override { return "dropout"; }
  Tensor infer(const Tensor& input) const override { return input; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  void initialize(Rng& rng) override { rng_ = Rng(rng.next()); }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dropout>(*this); }
  nlohmann::json descriptor() const override;

  double rate() const { return rate_; }

 private:
  double rate_;
  Rng rng_;
  std::vector<double> mask_;
};

// Row-wise softmax over the last axis of a matrix.
class Softmax final : public Layer {
 public:
  std::string kind() const override { return "softmax"; }
  Tensor infer(const Tensor& input) const override;
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Softmax>(*this); }
  nlohmann::json descriptor() const override { return {{"kind", "softmax"}}; }

 private:
  Tensor cached_output_;
};

class LayerStack;

// Runs several branches on the same input and concatenates their [n, f_b]
// outputs along the feature axis.
class Concat final : public Layer {
 public:
  explicit Concat(std::vector<LayerStack> branches);
  Concat(const Concat& other);
  Concat& operator=(const Concat&) = delete;
  ~Concat() override;

  std::string kind() const override { return "concat"; }
  Tensor infer(const Tensor& input) const override;
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  std::vector<Parameter*> parameters() override;
  void initialize(Rng& rng) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Concat>(*this); }
  nlohmann::json descriptor() const override;

  const std::vector<LayerStack>& branches() const { return branches_; }

 private:
  Tensor join(std::vector<Tensor> parts) const;

  std::vector<LayerStack> branches_;
  std::vector<std::size_t> widths_;
};

// Rebuilds an uninitialised layer from its descriptor.
std::unique_ptr<Layer> layer_from_descriptor(const nlohmann::json& d);

// Ordered sequence of layers owning its parameters. Copying deep-copies.
class LayerStack {
 public:
  LayerStack() = default;
  LayerStack(const LayerStack& other);
  LayerStack& operator=(const LayerStack& other);
  LayerStack(LayerStack&&) noexcept = default;
  LayerStack& operator=(LayerStack&&) noexcept = default;
  ~LayerStack();

  LayerStack& add(std::unique_ptr<Layer> layer);
  template <typename L, typename... Args>
  LayerStack& emplace(Args&&... args) {
    return add(std::make_unique<L>(std::forward<Args>(args)...));
  }

  // train = true caches intermediates for backward; train = false is the
  // same as infer(). Shape problems raise ShapeError with the layer index.
  Tensor forward(const Tensor& input, bool train);
  Tensor infer(const Tensor& input) const;
  // Requires a preceding forward(..., true).
  Tensor backward(const Tensor& grad_output);

  ParameterSet parameters();
  std::vector<const Parameter*> parameters() const;
  void zero_grad();
  // Glorot-uniform weights, zero biases.
  void initialize(std::uint64_t seed);

  std::size_t size() const noexcept { return layers_.size(); }
  const Layer& layer(std::size_t i) const { return *layers_[i]; }
  Layer& layer(std::size_t i) { return *layers_[i]; }
  bool has_cache() const noexcept { return cached_; }

  nlohmann::json descriptor() const;
  static LayerStack from_descriptor(const nlohmann::json& d);

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
  bool cached_ = false;
};

}  // namespace dcitl::nn
