#include "dcitl/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dcitl/common/error.hpp"

namespace dcitl::nn {

void ParameterSet::append(const ParameterSet& other) {
  entries_.insert(entries_.end(), other.entries_.begin(), other.entries_.end());
}

void ParameterSet::zero_grad() const {
  for (Parameter* p : entries_) p->grad.fill(0.0);
}

GradientSet ParameterSet::gradients() const {
  GradientSet out;
  out.reserve(entries_.size());
  for (const Parameter* p : entries_) out.push_back(p->grad);
  return out;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const Parameter* p : entries_) n += p->value.size();
  return n;
}

namespace {

void glorot(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : t.data()) v = rng.uniform(-limit, limit);
}

}  // namespace

// ---------------------------------------------------------------- Linear

Linear::Linear(std::size_t in, std::size_t out)
    : in_(in), out_(out), weight_("weight", {out, in}), bias_("bias", {out}) {}

void Linear::check(const Tensor& input) const {
  if (input.rank() != 2 || input.dim(1) != in_) {
    throw ShapeError("linear expects [n, " + std::to_string(in_) + "], got " +
                     input.shape_string());
  }
}

Tensor Linear::infer(const Tensor& input) const {
  check(input);
  const std::size_t n = input.dim(0);
  Tensor out({n, out_});
  const auto w = weight_.value.data();
  const auto b = bias_.value.data();
  for (std::size_t r = 0; r < n; ++r) {
    const auto x = input.row(r);
    auto y = out.row(r);
    for (std::size_t o = 0; o < out_; ++o) {
      const double* wo = w.data() + o * in_;
      double acc = b[o];
      for (std::size_t i = 0; i < in_; ++i) acc += x[i] * wo[i];
      y[o] = acc;
    }
  }
  return out;
}

Tensor Linear::forward(const Tensor& input) {
  Tensor out = infer(input);
  cached_input_ = input;
  return out;
}

Tensor Linear::backward(const Tensor& grad_output) {
  const std::size_t n = cached_input_.dim(0);
  if (grad_output.rank() != 2 || grad_output.dim(0) != n || grad_output.dim(1) != out_) {
    throw ShapeError("linear backward: gradient " + grad_output.shape_string());
  }
  Tensor grad_input({n, in_});
  auto dw = weight_.grad.data();
  auto db = bias_.grad.data();
  const auto w = weight_.value.data();
  for (std::size_t r = 0; r < n; ++r) {
    const auto x = cached_input_.row(r);
    const auto g = grad_output.row(r);
    auto dx = grad_input.row(r);
    for (std::size_t o = 0; o < out_; ++o) {
      const double go = g[o];
      if (go == 0.0) continue;
      db[o] += go;
      double* dwo = dw.data() + o * in_;
      const double* wo = w.data() + o * in_;
      for (std::size_t i = 0; i < in_; ++i) {
        dwo[i] += go * x[i];
        dx[i] += go * wo[i];
      }
    }
  }
  return grad_input;
}

void Linear::initialize(Rng& rng) {
  glorot(weight_.value, in_, out_, rng);
  bias_.value.fill(0.0);
}

nlohmann::json Linear::descriptor() const {
  return {{"kind", "linear"}, {"in", in_}, {"out", out_}};
}

// ---------------------------------------------------------------- Conv1d

Conv1d::Conv1d(std::size_t channels, std::size_t width, std::size_t filters)
    : channels_(channels),
      width_(width),
      filters_(filters),
      weight_("weight", {filters, width, channels}),
      bias_("bias", {filters}) {}

void Conv1d::check(const Tensor& input) const {
  if (input.rank() != 3 || input.dim(2) != channels_ || input.dim(1) < width_) {
    throw ShapeError("conv1d(width " + std::to_string(width_) + ") expects [n, L>=" +
                     std::to_string(width_) + ", " + std::to_string(channels_) + "], got " +
                     input.shape_string());
  }
}

Tensor Conv1d::infer(const Tensor& input) const {
  check(input);
  const std::size_t n = input.dim(0), len = input.dim(1);
  const std::size_t steps = len - width_ + 1;
  const std::size_t span = width_ * channels_;
  Tensor out({n, steps, filters_});
  const auto w = weight_.value.data();
  const auto b = bias_.value.data();
  // Filter-minor weight copy so the innermost loop runs across filters; each
  // filter still accumulates its window in ascending order.
  std::vector<double> wt(span * filters_);
  for (std::size_t f = 0; f < filters_; ++f)
    for (std::size_t j = 0; j < span; ++j) wt[j * filters_ + f] = w[f * span + j];
  for (std::size_t r = 0; r < n; ++r) {
    const double* x = input.row(r).data();
    double* y = out.row(r).data();
    for (std::size_t t = 0; t < steps; ++t) {
      const double* window = x + t * channels_;
      double* __restrict acc = y + t * filters_;
      std::copy(b.begin(), b.end(), acc);
      for (std::size_t j = 0; j < span; ++j) {
        const double xj = window[j];
        const double* __restrict wj = wt.data() + j * filters_;
        for (std::size_t f = 0; f < filters_; ++f) acc[f] += xj * wj[f];
      }
    }
  }
  return out;
}

Tensor Conv1d::forward(const Tensor& input) {
  Tensor out = infer(input);
  cached_input_ = input;
  return out;
}

Tensor Conv1d::backward(const Tensor& grad_output) {
  const std::size_t n = cached_input_.dim(0), len = cached_input_.dim(1);
  const std::size_t steps = len - width_ + 1;
  if (grad_output.shape() != std::vector<std::size_t>{n, steps, filters_}) {
    throw ShapeError("conv1d backward: gradient " + grad_output.shape_string());
  }
  const std::size_t span = width_ * channels_;
  Tensor grad_input(cached_input_.shape());
  auto dw = weight_.grad.data();
  auto db = bias_.grad.data();
  const auto w = weight_.value.data();
  for (std::size_t r = 0; r < n; ++r) {
    const double* x = cached_input_.row(r).data();
    double* dx = grad_input.row(r).data();
    const double* g = grad_output.row(r).data();
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t f = 0; f < filters_; ++f) {
        const double go = g[t * filters_ + f];
        if (go == 0.0) continue;  // sparse after max-pooling
        db[f] += go;
        double* dwf = dw.data() + f * span;
        const double* wf = w.data() + f * span;
        const double* window = x + t * channels_;
        double* dwindow = dx + t * channels_;
        for (std::size_t j = 0; j < span; ++j) {
          dwf[j] += go * window[j];
          dwindow[j] += go * wf[j];
        }
      }
    }
  }
  return grad_input;
}

void Conv1d::initialize(Rng& rng) {
  glorot(weight_.value, width_ * channels_, width_ * filters_, rng);
  bias_.value.fill(0.0);
}

nlohmann::json Conv1d::descriptor() const {
  return {{"kind", "conv1d"}, {"channels", channels_}, {"width", width_}, {"filters", filters_}};
}

// ---------------------------------------------------------------- Relu

Tensor Relu::infer(const Tensor& input) const {
  Tensor out = input;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor Relu::forward(const Tensor& input) {
  cached_input_ = input;
  return infer(input);
}

Tensor Relu::backward(const Tensor& grad_output) {
  if (grad_output.shape() != cached_input_.shape()) {
    throw ShapeError("relu backward: gradient " + grad_output.shape_string());
  }
  Tensor grad = grad_output;
  const auto x = cached_input_.data();
  auto g = grad.data();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(x[i] > 0.0)) g[i] = 0.0;
  }
  return grad;
}

// ---------------------------------------------------------------- MaxPoolOverTime

namespace {

void check_pool_input(const Tensor& input) {
  if (input.rank() != 3) {
    throw ShapeError("maxpool_time expects [n, T, F], got " + input.shape_string());
  }
}

}  // namespace

Tensor MaxPoolOverTime::infer(const Tensor& input) const {
  check_pool_input(input);
  const std::size_t n = input.dim(0), steps = input.dim(1), feats = input.dim(2);
  Tensor out({n, feats});
  for (std::size_t r = 0; r < n; ++r) {
    const double* x = input.row(r).data();
    for (std::size_t f = 0; f < feats; ++f) {
      double best = x[f];
      for (std::size_t t = 1; t < steps; ++t) best = std::max(best, x[t * feats + f]);
      out.at(r, f) = best;
    }
  }
  return out;
}

Tensor MaxPoolOverTime::forward(const Tensor& input) {
  check_pool_input(input);
  const std::size_t n = input.dim(0), steps = input.dim(1), feats = input.dim(2);
  input_shape_ = input.shape();
  argmax_.assign(n * feats, 0);
  Tensor out({n, feats});
  for (std::size_t r = 0; r < n; ++r) {
    const double* x = input.row(r).data();
    for (std::size_t f = 0; f < feats; ++f) {
      std::size_t best_t = 0;
      for (std::size_t t = 1; t < steps; ++t) {
        if (x[t * feats + f] > x[best_t * feats + f]) best_t = t;
      }
      argmax_[r * feats + f] = best_t;
      out.at(r, f) = x[best_t * feats + f];
    }
  }
  return out;
}

Tensor MaxPoolOverTime::backward(const Tensor& grad_output) {
  const std::size_t n = input_shape_[0], feats = input_shape_[2];
  if (grad_output.shape() != std::vector<std::size_t>{n, feats}) {
    throw ShapeError("maxpool_time backward: gradient " + grad_output.shape_string());
  }
  Tensor grad(input_shape_);
  for (std::size_t r = 0; r < n; ++r) {
    double* g = grad.row(r).data();
    for (std::size_t f = 0; f < feats; ++f) {
      g[argmax_[r * feats + f] * feats + f] = grad_output.at(r, f);
    }
  }
  return grad;
}

// ---------------------------------------------------------------- Dropout

Dropout::Dropout(double rate, std::uint64_t seed) : rate_(rate), rng_(seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must be in [0, 1)");
}

Tensor Dropout::forward(const Tensor& input) {
  mask_.assign(input.size(), 1.0);
  Tensor out = input;
  if (rate_ == 0.0) return out;
  const double keep = 1.0 - rate_;
  auto y = out.data();
  for (std::size_t i = 0; i < y.size(); ++i) {
    mask_[i] = rng_.uniform() < keep ? 1.0 / keep : 0.0;
    y[i] *= mask_[i];
  }
  return out;
}

Tensor Dropout::backward(const Tensor& grad_output) {
  if (grad_output.size() != mask_.size()) {
    throw ShapeError("dropout backward: gradient " + grad_output.shape_string());
  }
  Tensor grad = grad_output;
  auto g = grad.data();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= mask_[i];
  return grad;
}

nlohmann::json Dropout::descriptor() const { return {{"kind", "dropout"}, {"rate", rate_}}; }

// ---------------------------------------------------------------- Softmax

Tensor Softmax::infer(const Tensor& input) const {
  if (input.rank() != 2) throw ShapeError("softmax expects [n, K], got " + input.shape_string());
  Tensor out = input;
  for (std::size_t r = 0; r < out.dim(0); ++r) {
    auto y = out.row(r);
    const double top = *std::max_element(y.begin(), y.end());
    double total = 0.0;
    for (double& v : y) {
      v = std::exp(v - top);
      total += v;
    }
    for (double& v : y) v /= total;
  }
  return out;
}

Tensor Softmax::forward(const Tensor& input) {
  cached_output_ = infer(input);
  return cached_output_;
}

Tensor Softmax::backward(const Tensor& grad_output) {
  if (grad_output.shape() != cached_output_.shape()) {
    throw ShapeError("softmax backward: gradient " + grad_output.shape_string());
  }
  Tensor grad(grad_output.shape());
  for (std::size_t r = 0; r < grad.dim(0); ++r) {
    const auto y = cached_output_.row(r);
    const auto g = grad_output.row(r);
    double dot = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) dot += g[k] * y[k];
    auto dx = grad.row(r);
    for (std::size_t k = 0; k < y.size(); ++k) dx[k] = y[k] * (g[k] - dot);
  }
  return grad;
}

// ---------------------------------------------------------------- Concat

Concat::Concat(std::vector<LayerStack> branches) : branches_(std::move(branches)) {
  if (branches_.empty()) throw std::invalid_argument("concat needs at least one branch");
}

Concat::Concat(const Concat& other) : Layer(other), branches_(other.branches_) {}

Concat::~Concat() = default;

Tensor Concat::join(std::vector<Tensor> parts) const {
  const std::size_t n = parts.front().dim(0);
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != 2 || p.dim(0) != n) {
      throw ShapeError("concat branches must yield [n, f], got " + p.shape_string());
    }
    total += p.dim(1);
  }
  Tensor out({n, total});
  for (std::size_t r = 0; r < n; ++r) {
    auto y = out.row(r);
    std::size_t offset = 0;
    for (const Tensor& p : parts) {
      const auto src = p.row(r);
      std::copy(src.begin(), src.end(), y.begin() + static_cast<std::ptrdiff_t>(offset));
      offset += src.size();
    }
  }
  return out;
}

Tensor Concat::infer(const Tensor& input) const {
  std::vector<Tensor> parts;
  for (const LayerStack& b : branches_) parts.push_back(b.infer(input));
  return join(std::move(parts));
}

Tensor Concat::forward(const Tensor& input) {
  std::vector<Tensor> parts;
  widths_.clear();
  for (LayerStack& b : branches_) {
    parts.push_back(b.forward(input, true));
    widths_.push_back(parts.back().rank() == 2 ? parts.back().dim(1) : 0);
  }
  return join(std::move(parts));
}

Tensor Concat::backward(const Tensor& grad_output) {
  const std::size_t n = grad_output.dim(0);
  Tensor grad_input;
  std::size_t offset = 0;
  for (std::size_t b = 0; b < branches_.size(); ++b) {
    Tensor part({n, widths_[b]});
    for (std::size_t r = 0; r < n; ++r) {
      const auto src = grad_output.row(r).subspan(offset, widths_[b]);
      std::copy(src.begin(), src.end(), part.row(r).begin());
    }
    offset += widths_[b];
    Tensor g = branches_[b].backward(part);
    if (grad_input.empty()) {
      grad_input = std::move(g);
    } else {
      auto acc = grad_input.data();
      const auto add = g.data();
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += add[i];
    }
  }
  return grad_input;
}

std::vector<Parameter*> Concat::parameters() {
  std::vector<Parameter*> out;
  for (LayerStack& b : branches_) {
    for (Parameter* p : b.parameters()) out.push_back(p);
  }
  return out;
}

void Concat::initialize(Rng& rng) {
  for (LayerStack& b : branches_) b.initialize(rng.next());
}

nlohmann::json Concat::descriptor() const {
  nlohmann::json d = {{"kind", "concat"}, {"branches", nlohmann::json::array()}};
  for (const LayerStack& b : branches_) d["branches"].push_back(b.descriptor());
  return d;
}

std::unique_ptr<Layer> layer_from_descriptor(const nlohmann::json& d) {
  const std::string kind = d.at("kind").get<std::string>();
  if (kind == "linear") {
    return std::make_unique<Linear>(d.at("in").get<std::size_t>(), d.at("out").get<std::size_t>());
  }
  if (kind == "conv1d") {
    return std::make_unique<Conv1d>(d.at("channels").get<std::size_t>(),
                                    d.at("width").get<std::size_t>(),
                                    d.at("filters").get<std::size_t>());
  }
  if (kind == "relu") return std::make_unique<Relu>();
  if (kind == "maxpool_time") return std::make_unique<MaxPoolOverTime>();
  if (kind == "softmax") return std::make_unique<Softmax>();
  if (kind == "dropout") return std::make_unique<Dropout>(d.at("rate").get<double>());
  if (kind == "concat") {
    std::vector<LayerStack> branches;
    for (const auto& b : d.at("branches")) branches.push_back(LayerStack::from_descriptor(b));
    return std::make_unique<Concat>(std::move(branches));
  }
  throw std::invalid_argument("unknown layer kind '" + kind + "'");
}

// ---------------------------------------------------------------- LayerStack

LayerStack::LayerStack(const LayerStack& other) : cached_(false) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

LayerStack& LayerStack::operator=(const LayerStack& other) {
  if (this != &other) {
    LayerStack copy(other);
    *this = std::move(copy);
  }
  return *this;
}

LayerStack::~LayerStack() = default;

LayerStack& LayerStack::add(std::unique_ptr<Layer> layer) {
  layers_.push_back(std::move(layer));
  cached_ = false;
  return *this;
}

Tensor LayerStack::forward(const Tensor& input, bool train) {
  if (!train) return infer(input);
  Tensor x = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    try {
      x = layers_[i]->forward(x);
    } catch (const ShapeError& e) {
      cached_ = false;
      throw ShapeError("layer " + std::to_string(i) + " (" + layers_[i]->kind() + "): " + e.what(),
                       i);
    }
  }
  cached_ = true;
  return x;
}

Tensor LayerStack::infer(const Tensor& input) const {
  Tensor x = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    try {
      x = layers_[i]->infer(x);
    } catch (const ShapeError& e) {
      throw ShapeError("layer " + std::to_string(i) + " (" + layers_[i]->kind() + "): " + e.what(),
                       i);
    }
  }
  return x;
}

Tensor LayerStack::backward(const Tensor& grad_output) {
  if (!cached_) throw std::logic_error("backward called without a cached training forward pass");
  Tensor g = grad_output;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    try {
      g = layers_[i]->backward(g);
    } catch (const ShapeError& e) {
      throw ShapeError("layer " + std::to_string(i) + " (" + layers_[i]->kind() + "): " + e.what(),
                       i);
    }
  }
  return g;
}

ParameterSet LayerStack::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_) {
    for (Parameter* p : l->parameters()) out.push_back(p);
  }
  return ParameterSet(std::move(out));
}

std::vector<const Parameter*> LayerStack::parameters() const {
  std::vector<const Parameter*> out;
  for (Parameter* p : const_cast<LayerStack*>(this)->parameters()) out.push_back(p);
  return out;
}

void LayerStack::zero_grad() { parameters().zero_grad(); }

void LayerStack::initialize(std::uint64_t seed) {
  Rng rng(seed);
  for (auto& l : layers_) l->initialize(rng);
  zero_grad();
}

nlohmann::json LayerStack::descriptor() const {
  nlohmann::json d = nlohmann::json::array();
  for (const auto& l : layers_) d.push_back(l->descriptor());
  return d;
}

LayerStack LayerStack::from_descriptor(const nlohmann::json& d) {
  LayerStack stack;
  for (const auto& item : d) stack.add(layer_from_descriptor(item));
  return stack;
}

}  // namespace dcitl::nn
