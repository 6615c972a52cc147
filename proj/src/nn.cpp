#include "iemppo/nn.hpp"

#include <cmath>
#include <sstream>

namespace iemppo::nn {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kTanh:
      return "tanh";
    case Activation::kIdentity:
      return "identity";
  }
  return "unknown";
}

Activation activation_from_string(std::string_view name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "identity") return Activation::kIdentity;
  throw ParseError("unknown activation '" + std::string(name) + "'");
}

void MlpSpec::validate() const {
  if (input_dim < 1) throw ShapeError("MlpSpec: input_dim must be >= 1");
  if (output_dim < 1) throw ShapeError("MlpSpec: output_dim must be >= 1");
  for (std::size_t i = 0; i < hidden_dims.size(); ++i) {
    if (hidden_dims[i] < 1) {
      throw ShapeError("MlpSpec: hidden layer " + std::to_string(i) + " has width < 1");
    }
  }
}

int MlpSpec::layer_input_dim(int layer) const {
  return layer == 0 ? input_dim : hidden_dims[layer - 1];
}

int MlpSpec::layer_output_dim(int layer) const {
  return layer == num_layers() - 1 ? output_dim : hidden_dims[layer];
}

Activation MlpSpec::layer_activation(int layer) const {
  return layer == num_layers() - 1 ? output_activation : hidden_activation;
}

std::size_t MlpSpec::num_params() const {
  std::size_t n = 0;
  for (int l = 0; l < num_layers(); ++l) {
    n += static_cast<std::size_t>(layer_output_dim(l)) * (layer_input_dim(l) + 1);
  }
  return n;
}

ParamSet ParamSet::zeros(const MlpSpec& spec) {
  spec.validate();
  ParamSet p;
  p.layers.reserve(spec.num_layers());
  for (int l = 0; l < spec.num_layers(); ++l) {
    p.layers.push_back(
        {Mat::Zero(spec.layer_output_dim(l), spec.layer_input_dim(l)), Vec::Zero(spec.layer_output_dim(l))});
  }
  return p;
}

std::size_t ParamSet::size() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.w.size() + layer.b.size();
  return n;
}

bool ParamSet::all_finite() const {
  for (const auto& layer : layers) {
    if (!layer.w.allFinite() || !layer.b.allFinite()) return false;
  }
  return true;
}

void ParamSet::check_shape(const MlpSpec& spec) const {
  if (static_cast<int>(layers.size()) != spec.num_layers()) {
    throw ShapeError("parameter set has " + std::to_string(layers.size()) + " layers, spec expects " +
                     std::to_string(spec.num_layers()));
  }
  for (int l = 0; l < spec.num_layers(); ++l) {
    const auto& layer = layers[l];
    const int out = spec.layer_output_dim(l);
    const int in = spec.layer_input_dim(l);
    if (layer.w.rows() != out || layer.w.cols() != in || layer.b.size() != out) {
      std::ostringstream msg;
      msg << "layer " << l << ": weight " << layer.w.rows() << "x" << layer.w.cols() << ", bias "
          << layer.b.size() << "; expected " << out << "x" << in << ", " << out;
      throw ShapeError(msg.str());
    }
  }
}

std::vector<double> ParamSet::flatten() const {
  std::vector<double> flat;
  flat.reserve(size());
  for (const auto& layer : layers) {
    flat.insert(flat.end(), layer.w.data(), layer.w.data() + layer.w.size());
    flat.insert(flat.end(), layer.b.data(), layer.b.data() + layer.b.size());
  }
  return flat;
}

void ParamSet::assign_flat(const std::vector<double>& flat) {
  if (flat.size() != size()) throw ShapeError("assign_flat: length mismatch");
  std::size_t k = 0;
  for (auto& layer : layers) {
    std::copy_n(flat.begin() + k, layer.w.size(), layer.w.data());
    k += layer.w.size();
    std::copy_n(flat.begin() + k, layer.b.size(), layer.b.data());
    k += layer.b.size();
  }
}

bool ParamSet::operator==(const ParamSet& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& a = layers[l];
    const auto& b = other.layers[l];
    if (a.w.rows() != b.w.rows() || a.w.cols() != b.w.cols() || a.b.size() != b.b.size()) return false;
    if (a.w != b.w || a.b != b.b) return false;
  }
  return true;
}

ParamSet glorot_init(const MlpSpec& spec, Rng& rng) {
  ParamSet p = ParamSet::zeros(spec);
  for (int l = 0; l < spec.num_layers(); ++l) {
    const double limit = std::sqrt(6.0 / (spec.layer_input_dim(l) + spec.layer_output_dim(l)));
    std::uniform_real_distribution<double> dist(-limit, limit);
    auto& w = p.layers[l].w;
    // Row-major draw order so the layout of Mat does not affect the stream.
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
    }
  }
  return p;
}

namespace {

void apply_activation(Activation a, Mat& z) {
  if (a == Activation::kTanh) z = z.array().tanh();
}

void check_input(const MlpSpec& spec, const ParamSet& params, Eigen::Index rows) {
  params.check_shape(spec);
  if (rows != spec.input_dim) {
    throw ShapeError("layer 0: input has " + std::to_string(rows) + " features, expected " +
                     std::to_string(spec.input_dim));
  }
}

}  // namespace

Mat forward_batch(const MlpSpec& spec, const ParamSet& params, const Mat& inputs, ForwardCache* cache) {
  check_input(spec, params, inputs.rows());
  if (cache) {
    cache->outputs.resize(spec.num_layers() + 1);
    cache->outputs[0] = inputs;
  }
  Mat x = inputs;
  for (int l = 0; l < spec.num_layers(); ++l) {
    const auto& layer = params.layers[l];
    Mat z = layer.w * x;
    z.colwise() += layer.b;
    apply_activation(spec.layer_activation(l), z);
    x = std::move(z);
    if (cache) cache->outputs[l + 1] = x;
  }
  return x;
}

Vec forward(const MlpSpec& spec, const ParamSet& params, const Vec& input) {
  return forward_batch(spec, params, input);
}

BatchGradients backward_batch(const MlpSpec& spec, const ParamSet& params, const ForwardCache& cache,
                              const Mat& output_grads) {
  params.check_shape(spec);
  if (cache.outputs.size() != static_cast<std::size_t>(spec.num_layers() + 1)) {
    throw ShapeError("backward: forward cache does not match network depth");
  }
  const Eigen::Index batch = cache.outputs[0].cols();
  if (output_grads.rows() != spec.output_dim || output_grads.cols() != batch) {
    throw ShapeError("backward: output gradient is " + std::to_string(output_grads.rows()) + "x" +
                     std::to_string(output_grads.cols()) + ", expected " + std::to_string(spec.output_dim) +
                     "x" + std::to_string(batch));
  }

  BatchGradients g{ParamSet::zeros(spec), Mat()};
  Mat delta = output_grads;
  for (int l = spec.num_layers() - 1; l >= 0; --l) {
    if (spec.layer_activation(l) == Activation::kTanh) {
      const auto& y = cache.outputs[l + 1];
      delta.array() *= 1.0 - y.array().square();
    }
    const auto& x = cache.outputs[l];
    g.params.layers[l].w.noalias() = delta * x.transpose();
    g.params.layers[l].b = delta.rowwise().sum();
    Mat prev = params.layers[l].w.transpose() * delta;
    delta = std::move(prev);
  }
  g.inputs = std::move(delta);
  return g;
}

Gradients backward(const MlpSpec& spec, const ParamSet& params, const Vec& input, const Vec& output_grad) {
  ForwardCache cache;
  forward_batch(spec, params, input, &cache);
  auto g = backward_batch(spec, params, cache, output_grad);
  return {std::move(g.params), g.inputs.col(0)};
}

AdamState AdamState::for_spec(const MlpSpec& spec, double learning_rate) {
  AdamState s;
  s.first_moment = ParamSet::zeros(spec);
  s.second_moment = ParamSet::zeros(spec);
  s.learning_rate = learning_rate;
  return s;
}

void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state) {
  if (grads.layers.size() != params.layers.size() || state.first_moment.layers.size() != params.layers.size()) {
    throw ShapeError("adam_step: layer count mismatch");
  }
  for (std::size_t l = 0; l < grads.layers.size(); ++l) {
    const auto& g = grads.layers[l];
    const auto& p = params.layers[l];
    if (g.w.rows() != p.w.rows() || g.w.cols() != p.w.cols() || g.b.size() != p.b.size()) {
      throw ShapeError("adam_step: gradient shape mismatch in layer " + std::to_string(l));
    }
    if (!g.w.allFinite()) throw NumericError("adam_step: non-finite gradient in layer " + std::to_string(l) + " weights");
    if (!g.b.allFinite()) throw NumericError("adam_step: non-finite gradient in layer " + std::to_string(l) + " bias");
  }

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double lr = state.learning_rate;
  const double eps = state.epsilon;

  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseAbs2();
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].w, grads.layers[l].w, state.first_moment.layers[l].w, state.second_moment.layers[l].w);
    update(params.layers[l].b, grads.layers[l].b, state.first_moment.layers[l].b, state.second_moment.layers[l].b);
  }
}

Mlp::Mlp(MlpSpec s, ParamSet p) : spec(std::move(s)), params(std::move(p)) {
  spec.validate();
  params.check_shape(spec);
}

Mlp::Mlp(MlpSpec s, Rng& rng) : spec(std::move(s)), params(glorot_init(spec, rng)) {}

}  // namespace iemppo::nn
