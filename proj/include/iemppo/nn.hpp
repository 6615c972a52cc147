#pragma once

// Small dense tanh networks with exact reverse-mode gradients and Adam.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "iemppo/core.hpp"

namespace iemppo::nn {

enum class Activation { kTanh, kIdentity };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

struct MlpSpec {
  int input_dim = 1;
  std::vector<int> hidden_dims;
  int output_dim = 1;
  Activation hidden_activation = Activation::kTanh;
  Activation output_activation = Activation::kIdentity;

  /// Throws ShapeError if any dimension is < 1.
  void validate() const;
  int num_layers() const { return static_cast<int>(hidden_dims.size()) + 1; }
  int layer_input_dim(int layer) const;
  int layer_output_dim(int layer) const;
  Activation layer_activation(int layer) const;
  std::size_t num_params() const;

  bool operator==(const MlpSpec&) const = default;
};

struct Layer {
  Mat w;  // [out x in]
  Vec b;  // [out]
};

struct ParamSet {
  std::vector<Layer> layers;

  static ParamSet zeros(const MlpSpec& spec);

  std::size_t size() const;
  bool all_finite() const;
  /// Throws ShapeError naming the first inconsistent layer.
  void check_shape(const MlpSpec& spec) const;

  std::vector<double> flatten() const;
  void assign_flat(const std::vector<double>& flat);

  bool operator==(const ParamSet& other) const;
};

/// Glorot-uniform weights, zero biases.
ParamSet glorot_init(const MlpSpec& spec, Rng& rng);

/// Post-activation outputs of every layer; outputs[0] is the input batch.
struct ForwardCache {
  std::vector<Mat> outputs;
};

/// `inputs` holds one sample per column.
Mat forward_batch(const MlpSpec& spec, const ParamSet& params, const Mat& inputs,
                  ForwardCache* cache = nullptr);
Vec forward(const MlpSpec& spec, const ParamSet& params, const Vec& input);

struct BatchGradients {
  ParamSet params;
  Mat inputs;
};

/// Gradients of sum_over_samples(output . output_grad). `cache` must come from
/// forward_batch on the same params.
BatchGradients backward_batch(const MlpSpec& spec, const ParamSet& params,
                              const ForwardCache& cache, const Mat& output_grads);

struct Gradients {
  ParamSet params;
  Vec input;
};

Gradients backward(const MlpSpec& spec, const ParamSet& params, const Vec& input,
                   const Vec& output_grad);

struct AdamState {
  long step_count = 0;
  ParamSet first_moment;
  ParamSet second_moment;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_spec(const MlpSpec& spec, double learning_rate);
};

/// Bias-corrected Adam descent step: params -= lr * m_hat / (sqrt(v_hat) + eps).
/// Callers that ascend pass negated gradients.
void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state);

/// A network: its shape plus its parameters.
struct Mlp {
  MlpSpec spec;
  ParamSet params;

  Mlp() = default;
  Mlp(MlpSpec s, ParamSet p);
  Mlp(MlpSpec s, Rng& rng);

  Vec operator()(const Vec& input) const { return forward(spec, params, input); }
  Mat batch(const Mat& inputs, ForwardCache* cache = nullptr) const {
    return forward_batch(spec, params, inputs, cache);
  }
};

}  // namespace iemppo::nn
