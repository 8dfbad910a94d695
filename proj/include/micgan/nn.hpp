#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <vector>

#include "micgan/matrix.hpp"
#include "micgan/rng.hpp"

// Small dense-network engine: layer list, exact manual backprop, Adam.
namespace micgan::nn {

enum class Activation : std::uint8_t {
  linear = 0,
  relu = 1,
  leaky_relu = 2,
  tanh = 3,
  sigmoid = 4,
};

const char* to_string(Activation a);

struct DenseLayer {
  Matrix weights;  // out x in
  std::vector<double> bias;
  Activation activation = Activation::linear;
  double slope = 0.2;  // leaky_relu only, in (0, 1)

  std::size_t in_dim() const noexcept { return weights.cols(); }
  std::size_t out_dim() const noexcept { return weights.rows(); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct Mlp {
  std::vector<DenseLayer> layers;

  std::size_t in_dim() const;
  std::size_t out_dim() const;
  std::size_t parameter_count() const;
  // Throws ShapeError/ArgumentError when layer dims do not chain or a
  // leaky slope is outside (0, 1).
  void validate() const;

  friend bool operator==(const Mlp&, const Mlp&) = default;
};

// Everything the backward pass needs from a forward pass.
struct ActivationTrace {
  std::vector<Matrix> inputs;  // inputs[l] feeds layer l
  std::vector<Matrix> pre;     // pre-activations of layer l
  Matrix output;
};

struct LayerGrad {
  Matrix weights;
  std::vector<double> bias;
};

using ParamGrads = std::vector<LayerGrad>;

struct Gradients {
  ParamGrads params;
  Matrix input;
};

enum class InitScheme { xavier_uniform, normal };

struct Init {
  InitScheme scheme = InitScheme::xavier_uniform;
  double sigma = 0.02;  // normal only
};

// out x in weight matrix. Xavier bound is sqrt(6 / (in + out)).
Matrix init_weights(std::size_t out, std::size_t in, Init init, Rng& rng);

// Builds an MLP through `dims` (dims.front() = input, dims.back() = output).
// Hidden layers use `hidden`, the last layer uses `output`; biases start at 0.
Mlp make_mlp(const std::vector<std::size_t>& dims, Activation hidden, Activation output,
             double slope, Init init, Rng& rng);

ActivationTrace forward(const Mlp& net, const Matrix& input);

// Forward pass keeping only the output.
Matrix predict(const Mlp& net, const Matrix& input);

Gradients backward(const Mlp& net, const ActivationTrace& trace, const Matrix& output_grad);

ParamGrads zero_grads(const Mlp& net);
void accumulate(ParamGrads& into, const ParamGrads& g);

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  ParamGrads first;
  ParamGrads second;

  static AdamState for_net(const Mlp& net, AdamConfig config);
};

void adam_step(Mlp& net, const ParamGrads& grads, AdamState& state);

// Versioned binary record: magic, version, layer count, then per layer
// in/out dims, activation tag, slope, weights and bias as LE float64.
void save_mlp(std::ostream& os, const Mlp& net);
Mlp load_mlp(std::istream& is);

void save_adam(std::ostream& os, const AdamState& state);
AdamState load_adam(std::istream& is, const Mlp& net);

}  // namespace micgan::nn
