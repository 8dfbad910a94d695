#include "micgan/nn.hpp"

#include <cmath>
#include <string>

#include "micgan/binary_io.hpp"
#include "micgan/kernels.hpp"

namespace micgan::nn {

namespace {

constexpr char kMlpMagic[9] = "MICG-MLP";
constexpr char kAdamMagic[9] = "MICGADAM";
constexpr std::uint32_t kVersion = 1;

double activate(Activation a, double x, double slope) {
  switch (a) {
    case Activation::linear: return x;
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::leaky_relu: return x > 0.0 ? x : slope * x;
    case Activation::tanh: return std::tanh(x);
    case Activation::sigmoid:
      // Split by sign so exp never overflows.
      if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
      else {
        const double e = std::exp(x);
        return e / (1.0 + e);
      }
  }
  return x;
}

double derivative(Activation a, double pre, double post, double slope) {
  switch (a) {
    case Activation::linear: return 1.0;
    case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::leaky_relu: return pre > 0.0 ? 1.0 : slope;
    case Activation::tanh: return 1.0 - post * post;
    case Activation::sigmoid: return post * (1.0 - post);
  }
  return 1.0;
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.all_finite()) throw NumericError(std::string(what) + ": non-finite value");
}

Activation activation_from_tag(std::uint8_t tag) {
  if (tag > static_cast<std::uint8_t>(Activation::sigmoid))
    throw FormatError("unknown activation tag " + std::to_string(tag));
  return static_cast<Activation>(tag);
}

}  // namespace

const char* to_string(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

std::size_t Mlp::in_dim() const {
  if (layers.empty()) throw ShapeError("Mlp has no layers");
  return layers.front().in_dim();
}

std::size_t Mlp::out_dim() const {
  if (layers.empty()) throw ShapeError("Mlp has no layers");
  return layers.back().out_dim();
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

void Mlp::validate() const {
  if (layers.empty()) throw ShapeError("Mlp has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.bias.size() != layer.out_dim())
      throw ShapeError("layer " + std::to_string(l) + ": bias length != out dim");
    if (l + 1 < layers.size() && layer.out_dim() != layers[l + 1].in_dim())
      throw ShapeError("layer " + std::to_string(l) + " out dim " +
                       std::to_string(layer.out_dim()) + " != layer " + std::to_string(l + 1) +
                       " in dim " + std::to_string(layers[l + 1].in_dim()));
    if (layer.activation == Activation::leaky_relu && !(layer.slope > 0.0 && layer.slope < 1.0))
      throw ArgumentError("layer " + std::to_string(l) + ": leaky slope must be in (0,1)");
  }
}

Matrix init_weights(std::size_t out, std::size_t in, Init init, Rng& rng) {
  if (out == 0 || in == 0) throw ShapeError("init_weights: zero dimension");
  Matrix w(out, in);
  if (init.scheme == InitScheme::xavier_uniform) {
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    for (auto& v : w.data()) v = rng.uniform(-bound, bound);
  } else {
    if (!(init.sigma > 0.0)) throw ArgumentError("init_weights: sigma must be positive");
    for (auto& v : w.data()) v = rng.normal(0.0, init.sigma);
  }
  return w;
}

Mlp make_mlp(const std::vector<std::size_t>& dims, Activation hidden, Activation output,
             double slope, Init init, Rng& rng) {
  if (dims.size() < 2) throw ShapeError("make_mlp: need at least input and output dims");
  Mlp net;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    DenseLayer layer;
    layer.weights = init_weights(dims[l + 1], dims[l], init, rng);
    layer.bias.assign(dims[l + 1], 0.0);
    layer.activation = (l + 2 == dims.size()) ? output : hidden;
    layer.slope = slope;
    net.layers.push_back(std::move(layer));
  }
  net.validate();
  return net;
}

ActivationTrace forward(const Mlp& net, const Matrix& input) {
  if (net.layers.empty()) throw ShapeError("forward: empty network");
  if (input.cols() != net.in_dim())
    throw ShapeError("forward: input has " + std::to_string(input.cols()) +
                     " columns, network expects " + std::to_string(net.in_dim()));
  require_finite(input, "forward input");
  ActivationTrace trace;
  trace.inputs.reserve(net.layers.size());
  trace.pre.reserve(net.layers.size());
  Matrix x = input;
  for (const auto& layer : net.layers) {
    Matrix pre = kernels::matmul_a_bt(x, layer.weights);
    kernels::add_row_vector(pre, layer.bias);
    Matrix post = pre;
    for (auto& v : post.data()) v = activate(layer.activation, v, layer.slope);
    trace.inputs.push_back(std::move(x));
    trace.pre.push_back(std::move(pre));
    x = std::move(post);
  }
  require_finite(x, "forward output");
  trace.output = std::move(x);
  return trace;
}

Matrix predict(const Mlp& net, const Matrix& input) {
  if (net.layers.empty()) throw ShapeError("predict: empty network");
  if (input.cols() != net.in_dim())
    throw ShapeError("predict: input has " + std::to_string(input.cols()) +
                     " columns, network expects " + std::to_string(net.in_dim()));
  require_finite(input, "predict input");
  Matrix x;
  const Matrix* cur = &input;
  for (const auto& layer : net.layers) {
    x = kernels::matmul_a_bt(*cur, layer.weights);
    cur = &x;
    kernels::add_row_vector(x, layer.bias);
    for (auto& v : x.data()) v = activate(layer.activation, v, layer.slope);
  }
  require_finite(x, "predict output");
  return x;
}

Gradients backward(const Mlp& net, const ActivationTrace& trace, const Matrix& output_grad) {
  if (trace.pre.size() != net.layers.size() || trace.inputs.size() != net.layers.size())
    throw ShapeError("backward: trace does not match network depth");
  require_same_shape(output_grad, trace.output, "backward output_grad");
  require_finite(output_grad, "backward output_grad");

  Gradients g;
  g.params.resize(net.layers.size());
  Matrix upstream = output_grad;
  for (std::size_t l = net.layers.size(); l-- > 0;) {
    const auto& layer = net.layers[l];
    const Matrix& pre = trace.pre[l];
    const Matrix& post = (l + 1 < net.layers.size()) ? trace.inputs[l + 1] : trace.output;
    if (pre.cols() != layer.out_dim()) throw ShapeError("backward: trace/layer mismatch");
    Matrix dpre = std::move(upstream);
    auto& d = dpre.data();
    const auto& pv = pre.data();
    const auto& qv = post.data();
    if (layer.activation != Activation::linear)
      for (std::size_t i = 0; i < d.size(); ++i)
        d[i] *= derivative(layer.activation, pv[i], qv[i], layer.slope);
    g.params[l].weights = kernels::matmul_at_b(dpre, trace.inputs[l]);
    g.params[l].bias = kernels::column_sums(dpre);
    upstream = kernels::matmul(dpre, layer.weights);
  }
  g.input = std::move(upstream);
  return g;
}

ParamGrads zero_grads(const Mlp& net) {
  ParamGrads g(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    g[l].weights = Matrix(net.layers[l].out_dim(), net.layers[l].in_dim());
    g[l].bias.assign(net.layers[l].out_dim(), 0.0);
  }
  return g;
}

void accumulate(ParamGrads& into, const ParamGrads& g) {
  if (into.size() != g.size()) throw ShapeError("accumulate: layer count mismatch");
  for (std::size_t l = 0; l < g.size(); ++l) {
    require_same_shape(into[l].weights, g[l].weights, "accumulate");
    if (into[l].bias.size() != g[l].bias.size()) throw ShapeError("accumulate: bias mismatch");
    for (std::size_t i = 0; i < g[l].weights.size(); ++i)
      into[l].weights.data()[i] += g[l].weights.data()[i];
    for (std::size_t i = 0; i < g[l].bias.size(); ++i) into[l].bias[i] += g[l].bias[i];
  }
}

AdamState AdamState::for_net(const Mlp& net, AdamConfig config) {
  AdamState s;
  s.config = config;
  s.first = zero_grads(net);
  s.second = zero_grads(net);
  return s;
}

namespace {

void adam_update(std::vector<double>& theta, const std::vector<double>& grad,
                 std::vector<double>& m, std::vector<double>& v, const AdamConfig& c,
                 double bc1, double bc2) {
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad[i];
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    theta[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
  }
}

}  // namespace

void adam_step(Mlp& net, const ParamGrads& grads, AdamState& state) {
  if (grads.size() != net.layers.size() || state.first.size() != net.layers.size() ||
      state.second.size() != net.layers.size())
    throw ShapeError("adam_step: layer count mismatch");
  for (std::size_t l = 0; l < grads.size(); ++l) {
    require_same_shape(grads[l].weights, net.layers[l].weights, "adam_step weights");
    require_same_shape(state.first[l].weights, net.layers[l].weights, "adam_step moments");
    if (grads[l].bias.size() != net.layers[l].bias.size())
      throw ShapeError("adam_step: bias length mismatch");
    require_finite(grads[l].weights, "adam_step gradient");
  }
  ++state.step;
  const auto t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.config.beta1, t);
  const double bc2 = 1.0 - std::pow(state.config.beta2, t);
  for (std::size_t l = 0; l < grads.size(); ++l) {
    adam_update(net.layers[l].weights.data(), grads[l].weights.data(),
                state.first[l].weights.data(), state.second[l].weights.data(), state.config, bc1,
                bc2);
    adam_update(net.layers[l].bias, grads[l].bias, state.first[l].bias, state.second[l].bias,
                state.config, bc1, bc2);
  }
}

void save_mlp(std::ostream& os, const Mlp& net) {
  net.validate();
  bin::write_magic(os, kMlpMagic);
  bin::write_u32(os, kVersion);
  bin::write_u32(os, static_cast<std::uint32_t>(net.layers.size()));
  for (const auto& layer : net.layers) {
    bin::write_u32(os, static_cast<std::uint32_t>(layer.in_dim()));
    bin::write_u32(os, static_cast<std::uint32_t>(layer.out_dim()));
    bin::write_u8(os, static_cast<std::uint8_t>(layer.activation));
    bin::write_f64(os, layer.slope);
    bin::write_f64s(os, layer.weights.data());
    bin::write_f64s(os, layer.bias);
  }
}

Mlp load_mlp(std::istream& is) {
  bin::expect_magic(is, kMlpMagic, "network record");
  const std::uint32_t version = bin::read_u32(is);
  if (version != kVersion)
    throw FormatError("network record: unsupported version " + std::to_string(version));
  const std::uint32_t n = bin::read_u32(is);
  if (n == 0 || n > 4096) throw FormatError("network record: implausible layer count");
  Mlp net;
  for (std::uint32_t l = 0; l < n; ++l) {
    DenseLayer layer;
    const std::uint32_t in = bin::read_u32(is);
    const std::uint32_t out = bin::read_u32(is);
    if (in == 0 || out == 0 || std::uint64_t{in} * out > (std::uint64_t{1} << 28))
      throw FormatError("network record: implausible layer dims");
    layer.activation = activation_from_tag(bin::read_u8(is));
    layer.slope = bin::read_f64(is);
    layer.weights = Matrix(out, in, bin::read_f64s(is, std::size_t{in} * out));
    layer.bias = bin::read_f64s(is, out);
    net.layers.push_back(std::move(layer));
  }
  try {
    net.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("network record: ") + e.what());
  }
  return net;
}

void save_adam(std::ostream& os, const AdamState& state) {
  bin::write_magic(os, kAdamMagic);
  bin::write_u32(os, kVersion);
  bin::write_f64(os, state.config.lr);
  bin::write_f64(os, state.config.beta1);
  bin::write_f64(os, state.config.beta2);
  bin::write_f64(os, state.config.eps);
  bin::write_u64(os, state.step);
  bin::write_u32(os, static_cast<std::uint32_t>(state.first.size()));
  for (const ParamGrads* moments : {&state.first, &state.second})
    for (const auto& l : *moments) {
      bin::write_f64s(os, l.weights.data());
      bin::write_f64s(os, l.bias);
    }
}

AdamState load_adam(std::istream& is, const Mlp& net) {
  bin::expect_magic(is, kAdamMagic, "optimizer record");
  const std::uint32_t version = bin::read_u32(is);
  if (version != kVersion)
    throw FormatError("optimizer record: unsupported version " + std::to_string(version));
  AdamConfig cfg;
  cfg.lr = bin::read_f64(is);
  cfg.beta1 = bin::read_f64(is);
  cfg.beta2 = bin::read_f64(is);
  cfg.eps = bin::read_f64(is);
  AdamState s = AdamState::for_net(net, cfg);
  s.step = bin::read_u64(is);
  if (bin::read_u32(is) != net.layers.size())
    throw FormatError("optimizer record: layer count does not match network");
  for (ParamGrads* moments : {&s.first, &s.second})
    for (auto& l : *moments) {
      l.weights.data() = bin::read_f64s(is, l.weights.size());
      l.bias = bin::read_f64s(is, l.bias.size());
    }
  return s;
}

}  // namespace micgan::nn
