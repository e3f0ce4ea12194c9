#include "fusedrive/nn.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "fusedrive/common.hpp"
#include "fusedrive/random.hpp"

namespace fusedrive::nn {

namespace {

constexpr std::array<char, 8> kMagic{'F', 'D', 'M', 'L', 'P', '0', '0', '1'};
constexpr std::uint8_t kVersion = 1;

double activate(Activation a, double x) {
  switch (a) {
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::tanh: return std::tanh(x);
    case Activation::linear: return x;
  }
  return x;
}

// Derivative expressed through the pre-activation and the activated output.
double activation_slope(Activation a, double pre, double out) {
  switch (a) {
    case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - out * out;
    case Activation::linear: return 1.0;
  }
  return 1.0;
}

void affine(const LayerParams& layer, std::span<const double> in, std::vector<double>& pre) {
  const std::size_t rows = layer.out_dim();
  const std::size_t cols = layer.in_dim();
  pre.resize(rows);
  const double* w = layer.weights.data.data();
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = layer.bias[r];
    const double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * in[c];
    pre[r] = acc;
  }
}

void check_input(const MlpParams& params, std::span<const double> input) {
  if (params.layers.empty()) throw ContractViolation("network has no layers");
  if (input.size() != params.input_dim()) throw ContractViolation("network input has the wrong dimension");
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffU));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw LoadError("checkpoint is truncated");
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() {
    auto b = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[i]);
    return v;
  }
  double f64() {
    auto b = take(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[i]);
    return std::bit_cast<double>(v);
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.data.size() + l.bias.size();
  return n;
}

std::vector<std::size_t> MlpParams::dims() const {
  std::vector<std::size_t> d;
  if (layers.empty()) return d;
  d.push_back(layers.front().in_dim());
  for (const auto& l : layers) d.push_back(l.out_dim());
  return d;
}

void validate(const MlpParams& params) {
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& l = params.layers[i];
    if (l.weights.data.size() != l.weights.rows * l.weights.cols || l.bias.size() != l.weights.rows)
      throw ContractViolation("layer weight/bias shapes disagree");
    if (i > 0 && params.layers[i - 1].out_dim() != l.in_dim())
      throw ContractViolation("adjacent layers are not dimension-compatible");
  }
}

Gradients Gradients::zeros_like(const MlpParams& params) {
  Gradients g;
  g.layers.reserve(params.layers.size());
  for (const auto& l : params.layers)
    g.layers.push_back({Matrix(l.weights.rows, l.weights.cols), std::vector<double>(l.bias.size(), 0.0)});
  return g;
}

void Gradients::set_zero() {
  for (auto& l : layers) {
    std::fill(l.weights.data.begin(), l.weights.data.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
}

void Gradients::add(const Gradients& other) {
  if (other.layers.size() != layers.size()) throw ContractViolation("gradient shapes disagree");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& w = layers[i].weights.data;
    const auto& ow = other.layers[i].weights.data;
    if (w.size() != ow.size()) throw ContractViolation("gradient shapes disagree");
    for (std::size_t k = 0; k < w.size(); ++k) w[k] += ow[k];
    for (std::size_t k = 0; k < layers[i].bias.size(); ++k) layers[i].bias[k] += other.layers[i].bias[k];
  }
}

void Gradients::scale(double k) {
  for (auto& l : layers) {
    for (double& w : l.weights.data) w *= k;
    for (double& b : l.bias) b *= k;
  }
}

MlpParams init(std::span<const std::size_t> dims, std::span<const Activation> activations,
               std::uint64_t seed) {
  if (dims.size() < 2) throw ContractViolation("a network needs at least an input and an output width");
  if (activations.size() != dims.size() - 1) throw ContractViolation("one activation per layer is required");
  Rng rng(seed);
  MlpParams params;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    if (dims[i] == 0 || dims[i + 1] == 0) throw ContractViolation("layer widths must be positive");
    LayerParams layer{Matrix(dims[i + 1], dims[i]), std::vector<double>(dims[i + 1], 0.0), activations[i]};
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[i]));
    for (double& w : layer.weights.data) w = rng.uniform(-bound, bound);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

ForwardPass forward(const MlpParams& params, std::span<const double> input) {
  check_input(params, input);
  ForwardPass pass;
  auto& cache = pass.cache;
  cache.layer_inputs.resize(params.layers.size());
  cache.pre_activations.resize(params.layers.size());
  std::vector<double> current(input.begin(), input.end());
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& layer = params.layers[i];
    affine(layer, current, cache.pre_activations[i]);
    cache.layer_inputs[i] = std::move(current);
    current.resize(layer.out_dim());
    for (std::size_t r = 0; r < current.size(); ++r)
      current[r] = activate(layer.activation, cache.pre_activations[i][r]);
  }
  cache.output = current;
  pass.output = std::move(current);
  return pass;
}

std::vector<double> predict(const MlpParams& params, std::span<const double> input) {
  check_input(params, input);
  std::vector<double> current(input.begin(), input.end());
  std::vector<double> pre;
  for (const auto& layer : params.layers) {
    affine(layer, current, pre);
    current.resize(pre.size());
    for (std::size_t r = 0; r < pre.size(); ++r) current[r] = activate(layer.activation, pre[r]);
  }
  return current;
}

void backward_accumulate(const MlpParams& params, const ForwardCache& cache,
                         std::span<const double> output_grad, Gradients* param_grads,
                         std::vector<double>* input_grad) {
  const std::size_t n = params.layers.size();
  if (cache.layer_inputs.size() != n || cache.pre_activations.size() != n ||
      cache.output.size() != params.output_dim())
    throw ContractViolation("forward cache does not match the network");
  if (output_grad.size() != params.output_dim()) throw ContractViolation("output gradient has the wrong dimension");
  if (param_grads != nullptr && param_grads->layers.size() != n)
    throw ContractViolation("gradient sink does not match the network");

  std::vector<double> upstream(output_grad.begin(), output_grad.end());
  std::vector<double> delta;
  for (std::size_t li = n; li-- > 0;) {
    const auto& layer = params.layers[li];
    const auto& in = cache.layer_inputs[li];
    const auto& pre = cache.pre_activations[li];
    const auto& out = li + 1 < n ? cache.layer_inputs[li + 1] : cache.output;
    if (in.size() != layer.in_dim() || pre.size() != layer.out_dim() || out.size() != layer.out_dim())
      throw ContractViolation("forward cache does not match the network");

    const std::size_t rows = layer.out_dim();
    const std::size_t cols = layer.in_dim();
    delta.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) delta[r] = upstream[r] * activation_slope(layer.activation, pre[r], out[r]);

    if (param_grads != nullptr) {
      auto& g = param_grads->layers[li];
      for (std::size_t r = 0; r < rows; ++r) {
        const double d = delta[r];
        if (d == 0.0) continue;
        double* grow = g.weights.data.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) grow[c] += d * in[c];
        g.bias[r] += d;
      }
    }
    if (li == 0 && input_grad == nullptr) break;

    upstream.assign(cols, 0.0);
    const double* w = layer.weights.data.data();
    for (std::size_t r = 0; r < rows; ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      const double* row = w + r * cols;
      for (std::size_t c = 0; c < cols; ++c) upstream[c] += row[c] * d;
    }
  }
  if (input_grad != nullptr) *input_grad = std::move(upstream);
}

BackwardResult backward(const MlpParams& params, const ForwardCache& cache,
                        std::span<const double> output_grad) {
  BackwardResult result{Gradients::zeros_like(params), {}};
  backward_accumulate(params, cache, output_grad, &result.param_grads, &result.input_grad);
  return result;
}

AdamState AdamState::for_params(const MlpParams& params) {
  AdamState s;
  s.first_moment = Gradients::zeros_like(params);
  s.second_moment = Gradients::zeros_like(params);
  return s;
}

void adam_step(MlpParams& params, const Gradients& grads, AdamState& state, double lr) {
  if (grads.layers.size() != params.layers.size() || state.first_moment.layers.size() != params.layers.size())
    throw ContractViolation("optimizer state does not match the network");
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);

  auto update = [&](std::vector<double>& theta, const std::vector<double>& g, std::vector<double>& m,
                    std::vector<double>& v) {
    if (theta.size() != g.size() || m.size() != g.size()) throw ContractViolation("gradient shapes disagree");
    for (std::size_t k = 0; k < theta.size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      theta[k] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  };
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    update(params.layers[i].weights.data, grads.layers[i].weights.data, state.first_moment.layers[i].weights.data,
           state.second_moment.layers[i].weights.data);
    update(params.layers[i].bias, grads.layers[i].bias, state.first_moment.layers[i].bias,
           state.second_moment.layers[i].bias);
  }
}

std::size_t checkpoint_header_size(std::size_t layer_count) {
  return kMagic.size() + 1 + 4 + layer_count * (4 + 4 + 1);
}

std::string encode_checkpoint(const MlpParams& params) {
  validate(params);
  std::string out(kMagic.begin(), kMagic.end());
  out.push_back(static_cast<char>(kVersion));
  put_u32(out, static_cast<std::uint32_t>(params.layers.size()));
  for (const auto& l : params.layers) {
    put_u32(out, static_cast<std::uint32_t>(l.in_dim()));
    put_u32(out, static_cast<std::uint32_t>(l.out_dim()));
    out.push_back(static_cast<char>(l.activation));
  }
  for (const auto& l : params.layers) {
    for (double w : l.weights.data) put_f64(out, w);
    for (double b : l.bias) put_f64(out, b);
  }
  return out;
}

MlpParams decode_checkpoint(std::string_view bytes) {
  Reader in(bytes);
  const auto magic = in.take(kMagic.size());
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) throw LoadError("not a network checkpoint");
  if (in.u8() != kVersion) throw LoadError("unsupported network checkpoint version");
  const std::uint32_t count = in.u32();
  if (count == 0 || count > 1024) throw LoadError("implausible layer count in checkpoint");

  MlpParams params;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t in_dim = in.u32();
    const std::uint32_t out_dim = in.u32();
    const std::uint8_t act = in.u8();
    if (act > static_cast<std::uint8_t>(Activation::linear)) throw LoadError("unknown activation code in checkpoint");
    if (in_dim == 0 || out_dim == 0 || in_dim > (1U << 20) || out_dim > (1U << 20))
      throw LoadError("implausible layer shape in checkpoint");
    if (i > 0 && params.layers.back().out_dim() != in_dim)
      throw LoadError("checkpoint layers are not dimension-compatible");
    params.layers.push_back({Matrix(out_dim, in_dim), std::vector<double>(out_dim, 0.0), static_cast<Activation>(act)});
  }
  for (auto& l : params.layers) {
    for (double& w : l.weights.data) w = in.f64();
    for (double& b : l.bias) b = in.f64();
  }
  if (!in.done()) throw LoadError("checkpoint has trailing bytes");
  return params;
}

void save_checkpoint(const MlpParams& params, const std::filesystem::path& path) {
  const std::string bytes = encode_checkpoint(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError("cannot open checkpoint for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw LoadError("failed writing checkpoint: " + path.string());
}

MlpParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_checkpoint(buf.str());
}

}  // namespace fusedrive::nn
