#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace fusedrive::nn {

enum class Activation : std::uint8_t { relu = 0, tanh = 1, linear = 2 };

/// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

struct LayerParams {
  Matrix weights;  // out x in
  std::vector<double> bias;
  Activation activation = Activation::linear;

  std::size_t in_dim() const { return weights.cols; }
  std::size_t out_dim() const { return weights.rows; }

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

struct MlpParams {
  std::vector<LayerParams> layers;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }
  std::size_t parameter_count() const;
  /// Layer widths, input first: {in, hidden..., out}.
  std::vector<std::size_t> dims() const;

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

/// Throws ContractViolation if shapes are inconsistent.
void validate(const MlpParams& params);

struct LayerGrad {
  Matrix weights;
  std::vector<double> bias;
};

/// Same shape as the owning MlpParams.
struct Gradients {
  std::vector<LayerGrad> layers;

  static Gradients zeros_like(const MlpParams& params);
  void set_zero();
  void add(const Gradients& other);
  void scale(double k);
};

struct ForwardCache {
  std::vector<std::vector<double>> layer_inputs;
  std::vector<std::vector<double>> pre_activations;
  std::vector<double> output;
};

struct ForwardPass {
  std::vector<double> output;
  ForwardCache cache;
};

struct BackwardResult {
  Gradients param_grads;
  std::vector<double> input_grad;
};

/// Uniform weights in [-1/sqrt(fan_in), 1/sqrt(fan_in)], zero biases.
/// `activations` has one entry per layer (dims.size() - 1).
MlpParams init(std::span<const std::size_t> dims, std::span<const Activation> activations,
               std::uint64_t seed);

ForwardPass forward(const MlpParams& params, std::span<const double> input);

/// Forward pass without retaining a cache.
std::vector<double> predict(const MlpParams& params, std::span<const double> input);

/// Reverse-mode gradients of dot(output, output_grad).
BackwardResult backward(const MlpParams& params, const ForwardCache& cache,
                        std::span<const double> output_grad);

/// Accumulating variant used by the batched trainers: parameter gradients are
/// added into `param_grads`, `input_grad` is overwritten. Either sink may be null.
void backward_accumulate(const MlpParams& params, const ForwardCache& cache,
                         std::span<const double> output_grad, Gradients* param_grads,
                         std::vector<double>* input_grad);

struct AdamState {
  Gradients first_moment;
  Gradients second_moment;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const MlpParams& params);
};

/// One bias-corrected Adam step descending along `grads`.
void adam_step(MlpParams& params, const Gradients& grads, AdamState& state, double lr);

/// Binary checkpoint: 8-byte magic, version byte, u32 layer count, per-layer
/// (u32 in, u32 out, u8 activation), then little-endian f64 values, W row-major
/// then b, layer by layer.
std::string encode_checkpoint(const MlpParams& params);
MlpParams decode_checkpoint(std::string_view bytes);

void save_checkpoint(const MlpParams& params, const std::filesystem::path& path);
MlpParams load_checkpoint(const std::filesystem::path& path);

std::size_t checkpoint_header_size(std::size_t layer_count);

}  // namespace fusedrive::nn
