#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sdcfr/game.hpp"

namespace sdcfr {

struct ShapeMismatch : Error { using Error::Error; };
struct EmptyBuffer : Error { using Error::Error; };

struct NetConfig {
  int input_dim = 0;
  std::vector<int> hidden_dims{64, 64, 64};
  int output_dim = 0;

  void validate() const;
  /// Layer widths, input first: [input, hidden..., output].
  std::vector<int> dims() const;
  bool operator==(const NetConfig&) const = default;
};

/// Fully-connected rectifier network with a linear output head. Weights are
/// row-major [rows=fan_out][cols=fan_in]. The scalar type is a template
/// parameter so tests can run the same code in 64-bit precision.
template <typename T>
struct NetParamsT {
  NetConfig config;
  std::vector<std::vector<T>> weights;
  std::vector<std::vector<T>> biases;

  std::size_t num_parameters() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
  }
};

using NetParams = NetParamsT<float>;

template <typename T>
NetParamsT<T> zero_params(const NetConfig& config);

NetParams init_params(const NetConfig& config, Rng& rng);

NetParamsT<double> to_double(const NetParams& params);

template <typename T>
std::vector<T> forward(const NetParamsT<T>& params, std::span<const T> input);

/// Backpropagates `output_grad` through the network at `input`; returns
/// gradients with the same shapes as the parameters.
template <typename T>
NetParamsT<T> backward(const NetParamsT<T>& params, std::span<const T> input,
                       std::span<const T> output_grad);

struct TrainConfig {
  int batch_size = 2048;
  int n_updates = 750;
  float learning_rate = 1e-3f;
  float adam_beta1 = 0.9f;
  float adam_beta2 = 0.999f;
  float adam_epsilon = 1e-8f;
  float grad_clip_norm = 1.0f;

  void validate() const;
};

/// Non-owning view of one regression sample: squared error is taken over
/// the masked (legal) output slots only and the sample's loss is weighted
/// by iteration / current_total_iterations.
struct TrainSample {
  std::span<const float> features;
  std::span<const float> target;
  std::span<const std::uint8_t> mask;
  int iteration = 1;
};

/// Mean gradient of the weighted masked squared error over the given
/// sample indices. Exposed for tests; train() uses it per update.
NetParams batch_gradient(const NetParams& params, std::span<const TrainSample> data,
                         std::span<const std::size_t> indices, int current_total_iterations);

/// Runs n_updates Adam steps on uniformly sampled mini-batches.
/// Deterministic for a fixed (params, data, config, rng) in single-threaded
/// use.
NetParams train(NetParams params, std::span<const TrainSample> data, const TrainConfig& config,
                int current_total_iterations, Rng& rng);

// -- checkpoints -------------------------------------------------------------

struct CheckpointMeta {
  std::uint8_t player = 0;
  std::uint32_t iteration = 0;
};

struct Checkpoint {
  NetParams params;
  CheckpointMeta meta;
};

void save_checkpoint(const NetParams& params, CheckpointMeta meta,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);
Checkpoint load_checkpoint(std::vector<std::uint8_t> bytes);

/// Exact on-disk size of a checkpoint for the given architecture.
std::size_t checkpoint_byte_size(const NetConfig& config);

}  // namespace sdcfr
