#include "sdcfr/net.hpp"

#include <cmath>

#include "sdcfr/binio.hpp"

namespace sdcfr {

void NetConfig::validate() const {
  if (input_dim < 1 || output_dim < 1)
    throw std::invalid_argument("NetConfig: input and output dims must be >= 1");
  for (int h : hidden_dims)
    if (h < 1) throw std::invalid_argument("NetConfig: hidden dims must be >= 1");
}

std::vector<int> NetConfig::dims() const {
  std::vector<int> d;
  d.push_back(input_dim);
  d.insert(d.end(), hidden_dims.begin(), hidden_dims.end());
  d.push_back(output_dim);
  return d;
}

void TrainConfig::validate() const {
  if (batch_size < 1 || n_updates < 0 || !(learning_rate > 0.f) || !(adam_beta1 >= 0.f) ||
      !(adam_beta2 >= 0.f) || !(adam_epsilon > 0.f) || !(grad_clip_norm > 0.f))
    throw std::invalid_argument("TrainConfig: nonpositive value");
}

template <typename T>
NetParamsT<T> zero_params(const NetConfig& config) {
  config.validate();
  NetParamsT<T> p;
  p.config = config;
  auto d = config.dims();
  for (std::size_t l = 0; l + 1 < d.size(); ++l) {
    p.weights.emplace_back(static_cast<std::size_t>(d[l + 1]) * d[l], T(0));
    p.biases.emplace_back(d[l + 1], T(0));
  }
  return p;
}

template NetParamsT<float> zero_params<float>(const NetConfig&);
template NetParamsT<double> zero_params<double>(const NetConfig&);

NetParams init_params(const NetConfig& config, Rng& rng) {
  NetParams p = zero_params<float>(config);
  auto d = config.dims();
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    float limit = std::sqrt(6.0f / static_cast<float>(d[l]));
    for (float& w : p.weights[l])
      w = static_cast<float>((2.0 * uniform01(rng) - 1.0) * limit);
  }
  return p;
}

NetParamsT<double> to_double(const NetParams& params) {
  NetParamsT<double> out;
  out.config = params.config;
  for (const auto& w : params.weights) out.weights.emplace_back(w.begin(), w.end());
  for (const auto& b : params.biases) out.biases.emplace_back(b.begin(), b.end());
  return out;
}

namespace {

// y[o] = b[o] + sum_i x[i] * W[o*in + i], optionally rectified. The inner
// loop runs over outputs with independent accumulators so it vectorizes
// without reassociating float sums.
template <typename T>
void affine_forward(std::span<const T> w, std::span<const T> b, std::span<const T> x,
                    std::span<T> y, bool relu) {
  const std::size_t in = x.size(), out = y.size();
  for (std::size_t o = 0; o < out; ++o) y[o] = b[o];
  for (std::size_t i = 0; i < in; ++i) {
    const T xi = x[i];
    const T* col = w.data() + i;
    for (std::size_t o = 0; o < out; ++o) y[o] += xi * col[o * in];
  }
  if (relu)
    for (std::size_t o = 0; o < out; ++o) y[o] = y[o] > T(0) ? y[o] : T(0);
}

// The column access above strides by `in`; for the training hot path we key
// everything off a transposed copy instead (see Trainer below).
template <typename T>
struct Activations {
  std::vector<std::vector<T>> layers;  // post-activation, layers[0] = input copy
};

template <typename T>
Activations<T> run_forward(const NetParamsT<T>& params, std::span<const T> input) {
  if (static_cast<int>(input.size()) != params.config.input_dim)
    throw ShapeMismatch("feature length does not match input_dim");
  Activations<T> acts;
  acts.layers.emplace_back(input.begin(), input.end());
  const std::size_t n_layers = params.weights.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    std::vector<T> y(params.biases[l].size());
    affine_forward<T>(params.weights[l], params.biases[l], acts.layers.back(), y,
                      /*relu=*/l + 1 < n_layers);
    acts.layers.push_back(std::move(y));
  }
  return acts;
}

}  // namespace

template <typename T>
std::vector<T> forward(const NetParamsT<T>& params, std::span<const T> input) {
  return run_forward(params, input).layers.back();
}

template std::vector<float> forward<float>(const NetParamsT<float>&, std::span<const float>);
template std::vector<double> forward<double>(const NetParamsT<double>&, std::span<const double>);

template <typename T>
NetParamsT<T> backward(const NetParamsT<T>& params, std::span<const T> input,
                       std::span<const T> output_grad) {
  if (static_cast<int>(output_grad.size()) != params.config.output_dim)
    throw ShapeMismatch("output_grad length does not match output_dim");
  Activations<T> acts = run_forward(params, input);
  NetParamsT<T> grads = zero_params<T>(params.config);
  std::vector<T> dy(output_grad.begin(), output_grad.end());
  for (std::size_t l = params.weights.size(); l-- > 0;) {
    const auto& x = acts.layers[l];
    const std::size_t in = x.size(), out = dy.size();
    for (std::size_t o = 0; o < out; ++o) {
      grads.biases[l][o] += dy[o];
      T* row = grads.weights[l].data() + o * in;
      const T g = dy[o];
      for (std::size_t i = 0; i < in; ++i) row[i] += g * x[i];
    }
    if (l == 0) break;
    std::vector<T> dx(in, T(0));
    for (std::size_t o = 0; o < out; ++o) {
      const T g = dy[o];
      const T* row = params.weights[l].data() + o * in;
      for (std::size_t i = 0; i < in; ++i) dx[i] += g * row[i];
    }
    // ReLU gate of the previous layer's output.
    for (std::size_t i = 0; i < in; ++i)
      if (!(x[i] > T(0))) dx[i] = T(0);
    dy = std::move(dx);
  }
  return grads;
}

template NetParamsT<float> backward<float>(const NetParamsT<float>&, std::span<const float>,
                                           std::span<const float>);
template NetParamsT<double> backward<double>(const NetParamsT<double>&, std::span<const double>,
                                             std::span<const double>);

namespace {

// Training engine. Keeps a transposed weight copy so the batch forward pass
// vectorizes over the output dimension, and flat Adam state over all
// parameters.
class Trainer {
 public:
  Trainer(NetParams params, const TrainConfig& cfg, int total_iterations)
      : params_(std::move(params)), cfg_(cfg), total_(std::max(total_iterations, 1)) {
    for (int d : params_.config.dims()) dims_.push_back(static_cast<std::size_t>(d));
    n_layers_ = params_.weights.size();
    wt_.resize(n_layers_);
    refresh_transposed();
    grads_ = zero_params<float>(params_.config);
    adam_m_ = zero_params<float>(params_.config);
    adam_v_ = zero_params<float>(params_.config);
    acts_.resize(n_layers_ + 1);
    deltas_.resize(n_layers_ + 1);
    for (std::size_t l = 0; l <= n_layers_; ++l) {
      acts_[l].resize(dims_[l]);
      deltas_[l].resize(dims_[l]);
    }
  }

  void run_update(std::span<const TrainSample> data, std::span<const std::size_t> indices) {
    zero_grads();
    const float inv_batch = 1.0f / static_cast<float>(indices.size());
    for (std::size_t idx : indices) accumulate_sample(data[idx], inv_batch);
    clip_grads();
    adam_step();
    refresh_transposed();
  }

  const NetParams& grads() const { return grads_; }
  NetParams take_params() { return std::move(params_); }

  void zero_grads() {
    for (auto& w : grads_.weights) std::fill(w.begin(), w.end(), 0.0f);
    for (auto& b : grads_.biases) std::fill(b.begin(), b.end(), 0.0f);
  }

  void accumulate_sample(const TrainSample& s, float inv_batch) {
    if (static_cast<int>(s.features.size()) != params_.config.input_dim)
      throw ShapeMismatch("feature length does not match input_dim");
    // Forward through the transposed weights.
    std::copy(s.features.begin(), s.features.end(), acts_[0].begin());
    for (std::size_t l = 0; l < n_layers_; ++l) {
      const std::size_t in = dims_[l], out = dims_[l + 1];
      float* y = acts_[l + 1].data();
      const float* b = params_.biases[l].data();
      for (std::size_t o = 0; o < out; ++o) y[o] = b[o];
      const float* x = acts_[l].data();
      const float* wt = wt_[l].data();
      for (std::size_t i = 0; i < in; ++i) {
        const float xi = x[i];
        const float* row = wt + i * out;
        for (std::size_t o = 0; o < out; ++o) y[o] += xi * row[o];
      }
      if (l + 1 < n_layers_)
        for (std::size_t o = 0; o < out; ++o) y[o] = y[o] > 0.0f ? y[o] : 0.0f;
    }
    // Masked weighted squared error: d/dy = 2 * w * (y - target) on legal slots.
    const float w = inv_batch * static_cast<float>(s.iteration) / static_cast<float>(total_);
    {
      float* d = deltas_[n_layers_].data();
      const float* y = acts_[n_layers_].data();
      for (std::size_t o = 0; o < dims_[n_layers_]; ++o)
        d[o] = s.mask[o] ? 2.0f * w * (y[o] - s.target[o]) : 0.0f;
    }
    // Backward.
    for (std::size_t l = n_layers_; l-- > 0;) {
      const std::size_t in = dims_[l], out = dims_[l + 1];
      const float* dy = deltas_[l + 1].data();
      const float* x = acts_[l].data();
      float* gw = grads_.weights[l].data();
      float* gb = grads_.biases[l].data();
      for (std::size_t o = 0; o < out; ++o) {
        const float g = dy[o];
        if (g == 0.0f) continue;
        gb[o] += g;
        float* row = gw + o * in;
        for (std::size_t i = 0; i < in; ++i) row[i] += g * x[i];
      }
      if (l == 0) break;
      float* dx = deltas_[l].data();
      std::fill(dx, dx + in, 0.0f);
      const float* wr = params_.weights[l].data();
      for (std::size_t o = 0; o < out; ++o) {
        const float g = dy[o];
        if (g == 0.0f) continue;
        const float* row = wr + o * in;
        for (std::size_t i = 0; i < in; ++i) dx[i] += g * row[i];
      }
      for (std::size_t i = 0; i < in; ++i)
        if (!(x[i] > 0.0f)) dx[i] = 0.0f;
    }
  }

  void clip_grads() {
    double sq = 0.0;
    for (const auto& w : grads_.weights)
      for (float g : w) sq += static_cast<double>(g) * g;
    for (const auto& b : grads_.biases)
      for (float g : b) sq += static_cast<double>(g) * g;
    const double norm = std::sqrt(sq);
    if (norm <= cfg_.grad_clip_norm) return;
    const float scale = static_cast<float>(cfg_.grad_clip_norm / norm);
    for (auto& w : grads_.weights)
      for (float& g : w) g *= scale;
    for (auto& b : grads_.biases)
      for (float& g : b) g *= scale;
  }

  void adam_step() {
    ++step_;
    const float b1 = cfg_.adam_beta1, b2 = cfg_.adam_beta2;
    const float corr1 = 1.0f - std::pow(b1, static_cast<float>(step_));
    const float corr2 = 1.0f - std::pow(b2, static_cast<float>(step_));
    const float lr = cfg_.learning_rate;
    auto update = [&](std::vector<float>& p, std::vector<float>& m, std::vector<float>& v,
                      const std::vector<float>& g) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = b1 * m[i] + (1.0f - b1) * g[i];
        v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
        const float mhat = m[i] / corr1;
        const float vhat = v[i] / corr2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.adam_epsilon);
      }
    };
    for (std::size_t l = 0; l < n_layers_; ++l) {
      update(params_.weights[l], adam_m_.weights[l], adam_v_.weights[l], grads_.weights[l]);
      update(params_.biases[l], adam_m_.biases[l], adam_v_.biases[l], grads_.biases[l]);
    }
  }

  void refresh_transposed() {
    for (std::size_t l = 0; l < n_layers_; ++l) {
      const std::size_t in = dims_[l], out = dims_[l + 1];
      wt_[l].resize(in * out);
      const float* w = params_.weights[l].data();
      for (std::size_t o = 0; o < out; ++o)
        for (std::size_t i = 0; i < in; ++i) wt_[l][i * out + o] = w[o * in + i];
    }
  }

 private:
  NetParams params_;
  TrainConfig cfg_;
  int total_;
  std::vector<std::size_t> dims_;
  std::size_t n_layers_ = 0;
  std::vector<std::vector<float>> wt_;  // transposed weights [in][out]
  NetParams grads_, adam_m_, adam_v_;
  std::vector<std::vector<float>> acts_, deltas_;
  long step_ = 0;
};

}  // namespace

NetParams batch_gradient(const NetParams& params, std::span<const TrainSample> data,
                         std::span<const std::size_t> indices, int current_total_iterations) {
  Trainer trainer(params, TrainConfig{}, current_total_iterations);
  trainer.zero_grads();
  const float inv_batch = 1.0f / static_cast<float>(indices.size());
  for (std::size_t idx : indices) trainer.accumulate_sample(data[idx], inv_batch);
  return trainer.grads();
}

NetParams train(NetParams params, std::span<const TrainSample> data, const TrainConfig& config,
                int current_total_iterations, Rng& rng) {
  config.validate();
  if (data.empty()) throw EmptyBuffer("train on empty buffer");
  Trainer trainer(std::move(params), config, current_total_iterations);
  std::vector<std::size_t> indices(config.batch_size);
  for (int u = 0; u < config.n_updates; ++u) {
    for (auto& idx : indices) idx = uniform_index(rng, data.size());
    trainer.run_update(data, indices);
  }
  return trainer.take_params();
}

// -- checkpoints --------------------------------------------------------------

namespace {
constexpr char kCheckpointMagic[4] = {'S', 'D', 'C', 'N'};
constexpr std::uint32_t kCheckpointVersion = 1;
}  // namespace

void save_checkpoint(const NetParams& params, CheckpointMeta meta,
                     const std::filesystem::path& path) {
  BinaryWriter out(path, kCheckpointMagic, kCheckpointVersion);
  out.write_u8(meta.player);
  out.write_u32(meta.iteration);
  out.write_u32(static_cast<std::uint32_t>(params.weights.size()));
  auto d = params.config.dims();
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    out.write_u32(static_cast<std::uint32_t>(d[l + 1]));  // rows
    out.write_u32(static_cast<std::uint32_t>(d[l]));      // cols
  }
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    out.write_bytes(params.weights[l].data(), params.weights[l].size() * sizeof(float));
    out.write_bytes(params.biases[l].data(), params.biases[l].size() * sizeof(float));
  }
}

namespace {

Checkpoint read_checkpoint(BinaryReader& in) {
  Checkpoint ckpt;
  ckpt.meta.player = in.read_u8();
  ckpt.meta.iteration = in.read_u32();
  std::uint32_t n_layers = in.read_u32();
  if (n_layers == 0) throw Error("checkpoint has no layers");
  std::vector<std::uint32_t> rows(n_layers), cols(n_layers);
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    rows[l] = in.read_u32();
    cols[l] = in.read_u32();
  }
  NetConfig config;
  config.input_dim = static_cast<int>(cols[0]);
  config.hidden_dims.clear();
  for (std::uint32_t l = 0; l + 1 < n_layers; ++l)
    config.hidden_dims.push_back(static_cast<int>(rows[l]));
  config.output_dim = static_cast<int>(rows[n_layers - 1]);
  ckpt.params = zero_params<float>(config);
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    if (ckpt.params.weights[l].size() != static_cast<std::size_t>(rows[l]) * cols[l])
      throw Error("checkpoint layer dims are inconsistent");
    in.read_bytes(ckpt.params.weights[l].data(),
                  ckpt.params.weights[l].size() * sizeof(float));
    in.read_bytes(ckpt.params.biases[l].data(),
                  ckpt.params.biases[l].size() * sizeof(float));
  }
  return ckpt;
}

}  // namespace

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  BinaryReader in(path, kCheckpointMagic, kCheckpointVersion);
  return read_checkpoint(in);
}

Checkpoint load_checkpoint(std::vector<std::uint8_t> bytes) {
  BinaryReader in(std::move(bytes), kCheckpointMagic, kCheckpointVersion);
  return read_checkpoint(in);
}

std::size_t checkpoint_byte_size(const NetConfig& config) {
  auto d = config.dims();
  std::size_t n_layers = d.size() - 1;
  std::size_t params = 0;
  for (std::size_t l = 0; l < n_layers; ++l)
    params += static_cast<std::size_t>(d[l + 1]) * d[l] + d[l + 1];
  return 4 + 4 + 1 + 4 + 4 + 8 * n_layers + 4 * params;
}

}  // namespace sdcfr
