#include "sdcfr/sampling.hpp"

#include "sdcfr/binio.hpp"

namespace sdcfr {
namespace {

constexpr char kBufferMagic[4] = {'S', 'D', 'B', 'F'};
constexpr std::uint32_t kBufferVersion = 1;

template <typename Sample>
void save_buffer_impl(const ReservoirBuffer<Sample>& buffer, std::uint8_t kind,
                      const std::filesystem::path& path) {
  BinaryWriter out(path, kBufferMagic, kBufferVersion);
  out.write_u8(kind);
  out.write_u64(buffer.capacity());
  out.write_u64(buffer.seen());
  out.write_u64(buffer.size());
  for (const auto& s : buffer.entries()) {
    std::uint32_t record_len =
        4 + 4 + 4 * static_cast<std::uint32_t>(s.features.size()) + 4 +
        4 * static_cast<std::uint32_t>(s.target.size()) + 4 +
        static_cast<std::uint32_t>(s.legal_mask.size());
    out.write_u32(record_len);
    out.write_u32(static_cast<std::uint32_t>(s.iteration));
    out.write_u32(static_cast<std::uint32_t>(s.features.size()));
    for (float f : s.features) out.write_f32(f);
    out.write_u32(static_cast<std::uint32_t>(s.target.size()));
    for (float t : s.target) out.write_f32(t);
    out.write_u32(static_cast<std::uint32_t>(s.legal_mask.size()));
    out.write_bytes(s.legal_mask.data(), s.legal_mask.size());
  }
}

template <typename Sample>
void load_buffer_impl(ReservoirBuffer<Sample>& buffer, std::uint8_t kind,
                      const std::filesystem::path& path) {
  BinaryReader in(path, kBufferMagic, kBufferVersion);
  if (in.read_u8() != kind) throw Error("buffer file holds the wrong sample kind");
  std::uint64_t capacity = in.read_u64();
  if (capacity != buffer.capacity())
    throw Error("buffer file capacity does not match the configured capacity");
  std::uint64_t seen = in.read_u64();
  std::uint64_t count = in.read_u64();
  std::vector<Sample> entries;
  entries.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint32_t record_len = in.read_u32();
    if (record_len > in.remaining()) throw TruncatedFile("sample record truncated");
    Sample s;
    s.iteration = static_cast<int>(in.read_u32());
    s.features.resize(in.read_u32());
    for (float& f : s.features) f = in.read_f32();
    s.target.resize(in.read_u32());
    for (float& t : s.target) t = in.read_f32();
    s.legal_mask.resize(in.read_u32());
    in.read_bytes(s.legal_mask.data(), s.legal_mask.size());
    entries.push_back(std::move(s));
  }
  buffer.restore(std::move(entries), seen);
}

int sample_local_action(const Distribution& dist, Rng& rng) {
  double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t a = 0; a < dist.size(); ++a) {
    acc += dist[a];
    if (u < acc) return static_cast<int>(a);
  }
  return static_cast<int>(dist.size()) - 1;
}

}  // namespace

void save_buffer(const ReservoirBuffer<AdvantageSample>& buffer,
                 const std::filesystem::path& path) {
  save_buffer_impl(buffer, 0, path);
}
void save_buffer(const ReservoirBuffer<StrategySample>& buffer,
                 const std::filesystem::path& path) {
  save_buffer_impl(buffer, 1, path);
}
void load_buffer(ReservoirBuffer<AdvantageSample>& buffer, const std::filesystem::path& path) {
  load_buffer_impl(buffer, 0, path);
}
void load_buffer(ReservoirBuffer<StrategySample>& buffer, const std::filesystem::path& path) {
  load_buffer_impl(buffer, 1, path);
}

double external_sampling_traverse(const GameState& state, Player traverser,
                                  const IterationStrategyFn& policy0,
                                  const IterationStrategyFn& policy1, int iteration,
                                  ReservoirBuffer<AdvantageSample>* advantage_buffer,
                                  ReservoirBuffer<StrategySample>* strategy_buffer, Rng& rng,
                                  TraversalCounts* counts) {
  if (state.is_terminal()) return static_cast<double>(state.terminal_utility(traverser));

  if (state.current_player() == Player::chance) {
    auto outcomes = state.chance_outcomes();
    double u = uniform01(rng);
    double acc = 0.0;
    int chosen = static_cast<int>(outcomes.size()) - 1;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      acc += outcomes[i].prob;
      if (u < acc) {
        chosen = static_cast<int>(i);
        break;
      }
    }
    return external_sampling_traverse(*state.apply_action(outcomes[chosen].action.id),
                                      traverser, policy0, policy1, iteration, advantage_buffer,
                                      strategy_buffer, rng, counts);
  }

  const Player acting = state.current_player();
  const Distribution sigma = (acting == Player::p0 ? policy0 : policy1)(state);
  const int n = state.num_actions();

  if (acting == traverser) {
    std::vector<double> child_values(n);
    double value = 0.0;
    for (int a = 0; a < n; ++a) {
      child_values[a] =
          external_sampling_traverse(*state.apply_action(a), traverser, policy0, policy1,
                                     iteration, advantage_buffer, strategy_buffer, rng, counts);
      value += sigma[a] * child_values[a];
    }
    if (counts != nullptr) counts->advantage_pushes += 1;
    if (advantage_buffer != nullptr) {
      AdvantageSample sample;
      sample.features = state.encode_features(acting);
      sample.legal_mask = state.legal_mask();
      sample.target.assign(state.game().max_actions(), 0.0f);
      for (int a = 0; a < n; ++a)
        sample.target[state.action_slot(a)] = static_cast<float>(child_values[a] - value);
      sample.iteration = iteration;
      advantage_buffer->insert(std::move(sample), rng);
    }
    return value;
  }

  if (counts != nullptr) counts->strategy_pushes += 1;
  if (strategy_buffer != nullptr) {
    StrategySample sample;
    sample.features = state.encode_features(acting);
    sample.legal_mask = state.legal_mask();
    sample.target.assign(state.game().max_actions(), 0.0f);
    for (int a = 0; a < n; ++a)
      sample.target[state.action_slot(a)] = static_cast<float>(sigma[a]);
    sample.iteration = iteration;
    strategy_buffer->insert(std::move(sample), rng);
  }
  int a = sample_local_action(sigma, rng);
  return external_sampling_traverse(*state.apply_action(a), traverser, policy0, policy1,
                                    iteration, advantage_buffer, strategy_buffer, rng, counts);
}

}  // namespace sdcfr
