#pragma once

#include <filesystem>
#include <functional>
#include <mutex>
#include <span>
#include <vector>

#include "sdcfr/game.hpp"
#include "sdcfr/net.hpp"

namespace sdcfr {

/// One regression target for the value network: sampled immediate regrets
/// over the action head, with the legal-slot mask and the iteration the
/// sample was produced on (its loss weight).
struct AdvantageSample {
  std::vector<float> features;
  std::vector<float> target;
  std::vector<std::uint8_t> legal_mask;
  int iteration = 1;
};

/// One regression target for the average-strategy network: the opponent's
/// iteration strategy over the action head.
struct StrategySample {
  std::vector<float> features;
  std::vector<float> target;
  std::vector<std::uint8_t> legal_mask;
  int iteration = 1;
};

template <typename Sample>
TrainSample as_train_sample(const Sample& s) {
  return TrainSample{s.features, s.target, s.legal_mask, s.iteration};
}

template <typename Sample>
std::vector<TrainSample> as_train_samples(std::span<const Sample> data) {
  std::vector<TrainSample> out;
  out.reserve(data.size());
  for (const auto& s : data) out.push_back(as_train_sample(s));
  return out;
}

/// Uniform reservoir over a stream: the first `capacity` items fill the
/// buffer, after which item number n replaces a uniformly random slot with
/// probability capacity/n. Insertions are serialized by an internal mutex.
template <typename T>
class ReservoirBuffer {
 public:
  explicit ReservoirBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("reservoir capacity must be positive");
  }

  void insert(T item, Rng& rng) {
    std::lock_guard lock(mutex_);
    ++seen_;
    if (entries_.size() < capacity_) {
      entries_.push_back(std::move(item));
      return;
    }
    // Keep with probability capacity/seen, replacing a uniform slot.
    std::size_t j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(seen_));
    if (j < capacity_) entries_[j] = std::move(item);
  }

  std::span<const T> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::uint64_t seen() const { return seen_; }
  std::size_t capacity() const { return capacity_; }

  void restore(std::vector<T> entries, std::uint64_t seen) {
    if (entries.size() > capacity_) throw std::invalid_argument("restore exceeds capacity");
    entries_ = std::move(entries);
    seen_ = seen;
  }

 private:
  std::size_t capacity_;
  std::vector<T> entries_;
  std::uint64_t seen_ = 0;
  std::mutex mutex_;
};

void save_buffer(const ReservoirBuffer<AdvantageSample>& buffer, const std::filesystem::path&);
void save_buffer(const ReservoirBuffer<StrategySample>& buffer, const std::filesystem::path&);
void load_buffer(ReservoirBuffer<AdvantageSample>& buffer, const std::filesystem::path&);
void load_buffer(ReservoirBuffer<StrategySample>& buffer, const std::filesystem::path&);

/// Iteration strategy of the acting player at `state`, over legal actions.
using IterationStrategyFn = std::function<Distribution(const GameState&)>;

struct TraversalCounts {
  int advantage_pushes = 0;
  int strategy_pushes = 0;
};

/// One external-sampling traversal: enumerates every traverser action,
/// samples single outcomes for chance and the opponent, pushes sampled
/// immediate regrets into the traverser's advantage buffer and the
/// opponent's iteration strategy into the opponent's strategy buffer.
/// Returns the sampled value for the traverser. Either buffer may be null.
double external_sampling_traverse(const GameState& state, Player traverser,
                                  const IterationStrategyFn& policy0,
                                  const IterationStrategyFn& policy1, int iteration,
                                  ReservoirBuffer<AdvantageSample>* advantage_buffer,
                                  ReservoirBuffer<StrategySample>* strategy_buffer, Rng& rng,
                                  TraversalCounts* counts = nullptr);

}  // namespace sdcfr
