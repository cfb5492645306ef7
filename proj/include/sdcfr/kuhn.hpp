#pragma once

#include "sdcfr/game.hpp"

namespace sdcfr {

/// Three-card, one-round, one-bet poker: both players ante 1 chip and are
/// dealt one card from {0, 1, 2}. The first player may check or bet 1 chip;
/// facing a bet the options are fold or call. Higher card wins at showdown.
class KuhnGame : public Game {
 public:
  std::string name() const override { return "kuhn"; }
  StatePtr new_initial_state() const override;
  int max_actions() const override { return 3; }
  int feature_dim() const override { return 6; }
  int ante() const override { return 1; }
};

}  // namespace sdcfr
