#pragma once

#include <array>

#include "sdcfr/game.hpp"

namespace sdcfr {

/// Parameters of the Leduc family. Defaults give standard Leduc Hold'em
/// (6-card deck, 2 raises per round, bets of 2 then 4 on top of a 1-chip
/// ante). big() gives the 12-rank, 6-raise variant.
struct LeducConfig {
  int n_ranks = 3;
  int n_suits = 2;
  int max_raises_per_round = 2;
  int ante = 1;
  std::array<int, 2> bet_sizes{2, 4};

  int deck_size() const { return n_ranks * n_suits; }
  int max_pot() const {
    return 2 * (ante + max_raises_per_round * (bet_sizes[0] + bet_sizes[1]));
  }
  void validate() const;

  static LeducConfig big() {
    LeducConfig c;
    c.n_ranks = 12;
    c.max_raises_per_round = 6;
    return c;
  }
};

/// Two-round poker with one private card per player and one public board
/// card revealed between rounds. Player 0 acts first in each round; seats
/// are rotated by the evaluator, never by the engine. Fold is legal only
/// when facing a raise. At showdown a private card pairing the board wins,
/// otherwise the higher rank wins and equal ranks split the pot.
class LeducGame : public Game {
 public:
  explicit LeducGame(LeducConfig config = {});

  std::string name() const override;
  StatePtr new_initial_state() const override;
  int max_actions() const override { return 3; }
  int feature_dim() const override { return 2 * config_.deck_size() + 4; }
  int ante() const override { return config_.ante; }

  const LeducConfig& config() const { return config_; }

 private:
  LeducConfig config_;
};

}  // namespace sdcfr
