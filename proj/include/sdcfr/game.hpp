#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdcfr/rng.hpp"

namespace sdcfr {

// ---------------------------------------------------------------------------
// Errors. Named after the condition they report; thrown by game engines and
// the algorithm layers on contract violations.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IllegalAction : Error { using Error::Error; };
struct TerminalState : Error { using Error::Error; };
struct NonTerminal : Error { using Error::Error; };
struct ChancePlayer : Error { using Error::Error; };
struct NotChanceNode : Error { using Error::Error; };
struct ChanceNode : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Players
// ---------------------------------------------------------------------------

enum class Player : std::uint8_t { p0 = 0, p1 = 1, chance = 2 };

inline Player opponent(Player p) {
  switch (p) {
    case Player::p0: return Player::p1;
    case Player::p1: return Player::p0;
    default: throw ChancePlayer("opponent() undefined for the chance player");
  }
}

inline int player_index(Player p) {
  if (p == Player::chance) throw ChancePlayer("chance player has no index");
  return static_cast<int>(p);
}

inline Player player_from_index(int i) {
  if (i != 0 && i != 1) throw std::invalid_argument("player index must be 0 or 1");
  return static_cast<Player>(i);
}

// ---------------------------------------------------------------------------
// Actions and distributions
// ---------------------------------------------------------------------------

// Action-head slots shared by the poker engines.
inline constexpr int kFold = 0;
inline constexpr int kCall = 1;
inline constexpr int kRaise = 2;

/// One entry of a decision point's legal-action list. `id` indexes that list
/// (0 <= id < |A(I)|); `slot` is the position in the game's fixed action head
/// (e.g. fold/call/raise) used by feature masks and network outputs.
struct Action {
  int id = 0;
  int slot = 0;
  std::string label;
};

/// Probability vector over the legal actions of one decision point.
using Distribution = std::vector<double>;

bool is_valid_distribution(std::span<const double> probs, double tol = 1e-9);
Distribution uniform_distribution(int n);

struct ChanceOutcome {
  Action action;
  double prob = 0.0;
};

// ---------------------------------------------------------------------------
// Information set keys
// ---------------------------------------------------------------------------

/// Canonical byte encoding of (acting player, that player's private cards,
/// public cards, public action history). Two histories the acting player
/// cannot distinguish encode to identical bytes; distinguishable histories
/// encode to distinct bytes. Stable across processes.
struct InfoSetKey {
  std::string bytes;

  bool operator==(const InfoSetKey&) const = default;
  auto operator<=>(const InfoSetKey&) const = default;

  std::string hex() const;
};

struct InfoSetKeyHash {
  std::size_t operator()(const InfoSetKey& k) const noexcept {
    return std::hash<std::string>{}(k.bytes);
  }
};

// ---------------------------------------------------------------------------
// Game state
// ---------------------------------------------------------------------------

class Game;
class GameState;
using StatePtr = std::unique_ptr<GameState>;

/// Immutable position in a finite two-player zero-sum extensive-form game.
/// apply_action() yields a fresh successor; the parent is never mutated, so
/// states are freely shareable between threads.
class GameState {
 public:
  virtual ~GameState() = default;

  virtual const Game& game() const = 0;
  virtual StatePtr clone() const = 0;

  virtual Player current_player() const = 0;
  virtual bool is_terminal() const = 0;

  /// Legal action count; chance nodes report their outcome count.
  virtual int num_actions() const = 0;
  virtual Action action(int id) const = 0;

  /// Successor for legal action id (or chance outcome id at chance nodes).
  virtual StatePtr apply_action(int id) const = 0;

  /// Net chips for `p` at a terminal; exact integers, zero-sum.
  virtual int terminal_utility(Player p) const = 0;

  virtual InfoSetKey infoset_key(Player p) const = 0;

  virtual std::vector<ChanceOutcome> chance_outcomes() const = 0;

  /// Fixed-length network input encoding the acting player's observation.
  virtual std::vector<float> encode_features(Player p) const = 0;

  /// Betting round index (0-based); used for metric grouping.
  virtual int round() const = 0;

  virtual std::string to_string() const = 0;

  std::vector<std::uint8_t> legal_mask() const;
  int action_slot(int id) const { return action(id).slot; }
};

class Game {
 public:
  virtual ~Game() = default;

  virtual std::string name() const = 0;
  virtual StatePtr new_initial_state() const = 0;

  /// Size of the fixed action head (maximal |A(I)| over the game).
  virtual int max_actions() const = 0;
  virtual int feature_dim() const = 0;

  /// Ante in chips; evaluation converts chips to milli-antes per game.
  virtual int ante() const = 0;
};

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

/// A playable strategy: queried episodically along a trajectory. Stateless
/// policies ignore the episode machinery; trajectory-coupled policies (e.g.
/// one sampled network per hand) use begin_episode/observe_own_action.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual void begin_episode(Rng& /*rng*/) {}

  /// Distribution over the legal actions of `state` for its acting player.
  virtual Distribution act(const GameState& state) = 0;

  /// Notifies the policy that its own acting player took `action_id`.
  virtual void observe_own_action(const GameState& /*state*/, int /*action_id*/) {}
};

/// A strategy that can be queried for full distributions during a
/// depth-first walk of the game tree. push/pop bracket the strategy owner's
/// own decisions along the walk so reach-dependent strategies can maintain
/// incremental state.
class QueryableStrategy {
 public:
  virtual ~QueryableStrategy() = default;

  virtual Distribution query(const GameState& state) = 0;
  virtual void push_own_action(const GameState& /*state*/, int /*action_id*/) {}
  virtual void pop_own_action() {}
};

}  // namespace sdcfr
