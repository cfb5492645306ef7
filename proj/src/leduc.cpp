#include "sdcfr/leduc.hpp"

namespace sdcfr {
namespace {

constexpr char kRoundSeparator = 0x7C;
constexpr char kNoBoard = static_cast<char>(0xFF);

std::string card_label(const LeducConfig& cfg, int card) {
  return std::to_string(card / cfg.n_suits) + static_cast<char>('a' + card % cfg.n_suits);
}

class LeducState final : public GameState {
 public:
  explicit LeducState(const LeducGame* game)
      : game_(game), wagered_{game->config().ante, game->config().ante} {}

  const Game& game() const override { return *game_; }
  StatePtr clone() const override { return std::make_unique<LeducState>(*this); }

  Player current_player() const override {
    if (terminal_) throw TerminalState("terminal state has no acting player");
    if (at_chance()) return Player::chance;
    return static_cast<Player>(actions_this_round_ % 2);
  }

  bool is_terminal() const override { return terminal_; }

  int num_actions() const override {
    if (terminal_) return 0;
    if (at_chance()) return static_cast<int>(dealable().size());
    return static_cast<int>(legal_slots().size());
  }

  Action action(int id) const override {
    check_action_id(id);
    if (at_chance()) {
      int card = dealable()[id];
      return Action{id, card, card_label(cfg(), card)};
    }
    int slot = legal_slots()[id];
    static const char* labels[] = {"FOLD", "CALL", "RAISE"};
    return Action{id, slot, labels[slot]};
  }

  StatePtr apply_action(int id) const override {
    check_action_id(id);
    auto next = std::make_unique<LeducState>(*this);
    if (at_chance()) {
      int card = dealable()[id];
      if (private_[0] < 0) {
        next->private_[0] = card;
      } else if (private_[1] < 0) {
        next->private_[1] = card;
      } else {
        next->board_ = card;
      }
      return next;
    }
    int actor = actions_this_round_ % 2;
    int slot = legal_slots()[id];
    next->history_.push_back(static_cast<char>(slot));
    next->actions_this_round_ += 1;
    switch (slot) {
      case kFold:
        next->terminal_ = true;
        next->folder_ = actor;
        break;
      case kCall:
        next->wagered_[actor] = wagered_[1 - actor];
        if (next->actions_this_round_ >= 2) next->close_round();
        break;
      case kRaise:
        next->wagered_[actor] = wagered_[1 - actor] + cfg().bet_sizes[round_];
        next->raises_by_round_[round_] += 1;
        break;
    }
    return next;
  }

  int terminal_utility(Player p) const override {
    if (!terminal_) throw NonTerminal("terminal_utility on non-terminal state");
    int i = player_index(p);
    if (folder_ >= 0) {
      int stake = wagered_[folder_];
      return i == folder_ ? -stake : stake;
    }
    int winner = showdown_winner();
    if (winner < 0) return 0;  // split pot
    int stake = wagered_[1 - winner];
    return i == winner ? stake : -stake;
  }

  InfoSetKey infoset_key(Player p) const override {
    int i = player_index(p);
    std::string bytes;
    bytes.reserve(3 + history_.size());
    bytes.push_back(static_cast<char>(i));
    bytes.push_back(private_[i] >= 0 ? static_cast<char>(private_[i]) : kNoBoard);
    bytes.push_back(board_ >= 0 ? static_cast<char>(board_) : kNoBoard);
    bytes += history_;
    return InfoSetKey{std::move(bytes)};
  }

  std::vector<ChanceOutcome> chance_outcomes() const override {
    if (terminal_ || !at_chance()) throw NotChanceNode("chance_outcomes on a non-chance node");
    auto cards = dealable();
    std::vector<ChanceOutcome> outcomes;
    outcomes.reserve(cards.size());
    double p = 1.0 / static_cast<double>(cards.size());
    for (std::size_t id = 0; id < cards.size(); ++id)
      outcomes.push_back(
          {Action{static_cast<int>(id), cards[id], card_label(cfg(), cards[id])}, p});
    return outcomes;
  }

  std::vector<float> encode_features(Player p) const override {
    if (terminal_) throw TerminalState("encode_features on terminal state");
    if (at_chance()) throw ChanceNode("encode_features at chance node");
    int i = player_index(p);
    int deck = cfg().deck_size();
    std::vector<float> f(game_->feature_dim(), 0.0f);
    f[private_[i]] = 1.0f;
    if (board_ >= 0) f[deck + board_] = 1.0f;
    f[2 * deck] = static_cast<float>(wagered_[0] + wagered_[1]) / cfg().max_pot();
    f[2 * deck + 1] =
        static_cast<float>(raises_by_round_[0]) / cfg().max_raises_per_round;
    f[2 * deck + 2] =
        static_cast<float>(raises_by_round_[1]) / cfg().max_raises_per_round;
    f[2 * deck + 3] = static_cast<float>(i);
    return f;
  }

  int round() const override { return round_; }

  std::string to_string() const override {
    std::string s = "leduc[";
    for (int i = 0; i < 2; ++i) {
      s += private_[i] >= 0 ? card_label(cfg(), private_[i]) : "?";
      s += i == 0 ? "," : "";
    }
    s += ";board=";
    s += board_ >= 0 ? card_label(cfg(), board_) : "-";
    s += ";";
    for (char a : history_)
      s += a == kRoundSeparator ? '/' : "FCR"[static_cast<int>(a)];
    s += terminal_ ? ";end]" : "]";
    return s;
  }

 private:
  const LeducConfig& cfg() const { return game_->config(); }

  bool at_chance() const {
    return private_[0] < 0 || private_[1] < 0 || (round_ == 1 && board_ < 0);
  }

  bool facing_bet() const { return wagered_[0] != wagered_[1]; }

  std::vector<int> legal_slots() const {
    std::vector<int> slots;
    if (facing_bet()) slots.push_back(kFold);
    slots.push_back(kCall);
    if (raises_by_round_[round_] < cfg().max_raises_per_round) slots.push_back(kRaise);
    return slots;
  }

  void close_round() {
    if (round_ == 0) {
      round_ = 1;
      actions_this_round_ = 0;
      history_.push_back(kRoundSeparator);
    } else {
      terminal_ = true;
    }
  }

  int showdown_winner() const {  // -1 on a split
    int rank0 = private_[0] / cfg().n_suits;
    int rank1 = private_[1] / cfg().n_suits;
    int board_rank = board_ / cfg().n_suits;
    bool pair0 = rank0 == board_rank;
    bool pair1 = rank1 == board_rank;
    if (pair0 != pair1) return pair0 ? 0 : 1;
    if (rank0 == rank1) return -1;
    return rank0 > rank1 ? 0 : 1;
  }

  std::vector<int> dealable() const {
    std::vector<int> cards;
    for (int c = 0; c < cfg().deck_size(); ++c)
      if (c != private_[0] && c != private_[1] && c != board_) cards.push_back(c);
    return cards;
  }

  void check_action_id(int id) const {
    if (terminal_) throw TerminalState("apply_action on terminal state");
    if (id < 0 || id >= num_actions()) throw IllegalAction("action id out of range");
  }

  const LeducGame* game_;
  int private_[2] = {-1, -1};
  int board_ = -1;
  int round_ = 0;
  int actions_this_round_ = 0;
  int raises_by_round_[2] = {0, 0};
  int wagered_[2];
  std::string history_;  // slot bytes, rounds separated by kRoundSeparator
  bool terminal_ = false;
  int folder_ = -1;
};

}  // namespace

void LeducConfig::validate() const {
  if (n_ranks < 1 || n_suits < 1 || deck_size() < 3)
    throw std::invalid_argument("LeducConfig: deck must hold at least 3 cards");
  if (max_raises_per_round < 0)
    throw std::invalid_argument("LeducConfig: negative raise cap");
  if (ante <= 0 || bet_sizes[0] <= 0 || bet_sizes[1] <= 0)
    throw std::invalid_argument("LeducConfig: ante and bet sizes must be positive");
}

LeducGame::LeducGame(LeducConfig config) : config_(config) { config_.validate(); }

std::string LeducGame::name() const {
  LeducConfig def;
  if (config_.n_ranks == def.n_ranks && config_.n_suits == def.n_suits &&
      config_.max_raises_per_round == def.max_raises_per_round)
    return "leduc";
  return "leduc_r" + std::to_string(config_.n_ranks) + "s" +
         std::to_string(config_.n_suits) + "b" +
         std::to_string(config_.max_raises_per_round);
}

StatePtr LeducGame::new_initial_state() const { return std::make_unique<LeducState>(this); }

}  // namespace sdcfr
