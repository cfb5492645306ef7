#include "sdcfr/kuhn.hpp"

#include <algorithm>

namespace sdcfr {
namespace {

constexpr int kAnte = 1;
constexpr int kBet = 1;
constexpr int kMaxPot = 4;

class KuhnState final : public GameState {
 public:
  explicit KuhnState(const KuhnGame* game) : game_(game) {}

  const Game& game() const override { return *game_; }
  StatePtr clone() const override { return std::make_unique<KuhnState>(*this); }

  Player current_player() const override {
    if (terminal_) throw TerminalState("terminal state has no acting player");
    if (card_[0] < 0 || card_[1] < 0) return Player::chance;
    return static_cast<Player>(history_.size() % 2);
  }

  bool is_terminal() const override { return terminal_; }

  int num_actions() const override {
    if (terminal_) return 0;
    if (card_[0] < 0 || card_[1] < 0) return static_cast<int>(dealable().size());
    return 2;  // {fold, call} facing a bet, else {check, bet}
  }

  Action action(int id) const override {
    check_action_id(id);
    if (card_[0] < 0 || card_[1] < 0) {
      int card = dealable()[id];
      return Action{id, card, std::to_string(card)};
    }
    int slot = facing_bet() ? (id == 0 ? kFold : kCall) : (id == 0 ? kCall : kRaise);
    static const char* labels[] = {"FOLD", "CALL", "RAISE"};
    return Action{id, slot, labels[slot]};
  }

  StatePtr apply_action(int id) const override {
    check_action_id(id);
    auto next = std::make_unique<KuhnState>(*this);
    if (card_[0] < 0) {
      next->card_[0] = dealable()[id];
      return next;
    }
    if (card_[1] < 0) {
      next->card_[1] = dealable()[id];
      return next;
    }
    int actor = static_cast<int>(history_.size() % 2);
    int slot = action(id).slot;
    next->history_.push_back(static_cast<char>(slot));
    switch (slot) {
      case kFold:
        next->terminal_ = true;
        next->folder_ = actor;
        break;
      case kCall:
        next->wagered_[actor] = wagered_[1 - actor];
        if (next->history_.size() >= 2) next->terminal_ = true;
        break;
      case kRaise:
        next->wagered_[actor] = wagered_[1 - actor] + kBet;
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
    int winner = card_[0] > card_[1] ? 0 : 1;
    int stake = wagered_[1 - winner];
    return i == winner ? stake : -stake;
  }

  InfoSetKey infoset_key(Player p) const override {
    int i = player_index(p);
    std::string bytes;
    bytes.reserve(3 + history_.size());
    bytes.push_back(static_cast<char>(i));
    bytes.push_back(card_[i] >= 0 ? static_cast<char>(card_[i]) : static_cast<char>(0xFF));
    bytes += history_;
    return InfoSetKey{std::move(bytes)};
  }

  std::vector<ChanceOutcome> chance_outcomes() const override {
    if (terminal_ || (card_[0] >= 0 && card_[1] >= 0))
      throw NotChanceNode("chance_outcomes on a non-chance node");
    auto cards = dealable();
    std::vector<ChanceOutcome> outcomes;
    outcomes.reserve(cards.size());
    double p = 1.0 / static_cast<double>(cards.size());
    for (std::size_t id = 0; id < cards.size(); ++id)
      outcomes.push_back({Action{static_cast<int>(id), cards[id], std::to_string(cards[id])}, p});
    return outcomes;
  }

  std::vector<float> encode_features(Player p) const override {
    if (terminal_) throw TerminalState("encode_features on terminal state");
    if (current_player() == Player::chance) throw ChanceNode("encode_features at chance node");
    int i = player_index(p);
    std::vector<float> f(6, 0.0f);
    f[card_[i]] = 1.0f;
    f[3] = static_cast<float>(wagered_[0] + wagered_[1]) / kMaxPot;
    f[4] = static_cast<float>(raises());
    f[5] = static_cast<float>(i);
    return f;
  }

  int round() const override { return 0; }

  std::string to_string() const override {
    std::string s = "kuhn[";
    s += card_[0] >= 0 ? std::to_string(card_[0]) : "?";
    s += ",";
    s += card_[1] >= 0 ? std::to_string(card_[1]) : "?";
    s += ";";
    for (char a : history_) s += "FCR"[static_cast<int>(a)];
    s += terminal_ ? ";end]" : "]";
    return s;
  }

 private:
  bool facing_bet() const { return wagered_[0] != wagered_[1]; }
  int raises() const {
    return static_cast<int>(std::count(history_.begin(), history_.end(), char(kRaise)));
  }

  std::vector<int> dealable() const {
    std::vector<int> cards;
    for (int c = 0; c < 3; ++c)
      if (c != card_[0] && c != card_[1]) cards.push_back(c);
    return cards;
  }

  void check_action_id(int id) const {
    if (terminal_) throw TerminalState("apply_action on terminal state");
    if (id < 0 || id >= num_actions()) throw IllegalAction("action id out of range");
  }

  const KuhnGame* game_;
  int card_[2] = {-1, -1};
  int wagered_[2] = {kAnte, kAnte};
  std::string history_;  // one slot byte per betting action
  bool terminal_ = false;
  int folder_ = -1;
};

}  // namespace

StatePtr KuhnGame::new_initial_state() const { return std::make_unique<KuhnState>(this); }

}  // namespace sdcfr
