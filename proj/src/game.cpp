#include "sdcfr/game.hpp"

#include <cmath>

namespace sdcfr {

bool is_valid_distribution(std::span<const double> probs, double tol) {
  if (probs.empty()) return false;
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= tol;
}

Distribution uniform_distribution(int n) {
  if (n <= 0) throw std::invalid_argument("uniform_distribution: n must be positive");
  return Distribution(n, 1.0 / n);
}

std::string InfoSetKey::hex() const {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char c : bytes) {
    out.push_back(digits[c >> 4]);
    out.push_back(digits[c & 0xF]);
  }
  return out;
}

std::vector<std::uint8_t> GameState::legal_mask() const {
  std::vector<std::uint8_t> mask(game().max_actions(), 0);
  for (int i = 0; i < num_actions(); ++i) mask[action(i).slot] = 1;
  return mask;
}

}  // namespace sdcfr
