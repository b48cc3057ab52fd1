#include "oscar/mcts/similarity.hpp"

#include <cmath>
#include <map>

#include "oscar/core/text.hpp"

namespace oscar::mcts {

namespace {

std::map<std::string, double> counts(std::string_view text) {
  std::map<std::string, double> out;
  for (auto& token : word_tokens(text)) out[token] += 1.0;
  return out;
}

}  // namespace

double bow_cosine(std::string_view a, std::string_view b) {
  const auto ca = counts(a);
  const auto cb = counts(b);
  if (ca.empty() && cb.empty()) return 1.0;
  if (ca.empty() || cb.empty()) return 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [token, n] : ca) {
    na += n * n;
    if (auto it = cb.find(token); it != cb.end()) dot += n * it->second;
  }
  for (const auto& [token, n] : cb) nb += n * n;
  // sqrt of the product keeps identical bags at exactly 1.
  return dot / std::sqrt(na * nb);
}

}  // namespace oscar::mcts
