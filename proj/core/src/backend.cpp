#include "oscar/backend/backend.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <regex>
#include <set>

#include "oscar/core/errors.hpp"
#include "oscar/core/text.hpp"

namespace oscar::backend {

void ChoiceQuery::validate() const {
  if (choices.size() < 2) throw ArgumentError("choice query needs at least two choices");
  std::set<std::string> distinct(choices.begin(), choices.end());
  if (distinct.size() != choices.size()) throw ArgumentError("choice query has duplicate choices");
}

std::vector<double> renormalize_logprobs(const std::vector<double>& logprobs) {
  double top = -std::numeric_limits<double>::infinity();
  for (double lp : logprobs) top = std::max(top, lp);
  if (!std::isfinite(top)) throw ArgumentError("renormalize_logprobs: no finite entry");
  std::vector<double> out(logprobs.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < logprobs.size(); ++i) {
    out[i] = std::isfinite(logprobs[i]) ? std::exp(logprobs[i] - top) : 0.0;
    total += out[i];
  }
  for (double& p : out) p /= total;
  return out;
}

double parse_quality_score(std::string_view reply) {
  static const std::regex kNumber(R"(-?\d+(?:\.\d+)?)");
  const std::string text(reply);
  std::smatch m;
  if (!std::regex_search(text, m, kNumber)) {
    throw ScoringError("no score in reply: '" + text.substr(0, 80) + "'");
  }
  const double v = std::stod(m.str());
  return std::clamp(v, 0.0, 10.0);
}

int match_choice(std::string_view answer, const std::vector<std::string>& choices) {
  auto normalize = [](std::string_view s) {
    std::string out;
    for (char c : to_lower(trim(s))) {
      if (std::isalnum(static_cast<unsigned char>(c)) != 0 || c == ' ') out += c;
    }
    return trim(out);
  };
  const std::string a = normalize(answer);
  if (a.empty()) return -1;
  for (std::size_t i = 0; i < choices.size(); ++i) {
    const std::string choice = normalize(choices[i]);
    const std::string label(1, static_cast<char>('a' + i));
    if (a == choice || a == label || a == label + " " + choice) return static_cast<int>(i);
  }
  // "No." / "No, there is not" style answers: leading word match.
  const std::string first_word = a.substr(0, a.find(' '));
  for (std::size_t i = 0; i < choices.size(); ++i) {
    if (first_word == normalize(choices[i])) return static_cast<int>(i);
  }
  return -1;
}

std::vector<double> vote_probability(const std::vector<std::string>& samples,
                                     const std::vector<std::string>& choices) {
  std::vector<double> counts(choices.size(), 0.0);
  double matched = 0.0;
  for (const auto& s : samples) {
    const int idx = match_choice(s, choices);
    if (idx >= 0) {
      counts[static_cast<std::size_t>(idx)] += 1.0;
      matched += 1.0;
    }
  }
  if (matched == 0.0) {
    return std::vector<double>(choices.size(), 1.0 / static_cast<double>(choices.size()));
  }
  for (double& c : counts) c /= matched;
  return counts;
}

}  // namespace oscar::backend
