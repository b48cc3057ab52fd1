#include "oscar/core/types.hpp"

#include <cmath>

#include "oscar/core/errors.hpp"

namespace oscar {

std::string_view to_string(PathScore score) {
  switch (score) {
    case PathScore::sum:
      return "sum";
    case PathScore::leaf:
      return "leaf";
    case PathScore::mean:
      return "mean";
  }
  return "sum";
}

PathScore path_score_from_string(std::string_view name) {
  if (name == "sum") return PathScore::sum;
  if (name == "leaf") return PathScore::leaf;
  if (name == "mean") return PathScore::mean;
  throw ConfigError("path_score must be one of sum, leaf, mean (got '" + std::string(name) + "')");
}

void SearchConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("invalid search config: ") + what);
  };
  require(std::isfinite(c_puct) && c_puct > 0.0, "c_puct must be positive");
  require(std::isfinite(length_penalty) && length_penalty > 0.0,
          "length_penalty must be positive");
  require(discount >= 0.0 && discount <= 1.0, "discount must lie in [0, 1]");
  require(expansion_width >= 1, "expansion_width must be a positive integer");
  require(sim_threshold >= 0.0 && sim_threshold <= 1.0, "sim_threshold must lie in [0, 1]");
  require(budget >= 1, "budget must be a positive integer");
  require(max_depth >= 1, "max_depth must be a positive integer");
  require(std::isfinite(temperature) && temperature > 0.0, "temperature must be positive");
  require(std::isfinite(q_margin) && q_margin >= 0.0, "q_margin must be nonnegative");
  require(eval_budget >= 0, "eval_budget must be nonnegative");
}

std::string join_texts(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& part : parts) {
    if (part.empty()) continue;
    if (!out.empty()) out += ' ';
    out += part;
  }
  return out;
}

std::string Trajectory::text() const {
  std::vector<std::string> parts;
  parts.reserve(sentences.size());
  for (const auto& s : sentences) parts.push_back(s.text);
  return join_texts(parts);
}

}  // namespace oscar
