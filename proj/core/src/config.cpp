#include "oscar/core/config.hpp"

#include <charconv>
#include <sstream>

#include "oscar/core/digest.hpp"
#include "oscar/core/errors.hpp"
#include "oscar/core/text.hpp"

namespace oscar {

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig config;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    ++line_no;
    const std::string line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    }
    config.values_[std::move(key)] = std::move(value);
  }
  return config;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  return parse(read_file(path));
}

std::optional<std::string> KeyValueConfig::take(const std::string& key) {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  std::string value = std::move(it->second);
  values_.erase(it);
  return value;
}

std::string KeyValueConfig::to_text() const {
  std::ostringstream out;
  for (const auto& [k, v] : values_) out << k << " = " << v << '\n';
  return out.str();
}

double parse_double(std::string_view key, std::string_view value) {
  try {
    std::size_t used = 0;
    const std::string s(value);
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + std::string(key) + "': not a number: '" +
                      std::string(value) + "'");
  }
}

std::int64_t parse_int(std::string_view key, std::string_view value) {
  std::int64_t v = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("config key '" + std::string(key) + "': not an integer: '" +
                      std::string(value) + "'");
  }
  return v;
}

std::uint64_t parse_uint64(std::string_view key, std::string_view value) {
  std::uint64_t v = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("config key '" + std::string(key) + "': not an unsigned integer: '" +
                      std::string(value) + "'");
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view value) {
  const std::string v = to_lower(value);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + std::string(key) + "': not a boolean: '" +
                    std::string(value) + "'");
}

void take_search_config(KeyValueConfig& kv, SearchConfig& config) {
  if (auto v = kv.take("c_puct")) config.c_puct = parse_double("c_puct", *v);
  if (auto v = kv.take("length_penalty")) config.length_penalty = parse_double("length_penalty", *v);
  if (auto v = kv.take("discount")) config.discount = parse_double("discount", *v);
  if (auto v = kv.take("expansion_width")) {
    config.expansion_width = static_cast<int>(parse_int("expansion_width", *v));
  }
  if (auto v = kv.take("sim_threshold")) config.sim_threshold = parse_double("sim_threshold", *v);
  if (auto v = kv.take("budget")) config.budget = static_cast<int>(parse_int("budget", *v));
  if (auto v = kv.take("max_depth")) config.max_depth = static_cast<int>(parse_int("max_depth", *v));
  if (auto v = kv.take("temperature")) config.temperature = parse_double("temperature", *v);
  if (auto v = kv.take("q_margin")) config.q_margin = parse_double("q_margin", *v);
  if (auto v = kv.take("seed")) config.seed = parse_uint64("seed", *v);
  if (auto v = kv.take("eval_budget")) {
    config.eval_budget = static_cast<int>(parse_int("eval_budget", *v));
  }
  if (auto v = kv.take("path_score")) config.path_score = path_score_from_string(*v);
}

namespace {
std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}
}  // namespace

std::map<std::string, std::string> search_config_entries(const SearchConfig& config) {
  return {
      {"c_puct", format_double(config.c_puct)},
      {"length_penalty", format_double(config.length_penalty)},
      {"discount", format_double(config.discount)},
      {"expansion_width", std::to_string(config.expansion_width)},
      {"sim_threshold", format_double(config.sim_threshold)},
      {"budget", std::to_string(config.budget)},
      {"max_depth", std::to_string(config.max_depth)},
      {"temperature", format_double(config.temperature)},
      {"q_margin", format_double(config.q_margin)},
      {"seed", std::to_string(config.seed)},
      {"eval_budget", std::to_string(config.eval_budget)},
      {"path_score", std::string(to_string(config.path_score))},
  };
}

}  // namespace oscar
