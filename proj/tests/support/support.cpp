#include "support.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "oscar/core/errors.hpp"
#include "oscar/rewards/rewards.hpp"

namespace oscar::testing {

std::filesystem::path fixture_path(const std::string& name) {
  return std::filesystem::path(OSCAR_FIXTURE_DIR) / name;
}

std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(OSCAR_DATA_DIR) / name;
}

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<nlohmann::json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

std::filesystem::path temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("oscar-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
              std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

SimFixture make_sim(const sim::WorldParams& params) {
  SimFixture f;
  f.world = std::make_shared<const sim::SimWorld>(sim::SimWorld::generate(params));
  f.policy = std::make_shared<const sim::ToyPolicy>(sim::ToyPolicy::from_world(*f.world));
  f.backend = std::make_shared<sim::SimBackend>(f.world, f.policy);
  return f;
}

SimFixture make_sim(const sim::WorldParams& params, const sim::ToyPolicy& policy) {
  SimFixture f;
  f.world = std::make_shared<const sim::SimWorld>(sim::SimWorld::generate(params));
  f.policy = std::make_shared<const sim::ToyPolicy>(policy);
  f.backend = std::make_shared<sim::SimBackend>(f.world, f.policy);
  return f;
}

std::vector<CandidateSentence> ScriptedBackend::generate_candidates(const SceneContext&,
                                                                    std::string_view prefix,
                                                                    int k, double,
                                                                    std::uint64_t) {
  ++generate_calls_;
  const std::string key(prefix);
  if (fail_everything || failing.count(key)) throw TransportError("scripted failure", 3);
  auto it = candidates.find(key);
  if (it == candidates.end()) return {};
  std::vector<CandidateSentence> out = it->second;
  if (static_cast<int>(out.size()) > k) out.resize(static_cast<std::size_t>(k));
  return out;
}

std::vector<double> ScriptedBackend::choice_probability(const backend::ChoiceQuery& query) {
  ++choice_calls_;
  if (fail_everything) throw TransportError("scripted failure", 3);
  double p = default_p_no;
  for (const auto& [sentence, value] : p_no) {
    if (rewards::verification_prompt(sentence) == query.prompt_text) p = value;
  }
  for (const auto& f : failing) {
    if (rewards::verification_prompt(f) == query.prompt_text) {
      throw TransportError("scripted failure", 3);
    }
  }
  std::vector<double> out(query.choices.size(), 0.0);
  for (std::size_t i = 0; i < query.choices.size(); ++i) {
    out[i] = query.choices[i] == "No" ? p : 1.0 - p;
  }
  return out;
}

std::string ScriptedBackend::greedy_rollout(const SceneContext&, std::string_view prefix, int) {
  ++rollout_calls_;
  const std::string key(prefix);
  if (fail_everything || failing.count(key)) throw TransportError("scripted failure", 3);
  auto it = rollouts.find(key);
  return it == rollouts.end() ? key : it->second;
}

double ScriptedBackend::quality_score(const SceneContext&, std::string_view caption) {
  ++quality_calls_;
  if (fail_everything) throw TransportError("scripted failure", 3);
  auto it = quality.find(std::string(caption));
  return it == quality.end() ? default_quality : it->second;
}

CandidateSentence candidate(std::string text, double logprob, int tokens, bool end) {
  CandidateSentence c;
  if (tokens == 0) {
    std::istringstream in(text);
    std::string w;
    while (in >> w) ++tokens;
  }
  c.text = std::move(text);
  c.logprob = logprob;
  c.token_count = std::max(tokens, 1);
  c.end_of_response = end;
  return c;
}

std::size_t puct_oracle(const std::vector<double>& q, const std::vector<double>& prior,
                        const std::vector<int>& edge_visits, int parent_visits, double c) {
  std::size_t best = 0;
  double best_score = -INFINITY;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double s = q[i] + c * prior[i] * std::sqrt(static_cast<double>(parent_visits)) /
                                (1.0 + static_cast<double>(edge_visits[i]));
    if (i == 0 || s > best_score) {
      best = i;
      best_score = s;
    }
  }
  return best;
}

std::vector<double> prior_oracle(const std::vector<double>& logprobs,
                                 const std::vector<int>& tokens, double lambda) {
  std::vector<long double> raw;
  long double total = 0;
  for (std::size_t i = 0; i < logprobs.size(); ++i) {
    const long double v = std::exp(static_cast<long double>(logprobs[i])) /
                          std::pow(static_cast<long double>(tokens[i]), lambda);
    raw.push_back(v);
    total += v;
  }
  std::vector<double> out;
  for (auto v : raw) out.push_back(static_cast<double>(v / total));
  return out;
}

std::vector<std::size_t> filter_oracle(const std::vector<std::vector<double>>& sim,
                                       double threshold) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < sim.size(); ++i) {
    bool ok = true;
    for (auto j : kept) ok = ok && sim[i][j] < threshold;
    if (ok) kept.push_back(i);
  }
  return kept;
}

namespace {

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

double cosine_oracle(const std::string& a, const std::string& b) {
  const auto wa = words(a);
  const auto wb = words(b);
  std::vector<std::string> vocab(wa);
  vocab.insert(vocab.end(), wb.begin(), wb.end());
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  std::vector<double> va(vocab.size()), vb(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    va[i] = static_cast<double>(std::count(wa.begin(), wa.end(), vocab[i]));
    vb[i] = static_cast<double>(std::count(wb.begin(), wb.end(), vocab[i]));
  }
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    dot += va[i] * vb[i];
    na += va[i] * va[i];
    nb += vb[i] * vb[i];
  }
  if (na == 0 && nb == 0) return 1.0;
  if (na == 0 || nb == 0) return 0.0;
  // sqrt of the product keeps identical bags at exactly 1.
  return dot / std::sqrt(na * nb);
}

std::vector<SyntheticCaption> synthetic_corpus(std::size_t count, std::uint64_t seed,
                                               const extraction::SynonymDictionary& dict) {
  // Surface forms grouped by canonical name.
  std::map<std::string, std::vector<std::string>> surfaces;
  for (const auto& [surface, canonical] : dict.entries()) surfaces[canonical].push_back(surface);
  std::vector<std::string> names;
  for (const auto& [name, list] : surfaces) names.push_back(name);

  // None of these words is a surface form or the start of one.
  static const std::vector<std::string> kOpeners = {"There is", "I see", "We notice",
                                                     "Look at", "Here is"};
  static const std::vector<std::string> kJoiners = {"near", "beside", "and", "with",
                                                     "behind"};
  Rng rng(seed);
  std::vector<SyntheticCaption> out;
  for (std::size_t c = 0; c < count; ++c) {
    SyntheticCaption cap;
    cap.context.image_ref = "synthetic://" + std::to_string(c);
    cap.context.prompt = "Describe this image in detail.";
    const auto gt_size = rng.uniform_int(2, 5);
    while (static_cast<std::int64_t>(cap.context.gt_objects.size()) < gt_size) {
      cap.context.gt_objects.insert(names[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(names.size()) - 1))]);
    }
    const std::vector<std::string> gt(cap.context.gt_objects.begin(),
                                      cap.context.gt_objects.end());
    const auto sentences = rng.uniform_int(0, 3);
    std::vector<std::string> parts;
    for (std::int64_t s = 0; s < sentences; ++s) {
      std::string sentence = kOpeners[static_cast<std::size_t>(rng.uniform_int(0, 4))];
      const auto objects = rng.uniform_int(1, 3);
      for (std::int64_t o = 0; o < objects; ++o) {
        std::string canonical;
        if (rng.bernoulli(0.7)) {
          canonical = gt[static_cast<std::size_t>(
              rng.uniform_int(0, static_cast<std::int64_t>(gt.size()) - 1))];
        } else {
          canonical = names[static_cast<std::size_t>(
              rng.uniform_int(0, static_cast<std::int64_t>(names.size()) - 1))];
        }
        const auto& forms = surfaces[canonical];
        std::string surface =
            forms[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(forms.size()) - 1))];
        if (rng.bernoulli(0.2) && !surface.empty()) {
          surface[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(surface[0])));
        }
        if (o > 0) sentence += " " + kJoiners[static_cast<std::size_t>(rng.uniform_int(0, 4))];
        sentence += " the " + surface;
        cap.mentions.push_back(canonical);
      }
      parts.push_back(sentence + ".");
    }
    if (parts.empty()) parts.push_back("Nothing of note.");
    for (std::size_t i = 0; i < parts.size(); ++i) cap.text += (i ? " " : "") + parts[i];
    out.push_back(std::move(cap));
  }
  return out;
}

extraction::ChairReport chair_oracle(const std::vector<SyntheticCaption>& corpus) {
  extraction::ChairReport r;
  r.captions = corpus.size();
  for (const auto& cap : corpus) {
    bool bad = false;
    for (const auto& m : cap.mentions) {
      ++r.mentions;
      if (!cap.context.gt_objects.count(m)) {
        ++r.hallucinated_mentions;
        bad = true;
      }
    }
    if (bad) ++r.hallucinated_captions;
  }
  r.chair_s = r.captions ? static_cast<double>(r.hallucinated_captions) /
                               static_cast<double>(r.captions)
                         : 0.0;
  r.chair_i = r.mentions ? static_cast<double>(r.hallucinated_mentions) /
                               static_cast<double>(r.mentions)
                         : 0.0;
  return r;
}

}  // namespace oscar::testing
