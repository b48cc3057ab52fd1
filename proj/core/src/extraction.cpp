#include "oscar/extraction/extraction.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "oscar/backend/backend.hpp"
#include "oscar/core/errors.hpp"
#include "oscar/core/text.hpp"

namespace oscar::extraction {
namespace {

struct Token {
  std::string word;  // lowercased
  std::size_t begin = 0;
  std::size_t end = 0;
};

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  while (i < n) {
    if (!is_word(text[i])) {
      ++i;
      continue;
    }
    Token tok;
    tok.begin = i;
    while (i < n && (is_word(text[i]) ||
                     (text[i] == '\'' && i + 1 < n && is_word(text[i + 1])))) {
      tok.word += static_cast<char>(std::tolower(static_cast<unsigned char>(text[i])));
      ++i;
    }
    tok.end = i;
    out.push_back(std::move(tok));
  }
  return out;
}

const std::set<std::string>& determiners() {
  static const std::set<std::string> kWords = {
      "a",   "an",    "the",   "some",    "one",     "two",  "three", "four", "several",
      "many", "another", "its", "his",    "her",     "their", "this", "that", "these",
      "those", "small", "large", "big",   "little"};
  return kWords;
}

// Connectors cut together with a following removed noun phrase, longest first.
const std::vector<std::string>& connectors() {
  static const std::vector<std::string> kPhrases = {
      "in front of", "on top of", "next to", "close to", "along with", "together with",
      "near",        "beside",    "behind",  "with",     "and",        "under",
      "on",          "by",        "beneath", "above",    "below"};
  return kPhrases;
}

std::string capitalize_first(std::string s) {
  for (char& c : s) {
    if (std::isalpha(static_cast<unsigned char>(c)) != 0) {
      c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      break;
    }
  }
  return s;
}

// Collapses whitespace and removes spaces before punctuation and stray commas.
std::string tidy(std::string_view text) {
  std::string s = normalize_whitespace(text);
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == ' ' && i + 1 < s.size() &&
        (s[i + 1] == '.' || s[i + 1] == ',' || s[i + 1] == '!' || s[i + 1] == '?')) {
      continue;
    }
    if (c == ',' && !out.empty() && out.back() == ',') continue;
    out += c;
  }
  // ", ." and leading commas
  for (const char* bad : {",.", ",!", ",?"}) {
    std::size_t p = 0;
    while ((p = out.find(bad, p)) != std::string::npos) out.erase(p, 1);
  }
  while (!out.empty() && (out.front() == ',' || out.front() == ' ')) out.erase(out.begin());
  return out;
}

// Start of the noun phrase ending at `mention`: extends left over determiners.
std::size_t phrase_start(const std::vector<Token>& tokens, std::size_t first_token) {
  std::size_t t = first_token;
  while (t > 0 && determiners().count(tokens[t - 1].word) != 0) --t;
  return t;
}

std::string rewrite_sentence(std::string_view sentence, const std::set<std::string>& objects,
                             const SynonymDictionary& dict, bool& dropped) {
  dropped = false;
  const Extraction ex = extract_objects(sentence, dict);
  std::vector<const ObjectMention*> removed;
  std::vector<const ObjectMention*> kept;
  for (const auto& m : ex.mentions) {
    (objects.count(m.canonical) != 0 ? removed : kept).push_back(&m);
  }
  if (removed.empty()) return std::string(sentence);
  if (kept.empty()) {
    dropped = true;
    return {};
  }

  const std::vector<Token> tokens = tokenize(sentence);
  auto token_at = [&](std::size_t byte) {
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      if (tokens[t].begin == byte) return t;
    }
    return tokens.size();
  };

  const bool subject_removed = std::any_of(removed.begin(), removed.end(), [&](auto* m) {
    return phrase_start(tokens, token_at(m->begin)) == 0;
  });
  if (subject_removed) {
    // Rebuild as an existential over the surviving noun phrases.
    std::vector<std::string> phrases;
    for (const auto* m : kept) {
      const std::size_t start = tokens[phrase_start(tokens, token_at(m->begin))].begin;
      std::string phrase(sentence.substr(start, m->end - start));
      phrase = to_lower(phrase.substr(0, 1)) + phrase.substr(1);
      if (start == m->begin) {
        phrase = std::string(indefinite_article(m->surface)) + " " + phrase;
      }
      phrases.push_back(std::move(phrase));
    }
    std::string body;
    for (std::size_t i = 0; i < phrases.size(); ++i) {
      if (i > 0) body += (i + 1 == phrases.size()) ? " and " : ", ";
      body += phrases[i];
    }
    return "There is " + body + ".";
  }

  std::string out(sentence);
  std::sort(removed.begin(), removed.end(),
            [](auto* a, auto* b) { return a->begin > b->begin; });
  for (const auto* m : removed) {
    std::size_t start = tokens[phrase_start(tokens, token_at(m->begin))].begin;
    const std::string lowered_before = to_lower(std::string_view(out).substr(0, start));
    const std::string trimmed_before = trim(lowered_before);
    for (const auto& connector : connectors()) {
      if (trimmed_before.size() < connector.size()) continue;
      if (trimmed_before.compare(trimmed_before.size() - connector.size(), connector.size(),
                                 connector) != 0) {
        continue;
      }
      const std::size_t at = trimmed_before.size() - connector.size();
      if (at > 0 && std::isalnum(static_cast<unsigned char>(trimmed_before[at - 1])) != 0) {
        continue;
      }
      start = at;
      break;
    }
    out.erase(start, m->end - start);
  }
  return capitalize_first(tidy(out));
}

}  // namespace

std::vector<std::string> Extraction::multiset() const {
  std::vector<std::string> out;
  out.reserve(mentions.size());
  for (const auto& m : mentions) out.push_back(m.canonical);
  return out;
}

Extraction extract_objects(std::string_view text, const SynonymDictionary& dict) {
  Extraction result;
  const std::vector<Token> tokens = tokenize(text);
  const std::size_t n = tokens.size();
  std::size_t i = 0;
  while (i < n) {
    bool matched = false;
    const std::size_t longest = std::min<std::size_t>(static_cast<std::size_t>(dict.max_words()), n - i);
    for (std::size_t len = longest; len >= 1; --len) {
      std::string key = tokens[i].word;
      for (std::size_t j = 1; j < len; ++j) key += ' ' + tokens[i + j].word;
      if (auto canonical = dict.lookup(key)) {
        ObjectMention m;
        m.canonical = *canonical;
        m.begin = tokens[i].begin;
        m.end = tokens[i + len - 1].end;
        m.surface = std::string(text.substr(m.begin, m.end - m.begin));
        result.objects.insert(m.canonical);
        result.mentions.push_back(std::move(m));
        i += len;
        matched = true;
        break;
      }
    }
    if (!matched) ++i;
  }
  return result;
}

ChairReport chair(const std::vector<std::string>& captions,
                  const std::vector<SceneContext>& contexts, const SynonymDictionary& dict) {
  if (captions.size() != contexts.size()) {
    throw ArgumentError("chair: " + std::to_string(captions.size()) + " captions but " +
                        std::to_string(contexts.size()) + " contexts");
  }
  ChairReport report;
  report.captions = captions.size();
  for (std::size_t i = 0; i < captions.size(); ++i) {
    const Extraction ex = extract_objects(captions[i], dict);
    std::size_t bad = 0;
    for (const auto& m : ex.mentions) {
      if (contexts[i].gt_objects.count(m.canonical) == 0) ++bad;
    }
    report.mentions += ex.mentions.size();
    report.hallucinated_mentions += bad;
    if (bad > 0) ++report.hallucinated_captions;
  }
  if (report.captions > 0) {
    report.chair_s = static_cast<double>(report.hallucinated_captions) /
                     static_cast<double>(report.captions);
  }
  if (report.mentions > 0) {
    report.chair_i = static_cast<double>(report.hallucinated_mentions) /
                     static_cast<double>(report.mentions);
  }
  return report;
}

std::string_view indefinite_article(std::string_view word) {
  const std::string w = to_lower(trim(word));
  if (w.empty()) return "a";
  static const std::vector<std::string> kConsonantSound = {"uni", "use", "usu", "uti", "eu",
                                                           "ewe", "one", "once", "uk"};
  static const std::vector<std::string> kVowelSound = {"hour", "honest", "honor", "honour",
                                                       "heir", "hors d"};
  for (const auto& p : kConsonantSound) {
    if (w.rfind(p, 0) == 0) return "a";
  }
  for (const auto& p : kVowelSound) {
    if (w.rfind(p, 0) == 0) return "an";
  }
  switch (w.front()) {
    case 'a':
    case 'e':
    case 'i':
    case 'o':
    case 'u':
      return "an";
    default:
      return "a";
  }
}

std::string discriminative_query(std::string_view object, ArticleStyle style) {
  const std::string name = trim(object);
  if (name.empty()) throw ArgumentError("discriminative_query: empty object name");
  const std::string article =
      style == ArticleStyle::literal ? std::string("a/an") : std::string(indefinite_article(name));
  return "Is there " + article + " " + name + " in the image?";
}

std::string remove_objects(std::string_view caption, const std::set<std::string>& objects,
                           const SynonymDictionary& dict,
                           std::vector<std::size_t>* dropped_sentences) {
  std::vector<std::string> kept;
  const auto sentences = split_sentence_texts(caption);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    bool dropped = false;
    std::string rewritten = rewrite_sentence(sentences[i], objects, dict, dropped);
    if (dropped) {
      if (dropped_sentences != nullptr) dropped_sentences->push_back(i);
      continue;
    }
    kept.push_back(std::move(rewritten));
  }
  return join_texts(kept);
}

RewriteResult self_verify_rewrite(const SceneContext& ctx, std::string_view caption,
                                  backend::Backend& backend, const SynonymDictionary& dict,
                                  ArticleStyle style) {
  RewriteResult result;
  const Extraction ex = extract_objects(caption, dict);
  std::set<std::string> rejected;
  std::map<std::string, double> p_no;
  for (const auto& object : ex.objects) {
    backend::ChoiceQuery query{ctx.image_ref, discriminative_query(object, style), {"Yes", "No"}};
    try {
      const auto probs = backend.choice_probability(query);
      p_no[object] = probs.at(1);
      if (probs.at(1) > 0.5) rejected.insert(object);
    } catch (const Error&) {
      result.unverified.push_back(object);
    }
  }
  if (rejected.empty()) {
    result.caption = std::string(caption);
    return result;
  }

  // Map each removed object to the first sentence that mentions it.
  const auto sentences = split_sentence_texts(caption);
  std::vector<std::size_t> dropped;
  result.caption = remove_objects(caption, rejected, dict, &dropped);
  for (const auto& object : rejected) {
    Removal r;
    r.object = object;
    r.p_no = p_no[object];
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      if (extract_objects(sentences[i], dict).objects.count(object) != 0) {
        r.sentence_index = i;
        r.sentence_dropped = std::find(dropped.begin(), dropped.end(), i) != dropped.end();
        break;
      }
    }
    result.removals.push_back(std::move(r));
  }
  return result;
}

}  // namespace oscar::extraction
