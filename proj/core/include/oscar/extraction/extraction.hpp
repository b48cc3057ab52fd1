#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "oscar/core/types.hpp"
#include "oscar/extraction/dictionary.hpp"

namespace oscar::backend {
class Backend;
}

namespace oscar::extraction {

struct ObjectMention {
  std::string canonical;
  std::string surface;
  /// Byte range of the surface form in the source text.
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct Extraction {
  std::vector<ObjectMention> mentions;  // document order, one per matched span
  std::set<std::string> objects;

  /// Canonical names with multiplicity, in document order.
  std::vector<std::string> multiset() const;
};

/// Word-boundary tokenization with longest-surface-form-first matching.
Extraction extract_objects(std::string_view text, const SynonymDictionary& dict);

struct ChairReport {
  double chair_s = 0.0;
  double chair_i = 0.0;
  std::size_t captions = 0;
  std::size_t hallucinated_captions = 0;
  std::size_t mentions = 0;
  std::size_t hallucinated_mentions = 0;

  bool operator==(const ChairReport&) const = default;
};

/// CHAIR over aligned caption/context lists. Throws ArgumentError on length
/// mismatch. Empty input yields an all-zero report.
ChairReport chair(const std::vector<std::string>& captions,
                  const std::vector<SceneContext>& contexts, const SynonymDictionary& dict);

enum class ArticleStyle {
  literal,   // keeps the "a/an" form of the probe template
  resolved,  // picks "a" or "an" from the leading sound
};

/// "a" or "an" for a word, by leading vowel sound with an exception table.
std::string_view indefinite_article(std::string_view word);

/// "Is there a/an <object> in the image?". Throws ArgumentError on an empty
/// name.
std::string discriminative_query(std::string_view object,
                                 ArticleStyle style = ArticleStyle::literal);

struct Removal {
  std::string object;
  double p_no = 0.0;
  std::size_t sentence_index = 0;
  bool sentence_dropped = false;
};

struct RewriteResult {
  std::string caption;
  std::vector<Removal> removals;
  /// Objects whose verification call failed; they are left in place.
  std::vector<std::string> unverified;
};

/// Asks the backend about every extracted object and removes those it
/// rejects (P(No) > 0.5).
RewriteResult self_verify_rewrite(const SceneContext& ctx, std::string_view caption,
                                  backend::Backend& backend, const SynonymDictionary& dict,
                                  ArticleStyle style = ArticleStyle::literal);

/// Removes every mention of `objects` from `caption`: the noun phrase (with a
/// leading connector such as "next to") is cut, and a sentence left with no
/// dictionary object is dropped. Exposed for testing.
std::string remove_objects(std::string_view caption, const std::set<std::string>& objects,
                           const SynonymDictionary& dict,
                           std::vector<std::size_t>* dropped_sentences = nullptr);

}  // namespace oscar::extraction
