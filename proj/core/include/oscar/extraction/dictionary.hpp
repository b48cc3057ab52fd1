#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace oscar::extraction {

/// Surface form -> canonical object category. Lookups are case-insensitive and
/// every canonical name maps to itself.
class SynonymDictionary {
 public:
  /// Parses `surface<TAB>canonical` lines; '#' starts a comment line.
  static SynonymDictionary parse_tsv(std::string_view text);
  static SynonymDictionary load(const std::filesystem::path& path);

  /// The built-in 80-category COCO-style dictionary.
  static const SynonymDictionary& coco_default();

  void add(std::string_view surface, std::string_view canonical);

  std::optional<std::string> lookup(std::string_view surface) const;

  bool is_canonical(std::string_view name) const;

  const std::set<std::string>& vocabulary() const { return vocabulary_; }
  const std::map<std::string, std::string>& entries() const { return entries_; }

  /// Longest surface form in words.
  int max_words() const { return max_words_; }

 private:
  std::map<std::string, std::string> entries_;  // normalized surface -> canonical
  std::set<std::string> vocabulary_;
  int max_words_ = 1;
};

/// Text of the built-in dictionary in TSV form.
std::string_view coco_dictionary_tsv();

}  // namespace oscar::extraction
