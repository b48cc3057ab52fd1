#include "oscar/extraction/dictionary.hpp"

#include "oscar/core/digest.hpp"
#include "oscar/core/errors.hpp"
#include "oscar/core/text.hpp"

namespace oscar::extraction {
namespace {

std::string normalize_surface(std::string_view surface) {
  return join_texts(word_tokens(surface));
}

}  // namespace

SynonymDictionary SynonymDictionary::parse_tsv(std::string_view text) {
  SynonymDictionary dict;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    ++line_no;
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw ArgumentError("dictionary line " + std::to_string(line_no) +
                          ": expected surface<TAB>canonical");
    }
    dict.add(line.substr(0, tab), line.substr(tab + 1));
  }
  return dict;
}

SynonymDictionary SynonymDictionary::load(const std::filesystem::path& path) {
  return parse_tsv(read_file(path));
}

const SynonymDictionary& SynonymDictionary::coco_default() {
  static const SynonymDictionary kDefault = parse_tsv(coco_dictionary_tsv());
  return kDefault;
}

void SynonymDictionary::add(std::string_view surface, std::string_view canonical) {
  const std::string key = normalize_surface(surface);
  const std::string canon = normalize_surface(canonical);
  if (key.empty() || canon.empty()) throw ArgumentError("empty dictionary entry");
  auto existing = entries_.find(key);
  if (existing != entries_.end() && existing->second != canon) {
    throw ArgumentError("surface form '" + key + "' maps to both '" + existing->second +
                        "' and '" + canon + "'");
  }
  entries_[key] = canon;
  entries_[canon] = canon;
  vocabulary_.insert(canon);
  max_words_ = std::max({max_words_, whitespace_token_count(key), whitespace_token_count(canon)});
}

std::optional<std::string> SynonymDictionary::lookup(std::string_view surface) const {
  auto it = entries_.find(normalize_surface(surface));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

bool SynonymDictionary::is_canonical(std::string_view name) const {
  return vocabulary_.count(std::string(name)) != 0;
}

}  // namespace oscar::extraction
