#include "oscar/core/text.hpp"

#include <algorithm>
#include <cctype>

namespace oscar {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

// Token that ends at `dot` (inclusive), lowercased, leading brackets/quotes
// stripped.
std::string token_ending_at(std::string_view text, std::size_t dot) {
  std::size_t begin = dot;
  while (begin > 0 && !is_space(text[begin - 1])) --begin;
  while (begin < dot && (text[begin] == '(' || text[begin] == '"' || text[begin] == '\'' ||
                         text[begin] == '[')) {
    ++begin;
  }
  return to_lower(text.substr(begin, dot - begin + 1));
}

}  // namespace

const std::set<std::string>& default_abbreviations() {
  static const std::set<std::string> kAbbreviations = {
      "approx.", "ca.",  "cf.",  "dr.",   "e.g.", "fig.", "i.e.", "jr.", "mr.",
      "mrs.",    "ms.",  "mt.",  "prof.", "sr.",  "st.",  "vs.",  "u.s.", "a.m.", "p.m."};
  return kAbbreviations;
}

bool is_sentence_delimiter(char c) { return c == '.' || c == '!' || c == '?'; }

std::vector<std::string> split_sentence_texts(std::string_view text,
                                              const std::set<std::string>& abbreviations) {
  std::vector<std::string> out;
  const std::size_t n = text.size();
  std::size_t start = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_sentence_delimiter(text[i])) continue;
    std::size_t run_end = i;
    while (run_end + 1 < n && is_sentence_delimiter(text[run_end + 1])) ++run_end;
    std::size_t end = run_end;
    while (end + 1 < n && is_closer(text[end + 1])) ++end;
    const bool at_break = end + 1 == n || is_space(text[end + 1]);
    bool boundary = at_break;
    if (boundary && run_end == i && text[i] == '.') {
      if (abbreviations.count(token_ending_at(text, i)) != 0) boundary = false;
    }
    if (!at_break && text[i] == '.' && i > 0 && is_digit(text[i - 1]) && i + 1 < n &&
        is_digit(text[i + 1])) {
      boundary = false;
    }
    if (boundary) {
      std::string piece = trim(text.substr(start, end + 1 - start));
      if (!piece.empty()) out.push_back(std::move(piece));
      start = end + 1;
    }
    i = end;
  }
  if (start < n) {
    std::string piece = trim(text.substr(start));
    if (!piece.empty()) out.push_back(std::move(piece));
  }
  return out;
}

std::vector<Sentence> split_sentences(std::string_view text,
                                      const std::set<std::string>& abbreviations) {
  std::vector<Sentence> out;
  for (auto& piece : split_sentence_texts(text, abbreviations)) {
    Sentence s;
    s.token_count = whitespace_token_count(piece);
    s.text = std::move(piece);
    out.push_back(std::move(s));
  }
  return out;
}

std::string join_sentences(const std::vector<Sentence>& sentences) {
  std::vector<std::string> parts;
  parts.reserve(sentences.size());
  for (const auto& s : sentences) parts.push_back(s.text);
  return join_texts(parts);
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

std::string trim(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && is_space(text[b])) ++b;
  while (e > b && is_space(text[e - 1])) --e;
  return std::string(text.substr(b, e - b));
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

int whitespace_token_count(std::string_view text) {
  int count = 0;
  bool in_token = false;
  for (char c : text) {
    if (is_space(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++count;
    }
  }
  return count;
}

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    while (!current.empty() && current.back() == '\'') current.pop_back();
    if (!current.empty()) out.push_back(current);
    current.clear();
  };
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc) != 0) {
      current += static_cast<char>(std::tolower(uc));
    } else if (c == '\'' && !current.empty()) {
      current += c;
    } else {
      flush();
    }
  }
  flush();
  return out;
}

std::string append_sentence(std::string_view prefix, std::string_view sentence) {
  if (prefix.empty()) return std::string(sentence);
  if (sentence.empty()) return std::string(prefix);
  std::string out(prefix);
  out += ' ';
  out += sentence;
  return out;
}

}  // namespace oscar
