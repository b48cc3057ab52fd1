#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "oscar/core/types.hpp"

namespace oscar {

/// Lowercased tokens (with their trailing period) that never end a sentence.
const std::set<std::string>& default_abbreviations();

bool is_sentence_delimiter(char c);

/// Splits on runs of '.', '!' and '?' followed by whitespace or end of input.
/// A single '.' closing a token in `abbreviations` is not a boundary, nor is a
/// '.' between two digits. Trailing text without a delimiter becomes the last
/// element. Output texts are trimmed; logprob is 0 and token_count is the
/// whitespace token count.
std::vector<Sentence> split_sentences(std::string_view text,
                                      const std::set<std::string>& abbreviations =
                                          default_abbreviations());

std::vector<std::string> split_sentence_texts(
    std::string_view text,
    const std::set<std::string>& abbreviations = default_abbreviations());

/// Inverse of split_sentences up to whitespace between sentences.
std::string join_sentences(const std::vector<Sentence>& sentences);

/// Collapses every whitespace run to one space and trims both ends.
std::string normalize_whitespace(std::string_view text);

std::string trim(std::string_view text);
std::string to_lower(std::string_view text);

int whitespace_token_count(std::string_view text);

/// Lowercased runs of ASCII letters and digits (apostrophes kept inside words).
std::vector<std::string> word_tokens(std::string_view text);

/// Concatenates prefix and sentence with a single space when both are
/// non-empty.
std::string append_sentence(std::string_view prefix, std::string_view sentence);

}  // namespace oscar
