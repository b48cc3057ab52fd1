#pragma once

#include <functional>
#include <string_view>

namespace oscar::mcts {

/// Cosine similarity of L2-normalized bag-of-words count vectors over
/// lowercased word tokens. Two empty inputs count as identical.
double bow_cosine(std::string_view a, std::string_view b);

/// Pluggable similarity, e.g. a backend embedding model.
using SimilarityFn = std::function<double(std::string_view, std::string_view)>;

}  // namespace oscar::mcts
