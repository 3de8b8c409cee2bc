#pragma once

#include <span>
#include <vector>

namespace dpdlgmm {

/// Adjusted Rand Index between two labelings of the same items.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

/// Best one-to-one mapping of predicted clusters onto true classes
/// (Hungarian assignment on the contingency table). Unmapped clusters count
/// as errors. Returns the accuracy and fills `mapping[cluster] = class or -1`.
double matched_accuracy(std::span<const int> predicted, std::span<const int> truth,
                        std::vector<int>* mapping = nullptr);

/// Fraction of positions where a and b agree.
double accuracy(std::span<const int> a, std::span<const int> b);

/// Solves the rectangular assignment problem maximizing the total score.
/// Returns assignment[row] = column or -1.
std::vector<int> hungarian_max(const std::vector<std::vector<double>>& score);

}  // namespace dpdlgmm
