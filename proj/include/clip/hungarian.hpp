#pragma once

#include "clip/matrix.hpp"

#include <vector>

namespace clip {

/// Minimum-cost perfect assignment on a square cost matrix (Kuhn-Munkres,
/// O(n^3) potentials form). Returns assignment[row] = column.
std::vector<int> hungarian_min_cost(const Matrix& cost);

/// Maximum-weight perfect assignment. Returns assignment[row] = column.
std::vector<int> hungarian_max_weight(const Matrix& weight);

}  // namespace clip
