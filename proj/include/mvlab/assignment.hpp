#pragma once

#include <vector>

#include "mvlab/types.hpp"

namespace mvlab {

// Minimum-cost perfect matching on a square cost matrix (Hungarian method with
// potentials, O(n^3)). Returns col[i], the column assigned to row i.
std::vector<int> solve_assignment(const Mat& cost);

// Sum of cost(i, col[i]) accumulated in row order.
double assignment_cost(const Mat& cost, const std::vector<int>& col);

}  // namespace mvlab
