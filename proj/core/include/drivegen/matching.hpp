#pragma once

#include <vector>

namespace drivegen::model {

/// Result of a minimum-cost assignment. row_to_col[r] is the matched column
/// for row r, or -1 when the row is left unmatched (only possible with more
/// rows than columns). total_cost sums the matched entries.
struct Assignment {
    std::vector<int> row_to_col;
    double total_cost = 0.0;
};

/// Jonker-Volgenant assignment over a row-major rows x cols cost matrix.
/// Every column is matched when rows >= cols and every row when rows <= cols
/// (maximum cardinality); among those matchings the total cost is minimal.
/// The column scan order is fixed, so ties resolve the same way on every
/// platform. Throws InputError on non-finite costs.
Assignment hungarian_match(const std::vector<double>& cost, int rows, int cols);

}  // namespace drivegen::model
