#include "drivegen/matching.hpp"

#include <cmath>
#include <limits>

#include "drivegen/check.hpp"

namespace drivegen::model {

Assignment hungarian_match(const std::vector<double>& cost, int rows, int cols) {
    check_arg(rows >= 0 && cols >= 0, "assignment dimensions must be non-negative");
    check_arg(cost.size() == static_cast<size_t>(rows) * cols,
              "cost matrix size does not match its dimensions");
    for (double c : cost) {
        check_arg(std::isfinite(c), "assignment costs must be finite");
    }

    Assignment out;
    out.row_to_col.assign(rows, -1);
    if (rows == 0 || cols == 0) return out;

    // Pad to at least as many columns as rows with zero-cost dummies; a
    // square program matches every column, and the dummy contribution is the
    // same constant for every matching, so the real part stays minimal.
    const int m = std::max(cols, rows);
    auto at = [&](int r, int c) -> double {
        return c < cols ? cost[static_cast<size_t>(r) * cols + c] : 0.0;
    };

    const double inf = std::numeric_limits<double>::infinity();
    // Potentials u (rows) and v (columns), 1-indexed; p[j] is the row
    // currently assigned to column j, 0 when free.
    std::vector<double> u(rows + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    for (int i = 1; i <= rows; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    for (int j = 1; j <= m; ++j) {
        if (p[j] == 0 || j > cols) continue;
        out.row_to_col[p[j] - 1] = j - 1;
        out.total_cost += at(p[j] - 1, j - 1);
    }
    return out;
}

}  // namespace drivegen::model
