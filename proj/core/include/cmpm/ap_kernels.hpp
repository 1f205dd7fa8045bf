#pragma once

// Arithmetic shared by the serial AP loop and the map/reduce jobs. Both paths
// call these helpers with operands in the same order, which is what makes
// their outputs bit-identical.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>

namespace cmpm {

enum class DampingConvention {
  new_term,  // m' = (1 - lambda) * m + lambda * fresh; oscillates at lambda = 0.8 on clustered data
  old_term,  // m' = lambda * m + (1 - lambda) * fresh   (Frey & Dueck, default)
};

namespace kernels {

inline double damp(double old_value, double fresh, double lambda, DampingConvention convention) {
  if (convention == DampingConvention::new_term) return (1.0 - lambda) * old_value + lambda * fresh;
  return lambda * old_value + (1.0 - lambda) * fresh;
}

// One attribute's contribution to a squared distance. Distances are summed
// from 0.0 in ascending attribute order by both the serial and the map/reduce
// builders, so their results agree bit for bit.
inline double squared_term(double x, double y) {
  const double d = x - y;
  return d * d;
}

// Negated squared distance; +0.0 for identical points.
inline double similarity_from_distance(double squared) { return squared > 0.0 ? -squared : 0.0; }

// One responsibility row. s_row, a_row, r_row are row i of S, A, R.
inline void responsibility_row(std::span<const double> s_row, std::span<const double> a_row, std::span<double> r_row,
                               double lambda, DampingConvention convention) {
  const std::size_t n = s_row.size();
  double best = -std::numeric_limits<double>::infinity();
  double second = -std::numeric_limits<double>::infinity();
  std::size_t best_at = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double v = a_row[k] + s_row[k];
    if (v > best) {
      second = best;
      best = v;
      best_at = k;
    } else if (v > second) {
      second = v;
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    // n == 1: the competing set is empty and the fresh value is s(i,k) alone.
    const double fresh = n == 1 ? s_row[k] : s_row[k] - (k == best_at ? second : best);
    r_row[k] = damp(r_row[k], fresh, lambda, convention);
  }
}

// Sum of max(0, r(i',k)) over i' != k, accumulated in ascending i'.
inline double positive_column_sum(std::span<const double> r_col, std::size_t k) {
  double sum = 0.0;
  for (std::size_t i = 0; i < r_col.size(); ++i) {
    if (i != k) sum += std::max(0.0, r_col[i]);
  }
  return sum;
}

// New availability for cell (i,k) given column k's positive sum.
inline double availability_value(std::size_t i, std::size_t k, double old_a, double r_ik, double r_kk,
                                 double column_sum, double lambda, DampingConvention convention) {
  if (i == k) return damp(old_a, column_sum, lambda, convention);
  const double fresh = std::min(0.0, r_kk + (column_sum - std::max(0.0, r_ik)));
  return damp(old_a, fresh, lambda, convention);
}

}  // namespace kernels
}  // namespace cmpm
