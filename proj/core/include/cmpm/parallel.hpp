#pragma once

// The five compression jobs expressed on the map/reduce engine. Each one has
// a serial counterpart in oner.hpp / ap.hpp and must reproduce it exactly.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cmpm/ap.hpp"
#include "cmpm/dataset.hpp"
#include "cmpm/engine.hpp"
#include "cmpm/oner.hpp"

namespace cmpm {

// One cell (x, y) of the n x n message grid.
struct PointCell {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  double s = 0.0;
  double r = 0.0;
  double a = 0.0;

  bool operator==(const PointCell&) const = default;
};

using PointGrid = std::vector<PointCell>;

// Row-major grid with r = a = 0.
PointGrid make_point_grid(const SimilarityMatrix& s);
PointGrid make_point_grid(const SimilarityMatrix& s, const MessageState& state);

// Throws UsageError unless the grid holds every (x, y) of an n x n grid
// exactly once; returns n.
std::size_t check_grid(const PointGrid& cells);

// Unpacks a complete grid, in any order, into matrices.
MessageState grid_state(const PointGrid& cells);
SimilarityMatrix grid_similarity(const PointGrid& cells, double preference);

HorizontalModel parallel_oner(const Dataset& data, std::size_t k, std::size_t bins, const EnginePlan& plan);

SimilarityMatrix parallel_similarity(const Dataset& data, double preference, const EnginePlan& plan);

// Row-keyed job; output is row-major.
PointGrid parallel_responsibility(const PointGrid& cells, double lambda, const EnginePlan& plan,
                                  DampingConvention convention = DampingConvention::old_term);
// Column-keyed job; output is column-major.
PointGrid parallel_availability(const PointGrid& cells, double lambda, const EnginePlan& plan,
                                DampingConvention convention = DampingConvention::old_term);

// Diagonal cells with r + a > 0, ascending.
std::vector<std::size_t> parallel_exemplar_candidates(const PointGrid& cells, const EnginePlan& plan);

ExemplarSet parallel_exemplar_select(const PointGrid& cells, const EnginePlan& plan);

ExemplarSet run_ap_parallel(const Dataset& data, const APConfig& config, const EnginePlan& plan);

}  // namespace cmpm
