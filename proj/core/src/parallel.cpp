#include "cmpm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cmpm {
namespace {

struct AttributeColumn {
  std::size_t index = 0;
  std::vector<double> values;
};

// Transposed view of the data: one record per attribute.
std::vector<AttributeColumn> transpose(const Dataset& data) {
  std::vector<AttributeColumn> cols(data.dims());
  for (std::size_t j = 0; j < data.dims(); ++j) {
    cols[j].index = j;
    cols[j].values.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) cols[j].values[i] = data.values(i, j);
  }
  return cols;
}

struct DistanceRow {
  std::uint32_t seed = 0;
  std::vector<double> sums;
};

struct DiagonalEntry {
  std::uint32_t k = 0;
  double criterion = 0.0;
};

struct Candidate {
  std::uint32_t y = 0;
  double s = 0.0;
};

struct Assignment {
  std::uint32_t x = 0;
  std::uint32_t exemplar = 0;
  double s = 0.0;
};

}  // namespace

PointGrid make_point_grid(const SimilarityMatrix& s) { return make_point_grid(s, MessageState::zeros(s.size())); }

PointGrid make_point_grid(const SimilarityMatrix& s, const MessageState& state) {
  const std::size_t n = s.size();
  PointGrid cells;
  cells.reserve(n * n);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y)
      cells.push_back({static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y), s.s(x, y), state.r(x, y),
                       state.a(x, y)});
  return cells;
}

std::size_t check_grid(const PointGrid& cells) {
  const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(cells.size()))));
  if (n == 0 || n * n != cells.size()) throw UsageError("incomplete grid: " + std::to_string(cells.size()) + " cells");
  std::vector<char> seen(cells.size(), 0);
  for (const auto& c : cells) {
    if (c.x >= n || c.y >= n) throw UsageError("incomplete grid: cell outside " + std::to_string(n) + "x" + std::to_string(n));
    auto& flag = seen[static_cast<std::size_t>(c.x) * n + c.y];
    if (flag) throw UsageError("incomplete grid: duplicate cell (" + std::to_string(c.x) + "," + std::to_string(c.y) + ")");
    flag = 1;
  }
  return n;
}

MessageState grid_state(const PointGrid& cells) {
  const auto n = check_grid(cells);
  auto state = MessageState::zeros(n);
  for (const auto& c : cells) {
    state.r(c.x, c.y) = c.r;
    state.a(c.x, c.y) = c.a;
  }
  return state;
}

SimilarityMatrix grid_similarity(const PointGrid& cells, double preference) {
  const auto n = check_grid(cells);
  SimilarityMatrix s{Matrix(n, n), preference};
  for (const auto& c : cells) s.s(c.x, c.y) = c.s;
  return s;
}

HorizontalModel parallel_oner(const Dataset& data, std::size_t k, std::size_t bins, const EnginePlan& plan) {
  const auto m = data.dims();
  if (k < 1 || k > m) throw UsageError("select_attributes: k=" + std::to_string(k) + " outside [1, " + std::to_string(m) + "]");
  const auto columns = transpose(data);
  auto out = run_mapreduce<int, AttributeRule, HorizontalModel>(
      std::span<const AttributeColumn>(columns),
      [&](const AttributeColumn& col, Emitter<int, AttributeRule>& em) {
        em.emit(0, rule_for_column(col.values, data.labels, data.schema.attributes.at(col.index), col.index, bins));
      },
      [&](const int&, std::span<AttributeRule> rules, OutputSink<HorizontalModel>& sink) {
        std::vector<AttributeRule> all(std::make_move_iterator(rules.begin()), std::make_move_iterator(rules.end()));
        sink.emit(rank_rules(std::move(all), k));
      },
      plan);
  return std::move(out.front());
}

SimilarityMatrix parallel_similarity(const Dataset& data, double preference, const EnginePlan& plan) {
  const std::size_t n = data.size();
  if (n == 0) throw UsageError("build_similarity: empty dataset");
  const auto columns = transpose(data);

  // Map: within one attribute row, each value (the key seed) is paired with
  // every later value; earlier slots are emitted as 0. Reduce: sums the rows
  // sharing a seed, attribute by attribute.
  auto rows = run_mapreduce<std::uint32_t, std::vector<double>, DistanceRow>(
      std::span<const AttributeColumn>(columns),
      [n](const AttributeColumn& col, Emitter<std::uint32_t, std::vector<double>>& em) {
        const auto& v = col.values;
        for (std::size_t seed = 0; seed < n; ++seed) {
          std::vector<double> terms(n, 0.0);
          for (std::size_t j = seed + 1; j < n; ++j) terms[j] = kernels::squared_term(v[seed], v[j]);
          em.emit(static_cast<std::uint32_t>(seed), std::move(terms));
        }
      },
      [n](const std::uint32_t& seed, std::span<std::vector<double>> terms, OutputSink<DistanceRow>& sink) {
        DistanceRow row{seed, std::vector<double>(n, 0.0)};
        for (const auto& t : terms)
          for (std::size_t j = 0; j < n; ++j) row.sums[j] += t[j];
        sink.emit(std::move(row));
      },
      plan);

  SimilarityMatrix out{Matrix(n, n), preference};
  for (std::size_t i = 0; i < n; ++i) {
    out.s(i, i) = preference;
    if (data.dims() == 0) continue;
    const auto& di = rows[i].sums;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = kernels::similarity_from_distance(di[j]);
      out.s(i, j) = v;
      out.s(j, i) = v;
    }
  }
  return out;
}

PointGrid parallel_responsibility(const PointGrid& cells, double lambda, const EnginePlan& plan,
                                  DampingConvention convention) {
  const auto n = check_grid(cells);
    return run_mapreduce<std::uint32_t, PointCell, PointCell>(
      std::span<const PointCell>(cells), [](const PointCell& c, Emitter<std::uint32_t, PointCell>& em) { em.emit(c.x, c); },
      [n, lambda, convention](const std::uint32_t& x, std::span<PointCell> row, OutputSink<PointCell>& sink) {
        std::vector<double> s(n), a(n), r(n);
        for (const auto& c : row) {
          s[c.y] = c.s;
          a[c.y] = c.a;
          r[c.y] = c.r;
        }
        kernels::responsibility_row(s, a, r, lambda, convention);
        for (std::uint32_t y = 0; y < n; ++y) sink.emit({x, y, s[y], r[y], a[y]});
      },
      plan);
}

PointGrid parallel_availability(const PointGrid& cells, double lambda, const EnginePlan& plan,
                                DampingConvention convention) {
  const auto n = check_grid(cells);
    return run_mapreduce<std::uint32_t, PointCell, PointCell>(
      std::span<const PointCell>(cells), [](const PointCell& c, Emitter<std::uint32_t, PointCell>& em) { em.emit(c.y, c); },
      [n, lambda, convention](const std::uint32_t& k, std::span<PointCell> column, OutputSink<PointCell>& sink) {
        std::vector<double> s(n), a(n), r(n);
        for (const auto& c : column) {
          s[c.x] = c.s;
          a[c.x] = c.a;
          r[c.x] = c.r;
        }
        const double sum = kernels::positive_column_sum(r, k);
        for (std::uint32_t x = 0; x < n; ++x)
          sink.emit({x, k, s[x], r[x], kernels::availability_value(x, k, a[x], r[x], r[k], sum, lambda, convention)});
      },
      plan);
}

std::vector<std::size_t> parallel_exemplar_candidates(const PointGrid& cells, const EnginePlan& plan) {
  check_grid(cells);
    auto out = run_mapreduce<int, std::uint32_t, std::size_t>(
      std::span<const PointCell>(cells),
      [](const PointCell& c, Emitter<int, std::uint32_t>& em) {
        if (c.x == c.y && c.r + c.a > 0.0) em.emit(0, c.x);
      },
      [](const int&, std::span<std::uint32_t> ks, OutputSink<std::size_t>& sink) {
        std::vector<std::uint32_t> sorted(ks.begin(), ks.end());
        std::sort(sorted.begin(), sorted.end());
        for (auto k : sorted) sink.emit(k);
      },
      plan);
  return out;
}

ExemplarSet parallel_exemplar_select(const PointGrid& cells, const EnginePlan& plan) {
  const auto n = check_grid(cells);
  
  // Map: each diagonal cell carries r(k,k) and a(k,k). Reduce: merge the
  // qualifying k, or the single best k when none qualifies.
  auto exemplars = run_mapreduce<int, DiagonalEntry, std::size_t>(
      std::span<const PointCell>(cells),
      [](const PointCell& c, Emitter<int, DiagonalEntry>& em) {
        if (c.x == c.y) em.emit(0, {c.x, c.r + c.a});
      },
      [n](const int&, std::span<DiagonalEntry> diag, OutputSink<std::size_t>& sink) {
        std::vector<double> criterion(n);
        for (const auto& d : diag) criterion[d.k] = d.criterion;
        bool any = false;
        for (std::size_t k = 0; k < n; ++k)
          if (criterion[k] > 0.0) {
            sink.emit(k);
            any = true;
          }
        if (!any) {
          std::size_t best = 0;
          for (std::size_t k = 1; k < n; ++k)
            if (criterion[k] > criterion[best]) best = k;
          sink.emit(best);
        }
      },
      plan);

  std::vector<char> is_exemplar(n, 0);
  for (auto k : exemplars) is_exemplar[k] = 1;

  auto assigned = run_mapreduce<std::uint32_t, Candidate, Assignment>(
      std::span<const PointCell>(cells),
      [&is_exemplar](const PointCell& c, Emitter<std::uint32_t, Candidate>& em) {
        if (is_exemplar[c.y]) em.emit(c.x, {c.y, c.s});
      },
      [&is_exemplar](const std::uint32_t& x, std::span<Candidate> cands, OutputSink<Assignment>& sink) {
        std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.y < b.y; });
        if (is_exemplar[x]) {
          const auto self = std::find_if(cands.begin(), cands.end(), [x](const Candidate& c) { return c.y == x; });
          sink.emit({x, x, self->s});
          return;
        }
        const Candidate* best = &cands.front();
        for (const auto& c : cands)
          if (c.s > best->s) best = &c;
        sink.emit({x, best->y, best->s});
      },
      plan);

  ExemplarSet out;
  out.exemplars = std::move(exemplars);
  out.assignment.resize(n);
  for (const auto& a : assigned) {
    out.assignment[a.x] = a.exemplar;
    out.fitness += a.s;
  }
  return out;
}

ExemplarSet run_ap_parallel(const Dataset& data, const APConfig& config, const EnginePlan& plan) {
  config.validate();
  plan.validate();
  if (data.size() == 0) throw UsageError("run_ap: empty dataset");
  const auto s = parallel_similarity(data, config.preference, plan);
  const std::size_t n = s.size();
  auto grid = make_point_grid(s);
  for (auto& cell : grid) cell.s = jitter_cell(cell.s, cell.x, cell.y, n, config.tie_noise);
  std::size_t iteration = 0;
  std::size_t stable = 0;
  bool converged = false;
  std::vector<std::size_t> previous;
  while (iteration < config.max_iter) {
    grid = parallel_responsibility(grid, config.damping, plan, config.convention);
    grid = parallel_availability(grid, config.damping, plan, config.convention);
    ++iteration;
    auto current = parallel_exemplar_candidates(grid, plan);
    stable = (iteration > 1 && current == previous) ? stable + 1 : 1;
    previous = std::move(current);
    if (!previous.empty() && stable >= config.conv_window) {
      converged = true;
      break;
    }
  }
  // select against the unjittered similarities
  for (auto& cell : grid) cell.s = s.s(cell.x, cell.y);
  auto out = parallel_exemplar_select(grid, plan);
  out.iterations = iteration;
  out.converged = converged;
  return out;
}

}  // namespace cmpm
