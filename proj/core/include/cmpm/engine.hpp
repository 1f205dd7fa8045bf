#pragma once

// In-process map / shuffle / reduce.
//
// Contract: the output of run_mapreduce is a pure function of the inputs and
// the two user functions. Keys are reduced in ascending order, values under a
// key arrive in (partition index, emission order), and reduce outputs are
// concatenated in key order. The worker count only changes wall time.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

#include "cmpm/common.hpp"

namespace cmpm {

struct EnginePlan {
  std::size_t workers = 1;
  std::size_t partitions = 16;  // input records are split into this many contiguous chunks

  void validate() const {
    if (workers < 1) throw UsageError("engine: workers must be >= 1");
    if (partitions < 1) throw UsageError("engine: partitions must be >= 1");
  }
};

class JobError : public DataError {
 public:
  using DataError::DataError;
};

template <class K, class V>
class Emitter {
 public:
  void emit(K key, V value) { records_.emplace_back(std::move(key), std::move(value)); }
  void reserve(std::size_t n) { records_.reserve(n); }
  std::vector<std::pair<K, V>>& records() { return records_; }

 private:
  std::vector<std::pair<K, V>> records_;
};

template <class Out>
class OutputSink {
 public:
  void emit(Out value) { out_.push_back(std::move(value)); }
  std::vector<Out>& records() { return out_; }

 private:
  std::vector<Out> out_;
};

namespace detail {

// Runs task(i) for i in [0, count) on up to `workers` threads. Exceptions are
// collected per task and the lowest-index one is rethrown.
inline void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(count);
  const auto run = [&](std::size_t i) {
    try {
      task(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t threads = std::min(workers, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) run(i);
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline std::string describe(std::exception_ptr e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown error";
  }
}

}  // namespace detail

// Splits records into `parts` contiguous chunks of near-equal size (never
// more chunks than records, at least one chunk).
template <class T>
std::vector<std::vector<T>> partition_evenly(std::vector<T> records, std::size_t parts) {
  if (parts < 1) throw UsageError("partition_evenly: parts must be >= 1");
  const std::size_t n = records.size();
  parts = std::max<std::size_t>(1, std::min(parts, n));
  std::vector<std::vector<T>> out(parts);
  std::size_t begin = 0;
  for (std::size_t p = 0; p < parts; ++p) {
    const std::size_t end = begin + n / parts + (p < n % parts ? 1 : 0);
    out[p].reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) out[p].push_back(std::move(records[i]));
    begin = end;
  }
  return out;
}

namespace detail {

// Ascending keys with the half-open value range of each key in `grouped`.
template <class K, class V>
struct Shuffled {
  std::vector<K> keys;
  std::vector<std::size_t> offsets;  // keys.size() + 1 entries
  std::vector<V> grouped;
};

// Dense integer keys: counting sort.
template <class K, class V>
bool shuffle_dense(std::vector<Emitter<K, V>>& mapped, std::size_t total, Shuffled<K, V>& out) {
  if constexpr (std::is_integral_v<K> && std::is_default_constructible_v<V>) {
    if (total == 0) return false;
    K lo = mapped.front().records().empty() ? K{} : mapped.front().records().front().first;
    bool seeded = false;
    K hi = lo;
    for (auto& em : mapped)
      for (auto& rec : em.records()) {
        if (!seeded) {
          lo = hi = rec.first;
          seeded = true;
        }
        lo = std::min(lo, rec.first);
        hi = std::max(hi, rec.first);
      }
    const auto span = static_cast<std::size_t>(hi - lo) + 1;
    if (span > 4 * total + 1024) return false;
    std::vector<std::size_t> cursor(span, 0);
    for (auto& em : mapped)
      for (auto& rec : em.records()) ++cursor[static_cast<std::size_t>(rec.first - lo)];
    std::size_t offset = 0;
    for (std::size_t b = 0; b < span; ++b) {
      if (cursor[b] == 0) continue;
      out.keys.push_back(static_cast<K>(lo + static_cast<K>(b)));
      out.offsets.push_back(offset);
      const std::size_t c = cursor[b];
      cursor[b] = offset;
      offset += c;
    }
    out.offsets.push_back(offset);
    out.grouped.resize(total);
    for (auto& em : mapped)
      for (auto& rec : em.records()) out.grouped[cursor[static_cast<std::size_t>(rec.first - lo)]++] = std::move(rec.second);
    return true;
  } else {
    (void)mapped;
    (void)total;
    (void)out;
    return false;
  }
}

// Any totally ordered key: std::map slots, then a stable scatter.
template <class K, class V>
void shuffle_ordered(std::vector<Emitter<K, V>>& mapped, std::size_t total, Shuffled<K, V>& out) {
  using Slots = std::map<K, std::size_t>;
  Slots slots;
  std::vector<typename Slots::iterator> where;
  where.reserve(total);
  for (auto& em : mapped)
    for (auto& rec : em.records()) {
      auto [it, inserted] = slots.try_emplace(rec.first, 0);
      ++it->second;
      where.push_back(it);
    }
  std::size_t offset = 0;
  for (auto& [key, count] : slots) {
    out.keys.push_back(key);
    out.offsets.push_back(offset);
    const std::size_t c = count;
    count = offset;  // becomes the write cursor
    offset += c;
  }
  out.offsets.push_back(offset);
  // gather through a permutation so V needs no default constructor
  std::vector<std::size_t> source(total);
  for (std::size_t i = 0; i < total; ++i) source[where[i]->second++] = i;
  std::vector<V*> flat;
  flat.reserve(total);
  for (auto& em : mapped)
    for (auto& rec : em.records()) flat.push_back(&rec.second);
  out.grouped.reserve(total);
  for (std::size_t i = 0; i < total; ++i) out.grouped.push_back(std::move(*flat[source[i]]));
}

template <class K, class V, class Out, class In, class MapFn, class ReduceFn>
std::vector<Out> run_job(const std::vector<std::span<const In>>& partitions, MapFn& map_fn, ReduceFn& reduce_fn,
                         const EnginePlan& plan) {
  plan.validate();

  // map
  std::vector<Emitter<K, V>> mapped(partitions.size());
  parallel_for(partitions.size(), plan.workers, [&](std::size_t p) {
    const auto part = partitions[p];
    mapped[p].reserve(part.size());  // most jobs emit about one record per input
    for (std::size_t r = 0; r < part.size(); ++r) {
      try {
        map_fn(part[r], mapped[p]);
      } catch (...) {
        throw JobError("map failed at partition " + std::to_string(p) + ", record " + std::to_string(r) + ": " +
                       describe(std::current_exception()));
      }
    }
  });

  // shuffle
  std::size_t total = 0;
  for (auto& em : mapped) total += em.records().size();
  Shuffled<K, V> sh;
  if (!shuffle_dense(mapped, total, sh)) {
    sh = {};
    shuffle_ordered(mapped, total, sh);
  }
  mapped.clear();

  // reduce
  std::vector<OutputSink<Out>> reduced(sh.keys.size());
  parallel_for(sh.keys.size(), plan.workers, [&](std::size_t g) {
    std::span<V> values(sh.grouped.data() + sh.offsets[g], sh.offsets[g + 1] - sh.offsets[g]);
    try {
      reduce_fn(sh.keys[g], values, reduced[g]);
    } catch (...) {
      throw JobError("reduce failed at key group " + std::to_string(g) + ": " + describe(std::current_exception()));
    }
  });

  std::vector<Out> out;
  std::size_t out_total = 0;
  for (auto& r : reduced) out_total += r.records().size();
  out.reserve(out_total);
  for (auto& r : reduced)
    for (auto& v : r.records()) out.push_back(std::move(v));
  return out;
}

}  // namespace detail

// Explicit partitions. map_fn(const In&, Emitter<K,V>&);
// reduce_fn(const K&, std::span<V>, OutputSink<Out>&).
template <class K, class V, class Out, class In, class MapFn, class ReduceFn>
std::vector<Out> run_mapreduce(const std::vector<std::vector<In>>& partitions, MapFn map_fn, ReduceFn reduce_fn,
                               const EnginePlan& plan) {
  std::vector<std::span<const In>> views(partitions.begin(), partitions.end());
  return detail::run_job<K, V, Out, In>(views, map_fn, reduce_fn, plan);
}

// One record list split into plan.partitions contiguous ranges.
template <class K, class V, class Out, class In, class MapFn, class ReduceFn>
std::vector<Out> run_mapreduce(std::span<const In> records, MapFn map_fn, ReduceFn reduce_fn, const EnginePlan& plan) {
  plan.validate();
  const std::size_t n = records.size();
  const std::size_t parts = std::max<std::size_t>(1, std::min(plan.partitions, n));
  std::vector<std::span<const In>> views;
  std::size_t begin = 0;
  for (std::size_t p = 0; p < parts; ++p) {
    const std::size_t len = n / parts + (p < n % parts ? 1 : 0);
    views.push_back(records.subspan(begin, len));
    begin += len;
  }
  return detail::run_job<K, V, Out, In>(views, map_fn, reduce_fn, plan);
}

}  // namespace cmpm
