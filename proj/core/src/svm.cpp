// Binary C-SVC trained by sequential minimal optimization with second-order
// working-set selection.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "cmpm/classify.hpp"

namespace cmpm {
namespace {

constexpr double kTau = 1e-12;

class KernelRows {
 public:
  KernelRows(const Matrix& x, double gamma) : x_(x), gamma_(gamma), n_(x.rows()) {
    if (n_ <= kPrecomputeLimit) {
      full_ = Matrix(n_, n_);
      for (std::size_t i = 0; i < n_; ++i) {
        full_(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n_; ++j) full_(i, j) = full_(j, i) = rbf_kernel(x_.row(i), x_.row(j), gamma_);
      }
    } else {
      row_i_.resize(n_);
      row_j_.resize(n_);
    }
  }

  std::span<const double> row(std::size_t i, bool second) {
    if (full_.rows()) return full_.row(i);
    auto& buf = second ? row_j_ : row_i_;
    for (std::size_t t = 0; t < n_; ++t) buf[t] = rbf_kernel(x_.row(i), x_.row(t), gamma_);
    return buf;
  }

 private:
  static constexpr std::size_t kPrecomputeLimit = 4000;
  const Matrix& x_;
  double gamma_;
  std::size_t n_;
  Matrix full_;
  std::vector<double> row_i_, row_j_;
};

}  // namespace

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
  double d = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double t = x[j] - y[j];
    d += t * t;
  }
  return std::exp(-gamma * d);
}

SvcSolution svc_solve(const LabeledVectors& data, double c, double gamma, SvcOptions options) {
  if (!(c > 0.0)) throw UsageError("svc: C must be > 0");
  if (!(gamma > 0.0)) throw UsageError("svc: gamma must be > 0");
  const std::size_t n = data.size();
  const auto attacks = static_cast<std::size_t>(std::count(data.labels.begin(), data.labels.end(), Label::attack));
  if (attacks == 0 || attacks == n) throw DataError("svc: training data must contain both classes");

  std::vector<double> y(n), alpha(n, 0.0), grad(n, -1.0);
  for (std::size_t i = 0; i < n; ++i) y[i] = data.labels[i] == Label::attack ? 1.0 : -1.0;
  KernelRows kernel(data.vectors, gamma);
  const std::size_t max_iter = options.max_iter ? options.max_iter : std::max<std::size_t>(10'000'000, 100 * n);

  const auto in_up = [&](std::size_t t) { return (y[t] > 0 && alpha[t] < c) || (y[t] < 0 && alpha[t] > 0); };
  const auto in_low = [&](std::size_t t) { return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < c); };

  std::size_t iter = 0;
  for (; iter < max_iter; ++iter) {
    // i: maximal violator in I_up
    double g_max = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t)
      if (in_up(t) && -y[t] * grad[t] > g_max) {
        g_max = -y[t] * grad[t];
        i = t;
      }
    if (i == n) break;
    const auto k_i = kernel.row(i, false);

    // j: best second-order gain in I_low
    double g_min = std::numeric_limits<double>::infinity();
    double best_gain = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      const double v = -y[t] * grad[t];
      g_min = std::min(g_min, v);
      const double b = g_max - v;
      if (b <= 0) continue;
      double a = 2.0 - 2.0 * k_i[t];  // K_ii + K_tt - 2 K_it with K(x,x) = 1
      if (a <= 0) a = kTau;
      const double gain = -(b * b) / a;
      if (gain < best_gain) {
        best_gain = gain;
        j = t;
      }
    }
    if (j == n || g_max - g_min < options.tolerance) break;
    const auto k_j = kernel.row(j, true);

    const double old_ai = alpha[i];
    const double old_aj = alpha[j];
    double quad = 2.0 - 2.0 * k_i[j];
    if (quad <= 0) quad = kTau;
    if (y[i] != y[j]) {
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0 && alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = diff;
      } else if (diff <= 0 && alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0 && alpha[i] > c) {
        alpha[i] = c;
        alpha[j] = c - diff;
      } else if (diff <= 0 && alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c && alpha[i] > c) {
        alpha[i] = c;
        alpha[j] = sum - c;
      } else if (sum <= c && alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > c && alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = sum - c;
      } else if (sum <= c && alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }
    // grad_t += Q_ti d_i + Q_tj d_j, Q_ts = y_t y_s K_ts
    const double di = alpha[i] - old_ai;
    const double dj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) grad[t] += y[t] * (y[i] * k_i[t] * di + y[j] * k_j[t] * dj);
  }

  // rho from free vectors, else midpoint of the feasible interval
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= c) {
      if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0) {
      if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      free_sum += yg;
      ++free_count;
    }
  }
  const double rho = free_count ? free_sum / static_cast<double>(free_count) : 0.5 * (ub + lb);

  SvcSolution sol;
  sol.alpha = alpha;
  sol.y = y;
  auto& m = sol.model;
  m.gamma = gamma;
  m.c_param = c;
  m.bias = -rho;
  m.iterations = iter;
  std::size_t sv = 0;
  for (double a : alpha) sv += a > 0.0;
  m.support_vectors = Matrix(sv, data.vectors.cols());
  std::size_t row = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (!(alpha[t] > 0.0)) continue;
    auto src = data.vectors.row(t);
    std::copy(src.begin(), src.end(), m.support_vectors.row(row++).begin());
    m.coefficients.push_back(alpha[t] * y[t]);
  }
  return sol;
}

SvmModel svc_train(const LabeledVectors& data, double c, double gamma, SvcOptions options) {
  return svc_solve(data, c, gamma, options).model;
}

double svc_decision(const SvmModel& model, std::span<const double> x) {
  if (model.size() && x.size() != model.support_vectors.cols())
    throw DataError("svc: instance has " + std::to_string(x.size()) + " attributes, model expects " +
                    std::to_string(model.support_vectors.cols()));
  double f = model.bias;
  for (std::size_t i = 0; i < model.size(); ++i) f += model.coefficients[i] * rbf_kernel(model.support_vectors.row(i), x, model.gamma);
  return f;
}

Label svc_predict(const SvmModel& model, std::span<const double> x) {
  return svc_decision(model, x) > 0.0 ? Label::attack : Label::normal;
}

std::vector<double> default_c_grid() {
  std::vector<double> g;
  for (int e = -5; e <= 15; e += 2) g.push_back(std::ldexp(1.0, e));
  return g;
}

std::vector<double> default_gamma_grid() {
  std::vector<double> g;
  for (int e = -15; e <= 3; e += 2) g.push_back(std::ldexp(1.0, e));
  return g;
}

std::vector<std::size_t> stratified_folds(std::span<const Label> labels, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw UsageError("grid_search: folds must be >= 2");
  if (labels.size() < folds) throw UsageError("grid_search: fewer instances than folds");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> fold(labels.size());
  std::size_t next = 0;
  for (Label cls : {Label::normal, Label::attack}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) idx.push_back(i);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (auto i : idx) fold[i] = next++ % folds;
  }
  return fold;
}

GridResult grid_search(const LabeledVectors& data, std::vector<double> c_grid, std::vector<double> gamma_grid,
                       std::size_t folds, std::uint64_t seed) {
  if (c_grid.empty() || gamma_grid.empty()) throw UsageError("grid_search: empty grid");
  const auto fold = stratified_folds(data.labels, folds, seed);
  std::sort(c_grid.begin(), c_grid.end());
  std::sort(gamma_grid.begin(), gamma_grid.end());

  std::vector<LabeledVectors> train(folds), test(folds);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < data.size(); ++i) (fold[i] == f ? te : tr).push_back(i);
    const auto gather = [&](const std::vector<std::size_t>& idx) {
      LabeledVectors out{Matrix(idx.size(), data.vectors.cols()), {}};
      for (std::size_t r = 0; r < idx.size(); ++r) {
        auto src = data.vectors.row(idx[r]);
        std::copy(src.begin(), src.end(), out.vectors.row(r).begin());
        out.labels.push_back(data.labels[idx[r]]);
      }
      return out;
    };
    train[f] = gather(tr);
    test[f] = gather(te);
  }

  GridResult best{c_grid.front(), gamma_grid.front(), -1.0};
  for (double c : c_grid) {
    for (double gamma : gamma_grid) {
      std::size_t correct = 0;
      for (std::size_t f = 0; f < folds; ++f) {
        const auto& tr = train[f];
        const auto attacks = std::count(tr.labels.begin(), tr.labels.end(), Label::attack);
        if (attacks == 0 || static_cast<std::size_t>(attacks) == tr.size()) {
          // single-class training fold: constant prediction
          for (auto l : test[f].labels) correct += l == tr.labels.front();
          continue;
        }
        const auto model = svc_train(tr, c, gamma);
        for (std::size_t i = 0; i < test[f].size(); ++i)
          correct += svc_predict(model, test[f].vectors.row(i)) == test[f].labels[i];
      }
      const double acc = static_cast<double>(correct) / static_cast<double>(data.size());
      if (acc > best.cv_accuracy) best = {c, gamma, acc};
    }
  }
  return best;
}

}  // namespace cmpm
