// SPDX-License-Identifier: Apache-2.0

#include "tripscope/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tripscope::learn {
namespace {

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

SmoResult solve_smo(std::span<const double> kernel, std::span<const int> y, double cost,
                    double tolerance, long max_iterations, bool record_objective) {
  const std::size_t n = y.size();
  if (kernel.size() != n * n) throw UsageError("smo: kernel matrix has wrong size");
  if (!(cost > 0)) throw TrainingError("smo: cost must be positive");
  std::vector<double> yd(n), q(n * n), qd(n);
  for (std::size_t i = 0; i < n; ++i) yd[i] = y[i];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) q[i * n + j] = yd[i] * yd[j] * kernel[i * n + j];
    qd[i] = kernel[i * n + i];
  }
  auto Q = [&](std::size_t i) { return q.data() + i * n; };

  SmoResult out;
  std::vector<double>& alpha = out.alpha;
  alpha.assign(n, 0.0);
  std::vector<double> grad(n, -1.0);
  // Gradient contribution of variables at the upper bound, kept for all rows
  // so shrunk entries can be restored.
  std::vector<double> grad_bar(n, 0.0);
  auto upper = [&](std::size_t i) { return alpha[i] >= cost; };
  auto lower = [&](std::size_t i) { return alpha[i] <= 0; };
  auto in_up = [&](std::size_t t) { return yd[t] > 0 ? !upper(t) : !lower(t); };
  auto in_low = [&](std::size_t t) { return yd[t] > 0 ? !lower(t) : !upper(t); };

  std::vector<std::size_t> active(n);
  for (std::size_t i = 0; i < n; ++i) active[i] = i;
  bool unshrunk = false;

  auto reconstruct = [&] {
    if (active.size() == n) return;
    std::vector<char> is_active(n, 0);
    for (auto a : active) is_active[a] = 1;
    for (std::size_t j = 0; j < n; ++j) {
      if (!is_active[j]) grad[j] = grad_bar[j] - 1.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (upper(i) || lower(i)) continue;
      const double* qi = Q(i);
      for (std::size_t j = 0; j < n; ++j) {
        if (!is_active[j]) grad[j] += alpha[i] * qi[j];
      }
    }
    active.resize(n);
    for (std::size_t i = 0; i < n; ++i) active[i] = i;
  };

  auto shrink = [&] {
    double gmax1 = -kInf, gmax2 = -kInf;
    for (auto t : active) {
      if (in_up(t)) gmax1 = std::max(gmax1, -yd[t] * grad[t]);
      if (in_low(t)) gmax2 = std::max(gmax2, yd[t] * grad[t]);
    }
    if (!unshrunk && gmax1 + gmax2 <= tolerance * 10) {
      unshrunk = true;
      reconstruct();
    }
    std::erase_if(active, [&](std::size_t t) {
      const double g = grad[t];
      if (upper(t)) return yd[t] > 0 ? -g > gmax1 : -g > gmax2;
      if (lower(t)) return yd[t] > 0 ? g > gmax2 : g > gmax1;
      return false;
    });
  };

  auto objective = [&] {
    double f = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (alpha[i] == 0) continue;
      const double* qi = Q(i);
      double row = 0;
      for (std::size_t j = 0; j < n; ++j) row += qi[j] * alpha[j];
      f += alpha[i] * (0.5 * row - 1.0);
    }
    return f;
  };

  long iter = 0;
  long counter = static_cast<long>(std::min<std::size_t>(n, 1000)) + 1;
  for (;; ++iter) {
    if (--counter == 0) {
      counter = static_cast<long>(std::min<std::size_t>(n, 1000));
      shrink();
    }
    // Working-set selection using second-order information.
    double gmax = -kInf;
    std::ptrdiff_t gmax_idx = -1;
    for (auto t : active) {
      if (in_up(t) && -yd[t] * grad[t] >= gmax) {
        gmax = -yd[t] * grad[t];
        gmax_idx = static_cast<std::ptrdiff_t>(t);
      }
    }
    double gmax2 = -kInf;
    std::ptrdiff_t gmin_idx = -1;
    double obj_min = kInf;
    if (gmax_idx >= 0) {
      const auto i = static_cast<std::size_t>(gmax_idx);
      const double* qi = Q(i);
      for (auto j : active) {
        if (!in_low(j)) continue;
        const double yg = yd[j] * grad[j];
        gmax2 = std::max(gmax2, yg);
        const double grad_diff = gmax + yg;
        if (grad_diff > 0) {
          double quad = qd[i] + qd[j] - 2.0 * yd[i] * yd[j] * qi[j];
          if (quad <= 0) quad = kTau;
          const double obj = -(grad_diff * grad_diff) / quad;
          if (obj <= obj_min) {
            gmin_idx = static_cast<std::ptrdiff_t>(j);
            obj_min = obj;
          }
        }
      }
    }
    const bool converged = gmax_idx < 0 || gmin_idx < 0 || gmax + gmax2 < tolerance;
    if (converged) {
      if (active.size() < n) {
        reconstruct();
        counter = 2;
        --iter;
        continue;
      }
      out.violation = gmax + gmax2;
      break;
    }
    out.violation = gmax + gmax2;
    if (iter >= max_iterations) {
      throw TrainingError("smo: no convergence within the iteration cap of " +
                          std::to_string(max_iterations));
    }

    const auto i = static_cast<std::size_t>(gmax_idx);
    const auto j = static_cast<std::size_t>(gmin_idx);
    const double* qi = Q(i);
    const double* qj = Q(j);
    const double old_i = alpha[i], old_j = alpha[j];
    const bool was_upper_i = upper(i), was_upper_j = upper(j);
    if (y[i] != y[j]) {
      double quad = qd[i] + qd[j] + 2.0 * qi[j];
      if (quad <= 0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > cost) {
          alpha[i] = cost;
          alpha[j] = cost - diff;
        }
      } else if (alpha[j] > cost) {
        alpha[j] = cost;
        alpha[i] = cost + diff;
      }
    } else {
      double quad = qd[i] + qd[j] - 2.0 * qi[j];
      if (quad <= 0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > cost) {
        if (alpha[i] > cost) {
          alpha[i] = cost;
          alpha[j] = sum - cost;
        }
      } else if (alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > cost) {
        if (alpha[j] > cost) {
          alpha[j] = cost;
          alpha[i] = sum - cost;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }
    const double d_i = alpha[i] - old_i;
    const double d_j = alpha[j] - old_j;
    for (auto k : active) grad[k] += qi[k] * d_i + qj[k] * d_j;
    auto track_bound = [&](std::size_t v, bool was_upper, const double* qv) {
      if (was_upper == upper(v)) return;
      const double s = was_upper ? -cost : cost;
      for (std::size_t k = 0; k < n; ++k) grad_bar[k] += s * qv[k];
    };
    track_bound(i, was_upper_i, qi);
    track_bound(j, was_upper_j, qj);
    if (record_objective) out.objective_trace.push_back(-objective());
  }
  out.iterations = iter;

  // Offset from free vectors, or the midpoint of the feasible interval.
  double ub = kInf, lb = -kInf, sum_free = 0;
  int n_free = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double yg = yd[i] * grad[i];
    if (upper(i)) {
      if (y[i] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(i)) {
      if (y[i] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  out.rho = n_free > 0 ? sum_free / n_free : (ub + lb) / 2;
  return out;
}

SvmModel::SvmModel(const Dataset& data, const SvmParams& params) : params_(params) {
  if (!data.has_both_classes()) throw TrainingError("svm: training data has one class");
  const std::size_t n = data.size();
  const std::size_t p = data.n_features();
  mean_.assign(p, 0.0);
  scale_.assign(p, 1.0);
  for (std::size_t f = 0; f < p; ++f) {
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) sum += data.at(i, f);
    mean_[f] = sum / static_cast<double>(n);
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) ss += (data.at(i, f) - mean_[f]) * (data.at(i, f) - mean_[f]);
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    scale_[f] = sd > 0 ? sd : 1.0;
  }
  std::vector<std::vector<double>> z(n, std::vector<double>(p));
  bool all_same = true;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < p; ++f) {
      z[i][f] = (data.at(i, f) - mean_[f]) / scale_[f];
      if (z[i][f] != z[0][f]) all_same = false;
    }
  }
  if (all_same) {
    throw TrainingError("svm: degenerate training set, every feature row is identical");
  }
  std::vector<double> kmat(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      kmat[i * n + j] = kmat[j * n + i] = kernel(z[i], z[j]);
    }
  }
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = data.label(i) == CognitiveLabel::mci_ad ? 1 : -1;

  const SmoResult result =
      solve_smo(kmat, y, params.cost, params.tolerance, params.max_iterations);
  rho_ = result.rho;
  iterations_ = result.iterations;
  for (std::size_t i = 0; i < n; ++i) {
    if (result.alpha[i] > 0) {
      support_.push_back(z[i]);
      coef_.push_back(result.alpha[i] * y[i]);
    }
  }
}

double SvmModel::kernel(std::span<const double> a, std::span<const double> b) const {
  if (params_.kernel == Kernel::linear) {
    double dot = 0;
    for (std::size_t f = 0; f < a.size(); ++f) dot += a[f] * b[f];
    return dot;
  }
  double d2 = 0;
  for (std::size_t f = 0; f < a.size(); ++f) d2 += (a[f] - b[f]) * (a[f] - b[f]);
  return std::exp(-params_.gamma * d2);
}

double SvmModel::decision_value(std::span<const double> x) const {
  if (x.size() != mean_.size()) throw PredictionError("svm: wrong feature count");
  std::vector<double> z(x.size());
  for (std::size_t f = 0; f < x.size(); ++f) z[f] = (x[f] - mean_[f]) / scale_[f];
  double sum = 0;
  for (std::size_t s = 0; s < support_.size(); ++s) sum += coef_[s] * kernel(support_[s], z);
  return sum - rho_;
}

}  // namespace tripscope::learn
