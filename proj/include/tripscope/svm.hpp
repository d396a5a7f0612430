// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tripscope/dataset.hpp"

namespace tripscope::learn {

enum class Kernel { linear, rbf };

struct SvmParams {
  Kernel kernel = Kernel::rbf;
  double cost = 1.0;
  double gamma = 1.0 / 12;
  double tolerance = 1e-3;
  long max_iterations = 1'000'000;
};

/// Output of the dual solver for
///   min 1/2 a'Qa - e'a  s.t.  0 <= a_i <= C,  y'a = 0,  Q_ij = y_i y_j K_ij.
struct SmoResult {
  std::vector<double> alpha;
  double rho = 0;
  long iterations = 0;
  /// Final maximal KKT violation m(a) - M(a).
  double violation = 0;
  /// Dual objective -(1/2 a'Qa - e'a) after each iteration, when requested.
  std::vector<double> objective_trace;
};

/// Sequential minimal optimization with second-order working-set selection.
/// `kernel` is the dense n x n kernel matrix (row-major); `y` holds +1/-1.
/// Throws TrainingError naming the cap when it is hit before convergence.
SmoResult solve_smo(std::span<const double> kernel, std::span<const int> y,
                    double cost, double tolerance, long max_iterations,
                    bool record_objective = false);

/// Soft-margin SVM on internally standardized features.
class SvmModel {
 public:
  SvmModel() = default;
  SvmModel(const Dataset& data, const SvmParams& params);

  /// Positive values favor MCI_AD.
  double decision_value(std::span<const double> x) const;
  CognitiveLabel predict(std::span<const double> x) const {
    return decision_value(x) >= 0 ? CognitiveLabel::mci_ad : CognitiveLabel::cu;
  }

  const SvmParams& params() const { return params_; }
  std::size_t support_vector_count() const { return coef_.size(); }
  long iterations() const { return iterations_; }
  double bias() const { return -rho_; }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& scale() const { return scale_; }
  const std::vector<std::vector<double>>& support_vectors() const { return support_; }
  const std::vector<double>& coefficients() const { return coef_; }

 private:
  double kernel(std::span<const double> a, std::span<const double> b) const;

  SvmParams params_;
  std::vector<double> mean_;
  std::vector<double> scale_;
  std::vector<std::vector<double>> support_;
  std::vector<double> coef_;
  double rho_ = 0;
  long iterations_ = 0;
};

}  // namespace tripscope::learn
