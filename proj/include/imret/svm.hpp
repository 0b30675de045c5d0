#pragma once

#include <cstddef>
#include <span>

#include "imret/feature_store.hpp"

namespace imret {

/// Linear decision function without bias: score(v) = <weights, v>.
/// Ranking by decision value is invariant to a bias shift, so the bias
/// is omitted.
struct SvmModel {
    FeatureVector weights;
};

struct SvmTrainOptions {
    double C = 1.0;
    /// Relative gradient-norm stopping rule:
    /// ||grad f(w)|| <= tolerance * max(1, ||grad f(0)||).
    double tolerance = 1e-4;
    /// Budget of passes over the data (objective, gradient and
    /// Hessian-vector evaluations each count one pass).
    int max_passes = 10000;
};

/// Minimizes f(w) = 1/2 ||w||^2 + C sum_i max(0, 1 - y_i <w, x_i>)^2
/// with y=+1 for pos rows and y=-1 for neg rows, by a trust-region
/// Newton method with conjugate-gradient subproblems. Swapping the two
/// classes negates the returned weights exactly. Throws DataError on an
/// empty class or dimension mismatch, ConvergenceError when the budget
/// runs out before the tolerance is met.
SvmModel train_linear_svm(const FeatureSet& pos, const FeatureSet& neg,
                          const SvmTrainOptions& options = {});

SvmModel train_linear_svm(std::span<const double> pos, std::size_t n_pos,
                          std::span<const double> neg, std::size_t n_neg,
                          std::size_t dim, const SvmTrainOptions& options = {});

double svm_score(const SvmModel& model, std::span<const double> v);

/// f(w) on the given data; exposed for convergence checks and tests.
double svm_objective(std::span<const double> w, std::span<const double> pos,
                     std::size_t n_pos, std::span<const double> neg, std::size_t n_neg,
                     std::size_t dim, double C);

} // namespace imret
