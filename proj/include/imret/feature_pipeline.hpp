#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "imret/feature_store.hpp"

namespace imret {

/// Fitted PCA basis: mean, top-k principal axes (rows, descending
/// eigenvalue order) and the eigenvalues of the sample covariance.
struct PcaModel {
    std::size_t input_dim = 0;  // d
    std::size_t output_dim = 0; // k
    FeatureVector mean;                // d
    std::vector<double> eigenvalues;   // k, non-increasing, >= 0
    std::vector<double> components;    // k * d, row-major

    std::span<const double> component(std::size_t i) const {
        return {components.data() + i * input_dim, input_dim};
    }
};

/// Scales v to unit Euclidean norm. Throws DataError on the zero vector.
FeatureVector l2_normalize(std::span<const double> v);

/// Fits PCA on the rows of `sample`: mean is the component-wise average,
/// axes are the top-k eigenvectors of the 1/(N-1) sample covariance.
/// Each axis has its largest-magnitude entry made positive so repeated
/// fits are bit-identical. Requires at least 2 rows and 1 <= k <= dim.
PcaModel pca_fit(const FeatureSet& sample, std::size_t k);

/// Centers v and projects onto the model axes; output has dim k.
FeatureVector pca_project(std::span<const double> v, const PcaModel& m);

/// Divides projected coordinates by sqrt(eigenvalue + epsilon),
/// equalizing per-axis variance on the fitting sample.
FeatureVector whiten(std::span<const double> p, const PcaModel& m, double epsilon);

struct AugmentOptions {
    bool whitening = true;
    double epsilon = 1e-10; // guards division by near-zero eigenvalues
};

/// Full augmentation chain: l2-normalize, PCA-project, optionally whiten,
/// l2-renormalize. The model must have been fitted on l2-normalized
/// inputs for the projection to be meaningful. Throws DataError when
/// either normalization stage sees a zero vector (e.g. v equals the
/// model mean after the first normalization).
FeatureVector augment(std::span<const double> v, const PcaModel& m,
                      const AugmentOptions& opt = {});

/// augment() applied to every row; ids and order preserved.
FeatureSet augment_set(const FeatureSet& set, const PcaModel& m,
                       const AugmentOptions& opt = {}, int workers = 1);

/// JSON model file: {d, k, mean, eigenvalues, components}.
PcaModel load_pca_model(const std::filesystem::path& path);
void save_pca_model(const PcaModel& m, const std::filesystem::path& path);

} // namespace imret
