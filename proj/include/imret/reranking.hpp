#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "imret/feature_store.hpp"
#include "imret/ranked_list.hpp"
#include "imret/svm.hpp"

namespace imret {

struct RerankConfig {
    double C = 1.0;                  // SVM penalty
    std::size_t neg_ratio = 100;     // negatives per training positive
    std::size_t folds = 10;          // folds of the pseudo-positive seed
    std::size_t seed_pool_size = 60; // pseudo-positives sampled per concept
    std::size_t keep_top = 1000;     // selection size downstream
    std::uint64_t rng_seed = 0;

    /// Throws DataError unless all counts are positive, C > 0 and
    /// folds <= seed_pool_size.
    void check() const;
};

/// Weakly supervised reranking: one SVM trained on the annotated
/// positives against neg_ratio * |annotated_pos| negatives sampled from
/// neg_pool without replacement; candidates sorted by descending decision
/// value, ties by id. A short pool is used whole, with a warning.
RankedList rerank_weak(const FeatureSet& candidates, const FeatureSet& annotated_pos,
                       const FeatureSet& neg_pool, const RerankConfig& cfg,
                       std::vector<std::string>* warnings = nullptr);

/// Automatic reranking: seed_pool_size candidates sampled as
/// pseudo-positives and split into `folds` folds; one SVM per fold is
/// trained on the other folds against freshly sampled negatives, and
/// every candidate is scored by the mean decision value over the fold
/// models. folds=1 trains a single model on the whole seed sample.
RankedList rerank_auto(const FeatureSet& candidates, const FeatureSet& neg_pool,
                       const RerankConfig& cfg, int workers = 1,
                       std::vector<std::string>* warnings = nullptr);

/// First min(k, length) item ids in rank order. k=0 yields an empty list
/// and a warning.
std::vector<std::string> select_top_k(const RankedList& ranked, std::size_t k,
                                      std::vector<std::string>* warnings = nullptr);

/// JSON config file: {"C", "neg_ratio", "folds", "seed_pool_size",
/// "keep_top", "rng_seed"}; absent keys keep their defaults.
RerankConfig load_rerank_config(const std::filesystem::path& path);

/// Candidate pool of one concept, read from the manifest.
struct ConceptPool {
    std::string concept_id;
    std::vector<std::string> items;         // all candidate ids, file order
    std::vector<std::string> annotated_pos; // subset labeled "pos"
};

/// Manifest TSV: concept-id, item-id, optional label in {pos, unlabeled}.
/// Concepts keep first-appearance order.
std::vector<ConceptPool> read_concept_manifest(std::istream& in,
                                               const std::string& source_name = "<stream>");

} // namespace imret
