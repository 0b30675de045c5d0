#include "imret/reranking.hpp"

#include <algorithm>
#include <fstream>
#include <istream>

#include <nlohmann/json.hpp>

#include "imret/parallel.hpp"
#include "imret/rng.hpp"

namespace imret {

namespace {

// Sub-stream tags: 0 drives the pseudo-positive seed sample, 1 + fold the
// per-model negative samples (stream 1 is also the weak-mode sample).
constexpr std::uint64_t kSeedSampleStream = 0;
constexpr std::uint64_t kNegativeStreamBase = 1;

std::vector<double> gather_rows(const FeatureSet& set, const std::vector<std::size_t>& rows) {
    std::vector<double> out;
    out.reserve(rows.size() * set.dim());
    for (std::size_t r : rows) {
        auto row = set.row(r);
        out.insert(out.end(), row.begin(), row.end());
    }
    return out;
}

std::vector<double> sample_negatives(const FeatureSet& neg_pool, std::size_t wanted,
                                     std::uint64_t seed, std::uint64_t stream,
                                     std::size_t& taken, std::vector<std::string>* warnings) {
    taken = wanted;
    if (neg_pool.size() < wanted) {
        taken = neg_pool.size();
        if (warnings)
            warnings->push_back("negative pool has " + std::to_string(neg_pool.size()) +
                                " items, fewer than the requested " + std::to_string(wanted) +
                                "; using all of it");
    }
    SampleRng rng(substream_seed(seed, stream));
    std::vector<std::size_t> rows = sample_without_replacement(neg_pool.size(), taken, rng);
    // Sorted rows make the training set independent of sampling order.
    std::sort(rows.begin(), rows.end());
    return gather_rows(neg_pool, rows);
}

RankedList rank_by_score(const FeatureSet& candidates, const std::vector<double>& scores) {
    std::vector<std::size_t> order(candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b]; // descending
        return candidates.id(a) < candidates.id(b);
    });
    RankedList list;
    list.entries.reserve(order.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        list.entries.push_back(
            {candidates.id(order[i]), scores[order[i]], static_cast<int>(i) + 1});
    return list;
}

} // namespace

void RerankConfig::check() const {
    if (C <= 0) throw DataError("rerank config: C must be positive");
    if (neg_ratio == 0 || folds == 0 || seed_pool_size == 0 || keep_top == 0)
        throw DataError("rerank config: counts must be positive");
    if (folds > seed_pool_size)
        throw DataError("rerank config: folds (" + std::to_string(folds) +
                        ") exceed seed pool size (" + std::to_string(seed_pool_size) + ")");
}

RankedList rerank_weak(const FeatureSet& candidates, const FeatureSet& annotated_pos,
                       const FeatureSet& neg_pool, const RerankConfig& cfg,
                       std::vector<std::string>* warnings) {
    cfg.check();
    if (annotated_pos.empty()) throw DataError("rerank_weak: no annotated positives");
    if (candidates.empty()) throw DataError("rerank_weak: no candidates");
    if (candidates.dim() != annotated_pos.dim() ||
        (neg_pool.size() > 0 && neg_pool.dim() != candidates.dim()))
        throw DataError("rerank_weak: feature dims differ");

    std::size_t n_neg = 0;
    std::vector<double> neg = sample_negatives(neg_pool, cfg.neg_ratio * annotated_pos.size(),
                                               cfg.rng_seed, kNegativeStreamBase, n_neg,
                                               warnings);
    SvmTrainOptions opts;
    opts.C = cfg.C;
    SvmModel model = train_linear_svm(annotated_pos.data(), annotated_pos.size(), neg, n_neg,
                                      candidates.dim(), opts);

    std::vector<double> scores(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i)
        scores[i] = svm_score(model, candidates.row(i));
    return rank_by_score(candidates, scores);
}

RankedList rerank_auto(const FeatureSet& candidates, const FeatureSet& neg_pool,
                       const RerankConfig& cfg, int workers,
                       std::vector<std::string>* warnings) {
    cfg.check();
    if (candidates.size() < cfg.seed_pool_size)
        throw DataError("rerank_auto: " + std::to_string(candidates.size()) +
                        " candidates, need at least seed_pool_size=" +
                        std::to_string(cfg.seed_pool_size));
    if (neg_pool.size() > 0 && neg_pool.dim() != candidates.dim())
        throw DataError("rerank_auto: feature dims differ");

    SampleRng seed_rng(substream_seed(cfg.rng_seed, kSeedSampleStream));
    std::vector<std::size_t> seed_rows =
        sample_without_replacement(candidates.size(), cfg.seed_pool_size, seed_rng);

    // Round-robin fold split of the seed sample; fold f trains on the rest.
    const std::size_t n_models = cfg.folds;
    std::vector<std::vector<double>> fold_scores(n_models);

    // Negative samples are drawn up front so warnings stay ordered.
    std::vector<std::vector<double>> fold_negs(n_models);
    std::vector<std::size_t> fold_neg_counts(n_models);
    std::vector<std::vector<double>> fold_pos(n_models);
    std::vector<std::size_t> fold_pos_counts(n_models);
    for (std::size_t f = 0; f < n_models; ++f) {
        std::vector<std::size_t> train_rows;
        if (cfg.folds == 1) {
            train_rows = seed_rows;
        } else {
            for (std::size_t i = 0; i < seed_rows.size(); ++i)
                if (i % cfg.folds != f) train_rows.push_back(seed_rows[i]);
        }
        fold_pos[f] = gather_rows(candidates, train_rows);
        fold_pos_counts[f] = train_rows.size();
        fold_negs[f] = sample_negatives(neg_pool, cfg.neg_ratio * train_rows.size(),
                                        cfg.rng_seed, kNegativeStreamBase + f,
                                        fold_neg_counts[f], warnings);
    }

    parallel_for(n_models, workers, [&](std::size_t f) {
        SvmTrainOptions opts;
        opts.C = cfg.C;
        SvmModel model = train_linear_svm(fold_pos[f], fold_pos_counts[f], fold_negs[f],
                                          fold_neg_counts[f], candidates.dim(), opts);
        auto& scores = fold_scores[f];
        scores.resize(candidates.size());
        for (std::size_t i = 0; i < candidates.size(); ++i)
            scores[i] = svm_score(model, candidates.row(i));
    });

    // Mean decision value over models, accumulated in fold order.
    std::vector<double> scores(candidates.size(), 0.0);
    for (std::size_t f = 0; f < n_models; ++f)
        for (std::size_t i = 0; i < candidates.size(); ++i) scores[i] += fold_scores[f][i];
    for (double& s : scores) s /= static_cast<double>(n_models);

    return rank_by_score(candidates, scores);
}

std::vector<std::string> select_top_k(const RankedList& ranked, std::size_t k,
                                      std::vector<std::string>* warnings) {
    if (k == 0 && warnings) warnings->push_back("select_top_k: k=0 selects nothing");
    std::size_t n = std::min(k, ranked.entries.size());
    std::vector<std::string> ids;
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) ids.push_back(ranked.entries[i].item_id);
    return ids;
}

RerankConfig load_rerank_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path.string() + ": cannot open file");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": bad JSON: " + e.what());
    }
    RerankConfig cfg;
    try {
        if (j.contains("C")) cfg.C = j["C"].get<double>();
        if (j.contains("neg_ratio")) cfg.neg_ratio = j["neg_ratio"].get<std::size_t>();
        if (j.contains("folds")) cfg.folds = j["folds"].get<std::size_t>();
        if (j.contains("seed_pool_size"))
            cfg.seed_pool_size = j["seed_pool_size"].get<std::size_t>();
        if (j.contains("keep_top")) cfg.keep_top = j["keep_top"].get<std::size_t>();
        if (j.contains("rng_seed")) cfg.rng_seed = j["rng_seed"].get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": bad config value: " + e.what());
    }
    cfg.check();
    return cfg;
}

std::vector<ConceptPool> read_concept_manifest(std::istream& in,
                                               const std::string& source_name) {
    std::vector<ConceptPool> pools;
    std::unordered_map<std::string, std::size_t> index;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            auto tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 2 && fields.size() != 3)
            throw DataError(source_name + ":" + std::to_string(lineno) +
                            ": expected 'concept-id<TAB>item-id[<TAB>label]'");
        if (fields[0].empty() || fields[1].empty())
            throw DataError(source_name + ":" + std::to_string(lineno) + ": empty field");
        bool is_pos = false;
        if (fields.size() == 3) {
            if (fields[2] == "pos")
                is_pos = true;
            else if (fields[2] != "unlabeled")
                throw DataError(source_name + ":" + std::to_string(lineno) + ": label '" +
                                fields[2] + "' not in {pos, unlabeled}");
        }
        auto [it, inserted] = index.try_emplace(fields[0], pools.size());
        if (inserted) pools.push_back({fields[0], {}, {}});
        ConceptPool& pool = pools[it->second];
        pool.items.push_back(fields[1]);
        if (is_pos) pool.annotated_pos.push_back(fields[1]);
    }
    return pools;
}

} // namespace imret
