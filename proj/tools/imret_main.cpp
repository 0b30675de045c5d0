#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "imret/evaluation.hpp"
#include "imret/feature_pipeline.hpp"
#include "imret/feature_store.hpp"
#include "imret/parallel.hpp"
#include "imret/ranked_list.hpp"
#include "imret/reranking.hpp"
#include "imret/retrieval.hpp"
#include "imret/spatial_search.hpp"
#include "imret/svm.hpp"

namespace {

using namespace imret;

// Exit codes: 0 success, 2 usage error, 3 data validation error,
// 4 numerical non-convergence.
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitConvergence = 4;

FileFormat parse_format(const std::string& name, const std::filesystem::path& path) {
    if (name == "binary") return FileFormat::binary;
    if (name == "tsv") return FileFormat::tsv;
    if (name == "auto") return format_from_extension(path);
    throw UsageError("unknown format '" + name + "' (use auto, binary or tsv)");
}

FeatureSet load(const std::filesystem::path& path, const std::string& format,
                bool strict = true) {
    return load_features(path, parse_format(format, path), strict);
}

void write_lists(const std::vector<RankedList>& lists, const std::string& out_path) {
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw Error(out_path + ": cannot open for writing");
    write_ranked_lists_tsv(lists, out);
    out.flush();
    if (!out) throw Error(out_path + ": write failed");
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(path + ": cannot open for writing");
    return out;
}

struct CommonPaths {
    std::string features, out;
    std::string format = "auto";
};

int cmd_pca_fit(const CommonPaths& paths, std::size_t k, bool normalize_inputs) {
    FeatureSet sample = load(paths.features, paths.format);
    if (normalize_inputs) {
        FeatureSet normalized;
        for (std::size_t i = 0; i < sample.size(); ++i)
            normalized.add(sample.id(i), l2_normalize(sample.row(i)));
        sample = std::move(normalized);
    }
    PcaModel model = pca_fit(sample, k);
    save_pca_model(model, paths.out);
    std::cerr << "fitted PCA " << model.input_dim << " -> " << model.output_dim << " on "
              << sample.size() << " samples\n";
    return 0;
}

int cmd_augment(const CommonPaths& paths, const std::string& model_path,
                const std::string& out_format, bool whiten, double epsilon, int workers) {
    FeatureSet set = load(paths.features, paths.format);
    PcaModel model = load_pca_model(model_path);
    AugmentOptions opt;
    opt.whitening = whiten;
    opt.epsilon = epsilon;
    FeatureSet augmented = augment_set(set, model, opt, workers);
    save_features(augmented, paths.out, parse_format(out_format, paths.out));
    return 0;
}

int cmd_patch_plan(int levels, const std::string& out_path) {
    PatchPlan plan = patch_plan(levels);
    if (out_path.empty()) {
        write_patch_plan_tsv(plan, std::cout);
    } else {
        auto out = open_out(out_path);
        write_patch_plan_tsv(plan, out);
    }
    return 0;
}

int cmd_rank(const CommonPaths& paths, const std::string& queries_path,
             const std::string& queries_format, bool exclude_self, std::size_t qe_top,
             int workers) {
    FeatureSet refs = load(paths.features, paths.format);
    FeatureSet queries = load(queries_path, queries_format);

    std::vector<RankedList> lists(queries.size());
    parallel_for(queries.size(), workers, [&](std::size_t i) {
        IdSet self{queries.id(i)};
        const IdSet* exclude = exclude_self ? &self : nullptr;
        if (qe_top == 0)
            lists[i] = rank_l2(queries.id(i), queries.row(i), refs, exclude);
        else
            lists[i] = rank_with_qe(queries.id(i), queries.row(i), refs, qe_top, exclude);
    });
    write_lists(lists, paths.out);
    return 0;
}

int cmd_spatial_rank(const std::string& refs_path, const std::string& refs_format,
                     const std::string& queries_path, const std::string& queries_format,
                     const std::string& out_path, int workers) {
    std::vector<PatchFeatureSet> refs =
        group_patch_features(load(refs_path, refs_format));
    std::vector<PatchFeatureSet> queries =
        group_patch_features(load(queries_path, queries_format));
    if (queries.empty()) throw DataError(queries_path + ": no query images");

    // Parallelism lives inside spatial_rank (over references); queries run
    // in input order so progress output stays readable.
    std::vector<RankedList> lists(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i)
        lists[i] = spatial_rank(queries[i], refs, workers);
    write_lists(lists, out_path);
    return 0;
}

RerankConfig make_rerank_config(const CLI::App* cmd, const std::string& config_path,
                                double c, std::size_t neg_ratio, std::size_t folds,
                                std::size_t seed_pool, std::size_t keep_top,
                                std::uint64_t seed) {
    RerankConfig cfg;
    if (!config_path.empty()) cfg = load_rerank_config(config_path);
    if (cmd->count("--svm-c")) cfg.C = c;
    if (cmd->count("--neg-ratio")) cfg.neg_ratio = neg_ratio;
    if (cmd->count("--folds")) cfg.folds = folds;
    if (cmd->count("--seed-pool")) cfg.seed_pool_size = seed_pool;
    if (cmd->count("--keep-top")) cfg.keep_top = keep_top;
    if (cmd->count("--seed")) cfg.rng_seed = seed;
    cfg.check();
    return cfg;
}

int cmd_rerank(const CommonPaths& paths, const std::string& manifest_path,
               const std::string& negatives_path, const std::string& negatives_format,
               const std::string& mode, const RerankConfig& cfg, int workers) {
    FeatureSet features = load(paths.features, paths.format);
    FeatureSet negatives = load(negatives_path, negatives_format);

    std::ifstream manifest_in(manifest_path);
    if (!manifest_in) throw DataError(manifest_path + ": cannot open file");
    std::vector<ConceptPool> pools = read_concept_manifest(manifest_in, manifest_path);
    if (pools.empty()) throw DataError(manifest_path + ": empty manifest");

    std::vector<RankedList> lists;
    std::vector<std::string> warnings;
    for (const auto& pool : pools) {
        FeatureSet candidates;
        for (const auto& id : pool.items) candidates.add(id, features.get(id));

        RankedList list;
        if (mode == "weak") {
            if (pool.annotated_pos.empty())
                throw DataError("concept '" + pool.concept_id +
                                "': weak mode needs rows labeled 'pos'");
            FeatureSet annotated;
            for (const auto& id : pool.annotated_pos) annotated.add(id, features.get(id));
            list = rerank_weak(candidates, annotated, negatives, cfg, &warnings);
        } else if (mode == "auto") {
            list = rerank_auto(candidates, negatives, cfg, workers, &warnings);
        } else {
            throw UsageError("unknown rerank mode '" + mode + "' (use auto or weak)");
        }
        list.query_id = pool.concept_id;
        lists.push_back(std::move(list));
    }
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    write_lists(lists, paths.out);
    return 0;
}

int cmd_select(const std::string& ranked_path, std::size_t k, const std::string& out_path) {
    std::ifstream in(ranked_path);
    if (!in) throw DataError(ranked_path + ": cannot open file");
    std::vector<RankedList> lists = read_ranked_lists_tsv(in, ranked_path);

    std::vector<std::string> warnings;
    std::vector<RankedList> selected;
    for (const auto& list : lists) {
        RankedList top;
        top.query_id = list.query_id;
        std::size_t n = select_top_k(list, k, &warnings).size();
        top.entries.assign(list.entries.begin(), list.entries.begin() + n);
        selected.push_back(std::move(top));
    }
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    write_lists(selected, out_path);
    return 0;
}

int cmd_eval(const std::string& run_path, const std::string& gt_path,
             const std::string& manifest_path, const std::string& out_path,
             const std::string& ap_mode_name) {
    ApMode mode;
    if (ap_mode_name == "standard")
        mode = ApMode::standard;
    else if (ap_mode_name == "trapezoid")
        mode = ApMode::trapezoid;
    else
        throw UsageError("unknown AP mode '" + ap_mode_name + "'");

    std::ifstream run_in(run_path);
    if (!run_in) throw DataError(run_path + ": cannot open file");
    std::vector<RankedList> runs = read_ranked_lists_tsv(run_in, run_path);

    GroundTruth gt;
    if (!gt_path.empty()) {
        gt = parse_groundtruth(gt_path);
    } else {
        std::ifstream manifest_in(manifest_path);
        if (!manifest_in) throw DataError(manifest_path + ": cannot open file");
        auto membership = read_concept_membership(manifest_in, manifest_path);
        std::vector<std::string> query_ids;
        for (const auto& run : runs) query_ids.push_back(run.query_id);
        gt = build_same_concept_gt(membership, query_ids);
    }

    EvalReport report = mean_average_precision(runs, gt, mode);
    if (out_path.empty()) {
        write_eval_report_tsv(report, std::cout);
    } else {
        auto out = open_out(out_path);
        write_eval_report_tsv(report, out);
    }
    return 0;
}

int cmd_validate(const CommonPaths& paths) {
    FeatureSet set = load(paths.features, paths.format, /*strict=*/false);
    ValidationReport report = validate(set);
    for (const auto& issue : report.issues) {
        std::cout << (issue.severity == ValidationIssue::Severity::error ? "ERROR" : "WARN")
                  << '\t' << issue.item_id << '\t';
        if (issue.component >= 0)
            std::cout << issue.component;
        else
            std::cout << '-';
        std::cout << '\t' << issue.message << '\n';
    }
    if (report.clean())
        std::cout << "OK\t" << set.size() << " records, dim " << set.dim() << '\n';
    return report.ok() ? 0 : kExitData;
}

int run(int argc, char** argv) {
    CLI::App app{"feature-space image retrieval engine"};
    app.require_subcommand(1);

    // pca-fit
    CommonPaths fit_paths;
    std::size_t fit_k = 0;
    bool fit_raw = false;
    auto* fit = app.add_subcommand("pca-fit", "fit a PCA model on a feature set");
    fit->add_option("--features", fit_paths.features, "fitting sample")->required();
    fit->add_option("--format", fit_paths.format, "input format (auto|binary|tsv)");
    fit->add_option("--k", fit_k, "output dimension")->required();
    fit->add_flag("--raw", fit_raw, "fit on raw vectors instead of l2-normalized ones");
    fit->add_option("--out", fit_paths.out, "model JSON path")->required();

    // augment
    CommonPaths aug_paths;
    std::string aug_model, aug_out_format = "auto";
    bool aug_no_whiten = false;
    double aug_epsilon = 1e-10;
    int aug_workers = 1;
    auto* aug = app.add_subcommand("augment", "l2 + PCA + whitening + l2 per record");
    aug->add_option("--features", aug_paths.features, "input feature file")->required();
    aug->add_option("--format", aug_paths.format, "input format (auto|binary|tsv)");
    aug->add_option("--model", aug_model, "PCA model JSON")->required();
    aug->add_option("--out", aug_paths.out, "output feature file")->required();
    aug->add_option("--out-format", aug_out_format, "output format (auto|binary|tsv)");
    aug->add_flag("--no-whiten", aug_no_whiten, "skip the whitening stage");
    aug->add_option("--epsilon", aug_epsilon, "whitening regularizer (default 1e-10)");
    aug->add_option("--workers", aug_workers, "worker threads (default 1)");

    // patch-plan
    int plan_levels = 0;
    std::string plan_out;
    auto* plan = app.add_subcommand("patch-plan", "emit multi-scale patch rectangles");
    plan->add_option("--levels", plan_levels, "max level h")->required();
    plan->add_option("--out", plan_out, "output TSV (default stdout)");

    // rank
    CommonPaths rank_paths;
    std::string rank_queries, rank_queries_format = "auto";
    bool rank_exclude_self = false;
    int rank_workers = 1;
    auto* rank = app.add_subcommand("rank", "exhaustive whole-image l2 ranking");
    rank->add_option("--features", rank_paths.features, "reference feature file")->required();
    rank->add_option("--format", rank_paths.format, "reference format");
    rank->add_option("--queries", rank_queries, "query feature file")->required();
    rank->add_option("--queries-format", rank_queries_format, "query format");
    rank->add_option("--out", rank_paths.out, "ranked-list TSV")->required();
    rank->add_flag("--exclude-self", rank_exclude_self,
                   "drop each query's own id from its list");
    rank->add_option("--workers", rank_workers, "worker threads (default 1)");

    // spatial-rank
    std::string sp_refs, sp_refs_format = "auto", sp_queries, sp_queries_format = "auto",
                sp_out;
    int sp_workers = 1;
    auto* sp = app.add_subcommand("spatial-rank", "multi-scale patch-set ranking");
    sp->add_option("--refs", sp_refs, "reference patch feature file")->required();
    sp->add_option("--refs-format", sp_refs_format, "reference format");
    sp->add_option("--queries", sp_queries, "query patch feature file")->required();
    sp->add_option("--queries-format", sp_queries_format, "query format");
    sp->add_option("--out", sp_out, "ranked-list TSV")->required();
    sp->add_option("--workers", sp_workers, "worker threads (default 1)");

    // qe-rank
    CommonPaths qe_paths;
    std::string qe_queries, qe_queries_format = "auto";
    bool qe_exclude_self = false;
    std::size_t qe_top = 20;
    int qe_workers = 1;
    auto* qe = app.add_subcommand("qe-rank", "ranking with average query expansion");
    qe->add_option("--features", qe_paths.features, "reference feature file")->required();
    qe->add_option("--format", qe_paths.format, "reference format");
    qe->add_option("--queries", qe_queries, "query feature file")->required();
    qe->add_option("--queries-format", qe_queries_format, "query format");
    qe->add_option("--out", qe_paths.out, "ranked-list TSV")->required();
    qe->add_option("--qe-top", qe_top, "results averaged into the query (default 20)");
    qe->add_flag("--exclude-self", qe_exclude_self,
                 "drop each query's own id from its list");
    qe->add_option("--workers", qe_workers, "worker threads (default 1)");

    // rerank
    CommonPaths rr_paths;
    std::string rr_manifest, rr_negatives, rr_negatives_format = "auto", rr_mode = "auto",
                rr_config;
    double rr_c = 1.0;
    std::size_t rr_neg_ratio = 100, rr_folds = 10, rr_seed_pool = 60, rr_keep_top = 1000;
    std::uint64_t rr_seed = 0;
    int rr_workers = 1;
    auto* rr = app.add_subcommand("rerank", "SVM reranking of noisy concept pools");
    rr->add_option("--features", rr_paths.features, "candidate feature file")->required();
    rr->add_option("--format", rr_paths.format, "candidate format");
    rr->add_option("--manifest", rr_manifest, "concept manifest TSV")->required();
    rr->add_option("--negatives", rr_negatives, "negative pool feature file")->required();
    rr->add_option("--negatives-format", rr_negatives_format, "negative pool format");
    rr->add_option("--mode", rr_mode, "auto (pseudo-positives) or weak (annotated)");
    rr->add_option("--out", rr_paths.out, "output manifest TSV")->required();
    rr->add_option("--config", rr_config, "JSON config file");
    rr->add_option("--svm-c", rr_c, "SVM penalty C (default 1)");
    rr->add_option("--neg-ratio", rr_neg_ratio, "negatives per positive (default 100)");
    rr->add_option("--folds", rr_folds, "folds of the seed sample (default 10)");
    rr->add_option("--seed-pool", rr_seed_pool, "pseudo-positive sample size (default 60)");
    rr->add_option("--keep-top", rr_keep_top, "selection size for downstream select");
    rr->add_option("--seed", rr_seed, "RNG seed (default 0)");
    rr->add_option("--workers", rr_workers, "worker threads (default 1)");

    // select
    std::string sel_ranked, sel_out;
    std::size_t sel_k = 1000;
    auto* sel = app.add_subcommand("select", "keep the top-k rows per query/concept");
    sel->add_option("--ranked", sel_ranked, "ranked-list TSV")->required();
    sel->add_option("--k", sel_k, "rows kept per group (default 1000)");
    sel->add_option("--out", sel_out, "output TSV")->required();

    // eval
    std::string ev_run, ev_gt, ev_manifest, ev_out, ev_mode = "standard";
    auto* ev = app.add_subcommand("eval", "mAP evaluation of a ranked-list file");
    ev->add_option("--run", ev_run, "ranked-list TSV")->required();
    ev->add_option("--gt", ev_gt, "ground-truth JSON");
    ev->add_option("--concept-manifest", ev_manifest,
                   "concept TSV for same-concept ground truth");
    ev->add_option("--out", ev_out, "report TSV (default stdout)");
    ev->add_option("--ap-mode", ev_mode, "standard or trapezoid (default standard)");

    // validate
    CommonPaths val_paths;
    auto* val = app.add_subcommand("validate", "audit a feature file");
    val->add_option("--features", val_paths.features, "feature file")->required();
    val->add_option("--format", val_paths.format, "format (auto|binary|tsv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help / --version
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    if (fit->parsed()) return cmd_pca_fit(fit_paths, fit_k, !fit_raw);
    if (aug->parsed())
        return cmd_augment(aug_paths, aug_model, aug_out_format, !aug_no_whiten, aug_epsilon,
                           aug_workers);
    if (plan->parsed()) return cmd_patch_plan(plan_levels, plan_out);
    if (rank->parsed())
        return cmd_rank(rank_paths, rank_queries, rank_queries_format, rank_exclude_self, 0,
                        rank_workers);
    if (sp->parsed())
        return cmd_spatial_rank(sp_refs, sp_refs_format, sp_queries, sp_queries_format,
                                sp_out, sp_workers);
    if (qe->parsed())
        return cmd_rank(qe_paths, qe_queries, qe_queries_format, qe_exclude_self, qe_top,
                        qe_workers);
    if (rr->parsed()) {
        RerankConfig cfg = make_rerank_config(rr, rr_config, rr_c, rr_neg_ratio, rr_folds,
                                              rr_seed_pool, rr_keep_top, rr_seed);
        return cmd_rerank(rr_paths, rr_manifest, rr_negatives, rr_negatives_format, rr_mode,
                          cfg, rr_workers);
    }
    if (sel->parsed()) return cmd_select(sel_ranked, sel_k, sel_out);
    if (ev->parsed()) {
        if (ev_gt.empty() == ev_manifest.empty())
            throw UsageError("eval needs exactly one of --gt or --concept-manifest");
        return cmd_eval(ev_run, ev_gt, ev_manifest, ev_out, ev_mode);
    }
    if (val->parsed()) return cmd_validate(val_paths);
    return kExitUsage;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConvergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConvergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
}
