#include "imret/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

namespace imret {

double average_precision(const RankedList& ranked,
                         const std::unordered_set<std::string>& positive,
                         const std::unordered_set<std::string>& junk, ApMode mode) {
    if (positive.empty())
        throw DataError("average_precision: empty positive set for query '" +
                        ranked.query_id + "'");

    double ap = 0;
    std::size_t hits = 0;
    std::size_t scored = 0; // rank after junk removal
    double old_recall = 0, old_precision = 1.0;
    for (const auto& entry : ranked.entries) {
        if (junk.count(entry.item_id)) continue;
        bool hit = positive.count(entry.item_id) > 0;
        if (hit) ++hits;
        ++scored;
        if (mode == ApMode::standard) {
            if (hit) ap += static_cast<double>(hits) / static_cast<double>(scored);
        } else {
            double recall = static_cast<double>(hits) / static_cast<double>(positive.size());
            double precision = static_cast<double>(hits) / static_cast<double>(scored);
            ap += (recall - old_recall) * ((old_precision + precision) / 2.0);
            old_recall = recall;
            old_precision = precision;
        }
    }
    if (mode == ApMode::standard) ap /= static_cast<double>(positive.size());
    return ap;
}

EvalReport mean_average_precision(std::span<const RankedList> runs, const GroundTruth& gt,
                                  ApMode mode) {
    if (runs.empty()) throw DataError("mean_average_precision: no queries");
    EvalReport report;
    double sum = 0;
    for (const auto& run : runs) {
        auto it = gt.queries.find(run.query_id);
        if (it == gt.queries.end())
            throw DataError("no judgment for query '" + run.query_id + "'");

        double ap;
        if (gt.exclude_self) {
            RankedList pruned;
            pruned.query_id = run.query_id;
            for (const auto& e : run.entries)
                if (e.item_id != run.query_id) pruned.entries.push_back(e);
            auto positive = it->second.positive;
            auto junk = it->second.junk;
            positive.erase(run.query_id);
            junk.erase(run.query_id);
            ap = average_precision(pruned, positive, junk, mode);
        } else {
            ap = average_precision(run, it->second.positive, it->second.junk, mode);
        }
        report.per_query.emplace_back(run.query_id, ap);
        sum += ap;
    }
    report.query_count = runs.size();
    report.map = sum / static_cast<double>(runs.size());
    return report;
}

GroundTruth parse_groundtruth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path.string() + ": cannot open file");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": bad JSON: " + e.what());
    }

    GroundTruth gt;
    try {
        gt.exclude_self = j.value("exclude_self", false);
        for (const auto& q : j.at("queries")) {
            std::string id = q.at("id").get<std::string>();
            if (gt.queries.count(id))
                throw DataError(path.string() + ": duplicate query id '" + id + "'");
            QueryJudgment judgment;
            for (const auto& p : q.at("positive"))
                judgment.positive.insert(p.get<std::string>());
            if (q.contains("junk"))
                for (const auto& x : q.at("junk")) judgment.junk.insert(x.get<std::string>());
            if (judgment.positive.empty())
                throw DataError(path.string() + ": query '" + id + "' has no positives");
            for (const auto& p : judgment.positive)
                if (judgment.junk.count(p))
                    throw DataError(path.string() + ": query '" + id + "': item '" + p +
                                    "' is both positive and junk");
            gt.query_order.push_back(id);
            gt.queries.emplace(std::move(id), std::move(judgment));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": bad ground truth: " + e.what());
    }
    return gt;
}

void save_groundtruth(const GroundTruth& gt, const std::filesystem::path& path) {
    nlohmann::json queries = nlohmann::json::array();
    for (const auto& id : gt.query_order) {
        const QueryJudgment& judgment = gt.queries.at(id);
        // Sets serialize in sorted order so files are reproducible.
        std::vector<std::string> positive(judgment.positive.begin(), judgment.positive.end());
        std::vector<std::string> junk(judgment.junk.begin(), judgment.junk.end());
        std::sort(positive.begin(), positive.end());
        std::sort(junk.begin(), junk.end());
        queries.push_back({{"id", id}, {"positive", positive}, {"junk", junk}});
    }
    nlohmann::json j{{"exclude_self", gt.exclude_self}, {"queries", queries}};
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(path.string() + ": cannot open for writing");
    out << j.dump(1) << '\n';
    if (!out) throw Error(path.string() + ": write failed");
}

std::vector<std::pair<std::string, std::string>>
read_concept_membership(std::istream& in, const std::string& source_name) {
    std::vector<std::pair<std::string, std::string>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
            throw DataError(source_name + ":" + std::to_string(lineno) +
                            ": expected 'concept-id<TAB>item-id'");
        std::string concept_id = line.substr(0, tab);
        std::string item = line.substr(tab + 1);
        if (concept_id.empty() || item.empty())
            throw DataError(source_name + ":" + std::to_string(lineno) + ": empty field");
        rows.emplace_back(std::move(concept_id), std::move(item));
    }
    return rows;
}

GroundTruth build_same_concept_gt(
    const std::vector<std::pair<std::string, std::string>>& membership,
    const std::vector<std::string>& queries) {
    std::unordered_map<std::string, std::string> concept_of;
    for (const auto& [concept_id, item] : membership) {
        auto [it, inserted] = concept_of.emplace(item, concept_id);
        if (!inserted && it->second != concept_id)
            throw DataError("item '" + item + "' listed under two concepts ('" + it->second +
                            "', '" + concept_id + "')");
    }
    std::unordered_set<std::string> query_ids(queries.begin(), queries.end());

    // Collection items are the manifest rows that are not queries.
    std::unordered_map<std::string, std::vector<std::string>> collection_by_concept;
    for (const auto& [concept_id, item] : membership)
        if (!query_ids.count(item)) collection_by_concept[concept_id].push_back(item);

    GroundTruth gt;
    gt.exclude_self = true;
    for (const auto& q : queries) {
        auto concept_it = concept_of.find(q);
        if (concept_it == concept_of.end())
            throw DataError("query '" + q + "' has no concept in the manifest");
        auto items_it = collection_by_concept.find(concept_it->second);
        if (items_it == collection_by_concept.end() || items_it->second.empty())
            throw DataError("query '" + q + "': concept '" + concept_it->second +
                            "' has no collection items");
        if (gt.queries.count(q)) throw DataError("duplicate query id '" + q + "'");
        QueryJudgment judgment;
        judgment.positive.insert(items_it->second.begin(), items_it->second.end());
        gt.query_order.push_back(q);
        gt.queries.emplace(q, std::move(judgment));
    }
    return gt;
}

void write_eval_report_tsv(const EvalReport& report, std::ostream& out) {
    char buf[32];
    for (const auto& [id, ap] : report.per_query) {
        std::snprintf(buf, sizeof(buf), "%.6f", ap);
        out << id << '\t' << buf << '\n';
    }
    std::snprintf(buf, sizeof(buf), "%.6f", report.map);
    out << "mAP" << '\t' << buf << '\n';
}

} // namespace imret
