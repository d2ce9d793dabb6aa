#include "coverid/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "coverid/errors.hpp"
#include "coverid/parallel.hpp"

namespace coverid {

RelevanceJudgment make_judgment(const RankedList& ranked,
                                const std::unordered_set<std::string>& relevant_ids,
                                long total_relevant) {
    RelevanceJudgment j;
    j.total_relevant = total_relevant;
    j.relevant.reserve(ranked.size());
    for (const RankedItem& item : ranked)
        j.relevant.push_back(relevant_ids.count(item.ref_id) ? 1 : 0);
    return j;
}

double average_precision(const RelevanceJudgment& j) {
    if (j.total_relevant < 1)
        throw UndefinedMetricError("average_precision needs total_relevant >= 1");
    double sum = 0.0;
    long hits = 0;
    for (size_t r = 0; r < j.relevant.size(); ++r) {
        if (!j.relevant[r]) continue;
        ++hits;
        sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
    return sum / static_cast<double>(j.total_relevant);
}

double mean_average_precision(const std::vector<RelevanceJudgment>& judgments) {
    double sum = 0.0;
    long n = 0;
    for (const auto& j : judgments) {
        if (j.total_relevant < 1) continue;
        sum += average_precision(j);
        ++n;
    }
    if (n == 0) throw UndefinedMetricError("no query has a defined AP");
    return sum / static_cast<double>(n);
}

long mt_at_k(const RelevanceJudgment& j, int k) {
    if (k < 1) throw UndefinedMetricError("k must be >= 1");
    long count = 0;
    const size_t limit = std::min<size_t>(j.relevant.size(), static_cast<size_t>(k));
    for (size_t r = 0; r < limit; ++r) count += j.relevant[r] ? 1 : 0;
    return count;
}

double mean_mt_at_k(const std::vector<RelevanceJudgment>& judgments, int k) {
    double sum = 0.0;
    long n = 0;
    for (const auto& j : judgments) {
        if (j.total_relevant < 1) continue;
        sum += static_cast<double>(mt_at_k(j, k));
        ++n;
    }
    if (n == 0) throw UndefinedMetricError("no query has relevant references");
    return sum / static_cast<double>(n);
}

double normalized_mt_at_k(const RelevanceJudgment& j, int k) {
    if (j.total_relevant < 1)
        throw UndefinedMetricError("normalized mt@k needs total_relevant >= 1");
    const long denom = std::min<long>(k, j.total_relevant);
    return static_cast<double>(mt_at_k(j, k)) / static_cast<double>(denom);
}

double mean_normalized_mt_at_k(const std::vector<RelevanceJudgment>& judgments, int k) {
    double sum = 0.0;
    long n = 0;
    for (const auto& j : judgments) {
        if (j.total_relevant < 1) continue;
        sum += normalized_mt_at_k(j, k);
        ++n;
    }
    if (n == 0) throw UndefinedMetricError("no query has relevant references");
    return sum / static_cast<double>(n);
}

double r_precision(const std::vector<std::string>& candidates,
                   const std::unordered_set<std::string>& ground_truth) {
    if (ground_truth.empty())
        throw UndefinedMetricError("r_precision needs a nonempty ground truth");
    const size_t n = ground_truth.size();
    long correct = 0;
    for (size_t i = 0; i < candidates.size() && i < n; ++i)
        correct += ground_truth.count(candidates[i]) ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(n);
}

EvalReport evaluate_lookup(const EmbeddingStore& store,
                           const std::vector<std::string>& query_track_ids,
                           LookupMode mode, int k, int threads) {
    EvalReport report;
    report.mode = mode == LookupMode::samples ? "samples" : "classes";

    std::vector<int> query_rows(query_track_ids.size());
    for (size_t q = 0; q < query_track_ids.size(); ++q) {
        query_rows[q] = store.track_index(query_track_ids[q]);
        if (query_rows[q] < 0)
            throw MissingSelfReferenceError("query track not in store: " +
                                            query_track_ids[q]);
    }

    std::vector<RelevanceJudgment> judgments(query_track_ids.size());
    parallel_for(static_cast<long>(query_track_ids.size()), threads,
                 [&](long begin, long end) {
        for (long q = begin; q < end; ++q) {
            const std::string& qid = query_track_ids[q];
            const int row = query_rows[q];
            const std::string& work = store.work_of(row);

            if (mode == LookupMode::samples) {
                // Relevant references are the other covers of the query's work.
                long total = -1; // self pair discarded
                std::unordered_set<std::string> relevant;
                for (size_t t = 0; t < store.work_ids().size(); ++t)
                    if (store.work_ids()[t] == work) {
                        relevant.insert(store.track_ids()[t]);
                        ++total;
                    }
                relevant.erase(qid);
                const RankedList ranked =
                    lookup_by_samples(store.embeddings().row(row), store, qid);
                judgments[q] = make_judgment(ranked, relevant, total);
            } else {
                const RankedList ranked =
                    lookup_by_classes(store.embeddings().row(row), store);
                judgments[q] = make_judgment(ranked, {work}, 1);
            }
        }
    });

    for (size_t q = 0; q < judgments.size(); ++q) {
        const RelevanceJudgment& j = judgments[q];
        if (j.total_relevant < 1) {
            ++report.n_skipped;
            continue;
        }
        QueryScore score{query_track_ids[q], average_precision(j), mt_at_k(j, k),
                         normalized_mt_at_k(j, k)};
        report.per_query.push_back(score);
        report.map += score.ap;
        report.mean_mt10 += static_cast<double>(score.mt10);
        report.mean_mt10_norm += score.mt10_norm;
        ++report.n_queries;
    }
    if (report.n_queries > 0) {
        report.map /= static_cast<double>(report.n_queries);
        report.mean_mt10 /= static_cast<double>(report.n_queries);
        report.mean_mt10_norm /= static_cast<double>(report.n_queries);
    }
    return report;
}

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void write_eval_summary_csv(const std::filesystem::path& path,
                            const std::vector<EvalReport>& reports) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "metric,mode,value,n_queries\n";
    for (const EvalReport& r : reports) {
        out << "map," << r.mode << ',' << fmt17(r.map) << ',' << r.n_queries << '\n';
        out << "mt@10," << r.mode << ',' << fmt17(r.mean_mt10) << ',' << r.n_queries << '\n';
        out << "mt@10_norm," << r.mode << ',' << fmt17(r.mean_mt10_norm) << ','
            << r.n_queries << '\n';
        out << "queries_skipped," << r.mode << ',' << r.n_skipped << ','
            << r.n_queries + r.n_skipped << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

void write_eval_queries_csv(const std::filesystem::path& path, const EvalReport& report) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "track_id,ap,mt@10,mt@10_norm\n";
    for (const QueryScore& q : report.per_query)
        out << q.track_id << ',' << fmt17(q.ap) << ',' << q.mt10 << ','
            << fmt17(q.mt10_norm) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace coverid
