#ifndef COVERID_EVAL_HPP
#define COVERID_EVAL_HPP

#include <filesystem>
#include <string>
#include <unordered_set>
#include <vector>

#include "coverid/store.hpp"

namespace coverid {

// Ranked boolean relevance for one query, plus the number of relevant items
// that exist in the reference set (the AP denominator).
struct RelevanceJudgment {
    std::vector<char> relevant;
    long total_relevant = 0;
};

RelevanceJudgment make_judgment(const RankedList& ranked,
                                const std::unordered_set<std::string>& relevant_ids,
                                long total_relevant);

// AP = (1/total_relevant) * sum over relevant ranks r of precision@r.
double average_precision(const RelevanceJudgment& j);

// Mean AP over queries with total_relevant >= 1.
double mean_average_precision(const std::vector<RelevanceJudgment>& judgments);

// Count of relevant items among the first k ranks.
long mt_at_k(const RelevanceJudgment& j, int k = 10);
double mean_mt_at_k(const std::vector<RelevanceJudgment>& judgments, int k = 10);

// mt_at_k normalized by min(k, total_relevant), the per-query maximum.
double normalized_mt_at_k(const RelevanceJudgment& j, int k = 10);
double mean_normalized_mt_at_k(const std::vector<RelevanceJudgment>& judgments, int k = 10);

// |top-N candidates  ground_truth| / N with N = |ground_truth|.
double r_precision(const std::vector<std::string>& candidates,
                   const std::unordered_set<std::string>& ground_truth);

// Whole-split evaluation used by the CLI and the end-to-end tests.
struct QueryScore {
    std::string track_id;
    double ap;
    long mt10;
    double mt10_norm;
};

struct EvalReport {
    std::string mode; // "samples" or "classes"
    double map = 0.0;
    double mean_mt10 = 0.0;
    double mean_mt10_norm = 0.0;
    long n_queries = 0; // queries with at least one relevant reference
    long n_skipped = 0; // queries with none (excluded from the means)
    std::vector<QueryScore> per_query;
};

EvalReport evaluate_lookup(const EmbeddingStore& store,
                           const std::vector<std::string>& query_track_ids,
                           LookupMode mode, int k = 10, int threads = 1);

void write_eval_summary_csv(const std::filesystem::path& path,
                            const std::vector<EvalReport>& reports);
void write_eval_queries_csv(const std::filesystem::path& path, const EvalReport& report);

} // namespace coverid

#endif
