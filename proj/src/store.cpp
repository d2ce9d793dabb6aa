#include "coverid/store.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include "coverid/binio.hpp"
#include "coverid/errors.hpp"
#include "coverid/parallel.hpp"

namespace coverid {

EmbeddingStore build_store(Matrix embeddings, std::vector<std::string> track_ids,
                           std::vector<std::string> work_ids) {
    if (static_cast<size_t>(embeddings.rows()) != track_ids.size() ||
        track_ids.size() != work_ids.size())
        throw ShapeMismatchError("embeddings, track_ids and work_ids must align");

    EmbeddingStore store;
    store.embeddings_ = std::move(embeddings);
    store.track_ids_ = std::move(track_ids);
    store.work_ids_ = std::move(work_ids);

    for (size_t t = 0; t < store.track_ids_.size(); ++t) {
        if (!store.track_index_.emplace(store.track_ids_[t], static_cast<int>(t)).second)
            throw DuplicateTrackError("duplicate track id: " + store.track_ids_[t]);
    }

    std::unordered_map<std::string, int> work_pos;
    std::vector<std::vector<int>> members;
    for (size_t t = 0; t < store.work_ids_.size(); ++t) {
        auto [it, inserted] =
            work_pos.emplace(store.work_ids_[t], static_cast<int>(store.proto_work_ids_.size()));
        if (inserted) {
            store.proto_work_ids_.push_back(store.work_ids_[t]);
            members.emplace_back();
        }
        members[it->second].push_back(static_cast<int>(t));
    }
    store.work_prototypes_ = Matrix::Zero(static_cast<Index>(members.size()),
                                          store.embeddings_.cols());
    for (size_t w = 0; w < members.size(); ++w) {
        for (int t : members[w]) store.work_prototypes_.row(w) += store.embeddings_.row(t);
        store.work_prototypes_.row(w) /= static_cast<double>(members[w].size());
    }
    return store;
}

int EmbeddingStore::track_index(const std::string& track_id) const {
    auto it = track_index_.find(track_id);
    return it == track_index_.end() ? -1 : it->second;
}

namespace {

RankedList ranked_from(const RowVector& query, const Matrix& refs,
                       const std::vector<std::string>& ids,
                       const std::string* exclude, std::optional<size_t> k) {
    if (query.cols() != refs.cols())
        throw ShapeMismatchError("query dimension does not match store");
    RankedList out;
    out.reserve(static_cast<size_t>(refs.rows()));
    for (Index r = 0; r < refs.rows(); ++r) {
        if (exclude && ids[r] == *exclude) continue;
        out.push_back({ids[r], (query - refs.row(r)).norm()});
    }
    std::sort(out.begin(), out.end(), [](const RankedItem& a, const RankedItem& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.ref_id < b.ref_id;
    });
    if (k && out.size() > *k) out.resize(*k);
    return out;
}

} // namespace

RankedList lookup_by_samples(const RowVector& query, const EmbeddingStore& store,
                             const std::optional<std::string>& exclude_track,
                             std::optional<size_t> k) {
    return ranked_from(query, store.embeddings(), store.track_ids(),
                       exclude_track ? &*exclude_track : nullptr, k);
}

RankedList lookup_by_classes(const RowVector& query, const EmbeddingStore& store,
                             std::optional<size_t> k) {
    return ranked_from(query, store.work_prototypes(), store.proto_work_ids(), nullptr, k);
}

Matrix distance_matrix(const Matrix& queries, const EmbeddingStore& store,
                       LookupMode mode, bool exclude_self,
                       const std::vector<std::string>* query_track_ids, int threads) {
    const Matrix& refs =
        mode == LookupMode::samples ? store.embeddings() : store.work_prototypes();
    if (queries.cols() != refs.cols())
        throw ShapeMismatchError("query dimension does not match store");

    std::vector<int> self_col;
    if (mode == LookupMode::samples && exclude_self) {
        if (!query_track_ids ||
            static_cast<Index>(query_track_ids->size()) != queries.rows())
            throw MissingSelfReferenceError("exclude_self requires query track ids");
        self_col.resize(query_track_ids->size());
        for (size_t q = 0; q < query_track_ids->size(); ++q) {
            const int idx = store.track_index((*query_track_ids)[q]);
            if (idx < 0)
                throw MissingSelfReferenceError("query track not in store: " +
                                                (*query_track_ids)[q]);
            self_col[q] = idx;
        }
    }

    Matrix out(queries.rows(), refs.rows());
    parallel_for(queries.rows(), threads, [&](long begin, long end) {
        for (long q = begin; q < end; ++q) {
            for (Index r = 0; r < refs.rows(); ++r)
                out(q, r) = (queries.row(q) - refs.row(r)).norm();
            if (!self_col.empty())
                out(q, self_col[q]) = std::numeric_limits<double>::infinity();
        }
    });
    return out;
}

void write_embeddings(const std::filesystem::path& emb_path,
                      const std::filesystem::path& sidecar_csv_path,
                      const Matrix& embeddings,
                      const std::vector<std::string>& track_ids,
                      const std::vector<std::string>& work_ids) {
    if (static_cast<size_t>(embeddings.rows()) != track_ids.size() ||
        track_ids.size() != work_ids.size())
        throw ShapeMismatchError("embeddings, track_ids and work_ids must align");

    std::ofstream out(emb_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + emb_path.string());
    binio::write_magic(out, "EMB1");
    binio::write_u32(out, static_cast<uint32_t>(embeddings.rows()));
    binio::write_u32(out, static_cast<uint32_t>(embeddings.cols()));
    for (Index r = 0; r < embeddings.rows(); ++r)
        for (Index c = 0; c < embeddings.cols(); ++c)
            binio::write_f32(out, static_cast<float>(embeddings(r, c)));
    if (!out) throw IoError("write failed: " + emb_path.string());

    std::ofstream csv(sidecar_csv_path, std::ios::trunc);
    if (!csv) throw IoError("cannot open for writing: " + sidecar_csv_path.string());
    csv << "track_id,work_id\n";
    for (size_t t = 0; t < track_ids.size(); ++t)
        csv << track_ids[t] << ',' << work_ids[t] << '\n';
    if (!csv) throw IoError("write failed: " + sidecar_csv_path.string());
}

EmbeddingStore load_store(const std::filesystem::path& emb_path,
                          const std::filesystem::path& sidecar_csv_path) {
    std::ifstream in(emb_path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + emb_path.string());
    binio::expect_magic(in, "EMB1");
    const uint32_t count = binio::read_u32(in);
    const uint32_t dim = binio::read_u32(in);
    Matrix embeddings(count, dim);
    for (uint32_t r = 0; r < count; ++r)
        for (uint32_t c = 0; c < dim; ++c) embeddings(r, c) = binio::read_f32(in);

    std::ifstream csv(sidecar_csv_path);
    if (!csv) throw IoError("cannot open: " + sidecar_csv_path.string());
    std::string line;
    if (!std::getline(csv, line))
        throw ParseError(sidecar_csv_path.string() + ":1: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "track_id,work_id")
        throw ParseError(sidecar_csv_path.string() + ":1: expected header 'track_id,work_id'");

    std::vector<std::string> track_ids, work_ids;
    int line_no = 1;
    while (std::getline(csv, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const size_t comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw ParseError(sidecar_csv_path.string() + ":" + std::to_string(line_no) +
                             ": malformed row, expected track_id,work_id");
        track_ids.push_back(line.substr(0, comma));
        work_ids.push_back(line.substr(comma + 1));
    }
    if (track_ids.size() != count)
        throw ParseError(sidecar_csv_path.string() + ": row count does not match " +
                         emb_path.string());
    return build_store(std::move(embeddings), std::move(track_ids), std::move(work_ids));
}

} // namespace coverid
