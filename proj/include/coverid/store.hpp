#ifndef COVERID_STORE_HPP
#define COVERID_STORE_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "coverid/types.hpp"

namespace coverid {

// Immutable reference set: per-track embeddings plus per-work centroid
// prototypes computed once at build time.
class EmbeddingStore {
public:
    EmbeddingStore() = default;

    const Matrix& embeddings() const { return embeddings_; }
    const std::vector<std::string>& track_ids() const { return track_ids_; }
    const std::vector<std::string>& work_ids() const { return work_ids_; }
    const Matrix& work_prototypes() const { return work_prototypes_; }
    const std::vector<std::string>& proto_work_ids() const { return proto_work_ids_; }

    Index size() const { return embeddings_.rows(); }
    Index dim() const { return embeddings_.cols(); }
    Index n_works() const { return work_prototypes_.rows(); }

    int track_index(const std::string& track_id) const;
    const std::string& work_of(Index track_row) const { return work_ids_[track_row]; }

    friend EmbeddingStore build_store(Matrix embeddings,
                                      std::vector<std::string> track_ids,
                                      std::vector<std::string> work_ids);

private:
    Matrix embeddings_;
    std::vector<std::string> track_ids_;
    std::vector<std::string> work_ids_;
    Matrix work_prototypes_;
    std::vector<std::string> proto_work_ids_; // first-appearance order
    std::unordered_map<std::string, int> track_index_;
};

EmbeddingStore build_store(Matrix embeddings, std::vector<std::string> track_ids,
                           std::vector<std::string> work_ids);

struct RankedItem {
    std::string ref_id;
    double distance;
};
using RankedList = std::vector<RankedItem>;

// Ascending distance over reference tracks, self pair excluded on request,
// ties broken by ascending track id.
RankedList lookup_by_samples(const RowVector& query, const EmbeddingStore& store,
                             const std::optional<std::string>& exclude_track = {},
                             std::optional<size_t> k = {});

// Ascending distance over work prototypes, ties by ascending work id.
RankedList lookup_by_classes(const RowVector& query, const EmbeddingStore& store,
                             std::optional<size_t> k = {});

enum class LookupMode { samples, classes };

// Full query x reference distance matrix. In samples mode with exclude_self,
// each query's own track column is set to +infinity so it never ranks;
// query_track_ids supplies the self ids.
Matrix distance_matrix(const Matrix& queries, const EmbeddingStore& store,
                       LookupMode mode, bool exclude_self = false,
                       const std::vector<std::string>* query_track_ids = nullptr,
                       int threads = 1);

// EMB1 container: "EMB1", u32 count, u32 dim, count*dim f32 little-endian
// row-major. The sidecar CSV ("track_id,work_id") is order-aligned.
void write_embeddings(const std::filesystem::path& emb_path,
                      const std::filesystem::path& sidecar_csv_path,
                      const Matrix& embeddings,
                      const std::vector<std::string>& track_ids,
                      const std::vector<std::string>& work_ids);
EmbeddingStore load_store(const std::filesystem::path& emb_path,
                          const std::filesystem::path& sidecar_csv_path);

} // namespace coverid

#endif
