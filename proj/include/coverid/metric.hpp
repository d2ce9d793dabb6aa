#ifndef COVERID_METRIC_HPP
#define COVERID_METRIC_HPP

#include <vector>

#include "coverid/types.hpp"

namespace coverid {

// A batch of embeddings with one class (work) label per row.
struct EmbeddingBatch {
    Matrix embeddings;        // B x d
    std::vector<int> labels;  // length B

    Index size() const { return embeddings.rows(); }
    Index dim() const { return embeddings.cols(); }
};

// Per-class centroids e*_i together with the assignment matrix that produced
// them: delta(i,j) = 1/|S_i| when sample j belongs to class i, else 0, so
// prototypes = delta * embeddings.
struct PrototypeSet {
    std::vector<int> class_ids;  // first-appearance order in the batch
    Matrix prototypes;           // |C| x d
    Matrix delta;                // |C| x B
};

enum class Mining { semi_hard, all_valid };

struct TripletConfig {
    double margin = 1.0;
    Mining mining = Mining::semi_hard;
    double distance_epsilon = 1e-12;
};

// positive/negative index sample rows (standard) or PrototypeSet classes
// (prototypical).
enum class TripletRefKind { sample, prototype };

struct Triplet {
    int anchor;
    int positive;
    int negative;
    double d_ap;
    double d_an;
};

struct TripletSet {
    TripletRefKind ref_kind = TripletRefKind::sample;
    std::vector<Triplet> triplets;
};

struct LossResult {
    double loss = 0.0;
    Matrix grad;              // B x d, d loss / d embeddings
    long active_count = 0;    // triplets with positive hinge
};

// Exact Euclidean distances between the rows of a and the rows of b,
// computed as sqrt of the summed squared differences (no norm expansion).
// Rows may be computed in parallel; the result is schedule-independent.
Matrix pairwise_distances(const Matrix& a, const Matrix& b, int threads = 1);

// Builds the delta matrix and prototypes = delta * embeddings. Class order
// follows first appearance in labels.
PrototypeSet compute_prototypes(const EmbeddingBatch& batch);

inline double hinge_triplet(double d_ap, double d_an, double margin) {
    const double v = d_ap + margin - d_an;
    return v > 0.0 ? v : 0.0;
}

// Semi-hard selection for every ordered anchor-positive pair: the negative
// minimizing d_an subject to d_ap < d_an < d_ap + margin; if none exists,
// the negative with maximum d_an. Ties go to the lowest sample index.
// Anchors in singleton classes are skipped.
TripletSet mine_semihard_standard(const EmbeddingBatch& batch, const TripletConfig& cfg);

// One triplet per anchor: positive is the anchor's own class prototype,
// negative is chosen among the other in-batch prototypes by the same
// semi-hard rule and fallback.
TripletSet mine_semihard_prototypical(const EmbeddingBatch& batch,
                                      const PrototypeSet& protos,
                                      const TripletConfig& cfg);

// Every valid combination instead of a mined selection (Mining::all_valid).
TripletSet mine_all_standard(const EmbeddingBatch& batch, const TripletConfig& cfg);
TripletSet mine_all_prototypical(const EmbeddingBatch& batch,
                                 const PrototypeSet& protos,
                                 const TripletConfig& cfg);

// Mean hinge over mined sample triplets plus the analytic gradient with
// respect to the embeddings.
LossResult loss_standard(const EmbeddingBatch& batch, const TripletConfig& cfg);

// Prototypical variant: prototypes are computed online from the batch and
// the gradient flows through delta as well as through the anchors.
LossResult loss_prototypical(const EmbeddingBatch& batch, const TripletConfig& cfg);

} // namespace coverid

#endif
