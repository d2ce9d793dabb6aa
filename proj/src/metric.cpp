#include "coverid/metric.hpp"

#include <cmath>
#include <limits>

#include "coverid/errors.hpp"
#include "coverid/parallel.hpp"

namespace coverid {

namespace {

void check_batch(const EmbeddingBatch& batch) {
    if (batch.size() < 2 || batch.dim() < 1)
        throw DegenerateBatchError("batch needs B >= 2 and d >= 1");
    if (static_cast<Index>(batch.labels.size()) != batch.size())
        throw ShapeMismatchError("labels length does not match batch rows");
    if (!batch.embeddings.allFinite())
        throw DegenerateBatchError("batch embeddings must be finite");
}

int count_distinct(const std::vector<int>& labels) {
    std::vector<int> seen;
    for (int l : labels) {
        bool found = false;
        for (int s : seen) {
            if (s == l) { found = true; break; }
        }
        if (!found) seen.push_back(l);
    }
    return static_cast<int>(seen.size());
}

// Shared semi-hard scan over a row of candidate negative distances.
// Returns the chosen candidate index, or -1 if there were no candidates.
template <class DistOf>
int select_negative(int n_candidates, double d_ap, double margin, DistOf&& dist_of,
                    double* chosen_dist) {
    int best_semi = -1;
    double best_semi_d = std::numeric_limits<double>::infinity();
    int best_fall = -1;
    double best_fall_d = -std::numeric_limits<double>::infinity();
    for (int n = 0; n < n_candidates; ++n) {
        const double d_an = dist_of(n);
        if (d_an < 0.0) continue; // sentinel: not a valid negative
        if (d_ap < d_an && d_an < d_ap + margin && d_an < best_semi_d) {
            best_semi = n;
            best_semi_d = d_an;
        }
        if (d_an > best_fall_d) {
            best_fall = n;
            best_fall_d = d_an;
        }
    }
    if (best_semi >= 0) {
        *chosen_dist = best_semi_d;
        return best_semi;
    }
    *chosen_dist = best_fall_d;
    return best_fall;
}

} // namespace

Matrix pairwise_distances(const Matrix& a, const Matrix& b, int threads) {
    if (a.cols() != b.cols())
        throw ShapeMismatchError("pairwise_distances: dimension mismatch");
    Matrix out(a.rows(), b.rows());
    parallel_for(a.rows(), threads, [&](long begin, long end) {
        for (long i = begin; i < end; ++i)
            for (Index j = 0; j < b.rows(); ++j)
                out(i, j) = (a.row(i) - b.row(j)).norm();
    });
    return out;
}

PrototypeSet compute_prototypes(const EmbeddingBatch& batch) {
    check_batch(batch);
    PrototypeSet set;
    std::vector<int> class_of_row(batch.labels.size());
    for (size_t j = 0; j < batch.labels.size(); ++j) {
        int idx = -1;
        for (size_t i = 0; i < set.class_ids.size(); ++i) {
            if (set.class_ids[i] == batch.labels[j]) { idx = static_cast<int>(i); break; }
        }
        if (idx < 0) {
            idx = static_cast<int>(set.class_ids.size());
            set.class_ids.push_back(batch.labels[j]);
        }
        class_of_row[j] = idx;
    }
    const Index n_classes = static_cast<Index>(set.class_ids.size());
    std::vector<Index> counts(set.class_ids.size(), 0);
    for (int c : class_of_row) ++counts[c];

    set.delta = Matrix::Zero(n_classes, batch.size());
    for (Index j = 0; j < batch.size(); ++j) {
        const int i = class_of_row[j];
        set.delta(i, j) = 1.0 / static_cast<double>(counts[i]);
    }
    set.prototypes = set.delta * batch.embeddings;
    return set;
}

TripletSet mine_semihard_standard(const EmbeddingBatch& batch, const TripletConfig& cfg) {
    check_batch(batch);
    if (count_distinct(batch.labels) < 2)
        throw DegenerateBatchError("semi-hard mining needs at least 2 classes");

    const Matrix dist = pairwise_distances(batch.embeddings, batch.embeddings);
    const int b = static_cast<int>(batch.size());

    TripletSet set;
    set.ref_kind = TripletRefKind::sample;
    for (int a = 0; a < b; ++a) {
        for (int p = 0; p < b; ++p) {
            if (p == a || batch.labels[p] != batch.labels[a]) continue;
            const double d_ap = dist(a, p);
            double d_an = 0.0;
            const int n = select_negative(
                b, d_ap, cfg.margin,
                [&](int cand) {
                    return batch.labels[cand] != batch.labels[a] ? dist(a, cand) : -1.0;
                },
                &d_an);
            set.triplets.push_back({a, p, n, d_ap, d_an});
        }
    }
    return set;
}

TripletSet mine_semihard_prototypical(const EmbeddingBatch& batch,
                                      const PrototypeSet& protos,
                                      const TripletConfig& cfg) {
    check_batch(batch);
    const int n_classes = static_cast<int>(protos.class_ids.size());
    if (n_classes < 2)
        throw DegenerateBatchError("prototypical mining needs at least 2 classes");

    const Matrix dist = pairwise_distances(batch.embeddings, protos.prototypes);

    TripletSet set;
    set.ref_kind = TripletRefKind::prototype;
    for (int a = 0; a < static_cast<int>(batch.size()); ++a) {
        int own = -1;
        for (int i = 0; i < n_classes; ++i) {
            if (protos.class_ids[i] == batch.labels[a]) { own = i; break; }
        }
        if (own < 0)
            throw DegenerateBatchError("anchor class missing from prototype set");
        const double d_ap = dist(a, own);
        double d_an = 0.0;
        const int n = select_negative(
            n_classes, d_ap, cfg.margin,
            [&](int cand) { return cand != own ? dist(a, cand) : -1.0; }, &d_an);
        set.triplets.push_back({a, own, n, d_ap, d_an});
    }
    return set;
}

TripletSet mine_all_standard(const EmbeddingBatch& batch, const TripletConfig& cfg) {
    (void)cfg;
    check_batch(batch);
    if (count_distinct(batch.labels) < 2)
        throw DegenerateBatchError("triplet mining needs at least 2 classes");

    const Matrix dist = pairwise_distances(batch.embeddings, batch.embeddings);
    const int b = static_cast<int>(batch.size());
    TripletSet set;
    set.ref_kind = TripletRefKind::sample;
    for (int a = 0; a < b; ++a)
        for (int p = 0; p < b; ++p) {
            if (p == a || batch.labels[p] != batch.labels[a]) continue;
            for (int n = 0; n < b; ++n) {
                if (batch.labels[n] == batch.labels[a]) continue;
                set.triplets.push_back({a, p, n, dist(a, p), dist(a, n)});
            }
        }
    return set;
}

TripletSet mine_all_prototypical(const EmbeddingBatch& batch,
                                 const PrototypeSet& protos,
                                 const TripletConfig& cfg) {
    (void)cfg;
    check_batch(batch);
    const int n_classes = static_cast<int>(protos.class_ids.size());
    if (n_classes < 2)
        throw DegenerateBatchError("prototypical mining needs at least 2 classes");

    const Matrix dist = pairwise_distances(batch.embeddings, protos.prototypes);
    TripletSet set;
    set.ref_kind = TripletRefKind::prototype;
    for (int a = 0; a < static_cast<int>(batch.size()); ++a) {
        int own = -1;
        for (int i = 0; i < n_classes; ++i)
            if (protos.class_ids[i] == batch.labels[a]) { own = i; break; }
        for (int n = 0; n < n_classes; ++n) {
            if (n == own) continue;
            set.triplets.push_back({a, own, n, dist(a, own), dist(a, n)});
        }
    }
    return set;
}

namespace {

// Unit direction (x - y)/d with the zero-vector subgradient when d < eps.
RowVector safe_direction(const RowVector& x, const RowVector& y, double d, double eps) {
    if (d < eps) return RowVector::Zero(x.cols());
    return (x - y) / d;
}

} // namespace

LossResult loss_standard(const EmbeddingBatch& batch, const TripletConfig& cfg) {
    const TripletSet mined = cfg.mining == Mining::semi_hard
                                 ? mine_semihard_standard(batch, cfg)
                                 : mine_all_standard(batch, cfg);

    LossResult result;
    result.grad = Matrix::Zero(batch.size(), batch.dim());
    if (mined.triplets.empty()) return result;

    double total = 0.0;
    for (const Triplet& t : mined.triplets) {
        const double h = hinge_triplet(t.d_ap, t.d_an, cfg.margin);
        total += h;
        if (h <= 0.0) continue;
        ++result.active_count;
        const RowVector u_ap = safe_direction(batch.embeddings.row(t.anchor),
                                              batch.embeddings.row(t.positive),
                                              t.d_ap, cfg.distance_epsilon);
        const RowVector u_an = safe_direction(batch.embeddings.row(t.anchor),
                                              batch.embeddings.row(t.negative),
                                              t.d_an, cfg.distance_epsilon);
        result.grad.row(t.anchor) += u_ap - u_an;
        result.grad.row(t.positive) -= u_ap;
        result.grad.row(t.negative) += u_an;
    }
    const double count = static_cast<double>(mined.triplets.size());
    result.loss = total / count;
    result.grad /= count;
    return result;
}

LossResult loss_prototypical(const EmbeddingBatch& batch, const TripletConfig& cfg) {
    const PrototypeSet protos = compute_prototypes(batch);
    const TripletSet mined = cfg.mining == Mining::semi_hard
                                 ? mine_semihard_prototypical(batch, protos, cfg)
                                 : mine_all_prototypical(batch, protos, cfg);

    LossResult result;
    result.grad = Matrix::Zero(batch.size(), batch.dim());
    if (mined.triplets.empty()) return result;

    Matrix proto_grad = Matrix::Zero(protos.prototypes.rows(), batch.dim());
    double total = 0.0;
    for (const Triplet& t : mined.triplets) {
        const double h = hinge_triplet(t.d_ap, t.d_an, cfg.margin);
        total += h;
        if (h <= 0.0) continue;
        ++result.active_count;
        const RowVector u_ap = safe_direction(batch.embeddings.row(t.anchor),
                                              protos.prototypes.row(t.positive),
                                              t.d_ap, cfg.distance_epsilon);
        const RowVector u_an = safe_direction(batch.embeddings.row(t.anchor),
                                              protos.prototypes.row(t.negative),
                                              t.d_an, cfg.distance_epsilon);
        result.grad.row(t.anchor) += u_ap - u_an;
        proto_grad.row(t.positive) -= u_ap;
        proto_grad.row(t.negative) += u_an;
    }
    // Chain rule through prototypes = delta * embeddings.
    result.grad += protos.delta.transpose() * proto_grad;
    const double count = static_cast<double>(mined.triplets.size());
    result.loss = total / count;
    result.grad /= count;
    return result;
}

} // namespace coverid
