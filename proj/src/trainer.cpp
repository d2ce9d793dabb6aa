#include "coverid/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "coverid/errors.hpp"

namespace coverid {

TrainingSet make_training_set(const Catalog& catalog, Matrix features) {
    if (static_cast<size_t>(features.rows()) != catalog.n_tracks())
        throw ShapeMismatchError("feature rows do not match catalog tracks");
    TrainingSet ts;
    ts.features = std::move(features);
    ts.labels.resize(catalog.n_tracks());
    for (size_t w = 0; w < catalog.n_works(); ++w)
        for (int t : catalog.work_members()[w]) ts.labels[t] = static_cast<int>(w);
    ts.n_classes = static_cast<int>(catalog.n_works());
    return ts;
}

namespace {

// First `take` entries of a seeded partial Fisher-Yates shuffle.
std::vector<int> draw_without_replacement(std::vector<int> pool, int take,
                                          std::mt19937_64& rng) {
    for (int i = 0; i < take; ++i) {
        std::uniform_int_distribution<int> pick(i, static_cast<int>(pool.size()) - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(take);
    return pool;
}

} // namespace

Batch sample_batch(const TrainingSet& ts, int batch_classes, int samples_per_class,
                   std::mt19937_64& rng) {
    if (batch_classes < 2)
        throw InvalidConfigError("batch_classes must be >= 2");
    if (samples_per_class < 1)
        throw InvalidConfigError("samples_per_class must be >= 1");

    std::vector<std::vector<int>> members(ts.n_classes);
    for (size_t r = 0; r < ts.labels.size(); ++r)
        members[ts.labels[r]].push_back(static_cast<int>(r));

    std::vector<int> eligible;
    for (int c = 0; c < ts.n_classes; ++c)
        if (static_cast<int>(members[c].size()) >= samples_per_class)
            eligible.push_back(c);
    if (static_cast<int>(eligible.size()) < batch_classes)
        throw DegenerateCatalogError("not enough classes with >= K samples");

    const std::vector<int> classes =
        draw_without_replacement(eligible, batch_classes, rng);

    Batch batch;
    batch.features.resize(static_cast<Index>(batch_classes) * samples_per_class,
                          ts.features.cols());
    batch.labels.reserve(batch.features.rows());
    Index row = 0;
    for (int c : classes) {
        const std::vector<int> chosen =
            draw_without_replacement(members[c], samples_per_class, rng);
        for (int t : chosen) {
            batch.features.row(row++) = ts.features.row(t);
            batch.labels.push_back(ts.labels[t]);
        }
    }
    return batch;
}

TrainResult train(const TrainingSet& ts, const EncoderSpec& spec, const TrainConfig& cfg) {
    if (cfg.loss_kind == LossKind::standard && cfg.samples_per_class < 2)
        throw InvalidConfigError("standard loss requires samples_per_class >= 2");
    if (cfg.steps < 0) throw InvalidConfigError("steps must be >= 0");
    if (cfg.momentum < 0.0 || cfg.momentum >= 1.0)
        throw InvalidConfigError("momentum must lie in [0, 1)");

    std::mt19937_64 rng(cfg.seed);
    TrainResult result;
    result.params = init_params(spec, rng);

    std::vector<Matrix> vel_w;
    std::vector<Vector> vel_b;
    for (const auto& w : result.params.weights) vel_w.push_back(Matrix::Zero(w.rows(), w.cols()));
    for (const auto& b : result.params.biases) vel_b.push_back(Vector::Zero(b.size()));

    for (int step = 0; step < cfg.steps; ++step) {
        Batch batch = sample_batch(ts, cfg.batch_classes, cfg.samples_per_class, rng);
        EmbeddingBatch emb{encoder_forward(spec, result.params, batch.features),
                           batch.labels};
        const LossResult loss = cfg.loss_kind == LossKind::standard
                                    ? loss_standard(emb, cfg.triplet)
                                    : loss_prototypical(emb, cfg.triplet);
        if (!std::isfinite(loss.loss)) throw DivergedTrainingError(step);

        const ParamGrads grads =
            encoder_backward(spec, result.params, batch.features, loss.grad);
        for (size_t l = 0; l < result.params.weights.size(); ++l) {
            vel_w[l] = cfg.momentum * vel_w[l] - cfg.learning_rate * grads.d_weights[l];
            vel_b[l] = cfg.momentum * vel_b[l] - cfg.learning_rate * grads.d_biases[l];
            result.params.weights[l] += vel_w[l];
            result.params.biases[l] += vel_b[l];
        }
        if (!result.params.all_finite()) throw DivergedTrainingError(step);
        result.log.push_back({step, loss.loss, loss.active_count});
    }
    return result;
}

void write_training_log_csv(const std::filesystem::path& path,
                            const std::vector<TrainStepLog>& log) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "step,loss,active_count\n";
    char buf[64];
    for (const TrainStepLog& row : log) {
        std::snprintf(buf, sizeof(buf), "%.17g", row.loss);
        out << row.step << ',' << buf << ',' << row.active_count << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace coverid
