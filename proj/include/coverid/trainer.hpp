#ifndef COVERID_TRAINER_HPP
#define COVERID_TRAINER_HPP

#include <filesystem>
#include <random>
#include <vector>

#include "coverid/catalog.hpp"
#include "coverid/encoder.hpp"
#include "coverid/metric.hpp"
#include "coverid/types.hpp"

namespace coverid {

enum class LossKind { standard, prototypical };

struct TrainConfig {
    int batch_classes = 8;     // P
    int samples_per_class = 2; // K (>= 2 for the standard loss)
    int steps = 1000;
    double learning_rate = 0.05;
    double momentum = 0.9;
    uint64_t seed = 0;
    LossKind loss_kind = LossKind::prototypical;
    TripletConfig triplet;
};

// Feature rows with integer class labels (work indices), the trainer's view
// of a catalog.
struct TrainingSet {
    Matrix features;          // n_tracks x input_dim
    std::vector<int> labels;  // work index per row
    int n_classes = 0;
};

TrainingSet make_training_set(const Catalog& catalog, Matrix features);

struct Batch {
    Matrix features;
    std::vector<int> labels;
};

// P distinct classes with at least K samples, then K distinct samples per
// class, all uniform without replacement. Deterministic given the rng state.
Batch sample_batch(const TrainingSet& ts, int batch_classes, int samples_per_class,
                   std::mt19937_64& rng);

struct TrainStepLog {
    int step;
    double loss;
    long active_count;
};

struct TrainResult {
    EncoderParams params;
    std::vector<TrainStepLog> log;
};

// Seeded init, then `steps` iterations of sample -> forward -> triplet loss
// -> backward -> momentum gradient descent. Raises DivergedTrainingError as
// soon as a non-finite loss or parameter appears.
TrainResult train(const TrainingSet& ts, const EncoderSpec& spec, const TrainConfig& cfg);

// CSV: step,loss,active_count
void write_training_log_csv(const std::filesystem::path& path,
                            const std::vector<TrainStepLog>& log);

} // namespace coverid

#endif
