#ifndef COVERID_CATALOG_HPP
#define COVERID_CATALOG_HPP

#include <array>
#include <filesystem>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "coverid/types.hpp"

namespace coverid {

struct TrackEntry {
    std::string track_id;
    std::string work_id;
    std::string path; // feature locator, relative to the catalog file
};

// Immutable track list plus a works index in first-appearance order.
class Catalog {
public:
    Catalog() = default;
    explicit Catalog(std::vector<TrackEntry> tracks);

    const std::vector<TrackEntry>& tracks() const { return tracks_; }
    const std::vector<std::string>& work_ids() const { return work_ids_; }
    const std::vector<std::vector<int>>& work_members() const { return work_members_; }

    size_t n_tracks() const { return tracks_.size(); }
    size_t n_works() const { return work_ids_.size(); }

    int track_index(const std::string& track_id) const; // -1 if absent
    int work_index(const std::string& work_id) const;   // -1 if absent

private:
    std::vector<TrackEntry> tracks_;
    std::vector<std::string> work_ids_;            // first-appearance order
    std::vector<std::vector<int>> work_members_;   // indices into tracks_
    std::unordered_map<std::string, int> track_index_;
    std::unordered_map<std::string, int> work_index_;
};

// Keeps only works whose cover count lies in [min_covers, max_covers].
Catalog filter_by_cover_count(const Catalog& c, int min_covers, int max_covers);

// One uniformly chosen query track per work, in work order. The reference
// set stays the whole catalog; self pairs are discarded at lookup time.
std::vector<std::string> query_reference_split(const Catalog& c, std::mt19937_64& rng);

struct SyntheticSpec {
    int n_works = 200;
    std::array<double, 3> cover_weights{1.0, 1.0, 1.0}; // counts 2, 3, 4
    int feature_dim = 32;
    double work_separation = 1.0;
    double cover_noise = 0.1;
    int transposition_max = 0; // circular feature shift range
    uint64_t seed = 0;
};

struct SyntheticResult {
    Catalog catalog;
    Matrix features; // n_tracks x feature_dim, rows aligned with catalog order
};

// One Gaussian archetype per work (scale = work_separation); each cover is
// the archetype plus Gaussian noise and a random circular shift of up to
// transposition_max positions. Fully determined by the seed.
SyntheticResult generate_synthetic(const SyntheticSpec& spec);

// Catalog CSV: header "track_id,work_id,path", UTF-8, no embedded commas in
// ids. Parse errors name the offending line.
Catalog load_catalog(const std::filesystem::path& path);
void save_catalog(const std::filesystem::path& path, const Catalog& c);

} // namespace coverid

#endif
