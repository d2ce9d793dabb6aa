#include "coverid/catalog.hpp"

#include <cstdio>
#include <fstream>
#include <unordered_set>

#include "coverid/errors.hpp"

namespace coverid {

Catalog::Catalog(std::vector<TrackEntry> tracks) : tracks_(std::move(tracks)) {
    for (size_t t = 0; t < tracks_.size(); ++t) {
        const TrackEntry& e = tracks_[t];
        if (!track_index_.emplace(e.track_id, static_cast<int>(t)).second)
            throw DuplicateTrackError("duplicate track id: " + e.track_id);
        auto [it, inserted] =
            work_index_.emplace(e.work_id, static_cast<int>(work_ids_.size()));
        if (inserted) {
            work_ids_.push_back(e.work_id);
            work_members_.emplace_back();
        }
        work_members_[it->second].push_back(static_cast<int>(t));
    }
}

int Catalog::track_index(const std::string& track_id) const {
    auto it = track_index_.find(track_id);
    return it == track_index_.end() ? -1 : it->second;
}

int Catalog::work_index(const std::string& work_id) const {
    auto it = work_index_.find(work_id);
    return it == work_index_.end() ? -1 : it->second;
}

Catalog filter_by_cover_count(const Catalog& c, int min_covers, int max_covers) {
    if (min_covers > max_covers)
        throw InvalidConfigError("min_covers must be <= max_covers");
    std::vector<TrackEntry> kept;
    for (size_t w = 0; w < c.n_works(); ++w) {
        const auto& members = c.work_members()[w];
        const int count = static_cast<int>(members.size());
        if (count < min_covers || count > max_covers) continue;
        for (int t : members) kept.push_back(c.tracks()[t]);
    }
    return Catalog(std::move(kept));
}

std::vector<std::string> query_reference_split(const Catalog& c, std::mt19937_64& rng) {
    std::vector<std::string> queries;
    queries.reserve(c.n_works());
    for (size_t w = 0; w < c.n_works(); ++w) {
        const auto& members = c.work_members()[w];
        std::uniform_int_distribution<size_t> pick(0, members.size() - 1);
        queries.push_back(c.tracks()[members[pick(rng)]].track_id);
    }
    return queries;
}

SyntheticResult generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n_works < 2) throw InvalidConfigError("synthetic catalog needs >= 2 works");
    if (spec.feature_dim < 1) throw InvalidConfigError("feature_dim must be positive");
    if (spec.cover_noise < 0.0) throw InvalidConfigError("cover_noise must be >= 0");

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> archetype_dist(0.0, spec.work_separation);
    std::normal_distribution<double> noise_dist(0.0, spec.cover_noise);
    std::discrete_distribution<int> count_dist(spec.cover_weights.begin(),
                                               spec.cover_weights.end());

    std::vector<TrackEntry> tracks;
    std::vector<RowVector> rows;
    char buf[64];
    for (int w = 0; w < spec.n_works; ++w) {
        std::snprintf(buf, sizeof(buf), "w%04d", w);
        const std::string work_id = buf;
        const int covers = 2 + count_dist(rng);

        RowVector archetype(spec.feature_dim);
        for (int i = 0; i < spec.feature_dim; ++i) archetype(i) = archetype_dist(rng);

        for (int cvr = 0; cvr < covers; ++cvr) {
            RowVector feat = archetype;
            if (spec.cover_noise > 0.0)
                for (int i = 0; i < spec.feature_dim; ++i) feat(i) += noise_dist(rng);
            if (spec.transposition_max > 0) {
                std::uniform_int_distribution<int> shift_dist(-spec.transposition_max,
                                                              spec.transposition_max);
                const int shift = shift_dist(rng);
                RowVector shifted(spec.feature_dim);
                for (int i = 0; i < spec.feature_dim; ++i) {
                    int j = (i + shift) % spec.feature_dim;
                    if (j < 0) j += spec.feature_dim;
                    shifted(j) = feat(i);
                }
                feat = shifted;
            }
            std::snprintf(buf, sizeof(buf), "%s_c%d", work_id.c_str(), cvr + 1);
            const std::string track_id = buf;
            tracks.push_back({track_id, work_id, "features/" + track_id + ".sal"});
            rows.push_back(std::move(feat));
        }
    }

    SyntheticResult result{Catalog(std::move(tracks)), Matrix(rows.size(), spec.feature_dim)};
    for (size_t r = 0; r < rows.size(); ++r) result.features.row(r) = rows[r];
    return result;
}

Catalog load_catalog(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open catalog: " + path.string());

    std::string line;
    if (!std::getline(in, line))
        throw ParseError(path.string() + ":1: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "track_id,work_id,path")
        throw ParseError(path.string() + ":1: expected header 'track_id,work_id,path'");

    std::vector<TrackEntry> tracks;
    std::unordered_set<std::string> seen;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const size_t c1 = line.find(',');
        const size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos ||
            line.find(',', c2 + 1) != std::string::npos) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": malformed row, expected track_id,work_id,path");
        }
        TrackEntry e{line.substr(0, c1), line.substr(c1 + 1, c2 - c1 - 1),
                     line.substr(c2 + 1)};
        if (e.track_id.empty() || e.work_id.empty())
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": empty track or work id");
        if (!seen.emplace(e.track_id).second)
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": duplicate track id " + e.track_id);
        tracks.push_back(std::move(e));
    }
    return Catalog(std::move(tracks));
}

void save_catalog(const std::filesystem::path& path, const Catalog& c) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "track_id,work_id,path\n";
    for (const TrackEntry& e : c.tracks())
        out << e.track_id << ',' << e.work_id << ',' << e.path << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace coverid
