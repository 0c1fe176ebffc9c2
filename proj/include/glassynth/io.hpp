#pragma once

// Mesh, embedding and configuration files.
//
// Mesh: Wavefront-style text with `v x y z` and `f a b c` records (1-based,
// negative indices count from the end, `a/b/c` forms keep the vertex part).
// Other records are ignored. Anchors live in a separate file with one
// 1-based vertex index per line.
//
// Embeddings: "EMB1", uint32 dimension, uint64 count, then count rows of
// little-endian float32. Row k belongs to record k of a sidecar manifest.
//
// Config: `key = value` lines, '#' starts a comment.

#include "glassynth/manifest.hpp"
#include "glassynth/mesh.hpp"
#include "glassynth/schedule.hpp"
#include "glassynth/synth.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <unordered_map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace glassynth {

/// Throws ParseError on malformed records, out-of-range or zero indices and
/// non-triangular faces; IoError when a file (including the anchor file) is missing.
Mesh parse_mesh(std::string_view obj_text, std::string_view anchor_text, const std::string& source = "<mesh>");
Mesh load_mesh(const std::filesystem::path& obj_path, const std::filesystem::path& anchor_path);

std::string format_mesh_obj(const Mesh& mesh);
std::string format_anchors(const Mesh& mesh);
void save_mesh(const Mesh& mesh, const std::filesystem::path& obj_path, const std::filesystem::path& anchor_path);

struct EmbeddingMatrix {
    int dimension = 0;
    std::vector<float> rows; // count * dimension, row-major

    std::size_t count() const { return dimension == 0 ? 0 : rows.size() / static_cast<std::size_t>(dimension); }
    Eigen::VectorXd row(std::size_t k) const;
};

void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);

/// Pairs embedding rows with manifest records by position; the counts must
/// agree (InconsistentManifest otherwise).
std::unordered_map<std::string, Eigen::VectorXd> embedding_lookup(const EmbeddingMatrix& matrix,
                                                                  const Manifest& manifest);

class Config {
public:
    static Config parse(std::string_view text, const std::string& source = "<config>");
    static Config load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::optional<std::string> get(const std::string& key) const;
    double number(const std::string& key, double fallback) const;
    std::uint64_t integer(const std::string& key, std::uint64_t fallback) const;
    bool flag(const std::string& key, bool fallback) const;

    /// Throws DataError naming the first key outside `allowed`.
    void reject_unknown(std::span<const std::string_view> allowed) const;
    /// Throws DataError naming the first missing key.
    void require(std::span<const std::string_view> required) const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::string source_;
    std::map<std::string, std::string> values_;
};

/// Keys understood by apply_synth_config.
std::span<const std::string_view> synth_config_keys();
/// Overrides ranges and lighting of `config` from keys such as pitch_min,
/// pitch_max, vshift_min, ambient_max, light_count, antialias. Validates the result.
void apply_synth_config(const Config& source, SynthConfig& config);

std::span<const std::string_view> schedule_config_keys();
void apply_schedule_config(const Config& source, SamplerSchedule& schedule);

} // namespace glassynth
