#pragma once

// Gallery/probe protocols I-IV and verification / identification metrics.
//
//   I    gallery 2 NG, probe 2 NG per identity
//   II   gallery 2 G,  probe 2 G
//   III  gallery 2 NG, probe 2 G
//   IV   gallery 2 NG + 2 G, probe 2 NG + 2 G
//
// In Shared mode (default) every eligible identity contributes 2 G + 2 NG
// images and protocols I, II and IV use the same images on both sides;
// comparisons of an image with itself are excluded from every metric.
// Disjoint mode draws separate gallery and probe images and needs 4 G + 4 NG.

#include "glassynth/manifest.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace glassynth {

enum class ProtocolId { I, II, III, IV };
enum class SplitMode { Shared, Disjoint };

std::string_view protocol_name(ProtocolId id);
ProtocolId parse_protocol(std::string_view text); // throws std::invalid_argument

struct ProtocolSpec {
    ProtocolId id;
    int gallery_ng;
    int gallery_g;
    int probe_ng;
    int probe_g;

    static ProtocolSpec of(ProtocolId id);
};

struct SplitEntry {
    std::string path;
    std::string identity;
    GlassFlag flag = GlassFlag::NoGlasses;

    bool operator==(const SplitEntry&) const = default;
};

struct EvalSplit {
    ProtocolId protocol = ProtocolId::I;
    SplitMode mode = SplitMode::Shared;
    std::vector<SplitEntry> gallery;
    std::vector<SplitEntry> probe;
    std::vector<std::string> excluded_identities; // ineligible, sorted

    std::size_t identity_count() const;
    std::size_t unique_images() const;
    // Gallery and probe are the same list (self-comparisons excluded).
    bool shared_sides() const { return gallery == probe; }
};

/// Seeded per-identity selection. Identities lacking the required G / NG
/// images are excluded and listed. Throws EmptyProtocol when none remain.
EvalSplit build_split(const Manifest& manifest, ProtocolId protocol, std::uint64_t seed,
                      SplitMode mode = SplitMode::Shared);

using EmbeddingLookup = std::unordered_map<std::string, Eigen::VectorXd>;

/// Probe-by-gallery cosine similarities.
struct ScoreMatrix {
    std::size_t rows = 0; // probes
    std::size_t cols = 0; // gallery
    std::vector<double> values;
    std::vector<std::uint8_t> excluded; // 1 where probe and gallery are the same image

    double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
    bool is_excluded(std::size_t i, std::size_t j) const { return excluded[i * cols + j] != 0; }
};

/// matrix(i, j) = cosine(probe_i, gallery_j). Throws LookupError naming the
/// first image without an embedding.
ScoreMatrix score_matrix(std::span<const SplitEntry> gallery, std::span<const SplitEntry> probe,
                         const EmbeddingLookup& embeddings);

struct ScoreLists {
    std::vector<double> genuine;
    std::vector<double> impostor;
};

/// Same-identity scores are genuine, others impostor. Excluded entries are
/// skipped; when both sides are the same list each unordered pair counts once.
ScoreLists split_scores(const ScoreMatrix& matrix, std::span<const SplitEntry> gallery,
                        std::span<const SplitEntry> probe);

struct OperatingPoint {
    double far_target = 0.0;
    double threshold = 0.0;  // accept when score >= threshold
    double tpr = 0.0;
    double far = 0.0;        // achieved false accept rate
    bool unreachable = false;       // even the top impostor score exceeds the target
    bool insufficient_data = false; // fewer than 1 / far_target impostor scores
};

inline constexpr std::array<double, 3> kFarTargets{1e-4, 1e-5, 1e-6};

/// For each target, threshold = smallest observed score t with
/// #{impostor >= t} / #impostor <= target; TPR = #{genuine >= t} / #genuine.
/// When the top impostor score alone violates the target the threshold is
/// the next double above it and the point is flagged unreachable.
/// Throws std::invalid_argument for empty lists or targets outside (0, 1).
std::vector<OperatingPoint> verification_rates(std::span<const double> genuine,
                                               std::span<const double> impostor,
                                               std::span<const double> far_targets);

/// Fraction of probes whose best non-excluded gallery entry shares their
/// identity; ties go to the lower gallery index. Probes without any
/// candidate are skipped.
double rank1(const ScoreMatrix& matrix, std::span<const std::string> probe_identities,
             std::span<const std::string> gallery_identities);

struct RocPoint {
    double far;
    double tpr;
};

/// One point per distinct impostor score s, with acceptance just above s
/// (FAR = #{impostor > s} / n, TPR = #{genuine > s} / m), plus (0, 0) and
/// (1, 1). Sorted by FAR then TPR ascending.
std::vector<RocPoint> roc_points(std::span<const double> genuine, std::span<const double> impostor);

/// Writes roc_points as `FAR,TPR` lines. Throws IoError.
void roc_export(std::span<const double> genuine, std::span<const double> impostor,
                const std::filesystem::path& path);
std::vector<RocPoint> read_roc(const std::filesystem::path& path);

struct EvalReport {
    ProtocolId protocol = ProtocolId::I;
    SplitMode mode = SplitMode::Shared;
    std::size_t identities = 0;
    std::size_t gallery_size = 0;
    std::size_t probe_size = 0;
    std::size_t genuine_count = 0;
    std::size_t impostor_count = 0;
    std::vector<OperatingPoint> operating_points; // kFarTargets order
    double rank1 = 0.0;
    std::vector<RocPoint> roc;
    std::vector<std::string> excluded_identities;
};

EvalReport evaluate(const EvalSplit& split, const EmbeddingLookup& embeddings);

/// Fixed-order `key: value` block.
std::string format_report(const EvalReport& report);
/// `key<TAB>value` lines for scripting.
std::string format_report_records(const EvalReport& report);

} // namespace glassynth
