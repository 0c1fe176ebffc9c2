#pragma once

#include "glassynth/fit.hpp"
#include "glassynth/image.hpp"
#include "glassynth/manifest.hpp"
#include "glassynth/mesh.hpp"
#include "glassynth/render.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace glassynth {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Randomization ranges and assets for eyeglass synthesis.
///
/// Pitch perturbation is in degrees, vertical shift in image pixels
/// (positive moves the frame down). Light directions are drawn uniformly
/// from a cone of `light_cone_degrees` around the camera axis.
struct SynthConfig {
    std::vector<Mesh> eyeglass_assets;
    Interval pitch_perturb{-1.5, 0.8};
    Interval vshift{1.0, 2.0};
    Interval ambient{0.2, 0.4};
    Interval diffuse{0.4, 0.8};
    Interval specular{0.0, 0.3};
    double light_cone_degrees = 30.0;
    double shininess = 16.0;
    int light_count = 1;
    std::uint64_t master_seed = 0;
    bool antialias_edges = false;
    bool occlude_with_face = true;

    /// Config populated with the four procedural frame styles.
    static SynthConfig with_default_assets();

    /// Throws std::invalid_argument on empty assets, inverted ranges or
    /// energies outside [0, 1].
    void validate() const;
};

struct RandomDraw {
    std::size_t asset_index = 0;
    double pitch_delta = 0.0; // degrees
    double vshift = 0.0;      // pixels
    LightSetup lights;
    std::uint64_t seed = 0;   // per-image seed the draw came from

    bool operator==(const RandomDraw& other) const;
};

/// Per-image seed: a splittable hash of (master_seed, image_index).
std::uint64_t image_seed(std::uint64_t master_seed, std::uint64_t image_index);

/// Draws asset, pitch perturbation, vertical shift and lighting for one image.
/// Depends only on (config.master_seed, image_index).
RandomDraw sample_randomness(const SynthConfig& config, std::uint64_t image_index);

/// Rotates the posed eyeglasses by `pitch_delta_degrees` about the camera x
/// axis through the posed image of `pivot` (model space, normally the glass
/// anchor centroid), then moves them `vshift` pixels along +y.
RigidSimilarity perturb_fit(const RigidSimilarity& sim, double pitch_delta_degrees, double vshift,
                            const Vec3& pivot);

/// out = a * layer + (1 - a) * base with a = alpha / 255, rounded half away
/// from zero. Pixels outside `mask` copy the base. Throws
/// std::invalid_argument on size or channel mismatches.
RasterImage blend(const RasterImage& base, const RasterImage& layer, std::span<const std::uint8_t> mask);

struct SynthRecord {
    std::string source_path;
    std::string output_path;
    std::size_t asset_index = 0;
    double pitch_delta = 0.0;
    double vshift = 0.0;
    LightSetup lights;
    double fit_residual = 0.0;
    std::uint64_t seed = 0;
    bool empty_coverage = false;
};

/// One tab-separated line (no trailing newline). Columns: source, output,
/// asset, pitch, vshift, ambient, shininess, lights, residual, seed, empty.
/// `lights` is `dx,dy,dz,diffuse,specular` per light joined by ';'.
std::string format_synth_record(const SynthRecord& record);
SynthRecord parse_synth_record(const std::string& line);

struct SynthResult {
    RasterImage image;
    SynthRecord record;
};

/// sample_randomness -> fit_eyeglass -> perturb_fit -> render_layer -> blend.
/// `face` must be in the image's camera space and carry one anchor per
/// asset anchor. With empty coverage the output equals `image` and the record
/// is flagged.
SynthResult synthesize_one(const RasterImage& image, const Mesh& face, const SynthConfig& config,
                           std::uint64_t image_index);

/// Runs task(0..count-1) on `workers` threads. Tasks must write disjoint
/// outputs. The exception of the lowest failing index is rethrown.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& task);

/// Originals followed by their synthesized counterparts (flag G). The
/// synthesized manifest is either empty or 1:1 with the originals in order
/// with equal identities; anything else throws InconsistentManifest.
Manifest build_mixture_manifest(const Manifest& original, const Manifest& synthesized);

/// Records in a mixture built from `originals` images with one synthetic image each.
constexpr std::size_t mixture_record_count(std::size_t originals) { return 2 * originals; }

} // namespace glassynth
