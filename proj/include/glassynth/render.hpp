#pragma once

// Orthographic software renderer. Camera space: x to the right and y down in
// pixel units, z away from the camera (smaller z is nearer). Pixel (x, y) is
// sampled at its center (x + 0.5, y + 0.5). A triangle faces the camera when
// its geometric normal (v1 - v0) x (v2 - v0) has negative z.

#include "glassynth/image.hpp"
#include "glassynth/mesh.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace glassynth {

struct DirectionalLight {
    Vec3 direction{0.0, 0.0, -1.0}; // unit, from the surface towards the light
    double diffuse = 0.6;
    double specular = 0.1;
};

struct LightSetup {
    double ambient = 0.3;
    std::vector<DirectionalLight> lights{DirectionalLight{}};
    double shininess = 16.0;

    /// Throws std::invalid_argument for energies outside [0, 1], non-unit
    /// directions (tolerance 1e-9) or non-positive shininess.
    void validate() const;
};

/// Per-pixel nearest fragment. Uncovered pixels keep depth = +infinity.
struct FragmentBuffer {
    FragmentBuffer(int width, int height);

    int width;
    int height;
    std::vector<double> depth;
    std::vector<Vec3> normal;
    std::vector<Vec3> color;
    std::vector<std::uint8_t> covered;

    std::size_t index(int x, int y) const
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
    }
    std::size_t coverage_count() const;
};

constexpr double kEmptyDepth = std::numeric_limits<double>::infinity();

struct RasterOptions {
    bool cull_back_faces = true;
    // When set, a fragment survives only if it is strictly nearer than this
    // per-pixel depth (width * height entries).
    const std::vector<double>* occlusion_depth = nullptr;
};

/// Z-buffered rasterization with barycentric interpolation of depth and
/// vertex normals. Triangles are drawn in index order; a fragment replaces
/// the stored one only when strictly nearer. Shared edges follow the
/// top-left fill rule. Throws std::invalid_argument for a zero-area viewport.
FragmentBuffer rasterize(const Mesh& mesh, int width, int height, const RasterOptions& options = {});

/// Nearest depth per pixel over all triangles of `mesh` regardless of facing,
/// for use as an occluder.
std::vector<double> depth_map(const Mesh& mesh, int width, int height);

/// Phong reflectance for one fragment, each channel clamped to [0, 1]:
/// color * clamp(ambient + sum diffuse * max(0, N.L)) + sum specular * max(0, R.V)^shininess
/// with R the reflection of -L about N. Throws std::invalid_argument when
/// `normal` or `view_dir` is not unit length (tolerance 1e-6).
Vec3 shade_phong(const Vec3& normal, const Vec3& view_dir, const LightSetup& lights, const Vec3& color);

/// Direction from a fragment towards the orthographic camera.
inline const Vec3 kViewDirection{0.0, 0.0, -1.0};

struct RenderOptions {
    bool cull_back_faces = true;
    // 4x supersampled coverage on boundary pixels only.
    bool antialias_edges = false;
    // Depth-only occluder (typically the face model), drawn two-sided.
    const Mesh* occluder = nullptr;
};

struct RenderedLayer {
    RasterImage rgba;
    std::vector<std::uint8_t> mask; // 1 where alpha > 0
    bool empty_coverage = true;     // warning: nothing landed in the viewport
};

/// Transforms `mesh` by `sim`, rasterizes it, shades covered pixels and
/// returns an RGBA layer (alpha 255 on coverage, 0 elsewhere unless edge
/// antialiasing is on).
RenderedLayer render_layer(const Mesh& mesh, const RigidSimilarity& sim, const LightSetup& lights,
                           int width, int height, const RenderOptions& options = {});

} // namespace glassynth
