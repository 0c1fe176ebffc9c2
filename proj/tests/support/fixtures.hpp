#pragma once

// Shared scenes for unit and acceptance tests.

#include "glassynth/image.hpp"
#include "glassynth/mesh.hpp"
#include "glassynth/synth.hpp"

#include <filesystem>
#include <string>

namespace glassynth::testing {

inline constexpr int kSceneSize = 160;

/// Pose that places a default eyeglass asset on the fixture face.
RigidSimilarity fixture_glass_pose();

/// Closed ellipsoid head in camera space (kSceneSize pixels), outward
/// winding, with five isolated anchor vertices that match the asset anchor
/// order under fixture_glass_pose() applied to the rectangular frame.
Mesh make_face_fixture();

/// Smooth deterministic RGB portrait background.
RasterImage make_base_image(int width = kSceneSize, int height = kSceneSize);

/// Renderer golden scenes 0..2 composited over make_base_image():
///   0 face model alone, default lighting
///   1 rectangular frame on the face, face as occluder
///   2 oversized frame, two lights, edge antialiasing, pitched down
inline constexpr int kGoldenSceneCount = 3;
RasterImage render_golden_scene(int index);
std::string golden_scene_name(int index);

/// Synthesis config whose ranges are collapsed to single points.
SynthConfig collapsed_synth_config();

std::filesystem::path data_dir();

/// Compares `image` with data/golden/<name>. When GLASSYNTH_UPDATE_GOLDENS is
/// set the file is rewritten first. Returns false (with a message) on
/// mismatch or a missing golden.
bool matches_golden(const RasterImage& image, const std::string& name, std::string* message = nullptr);

} // namespace glassynth::testing
