#pragma once

// Procedural thick-framed eyeglass meshes.
//
// Model frame: millimetres, x towards the wearer's left (image right), y down,
// z from the frame front backwards to the ears. The frame front occupies
// z in [0, depth]; temple arms run back to z ~ 100.
//
// Anchor order, shared with annotated face models:
//   0 left temple tip      (where the arm rests on the left ear)
//   1 right temple tip
//   2 left eye point       (behind the left lens center, at eye depth)
//   3 right eye point
//   4 nose bridge point    (behind the bridge, where it rests on the nose)
// Anchors are standalone vertices; no triangle references them.

#include "glassynth/mesh.hpp"

#include <string_view>
#include <vector>

namespace glassynth {

enum class FrameStyle { Rectangular, Rounded, Browline, Oversized };

inline constexpr int kAnchorCount = 5;

std::string_view frame_style_name(FrameStyle style);

Mesh make_eyeglass_asset(FrameStyle style);

/// All four styles in enum order.
std::vector<Mesh> default_eyeglass_assets();

} // namespace glassynth
