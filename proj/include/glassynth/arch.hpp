#pragma once

// Symbolic shape arithmetic for the 22-layer residual face network.

#include <string>
#include <vector>

namespace glassynth {

enum class LayerKind { Conv, ResidualUnit, GlobalPool };

struct LayerSpec {
    LayerKind kind = LayerKind::Conv;
    int kernel = 3;
    int channels = 1;
    int stride = 1;  // applied once, at the entry of the stage
    int repeats = 1; // conv layers, or residual units (2 convs each)

    void validate() const; // throws std::invalid_argument
};

struct TensorShape {
    int height = 0;
    int width = 0;
    int channels = 0;

    bool operator==(const TensorShape&) const = default;
};

/// Same padding: H' = ceil(H / stride), W' = ceil(W / stride), C' = channels.
/// Global pooling keeps the channel count and collapses to 1x1.
TensorShape layer_output_shape(const TensorShape& input, const LayerSpec& spec);

/// Weight layers contributed by `spec`: repeats for conv, 2 * repeats for
/// residual stages, 0 for pooling.
int weight_layer_count(const LayerSpec& spec);

struct NamedLayer {
    std::string name;
    LayerSpec spec;
};

/// Conv1 [5x5, 32] S2, Conv2 [3x3, 64] S1, Conv3.x 3 units of 128 S2,
/// Conv4.x 4 units of 256 S2, Conv5.x 3 units of 512 S2, global pooling.
std::vector<NamedLayer> resnet22_layers();

inline constexpr TensorShape kResnet22Input{120, 120, 3};

struct ShapeStep {
    std::string name;
    TensorShape output;
};

/// Output shape after each stage of resnet22_layers() starting from 120x120x3.
std::vector<ShapeStep> resnet22_shape_trace();

int resnet22_weight_layers();

std::string format_shape_table(const std::vector<ShapeStep>& trace);

} // namespace glassynth
