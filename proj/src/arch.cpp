#include "glassynth/arch.hpp"

#include <cstdio>
#include <stdexcept>

namespace glassynth {

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

} // namespace

void LayerSpec::validate() const
{
    if (kernel < 1 || stride < 1 || channels < 1 || repeats < 1)
        throw std::invalid_argument("layer spec needs kernel, stride, channels and repeats >= 1");
}

TensorShape layer_output_shape(const TensorShape& input, const LayerSpec& spec)
{
    spec.validate();
    if (spec.kind == LayerKind::GlobalPool)
        return {1, 1, input.channels};
    // Residual stages stride once at entry, then keep the shape for the identity shortcuts.
    return {ceil_div(input.height, spec.stride), ceil_div(input.width, spec.stride), spec.channels};
}

int weight_layer_count(const LayerSpec& spec)
{
    switch (spec.kind) {
    case LayerKind::Conv: return spec.repeats;
    case LayerKind::ResidualUnit: return 2 * spec.repeats;
    case LayerKind::GlobalPool: return 0;
    }
    return 0;
}

std::vector<NamedLayer> resnet22_layers()
{
    // Conv4.x's second conv lists 226 channels in the source table; the
    // identity shortcut needs 256.
    return {
        {"Conv1.x", {LayerKind::Conv, 5, 32, 2, 1}},
        {"Conv2.x", {LayerKind::Conv, 3, 64, 1, 1}},
        {"Conv3.x", {LayerKind::ResidualUnit, 3, 128, 2, 3}},
        {"Conv4.x", {LayerKind::ResidualUnit, 3, 256, 2, 4}},
        {"Conv5.x", {LayerKind::ResidualUnit, 3, 512, 2, 3}},
        {"Global Pooling", {LayerKind::GlobalPool, 1, 512, 1, 1}},
    };
}

std::vector<ShapeStep> resnet22_shape_trace()
{
    std::vector<ShapeStep> trace;
    TensorShape shape = kResnet22Input;
    for (const auto& layer : resnet22_layers()) {
        shape = layer_output_shape(shape, layer.spec);
        trace.push_back({layer.name, shape});
    }
    return trace;
}

int resnet22_weight_layers()
{
    int total = 0;
    for (const auto& layer : resnet22_layers())
        total += weight_layer_count(layer.spec);
    return total;
}

std::string format_shape_table(const std::vector<ShapeStep>& trace)
{
    std::string out = "layer           output\n";
    char line[96];
    std::snprintf(line, sizeof line, "%-15s %dx%dx%d\n", "input", kResnet22Input.height, kResnet22Input.width,
                  kResnet22Input.channels);
    out += line;
    for (const auto& step : trace) {
        std::snprintf(line, sizeof line, "%-15s %dx%dx%d\n", step.name.c_str(), step.output.height,
                      step.output.width, step.output.channels);
        out += line;
    }
    return out;
}

} // namespace glassynth
