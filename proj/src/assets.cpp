#include "glassynth/assets.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <functional>
#include <numbers>

namespace glassynth {

namespace {

struct FrameShape {
    double half_width;  // lens opening, x
    double half_height; // lens opening, y
    double exponent;    // superellipse exponent; 2 is an ellipse
    double depth;       // frame front thickness along z
    double bridge_gap;  // distance between the two lens openings
    // Rim width as a function of the loop angle (y < 0 is the top of the lens).
    std::function<double(double)> rim_width;
};

FrameShape shape_for(FrameStyle style)
{
    switch (style) {
    case FrameStyle::Rectangular:
        return {25.0, 17.0, 8.0, 4.0, 14.0, [](double) { return 3.5; }};
    case FrameStyle::Rounded:
        return {23.0, 21.0, 2.0, 4.0, 16.0, [](double) { return 3.0; }};
    case FrameStyle::Browline:
        return {25.0, 18.0, 5.0, 4.5, 14.0, [](double t) {
                    const double top = std::max(0.0, -std::sin(t));
                    return 1.8 + 4.5 * top * top;
                }};
    case FrameStyle::Oversized:
        return {30.0, 26.0, 4.0, 4.0, 12.0, [](double) { return 4.0; }};
    }
    return {25.0, 17.0, 8.0, 4.0, 14.0, [](double) { return 3.5; }};
}

class MeshBuilder {
public:
    int add_vertex(const Vec3& v)
    {
        mesh.vertices.push_back(v);
        return static_cast<int>(mesh.vertices.size() - 1);
    }

    // Two triangles over the loop a-b-c-d, wound so the normal points along `outward`.
    void add_quad(int a, int b, int c, int d, const Vec3& outward)
    {
        const Vec3& pa = mesh.vertices[static_cast<std::size_t>(a)];
        const Vec3& pb = mesh.vertices[static_cast<std::size_t>(b)];
        const Vec3& pc = mesh.vertices[static_cast<std::size_t>(c)];
        if ((pb - pa).cross(pc - pa).dot(outward) >= 0.0) {
            mesh.triangles.push_back({a, b, c});
            mesh.triangles.push_back({a, c, d});
        } else {
            mesh.triangles.push_back({a, c, b});
            mesh.triangles.push_back({a, d, c});
        }
    }

    // Rectangular tube along `path` with cross-section `across` x `up_size`.
    void sweep_box(const std::vector<Vec3>& path, const Vec3& up, double up_size, double across_size)
    {
        std::vector<std::array<int, 4>> rings;
        std::vector<std::array<Vec3, 4>> offsets;
        for (std::size_t i = 0; i < path.size(); ++i) {
            const Vec3 prev = path[i == 0 ? 0 : i - 1];
            const Vec3 next = path[i + 1 < path.size() ? i + 1 : i];
            const Vec3 tangent = (next - prev).normalized();
            const Vec3 side = tangent.cross(up).normalized();
            const Vec3 u = side.cross(tangent).normalized();
            const std::array<Vec3, 4> off{0.5 * (u * up_size + side * across_size),
                                          0.5 * (u * up_size - side * across_size),
                                          0.5 * (-u * up_size - side * across_size),
                                          0.5 * (-u * up_size + side * across_size)};
            std::array<int, 4> ring{};
            for (int k = 0; k < 4; ++k)
                ring[static_cast<std::size_t>(k)] = add_vertex(path[i] + off[static_cast<std::size_t>(k)]);
            rings.push_back(ring);
            offsets.push_back(off);
        }
        for (std::size_t i = 0; i + 1 < rings.size(); ++i) {
            for (std::size_t k = 0; k < 4; ++k) {
                const std::size_t k2 = (k + 1) % 4;
                const Vec3 outward = offsets[i][k] + offsets[i][k2];
                add_quad(rings[i][k], rings[i + 1][k], rings[i + 1][k2], rings[i][k2], outward);
            }
        }
        const Vec3 start_dir = path.front() - path[1];
        const Vec3 end_dir = path.back() - path[path.size() - 2];
        add_quad(rings.front()[0], rings.front()[1], rings.front()[2], rings.front()[3], start_dir);
        add_quad(rings.back()[0], rings.back()[1], rings.back()[2], rings.back()[3], end_dir);
    }

    // Closed rim around a superellipse lens opening centered at `center`.
    void add_rim(const Vec3& center, const FrameShape& shape, int samples)
    {
        const double e = 2.0 / shape.exponent;
        auto outline = [&](double t) {
            const double c = std::cos(t), s = std::sin(t);
            return Vec3(center.x() + shape.half_width * std::copysign(std::pow(std::abs(c), e), c),
                        center.y() + shape.half_height * std::copysign(std::pow(std::abs(s), e), s), 0.0);
        };

        std::vector<std::array<int, 4>> rings; // inner-front, outer-front, outer-back, inner-back
        std::vector<Vec3> radial;
        for (int i = 0; i < samples; ++i) {
            const double t = 2.0 * std::numbers::pi * i / samples;
            const double dt = 1e-4;
            const Vec3 p = outline(t);
            const Vec3 tangent = (outline(t + dt) - outline(t - dt)).normalized();
            Vec3 n(tangent.y(), -tangent.x(), 0.0);
            if (n.dot(p - center) < 0.0)
                n = -n;
            const Vec3 outer = p + n * shape.rim_width(t);
            const Vec3 back(0.0, 0.0, shape.depth);
            rings.push_back({add_vertex(p), add_vertex(outer), add_vertex(outer + back), add_vertex(p + back)});
            radial.push_back(n);
        }
        for (int i = 0; i < samples; ++i) {
            const auto a = static_cast<std::size_t>(i);
            const auto b = static_cast<std::size_t>((i + 1) % samples);
            const Vec3 n = (radial[a] + radial[b]).normalized();
            add_quad(rings[a][0], rings[b][0], rings[b][1], rings[a][1], Vec3(0, 0, -1)); // front
            add_quad(rings[a][1], rings[b][1], rings[b][2], rings[a][2], n);              // outer side
            add_quad(rings[a][2], rings[b][2], rings[b][3], rings[a][3], Vec3(0, 0, 1));  // back
            add_quad(rings[a][3], rings[b][3], rings[b][0], rings[a][0], -n);             // lens side
        }
    }

    Mesh mesh;
};

} // namespace

std::string_view frame_style_name(FrameStyle style)
{
    switch (style) {
    case FrameStyle::Rectangular: return "rectangular";
    case FrameStyle::Rounded: return "rounded";
    case FrameStyle::Browline: return "browline";
    case FrameStyle::Oversized: return "oversized";
    }
    return "unknown";
}

Mesh make_eyeglass_asset(FrameStyle style)
{
    const FrameShape shape = shape_for(style);
    const double lens_x = 0.5 * shape.bridge_gap + shape.half_width;
    const Vec3 left_center(lens_x, 0.0, 0.0);
    const Vec3 right_center(-lens_x, 0.0, 0.0);

    MeshBuilder b;
    b.add_rim(left_center, shape, 56);
    b.add_rim(right_center, shape, 56);

    // Bridge: slight upward arch between the inner rim edges.
    const double bridge_y = -0.35 * shape.half_height;
    std::vector<Vec3> bridge;
    const double span = 0.5 * shape.bridge_gap + 1.0;
    for (int i = 0; i <= 8; ++i) {
        const double s = static_cast<double>(i) / 8.0;
        bridge.emplace_back(-span + 2.0 * span * s, bridge_y - 2.5 * std::sin(std::numbers::pi * s),
                            0.5 * shape.depth);
    }
    b.sweep_box(bridge, Vec3(0, 1, 0), 3.0, shape.depth);

    // Temples hinge on the outer rim edge and run back to the ears.
    const double hinge_x = lens_x + shape.half_width + 0.5 * shape.rim_width(0.0);
    const double temple_y = -0.4 * shape.half_height;
    Vec3 tips[2];
    for (int side = 0; side < 2; ++side) {
        const double sx = side == 0 ? 1.0 : -1.0;
        const std::vector<Vec3> arm{
            {sx * hinge_x, temple_y, 0.5 * shape.depth},
            {sx * (hinge_x + 2.0), temple_y, 15.0},
            {sx * (hinge_x + 4.0), temple_y + 1.0, 80.0},
            {sx * (hinge_x + 4.0), temple_y + 6.0, 95.0},
            {sx * (hinge_x + 3.5), temple_y + 14.0, 103.0},
        };
        b.sweep_box(arm, Vec3(0, 1, 0), 3.5, 2.5);
        tips[side] = Vec3(sx * (hinge_x + 4.0), temple_y + 6.0, 95.0);
    }

    const double eye_depth = 12.0;
    const int left_tip = b.add_vertex(tips[0]);
    const int right_tip = b.add_vertex(tips[1]);
    const int left_eye = b.add_vertex(left_center + Vec3(0, 0, eye_depth));
    const int right_eye = b.add_vertex(right_center + Vec3(0, 0, eye_depth));
    const int bridge_point = b.add_vertex(Vec3(0.0, bridge_y + 2.0, 9.0));
    b.mesh.anchor_indices = {left_tip, right_tip, left_eye, right_eye, bridge_point};
    b.mesh.material.color = Vec3(0.03, 0.03, 0.035);
    b.mesh.validate();
    return b.mesh;
}

std::vector<Mesh> default_eyeglass_assets()
{
    return {make_eyeglass_asset(FrameStyle::Rectangular), make_eyeglass_asset(FrameStyle::Rounded),
            make_eyeglass_asset(FrameStyle::Browline), make_eyeglass_asset(FrameStyle::Oversized)};
}

} // namespace glassynth
