#include "fixtures.hpp"

#include "glassynth/assets.hpp"
#include "glassynth/render.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <stdexcept>
#include <string>

namespace glassynth::testing {

namespace {

const Vec3 kHeadCenter(80.0, 86.0, 184.0);
const Vec3 kHeadRadii(50.0, 66.0, 56.0);

} // namespace

RigidSimilarity fixture_glass_pose()
{
    return RigidSimilarity::from_post_translation(0.7, rotation_from_euler({2.0, 4.0, -1.5}),
                                                  Vec3(80.0, 70.0, 120.0));
}

Mesh make_face_fixture()
{
    Mesh face;
    constexpr int kRings = 18;
    constexpr int kSegments = 32;
    const double pi = std::numbers::pi;
    face.vertices.push_back(kHeadCenter - Vec3(0.0, kHeadRadii.y(), 0.0));
    for (int r = 1; r < kRings; ++r) {
        const double theta = pi * r / kRings;
        for (int s = 0; s < kSegments; ++s) {
            const double phi = 2.0 * pi * s / kSegments;
            const Vec3 unit(std::sin(theta) * std::cos(phi), -std::cos(theta), std::sin(theta) * std::sin(phi));
            face.vertices.push_back(kHeadCenter + unit.cwiseProduct(kHeadRadii));
        }
    }
    face.vertices.push_back(kHeadCenter + Vec3(0.0, kHeadRadii.y(), 0.0));
    const int bottom = static_cast<int>(face.vertices.size()) - 1;

    auto ring = [&](int r, int s) { return 1 + (r - 1) * kSegments + (s % kSegments); };
    auto add = [&](int a, int b, int c) {
        const Vec3& pa = face.vertices[static_cast<std::size_t>(a)];
        const Vec3 n = (face.vertices[static_cast<std::size_t>(b)] - pa).cross(face.vertices[static_cast<std::size_t>(c)] - pa);
        const Vec3 mid = (pa + face.vertices[static_cast<std::size_t>(b)] + face.vertices[static_cast<std::size_t>(c)]) / 3.0;
        if (n.dot(mid - kHeadCenter) >= 0.0)
            face.triangles.push_back({a, b, c});
        else
            face.triangles.push_back({a, c, b});
    };
    for (int s = 0; s < kSegments; ++s)
        add(0, ring(1, s), ring(1, s + 1));
    for (int r = 1; r + 1 < kRings; ++r) {
        for (int s = 0; s < kSegments; ++s) {
            add(ring(r, s), ring(r + 1, s), ring(r + 1, s + 1));
            add(ring(r, s), ring(r + 1, s + 1), ring(r, s + 1));
        }
    }
    for (int s = 0; s < kSegments; ++s)
        add(bottom, ring(kRings - 1, s + 1), ring(kRings - 1, s));

    const Mesh glass = make_eyeglass_asset(FrameStyle::Rectangular);
    const RigidSimilarity pose = fixture_glass_pose();
    for (const Vec3& a : glass.anchor_points()) {
        face.anchor_indices.push_back(static_cast<int>(face.vertices.size()));
        face.vertices.push_back(pose.apply(a));
    }
    face.material.color = Vec3(0.85, 0.68, 0.58);
    face.validate();
    return face;
}

RasterImage make_base_image(int width, int height)
{
    RasterImage img(width, height, 3);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double dx = (x - kHeadCenter.x()) / kHeadRadii.x();
            const double dy = (y - kHeadCenter.y()) / kHeadRadii.y();
            const double r2 = dx * dx + dy * dy;
            auto px = img.pixel(x, y);
            if (r2 < 1.0) {
                const double shade = 0.75 + 0.25 * std::sqrt(1.0 - r2);
                px[0] = quantize_channel(0.86 * shade);
                px[1] = quantize_channel(0.67 * shade);
                px[2] = quantize_channel(0.56 * shade);
            } else {
                const double t = static_cast<double>(y) / height;
                px[0] = quantize_channel(0.35 + 0.2 * t);
                px[1] = quantize_channel(0.42 + 0.1 * t);
                px[2] = quantize_channel(0.55 - 0.1 * t);
            }
        }
    }
    return img;
}

RasterImage render_golden_scene(int index)
{
    const RasterImage base = make_base_image();
    const Mesh face = make_face_fixture();
    LightSetup lights;
    RenderOptions opts;
    RenderedLayer layer;
    switch (index) {
    case 0:
        layer = render_layer(face, RigidSimilarity::identity(), lights, kSceneSize, kSceneSize, opts);
        break;
    case 1:
        opts.occluder = &face;
        layer = render_layer(make_eyeglass_asset(FrameStyle::Rectangular), fixture_glass_pose(), lights, kSceneSize,
                             kSceneSize, opts);
        break;
    case 2: {
        opts.occluder = &face;
        opts.antialias_edges = true;
        lights.ambient = 0.25;
        lights.lights = {{Vec3(0.3, -0.2, -1.0).normalized(), 0.5, 0.3}, {Vec3(-0.4, 0.0, -1.0).normalized(), 0.3, 0.1}};
        const Mesh glass = make_eyeglass_asset(FrameStyle::Oversized);
        const RigidSimilarity pose = perturb_fit(fixture_glass_pose(), -1.5, 2.0, centroid(glass.anchor_points()));
        layer = render_layer(glass, pose, lights, kSceneSize, kSceneSize, opts);
        break;
    }
    default:
        throw std::invalid_argument("no golden scene " + std::to_string(index));
    }
    return blend(base, layer.rgba, layer.mask);
}

std::string golden_scene_name(int index)
{
    return "render_scene" + std::to_string(index) + ".ppm";
}

SynthConfig collapsed_synth_config()
{
    SynthConfig c;
    c.eyeglass_assets = {make_eyeglass_asset(FrameStyle::Rectangular)};
    c.pitch_perturb = {0.0, 0.0};
    c.vshift = {1.0, 1.0};
    c.ambient = {0.3, 0.3};
    c.diffuse = {0.6, 0.6};
    c.specular = {0.2, 0.2};
    c.light_cone_degrees = 0.0;
    c.master_seed = 7;
    return c;
}

std::filesystem::path data_dir()
{
    return GLASSYNTH_TEST_DATA_DIR;
}

bool matches_golden(const RasterImage& image, const std::string& name, std::string* message)
{
    const std::filesystem::path path = data_dir() / "golden" / name;
    if (std::getenv("GLASSYNTH_UPDATE_GOLDENS") != nullptr) {
        std::filesystem::create_directories(path.parent_path());
        write_image(image, path);
    }
    if (!std::filesystem::exists(path)) {
        if (message)
            *message = "missing golden " + path.string();
        return false;
    }
    const RasterImage golden = read_image(path);
    if (golden == image)
        return true;
    if (message) {
        std::size_t diff = 0;
        if (golden.data().size() == image.data().size()) {
            for (std::size_t i = 0; i < golden.data().size(); ++i)
                diff += golden.data()[i] != image.data()[i];
        }
        *message = name + ": " + std::to_string(diff) + " bytes differ (size " +
                   std::to_string(golden.data().size()) + " vs " + std::to_string(image.data().size()) + ")";
    }
    return false;
}

} // namespace glassynth::testing
