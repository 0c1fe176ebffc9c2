#include "glassynth/render.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace glassynth {

namespace {

double edge(const Vec3& from, const Vec3& to, double px, double py)
{
    return (to.x() - from.x()) * (py - from.y()) - (to.y() - from.y()) * (px - from.x());
}

// Interior lies where edge() > 0. Top edges are horizontal with the interior
// below; left edges have the interior to their right.
bool is_top_left(const Vec3& from, const Vec3& to)
{
    return (from.y() == to.y() && to.x() > from.x()) || to.y() < from.y();
}

bool inside(double w, bool top_left) { return w > 0.0 || (w == 0.0 && top_left); }

void check_viewport(int width, int height)
{
    if (width < 1 || height < 1)
        throw std::invalid_argument("viewport must be at least 1x1, got " + std::to_string(width) + "x" +
                                    std::to_string(height));
}

// Calls fn(x, y, b0, b1, b2) for each pixel center covered by triangle
// (a, b, c), with barycentric weights in the caller's vertex order.
template <typename Fn>
void scan_triangle(const Vec3& a, const Vec3& b, const Vec3& c, int width, int height, bool cull, Fn&& fn)
{
    const double area = edge(a, b, c.x(), c.y());
    if (area == 0.0 || !std::isfinite(area))
        return;
    const bool front = area < 0.0;
    if (cull && !front)
        return;

    // Reorder to positive area; `swapped` maps weights back to (a, b, c).
    const bool swapped = area < 0.0;
    const Vec3& v0 = a;
    const Vec3& v1 = swapped ? c : b;
    const Vec3& v2 = swapped ? b : c;
    const double total = swapped ? -area : area;

    const bool tl0 = is_top_left(v1, v2);
    const bool tl1 = is_top_left(v2, v0);
    const bool tl2 = is_top_left(v0, v1);

    const double min_x = std::min({v0.x(), v1.x(), v2.x()});
    const double max_x = std::max({v0.x(), v1.x(), v2.x()});
    const double min_y = std::min({v0.y(), v1.y(), v2.y()});
    const double max_y = std::max({v0.y(), v1.y(), v2.y()});
    const int x0 = static_cast<int>(std::max(0.0, std::ceil(min_x - 0.5)));
    const int x1 = static_cast<int>(std::min(static_cast<double>(width - 1), std::floor(max_x - 0.5)));
    const int y0 = static_cast<int>(std::max(0.0, std::ceil(min_y - 0.5)));
    const int y1 = static_cast<int>(std::min(static_cast<double>(height - 1), std::floor(max_y - 0.5)));

    for (int y = y0; y <= y1; ++y) {
        const double py = y + 0.5;
        for (int x = x0; x <= x1; ++x) {
            const double px = x + 0.5;
            const double w0 = edge(v1, v2, px, py);
            const double w1 = edge(v2, v0, px, py);
            const double w2 = edge(v0, v1, px, py);
            if (!inside(w0, tl0) || !inside(w1, tl1) || !inside(w2, tl2))
                continue;
            const double l0 = w0 / total;
            const double l1 = w1 / total;
            const double l2 = w2 / total;
            if (swapped)
                fn(x, y, l0, l2, l1);
            else
                fn(x, y, l0, l1, l2);
        }
    }
}

bool has_area(const Mesh& mesh)
{
    for (const auto& t : mesh.triangles) {
        const Vec3& a = mesh.vertices[static_cast<std::size_t>(t[0])];
        const Vec3& b = mesh.vertices[static_cast<std::size_t>(t[1])];
        const Vec3& c = mesh.vertices[static_cast<std::size_t>(t[2])];
        if ((b - a).cross(c - a).squaredNorm() > 0.0)
            return true;
    }
    return false;
}

Mesh scale_image_plane(const Mesh& mesh, double factor)
{
    Mesh out = mesh;
    for (Vec3& v : out.vertices) {
        v.x() *= factor;
        v.y() *= factor;
    }
    return out;
}

} // namespace

void LightSetup::validate() const
{
    auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
    if (!in_unit(ambient))
        throw std::invalid_argument("ambient energy must lie in [0, 1]");
    if (!std::isfinite(shininess) || shininess <= 0.0)
        throw std::invalid_argument("shininess must be positive");
    for (const auto& light : lights) {
        if (!in_unit(light.diffuse) || !in_unit(light.specular))
            throw std::invalid_argument("light energies must lie in [0, 1]");
        if (!light.direction.allFinite() || std::abs(light.direction.norm() - 1.0) > 1e-9)
            throw std::invalid_argument("light direction must be unit length");
    }
}

FragmentBuffer::FragmentBuffer(int w, int h) : width(w), height(h)
{
    check_viewport(w, h);
    const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    depth.assign(n, kEmptyDepth);
    normal.assign(n, Vec3::Zero());
    color.assign(n, Vec3::Zero());
    covered.assign(n, 0);
}

std::size_t FragmentBuffer::coverage_count() const
{
    return static_cast<std::size_t>(std::count(covered.begin(), covered.end(), std::uint8_t{1}));
}

FragmentBuffer rasterize(const Mesh& mesh, int width, int height, const RasterOptions& options)
{
    FragmentBuffer buf(width, height);
    mesh.validate_topology();
    if (options.occlusion_depth && options.occlusion_depth->size() != buf.depth.size())
        throw std::invalid_argument("occlusion depth map does not match the viewport");
    if (!has_area(mesh))
        return buf;

    const std::vector<Vec3> normals = vertex_normals(mesh);
    for (const auto& tri : mesh.triangles) {
        const auto i0 = static_cast<std::size_t>(tri[0]);
        const auto i1 = static_cast<std::size_t>(tri[1]);
        const auto i2 = static_cast<std::size_t>(tri[2]);
        const Vec3& a = mesh.vertices[i0];
        const Vec3& b = mesh.vertices[i1];
        const Vec3& c = mesh.vertices[i2];
        Vec3 face = (b - a).cross(c - a);
        face.normalize();

        scan_triangle(a, b, c, width, height, options.cull_back_faces,
                      [&](int x, int y, double l0, double l1, double l2) {
                          const std::size_t idx = buf.index(x, y);
                          const double z = l0 * a.z() + l1 * b.z() + l2 * c.z();
                          if (!(z < buf.depth[idx]))
                              return;
                          if (options.occlusion_depth && !(z < (*options.occlusion_depth)[idx]))
                              return;
                          Vec3 n = l0 * normals[i0] + l1 * normals[i1] + l2 * normals[i2];
                          const double len = n.norm();
                          n = len > 1e-12 ? Vec3(n / len) : face;
                          buf.depth[idx] = z;
                          buf.normal[idx] = n;
                          buf.color[idx] = mesh.material.color;
                          buf.covered[idx] = 1;
                      });
    }
    return buf;
}

std::vector<double> depth_map(const Mesh& mesh, int width, int height)
{
    check_viewport(width, height);
    mesh.validate_topology();
    std::vector<double> depth(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), kEmptyDepth);
    for (const auto& tri : mesh.triangles) {
        const Vec3& a = mesh.vertices[static_cast<std::size_t>(tri[0])];
        const Vec3& b = mesh.vertices[static_cast<std::size_t>(tri[1])];
        const Vec3& c = mesh.vertices[static_cast<std::size_t>(tri[2])];
        scan_triangle(a, b, c, width, height, false, [&](int x, int y, double l0, double l1, double l2) {
            const std::size_t idx = static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                                    static_cast<std::size_t>(x);
            depth[idx] = std::min(depth[idx], l0 * a.z() + l1 * b.z() + l2 * c.z());
        });
    }
    return depth;
}

Vec3 shade_phong(const Vec3& normal, const Vec3& view_dir, const LightSetup& lights, const Vec3& color)
{
    if (!normal.allFinite() || std::abs(normal.norm() - 1.0) > 1e-6)
        throw std::invalid_argument("shade_phong: normal must be unit length");
    if (!view_dir.allFinite() || std::abs(view_dir.norm() - 1.0) > 1e-6)
        throw std::invalid_argument("shade_phong: view direction must be unit length");

    double diffuse = lights.ambient;
    double specular = 0.0;
    for (const auto& light : lights.lights) {
        const double n_dot_l = normal.dot(light.direction);
        diffuse += light.diffuse * std::max(0.0, n_dot_l);
        const Vec3 reflected = 2.0 * n_dot_l * normal - light.direction;
        specular += light.specular * std::pow(std::max(0.0, reflected.dot(view_dir)), lights.shininess);
    }
    diffuse = std::clamp(diffuse, 0.0, 1.0);
    return (color * diffuse + Vec3::Constant(specular)).cwiseMax(0.0).cwiseMin(1.0);
}

RenderedLayer render_layer(const Mesh& mesh, const RigidSimilarity& sim, const LightSetup& lights,
                           int width, int height, const RenderOptions& options)
{
    check_viewport(width, height);
    lights.validate();
    const Mesh posed = transform_mesh(mesh, sim);

    std::vector<double> occlusion;
    RasterOptions raster_opts;
    raster_opts.cull_back_faces = options.cull_back_faces;
    if (options.occluder) {
        occlusion = depth_map(*options.occluder, width, height);
        raster_opts.occlusion_depth = &occlusion;
    }
    const FragmentBuffer frags = rasterize(posed, width, height, raster_opts);

    RenderedLayer out{RasterImage(width, height, 4), std::vector<std::uint8_t>(frags.covered.size(), 0), true};
    auto put = [&](int x, int y, const Vec3& rgb, std::uint8_t alpha) {
        auto px = out.rgba.pixel(x, y);
        px[0] = quantize_channel(rgb.x());
        px[1] = quantize_channel(rgb.y());
        px[2] = quantize_channel(rgb.z());
        px[3] = alpha;
    };

    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const std::size_t idx = frags.index(x, y);
            if (frags.covered[idx])
                put(x, y, shade_phong(frags.normal[idx], kViewDirection, lights, frags.color[idx]), 255);
        }
    }

    if (options.antialias_edges) {
        // Subsample centers of the 2x grid sit at (+-0.25, +-0.25) around each pixel center.
        const Mesh doubled = scale_image_plane(posed, 2.0);
        std::vector<double> occlusion2;
        RasterOptions opts2 = raster_opts;
        if (options.occluder) {
            occlusion2 = depth_map(scale_image_plane(*options.occluder, 2.0), 2 * width, 2 * height);
            opts2.occlusion_depth = &occlusion2;
        }
        const FragmentBuffer fine = rasterize(doubled, 2 * width, 2 * height, opts2);

        auto coverage_differs = [&](int x, int y) {
            const std::uint8_t self = frags.covered[frags.index(x, y)];
            const int dx[4] = {1, -1, 0, 0};
            const int dy[4] = {0, 0, 1, -1};
            for (int k = 0; k < 4; ++k) {
                const int nx = x + dx[k], ny = y + dy[k];
                if (nx < 0 || ny < 0 || nx >= width || ny >= height)
                    continue;
                if (frags.covered[frags.index(nx, ny)] != self)
                    return true;
            }
            return false;
        };

        // Decide every boundary pixel from the unmodified 1x coverage first.
        std::vector<std::pair<int, int>> boundary;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                if (coverage_differs(x, y))
                    boundary.emplace_back(x, y);

        for (const auto& [x, y] : boundary) {
            int hits = 0;
            Vec3 sum = Vec3::Zero();
            for (int sy = 0; sy < 2; ++sy) {
                for (int sx = 0; sx < 2; ++sx) {
                    const std::size_t fi = fine.index(2 * x + sx, 2 * y + sy);
                    if (!fine.covered[fi])
                        continue;
                    ++hits;
                    sum += shade_phong(fine.normal[fi], kViewDirection, lights, fine.color[fi]);
                }
            }
            if (hits == 0) {
                auto px = out.rgba.pixel(x, y);
                std::fill(px.begin(), px.end(), std::uint8_t{0});
                continue;
            }
            put(x, y, sum / hits, static_cast<std::uint8_t>(std::lround(255.0 * hits / 4.0)));
        }
    }

    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            if (out.rgba.pixel(x, y)[3] > 0) {
                out.mask[frags.index(x, y)] = 1;
                out.empty_coverage = false;
            }
        }
    }
    return out;
}

} // namespace glassynth
