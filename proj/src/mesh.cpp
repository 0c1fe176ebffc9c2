#include "glassynth/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace glassynth {

namespace {

bool is_proper_rotation(const Mat3& r, double tol)
{
    const Mat3 gram = r.transpose() * r;
    if (((gram - Mat3::Identity()).cwiseAbs().maxCoeff()) > tol)
        return false;
    return std::abs(r.determinant() - 1.0) <= tol;
}

double wrap_degrees(double a)
{
    double w = std::fmod(a, 360.0);
    if (w <= -180.0)
        w += 360.0;
    else if (w > 180.0)
        w -= 360.0;
    return w;
}

} // namespace

void Mesh::validate_topology() const
{
    const auto n = static_cast<long long>(vertices.size());
    for (std::size_t t = 0; t < triangles.size(); ++t) {
        for (int idx : triangles[t]) {
            if (idx < 0 || idx >= n)
                throw std::invalid_argument("triangle " + std::to_string(t) +
                                            " references vertex " + std::to_string(idx) +
                                            " of " + std::to_string(n));
        }
    }
}

void Mesh::validate() const
{
    validate_topology();
    if (anchor_indices.empty())
        throw std::invalid_argument("mesh has no anchor indices");
    const auto n = static_cast<long long>(vertices.size());
    for (int idx : anchor_indices) {
        if (idx < 0 || idx >= n)
            throw std::invalid_argument("anchor index " + std::to_string(idx) +
                                        " out of range for " + std::to_string(n) + " vertices");
    }
}

std::vector<Vec3> Mesh::anchor_points() const
{
    std::vector<Vec3> out;
    out.reserve(anchor_indices.size());
    for (int idx : anchor_indices)
        out.push_back(vertices.at(static_cast<std::size_t>(idx)));
    return out;
}

EulerAngles EulerAngles::normalized() const
{
    return {wrap_degrees(pitch), wrap_degrees(yaw), wrap_degrees(roll)};
}

RigidSimilarity::RigidSimilarity(double scale, const Mat3& rotation, const Vec3& translation)
    : scale_(scale), rotation_(rotation), translation_(translation)
{
    if (!std::isfinite(scale) || scale <= 0.0)
        throw std::invalid_argument("similarity scale must be positive and finite");
    if (!rotation.allFinite() || !translation.allFinite())
        throw std::invalid_argument("similarity has non-finite entries");
    if (!is_proper_rotation(rotation, 1e-9))
        throw std::invalid_argument("similarity rotation is not a proper rotation");
}

RigidSimilarity RigidSimilarity::from_post_translation(double scale, const Mat3& rotation,
                                                       const Vec3& post_translation)
{
    if (!std::isfinite(scale) || scale <= 0.0)
        throw std::invalid_argument("similarity scale must be positive and finite");
    return {scale, rotation, rotation.transpose() * post_translation / scale};
}

double degrees_to_radians(double degrees) { return degrees * (std::numbers::pi / 180.0); }
double radians_to_degrees(double radians) { return radians * (180.0 / std::numbers::pi); }

Mat3 rotation_from_euler(const EulerAngles& angles)
{
    if (!std::isfinite(angles.pitch) || !std::isfinite(angles.yaw) || !std::isfinite(angles.roll))
        throw std::invalid_argument("Euler angles must be finite");
    const double a = degrees_to_radians(angles.pitch);
    const double b = degrees_to_radians(angles.yaw);
    const double g = degrees_to_radians(angles.roll);
    const double ca = std::cos(a), sa = std::sin(a);
    const double cb = std::cos(b), sb = std::sin(b);
    const double cg = std::cos(g), sg = std::sin(g);

    Mat3 r;
    r << cg * cb, cg * sb * sa - sg * ca, cg * sb * ca + sg * sa,
         sg * cb, sg * sb * sa + cg * ca, sg * sb * ca - cg * sa,
         -sb,     cb * sa,                cb * ca;
    return r;
}

EulerDecomposition euler_from_rotation(const Mat3& rotation)
{
    if (!rotation.allFinite() || !is_proper_rotation(rotation, 1e-6))
        throw std::invalid_argument("euler_from_rotation expects a proper rotation matrix");

    const double sb = std::clamp(-rotation(2, 0), -1.0, 1.0);
    const double yaw = std::asin(sb);
    EulerDecomposition out;
    if (std::abs(radians_to_degrees(yaw)) >= kGimbalLockYawDegrees) {
        // With roll = 0, R = Ry(yaw) * Rx(pitch): R(1,1) = cos(pitch), R(1,2) = -sin(pitch).
        out.gimbal_lock = true;
        out.angles.roll = 0.0;
        out.angles.pitch = radians_to_degrees(std::atan2(-rotation(1, 2), rotation(1, 1)));
        out.angles.yaw = radians_to_degrees(yaw);
        return out;
    }
    out.angles.pitch = radians_to_degrees(std::atan2(rotation(2, 1), rotation(2, 2)));
    out.angles.yaw = radians_to_degrees(yaw);
    out.angles.roll = radians_to_degrees(std::atan2(rotation(1, 0), rotation(0, 0)));
    return out;
}

std::vector<Vec3> transform_points(std::span<const Vec3> points, const RigidSimilarity& sim)
{
    std::vector<Vec3> out;
    out.reserve(points.size());
    for (const Vec3& p : points)
        out.push_back(sim.apply(p));
    return out;
}

Mesh transform_mesh(const Mesh& mesh, const RigidSimilarity& sim)
{
    Mesh out = mesh;
    for (Vec3& v : out.vertices)
        v = sim.apply(v);
    return out;
}

std::vector<Vec3> vertex_normals(const Mesh& mesh)
{
    if (mesh.triangles.empty())
        throw std::invalid_argument("vertex_normals requires at least one triangle");
    mesh.validate_topology();

    std::vector<Vec3> accum(mesh.vertices.size(), Vec3::Zero());
    bool any_area = false;
    for (const auto& tri : mesh.triangles) {
        const Vec3& a = mesh.vertices[static_cast<std::size_t>(tri[0])];
        const Vec3& b = mesh.vertices[static_cast<std::size_t>(tri[1])];
        const Vec3& c = mesh.vertices[static_cast<std::size_t>(tri[2])];
        // Cross product length is twice the area, which gives the area weighting.
        const Vec3 n = (b - a).cross(c - a);
        if (n.squaredNorm() == 0.0)
            continue;
        any_area = true;
        for (int idx : tri)
            accum[static_cast<std::size_t>(idx)] += n;
    }
    if (!any_area)
        throw std::invalid_argument("every triangle of the mesh is degenerate");

    for (Vec3& n : accum) {
        const double len = n.norm();
        n = len > 0.0 ? Vec3(n / len) : Vec3(0.0, 0.0, 1.0);
    }
    return accum;
}

Vec3 centroid(std::span<const Vec3> points)
{
    if (points.empty())
        throw std::invalid_argument("centroid of an empty point set");
    Vec3 sum = Vec3::Zero();
    for (const Vec3& p : points)
        sum += p;
    return sum / static_cast<double>(points.size());
}

} // namespace glassynth
