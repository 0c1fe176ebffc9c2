#pragma once

#include <Eigen/Core>

#include <array>
#include <span>
#include <vector>

namespace glassynth {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Material {
    Vec3 color{0.04, 0.04, 0.045}; // linear RGB in [0, 1]
};

/// Triangle mesh with ordered anchor vertices.
///
/// Eyeglass assets and face models share this type. The order of
/// `anchor_indices` defines the correspondence used by the fitter, so two
/// meshes are fit against each other anchor-by-anchor.
struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<int> anchor_indices;
    Material material;

    /// Throws std::invalid_argument if any index is out of range or the
    /// anchor list is empty.
    void validate() const;

    /// Throws std::invalid_argument if a triangle index is out of range.
    /// Used where anchors are irrelevant (rasterization).
    void validate_topology() const;

    std::vector<Vec3> anchor_points() const;
};

/// Pitch (about x), yaw (about y), roll (about z), in degrees.
struct EulerAngles {
    double pitch = 0.0;
    double yaw = 0.0;
    double roll = 0.0;

    /// Each angle wrapped into (-180, 180].
    EulerAngles normalized() const;
};

struct EulerDecomposition {
    EulerAngles angles;
    // |yaw| >= 89.9 degrees; roll was pinned to 0.
    bool gimbal_lock = false;
};

/// Scale, rotation and translation applied as f * R * (p + t).
///
/// The translation acts before the rotation. `to_post_translation` gives the
/// equivalent offset for the more common f * R * p + t' form.
class RigidSimilarity {
public:
    RigidSimilarity() = default;

    /// Throws std::invalid_argument unless scale > 0 and rotation is proper
    /// orthonormal within 1e-9.
    RigidSimilarity(double scale, const Mat3& rotation, const Vec3& translation);

    static RigidSimilarity identity() { return {}; }

    /// Builds the similarity mapping p to scale * rotation * p + post_translation.
    static RigidSimilarity from_post_translation(double scale, const Mat3& rotation,
                                                 const Vec3& post_translation);

    double scale() const noexcept { return scale_; }
    const Mat3& rotation() const noexcept { return rotation_; }
    const Vec3& translation() const noexcept { return translation_; }

    Vec3 to_post_translation() const { return scale_ * (rotation_ * translation_); }

    Vec3 apply(const Vec3& p) const { return scale_ * (rotation_ * (p + translation_)); }

private:
    double scale_ = 1.0;
    Mat3 rotation_ = Mat3::Identity();
    Vec3 translation_ = Vec3::Zero();
};

constexpr double kGimbalLockYawDegrees = 89.9;

double degrees_to_radians(double degrees);
double radians_to_degrees(double radians);

/// R = Rz(roll) * Ry(yaw) * Rx(pitch). Throws std::invalid_argument on
/// non-finite input.
Mat3 rotation_from_euler(const EulerAngles& angles);

/// Inverse of rotation_from_euler away from |yaw| = 90 degrees.
/// Throws std::invalid_argument if `rotation` is not a proper rotation
/// (tolerance 1e-6).
EulerDecomposition euler_from_rotation(const Mat3& rotation);

std::vector<Vec3> transform_points(std::span<const Vec3> points, const RigidSimilarity& sim);

/// Applies `sim` to every vertex; topology, anchors and material are kept.
Mesh transform_mesh(const Mesh& mesh, const RigidSimilarity& sim);

/// Area-weighted vertex normals. Vertices without a non-degenerate incident
/// triangle get (0, 0, 1). Throws std::invalid_argument when the mesh has no
/// triangles or every triangle has zero area.
std::vector<Vec3> vertex_normals(const Mesh& mesh);

Vec3 centroid(std::span<const Vec3> points);

} // namespace glassynth
