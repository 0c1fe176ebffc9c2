#pragma once

#include "glassynth/mesh.hpp"

#include <string>
#include <vector>

namespace glassynth {

/// Ordered anchor pairs: glass_anchors[i] should land on face_anchors[i].
struct AnchorCorrespondence {
    std::vector<Vec3> glass_anchors;
    std::vector<Vec3> face_anchors;

    /// Throws std::invalid_argument for mismatched or too few anchors and
    /// DegenerateConfiguration when the glass anchors are collinear.
    void validate(std::size_t min_count = 3) const;

    static AnchorCorrespondence from_meshes(const Mesh& glass, const Mesh& face);
};

enum class ProjectionMode {
    Full3D,         // Pr = I (3x3)
    Orthographic2D, // Pr = [[1,0,0],[0,1,0]]
};

struct Projection {
    ProjectionMode mode = ProjectionMode::Full3D;

    static Projection full3d() { return {ProjectionMode::Full3D}; }
    static Projection orthographic2d() { return {ProjectionMode::Orthographic2D}; }

    Eigen::MatrixXd matrix() const;
    std::size_t output_dims() const { return mode == ProjectionMode::Full3D ? 3 : 2; }
};

struct FitResult {
    RigidSimilarity sim;
    double residual = 0.0;        // RMS anchor distance of the minimized objective
    ProjectionMode mode = ProjectionMode::Full3D;
    int iterations = 0;           // Gauss-Newton steps taken (Orthographic2D only)
    bool converged = true;        // false: last step norm still > 1e-8 after the cap
};

constexpr int kMaxRefinementIterations = 50;
constexpr double kRefinementStepTolerance = 1e-8;

/// Solves min over (f, R, t3d) of sum_i || f * Pr * R * (g_i + t3d) - Pr * p_i ||^2.
///
/// Full3D is the closed-form centered cross-covariance SVD alignment with a
/// reflection guard. Orthographic2D starts from the best of a 2D Procrustes
/// solution on projected anchors and the Full3D solution, then runs damped
/// Gauss-Newton over (f, pitch, yaw, roll, image-plane offset). The depth
/// component of t3d is unobservable under orthographic projection and is
/// resolved to the minimum-norm translation.
FitResult fit_eyeglass(const AnchorCorrespondence& corr, const Projection& proj);

/// RMS anchor distance of `sim` under `proj`.
double fit_residual(const AnchorCorrespondence& corr, const Projection& proj,
                    const RigidSimilarity& sim);

/// `f=... alpha=... beta=... gamma=... tx=... ty=... tz=... residual=...`,
/// tab separated, 17 significant digits. Angles in degrees.
std::string format_fit_record(const FitResult& fit);

/// Inverse of format_fit_record. Throws ParseError on malformed input.
FitResult parse_fit_record(const std::string& line);

} // namespace glassynth
