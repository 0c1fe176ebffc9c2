#include "glassynth/fit.hpp"

#include "glassynth/errors.hpp"

#include <Eigen/Dense>

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

namespace glassynth {

namespace {

using Vec2 = Eigen::Vector2d;
using Params = Eigen::Matrix<double, 6, 1>; // f, pitch, yaw, roll (radians), sx, sy

struct SimilarityEstimate {
    double scale;
    Mat3 rotation;
    Vec3 post_translation;
};

// Closed-form similarity alignment of `src` onto `dst` (Umeyama), 3D.
SimilarityEstimate align_similarity_3d(const std::vector<Vec3>& src, const std::vector<Vec3>& dst)
{
    const auto n = static_cast<double>(src.size());
    const Vec3 mu_src = centroid(src);
    const Vec3 mu_dst = centroid(dst);

    Mat3 cov = Mat3::Zero();
    double var_src = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) {
        const Vec3 a = src[i] - mu_src;
        const Vec3 b = dst[i] - mu_dst;
        cov += b * a.transpose();
        var_src += a.squaredNorm();
    }
    cov /= n;
    var_src /= n;

    Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 s = Mat3::Identity();
    if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0)
        s(2, 2) = -1.0; // never mirror the eyeglasses
    const Mat3 rotation = svd.matrixU() * s * svd.matrixV().transpose();
    const double trace = (svd.singularValues().asDiagonal() * s).trace();
    if (!(trace > 0.0) || !(var_src > 0.0))
        throw DegenerateConfiguration("face anchors are coincident; scale is undefined");
    const double scale = trace / var_src;
    return {scale, rotation, mu_dst - scale * rotation * mu_src};
}

struct Similarity2d {
    double scale;
    double angle; // radians
    Vec2 offset;
};

Similarity2d align_similarity_2d(const std::vector<Vec2>& src, const std::vector<Vec2>& dst)
{
    const auto n = static_cast<double>(src.size());
    Vec2 mu_src = Vec2::Zero(), mu_dst = Vec2::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) {
        mu_src += src[i];
        mu_dst += dst[i];
    }
    mu_src /= n;
    mu_dst /= n;

    // For 2D the optimal rotation angle is atan2(sum cross, sum dot).
    double dot = 0.0, cross = 0.0, var_src = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) {
        const Vec2 a = src[i] - mu_src;
        const Vec2 b = dst[i] - mu_dst;
        dot += a.dot(b);
        cross += a.x() * b.y() - a.y() * b.x();
        var_src += a.squaredNorm();
    }
    if (!(var_src > 0.0))
        return {1.0, 0.0, mu_dst - mu_src};
    const double angle = std::atan2(cross, dot);
    const double scale = std::max(std::hypot(dot, cross) / var_src, 1e-12);
    Eigen::Matrix2d r;
    r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return {scale, angle, mu_dst - scale * r * mu_src};
}

struct EulerRotation {
    Mat3 r;
    std::array<Mat3, 3> d; // d/dpitch, d/dyaw, d/droll
};

EulerRotation euler_rotation_with_derivatives(double a, double b, double g)
{
    const double ca = std::cos(a), sa = std::sin(a);
    const double cb = std::cos(b), sb = std::sin(b);
    const double cg = std::cos(g), sg = std::sin(g);
    Mat3 rx, ry, rz, drx, dry, drz;
    rx << 1, 0, 0, 0, ca, -sa, 0, sa, ca;
    ry << cb, 0, sb, 0, 1, 0, -sb, 0, cb;
    rz << cg, -sg, 0, sg, cg, 0, 0, 0, 1;
    drx << 0, 0, 0, 0, -sa, -ca, 0, ca, -sa;
    dry << -sb, 0, cb, 0, 0, 0, -cb, 0, -sb;
    drz << -sg, -cg, 0, cg, -sg, 0, 0, 0, 0;
    return {rz * ry * rx, {rz * ry * drx, rz * dry * rx, drz * ry * rx}};
}

class OrthographicProblem {
public:
    explicit OrthographicProblem(const AnchorCorrespondence& corr) : corr_(corr) {}

    Eigen::VectorXd residuals(const Params& p) const
    {
        const Mat3 r = euler_rotation_with_derivatives(p(1), p(2), p(3)).r;
        Eigen::VectorXd out(2 * corr_.glass_anchors.size());
        for (std::size_t i = 0; i < corr_.glass_anchors.size(); ++i) {
            const Vec3 q = p(0) * (r * corr_.glass_anchors[i]);
            out(2 * i) = q.x() + p(4) - corr_.face_anchors[i].x();
            out(2 * i + 1) = q.y() + p(5) - corr_.face_anchors[i].y();
        }
        return out;
    }

    Eigen::MatrixXd jacobian(const Params& p) const
    {
        const EulerRotation er = euler_rotation_with_derivatives(p(1), p(2), p(3));
        Eigen::MatrixXd jac(2 * corr_.glass_anchors.size(), 6);
        for (std::size_t i = 0; i < corr_.glass_anchors.size(); ++i) {
            const Vec3& g = corr_.glass_anchors[i];
            const Vec3 rg = er.r * g;
            const auto row = static_cast<Eigen::Index>(2 * i);
            jac(row, 0) = rg.x();
            jac(row + 1, 0) = rg.y();
            for (int k = 0; k < 3; ++k) {
                const Vec3 dg = p(0) * (er.d[static_cast<std::size_t>(k)] * g);
                jac(row, 1 + k) = dg.x();
                jac(row + 1, 1 + k) = dg.y();
            }
            jac(row, 4) = 1.0;
            jac(row + 1, 4) = 0.0;
            jac(row, 5) = 0.0;
            jac(row + 1, 5) = 1.0;
        }
        return jac;
    }

    struct Outcome {
        Params params;
        double cost;
        int iterations;
        bool converged;
    };

    Outcome refine(Params p) const
    {
        double cost = residuals(p).squaredNorm();
        int it = 0;
        bool converged = false;
        for (; it < kMaxRefinementIterations; ++it) {
            const Eigen::VectorXd r = residuals(p);
            const Eigen::MatrixXd jac = jacobian(p);
            // Minimum-norm least-squares step; rank-deficient directions
            // (e.g. pitch versus vertical offset for planar anchors) stay put.
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
            svd.setThreshold(1e-10);
            const Params step = svd.solve(-r);
            const double step_norm = step.norm();
            if (step_norm <= kRefinementStepTolerance) {
                // Take the last small step too; near a zero residual it carries
                // most of the remaining error.
                const Params last = p + step;
                const double last_cost = residuals(last).squaredNorm();
                if (last(0) > 0.0 && last_cost <= cost) {
                    p = last;
                    cost = last_cost;
                }
                converged = true;
                break;
            }
            double t = 1.0;
            bool improved = false;
            for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
                const Params trial = p + t * step;
                if (!(trial(0) > 0.0))
                    continue;
                const double trial_cost = residuals(trial).squaredNorm();
                if (trial_cost <= cost) {
                    p = trial;
                    cost = trial_cost;
                    improved = true;
                    break;
                }
            }
            if (!improved)
                break; // no descent along the Gauss-Newton direction; reported as not converged
        }
        return {p, cost, it, converged};
    }

private:
    const AnchorCorrespondence& corr_;
};

FitResult fit_full3d(const AnchorCorrespondence& corr)
{
    const SimilarityEstimate est = align_similarity_3d(corr.glass_anchors, corr.face_anchors);
    FitResult out;
    out.sim = RigidSimilarity::from_post_translation(est.scale, est.rotation, est.post_translation);
    out.mode = ProjectionMode::Full3D;
    out.residual = fit_residual(corr, Projection::full3d(), out.sim);
    return out;
}

FitResult fit_orthographic(const AnchorCorrespondence& corr)
{
    OrthographicProblem problem(corr);

    std::vector<Vec2> src, dst;
    for (std::size_t i = 0; i < corr.glass_anchors.size(); ++i) {
        src.emplace_back(corr.glass_anchors[i].x(), corr.glass_anchors[i].y());
        dst.emplace_back(corr.face_anchors[i].x(), corr.face_anchors[i].y());
    }
    const Similarity2d planar = align_similarity_2d(src, dst);
    Params from_planar;
    from_planar << planar.scale, 0.0, 0.0, planar.angle, planar.offset.x(), planar.offset.y();

    std::vector<Params> starts{from_planar};
    try {
        const SimilarityEstimate est = align_similarity_3d(corr.glass_anchors, corr.face_anchors);
        const EulerAngles e = euler_from_rotation(est.rotation).angles;
        Params from_3d;
        from_3d << est.scale, degrees_to_radians(e.pitch), degrees_to_radians(e.yaw),
            degrees_to_radians(e.roll), est.post_translation.x(), est.post_translation.y();
        starts.push_back(from_3d);
    } catch (const NumericalError&) {
        // Face anchors can be coincident in depth-free input; the planar start suffices.
    }

    OrthographicProblem::Outcome best{};
    bool have_best = false;
    for (const Params& start : starts) {
        const auto outcome = problem.refine(start);
        if (!have_best || outcome.cost < best.cost) {
            best = outcome;
            have_best = true;
        }
    }

    const Params& p = best.params;
    const Mat3 r = euler_rotation_with_derivatives(p(1), p(2), p(3)).r;
    const Vec3 offset(p(4), p(5), 0.0);
    FitResult out;
    out.sim = RigidSimilarity::from_post_translation(p(0), r, offset);
    out.mode = ProjectionMode::Orthographic2D;
    out.iterations = best.iterations;
    out.converged = best.converged;
    out.residual = fit_residual(corr, Projection::orthographic2d(), out.sim);
    return out;
}

double parse_double_field(const std::string& text, const std::string& key)
{
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw ParseError("fit record", 1, "bad value for '" + key + "': " + text);
    return value;
}

} // namespace

void AnchorCorrespondence::validate(std::size_t min_count) const
{
    if (glass_anchors.size() != face_anchors.size())
        throw std::invalid_argument("anchor count mismatch: " + std::to_string(glass_anchors.size()) +
                                    " glass vs " + std::to_string(face_anchors.size()) + " face");
    if (glass_anchors.size() < min_count)
        throw std::invalid_argument("need at least " + std::to_string(min_count) +
                                    " anchor pairs, got " + std::to_string(glass_anchors.size()));
    for (std::size_t i = 0; i < glass_anchors.size(); ++i) {
        if (!glass_anchors[i].allFinite() || !face_anchors[i].allFinite())
            throw std::invalid_argument("non-finite anchor coordinate");
    }

    const Vec3 mu = centroid(glass_anchors);
    Eigen::MatrixXd centered(3, static_cast<Eigen::Index>(glass_anchors.size()));
    for (std::size_t i = 0; i < glass_anchors.size(); ++i)
        centered.col(static_cast<Eigen::Index>(i)) = glass_anchors[i] - mu;
    const Eigen::Vector3d sv = Eigen::JacobiSVD<Eigen::MatrixXd>(centered).singularValues();
    if (!(sv(0) > 0.0) || sv(1) <= 1e-10 * sv(0))
        throw DegenerateConfiguration("glass anchors are collinear or coincident");
}

AnchorCorrespondence AnchorCorrespondence::from_meshes(const Mesh& glass, const Mesh& face)
{
    glass.validate();
    face.validate();
    return {glass.anchor_points(), face.anchor_points()};
}

Eigen::MatrixXd Projection::matrix() const
{
    if (mode == ProjectionMode::Full3D)
        return Eigen::MatrixXd::Identity(3, 3);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 3);
    m(0, 0) = 1.0;
    m(1, 1) = 1.0;
    return m;
}

FitResult fit_eyeglass(const AnchorCorrespondence& corr, const Projection& proj)
{
    corr.validate(proj.mode == ProjectionMode::Full3D ? 3 : 4);
    return proj.mode == ProjectionMode::Full3D ? fit_full3d(corr) : fit_orthographic(corr);
}

double fit_residual(const AnchorCorrespondence& corr, const Projection& proj,
                    const RigidSimilarity& sim)
{
    if (corr.glass_anchors.size() != corr.face_anchors.size() || corr.glass_anchors.empty())
        throw std::invalid_argument("fit_residual needs matching, nonempty anchor sets");
    double sum = 0.0;
    for (std::size_t i = 0; i < corr.glass_anchors.size(); ++i) {
        Vec3 d = sim.apply(corr.glass_anchors[i]) - corr.face_anchors[i];
        if (proj.mode == ProjectionMode::Orthographic2D)
            d.z() = 0.0;
        sum += d.squaredNorm();
    }
    return std::sqrt(sum / static_cast<double>(corr.glass_anchors.size()));
}

std::string format_fit_record(const FitResult& fit)
{
    const EulerAngles e = euler_from_rotation(fit.sim.rotation()).angles;
    const Vec3& t = fit.sim.translation();
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "f=%.17g\talpha=%.17g\tbeta=%.17g\tgamma=%.17g\ttx=%.17g\tty=%.17g\ttz=%.17g\tresidual=%.17g",
                  fit.sim.scale(), e.pitch, e.yaw, e.roll, t.x(), t.y(), t.z(), fit.residual);
    return buf;
}

FitResult parse_fit_record(const std::string& line)
{
    static const std::array<const char*, 8> keys{"f", "alpha", "beta", "gamma", "tx", "ty", "tz", "residual"};
    std::map<std::string, double> values;
    std::istringstream in(line);
    std::string field;
    while (std::getline(in, field, '\t')) {
        const auto eq = field.find('=');
        if (eq == std::string::npos)
            throw ParseError("fit record", 1, "field without '=': " + field);
        const std::string key = field.substr(0, eq);
        values[key] = parse_double_field(field.substr(eq + 1), key);
    }
    for (const char* key : keys) {
        if (!values.count(key))
            throw ParseError("fit record", 1, std::string("missing key '") + key + "'");
    }
    if (values.size() != keys.size())
        throw ParseError("fit record", 1, "unexpected keys in fit record");

    const Mat3 r = rotation_from_euler({values["alpha"], values["beta"], values["gamma"]});
    FitResult out;
    out.sim = RigidSimilarity(values["f"], r, Vec3(values["tx"], values["ty"], values["tz"]));
    out.residual = values["residual"];
    return out;
}

} // namespace glassynth
