#include "situ3d/geometry.hpp"

#include <cmath>

namespace situ3d::geom {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

Mat3 rot_z(double yaw) {
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    Mat3 r;
    r << c, -s, 0, s, c, 0, 0, 0, 1;
    return r;
}

double wrap_angle(double a) {
    double w = std::remainder(a, 2.0 * kPi);
    if (w <= -kPi) w += 2.0 * kPi;
    return w;
}

bool is_rotation(const Mat3& r, double tol) {
    if (!r.allFinite()) return false;
    const Mat3 gram = r.transpose() * r;
    if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() >= tol) return false;
    return std::abs(r.determinant() - 1.0) < tol;
}

double Quaternion::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Quaternion Quaternion::normalized() const {
    const double n = norm();
    if (n < kDegenerateTol) throw DegenerateInput("quaternion norm too small to normalize");
    return Quaternion{w / n, x / n, y / n, z / n};
}

Mat3 Quaternion::to_matrix() const {
    if (std::abs(norm() - 1.0) > kOrthoTol) throw NotARotation("quaternion is not unit norm");
    Mat3 r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),
        2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
        2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y);
    return r;
}

Quaternion Quaternion::from_matrix(const Mat3& r) {
    if (!is_rotation(r)) throw NotARotation("matrix is not a rotation");
    Quaternion q;
    const double trace = r.trace();
    if (trace > 0) {
        const double s = std::sqrt(trace + 1.0) * 2.0;
        q.w = 0.25 * s;
        q.x = (r(2, 1) - r(1, 2)) / s;
        q.y = (r(0, 2) - r(2, 0)) / s;
        q.z = (r(1, 0) - r(0, 1)) / s;
    } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
        const double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2.0;
        q.w = (r(2, 1) - r(1, 2)) / s;
        q.x = 0.25 * s;
        q.y = (r(0, 1) + r(1, 0)) / s;
        q.z = (r(0, 2) + r(2, 0)) / s;
    } else if (r(1, 1) > r(2, 2)) {
        const double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2.0;
        q.w = (r(0, 2) - r(2, 0)) / s;
        q.x = (r(0, 1) + r(1, 0)) / s;
        q.y = 0.25 * s;
        q.z = (r(1, 2) + r(2, 1)) / s;
    } else {
        const double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2.0;
        q.w = (r(1, 0) - r(0, 1)) / s;
        q.x = (r(0, 2) + r(2, 0)) / s;
        q.y = (r(1, 2) + r(2, 1)) / s;
        q.z = 0.25 * s;
    }
    const double n = q.norm();
    return Quaternion{q.w / n, q.x / n, q.y / n, q.z / n};
}

SituationVector::SituationVector() : pos_(Vec3::Zero()), rot_(Mat3::Identity()) {}

SituationVector::SituationVector(const Vec3& pos, const Mat3& rot) : pos_(pos), rot_(rot) {
    if (!pos.allFinite()) throw DegenerateInput("situation position is not finite");
    if (!is_rotation(rot)) throw NotARotation("situation rotation is not orthonormal");
    const Vec3 h = heading();
    if (std::abs(h.z()) > kOrthoTol) throw VerticalHeading("situation heading is not horizontal");
}

SituationVector SituationVector::from_yaw(const Vec3& pos, double yaw) {
    return SituationVector(pos, rot_z(yaw));
}

double SituationVector::yaw() const { return yaw_of(rot_); }

Mat3 rot6d_to_matrix(const Rot6d& v) {
    if (!v.allFinite()) throw DegenerateInput("6d vector has non-finite entries");
    const Vec3 a = v.head<3>();
    const Vec3 b = v.tail<3>();
    const double na = a.norm();
    if (na <= kDegenerateTol) throw DegenerateInput("first 6d column has near-zero norm");
    const Vec3 c0 = a / na;
    const Vec3 u = b - c0.dot(b) * c0;
    const double nu = u.norm();
    if (nu <= kDegenerateTol) throw DegenerateInput("6d columns are near parallel");
    const Vec3 c1 = u / nu;
    const Vec3 c2 = c0.cross(c1);
    Mat3 r;
    r.col(0) = c0;
    r.col(1) = c1;
    r.col(2) = c2;
    return r;
}

Rot6d matrix_to_rot6d(const Mat3& r) {
    if (!is_rotation(r)) throw NotARotation("matrix is not a rotation");
    Rot6d v;
    v.head<3>() = r.col(0);
    v.tail<3>() = r.col(1);
    return v;
}

double yaw_of(const Mat3& r) {
    const Vec3 h = r * Vec3(0, 1, 0);
    if (std::hypot(h.x(), h.y()) < kDegenerateTol)
        throw VerticalHeading("heading has no horizontal component");
    return std::atan2(-h.x(), h.y());
}

double angular_error_deg(double a, double b) {
    if (!std::isfinite(a) || !std::isfinite(b)) throw DegenerateInput("non-finite angle");
    return std::abs(wrap_angle(a - b)) * 180.0 / kPi;
}

Points realign_frame(const Points& points, const SituationVector& s) {
    const Mat3 r = rot_z(-s.yaw());
    Points out(points.rows(), 3);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        out.row(i) = (r * (points.row(i).transpose() - s.pos())).transpose();
    }
    return out;
}

Vec3 realign_point(const Vec3& p, const SituationVector& s) {
    return rot_z(-s.yaw()) * (p - s.pos());
}

} // namespace situ3d::geom
