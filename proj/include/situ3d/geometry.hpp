#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <optional>

#include "situ3d/errors.hpp"

namespace situ3d::geom {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Points = Eigen::Matrix<double, Eigen::Dynamic, 3>;

// First two columns of a rotation matrix, stacked column-first.
using Rot6d = Eigen::Matrix<double, 6, 1>;

inline constexpr double kOrthoTol = 1e-6;
inline constexpr double kDegenerateTol = 1e-9;

/// Rotation about +z by `yaw` radians, counterclockwise.
Mat3 rot_z(double yaw);

/// Wrap an angle to (-pi, pi].
double wrap_angle(double a);

bool is_rotation(const Mat3& r, double tol = kOrthoTol);

/// Raw Euler triple as found in annotations; pitch is fixed to zero.
struct EulerAngles {
    double theta = 0.0; // yaw about the vertical axis
    double psi = 0.0;   // pitch, always 0
    double phi = 0.0;   // roll, unused
};

struct Quaternion {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    double norm() const;
    Quaternion normalized() const; // throws DegenerateInput on near-zero norm
    Mat3 to_matrix() const;        // requires unit norm within 1e-6
    static Quaternion from_matrix(const Mat3& r);
};

// A grounded pose: position plus a heading parallel to the ground plane.
// The rotation is stored canonically as a matrix; Euler/quaternion/6D are
// views derived on demand.
class SituationVector {
public:
    SituationVector(); // identity pose at the origin
    SituationVector(const Vec3& pos, const Mat3& rot);

    static SituationVector from_yaw(const Vec3& pos, double yaw);

    const Vec3& pos() const { return pos_; }
    const Mat3& rot() const { return rot_; }
    double yaw() const;
    Vec3 heading() const { return rot_ * Vec3(0, 1, 0); }

    Quaternion quaternion() const { return Quaternion::from_matrix(rot_); }
    EulerAngles euler() const { return EulerAngles{yaw(), 0.0, 0.0}; }

private:
    Vec3 pos_;
    Mat3 rot_;
};

/// Gram-Schmidt decode of the 6D rotation representation.
Mat3 rot6d_to_matrix(const Rot6d& v);

Rot6d matrix_to_rot6d(const Mat3& r);

/// Heading angle of R, measured counterclockwise from +y, in (-pi, pi].
double yaw_of(const Mat3& r);

/// Wrapped absolute angular difference in degrees, in [0, 180].
double angular_error_deg(double a, double b);

/// Express points in the situated frame: origin at s.pos, heading along +y,
/// vertical axis unchanged.
Points realign_frame(const Points& points, const SituationVector& s);

Vec3 realign_point(const Vec3& p, const SituationVector& s);

} // namespace situ3d::geom
