// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <utility>

#include <Eigen/Core>
#include <Eigen/Cholesky>

#include "panotrack/geometry.hpp"

namespace panotrack {

struct KalmanParams {
    double measurement_noise_std = 0.05;  // m
    double process_accel_std = 0.1;       // m / frame^2
    double initial_velocity_std = 3.16;   // m / frame
};

/// Ground-plane constant-velocity state: (x, z, vx, vz), one frame per step.
struct KalmanState {
    Eigen::Vector4d mean = Eigen::Vector4d::Zero();
    Eigen::Matrix4d covariance = Eigen::Matrix4d::Identity();

    Location3D location() const { return Location3D{mean(0), mean(1)}; }
};

namespace detail {

inline Eigen::Matrix4d transition() {
    Eigen::Matrix4d f = Eigen::Matrix4d::Identity();
    f(0, 2) = 1.0;
    f(1, 3) = 1.0;
    return f;
}

// Continuous white-noise acceleration integrated over dt = 1, per axis:
// q^2 * [[1/3, 1/2], [1/2, 1]].
inline Eigen::Matrix4d process_noise(double accel_std) {
    const double q = accel_std * accel_std;
    Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
    for (int axis = 0; axis < 2; ++axis) {
        m(axis, axis) = q / 3.0;
        m(axis, axis + 2) = q / 2.0;
        m(axis + 2, axis) = q / 2.0;
        m(axis + 2, axis + 2) = q;
    }
    return m;
}

}  // namespace detail

inline KalmanState kf_new(const Location3D& loc, const KalmanParams& params) {
    KalmanState s;
    s.mean << loc.x_m, loc.z_m, 0.0, 0.0;
    const double pos_var = params.measurement_noise_std * params.measurement_noise_std;
    const double vel_var = params.initial_velocity_std * params.initial_velocity_std;
    s.covariance = Eigen::Vector4d(pos_var, pos_var, vel_var, vel_var).asDiagonal();
    return s;
}

/// One-frame prediction. Returns the propagated state and its position.
inline std::pair<KalmanState, Location3D> kf_predict(const KalmanState& state,
                                                     const KalmanParams& params) {
    const Eigen::Matrix4d f = detail::transition();
    KalmanState next;
    next.mean = f * state.mean;
    next.covariance = f * state.covariance * f.transpose() + detail::process_noise(params.process_accel_std);
    // Re-symmetrise against rounding drift.
    next.covariance = 0.5 * (next.covariance + next.covariance.transpose()).eval();
    return {next, next.location()};
}

/// Position-only measurement update (Joseph form).
inline KalmanState kf_update(const KalmanState& state, const Location3D& measured,
                             const KalmanParams& params) {
    Eigen::Matrix<double, 2, 4> h = Eigen::Matrix<double, 2, 4>::Zero();
    h(0, 0) = 1.0;
    h(1, 1) = 1.0;
    const double r_var = params.measurement_noise_std * params.measurement_noise_std;
    const Eigen::Matrix2d r = Eigen::Matrix2d::Identity() * r_var;

    const Eigen::Vector2d innovation(measured.x_m - state.mean(0), measured.z_m - state.mean(1));
    const Eigen::Matrix2d s = h * state.covariance * h.transpose() + r;
    // K = P H^T S^-1, solved rather than inverted.
    const Eigen::Matrix<double, 4, 2> gain =
        s.llt().solve(h * state.covariance).transpose();

    KalmanState next;
    next.mean = state.mean + gain * innovation;
    const Eigen::Matrix4d i_kh = Eigen::Matrix4d::Identity() - gain * h;
    next.covariance = i_kh * state.covariance * i_kh.transpose() + gain * r * gain.transpose();
    next.covariance = 0.5 * (next.covariance + next.covariance.transpose()).eval();
    return next;
}

}  // namespace panotrack
