//! Polar transforms of body velocity and position error, and the reduced
//! two-input model they induce.
//!
//! Both polar angles are singular at the origin. The sideslip angle is only
//! evaluated for `u > 0` (an error otherwise); the azimuth takes the value 0
//! at zero position error, where every term it enters vanishes.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::vessel::{eval_nominal_accel, VesselParams, VesselState};

/// Below this position error the azimuth rate is reported as zero.
pub const P_GUARD: f64 = 1e-6;

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta - TAU * ((theta + PI) / TAU).floor();
    // `w` lies in [-pi, pi); move the closed end to +pi.
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

/// Total planar speed and sideslip angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyPolar {
    pub u_l: f64,
    pub psi_a: f64,
}

/// Position-error magnitude and azimuth from vessel to target.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorPolar {
    pub p_e: f64,
    pub psi_b: f64,
}

impl ErrorPolar {
    /// Cartesian error `(x_e, y_e)`.
    pub fn to_cartesian(&self) -> (f64, f64) {
        let (s, c) = self.psi_b.sin_cos();
        (self.p_e * c, self.p_e * s)
    }
}

/// A planar velocity given as speed and navigation-frame course.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarVelocity {
    pub speed: f64,
    pub course: f64,
}

impl PlanarVelocity {
    pub fn new(speed: f64, course: f64) -> Self {
        Self { speed, course }
    }

    pub fn from_cartesian(vx: f64, vy: f64) -> Self {
        Self {
            speed: vx.hypot(vy),
            course: vy.atan2(vx),
        }
    }
}

pub fn body_polar(u: f64, v: f64) -> Result<BodyPolar> {
    if !(u > 0.0) {
        return Err(Error::SingularSideslip { u });
    }
    Ok(BodyPolar {
        u_l: u.hypot(v),
        psi_a: (v / u).atan(),
    })
}

/// Polar form of `target - vessel`; the azimuth is 0 when the points coincide.
pub fn error_polar(target: (f64, f64), vessel: (f64, f64)) -> ErrorPolar {
    let x_e = target.0 - vessel.0;
    let y_e = target.1 - vessel.1;
    let p_e = x_e.hypot(y_e);
    if p_e == 0.0 {
        return ErrorPolar {
            p_e: 0.0,
            psi_b: 0.0,
        };
    }
    ErrorPolar {
        p_e,
        psi_b: wrap_angle(y_e.atan2(x_e)),
    }
}

/// `(p_e_dot, psi_b_dot)` for a target moving with `target` and a vessel
/// moving with `vessel`.
pub fn error_polar_rate(
    err: &ErrorPolar,
    target: PlanarVelocity,
    vessel: PlanarVelocity,
) -> (f64, f64) {
    let rel_t = target.course - err.psi_b;
    let rel_v = vessel.course - err.psi_b;
    let p_e_dot = target.speed * rel_t.cos() - vessel.speed * rel_v.cos();
    let psi_b_dot = if err.p_e > P_GUARD {
        (target.speed * rel_t.sin() - vessel.speed * rel_v.sin()) / err.p_e
    } else {
        0.0
    };
    (p_e_dot, psi_b_dot)
}

/// Quantities of the reduced surge/yaw model seen by the controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedModel {
    pub u_l: f64,
    pub psi_a: f64,
    /// Course of the total velocity, wrapped.
    pub psi_l: f64,
    pub psi_a_dot: f64,
    pub psi_a_ddot: f64,
    /// Rate of `psi_l`.
    pub r_l: f64,
    pub f_u: f64,
    pub f_v: f64,
    pub f_r: f64,
    pub f_ul: f64,
    pub f_rl: f64,
    pub b_u: f64,
    pub b_ul: f64,
    pub eps_ra: f64,
    pub b_r: f64,
    pub d_ulm: f64,
    pub d_rm: f64,
}

impl ReducedModel {
    /// Replaces the sideslip acceleration (and with it `f_rl`).
    pub fn with_psi_a_ddot(mut self, psi_a_ddot: f64) -> Self {
        self.psi_a_ddot = psi_a_ddot;
        self.f_rl = self.f_r + psi_a_ddot;
        self
    }
}

/// Sideslip rate `(v_dot u - u_dot v) / u_l^2`.
pub fn sideslip_rate(u: f64, v: f64, u_dot: f64, v_dot: f64) -> f64 {
    (v_dot * u - u_dot * v) / (u * u + v * v)
}

/// Builds the reduced model at `state`.
///
/// `nu_dot` is the controller's estimate of the body acceleration (it cannot
/// see the disturbance). The sideslip acceleration is the backward difference
/// of the sideslip rate against `psi_a_dot_prev`, or 0 when there is none.
pub fn reduced_model(
    state: &VesselState,
    params: &VesselParams,
    nu_dot: (f64, f64, f64),
    psi_a_dot_prev: Option<f64>,
    dt: f64,
) -> Result<ReducedModel> {
    let BodyPolar { u_l, psi_a } = body_polar(state.u, state.v)?;
    let (f_u, f_v, f_r) = eval_nominal_accel(state, params);
    let psi_a_dot = sideslip_rate(state.u, state.v, nu_dot.0, nu_dot.1);
    let psi_a_ddot = match psi_a_dot_prev {
        Some(prev) if dt > 0.0 => (psi_a_dot - prev) / dt,
        _ => 0.0,
    };
    let (s, c) = psi_a.sin_cos();
    Ok(ReducedModel {
        u_l,
        psi_a,
        psi_l: wrap_angle(state.psi + psi_a),
        psi_a_dot,
        psi_a_ddot,
        r_l: state.r + psi_a_dot,
        f_u,
        f_v,
        f_r,
        f_ul: c * f_u + s * f_v,
        f_rl: f_r + psi_a_ddot,
        b_u: params.b_u,
        b_ul: c * params.b_u,
        eps_ra: s * params.eps_r,
        b_r: params.b_r,
        d_ulm: params.d_ulm(),
        d_rm: params.d_rm,
    })
}
