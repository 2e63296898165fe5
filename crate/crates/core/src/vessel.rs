//! 3-DOF surface vessel model.
//!
//! Kinematics rotate body velocities `(u, v, r)` into the navigation frame;
//! dynamics are `nu_dot = f(nu) + B tau + d` with the hydrodynamic model
//! below and `B = [[b_u, 0], [0, eps_r], [0, b_r]]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::polar::wrap_angle;

/// Pose `(x, y, psi)` and body velocities `(u, v, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VesselState {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub u: f64,
    pub v: f64,
    pub r: f64,
}

impl VesselState {
    pub fn new(x: f64, y: f64, psi: f64, u: f64, v: f64, r: f64) -> Self {
        Self {
            x,
            y,
            psi: wrap_angle(psi),
            u,
            v,
            r,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|c| c.is_finite())
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.x, self.y, self.psi, self.u, self.v, self.r]
    }

    /// Rebuilds a state from raw components; `psi` is wrapped.
    pub fn from_array(a: [f64; 6]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4], a[5])
    }

    /// Navigation-frame velocity `(x_dot, y_dot)`.
    pub fn nav_velocity(&self) -> (f64, f64) {
        let (s, c) = self.psi.sin_cos();
        (c * self.u - s * self.v, s * self.u + c * self.v)
    }
}

/// Time derivative of [`VesselState`], in the same field order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VesselStateDerivative {
    pub x_dot: f64,
    pub y_dot: f64,
    pub psi_dot: f64,
    pub u_dot: f64,
    pub v_dot: f64,
    pub r_dot: f64,
}

impl VesselStateDerivative {
    pub fn to_array(&self) -> [f64; 6] {
        [
            self.x_dot,
            self.y_dot,
            self.psi_dot,
            self.u_dot,
            self.v_dot,
            self.r_dot,
        ]
    }
}

/// Sign convention of the quadratic and cubic sway damping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwayDamping {
    /// All sway damping terms oppose the motion, as in surge and yaw.
    #[default]
    Dissipative,
    /// `-(chi_v1 v - chi_v2 |v| v - chi_v3 v^3)`: the higher-order terms
    /// feed energy in and sway runs away once `|v|` exceeds about 2.3 m/s.
    Reversed,
}

/// Inertia, damping, actuation and disturbance-bound parameters.
///
/// Defaults are those of a 1.2e5 kg supply-vessel model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VesselParams {
    pub m11: f64,
    pub m22: f64,
    pub m33: f64,
    pub chi_u1: f64,
    pub chi_u2: f64,
    pub chi_u3: f64,
    pub chi_v1: f64,
    pub chi_v2: f64,
    pub chi_v3: f64,
    pub chi_r1: f64,
    pub chi_r2: f64,
    pub chi_r3: f64,
    pub sway_damping: SwayDamping,
    pub b_u: f64,
    pub b_r: f64,
    /// Sway acceleration induced by the yaw moment. Zero means minimum phase.
    pub eps_r: f64,
    pub d_um: f64,
    pub d_vm: f64,
    pub d_rm: f64,
}

impl Default for VesselParams {
    fn default() -> Self {
        let (m11, m22, m33) = (1.2e5, 1.779e5, 6.36e7);
        let (chi_u1, chi_v1, chi_r1) = (2.15e4, 1.47e5, 8.02e6);
        Self {
            m11,
            m22,
            m33,
            chi_u1,
            chi_u2: 0.2 * chi_u1,
            chi_u3: 0.1 * chi_u1,
            chi_v1,
            chi_v2: 0.2 * chi_v1,
            chi_v3: 0.1 * chi_v1,
            chi_r1,
            chi_r2: 0.2 * chi_r1,
            chi_r3: 0.1 * chi_r1,
            sway_damping: SwayDamping::Dissipative,
            b_u: 1.0 / m11,
            b_r: 1.0 / m33,
            eps_r: 0.0,
            d_um: 22.0 / 11.0,
            d_vm: 52.0 / 17.79,
            d_rm: 190.0 / 63.6,
        }
    }
}

impl VesselParams {
    /// Same model with all disturbance bounds set to zero.
    pub fn without_disturbance(mut self) -> Self {
        self.d_um = 0.0;
        self.d_vm = 0.0;
        self.d_rm = 0.0;
        self
    }

    /// Bound on the disturbance projected onto the total-speed direction.
    pub fn d_ulm(&self) -> f64 {
        self.d_um.hypot(self.d_vm)
    }

    /// Lists violated invariants; empty when valid.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, val) in [("m11", self.m11), ("m22", self.m22), ("m33", self.m33)] {
            if !(val > 0.0) {
                out.push(format!("vessel.{name} must be > 0 (got {val})"));
            }
        }
        for (name, val) in [("b_u", self.b_u), ("b_r", self.b_r)] {
            if !(val > 0.0) {
                out.push(format!("vessel.{name} must be > 0 (got {val})"));
            }
        }
        for (name, val) in [
            ("d_um", self.d_um),
            ("d_vm", self.d_vm),
            ("d_rm", self.d_rm),
        ] {
            if !(val >= 0.0) {
                out.push(format!("vessel.{name} must be >= 0 (got {val})"));
            }
        }
        let all = [
            self.chi_u1,
            self.chi_u2,
            self.chi_u3,
            self.chi_v1,
            self.chi_v2,
            self.chi_v3,
            self.chi_r1,
            self.chi_r2,
            self.chi_r3,
            self.eps_r,
        ];
        if all.iter().any(|c| !c.is_finite()) {
            out.push("vessel damping and lift coefficients must be finite".to_string());
        }
        out
    }
}

/// Body-frame disturbance accelerations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Disturbance {
    pub d_u: f64,
    pub d_v: f64,
    pub d_r: f64,
}

/// Surge force and yaw moment.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    pub tau_u: f64,
    pub tau_r: f64,
}

impl ControlInput {
    pub fn new(tau_u: f64, tau_r: f64) -> Self {
        Self { tau_u, tau_r }
    }

    pub fn norm(&self) -> f64 {
        self.tau_u.hypot(self.tau_r)
    }
}

/// Nominal accelerations `(f_u, f_v, f_r)`.
pub fn eval_nominal_accel(s: &VesselState, p: &VesselParams) -> (f64, f64, f64) {
    let VesselState { u, v, r, .. } = *s;
    let f_u =
        (p.m22 * v * r - p.chi_u1 * u - p.chi_u2 * u.abs() * u - p.chi_u3 * u * u * u) / p.m11;
    let hi = p.chi_v2 * v.abs() * v + p.chi_v3 * v * v * v;
    let hi = match p.sway_damping {
        SwayDamping::Dissipative => hi,
        SwayDamping::Reversed => -hi,
    };
    let f_v = -(p.m11 * u * r + p.chi_v1 * v + hi) / p.m22;
    let f_r =
        ((p.m11 - p.m22) * u * r - p.chi_r1 * r - p.chi_r2 * r.abs() * r - p.chi_r3 * r * r * r)
            / p.m33;
    (f_u, f_v, f_r)
}

/// Body accelerations `nu_dot = f + B tau + d`.
pub fn body_accel(
    s: &VesselState,
    p: &VesselParams,
    tau: &ControlInput,
    d: &Disturbance,
) -> (f64, f64, f64) {
    let (f_u, f_v, f_r) = eval_nominal_accel(s, p);
    (
        f_u + p.b_u * tau.tau_u + d.d_u,
        f_v + p.eps_r * tau.tau_r + d.d_v,
        f_r + p.b_r * tau.tau_r + d.d_r,
    )
}

pub fn state_derivative(
    s: &VesselState,
    p: &VesselParams,
    tau: &ControlInput,
    d: &Disturbance,
) -> VesselStateDerivative {
    let (x_dot, y_dot) = s.nav_velocity();
    let (u_dot, v_dot, r_dot) = body_accel(s, p, tau, d);
    VesselStateDerivative {
        x_dot,
        y_dot,
        psi_dot: s.r,
        u_dot,
        v_dot,
        r_dot,
    }
}

/// Maps three uniform draws in `[0, 1]` to a disturbance: `d_i = d_iM (1 - 2 draw_i)`.
pub fn disturbance_from_draws(draws: [f64; 3], p: &VesselParams) -> Disturbance {
    Disturbance {
        d_u: p.d_um * (1.0 - 2.0 * draws[0]),
        d_v: p.d_vm * (1.0 - 2.0 * draws[1]),
        d_r: p.d_rm * (1.0 - 2.0 * draws[2]),
    }
}

/// Draws a disturbance uniform on the bound box. Consumes exactly three samples.
pub fn sample_disturbance<R: Rng + ?Sized>(rng: &mut R, p: &VesselParams) -> Disturbance {
    let draws = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
    disturbance_from_draws(draws, p)
}
