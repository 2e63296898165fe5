//! Backstepping tracking law on the reduced model.
//!
//! The kinematic step picks the EMO speed `u_ld_m` as the virtual surge input
//! and the stabilising yaw rate `alpha_rl` as the virtual yaw input. The
//! dynamic step inverts the upper-triangular input matrix
//! `B_l = [[b_ul, eps_ra], [0, b_r]]` and adds smooth domination terms
//! `d_M tanh(sigma zeta / eps)` for the unmatched disturbance.

use serde::{Deserialize, Serialize};

use crate::emo::{emo_modify, EmoOutput, EmoParams};
use crate::error::{Error, Result};
use crate::polar::{
    error_polar, error_polar_rate, reduced_model, sideslip_rate, wrap_angle, ErrorPolar,
    PlanarVelocity, ReducedModel, P_GUARD,
};
use crate::reference::ReferenceSample;
use crate::vessel::{
    body_accel, state_derivative, ControlInput, Disturbance, VesselParams, VesselState,
};

/// `b_ul` must stay above this fraction of `b_u`.
pub const B_UL_GUARD: f64 = 1e-3;

/// Below this `|psi_le|` the half-angle sinc uses its Taylor expansion.
const SINC_TAYLOR: f64 = 1e-6;

/// Step used for directional derivatives in [`DerivativeMode::Analytic`].
const FLOW_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerGains {
    pub k_psi: f64,
    pub k_u: f64,
    pub k_r: f64,
    pub gamma_psi: f64,
    pub gamma_u: f64,
    pub gamma_r: f64,
    pub eps_ul: f64,
    pub eps_rl: f64,
    pub sigma: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self {
            k_psi: 40.0,
            k_u: 800.0,
            k_r: 100.0,
            gamma_psi: 120.0,
            gamma_u: 60.0,
            gamma_r: 1.0,
            eps_ul: 1.0,
            eps_rl: 1.0,
            sigma: 1.0,
        }
    }
}

impl ControllerGains {
    /// Total domination slack `eps_ul + eps_rl`.
    pub fn epsilon(&self) -> f64 {
        self.eps_ul + self.eps_rl
    }

    pub fn with_fixed_point_sigma(self) -> Self {
        Self {
            sigma: fixed_point_sigma(),
            ..self
        }
    }

    pub fn violations(&self) -> Vec<String> {
        [
            ("k_psi", self.k_psi),
            ("k_u", self.k_u),
            ("k_r", self.k_r),
            ("gamma_psi", self.gamma_psi),
            ("gamma_u", self.gamma_u),
            ("gamma_r", self.gamma_r),
            ("eps_ul", self.eps_ul),
            ("eps_rl", self.eps_rl),
            ("sigma", self.sigma),
        ]
        .iter()
        .filter(|(_, v)| !(*v > 0.0 && v.is_finite()))
        .map(|(k, v)| format!("gains.{k} must be > 0 (got {v})"))
        .collect()
    }
}

/// Solution of `sigma = exp(-(sigma + 1))` by fixed-point iteration.
pub fn fixed_point_sigma() -> f64 {
    let mut sigma: f64 = 0.5;
    for _ in 0..200 {
        let next = (-(sigma + 1.0)).exp();
        if (next - sigma).abs() < 1e-15 {
            return next;
        }
        sigma = next;
    }
    sigma
}

/// `tanh(sigma zeta / eps)`: odd, zero at zero, and `|zeta| <= zeta phi(zeta) + eps`
/// whenever `sigma >= exp(-(sigma + 1))`.
pub fn smooth_bound_fn(zeta: f64, sigma: f64, eps: f64) -> f64 {
    (sigma * zeta / eps).tanh()
}

/// `sin(x/2) / (x/2)` with the removable singularity filled in.
pub fn sinc_half(psi_le: f64) -> f64 {
    let h = 0.5 * psi_le;
    if psi_le.abs() < SINC_TAYLOR {
        1.0 - h * h / 6.0
    } else {
        h.sin() / h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrackingErrors {
    pub p_e: f64,
    pub psi_b: f64,
    /// `wrap(psi_ld_m - psi_l)`
    pub psi_le: f64,
    /// `u_ld_m - u_l`
    pub u_le: f64,
    /// `alpha_rl - r_l`
    pub e_rl: f64,
    /// Mean-angle term `wrap((psi_ld_m + psi_l)/2 - psi_b)` on the branch of `psi_le`.
    pub a_psi: f64,
}

/// Kinematic errors from the EMO output and the vessel's total velocity.
/// `e_rl` is left at zero; it needs the stabilising yaw rate.
pub fn kinematic_errors(err: &ErrorPolar, emo: &EmoOutput, u_l: f64, psi_l: f64) -> TrackingErrors {
    let psi_le = wrap_angle(emo.psi_ld_m - psi_l);
    TrackingErrors {
        p_e: err.p_e,
        psi_b: err.psi_b,
        psi_le,
        u_le: emo.u_ld_m - u_l,
        e_rl: 0.0,
        // Equal to (psi_ld_m + psi_l)/2 - psi_b modulo 2 pi, but evaluated on the
        // same branch as psi_le so the half-angle identity stays exact.
        a_psi: wrap_angle(psi_l + 0.5 * psi_le - err.psi_b),
    }
}

/// Virtual yaw-rate law.
pub fn stabilizing_yaw_rate(
    errs: &TrackingErrors,
    u_l: f64,
    psi_ld_m_dot: f64,
    gains: &ControllerGains,
) -> f64 {
    let coupling = errs.p_e * u_l * errs.a_psi.sin() * sinc_half(errs.psi_le);
    psi_ld_m_dot + (gains.k_psi * errs.psi_le - coupling) / gains.gamma_psi
}

/// Time derivative of the EMO heading. At zero position error every
/// azimuth-dependent term vanishes and the raw reference rate is returned.
pub fn emo_heading_rate(
    psi_ld_dot: f64,
    err: &ErrorPolar,
    emo: &EmoOutput,
    p_e_dot: f64,
    psi_b_dot: f64,
    p: &EmoParams,
) -> f64 {
    if err.p_e <= P_GUARD {
        return psi_ld_dot;
    }
    let decay = (-p.c_psi * err.p_e).exp();
    psi_b_dot + (psi_ld_dot - psi_b_dot) * decay - p.c_psi * p_e_dot * emo.varphi
}

/// Backward-difference memory of the dynamic step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControllerState {
    pub prev_alpha_rl: f64,
    pub prev_u_ld_m: f64,
    pub prev_psi_a_dot: f64,
    pub initialized: bool,
}

/// Virtual-input values and, optionally, their exact time derivatives.
/// Missing derivatives are taken by backward difference against the state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VirtualInputs {
    pub alpha_rl: f64,
    pub u_ld_m_dot: Option<f64>,
    pub alpha_rl_dot: Option<f64>,
}

/// Derivatives actually used by [`control_law`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeedforwardRates {
    pub u_ld_m_dot: f64,
    pub alpha_rl_dot: f64,
}

/// Right-hand side `B_l tau` of the dynamic law, before inversion.
pub fn commanded_accel(
    reduced: &ReducedModel,
    errs: &TrackingErrors,
    emo: &EmoOutput,
    rates: &FeedforwardRates,
    gains: &ControllerGains,
) -> (f64, f64) {
    let g = gains;
    let dom_u =
        reduced.d_ulm * smooth_bound_fn(g.gamma_u * errs.u_le * reduced.d_ulm, g.sigma, g.eps_ul);
    let dom_r =
        reduced.d_rm * smooth_bound_fn(g.gamma_r * errs.e_rl * reduced.d_rm, g.sigma, g.eps_rl);
    let cross = errs.p_e * (emo.psi_ld_m - errs.psi_b).cos();
    let surge = rates.u_ld_m_dot - reduced.f_ul + (g.k_u * errs.u_le + cross) / g.gamma_u + dom_u;
    let yaw = rates.alpha_rl_dot - reduced.f_rl
        + (g.k_r * errs.e_rl + g.gamma_psi * errs.psi_le) / g.gamma_r
        + dom_r;
    (surge, yaw)
}

/// Solves `B_l tau = (surge, yaw)` for the upper-triangular `B_l`.
pub fn invert_input_matrix(reduced: &ReducedModel, surge: f64, yaw: f64) -> Result<ControlInput> {
    let guard = B_UL_GUARD * reduced.b_u;
    if !(reduced.b_ul >= guard) {
        return Err(Error::GainSingular {
            b_ul: reduced.b_ul,
            guard,
        });
    }
    let tau_r = yaw / reduced.b_r;
    let tau_u = (surge - reduced.eps_ra * tau_r) / reduced.b_ul;
    Ok(ControlInput { tau_u, tau_r })
}

/// Full dynamic control law. Returns the reference input and the updated
/// backward-difference memory.
pub fn control_law(
    reduced: &ReducedModel,
    errs: &TrackingErrors,
    emo: &EmoOutput,
    inputs: &VirtualInputs,
    gains: &ControllerGains,
    cstate: &ControllerState,
    dt: f64,
) -> Result<(ControlInput, ControllerState)> {
    let rates = feedforward_rates(emo, inputs, cstate, dt);
    let (surge, yaw) = commanded_accel(reduced, errs, emo, &rates, gains);
    let tau = invert_input_matrix(reduced, surge, yaw)?;
    let next = ControllerState {
        prev_alpha_rl: inputs.alpha_rl,
        prev_u_ld_m: emo.u_ld_m,
        prev_psi_a_dot: reduced.psi_a_dot,
        initialized: true,
    };
    Ok((tau, next))
}

pub fn feedforward_rates(
    emo: &EmoOutput,
    inputs: &VirtualInputs,
    cstate: &ControllerState,
    dt: f64,
) -> FeedforwardRates {
    let backward = |now: f64, prev: f64| {
        if cstate.initialized && dt > 0.0 {
            (now - prev) / dt
        } else {
            0.0
        }
    };
    FeedforwardRates {
        u_ld_m_dot: inputs
            .u_ld_m_dot
            .unwrap_or_else(|| backward(emo.u_ld_m, cstate.prev_u_ld_m)),
        alpha_rl_dot: inputs
            .alpha_rl_dot
            .unwrap_or_else(|| backward(inputs.alpha_rl, cstate.prev_alpha_rl)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LyapunovDiag {
    pub v1: f64,
    pub v2: f64,
    pub lambda: f64,
    pub envelope: f64,
}

/// Guaranteed decay rate `min{2c, 2k_psi/gamma_psi, 2k_u/gamma_u, 2k_r/gamma_r}`.
pub fn decay_rate(c: f64, g: &ControllerGains) -> f64 {
    (2.0 * c)
        .min(2.0 * g.k_psi / g.gamma_psi)
        .min(2.0 * g.k_u / g.gamma_u)
        .min(2.0 * g.k_r / g.gamma_r)
}

pub fn lyapunov_values(errs: &TrackingErrors, g: &ControllerGains) -> (f64, f64) {
    let v1 = 0.5 * (errs.p_e * errs.p_e + g.gamma_psi * errs.psi_le * errs.psi_le);
    let v2 = v1 + 0.5 * (g.gamma_u * errs.u_le * errs.u_le + g.gamma_r * errs.e_rl * errs.e_rl);
    (v1, v2)
}

/// Values of `V1`, `V2` and the ultimate-bound envelope
/// `eps/lambda + (V2(0) - eps/lambda) exp(-lambda t)`.
pub fn lyapunov_diag(
    errs: &TrackingErrors,
    emo: &EmoOutput,
    gains: &ControllerGains,
    t: f64,
    v2_0: f64,
) -> LyapunovDiag {
    let (v1, v2) = lyapunov_values(errs, gains);
    let lambda = decay_rate(emo.c, gains);
    let floor = gains.epsilon() / lambda;
    LyapunovDiag {
        v1,
        v2,
        lambda,
        envelope: floor + (v2_0 - floor) * (-lambda * t).exp(),
    }
}

/// How the controller obtains `d/dt u_ld_m`, `d/dt alpha_rl` and the sideslip
/// acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    /// Backward differences over one control period.
    #[default]
    BackwardDifference,
    /// Exact rates of change along the disturbance-free vector field, with
    /// the control input held over the step. Only meaningful when the
    /// disturbance is zero.
    Analytic,
}

/// Everything the controller computes at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerOutput {
    pub tau_star: ControlInput,
    pub reduced: ReducedModel,
    pub err: ErrorPolar,
    pub emo: EmoOutput,
    pub errs: TrackingErrors,
    pub alpha_rl: f64,
    pub psi_ld_m_dot: f64,
    pub rates: FeedforwardRates,
    pub diag: LyapunovDiag,
}

/// Kinematic-level quantities as functions of vessel state and reference.
#[derive(Debug, Clone, Copy, PartialEq)]
struct KinematicSignals {
    err: ErrorPolar,
    emo: EmoOutput,
    errs: TrackingErrors,
    alpha_rl: f64,
    psi_ld_m_dot: f64,
    u_l: f64,
    psi_l: f64,
}

fn kinematic_signals(
    s: &VesselState,
    rf: &ReferenceSample,
    emo_p: &EmoParams,
    gains: &ControllerGains,
) -> Result<KinematicSignals> {
    let body = crate::polar::body_polar(s.u, s.v)?;
    let psi_l = wrap_angle(s.psi + body.psi_a);
    let err = error_polar((rf.x_d, rf.y_d), (s.x, s.y));
    let emo = emo_modify(rf.u_ld, rf.psi_ld, &err, emo_p);
    let (p_e_dot, psi_b_dot) = error_polar_rate(
        &err,
        PlanarVelocity::new(rf.u_ld, rf.psi_ld),
        PlanarVelocity::new(body.u_l, psi_l),
    );
    let psi_ld_m_dot = emo_heading_rate(rf.psi_ld_dot, &err, &emo, p_e_dot, psi_b_dot, emo_p);
    let errs = kinematic_errors(&err, &emo, body.u_l, psi_l);
    let alpha_rl = stabilizing_yaw_rate(&errs, body.u_l, psi_ld_m_dot, gains);
    Ok(KinematicSignals {
        err,
        emo,
        errs,
        alpha_rl,
        psi_ld_m_dot,
        u_l: body.u_l,
        psi_l,
    })
}

fn shift_state(s: &VesselState, tangent: &[f64; 6], h: f64) -> VesselState {
    let a = s.to_array();
    VesselState::from_array(std::array::from_fn(|i| a[i] + h * tangent[i]))
}

/// One controller instance; owns its backward-difference memory.
#[derive(Debug, Clone)]
pub struct Controller {
    pub params: VesselParams,
    pub gains: ControllerGains,
    pub emo: EmoParams,
    pub mode: DerivativeMode,
    pub state: ControllerState,
    v2_0: Option<f64>,
}

impl Controller {
    pub fn new(
        params: VesselParams,
        gains: ControllerGains,
        emo: EmoParams,
        mode: DerivativeMode,
    ) -> Self {
        Self {
            params,
            gains,
            emo,
            mode,
            state: ControllerState::default(),
            v2_0: None,
        }
    }

    /// Computes the reference input at time `t`.
    ///
    /// `last_tau` is the input applied over the previous step; the controller
    /// uses it to estimate the body acceleration.
    pub fn step(
        &mut self,
        t: f64,
        s: &VesselState,
        rf: &ReferenceSample,
        last_tau: &ControlInput,
        dt: f64,
    ) -> Result<ControllerOutput> {
        let kin = kinematic_signals(s, rf, &self.emo, &self.gains)?;
        let (tau, reduced, inputs) = match self.mode {
            DerivativeMode::BackwardDifference => {
                let (u_dot, v_dot, r_dot) =
                    body_accel(s, &self.params, last_tau, &Disturbance::default());
                let prev = self.state.initialized.then_some(self.state.prev_psi_a_dot);
                let reduced = reduced_model(s, &self.params, (u_dot, v_dot, r_dot), prev, dt)?;
                let inputs = VirtualInputs {
                    alpha_rl: kin.alpha_rl,
                    ..Default::default()
                };
                let mut errs = kin.errs;
                errs.e_rl = kin.alpha_rl - reduced.r_l;
                let (tau, _) = control_law(
                    &reduced,
                    &errs,
                    &kin.emo,
                    &inputs,
                    &self.gains,
                    &self.state,
                    dt,
                )?;
                (tau, reduced, inputs)
            }
            DerivativeMode::Analytic => self.analytic_law(s, rf, &kin, last_tau)?,
        };

        let mut errs = kin.errs;
        errs.e_rl = kin.alpha_rl - reduced.r_l;
        let rates = feedforward_rates(&kin.emo, &inputs, &self.state, dt);
        let (_, v2) = lyapunov_values(&errs, &self.gains);
        let v2_0 = *self.v2_0.get_or_insert(v2);
        let diag = lyapunov_diag(&errs, &kin.emo, &self.gains, t, v2_0);

        self.state = ControllerState {
            prev_alpha_rl: kin.alpha_rl,
            prev_u_ld_m: kin.emo.u_ld_m,
            prev_psi_a_dot: reduced.psi_a_dot,
            initialized: true,
        };

        Ok(ControllerOutput {
            tau_star: tau,
            reduced,
            err: kin.err,
            emo: kin.emo,
            errs,
            alpha_rl: kin.alpha_rl,
            psi_ld_m_dot: kin.psi_ld_m_dot,
            rates,
            diag,
        })
    }

    /// Exact-rate variant: derivatives are directional derivatives of the
    /// closed-form signals along the disturbance-free flow with the candidate
    /// input held. The candidate is refined by fixed-point iteration since the
    /// sideslip and yaw-rate terms depend on the surge acceleration.
    fn analytic_law(
        &self,
        s: &VesselState,
        rf: &ReferenceSample,
        kin: &KinematicSignals,
        last_tau: &ControlInput,
    ) -> Result<(ControlInput, ReducedModel, VirtualInputs)> {
        let zero = Disturbance::default();
        let h = FLOW_STEP;
        let mut tau = *last_tau;
        let mut out = None;
        for _ in 0..3 {
            let tangent = state_derivative(s, &self.params, &tau, &zero).to_array();
            let fwd = shift_state(s, &tangent, h);
            let bwd = shift_state(s, &tangent, -h);
            let k_fwd = kinematic_signals(&fwd, &rf.advanced(h), &self.emo, &self.gains)?;
            let k_bwd = kinematic_signals(&bwd, &rf.advanced(-h), &self.emo, &self.gains)?;

            let u_ld_m_dot = if kin.err.p_e <= P_GUARD {
                rf.u_ld_dot
            } else {
                (k_fwd.emo.u_ld_m - k_bwd.emo.u_ld_m) / (2.0 * h)
            };
            let alpha_rl_dot = (k_fwd.alpha_rl - k_bwd.alpha_rl) / (2.0 * h);

            let slip_rate = |x: &VesselState| {
                let (ud, vd, _) = body_accel(x, &self.params, &tau, &zero);
                sideslip_rate(x.u, x.v, ud, vd)
            };
            let psi_a_ddot = (slip_rate(&fwd) - slip_rate(&bwd)) / (2.0 * h);
            let nu_dot = body_accel(s, &self.params, &tau, &zero);
            let reduced =
                reduced_model(s, &self.params, nu_dot, None, 0.0)?.with_psi_a_ddot(psi_a_ddot);

            let inputs = VirtualInputs {
                alpha_rl: kin.alpha_rl,
                u_ld_m_dot: Some(u_ld_m_dot),
                alpha_rl_dot: Some(alpha_rl_dot),
            };
            let mut errs = kin.errs;
            errs.e_rl = kin.alpha_rl - reduced.r_l;
            let (next, _) = control_law(
                &reduced,
                &errs,
                &kin.emo,
                &inputs,
                &self.gains,
                &self.state,
                0.0,
            )?;
            tau = next;
            out = Some((next, reduced, inputs));
        }
        Ok(out.expect("at least one iteration"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn reduced_at_rest(params: &VesselParams) -> ReducedModel {
        let s = VesselState::new(0.0, 0.0, 0.0, 4.0, 0.0, 0.0);
        let f = crate::vessel::eval_nominal_accel(&s, params);
        reduced_model(&s, params, f, None, 0.01).unwrap()
    }

    fn emo_out(u_ld_m: f64, psi_ld_m: f64) -> EmoOutput {
        EmoOutput {
            u_ld_m,
            psi_ld_m,
            varphi: 0.0,
            c: 0.2,
        }
    }

    #[test]
    fn smooth_fn_basics() {
        assert_eq!(smooth_bound_fn(0.0, 1.0, 1.0), 0.0);
        assert!((smooth_bound_fn(1e3, 1.0, 1.0) - 1.0).abs() < 1e-15);
        assert!((smooth_bound_fn(-1e3, 1.0, 1.0) + 1.0).abs() < 1e-15);
        assert_eq!(
            smooth_bound_fn(-0.3, 0.7, 2.0),
            -smooth_bound_fn(0.3, 0.7, 2.0)
        );
    }

    #[test]
    fn domination_inequality_on_grid() {
        for (sigma, eps) in [(1.0, 1.0), (fixed_point_sigma(), 1.0), (1.0, 0.1)] {
            let n = 2_000_001;
            for i in 0..n {
                let z = -100.0 + 200.0 * i as f64 / (n - 1) as f64;
                assert!(z.abs() <= z * smooth_bound_fn(z, sigma, eps) + eps + 1e-12);
            }
        }
    }

    #[test]
    fn fixed_point_sigma_value() {
        let s = fixed_point_sigma();
        assert!((s - (-(s + 1.0)).exp()).abs() < 1e-14);
        assert!((s - 0.2785).abs() < 1e-4);
    }

    #[test]
    fn sinc_half_values() {
        assert_eq!(sinc_half(0.0), 1.0);
        assert!((sinc_half(PI) - 2.0 / PI).abs() < 1e-15);
        assert!((sinc_half(1e-8) - 1.0).abs() < 1e-15);
        // continuous across the Taylor switch
        let a = sinc_half(SINC_TAYLOR * (1.0 - 1e-9));
        let b = sinc_half(SINC_TAYLOR * (1.0 + 1e-9));
        assert!((a - b).abs() < 1e-15);
        assert_eq!(sinc_half(-0.7), sinc_half(0.7));
    }

    #[test]
    fn yaw_rate_examples() {
        let g = ControllerGains::default();
        let at_origin = TrackingErrors::default();
        assert_eq!(stabilizing_yaw_rate(&at_origin, 3.0, 0.04, &g), 0.04);

        let errs = TrackingErrors {
            psi_le: 0.3,
            ..Default::default()
        };
        let a = stabilizing_yaw_rate(&errs, 3.0, 0.04, &g);
        assert!((a - (0.04 + 40.0 * 0.3 / 120.0)).abs() < 1e-15);

        let errs = TrackingErrors {
            p_e: 1.0,
            a_psi: FRAC_PI_2,
            ..Default::default()
        };
        let a = stabilizing_yaw_rate(&errs, 2.0, 0.01, &g);
        assert!((a - (0.01 - 2.0 / 120.0)).abs() < 1e-15);
    }

    #[test]
    fn yaw_rate_smooth_across_zero_heading_error() {
        let g = ControllerGains::default();
        let alpha = |psi_le: f64| {
            let errs = TrackingErrors {
                p_e: 5.0,
                psi_le,
                a_psi: 0.8,
                ..Default::default()
            };
            stabilizing_yaw_rate(&errs, 6.0, 0.0, &g)
        };
        let h = 1e-7;
        let left = (alpha(0.0) - alpha(-h)) / h;
        let right = (alpha(h) - alpha(0.0)) / h;
        assert!((left - right).abs() < 1e-5);
    }

    #[test]
    fn perfect_tracking_is_feedback_linearisation() {
        let p = VesselParams::default().without_disturbance();
        let red = reduced_at_rest(&p);
        let errs = TrackingErrors::default();
        let inputs = VirtualInputs {
            alpha_rl: 0.0,
            u_ld_m_dot: Some(0.0),
            alpha_rl_dot: Some(0.0),
        };
        let (tau, next) = control_law(
            &red,
            &errs,
            &emo_out(4.0, 0.0),
            &inputs,
            &ControllerGains::default(),
            &ControllerState::default(),
            0.01,
        )
        .unwrap();
        assert!((tau.tau_u - (-red.f_ul / red.b_ul)).abs() < 1e-9);
        assert!((tau.tau_r - (-red.f_rl / red.b_r)).abs() < 1e-9);
        assert!(next.initialized);
    }

    #[test]
    fn minimum_phase_yaw_channel_is_decoupled() {
        let p = VesselParams::default();
        let red = reduced_at_rest(&p);
        let g = ControllerGains::default();
        let errs = TrackingErrors {
            p_e: 3.0,
            psi_b: 0.2,
            psi_le: 0.1,
            u_le: 0.5,
            e_rl: -0.02,
            a_psi: 0.4,
        };
        let inputs = VirtualInputs {
            alpha_rl: 0.05,
            u_ld_m_dot: Some(0.3),
            alpha_rl_dot: Some(-0.01),
        };
        let (tau, _) = control_law(
            &red,
            &errs,
            &emo_out(4.5, 0.3),
            &inputs,
            &g,
            &ControllerState::default(),
            0.01,
        )
        .unwrap();
        let phi = smooth_bound_fn(g.gamma_r * errs.e_rl * p.d_rm, g.sigma, g.eps_rl);
        let expected = (-0.01 - red.f_rl
            + (g.k_r * errs.e_rl + g.gamma_psi * errs.psi_le) / g.gamma_r
            + p.d_rm * phi)
            / p.b_r;
        assert!((tau.tau_r - expected).abs() <= 1e-12 * expected.abs());

        // the surge input does not depend on the yaw-channel state
        let errs2 = TrackingErrors {
            e_rl: 0.3,
            psi_le: -0.2,
            ..errs
        };
        let (tau2, _) = control_law(
            &red,
            &errs2,
            &emo_out(4.5, 0.3),
            &inputs,
            &g,
            &ControllerState::default(),
            0.01,
        )
        .unwrap();
        let errs3 = TrackingErrors {
            psi_le: -0.2,
            ..errs
        };
        // psi_le also enters the surge channel only through p_e cos(psi_ld_m - psi_b), which is fixed here
        let (tau3, _) = control_law(
            &red,
            &errs3,
            &emo_out(4.5, 0.3),
            &inputs,
            &g,
            &ControllerState::default(),
            0.01,
        )
        .unwrap();
        assert_eq!(tau2.tau_u, tau3.tau_u);
        assert_eq!(tau.tau_u, tau3.tau_u);
    }

    #[test]
    fn backward_differences_use_memory() {
        let emo = emo_out(5.0, 0.0);
        let inputs = VirtualInputs {
            alpha_rl: 0.2,
            ..Default::default()
        };
        let first = feedforward_rates(&emo, &inputs, &ControllerState::default(), 0.01);
        assert_eq!(first, FeedforwardRates::default());
        let mem = ControllerState {
            prev_alpha_rl: 0.1,
            prev_u_ld_m: 4.9,
            prev_psi_a_dot: 0.0,
            initialized: true,
        };
        let r = feedforward_rates(&emo, &inputs, &mem, 0.01);
        assert!((r.u_ld_m_dot - 10.0).abs() < 1e-9);
        assert!((r.alpha_rl_dot - 10.0).abs() < 1e-9);
    }

    #[test]
    fn gain_guard_trips() {
        let p = VesselParams::default();
        let mut red = reduced_at_rest(&p);
        red.b_ul = 0.5 * B_UL_GUARD * p.b_u;
        let err = invert_input_matrix(&red, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::GainSingular { .. }));
    }

    #[test]
    fn lyapunov_examples() {
        let g = ControllerGains::default();
        let emo = emo_out(1.0, 0.0);
        let d = lyapunov_diag(&TrackingErrors::default(), &emo, &g, 3.0, 0.0);
        assert_eq!((d.v1, d.v2), (0.0, 0.0));
        let errs = TrackingErrors {
            p_e: 1.0,
            ..Default::default()
        };
        let d = lyapunov_diag(&errs, &emo, &g, 0.0, 0.5);
        assert_eq!(d.v2, 0.5);
        assert!((d.envelope - 0.5).abs() < 1e-15);
        assert!((d.lambda - 0.4).abs() < 1e-15);
    }

    #[test]
    fn gains_validation() {
        assert!(ControllerGains::default().violations().is_empty());
        let bad = ControllerGains {
            k_u: 0.0,
            sigma: -1.0,
            ..Default::default()
        };
        assert_eq!(bad.violations().len(), 2);
    }
}
