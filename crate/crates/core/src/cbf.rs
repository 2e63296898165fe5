//! Surge-speed positivity.
//!
//! Two mechanisms keep the sideslip angle well defined:
//!
//! - a barrier `h = u - delta` enforced through `h_dot >= -alpha(h)`, which
//!   under the worst-case disturbance becomes a lower bound on the surge
//!   force; the reference input is projected onto it,
//! - a design-time threshold on the reference speed floor `u_m` that, given a
//!   known sway bound, guarantees `u > 0` after a finite transient.

use serde::{Deserialize, Serialize};

use crate::controller::ControllerGains;
use crate::emo::{bisect, EmoParams};
use crate::trace::SimTrace;
use crate::vessel::{ControlInput, VesselParams};

/// Class-K function for the barrier condition, extended to negative
/// arguments as an odd function so the constraint stays meaningful when
/// `u < delta` transiently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassK {
    /// `gain * sgn(x) |x|^exponent`
    Power { gain: f64, exponent: f64 },
    /// `gain * x`
    Linear { gain: f64 },
}

impl Default for ClassK {
    fn default() -> Self {
        ClassK::Power {
            gain: 1.0,
            exponent: 2.0,
        }
    }
}

impl ClassK {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            ClassK::Power { gain, exponent } => gain * x.signum() * x.abs().powf(exponent),
            ClassK::Linear { gain } => gain * x,
        }
    }

    fn violations(&self) -> Vec<String> {
        match *self {
            ClassK::Power { gain, exponent } if !(gain > 0.0 && exponent > 0.0) => {
                vec![format!("cbf.alpha power needs gain > 0 and exponent > 0")]
            }
            ClassK::Linear { gain } if !(gain > 0.0) => {
                vec![format!("cbf.alpha linear needs gain > 0")]
            }
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CbfConfig {
    /// Safety margin on surge speed [m/s].
    pub delta: f64,
    pub alpha: ClassK,
}

impl Default for CbfConfig {
    fn default() -> Self {
        Self {
            delta: 0.6,
            alpha: ClassK::default(),
        }
    }
}

impl CbfConfig {
    pub fn barrier(&self, u: f64) -> f64 {
        u - self.delta
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = self.alpha.violations();
        if !(self.delta > 0.0) {
            out.push(format!("cbf.delta must be > 0 (got {})", self.delta));
        }
        out
    }
}

/// Smallest surge force satisfying the barrier condition for every
/// admissible surge disturbance.
pub fn cbf_min_surge_force(u: f64, f_u: f64, params: &VesselParams, cfg: &CbfConfig) -> f64 {
    (params.d_um - f_u - cfg.alpha.eval(cfg.barrier(u))) / params.b_u
}

/// Minimiser of `|tau - tau_star|^2` subject to `tau_u >= tau_lower`.
///
/// The feasible set is a half-plane normal to the surge axis, so the
/// projection only clips the surge component.
pub fn filter_qp(tau_star: &ControlInput, tau_lower: f64) -> ControlInput {
    ControlInput {
        tau_u: tau_star.tau_u.max(tau_lower),
        tau_r: tau_star.tau_r,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Method1Config {
    /// Known bound on |v| [m/s].
    pub v_m: f64,
    pub a_p: f64,
    pub a_u: f64,
}

impl Default for Method1Config {
    fn default() -> Self {
        // a_p = a_u slightly above 1; reproduces the 1.4902 m/s floor of the
        // standard gains with v_m = 0.8 m/s.
        Self {
            v_m: 0.8,
            a_p: 1.0113,
            a_u: 1.0113,
        }
    }
}

impl Method1Config {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.a_p > 1.0) {
            out.push(format!("method1.a_p must be > 1 (got {})", self.a_p));
        }
        if !(self.a_u > 1.0) {
            out.push(format!("method1.a_u must be > 1 (got {})", self.a_u));
        }
        if !(self.v_m >= 0.0) {
            out.push(format!("method1.v_m must be >= 0 (got {})", self.v_m));
        }
        out
    }
}

/// Right-hand side `v_M + c_u a_p sqrt(eps/c) + a_u sqrt(eps/k_u)` at the
/// candidate floor `emo.u_m`; infinite when the gain condition fails there.
pub fn method1_threshold(cfg: &Method1Config, emo: &EmoParams, gains: &ControllerGains) -> f64 {
    let c = emo.contraction_rate();
    if !(c > 0.0) {
        return f64::INFINITY;
    }
    let eps = gains.epsilon();
    cfg.v_m + emo.c_u * cfg.a_p * (eps / c).sqrt() + cfg.a_u * (eps / gains.k_u).sqrt()
}

/// Smallest floor `u_m` with `u_m >= threshold(u_m)`, i.e. the feasibility
/// boundary once the dependence of `c` on `u_m` is taken into account.
pub fn method1_boundary(cfg: &Method1Config, c_u: f64, c_psi: f64, gains: &ControllerGains) -> f64 {
    let gap = |u_m: f64| {
        let emo = EmoParams::new(c_u, c_psi, u_m);
        u_m - method1_threshold(cfg, &emo, gains)
    };
    let probe = EmoParams::new(c_u, c_psi, 1.0);
    // gain condition turns positive just above this floor
    let mut lo = 2.0 * c_u * probe.kappa / c_psi * (1.0 + 1e-12) + 1e-12;
    let mut hi = lo.max(1.0);
    while gap(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    if gap(lo) >= 0.0 {
        return lo;
    }
    bisect(gap, lo, hi, 1e-12)
}

/// Smallest barrier value `u - delta` over a trace; negative means the
/// barrier was violated at some step.
pub fn cbf_margin_trace(trace: &SimTrace, cfg: &CbfConfig) -> f64 {
    trace
        .records
        .iter()
        .map(|r| cfg.barrier(r.state.u))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_bound_examples() {
        let p = VesselParams::default();
        let cfg = CbfConfig::default();
        assert_eq!(cbf_min_surge_force(cfg.delta, p.d_um, &p, &cfg), 0.0);
        let tl = cbf_min_surge_force(cfg.delta + 1.0, 0.0, &p, &cfg);
        assert!((tl - (p.d_um - 1.0) / p.b_u).abs() < 1e-9);
        let calm = p.without_disturbance();
        assert_eq!(cbf_min_surge_force(cfg.delta, 0.0, &calm, &cfg), 0.0);
    }

    #[test]
    fn odd_extension_below_margin() {
        let k = ClassK::default();
        assert_eq!(k.eval(-0.5), -0.25);
        assert_eq!(k.eval(0.0), 0.0);
        assert_eq!(ClassK::Linear { gain: 2.0 }.eval(-0.5), -1.0);
    }

    #[test]
    fn filter_examples() {
        let tau = ControlInput::new(10.0, -3.0);
        assert_eq!(filter_qp(&tau, 5.0), tau);
        let out = filter_qp(&ControlInput::new(0.0, -3.0), 5.0);
        assert_eq!(out, ControlInput::new(5.0, -3.0));
    }

    #[test]
    fn threshold_homogeneity_and_limit() {
        let gains = ControllerGains::default();
        let emo = EmoParams::new(0.2, 0.2, 2.0);
        let cfg = Method1Config {
            v_m: 0.0,
            a_p: 1.5,
            a_u: 1.5,
        };
        let base = method1_threshold(&cfg, &emo, &gains);
        let g4 = ControllerGains {
            eps_ul: 4.0 * gains.eps_ul,
            eps_rl: 4.0 * gains.eps_rl,
            ..gains
        };
        assert!((method1_threshold(&cfg, &emo, &g4) - 2.0 * base).abs() < 1e-12);
        let tiny = ControllerGains {
            eps_ul: 1e-12,
            eps_rl: 1e-12,
            ..gains
        };
        assert!(method1_threshold(&cfg, &emo, &tiny) < 1e-5);
    }

    #[test]
    fn standard_boundary() {
        let b = method1_boundary(
            &Method1Config::default(),
            0.2,
            0.2,
            &ControllerGains::default(),
        );
        assert!((b - 1.4902).abs() < 1e-3, "boundary {b}");
        let emo = EmoParams::new(0.2, 0.2, 1.3);
        assert!(
            method1_threshold(&Method1Config::default(), &emo, &ControllerGains::default()) > 1.3
        );
    }
}
