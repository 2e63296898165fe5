//! Exponential modification of orientation (EMO).
//!
//! Instead of the raw reference `(u_ld, psi_ld)` the vessel is steered
//! towards
//!
//! ```text
//! varphi   = wrap(psi_ld - psi_b) * exp(-c_psi * p_e)
//! u_ld_m   = u_ld + c_u * p_e * cos(varphi)
//! psi_ld_m = psi_b + varphi
//! ```
//!
//! Following `(u_ld_m, psi_ld_m)` exactly contracts the position error at
//! rate `c = min(c_u, c_psi u_m - 2 c_u kappa)`, and the modification fades
//! out as `p_e -> 0`. `kappa` is the scaled minimum of
//! `zeta cos(pi exp(-c_psi zeta))`, obtained from a transcendental root.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use crate::polar::{wrap_angle, ErrorPolar};

/// Root-solve tolerance on `z`.
pub const KAPPA_TOL: f64 = 1e-10;

/// Bisection on a sign-changing bracket. Returns the midpoint of the final
/// bracket once its width drops below `tol`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut f_lo = f(lo);
    debug_assert!(f_lo * f(hi) <= 0.0, "bracket does not change sign");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaSolution {
    /// Root of `cos z = z ln(z / pi) sin z` in `(pi/2, pi)`.
    pub z_star: f64,
    /// Minimiser `c_psi * zeta* = -ln(z*/pi)`.
    pub scaled_zeta_star: f64,
    pub kappa: f64,
}

/// Solves for `z*` by bisection and returns `kappa = -c_psi * min f`.
pub fn solve_kappa() -> KappaSolution {
    let stationarity = |z: f64| z.cos() - z * (z / PI).ln() * z.sin();
    let z_star = bisect(stationarity, FRAC_PI_2, PI, KAPPA_TOL);
    let scaled_zeta_star = -(z_star / PI).ln();
    KappaSolution {
        z_star,
        scaled_zeta_star,
        kappa: -scaled_zeta_star * z_star.cos(),
    }
}

/// Cached `kappa`.
pub fn kappa() -> f64 {
    static KAPPA: OnceLock<f64> = OnceLock::new();
    *KAPPA.get_or_init(|| solve_kappa().kappa)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmoParams {
    pub c_u: f64,
    pub c_psi: f64,
    /// Lower bound on the reference speed.
    pub u_m: f64,
    pub kappa: f64,
}

impl EmoParams {
    pub fn new(c_u: f64, c_psi: f64, u_m: f64) -> Self {
        Self {
            c_u,
            c_psi,
            u_m,
            kappa: kappa(),
        }
    }

    /// Guaranteed contraction rate of the position error.
    pub fn contraction_rate(&self) -> f64 {
        self.c_u.min(check_gain_condition(self))
    }
}

/// `c_psi u_m - 2 c_u kappa`; the gains are admissible iff this is positive.
pub fn check_gain_condition(p: &EmoParams) -> f64 {
    p.c_psi * p.u_m - 2.0 * p.c_u * p.kappa
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmoOutput {
    pub u_ld_m: f64,
    pub psi_ld_m: f64,
    pub varphi: f64,
    pub c: f64,
}

pub fn emo_modify(u_ld: f64, psi_ld: f64, err: &ErrorPolar, p: &EmoParams) -> EmoOutput {
    let varphi = wrap_angle(psi_ld - err.psi_b) * (-p.c_psi * err.p_e).exp();
    EmoOutput {
        u_ld_m: u_ld + p.c_u * err.p_e * varphi.cos(),
        psi_ld_m: wrap_angle(err.psi_b + varphi),
        varphi,
        c: p.contraction_rate(),
    }
}

/// Position-error rate when the vessel moves exactly with the EMO output.
pub fn closed_loop_error_rate(u_ld: f64, psi_ld: f64, err: &ErrorPolar, p: &EmoParams) -> f64 {
    let out = emo_modify(u_ld, psi_ld, err, p);
    u_ld * (psi_ld - err.psi_b).cos() - out.u_ld_m * out.varphi.cos()
}

/// Exact partial derivative of [`closed_loop_error_rate`] with respect to
/// `p_e`, holding the azimuth and reference fixed.
pub fn contraction_margin(u_ld: f64, psi_ld: f64, err: &ErrorPolar, p: &EmoParams) -> f64 {
    let varphi = wrap_angle(psi_ld - err.psi_b) * (-p.c_psi * err.p_e).exp();
    let (s, c) = varphi.sin_cos();
    -p.c_u * c * c - p.c_psi * varphi * s * (u_ld + 2.0 * p.c_u * err.p_e * c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn standard_gains() -> EmoParams {
        EmoParams::new(0.2, 0.2, 1.4902)
    }

    #[test]
    fn kappa_root_values() {
        let k = solve_kappa();
        assert!((k.z_star - 2.2253).abs() < 1e-3);
        assert!((k.kappa - 0.2099).abs() < 1e-3);
        assert!((k.scaled_zeta_star - 0.3448).abs() < 1e-3);
        let residual = k.z_star.cos() - k.z_star * (k.z_star / PI).ln() * k.z_star.sin();
        assert!(residual.abs() < 1e-9);
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-12);
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn gain_margin_examples() {
        let p = EmoParams {
            kappa: 0.2099,
            ..standard_gains()
        };
        assert!((check_gain_condition(&p) - 0.21408).abs() < 1e-12);

        let p = EmoParams {
            c_u: 0.0,
            ..standard_gains()
        };
        assert!((check_gain_condition(&p) - 0.2 * 1.4902).abs() < 1e-15);

        let base = standard_gains();
        let flip = 2.0 * base.c_u * base.kappa / base.c_psi;
        assert!(
            check_gain_condition(&EmoParams {
                u_m: flip * (1.0 + 1e-9),
                ..base
            }) > 0.0
        );
        assert!(
            check_gain_condition(&EmoParams {
                u_m: flip * (1.0 - 1e-9),
                ..base
            }) < 0.0
        );
    }

    #[test]
    fn emo_identity_at_zero_error() {
        let p = standard_gains();
        let out = emo_modify(
            10.0,
            1.2,
            &ErrorPolar {
                p_e: 0.0,
                psi_b: 0.0,
            },
            &p,
        );
        assert_eq!(out.u_ld_m, 10.0);
        assert!((out.psi_ld_m - 1.2).abs() < 1e-15);
    }

    #[test]
    fn emo_aligned_target() {
        let p = standard_gains();
        let out = emo_modify(
            3.0,
            0.7,
            &ErrorPolar {
                p_e: 2.0,
                psi_b: 0.7,
            },
            &p,
        );
        assert!((out.u_ld_m - 3.4).abs() < 1e-15);
        assert!((out.psi_ld_m - 0.7).abs() < 1e-15);
    }

    #[test]
    fn emo_quarter_turn() {
        let p = standard_gains();
        let out = emo_modify(
            10.0,
            FRAC_PI_2,
            &ErrorPolar {
                p_e: 1.0,
                psi_b: 0.0,
            },
            &p,
        );
        let varphi = FRAC_PI_2 * (-0.2f64).exp();
        assert!((out.varphi - varphi).abs() < 1e-15);
        assert!((out.u_ld_m - (10.0 + 0.2 * varphi.cos())).abs() < 1e-14);
    }

    #[test]
    fn emo_continuous_at_zero_error() {
        let p = standard_gains();
        let at_zero = emo_modify(
            4.0,
            0.3,
            &ErrorPolar {
                p_e: 0.0,
                psi_b: 0.0,
            },
            &p,
        );
        for psi_b in [-3.0, -1.0, 0.5, 2.9] {
            let near = emo_modify(4.0, 0.3, &ErrorPolar { p_e: 1e-10, psi_b }, &p);
            assert!((near.u_ld_m - at_zero.u_ld_m).abs() < 1e-9);
            assert!(wrap_angle(near.psi_ld_m - at_zero.psi_ld_m).abs() < 1e-9);
        }
    }

    #[test]
    fn margin_with_zero_angle_is_minus_cu() {
        let p = standard_gains();
        let m = contraction_margin(
            5.0,
            1.0,
            &ErrorPolar {
                p_e: 7.0,
                psi_b: 1.0,
            },
            &p,
        );
        assert!((m + p.c_u).abs() < 1e-15);
    }

    #[test]
    fn margin_matches_central_difference() {
        let p = standard_gains();
        for &(u_ld, psi_ld, p_e, psi_b) in &[
            (1.5, 2.0, 0.3, -0.4),
            (3.0, -2.5, 4.0, 0.9),
            (2.2, 3.0, 12.0, -0.1),
            (4.4, 0.2, 1.7, 2.8),
        ] {
            let h = 1e-5;
            let rate =
                |pe: f64| closed_loop_error_rate(u_ld, psi_ld, &ErrorPolar { p_e: pe, psi_b }, &p);
            let fd = (rate(p_e + h) - rate(p_e - h)) / (2.0 * h);
            let an = contraction_margin(u_ld, psi_ld, &ErrorPolar { p_e, psi_b }, &p);
            assert!((fd - an).abs() < 1e-6, "fd {fd} vs analytic {an}");
        }
    }
}
