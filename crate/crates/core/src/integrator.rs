//! Classical fixed-step Runge-Kutta.

use crate::vessel::{state_derivative, ControlInput, Disturbance, VesselParams, VesselState};

/// One RK4 step of `y' = f(t, y)`.
pub fn rk4<const N: usize, F>(t: f64, y: &[f64; N], dt: f64, mut f: F) -> [f64; N]
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let axpy = |a: f64, k: &[f64; N]| -> [f64; N] { std::array::from_fn(|i| y[i] + a * k[i]) };
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * dt, &axpy(0.5 * dt, &k1));
    let k3 = f(t + 0.5 * dt, &axpy(0.5 * dt, &k2));
    let k4 = f(t + dt, &axpy(dt, &k3));
    std::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Advances the vessel one step with control and disturbance held constant.
///
/// The heading is integrated unwrapped inside the step and wrapped on return.
pub fn rk4_step(
    state: &VesselState,
    params: &VesselParams,
    tau: &ControlInput,
    d: &Disturbance,
    dt: f64,
) -> VesselState {
    let y = rk4(0.0, &state.to_array(), dt, |_, y| {
        let s = VesselState {
            x: y[0],
            y: y[1],
            psi: y[2],
            u: y[3],
            v: y[4],
            r: y[5],
        };
        state_derivative(&s, params, tau, d).to_array()
    });
    VesselState::from_array(y)
}
