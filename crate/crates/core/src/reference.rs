//! Piecewise reference trajectory.
//!
//! Each segment prescribes the reference speed `u_ld` and the rate of the
//! reference course `psi_ld`; the pose `(x_d, y_d, psi_ld)` is integrated with
//! RK4 on the simulation grid. `psi_ld` accumulates without wrapping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::rk4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpeedProfile {
    Constant {
        value: f64,
    },
    /// Linear from `from` at segment start to `to` at segment end.
    Ramp {
        from: f64,
        to: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum YawRateProfile {
    /// Constant course rate [rad/s]; zero holds the course.
    Constant { rate: f64 },
    /// `rate * exp((t - t_end) / (t - t_start))`: leaves zero with all
    /// derivatives at `t_start` and reaches `rate` at `t_end`.
    Blend { rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub t_start: f64,
    /// `None` for an open-ended final segment.
    #[serde(default)]
    pub t_end: Option<f64>,
    pub speed: SpeedProfile,
    pub yaw_rate: YawRateProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialPose {
    pub x: f64,
    pub y: f64,
    pub psi_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    pub initial: InitialPose,
    pub segments: Vec<Segment>,
}

impl ReferenceSpec {
    /// Straight run north-east then a smooth-onset constant-rate turn:
    /// course held for 60 s, blended into -0.05 rad/s over (60, 75] s.
    pub fn standard(u_ld: f64) -> Self {
        let speed = SpeedProfile::Constant { value: u_ld };
        Self {
            initial: InitialPose {
                x: 100.0,
                y: 30.0,
                psi_deg: 90.0,
            },
            segments: vec![
                Segment {
                    t_start: 0.0,
                    t_end: Some(60.0),
                    speed,
                    yaw_rate: YawRateProfile::Constant { rate: 0.0 },
                },
                Segment {
                    t_start: 60.0,
                    t_end: Some(75.0),
                    speed,
                    yaw_rate: YawRateProfile::Blend { rate: -0.05 },
                },
                Segment {
                    t_start: 75.0,
                    t_end: None,
                    speed,
                    yaw_rate: YawRateProfile::Constant { rate: -0.05 },
                },
            ],
        }
    }

    /// Smallest reference speed anywhere in the specification.
    pub fn min_speed(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| match s.speed {
                SpeedProfile::Constant { value } => value,
                SpeedProfile::Ramp { from, to } => from.min(to),
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// End of the last bounded segment, or infinity.
    pub fn horizon(&self) -> f64 {
        self.segments
            .last()
            .and_then(|s| s.t_end)
            .unwrap_or(f64::INFINITY)
    }

    /// Structural problems and speed-floor violations against `u_m`.
    pub fn violations(&self, u_m: f64) -> Vec<String> {
        let mut out = Vec::new();
        if self.segments.is_empty() {
            out.push("reference.segments must not be empty".to_string());
            return out;
        }
        if self.segments[0].t_start != 0.0 {
            out.push(format!(
                "reference.segments[0].t_start must be 0 (got {})",
                self.segments[0].t_start
            ));
        }
        let last = self.segments.len() - 1;
        for (i, seg) in self.segments.iter().enumerate() {
            match seg.t_end {
                Some(end) if !(end > seg.t_start) => {
                    out.push(format!("reference.segments[{i}] must have t_end > t_start"))
                }
                None if i != last => out.push(format!(
                    "reference.segments[{i}] is open-ended but not the last segment"
                )),
                None if matches!(seg.yaw_rate, YawRateProfile::Blend { .. }) => out.push(format!(
                    "reference.segments[{i}] blend profile needs a bounded t_end"
                )),
                _ => {}
            }
            if i < last && seg.t_end != Some(self.segments[i + 1].t_start) {
                out.push(format!(
                    "reference.segments[{i}] and [{}] are not contiguous",
                    i + 1
                ));
            }
            let floor = match seg.speed {
                SpeedProfile::Constant { value } => value,
                SpeedProfile::Ramp { from, to } => from.min(to),
            };
            if !(floor >= u_m && floor > 0.0) {
                out.push(format!(
                    "reference.segments[{i}] speed {floor} violates u_ld >= u_m = {u_m} > 0"
                ));
            }
        }
        out
    }

    fn segment_at(&self, t: f64) -> Result<&Segment> {
        if !(t >= 0.0) || t > self.horizon() {
            return Err(Error::OutOfRange { t });
        }
        self.segments
            .iter()
            .find(|s| t <= s.t_end.unwrap_or(f64::INFINITY))
            .ok_or(Error::OutOfRange { t })
    }

    /// `(u_ld, u_ld_dot, psi_ld_dot, psi_ld_ddot)` at time `t`.
    pub fn rates_at(&self, t: f64) -> Result<ProfileRates> {
        let seg = self.segment_at(t)?;
        let (u_ld, u_ld_dot) = match (seg.speed, seg.t_end) {
            (SpeedProfile::Constant { value }, _) => (value, 0.0),
            (SpeedProfile::Ramp { from, to }, Some(end)) => {
                let slope = (to - from) / (end - seg.t_start);
                (from + slope * (t - seg.t_start), slope)
            }
            (SpeedProfile::Ramp { from, .. }, None) => (from, 0.0),
        };
        let (psi_ld_dot, psi_ld_ddot) = match (seg.yaw_rate, seg.t_end) {
            (YawRateProfile::Constant { rate }, _) => (rate, 0.0),
            (YawRateProfile::Blend { rate }, Some(end)) => blend(rate, seg.t_start, end, t),
            (YawRateProfile::Blend { rate }, None) => (rate, 0.0),
        };
        Ok(ProfileRates {
            u_ld,
            u_ld_dot,
            psi_ld_dot,
            psi_ld_ddot,
        })
    }
}

fn blend(rate: f64, start: f64, end: f64, t: f64) -> (f64, f64) {
    let dt0 = t - start;
    if dt0 <= 0.0 {
        return (0.0, 0.0);
    }
    let g = (t - end) / dt0;
    let e = g.exp();
    if e == 0.0 {
        return (0.0, 0.0);
    }
    let g_dot = (end - start) / (dt0 * dt0);
    (rate * e, rate * e * g_dot)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRates {
    pub u_ld: f64,
    pub u_ld_dot: f64,
    pub psi_ld_dot: f64,
    pub psi_ld_ddot: f64,
}

/// Reference signals at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReferenceSample {
    pub t: f64,
    pub x_d: f64,
    pub y_d: f64,
    /// Unwrapped course.
    pub psi_ld: f64,
    pub u_ld: f64,
    pub psi_ld_dot: f64,
    pub u_ld_dot: f64,
    pub psi_ld_ddot: f64,
}

impl ReferenceSample {
    pub fn velocity(&self) -> (f64, f64) {
        let (s, c) = self.psi_ld.sin_cos();
        (self.u_ld * c, self.u_ld * s)
    }

    /// First-order extrapolation by `h` seconds along the sample's own rates.
    pub fn advanced(&self, h: f64) -> Self {
        let (vx, vy) = self.velocity();
        Self {
            t: self.t + h,
            x_d: self.x_d + h * vx,
            y_d: self.y_d + h * vy,
            psi_ld: self.psi_ld + h * self.psi_ld_dot,
            u_ld: self.u_ld + h * self.u_ld_dot,
            psi_ld_dot: self.psi_ld_dot + h * self.psi_ld_ddot,
            u_ld_dot: self.u_ld_dot,
            psi_ld_ddot: self.psi_ld_ddot,
        }
    }
}

/// Integrates the reference pose alongside the simulation.
#[derive(Debug, Clone)]
pub struct ReferenceGenerator {
    spec: ReferenceSpec,
    t: f64,
    pose: [f64; 3],
}

impl ReferenceGenerator {
    pub fn new(spec: ReferenceSpec) -> Self {
        let pose = [
            spec.initial.x,
            spec.initial.y,
            spec.initial.psi_deg.to_radians(),
        ];
        Self { spec, t: 0.0, pose }
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn sample(&self) -> Result<ReferenceSample> {
        let rates = self.spec.rates_at(self.t)?;
        Ok(ReferenceSample {
            t: self.t,
            x_d: self.pose[0],
            y_d: self.pose[1],
            psi_ld: self.pose[2],
            u_ld: rates.u_ld,
            psi_ld_dot: rates.psi_ld_dot,
            u_ld_dot: rates.u_ld_dot,
            psi_ld_ddot: rates.psi_ld_ddot,
        })
    }

    /// Integrates the pose forward to `end`.
    pub fn advance_to(&mut self, end: f64) -> Result<()> {
        let dt = end - self.t;
        self.spec.rates_at(end)?;
        let spec = &self.spec;
        self.pose = rk4(self.t, &self.pose, dt, |t, y| {
            // rates_at only fails outside the spec, which `end` already excluded
            let r = spec.rates_at(t.min(end)).expect("inside horizon");
            [r.u_ld * y[2].cos(), r.u_ld * y[2].sin(), r.psi_ld_dot]
        });
        self.t = end;
        Ok(())
    }
}

/// Reference at time `t`, integrated from zero with step `dt`.
pub fn reference_sample(t: f64, spec: &ReferenceSpec, dt: f64) -> Result<ReferenceSample> {
    if !(t >= 0.0) || t > spec.horizon() {
        return Err(Error::OutOfRange { t });
    }
    let mut gen = ReferenceGenerator::new(spec.clone());
    let n = (t / dt).floor() as usize;
    for k in 1..=n {
        gen.advance_to(k as f64 * dt)?;
    }
    if t - gen.time() > 1e-12 {
        gen.advance_to(t)?;
    }
    gen.sample()
}
