//! Dormand–Prince 5(4) integrator with embedded error control, for scalar
//! real or complex states.
//!
//! Complex states are advanced component-wise by the same Runge–Kutta pair;
//! step control uses the complex modulus.

use std::ops::{Add, Mul, Sub};

use crate::{Error, Result, C64};

pub trait OdeState: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn magnitude(&self) -> f64;
    fn finite(&self) -> bool;
}

impl OdeState for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
}

impl OdeState for C64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// An accepted node of a trajectory: time, state and right-hand side.
#[derive(Debug, Clone, Copy)]
pub struct Sample<S> {
    pub t: f64,
    pub y: S,
    pub dy: S,
}

/// Cubic Hermite interpolation between two accepted nodes; returns value and derivative.
pub fn hermite<S: OdeState>(a: &Sample<S>, b: &Sample<S>, t: f64) -> (S, S) {
    let h = b.t - a.t;
    if h == 0.0 {
        return (a.y, a.dy);
    }
    let s = (t - a.t) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let y = a.y * (2.0 * s3 - 3.0 * s2 + 1.0)
        + a.dy * ((s3 - 2.0 * s2 + s) * h)
        + b.y * (-2.0 * s3 + 3.0 * s2)
        + b.dy * ((s3 - s2) * h);
    let dy = a.y * ((6.0 * s2 - 6.0 * s) / h)
        + a.dy * (3.0 * s2 - 4.0 * s + 1.0)
        + b.y * ((-6.0 * s2 + 6.0 * s) / h)
        + b.dy * (3.0 * s2 - 2.0 * s);
    (y, dy)
}

/// Accepted nodes of one integration, ordered by time.
#[derive(Debug, Clone)]
pub struct Track<S> {
    pub samples: Vec<Sample<S>>,
}

impl<S: OdeState> Track<S> {
    pub fn t_start(&self) -> f64 {
        self.samples[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    pub fn first(&self) -> &Sample<S> {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample<S> {
        &self.samples[self.samples.len() - 1]
    }

    /// Interpolated value and derivative at `t` (clamped to the track interval).
    pub fn eval(&self, t: f64) -> (S, S) {
        let n = self.samples.len();
        if n == 1 || t <= self.samples[0].t {
            return (self.samples[0].y, self.samples[0].dy);
        }
        if t >= self.samples[n - 1].t {
            return (self.samples[n - 1].y, self.samples[n - 1].dy);
        }
        let k = self.samples.partition_point(|s| s.t <= t);
        hermite(&self.samples[k - 1], &self.samples[k], t)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evals: usize,
}

impl std::ops::AddAssign for Stats {
    fn add_assign(&mut self, o: Stats) {
        self.accepted += o.accepted;
        self.rejected += o.rejected;
        self.evals += o.evals;
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 {
            rtol: 1e-11,
            atol: 1e-13,
            max_steps: 200_000,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Dopri5 {
            rtol,
            atol,
            ..Default::default()
        }
    }

    /// Halve both tolerances.
    pub fn halved(&self) -> Self {
        Dopri5 {
            rtol: 0.5 * self.rtol,
            atol: 0.5 * self.atol,
            ..*self
        }
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.atol + self.rtol * a.max(b)
    }

    /// Integrate `y' = rhs(t, y)` from `t0` to `t1 > t0`.
    ///
    /// `on_step(prev, next)` runs after every accepted step and may abort the
    /// integration by returning an error.
    pub fn solve<S, F, O>(
        &self,
        t0: f64,
        t1: f64,
        y0: S,
        mut rhs: F,
        mut on_step: O,
    ) -> Result<(Track<S>, Stats)>
    where
        S: OdeState,
        F: FnMut(f64, S) -> Result<S>,
        O: FnMut(&Sample<S>, &Sample<S>) -> Result<()>,
    {
        let mut stats = Stats::default();
        let f0 = rhs(t0, y0)?;
        stats.evals += 1;
        let mut cur = Sample { t: t0, y: y0, dy: f0 };
        let mut samples = vec![cur];
        if t1 <= t0 {
            return Ok((Track { samples }, stats));
        }
        let span = t1 - t0;
        let mut h = self.initial_step(t0, y0, f0, span, &mut rhs, &mut stats)?;
        let min_h = 1e-14 * span.max(t0.abs()).max(t1.abs()).max(1.0) * 1e-2;
        let mut factor_old: f64 = 1e-4;

        while cur.t < t1 {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::TooManySteps(self.max_steps));
            }
            let last = cur.t + h >= t1 || (t1 - (cur.t + h)) < 1e-3 * h;
            let h_step = if last { t1 - cur.t } else { h };
            if h_step < min_h && !last {
                return Err(Error::StepUnderflow { t: cur.t, h: h_step });
            }
            let (t, y, k1) = (cur.t, cur.y, cur.dy);
            let k2 = rhs(t + C2 * h_step, y + k1 * (A21 * h_step))?;
            let k3 = rhs(t + C3 * h_step, y + (k1 * A31 + k2 * A32) * h_step)?;
            let k4 = rhs(
                t + C4 * h_step,
                y + (k1 * A41 + k2 * A42 + k3 * A43) * h_step,
            )?;
            let k5 = rhs(
                t + C5 * h_step,
                y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h_step,
            )?;
            let t_new = if last { t1 } else { t + h_step };
            let k6 = rhs(
                t_new,
                y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h_step,
            )?;
            let y_new = y + (k1 * B1 + k3 * B3 + k4 * B4 + k5 * B5 + k6 * B6) * h_step;
            let k7 = rhs(t_new, y_new)?;
            stats.evals += 6;
            let err_vec = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h_step;
            let err = if y_new.finite() && k7.finite() {
                err_vec.magnitude() / self.scale(y.magnitude(), y_new.magnitude())
            } else {
                f64::INFINITY
            };

            if err <= 1.0 {
                // Lund-stabilised PI controller (Hairer–Wanner DOPRI5 defaults).
                let fac11 = err.max(1e-10).powf(0.17);
                let fac = (fac11 / factor_old.powf(0.04) / 0.9).clamp(0.1, 5.0);
                factor_old = err.max(1e-4);
                let next = Sample {
                    t: t_new,
                    y: y_new,
                    dy: k7,
                };
                on_step(&cur, &next)?;
                samples.push(next);
                cur = next;
                stats.accepted += 1;
                h = h_step / fac;
            } else {
                stats.rejected += 1;
                let fac = if err.is_finite() {
                    (err.powf(0.2) / 0.9).clamp(1.0, 10.0)
                } else {
                    10.0
                };
                h = h_step / fac;
                if h < min_h {
                    return Err(Error::StepUnderflow { t: cur.t, h });
                }
            }
        }
        Ok((Track { samples }, stats))
    }

    fn initial_step<S, F>(
        &self,
        t0: f64,
        y0: S,
        f0: S,
        span: f64,
        rhs: &mut F,
        stats: &mut Stats,
    ) -> Result<f64>
    where
        S: OdeState,
        F: FnMut(f64, S) -> Result<S>,
    {
        let sc = self.scale(y0.magnitude(), y0.magnitude());
        let d0 = y0.magnitude() / sc;
        let d1 = f0.magnitude() / sc;
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6 * span
        } else {
            (0.01 * d0 / d1).min(span)
        };
        let y1 = y0 + f0 * h0;
        let f1 = rhs(t0 + h0, y1)?;
        stats.evals += 1;
        let d2 = (f1 - f0).magnitude() / sc / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6 * span)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        Ok((100.0 * h0).min(h1).min(span))
    }
}
