//! Holonomy displacement of lifted center orbits: the `r²` law, the Stokes
//! cross-check, the Gronwall transfer estimate and the accumulation
//! experiment along the loops `β_1 ∗ … ∗ β_n ∗ α_n ∗ β_n⁻¹ ∗ … ∗ β_1⁻¹`.

use rayon::prelude::*;

use crate::foliation::PlanarFoliation;
use crate::geometry::{ParamPath, Point};
use crate::lifting::{lift_path, DistributionChart, LiftOptions, LiftedPath};
use crate::ode::Sample;
use crate::quadrature::Quadrature;
use crate::{Error, Result, C64};

/// `|Δ|` below `NOISE_FACTOR · ε_machine · |w|` is treated as numerical noise.
pub const NOISE_FACTOR: f64 = 1e3;

pub fn noise_floor(w: C64) -> f64 {
    NOISE_FACTOR * f64::EPSILON * w.norm()
}

#[derive(Debug, Clone, Copy)]
pub struct AnalysisOptions {
    pub lift: LiftOptions,
    pub quad: Quadrature,
    /// Relative tolerance of the cone quadrature.
    pub surface_tol: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            lift: LiftOptions::default(),
            quad: Quadrature::default(),
            surface_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacementRecord {
    pub r: f64,
    pub w: C64,
    /// `ζ(2π) - w`.
    pub delta: C64,
    pub abs_delta: f64,
    /// Line value `∮ P dx + Q dy` along the lifted orbit, i.e. the lift gain.
    pub line_value: C64,
    pub surface_value: Option<C64>,
    /// `|line - surface| / |line|`.
    pub stokes_gap: Option<f64>,
}

fn lift_orbit(
    chart: &DistributionChart,
    fol: &PlanarFoliation,
    r: f64,
    w: C64,
    opts: &AnalysisOptions,
) -> Result<LiftedPath> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    lift_path(chart, &fol.orbit(r).path(), w, &opts.lift)
}

/// Lift `α_r` from `(r, 0, w)` and record `Δ = ζ(2π) - w`.
pub fn displacement(
    chart: &DistributionChart,
    fol: &PlanarFoliation,
    r: f64,
    w: C64,
    opts: &AnalysisOptions,
) -> Result<DisplacementRecord> {
    let lifted = lift_orbit(chart, fol, r, w, opts)?;
    Ok(record(r, w, &lifted))
}

fn record(r: f64, w: C64, lifted: &LiftedPath) -> DisplacementRecord {
    let delta = lifted.gain;
    DisplacementRecord {
        r,
        w,
        delta,
        abs_delta: delta.norm(),
        line_value: delta,
        surface_value: None,
        stokes_gap: None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementScan {
    pub records: Vec<DisplacementRecord>,
    /// Least-squares slope of `log|Δ|` against `log r`; `None` with fewer
    /// than two distinct radii.
    pub slope: Option<f64>,
    /// `1.1 · max(|Δ|/r², r²/|Δ|)` over the scan.
    pub c_est: f64,
}

impl DisplacementScan {
    /// Whether `r²/c ≤ |Δ| ≤ c r²` for every record.
    pub fn two_sided(&self, c: f64) -> bool {
        self.records.iter().all(|rec| {
            let r2 = rec.r * rec.r;
            rec.abs_delta <= c * r2 && rec.abs_delta >= r2 / c
        })
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Displacements over `r_list` at fixed `w`, in input order.
pub fn displacement_scan(
    chart: &DistributionChart,
    fol: &PlanarFoliation,
    r_list: &[f64],
    w: C64,
    opts: &AnalysisOptions,
) -> Result<DisplacementScan> {
    if r_list.is_empty() {
        return Err(Error::InvalidArgument("empty radius list".into()));
    }
    let records = r_list
        .par_iter()
        .map(|&r| displacement(chart, fol, r, w, opts))
        .collect::<Result<Vec<_>>>()?;
    for rec in &records {
        if rec.abs_delta <= noise_floor(w) || rec.abs_delta == 0.0 {
            return Err(Error::BelowPrecision { r: rec.r });
        }
    }
    let xs: Vec<f64> = records.iter().map(|r| r.r.ln()).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.abs_delta.ln()).collect();
    let c_est = 1.1
        * records
            .iter()
            .map(|rec| {
                let q = rec.abs_delta / (rec.r * rec.r);
                q.max(1.0 / q)
            })
            .fold(0.0, f64::max);
    Ok(DisplacementScan {
        slope: fit_slope(&xs, &ys),
        records,
        c_est,
    })
}

/// `Δ` as a surface integral over the cone
/// `(t r ρ cos θ, t r ρ sin θ, (1-t) w + t ζ(θ))` plus the flat triangle with
/// vertices `(0,0,w)`, `(r,0,w)`, `(r,0,ζ(2π))`.
pub fn stokes_cross_check(
    chart: &DistributionChart,
    fol: &PlanarFoliation,
    r: f64,
    w: C64,
    opts: &AnalysisOptions,
) -> Result<DisplacementRecord> {
    let lifted = lift_orbit(chart, fol, r, w, opts)?;
    let mut rec = record(r, w, &lifted);
    let scale = rec.abs_delta.max(f64::MIN_POSITIVE);
    let quad = Quadrature {
        abs_tol: 1e-3 * opts.surface_tol * scale,
        rel_tol: opts.surface_tol,
        max_intervals: 2000,
    };
    let cone = cone_integral(chart, &lifted, w, &quad)?;
    let triangle = triangle_integral(chart, r, w, rec.delta, &quad)?;
    let surface = cone + triangle;
    rec.surface_value = Some(surface);
    rec.stokes_gap = Some((rec.line_value - surface).norm() / rec.line_value.norm());
    Ok(rec)
}

fn cone_integral(
    chart: &DistributionChart,
    lifted: &LiftedPath,
    w: C64,
    quad: &Quadrature,
) -> Result<C64> {
    let integrand = |theta: f64, prev: &Sample<C64>, next: &Sample<C64>| -> Result<C64> {
        let (xy, v) = lifted.base.eval(theta);
        let zeta = crate::ode::hermite(prev, next, theta).0;
        let dzeta = chart.lift_rhs(&xy, &v, zeta)?;
        let [x, y] = xy;
        let [dx, dy] = v;
        let area = x * dy - y * dx;
        let zx = (zeta - w) * dx - dzeta * x;
        let zy = (zeta - w) * dy - dzeta * y;
        let inner = quad.integrate(
            |t| {
                let p: Point<3> = [t * x, t * y, w + t * (zeta - w)];
                let twist = chart.q_x().eval(&p)? - chart.p_y().eval(&p)?;
                let pz = chart.p_z().eval(&p)?;
                let qz = chart.q_z().eval(&p)?;
                Ok(t * (twist * area + pz * zx + qz * zy))
            },
            0.0,
            1.0,
        )?;
        Ok(inner.value)
    };
    let mut total = C64::new(0.0, 0.0);
    for k in 0..lifted.piece_count() {
        for pair in lifted.piece_samples(k).windows(2) {
            let (prev, next) = (&pair[0], &pair[1]);
            total += quad
                .integrate(|th| integrand(th, prev, next), prev.t, next.t)?
                .value;
        }
    }
    Ok(total)
}

fn triangle_integral(
    chart: &DistributionChart,
    r: f64,
    w: C64,
    delta: C64,
    quad: &Quadrature,
) -> Result<C64> {
    if !chart.p().mentions(crate::expr::Var::Z) {
        return Ok(C64::new(0.0, 0.0));
    }
    let zero = C64::new(0.0, 0.0);
    let outer = quad.integrate(
        |s| {
            let inner = quad.integrate(
                |t| {
                    let p = [C64::new(s * r, 0.0), zero, w + t * delta];
                    Ok(chart.p_z().eval(&p)? * r * delta)
                },
                0.0,
                s,
            )?;
            Ok(inner.value)
        },
        0.0,
        1.0,
    )?;
    Ok(outer.value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GronwallReport {
    /// `max_t |z_v - z_u| / (|v - u| e^{2 M ℓ(t)})`.
    pub max_ratio: f64,
    pub max_difference: f64,
    pub initial_difference: f64,
    pub samples: usize,
}

/// Relative slack of the Gronwall envelope.
pub const GRONWALL_SLACK: f64 = 1e-6;

/// Lift `base` from `u` and from `v` and verify
/// `|z_v(t) - z_u(t)| ≤ |v - u| e^{2 M ℓ(base|[a,t])}` at the union of step samples.
pub fn gronwall_check(
    chart: &DistributionChart,
    base: &ParamPath<2>,
    u: C64,
    v: C64,
    opts: &AnalysisOptions,
) -> Result<GronwallReport> {
    let lu = lift_path(chart, base, u, &opts.lift)?;
    let lv = lift_path(chart, base, v, &opts.lift)?;
    let mut at: Vec<f64> = lu.samples().chain(lv.samples()).map(|s| s.t).collect();
    at.sort_by(f64::total_cmp);
    at.dedup();
    let lengths = base.cumulative_length(&at, &opts.quad)?;
    let d0 = (v - u).norm();
    let noise = NOISE_FACTOR * f64::EPSILON * (1.0 + lu.max_abs_z.max(lv.max_abs_z));
    let mut max_ratio: f64 = 0.0;
    let mut max_difference: f64 = 0.0;
    for (&s, &len) in at.iter().zip(&lengths) {
        let diff = (lv.z(s) - lu.z(s)).norm();
        let envelope = d0 * (2.0 * chart.m() * len).exp();
        max_difference = max_difference.max(diff);
        if diff > envelope * (1.0 + GRONWALL_SLACK) + noise {
            return Err(Error::BoundViolated {
                what: format!("Gronwall envelope at s = {s}"),
                ratio: diff / envelope,
            });
        }
        if envelope > 0.0 {
            max_ratio = max_ratio.max(diff / envelope);
        }
    }
    Ok(GronwallReport {
        max_ratio,
        max_difference,
        initial_difference: d0,
        samples: at.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccumulationParams {
    pub r: f64,
    pub w: C64,
    pub n_max: usize,
    /// Smallness scale `δ`: requires `r < δ`, `|w| < δ`, `r + |w| < δ`.
    pub delta: f64,
}

impl AccumulationParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("hypothesis {what} fails")));
        if !(self.r > 0.0) {
            return bad("r > 0");
        }
        if !(self.r < self.delta) {
            return bad("r < delta");
        }
        if !(self.w.norm() < self.delta) {
            return bad("|w| < delta");
        }
        if !(self.r + self.w.norm() < self.delta) {
            return bad("r + |w| < delta");
        }
        if self.n_max == 0 || self.n_max > 20 {
            return bad("1 <= N <= 20");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccumulationStep {
    pub n: usize,
    /// `r / 2ⁿ`.
    pub scale: f64,
    pub w_n: C64,
    /// Lift value after the descent `β_1 ∗ … ∗ β_n`.
    pub u_n: C64,
    /// Lift value after `α_n`.
    pub v_n: C64,
    /// `|w_n - w|`.
    pub gap: f64,
    pub loop_length: f64,
    /// Length of the descent chain `β_1 ∗ … ∗ β_n`.
    pub descent_length: f64,
}

impl AccumulationStep {
    /// `|v_n - u_n| e^{∓2Mℓ}` transported back along the descent chain.
    pub fn envelope(&self, m: f64) -> (f64, f64) {
        let d = (self.v_n - self.u_n).norm();
        let k = (2.0 * m * self.descent_length).exp();
        (d / k, d * k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccumulationRun {
    pub params: AccumulationParams,
    pub steps: Vec<AccumulationStep>,
    /// First `n` whose `w_n` could not be told apart from `w`; later steps are dropped.
    pub truncated_at: Option<usize>,
    /// Slope of `log₂|w_n - w|` against `n` over the fit window.
    pub slope: Option<f64>,
    pub fit_window: (usize, usize),
    pub m: f64,
    pub nu: f64,
    pub c_est: f64,
    pub noise_floor: f64,
}

/// Default fit window for the decay slope.
pub const FIT_WINDOW: (usize, usize) = (2, 8);

impl AccumulationRun {
    /// `c_est e^{4Mνr}`.
    pub fn bound_constant(&self) -> f64 {
        self.c_est * (4.0 * self.m * self.nu * self.params.r).exp()
    }

    /// Every `|w_n - w| ≤ c_est e^{4Mνr} (r/2ⁿ)²`.
    pub fn upper_bound_holds(&self) -> bool {
        let k = self.bound_constant();
        self.steps.iter().all(|s| s.gap <= k * s.scale * s.scale)
    }

    /// Every `|v_n - u_n| ≥ (r/2ⁿ)² / c_est`.
    pub fn lower_bound_holds(&self) -> bool {
        self.steps
            .iter()
            .all(|s| (s.v_n - s.u_n).norm() >= s.scale * s.scale / self.c_est)
    }

    /// Every `ℓ(γ_n) < 4νr`.
    pub fn length_budget_holds(&self) -> bool {
        self.steps
            .iter()
            .all(|s| s.loop_length < 4.0 * self.nu * self.params.r)
    }

    pub fn all_distinct(&self) -> bool {
        self.truncated_at.is_none() && self.steps.iter().all(|s| s.gap > self.noise_floor)
    }

    /// `|w_{n+1} - w| < |w_n - w|` for `n ≥ 2`.
    pub fn monotone_after_burn_in(&self) -> bool {
        self.steps
            .windows(2)
            .filter(|p| p[0].n >= 2)
            .all(|p| p[1].gap < p[0].gap)
    }

    /// Largest relative excursion of `|w_n - w|` outside the transported
    /// envelope `|v_n - u_n| e^{±2Mℓ}`, after allowing for the noise floor.
    pub fn envelope_excess(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| {
                let (lo, hi) = s.envelope(self.m);
                let slack = self.noise_floor;
                let over = (s.gap - hi - slack).max(0.0);
                let under = (lo - s.gap - slack).max(0.0);
                over.max(under) / s.gap
            })
            .fold(0.0, f64::max)
    }
}

/// The loop `β_1 ∗ … ∗ β_n ∗ α_n ∗ β_n⁻¹ ∗ … ∗ β_1⁻¹` based at `(r, 0)`.
pub fn accumulation_loop(fol: &PlanarFoliation, r: f64, n: usize) -> ParamPath<2> {
    let betas: Vec<ParamPath<2>> = (0..n).map(|j| fol.gamma(r / 2f64.powi(j as i32))).collect();
    let alpha = fol.orbit(r / 2f64.powi(n as i32)).path();
    let back: Vec<ParamPath<2>> = betas.iter().rev().map(|b| b.reverse()).collect();
    ParamPath::concat_all(betas.iter().chain(std::iter::once(&alpha)).chain(back.iter()))
        .expect("non-empty")
}

/// Lift the loops `γ_n` for `n = 1..N` from `(r, 0, w)`.
pub fn accumulation_run(
    chart: &DistributionChart,
    fol: &PlanarFoliation,
    params: AccumulationParams,
    opts: &AnalysisOptions,
) -> Result<AccumulationRun> {
    params.validate()?;
    let AccumulationParams { r, w, n_max, .. } = params;
    let floor = noise_floor(w);
    let scales: Vec<f64> = (1..=n_max).map(|n| r / 2f64.powi(n as i32)).collect();
    let scan = displacement_scan(chart, fol, &scales, w, opts)?;
    let mut steps = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let path = accumulation_loop(fol, r, n);
            let lifted = lift_path(chart, &path, w, &opts.lift)?;
            let u_n = lifted.piece_end(n - 1);
            let v_n = lifted.piece_end(n);
            let descent_length = (0..n).map(|j| fol.gamma1_length * r / 2f64.powi(j as i32)).sum();
            Ok(AccumulationStep {
                n,
                scale: r / 2f64.powi(n as i32),
                w_n: lifted.z_end,
                u_n,
                v_n,
                gap: (lifted.z_end - w).norm(),
                loop_length: path.length(&opts.quad)?,
                descent_length,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let truncated_at = steps.iter().find(|s| s.gap <= floor).map(|s| s.n);
    if let Some(n) = truncated_at {
        steps.retain(|s| s.n < n);
    }
    let window = FIT_WINDOW;
    let fit: Vec<&AccumulationStep> = steps
        .iter()
        .filter(|s| s.n >= window.0 && s.n <= window.1 && s.gap > floor)
        .collect();
    let xs: Vec<f64> = fit.iter().map(|s| s.n as f64).collect();
    let ys: Vec<f64> = fit.iter().map(|s| s.gap.log2()).collect();
    Ok(AccumulationRun {
        params,
        steps,
        truncated_at,
        slope: fit_slope(&xs, &ys),
        fit_window: window,
        m: chart.m(),
        nu: fol.nu,
        c_est: scan.c_est,
        noise_floor: floor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;
    use crate::geometry::Polydisc;
    use crate::lifting::make_chart;
    use std::sync::OnceLock;

    fn fol() -> &'static PlanarFoliation {
        static F: OnceLock<PlanarFoliation> = OnceLock::new();
        F.get_or_init(|| PlanarFoliation::new(&Quadrature::default()).unwrap())
    }

    fn chart(p: &str, q: &str, radius: f64) -> DistributionChart {
        make_chart(p.parse().unwrap(), q.parse().unwrap(), Polydisc::centered(radius)).unwrap()
    }

    #[test]
    fn slope_fit() {
        assert_eq!(fit_slope(&[1.0], &[2.0]), None);
        let s = fit_slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((s - 2.0).abs() < 1e-15);
    }

    #[test]
    fn contact_displacement_is_w_independent() {
        let c = chart("-y/2", "x/2", 0.1);
        let opts = AnalysisOptions::default();
        let a = displacement(&c, fol(), 0.01, c64(0.0, 0.0), &opts).unwrap();
        let b = displacement(&c, fol(), 0.01, c64(0.02, -0.01), &opts).unwrap();
        assert!((a.delta - b.delta).norm() <= 1e-12 * a.abs_delta);
        assert!(displacement_scan(&c, fol(), &[], c64(0.0, 0.0), &opts).is_err());
    }

    #[test]
    fn stokes_with_strong_z_coupling() {
        let c = chart("-y/2 + z", "x/2 + x*z", 0.5);
        let opts = AnalysisOptions::default();
        for (r, w) in [(0.05, c64(0.1, 0.0)), (0.1, c64(-0.05, 0.02))] {
            let rec = stokes_cross_check(&c, fol(), r, w, &opts).unwrap();
            assert!(rec.stokes_gap.unwrap() < 1e-7, "{rec:?}");
        }
    }

    #[test]
    fn gronwall_trivial_cases() {
        let c = chart("-y/2", "x/2", 0.1);
        let opts = AnalysisOptions::default();
        let base = fol().orbit(0.01).path();
        let rep = gronwall_check(&c, &base, c64(0.001, 0.0), c64(0.001, 0.0), &opts).unwrap();
        assert_eq!(rep.max_difference, 0.0);
        let rep = gronwall_check(&c, &base, c64(0.001, 0.0), c64(0.002, 0.0), &opts).unwrap();
        assert!((rep.max_difference - 0.001).abs() < 1e-12);
        assert!((rep.max_ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn accumulation_preconditions() {
        let c = chart("-y/2", "x/2", 0.1);
        let bad = AccumulationParams {
            r: 0.04,
            w: c64(0.02, 0.0),
            n_max: 4,
            delta: 0.05,
        };
        assert!(accumulation_run(&c, fol(), bad, &AnalysisOptions::default()).is_err());
    }

    #[test]
    fn accumulation_loop_is_closed_and_within_budget() {
        let f = fol();
        let r = 1e-3;
        for n in 1..=4 {
            let l = accumulation_loop(f, r, n);
            assert!(l.endpoint_gap() < 1e-12);
            assert_eq!(l.piece_count(), 2 * n + 1);
            assert!(l.length(&Quadrature::default()).unwrap() < 4.0 * f.nu * r);
        }
    }
}
