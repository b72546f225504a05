//! The acceptance suite: one check per criterion, each compared against an
//! oracle that does not share code with the computation it checks.

use std::f64::consts::{LN_2, PI};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{
    accumulation_loop, accumulation_run, displacement_scan, gronwall_check, stokes_cross_check,
    AccumulationParams, AccumulationRun, AnalysisOptions,
};
use crate::expr::{RationalExpr, Var};
use crate::foliation::{
    compute_orbit, eta_loop_integral, gamma_curve, holonomy_by_lifting, holonomy_map, lambda,
    loop_c, loop_tau, residue_oracle, PlanarFoliation,
};
use crate::geometry::{distance, ParamPath};
use crate::lifting::{chart_for_delta, levantar_bound_check, lift_path, DistributionChart, LiftedPath};
use crate::ode::Dopri5;
use crate::quadrature::Quadrature;
use crate::{c64, Result, C64};

pub const STANDARD_P: &str = "-y/2";
pub const STANDARD_Q: &str = "x/2";
pub const PERTURBED_P: &str = "-y/2 + z^2/10";
pub const PERTURBED_Q: &str = "x/2 + x*z/20";

/// Radii `2^-4 .. 2^-10` of the displacement scans.
pub fn scan_radii() -> Vec<f64> {
    (4..=10).map(|k| 2f64.powi(-k)).collect()
}

/// `ρ(θ) = sqrt(9/g) · exp(λ(ψ - θ))` with `g = 9cos²θ + sin²θ` and `ψ` the
/// continuous branch of `arg(3cos θ + i sin θ)`: the polar profile of the
/// real orbit through `(1, 0)` in closed form.
pub fn rho_closed_form(theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let g = 9.0 * c * c + s * s;
    let a = s.atan2(3.0 * c);
    let psi = a + 2.0 * PI * ((theta - a) / (2.0 * PI)).round();
    (9.0 / g).sqrt() * (lambda() * (psi - theta)).exp()
}

/// Area enclosed by `α_1` from the closed-form profile, `½ ∮ ρ² dθ`, by the
/// periodic trapezoid rule.
pub fn unit_orbit_area() -> f64 {
    let n = 1 << 14;
    let h = 2.0 * PI / n as f64;
    0.5 * h * (0..n).map(|k| rho_closed_form(k as f64 * h).powi(2)).sum::<f64>()
}

#[derive(Debug, Clone)]
pub struct SelftestConfig {
    pub seed: u64,
    pub gronwall_pairs: usize,
    pub expr_points: usize,
    /// Integrator tolerances `(rtol, atol)` for the accumulation loops.
    pub accumulation_tol: (f64, f64),
}

impl Default for SelftestConfig {
    fn default() -> Self {
        SelftestConfig {
            seed: 20240611,
            gronwall_pairs: 100,
            expr_points: 100,
            accumulation_tol: (1e-13, 1e-16),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] criterion {} {}: {} ({:.2} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

pub const CRITERIA: [(u8, &str); 9] = [
    (1, "holonomy involution"),
    (2, "connecting-curve exponent"),
    (3, "residue identity"),
    (4, "center closure"),
    (5, "quadratic displacement"),
    (6, "stokes cross-check"),
    (7, "accumulation"),
    (8, "lifting contracts"),
    (9, "expression calculus"),
];

/// Shared, lazily built state.
pub struct Suite {
    pub config: SelftestConfig,
    foliation: std::sync::OnceLock<Result<PlanarFoliation, String>>,
}

struct Check {
    ok: bool,
    notes: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Check {
            ok: true,
            notes: Vec::new(),
        }
    }

    fn require(&mut self, cond: bool, note: String) {
        self.ok &= cond;
        if cond {
            self.notes.push(note);
        } else {
            self.notes.push(format!("FAILED {note}"));
        }
    }
}

fn expr(s: &str) -> RationalExpr {
    s.parse().expect("built-in expression parses")
}

impl Suite {
    pub fn new(config: SelftestConfig) -> Self {
        Suite {
            config,
            foliation: std::sync::OnceLock::new(),
        }
    }

    pub fn foliation(&self) -> Result<&PlanarFoliation, String> {
        self.foliation
            .get_or_init(|| PlanarFoliation::new(&Quadrature::default()).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn chart(&self, p: &str, q: &str, delta: f64) -> Result<DistributionChart, String> {
        let nu = self.foliation()?.nu;
        chart_for_delta(expr(p), expr(q), delta, nu, None).map_err(|e| e.to_string())
    }

    pub fn run(&self, id: u8) -> Outcome {
        let (_, name) = CRITERIA[(id - 1) as usize];
        let start = Instant::now();
        let result = match id {
            1 => self.holonomy(),
            2 => self.gamma_exponent(),
            3 => self.residue(),
            4 => self.center(),
            5 => self.quadratic(),
            6 => self.stokes(),
            7 => self.accumulation(),
            8 => self.contracts(),
            9 => self.calculus(),
            _ => Err(format!("no criterion {id}")),
        };
        let elapsed = start.elapsed();
        let (passed, detail) = match result {
            Ok(c) => (c.ok, c.notes.join("; ")),
            Err(e) => (false, format!("error: {e}")),
        };
        Outcome {
            id,
            name,
            passed,
            detail,
            elapsed,
        }
    }

    pub fn run_all(&self) -> Vec<Outcome> {
        CRITERIA.iter().map(|(id, _)| self.run(*id)).collect()
    }

    fn holonomy(&self) -> Result<Check, String> {
        let start = Instant::now();
        let quad = Quadrature::default();
        let c = loop_c();
        let mut chk = Check::new();
        for x0 in [c64(1e-2, 0.0), c64(1e-3, 1e-3)] {
            let h = holonomy_map(&c, x0, &quad).map_err(|e| e.to_string())?;
            let hh = holonomy_map(&c, h, &quad).map_err(|e| e.to_string())?;
            let e1 = (h + x0).norm() / x0.norm();
            let e2 = (hh - x0).norm() / x0.norm();
            chk.require(e1 <= 1e-8, format!("|h(x0)+x0|/|x0| = {e1:.1e} at x0 = {x0}"));
            chk.require(e2 <= 1e-8, format!("|h(h(x0))-x0|/|x0| = {e2:.1e}"));
            let ode = holonomy_by_lifting(&c, x0, &Dopri5::new(1e-12, 1e-16))
                .map_err(|e| e.to_string())?;
            let e3 = (ode - h).norm() / x0.norm();
            chk.require(e3 <= 1e-8, format!("leaf-lift agreement {e3:.1e}"));
        }
        let t = start.elapsed().as_secs_f64();
        let note = if t < 1.0 { "runtime under 1 s".to_string() } else { format!("runtime {t:.3} s") };
        chk.require(t < 1.0, note);
        Ok(chk)
    }

    fn gamma_exponent(&self) -> Result<Check, String> {
        let fol = self.foliation()?;
        let quad = Quadrature::default();
        let mut chk = Check::new();
        let f_end = fol.gamma.f_end();
        let e = (f_end + LN_2).norm();
        chk.require(e <= 1e-9, format!("|f(2π) + log 2| = {e:.1e}"));
        let oracle = residue_oracle(&loop_tau(), &quad).map_err(|e| e.to_string())?;
        let e = (oracle - c64(-2.0 * PI * lambda(), 0.0)).norm();
        chk.require(e <= 1e-9, format!("|oracle(τ) + 2πλ| = {e:.1e}"));
        let e = (2.0 * f_end - oracle).norm();
        chk.require(e <= 1e-9, format!("|2f(2π) - oracle(τ)| = {e:.1e}"));
        let direct = eta_loop_integral(&loop_tau(), &quad).map_err(|e| e.to_string())?;
        let e = (0.5 * direct - f_end).norm();
        chk.require(e <= 1e-9, format!("|½∮η - f(2π)| = {e:.1e}"));
        Ok(chk)
    }

    fn residue(&self) -> Result<Check, String> {
        let quad = Quadrature::default();
        let mut chk = Check::new();
        let exact = c64(0.0, -2.0 * PI);
        let direct = eta_loop_integral(&loop_c(), &quad).map_err(|e| e.to_string())?;
        let e = (direct - exact).norm() / exact.norm();
        chk.require(e <= 1e-9, format!("|∮_C η + 2πi|/2π = {e:.1e}"));
        let oracle = residue_oracle(&loop_c(), &quad).map_err(|e| e.to_string())?;
        let e = (oracle - exact).norm() / exact.norm();
        chk.require(e <= 1e-9, format!("residue sum deviation {e:.1e}"));
        Ok(chk)
    }

    fn center(&self) -> Result<Check, String> {
        let mut chk = Check::new();
        let a1 = compute_orbit(1.0).map_err(|e| e.to_string())?;
        let half = compute_orbit(0.5).map_err(|e| e.to_string())?;
        let res = a1.closure_residual();
        chk.require(res <= 1e-8, format!("closure residual {res:.1e}"));
        let mut homothety: f64 = 0.0;
        let mut oracle: f64 = 0.0;
        for k in 0..=1000 {
            let th = 2.0 * PI * k as f64 / 1000.0;
            let p = a1.point(th);
            let q = half.point(th);
            homothety = homothety.max((q[0] - 0.5 * p[0]).hypot(q[1] - 0.5 * p[1]));
            oracle = oracle.max((a1.profile.rho(th) - rho_closed_form(th)).abs());
        }
        chk.require(homothety <= 1e-9, format!("max |α_½ - ½α_1| = {homothety:.1e}"));
        chk.require(oracle <= 1e-9, format!("max |ρ - ρ_closed| = {oracle:.1e}"));
        for r in [1e-2, 1e-3] {
            let g = gamma_curve(r).map_err(|e| e.to_string())?;
            let gap = distance(&g.end_point(), &[c64(r / 2.0, 0.0), c64(0.0, 0.0)]) / r;
            chk.require(gap <= 1e-9, format!("|γ_r(2π) - (r/2,0)|/r = {gap:.1e} at r = {r}"));
        }
        Ok(chk)
    }

    fn quadratic(&self) -> Result<Check, String> {
        let fol = self.foliation()?;
        let opts = AnalysisOptions::default();
        let mut chk = Check::new();
        let radii = scan_radii();
        let area = unit_orbit_area();

        let std = self.chart(STANDARD_P, STANDARD_Q, 0.1)?;
        let scan = displacement_scan(&std, fol, &radii, c64(0.01, 0.0), &opts)
            .map_err(|e| e.to_string())?;
        let slope = scan.slope.unwrap_or(f64::NAN);
        chk.require((slope - 2.0).abs() <= 0.01, format!("standard slope {slope:.6}"));
        let worst = scan
            .records
            .iter()
            .map(|rec| (rec.delta - rec.r * rec.r * area).norm() / (rec.r * rec.r * area))
            .fold(0.0, f64::max);
        chk.require(worst <= 1e-8, format!("max |Δ - r²A_1|/(r²A_1) = {worst:.1e} (A_1 = {area:.10})"));

        let pert = self.chart(PERTURBED_P, PERTURBED_Q, 0.05)?;
        let scan = displacement_scan(&pert, fol, &radii, c64(0.005, 0.0), &opts)
            .map_err(|e| e.to_string())?;
        let slope = scan.slope.unwrap_or(f64::NAN);
        chk.require((slope - 2.0).abs() <= 0.05, format!("perturbed slope {slope:.6}"));
        chk.require(
            scan.two_sided(scan.c_est),
            format!("r²/c ≤ |Δ| ≤ c r² with c_est = {:.4}", scan.c_est),
        );
        Ok(chk)
    }

    fn stokes(&self) -> Result<Check, String> {
        let fol = self.foliation()?;
        let opts = AnalysisOptions::default();
        let mut chk = Check::new();
        for (label, p, q, delta) in [
            ("standard", STANDARD_P, STANDARD_Q, 0.1),
            ("perturbed", PERTURBED_P, PERTURBED_Q, 0.05),
        ] {
            let chart = self.chart(p, q, delta)?;
            let grid: Vec<(f64, C64)> = [2f64.powi(-4), 2f64.powi(-6), 2f64.powi(-8)]
                .into_iter()
                .flat_map(|r| {
                    [c64(0.0, 0.0), c64(0.1 * delta, 0.0), c64(0.1 * delta, 0.1 * delta)]
                        .map(|w| (r, w))
                })
                .collect();
            let recs = grid
                .par_iter()
                .map(|&(r, w)| stokes_cross_check(&chart, fol, r, w, &opts))
                .collect::<crate::Result<Vec<_>>>()
                .map_err(|e| e.to_string())?;
            let worst = recs
                .iter()
                .map(|r| r.stokes_gap.unwrap_or(f64::INFINITY))
                .fold(0.0, f64::max);
            chk.require(worst <= 1e-5, format!("{label}: max |line - surface|/|line| = {worst:.1e}"));
        }
        Ok(chk)
    }

    /// Default accumulation parameters `δ = 0.05`, `r = δ/(4ν)`, `w = 0.1δ`, `N = 10`.
    pub fn accumulation_params(&self) -> Result<AccumulationParams, String> {
        let delta = 0.05;
        let nu = self.foliation()?.nu;
        Ok(AccumulationParams {
            r: delta / (4.0 * nu),
            w: c64(0.1 * delta, 0.0),
            n_max: 10,
            delta,
        })
    }

    pub fn accumulation_opts(&self) -> AnalysisOptions {
        let mut opts = AnalysisOptions::default();
        let (rtol, atol) = self.config.accumulation_tol;
        opts.lift.solver = Dopri5::new(rtol, atol);
        opts
    }

    pub fn accumulation_for(&self, p: &str, q: &str) -> Result<AccumulationRun, String> {
        let params = self.accumulation_params()?;
        let chart = self.chart(p, q, params.delta)?;
        accumulation_run(&chart, self.foliation()?, params, &self.accumulation_opts())
            .map_err(|e| e.to_string())
    }

    fn accumulation(&self) -> Result<Check, String> {
        let mut chk = Check::new();
        for (label, p, q) in [
            ("standard", STANDARD_P, STANDARD_Q),
            ("perturbed", PERTURBED_P, PERTURBED_Q),
        ] {
            let run = self.accumulation_for(p, q)?;
            let last = run.steps.last().map_or(f64::NAN, |s| s.gap);
            chk.require(
                run.all_distinct() && run.steps.len() == run.params.n_max,
                format!("{label}: all w_n ≠ w (smallest gap {last:.2e}, floor {:.1e})", run.noise_floor),
            );
            chk.require(
                run.upper_bound_holds(),
                format!("{label}: |w_n - w| ≤ c e^(4Mνr)(r/2ⁿ)² with c = {:.4}", run.bound_constant()),
            );
            chk.require(run.lower_bound_holds(), format!("{label}: |v_n - u_n| ≥ (r/2ⁿ)²/c"));
            let slope = run.slope.unwrap_or(f64::NAN);
            chk.require((slope + 2.0).abs() <= 0.1, format!("{label}: decay slope {slope:.6}"));
            let longest = run.steps.iter().map(|s| s.loop_length).fold(0.0, f64::max);
            chk.require(
                run.length_budget_holds(),
                format!("{label}: max ℓ(γ_n) = {longest:.4e} < 4νr = {:.4e}", 4.0 * run.nu * run.params.r),
            );
            chk.require(run.monotone_after_burn_in(), format!("{label}: monotone for n ≥ 2"));
            let excess = run.envelope_excess();
            chk.require(excess <= 1e-6, format!("{label}: envelope excess {excess:.1e}"));
        }
        Ok(chk)
    }

    fn contracts(&self) -> Result<Check, String> {
        let fol = self.foliation()?;
        let quad = Quadrature::default();
        let opts = AnalysisOptions::default();
        let delta = 0.05;
        let chart = self.chart(PERTURBED_P, PERTURBED_Q, delta)?;
        let r = delta / (4.0 * fol.nu);
        let w = c64(0.1 * delta, 0.0);
        let paths: Vec<(&str, ParamPath<2>)> = vec![
            ("α_r", fol.orbit(r).path()),
            ("γ_r", fol.gamma(r)),
            ("γ_3 loop", accumulation_loop(fol, r, 3)),
            ("α_0.1", fol.orbit(0.1).path()),
        ];
        let mut chk = Check::new();
        let mut lifts: Vec<LiftedPath> = Vec::new();
        let mut worst_rev: f64 = 0.0;
        let mut worst_shift: f64 = 0.0;
        for (_, path) in &paths {
            let fwd = lift_path(&chart, path, w, &opts.lift).map_err(|e| e.to_string())?;
            let back =
                lift_path(&chart, &path.reverse(), fwd.z_end, &opts.lift).map_err(|e| e.to_string())?;
            worst_rev = worst_rev.max((back.z_end - w).norm());
            for l in [&fwd, &back] {
                worst_shift = worst_shift.max(l.endpoint_shift.unwrap_or(f64::INFINITY) / (1.0 + l.z_end.norm()));
            }
            lifts.push(fwd);
            lifts.push(back);
        }
        chk.require(worst_rev <= 1e-9, format!("reversibility {worst_rev:.1e}"));
        chk.require(worst_shift <= 1e-9, format!("halving shift {worst_shift:.1e}"));

        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let base = accumulation_loop(fol, r, 2);
        let pairs: Vec<(C64, C64)> = (0..self.config.gronwall_pairs)
            .map(|_| {
                let mut draw = || {
                    let rad = 0.5 * delta * rng.gen::<f64>().sqrt();
                    C64::from_polar(rad, rng.gen_range(0.0..2.0 * PI))
                };
                (draw(), draw())
            })
            .collect();
        let reports = pairs
            .par_iter()
            .map(|&(u, v)| gronwall_check(&chart, &base, u, v, &opts))
            .collect::<crate::Result<Vec<_>>>();
        match reports {
            Ok(reps) => {
                let worst = reps.iter().map(|r| r.max_ratio).fold(0.0, f64::max);
                chk.require(true, format!("Gronwall holds on {} pairs (max ratio {worst:.6})", reps.len()));
            }
            Err(e) => chk.require(false, format!("Gronwall: {e}")),
        }

        let mut worst_lev: f64 = 0.0;
        for l in &lifts {
            match levantar_bound_check(&chart, l, &quad) {
                Ok(rep) => worst_lev = worst_lev.max(rep.max_ratio),
                Err(e) => {
                    chk.require(false, format!("levantar: {e}"));
                    return Ok(chk);
                }
            }
        }
        chk.require(
            worst_lev <= 1.0,
            format!("|z - z(a)| ≤ 2εℓ on {} lifts (max ratio {worst_lev:.2e})", lifts.len()),
        );
        Ok(chk)
    }

    fn calculus(&self) -> Result<Check, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ 0x9e37);
        let mut exprs: Vec<RationalExpr> = [
            STANDARD_P,
            STANDARD_Q,
            PERTURBED_P,
            PERTURBED_Q,
            "(x^2+1)/(y-3*i)",
            "x*z^2 - (2.5-1.5i)*y^-2",
            "(1 + x*y*z)^3 / (4 + x - z)^2",
        ]
        .iter()
        .map(|s| expr(s))
        .collect();
        for _ in 0..20 {
            exprs.push(random_expr(&mut rng, 4));
        }
        let mut worst_fd: f64 = 0.0;
        let mut round_trip_ok = true;
        let mut checked = 0usize;
        for e in &exprs {
            let reparsed: RationalExpr = e.to_string().parse().map_err(|e: crate::Error| e.to_string())?;
            let mut taken = 0;
            let mut tries = 0;
            while taken < self.config.expr_points && tries < 50 * self.config.expr_points {
                tries += 1;
                let p: [C64; 3] =
                    std::array::from_fn(|_| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                let Some(dev) = fd_deviation(e, &p) else { continue };
                worst_fd = worst_fd.max(dev);
                let a = e.eval(&p).map_err(|e| e.to_string())?;
                let b = reparsed.eval(&p).map_err(|e| e.to_string())?;
                round_trip_ok &= a == b;
                taken += 1;
            }
            checked += taken;
        }
        let mut chk = Check::new();
        chk.require(worst_fd <= 1e-6, format!("max derivative vs central difference {worst_fd:.1e}"));
        chk.require(
            round_trip_ok,
            format!("parse(render(e)) bit-identical on {checked} points over {} expressions", exprs.len()),
        );
        Ok(chk)
    }
}

/// Worst relative gap between symbolic partials and central differences at
/// `p` with `h = 1e-5`, or `None` when `p` is too close to a pole.
pub fn fd_deviation(e: &RationalExpr, p: &[C64; 3]) -> Option<f64> {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let value = e.eval(p).ok()?;
    if value.norm() > 1e3 {
        return None;
    }
    for v in Var::ALL {
        let d = e.derivative(v).eval(p).ok()?;
        let mut hi = *p;
        let mut lo = *p;
        hi[v.index()] += h;
        lo[v.index()] -= h;
        let fd = (e.eval(&hi).ok()? - e.eval(&lo).ok()?) / (2.0 * h);
        if d.norm() > 1e3 {
            return None;
        }
        worst = worst.max((d - fd).norm() / (1.0 + d.norm()));
    }
    Some(worst)
}

/// Random expression tree over `x, y, z` and complex literals. Divisors are
/// shifted away from zero on the unit polydisc where the numerator allows.
pub fn random_expr<R: Rng>(rng: &mut R, depth: u32) -> RationalExpr {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..4) {
            0 => RationalExpr::var(Var::X),
            1 => RationalExpr::var(Var::Y),
            2 => RationalExpr::var(Var::Z),
            _ => RationalExpr::constant(c64(
                (rng.gen_range(-4.0..4.0) * 4.0f64).round() / 4.0,
                if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(-2.0..2.0) },
            )),
        };
    }
    let a = random_expr(rng, depth - 1);
    match rng.gen_range(0..6) {
        0 => a + random_expr(rng, depth - 1),
        1 => a - random_expr(rng, depth - 1),
        2 => a * random_expr(rng, depth - 1),
        3 => {
            let shift = RationalExpr::real(rng.gen_range(3.0..5.0));
            a / (shift + random_expr(rng, 0))
        }
        4 => a.powi(rng.gen_range(-2..=3)),
        _ => -a,
    }
}
