//! The experiment families behind each subcommand.

use std::f64::consts::{LN_2, PI};

use anyhow::Result;
use legendrian_core::analysis::{
    accumulation_run, displacement_scan, stokes_cross_check, AccumulationParams, AnalysisOptions,
    DisplacementRecord,
};
use legendrian_core::foliation::{
    build_omega, eta_loop_integral, holonomy_map, loop_c, loop_tau, real_form_identity_check,
    residue_oracle, PlanarFoliation,
};
use legendrian_core::geometry::{distance, norm, Point};
use legendrian_core::lifting::{chart_for_delta, DistributionChart, LiftOptions};
use legendrian_core::ode::Dopri5;
use legendrian_core::quadrature::Quadrature;
use legendrian_core::selftest::{SelftestConfig, Suite};
use legendrian_core::C64;
use rayon::prelude::*;

use crate::config::{ConfigError, ExperimentConfig};
use crate::output::{complex, real, Table};

/// Rendered CSV plus the outcome of the subcommand's own checks.
pub struct Report {
    pub table: Table,
    pub passed: bool,
    pub notes: Vec<String>,
}

const PREFIX: [&str; 6] = ["experiment", "r", "w", "rtol", "atol", "quad_tol"];

fn columns(extra: &[&'static str]) -> Vec<&'static str> {
    PREFIX.iter().chain(extra).copied().collect()
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    experiment: &'static str,
    /// Integrator `(rtol, atol)` actually used by this experiment.
    solver: (f64, f64),
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a ExperimentConfig, experiment: &'static str) -> Self {
        Ctx {
            cfg,
            experiment,
            solver: (cfg.tolerances.rtol, cfg.tolerances.atol),
        }
    }

    fn prefix(&self, r: Option<f64>, w: Option<C64>) -> Vec<String> {
        vec![
            self.experiment.to_string(),
            r.map(real).unwrap_or_default(),
            w.map(complex).unwrap_or_default(),
            real(self.solver.0),
            real(self.solver.1),
            real(self.cfg.tolerances.quad),
        ]
    }

    fn quad(&self) -> Quadrature {
        Quadrature::with_tol(self.cfg.tolerances.quad)
    }

    fn lift_options(&self) -> LiftOptions {
        LiftOptions {
            solver: Dopri5::new(self.solver.0, self.solver.1),
            ..LiftOptions::default()
        }
    }

    fn analysis_options(&self) -> AnalysisOptions {
        AnalysisOptions {
            lift: self.lift_options(),
            quad: self.quad(),
            surface_tol: self.cfg.tolerances.surface,
        }
    }

    fn foliation(&self) -> Result<PlanarFoliation> {
        Ok(PlanarFoliation::new(&self.quad())?)
    }

    fn chart(&self, nu: f64) -> Result<DistributionChart> {
        let c = &self.cfg.chart;
        chart_for_delta(self.cfg.p_expr()?, self.cfg.q_expr()?, c.delta, nu, c.clamp)
            .map_err(|e| ConfigError(format!("chart.P/chart.Q: {e}")).into())
    }
}

pub fn holonomy(cfg: &ExperimentConfig) -> Result<Report> {
    let ctx = Ctx::new(cfg, "holonomy");
    let quad = ctx.quad();
    let mut table = Table::new(columns(&[
        "loop",
        "x0",
        "h",
        "h_twice",
        "expected",
        "relative_error",
        "residue_oracle",
        "direct_integral",
    ]));
    let mut passed = true;
    let mut notes = Vec::new();
    for (name, path, factor) in [("C", loop_c(), C64::new(-1.0, 0.0)), ("tau", loop_tau(), C64::new(0.5, 0.0))] {
        let oracle = residue_oracle(&path, &quad)?;
        let direct = eta_loop_integral(&path, &quad)?;
        for &x0 in &cfg.run.x0 {
            let h = holonomy_map(&path, x0, &quad)?;
            let hh = holonomy_map(&path, h, &quad)?;
            let expected = factor * x0;
            let err = (h - expected).norm() / x0.norm();
            passed &= err <= 1e-8;
            if name == "C" {
                let back = (hh - x0).norm() / x0.norm();
                passed &= back <= 1e-8;
            }
            let mut row = ctx.prefix(None, None);
            row.extend([
                name.to_string(),
                complex(x0),
                complex(h),
                complex(hh),
                complex(expected),
                real(err),
                complex(oracle),
                complex(direct),
            ]);
            table.push(row);
        }
        notes.push(format!("loop {name}: ∮η = {direct}"));
    }
    Ok(Report { table, passed, notes })
}

pub fn center(cfg: &ExperimentConfig) -> Result<Report> {
    let ctx = Ctx::new(cfg, "center");
    let fol = ctx.foliation()?;
    let identity = real_form_identity_check(cfg.run.samples, cfg.run.seed)?;
    let mut table = Table::new(columns(&[
        "closure_residual",
        "length",
        "nu",
        "sup_rho",
        "sup_rho_prime",
        "gamma1_length",
        "identity_deviation",
    ]));
    let closure = fol.profile.closure_residual;
    for &r in &cfg.run.r_list {
        let orbit = fol.orbit(r);
        let mut row = ctx.prefix(Some(r), None);
        row.extend([
            real(closure),
            real(orbit.length),
            real(fol.nu),
            real(fol.profile.sup_rho),
            real(fol.profile.sup_rho_prime),
            real(fol.gamma1_length),
            real(identity),
        ]);
        table.push(row);
    }
    Ok(Report {
        table,
        passed: closure <= 1e-8 && identity <= 1e-10,
        notes: vec![format!("nu = {:.6}, closure residual {closure:.1e}, identity deviation {identity:.1e}", fol.nu)],
    })
}

pub fn gamma(cfg: &ExperimentConfig) -> Result<Report> {
    let ctx = Ctx::new(cfg, "gamma");
    let fol = ctx.foliation()?;
    let quad = ctx.quad();
    let omega = build_omega();
    let f_end = fol.gamma.f_end();
    let mut table = Table::new(columns(&[
        "start",
        "end",
        "end_gap_relative",
        "length",
        "length_over_r",
        "f_end",
        "tangency_max",
    ]));
    let mut passed = (f_end + LN_2).norm() <= 1e-9;
    let samples = cfg.run.samples;
    let rows = cfg
        .run
        .r_list
        .par_iter()
        .map(|&r| -> Result<Vec<String>> {
            let g = fol.gamma(r);
            let target: Point<2> = [C64::new(r / 2.0, 0.0), C64::new(0.0, 0.0)];
            let end = g.end_point();
            let gap = distance(&end, &target) / r;
            let length = g.length(&quad)?;
            let tangency = (0..=samples)
                .map(|k| {
                    let (p, v) = g.eval(2.0 * PI * k as f64 / samples as f64);
                    omega.eval(&p, &v).norm() / (1.0 + norm(&v))
                })
                .fold(0.0, f64::max);
            let mut row = ctx.prefix(Some(r), None);
            row.extend([
                format!("{};{}", complex(g.start_point()[0]), complex(g.start_point()[1])),
                format!("{};{}", complex(end[0]), complex(end[1])),
                real(gap),
                real(length),
                real(length / r),
                complex(f_end),
                real(tangency),
            ]);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    for row in rows {
        passed &= row[8].parse::<f64>().unwrap_or(f64::INFINITY) <= 1e-9;
        passed &= row[12].parse::<f64>().unwrap_or(f64::INFINITY) <= 1e-8;
        table.push(row);
    }
    Ok(Report {
        table,
        passed,
        notes: vec![format!("f(2π) = {f_end}")],
    })
}

fn check_in_domain(chart: &DistributionChart, r: f64, w: C64) -> Result<()> {
    let p = [C64::new(r, 0.0), C64::new(0.0, 0.0), w];
    if !chart.domain().contains(&p) {
        return Err(ConfigError(format!(
            "hypothesis (r, 0, w) in the chart domain fails for r = {r}, w = {w} (radius {})",
            chart.domain().radii[0]
        ))
        .into());
    }
    Ok(())
}

pub fn displace(cfg: &ExperimentConfig) -> Result<Report> {
    let ctx = Ctx::new(cfg, "displace");
    let fol = ctx.foliation()?;
    let chart = ctx.chart(fol.nu)?;
    let w = cfg.run.w;
    for &r in &cfg.run.r_list {
        check_in_domain(&chart, r, w)?;
    }
    let opts = ctx.analysis_options();
    let scan = displacement_scan(&chart, &fol, &cfg.run.r_list, w, &opts)?;
    let records: Vec<DisplacementRecord> = if cfg.run.stokes {
        cfg.run
            .r_list
            .par_iter()
            .map(|&r| stokes_cross_check(&chart, &fol, r, w, &opts))
            .collect::<legendrian_core::Result<_>>()?
    } else {
        scan.records.clone()
    };
    let mut table = Table::new(columns(&[
        "delta",
        "abs_delta",
        "delta_over_r2",
        "surface",
        "stokes_gap",
        "slope",
        "c_est",
        "epsilon",
        "M",
    ]));
    let slope = scan.slope.unwrap_or(f64::NAN);
    let mut worst_gap: f64 = 0.0;
    for rec in &records {
        worst_gap = worst_gap.max(rec.stokes_gap.unwrap_or(0.0));
        let mut row = ctx.prefix(Some(rec.r), Some(w));
        row.extend([
            complex(rec.delta),
            real(rec.abs_delta),
            complex(rec.delta / (rec.r * rec.r)),
            rec.surface_value.map(complex).unwrap_or_default(),
            rec.stokes_gap.map(real).unwrap_or_default(),
            real(slope),
            real(scan.c_est),
            real(chart.epsilon()),
            real(chart.m()),
        ]);
        table.push(row);
    }
    Ok(Report {
        table,
        passed: worst_gap <= 1e-5 && scan.two_sided(scan.c_est),
        notes: vec![format!(
            "slope {slope:.6}, c_est {:.4}, worst Stokes gap {worst_gap:.1e}, eps*M = {:.3e}",
            scan.c_est,
            chart.epsilon() * chart.m()
        )],
    })
}

pub fn accumulate(cfg: &ExperimentConfig) -> Result<Report> {
    let mut ctx = Ctx::new(cfg, "accumulate");
    ctx.solver = (cfg.tolerances.accumulate_rtol, cfg.tolerances.accumulate_atol);
    let fol = ctx.foliation()?;
    let chart = ctx.chart(fol.nu)?;
    let delta = cfg.chart.delta;
    let params = AccumulationParams {
        r: cfg.run.r.unwrap_or(delta / (4.0 * fol.nu)),
        w: cfg.run.w,
        n_max: cfg.run.n,
        delta,
    };
    params.validate().map_err(|e| ConfigError(format!("run: {e}")))?;
    let opts = ctx.analysis_options();
    let run = accumulation_run(&chart, &fol, params, &opts)?;
    let mut table = Table::new(columns(&[
        "n",
        "scale",
        "w_n",
        "u_n",
        "v_n",
        "gap",
        "bound",
        "loop_length",
        "length_budget",
        "slope",
        "c_est",
        "M",
        "nu",
    ]));
    let k = run.bound_constant();
    let slope = run.slope.unwrap_or(f64::NAN);
    for s in &run.steps {
        let mut row = ctx.prefix(Some(params.r), Some(params.w));
        row.extend([
            s.n.to_string(),
            real(s.scale),
            complex(s.w_n),
            complex(s.u_n),
            complex(s.v_n),
            real(s.gap),
            real(k * s.scale * s.scale),
            real(s.loop_length),
            real(4.0 * run.nu * params.r),
            real(slope),
            real(run.c_est),
            real(run.m),
            real(run.nu),
        ]);
        table.push(row);
    }
    let passed = run.all_distinct()
        && run.upper_bound_holds()
        && run.lower_bound_holds()
        && run.length_budget_holds()
        && run.monotone_after_burn_in()
        && (slope + 2.0).abs() <= 0.1;
    let mut notes = vec![format!("decay slope {slope:.6} over n in {:?}", run.fit_window)];
    if let Some(n) = run.truncated_at {
        notes.push(format!("w_n indistinguishable from w from n = {n}; run truncated"));
    }
    Ok(Report { table, passed, notes })
}

pub fn selftest(cfg: &ExperimentConfig) -> Result<Report> {
    let mut ctx = Ctx::new(cfg, "selftest");
    ctx.solver = (cfg.tolerances.accumulate_rtol, cfg.tolerances.accumulate_atol);
    let suite = Suite::new(SelftestConfig {
        seed: cfg.run.seed,
        accumulation_tol: (cfg.tolerances.accumulate_rtol, cfg.tolerances.accumulate_atol),
        ..SelftestConfig::default()
    });
    let mut table = Table::new(columns(&["criterion", "name", "passed", "detail"]));
    let mut passed = true;
    let mut notes = Vec::new();
    for o in suite.run_all() {
        passed &= o.passed;
        notes.push(o.to_string());
        let mut row = ctx.prefix(None, None);
        row.extend([o.id.to_string(), o.name.to_string(), o.passed.to_string(), o.detail]);
        table.push(row);
    }
    Ok(Report { table, passed, notes })
}
