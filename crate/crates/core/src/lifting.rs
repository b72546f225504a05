//! Distribution charts `Ω = dz - P dx - Q dy`, path lifting and Legendrian
//! lifts of planar vector fields.

use std::f64::consts::PI;

use crate::error::NormalFormViolation;
use crate::expr::{RationalExpr, Var};
use crate::geometry::{ParamPath, Point, Polydisc};
use crate::ode::{hermite, Dopri5, Sample, Stats, Track};
use crate::quadrature::Quadrature;
use crate::{Error, Result, C64};

/// Tolerance of the three normal-form conditions at the origin.
pub const NORMAL_FORM_TOL: f64 = 1e-12;
/// Angles per coordinate on the sampling grids.
const GRID_ANGLES: usize = 17;
const BOUND_INFLATION: f64 = 1.1;

/// A normalized chart of a 2-plane distribution on a polydisc.
#[derive(Debug, Clone)]
pub struct DistributionChart {
    p: RationalExpr,
    q: RationalExpr,
    p_y: RationalExpr,
    q_x: RationalExpr,
    p_z: RationalExpr,
    q_z: RationalExpr,
    domain: Polydisc,
    epsilon: f64,
    m: f64,
}

impl DistributionChart {
    pub fn p(&self) -> &RationalExpr {
        &self.p
    }
    pub fn q(&self) -> &RationalExpr {
        &self.q
    }
    pub fn p_y(&self) -> &RationalExpr {
        &self.p_y
    }
    pub fn q_x(&self) -> &RationalExpr {
        &self.q_x
    }
    pub fn p_z(&self) -> &RationalExpr {
        &self.p_z
    }
    pub fn q_z(&self) -> &RationalExpr {
        &self.q_z
    }
    pub fn domain(&self) -> &Polydisc {
        &self.domain
    }
    /// Sup bound for `|P|`, `|Q|` and `|1 - Q_x + P_y|` on the domain.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    /// Sup bound for `|P_z|` and `|Q_z|` on the domain.
    pub fn m(&self) -> f64 {
        self.m
    }

    /// Whether both `P` and `Q` ignore `z`.
    pub fn z_independent(&self) -> bool {
        !self.p.mentions(Var::Z) && !self.q.mentions(Var::Z)
    }

    /// `P(x,y,z) x' + Q(x,y,z) y'`.
    pub fn lift_rhs(&self, xy: &Point<2>, v: &Point<2>, z: C64) -> Result<C64> {
        let p = [xy[0], xy[1], z];
        Ok(self.p.eval(&p)? * v[0] + self.q.eval(&p)? * v[1])
    }

    /// `Ω(p)(v) = v_z - P v_x - Q v_y`.
    pub fn omega(&self, p: &Point<3>, v: &Point<3>) -> Result<C64> {
        Ok(v[2] - self.p.eval(p)? * v[0] - self.q.eval(p)? * v[1])
    }
}

fn unit(j: usize, n: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64)
}

/// Distinguished-boundary torus nodes per coordinate.
fn torus_nodes(domain: &Polydisc) -> [Vec<C64>; 3] {
    std::array::from_fn(|k| {
        (0..GRID_ANGLES)
            .map(|j| domain.center[k] + domain.radii[k] * unit(j, GRID_ANGLES))
            .collect()
    })
}

/// Interior nodes per coordinate: the centre and 8 angles on the circles of
/// radius `R/3` and `2R/3`. The first 9 lie on or inside `R/3`.
fn interior_nodes(domain: &Polydisc) -> [Vec<C64>; 3] {
    std::array::from_fn(|k| {
        let c = domain.center[k];
        let r = domain.radii[k];
        let mut v = vec![c];
        for frac in [1.0 / 3.0, 2.0 / 3.0] {
            v.extend((0..8).map(|j| c + frac * r * unit(j, 8)));
        }
        v
    })
}

fn grid_points(nodes: &[Vec<C64>; 3], limit: usize) -> impl Iterator<Item = [C64; 3]> + '_ {
    let n = move |k: usize| nodes[k].len().min(limit);
    (0..n(0)).flat_map(move |a| {
        (0..n(1)).flat_map(move |b| (0..n(2)).map(move |c| [nodes[0][a], nodes[1][b], nodes[2][c]]))
    })
}

fn eval_in_domain(e: &RationalExpr, p: &[C64; 3]) -> Result<C64> {
    match e.eval(p) {
        Ok(v) if v.re.is_finite() && v.im.is_finite() => Ok(v),
        Ok(_) | Err(Error::DivisionByZero { .. }) => Err(Error::PoleInDomain {
            expr: e.to_string(),
            point: *p,
        }),
        Err(e) => Err(e),
    }
}

/// Reject `e` if a pole meets the closed domain. Poles on the grids show up
/// directly; poles elsewhere break the Cauchy reproduction of interior values
/// from the boundary torus.
fn check_pole_free(e: &RationalExpr, domain: &Polydisc) -> Result<()> {
    let torus = torus_nodes(domain);
    let boundary: Vec<C64> = grid_points(&torus, usize::MAX)
        .map(|p| eval_in_domain(e, &p))
        .collect::<Result<_>>()?;
    let sup = boundary.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let interior = interior_nodes(domain);
    for p in grid_points(&interior, usize::MAX) {
        eval_in_domain(e, &p)?;
    }
    let n = GRID_ANGLES;
    for p in grid_points(&interior, 9) {
        let weights: [Vec<C64>; 3] = std::array::from_fn(|k| {
            torus[k]
                .iter()
                .map(|zeta| (zeta - domain.center[k]) / (zeta - p[k]) / n as f64)
                .collect()
        });
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                let wab = weights[0][a] * weights[1][b];
                for c in 0..n {
                    acc += wab * weights[2][c] * boundary[(a * n + b) * n + c];
                }
            }
        }
        let direct = e.eval(&p)?;
        if (acc - direct).norm() > 1e-6 * (1.0 + sup) {
            return Err(Error::PoleInDomain {
                expr: e.to_string(),
                point: p,
            });
        }
    }
    Ok(())
}

fn sup_on_closure<F>(domain: &Polydisc, mut f: F) -> Result<f64>
where
    F: FnMut(&[C64; 3]) -> Result<f64>,
{
    let torus = torus_nodes(domain);
    let interior = interior_nodes(domain);
    let mut sup: f64 = 0.0;
    for p in grid_points(&torus, usize::MAX).chain(grid_points(&interior, usize::MAX)) {
        sup = sup.max(f(&p)?);
    }
    Ok(sup)
}

/// Grid sup estimates `(ε, M)` over the closed domain, inflated by 10%.
///
/// Both grids have 17 nodes per coordinate. Holomorphic functions peak on the
/// distinguished boundary, so the torus grid carries the estimate.
pub fn bounds(chart: &DistributionChart, domain: &Polydisc) -> Result<(f64, f64)> {
    bounds_of(&chart.p, &chart.q, &chart.p_y, &chart.q_x, &chart.p_z, &chart.q_z, domain)
}

fn bounds_of(
    p: &RationalExpr,
    q: &RationalExpr,
    p_y: &RationalExpr,
    q_x: &RationalExpr,
    p_z: &RationalExpr,
    q_z: &RationalExpr,
    domain: &Polydisc,
) -> Result<(f64, f64)> {
    let one = C64::new(1.0, 0.0);
    let eps = sup_on_closure(domain, |pt| {
        let a = p.eval(pt)?.norm();
        let b = q.eval(pt)?.norm();
        let c = (one - q_x.eval(pt)? + p_y.eval(pt)?).norm();
        Ok(a.max(b).max(c))
    })?;
    let m = sup_on_closure(domain, |pt| Ok(p_z.eval(pt)?.norm().max(q_z.eval(pt)?.norm())))?;
    Ok((BOUND_INFLATION * eps, BOUND_INFLATION * m))
}

/// Validate the normal form, check the domain for poles and cache partials
/// and bounds.
pub fn make_chart(p: RationalExpr, q: RationalExpr, domain: Polydisc) -> Result<DistributionChart> {
    for e in [&p, &q] {
        check_pole_free(e, &domain)?;
    }
    let p_y = p.derivative(Var::Y);
    let q_x = q.derivative(Var::X);
    let origin = [C64::new(0.0, 0.0); 3];
    let at_origin = |e: &RationalExpr| {
        e.eval(&origin).map_err(|_| Error::PoleInDomain {
            expr: e.to_string(),
            point: origin,
        })
    };
    let mut violations = Vec::new();
    let p0 = at_origin(&p)?;
    if p0.norm() > NORMAL_FORM_TOL {
        violations.push(NormalFormViolation::PAtOrigin(p0));
    }
    let q0 = at_origin(&q)?;
    if q0.norm() > NORMAL_FORM_TOL {
        violations.push(NormalFormViolation::QAtOrigin(q0));
    }
    let twist = at_origin(&q_x)? - at_origin(&p_y)?;
    if (twist - 1.0).norm() > NORMAL_FORM_TOL {
        violations.push(NormalFormViolation::Twist(twist));
    }
    if !violations.is_empty() {
        return Err(Error::NormalForm(violations));
    }
    let p_z = p.derivative(Var::Z);
    let q_z = q.derivative(Var::Z);
    let (epsilon, m) = bounds_of(&p, &q, &p_y, &q_x, &p_z, &q_z, &domain)?;
    Ok(DistributionChart {
        p,
        q,
        p_y,
        q_x,
        p_z,
        q_z,
        domain,
        epsilon,
        m,
    })
}

/// Chart on the polydisc of radius `5νδ`, optionally clamped, shrunk by
/// factors of 0.8 until no pole meets it.
pub fn chart_for_delta(
    p: RationalExpr,
    q: RationalExpr,
    delta: f64,
    nu: f64,
    clamp: Option<f64>,
) -> Result<DistributionChart> {
    if !(delta > 0.0 && nu > 0.0) {
        return Err(Error::InvalidArgument(format!("need delta > 0 and nu > 0, got {delta}, {nu}")));
    }
    let mut radius = 5.0 * nu * delta;
    if let Some(c) = clamp {
        radius = radius.min(c);
    }
    let mut last = None;
    for _ in 0..40 {
        match make_chart(p.clone(), q.clone(), Polydisc::centered(radius)) {
            Err(e @ Error::PoleInDomain { .. }) => {
                last = Some(e);
                radius *= 0.8;
            }
            other => return other,
        }
    }
    Err(last.expect("loop ran"))
}

/// `(P_y - Q_x - P Q_z + Q P_z)(p)`, the coefficient of `Ω ∧ dΩ` on
/// `dx ∧ dy ∧ dz`.
pub fn integrability_defect(chart: &DistributionChart, p: &Point<3>) -> Result<C64> {
    Ok(chart.p_y.eval(p)? - chart.q_x.eval(p)? - chart.p.eval(p)? * chart.q_z.eval(p)?
        + chart.q.eval(p)? * chart.p_z.eval(p)?)
}

/// Components `(A, B, A P + B Q)` of the Legendrian lift of `A ∂x + B ∂y`.
pub fn legendrian_lift_field(
    a: &RationalExpr,
    b: &RationalExpr,
    chart: &DistributionChart,
) -> Result<[RationalExpr; 3]> {
    if a.mentions(Var::Z) || b.mentions(Var::Z) {
        return Err(Error::InvalidArgument(
            "planar field components must not depend on z".into(),
        ));
    }
    let c = a.clone() * chart.p.clone() + b.clone() * chart.q.clone();
    Ok([a.clone(), b.clone(), c])
}

#[derive(Debug, Clone, Copy)]
pub struct LiftOptions {
    pub solver: Dopri5,
    /// Re-solve with halved tolerances and compare endpoints.
    pub verify_halving: bool,
    /// Allowed endpoint shift under halving, relative to `1 + |z(b)|`.
    pub halving_tol: f64,
    /// Minimum clearance from the domain boundary.
    pub margin: f64,
}

impl Default for LiftOptions {
    fn default() -> Self {
        LiftOptions {
            solver: Dopri5::default(),
            verify_halving: true,
            halving_tol: 1e-9,
            margin: 1e-6,
        }
    }
}

/// A base path together with the `z`-track of its lift.
#[derive(Debug, Clone)]
pub struct LiftedPath {
    pub base: ParamPath<2>,
    /// One dense track per smooth piece of the base, storing `z - offset`.
    tracks: Vec<Track<C64>>,
    pub z_start: C64,
    pub z_end: C64,
    /// `z(b) - z(a)`. For `z`-independent charts the solver integrates this
    /// gain directly from zero, so it does not depend on `z(a)` at all.
    pub gain: C64,
    /// Tracks store `z - offset`.
    offset: C64,
    pub max_abs_z: f64,
    pub stats: Stats,
    /// `|z(b)|` difference against the halved-tolerance solve, if it ran.
    pub endpoint_shift: Option<f64>,
}

impl LiftedPath {
    /// `z(s)` from the dense output.
    pub fn z(&self, s: f64) -> C64 {
        self.z_and_derivative(s).0
    }

    pub fn z_and_derivative(&self, s: f64) -> (C64, C64) {
        let k = self
            .tracks
            .iter()
            .rposition(|t| s >= t.t_start())
            .unwrap_or(0);
        let (z, dz) = self.tracks[k].eval(s);
        (self.offset + z, dz)
    }

    /// `(x(s), y(s), z(s))`.
    pub fn point(&self, s: f64) -> Point<3> {
        let xy = self.base.position(s);
        [xy[0], xy[1], self.z(s)]
    }

    pub fn piece_count(&self) -> usize {
        self.tracks.len()
    }

    /// Step samples of the lift over piece `k`.
    pub fn piece_samples(&self, k: usize) -> Vec<Sample<C64>> {
        self.tracks[k]
            .samples
            .iter()
            .map(|s| Sample {
                y: self.offset + s.y,
                ..*s
            })
            .collect()
    }

    /// `z` at the end of piece `k`.
    pub fn piece_end(&self, k: usize) -> C64 {
        self.offset + self.tracks[k].last().y
    }

    /// Every accepted step sample, in parameter order.
    pub fn samples(&self) -> impl Iterator<Item = Sample<C64>> + '_ {
        self.tracks.iter().flat_map(|t| t.samples.iter()).map(|s| Sample {
            y: self.offset + s.y,
            ..*s
        })
    }

    /// Maximum of `|Ω(track')| / (1 + |z'|)` at step midpoints, where the
    /// dense output is an interpolant rather than a solver value.
    pub fn tangency_residual(&self, chart: &DistributionChart) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for t in &self.tracks {
            for w in t.samples.windows(2) {
                let s = 0.5 * (w[0].t + w[1].t);
                let (z, dz) = hermite(&w[0], &w[1], s);
                let z = self.offset + z;
                let (xy, v) = self.base.eval(s);
                let r = chart.omega(&[xy[0], xy[1], z], &[v[0], v[1], dz])?;
                worst = worst.max(r.norm() / (1.0 + dz.norm()));
            }
        }
        Ok(worst)
    }
}

fn exit_error(s: f64, xy: Point<2>, z: C64) -> Error {
    Error::DomainExit {
        s,
        point: [xy[0], xy[1], z],
    }
}

fn solve_lift(
    chart: &DistributionChart,
    path: &ParamPath<2>,
    z0: C64,
    solver: &Dopri5,
    margin: f64,
) -> Result<(Vec<Track<C64>>, Stats, C64)> {
    let (a, _) = path.interval();
    let start = path.start_point();
    if !chart.domain.contains_with_margin(&[start[0], start[1], z0], margin) {
        return Err(exit_error(a, start, z0));
    }
    let offset = if chart.z_independent() { z0 } else { C64::new(0.0, 0.0) };
    let inside = |s: f64, y: C64| {
        let xy = path.position(s);
        chart.domain.contains_with_margin(&[xy[0], xy[1], offset + y], margin)
    };
    let mut tracks = Vec::with_capacity(path.piece_count());
    let mut stats = Stats::default();
    let mut z = z0 - offset;
    for piece in path.pieces() {
        let (track, st) = solver.solve(
            piece.s0,
            piece.s1,
            z,
            |s, y| {
                let (xy, v) = piece.eval(s);
                chart.lift_rhs(&xy, &v, offset + y)
            },
            |prev, next| {
                let xy = piece.eval(next.t).0;
                if chart.domain.contains_with_margin(&[xy[0], xy[1], offset + next.y], margin) {
                    return Ok(());
                }
                let (mut lo, mut hi) = (prev.t, next.t);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if inside(mid, hermite(prev, next, mid).0) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let z_exit = offset + hermite(prev, next, hi).0;
                Err(exit_error(hi, piece.eval(hi).0, z_exit))
            },
        )?;
        stats += st;
        z = track.last().y;
        tracks.push(track);
    }
    Ok((tracks, stats, offset))
}

/// Solve `z' = P x' + Q y'` along `path` from `z(a) = z0`.
pub fn lift_path(
    chart: &DistributionChart,
    path: &ParamPath<2>,
    z0: C64,
    opts: &LiftOptions,
) -> Result<LiftedPath> {
    let (tracks, stats, offset) = solve_lift(chart, path, z0, &opts.solver, opts.margin)?;
    let y_end = tracks.last().map_or(z0 - offset, |t| t.last().y);
    let gain = y_end - (z0 - offset);
    let z_end = offset + y_end;
    let endpoint_shift = if opts.verify_halving {
        let (fine, _, _) = solve_lift(chart, path, z0, &opts.solver.halved(), opts.margin)?;
        let fine_end = offset + fine.last().map_or(z0 - offset, |t| t.last().y);
        let shift = (fine_end - z_end).norm();
        let allowed = opts.halving_tol * (1.0 + z_end.norm());
        if shift > allowed {
            return Err(Error::ToleranceInstability { shift, allowed });
        }
        Some(shift)
    } else {
        None
    };
    let max_abs_z = tracks
        .iter()
        .flat_map(|t| t.samples.iter())
        .map(|s| (offset + s.y).norm())
        .fold(z0.norm(), f64::max);
    Ok(LiftedPath {
        base: path.clone(),
        tracks,
        z_start: z0,
        z_end,
        gain,
        offset,
        max_abs_z,
        stats,
        endpoint_shift,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevantarReport {
    /// `max_s |z(s) - z(a)| / (2 ε ℓ(s))` over the step samples.
    pub max_ratio: f64,
    pub samples: usize,
}

/// Check `|z(s) - z(a)| ≤ 2 ε ℓ(γ|[a,s])` at every step sample.
pub fn levantar_bound_check(
    chart: &DistributionChart,
    lifted: &LiftedPath,
    quad: &Quadrature,
) -> Result<LevantarReport> {
    let samples: Vec<Sample<C64>> = lifted.samples().collect();
    let at: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let lengths = lifted.base.cumulative_length(&at, quad)?;
    let mut max_ratio: f64 = 0.0;
    for (smp, len) in samples.iter().zip(&lengths) {
        let lhs = (smp.y - lifted.z_start).norm();
        let rhs = 2.0 * chart.epsilon * len;
        let slack = 1e-12 * (1.0 + lifted.z_start.norm()) + 1e-9 * rhs;
        if lhs > rhs + slack {
            return Err(Error::BoundViolated {
                what: format!("|z(s) - z(a)| <= 2 eps l(s) at s = {}", smp.t),
                ratio: lhs / rhs,
            });
        }
        if rhs > 0.0 {
            max_ratio = max_ratio.max(lhs / rhs);
        }
    }
    Ok(LevantarReport {
        max_ratio,
        samples: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;
    use crate::foliation::{build_omega, compute_orbit};
    use crate::geometry::contour_integral;

    fn expr(s: &str) -> RationalExpr {
        s.parse().unwrap()
    }

    fn standard(radius: f64) -> DistributionChart {
        make_chart(expr("-y/2"), expr("x/2"), Polydisc::centered(radius)).unwrap()
    }

    fn perturbed(radius: f64) -> DistributionChart {
        make_chart(expr("-y/2 + z^2/10"), expr("x/2 + x*z/20"), Polydisc::centered(radius)).unwrap()
    }

    #[test]
    fn normal_form_validation() {
        standard(0.1);
        perturbed(0.1);
        match make_chart(expr("0"), expr("0"), Polydisc::centered(0.1)) {
            Err(Error::NormalForm(v)) => {
                assert_eq!(v.len(), 1);
                assert!(matches!(v[0], NormalFormViolation::Twist(_)));
            }
            other => panic!("{other:?}"),
        }
        match make_chart(expr("1 - y/2"), expr("x/2 + 2"), Polydisc::centered(0.1)) {
            Err(Error::NormalForm(v)) => assert_eq!(v.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn poles_in_domain_are_rejected() {
        for p in ["-y/2 + 1/(x-0.05)", "-y/2 + x*y/(1 + 20*z)", "-y/2 + 1/(x - y - 0.15)"] {
            let err = make_chart(expr(p), expr("x/2"), Polydisc::centered(0.1)).unwrap_err();
            assert!(matches!(err, Error::PoleInDomain { .. }), "{p}: {err}");
        }
        make_chart(expr("-y/2 + x*y/(1 + 2*z)"), expr("x/2"), Polydisc::centered(0.1)).unwrap();
        let c = chart_for_delta(expr("-y/2 + x*y/(1 + 2*z)"), expr("x/2"), 0.05, 14.0, None)
            .unwrap();
        assert!(c.domain().radii[0] < 0.5);
    }

    #[test]
    fn bound_examples() {
        let c = standard(0.1);
        assert_eq!(c.m(), 0.0);
        assert!(c.epsilon() >= 0.05);
        let c = make_chart(expr("-y/2 + 0.1*z^2"), expr("x/2"), Polydisc::centered(0.1)).unwrap();
        assert!(c.m() >= 0.2 * 0.1 * (1.0 - 1e-12) && c.m() <= 1.1 * 0.2 * 0.1 * (1.0 + 1e-12));
    }

    #[test]
    fn defect_at_origin() {
        let o = [c64(0.0, 0.0); 3];
        for c in [
            standard(0.1),
            perturbed(0.1),
            make_chart(expr("-y/2+x"), expr("x/2+y"), Polydisc::centered(0.1)).unwrap(),
        ] {
            assert!((integrability_defect(&c, &o).unwrap() + 1.0).norm() < 1e-15);
        }
    }

    #[test]
    fn lift_field_is_legendrian() {
        let c = perturbed(0.5);
        let [a, b, cz] = legendrian_lift_field(&expr("1"), &expr("0"), &c).unwrap();
        let p = [c64(0.1, 0.2), c64(-0.3, 0.0), c64(0.05, -0.1)];
        assert_eq!(a.eval(&p).unwrap(), c64(1.0, 0.0));
        assert_eq!(b.eval(&p).unwrap(), c64(0.0, 0.0));
        assert_eq!(cz.eval(&p).unwrap(), c.p().eval(&p).unwrap());
        assert!(legendrian_lift_field(&expr("z"), &expr("0"), &c).is_err());

        let (wa, wb) = build_omega().coefficient_exprs();
        let field = legendrian_lift_field(&(-wb.clone()), &wa, &c).unwrap();
        let omega = build_omega();
        for p in [
            [c64(0.2, 0.0), c64(0.1, 0.0), c64(0.01, 0.0)],
            [c64(0.1, 0.05), c64(-0.2, 0.1), c64(0.0, 0.02)],
        ] {
            let v: Vec<C64> = field.iter().map(|e| e.eval(&p).unwrap()).collect();
            assert!(c.omega(&p, &[v[0], v[1], v[2]]).unwrap().norm() < 1e-12);
            let proj = omega.eval(&[p[0], p[1]], &[v[0], v[1]]);
            assert!(proj.norm() < 1e-12 * (1.0 + v[0].norm() + v[1].norm()));
        }
    }

    #[test]
    fn constant_path_keeps_z() {
        let c = standard(0.1);
        let path = ParamPath::constant([c64(0.01, 0.0), c64(0.0, 0.0)], 0.0, 1.0);
        let l = lift_path(&c, &path, c64(0.003, 0.001), &LiftOptions::default()).unwrap();
        assert_eq!(l.z_end, c64(0.003, 0.001));
        let rep = levantar_bound_check(&c, &l, &Quadrature::default()).unwrap();
        assert_eq!(rep.max_ratio, 0.0);
    }

    #[test]
    fn contact_lift_of_orbit_gains_its_area() {
        let c = standard(0.1);
        let r = 0.01;
        let orbit = compute_orbit(r).unwrap();
        let path = orbit.path();
        let l = lift_path(&c, &path, c64(0.005, 0.0), &LiftOptions::default()).unwrap();
        let mut area = 0.0;
        let n = 20000;
        for k in 0..n {
            let a = orbit.point(2.0 * PI * k as f64 / n as f64);
            let b = orbit.point(2.0 * PI * (k + 1) as f64 / n as f64);
            area += 0.5 * (a[0] * b[1] - a[1] * b[0]);
        }
        let gain = l.z_end - l.z_start;
        assert!((gain.re - area).abs() < 1e-6 * area, "{gain} vs {area}");
        assert!(gain.im.abs() < 1e-15);
        let rep = levantar_bound_check(&c, &l, &Quadrature::default()).unwrap();
        assert!(rep.max_ratio < 1.0);
        assert!(l.tangency_residual(&c).unwrap() < 1e-8);
    }

    #[test]
    fn z_independent_lift_matches_line_integral() {
        let c = standard(0.5);
        let path = ParamPath::segment([c64(0.0, 0.0), c64(0.0, 0.0)], [c64(0.1, 0.0), c64(0.0, 0.0)])
            .concat(&ParamPath::segment([c64(0.1, 0.0), c64(0.0, 0.0)], [c64(0.1, 0.0), c64(0.2, 0.0)]))
            .concat(&ParamPath::segment([c64(0.1, 0.0), c64(0.2, 0.0)], [c64(0.0, 0.0), c64(0.0, 0.0)]));
        let l = lift_path(&c, &path, c64(0.0, 0.0), &LiftOptions::default()).unwrap();
        let line = contour_integral(
            &path,
            |p, v| c.lift_rhs(p, v, c64(0.0, 0.0)),
            &Quadrature::default(),
        )
        .unwrap();
        assert!((l.z_end - line).norm() < 1e-10);
        assert!((line.re - 0.01).abs() < 1e-12);
    }

    #[test]
    fn reversal_and_exit() {
        let c = perturbed(0.1);
        let orbit = compute_orbit(0.02).unwrap().path();
        let opts = LiftOptions::default();
        let z0 = c64(0.01, 0.005);
        let fwd = lift_path(&c, &orbit, z0, &opts).unwrap();
        let back = lift_path(&c, &orbit.reverse(), fwd.z_end, &opts).unwrap();
        assert!((back.z_end - z0).norm() < 1e-9);

        let far = ParamPath::segment([c64(0.0, 0.0), c64(0.0, 0.0)], [c64(0.2, 0.0), c64(0.0, 0.0)]);
        match lift_path(&c, &far, c64(0.0, 0.0), &opts) {
            Err(Error::DomainExit { s, point }) => {
                assert!((s - 0.5).abs() < 1e-4, "{s}");
                assert!((point[0].re - 0.1).abs() < 1e-4);
            }
            other => panic!("{other:?}"),
        }
    }
}
