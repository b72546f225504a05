//! The logarithmic foliation with a real global center.
//!
//! `ω` has residues `{-λi, λi, 1+λi, 1-λi}` on the lines
//! `{y-ix, y+ix, y-3ix, y+3ix}` with `λ = log 2 / π`. Its real trace is a
//! center at the origin, invariant under real homotheties. After blowing up
//! the origin the foliation reads `2 dx/x = η(t)` in the chart `t = y/x`,
//! which gives the holonomy of the exceptional divisor and the connecting
//! curves `γ_r` from `(r, 0)` to `(r/2, 0)`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::{RationalExpr, Var};
use crate::geometry::{contour_integral, winding_number, Curve, ParamPath, Point};
use crate::ode::{hermite, Dopri5, Sample};
use crate::quadrature::{kronrod15, Quadrature};
use crate::{Error, Result, C64};

/// `log 2 / π`.
pub fn lambda() -> f64 {
    std::f64::consts::LN_2 / PI
}

const I: C64 = C64::new(0.0, 1.0);

/// Affine form `a·p + c` on `C^N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineForm<const N: usize> {
    pub coeffs: [C64; N],
    pub constant: C64,
}

impl<const N: usize> AffineForm<N> {
    pub fn linear(coeffs: [C64; N]) -> Self {
        AffineForm {
            coeffs,
            constant: C64::new(0.0, 0.0),
        }
    }

    pub fn eval(&self, p: &Point<N>) -> C64 {
        self.coeffs
            .iter()
            .zip(p)
            .fold(self.constant, |acc, (a, x)| acc + a * x)
    }

    /// The differential applied to a tangent vector.
    pub fn apply(&self, v: &Point<N>) -> C64 {
        self.coeffs
            .iter()
            .zip(v)
            .fold(C64::new(0.0, 0.0), |acc, (a, x)| acc + a * x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogTerm<const N: usize> {
    pub form: AffineForm<N>,
    pub residue: C64,
}

/// `Σ residue_k · dL_k / L_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogarithmicForm<const N: usize> {
    pub terms: Vec<LogTerm<N>>,
}

impl<const N: usize> LogarithmicForm<N> {
    /// Value on the tangent vector `v` at `p`. Non-finite on a polar line.
    pub fn eval(&self, p: &Point<N>, v: &Point<N>) -> C64 {
        self.terms
            .iter()
            .map(|t| t.residue * t.form.apply(v) / t.form.eval(p))
            .sum()
    }

    pub fn residue_sum(&self) -> C64 {
        self.terms.iter().map(|t| t.residue).sum()
    }
}

impl LogarithmicForm<1> {
    /// Poles `t_k = -c_k / a_k` paired with their residues.
    pub fn poles(&self) -> Vec<(C64, C64)> {
        self.terms
            .iter()
            .map(|t| (-t.form.constant / t.form.coeffs[0], t.residue))
            .collect()
    }

    /// Residue at the pole nearest to `t`.
    pub fn residue_at(&self, t: C64) -> Option<C64> {
        self.poles()
            .into_iter()
            .min_by(|a, b| (a.0 - t).norm().total_cmp(&(b.0 - t).norm()))
            .filter(|(p, _)| (p - t).norm() < 1e-12)
            .map(|(_, r)| r)
    }
}

impl LogarithmicForm<2> {
    /// Coefficients `(A, B)` of `ω = A dx + B dy` as rational expressions.
    pub fn coefficient_exprs(&self) -> (RationalExpr, RationalExpr) {
        let x = RationalExpr::var(Var::X);
        let y = RationalExpr::var(Var::Y);
        let mut a: Option<RationalExpr> = None;
        let mut b: Option<RationalExpr> = None;
        for t in &self.terms {
            let line = RationalExpr::constant(t.form.coeffs[0]) * x.clone()
                + RationalExpr::constant(t.form.coeffs[1]) * y.clone()
                + RationalExpr::constant(t.form.constant);
            let ta = RationalExpr::constant(t.residue * t.form.coeffs[0]) / line.clone();
            let tb = RationalExpr::constant(t.residue * t.form.coeffs[1]) / line;
            a = Some(match a {
                Some(acc) => acc + ta,
                None => ta,
            });
            b = Some(match b {
                Some(acc) => acc + tb,
                None => tb,
            });
        }
        let zero = || RationalExpr::real(0.0);
        (a.unwrap_or_else(zero), b.unwrap_or_else(zero))
    }

    /// Dual direction `(-B, A)` at `p`, spanning the kernel of `ω`.
    pub fn dual_field(&self, p: &Point<2>) -> Point<2> {
        let zero = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let a = self.eval(p, &[one, zero]);
        let b = self.eval(p, &[zero, one]);
        [-b, a]
    }
}

fn line_term(a: C64, b: C64, residue: C64) -> LogTerm<2> {
    LogTerm {
        form: AffineForm::linear([a, b]),
        residue,
    }
}

/// The four-term logarithmic form `ω` on `C^2`.
pub fn build_omega() -> LogarithmicForm<2> {
    let l = lambda();
    let one = C64::new(1.0, 0.0);
    LogarithmicForm {
        terms: vec![
            line_term(-I, one, -l * I),
            line_term(I, one, l * I),
            line_term(-3.0 * I, one, one + l * I),
            line_term(3.0 * I, one, one - l * I),
        ],
    }
}

/// Real form of `ω` on `R^2`:
/// `2λ (x dy - y dx)/(x²+y²) + d(9x²+y²)/(9x²+y²) - 6λ (x dy - y dx)/(9x²+y²)`.
pub fn omega_real(p: [f64; 2], v: [f64; 2]) -> f64 {
    let l = lambda();
    let [x, y] = p;
    let [dx, dy] = v;
    let ang = x * dy - y * dx;
    let q = 9.0 * x * x + y * y;
    2.0 * l * ang / (x * x + y * y) + (18.0 * x * dx + 2.0 * y * dy) / q - 6.0 * l * ang / q
}

/// Maximum relative gap between the logarithmic and the real expression of
/// `ω` over random real points and tangents.
pub fn real_form_identity_check(samples: usize, seed: u64) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    let omega = build_omega();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut taken = 0;
    while taken < samples {
        let x: f64 = rng.gen_range(-2.0..2.0);
        let y: f64 = rng.gen_range(-2.0..2.0);
        if x * x + y * y < 0.04 {
            continue;
        }
        let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let log = omega.eval(
            &[C64::new(x, 0.0), C64::new(y, 0.0)],
            &[C64::new(v[0], 0.0), C64::new(v[1], 0.0)],
        );
        let real = omega_real([x, y], v);
        worst = worst.max((log - real).norm() / (1.0 + log.norm()));
        taken += 1;
    }
    Ok(worst)
}

/// Right-hand side `η` of the blown-up equation `2 dx/x = η(t)`.
pub fn eta_form() -> LogarithmicForm<1> {
    let l = lambda();
    let one = C64::new(1.0, 0.0);
    let pole = |p: C64, residue: C64| LogTerm {
        form: AffineForm {
            coeffs: [one],
            constant: -p,
        },
        residue,
    };
    LogarithmicForm {
        terms: vec![
            pole(I, l * I),
            pole(-I, -l * I),
            pole(3.0 * I, -(one + l * I)),
            pole(-3.0 * I, -(one - l * I)),
        ],
    }
}

/// `t(s) = 3i - 3i e^{is}`: the circle `|t - 3i| = 3` from `t = 0`, positively oriented.
pub fn loop_c() -> ParamPath<1> {
    ParamPath::from_fns(
        |s: f64| [3.0 * I - 3.0 * I * (I * s).exp()],
        |s: f64| [3.0 * (I * s).exp()],
        0.0,
        2.0 * PI,
    )
}

/// `τ(s) = i - i e^{is}`, `s` in `[0, 2π]`.
pub fn tau(s: f64) -> (C64, C64) {
    let e = (I * s).exp();
    (I - I * e, e)
}

pub fn loop_tau() -> ParamPath<1> {
    ParamPath::from_fns(|s| [tau(s).0], |s| [tau(s).1], 0.0, 2.0 * PI)
}

fn check_loop(path: &ParamPath<1>) -> Result<()> {
    if !path.is_closed() {
        return Err(Error::NotClosed {
            gap: path.endpoint_gap(),
        });
    }
    Ok(())
}

/// `∮ η` over a closed loop by direct contour quadrature.
pub fn eta_loop_integral(path: &ParamPath<1>, quad: &Quadrature) -> Result<C64> {
    check_loop(path)?;
    let eta = eta_form();
    contour_integral(path, |p, v| Ok(eta.eval(p, v)), quad)
}

/// Holonomy of the exceptional divisor along `path`: `x0 · exp(½ ∮ η)`.
pub fn holonomy_map(path: &ParamPath<1>, x0: C64, quad: &Quadrature) -> Result<C64> {
    if x0 == C64::new(0.0, 0.0) {
        return Err(Error::InvalidArgument("holonomy needs x0 != 0".into()));
    }
    let eta = eta_form();
    for (pole, _) in eta.poles() {
        // Screens poles on the loop before quadrature; also checks closure.
        winding_number(path, pole, quad)?;
    }
    Ok(x0 * (0.5 * eta_loop_integral(path, quad)?).exp())
}

/// The same holonomy by integrating the leaf equation `x' = ½ x η(t, t')`
/// along the loop with the adaptive Runge–Kutta solver.
pub fn holonomy_by_lifting(path: &ParamPath<1>, x0: C64, solver: &Dopri5) -> Result<C64> {
    check_loop(path)?;
    let eta = eta_form();
    let mut x = x0;
    for piece in path.pieces() {
        let (track, _) = solver.solve(
            piece.s0,
            piece.s1,
            x,
            |s, x| {
                let (t, dt) = piece.eval(s);
                let v = 0.5 * x * eta.eval(&t, &dt);
                if v.re.is_finite() && v.im.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFiniteIntegrand { at: s })
                }
            },
            |_, _| Ok(()),
        )?;
        x = track.last().y;
    }
    Ok(x)
}

/// `2πi Σ wind(loop, p_k) · res_k` over the poles of `η`.
pub fn residue_oracle(path: &ParamPath<1>, quad: &Quadrature) -> Result<C64> {
    let mut acc = C64::new(0.0, 0.0);
    for (pole, res) in eta_form().poles() {
        let w = winding_number(path, pole, quad)?;
        acc += res * w as f64;
    }
    Ok(C64::new(0.0, 2.0 * PI) * acc)
}

/// Number of uniform `θ` intervals in the orbit profile table.
pub const PROFILE_INTERVALS: usize = 4096;

/// Polar profile `ρ(θ)` of the orbit of the real center through `(1, 0)`.
#[derive(Debug, Clone)]
pub struct CenterProfile {
    omega: LogarithmicForm<2>,
    nodes: Vec<Sample<f64>>,
    pub closure_residual: f64,
    pub sup_rho: f64,
    pub sup_rho_prime: f64,
}

/// `dρ/dθ` for the leaf of `ω` through the point at polar coordinates `(ρ, θ)`.
fn polar_rhs(omega: &LogarithmicForm<2>, theta: f64, rho: f64) -> Result<f64> {
    let (sn, cs) = theta.sin_cos();
    let re = |v: f64| C64::new(v, 0.0);
    let p = [re(rho * cs), re(rho * sn)];
    let radial = omega.eval(&p, &[re(cs), re(sn)]).re;
    let angular = omega.eval(&p, &[re(-sn), re(cs)]).re;
    // Along the dual field dθ/dt = ω(p, radial)/ρ; it must keep one sign.
    if !(radial * rho > 1e-9) || !angular.is_finite() {
        return Err(Error::OrbitNotStarShaped { theta });
    }
    Ok(-rho * angular / radial)
}

impl CenterProfile {
    /// Integrate the polar leaf equation from `ρ(0) = 1` over `[0, 2π]`.
    pub fn compute(omega: &LogarithmicForm<2>) -> Result<Self> {
        let solver = Dopri5::new(1e-13, 1e-15);
        let h = 2.0 * PI / PROFILE_INTERVALS as f64;
        let mut rho = 1.0;
        let mut nodes = Vec::with_capacity(PROFILE_INTERVALS + 1);
        nodes.push(Sample {
            t: 0.0,
            y: rho,
            dy: polar_rhs(omega, 0.0, rho)?,
        });
        for k in 0..PROFILE_INTERVALS {
            let t0 = k as f64 * h;
            let t1 = if k + 1 == PROFILE_INTERVALS {
                2.0 * PI
            } else {
                (k + 1) as f64 * h
            };
            let (track, _) =
                solver.solve(t0, t1, rho, |t, r| polar_rhs(omega, t, r), |_, _| Ok(()))?;
            let end = *track.last();
            rho = end.y;
            nodes.push(end);
        }
        let sup_rho = nodes.iter().map(|n| n.y.abs()).fold(0.0, f64::max);
        let sup_rho_prime = nodes.iter().map(|n| n.dy.abs()).fold(0.0, f64::max);
        Ok(CenterProfile {
            omega: omega.clone(),
            closure_residual: (rho - 1.0).abs(),
            nodes,
            sup_rho,
            sup_rho_prime,
        })
    }

    /// Interpolated `ρ(θ)`, `θ` taken modulo `2π`.
    pub fn rho(&self, theta: f64) -> f64 {
        let t = theta.rem_euclid(2.0 * PI);
        let t = if theta == 2.0 * PI { theta } else { t };
        let h = 2.0 * PI / PROFILE_INTERVALS as f64;
        let k = ((t / h) as usize).min(PROFILE_INTERVALS - 1);
        hermite(&self.nodes[k], &self.nodes[k + 1], t).0
    }

    /// `ρ'(θ)` from the leaf equation evaluated at the interpolated `ρ`.
    pub fn rho_prime(&self, theta: f64) -> f64 {
        let rho = self.rho(theta);
        polar_rhs(&self.omega, theta, rho).unwrap_or(f64::NAN)
    }

    /// Table nodes `(θ_k, ρ_k, ρ'_k)`.
    pub fn nodes(&self) -> &[Sample<f64>] {
        &self.nodes
    }
}

struct OrbitCurve {
    r: f64,
    profile: Arc<CenterProfile>,
}

impl Curve<2> for OrbitCurve {
    fn eval(&self, theta: f64) -> (Point<2>, Point<2>) {
        let rho = self.profile.rho(theta);
        let drho = polar_rhs(&self.profile.omega, theta, rho).unwrap_or(f64::NAN);
        let (sn, cs) = theta.sin_cos();
        let r = self.r;
        (
            [C64::new(r * rho * cs, 0.0), C64::new(r * rho * sn, 0.0)],
            [
                C64::new(r * (drho * cs - rho * sn), 0.0),
                C64::new(r * (drho * sn + rho * cs), 0.0),
            ],
        )
    }
}

/// Closed real orbit `α_r(θ) = r ρ(θ)(cos θ, sin θ)`.
#[derive(Debug, Clone)]
pub struct CenterOrbit {
    pub r: f64,
    pub profile: Arc<CenterProfile>,
    pub length: f64,
}

impl CenterOrbit {
    pub fn from_profile(r: f64, profile: Arc<CenterProfile>, quad: &Quadrature) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::InvalidArgument(format!("orbit radius must be positive, got {r}")));
        }
        let mut orbit = CenterOrbit {
            r,
            profile,
            length: 0.0,
        };
        orbit.length = orbit.path().length(quad)?;
        Ok(orbit)
    }

    pub fn path(&self) -> ParamPath<2> {
        ParamPath::from_curve(
            OrbitCurve {
                r: self.r,
                profile: self.profile.clone(),
            },
            0.0,
            2.0 * PI,
        )
    }

    pub fn point(&self, theta: f64) -> [f64; 2] {
        let rho = self.profile.rho(theta);
        [self.r * rho * theta.cos(), self.r * rho * theta.sin()]
    }

    /// `|ρ(2π) - ρ(0)| / ρ(0)`.
    pub fn closure_residual(&self) -> f64 {
        self.profile.closure_residual
    }
}

/// Orbit of the real center through `(r, 0)`.
pub fn compute_orbit(r: f64) -> Result<CenterOrbit> {
    let profile = Arc::new(CenterProfile::compute(&build_omega())?);
    CenterOrbit::from_profile(r, profile, &Quadrature::default())
}

/// `ν = 1.05 · max{ℓ(γ_1), ℓ(α_1), sup|ρ|, sup|ρ'|, 1}`.
pub fn nu_constant(alpha1: &CenterOrbit, gamma1_length: f64) -> f64 {
    let unit_len = alpha1.length / alpha1.r;
    1.05 * [
        gamma1_length,
        unit_len,
        alpha1.profile.sup_rho,
        alpha1.profile.sup_rho_prime,
        1.0,
    ]
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max)
}

/// Number of cumulative nodes in the `f(s)` table of the connecting curves.
const GAMMA_NODES: usize = 512;

/// `f(s) = ½ ∫_{τ|[0,s]} η`, tabulated by cumulative contour quadrature.
#[derive(Debug, Clone)]
pub struct GammaProfile {
    eta: LogarithmicForm<1>,
    f_nodes: Vec<C64>,
}

impl GammaProfile {
    pub fn compute(quad: &Quadrature) -> Result<Self> {
        let eta = eta_form();
        let h = 2.0 * PI / GAMMA_NODES as f64;
        let mut f_nodes = Vec::with_capacity(GAMMA_NODES + 1);
        let mut acc = C64::new(0.0, 0.0);
        f_nodes.push(acc);
        for k in 0..GAMMA_NODES {
            let a = k as f64 * h;
            let b = if k + 1 == GAMMA_NODES { 2.0 * PI } else { a + h };
            let est = quad.integrate(|s| Ok(half_eta_on_tau(&eta, s)), a, b)?;
            acc += est.value;
            f_nodes.push(acc);
        }
        Ok(GammaProfile { eta, f_nodes })
    }

    /// `f(s)`: nearest lower node plus one Kronrod panel.
    pub fn f(&self, s: f64) -> C64 {
        let h = 2.0 * PI / GAMMA_NODES as f64;
        let s = s.clamp(0.0, 2.0 * PI);
        let k = ((s / h) as usize).min(GAMMA_NODES - 1);
        let a = k as f64 * h;
        if s == a {
            return self.f_nodes[k];
        }
        let mut g = |u: f64| Ok(half_eta_on_tau(&self.eta, u));
        let (tail, _) = kronrod15(&mut g, a, s).expect("η is finite on τ");
        self.f_nodes[k] + tail
    }

    /// `f'(s) = ½ η(τ(s), τ'(s))`.
    pub fn f_prime(&self, s: f64) -> C64 {
        half_eta_on_tau(&self.eta, s)
    }

    pub fn f_end(&self) -> C64 {
        self.f_nodes[GAMMA_NODES]
    }
}

fn half_eta_on_tau(eta: &LogarithmicForm<1>, s: f64) -> C64 {
    let (t, dt) = tau(s);
    0.5 * eta.eval(&[t], &[dt])
}

struct GammaCurve {
    r: f64,
    profile: Arc<GammaProfile>,
}

impl Curve<2> for GammaCurve {
    fn eval(&self, s: f64) -> (Point<2>, Point<2>) {
        let f = self.profile.f(s);
        let df = self.profile.f_prime(s);
        let (t, dt) = tau(s);
        let x = self.r * f.exp();
        ([x, t * x], [df * x, (dt + t * df) * x])
    }
}

/// `γ_r(s) = (r e^{f(s)}, τ(s) r e^{f(s)})` on `[0, 2π]`, inside one leaf of `ω`.
pub fn gamma_path(r: f64, profile: Arc<GammaProfile>) -> ParamPath<2> {
    ParamPath::from_curve(GammaCurve { r, profile }, 0.0, 2.0 * PI)
}

pub fn gamma_curve(r: f64) -> Result<ParamPath<2>> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma radius must be positive, got {r}")));
    }
    Ok(gamma_path(r, Arc::new(GammaProfile::compute(&Quadrature::with_tol(1e-14))?)))
}

/// Everything about the planar foliation that the lifting experiments need,
/// computed once.
#[derive(Debug, Clone)]
pub struct PlanarFoliation {
    pub omega: LogarithmicForm<2>,
    pub profile: Arc<CenterProfile>,
    pub gamma: Arc<GammaProfile>,
    pub alpha1: CenterOrbit,
    pub gamma1_length: f64,
    pub nu: f64,
}

impl PlanarFoliation {
    pub fn new(quad: &Quadrature) -> Result<Self> {
        let omega = build_omega();
        let profile = Arc::new(CenterProfile::compute(&omega)?);
        let gamma = Arc::new(GammaProfile::compute(&Quadrature::with_tol(1e-14))?);
        let alpha1 = CenterOrbit::from_profile(1.0, profile.clone(), quad)?;
        let gamma1_length = gamma_path(1.0, gamma.clone()).length(quad)?;
        let nu = nu_constant(&alpha1, gamma1_length);
        Ok(PlanarFoliation {
            omega,
            profile,
            gamma,
            alpha1,
            gamma1_length,
            nu,
        })
    }

    pub fn orbit(&self, r: f64) -> CenterOrbit {
        CenterOrbit {
            r,
            profile: self.profile.clone(),
            length: r * self.alpha1.length,
        }
    }

    pub fn gamma(&self, r: f64) -> ParamPath<2> {
        gamma_path(r, self.gamma.clone())
    }
}
