//! Parametrized piecewise-smooth paths in `C^N`, arc length, contour
//! integrals of 1-forms and winding numbers.
//!
//! A [`ParamPath`] is an ordered list of smooth pieces laid end to end on one
//! real parameter interval. Piece boundaries are treated as mandatory
//! breakpoints by every integration routine, since concatenated paths have
//! corners there.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::quadrature::Quadrature;
use crate::{Error, Result, C64};

pub type Point<const N: usize> = [C64; N];

/// Hermitian norm on `C^N`.
pub fn norm<const N: usize>(v: &Point<N>) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub fn distance<const N: usize>(a: &Point<N>, b: &Point<N>) -> f64 {
    let mut d = [C64::new(0.0, 0.0); N];
    for i in 0..N {
        d[i] = a[i] - b[i];
    }
    norm(&d)
}

/// A smooth curve with evaluable position and velocity.
pub trait Curve<const N: usize>: Send + Sync {
    /// Position and velocity at parameter `s`.
    fn eval(&self, s: f64) -> (Point<N>, Point<N>);
}

struct FnCurve<P, V> {
    pos: P,
    vel: V,
}

impl<const N: usize, P, V> Curve<N> for FnCurve<P, V>
where
    P: Fn(f64) -> Point<N> + Send + Sync,
    V: Fn(f64) -> Point<N> + Send + Sync,
{
    fn eval(&self, s: f64) -> (Point<N>, Point<N>) {
        ((self.pos)(s), (self.vel)(s))
    }
}

#[derive(Clone)]
struct Piece<const N: usize> {
    curve: Arc<dyn Curve<N>>,
    a: f64,
    b: f64,
    reversed: bool,
}

impl<const N: usize> Piece<N> {
    fn span(&self) -> f64 {
        self.b - self.a
    }

    fn eval_local(&self, u: f64) -> (Point<N>, Point<N>) {
        if self.reversed {
            let (p, mut v) = self.curve.eval(self.b - u);
            for c in v.iter_mut() {
                *c = -*c;
            }
            (p, v)
        } else {
            self.curve.eval(self.a + u)
        }
    }
}

/// Piecewise-smooth parametrized path.
#[derive(Clone)]
pub struct ParamPath<const N: usize> {
    start: f64,
    pieces: Vec<Piece<N>>,
    // offsets[k] is the global parameter of the start of piece k, minus `start`.
    offsets: Vec<f64>,
}

impl<const N: usize> std::fmt::Debug for ParamPath<N> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (a, b) = self.interval();
        f.debug_struct("ParamPath")
            .field("interval", &(a, b))
            .field("pieces", &self.pieces.len())
            .finish()
    }
}

/// A view on one smooth piece, in the global parameter of the path.
pub struct PieceRef<'a, const N: usize> {
    pub index: usize,
    pub s0: f64,
    pub s1: f64,
    piece: &'a Piece<N>,
}

impl<const N: usize> PieceRef<'_, N> {
    pub fn eval(&self, s: f64) -> (Point<N>, Point<N>) {
        self.piece.eval_local((s - self.s0).clamp(0.0, self.piece.span()))
    }
}

impl<const N: usize> ParamPath<N> {
    /// Single smooth piece on `[a, b]`.
    pub fn from_curve<C: Curve<N> + 'static>(curve: C, a: f64, b: f64) -> Self {
        Self::from_arc(Arc::new(curve), a, b)
    }

    pub fn from_arc(curve: Arc<dyn Curve<N>>, a: f64, b: f64) -> Self {
        assert!(b >= a, "path interval must be ordered");
        ParamPath {
            start: a,
            pieces: vec![Piece {
                curve,
                a,
                b,
                reversed: false,
            }],
            offsets: vec![0.0, b - a],
        }
    }

    pub fn from_fns<P, V>(pos: P, vel: V, a: f64, b: f64) -> Self
    where
        P: Fn(f64) -> Point<N> + Send + Sync + 'static,
        V: Fn(f64) -> Point<N> + Send + Sync + 'static,
    {
        Self::from_curve(FnCurve { pos, vel }, a, b)
    }

    /// Straight segment from `p` to `q` on `[0, 1]`.
    pub fn segment(p: Point<N>, q: Point<N>) -> Self {
        let mut d = [C64::new(0.0, 0.0); N];
        for i in 0..N {
            d[i] = q[i] - p[i];
        }
        Self::from_fns(
            move |s| {
                let mut out = p;
                for i in 0..N {
                    out[i] += d[i] * s;
                }
                out
            },
            move |_| d,
            0.0,
            1.0,
        )
    }

    /// Constant path sitting at `p` for `s` in `[a, b]`.
    pub fn constant(p: Point<N>, a: f64, b: f64) -> Self {
        Self::from_fns(move |_| p, |_| [C64::new(0.0, 0.0); N], a, b)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.start, self.start + self.offsets[self.pieces.len()])
    }

    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    pub fn pieces(&self) -> impl Iterator<Item = PieceRef<'_, N>> + '_ {
        self.pieces.iter().enumerate().map(move |(index, piece)| PieceRef {
            index,
            s0: self.start + self.offsets[index],
            s1: self.start + self.offsets[index + 1],
            piece,
        })
    }

    /// Global parameters of all piece boundaries, including both ends.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.offsets.iter().map(|o| self.start + o).collect()
    }

    fn locate(&self, s: f64) -> usize {
        let u = s - self.start;
        let k = self.offsets.partition_point(|&o| o <= u);
        k.saturating_sub(1).min(self.pieces.len() - 1)
    }

    /// Position and velocity at global parameter `s`. At an interior
    /// breakpoint the later piece wins.
    pub fn eval(&self, s: f64) -> (Point<N>, Point<N>) {
        let k = self.locate(s);
        let piece = &self.pieces[k];
        piece.eval_local((s - self.start - self.offsets[k]).clamp(0.0, piece.span()))
    }

    pub fn position(&self, s: f64) -> Point<N> {
        self.eval(s).0
    }

    pub fn velocity(&self, s: f64) -> Point<N> {
        self.eval(s).1
    }

    pub fn start_point(&self) -> Point<N> {
        self.pieces[0].eval_local(0.0).0
    }

    pub fn end_point(&self) -> Point<N> {
        let last = &self.pieces[self.pieces.len() - 1];
        last.eval_local(last.span()).0
    }

    /// Same trace, opposite orientation, same parameter interval.
    pub fn reverse(&self) -> Self {
        let pieces: Vec<Piece<N>> = self
            .pieces
            .iter()
            .rev()
            .map(|p| Piece {
                reversed: !p.reversed,
                ..p.clone()
            })
            .collect();
        Self::assemble(self.start, pieces)
    }

    /// `self` followed by `other`; the parameter of `other` is shifted to continue.
    pub fn concat(&self, other: &ParamPath<N>) -> Self {
        let mut pieces = self.pieces.clone();
        pieces.extend(other.pieces.iter().cloned());
        Self::assemble(self.start, pieces)
    }

    /// Concatenate a non-empty sequence of paths.
    pub fn concat_all<'a, I>(paths: I) -> Option<Self>
    where
        I: IntoIterator<Item = &'a ParamPath<N>>,
    {
        let mut iter = paths.into_iter();
        let first = iter.next()?.clone();
        Some(iter.fold(first, |acc, p| acc.concat(p)))
    }

    fn assemble(start: f64, pieces: Vec<Piece<N>>) -> Self {
        let mut offsets = Vec::with_capacity(pieces.len() + 1);
        let mut acc = 0.0;
        offsets.push(acc);
        for p in &pieces {
            acc += p.span();
            offsets.push(acc);
        }
        ParamPath {
            start,
            pieces,
            offsets,
        }
    }

    /// Diagonal of the bounding box of 64 samples per piece.
    pub fn diameter(&self) -> f64 {
        // Per coordinate: (min re, max re, min im, max im).
        let mut bbox = [[f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY]; N];
        for piece in self.pieces() {
            for j in 0..=64 {
                let s = piece.s0 + (piece.s1 - piece.s0) * j as f64 / 64.0;
                let p = piece.eval(s).0;
                for (b, c) in bbox.iter_mut().zip(p.iter()) {
                    b[0] = b[0].min(c.re);
                    b[1] = b[1].max(c.re);
                    b[2] = b[2].min(c.im);
                    b[3] = b[3].max(c.im);
                }
            }
        }
        bbox.iter()
            .map(|b| (b[1] - b[0]).powi(2) + (b[3] - b[2]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Distance between end and start points.
    pub fn endpoint_gap(&self) -> f64 {
        distance(&self.start_point(), &self.end_point())
    }

    /// Closed within `1e-9 * (1 + diameter)`.
    pub fn is_closed(&self) -> bool {
        self.endpoint_gap() <= 1e-9 * (1.0 + self.diameter())
    }

    /// Euclidean (Hermitian) arc length by adaptive quadrature per piece.
    pub fn length(&self, quad: &Quadrature) -> Result<f64> {
        let mut total = 0.0;
        for piece in self.pieces() {
            total += quad.integrate_real(|s| Ok(norm(&piece.eval(s).1)), piece.s0, piece.s1)?;
        }
        Ok(total)
    }

    /// Arc length of the restriction to `[s0, s1]`, split at breakpoints.
    pub fn length_between(&self, s0: f64, s1: f64, quad: &Quadrature) -> Result<f64> {
        let mut total = 0.0;
        for piece in self.pieces() {
            let a = piece.s0.max(s0);
            let b = piece.s1.min(s1);
            if b > a {
                total += quad.integrate_real(|s| Ok(norm(&piece.eval(s).1)), a, b)?;
            }
        }
        Ok(total)
    }

    /// Arc length from the start up to each of the (sorted) parameters.
    pub fn cumulative_length(&self, at: &[f64], quad: &Quadrature) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(at.len());
        let mut prev = self.interval().0;
        let mut acc = 0.0;
        for &s in at {
            if s > prev {
                acc += self.length_between(prev, s, quad)?;
                prev = s;
            }
            out.push(acc);
        }
        Ok(out)
    }
}

impl ParamPath<1> {
    /// Positively oriented circle `center + radius * e^{is}`, `s` in `[0, 2pi]`.
    pub fn circle(center: C64, radius: f64) -> Self {
        let i = C64::new(0.0, 1.0);
        Self::from_fns(
            move |s| [center + radius * (i * s).exp()],
            move |s| [i * radius * (i * s).exp()],
            0.0,
            2.0 * PI,
        )
    }
}

/// `∫_p form(p(s), p'(s)) ds`, piece by piece.
pub fn contour_integral<const N: usize, F>(
    path: &ParamPath<N>,
    form: F,
    quad: &Quadrature,
) -> Result<C64>
where
    F: Fn(&Point<N>, &Point<N>) -> Result<C64>,
{
    let mut total = C64::new(0.0, 0.0);
    for piece in path.pieces() {
        let est = quad.integrate(
            |s| {
                let (p, v) = piece.eval(s);
                form(&p, &v)
            },
            piece.s0,
            piece.s1,
        )?;
        total += est.value;
    }
    Ok(total)
}

/// Raw value of `(1/2πi) ∮ dt/(t - q)` over a closed planar path.
pub fn winding_value(path: &ParamPath<1>, q: C64, quad: &Quadrature) -> Result<C64> {
    let diam = path.diameter();
    let gap = path.endpoint_gap();
    if gap > 1e-9 * (1.0 + diam) {
        return Err(Error::NotClosed { gap });
    }
    // Cheap proximity screen before integrating a near-singular integrand.
    let mut nearest = f64::INFINITY;
    for piece in path.pieces() {
        for j in 0..=256 {
            let s = piece.s0 + (piece.s1 - piece.s0) * j as f64 / 256.0;
            nearest = nearest.min((piece.eval(s).0[0] - q).norm());
        }
    }
    if nearest <= 1e-12 * (1.0 + diam) {
        return Err(Error::PointOnPath { distance: nearest });
    }
    let integral = contour_integral(path, |p, v| Ok(v[0] / (p[0] - q)), quad).map_err(|e| match e {
        Error::NonFiniteIntegrand { .. } => Error::PointOnPath { distance: nearest },
        other => other,
    })?;
    Ok(integral / C64::new(0.0, 2.0 * PI))
}

/// Winding number of a closed planar path about `q`.
pub fn winding_number(path: &ParamPath<1>, q: C64, quad: &Quadrature) -> Result<i64> {
    let w = winding_value(path, q, quad)?;
    let k = w.re.round();
    let off = (w - C64::new(k, 0.0)).norm();
    if off > 1e-6 {
        return Err(Error::NonIntegralWinding { value: w.re });
    }
    Ok(k as i64)
}

/// Axis-aligned polydisc `{ |p_i - c_i| < r_i }` in `C^3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polydisc {
    pub center: Point<3>,
    pub radii: [f64; 3],
}

impl Polydisc {
    pub fn new(center: Point<3>, radii: [f64; 3]) -> Self {
        Polydisc { center, radii }
    }

    /// Polydisc of equal radii centred at the origin.
    pub fn centered(radius: f64) -> Self {
        Polydisc {
            center: [C64::new(0.0, 0.0); 3],
            radii: [radius; 3],
        }
    }

    pub fn contains(&self, p: &Point<3>) -> bool {
        self.contains_with_margin(p, 0.0)
    }

    /// `|p_i - c_i| < r_i - margin` for every coordinate.
    pub fn contains_with_margin(&self, p: &Point<3>, margin: f64) -> bool {
        (0..3).all(|i| (p[i] - self.center[i]).norm() < self.radii[i] - margin)
    }

    /// Membership of `(x, y)` in the bi-disc over the first two coordinates.
    pub fn contains_xy(&self, xy: &Point<2>, margin: f64) -> bool {
        (0..2).all(|i| (xy[i] - self.center[i]).norm() < self.radii[i] - margin)
    }

    /// Smallest boundary clearance `min_i (r_i - |p_i - c_i|)`.
    pub fn clearance(&self, p: &Point<3>) -> f64 {
        (0..3)
            .map(|i| self.radii[i] - (p[i] - self.center[i]).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;

    fn real2(x: f64, y: f64) -> Point<2> {
        [c64(x, 0.0), c64(y, 0.0)]
    }

    fn unit_circle_r2() -> ParamPath<2> {
        ParamPath::from_fns(
            |s: f64| real2(s.cos(), s.sin()),
            |s: f64| real2(-s.sin(), s.cos()),
            0.0,
            2.0 * PI,
        )
    }

    #[test]
    fn length_examples() {
        let q = Quadrature::default();
        assert!((unit_circle_r2().length(&q).unwrap() - 2.0 * PI).abs() < 1e-9);
        let seg = ParamPath::segment(real2(0.0, 0.0), real2(3.0, 4.0));
        assert!((seg.length(&q).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn concat_and_reverse() {
        let q = Quadrature::default();
        let a = ParamPath::segment(real2(0.0, 0.0), real2(1.0, 0.0));
        let b = ParamPath::segment(real2(1.0, 0.0), real2(1.0, 2.0));
        let ab = a.concat(&b);
        assert_eq!(ab.interval(), (0.0, 2.0));
        assert_eq!(ab.piece_count(), 2);
        assert!((ab.length(&q).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(ab.end_point(), real2(1.0, 2.0));
        let back = ab.reverse();
        assert_eq!(back.start_point(), real2(1.0, 2.0));
        assert_eq!(back.end_point(), real2(0.0, 0.0));
        assert_eq!(back.position(0.5), real2(1.0, 1.0));
        assert_eq!(back.velocity(0.5), real2(0.0, -2.0));
        let again = back.reverse();
        for k in 0..=20 {
            let s = 2.0 * k as f64 / 20.0;
            assert!(distance(&again.position(s), &ab.position(s)) < 1e-15);
        }
        assert_eq!(ab.breakpoints(), vec![0.0, 1.0, 2.0]);
        assert!((ab.length_between(0.5, 1.5, &q).unwrap() - 1.5).abs() < 1e-12);
        let cum = ab.cumulative_length(&[0.0, 0.5, 1.0, 2.0], &q).unwrap();
        assert!((cum[3] - 3.0).abs() < 1e-12 && (cum[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn contour_integral_examples() {
        let q = Quadrature::default();
        let circle = ParamPath::circle(c64(0.0, 0.0), 1.0);
        let v = contour_integral(&circle, |p, v| Ok(v[0] / p[0]), &q).unwrap();
        assert!((v - c64(0.0, 2.0 * PI)).norm() < 1e-9);
        // d(t^3 + t) over a closed loop.
        let v = contour_integral(&circle, |p, v| Ok((3.0 * p[0] * p[0] + 1.0) * v[0]), &q).unwrap();
        assert!(v.norm() < 1e-9);
        let rev = contour_integral(&circle.reverse(), |p, v| Ok(v[0] / p[0]), &q).unwrap();
        assert!((rev + c64(0.0, 2.0 * PI)).norm() < 1e-10);
    }

    #[test]
    fn winding_examples() {
        let q = Quadrature::default();
        let unit = ParamPath::circle(c64(0.0, 0.0), 1.0);
        assert_eq!(winding_number(&unit, c64(0.0, 0.0), &q).unwrap(), 1);
        assert_eq!(winding_number(&unit, c64(3.0, 0.0), &q).unwrap(), 0);
        assert_eq!(winding_number(&unit.reverse(), c64(0.2, 0.1), &q).unwrap(), -1);
        let big = ParamPath::circle(c64(0.0, 3.0), 3.0);
        assert_eq!(winding_number(&big, c64(0.0, 1.0), &q).unwrap(), 1);
        assert_eq!(winding_number(&big, c64(0.0, -1.0), &q).unwrap(), 0);
        assert!(matches!(
            winding_number(&unit, c64(1.0, 0.0), &q),
            Err(Error::PointOnPath { .. })
        ));
        let open = ParamPath::<1>::segment([c64(0.0, 0.0)], [c64(1.0, 0.0)]);
        assert!(matches!(
            winding_number(&open, c64(0.5, 1.0), &q),
            Err(Error::NotClosed { .. })
        ));
    }

    #[test]
    fn polydisc_membership() {
        let d = Polydisc::centered(1.0);
        assert!(d.contains(&[c64(0.5, 0.5), c64(0.0, -0.9), c64(0.0, 0.0)]));
        assert!(!d.contains(&[c64(0.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)]));
        assert!(!d.contains_with_margin(&[c64(0.999_999_5, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)], 1e-6));
        assert!((d.clearance(&[c64(0.25, 0.0), c64(0.0, 0.0), c64(0.0, 0.5)]) - 0.5).abs() < 1e-15);
    }
}
