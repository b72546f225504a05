//! Globally adaptive Gauss–Kronrod (7/15) quadrature for complex-valued
//! integrands of one real variable.

use crate::{Error, Result, C64};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: C64,
    pub error: f64,
    pub intervals: usize,
    /// False when the interval budget ran out before the tolerance was met.
    pub converged: bool,
}

/// Settings for adaptive quadrature. The target is
/// `error <= abs_tol + rel_tol * |value|`.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_intervals: 4000,
        }
    }
}

fn checked(v: C64, at: f64) -> Result<C64> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteIntegrand { at })
    }
}

/// One Kronrod-15 panel on `[a, b]`: returns the K15 value and `|K15 - G7|`.
pub fn kronrod15<F>(f: &mut F, a: f64, b: f64) -> Result<(C64, f64)>
where
    F: FnMut(f64) -> Result<C64>,
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = checked(f(mid)?, mid)?;
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = checked(f(mid - dx)?, mid - dx)?;
        let f2 = checked(f(mid + dx)?, mid + dx)?;
        k += (f1 + f2) * WGK[j];
        if j % 2 == 1 {
            g += (f1 + f2) * WG[j / 2];
        }
    }
    Ok((k * half, ((k - g) * half).norm()))
}

struct Panel {
    a: f64,
    b: f64,
    value: C64,
    error: f64,
}

impl Quadrature {
    pub fn with_tol(tol: f64) -> Self {
        Quadrature {
            abs_tol: tol,
            rel_tol: tol,
            ..Default::default()
        }
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate<F>(&self, mut f: F, a: f64, b: f64) -> Result<Estimate>
    where
        F: FnMut(f64) -> Result<C64>,
    {
        if a == b {
            return Ok(Estimate {
                value: C64::new(0.0, 0.0),
                error: 0.0,
                intervals: 0,
                converged: true,
            });
        }
        let (value, error) = kronrod15(&mut f, a, b)?;
        let mut panels = vec![Panel { a, b, value, error }];
        let mut total = value;
        let mut total_err = error;
        loop {
            if total_err <= self.abs_tol + self.rel_tol * total.norm() {
                return Ok(Estimate {
                    value: total,
                    error: total_err,
                    intervals: panels.len(),
                    converged: true,
                });
            }
            if panels.len() >= self.max_intervals {
                return Ok(Estimate {
                    value: total,
                    error: total_err,
                    intervals: panels.len(),
                    converged: false,
                });
            }
            let worst = panels
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
                .map(|(i, _)| i)
                .unwrap_or(0);
            let p = panels.swap_remove(worst);
            let m = 0.5 * (p.a + p.b);
            if m <= p.a || m >= p.b {
                // Interval cannot be split further in binary64.
                panels.push(p);
                return Ok(Estimate {
                    value: total,
                    error: total_err,
                    intervals: panels.len(),
                    converged: false,
                });
            }
            let (v1, e1) = kronrod15(&mut f, p.a, m)?;
            let (v2, e2) = kronrod15(&mut f, m, p.b)?;
            panels.push(Panel {
                a: p.a,
                b: m,
                value: v1,
                error: e1,
            });
            panels.push(Panel {
                a: m,
                b: p.b,
                value: v2,
                error: e2,
            });
            // Re-summing avoids drift from repeated add/subtract.
            total = panels.iter().map(|p| p.value).sum();
            total_err = panels.iter().map(|p| p.error).sum();
        }
    }

    /// Real-valued convenience wrapper.
    pub fn integrate_real<F>(&self, mut f: F, a: f64, b: f64) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        Ok(self
            .integrate(|s| f(s).map(|v| C64::new(v, 0.0)), a, b)?
            .value
            .re)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact_on_one_panel() {
        let mut f = |x: f64| Ok(C64::new(x.powi(10) - 3.0 * x, 0.0));
        let (v, _) = kronrod15(&mut f, 0.0, 2.0).unwrap();
        assert!((v.re - (2f64.powi(11) / 11.0 - 6.0)).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_and_peaked() {
        let q = Quadrature::default();
        let v = q
            .integrate(|t| Ok(C64::new(0.0, 1.0 * t).exp()), 0.0, 2.0 * PI)
            .unwrap();
        assert!(v.value.norm() < 1e-12);
        let v = q
            .integrate_real(|t| Ok(1.0 / (1e-4 + t * t)), -1.0, 1.0)
            .unwrap();
        let exact = 2.0 * (1.0 / 1e-2) * (1.0f64 / 1e-2).atan();
        assert!((v - exact).abs() < 1e-10 * (1.0 + exact));
    }

    #[test]
    fn pole_is_reported() {
        let q = Quadrature::default();
        let r = q.integrate(|t| Ok(C64::new(1.0 / t, 0.0)), 0.0, 1.0);
        assert!(matches!(r, Err(Error::NonFiniteIntegrand { .. })) || !r.unwrap().converged);
    }
}
