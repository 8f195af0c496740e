//! The odd theta function `[x]` with nome `p`.
//!
//! `[x] = i * sum_{n>=0} (-1)^n p^{(n+1/2)^2} sinh((2n+1)x)`, normalized so that
//! `-i p^{-1/4} [x] -> sinh(x)` as `p -> 0`.

use crate::error::{Error, Result};
use crate::numerics::{product, Scalar};

/// Nome, truncation policy and pole floor for theta evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaContext {
    nome: f64,
    eps: f64,
    n_max: usize,
    pole_floor: f64,
}

impl ThetaContext {
    pub const DEFAULT_EPS: f64 = 1e-17;
    pub const DEFAULT_N_MAX: usize = 200;
    pub const DEFAULT_POLE_FLOOR: f64 = 1e-13;

    pub fn new(nome: f64) -> Result<Self> {
        Self::with_policy(nome, Self::DEFAULT_EPS, Self::DEFAULT_N_MAX)
    }

    pub fn with_policy(nome: f64, eps: f64, n_max: usize) -> Result<Self> {
        if !(nome > 0.0 && nome < 1.0) {
            return Err(Error::InvalidParameter(format!("nome must lie in (0,1), got {nome}")));
        }
        if eps.is_nan() || eps <= 0.0 || eps.is_infinite() {
            return Err(Error::InvalidParameter(format!("truncation tolerance must be positive, got {eps}")));
        }
        if n_max == 0 {
            return Err(Error::InvalidParameter("n_max must be at least 1".into()));
        }
        Ok(Self { nome, eps, n_max, pole_floor: Self::DEFAULT_POLE_FLOOR })
    }

    /// Replaces the modulus below which a denominator theta value counts as a pole.
    pub fn with_pole_floor(mut self, floor: f64) -> Result<Self> {
        if floor.is_nan() || floor < 0.0 {
            return Err(Error::InvalidParameter(format!("pole floor must be non-negative, got {floor}")));
        }
        self.pole_floor = floor;
        Ok(self)
    }

    pub fn nome(&self) -> f64 {
        self.nome
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn pole_floor(&self) -> f64 {
        self.pole_floor
    }

    /// Distance from `x` to the nearest zero of `[x]`. The zeros form the
    /// rectangular lattice `m ln(1/p) + i pi n`.
    pub fn zero_distance(&self, x: Scalar) -> f64 {
        let w = -self.nome.ln();
        let pi = std::f64::consts::PI;
        let dr = x.re - (x.re / w).round() * w;
        let di = x.im - (x.im / pi).round() * pi;
        dr.hypot(di)
    }

    /// `[x]`.
    pub fn theta1(&self, x: Scalar) -> Result<Scalar> {
        if !(x.re.is_finite() && x.im.is_finite()) {
            return Err(Error::NonFinite("theta argument"));
        }
        let e = x.exp();
        let e_inv = e.inv();
        let w = e * e;
        let w_inv = e_inv * e_inv;
        // Upper bound on the ratio of consecutive term moduli is p^{2n+2} e^{2|Re x|}.
        let growth = (2.0 * x.re.abs()).exp();
        let mut up = e;
        let mut down = e_inv;
        let mut q = self.nome.powf(0.25);
        let mut sum = Scalar::new(0.0, 0.0);
        let mut max_term = 0.0_f64;
        for n in 0..self.n_max {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let term = (up - down) * (0.5 * q * sign);
            let mag = term.norm();
            sum += term;
            max_term = max_term.max(mag);
            let ratio_bound = self.nome.powi(2 * n as i32 + 2) * growth;
            if mag <= self.eps * max_term && ratio_bound < 1.0 {
                return Ok(Scalar::new(-sum.im, sum.re));
            }
            q *= self.nome.powi(2 * n as i32 + 2);
            up *= w;
            down *= w_inv;
        }
        Err(Error::TruncationNotReached { x, n_max: self.n_max })
    }

    /// `[x]`, failing with a near-pole error when its modulus is below the pole floor.
    pub fn theta1_nonzero(&self, x: Scalar) -> Result<Scalar> {
        let t = self.theta1(x)?;
        if t.norm() < self.pole_floor {
            return Err(Error::NearPole { arg: x, modulus: t.norm(), context: "theta denominator".into() });
        }
        Ok(t)
    }

    /// `prod [num_k] / prod [den_k]`.
    pub fn theta_ratio(&self, num: &[Scalar], den: &[Scalar]) -> Result<Scalar> {
        let top = num.iter().map(|&x| self.theta1(x)).collect::<Result<Vec<_>>>()?;
        let bottom = den.iter().map(|&x| self.theta1_nonzero(x)).collect::<Result<Vec<_>>>()?;
        Ok(product(top) / product(bottom))
    }
}

/// Free-function form of [`ThetaContext::theta1`].
pub fn theta1(x: Scalar, ctx: &ThetaContext) -> Result<Scalar> {
    ctx.theta1(x)
}

/// Free-function form of [`ThetaContext::theta_ratio`].
pub fn theta_ratio(num: &[Scalar], den: &[Scalar], ctx: &ThetaContext) -> Result<Scalar> {
    ctx.theta_ratio(num, den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Scalar {
        Scalar::new(re, im)
    }

    #[test]
    fn zero_lattice_matches_theta_zeros() {
        let ctx = ThetaContext::new(0.2).unwrap();
        let w = -(0.2f64).ln();
        for (m, n) in [(1, 0), (-1, 0), (2, 1), (0, -1), (-3, 2)] {
            let z = c(m as f64 * w, n as f64 * std::f64::consts::PI);
            assert!(ctx.zero_distance(z) < 1e-12);
            let scale = ctx.theta1(z + c(0.3, 0.0)).unwrap().norm();
            assert!(ctx.theta1(z).unwrap().norm() < 1e-13 * scale.max(1.0));
        }
        assert!((ctx.zero_distance(c(0.3, 0.4)) - 0.5).abs() < 1e-15);
    }

    /// Direct bilateral sum `1/2 sum_n (-1)^{n-1/2} p^{(n+1/2)^2} e^{-(2n+1)x}`, n in [-40, 40].
    fn bilateral(x: Scalar, p: f64) -> Scalar {
        (-40i32..=40)
            .map(|n| {
                let nf = n as f64;
                let sign = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                let phase = c(0.0, -sign);
                phase * 0.5 * p.powf((nf + 0.5) * (nf + 0.5)) * (-(2.0 * nf + 1.0) * x).exp()
            })
            .sum()
    }

    #[test]
    fn vanishes_at_origin() {
        let ctx = ThetaContext::new(0.2).unwrap();
        assert_eq!(ctx.theta1(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn one_sided_series_equals_bilateral_sum() {
        let ctx = ThetaContext::new(0.2).unwrap();
        for x in [c(0.3, 0.1), c(-0.7, 0.4), c(1.5, -0.2), c(0.05, 2.0)] {
            let a = ctx.theta1(x).unwrap();
            let b = bilateral(x, 0.2);
            assert!((a - b).norm() < 1e-14 * b.norm(), "{x}: {a} vs {b}");
        }
    }

    #[test]
    fn small_nome_limit_is_sinh() {
        let p = 1e-6;
        let ctx = ThetaContext::new(p).unwrap();
        let x = c(0.3, 0.0);
        let scaled = c(0.0, -1.0) * p.powf(-0.25) * ctx.theta1(x).unwrap();
        assert!((scaled - x.sinh()).norm() < 1e-10);
    }

    #[test]
    fn sixv_limit_improves_with_smaller_nome() {
        let grid: Vec<Scalar> = (0..15).map(|k| c(-1.0 + k as f64 / 7.0, 0.3 * ((k % 5) as f64 - 2.0))).collect();
        let sup = |p: f64| {
            let ctx = ThetaContext::new(p).unwrap();
            grid.iter().map(|&x| (c(0.0, -1.0) * p.powf(-0.25) * ctx.theta1(x).unwrap() - x.sinh()).norm()).fold(0.0, f64::max)
        };
        let errs: Vec<f64> = [1e-4, 1e-6, 1e-8].into_iter().map(sup).collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn truncation_failure_is_reported() {
        let ctx = ThetaContext::with_policy(0.9, 1e-17, 3).unwrap();
        assert!(matches!(ctx.theta1(c(5.0, 0.0)), Err(Error::TruncationNotReached { n_max: 3, .. })));
    }

    #[test]
    fn invalid_contexts_are_rejected() {
        assert!(ThetaContext::new(0.0).is_err());
        assert!(ThetaContext::new(1.0).is_err());
        assert!(ThetaContext::with_policy(0.2, 0.0, 10).is_err());
        assert!(ThetaContext::with_policy(0.2, 1e-16, 0).is_err());
    }

    #[test]
    fn ratio_trivial_cases() {
        let ctx = ThetaContext::new(0.2).unwrap();
        let a = c(0.4, -0.3);
        assert!((ctx.theta_ratio(&[a], &[a]).unwrap() - 1.0).norm() < 1e-15);
        assert_eq!(ctx.theta_ratio(&[], &[]).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn ratio_reports_pole() {
        let ctx = ThetaContext::new(0.2).unwrap();
        let err = ctx.theta_ratio(&[c(0.3, 0.0)], &[c(0.0, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::NearPole { arg, .. } if arg == c(0.0, 0.0)));
    }

    fn arg(bound: f64) -> impl Strategy<Value = Scalar> {
        (-bound..bound, -1.0..1.0f64).prop_map(|(a, b)| c(a, b))
    }

    proptest! {
        #[test]
        fn odd(x in arg(2.0), p in 0.01..0.5f64) {
            let ctx = ThetaContext::new(p).unwrap();
            let a = ctx.theta1(x).unwrap();
            let b = ctx.theta1(-x).unwrap();
            prop_assert!((a + b).norm() <= 1e-14 * a.norm());
        }

        #[test]
        fn halving_tolerance_is_stable(x in arg(3.0), p in 0.01..0.5f64) {
            let coarse = ThetaContext::with_policy(p, 1e-12, 200).unwrap();
            let fine = ThetaContext::with_policy(p, 5e-13, 200).unwrap();
            let a = coarse.theta1(x).unwrap();
            let b = fine.theta1(x).unwrap();
            let max_term = (0..50)
                .map(|n| p.powf((n as f64 + 0.5).powi(2)) * ((2 * n + 1) as f64 * x.re.abs()).exp())
                .fold(0.0, f64::max);
            prop_assert!((a - b).norm() <= 1e-12 * max_term);
        }

        #[test]
        fn ratio_of_permuted_factors(x in arg(1.0), g in arg(1.0)) {
            let ctx = ThetaContext::new(0.2).unwrap();
            prop_assume!(ctx.theta1(x).unwrap().norm() > 1e-6 && ctx.theta1(x + g).unwrap().norm() > 1e-6);
            let r = ctx.theta_ratio(&[x + g, x], &[x, x + g]).unwrap();
            prop_assert!((r - 1.0).norm() < 1e-13);
        }
    }
}
