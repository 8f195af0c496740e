//! Model parameters, spectral configurations, the dynamical R-matrix and its
//! six-vertex degeneration.

use crate::error::{Error, Result};
use crate::numerics::{product, real, DenseMatrix, Scalar};
use crate::theta::ThetaContext;

/// Direction of an ordered product over sites (monodromy factors and B-operator strings).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProductOrder {
    /// `F_1 F_2 ... F_L`: the factor of site 1 is leftmost.
    #[default]
    Ascending,
    /// `F_L ... F_2 F_1`.
    Descending,
}

/// Anisotropy, dynamical parameter, inhomogeneities and theta context.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub gamma: Scalar,
    pub tau: Scalar,
    pub mu: Vec<Scalar>,
    pub theta: ThetaContext,
    pub order: ProductOrder,
}

impl ModelParams {
    pub fn new(gamma: Scalar, tau: Scalar, mu: Vec<Scalar>, theta: ThetaContext) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::InvalidParameter("at least one site is required".into()));
        }
        let finite = |z: &Scalar| z.re.is_finite() && z.im.is_finite();
        if !finite(&gamma) || !finite(&tau) || !mu.iter().all(finite) {
            return Err(Error::NonFinite("model parameter"));
        }
        Ok(Self { gamma, tau, mu, theta, order: ProductOrder::default() })
    }

    pub fn sites(&self) -> usize {
        self.mu.len()
    }

    /// Copy with a different dynamical parameter.
    pub fn with_tau(&self, tau: Scalar) -> Self {
        Self { tau, ..self.clone() }
    }

    pub fn with_order(&self, order: ProductOrder) -> Self {
        Self { order, ..self.clone() }
    }

    /// `[x]`.
    pub fn th(&self, x: Scalar) -> Result<Scalar> {
        self.theta.theta1(x)
    }

    /// `[x]` used as a denominator.
    pub fn th_den(&self, x: Scalar) -> Result<Scalar> {
        self.theta.theta1_nonzero(x)
    }

    /// `prod_j [y - mu_j + shift]`.
    pub fn mu_product(&self, y: Scalar, shift: Scalar) -> Result<Scalar> {
        self.mu.iter().map(|&m| self.th(y - m + shift)).collect::<Result<Vec<_>>>().map(product)
    }
}

/// Spectral points `x_1..x_L` with the auxiliary points `x_0` and `x_0bar`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralConfig {
    pub x: Vec<Scalar>,
    pub x0: Scalar,
    pub x0bar: Scalar,
}

impl SpectralConfig {
    pub fn new(x: Vec<Scalar>, x0: Scalar, x0bar: Scalar) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidParameter("at least one spectral point is required".into()));
        }
        if x0 == x0bar {
            return Err(Error::DegeneratePoint("x0 and x0bar coincide".into()));
        }
        Ok(Self { x, x0, x0bar })
    }

    pub fn sites(&self) -> usize {
        self.x.len()
    }

    fn check_site(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.sites() {
            return Err(Error::IndexOutOfDomain(format!("site {i} not in 1..={}", self.sites())));
        }
        Ok(())
    }

    /// `X_i^0`: `x_i` replaced by `x_0` (1-based `i`).
    pub fn with_x0_at(&self, i: usize) -> Result<Vec<Scalar>> {
        self.check_site(i)?;
        let mut v = self.x.clone();
        v[i - 1] = self.x0;
        Ok(v)
    }

    /// `X_i^0bar`: `x_i` replaced by `x_0bar`.
    pub fn with_x0bar_at(&self, i: usize) -> Result<Vec<Scalar>> {
        self.check_site(i)?;
        let mut v = self.x.clone();
        v[i - 1] = self.x0bar;
        Ok(v)
    }

    /// `X_{i,j}^{0,0bar}`: `x_i` replaced by `x_0` and `x_j` by `x_0bar`.
    pub fn with_pair_at(&self, i: usize, j: usize) -> Result<Vec<Scalar>> {
        self.check_site(i)?;
        self.check_site(j)?;
        if i == j {
            return Err(Error::IndexOutOfDomain(format!("pair substitution needs distinct sites, got {i}")));
        }
        let mut v = self.x.clone();
        v[i - 1] = self.x0;
        v[j - 1] = self.x0bar;
        Ok(v)
    }

    /// Every point `x_0, x_0bar, x_1..x_L`.
    pub fn all_points(&self) -> Vec<Scalar> {
        let mut v = vec![self.x0, self.x0bar];
        v.extend_from_slice(&self.x);
        v
    }
}

/// Spin of `site` (0-based, big-endian) in basis state `state` of `n` spaces:
/// `+1` for up (bit 0), `-1` for down (bit 1).
pub fn spin(state: usize, site: usize, n: usize) -> i32 {
    if (state >> (n - 1 - site)) & 1 == 0 {
        1
    } else {
        -1
    }
}

/// Eigenvalue of the Cartan element `H` on each basis state of `n` sites.
pub fn weight_diagonal(n: usize) -> Vec<i32> {
    (0..1usize << n).map(|s| (0..n).map(|k| spin(s, k, n)).sum()).collect()
}

/// Embeds a state-dependent two-space operator acting on spaces `i` and `j` of `n`.
///
/// `local(spins)` receives the spins of the input state and returns the 4x4
/// matrix in the `(space i, space j)` basis.
pub fn embed_pair(n: usize, i: usize, j: usize, mut local: impl FnMut(&[i32]) -> Result<DenseMatrix>) -> Result<DenseMatrix> {
    let dim = 1usize << n;
    let mut out = DenseMatrix::zeros(dim, dim);
    let mut spins = vec![0; n];
    for s in 0..dim {
        for (k, sp) in spins.iter_mut().enumerate() {
            *sp = spin(s, k, n);
        }
        let r = local(&spins)?;
        let bi = (s >> (n - 1 - i)) & 1;
        let bj = (s >> (n - 1 - j)) & 1;
        for oi in 0..2 {
            for oj in 0..2 {
                let target = s ^ ((bi ^ oi) << (n - 1 - i)) ^ ((bj ^ oj) << (n - 1 - j));
                out[(target, s)] += r[(oi * 2 + oj, bi * 2 + bj)];
            }
        }
    }
    Ok(out)
}

/// The six non-null weights of the dynamical R-matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RWeights {
    pub a: Scalar,
    pub b_plus: Scalar,
    pub b_minus: Scalar,
    pub c_plus: Scalar,
    pub c_minus: Scalar,
}

impl RWeights {
    pub fn new(x: Scalar, tau: Scalar, params: &ModelParams) -> Result<Self> {
        let g = params.gamma;
        let th = |z| params.th(z);
        let t = params.th_den(tau).map_err(|e| e.in_context("R-matrix weight"))?;
        Ok(Self {
            a: th(x + g)?,
            b_plus: th(tau - g)? * th(x)? / t,
            b_minus: th(tau + g)? * th(x)? / t,
            c_plus: th(tau - x)? * th(g)? / t,
            c_minus: th(tau + x)? * th(g)? / t,
        })
    }

    /// 4x4 matrix in the basis (11, 12, 21, 22), auxiliary space first.
    pub fn matrix(&self) -> DenseMatrix {
        let z = real(0.0);
        DenseMatrix::from_row_major(
            4,
            4,
            vec![
                self.a,
                z,
                z,
                z, //
                z,
                self.b_plus,
                self.c_plus,
                z, //
                z,
                self.c_minus,
                self.b_minus,
                z, //
                z,
                z,
                z,
                self.a,
            ],
        )
        .expect("4x4 layout")
    }
}

/// `R(x, tau)`.
pub fn r_matrix(x: Scalar, tau: Scalar, params: &ModelParams) -> Result<DenseMatrix> {
    Ok(RWeights::new(x, tau, params)?.matrix())
}

/// Six-vertex weights `a = sinh(x + gamma)`, `b = sinh x`, `c = sinh gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SixVertexWeights {
    pub a: Scalar,
    pub b: Scalar,
    pub c: Scalar,
}

pub fn sixv_weights(x: Scalar, gamma: Scalar) -> SixVertexWeights {
    SixVertexWeights { a: (x + gamma).sinh(), b: x.sinh(), c: gamma.sinh() }
}

/// Symmetric six-vertex R-matrix in the basis (11, 12, 21, 22).
pub fn sixv_r_matrix(x: Scalar, gamma: Scalar) -> DenseMatrix {
    let w = sixv_weights(x, gamma);
    let z = real(0.0);
    DenseMatrix::from_row_major(4, 4, vec![w.a, z, z, z, z, w.b, w.c, z, z, w.c, w.b, z, z, z, z, w.a]).expect("4x4 layout")
}

/// Eigenvalues of A and D on the all-up vector and on the all-down dual vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighestWeightEigenvalues {
    pub a: Scalar,
    pub d: Scalar,
    pub a_dual: Scalar,
    pub d_dual: Scalar,
}

pub fn hw_eigenvalues(x: Scalar, tau: Scalar, params: &ModelParams) -> Result<HighestWeightEigenvalues> {
    let g = params.gamma;
    let l = params.sites() as f64;
    let shifted = params.mu_product(x, g)?;
    let plain = params.mu_product(x, real(0.0))?;
    let d_ratio = params.th(tau + g)? / params.th_den(tau + (1.0 - l) * g)?;
    let a_dual_ratio = params.th(tau - g)? / params.th_den(tau + (l - 1.0) * g)?;
    Ok(HighestWeightEigenvalues { a: shifted, d: d_ratio * plain, a_dual: a_dual_ratio * plain, d_dual: shifted })
}

/// Entrywise relative residual of the dynamical Yang-Baxter equation on three spaces.
///
/// `R12(x1-x2; tau - g h3) R13(x1-x3; tau) R23(x2-x3; tau - g h1)
///  = R23(x2-x3; tau) R13(x1-x3; tau - g h2) R12(x1-x2; tau)`.
pub fn dyb_residual(x1: Scalar, x2: Scalar, x3: Scalar, tau: Scalar, params: &ModelParams) -> Result<f64> {
    let g = params.gamma;
    let op = |i: usize, j: usize, x: Scalar, spectator: Option<usize>| {
        embed_pair(3, i, j, |s| {
            let t = match spectator {
                Some(k) => tau - g * f64::from(s[k]),
                None => tau,
            };
            r_matrix(x, t, params)
        })
    };
    let lhs = op(0, 1, x1 - x2, Some(2))?.matmul(&op(0, 2, x1 - x3, None)?)?.matmul(&op(1, 2, x2 - x3, Some(0))?)?;
    let rhs = op(1, 2, x2 - x3, None)?.matmul(&op(0, 2, x1 - x3, Some(1))?)?.matmul(&op(0, 1, x1 - x2, None)?)?;
    Ok(lhs.relative_distance(&rhs))
}

/// Entrywise relative residual of the ordinary Yang-Baxter equation for the six-vertex R-matrix.
pub fn sixv_ybe_residual(x1: Scalar, x2: Scalar, x3: Scalar, gamma: Scalar) -> Result<f64> {
    let op = |i: usize, j: usize, x: Scalar| embed_pair(3, i, j, |_| Ok(sixv_r_matrix(x, gamma)));
    let lhs = op(0, 1, x1 - x2)?.matmul(&op(0, 2, x1 - x3)?)?.matmul(&op(1, 2, x2 - x3)?)?;
    let rhs = op(1, 2, x2 - x3)?.matmul(&op(0, 2, x1 - x3)?)?.matmul(&op(0, 1, x1 - x2)?)?;
    Ok(lhs.relative_distance(&rhs))
}
