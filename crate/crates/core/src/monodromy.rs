//! Monodromy matrix, its A/B/C/D blocks, the partition-function oracle and the
//! operator identities of the dynamical Yang-Baxter algebra.
//!
//! The full space is `aux ⊗ site_1 ⊗ ... ⊗ site_L` with big-endian indexing, so
//! `index = aux * 2^L + state`. The factor of site `i` is
//! `R_{0i}(x - mu_i; tau - gamma * sum_{k>i} h_k)` with `h_k` read per basis state.

use crate::error::{Error, Result};
use crate::model::{embed_pair, sixv_r_matrix, spin, weight_diagonal, ModelParams, ProductOrder};
use crate::numerics::{product, real, DenseMatrix, Scalar};

/// Quantum-space blocks of the monodromy matrix.
#[derive(Debug, Clone)]
pub struct MonodromyBlocks {
    pub a: DenseMatrix,
    pub b: DenseMatrix,
    pub c: DenseMatrix,
    pub d: DenseMatrix,
    pub at_x: Scalar,
    pub at_tau: Scalar,
}

impl MonodromyBlocks {
    /// Reassembles the 2x2 block matrix `[[A, B], [C, D]]`.
    pub fn assemble(&self) -> DenseMatrix {
        let n = self.a.rows();
        DenseMatrix::from_fn(2 * n, 2 * n, |i, j| {
            let blk = match (i / n, j / n) {
                (0, 0) => &self.a,
                (0, 1) => &self.b,
                (1, 0) => &self.c,
                _ => &self.d,
            };
            blk[(i % n, j % n)]
        })
    }
}

/// Local R-matrices of one monodromy row, indexed by site and dynamical shift.
trait LocalWeights {
    fn sites(&self) -> usize;
    /// R acting on aux and site `i` (0-based) when `sum_{k>i} h_k = shift`.
    fn local(&self, i: usize, shift: i32) -> Result<DenseMatrix>;
}

struct Dynamical<'a> {
    x: Scalar,
    tau: Scalar,
    params: &'a ModelParams,
}

impl LocalWeights for Dynamical<'_> {
    fn sites(&self) -> usize {
        self.params.sites()
    }

    fn local(&self, i: usize, shift: i32) -> Result<DenseMatrix> {
        let p = self.params;
        crate::model::r_matrix(self.x - p.mu[i], self.tau - p.gamma * f64::from(shift), p)
    }
}

struct SixVertex<'a> {
    x: Scalar,
    gamma: Scalar,
    mu: &'a [Scalar],
}

impl LocalWeights for SixVertex<'_> {
    fn sites(&self) -> usize {
        self.mu.len()
    }

    fn local(&self, i: usize, _shift: i32) -> Result<DenseMatrix> {
        Ok(sixv_r_matrix(self.x - self.mu[i], self.gamma))
    }
}

/// Spin sum of sites strictly after `i` in state `s` of `l` sites.
fn tail_weight(s: usize, i: usize, l: usize) -> i32 {
    (i + 1..l).map(|k| spin(s, k, l)).sum()
}

/// Dense factor on the full `2^{L+1}` space.
fn dense_factor(w: &dyn LocalWeights, i: usize) -> Result<DenseMatrix> {
    let l = w.sites();
    embed_pair(l + 1, 0, i + 1, |spins| {
        let shift: i32 = spins[i + 2..].iter().sum();
        w.local(i, shift)
    })
}

fn dense_monodromy(w: &dyn LocalWeights, order: ProductOrder) -> Result<DenseMatrix> {
    let l = w.sites();
    let mut t = DenseMatrix::identity(1 << (l + 1));
    let sites: Vec<usize> = match order {
        ProductOrder::Ascending => (0..l).collect(),
        ProductOrder::Descending => (0..l).rev().collect(),
    };
    for i in sites {
        t = t.matmul(&dense_factor(w, i)?)?;
    }
    Ok(t)
}

fn split_blocks(t: &DenseMatrix, at_x: Scalar, at_tau: Scalar) -> MonodromyBlocks {
    let n = t.rows() / 2;
    let blk = |r0: usize, c0: usize| DenseMatrix::from_fn(n, n, |i, j| t[(r0 + i, c0 + j)]);
    MonodromyBlocks { a: blk(0, 0), b: blk(0, n), c: blk(n, 0), d: blk(n, n), at_x, at_tau }
}

/// Dense monodromy blocks `A, B, C, D` at `(x, tau)`.
pub fn monodromy(x: Scalar, tau: Scalar, params: &ModelParams) -> Result<MonodromyBlocks> {
    let t = dense_monodromy(&Dynamical { x, tau, params }, params.order)?;
    Ok(split_blocks(&t, x, tau))
}

/// Dense six-vertex monodromy blocks.
pub fn sixv_monodromy(x: Scalar, gamma: Scalar, mu: &[Scalar]) -> Result<MonodromyBlocks> {
    let t = dense_monodromy(&SixVertex { x, gamma, mu }, ProductOrder::Ascending)?;
    Ok(split_blocks(&t, x, real(f64::INFINITY)))
}

/// Applies one factor to a full-space vector without forming the dense matrix.
fn apply_factor(w: &dyn LocalWeights, i: usize, v: &[Scalar]) -> Result<Vec<Scalar>> {
    let l = w.sites();
    let n = l + 1;
    let max_shift = (l - 1 - i) as i32;
    // One R per attainable shift value -max..=max in steps of two.
    let cache = (0..=max_shift).map(|k| w.local(i, 2 * k - max_shift)).collect::<Result<Vec<_>>>()?;
    let states = 1usize << l;
    let mut out = vec![real(0.0); v.len()];
    let aux_bit = n - 1;
    let site_bit = n - 2 - i;
    for (idx, &amp) in v.iter().enumerate() {
        if amp == real(0.0) {
            continue;
        }
        let shift = tail_weight(idx % states, i, l);
        let r = &cache[((shift + max_shift) / 2) as usize];
        let ba = (idx >> aux_bit) & 1;
        let bs = (idx >> site_bit) & 1;
        for oa in 0..2 {
            for os in 0..2 {
                let coeff = r[(oa * 2 + os, ba * 2 + bs)];
                if coeff == real(0.0) {
                    continue;
                }
                let target = idx ^ ((ba ^ oa) << aux_bit) ^ ((bs ^ os) << site_bit);
                out[target] += coeff * amp;
            }
        }
    }
    Ok(out)
}

/// `B v` computed by sweeping the factors over `e_down ⊗ v`.
fn apply_b_with(w: &dyn LocalWeights, order: ProductOrder, v: &[Scalar]) -> Result<Vec<Scalar>> {
    let states = v.len();
    let mut full = vec![real(0.0); 2 * states];
    full[states..].copy_from_slice(v);
    let l = w.sites();
    // T = F_first ... F_last acts on a vector starting from the rightmost factor.
    let sweep: Vec<usize> = match order {
        ProductOrder::Ascending => (0..l).rev().collect(),
        ProductOrder::Descending => (0..l).collect(),
    };
    for i in sweep {
        full = apply_factor(w, i, &full)?;
    }
    full.truncate(states);
    Ok(full)
}

/// `B(x, tau) v` on the quantum space.
pub fn apply_b(x: Scalar, tau: Scalar, params: &ModelParams, v: &[Scalar]) -> Result<Vec<Scalar>> {
    check_state_len(v, params.sites())?;
    apply_b_with(&Dynamical { x, tau, params }, params.order, v)
}

fn check_state_len(v: &[Scalar], l: usize) -> Result<()> {
    if v.len() != 1 << l {
        return Err(Error::DimensionMismatch { expected: format!("state of length {}", 1 << l), found: v.len().to_string() });
    }
    Ok(())
}

/// All-up reference vector `|0>`.
pub fn reference_state(l: usize) -> Vec<Scalar> {
    let mut v = vec![real(0.0); 1 << l];
    v[0] = real(1.0);
    v
}

/// All-down dual reference vector `<0bar|` as a coefficient vector.
pub fn dual_reference_state(l: usize) -> Vec<Scalar> {
    let mut v = vec![real(0.0); 1 << l];
    v[(1 << l) - 1] = real(1.0);
    v
}

/// `<0bar| B(x_1, tau+g) B(x_2, tau+2g) ... B(x_n, tau+n g) |0>` for any number of factors.
pub fn dual_b_product(xs: &[Scalar], params: &ModelParams) -> Result<Scalar> {
    let l = params.sites();
    let mut v = reference_state(l);
    let shifted = |j: usize| params.tau + params.gamma * (j as f64 + 1.0);
    let js: Vec<usize> = match params.order {
        ProductOrder::Ascending => (0..xs.len()).rev().collect(),
        ProductOrder::Descending => (0..xs.len()).collect(),
    };
    for j in js {
        v = apply_b_with(&Dynamical { x: xs[j], tau: shifted(j), params }, params.order, &v)?;
    }
    Ok(v[(1 << l) - 1])
}

/// Domain-wall partition function `Z_tau(X)`.
pub fn partition_function(x: &[Scalar], params: &ModelParams) -> Result<Scalar> {
    if x.len() != params.sites() {
        return Err(Error::DimensionMismatch { expected: format!("{} spectral points", params.sites()), found: x.len().to_string() });
    }
    dual_b_product(x, params)
}

/// Six-vertex domain-wall partition function.
pub fn sixv_partition_function(x: &[Scalar], gamma: Scalar, mu: &[Scalar]) -> Result<Scalar> {
    if x.len() != mu.len() || mu.is_empty() {
        return Err(Error::DimensionMismatch { expected: format!("{} spectral points", mu.len()), found: x.len().to_string() });
    }
    let l = mu.len();
    let mut v = reference_state(l);
    for &xj in x.iter().rev() {
        v = apply_b_with(&SixVertex { x: xj, gamma, mu }, ProductOrder::Ascending, &v)?;
    }
    Ok(v[(1 << l) - 1])
}

/// Operator identities checked on the quantum space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgebraIdentity {
    /// `A(x1,t) A(x2,t-g) = A(x2,t) A(x1,t-g)`.
    AaExchange,
    /// `B(x1,t) B(x2,t+g) = B(x2,t) B(x1,t+g)`.
    BbExchange,
    /// A(x1,t) B(x2,t-g) expanded in B A.
    AbExchange,
    /// B(x1,t) A(x2,t+g) expanded in A B.
    BaExchange,
    /// `D(x1,t) f(H) = f(H) D(x1,t)`.
    DCartan,
    /// `B(x1,t) f(H) = f(H+2) B(x1,t)`.
    BCartan,
    /// `D(x1,t) D(x2,t+g) = D(x2,t) D(x1,t+g)`.
    DdExchange,
    /// `[t + g(1-H)] D(x1,t) B(x2,t+g)` expanded in B D.
    DbExchange,
    /// `[t - g(1+H)] B(x1,t) D(x2,t+g)` expanded in D B.
    BdExchange,
    /// `A(x0, t+2g) Y_t(X)` expanded in `Y_{t+g} A`.
    ALift,
    /// `D(x0bar, t+g) Y_{t+g}(X)` expanded in `Y_t D` with Cartan factors on the right.
    DLift,
}

impl AlgebraIdentity {
    pub const ALL: [AlgebraIdentity; 11] = [
        Self::AaExchange,
        Self::BbExchange,
        Self::AbExchange,
        Self::BaExchange,
        Self::DCartan,
        Self::BCartan,
        Self::DdExchange,
        Self::DbExchange,
        Self::BdExchange,
        Self::ALift,
        Self::DLift,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::AaExchange => "SAB-AA",
            Self::BbExchange => "SAB-BB",
            Self::AbExchange => "SAB-AB",
            Self::BaExchange => "SAB-BA",
            Self::DCartan => "SDBH-DH",
            Self::BCartan => "SDBH-BH",
            Self::DdExchange => "SDBH-DD",
            Self::DbExchange => "SDBH-DB",
            Self::BdExchange => "SDBH-BD",
            Self::ALift => "AL1",
            Self::DLift => "DL1",
        }
    }
}

/// Spectral points for one evaluation of the operator identities.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraPoint {
    pub x1: Scalar,
    pub x2: Scalar,
    pub cfg: crate::model::SpectralConfig,
}

/// Relative residual of one operator identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResidual {
    pub identity: AlgebraIdentity,
    pub residual: f64,
}

struct Ops<'a> {
    p: &'a ModelParams,
    h: Vec<i32>,
}

impl Ops<'_> {
    fn blocks(&self, x: Scalar, t: Scalar) -> Result<MonodromyBlocks> {
        monodromy(x, t, self.p)
    }
    fn a(&self, x: Scalar, t: Scalar) -> Result<DenseMatrix> {
        Ok(self.blocks(x, t)?.a)
    }
    fn b(&self, x: Scalar, t: Scalar) -> Result<DenseMatrix> {
        Ok(self.blocks(x, t)?.b)
    }
    fn d(&self, x: Scalar, t: Scalar) -> Result<DenseMatrix> {
        Ok(self.blocks(x, t)?.d)
    }
    fn th(&self, z: Scalar) -> Result<Scalar> {
        self.p.th(z)
    }
    fn thd(&self, z: Scalar) -> Result<Scalar> {
        self.p.th_den(z)
    }
    /// Diagonal `f(H + shift)` built from a per-weight function.
    fn cartan(&self, shift: i32, f: impl Fn(f64) -> Result<Scalar>) -> Result<DenseMatrix> {
        let d = self.h.iter().map(|&w| f(f64::from(w + shift))).collect::<Result<Vec<_>>>()?;
        Ok(DenseMatrix::diagonal(&d))
    }
    /// `Y_t(X) = B(x_1, t+g) ... B(x_L, t+Lg)` in the configured order.
    fn y(&self, xs: &[Scalar], t: Scalar) -> Result<DenseMatrix> {
        let mut m = DenseMatrix::identity(1 << self.p.sites());
        let js: Vec<usize> = match self.p.order {
            ProductOrder::Ascending => (0..xs.len()).collect(),
            ProductOrder::Descending => (0..xs.len()).rev().collect(),
        };
        for j in js {
            m = m.matmul(&self.b(xs[j], t + self.p.gamma * (j as f64 + 1.0))?)?;
        }
        Ok(m)
    }
}

fn mm(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    a.matmul(b)
}

/// Evaluates one identity as `(lhs, rhs)`.
fn identity_sides(id: AlgebraIdentity, pt: &AlgebraPoint, p: &ModelParams) -> Result<(DenseMatrix, DenseMatrix)> {
    let o = Ops { p, h: weight_diagonal(p.sites()) };
    let (x1, x2, t, g) = (pt.x1, pt.x2, p.tau, p.gamma);
    let l = p.sites() as f64;
    // Arbitrary test function of the Cartan element.
    let f = |w: f64| o.th(t + 0.37 * g * w + 0.11);
    Ok(match id {
        AlgebraIdentity::AaExchange => (mm(&o.a(x1, t)?, &o.a(x2, t - g)?)?, mm(&o.a(x2, t)?, &o.a(x1, t - g)?)?),
        AlgebraIdentity::BbExchange => (mm(&o.b(x1, t)?, &o.b(x2, t + g)?)?, mm(&o.b(x2, t)?, &o.b(x1, t + g)?)?),
        AlgebraIdentity::DdExchange => (mm(&o.d(x1, t)?, &o.d(x2, t + g)?)?, mm(&o.d(x2, t)?, &o.d(x1, t + g)?)?),
        AlgebraIdentity::AbExchange => {
            let lhs = mm(&o.a(x1, t)?, &o.b(x2, t - g)?)?;
            let k1 = o.th(x2 - x1 + g)? * o.th(t)? / (o.thd(x2 - x1)? * o.thd(t + g)?);
            let k2 = o.th(t + x1 - x2)? * o.th(g)? / (o.thd(x1 - x2)? * o.thd(t + g)?);
            let rhs = mm(&o.b(x2, t)?, &o.a(x1, t + g)?)?.scale(k1).add(&mm(&o.b(x1, t)?, &o.a(x2, t + g)?)?.scale(k2));
            (lhs, rhs)
        }
        AlgebraIdentity::BaExchange => {
            let lhs = mm(&o.b(x1, t)?, &o.a(x2, t + g)?)?;
            let k1 = o.th(x2 - x1 + g)? * o.th(t)? / (o.thd(x2 - x1)? * o.thd(t - g)?);
            let k2 = o.th(t + x2 - x1)? * o.th(g)? / (o.thd(x2 - x1)? * o.thd(t - g)?);
            let rhs = mm(&o.a(x2, t)?, &o.b(x1, t - g)?)?.scale(k1).sub(&mm(&o.a(x1, t)?, &o.b(x2, t - g)?)?.scale(k2));
            (lhs, rhs)
        }
        AlgebraIdentity::DCartan => {
            let d = o.d(x1, t)?;
            let fh = o.cartan(0, f)?;
            (mm(&d, &fh)?, mm(&fh, &d)?)
        }
        AlgebraIdentity::BCartan => {
            let b = o.b(x1, t)?;
            (mm(&b, &o.cartan(0, f)?)?, mm(&o.cartan(2, f)?, &b)?)
        }
        AlgebraIdentity::DbExchange => {
            let lhs = mm(&o.cartan(0, |w| o.th(t + g * (1.0 - w)))?, &mm(&o.d(x1, t)?, &o.b(x2, t + g)?)?)?;
            let k = o.th(x1 - x2 + g)? / o.thd(x1 - x2)?;
            let q = o.th(g)? / o.thd(x1 - x2)?;
            let r1 = mm(&o.cartan(0, |w| o.th(t - g * w))?, &mm(&o.b(x2, t)?, &o.d(x1, t + g)?)?)?.scale(k);
            let r2 = mm(&o.cartan(0, |w| o.th(t + x1 - x2 - g * w))?, &mm(&o.b(x1, t)?, &o.d(x2, t + g)?)?)?.scale(q);
            (lhs, r1.sub(&r2))
        }
        AlgebraIdentity::BdExchange => {
            let lhs = mm(&o.cartan(0, |w| o.th(t - g * (1.0 + w)))?, &mm(&o.b(x1, t)?, &o.d(x2, t + g)?)?)?;
            let k = o.th(x1 - x2 + g)? / o.thd(x1 - x2)?;
            let q = o.th(g)? / o.thd(x1 - x2)?;
            let r1 = mm(&o.cartan(0, |w| o.th(t - g * w))?, &mm(&o.d(x2, t)?, &o.b(x1, t + g)?)?)?.scale(k);
            let r2 = mm(&o.cartan(0, |w| o.th(t + x2 - x1 - g * w))?, &mm(&o.d(x1, t)?, &o.b(x2, t + g)?)?)?.scale(q);
            (lhs, r1.sub(&r2))
        }
        AlgebraIdentity::ALift => {
            let (x0, xs) = (pt.cfg.x0, &pt.cfg.x);
            let lhs = mm(&o.a(x0, t + 2.0 * g)?, &o.y(xs, t)?)?;
            let lead = o.th(t + 2.0 * g)? / o.thd(t + (l + 2.0) * g)?
                * product(xs.iter().map(|&xj| Ok(o.th(xj - x0 + g)? / o.thd(xj - x0)?)).collect::<Result<Vec<_>>>()?);
            let mut rhs = mm(&o.y(xs, t + g)?, &o.a(x0, t + (l + 2.0) * g)?)?.scale(lead);
            for i in 1..=xs.len() {
                let xi = xs[i - 1];
                let rest = others(xs, i, |xj| Ok(o.th(xj - xi + g)? / o.thd(xj - xi)?))?;
                let k = o.th(t + 2.0 * g + x0 - xi)? * o.th(g)? / (o.thd(x0 - xi)? * o.thd(t + (l + 2.0) * g)?) * rest;
                let term = mm(&o.y(&pt.cfg.with_x0_at(i)?, t + g)?, &o.a(xi, t + (l + 2.0) * g)?)?;
                rhs = rhs.add(&term.scale(k));
            }
            (lhs, rhs)
        }
        AlgebraIdentity::DLift => {
            let (xb, xs) = (pt.cfg.x0bar, &pt.cfg.x);
            let lhs = mm(&o.d(xb, t + g)?, &o.y(xs, t + g)?)?;
            let lead =
                o.th(t + 2.0 * g)? * product(xs.iter().map(|&xj| Ok(o.th(xb - xj + g)? / o.thd(xb - xj)?)).collect::<Result<Vec<_>>>()?);
            let inv_h2 = o.cartan(0, |w| Ok(o.thd(t + g * (w + 2.0))?.inv()))?;
            let mut rhs = mm(&mm(&o.y(xs, t)?, &o.d(xb, t + g * (l + 1.0))?)?, &inv_h2)?.scale(lead);
            for i in 1..=xs.len() {
                let xi = xs[i - 1];
                let rest = others(xs, i, |xj| Ok(o.th(xi - xj + g)? / o.thd(xi - xj)?))?;
                let k = o.th(g)? * o.th(t + 2.0 * g)? / o.thd(xb - xi)? * rest;
                let right =
                    o.cartan(0, |w| Ok(o.th(t + g * (w + 1.0) + xb - xi)? / (o.thd(t + g * (w + 1.0))? * o.thd(t + g * (w + 2.0))?)))?;
                let term = mm(&mm(&o.y(&pt.cfg.with_x0bar_at(i)?, t)?, &o.d(xi, t + g * (l + 1.0))?)?, &right)?;
                rhs = rhs.sub(&term.scale(k));
            }
            (lhs, rhs)
        }
    })
}

/// `prod_{j != i} f(x_j)` for 1-based `i`.
fn others(xs: &[Scalar], i: usize, f: impl Fn(Scalar) -> Result<Scalar>) -> Result<Scalar> {
    xs.iter().enumerate().filter(|(j, _)| j + 1 != i).map(|(_, &xj)| f(xj)).collect::<Result<Vec<_>>>().map(product)
}

/// Entrywise relative residual of `id` at one point.
pub fn identity_residual(id: AlgebraIdentity, pt: &AlgebraPoint, params: &ModelParams) -> Result<f64> {
    let (lhs, rhs) = identity_sides(id, pt, params)?;
    Ok(lhs.relative_distance(&rhs))
}

/// Largest residual of every identity over the supplied points.
pub fn verify_algebra(params: &ModelParams, points: &[AlgebraPoint]) -> Result<Vec<IdentityResidual>> {
    AlgebraIdentity::ALL
        .iter()
        .map(|&identity| {
            let residual = points
                .iter()
                .map(|pt| identity_residual(identity, pt, params))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok(IdentityResidual { identity, residual })
        })
        .collect()
}

/// Highest-weight structure of the reference vectors at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighestWeightResiduals {
    /// `|C|0>| / max|C|`.
    pub c_annihilation: f64,
    /// `|<0bar|C| / max|C|`.
    pub dual_c_annihilation: f64,
    /// Largest relative eigenvalue mismatch among A, D on `|0>` and `<0bar|`.
    pub eigenvalue_mismatch: f64,
}

pub fn highest_weight_residuals(x: Scalar, params: &ModelParams) -> Result<HighestWeightResiduals> {
    let l = params.sites();
    let blocks = monodromy(x, params.tau, params)?;
    let ev = crate::model::hw_eigenvalues(x, params.tau, params)?;
    let up = reference_state(l);
    let down = dual_reference_state(l);
    let norm = |v: &[Scalar]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let c_scale = blocks.c.max_abs().max(f64::MIN_POSITIVE);
    let eig = |v: Vec<Scalar>, basis: &[Scalar], lambda: Scalar| {
        let diff: Vec<Scalar> = v.iter().zip(basis).map(|(a, b)| a - lambda * b).collect();
        norm(&diff) / lambda.norm().max(f64::MIN_POSITIVE)
    };
    let mismatches = [
        eig(blocks.a.apply(&up)?, &up, ev.a),
        eig(blocks.d.apply(&up)?, &up, ev.d),
        eig(blocks.a.apply_left(&down)?, &down, ev.a_dual),
        eig(blocks.d.apply_left(&down)?, &down, ev.d_dual),
    ];
    Ok(HighestWeightResiduals {
        c_annihilation: norm(&blocks.c.apply(&up)?) / c_scale,
        dual_c_annihilation: norm(&blocks.c.apply_left(&down)?) / c_scale,
        eigenvalue_mismatch: mismatches.into_iter().fold(0.0, f64::max),
    })
}

/// `Z` has a simple pole at `tau = -gamma`. Returns `lim_{s->0} [s] Z_{-gamma+s}(X)`
/// divided by `prod_{i,j} [x_i - mu_j]`.
///
/// `s -> [s] Z_{-gamma+s}` is analytic near 0, so its mean over `nodes` equally spaced
/// points on a circle equals the value at the centre with error `O(5^-nodes)`: the
/// radius is a fifth of the distance to the nearest other pole `[tau + k gamma] = 0`.
pub fn tau_minus_gamma_reduced(x: &[Scalar], params: &ModelParams, nodes: usize) -> Result<Scalar> {
    if nodes == 0 {
        return Err(Error::IndexOutOfDomain("contour needs at least one node".into()));
    }
    let l = x.len() as i32;
    let gap = (-(l + 2)..=2 * l + 3)
        .filter(|&k| k != 1)
        .map(|k| params.theta.zero_distance(params.gamma * f64::from(k - 1)))
        .fold(f64::INFINITY, f64::min);
    let radius = gap / 5.0;
    if radius < params.theta.pole_floor() {
        return Err(Error::DegeneratePoint(format!("second pole within {gap:e} of tau = -gamma")));
    }
    let mut residue = real(0.0);
    for k in 0..nodes {
        let s = Scalar::from_polar(radius, std::f64::consts::TAU * (k as f64 + 0.5) / nodes as f64);
        residue += params.th(s)? * partition_function(x, &params.with_tau(-params.gamma + s))?;
    }
    let residue = residue / nodes as f64;
    let mut den = real(1.0);
    for &xi in x {
        den *= params.mu_product(xi, real(0.0))?;
    }
    if den.norm() < params.theta.pole_floor() {
        return Err(Error::NearPole { arg: den, modulus: den.norm(), context: "inhomogeneity product".into() });
    }
    Ok(residue / den)
}
