//! Coefficients and residuals of the functional equations of type A, D and AD,
//! the permuted AD system, the reduced six-vertex systems and the Cramer steps.
//!
//! Permutations act by argument substitution on the vector
//! `v = [x_0, x_0bar, x_1, ..., x_L]`.

use crate::error::{Error, Result};
use crate::model::{sixv_weights, ModelParams, SpectralConfig};
use crate::monodromy::{partition_function, sixv_partition_function};
use crate::numerics::{det_or_zero, lu_determinant, product, real, DenseMatrix, LuDecomposition, Scalar};
use crate::report::{ParamSnapshot, ResidualReport};

/// Label `(l, m)` of one equation of the permuted AD system (1-based sites).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PermLabel {
    /// `(l, 0bar)`: `x_0` exchanged with `x_l`.
    ZeroBar(usize),
    /// `(l, m)` with `l < m`: `x_0 <-> x_l` followed by `x_0bar <-> x_m`.
    Pair(usize, usize),
    /// `(0, m)`: `x_0bar` exchanged with `x_m`.
    Zero(usize),
}

impl PermLabel {
    /// Every label in row order of the assembled system.
    pub fn all(l: usize) -> Vec<PermLabel> {
        let mut out: Vec<PermLabel> = (1..=l).map(PermLabel::ZeroBar).collect();
        out.extend(pairs(l).into_iter().map(|(a, b)| PermLabel::Pair(a, b)));
        out.extend((1..=l).map(PermLabel::Zero));
        out
    }

    fn validate(&self, l: usize) -> Result<()> {
        let ok = match *self {
            PermLabel::ZeroBar(a) | PermLabel::Zero(a) => (1..=l).contains(&a),
            PermLabel::Pair(a, b) => a >= 1 && a < b && b <= l,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::IndexOutOfDomain(format!("label {self:?} for {l} sites")))
        }
    }
}

impl std::fmt::Display for PermLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PermLabel::ZeroBar(l) => write!(f, "({l},0bar)"),
            PermLabel::Pair(l, m) => write!(f, "({l},{m})"),
            PermLabel::Zero(m) => write!(f, "(0,{m})"),
        }
    }
}

/// Which equation a coefficient bundle belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquationTag {
    A,
    D,
    Ad,
    AdPerm(PermLabel),
    SixVertexA(usize),
    SixVertexD(usize),
}

impl std::fmt::Display for EquationTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EquationTag::A => write!(f, "eqA"),
            EquationTag::D => write!(f, "eqD"),
            EquationTag::Ad => write!(f, "eqADneu"),
            EquationTag::AdPerm(lab) => write!(f, "eqADper{lab}"),
            EquationTag::SixVertexA(l) => write!(f, "redAsys({l})"),
            EquationTag::SixVertexD(m) => write!(f, "redDsys({m})"),
        }
    }
}

/// Coefficients of one linear functional equation.
///
/// * A, D: `n` holds `N_0, N_1..N_L` (index 0 is the auxiliary term).
/// * AD: `n`, `nbar` hold `N_1..N_L`, `Nbar_1..Nbar_L`.
/// * AD-perm: additionally `o[n_{r,s} - 1] = O_{rs}` for `r < s`.
/// * six-vertex: `n` holds `sigma_0..sigma_L` or `rho_0..rho_L`, `m0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientBundle {
    pub tag: EquationTag,
    pub m0: Scalar,
    pub n: Vec<Scalar>,
    pub nbar: Vec<Scalar>,
    pub o: Vec<Scalar>,
}

/// Partition-function evaluator `(X, tau) -> Z_tau(X)`.
pub type ZEval<'a> = dyn Fn(&[Scalar], Scalar) -> Result<Scalar> + Sync + 'a;

/// The monodromy oracle as an evaluator.
pub fn oracle(params: &ModelParams) -> impl Fn(&[Scalar], Scalar) -> Result<Scalar> + Sync + '_ {
    move |x, tau| partition_function(x, &params.with_tau(tau))
}

/// `n_{r,s} = s + L(r-1) - r(r+1)/2` for `1 <= r < s <= L`.
pub fn pair_index(r: usize, s: usize, l: usize) -> Result<usize> {
    if !(r >= 1 && r < s && s <= l) {
        return Err(Error::IndexOutOfDomain(format!("pair ({r},{s}) for {l} sites")));
    }
    Ok(s + l * (r - 1) - r * (r + 1) / 2)
}

/// Pairs `(r, s)`, `1 <= r < s <= L`, in pair-index order.
pub fn pairs(l: usize) -> Vec<(usize, usize)> {
    (1..=l).flat_map(|r| (r + 1..=l).map(move |s| (r, s))).collect()
}

/// Number of unknowns of the permuted system, `L(L+3)/2`.
pub fn system_dimension(l: usize) -> usize {
    l * (l + 3) / 2
}

/// Theta helpers over one parameter set.
struct Th<'a>(&'a ModelParams);

impl Th<'_> {
    fn t(&self, z: Scalar) -> Result<Scalar> {
        self.0.th(z)
    }
    fn d(&self, z: Scalar) -> Result<Scalar> {
        self.0.th_den(z)
    }
    fn mu(&self, y: Scalar, shift: Scalar) -> Result<Scalar> {
        self.0.mu_product(y, shift)
    }
    /// `prod_{j != skip} f(x_j)`.
    fn prod_except(&self, xs: &[Scalar], skip: Option<usize>, f: impl Fn(Scalar) -> Result<Scalar>) -> Result<Scalar> {
        xs.iter().enumerate().filter(|(j, _)| Some(*j) != skip).map(|(_, &x)| f(x)).collect::<Result<Vec<_>>>().map(product)
    }
}

/// Type A coefficients at auxiliary point `x0` over `xs`.
fn type_a(x0: Scalar, xs: &[Scalar], p: &ModelParams) -> Result<(Scalar, Vec<Scalar>)> {
    let th = Th(p);
    let (t, g) = (p.tau, p.gamma);
    let l = xs.len() as f64;
    let m0 = th.t(t + g)? / th.d(t + (l + 1.0) * g)? * th.mu(x0, real(0.0))?;
    let n0 = -th.t(t + 2.0 * g)? / th.d(t + (l + 2.0) * g)?
        * th.mu(x0, g)?
        * th.prod_except(xs, None, |xj| Ok(th.t(xj - x0 + g)? / th.d(xj - x0)?))?;
    let mut n = vec![n0];
    for (i, &xi) in xs.iter().enumerate() {
        // The exchange relation fixes the factor [gamma] in the numerator.
        let lead = th.t(t + 2.0 * g + x0 - xi)? * th.t(g)? / (th.d(xi - x0)? * th.d(t + (l + 2.0) * g)?);
        let rest = th.prod_except(xs, Some(i), |xj| Ok(th.t(xj - xi + g)? / th.d(xj - xi)?))?;
        n.push(lead * th.mu(xi, g)? * rest);
    }
    Ok((m0, n))
}

/// Type D coefficients at auxiliary point `xb` over `xs`.
fn type_d(xb: Scalar, xs: &[Scalar], p: &ModelParams) -> Result<(Scalar, Vec<Scalar>)> {
    let th = Th(p);
    let (t, g) = (p.tau, p.gamma);
    let l = xs.len() as f64;
    let m0 = th.mu(xb, g)?;
    let n0 = -th.mu(xb, real(0.0))? * th.prod_except(xs, None, |xj| Ok(th.t(xb - xj + g)? / th.d(xb - xj)?))?;
    let mut n = vec![n0];
    for (i, &xi) in xs.iter().enumerate() {
        let lead = th.t(g)? * th.t(t + (l + 1.0) * g + xb - xi)? / (th.d(xb - xi)? * th.d(t + (l + 1.0) * g)?);
        let rest = th.prod_except(xs, Some(i), |xj| Ok(th.t(xi - xj + g)? / th.d(xi - xj)?))?;
        n.push(lead * th.mu(xi, real(0.0))? * rest);
    }
    Ok((m0, n))
}

/// AD coefficients `(M_0, N_i, Nbar_i)` over the variable vector `v`.
fn type_ad(v: &[Scalar], p: &ModelParams) -> Result<(Scalar, Vec<Scalar>, Vec<Scalar>)> {
    let th = Th(p);
    let (x0, xb, xs) = (v[0], v[1], &v[2..]);
    let (t, g) = (p.tau, p.gamma);
    let l = xs.len() as f64;
    let first = xs
        .iter()
        .zip(&p.mu)
        .map(|(&xj, &mj)| Ok(th.t(x0 - xj + g)? * th.t(x0 - mj)? * th.t(xb - mj + g)? / (th.d(x0 - xj)? * th.d(x0 - mj + g)?)))
        .collect::<Result<Vec<_>>>()?;
    let second =
        xs.iter().zip(&p.mu).map(|(&xj, &mj)| Ok(th.t(xb - xj + g)? * th.t(xb - mj)? / th.d(xb - xj)?)).collect::<Result<Vec<_>>>()?;
    let m0 = product(first) - product(second);
    let t1 = th.d(t + (l + 1.0) * g)?;
    let cf = |u: Scalar, w: Scalar| -> Result<Scalar> { Ok(th.t(g)? * th.t(u - w + t + (l + 1.0) * g)? / (t1 * th.d(u - w)?)) };
    let mut n = Vec::with_capacity(xs.len());
    let mut nbar = Vec::with_capacity(xs.len());
    for (i, &xi) in xs.iter().enumerate() {
        let rest = th.prod_except(xs, Some(i), |xj| Ok(th.t(xi - xj + g)? / th.d(xi - xj)?))?;
        let ratio =
            p.mu.iter().map(|&m| Ok(th.t(xi - m)? * th.t(xb - m + g)? / th.d(x0 - m + g)?)).collect::<Result<Vec<_>>>().map(product)?;
        n.push(-cf(x0, xi)? * ratio * rest);
        nbar.push(cf(xb, xi)? * th.mu(xi, real(0.0))? * rest);
    }
    Ok((m0, n, nbar))
}

fn check_sites(cfg: &SpectralConfig, p: &ModelParams) -> Result<()> {
    if cfg.sites() != p.sites() {
        return Err(Error::DimensionMismatch { expected: format!("{} spectral points", p.sites()), found: cfg.sites().to_string() });
    }
    Ok(())
}

pub fn coeff_a(cfg: &SpectralConfig, params: &ModelParams) -> Result<CoefficientBundle> {
    check_sites(cfg, params)?;
    let (m0, n) = type_a(cfg.x0, &cfg.x, params).map_err(|e| e.in_context("type A coefficient"))?;
    Ok(CoefficientBundle { tag: EquationTag::A, m0, n, nbar: vec![], o: vec![] })
}

pub fn coeff_d(cfg: &SpectralConfig, params: &ModelParams) -> Result<CoefficientBundle> {
    check_sites(cfg, params)?;
    let (m0, n) = type_d(cfg.x0bar, &cfg.x, params).map_err(|e| e.in_context("type D coefficient"))?;
    Ok(CoefficientBundle { tag: EquationTag::D, m0, n, nbar: vec![], o: vec![] })
}

pub fn coeff_ad(cfg: &SpectralConfig, params: &ModelParams) -> Result<CoefficientBundle> {
    check_sites(cfg, params)?;
    let (m0, n, nbar) = type_ad(&cfg.all_points(), params).map_err(|e| e.in_context("type AD coefficient"))?;
    Ok(CoefficientBundle { tag: EquationTag::Ad, m0, n, nbar, o: vec![] })
}

fn swapped(v: &[Scalar], a: usize, b: usize) -> Vec<Scalar> {
    let mut w = v.to_vec();
    w.swap(a, b);
    w
}

/// Coefficients of the permuted AD equation with the given label.
pub fn coeff_ad_perm(label: PermLabel, cfg: &SpectralConfig, params: &ModelParams) -> Result<CoefficientBundle> {
    check_sites(cfg, params)?;
    let l = cfg.sites();
    label.validate(l)?;
    let v = cfg.all_points();
    let zero = real(0.0);
    let mut n = vec![zero; l];
    let mut nbar = vec![zero; l];
    let mut o = vec![zero; l * (l - 1) / 2];
    let m0;
    let ctx = |e: Error| e.in_context(&format!("permuted AD coefficient {label}"));
    match label {
        PermLabel::ZeroBar(a) => {
            let (pm, pn, pnb) = type_ad(&swapped(&v, 0, 1 + a), params).map_err(ctx)?;
            m0 = pn[a - 1];
            for j in 1..=l {
                n[j - 1] = if j == a { pm } else { pn[j - 1] };
            }
            nbar[a - 1] = pnb[a - 1];
            for (r, s) in pairs(l) {
                let k = pair_index(r, s, l)? - 1;
                if s == a {
                    o[k] = pnb[r - 1];
                } else if r == a {
                    o[k] = pnb[s - 1];
                }
            }
        }
        PermLabel::Zero(b) => {
            let (pm, pn, pnb) = type_ad(&swapped(&v, 1, 1 + b), params).map_err(ctx)?;
            m0 = pnb[b - 1];
            for j in 1..=l {
                nbar[j - 1] = if j == b { pm } else { pnb[j - 1] };
            }
            n[b - 1] = pn[b - 1];
            for (r, s) in pairs(l) {
                let k = pair_index(r, s, l)? - 1;
                if s == b {
                    o[k] = pn[r - 1];
                } else if r == b {
                    o[k] = pn[s - 1];
                }
            }
        }
        PermLabel::Pair(a, b) => {
            let (pm, pn, pnb) = type_ad(&swapped(&swapped(&v, 0, 1 + a), 1, 1 + b), params).map_err(ctx)?;
            m0 = zero;
            n[a - 1] = pnb[b - 1];
            n[b - 1] = pn[b - 1];
            nbar[a - 1] = pnb[a - 1];
            nbar[b - 1] = pn[a - 1];
            for (r, s) in pairs(l) {
                let k = pair_index(r, s, l)? - 1;
                o[k] = if r == a && s == b {
                    pm
                } else if r == a {
                    pnb[s - 1]
                } else if r == b {
                    pn[s - 1]
                } else if s == a {
                    pnb[r - 1]
                } else if s == b {
                    pn[r - 1]
                } else {
                    zero
                };
            }
        }
    }
    Ok(CoefficientBundle { tag: EquationTag::AdPerm(label), m0, n, nbar, o })
}

/// Which reduced six-vertex system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SixVertexKind {
    A,
    D,
}

/// `sigma_i^{(l)}` (kind A) or `rho_i^{(l)}` (kind D) for `i = 0..L`, with
/// index 0 standing for `x_ext`.
pub fn sixv_coeffs(
    kind: SixVertexKind,
    index: usize,
    x_ext: Scalar,
    x: &[Scalar],
    gamma: Scalar,
    mu: &[Scalar],
) -> Result<CoefficientBundle> {
    let l = x.len();
    if index > l {
        return Err(Error::IndexOutOfDomain(format!("equation index {index} for {l} sites")));
    }
    let mut xx = vec![x_ext];
    xx.extend_from_slice(x);
    let n = (0..=l).map(|i| sixv_entry(kind, i, index, &xx, gamma, mu)).collect::<Result<Vec<_>>>()?;
    let tag = match kind {
        SixVertexKind::A => EquationTag::SixVertexA(index),
        SixVertexKind::D => EquationTag::SixVertexD(index),
    };
    Ok(CoefficientBundle { tag, m0: real(0.0), n, nbar: vec![], o: vec![] })
}

fn nonzero_sinh(z: Scalar) -> Result<Scalar> {
    let s = z.sinh();
    if s.norm() < crate::theta::ThetaContext::DEFAULT_POLE_FLOOR {
        return Err(Error::NearPole { arg: z, modulus: s.norm(), context: "six-vertex weight b".into() });
    }
    Ok(s)
}

/// One six-vertex coefficient; `xx[0]` is the auxiliary point.
pub(crate) fn sixv_entry(kind: SixVertexKind, i: usize, l: usize, xx: &[Scalar], g: Scalar, mu: &[Scalar]) -> Result<Scalar> {
    let a = |z: Scalar| sixv_weights(z, g).a;
    let b = |z: Scalar| sixv_weights(z, g).b;
    let c = sixv_weights(real(0.0), g).c;
    let sites = xx.len() - 1;
    let prod_mu = |y: Scalar, f: &dyn Fn(Scalar) -> Scalar| product(mu.iter().map(|&m| f(y - m)));
    let prod_k = |range: &mut dyn Iterator<Item = usize>, f: &dyn Fn(usize) -> Result<Scalar>| -> Result<Scalar> {
        range.map(f).collect::<Result<Vec<_>>>().map(product)
    };
    match kind {
        SixVertexKind::A => {
            if i == 0 && l != 0 {
                let lead = c / nonzero_sinh(xx[0] - xx[l])?;
                let rest = prod_k(&mut (1..=sites).filter(|&k| k != l), &|k| Ok(a(xx[k] - xx[0]) / nonzero_sinh(xx[k] - xx[0])?))?;
                Ok(lead * prod_mu(xx[0], &a) * rest)
            } else if i == l {
                let rest = prod_k(&mut (0..=sites).filter(|&k| k != l), &|k| Ok(a(xx[k] - xx[l]) / nonzero_sinh(xx[k] - xx[l])?))?;
                Ok(prod_mu(xx[l], &b) - prod_mu(xx[l], &a) * rest)
            } else {
                let lead = c / nonzero_sinh(xx[i] - xx[l])?;
                let rest =
                    prod_k(&mut (0..=sites).filter(|&k| k != i && k != l), &|k| Ok(a(xx[k] - xx[i]) / nonzero_sinh(xx[k] - xx[i])?))?;
                Ok(lead * prod_mu(xx[i], &a) * rest)
            }
        }
        SixVertexKind::D => {
            let m = l;
            if i == 0 && m != 0 {
                let lead = c / nonzero_sinh(xx[m] - xx[0])?;
                let rest = prod_k(&mut (1..=sites).filter(|&k| k != m), &|k| Ok(a(xx[0] - xx[k]) / nonzero_sinh(xx[0] - xx[k])?))?;
                Ok(lead * prod_mu(xx[0], &b) * rest)
            } else if i == m {
                let rest = prod_k(&mut (0..=sites).filter(|&k| k != m), &|k| Ok(a(xx[m] - xx[k]) / nonzero_sinh(xx[m] - xx[k])?))?;
                Ok(prod_mu(xx[m], &a) - prod_mu(xx[m], &b) * rest)
            } else {
                let lead = c / nonzero_sinh(xx[m] - xx[i])?;
                let rest =
                    prod_k(&mut (0..=sites).filter(|&k| k != i && k != m), &|k| Ok(a(xx[i] - xx[k]) / nonzero_sinh(xx[i] - xx[k])?))?;
                Ok(lead * prod_mu(xx[i], &b) * rest)
            }
        }
    }
}

/// Terms of the equation described by `bundle`, evaluated with `z`.
pub fn equation_terms(bundle: &CoefficientBundle, cfg: &SpectralConfig, params: &ModelParams, z: &ZEval<'_>) -> Result<Vec<Scalar>> {
    let l = cfg.sites();
    let (t, g) = (params.tau, params.gamma);
    let mut terms = Vec::new();
    match bundle.tag {
        EquationTag::A => {
            terms.push(bundle.m0 * z(&cfg.x, t)?);
            terms.push(bundle.n[0] * z(&cfg.x, t + g)?);
            for i in 1..=l {
                terms.push(bundle.n[i] * z(&cfg.with_x0_at(i)?, t + g)?);
            }
        }
        EquationTag::D => {
            terms.push(bundle.m0 * z(&cfg.x, t + g)?);
            terms.push(bundle.n[0] * z(&cfg.x, t)?);
            for i in 1..=l {
                terms.push(bundle.n[i] * z(&cfg.with_x0bar_at(i)?, t)?);
            }
        }
        EquationTag::Ad | EquationTag::AdPerm(_) => {
            if bundle.m0 != real(0.0) {
                terms.push(bundle.m0 * z(&cfg.x, t)?);
            }
            for i in 1..=l {
                if bundle.n[i - 1] != real(0.0) {
                    terms.push(bundle.n[i - 1] * z(&cfg.with_x0_at(i)?, t)?);
                }
                if bundle.nbar[i - 1] != real(0.0) {
                    terms.push(bundle.nbar[i - 1] * z(&cfg.with_x0bar_at(i)?, t)?);
                }
            }
            for (r, s) in pairs(l) {
                let k = pair_index(r, s, l)? - 1;
                if let Some(&o) = bundle.o.get(k) {
                    if o != real(0.0) {
                        terms.push(o * z(&cfg.with_pair_at(r, s)?, t)?);
                    }
                }
            }
        }
        EquationTag::SixVertexA(_) | EquationTag::SixVertexD(_) => {
            terms.push(bundle.n[0] * z(&cfg.x, t)?);
            for i in 1..=l {
                terms.push(bundle.n[i] * z(&cfg.with_x0_at(i)?, t)?);
            }
        }
    }
    Ok(terms)
}

/// Normalized residual of `bundle` with evaluator `z`.
pub fn residual(
    bundle: &CoefficientBundle,
    cfg: &SpectralConfig,
    params: &ModelParams,
    z: &ZEval<'_>,
    tolerance: f64,
) -> Result<ResidualReport> {
    let terms = equation_terms(bundle, cfg, params, z)?;
    ResidualReport::from_terms(bundle.tag.to_string(), ParamSnapshot::new(params, cfg), &terms, tolerance)
}

/// The six-vertex oracle as an evaluator (the dynamical argument is ignored).
pub fn sixv_oracle<'a>(gamma: Scalar, mu: &'a [Scalar]) -> impl Fn(&[Scalar], Scalar) -> Result<Scalar> + Sync + 'a {
    move |x, _| sixv_partition_function(x, gamma, mu)
}

/// Type A coefficients after `x_0 <-> x_l` (`l = 0` is the identity), as
/// `(M_0^{(A,l)}, [N_0^{(A,l)}, ..., N_L^{(A,l)}])`.
fn type_a_permuted(l: usize, cfg: &SpectralConfig, p: &ModelParams) -> Result<(Scalar, Vec<Scalar>)> {
    let mut v = vec![cfg.x0];
    v.extend_from_slice(&cfg.x);
    let w = swapped(&v, 0, l);
    let (m0, n) = type_a(w[0], &w[1..], p)?;
    let mut row = n.clone();
    row.swap(0, l);
    Ok((m0, row))
}

/// `Z_{tau+gamma}(X)` from `Z_tau(X_l^0)`, `l = 0..L`, by Cramer's rule on the
/// permuted type A system, expanded along the column of `Z_{tau+gamma}(X)`.
pub fn cramer_shift_a(cfg: &SpectralConfig, params: &ModelParams, z: &ZEval<'_>) -> Result<Scalar> {
    check_sites(cfg, params)?;
    let l = cfg.sites();
    let rows = (0..=l).map(|k| type_a_permuted(k, cfg, params)).collect::<Result<Vec<_>>>()?;
    let coeffs = DenseMatrix::from_fn(l + 1, l + 1, |i, j| rows[i].1[j]);
    let det = lu_determinant(&coeffs)?.value;
    let mut acc = real(0.0);
    for (k, (m0, _)) in rows.iter().enumerate() {
        let zk = if k == 0 { z(&cfg.x, params.tau)? } else { z(&cfg.with_x0_at(k)?, params.tau)? };
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        acc += *m0 * det_or_zero(&coeffs.minor(k, 0))? * zk * sign;
    }
    Ok(acc / det)
}

/// The permuted AD system `Omega u = rhs` built from [`coeff_ad_perm`], with
/// unknowns `u = [Z(X_b^0), Z(X_{rs}^{0,0bar}), Z(X_b^{0bar})] / Z(X)` and
/// `rhs = -M_0`.
pub fn permuted_system(cfg: &SpectralConfig, params: &ModelParams) -> Result<(DenseMatrix, Vec<Scalar>)> {
    let l = cfg.sites();
    let npairs = l * (l - 1) / 2;
    let d = system_dimension(l);
    let mut omega = DenseMatrix::zeros(d, d);
    let mut rhs = vec![real(0.0); d];
    for (row, label) in PermLabel::all(l).into_iter().enumerate() {
        let b = coeff_ad_perm(label, cfg, params)?;
        rhs[row] = -b.m0;
        for k in 0..l {
            omega[(row, k)] = b.n[k];
            omega[(row, l + npairs + k)] = b.nbar[k];
        }
        for (k, &o) in b.o.iter().enumerate() {
            omega[(row, l + k)] = o;
        }
    }
    Ok((omega, rhs))
}

/// Solutions of the permuted system, i.e. the ratios `Z(Y)/Z(X)` for every
/// substituted set `Y`, in unknown order.
pub fn cramer_ratios(cfg: &SpectralConfig, params: &ModelParams) -> Result<Vec<Scalar>> {
    let (omega, rhs) = permuted_system(cfg, params)?;
    LuDecomposition::factor(&omega)?.solve_vec(&rhs)
}

/// Substituted spectral sets in unknown order of the permuted system.
pub fn unknown_sets(cfg: &SpectralConfig) -> Result<Vec<Vec<Scalar>>> {
    let l = cfg.sites();
    let mut out = (1..=l).map(|b| cfg.with_x0_at(b)).collect::<Result<Vec<_>>>()?;
    for (r, s) in pairs(l) {
        out.push(cfg.with_pair_at(r, s)?);
    }
    for b in 1..=l {
        out.push(cfg.with_x0bar_at(b)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theta::ThetaContext;

    fn c(re: f64, im: f64) -> Scalar {
        Scalar::new(re, im)
    }

    const MU: [Scalar; 4] = [Scalar::new(0.12, 0.05), Scalar::new(-0.37, 0.21), Scalar::new(0.44, -0.18), Scalar::new(-0.71, -0.33)];
    const XS: [Scalar; 4] = [Scalar::new(0.53, 0.11), Scalar::new(-0.21, 0.29), Scalar::new(0.81, -0.26), Scalar::new(-0.62, 0.38)];

    fn setup(l: usize) -> (ModelParams, SpectralConfig) {
        let p = ModelParams::new(c(0.31, 0.17), c(0.23, -0.41), MU[..l].to_vec(), ThetaContext::new(0.2).unwrap()).unwrap();
        let cfg = SpectralConfig::new(XS[..l].to_vec(), c(0.67, -0.14), c(-0.43, 0.22)).unwrap();
        (p, cfg)
    }

    #[test]
    fn pair_index_values() {
        assert_eq!(pair_index(1, 2, 3).unwrap(), 1);
        assert_eq!(pair_index(2, 3, 3).unwrap(), 3);
        assert!(pair_index(2, 2, 3).is_err());
        assert!(pair_index(0, 1, 3).is_err());
        assert!(pair_index(2, 4, 3).is_err());
    }

    #[test]
    fn pair_index_is_bijective() {
        for l in 2..=6 {
            let mut seen: Vec<usize> = pairs(l).into_iter().map(|(r, s)| pair_index(r, s, l).unwrap()).collect();
            seen.sort_unstable();
            assert_eq!(seen, (1..=l * (l - 1) / 2).collect::<Vec<_>>());
        }
    }

    #[test]
    fn type_a_m0_vanishes_at_inhomogeneity() {
        let (p, mut cfg) = setup(2);
        cfg.x0 = MU[0];
        assert_eq!(coeff_a(&cfg, &p).unwrap().m0, c(0.0, 0.0));
    }

    #[test]
    fn type_a_single_site_coefficient() {
        let (p, cfg) = setup(1);
        let b = coeff_a(&cfg, &p).unwrap();
        let (t, g, x0, x1) = (p.tau, p.gamma, cfg.x0, cfg.x[0]);
        let th = |z| p.th(z).unwrap();
        let expected = th(t + 2.0 * g + x0 - x1) * th(g) / (th(x1 - x0) * th(t + 3.0 * g)) * th(x1 - MU[0] + g);
        assert!((b.n[1] - expected).norm() < 1e-15 * expected.norm());
    }

    #[test]
    fn type_d_zeros() {
        let (p, mut cfg) = setup(2);
        cfg.x0bar = MU[0] - p.gamma;
        assert!(coeff_d(&cfg, &p).unwrap().m0.norm() < 1e-16);
        cfg.x0bar = MU[0];
        assert_eq!(coeff_d(&cfg, &p).unwrap().n[0], c(0.0, 0.0));
    }

    #[test]
    fn bundle_sizes() {
        for l in 1..=3 {
            let (p, cfg) = setup(l);
            assert_eq!(coeff_a(&cfg, &p).unwrap().n.len(), l + 1);
            assert_eq!(coeff_d(&cfg, &p).unwrap().n.len(), l + 1);
            let ad = coeff_ad(&cfg, &p).unwrap();
            assert_eq!((ad.n.len(), ad.nbar.len()), (l, l));
            for label in PermLabel::all(l) {
                let b = coeff_ad_perm(label, &cfg, &p).unwrap();
                assert_eq!((b.n.len(), b.nbar.len(), b.o.len()), (l, l, l * (l - 1) / 2));
            }
            assert_eq!(PermLabel::all(l).len(), system_dimension(l));
        }
    }

    #[test]
    fn perm_label_domain() {
        let (p, cfg) = setup(2);
        assert!(coeff_ad_perm(PermLabel::Pair(2, 1), &cfg, &p).is_err());
        assert!(coeff_ad_perm(PermLabel::ZeroBar(3), &cfg, &p).is_err());
        assert!(coeff_ad_perm(PermLabel::Zero(0), &cfg, &p).is_err());
    }

    #[test]
    fn perm_zero_patterns() {
        let (p, cfg) = setup(3);
        let b = coeff_ad_perm(PermLabel::Pair(1, 2), &cfg, &p).unwrap();
        assert_eq!(b.m0, c(0.0, 0.0));
        for label in PermLabel::all(3) {
            let b = coeff_ad_perm(label, &cfg, &p).unwrap();
            for (r, s) in pairs(3) {
                let o = b.o[pair_index(r, s, 3).unwrap() - 1];
                let touches = match label {
                    PermLabel::ZeroBar(a) | PermLabel::Zero(a) => r == a || s == a,
                    PermLabel::Pair(a, bb) => [r, s].iter().any(|&k| k == a || k == bb),
                };
                assert_eq!(o == c(0.0, 0.0), !touches, "{label} O_{r}{s}");
            }
        }
    }

    #[test]
    fn ad_swap_antisymmetry_at_one_site() {
        let (p, cfg) = setup(1);
        let m = coeff_ad(&cfg, &p).unwrap().m0;
        let swapped_cfg = SpectralConfig::new(cfg.x.clone(), cfg.x0bar, cfg.x0).unwrap();
        let ms = coeff_ad(&swapped_cfg, &p).unwrap().m0;
        let th = |z| p.th(z).unwrap();
        let g = p.gamma;
        let factor = th(cfg.x0 - MU[0] + g) / th(cfg.x0bar - MU[0] + g);
        assert!((ms + m * factor).norm() < 1e-14 * m.norm());
    }

    #[test]
    fn residuals_vanish_with_oracle() {
        for l in 1..=3 {
            let (p, cfg) = setup(l);
            let z = oracle(&p);
            let mut bundles = vec![coeff_a(&cfg, &p).unwrap(), coeff_d(&cfg, &p).unwrap(), coeff_ad(&cfg, &p).unwrap()];
            bundles.extend(PermLabel::all(l).into_iter().map(|lab| coeff_ad_perm(lab, &cfg, &p).unwrap()));
            for b in &bundles {
                let r = residual(b, &cfg, &p, &z, 1e-9).unwrap();
                assert!(r.pass, "L={l} {}: {}", r.tag, r.residual);
            }
        }
    }

    #[test]
    fn tau_numerator_in_n_breaks_type_a() {
        // Replacing the numerator [gamma] of N_i by [tau] gives an O(1) residual.
        let (p, cfg) = setup(2);
        let mut b = coeff_a(&cfg, &p).unwrap();
        let ratio = p.th(p.tau).unwrap() / p.th(p.gamma).unwrap();
        for n in b.n.iter_mut().skip(1) {
            *n *= ratio;
        }
        let r = residual(&b, &cfg, &p, &oracle(&p), 1e-9).unwrap();
        assert!(r.residual > 1e-3, "{}", r.residual);
    }

    #[test]
    fn type_a_invariant_under_relabeling() {
        let (p, cfg) = setup(3);
        let z = oracle(&p);
        let r1 = residual(&coeff_a(&cfg, &p).unwrap(), &cfg, &p, &z, 1e-9).unwrap();
        let perm = SpectralConfig::new(vec![cfg.x[2], cfg.x[0], cfg.x[1]], cfg.x0, cfg.x0bar).unwrap();
        let r2 = residual(&coeff_a(&perm, &p).unwrap(), &perm, &p, &z, 1e-9).unwrap();
        assert!((r1.largest_term - r2.largest_term).abs() < 1e-12 * r1.largest_term);
        assert!(r2.pass);
    }

    #[test]
    fn ad_degenerates_at_coincident_auxiliary_points() {
        // At x0 = x0bar the equation collapses: M0 and every N_i + Nbar_i vanish
        // linearly while the individual terms stay finite.
        let (p, cfg) = setup(2);
        let z = oracle(&p);
        let mut collapse = Vec::new();
        for delta in [1e-2, 1e-3, 1e-4] {
            let near = SpectralConfig::new(cfg.x.clone(), cfg.x0bar + c(delta, 0.0), cfg.x0bar).unwrap();
            let b = coeff_ad(&near, &p).unwrap();
            let r = residual(&b, &near, &p, &z, 1e-9).unwrap();
            assert!(r.pass, "delta {delta}: {}", r.residual);
            let scale = b.n.iter().map(|n| n.norm()).fold(0.0, f64::max);
            let worst = b.n.iter().zip(&b.nbar).map(|(n, nb)| (n + nb).norm()).fold(b.m0.norm(), f64::max);
            collapse.push(worst / scale);
        }
        for w in collapse.windows(2) {
            let ratio = w[1] / w[0];
            assert!((0.05..0.2).contains(&ratio), "coefficients should cancel linearly: {collapse:?}");
        }
    }

    #[test]
    fn cramer_shift_matches_oracle() {
        for l in 1..=2 {
            let (p, cfg) = setup(l);
            let z = oracle(&p);
            let shifted = cramer_shift_a(&cfg, &p, &z).unwrap();
            let direct = z(&cfg.x, p.tau + p.gamma).unwrap();
            assert!((shifted - direct).norm() < 1e-10 * direct.norm(), "L={l}: {shifted} vs {direct}");
        }
    }

    #[test]
    fn cramer_shift_is_symmetric() {
        let (p, cfg) = setup(2);
        let z = oracle(&p);
        let a = cramer_shift_a(&cfg, &p, &z).unwrap();
        let swapped = SpectralConfig::new(vec![cfg.x[1], cfg.x[0]], cfg.x0, cfg.x0bar).unwrap();
        let b = cramer_shift_a(&swapped, &p, &z).unwrap();
        assert!((a - b).norm() < 1e-10 * a.norm());
    }

    #[test]
    fn cramer_ratios_match_oracle() {
        let (p, cfg) = setup(2);
        let z = oracle(&p);
        let zx = z(&cfg.x, p.tau).unwrap();
        let ratios = cramer_ratios(&cfg, &p).unwrap();
        for (set, r) in unknown_sets(&cfg).unwrap().iter().zip(ratios) {
            let expected = z(set, p.tau).unwrap() / zx;
            assert!((r - expected).norm() < 1e-8 * expected.norm());
        }
    }

    #[test]
    fn reduced_systems_hold_with_sixv_oracle() {
        let g = c(0.31, 0.17);
        for l in 1..=3 {
            let (p, cfg) = setup(l);
            let z = sixv_oracle(g, &MU[..l]);
            for kind in [SixVertexKind::A, SixVertexKind::D] {
                for idx in 0..=l {
                    let b = sixv_coeffs(kind, idx, cfg.x0, &cfg.x, g, &MU[..l]).unwrap();
                    let r = residual(&b, &cfg, &p, &z, 1e-9).unwrap();
                    assert!(r.pass, "L={l} {}: {}", r.tag, r.residual);
                }
            }
        }
    }

    #[test]
    fn sigma_diagonal_at_one_site() {
        let g = c(0.31, 0.17);
        let (x0, x1, m) = (c(0.4, 0.1), c(-0.3, 0.2), c(0.1, -0.05));
        let b = sixv_coeffs(SixVertexKind::A, 1, x0, &[x1], g, &[m]).unwrap();
        let w = |z: Scalar| sixv_weights(z, g);
        let expected = w(x1 - m).b - w(x1 - m).a * w(x0 - x1).a / w(x0 - x1).b;
        assert!((b.n[1] - expected).norm() < 1e-15);
    }
}
