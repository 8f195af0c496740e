//! Determinant representations: the elliptic matrix `Omega` with its column
//! variants, the companion at `tau = -gamma`, and the six-vertex `V`/`W` forms.

use crate::error::{Error, Result};
use crate::funceq::{pair_index, pairs, sixv_entry, system_dimension, SixVertexKind};
use crate::model::{sixv_weights, ModelParams, SpectralConfig};
use crate::numerics::{det_or_zero, lu_determinant, product, real, DenseMatrix, LuDecomposition, Scalar};
use crate::report::{ParamSnapshot, ResidualReport};

/// Which column of `Omega` is replaced (1-based site indices).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OmegaVariant {
    Base,
    /// Represents `Z(X_i^0)`.
    Zero(usize),
    /// Represents `Z(X_i^{0bar})`.
    ZeroBar(usize),
    /// Represents `Z(X_{ij}^{0,0bar})`, `i < j`.
    Pair(usize, usize),
}

impl OmegaVariant {
    /// Every variant for `l` sites.
    pub fn all(l: usize) -> Vec<OmegaVariant> {
        let mut out = vec![OmegaVariant::Base];
        out.extend((1..=l).map(OmegaVariant::Zero));
        out.extend((1..=l).map(OmegaVariant::ZeroBar));
        out.extend(pairs(l).into_iter().map(|(i, j)| OmegaVariant::Pair(i, j)));
        out
    }

    /// Column replaced by this variant, if any.
    pub fn column(&self, l: usize) -> Result<Option<usize>> {
        let npairs = l * (l - 1) / 2;
        let bad = || Error::IndexOutOfDomain(format!("variant {self:?} for {l} sites"));
        match *self {
            OmegaVariant::Base => Ok(None),
            OmegaVariant::Zero(i) if (1..=l).contains(&i) => Ok(Some(i - 1)),
            OmegaVariant::ZeroBar(i) if (1..=l).contains(&i) => Ok(Some(l + npairs + i - 1)),
            OmegaVariant::Pair(i, j) => Ok(Some(l + pair_index(i, j, l).map_err(|_| bad())? - 1)),
            _ => Err(bad()),
        }
    }

    /// Spectral set whose partition function this variant represents.
    pub fn spectral_set(&self, cfg: &SpectralConfig) -> Result<Vec<Scalar>> {
        match *self {
            OmegaVariant::Base => Ok(cfg.x.clone()),
            OmegaVariant::Zero(i) => cfg.with_x0_at(i),
            OmegaVariant::ZeroBar(i) => cfg.with_x0bar_at(i),
            OmegaVariant::Pair(i, j) => cfg.with_pair_at(i, j),
        }
    }
}

impl std::fmt::Display for OmegaVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OmegaVariant::Base => write!(f, "Omega"),
            OmegaVariant::Zero(i) => write!(f, "Omega_{i}"),
            OmegaVariant::ZeroBar(i) => write!(f, "Omegabar_{i}"),
            OmegaVariant::Pair(i, j) => write!(f, "Omegatilde_{i}{j}"),
        }
    }
}

/// The blocks of `Omega`, the assembled matrix and its `tau = -gamma` companion.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaAssembly {
    pub variant: OmegaVariant,
    pub f: DenseMatrix,
    pub i: DenseMatrix,
    pub g: DenseMatrix,
    pub ibar: DenseMatrix,
    pub k: DenseMatrix,
    pub j: DenseMatrix,
    pub fbar: DenseMatrix,
    pub jbar: DenseMatrix,
    pub gbar: DenseMatrix,
    pub matrix: DenseMatrix,
    pub companion: DenseMatrix,
}

/// Entry formulas at a fixed `tau`. Sets are written as the original `X`
/// with some sites removed and some of `x_0`, `x_0bar` added.
struct Entries<'a> {
    p: &'a ModelParams,
    tau: Scalar,
    x0: Scalar,
    xb: Scalar,
    xs: &'a [Scalar],
}

#[derive(Clone, Copy)]
enum Extra {
    Zero,
    Bar,
}

impl Entries<'_> {
    fn t(&self, z: Scalar) -> Result<Scalar> {
        self.p.th(z)
    }
    fn d(&self, z: Scalar) -> Result<Scalar> {
        self.p.th_den(z)
    }
    fn x(&self, a: usize) -> Scalar {
        self.xs[a - 1]
    }
    fn set(&self, removed: &[usize], added: &[Extra]) -> Vec<Scalar> {
        let mut s: Vec<Scalar> = (1..=self.xs.len()).filter(|k| !removed.contains(k)).map(|k| self.x(k)).collect();
        s.extend(added.iter().map(|e| match e {
            Extra::Zero => self.x0,
            Extra::Bar => self.xb,
        }));
        s
    }
    /// `prod_{z in set} [y - z + gamma]/[y - z]`.
    fn pxg(&self, y: Scalar, removed: &[usize], added: &[Extra]) -> Result<Scalar> {
        let g = self.p.gamma;
        self.set(removed, added).into_iter().map(|z| Ok(self.t(y - z + g)? / self.d(y - z)?)).collect::<Result<Vec<_>>>().map(product)
    }
    fn pmu(&self, y: Scalar) -> Result<Scalar> {
        self.p.mu_product(y, real(0.0))
    }
    /// `prod_k [y - mu_k][u - mu_k + gamma]/[w - mu_k + gamma]`.
    fn rat(&self, y: Scalar, u: Scalar, w: Scalar) -> Result<Scalar> {
        let g = self.p.gamma;
        self.p.mu.iter().map(|&m| Ok(self.t(y - m)? * self.t(u - m + g)? / self.d(w - m + g)?)).collect::<Result<Vec<_>>>().map(product)
    }
    /// `[gamma][u - w + tau + (L+1) gamma] / ([tau + (L+1) gamma][u - w])`.
    fn cf(&self, u: Scalar, w: Scalar) -> Result<Scalar> {
        let g = self.p.gamma;
        let shift = self.tau + (self.xs.len() as f64 + 1.0) * g;
        Ok(self.t(g)? * self.t(u - w + shift)? / (self.d(shift)? * self.d(u - w)?))
    }
    /// `[y - z + gamma]/[y - z]`.
    fn q(&self, y: Scalar, z: Scalar) -> Result<Scalar> {
        Ok(self.t(y - z + self.p.gamma)? / self.d(y - z)?)
    }

    fn f(&self, a: usize, b: usize) -> Result<Scalar> {
        let (x0, xb) = (self.x0, self.xb);
        if a == b {
            let xa = self.x(a);
            return Ok(self.q(xa, x0)? * self.pxg(xa, &[a], &[])? * self.rat(xa, xb, xa)?
                - self.q(xb, x0)? * self.pxg(xb, &[a], &[])? * self.pmu(xb)?);
        }
        let (xa, xbb) = (self.x(a), self.x(b));
        Ok(-self.cf(xa, xbb)? * self.rat(xbb, xb, xa)? * self.pxg(xbb, &[a, b], &[Extra::Zero])?)
    }
    fn fbar(&self, a: usize, b: usize) -> Result<Scalar> {
        if a != b {
            return Ok(real(0.0));
        }
        Ok(-self.cf(self.x0, self.xb)? * self.rat(self.xb, self.x(a), self.x0)? * self.pxg(self.xb, &[a], &[])?)
    }
    fn g(&self, a: usize, b: usize) -> Result<Scalar> {
        if a != b {
            return Ok(real(0.0));
        }
        Ok(self.cf(self.xb, self.x0)? * self.pmu(self.x0)? * self.pxg(self.x0, &[a], &[])?)
    }
    fn gbar(&self, a: usize, b: usize) -> Result<Scalar> {
        let (x0, xb) = (self.x0, self.xb);
        if a == b {
            let xa = self.x(a);
            return Ok(self.q(x0, xb)? * self.pxg(x0, &[a], &[])? * self.rat(x0, xa, x0)?
                - self.q(xa, xb)? * self.pxg(xa, &[a], &[])? * self.pmu(xa)?);
        }
        let (xa, xbb) = (self.x(a), self.x(b));
        Ok(self.cf(xa, xbb)? * self.pmu(xbb)? * self.pxg(xbb, &[a, b], &[Extra::Bar])?)
    }
    fn i(&self, a: usize, r: usize, s: usize) -> Result<Scalar> {
        let other = if a == s {
            r
        } else if a == r {
            s
        } else {
            return Ok(real(0.0));
        };
        let xo = self.x(other);
        Ok(self.cf(self.xb, xo)? * self.pmu(xo)? * self.pxg(xo, &[r, s], &[Extra::Zero])?)
    }
    fn jbar(&self, a: usize, r: usize, s: usize) -> Result<Scalar> {
        let other = if a == s {
            r
        } else if a == r {
            s
        } else {
            return Ok(real(0.0));
        };
        let xo = self.x(other);
        Ok(-self.cf(self.x0, xo)? * self.rat(xo, self.x(a), self.x0)? * self.pxg(xo, &[r, s], &[Extra::Bar])?)
    }
    fn ibar(&self, l: usize, m: usize, b: usize) -> Result<Scalar> {
        let xb = self.xb;
        if b == l {
            Ok(self.cf(self.x(m), xb)? * self.pmu(xb)? * self.pxg(xb, &[l, m], &[Extra::Zero])?)
        } else if b == m {
            Ok(-self.cf(self.x(l), xb)? * self.rat(xb, self.x(m), self.x(l))? * self.pxg(xb, &[l, m], &[Extra::Zero])?)
        } else {
            Ok(real(0.0))
        }
    }
    fn j(&self, l: usize, m: usize, b: usize) -> Result<Scalar> {
        let x0 = self.x0;
        if b == l {
            Ok(self.cf(self.x(m), x0)? * self.pmu(x0)? * self.pxg(x0, &[l, m], &[Extra::Bar])?)
        } else if b == m {
            Ok(-self.cf(self.x(l), x0)? * self.rat(x0, self.x(m), self.x(l))? * self.pxg(x0, &[l, m], &[Extra::Bar])?)
        } else {
            Ok(real(0.0))
        }
    }
    fn k(&self, l: usize, m: usize, r: usize, s: usize) -> Result<Scalar> {
        let (x0, xb) = (self.x0, self.xb);
        let (xl, xm) = (self.x(l), self.x(m));
        let both = [Extra::Zero, Extra::Bar];
        if l == r && m == s {
            return Ok(self.q(xl, x0)? * self.q(xl, xb)? * self.pxg(xl, &[l, m], &[])? * self.rat(xl, xm, xl)?
                - self.q(xm, x0)? * self.q(xm, xb)? * self.pxg(xm, &[l, m], &[])? * self.pmu(xm)?);
        }
        if l == r {
            let xs = self.x(s);
            return Ok(self.cf(xm, xs)? * self.pmu(xs)? * self.pxg(xs, &[l, m, s], &both)?);
        }
        if m == r && l != s {
            let xs = self.x(s);
            return Ok(-self.cf(xl, xs)? * self.rat(xs, xm, xl)? * self.pxg(xs, &[l, m, s], &both)?);
        }
        if l == s {
            let xr = self.x(r);
            return Ok(self.cf(xm, xr)? * self.pmu(xr)? * self.pxg(xr, &[l, m, r], &both)?);
        }
        if m == s {
            let xr = self.x(r);
            return Ok(-self.cf(xl, xr)? * self.rat(xr, xm, xl)? * self.pxg(xr, &[l, m, r], &both)?);
        }
        Ok(real(0.0))
    }
    /// Replacement column entry in row `a` of the upper block.
    fn col_zero(&self, a: usize) -> Result<Scalar> {
        let xa = self.x(a);
        Ok(self.cf(xa, self.x0)? * self.rat(self.x0, self.xb, xa)? * self.pxg(self.x0, &[a], &[])?)
    }
    /// Replacement column entry in row `a` of the lower block.
    fn col_bar(&self, a: usize) -> Result<Scalar> {
        let xa = self.x(a);
        Ok(-self.cf(xa, self.xb)? * self.pmu(self.xb)? * self.pxg(self.xb, &[a], &[])?)
    }
}

struct Blocks {
    f: DenseMatrix,
    i: DenseMatrix,
    g: DenseMatrix,
    ibar: DenseMatrix,
    k: DenseMatrix,
    j: DenseMatrix,
    fbar: DenseMatrix,
    jbar: DenseMatrix,
    gbar: DenseMatrix,
    matrix: DenseMatrix,
}

fn fill(rows: usize, cols: usize, what: &str, mut f: impl FnMut(usize, usize) -> Result<Scalar>) -> Result<DenseMatrix> {
    let mut m = DenseMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m[(r, c)] = f(r, c).map_err(|e| e.in_context(&format!("{what} entry ({},{})", r + 1, c + 1)))?;
        }
    }
    Ok(m)
}

fn build(variant: OmegaVariant, cfg: &SpectralConfig, params: &ModelParams, tau: Scalar) -> Result<Blocks> {
    let l = cfg.sites();
    let e = Entries { p: params, tau, x0: cfg.x0, xb: cfg.x0bar, xs: &cfg.x };
    let pr = pairs(l);
    let np = pr.len();
    let f = fill(l, l, "F", |a, b| e.f(a + 1, b + 1))?;
    let g = fill(l, l, "G", |a, b| e.g(a + 1, b + 1))?;
    let fbar = fill(l, l, "Fbar", |a, b| e.fbar(a + 1, b + 1))?;
    let gbar = fill(l, l, "Gbar", |a, b| e.gbar(a + 1, b + 1))?;
    let i = fill(l, np, "I", |a, n| e.i(a + 1, pr[n].0, pr[n].1))?;
    let jbar = fill(l, np, "Jbar", |a, n| e.jbar(a + 1, pr[n].0, pr[n].1))?;
    let ibar = fill(np, l, "Ibar", |n, b| e.ibar(pr[n].0, pr[n].1, b + 1))?;
    let j = fill(np, l, "J", |n, b| e.j(pr[n].0, pr[n].1, b + 1))?;
    let k = fill(np, np, "K", |n, q| e.k(pr[n].0, pr[n].1, pr[q].0, pr[q].1))?;

    let d = system_dimension(l);
    let mut matrix = DenseMatrix::zeros(d, d);
    let blocks: [(&DenseMatrix, usize, usize); 9] = [
        (&f, 0, 0),
        (&i, 0, l),
        (&g, 0, l + np),
        (&ibar, l, 0),
        (&k, l, l),
        (&j, l, l + np),
        (&fbar, l + np, 0),
        (&jbar, l + np, l),
        (&gbar, l + np, l + np),
    ];
    for (blk, r0, c0) in blocks {
        for r in 0..blk.rows() {
            for c in 0..blk.cols() {
                matrix[(r0 + r, c0 + c)] = blk[(r, c)];
            }
        }
    }
    if let Some(col) = variant.column(l)? {
        let mut values = vec![real(0.0); d];
        for a in 1..=l {
            values[a - 1] = e.col_zero(a).map_err(|e| e.in_context(&format!("replacement entry ({a},{})", col + 1)))?;
            values[l + np + a - 1] = e.col_bar(a).map_err(|e| e.in_context(&format!("replacement entry ({},{})", l + np + a, col + 1)))?;
        }
        matrix = matrix.with_column(col, &values)?;
    }
    Ok(Blocks { f, i, g, ibar, k, j, fbar, jbar, gbar, matrix })
}

/// Builds `Omega` (or a variant) and the same variant re-evaluated at `tau = -gamma`.
pub fn assemble_omega(variant: OmegaVariant, cfg: &SpectralConfig, params: &ModelParams) -> Result<OmegaAssembly> {
    if cfg.sites() != params.sites() {
        return Err(Error::DimensionMismatch { expected: format!("{} spectral points", params.sites()), found: cfg.sites().to_string() });
    }
    let b = build(variant, cfg, params, params.tau)?;
    let companion = build(variant, cfg, params, -params.gamma).map_err(|e| e.in_context("companion at tau = -gamma"))?.matrix;
    Ok(OmegaAssembly {
        variant,
        f: b.f,
        i: b.i,
        g: b.g,
        ibar: b.ibar,
        k: b.k,
        j: b.j,
        fbar: b.fbar,
        jbar: b.jbar,
        gbar: b.gbar,
        matrix: b.matrix,
        companion,
    })
}

/// Scalar prefactor of the determinant formula for spectral set `set`; the
/// sum in the last factor runs over the original points `x`.
pub fn z_det_prefactor(set: &[Scalar], x: &[Scalar], params: &ModelParams) -> Result<Scalar> {
    let l = params.sites();
    let lf = l as f64;
    let (t, g) = (params.tau, params.gamma);
    let d_l = system_dimension(l) as i32;
    let d_lm1 = ((l + 1) * l / 2) as i32 - 1;
    let th = |z| params.th(z);
    let den = |z| params.th_den(z);
    let sign = if l.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut out =
        real(sign) * (th((lf + 1.0) * g)? / den(t + (lf + 2.0) * g)?).powi(d_lm1) * (th(t + (lf + 1.0) * g)? / den(lf * g)?).powi(d_l);
    for &y in set {
        out *= params.mu_product(y, real(0.0))?;
    }
    for k in 1..=l {
        let kf = k as f64;
        out *= th(kf * g)? / den(t + kf * g)?;
    }
    let s: Scalar = x.iter().zip(&params.mu).map(|(xl, ml)| xl - ml).sum();
    out *= th(s + (lf + 1.0) * g)? / den(s + t + (lf + 2.0) * g)?;
    Ok(out)
}

/// Partition function of the variant's spectral set from the determinant formula.
pub fn z_det(variant: OmegaVariant, cfg: &SpectralConfig, params: &ModelParams) -> Result<Scalar> {
    let asm = assemble_omega(variant, cfg, params)?;
    let num = lu_determinant(&asm.matrix)?.value;
    let den = lu_determinant(&asm.companion).map_err(|e| e.in_context("companion determinant"))?.value;
    let set = variant.spectral_set(cfg)?;
    Ok(z_det_prefactor(&set, &cfg.x, params)? * num / den)
}

/// Relative errors of the `tau = -gamma` determinant ratios against their
/// closed forms, one per non-base variant, in [`OmegaVariant::all`] order.
pub fn tau_special_ratios(cfg: &SpectralConfig, params: &ModelParams, tolerance: f64) -> Result<Vec<ResidualReport>> {
    let at = params.with_tau(-params.gamma);
    let l = cfg.sites();
    let base = build(OmegaVariant::Base, cfg, &at, at.tau)?.matrix;
    // Every variant swaps in the same column, so one refined solve gives all
    // determinant ratios by Cramer's rule.
    let probe = build(OmegaVariant::Zero(1), cfg, &at, at.tau)?.matrix;
    let rhs: Vec<Scalar> = (0..probe.rows()).map(|r| probe[(r, 0)]).collect();
    let u = LuDecomposition::factor(&base)?.solve_refined(&base, &rhs, 2)?;
    let pmu = |y: Scalar| at.mu_product(y, real(0.0));
    let mut out = Vec::new();
    for variant in OmegaVariant::all(l).into_iter().skip(1) {
        let col = variant.column(l)?.expect("non-base variant replaces a column");
        let expected = match variant {
            OmegaVariant::Zero(i) => pmu(cfg.x0)? / pmu(cfg.x[i - 1])?,
            OmegaVariant::ZeroBar(i) => pmu(cfg.x0bar)? / pmu(cfg.x[i - 1])?,
            OmegaVariant::Pair(i, j) => pmu(cfg.x0)? * pmu(cfg.x0bar)? / (pmu(cfg.x[i - 1])? * pmu(cfg.x[j - 1])?),
            OmegaVariant::Base => unreachable!(),
        };
        let err = (u[col] - expected).norm() / expected.norm();
        out.push(ResidualReport::from_residual(format!("taugam-{variant}"), ParamSnapshot::new(&at, cfg), err, expected.norm(), tolerance));
    }
    Ok(out)
}

/// Six-vertex determinant variant: base matrix or column `i` replaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SixVertexVariant {
    Base,
    Column(usize),
}

/// `V` / `V_i` (kind A) or `W` / `W_i` (kind D).
#[derive(Debug, Clone, PartialEq)]
pub struct SixVertexDetMatrices {
    pub kind: SixVertexKind,
    pub variant: SixVertexVariant,
    pub matrix: DenseMatrix,
}

/// Entry `(alpha, beta)` is the coefficient with equation index `alpha` at
/// position `beta`; the replaced column holds minus the auxiliary coefficient.
pub fn sixv_matrix(
    kind: SixVertexKind,
    variant: SixVertexVariant,
    x_ext: Scalar,
    x: &[Scalar],
    gamma: Scalar,
    mu: &[Scalar],
) -> Result<SixVertexDetMatrices> {
    let l = x.len();
    if mu.len() != l {
        return Err(Error::DimensionMismatch { expected: format!("{l} inhomogeneities"), found: mu.len().to_string() });
    }
    if let SixVertexVariant::Column(i) = variant {
        if !(1..=l).contains(&i) {
            return Err(Error::IndexOutOfDomain(format!("column {i} for {l} sites")));
        }
    }
    let mut xx = vec![x_ext];
    xx.extend_from_slice(x);
    for (a, &u) in xx.iter().enumerate() {
        if xx[..a].contains(&u) {
            return Err(Error::DegeneratePoint(format!("coincident spectral points at position {a}")));
        }
    }
    let matrix = fill(l, l, "six-vertex", |alpha, beta| match variant {
        SixVertexVariant::Column(i) if beta + 1 == i => Ok(-sixv_entry(kind, 0, alpha + 1, &xx, gamma, mu)?),
        _ => sixv_entry(kind, beta + 1, alpha + 1, &xx, gamma, mu),
    })?;
    Ok(SixVertexDetMatrices { kind, variant, matrix })
}

/// Six-vertex partition function of `X` (base) or of `X` with `x_i` replaced
/// by `x_ext` (column variant) from the determinant formula.
pub fn sixv_z_det(
    kind: SixVertexKind,
    variant: SixVertexVariant,
    x_ext: Scalar,
    x: &[Scalar],
    gamma: Scalar,
    mu: &[Scalar],
) -> Result<Scalar> {
    let m = sixv_matrix(kind, variant, x_ext, x, gamma, mu)?;
    let det = lu_determinant(&m.matrix).map(|d| d.value).or_else(|e| match e {
        Error::Singular { .. } => Ok(real(0.0)),
        other => Err(other),
    })?;
    let w = |z: Scalar| sixv_weights(z, gamma);
    let pref = match kind {
        SixVertexKind::A => product(x.iter().map(|&xk| w(xk - x_ext).b)) / product(mu.iter().map(|&m| w(x_ext - m).a)),
        SixVertexKind::D => product(x.iter().map(|&xk| w(x_ext - xk).b)) / product(mu.iter().map(|&m| w(x_ext - m).b)),
    };
    if !(pref.re.is_finite() && pref.im.is_finite()) {
        return Err(Error::NonFinite("six-vertex prefactor"));
    }
    Ok(det * pref)
}

/// `|det M| / prod_r |row r|` for the `(L+1) x (L+1)` matrix of all reduced
/// coefficients, `M[alpha][i] = coefficient i of equation alpha`, `0 <= alpha, i <= L`.
/// The system has the non-trivial solution `(Z(X), Z(X_1^0), ..)`, so this vanishes.
pub fn sixv_null_determinant(kind: SixVertexKind, x_ext: Scalar, x: &[Scalar], gamma: Scalar, mu: &[Scalar]) -> Result<f64> {
    let l = x.len();
    let mut xx = vec![x_ext];
    xx.extend_from_slice(x);
    let m = fill(l + 1, l + 1, "reduced system", |alpha, i| sixv_entry(kind, i, alpha, &xx, gamma, mu))?;
    let det = det_or_zero(&m)?;
    let norms: f64 = (0..=l).map(|r| m.row_norm(r)).product();
    if norms == 0.0 {
        return Err(Error::DegeneratePoint("reduced system has a zero row".into()));
    }
    Ok(det.norm() / norms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funceq::permuted_system;
    use crate::monodromy::{partition_function, sixv_partition_function};
    use crate::theta::ThetaContext;

    fn c(re: f64, im: f64) -> Scalar {
        Scalar::new(re, im)
    }

    const MU: [Scalar; 3] = [Scalar::new(0.12, 0.05), Scalar::new(-0.37, 0.21), Scalar::new(0.44, -0.18)];
    const XS: [Scalar; 3] = [Scalar::new(0.53, 0.11), Scalar::new(-0.21, 0.29), Scalar::new(0.81, -0.26)];
    const G: Scalar = Scalar::new(0.31, 0.17);

    fn setup(l: usize) -> (ModelParams, SpectralConfig) {
        let p = ModelParams::new(G, c(0.23, -0.41), MU[..l].to_vec(), ThetaContext::new(0.2).unwrap()).unwrap();
        let cfg = SpectralConfig::new(XS[..l].to_vec(), c(0.67, -0.14), c(-0.43, 0.22)).unwrap();
        (p, cfg)
    }

    fn rel(a: Scalar, b: Scalar) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn single_site_is_two_by_two() {
        let (p, cfg) = setup(1);
        let asm = assemble_omega(OmegaVariant::Base, &cfg, &p).unwrap();
        assert_eq!((asm.matrix.rows(), asm.matrix.cols()), (2, 2));
        assert_eq!(asm.k.rows(), 0);
        assert_eq!(asm.matrix[(0, 0)], asm.f[(0, 0)]);
        assert_eq!(asm.matrix[(0, 1)], asm.g[(0, 0)]);
        assert_eq!(asm.matrix[(1, 0)], asm.fbar[(0, 0)]);
        assert_eq!(asm.matrix[(1, 1)], asm.gbar[(0, 0)]);
    }

    #[test]
    fn dimension_is_triangular() {
        for l in 1..=3 {
            let (p, cfg) = setup(l);
            assert_eq!(assemble_omega(OmegaVariant::Base, &cfg, &p).unwrap().matrix.rows(), l * (l + 3) / 2);
        }
    }

    #[test]
    fn structural_zeros_are_exact() {
        let (p, cfg) = setup(3);
        let asm = assemble_omega(OmegaVariant::Base, &cfg, &p).unwrap();
        let zero = c(0.0, 0.0);
        for (n, (r, s)) in pairs(3).into_iter().enumerate() {
            for a in 1..=3 {
                let touches = a == r || a == s;
                for blk in [&asm.i, &asm.jbar] {
                    assert_eq!(blk[(a - 1, n)] == zero, !touches);
                }
                for blk in [&asm.ibar, &asm.j] {
                    assert_eq!(blk[(n, a - 1)] == zero, !touches);
                }
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    assert_eq!(asm.fbar[(a, b)], zero);
                    assert_eq!(asm.g[(a, b)], zero);
                }
            }
        }
    }

    #[test]
    fn k_diagonal_is_direct_formula() {
        let (p, cfg) = setup(2);
        let asm = assemble_omega(OmegaVariant::Base, &cfg, &p).unwrap();
        let th = |z| p.th(z).unwrap();
        let (x0, xb, x1, x2, g) = (cfg.x0, cfg.x0bar, cfg.x[0], cfg.x[1], p.gamma);
        let q = |y: Scalar, z: Scalar| th(y - z + g) / th(y - z);
        let pm = |y: Scalar| MU[..2].iter().map(|&m| th(y - m)).product::<Scalar>();
        let rat = MU[..2].iter().map(|&m| th(x1 - m) * th(x2 - m + g) / th(x1 - m + g)).product::<Scalar>();
        let expected = q(x1, x0) * q(x1, xb) * rat - q(x2, x0) * q(x2, xb) * pm(x2);
        assert!(rel(asm.k[(0, 0)], expected) < 1e-14);
    }

    #[test]
    fn entry_tables_match_permuted_equations() {
        for l in 1..=3 {
            let (p, cfg) = setup(l);
            let asm = assemble_omega(OmegaVariant::Base, &cfg, &p).unwrap();
            let (omega, rhs) = permuted_system(&cfg, &p).unwrap();
            assert!(asm.matrix.relative_distance(&omega) < 1e-13, "L={l}");
            let col = OmegaVariant::Zero(1).column(l).unwrap().unwrap();
            let variant = assemble_omega(OmegaVariant::Zero(1), &cfg, &p).unwrap();
            assert!(variant.matrix.relative_distance(&omega.with_column(col, &rhs).unwrap()) < 1e-13);
        }
    }

    #[test]
    fn determinant_formula_matches_oracle() {
        for l in 1..=2 {
            let (p, cfg) = setup(l);
            for v in OmegaVariant::all(l) {
                let z = z_det(v, &cfg, &p).unwrap();
                let oracle = partition_function(&v.spectral_set(&cfg).unwrap(), &p).unwrap();
                assert!(rel(z, oracle) < 1e-8, "L={l} {v}: {z} vs {oracle}");
            }
        }
    }

    #[test]
    fn auxiliary_points_do_not_matter() {
        let (p, cfg) = setup(2);
        let z0 = z_det(OmegaVariant::Base, &cfg, &p).unwrap();
        let moved = SpectralConfig::new(cfg.x.clone(), c(-0.15, 0.41), c(0.29, -0.33)).unwrap();
        assert!(rel(z_det(OmegaVariant::Base, &moved, &p).unwrap(), z0) < 1e-8);
        let special = SpectralConfig::new(cfg.x.clone(), MU[0] - 2.0 * G, MU[0] - G).unwrap();
        assert!(rel(z_det(OmegaVariant::Base, &special, &p).unwrap(), z0) < 1e-8);
    }

    #[test]
    fn tau_special_ratios_hold() {
        for l in 1..=3 {
            let (p, cfg) = setup(l);
            for r in tau_special_ratios(&cfg, &p, 1e-9).unwrap() {
                assert!(r.pass, "L={l} {}: {}", r.tag, r.residual);
            }
        }
    }

    #[test]
    fn variant_out_of_domain() {
        let (p, cfg) = setup(2);
        assert!(assemble_omega(OmegaVariant::Zero(3), &cfg, &p).is_err());
        assert!(assemble_omega(OmegaVariant::Pair(2, 1), &cfg, &p).is_err());
    }

    #[test]
    fn six_vertex_single_site_entry() {
        let (x0, x1, m) = (c(0.4, 0.1), c(-0.3, 0.2), c(0.1, -0.05));
        let v = sixv_matrix(SixVertexKind::A, SixVertexVariant::Base, x0, &[x1], G, &[m]).unwrap();
        let w = |z: Scalar| sixv_weights(z, G);
        let expected = w(x1 - m).b - w(x1 - m).a * w(x0 - x1).a / w(x0 - x1).b;
        assert!(rel(v.matrix[(0, 0)], expected) < 1e-15);
        let z = sixv_z_det(SixVertexKind::A, SixVertexVariant::Base, x0, &[x1], G, &[m]).unwrap();
        assert!(rel(z, sixv_partition_function(&[x1], G, &[m]).unwrap()) < 1e-12);
    }

    #[test]
    fn six_vertex_formulas_match_oracle() {
        let x0 = c(0.67, -0.14);
        for l in 1..=3 {
            let (x, mu) = (&XS[..l], &MU[..l]);
            for kind in [SixVertexKind::A, SixVertexKind::D] {
                let z = sixv_z_det(kind, SixVertexVariant::Base, x0, x, G, mu).unwrap();
                assert!(rel(z, sixv_partition_function(x, G, mu).unwrap()) < 1e-12, "L={l} {kind:?}");
                for i in 1..=l {
                    let mut y = x.to_vec();
                    y[i - 1] = x0;
                    let z = sixv_z_det(kind, SixVertexVariant::Column(i), x0, x, G, mu).unwrap();
                    assert!(rel(z, sixv_partition_function(&y, G, mu).unwrap()) < 1e-12, "L={l} {kind:?} col {i}");
                }
            }
        }
    }

    #[test]
    fn six_vertex_variant_differs_in_one_column() {
        let x0 = c(0.67, -0.14);
        let base = sixv_matrix(SixVertexKind::D, SixVertexVariant::Base, x0, &XS, G, &MU).unwrap().matrix;
        let var = sixv_matrix(SixVertexKind::D, SixVertexVariant::Column(2), x0, &XS, G, &MU).unwrap().matrix;
        for r in 0..3 {
            for col in [0, 2] {
                assert_eq!(base[(r, col)], var[(r, col)]);
            }
        }
    }

    #[test]
    fn six_vertex_rejects_coincident_points() {
        assert!(sixv_matrix(SixVertexKind::A, SixVertexVariant::Base, XS[0], &XS, G, &MU).is_err());
    }

    #[test]
    fn reduced_systems_are_singular() {
        let x0 = c(0.67, -0.14);
        for l in 1..=3 {
            for kind in [SixVertexKind::A, SixVertexKind::D] {
                let r = sixv_null_determinant(kind, x0, &XS[..l], G, &MU[..l]).unwrap();
                assert!(r < 1e-9, "L={l} {kind:?}: {r}");
            }
        }
    }
}
