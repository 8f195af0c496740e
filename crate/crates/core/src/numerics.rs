//! Dense complex linear algebra: matrix products, LU with partial pivoting,
//! determinants and linear solves.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex scalar used for every spectral, dynamical and theta value.
pub type Scalar = Complex64;

/// Absolute pivot magnitude below which a factorization is declared singular.
pub const DEFAULT_PIVOT_FLOOR: f64 = 1e-300;

/// Relative pivot size (against the largest input entry) that raises the growth warning.
pub const GROWTH_WARNING_RATIO: f64 = 1e-13;

/// Shorthand for a real-valued [`Scalar`].
pub fn real(re: f64) -> Scalar {
    Scalar::new(re, 0.0)
}

/// Product of an iterator of scalars (1 for an empty iterator).
pub fn product<I: IntoIterator<Item = Scalar>>(it: I) -> Scalar {
    it.into_iter().fold(Scalar::new(1.0, 0.0), |acc, z| acc * z)
}

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Scalar::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { real(1.0) } else { real(0.0) })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Scalar) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Scalar>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{} entries", rows * cols),
                found: format!("{} entries", data.len()),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<Scalar>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                expected: format!("rows of length {cols}"),
                found: format!("row of length {}", bad.len()),
            });
        }
        Ok(Self { rows: rows.len(), cols, data: rows.concat() })
    }

    /// Column vector.
    pub fn column(entries: &[Scalar]) -> Self {
        Self { rows: entries.len(), cols: 1, data: entries.to_vec() }
    }

    /// Diagonal matrix.
    pub fn diagonal(entries: &[Scalar]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |i, j| if i == j { entries[i] } else { real(0.0) })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Scalar] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: Scalar) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    /// Entrywise sum; panics on shape mismatch, which is a programming error.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch in add");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(real(-1.0)))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: format!("{} rows on the right factor", self.cols),
                found: format!("{} rows", other.rows),
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Scalar::new(0.0, 0.0) {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Scalar]) -> Result<Vec<Scalar>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: format!("vector of length {}", self.cols),
                found: format!("length {}", v.len()),
            });
        }
        Ok((0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect())
    }

    /// Row vector times matrix.
    pub fn apply_left(&self, v: &[Scalar]) -> Result<Vec<Scalar>> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: format!("vector of length {}", self.rows),
                found: format!("length {}", v.len()),
            });
        }
        let mut out = vec![real(0.0); self.cols];
        for (i, vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += vi * a;
            }
        }
        Ok(out)
    }

    /// Copy with column `col` replaced by `values`.
    pub fn with_column(&self, col: usize, values: &[Scalar]) -> Result<Self> {
        if values.len() != self.rows || col >= self.cols {
            return Err(Error::DimensionMismatch {
                expected: format!("column < {} of length {}", self.cols, self.rows),
                found: format!("column {col} of length {}", values.len()),
            });
        }
        let mut out = self.clone();
        for (i, v) in values.iter().enumerate() {
            out[(i, col)] = *v;
        }
        Ok(out)
    }

    /// Submatrix with the given row and column removed.
    pub fn minor(&self, row: usize, col: usize) -> Self {
        let keep_r: Vec<usize> = (0..self.rows).filter(|&r| r != row).collect();
        let keep_c: Vec<usize> = (0..self.cols).filter(|&c| c != col).collect();
        Self::from_fn(keep_r.len(), keep_c.len(), |i, j| self[(keep_r[i], keep_c[j])])
    }

    /// Largest entry modulus (0 for an empty matrix).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Euclidean norm of row `i`.
    pub fn row_norm(&self, i: usize) -> f64 {
        self.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest entrywise difference relative to the largest entry of `self`.
    pub fn relative_distance(&self, other: &Self) -> f64 {
        let scale = self.max_abs().max(other.max_abs());
        if scale == 0.0 {
            return 0.0;
        }
        self.sub(other).max_abs() / scale
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = Scalar;
    fn index(&self, (i, j): (usize, usize)) -> &Scalar {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Scalar {
        &mut self.data[i * self.cols + j]
    }
}

/// Pivoting options for [`LuDecomposition::factor_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotPolicy {
    pub floor: f64,
}

impl Default for PivotPolicy {
    fn default() -> Self {
        Self { floor: DEFAULT_PIVOT_FLOOR }
    }
}

/// PA = LU with unit lower-triangular L packed below the diagonal.
#[derive(Debug, Clone)]
pub struct LuDecomposition {
    lu: DenseMatrix,
    perm: Vec<usize>,
    sign: f64,
    condition: f64,
    growth_warning: bool,
}

impl LuDecomposition {
    pub fn factor(m: &DenseMatrix) -> Result<Self> {
        Self::factor_with(m, PivotPolicy::default())
    }

    pub fn factor_with(m: &DenseMatrix, policy: PivotPolicy) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NonSquare { rows: m.rows(), cols: m.cols() });
        }
        if !m.is_finite() {
            return Err(Error::NonFinite("matrix entry"));
        }
        let n = m.rows();
        let scale = m.max_abs();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let (p, pmag) = (k..n).map(|i| (i, lu[(i, k)].norm())).fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmag < policy.floor {
                return Err(Error::Singular { column: k, pivot: pmag });
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor == Scalar::new(0.0, 0.0) {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= factor * u;
                }
            }
        }
        let pivots: Vec<f64> = (0..n).map(|k| lu[(k, k)].norm()).collect();
        let (pmin, pmax) = pivots.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &p| (lo.min(p), hi.max(p)));
        let condition = if n == 0 { 1.0 } else { pmax / pmin };
        let growth_warning = n > 0 && pmin < GROWTH_WARNING_RATIO * scale;
        Ok(Self { lu, perm, sign, condition, growth_warning })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn determinant(&self) -> Scalar {
        let diag = product((0..self.dim()).map(|k| self.lu[(k, k)]));
        diag * self.sign
    }

    /// Ratio of largest to smallest pivot modulus; a cheap conditioning indicator.
    pub fn condition_indicator(&self) -> f64 {
        self.condition
    }

    /// Set when a pivot is tiny compared with the largest input entry.
    pub fn growth_warning(&self) -> bool {
        self.growth_warning
    }

    pub fn solve_vec(&self, b: &[Scalar]) -> Result<Vec<Scalar>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: format!("right-hand side of length {n}"),
                found: format!("length {}", b.len()),
            });
        }
        let mut y: Vec<Scalar> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: Scalar = (0..i).map(|j| self.lu[(i, j)] * y[j]).sum();
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let s: Scalar = (i + 1..n).map(|j| self.lu[(i, j)] * y[j]).sum();
            y[i] = (y[i] - s) / self.lu[(i, i)];
        }
        Ok(y)
    }

    /// Solution of `a x = b` followed by `steps` rounds of iterative refinement
    /// against `a`, the matrix this decomposition was built from. Refinement in
    /// working precision makes the result componentwise backward stable, which
    /// matters when the conditioning is mostly row and column scaling.
    pub fn solve_refined(&self, a: &DenseMatrix, b: &[Scalar], steps: usize) -> Result<Vec<Scalar>> {
        if a.rows() != self.dim() || !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: format!("{n}x{n} system matrix", n = self.dim()),
                found: format!("{}x{}", a.rows(), a.cols()),
            });
        }
        let mut x = self.solve_vec(b)?;
        for _ in 0..steps {
            let ax = a.apply(&x)?;
            let r: Vec<Scalar> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
            let d = self.solve_vec(&r)?;
            for (xi, di) in x.iter_mut().zip(d) {
                *xi += di;
            }
        }
        Ok(x)
    }

    pub fn solve(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if b.rows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} rows on the right-hand side", self.dim()),
                found: format!("{} rows", b.rows()),
            });
        }
        let mut out = DenseMatrix::zeros(b.rows(), b.cols());
        for c in 0..b.cols() {
            let col: Vec<Scalar> = (0..b.rows()).map(|r| b[(r, c)]).collect();
            for (r, v) in self.solve_vec(&col)?.into_iter().enumerate() {
                out[(r, c)] = v;
            }
        }
        Ok(out)
    }
}

/// Determinant together with the conditioning information of its factorization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Determinant {
    pub value: Scalar,
    pub condition: f64,
    pub growth_warning: bool,
}

pub fn lu_determinant(m: &DenseMatrix) -> Result<Determinant> {
    let lu = LuDecomposition::factor(m)?;
    Ok(Determinant { value: lu.determinant(), condition: lu.condition_indicator(), growth_warning: lu.growth_warning() })
}

/// Determinant that maps an exactly singular factorization to zero.
pub fn det_or_zero(m: &DenseMatrix) -> Result<Scalar> {
    match lu_determinant(m) {
        Ok(d) => Ok(d.value),
        Err(Error::Singular { .. }) => Ok(real(0.0)),
        Err(e) => Err(e),
    }
}

pub fn solve(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    LuDecomposition::factor(a)?.solve(b)
}

/// Parses a complex literal of the form `a`, `bi`, `a+bi` or `a-bi`.
pub fn parse_scalar(text: &str) -> Result<Scalar> {
    let bad = || Error::Parse(format!("'{text}' is not a complex literal of the form a+bi"));
    let t = text.trim();
    if t.is_empty() || t.chars().any(char::is_whitespace) {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(real).map_err(|_| bad());
    };
    // Split at the last sign that is not the leading sign or an exponent sign.
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let parse_im = |s: &str| match s {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => s.parse::<f64>().map_err(|_| bad()),
    };
    match split {
        Some(k) => {
            let re = body[..k].parse::<f64>().map_err(|_| bad())?;
            Ok(Scalar::new(re, parse_im(&body[k..])?))
        }
        None => Ok(Scalar::new(0.0, parse_im(body)?)),
    }
}

/// Formats a scalar in the literal form accepted by [`parse_scalar`].
pub fn format_scalar(z: Scalar) -> String {
    if z.im.is_sign_negative() {
        format!("{:e}-{:e}i", z.re, -z.im)
    } else {
        format!("{:e}+{:e}i", z.re, z.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Scalar {
        Scalar::new(re, im)
    }

    /// Laplace expansion along the first row.
    fn cofactor_det(m: &DenseMatrix) -> Scalar {
        let n = m.rows();
        if n == 1 {
            return m[(0, 0)];
        }
        (0..n)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                m[(0, j)] * cofactor_det(&m.minor(0, j)) * sign
            })
            .sum()
    }

    fn lcg_matrix(n: usize, seed: u64) -> DenseMatrix {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        DenseMatrix::from_fn(n, n, |_, _| c(next(), next()))
    }

    #[test]
    fn identity_determinant_is_one() {
        let d = lu_determinant(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(d.value, c(1.0, 0.0));
    }

    #[test]
    fn diagonal_determinant_is_product() {
        let d = lu_determinant(&DenseMatrix::diagonal(&[c(2.0, 0.0), c(0.0, 3.0)])).unwrap();
        assert!((d.value - c(0.0, 6.0)).norm() < 1e-15);
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        for seed in 0..10 {
            let m = lcg_matrix(5, seed);
            let lu = lu_determinant(&m).unwrap().value;
            let oracle = cofactor_det(&m);
            assert!((lu - oracle).norm() <= 1e-12 * oracle.norm(), "seed {seed}: {lu} vs {oracle}");
        }
    }

    #[test]
    fn non_square_is_rejected() {
        let m = DenseMatrix::zeros(2, 3);
        assert!(matches!(lu_determinant(&m), Err(Error::NonSquare { rows: 2, cols: 3 })));
    }

    #[test]
    fn singular_matrix_is_signalled() {
        let m = DenseMatrix::from_rows(&[vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(2.0, 0.0), c(4.0, 0.0)]]).unwrap();
        assert!(matches!(lu_determinant(&m), Err(Error::Singular { .. })));
        assert_eq!(det_or_zero(&m).unwrap(), c(0.0, 0.0));
        assert!(solve(&m, &DenseMatrix::column(&[c(1.0, 0.0), c(1.0, 0.0)])).is_err());
    }

    #[test]
    fn small_pivot_raises_growth_warning() {
        let m = DenseMatrix::diagonal(&[c(1.0, 0.0), c(1e-15, 0.0)]);
        let d = lu_determinant(&m).unwrap();
        assert!(d.growth_warning);
        assert!((d.condition - 1e15).abs() < 1.0);
    }

    #[test]
    fn solve_identity_returns_rhs() {
        let b = DenseMatrix::column(&[c(1.0, 2.0), c(-3.0, 0.5), c(0.0, 1.0)]);
        assert_eq!(solve(&DenseMatrix::identity(3), &b).unwrap(), b);
    }

    #[test]
    fn solve_diagonal() {
        let a = DenseMatrix::diagonal(&[c(2.0, 0.0), c(4.0, 0.0)]);
        let x = solve(&a, &DenseMatrix::column(&[c(2.0, 0.0), c(4.0, 0.0)])).unwrap();
        assert_eq!(x, DenseMatrix::column(&[c(1.0, 0.0), c(1.0, 0.0)]));
    }

    #[test]
    fn solve_random_residual() {
        for seed in 0..10 {
            let a = lcg_matrix(4, seed);
            let b = DenseMatrix::column(lcg_matrix(4, seed + 100).row(0));
            let x = solve(&a, &b).unwrap();
            let r = a.matmul(&x).unwrap().sub(&b).max_abs();
            assert!(r < 1e-12 * b.max_abs().max(1.0), "residual {r}");
        }
    }

    #[test]
    fn parse_and_format_literals() {
        assert_eq!(parse_scalar("0.5").unwrap(), c(0.5, 0.0));
        assert_eq!(parse_scalar("0.5+0.25i").unwrap(), c(0.5, 0.25));
        assert_eq!(parse_scalar("-1-2i").unwrap(), c(-1.0, -2.0));
        assert_eq!(parse_scalar("1e-3-2e+1i").unwrap(), c(1e-3, -20.0));
        assert_eq!(parse_scalar("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_scalar("2.5i").unwrap(), c(0.0, 2.5));
        assert!(parse_scalar("1 + 2i").is_err());
        assert!(parse_scalar("abc").is_err());
        let z = c(0.125, -3.5);
        assert_eq!(parse_scalar(&format_scalar(z)).unwrap(), z);
    }

    fn scalar() -> impl Strategy<Value = Scalar> {
        (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| c(a, b))
    }

    fn square(n: usize) -> impl Strategy<Value = DenseMatrix> {
        prop::collection::vec(scalar(), n * n).prop_map(move |v| DenseMatrix::from_row_major(n, n, v).unwrap())
    }

    /// Diagonally dominant matrices are well conditioned.
    fn well_conditioned(n: usize) -> impl Strategy<Value = DenseMatrix> {
        square(n).prop_map(move |mut m| {
            for i in 0..n {
                m[(i, i)] += c(n as f64, 0.0);
            }
            m
        })
    }

    proptest! {
        #[test]
        fn determinant_is_multiplicative(a in well_conditioned(6), b in well_conditioned(6)) {
            let dab = lu_determinant(&a.matmul(&b).unwrap()).unwrap().value;
            let prod = lu_determinant(&a).unwrap().value * lu_determinant(&b).unwrap().value;
            prop_assert!((dab - prod).norm() <= 1e-11 * prod.norm());
        }

        #[test]
        fn determinant_of_transpose(m in well_conditioned(5)) {
            let d = lu_determinant(&m).unwrap().value;
            let dt = lu_determinant(&m.transpose()).unwrap().value;
            prop_assert!((d - dt).norm() <= 1e-13 * d.norm());
        }

        #[test]
        fn solve_reproduces_rhs(a in well_conditioned(5), rhs in prop::collection::vec(scalar(), 5)) {
            let b = DenseMatrix::column(&rhs);
            let x = solve(&a, &b).unwrap();
            let r = a.matmul(&x).unwrap().sub(&b).max_abs();
            prop_assert!(r <= 1e-12 * b.max_abs().max(1e-300));
        }
    }
}
