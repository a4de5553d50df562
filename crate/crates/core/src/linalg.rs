//! Dense complex matrix kernels for small systems.
//!
//! Everything here is sized for the block systems of the triplet method, where the
//! dimension rarely exceeds a few dozen. Storage is row-major and all algorithms are
//! plain O(n^3) dense ones: LU with partial pivoting, scaling-and-squaring with a
//! degree-13 Padé approximant, and a Kronecker-vectorized Sylvester solver.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Default relative pivot threshold for [`solve_linear`].
pub const DEFAULT_PIVOT_TOL: f64 = 1e-14;
/// Default relative pivot threshold below which a Sylvester system is declared unsolvable.
pub const DEFAULT_OVERLAP_TOL: f64 = 1e-12;

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    /// Builds a matrix from row-major entries, rejecting wrong lengths and non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                op: "CMatrix::new",
                expected: format!("{} entries", rows * cols),
                found: format!("{} entries", data.len()),
            });
        }
        if let Some(k) = data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite {
                row: k / cols.max(1),
                col: k % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[Complex64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension {
                op: "CMatrix::from_rows",
                expected: format!("rows of length {c}"),
                found: "ragged rows".into(),
            });
        }
        Self::new(r, c, rows.iter().flat_map(|row| row.iter().copied()).collect())
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let owned: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|row| row.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        let refs: Vec<&[Complex64]> = owned.iter().map(Vec::as_slice).collect();
        Self::from_rows(&refs)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn scalar(z: Complex64) -> Self {
        Self {
            rows: 1,
            cols: 1,
            data: vec![z],
        }
    }

    /// Assembles a matrix from a grid of blocks. Block rows must share heights and block
    /// columns must share widths.
    pub fn from_blocks(blocks: &[&[&CMatrix]]) -> Result<Self> {
        let heights: Vec<usize> = blocks.iter().map(|row| row[0].rows).collect();
        let widths: Vec<usize> = blocks[0].iter().map(|b| b.cols).collect();
        for (bi, row) in blocks.iter().enumerate() {
            if row.len() != widths.len() {
                return Err(Error::Dimension {
                    op: "CMatrix::from_blocks",
                    expected: format!("{} blocks per row", widths.len()),
                    found: format!("{} blocks in row {bi}", row.len()),
                });
            }
            for (bj, b) in row.iter().enumerate() {
                if b.rows != heights[bi] || b.cols != widths[bj] {
                    return Err(Error::Dimension {
                        op: "CMatrix::from_blocks",
                        expected: format!("{}x{} at block ({bi}, {bj})", heights[bi], widths[bj]),
                        found: format!("{}x{}", b.rows, b.cols),
                    });
                }
            }
        }
        let rows: usize = heights.iter().sum();
        let cols: usize = widths.iter().sum();
        let mut out = Self::zeros(rows, cols);
        let mut r0 = 0;
        for (bi, row) in blocks.iter().enumerate() {
            let mut c0 = 0;
            for (bj, b) in row.iter().enumerate() {
                out.set_block(r0, c0, b);
                c0 += widths[bj];
            }
            r0 += heights[bi];
        }
        Ok(out)
    }

    /// Block diagonal matrix `diag(a, b)`.
    pub fn block_diag(a: &CMatrix, b: &CMatrix) -> Self {
        let mut out = Self::zeros(a.rows + b.rows, a.cols + b.cols);
        out.set_block(0, 0, a);
        out.set_block(a.rows, a.cols, b);
        out
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

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// Copy of the `nr x nc` block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols, "block out of range");
        let mut out = Self::zeros(nr, nc);
        for i in 0..nr {
            for j in 0..nc {
                out[(i, j)] = self[(r0 + i, c0 + j)];
            }
        }
        out
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &CMatrix) {
        assert!(r0 + b.rows <= self.rows && c0 + b.cols <= self.cols, "block out of range");
        for i in 0..b.rows {
            let dst = (r0 + i) * self.cols + c0;
            self.data[dst..dst + b.cols].copy_from_slice(&b.data[i * b.cols..(i + 1) * b.cols]);
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |self - other|` entrywise.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Entrywise largest deviation from Hermitian symmetry, `max |M - M^H| / 2`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                d = d.max((self[(i, j)] - self[(j, i)].conj()).norm() / 2.0);
            }
        }
        d
    }

    /// Hermitian part `(M + M^H) / 2`.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale_real(0.5)
    }

    pub fn matmul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension {
                op: "matmul",
                expected: format!("{} rows on the right", self.cols),
                found: format!("{}x{}", rhs.rows, rhs.cols),
            });
        }
        Ok(self.mul_unchecked(rhs))
    }

    fn mul_unchecked(&self, rhs: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let brow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    fn zip_with(&self, rhs: &CMatrix, f: impl Fn(Complex64, Complex64) -> Complex64) -> CMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "elementwise op on mismatched shapes"
        );
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Panics on shape mismatch; use [`CMatrix::matmul`] for a checked product.
impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        self.mul_unchecked(rhs)
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_real(-1.0)
    }
}

/// Pauli matrices and the 2x2 identity.
pub mod pauli {
    use super::*;

    pub fn identity() -> CMatrix {
        CMatrix::identity(2)
    }

    pub fn sigma1() -> CMatrix {
        CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    pub fn sigma2() -> CMatrix {
        let i = Complex64::i();
        CMatrix::from_rows(&[&[ZERO, -i], &[i, ZERO]]).unwrap()
    }

    pub fn sigma3() -> CMatrix {
        CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap()
    }

    /// `diag(I_n, -I_n)`, the block version of sigma3 acting on 2n-vectors.
    pub fn sigma3_block(n: usize) -> CMatrix {
        let mut m = CMatrix::identity(2 * n);
        for i in n..2 * n {
            m[(i, i)] = -ONE;
        }
        m
    }
}

/// LU factorization with partial pivoting, `P M = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
    swaps: usize,
    min_pivot: f64,
    norm_1: f64,
}

impl Lu {
    /// Factors `m`; fails with [`Error::Singular`] when a pivot falls below
    /// `pivot_tol * ||m||_1`.
    pub fn factor(m: &CMatrix, pivot_tol: f64) -> Result<Self> {
        let lu = Self::factor_unchecked(m)?;
        if lu.min_pivot <= pivot_tol * lu.norm_1 {
            let condition = if lu.min_pivot > 0.0 {
                lu.norm_1 / lu.min_pivot
            } else {
                f64::INFINITY
            };
            return Err(Error::Singular { condition });
        }
        Ok(lu)
    }

    /// Factors without the pivot gate. A zero pivot is still an error.
    pub fn factor_unchecked(m: &CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension {
                op: "LU",
                expected: "square matrix".into(),
                found: format!("{}x{}", m.rows, m.cols),
            });
        }
        let n = m.rows;
        let norm_1 = m.norm_1();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            min_pivot = min_pivot.min(pmax);
            if pmax == 0.0 {
                return Err(Error::Singular {
                    condition: f64::INFINITY,
                });
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                swaps += 1;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f == ZERO {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        if n == 0 {
            min_pivot = f64::INFINITY;
        }
        Ok(Self {
            lu,
            perm,
            swaps,
            min_pivot,
            norm_1,
        })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    /// Solves `M X = R`.
    pub fn solve(&self, r: &CMatrix) -> Result<CMatrix> {
        let n = self.dim();
        if r.rows != n {
            return Err(Error::Dimension {
                op: "LU solve",
                expected: format!("{n} rows"),
                found: format!("{}x{}", r.rows, r.cols),
            });
        }
        let m = r.cols;
        let mut x = CMatrix::zeros(n, m);
        for (i, &p) in self.perm.iter().enumerate() {
            for j in 0..m {
                x[(i, j)] = r[(p, j)];
            }
        }
        for j in 0..m {
            for i in 0..n {
                let mut s = x[(i, j)];
                for k in 0..i {
                    s -= self.lu[(i, k)] * x[(k, j)];
                }
                x[(i, j)] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[(i, j)];
                for k in i + 1..n {
                    s -= self.lu[(i, k)] * x[(k, j)];
                }
                x[(i, j)] = s / self.lu[(i, i)];
            }
        }
        Ok(x)
    }

    pub fn inverse(&self) -> CMatrix {
        self.solve(&CMatrix::identity(self.dim()))
            .expect("identity has matching rows")
    }

    pub fn det(&self) -> Complex64 {
        let d: Complex64 = (0..self.dim()).map(|i| self.lu[(i, i)]).product();
        if self.swaps % 2 == 1 {
            -d
        } else {
            d
        }
    }

    /// `||M||_1 ||M^-1||_1`, computed from the explicit inverse.
    pub fn condition_1(&self) -> f64 {
        self.norm_1 * self.inverse().norm_1()
    }
}

/// Solution of a linear system together with its 1-norm condition number.
#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub x: CMatrix,
    pub condition: f64,
}

/// Solves `M X = R` with the default pivot threshold.
pub fn solve_linear(m: &CMatrix, r: &CMatrix) -> Result<LinearSolution> {
    solve_linear_with(m, r, DEFAULT_PIVOT_TOL)
}

pub fn solve_linear_with(m: &CMatrix, r: &CMatrix, pivot_tol: f64) -> Result<LinearSolution> {
    let lu = Lu::factor(m, pivot_tol)?;
    let x = lu.solve(r)?;
    Ok(LinearSolution {
        x,
        condition: lu.condition_1(),
    })
}

/// Power-of-two row and column scalings `(r, c)` that bring every row and column of
/// `diag(r) M diag(c)` to a largest entry in `[0.5, 2)`.
pub fn equilibrate(m: &CMatrix) -> (Vec<f64>, Vec<f64>) {
    let pow2 = |x: f64| if x > 0.0 && x.is_finite() { (-x.log2().round()).exp2() } else { 1.0 };
    let r: Vec<f64> = (0..m.rows)
        .map(|i| pow2((0..m.cols).map(|j| m[(i, j)].norm()).fold(0.0, f64::max)))
        .collect();
    let c: Vec<f64> = (0..m.cols)
        .map(|j| pow2((0..m.rows).map(|i| m[(i, j)].norm() * r[i]).fold(0.0, f64::max)))
        .collect();
    (r, c)
}

/// Solves `M X = R` after equilibrating `M`; the pivot test applies to the scaled matrix.
pub fn solve_equilibrated(m: &CMatrix, rhs: &CMatrix, pivot_tol: f64) -> Result<CMatrix> {
    if m.rows != m.cols || rhs.rows != m.rows {
        return Err(Error::Dimension {
            op: "solve_equilibrated",
            expected: format!("square matrix and {} right-hand rows", m.rows),
            found: format!("{}x{} and {}x{}", m.rows, m.cols, rhs.rows, rhs.cols),
        });
    }
    let (r, c) = equilibrate(m);
    let mut scaled = m.clone();
    let mut b = rhs.clone();
    for i in 0..m.rows {
        for j in 0..m.cols {
            scaled[(i, j)] *= r[i] * c[j];
        }
        for j in 0..rhs.cols {
            b[(i, j)] *= r[i];
        }
    }
    let mut x = Lu::factor(&scaled, pivot_tol)?.solve(&b)?;
    for i in 0..m.rows {
        for j in 0..rhs.cols {
            x[(i, j)] *= c[i];
        }
    }
    Ok(x)
}

/// Solves `M X = R` without computing a condition estimate. Used on hot paths.
pub fn solve(m: &CMatrix, r: &CMatrix) -> Result<CMatrix> {
    Lu::factor(m, DEFAULT_PIVOT_TOL)?.solve(r)
}

pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    Ok(Lu::factor(m, DEFAULT_PIVOT_TOL)?.inverse())
}

pub fn det(m: &CMatrix) -> Result<Complex64> {
    match Lu::factor_unchecked(m) {
        Ok(lu) => Ok(lu.det()),
        Err(Error::Singular { .. }) => Ok(ZERO),
        Err(e) => Err(e),
    }
}

// Padé [13/13] coefficients and the matching scaling threshold.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a [13/13] Padé approximant.
pub fn mat_exp(m: &CMatrix) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::Dimension {
            op: "mat_exp",
            expected: "square matrix".into(),
            found: format!("{}x{}", m.rows, m.cols),
        });
    }
    let n = m.rows;
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    if n == 1 {
        return Ok(CMatrix::scalar(m.data[0].exp()));
    }
    let norm = m.norm_1();
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = m.scale_real(2f64.powi(-s));
    let b = &PADE13;
    let id = CMatrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let lin = |c6: f64, c4: f64, c2: f64, c0: Option<f64>| {
        let mut t = &(&a6.scale_real(c6) + &a4.scale_real(c4)) + &a2.scale_real(c2);
        if let Some(c0) = c0 {
            t = &t + &id.scale_real(c0);
        }
        t
    };
    let u_inner = &(&a6 * &lin(b[13], b[11], b[9], None)) + &lin(b[7], b[5], b[3], Some(b[1]));
    let u = &a * &u_inner;
    let v = &(&a6 * &lin(b[12], b[10], b[8], None)) + &lin(b[6], b[4], b[2], Some(b[0]));
    let p = &v + &u;
    let q = &v - &u;
    let mut r = Lu::factor_unchecked(&q)?.solve(&p)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

/// Options for the Sylvester solver.
#[derive(Debug, Clone, Copy)]
pub struct SylvesterOptions {
    /// Relative pivot below which the spectra of `P` and `-Q` are declared overlapping.
    pub overlap_tol: f64,
}

impl Default for SylvesterOptions {
    fn default() -> Self {
        Self {
            overlap_tol: DEFAULT_OVERLAP_TOL,
        }
    }
}

/// Solves `P X + X Q = R` by LU on the vectorized Kronecker system.
pub fn solve_sylvester(p: &CMatrix, q: &CMatrix, r: &CMatrix) -> Result<CMatrix> {
    solve_sylvester_with(p, q, r, SylvesterOptions::default())
}

pub fn solve_sylvester_with(
    p: &CMatrix,
    q: &CMatrix,
    r: &CMatrix,
    opts: SylvesterOptions,
) -> Result<CMatrix> {
    if !p.is_square() || !q.is_square() || r.rows != p.rows || r.cols != q.rows {
        return Err(Error::Dimension {
            op: "solve_sylvester",
            expected: format!("P {0}x{0}, Q {1}x{1}, R {0}x{1}", p.rows, q.rows),
            found: format!(
                "P {}x{}, Q {}x{}, R {}x{}",
                p.rows, p.cols, q.rows, q.cols, r.rows, r.cols
            ),
        });
    }
    let (m, n) = (p.rows, q.rows);
    let dim = m * n;
    // Row-major vec: X[i][j] -> i*n + j.
    let mut k = CMatrix::zeros(dim, dim);
    for i in 0..m {
        for j in 0..n {
            let row = i * n + j;
            for l in 0..m {
                k[(row, l * n + j)] += p[(i, l)];
            }
            for l in 0..n {
                k[(row, i * n + l)] += q[(l, j)];
            }
        }
    }
    let rhs = CMatrix {
        rows: dim,
        cols: 1,
        data: r.data.clone(),
    };
    let lu = Lu::factor_unchecked(&k).map_err(|_| Error::SpectralOverlap { pivot: 0.0 })?;
    if lu.min_pivot <= opts.overlap_tol * lu.norm_1 {
        return Err(Error::SpectralOverlap {
            pivot: lu.min_pivot,
        });
    }
    let x = lu.solve(&rhs)?;
    Ok(CMatrix {
        rows: m,
        cols: n,
        data: x.data,
    })
}

/// Hermitian solution of a Lyapunov equation `P X + X P^H = R` with `R` Hermitian.
#[derive(Debug, Clone)]
pub struct LyapunovSolution {
    pub x: CMatrix,
    /// Hermiticity defect of the raw solve, before symmetrization.
    pub symmetrization_defect: f64,
}

/// Solves `P X + X P^H = R` and replaces the result by its Hermitian part.
pub fn solve_lyapunov(p: &CMatrix, r: &CMatrix) -> Result<LyapunovSolution> {
    let raw = solve_sylvester(p, &p.adjoint(), r)?;
    Ok(LyapunovSolution {
        symmetrization_defect: raw.hermitian_defect(),
        x: raw.hermitian_part(),
    })
}

/// Residual `||P X + X Q - R||_F`.
pub fn sylvester_residual(p: &CMatrix, q: &CMatrix, r: &CMatrix, x: &CMatrix) -> f64 {
    (&(&(p * x) + &(x * q)) - r).norm_fro()
}

/// Smallest pivot of a Cholesky factorization of the Hermitian part of `m`, or `None` when
/// the matrix is not positive definite.
pub fn cholesky_min_pivot(m: &CMatrix) -> Option<f64> {
    if !m.is_square() {
        return None;
    }
    let n = m.rows;
    let h = m.hermitian_part();
    let mut l = CMatrix::zeros(n, n);
    let mut min_pivot = f64::INFINITY;
    for j in 0..n {
        let d = h[(j, j)].re - (0..j).map(|k| l[(j, k)].norm_sqr()).sum::<f64>();
        if !(d > 0.0) {
            return None;
        }
        min_pivot = min_pivot.min(d);
        let ljj = d.sqrt();
        l[(j, j)] = Complex64::new(ljj, 0.0);
        for i in j + 1..n {
            let s: Complex64 = (0..j).map(|k| l[(i, k)] * l[(j, k)].conj()).sum();
            l[(i, j)] = (h[(i, j)] - s) / ljj;
        }
    }
    Some(min_pivot)
}
