//! Closed-form solution of the separable Marchenko equation
//!
//! ```text
//! L(z, y) + Omega(z + y) + int_z^inf L(z, u) Omega(u + y) du = 0
//! ```
//!
//! and a Nyström discretization of the same equation used as an independent oracle.
//!
//! Every closed-form quantity is `script_C G(z) X` for some right-hand side `X`, where
//!
//! ```text
//! G(z) = exp(-zA) [I + exp(-zA) P exp(-zA)]^-1 exp(-zA) = [P + exp(2zA)]^-1
//! ```
//!
//! (`A` standing for the block matrix here). The first form overflows for `z << 0`, the
//! second for `z >> 0`; [`apply_resolvent`] picks whichever side is bounded.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::spectral::BlockSystem;

/// Truncation width of every semi-infinite integral, `40 / min Re a_j`.
pub fn truncation_width(sys: &BlockSystem) -> f64 {
    let p = sys.min_real_part();
    if p.is_finite() {
        40.0 / p
    } else {
        40.0
    }
}

/// Computes `G(z) rhs`.
pub fn apply_resolvent(sys: &BlockSystem, z: f64, rhs: &CMatrix) -> Result<CMatrix> {
    let tol = sys.tolerances();
    if z * sys.min_real_part() <= tol.stable_switch {
        let m = &sys.exp_script_a(2.0 * z) + sys.p();
        linalg::solve_equilibrated(&m, rhs, tol.pivot)
    } else {
        let e = sys.exp_script_a(-z);
        let inner = &CMatrix::identity(e.rows()) + &(&(&e * sys.p()) * &e);
        let x = linalg::solve_equilibrated(&inner, &(&e * rhs), tol.pivot)?;
        Ok(&e * &x)
    }
}

/// `L(z, y)` for `y >= z`.
pub fn eval_l(sys: &BlockSystem, z: f64, y: f64) -> Result<CMatrix> {
    if y < z {
        return Err(Error::Domain { z, y });
    }
    if sys.order() == 0 {
        return Ok(CMatrix::zeros(2, 2));
    }
    let rhs = &sys.exp_script_a(z - y) * sys.script_b();
    Ok(-&(sys.script_c() * &apply_resolvent(sys, z, &rhs)?))
}

/// `Ltilde(z) = int_z^inf L(z, y) dy`.
pub fn eval_ltilde(sys: &BlockSystem, z: f64) -> Result<CMatrix> {
    if sys.order() == 0 {
        return Ok(CMatrix::zeros(2, 2));
    }
    Ok(-&(sys.script_c() * &apply_resolvent(sys, z, sys.a_inv_b())?))
}

/// `L(z, y)` evaluated literally as `-C e^{-zA} [I + e^{-zA} P e^{-zA}]^-1 e^{-yA} B`.
/// Only finite for moderate `|z|`; kept as a cross-check of [`eval_l`].
pub fn eval_l_direct_form(sys: &BlockSystem, z: f64, y: f64) -> Result<CMatrix> {
    if sys.order() == 0 {
        return Ok(CMatrix::zeros(2, 2));
    }
    let e = sys.exp_script_a(-z);
    let inner = &CMatrix::identity(e.rows()) + &(&(&e * sys.p()) * &e);
    let tail = &sys.exp_script_a(-y) * sys.script_b();
    let x = linalg::solve(&inner, &tail)?;
    Ok(-&(&(sys.script_c() * &e) * &x))
}

/// `Ltilde(z)` evaluated literally as `-C e^{-zA} [I + e^{-zA} P e^{-zA}]^-1 e^{-zA} A^-1 B`.
pub fn eval_ltilde_direct_form(sys: &BlockSystem, z: f64) -> Result<CMatrix> {
    if sys.order() == 0 {
        return Ok(CMatrix::zeros(2, 2));
    }
    let e = sys.exp_script_a(-z);
    let inner = &CMatrix::identity(e.rows()) + &(&(&e * sys.p()) * &e);
    let x = linalg::solve(&inner, &(&e * sys.a_inv_b()))?;
    Ok(-&(&(sys.script_c() * &e) * &x))
}

/// Closed-form evaluators bound to one block system.
#[derive(Debug, Clone, Copy)]
pub struct MarchenkoSolution<'a> {
    source: &'a BlockSystem,
}

impl<'a> MarchenkoSolution<'a> {
    pub fn new(source: &'a BlockSystem) -> Self {
        Self { source }
    }

    pub fn source(&self) -> &'a BlockSystem {
        self.source
    }

    pub fn l(&self, z: f64, y: f64) -> Result<CMatrix> {
        eval_l(self.source, z, y)
    }

    pub fn ltilde(&self, z: f64) -> Result<CMatrix> {
        eval_ltilde(self.source, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    Trapezoid,
    /// Composite Simpson; needs an even number of intervals.
    Simpson,
}

/// Composite quadrature on `[z, z + width]` with `intervals` equal subintervals.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    pub intervals: usize,
    /// Defaults to [`truncation_width`].
    pub width: Option<f64>,
    pub rule: QuadratureRule,
}

impl QuadratureSpec {
    pub fn new(intervals: usize, rule: QuadratureRule) -> Self {
        Self {
            intervals,
            width: None,
            rule,
        }
    }

    fn resolve(&self, sys: &BlockSystem) -> Result<(f64, Vec<f64>)> {
        let n = self.intervals;
        if n < 2 {
            return Err(Error::Grid("quadrature needs at least 2 intervals".into()));
        }
        if self.rule == QuadratureRule::Simpson && n % 2 != 0 {
            return Err(Error::Grid(format!(
                "Simpson rule needs an even number of intervals, got {n}"
            )));
        }
        let width = self.width.unwrap_or_else(|| truncation_width(sys));
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::Grid(format!("invalid quadrature width {width}")));
        }
        let h = width / n as f64;
        let weights = match self.rule {
            QuadratureRule::Trapezoid => (0..=n)
                .map(|k| if k == 0 || k == n { h / 2.0 } else { h })
                .collect(),
            QuadratureRule::Simpson => (0..=n)
                .map(|k| {
                    let c = if k == 0 || k == n {
                        1.0
                    } else if k % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    c * h / 3.0
                })
                .collect(),
        };
        Ok((h, weights))
    }
}

/// Nyström samples of `L(z, .)` on the quadrature nodes.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub z: f64,
    pub y: Vec<f64>,
    pub l: Vec<CMatrix>,
    /// Relative residual of the discrete linear system.
    pub residual: f64,
    pub iterations: usize,
}

/// Solves the discretized Marchenko equation on `[z, z + W]` by Nyström's method.
///
/// The kernel enters only through samples of `Omega`; nothing of the separable structure is
/// used, so the result is an independent check of [`eval_l`].
pub fn oracle_solve(sys: &BlockSystem, z: f64, grid: QuadratureSpec) -> Result<OracleSolution> {
    let (h, w) = grid.resolve(sys)?;
    let n = grid.intervals + 1;
    let y: Vec<f64> = (0..n).map(|k| z + k as f64 * h).collect();
    // Omega(y_k + y_m) depends on k + m only.
    let samples: Vec<[Complex64; 4]> = (0..2 * n - 1)
        .map(|k| {
            let o = sys.omega_matrix(2.0 * z + k as f64 * h);
            [o[(0, 0)], o[(0, 1)], o[(1, 0)], o[(1, 1)]]
        })
        .collect();

    // Unknown layout for one row r of L: x[2k + c] = L_rc(y_k).
    let apply = |x: &[Complex64]| -> Vec<Complex64> {
        let mut out = x.to_vec();
        for k in 0..n {
            let (mut s0, mut s1) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for m in 0..n {
                let om = &samples[k + m];
                let (x0, x1) = (x[2 * m] * w[m], x[2 * m + 1] * w[m]);
                s0 += x0 * om[0] + x1 * om[2];
                s1 += x0 * om[1] + x1 * om[3];
            }
            out[2 * k] += s0;
            out[2 * k + 1] += s1;
        }
        out
    };

    let mut rows = Vec::with_capacity(2);
    let mut residual: f64 = 0.0;
    let mut iterations = 0;
    for r in 0..2 {
        let b: Vec<Complex64> = (0..n)
            .flat_map(|k| [-samples[k][2 * r], -samples[k][2 * r + 1]])
            .collect();
        let sol = gmres(&apply, &b, 1e-13, 80, 20)?;
        residual = residual.max(sol.residual);
        iterations += sol.iterations;
        rows.push(sol.x);
    }
    let l = (0..n)
        .map(|k| {
            CMatrix::new(
                2,
                2,
                vec![rows[0][2 * k], rows[0][2 * k + 1], rows[1][2 * k], rows[1][2 * k + 1]],
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleSolution {
        z,
        y,
        l,
        residual,
        iterations,
    })
}

/// Largest entry of `L(z, y) + Omega(z + y) + int L(z, u) Omega(u + y) du`, with the integral
/// replaced by the given quadrature and `L` the closed form.
pub fn marchenko_residual(sys: &BlockSystem, z: f64, y: f64, grid: QuadratureSpec) -> Result<f64> {
    let (h, w) = grid.resolve(sys)?;
    let mut integral = CMatrix::zeros(2, 2);
    for (k, wk) in w.iter().enumerate() {
        let u = z + k as f64 * h;
        let term = &eval_l(sys, z, u)? * &sys.omega_matrix(u + y);
        integral = &integral + &term.scale_real(*wk);
    }
    let total = &(&eval_l(sys, z, y)? + &sys.omega_matrix(z + y)) + &integral;
    Ok(total.max_abs())
}

struct GmresSolution {
    x: Vec<Complex64>,
    residual: f64,
    iterations: usize,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Restarted GMRES with modified Gram-Schmidt and Givens rotations.
fn gmres(
    apply: &dyn Fn(&[Complex64]) -> Vec<Complex64>,
    b: &[Complex64],
    tol: f64,
    restart: usize,
    max_restarts: usize,
) -> Result<GmresSolution> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    if bnorm == 0.0 {
        return Ok(GmresSolution {
            x,
            residual: 0.0,
            iterations: 0,
        });
    }
    let mut iterations = 0;
    let mut rel = 1.0;
    let mut condition: f64 = 1.0;
    for _ in 0..max_restarts {
        let ax = apply(&x);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= tol {
            return Ok(GmresSolution {
                x,
                residual: rel,
                iterations,
            });
        }
        let mut basis: Vec<Vec<Complex64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess: Vec<Vec<Complex64>> = Vec::new();
        let mut cs: Vec<(f64, Complex64)> = Vec::new();
        let mut g = vec![Complex64::new(beta, 0.0)];
        let mut steps = 0;
        for j in 0..restart {
            iterations += 1;
            steps = j + 1;
            let mut v = apply(&basis[j]);
            let mut col = vec![Complex64::new(0.0, 0.0); j + 2];
            for (i, q) in basis.iter().enumerate() {
                let hij = dot(q, &v);
                col[i] = hij;
                for (vk, qk) in v.iter_mut().zip(q) {
                    *vk -= hij * qk;
                }
            }
            let hnext = norm(&v);
            col[j + 1] = Complex64::new(hnext, 0.0);
            for (i, &(c, s)) in cs.iter().enumerate() {
                let (a, b2) = (col[i], col[i + 1]);
                col[i] = c * a + s * b2;
                col[i + 1] = -s.conj() * a + c * b2;
            }
            let (a, b2) = (col[j], col[j + 1]);
            let rho = (a.norm_sqr() + b2.norm_sqr()).sqrt();
            let (c, s) = if rho == 0.0 {
                (1.0, Complex64::new(0.0, 0.0))
            } else if a.norm() == 0.0 {
                (0.0, b2.conj() / b2.norm())
            } else {
                let c = a.norm() / rho;
                (c, (a / a.norm()) * b2.conj() / rho)
            };
            col[j] = c * a + s * b2;
            col[j + 1] = Complex64::new(0.0, 0.0);
            cs.push((c, s));
            let gj = g[j];
            g.push(-s.conj() * gj);
            g[j] = c * gj;
            hess.push(col);
            rel = g[j + 1].norm() / bnorm;
            if rel <= tol || hnext <= 1e-300 {
                break;
            }
            basis.push(v.iter().map(|vk| vk / hnext).collect());
        }
        // Back substitution on the triangular factor.
        let mut yv = vec![Complex64::new(0.0, 0.0); steps];
        for i in (0..steps).rev() {
            let mut s = g[i];
            for k in i + 1..steps {
                s -= hess[k][i] * yv[k];
            }
            yv[i] = s / hess[i][i];
        }
        let diag: Vec<f64> = (0..steps).map(|i| hess[i][i].norm()).collect();
        let dmax = diag.iter().cloned().fold(0.0, f64::max);
        let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        condition = condition.max(dmax / dmin);
        for (k, yk) in yv.iter().enumerate() {
            for (xi, qi) in x.iter_mut().zip(&basis[k]) {
                *xi += yk * qi;
            }
        }
    }
    let ax = apply(&x);
    let r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    rel = rel.max(norm(&r) / bnorm);
    if rel <= tol * 100.0 {
        return Ok(GmresSolution {
            x,
            residual: rel,
            iterations,
        });
    }
    Err(Error::IllConditioned {
        residual: rel,
        condition,
    })
}
