//! Independent checks of a synthesized field: the finite-difference residual of
//! `m_t = m x m_zz`, and a direct scattering pass that integrates the spatial Lax problem
//! through the field and reads off the transition matrix.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::reconstruct::{magnetization, MagnetizationField, ScatteringCoeffs, Spin};
use crate::spectral::{embed_with, realize_triplet, BlockSystem, SpectralData};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub max_pde_residual: f64,
    pub max_norm_defect: f64,
    pub boundary_defect: f64,
    pub h_z: f64,
    pub h_t: f64,
    /// `log2` of the residual ratio between spacing `2 h_z` and `h_z`. `None` when the
    /// residual vanishes identically.
    pub convergence_order_estimate: Option<f64>,
    /// Residual with every other `z` sample dropped.
    pub coarse_pde_residual: f64,
    /// `(t index, z index)` of the largest residual.
    pub max_location: (usize, usize),
}

fn uniform_step(name: &str, grid: &[f64]) -> Result<f64> {
    if grid.len() < 5 {
        return Err(Error::Grid(format!(
            "{name} grid needs at least 5 points, has {}",
            grid.len()
        )));
    }
    let h = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    if !(h > 0.0) || grid.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0)) {
        return Err(Error::Grid(format!("{name} grid is not uniform")));
    }
    Ok(h)
}

fn cross(a: &Spin, b: &Spin) -> Spin {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Largest `|m_t - m x m_zz|` over interior points using z-neighbours `stride` apart.
fn max_residual(field: &MagnetizationField, h_z: f64, h_t: f64, stride: usize) -> (f64, (usize, usize)) {
    let nz = field.z_grid.len();
    let nt = field.t_grid.len();
    let h = h_z * stride as f64;
    let mut best = (0.0, (0, 0));
    for ti in 1..nt - 1 {
        let mut zi = stride;
        while zi + stride < nz {
            let m = field.at(ti, zi);
            let (mp, mm) = (field.at(ti, zi + stride), field.at(ti, zi - stride));
            let (tp, tm) = (field.at(ti + 1, zi), field.at(ti - 1, zi));
            let mzz: Spin = std::array::from_fn(|k| (mp[k] - 2.0 * m[k] + mm[k]) / (h * h));
            let mt: Spin = std::array::from_fn(|k| (tp[k] - tm[k]) / (2.0 * h_t));
            let rhs = cross(&m, &mzz);
            let r = ((mt[0] - rhs[0]).powi(2) + (mt[1] - rhs[1]).powi(2) + (mt[2] - rhs[2]).powi(2)).sqrt();
            if r > best.0 {
                best = (r, (ti, zi));
            }
            zi += stride;
        }
    }
    best
}

/// Central-difference residual of `m_t = m x m_zz` on the interior of a uniform grid.
pub fn pde_residual(field: &MagnetizationField) -> Result<ResidualReport> {
    let h_z = uniform_step("z", &field.z_grid)?;
    let h_t = uniform_step("t", &field.t_grid)?;
    let (fine, max_location) = max_residual(field, h_z, h_t, 1);
    let (coarse, _) = max_residual(field, h_z, h_t, 2);
    let convergence_order_estimate = if fine > 0.0 && coarse > 0.0 {
        Some((coarse / fine).log2())
    } else {
        None
    };
    Ok(ResidualReport {
        max_pde_residual: fine,
        max_norm_defect: field.norm_defect(),
        boundary_defect: field.end_defect(),
        h_z,
        h_t,
        convergence_order_estimate,
        coarse_pde_residual: coarse,
        max_location,
    })
}

/// Step and domain for the direct scattering integration.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IntegrationSpec {
    /// Fixed step; defaults to `min(1e-3, 0.05 / (1 + |lambda|))`.
    pub step: Option<f64>,
    /// Integration runs over `[-Z, Z]`; defaults to `40 / (2 min Re a_j)`.
    pub half_width: Option<f64>,
    /// Largest accepted step-doubling error estimate.
    pub tolerance: f64,
}

impl Default for IntegrationSpec {
    fn default() -> Self {
        Self {
            step: None,
            half_width: None,
            tolerance: 1e-6,
        }
    }
}

impl IntegrationSpec {
    pub fn step_for(&self, lambda: f64) -> f64 {
        self.step
            .unwrap_or_else(|| (0.05 / (1.0 + lambda.abs())).min(1e-3))
    }
}

type Mat2 = [[Complex64; 2]; 2];

fn mul2(a: &Mat2, b: &Mat2) -> Mat2 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j]))
}

fn axpy2(a: &Mat2, s: f64, b: &Mat2) -> Mat2 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] + b[i][j] * s))
}

fn scale2(a: &Mat2, s: Complex64) -> Mat2 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] * s))
}

fn spin_matrix(m: &Spin) -> Mat2 {
    [
        [Complex64::new(m[2], 0.0), Complex64::new(m[0], -m[1])],
        [Complex64::new(m[0], m[1]), Complex64::new(-m[2], 0.0)],
    ]
}

/// `m . sigma` sampled on `[-Z, Z]` with spacing `h / 2`.
struct SampledField {
    half_width: f64,
    step: f64,
    steps: usize,
    samples: Vec<Mat2>,
}

impl SampledField {
    fn new(sys: &BlockSystem, half_width: f64, step: f64) -> Result<Self> {
        let steps = ((2.0 * half_width / step).ceil() as usize).max(2);
        let steps = steps + steps % 2;
        let step = 2.0 * half_width / steps as f64;
        let samples = (0..=2 * steps)
            .into_par_iter()
            .map(|k| {
                let z = -half_width + k as f64 * step / 2.0;
                magnetization(sys, z).map(|m| spin_matrix(&m))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            half_width,
            step,
            steps,
            samples,
        })
    }

    /// RK4 for `Phi_z = i lambda (m . sigma) Phi` from `Phi(-Z) = exp(-i lambda Z sigma3)`,
    /// using every `stride`-th step.
    fn integrate(&self, lambda: f64, stride: usize) -> Mat2 {
        let z0 = -self.half_width;
        let il = Complex64::new(0.0, lambda);
        let mut phi: Mat2 = [
            [(il * z0).exp(), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), (-il * z0).exp()],
        ];
        let h = self.step * stride as f64;
        let f = |k: usize, p: &Mat2| scale2(&mul2(&self.samples[k], p), il);
        let mut n = 0;
        while n < self.steps {
            let k0 = 2 * n;
            let (k1i, k2i) = (k0 + stride, k0 + 2 * stride);
            let k1 = f(k0, &phi);
            let k2 = f(k1i, &axpy2(&phi, h / 2.0, &k1));
            let k3 = f(k1i, &axpy2(&phi, h / 2.0, &k2));
            let k4 = f(k2i, &axpy2(&phi, h, &k3));
            phi = std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    phi[i][j] + (k1[i][j] + 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j]) * (h / 6.0)
                })
            });
            n += stride;
        }
        phi
    }

    /// `T = Phi(Z)^-1 exp(i lambda Z sigma3)`, returning `(a, b)` with `T21 = conj(b)`.
    fn transition(&self, phi: &Mat2, lambda: f64) -> (Complex64, Complex64) {
        let det = phi[0][0] * phi[1][1] - phi[0][1] * phi[1][0];
        let inv: Mat2 = [
            [phi[1][1] / det, -phi[0][1] / det],
            [-phi[1][0] / det, phi[0][0] / det],
        ];
        let e = (Complex64::new(0.0, lambda * self.half_width)).exp();
        (inv[0][0] * e, (inv[1][0] * e).conj())
    }

    fn scatter(&self, lambda: f64, tolerance: f64) -> Result<(Complex64, Complex64)> {
        let fine = self.integrate(lambda, 1);
        let coarse = self.integrate(lambda, 2);
        let estimate = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| (fine[i][j] - coarse[i][j]).norm())
            .fold(0.0, f64::max)
            / 15.0;
        if estimate > tolerance {
            return Err(Error::Accuracy {
                estimate,
                tolerance,
            });
        }
        Ok(self.transition(&fine, lambda))
    }
}

/// Integrates the spatial Lax problem through the synthesized field `m(., t)` and returns
/// the transmission and reflection coefficients `(a, b)` at real `lambda`.
pub fn direct_scatter(
    sd: &SpectralData,
    t: f64,
    lambda: f64,
    spec: &IntegrationSpec,
) -> Result<(Complex64, Complex64)> {
    let sys = embed_with(&realize_triplet(sd), t, &Tolerances::default())?;
    let half_width = spec.half_width.unwrap_or_else(|| sd.decay_half_width());
    let sampled = SampledField::new(&sys, half_width, spec.step_for(lambda))?;
    sampled.scatter(lambda, spec.tolerance)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScatteringReport {
    pub t: f64,
    pub lambda_grid: Vec<f64>,
    pub a_numeric: Vec<Complex64>,
    pub b_numeric: Vec<Complex64>,
    /// `det(lambda I - i A) / det(lambda I + i A^H)`.
    pub a_formula: Vec<Complex64>,
    /// `max | |a_numeric| - 1 |`.
    pub unimodularity_defect: f64,
    /// `max |b_numeric|`.
    pub reflection_defect: f64,
    /// `a_numeric / a_formula`, reported for comparison only.
    pub phase_ratio: Vec<Complex64>,
    /// `max |a_numeric - a_formula / a_formula(0)|`. The integrated coefficient is
    /// normalized by `a(0) = 1`, the determinant ratio by `a(inf) = 1`.
    pub normalized_formula_defect: f64,
    /// `arg a_numeric` at the largest `|lambda|` of the grid.
    pub large_lambda_phase: f64,
}

/// Direct scattering over a grid of real `lambda`, tabulated against the determinant formula.
pub fn roundtrip_report(
    sd: &SpectralData,
    t: f64,
    lambda_grid: &[f64],
    spec: &IntegrationSpec,
) -> Result<ScatteringReport> {
    roundtrip_report_with(sd, t, lambda_grid, spec, &Tolerances::default())
}

pub fn roundtrip_report_with(
    sd: &SpectralData,
    t: f64,
    lambda_grid: &[f64],
    spec: &IntegrationSpec,
    tol: &Tolerances,
) -> Result<ScatteringReport> {
    if lambda_grid.is_empty() || lambda_grid.iter().any(|l| !l.is_finite()) {
        return Err(Error::Grid("lambda grid must be nonempty and finite".into()));
    }
    let sys = embed_with(&realize_triplet(sd), t, tol)?;
    let half_width = spec.half_width.unwrap_or_else(|| sd.decay_half_width());
    let coeffs = ScatteringCoeffs::from_system(&sys)?;

    // Samples depend only on the step, which is shared by most of the grid.
    let mut steps: Vec<f64> = lambda_grid.iter().map(|&l| spec.step_for(l)).collect();
    steps.sort_by(f64::total_cmp);
    steps.dedup();
    let mut numeric = vec![(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)); lambda_grid.len()];
    for h in steps {
        let sampled = SampledField::new(&sys, half_width, h)?;
        let idx: Vec<usize> = (0..lambda_grid.len())
            .filter(|&i| spec.step_for(lambda_grid[i]) == h)
            .collect();
        let results = idx
            .par_iter()
            .map(|&i| sampled.scatter(lambda_grid[i], spec.tolerance))
            .collect::<Result<Vec<_>>>()?;
        for (i, r) in idx.into_iter().zip(results) {
            numeric[i] = r;
        }
    }
    let a_numeric: Vec<Complex64> = numeric.iter().map(|r| r.0).collect();
    let b_numeric: Vec<Complex64> = numeric.iter().map(|r| r.1).collect();
    let a_formula = lambda_grid
        .iter()
        .map(|&l| coeffs.det_ratio(Complex64::new(l, 0.0)))
        .collect::<Result<Vec<_>>>()?;
    let phase_ratio = a_numeric.iter().zip(&a_formula).map(|(n, f)| n / f).collect();
    let gauge = coeffs.det_ratio(Complex64::new(0.0, 0.0))?;
    let normalized_formula_defect = a_numeric
        .iter()
        .zip(&a_formula)
        .map(|(n, f)| (n - f / gauge).norm())
        .fold(0.0, f64::max);
    let far = (0..lambda_grid.len())
        .max_by(|&i, &j| lambda_grid[i].abs().total_cmp(&lambda_grid[j].abs()))
        .expect("grid is nonempty");
    Ok(ScatteringReport {
        t,
        lambda_grid: lambda_grid.to_vec(),
        unimodularity_defect: a_numeric
            .iter()
            .map(|a| (a.norm() - 1.0).abs())
            .fold(0.0, f64::max),
        reflection_defect: b_numeric.iter().map(|b| b.norm()).fold(0.0, f64::max),
        large_lambda_phase: a_numeric[far].arg(),
        a_numeric,
        b_numeric,
        a_formula,
        phase_ratio,
        normalized_formula_defect,
    })
}
