//! From `Ltilde(z; t)` to the magnetization `m(z, t)`, the Jost matrix `Psi` and the
//! transmission coefficient `a(lambda)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, pauli, CMatrix};
use crate::marchenko::{apply_resolvent, eval_ltilde};
use crate::spectral::{embed_with, realize_triplet, BlockSystem, SpectralData, Triplet};
use crate::tolerances::Tolerances;

/// A unit vector `(m1, m2, m3)`.
pub type Spin = [f64; 3];

pub const E3: Spin = [0.0, 0.0, 1.0];

/// `M = (I + Ltilde)^-1 sigma3 (I + Ltilde)`.
pub fn reconstruct_sigma(ltilde: &CMatrix) -> Result<CMatrix> {
    let f = &CMatrix::identity(2) + ltilde;
    linalg::solve(&f, &(&pauli::sigma3() * &f))
}

/// Magnetization vector read off a reconstructed `m . sigma`, with the structural defects
/// that were averaged away.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extracted {
    pub m: Spin,
    pub hermitian_defect: f64,
    pub trace_defect: f64,
}

/// Reads `m` from `M = m . sigma` after replacing `M` by its Hermitian part:
/// `m3 = Re M11`, `m1 + i m2 = M21`.
pub fn extract_m(m: &CMatrix) -> Result<Extracted> {
    extract_m_with(m, Tolerances::default().hermitian)
}

pub fn extract_m_with(m: &CMatrix, gate: f64) -> Result<Extracted> {
    if m.rows() != 2 || m.cols() != 2 {
        return Err(Error::Dimension {
            op: "extract_m",
            expected: "2x2".into(),
            found: format!("{}x{}", m.rows(), m.cols()),
        });
    }
    let hermitian_defect = m.hermitian_defect();
    let trace_defect = m.trace().norm();
    let defect = hermitian_defect.max(trace_defect);
    if defect > gate {
        return Err(Error::Structure {
            what: "reconstructed m.sigma is not traceless Hermitian",
            defect,
            gate,
        });
    }
    let h = m.hermitian_part();
    Ok(Extracted {
        m: [h[(1, 0)].re, h[(1, 0)].im, h[(0, 0)].re],
        hermitian_defect,
        trace_defect,
    })
}

/// Everything computed at one `(z, t)` point.
#[derive(Debug, Clone)]
pub struct FieldPoint {
    pub z: f64,
    pub ltilde: CMatrix,
    /// `H(z) = (I + Ltilde)^-1`.
    pub h: CMatrix,
    pub sigma: CMatrix,
    pub m: Spin,
    pub hermitian_defect: f64,
    pub trace_defect: f64,
}

impl FieldPoint {
    pub fn norm_defect(&self) -> f64 {
        (norm3(&self.m) - 1.0).abs()
    }

    /// `|det M + 1|`.
    pub fn det_defect(&self) -> f64 {
        let s = &self.sigma;
        (s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)] + 1.0).norm()
    }

    /// `max(||H^H H - I||, |det H - 1|)`.
    pub fn unitarity_defect(&self) -> f64 {
        let h = &self.h;
        let gram = &h.adjoint() * h;
        let det = h[(0, 0)] * h[(1, 1)] - h[(0, 1)] * h[(1, 0)];
        gram.max_abs_diff(&CMatrix::identity(2)).max((det - 1.0).norm())
    }

    pub fn boundary_defect(&self) -> f64 {
        dist3(&self.m, &E3)
    }
}

pub(crate) fn norm3(v: &Spin) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub(crate) fn dist3(a: &Spin, b: &Spin) -> f64 {
    norm3(&[a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}

/// Full reconstruction at one position for an embedded system.
pub fn field_point(sys: &BlockSystem, z: f64) -> Result<FieldPoint> {
    let wrap = |e: Error| Error::Reconstruction {
        z,
        t: sys.t(),
        source: Box::new(e),
    };
    let ltilde = eval_ltilde(sys, z).map_err(wrap)?;
    let f = &CMatrix::identity(2) + &ltilde;
    let h = linalg::inverse(&f).map_err(wrap)?;
    let sigma = &(&h * &pauli::sigma3()) * &f;
    let ex = extract_m_with(&sigma, sys.tolerances().hermitian).map_err(wrap)?;
    Ok(FieldPoint {
        z,
        ltilde,
        h,
        sigma,
        m: ex.m,
        hermitian_defect: ex.hermitian_defect,
        trace_defect: ex.trace_defect,
    })
}

/// `m(z)` for an embedded system.
pub fn magnetization(sys: &BlockSystem, z: f64) -> Result<Spin> {
    Ok(field_point(sys, z)?.m)
}

/// Samples of `m(z, t)` on a tensor grid, stored time-major.
#[derive(Debug, Clone, Serialize)]
pub struct MagnetizationField {
    pub z_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub samples: Vec<Spin>,
    #[serde(skip)]
    pub meta: SpectralData,
    pub max_hermitian_defect: f64,
    pub max_trace_defect: f64,
}

impl MagnetizationField {
    pub fn at(&self, ti: usize, zi: usize) -> Spin {
        self.samples[ti * self.z_grid.len() + zi]
    }

    /// Samples at time index `ti`.
    pub fn slice(&self, ti: usize) -> &[Spin] {
        let nz = self.z_grid.len();
        &self.samples[ti * nz..(ti + 1) * nz]
    }

    /// `max | |m| - 1 |` over all samples.
    pub fn norm_defect(&self) -> f64 {
        self.samples
            .iter()
            .map(|m| (norm3(m) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `max |m - e3|` over the first and last `z` sample of every time slice.
    pub fn end_defect(&self) -> f64 {
        let nz = self.z_grid.len();
        (0..self.t_grid.len())
            .flat_map(|ti| [self.at(ti, 0), self.at(ti, nz - 1)])
            .map(|m| dist3(&m, &E3))
            .fold(0.0, f64::max)
    }
}

pub(crate) fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Grid(format!("{name} grid is empty")));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::Grid(format!("{name} grid has non-finite values")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Grid(format!("{name} grid is not strictly increasing")));
    }
    Ok(())
}

/// Evaluates `m(z, t)` on `z_grid x t_grid`.
pub fn field_on_grid(sd: &SpectralData, z_grid: &[f64], t_grid: &[f64]) -> Result<MagnetizationField> {
    field_on_grid_with(sd, z_grid, t_grid, &Tolerances::default())
}

pub fn field_on_grid_with(
    sd: &SpectralData,
    z_grid: &[f64],
    t_grid: &[f64],
    tol: &Tolerances,
) -> Result<MagnetizationField> {
    check_grid("z", z_grid)?;
    check_grid("t", t_grid)?;
    let tr = realize_triplet(sd);
    let mut samples = Vec::with_capacity(z_grid.len() * t_grid.len());
    let mut max_hermitian_defect: f64 = 0.0;
    let mut max_trace_defect: f64 = 0.0;
    for &t in t_grid {
        let sys = embed_with(&tr, t, tol)?;
        let points = z_grid
            .par_iter()
            .map(|&z| field_point(&sys, z))
            .collect::<Result<Vec<_>>>()?;
        for p in points {
            max_hermitian_defect = max_hermitian_defect.max(p.hermitian_defect);
            max_trace_defect = max_trace_defect.max(p.trace_defect);
            samples.push(p.m);
        }
    }
    Ok(MagnetizationField {
        z_grid: z_grid.to_vec(),
        t_grid: t_grid.to_vec(),
        samples,
        meta: sd.clone(),
        max_hermitian_defect,
        max_trace_defect,
    })
}

/// `m3`, `m+ = m1 + i m2` and `m- = m1 - i m2` of the one-soliton solution with triplet
/// `(a, 1, c exp(-4 i t a^2))`.
pub fn one_soliton_components(a: Complex64, c: Complex64, z: f64, t: f64) -> (f64, Complex64, Complex64) {
    let ct = c * (Complex64::new(0.0, -4.0 * t) * a * a).exp();
    let p = a.re;
    let c2 = ct.norm_sqr();
    let k = c2 / (4.0 * p * p);
    let z0 = (ct.norm() / (2.0 * p)).ln() / (2.0 * p);
    let m3 = 1.0 - (2.0 * p * p / a.norm_sqr()) / (2.0 * p * (z - z0)).cosh().powi(2);

    // decay = e^{-4pz} / D and phase(b) = e^{-2bz} / D, rescaled by e^{4pz} when z < 0.
    let (decay, shift, d) = if z >= 0.0 {
        let x = (-4.0 * p * z).exp();
        let d = 1.0 + k * x;
        (x / d, 0.0, d)
    } else {
        let r = (4.0 * p * z).exp();
        let d = r + k;
        (1.0 / d, 4.0 * p * z, d)
    };
    let phase = |b: Complex64| (-2.0 * b * z + shift).exp() / d;
    let m_plus = -2.0 * ct.conj() / a.conj() * phase(a.conj()) * (1.0 - c2 / (2.0 * p * a.conj()) * decay);
    let m_minus = -2.0 * ct / a * phase(a) * (1.0 - c2 / (2.0 * p * a) * decay);
    (m3, m_plus, m_minus)
}

/// Closed-form one-soliton magnetization.
pub fn one_soliton_closed_form(a: Complex64, c: Complex64, z: f64, t: f64) -> Spin {
    let (m3, mp, mm) = one_soliton_components(a, c, z, t);
    let m1 = (mp + mm) / 2.0;
    let m2 = (mp - mm) / Complex64::new(0.0, 2.0);
    debug_assert!(m1.im.abs() < 1e-10 && m2.im.abs() < 1e-10);
    [m1.re, m2.re, m3]
}

fn check_poles(tr: &Triplet, lambda: Complex64, gate: f64) -> Result<()> {
    let i = Complex64::i();
    for a in tr.spectrum() {
        for pole in [i * a, -i * a.conj()] {
            let distance = (lambda - pole).norm();
            if distance < gate {
                return Err(Error::Pole { lambda, distance });
            }
        }
    }
    Ok(())
}

/// `Psi(z, lambda) exp(-i lambda z sigma3)` from the closed-form Marchenko solution.
pub fn jost_psi(sys: &BlockSystem, z: f64, lambda: Complex64) -> Result<CMatrix> {
    check_poles(sys.triplet(), lambda, sys.tolerances().pole)?;
    let point = field_point(sys, z)?;
    let q2 = 2 * sys.order();
    if q2 == 0 {
        return Ok(point.h);
    }
    let i = Complex64::i();
    let shifted = &CMatrix::identity(q2).scale(lambda)
        - &(&pauli::sigma3_block(sys.order()) * sys.script_a()).scale(i);
    let rhs = &linalg::solve(&shifted, sys.script_b())? * &pauli::sigma3();
    let x = apply_resolvent(sys, z, &rhs)?;
    let inner = &CMatrix::identity(2) - &(sys.script_c() * &x).scale(i);
    Ok(&point.h * &inner)
}

/// Transmission coefficient of a reflectionless triplet, through its Gram matrices.
#[derive(Debug, Clone)]
pub struct ScatteringCoeffs {
    triplet: Triplet,
    n_inv: CMatrix,
    q_inv: CMatrix,
    pole_gate: f64,
}

impl ScatteringCoeffs {
    pub fn new(tr: &Triplet) -> Result<Self> {
        Self::with_tolerances(tr, &Tolerances::default())
    }

    pub fn with_tolerances(tr: &Triplet, tol: &Tolerances) -> Result<Self> {
        let sys = embed_with(tr, 0.0, tol)?;
        Self::from_system(&sys)
    }

    /// Uses the (possibly time-evolved) triplet and Gram matrices of `sys`.
    pub fn from_system(sys: &BlockSystem) -> Result<Self> {
        let (n_inv, q_inv) = if sys.order() == 0 {
            (CMatrix::zeros(0, 0), CMatrix::zeros(0, 0))
        } else {
            (linalg::inverse(sys.n_gram())?, linalg::inverse(sys.q_gram())?)
        };
        Ok(Self {
            triplet: sys.triplet().clone(),
            n_inv,
            q_inv,
            pole_gate: sys.tolerances().pole,
        })
    }

    /// Zeros of `a` in the upper half plane, `i a_j`, with multiplicity.
    pub fn zeros(&self) -> Vec<Complex64> {
        self.triplet
            .spectrum()
            .into_iter()
            .map(|a| Complex64::i() * a)
            .collect()
    }

    /// Poles of `a`, `-i conj(a_j)`.
    pub fn poles(&self) -> Vec<Complex64> {
        self.triplet
            .spectrum()
            .into_iter()
            .map(|a| -Complex64::i() * a.conj())
            .collect()
    }

    fn check_pole(&self, lambda: Complex64) -> Result<()> {
        for pole in self.poles() {
            let distance = (lambda - pole).norm();
            if distance < self.pole_gate {
                return Err(Error::Pole { lambda, distance });
            }
        }
        Ok(())
    }

    fn shifted(&self, lambda: Complex64, sign: f64, adjoint: bool) -> CMatrix {
        let q = self.triplet.order();
        let a = if adjoint {
            self.triplet.a().adjoint()
        } else {
            self.triplet.a().clone()
        };
        &CMatrix::identity(q).scale(lambda) + &a.scale(Complex64::new(0.0, sign))
    }

    /// `a(lambda) = 1 - i C Q^-1 (lambda I + i A^H)^-1 C^H`.
    pub fn a(&self, lambda: Complex64) -> Result<Complex64> {
        self.check_pole(lambda)?;
        if self.triplet.order() == 0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        let tr = &self.triplet;
        let x = linalg::solve(&self.shifted(lambda, 1.0, true), &tr.c().adjoint())?;
        let v = &(tr.c() * &self.q_inv) * &x;
        Ok(1.0 - Complex64::i() * v[(0, 0)])
    }

    /// `a(lambda) = 1 - i B^H (lambda I + i A^H)^-1 N^-1 B`.
    pub fn a_alt(&self, lambda: Complex64) -> Result<Complex64> {
        self.check_pole(lambda)?;
        if self.triplet.order() == 0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        let tr = &self.triplet;
        let x = linalg::solve(&self.shifted(lambda, 1.0, true), &(&self.n_inv * tr.b()))?;
        let v = &tr.b().adjoint() * &x;
        Ok(1.0 - Complex64::i() * v[(0, 0)])
    }

    /// `conj(a(lambda))` for real `lambda`, as `1 + i B^H N^-1 (lambda I - i A)^-1 B`.
    pub fn a_conj(&self, lambda: f64) -> Result<Complex64> {
        if self.triplet.order() == 0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        let tr = &self.triplet;
        let lam = Complex64::new(lambda, 0.0);
        let x = linalg::solve(&self.shifted(lam, -1.0, false), tr.b())?;
        let v = &(&tr.b().adjoint() * &self.n_inv) * &x;
        Ok(1.0 + Complex64::i() * v[(0, 0)])
    }

    /// `conj(a(lambda))` for real `lambda`, as `1 + i C (lambda I - i A)^-1 Q^-1 C^H`.
    pub fn a_conj_alt(&self, lambda: f64) -> Result<Complex64> {
        if self.triplet.order() == 0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        let tr = &self.triplet;
        let lam = Complex64::new(lambda, 0.0);
        let x = linalg::solve(&self.shifted(lam, -1.0, false), &(&self.q_inv * &tr.c().adjoint()))?;
        let v = tr.c() * &x;
        Ok(1.0 + Complex64::i() * v[(0, 0)])
    }

    /// `det(lambda I - i A) / det(lambda I + i A^H)`.
    pub fn det_ratio(&self, lambda: Complex64) -> Result<Complex64> {
        self.check_pole(lambda)?;
        let num = linalg::det(&self.shifted(lambda, -1.0, false))?;
        let den = linalg::det(&self.shifted(lambda, 1.0, true))?;
        Ok(num / den)
    }

    /// `d/dlambda log det_ratio = tr (lambda I - i A)^-1 - tr (lambda I + i A^H)^-1`.
    fn log_derivative(&self, lambda: Complex64) -> Result<Complex64> {
        let num = linalg::Lu::factor_unchecked(&self.shifted(lambda, -1.0, false))?.inverse();
        let den = linalg::Lu::factor_unchecked(&self.shifted(lambda, 1.0, true))?.inverse();
        Ok(num.trace() - den.trace())
    }

    /// Refines a zero of the determinant ratio by Newton's method on its logarithmic
    /// derivative, with the multiplicity of the nearest eigenvalue.
    pub fn polish_zero(&self, guess: Complex64) -> Result<Complex64> {
        let zeros = self.zeros();
        let Some(nearest) = zeros
            .iter()
            .copied()
            .min_by(|x, y| (x - guess).norm().total_cmp(&(y - guess).norm()))
        else {
            return Err(Error::Internal("the vacuum transmission has no zeros".into()));
        };
        let multiplicity = zeros
            .iter()
            .filter(|z| (**z - nearest).norm() <= 1e-12 * (1.0 + nearest.norm()))
            .count() as f64;
        let mut lambda = guess;
        for _ in 0..50 {
            let g = match self.log_derivative(lambda) {
                Ok(g) if g.is_finite() && g.norm() > 0.0 => g,
                // Landed exactly on the zero.
                Ok(_) | Err(Error::Singular { .. }) => break,
                Err(e) => return Err(e),
            };
            let step = multiplicity / g;
            lambda -= step;
            if step.norm() <= 4.0 * f64::EPSILON * (1.0 + lambda.norm()) {
                break;
            }
        }
        Ok(lambda)
    }
}

/// `a(lambda)` of the triplet, through the Gram-matrix formula.
pub fn transmission(tr: &Triplet, lambda: Complex64) -> Result<Complex64> {
    ScatteringCoeffs::new(tr)?.a(lambda)
}
