//! Spectral data, its matrix-triplet realization and the block system built from it.
//!
//! A reflectionless kernel
//!
//! ```text
//! omega(w) = sum_j sum_{s < n_j} N_{js} w^s / s! exp(-a_j w)
//! ```
//!
//! is realized as `C exp(-w A) B`. Each eigenvalue contributes a Jordan-type block
//! `A_j = a_j I - J` (`J` the upper shift), `B_j = e_{n_j}` and
//! `C_j = (N_{j,n_j-1}, ..., N_{j,1}, N_{j,0})`, since `exp(w J) e_n` has entry
//! `w^(n-1-i) / (n-1-i)!` in row `i`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, SpectralDataError};
use crate::linalg::{self, CMatrix};
use crate::tolerances::Tolerances;

/// Smallest accepted real part of an eigenvalue parameter.
pub const MIN_REAL_PART: f64 = 1e-9;

/// One discrete eigenvalue `i a` with its norming constants `N_0 .. N_{n-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub a: Complex64,
    pub norming: Vec<Complex64>,
}

impl Eigenvalue {
    pub fn simple(a: Complex64, n: Complex64) -> Self {
        Self {
            a,
            norming: vec![n],
        }
    }

    pub fn multiplicity(&self) -> usize {
        self.norming.len()
    }
}

/// Validated reflectionless scattering data.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SpectralData {
    entries: Vec<Eigenvalue>,
}

impl SpectralData {
    pub fn new(entries: Vec<Eigenvalue>) -> std::result::Result<Self, SpectralDataError> {
        for (index, e) in entries.iter().enumerate() {
            let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
            if !finite(&e.a) || !e.norming.iter().all(finite) {
                return Err(SpectralDataError::NonFinite { index });
            }
            if e.a.re <= MIN_REAL_PART {
                return Err(SpectralDataError::NonPositiveRealPart { index, re: e.a.re });
            }
            match e.norming.last() {
                None => return Err(SpectralDataError::EmptyNorming { index }),
                Some(top) if top.norm() == 0.0 => {
                    return Err(SpectralDataError::ZeroLeadingNorming { index })
                }
                _ => {}
            }
            for (first, other) in entries[..index].iter().enumerate() {
                if (other.a - e.a).norm() <= 1e-12 * (1.0 + e.a.norm()) {
                    return Err(SpectralDataError::DuplicateEigenvalue {
                        first,
                        second: index,
                    });
                }
            }
        }
        Ok(Self { entries })
    }

    /// No eigenvalues: the constant field `e3`.
    pub fn vacuum() -> Self {
        Self::default()
    }

    /// One simple eigenvalue `i a` with norming constant `c`.
    pub fn one_soliton(a: Complex64, c: Complex64) -> std::result::Result<Self, SpectralDataError> {
        Self::new(vec![Eigenvalue::simple(a, c)])
    }

    pub fn entries(&self) -> &[Eigenvalue] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Realization dimension `q = sum_j n_j`.
    pub fn order(&self) -> usize {
        self.entries.iter().map(Eigenvalue::multiplicity).sum()
    }

    pub fn min_real_part(&self) -> Option<f64> {
        self.entries.iter().map(|e| e.a.re).reduce(f64::min)
    }

    /// Half-width beyond which every soliton tail has decayed below `exp(-40)`, i.e.
    /// `40 / (2 min Re a_j)`. Defaults to 20 for the vacuum.
    pub fn decay_half_width(&self) -> f64 {
        self.min_real_part().map_or(20.0, |p| 20.0 / p)
    }
}

/// Evolves the norming constants of simple eigenvalues, `N(t) = exp(-4 i a^2 t) N(0)`.
pub fn evolve_norming(sd: &SpectralData, t: f64) -> Result<SpectralData> {
    let entries = sd
        .entries
        .iter()
        .enumerate()
        .map(|(index, e)| {
            if e.multiplicity() != 1 {
                return Err(SpectralDataError::NotSimple {
                    index,
                    multiplicity: e.multiplicity(),
                });
            }
            let phase = (Complex64::new(0.0, -4.0 * t) * e.a * e.a).exp();
            Ok(Eigenvalue::simple(e.a, phase * e.norming[0]))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(SpectralData::new(entries)?)
}

/// Matrix triplet `(A, B, C)` with `A` upper triangular, `B` a column and `C` a row.
#[derive(Debug, Clone, PartialEq)]
pub struct Triplet {
    a: CMatrix,
    b: CMatrix,
    c: CMatrix,
}

impl Triplet {
    /// Wraps explicit matrices. `A` must be upper triangular with diagonal entries of
    /// positive real part, so its spectrum can be read off the diagonal.
    pub fn new(a: CMatrix, b: CMatrix, c: CMatrix) -> Result<Self> {
        let q = a.rows();
        if !a.is_square() || b.rows() != q || b.cols() != 1 || c.rows() != 1 || c.cols() != q {
            return Err(Error::Dimension {
                op: "Triplet::new",
                expected: format!("A {q}x{q}, B {q}x1, C 1x{q}"),
                found: format!(
                    "A {}x{}, B {}x{}, C {}x{}",
                    a.rows(),
                    a.cols(),
                    b.rows(),
                    b.cols(),
                    c.rows(),
                    c.cols()
                ),
            });
        }
        for i in 0..q {
            for j in 0..i {
                if a[(i, j)].norm() != 0.0 {
                    return Err(Error::Internal(format!(
                        "triplet matrix A must be upper triangular, found entry at ({i}, {j})"
                    )));
                }
            }
            if a[(i, i)].re <= MIN_REAL_PART {
                return Err(SpectralDataError::NonPositiveRealPart {
                    index: i,
                    re: a[(i, i)].re,
                }
                .into());
            }
        }
        Ok(Self { a, b, c })
    }

    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    pub fn b(&self) -> &CMatrix {
        &self.b
    }

    pub fn c(&self) -> &CMatrix {
        &self.c
    }

    pub fn order(&self) -> usize {
        self.a.rows()
    }

    /// Diagonal of `A`, i.e. its eigenvalues with multiplicity.
    pub fn spectrum(&self) -> Vec<Complex64> {
        (0..self.order()).map(|i| self.a[(i, i)]).collect()
    }

    pub fn min_real_part(&self) -> Option<f64> {
        self.spectrum().into_iter().map(|z| z.re).reduce(f64::min)
    }

    /// The triplet `(A, B, C exp(-4 i t A^2))` carrying the time dependence.
    pub fn evolved(&self, t: f64) -> Triplet {
        if t == 0.0 {
            return self.clone();
        }
        let a2 = &self.a * &self.a;
        let phase = linalg::mat_exp(&a2.scale(Complex64::new(0.0, -4.0 * t)))
            .expect("A is square");
        Triplet {
            a: self.a.clone(),
            b: self.b.clone(),
            c: &self.c * &phase,
        }
    }
}

impl Triplet {
    /// Diagonal similarity `(S^-1 A S, S^-1 B, C S)` that equalizes `|B|` and `|C|` on each
    /// chain of `A` linked by nonzero superdiagonal entries. The kernel is unchanged. Returns
    /// the scaled triplet and the diagonal of `S`.
    pub fn balanced(&self) -> (Triplet, Vec<f64>) {
        let q = self.order();
        let mut s = vec![1.0; q];
        let mut start = 0;
        while start < q {
            let mut end = start + 1;
            while end < q && self.a[(end - 1, end)].norm() > 0.0 {
                end += 1;
            }
            let nb = (start..end).map(|i| self.b[(i, 0)].norm_sqr()).sum::<f64>().sqrt();
            let nc = (start..end).map(|i| self.c[(0, i)].norm_sqr()).sum::<f64>().sqrt();
            if nb > 0.0 && nc > 0.0 {
                s[start..end].fill((nb / nc).sqrt());
            }
            start = end;
        }
        let mut a = self.a.clone();
        let mut b = self.b.clone();
        let mut c = self.c.clone();
        for i in 0..q {
            for j in i..q {
                a[(i, j)] *= s[j] / s[i];
            }
            b[(i, 0)] /= s[i];
            c[(0, i)] *= s[i];
        }
        (Triplet { a, b, c }, s)
    }
}

/// Builds the minimal triplet realizing the kernel of `sd`.
pub fn realize_triplet(sd: &SpectralData) -> Triplet {
    let q = sd.order();
    let mut a = CMatrix::zeros(q, q);
    let mut b = CMatrix::zeros(q, 1);
    let mut c = CMatrix::zeros(1, q);
    let mut offset = 0;
    for e in sd.entries() {
        let n = e.multiplicity();
        for i in 0..n {
            a[(offset + i, offset + i)] = e.a;
            if i + 1 < n {
                a[(offset + i, offset + i + 1)] = Complex64::new(-1.0, 0.0);
            }
            c[(0, offset + i)] = e.norming[n - 1 - i];
        }
        b[(offset + n - 1, 0)] = Complex64::new(1.0, 0.0);
        offset += n;
    }
    Triplet { a, b, c }
}

/// Kernel value `omega(w) = C exp(-w A) B`.
pub fn eval_omega(tr: &Triplet, w: f64) -> Complex64 {
    if tr.order() == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let e = linalg::mat_exp(&tr.a.scale_real(-w)).expect("A is square");
    (&(&tr.c * &e) * &tr.b)[(0, 0)]
}

/// The 2q-dimensional embedding of a triplet at a fixed time, with its Gram matrices.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    t: f64,
    triplet: Triplet,
    script_a: CMatrix,
    script_b: CMatrix,
    script_c: CMatrix,
    n_gram: CMatrix,
    q_gram: CMatrix,
    p: CMatrix,
    a_inv_b: CMatrix,
    scaling: Vec<f64>,
    min_re: f64,
    sylvester_residual: f64,
    symmetrization_defect: f64,
    tolerances: Tolerances,
}

/// Embeds `tr` at time `t` with default tolerances.
pub fn embed(tr: &Triplet, t: f64) -> Result<BlockSystem> {
    embed_with(tr, t, &Tolerances::default())
}

pub fn embed_with(tr: &Triplet, t: f64, tol: &Tolerances) -> Result<BlockSystem> {
    // Balancing keeps N and Q(t) comparably scaled when |C(t)| grows like exp(4 t Im a^2).
    let (evolved, scaling) = tr.evolved(t).balanced();
    let q = tr.order();
    let a = evolved.a();
    let a_h = a.adjoint();
    let b = evolved.b();
    let c = evolved.c();

    let lyap = |m: &CMatrix, r: &CMatrix| {
        linalg::solve_lyapunov(m, r).map_err(|e| Error::Internal(format!("Lyapunov solve failed: {e}")))
    };
    let n = lyap(a, &(b * &b.adjoint()))?;
    let qg = lyap(&a_h, &(&c.adjoint() * c))?;

    let zq = CMatrix::zeros(q, q);
    let z1 = CMatrix::zeros(q, 1);
    let zr = CMatrix::zeros(1, q);
    let script_a = CMatrix::block_diag(a, &a_h);
    let script_b = CMatrix::from_blocks(&[&[&z1, b], &[&-&c.adjoint(), &z1]])?;
    let script_c = CMatrix::from_blocks(&[&[c, &zr], &[&zr, &b.adjoint()]])?;
    let p = CMatrix::from_blocks(&[&[&zq, &n.x], &[&-&qg.x, &zq]])?;

    let bc = &script_b * &script_c;
    let residual = linalg::sylvester_residual(&script_a, &script_a, &bc, &p);
    let scale = bc.norm_fro().max(f64::MIN_POSITIVE);
    let relative = if q == 0 { 0.0 } else { residual / scale };
    if relative > tol.residual {
        return Err(Error::Internal(format!(
            "block Sylvester identity violated: relative residual {relative:.3e}"
        )));
    }

    let a_inv_b = if q == 0 {
        CMatrix::zeros(0, 2)
    } else {
        linalg::solve_linear_with(&script_a, &script_b, tol.pivot)?.x
    };

    Ok(BlockSystem {
        t,
        min_re: tr.min_real_part().unwrap_or(f64::INFINITY),
        triplet: evolved,
        scaling,
        script_a,
        script_b,
        script_c,
        n_gram: n.x,
        q_gram: qg.x,
        p,
        a_inv_b,
        sylvester_residual: relative,
        symmetrization_defect: n.symmetrization_defect.max(qg.symmetrization_defect),
        tolerances: *tol,
    })
}

impl BlockSystem {
    pub fn t(&self) -> f64 {
        self.t
    }

    /// The time-evolved triplet `(A, B, C(t))`, balanced by [`Triplet::balanced`]. All
    /// block matrices below refer to this realization.
    pub fn triplet(&self) -> &Triplet {
        &self.triplet
    }

    /// Diagonal of the balancing similarity `S`.
    pub fn scaling(&self) -> &[f64] {
        &self.scaling
    }

    /// `(N, Q(t))` in the unbalanced realization `(A, B, C exp(-4 i t A^2))`, i.e.
    /// `(S N S, S^-1 Q S^-1)`.
    pub fn unbalanced_grams(&self) -> (CMatrix, CMatrix) {
        let mut n = self.n_gram.clone();
        let mut q = self.q_gram.clone();
        for i in 0..self.scaling.len() {
            for j in 0..self.scaling.len() {
                n[(i, j)] *= self.scaling[i] * self.scaling[j];
                q[(i, j)] /= self.scaling[i] * self.scaling[j];
            }
        }
        (n, q)
    }

    pub fn order(&self) -> usize {
        self.triplet.order()
    }

    pub fn script_a(&self) -> &CMatrix {
        &self.script_a
    }

    pub fn script_b(&self) -> &CMatrix {
        &self.script_b
    }

    pub fn script_c(&self) -> &CMatrix {
        &self.script_c
    }

    /// Gram matrix `N`, solving `A N + N A^H = B B^H`.
    pub fn n_gram(&self) -> &CMatrix {
        &self.n_gram
    }

    /// Gram matrix `Q(t)`, solving `A^H Q + Q A = C(t)^H C(t)`.
    pub fn q_gram(&self) -> &CMatrix {
        &self.q_gram
    }

    /// `P(t) = [[0, N], [-Q(t), 0]]`.
    pub fn p(&self) -> &CMatrix {
        &self.p
    }

    /// `script_A^-1 script_B`.
    pub fn a_inv_b(&self) -> &CMatrix {
        &self.a_inv_b
    }

    pub fn min_real_part(&self) -> f64 {
        self.min_re
    }

    /// Relative residual of the block Sylvester identity at construction.
    pub fn sylvester_residual(&self) -> f64 {
        self.sylvester_residual
    }

    /// Largest Hermiticity defect of the raw Lyapunov solves.
    pub fn symmetrization_defect(&self) -> f64 {
        self.symmetrization_defect
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tolerances
    }

    /// `exp(s script_A) = diag(exp(s A), exp(s A)^H)` for real `s`.
    pub fn exp_script_a(&self, s: f64) -> CMatrix {
        let e = linalg::mat_exp(&self.triplet.a().scale_real(s)).expect("A is square");
        CMatrix::block_diag(&e, &e.adjoint())
    }

    /// Matrix kernel `Omega(w) = script_C exp(-w script_A) script_B`.
    pub fn omega_matrix(&self, w: f64) -> CMatrix {
        if self.order() == 0 {
            return CMatrix::zeros(2, 2);
        }
        &(&self.script_c * &self.exp_script_a(-w)) * &self.script_b
    }

    /// Block formula for `P^-1 = [[0, -Q^-1], [N^-1, 0]]`.
    pub fn p_inverse_blockwise(&self) -> Result<CMatrix> {
        let q = self.order();
        let zq = CMatrix::zeros(q, q);
        let n_inv = linalg::inverse(&self.n_gram)?;
        let q_inv = linalg::inverse(&self.q_gram)?;
        CMatrix::from_blocks(&[&[&zq, &-&q_inv], &[&n_inv, &zq]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn direct_kernel(sd: &SpectralData, w: f64) -> Complex64 {
        let mut sum = c(0.0, 0.0);
        for e in sd.entries() {
            let mut fact = 1.0;
            for (s, n) in e.norming.iter().enumerate() {
                if s > 0 {
                    fact *= s as f64;
                }
                sum += n * w.powi(s as i32) / fact * (-e.a * w).exp();
            }
        }
        sum
    }

    #[test]
    fn validation_errors() {
        let bad_re = SpectralData::new(vec![Eigenvalue::simple(c(-1.0, 0.0), c(1.0, 0.0))]);
        assert!(matches!(
            bad_re,
            Err(SpectralDataError::NonPositiveRealPart { index: 0, .. })
        ));
        let near_axis = SpectralData::new(vec![Eigenvalue::simple(c(1e-10, 1.0), c(1.0, 0.0))]);
        assert!(near_axis.is_err());
        let dup = SpectralData::new(vec![
            Eigenvalue::simple(c(1.0, 0.5), c(1.0, 0.0)),
            Eigenvalue::simple(c(1.0, 0.5), c(2.0, 0.0)),
        ]);
        assert_eq!(
            dup,
            Err(SpectralDataError::DuplicateEigenvalue {
                first: 0,
                second: 1
            })
        );
        let empty = SpectralData::new(vec![Eigenvalue {
            a: c(1.0, 0.0),
            norming: vec![],
        }]);
        assert_eq!(empty, Err(SpectralDataError::EmptyNorming { index: 0 }));
        let zero_top = SpectralData::new(vec![Eigenvalue {
            a: c(1.0, 0.0),
            norming: vec![c(1.0, 0.0), c(0.0, 0.0)],
        }]);
        assert_eq!(
            zero_top,
            Err(SpectralDataError::ZeroLeadingNorming { index: 0 })
        );
    }

    #[test]
    fn scalar_triplet() {
        let sd = SpectralData::one_soliton(c(1.0, 0.0), c(2.0, 0.0)).unwrap();
        let tr = realize_triplet(&sd);
        assert_eq!(tr.order(), 1);
        assert_eq!(tr.a()[(0, 0)], c(1.0, 0.0));
        assert_eq!(tr.b()[(0, 0)], c(1.0, 0.0));
        assert_eq!(tr.c()[(0, 0)], c(2.0, 0.0));
        assert!((eval_omega(&tr, 0.0) - 2.0).norm() < 1e-15);
        assert!((eval_omega(&tr, 1.0) - 2.0 / std::f64::consts::E).norm() < 1e-15);
    }

    #[test]
    fn double_eigenvalue_kernel() {
        let a = c(0.7, 0.4);
        let (n0, n1) = (c(1.0, -0.5), c(0.3, 2.0));
        let sd = SpectralData::new(vec![Eigenvalue {
            a,
            norming: vec![n0, n1],
        }])
        .unwrap();
        let tr = realize_triplet(&sd);
        assert_eq!(tr.order(), 2);
        for w in [0.0, 0.5, 1.0, 2.0] {
            let expected = (n0 + n1 * w) * (-a * w).exp();
            assert!((eval_omega(&tr, w) - expected).norm() < 1e-14, "w = {w}");
        }
        let direct = (n0 + n1) * (-a).exp();
        assert!((eval_omega(&tr, 1.0) - direct).norm() < 1e-14);
    }

    #[test]
    fn two_simple_eigenvalues_cancel_at_origin() {
        let sd = SpectralData::new(vec![
            Eigenvalue::simple(c(1.0, 0.0), c(1.0, 0.0)),
            Eigenvalue::simple(c(2.0, 0.0), c(-1.0, 0.0)),
        ])
        .unwrap();
        let tr = realize_triplet(&sd);
        assert_eq!(tr.order(), 2);
        assert!(eval_omega(&tr, 0.0).norm() < 1e-16);
        let w = 0.8f64;
        let expected = (-w).exp() - (-2.0 * w).exp();
        assert!((eval_omega(&tr, w) - expected).norm() < 1e-15);
    }

    #[test]
    fn triple_eigenvalue_matches_direct_sum() {
        let sd = SpectralData::new(vec![
            Eigenvalue {
                a: c(1.2, -0.3),
                norming: vec![c(0.5, 0.0), c(-1.0, 1.0), c(0.25, 0.5)],
            },
            Eigenvalue::simple(c(0.4, 0.9), c(0.0, 1.5)),
        ])
        .unwrap();
        let tr = realize_triplet(&sd);
        for k in 0..20 {
            let w = 0.5 * k as f64;
            let d = direct_kernel(&sd, w);
            assert!((eval_omega(&tr, w) - d).norm() <= 1e-12 * (1.0 + d.norm()));
        }
    }

    #[test]
    fn one_soliton_gram_matrices() {
        let sd = SpectralData::one_soliton(c(1.0, 0.0), c(2.0, 0.0)).unwrap();
        let tr = realize_triplet(&sd);
        for t in [0.0, 0.37, 2.0] {
            let sys = embed(&tr, t).unwrap();
            let (n, q) = sys.unbalanced_grams();
            assert!((n[(0, 0)] - 0.5).norm() < 1e-15);
            assert!((q[(0, 0)] - 2.0).norm() < 1e-13, "t = {t}");
            assert!((sys.n_gram()[(0, 0)] - sys.q_gram()[(0, 0)]).norm() < 1e-15);
            assert!(sys.sylvester_residual() < 1e-14);
        }
    }

    #[test]
    fn block_layout() {
        let sd = SpectralData::new(vec![
            Eigenvalue::simple(c(1.0, 0.2), c(1.0, 0.0)),
            Eigenvalue::simple(c(0.5, -0.4), c(0.0, 2.0)),
        ])
        .unwrap();
        let sys = embed(&realize_triplet(&sd), 0.5).unwrap();
        let q = 2;
        let p = sys.p();
        assert_eq!(p.block(0, 0, q, q), CMatrix::zeros(q, q));
        assert_eq!(p.block(q, q, q, q), CMatrix::zeros(q, q));
        assert_eq!(p.block(0, q, q, q), *sys.n_gram());
        assert_eq!(p.block(q, 0, q, q), -sys.q_gram());
        let sa = sys.script_a();
        assert_eq!(sa.block(q, q, q, q), sys.triplet().a().adjoint());
        let omega = sys.omega_matrix(0.7);
        let w = eval_omega(sys.triplet(), 0.7);
        assert!((omega[(0, 1)] - w).norm() < 1e-15);
        assert!((omega[(1, 0)] + w.conj()).norm() < 1e-15);
        assert_eq!(omega[(0, 0)], c(0.0, 0.0));
        assert!(linalg::cholesky_min_pivot(sys.n_gram()).is_some());
        assert!(linalg::cholesky_min_pivot(sys.q_gram()).is_some());
    }

    #[test]
    fn norming_evolution() {
        let a = c(1.0, 1.0) / 2f64.sqrt();
        let sd = SpectralData::one_soliton(a, c(1.0, 0.0)).unwrap();
        assert_eq!(evolve_norming(&sd, 0.0).unwrap(), sd);
        let n1 = evolve_norming(&sd, 1.0).unwrap().entries()[0].norming[0];
        assert!((n1 - 4f64.exp()).norm() < 1e-12 * 4f64.exp());

        let real = SpectralData::one_soliton(c(0.8, 0.0), c(0.0, 3.0)).unwrap();
        for t in [0.1, 1.0, 7.5] {
            let nt = evolve_norming(&real, t).unwrap().entries()[0].norming[0];
            assert!((nt.norm() - 3.0).abs() < 1e-14);
        }

        let double = SpectralData::new(vec![Eigenvalue {
            a: c(1.0, 0.0),
            norming: vec![c(1.0, 0.0), c(1.0, 0.0)],
        }])
        .unwrap();
        assert!(evolve_norming(&double, 1.0).is_err());
    }

    #[test]
    fn vacuum_embeds() {
        let sys = embed(&realize_triplet(&SpectralData::vacuum()), 0.0).unwrap();
        assert_eq!(sys.order(), 0);
        assert_eq!(sys.omega_matrix(1.0), CMatrix::zeros(2, 2));
    }
}
