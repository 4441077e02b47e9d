//! Eigenbases of the generalized Pauli operators.
//!
//! The analytic construction: with `f = gcd(k, d)`, every eigenvector of
//! `S_kl` lives on one residue class `{a + ηk}` (`a ∈ [0, f)`, `η ∈ [0, d/f)`)
//! of the `S_z` basis, and is indexed by `(g, a)` with `g ∈ [0, d/f)`:
//!
//! ```text
//! |j_{g,a}⟩ = (d/f)^{-1/2} Σ_η λ_{g,0}^{-η} α_d^{η(η-1)kl/2} |a + ηk⟩
//! λ_{g,a}   = e^{iφ} α_d^{gf + al},    e^{iφ} = exp(iπ·kl(d/f − 1)/d)
//! ```
//!
//! All phases are exact half-unit exponents (see [`crate::algebra::Root`]).
//! [`numeric_eigensystem`] is an independent brute-force diagonalizer used
//! to cross-check the construction.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{modulo, pauli_matrix, PauliLabel, Root};
use crate::error::{Error, Result};
use crate::matrix::{complex_serde, complex_vec_serde, gram, inner, outer, ComplexMatrix, ZERO};

/// One eigenpair. `g`/`a` are present for analytic systems only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<usize>,
    #[serde(with = "complex_serde")]
    pub eigenvalue: Complex64,
    #[serde(with = "complex_vec_serde")]
    pub vector: Vec<Complex64>,
}

/// Ordered eigenpairs of a `d × d` unitary.
///
/// Analytic systems are stored at position `a·(d/f) + g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSystem {
    pub d: usize,
    pub pairs: Vec<EigenPair>,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.pairs.iter().map(|p| p.eigenvalue).collect()
    }

    pub fn vectors(&self) -> Vec<Vec<Complex64>> {
        self.pairs.iter().map(|p| p.vector.clone()).collect()
    }

    /// List position of the pair indexed `(g, a)`, if present.
    pub fn position(&self, g: usize, a: usize) -> Option<usize> {
        self.pairs
            .iter()
            .position(|p| p.g == Some(g) && p.a == Some(a))
    }

    /// Matrix `V` whose columns are the eigenvectors.
    pub fn vector_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_columns(&self.vectors()).expect("non-empty system")
    }

    /// Pairs sorted by eigenvalue argument in `[0, 2π)`, ties kept in storage order.
    pub fn phase_sorted(&self) -> Vec<&EigenPair> {
        let mut v: Vec<&EigenPair> = self.pairs.iter().collect();
        v.sort_by(|x, y| phase_angle(x.eigenvalue).total_cmp(&phase_angle(y.eigenvalue)));
        v
    }

    /// `‖V†V − I‖_max`.
    pub fn orthonormality_deviation(&self) -> f64 {
        gram(&self.vectors()).max_abs_diff(&ComplexMatrix::identity(self.len()))
    }

    /// `max_j ‖M v_j − λ_j v_j‖₂`.
    pub fn max_residual(&self, m: &ComplexMatrix) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for p in &self.pairs {
            let mv = m.mul_vec(&p.vector)?;
            let r: f64 = mv
                .iter()
                .zip(&p.vector)
                .map(|(x, v)| (x - p.eigenvalue * v).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst = worst.max(r);
        }
        Ok(worst)
    }

    /// `V D V†`.
    pub fn reassemble(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.d, self.d);
        for p in &self.pairs {
            out = out
                .add(&outer(&p.vector, &p.vector).scale(p.eigenvalue))
                .expect("same shape");
        }
        out
    }
}

/// Argument mapped to `[0, 2π)`, with values within 1e-12 of 2π folded to 0.
pub fn phase_angle(z: Complex64) -> f64 {
    let mut t = z.arg();
    if t < 0.0 {
        t += 2.0 * PI;
    }
    if (2.0 * PI - t) < 1e-12 {
        t = 0.0;
    }
    t
}

/// Exact eigenvalue data for one label.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSpec {
    pub label: PauliLabel,
    /// `e^{iφ} = λ_{0,0}`.
    pub base_phase: Root,
    /// `λ_{g,a}` keyed by `(g, a)`.
    pub eigenvalues: BTreeMap<(usize, usize), Root>,
}

/// Exact eigenvalues `λ_{g,a} = e^{iφ} α_d^{gf + al}`.
pub fn eigen_spec(label: PauliLabel) -> EigenSpec {
    let d = label.d();
    let f = label.f();
    let base = base_exponent(label);
    let base_phase = Root::new(d, base).expect("d > 0");
    let mut eigenvalues = BTreeMap::new();
    for a in 0..f {
        for g in 0..d / f {
            let num = base + 2 * (g * f + a * label.l()) as i64;
            eigenvalues.insert((g, a), Root::new(d, num).expect("d > 0"));
        }
    }
    EigenSpec {
        label,
        base_phase,
        eigenvalues,
    }
}

/// Half-unit exponent of `e^{iφ}`: `k·l·(d/f − 1)`.
fn base_exponent(label: PauliLabel) -> i64 {
    let m = 2 * label.d() as i64;
    modulo(
        (label.k() * label.l()) as i64 * (label.orbit() as i64 - 1),
        m,
    )
}

/// Exact eigenvalue `λ_{g,a}` as a root of unity.
pub fn eigenvalue_root(label: PauliLabel, g: usize, a: usize) -> Result<Root> {
    let f = label.f();
    if a >= f || g >= label.orbit() {
        return Err(Error::InvalidIndex { g, a });
    }
    Root::new(
        label.d(),
        base_exponent(label) + 2 * (g * f + a * label.l()) as i64,
    )
}

/// Coefficients of `|j_{g,a}⟩` as `(S_z index, half-unit phase)`; the common
/// amplitude is `(d/f)^{-1/2}`.
pub fn eigenvector_phases(label: PauliLabel, g: usize, a: usize) -> Result<Vec<(usize, i64)>> {
    let d = label.d();
    let f = label.f();
    let orbit = label.orbit();
    if a >= f || g >= orbit {
        return Err(Error::InvalidIndex { g, a });
    }
    let m = 2 * d as i64;
    let lambda0 = base_exponent(label) + 2 * (g * f) as i64;
    let kl = (label.k() * label.l()) as i64;
    Ok((0..orbit)
        .map(|eta| {
            let eta_i = eta as i64;
            let phase = modulo(-eta_i * lambda0 + eta_i * (eta_i - 1) * kl, m);
            ((a + eta * label.k()) % d, phase)
        })
        .collect())
}

/// The analytic eigenvector `|j_{g,a}⟩` in the `S_z` basis.
pub fn analytic_eigenvector(label: PauliLabel, g: usize, a: usize) -> Result<Vec<Complex64>> {
    let d = label.d();
    let amp = 1.0 / (label.orbit() as f64).sqrt();
    let mut v = vec![ZERO; d];
    for (pos, phase) in eigenvector_phases(label, g, a)? {
        v[pos] = Root::new(d, phase)?.value() * amp;
    }
    Ok(v)
}

/// Full analytic eigensystem, ordered by `a·(d/f) + g`.
pub fn analytic_eigensystem(label: PauliLabel) -> EigenSystem {
    let d = label.d();
    let f = label.f();
    let orbit = label.orbit();
    let mut pairs = Vec::with_capacity(d);
    for a in 0..f {
        for g in 0..orbit {
            pairs.push(EigenPair {
                g: Some(g),
                a: Some(a),
                eigenvalue: eigenvalue_root(label, g, a).expect("valid index").value(),
                vector: analytic_eigenvector(label, g, a).expect("valid index"),
            });
        }
    }
    EigenSystem { d, pairs }
}

/// `α_d^{−x}`, `x = (kl/2)(d/f − 1)`; rotates the spectrum of `S_kl` onto the
/// `d`-th roots of unity.
pub fn phase_normalizer(label: PauliLabel) -> Root {
    Root::new(label.d(), -base_exponent(label)).expect("d > 0")
}

/// `max_m |Σ_j λ_j v_{k+m,j} v*_{m,j} − α_d^{ml}|`.
pub fn eigencondition_check(label: PauliLabel, system: &EigenSystem) -> Result<f64> {
    let d = label.d();
    if system.d != d || system.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: system.d,
        });
    }
    let mut worst: f64 = 0.0;
    for m in 0..d {
        let r = (m + label.k()) % d;
        let sum: Complex64 = system
            .pairs
            .iter()
            .map(|p| p.eigenvalue * p.vector[r] * p.vector[m].conj())
            .sum();
        let target = Root::alpha_pow(d, (m * label.l()) as i64)?.value();
        worst = worst.max((sum - target).norm());
    }
    Ok(worst)
}

/// Tolerance on `M M† − I` accepted by [`numeric_eigensystem`].
pub const UNITARY_TOL: f64 = 1e-10;

/// Gap below which two eigenvalues of the Hermitian part are treated as one
/// cluster before the anti-Hermitian part separates them.
const CLUSTER_GAP: f64 = 1e-7;

/// Brute-force eigendecomposition of a unitary matrix.
///
/// Diagonalizes the Hermitian part `(M + M†)/2`, then diagonalizes the
/// anti-Hermitian part `(M − M†)/2i` restricted to each (near-)degenerate
/// eigenspace of the first. Both parts commute for a normal matrix, so the
/// resulting vectors are eigenvectors of `M`.
pub fn numeric_eigensystem(m: &ComplexMatrix) -> Result<EigenSystem> {
    if !m.is_square() {
        return Err(Error::NotSquare(m.rows(), m.cols()));
    }
    let dev = m.unitarity_deviation();
    if dev > UNITARY_TOL {
        return Err(Error::NotUnitary(dev));
    }
    let n = m.rows();
    let a = m.to_nalgebra();
    let adj = a.adjoint();
    let half = Complex64::new(0.5, 0.0);
    let herm = (&a + &adj) * half;
    let anti = (&a - &adj) * Complex64::new(0.0, -0.5);

    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let mut vectors: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eig.eigenvalues[order[end]] - eig.eigenvalues[order[end - 1]] < CLUSTER_GAP
        {
            end += 1;
        }
        let cols: Vec<usize> = order[start..end].to_vec();
        let q = DMatrix::from_fn(n, cols.len(), |r, c| eig.eigenvectors[(r, cols[c])]);
        if cols.len() == 1 {
            vectors.push(q.column(0).iter().copied().collect());
        } else {
            let sub = q.adjoint() * &anti * &q;
            let sub = (&sub + sub.adjoint()) * half;
            let inner_eig = SymmetricEigen::new(sub);
            let rotated = &q * &inner_eig.eigenvectors;
            for c in 0..cols.len() {
                vectors.push(rotated.column(c).iter().copied().collect());
            }
        }
        start = end;
    }

    let pairs = vectors
        .into_iter()
        .map(|v| {
            let mv = m.mul_vec(&v).expect("square");
            let lambda = inner(&v, &mv);
            let lambda = lambda / lambda.norm();
            EigenPair {
                g: None,
                a: None,
                eigenvalue: lambda,
                vector: v,
            }
        })
        .collect();
    Ok(EigenSystem { d: n, pairs })
}

/// Tolerance used by [`spectral_equivalence`].
pub const SPECTRAL_TOL: f64 = 1e-9;

/// Distinct eigenvalues closer than this are grouped into one eigenspace.
const EIGENSPACE_GROUPING: f64 = 1e-6;

fn eigenspaces(system: &EigenSystem) -> Vec<(Complex64, Vec<usize>)> {
    let mut groups: Vec<(Complex64, Vec<usize>)> = Vec::new();
    for (i, p) in system.pairs.iter().enumerate() {
        match groups
            .iter_mut()
            .find(|(c, _)| (c - p.eigenvalue).norm() < EIGENSPACE_GROUPING)
        {
            Some((_, members)) => members.push(i),
            None => groups.push((p.eigenvalue, vec![i])),
        }
    }
    groups
}

fn projector(system: &EigenSystem, members: &[usize]) -> ComplexMatrix {
    let mut p = ComplexMatrix::zeros(system.d, system.d);
    for &i in members {
        let v = &system.pairs[i].vector;
        p = p.add(&outer(v, v)).expect("same shape");
    }
    p
}

/// Degeneracy-safe comparison of two eigensystems: equal eigenvalue
/// multisets and equal eigenspace projectors, both within `tol`.
pub fn spectral_equivalence_with_tol(a: &EigenSystem, b: &EigenSystem, tol: f64) -> Result<bool> {
    if a.d != b.d || a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.d,
            got: b.d,
        });
    }
    let spaces_a = eigenspaces(a);
    let spaces_b = eigenspaces(b);
    if spaces_a.len() != spaces_b.len() {
        return Ok(false);
    }
    for (center, members_a) in &spaces_a {
        let Some((_, members_b)) = spaces_b
            .iter()
            .find(|(c, _)| (c - center).norm() < EIGENSPACE_GROUPING)
        else {
            return Ok(false);
        };
        if members_a.len() != members_b.len() {
            return Ok(false);
        }
        let spread = members_a
            .iter()
            .map(|&i| a.pairs[i].eigenvalue)
            .chain(members_b.iter().map(|&i| b.pairs[i].eigenvalue))
            .map(|z| (z - center).norm())
            .fold(0.0, f64::max);
        if spread > tol {
            return Ok(false);
        }
        if projector(a, members_a).max_abs_diff(&projector(b, members_b)) > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn spectral_equivalence(a: &EigenSystem, b: &EigenSystem) -> Result<bool> {
    spectral_equivalence_with_tol(a, b, SPECTRAL_TOL)
}

/// Analytic-vs-numeric comparison for one label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub label: PauliLabel,
    pub equivalent: bool,
    pub eigencondition_error: f64,
    pub analytic_residual: f64,
    pub numeric_residual: f64,
    pub orthonormality_error: f64,
}

pub fn check_label(label: PauliLabel) -> Result<CheckReport> {
    let m = pauli_matrix(label);
    let analytic = analytic_eigensystem(label);
    let numeric = numeric_eigensystem(&m)?;
    Ok(CheckReport {
        label,
        equivalent: spectral_equivalence(&analytic, &numeric)?,
        eigencondition_error: eigencondition_check(label, &analytic)?,
        analytic_residual: analytic.max_residual(&m)?,
        numeric_residual: numeric.max_residual(&m)?,
        orthonormality_error: analytic.orthonormality_deviation(),
    })
}
