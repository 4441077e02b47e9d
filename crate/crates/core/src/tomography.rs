//! State tomography in the `S_kl` operator basis.
//!
//! A state is expanded as `ρ = (1/d) Σ s_kl S_kl` with `s_kl = Tr(S_kl† ρ)`.
//! Measuring `S_kl` in its analytic eigenbasis gives outcome probabilities
//! `p_j`, and `s_kl = Σ_j λ_j* p_j`. [`reconstruct`] applies this to observed
//! frequencies and projects the result back onto the set of physical states.

use std::collections::BTreeMap;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{power, PauliLabel, Root};
use crate::eigensolver::{analytic_eigensystem, eigenvalue_root, EigenSystem};
use crate::error::{Error, Result};
use crate::matrix::{inner, outer, ComplexMatrix, ONE, ZERO};
use crate::random::substream;

/// Tolerance for the Hermiticity, trace and positivity checks.
pub const STATE_TOL: f64 = 1e-10;

/// A validated density matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    SymmetricEigen::new(m.to_nalgebra())
        .eigenvalues
        .iter()
        .copied()
        .collect()
}

impl DensityMatrix {
    /// Checks Hermiticity, unit trace and positivity within [`STATE_TOL`].
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare(matrix.rows(), matrix.cols()));
        }
        let herm = matrix.hermiticity_deviation();
        if herm > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {herm:.3e})"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min = hermitian_eigenvalues(&matrix)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(DensityMatrix { matrix })
    }

    pub fn from_pure(psi: &[Complex64]) -> Result<Self> {
        let n: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (n - 1.0).abs() > STATE_TOL {
            return Err(Error::Unnormalized(n));
        }
        Self::new(outer(psi, psi))
    }

    pub fn maximally_mixed(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok(DensityMatrix {
            matrix: ComplexMatrix::identity(d).scale(Complex64::new(1.0 / d as f64, 0.0)),
        })
    }

    pub fn d(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// Hermitize, clip negative eigenvalues to zero, renormalize the trace.
    pub fn project(m: &ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare(m.rows(), m.cols()));
        }
        let half = Complex64::new(0.5, 0.0);
        let h = m.add(&m.adjoint())?.scale(half);
        let eig = SymmetricEigen::new(h.to_nalgebra());
        let n = m.rows();
        let clipped: Vec<f64> = eig.eigenvalues.iter().map(|&x| x.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        if total <= 0.0 {
            return Self::maximally_mixed(n);
        }
        let mut out = ComplexMatrix::zeros(n, n);
        for (i, &w) in clipped.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let v: Vec<Complex64> = eig.eigenvectors.column(i).iter().copied().collect();
            out = out.add(&outer(&v, &v).scale(Complex64::new(w / total, 0.0)))?;
        }
        // exact Hermitian symmetry
        let out = out.add(&out.adjoint())?.scale(half);
        Ok(DensityMatrix { matrix: out })
    }
}

/// `½ Σ |eig(ρ − σ)|`.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let diff = a.sub(b)?;
    let h = diff.add(&diff.adjoint())?.scale(Complex64::new(0.5, 0.0));
    Ok(0.5
        * hermitian_eigenvalues(&h)
            .iter()
            .map(|x| x.abs())
            .sum::<f64>())
}

/// Expansion coefficients `s_kl` of a state; `s_00 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    d: usize,
    s: BTreeMap<(usize, usize), Complex64>,
}

impl CoefficientTable {
    /// Missing entries are zero. `s_00` must be exactly 1.
    pub fn new(d: usize, s: BTreeMap<(usize, usize), Complex64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        if let Some(&(k, l)) = s.keys().find(|&&(k, l)| k >= d || l >= d) {
            return Err(Error::InvalidLabel { d, k, l });
        }
        match s.get(&(0, 0)) {
            Some(&v) if v == ONE => {}
            other => {
                return Err(Error::InvalidParameter(format!(
                    "s_00 must be 1, got {other:?}"
                )))
            }
        }
        Ok(CoefficientTable { d, s })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.s.get(&(k, l)).copied().unwrap_or(ZERO)
    }

    pub fn entries(&self) -> &BTreeMap<(usize, usize), Complex64> {
        &self.s
    }
}

/// `Tr(S_kl† ρ) = Σ_m α_d^{−ml} ρ_{m+k, m}`.
fn pauli_overlap(label: PauliLabel, m: &ComplexMatrix) -> Complex64 {
    let d = label.d();
    (0..d)
        .map(|col| {
            let phase = Root::alpha_pow(d, -((col * label.l()) as i64))
                .expect("d > 0")
                .value();
            phase * m[((col + label.k()) % d, col)]
        })
        .sum()
}

pub fn coefficients_from_state(rho: &DensityMatrix) -> CoefficientTable {
    let d = rho.d();
    let mut s = BTreeMap::new();
    for label in PauliLabel::all(d).expect("d > 0") {
        let v = if label.is_identity() {
            ONE
        } else {
            pauli_overlap(label, rho.matrix())
        };
        s.insert((label.k(), label.l()), v);
    }
    CoefficientTable { d, s }
}

/// `(1/d) Σ s_kl S_kl` without any physicality check.
pub fn matrix_from_coefficients(table: &CoefficientTable) -> ComplexMatrix {
    let d = table.d;
    let mut out = ComplexMatrix::zeros(d, d);
    let inv_d = 1.0 / d as f64;
    for (&(k, l), &s) in &table.s {
        if s == ZERO {
            continue;
        }
        for col in 0..d {
            let phase = Root::alpha_pow(d, (col * l) as i64).expect("d > 0").value();
            out[((col + k) % d, col)] += s * phase * inv_d;
        }
    }
    out
}

/// Assembles the state from its coefficients; non-physical results are errors.
pub fn state_from_coefficients(table: &CoefficientTable) -> Result<DensityMatrix> {
    DensityMatrix::new(matrix_from_coefficients(table))
}

/// Outcome probabilities of one `S_kl` measurement, indexed like the analytic
/// eigensystem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub label: PauliLabel,
    pub p: Vec<f64>,
}

fn probabilities_in(system: &EigenSystem, rho: &ComplexMatrix) -> Vec<f64> {
    system
        .pairs
        .iter()
        .map(|pair| {
            let rv = rho.mul_vec(&pair.vector).expect("dimensions checked");
            inner(&pair.vector, &rv).re.max(0.0)
        })
        .collect()
}

/// `p_j = ⟨j|ρ|j⟩` over the analytic eigenbasis of `label`.
pub fn measurement_probabilities(
    label: PauliLabel,
    rho: &DensityMatrix,
) -> Result<OutcomeDistribution> {
    if rho.d() != label.d() {
        return Err(Error::DimensionMismatch {
            expected: label.d(),
            got: rho.d(),
        });
    }
    Ok(OutcomeDistribution {
        label,
        p: probabilities_in(&analytic_eigensystem(label), rho.matrix()),
    })
}

/// Multinomial sample of `n` outcomes, deterministic in `seed`.
pub fn sample_outcomes(dist: &OutcomeDistribution, n: u64, seed: u64) -> Vec<u64> {
    sample_with(&dist.p, n, &mut crate::random::rng_from_seed(seed))
}

/// Sequential-binomial multinomial draw.
pub fn sample_with<R: Rng + ?Sized>(p: &[f64], n: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; p.len()];
    let mut remaining = n;
    let mut mass: f64 = p.iter().map(|x| x.max(0.0)).sum();
    for (i, &pi) in p.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let pi = pi.max(0.0);
        if i + 1 == p.len() {
            counts[i] = remaining;
            break;
        }
        let q = if mass > 0.0 {
            (pi / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let draw = Binomial::new(remaining, q)
            .expect("q in [0, 1]")
            .sample(rng);
        counts[i] = draw;
        remaining -= draw;
        mass -= pi;
    }
    counts
}

/// Observed relative frequencies per label.
#[derive(Debug, Clone, PartialEq)]
pub struct Frequencies {
    pub d: usize,
    pub records: BTreeMap<(usize, usize), Vec<f64>>,
}

/// File form: `{ "d": d, "records": [ { "k", "l", "counts": [...] } ] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyFile {
    pub d: usize,
    pub records: Vec<CountRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub k: usize,
    pub l: usize,
    /// Raw counts; non-integer values (exact probabilities) are accepted.
    pub counts: Vec<f64>,
}

impl FrequencyFile {
    /// Normalizes counts to relative frequencies.
    pub fn to_frequencies(&self) -> Result<Frequencies> {
        let mut records = BTreeMap::new();
        for r in &self.records {
            PauliLabel::new(self.d, r.k, r.l)?;
            if r.counts.len() != self.d {
                return Err(Error::DimensionMismatch {
                    expected: self.d,
                    got: r.counts.len(),
                });
            }
            if r.counts.iter().any(|&c| !c.is_finite() || c < 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "counts for ({}, {}) must be finite and non-negative",
                    r.k, r.l
                )));
            }
            let total: f64 = r.counts.iter().sum();
            if total <= 0.0 {
                return Err(Error::BadFrequencies {
                    k: r.k,
                    l: r.l,
                    sum: total,
                });
            }
            records.insert((r.k, r.l), r.counts.iter().map(|c| c / total).collect());
        }
        Ok(Frequencies { d: self.d, records })
    }
}

/// Coefficient of `target` from the statistics of `measured`, provided
/// `target` is (up to phase) a power of `measured`.
fn coefficient_via(measured: PauliLabel, target: PauliLabel, freq: &[f64]) -> Option<Complex64> {
    let d = measured.d();
    let order = (1..=d).find(|&m| power(measured, m).label.is_identity())?;
    let m = (1..order).find(|&m| power(measured, m).label == target)?;
    let prod = power(measured, m);
    let phase_inv = prod.phase_root().inv();
    let system_order = (0..measured.f()).flat_map(|a| (0..measured.orbit()).map(move |g| (g, a)));
    Some(
        system_order
            .zip(freq)
            .map(|((g, a), &fj)| {
                let lam = eigenvalue_root(measured, g, a).expect("valid index");
                let mu = lam.pow(m as i64).mul(&phase_inv).expect("same d");
                mu.inv().value() * fj
            })
            .sum(),
    )
}

/// Linear-inversion estimate of every `s_kl` from observed frequencies.
///
/// A label without its own record is recovered from any measured label of
/// which it is a power (same eigenbasis).
pub fn estimate_coefficients(freqs: &Frequencies) -> Result<CoefficientTable> {
    let d = freqs.d;
    for (&(k, l), f) in &freqs.records {
        PauliLabel::new(d, k, l)?;
        if f.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: f.len(),
            });
        }
        let sum: f64 = f.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::BadFrequencies { k, l, sum });
        }
    }
    let labels = PauliLabel::non_identity(d)?;
    let estimates: Vec<((usize, usize), Complex64)> = labels
        .par_iter()
        .map(|&target| {
            let key = (target.k(), target.l());
            if let Some(f) = freqs.records.get(&key) {
                if let Some(s) = coefficient_via(target, target, f) {
                    return Ok((key, s));
                }
            }
            freqs
                .records
                .iter()
                .find_map(|(&(k, l), f)| {
                    let measured = PauliLabel::new(d, k, l).ok()?;
                    coefficient_via(measured, target, f)
                })
                .map(|s| (key, s))
                .ok_or(Error::MissingLabel { k: key.0, l: key.1 })
        })
        .collect::<Result<_>>()?;
    let mut s: BTreeMap<(usize, usize), Complex64> = estimates.into_iter().collect();
    s.insert((0, 0), ONE);
    CoefficientTable::new(d, s)
}

/// Reconstructs a physical state from observed frequencies.
pub fn reconstruct(freqs: &Frequencies) -> Result<DensityMatrix> {
    let table = estimate_coefficients(freqs)?;
    DensityMatrix::project(&matrix_from_coefficients(&table))
}

/// Exact outcome probabilities for every non-identity label.
pub fn exact_frequencies(rho: &DensityMatrix) -> Frequencies {
    let d = rho.d();
    let records = PauliLabel::non_identity(d)
        .expect("d > 0")
        .par_iter()
        .map(|&label| {
            let p = measurement_probabilities(label, rho).expect("same d").p;
            let total: f64 = p.iter().sum();
            (
                (label.k(), label.l()),
                p.iter().map(|x| x / total).collect(),
            )
        })
        .collect();
    Frequencies { d, records }
}

/// Simulated counts for every non-identity label, `n` shots each. Label `i`
/// (in lexicographic order) draws from substream `i` of `seed`.
pub fn simulate_counts(rho: &DensityMatrix, n: u64, seed: u64) -> FrequencyFile {
    let d = rho.d();
    let labels = PauliLabel::non_identity(d).expect("d > 0");
    let records = labels
        .par_iter()
        .enumerate()
        .map(|(i, &label)| {
            let dist = measurement_probabilities(label, rho).expect("same d");
            let counts = sample_with(&dist.p, n, &mut substream(seed, i as u64));
            CountRecord {
                k: label.k(),
                l: label.l(),
                counts: counts.into_iter().map(|c| c as f64).collect(),
            }
        })
        .collect();
    FrequencyFile { d, records }
}

/// A member of a commuting family: `S_label = e^{−iπ·phase/d} · G^power`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyMember {
    pub label: PauliLabel,
    pub power: usize,
    pub phase: i64,
}

/// Labels sharing the eigenbasis of one generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutingFamily {
    pub generator: PauliLabel,
    pub members: Vec<FamilyMember>,
}

/// Greedy partition of the non-identity labels: in lexicographic order, each
/// unassigned label becomes a generator and claims its unassigned powers.
pub fn commuting_families(d: usize) -> Result<Vec<CommutingFamily>> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "dimension must be at least 2, got {d}"
        )));
    }
    let mut assigned = std::collections::BTreeSet::new();
    let mut families = Vec::new();
    for generator in PauliLabel::non_identity(d)? {
        if assigned.contains(&generator) {
            continue;
        }
        let mut members = Vec::new();
        for m in 1..d {
            let prod = power(generator, m);
            if prod.label.is_identity() {
                break;
            }
            if assigned.insert(prod.label) {
                members.push(FamilyMember {
                    label: prod.label,
                    power: m,
                    phase: prod.phase,
                });
            }
        }
        families.push(CommutingFamily { generator, members });
    }
    Ok(families)
}
