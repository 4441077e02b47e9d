//! Schmidt structure of `S_kl` eigenvectors on a two-component qudit.
//!
//! For `d = d1·d0` the `S_z` basis is split as `|κ⟩ = |κ1⟩₁|κ0⟩₀` with
//! `κ = d0·κ1 + κ0` (subsystem 0 is the least-significant digit). Writing
//! `η = D0·K1 + K0`, each eigenvector touches `D0` distinct subsystem-0 states
//! and, for each of them, `D1` subsystem-1 states, with `D1·D0 = d/f`.
//!
//! Grouping of the `K0` values into Schmidt terms is decided with exact
//! integer phase arithmetic; floating point only appears when vectors are
//! materialized.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{gcd, modulo, PauliLabel, Root};
use crate::eigensolver::eigenvector_phases;
use crate::error::{Error, Result};
use crate::matrix::{inner, kron_vec, ZERO};

/// Parameterization of one operator's eigenvectors for a split `d = d1·d0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitParams {
    pub d1: usize,
    pub d0: usize,
    pub f: usize,
    pub w: usize,
    /// Integer part of `f / d0`.
    pub xi: usize,
    /// `f − ξ·d0`.
    pub p: usize,
    /// Numerator of `p/d0` in lowest terms.
    #[serde(rename = "P")]
    pub big_p: usize,
    /// Distinct subsystem-0 states per eigenvector.
    #[serde(rename = "D0")]
    pub big_d0: usize,
    /// Subsystem-1 states paired with each subsystem-0 state.
    #[serde(rename = "D1")]
    pub big_d1: usize,
}

fn check_split(d1: usize, d0: usize, label: PauliLabel) -> Result<()> {
    if d1 == 0 || d0 == 0 {
        return Err(Error::ZeroDimension);
    }
    if d1 * d0 != label.d() {
        return Err(Error::DimensionMismatch {
            expected: label.d(),
            got: d1 * d0,
        });
    }
    Ok(())
}

pub fn split_parameters(d1: usize, d0: usize, label: PauliLabel) -> Result<SplitParams> {
    check_split(d1, d0, label)?;
    let f = label.f();
    let xi = f / d0;
    let p = f - xi * d0;
    let common = gcd(p, d0);
    let big_p = p / common;
    let big_d0 = d0 / common;
    let orbit = label.orbit();
    debug_assert_eq!(orbit % big_d0, 0);
    Ok(SplitParams {
        d1,
        d0,
        f,
        w: label.w(),
        xi,
        p,
        big_p,
        big_d0,
        big_d1: orbit / big_d0,
    })
}

/// One bi-orthogonal product term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtTerm {
    pub coefficient: f64,
    #[serde(with = "crate::matrix::complex_vec_serde")]
    pub subsystem1: Vec<Complex64>,
    #[serde(with = "crate::matrix::complex_vec_serde")]
    pub subsystem0: Vec<Complex64>,
}

/// Schmidt decomposition of one eigenvector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtForm {
    pub g: usize,
    pub a: usize,
    pub rank: usize,
    pub terms: Vec<SchmidtTerm>,
}

impl SchmidtForm {
    /// `Σ c_i |u_i⟩₁ ⊗ |v_i⟩₀` in the global `S_z` basis.
    pub fn reassemble(&self) -> Vec<Complex64> {
        let d = self.terms[0].subsystem1.len() * self.terms[0].subsystem0.len();
        let mut out = vec![ZERO; d];
        for t in &self.terms {
            for (o, x) in out.iter_mut().zip(kron_vec(&t.subsystem1, &t.subsystem0)) {
                *o += x * t.coefficient;
            }
        }
        out
    }
}

/// Subsystem-1 state tied to one `K0`: sorted `(κ1, half-unit phase)` pairs.
#[derive(Debug, Clone)]
struct Branch {
    kappa0: usize,
    entries: Vec<(usize, i64)>,
}

fn branches(params: &SplitParams, label: PauliLabel, g: usize, a: usize) -> Result<Vec<Branch>> {
    let phases = eigenvector_phases(label, g, a)?;
    let d0 = params.d0;
    let mut out = Vec::with_capacity(params.big_d0);
    for k0 in 0..params.big_d0 {
        let mut entries = Vec::with_capacity(params.big_d1);
        let mut kappa0 = None;
        for k1 in 0..params.big_d1 {
            let (kappa, phase) = phases[params.big_d0 * k1 + k0];
            let c0 = kappa % d0;
            match kappa0 {
                None => kappa0 = Some(c0),
                Some(prev) if prev != c0 => {
                    return Err(Error::Numerical(format!(
                        "subsystem-0 index not constant along K1 for {label}"
                    )))
                }
                _ => {}
            }
            entries.push((kappa / d0, phase));
        }
        entries.sort_unstable();
        out.push(Branch {
            kappa0: kappa0.expect("D1 >= 1"),
            entries,
        });
    }
    Ok(out)
}

/// Relative phase `δ` with `branch = e^{iπδ/d} · reference`, if the two
/// subsystem-1 states coincide up to a phase.
fn relative_phase(reference: &Branch, branch: &Branch, d: usize) -> Option<i64> {
    let m = 2 * d as i64;
    let mut delta = None;
    for (&(r1, rp), &(b1, bp)) in reference.entries.iter().zip(&branch.entries) {
        if r1 != b1 {
            return None;
        }
        let diff = modulo(bp - rp, m);
        match delta {
            None => delta = Some(diff),
            Some(x) if x != diff => return None,
            _ => {}
        }
    }
    delta
}

/// Schmidt form of `|j_{g,a}⟩` for the split `d = d1·d0`.
pub fn schmidt_form(
    d1: usize,
    d0: usize,
    label: PauliLabel,
    g: usize,
    a: usize,
) -> Result<SchmidtForm> {
    let params = split_parameters(d1, d0, label)?;
    if g >= label.orbit() || a >= label.f() {
        return Err(Error::InvalidIndex { g, a });
    }
    let d = label.d();
    let branches = branches(&params, label, g, a)?;

    // classes: (representative index, members as (kappa0, delta))
    let mut classes: Vec<(usize, Vec<(usize, i64)>)> = Vec::new();
    for (i, b) in branches.iter().enumerate() {
        let hit = classes.iter_mut().find_map(|(rep, members)| {
            relative_phase(&branches[*rep], b, d).map(|delta| (members, delta))
        });
        match hit {
            Some((members, delta)) => members.push((b.kappa0, delta)),
            None => classes.push((i, vec![(b.kappa0, 0)])),
        }
    }

    let amp1 = 1.0 / (params.big_d1 as f64).sqrt();
    let terms = classes
        .iter()
        .map(|(rep, members)| {
            let mut subsystem1 = vec![ZERO; d1];
            for &(k1, phase) in &branches[*rep].entries {
                subsystem1[k1] = Root::new(d, phase).expect("d > 0").value() * amp1;
            }
            let amp0 = 1.0 / (members.len() as f64).sqrt();
            let mut subsystem0 = vec![ZERO; d0];
            for &(k0, delta) in members {
                subsystem0[k0] = Root::new(d, delta).expect("d > 0").value() * amp0;
            }
            SchmidtTerm {
                coefficient: (members.len() as f64 / params.big_d0 as f64).sqrt(),
                subsystem1,
                subsystem0,
            }
        })
        .collect::<Vec<_>>();

    Ok(SchmidtForm {
        g,
        a,
        rank: terms.len(),
        terms,
    })
}

/// Schmidt forms of all `d` eigenvectors, in eigensystem order.
pub fn schmidt_forms(d1: usize, d0: usize, label: PauliLabel) -> Result<Vec<SchmidtForm>> {
    check_split(d1, d0, label)?;
    let mut out = Vec::with_capacity(label.d());
    for a in 0..label.f() {
        for g in 0..label.orbit() {
            out.push(schmidt_form(d1, d0, label, g, a)?);
        }
    }
    Ok(out)
}

/// Normalized subsystem-1 states `|ψ_{κ0, j_{g,a}}⟩₁`, keyed by `κ0`.
pub fn subsystem1_states(
    d1: usize,
    d0: usize,
    label: PauliLabel,
    g: usize,
    a: usize,
) -> Result<BTreeMap<usize, Vec<Complex64>>> {
    let params = split_parameters(d1, d0, label)?;
    let d = label.d();
    let amp = 1.0 / (params.big_d1 as f64).sqrt();
    Ok(branches(&params, label, g, a)?
        .into_iter()
        .map(|b| {
            let mut v = vec![ZERO; d1];
            for (k1, phase) in b.entries {
                v[k1] = Root::new(d, phase).expect("d > 0").value() * amp;
            }
            (b.kappa0, v)
        })
        .collect())
}

/// Schmidt coefficients of a vector reshaped to `d1 × d0`, via SVD,
/// in descending order.
pub fn numeric_schmidt_coefficients(v: &[Complex64], d1: usize, d0: usize) -> Result<Vec<f64>> {
    if v.len() != d1 * d0 {
        return Err(Error::DimensionMismatch {
            expected: d1 * d0,
            got: v.len(),
        });
    }
    let m = DMatrix::from_row_slice(d1, d0, v);
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Number of singular values above `threshold`.
pub fn numeric_schmidt_rank(
    v: &[Complex64],
    d1: usize,
    d0: usize,
    threshold: f64,
) -> Result<usize> {
    Ok(numeric_schmidt_coefficients(v, d1, d0)?
        .into_iter()
        .filter(|&s| s > threshold)
        .count())
}

/// How an observable can be measured on a two-component qudit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasurementClass {
    /// Product eigenbasis: fixed individual measurements on each subsystem.
    SeparableFixed,
    /// Product eigenvectors, but one subsystem's basis depends on the other's outcome.
    SeparableFeedForward,
    /// Some eigenvector is entangled.
    Joint,
}

const SAME_STATE_TOL: f64 = 1e-9;

fn same_up_to_phase(u: &[Complex64], v: &[Complex64]) -> bool {
    (inner(u, v).norm() - 1.0).abs() < SAME_STATE_TOL
}

/// Groups product eigenvectors by one factor and checks that every group
/// carries the same set of partner states.
fn groups_share_partners(pairs: &[(&[Complex64], &[Complex64])]) -> bool {
    let mut groups: Vec<(&[Complex64], Vec<&[Complex64]>)> = Vec::new();
    for &(key, partner) in pairs {
        match groups.iter_mut().find(|(k, _)| same_up_to_phase(k, key)) {
            Some((_, partners)) => partners.push(partner),
            None => groups.push((key, vec![partner])),
        }
    }
    let first = &groups[0].1;
    groups.iter().all(|(_, partners)| {
        partners.len() == first.len()
            && partners
                .iter()
                .all(|p| first.iter().any(|q| same_up_to_phase(p, q)))
    })
}

fn classify_forms(forms: &[SchmidtForm]) -> MeasurementClass {
    if forms.iter().any(|f| f.rank > 1) {
        return MeasurementClass::Joint;
    }
    let by_first: Vec<(&[Complex64], &[Complex64])> = forms
        .iter()
        .map(|f| {
            (
                f.terms[0].subsystem1.as_slice(),
                f.terms[0].subsystem0.as_slice(),
            )
        })
        .collect();
    let by_second: Vec<(&[Complex64], &[Complex64])> =
        by_first.iter().map(|&(a, b)| (b, a)).collect();
    if groups_share_partners(&by_first) && groups_share_partners(&by_second) {
        MeasurementClass::SeparableFixed
    } else {
        MeasurementClass::SeparableFeedForward
    }
}

pub fn classify_measurement(d1: usize, d0: usize, label: PauliLabel) -> Result<MeasurementClass> {
    Ok(classify_forms(&schmidt_forms(d1, d0, label)?))
}

/// One row of [`classification_table`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRow {
    pub k: usize,
    pub l: usize,
    pub class: MeasurementClass,
    pub rank: usize,
    #[serde(rename = "D0")]
    pub big_d0: usize,
    #[serde(rename = "D1")]
    pub big_d1: usize,
}

/// Class and Schmidt rank of every non-identity `S_kl`, in label order.
pub fn classification_table(d1: usize, d0: usize) -> Result<Vec<ClassificationRow>> {
    if d1 < 2 || d0 < 2 {
        return Err(Error::InvalidParameter(format!(
            "subsystem dimensions must be at least 2, got ({d1}, {d0})"
        )));
    }
    let labels = PauliLabel::non_identity(d1 * d0)?;
    labels
        .par_iter()
        .map(|&label| {
            let params = split_parameters(d1, d0, label)?;
            let forms = schmidt_forms(d1, d0, label)?;
            let rank = forms[0].rank;
            if forms.iter().any(|f| f.rank != rank) {
                return Err(Error::Numerical(format!(
                    "non-uniform Schmidt rank for {label}"
                )));
            }
            Ok(ClassificationRow {
                k: label.k(),
                l: label.l(),
                class: classify_forms(&forms),
                rank,
                big_d0: params.big_d0,
                big_d1: params.big_d1,
            })
        })
        .collect()
}

/// All ordered factorizations `d = d1·d0` with both factors at least 2.
pub fn factorizations(d: usize) -> Vec<(usize, usize)> {
    (2..d)
        .filter(|d1| d.is_multiple_of(*d1) && d / d1 >= 2)
        .map(|d1| (d1, d / d1))
        .collect()
}
