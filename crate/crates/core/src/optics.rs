//! Linear-optics devices on polarisation-path modes.
//!
//! A photon with `n` paths lives in `2n` modes, mode `2·path + pol`. With
//! `d0 = 2` this index coincides with the global `S_z` label `κ = 2κ1 + κ0`
//! (path is subsystem 1, polarisation subsystem 0).

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::PauliLabel;
use crate::eigensolver::analytic_eigensystem;
use crate::error::{Error, Result};
use crate::matrix::{complex_serde, ComplexMatrix, ONE, ZERO};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Largest mode count accepted by [`reck_decompose`].
pub const MAX_MODES: usize = 64;

type Block = [[Complex64; 2]; 2];

/// One optical element. Single-path beam-splitter variants act as
/// polarisation analyzers whose two output ports are the path's two modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OpticalElement {
    /// 50/50, reflected amplitude multiplied by `i`.
    BeamSplitter {
        a: usize,
        b: usize,
    },
    /// Transmits `|0_z⟩`, reflects `|1_z⟩` with phase `i`.
    PolarizingBs {
        a: usize,
        b: Option<usize>,
    },
    /// Transmits `|0_x⟩`, reflects `|1_x⟩` with phase `i`.
    Pbs45 {
        a: usize,
        b: Option<usize>,
    },
    PathPhase {
        path: usize,
        theta: f64,
    },
    /// Phase on the `|1_z⟩` component of one path.
    PolPhase {
        path: usize,
        theta: f64,
    },
    /// Real rotation of the polarisation of one path.
    PolRotator {
        path: usize,
        theta: f64,
    },
    ModePhase {
        mode: usize,
        theta: f64,
    },
    /// Arbitrary two-mode unitary `(out_m, out_n) = U (in_m, in_n)`.
    Mixer {
        m: usize,
        n: usize,
        matrix: Block,
    },
}

fn mode(path: usize, pol: usize) -> usize {
    2 * path + pol
}

fn mix(v: &mut [Complex64], m: usize, n: usize, u: &Block) {
    let (x, y) = (v[m], v[n]);
    v[m] = u[0][0] * x + u[0][1] * y;
    v[n] = u[1][0] * x + u[1][1] * y;
}

fn hadamard(v: &mut [Complex64], path: usize) {
    let h = FRAC_1_SQRT_2;
    let (x, y) = (v[mode(path, 0)], v[mode(path, 1)]);
    v[mode(path, 0)] = (x + y) * h;
    v[mode(path, 1)] = (x - y) * h;
}

impl OpticalElement {
    fn paths(&self) -> Vec<usize> {
        match *self {
            OpticalElement::BeamSplitter { a, b } => vec![a, b],
            OpticalElement::PolarizingBs { a, b } | OpticalElement::Pbs45 { a, b } => {
                std::iter::once(a).chain(b).collect()
            }
            OpticalElement::PathPhase { path, .. }
            | OpticalElement::PolPhase { path, .. }
            | OpticalElement::PolRotator { path, .. } => vec![path],
            OpticalElement::ModePhase { mode, .. } => vec![mode / 2],
            OpticalElement::Mixer { m, n, .. } => vec![m / 2, n / 2],
        }
    }

    fn validate(&self, n_paths: usize) -> Result<()> {
        for p in self.paths() {
            if p >= n_paths {
                return Err(Error::PathOutOfRange { path: p, n_paths });
            }
        }
        let distinct = match *self {
            OpticalElement::BeamSplitter { a, b } => a != b,
            OpticalElement::PolarizingBs { a, b: Some(b) }
            | OpticalElement::Pbs45 { a, b: Some(b) } => a != b,
            OpticalElement::Mixer { m, n, matrix } => {
                let u = ComplexMatrix::from_fn(2, 2, |r, c| matrix[r][c]);
                if u.unitarity_deviation() > 1e-10 {
                    return Err(Error::NotUnitary(u.unitarity_deviation()));
                }
                m != n
            }
            _ => true,
        };
        if !distinct {
            return Err(Error::InvalidParameter(format!(
                "element {self:?} joins a mode to itself"
            )));
        }
        Ok(())
    }

    /// Applies the element to a mode-amplitude vector in place.
    pub fn apply(&self, v: &mut [Complex64]) {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        match *self {
            OpticalElement::BeamSplitter { a, b } => {
                let bs = [[h, I * h], [I * h, h]];
                for pol in 0..2 {
                    mix(v, mode(a, pol), mode(b, pol), &bs);
                }
            }
            OpticalElement::PolarizingBs { a, b } => {
                if let Some(b) = b {
                    let (x, y) = (v[mode(a, 1)], v[mode(b, 1)]);
                    v[mode(a, 1)] = I * y;
                    v[mode(b, 1)] = I * x;
                }
            }
            OpticalElement::Pbs45 { a, b } => {
                hadamard(v, a);
                match b {
                    Some(b) => {
                        hadamard(v, b);
                        let (x, y) = (v[mode(a, 1)], v[mode(b, 1)]);
                        v[mode(a, 1)] = I * y;
                        v[mode(b, 1)] = I * x;
                    }
                    None => v[mode(a, 1)] *= I,
                }
            }
            OpticalElement::PathPhase { path, theta } => {
                let p = Complex64::from_polar(1.0, theta);
                v[mode(path, 0)] *= p;
                v[mode(path, 1)] *= p;
            }
            OpticalElement::PolPhase { path, theta } => {
                v[mode(path, 1)] *= Complex64::from_polar(1.0, theta)
            }
            OpticalElement::PolRotator { path, theta } => {
                let (c, s) = (
                    Complex64::new(theta.cos(), 0.0),
                    Complex64::new(theta.sin(), 0.0),
                );
                mix(v, mode(path, 0), mode(path, 1), &[[c, -s], [s, c]]);
            }
            OpticalElement::ModePhase { mode, theta } => {
                v[mode] *= Complex64::from_polar(1.0, theta)
            }
            OpticalElement::Mixer { m, n, matrix } => mix(v, m, n, &matrix),
        }
    }

    /// Transfer matrix on `2·n_paths` modes.
    pub fn matrix(&self, n_paths: usize) -> Result<ComplexMatrix> {
        self.validate(n_paths)?;
        let m = 2 * n_paths;
        let columns: Vec<Vec<Complex64>> = (0..m)
            .map(|j| {
                let mut e = vec![ZERO; m];
                e[j] = ONE;
                self.apply(&mut e);
                e
            })
            .collect();
        ComplexMatrix::from_columns(&columns)
    }
}

/// Netlist form: `{ "type", "paths", "theta" }`; mode-level elements use
/// `"modes"` and, for mixers, `"matrix"` as four `[re, im]` entries row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ElementRepr {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    paths: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    modes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<[[f64; 2]; 4]>,
}

impl From<&OpticalElement> for ElementRepr {
    fn from(e: &OpticalElement) -> Self {
        let mut r = ElementRepr {
            kind: String::new(),
            paths: e.paths(),
            theta: None,
            modes: Vec::new(),
            matrix: None,
        };
        match *e {
            OpticalElement::BeamSplitter { .. } => r.kind = "beam-splitter".into(),
            OpticalElement::PolarizingBs { .. } => r.kind = "pbs".into(),
            OpticalElement::Pbs45 { .. } => r.kind = "pbs45".into(),
            OpticalElement::PathPhase { theta, .. } => {
                (r.kind, r.theta) = ("path-phase".into(), Some(theta))
            }
            OpticalElement::PolPhase { theta, .. } => {
                (r.kind, r.theta) = ("pol-phase".into(), Some(theta))
            }
            OpticalElement::PolRotator { theta, .. } => {
                (r.kind, r.theta) = ("pol-rotator".into(), Some(theta))
            }
            OpticalElement::ModePhase { mode, theta } => {
                r.kind = "mode-phase".into();
                r.paths.clear();
                r.modes = vec![mode];
                r.theta = Some(theta);
            }
            OpticalElement::Mixer { m, n, matrix } => {
                r.kind = "mixer".into();
                r.paths.clear();
                r.modes = vec![m, n];
                let flat = [matrix[0][0], matrix[0][1], matrix[1][0], matrix[1][1]];
                r.matrix = Some(flat.map(|z| [z.re, z.im]));
            }
        }
        r
    }
}

impl TryFrom<ElementRepr> for OpticalElement {
    type Error = Error;

    fn try_from(r: ElementRepr) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("malformed {} element", r.kind));
        let theta = || r.theta.filter(|t| t.is_finite()).ok_or_else(bad);
        let one_path = || match r.paths[..] {
            [p] => Ok(p),
            _ => Err(bad()),
        };
        let opt_pair = || match r.paths[..] {
            [a] => Ok((a, None)),
            [a, b] => Ok((a, Some(b))),
            _ => Err(bad()),
        };
        Ok(match r.kind.as_str() {
            "beam-splitter" => match r.paths[..] {
                [a, b] => OpticalElement::BeamSplitter { a, b },
                _ => return Err(bad()),
            },
            "pbs" => {
                let (a, b) = opt_pair()?;
                OpticalElement::PolarizingBs { a, b }
            }
            "pbs45" => {
                let (a, b) = opt_pair()?;
                OpticalElement::Pbs45 { a, b }
            }
            "path-phase" => OpticalElement::PathPhase {
                path: one_path()?,
                theta: theta()?,
            },
            "pol-phase" => OpticalElement::PolPhase {
                path: one_path()?,
                theta: theta()?,
            },
            "pol-rotator" => OpticalElement::PolRotator {
                path: one_path()?,
                theta: theta()?,
            },
            "mode-phase" => match r.modes[..] {
                [mode] => OpticalElement::ModePhase {
                    mode,
                    theta: theta()?,
                },
                _ => return Err(bad()),
            },
            "mixer" => match (&r.modes[..], r.matrix) {
                (&[m, n], Some(flat)) => {
                    let z = flat.map(|[re, im]| Complex64::new(re, im));
                    OpticalElement::Mixer {
                        m,
                        n,
                        matrix: [[z[0], z[1]], [z[2], z[3]]],
                    }
                }
                _ => return Err(bad()),
            },
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown element type {other:?}"
                )))
            }
        })
    }
}

impl Serialize for OpticalElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ElementRepr::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for OpticalElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        OpticalElement::try_from(ElementRepr::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// A detector watching one output mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detector {
    pub mode: usize,
    pub outcome: usize,
    #[serde(with = "complex_serde")]
    pub eigenvalue: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircuitRepr")]
pub struct OpticalCircuit {
    n_paths: usize,
    elements: Vec<OpticalElement>,
    detectors: Vec<Detector>,
}

#[derive(Deserialize)]
struct CircuitRepr {
    n_paths: usize,
    #[serde(default)]
    elements: Vec<OpticalElement>,
    #[serde(default)]
    detectors: Vec<Detector>,
}

impl TryFrom<CircuitRepr> for OpticalCircuit {
    type Error = Error;

    fn try_from(r: CircuitRepr) -> Result<Self> {
        OpticalCircuit::new(r.n_paths, r.elements, r.detectors)
    }
}

impl OpticalCircuit {
    /// Validates element paths and that no two detectors share a mode or an
    /// outcome.
    pub fn new(
        n_paths: usize,
        elements: Vec<OpticalElement>,
        detectors: Vec<Detector>,
    ) -> Result<Self> {
        if n_paths == 0 {
            return Err(Error::ZeroDimension);
        }
        for e in &elements {
            e.validate(n_paths)?;
        }
        let modes = 2 * n_paths;
        for (i, det) in detectors.iter().enumerate() {
            if det.mode >= modes {
                return Err(Error::PathOutOfRange {
                    path: det.mode / 2,
                    n_paths,
                });
            }
            if detectors[..i]
                .iter()
                .any(|o| o.mode == det.mode || o.outcome == det.outcome)
            {
                return Err(Error::InvalidParameter(format!(
                    "detector on mode {} duplicates a mode or outcome",
                    det.mode
                )));
            }
        }
        Ok(OpticalCircuit {
            n_paths,
            elements,
            detectors,
        })
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn modes(&self) -> usize {
        2 * self.n_paths
    }

    pub fn elements(&self) -> &[OpticalElement] {
        &self.elements
    }

    pub fn detectors(&self) -> &[Detector] {
        &self.detectors
    }

    /// Output amplitudes for an input amplitude vector.
    pub fn propagate(&self, input: &[Complex64]) -> Result<Vec<Complex64>> {
        if input.len() != self.modes() {
            return Err(Error::DimensionMismatch {
                expected: self.modes(),
                got: input.len(),
            });
        }
        let mut v = input.to_vec();
        for e in &self.elements {
            e.apply(&mut v);
        }
        Ok(v)
    }
}

/// Ordered product of the element matrices.
pub fn transfer_matrix(circuit: &OpticalCircuit) -> ComplexMatrix {
    let m = circuit.modes();
    let columns: Vec<Vec<Complex64>> = (0..m)
        .map(|j| {
            let mut e = vec![ZERO; m];
            e[j] = ONE;
            circuit.propagate(&e).expect("length matches")
        })
        .collect();
    ComplexMatrix::from_columns(&columns).expect("square")
}

/// Click probability of each detector, in detector order.
pub fn detector_distribution(circuit: &OpticalCircuit, input: &[Complex64]) -> Result<Vec<f64>> {
    let n: f64 = input.iter().map(|z| z.norm_sqr()).sum();
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::Unnormalized(n));
    }
    let out = circuit.propagate(input)?;
    Ok(circuit
        .detectors
        .iter()
        .map(|d| out[d.mode].norm_sqr())
        .collect())
}

/// Click probabilities indexed by outcome (unmonitored outcomes are zero).
pub fn outcome_distribution(circuit: &OpticalCircuit, input: &[Complex64]) -> Result<Vec<f64>> {
    let p = detector_distribution(circuit, input)?;
    let len = circuit
        .detectors
        .iter()
        .map(|d| d.outcome + 1)
        .max()
        .unwrap_or(0);
    let mut out = vec![0.0; len];
    for (d, q) in circuit.detectors.iter().zip(p) {
        out[d.outcome] = q;
    }
    Ok(out)
}

/// Merges `(eigenvalue, probability)` pairs whose eigenvalues agree within
/// `1e-9`; sorted by phase angle in `[0, 2π)`.
pub fn eigenvalue_distribution(pairs: &[(Complex64, f64)]) -> Vec<(Complex64, f64)> {
    let mut merged: Vec<(Complex64, f64)> = Vec::new();
    for &(z, p) in pairs {
        match merged.iter_mut().find(|(w, _)| (w - z).norm() < 1e-9) {
            Some(entry) => entry.1 += p,
            None => merged.push((z, p)),
        }
    }
    merged.sort_by(|a, b| {
        crate::eigensolver::phase_angle(a.0).total_cmp(&crate::eigensolver::phase_angle(b.0))
    });
    merged
}

/// Distribution over the eigenvalues `f(λ)` of an observable that is a
/// function of the device's own observable.
pub fn derived_distribution(
    circuit: &OpticalCircuit,
    input: &[Complex64],
    f: impl Fn(Complex64) -> Complex64,
) -> Result<Vec<(Complex64, f64)>> {
    let p = detector_distribution(circuit, input)?;
    let pairs: Vec<(Complex64, f64)> = circuit
        .detectors
        .iter()
        .zip(p)
        .map(|(d, q)| (f(d.eigenvalue), q))
        .collect();
    Ok(eigenvalue_distribution(&pairs))
}

fn det(mode: usize, outcome: usize, eigenvalue: Complex64) -> Detector {
    Detector {
        mode,
        outcome,
        eigenvalue,
    }
}

/// Mach-Zehnder device on two paths: `PS(π/2)` on path 1, beam-splitter,
/// `PS(theta)` on path 0, polarisation rotation by `rotation` on path 1,
/// beam-splitter, then a polarizing beam-splitter on each path.
pub fn mach_zehnder(theta: f64, rotation: f64, detectors: Vec<Detector>) -> Result<OpticalCircuit> {
    use OpticalElement::*;
    OpticalCircuit::new(
        2,
        vec![
            PathPhase {
                path: 1,
                theta: FRAC_PI_2,
            },
            BeamSplitter { a: 0, b: 1 },
            PathPhase { path: 0, theta },
            PolRotator {
                path: 1,
                theta: rotation,
            },
            BeamSplitter { a: 0, b: 1 },
            PolarizingBs { a: 0, b: None },
            PolarizingBs { a: 1, b: None },
        ],
        detectors,
    )
}

pub const PRESETS: [&str; 4] = ["sz", "s21", "sx", "sxsz"];

/// The two-path (`d = 4`) devices. Outcome `j` is the `j`-th listed
/// eigenstate of the observable:
///
/// * `sz`: `|κ⟩_z`, the product states.
/// * `s21`: `|0_y⟩|1_z⟩, |0_y⟩|0_z⟩, |1_y⟩|1_z⟩, |1_y⟩|0_z⟩`.
/// * `sx`: `|0_x⟩|0_x⟩, |1_x⟩|0_y⟩, |0_x⟩|1_x⟩, |1_x⟩|1_y⟩`.
/// * `sxsz`: the entangled eigenstates of `e^{iπ/4} S_x S_z`,
///   `(|0_x⟩|b⟩ ∓ iγ|1_x⟩|1−b⟩)/√2` with `b = 1, 0, 1, 0`.
pub fn preset_device(name: &str) -> Result<OpticalCircuit> {
    use OpticalElement::*;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    match name {
        "sz" => OpticalCircuit::new(
            2,
            vec![
                PolarizingBs { a: 0, b: None },
                PolarizingBs { a: 1, b: None },
            ],
            (0..4)
                .map(|k| {
                    det(
                        k,
                        k,
                        crate::algebra::root_value(4, 2 * k as i64).expect("d > 0"),
                    )
                })
                .collect(),
        ),
        "s21" => OpticalCircuit::new(
            2,
            vec![
                BeamSplitter { a: 0, b: 1 },
                PolarizingBs { a: 0, b: None },
                PolarizingBs { a: 1, b: None },
            ],
            vec![
                det(3, 0, c(1.0, 0.0)),
                det(2, 1, c(0.0, -1.0)),
                det(1, 2, c(-1.0, 0.0)),
                det(0, 3, c(0.0, 1.0)),
            ],
        ),
        "sx" => OpticalCircuit::new(
            2,
            vec![
                PathPhase {
                    path: 1,
                    theta: FRAC_PI_2,
                },
                BeamSplitter { a: 0, b: 1 },
                PolPhase {
                    path: 0,
                    theta: -FRAC_PI_2,
                },
                Pbs45 { a: 0, b: None },
                Pbs45 { a: 1, b: None },
            ],
            vec![
                det(2, 0, c(1.0, 0.0)),
                det(0, 1, c(0.0, -1.0)),
                det(3, 2, c(-1.0, 0.0)),
                det(1, 3, c(0.0, 1.0)),
            ],
        ),
        "sxsz" => mach_zehnder(
            FRAC_PI_4,
            FRAC_PI_2,
            vec![
                det(0, 0, c(1.0, 0.0)),
                det(3, 1, c(0.0, 1.0)),
                det(2, 2, c(-1.0, 0.0)),
                det(1, 3, c(0.0, -1.0)),
            ],
        ),
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

/// `u = D · M_K ⋯ M_1`: two-mode mixers applied in list order, then output
/// phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReckDecomposition {
    pub modes: usize,
    pub mixers: Vec<OpticalElement>,
    #[serde(with = "crate::matrix::complex_vec_serde")]
    pub phases: Vec<Complex64>,
}

impl ReckDecomposition {
    pub fn reassemble(&self) -> ComplexMatrix {
        let n = self.modes;
        let columns: Vec<Vec<Complex64>> = (0..n)
            .map(|j| {
                let mut v = vec![ZERO; n];
                v[j] = ONE;
                for m in &self.mixers {
                    m.apply(&mut v);
                }
                v.iter().zip(&self.phases).map(|(x, p)| x * p).collect()
            })
            .collect();
        ComplexMatrix::from_columns(&columns).expect("square")
    }

    /// The mixers followed by one [`OpticalElement::ModePhase`] per output
    /// mode whose phase is not already 1.
    pub fn elements(&self) -> Vec<OpticalElement> {
        let mut out = self.mixers.clone();
        for (mode, p) in self.phases.iter().enumerate() {
            let theta = p.arg();
            if theta.abs() > 1e-15 {
                out.push(OpticalElement::ModePhase { mode, theta });
            }
        }
        out
    }
}

/// Triangular decomposition of a unitary into two-mode mixers.
///
/// Right-multiplying by Givens rotations on columns `(c, r)` clears row `r`
/// below the diagonal, from the last row upwards, until `u·G_1⋯G_K = D`.
pub fn reck_decompose(u: &ComplexMatrix) -> Result<ReckDecomposition> {
    if !u.is_square() {
        return Err(Error::NotSquare(u.rows(), u.cols()));
    }
    let n = u.rows();
    if n == 0 || n > MAX_MODES {
        return Err(Error::InvalidParameter(format!(
            "mode count must be in 1..={MAX_MODES}, got {n}"
        )));
    }
    let dev = u.unitarity_deviation();
    if dev > 1e-10 {
        return Err(Error::NotUnitary(dev));
    }
    let mut w = u.clone();
    let mut mixers = Vec::new();
    for r in (1..n).rev() {
        for c in 0..r {
            let b = w[(r, c)];
            if b.norm() < 1e-15 {
                continue;
            }
            let a = w[(r, r)];
            let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let g: Block = [[a / norm, b.conj() / norm], [-b / norm, a.conj() / norm]];
            for row in 0..n {
                let (x, y) = (w[(row, c)], w[(row, r)]);
                w[(row, c)] = x * g[0][0] + y * g[1][0];
                w[(row, r)] = x * g[0][1] + y * g[1][1];
            }
            w[(r, c)] = ZERO;
            let adj: Block = [
                [g[0][0].conj(), g[1][0].conj()],
                [g[0][1].conj(), g[1][1].conj()],
            ];
            mixers.push(OpticalElement::Mixer {
                m: c,
                n: r,
                matrix: adj,
            });
        }
    }
    let phases = (0..n).map(|i| w[(i, i)]).collect();
    Ok(ReckDecomposition {
        modes: n,
        mixers,
        phases,
    })
}

/// Detector network identifying the analytic eigenbasis of `label` on
/// `d1` paths: a polarizing beam-splitter per path, then the compiled
/// unitary sending eigenvector `j` to mode `j`, where a detector reports
/// outcome `j` with eigenvalue `λ_j`.
pub fn general_device(d1: usize, label: PauliLabel) -> Result<OpticalCircuit> {
    if d1 == 0 || label.d() != 2 * d1 {
        return Err(Error::DimensionMismatch {
            expected: 2 * d1,
            got: label.d(),
        });
    }
    let system = analytic_eigensystem(label);
    let routing = system.vector_matrix().adjoint();
    let compiled = reck_decompose(&routing)?;
    let mut elements: Vec<OpticalElement> = (0..d1)
        .map(|a| OpticalElement::PolarizingBs { a, b: None })
        .collect();
    elements.extend(compiled.elements());
    let detectors = system
        .pairs
        .iter()
        .enumerate()
        .map(|(j, p)| det(j, j, p.eigenvalue))
        .collect();
    OpticalCircuit::new(d1, elements, detectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::pauli_matrix;
    use crate::matrix::{kron_vec, outer};
    use crate::random::{random_pure_state, random_unitary, rng_from_seed};
    use crate::tomography::{measurement_probabilities, DensityMatrix};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn s() -> f64 {
        FRAC_1_SQRT_2
    }

    fn pol_z(b: usize) -> Vec<Complex64> {
        if b == 0 {
            vec![ONE, ZERO]
        } else {
            vec![ZERO, ONE]
        }
    }

    fn pol_x(b: usize) -> Vec<Complex64> {
        vec![c(s(), 0.0), c(if b == 0 { s() } else { -s() }, 0.0)]
    }

    fn pol_y(b: usize) -> Vec<Complex64> {
        vec![c(s(), 0.0), c(0.0, if b == 0 { s() } else { -s() })]
    }

    fn add(a: &[Complex64], b: &[Complex64], coef: Complex64) -> Vec<Complex64> {
        a.iter().zip(b).map(|(x, y)| (x + coef * y) * s()).collect()
    }

    /// Listed eigenstates per preset, in outcome order.
    fn listed(name: &str) -> Vec<Vec<Complex64>> {
        let gamma = Complex64::from_polar(1.0, FRAC_PI_4);
        match name {
            "sz" => (0..4)
                .map(|k| {
                    let mut v = vec![ZERO; 4];
                    v[k] = ONE;
                    v
                })
                .collect(),
            "s21" => vec![
                kron_vec(&pol_y(0), &pol_z(1)),
                kron_vec(&pol_y(0), &pol_z(0)),
                kron_vec(&pol_y(1), &pol_z(1)),
                kron_vec(&pol_y(1), &pol_z(0)),
            ],
            "sx" => vec![
                kron_vec(&pol_x(0), &pol_x(0)),
                kron_vec(&pol_x(1), &pol_y(0)),
                kron_vec(&pol_x(0), &pol_x(1)),
                kron_vec(&pol_x(1), &pol_y(1)),
            ],
            "sxsz" => [(1, -1.0), (0, -1.0), (1, 1.0), (0, 1.0)]
                .iter()
                .map(|&(b, sign)| {
                    add(
                        &kron_vec(&pol_x(0), &pol_z(b)),
                        &kron_vec(&pol_x(1), &pol_z(1 - b)),
                        c(0.0, sign) * gamma,
                    )
                })
                .collect(),
            _ => unreachable!(),
        }
    }

    fn observable(name: &str) -> ComplexMatrix {
        let l = |k, l| pauli_matrix(PauliLabel::new(4, k, l).unwrap());
        match name {
            "sz" => l(0, 1),
            "s21" => l(2, 1),
            "sx" => l(1, 0),
            "sxsz" => l(1, 1).scale(Complex64::from_polar(1.0, FRAC_PI_4)),
            _ => unreachable!(),
        }
    }

    #[test]
    fn empty_circuit_is_identity() {
        let circ = OpticalCircuit::new(3, vec![], vec![]).unwrap();
        assert!(transfer_matrix(&circ).approx_eq(&ComplexMatrix::identity(6), 1e-15));
    }

    #[test]
    fn beam_splitter_amplitudes() {
        let circ =
            OpticalCircuit::new(2, vec![OpticalElement::BeamSplitter { a: 0, b: 1 }], vec![])
                .unwrap();
        let out = circ.propagate(&[ONE, ZERO, ZERO, ZERO]).unwrap();
        assert!((out[0] - c(s(), 0.0)).norm() < 1e-15);
        assert!((out[2] - c(0.0, s())).norm() < 1e-15);
    }

    #[test]
    fn elements_unitary() {
        use OpticalElement::*;
        let u = random_unitary(2, &mut rng_from_seed(1));
        let block = [[u[(0, 0)], u[(0, 1)]], [u[(1, 0)], u[(1, 1)]]];
        let all = [
            BeamSplitter { a: 0, b: 2 },
            PolarizingBs { a: 1, b: None },
            PolarizingBs { a: 1, b: Some(2) },
            Pbs45 { a: 0, b: None },
            Pbs45 { a: 2, b: Some(0) },
            PathPhase {
                path: 1,
                theta: 0.3,
            },
            PolPhase {
                path: 2,
                theta: -1.1,
            },
            PolRotator {
                path: 0,
                theta: 0.7,
            },
            ModePhase {
                mode: 5,
                theta: 2.0,
            },
            Mixer {
                m: 1,
                n: 4,
                matrix: block,
            },
        ];
        for e in all {
            assert!(e.matrix(3).unwrap().unitarity_deviation() < 1e-12, "{e:?}");
        }
        assert!(matches!(
            BeamSplitter { a: 0, b: 3 }.matrix(3),
            Err(Error::PathOutOfRange { path: 3, .. })
        ));
        assert!(BeamSplitter { a: 1, b: 1 }.matrix(3).is_err());
    }

    #[test]
    fn pbs45_ports() {
        let circ =
            OpticalCircuit::new(1, vec![OpticalElement::Pbs45 { a: 0, b: None }], vec![]).unwrap();
        let out = circ.propagate(&pol_x(0)).unwrap();
        assert!((out[0].norm() - 1.0).abs() < 1e-15);
        let out = circ.propagate(&pol_x(1)).unwrap();
        assert!((out[1] - I).norm() < 1e-15);
        let two = OpticalCircuit::new(2, vec![OpticalElement::Pbs45 { a: 0, b: Some(1) }], vec![])
            .unwrap();
        let out = two.propagate(&kron_vec(&[ONE, ZERO], &pol_x(1))).unwrap();
        assert!((out[3] - I).norm() < 1e-15);
    }

    #[test]
    fn presets_identify_listed_states() {
        for name in PRESETS {
            let circ = preset_device(name).unwrap();
            assert!(transfer_matrix(&circ).unitarity_deviation() < 1e-10);
            let obs = observable(name);
            for (j, v) in listed(name).iter().enumerate() {
                let p = outcome_distribution(&circ, v).unwrap();
                for (o, &q) in p.iter().enumerate() {
                    let expect = if o == j { 1.0 } else { 0.0 };
                    assert!(
                        (q - expect).abs() < 1e-9,
                        "{name} state {j} outcome {o}: {q}"
                    );
                }
                let lam = circ
                    .detectors()
                    .iter()
                    .find(|d| d.outcome == j)
                    .unwrap()
                    .eigenvalue;
                let ov = obs.mul_vec(v).unwrap();
                let residual = ov
                    .iter()
                    .zip(v)
                    .map(|(x, y)| (x - lam * y).norm())
                    .fold(0.0, f64::max);
                assert!(residual < 1e-12, "{name} eigenvalue {j}");
            }
        }
        assert!(matches!(preset_device("sy"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn sz_uniform_input() {
        let circ = preset_device("sz").unwrap();
        let p = detector_distribution(&circ, &[c(0.5, 0.0); 4]).unwrap();
        assert!(p.iter().all(|&x| (x - 0.25).abs() < 1e-12));
        assert!(matches!(
            detector_distribution(&circ, &[ONE; 4]),
            Err(Error::Unnormalized(_))
        ));
    }

    #[test]
    fn probability_conservation() {
        for name in PRESETS {
            let circ = preset_device(name).unwrap();
            let psi = random_pure_state(4, &mut rng_from_seed(3));
            let total: f64 = detector_distribution(&circ, &psi).unwrap().iter().sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
    }

    /// Eigenvalue distribution of `label` from the analytic basis.
    fn direct(label: PauliLabel, psi: &[Complex64]) -> Vec<(Complex64, f64)> {
        let rho = DensityMatrix::new(outer(psi, psi)).unwrap();
        let p = measurement_probabilities(label, &rho).unwrap().p;
        let sys = analytic_eigensystem(label);
        let pairs: Vec<_> = sys.pairs.iter().map(|e| e.eigenvalue).zip(p).collect();
        eigenvalue_distribution(&pairs)
    }

    fn same_distribution(a: &[(Complex64, f64)], b: &[(Complex64, f64)]) -> bool {
        a.len() == b.len()
            && a.iter()
                .zip(b)
                .all(|(x, y)| (x.0 - y.0).norm() < 1e-9 && (x.1 - y.1).abs() < 1e-10)
    }

    #[test]
    fn sxsz_statistics_give_s22_and_s33() {
        let circ = preset_device("sxsz").unwrap();
        let gamma = Complex64::from_polar(1.0, FRAC_PI_4);
        let alpha = I;
        for seed in 0..5 {
            let psi = random_pure_state(4, &mut rng_from_seed(seed));
            // S_11 = γ^{-1}·M, S_22 = α^{-1} S_11², S_33 = α^{-3} S_11³
            let s22 = derived_distribution(&circ, &psi, |m| (m / gamma).powi(2) / alpha).unwrap();
            let s33 =
                derived_distribution(&circ, &psi, |m| (m / gamma).powi(3) / alpha.powi(3)).unwrap();
            assert!(same_distribution(
                &s22,
                &direct(PauliLabel::new(4, 2, 2).unwrap(), &psi)
            ));
            assert!(same_distribution(
                &s33,
                &direct(PauliLabel::new(4, 3, 3).unwrap(), &psi)
            ));
        }
    }

    /// Changing the phase shifts turns the same interferometer into a
    /// detector for the eigenbases of `S_13` and `S_31`.
    #[test]
    fn mach_zehnder_other_phases() {
        let quarter = [
            0.0,
            FRAC_PI_4,
            FRAC_PI_2,
            3.0 * FRAC_PI_4,
            std::f64::consts::PI,
            -FRAC_PI_4,
            -FRAC_PI_2,
            -3.0 * FRAC_PI_4,
        ];
        for (k, l) in [(1, 3), (3, 1), (1, 1)] {
            let sys = analytic_eigensystem(PauliLabel::new(4, k, l).unwrap());
            let found = quarter.iter().any(|&theta| {
                quarter.iter().any(|&rot| {
                    let circ = mach_zehnder(theta, rot, vec![]).unwrap();
                    let mut used = [false; 4];
                    sys.pairs.iter().all(|p| {
                        let out = circ.propagate(&p.vector).unwrap();
                        match out.iter().position(|z| (z.norm_sqr() - 1.0).abs() < 1e-9) {
                            Some(m) if !used[m] => {
                                used[m] = true;
                                true
                            }
                            _ => false,
                        }
                    })
                })
            });
            assert!(found, "S_{k}{l}");
        }
    }

    #[test]
    fn reck_identity_and_beam_splitter() {
        let r = reck_decompose(&ComplexMatrix::identity(5)).unwrap();
        assert!(r.mixers.is_empty());
        assert!(r.phases.iter().all(|p| (p - ONE).norm() < 1e-15));

        let h = c(s(), 0.0);
        let block = [[h, I * h], [I * h, h]];
        let bs2 = ComplexMatrix::from_fn(2, 2, |r, c| block[r][c]);
        let r = reck_decompose(&bs2).unwrap();
        assert_eq!(r.mixers.len(), 1);
        match r.mixers[0] {
            OpticalElement::Mixer { m: 0, n: 1, matrix } => {
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((matrix[i][j] - block[i][j]).norm() < 1e-15);
                    }
                }
            }
            other => panic!("{other:?}"),
        }
        assert!(r.phases.iter().all(|p| (p - ONE).norm() < 1e-15));
    }

    #[test]
    fn reck_random() {
        for n in [1, 2, 3, 5, 8, 16] {
            let u = random_unitary(n, &mut rng_from_seed(n as u64));
            let r = reck_decompose(&u).unwrap();
            assert!(r.mixers.len() <= n * (n - 1) / 2);
            assert!(r.reassemble().max_abs_diff(&u) < 1e-9, "n={n}");
        }
        let mut bad = ComplexMatrix::identity(3);
        bad[(0, 1)] = ONE;
        assert!(matches!(reck_decompose(&bad), Err(Error::NotUnitary(_))));
        assert!(reck_decompose(&ComplexMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn general_device_identifies_eigenstates() {
        for (d1, k, l) in [(3, 4, 3), (2, 1, 0), (2, 1, 1), (4, 2, 6), (3, 0, 0)] {
            let label = PauliLabel::new(2 * d1, k, l).unwrap();
            let circ = general_device(d1, label).unwrap();
            let sys = analytic_eigensystem(label);
            for (j, p) in sys.pairs.iter().enumerate() {
                let probs = outcome_distribution(&circ, &p.vector).unwrap();
                for (o, &q) in probs.iter().enumerate() {
                    assert!((q - if o == j { 1.0 } else { 0.0 }).abs() < 1e-9);
                }
            }
        }
        assert!(general_device(2, PauliLabel::new(6, 1, 0).unwrap()).is_err());
    }

    #[test]
    fn general_identity_is_plain_routing() {
        let circ = general_device(2, PauliLabel::new(4, 0, 0).unwrap()).unwrap();
        assert!(circ
            .elements()
            .iter()
            .all(|e| matches!(e, OpticalElement::PolarizingBs { b: None, .. })));
    }

    #[test]
    fn general_sx_matches_preset() {
        let generated = general_device(2, PauliLabel::new(4, 1, 0).unwrap()).unwrap();
        let preset = preset_device("sx").unwrap();
        for seed in 0..10 {
            let psi = random_pure_state(4, &mut rng_from_seed(seed));
            let a = derived_distribution(&generated, &psi, |z| z).unwrap();
            let b = derived_distribution(&preset, &psi, |z| z).unwrap();
            assert!(same_distribution(&a, &b));
        }
    }

    #[test]
    fn netlist_round_trip() {
        let circ = general_device(3, PauliLabel::new(6, 4, 3).unwrap()).unwrap();
        let json = serde_json::to_string(&circ).unwrap();
        let back: OpticalCircuit = serde_json::from_str(&json).unwrap();
        assert!(transfer_matrix(&back).approx_eq(&transfer_matrix(&circ), 1e-15));
        assert_eq!(back.detectors(), circ.detectors());

        let preset = serde_json::to_value(preset_device("sx").unwrap()).unwrap();
        assert_eq!(preset["elements"][0]["type"], "path-phase");
        assert_eq!(preset["elements"][0]["paths"][0], 1);

        let bad =
            r#"{"n_paths":1,"elements":[{"type":"beam-splitter","paths":[0,1]}],"detectors":[]}"#;
        assert!(serde_json::from_str::<OpticalCircuit>(bad).is_err());
        let dup = r#"{"n_paths":1,"detectors":[{"mode":0,"outcome":0,"eigenvalue":[1,0]},{"mode":0,"outcome":1,"eigenvalue":[1,0]}]}"#;
        assert!(serde_json::from_str::<OpticalCircuit>(dup).is_err());
    }
}
