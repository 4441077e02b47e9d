//! Two-bases key distribution on a composite qudit `d = d1·d0`.
//!
//! The two bases are the `S_z` (product) basis and the `S_x` (Fourier) basis.
//! The Fourier basis is measured with individual measurements only: first
//! subsystem 1 in its own Fourier basis, then subsystem 0 in a basis chosen by
//! that first outcome.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::Root;
use crate::error::{Error, Result};
use crate::matrix::{inner, kron_vec, outer, ComplexMatrix, ONE, ZERO};
use crate::random::{rng_from_seed, substream};
use crate::tomography::sample_with;

fn check_dim(name: &str, d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "{name} must be at least 2, got {d}"
        )));
    }
    Ok(())
}

fn fourier_vectors(d: usize) -> Vec<Vec<Complex64>> {
    let norm = 1.0 / (d as f64).sqrt();
    (0..d)
        .map(|j| {
            (0..d)
                .map(|kappa| {
                    Root::alpha_pow(d, -((kappa * j) as i64))
                        .expect("d > 0")
                        .value()
                        * norm
                })
                .collect()
        })
        .collect()
}

/// `|j⟩_x = d^{−1/2} Σ_κ α_d^{−κj} |κ⟩_z`, indexed by `j`.
pub fn fourier_basis(d: usize) -> Result<Vec<Vec<Complex64>>> {
    check_dim("d", d)?;
    Ok(fourier_vectors(d))
}

/// Feed-forward measurement of the Fourier basis of `d1·d0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeedForwardPlan {
    pub d1: usize,
    pub d0: usize,
    /// `|φ_{j1}⟩₁`, the Fourier basis of subsystem 1.
    #[serde(with = "vectors_serde")]
    pub stage1: Vec<Vec<Complex64>>,
    /// `stage2[j1][j0] = |ψ_{j0}⟩₀` given the first outcome `j1`.
    #[serde(with = "basis_family_serde")]
    pub stage2: Vec<Vec<Vec<Complex64>>>,
}

mod vectors_serde {
    use num_complex::Complex64;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &[Vec<Complex64>], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(
            v.iter()
                .map(|x| x.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()),
        )
    }
}

mod basis_family_serde {
    use num_complex::Complex64;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &[Vec<Vec<Complex64>>], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|basis| {
            basis
                .iter()
                .map(|x| x.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        }))
    }
}

/// A factor of 1 is allowed (the plan then degenerates to a single-stage
/// Fourier measurement), but `d1·d0` must be at least 2.
pub fn feed_forward_plan(d1: usize, d0: usize) -> Result<FeedForwardPlan> {
    if d1 == 0 || d0 == 0 {
        return Err(Error::ZeroDimension);
    }
    let d = d1 * d0;
    check_dim("d1·d0", d)?;
    let stage1 = fourier_vectors(d1);
    let norm0 = 1.0 / (d0 as f64).sqrt();
    let stage2 = (0..d1)
        .map(|j1| {
            (0..d0)
                .map(|j0| {
                    let j = (j1 + d1 * j0) as i64;
                    (0..d0)
                        .map(|k0| {
                            Root::alpha_pow(d, -j * k0 as i64).expect("d > 0").value() * norm0
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(FeedForwardPlan {
        d1,
        d0,
        stage1,
        stage2,
    })
}

/// Outcome of one feed-forward measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedForwardOutcome {
    pub j1: usize,
    pub j0: usize,
    pub j: usize,
}

impl FeedForwardPlan {
    pub fn d(&self) -> usize {
        self.d1 * self.d0
    }

    pub fn recombine(&self, j1: usize, j0: usize) -> usize {
        j1 + self.d1 * j0
    }

    pub fn split(&self, j: usize) -> (usize, usize) {
        (j % self.d1, j / self.d1)
    }

    /// `|φ_{j1}⟩₁ ⊗ |ψ_{j0}⟩₀` for `j = j1 + d1·j0`.
    pub fn product_vector(&self, j: usize) -> Vec<Complex64> {
        let (j1, j0) = self.split(j);
        kron_vec(&self.stage1[j1], &self.stage2[j1][j0])
    }

    fn check_state(&self, rho: &ComplexMatrix) -> Result<()> {
        if rho.rows() != self.d() || rho.cols() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                got: rho.rows(),
            });
        }
        Ok(())
    }

    /// Unnormalized state of subsystem 0 after outcome `j1` on subsystem 1:
    /// `⟨φ_{j1}|ρ|φ_{j1}⟩₁`.
    fn conditional(&self, rho: &ComplexMatrix, j1: usize) -> ComplexMatrix {
        let phi = &self.stage1[j1];
        let d0 = self.d0;
        ComplexMatrix::from_fn(d0, d0, |a, b| {
            let mut acc = ZERO;
            for (x, px) in phi.iter().enumerate() {
                for (y, py) in phi.iter().enumerate() {
                    acc += px.conj() * rho[(d0 * x + a, d0 * y + b)] * py;
                }
            }
            acc
        })
    }

    fn stage2_probabilities(&self, cond: &ComplexMatrix, j1: usize) -> Vec<f64> {
        self.stage2[j1]
            .iter()
            .map(|psi| inner(psi, &cond.mul_vec(psi).expect("d0 x d0")).re.max(0.0))
            .collect()
    }

    /// Exact chain-rule distribution over `j` for a density matrix.
    pub fn exact_distribution(&self, rho: &ComplexMatrix) -> Result<Vec<f64>> {
        self.check_state(rho)?;
        let mut p = vec![0.0; self.d()];
        for j1 in 0..self.d1 {
            let cond = self.conditional(rho, j1);
            for (j0, q) in self.stage2_probabilities(&cond, j1).into_iter().enumerate() {
                p[self.recombine(j1, j0)] = q;
            }
        }
        Ok(p)
    }

    /// Samples `j1`, conditions on it, then samples `j0` in the selected basis.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        rho: &ComplexMatrix,
        rng: &mut R,
    ) -> Result<FeedForwardOutcome> {
        self.check_state(rho)?;
        let conds: Vec<ComplexMatrix> = (0..self.d1).map(|j1| self.conditional(rho, j1)).collect();
        let p1: Vec<f64> = conds.iter().map(|c| c.trace().re.max(0.0)).collect();
        let j1 = draw_one(&p1, rng);
        let p0 = self.stage2_probabilities(&conds[j1], j1);
        let j0 = draw_one(&p0, rng);
        Ok(FeedForwardOutcome {
            j1,
            j0,
            j: self.recombine(j1, j0),
        })
    }
}

fn draw_one<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let counts = sample_with(p, 1, rng);
    counts.iter().position(|&c| c == 1).unwrap_or(0)
}

/// One seeded feed-forward measurement of `rho`.
pub fn simulate_feed_forward(
    rho: &ComplexMatrix,
    plan: &FeedForwardPlan,
    seed: u64,
) -> Result<FeedForwardOutcome> {
    plan.sample(rho, &mut rng_from_seed(seed))
}

/// Global `S_x` distribution `⟨j_x|ρ|j_x⟩`.
pub fn fourier_distribution(rho: &ComplexMatrix) -> Result<Vec<f64>> {
    let basis = fourier_basis(rho.rows())?;
    basis
        .iter()
        .map(|v| Ok(inner(v, &rho.mul_vec(v)?).re.max(0.0)))
        .collect()
}

/// Total-variation distance between two distributions.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Z,
    X,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Eavesdropper {
    #[default]
    None,
    /// Measures every round in a uniformly random basis and resends the
    /// eigenstate found.
    InterceptResend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub rounds: u64,
    pub d1: usize,
    pub d0: usize,
    pub seed: u64,
    #[serde(default)]
    pub eavesdropper: Eavesdropper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BasisTally {
    /// Rounds where both parties chose this basis.
    pub sifted: u64,
    pub errors: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub rounds: u64,
    pub d1: usize,
    pub d0: usize,
    pub eavesdropper: Eavesdropper,
    pub sifted_length: u64,
    pub errors: u64,
    pub qber: f64,
    pub z: BasisTally,
    pub x: BasisTally,
    pub seed: u64,
}

/// Measurement apparatus shared by receiver and eavesdropper.
struct Apparatus {
    plan: FeedForwardPlan,
    fourier: Vec<Vec<Complex64>>,
}

impl Apparatus {
    fn new(d1: usize, d0: usize) -> Result<Self> {
        Ok(Apparatus {
            plan: feed_forward_plan(d1, d0)?,
            fourier: fourier_basis(d1 * d0)?,
        })
    }

    fn prepare(&self, basis: Basis, symbol: usize) -> Vec<Complex64> {
        match basis {
            Basis::Z => {
                let mut v = vec![ZERO; self.plan.d()];
                v[symbol] = ONE;
                v
            }
            Basis::X => self.fourier[symbol].clone(),
        }
    }

    /// `Z`: subsystem 1 then subsystem 0 in their computational bases.
    /// `X`: the feed-forward plan.
    fn measure<R: Rng + ?Sized>(&self, basis: Basis, psi: &[Complex64], rng: &mut R) -> usize {
        let d0 = self.plan.d0;
        match basis {
            Basis::Z => {
                let p1: Vec<f64> = psi
                    .chunks(d0)
                    .map(|block| block.iter().map(|z| z.norm_sqr()).sum())
                    .collect();
                let k1 = draw_one(&p1, rng);
                let p0: Vec<f64> = psi[k1 * d0..(k1 + 1) * d0]
                    .iter()
                    .map(|z| z.norm_sqr())
                    .collect();
                d0 * k1 + draw_one(&p0, rng)
            }
            Basis::X => {
                self.plan
                    .sample(&outer(psi, psi), rng)
                    .expect("dimension fixed")
                    .j
            }
        }
    }
}

fn random_basis<R: Rng + ?Sized>(rng: &mut R) -> Basis {
    if rng.random::<bool>() {
        Basis::X
    } else {
        Basis::Z
    }
}

/// Simulates `rounds` independent rounds; round `r` draws from substream `r`
/// of the master seed, so the report does not depend on scheduling.
pub fn run_protocol(config: &ProtocolConfig) -> Result<ProtocolReport> {
    if config.rounds == 0 {
        return Err(Error::InvalidParameter("rounds must be at least 1".into()));
    }
    let app = Apparatus::new(config.d1, config.d0)?;
    let d = app.plan.d();
    let (z, x) = (0..config.rounds)
        .into_par_iter()
        .map(|round| {
            let mut rng = substream(config.seed, round);
            let alice = random_basis(&mut rng);
            let symbol = rng.random_range(0..d);
            let mut state = app.prepare(alice, symbol);
            if config.eavesdropper == Eavesdropper::InterceptResend {
                let eve = random_basis(&mut rng);
                let found = app.measure(eve, &state, &mut rng);
                state = app.prepare(eve, found);
            }
            let bob = random_basis(&mut rng);
            let got = app.measure(bob, &state, &mut rng);
            let mut tally = (BasisTally::default(), BasisTally::default());
            if alice == bob {
                let t = if alice == Basis::Z {
                    &mut tally.0
                } else {
                    &mut tally.1
                };
                t.sifted = 1;
                t.errors = u64::from(got != symbol);
            }
            tally
        })
        .reduce(
            || (BasisTally::default(), BasisTally::default()),
            |a, b| {
                (
                    BasisTally {
                        sifted: a.0.sifted + b.0.sifted,
                        errors: a.0.errors + b.0.errors,
                    },
                    BasisTally {
                        sifted: a.1.sifted + b.1.sifted,
                        errors: a.1.errors + b.1.errors,
                    },
                )
            },
        );
    let sifted_length = z.sifted + x.sifted;
    let errors = z.errors + x.errors;
    Ok(ProtocolReport {
        rounds: config.rounds,
        d1: config.d1,
        d0: config.d0,
        eavesdropper: config.eavesdropper,
        sifted_length,
        errors,
        qber: if sifted_length == 0 {
            0.0
        } else {
            errors as f64 / sifted_length as f64
        },
        z,
        x,
        seed: config.seed,
    })
}
