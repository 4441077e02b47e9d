//! Seeded random states and unitaries.
//!
//! Everything here draws from a caller-supplied generator; [`rng_from_seed`]
//! and [`substream`] give the deterministic ChaCha streams used throughout.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix::{normalize, outer, ComplexMatrix};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` derived from a master seed.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Haar-distributed unitary via QR of a complex Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = DMatrix::from_fn(n, n, |_, _| complex_normal(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..n {
        let diag = r[(c, c)];
        let phase = if diag.norm() > 0.0 {
            diag / diag.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for row in 0..n {
            q[(row, c)] *= phase;
        }
    }
    ComplexMatrix::from_nalgebra(&q)
}

/// Uniformly random normalized pure state.
pub fn random_pure_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..d).map(|_| complex_normal(rng)).collect();
    normalize(&v)
}

/// Random full-rank mixed state `G G† / Tr(G G†)` from a Ginibre matrix.
pub fn random_density_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(d, d, |_, _| complex_normal(rng));
    let rho = &g * &g.adjoint();
    let tr = rho.trace().re;
    rho.scale(Complex64::new(1.0 / tr, 0.0))
}

/// `|ψ⟩⟨ψ|`.
pub fn pure_density(psi: &[Complex64]) -> ComplexMatrix {
    outer(psi, psi)
}
