//! Generalized Pauli operators `S_kl = S_x^k S_z^l` and the roots of unity
//! they are built from.
//!
//! Phases are kept as integer exponents of `exp(iπ/d)` ("half-units" of
//! `α_d = exp(2πi/d)`) so that products, powers and the half-integer phases
//! that appear in the eigenvalues stay exact. Conversion to floating point
//! happens only when a matrix or vector is materialized.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, ZERO};

pub fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Non-negative remainder.
pub fn modulo(x: i64, m: i64) -> i64 {
    x.rem_euclid(m)
}

/// The unit complex number `exp(iπ·num/d)`.
///
/// `Root::new(d, 2)` is `α_d`; even numerators are integer powers of `α_d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Root {
    d: usize,
    num: i64,
}

impl Root {
    /// Numerator is reduced modulo `2d`.
    pub fn new(d: usize, num: i64) -> Result<Self> {
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok(Root {
            d,
            num: modulo(num, 2 * d as i64),
        })
    }

    pub fn one(d: usize) -> Result<Self> {
        Self::new(d, 0)
    }

    /// `α_d^power`.
    pub fn alpha_pow(d: usize, power: i64) -> Result<Self> {
        Self::new(d, 2 * power)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Exponent in half-units, always in `[0, 2d)`.
    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn value(&self) -> Complex64 {
        let theta = PI * self.num as f64 / self.d as f64;
        Complex64::new(theta.cos(), theta.sin())
    }

    pub fn mul(&self, other: &Root) -> Result<Root> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: other.d,
            });
        }
        Root::new(self.d, self.num + other.num)
    }

    pub fn pow(&self, e: i64) -> Root {
        let m = 2 * self.d as i64;
        Root {
            d: self.d,
            num: modulo(modulo(self.num, m) * modulo(e, m), m),
        }
    }

    pub fn inv(&self) -> Root {
        Root {
            d: self.d,
            num: modulo(-self.num, 2 * self.d as i64),
        }
    }

    pub fn is_one(&self) -> bool {
        self.num == 0
    }
}

/// `exp(iπ·num/d)`, periodic in `num` with period `2d`.
pub fn root_value(d: usize, num: i64) -> Result<Complex64> {
    Ok(Root::new(d, num)?.value())
}

/// Label `(d, k, l)` of the operator `S_kl` on a `d`-level system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "LabelRepr", into = "LabelRepr")]
pub struct PauliLabel {
    d: usize,
    k: usize,
    l: usize,
}

#[derive(Serialize, Deserialize)]
struct LabelRepr {
    d: usize,
    k: usize,
    l: usize,
}

impl TryFrom<LabelRepr> for PauliLabel {
    type Error = Error;

    fn try_from(r: LabelRepr) -> Result<Self> {
        PauliLabel::new(r.d, r.k, r.l)
    }
}

impl From<PauliLabel> for LabelRepr {
    fn from(p: PauliLabel) -> Self {
        LabelRepr {
            d: p.d,
            k: p.k,
            l: p.l,
        }
    }
}

impl PauliLabel {
    pub fn new(d: usize, k: usize, l: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        if k >= d || l >= d {
            return Err(Error::InvalidLabel { d, k, l });
        }
        Ok(PauliLabel { d, k, l })
    }

    /// Reduces `k` and `l` modulo `d`.
    pub fn wrapping(d: usize, k: i64, l: i64) -> Result<Self> {
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        let m = d as i64;
        Ok(PauliLabel {
            d,
            k: modulo(k, m) as usize,
            l: modulo(l, m) as usize,
        })
    }

    pub fn identity(d: usize) -> Result<Self> {
        Self::new(d, 0, 0)
    }

    /// `S_x = S_10`.
    pub fn shift(d: usize) -> Result<Self> {
        Self::new(d, 1 % d, 0)
    }

    /// `S_z = S_01`.
    pub fn clock(d: usize) -> Result<Self> {
        Self::new(d, 0, 1 % d)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// `gcd(k, d)`, with `gcd(0, d) = d`.
    pub fn f(&self) -> usize {
        gcd(self.k, self.d)
    }

    /// `k / f`.
    pub fn w(&self) -> usize {
        self.k / self.f()
    }

    /// Number of eigenvectors per residue class, `d / f`.
    pub fn orbit(&self) -> usize {
        self.d / self.f()
    }

    pub fn is_identity(&self) -> bool {
        self.k == 0 && self.l == 0
    }

    /// All `d²` labels in lexicographic `(k, l)` order.
    pub fn all(d: usize) -> Result<Vec<PauliLabel>> {
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok((0..d)
            .flat_map(|k| (0..d).map(move |l| PauliLabel { d, k, l }))
            .collect())
    }

    /// The `d² − 1` non-identity labels in lexicographic order.
    pub fn non_identity(d: usize) -> Result<Vec<PauliLabel>> {
        Ok(Self::all(d)?
            .into_iter()
            .filter(|p| !p.is_identity())
            .collect())
    }

    fn check_same_d(&self, other: &PauliLabel) -> Result<()> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: other.d,
            });
        }
        Ok(())
    }
}

impl fmt::Display for PauliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S_{}{} (d={})", self.k, self.l, self.d)
    }
}

/// Matrix of `S_kl` in the `S_z` basis: entry `(m + k mod d, m)` is `α_d^{ml}`.
pub fn pauli_matrix(label: PauliLabel) -> ComplexMatrix {
    let d = label.d;
    let mut m = ComplexMatrix::zeros(d, d);
    for col in 0..d {
        let row = (col + label.k) % d;
        m[(row, col)] = Root::alpha_pow(d, (col * label.l) as i64)
            .expect("d > 0")
            .value();
    }
    m
}

/// Result of multiplying two Pauli operators: `S_a S_b = phase · S_result`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Product {
    /// Phase as half-units of `α_d`, in `[0, 2d)`.
    pub phase: i64,
    pub label: PauliLabel,
}

impl Product {
    pub fn phase_root(&self) -> Root {
        Root::new(self.label.d, self.phase).expect("d > 0")
    }
}

/// `S_a · S_b = α_d^{l_a k_b} · S_{[k_a+k_b], [l_a+l_b]}`.
pub fn compose(a: PauliLabel, b: PauliLabel) -> Result<Product> {
    a.check_same_d(&b)?;
    let d = a.d;
    let phase = modulo(2 * (a.l * b.k) as i64, 2 * d as i64);
    Ok(Product {
        phase,
        label: PauliLabel {
            d,
            k: (a.k + b.k) % d,
            l: (a.l + b.l) % d,
        },
    })
}

/// `S_a^n` as `phase · S_label`, by repeated composition.
pub fn power(a: PauliLabel, n: usize) -> Product {
    let d = a.d;
    let mut acc = Product {
        phase: 0,
        label: PauliLabel { d, k: 0, l: 0 },
    };
    for _ in 0..n {
        let step = compose(acc.label, a).expect("same dimension");
        acc = Product {
            phase: modulo(acc.phase + step.phase, 2 * d as i64),
            label: step.label,
        };
    }
    acc
}

/// True iff `k_a l_b − l_a k_b ≡ 0 (mod d)`.
pub fn commutes(a: PauliLabel, b: PauliLabel) -> Result<bool> {
    a.check_same_d(&b)?;
    let d = a.d as i64;
    let symplectic = (a.k * b.l) as i64 - (a.l * b.k) as i64;
    Ok(modulo(symplectic, d) == 0)
}

/// Sparse action of `S_kl` on a vector in the `S_z` basis.
pub fn apply_pauli(label: PauliLabel, v: &[Complex64]) -> Result<Vec<Complex64>> {
    let d = label.d;
    if v.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: v.len(),
        });
    }
    let mut out = vec![ZERO; d];
    for (m, amp) in v.iter().enumerate() {
        let phase = Root::alpha_pow(d, (m * label.l) as i64)?.value();
        out[(m + label.k) % d] += phase * amp;
    }
    Ok(out)
}
