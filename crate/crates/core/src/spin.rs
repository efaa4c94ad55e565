//! Collective spin operators in the symmetric (Dicke) subspace and their
//! composition on the two-ensemble product space.
//!
//! An ensemble of `n` spins is restricted to its maximal-j multiplet,
//! j = n/2, with basis |j, m⟩ ordered by ascending m (index i ↔ m = i − j).
//! In that basis Jz is diagonal with entries m and J⁺ carries the ladder
//! coefficients √((j−m)(j+m+1)). The two-ensemble space is the tensor
//! product with segment 1 as the major index.
//!
//! Angular-momentum convention is the standard one ([J⁺,J⁻] = 2Jz with Jz
//! eigenvalues in integer steps); Hamiltonian coefficients quoted for the
//! Pauli-style convention (eigenvalue steps of 2) are doubled where the
//! Hamiltonians are assembled in [`crate::model`].

use ndarray::{Array1, Array2, ArrayView2};

use crate::{Error, Result, C64};

/// Spin counts of the two driven segments and the derived Dicke dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnsemblePair {
    n1: usize,
    n2: usize,
}

impl EnsemblePair {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n1 < 1 {
            return Err(Error::BadSpinCount(n1));
        }
        if n2 < 1 {
            return Err(Error::BadSpinCount(n2));
        }
        Ok(EnsemblePair { n1, n2 })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn n_tot(&self) -> usize {
        self.n1 + self.n2
    }

    /// Dicke dimension of segment 1, n1 + 1.
    pub fn dim1(&self) -> usize {
        self.n1 + 1
    }

    /// Dicke dimension of segment 2, n2 + 1.
    pub fn dim2(&self) -> usize {
        self.n2 + 1
    }

    /// Product dimension (n1 + 1)(n2 + 1).
    pub fn dim(&self) -> usize {
        self.dim1() * self.dim2()
    }
}

/// Which collective component an operator represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Jx,
    Jy,
    Jz,
    /// Raising operator J⁺.
    Jp,
    /// Lowering operator J⁻.
    Jm,
}

/// Which part of the pair an embedded operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    One,
    Two,
}

/// Label of a collective operator on the product space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentTag {
    One,
    Two,
    Total,
}

/// A labelled operator on the two-ensemble product space.
#[derive(Debug, Clone)]
pub struct CollectiveOperator {
    pub matrix: Array2<C64>,
    pub kind: OperatorKind,
    pub segment: SegmentTag,
}

/// Spin-j matrix representation of a collective operator for `n` spins,
/// j = n/2, on the (n+1)-dimensional Dicke space.
pub fn collective_operator(kind: OperatorKind, n: usize) -> Result<Array2<C64>> {
    if n < 1 {
        return Err(Error::BadSpinCount(n));
    }
    let dim = n + 1;
    let j = 0.5 * n as f64;
    let m_of = |i: usize| i as f64 - j;
    match kind {
        OperatorKind::Jz => {
            let mut a = Array2::zeros((dim, dim));
            for i in 0..dim {
                a[(i, i)] = C64::new(m_of(i), 0.0);
            }
            Ok(a)
        }
        OperatorKind::Jp => {
            let mut a = Array2::zeros((dim, dim));
            for i in 0..n {
                let m = m_of(i);
                a[(i + 1, i)] = C64::new(((j - m) * (j + m + 1.0)).sqrt(), 0.0);
            }
            Ok(a)
        }
        OperatorKind::Jm => Ok(dagger(&collective_operator(OperatorKind::Jp, n)?)),
        OperatorKind::Jx => {
            let jp = collective_operator(OperatorKind::Jp, n)?;
            let jm = dagger(&jp);
            Ok((&jp + &jm).mapv(|v| v * 0.5))
        }
        OperatorKind::Jy => {
            let jp = collective_operator(OperatorKind::Jp, n)?;
            let jm = dagger(&jp);
            Ok((&jp - &jm).mapv(|v| v * C64::new(0.0, -0.5)))
        }
    }
}

/// Lift a single-segment operator to the product space: op ⊗ 𝟙 for segment
/// 1, 𝟙 ⊗ op for segment 2.
pub fn embed(op: ArrayView2<C64>, pair: EnsemblePair, segment: Segment) -> Result<Array2<C64>> {
    let (own, other) = match segment {
        Segment::One => (pair.dim1(), pair.dim2()),
        Segment::Two => (pair.dim2(), pair.dim1()),
    };
    if op.nrows() != own || op.ncols() != own {
        return Err(Error::DimensionMismatch { expected: own, got: op.nrows() });
    }
    let eye = Array2::eye(other).mapv(|v: f64| C64::new(v, 0.0));
    match segment {
        Segment::One => Ok(kron(&op, &eye.view())),
        Segment::Two => Ok(kron(&eye.view(), &op)),
    }
}

/// Labelled collective operator of one segment, or the sum over both.
pub fn pair_operator(
    pair: EnsemblePair,
    kind: OperatorKind,
    segment: SegmentTag,
) -> Result<CollectiveOperator> {
    let matrix = match segment {
        SegmentTag::One => embed(
            collective_operator(kind, pair.n1())?.view(),
            pair,
            Segment::One,
        )?,
        SegmentTag::Two => embed(
            collective_operator(kind, pair.n2())?.view(),
            pair,
            Segment::Two,
        )?,
        SegmentTag::Total => {
            let s1 = embed(
                collective_operator(kind, pair.n1())?.view(),
                pair,
                Segment::One,
            )?;
            let s2 = embed(
                collective_operator(kind, pair.n2())?.view(),
                pair,
                Segment::Two,
            )?;
            s1 + s2
        }
    };
    Ok(CollectiveOperator { matrix, kind, segment })
}

/// Coherent spin state of `n` spins all pointing along (θ, φ):
/// c_m = √C(n, j−m) cos(θ/2)^{j+m} sin(θ/2)^{j−m} e^{−i(j−m)φ}.
pub fn coherent_spin_state(n: usize, theta: f64, phi: f64) -> Result<Array1<C64>> {
    if n < 1 {
        return Err(Error::BadSpinCount(n));
    }
    let dim = n + 1;
    let (c, s) = ((0.5 * theta).cos(), (0.5 * theta).sin());
    let mut psi = Array1::zeros(dim);
    for i in 0..dim {
        // index i ↔ m = i − j, so j+m = i and j−m = n−i
        let k = n - i;
        let amp = binomial(n, k).sqrt() * c.powi(i as i32) * s.powi(k as i32);
        psi[i] = C64::from_polar(amp, -(k as f64) * phi);
    }
    let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    psi.mapv_inplace(|a| a / norm);
    Ok(psi)
}

/// Product of per-segment pure states on the pair space (segment-1 major).
pub fn product_state(psi1: &Array1<C64>, psi2: &Array1<C64>) -> Array1<C64> {
    let mut out = Array1::zeros(psi1.len() * psi2.len());
    for (i, a) in psi1.iter().enumerate() {
        for (k, b) in psi2.iter().enumerate() {
            out[i * psi2.len() + k] = a * b;
        }
    }
    out
}

/// Tr(ρ·op).
pub fn expectation(rho: ArrayView2<C64>, op: ArrayView2<C64>) -> Result<C64> {
    if rho.nrows() != op.nrows() || rho.ncols() != op.ncols() {
        return Err(Error::DimensionMismatch { expected: rho.nrows(), got: op.nrows() });
    }
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..rho.nrows() {
        for k in 0..rho.ncols() {
            acc += rho[(i, k)] * op[(k, i)];
        }
    }
    Ok(acc)
}

/// Total parity operator exp(iπ(Jz₁ + Jz₂)), diagonal in the product basis.
pub fn parity_operator(pair: EnsemblePair) -> Array2<C64> {
    let (j1, j2) = (0.5 * pair.n1() as f64, 0.5 * pair.n2() as f64);
    let mut p = Array2::zeros((pair.dim(), pair.dim()));
    for i1 in 0..pair.dim1() {
        for i2 in 0..pair.dim2() {
            let m_sum = (i1 as f64 - j1) + (i2 as f64 - j2);
            let idx = i1 * pair.dim2() + i2;
            p[(idx, idx)] = C64::from_polar(1.0, std::f64::consts::PI * m_sum);
        }
    }
    p
}

// --- dense matrix helpers shared across the crate ---

/// Kronecker product a ⊗ b.
pub fn kron(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> Array2<C64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::zeros((ra * rb, ca * cb));
    for ia in 0..ra {
        for ja in 0..ca {
            let v = a[(ia, ja)];
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            for ib in 0..rb {
                for jb in 0..cb {
                    out[(ia * rb + ib, ja * cb + jb)] = v * b[(ib, jb)];
                }
            }
        }
    }
    out
}

/// Conjugate transpose.
pub fn dagger(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|v| v.conj())
}

/// [a, b] = ab − ba.
pub fn commutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b) - b.dot(a)
}

/// {a, b} = ab + ba.
pub fn anticommutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b) + b.dot(a)
}

pub fn frobenius_norm(a: &Array2<C64>) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(a: &Array2<C64>) -> C64 {
    a.diag().sum()
}

/// Hermitian eigendecomposition with eigenvectors as columns, normalized so
/// that a = V·diag(w)·V†. The backend returns the conjugated convention for
/// complex row-major input, which this wrapper undoes; the unit test below
/// pins the contract.
pub fn hermitian_eigs(
    a: &Array2<C64>,
) -> crate::Result<(ndarray::Array1<f64>, Array2<C64>)> {
    use ndarray_linalg::{Eigh, UPLO};
    let (w, v) = a.eigh(UPLO::Lower)?;
    Ok((w, v.mapv(|x| x.conj())))
}

/// |ψ⟩⟨ψ| as a dense matrix.
pub fn outer(psi: &Array1<C64>) -> Array2<C64> {
    let n = psi.len();
    let mut rho = Array2::zeros((n, n));
    for i in 0..n {
        for k in 0..n {
            rho[(i, k)] = psi[i] * psi[k].conj();
        }
    }
    rho
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}
