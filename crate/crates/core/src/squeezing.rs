//! Squeezing parameters and auxiliary observables.
//!
//! ξ_S² = 4(ΔJ_⊥)²_min / N_tot and ξ_R² = N_tot (ΔJ_⊥)²_min / |⟨J⟩|²,
//! where (ΔJ_⊥)²_min is the smallest variance among directions orthogonal
//! to the mean spin ⟨J⟩ and |⟨J⟩| is the mean-spin-vector magnitude
//! √(⟨Jx⟩²+⟨Jy⟩²+⟨Jz⟩²). The transverse minimum is closed-form: the smaller
//! eigenvalue of the symmetrized 2×2 covariance in an orthonormal
//! transverse basis.
//!
//! All observables are evaluated as sparse traces against a precomputed
//! [`SpinFrame`], so a full record costs O(dim) on top of the O(dim²)
//! purity sum.

use crate::sparse::Csr;
use crate::spin::{self, EnsemblePair, OperatorKind};
use crate::dynamics::DensityMatrix;
use crate::{Error, Result, C64};

/// Mean-spin length below which the transverse direction is undefined.
pub const MEAN_SPIN_FLOOR: f64 = 1e-9;

/// Precomputed total-spin operators and their symmetrized second moments.
pub struct SpinFrame {
    n_tot: usize,
    first: [Csr; 3],
    /// Upper triangle of S_ab = (J_a J_b + J_b J_a)/2 in x, y, z order:
    /// xx, xy, xz, yy, yz, zz.
    second: [Csr; 6],
}

impl SpinFrame {
    /// Frame for the two-ensemble product space (total operators).
    pub fn for_pair(pair: EnsemblePair) -> Result<Self> {
        let mut total = Vec::with_capacity(3);
        for kind in [OperatorKind::Jx, OperatorKind::Jy, OperatorKind::Jz] {
            let op = spin::pair_operator(pair, kind, spin::SegmentTag::Total)?;
            total.push(Csr::from_dense(op.matrix.view(), 0.0));
        }
        Ok(Self::assemble(pair.n_tot(), total))
    }

    /// Frame for a single ensemble of `n` spins.
    pub fn for_single(n: usize) -> Result<Self> {
        let mut total = Vec::with_capacity(3);
        for kind in [OperatorKind::Jx, OperatorKind::Jy, OperatorKind::Jz] {
            let op = spin::collective_operator(kind, n)?;
            total.push(Csr::from_dense(op.view(), 0.0));
        }
        Ok(Self::assemble(n, total))
    }

    fn assemble(n_tot: usize, total: Vec<Csr>) -> Self {
        let half = C64::new(0.5, 0.0);
        let mut second = Vec::with_capacity(6);
        for a in 0..3 {
            for b in a..3 {
                let ab = total[a].matmul(&total[b]);
                let ba = total[b].matmul(&total[a]);
                let mut s = ab.add_scaled(C64::new(1.0, 0.0), &ba);
                s.scale(half);
                second.push(s);
            }
        }
        let [jx, jy, jz]: [Csr; 3] = total.try_into().ok().expect("three components");
        SpinFrame {
            n_tot,
            first: [jx, jy, jz],
            second: second.try_into().ok().expect("six moments"),
        }
    }

    pub fn n_tot(&self) -> usize {
        self.n_tot
    }

    pub fn dim(&self) -> usize {
        self.first[0].dim()
    }

    fn second_moment(&self, a: usize, b: usize) -> &Csr {
        // index into the packed upper triangle
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let idx = match (a, b) {
            (0, 0) => 0,
            (0, 1) => 1,
            (0, 2) => 2,
            (1, 1) => 3,
            (1, 2) => 4,
            (2, 2) => 5,
            _ => unreachable!(),
        };
        &self.second[idx]
    }

    fn check_dim(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: rho.dim() });
        }
        Ok(())
    }
}

/// (⟨Jx⟩, ⟨Jy⟩, ⟨Jz⟩) of the total spin.
pub fn mean_spin(rho: &DensityMatrix, frame: &SpinFrame) -> Result<[f64; 3]> {
    frame.check_dim(rho)?;
    let mut m = [0.0; 3];
    for (a, op) in frame.first.iter().enumerate() {
        m[a] = op.expectation(&rho.matrix).re;
    }
    Ok(m)
}

/// Symmetrized 3×3 covariance C_ab = ⟨{J_a,J_b}⟩/2 − ⟨J_a⟩⟨J_b⟩.
fn covariance(rho: &DensityMatrix, frame: &SpinFrame, mean: &[f64; 3]) -> [[f64; 3]; 3] {
    let mut c = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in a..3 {
            let v = frame.second_moment(a, b).expectation(&rho.matrix).re - mean[a] * mean[b];
            c[a][b] = v;
            c[b][a] = v;
        }
    }
    c
}

/// Fixed transverse basis: n̂₁ = normalized ẑ × m̂ (or x̂ when m̂ ∥ ẑ) and
/// n̂₂ = m̂ × n̂₁.
fn transverse_basis(m: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let len = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
    let mh = [m[0] / len, m[1] / len, m[2] / len];
    let zxm = [-mh[1], mh[0], 0.0];
    let zlen = (zxm[0] * zxm[0] + zxm[1] * zxm[1]).sqrt();
    let n1 = if zlen > 1e-12 {
        [zxm[0] / zlen, zxm[1] / zlen, 0.0]
    } else {
        [1.0, 0.0, 0.0]
    };
    let n2 = [
        mh[1] * n1[2] - mh[2] * n1[1],
        mh[2] * n1[0] - mh[0] * n1[2],
        mh[0] * n1[1] - mh[1] * n1[0],
    ];
    (n1, n2)
}

/// Smallest variance over directions perpendicular to the mean spin: the
/// smaller eigenvalue of the transverse 2×2 covariance block.
pub fn min_transverse_variance(rho: &DensityMatrix, frame: &SpinFrame) -> Result<f64> {
    let m = mean_spin(rho, frame)?;
    let len = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
    if len <= MEAN_SPIN_FLOOR {
        return Err(Error::UndefinedDirection(len));
    }
    let c = covariance(rho, frame, &m);
    let (n1, n2) = transverse_basis(&m);
    let quad = |u: &[f64; 3], v: &[f64; 3]| {
        let mut acc = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                acc += u[a] * c[a][b] * v[b];
            }
        }
        acc
    };
    let c11 = quad(&n1, &n1);
    let c22 = quad(&n2, &n2);
    let c12 = quad(&n1, &n2);
    Ok(0.5 * (c11 + c22 - ((c11 - c22).powi(2) + 4.0 * c12 * c12).sqrt()))
}

/// ξ_S² = 4(ΔJ_⊥)²_min / N_tot.
pub fn xi_s(rho: &DensityMatrix, frame: &SpinFrame) -> Result<f64> {
    Ok(4.0 * min_transverse_variance(rho, frame)? / frame.n_tot as f64)
}

/// ξ_R² = N_tot (ΔJ_⊥)²_min / |⟨J⟩|².
pub fn xi_r(rho: &DensityMatrix, frame: &SpinFrame) -> Result<f64> {
    let m = mean_spin(rho, frame)?;
    let len2 = m[0] * m[0] + m[1] * m[1] + m[2] * m[2];
    if len2.sqrt() <= MEAN_SPIN_FLOOR {
        return Err(Error::UndefinedDirection(len2.sqrt()));
    }
    Ok(frame.n_tot as f64 * min_transverse_variance(rho, frame)? / len2)
}

/// ⟨(Jx₁+Jx₂)²⟩ of the total spin.
pub fn jx2(rho: &DensityMatrix, frame: &SpinFrame) -> Result<f64> {
    frame.check_dim(rho)?;
    Ok(frame.second_moment(0, 0).expectation(&rho.matrix).re)
}

/// One time-stamped squeezing sample.
#[derive(Debug, Clone, Copy)]
pub struct SqueezingRecord {
    pub time: f64,
    pub xi_s2: f64,
    pub xi_r2: f64,
    pub mean_spin: [f64; 3],
    pub jx2: f64,
    pub trace_err: f64,
    pub purity: f64,
}

/// Evaluate every observable of the record at once (one covariance pass).
pub fn record(rho: &DensityMatrix, frame: &SpinFrame) -> Result<SqueezingRecord> {
    let m = mean_spin(rho, frame)?;
    let len = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
    if len <= MEAN_SPIN_FLOOR {
        return Err(Error::UndefinedDirection(len));
    }
    let var = min_transverse_variance(rho, frame)?;
    let n = frame.n_tot as f64;
    Ok(SqueezingRecord {
        time: rho.time,
        xi_s2: 4.0 * var / n,
        xi_r2: n * var / (len * len),
        mean_spin: m,
        jx2: jx2(rho, frame)?,
        trace_err: rho.trace_error(),
        purity: rho.purity(),
    })
}
