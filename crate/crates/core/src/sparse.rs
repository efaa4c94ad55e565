//! Minimal CSR matrices for the integrator hot path.
//!
//! Every operator on the product Dicke space (Jz terms, ladder products,
//! pair-exchange terms) is banded with O(dim) nonzeros, so `S·ρ` and `ρ·S`
//! cost O(nnz·dim) instead of the O(dim³) of a dense product. Density
//! matrices stay dense; only the fixed operators are stored sparse.

use ndarray::{Array2, ArrayView2};

use crate::C64;

/// Compressed sparse row matrix over complex entries. Rows are sorted by
/// column index and hold no explicit zeros.
#[derive(Debug, Clone)]
pub struct Csr {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Csr {
    /// Extract the nonzero pattern of a dense square matrix. Entries with
    /// magnitude at or below `drop_tol` are discarded.
    pub fn from_dense(a: ArrayView2<C64>, drop_tol: f64) -> Self {
        let dim = a.nrows();
        assert_eq!(dim, a.ncols(), "Csr::from_dense requires a square matrix");
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..dim {
            for j in 0..dim {
                let v = a[(i, j)];
                if v.norm() > drop_tol {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Csr { dim, row_ptr, cols, vals }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Csr {
            dim,
            row_ptr: (0..=dim).collect(),
            cols: (0..dim).collect(),
            vals: vec![C64::new(1.0, 0.0); dim],
        };
        m.row_ptr[dim] = dim;
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut a = Array2::zeros((self.dim, self.dim));
        for i in 0..self.dim {
            for e in self.row_ptr[i]..self.row_ptr[i + 1] {
                a[(i, self.cols[e])] = self.vals[e];
            }
        }
        a
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let mut counts = vec![0usize; self.dim + 1];
        for &c in &self.cols {
            counts[c + 1] += 1;
        }
        for i in 0..self.dim {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut cols = vec![0usize; self.nnz()];
        let mut vals = vec![C64::new(0.0, 0.0); self.nnz()];
        let mut next = counts;
        for i in 0..self.dim {
            for e in self.row_ptr[i]..self.row_ptr[i + 1] {
                let c = self.cols[e];
                let slot = next[c];
                next[c] += 1;
                cols[slot] = i;
                vals[slot] = self.vals[e].conj();
            }
        }
        // rows come out sorted because the source rows are scanned in order
        Csr { dim: self.dim, row_ptr, cols, vals }
    }

    /// Sparse-sparse product `self · rhs`.
    pub fn matmul(&self, rhs: &Csr) -> Csr {
        assert_eq!(self.dim, rhs.dim);
        let dim = self.dim;
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        let mut acc = vec![C64::new(0.0, 0.0); dim];
        let mut touched = Vec::new();
        for i in 0..dim {
            for e in self.row_ptr[i]..self.row_ptr[i + 1] {
                let k = self.cols[e];
                let v = self.vals[e];
                for f in rhs.row_ptr[k]..rhs.row_ptr[k + 1] {
                    let j = rhs.cols[f];
                    if acc[j] == C64::new(0.0, 0.0) {
                        touched.push(j);
                    }
                    acc[j] += v * rhs.vals[f];
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                if acc[j].norm() > 0.0 {
                    cols.push(j);
                    vals.push(acc[j]);
                }
                acc[j] = C64::new(0.0, 0.0);
            }
            touched.clear();
            row_ptr.push(cols.len());
        }
        Csr { dim, row_ptr, cols, vals }
    }

    /// Sum `self + coeff·rhs`.
    pub fn add_scaled(&self, coeff: C64, rhs: &Csr) -> Csr {
        assert_eq!(self.dim, rhs.dim);
        let dim = self.dim;
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..dim {
            let (mut a, ahi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let (mut b, bhi) = (rhs.row_ptr[i], rhs.row_ptr[i + 1]);
            while a < ahi || b < bhi {
                let ca = if a < ahi { self.cols[a] } else { usize::MAX };
                let cb = if b < bhi { rhs.cols[b] } else { usize::MAX };
                if ca < cb {
                    cols.push(ca);
                    vals.push(self.vals[a]);
                    a += 1;
                } else if cb < ca {
                    cols.push(cb);
                    vals.push(coeff * rhs.vals[b]);
                    b += 1;
                } else {
                    let v = self.vals[a] + coeff * rhs.vals[b];
                    if v.norm() > 0.0 {
                        cols.push(ca);
                        vals.push(v);
                    }
                    a += 1;
                    b += 1;
                }
            }
            row_ptr.push(cols.len());
        }
        Csr { dim, row_ptr, cols, vals }
    }

    pub fn scale(&mut self, coeff: C64) {
        for v in &mut self.vals {
            *v *= coeff;
        }
    }

    /// `out += coeff · (self · rho)`. `rho` and `out` must be standard-layout
    /// square matrices of matching dimension.
    pub fn acc_mul_left(&self, coeff: C64, rho: &Array2<C64>, out: &mut Array2<C64>) {
        let n = self.dim;
        let rho_s = rho.as_slice().expect("rho must be standard layout");
        let out_s = out.as_slice_mut().expect("out must be standard layout");
        for i in 0..n {
            let out_row = &mut out_s[i * n..(i + 1) * n];
            for e in self.row_ptr[i]..self.row_ptr[i + 1] {
                let k = self.cols[e];
                let cv = coeff * self.vals[e];
                let rho_row = &rho_s[k * n..(k + 1) * n];
                for (o, r) in out_row.iter_mut().zip(rho_row) {
                    *o += cv * *r;
                }
            }
        }
    }

    /// `out += coeff · (rho · self)`.
    pub fn acc_mul_right(&self, coeff: C64, rho: &Array2<C64>, out: &mut Array2<C64>) {
        let n = self.dim;
        let rho_s = rho.as_slice().expect("rho must be standard layout");
        let out_s = out.as_slice_mut().expect("out must be standard layout");
        for i in 0..n {
            let rho_row = &rho_s[i * n..(i + 1) * n];
            let out_row = &mut out_s[i * n..(i + 1) * n];
            for k in 0..n {
                let r = rho_row[k];
                if r == C64::new(0.0, 0.0) {
                    continue;
                }
                for e in self.row_ptr[k]..self.row_ptr[k + 1] {
                    out_row[self.cols[e]] += r * (coeff * self.vals[e]);
                }
            }
        }
    }

    /// Tr(ρ · self), in O(nnz).
    pub fn expectation(&self, rho: &Array2<C64>) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for r in 0..self.dim {
            for e in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += rho[(self.cols[e], r)] * self.vals[e];
            }
        }
        acc
    }

    /// Maximum absolute row sum (operator ∞-norm).
    pub fn inf_norm(&self) -> f64 {
        (0..self.dim)
            .map(|i| {
                self.vals[self.row_ptr[i]..self.row_ptr[i + 1]]
                    .iter()
                    .map(|v| v.norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Real part of the diagonal.
    pub fn diag_real(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.dim];
        for i in 0..self.dim {
            for e in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.cols[e] == i {
                    d[i] = self.vals[e].re;
                }
            }
        }
        d
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let adj = self.dagger();
        let diff = self.add_scaled(C64::new(-1.0, 0.0), &adj);
        diff.vals.iter().all(|v| v.norm() <= tol)
    }
}
