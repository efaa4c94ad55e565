//! Scratch: numerically extract the vacuum-sector effective Hamiltonian of
//! the intermediate model and compare to the analytic projection.
use ndarray::{Array1, Array2};
use spinsqueeze_core::model::{self, DriveParams};
use spinsqueeze_core::spin::{self, EnsemblePair};
use spinsqueeze_core::{C64, TWO_PI};

fn mhz(v: f64) -> f64 { TWO_PI * v * 1e6 }

fn oracle_drives() -> DriveParams {
    let delta1 = mhz(300.0);
    let omega = delta1 / 10.0;
    let nu = mhz(305.0);
    let delta_s = mhz(6.0);
    let delta2 = nu - delta_s + omega * omega / (4.0 * delta1);
    let mut delta4 = nu + delta_s;
    for _ in 0..40 {
        delta4 = nu + delta_s - omega * omega / (4.0 * delta4);
    }
    DriveParams {
        omega1: omega, omega2: 0.0, omega3: 0.0, omega4: omega,
        delta1, delta2, delta3: mhz(310.0), delta4,
        nu, g_n: mhz(10.0), w1: 0.0, w2: 0.0,
    }
}

fn intermediate_h(c: &model::CouplingSet, n_ph: usize) -> Array2<C64> {
    let dim_ph = n_ph + 1;
    let dim = 4 * dim_ph;
    let mut a_ph = Array2::<C64>::zeros((dim_ph, dim_ph));
    for k in 1..dim_ph { a_ph[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0); }
    let eye_ph = Array2::eye(dim_ph).mapv(|v: f64| C64::new(v, 0.0));
    let eye2 = Array2::eye(2).mapv(|v: f64| C64::new(v, 0.0));
    let mut sp = Array2::<C64>::zeros((2, 2));
    sp[(1, 0)] = C64::new(1.0, 0.0);
    let mut sz = Array2::<C64>::zeros((2, 2));
    sz[(0, 0)] = C64::new(-0.5, 0.0);
    sz[(1, 1)] = C64::new(0.5, 0.0);
    let sm = spin::dagger(&sp);
    let lift = |op1: &Array2<C64>, op2: &Array2<C64>, ph: &Array2<C64>| {
        spin::kron(&spin::kron(&op1.view(), &op2.view()).view(), &ph.view())
    };
    let mut h = Array2::<C64>::zeros((dim, dim));
    h += &lift(&sz, &eye2, &eye_ph).mapv(|v| v * c.eps1);
    h += &lift(&eye2, &sz, &eye_ph).mapv(|v| v * c.eps2);
    let mut v = lift(&sp, &eye2, &a_ph).mapv(|x| x * c.lam1);
    v += &lift(&sm, &eye2, &a_ph).mapv(|x| x * c.big_lam1);
    v += &lift(&eye2, &sp, &a_ph).mapv(|x| x * c.lam2);
    v += &lift(&eye2, &sm, &a_ph).mapv(|x| x * c.big_lam2);
    let vd = spin::dagger(&v);
    h += &v;
    h += &vd;
    h
}

#[test]
fn numeric_block_diagonalization() {
    let drives = oracle_drives();
    let c = model::effective_couplings(&drives).unwrap();
    let pair = EnsemblePair::new(1, 1).unwrap();
    let n_ph = 6; // converged in the virtual-phonon regime
    let dim_ph = n_ph + 1;
    let h_int = intermediate_h(&c, n_ph);
    let (w, v) = spin::hermitian_eigs(&h_int).unwrap();

    // vacuum-sector qubit states |s1 s2⟩ ⊗ |0⟩: full index = (s1*2+s2)*dim_ph
    let sector: Vec<usize> = (0..4).map(|q| q * dim_ph).collect();
    // pick for each sector state the eigenvector with largest overlap
    let mut h_red = Array2::<C64>::zeros((4, 4));
    let mut chosen = Vec::new();
    for &sidx in &sector {
        let (mut best, mut best_ov) = (0usize, 0.0f64);
        for k in 0..h_int.nrows() {
            let ov = v[(sidx, k)].norm_sqr();
            if ov > best_ov && !chosen.contains(&k) {
                best = k;
                best_ov = ov;
            }
        }
        chosen.push(best);
        println!("sector state {} -> eigvec {} overlap {:.4} energy {:.6e}", sidx, best, best_ov, w[best]);
    }
    // effective H in that subspace: H_red[a,b] = Σ_k w_k ⟨a|k⟩⟨k|b⟩ over chosen k
    for (ai, &a) in sector.iter().enumerate() {
        for (bi, &b) in sector.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for &k in &chosen {
                acc += C64::new(w[k], 0.0) * v[(a, k)] * v[(b, k)].conj();
            }
            h_red[(ai, bi)] = acc;
        }
    }
    let h_eff = model::build_h_eff(&c, pair).unwrap();
    println!("numeric effective (real parts, kHz/2pi):");
    for i in 0..4 {
        let row: Vec<String> = (0..4).map(|k| format!("{:9.3}", h_red[(i, k)].re / TWO_PI / 1e3)).collect();
        println!("  {}", row.join(" "));
    }
    println!("analytic projected (real parts, kHz/2pi):");
    for i in 0..4 {
        let row: Vec<String> = (0..4).map(|k| format!("{:9.3}", h_eff.matrix[(i, k)].re / TWO_PI / 1e3)).collect();
        println!("  {}", row.join(" "));
    }
}
