//! Scratch diagnostic: isolate the two reduction stages.
use ndarray::{Array1, Array2};
use spinsqueeze_core::dynamics::{self, DensityMatrix, IntegratorSettings};
use spinsqueeze_core::fullmodel;
use spinsqueeze_core::model::{self, DriveParams, HamiltonianSpec};
use spinsqueeze_core::spin::{self, EnsemblePair, OperatorKind};
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

/// Eq.-15-style intermediate model: 2 qubits + phonon, vertices λ a J+ + Λ a J- + h.c.
fn intermediate_h(c: &model::CouplingSet, n_ph: usize) -> Array2<C64> {
    let dim_ph = n_ph + 1;
    let dim = 4 * dim_ph;
    let mut a_ph = Array2::<C64>::zeros((dim_ph, dim_ph));
    for k in 1..dim_ph { a_ph[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0); }
    let eye_ph = Array2::eye(dim_ph).mapv(|v: f64| C64::new(v, 0.0));
    let eye2 = Array2::eye(2).mapv(|v: f64| C64::new(v, 0.0));
    let sp = {
        let mut m = Array2::<C64>::zeros((2, 2));
        m[(1, 0)] = C64::new(1.0, 0.0); // ascending basis: raise ↓→↑
        m
    };
    let sz = {
        let mut m = Array2::<C64>::zeros((2, 2));
        m[(0, 0)] = C64::new(-0.5, 0.0);
        m[(1, 1)] = C64::new(0.5, 0.0);
        m
    };
    let sm = spin::dagger(&sp);
    let lift = |op1: &Array2<C64>, op2: &Array2<C64>, ph: &Array2<C64>| {
        spin::kron(&spin::kron(&op1.view(), &op2.view()).view(), &ph.view())
    };
    let mut h = Array2::<C64>::zeros((dim, dim));
    // ε₁ Jz1 + ε₂ Jz2 in standard convention (εk/2 · paper-Jz = εk · std-Jz)
    h += &lift(&sz, &eye2, &eye_ph).mapv(|v| v * c.eps1);
    h += &lift(&eye2, &sz, &eye_ph).mapv(|v| v * c.eps2);
    // λ₁ a J1+ + Λ₁ a J1- + λ₂ a J2+ + Λ₂ a J2- + H.c.
    let mut v = lift(&sp, &eye2, &a_ph).mapv(|x| x * c.lam1);
    v += &lift(&sm, &eye2, &a_ph).mapv(|x| x * c.big_lam1);
    v += &lift(&eye2, &sp, &a_ph).mapv(|x| x * c.lam2);
    v += &lift(&eye2, &sm, &a_ph).mapv(|x| x * c.big_lam2);
    let vd = spin::dagger(&v);
    h += &v;
    h += &vd;
    h
}

fn trace_phonon(rho: &Array2<C64>, dim_s: usize, dim_ph: usize) -> Array2<C64> {
    let mut out = Array2::<C64>::zeros((dim_s, dim_s));
    for s in 0..dim_s {
        for t in 0..dim_s {
            let mut acc = C64::new(0.0, 0.0);
            for p in 0..dim_ph {
                acc += rho[(s * dim_ph + p, t * dim_ph + p)];
            }
            out[(s, t)] = acc;
        }
    }
    out
}

#[test]
fn stage_b_intermediate_vs_effective() {
    let drives = oracle_drives();
    let c = model::effective_couplings(&drives).unwrap();
    let pair = EnsemblePair::new(1, 1).unwrap();
    let n_ph = 2;
    let h_int = HamiltonianSpec::from_matrix(intermediate_h(&c, n_ph)).unwrap();
    let h_eff = model::build_h_eff(&c, pair).unwrap();

    // initial CSS-x ⊗ vacuum
    let x = spin::coherent_spin_state(1, std::f64::consts::FRAC_PI_2, 0.0).unwrap();
    let qubits = spin::product_state(&x, &x);
    let mut vac = Array1::<C64>::zeros(n_ph + 1);
    vac[0] = C64::new(1.0, 0.0);
    let psi_full = spin::product_state(&qubits, &vac);
    let rho0_int = DensityMatrix::from_pure(&psi_full, 0.0).unwrap();
    let rho0_eff = DensityMatrix::from_pure(&qubits, 0.0).unwrap();

    let t_grid: Vec<f64> = (0..=36).map(|k| k as f64 * 1e-6).collect();
    let s_int = IntegratorSettings { steps_per_period: 64, ..Default::default() };
    let s_eff = IntegratorSettings { steps_per_period: 64, ..Default::default() };
    let ti = dynamics::evolve(&rho0_int, &h_int, &[], &t_grid, &s_int).unwrap();
    let te = dynamics::evolve(&rho0_eff, &h_eff, &[], &t_grid, &s_eff).unwrap();
    for (si, se) in ti.states.as_ref().unwrap().iter().zip(te.states.as_ref().unwrap()).step_by(6) {
        let red = trace_phonon(&si.matrix, 4, n_ph + 1);
        let tr = spin::trace(&red).re;
        let red = red.mapv(|v| v / tr);
        let f = fullmodel::fidelity(&red, &se.matrix).unwrap();
        println!("t={:.1}us stageB fid={:.6}", si.time * 1e6, f);
    }
}
