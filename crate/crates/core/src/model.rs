//! From physical drive parameters to effective Hamiltonians.
//!
//! Two microwave tones per segment, far detuned from the upper orbital
//! levels, leave an effective two-level ensemble coupled to the shared
//! acoustic mode with beam-splitter (λ) and two-mode-squeezing (Λ) vertices.
//! Eliminating the detuned mode in second order produces the projected spin
//! Hamiltonian
//!
//! H = (Δ_s/2)J₁ᶻ − (Δ_s/2)J₂ᶻ + (1/Δ_s)·[λ₁²J₁⁺J₁⁻ − λ₂²J₂⁺J₂⁻
//!     − Λ₁²J₁⁻J₁⁺ + Λ₂²J₂⁻J₂⁺ + (λ₁Λ₂−λ₂Λ₁)(J₁⁺J₂⁺ + J₁⁻J₂⁻)]
//!
//! written here for the Pauli-style Jᶻ (eigenvalue steps of 2). All builders
//! in this module emit matrices in the standard angular-momentum convention,
//! so the Jᶻ coefficients above are doubled at assembly time.
//!
//! Depending on the drive balance the interaction reduces to one-axis
//! twisting (OAT), a cross-ensemble pair-exchange term (TATS), or a mixed
//! form containing both; [`classify`] detects which regime a coupling set
//! realizes and the `build_*` functions construct the matching matrices.

use ndarray::Array2;

use crate::spin::{self, EnsemblePair, OperatorKind};
use crate::{Error, Result, C64};

/// Relative tolerance used by [`classify`]; the coupling formulas are exact
/// arithmetic, so only floating-point noise has to be absorbed.
pub const CLASSIFY_TOL: f64 = 1e-6;

/// Drive-side and coupling-side regime flags both use this ratio; below it
/// the adiabatic eliminations behind the model lose accuracy.
pub const REGIME_RATIO: f64 = 5.0;

/// Rabi amplitudes, detunings and strain coupling of the four drive tones
/// (all angular frequencies, rad/s).
#[derive(Debug, Clone, Copy)]
pub struct DriveParams {
    pub omega1: f64,
    pub omega2: f64,
    pub omega3: f64,
    pub omega4: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub delta4: f64,
    /// Phonon detuning ν.
    pub nu: f64,
    /// Strain coupling g_n.
    pub g_n: f64,
    /// Residual frame detunings; the static model requires both zero.
    pub w1: f64,
    pub w2: f64,
}

impl DriveParams {
    /// Hard validity: positive strain coupling and a static frame.
    pub fn validate(&self) -> Result<()> {
        if !(self.g_n > 0.0) {
            return Err(Error::InvalidParameter {
                name: "g_n",
                reason: format!("strain coupling must be positive, got {:.3e}", self.g_n),
            });
        }
        if self.w1 != 0.0 || self.w2 != 0.0 {
            return Err(Error::InvalidParameter {
                name: "w1/w2",
                reason: "residual detunings must vanish for the static model".into(),
            });
        }
        Ok(())
    }

    /// Soft validity: each tone should satisfy |δ| ≥ 5·Ω for the two-level
    /// reduction to be trustworthy. Returns one message per violation.
    pub fn regime_warnings(&self) -> Vec<String> {
        let tones = [
            ("omega1/delta1", self.omega1, self.delta1),
            ("omega2/delta2", self.omega2, self.delta2),
            ("omega3/delta3", self.omega3, self.delta3),
            ("omega4/delta4", self.omega4, self.delta4),
        ];
        let mut out = Vec::new();
        for (name, omega, delta) in tones {
            if omega != 0.0 && delta.abs() < REGIME_RATIO * omega.abs() {
                out.push(format!(
                    "{name}: |delta|/|omega| = {:.2} below {REGIME_RATIO}",
                    delta.abs() / omega.abs()
                ));
            }
        }
        out
    }
}

/// Effective parameters of the two-segment spin-phonon model.
#[derive(Debug, Clone, Copy)]
pub struct CouplingSet {
    pub eps1: f64,
    pub eps2: f64,
    pub lam1: f64,
    pub lam2: f64,
    pub big_lam1: f64,
    pub big_lam2: f64,
    /// Detuning splitting Δ_s used by the second elimination.
    pub delta_s: f64,
    /// True when ε₁ = −ε₂ holds to 1e−9 relative.
    pub balanced: bool,
}

impl CouplingSet {
    /// Construct directly from coupling values with Δ_s = ε₁ = −ε₂.
    pub fn balanced(delta_s: f64, lam1: f64, big_lam1: f64, lam2: f64, big_lam2: f64) -> Self {
        CouplingSet {
            eps1: delta_s,
            eps2: -delta_s,
            lam1,
            lam2,
            big_lam1,
            big_lam2,
            delta_s,
            balanced: true,
        }
    }

    fn coupling_scale(&self) -> f64 {
        self.lam1
            .abs()
            .max(self.lam2.abs())
            .max(self.big_lam1.abs())
            .max(self.big_lam2.abs())
    }

    /// Soft validity of the second elimination: Δ_s should dominate every
    /// coupling by at least [`REGIME_RATIO`].
    pub fn regime_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let scale = self.coupling_scale();
        if scale > 0.0 && self.delta_s.abs() < REGIME_RATIO * scale {
            out.push(format!(
                "delta_s/coupling ratio {:.2} below {REGIME_RATIO}",
                self.delta_s.abs() / scale
            ));
        }
        if !self.balanced {
            out.push("eps1 != -eps2: coupling set is unbalanced".into());
        }
        out
    }
}

fn guard_denominator(context: &'static str, value: f64, scale: f64) -> Result<()> {
    let threshold = 1e-12 * scale.max(1.0);
    if value.abs() <= threshold {
        return Err(Error::ResonantDenominator { context, value, threshold });
    }
    Ok(())
}

/// Second-order effective couplings of both segments:
///
/// ε₁ = ν − δ₂ − Ω₂²/(4δ₂) + Ω₁²/(4δ₁),
/// λ₁ = −(1/ν + 1/δ₂)·Ω₂g_n/4,
/// Λ₁ = −(1/δ₁ + 1/(δ₁+δ₂−ν))·Ω₁g_n/4,
///
/// and the segment-2 triple with (Ω₃, Ω₄, δ₃, δ₄) in place of (Ω₁, Ω₂, δ₁,
/// δ₂). Δ_s is taken from ε₁.
pub fn effective_couplings(d: &DriveParams) -> Result<CouplingSet> {
    d.validate()?;
    let scale = d
        .nu
        .abs()
        .max(d.delta1.abs())
        .max(d.delta2.abs())
        .max(d.delta3.abs())
        .max(d.delta4.abs());
    guard_denominator("nu", d.nu, scale)?;
    guard_denominator("delta1", d.delta1, scale)?;
    guard_denominator("delta2", d.delta2, scale)?;
    guard_denominator("delta3", d.delta3, scale)?;
    guard_denominator("delta4", d.delta4, scale)?;
    guard_denominator("delta1+delta2-nu", d.delta1 + d.delta2 - d.nu, scale)?;
    guard_denominator("delta3+delta4-nu", d.delta3 + d.delta4 - d.nu, scale)?;

    let quarter_g = 0.25 * d.g_n;
    let eps1 = d.nu - d.delta2 - d.omega2.powi(2) / (4.0 * d.delta2)
        + d.omega1.powi(2) / (4.0 * d.delta1);
    let lam1 = -(1.0 / d.nu + 1.0 / d.delta2) * d.omega2 * quarter_g;
    let big_lam1 = -(1.0 / d.delta1 + 1.0 / (d.delta1 + d.delta2 - d.nu)) * d.omega1 * quarter_g;

    let eps2 = d.nu - d.delta4 - d.omega4.powi(2) / (4.0 * d.delta4)
        + d.omega3.powi(2) / (4.0 * d.delta3);
    let lam2 = -(1.0 / d.nu + 1.0 / d.delta4) * d.omega4 * quarter_g;
    let big_lam2 = -(1.0 / d.delta3 + 1.0 / (d.delta3 + d.delta4 - d.nu)) * d.omega3 * quarter_g;

    let balanced = (eps1 + eps2).abs() <= 1e-9 * eps1.abs().max(eps2.abs());
    Ok(CouplingSet {
        eps1,
        eps2,
        lam1,
        lam2,
        big_lam1,
        big_lam2,
        delta_s: eps1,
        balanced,
    })
}

/// Interaction regime realized by a coupling set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InteractionKind {
    General,
    Oat,
    Tats,
    Mixed,
}

/// Detect the interaction regime. `tol` is relative; quadratic conditions
/// compare against tol·scale² and linear ones against tol·scale, where
/// scale is the largest coupling magnitude.
pub fn classify(c: &CouplingSet, tol: f64) -> InteractionKind {
    let scale = c.coupling_scale();
    if scale == 0.0 {
        return InteractionKind::General;
    }
    let lin = tol * scale;
    let quad = tol * scale * scale;
    let cross = c.lam1 * c.big_lam2 - c.lam2 * c.big_lam1;
    let d1 = c.lam1 * c.lam1 - c.big_lam1 * c.big_lam1;
    let d2 = c.lam2 * c.lam2 - c.big_lam2 * c.big_lam2;

    if cross.abs() <= quad && (d1.abs() > quad || d2.abs() > quad) {
        return InteractionKind::Oat;
    }
    if d1.abs() <= quad && d2.abs() <= quad && cross.abs() > quad {
        return InteractionKind::Tats;
    }
    if c.lam1.abs() <= lin && c.big_lam2.abs() <= lin && (c.lam2 - c.big_lam1).abs() <= lin {
        return InteractionKind::Mixed;
    }
    InteractionKind::General
}

/// Named coefficients carried alongside a built Hamiltonian (rad/s).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HamiltonianCoefficients {
    pub g_oat1: f64,
    pub g_oat2: f64,
    pub g_tats: f64,
    pub g_mix: f64,
    pub delta_s1: f64,
    pub delta_s2: f64,
}

/// A Hermitian Hamiltonian matrix on the product Dicke space together with
/// the regime it was built for and its named coefficients.
#[derive(Debug, Clone)]
pub struct HamiltonianSpec {
    pub kind: InteractionKind,
    pub matrix: Array2<C64>,
    pub coefficients: HamiltonianCoefficients,
}

impl HamiltonianSpec {
    /// Wrap an externally assembled Hermitian matrix (regime GENERAL, no
    /// named coefficients). Rejects non-Hermitian input.
    pub fn from_matrix(matrix: Array2<C64>) -> Result<Self> {
        check_hermitian(&matrix)?;
        Ok(HamiltonianSpec {
            kind: InteractionKind::General,
            matrix,
            coefficients: HamiltonianCoefficients::default(),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

fn check_hermitian(h: &Array2<C64>) -> Result<()> {
    let norm = spin::frobenius_norm(h);
    let mut err2 = 0.0;
    for i in 0..h.nrows() {
        for k in 0..=i {
            let d = h[(i, k)] - h[(k, i)].conj();
            err2 += d.norm_sqr();
        }
    }
    let err = err2.sqrt();
    if err > 1e-10 * norm.max(1.0) {
        return Err(Error::InvariantViolation {
            quantity: "hamiltonian hermiticity",
            value: err,
            threshold: 1e-10 * norm.max(1.0),
            time: 0.0,
        });
    }
    Ok(())
}

/// All interaction terms conserve total parity; verify [H, exp(iπ(Jz₁+Jz₂))]
/// vanishes. The parity operator is diagonal, so the check is elementwise.
fn check_parity(h: &Array2<C64>, pair: EnsemblePair) -> Result<()> {
    let p = spin::parity_operator(pair);
    let norm = spin::frobenius_norm(h);
    let mut err2 = 0.0;
    for i in 0..h.nrows() {
        for k in 0..h.ncols() {
            let d = h[(i, k)] * (p[(k, k)] - p[(i, i)]);
            err2 += d.norm_sqr();
        }
    }
    let err = err2.sqrt();
    if err > 1e-10 * norm.max(1.0) {
        return Err(Error::InvariantViolation {
            quantity: "hamiltonian parity commutation",
            value: err,
            threshold: 1e-10 * norm.max(1.0),
            time: 0.0,
        });
    }
    Ok(())
}

/// Segment building blocks lifted to the pair space. Products are formed on
/// the small per-segment spaces and lifted with Kronecker products, so
/// assembly stays O(dim²) even at large spin counts.
struct PairOps {
    jz1: Array2<C64>,
    jz2: Array2<C64>,
    jpjm1: Array2<C64>,
    jpjm2: Array2<C64>,
    jmjp1: Array2<C64>,
    jmjp2: Array2<C64>,
    /// J₁⁺J₂⁺ + J₁⁻J₂⁻.
    tats: Array2<C64>,
}

impl PairOps {
    fn new(pair: EnsemblePair) -> Result<Self> {
        let jp1 = spin::collective_operator(OperatorKind::Jp, pair.n1())?;
        let jm1 = spin::collective_operator(OperatorKind::Jm, pair.n1())?;
        let jp2 = spin::collective_operator(OperatorKind::Jp, pair.n2())?;
        let jm2 = spin::collective_operator(OperatorKind::Jm, pair.n2())?;
        let jz1s = spin::collective_operator(OperatorKind::Jz, pair.n1())?;
        let jz2s = spin::collective_operator(OperatorKind::Jz, pair.n2())?;

        let lift1 = |op: &Array2<C64>| spin::embed(op.view(), pair, spin::Segment::One);
        let lift2 = |op: &Array2<C64>| spin::embed(op.view(), pair, spin::Segment::Two);

        Ok(PairOps {
            jz1: lift1(&jz1s)?,
            jz2: lift2(&jz2s)?,
            jpjm1: lift1(&jp1.dot(&jm1))?,
            jpjm2: lift2(&jp2.dot(&jm2))?,
            jmjp1: lift1(&jm1.dot(&jp1))?,
            jmjp2: lift2(&jm2.dot(&jp2))?,
            tats: spin::kron(&jp1.view(), &jp2.view()) + spin::kron(&jm1.view(), &jm2.view()),
        })
    }
}

/// Full projected Hamiltonian for an arbitrary coupling set. Jᶻ coefficients
/// are doubled relative to the Pauli-convention expression.
pub fn build_h_eff(c: &CouplingSet, pair: EnsemblePair) -> Result<HamiltonianSpec> {
    if c.delta_s == 0.0 {
        return Err(Error::ZeroDeltaS);
    }
    let ops = PairOps::new(pair)?;
    let inv = 1.0 / c.delta_s;
    let cross = (c.lam1 * c.big_lam2 - c.lam2 * c.big_lam1) * inv;
    let mut h = Array2::<C64>::zeros((pair.dim(), pair.dim()));
    h.scaled_add(C64::new(c.delta_s, 0.0), &ops.jz1);
    h.scaled_add(C64::new(-c.delta_s, 0.0), &ops.jz2);
    h.scaled_add(C64::new(c.lam1 * c.lam1 * inv, 0.0), &ops.jpjm1);
    h.scaled_add(C64::new(-c.lam2 * c.lam2 * inv, 0.0), &ops.jpjm2);
    h.scaled_add(C64::new(-c.big_lam1 * c.big_lam1 * inv, 0.0), &ops.jmjp1);
    h.scaled_add(C64::new(c.big_lam2 * c.big_lam2 * inv, 0.0), &ops.jmjp2);
    h.scaled_add(C64::new(cross, 0.0), &ops.tats);
    check_hermitian(&h)?;
    check_parity(&h, pair)?;
    Ok(HamiltonianSpec {
        kind: InteractionKind::General,
        matrix: h,
        coefficients: HamiltonianCoefficients {
            g_tats: cross,
            delta_s1: c.delta_s,
            delta_s2: c.delta_s,
            ..Default::default()
        },
    })
}

fn build_with_zeeman(
    pair: EnsemblePair,
    delta_s1: f64,
    delta_s2: f64,
) -> Result<(PairOps, Array2<C64>)> {
    let ops = PairOps::new(pair)?;
    let mut h = Array2::<C64>::zeros((pair.dim(), pair.dim()));
    h.scaled_add(C64::new(delta_s1, 0.0), &ops.jz1);
    h.scaled_add(C64::new(-delta_s2, 0.0), &ops.jz2);
    Ok((ops, h))
}

/// OAT Hamiltonian Δ_{s1}J₁ᶻ − Δ_{s2}J₂ᶻ + G₁J₁⁺J₁⁻ + G₂J₂⁺J₂⁻ (standard
/// convention; the Jᶻ doubling is already applied).
pub fn build_oat(
    pair: EnsemblePair,
    g_oat1: f64,
    g_oat2: f64,
    delta_s1: f64,
    delta_s2: f64,
) -> Result<HamiltonianSpec> {
    let (ops, mut h) = build_with_zeeman(pair, delta_s1, delta_s2)?;
    h.scaled_add(C64::new(g_oat1, 0.0), &ops.jpjm1);
    h.scaled_add(C64::new(g_oat2, 0.0), &ops.jpjm2);
    check_hermitian(&h)?;
    check_parity(&h, pair)?;
    Ok(HamiltonianSpec {
        kind: InteractionKind::Oat,
        matrix: h,
        coefficients: HamiltonianCoefficients {
            g_oat1,
            g_oat2,
            delta_s1,
            delta_s2,
            ..Default::default()
        },
    })
}

/// TATS Hamiltonian Δ_{s1}J₁ᶻ − Δ_{s2}J₂ᶻ + G(J₁⁺J₂⁺ + J₁⁻J₂⁻).
pub fn build_tats(
    pair: EnsemblePair,
    g_tats: f64,
    delta_s1: f64,
    delta_s2: f64,
) -> Result<HamiltonianSpec> {
    let (ops, mut h) = build_with_zeeman(pair, delta_s1, delta_s2)?;
    h.scaled_add(C64::new(g_tats, 0.0), &ops.tats);
    check_hermitian(&h)?;
    check_parity(&h, pair)?;
    Ok(HamiltonianSpec {
        kind: InteractionKind::Tats,
        matrix: h,
        coefficients: HamiltonianCoefficients {
            g_tats,
            delta_s1,
            delta_s2,
            ..Default::default()
        },
    })
}

/// Mixed Hamiltonian Δ_{s1}J₁ᶻ − Δ_{s2}J₂ᶻ + G(J₁⁻J₁⁺ + J₂⁺J₂⁻ + J₁⁺J₂⁺ +
/// J₁⁻J₂⁻).
pub fn build_mixed(
    pair: EnsemblePair,
    g_mix: f64,
    delta_s1: f64,
    delta_s2: f64,
) -> Result<HamiltonianSpec> {
    let (ops, mut h) = build_with_zeeman(pair, delta_s1, delta_s2)?;
    h.scaled_add(C64::new(g_mix, 0.0), &ops.jmjp1);
    h.scaled_add(C64::new(g_mix, 0.0), &ops.jpjm2);
    h.scaled_add(C64::new(g_mix, 0.0), &ops.tats);
    check_hermitian(&h)?;
    check_parity(&h, pair)?;
    Ok(HamiltonianSpec {
        kind: InteractionKind::Mixed,
        matrix: h,
        coefficients: HamiltonianCoefficients {
            g_mix,
            delta_s1,
            delta_s2,
            ..Default::default()
        },
    })
}

/// OAT parameters (G₁, G₂, Δ_{s1}, Δ_{s2}) that make [`build_oat`] equal the
/// projected Hamiltonian of the coupling set term by term. Note G₂ carries
/// the opposite sign of the segment-1 expression: regrouping the segment-2
/// ladder products of the projected Hamiltonian onto J₂⁺J₂⁻ flips the sign
/// of the quadratic part.
pub fn oat_params(c: &CouplingSet) -> Result<(f64, f64, f64, f64)> {
    if c.delta_s == 0.0 {
        return Err(Error::ZeroDeltaS);
    }
    let inv = 1.0 / c.delta_s;
    Ok((
        (c.lam1 * c.lam1 - c.big_lam1 * c.big_lam1) * inv,
        (c.big_lam2 * c.big_lam2 - c.lam2 * c.lam2) * inv,
        c.delta_s + 2.0 * c.big_lam1 * c.big_lam1 * inv,
        c.delta_s + 2.0 * c.big_lam2 * c.big_lam2 * inv,
    ))
}

/// TATS parameters (G, Δ_{s1}, Δ_{s2}) from a coupling set: G =
/// (λ₁Λ₂−λ₂Λ₁)/Δ_s and Δ_{s1,s2} = Δ_s + 2λ²_{1,2}/Δ_s.
pub fn tats_params(c: &CouplingSet) -> Result<(f64, f64, f64)> {
    if c.delta_s == 0.0 {
        return Err(Error::ZeroDeltaS);
    }
    let inv = 1.0 / c.delta_s;
    Ok((
        (c.lam1 * c.big_lam2 - c.lam2 * c.big_lam1) * inv,
        c.delta_s + 2.0 * c.lam1 * c.lam1 * inv,
        c.delta_s + 2.0 * c.lam2 * c.lam2 * inv,
    ))
}

/// Mixed parameters (G, Δ_{s1}, Δ_{s2}) for the realizing configuration
/// λ₁ = Λ₂ = 0, λ₂ = Λ₁: all three interaction coefficients equal −λ₂²/Δ_s
/// and both detuning shifts cancel exactly.
pub fn mixed_params(c: &CouplingSet) -> Result<(f64, f64, f64)> {
    if c.delta_s == 0.0 {
        return Err(Error::ZeroDeltaS);
    }
    Ok((-c.lam2 * c.lam2 / c.delta_s, c.delta_s, c.delta_s))
}

/// Collective decay rate inherited from mechanical damping of the bus mode,
/// Γ_eff = Γ_m (λ/Δ_s)².
pub fn effective_decay(gamma_m: f64, lam: f64, delta_s: f64) -> Result<f64> {
    if gamma_m < 0.0 {
        return Err(Error::NegativeRate { name: "gamma_m", value: gamma_m });
    }
    if delta_s == 0.0 {
        return Err(Error::ZeroDeltaS);
    }
    let r = lam / delta_s;
    Ok(gamma_m * r * r)
}
