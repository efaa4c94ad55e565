//! From a parsed [`Scenario`] to trajectories, sweep tables, parity
//! summaries and reduction-oracle reports.

use std::path::Path;

use rayon::prelude::*;

use spinsqueeze_core::dynamics::{
    self, DensityMatrix, DissipatorSpec, IntegratorSettings,
};
use spinsqueeze_core::fullmodel::{self, FullModelParams, OracleReport};
use spinsqueeze_core::model::{self, CouplingSet, HamiltonianSpec, InteractionKind};
use spinsqueeze_core::spin::{self, EnsemblePair, OperatorKind, SegmentTag};
use spinsqueeze_core::squeezing::{self, SpinFrame, SqueezingRecord};

use crate::output;
use crate::scenario::{DissipatorPlacement, Scenario, ScenarioKind};
use crate::{CliError, Result};

/// Fixed-step resolution used when a scenario does not override it.
pub const DEFAULT_STEPS_PER_PERIOD: u32 = 32;
/// Finer default for the stiff unreduced model of the oracle check.
pub const ORACLE_STEPS_PER_PERIOD: u32 = 48;
/// Sample count of the oracle comparison grid.
pub const ORACLE_SAMPLES: usize = 25;

pub fn integrator_settings(s: &Scenario) -> IntegratorSettings {
    IntegratorSettings {
        steps_per_period: s.steps_per_period.unwrap_or(DEFAULT_STEPS_PER_PERIOD),
        rtol: s.rtol,
        ..Default::default()
    }
}

pub fn ensemble_pair(s: &Scenario) -> Result<EnsemblePair> {
    Ok(EnsemblePair::new(s.n1, s.n2)?)
}

/// Initial coherent product state of a scenario. Twisting(-only) dynamics
/// squeezes a transversally polarized state, so OAT and drive-derived
/// scenarios start along +x; the pair-exchange instability operates on the
/// polar state instead (J₁⁺J₂⁺ acts as a two-mode squeezer on the joint
/// ground state), so TATS and mixed scenarios start at θ = π.
pub fn initial_state(pair: EnsemblePair, kind: ScenarioKind) -> Result<DensityMatrix> {
    let theta = match kind {
        ScenarioKind::Tats | ScenarioKind::Mixed => std::f64::consts::PI,
        _ => std::f64::consts::FRAC_PI_2,
    };
    let p1 = spin::coherent_spin_state(pair.n1(), theta, 0.0)?;
    let p2 = spin::coherent_spin_state(pair.n2(), theta, 0.0)?;
    Ok(DensityMatrix::from_pure(&spin::product_state(&p1, &p2), 0.0)?)
}

/// Build the scenario Hamiltonian; drive-style scenarios also return the
/// effective coupling set (and from-drives reports the detected regime).
pub fn build_hamiltonian(
    s: &Scenario,
    pair: EnsemblePair,
) -> Result<(HamiltonianSpec, Option<CouplingSet>)> {
    match s.kind {
        ScenarioKind::Oat => {
            let c = s.coefficients.expect("validated coefficient scenario");
            Ok((
                model::build_oat(pair, c.g_oat1, c.g_oat2, c.delta_s1, c.delta_s2)?,
                None,
            ))
        }
        ScenarioKind::Tats => {
            let c = s.coefficients.expect("validated coefficient scenario");
            Ok((
                model::build_tats(pair, c.g_tats, c.delta_s1, c.delta_s2)?,
                None,
            ))
        }
        ScenarioKind::Mixed => {
            let c = s.coefficients.expect("validated coefficient scenario");
            Ok((
                model::build_mixed(pair, c.g_mix, c.delta_s1, c.delta_s2)?,
                None,
            ))
        }
        ScenarioKind::General | ScenarioKind::FromDrives => {
            let drives = s.drives.expect("validated drive scenario");
            for w in drives.regime_warnings() {
                eprintln!("warning [{}]: {w}", s.name);
            }
            let couplings = model::effective_couplings(&drives)?;
            for w in couplings.regime_warnings() {
                eprintln!("warning [{}]: {w}", s.name);
            }
            if s.kind == ScenarioKind::FromDrives {
                let kind = model::classify(&couplings, model::CLASSIFY_TOL);
                eprintln!(
                    "info [{}]: drive parameters realize the {} regime",
                    s.name,
                    match kind {
                        InteractionKind::Oat => "OAT",
                        InteractionKind::Tats => "TATS",
                        InteractionKind::Mixed => "mixed OAT+TATS",
                        InteractionKind::General => "general",
                    }
                );
            }
            let h = model::build_h_eff(&couplings, pair)?;
            Ok((h, Some(couplings)))
        }
    }
}

/// Collective decay and dephasing jump operators of a scenario.
pub fn build_dissipators(
    s: &Scenario,
    pair: EnsemblePair,
    couplings: Option<&CouplingSet>,
) -> Result<Vec<DissipatorSpec>> {
    let mut out = Vec::new();
    let d = &s.dissipation;

    // per-segment collective decay rates
    let rates = if let Some(geff) = d.gamma_eff {
        Some((geff, geff))
    } else if let Some(gm) = d.gamma_m {
        let c = couplings.ok_or_else(|| {
            CliError::Invalid("gamma_m requires drive-derived couplings".into())
        })?;
        Some((
            model::effective_decay(gm, c.lam1, c.delta_s)?,
            model::effective_decay(gm, c.lam2, c.delta_s)?,
        ))
    } else {
        None
    };

    if let Some((r1, r2)) = rates {
        match d.placement {
            DissipatorPlacement::PerSegment => {
                if r1 > 0.0 {
                    let jm1 = spin::pair_operator(pair, OperatorKind::Jm, SegmentTag::One)?;
                    out.push(DissipatorSpec::new(jm1, r1, d.n_th)?);
                }
                if r2 > 0.0 {
                    let jm2 = spin::pair_operator(pair, OperatorKind::Jm, SegmentTag::Two)?;
                    out.push(DissipatorSpec::new(jm2, r2, d.n_th)?);
                }
            }
            DissipatorPlacement::Total => {
                // with drive-derived rates the total mode takes their mean
                let rate = 0.5 * (r1 + r2);
                if rate > 0.0 {
                    let jm = spin::pair_operator(pair, OperatorKind::Jm, SegmentTag::Total)?;
                    out.push(DissipatorSpec::new(jm, rate, d.n_th)?);
                }
            }
        }
    }

    out.extend(dynamics::dephasing_dissipators(
        d.gamma_d,
        pair,
        d.dephasing_mode,
    )?);
    Ok(out)
}

/// Integrate a scenario and evaluate the squeezing record at every sample.
/// Pure computation: no files are touched.
pub fn compute_records(s: &Scenario) -> Result<Vec<SqueezingRecord>> {
    let pair = ensemble_pair(s)?;
    let (h, couplings) = build_hamiltonian(s, pair)?;
    let ds = build_dissipators(s, pair, couplings.as_ref())?;
    let rho0 = initial_state(pair, s.kind)?;
    let frame = SpinFrame::for_pair(pair)?;
    let t_grid = s.t_grid();
    let settings = integrator_settings(s);

    let mut records = Vec::with_capacity(t_grid.len());
    dynamics::evolve_observed(&rho0, &h, &ds, &t_grid, &settings, |_, state| {
        records.push(squeezing::record(state, &frame)?);
        Ok(())
    })?;
    Ok(records)
}

/// Run one scenario and write its trajectory CSV (and SVG charts of the
/// selected observables when `svg` is set). Returns the records.
pub fn run_scenario(s: &Scenario, out_dir: &Path, svg: bool) -> Result<Vec<SqueezingRecord>> {
    let records = compute_records(s)?;
    let csv = output::trajectory_csv(&records);
    output::write_atomic(&out_dir.join(format!("{}.csv", s.name)), &csv)?;
    if svg {
        for column in &s.outputs {
            let series: Vec<(f64, f64)> = records
                .iter()
                .filter_map(|r| output::record_column(r, column).map(|v| (r.time * 1e6, v)))
                .collect();
            let chart = output::line_chart_svg(
                &format!("{} — {column}", s.name),
                "t (us)",
                column,
                &series,
                false,
            );
            output::write_atomic(&out_dir.join(format!("{}_{column}.svg", s.name)), &chart)?;
        }
    }
    Ok(records)
}

/// One row of the optimal-squeezing sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub n_tot: usize,
    pub min_xi_r2: f64,
    pub min_xi_s2: f64,
    /// Location of the ξ_R² minimum, refined by quadratic interpolation.
    pub t_opt: f64,
}

/// Discrete minimum refined by the parabola through the three surrounding
/// samples; the vertex stays within one grid step of the discrete argmin.
pub fn refined_minimum(times: &[f64], values: &[f64]) -> (f64, f64) {
    let k = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("nonempty series");
    if k == 0 || k + 1 >= values.len() {
        return (times[k], values[k]);
    }
    let (y0, y1, y2) = (values[k - 1], values[k], values[k + 1]);
    let denom = y0 - 2.0 * y1 + y2;
    if denom <= 0.0 {
        return (times[k], values[k]);
    }
    let shift = 0.5 * (y0 - y2) / denom; // in units of the grid step
    let shift = shift.clamp(-1.0, 1.0);
    let dt = times[k + 1] - times[k];
    let t = times[k] + shift * dt;
    let v = y1 - 0.25 * (y0 - y2) * shift;
    (t, v.min(y1))
}

/// Map a total spin number onto the (⌈N/2⌉, ⌊N/2⌋) split.
pub fn split_total(n_tot: usize) -> (usize, usize) {
    (n_tot.div_ceil(2), n_tot / 2)
}

/// Sweep the scenario template over total spin numbers and report the
/// optimal squeezing per size. Rows come back sorted by N_tot.
pub fn sweep_optimal(template: &Scenario, n_list: &[usize]) -> Result<Vec<SweepRow>> {
    if n_list.is_empty() {
        return Err(CliError::Invalid("sweep needs a nonempty n-list".into()));
    }
    if n_list.iter().any(|&n| n < 2) {
        return Err(CliError::Invalid("sweep entries must be at least 2".into()));
    }
    let mut rows: Vec<SweepRow> = n_list
        .par_iter()
        .map(|&n_tot| -> Result<SweepRow> {
            let (n1, n2) = split_total(n_tot);
            let s = template.with_spins(n1, n2, format!("{}_n{}", template.name, n_tot));
            let records = compute_records(&s)?;
            let times: Vec<f64> = records.iter().map(|r| r.time).collect();
            let xr: Vec<f64> = records.iter().map(|r| r.xi_r2).collect();
            let xs: Vec<f64> = records.iter().map(|r| r.xi_s2).collect();
            let (t_opt, min_xi_r2) = refined_minimum(&times, &xr);
            let (_, min_xi_s2) = refined_minimum(&times, &xs);
            Ok(SweepRow { n_tot, min_xi_r2, min_xi_s2, t_opt })
        })
        .collect::<Result<_>>()?;
    rows.sort_by_key(|r| r.n_tot);
    Ok(rows)
}

/// Sweep and write the table; SVG plots 1/ξ_R² against N_tot.
pub fn run_sweep(
    template: &Scenario,
    n_list: &[usize],
    out_dir: &Path,
    svg: bool,
) -> Result<Vec<SweepRow>> {
    let rows = sweep_optimal(template, n_list)?;
    let csv = output::sweep_csv(&rows);
    output::write_atomic(&out_dir.join(format!("{}_sweep.csv", template.name)), &csv)?;
    if svg {
        let series: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| (r.n_tot as f64, 1.0 / r.min_xi_r2))
            .collect();
        let chart = output::line_chart_svg(
            &format!("{} — optimal squeezing", template.name),
            "N_tot",
            "1/xi_r2",
            &series,
            true,
        );
        output::write_atomic(&out_dir.join(format!("{}_sweep.svg", template.name)), &chart)?;
    }
    Ok(rows)
}

/// Per-size summary of the parity experiment. Peaks are maxima of 1/ξ_S²
/// within the first and second squeezing windows; `None` marks traces where
/// window detection failed.
#[derive(Debug, Clone, Copy)]
pub struct ParityRow {
    pub n_tot: usize,
    pub w1_peak: Option<f64>,
    pub w1_time: Option<f64>,
    pub w2_peak: Option<f64>,
    pub w2_time: Option<f64>,
    /// ⟨J_X²⟩ at the shared comparison time.
    pub jx2_at_cmp: f64,
    pub t_cmp: f64,
}

/// Indices of local maxima of ξ_S² exceeding the revival threshold. The
/// initial sample counts as a maximum (trajectories start at ξ² = 1), and
/// plateaus collapse onto their first index.
fn revival_maxima(xi: &[f64]) -> Vec<usize> {
    const THRESHOLD: f64 = 0.9;
    let mut out = vec![0usize];
    for k in 1..xi.len().saturating_sub(1) {
        if xi[k] > THRESHOLD && xi[k] >= xi[k - 1] && xi[k] > xi[k + 1] {
            out.push(k);
        }
    }
    out
}

/// Squeezing windows: index spans between consecutive revival maxima.
pub fn squeezing_windows(xi: &[f64]) -> Vec<(usize, usize)> {
    let maxima = revival_maxima(xi);
    let mut spans: Vec<(usize, usize)> = maxima.windows(2).map(|w| (w[0], w[1])).collect();
    // the stretch after the last revival still holds a squeezing dip
    if let Some(&last) = maxima.last() {
        if last + 2 < xi.len() {
            spans.push((last, xi.len() - 1));
        }
    }
    spans
}

/// Run the mixed-interaction template over several total spin numbers and
/// summarize the first/second-window optima per size, plus ⟨J_X²⟩ at a
/// shared comparison time (the first-window optimum of the largest size).
pub fn parity_experiment(
    template: &Scenario,
    n_tot_list: &[usize],
) -> Result<(Vec<(usize, Vec<SqueezingRecord>)>, Vec<ParityRow>)> {
    if n_tot_list.is_empty() {
        return Err(CliError::Invalid("parity scan needs a nonempty n-tot list".into()));
    }
    if n_tot_list.iter().any(|&n| n < 2) {
        return Err(CliError::Invalid("parity entries must be at least 2".into()));
    }
    let traces: Vec<(usize, Vec<SqueezingRecord>)> = n_tot_list
        .par_iter()
        .map(|&n_tot| -> Result<(usize, Vec<SqueezingRecord>)> {
            let (n1, n2) = split_total(n_tot);
            let s = template.with_spins(n1, n2, format!("{}_n{}", template.name, n_tot));
            Ok((n_tot, compute_records(&s)?))
        })
        .collect::<Result<_>>()?;

    // window optima per trace
    struct Optima {
        w1: Option<(f64, f64)>,
        w2: Option<(f64, f64)>,
    }
    let optima: Vec<Optima> = traces
        .iter()
        .map(|(_, records)| {
            let xi: Vec<f64> = records.iter().map(|r| r.xi_s2).collect();
            let times: Vec<f64> = records.iter().map(|r| r.time).collect();
            let windows = squeezing_windows(&xi);
            let peak = |span: (usize, usize)| -> Option<(f64, f64)> {
                let (a, b) = span;
                if b <= a + 1 {
                    return None;
                }
                let (t, v) = refined_minimum(&times[a..=b], &xi[a..=b]);
                (v > 0.0).then(|| (t, 1.0 / v))
            };
            Optima {
                w1: windows.first().and_then(|&w| peak(w)),
                w2: windows.get(1).and_then(|&w| peak(w)),
            }
        })
        .collect();

    // shared comparison time: first-window optimum of the largest size
    let largest = traces
        .iter()
        .enumerate()
        .max_by_key(|(_, (n, _))| *n)
        .map(|(i, _)| i)
        .expect("nonempty");
    let t_cmp = optima[largest]
        .w1
        .map(|(t, _)| t)
        .unwrap_or(template.t_max * 0.5);

    let rows: Vec<ParityRow> = traces
        .iter()
        .zip(&optima)
        .map(|((n_tot, records), opt)| {
            // grids are identical across sizes, so index lookup is exact
            let idx = records
                .iter()
                .enumerate()
                .min_by(|a, b| {
                    (a.1.time - t_cmp).abs().total_cmp(&(b.1.time - t_cmp).abs())
                })
                .map(|(i, _)| i)
                .expect("nonempty records");
            ParityRow {
                n_tot: *n_tot,
                w1_peak: opt.w1.map(|(_, p)| p),
                w1_time: opt.w1.map(|(t, _)| t),
                w2_peak: opt.w2.map(|(_, p)| p),
                w2_time: opt.w2.map(|(t, _)| t),
                jx2_at_cmp: records[idx].jx2,
                t_cmp,
            }
        })
        .collect();

    Ok((traces, rows))
}

/// Parity experiment with file output: one trajectory CSV per size plus the
/// summary table.
pub fn run_parity(
    template: &Scenario,
    n_tot_list: &[usize],
    out_dir: &Path,
    svg: bool,
) -> Result<Vec<ParityRow>> {
    let (traces, rows) = parity_experiment(template, n_tot_list)?;
    for (n_tot, records) in &traces {
        let csv = output::trajectory_csv(records);
        output::write_atomic(
            &out_dir.join(format!("{}_n{}.csv", template.name, n_tot)),
            &csv,
        )?;
        if svg {
            for column in ["xi_s2", "jx2"] {
                let series: Vec<(f64, f64)> = records
                    .iter()
                    .filter_map(|r| {
                        output::record_column(r, column).map(|v| (r.time * 1e6, v))
                    })
                    .collect();
                let chart = output::line_chart_svg(
                    &format!("{} N_tot={n_tot} — {column}", template.name),
                    "t (us)",
                    column,
                    &series,
                    false,
                );
                output::write_atomic(
                    &out_dir.join(format!("{}_n{}_{column}.svg", template.name, n_tot)),
                    &chart,
                )?;
            }
        }
    }
    let summary = output::parity_summary_csv(&rows);
    output::write_atomic(
        &out_dir.join(format!("{}_parity_summary.csv", template.name)),
        &summary,
    )?;
    Ok(rows)
}

/// Window of the oracle comparison: one full oscillation of the two-spin
/// pair-transfer populations under the projected Hamiltonian, π/Ω with
/// Ω = √(G² + (ΔE/2)²).
fn oracle_window(h_eff: &HamiltonianSpec) -> f64 {
    let dim = h_eff.dim();
    let g = h_eff.coefficients.g_tats.abs().max(1e-3);
    let gap = (h_eff.matrix[(dim - 1, dim - 1)].re - h_eff.matrix[(0, 0)].re).abs();
    let omega = (g * g + 0.25 * gap * gap).sqrt();
    std::f64::consts::PI / omega
}

/// Validate the two-stage reduction for a drive-style scenario: evolve the
/// unreduced model, project back onto the qubit sector, compare against the
/// projected-Hamiltonian propagation, and write the comparison CSV.
pub fn oracle_check(
    s: &Scenario,
    n_ph_max: usize,
    t_max_override: Option<f64>,
    out_dir: &Path,
) -> Result<OracleReport> {
    let drives = s
        .drives
        .ok_or_else(|| CliError::Invalid("oracle-check needs a drive-style scenario".into()))?;
    let p = FullModelParams::new(drives, n_ph_max, s.n1, s.n2)?;

    let couplings = model::effective_couplings(&drives)?;
    let pair = EnsemblePair::new(s.n1, s.n2)?;
    let h_eff = model::build_h_eff(&couplings, pair)?;
    let t_max = t_max_override.unwrap_or_else(|| oracle_window(&h_eff));
    let t_grid: Vec<f64> = (0..ORACLE_SAMPLES)
        .map(|k| k as f64 * t_max / (ORACLE_SAMPLES - 1) as f64)
        .collect();
    let settings = IntegratorSettings {
        steps_per_period: s.steps_per_period.unwrap_or(ORACLE_STEPS_PER_PERIOD),
        rtol: s.rtol,
        ..Default::default()
    };
    let report = fullmodel::compare_reduction(&p, &t_grid, s.dissipation.gamma_m, &settings)?;

    let mut csv = String::from("t,fidelity,leakage,phonon_mean\n");
    for row in &report.rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            output::fmt17(row.time),
            output::fmt17(row.fidelity),
            output::fmt17(row.leakage),
            output::fmt17(row.phonon_mean),
        ));
    }
    output::write_atomic(&out_dir.join(format!("{}_oracle.csv", s.name)), &csv)?;
    Ok(report)
}
