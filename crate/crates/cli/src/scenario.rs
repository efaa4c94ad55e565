//! Line-oriented `key = value` scenario files.
//!
//! `#` starts a comment, keys may appear once, and unknown keys are
//! rejected. Frequency-valued keys accept a unit suffix (Hz, kHz, MHz,
//! GHz), interpreted as an ordinary frequency and converted to angular
//! units internally; bare numbers are taken as rad/s directly. `t_max`
//! accepts s, ms, us or ns (bare numbers are seconds).

use std::collections::HashSet;

use spinsqueeze_core::dynamics::DephasingMode;
use spinsqueeze_core::model::DriveParams;
use spinsqueeze_core::TWO_PI;

use crate::{CliError, Result};

/// Which Hamiltonian the scenario builds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Oat,
    Tats,
    Mixed,
    /// Full projected Hamiltonian from drive parameters.
    General,
    /// Like `General`, but the runner also classifies the coupling set and
    /// reports the detected regime.
    FromDrives,
}

impl ScenarioKind {
    pub fn uses_drives(&self) -> bool {
        matches!(self, ScenarioKind::General | ScenarioKind::FromDrives)
    }
}

/// Effective interaction coefficients of a coefficient-style scenario
/// (rad/s; zero when absent).
#[derive(Debug, Clone, Copy, Default)]
pub struct CoefficientBlock {
    pub g_oat1: f64,
    pub g_oat2: f64,
    pub g_tats: f64,
    pub g_mix: f64,
    pub delta_s1: f64,
    pub delta_s2: f64,
}

/// Where the collective decay jump operators act.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DissipatorPlacement {
    /// D[J₁⁻] and D[J₂⁻], each at the full rate.
    PerSegment,
    /// One D[J₁⁻+J₂⁻].
    Total,
}

#[derive(Debug, Clone, Copy)]
pub struct DissipationBlock {
    pub gamma_m: Option<f64>,
    pub gamma_eff: Option<f64>,
    pub n_th: f64,
    pub gamma_d: f64,
    pub dephasing_mode: DephasingMode,
    pub placement: DissipatorPlacement,
}

impl Default for DissipationBlock {
    fn default() -> Self {
        DissipationBlock {
            gamma_m: None,
            gamma_eff: None,
            n_th: 0.0,
            gamma_d: 0.0,
            dephasing_mode: DephasingMode::CollectiveApprox,
            placement: DissipatorPlacement::PerSegment,
        }
    }
}

/// A fully validated simulation request.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub kind: ScenarioKind,
    pub n1: usize,
    pub n2: usize,
    pub coefficients: Option<CoefficientBlock>,
    pub drives: Option<DriveParams>,
    pub dissipation: DissipationBlock,
    /// Simulated window in seconds, sampled uniformly.
    pub t_max: f64,
    pub samples: usize,
    pub rtol: Option<f64>,
    pub steps_per_period: Option<u32>,
    /// Observables that get SVG plots when plotting is requested.
    pub outputs: Vec<String>,
}

impl Scenario {
    /// Uniform sample grid 0..t_max inclusive.
    pub fn t_grid(&self) -> Vec<f64> {
        let dt = self.t_max / (self.samples - 1) as f64;
        (0..self.samples).map(|k| k as f64 * dt).collect()
    }

    /// Replace the ensemble sizes (sweeps and parity scans fan out over
    /// spin numbers while keeping everything else).
    pub fn with_spins(&self, n1: usize, n2: usize, name: String) -> Scenario {
        Scenario { n1, n2, name, ..self.clone() }
    }
}

const TRAJECTORY_COLUMNS: [&str; 8] = [
    "xi_s2", "xi_r2", "jx_mean", "jy_mean", "jz_mean", "jx2", "trace_err", "purity",
];

struct Parser<'a> {
    path: String,
    seen: HashSet<String>,
    lines: Vec<(usize, String, String)>,
    text: &'a str,
}

fn config_err(path: &str, line: usize, msg: impl Into<String>) -> CliError {
    CliError::Config { path: path.to_string(), line, msg: msg.into() }
}

impl<'a> Parser<'a> {
    fn new(path: &str, text: &'a str) -> Result<Self> {
        let mut lines = Vec::new();
        let mut seen = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let stripped = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            };
            let stripped = stripped.trim();
            if stripped.is_empty() {
                continue;
            }
            let Some((key, value)) = stripped.split_once('=') else {
                return Err(config_err(path, line_no, "expected `key = value`"));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if value.is_empty() {
                return Err(config_err(path, line_no, format!("empty value for `{key}`")));
            }
            if !seen.insert(key.clone()) {
                return Err(config_err(path, line_no, format!("duplicate key `{key}`")));
            }
            lines.push((line_no, key, value));
        }
        Ok(Parser { path: path.to_string(), seen, lines, text })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        let pos = self.lines.iter().position(|(_, k, _)| k == key)?;
        let (line, _, value) = self.lines.remove(pos);
        Some((line, value))
    }

    fn has(&self, key: &str) -> bool {
        self.seen.contains(key)
    }
}

fn parse_number(path: &str, line: usize, key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| config_err(path, line, format!("`{key}`: not a number: `{value}`")))
        .and_then(|v| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(config_err(path, line, format!("`{key}`: non-finite value")))
            }
        })
}

/// Frequency with optional Hz/kHz/MHz/GHz suffix (ordinary frequency,
/// converted to angular); bare numbers are rad/s.
fn parse_frequency(path: &str, line: usize, key: &str, value: &str) -> Result<f64> {
    let units = [("GHz", 1e9), ("MHz", 1e6), ("kHz", 1e3), ("Hz", 1.0)];
    for (suffix, mult) in units {
        if let Some(num) = value.strip_suffix(suffix) {
            let v = parse_number(path, line, key, num.trim())?;
            return Ok(TWO_PI * v * mult);
        }
    }
    parse_number(path, line, key, value)
}

/// Duration with optional s/ms/us/ns suffix; bare numbers are seconds.
fn parse_time(path: &str, line: usize, key: &str, value: &str) -> Result<f64> {
    let units = [("ns", 1e-9), ("us", 1e-6), ("ms", 1e-3), ("s", 1.0)];
    for (suffix, mult) in units {
        if let Some(num) = value.strip_suffix(suffix) {
            let v = parse_number(path, line, key, num.trim())?;
            return Ok(v * mult);
        }
    }
    parse_number(path, line, key, value)
}

fn parse_usize(path: &str, line: usize, key: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| config_err(path, line, format!("`{key}`: not a non-negative integer")))
}

/// Parse and validate one scenario file. `path` is used for error messages
/// and to derive the scenario name (the file stem).
pub fn parse_config(text: &str, path: &str) -> Result<Scenario> {
    let mut p = Parser::new(path, text)?;
    let _ = p.text;

    let (kind_line, kind_raw) = p
        .take("kind")
        .ok_or_else(|| config_err(path, 0, "missing required key `kind`"))?;
    let kind = match kind_raw.as_str() {
        "oat" => ScenarioKind::Oat,
        "tats" => ScenarioKind::Tats,
        "mixed" => ScenarioKind::Mixed,
        "general" => ScenarioKind::General,
        "from-drives" => ScenarioKind::FromDrives,
        other => {
            return Err(config_err(
                path,
                kind_line,
                format!("unknown kind `{other}` (oat, tats, mixed, general, from-drives)"),
            ))
        }
    };

    let mut require_usize = |key: &str| -> Result<usize> {
        let (line, v) = p
            .take(key)
            .ok_or_else(|| config_err(path, 0, format!("missing required key `{key}`")))?;
        parse_usize(path, line, key, &v)
    };
    let n1 = require_usize("n1")?;
    let n2 = require_usize("n2")?;
    if n1 < 1 || n2 < 1 {
        return Err(config_err(path, 0, "n1 and n2 must be at least 1"));
    }

    let coefficient_keys = ["g_oat1", "g_oat2", "g_tats", "g_mix", "delta_s1", "delta_s2"];
    let drive_keys = [
        "omega1", "omega2", "omega3", "omega4", "delta1", "delta2", "delta3", "delta4", "nu",
        "g_n",
    ];
    let has_coeff = coefficient_keys.iter().any(|k| p.has(k));
    let has_drives = drive_keys.iter().any(|k| p.has(k));
    if has_coeff && has_drives {
        return Err(config_err(
            path,
            0,
            "a scenario carries either interaction coefficients or drive parameters, not both",
        ));
    }

    let mut freq = |p: &mut Parser, key: &str| -> Result<Option<f64>> {
        match p.take(key) {
            Some((line, v)) => Ok(Some(parse_frequency(path, line, key, &v)?)),
            None => Ok(None),
        }
    };

    let mut coefficients = None;
    let mut drives = None;
    if kind.uses_drives() {
        if has_coeff {
            return Err(config_err(
                path,
                0,
                "kind general/from-drives takes drive parameters, not coefficients",
            ));
        }
        let mut need = |key: &str| -> Result<f64> {
            freq(&mut p, key)?
                .ok_or_else(|| config_err(path, 0, format!("missing required key `{key}`")))
        };
        drives = Some(DriveParams {
            omega1: need("omega1")?,
            omega2: need("omega2")?,
            omega3: need("omega3")?,
            omega4: need("omega4")?,
            delta1: need("delta1")?,
            delta2: need("delta2")?,
            delta3: need("delta3")?,
            delta4: need("delta4")?,
            nu: need("nu")?,
            g_n: need("g_n")?,
            w1: 0.0,
            w2: 0.0,
        });
    } else {
        if has_drives {
            return Err(config_err(
                path,
                0,
                "kind oat/tats/mixed takes interaction coefficients, not drive parameters",
            ));
        }
        let mut block = CoefficientBlock {
            g_oat1: freq(&mut p, "g_oat1")?.unwrap_or(0.0),
            g_oat2: freq(&mut p, "g_oat2")?.unwrap_or(0.0),
            g_tats: freq(&mut p, "g_tats")?.unwrap_or(0.0),
            g_mix: freq(&mut p, "g_mix")?.unwrap_or(0.0),
            delta_s1: freq(&mut p, "delta_s1")?.unwrap_or(0.0),
            delta_s2: freq(&mut p, "delta_s2")?.unwrap_or(0.0),
        };
        match kind {
            ScenarioKind::Oat => {
                if p.has("g_tats") || p.has("g_mix") {
                    return Err(config_err(path, 0, "kind oat takes g_oat1/g_oat2 only"));
                }
            }
            ScenarioKind::Tats => {
                if p.has("g_oat1") || p.has("g_oat2") || p.has("g_mix") {
                    return Err(config_err(path, 0, "kind tats takes g_tats only"));
                }
            }
            ScenarioKind::Mixed => {
                if p.has("g_oat1") || p.has("g_oat2") || p.has("g_tats") {
                    return Err(config_err(path, 0, "kind mixed takes g_mix only"));
                }
            }
            _ => unreachable!(),
        }
        // normalize unused couplings to zero
        match kind {
            ScenarioKind::Oat => {
                block.g_tats = 0.0;
                block.g_mix = 0.0;
            }
            ScenarioKind::Tats => {
                block.g_oat1 = 0.0;
                block.g_oat2 = 0.0;
                block.g_mix = 0.0;
            }
            ScenarioKind::Mixed => {
                block.g_oat1 = 0.0;
                block.g_oat2 = 0.0;
                block.g_tats = 0.0;
            }
            _ => {}
        }
        coefficients = Some(block);
    }

    let mut dissipation = DissipationBlock::default();
    dissipation.gamma_m = freq(&mut p, "gamma_m")?;
    dissipation.gamma_eff = freq(&mut p, "gamma_eff")?;
    if dissipation.gamma_m.is_some() && dissipation.gamma_eff.is_some() {
        return Err(config_err(path, 0, "give gamma_m or gamma_eff, not both"));
    }
    if dissipation.gamma_m.is_some() && !kind.uses_drives() {
        return Err(config_err(
            path,
            0,
            "gamma_m needs drive parameters to derive the collective rate; use gamma_eff",
        ));
    }
    if let Some((line, v)) = p.take("n_th") {
        dissipation.n_th = parse_number(path, line, "n_th", &v)?;
        if dissipation.n_th < 0.0 {
            return Err(config_err(path, line, "n_th must be non-negative"));
        }
    }
    if let Some(g) = freq(&mut p, "gamma_d")? {
        if g < 0.0 {
            return Err(config_err(path, 0, "gamma_d must be non-negative"));
        }
        dissipation.gamma_d = g;
    }
    if let Some((line, v)) = p.take("dephasing_mode") {
        dissipation.dephasing_mode = match v.as_str() {
            "collective-approx" => DephasingMode::CollectiveApprox,
            "off" => DephasingMode::Off,
            other => {
                return Err(config_err(
                    path,
                    line,
                    format!("unknown dephasing_mode `{other}` (collective-approx, off)"),
                ))
            }
        };
    }
    if let Some((line, v)) = p.take("dissipator_placement") {
        dissipation.placement = match v.as_str() {
            "per-segment" => DissipatorPlacement::PerSegment,
            "total" => DissipatorPlacement::Total,
            other => {
                return Err(config_err(
                    path,
                    line,
                    format!("unknown dissipator_placement `{other}` (per-segment, total)"),
                ))
            }
        };
    }

    let (t_line, t_raw) = p
        .take("t_max")
        .ok_or_else(|| config_err(path, 0, "missing required key `t_max`"))?;
    let t_max = parse_time(path, t_line, "t_max", &t_raw)?;
    if !(t_max > 0.0) {
        return Err(config_err(path, t_line, "t_max must be positive"));
    }

    let (s_line, s_raw) = p
        .take("samples")
        .ok_or_else(|| config_err(path, 0, "missing required key `samples`"))?;
    let samples = parse_usize(path, s_line, "samples", &s_raw)?;
    if samples < 2 {
        return Err(config_err(path, s_line, "samples must be at least 2"));
    }

    let rtol = match p.take("rtol") {
        Some((line, v)) => {
            let r = parse_number(path, line, "rtol", &v)?;
            if !(r > 0.0) {
                return Err(config_err(path, line, "rtol must be positive"));
            }
            Some(r)
        }
        None => None,
    };
    let steps_per_period = match p.take("steps_per_period") {
        Some((line, v)) => {
            let s = parse_usize(path, line, "steps_per_period", &v)?;
            if s < 1 {
                return Err(config_err(path, line, "steps_per_period must be at least 1"));
            }
            Some(s as u32)
        }
        None => None,
    };

    let outputs = match p.take("outputs") {
        Some((line, v)) => {
            let cols: Vec<String> = v
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            for c in &cols {
                if !TRAJECTORY_COLUMNS.contains(&c.as_str()) {
                    return Err(config_err(
                        path,
                        line,
                        format!("unknown output column `{c}`"),
                    ));
                }
            }
            cols
        }
        None => vec!["xi_s2".into(), "xi_r2".into()],
    };

    if let Some((line, key, _)) = p.lines.first() {
        return Err(config_err(path, *line, format!("unknown key `{key}`")));
    }

    let name = std::path::Path::new(path)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());

    Ok(Scenario {
        name,
        kind,
        n1,
        n2,
        coefficients,
        drives,
        dissipation,
        t_max,
        samples,
        rtol,
        steps_per_period,
        outputs,
    })
}
