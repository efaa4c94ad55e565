//! Deterministic file output: trajectory/sweep CSVs and static SVG charts.
//!
//! CSVs are the contract: fixed headers, times in microseconds, floats
//! printed with 17 significant digits so repeated runs are byte-identical.
//! Files are written to a temporary sibling and renamed into place, so an
//! aborted run leaves no partial output behind.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use spinsqueeze_core::squeezing::SqueezingRecord;

use crate::pipeline::{ParityRow, SweepRow};
use crate::{CliError, Result};

pub const TRAJECTORY_HEADER: &str =
    "t_us,xi_s2,xi_r2,jx_mean,jy_mean,jz_mean,jx2,trace_err,purity";
pub const SWEEP_HEADER: &str = "n_tot,min_xi_r2,min_xi_s2,t_opt_us";

/// 17 significant decimal digits: enough to round-trip any f64 exactly.
pub fn fmt17(x: f64) -> String {
    format!("{:.16e}", x)
}

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io { path: path.display().to_string(), source }
}

/// Write `content` atomically (temp file + rename).
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| io_err(path, e))?;
        }
    }
    let tmp: PathBuf = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
        f.write_all(content.as_bytes()).map_err(|e| io_err(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

pub fn trajectory_csv(records: &[SqueezingRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 220);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&fmt17(r.time * 1e6));
        for v in [
            r.xi_s2,
            r.xi_r2,
            r.mean_spin[0],
            r.mean_spin[1],
            r.mean_spin[2],
            r.jx2,
            r.trace_err,
            r.purity,
        ] {
            out.push(',');
            out.push_str(&fmt17(v));
        }
        out.push('\n');
    }
    out
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.n_tot.to_string());
        for v in [r.min_xi_r2, r.min_xi_s2, r.t_opt * 1e6] {
            out.push(',');
            out.push_str(&fmt17(v));
        }
        out.push('\n');
    }
    out
}

pub fn parity_summary_csv(rows: &[ParityRow]) -> String {
    let mut out = String::new();
    out.push_str(
        "n_tot,w1_peak_inv_xi_s2,w1_t_us,w2_peak_inv_xi_s2,w2_t_us,jx2_at_t_cmp,t_cmp_us\n",
    );
    let fmt_opt = |v: Option<f64>| v.map(fmt17).unwrap_or_else(|| "n/a".into());
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.n_tot,
            fmt_opt(r.w1_peak),
            fmt_opt(r.w1_time.map(|t| t * 1e6)),
            fmt_opt(r.w2_peak),
            fmt_opt(r.w2_time.map(|t| t * 1e6)),
            fmt17(r.jx2_at_cmp),
            fmt17(r.t_cmp * 1e6),
        ));
    }
    out
}

/// Column accessor used for per-observable SVG selection.
pub fn record_column(r: &SqueezingRecord, column: &str) -> Option<f64> {
    Some(match column {
        "xi_s2" => r.xi_s2,
        "xi_r2" => r.xi_r2,
        "jx_mean" => r.mean_spin[0],
        "jy_mean" => r.mean_spin[1],
        "jz_mean" => r.mean_spin[2],
        "jx2" => r.jx2,
        "trace_err" => r.trace_err,
        "purity" => r.purity,
        _ => return None,
    })
}

/// Minimal static line chart. `log_y` switches the ordinate to log10.
pub fn line_chart_svg(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(f64, f64)],
    log_y: bool,
) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const ML: f64 = 70.0;
    const MR: f64 = 20.0;
    const MT: f64 = 40.0;
    const MB: f64 = 50.0;

    let ys: Vec<f64> = series
        .iter()
        .map(|&(_, y)| if log_y { y.max(1e-300).log10() } else { y })
        .collect();
    let xs: Vec<f64> = series.iter().map(|&(x, _)| x).collect();
    let (x0, x1) = bounds(&xs);
    let (y0, y1) = bounds(&ys);
    let sx = (W - ML - MR) / (x1 - x0);
    let sy = (H - MT - MB) / (y1 - y0);
    let px = |x: f64| ML + (x - x0) * sx;
    let py = |y: f64| H - MB - (y - y0) * sy;

    let mut path = String::new();
    for (i, (&x, &y)) in xs.iter().zip(&ys).enumerate() {
        path.push_str(if i == 0 { "M" } else { " L" });
        path.push_str(&format!("{:.2},{:.2}", px(x), py(y)));
    }

    let mut ticks = String::new();
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let label_y = if log_y {
            format!("1e{:.1}", fy)
        } else {
            format!("{:.3}", fy)
        };
        ticks.push_str(&format!(
            "<line x1='{0:.1}' y1='{1}' x2='{0:.1}' y2='{2}' stroke='#ccc'/>\
             <text x='{0:.1}' y='{3}' text-anchor='middle' font-size='11'>{4:.3}</text>\n",
            px(fx),
            MT,
            H - MB,
            H - MB + 16.0,
            fx
        ));
        ticks.push_str(&format!(
            "<line x1='{0}' y1='{1:.1}' x2='{2}' y2='{1:.1}' stroke='#eee'/>\
             <text x='{3}' y='{1:.1}' text-anchor='end' font-size='11'>{4}</text>\n",
            ML,
            py(fy),
            W - MR,
            ML - 6.0,
            label_y
        ));
    }

    format!(
        "<svg xmlns='http://www.w3.org/2000/svg' width='{W}' height='{H}' \
         viewBox='0 0 {W} {H}'>\n\
         <rect width='{W}' height='{H}' fill='white'/>\n\
         <text x='{tx}' y='22' text-anchor='middle' font-size='14'>{title}</text>\n\
         {ticks}\
         <rect x='{ML}' y='{MT}' width='{pw}' height='{ph}' fill='none' stroke='#333'/>\n\
         <path d='{path}' fill='none' stroke='#1a6fb0' stroke-width='1.5'/>\n\
         <text x='{tx}' y='{xl_y}' text-anchor='middle' font-size='12'>{x_label}</text>\n\
         <text x='16' y='{yl_y}' text-anchor='middle' font-size='12' \
         transform='rotate(-90 16 {yl_y})'>{y_label}</text>\n\
         </svg>\n",
        tx = (ML + W - MR) / 2.0,
        pw = W - ML - MR,
        ph = H - MT - MB,
        xl_y = H - 12.0,
        yl_y = (MT + H - MB) / 2.0,
    )
}

fn bounds(vals: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if (hi - lo).abs() < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.03 * (hi - lo);
        (lo - pad, hi + pad)
    }
}
