//! File emission: fixed-format CSV, JSON and atomic writes.

use std::io::Write;
use std::path::Path;

use crate::eta::EtaCurve;
use crate::theorems::PhiMap;

pub const ETA_HEADER: [&str; 7] = ["r", "eta", "psi", "n_clusters", "residual", "singleton", "dinkelbach_iters"];
pub const PHI_HEADER: [&str; 3] = ["lambda", "phi", "residual_max"];

/// `%.12g`: 12 significant digits, trailing zeros trimmed, exponent form
/// outside `[1e-4, 1e12)`.
pub fn fmt_g(v: f64) -> String {
    const DIGITS: i32 = 12;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes to a sibling temporary file, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

fn csv_bytes<const N: usize>(
    header: [&str; N],
    rows: impl Iterator<Item = [String; N]>,
    trailer: Option<String>,
) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    let mut bytes = w.into_inner().expect("in-memory flush");
    if let Some(t) = trailer {
        bytes.extend_from_slice(format!("# {t}\n").as_bytes());
    }
    bytes
}

/// `eta_curve.csv` contents. Levels that failed are listed in a trailing
/// comment marking the table incomplete.
pub fn eta_curve_csv(curve: &EtaCurve) -> Vec<u8> {
    let rows = curve.samples.iter().map(|s| {
        [
            fmt_g(s.r),
            fmt_g(s.eta),
            fmt_g(s.psi),
            s.gamma.len().to_string(),
            fmt_g(s.residual),
            s.is_singleton().to_string(),
            s.dinkelbach_iters.to_string(),
        ]
    });
    let trailer = (!curve.is_complete()).then(|| {
        let first = &curve.failures[0];
        format!(
            "incomplete: {} of {} levels failed; first at r = {}: {}",
            curve.failures.len(),
            curve.failures.len() + curve.samples.len(),
            fmt_g(first.r),
            first.error
        )
    });
    csv_bytes(ETA_HEADER, rows, trailer)
}

pub fn phi_map_csv(phi: &PhiMap) -> Vec<u8> {
    let rows = phi.table.iter().map(|e| [fmt_g(e.lambda), fmt_g(e.phi), fmt_g(e.residual_max)]);
    csv_bytes(PHI_HEADER, rows, None)
}
