//! Deterministic output layer: CSV with fixed 17-significant-digit decimal
//! formatting, JSON reports with full-precision numbers, content digests and
//! the run manifest. Re-running an identical config byte-reproduces all
//! numeric outputs (fixed iteration orders, no time-seeded randomness).

use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::front::FrontTrajectory;
use crate::grid::Geometry;
use crate::harness::SweepReport;
use crate::model::VelocityCoeff;
use crate::pme::Trajectory;
use crate::scenario::Scenario;

/// 17 significant digits, enough to round-trip any f64.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn format_g(g: VelocityCoeff) -> String {
    match g {
        VelocityCoeff::Finite(v) => format_float(v),
        VelocityCoeff::Infinite => "inf".into(),
    }
}

/// Content digest of the canonicalized (serde round-tripped) scenario.
pub fn scenario_hash(s: &Scenario) -> String {
    let canonical = serde_json::to_string(s).expect("scenario serialization cannot fail");
    sha256_hex(canonical.as_bytes())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Snapshot CSV: one row per (t, cell).
pub fn snapshot_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,r,rho,p\n");
    for st in &traj.states {
        let p = st.pressure();
        for j in 0..st.rho.len() {
            let coord = match &st.geom {
                Geometry::Radial(g) => format_float(g.center(j)),
                // Planar snapshots key cells by flat index.
                Geometry::Plane(_) => j.to_string(),
            };
            out.push_str(&format!(
                "{},{},{},{}\n",
                format_float(st.t),
                coord,
                format_float(st.rho[j]),
                format_float(p[j]),
            ));
        }
    }
    out
}

pub fn diagnostics_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,mass,max_p,support_radius,ab_min,exterior_error\n");
    for d in &traj.diagnostics {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_float(d.t),
            format_float(d.mass),
            format_float(d.max_p),
            format_float(d.support_radius),
            format_float(d.ab_min),
            format_float(d.exterior_error),
        ));
    }
    out
}

pub fn front_csv(traj: &FrontTrajectory) -> String {
    let mut out =
        String::from("t,component,left,right,grad_left,grad_right,g_left,g_right,event\n");
    for r in &traj.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            format_float(r.t),
            r.component,
            format_float(r.left),
            format_float(r.right),
            format_float(r.grad_left),
            format_float(r.grad_right),
            format_g(r.g_left),
            format_g(r.g_right),
            r.event.as_str(),
        ));
    }
    out
}

/// Flat sweep table: one row per (m, t).
pub fn sweep_errors_csv(report: &SweepReport) -> String {
    let mut out = String::from(
        "m,t,support_radius,reference_radius,radius_rel_error,inner_error,pressure_error,outer_error,ab_min,mass,max_p\n",
    );
    for e in &report.entries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            format_float(e.m),
            format_float(e.t),
            format_float(e.support_radius),
            format_float(e.reference_radius),
            format_float(e.radius_rel_error),
            format_float(e.inner_error),
            format_float(e.pressure_error),
            format_float(e.outer_error),
            format_float(e.ab_min),
            format_float(e.mass),
            format_float(e.max_p),
        ));
    }
    out
}

pub fn series_csv(header: &str, series: &[(f64, f64)]) -> String {
    let mut out = format!("{header}\n");
    for &(a, b) in series {
        out.push_str(&format!("{},{}\n", format_float(a), format_float(b)));
    }
    out
}

pub fn json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    s.push('\n');
    s
}

#[derive(Clone, Debug, Serialize)]
pub struct ManifestEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Provenance record of one run; the listed digests match the files as
/// written.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub scenario_name: String,
    pub scenario_hash: String,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub outputs: Vec<ManifestEntry>,
}

pub fn unix_ms() -> u128 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// Writes a named file into the run directory and records its digest.
pub fn write_output(
    dir: &Path,
    name: &str,
    content: &str,
    entries: &mut Vec<ManifestEntry>,
) -> Result<()> {
    fs::write(dir.join(name), content)?;
    entries.push(ManifestEntry {
        name: name.to_string(),
        sha256: sha256_hex(content.as_bytes()),
        bytes: content.len(),
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_is_fixed_width_precision() {
        assert_eq!(format_float(0.25), "2.5000000000000000e-1");
        assert_eq!(format_float(f64::INFINITY), "inf");
        assert_eq!(format_float(-1.0), "-1.0000000000000000e0");
        // Round-trip through the printed representation.
        let x = std::f64::consts::PI * 1e-7;
        assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(
            sha256_hex(b"stiffhs"),
            sha256_hex(b"stiffhs"),
        );
        assert_ne!(sha256_hex(b"a"), sha256_hex(b"b"));
    }
}
