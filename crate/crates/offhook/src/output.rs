//! Trajectory CSV, run summaries and number formatting.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use offhook_core::linalg::norm;
use offhook_core::sim::Frame;
use offhook_core::Trajectory;
use serde::Serialize;

use crate::CliError;

pub const CSV_HEADER: [&str; 11] = [
    "t",
    "frame",
    "s1",
    "s2",
    "s3",
    "s4",
    "s5",
    "u1",
    "u2",
    "is_sample",
    "norm",
];

/// `v` with `digits` significant digits, fixed notation for moderate
/// magnitudes and scientific otherwise.
pub fn sig(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.*e}", digits - 1)
    }
}

fn create(path: &Path) -> Result<File, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))?;
    }
    File::create(path).map_err(|e| CliError::io(format!("cannot create {}: {e}", path.display())))
}

/// One row per recorded node. Runs on the vehicle that carry a z-trace emit
/// an `x` row and a `z` row per node.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let err = |e: csv::Error| CliError::io(format!("{}: {e}", path.display()));
    w.write_record(CSV_HEADER).map_err(err)?;
    let mut frames: Vec<(Frame, &[[f64; 5]])> = vec![(traj.frame, &traj.states)];
    if let (Frame::X, Some(z)) = (traj.frame, &traj.z_trace) {
        frames.push((Frame::Z, z));
    }
    let mut samples = traj.sample_indices.iter().peekable();
    for i in 0..traj.len() {
        let is_sample = samples.next_if_eq(&&i).is_some();
        let u = traj.controls[i];
        for (frame, states) in &frames {
            let s = states[i];
            let mut row = Vec::with_capacity(11);
            row.push(traj.times[i].to_string());
            row.push(frame.tag().to_string());
            row.extend(s.iter().map(|v| v.to_string()));
            row.push(u.u1.to_string());
            row.push(u.u2.to_string());
            row.push(if is_sample { "1" } else { "0" }.to_string());
            row.push(norm(&s).to_string());
            w.write_record(&row).map_err(err)?;
        }
    }
    w.flush()
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    writeln!(f).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}
