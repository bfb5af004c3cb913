//! CSV and JSON encoders for trajectories and records.

use std::io::{self, Write};

use serde::Serialize;

use crate::numfmt::fmt_g17;
use crate::simulation::Trajectory;
use crate::sweeps::{AxisSpec, SensitivityRecord, SweepRecord};

pub const TRAJECTORY_COLUMNS: [&str; 13] = [
    "t", "x", "C_at", "C_oc", "C_veg", "C_so", "T", "P", "R_veg", "R_so", "L", "F_oc", "R_tip",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(format!("unknown format `{other}` (expected csv|jsonl)")),
        }
    }
}

fn csv_err(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(inner) => inner,
        other => io::Error::other(format!("{other:?}")),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_g17).unwrap_or_default()
}

fn trajectory_row(traj: &Trajectory, k: usize) -> [f64; 13] {
    let s = &traj.states[k];
    let f = &traj.fluxes[k];
    [
        traj.times[k],
        s.social.x,
        s.climate.c_at,
        s.climate.c_oc,
        s.climate.c_veg,
        s.climate.c_so,
        s.climate.t,
        f.photosynthesis,
        f.r_veg,
        f.r_so,
        f.turnover,
        f.f_oc,
        f.r_tip,
    ]
}

/// One row per sample after a `# params_fingerprint=... variant=...` comment.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut w: W) -> io::Result<()> {
    writeln!(
        w,
        "# params_fingerprint={} variant={}",
        traj.fingerprint,
        traj.variant.as_str()
    )?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRAJECTORY_COLUMNS).map_err(csv_err)?;
    for k in 0..traj.len() {
        out.write_record(trajectory_row(traj, k).map(fmt_g17))
            .map_err(csv_err)?;
    }
    out.flush()
}

/// One JSON object per sample with the CSV column names as keys.
pub fn write_trajectory_jsonl<W: Write>(traj: &Trajectory, mut w: W) -> io::Result<()> {
    for k in 0..traj.len() {
        let row = trajectory_row(traj, k);
        let fields: Vec<String> = TRAJECTORY_COLUMNS
            .iter()
            .zip(row)
            .map(|(name, v)| format!("\"{name}\":{}", json_number(v)))
            .collect();
        writeln!(w, "{{{}}}", fields.join(","))?;
    }
    Ok(())
}

fn json_number(v: f64) -> String {
    if v.is_finite() {
        fmt_g17(v)
    } else {
        "null".into()
    }
}

/// Serialises `value` as pretty JSON followed by a newline.
pub fn write_json<W: Write, T: Serialize>(value: &T, mut w: W) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)
}

/// Serialises each item as one compact JSON line.
pub fn write_jsonl<W: Write, T: Serialize>(items: &[T], mut w: W) -> io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        writeln!(w)?;
    }
    Ok(())
}

fn d_label(d: f64) -> String {
    format!("time_to_tip_d{d}")
}

pub fn write_sweep_csv<W: Write>(
    records: &[SweepRecord],
    d_values: &[f64],
    w: W,
) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = [
        "i",
        "j",
        "x_value",
        "y_value",
        "scenario",
        "auc_diff",
        "peak_T",
        "peak_T_year",
        "peak_T_base",
        "max_T_gap",
        "final_x",
        "tipped",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(d_values.iter().map(|&d| d_label(d)));
    header.push("error".into());
    out.write_record(&header).map_err(csv_err)?;

    for r in records {
        let mut row = vec![
            r.i.to_string(),
            r.j.to_string(),
            fmt_g17(r.x_value),
            fmt_g17(r.y_value),
            r.scenario.as_str().to_string(),
        ];
        match &r.metrics {
            Some(m) => {
                row.extend(
                    [
                        m.auc_diff,
                        m.peak_t,
                        m.peak_t_year,
                        m.peak_t_base,
                        m.max_t_gap,
                        m.final_x,
                    ]
                    .map(fmt_g17),
                );
                row.push(m.tipped.to_string());
                row.extend(d_values.iter().map(|&d| opt(m.time_to_tip_for(d))));
            }
            None => row.extend(std::iter::repeat_n(String::new(), 7 + d_values.len())),
        }
        row.push(r.error.clone().unwrap_or_default());
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush()
}

pub fn write_sensitivity_csv<W: Write>(records: &[SensitivityRecord], w: W) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "path",
        "bound",
        "value",
        "delta_auc_diff",
        "delta_peak_T",
        "error",
    ])
    .map_err(csv_err)?;
    for r in records {
        out.write_record([
            r.path.clone(),
            r.bound.as_str().to_string(),
            fmt_g17(r.value),
            opt(r.delta_auc_diff),
            opt(r.delta_peak_t),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()
}

/// Everything needed to replay a sweep-style run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub axes: Vec<AxisSpec>,
    pub preset: String,
    pub params_fingerprint: String,
    /// Full parameter set in the configuration grammar.
    pub params: String,
    pub d_values: Vec<f64>,
    pub threshold: f64,
    pub workers: usize,
    pub points: usize,
    pub failed_points: usize,
    pub wall_time_s: f64,
    pub notes: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_params;
    use crate::emissions::EmissionSeries;
    use crate::simulation::{simulate, Variant};

    #[test]
    fn csv_and_jsonl_carry_the_same_values() {
        let mut p = default_params();
        p.schedule.t_end = 1810.0;
        p.schedule.t_social_on = 1805.0;
        let traj = simulate(&p, &EmissionSeries::bundled(), Variant::Modified).unwrap();

        let mut csv_buf = Vec::new();
        write_trajectory_csv(&traj, &mut csv_buf).unwrap();
        let mut json_buf = Vec::new();
        write_trajectory_jsonl(&traj, &mut json_buf).unwrap();

        let csv_text = String::from_utf8(csv_buf).unwrap();
        let mut lines = csv_text.lines();
        assert!(lines.next().unwrap().starts_with("# params_fingerprint="));
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(header, TRAJECTORY_COLUMNS);

        let json_text = String::from_utf8(json_buf).unwrap();
        let rows: Vec<&str> = lines.collect();
        let objs: Vec<serde_json::Value> = json_text
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(rows.len(), 11);
        assert_eq!(objs.len(), 11);
        for (row, obj) in rows.iter().zip(&objs) {
            for (name, cell) in header.iter().zip(row.split(',')) {
                let a: f64 = cell.parse().unwrap();
                let b = obj[name].as_f64().unwrap();
                assert_eq!(a.to_bits(), b.to_bits(), "{name}");
            }
        }
    }
}
