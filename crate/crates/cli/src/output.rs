//! CSV and summary writers. Numbers use 12 significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use cascade_core::grid::SpatialFunction;
use cascade_core::sim::{Snapshot, Trajectory};
use cascade_core::Matrix;

use crate::error::CliError;

/// Shortest rendering of `v` at 12 significant digits, like C's `%.12g`.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Output directory of one run.
pub struct RunDir {
    pub path: PathBuf,
}

impl RunDir {
    pub fn create(path: PathBuf) -> Result<Self, CliError> {
        fs::create_dir_all(&path).map_err(|e| CliError::io(&path, e))?;
        Ok(RunDir { path })
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        let p = self.file(name);
        fs::write(&p, text).map_err(|e| CliError::io(&p, e))?;
        Ok(p)
    }

    pub fn write_rows(&self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        let p = self.file(name);
        let csv_err = |e: csv::Error| CliError::io(&p, std::io::Error::other(e));
        let mut w = csv::Writer::from_path(&p).map_err(csv_err)?;
        w.write_record(header).map_err(csv_err)?;
        for r in rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush().map_err(|e| CliError::io(&p, e))?;
        Ok(p)
    }

    /// `t` followed by the selected series (all when `select` is `None`).
    pub fn write_trajectory(
        &self,
        name: &str,
        traj: &Trajectory,
        select: Option<&[String]>,
    ) -> Result<PathBuf, CliError> {
        let cols: Vec<&(String, Vec<f64>)> = match select {
            None => traj.series.iter().collect(),
            Some(names) => names
                .iter()
                .map(|n| {
                    traj.series.iter().find(|(s, _)| s == n).ok_or_else(|| {
                        CliError::field(
                            "output.series",
                            format!("unknown series `{n}`; available: {}", traj.names().join(", ")),
                        )
                    })
                })
                .collect::<Result<_, _>>()?,
        };
        let mut header = vec!["t".to_string()];
        header.extend(cols.iter().map(|(n, _)| n.clone()));
        let rows: Vec<Vec<String>> = traj
            .times
            .iter()
            .enumerate()
            .map(|(k, t)| {
                let mut r = vec![fmt_num(*t)];
                r.extend(cols.iter().map(|(_, v)| fmt_num(v[k])));
                r
            })
            .collect();
        self.write_rows(name, &header, &rows)
    }

    pub fn write_snapshot(&self, snap: &Snapshot) -> Result<PathBuf, CliError> {
        let mut header = vec!["x".to_string()];
        header.extend(snap.fields.iter().map(|(n, _)| n.clone()));
        let rows: Vec<Vec<String>> = snap
            .x
            .iter()
            .enumerate()
            .map(|(k, x)| {
                let mut r = vec![fmt_num(*x)];
                r.extend(snap.fields.iter().map(|(_, v)| fmt_num(v[k])));
                r
            })
            .collect();
        self.write_rows(&format!("snapshot_t{}.csv", fmt_num(snap.time)), &header, &rows)
    }

    /// Matrices in long form: `name,row,col,value` (1-based indices).
    pub fn write_gains(&self, name: &str, gains: &[(&str, &Matrix)]) -> Result<PathBuf, CliError> {
        let header = ["name", "row", "col", "value"].map(String::from);
        let mut rows = Vec::new();
        for (label, m) in gains {
            for i in 0..m.rows() {
                for j in 0..m.cols() {
                    rows.push(vec![
                        label.to_string(),
                        (i + 1).to_string(),
                        (j + 1).to_string(),
                        fmt_num(m[(i, j)]),
                    ]);
                }
            }
        }
        self.write_rows(name, &header, &rows)
    }

    /// Sampled spatial gain: `x` and one column per component.
    pub fn write_spatial(&self, name: &str, label: &str, f: &SpatialFunction) -> Result<PathBuf, CliError> {
        let mut header = vec!["x".to_string()];
        if f.dim() == 1 {
            header.push(label.to_string());
        } else {
            header.extend((1..=f.dim()).map(|i| format!("{label}{i}")));
        }
        let rows: Vec<Vec<String>> = (0..f.len())
            .map(|k| {
                let mut r = vec![fmt_num(f.x(k))];
                r.extend(f.at(k).iter().map(|v| fmt_num(*v)));
                r
            })
            .collect();
        self.write_rows(name, &header, &rows)
    }
}

pub fn fmt_matrix(m: &Matrix) -> String {
    let rows: Vec<String> = (0..m.rows())
        .map(|i| {
            let r: Vec<String> = (0..m.cols()).map(|j| fmt_short(m[(i, j)])).collect();
            format!("[{}]", r.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

pub fn fmt_short(v: f64) -> String {
    let s = format!("{v:.6}");
    if s.starts_with("-0.000000") && v > -5e-7 {
        "0.000000".into()
    } else {
        s
    }
}

pub fn fmt_complex_list(zs: &[cascade_core::Complex64]) -> String {
    let parts: Vec<String> = zs
        .iter()
        .map(|z| {
            if z.im.abs() < 1e-12 * (1.0 + z.re.abs()) {
                fmt_short(z.re)
            } else {
                format!("{}{:+.6}i", fmt_short(z.re), z.im)
            }
        })
        .collect();
    format!("{{{}}}", parts.join(", "))
}

pub fn path_list(paths: &[PathBuf]) -> String {
    paths.iter().map(|p| display(p)).collect::<Vec<_>>().join(", ")
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
