//! Phase-diagram scans of the metric intensity over an `(h, η)` grid.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use ptqgt_core::family::EigenSource;
use ptqgt_core::geometry::{default_step, qgt, RMatrix};
use ptqgt_core::xy_chain::{metric_intensity, unbroken_at, FieldPoint, IntensityOptions, XYParams};
use ptqgt_core::Error as CoreError;
use rayon::prelude::*;

use crate::config::{Entry, ScanConfig, ScanModel};
use crate::model_file::ModelFamily;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// A critical signal at this point; every entry is the `inf` sentinel.
    Degenerate,
    /// PT symmetry is broken; no tensor values.
    Broken,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Degenerate => "degenerate",
            Status::Broken => "broken",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRecord {
    pub h: f64,
    pub eta: f64,
    pub unbroken: bool,
    /// `ḡ` at the point; `None` for broken points, all `+∞` for degenerate ones.
    pub g: Option<RMatrix>,
    pub status: Status,
}

impl ScanRecord {
    pub fn entry(&self, e: Entry) -> Option<f64> {
        self.g.as_ref().map(|g| g[e.index()])
    }
}

/// Records in row-major order: `h` outer, `η` inner.
#[derive(Debug, Clone)]
pub struct ScanResult {
    pub h_values: Vec<f64>,
    pub eta_values: Vec<f64>,
    pub records: Vec<ScanRecord>,
}

impl ScanResult {
    pub fn at(&self, i_h: usize, i_eta: usize) -> &ScanRecord {
        &self.records[i_h * self.eta_values.len() + i_eta]
    }
}

enum Evaluator {
    Xy(XYParams, IntensityOptions),
    Model(ModelFamily, usize),
}

fn divergent() -> RMatrix {
    RMatrix::from_element(2, 2, f64::INFINITY)
}

/// Turns a critical signal into a `degenerate` record; any other failure aborts the scan.
fn classify(h: f64, eta: f64, r: Result<RMatrix, CoreError>) -> anyhow::Result<ScanRecord> {
    match r {
        Ok(g) => Ok(ScanRecord { h, eta, unbroken: true, g: Some(g), status: Status::Ok }),
        Err(CoreError::Broken) => Ok(ScanRecord { h, eta, unbroken: false, g: None, status: Status::Broken }),
        Err(e) if e.is_critical_signal() => {
            Ok(ScanRecord { h, eta, unbroken: true, g: Some(divergent()), status: Status::Degenerate })
        }
        Err(e) => Err(anyhow::Error::new(e).context(format!("scan failed at h = {h}, eta = {eta}"))),
    }
}

impl Evaluator {
    fn point(&self, h: f64, eta: f64) -> anyhow::Result<ScanRecord> {
        match self {
            Evaluator::Xy(p, opts) => {
                let f = FieldPoint::new(h, eta);
                let verdict = unbroken_at(p, f)?;
                if !(verdict.analytic && verdict.numeric) {
                    return Ok(ScanRecord { h, eta, unbroken: false, g: None, status: Status::Broken });
                }
                classify(h, eta, metric_intensity(p, f, opts))
            }
            Evaluator::Model(m, level) => {
                let point = [h, eta];
                let r = m.eigensystem(&point).and_then(|eig| {
                    if !eig.unbroken {
                        return Err(CoreError::Broken);
                    }
                    qgt(m, &point, *level, default_step(&point)).map(|q| q.metric())
                });
                classify(h, eta, r)
            }
        }
    }
}

/// Evaluate the grid on a pool of `config.workers` threads. Every cell is computed
/// independently and gathered in grid order, so the result does not depend on the pool size.
pub fn run_scan(config: &ScanConfig) -> anyhow::Result<ScanResult> {
    let evaluator = match &config.model {
        ScanModel::XyChain(p) => Evaluator::Xy(*p, IntensityOptions { n_quad: config.n_quad, ..Default::default() }),
        ScanModel::MatrixFile { path, level } => {
            let m = ModelFamily::load(path)?;
            anyhow::ensure!(
                m.n_params == 2,
                "a scanned model file must declare params 2 (h, eta), found {}",
                m.n_params
            );
            anyhow::ensure!(*level < m.dim, "level {level} out of range for dimension {}", m.dim);
            Evaluator::Model(m, *level)
        }
    };
    let h_values = config.h_range.values();
    let eta_values = config.eta_range.values();
    let cells: Vec<(f64, f64)> = h_values.iter().flat_map(|&h| eta_values.iter().map(move |&eta| (h, eta))).collect();
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(config.workers).build().context("cannot build worker pool")?;
    let records =
        pool.install(|| cells.par_iter().map(|&(h, eta)| evaluator.point(h, eta)).collect::<anyhow::Result<Vec<_>>>())?;
    Ok(ScanResult { h_values, eta_values, records })
}

fn number(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.12e}")
    }
}

pub fn csv_header(outputs: &[Entry]) -> String {
    let mut cols = vec!["h", "eta", "unbroken"];
    cols.extend(outputs.iter().map(|e| e.name()));
    cols.push("status");
    cols.join(",")
}

/// CSV text with columns `h,eta,unbroken,<outputs>,status`; broken rows leave the tensor
/// fields empty.
pub fn to_csv(result: &ScanResult, outputs: &[Entry]) -> String {
    let mut s = csv_header(outputs);
    s.push('\n');
    for r in &result.records {
        write!(s, "{},{},{}", r.h, r.eta, r.unbroken).expect("write to String");
        for &e in outputs {
            s.push(',');
            if let Some(v) = r.entry(e) {
                s.push_str(&number(v));
            }
        }
        writeln!(s, ",{}", r.status.name()).expect("write to String");
    }
    s
}

/// Gnuplot script drawing one heat map per emitted entry from `csv_path`.
pub fn gnuplot_script(csv_path: &Path, outputs: &[Entry]) -> String {
    let file =
        csv_path.file_name().map_or_else(|| csv_path.display().to_string(), |f| f.to_string_lossy().into_owned());
    let mut s = String::new();
    writeln!(s, "# Heat maps of the metric intensity from {file}.").unwrap();
    writeln!(s, "# Divergent cells are written as 'inf' and left blank here; broken cells are empty.").unwrap();
    writeln!(s, "set datafile separator ','").unwrap();
    writeln!(s, "set datafile missing 'inf'").unwrap();
    writeln!(s, "set view map").unwrap();
    writeln!(s, "set xlabel 'h'").unwrap();
    writeln!(s, "set ylabel 'eta'").unwrap();
    writeln!(s, "set palette rgbformulae 33,13,10").unwrap();
    writeln!(s, "set multiplot layout 1,{}", outputs.len()).unwrap();
    for (i, e) in outputs.iter().enumerate() {
        writeln!(s, "set title '{}'", e.name()).unwrap();
        writeln!(
            s,
            "splot '{file}' every ::1 using 1:2:{} with points pointtype 5 pointsize 0.6 palette notitle",
            4 + i
        )
        .unwrap();
    }
    writeln!(s, "unset multiplot").unwrap();
    s
}

/// Companion script path: the CSV path with extension `gp`.
pub fn script_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("gp")
}

/// Run the scan and write the CSV and its gnuplot script.
pub fn scan_to_files(config: &ScanConfig) -> anyhow::Result<ScanResult> {
    let result = run_scan(config)?;
    let csv = to_csv(&result, &config.outputs);
    if let Some(dir) = config.out_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    std::fs::write(&config.out_path, csv).with_context(|| format!("cannot write {}", config.out_path.display()))?;
    let gp = script_path(&config.out_path);
    std::fs::write(&gp, gnuplot_script(&config.out_path, &config.outputs))
        .with_context(|| format!("cannot write {}", gp.display()))?;
    Ok(result)
}
