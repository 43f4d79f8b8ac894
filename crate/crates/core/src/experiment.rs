//! Running configured experiments and writing their CSV and summary output.

use crate::config::{ExperimentConfig, Sweep};
use crate::conventional::{solve, PenaltySpec, RodPair};
use crate::error::{Error, Result};
use crate::metrics::{Metrics, Qoi};
use crate::oracle::{build_oracle, convergence_rate, OracleSolution};
use crate::rod::{Rod, Side};
use crate::schwarz::{run_simulation, ControllerGrid, Subdomain};
use crate::series::RunSeries;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Bump when the series columns change.
pub const SERIES_VERSION: u32 = 1;

pub const SERIES_COLUMNS: [&str; 27] = [
    "t",
    "active",
    "iterations",
    "eps_abs",
    "eps_rel",
    "x_left",
    "v_left",
    "x_right",
    "v_right",
    "force",
    "kinetic_left",
    "potential_left",
    "kinetic_right",
    "potential_right",
    "total_energy",
    "oracle_x",
    "oracle_v",
    "oracle_force",
    "oracle_kinetic",
    "oracle_potential",
    "oracle_total_energy",
    "err_x",
    "err_v",
    "err_force",
    "err_kinetic",
    "err_potential",
    "err_total_energy",
];

pub const SUBSTEP_COLUMNS: [&str; 5] = ["t", "rod", "x", "v", "a"];

#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub label: String,
    pub series: RunSeries,
    pub metrics: Metrics,
    /// Seconds; not part of any CSV so output stays deterministic.
    pub wall_time: f64,
}

pub fn grid(cfg: &ExperimentConfig) -> ControllerGrid {
    ControllerGrid {
        t_start: cfg.benchmark.t_start,
        t_end: cfg.benchmark.t_end,
        interval: cfg.controller.interval,
    }
}

fn rods(cfg: &ExperimentConfig) -> Result<[Rod; 2]> {
    Ok([
        Rod::benchmark(&cfg.benchmark, Side::Left, cfg.left.elements, cfg.mass(0))?,
        Rod::benchmark(&cfg.benchmark, Side::Right, cfg.right.elements, cfg.mass(1))?,
    ])
}

/// Run one configuration, ignoring any sweep block.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let clock = Instant::now();
    let g = grid(cfg);
    let [left, right] = rods(cfg)?;
    let series = match cfg.run.method.conventional() {
        None => {
            let mk = |rod: Rod, side: usize| -> Result<Subdomain> {
                let s = cfg.subdomain(side);
                let st = rod.initial_state(&cfg.benchmark);
                Subdomain::new(rod, s.preset.spec(s.family)?, s.time_step, cfg.role(side), st)
            };
            let mut settings = cfg.controller.settings();
            settings.record_substeps = cfg.output.substeps;
            run_simulation([mk(left, 0)?, mk(right, 1)?], g, settings)?
        }
        Some(m) => {
            let states = [left.initial_state(&cfg.benchmark), right.initial_state(&cfg.benchmark)];
            let mut pair = RodPair::new([left, right], states)?;
            let pen = cfg.penalty.map(|p| PenaltySpec::new(p.tau)).transpose()?;
            solve(m, &mut pair, pen, cfg.left.time_step, &g, None)?
        }
    };
    let metrics = Metrics::compute(&series, &build_oracle(&cfg.benchmark))?;
    Ok(RunReport {
        config: cfg.clone(),
        label: cfg.label(),
        series,
        metrics,
        wall_time: clock.elapsed().as_secs_f64(),
    })
}

/// Runs in parallel; results come back in input order.
pub fn run_many(cfgs: &[ExperimentConfig]) -> Vec<Result<RunReport>> {
    cfgs.par_iter().map(run_experiment).collect()
}

/// Expand the sweep and run every entry. Fails on the first error in config order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<RunReport>> {
    run_many(&cfg.expand()?).into_iter().collect()
}

/// Shortest round-trip decimal; non-finite values become empty fields.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else {
        String::new()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn csv_bytes(comment: Option<&str>, header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| Error::Io(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    let body = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    let body = String::from_utf8(body).map_err(|e| Error::Io(e.to_string()))?;
    Ok(match comment {
        Some(c) => format!("# {c}\n{body}"),
        None => body,
    })
}

impl RunReport {
    pub fn oracle(&self) -> OracleSolution {
        build_oracle(&self.config.benchmark)
    }

    /// One row per controller stop. Conventional runs leave the iteration columns empty.
    pub fn series_csv(&self) -> Result<String> {
        let oracle = self.oracle();
        let e0 = oracle.system_energy();
        let schwarz = self.config.run.method.conventional().is_none();
        let rows: Vec<Vec<String>> = self
            .series
            .records
            .iter()
            .map(|r| {
                let (ox, ov) = oracle.contact_point(r.t);
                let of = oracle.contact_force(r.t);
                let (ok, op) = oracle.energies(r.t);
                let te = r.total_energy();
                let its = if schwarz && r.active {
                    r.iterations.to_string()
                } else {
                    String::new()
                };
                vec![
                    fmt_f64(r.t),
                    (r.active as u8).to_string(),
                    its,
                    fmt_f64(r.eps_abs),
                    fmt_f64(r.eps_rel),
                    fmt_f64(r.contact_x[0]),
                    fmt_f64(r.contact_v[0]),
                    fmt_f64(r.contact_x[1]),
                    fmt_f64(r.contact_v[1]),
                    fmt_f64(r.force),
                    fmt_f64(r.kinetic[0]),
                    fmt_f64(r.potential[0]),
                    fmt_f64(r.kinetic[1]),
                    fmt_f64(r.potential[1]),
                    fmt_f64(te),
                    fmt_f64(ox),
                    fmt_f64(ov),
                    fmt_f64(of),
                    fmt_f64(ok),
                    fmt_f64(op),
                    fmt_f64(e0),
                    fmt_f64(r.contact_x[0] - ox),
                    fmt_f64(r.contact_v[0] - ov),
                    fmt_f64(r.force - of),
                    fmt_f64(r.kinetic[0] - ok),
                    fmt_f64(r.potential[0] - op),
                    fmt_f64(te - e0),
                ]
            })
            .collect();
        csv_bytes(
            Some(&format!("schwarz-contact series v{SERIES_VERSION}")),
            &SERIES_COLUMNS,
            &rows,
        )
    }

    /// Contact-node samples at every local step, if they were recorded.
    pub fn substeps_csv(&self) -> Result<Option<String>> {
        if self.series.substeps.is_empty() {
            return Ok(None);
        }
        let rows: Vec<Vec<String>> = self
            .series
            .substeps
            .iter()
            .map(|s| {
                vec![
                    fmt_f64(s.t),
                    if s.rod == 0 { "left" } else { "right" }.to_string(),
                    fmt_f64(s.x),
                    fmt_f64(s.v),
                    fmt_f64(s.a),
                ]
            })
            .collect();
        csv_bytes(
            Some(&format!("schwarz-contact substeps v{SERIES_VERSION}")),
            &SUBSTEP_COLUMNS,
            &rows,
        )
        .map(Some)
    }

    /// Write `<stem>.series.csv` (and `<stem>.substeps.csv`) under `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let stem = file_stem(&self.label);
        let mut written = Vec::new();
        let p = dir.join(format!("{stem}.series.csv"));
        std::fs::write(&p, self.series_csv()?)?;
        written.push(p);
        if let Some(s) = self.substeps_csv()? {
            let p = dir.join(format!("{stem}.substeps.csv"));
            std::fs::write(&p, s)?;
            written.push(p);
        }
        Ok(written)
    }
}

/// Label reduced to `[a-z0-9_-]`.
pub fn file_stem(label: &str) -> String {
    let mut s = String::new();
    for c in label.chars() {
        let c = c.to_ascii_lowercase();
        if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
            s.push(c);
        } else if !s.ends_with('_') {
            s.push('_');
        }
    }
    let s = s.trim_matches('_').replace('.', "p");
    if s.is_empty() {
        "run".into()
    } else {
        s
    }
}

/// One line of the summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub method: String,
    /// Total relative error per quantity, percent, in `Qoi::ALL` order.
    pub errors: [Option<f64>; 6],
    /// Mean and standard deviation of the signed error, per quantity.
    pub moments: [Option<(f64, f64)>; 6],
    pub max_total_energy: Option<f64>,
    pub t_imp: Option<f64>,
    pub t_rel: Option<f64>,
    pub iterations: Option<(usize, f64)>,
}

impl SummaryRow {
    pub fn from_report(r: &RunReport) -> SummaryRow {
        let m = &r.metrics;
        let schwarz = r.config.run.method.conventional().is_none();
        SummaryRow {
            label: r.label.clone(),
            method: r.config.run.method.name().to_string(),
            errors: Qoi::ALL.map(|q| Some(m.total(q))),
            moments: Qoi::ALL.map(|q| {
                let e = m.get(q);
                Some((e.mean, e.std))
            }),
            max_total_energy: Some(m.max_total_energy_error),
            t_imp: m.t_imp,
            t_rel: m.t_rel,
            iterations: schwarz.then_some((m.max_iterations, m.avg_iterations)),
        }
    }

    /// Log-log slope of each error against element count. Needs three or more
    /// reports that differ in element count.
    pub fn convergence(reports: &[RunReport]) -> Result<SummaryRow> {
        let errors = Qoi::ALL.map(|q| {
            let pairs: Vec<(usize, f64)> = reports
                .iter()
                .map(|r| (r.config.left.elements, r.metrics.total(q)))
                .collect();
            convergence_rate(&pairs).ok()
        });
        if errors.iter().all(|e| e.is_none()) {
            return Err(Error::InvalidInput("no convergence rate could be fitted".into()));
        }
        Ok(SummaryRow {
            label: "convergence_rate".into(),
            method: reports.first().map(|r| r.config.run.method.name().to_string()).unwrap_or_default(),
            errors,
            moments: [None; 6],
            max_total_energy: None,
            t_imp: None,
            t_rel: None,
            iterations: None,
        })
    }
}

/// Summary rows for a sweep, plus the convergence row when the sweep is over element counts.
pub fn summary_rows(base: &ExperimentConfig, reports: &[RunReport]) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = reports.iter().map(SummaryRow::from_report).collect();
    let by_elements = base
        .sweep
        .as_ref()
        .and_then(|s| s.axis().ok())
        .is_some_and(|a| matches!(a, Sweep::Elements(_)));
    if by_elements {
        if let Ok(c) = SummaryRow::convergence(reports) {
            rows.push(c);
        }
    }
    rows
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<String> {
    let mut header: Vec<String> = vec!["label".into(), "method".into()];
    header.extend(Qoi::ALL.iter().map(|q| q.name().to_string()));
    header.push("max_total_energy".into());
    for q in Qoi::ALL {
        header.push(format!("{}_mean", q.name()));
        header.push(format!("{}_std", q.name()));
    }
    header.extend(["t_imp", "t_rel", "max_iterations", "avg_iterations"].map(String::from));
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![r.label.clone(), r.method.clone()];
            v.extend(r.errors.iter().map(|e| opt(*e)));
            v.push(opt(r.max_total_energy));
            for m in &r.moments {
                v.push(opt(m.map(|m| m.0)));
                v.push(opt(m.map(|m| m.1)));
            }
            v.push(opt(r.t_imp));
            v.push(opt(r.t_rel));
            v.push(r.iterations.map(|i| i.0.to_string()).unwrap_or_default());
            v.push(opt(r.iterations.map(|i| i.1)));
            v
        })
        .collect();
    csv_bytes(Some(&format!("schwarz-contact summary v{SERIES_VERSION}")), &header_refs, &body)
}

/// Aligned plain-text table: percentages, event times in µs, iterations.
pub fn summary_text(rows: &[SummaryRow]) -> String {
    let header = [
        "label", "pos %", "vel %", "force %", "PE %", "KE %", "TE %", "TE max %", "t_imp us", "t_rel us", "its",
    ];
    let pct = |x: Option<f64>| x.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into());
    let us = |x: Option<f64>| {
        // stops carry round-off, e.g. t_imp = -1e-10 would print as -0.0
        x.map(|x| format!("{:.1}", x * 1e6).replace("-0.0", "0.0"))
            .unwrap_or_else(|| "-".into())
    };
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let idx = |q: Qoi| Qoi::ALL.iter().position(|k| *k == q).expect("listed");
            vec![
                r.label.clone(),
                pct(r.errors[idx(Qoi::Position)]),
                pct(r.errors[idx(Qoi::Velocity)]),
                pct(r.errors[idx(Qoi::Force)]),
                pct(r.errors[idx(Qoi::Potential)]),
                pct(r.errors[idx(Qoi::Kinetic)]),
                pct(r.errors[idx(Qoi::Total)]),
                pct(r.max_total_energy),
                us(r.t_imp),
                us(r.t_rel),
                r.iterations
                    .map(|(m, a)| format!("{m}/{a:.2}"))
                    .unwrap_or_else(|| "-".into()),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &table {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(s, "{c:<w$}");
            } else {
                let _ = write!(s, "  {c:>w$}");
            }
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(header.to_vec());
    for row in &table {
        line(row.iter().map(|s| s.as_str()).collect());
    }
    out
}
