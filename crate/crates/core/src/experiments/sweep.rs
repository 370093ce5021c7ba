//! Grid sweeps: one row per `(c, q, N, τ, K)` point, written as CSV with a
//! JSON summary of the scaling fits.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentSpec;
use super::fit::{fit_power_law, fit_scaling_exponent, FitResult};
use crate::dynamics::{evolve, RunFlag};
use crate::error::{Error, Result};
use crate::gauge::{norm_trace, simpson, uniform_grid};
use crate::model::{AnnealModel, Protocol};
use crate::schedule::{effective_gamma, predicted_exponent};
use crate::spectra::{min_gap_along_path, PathMinimum};

/// Value of the `schema` column.
pub const SWEEP_SCHEMA: &str = "cra-sweep/1";

/// Observables computed at each grid point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub fidelity: bool,
    pub cost: bool,
    pub gap: bool,
}

impl Metrics {
    pub const FIDELITY: Self = Self {
        fidelity: true,
        cost: false,
        gap: false,
    };
    pub const COST: Self = Self {
        fidelity: false,
        cost: true,
        gap: false,
    };
    pub const ALL: Self = Self {
        fidelity: true,
        cost: true,
        gap: true,
    };
}

/// One grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub protocol: Protocol,
    pub spins: usize,
    /// Up fraction; `None` for QA.
    pub fraction: Option<f64>,
    pub q: f64,
    pub tau: f64,
    pub order: usize,
}

impl GridPoint {
    pub fn label(&self, spec: &ExperimentSpec) -> String {
        spec.params(self.protocol, self.q, self.tau, self.order).label()
    }
}

/// Grid points of a spec in file order: c, q, N, τ, K.
pub fn grid_points(spec: &ExperimentSpec, protocol: Protocol) -> Vec<GridPoint> {
    let fractions: Vec<Option<f64>> = match protocol {
        Protocol::Ara => spec.fractions.iter().map(|&c| Some(c)).collect(),
        Protocol::Qa => vec![None],
    };
    let mut points = Vec::new();
    for &fraction in &fractions {
        for &q in &spec.effective_q(protocol) {
            for &spins in &spec.spins {
                for &tau in &spec.taus {
                    for &order in &spec.orders {
                        points.push(GridPoint {
                            protocol,
                            spins,
                            fraction,
                            q,
                            tau,
                            order,
                        });
                    }
                }
            }
        }
    }
    points
}

/// One CSV row. Empty cells are observables that were not requested.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub schema: String,
    pub protocol: String,
    #[serde(rename = "N")]
    pub spins: usize,
    pub c: Option<f64>,
    pub q: Option<f64>,
    pub gamma: f64,
    pub p: u32,
    pub tau: f64,
    #[serde(rename = "K")]
    pub order: usize,
    #[serde(rename = "P_GS")]
    pub p_gs: Option<f64>,
    pub cost_frob: Option<f64>,
    pub cost_trace: Option<f64>,
    pub norm_peak: Option<f64>,
    pub theta_min_gap: Option<f64>,
    pub min_gap: Option<f64>,
    pub steps: Option<usize>,
    pub flags: String,
    pub error: String,
}

impl SweepRow {
    fn empty(point: &GridPoint, spec: &ExperimentSpec) -> Self {
        Self {
            schema: SWEEP_SCHEMA.into(),
            protocol: point.protocol.to_string(),
            spins: point.spins,
            c: point.fraction,
            q: (point.protocol == Protocol::Ara).then_some(point.q),
            gamma: spec.gamma,
            p: spec.p,
            tau: point.tau,
            order: point.order,
            p_gs: None,
            cost_frob: None,
            cost_trace: None,
            norm_peak: None,
            theta_min_gap: None,
            min_gap: None,
            steps: None,
            flags: String::new(),
            error: String::new(),
        }
    }

    pub fn failed(&self) -> bool {
        !self.error.is_empty()
    }

    /// Protocol label: ARA, CRA1…, QA, QA1….
    pub fn label(&self) -> String {
        match (self.protocol.as_str(), self.order) {
            (p, 0) => p.to_string(),
            ("ARA", k) => format!("CRA{k}"),
            (p, k) => format!("{p}{k}"),
        }
    }
}

type GapKey = (Option<u64>, u64, usize);

fn gap_key(point: &GridPoint) -> GapKey {
    (point.fraction.map(f64::to_bits), point.q.to_bits(), point.spins)
}

fn model_for(spec: &ExperimentSpec, point: &GridPoint) -> Result<AnnealModel> {
    let params = spec.params(point.protocol, point.q, point.tau, point.order);
    let sector = params.sector(point.spins, point.fraction.unwrap_or(1.0))?;
    AnnealModel::new(&sector, &params)
}

fn evaluate(
    spec: &ExperimentSpec,
    point: &GridPoint,
    metrics: Metrics,
    gaps: &BTreeMap<GapKey, Result<PathMinimum, String>>,
) -> SweepRow {
    let mut row = SweepRow::empty(point, spec);
    let mut errors = Vec::new();
    let mut flags = Vec::new();
    match model_for(spec, point) {
        Err(e) => errors.push(e.to_string()),
        Ok(model) => {
            if metrics.fidelity {
                match evolve(model.sector(), &model.params, &spec.solver.options()) {
                    Ok(run) => {
                        row.p_gs = Some(run.p_gs);
                        row.steps = Some(run.steps);
                        if run.flags.contains(&RunFlag::BelowTrustFloor) {
                            flags.push("below_trust_floor");
                        }
                    }
                    Err(e) => errors.push(e.to_string()),
                }
            }
            if metrics.cost {
                match point_cost(spec, &model) {
                    Ok((frob, trace, peak)) => {
                        row.cost_frob = Some(frob);
                        row.cost_trace = trace;
                        row.norm_peak = Some(peak);
                    }
                    Err(e) => errors.push(e.to_string()),
                }
            }
        }
    }
    if metrics.gap {
        match gaps.get(&gap_key(point)) {
            Some(Ok(min)) => {
                row.theta_min_gap = Some(min.theta);
                row.min_gap = Some(min.gap);
            }
            Some(Err(e)) => errors.push(e.clone()),
            None => {}
        }
    }
    row.flags = flags.join(";");
    row.error = errors.join("; ");
    row
}

/// Frobenius cost, optional trace-norm cost and the Frobenius peak.
fn point_cost(spec: &ExperimentSpec, model: &AnnealModel) -> Result<(f64, Option<f64>, f64)> {
    let order = model.params.order;
    if order == 0 {
        return Ok((0.0, spec.trace_norm.then_some(0.0), 0.0));
    }
    let points = spec.grids.cost_points;
    let grid = uniform_grid(points);
    let trace = norm_trace(model, order, model.params.tau, &grid, spec.trace_norm)?;
    let step = 1.0 / (points - 1) as f64;
    let frob: Vec<f64> = trace.iter().map(|p| p.frob_norm).collect();
    let peak = frob.iter().copied().fold(0.0, f64::max);
    let tr: Option<Vec<f64>> = trace.iter().map(|p| p.trace_norm).collect();
    Ok((simpson(&frob, step), tr.map(|v| simpson(&v, step)), peak))
}

/// Fit of one curve of the sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveFit {
    pub label: String,
    pub c: Option<f64>,
    pub q: Option<f64>,
    pub tau: f64,
    pub fit: Option<FitResult>,
    pub error: Option<String>,
    /// `2(1−c)|log₂ Γ̃|` for uncorrected reverse annealing.
    pub predicted: Option<f64>,
}

/// Scaling fits of every curve in a set of rows.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Fits {
    /// γ fits of `P_GS ∼ 2^{−γN}`.
    pub fidelity: Vec<CurveFit>,
    /// α fits of `C ∼ N^α` with the Frobenius cost.
    pub cost: Vec<CurveFit>,
    /// α fits with the trace-norm cost.
    pub trace_cost: Vec<CurveFit>,
}

/// Groups rows by protocol label, c, q and τ, and fits each group against N.
/// Failed rows and empty cells are skipped.
pub fn fit_rows(rows: &[SweepRow]) -> Fits {
    let positive = |v: Option<f64>| v.filter(|&x| x > 0.0);
    Fits {
        fidelity: fit_curves(rows, |r| r.p_gs, fit_scaling_exponent),
        cost: fit_curves(rows, |r| positive(r.cost_frob), fit_power_law),
        trace_cost: fit_curves(rows, |r| positive(r.cost_trace), fit_power_law),
    }
}

/// JSON summary of a sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepSummary {
    pub schema: String,
    pub spec: ExperimentSpec,
    pub metrics: Metrics,
    pub points: usize,
    pub failed: usize,
    pub fits: Fits,
}

impl SweepSummary {
    pub fn new(spec: &ExperimentSpec, metrics: Metrics, rows: &[SweepRow]) -> Self {
        Self {
            schema: SWEEP_SCHEMA.into(),
            spec: spec.clone(),
            metrics,
            points: rows.len(),
            failed: rows.iter().filter(|r| r.failed()).count(),
            fits: fit_rows(rows),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
}

impl SweepOutcome {
    pub fn all_succeeded(&self) -> bool {
        self.summary.failed == 0
    }
}

type CurveKey = (String, Option<u64>, Option<u64>, u64);

fn curves(rows: &[SweepRow]) -> BTreeMap<CurveKey, Vec<&SweepRow>> {
    let mut map: BTreeMap<CurveKey, Vec<&SweepRow>> = BTreeMap::new();
    for row in rows.iter().filter(|r| !r.failed()) {
        let key = (
            row.label(),
            row.c.map(f64::to_bits),
            row.q.map(f64::to_bits),
            row.tau.to_bits(),
        );
        map.entry(key).or_default().push(row);
    }
    map
}

fn fit_curves(
    rows: &[SweepRow],
    value: impl Fn(&SweepRow) -> Option<f64>,
    fit: impl Fn(&[(f64, f64)]) -> Result<FitResult>,
) -> Vec<CurveFit> {
    curves(rows)
        .into_values()
        .filter_map(|group| {
            let points: Vec<(f64, f64)> = group
                .iter()
                .filter_map(|r| value(r).map(|v| (r.spins as f64, v)))
                .collect();
            if points.is_empty() {
                return None;
            }
            let first = group[0];
            let result = fit(&points);
            let predicted = match (first.protocol.as_str(), first.order, first.c, first.q) {
                ("ARA", 0, Some(c), Some(q)) => effective_gamma(first.tau, first.gamma, q)
                    .ok()
                    .map(|g| predicted_exponent(c, g)),
                _ => None,
            };
            Some(CurveFit {
                label: first.label(),
                c: first.c,
                q: first.q,
                tau: first.tau,
                error: result.as_ref().err().map(|e| e.to_string()),
                fit: result.ok(),
                predicted,
            })
        })
        .collect()
}

/// Runs every point of the spec. Failed points are reported in their row's
/// `error` cell and never abort the sweep. Rows follow [`grid_points`]
/// order regardless of scheduling.
pub fn run_sweep(spec: &ExperimentSpec, metrics: Metrics) -> Result<SweepOutcome> {
    spec.validate()?;
    let points = grid_points(spec, spec.protocol);
    let mut gaps = BTreeMap::new();
    if metrics.gap {
        let mut unique: Vec<GridPoint> = Vec::new();
        for p in &points {
            if !unique.iter().any(|u| gap_key(u) == gap_key(p)) {
                unique.push(*p);
            }
        }
        let found: Vec<(GapKey, Result<PathMinimum, String>)> = unique
            .par_iter()
            .map(|p| {
                let result = model_for(spec, p)
                    .and_then(|m| min_gap_along_path(&m, spec.grids.gap_points))
                    .map_err(|e| e.to_string());
                (gap_key(p), result)
            })
            .collect();
        gaps.extend(found);
    }
    let rows: Vec<SweepRow> = points.par_iter().map(|p| evaluate(spec, p, metrics, &gaps)).collect();
    let summary = SweepSummary::new(spec, metrics, &rows);
    Ok(SweepOutcome { rows, summary })
}

/// Writes rows as RFC 4180 CSV with a header row.
pub fn write_rows<W: Write, R: Serialize>(writer: W, rows: &[R]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    for row in rows {
        csv.serialize(row)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Reads rows written by [`write_rows`].
pub fn read_rows(path: &Path) -> Result<Vec<SweepRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let rows: std::result::Result<Vec<SweepRow>, _> = reader.deserialize().collect();
    let rows = rows?;
    if let Some(bad) = rows.iter().find(|r| r.schema != SWEEP_SCHEMA) {
        return Err(Error::Config(format!(
            "unsupported sweep schema '{}' (expected '{SWEEP_SCHEMA}')",
            bad.schema
        )));
    }
    Ok(rows)
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`.
pub fn write_sweep(outcome: &SweepOutcome, dir: &Path, stem: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_rows(std::fs::File::create(dir.join(format!("{stem}.csv")))?, &outcome.rows)?;
    write_json(&dir.join(format!("{stem}.json")), &outcome.summary)
}
