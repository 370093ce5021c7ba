//! Derived studies built on sweeps: time to solution, forward-annealing
//! comparison, fidelity heatmaps, norm traces and gap maps.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentSpec;
use super::sweep::{grid_points, run_sweep, write_json, write_rows, Metrics, SweepOutcome, SweepRow};
use crate::error::Result;
use crate::gauge::{norm_trace, uniform_grid, NormTracePoint};
use crate::model::{AnnealModel, Protocol};
use crate::spectra::{gap_map, min_gap_along_path, PathMinimum};

/// Fidelities this close to one count as certain success.
pub const CERTAIN: f64 = 1.0 - 1e-15;

/// Time to solution `τ·ln(1−p_d)/ln(1−P)`, clamped to `τ` once a single run
/// already reaches `p_d`. Infinite when `P = 0`.
///
/// ```
/// use cra::experiments::tts;
/// assert_eq!(tts(1.0, 3.0, 0.99), 3.0);
/// assert!(tts(0.0, 3.0, 0.99).is_infinite());
/// assert!((tts(1e-6, 1.0, 0.99) / (0.01f64.ln() / -1e-6) - 1.0).abs() < 1e-5);
/// ```
pub fn tts(p_gs: f64, tau: f64, p_d: f64) -> f64 {
    if p_gs >= CERTAIN || p_gs >= p_d {
        return tau;
    }
    if p_gs <= 0.0 {
        return f64::INFINITY;
    }
    tau * (1.0 - p_d).ln() / (-p_gs).ln_1p()
}

/// Row of a time-to-solution scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TtsRow {
    pub label: String,
    #[serde(rename = "N")]
    pub spins: usize,
    pub c: Option<f64>,
    pub q: Option<f64>,
    pub gamma: f64,
    pub tau: f64,
    #[serde(rename = "K")]
    pub order: usize,
    #[serde(rename = "P_GS")]
    pub p_gs: Option<f64>,
    pub tts: Option<f64>,
    pub error: String,
}

/// Smallest TTS of one curve over the τ grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TtsMinimum {
    pub label: String,
    #[serde(rename = "N")]
    pub spins: usize,
    pub c: Option<f64>,
    pub q: Option<f64>,
    pub tau: f64,
    pub tts: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TtsScan {
    pub p_d: f64,
    pub rows: Vec<TtsRow>,
    pub minima: Vec<TtsMinimum>,
    pub failed: usize,
}

impl TtsScan {
    /// TTS of one protocol label at `(N, τ)`.
    pub fn value(&self, label: &str, spins: usize, tau: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.label == label && r.spins == spins && r.tau == tau)
            .and_then(|r| r.tts)
    }

    pub fn minimum(&self, label: &str, spins: usize) -> Option<&TtsMinimum> {
        self.minima.iter().find(|m| m.label == label && m.spins == spins)
    }

    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_rows(std::fs::File::create(dir.join(format!("{stem}.csv")))?, &self.rows)?;
        let summary = serde_json::json!({
            "p_d": self.p_d,
            "failed": self.failed,
            "minima": self.minima,
        });
        write_json(&dir.join(format!("{stem}.json")), &summary)
    }
}

type CurveKey = (String, usize, Option<u64>, Option<u64>);

fn curve_key(row: &SweepRow) -> CurveKey {
    (row.label(), row.spins, row.c.map(f64::to_bits), row.q.map(f64::to_bits))
}

/// TTS of every point of a fidelity sweep.
pub fn tts_from_sweep(rows: &[SweepRow], p_d: f64) -> TtsScan {
    let tts_rows: Vec<TtsRow> = rows
        .iter()
        .map(|r| TtsRow {
            label: r.label(),
            spins: r.spins,
            c: r.c,
            q: r.q,
            gamma: r.gamma,
            tau: r.tau,
            order: r.order,
            p_gs: r.p_gs,
            tts: r.p_gs.map(|p| tts(p, r.tau, p_d)),
            error: r.error.clone(),
        })
        .collect();
    let mut best: BTreeMap<CurveKey, TtsMinimum> = BTreeMap::new();
    for (row, t) in rows.iter().zip(&tts_rows) {
        let Some(value) = t.tts else { continue };
        let entry = best.entry(curve_key(row)).or_insert(TtsMinimum {
            label: t.label.clone(),
            spins: t.spins,
            c: t.c,
            q: t.q,
            tau: t.tau,
            tts: f64::INFINITY,
        });
        if value < entry.tts {
            entry.tau = t.tau;
            entry.tts = value;
        }
    }
    TtsScan {
        p_d,
        failed: rows.iter().filter(|r| r.failed()).count(),
        rows: tts_rows,
        minima: best.into_values().collect(),
    }
}

pub fn tts_scan(spec: &ExperimentSpec) -> Result<TtsScan> {
    let outcome = run_sweep(spec, Metrics::FIDELITY)?;
    Ok(tts_from_sweep(&outcome.rows, spec.p_d))
}

/// Reverse annealing from the spec against forward annealing on the same
/// `N`, τ and K grid.
#[derive(Clone, Debug)]
pub struct Comparison {
    pub reverse: SweepOutcome,
    pub forward: SweepOutcome,
    pub rows: Vec<ComparisonRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    #[serde(rename = "N")]
    pub spins: usize,
    pub c: f64,
    pub q: f64,
    pub tau: f64,
    #[serde(rename = "K")]
    pub order: usize,
    pub reverse_label: String,
    pub forward_label: String,
    pub p_reverse: Option<f64>,
    pub p_forward: Option<f64>,
    /// `P_forward / P_reverse`.
    pub ratio: Option<f64>,
}

impl Comparison {
    pub fn failed(&self) -> usize {
        self.reverse.summary.failed + self.forward.summary.failed
    }

    pub fn row(&self, spins: usize, c: f64, order: usize) -> Option<&ComparisonRow> {
        self.rows
            .iter()
            .find(|r| r.spins == spins && r.c == c && r.order == order)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        super::sweep::write_sweep(&self.reverse, dir, "reverse")?;
        super::sweep::write_sweep(&self.forward, dir, "forward")?;
        write_rows(std::fs::File::create(dir.join("compare.csv"))?, &self.rows)
    }
}

pub fn compare_ara_qa(spec: &ExperimentSpec) -> Result<Comparison> {
    let reverse_spec = ExperimentSpec {
        protocol: Protocol::Ara,
        ..spec.clone()
    };
    let forward_spec = ExperimentSpec {
        protocol: Protocol::Qa,
        ..spec.clone()
    };
    let reverse = run_sweep(&reverse_spec, Metrics::FIDELITY)?;
    let forward = run_sweep(&forward_spec, Metrics::FIDELITY)?;
    let rows = reverse
        .rows
        .iter()
        .filter_map(|r| {
            let f = forward
                .rows
                .iter()
                .find(|f| f.spins == r.spins && f.tau == r.tau && f.order == r.order)?;
            let ratio = match (r.p_gs, f.p_gs) {
                (Some(a), Some(b)) if a > 0.0 => Some(b / a),
                _ => None,
            };
            Some(ComparisonRow {
                spins: r.spins,
                c: r.c?,
                q: r.q?,
                tau: r.tau,
                order: r.order,
                reverse_label: r.label(),
                forward_label: f.label(),
                p_reverse: r.p_gs,
                p_forward: f.p_gs,
                ratio,
            })
        })
        .collect();
    Ok(Comparison { reverse, forward, rows })
}

/// One cell of a `ln P_GS` heatmap over `(N, τ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatCell {
    pub label: String,
    pub c: Option<f64>,
    pub q: Option<f64>,
    pub tau: f64,
    #[serde(rename = "N")]
    pub spins: usize,
    pub ln_p_gs: f64,
    /// The cell lies between sampled sizes and was filled by linear
    /// interpolation of `ln P_GS` in N.
    pub interpolated: bool,
}

#[derive(Clone, Debug)]
pub struct Heatmap {
    pub sweep: SweepOutcome,
    pub cells: Vec<HeatCell>,
}

impl Heatmap {
    /// Sampled `ln P_GS` of one label along τ at fixed N, in grid order.
    pub fn tau_profile(&self, label: &str, spins: usize) -> Vec<(f64, f64)> {
        self.cells
            .iter()
            .filter(|c| c.label == label && c.spins == spins && !c.interpolated)
            .map(|c| (c.tau, c.ln_p_gs))
            .collect()
    }

    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        super::sweep::write_sweep(&self.sweep, dir, &format!("{stem}_runs"))?;
        write_rows(std::fs::File::create(dir.join(format!("{stem}.csv")))?, &self.cells)
    }
}

type HeatKey = (String, Option<u64>, Option<u64>, u64);

/// `ln P_GS` on every integer N between the sampled sizes. Only sizes
/// with an integer `cN` can be simulated; the others are interpolated.
pub fn pgs_heatmap(spec: &ExperimentSpec) -> Result<Heatmap> {
    let sweep = run_sweep(spec, Metrics::FIDELITY)?;
    let mut curves: BTreeMap<HeatKey, Vec<&SweepRow>> = BTreeMap::new();
    for row in sweep.rows.iter().filter(|r| r.p_gs.is_some_and(|p| p > 0.0)) {
        let key = (
            row.label(),
            row.c.map(f64::to_bits),
            row.q.map(f64::to_bits),
            row.tau.to_bits(),
        );
        curves.entry(key).or_default().push(row);
    }
    let mut cells = Vec::new();
    for rows in curves.values() {
        let mut samples: Vec<(usize, f64)> = rows.iter().map(|r| (r.spins, r.p_gs.unwrap().ln())).collect();
        samples.sort_by_key(|s| s.0);
        samples.dedup_by_key(|s| s.0);
        let first = rows[0];
        let cell = |spins, ln_p_gs, interpolated| HeatCell {
            label: first.label(),
            c: first.c,
            q: first.q,
            tau: first.tau,
            spins,
            ln_p_gs,
            interpolated,
        };
        for pair in samples.windows(2) {
            let ((n0, y0), (n1, y1)) = (pair[0], pair[1]);
            cells.push(cell(n0, y0, false));
            for n in n0 + 1..n1 {
                let t = (n - n0) as f64 / (n1 - n0) as f64;
                cells.push(cell(n, y0 + t * (y1 - y0), true));
            }
        }
        if let Some(&(n, y)) = samples.last() {
            cells.push(cell(n, y, false));
        }
    }
    Ok(Heatmap { sweep, cells })
}

/// Norm of the counterdiabatic term along one anneal.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormCurve {
    pub label: String,
    #[serde(rename = "N")]
    pub spins: usize,
    pub c: Option<f64>,
    pub q: f64,
    pub tau: f64,
    #[serde(rename = "K")]
    pub order: usize,
    #[serde(skip)]
    pub points: Vec<NormTracePoint>,
    pub peak_theta: Option<f64>,
    pub peak_frob: Option<f64>,
    pub min_gap: Option<PathMinimum>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
struct NormRow<'a> {
    label: &'a str,
    #[serde(rename = "N")]
    spins: usize,
    c: Option<f64>,
    q: f64,
    tau: f64,
    #[serde(rename = "K")]
    order: usize,
    theta: f64,
    frob_norm: f64,
    trace_norm: Option<f64>,
}

pub struct NormTraces {
    pub curves: Vec<NormCurve>,
}

impl NormTraces {
    pub fn failed(&self) -> usize {
        self.curves.iter().filter(|c| c.error.is_some()).count()
    }

    pub fn curve(&self, label: &str, spins: usize, c: f64) -> Option<&NormCurve> {
        self.curves
            .iter()
            .find(|x| x.label == label && x.spins == spins && x.c == Some(c))
    }

    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let rows: Vec<NormRow> = self
            .curves
            .iter()
            .flat_map(|c| {
                c.points.iter().map(move |p| NormRow {
                    label: &c.label,
                    spins: c.spins,
                    c: c.c,
                    q: c.q,
                    tau: c.tau,
                    order: c.order,
                    theta: p.theta,
                    frob_norm: p.frob_norm,
                    trace_norm: p.trace_norm,
                })
            })
            .collect();
        write_rows(std::fs::File::create(dir.join(format!("{stem}.csv")))?, &rows)?;
        write_json(&dir.join(format!("{stem}.json")), &self.curves)
    }
}

/// Norm traces of every counterdiabatic point (K ≥ 1) of the spec, with the
/// location of the minimum gap for comparison.
pub fn norm_traces(spec: &ExperimentSpec) -> Result<NormTraces> {
    spec.validate()?;
    let grid = uniform_grid(spec.grids.trace_points);
    let points: Vec<_> = grid_points(spec, spec.protocol)
        .into_iter()
        .filter(|p| p.order > 0)
        .collect();
    let curves = points
        .par_iter()
        .map(|point| {
            let params = spec.params(point.protocol, point.q, point.tau, point.order);
            let mut curve = NormCurve {
                label: params.label(),
                spins: point.spins,
                c: point.fraction,
                q: point.q,
                tau: point.tau,
                order: point.order,
                points: Vec::new(),
                peak_theta: None,
                peak_frob: None,
                min_gap: None,
                error: None,
            };
            let result = params
                .sector(point.spins, point.fraction.unwrap_or(1.0))
                .and_then(|sector| AnnealModel::new(&sector, &params))
                .and_then(|model| {
                    let trace = norm_trace(&model, point.order, point.tau, &grid, spec.trace_norm)?;
                    let gap = min_gap_along_path(&model, spec.grids.gap_points)?;
                    Ok((trace, gap))
                });
            match result {
                Ok((trace, gap)) => {
                    if let Some(peak) = trace.iter().max_by(|a, b| a.frob_norm.total_cmp(&b.frob_norm)) {
                        curve.peak_theta = Some(peak.theta);
                        curve.peak_frob = Some(peak.frob_norm);
                    }
                    curve.points = trace;
                    curve.min_gap = Some(gap);
                }
                Err(e) => curve.error = Some(e.to_string()),
            }
            curve
        })
        .collect();
    Ok(NormTraces { curves })
}

/// Gap map of one sector; `stem` names its export files.
pub struct GapMapResult {
    pub stem: String,
    pub result: Result<crate::spectra::GapMap>,
}

/// One gap map per `(N, c)` of the spec. Maps do not depend on q; the
/// spec's q values are drawn as paths in the sidecar.
pub fn gap_maps(spec: &ExperimentSpec) -> Result<Vec<GapMapResult>> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for &c in &spec.fractions {
        for &n in &spec.spins {
            jobs.push((n, c));
        }
    }
    Ok(jobs
        .par_iter()
        .map(|&(n, c)| {
            let params = spec.params(Protocol::Ara, spec.q[0], 1.0, 0);
            let result = params
                .sector(n, c)
                .and_then(|sector| AnnealModel::new(&sector, &params))
                .and_then(|model| gap_map(&model, spec.grids.map_lambda, spec.grids.map_s));
            GapMapResult {
                stem: format!("gap_map_N{n}_c{c}"),
                result,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tts_limits() {
        assert_eq!(tts(1.0, 2.0, 0.99), 2.0);
        assert_eq!(tts(0.995, 2.0, 0.99), 2.0);
        assert!(tts(0.0, 2.0, 0.99).is_infinite());
        let p: f64 = 0.5;
        assert!((tts(p, 1.0, 0.99) - 0.01f64.ln() / 0.5f64.ln()).abs() < 1e-12);
        // Tiny fidelities keep full precision.
        assert!((tts(1e-20, 1.0, 0.99) / (4.605170185988091e20) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tts_scan_picks_curve_minima() {
        let mut spec = ExperimentSpec::new(Protocol::Ara, vec![4, 6], vec![0.5]);
        spec.taus = vec![0.5, 2.0, 8.0];
        spec.orders = vec![0, 2];
        let scan = tts_scan(&spec).unwrap();
        assert_eq!(scan.rows.len(), 12);
        assert_eq!(scan.minima.len(), 4);
        for m in &scan.minima {
            let best = spec
                .taus
                .iter()
                .map(|&t| scan.value(&m.label, m.spins, t).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert_eq!(best, m.tts);
        }
    }

    #[test]
    fn heatmap_interpolates_between_valid_sizes() {
        let mut spec = ExperimentSpec::new(Protocol::Ara, vec![4, 8], vec![0.5]);
        spec.taus = vec![1.0, 4.0];
        let map = pgs_heatmap(&spec).unwrap();
        assert_eq!(map.cells.len(), 10);
        let mid: Vec<&HeatCell> = map.cells.iter().filter(|c| c.spins == 6 && c.tau == 1.0).collect();
        assert!(mid[0].interpolated);
        let ends: Vec<f64> = map
            .cells
            .iter()
            .filter(|c| c.tau == 1.0 && !c.interpolated)
            .map(|c| c.ln_p_gs)
            .collect();
        assert!((mid[0].ln_p_gs - 0.5 * (ends[0] + ends[1])).abs() < 1e-12);
        assert_eq!(map.tau_profile("ARA", 4).len(), 2);
    }

    #[test]
    fn comparison_pairs_points() {
        let mut spec = ExperimentSpec::new(Protocol::Ara, vec![4, 6], vec![0.5]);
        spec.orders = vec![0, 1];
        let cmp = compare_ara_qa(&spec).unwrap();
        assert_eq!(cmp.rows.len(), 4);
        let row = cmp.row(6, 0.5, 1).unwrap();
        assert_eq!(
            (row.reverse_label.as_str(), row.forward_label.as_str()),
            ("CRA1", "QA1")
        );
        assert!(row.ratio.unwrap() > 0.0);
        assert_eq!(cmp.failed(), 0);
    }

    #[test]
    fn norm_traces_skip_uncorrected_points() {
        let mut spec = ExperimentSpec::new(Protocol::Ara, vec![6], vec![0.5]);
        spec.orders = vec![0, 1];
        spec.grids.trace_points = 21;
        let traces = norm_traces(&spec).unwrap();
        assert_eq!(traces.curves.len(), 1);
        let curve = traces.curve("CRA1", 6, 0.5).unwrap();
        assert_eq!(curve.points.len(), 21);
        assert!(curve.peak_frob.unwrap() > 0.0);
        let dir = tempfile::tempdir().unwrap();
        traces.write(dir.path(), "norms").unwrap();
        let text = std::fs::read_to_string(dir.path().join("norms.csv")).unwrap();
        assert_eq!(text.lines().count(), 22);
    }

    #[test]
    fn gap_maps_per_sector() {
        let spec = ExperimentSpec::new(Protocol::Ara, vec![4, 6], vec![0.5]);
        let maps = gap_maps(&spec).unwrap();
        assert_eq!(maps.len(), 2);
        assert_eq!(maps[0].stem, "gap_map_N4_c0.5");
        assert!(maps.iter().all(|m| m.result.is_ok()));
    }
}
