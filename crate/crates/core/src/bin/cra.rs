use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cra::experiments::{
    compare_ara_qa, fit_rows, gap_maps, norm_traces, pgs_heatmap, read_rows, run_sweep, sweep, tts_scan, write_sweep,
    ExperimentSpec, Metrics,
};

#[derive(Parser)]
#[command(name = "cra", version, about = "Reverse annealing with counterdiabatic driving")]
struct Cli {
    /// Experiment spec (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; defaults to the spec's `output` or `./out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ground-state fidelity on the spec grid.
    FidelityScan,
    /// Time to solution over τ.
    TtsScan,
    /// Energetic cost of the counterdiabatic term.
    CostScan,
    /// Norm of the counterdiabatic term along θ.
    NormTrace,
    /// Inverse gap over the (λ, s) plane.
    GapMap,
    /// Reverse against forward annealing.
    CompareQa,
    /// Refit scaling exponents of an existing sweep CSV.
    Fit {
        #[arg(long)]
        input: PathBuf,
    },
    /// ln P_GS over (N, τ).
    Heatmap,
}

fn load(cli: &Cli) -> cra::Result<ExperimentSpec> {
    match &cli.config {
        Some(path) => ExperimentSpec::load(path),
        None => Err(cra::Error::Config("--config <file> is required".into())),
    }
}

fn out_dir(cli: &Cli, spec: Option<&ExperimentSpec>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| spec.and_then(|s| s.output.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Runs the command and returns the number of failed points.
fn run(cli: &Cli) -> cra::Result<usize> {
    if let Command::Fit { input } = &cli.command {
        let rows = read_rows(input)?;
        let dir = out_dir(cli, None);
        std::fs::create_dir_all(&dir)?;
        sweep::write_json(&dir.join("fit.json"), &fit_rows(&rows))?;
        return Ok(rows.iter().filter(|r| r.failed()).count());
    }
    let spec = load(cli)?;
    let dir = out_dir(cli, Some(&spec));
    std::fs::create_dir_all(&dir)?;
    let report = |path: &Path| eprintln!("wrote {}", path.display());
    let failed = match &cli.command {
        Command::FidelityScan | Command::CostScan => {
            let (metrics, stem) = match cli.command {
                Command::FidelityScan => (Metrics::FIDELITY, "fidelity"),
                _ => (
                    Metrics {
                        cost: true,
                        gap: true,
                        fidelity: false,
                    },
                    "cost",
                ),
            };
            let outcome = run_sweep(&spec, metrics)?;
            write_sweep(&outcome, &dir, stem)?;
            report(&dir.join(format!("{stem}.csv")));
            outcome.summary.failed
        }
        Command::TtsScan => {
            let scan = tts_scan(&spec)?;
            scan.write(&dir, "tts")?;
            report(&dir.join("tts.csv"));
            scan.failed
        }
        Command::NormTrace => {
            let traces = norm_traces(&spec)?;
            traces.write(&dir, "norm_trace")?;
            report(&dir.join("norm_trace.csv"));
            traces.failed()
        }
        Command::GapMap => {
            let mut failed = 0;
            for map in gap_maps(&spec)? {
                match map.result {
                    Ok(m) => {
                        m.export(&dir, &map.stem, &spec.q)?;
                        report(&dir.join(format!("{}.csv", map.stem)));
                    }
                    Err(e) => {
                        eprintln!("{}: {e}", map.stem);
                        failed += 1;
                    }
                }
            }
            failed
        }
        Command::CompareQa => {
            let cmp = compare_ara_qa(&spec)?;
            cmp.write(&dir)?;
            report(&dir.join("compare.csv"));
            cmp.failed()
        }
        Command::Heatmap => {
            let map = pgs_heatmap(&spec)?;
            map.write(&dir, "heatmap")?;
            report(&dir.join("heatmap.csv"));
            map.sweep.summary.failed
        }
        Command::Fit { .. } => unreachable!(),
    };
    Ok(failed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(n) => {
            eprintln!("{n} grid point(s) failed; see the error column");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
