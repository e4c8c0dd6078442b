//! `tvfilter` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.
//! Errors are printed as one line, `error[config]: ...` or `error[numeric]: ...`.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tempfile::NamedTempFile;
use tvfilter::design::{Design, DesignFile};
use tvfilter::metrics::{convergence_study, rule_harmonics, FilterMetrics, CONVERGENCE_THRESHOLD_DB};
use tvfilter::optimize::{optimize_modulation, Objective};
use tvfilter::oracle::{compare, TransientConfig};
use tvfilter::solve::{sweep, SweepGrid};
use tvfilter::{Error, Mode};

#[derive(Parser)]
#[command(name = "tvfilter", version, about = "Analyze filters built from time-modulated resonators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep S-parameters at every harmonic and write them as CSV.
    Sweep(Common),
    /// Print a key=value metrics report; `--out` also writes a CSV row.
    Metrics(Common),
    /// Compare sweeps at increasing harmonic counts.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Comma-separated ascending odd harmonic counts.
        #[arg(long, value_delimiter = ',')]
        series: Option<Vec<usize>>,
        #[arg(long, default_value_t = CONVERGENCE_THRESHOLD_DB)]
        threshold: f64,
    },
    /// Search the `[optimize]` box and append the result to a run-log CSV.
    Optimize(Common),
    /// Compare transient and frequency-domain magnitudes.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Comma-separated frequencies; defaults to five in-band points.
        #[arg(long, value_delimiter = ',')]
        freqs: Option<Vec<String>>,
    },
    /// Print the parsed design in canonical form.
    Echo(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    design: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// `cm` or `rigorous`, overrides the design file.
    #[arg(long)]
    mode: Option<String>,
    /// Harmonic count, overrides the design file.
    #[arg(long)]
    nhar: Option<usize>,
    /// Sweep points, overrides the design file.
    #[arg(long)]
    points: Option<usize>,
}

struct Loaded {
    file: DesignFile,
    design: Design,
    grid: SweepGrid,
}

impl Common {
    fn load(&self) -> Result<Loaded, Error> {
        let file = DesignFile::read(&self.design)?;
        let mut design = file.design()?;
        if let Some(mode) = &self.mode {
            design = design.with_mode(mode.parse::<Mode>()?);
        }
        if let Some(n) = self.nhar {
            design = design
                .with_harmonics(n)
                .map_err(|e| Error::Config(format!("--nhar: {e}")))?;
        }
        let mut grid = file.grid(&design)?;
        if let Some(p) = self.points {
            grid = SweepGrid::new(grid.f_start, grid.f_stop, p)
                .map_err(|e| Error::Config(format!("--points: {e}")))?;
        }
        Ok(Loaded { file, design, grid })
    }

    fn out(&self) -> Result<&Path, Error> {
        self.out
            .as_deref()
            .ok_or_else(|| Error::Config("--out is required for this command".into()))
    }
}

/// Write through a temporary file in the target directory, so a failure never
/// leaves a partial output behind.
fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> Result<(), Error>) -> Result<(), Error> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Error::Config(format!("cannot write {}: {e}", path.display()));
    let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
    fill(tmp.as_file_mut())?;
    tmp.as_file_mut().flush().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn csv_line(fields: &[String]) -> String {
    fields.join(",") + "\n"
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Sweep(c) => {
            let l = c.load()?;
            let out = c.out()?;
            let s = sweep(&l.design, &l.grid)?;
            write_atomic(out, |w| s.write_csv(w))
        }
        Command::Metrics(c) => {
            let l = c.load()?;
            let s = sweep(&l.design, &l.grid)?;
            let m = FilterMetrics::compute(&s, l.design.bandpass.f0, &l.file.metrics_spec()?);
            print!("{}", m.report());
            if let Some(out) = &c.out {
                let (keys, values): (Vec<_>, Vec<_>) = m
                    .entries()
                    .into_iter()
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .unzip();
                write_atomic(out, |w| {
                    w.write_all((csv_line(&keys) + &csv_line(&values)).as_bytes())
                        .map_err(|e| Error::Config(e.to_string()))
                })?;
            }
            Ok(())
        }
        Command::Converge {
            common,
            series,
            threshold,
        } => {
            let l = common.load()?;
            let series = series.unwrap_or_else(|| {
                let top = rule_harmonics(l.design.order()) + 2;
                (3..=top).step_by(2).collect()
            });
            let steps = convergence_study(&l.design, &l.grid, &series, threshold)
                .map_err(|e| match e {
                    Error::InvalidInput(m) => Error::Config(format!("--series: {m}")),
                    other => other,
                })?;
            let mut text = csv_line(&[
                "from_nhar", "to_nhar", "max_delta_dB", "at_f_Hz", "param", "converged",
            ].map(String::from));
            for s in &steps {
                text += &csv_line(&[
                    s.from_harmonics.to_string(),
                    s.to_harmonics.to_string(),
                    s.max.delta_db.to_string(),
                    s.max.freq_hz.to_string(),
                    s.max.param.name().to_string(),
                    s.converged.to_string(),
                ]);
            }
            print!("{text}");
            if let Some(out) = &common.out {
                write_atomic(out, |w| w.write_all(text.as_bytes()).map_err(|e| Error::Config(e.to_string())))?;
            }
            Ok(())
        }
        Command::Optimize(c) => {
            let l = c.load()?;
            let out = c.out()?;
            let spec = l
                .file
                .optimize_spec()?
                .ok_or_else(|| Error::Config("design file has no [optimize] section".into()))?;
            let r = optimize_modulation(&l.design, &spec)?;
            let objective = match spec.objective {
                Objective::CenterDirectivity => "center_directivity".to_string(),
                Objective::DirectivityBandwidth { level_db } => format!("directivity_bandwidth@{level_db}"),
            };
            let b = &r.best;
            let header = [
                "design", "mode", "nhar", "objective", "fm_Hz", "index", "phase_step_deg", "D0_dB",
                "objective_value", "worst_RL_dB", "worst_IL_dB", "violation_dB", "feasible", "evaluations",
            ]
            .map(String::from);
            let row = [
                c.design.display().to_string(),
                l.design.mode.to_string(),
                l.design.modulation.harmonics.to_string(),
                objective,
                b.fm.to_string(),
                b.index.to_string(),
                b.phase_step.to_degrees().to_string(),
                b.d0_db.to_string(),
                b.objective.to_string(),
                b.worst_return_loss_db.to_string(),
                b.worst_insertion_loss_db.to_string(),
                b.violation_db.to_string(),
                r.feasible().to_string(),
                r.evaluations.to_string(),
            ];
            let fresh = !out.exists() || std::fs::metadata(out).map(|m| m.len() == 0).unwrap_or(true);
            let mut text = String::new();
            if fresh {
                text += &csv_line(&header);
            }
            text += &csv_line(&row);
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(out)
                .map_err(|e| Error::Config(format!("cannot open {}: {e}", out.display())))?;
            f.write_all(text.as_bytes())
                .map_err(|e| Error::Config(format!("cannot write {}: {e}", out.display())))?;
            for (k, v) in header.iter().zip(&row) {
                println!("{k}={v}");
            }
            for v in &r.violations {
                println!("violation={v}");
            }
            Ok(())
        }
        Command::Oracle { common, freqs } => {
            let l = common.load()?;
            let out = common.out()?;
            let freqs: Vec<f64> = match freqs {
                Some(list) => list
                    .iter()
                    .map(|s| tvfilter::design::parse_frequency(s))
                    .collect::<Result<_, _>>()?,
                None => {
                    let f0 = l.design.bandpass.f0;
                    let bw = l.design.bandpass.bandwidth_hz();
                    (0..5).map(|i| f0 + (i as f64 - 2.0) * 0.15 * bw).collect()
                }
            };
            let rows = compare(&l.design, &freqs, &TransientConfig::default())?;
            let names = ["S11", "S21", "S12", "S22"];
            let mut header = vec!["f_requested_Hz".to_string(), "f_Hz".to_string()];
            for n in names {
                header.push(format!("{n}_freq_domain_dB"));
                header.push(format!("{n}_transient_dB"));
                header.push(format!("{n}_delta_dB"));
            }
            let mut text = csv_line(&header);
            for r in &rows {
                let mut row = vec![r.requested_hz.to_string(), r.freq_hz.to_string()];
                let d = r.delta_db();
                for i in 0..4 {
                    row.push(r.reference_db[i].to_string());
                    row.push(r.transient_db[i].to_string());
                    row.push(d[i].to_string());
                }
                text += &csv_line(&row);
            }
            write_atomic(out, |w| w.write_all(text.as_bytes()).map_err(|e| Error::Config(e.to_string())))
        }
        Command::Echo(c) => {
            let l = c.load()?;
            let text = l.file.normalized()?.to_toml()?;
            match &c.out {
                Some(out) => write_atomic(out, |w| w.write_all(text.as_bytes()).map_err(|e| Error::Config(e.to_string()))),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, code) = if e.is_config() { ("config", 2) } else { ("numeric", 3) };
            eprintln!("error[{kind}]: {}", e.to_string().replace('\n', " "));
            ExitCode::from(code)
        }
    }
}
