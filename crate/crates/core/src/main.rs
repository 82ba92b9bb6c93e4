use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use aqkd::harness::config::{load_config, ConfigFile, Entry};
use aqkd::harness::presets::{calibrate_dark_count, figure3, stretch};
use aqkd::harness::selftest::run_selftest;
use aqkd::harness::{
    best_point, emit_csv, gnuplot_script, max_range, run_sweep, takeoka_range, write_csv,
    CurveResult, SweepSpec,
};
use aqkd::session::with_workers;

#[derive(Parser)]
#[command(name = "aqkd", version, about = "Amplified BB84 link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one operating point and print its yield figures.
    Point(Common),
    /// Run a sweep described by a config file and flags.
    Sweep(Common),
    /// Run the built-in four-curve comparison.
    Figure3(Common),
    /// Run the superconducting-detector, low-loss-fiber scenario.
    Stretch(Common),
    /// Run the fast invariant checks.
    Selftest,
    /// Search the dark-count probability giving a target plain-BB84 reach.
    Calibrate(CalibrateArgs),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Config file with [global] and [curve.<label>] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
    /// Pulses per point before escalation.
    #[arg(long)]
    pulses: Option<String>,
    /// Escalation target for sparse points.
    #[arg(long = "max-pulses")]
    max_pulses: Option<String>,
    /// Sifted bits below which a point is escalated.
    #[arg(long = "min-sifted")]
    min_sifted: Option<String>,
    /// CSV output path (standard output when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a gnuplot script for the CSV.
    #[arg(long)]
    gnuplot: Option<PathBuf>,
    /// Span lengths in km: list or start:stop:step.
    #[arg(long = "L")]
    lengths: Option<String>,
    #[arg(long = "G")]
    gain: Option<String>,
    /// Amplifier excess-noise factor.
    #[arg(long)]
    chi: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    rounds: Option<String>,
    /// Fiber loss in dB/km.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long = "eta-d")]
    eta_d: Option<String>,
    #[arg(long = "p-dark")]
    p_dark: Option<String>,
    #[arg(long = "p-pol")]
    p_pol: Option<String>,
    #[arg(long = "f-ec")]
    f_ec: Option<String>,
    /// channel | channel-times-detector
    #[arg(long = "takeoka-convention")]
    takeoka_convention: Option<String>,
    /// passive | sifted-basis
    #[arg(long = "eve-receiver")]
    eve_receiver: Option<String>,
    /// split | per-photon
    #[arg(long)]
    kernel: Option<String>,
    /// Yield floor defining maximum range.
    #[arg(long)]
    floor: Option<String>,
    #[arg(long)]
    workers: Option<String>,
}

impl Common {
    fn overrides(&self) -> Vec<Entry> {
        let out = self.out.as_ref().map(|p| p.display().to_string());
        let pairs: [(&str, Option<&String>); 19] = [
            ("seed", self.seed.as_ref()),
            ("pulses", self.pulses.as_ref()),
            ("max-pulses", self.max_pulses.as_ref()),
            ("min-sifted", self.min_sifted.as_ref()),
            ("out", out.as_ref()),
            ("L", self.lengths.as_ref()),
            ("G", self.gain.as_ref()),
            ("chi", self.chi.as_ref()),
            ("mu", self.mu.as_ref()),
            ("rounds", self.rounds.as_ref()),
            ("alpha", self.alpha.as_ref()),
            ("eta-d", self.eta_d.as_ref()),
            ("p-dark", self.p_dark.as_ref()),
            ("p-pol", self.p_pol.as_ref()),
            ("f-ec", self.f_ec.as_ref()),
            ("takeoka-convention", self.takeoka_convention.as_ref()),
            ("eve-receiver", self.eve_receiver.as_ref()),
            ("kernel", self.kernel.as_ref()),
            ("floor", self.floor.as_ref()),
        ];
        let mut v: Vec<Entry> = pairs
            .into_iter()
            .filter_map(|(k, v)| {
                v.map(|v| Entry {
                    key: k.to_string(),
                    value: v.clone(),
                    line: 0,
                })
            })
            .collect();
        if let Some(w) = &self.workers {
            v.push(Entry {
                key: "workers".into(),
                value: w.clone(),
                line: 0,
            });
        }
        v
    }

    fn spec(&self, mut base: SweepSpec) -> aqkd::Result<SweepSpec> {
        let file = match &self.config {
            Some(p) => load_config(p)?,
            None => ConfigFile::default(),
        };
        base.apply(&file, &self.overrides())?;
        base.validate()?;
        Ok(base)
    }
}

#[derive(Args)]
struct CalibrateArgs {
    /// Target plain-BB84 reach in km.
    #[arg(long, default_value_t = 145.0)]
    target: f64,
    #[arg(long = "eta-d", default_value_t = 0.2)]
    eta_d: f64,
    #[arg(long = "p-dark-min", default_value_t = 1e-6)]
    p_dark_min: f64,
    #[arg(long = "p-dark-max", default_value_t = 1e-4)]
    p_dark_max: f64,
    #[arg(long, default_value_t = 10)]
    iterations: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
}

fn write_results(
    spec: &SweepSpec,
    results: &[CurveResult],
    gnuplot: Option<&PathBuf>,
) -> aqkd::Result<()> {
    match &spec.out {
        Some(p) => emit_csv(results, p)?,
        None => write_csv(results, std::io::stdout().lock()).map_err(|source| aqkd::Error::Io {
            path: "<stdout>".into(),
            source,
        })?,
    }
    if let Some(g) = gnuplot {
        let csv = spec.out.clone().unwrap_or_else(|| "results.csv".into());
        let labels: Vec<String> = results.iter().map(|c| c.label.clone()).collect();
        std::fs::write(g, gnuplot_script(&csv, &labels)).map_err(|source| aqkd::Error::Io {
            path: g.clone(),
            source,
        })?;
    }
    for c in results {
        eprintln!(
            "{:>12}: max range {:.1} km (yield floor {:e})",
            c.label,
            max_range(c, spec.yield_floor),
            spec.yield_floor
        );
    }
    eprintln!(
        "{:>12}: {:.1} km",
        "bound",
        takeoka_range(&spec.link, spec.yield_floor)?
    );
    Ok(())
}

fn run(cli: Cli) -> aqkd::Result<bool> {
    match cli.command {
        Command::Point(c) => {
            let spec = c.spec(SweepSpec {
                lengths_km: vec![0.0],
                ..Default::default()
            })?;
            if spec.lengths_km.len() != 1 || spec.curves.len() != 1 {
                return Err(aqkd::Error::InvalidParameter {
                    name: "L",
                    reason: "point takes a single length and a single curve".into(),
                });
            }
            let p = with_workers(spec.workers, || {
                best_point(
                    &spec.link,
                    &spec.curves[0],
                    spec.lengths_km[0],
                    spec.budget,
                    spec.seed,
                )
            })?;
            println!("{p:#?}");
            if let Some(out) = &spec.out {
                let r = [CurveResult {
                    label: spec.curves[0].label.clone(),
                    points: vec![p],
                }];
                emit_csv(&r, out)?;
            }
        }
        Command::Sweep(c) => {
            let spec = c.spec(SweepSpec::default())?;
            write_results(&spec, &run_sweep(&spec)?, c.gnuplot.as_ref())?;
        }
        Command::Figure3(c) => {
            let spec = c.spec(figure3(0))?;
            write_results(&spec, &run_sweep(&spec)?, c.gnuplot.as_ref())?;
        }
        Command::Stretch(c) => {
            let spec = c.spec(stretch(0))?;
            write_results(&spec, &run_sweep(&spec)?, c.gnuplot.as_ref())?;
        }
        Command::Selftest => {
            let mut ok = true;
            for ch in run_selftest() {
                println!(
                    "{} {}: {}",
                    if ch.passed { "PASS" } else { "FAIL" },
                    ch.name,
                    ch.detail
                );
                ok &= ch.passed;
            }
            return Ok(ok);
        }
        Command::Calibrate(a) => {
            let link = aqkd::harness::Link {
                detector: aqkd::DetectorSpec::new(a.eta_d, a.p_dark_max)?,
                ..Default::default()
            };
            let cal = calibrate_dark_count(
                &link,
                a.target,
                (a.p_dark_min, a.p_dark_max),
                a.iterations.max(1),
                aqkd::harness::PulseBudget::default(),
                a.seed,
                a.workers,
            )?;
            for s in &cal.steps {
                println!("p_dark = {:e}  reach = {:.2} km", s.dark_count, s.range_km);
            }
            println!(
                "best: eta_d = {} p_dark = {:e} reach = {:.2} km",
                cal.detector.efficiency, cal.detector.dark_count, cal.range_km
            );
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
