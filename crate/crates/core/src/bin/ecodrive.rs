use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ecodrive::dynamics::FrozenDynamics;
use ecodrive::harness::{self, files, report, sig9, Scenario};
use ecodrive::optimizer::DEFAULT_DELTA;
use ecodrive::robustness::{mean_speed, DEFAULT_TERMS};
use ecodrive::{
    check_assumptions, optimal_band, perturbation_series, run_race, Error, GridSpec, Result, SpeedProfile,
};

#[derive(Parser)]
#[command(
    name = "ecodrive",
    version,
    about = "Energy-optimal on/off speed bands and race simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Slice {
    /// Vehicle parameters (JSON).
    #[arg(long)]
    params: PathBuf,
    /// Track angle (rad).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    slope: f64,
    /// Along-track wind speed (m/s), negative for a headwind.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    wind: f64,
}

impl Slice {
    fn freeze(&self) -> Result<FrozenDynamics> {
        FrozenDynamics::new(files::read_vehicle(&self.params)?, self.slope, self.wind)
    }
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario directory.
    #[arg(long, conflicts_with = "fixture", required_unless_present = "fixture")]
    scenario: Option<PathBuf>,
    /// Bundled fixture instead of a scenario directory.
    #[arg(long)]
    fixture: Option<String>,
    /// Override a parameter after loading, e.g. `--set alpha=20`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (default: `$ECODRIVE_OUT`, else `<scenario>/out`).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<Scenario> {
        let mut s = match (&self.scenario, &self.fixture) {
            (Some(dir), _) => harness::load_scenario(dir, &self.overrides)?,
            (None, Some(name)) => {
                let mut s = harness::fixture(name)?;
                for o in &self.overrides {
                    s.set(o)?;
                }
                s.validate()?;
                s
            }
            (None, None) => unreachable!("clap requires one of them"),
        };
        if let Some(out) = &self.out {
            s.out_dir = out.clone();
        }
        Ok(s)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Cheapest oscillation band for a target average speed on a frozen slice.
    Optimize {
        #[command(flatten)]
        slice: Slice,
        /// Target average speed (m/s).
        #[arg(long)]
        target: f64,
        /// Safety speed (m/s).
        #[arg(long, default_value_t = f64::INFINITY)]
        vsafe: f64,
        /// Width of a band clamped under the safety speed (m/s).
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
        /// Refine around the coarse optimum with a 0.01 m/s grid.
        #[arg(long)]
        fine: bool,
    },
    /// Simulate a full race and write telemetry, summary and speed trace.
    Simulate(ScenarioArgs),
    /// Check the structural assumptions on a frozen slice.
    CheckAssumptions(Slice),
    /// Perturbation series of the mean speed for tabulated `g` and `dg`.
    Robustness {
        #[arg(long)]
        g: PathBuf,
        #[arg(long)]
        dg: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TERMS)]
        terms: usize,
    },
    /// Run a scenario for several values of one parameter, concurrently.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// `key=a,b,c`.
        #[arg(long)]
        vary: String,
    },
    /// Print a written summary and check it against its telemetry.
    Report {
        #[arg(long)]
        result: PathBuf,
    },
    /// Write a bundled fixture as a scenario directory.
    Fixture {
        /// flat16500, hill or gust.
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match command {
        Command::Optimize {
            slice,
            target,
            vsafe,
            delta,
            fine,
        } => {
            let frozen = slice.freeze()?;
            let grid = if fine {
                GridSpec::fine()
            } else {
                GridSpec::coarse()
            };
            let band = optimal_band(&frozen, target, vsafe, &grid, delta)?;
            writeln!(out, "kind {:?}", band.kind)?;
            for (k, v) in [
                ("va_mps", band.va),
                ("vb_mps", band.vb),
                ("dwell_s", band.dwell),
                ("rest_dwell_s", band.rest_dwell),
                ("period_s", band.period),
                ("distance_m", band.distance),
                ("energy_J", band.energy),
                ("avg_cost_W", band.avg_cost),
                ("avg_speed_mps", band.average_speed()),
            ] {
                writeln!(out, "{k} {}", sig9(v))?;
            }
        }
        Command::Simulate(args) => {
            let s = args.load()?;
            let result = run_race(&s.course, &s.vehicle, &s.controller)?;
            report::emit_report(&result, &s, &s.out_dir)?;
            print_summary(&mut out, &report::SummaryFile::from(&result.summary))?;
            writeln!(out, "out {}", s.out_dir.display())?;
        }
        Command::CheckAssumptions(slice) => {
            let r = check_assumptions(&slice.freeze()?);
            for (name, item) in r.items() {
                writeln!(
                    out,
                    "{name} {:?} {} {}",
                    item.verdict,
                    sig9(item.witness),
                    item.note
                )?;
            }
            writeln!(out, "switch_cost_lhs {}", sig9(r.switch_cost_lhs))?;
            writeln!(out, "switch_cost_rhs {}", sig9(r.switch_cost_rhs))?;
            writeln!(out, "curvature {:?}", r.curvature)?;
            if !r.passed() {
                return Err(Error::Validation("assumption check failed".into()));
            }
        }
        Command::Robustness { g, dg, terms } => {
            let (gs, gv) = files::read_profile(&g)?;
            let (ds, dv) = files::read_profile(&dg)?;
            let g = SpeedProfile::from_table(gs, gv)?;
            let dg = SpeedProfile::from_table(ds, dv)?;
            let series = perturbation_series(&g, &dg, terms)?;
            let direct = mean_speed(&g.plus(&dg)?)? - mean_speed(&g)?;
            writeln!(out, "mean_speed_mps {}", sig9(mean_speed(&g)?))?;
            for (n, t) in series.terms.iter().enumerate() {
                writeln!(out, "term_{} {}", n + 1, sig9(*t))?;
            }
            writeln!(out, "delta_series_mps {}", sig9(series.delta))?;
            writeln!(out, "delta_direct_mps {}", sig9(direct))?;
            writeln!(out, "sup_ratio {}", sig9(series.sup_ratio))?;
            writeln!(out, "ratio_variance {}", sig9(series.ratio_variance))?;
        }
        Command::Sweep { scenario, vary } => sweep(&mut out, &scenario, &vary)?,
        Command::Report { result } => {
            let (summary, issues) = report::check_report(&result)?;
            print_summary(&mut out, &summary)?;
            if !issues.is_empty() {
                for i in &issues {
                    eprintln!("mismatch: {i}");
                }
                return Err(Error::Validation(format!(
                    "{} summary value(s) disagree with the telemetry",
                    issues.len()
                )));
            }
            writeln!(out, "telemetry consistent")?;
        }
        Command::Fixture { name, out: dir } => {
            harness::dump_fixture(&name, &dir)?;
            writeln!(out, "wrote {}", dir.display())?;
        }
    }
    Ok(())
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "none".into(), sig9)
}

fn print_summary(out: &mut impl Write, s: &report::SummaryFile) -> Result<()> {
    writeln!(out, "finish_time_s {}", opt(s.finish_time_s))?;
    writeln!(out, "total_energy_J {}", sig9(s.total_energy_j))?;
    writeln!(out, "switches {}", s.switches)?;
    writeln!(out, "min_switch_gap_s {}", opt(s.min_switch_gap_s))?;
    writeln!(out, "avg_speed_mps {}", sig9(s.avg_speed_mps))?;
    let flags: Vec<&str> = s.flags.iter().map(|f| f.as_str()).collect();
    writeln!(out, "flags {}", flags.join("|"))?;
    Ok(())
}

fn sweep(out: &mut impl Write, args: &ScenarioArgs, vary: &str) -> Result<()> {
    let (key, values) = vary
        .split_once('=')
        .ok_or_else(|| Error::InvalidParameter(format!("--vary `{vary}` is not of the form key=a,b,c")))?;
    let base = args.load()?;
    let scenarios: Vec<(String, Scenario)> = values
        .split(',')
        .map(|v| {
            let mut s = base.clone();
            s.set(&format!("{key}={v}"))?;
            s.validate()?;
            s.out_dir = base.out_dir.join(format!("{key}={v}"));
            Ok((v.to_owned(), s))
        })
        .collect::<Result<_>>()?;

    let results: Vec<Result<report::SummaryFile>> = std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|(_, s)| {
                scope.spawn(move || {
                    let r = run_race(&s.course, &s.vehicle, &s.controller)?;
                    report::emit_report(&r, s, &s.out_dir)?;
                    Ok(report::SummaryFile::from(&r.summary))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::Validation("sweep worker panicked".into())))
            })
            .collect()
    });

    let table = base.out_dir.join("sweep.csv");
    std::fs::create_dir_all(&base.out_dir)?;
    let mut rows = vec![format!(
        "{key},finish_time_s,total_energy_J,switches,min_switch_gap_s,avg_speed_mps,flags"
    )];
    for ((value, _), r) in scenarios.iter().zip(results) {
        let s = r?;
        let flags: Vec<&str> = s.flags.iter().map(|f| f.as_str()).collect();
        rows.push(format!(
            "{value},{},{},{},{},{},{}",
            opt(s.finish_time_s),
            sig9(s.total_energy_j),
            s.switches,
            opt(s.min_switch_gap_s),
            sig9(s.avg_speed_mps),
            flags.join("|")
        ));
    }
    write_lines(&table, &rows)?;
    for r in &rows {
        writeln!(out, "{r}")?;
    }
    Ok(())
}

fn write_lines(path: &Path, rows: &[String]) -> Result<()> {
    let mut text = rows.join("\n");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}
