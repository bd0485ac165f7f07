use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use kzb_cli::dump::{evaluate, parse_complex, Grid, Kernel};
use kzb_cli::suite::{run_suite, Suite, SuiteSpec};
use kzb_cli::tame_input::{format_symbol, FunctionSpec};
use kzb_core::tame::{tame_symbol, winding, MeromorphicFunction};
use kzb_core::{Complex64, CurveSpec};

#[derive(Parser)]
#[command(name = "kzb", version, about = "Checks and grid dumps for KZB connections on curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and write a JSON report.
    Verify {
        suite: Suite,
        /// Path to a curve spec (JSON), e.g. {"variant": "elliptic", "tau": [0, 1]}.
        #[arg(long)]
        curve: PathBuf,
        #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
        k: f64,
        /// Seed in hex.
        #[arg(long, value_parser = parse_seed, default_value = "0x5eed")]
        seed: u64,
        /// Report path; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Tolerance override, `name=value`; repeatable.
        #[arg(long = "tol", value_parser = parse_tol)]
        tolerances: Vec<(String, f64)>,
    },
    /// Evaluate a kernel on a grid of z with w fixed and write CSV.
    Dump {
        #[arg(long, value_enum)]
        kernel: Kernel,
        #[arg(long)]
        curve: PathBuf,
        /// nx,ny
        #[arg(long, default_value = "50,50")]
        grid: String,
        /// re0,re1,im0,im1
        #[arg(long, default_value = "0,1,0,1", allow_hyphen_values = true)]
        window: String,
        /// re,im
        #[arg(long, default_value = "0.37,0.41", allow_hyphen_values = true)]
        w: String,
        /// Twist for the twisted kernel, one re,im pair per cycle; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        lambda: Vec<String>,
        /// CSV path; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optional SVG heatmap of log|value|.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Tame symbol σ(f, g) of two functions given as JSON.
    Tame {
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
        /// Also print the A-cycle winding numbers (elliptic only).
        #[arg(long)]
        winding: bool,
    },
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let t = s.trim_start_matches("0x").trim_start_matches("0X");
    u64::from_str_radix(t, 16).map_err(|e| format!("seed must be hex: {e}"))
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or("expected name=value")?;
    Ok((name.to_string(), value.parse().map_err(|e| format!("{e}"))?))
}

fn read_curve(path: &Path) -> anyhow::Result<CurveSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not a curve spec", path.display()))
}

fn write_or_print(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Verify {
            suite,
            curve,
            k,
            seed,
            out,
            tolerances,
        } => {
            let mut spec = SuiteSpec::new(suite, read_curve(&curve)?);
            spec.k = k;
            spec.seed = seed;
            spec.tolerances = tolerances.into_iter().collect();
            let report = run_suite(&spec)?;
            for c in &report.checks {
                eprintln!(
                    "{} {:<36} {:>10.3e} (tol {:.0e}){}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.max_error,
                    c.tolerance,
                    c.error.as_deref().map(|e| format!(": {e}")).unwrap_or_default()
                );
            }
            write_or_print(out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
            Ok(report.all_pass())
        }
        Command::Dump {
            kernel,
            curve,
            grid,
            window,
            w,
            lambda,
            out,
            svg,
        } => {
            let model = read_curve(&curve)?.build()?;
            let grid = Grid::new(&grid, &window)?;
            let lambda = lambda
                .iter()
                .map(|s| parse_complex(s))
                .collect::<anyhow::Result<Vec<Complex64>>>()?;
            let values = evaluate(&model, kernel, grid, parse_complex(&w)?, &lambda)?;
            write_or_print(out.as_deref(), &values.csv())?;
            if let Some(p) = svg {
                std::fs::write(&p, values.svg()).with_context(|| format!("cannot write {}", p.display()))?;
            }
            Ok(true)
        }
        Command::Tame {
            f,
            g,
            winding: show_winding,
        } => {
            let f = FunctionSpec::parse(&f)?.build()?;
            let g = FunctionSpec::parse(&g)?.build()?;
            println!("{}", format_symbol(&tame_symbol(&f, &g)?));
            if show_winding {
                for (name, h) in [("f", &f), ("g", &g)] {
                    if let MeromorphicFunction::Elliptic(_) = h {
                        println!("n({name}) = {}", winding(h, 0)?);
                    }
                }
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
