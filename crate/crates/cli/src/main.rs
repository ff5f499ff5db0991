use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use equilab::discrepancy::{discrepancy_of_system, DiscOptions};
use equilab::dyadic::{boundary_denominators, build_cover, cover_diagnostics, draw_anchor, DepthPolicy, MAX_LEVEL};
use equilab::expsum::{
    admissible_l, cube_table, exp_sum_cube, exp_sum_region, max_exp_sum, region_table, write_scan_csv,
};
use equilab::field_poly::{PolySystem, PrimeModulus, SystemKind};
use equilab::harness::{
    check_baselines, record_or_check, run, write_outputs, Baseline, ExperimentConfig, ExperimentResult, Tolerance,
};
use equilab::region::{Region, RegionDescriptor};
use equilab::variety::{count_in_region, lang_weil_residual, solve_system};
use serde_json::json;

const EXIT_VALIDATION: u8 = 1;
const EXIT_MISMATCH: u8 = 2;

#[derive(Parser)]
#[command(name = "equilab", version, about = "Equidistribution experiments for polynomial values mod p")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment from a TOML config.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Baseline file (overrides the config).
        #[arg(long)]
        baseline: Option<PathBuf>,
    },
    /// Compare a result.json against a baseline.
    Check {
        result: PathBuf,
        baseline: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        sum_tol: f64,
        #[arg(long, default_value_t = 1e-6)]
        disc_tol: f64,
    },
    /// Solve a zero system and report counts.
    Solve {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long)]
        region: Option<String>,
        /// Number of absolutely irreducible top-dimensional components.
        #[arg(long, default_value_t = 1)]
        nu: u32,
        /// Write the solutions as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate lattice points `x/p` of a region.
    Points {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        region: Option<String>,
        /// Write the points as CSV instead of counting them.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the dyadic cover of a region.
    Cover {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        m: usize,
        /// Number of polynomials, for the thm3 depth.
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long)]
        region: Option<String>,
        /// thm1, thm2, thm3 or an explicit depth.
        #[arg(long, default_value = "thm2")]
        depth: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        jsonl: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Exponential sums: one sum for `--a`, else the maximum `S*`.
    Expsum {
        #[command(flatten)]
        sys: SystemArgs,
        /// Comma-separated coefficients.
        #[arg(long, allow_hyphen_values = true)]
        a: Option<String>,
        /// Cube corner (comma-separated); needs `--w`.
        #[arg(long)]
        u: Option<String>,
        #[arg(long)]
        w: Option<u64>,
        #[arg(long)]
        region: Option<String>,
        #[arg(long = "L")]
        l: Option<u64>,
        /// Write every scanned `|S(a)|` as CSV.
        #[arg(long)]
        scan_csv: Option<PathBuf>,
    },
    /// Discrepancy of the fractional-part points over a region.
    Disc {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long)]
        region: Option<String>,
        #[arg(long = "L")]
        l: Option<u64>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        always_sample: bool,
    },
}

#[derive(Args)]
struct SystemArgs {
    /// Polynomials separated by `;`.
    #[arg(long)]
    system: String,
    #[arg(long)]
    p: u64,
    #[arg(long)]
    m: Option<usize>,
}

impl SystemArgs {
    fn parse(&self, kind: SystemKind) -> Result<(PolySystem, PrimeModulus)> {
        let sys = PolySystem::parse(&self.system, kind, self.m)?;
        Ok((sys, PrimeModulus::new(self.p)?))
    }
}

/// Region from a JSON descriptor such as
/// `{"kind":"ball","center":["0.5","0.5"],"radius":"0.3"}`.
fn region_arg(text: Option<&str>, m: usize) -> Result<Region> {
    match text {
        None => Ok(Region::full(m)),
        Some(t) => {
            let d: RegionDescriptor = serde_json::from_str(t).context("region descriptor")?;
            Ok(Region::from_descriptor(&d, m)?)
        }
    }
}

fn depth_arg(s: &str) -> Result<DepthPolicy> {
    Ok(match s {
        "thm1" => DepthPolicy::Thm1,
        "thm2" => DepthPolicy::Thm2,
        "thm3" => DepthPolicy::Thm3,
        n => DepthPolicy::Explicit(n.parse().with_context(|| format!("bad depth `{n}`"))?),
    })
}

fn list_arg<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    s.split(',').map(|v| Ok(v.trim().parse::<T>()?)).collect()
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn cmd_run(config: &Path, out: Option<PathBuf>, baseline: Option<PathBuf>) -> Result<ExitCode> {
    let cfg = ExperimentConfig::load(config)?;
    let plan = match cfg.validate() {
        Ok(p) => p,
        Err(errs) => {
            eprintln!("{}: {} validation error(s)", config.display(), errs.len());
            for e in errs {
                eprintln!("  - {e}");
            }
            return Ok(ExitCode::from(EXIT_VALIDATION));
        }
    };
    for w in &plan.warnings {
        eprintln!("warning: {w}");
    }
    let base = config.parent().unwrap_or(Path::new("."));
    let outcome = run(&plan);
    let failed = outcome.result.cells.iter().filter(|c| c.error.is_some()).count();
    eprintln!(
        "{} cells in {:.2}s{}",
        outcome.result.cells.len(),
        outcome.wall_clock_s,
        if failed > 0 { format!(", {failed} with errors") } else { String::new() }
    );
    match out.or_else(|| cfg.output.dir.as_ref().map(|d| base.join(d))) {
        Some(dir) => {
            write_outputs(&outcome, &dir)?;
            eprintln!("wrote {}", dir.display());
        }
        None => print!("{}", outcome.result.to_json()),
    }
    if let Some(path) = baseline.or_else(|| cfg.output.baseline.as_ref().map(|b| base.join(b))) {
        let report = record_or_check(&outcome.result, &path, Tolerance::default())?;
        eprint!("{}", report.summary());
        if !report.passed() {
            return Ok(ExitCode::from(EXIT_MISMATCH));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(result: &Path, baseline: &Path, sum_rel: f64, disc_rel: f64) -> Result<ExitCode> {
    let result = ExperimentResult::load(result)?;
    let base = Baseline::load(baseline)?;
    let report = check_baselines(&result, &base, Tolerance { sum_rel, disc_rel });
    if !report.config_hash_matches {
        eprintln!("note: config hash differs from the baseline");
    }
    print!("{}", report.summary());
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_MISMATCH)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Run { config, out, baseline } => cmd_run(&config, out, baseline),
        Cmd::Check {
            result,
            baseline,
            sum_tol,
            disc_tol,
        } => cmd_check(&result, &baseline, sum_tol, disc_tol),
        other => one_shot(other).map(|()| ExitCode::SUCCESS),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}

fn one_shot(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Solve { sys, region, nu, out } => {
            let (system, p) = sys.parse(SystemKind::Zero)?;
            let sol = solve_system(&system, p)?.with_nu(nu)?;
            let region = region_arg(region.as_deref(), system.m())?;
            let t = count_in_region(&sol, &region)?;
            print_json(&json!({
                "p": p.get(),
                "X_p": sol.len(),
                "lang_weil_residual": lang_weil_residual(&sol).ok(),
                "region": region.label(),
                "T": t,
            }))?;
            if let Some(path) = out {
                let mut w = create(&path)?;
                for x in sol.iter() {
                    let row: Vec<String> = x.iter().map(u32::to_string).collect();
                    writeln!(w, "{}", row.join(","))?;
                }
            }
        }
        Cmd::Points { p, m, region, out } => {
            let p = PrimeModulus::new(p)?;
            let region = region_arg(region.as_deref(), m)?;
            match out {
                Some(path) => {
                    let mut w = create(&path)?;
                    let mut res = Ok(());
                    region.visit_lattice_points(p.get(), |x| {
                        if res.is_ok() {
                            let row: Vec<String> = x.iter().map(u64::to_string).collect();
                            res = writeln!(w, "{}", row.join(","));
                        }
                    })?;
                    res?;
                }
                None => print_json(&json!({
                    "p": p.get(),
                    "region": region.label(),
                    "count": region.count_lattice_points(p.get())?,
                }))?,
            }
        }
        Cmd::Cover {
            p,
            m,
            n,
            region,
            depth,
            seed,
            jsonl,
            csv,
        } => {
            let p = PrimeModulus::new(p)?;
            let region = region_arg(region.as_deref(), m)?;
            let depth = depth_arg(&depth)?.depth(p.get(), n);
            let anchor = Arc::new(draw_anchor(m, seed, &boundary_denominators(p.get(), MAX_LEVEL)));
            let cover = build_cover(&region, depth, &anchor)?;
            let diag = cover_diagnostics(&cover, &region);
            if let Some(path) = jsonl {
                cover.write_jsonl(create(&path)?)?;
            }
            if let Some(path) = csv {
                diag.write_csv(create(&path)?)?;
            }
            print_json(&diag)?;
        }
        Cmd::Expsum {
            sys,
            a,
            u,
            w,
            region,
            l,
            scan_csv,
        } => {
            let (system, p) = sys.parse(SystemKind::Value)?;
            let cube = match (u, w) {
                (Some(u), Some(w)) => Some((list_arg::<u64>(&u)?, w)),
                (None, None) => None,
                _ => bail!("--u and --w go together"),
            };
            if let Some(a) = a {
                let a = list_arg::<i64>(&a)?;
                let r = match &cube {
                    Some((u, w)) => exp_sum_cube(&system, &a, p, u, *w)?,
                    None => exp_sum_region(&system, &a, p, &region_arg(region.as_deref(), system.m())?)?,
                };
                print_json(&json!({"a": a, "re": r.re, "im": r.im, "abs": r.abs(), "points": r.points}))?;
            } else {
                let table = match &cube {
                    Some((u, w)) => cube_table(&system, p, u, *w)?,
                    None => region_table(&system, p, &region_arg(region.as_deref(), system.m())?)?,
                };
                let l = admissible_l(system.n(), l.unwrap_or((p.get() - 1) / 2), p.get());
                let max = max_exp_sum(&table, l)?;
                if let Some(path) = scan_csv {
                    write_scan_csv(&table, l, 1.0, create(&path)?)?;
                }
                print_json(&max)?;
            }
        }
        Cmd::Disc {
            sys,
            region,
            l,
            trials,
            seed,
            always_sample,
        } => {
            let (system, p) = sys.parse(SystemKind::Value)?;
            let region = region_arg(region.as_deref(), system.m())?;
            let opts = DiscOptions {
                l,
                always_sample,
                trials,
                seed,
            };
            print_json(&discrepancy_of_system(&system, p, &region, &opts)?)?;
        }
        Cmd::Run { .. } | Cmd::Check { .. } => unreachable!(),
    }
    Ok(())
}
