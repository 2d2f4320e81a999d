use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use expphi2::gff::StreamNoise;
use expphi2::gmc::{replicate_gff, WickBuilder};
use expphi2::green::{gn1_band, kernel_k, GreenTable};
use expphi2::harness::acceptance::{plan, verify_all};
use expphi2::harness::config::RunConfig;
use expphi2::harness::ensemble::{run_ensemble, validate_for, Task};
use expphi2::harness::pool::with_workers;
use expphi2::harness::report::{EnsembleReport, Table};
use expphi2::rng::{Purpose, RngStream};
use expphi2::snapshot::Snapshot;
use expphi2::solver::{solve, SolveOptions};
use expphi2::spectral::{from_spectral, TorusField};

#[derive(Parser, Debug)]
#[command(
    name = "expphi2",
    version,
    about = "exp(Phi)_2 spectral simulator and verification harness"
)]
struct Cli {
    /// Run configuration (flat TOML). Defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Validate the configuration and print the planned work without computing.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw GFF samples and write them as snapshots.
    SampleGff {
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Build Wick exponentials exp_N(alpha phi) of GFF samples at level `n`.
    Wick {
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Tabulate the kernel K and the regularized covariance G_{N,N}.
    Green,
    /// Integrate the regularized equation from a GFF draw or a snapshot.
    Solve {
        /// Initial field snapshot; a GFF draw when absent.
        #[arg(long)]
        initial: Option<PathBuf>,
    },
    /// Run one ensemble task, or every task listed under `reports`.
    Ensemble {
        #[arg(long)]
        task: Option<String>,
    },
    /// Run the acceptance suite; exit status 1 if any criterion fails.
    Verify,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.display().to_string();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_manifest(
    out: &Path,
    cfg: &RunConfig,
    command: &str,
    files: &[String],
    extra: serde_json::Value,
) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let m = json!({
        "schema_version": 1,
        "command": command,
        "config": cfg,
        "files": files,
        "summary": extra,
    });
    std::fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&m)?)?;
    std::fs::write(out.join("config.toml"), cfg.to_toml_string())?;
    Ok(())
}

fn write_report(out: &Path, report: &EnsembleReport, stem: &str) -> Result<()> {
    report.write_json(&out.join(format!("{stem}.json")))?;
    let mut est = Table::new(&["name", "estimate", "ci_low", "ci_high", "n"]);
    for e in &report.body.estimators {
        est.push(vec![
            e.name.clone(),
            e.estimate.to_string(),
            e.ci[0].to_string(),
            e.ci[1].to_string(),
            e.n.to_string(),
        ]);
    }
    est.write(&out.join("tables").join(format!("{stem}_estimators.csv")))?;
    let mut ver = Table::new(&[
        "name",
        "estimate",
        "ci_low",
        "ci_high",
        "n",
        "tolerance",
        "rule",
        "passed",
    ]);
    for v in &report.body.verdicts {
        ver.push(vec![
            v.name.clone(),
            v.estimate.to_string(),
            v.ci[0].to_string(),
            v.ci[1].to_string(),
            v.n.to_string(),
            v.tolerance.to_string(),
            v.rule.clone(),
            v.passed.to_string(),
        ]);
    }
    ver.write(&out.join("tables").join(format!("{stem}_verdicts.csv")))?;
    Ok(())
}

fn sample_gff(cfg: &RunConfig, out: &Path, count: usize) -> Result<()> {
    let grid = cfg.grid()?;
    let mut files = Vec::new();
    for i in 0..count {
        let name = format!("gff_{i:05}.snap");
        Snapshot::Spectral(replicate_gff(grid, cfg.seed, i)).save(&out.join(&name))?;
        files.push(name);
    }
    write_manifest(out, cfg, "sample-gff", &files, json!({ "count": count }))
}

fn wick(cfg: &RunConfig, out: &Path, count: usize) -> Result<()> {
    let grid = cfg.grid()?;
    let builder = WickBuilder::new(&cfg.spec(), cfg.n, grid, cfg.charge()?)?;
    let mut table = Table::new(&["replicate", "total_mass", "max_density", "clamp_events"]);
    let mut files = Vec::new();
    for i in 0..count {
        let w = builder.build(&replicate_gff(grid, cfg.seed, i));
        let name = format!("wick_{i:05}.snap");
        table.push(vec![
            i.to_string(),
            w.total_mass.to_string(),
            w.density.max().to_string(),
            w.clamp_events.to_string(),
        ]);
        Snapshot::Physical(w.density).save(&out.join(&name))?;
        files.push(name);
    }
    table.write(&out.join("tables/wick.csv"))?;
    files.push("tables/wick.csv".into());
    write_manifest(
        out,
        cfg,
        "wick",
        &files,
        json!({ "renorm_constant": builder.renorm().value }),
    )
}

fn green(cfg: &RunConfig, out: &Path) -> Result<()> {
    let mut kt = Table::new(&["r", "K", "K_plus_log_r_over_2pi"]);
    for i in 0..=80 {
        let r = 1e-4 * (20.0f64 / 1e-4).powf(i as f64 / 80.0);
        let k = kernel_k(r)?;
        kt.push(vec![
            r.to_string(),
            k.to_string(),
            (k + r.ln() / (2.0 * std::f64::consts::PI)).to_string(),
        ]);
    }
    kt.write(&out.join("tables/kernel.csv"))?;
    let disps: Vec<[f64; 2]> = (0..=40)
        .map(|i| {
            [
                1e-3 * (std::f64::consts::PI / 1e-3).powf(i as f64 / 40.0),
                0.0,
            ]
        })
        .collect();
    let spec = cfg.spec();
    let table = GreenTable::build(&spec, cfg.n, cfg.n, &disps)?;
    let mut gt = Table::new(&["dx", "dy", "G_NN"]);
    for (d, v) in &table.samples {
        gt.push(vec![d[0].to_string(), d[1].to_string(), v.to_string()]);
    }
    gt.write(&out.join("tables/green.csv"))?;
    let band = gn1_band(&spec, cfg.n, &disps)?;
    write_manifest(
        out,
        cfg,
        "green",
        &["tables/kernel.csv".into(), "tables/green.csv".into()],
        json!({ "gn1_band": band }),
    )
}

fn solve_cmd(cfg: &RunConfig, out: &Path, initial: Option<&Path>) -> Result<()> {
    let sc = cfg.solver_config()?;
    let grid = sc.grid;
    let phi0: TorusField = match initial {
        Some(p) => match Snapshot::load(p)? {
            Snapshot::Physical(f) => f,
            Snapshot::Spectral(c) => from_spectral(&c)?,
        },
        None => from_spectral(&replicate_gff(grid, cfg.seed, 0))?,
    };
    if phi0.grid() != grid {
        bail!(
            "initial field is on a {} grid, config asks for {}",
            phi0.grid().size(),
            grid.size()
        );
    }
    let every = if cfg.snapshot_every > 0.0 {
        ((cfg.snapshot_every / cfg.dt).round() as usize).max(1)
    } else {
        usize::MAX
    };
    let options = SolveOptions {
        record_every: every,
        ..SolveOptions::default()
    };
    let rng = RngStream::for_purpose(cfg.seed, Purpose::Noise, 0);
    let traj = solve(&sc, &phi0, &mut StreamNoise::new(rng), &options)?;
    let mut files = Vec::new();
    for (t, phi) in traj.times.iter().zip(&traj.phi_states) {
        let name = format!("phi_t{t:.6}.snap");
        Snapshot::Physical(phi.clone()).save(&out.join(&name))?;
        files.push(name);
    }
    let mut diag = Table::new(&[
        "time",
        "max_alpha_y",
        "nonlinear_l1",
        "max_exponent",
        "clamp_events",
    ]);
    for d in &traj.diagnostics {
        diag.push(vec![
            d.time.to_string(),
            d.max_alpha_y.to_string(),
            d.nonlinear_l1.to_string(),
            d.max_exponent.to_string(),
            d.clamp_events.to_string(),
        ]);
    }
    diag.write(&out.join("tables/diagnostics.csv"))?;
    files.push("tables/diagnostics.csv".into());
    write_manifest(
        out,
        cfg,
        "solve",
        &files,
        json!({ "steps": sc.steps(), "max_alpha_y": traj.max_alpha_y() }),
    )
}

fn ensemble(cfg: &RunConfig, out: &Path, task: Option<&str>) -> Result<bool> {
    let tasks: Vec<Task> = match task {
        Some(t) => vec![t.parse()?],
        None if !cfg.reports.is_empty() => cfg
            .reports
            .iter()
            .map(|t| t.parse())
            .collect::<expphi2::Result<_>>()?,
        None => bail!("no task: pass --task or list tasks under `reports`"),
    };
    let mut ok = true;
    for t in tasks {
        let r = run_ensemble(cfg, t)?;
        for v in &r.body.verdicts {
            println!(
                "{} {}: {:.6e} (tolerance {:.3e})",
                if v.passed { "PASS" } else { "FAIL" },
                v.name,
                v.estimate,
                v.tolerance
            );
        }
        ok &= r.passed();
        write_report(out, &r, if task.is_some() { "report" } else { t.name() })?;
    }
    write_manifest(out, cfg, "ensemble", &[], json!({ "passed": ok }))?;
    Ok(ok)
}

fn verify(cfg: &RunConfig, out: &Path) -> Result<bool> {
    let (report, outcomes) = verify_all(cfg, |o| println!("{}", o.summary_line()))?;
    write_report(out, &report, "report")?;
    let mut t = Table::new(&["id", "criterion", "passed", "seconds"]);
    for o in &outcomes {
        t.push(vec![
            o.id.to_string(),
            o.name.clone(),
            o.passed().to_string(),
            format!("{:.2}", o.seconds),
        ]);
    }
    t.write(&out.join("tables/criteria.csv"))?;
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.passed())
        .map(|o| o.name.as_str())
        .collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {}", failed.join(", "));
    }
    Ok(failed.is_empty())
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = load_config(cli)?;
    let out = PathBuf::from(&cfg.output_dir);
    if cli.dry_run {
        println!(
            "config valid: grid {} alpha {} n {} seed {}",
            cfg.grid, cfg.alpha, cfg.n, cfg.seed
        );
        match &cli.command {
            Command::Verify => plan().iter().for_each(|l| println!("{l}")),
            Command::Ensemble { task } => {
                let names = task
                    .clone()
                    .map(|t| vec![t])
                    .unwrap_or_else(|| cfg.reports.clone());
                for n in names {
                    let t: Task = n.parse()?;
                    validate_for(&cfg, t)?;
                    println!("task {t}: {} replicates", cfg.ensemble);
                }
            }
            other => println!("{other:?} -> {}", out.display()),
        }
        return Ok(true);
    }
    with_workers(cfg.workers, || -> Result<bool> {
        match &cli.command {
            Command::SampleGff { count } => sample_gff(&cfg, &out, *count).map(|_| true),
            Command::Wick { count } => wick(&cfg, &out, *count).map(|_| true),
            Command::Green => green(&cfg, &out).map(|_| true),
            Command::Solve { initial } => solve_cmd(&cfg, &out, initial.as_deref()).map(|_| true),
            Command::Ensemble { task } => ensemble(&cfg, &out, task.as_deref()),
            Command::Verify => verify(&cfg, &out),
        }
    })?
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
