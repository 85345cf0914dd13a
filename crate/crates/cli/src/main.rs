use std::path::PathBuf;
use std::process::ExitCode;

use chrono::Utc;
use clap::{Args, Parser, Subcommand};
use compo_approx::metrics::{vc_bound, VcKind};
use compo_approx_lab::artifacts::{output_root, write_artifacts, Artifacts, Manifest};
use compo_approx_lab::boolean::{run_boolean_demo, BooleanConfig};
use compo_approx_lab::config::{load, ExperimentConfig, Layer};
use compo_approx_lab::cos4::{run_cos4, Cos4Config};
use compo_approx_lab::gauss_fit::{run_gauss_fit, GaussFitConfig};
use compo_approx_lab::qpoly::{run_q_study, QConfig};
use compo_approx_lab::scale::{run_scaling_study, ScaleConfig};
use compo_approx_lab::verify::{run_verify, VerifyConfig};
use compo_approx_lab::{LabError, LabResult};

#[derive(Parser)]
#[command(name = "compo-approx-lab", version, about = "Shallow versus hierarchical approximation experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override one setting; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Output directory root [env: COMPO_APPROX_OUT, default: compo-out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// `reduced` (default) or `full`.
    #[arg(long, global = true)]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Depth comparison on cos(4x).
    Cos4 {
        /// Comma-separated DEPTHxWIDTH list, e.g. 1x24,2x12.
        #[arg(long)]
        archs: Option<String>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
        /// Write per-restart JSON-lines traces.
        #[arg(long)]
        traces: bool,
    },
    /// Error versus complexity for shallow and deep families.
    Scale {
        #[arg(long)]
        target: Option<String>,
        /// gaussian, sgd or synthetic.
        #[arg(long)]
        mode: Option<String>,
        /// Comma-separated complexity values.
        #[arg(long)]
        complexities: Option<String>,
    },
    /// Staged construction of the polynomial Q.
    Qpoly,
    /// Fourier expansion and truncation errors of a Boolean function.
    Boolean {
        /// parity, majority, and, random or random(seed=K).
        #[arg(long)]
        function: Option<String>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// VC-dimension bounds for shallow and tree networks.
    Vc {
        /// shallow, tree or both.
        #[arg(long, default_value = "both")]
        kind: String,
        #[arg(long)]
        d: u32,
        #[arg(long)]
        n: u32,
    },
    /// One Gaussian-network fit with grid centers.
    GaussFit {
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        m: Option<usize>,
    },
    /// Run the acceptance suite.
    Verify {
        /// Comma-separated criterion numbers; all by default.
        #[arg(long)]
        only: Option<String>,
    },
}

fn layers(common: &Common, extra: &[(&str, Option<String>)]) -> LabResult<(Layer, Layer)> {
    let file = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| LabError::Io {
                path: path.display().to_string(),
                source,
            })?;
            Layer::parse(&text)?
        }
        None => Layer::default(),
    };
    let mut flags = Layer::default();
    if let Some(p) = &common.preset {
        flags.push("preset", p);
    }
    if let Some(s) = common.seed {
        flags.push("seed", s);
    }
    for (k, v) in extra {
        if let Some(v) = v {
            flags.push(k, v);
        }
    }
    flags.pairs.extend(Layer::from_overrides(&common.set)?.pairs);
    Ok((file, flags))
}

fn resolve<C: ExperimentConfig>(common: &Common, extra: &[(&str, Option<String>)]) -> LabResult<C> {
    let (file, flags) = layers(common, extra)?;
    load::<C>(&[&file, &flags])
}

fn finish<C: ExperimentConfig>(
    common: &Common,
    cfg: &C,
    started: chrono::DateTime<Utc>,
    artifacts: &Artifacts,
) -> LabResult<()> {
    let dir = output_root(common.out.clone()).join(C::NAME);
    let config = cfg.canonical();
    let manifest = Manifest {
        experiment: C::NAME,
        config: &config,
        started,
        finished: Utc::now(),
    };
    let path = write_artifacts(&dir, artifacts, &manifest)?;
    println!("wrote {} files, manifest {}", artifacts.files.len(), path.display());
    Ok(())
}

fn opt<T: ToString>(v: Option<T>) -> Option<String> {
    v.map(|v| v.to_string())
}

fn run(cli: Cli) -> LabResult<()> {
    let common = &cli.common;
    if let Some(j) = common.jobs {
        if j == 0 {
            return Err(LabError::config("--jobs must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| LabError::config(e.to_string()))?;
    }
    let started = Utc::now();
    match cli.command {
        Command::Cos4 {
            archs,
            epochs,
            restarts,
            traces,
        } => {
            let cfg: Cos4Config = resolve(
                common,
                &[
                    ("archs", archs),
                    ("epochs", opt(epochs)),
                    ("restarts", opt(restarts)),
                    ("traces", traces.then(|| "true".to_string())),
                ],
            )?;
            let out = run_cos4(&cfg)?;
            println!("depth,width,units,param_count,best_test_rmse,failed");
            for r in &out.rows {
                let rmse = r.best_test_rmse.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
                println!(
                    "{},{},{},{},{rmse},{}",
                    r.arch.depth,
                    r.arch.width,
                    r.units,
                    r.param_count,
                    r.failed()
                );
            }
            finish(common, &cfg, started, &out.artifacts)
        }
        Command::Scale {
            target,
            mode,
            complexities,
        } => {
            let cfg: ScaleConfig = resolve(
                common,
                &[("target", target), ("mode", mode), ("complexities", complexities)],
            )?;
            let out = run_scaling_study(&cfg)?;
            for (family, run) in &out.runs {
                println!(
                    "{family}: fitted slope {:.3}, predicted {:.3}, {} points",
                    run.fit.slope,
                    run.prediction.exponent(),
                    run.points.len()
                );
            }
            for (family, reason) in &out.omitted {
                println!("{family}: omitted ({reason})");
            }
            finish(common, &cfg, started, &out.artifacts)
        }
        Command::Qpoly => {
            let cfg: QConfig = resolve(common, &[])?;
            let out = run_q_study(&cfg)?;
            println!(
                "{} units, {} layers, shallow reference {} units",
                out.total_units, out.layers, out.shallow_reference_units
            );
            for s in &out.stages {
                let fmt = |v: Option<f64>| v.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into());
                println!(
                    "stage {:>2}: {} units, stage error {}, cumulative error {} [{}]",
                    s.stage,
                    s.units,
                    fmt(s.stage_error),
                    fmt(s.cumulative_error),
                    s.status
                );
            }
            finish(common, &cfg, started, &out.artifacts)
        }
        Command::Boolean { function, n } => {
            let cfg: BooleanConfig = resolve(common, &[("function", function), ("n", opt(n))])?;
            let out = run_boolean_demo(&cfg)?;
            println!("{} nonzero coefficients of {}", out.table.nonzero(), 1usize << cfg.n);
            for (k, e) in &out.low_order {
                println!("low_order k={k}: {e:e}");
            }
            for (t, e) in &out.sparse {
                println!("sparse t={t}: {e:e}");
            }
            finish(common, &cfg, started, &out.artifacts)
        }
        Command::Vc { kind, d, n } => {
            let kinds: &[(&str, VcKind)] = match kind.as_str() {
                "shallow" => &[("shallow", VcKind::Shallow)],
                "tree" => &[("tree", VcKind::Tree)],
                "both" => &[("shallow", VcKind::Shallow), ("tree", VcKind::Tree)],
                other => return Err(LabError::config(format!("--kind must be shallow, tree or both, got {other:?}"))),
            };
            println!("kind,d,n,vc_bound");
            for (label, k) in kinds {
                println!("{label},{d},{n},{}", vc_bound(*k, d, n)?);
            }
            Ok(())
        }
        Command::GaussFit { target, m } => {
            let cfg: GaussFitConfig = resolve(common, &[("target", target), ("m", opt(m))])?;
            let out = run_gauss_fit(&cfg)?;
            println!("{} centers, error {:e}", out.centers, out.sup_error);
            finish(common, &cfg, started, &out.artifacts)
        }
        Command::Verify { only } => {
            let cfg: VerifyConfig = resolve(common, &[("only", only)])?;
            let out = run_verify(&cfg, |r| println!("{}", r.line()))?;
            finish(common, &cfg, started, &out.artifacts)?;
            let failed = out.failed();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(LabError::Acceptance(format!("criteria {failed:?} failed")))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
