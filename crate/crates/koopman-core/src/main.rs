use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ndarray::Array1;

use koopman_core::basin::{duffing_targets, label_by_integration, train};
use koopman_core::dynamics::{
    duffing_field, generate_duffing_training_set, integrate, DuffingParams, LorenzParams,
};
use koopman_core::edmd::{build_snapshot_pairs, fit, KoopmanModel, DEFAULT_SVD_RTOL};
use koopman_core::harness::{
    duffing_ordinal_summary, lorenz_ordinal_ok, run_duffing_benchmark, run_lorenz_benchmark,
    ExperimentConfig,
};
use koopman_core::observables::DictionarySpec;
use koopman_core::symmetry::{augment, ActionFile};
use koopman_core::{io, State};

#[derive(Parser)]
#[command(name = "koopman", about = "EDMD Koopman learning with discrete symmetries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a benchmark system and write the trajectory as CSV.
    Simulate {
        #[arg(long, value_parser = ["duffing", "lorenz"])]
        system: String,
        /// Initial condition, comma-separated (a,b for Duffing, a,b,c for Lorenz).
        #[arg(long)]
        x0: String,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit an EDMD model on trajectory CSV data.
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// Dictionary spec JSON, e.g. '{"kind":"rbf","n_centers":100}'.
        #[arg(long)]
        dict: String,
        #[arg(long, default_value_t = DEFAULT_SVD_RTOL)]
        svd_rtol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Roll out a fitted model from an initial state.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        x0: String,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label a grid over the Duffing state space with basin indices.
    Basin {
        #[arg(long, default_value_t = 101)]
        grid: usize,
        /// Domain bounds lo,hi applied to both axes.
        #[arg(long, default_value = "-2,2")]
        domain: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Append gamma-images of the input trajectories.
    Augment {
        #[arg(long)]
        data: PathBuf,
        /// JSON file with {"actions": [row-major matrices]}.
        #[arg(long)]
        action: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a benchmark experiment.
    Bench(BenchArgs),
}

#[derive(Args)]
struct BenchArgs {
    #[arg(value_parser = ["duffing", "lorenz"])]
    experiment: String,
    /// JSON experiment config; defaults apply for missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Exit with code 3 if the ordinal symmetry-benefit check fails.
    #[arg(long)]
    check: bool,
}

fn parse_state(text: &str) -> anyhow::Result<State> {
    let coords: Vec<f64> = text
        .split(',')
        .map(|f| f.trim().parse::<f64>())
        .collect::<Result<_, _>>()?;
    Ok(Array1::from(coords))
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Simulate {
            system,
            x0,
            dt,
            steps,
            out,
        } => {
            let x0 = parse_state(&x0)?;
            let traj = match system.as_str() {
                "duffing" => {
                    anyhow::ensure!(x0.len() == 2, "duffing expects a 2-dimensional x0");
                    integrate(duffing_field(DuffingParams::default()), &x0, dt, steps)?
                }
                _ => {
                    anyhow::ensure!(x0.len() == 3, "lorenz expects a 3-dimensional x0");
                    integrate(
                        koopman_core::dynamics::lorenz_field(LorenzParams::default()),
                        &x0,
                        dt,
                        steps,
                    )?
                }
            };
            io::write_trajectories(std::slice::from_ref(&traj), &out)?;
            println!("wrote {} states to {}", traj.len(), out.display());
        }
        Command::Fit {
            data,
            dict,
            svd_rtol,
            out,
        } => {
            let trajs = io::read_trajectories(&data)?;
            let spec: DictionarySpec = serde_json::from_str(&dict)?;
            let states: Vec<State> = trajs
                .iter()
                .flat_map(|t| t.states.iter().cloned())
                .collect();
            let dictionary = koopman_core::observables::Dictionary::from_spec(&spec, &states)?;
            let pairs = build_snapshot_pairs(&trajs)?;
            let model = fit(&pairs, &dictionary, svd_rtol)?;
            model.save(&out)?;
            println!(
                "fitted D={} on {} pairs, residual {:.3e}, wrote {}",
                model.lifted_dim(),
                model.n_pairs,
                model.fit_residual,
                out.display()
            );
        }
        Command::Predict {
            model,
            x0,
            steps,
            out,
        } => {
            let model = KoopmanModel::load(&model)?;
            let x0 = parse_state(&x0)?;
            let traj = model.predict_trajectory(&x0, steps)?;
            io::write_trajectories(std::slice::from_ref(&traj), &out)?;
            println!("wrote {} predicted states to {}", traj.len(), out.display());
        }
        Command::Basin { grid, domain, out } => {
            let bounds = parse_state(&domain)?;
            anyhow::ensure!(bounds.len() == 2 && bounds[0] < bounds[1], "bad domain");
            let p = DuffingParams::default();
            let f = duffing_field(p);
            let targets = duffing_targets();
            let trajs = generate_duffing_training_set(&p)?;
            let mut pts = Vec::new();
            let mut labs = Vec::new();
            for t in &trajs {
                let lab =
                    label_by_integration(t.states.last().unwrap(), f, &targets, 40.0, 0.05)?;
                for s in &t.states {
                    pts.push(s.clone());
                    labs.push(lab);
                }
            }
            let indicator = train(pts, labs, 5)?;
            let mut rows = Vec::with_capacity(grid * grid);
            for i in 0..grid {
                for j in 0..grid {
                    let frac = |k: usize| {
                        bounds[0] + (bounds[1] - bounds[0]) * k as f64 / (grid - 1).max(1) as f64
                    };
                    let (x1, x2) = (frac(i), frac(j));
                    let label = indicator.classify(&ndarray::array![x1, x2]).0;
                    rows.push((x1, x2, label));
                }
            }
            std::fs::write(&out, io::basin_grid_to_csv(&rows))?;
            println!("wrote {} grid labels to {}", rows.len(), out.display());
        }
        Command::Augment { data, action, out } => {
            let trajs = io::read_trajectories(&data)?;
            let actions = ActionFile::parse(&std::fs::read_to_string(&action)?)?;
            let mut result = trajs.clone();
            for gamma in actions.iter().filter(|a| !a.is_identity()) {
                let images = augment(&trajs, gamma);
                result.extend(images.into_iter().skip(trajs.len()));
            }
            io::write_trajectories(&result, &out)?;
            println!(
                "wrote {} trajectories ({} states) to {}",
                result.len(),
                result.iter().map(|t| t.len()).sum::<usize>(),
                out.display()
            );
        }
        Command::Bench(args) => return run_bench(args),
    }
    Ok(ExitCode::SUCCESS)
}

fn load_config(args: &BenchArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg: ExperimentConfig = match &args.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_bench(args: BenchArgs) -> anyhow::Result<ExitCode> {
    let cfg = match load_config(&args) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("config error: {err}");
            return Ok(ExitCode::from(2));
        }
    };
    let mut ordinal_ok = true;
    if args.experiment == "duffing" {
        let rows = run_duffing_benchmark(&cfg)?;
        std::fs::write(&args.out, io::duffing_rows_to_csv(&rows))?;
        for (kind, wins, total) in duffing_ordinal_summary(&rows) {
            let majority = 2 * wins > total;
            ordinal_ok &= majority;
            println!("{kind}: symmetry-constrained wins {wins}/{total}");
        }
    } else {
        let bench = run_lorenz_benchmark(&cfg)?;
        let primary = &bench.cells[0];
        std::fs::write(&args.out, io::lorenz_cell_to_csv(primary))?;
        let ok_cells = bench.cells.iter().filter(|c| lorenz_ordinal_ok(c)).count();
        for cell in &bench.cells {
            println!(
                "centers={}: augmented-beats-raw in upper horizons: {} (|raw|={}, |aug|={}, |half|={})",
                cell.n_centers,
                lorenz_ordinal_ok(cell),
                cell.n_raw,
                cell.n_aug,
                cell.n_half_aug
            );
        }
        ordinal_ok = 2 * ok_cells > bench.cells.len();
    }
    println!("results written to {}", args.out.display());
    if args.check && !ordinal_ok {
        eprintln!("ordinal check failed");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
