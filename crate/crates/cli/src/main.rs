use std::path::PathBuf;
use std::process::ExitCode;

use gmmce_cli::config::ExperimentConfig;
use gmmce_cli::harness::Harness;

const USAGE: &str = "\
gmmce - GMM-based channel estimation benchmark harness

USAGE:
  gmmce <SUBCOMMAND> [--config PATH] [--seed N] [--out DIR] [--threads N]

SUBCOMMANDS:
  generate          Generate the train/test channel datasets and write them
                    as .chd files to the output directory.
  fit               Fit all configured estimators and persist the models.
  sweep-snr         Normalized MSE per estimator over the SNR grid
                    -> mse_snr.csv
  sweep-train       MSE at the fixed sweep SNR over training-set sizes
                    -> mse_train.csv
  sweep-components  MSE at the fixed sweep SNR over component counts
                    -> mse_components.csv
  resp-count        Mean mixture components needed for the responsibility
                    threshold, per SNR -> resp_count.csv
  param-count       Exact parameter counts per estimator -> param_count.csv

FLAGS:
  --config PATH   Experiment configuration file (defaults to the built-in
                  desk-scale configuration).
  --seed N        Override the configured experiment seed.
  --out DIR       Output directory (default: ./out). Models are cached in
                  DIR/models.
  --threads N     Size of the worker thread pool (default: all cores).
  --help          Show this message.
";

struct Args {
    command: String,
    config: Option<PathBuf>,
    seed: Option<u64>,
    out: PathBuf,
    threads: Option<usize>,
}

fn parse_args() -> Result<Args, String> {
    let mut it = std::env::args().skip(1);
    let command = match it.next() {
        Some(c) if c == "--help" || c == "-h" => {
            print!("{USAGE}");
            std::process::exit(0);
        }
        Some(c) => c,
        None => return Err("missing subcommand".into()),
    };
    let known = [
        "generate",
        "fit",
        "sweep-snr",
        "sweep-train",
        "sweep-components",
        "resp-count",
        "param-count",
    ];
    if !known.contains(&command.as_str()) {
        return Err(format!("unknown subcommand '{command}'"));
    }
    let mut args = Args {
        command,
        config: None,
        seed: None,
        out: PathBuf::from("out"),
        threads: None,
    };
    while let Some(flag) = it.next() {
        match flag.as_str() {
            "--help" | "-h" => {
                print!("{USAGE}");
                std::process::exit(0);
            }
            "--config" => {
                let v = it.next().ok_or("missing value for --config")?;
                args.config = Some(PathBuf::from(v));
            }
            "--seed" => {
                let v = it.next().ok_or("missing value for --seed")?;
                args.seed = Some(v.parse().map_err(|_| "invalid --seed value")?);
            }
            "--out" => {
                let v = it.next().ok_or("missing value for --out")?;
                args.out = PathBuf::from(v);
            }
            "--threads" => {
                let v = it.next().ok_or("missing value for --threads")?;
                args.threads = Some(v.parse().map_err(|_| "invalid --threads value")?);
            }
            other => return Err(format!("unknown flag '{other}'")),
        }
    }
    Ok(args)
}

fn run(args: Args) -> gmmce_core::Result<()> {
    if let Some(n) = args.threads {
        // Ignore the error when a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::desk_default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    std::fs::create_dir_all(&args.out)?;
    let harness = Harness::new(cfg)?.with_cache_dir(args.out.join("models"))?;

    match args.command.as_str() {
        "generate" => {
            let (train, test) = harness.write_datasets(&args.out)?;
            println!("wrote {}", train.display());
            println!("wrote {}", test.display());
        }
        "fit" => {
            let labels = harness.fit_and_cache_models()?;
            println!("fitted: {}", labels.join(", "));
            println!("models cached under {}", args.out.join("models").display());
        }
        "sweep-snr" => {
            let detail = harness.run_mse_sweep()?;
            let path = args.out.join("mse_snr.csv");
            detail.to_table().write(&path)?;
            println!("wrote {}", path.display());
        }
        "sweep-train" => {
            let detail = harness.run_training_size_sweep()?;
            let path = args.out.join("mse_train.csv");
            detail.to_table().write(&path)?;
            println!("wrote {}", path.display());
        }
        "sweep-components" => {
            let detail = harness.run_component_sweep()?;
            let path = args.out.join("mse_components.csv");
            detail.to_table().write(&path)?;
            println!("wrote {}", path.display());
        }
        "resp-count" => {
            let detail = harness.run_responsibility_count()?;
            let path = args.out.join("resp_count.csv");
            detail.to_table().write(&path)?;
            println!("wrote {}", path.display());
        }
        "param-count" => {
            let (table, notes) = harness.report_param_counts()?;
            let path = args.out.join("param_count.csv");
            table.write(&path)?;
            println!("wrote {}", path.display());
            for n in notes {
                println!("{n}");
            }
        }
        _ => unreachable!("validated in parse_args"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match parse_args() {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            eprint!("{USAGE}");
            return ExitCode::from(2);
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
