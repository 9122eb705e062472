mod config;
mod experiments;

use clap::{Parser, Subcommand, ValueEnum};
use config::{parse_assignment, parse_file, CliError, CliResult, Config};
use serde_json::{json, Value as Json};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(name = "liouville", version, about = "Gaussian multiplicative chaos, Liouville field and critical Ising experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ListFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum DataFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// List registered experiments
    List {
        #[arg(long, value_enum, default_value = "text")]
        format: ListFormat,
    },
    /// Run one experiment and write results into the output directory
    Run {
        #[arg(long)]
        experiment: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: DataFormat,
        /// Shorthand for lqft.mc_samples or samples, whichever the experiment has
        #[arg(long)]
        samples: Option<u64>,
        /// Shorthand for lqft.grid_resolution or grid
        #[arg(long)]
        grid: Option<u64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        /// Extra key=value overrides, applied after the config file
        #[arg(long = "set")]
        set: Vec<String>,
    },
}

fn main() {
    // clap reports usage errors with exit code 2 already
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.cmd {
        Cmd::List { format } => {
            let reg = experiments::registry();
            match format {
                ListFormat::Text => {
                    for e in &reg {
                        println!("{:<16} {}", e.name, e.summary);
                    }
                }
                ListFormat::Json => {
                    let v: Vec<Json> = reg.iter().map(|e| json!({"name": e.name, "summary": e.summary})).collect();
                    println!("{}", serde_json::to_string_pretty(&v).unwrap());
                }
            }
            Ok(())
        }
        Cmd::Run { experiment, config, seed, out, format, samples, grid, gamma, mu, set } => {
            let exp = experiments::find(&experiment).ok_or_else(|| CliError::Usage(format!("unknown experiment {experiment:?}; see `liouville list`")))?;
            let schema = (exp.schema)();
            let has = |k: &str| schema.iter().any(|(s, _, _)| *s == k);
            let mut values = match &config {
                Some(p) => parse_file(&std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?)?,
                None => BTreeMap::new(),
            };
            for a in &set {
                let (k, v) = parse_assignment(a)?;
                values.insert(k, v);
            }
            let pick = |a: &'static str, b: &'static str| if has(a) { a } else { b };
            let mut flag = |k: &str, v: toml::Value| {
                values.insert(k.to_string(), v);
            };
            if let Some(s) = seed {
                flag("seed", toml::Value::Integer(s as i64));
            }
            if let Some(n) = samples {
                flag(pick("lqft.mc_samples", "samples"), toml::Value::Integer(n as i64));
            }
            if let Some(n) = grid {
                flag(pick("lqft.grid_resolution", "grid"), toml::Value::Integer(n as i64));
            }
            if let Some(g) = gamma {
                flag("gamma", toml::Value::Float(g));
            }
            if let Some(m) = mu {
                flag("mu", toml::Value::Float(m));
            }
            let cfg = Config::resolve(values, &schema)?;
            let t = Instant::now();
            let outcome = (exp.run)(&cfg)?;
            let wall = t.elapsed().as_secs_f64();
            write_outputs(&out, exp.name, &cfg, &outcome, format, wall)
        }
    }
}

fn write_atomic(path: &Path, text: &str) -> CliResult<()> {
    let tmp = path.with_extension("tmp");
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    std::fs::write(&tmp, text).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

fn write_outputs(out: &Path, name: &str, cfg: &Config, o: &experiments::Outcome, format: DataFormat, wall: f64) -> CliResult<()> {
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let seed = cfg.u64("seed");
    let mut lineage = vec![json!({"role": "root", "seed": seed})];
    lineage.extend(o.lineage.iter().map(|(r, s)| json!({"role": r, "seed": s})));
    let record = json!({
        "experiment": name,
        "config": cfg.to_json(),
        "estimates": o.estimates,
        "verdicts": o.verdicts,
        "seed_lineage": lineage,
    });
    write_atomic(&out.join("results.json"), &(serde_json::to_string_pretty(&record).unwrap() + "\n"))?;
    let mut files = vec!["results.json"];
    if let Some(t) = &o.table {
        match format {
            DataFormat::Csv => {
                write_atomic(&out.join("data.csv"), &t.to_csv())?;
                files.push("data.csv");
            }
            DataFormat::Json => {
                let v = json!({"header": t.header, "columns": t.columns, "rows": t.rows});
                write_atomic(&out.join("data.json"), &(serde_json::to_string(&v).unwrap() + "\n"))?;
                files.push("data.json");
            }
        }
    } else if !o.extra.is_null() {
        // record-shaped outputs are JSON whatever the table format
        write_atomic(&out.join("data.json"), &(serde_json::to_string_pretty(&o.extra).unwrap() + "\n"))?;
        files.push("data.json");
    }
    let manifest = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": name,
        "seed": seed,
        "files": files,
        "wall_time_seconds": wall,
    });
    write_atomic(&out.join("manifest.json"), &(serde_json::to_string_pretty(&manifest).unwrap() + "\n"))?;
    println!("{}", serde_json::to_string(&record["estimates"]).unwrap());
    Ok(())
}
