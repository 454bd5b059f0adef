use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use orbit_offload::harness::metrics::{write_runtime_csv, write_sweep_csv};
use orbit_offload::harness::{
    bench_runtime, emit, oracle_compare, run_schemes, sweep_budget, sweep_constellation, Format,
    ScenarioConfig, Scheme, Summary, SweepRow,
};
use orbit_offload::oracle::OracleLimits;

#[derive(Parser)]
#[command(
    name = "orbit-offload",
    version,
    about = "LEO constellation task-offloading simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one horizon and write per-interval metrics.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        schemes: SchemeArgs,
        /// Per-interval metrics file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: Format,
        /// Summary JSON file.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Repeat the run at several budget levels.
    SweepBudget {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        schemes: SchemeArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [0.02, 0.05, 0.1, 0.2, 0.5])]
        budgets: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat the run at several plane counts.
    SweepConstellation {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        schemes: SchemeArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [72, 108, 144])]
        planes: Vec<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the greedy orchestrator with exhaustive search on random
    /// small intervals.
    OracleCompare {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 12)]
        max_tasks: usize,
        #[arg(long, default_value_t = 4)]
        max_edges: usize,
        #[arg(long, default_value_t = 20_000_000)]
        max_states: u128,
        /// Report JSON file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time the orchestrator across constellation sizes.
    BenchRuntime {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [72, 108, 144])]
        planes: Vec<u32>,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SchemeArgs {
    /// Schemes to simulate side by side; defaults to the configured scheme.
    #[arg(long, value_delimiter = ',')]
    schemes: Vec<String>,
    /// Simulate every scheme.
    #[arg(long, conflicts_with = "schemes")]
    all_schemes: bool,
}

impl SchemeArgs {
    fn resolve(&self, cfg: &ScenarioConfig) -> Result<Vec<Scheme>> {
        if self.all_schemes {
            return Ok(Scheme::ALL.to_vec());
        }
        if self.schemes.is_empty() {
            return Ok(vec![cfg.scheme]);
        }
        self.schemes
            .iter()
            .map(|s| s.parse::<Scheme>().map_err(Into::into))
            .collect()
    }
}

/// Scenario keys settable from the command line. Anything not listed can
/// be given through `--set key=value`.
#[derive(Args)]
struct ScenarioArgs {
    /// TOML scenario file with flat keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any scenario key, e.g. `--set diurnal_amplitude=0`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    num_planes: Option<u32>,
    #[arg(long)]
    sats_per_plane: Option<u32>,
    #[arg(long)]
    altitude_km: Option<f64>,
    #[arg(long)]
    inclination_deg: Option<f64>,
    #[arg(long)]
    interval_s: Option<f64>,
    #[arg(long)]
    horizon_intervals: Option<u32>,
    #[arg(long)]
    elevation_mask_deg: Option<f64>,
    #[arg(long)]
    sites_csv: Option<PathBuf>,
    #[arg(long)]
    prices_csv: Option<PathBuf>,
    #[arg(long)]
    default_price: Option<f64>,
    #[arg(long)]
    budget_per_interval_usd: Option<f64>,
    #[arg(long)]
    scheme: Option<Scheme>,
    #[arg(long)]
    rate_bps: Option<f64>,
    #[arg(long)]
    cycles_per_bit: Option<f64>,
    #[arg(long)]
    active_fraction: Option<f64>,
    #[arg(long)]
    max_defer_intervals: Option<u32>,
    #[arg(long)]
    hroa_reduction: Option<f64>,
    #[arg(long)]
    parallel_pipelines: Option<u32>,
    #[arg(long = "seed")]
    rng_seed: Option<u64>,
    #[arg(long)]
    record_runtime: bool,
}

impl ScenarioArgs {
    fn build(&self) -> Result<ScenarioConfig> {
        let base = match &self.config {
            Some(p) => {
                ScenarioConfig::load(p).with_context(|| format!("loading {}", p.display()))?
            }
            None => ScenarioConfig::default(),
        };
        let mut kv: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                kv.push((k.to_string(), v));
            }
        };
        let quote = |p: &PathBuf| format!("{:?}", p.display().to_string());
        put("num_planes", self.num_planes.map(|v| v.to_string()));
        put("sats_per_plane", self.sats_per_plane.map(|v| v.to_string()));
        put("altitude_km", self.altitude_km.map(float));
        put("inclination_deg", self.inclination_deg.map(float));
        put("interval_s", self.interval_s.map(float));
        put(
            "horizon_intervals",
            self.horizon_intervals.map(|v| v.to_string()),
        );
        put("elevation_mask_deg", self.elevation_mask_deg.map(float));
        put("sites_csv", self.sites_csv.as_ref().map(quote));
        put("prices_csv", self.prices_csv.as_ref().map(quote));
        put("default_price", self.default_price.map(float));
        put(
            "budget_per_interval_usd",
            self.budget_per_interval_usd.map(float),
        );
        put("scheme", self.scheme.map(|s| format!("\"{s}\"")));
        put("rate_bps", self.rate_bps.map(float));
        put("cycles_per_bit", self.cycles_per_bit.map(float));
        put("active_fraction", self.active_fraction.map(float));
        put(
            "max_defer_intervals",
            self.max_defer_intervals.map(|v| v.to_string()),
        );
        put("hroa_reduction", self.hroa_reduction.map(float));
        put(
            "parallel_pipelines",
            self.parallel_pipelines.map(|v| v.to_string()),
        );
        put("rng_seed", self.rng_seed.map(|v| v.to_string()));
        if self.record_runtime {
            put("record_runtime", Some("true".into()));
        }
        for s in &self.set {
            let Some((k, v)) = s.split_once('=') else {
                bail!("--set expects KEY=VALUE, got {s:?}");
            };
            kv.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(base.with_overrides(kv.iter().map(|(k, v)| (k.as_str(), v.as_str())))?)
    }
}

/// TOML float literal; integers need a fractional part.
fn float(v: f64) -> String {
    let s = v.to_string();
    if s.contains(['.', 'e', 'E', 'i', 'N']) {
        s
    } else {
        format!("{s}.0")
    }
}

fn writer(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn print_summary(summary: &Summary) {
    eprintln!(
        "{:<6} {:>14} {:>12} {:>10} {:>10} {:>12}",
        "scheme", "energy_j/int", "life/int", "delay_s", "scheduled", "spent_usd"
    );
    for s in &summary.schemes {
        eprintln!(
            "{:<6} {:>14.1} {:>12.4} {:>10.3} {:>10} {:>12.6}",
            s.scheme.map(|k| k.as_str()).unwrap_or("-"),
            s.mean_energy_j,
            s.mean_life_consumed,
            s.avg_delay_s,
            s.tasks_scheduled,
            s.budget_spent_usd
        );
    }
}

fn print_sweep(rows: &[SweepRow], out: &Option<PathBuf>) -> Result<()> {
    write_sweep_csv(rows, writer(out)?)?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            schemes,
            out,
            format,
            summary,
        } => {
            let cfg = scenario.build()?;
            let out_data = run_schemes(&cfg, &schemes.resolve(&cfg)?)?;
            match &out {
                Some(p) => emit(&out_data.metrics, format, p)?,
                None => match format {
                    Format::Csv => orbit_offload::harness::metrics::write_csv(
                        &out_data.metrics,
                        io::stdout().lock(),
                    )?,
                    Format::Jsonl => orbit_offload::harness::metrics::write_jsonl(
                        &out_data.metrics,
                        io::stdout().lock(),
                    )?,
                },
            }
            if let Some(p) = &summary {
                out_data.summary.write_json(p)?;
            }
            print_summary(&out_data.summary);
        }
        Command::SweepBudget {
            scenario,
            schemes,
            budgets,
            out,
        } => {
            let cfg = scenario.build()?;
            let rows = sweep_budget(&cfg, &budgets, &schemes.resolve(&cfg)?)?;
            print_sweep(&rows, &out)?;
        }
        Command::SweepConstellation {
            scenario,
            schemes,
            planes,
            out,
        } => {
            let cfg = scenario.build()?;
            let rows = sweep_constellation(&cfg, &planes, &schemes.resolve(&cfg)?)?;
            print_sweep(&rows, &out)?;
        }
        Command::OracleCompare {
            seed,
            instances,
            max_tasks,
            max_edges,
            max_states,
            out,
        } => {
            let limits = OracleLimits {
                max_tasks,
                max_edges,
                max_states,
            };
            let report = oracle_compare(seed, instances, limits)?;
            let mut w = writer(&out)?;
            serde_json::to_writer_pretty(&mut w, &report)?;
            writeln!(w)?;
        }
        Command::BenchRuntime {
            scenario,
            planes,
            repeats,
            out,
        } => {
            let cfg = scenario.build()?;
            let rows = bench_runtime(&cfg, &planes, repeats)?;
            write_runtime_csv(&rows, writer(&out)?)?;
        }
    }
    Ok(())
}
