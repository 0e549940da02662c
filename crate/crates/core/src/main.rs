use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use modap::cost::{self, CostParams, UpdateBreadth};
use modap::harness::config::{ConfigMap, ExperimentConfig};
use modap::harness::experiment::{max_tolerated_rate, rate_sweep, run_experiment};
use modap::harness::problem::random_feasible_system;
use modap::harness::system_file::format_system;
use modap::{generate_model_problem, ModelProblemSpec, Result, Status};

#[derive(Parser)]
#[command(name = "modap", version, about = "Pseudo-projection solver for moving linear inequality systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its metrics CSV.
    Solve {
        #[command(flatten)]
        overrides: Overrides,
        /// Metrics file (overrides `output.path`).
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Write a model problem (or a random feasible system) as a system file.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        box_upper: Option<f64>,
        #[arg(long)]
        sum_upper: Option<f64>,
        #[arg(long)]
        sum_lower: Option<f64>,
        /// Emit a random feasible system with this many rows instead.
        #[arg(long)]
        random_rows: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Defaults to stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Print the per-iteration cost model and scalability bound as CSV.
    Costmodel(CostArgs),
    /// Run the experiment once per displacement rate.
    Sweep {
        #[command(flatten)]
        overrides: Overrides,
        /// Comma-separated rates.
        #[arg(long, value_delimiter = ',', required = true)]
        rates: Vec<f64>,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key=value`, applied after the config file. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    workers: Option<usize>,
    /// Displacement rate; a positive rate switches on translation.
    #[arg(long, allow_negative_numbers = true)]
    rate: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    max_iter: Option<usize>,
}

impl Overrides {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut map = match &self.config {
            Some(path) => ConfigMap::load(path)?,
            None => ConfigMap::default(),
        };
        for pair in &self.set {
            map.set_pair(pair)?;
        }
        if let Some(k) = self.workers {
            map.set("engine.workers", &k.to_string())?;
        }
        if let Some(r) = self.rate {
            map.set("dynamics.rate", &r.to_string())?;
            if r > 0.0 {
                map.set("dynamics.mode", "translation")?;
            }
        }
        if let Some(e) = self.eps {
            map.set("solver.eps", &e.to_string())?;
        }
        if let Some(l) = self.lambda {
            map.set("solver.lambda", &l.to_string())?;
        }
        if let Some(v) = &self.variant {
            map.set("solver.variant", v)?;
        }
        if let Some(n) = self.max_iter {
            map.set("solver.max_iterations", &n.to_string())?;
        }
        let cfg = ExperimentConfig::from_map(&map)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct CostArgs {
    #[arg(long, default_value_t = 10)]
    n: u64,
    /// Defaults to `2n + 2`.
    #[arg(long)]
    m: Option<u64>,
    #[arg(long, default_value_t = cost::DEFAULT_TAU_OP)]
    tau_op: f64,
    #[arg(long, default_value_t = cost::DEFAULT_TAU_TR)]
    tau_tr: f64,
    /// Per-message latency `L` in seconds.
    #[arg(long, default_value_t = cost::DEFAULT_LATENCY)]
    latency: f64,
    /// `single`, `full` or `both`.
    #[arg(long, default_value = "both")]
    breadth: String,
    /// Comma-separated dimensions; replaces `--n`.
    #[arg(long, value_delimiter = ',')]
    sweep: Vec<u64>,
    /// With `--sweep`, use `m = k n` instead of `2n + 2`.
    #[arg(long)]
    rows_per_n: Option<u64>,
}

fn cost_table(args: &CostArgs) -> Result<String> {
    let breadths = match args.breadth.as_str() {
        "both" => vec![UpdateBreadth::Single, UpdateBreadth::Full],
        other => vec![other.parse()?],
    };
    let sizes: Vec<(u64, u64)> = if args.sweep.is_empty() {
        vec![(args.n, args.m.unwrap_or(2 * args.n + 2))]
    } else {
        let rule = match (args.rows_per_n, args.m) {
            (Some(k), _) => cost::RowRule::Multiple(k),
            (None, Some(m)) => cost::RowRule::Fixed(m),
            (None, None) => cost::RowRule::ModelProblem,
        };
        args.sweep.iter().map(|&n| (n, rule.rows(n))).collect()
    };

    let mut out = String::new();
    let defaults = args.tau_op == cost::DEFAULT_TAU_OP
        && args.tau_tr == cost::DEFAULT_TAU_TR
        && args.latency == cost::DEFAULT_LATENCY;
    let _ = writeln!(
        out,
        "# tau_op={:e} tau_tr={:e} latency={:e}{}",
        args.tau_op,
        args.tau_tr,
        args.latency,
        if defaults { " (assumed defaults, not measured)" } else { "" }
    );
    out.push_str("breadth,n,m,l,c_s,c_map,c_a,c_r,c_p,c_u,t_s,t_map,t_r,t_a,t_p,k_max\n");
    for &(n, m) in &sizes {
        for &breadth in &breadths {
            let params = CostParams {
                n,
                m,
                tau_op: args.tau_op,
                tau_tr: args.tau_tr,
                latency: args.latency,
                breadth,
            };
            let r = cost::report(&params)?;
            let (c, t) = (r.counts, r.times);
            let _ = writeln!(
                out,
                "{breadth},{n},{m},{},{},{},{},{},{},{},{:e},{:e},{:e},{:e},{:e},{}",
                r.list_len, c.c_s, c.c_map, c.c_a, c.c_r, c.c_p, c.c_u, t.t_s, t.t_map, t.t_r, t.t_a, t.t_p, r.k_max
            );
        }
    }
    Ok(out)
}

fn status_code(status: Status) -> ExitCode {
    match status {
        Status::Converged => ExitCode::SUCCESS,
        Status::BudgetExhausted => ExitCode::from(2),
    }
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve { overrides, output } => {
            let mut cfg = overrides.load()?;
            if let Some(path) = output {
                cfg.output_path = path;
            }
            let res = run_experiment(&cfg)?;
            let o = &res.outcome;
            println!(
                "status={} iterations={} virtual_time={} metrics={}",
                o.status,
                o.iterations,
                o.virtual_time,
                res.metrics_path.display()
            );
            Ok(status_code(o.status))
        }
        Command::Generate {
            n,
            box_upper,
            sum_upper,
            sum_lower,
            random_rows,
            seed,
            output,
        } => {
            let sys = match random_rows {
                Some(m) => random_feasible_system(n, m, seed)?.0,
                None => {
                    let mut spec = ModelProblemSpec::new(n);
                    spec.box_upper = box_upper.unwrap_or(spec.box_upper);
                    spec.sum_upper = sum_upper.unwrap_or(spec.sum_upper);
                    spec.sum_lower = sum_lower.unwrap_or(spec.sum_lower);
                    generate_model_problem(&spec)?
                }
            };
            match output {
                Some(path) => modap::harness::save_system(&sys, path)?,
                None => print!("{}", format_system(&sys)),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Costmodel(args) => {
            print!("{}", cost_table(&args)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            overrides,
            rates,
            out_dir,
        } => {
            let cfg = overrides.load()?;
            std::fs::create_dir_all(&out_dir).map_err(|e| modap::Error::Io {
                path: out_dir.clone(),
                source: e,
            })?;
            let entries = rate_sweep(&cfg, &rates, Some(&out_dir))?;
            let mut stdout = std::io::stdout().lock();
            for e in &entries {
                let _ = writeln!(stdout, "rate={} status={} iterations={}", e.rate, e.status, e.iterations);
            }
            match max_tolerated_rate(&entries) {
                Some(r) => {
                    let _ = writeln!(stdout, "max_tolerated_rate={r}");
                }
                None => {
                    let _ = writeln!(stdout, "max_tolerated_rate=none");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
