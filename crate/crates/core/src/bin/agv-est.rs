use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use agv_estimation::harness::{
    cmd_compare, cmd_estimate, cmd_mission, cmd_simulate, BatteryAge, CommonArgs, EstimateArgs,
    HarnessError, MissionArgs,
};

#[derive(Parser)]
#[command(
    name = "agv-est",
    version,
    about = "Traversal-time estimation and planning for AGV floors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario config file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Floor graph file.
    #[arg(long)]
    graph: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

impl From<Common> for CommonArgs {
    fn from(c: Common) -> Self {
        CommonArgs {
            config: c.config,
            graph: c.graph,
            seed: c.seed,
            out: c.out,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the reference traversal-time series as CSV.
    Simulate(Common),
    /// Run one estimator over a series CSV.
    Estimate {
        /// Input series (`t,arc,agv,duration`).
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// lsmw, rls, rls-adaptive or kf.
        #[arg(long)]
        method: String,
        /// Only use rows of this arc.
        #[arg(long)]
        arc: Option<String>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        alpha1: Option<f64>,
        #[arg(long)]
        alpha2: Option<f64>,
        #[arg(long)]
        alpha3: Option<f64>,
        /// Kalman process noise; needs --r.
        #[arg(long)]
        q: Option<f64>,
        /// Kalman measurement noise; needs --q.
        #[arg(long)]
        r: Option<f64>,
    },
    /// Compare all estimators on the reference series.
    Compare(Common),
    /// Closed-loop plan, traverse and replan mission.
    Mission {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        src: Option<String>,
        #[arg(long)]
        dst: Option<String>,
        /// new or drained.
        #[arg(long, default_value = "new")]
        battery_age: String,
        /// One-way legs, alternating direction.
        #[arg(long)]
        legs: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Simulate(c) => {
            let out = c.out.clone();
            let rows = cmd_simulate(&c.into())?;
            eprintln!("wrote {rows} rows to {}", out.display());
        }
        Command::Estimate {
            series,
            out,
            method,
            arc,
            window,
            lambda,
            alpha1,
            alpha2,
            alpha3,
            q,
            r,
        } => {
            let args = EstimateArgs {
                arc: arc.map(Into::into),
                window,
                lambda,
                alpha1,
                alpha2,
                alpha3,
                q,
                r,
                ..EstimateArgs::new(series, out, &method)
            };
            let run = cmd_estimate(&args)?;
            if let Some(s) = run.stats {
                println!(
                    "{}: rmse={} std={} mean={}",
                    run.method, s.rmse, s.std_dev, s.mean_error
                );
            }
        }
        Command::Compare(c) => print!("{}", cmd_compare(&c.into())?),
        Command::Mission {
            common,
            src,
            dst,
            battery_age,
            legs,
        } => {
            let args = MissionArgs {
                common: common.into(),
                src: src.map(Into::into),
                dst: dst.map(Into::into),
                battery_age: battery_age.parse::<BatteryAge>()?,
                legs,
            };
            let report = cmd_mission(&args)?;
            for r in &report.routes {
                let arcs: Vec<&str> = r.plan.path.arcs().iter().map(|a| a.as_str()).collect();
                println!("leg {} t={:.3}: {}", r.leg, r.time, arcs.join(" "));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("agv-est: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
