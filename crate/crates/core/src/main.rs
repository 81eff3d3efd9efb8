use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nonlocal_crowd::simulator::{self, RunConfig, Scenario, Simulation};
use nonlocal_crowd::transport::exact_solution;
use nonlocal_crowd::Error;

#[derive(Parser, Debug)]
#[command(name = "nonlocal-crowd", version, about = "Non-local crowd dynamics on bounded domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario to its final time.
    Run(Common),
    /// Solve the first window by fixed-point iteration.
    Picard(Common),
    /// Compare the finite-volume solution of a linear scenario with the exact one.
    Oracle(Common),
    /// Run a scenario and check its discrete invariants.
    Verify(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Preset name (room-eq25, corridor-eq20, custom-linear) or TOML file.
    #[arg(long, default_value = "room-eq25")]
    scenario: String,
    #[arg(long)]
    h: Option<f64>,
    /// Final time.
    #[arg(long = "T")]
    t_final: Option<f64>,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a snapshot every this many steps.
    #[arg(long)]
    snap_every: Option<usize>,
    /// Picard window length, in time.
    #[arg(long)]
    window: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Smallest kernel support in cells (lower it for coarse desk runs).
    #[arg(long)]
    kernel_floor: Option<f64>,
}

impl Common {
    fn config(&self) -> Result<RunConfig, Error> {
        let mut c = RunConfig::resolve(&self.scenario)?;
        let n = &mut c.numerics;
        if let Some(v) = self.h {
            n.h = v;
        }
        if let Some(v) = self.t_final {
            n.t_final = v;
        }
        if let Some(v) = self.cfl {
            n.cfl = v;
        }
        if let Some(v) = self.theta {
            n.theta = v;
        }
        if let Some(v) = self.kernel_floor {
            n.kernel_floor = v;
        }
        if let Some(v) = &self.out {
            c.output.dir = Some(v.clone());
        }
        if let Some(v) = self.snap_every {
            c.output.cadence = v;
        }
        if let Some(v) = self.window {
            c.picard.window = v;
        }
        if let Some(v) = self.max_iter {
            c.picard.max_iter = v;
        }
        if let Some(v) = self.tol {
            c.picard.tol = v;
        }
        c.validate()?;
        Ok(c)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NonFinite { .. } => 2,
        Error::Io(_) => 1,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Run(c) => c.config().and_then(|c| cmd_run(&c)),
        Command::Picard(c) => c.config().and_then(|c| cmd_picard(&c)),
        Command::Oracle(c) => c.config().and_then(|c| cmd_oracle(&c)),
        Command::Verify(c) => c.config().and_then(|c| cmd_verify(&c)),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn cmd_run(config: &RunConfig) -> Result<bool, Error> {
    let out = simulator::run(config)?;
    let last = out.series.last().expect("non-empty series");
    println!("t = {}  steps = {}", last.t, last.step);
    for (i, p) in last.populations.iter().enumerate() {
        println!(
            "population {}: mass {:.9}  sup {:.6}  exited {:.9}  wall flux {}",
            i + 1,
            p.mass,
            p.sup,
            p.outflux,
            p.wall_flux
        );
    }
    if let Some(dir) = &config.output.dir {
        simulator::write_run(&out, dir)?;
        println!("wrote {}", dir.display());
    }
    Ok(true)
}

fn cmd_picard(config: &RunConfig) -> Result<bool, Error> {
    let (_, _, outcome) = simulator::picard_from_config(config)?;
    println!(
        "window {} steps of dt = {}",
        outcome.trajectory.len() - 1,
        outcome.dt
    );
    let mut lines = vec!["k,d".to_string()];
    for (k, d) in outcome.history.iter().enumerate() {
        println!("k = {:3}  d = {d:e}", k + 1);
        lines.push(format!("{},{d}", k + 1));
    }
    if outcome.non_contraction {
        println!("warning: iterate distances grew three times in a row");
    }
    println!("converged: {}", outcome.converged);
    if let Some(dir) = &config.output.dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("picard.csv"), lines.join("\n") + "\n")?;
    }
    Ok(true)
}

fn cmd_oracle(config: &RunConfig) -> Result<bool, Error> {
    let out = simulator::run(config)?;
    let Scenario::Linear(linear) = &out.scenario else {
        return Err(Error::Config("the oracle needs a custom-linear scenario".into()));
    };
    let t = out.final_state.t;
    let exact = exact_solution(&linear.problem, t)?;
    let approx = &out.final_state.densities[0];
    let l1 = approx.l1_distance(&exact)?;
    let sup = approx.linear_combination(1.0, &exact, -1.0)?.sup_norm();
    println!("h = {}  t = {t}", config.numerics.h);
    println!("L1 error  {l1:e}");
    println!("sup error {sup:e}");
    println!("exact mass {:.12}  scheme mass {:.12}", exact.l1_norm(), approx.l1_norm());
    Ok(true)
}

fn cmd_verify(config: &RunConfig) -> Result<bool, Error> {
    let mut sim = Simulation::from_config(config)?;
    sim.run_until(config.numerics.t_final, |_| Ok(()))?;
    let series = sim.series();
    let n = series[0].populations.len();
    let mut checks: Vec<(&str, bool)> = Vec::new();

    let mut ledger = true;
    let mut monotone = true;
    for w in series.windows(2) {
        for i in 0..n {
            let (a, b) = (w[0].populations[i], w[1].populations[i]);
            let spent = b.outflux - a.outflux;
            ledger &= ((a.mass - b.mass) - spent).abs() <= 1e-10 * a.mass.max(f64::MIN_POSITIVE);
            monotone &= b.mass <= a.mass * (1.0 + 1e-14);
        }
    }
    checks.push(("conservation ledger", ledger));
    checks.push(("mass non-increasing", monotone));
    let walls = series.iter().all(|r| r.populations.iter().all(|p| p.wall_flux == 0.0));
    checks.push(("zero wall flux", walls));
    let positive = series.iter().all(|r| r.populations.iter().all(|p| p.min >= -1e-12));
    checks.push(("positivity", positive));
    let g = series.iter().map(|r| r.max_divergence).fold(0.0, f64::max);
    let envelope = series.iter().all(|r| {
        (0..n).all(|i| r.populations[i].sup <= series[0].populations[i].sup * (g * r.t).exp() * (1.0 + 1e-12))
    });
    checks.push(("sup-norm growth envelope", envelope));

    for (name, ok) in &checks {
        println!("{} {name}", if *ok { "PASS" } else { "FAIL" });
    }
    Ok(checks.iter().all(|(_, ok)| *ok))
}
