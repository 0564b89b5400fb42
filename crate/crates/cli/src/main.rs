use clap::{Parser, Subcommand};
use droplet::commands::{
    audit_passes, cmd_audit_scl, cmd_run, cmd_sweep, cmd_validate_yl, output_dir, CliError, RunOutcome, SweepItem,
    YlOutcome, AUDIT_EXACT_TOL, AUDIT_ORDER,
};
use droplet::config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "droplet", version, about = "2D ALE droplet simulations with contact-line dynamics")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a simulation and write energies, snapshots and a summary.
    Run { config: PathBuf },
    /// Run to the final time and compare the interface with the Young-Laplace profile.
    ValidateYl { config: PathBuf },
    /// Randomised check of the discrete space-conservation identities.
    AuditScl {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        cases: usize,
    },
    /// Repeat a run for several values of one config key.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        key: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Run validate-yl instead of run for each value.
        #[arg(long)]
        validate: bool,
    },
}

fn load(path: &std::path::Path) -> Result<RunConfig, CliError> {
    Ok(RunConfig::load(path)?)
}

fn report_run(out: &RunOutcome) -> u8 {
    let s = &out.summary;
    println!(
        "t = {} steps = {} remeshes = {} max_balance+ = {:e} vol_rel_err_max = {:e} steady = {}",
        s.state.t,
        s.steps,
        s.remesh_count,
        out.max_positive_balance(),
        s.max_vol_err,
        out.steady()
    );
    println!("output in {}", out.dir.display());
    match &s.failure {
        Some(e) => {
            eprintln!("error: {e}");
            1
        }
        None => 0,
    }
}

fn report_yl(out: &YlOutcome) -> u8 {
    let code = report_run(&out.run);
    let verdict = if out.pass() { "PASS" } else { "FAIL" };
    println!("{verdict} yl_distance = {:e} threshold = {:e}", out.distance, out.threshold);
    if out.pass() {
        0
    } else {
        code.max(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<u8, CliError> = match cli.cmd {
        Cmd::Run { config } => load(&config).and_then(|c| cmd_run(&c, &output_dir(&c))).map(|o| report_run(&o)),
        Cmd::ValidateYl { config } => {
            load(&config).and_then(|c| cmd_validate_yl(&c, &output_dir(&c))).map(|o| report_yl(&o))
        }
        Cmd::AuditScl { seed, cases } => cmd_audit_scl(seed, cases).map(|a| {
            println!("cases            {}", a.cases);
            println!("volume residual  {:e} (<= {AUDIT_EXACT_TOL:e})", a.volume);
            println!("gravity residual {:e} (<= {AUDIT_EXACT_TOL:e})", a.gravity);
            println!("surface order    [{:.3}, {:.3}] (in [{}, {}])", a.surface_order.0, a.surface_order.1, AUDIT_ORDER.0, AUDIT_ORDER.1);
            println!("contact order    [{:.3}, {:.3}] (in [{}, {}])", a.contact_order.0, a.contact_order.1, AUDIT_ORDER.0, AUDIT_ORDER.1);
            let ok = audit_passes(&a);
            println!("{}", if ok { "PASS" } else { "FAIL" });
            u8::from(!ok)
        }),
        Cmd::Sweep { config, key, values, validate } => load(&config)
            .and_then(|c| cmd_sweep(&c, &output_dir(&c), &key, &values, validate))
            .map(|items| {
                let mut code = 0u8;
                for (v, r) in items {
                    println!("== {key} = {v}");
                    let c = match r {
                        Ok(SweepItem::Run(o)) => report_run(&o),
                        Ok(SweepItem::Yl(o)) => report_yl(&o),
                        Err(e) => {
                            eprintln!("error: {e}");
                            e.exit_code() as u8
                        }
                    };
                    code = code.max(c);
                }
                code
            }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
