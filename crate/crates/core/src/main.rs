use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use superclose::config::load_config;
use superclose::report::Report;
use superclose::study::{reference_tables, regularity_rates, run_projection_study, run_regularity_study};
use superclose::theory::{predicted_order, predicted_sigma, predicted_sigma_prime, Delta, RateInputs};
use superclose::Result;

/// Supercloseness studies of Galerkin projections over nearby meshes.
#[derive(Parser)]
#[command(name = "superclose", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Write the rows as CSV to this path.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Do not print the text table.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Reproduce one of the reference convergence tables (1 to 6).
    Table {
        id: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Run a study described by a key = value configuration file.
    Study {
        config: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Print the predicted superconvergence orders.
    Predict {
        #[arg(long)]
        gamma: f64,
        /// Integrability of the exact solution; `inf` allowed.
        #[arg(long, default_value = "inf", value_parser = parse_real)]
        eta: f64,
        /// Order of the form difference; `inf` for identical forms.
        #[arg(long, default_value = "inf", value_parser = parse_real)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        mu: usize,
        #[arg(long, default_value_t = 0)]
        nu: usize,
        #[arg(long, default_value_t = 1)]
        s: usize,
        #[arg(long, default_value_t = 2)]
        r: usize,
        #[arg(long, value_parser = parse_real)]
        q: Option<f64>,
        /// Space dimension, used to check the restriction on `q`.
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
    /// Convergence of projections of `x^(2-1/p) - x` on the shifted-node grid pair.
    Regularity {
        #[arg(long, default_value_t = 4.0)]
        p: f64,
        #[arg(long, default_value_t = 8)]
        levels: usize,
        #[command(flatten)]
        out: Output,
    },
}

fn parse_real(s: &str) -> std::result::Result<f64, String> {
    match s {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => s.parse().map_err(|_| format!("`{s}` is not a number")),
    }
}

const EXIT_MISMATCH: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn emit(report: &Report, out: &Output) -> Result<()> {
    if !out.quiet {
        print!("{}", report.text_table());
    }
    if let Some(path) = &out.csv {
        report.write_csv_file(path)?;
    }
    Ok(())
}

fn cmd_table(id: usize, out: &Output) -> Result<bool> {
    let tables = reference_tables(id)?;
    let mut report = Report::new(format!("Table {id}")).with_meta("table", id.to_string());
    for t in &tables {
        let result = run_projection_study(&t.config)?;
        let prefix = t.name.strip_prefix(&format!("table {id}")).unwrap_or(&t.name).trim();
        report.add_study(prefix, &result)?;
        report.checks.extend(t.compare(&result));
    }
    emit(&report, out)?;
    Ok(report.passed())
}

fn cmd_study(path: &PathBuf, out: &Output) -> Result<()> {
    let cfg = load_config(path)?;
    let result = run_projection_study(&cfg)?;
    let mut report = Report::new(format!("Study {}", path.display())).with_meta("config", path.display().to_string());
    report.add_study("", &result)?;
    if let Some(ri) = &cfg.rate_inputs {
        if !out.quiet {
            println!("sigma = {}", predicted_sigma(ri)?);
        }
    }
    emit(&report, out)?;
    for (norm, ok) in result.norms.iter().zip(&result.monotone) {
        if !ok && !out.quiet {
            println!("note: {norm} values do not decrease monotonically");
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_predict(gamma: f64, eta: f64, delta: f64, mu: usize, nu: usize, s: usize, r: usize, q: Option<f64>, dim: usize) -> Result<()> {
    let inputs = RateInputs {
        gamma,
        eta,
        delta: if delta.is_infinite() { Delta::Infinite } else { Delta::Finite(delta) },
        mu,
        nu,
        s,
        r,
        log_factor: false,
        q,
    };
    inputs.validate()?;
    inputs.check_q_embedding(dim)?;
    println!("sigma = {}", predicted_sigma(&inputs)?);
    println!("order in H^{s}: {}", predicted_order(&inputs, s)?);
    if s == 1 {
        println!("sigma' = {}", predicted_sigma_prime(&inputs)?);
        println!("order in L^2: {}", predicted_order(&inputs, 0)?);
    }
    Ok(())
}

fn cmd_regularity(p: f64, levels: usize, out: &Output) -> Result<()> {
    let result = run_regularity_study(p, levels)?;
    let (l2, h1) = regularity_rates(p);
    let mut report = Report::new(format!("Regularity study, p = {p}"))
        .with_meta("p", p.to_string())
        .with_meta("lower_bound_l2", l2.to_string())
        .with_meta("lower_bound_h1", h1.to_string());
    report.add_study("", &result)?;
    emit(&report, out)?;
    if !out.quiet {
        println!("lower-bound rates: L2 {l2:.4}, H1 {h1:.4}");
        for (j, norm) in result.norms.iter().enumerate() {
            if let Some(o) = result.final_order(j) {
                println!("observed {norm} order {o:.4}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Table { id, out } => cmd_table(*id, out),
        Command::Study { config, out } => cmd_study(config, out).map(|_| true),
        Command::Predict {
            gamma,
            eta,
            delta,
            mu,
            nu,
            s,
            r,
            q,
            dim,
        } => cmd_predict(*gamma, *eta, *delta, *mu, *nu, *s, *r, *q, *dim).map(|_| true),
        Command::Regularity { p, levels, out } => cmd_regularity(*p, *levels, out).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_MISMATCH),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
