use std::process::ExitCode;

use clap::Parser;
use extr_cli::args::{Cli, Command};
use extr_cli::commands::{
    cmd_bench, cmd_evaluate, cmd_interpolate, cmd_mmc, cmd_repair, cmd_simulate, AGGREGATE_CSV,
    FOLDS_CSV, REPORT_JSON,
};
use extr_cli::CliResult;

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Repair(a) => {
            let s = cmd_repair(a)?;
            println!("repaired {} columns -> {}", s.columns.len(), s.output.display());
            for g in &s.groups {
                println!(
                    "group {}: {} anchors, eps0 {:.6e}, lipschitz bound {:.4}",
                    g.group, g.rows, g.eps0, g.lipschitz_bound
                );
            }
        }
        Command::Interpolate(a) => {
            let s = cmd_interpolate(a)?;
            println!("repaired {} rows with option {} -> {}", s.rows, s.option.number(), s.output.display());
        }
        Command::Mmc(a) => {
            let s = cmd_mmc(a)?;
            if a.output.is_none() {
                println!("{}", serde_json::to_string_pretty(&s)?);
            } else {
                println!("mean {} over cycle {:?}", s.result.mean, s.result.cycle);
            }
        }
        Command::Evaluate(a) => {
            let r = cmd_evaluate(a)?;
            println!("{:<10} {:>16} {:>16}", "pass", "accuracy", "DI");
            for p in [&r.aggregate.benchmark, &r.aggregate.repaired] {
                println!(
                    "{:<10} {:>7.3} +- {:<6.3} {:>7.3} +- {:<6.3}",
                    p.pass.name(),
                    p.accuracy_mean,
                    p.accuracy_sd,
                    p.di_mean,
                    p.di_sd
                );
            }
            let d = a.output_dir.display();
            println!("wrote {d}/{REPORT_JSON}, {d}/{FOLDS_CSV}, {d}/{AGGREGATE_CSV}");
        }
        Command::Simulate(a) => {
            let ds = cmd_simulate(a)?;
            let (n0, n1) = ds.group_sizes();
            println!("{n0} + {n1} rows, {} features -> {}", ds.n_features(), a.output.display());
        }
        Command::Bench(a) => {
            let s = cmd_bench(a)?;
            let r = &s.result;
            println!("{:>5} {:>5} {:>5} {:>5} {:>14} {:>14} {:>9}", "n0", "n1", "k0", "k1", "recompute_s", "interpolate_s", "speedup");
            println!(
                "{:>5} {:>5} {:>5} {:>5} {:>14.6} {:>14.6} {:>9.1}",
                r.n0, r.n1, r.k0, r.k1, r.recompute_secs, r.interpolate_secs, r.speedup
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log_level).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
