//! `ams` — command-line front end for the aerial manipulation simulator.
//!
//! Subcommands: `simulate` (closed-loop scenario to CSV), `plan` (mission
//! files and sampled reference CSV), `fit` (rotor-map identification from
//! bench CSV), `mixer` (wrench allocation table). All outputs are plain text
//! and byte-deterministic for identical inputs. `AMS_LOG_LEVEL` (`quiet`,
//! `info`, `debug`) controls stderr chatter.

mod args;
mod commands;
mod log;

use std::process::ExitCode;

const USAGE: &str = "\
usage: ams <command> [options]

commands:
  simulate --scenario PATH --out PATH [--controller fbl|dflc|fmrlc]
           [--gains PATH] [--calibration PATH] [--seedless]
           [--dump-rulebases DIR] [--load-rulebases DIR]
      Run a closed-loop scenario and write the log CSV. The rule-base flags
      apply to the learning controller (warm starts and dumps).
  plan [--benchmark] [--segment CH:TARGET:START:DURATION]...
       [--payload MASS:PICK:PLACE] --out-mission PATH
       [--out-csv PATH] [--sample-dt S]
      Build a mission file and optionally a sampled reference CSV.
  fit --data PATH --out PATH
      Fit the rotor maps (speed^2, thrust, drag moment vs PWM) from bench CSV.
  mixer --thrust N [--tau1 NM] [--tau2 NM] [--tau3 NM] [--per-rotor]
      Allocate a wrench to rotor speeds and PWM commands.

environment:
  AMS_LOG_LEVEL   quiet | info (default) | debug
";

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let Some((command, rest)) = argv.split_first() else {
        eprint!("{USAGE}");
        return ExitCode::from(2);
    };
    let result = match command.as_str() {
        "simulate" => commands::simulate(rest),
        "plan" => commands::plan(rest),
        "fit" => commands::fit(rest),
        "mixer" => commands::mixer(rest),
        "--help" | "-h" | "help" => {
            print!("{USAGE}");
            return ExitCode::SUCCESS;
        }
        other => Err(format!("unknown command {other:?}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("ams {command}: {message}");
            ExitCode::from(2)
        }
    }
}
