use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use xns_cli::{audit_path, execute, report_json, write_json, Cli};
use xns_core::Error;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let out = match execute(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("xns11: {e}");
            println!("FAIL");
            return ExitCode::from(if matches!(e, Error::CheckFailed(_)) { 1 } else { 2 });
        }
    };
    print!("{}", out.report);
    for line in &out.summary {
        println!("{line}");
    }
    let report = report_json(&cli, &out, started.elapsed().as_secs_f64());
    if let Some(path) = &cli.config.json {
        if let Err(e) = write_json(path, &report) {
            eprintln!("xns11: {e}");
            return ExitCode::from(2);
        }
    }
    if let Some(audit) = &out.audit {
        match &cli.config.json {
            Some(path) => {
                if let Err(e) = write_json(&audit_path(path), audit) {
                    eprintln!("xns11: {e}");
                    return ExitCode::from(2);
                }
            }
            None => println!("{}", serde_json::to_string_pretty(audit).expect("serializable")),
        }
    }
    println!("{}", if out.report.all_pass() { "PASS" } else { "FAIL" });
    ExitCode::from(out.exit_code() as u8)
}
