use std::process::ExitCode;

use irs_sim::cli::{parse_args, run, threads_from_env};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let spec = match parse_args(std::env::args_os()) {
        Ok(spec) => spec,
        Err(e) => e.exit(),
    };

    match threads_from_env() {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
        }
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }

    match run(&spec) {
        Ok(report) => {
            for p in &report.skipped {
                eprintln!("skipped UE at ({}, {}, {})", p.x, p.y, p.z);
            }
            for line in &report.lines {
                println!("{line}");
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
