use std::process::ExitCode;

use rlsgp::harness::{parse_cli, run_experiment};

fn main() -> ExitCode {
    let spec = match parse_cli(std::env::args_os()) {
        Ok(spec) => spec,
        Err(e) => e.exit(),
    };
    eprintln!(
        "{}: {} cells x {} runs, seed {}, {} workers -> {}",
        spec.name,
        spec.cells.len(),
        spec.runs,
        spec.seed,
        spec.workers,
        spec.out.display()
    );
    match run_experiment(&spec) {
        Ok(summaries) => {
            println!("series\tsweep\tB\tT_mean\tT_std\tS_mean\tS_std");
            let show = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| format!("{v:.1}"));
            for (cell, s) in spec.cells.iter().zip(&summaries) {
                println!(
                    "{}\t{}\t{:.3}\t{}\t{}\t{}\t{}",
                    cell.series,
                    cell.sweep_value,
                    s.stuck_proportion,
                    show(s.runtime.mean),
                    show(s.runtime.std),
                    show(s.size.mean),
                    show(s.size.std)
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
