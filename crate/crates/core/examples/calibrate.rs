//! Seeded sweep over response amplitude and ignored-phase jitter.
//!
//! Prints mean accuracy per task and stimulus length over `SEEDS` seeds:
//!
//! ```text
//! cargo run --release --example calibrate -- 0.12,0.2 0.5,1.0 [seeds]
//! ```

use std::time::Instant;

use assr_bci::classify::Task;
use assr_bci::session::{run_sweep, PipelineConfig};

fn list(arg: Option<String>, default: &str) -> Vec<f64> {
    arg.as_deref()
        .unwrap_or(default)
        .split(',')
        .map(|s| s.parse().expect("number"))
        .collect()
}

fn main() {
    let mut args = std::env::args().skip(1);
    let amps = list(args.next(), "0.12");
    let jitters = list(args.next(), "1.0");
    let seeds: usize = args.next().map_or(10, |s| s.parse().expect("seed count"));
    for &amp in &amps {
        for &jitter in &jitters {
            let mut cfg = PipelineConfig::default();
            cfg.sim.assr_amplitude = amp;
            cfg.sim.ignored_phase_jitter = jitter;
            let start = Instant::now();
            let files = run_sweep(&cfg, 1, seeds).expect("sweep");
            for task in Task::ALL {
                let mut line = format!("amp={amp:<6} jitter={jitter:<5} {task:<10}");
                for ms in [500, 1000, 3000] {
                    let accs: Vec<f64> = files
                        .iter()
                        .flat_map(|f| &f.evaluations)
                        .filter(|e| e.task == task && e.condition.length_ms == ms)
                        .map(|e| e.accuracy)
                        .collect();
                    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
                    line += &format!(" {ms}ms={:.3}", mean);
                }
                println!("{line}");
            }
            println!("  ({:.1} s)", start.elapsed().as_secs_f64());
        }
    }
}
