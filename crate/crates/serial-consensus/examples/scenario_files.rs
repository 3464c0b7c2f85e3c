//! Drive the scenario runner from the library: parse a config, run it, and
//! read back the emitted artifacts. The same machinery backs the CLI.

use std::fs;
use std::path::Path;

use serial_consensus::scenario::{parse_config, run_scenario, RunOptions, PRESETS};

fn main() {
    let config = r#"
        # two designs side by side on a short horizon
        [demo_serial]
        topology = "ahead_path"
        n = [10, 40]
        controller = "serial"
        gains = { p1 = 2.0, p2 = 0.5 }
        horizon = 10.0
        dt = 0.05
        outputs = ["trajectory", "performance", "spectrum", "gnuplot"]

        [demo_conventional]
        topology = "ahead_path"
        n = [10, 40]
        controller = "conventional"
        gains = { r1 = 2.5, r0 = 1.0 }
        horizon = 10.0
        dt = 0.05
        outputs = ["performance"]
    "#;

    let out_dir = std::env::temp_dir().join("serial-consensus-demo");
    let _ = fs::remove_dir_all(&out_dir);
    let opts = RunOptions {
        out_dir: out_dir.clone(),
        dt: None,
        horizon: None,
    };

    let scenarios = parse_config(config, Path::new(".")).unwrap();
    for s in &scenarios {
        let outcome = run_scenario(s, &opts).unwrap();
        for row in &outcome.rows {
            println!("{}", row.summary_line());
        }
        for file in &outcome.files {
            println!("  wrote {}", file.display());
        }
    }

    let perf = fs::read_to_string(out_dir.join("demo_serial_performance.csv")).unwrap();
    println!("\nperformance CSV:\n{perf}");

    println!("bundled presets (runnable by name through the CLI):");
    for p in PRESETS {
        println!("  {:<20} {}", p.name, p.description);
    }
}
