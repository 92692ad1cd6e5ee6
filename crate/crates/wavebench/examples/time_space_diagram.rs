//! Time-space diagram export and wave-speed estimation.
//!
//! Runs an unstable ring scenario, bins the trajectory log into a
//! (time, space) grid of mean speeds, writes it as CSV, and estimates
//! the propagation speed of the congestion waves via cross-correlation
//! of successive time bins. Upstream-moving waves give a negative speed.
//!
//! Run with: `cargo run --example time_space_diagram`

use wavebench::cfm::{equilibrium_gap, PAPER_IDM};
use wavebench::energy::placeholder::placeholder_portfolio;
use wavebench::kpi::{export_tsd, wave_speed_estimate};
use wavebench::sim::{run, ScenarioConfig};

fn main() {
    let v_eq = 4.5;
    let n = 22;
    let spacing = equilibrium_gap(v_eq, &PAPER_IDM).unwrap() + 5.0;
    let mut config = ScenarioConfig::ring(n as f64 * spacing, n, 3);
    config.warmup = 720.0;
    config.horizon = 120.0;

    let portfolio = placeholder_portfolio();
    let result = run(&config, &portfolio).expect("simulation");

    let time_bin = 10.0; // s
    let space_bin = 20.0; // m
    let tsd = export_tsd(&result.log, &config, time_bin, space_bin).expect("tsd");

    let out = std::path::Path::new("out/example_tsd");
    std::fs::create_dir_all(out).expect("mkdir");
    std::fs::write(out.join("tsd.csv"), tsd.to_csv()).expect("write csv");
    std::fs::write(out.join("tsd_meta.json"), tsd.metadata_json()).expect("write meta");
    println!("wrote {}", out.join("tsd.csv").display());

    // Coarse ASCII rendering: one row per time bin, one char per space bin.
    println!("\nmean speed per cell ('#' = stopped .. '.' = fast):");
    for ti in 0..tsd.n_t {
        let row: String = (0..tsd.n_x)
            .map(|xi| match tsd.cell(ti, xi) {
                None => ' ',
                Some(v) if v < 1.0 => '#',
                Some(v) if v < 3.0 => '+',
                Some(v) if v < 6.0 => '-',
                Some(_) => '.',
            })
            .collect();
        println!("t={:4.0}s |{row}|", tsd.t0 + ti as f64 * time_bin);
    }

    let w = wave_speed_estimate(&tsd).expect("estimate");
    println!("\nestimated wave speed: {w:+.1} m/s (negative = upstream)");
}
