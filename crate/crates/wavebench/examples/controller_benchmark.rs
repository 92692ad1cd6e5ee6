//! Flow smoothing with a sparse controller on the open stretch.
//!
//! Runs the congested open-stretch baseline (slow bottleneck zone,
//! inflow above bottleneck capacity), then the same scenario with 10% of
//! vehicles running the IDM-with-relaxation controller, and compares the
//! fuel-economy and throughput KPIs side by side.
//!
//! Run with: `cargo run --example controller_benchmark`
//! (takes a couple of minutes: two full 32-minute traffic scenarios)

use wavebench::control::ControllerSpec;
use wavebench::energy::placeholder::placeholder_portfolio;
use wavebench::kpi::{compute_kpis, KpiReport};
use wavebench::sim::{run, ScenarioConfig};

fn show(label: &str, r: &KpiReport) {
    println!(
        "{label:<12} mpg {:6.2}  speed {:5.2} m/s  inflow {:6.0} veh/hr  collisions {}  flags {}",
        r.system_mpg,
        r.mean_network_speed,
        r.realized_inflow,
        r.collision_count,
        if r.flags.any() { "YES" } else { "none" }
    );
}

fn main() {
    let portfolio = placeholder_portfolio();
    let seed = 1;

    println!("running baseline...");
    let base_cfg = ScenarioConfig::baseline_stretch(seed);
    let base_run = run(&base_cfg, &portfolio).expect("baseline run");
    let base = compute_kpis(&base_run, &portfolio, None).expect("baseline kpis");

    println!("running controlled scenario...");
    let mut cfg = base_cfg.clone();
    cfg.penetration = 0.10;
    // Target the baseline's own mean speed; gamma sets the gap-relaxation
    // strength that absorbs waves instead of passing them upstream.
    cfg.controller = Some(ControllerSpec::idm_relaxation(base.mean_network_speed, 0.5));
    let ctrl_run = run(&cfg, &portfolio).expect("controlled run");
    let ctrl = compute_kpis(&ctrl_run, &portfolio, Some(&base)).expect("controlled kpis");

    println!();
    show("baseline", &base);
    show("idm+r @10%", &ctrl);
    println!(
        "\nfuel economy change: {:+.1}%  (eligible for leaderboard: {})",
        100.0 * (ctrl.system_mpg / base.system_mpg - 1.0),
        ctrl.eligible()
    );
}
