//! Post-processing of trajectory logs: system mpg, network speed, realized
//! inflow, baseline-relative degradation flags, time-space diagrams, wave
//! propagation speed, and the leaderboard ranking.
//!
//! All KPIs are computed over measurement-phase records inside the metrics
//! segment only; warm-up and buffer edges contribute nothing. Fuel uses
//! the noise-free commanded acceleration.

use serde::{Deserialize, Serialize};

use crate::energy::{EnergyQuery, VehiclePortfolio};
use crate::error::{Result, WavebenchError};
use crate::sim::{Phase, RunResult, ScenarioConfig, TrajectoryLog};
use crate::util::{fmt_sig6, round_sig, METERS_PER_MILE, SECONDS_PER_HOUR};

/// Fraction a KPI may fall below baseline before it is flagged.
pub const DEGRADATION_THRESHOLD: f64 = 0.10;

/// Baseline-relative degradation flags.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KpiFlags {
    pub inflow_degraded: bool,
    pub speed_degraded: bool,
}

impl KpiFlags {
    pub fn any(&self) -> bool {
        self.inflow_degraded || self.speed_degraded
    }
}

/// System-level metrics of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    pub system_mpg: f64,
    /// Distance-weighted mean speed on the metrics segment (m/s).
    pub mean_network_speed: f64,
    /// Vehicles crossing the segment entry per hour.
    pub realized_inflow: f64,
    pub collision_count: usize,
    pub flags: KpiFlags,
    pub per_class_mpg: std::collections::BTreeMap<String, f64>,
    pub total_gallons: f64,
    pub total_miles: f64,
}

impl KpiReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| WavebenchError::Config(format!("kpi json: {e}")))
    }

    /// True when this run is eligible for the leaderboard.
    pub fn eligible(&self) -> bool {
        !self.flags.any() && self.collision_count == 0
    }
}

/// Compute KPIs for a completed run.
pub fn compute_kpis(
    result: &RunResult,
    portfolio: &VehiclePortfolio,
    baseline: Option<&KpiReport>,
) -> Result<KpiReport> {
    compute_kpis_from_log(
        &result.log,
        &result.config,
        result.collisions.len(),
        portfolio,
        baseline,
    )
}

/// Compute KPIs from a raw log plus its scenario description.
pub fn compute_kpis_from_log(
    log: &TrajectoryLog,
    config: &ScenarioConfig,
    collision_count: usize,
    portfolio: &VehiclePortfolio,
    baseline: Option<&KpiReport>,
) -> Result<KpiReport> {
    let (seg_lo, seg_hi) = config.geometry.metrics_segment();
    let dt = log.dt;
    if dt <= 0.0 {
        return Err(WavebenchError::EmptyMeasurementWindow);
    }

    let mut meters_total = 0.0;
    let mut seconds_total = 0.0;
    let mut per_class: std::collections::BTreeMap<String, (f64, f64)> = Default::default();
    let mut measured_any = false;

    for r in &log.records {
        if r.phase != Phase::Measure || r.pos < seg_lo || r.pos > seg_hi {
            continue;
        }
        measured_any = true;
        let model = portfolio.model_for(r.energy_class())?;
        let grams = model.fuel_rate(&EnergyQuery::flat(r.speed, r.accel_cmd)) * dt;
        let gallons = grams / model.grams_per_gallon;
        let miles = r.speed * dt / METERS_PER_MILE;
        meters_total += r.speed * dt;
        seconds_total += dt;
        let slot = per_class.entry(r.energy_class().to_string()).or_insert((0.0, 0.0));
        slot.0 += gallons;
        slot.1 += miles;
    }
    if !measured_any {
        return Err(WavebenchError::EmptyMeasurementWindow);
    }

    let total_gallons: f64 = per_class.values().map(|(g, _)| g).sum();
    let total_miles: f64 = per_class.values().map(|(_, m)| m).sum();
    let system_mpg = if total_gallons == 0.0 {
        f64::INFINITY
    } else {
        total_miles / total_gallons
    };
    let mean_network_speed = meters_total / seconds_total;
    let realized_inflow = entry_crossings(log, config) as f64 * SECONDS_PER_HOUR / config.horizon;

    let flags = match baseline {
        Some(b) => KpiFlags {
            inflow_degraded: realized_inflow < (1.0 - DEGRADATION_THRESHOLD) * b.realized_inflow,
            speed_degraded: mean_network_speed
                < (1.0 - DEGRADATION_THRESHOLD) * b.mean_network_speed,
        },
        None => KpiFlags::default(),
    };

    Ok(KpiReport {
        system_mpg,
        mean_network_speed,
        realized_inflow,
        collision_count,
        flags,
        per_class_mpg: per_class
            .into_iter()
            .map(|(k, (g, m))| (k, if g == 0.0 { f64::INFINITY } else { m / g }))
            .collect(),
        total_gallons,
        total_miles,
    })
}

/// Count measurement-phase crossings of the metrics-segment entry.
fn entry_crossings(log: &TrajectoryLog, config: &ScenarioConfig) -> usize {
    let (seg_lo, _) = config.geometry.metrics_segment();
    let ring = config.geometry.is_ring();
    let mut last_pos: std::collections::BTreeMap<u64, f64> = Default::default();
    let mut crossings = 0;
    for r in &log.records {
        if let Some(&prev) = last_pos.get(&r.veh_id) {
            if r.phase == Phase::Measure {
                let crossed = if ring {
                    // wrap event: position decreased
                    r.pos < prev
                } else {
                    prev < seg_lo && r.pos >= seg_lo
                };
                if crossed {
                    crossings += 1;
                }
            }
        }
        last_pos.insert(r.veh_id, r.pos);
    }
    crossings
}

/// Gridded mean-speed field over (time bin, space bin).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSpaceDiagram {
    pub t0: f64,
    pub x0: f64,
    pub time_bin: f64,
    pub space_bin: f64,
    pub n_t: usize,
    pub n_x: usize,
    /// Whether space wraps (ring geometry).
    pub wrap: bool,
    /// Row-major [t][x]: sum of speeds and sample count per cell.
    pub sum: Vec<f64>,
    pub count: Vec<u64>,
}

impl TimeSpaceDiagram {
    pub fn cell(&self, ti: usize, xi: usize) -> Option<f64> {
        let i = ti * self.n_x + xi;
        if self.count[i] == 0 {
            None
        } else {
            Some(self.sum[i] / self.count[i] as f64)
        }
    }

    /// CSV export: `t_bin,x_bin,mean_speed,count` (non-empty cells only).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_bin,x_bin,mean_speed,count\n");
        for ti in 0..self.n_t {
            for xi in 0..self.n_x {
                if let Some(mean) = self.cell(ti, xi) {
                    out.push_str(&format!(
                        "{},{},{},{}\n",
                        fmt_sig6(self.t0 + ti as f64 * self.time_bin),
                        fmt_sig6(self.x0 + xi as f64 * self.space_bin),
                        fmt_sig6(mean),
                        self.count[ti * self.n_x + xi]
                    ));
                }
            }
        }
        out
    }

    pub fn metadata_json(&self) -> String {
        serde_json::json!({
            "t0": self.t0,
            "x0": self.x0,
            "time_bin": self.time_bin,
            "space_bin": self.space_bin,
            "n_t": self.n_t,
            "n_x": self.n_x,
            "wrap": self.wrap,
        })
        .to_string()
    }
}

/// Bin measurement-phase records on the metrics segment into a
/// time-space mean-speed field.
pub fn export_tsd(
    log: &TrajectoryLog,
    config: &ScenarioConfig,
    time_bin: f64,
    space_bin: f64,
) -> Result<TimeSpaceDiagram> {
    if !(time_bin > 0.0) || !(space_bin > 0.0) {
        return Err(WavebenchError::InvalidParameter {
            field: "bins",
            message: "time and space bins must be > 0".into(),
        });
    }
    let (seg_lo, seg_hi) = config.geometry.metrics_segment();
    let t0 = config.warmup;
    let t_end = config.warmup + config.horizon;
    let n_t = ((t_end - t0) / time_bin).ceil() as usize;
    let n_x = ((seg_hi - seg_lo) / space_bin).ceil() as usize;
    let mut tsd = TimeSpaceDiagram {
        t0,
        x0: seg_lo,
        time_bin,
        space_bin,
        n_t,
        n_x,
        wrap: config.geometry.is_ring(),
        sum: vec![0.0; n_t * n_x],
        count: vec![0; n_t * n_x],
    };
    for r in &log.records {
        if r.phase != Phase::Measure || r.pos < seg_lo || r.pos > seg_hi {
            continue;
        }
        let ti = (((r.t - t0) / time_bin).floor() as usize).min(n_t - 1);
        let xi = (((r.pos - seg_lo) / space_bin).floor() as usize).min(n_x - 1);
        tsd.sum[ti * n_x + xi] += r.speed;
        tsd.count[ti * n_x + xi] += 1;
    }
    Ok(tsd)
}

/// Estimate the propagation speed of the dominant speed pattern by
/// maximizing the space-time cross-correlation between successive time
/// bins. Negative values indicate upstream-moving (backward) waves.
pub fn wave_speed_estimate(tsd: &TimeSpaceDiagram) -> Result<f64> {
    if tsd.n_t < 10 {
        return Err(WavebenchError::TooFewTimeBins {
            required: 10,
            got: tsd.n_t,
        });
    }
    let cells: Vec<Option<f64>> = (0..tsd.n_t * tsd.n_x)
        .map(|i| {
            if tsd.count[i] == 0 {
                None
            } else {
                Some(tsd.sum[i] / tsd.count[i] as f64)
            }
        })
        .collect();
    let filled: Vec<f64> = cells.iter().filter_map(|c| *c).collect();
    if filled.is_empty() {
        return Err(WavebenchError::InsufficientStructure);
    }
    let mean = filled.iter().sum::<f64>() / filled.len() as f64;
    let var = filled.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / filled.len() as f64;
    if var < 1e-9 {
        return Err(WavebenchError::InsufficientStructure);
    }

    let quantum = tsd.space_bin / tsd.time_bin;
    let k_max = ((40.0 / quantum).floor() as i64).clamp(1, tsd.n_x as i64 - 1);
    let at = |ti: usize, xi: i64| -> Option<f64> {
        let xi = if tsd.wrap {
            xi.rem_euclid(tsd.n_x as i64)
        } else if xi < 0 || xi >= tsd.n_x as i64 {
            return None;
        } else {
            xi
        };
        cells[ti * tsd.n_x + xi as usize].map(|v| v - mean)
    };
    let mut best = (0i64, f64::NEG_INFINITY);
    for k in -k_max..=k_max {
        let mut sum = 0.0;
        let mut n = 0u64;
        for ti in 0..tsd.n_t - 1 {
            for xi in 0..tsd.n_x as i64 {
                if let (Some(a), Some(b)) = (at(ti, xi), at(ti + 1, xi + k)) {
                    sum += a * b;
                    n += 1;
                }
            }
        }
        if n > 0 {
            let score = sum / n as f64;
            if score > best.1 {
                best = (k, score);
            }
        }
    }
    Ok(best.0 as f64 * quantum)
}

/// One leaderboard row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub rank: usize,
    pub label: String,
    pub eligible: bool,
    pub report: KpiReport,
}

/// Rank runs by system mpg (descending). Ties at 4 significant digits
/// break on network speed, then label. Flagged or colliding runs stay in
/// the table but are marked ineligible.
pub fn rank_runs(reports: &[(String, KpiReport)]) -> Vec<LeaderboardEntry> {
    let mut rows: Vec<(String, KpiReport)> = reports.to_vec();
    rows.sort_by(|a, b| {
        let mpg_a = round_sig(a.1.system_mpg, 4);
        let mpg_b = round_sig(b.1.system_mpg, 4);
        mpg_b
            .partial_cmp(&mpg_a)
            .unwrap()
            .then(
                b.1.mean_network_speed
                    .partial_cmp(&a.1.mean_network_speed)
                    .unwrap(),
            )
            .then(a.0.cmp(&b.0))
    });
    rows.into_iter()
        .enumerate()
        .map(|(i, (label, report))| LeaderboardEntry {
            rank: i + 1,
            eligible: report.eligible(),
            label,
            report,
        })
        .collect()
}

/// Plain-text leaderboard table.
pub fn leaderboard_table(entries: &[LeaderboardEntry]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<4} {:<28} {:>10} {:>12} {:>12} {:>6} {:>10}\n",
        "rank", "label", "mpg", "speed_m_s", "inflow_vph", "coll", "eligible"
    ));
    for e in entries {
        out.push_str(&format!(
            "{:<4} {:<28} {:>10} {:>12} {:>12} {:>6} {:>10}\n",
            e.rank,
            e.label,
            fmt_sig6(e.report.system_mpg),
            fmt_sig6(e.report.mean_network_speed),
            fmt_sig6(e.report.realized_inflow),
            e.report.collision_count,
            if e.eligible { "yes" } else { "NO" }
        ));
    }
    out
}

pub fn leaderboard_json(entries: &[LeaderboardEntry]) -> String {
    serde_json::to_string_pretty(entries).expect("leaderboard serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::placeholder::placeholder_portfolio;
    use crate::energy::{
        gallons_per_hour_to_grams_per_second, FeasibilityBoundary, PolyEnergyModel,
        PortfolioEntry, GRAMS_PER_GALLON_GASOLINE,
    };
    use crate::sim::{Geometry, LogRecord, Phase, ScenarioConfig, TrajectoryLog};

    fn constant_rate_portfolio(gal_per_hr: f64) -> VehiclePortfolio {
        let model = PolyEnergyModel {
            class_name: "flat".into(),
            unit: "g_per_s".into(),
            beta: gallons_per_hour_to_grams_per_second(gal_per_hr, GRAMS_PER_GALLON_GASOLINE),
            c: [0.0; 4],
            p: [0.0; 3],
            q: [0.0; 2],
            boundary: FeasibilityBoundary::constant(3.0),
            grams_per_gallon: GRAMS_PER_GALLON_GASOLINE,
        };
        let mut cav = model.clone();
        cav.class_name = "rav4".into();
        VehiclePortfolio::new(
            vec![
                PortfolioEntry {
                    class_name: "flat".into(),
                    model,
                    share: 1.0,
                },
                PortfolioEntry {
                    class_name: "rav4".into(),
                    model: cav,
                    share: 0.0,
                },
            ],
            "rav4",
        )
        .unwrap()
    }

    fn synthetic_config() -> ScenarioConfig {
        let mut c = ScenarioConfig::baseline_stretch(1);
        c.geometry = Geometry::Stretch {
            length: 100_000.0,
            inflow: 1000.0,
            bottleneck_speed: 30.0,
            upstream_buffer: 0.0,
            downstream_buffer: 0.0,
        };
        c.warmup = 0.0;
        c.horizon = 3600.0;
        c
    }

    fn constant_speed_log(v: f64, seconds: usize) -> TrajectoryLog {
        let records = (0..seconds)
            .map(|i| LogRecord {
                t: i as f64,
                veh_id: 1,
                class: "human:flat".into(),
                pos: 1.0 + v * i as f64,
                speed: v,
                accel_cmd: 0.0,
                accel_real: 0.0,
                gap: None,
                leader_id: None,
                phase: Phase::Measure,
            })
            .collect();
        TrajectoryLog { dt: 1.0, records }
    }

    #[test]
    fn kpi_unit_arithmetic() {
        let portfolio = constant_rate_portfolio(0.5);
        let config = synthetic_config();
        let log = constant_speed_log(13.4112, 3600);
        let report = compute_kpis_from_log(&log, &config, 0, &portfolio, None).unwrap();
        assert!((report.system_mpg - 60.0).abs() < 1e-9);
        assert!((report.mean_network_speed - 13.4112).abs() < 1e-12);
    }

    #[test]
    fn degradation_flag_threshold() {
        let portfolio = constant_rate_portfolio(0.5);
        let config = synthetic_config();
        let base_log = constant_speed_log(4.0, 3600);
        let baseline = compute_kpis_from_log(&base_log, &config, 0, &portfolio, None).unwrap();
        let run_log = constant_speed_log(3.55, 3600); // 11.25% drop
        let report =
            compute_kpis_from_log(&run_log, &config, 0, &portfolio, Some(&baseline)).unwrap();
        assert!(report.flags.speed_degraded);
        let ok_log = constant_speed_log(3.65, 3600); // 8.75% drop
        let report2 =
            compute_kpis_from_log(&ok_log, &config, 0, &portfolio, Some(&baseline)).unwrap();
        assert!(!report2.flags.speed_degraded);
    }

    #[test]
    fn empty_measurement_window_rejected() {
        let portfolio = constant_rate_portfolio(0.5);
        let config = synthetic_config();
        let mut log = constant_speed_log(5.0, 100);
        for r in &mut log.records {
            r.phase = Phase::Warmup;
        }
        assert!(matches!(
            compute_kpis_from_log(&log, &config, 0, &portfolio, None),
            Err(WavebenchError::EmptyMeasurementWindow)
        ));
    }

    #[test]
    fn kpis_match_independent_recompute() {
        // run a small noisy ring, then recompute mpg with a one-pass fold
        // straight over the CSV text
        let portfolio = placeholder_portfolio();
        let mut config = ScenarioConfig::ring(242.0, 22, 17);
        config.warmup = 60.0;
        config.horizon = 120.0;
        let result = crate::sim::run(&config, &portfolio).unwrap();
        let report = compute_kpis(&result, &portfolio, None).unwrap();

        let csv = result.log.to_csv();
        let mut gallons = 0.0;
        let mut miles = 0.0;
        let mut meters = 0.0;
        let mut seconds = 0.0;
        for line in csv.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            if f[9] != "measure" {
                continue;
            }
            let class = f[2].split(':').nth(1).unwrap();
            let speed: f64 = f[4].parse().unwrap();
            let a_cmd: f64 = f[5].parse().unwrap();
            let model = portfolio.model_for(class).unwrap();
            gallons += model.fuel_rate(&EnergyQuery::flat(speed, a_cmd)) * 0.4
                / model.grams_per_gallon;
            miles += speed * 0.4 / METERS_PER_MILE;
            meters += speed * 0.4;
            seconds += 0.4;
        }
        // CSV rounds to 6 significant digits, hence the loose tolerance
        assert!(
            (report.system_mpg - miles / gallons).abs() / report.system_mpg < 1e-4,
            "{} vs {}",
            report.system_mpg,
            miles / gallons
        );
        assert!((report.mean_network_speed - meters / seconds).abs() < 1e-3);
        assert!((report.total_miles - miles).abs() / miles < 1e-4);
    }

    #[test]
    fn warmup_and_buffers_contribute_nothing() {
        let portfolio = placeholder_portfolio();
        let mut config = ScenarioConfig::baseline_stretch(4);
        config.warmup = 60.0;
        config.horizon = 120.0;
        let result = crate::sim::run(&config, &portfolio).unwrap();
        let report = compute_kpis(&result, &portfolio, None).unwrap();

        // truncate the log externally to the measurement window and segment
        let (lo, hi) = config.geometry.metrics_segment();
        let truncated = TrajectoryLog {
            dt: result.log.dt,
            records: result
                .log
                .records
                .iter()
                .filter(|r| r.phase == Phase::Measure && r.pos >= lo && r.pos <= hi)
                .cloned()
                .collect(),
        };
        let report2 = compute_kpis_from_log(&truncated, &config, 0, &portfolio, None).unwrap();
        assert_eq!(report.system_mpg, report2.system_mpg);
        assert_eq!(report.mean_network_speed, report2.mean_network_speed);
    }

    #[test]
    fn tsd_uniform_flow() {
        let portfolio = constant_rate_portfolio(0.5);
        let _ = &portfolio;
        let config = synthetic_config();
        let log = constant_speed_log(7.0, 600);
        let tsd = export_tsd(&log, &config, 30.0, 100.0).unwrap();
        for ti in 0..tsd.n_t {
            for xi in 0..tsd.n_x {
                if let Some(v) = tsd.cell(ti, xi) {
                    assert!((v - 7.0).abs() < 1e-12);
                }
            }
        }
        assert!(matches!(
            wave_speed_estimate(&tsd),
            Err(WavebenchError::InsufficientStructure)
        ));
    }

    #[test]
    fn tsd_single_vehicle_populates_trajectory_cells() {
        let config = synthetic_config();
        let log = constant_speed_log(10.0, 600);
        let tsd = export_tsd(&log, &config, 60.0, 600.0).unwrap();
        let total: u64 = tsd.count.iter().sum();
        assert_eq!(total, 600);
        // the vehicle moves 600 m per time bin: exactly one diagonal cell each
        for ti in 0..tsd.n_t {
            let filled: Vec<usize> =
                (0..tsd.n_x).filter(|&xi| tsd.cell(ti, xi).is_some()).collect();
            assert!(filled.len() <= 2, "bin {ti}: {filled:?}");
        }
    }

    #[test]
    fn tsd_cell_means_are_lossless() {
        let portfolio = placeholder_portfolio();
        let mut config = ScenarioConfig::ring(242.0, 22, 29);
        config.warmup = 30.0;
        config.horizon = 240.0;
        let result = crate::sim::run(&config, &portfolio).unwrap();
        let tsd = export_tsd(&result.log, &config, 10.0, 20.0).unwrap();
        // spot-check cells against raw samples
        let mut checked = 0;
        'outer: for ti in 0..tsd.n_t {
            for xi in 0..tsd.n_x {
                if let Some(mean) = tsd.cell(ti, xi) {
                    let t_lo = tsd.t0 + ti as f64 * 10.0;
                    let x_lo = tsd.x0 + xi as f64 * 20.0;
                    let samples: Vec<f64> = result
                        .log
                        .records
                        .iter()
                        .filter(|r| {
                            r.phase == Phase::Measure
                                && r.t >= t_lo
                                && r.t < t_lo + 10.0
                                && r.pos >= x_lo
                                && r.pos < x_lo + 20.0
                        })
                        .map(|r| r.speed)
                        .collect();
                    let raw_mean = samples.iter().sum::<f64>() / samples.len() as f64;
                    assert!((mean - raw_mean).abs() < 1e-9);
                    checked += 1;
                    if checked > 100 {
                        break 'outer;
                    }
                }
            }
        }
        assert!(checked > 50);
    }

    fn synthetic_band_tsd(speed: f64, mirror: bool) -> TimeSpaceDiagram {
        // band of low speed moving at `speed` m/s through a 5 m/s background
        let (n_t, n_x) = (40, 50);
        let (time_bin, space_bin) = (5.0, 10.0);
        let mut tsd = TimeSpaceDiagram {
            t0: 0.0,
            x0: 0.0,
            time_bin,
            space_bin,
            n_t,
            n_x,
            wrap: true,
            sum: vec![0.0; n_t * n_x],
            count: vec![0; n_t * n_x],
        };
        for ti in 0..n_t {
            let center = (200.0 + speed * ti as f64 * time_bin).rem_euclid(n_x as f64 * space_bin);
            for xi in 0..n_x {
                let mut x = (xi as f64 + 0.5) * space_bin;
                if mirror {
                    x = n_x as f64 * space_bin - x;
                }
                let mut d = (x - center).abs();
                d = d.min(n_x as f64 * space_bin - d);
                let v = if d < 30.0 { 1.0 } else { 5.0 };
                tsd.sum[ti * n_x + xi] = v;
                tsd.count[ti * n_x + xi] = 1;
            }
        }
        tsd
    }

    #[test]
    fn wave_speed_recovers_synthetic_band() {
        let tsd = synthetic_band_tsd(-4.0, false);
        let est = wave_speed_estimate(&tsd).unwrap();
        let quantum = tsd.space_bin / tsd.time_bin; // 2 m/s
        assert!((est - (-4.0)).abs() <= 0.5 * quantum + 1e-9, "est {est}");
    }

    #[test]
    fn wave_speed_negates_under_mirror() {
        let fwd = wave_speed_estimate(&synthetic_band_tsd(-4.0, false)).unwrap();
        let rev = wave_speed_estimate(&synthetic_band_tsd(-4.0, true)).unwrap();
        assert!((fwd + rev).abs() <= 1e-9, "{fwd} vs {rev}");
    }

    fn report_with(mpg: f64, speed: f64, flags: KpiFlags, collisions: usize) -> KpiReport {
        KpiReport {
            system_mpg: mpg,
            mean_network_speed: speed,
            realized_inflow: 1500.0,
            collision_count: collisions,
            flags,
            per_class_mpg: Default::default(),
            total_gallons: 1.0,
            total_miles: mpg,
        }
    }

    #[test]
    fn ranking_by_mpg() {
        let rows = vec![
            ("a".to_string(), report_with(25.0, 4.0, KpiFlags::default(), 0)),
            ("b".to_string(), report_with(30.0, 4.0, KpiFlags::default(), 0)),
        ];
        let lb = rank_runs(&rows);
        assert_eq!(lb[0].label, "b");
        assert!(lb[0].eligible);
    }

    #[test]
    fn flagged_best_run_is_listed_first_but_ineligible() {
        let flagged = KpiFlags {
            inflow_degraded: true,
            speed_degraded: false,
        };
        let rows = vec![
            ("good".to_string(), report_with(25.0, 4.0, KpiFlags::default(), 0)),
            ("fast".to_string(), report_with(30.0, 4.0, flagged, 0)),
        ];
        let lb = rank_runs(&rows);
        assert_eq!(lb[0].label, "fast");
        assert!(!lb[0].eligible);
        assert!(lb[1].eligible);
    }

    #[test]
    fn tie_break_on_speed_then_label() {
        let rows = vec![
            ("zeta".to_string(), report_with(25.0004, 4.0, KpiFlags::default(), 0)),
            ("alpha".to_string(), report_with(25.0001, 4.0, KpiFlags::default(), 0)),
            ("mid".to_string(), report_with(25.0002, 5.0, KpiFlags::default(), 0)),
        ];
        // all equal to 4 significant digits (25.00)
        let lb = rank_runs(&rows);
        assert_eq!(lb[0].label, "mid"); // faster
        assert_eq!(lb[1].label, "alpha"); // then lexicographic
        assert_eq!(lb[2].label, "zeta");
    }

    #[test]
    fn collision_makes_ineligible() {
        let rows = vec![(
            "crash".to_string(),
            report_with(40.0, 4.0, KpiFlags::default(), 2),
        )];
        assert!(!rank_runs(&rows)[0].eligible);
    }
}
