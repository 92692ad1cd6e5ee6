//! Per-step trajectory records and their CSV form.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WavebenchError};
use crate::util::fmt_sig6;

/// Simulation phase a record belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Warmup,
    Measure,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Warmup => "warmup",
            Phase::Measure => "measure",
        }
    }
}

/// One vehicle at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub t: f64,
    pub veh_id: u64,
    /// `cav:<class>` or `human:<class>`.
    pub class: String,
    pub pos: f64,
    pub speed: f64,
    /// Noise-free commanded acceleration (fail-safed).
    pub accel_cmd: f64,
    /// Realized acceleration after noise and fail-safes.
    pub accel_real: f64,
    pub gap: Option<f64>,
    pub leader_id: Option<u64>,
    pub phase: Phase,
}

impl LogRecord {
    pub fn is_cav(&self) -> bool {
        self.class.starts_with("cav:")
    }

    /// Energy-model class name without the cav/human prefix.
    pub fn energy_class(&self) -> &str {
        self.class.split_once(':').map(|(_, c)| c).unwrap_or(&self.class)
    }
}

/// Fixed CSV header of a trajectory log.
pub const CSV_HEADER: &str =
    "t,veh_id,class,pos_m,speed_m_s,accel_cmd_m_s2,accel_real_m_s2,gap_m,leader_id,phase";

/// Full trajectory of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub dt: f64,
    pub records: Vec<LogRecord>,
}

impl TrajectoryLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * self.records.len() + 64);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let gap = r.gap.map(fmt_sig6).unwrap_or_default();
            let leader = r.leader_id.map(|id| id.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                fmt_sig6(r.t),
                r.veh_id,
                r.class,
                fmt_sig6(r.pos),
                fmt_sig6(r.speed),
                fmt_sig6(r.accel_cmd),
                fmt_sig6(r.accel_real),
                gap,
                leader,
                r.phase.as_str()
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        if header != CSV_HEADER {
            return Err(WavebenchError::Config(format!(
                "unexpected trajectory header: {header}"
            )));
        }
        let mut records = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 10 {
                return Err(WavebenchError::Config(format!(
                    "trajectory row {i}: expected 10 fields, got {}",
                    f.len()
                )));
            }
            let parse = |s: &str, name: &str| -> Result<f64> {
                s.parse()
                    .map_err(|_| WavebenchError::Config(format!("row {i}: bad {name}: {s}")))
            };
            records.push(LogRecord {
                t: parse(f[0], "t")?,
                veh_id: f[1]
                    .parse()
                    .map_err(|_| WavebenchError::Config(format!("row {i}: bad veh_id")))?,
                class: f[2].to_string(),
                pos: parse(f[3], "pos")?,
                speed: parse(f[4], "speed")?,
                accel_cmd: parse(f[5], "accel_cmd")?,
                accel_real: parse(f[6], "accel_real")?,
                gap: if f[7].is_empty() {
                    None
                } else {
                    Some(parse(f[7], "gap")?)
                },
                leader_id: if f[8].is_empty() {
                    None
                } else {
                    Some(
                        f[8].parse()
                            .map_err(|_| WavebenchError::Config(format!("row {i}: bad leader_id")))?,
                    )
                },
                phase: match f[9] {
                    "warmup" => Phase::Warmup,
                    "measure" => Phase::Measure,
                    other => {
                        return Err(WavebenchError::Config(format!("row {i}: bad phase {other}")))
                    }
                },
            });
        }
        let dt = records
            .windows(2)
            .find(|w| w[1].t > w[0].t)
            .map(|w| w[1].t - w[0].t)
            .unwrap_or(0.0);
        Ok(Self { dt, records })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(t: f64, id: u64) -> LogRecord {
        LogRecord {
            t,
            veh_id: id,
            class: "human:midsize_sedan".into(),
            pos: 12.345678,
            speed: 4.2,
            accel_cmd: -0.3,
            accel_real: -0.25,
            gap: Some(7.5),
            leader_id: Some(id + 1),
            phase: Phase::Measure,
        }
    }

    #[test]
    fn csv_round_trip() {
        let log = TrajectoryLog {
            dt: 0.4,
            records: vec![record(0.0, 1), record(0.4, 1)],
        };
        let csv = log.to_csv();
        assert!(csv.starts_with(CSV_HEADER));
        let back = TrajectoryLog::from_csv(&csv).unwrap();
        assert_eq!(back.records.len(), 2);
        assert_eq!(back.dt, 0.4);
        assert_eq!(back.records[0].veh_id, 1);
        assert_eq!(back.records[0].energy_class(), "midsize_sedan");
        assert!(!back.records[0].is_cav());
    }

    #[test]
    fn missing_leader_serializes_empty() {
        let mut r = record(0.0, 9);
        r.gap = None;
        r.leader_id = None;
        let log = TrajectoryLog {
            dt: 0.4,
            records: vec![r],
        };
        let back = TrajectoryLog::from_csv(&log.to_csv()).unwrap();
        assert_eq!(back.records[0].gap, None);
        assert_eq!(back.records[0].leader_id, None);
    }

    #[test]
    fn bad_header_rejected() {
        assert!(TrajectoryLog::from_csv("nope\n1,2,3").is_err());
    }
}
