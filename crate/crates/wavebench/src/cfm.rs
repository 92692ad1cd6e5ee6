//! Car-following dynamics: the generic second-order model interface, the
//! IDM acceleration law, and seeded actuation noise.
//!
//! Sign convention for the speed difference: `dv = v_leader - v_ego`, so
//! that the gap evolves as `s_dot = dv`. The IDM desired-gap interaction
//! term activates on the *closing* rate, which is `-dv` under this
//! convention (ego faster than leader). Both facts hold at once only with
//! this split, and every function in the crate follows it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WavebenchError};

/// Instantaneous inputs to a car-following model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfmInput {
    /// Space gap to the leader, front bumper to rear bumper (m). Must be > 0.
    pub gap: f64,
    /// Ego speed (m/s). Must be >= 0.
    pub speed: f64,
    /// Speed difference `v_leader - v_ego` (m/s).
    pub dv: f64,
}

impl CfmInput {
    pub fn new(gap: f64, speed: f64, dv: f64) -> Result<Self> {
        if !(gap > 0.0) {
            return Err(WavebenchError::DegenerateGap(gap));
        }
        if !(speed >= 0.0) {
            return Err(WavebenchError::InvalidParameter {
                field: "speed",
                message: format!("must be >= 0, got {speed}"),
            });
        }
        Ok(Self { gap, speed, dv })
    }

    /// Closing rate: positive when the ego approaches its leader.
    pub fn closing_rate(&self) -> f64 {
        -self.dv
    }
}

/// IDM parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdmParams {
    /// Maximum acceleration (m/s^2).
    pub a: f64,
    /// Comfortable deceleration (m/s^2).
    pub b: f64,
    /// Desired speed (m/s).
    pub v0: f64,
    /// Acceleration exponent.
    pub delta: f64,
    /// Time headway (s).
    #[serde(rename = "t")]
    pub t_headway: f64,
    /// Jam gap (m).
    pub s0: f64,
}

/// The fixed IDM parameter set used for all human drivers.
pub const PAPER_IDM: IdmParams = IdmParams {
    a: 1.3,
    b: 2.0,
    v0: 30.0,
    delta: 4.0,
    t_headway: 1.0,
    s0: 1.0,
};

impl IdmParams {
    pub fn validate(&self) -> Result<()> {
        let checks: [(&'static str, f64, bool); 6] = [
            ("a", self.a, self.a > 0.0),
            ("b", self.b, self.b > 0.0),
            ("v0", self.v0, self.v0 > 0.0),
            ("delta", self.delta, self.delta > 0.0),
            ("t", self.t_headway, self.t_headway >= 0.0),
            ("s0", self.s0, self.s0 > 0.0),
        ];
        for (field, value, ok) in checks {
            if !ok || !value.is_finite() {
                return Err(WavebenchError::InvalidParameter {
                    field,
                    message: format!("out of range: {value}"),
                });
            }
        }
        Ok(())
    }
}

/// Desired gap s*(v, dv) = s0 + v*T + max{0, v * closing}/(2*sqrt(a*b)).
pub fn idm_desired_gap(speed: f64, dv: f64, p: &IdmParams) -> f64 {
    let closing = -dv;
    p.s0 + speed * p.t_headway + (speed * closing).max(0.0) / (2.0 * (p.a * p.b).sqrt())
}

/// Raw IDM acceleration, no clamping. Errors on a degenerate gap.
pub fn idm_accel_raw(input: &CfmInput, p: &IdmParams) -> Result<f64> {
    if !(input.gap > 0.0) {
        return Err(WavebenchError::DegenerateGap(input.gap));
    }
    let s_star = idm_desired_gap(input.speed, input.dv, p);
    Ok(p.a * (1.0 - (input.speed / p.v0).powf(p.delta) - (s_star / input.gap).powi(2)))
}

/// IDM acceleration with the standstill clamp: a negative raw value at
/// v = 0 is replaced by zero (a stopped vehicle does not reverse).
pub fn idm_accel(input: &CfmInput, p: &IdmParams) -> Result<f64> {
    let raw = idm_accel_raw(input, p)?;
    Ok(if raw < 0.0 && input.speed == 0.0 {
        0.0
    } else {
        raw
    })
}

/// Smooth variant used for linearization: the interaction term keeps the
/// signed product `v * closing` instead of its positive part, removing the
/// kink at dv = 0 while agreeing with the raw model on the closing side.
pub fn idm_accel_smooth(input: &CfmInput, p: &IdmParams) -> Result<f64> {
    if !(input.gap > 0.0) {
        return Err(WavebenchError::DegenerateGap(input.gap));
    }
    let s_star = p.s0
        + input.speed * p.t_headway
        + (input.speed * input.closing_rate()) / (2.0 * (p.a * p.b).sqrt());
    Ok(p.a * (1.0 - (input.speed / p.v0).powf(p.delta) - (s_star / input.gap).powi(2)))
}

/// Gap at which the IDM yields zero acceleration at speed `v` with dv = 0:
/// s_eq(v) = (s0 + v*T) / sqrt(1 - (v/v0)^delta).
pub fn equilibrium_gap(speed: f64, p: &IdmParams) -> Result<f64> {
    if speed >= p.v0 {
        return Err(WavebenchError::NoEquilibrium { v: speed, v0: p.v0 });
    }
    if speed < 0.0 {
        return Err(WavebenchError::InvalidParameter {
            field: "speed",
            message: format!("must be >= 0, got {speed}"),
        });
    }
    Ok((p.s0 + speed * p.t_headway) / (1.0 - (speed / p.v0).powf(p.delta)).sqrt())
}

/// Inverse of [`equilibrium_gap`]: the equilibrium speed for a given gap,
/// found by bisection on the strictly increasing s_eq(v).
pub fn equilibrium_speed(gap: f64, p: &IdmParams) -> Result<f64> {
    if gap < p.s0 {
        return Err(WavebenchError::InvalidParameter {
            field: "gap",
            message: format!("below jam gap s0 = {}: {gap}", p.s0),
        });
    }
    let (mut lo, mut hi) = (0.0_f64, p.v0 * (1.0 - 1e-12));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if equilibrium_gap(mid, p)? < gap {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Zero-mean Gaussian actuation noise specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Standard deviation (m/s^2). 0 disables the noise.
    pub std_dev: f64,
    /// Seed of the noise stream.
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.std_dev >= 0.0) {
            return Err(WavebenchError::InvalidParameter {
                field: "noise.std_dev",
                message: format!("must be >= 0, got {}", self.std_dev),
            });
        }
        Ok(())
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// One noise draw, deterministic in (seed, stream position).
pub fn sample_accel_noise(spec: &NoiseSpec, stream_position: u64) -> f64 {
    if spec.std_dev == 0.0 {
        return 0.0;
    }
    let mixed = splitmix64(spec.seed ^ splitmix64(stream_position));
    let mut rng = ChaCha12Rng::seed_from_u64(mixed);
    let z: f64 = rng.sample(StandardNormal);
    spec.std_dev * z
}

/// Sequential view over the noise draws of one simulation.
///
/// Owned by a single simulation; transferable between threads but not
/// concurrently shared.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    spec: NoiseSpec,
    position: u64,
}

impl NoiseStream {
    pub fn new(spec: NoiseSpec) -> Self {
        Self { spec, position: 0 }
    }

    pub fn next_sample(&mut self) -> f64 {
        let v = sample_accel_noise(&self.spec, self.position);
        self.position += 1;
        v
    }

    pub fn position(&self) -> u64 {
        self.position
    }
}
