//! Vehicle fuel-consumption models: the capped degree-3 bivariate
//! polynomial fuel-rate form, its feasibility boundary, constrained
//! least-squares fitting, the vehicle portfolio, and fuel/mpg aggregation
//! over trajectories.
//!
//! The canonical internal fuel-rate unit is grams per second; each model
//! declares a grams-per-gallon conversion used when reporting gallons and
//! mpg (2839 g/gal gasoline by default, 3192 g/gal for diesel).

pub mod fit;
pub mod placeholder;

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WavebenchError};
use crate::util::{METERS_PER_MILE, SECONDS_PER_HOUR};

pub use fit::{fit_poly, FitOutcome};

/// Grams of gasoline per US gallon.
pub const GRAMS_PER_GALLON_GASOLINE: f64 = 2839.0;
/// Grams of diesel per US gallon.
pub const GRAMS_PER_GALLON_DIESEL: f64 = 3192.0;

fn default_grams_per_gallon() -> f64 {
    GRAMS_PER_GALLON_GASOLINE
}

/// Maximum feasible acceleration as a piecewise-linear function of speed.
///
/// Queries outside the tabulated speed range clamp to the end values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityBoundary {
    pub v: Vec<f64>,
    pub g: Vec<f64>,
}

impl FeasibilityBoundary {
    pub fn new(v: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        let b = Self { v, g };
        b.validate()?;
        Ok(b)
    }

    /// A constant boundary, independent of speed.
    pub fn constant(a_max: f64) -> Self {
        Self {
            v: vec![0.0],
            g: vec![a_max],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.v.is_empty() || self.v.len() != self.g.len() {
            return Err(WavebenchError::InvalidParameter {
                field: "boundary",
                message: "v and g must be non-empty and of equal length".into(),
            });
        }
        if self.v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(WavebenchError::InvalidParameter {
                field: "boundary.v",
                message: "speed knots must be strictly increasing".into(),
            });
        }
        if self.g.iter().chain(self.v.iter()).any(|x| !x.is_finite()) {
            return Err(WavebenchError::InvalidParameter {
                field: "boundary",
                message: "knots must be finite".into(),
            });
        }
        Ok(())
    }

    /// g(v) by linear interpolation.
    pub fn eval(&self, v: f64) -> f64 {
        let n = self.v.len();
        if v <= self.v[0] {
            return self.g[0];
        }
        if v >= self.v[n - 1] {
            return self.g[n - 1];
        }
        let i = self.v.partition_point(|&x| x <= v) - 1;
        let t = (v - self.v[i]) / (self.v[i + 1] - self.v[i]);
        self.g[i] + t * (self.g[i + 1] - self.g[i])
    }
}

/// Capped degree-3 bivariate polynomial fuel-rate model:
///
/// `f(v,a) = max{ C0 + C1 v + C2 v^2 + C3 v^3 + p0 a + p1 a v + p2 a v^2
///              + q0 a+^2 + q1 a+^2 v,  beta }` with `a+ = max{a, 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyEnergyModel {
    pub class_name: String,
    /// Unit tag of the rate returned by [`Self::fuel_rate`].
    pub unit: String,
    /// Minimum fuel rate (the cap floor), same unit.
    pub beta: f64,
    #[serde(rename = "C")]
    pub c: [f64; 4],
    pub p: [f64; 3],
    pub q: [f64; 2],
    pub boundary: FeasibilityBoundary,
    #[serde(default = "default_grams_per_gallon")]
    pub grams_per_gallon: f64,
}

/// Point query into an energy model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyQuery {
    /// Speed (m/s), >= 0.
    pub v: f64,
    /// Noise-free commanded acceleration (m/s^2).
    pub a: f64,
    /// Road grade (radians). Accepted for interface compatibility but
    /// ignored by the polynomial model form f(v, a).
    pub theta: f64,
}

impl EnergyQuery {
    pub fn flat(v: f64, a: f64) -> Self {
        Self { v, a, theta: 0.0 }
    }
}

impl PolyEnergyModel {
    pub fn validate(&self) -> Result<()> {
        let coeffs = self.c.iter().chain(self.p.iter()).chain(self.q.iter());
        for (i, &x) in coeffs.enumerate() {
            if !(x >= 0.0) || !x.is_finite() {
                return Err(WavebenchError::InvalidParameter {
                    field: "coefficients",
                    message: format!("coefficient {i} must be >= 0, got {x}"),
                });
            }
        }
        if !(self.beta >= 0.0) {
            return Err(WavebenchError::InvalidParameter {
                field: "beta",
                message: format!("must be >= 0, got {}", self.beta),
            });
        }
        if !(self.grams_per_gallon > 0.0) {
            return Err(WavebenchError::InvalidParameter {
                field: "grams_per_gallon",
                message: format!("must be > 0, got {}", self.grams_per_gallon),
            });
        }
        self.boundary.validate()
    }

    /// The uncapped polynomial value.
    pub fn poly(&self, v: f64, a: f64) -> f64 {
        let ap = a.max(0.0);
        let ap2 = ap * ap;
        self.c[0]
            + self.c[1] * v
            + self.c[2] * v * v
            + self.c[3] * v * v * v
            + self.p[0] * a
            + self.p[1] * a * v
            + self.p[2] * a * v * v
            + self.q[0] * ap2
            + self.q[1] * ap2 * v
    }

    /// Fuel rate in the model's unit; the cap floor `beta` always applies.
    pub fn fuel_rate(&self, q: &EnergyQuery) -> f64 {
        self.poly(q.v, q.a).max(self.beta)
    }

    /// Whether (v, a) lies inside the feasibility region (boundary inclusive).
    pub fn is_feasible(&self, v: f64, a: f64) -> bool {
        a <= self.boundary.eval(v)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(s)
            .map_err(|e| WavebenchError::Config(format!("model json: {e}")))?;
        model.validate()?;
        Ok(model)
    }
}

/// Totals of one trajectory under one model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuelSummary {
    pub gallons: f64,
    pub miles: f64,
    /// `miles / gallons`; +infinity when no fuel was burned.
    pub mpg: f64,
}

/// Integrate fuel and distance over a uniformly sampled trajectory of
/// `(t, v, a_command)` triples. The acceleration must be the noise-free
/// commanded value.
pub fn trajectory_fuel(model: &PolyEnergyModel, trajectory: &[(f64, f64, f64)]) -> Result<FuelSummary> {
    if trajectory.len() < 2 {
        return Ok(FuelSummary {
            gallons: 0.0,
            miles: 0.0,
            mpg: f64::INFINITY,
        });
    }
    let dt = trajectory[1].0 - trajectory[0].0;
    if !(dt > 0.0) {
        return Err(WavebenchError::NonUniformTimestamps {
            index: 1,
            observed: dt,
            expected: f64::NAN,
        });
    }
    let mut grams = 0.0;
    let mut meters = 0.0;
    for (i, w) in trajectory.windows(2).enumerate() {
        let step = w[1].0 - w[0].0;
        if (step - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(WavebenchError::NonUniformTimestamps {
                index: i + 1,
                observed: step,
                expected: dt,
            });
        }
    }
    for &(_, v, a) in trajectory {
        grams += model.fuel_rate(&EnergyQuery::flat(v, a)) * dt;
        meters += v * dt;
    }
    let gallons = grams / model.grams_per_gallon;
    let miles = meters / METERS_PER_MILE;
    let mpg = if gallons == 0.0 {
        f64::INFINITY
    } else {
        miles / gallons
    };
    Ok(FuelSummary { gallons, miles, mpg })
}

/// One vehicle class in the portfolio.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioEntry {
    pub class_name: String,
    pub model: PolyEnergyModel,
    /// Human-vehicle share of this class; 0 for the CAV-only class.
    pub share: f64,
}

/// The set of energy models in play plus the human-class mix.
#[derive(Debug, Clone, PartialEq)]
pub struct VehiclePortfolio {
    pub entries: Vec<PortfolioEntry>,
    /// Class name CAVs are mapped to.
    pub cav_class: String,
}

/// On-disk portfolio schema: a JSON list of {class_name, model_file, share}.
#[derive(Debug, Serialize, Deserialize)]
struct PortfolioFileEntry {
    class_name: String,
    model_file: String,
    share: f64,
}

impl VehiclePortfolio {
    pub fn new(entries: Vec<PortfolioEntry>, cav_class: &str) -> Result<Self> {
        let p = Self {
            entries,
            cav_class: cav_class.to_string(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(WavebenchError::InvalidParameter {
                field: "portfolio",
                message: "no entries".into(),
            });
        }
        let share_sum: f64 = self.entries.iter().map(|e| e.share).sum();
        if (share_sum - 1.0).abs() > 1e-9 {
            return Err(WavebenchError::InvalidParameter {
                field: "portfolio.share",
                message: format!("human shares must sum to 1.0, got {share_sum}"),
            });
        }
        if self.entries.iter().any(|e| e.share < 0.0) {
            return Err(WavebenchError::InvalidParameter {
                field: "portfolio.share",
                message: "shares must be >= 0".into(),
            });
        }
        self.model_for(&self.cav_class)?;
        for e in &self.entries {
            e.model.validate()?;
        }
        Ok(())
    }

    pub fn model_for(&self, class_name: &str) -> Result<&PolyEnergyModel> {
        self.entries
            .iter()
            .find(|e| e.class_name == class_name)
            .map(|e| &e.model)
            .ok_or_else(|| WavebenchError::UnknownClass(class_name.to_string()))
    }

    /// Draw a human class by share; deterministic for a seeded rng.
    pub fn draw_human_class<R: Rng>(&self, rng: &mut R) -> &str {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for e in &self.entries {
            acc += e.share;
            if u < acc {
                return &e.class_name;
            }
        }
        // floating-point slack: fall back to the last share-bearing class
        self.entries
            .iter()
            .rev()
            .find(|e| e.share > 0.0)
            .map(|e| e.class_name.as_str())
            .unwrap_or(&self.entries[0].class_name)
    }

    /// Load a portfolio file, resolving model files relative to its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let raw: Vec<PortfolioFileEntry> = serde_json::from_str(&text)
            .map_err(|e| WavebenchError::Config(format!("portfolio json: {e}")))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let mut entries = Vec::new();
        let mut cav_class = String::from("rav4");
        for r in raw {
            let model_text = std::fs::read_to_string(base.join(&r.model_file))?;
            let model = PolyEnergyModel::from_json(&model_text)?;
            if r.share == 0.0 {
                cav_class = r.class_name.clone();
            }
            entries.push(PortfolioEntry {
                class_name: r.class_name,
                model,
                share: r.share,
            });
        }
        Self::new(entries, &cav_class)
    }
}

/// Fleet-level aggregation of per-vehicle trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetSummary {
    pub mpg: f64,
    pub total_gallons: f64,
    pub total_miles: f64,
    pub per_class_mpg: BTreeMap<String, f64>,
}

/// System mpg = total fleet miles / total fleet gallons (harmonic
/// aggregation), each vehicle evaluated under its class model.
pub fn fleet_mpg(
    portfolio: &VehiclePortfolio,
    per_vehicle: &[(String, Vec<(f64, f64, f64)>)],
) -> Result<FleetSummary> {
    let mut total_gallons = 0.0;
    let mut total_miles = 0.0;
    let mut per_class: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for (class, traj) in per_vehicle {
        let model = portfolio.model_for(class)?;
        let s = trajectory_fuel(model, traj)?;
        total_gallons += s.gallons;
        total_miles += s.miles;
        let slot = per_class.entry(class.clone()).or_insert((0.0, 0.0));
        slot.0 += s.gallons;
        slot.1 += s.miles;
    }
    let mpg = if total_gallons == 0.0 {
        f64::INFINITY
    } else {
        total_miles / total_gallons
    };
    let per_class_mpg = per_class
        .into_iter()
        .map(|(k, (gal, mi))| (k, if gal == 0.0 { f64::INFINITY } else { mi / gal }))
        .collect();
    Ok(FleetSummary {
        mpg,
        total_gallons,
        total_miles,
        per_class_mpg,
    })
}

/// Unit-conversion helper: a constant volumetric rate in gal/hr expressed in
/// this model's g/s unit.
pub fn gallons_per_hour_to_grams_per_second(gal_per_hr: f64, grams_per_gallon: f64) -> f64 {
    gal_per_hr * grams_per_gallon / SECONDS_PER_HOUR
}
