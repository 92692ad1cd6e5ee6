//! Placeholder energy models for the vehicle portfolio.
//!
//! No validated per-class coefficient tables are available, so each class
//! ships with coefficients obtained by fitting the polynomial form to a
//! simple physics surrogate (rolling + aerodynamic + inertial power over
//! an effective heating value, plus an idle floor and a quadratic
//! enrichment term on positive acceleration). These models are plausible
//! in magnitude but NOT validated against any reference vehicle data; all
//! acceptance properties in this crate are independent of their values.

use super::fit::fit_poly;
use super::{
    FeasibilityBoundary, PolyEnergyModel, PortfolioEntry, VehiclePortfolio,
    GRAMS_PER_GALLON_DIESEL, GRAMS_PER_GALLON_GASOLINE,
};

/// Physical surrogate description of one vehicle class.
#[derive(Debug, Clone, Copy)]
pub struct SurrogateSpec {
    pub name: &'static str,
    /// Vehicle mass, half-load (kg).
    pub mass: f64,
    /// Drag area Cd * A (m^2).
    pub cda: f64,
    /// Rolling resistance coefficient.
    pub crr: f64,
    /// Rated power, limits the feasible acceleration envelope (W).
    pub p_max: f64,
    /// Idle fuel rate (g/s).
    pub idle: f64,
    /// Minimum fuel rate after fuel cut (g/s).
    pub beta: f64,
    /// Drivetrain+engine efficiency against the lower heating value.
    pub efficiency: f64,
    /// Lower heating value (J/g).
    pub lhv: f64,
    /// Enrichment coefficient on a+^2 (g/s per (m/s^2)^2).
    pub enrich: f64,
    pub grams_per_gallon: f64,
}

const GAS: (f64, f64, f64) = (0.30, 43_000.0, GRAMS_PER_GALLON_GASOLINE);
const DIESEL: (f64, f64, f64) = (0.38, 42_600.0, GRAMS_PER_GALLON_DIESEL);

/// The portfolio classes: five human classes with their road shares, plus
/// the RAV4 class CAVs are mapped to.
pub const SURROGATES: [(SurrogateSpec, f64); 6] = [
    (
        SurrogateSpec {
            name: "compact_sedan",
            mass: 1300.0,
            cda: 0.58,
            crr: 0.009,
            p_max: 95_000.0,
            idle: 0.18,
            beta: 0.10,
            efficiency: GAS.0,
            lhv: GAS.1,
            enrich: 0.25,
            grams_per_gallon: GAS.2,
        },
        0.2359,
    ),
    (
        SurrogateSpec {
            name: "midsize_sedan",
            mass: 1600.0,
            cda: 0.63,
            crr: 0.009,
            p_max: 130_000.0,
            idle: 0.21,
            beta: 0.11,
            efficiency: GAS.0,
            lhv: GAS.1,
            enrich: 0.30,
            grams_per_gallon: GAS.2,
        },
        0.3292,
    ),
    (
        SurrogateSpec {
            name: "midsize_suv",
            mass: 1900.0,
            cda: 0.75,
            crr: 0.010,
            p_max: 140_000.0,
            idle: 0.24,
            beta: 0.12,
            efficiency: GAS.0,
            lhv: GAS.1,
            enrich: 0.35,
            grams_per_gallon: GAS.2,
        },
        0.1756,
    ),
    (
        SurrogateSpec {
            name: "midsize_pickup",
            mass: 2300.0,
            cda: 0.85,
            crr: 0.011,
            p_max: 160_000.0,
            idle: 0.27,
            beta: 0.13,
            efficiency: GAS.0,
            lhv: GAS.1,
            enrich: 0.40,
            grams_per_gallon: GAS.2,
        },
        0.1032,
    ),
    (
        SurrogateSpec {
            name: "class3_pnd",
            mass: 5000.0,
            cda: 1.20,
            crr: 0.012,
            p_max: 180_000.0,
            idle: 0.40,
            beta: 0.20,
            efficiency: DIESEL.0,
            lhv: DIESEL.1,
            enrich: 0.50,
            grams_per_gallon: DIESEL.2,
        },
        0.1561,
    ),
    (
        SurrogateSpec {
            name: "rav4",
            mass: 1700.0,
            cda: 0.70,
            crr: 0.0095,
            p_max: 150_000.0,
            idle: 0.22,
            beta: 0.11,
            efficiency: GAS.0,
            lhv: GAS.1,
            enrich: 0.32,
            grams_per_gallon: GAS.2,
        },
        0.0,
    ),
];

impl SurrogateSpec {
    /// Surrogate fuel rate in g/s.
    pub fn rate(&self, v: f64, a: f64) -> f64 {
        const G: f64 = 9.81;
        const RHO: f64 = 1.225;
        let p_wheel = self.mass * G * self.crr * v + 0.5 * RHO * self.cda * v * v * v
            + self.mass * a * v;
        let ap = a.max(0.0);
        let rate = self.idle + p_wheel.max(0.0) / (self.efficiency * self.lhv)
            + self.enrich * ap * ap * (1.0 + 0.02 * v);
        rate.max(self.beta)
    }

    /// Power-limited feasible acceleration envelope g(v).
    pub fn boundary(&self) -> FeasibilityBoundary {
        let knots: Vec<f64> = (0..=8).map(|i| i as f64 * 5.0).collect();
        let g: Vec<f64> = knots
            .iter()
            .map(|&v| (self.p_max / (self.mass * v.max(2.0))).min(3.5))
            .collect();
        FeasibilityBoundary { v: knots, g }
    }

    /// Grid of (v, a, rate) samples inside the feasible region.
    pub fn samples(&self) -> Vec<(f64, f64, f64)> {
        let boundary = self.boundary();
        let mut out = Vec::new();
        for i in 0..18 {
            let v = i as f64 * 35.0 / 17.0;
            let a_hi = boundary.eval(v);
            for j in 0..14 {
                let a = -3.0 + j as f64 * (a_hi + 3.0) / 13.0;
                out.push((v, a, self.rate(v, a)));
            }
        }
        out
    }

    /// Fit the polynomial model to this surrogate.
    pub fn fitted_model(&self) -> PolyEnergyModel {
        let outcome = fit_poly(&self.samples(), self.beta).expect("surrogate fit");
        PolyEnergyModel {
            class_name: self.name.to_string(),
            boundary: self.boundary(),
            grams_per_gallon: self.grams_per_gallon,
            ..outcome.model
        }
    }
}

/// The default portfolio with placeholder (non-validated) per-class models.
pub fn placeholder_portfolio() -> VehiclePortfolio {
    let entries = SURROGATES
        .iter()
        .map(|(spec, share)| PortfolioEntry {
            class_name: spec.name.to_string(),
            model: spec.fitted_model(),
            share: *share,
        })
        .collect();
    VehiclePortfolio::new(entries, "rav4").expect("placeholder portfolio is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::EnergyQuery;

    #[test]
    fn shares_sum_to_one() {
        let total: f64 = SURROGATES.iter().map(|(_, s)| s).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn portfolio_builds_and_validates() {
        let p = placeholder_portfolio();
        assert_eq!(p.entries.len(), 6);
        assert!(p.model_for("rav4").is_ok());
        assert!(p.model_for("class3_pnd").unwrap().grams_per_gallon > 3000.0);
    }

    #[test]
    fn placeholder_models_have_positive_convexity() {
        // the enrichment term must survive the fit so oscillatory driving
        // costs more fuel than steady driving
        for (spec, _) in &SURROGATES {
            let m = spec.fitted_model();
            assert!(m.q[0] > 0.0, "{}: q0 = {}", spec.name, m.q[0]);
        }
    }

    #[test]
    fn placeholder_rates_are_plausible() {
        let p = placeholder_portfolio();
        let m = p.model_for("midsize_sedan").unwrap();
        let cruise = m.fuel_rate(&EnergyQuery::flat(30.0, 0.0));
        assert!(cruise > 0.3 && cruise < 5.0, "cruise rate {cruise}");
        let idle = m.fuel_rate(&EnergyQuery::flat(0.0, 0.0));
        assert!(idle >= m.beta && idle < 1.0, "idle rate {idle}");
    }
}
