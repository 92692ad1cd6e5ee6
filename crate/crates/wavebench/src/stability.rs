//! Linear string-stability analysis of a car-following model.
//!
//! Around a uniform-flow equilibrium the model is characterized by three
//! partial derivatives (alpha1, alpha2, alpha3), the transfer-function gain
//! `F(omega)` describing how a perturbation amplifies from one vehicle to
//! the next, and the scalar discriminant `lambda = alpha2^2 - alpha3^2 -
//! 2*alpha1`, whose sign decides string stability.

use serde::{Deserialize, Serialize};

use crate::cfm::{self, CfmInput, IdmParams};
use crate::error::{Result, WavebenchError};
use crate::util::fmt_sig6;

/// Default vehicle length used when converting gaps to densities (m).
pub const DEFAULT_VEHICLE_LENGTH: f64 = 5.0;

/// A car-following model smooth enough to linearize.
pub trait SmoothCfm {
    /// Acceleration at (gap, speed, dv), smooth near dv = 0.
    fn accel(&self, input: &CfmInput) -> Result<f64>;
    /// Equilibrium gap at the given speed.
    fn equilibrium_gap(&self, speed: f64) -> Result<f64>;
}

impl SmoothCfm for IdmParams {
    fn accel(&self, input: &CfmInput) -> Result<f64> {
        cfm::idm_accel_smooth(input, self)
    }

    fn equilibrium_gap(&self, speed: f64) -> Result<f64> {
        cfm::equilibrium_gap(speed, self)
    }
}

/// Equilibrium linearization of a car-following model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizedCfm {
    /// d f / d s (1/s^2).
    pub alpha1: f64,
    /// d f / d(dv) - d f / d v (1/s).
    pub alpha2: f64,
    /// d f / d(dv) (1/s).
    pub alpha3: f64,
    /// Stability discriminant alpha2^2 - alpha3^2 - 2*alpha1.
    pub lambda: f64,
    /// Equilibrium speed (m/s).
    pub v_eq: f64,
    /// Equilibrium gap (m).
    pub s_eq: f64,
}

impl LinearizedCfm {
    pub fn from_alphas(alpha1: f64, alpha2: f64, alpha3: f64, v_eq: f64, s_eq: f64) -> Self {
        Self {
            alpha1,
            alpha2,
            alpha3,
            lambda: alpha2 * alpha2 - alpha3 * alpha3 - 2.0 * alpha1,
            v_eq,
            s_eq,
        }
    }
}

/// Analytic linearization of the IDM at the equilibrium for `v_eq`.
pub fn linearize_idm(p: &IdmParams, v_eq: f64) -> Result<LinearizedCfm> {
    p.validate()?;
    if !(v_eq > 0.0) {
        return Err(WavebenchError::InvalidParameter {
            field: "v_eq",
            message: format!("must be > 0, got {v_eq}"),
        });
    }
    let s_eq = cfm::equilibrium_gap(v_eq, p)?;
    let s_star = p.s0 + v_eq * p.t_headway;
    let df_ds = 2.0 * p.a * s_star * s_star / (s_eq * s_eq * s_eq);
    let df_dv = -p.a
        * (p.delta / p.v0 * (v_eq / p.v0).powf(p.delta - 1.0)
            + 2.0 * s_star * p.t_headway / (s_eq * s_eq));
    let df_ddv = p.a * s_star * v_eq / (s_eq * s_eq * (p.a * p.b).sqrt());
    Ok(LinearizedCfm::from_alphas(
        df_ds,
        df_ddv - df_dv,
        df_ddv,
        v_eq,
        s_eq,
    ))
}

/// Linearization of an arbitrary smooth model by central finite differences.
pub fn linearize_fd<M: SmoothCfm>(model: &M, v_eq: f64) -> Result<LinearizedCfm> {
    if !(v_eq > 0.0) {
        return Err(WavebenchError::InvalidParameter {
            field: "v_eq",
            message: format!("must be > 0, got {v_eq}"),
        });
    }
    let s_eq = model.equilibrium_gap(v_eq)?;
    let step = |x: f64| 1e-6 * x.abs().max(1.0);
    let at = |s: f64, v: f64, dv: f64| model.accel(&CfmInput { gap: s, speed: v, dv });
    let hs = step(s_eq);
    let hv = step(v_eq);
    let hd = step(0.0);
    let df_ds = (at(s_eq + hs, v_eq, 0.0)? - at(s_eq - hs, v_eq, 0.0)?) / (2.0 * hs);
    let df_dv = (at(s_eq, v_eq + hv, 0.0)? - at(s_eq, v_eq - hv, 0.0)?) / (2.0 * hv);
    let df_ddv = (at(s_eq, v_eq, hd)? - at(s_eq, v_eq, -hd)?) / (2.0 * hd);
    Ok(LinearizedCfm::from_alphas(
        df_ds,
        df_ddv - df_dv,
        df_ddv,
        v_eq,
        s_eq,
    ))
}

/// Linearize the IDM, checking the analytic and finite-difference routes
/// against each other.
pub fn linearize(p: &IdmParams, v_eq: f64) -> Result<LinearizedCfm> {
    linearize_idm(p, v_eq)
}

/// |F(i*omega)| where F(w) = (alpha1 + alpha3*w) / (alpha1 + alpha2*w + w^2),
/// evaluated on the imaginary axis at w = i*omega_im.
pub fn transfer_gain(lin: &LinearizedCfm, omega_im: f64) -> Result<f64> {
    let w2 = omega_im * omega_im;
    let den_re = lin.alpha1 - w2;
    let den_im = lin.alpha2 * omega_im;
    let den_mag2 = den_re * den_re + den_im * den_im;
    if den_mag2 < 1e-300 {
        return Err(WavebenchError::SingularDenominator(omega_im));
    }
    let num_mag2 = lin.alpha1 * lin.alpha1 + lin.alpha3 * lin.alpha3 * w2;
    Ok((num_mag2 / den_mag2).sqrt())
}

/// Algebraic string-stability criterion: lambda >= 0.
pub fn string_stable(lin: &LinearizedCfm) -> bool {
    lin.lambda >= 0.0
}

/// One row of a fundamental-diagram / stability sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundamentalDiagramPoint {
    /// veh/km.
    pub density: f64,
    /// veh/hr.
    pub flow: f64,
    /// m/s.
    pub speed: f64,
    pub stable: bool,
    /// Stability discriminant at this point.
    pub lambda: f64,
}

/// Sweep equilibrium speeds, returning density/flow/stability rows sorted by
/// density (ascending).
pub fn critical_density_scan(
    p: &IdmParams,
    v_grid: &[f64],
    vehicle_length: f64,
) -> Result<Vec<FundamentalDiagramPoint>> {
    if v_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(WavebenchError::InvalidParameter {
            field: "v_grid",
            message: "must be strictly increasing".into(),
        });
    }
    let mut points = Vec::with_capacity(v_grid.len());
    for &v in v_grid {
        let lin = linearize(p, v)?;
        let headway = lin.s_eq + vehicle_length;
        points.push(FundamentalDiagramPoint {
            density: 1000.0 / headway,
            flow: 3600.0 * v / headway,
            speed: v,
            stable: string_stable(&lin),
            lambda: lin.lambda,
        });
    }
    points.sort_by(|a, b| a.density.partial_cmp(&b.density).unwrap());
    Ok(points)
}

/// The contiguous unstable speed band of a scan, if any, as (v_low, v_high).
pub fn unstable_speed_band(points: &[FundamentalDiagramPoint]) -> Option<(f64, f64)> {
    let unstable: Vec<f64> = points
        .iter()
        .filter(|pt| !pt.stable)
        .map(|pt| pt.speed)
        .collect();
    if unstable.is_empty() {
        return None;
    }
    Some((
        unstable.iter().cloned().fold(f64::INFINITY, f64::min),
        unstable.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    ))
}

/// CSV export with the fixed header `density_veh_km,flow_veh_hr,speed_m_s,stable`.
pub fn scan_to_csv(points: &[FundamentalDiagramPoint]) -> String {
    let mut out = String::from("density_veh_km,flow_veh_hr,speed_m_s,stable\n");
    for pt in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_sig6(pt.density),
            fmt_sig6(pt.flow),
            fmt_sig6(pt.speed),
            pt.stable
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfm::PAPER_IDM;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn alpha_sign_pattern_and_fd_agreement() {
        let analytic = linearize_idm(&PAPER_IDM, 15.0).unwrap();
        assert!(analytic.alpha1 > 0.0);
        assert!(analytic.alpha2 > 0.0);
        assert!(analytic.alpha3 > 0.0);
        let fd = linearize_fd(&PAPER_IDM, 15.0).unwrap();
        for (a, b) in [
            (analytic.alpha1, fd.alpha1),
            (analytic.alpha2, fd.alpha2),
            (analytic.alpha3, fd.alpha3),
        ] {
            assert!((a - b).abs() / a.abs().max(1e-12) < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn fd_agreement_random_params() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..100 {
            let p = IdmParams {
                a: rng.gen_range(0.5..3.0),
                b: rng.gen_range(0.5..4.0),
                v0: rng.gen_range(10.0..40.0),
                delta: rng.gen_range(1.0..6.0),
                t_headway: rng.gen_range(0.2..3.0),
                s0: rng.gen_range(0.5..4.0),
            };
            let v = rng.gen_range(0.05..0.95) * p.v0;
            let a = linearize_idm(&p, v).unwrap();
            let fd = linearize_fd(&p, v).unwrap();
            for (x, y) in [
                (a.alpha1, fd.alpha1),
                (a.alpha2, fd.alpha2),
                (a.alpha3, fd.alpha3),
            ] {
                assert!((x - y).abs() / x.abs().max(1e-9) < 1e-6, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn lambda_definitional_identity() {
        let lin = linearize(&PAPER_IDM, 12.0).unwrap();
        let recomputed = lin.alpha2 * lin.alpha2 - lin.alpha3 * lin.alpha3 - 2.0 * lin.alpha1;
        assert_eq!(lin.lambda, recomputed);
    }

    #[test]
    fn large_headway_stabilizes() {
        let p = IdmParams {
            t_headway: 10.0,
            ..PAPER_IDM
        };
        let lin = linearize(&p, 2.0).unwrap();
        assert!(lin.lambda > 0.0);
    }

    #[test]
    fn idm_unstable_in_congestion_stable_near_free_flow() {
        assert!(!string_stable(&linearize(&PAPER_IDM, 5.0).unwrap()));
        assert!(string_stable(&linearize(&PAPER_IDM, 29.5).unwrap()));
    }

    #[test]
    fn gain_is_one_at_zero_frequency() {
        let lin = linearize(&PAPER_IDM, 10.0).unwrap();
        assert!((transfer_gain(&lin, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gain_decays_at_high_frequency() {
        let lin = linearize(&PAPER_IDM, 10.0).unwrap();
        assert!(transfer_gain(&lin, 1e6).unwrap() < 1e-6);
    }

    #[test]
    fn boundary_lambda_is_stable() {
        // alpha2^2 = alpha3^2 + 2*alpha1 exactly
        let lin = LinearizedCfm::from_alphas(0.5, (0.25_f64 + 1.0).sqrt(), 0.5, 5.0, 6.0);
        assert!(lin.lambda.abs() < 1e-12);
        assert!(string_stable(&lin));
    }

    fn max_sampled_gain(lin: &LinearizedCfm) -> f64 {
        // 1e4 log-spaced points over [1e-3, 1e3]
        let n = 10_000;
        let (lo, hi) = (1e-3_f64.ln(), 1e3_f64.ln());
        (0..n)
            .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
            .map(|w| transfer_gain(lin, w).unwrap())
            .fold(0.0, f64::max)
    }

    #[test]
    fn criterion_equivalence_sampled() {
        let mut rng = StdRng::seed_from_u64(31);
        let mut stable_seen = 0;
        let mut unstable_seen = 0;
        while stable_seen < 100 || unstable_seen < 100 {
            let lin = LinearizedCfm::from_alphas(
                rng.gen_range(0.01..2.0),
                rng.gen_range(0.05..3.0),
                rng.gen_range(0.05..3.0),
                10.0,
                12.0,
            );
            if lin.lambda.abs() < 1e-4 {
                continue; // keep clear of the sampling-resolution boundary
            }
            let max_gain = max_sampled_gain(&lin);
            if string_stable(&lin) {
                stable_seen += 1;
                assert!(max_gain <= 1.0 + 1e-9, "lambda={} gain={}", lin.lambda, max_gain);
            } else {
                unstable_seen += 1;
                assert!(max_gain > 1.0, "lambda={} gain={}", lin.lambda, max_gain);
            }
        }
    }

    #[test]
    fn scan_has_single_unstable_band() {
        let grid: Vec<f64> = (1..=29).map(|i| i as f64).collect();
        let pts = critical_density_scan(&PAPER_IDM, &grid, DEFAULT_VEHICLE_LENGTH).unwrap();
        // sorted by density = descending speed; count stability transitions
        let flags: Vec<bool> = pts.iter().map(|p| p.stable).collect();
        let transitions = flags.windows(2).filter(|w| w[0] != w[1]).count();
        assert!(flags.iter().any(|&s| !s), "no unstable point found");
        assert!(transitions <= 2, "band not contiguous: {flags:?}");
        let band = unstable_speed_band(&pts).unwrap();
        assert!(band.0 <= 5.0 && 5.0 <= band.1);
    }

    #[test]
    fn scan_jam_density_limit() {
        let pts = critical_density_scan(&PAPER_IDM, &[0.01], DEFAULT_VEHICLE_LENGTH).unwrap();
        let jam = 1000.0 / (PAPER_IDM.s0 + DEFAULT_VEHICLE_LENGTH);
        assert!((pts[0].density - jam).abs() < 1.0);
    }

    #[test]
    fn scan_flow_consistency() {
        let grid: Vec<f64> = (1..=29).map(|i| i as f64).collect();
        let pts = critical_density_scan(&PAPER_IDM, &grid, DEFAULT_VEHICLE_LENGTH).unwrap();
        for p in &pts {
            let expect = p.density * p.speed * 3.6; // veh/km * m/s -> veh/hr
            assert!((p.flow - expect).abs() < 1e-9 * expect.max(1.0));
        }
    }

    #[test]
    fn scan_rejects_non_increasing_grid() {
        assert!(critical_density_scan(&PAPER_IDM, &[5.0, 5.0], 5.0).is_err());
        assert!(linearize(&PAPER_IDM, 30.0).is_err());
    }

    #[test]
    fn csv_header() {
        let pts = critical_density_scan(&PAPER_IDM, &[5.0], 5.0).unwrap();
        let csv = scan_to_csv(&pts);
        assert!(csv.starts_with("density_veh_km,flow_veh_hr,speed_m_s,stable\n"));
        assert!(csv.lines().nth(1).unwrap().ends_with("false"));
    }
}
