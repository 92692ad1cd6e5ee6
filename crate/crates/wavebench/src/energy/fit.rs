//! Constrained least-squares fitting of the polynomial fuel-rate model:
//! non-negative least squares (Lawson-Hanson active set) over the nine
//! polynomial coefficients, with the cap `beta` handled as a post-hoc
//! floor (only samples strictly above `beta` enter the fit).

use nalgebra::{DMatrix, DVector};

use super::{FeasibilityBoundary, PolyEnergyModel, GRAMS_PER_GALLON_GASOLINE};
use crate::error::{Result, WavebenchError};

/// Minimum number of samples required by [`fit_poly`].
pub const MIN_SAMPLES: usize = 10;

/// Result of a model fit.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: PolyEnergyModel,
    /// Euclidean norm of the residual over the fitted samples.
    pub residual_norm: f64,
    /// Set when the sample design matrix is rank-deficient; the fit is
    /// still returned but some coefficients are not identified.
    pub rank_deficient: bool,
}

fn design_row(v: f64, a: f64) -> [f64; 9] {
    let ap = a.max(0.0);
    let ap2 = ap * ap;
    [1.0, v, v * v, v * v * v, a, a * v, a * v * v, ap2, ap2 * v]
}

/// Non-negative least squares `min ||A x - b||` s.t. `x >= 0`
/// (Lawson-Hanson active-set algorithm).
///
/// Columns are normalized to unit length internally; the polynomial
/// design mixes scales from 1 to `v^3`, and the active-set bookkeeping
/// needs comparable gradient magnitudes to behave.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let scales: Vec<f64> = (0..n)
        .map(|j| {
            let s = a.column(j).norm();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    let mut an = a.clone();
    for j in 0..n {
        an.column_mut(j).scale_mut(1.0 / scales[j]);
    }

    let mut x = DVector::zeros(n); // in scaled coordinates
    let mut passive = vec![false; n];
    let grad_scale = (an.transpose() * b).amax().max(1e-300);
    let tol = 1e-10 * grad_scale;

    'outer: for _ in 0..(30 * n) {
        let w = an.transpose() * (b - &an * &x);
        let mut j_star = None;
        let mut w_best = tol;
        for j in 0..n {
            if !passive[j] && w[j] > w_best {
                w_best = w[j];
                j_star = Some(j);
            }
        }
        let Some(j_star) = j_star else { break };
        passive[j_star] = true;

        for _inner in 0..=n {
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            if idx.is_empty() {
                continue 'outer;
            }
            let sub = an.select_columns(&idx);
            let z_sub = sub.svd(true, true).solve(b, 1e-12).expect("svd solve");
            if z_sub.iter().all(|&z| z > 0.0) {
                x.fill(0.0);
                for (k, &j) in idx.iter().enumerate() {
                    x[j] = z_sub[k];
                }
                continue 'outer;
            }
            // step as far toward z as feasibility allows, drop what hits zero
            let mut alpha = f64::INFINITY;
            for (k, &j) in idx.iter().enumerate() {
                if z_sub[k] <= 0.0 {
                    let denom = x[j] - z_sub[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[j] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            for (k, &j) in idx.iter().enumerate() {
                x[j] += alpha * (z_sub[k] - x[j]);
                if x[j] <= 1e-14 {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
        break; // inner loop failed to settle: accept the current iterate
    }
    DVector::from_iterator(n, x.iter().zip(&scales).map(|(xi, s)| xi / s))
}

/// Upper envelope of the sampled accelerations as a piecewise-linear g(v).
fn boundary_from_samples(samples: &[(f64, f64, f64)]) -> FeasibilityBoundary {
    let v_max = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    let bins = 8usize;
    let width = (v_max / bins as f64).max(1e-9);
    let mut knots_v = Vec::new();
    let mut knots_g = Vec::new();
    for i in 0..bins {
        let lo = i as f64 * width;
        let hi = lo + width;
        let g = samples
            .iter()
            .filter(|s| s.0 >= lo && (s.0 < hi || i == bins - 1))
            .map(|s| s.1)
            .fold(f64::NEG_INFINITY, f64::max);
        if g.is_finite() {
            knots_v.push(lo + 0.5 * width);
            knots_g.push(g);
        }
    }
    if knots_v.len() < 2 {
        let g = samples.iter().map(|s| s.1).fold(0.0, f64::max);
        return FeasibilityBoundary::constant(g);
    }
    FeasibilityBoundary {
        v: knots_v,
        g: knots_g,
    }
}

/// Fit the uncapped polynomial to `(v, a, rate)` samples under the
/// non-negativity constraint, with `beta` as the declared cap floor.
pub fn fit_poly(samples: &[(f64, f64, f64)], beta: f64) -> Result<FitOutcome> {
    if samples.len() < MIN_SAMPLES {
        return Err(WavebenchError::TooFewSamples {
            required: MIN_SAMPLES,
            got: samples.len(),
        });
    }
    for (i, &(v, _, rate)) in samples.iter().enumerate() {
        if rate < beta {
            return Err(WavebenchError::InvalidParameter {
                field: "samples",
                message: format!("row {i}: fuel rate {rate} below beta {beta}"),
            });
        }
        if v < 0.0 {
            return Err(WavebenchError::InvalidParameter {
                field: "samples",
                message: format!("row {i}: negative speed {v}"),
            });
        }
    }
    // cap handling: fit only samples strictly above the floor
    let active: Vec<&(f64, f64, f64)> = samples.iter().filter(|s| s.2 > beta).collect();
    let (model_coeffs, residual_norm, rank_deficient) = if active.is_empty() {
        (DVector::zeros(9), 0.0, false)
    } else {
        let m = active.len();
        let mut a = DMatrix::zeros(m, 9);
        let mut b = DVector::zeros(m);
        for (i, s) in active.iter().enumerate() {
            let row = design_row(s.0, s.1);
            for (j, &rj) in row.iter().enumerate() {
                a[(i, j)] = rj;
            }
            b[i] = s.2;
        }
        let rank = a.clone().svd(false, false).rank(1e-9 * a.amax());
        let x = nnls(&a, &b);
        let residual = (&a * &x - &b).norm();
        (x, residual, rank < 9.min(m))
    };
    let model = PolyEnergyModel {
        class_name: "fitted".into(),
        unit: "g_per_s".into(),
        beta,
        c: [
            model_coeffs[0],
            model_coeffs[1],
            model_coeffs[2],
            model_coeffs[3],
        ],
        p: [model_coeffs[4], model_coeffs[5], model_coeffs[6]],
        q: [model_coeffs[7], model_coeffs[8]],
        boundary: boundary_from_samples(samples),
        grams_per_gallon: GRAMS_PER_GALLON_GASOLINE,
    };
    model.validate()?;
    Ok(FitOutcome {
        model,
        residual_norm,
        rank_deficient,
    })
}
