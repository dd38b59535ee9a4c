//! Least-squares recovery of the two empirical curve families the
//! simulator produces: the hinge law of crater depth versus fluence and
//! the saturable Rydberg loading-rate curve versus 397 nm power.
//!
//! Both fitters work in whatever units the data arrive in and report
//! plain parameter values with the diagonal of the parameter covariance,
//! so callers can judge identifiability themselves. A saturation fit on
//! purely linear data does not fail; it returns a huge p_sat with a
//! covariance blown up by orders of magnitude, which is the honest answer.

use crate::error::Error;

#[derive(Debug, Clone)]
pub struct FitResult {
    /// (name, value) pairs in the order documented per fitter.
    pub parameters: Vec<(String, f64)>,
    /// Euclidean norm of the residuals at the solution.
    pub residual_norm: f64,
    /// Diagonal of (J^T J)^-1 sigma^2, one entry per fitted parameter.
    pub covariance_diagonal: Vec<f64>,
}

impl FitResult {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.parameters
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, v)| v)
    }

    /// Relative one-sigma uncertainty of a fitted parameter.
    pub fn relative_sigma(&self, index: usize) -> f64 {
        let value = self.parameters[index].1;
        self.covariance_diagonal[index].max(0.0).sqrt() / value.abs().max(f64::MIN_POSITIVE)
    }
}

/// Fits depth = slope * max(0, fluence - threshold) to (fluence, depth)
/// points. Parameters: `threshold`, `slope`.
///
/// The threshold enters non-smoothly, so a grid scan with the slope
/// profiled out in closed form seeds a short Gauss-Newton refinement.
pub fn fit_threshold(points: &[(f64, f64)]) -> Result<FitResult, Error> {
    if points.len() < 4 {
        return Err(Error::DegenerateData(format!(
            "threshold fit needs at least 4 points, got {}",
            points.len()
        )));
    }
    if points.iter().all(|&(_, d)| d <= 0.0) {
        return Err(Error::DegenerateData(
            "all depths are zero; no ablation signature to fit".into(),
        ));
    }

    let f_min = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let f_max = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if !(f_max > f_min) {
        return Err(Error::DegenerateData(
            "threshold fit needs spread in fluence".into(),
        ));
    }

    // Profiled slope and SSE at a candidate threshold.
    let profile = |f_th: f64| -> (f64, f64) {
        let mut num = 0.0;
        let mut den = 0.0;
        for &(f, d) in points {
            let h = (f - f_th).max(0.0);
            num += d * h;
            den += h * h;
        }
        let slope = if den > 0.0 { (num / den).max(0.0) } else { 0.0 };
        let sse: f64 = points
            .iter()
            .map(|&(f, d)| {
                let r = d - slope * (f - f_th).max(0.0);
                r * r
            })
            .sum();
        (slope, sse)
    };

    const GRID: usize = 512;
    let mut f_th = f_min;
    let mut best_sse = f64::INFINITY;
    for i in 0..=GRID {
        let cand = f_min + (f_max - f_min) * i as f64 / GRID as f64;
        let (_, sse) = profile(cand);
        if sse < best_sse {
            best_sse = sse;
            f_th = cand;
        }
    }
    let (mut slope, mut sse) = profile(f_th);

    // Gauss-Newton on (slope, threshold) with step halving. The threshold
    // gradient only sees points above the hinge.
    for _ in 0..100 {
        let mut jtj = [[0.0f64; 2]; 2];
        let mut jtr = [0.0f64; 2];
        for &(f, d) in points {
            let above = f > f_th;
            let h = if above { f - f_th } else { 0.0 };
            let r = d - slope * h;
            let j0 = h;
            let j1 = if above { -slope } else { 0.0 };
            jtj[0][0] += j0 * j0;
            jtj[0][1] += j0 * j1;
            jtj[1][1] += j1 * j1;
            jtr[0] += j0 * r;
            jtr[1] += j1 * r;
        }
        jtj[1][0] = jtj[0][1];
        let Some((ds, dt)) = solve2(jtj, jtr) else {
            break;
        };

        let mut step = 1.0;
        let mut improved = false;
        for _ in 0..20 {
            let s_new = slope + step * ds;
            let t_new = (f_th + step * dt).clamp(f_min, f_max);
            let sse_new: f64 = points
                .iter()
                .map(|&(f, d)| {
                    let r = d - s_new * (f - t_new).max(0.0);
                    r * r
                })
                .sum();
            if sse_new < sse {
                slope = s_new;
                f_th = t_new;
                sse = sse_new;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved || (ds.abs() <= 1e-14 * slope.abs().max(1.0) && dt.abs() <= 1e-12 * (f_max - f_min)) {
            break;
        }
    }

    // Covariance from the final Jacobian.
    let mut jtj = [[0.0f64; 2]; 2];
    for &(f, _) in points {
        let above = f > f_th;
        let j0 = if above { f - f_th } else { 0.0 };
        let j1 = if above { -slope } else { 0.0 };
        jtj[0][0] += j0 * j0;
        jtj[0][1] += j0 * j1;
        jtj[1][1] += j1 * j1;
    }
    jtj[1][0] = jtj[0][1];
    let dof = points.len().saturating_sub(2).max(1) as f64;
    let sigma2 = sse / dof;
    let cov = invert2_diagonal(jtj).map(|d| [d[0] * sigma2, d[1] * sigma2]);

    Ok(FitResult {
        parameters: vec![("threshold".into(), f_th), ("slope".into(), slope)],
        residual_norm: sse.sqrt(),
        covariance_diagonal: cov.map_or(vec![f64::INFINITY; 2], |d| d.to_vec()),
    })
}

/// Fits rate = r_max * p / (p + p_sat) to (power, rate) points with
/// Levenberg-Marquardt. Parameters: `r_max`, `p_sat`, and the derived
/// low-power `linear_slope` = r_max / p_sat.
pub fn fit_saturation(points: &[(f64, f64)]) -> Result<FitResult, Error> {
    if points.len() < 3 {
        return Err(Error::DegenerateData(format!(
            "saturation fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(p, _)| p <= 0.0) {
        return Err(Error::DegenerateData(
            "saturation fit needs strictly positive powers".into(),
        ));
    }
    if points.iter().all(|&(_, r)| r <= 0.0) {
        return Err(Error::DegenerateData(
            "all rates are zero; nothing to fit".into(),
        ));
    }

    let mut powers: Vec<f64> = points.iter().map(|p| p.0).collect();
    powers.sort_by(f64::total_cmp);
    let mut p_sat = powers[powers.len() / 2];
    let (p_hi, r_hi) = points
        .iter()
        .copied()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .expect("nonempty");
    let mut r_max = (r_hi * (p_hi + p_sat) / p_hi).max(f64::MIN_POSITIVE);

    let sse_at = |r_max: f64, p_sat: f64| -> f64 {
        points
            .iter()
            .map(|&(p, r)| {
                let e = r - r_max * p / (p + p_sat);
                e * e
            })
            .sum()
    };
    let mut sse = sse_at(r_max, p_sat);
    let mut lambda = 1e-3;

    for _ in 0..200 {
        let mut jtj = [[0.0f64; 2]; 2];
        let mut jtr = [0.0f64; 2];
        for &(p, r) in points {
            let denom = p + p_sat;
            let model = r_max * p / denom;
            let res = r - model;
            let j0 = p / denom;
            let j1 = -r_max * p / (denom * denom);
            jtj[0][0] += j0 * j0;
            jtj[0][1] += j0 * j1;
            jtj[1][1] += j1 * j1;
            jtr[0] += j0 * res;
            jtr[1] += j1 * res;
        }
        jtj[1][0] = jtj[0][1];

        let mut accepted = false;
        for _ in 0..30 {
            let damped = [
                [jtj[0][0] * (1.0 + lambda), jtj[0][1]],
                [jtj[1][0], jtj[1][1] * (1.0 + lambda)],
            ];
            if let Some((dr, dp)) = solve2(damped, jtr) {
                let r_new = r_max + dr;
                let p_new = p_sat + dp;
                if r_new > 0.0 && p_new > 0.0 {
                    let sse_new = sse_at(r_new, p_new);
                    if sse_new <= sse {
                        let rel_drop = (sse - sse_new) / sse.max(f64::MIN_POSITIVE);
                        r_max = r_new;
                        p_sat = p_new;
                        sse = sse_new;
                        lambda = (lambda / 3.0).max(1e-12);
                        accepted = true;
                        if rel_drop < 1e-12 {
                            lambda = f64::INFINITY;
                        }
                        break;
                    }
                }
            }
            lambda *= 4.0;
            if lambda > 1e12 {
                break;
            }
        }
        if !accepted || lambda.is_infinite() {
            break;
        }
    }

    let mut jtj = [[0.0f64; 2]; 2];
    for &(p, _) in points {
        let denom = p + p_sat;
        let j0 = p / denom;
        let j1 = -r_max * p / (denom * denom);
        jtj[0][0] += j0 * j0;
        jtj[0][1] += j0 * j1;
        jtj[1][1] += j1 * j1;
    }
    jtj[1][0] = jtj[0][1];
    let dof = points.len().saturating_sub(2).max(1) as f64;
    let sigma2 = sse / dof;
    let cov = invert2_diagonal(jtj)
        .map_or(vec![f64::INFINITY; 2], |d| vec![d[0] * sigma2, d[1] * sigma2]);

    Ok(FitResult {
        parameters: vec![
            ("r_max".into(), r_max),
            ("p_sat".into(), p_sat),
            ("linear_slope".into(), r_max / p_sat),
        ],
        residual_norm: sse.sqrt(),
        covariance_diagonal: cov,
    })
}

/// Coefficient of determination of rate = slope * power through the
/// origin, the natural null model for the unsaturated regime.
pub fn linear_r_squared_through_origin(points: &[(f64, f64)]) -> f64 {
    let num: f64 = points.iter().map(|&(p, r)| p * r).sum();
    let den: f64 = points.iter().map(|&(p, _)| p * p).sum();
    if den <= 0.0 {
        return 0.0;
    }
    let slope = num / den;
    let ss_res: f64 = points
        .iter()
        .map(|&(p, r)| {
            let e = r - slope * p;
            e * e
        })
        .sum();
    let ss_tot: f64 = points.iter().map(|&(_, r)| r * r).sum();
    if ss_tot <= 0.0 {
        return 0.0;
    }
    1.0 - ss_res / ss_tot
}

fn solve2(a: [[f64; 2]; 2], b: [f64; 2]) -> Option<(f64, f64)> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.abs() < 1e-300 {
        return None;
    }
    let x = (b[0] * a[1][1] - b[1] * a[0][1]) / det;
    let y = (a[0][0] * b[1] - a[1][0] * b[0]) / det;
    (x.is_finite() && y.is_finite()).then_some((x, y))
}

fn invert2_diagonal(a: [[f64; 2]; 2]) -> Option<[f64; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.abs() < 1e-300 {
        return None;
    }
    Some([a[1][1] / det, a[0][0] / det])
}

#[cfg(test)]
mod tests {
    use super::*;
    use ablatron_core::rng::ChaCha8Rng;
    use rand::{Rng, SeedableRng};

    fn hinge_points(threshold: f64, slope: f64) -> Vec<(f64, f64)> {
        (0..10)
            .map(|i| {
                let f = 120.0 + (1000.0 - 120.0) * i as f64 / 9.0;
                (f, slope * (f - threshold).max(0.0))
            })
            .collect()
    }

    #[test]
    fn threshold_fit_is_exact_on_noiseless_data() {
        let fit = fit_threshold(&hinge_points(600.0, 7.5e-8)).unwrap();
        let th = fit.value("threshold").unwrap();
        let slope = fit.value("slope").unwrap();
        assert!((th - 600.0).abs() / 600.0 < 1e-6, "threshold {th}");
        assert!((slope - 7.5e-8).abs() / 7.5e-8 < 1e-6);
        assert!(fit.residual_norm < 1e-12);
    }

    #[test]
    fn threshold_fit_survives_measurement_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noisy: Vec<(f64, f64)> = hinge_points(600.0, 7.5e-8)
            .into_iter()
            .map(|(f, d)| (f, d * (1.0 + 0.05 * (rng.gen::<f64>() - 0.5))))
            .collect();
        let fit = fit_threshold(&noisy).unwrap();
        let th = fit.value("threshold").unwrap();
        assert!((th - 600.0).abs() / 600.0 < 0.05, "threshold {th}");
    }

    #[test]
    fn threshold_fit_rejects_degenerate_inputs() {
        assert!(matches!(
            fit_threshold(&[(100.0, 0.0), (200.0, 1.0), (300.0, 2.0)]),
            Err(Error::DegenerateData(_))
        ));
        let flat: Vec<(f64, f64)> = (0..6).map(|i| (100.0 + i as f64, 0.0)).collect();
        assert!(matches!(fit_threshold(&flat), Err(Error::DegenerateData(_))));
    }

    fn saturation_points(r_max: f64, p_sat: f64) -> Vec<(f64, f64)> {
        [0.4e-3, 0.8e-3, 1.2e-3, 2e-3, 4e-3, 8e-3, 14e-3, 20e-3]
            .iter()
            .map(|&p| (p, r_max * p / (p + p_sat)))
            .collect()
    }

    #[test]
    fn saturation_fit_recovers_exact_curves_to_machine_precision() {
        let fit = fit_saturation(&saturation_points(50.0, 5e-3)).unwrap();
        let r_max = fit.value("r_max").unwrap();
        let p_sat = fit.value("p_sat").unwrap();
        assert!((r_max - 50.0).abs() / 50.0 < 1e-8, "r_max {r_max}");
        assert!((p_sat - 5e-3).abs() / 5e-3 < 1e-8, "p_sat {p_sat}");
        assert!((fit.value("linear_slope").unwrap() - 1e4).abs() / 1e4 < 1e-7);
    }

    #[test]
    fn saturation_fit_survives_measurement_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noisy: Vec<(f64, f64)> = saturation_points(50.0, 5e-3)
            .into_iter()
            .map(|(p, r)| (p, r * (1.0 + 0.03 * (rng.gen::<f64>() - 0.5))))
            .collect();
        let fit = fit_saturation(&noisy).unwrap();
        assert!((fit.value("r_max").unwrap() - 50.0).abs() / 50.0 < 0.10);
        assert!((fit.value("p_sat").unwrap() - 5e-3).abs() / 5e-3 < 0.10);
    }

    #[test]
    fn linear_data_blow_up_the_saturation_covariance() {
        let linear: Vec<(f64, f64)> = (1..=8).map(|i| (i as f64 * 1e-4, i as f64 * 2.0)).collect();
        let fit = fit_saturation(&linear).unwrap();
        // p_sat runs away and its uncertainty dwarfs the estimate.
        assert!(
            fit.relative_sigma(1) > 1e3 || fit.value("p_sat").unwrap() > 1.0,
            "p_sat {} rel sigma {}",
            fit.value("p_sat").unwrap(),
            fit.relative_sigma(1)
        );
        // The identifiable combination survives: the low-power slope.
        assert!((fit.value("linear_slope").unwrap() - 2e4).abs() / 2e4 < 1e-3);
    }

    #[test]
    fn saturation_fit_rejects_degenerate_inputs() {
        assert!(matches!(
            fit_saturation(&[(1e-3, 5.0), (2e-3, 8.0)]),
            Err(Error::DegenerateData(_))
        ));
        assert!(matches!(
            fit_saturation(&[(0.0, 0.0), (1e-3, 5.0), (2e-3, 8.0)]),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn through_origin_r_squared_is_one_on_proportional_data() {
        let pts: Vec<(f64, f64)> = (1..=5).map(|i| (i as f64, 3.0 * i as f64)).collect();
        assert!((linear_r_squared_through_origin(&pts) - 1.0).abs() < 1e-12);
        let saturating: Vec<(f64, f64)> =
            (1..=5).map(|i| (i as f64, i as f64 / (i as f64 + 1.0))).collect();
        assert!(linear_r_squared_through_origin(&saturating) < 0.95);
    }
}
