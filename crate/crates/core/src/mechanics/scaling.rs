use serde::{Deserialize, Serialize};

use crate::error::{Result, SkinError};

/// Power-law fit `k = c * x^exponent` in log-log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
}

/// Least-squares slope of `ln k` against `ln x`.
pub fn fit_scaling_exponent(samples: &[(f64, f64)]) -> Result<ScalingFit> {
    if samples.len() < 3 {
        return Err(SkinError::validation(format!(
            "scaling fit needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    if let Some(bad) = samples
        .iter()
        .find(|(x, k)| !(*x > 0.0 && *k > 0.0 && x.is_finite() && k.is_finite()))
    {
        return Err(SkinError::validation(format!(
            "non-positive sample ({}, {})",
            bad.0, bad.1
        )));
    }
    let n = samples.len() as f64;
    let (lx, lk): (Vec<f64>, Vec<f64>) = samples.iter().map(|(x, k)| (x.ln(), k.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let mk = lk.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(SkinError::validation(
            "scaling fit needs at least two distinct x values",
        ));
    }
    let sxk: f64 = lx.iter().zip(&lk).map(|(x, k)| (x - mx) * (k - mk)).sum();
    let slope = sxk / sxx;
    let intercept = mk - slope * mx;
    let ss_tot: f64 = lk.iter().map(|k| (k - mk).powi(2)).sum();
    let ss_res: f64 = lx
        .iter()
        .zip(&lk)
        .map(|(x, k)| (k - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(ScalingFit {
        exponent: slope,
        prefactor: intercept.exp(),
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let f = fit_scaling_exponent(&[(1.0, 1.0), (2.0, 8.0), (4.0, 64.0)]).unwrap();
        assert!((f.exponent - 3.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let c = fit_scaling_exponent(&[(1.0, 5.0), (2.0, 5.0), (4.0, 5.0)]).unwrap();
        assert!(c.exponent.abs() < 1e-12);
        assert!((c.prefactor - 5.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_scaling_exponent(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(fit_scaling_exponent(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(fit_scaling_exponent(&[(-1.0, 1.0), (2.0, 1.0), (3.0, 1.0)]).is_err());
    }
}
