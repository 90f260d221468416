//! Least-squares fit of the exponential saturation curve
//! `r(i) = a0 * (1 - exp(-i / tau))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GRID_POINTS: usize = 240;
const MAX_ITER: usize = 200;
const REL_STEP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationFit {
    pub a0: f64,
    pub tau: f64,
    pub residual_rms: f64,
}

impl SaturationFit {
    pub fn eval(&self, i: f64) -> f64 {
        saturation_model(self.a0, self.tau, i)
    }
}

#[inline]
pub fn saturation_model(a0: f64, tau: f64, i: f64) -> f64 {
    a0 * -(-i / tau).exp_m1()
}

/// Fit `(a0, tau)` to `(i, r)` samples.
///
/// `tau` is seeded from a log-spaced grid where, for each candidate, the
/// optimal `a0` is solved in closed form. The pair is then refined by damped
/// Gauss–Newton on `(a0, ln tau)`.
pub fn fit_saturation(samples: &[(f64, f64)]) -> Result<SaturationFit> {
    if samples.len() < 3 {
        return Err(Error::FitFailure(format!(
            "need at least 3 samples, got {}",
            samples.len()
        )));
    }
    if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::FitFailure("sample positions must be strictly increasing".into()));
    }
    if samples
        .iter()
        .any(|&(i, r)| !i.is_finite() || !r.is_finite() || i <= 0.0)
    {
        return Err(Error::FitFailure(
            "samples must be finite with positive positions".into(),
        ));
    }
    if samples.iter().all(|&(_, r)| r == 0.0) {
        return Err(Error::FitFailure("all observations are zero".into()));
    }

    let i_min = samples[0].0;
    let i_max = samples[samples.len() - 1].0;
    let (lo, hi) = ((i_min / 100.0).ln(), (i_max * 100.0).ln());
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for k in 0..GRID_POINTS {
        let u = lo + (hi - lo) * k as f64 / (GRID_POINTS - 1) as f64;
        let tau = u.exp();
        let a0 = optimal_amplitude(samples, tau);
        let sse = sse(samples, a0, tau);
        if sse < best.0 {
            best = (sse, a0, u);
        }
    }
    let (mut cur_sse, mut a0, mut u) = best;

    let mut lambda = 1e-3;
    for _ in 0..MAX_ITER {
        // normal equations of the 2-parameter problem
        let tau = u.exp();
        let (mut jtj, mut jtr) = ([[0.0f64; 2]; 2], [0.0f64; 2]);
        for &(i, r) in samples {
            let e = (-i / tau).exp();
            let g = 1.0 - e;
            let res = r - a0 * g;
            let ja = g;
            // d/du of a0 * (1 - exp(-i e^{-u})) = -a0 * e * i / tau
            let ju = -a0 * e * i / tau;
            jtj[0][0] += ja * ja;
            jtj[0][1] += ja * ju;
            jtj[1][1] += ju * ju;
            jtr[0] += ja * res;
            jtr[1] += ju * res;
        }
        jtj[1][0] = jtj[0][1];

        let mut accepted = false;
        for _ in 0..30 {
            let m00 = jtj[0][0] * (1.0 + lambda);
            let m11 = jtj[1][1] * (1.0 + lambda) + 1e-300;
            let det = m00 * m11 - jtj[0][1] * jtj[1][0];
            if det.abs() < 1e-300 || !det.is_finite() {
                lambda *= 10.0;
                continue;
            }
            let da = (m11 * jtr[0] - jtj[0][1] * jtr[1]) / det;
            let du = (m00 * jtr[1] - jtj[1][0] * jtr[0]) / det;
            let (na, nu) = (a0 + da, u + du);
            let new_sse = sse(samples, na, nu.exp());
            if new_sse.is_finite() && new_sse <= cur_sse {
                let rel = (da.abs() / a0.abs().max(1e-300)).max(du.abs() / u.abs().max(1.0));
                a0 = na;
                u = nu;
                cur_sse = new_sse;
                lambda = (lambda * 0.3).max(1e-12);
                accepted = true;
                if rel < REL_STEP_TOL {
                    return finish(samples, a0, u);
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no descent direction left: at a minimum to working precision
            break;
        }
    }
    finish(samples, a0, u)
}

fn finish(samples: &[(f64, f64)], a0: f64, u: f64) -> Result<SaturationFit> {
    let tau = u.exp();
    if !(a0 > 0.0) || !tau.is_finite() || tau <= 0.0 {
        return Err(Error::FitFailure(format!("fit diverged (a0 = {a0}, tau = {tau})")));
    }
    let residual_rms = (sse(samples, a0, tau) / samples.len() as f64).sqrt();
    Ok(SaturationFit { a0, tau, residual_rms })
}

fn optimal_amplitude(samples: &[(f64, f64)], tau: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for &(i, r) in samples {
        let g = saturation_model(1.0, tau, i);
        num += g * r;
        den += g * g;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn sse(samples: &[(f64, f64)], a0: f64, tau: f64) -> f64 {
    samples
        .iter()
        .map(|&(i, r)| {
            let d = r - saturation_model(a0, tau, i);
            d * d
        })
        .sum()
}
