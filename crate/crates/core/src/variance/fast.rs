use std::f64::consts::PI;

use ndarray::Array2;
use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{clamp_index, SobolResult};
use crate::error::{Error, Result};
use crate::model::{check_arity, Model};
use crate::rng::{stream, stream_rng};
use crate::space::InputSpace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastOptions {
    /// Points on each input's search curve.
    pub n_per_input: usize,
    /// Interference order: harmonics 1..=M of the driver frequency.
    pub m: usize,
    pub seed: u64,
}

impl Default for FastOptions {
    fn default() -> Self {
        FastOptions { n_per_input: 1000, m: 4, seed: 0 }
    }
}

/// Driver frequency `(N - 1) / (2M)` followed by the complementary frequencies.
pub fn fast_frequencies(p: usize, n: usize, m: usize) -> Vec<usize> {
    let w0 = (n - 1) / (2 * m);
    let step = w0 / (2 * m);
    let mut w = vec![w0];
    if p > 1 {
        if step >= p - 1 {
            // floor(linspace(1, step, p - 1))
            let q = p - 1;
            for k in 0..q {
                let v = if q == 1 { 1.0 } else { 1.0 + (step as f64 - 1.0) * k as f64 / (q - 1) as f64 };
                w.push(v.floor() as usize);
            }
        } else {
            w.extend((0..p - 1).map(|k| k % step + 1));
        }
    }
    w
}

/// Extended FAST with one search curve per input and random phase shifts.
///
/// Uses `p * n_per_input` model evaluations.
pub fn fast_indices(model: &dyn Model, space: &InputSpace, opts: FastOptions) -> Result<SobolResult> {
    space.require_independent("extended FAST")?;
    let p = space.dim();
    let (n, m) = (opts.n_per_input, opts.m);
    if m == 0 {
        return Err(Error::config("FAST interference order must be at least 1"));
    }
    let bound = 4 * m * m + 2;
    if n < bound {
        return Err(Error::config(format!(
            "FAST needs n_per_input >= 4M^2 + 2 = {bound} for M = {m}, got {n}"
        )));
    }
    let omega = fast_frequencies(p, n, m);
    let w0 = omega[0];
    let mut rng = stream_rng(opts.seed, stream::PHASE);
    let mut x = Array2::zeros((n * p, p));
    for i in 0..p {
        // Input i carries the driver frequency; the others keep their order.
        let mut freqs = Vec::with_capacity(p);
        let mut rest = omega[1..].iter();
        for j in 0..p {
            freqs.push(if j == i { w0 } else { *rest.next().expect("p - 1 complementary frequencies") });
        }
        let phase: Vec<f64> = (0..p).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
        for k in 0..n {
            let s = 2.0 * PI * k as f64 / n as f64;
            for j in 0..p {
                let u = 0.5 + (freqs[j] as f64 * s + phase[j]).sin().asin() / PI;
                x[(i * n + k, j)] = space.marginal(j).quantile(u);
            }
        }
    }
    check_arity(model, &x)?;
    let y = model.evaluate(&x)?;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut first = Vec::with_capacity(p);
    let mut total = Vec::with_capacity(p);
    let mut var_sum = 0.0;
    let mut zero_variance = false;
    for i in 0..p {
        let mut buf: Vec<Complex<f64>> = y[i * n..(i + 1) * n].iter().map(|&v| Complex::new(v, 0.0)).collect();
        fft.process(&mut buf);
        // Spectrum at frequencies 1..=(N-1)/2.
        let sp: Vec<f64> = buf[1..=(n - 1) / 2].iter().map(|c| (c.norm() / n as f64).powi(2)).collect();
        let v = 2.0 * sp.iter().sum::<f64>();
        let d1 = 2.0 * (1..=m).map(|h| sp[h * w0 - 1]).sum::<f64>();
        let dt = 2.0 * sp[..w0 / 2].iter().sum::<f64>();
        let lo = y[i * n..(i + 1) * n].iter().copied().fold(f64::INFINITY, f64::min);
        let hi = y[i * n..(i + 1) * n].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo == hi {
            zero_variance = true;
        }
        var_sum += v;
        first.push(d1 / v);
        total.push(1.0 - dt / v);
    }
    if zero_variance {
        first = vec![0.0; p];
        total = vec![0.0; p];
        var_sum = 0.0;
    }
    Ok(SobolResult {
        first_order: first.iter().copied().map(clamp_index).collect(),
        total: total.iter().copied().map(clamp_index).collect(),
        first_order_raw: first,
        total_raw: total,
        total_variance: var_sum / p as f64,
        n_base: n,
        n_evals: (n * p) as u64,
        estimator: "efast".into(),
        zero_variance,
        first_order_ci: None,
        total_ci: None,
        first_order_se: None,
        total_se: None,
    })
}
