//! Central-difference gradient check.

use std::collections::BTreeSet;

use guanzero::features::FLAT_LEN;
use guanzero::valuenet::{loss_and_grads, relu_pattern, NetParams, Sample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DELTA: f64 = 1e-4;

fn central_difference(
    p: &NetParams<f64>,
    batch: &[Sample],
    (t, r, c): (usize, usize, usize),
) -> (f64, bool) {
    let mut plus = p.clone();
    plus.tensors[t][[r, c]] += DELTA;
    let mut minus = p.clone();
    minus.tensors[t][[r, c]] -= DELTA;
    let lp = loss_and_grads(&plus, batch).unwrap().0;
    let lm = loss_and_grads(&minus, batch).unwrap().0;
    let base = relu_pattern(p, batch);
    let smooth = relu_pattern(&plus, batch) == base && relu_pattern(&minus, batch) == base;
    ((lp - lm) / (2.0 * DELTA), smooth)
}

/// Relative errors of ten coordinates per tensor. Rows of sparse-input
/// matrices come from inputs active in the batch, LSTM columns cycle
/// through the four gates, and coordinates whose perturbation crosses a
/// ReLU kink or whose gradient is below round-off level are redrawn.
pub fn gradient_errors(p: &NetParams<f64>, batch: &[Sample], seed: u64) -> Vec<(usize, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (_, g) = loss_and_grads(p, batch).unwrap();
    let h = p.shape.hidden;
    let hist_rows: Vec<usize> = batch
        .iter()
        .flat_map(|s| (0..5).flat_map(move |t| s.state.history_step_ones(t)))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let dense_rows: Vec<usize> = batch
        .iter()
        .flat_map(|s| {
            let mut v = s.state.flat_ones();
            v.extend(s.action.iter().map(|id| FLAT_LEN + id.index()));
            v.into_iter().map(move |k| k + h)
        })
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut out = Vec::new();
    for (t, tensor) in p.tensors.iter().enumerate() {
        let (rows, cols) = tensor.dim();
        let mut k = 0;
        let mut tries = 0;
        while k < 10 {
            tries += 1;
            assert!(tries < 1000, "no usable coordinates in tensor {t}");
            let r = match t {
                0 => hist_rows[rng.random_range(0..hist_rows.len())],
                3 if k % 2 == 0 => dense_rows[rng.random_range(0..dense_rows.len())],
                _ => rng.random_range(0..rows),
            };
            let c = if t <= 2 {
                (k % 4) * h + rng.random_range(0..h)
            } else {
                rng.random_range(0..cols)
            };
            let analytic = g.tensors[t][[r, c]];
            if analytic.abs() < 1e-7 {
                continue;
            }
            let (numeric, smooth) = central_difference(p, batch, (t, r, c));
            if !smooth {
                continue;
            }
            out.push((
                t,
                (numeric - analytic).abs() / numeric.abs().max(analytic.abs()),
            ));
            k += 1;
        }
    }
    out
}
