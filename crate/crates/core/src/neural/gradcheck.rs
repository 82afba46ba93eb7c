use rand::Rng as _;

use super::loss::Loss;
use super::net::Model;
use crate::rng::seeded;

/// Worst relative error between `backward` and central differences
/// (`h = 1e-5`) of a 4-row batch loss, over `trials` random perturbations of
/// the parameters and random inputs. Points where a ReLU or hinge kink lies
/// within the step are redrawn.
pub fn gradient_check<M: Model + Clone>(model: &M, loss: Loss, trials: usize, seed: u64) -> f64 {
    let mut rng = seeded(seed);
    let d = model.input_dim();
    let rows = 4;
    let mut worst: f64 = 0.0;
    let mut done = 0;
    let mut ws = M::Workspace::default();
    while done < trials {
        let x: Vec<f64> = (0..rows * d)
            .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        let y: Vec<f64> = (0..rows)
            .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        let ybar = 0.25 * y.iter().sum::<f64>() / rows as f64;
        let mut m = model.clone();
        let mut p = m.params();
        for v in &mut p {
            *v += rng.random_range(-0.3..0.3);
        }
        m.set_params(&p).unwrap();
        let objective = |m: &M, ws: &mut M::Workspace| {
            let mut out = vec![0.0; rows];
            m.forward_batch(&x, rows, &mut out, ws);
            out.iter()
                .zip(&y)
                .map(|(&f, &t)| loss.value(f, t, ybar))
                .sum::<f64>()
        };
        let mut out = vec![0.0; rows];
        m.forward_batch(&x, rows, &mut out, &mut ws);
        // Skip points near the hinge kink.
        if out.iter().zip(&y).any(|(f, t)| (1.0 - f * t).abs() < 1e-3) {
            continue;
        }
        let g: Vec<f64> = out
            .iter()
            .zip(&y)
            .map(|(&f, &t)| loss.derivative(f, t, ybar))
            .collect();
        let mut grad = vec![0.0; m.num_params()];
        m.backward(&x, rows, &g, &mut ws, &mut grad);
        let h = 1e-5;
        let mut kink = false;
        let mut errs = Vec::new();
        for idx in 0..p.len() {
            let mut q = p.clone();
            q[idx] += h;
            let mut mq = m.clone();
            mq.set_params(&q).unwrap();
            let up = objective(&mq, &mut ws);
            q[idx] -= 2.0 * h;
            mq.set_params(&q).unwrap();
            let down = objective(&mq, &mut ws);
            let num = (up - down) / (2.0 * h);
            // A kink crossed within the step shows as a large mismatch on
            // both sides; detect it from the one-sided differences.
            let mid = objective(&m, &mut ws);
            let left = (mid - down) / h;
            let right = (up - mid) / h;
            if (left - right).abs() > 1e-3 * (1.0 + left.abs()) {
                kink = true;
                break;
            }
            errs.push((num - grad[idx]).abs() / (num.abs().max(grad[idx].abs()).max(1e-6)));
        }
        if kink {
            continue;
        }
        for e in errs {
            worst = worst.max(e);
        }
        done += 1;
    }
    worst
}
