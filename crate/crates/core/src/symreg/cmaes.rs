//! Separable CMA-ES: a diagonal-covariance evolution strategy with linear
//! time and space per sample.

use rand::Rng;
use rand_distr::StandardNormal;

/// Best point seen and its objective value.
#[derive(Clone, Debug, PartialEq)]
pub struct Optimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Minimizes `f` from `x0` with step size `sigma0` for `generations`
/// generations of the default population size `4 + floor(3 ln n)`.
///
/// The starting point is evaluated first, so the result is never worse than
/// `x0`. Non-finite objective values rank last.
pub fn minimize<R, F>(x0: &[f64], sigma0: f64, generations: usize, rng: &mut R, mut f: F) -> Optimum
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut best = Optimum {
        x: x0.to_vec(),
        value: finite_or_worst(f(x0)),
        evaluations: 1,
    };
    if n == 0 {
        return best;
    }
    let nf = n as f64;
    let lambda = 4 + (3.0 * nf.ln()).floor() as usize;
    let mu = lambda / 2;
    let raw: Vec<f64> = (0..mu)
        .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - ((i + 1) as f64).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let mueff = 1.0 / w.iter().map(|v| v * v).sum::<f64>();

    let cs = (mueff + 2.0) / (nf + mueff + 5.0);
    let ds = 1.0 + 2.0 * (((mueff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + cs;
    let cc = 4.0 / (nf + 4.0);
    let ccov_full = (1.0 / mueff) * 2.0 / ((nf + 2f64.sqrt()).powi(2))
        + (1.0 - 1.0 / mueff) * ((2.0 * mueff - 1.0) / ((nf + 2.0).powi(2) + mueff)).min(1.0);
    let ccov = (ccov_full * (nf + 2.0) / 3.0).min(1.0);
    let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

    let mut mean = x0.to_vec();
    let mut sigma = sigma0;
    let mut diag = vec![1.0f64; n];
    let mut ps = vec![0.0f64; n];
    let mut pc = vec![0.0f64; n];

    for g in 0..generations {
        let mut pop: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..lambda)
            .map(|_| {
                let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                let y: Vec<f64> = z.iter().zip(&diag).map(|(zi, di)| di.sqrt() * zi).collect();
                let x: Vec<f64> = mean.iter().zip(&y).map(|(m, yi)| m + sigma * yi).collect();
                let v = f(&x);
                (finite_or_worst(v), z, x)
            })
            .collect();
        best.evaluations += lambda;
        pop.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pop[0].0 < best.value {
            best.value = pop[0].0;
            best.x.clone_from(&pop[0].2);
        }

        let old = mean.clone();
        for (i, m) in mean.iter_mut().enumerate() {
            *m = (0..mu).map(|k| w[k] * pop[k].2[i]).sum();
        }
        if mean.iter().any(|v| !v.is_finite()) || !sigma.is_finite() {
            break;
        }
        let zmean: Vec<f64> = (0..n).map(|i| (0..mu).map(|k| w[k] * pop[k].1[i]).sum()).collect();
        let norm_cs = (cs * (2.0 - cs) * mueff).sqrt();
        for i in 0..n {
            ps[i] = (1.0 - cs) * ps[i] + norm_cs * zmean[i];
        }
        let ps_norm = ps.iter().map(|v| v * v).sum::<f64>().sqrt();
        let hsig = ps_norm / (1.0 - (1.0 - cs).powi(2 * (g as i32 + 1))).sqrt() / chi_n < 1.4 + 2.0 / (nf + 1.0);
        let norm_cc = (cc * (2.0 - cc) * mueff).sqrt();
        for i in 0..n {
            let step = (mean[i] - old[i]) / sigma;
            pc[i] = (1.0 - cc) * pc[i] + if hsig { norm_cc * step } else { 0.0 };
            let rank_mu: f64 = (0..mu)
                .map(|k| {
                    let y = (pop[k].2[i] - old[i]) / sigma;
                    w[k] * y * y
                })
                .sum();
            let correction = if hsig { 0.0 } else { cc * (2.0 - cc) * diag[i] };
            diag[i] = (1.0 - ccov) * diag[i]
                + ccov / mueff * (pc[i] * pc[i] + correction)
                + ccov * (1.0 - 1.0 / mueff) * rank_mu;
            diag[i] = diag[i].max(1e-300);
        }
        sigma *= ((cs / ds) * (ps_norm / chi_n - 1.0)).exp();
    }
    best
}

fn finite_or_worst(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    #[test]
    fn converges_on_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let r = minimize(&[3.0, -2.0, 1.0, 4.0], 1.0, 200, &mut rng, sphere);
        assert!(r.value < 1e-8, "{r:?}");
    }

    #[test]
    fn scaled_axes_benefit_from_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = |x: &[f64]| x.iter().enumerate().map(|(i, v)| 10f64.powi(i as i32) * v * v).sum::<f64>();
        let r = minimize(&[1.0; 5], 1.0, 400, &mut rng, f);
        assert!(r.value < 1e-6, "{r:?}");
    }

    #[test]
    fn never_worse_than_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let r = minimize(&[0.0, 0.0], 5.0, 3, &mut rng, sphere);
        assert_eq!(r.value, 0.0);
        assert_eq!(r.x, vec![0.0, 0.0]);
    }

    #[test]
    fn seeded_runs_repeat() {
        let a = minimize(&[1.0, 2.0], 1.0, 10, &mut ChaCha8Rng::seed_from_u64(5), sphere);
        let b = minimize(&[1.0, 2.0], 1.0, 10, &mut ChaCha8Rng::seed_from_u64(5), sphere);
        assert_eq!(a, b);
        assert_eq!(a.evaluations, 1 + 10 * 6);
    }

    #[test]
    fn nan_ranks_last() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let r = minimize(&[1.0], 1.0, 20, &mut rng, |x| if x[0] > 0.0 { f64::NAN } else { -x[0] });
        assert!(r.value.is_finite());
    }
}
