use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::grid::{CmpGather, RegularGrid2};
use crate::Result;

/// Test wavelets for synthetic events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wavelet {
    Ricker,
    GaussDeriv,
}

/// One hyperbolic event: arrival t = √(τ₀² + q₀²x²) carrying a wavelet.
#[derive(Debug, Clone, Copy)]
pub struct EventSpec {
    pub tau0: f64,
    pub q: f64,
    pub amplitude: f64,
    /// Peak frequency in cycles per unit time.
    pub freq: f64,
    pub wavelet: Wavelet,
    pub polarity: f64,
}

impl EventSpec {
    pub fn ricker(tau0: f64, q: f64, amplitude: f64, freq: f64) -> Self {
        EventSpec {
            tau0,
            q,
            amplitude,
            freq,
            wavelet: Wavelet::Ricker,
            polarity: 1.0,
        }
    }
}

/// Ricker wavelet with peak frequency fp.
pub fn ricker(t: f64, fp: f64) -> f64 {
    let a = (std::f64::consts::PI * fp * t).powi(2);
    (1.0 - 2.0 * a) * (-a).exp()
}

/// Derivative-of-Gaussian wavelet, unit peak amplitude.
pub fn gauss_deriv(t: f64, fp: f64) -> f64 {
    let s = 1.0 / (2.0 * std::f64::consts::PI * fp);
    -(t / s) * (0.5 - t * t / (2.0 * s * s)).exp()
}

fn wavelet_value(w: Wavelet, t: f64, fp: f64) -> f64 {
    match w {
        Wavelet::Ricker => ricker(t, fp),
        Wavelet::GaussDeriv => gauss_deriv(t, fp),
    }
}

/// Generate a synthetic gather: the sum of hyperbolic events plus
/// white Gaussian noise of the given rms, deterministic per seed.
pub fn synth_gather(
    grid: RegularGrid2,
    events: &[EventSpec],
    noise_rms: f64,
    seed: u64,
) -> Result<CmpGather> {
    let t_max = grid.extent1();
    let nyquist = 0.5 / grid.d1;
    for (k, ev) in events.iter().enumerate() {
        if !(ev.tau0 > 0.0 && ev.tau0 <= t_max) {
            return Err(Error::config(format!(
                "event {k}: tau0={} outside (0, {t_max}]",
                ev.tau0
            )));
        }
        if !(ev.q >= 0.0) {
            return Err(Error::config(format!("event {k}: negative moveout {}", ev.q)));
        }
        if !(ev.freq > 0.0 && ev.freq < nyquist) {
            return Err(Error::config(format!(
                "event {k}: frequency {} outside (0, Nyquist={nyquist})",
                ev.freq
            )));
        }
    }
    let mut data = grid.zeros();
    for j in 0..grid.n2 {
        let x = grid.coord2(j);
        for ev in events {
            let t0 = (ev.tau0 * ev.tau0 + ev.q * ev.q * x * x).sqrt();
            let amp = ev.amplitude * ev.polarity;
            for i in 0..grid.n1 {
                data[(i, j)] += amp * wavelet_value(ev.wavelet, grid.coord1(i) - t0, ev.freq);
            }
        }
    }
    if noise_rms > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Box-Muller, consuming pairs in a fixed order.
        let mut spare: Option<f64> = None;
        for v in data.iter_mut() {
            let z = if let Some(s) = spare.take() {
                s
            } else {
                let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                let u2: f64 = rng.random();
                let r = (-2.0 * u1.ln()).sqrt();
                let ang = 2.0 * std::f64::consts::PI * u2;
                spare = Some(r * ang.sin());
                r * ang.cos()
            };
            *v += noise_rms * z;
        }
    }
    CmpGather::new(grid, data)
}

/// Trace-decimation pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskPattern {
    RandomTraces,
    RegularDecimation,
}

/// Specification of a missing-trace mask.
#[derive(Debug, Clone, Copy)]
pub struct MaskSpec {
    /// Fraction of traces to kill, in [0, 1).
    pub fraction: f64,
    pub seed: u64,
    pub pattern: MaskPattern,
}

/// Build a trace mask: whole columns are killed; the live count is
/// exact for random masks and deterministic per seed.
pub fn make_mask(grid: RegularGrid2, spec: &MaskSpec) -> Result<Array2<bool>> {
    if !(spec.fraction >= 0.0 && spec.fraction < 1.0) {
        return Err(Error::config(format!(
            "mask fraction must lie in [0,1), got {}",
            spec.fraction
        )));
    }
    let n2 = grid.n2;
    let n_dead = ((spec.fraction * n2 as f64).round() as usize).min(n2 - 1);
    let mut live = vec![true; n2];
    match spec.pattern {
        MaskPattern::RandomTraces => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let mut order: Vec<usize> = (0..n2).collect();
            // Fisher-Yates shuffle.
            for i in (1..n2).rev() {
                let j = rng.random_range(0..=i);
                order.swap(i, j);
            }
            for &k in order.iter().take(n_dead) {
                live[k] = false;
            }
        }
        MaskPattern::RegularDecimation => {
            let n_live = n2 - n_dead;
            live.fill(false);
            for k in 0..n_live {
                let j = (k as f64 * n2 as f64 / n_live as f64).round() as usize;
                live[j.min(n2 - 1)] = true;
            }
        }
    }
    let mut mask = Array2::from_elem((grid.n1, grid.n2), false);
    for (j, &l) in live.iter().enumerate() {
        if l {
            for i in 0..grid.n1 {
                mask[(i, j)] = true;
            }
        }
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(n: usize) -> RegularGrid2 {
        RegularGrid2::new(n, n, 0.0, 1.0 / (n - 1) as f64, 0.0, 1.0 / (n - 1) as f64).unwrap()
    }

    #[test]
    fn ricker_peak_and_zero_crossings() {
        assert_eq!(ricker(0.0, 12.0), 1.0);
        // Zero crossings at t = ±1/(π·fp·√2).
        let t0 = 1.0 / (std::f64::consts::PI * 12.0 * 2.0f64.sqrt());
        assert!(ricker(t0, 12.0).abs() < 1e-12);
        assert!(ricker(-t0, 12.0).abs() < 1e-12);
    }

    #[test]
    fn zero_slowness_gives_flat_moveout() {
        let grid = unit_grid(48);
        let g = synth_gather(grid, &[EventSpec::ricker(0.4, 0.0, 1.0, 8.0)], 0.0, 1).unwrap();
        let first = g.data.column(0).to_owned();
        for j in 1..grid.n2 {
            for (a, b) in g.data.column(j).iter().zip(first.iter()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn event_peaks_track_the_hyperbola() {
        let grid = unit_grid(128);
        let ev = EventSpec::ricker(0.35, 0.5, 1.0, 10.0);
        let g = synth_gather(grid, &[ev], 0.0, 1).unwrap();
        for j in 0..grid.n2 {
            let x = grid.coord2(j);
            let expected = (ev.tau0 * ev.tau0 + ev.q * ev.q * x * x).sqrt();
            let col = g.data.column(j);
            let (mut best, mut best_v) = (0usize, f64::NEG_INFINITY);
            for (i, &v) in col.iter().enumerate() {
                if v > best_v {
                    best_v = v;
                    best = i;
                }
            }
            assert!(
                (grid.coord1(best) - expected).abs() <= grid.d1,
                "trace {j}: peak {} vs {expected}",
                grid.coord1(best)
            );
        }
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let grid = unit_grid(24);
        let ev = [EventSpec::ricker(0.5, 0.3, 1.0, 6.0)];
        let a = synth_gather(grid, &ev, 0.05, 42).unwrap();
        let b = synth_gather(grid, &ev, 0.05, 42).unwrap();
        let c = synth_gather(grid, &ev, 0.05, 43).unwrap();
        assert_eq!(a.to_flat(), b.to_flat());
        assert_ne!(a.to_flat(), c.to_flat());
    }

    #[test]
    fn event_validation() {
        let grid = unit_grid(24);
        assert!(synth_gather(grid, &[EventSpec::ricker(0.0, 0.3, 1.0, 6.0)], 0.0, 1).is_err());
        assert!(synth_gather(grid, &[EventSpec::ricker(1.5, 0.3, 1.0, 6.0)], 0.0, 1).is_err());
        assert!(synth_gather(grid, &[EventSpec::ricker(0.5, -0.1, 1.0, 6.0)], 0.0, 1).is_err());
        // Nyquist for d1 = 1/23 is 11.5.
        assert!(synth_gather(grid, &[EventSpec::ricker(0.5, 0.3, 1.0, 12.0)], 0.0, 1).is_err());
    }

    fn live_columns(mask: &Array2<bool>) -> Vec<usize> {
        let (n1, n2) = mask.dim();
        let mut live = Vec::new();
        for j in 0..n2 {
            let head = mask[(0, j)];
            for i in 0..n1 {
                assert_eq!(mask[(i, j)], head, "mask must kill whole traces");
            }
            if head {
                live.push(j);
            }
        }
        live
    }

    #[test]
    fn random_mask_counts_and_determinism() {
        let grid = unit_grid(40);
        let spec = MaskSpec {
            fraction: 0.5,
            seed: 9,
            pattern: MaskPattern::RandomTraces,
        };
        let a = make_mask(grid, &spec).unwrap();
        let b = make_mask(grid, &spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(live_columns(&a).len(), 20);
        let spec90 = MaskSpec {
            fraction: 0.9,
            ..spec
        };
        let c = make_mask(grid, &spec90).unwrap();
        assert_eq!(live_columns(&c).len(), 4);
    }

    #[test]
    fn regular_mask_spreads_live_traces() {
        let grid = unit_grid(40);
        let spec = MaskSpec {
            fraction: 0.75,
            seed: 0,
            pattern: MaskPattern::RegularDecimation,
        };
        let live = live_columns(&make_mask(grid, &spec).unwrap());
        assert_eq!(live.len(), 10);
        for w in live.windows(2) {
            let gap = w[1] - w[0];
            assert!((3..=5).contains(&gap), "gap {gap}");
        }
        assert!(make_mask(
            grid,
            &MaskSpec {
                fraction: 1.0,
                seed: 0,
                pattern: MaskPattern::RandomTraces
            }
        )
        .is_err());
    }
}
