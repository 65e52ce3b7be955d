use std::cell::RefCell;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Smallest 2,3,5-smooth integer ≥ n.
pub fn next_fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for p in [2, 3, 5] {
            while k % p == 0 {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}

/// Angular frequency of DFT bin k on an n-point lattice, in
/// lattice-normalized units (2π·fftfreq).
pub fn omega(k: usize, n: usize) -> f64 {
    let k2 = if k <= n / 2 { k as i64 } else { k as i64 - n as i64 };
    2.0 * std::f64::consts::PI * k2 as f64 / n as f64
}

/// In-place 2-D FFT of a standard-layout matrix. The inverse transform
/// is normalized by 1/(m·n). Column passes run on transposed tiles to
/// keep the working set small.
pub fn fft2_inplace(a: &mut Array2<Complex64>, inverse: bool) {
    let (m, n) = a.dim();
    let slice = a.as_slice_mut().expect("fft2_inplace requires standard layout");

    let row_fft = plan(n, inverse);
    let col_fft = plan(m, inverse);
    let scratch_len = row_fft
        .get_inplace_scratch_len()
        .max(col_fft.get_inplace_scratch_len());
    let mut scratch = vec![Complex64::ZERO; scratch_len];

    for chunk in slice.chunks_exact_mut(n) {
        row_fft.process_with_scratch(chunk, &mut scratch);
    }

    const TILE: usize = 16;
    let mut buf = vec![Complex64::ZERO; TILE * m];
    let mut j0 = 0;
    while j0 < n {
        let w = TILE.min(n - j0);
        for i in 0..m {
            let row = &slice[i * n + j0..i * n + j0 + w];
            for (t, &v) in row.iter().enumerate() {
                buf[t * m + i] = v;
            }
        }
        for col in buf[..w * m].chunks_exact_mut(m) {
            col_fft.process_with_scratch(col, &mut scratch);
        }
        for i in 0..m {
            let row = &mut slice[i * n + j0..i * n + j0 + w];
            for (t, v) in row.iter_mut().enumerate() {
                *v = buf[t * m + i];
            }
        }
        j0 += w;
    }

    if inverse {
        let scale = 1.0 / (m * n) as f64;
        for v in slice.iter_mut() {
            *v *= scale;
        }
    }
}

/// In-place 1-D FFT of a complex buffer.
pub fn fft_inplace(buf: &mut [Complex64], inverse: bool) {
    let f = plan(buf.len(), inverse);
    let mut scratch = vec![Complex64::ZERO; f.get_inplace_scratch_len()];
    f.process_with_scratch(buf, &mut scratch);
    if inverse {
        let scale = 1.0 / buf.len() as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn next_fast_len_is_smooth_and_minimal() {
        assert_eq!(next_fast_len(1), 1);
        assert_eq!(next_fast_len(7), 8);
        assert_eq!(next_fast_len(11), 12);
        assert_eq!(next_fast_len(120), 120);
        assert_eq!(next_fast_len(121), 125);
        for n in 1..500 {
            let m = next_fast_len(n);
            assert!(m >= n);
            let mut k = m;
            for p in [2, 3, 5] {
                while k % p == 0 {
                    k /= p;
                }
            }
            assert_eq!(k, 1, "n={n} -> m={m}");
        }
    }

    #[test]
    fn omega_covers_signed_frequencies() {
        use std::f64::consts::PI;
        assert_eq!(omega(0, 8), 0.0);
        assert!((omega(2, 8) - PI / 2.0).abs() < 1e-15);
        assert!((omega(4, 8) - PI).abs() < 1e-15);
        assert!((omega(5, 8) + 3.0 * PI / 4.0).abs() < 1e-15);
        assert!((omega(7, 8) + PI / 4.0).abs() < 1e-15);
    }

    fn dft2_reference(a: &Array2<Complex64>) -> Array2<Complex64> {
        let (m, n) = a.dim();
        let mut out = Array2::<Complex64>::zeros((m, n));
        for k in 0..m {
            for l in 0..n {
                let mut acc = Complex64::ZERO;
                for i in 0..m {
                    for j in 0..n {
                        let ph = -2.0 * std::f64::consts::PI
                            * (k as f64 * i as f64 / m as f64 + l as f64 * j as f64 / n as f64);
                        acc += a[(i, j)] * Complex64::from_polar(1.0, ph);
                    }
                }
                out[(k, l)] = acc;
            }
        }
        out
    }

    #[test]
    fn fft2_matches_reference_dft() {
        let (m, n) = (6, 10);
        let mut a = Array2::<Complex64>::zeros((m, n));
        let mut state = 1u64;
        for v in a.iter_mut() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let re = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let im = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            *v = Complex64::new(re, im);
        }
        let reference = dft2_reference(&a);
        let orig = a.clone();
        fft2_inplace(&mut a, false);
        for (x, y) in a.iter().zip(reference.iter()) {
            assert!((x - y).norm() < 1e-10);
        }
        fft2_inplace(&mut a, true);
        for (x, y) in a.iter().zip(orig.iter()) {
            assert!((x - y).norm() < 1e-12);
        }
    }
}
