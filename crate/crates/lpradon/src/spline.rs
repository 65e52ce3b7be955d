use ndarray::Array2;

/// Cubic cardinal B-spline B₃: support [−2, 2], C², partition of unity.
pub fn bspline3(u: f64) -> f64 {
    let au = u.abs();
    if au < 1.0 {
        2.0 / 3.0 - au * au + au * au * au / 2.0
    } else if au < 2.0 {
        let d = 2.0 - au;
        d * d * d / 6.0
    } else {
        0.0
    }
}

/// Fourier transform of B₃ along one axis, in lattice-normalized
/// frequency: (sin(ω/2)/(ω/2))⁴, value 1 at ω = 0.
pub fn bspline3_hat(w: f64) -> f64 {
    let x = w / 2.0;
    let s = if x.abs() > 1e-12 { x.sin() / x } else { 1.0 };
    s * s * s * s
}

/// Separable 2-D B₃ spectrum.
pub fn bspline3_hat2(w1: f64, w2: f64) -> f64 {
    bspline3_hat(w1) * bspline3_hat(w2)
}

#[inline]
fn stencil(frac: f64) -> [f64; 4] {
    [
        bspline3(frac + 1.0),
        bspline3(frac),
        bspline3(frac - 1.0),
        bspline3(frac - 2.0),
    ]
}

#[inline]
fn wrap(i: i64, n: i64) -> usize {
    i.rem_euclid(n) as usize
}

/// Scatter weighted samples onto an m×n lattice through the 4×4
/// tensor-product B₃ stencil. Coordinates are in lattice units; the
/// lattice is treated as cyclic (zero padding keeps wrap-around out of
/// the region of interest).
pub fn smear_to_lattice(vals: &[f64], xi: &[f64], eta: &[f64], m: usize, n: usize) -> Array2<f64> {
    assert_eq!(vals.len(), xi.len());
    assert_eq!(vals.len(), eta.len());
    let mut field = Array2::<f64>::zeros((m, n));
    let (mi, ni) = (m as i64, n as i64);
    for ((&v, &x), &y) in vals.iter().zip(xi).zip(eta) {
        if v == 0.0 {
            continue;
        }
        let bx = x.floor();
        let by = y.floor();
        let wx = stencil(x - bx);
        let wy = stencil(y - by);
        let (bx, by) = (bx as i64, by as i64);
        for (di, &wxi) in wx.iter().enumerate() {
            let row = wrap(bx - 1 + di as i64, mi);
            for (dj, &wyj) in wy.iter().enumerate() {
                let col = wrap(by - 1 + dj as i64, ni);
                field[(row, col)] += v * wxi * wyj;
            }
        }
    }
    field
}

/// Evaluate a lattice field at scattered points through the same 4×4
/// B₃ stencil; the exact transpose of [`smear_to_lattice`].
pub fn interpolate_from_lattice(field: &Array2<f64>, xi: &[f64], eta: &[f64]) -> Vec<f64> {
    assert_eq!(xi.len(), eta.len());
    let (m, n) = field.dim();
    let (mi, ni) = (m as i64, n as i64);
    let mut out = Vec::with_capacity(xi.len());
    for (&x, &y) in xi.iter().zip(eta) {
        let bx = x.floor();
        let by = y.floor();
        let wx = stencil(x - bx);
        let wy = stencil(y - by);
        let (bx, by) = (bx as i64, by as i64);
        let mut acc = 0.0;
        for (di, &wxi) in wx.iter().enumerate() {
            let row = wrap(bx - 1 + di as i64, mi);
            for (dj, &wyj) in wy.iter().enumerate() {
                let col = wrap(by - 1 + dj as i64, ni);
                acc += field[(row, col)] * wxi * wyj;
            }
        }
        out.push(acc);
    }
    out
}

/// Catmull-Rom cubic interpolation of a trace at a fractional sample
/// position. Positions outside [0, n−1] return 0; out-of-range stencil
/// taps contribute 0 (truncation, no extrapolation).
pub fn catmull(trace: &[f64], pos: f64) -> f64 {
    let n = trace.len();
    if !(pos >= 0.0 && pos <= (n - 1) as f64) {
        return 0.0;
    }
    let j = pos.floor() as i64;
    let u = pos - j as f64;
    let tap = |k: i64| -> f64 {
        let idx = j + k;
        if idx < 0 || idx >= n as i64 {
            0.0
        } else {
            trace[idx as usize]
        }
    };
    let (p0, p1, p2, p3) = (tap(-1), tap(0), tap(1), tap(2));
    0.5 * (2.0 * p1
        + (-p0 + p2) * u
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u * u
        + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u * u * u)
}

/// Catmull-Rom taps and weights at a position, for building transposes
/// of trace interpolation. Returns None outside [0, n−1].
pub fn catmull_taps(n: usize, pos: f64) -> Option<([i64; 4], [f64; 4])> {
    if !(pos >= 0.0 && pos <= (n - 1) as f64) {
        return None;
    }
    let j = pos.floor() as i64;
    let u = pos - j as f64;
    let u2 = u * u;
    let u3 = u2 * u;
    let w = [
        0.5 * (-u + 2.0 * u2 - u3),
        0.5 * (2.0 - 5.0 * u2 + 3.0 * u3),
        0.5 * (u + 4.0 * u2 - 3.0 * u3),
        0.5 * (-u2 + u3),
    ];
    Some(([j - 1, j, j + 1, j + 2], w))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bspline3_node_values() {
        assert!((bspline3(0.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((bspline3(1.0) - 1.0 / 6.0).abs() < 1e-15);
        assert!((bspline3(-1.0) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(bspline3(2.0), 0.0);
        assert_eq!(bspline3(-2.5), 0.0);
    }

    #[test]
    fn bspline3_partition_of_unity() {
        for k in 0..50 {
            let frac = k as f64 / 50.0;
            let s: f64 = (-3..=3).map(|i| bspline3(frac - i as f64)).sum();
            assert!((s - 1.0).abs() < 1e-14, "frac={frac}: sum={s}");
        }
    }

    #[test]
    fn bspline3_hat_known_values() {
        assert_eq!(bspline3_hat(0.0), 1.0);
        let expected = (2.0 / std::f64::consts::PI).powi(4);
        assert!((bspline3_hat(std::f64::consts::PI) - expected).abs() < 1e-14);
        assert!((bspline3_hat2(0.0, std::f64::consts::PI) - expected).abs() < 1e-14);
    }

    #[test]
    fn bspline3_hat_matches_quadrature() {
        // ∫ B₃(x)·cos(ωx) dx over the support, by Simpson's rule.
        for &w in &[0.3, 1.0, 2.2, 3.1] {
            let n = 4000;
            let h = 4.0 / n as f64;
            let f = |x: f64| bspline3(x) * (w * x).cos();
            let mut s = f(-2.0) + f(2.0);
            for i in 1..n {
                let x = -2.0 + i as f64 * h;
                s += f(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            let integral = s * h / 3.0;
            assert!(
                (integral - bspline3_hat(w)).abs() < 1e-9,
                "w={w}: {integral} vs {}",
                bspline3_hat(w)
            );
        }
    }

    #[test]
    fn smear_single_sample_is_outer_product_stencil() {
        let field = smear_to_lattice(&[1.0], &[5.0], &[7.0], 12, 16);
        let w = [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0];
        for (di, &wi) in w.iter().enumerate() {
            for (dj, &wj) in w.iter().enumerate() {
                let v = field[(4 + di, 6 + dj)];
                assert!((v - wi * wj).abs() < 1e-15);
            }
        }
        let total: f64 = field.iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn smear_interpolate_are_transposes() {
        let m = 17;
        let n = 13;
        let pts = 40;
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let xi: Vec<f64> = (0..pts).map(|_| 2.0 + next() * (m as f64 - 6.0)).collect();
        let eta: Vec<f64> = (0..pts).map(|_| 2.0 + next() * (n as f64 - 6.0)).collect();
        let vals: Vec<f64> = (0..pts).map(|_| next() - 0.5).collect();
        let mut field = Array2::<f64>::zeros((m, n));
        for v in field.iter_mut() {
            *v = next() - 0.5;
        }
        let smeared = smear_to_lattice(&vals, &xi, &eta, m, n);
        let interped = interpolate_from_lattice(&field, &xi, &eta);
        let lhs: f64 = smeared.iter().zip(field.iter()).map(|(a, b)| a * b).sum();
        let rhs: f64 = vals.iter().zip(interped.iter()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-13, "lhs={lhs}, rhs={rhs}");
    }

    #[test]
    fn catmull_reproduces_linear_data() {
        let trace: Vec<f64> = (0..10).map(|i| 0.5 + 0.25 * i as f64).collect();
        for k in 0..20 {
            // Interior positions with a full stencil.
            let pos = 1.0 + k as f64 * 6.9 / 19.0;
            let exact = 0.5 + 0.25 * pos;
            assert!((catmull(&trace, pos) - exact).abs() < 1e-13, "pos={pos}");
        }
        assert_eq!(catmull(&trace, -0.1), 0.0);
        assert_eq!(catmull(&trace, 9.1), 0.0);
    }

    #[test]
    fn catmull_taps_match_catmull() {
        let trace = [0.3, -1.2, 2.0, 0.7, -0.4, 1.1];
        for k in 0..30 {
            let pos = k as f64 * 5.0 / 29.0;
            let (idx, w) = catmull_taps(trace.len(), pos).unwrap();
            let mut acc = 0.0;
            for (t, &i) in idx.iter().enumerate() {
                if i >= 0 && (i as usize) < trace.len() {
                    acc += w[t] * trace[i as usize];
                }
            }
            assert!((acc - catmull(&trace, pos)).abs() < 1e-14, "pos={pos}");
        }
        assert!(catmull_taps(6, -0.01).is_none());
        assert!(catmull_taps(6, 5.01).is_none());
    }
}
