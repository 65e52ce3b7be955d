use ndarray::Array2;

use crate::error::Error;
use crate::fft::next_fast_len;
use crate::geometry::SectorGeometry;
use crate::grid::RegularGrid2;
use crate::spline::bspline3_hat;
use crate::Result;

/// Regular (θ, ρ) lattice with zero-pad margins, FFT-friendly counts.
#[derive(Debug, Clone, Copy)]
pub struct LatticeSpec {
    pub theta0: f64,
    pub rho0: f64,
    pub dtheta: f64,
    pub drho: f64,
    pub n_theta: usize,
    pub n_rho: usize,
    /// Pad cells kept clear of data on each side of the covered span.
    pub margin: usize,
    /// Angular half-support of the convolution kernel on this lattice.
    pub theta_k: f64,
}

impl LatticeSpec {
    /// Size a lattice for data mapped to [phi_min, phi_max]×[eta_min,
    /// eta_max] with the working rectangle [−β, β]×[rho_floor, 0]. The
    /// spacings follow the sample-density rule (largest neighbor
    /// distance, equality targeted); the θ period is enlarged past the
    /// kernel's angular reach so the cyclic convolution cannot wrap.
    #[allow(clippy::too_many_arguments)]
    pub fn fit(
        beta: f64,
        rho_floor: f64,
        phi_min: f64,
        phi_max: f64,
        eta_min: f64,
        eta_max: f64,
        dtheta: f64,
        drho: f64,
        margin: usize,
    ) -> Result<Self> {
        if !(dtheta > 0.0 && drho > 0.0) {
            return Err(Error::numerical(format!(
                "degenerate lattice spacing: dtheta={dtheta}, drho={drho}"
            )));
        }
        let m = margin as f64;
        let theta0 = (-beta).min(phi_min) - m * dtheta;
        let rho_lo = rho_floor.min(eta_min);
        let rho0 = rho_lo - m * drho;
        let theta_hi = beta.max(phi_max);
        let rho_hi = eta_max.max(0.0);
        let theta_k = rho0.exp().acos().min(std::f64::consts::FRAC_PI_2 - 1e-6);

        let span_theta = theta_hi + m * dtheta - theta0;
        let span_rho = rho_hi + m * drho - rho0;
        let n_theta = next_fast_len(
            (2 * ((span_theta / dtheta).ceil() as usize + 1))
                .max(((span_theta + 2.0 * theta_k) / dtheta).ceil() as usize + 16),
        );
        let n_rho = next_fast_len(
            (2 * ((span_rho / drho).ceil() as usize + 1))
                .max(((span_rho + rho0.abs()) / drho).ceil() as usize + 16),
        );
        Ok(LatticeSpec {
            theta0,
            rho0,
            dtheta,
            drho,
            n_theta,
            n_rho,
            margin,
            theta_k,
        })
    }

    /// Lattice-unit θ coordinate.
    pub fn xi(&self, theta: f64) -> f64 {
        (theta - self.theta0) / self.dtheta
    }

    /// Lattice-unit ρ coordinate.
    pub fn eta(&self, rho: f64) -> f64 {
        (rho - self.rho0) / self.drho
    }
}

/// Smooth spectral window limiting the B₃ deconvolution amplification:
/// per axis, unit response up to ω_cut/2 and a raised-cosine taper to
/// zero at ω_cut, where |B̂₃(ω_cut)| equals the threshold.
#[derive(Debug, Clone, Copy)]
pub struct SpectralWindow {
    pub threshold: f64,
    pub omega_cut: f64,
}

impl SpectralWindow {
    pub fn new(threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::config(format!(
                "window threshold must lie in (0,1), got {threshold}"
            )));
        }
        // First crossing of B̂₃(ω) = threshold; B̂₃ decreases from 1 to 0
        // on (0, 2π).
        let (mut lo, mut hi) = (1e-9, 2.0 * std::f64::consts::PI - 1e-9);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if bspline3_hat(mid) > threshold {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(SpectralWindow {
            threshold,
            omega_cut: 0.5 * (lo + hi),
        })
    }

    /// Per-axis window weight at lattice-normalized frequency ω.
    pub fn weight(&self, omega: f64) -> f64 {
        let w1 = self.omega_cut / 2.0;
        let t = ((omega.abs() - w1) / (self.omega_cut - w1)).clamp(0.0, 1.0);
        let c = (std::f64::consts::FRAC_PI_2 * t).cos();
        c * c
    }
}

/// Map every node of a unit-square (t, x) grid through the geometry's
/// data map; returns (φ, η, r) fields.
pub(crate) fn map_data_grid(
    geom: &SectorGeometry,
    tt: &[f64],
    xx: &[f64],
) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let (nr, nc) = (tt.len(), xx.len());
    let mut phi = Array2::zeros((nr, nc));
    let mut eta = Array2::zeros((nr, nc));
    let mut rad = Array2::zeros((nr, nc));
    for (i, &t) in tt.iter().enumerate() {
        for (j, &x) in xx.iter().enumerate() {
            let (p, e, r) = geom.phi_eta_data(t, x);
            phi[(i, j)] = p;
            eta[(i, j)] = e;
            rad[(i, j)] = r;
        }
    }
    (phi, eta, rad)
}

/// Largest neighbor difference along both axes of a mapped field.
pub(crate) fn max_neighbor_diff(f: &Array2<f64>) -> f64 {
    let (nr, nc) = f.dim();
    let mut d = 0.0f64;
    for i in 0..nr {
        for j in 0..nc {
            if i + 1 < nr {
                d = d.max((f[(i + 1, j)] - f[(i, j)]).abs());
            }
            if j + 1 < nc {
                d = d.max((f[(i, j + 1)] - f[(i, j)]).abs());
            }
        }
    }
    d
}

fn finite_min_max(f: &Array2<f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in f.iter() {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo, hi)
}

/// Choose a lattice and spectral window for a full (unsplit) operator:
/// spacings are the largest neighbor (φ, η) distances over the data
/// grid, counts are rounded to FFT-friendly sizes.
pub fn choose_lattice(
    geom: &SectorGeometry,
    data_grid: &RegularGrid2,
    _radon_grid: &RegularGrid2,
    window_threshold: f64,
) -> Result<(LatticeSpec, SpectralWindow)> {
    let tt: Vec<f64> = (0..data_grid.n1).map(|i| data_grid.coord1(i)).collect();
    let xx: Vec<f64> = (0..data_grid.n2).map(|j| data_grid.coord2(j)).collect();
    let (phi, eta, _) = map_data_grid(geom, &tt, &xx);
    let dtheta = max_neighbor_diff(&phi);
    let drho = max_neighbor_diff(&eta);
    let (phi_lo, phi_hi) = finite_min_max(&phi);
    let (eta_lo, eta_hi) = finite_min_max(&eta);
    let rho_floor = (geom.a_r * geom.beta.cos()).ln();
    let lattice = LatticeSpec::fit(
        geom.beta, rho_floor, phi_lo, phi_hi, eta_lo, eta_hi, dtheta, drho, 4,
    )?;
    let window = SpectralWindow::new(window_threshold)?;
    Ok((lattice, window))
}
