use std::path::PathBuf;
use std::time::Instant;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::fft::{fft2_inplace, omega};
use crate::geometry::SectorGeometry;
use crate::grid::{CmpGather, RadonImage, RegularGrid2, ScaleRecord};
use crate::kernel::precompute_zeta_hat_cached;
use crate::lattice::{map_data_grid, max_neighbor_diff, LatticeSpec, SpectralWindow};
use crate::spline::{bspline3_hat, catmull, catmull_taps, interpolate_from_lattice, smear_to_lattice};
use crate::Result;

/// Options controlling operator planning.
#[derive(Debug, Clone)]
pub struct PlanOptions {
    /// Extra split points in the time variable.
    pub n_splits_t: usize,
    /// Extra split points in the slowness variable.
    pub n_splits_q: usize,
    /// Threshold on |B̂₃| defining the spectral window cutoff.
    pub window_threshold: f64,
    /// Guard rows included past each interior time seam.
    pub guard: usize,
    /// Crossfade width (rows) of the seam partition of unity.
    pub ramp: usize,
    /// Oversampling factor of the kernel-spectrum gridding.
    pub osf: usize,
    /// Directory for cached kernel spectra (pure cache, safe to delete).
    pub cache_dir: Option<PathBuf>,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            n_splits_t: 1,
            n_splits_q: 1,
            window_threshold: 0.33,
            guard: 12,
            ramp: 14,
            osf: 4,
            cache_dir: None,
        }
    }
}

/// Per-stage wall times and size counters of one operator application.
#[derive(Debug, Clone, Default)]
pub struct ApplyStats {
    pub gridding_seconds: f64,
    pub fft_seconds: f64,
    pub interp_seconds: f64,
    pub total_seconds: f64,
    /// 5·n·log₂(n) per FFT plus stencil work, summed over stages.
    pub flop_proxy: f64,
    pub lattice_sizes: Vec<(usize, usize)>,
}

///// One split's precomputed state: geometry, lattice, spectral
/// multiplier, fused sample weights, and the mapped coordinates of its
/// data rows and output samples.
struct SlabPlan {
    lattice: LatticeSpec,
    /// Spectral multiplier: window · ζ̂ / B̂₃².
    mult: Array2<Complex64>,
    j0: usize,
    rows: usize,
    /// Fused gridding weights (cell area · trapezoid ends · seam
    /// crossfade · Jacobian/e^η factor 2a²t/r), row-major (rows × n2).
    wgt: Vec<f64>,
    /// Lattice-unit data coordinates, same layout as `wgt`.
    xi: Vec<f64>,
    eta: Vec<f64>,
    /// Radon columns this slab contributes to.
    cols: Vec<usize>,
    /// Lattice-unit output coordinates and output factors (cosψ/a, or 0
    /// for outputs outside this slab's valid region), laid out as
    /// cols-major: index = c·n_tau + i_tau.
    out_xi: Vec<f64>,
    out_eta: Vec<f64>,
    out_fac: Vec<f64>,
}

/// A planned discrete hyperbolic Radon transform: the gather and Radon
/// grids, the rescale record, and one log-polar convolution plan per
/// (time × slowness) split. `forward` and `adjoint` are exact discrete
/// transposes of each other.
pub struct OperatorPlan {
    pub gather_grid: RegularGrid2,
    pub radon_grid: RegularGrid2,
    pub options: PlanOptions,
    scale: ScaleRecord,
    slabs: Vec<SlabPlan>,
}

fn geometric_points(lo: f64, hi: f64, segments: usize) -> Vec<f64> {
    (0..=segments)
        .map(|i| lo * (hi / lo).powf(i as f64 / segments as f64))
        .collect()
}

/// Seam crossfade weight for a row at time t: sin² ramp over `ramp`
/// grid steps centered on each interior seam; the two sides of a seam
/// sum to exactly one.
fn seam_weight(t: f64, t_lo: f64, t_hi: f64, ramp_dt: f64, at_lo: bool, at_hi: bool) -> f64 {
    let half_sine_sq = |s: f64| {
        let u = (s / ramp_dt + 0.5).clamp(0.0, 1.0);
        let v = (std::f64::consts::FRAC_PI_2 * u).sin();
        v * v
    };
    let mut w = 1.0;
    if at_lo {
        w *= half_sine_sq(t - t_lo);
    }
    if at_hi {
        w *= half_sine_sq(t_hi - t);
    }
    w
}

impl OperatorPlan {
    /// Build a plan for the given physical grids. The gather grid must
    /// cover [0, T]×[0, X]; the Radon grid must have τ_min > 0,
    /// q_min > 0, and τ_max ≤ T.
    pub fn plan(
        gather_grid: RegularGrid2,
        radon_grid: RegularGrid2,
        options: PlanOptions,
    ) -> Result<Self> {
        let t_span = gather_grid.extent1();
        let x_span = gather_grid.extent2();
        if gather_grid.o1 != 0.0 || gather_grid.o2 != 0.0 {
            return Err(Error::config(
                "gather grid must cover [0,T]x[0,X] (zero origins)".to_string(),
            ));
        }
        let scale = ScaleRecord { t_span, x_span };
        let taus: Vec<f64> = (0..radon_grid.n1)
            .map(|i| scale.tau_to_unit(radon_grid.coord1(i)))
            .collect();
        let qs: Vec<f64> = (0..radon_grid.n2)
            .map(|j| scale.q_to_unit(radon_grid.coord2(j)))
            .collect();
        let tau_min = taus[0];
        if !(tau_min > 0.0) || *taus.last().unwrap() > 1.0 + 1e-9 {
            return Err(Error::config(format!(
                "intercept range [{}, {}] must lie in (0, T]",
                radon_grid.o1,
                radon_grid.extent1()
            )));
        }
        if !(qs[0] > 0.0) {
            return Err(Error::config("q_min must be positive".to_string()));
        }
        if options.osf < 2 {
            return Err(Error::config("kernel oversampling must be at least 2".to_string()));
        }

        let n1 = gather_grid.n1;
        let n2 = gather_grid.n2;
        let dt = 1.0 / (n1 - 1) as f64;
        let dx = 1.0 / (n2 - 1) as f64;

        let nst = options.n_splits_t;
        let nsq = options.n_splits_q;
        let mut tpts: Vec<f64> = geometric_points(tau_min, 1.0, nst + 1)
            .iter()
            .map(|p| (p / dt).round() * dt)
            .collect();
        *tpts.last_mut().unwrap() = 1.0;
        for w in tpts.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::config(
                    "time splits collapse on this grid; reduce n_splits_t".to_string(),
                ));
            }
        }
        let a0 = (qs[0] * qs[0]).atan();
        let a1 = (qs[qs.len() - 1] * qs[qs.len() - 1]).atan();
        let qpts: Vec<f64> = geometric_points(a0, a1, nsq + 1)
            .iter()
            .map(|a| a.tan().sqrt())
            .collect();

        let tt_all: Vec<f64> = (0..n1).map(|i| i as f64 * dt).collect();
        let xx: Vec<f64> = (0..n2).map(|j| j as f64 * dx).collect();

        let mut slabs = Vec::new();
        for jq in 0..=nsq {
            // Assign each output column to the sector whose arctan(q²)
            // band contains it.
            let interior = &qpts[1..=nsq];
            let cols: Vec<usize> = (0..qs.len())
                .filter(|&iq| interior.iter().filter(|&&p| p < qs[iq]).count() == jq)
                .collect();
            if cols.is_empty() {
                continue;
            }
            for it in 0..=nst {
                let slab = build_slab(SlabInputs {
                    t_lo: tpts[it],
                    t_hi: tpts[it + 1],
                    q_lo: qpts[jq],
                    q_hi: qpts[jq + 1],
                    at_lo: it > 0,
                    at_hi: it < nst,
                    tt_all: &tt_all,
                    xx: &xx,
                    taus: &taus,
                    qs: &qs,
                    cols: cols.clone(),
                    options: &options,
                })?;
                slabs.push(slab);
            }
        }

        Ok(OperatorPlan {
            gather_grid,
            radon_grid,
            options,
            scale,
            slabs,
        })
    }

    pub fn scale_record(&self) -> ScaleRecord {
        self.scale
    }

    /// Apply the forward transform R_h.
    pub fn forward(&self, gather: &CmpGather) -> Result<RadonImage> {
        self.forward_impl(gather, None)
    }

    pub fn forward_with_stats(&self, gather: &CmpGather) -> Result<(RadonImage, ApplyStats)> {
        let mut stats = ApplyStats::default();
        let start = Instant::now();
        let image = self.forward_impl(gather, Some(&mut stats))?;
        stats.total_seconds = start.elapsed().as_secs_f64();
        Ok((image, stats))
    }

    fn forward_impl(&self, gather: &CmpGather, mut stats: Option<&mut ApplyStats>) -> Result<RadonImage> {
        if gather.grid != self.gather_grid {
            return Err(Error::config("gather grid does not match plan".to_string()));
        }
        if gather.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("non-finite gather samples".to_string()));
        }
        let n_tau = self.radon_grid.n1;
        let mut out = self.radon_grid.zeros();
        let n2 = self.gather_grid.n2;
        for slab in &self.slabs {
            let (m, n) = (slab.lattice.n_theta, slab.lattice.n_rho);
            if let Some(s) = stats.as_deref_mut() {
                s.lattice_sizes.push((m, n));
            }

            let t0 = Instant::now();
            let mut vals = vec![0.0; slab.rows * n2];
            for i in 0..slab.rows {
                for j in 0..n2 {
                    vals[i * n2 + j] = slab.wgt[i * n2 + j] * gather.data[(slab.j0 + i, j)];
                }
            }
            let field = smear_to_lattice(&vals, &slab.xi, &slab.eta, m, n);
            if let Some(s) = stats.as_deref_mut() {
                s.gridding_seconds += t0.elapsed().as_secs_f64();
                s.flop_proxy += 32.0 * vals.len() as f64;
            }

            let t0 = Instant::now();
            let lattice_field = self.convolve(slab, field, false);
            if let Some(s) = stats.as_deref_mut() {
                s.fft_seconds += t0.elapsed().as_secs_f64();
                let points = (m * n) as f64;
                s.flop_proxy += 2.0 * 5.0 * points * points.log2();
            }

            let t0 = Instant::now();
            let interp = interpolate_from_lattice(&lattice_field, &slab.out_xi, &slab.out_eta);
            for (c, &col) in slab.cols.iter().enumerate() {
                for itau in 0..n_tau {
                    let idx = c * n_tau + itau;
                    out[(itau, col)] += interp[idx] * slab.out_fac[idx];
                }
            }
            if let Some(s) = stats.as_deref_mut() {
                s.interp_seconds += t0.elapsed().as_secs_f64();
                s.flop_proxy += 32.0 * interp.len() as f64;
            }
        }
        out.mapv_inplace(|v| v * self.scale.output_factor());
        RadonImage::new(self.radon_grid, out)
    }

    /// Apply the exact discrete transpose R_h*.
    pub fn adjoint(&self, image: &RadonImage) -> Result<CmpGather> {
        self.adjoint_impl(image, None)
    }

    pub fn adjoint_with_stats(&self, image: &RadonImage) -> Result<(CmpGather, ApplyStats)> {
        let mut stats = ApplyStats::default();
        let start = Instant::now();
        let gather = self.adjoint_impl(image, Some(&mut stats))?;
        stats.total_seconds = start.elapsed().as_secs_f64();
        Ok((gather, stats))
    }

    fn adjoint_impl(&self, image: &RadonImage, mut stats: Option<&mut ApplyStats>) -> Result<CmpGather> {
        if image.grid != self.radon_grid {
            return Err(Error::config("radon grid does not match plan".to_string()));
        }
        if image.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("non-finite image samples".to_string()));
        }
        let n_tau = self.radon_grid.n1;
        let n2 = self.gather_grid.n2;
        let mut acc = self.gather_grid.zeros();
        for slab in &self.slabs {
            let (m, n) = (slab.lattice.n_theta, slab.lattice.n_rho);
            if let Some(s) = stats.as_deref_mut() {
                s.lattice_sizes.push((m, n));
            }

            let t0 = Instant::now();
            let mut vals = vec![0.0; slab.cols.len() * n_tau];
            for (c, &col) in slab.cols.iter().enumerate() {
                for itau in 0..n_tau {
                    let idx = c * n_tau + itau;
                    vals[idx] = image.data[(itau, col)] * slab.out_fac[idx];
                }
            }
            let field = smear_to_lattice(&vals, &slab.out_xi, &slab.out_eta, m, n);
            if let Some(s) = stats.as_deref_mut() {
                s.gridding_seconds += t0.elapsed().as_secs_f64();
                s.flop_proxy += 32.0 * vals.len() as f64;
            }

            let t0 = Instant::now();
            let lattice_field = self.convolve(slab, field, true);
            if let Some(s) = stats.as_deref_mut() {
                s.fft_seconds += t0.elapsed().as_secs_f64();
                let points = (m * n) as f64;
                s.flop_proxy += 2.0 * 5.0 * points * points.log2();
            }

            let t0 = Instant::now();
            let interp = interpolate_from_lattice(&lattice_field, &slab.xi, &slab.eta);
            for i in 0..slab.rows {
                for j in 0..n2 {
                    let idx = i * n2 + j;
                    acc[(slab.j0 + i, j)] += interp[idx] * slab.wgt[idx];
                }
            }
            if let Some(s) = stats.as_deref_mut() {
                s.interp_seconds += t0.elapsed().as_secs_f64();
                s.flop_proxy += 32.0 * interp.len() as f64;
            }
        }
        acc.mapv_inplace(|v| v * self.scale.output_factor());
        CmpGather::new(self.gather_grid, acc)
    }

    /// FFT convolution with the slab's spectral multiplier (conjugated
    /// for the adjoint), normalized as a (θ, ρ) quadrature.
    fn convolve(&self, slab: &SlabPlan, field: Array2<f64>, conjugate: bool) -> Array2<f64> {
        let mut spec = field.mapv(|v| Complex64::new(v, 0.0));
        fft2_inplace(&mut spec, false);
        if conjugate {
            ndarray::Zip::from(&mut spec).and(&slab.mult).for_each(|s, &m| *s *= m.conj());
        } else {
            ndarray::Zip::from(&mut spec).and(&slab.mult).for_each(|s, &m| *s *= m);
        }
        fft2_inplace(&mut spec, true);
        let norm = 1.0 / (slab.lattice.dtheta * slab.lattice.drho);
        spec.mapv(|v| v.re * norm)
    }
}

struct SlabInputs<'a> {
    t_lo: f64,
    t_hi: f64,
    q_lo: f64,
    q_hi: f64,
    at_lo: bool,
    at_hi: bool,
    tt_all: &'a [f64],
    xx: &'a [f64],
    taus: &'a [f64],
    qs: &'a [f64],
    cols: Vec<usize>,
    options: &'a PlanOptions,
}

fn build_slab(inp: SlabInputs) -> Result<SlabPlan> {
    let SlabInputs {
        t_lo,
        t_hi,
        q_lo,
        q_hi,
        at_lo,
        at_hi,
        tt_all,
        xx,
        taus,
        qs,
        cols,
        options,
    } = inp;
    let n1 = tt_all.len();
    let n2 = xx.len();
    let dt = 1.0 / (n1 - 1) as f64;
    let dx = 1.0 / (n2 - 1) as f64;
    let guard = options.guard as i64;

    let geom = SectorGeometry::for_band(q_lo, q_hi, t_lo * t_lo, t_hi * t_hi, (t_lo * t_lo).atan())?;

    let j0 = (((t_lo / dt).round() as i64) - guard).max(0) as usize;
    let j1 = (((t_hi / dt).round() as i64) + guard).min(n1 as i64 - 1) as usize;
    let rows = j1 - j0 + 1;
    let tt = &tt_all[j0..=j1];

    let (phi, eta, rad) = map_data_grid(&geom, tt, xx);
    let dtheta = max_neighbor_diff(&phi);
    let drho = max_neighbor_diff(&eta);
    let mut phi_lo = f64::INFINITY;
    let mut phi_hi = f64::NEG_INFINITY;
    let mut eta_lo = f64::INFINITY;
    let mut eta_hi = f64::NEG_INFINITY;
    for (&p, &e) in phi.iter().zip(eta.iter()) {
        if p.is_finite() {
            phi_lo = phi_lo.min(p);
            phi_hi = phi_hi.max(p);
        }
        if e.is_finite() {
            eta_lo = eta_lo.min(e);
            eta_hi = eta_hi.max(e);
        }
    }
    let rho_floor = (geom.a_r * geom.beta.cos()).ln();
    let lattice = LatticeSpec::fit(
        geom.beta,
        rho_floor,
        phi_lo,
        phi_hi,
        eta_lo,
        eta_hi,
        dtheta,
        drho,
        4 + options.guard,
    )?;
    let (m, n) = (lattice.n_theta, lattice.n_rho);
    let rho_ceil = eta_hi.max(0.0);

    // Fused sample weights: trapezoid cell area with half weights at the
    // physical grid boundary, seam crossfade, and the 2a²t/r factor
    // (Jacobian/(2x) times the e^η input weight of the gridding).
    let ramp_dt = options.ramp as f64 * dt;
    let mut wgt = vec![0.0; rows * n2];
    let mut xi_l = vec![2.0; rows * n2];
    let mut eta_l = vec![2.0; rows * n2];
    for i in 0..rows {
        let t = tt[i];
        let mut bt = seam_weight(t, t_lo, t_hi, ramp_dt, at_lo, at_hi);
        if (j0 + i == 0) || (j0 + i == n1 - 1) {
            bt *= 0.5;
        }
        for j in 0..n2 {
            let bx = if j == 0 || j == n2 - 1 { 0.5 } else { 1.0 };
            let idx = i * n2 + j;
            let r = rad[(i, j)];
            let mut w = dt * dx * bt * bx * 2.0 * geom.a * geom.a * t / r;
            let x = lattice.xi(phi[(i, j)]);
            let y = lattice.eta(eta[(i, j)]);
            let bad = !(x.is_finite() && y.is_finite())
                || x < 2.0
                || x > (m - 4) as f64
                || y < 2.0
                || y > (n - 4) as f64;
            if bad {
                w = 0.0;
            } else {
                xi_l[idx] = x;
                eta_l[idx] = y;
            }
            wgt[idx] = w;
        }
    }

    let window = SpectralWindow::new(options.window_threshold)?;
    let zeta = precompute_zeta_hat_cached(&lattice, options.osf, options.cache_dir.as_deref());
    let mut mult = zeta.data;
    let win_t: Vec<f64> = (0..m).map(|k| window.weight(omega(k, m))).collect();
    let win_r: Vec<f64> = (0..n).map(|k| window.weight(omega(k, n))).collect();
    let bh_t: Vec<f64> = (0..m).map(|k| bspline3_hat(omega(k, m))).collect();
    let bh_r: Vec<f64> = (0..n).map(|k| bspline3_hat(omega(k, n))).collect();
    for k in 0..m {
        for l in 0..n {
            let bh = bh_t[k] * bh_r[l];
            mult[(k, l)] *= win_t[k] * win_r[l] / (bh * bh);
        }
    }

    // Output-side coordinates and factors for this slab's columns.
    let n_tau = taus.len();
    let mut out_xi = vec![2.0; cols.len() * n_tau];
    let mut out_eta = vec![2.0; cols.len() * n_tau];
    let mut out_fac = vec![0.0; cols.len() * n_tau];
    let p_floor = lattice.rho0.exp();
    for (c, &col) in cols.iter().enumerate() {
        let q = qs[col];
        let psi = (q * q).atan();
        let fac = psi.cos() / geom.a;
        for (itau, &tau) in taus.iter().enumerate() {
            let (theta, p) = geom.theta_rho_radon(tau, q);
            if !(p > p_floor) {
                continue;
            }
            let rho = p.ln();
            let x = lattice.xi(theta);
            let y = lattice.eta(rho);
            let valid = rho <= rho_ceil
                && x > 1.0
                && x < (m - 3) as f64
                && y > 1.0
                && y < (n - 3) as f64;
            if valid {
                let idx = c * n_tau + itau;
                out_xi[idx] = x;
                out_eta[idx] = y;
                out_fac[idx] = fac;
            }
        }
    }

    Ok(SlabPlan {
        lattice,
        mult,
        j0,
        rows,
        wgt,
        xi: xi_l,
        eta: eta_l,
        cols,
        out_xi,
        out_eta,
        out_fac,
    })
}

/// Direct-summation hyperbolic Radon transform: for each (τ, q) sum
/// f(√(τ² + q²x²), x)·Δx over offsets with trapezoid end weights,
/// evaluating the time coordinate by Catmull-Rom interpolation along
/// each trace (zero outside the recorded window).
pub fn direct_forward(gather: &CmpGather, radon_grid: &RegularGrid2) -> Result<RadonImage> {
    let g = &gather.grid;
    let mut out = radon_grid.zeros();
    let n_tau = radon_grid.n1;
    let n_q = radon_grid.n2;
    let taus: Vec<f64> = (0..n_tau).map(|i| radon_grid.coord1(i)).collect();
    let mut trace = vec![0.0; g.n1];
    for k in 0..g.n2 {
        let x = g.coord2(k);
        let wx = if k == 0 || k == g.n2 - 1 { 0.5 } else { 1.0 };
        let col = gather.data.column(k);
        for (dst, &src) in trace.iter_mut().zip(col.iter()) {
            *dst = src;
        }
        let scale = wx * g.d2;
        for iq in 0..n_q {
            let q = radon_grid.coord2(iq);
            let qx = q * x;
            for it in 0..n_tau {
                let t = (taus[it] * taus[it] + qx * qx).sqrt();
                let pos = (t - g.o1) / g.d1;
                out[(it, iq)] += scale * catmull(&trace, pos);
            }
        }
    }
    RadonImage::new(*radon_grid, out)
}

/// Exact transpose of [`direct_forward`]'s discrete stencil.
pub fn direct_adjoint(image: &RadonImage, gather_grid: &RegularGrid2) -> Result<CmpGather> {
    let g = gather_grid;
    let r = &image.grid;
    let mut acc = g.zeros();
    let taus: Vec<f64> = (0..r.n1).map(|i| r.coord1(i)).collect();
    for k in 0..g.n2 {
        let x = g.coord2(k);
        let wx = if k == 0 || k == g.n2 - 1 { 0.5 } else { 1.0 };
        let scale = wx * g.d2;
        for iq in 0..r.n2 {
            let q = r.coord2(iq);
            let qx = q * x;
            for it in 0..r.n1 {
                let t = (taus[it] * taus[it] + qx * qx).sqrt();
                let pos = (t - g.o1) / g.d1;
                if let Some((idx, w)) = catmull_taps(g.n1, pos) {
                    let v = scale * image.data[(it, iq)];
                    for (ii, ww) in idx.iter().zip(w.iter()) {
                        if *ii >= 0 && (*ii as usize) < g.n1 {
                            acc[(*ii as usize, k)] += v * ww;
                        }
                    }
                }
            }
        }
    }
    CmpGather::new(*g, acc)
}

/// Largest-singular-value estimate of the planned operator by power
/// iteration on R*R; deterministic for a fixed seed.
pub fn estimate_norm(plan: &OperatorPlan, iters: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = plan.gather_grid.zeros();
    for val in v.iter_mut() {
        *val = rng.random::<f64>() * 2.0 - 1.0;
    }
    let mut norm_v = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm_v == 0.0 {
        return Err(Error::numerical("degenerate start vector".to_string()));
    }
    v.mapv_inplace(|x| x / norm_v);
    let mut sigma = 0.0;
    for _ in 0..iters {
        let gather = CmpGather { grid: plan.gather_grid, data: v };
        let image = plan.forward(&gather)?;
        sigma = image.data.iter().map(|x| x * x).sum::<f64>().sqrt();
        let back = plan.adjoint(&image)?;
        v = back.data;
        norm_v = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm_v == 0.0 {
            return Ok(0.0);
        }
        v.mapv_inplace(|x| x / norm_v);
    }
    Ok(sigma)
}
