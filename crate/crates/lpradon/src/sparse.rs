use ndarray::Array2;

use crate::error::Error;
use crate::grid::{CmpGather, RadonImage};
use crate::operator::{estimate_norm, OperatorPlan};
use crate::Result;

/// Soft-thresholding (shrinkage) function: zero inside ±μ/2, shifted
/// toward zero by μ/2 outside.
pub fn soft_threshold(v: f64, mu: f64) -> f64 {
    debug_assert!(mu >= 0.0);
    let h = mu / 2.0;
    if v >= h {
        v - h
    } else if v <= -h {
        v + h
    } else {
        0.0
    }
}

/// Configuration of the iterative soft-thresholding solver.
#[derive(Debug, Clone)]
pub struct IstaConfig {
    /// Sparsity weight μ ≥ 0.
    pub mu: f64,
    /// Step scaling with c·‖R_h‖ < 1; auto-set to 0.95/‖R_h‖ when None.
    pub c: Option<f64>,
    pub n_iters: usize,
    /// Optional χ_S mask over (t, x); used by [`ista_masked`].
    pub mask: Option<Array2<bool>>,
    /// Seed of the norm-estimation power iteration when `c` is auto-set.
    pub seed: u64,
}

impl Default for IstaConfig {
    fn default() -> Self {
        IstaConfig {
            mu: 0.0,
            c: None,
            n_iters: 30,
            mask: None,
            seed: 1,
        }
    }
}

/// Per-iteration diagnostics: the ℓ1-regularized objective
/// ‖R_h* g − f‖² + μ‖g‖₁, the residual norm, and the support size.
#[derive(Debug, Clone, Default)]
pub struct IstaTrace {
    pub objective: Vec<f64>,
    pub residual_norm: Vec<f64>,
    pub nonzero_count: Vec<usize>,
}

/// Largest singular value of χ_S·R_h* by power iteration; with dead
/// traces this is smaller than ‖R_h‖, which buys a larger stable step.
fn masked_norm(plan: &OperatorPlan, mask: &Array2<bool>, iters: usize, seed: u64) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut g = plan.radon_grid.zeros();
    for val in g.iter_mut() {
        *val = rng.random::<f64>() * 2.0 - 1.0;
    }
    let norm_g = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm_g == 0.0 {
        return Err(Error::numerical("degenerate start vector".to_string()));
    }
    g.mapv_inplace(|x| x / norm_g);
    let mut sigma = 0.0;
    for _ in 0..iters {
        let image = RadonImage { grid: plan.radon_grid, data: g };
        let mut u = plan.adjoint(&image)?.data;
        ndarray::Zip::from(&mut u).and(mask).for_each(|v, &live| {
            if !live {
                *v = 0.0;
            }
        });
        sigma = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let gather = CmpGather { grid: plan.gather_grid, data: u };
        g = plan.forward(&gather)?.data;
        let norm_g = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm_g == 0.0 {
            return Ok(0.0);
        }
        g.mapv_inplace(|x| x / norm_g);
    }
    Ok(sigma)
}

fn resolve_step(
    plan: &OperatorPlan,
    cfg: &IstaConfig,
    mask: Option<&Array2<bool>>,
) -> Result<f64> {
    if cfg.mu < 0.0 {
        return Err(Error::config(format!("mu must be non-negative, got {}", cfg.mu)));
    }
    if cfg.n_iters == 0 {
        return Err(Error::config("n_iters must be positive".to_string()));
    }
    match cfg.c {
        Some(c) if c > 0.0 => Ok(c),
        Some(c) => Err(Error::config(format!("step scaling must be positive, got {c}"))),
        None => {
            let norm = match mask {
                Some(m) if !m.iter().all(|&live| live) => masked_norm(plan, m, 20, cfg.seed)?,
                _ => estimate_norm(plan, 20, cfg.seed)?,
            };
            if !(norm > 0.0) {
                return Err(Error::numerical("operator norm estimate is zero".to_string()));
            }
            Ok(0.95 / norm)
        }
    }
}

fn run_ista(
    plan: &OperatorPlan,
    f: &CmpGather,
    cfg: &IstaConfig,
    mask: Option<&Array2<bool>>,
) -> Result<(RadonImage, IstaTrace)> {
    if let Some(m) = mask {
        if m.dim() != (plan.gather_grid.n1, plan.gather_grid.n2) {
            return Err(Error::config("mask shape does not match gather grid".to_string()));
        }
        if !m.iter().any(|&v| v) {
            return Err(Error::config("mask has no live traces".to_string()));
        }
    }
    let c = resolve_step(plan, cfg, mask)?;
    let c2 = c * c;
    let thr = c2 * cfg.mu;

    // The data are defined to be zero where samples are missing.
    let mut f_masked = f.data.clone();
    if let Some(m) = mask {
        ndarray::Zip::from(&mut f_masked).and(m).for_each(|v, &live| {
            if !live {
                *v = 0.0;
            }
        });
    }

    let mut g = plan.radon_grid.zeros();
    // Masked model of the current iterate, χ_S·R_h* gⁿ (zero for g⁰=0).
    let mut modeled = plan.gather_grid.zeros();
    let mut trace = IstaTrace::default();
    for _ in 0..cfg.n_iters {
        let residual = CmpGather {
            grid: plan.gather_grid,
            data: &f_masked - &modeled,
        };
        let update = plan.forward(&residual)?;
        ndarray::Zip::from(&mut g).and(&update.data).for_each(|gi, &ui| {
            *gi = soft_threshold(*gi + c2 * ui, thr);
        });

        let image = RadonImage { grid: plan.radon_grid, data: g.clone() };
        modeled = plan.adjoint(&image)?.data;
        if let Some(m) = mask {
            ndarray::Zip::from(&mut modeled).and(m).for_each(|v, &live| {
                if !live {
                    *v = 0.0;
                }
            });
        }
        let res_sq: f64 = modeled
            .iter()
            .zip(f_masked.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let l1: f64 = g.iter().map(|v| v.abs()).sum();
        trace.objective.push(res_sq + cfg.mu * l1);
        trace.residual_norm.push(res_sq.sqrt());
        trace.nonzero_count.push(g.iter().filter(|v| **v != 0.0).count());
    }

    Ok((RadonImage { grid: plan.radon_grid, data: g }, trace))
}

/// ISTA for the ℓ1-regularized synthesis problem min ‖R_h* g − f‖² +
/// μ‖g‖₁: gⁿ = S_{c²μ}(gⁿ⁻¹ + c²·R_h(f − R_h* gⁿ⁻¹)), g⁰ = 0.
pub fn ista(plan: &OperatorPlan, f: &CmpGather, cfg: &IstaConfig) -> Result<(RadonImage, IstaTrace)> {
    run_ista(plan, f, cfg, None)
}

/// Masked ISTA for missing data: the modeled gather is masked by χ_S
/// before the residual, and f is defined to be zero off the mask.
pub fn ista_masked(
    plan: &OperatorPlan,
    f: &CmpGather,
    cfg: &IstaConfig,
) -> Result<(RadonImage, IstaTrace)> {
    let mask = cfg
        .mask
        .as_ref()
        .ok_or_else(|| Error::config("ista_masked requires a mask".to_string()))?;
    run_ista(plan, f, cfg, Some(mask))
}

/// Split a Radon panel along a boundary polyline, monotone in τ, into
/// the below-boundary part (primaries, q ≤ boundary) and the
/// above-boundary part (multiples). The two parts sum to the input
/// exactly.
pub fn mute_and_split(
    g: &RadonImage,
    boundary: &[(f64, f64)],
) -> Result<(RadonImage, RadonImage)> {
    if boundary.is_empty() {
        return Err(Error::config("empty mute boundary".to_string()));
    }
    for w in boundary.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::config(
                "mute boundary must be strictly increasing in tau".to_string(),
            ));
        }
    }
    let boundary_q = |tau: f64| -> f64 {
        if tau <= boundary[0].0 {
            return boundary[0].1;
        }
        if tau >= boundary[boundary.len() - 1].0 {
            return boundary[boundary.len() - 1].1;
        }
        let k = boundary.partition_point(|p| p.0 <= tau);
        let (t0, q0) = boundary[k - 1];
        let (t1, q1) = boundary[k];
        q0 + (q1 - q0) * (tau - t0) / (t1 - t0)
    };

    let mut primaries = g.grid.zeros();
    let mut multiples = g.grid.zeros();
    for i in 0..g.grid.n1 {
        let qb = boundary_q(g.grid.coord1(i));
        for j in 0..g.grid.n2 {
            if g.grid.coord2(j) <= qb {
                primaries[(i, j)] = g.data[(i, j)];
            } else {
                multiples[(i, j)] = g.data[(i, j)];
            }
        }
    }
    Ok((
        RadonImage { grid: g.grid, data: primaries },
        RadonImage { grid: g.grid, data: multiples },
    ))
}
