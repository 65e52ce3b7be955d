use ndarray::{Array2, ShapeBuilder};

use crate::error::Error;
use crate::Result;

/// A regularly sampled 2-D grid. Axis 1 is the fastest-varying axis
/// (time / intercept / ρ), axis 2 the slowest (offset / slowness / θ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularGrid2 {
    pub n1: usize,
    pub n2: usize,
    pub o1: f64,
    pub d1: f64,
    pub o2: f64,
    pub d2: f64,
}

impl RegularGrid2 {
    pub fn new(n1: usize, n2: usize, o1: f64, d1: f64, o2: f64, d2: f64) -> Result<Self> {
        if n1 < 2 || n2 < 2 {
            return Err(Error::config(format!("grid too small: {n1}x{n2}")));
        }
        if !(d1 > 0.0) || !(d2 > 0.0) {
            return Err(Error::config(format!("non-positive steps: d1={d1}, d2={d2}")));
        }
        if !(o1.is_finite() && o2.is_finite() && d1.is_finite() && d2.is_finite()) {
            return Err(Error::config("non-finite grid parameters".to_string()));
        }
        Ok(RegularGrid2 { n1, n2, o1, d1, o2, d2 })
    }

    pub fn coord1(&self, i: usize) -> f64 {
        self.o1 + i as f64 * self.d1
    }

    pub fn coord2(&self, j: usize) -> f64 {
        self.o2 + j as f64 * self.d2
    }

    /// Coordinate of the last sample along axis 1.
    pub fn extent1(&self) -> f64 {
        self.coord1(self.n1 - 1)
    }

    /// Coordinate of the last sample along axis 2.
    pub fn extent2(&self) -> f64 {
        self.coord2(self.n2 - 1)
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Allocate a zero field in the grid's memory order (axis 1 fastest).
    pub fn zeros(&self) -> Array2<f64> {
        Array2::zeros((self.n1, self.n2).f())
    }
}

fn validate_field(grid: &RegularGrid2, data: &Array2<f64>, what: &str) -> Result<()> {
    if data.dim() != (grid.n1, grid.n2) {
        return Err(Error::config(format!(
            "{what} data shape {:?} does not match grid {}x{}",
            data.dim(),
            grid.n1,
            grid.n2
        )));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical(format!("{what} contains non-finite samples")));
    }
    Ok(())
}

fn field_from_flat(grid: &RegularGrid2, flat: Vec<f64>) -> Result<Array2<f64>> {
    Array2::from_shape_vec((grid.n1, grid.n2).f(), flat)
        .map_err(|_| Error::config("flat data length does not match grid".to_string()))
}

/// Axis-1-fastest copy of a field (the on-disk sample order).
fn field_to_flat(data: &Array2<f64>) -> Vec<f64> {
    let (n1, n2) = data.dim();
    let mut out = Vec::with_capacity(n1 * n2);
    for j in 0..n2 {
        for i in 0..n1 {
            out.push(data[(i, j)]);
        }
    }
    out
}

/// A CMP gather: amplitudes f(t, x) over time × non-negative offset.
#[derive(Debug, Clone)]
pub struct CmpGather {
    pub grid: RegularGrid2,
    pub data: Array2<f64>,
}

impl CmpGather {
    pub fn new(grid: RegularGrid2, data: Array2<f64>) -> Result<Self> {
        validate_field(&grid, &data, "gather")?;
        if grid.o2 < 0.0 {
            return Err(Error::config("gather offsets must be non-negative".to_string()));
        }
        Ok(CmpGather { grid, data })
    }

    pub fn from_flat(grid: RegularGrid2, flat: Vec<f64>) -> Result<Self> {
        let data = field_from_flat(&grid, flat)?;
        CmpGather::new(grid, data)
    }

    pub fn zeros(grid: RegularGrid2) -> Self {
        let data = grid.zeros();
        CmpGather { grid, data }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        field_to_flat(&self.data)
    }
}

/// A Radon panel: amplitudes g(τ, q) over intercept × slowness.
#[derive(Debug, Clone)]
pub struct RadonImage {
    pub grid: RegularGrid2,
    pub data: Array2<f64>,
}

impl RadonImage {
    pub fn new(grid: RegularGrid2, data: Array2<f64>) -> Result<Self> {
        validate_field(&grid, &data, "radon image")?;
        Ok(RadonImage { grid, data })
    }

    pub fn from_flat(grid: RegularGrid2, flat: Vec<f64>) -> Result<Self> {
        let data = field_from_flat(&grid, flat)?;
        RadonImage::new(grid, data)
    }

    pub fn zeros(grid: RegularGrid2) -> Self {
        let data = grid.zeros();
        RadonImage { grid, data }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        field_to_flat(&self.data)
    }
}

/// Record of the rescaling that maps a gather onto the unit square:
/// t → t/T, x → x/X. Radon parameters map as τ → τ/T, q → q·X/T, and
/// transform outputs gain a factor X.
#[derive(Debug, Clone, Copy)]
pub struct ScaleRecord {
    pub t_span: f64,
    pub x_span: f64,
}

impl ScaleRecord {
    pub fn identity() -> Self {
        ScaleRecord { t_span: 1.0, x_span: 1.0 }
    }

    pub fn tau_to_unit(&self, tau: f64) -> f64 {
        tau / self.t_span
    }

    pub fn q_to_unit(&self, q: f64) -> f64 {
        q * self.x_span / self.t_span
    }

    pub fn tau_from_unit(&self, tau: f64) -> f64 {
        tau * self.t_span
    }

    pub fn q_from_unit(&self, q: f64) -> f64 {
        q * self.t_span / self.x_span
    }

    /// Factor applied to transform outputs after rescaling.
    pub fn output_factor(&self) -> f64 {
        self.x_span
    }
}

/// Rescale a gather whose grid covers [0,T]×[0,X] onto the unit square.
/// Sample values are unchanged; only the coordinates are normalized.
pub fn rescale_to_unit(g: &CmpGather) -> Result<(CmpGather, ScaleRecord)> {
    if g.grid.o1 != 0.0 || g.grid.o2 != 0.0 {
        return Err(Error::config(
            "rescale_to_unit requires a gather covering [0,T]x[0,X] (zero origins)".to_string(),
        ));
    }
    let t_span = g.grid.extent1();
    let x_span = g.grid.extent2();
    if !(t_span > 0.0) || !(x_span > 0.0) {
        return Err(Error::config(format!("non-positive span: T={t_span}, X={x_span}")));
    }
    let grid = RegularGrid2::new(
        g.grid.n1,
        g.grid.n2,
        0.0,
        g.grid.d1 / t_span,
        0.0,
        g.grid.d2 / x_span,
    )?;
    let scaled = CmpGather { grid, data: g.data.clone() };
    Ok((scaled, ScaleRecord { t_span, x_span }))
}

/// Weight of the squared-coordinates substitution at sample (i, j):
/// f(t,x)/(2x), with the x→0 limit taken against the 2x factor the
/// substitution's Jacobian contributes (the singularity cancels; the
/// limit is evaluated by a one-sided difference on the first trace).
pub fn squared_coords_weight(g: &CmpGather, i: usize, j: usize) -> f64 {
    let x = g.grid.coord2(j);
    if x > 0.0 {
        g.data[(i, j)] / (2.0 * x)
    } else {
        (g.data[(i, 1)] - g.data[(i, 0)]) / (2.0 * g.grid.d2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(RegularGrid2::new(1, 4, 0.0, 0.1, 0.0, 0.1).is_err());
        assert!(RegularGrid2::new(4, 4, 0.0, -0.1, 0.0, 0.1).is_err());
        assert!(RegularGrid2::new(4, 4, f64::NAN, 0.1, 0.0, 0.1).is_err());
        let g = RegularGrid2::new(5, 3, 1.0, 0.5, 0.0, 2.0).unwrap();
        assert_eq!(g.coord1(4), 3.0);
        assert_eq!(g.extent2(), 4.0);
        assert_eq!(g.len(), 15);
    }

    #[test]
    fn rescale_example_spans() {
        // A 4 s by 2 km gather maps onto the unit square with τ → τ/4,
        // q → q/2, and outputs scaled by X = 2.
        let grid = RegularGrid2::new(9, 5, 0.0, 0.5, 0.0, 0.5).unwrap();
        let g = CmpGather::zeros(grid);
        let (unit, scale) = rescale_to_unit(&g).unwrap();
        assert_eq!(scale.t_span, 4.0);
        assert_eq!(scale.x_span, 2.0);
        assert!((unit.grid.extent1() - 1.0).abs() < 1e-15);
        assert!((unit.grid.extent2() - 1.0).abs() < 1e-15);
        assert!((scale.tau_to_unit(2.0) - 0.5).abs() < 1e-15);
        assert!((scale.q_to_unit(1.0) - 0.5).abs() < 1e-15);
        assert!((scale.q_from_unit(scale.q_to_unit(0.7)) - 0.7).abs() < 1e-15);
        assert!((scale.tau_from_unit(scale.tau_to_unit(3.1)) - 3.1).abs() < 1e-15);
        assert_eq!(scale.output_factor(), 2.0);
    }

    #[test]
    fn flat_round_trip_is_axis1_fastest() {
        let grid = RegularGrid2::new(2, 3, 0.0, 1.0, 0.0, 1.0).unwrap();
        let flat = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let g = CmpGather::from_flat(grid, flat.clone()).unwrap();
        // Column j holds samples [2j, 2j+1] of the flat order.
        assert_eq!(g.data[(0, 0)], 1.0);
        assert_eq!(g.data[(1, 0)], 2.0);
        assert_eq!(g.data[(0, 2)], 5.0);
        assert_eq!(g.to_flat(), flat);
    }

    #[test]
    fn field_validation_rejects_bad_input() {
        let grid = RegularGrid2::new(3, 3, 0.0, 1.0, 0.0, 1.0).unwrap();
        let mut data = grid.zeros();
        data[(1, 1)] = f64::INFINITY;
        assert!(CmpGather::new(grid, data).is_err());
        let wrong = Array2::zeros((3, 4));
        assert!(RadonImage::new(grid, wrong).is_err());
        let neg = RegularGrid2::new(3, 3, 0.0, 1.0, -1.0, 1.0).unwrap();
        assert!(CmpGather::new(neg, neg.zeros()).is_err());
    }

    #[test]
    fn squared_coords_weight_cancels_jacobian() {
        // With f(t, x) = 2x, the weight f/(2x) is exactly 1 everywhere,
        // including the x = 0 limit.
        let grid = RegularGrid2::new(4, 6, 0.0, 0.1, 0.0, 0.2).unwrap();
        let mut data = grid.zeros();
        for j in 0..grid.n2 {
            for i in 0..grid.n1 {
                data[(i, j)] = 2.0 * grid.coord2(j);
            }
        }
        let g = CmpGather::new(grid, data).unwrap();
        for j in 0..grid.n2 {
            assert!((squared_coords_weight(&g, 2, j) - 1.0).abs() < 1e-14, "j={j}");
        }
    }
}
