//! Python bindings for the hyperbolic Radon transform. Fields cross the
//! boundary as flat `list[float]` buffers with axis 1 (time/intercept)
//! fastest, matching the on-disk sample order.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use lpradon::{
    CmpGather, Error, EventSpec, IstaConfig, MaskPattern, MaskSpec, OperatorPlan, PlanOptions,
    RadonImage, RegularGrid2,
};

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Config(msg) => PyValueError::new_err(msg),
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        Error::Format(msg) => PyIOError::new_err(msg),
        Error::Numerical(msg) => PyRuntimeError::new_err(msg),
    }
}

/// A regularly sampled 2-D grid: n1×n2 samples at origin (o1, o2) with
/// steps (d1, d2); axis 1 is time or intercept.
#[pyclass(name = "Grid", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyGrid {
    inner: RegularGrid2,
}

#[pymethods]
impl PyGrid {
    #[new]
    fn new(n1: usize, n2: usize, o1: f64, d1: f64, o2: f64, d2: f64) -> PyResult<Self> {
        Ok(PyGrid {
            inner: RegularGrid2::new(n1, n2, o1, d1, o2, d2).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn n1(&self) -> usize {
        self.inner.n1
    }

    #[getter]
    fn n2(&self) -> usize {
        self.inner.n2
    }

    #[getter]
    fn o1(&self) -> f64 {
        self.inner.o1
    }

    #[getter]
    fn d1(&self) -> f64 {
        self.inner.d1
    }

    #[getter]
    fn o2(&self) -> f64 {
        self.inner.o2
    }

    #[getter]
    fn d2(&self) -> f64 {
        self.inner.d2
    }

    fn __repr__(&self) -> String {
        let g = &self.inner;
        format!(
            "Grid(n1={}, n2={}, o1={}, d1={}, o2={}, d2={})",
            g.n1, g.n2, g.o1, g.d1, g.o2, g.d2
        )
    }
}

/// A CMP gather: samples over time × offset.
#[pyclass(name = "Gather", frozen)]
struct PyGather {
    inner: CmpGather,
}

#[pymethods]
impl PyGather {
    #[new]
    fn new(grid: PyGrid, data: Vec<f64>) -> PyResult<Self> {
        Ok(PyGather {
            inner: CmpGather::from_flat(grid.inner, data).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid { inner: self.inner.grid }
    }

    /// Samples with axis 1 fastest (trace by trace).
    #[getter]
    fn data(&self) -> Vec<f64> {
        self.inner.to_flat()
    }
}

/// A Radon panel: samples over intercept × slowness.
#[pyclass(name = "RadonPanel", frozen)]
struct PyRadonPanel {
    inner: RadonImage,
}

#[pymethods]
impl PyRadonPanel {
    #[new]
    fn new(grid: PyGrid, data: Vec<f64>) -> PyResult<Self> {
        Ok(PyRadonPanel {
            inner: RadonImage::from_flat(grid.inner, data).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid { inner: self.inner.grid }
    }

    #[getter]
    fn data(&self) -> Vec<f64> {
        self.inner.to_flat()
    }
}

/// A planned log-polar Radon operator; `forward` and `adjoint` are
/// exact discrete transposes.
#[pyclass(name = "Plan", frozen)]
struct PyPlan {
    inner: OperatorPlan,
}

#[pymethods]
impl PyPlan {
    #[new]
    #[pyo3(signature = (gather_grid, radon_grid, splits_t=1, splits_q=1))]
    fn new(
        gather_grid: PyGrid,
        radon_grid: PyGrid,
        splits_t: usize,
        splits_q: usize,
    ) -> PyResult<Self> {
        let options = PlanOptions {
            n_splits_t: splits_t,
            n_splits_q: splits_q,
            ..PlanOptions::default()
        };
        Ok(PyPlan {
            inner: OperatorPlan::plan(gather_grid.inner, radon_grid.inner, options)
                .map_err(to_py_err)?,
        })
    }

    fn forward(&self, gather: &PyGather) -> PyResult<PyRadonPanel> {
        Ok(PyRadonPanel {
            inner: self.inner.forward(&gather.inner).map_err(to_py_err)?,
        })
    }

    fn adjoint(&self, panel: &PyRadonPanel) -> PyResult<PyGather> {
        Ok(PyGather {
            inner: self.inner.adjoint(&panel.inner).map_err(to_py_err)?,
        })
    }

    fn norm_estimate(&self, iters: usize, seed: u64) -> PyResult<f64> {
        lpradon::estimate_norm(&self.inner, iters, seed).map_err(to_py_err)
    }
}

/// Direct-summation forward transform (the oracle the fast operator is
/// validated against).
#[pyfunction]
fn direct_forward(gather: &PyGather, radon_grid: PyGrid) -> PyResult<PyRadonPanel> {
    Ok(PyRadonPanel {
        inner: lpradon::direct_forward(&gather.inner, &radon_grid.inner).map_err(to_py_err)?,
    })
}

/// Generate a synthetic gather from (tau0, q, amplitude, freq) events
/// with optional white noise, deterministic per seed.
#[pyfunction]
#[pyo3(signature = (grid, events, noise_rms=0.0, seed=1))]
fn synth_gather(
    grid: PyGrid,
    events: Vec<(f64, f64, f64, f64)>,
    noise_rms: f64,
    seed: u64,
) -> PyResult<PyGather> {
    let events: Vec<EventSpec> = events
        .iter()
        .map(|&(tau0, q, amplitude, freq)| EventSpec::ricker(tau0, q, amplitude, freq))
        .collect();
    Ok(PyGather {
        inner: lpradon::synth_gather(grid.inner, &events, noise_rms, seed).map_err(to_py_err)?,
    })
}

/// Iterative soft-thresholding for the sparse Radon model; returns the
/// panel and the objective trace. A mask of live traces (flat, axis 1
/// fastest) switches to the missing-data variant.
#[pyfunction]
#[pyo3(signature = (plan, gather, mu, n_iters=30, mask=None))]
fn ista(
    plan: &PyPlan,
    gather: &PyGather,
    mu: f64,
    n_iters: usize,
    mask: Option<Vec<bool>>,
) -> PyResult<(PyRadonPanel, Vec<f64>)> {
    let grid = plan.inner.gather_grid;
    let mask = match mask {
        Some(flat) => {
            if flat.len() != grid.n1 * grid.n2 {
                return Err(PyValueError::new_err("mask length does not match gather grid"));
            }
            let mut m = ndarray::Array2::from_elem((grid.n1, grid.n2), true);
            for j in 0..grid.n2 {
                for i in 0..grid.n1 {
                    m[(i, j)] = flat[j * grid.n1 + i];
                }
            }
            Some(m)
        }
        None => None,
    };
    let masked = mask.is_some();
    let cfg = IstaConfig {
        mu,
        n_iters,
        mask,
        ..IstaConfig::default()
    };
    let (panel, trace) = if masked {
        lpradon::ista_masked(&plan.inner, &gather.inner, &cfg).map_err(to_py_err)?
    } else {
        lpradon::ista(&plan.inner, &gather.inner, &cfg).map_err(to_py_err)?
    };
    Ok((PyRadonPanel { inner: panel }, trace.objective))
}

/// Soft-thresholding (shrinkage) scalar function.
#[pyfunction]
fn soft_threshold(v: f64, mu: f64) -> f64 {
    lpradon::soft_threshold(v, mu)
}

/// Build a trace mask (flat, axis 1 fastest): True marks live traces.
#[pyfunction]
#[pyo3(signature = (grid, fraction, seed=1, pattern="random"))]
fn make_mask(grid: PyGrid, fraction: f64, seed: u64, pattern: &str) -> PyResult<Vec<bool>> {
    let pattern = match pattern {
        "random" => MaskPattern::RandomTraces,
        "regular" => MaskPattern::RegularDecimation,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown pattern '{other}' (expected 'random' or 'regular')"
            )))
        }
    };
    let spec = MaskSpec { fraction, seed, pattern };
    let mask = lpradon::make_mask(grid.inner, &spec).map_err(to_py_err)?;
    let mut flat = Vec::with_capacity(mask.len());
    for j in 0..grid.inner.n2 {
        for i in 0..grid.inner.n1 {
            flat.push(mask[(i, j)]);
        }
    }
    Ok(flat)
}

#[pymodule(name = "lpradon")]
fn lpradon_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyGather>()?;
    m.add_class::<PyRadonPanel>()?;
    m.add_class::<PyPlan>()?;
    m.add_function(wrap_pyfunction!(direct_forward, m)?)?;
    m.add_function(wrap_pyfunction!(synth_gather, m)?)?;
    m.add_function(wrap_pyfunction!(ista, m)?)?;
    m.add_function(wrap_pyfunction!(soft_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(make_mask, m)?)?;
    Ok(())
}
