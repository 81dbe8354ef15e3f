use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use super::grid::SpectralGrid;
use crate::error::{Error, Result};

/// Tensor rank of a field, with component counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Scalar,
    Vector(usize),
    /// `Tensor(rows, cols)`; component `(i, j)` is stored at `i * cols + j`.
    Tensor(usize, usize),
}

impl Shape {
    pub fn ncomp(&self) -> usize {
        match *self {
            Shape::Scalar => 1,
            Shape::Vector(c) => c,
            Shape::Tensor(r, c) => r * c,
        }
    }
}

/// Real-space samples of a scalar, vector or tensor field, stored component
/// by component.
#[derive(Clone)]
pub struct Field {
    grid: Arc<SpectralGrid>,
    shape: Shape,
    data: Vec<f64>,
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Field").field("grid", &self.grid).field("shape", &self.shape).finish()
    }
}

impl Field {
    pub fn zeros(grid: &Arc<SpectralGrid>, shape: Shape) -> Self {
        Field { grid: grid.clone(), shape, data: vec![0.0; shape.ncomp() * grid.len()] }
    }

    /// Fills each point from `f(x, out)` where `out` holds that point's
    /// components.
    pub fn from_fn(
        grid: &Arc<SpectralGrid>,
        shape: Shape,
        mut f: impl FnMut([f64; 3], &mut [f64]),
    ) -> Self {
        let mut field = Self::zeros(grid, shape);
        let nc = shape.ncomp();
        let len = grid.len();
        let mut point = vec![0.0; nc];
        for idx in 0..len {
            point.iter_mut().for_each(|p| *p = 0.0);
            f(grid.coords(idx), &mut point);
            for (c, v) in point.iter().enumerate() {
                field.data[c * len + idx] = *v;
            }
        }
        field
    }

    /// Wraps component-major samples, rejecting non-finite values.
    pub fn from_samples(grid: &Arc<SpectralGrid>, shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.ncomp() * grid.len() {
            return Err(Error::Shape(format!(
                "{} samples supplied, {:?} on this grid needs {}",
                data.len(),
                shape,
                shape.ncomp() * grid.len()
            )));
        }
        let field = Field { grid: grid.clone(), shape, data };
        field.ensure_finite("samples")?;
        Ok(field)
    }

    pub fn constant(grid: &Arc<SpectralGrid>, shape: Shape, values: &[f64]) -> Self {
        assert_eq!(values.len(), shape.ncomp());
        Self::from_fn(grid, shape, |_, out| out.copy_from_slice(values))
    }

    pub(crate) fn from_raw(grid: &Arc<SpectralGrid>, shape: Shape, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), shape.ncomp() * grid.len());
        Field { grid: grid.clone(), shape, data }
    }

    /// Builds a field from per-component spectral coefficients.
    pub fn from_spectral(grid: &Arc<SpectralGrid>, shape: Shape, comps: Vec<Vec<Complex64>>) -> Self {
        assert_eq!(comps.len(), shape.ncomp());
        let mut data = Vec::with_capacity(shape.ncomp() * grid.len());
        for c in comps {
            data.extend(grid.inverse(c));
        }
        Field { grid: grid.clone(), shape, data }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn ncomp(&self) -> usize {
        self.shape.ncomp()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn comp(&self, c: usize) -> &[f64] {
        let len = self.grid.len();
        &self.data[c * len..(c + 1) * len]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [f64] {
        let len = self.grid.len();
        &mut self.data[c * len..(c + 1) * len]
    }

    /// Component `(i, j)` of a tensor field.
    pub fn entry(&self, i: usize, j: usize) -> &[f64] {
        match self.shape {
            Shape::Tensor(_, cols) => self.comp(i * cols + j),
            s => panic!("entry() on non-tensor field of shape {s:?}"),
        }
    }

    /// All components at one sample point.
    pub fn at(&self, idx: usize) -> Vec<f64> {
        (0..self.ncomp()).map(|c| self.comp(c)[idx]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }

    pub fn same_grid(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    /// Per-component spectral coefficients.
    pub fn to_spectral(&self) -> Vec<Vec<Complex64>> {
        (0..self.ncomp()).map(|c| self.grid.forward(self.comp(c))).collect()
    }

    pub fn scale(&self, a: f64) -> Field {
        self.map(|v| a * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field { grid: self.grid.clone(), shape: self.shape, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &Field) {
        assert!(self.same_grid(other) && self.shape == other.shape, "axpy on mismatched fields");
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    /// Largest absolute sample over all components.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Mean of each component over the box.
    pub fn mean(&self) -> Vec<f64> {
        let len = self.grid.len() as f64;
        (0..self.ncomp()).map(|c| self.comp(c).iter().sum::<f64>() / len).collect()
    }
}

fn zip_with(a: &Field, b: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
    assert!(a.same_grid(b), "fields live on different grids");
    assert_eq!(a.shape, b.shape, "field shapes differ");
    Field {
        grid: a.grid.clone(),
        shape: a.shape,
        data: a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect(),
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        zip_with(self, rhs, |x, y| x + y)
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        zip_with(self, rhs, |x, y| x - y)
    }
}

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, rhs: f64) -> Field {
        self.scale(rhs)
    }
}
