//! Spectral differential operators, projections and norms.
//!
//! Derivative convention (used everywhere in the crate): the gradient of a
//! vector field `v` is the tensor with entries `(grad v)_{ij} = d_i v_j`, and
//! the divergence of a tensor `T` is `(div T)_j = d_i T_{ij}`.
//!
//! Norms are taken over the unit box, so `l2_norm(f)^2` is the mean of
//! `|f|^2` over the collocation points, which equals the sum of the squared
//! moduli of the normalized Fourier coefficients.

use std::sync::Arc;

use num_complex::Complex64;

use super::field::{Field, Shape};
use super::grid::SpectralGrid;
use crate::error::{Error, Result};

type Modes = Vec<Complex64>;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub(crate) fn deriv(grid: &SpectralGrid, hat: &[Complex64], axis: usize) -> Modes {
    hat.iter()
        .enumerate()
        .map(|(m, c)| I * grid.deriv_wavenumber(m)[axis] * c)
        .collect()
}

/// Gradient in spectral space; output component `i * ncomp + j` is `d_i f_j`.
pub(crate) fn grad_spectral(grid: &SpectralGrid, comps: &[Modes]) -> Vec<Modes> {
    let mut out = Vec::with_capacity(grid.dim() * comps.len());
    for axis in 0..grid.dim() {
        for c in comps {
            out.push(deriv(grid, c, axis));
        }
    }
    out
}

/// `(div T)_j = sum_i d_i T_ij` for `T` with `grid.dim()` rows.
pub(crate) fn div_tensor_spectral(grid: &SpectralGrid, comps: &[Modes], cols: usize) -> Vec<Modes> {
    let len = grid.len();
    (0..cols)
        .map(|j| {
            let mut acc = vec![Complex64::default(); len];
            for i in 0..grid.dim() {
                let t = &comps[i * cols + j];
                for (m, a) in acc.iter_mut().enumerate() {
                    *a += I * grid.deriv_wavenumber(m)[i] * t[m];
                }
            }
            acc
        })
        .collect()
}

pub(crate) fn laplacian_spectral(grid: &SpectralGrid, hat: &mut [Complex64]) {
    for (m, c) in hat.iter_mut().enumerate() {
        *c *= -grid.k_squared(m);
    }
}

/// Removes the gradient part of a `dim`-component spectral vector field.
pub(crate) fn project_spectral(grid: &SpectralGrid, comps: &mut [Modes]) {
    let dim = grid.dim();
    for m in 0..grid.len() {
        let k = grid.deriv_wavenumber(m);
        let kk: f64 = k[..dim].iter().map(|v| v * v).sum();
        if kk == 0.0 {
            continue;
        }
        let mut kv = Complex64::default();
        for a in 0..dim {
            kv += k[a] * comps[a][m];
        }
        let f = kv / kk;
        for a in 0..dim {
            comps[a][m] -= k[a] * f;
        }
    }
}

pub(crate) fn mask_spectral(grid: &SpectralGrid, hat: &mut [Complex64]) {
    for (c, keep) in hat.iter_mut().zip(grid.dealias_mask()) {
        if !keep {
            *c = Complex64::default();
        }
    }
}

/// Applies the two-thirds mask to every component in place.
pub(crate) fn dealias_in_place(f: &mut Field) {
    let grid = f.grid().clone();
    for c in 0..f.ncomp() {
        let mut hat = grid.forward(f.comp(c));
        mask_spectral(&grid, &mut hat);
        let back = grid.inverse(hat);
        f.comp_mut(c).copy_from_slice(&back);
    }
}

fn require_vector_dim(v: &Field, what: &str) -> Result<()> {
    match v.shape() {
        Shape::Vector(c) if c == v.grid().dim() => Ok(()),
        s => Err(Error::Shape(format!(
            "{what} needs a {}-component vector field, got {s:?}",
            v.grid().dim()
        ))),
    }
}

/// Gradient of a scalar (giving a vector) or of a vector field with `c`
/// components (giving a `dim x c` tensor, entry `(i, j) = d_i f_j`).
pub fn gradient(f: &Field) -> Result<Field> {
    f.ensure_finite("gradient input")?;
    let grid = f.grid();
    let shape = match f.shape() {
        Shape::Scalar => Shape::Vector(grid.dim()),
        Shape::Vector(c) => Shape::Tensor(grid.dim(), c),
        s => return Err(Error::Shape(format!("gradient of {s:?} is not supported"))),
    };
    let hat = f.to_spectral();
    Ok(Field::from_spectral(grid, shape, grad_spectral(grid, &hat)))
}

/// Divergence of a `dim`-vector (scalar result) or of a tensor with `dim`
/// rows (vector result, `(div T)_j = d_i T_ij`).
pub fn divergence(v: &Field) -> Result<Field> {
    v.ensure_finite("divergence input")?;
    let grid = v.grid();
    let dim = grid.dim();
    let hat = v.to_spectral();
    match v.shape() {
        Shape::Vector(c) if c == dim => {
            let mut acc = vec![Complex64::default(); grid.len()];
            for (a, comp) in hat.iter().enumerate() {
                for (m, x) in acc.iter_mut().enumerate() {
                    *x += I * grid.deriv_wavenumber(m)[a] * comp[m];
                }
            }
            Ok(Field::from_spectral(grid, Shape::Scalar, vec![acc]))
        }
        Shape::Tensor(r, c) if r == dim => {
            Ok(Field::from_spectral(grid, Shape::Vector(c), div_tensor_spectral(grid, &hat, c)))
        }
        s => Err(Error::Shape(format!("divergence of {s:?} on a {dim}-d grid"))),
    }
}

/// Curl of a velocity-like field: the scalar vorticity `d_1 v_2 - d_2 v_1`
/// in 2D, the usual vector curl in 3D.
pub fn curl(v: &Field) -> Result<Field> {
    v.ensure_finite("curl input")?;
    require_vector_dim(v, "curl")?;
    let grid = v.grid();
    let hat = v.to_spectral();
    let d = |comp: usize, axis: usize| deriv(grid, &hat[comp], axis);
    let sub = |a: Modes, b: Modes| -> Modes { a.iter().zip(&b).map(|(x, y)| x - y).collect() };
    if grid.dim() == 2 {
        Ok(Field::from_spectral(grid, Shape::Scalar, vec![sub(d(1, 0), d(0, 1))]))
    } else {
        let comps = vec![sub(d(2, 1), d(1, 2)), sub(d(0, 2), d(2, 0)), sub(d(1, 0), d(0, 1))];
        Ok(Field::from_spectral(grid, Shape::Vector(3), comps))
    }
}

/// Componentwise Laplacian; same shape as the input.
pub fn laplacian(f: &Field) -> Result<Field> {
    f.ensure_finite("laplacian input")?;
    let grid = f.grid();
    let mut hat = f.to_spectral();
    for c in &mut hat {
        laplacian_spectral(grid, c);
    }
    Ok(Field::from_spectral(grid, f.shape(), hat))
}

/// L2-orthogonal projection onto divergence-free fields.
pub fn leray_project(v: &Field) -> Result<Field> {
    v.ensure_finite("projection input")?;
    require_vector_dim(v, "Leray projection")?;
    let grid = v.grid();
    let mut hat = v.to_spectral();
    project_spectral(grid, &mut hat);
    Ok(Field::from_spectral(grid, v.shape(), hat))
}

/// Two-thirds-rule filter applied to every component.
pub fn dealias(f: &Field) -> Field {
    let mut out = f.clone();
    dealias_in_place(&mut out);
    out
}

/// Keeps the Fourier modes with `max_j |k_j| <= m` and zeroes the rest.
pub fn truncate_modes(f: &Field, m: usize) -> Result<Field> {
    f.ensure_finite("truncation input")?;
    let grid = f.grid();
    if m == 0 || m > grid.n() / 2 {
        return Err(Error::Parameter(format!(
            "mode cutoff must lie in 1..={}, got {m}",
            grid.n() / 2
        )));
    }
    if m == grid.n() / 2 {
        return Ok(f.clone());
    }
    let mut hat = f.to_spectral();
    for c in &mut hat {
        truncate_spectral(grid, c, m);
    }
    Ok(Field::from_spectral(grid, f.shape(), hat))
}

pub(crate) fn truncate_spectral(grid: &SpectralGrid, hat: &mut [Complex64], m: usize) {
    let dim = grid.dim();
    for (idx, c) in hat.iter_mut().enumerate() {
        let k = grid.mode(idx);
        if k[..dim].iter().any(|kj| kj.unsigned_abs() as usize > m) {
            *c = Complex64::default();
        }
    }
}

/// Mean over the box of the pointwise contraction `sum_c f_c g_c`.
pub fn inner(f: &Field, g: &Field) -> Result<f64> {
    if !f.same_grid(g) {
        return Err(Error::GridMismatch);
    }
    if f.shape() != g.shape() {
        return Err(Error::Shape(format!("{:?} vs {:?}", f.shape(), g.shape())));
    }
    let s: f64 = f.data().iter().zip(g.data()).map(|(a, b)| a * b).sum();
    Ok(s / f.grid().len() as f64)
}

pub fn l2_norm(f: &Field) -> f64 {
    let s: f64 = f.data().iter().map(|v| v * v).sum();
    (s / f.grid().len() as f64).sqrt()
}

/// Sum of squared moduli of all normalized Fourier coefficients.
pub fn spectral_energy(f: &Field) -> f64 {
    f.to_spectral().iter().flatten().map(|c| c.norm_sqr()).sum()
}

/// `|| Lambda^s f ||_{L2}` with the multiplier `(1 + |2 pi k|^2)^{s/2}`.
pub fn sobolev_norm(f: &Field, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::Parameter(format!("Sobolev index must be nonnegative, got {s}")));
    }
    f.ensure_finite("Sobolev norm input")?;
    let grid = f.grid();
    let weights: Vec<f64> = grid.k_squared_all().iter().map(|k2| (1.0 + k2).powf(s)).collect();
    let total: f64 = f
        .to_spectral()
        .iter()
        .map(|c| c.iter().zip(&weights).map(|(x, w)| w * x.norm_sqr()).sum::<f64>())
        .sum();
    Ok(total.sqrt())
}

/// Applies `Lambda^s` componentwise.
pub fn lambda_s(f: &Field, s: f64) -> Result<Field> {
    if !(s >= 0.0) {
        return Err(Error::Parameter(format!("Sobolev index must be nonnegative, got {s}")));
    }
    let grid = f.grid();
    let mut hat = f.to_spectral();
    for c in &mut hat {
        for (m, x) in c.iter_mut().enumerate() {
            *x *= (1.0 + grid.k_squared(m)).powf(0.5 * s);
        }
    }
    Ok(Field::from_spectral(grid, f.shape(), hat))
}

/// Pointwise Euclidean (Frobenius for tensors) magnitude.
pub fn magnitude(f: &Field) -> Field {
    let grid = f.grid();
    let len = grid.len();
    let mut out = vec![0.0; len];
    for c in 0..f.ncomp() {
        for (o, v) in out.iter_mut().zip(f.comp(c)) {
            *o += v * v;
        }
    }
    out.iter_mut().for_each(|o| *o = o.sqrt());
    debug_assert_eq!(out.len(), len);
    Field::from_raw(grid, Shape::Scalar, out)
}

/// Maximum over collocation points of the pointwise magnitude. This is a
/// lower bound on the true supremum; see [`sup_norm_refined`].
pub fn sup_norm(f: &Field) -> Result<f64> {
    f.ensure_finite("sup norm input")?;
    Ok(magnitude(f).max_abs())
}

/// Sup norm evaluated after spectral interpolation onto a grid `factor`
/// times finer (`factor` a power of two).
pub fn sup_norm_refined(f: &Field, factor: usize) -> Result<f64> {
    if factor == 0 || !factor.is_power_of_two() {
        return Err(Error::Parameter(format!("refinement factor must be a power of two, got {factor}")));
    }
    if factor == 1 {
        return sup_norm(f);
    }
    let fine = SpectralGrid::shared(f.grid().dim(), f.grid().n() * factor)?;
    sup_norm(&resample(f, &fine)?)
}

/// Symmetric part of the velocity gradient, `A = (grad u + grad^T u) / 2`.
pub fn strain_rate(u: &Field) -> Result<Field> {
    require_vector_dim(u, "strain rate")?;
    let g = gradient(u)?;
    Ok(sym_skew(&g, 1.0))
}

/// Antisymmetric part of the velocity gradient, `(grad u - grad^T u) / 2`.
pub fn vorticity_tensor(u: &Field) -> Result<Field> {
    require_vector_dim(u, "vorticity tensor")?;
    let g = gradient(u)?;
    Ok(sym_skew(&g, -1.0))
}

/// `(G + sign * G^T) / 2` for a square tensor field.
pub(crate) fn sym_skew(g: &Field, sign: f64) -> Field {
    let Shape::Tensor(r, c) = g.shape() else { panic!("sym_skew needs a tensor") };
    assert_eq!(r, c);
    let grid = g.grid();
    let len = grid.len();
    let mut data = vec![0.0; r * c * len];
    for i in 0..r {
        for j in 0..c {
            let a = g.entry(i, j);
            let b = g.entry(j, i);
            let dst = &mut data[(i * c + j) * len..(i * c + j + 1) * len];
            for p in 0..len {
                dst[p] = 0.5 * (a[p] + sign * b[p]);
            }
        }
    }
    Field::from_raw(grid, g.shape(), data)
}

/// Spectral interpolation onto another grid of the same dimension. Modes the
/// target cannot hold are dropped; a source Nyquist coefficient is split
/// evenly between `+n/2` and `-n/2` on a finer target.
pub fn resample(f: &Field, target: &Arc<SpectralGrid>) -> Result<Field> {
    let src = f.grid();
    if src.dim() != target.dim() {
        return Err(Error::Shape(format!(
            "cannot resample a {}-d field onto a {}-d grid",
            src.dim(),
            target.dim()
        )));
    }
    if src.n() == target.n() {
        return Ok(Field::from_raw(target, f.shape(), f.data().to_vec()));
    }
    let dim = src.dim();
    let (ns, nt) = (src.n() as i64, target.n() as i64);
    let index = |k: &[i64]| -> usize {
        k.iter().fold(0usize, |acc, &kj| acc * nt as usize + kj.rem_euclid(nt) as usize)
    };
    let comps = f
        .to_spectral()
        .into_iter()
        .map(|hat| {
            let mut out = vec![Complex64::default(); target.len()];
            for (m, c) in hat.iter().enumerate() {
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                let k = src.mode(m);
                // per-axis placements (wavenumber, weight)
                let mut places: Vec<(Vec<i64>, f64)> = vec![(Vec::with_capacity(dim), 1.0)];
                let mut dropped = false;
                for &kj in &k[..dim] {
                    let opts: Vec<(i64, f64)> = if kj.abs() * 2 == ns {
                        if nt > ns {
                            vec![(kj, 0.5), (-kj, 0.5)]
                        } else {
                            vec![]
                        }
                    } else if kj.abs() * 2 >= nt {
                        vec![]
                    } else {
                        vec![(kj, 1.0)]
                    };
                    if opts.is_empty() {
                        dropped = true;
                        break;
                    }
                    places = places
                        .into_iter()
                        .flat_map(|(p, w)| {
                            opts.iter().map(move |&(kk, ww)| {
                                let mut q = p.clone();
                                q.push(kk);
                                (q, w * ww)
                            })
                        })
                        .collect();
                }
                if dropped {
                    continue;
                }
                for (p, w) in places {
                    out[index(&p)] += c * w;
                }
            }
            out
        })
        .collect();
    Ok(Field::from_spectral(target, f.shape(), comps))
}
