//! Constitutive relations and right-hand sides of the director and momentum
//! equations.
//!
//! The director always has three components. On a 2D grid the velocity has
//! two, derivatives along the third axis vanish, and the strain and rotation
//! tensors are padded to `3 x 3` with zeros. Only the in-plane block of the
//! Leslie stress drives the flow.

use std::sync::Arc;

use num_complex::Complex64;

use crate::coeffs::LeslieCoefficients;
use crate::error::{Error, Result};
use crate::spectral::ops::{self, grad_spectral, mask_spectral, project_spectral};
use crate::spectral::{Field, Shape, SpectralGrid};

type Modes = Vec<Complex64>;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Velocity and director at one instant.
#[derive(Debug, Clone)]
pub struct FieldState {
    pub time: f64,
    pub u: Field,
    pub d: Field,
    pub coeffs: LeslieCoefficients,
}

impl FieldState {
    pub fn new(time: f64, u: Field, d: Field, coeffs: LeslieCoefficients) -> Result<Self> {
        if !u.same_grid(&d) {
            return Err(Error::GridMismatch);
        }
        let dim = u.grid().dim();
        if u.shape() != Shape::Vector(dim) {
            return Err(Error::Shape(format!("velocity must have {dim} components, got {:?}", u.shape())));
        }
        if d.shape() != Shape::Vector(3) {
            return Err(Error::Shape(format!("director must have 3 components, got {:?}", d.shape())));
        }
        if !time.is_finite() {
            return Err(Error::NonFinite("time"));
        }
        u.ensure_finite("velocity")?;
        d.ensure_finite("director")?;
        Ok(FieldState { time, u, d, coeffs })
    }

    /// `u = 0`, `d = (0, 0, 1)`.
    pub fn quiescent(grid: &Arc<SpectralGrid>, coeffs: LeslieCoefficients) -> Self {
        FieldState {
            time: 0.0,
            u: Field::zeros(grid, Shape::Vector(grid.dim())),
            d: Field::constant(grid, Shape::Vector(3), &[0.0, 0.0, 1.0]),
            coeffs,
        }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        self.u.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.d.is_finite()
    }
}

/// Extra terms used by the regularized scheme and the dealiasing switch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhsOptions {
    pub dealias: bool,
    /// Advect the velocity with its projection onto modes `|k_j| <= m`.
    pub advect_modes: Option<usize>,
    /// Adds `weight * div(|grad u|^(r-2) grad u)` to the momentum equation.
    pub r_laplacian: Option<RLaplacian>,
}

impl Default for RhsOptions {
    fn default() -> Self {
        RhsOptions { dealias: true, advect_modes: None, r_laplacian: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RLaplacian {
    pub weight: f64,
    pub r: f64,
}

/// Everything derived pointwise from one state.
#[derive(Debug, Clone)]
pub struct ConstitutiveBundle {
    /// `grad u`, `dim x dim`, entry `(i, j) = d_i u_j`.
    pub grad_u: Field,
    /// Strain rate, padded to `3 x 3`.
    pub a: Field,
    /// Rotation tensor, padded to `3 x 3`.
    pub omega: Field,
    /// `grad d`, `dim x 3`.
    pub grad_d: Field,
    pub lap_d: Field,
    pub w_val: Field,
    pub grad_w: Field,
    /// Molecular field `lap d - grad_d W`.
    pub h: Field,
    pub ad: Field,
    pub omega_d: Field,
    pub n: Field,
    /// `d . A d`.
    pub d_a_d: Field,
    /// Leslie stress, `3 x 3`.
    pub sigma: Field,
}

/// An equation right-hand side split into the part stepped explicitly and
/// the linear part solved exactly in Fourier space.
#[derive(Debug, Clone)]
pub struct SplitRhs {
    pub explicit: Field,
    pub implicit: Field,
}

impl SplitRhs {
    pub fn total(&self) -> Field {
        &self.explicit + &self.implicit
    }
}

struct Filter<'a> {
    grid: &'a Arc<SpectralGrid>,
    on: bool,
}

impl Filter<'_> {
    fn real(&self, v: &mut [f64]) {
        if self.on {
            let mut hat = self.grid.forward(v);
            mask_spectral(self.grid, &mut hat);
            v.copy_from_slice(&self.grid.inverse(hat));
        }
    }

    fn hat(&self, v: &[f64]) -> Modes {
        let mut hat = self.grid.forward(v);
        if self.on {
            mask_spectral(self.grid, &mut hat);
        }
        hat
    }
}

/// `W = (|d|^2 - 1)^2 / (4 eps^2)` and `grad_d W = (|d|^2 - 1) d / eps^2`,
/// pointwise.
pub fn penalty(d: &Field, epsilon: f64) -> Result<(Field, Field)> {
    if d.shape() != Shape::Vector(3) {
        return Err(Error::Shape(format!("director must have 3 components, got {:?}", d.shape())));
    }
    d.ensure_finite("director")?;
    let grid = d.grid();
    let len = grid.len();
    let inv = 1.0 / (epsilon * epsilon);
    let s = norm_sq_minus_one(d);
    let w: Vec<f64> = s.iter().map(|s| 0.25 * inv * s * s).collect();
    let mut g = vec![0.0; 3 * len];
    for k in 0..3 {
        for (p, (gv, dv)) in g[k * len..(k + 1) * len].iter_mut().zip(d.comp(k)).enumerate() {
            *gv = inv * s[p] * dv;
        }
    }
    Ok((Field::from_raw(grid, Shape::Scalar, w), Field::from_raw(grid, Shape::Vector(3), g)))
}

fn norm_sq_minus_one(d: &Field) -> Vec<f64> {
    let (d0, d1, d2) = (d.comp(0), d.comp(1), d.comp(2));
    (0..d.grid().len()).map(|p| d0[p] * d0[p] + d1[p] * d1[p] + d2[p] * d2[p] - 1.0).collect()
}

/// `(i, j) -> grad_i d . grad_j d` for a `rows x c` gradient tensor.
pub fn ericksen_stress(grad_d: &Field) -> Result<Field> {
    let Shape::Tensor(rows, cols) = grad_d.shape() else {
        return Err(Error::Shape(format!("expected a gradient tensor, got {:?}", grad_d.shape())));
    };
    grad_d.ensure_finite("director gradient")?;
    let grid = grad_d.grid();
    let len = grid.len();
    let mut out = vec![0.0; rows * rows * len];
    for i in 0..rows {
        for j in i..rows {
            let mut acc = vec![0.0; len];
            for k in 0..cols {
                let (a, b) = (grad_d.entry(i, k), grad_d.entry(j, k));
                for p in 0..len {
                    acc[p] += a[p] * b[p];
                }
            }
            out[(i * rows + j) * len..(i * rows + j + 1) * len].copy_from_slice(&acc);
            out[(j * rows + i) * len..(j * rows + i + 1) * len].copy_from_slice(&acc);
        }
    }
    Ok(Field::from_raw(grid, Shape::Tensor(rows, rows), out))
}

/// Co-rotational director rate from the constitutive relation,
/// `N = -(lambda2/lambda1) A d - (lap d - grad_d W) / lambda1`.
pub fn transport_n(state: &FieldState) -> Result<Field> {
    Ok(ConstitutiveBundle::new(state)?.n)
}

/// Leslie stress
/// `mu1 (d.Ad) d(x)d + mu2 N(x)d + mu3 d(x)N + mu4 A + mu5 Ad(x)d + mu6 d(x)Ad`
/// with `(a (x) b)_ij = a_i b_j`. `a` may be `dim x dim` or padded `3 x 3`.
pub fn leslie_stress(
    c: &LeslieCoefficients,
    d: &Field,
    a: &Field,
    n: &Field,
    dealias: bool,
) -> Result<Field> {
    let grid = d.grid();
    if !d.same_grid(a) || !d.same_grid(n) {
        return Err(Error::GridMismatch);
    }
    if d.shape() != Shape::Vector(3) || n.shape() != Shape::Vector(3) {
        return Err(Error::Shape("director and N must have 3 components".into()));
    }
    let a3 = match a.shape() {
        Shape::Tensor(3, 3) => a.clone(),
        Shape::Tensor(r, c2) if r == c2 && r == grid.dim() => pad3(a),
        s => return Err(Error::Shape(format!("strain rate has shape {s:?}"))),
    };
    let f = Filter { grid, on: dealias };
    let ad = mat_vec(&a3, d, &f);
    let dad = dot(d, &ad, &f);
    Ok(assemble_sigma(c, d, &a3, n, &ad, &dad, &f))
}

fn pad3(t: &Field) -> Field {
    let Shape::Tensor(r, c) = t.shape() else { unreachable!() };
    let grid = t.grid();
    let len = grid.len();
    let mut out = vec![0.0; 9 * len];
    for i in 0..r {
        for j in 0..c {
            out[(i * 3 + j) * len..(i * 3 + j + 1) * len].copy_from_slice(t.entry(i, j));
        }
    }
    Field::from_raw(grid, Shape::Tensor(3, 3), out)
}

/// `(M v)_i = M_ij v_j` for a `3 x 3` tensor and a 3-vector, filtered.
fn mat_vec(m: &Field, v: &Field, f: &Filter) -> Field {
    let len = f.grid.len();
    let mut out = vec![0.0; 3 * len];
    for i in 0..3 {
        let dst = &mut out[i * len..(i + 1) * len];
        for j in 0..3 {
            let (mij, vj) = (m.entry(i, j), v.comp(j));
            if mij.iter().all(|x| *x == 0.0) {
                continue;
            }
            for p in 0..len {
                dst[p] += mij[p] * vj[p];
            }
        }
        f.real(dst);
    }
    Field::from_raw(f.grid, Shape::Vector(3), out)
}

fn dot(a: &Field, b: &Field, f: &Filter) -> Field {
    let len = f.grid.len();
    let mut out = vec![0.0; len];
    for c in 0..a.ncomp() {
        for (o, (x, y)) in out.iter_mut().zip(a.comp(c).iter().zip(b.comp(c))) {
            *o += x * y;
        }
    }
    f.real(&mut out);
    Field::from_raw(f.grid, Shape::Scalar, out)
}

fn assemble_sigma(
    c: &LeslieCoefficients,
    d: &Field,
    a3: &Field,
    n: &Field,
    ad: &Field,
    dad: &Field,
    f: &Filter,
) -> Field {
    let len = f.grid.len();
    // sigma = X (x) d + d (x) Y + mu4 A
    let mut x = vec![0.0; 3 * len];
    let mut y = vec![0.0; 3 * len];
    for i in 0..3 {
        let xi = &mut x[i * len..(i + 1) * len];
        if c.mu1 != 0.0 {
            let (s, di) = (dad.comp(0), d.comp(i));
            for p in 0..len {
                xi[p] = s[p] * di[p];
            }
            f.real(xi);
            xi.iter_mut().for_each(|v| *v *= c.mu1);
        }
        let (ni, adi) = (n.comp(i), ad.comp(i));
        let yi = &mut y[i * len..(i + 1) * len];
        for p in 0..len {
            xi[p] += c.mu2 * ni[p] + c.mu5 * adi[p];
            yi[p] = c.mu3 * ni[p] + c.mu6 * adi[p];
        }
    }
    let mut sigma = vec![0.0; 9 * len];
    for i in 0..3 {
        for j in 0..3 {
            let dst = &mut sigma[(i * 3 + j) * len..(i * 3 + j + 1) * len];
            let (xi, dj, di, yj) = (&x[i * len..(i + 1) * len], d.comp(j), d.comp(i), &y[j * len..(j + 1) * len]);
            for p in 0..len {
                dst[p] = xi[p] * dj[p] + di[p] * yj[p];
            }
            f.real(dst);
            let aij = a3.entry(i, j);
            for p in 0..len {
                dst[p] += c.mu4 * aij[p];
            }
        }
    }
    Field::from_raw(f.grid, Shape::Tensor(3, 3), sigma)
}

impl ConstitutiveBundle {
    pub fn new(state: &FieldState) -> Result<Self> {
        Self::with_dealias(state, true)
    }

    pub fn with_dealias(state: &FieldState, dealias: bool) -> Result<Self> {
        let u_hat = state.u.to_spectral();
        let d_hat = state.d.to_spectral();
        Self::from_spectral(state, &u_hat, &d_hat, dealias)
    }

    pub(crate) fn from_spectral(state: &FieldState, u_hat: &[Modes], d_hat: &[Modes], dealias: bool) -> Result<Self> {
        let c = &state.coeffs;
        if !(c.lambda1 < 0.0) {
            return Err(Error::Regime(format!("transport needs lambda1 < 0, got {}", c.lambda1)));
        }
        let grid = state.grid();
        let dim = grid.dim();
        let len = grid.len();
        let f = Filter { grid, on: dealias };
        let d = &state.d;

        let grad_u = Field::from_spectral(grid, Shape::Tensor(dim, dim), grad_spectral(grid, u_hat));
        let grad_d = Field::from_spectral(grid, Shape::Tensor(dim, 3), grad_spectral(grid, d_hat));
        let lap_d = Field::from_spectral(
            grid,
            Shape::Vector(3),
            d_hat
                .iter()
                .map(|h| {
                    let mut h = h.clone();
                    ops::laplacian_spectral(grid, &mut h);
                    h
                })
                .collect(),
        );

        let a = pad3(&ops::sym_skew(&grad_u, 1.0));
        let omega = pad3(&ops::sym_skew(&grad_u, -1.0));

        let inv = 1.0 / (c.epsilon * c.epsilon);
        let mut s = norm_sq_minus_one(d);
        let w_val = Field::from_raw(grid, Shape::Scalar, s.iter().map(|s| 0.25 * inv * s * s).collect());
        f.real(&mut s);
        let mut gw = vec![0.0; 3 * len];
        for k in 0..3 {
            let dst = &mut gw[k * len..(k + 1) * len];
            for (p, dv) in d.comp(k).iter().enumerate() {
                dst[p] = s[p] * dv;
            }
            f.real(dst);
            dst.iter_mut().for_each(|v| *v *= inv);
        }
        let grad_w = Field::from_raw(grid, Shape::Vector(3), gw);
        let h = &lap_d - &grad_w;

        let ad = mat_vec(&a, d, &f);
        let omega_d = mat_vec(&omega, d, &f);
        let mut n = ad.scale(-c.lambda2 / c.lambda1);
        n.axpy(-1.0 / c.lambda1, &h);
        let d_a_d = dot(d, &ad, &f);
        let sigma = assemble_sigma(c, d, &a, &n, &ad, &d_a_d, &f);

        Ok(ConstitutiveBundle { grad_u, a, omega, grad_d, lap_d, w_val, grad_w, h, ad, omega_d, n, d_a_d, sigma })
    }
}

/// Fourier symbols of the implicitly treated linear parts: `-(mu4/2)|2 pi k|^2`
/// for velocity and `|2 pi k|^2 / lambda1` for the director.
pub(crate) fn linear_symbols(grid: &SpectralGrid, c: &LeslieCoefficients) -> (Vec<f64>, Vec<f64>) {
    let k2 = grid.k_squared_all();
    (k2.iter().map(|k| -0.5 * c.mu4 * k).collect(), k2.iter().map(|k| k / c.lambda1).collect())
}

/// Explicit momentum forcing before projection:
/// `-(v.grad)u - div(grad d (.) grad d) + div(sigma - mu4 A)` plus the optional
/// r-Laplacian, where `v` is `u` or its mode truncation.
pub(crate) fn momentum_force_hat(
    state: &FieldState,
    b: &ConstitutiveBundle,
    u_hat: &[Modes],
    opts: &RhsOptions,
) -> Result<Vec<Modes>> {
    let grid = state.grid();
    let dim = grid.dim();
    let len = grid.len();
    let c = &state.coeffs;
    let f = Filter { grid, on: opts.dealias };

    let adv: Vec<Vec<f64>> = match opts.advect_modes {
        Some(m) => {
            if m == 0 || m > grid.n() / 2 {
                return Err(Error::Parameter(format!("advection cutoff {m} outside 1..={}", grid.n() / 2)));
            }
            u_hat
                .iter()
                .map(|h| {
                    let mut h = h.clone();
                    ops::truncate_spectral(grid, &mut h, m);
                    grid.inverse(h)
                })
                .collect()
        }
        None => (0..dim).map(|a| state.u.comp(a).to_vec()).collect(),
    };

    let mut force: Vec<Modes> = Vec::with_capacity(dim);
    let mut buf = vec![0.0; len];
    for j in 0..dim {
        buf.iter_mut().for_each(|v| *v = 0.0);
        for (i, vi) in adv.iter().enumerate() {
            let g = b.grad_u.entry(i, j);
            for p in 0..len {
                buf[p] += vi[p] * g[p];
            }
        }
        let mut hat = f.hat(&buf);
        hat.iter_mut().for_each(|v| *v = -*v);
        force.push(hat);
    }

    // stress part: T = sigma - mu4 A - E on the in-plane block
    let mut flux_r: Option<Field> = None;
    if let Some(rl) = opts.r_laplacian {
        let mut q = vec![0.0; len];
        for comp in 0..dim * dim {
            for (qp, g) in q.iter_mut().zip(b.grad_u.comp(comp)) {
                *qp += g * g;
            }
        }
        let expo = 0.5 * (rl.r - 2.0);
        let q: Vec<f64> = if expo == 1.0 { q } else { q.iter().map(|v| v.powf(expo)).collect() };
        let mut data = vec![0.0; dim * dim * len];
        for comp in 0..dim * dim {
            let g = b.grad_u.comp(comp);
            for p in 0..len {
                data[comp * len + p] = rl.weight * q[p] * g[p];
            }
        }
        flux_r = Some(Field::from_raw(grid, Shape::Tensor(dim, dim), data));
    }
    for i in 0..dim {
        for j in 0..dim {
            let (s, a) = (b.sigma.entry(i, j), b.a.entry(i, j));
            for p in 0..len {
                buf[p] = s[p] - c.mu4 * a[p];
            }
            // the filter is linear, so one masked transform covers every product
            for k in 0..3 {
                let (gi, gj) = (b.grad_d.entry(i, k), b.grad_d.entry(j, k));
                for p in 0..len {
                    buf[p] -= gi[p] * gj[p];
                }
            }
            if let Some(fr) = &flux_r {
                let fe = fr.entry(i, j);
                for p in 0..len {
                    buf[p] += fe[p];
                }
            }
            let t_hat = f.hat(&buf);
            let fj = &mut force[j];
            for (m, t) in t_hat.iter().enumerate() {
                fj[m] += I * grid.deriv_wavenumber(m)[i] * t;
            }
        }
    }
    Ok(force)
}

/// Projected explicit momentum forcing.
pub(crate) fn momentum_explicit_hat(
    state: &FieldState,
    b: &ConstitutiveBundle,
    u_hat: &[Modes],
    opts: &RhsOptions,
) -> Result<Vec<Modes>> {
    let mut force = momentum_force_hat(state, b, u_hat, opts)?;
    project_spectral(state.grid(), &mut force);
    Ok(force)
}

/// Explicit director forcing `-(u.grad)d + omega d - (lambda2/lambda1) A d + grad_d W / lambda1`.
pub(crate) fn director_explicit_hat(state: &FieldState, b: &ConstitutiveBundle, opts: &RhsOptions) -> Vec<Modes> {
    let grid = state.grid();
    let dim = grid.dim();
    let len = grid.len();
    let c = &state.coeffs;
    let f = Filter { grid, on: opts.dealias };
    let (r_ad, r_w) = (-c.lambda2 / c.lambda1, 1.0 / c.lambda1);
    let mut adv = vec![0.0; len];
    (0..3)
        .map(|k| {
            adv.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..dim {
                let (ui, g) = (state.u.comp(i), b.grad_d.entry(i, k));
                for p in 0..len {
                    adv[p] += ui[p] * g[p];
                }
            }
            f.real(&mut adv);
            let (wd, ad, gw) = (b.omega_d.comp(k), b.ad.comp(k), b.grad_w.comp(k));
            let rest: Vec<f64> = (0..len).map(|p| -adv[p] + wd[p] + r_ad * ad[p] + r_w * gw[p]).collect();
            grid.forward(&rest)
        })
        .collect()
}

/// `d_t d = -(u.grad)d + omega d - (lambda2/lambda1) A d - (lap d - grad_d W)/lambda1`,
/// with the `-lap d / lambda1` part returned separately.
pub fn director_rhs(state: &FieldState) -> Result<SplitRhs> {
    let b = ConstitutiveBundle::new(state)?;
    let grid = state.grid();
    let explicit = Field::from_spectral(grid, Shape::Vector(3), director_explicit_hat(state, &b, &RhsOptions::default()));
    let implicit = b.lap_d.scale(-1.0 / state.coeffs.lambda1);
    Ok(SplitRhs { explicit, implicit })
}

/// Leray-projected `-(u.grad)u - div(grad d (.) grad d) + div sigma`, with the
/// viscous part `(mu4/2) lap u` returned separately.
pub fn momentum_rhs(state: &FieldState) -> Result<SplitRhs> {
    momentum_rhs_with(state, &RhsOptions::default())
}

pub fn momentum_rhs_with(state: &FieldState, opts: &RhsOptions) -> Result<SplitRhs> {
    let u_hat = state.u.to_spectral();
    let d_hat = state.d.to_spectral();
    let b = ConstitutiveBundle::from_spectral(state, &u_hat, &d_hat, opts.dealias)?;
    let grid = state.grid();
    let dim = grid.dim();
    let explicit = Field::from_spectral(grid, Shape::Vector(dim), momentum_explicit_hat(state, &b, &u_hat, opts)?);
    let (lu, _) = linear_symbols(grid, &state.coeffs);
    let mut hat = u_hat;
    project_spectral(grid, &mut hat);
    for comp in &mut hat {
        for (v, l) in comp.iter_mut().zip(&lu) {
            *v *= l;
        }
    }
    let implicit = Field::from_spectral(grid, Shape::Vector(dim), hat);
    Ok(SplitRhs { explicit, implicit })
}
