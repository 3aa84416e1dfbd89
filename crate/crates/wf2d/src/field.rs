//! Fields on the torus: collocation samples plus Fourier modes.
//!
//! A [`TorusField`] holds 1 (scalar), 2 (vector) or 4 (2×2 tensor, row-major)
//! real components on an `N×N` grid over `[-π, π]²`, `N` a power of two.
//! Either representation may be absent; linear calculus runs in modes,
//! quadrature norms in samples, and each can be recovered from the other.
//!
//! Products of band-limited fields are exact: both factors are synthesized on
//! a doubled grid, multiplied pointwise, and the result is truncated back, so
//! no aliased tail ever contaminates retained modes.

use crate::error::{Error, Result};
use crate::fft;
use crate::grid;
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;
use std::io::{Read, Write};

pub const DUMP_MAGIC: &[u8; 4] = b"WF2D";
pub const DUMP_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Components {
    Scalar,
    Vector,
    Tensor,
}

impl Components {
    pub fn count(self) -> usize {
        match self {
            Components::Scalar => 1,
            Components::Vector => 2,
            Components::Tensor => 4,
        }
    }

    pub fn from_count(c: usize) -> Result<Self> {
        match c {
            1 => Ok(Components::Scalar),
            2 => Ok(Components::Vector),
            4 => Ok(Components::Tensor),
            other => Err(Error::Shape(format!("{other} components (want 1, 2 or 4)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    /// `L^p` quadrature norm of the pointwise Frobenius magnitude; `p = ∞` is the grid sup.
    Lp(f64),
    /// Sum of sup-norms of all derivatives of order `≤ N`.
    CN(usize),
    /// `sqrt(Σ_k (1+|k|²)^s |c_k|² (2π)²)`.
    Hs(f64),
}

#[derive(Debug, Clone)]
pub struct TorusField {
    n: usize,
    comps: Components,
    samples: Option<Vec<f64>>,
    modes: Option<Vec<Complex64>>,
}

impl TorusField {
    pub fn zeros(n: usize, comps: Components) -> Result<Self> {
        grid::validate_n(n)?;
        let len = comps.count() * n * n;
        Ok(Self {
            n,
            comps,
            samples: Some(vec![0.0; len]),
            modes: Some(vec![Complex64::new(0.0, 0.0); len]),
        })
    }

    pub fn from_samples(n: usize, comps: Components, samples: Vec<f64>) -> Result<Self> {
        grid::validate_n(n)?;
        if samples.len() != comps.count() * n * n {
            return Err(Error::Shape(format!(
                "sample buffer length {} for {} components on {n}×{n}",
                samples.len(),
                comps.count()
            )));
        }
        Ok(Self { n, comps, samples: Some(samples), modes: None })
    }

    pub fn from_modes(n: usize, comps: Components, modes: Vec<Complex64>) -> Result<Self> {
        grid::validate_n(n)?;
        if modes.len() != comps.count() * n * n {
            return Err(Error::Shape(format!(
                "mode buffer length {} for {} components on {n}×{n}",
                modes.len(),
                comps.count()
            )));
        }
        Ok(Self { n, comps, samples: None, modes: Some(modes) })
    }

    pub fn constant(n: usize, comps: Components, values: &[f64]) -> Result<Self> {
        if values.len() != comps.count() {
            return Err(Error::Shape("constant value count must match components".into()));
        }
        let mut f = Self::zeros(n, comps)?;
        for (c, &v) in values.iter().enumerate() {
            f.modes.as_mut().unwrap()[c * n * n] = Complex64::new(v, 0.0);
            for s in f.samples.as_mut().unwrap()[c * n * n..(c + 1) * n * n].iter_mut() {
                *s = v;
            }
        }
        Ok(f)
    }

    pub fn scalar_from_fn(n: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        grid::validate_n(n)?;
        let mut samples = vec![0.0; n * n];
        for i1 in 0..n {
            let x1 = grid::coord(i1, n);
            for i2 in 0..n {
                samples[i1 * n + i2] = f(x1, grid::coord(i2, n));
            }
        }
        Self::from_samples(n, Components::Scalar, samples)
    }

    pub fn vector_from_fn(n: usize, f: impl Fn(f64, f64) -> [f64; 2]) -> Result<Self> {
        grid::validate_n(n)?;
        let mut samples = vec![0.0; 2 * n * n];
        for i1 in 0..n {
            let x1 = grid::coord(i1, n);
            for i2 in 0..n {
                let v = f(x1, grid::coord(i2, n));
                samples[i1 * n + i2] = v[0];
                samples[n * n + i1 * n + i2] = v[1];
            }
        }
        Self::from_samples(n, Components::Vector, samples)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> Components {
        self.comps
    }

    pub fn ncomp(&self) -> usize {
        self.comps.count()
    }

    pub fn has_samples(&self) -> bool {
        self.samples.is_some()
    }

    pub fn has_modes(&self) -> bool {
        self.modes.is_some()
    }

    /// Populate the missing representation (no-op if already present).
    pub fn ensure_samples(&mut self) {
        if self.samples.is_none() {
            let modes = self.modes.as_ref().expect("field has neither representation");
            let nn = self.n * self.n;
            let mut out = Vec::with_capacity(self.ncomp() * nn);
            for c in 0..self.ncomp() {
                out.extend(fft::modes_to_samples(&modes[c * nn..(c + 1) * nn], self.n));
            }
            self.samples = Some(out);
        }
    }

    pub fn ensure_modes(&mut self) {
        if self.modes.is_none() {
            let samples = self.samples.as_ref().expect("field has neither representation");
            let nn = self.n * self.n;
            let mut out = Vec::with_capacity(self.ncomp() * nn);
            for c in 0..self.ncomp() {
                out.extend(fft::samples_to_modes(&samples[c * nn..(c + 1) * nn], self.n));
            }
            self.modes = Some(out);
        }
    }

    /// Spec-shaped transform: returns a copy with the requested representation
    /// populated (forward: samples → modes, inverse: modes → samples).
    pub fn transform(&self, direction: Direction) -> Self {
        let mut out = self.clone();
        match direction {
            Direction::Forward => out.ensure_modes(),
            Direction::Inverse => out.ensure_samples(),
        }
        out
    }

    pub fn samples(&self) -> &[f64] {
        self.samples.as_ref().expect("samples not populated; call ensure_samples").as_slice()
    }

    pub fn modes(&self) -> &[Complex64] {
        self.modes.as_ref().expect("modes not populated; call ensure_modes").as_slice()
    }

    pub fn samples_of(&self, c: usize) -> &[f64] {
        let nn = self.n * self.n;
        &self.samples()[c * nn..(c + 1) * nn]
    }

    pub fn modes_of(&self, c: usize) -> &[Complex64] {
        let nn = self.n * self.n;
        &self.modes()[c * nn..(c + 1) * nn]
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        self.modes = None;
        self.samples.as_mut().expect("samples not populated").as_mut_slice()
    }

    pub fn modes_mut(&mut self) -> &mut [Complex64] {
        self.samples = None;
        self.modes.as_mut().expect("modes not populated").as_mut_slice()
    }

    /// Drop the sample representation (memory relief for stored snapshots).
    pub fn drop_samples(&mut self) {
        if self.modes.is_some() {
            self.samples = None;
        }
    }

    pub fn drop_modes(&mut self) {
        if self.samples.is_some() {
            self.modes = None;
        }
    }

    /// Mode coefficient at wavenumber `(k1, k2)`, `|k_i| ≤ n/2`, in the
    /// split-Nyquist view; zero outside the stored band.
    pub fn mode(&self, c: usize, k1: i64, k2: i64) -> Complex64 {
        let half = (self.n / 2) as i64;
        if k1.abs() > half || k2.abs() > half {
            return Complex64::new(0.0, 0.0);
        }
        let nn = self.n * self.n;
        let idx = c * nn + grid::bin(k1, self.n) * self.n + grid::bin(k2, self.n);
        self.modes()[idx] * grid::nyquist_weight(k1, k2, self.n)
    }

    /// Accumulate into the bin holding `(k1, k2)` (`±n/2` share a bin).
    pub fn add_mode(&mut self, c: usize, k1: i64, k2: i64, v: Complex64) {
        let half = (self.n / 2) as i64;
        assert!(k1.abs() <= half && k2.abs() <= half, "wavenumber outside stored band");
        let n = self.n;
        let nn = n * n;
        self.samples = None;
        let modes = self.modes.as_mut().expect("modes not populated");
        modes[c * nn + grid::bin(k1, n) * n + grid::bin(k2, n)] += v;
    }

    pub fn mean(&self, c: usize) -> f64 {
        if let Some(modes) = &self.modes {
            modes[c * self.n * self.n].re
        } else {
            let s = self.samples_of(c);
            s.iter().sum::<f64>() / (s.len() as f64)
        }
    }

    /// `|c_0| ≤ tol · max|c_k|` for every component.
    pub fn is_mean_zero(&self, tol: f64) -> bool {
        let nn = self.n * self.n;
        let modes = self.modes();
        (0..self.ncomp()).all(|c| {
            let m = &modes[c * nn..(c + 1) * nn];
            let cmax = m.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
            m[0].norm() <= tol * cmax.max(f64::MIN_POSITIVE)
        })
    }

    /// Multiply modes by `(ik₁)^{n₁}(ik₂)^{n₂}`. On a Nyquist line the
    /// multiplier is averaged over the split pair, so odd orders send that
    /// content to zero and real fields stay real.
    pub fn differentiate(&self, multi_index: (u32, u32)) -> Self {
        let mut out = self.transform(Direction::Forward);
        out.samples = None;
        let n = out.n;
        let modes = out.modes.as_mut().unwrap();
        let nn = n * n;
        let m1: Vec<Complex64> = (0..n).map(|i| axis_symbol(grid::wavenumber(i, n), n, multi_index.0)).collect();
        let m2: Vec<Complex64> = (0..n).map(|i| axis_symbol(grid::wavenumber(i, n), n, multi_index.1)).collect();
        for c in 0..out.comps.count() {
            for i1 in 0..n {
                let base = c * nn + i1 * n;
                for i2 in 0..n {
                    modes[base + i2] *= m1[i1] * m2[i2];
                }
            }
        }
        out
    }

    /// Exact embedding into a finer grid (`n_new ≥ n`, power of two).
    pub fn promote(&self, n_new: usize) -> Result<Self> {
        grid::validate_n(n_new)?;
        if n_new < self.n {
            return Err(Error::Shape(format!("promote target {n_new} below current {}", self.n)));
        }
        if n_new == self.n {
            return Ok(self.clone());
        }
        let src = self.transform(Direction::Forward);
        let mut dst = TorusField::from_modes(
            n_new,
            self.comps,
            vec![Complex64::new(0.0, 0.0); self.comps.count() * n_new * n_new],
        )?;
        let half = (self.n / 2) as i64;
        for c in 0..self.comps.count() {
            for k1 in -half..=half {
                for k2 in -half..=half {
                    let v = src.mode(c, k1, k2);
                    if v.norm_sqr() != 0.0 {
                        dst.add_mode(c, k1, k2, v);
                    }
                }
            }
        }
        Ok(dst)
    }

    /// Band truncation onto a coarser grid: keeps `|k_i| ≤ n_new/2` with the
    /// split-Nyquist fold on the new boundary.
    pub fn truncate(&self, n_new: usize) -> Result<Self> {
        grid::validate_n(n_new)?;
        if n_new > self.n {
            return self.promote(n_new);
        }
        if n_new == self.n {
            return Ok(self.clone());
        }
        let src = self.transform(Direction::Forward);
        let mut dst = TorusField::from_modes(
            n_new,
            self.comps,
            vec![Complex64::new(0.0, 0.0); self.comps.count() * n_new * n_new],
        )?;
        let half = (n_new / 2) as i64;
        for c in 0..self.comps.count() {
            for k1 in -half..=half {
                for k2 in -half..=half {
                    let v = src.mode(c, k1, k2);
                    if v.norm_sqr() != 0.0 {
                        dst.add_mode(c, k1, k2, v);
                    }
                }
            }
        }
        Ok(dst)
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut out = self.clone();
        if let Some(s) = out.samples.as_mut() {
            for v in s.iter_mut() {
                *v *= a;
            }
        }
        if let Some(m) = out.modes.as_mut() {
            for v in m.iter_mut() {
                *v *= a;
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_linear(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_linear(other, -1.0)
    }

    fn zip_linear(&self, other: &Self, sign: f64) -> Result<Self> {
        if self.comps != other.comps {
            return Err(Error::Shape("component mismatch in field addition".into()));
        }
        let n = self.n.max(other.n);
        let mut a = self.promote(n)?;
        let mut b = other.promote(n)?;
        let use_samples = a.has_samples() && b.has_samples();
        if !use_samples && !(a.has_modes() && b.has_modes()) {
            a.ensure_modes();
            b.ensure_modes();
        }
        let use_modes = a.has_modes() && b.has_modes();
        if use_samples {
            let sa = a.samples.as_mut().unwrap();
            for (x, y) in sa.iter_mut().zip(b.samples.as_ref().unwrap()) {
                *x += sign * y;
            }
        } else {
            a.samples = None;
        }
        if use_modes {
            let ma = a.modes.as_mut().unwrap();
            for (x, y) in ma.iter_mut().zip(b.modes.as_ref().unwrap()) {
                *x += sign * y;
            }
        } else {
            a.modes = None;
        }
        Ok(a)
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::Lp(p) => self.norm_lp(p),
            NormKind::CN(order) => self.norm_cn(order),
            NormKind::Hs(s) => self.norm_hs(s),
        }
    }

    pub fn norm_lp(&self, p: f64) -> f64 {
        assert!(p >= 1.0, "L^p norm needs p ≥ 1");
        let mut f = self.clone();
        f.ensure_samples();
        let nn = f.n * f.n;
        let samples = f.samples.as_ref().unwrap();
        let nc = f.ncomp();
        let mag_sq = |j: usize| -> f64 { (0..nc).map(|c| samples[c * nn + j].powi(2)).sum() };
        if p.is_infinite() {
            return (0..nn).map(mag_sq).fold(0.0f64, f64::max).sqrt();
        }
        let cell = (2.0 * std::f64::consts::PI / f.n as f64).powi(2);
        let sum: f64 = (0..nn).map(|j| mag_sq(j).powf(p / 2.0)).sum();
        (cell * sum).powf(1.0 / p)
    }

    pub fn norm_l2(&self) -> f64 {
        if self.modes.is_some() {
            self.norm_hs(0.0)
        } else {
            self.norm_lp(2.0)
        }
    }

    pub fn norm_sup(&self) -> f64 {
        self.norm_lp(f64::INFINITY)
    }

    pub fn norm_cn(&self, order: usize) -> f64 {
        let f = self.transform(Direction::Forward);
        let mut total = 0.0;
        for n1 in 0..=order as u32 {
            for n2 in 0..=(order as u32 - n1) {
                total += f.differentiate((n1, n2)).norm_sup();
            }
        }
        total
    }

    pub fn norm_hs(&self, s: f64) -> f64 {
        let f = self.transform(Direction::Forward);
        let n = f.n;
        let modes = f.modes.as_ref().unwrap();
        let nn = n * n;
        let mut sum = 0.0;
        for i1 in 0..n {
            for i2 in 0..n {
                let ksq = grid::k_sq(i1, i2, n);
                let w = (1.0 + ksq).powf(s);
                for c in 0..f.ncomp() {
                    sum += w * modes[c * nn + i1 * n + i2].norm_sqr();
                }
            }
        }
        (sum * (2.0 * std::f64::consts::PI).powi(2)).sqrt()
    }

    /// Largest `max(|k₁|, |k₂|)` carrying a coefficient above `floor`.
    pub fn active_band(&self, floor: f64) -> i64 {
        let f = self.transform(Direction::Forward);
        let n = f.n;
        let nn = n * n;
        let modes = f.modes.as_ref().unwrap();
        let mut band = 0i64;
        for c in 0..f.ncomp() {
            for i1 in 0..n {
                for i2 in 0..n {
                    if modes[c * nn + i1 * n + i2].norm() > floor {
                        let b = grid::wavenumber(i1, n).abs().max(grid::wavenumber(i2, n).abs());
                        band = band.max(b);
                    }
                }
            }
        }
        band
    }

    pub fn write_dump<W: Write>(&self, w: &mut W) -> Result<()> {
        let mut f = self.clone();
        f.ensure_samples();
        w.write_all(DUMP_MAGIC)?;
        w.write_u32::<LittleEndian>(DUMP_VERSION)?;
        w.write_u8(f.ncomp() as u8)?;
        w.write_u32::<LittleEndian>(f.n as u32)?;
        for &v in f.samples.as_ref().unwrap() {
            w.write_f64::<LittleEndian>(v)?;
        }
        Ok(())
    }

    pub fn read_dump<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(Error::Dump(format!("bad magic {magic:?}")));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != DUMP_VERSION {
            return Err(Error::Dump(format!("unsupported version {version}")));
        }
        let comps = Components::from_count(r.read_u8()? as usize)?;
        let n = r.read_u32::<LittleEndian>()? as usize;
        grid::validate_n(n)?;
        let len = comps.count() * n * n;
        let mut samples = vec![0.0; len];
        for v in samples.iter_mut() {
            *v = r.read_f64::<LittleEndian>()?;
        }
        Self::from_samples(n, comps, samples)
    }
}

fn axis_symbol(k: i64, n: usize, order: u32) -> Complex64 {
    if order == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if k.abs() == (n as i64) / 2 && order % 2 == 1 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::new(0.0, k as f64).powu(order)
}

/// Pointwise combination of sample-space values on a common grid.
///
/// Both inputs are promoted to the max grid; `f` maps per-point component
/// values of `a` and `b` to the output components. No padding is applied, so
/// the caller is responsible for the product band fitting the grid.
pub fn pointwise(
    a: &TorusField,
    b: &TorusField,
    out: Components,
    f: impl Fn(&[f64], &[f64], &mut [f64]),
) -> Result<TorusField> {
    let n = a.n().max(b.n());
    let mut pa = a.promote(n)?;
    let mut pb = b.promote(n)?;
    pa.ensure_samples();
    pb.ensure_samples();
    let nn = n * n;
    let (nca, ncb, nco) = (pa.ncomp(), pb.ncomp(), out.count());
    let sa = pa.samples.as_ref().unwrap();
    let sb = pb.samples.as_ref().unwrap();
    let mut so = vec![0.0; nco * nn];
    let mut va = vec![0.0; nca];
    let mut vb = vec![0.0; ncb];
    let mut vo = vec![0.0; nco];
    for j in 0..nn {
        for c in 0..nca {
            va[c] = sa[c * nn + j];
        }
        for c in 0..ncb {
            vb[c] = sb[c * nn + j];
        }
        vo.iter_mut().for_each(|v| *v = 0.0);
        f(&va, &vb, &mut vo);
        for c in 0..nco {
            so[c * nn + j] = vo[c];
        }
    }
    TorusField::from_samples(n, out, so)
}

/// Exact de-aliased pointwise product: evaluate on the doubled grid, combine,
/// truncate back to the common grid.
pub fn product(
    a: &TorusField,
    b: &TorusField,
    out: Components,
    f: impl Fn(&[f64], &[f64], &mut [f64]),
) -> Result<TorusField> {
    let n = a.n().max(b.n());
    let pa = a.promote(2 * n)?;
    let pb = b.promote(2 * n)?;
    let fine = pointwise(&pa, &pb, out, f)?;
    fine.truncate(n)
}

/// Scalar × anything, exact.
pub fn mul_scalar(s: &TorusField, g: &TorusField) -> Result<TorusField> {
    if s.components() != Components::Scalar {
        return Err(Error::Shape("mul_scalar expects a scalar first factor".into()));
    }
    product(s, g, g.components(), |a, b, o| {
        for (ob, bb) in o.iter_mut().zip(b.iter()) {
            *ob = a[0] * bb;
        }
    })
}

/// Dot product of two vector fields, exact.
pub fn dot(a: &TorusField, b: &TorusField) -> Result<TorusField> {
    if a.components() != Components::Vector || b.components() != Components::Vector {
        return Err(Error::Shape("dot expects vector fields".into()));
    }
    product(a, b, Components::Scalar, |x, y, o| {
        o[0] = x[0] * y[0] + x[1] * y[1];
    })
}

/// Tensor product `a ⊗ b`, exact.
pub fn outer(a: &TorusField, b: &TorusField) -> Result<TorusField> {
    if a.components() != Components::Vector || b.components() != Components::Vector {
        return Err(Error::Shape("outer expects vector fields".into()));
    }
    product(a, b, Components::Tensor, |x, y, o| {
        o[0] = x[0] * y[0];
        o[1] = x[0] * y[1];
        o[2] = x[1] * y[0];
        o[3] = x[1] * y[1];
    })
}

/// Trace-free tensor product `a ⊗̊ b = a ⊗ b - ½(a·b) Id`, exact.
pub fn outer_tf(a: &TorusField, b: &TorusField) -> Result<TorusField> {
    if a.components() != Components::Vector || b.components() != Components::Vector {
        return Err(Error::Shape("outer_tf expects vector fields".into()));
    }
    product(a, b, Components::Tensor, |x, y, o| {
        let half_dot = 0.5 * (x[0] * y[0] + x[1] * y[1]);
        o[0] = x[0] * y[0] - half_dot;
        o[1] = x[0] * y[1];
        o[2] = x[1] * y[0];
        o[3] = x[1] * y[1] - half_dot;
    })
}
