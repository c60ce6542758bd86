//! Linear parts and the approximate-matrix-factorization composite.
//!
//! An [`AmfOperator`] holds parts `L1..LR` (zero-based here) with `L = ΣLr`.
//! The factored shift `Π (I - σLr)` is taken left to right, so
//! [`AmfOperator::product_solve`] inverts the first factor first and
//! `L̃(σ)` is defined by `I - σL̃ = (I - σL1)(I - σL2)...(I - σLR)`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;

use crate::dense::{self, Matrix};
use crate::{Error, Result};

/// Storage class of a part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartKind {
    Dense,
    Banded { lower: usize, upper: usize },
    Diagonal,
}

/// One linear split term acting on `dim()`-vectors.
pub trait LinearPart: Send + Sync + Debug {
    fn dim(&self) -> usize;

    fn kind(&self) -> PartKind;

    /// `out = Part · v`; both slices have length `dim()`.
    fn apply_into(&self, v: &[f64], out: &mut [f64]);

    /// Overwrites `rhs` with the solution `x` of `(I - σ·Part) x = rhs`.
    ///
    /// Singular factors are reported as `SingularFactor { part: 0 }`; the
    /// composite operator rewrites the index.
    fn shifted_solve_in_place(&self, sigma: f64, rhs: &mut [f64]) -> Result<()>;

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(v, &mut out);
        out
    }

    fn to_dense(&self) -> Matrix {
        let n = self.dim();
        let mut m = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply_into(&e, &mut col);
            for (i, c) in col.iter().enumerate() {
                m[(i, j)] = *c;
            }
            e[j] = 0.0;
        }
        m
    }
}

const SINGULAR: Error = Error::SingularFactor { part: 0 };

#[derive(Debug, Clone)]
pub struct DensePart {
    matrix: Matrix,
}

impl DensePart {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.rows(),
                found: matrix.cols(),
            });
        }
        Ok(DensePart { matrix })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }
}

impl LinearPart for DensePart {
    fn dim(&self) -> usize {
        self.matrix.rows()
    }

    fn kind(&self) -> PartKind {
        PartKind::Dense
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        self.matrix.mul_vec_into(v, out);
    }

    fn shifted_solve_in_place(&self, sigma: f64, rhs: &mut [f64]) -> Result<()> {
        if sigma == 0.0 {
            return Ok(());
        }
        let lu = self.matrix.shifted(sigma).lu().map_err(|_| SINGULAR)?;
        let x = lu.solve(rhs);
        rhs.copy_from_slice(&x);
        Ok(())
    }

    fn to_dense(&self) -> Matrix {
        self.matrix.clone()
    }
}

#[derive(Debug, Clone)]
pub struct DiagonalPart {
    diag: Vec<f64>,
}

impl DiagonalPart {
    pub fn new(diag: Vec<f64>) -> Self {
        DiagonalPart { diag }
    }

    pub fn zeros(n: usize) -> Self {
        DiagonalPart { diag: vec![0.0; n] }
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }
}

impl LinearPart for DiagonalPart {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn kind(&self) -> PartKind {
        PartKind::Diagonal
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        for ((o, d), x) in out.iter_mut().zip(&self.diag).zip(v) {
            *o = d * x;
        }
    }

    fn shifted_solve_in_place(&self, sigma: f64, rhs: &mut [f64]) -> Result<()> {
        if sigma == 0.0 {
            return Ok(());
        }
        let shifted = |d: &f64| 1.0 - sigma * d;
        let scale = self
            .diag
            .iter()
            .map(|d| shifted(d).abs())
            .fold(0.0, f64::max);
        for (r, d) in rhs.iter_mut().zip(&self.diag) {
            let p = shifted(d);
            if p.abs() <= 1e-14 * scale || p == 0.0 {
                return Err(SINGULAR);
            }
            *r /= p;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Dirichlet,
    /// Wraps around: `lower[0]` couples row 0 to the last unknown and
    /// `upper[n-1]` couples the last row to unknown 0.
    Periodic,
}

/// Tridiagonal part: row `i` is `lower[i]·v[i-1] + diag[i]·v[i] + upper[i]·v[i+1]`.
#[derive(Debug, Clone)]
pub struct TridiagonalPart {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    boundary: Boundary,
}

/// Builds a tridiagonal part. With Dirichlet boundaries `lower[0]` and
/// `upper[n-1]` are ignored.
pub fn make_tridiag_part(
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    boundary: Boundary,
) -> Result<TridiagonalPart> {
    let n = diag.len();
    for len in [lower.len(), upper.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: len,
            });
        }
    }
    if n == 0 {
        return Err(Error::invalid("tridiagonal part needs at least one row"));
    }
    if boundary == Boundary::Periodic && n < 3 {
        return Err(Error::invalid("periodic tridiagonal part needs n >= 3"));
    }
    Ok(TridiagonalPart {
        lower,
        diag,
        upper,
        boundary,
    })
}

impl TridiagonalPart {
    /// Constant stencil `(lo, mid, up)` on `n` points.
    pub fn constant(n: usize, lo: f64, mid: f64, up: f64, boundary: Boundary) -> Result<Self> {
        make_tridiag_part(vec![lo; n], vec![mid; n], vec![up; n], boundary)
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Strided application along one line of a larger array.
    fn apply_strided(&self, v: &[f64], out: &mut [f64], offset: usize, stride: usize) {
        let n = self.diag.len();
        let at = |i: usize| offset + i * stride;
        for i in 0..n {
            let mut acc = self.diag[i] * v[at(i)];
            if i > 0 {
                acc += self.lower[i] * v[at(i - 1)];
            } else if self.boundary == Boundary::Periodic {
                acc += self.lower[0] * v[at(n - 1)];
            }
            if i + 1 < n {
                acc += self.upper[i] * v[at(i + 1)];
            } else if self.boundary == Boundary::Periodic {
                acc += self.upper[n - 1] * v[at(0)];
            }
            out[at(i)] = acc;
        }
    }

    /// Solves `(I - σT) x = rhs` along one strided line, in place.
    fn solve_strided(
        &self,
        sigma: f64,
        x: &mut [f64],
        offset: usize,
        stride: usize,
        work: &mut Vec<f64>,
    ) -> Result<()> {
        let n = self.diag.len();
        let sub = |i: usize| -sigma * self.lower[i];
        let sup = |i: usize| -sigma * self.upper[i];
        let mid = |i: usize| 1.0 - sigma * self.diag[i];
        let scale = (0..n).map(|i| mid(i).abs()).fold(0.0, f64::max);
        let tol = 1e-14 * scale;
        let mut line: Vec<f64> = (0..n).map(|i| x[offset + i * stride]).collect();
        match self.boundary {
            Boundary::Dirichlet => {
                thomas(n, &sub, &mid, &sup, &mut line, work, tol)?;
            }
            Boundary::Periodic => {
                // Sherman-Morrison: M = B + u wᵀ with u = (g, 0.., alpha),
                // w = (1, 0.., beta/g).
                let beta = sub(0);
                let alpha = sup(n - 1);
                let g = if mid(0) != 0.0 { -mid(0) } else { -1.0 };
                let mid_b = |i: usize| {
                    if i == 0 {
                        mid(0) - g
                    } else if i == n - 1 {
                        mid(n - 1) - alpha * beta / g
                    } else {
                        mid(i)
                    }
                };
                thomas(n, &sub, &mid_b, &sup, &mut line, work, tol)?;
                let mut z = vec![0.0; n];
                z[0] = g;
                z[n - 1] = alpha;
                thomas(n, &sub, &mid_b, &sup, &mut z, work, tol)?;
                let denom = 1.0 + z[0] + beta * z[n - 1] / g;
                if denom.abs() <= tol || denom == 0.0 {
                    return Err(SINGULAR);
                }
                let f = (line[0] + beta * line[n - 1] / g) / denom;
                for (l, zi) in line.iter_mut().zip(&z) {
                    *l -= f * zi;
                }
            }
        }
        for (i, l) in line.iter().enumerate() {
            x[offset + i * stride] = *l;
        }
        Ok(())
    }
}

/// Thomas elimination for the tridiagonal system `(sub, mid, sup) x = d`,
/// `d` overwritten by `x`. No pivoting.
fn thomas(
    n: usize,
    sub: &dyn Fn(usize) -> f64,
    mid: &dyn Fn(usize) -> f64,
    sup: &dyn Fn(usize) -> f64,
    d: &mut [f64],
    c: &mut Vec<f64>,
    tol: f64,
) -> Result<()> {
    c.clear();
    c.resize(n, 0.0);
    let mut p = mid(0);
    if p.abs() <= tol || p == 0.0 {
        return Err(SINGULAR);
    }
    c[0] = if n > 1 { sup(0) / p } else { 0.0 };
    d[0] /= p;
    for i in 1..n {
        let l = sub(i);
        p = mid(i) - l * c[i - 1];
        if p.abs() <= tol || p == 0.0 {
            return Err(SINGULAR);
        }
        c[i] = if i + 1 < n { sup(i) / p } else { 0.0 };
        d[i] = (d[i] - l * d[i - 1]) / p;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(())
}

impl LinearPart for TridiagonalPart {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn kind(&self) -> PartKind {
        match self.boundary {
            Boundary::Dirichlet => PartKind::Banded { lower: 1, upper: 1 },
            Boundary::Periodic => {
                let n = self.diag.len();
                PartKind::Banded {
                    lower: n - 1,
                    upper: n - 1,
                }
            }
        }
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        self.apply_strided(v, out, 0, 1);
    }

    fn shifted_solve_in_place(&self, sigma: f64, rhs: &mut [f64]) -> Result<()> {
        if sigma == 0.0 {
            return Ok(());
        }
        self.solve_strided(sigma, rhs, 0, 1, &mut Vec::new())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// A one-dimensional operator acting along every grid line of one axis of
/// an `nx × ny` grid stored with `x` fastest (`index = j·nx + i`).
#[derive(Debug, Clone)]
pub struct AxisPart {
    nx: usize,
    ny: usize,
    axis: Axis,
    line: TridiagonalPart,
}

impl AxisPart {
    pub fn new(nx: usize, ny: usize, axis: Axis, line: TridiagonalPart) -> Result<Self> {
        let expected = match axis {
            Axis::X => nx,
            Axis::Y => ny,
        };
        if line.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: line.dim(),
            });
        }
        Ok(AxisPart { nx, ny, axis, line })
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    fn lines(&self) -> impl Iterator<Item = (usize, usize)> {
        let (nx, ny, axis) = (self.nx, self.ny, self.axis);
        let count = match axis {
            Axis::X => ny,
            Axis::Y => nx,
        };
        (0..count).map(move |k| match axis {
            Axis::X => (k * nx, 1),
            Axis::Y => (k, nx),
        })
    }
}

impl LinearPart for AxisPart {
    fn dim(&self) -> usize {
        self.nx * self.ny
    }

    fn kind(&self) -> PartKind {
        match self.axis {
            Axis::X => PartKind::Banded { lower: 1, upper: 1 },
            Axis::Y => PartKind::Banded {
                lower: self.nx,
                upper: self.nx,
            },
        }
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        for (offset, stride) in self.lines() {
            self.line.apply_strided(v, out, offset, stride);
        }
    }

    fn shifted_solve_in_place(&self, sigma: f64, rhs: &mut [f64]) -> Result<()> {
        if sigma == 0.0 {
            return Ok(());
        }
        let mut work = Vec::new();
        for (offset, stride) in self.lines() {
            self.line
                .solve_strided(sigma, rhs, offset, stride, &mut work)?;
        }
        Ok(())
    }
}

/// General band matrix with `lower` sub- and `upper` super-diagonals.
#[derive(Debug, Clone)]
pub struct BandedPart {
    n: usize,
    lower: usize,
    upper: usize,
    /// Row `i` stores columns `i - lower ..= i + upper` (out-of-range slots zero).
    band: Vec<f64>,
}

impl BandedPart {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        BandedPart {
            n,
            lower,
            upper,
            band: vec![0.0; n * (lower + upper + 1)],
        }
    }

    /// Extracts the band of a dense matrix; entries outside it are dropped.
    pub fn from_dense(m: &Matrix, lower: usize, upper: usize) -> Self {
        let mut out = Self::zeros(m.rows(), lower, upper);
        for i in 0..m.rows() {
            let lo = i.saturating_sub(lower);
            let hi = (i + upper).min(m.rows() - 1);
            for j in lo..=hi {
                out.set(i, j, m[(i, j)]);
            }
        }
        out
    }

    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        i * self.width() + (j + self.lower - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.lower < i || j > i + self.upper {
            0.0
        } else {
            self.band[self.slot(i, j)]
        }
    }

    /// # Panics
    /// If `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(j + self.lower >= i && j <= i + self.upper, "outside band");
        let k = self.slot(i, j);
        self.band[k] = value;
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let current = self.get(i, j);
        self.set(i, j, current + value);
    }

    /// Accumulates another part's action into the band; columns are probed
    /// with unit vectors.
    pub fn accumulate(&mut self, part: &dyn LinearPart) {
        let n = self.n;
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            part.apply_into(&e, &mut col);
            e[j] = 0.0;
            let lo = j.saturating_sub(self.upper);
            let hi = (j + self.lower).min(n - 1);
            for (i, &v) in col.iter().enumerate().take(hi + 1).skip(lo) {
                if v != 0.0 {
                    self.add(i, j, v);
                }
            }
        }
    }
}

impl LinearPart for BandedPart {
    fn dim(&self) -> usize {
        self.n
    }

    fn kind(&self) -> PartKind {
        PartKind::Banded {
            lower: self.lower,
            upper: self.upper,
        }
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.lower);
            let hi = (i + self.upper).min(self.n - 1);
            let row = &self.band[self.slot(i, lo)..=self.slot(i, hi)];
            *o = dense::dot(row, &v[lo..=hi]);
        }
    }

    fn shifted_solve_in_place(&self, sigma: f64, rhs: &mut [f64]) -> Result<()> {
        if sigma == 0.0 {
            return Ok(());
        }
        let n = self.n;
        let mut m = self.clone();
        m.band.iter_mut().for_each(|x| *x *= -sigma);
        for i in 0..n {
            m.add(i, i, 1.0);
        }
        let scale = (0..n).map(|i| m.get(i, i).abs()).fold(0.0, f64::max);
        let tol = 1e-14 * scale;
        let (kl, w) = (self.lower, self.width());
        let a = &mut m.band;
        // Doolittle elimination inside the band; no fill outside it.
        // Entry (i, j) lives at i*w + j + kl - i.
        for k in 0..n {
            let p = a[k * w + kl];
            if p.abs() <= tol || p == 0.0 {
                return Err(SINGULAR);
            }
            let hi_row = (k + kl).min(n - 1);
            let len = (k + self.upper).min(n - 1) - k;
            for i in k + 1..=hi_row {
                let ik = i * w + k + kl - i;
                let f = a[ik] / p;
                if f == 0.0 {
                    continue;
                }
                a[ik] = f;
                let (head, tail) = a.split_at_mut(i * w);
                let pivot_row = &head[k * w + kl + 1..k * w + kl + 1 + len];
                let row = &mut tail[k + 1 + kl - i..k + 1 + kl - i + len];
                for (x, u) in row.iter_mut().zip(pivot_row) {
                    *x -= f * u;
                }
                rhs[i] -= f * rhs[k];
            }
        }
        for i in (0..n).rev() {
            let len = (i + self.upper).min(n - 1) - i;
            let row = &a[i * w + kl + 1..i * w + kl + 1 + len];
            let acc = rhs[i] - dense::dot(row, &rhs[i + 1..=i + len]);
            rhs[i] = acc / a[i * w + kl];
        }
        Ok(())
    }
}

/// Ordered list of parts sharing one dimension.
#[derive(Debug, Clone)]
pub struct AmfOperator {
    parts: Vec<Arc<dyn LinearPart>>,
    dim: usize,
}

impl AmfOperator {
    pub fn new(parts: Vec<Arc<dyn LinearPart>>) -> Result<Self> {
        let dim = match parts.first() {
            Some(p) => p.dim(),
            None => return Err(Error::invalid("AMF operator needs at least one part")),
        };
        if let Some(p) = parts.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.dim(),
            });
        }
        Ok(AmfOperator { parts, dim })
    }

    pub fn single(part: Arc<dyn LinearPart>) -> Self {
        let dim = part.dim();
        AmfOperator {
            parts: vec![part],
            dim,
        }
    }

    /// `L = 0` on `n`-vectors.
    pub fn zero(n: usize) -> Self {
        Self::single(Arc::new(DiagonalPart::zeros(n)))
    }

    pub fn dense(m: Matrix) -> Result<Self> {
        Ok(Self::single(Arc::new(DensePart::new(m)?)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn parts(&self) -> &[Arc<dyn LinearPart>] {
        &self.parts
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok(())
    }

    /// `Σ_r Lr v`
    pub fn sum_apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        let mut out = vec![0.0; self.dim];
        let mut tmp = vec![0.0; self.dim];
        for part in &self.parts {
            part.apply_into(v, &mut tmp);
            dense::axpy(1.0, &tmp, &mut out);
        }
        Ok(out)
    }

    /// `(I - σLR)⁻¹ ... (I - σL1)⁻¹ rhs`
    pub fn product_solve(&self, sigma: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        self.check(rhs)?;
        let mut x = rhs.to_vec();
        if sigma == 0.0 {
            return Ok(x);
        }
        for (r, part) in self.parts.iter().enumerate() {
            part.shifted_solve_in_place(sigma, &mut x)
                .map_err(|e| match e {
                    Error::SingularFactor { .. } => Error::SingularFactor { part: r },
                    other => other,
                })?;
        }
        Ok(x)
    }

    /// `L̃(σ) v` without forming `(v - Πv)/σ`.
    ///
    /// Runs the parts from last to first: `d ← d + Lk(v - σd)`. Then
    /// `v - σd = (I - σL1)...(I - σLR) v` at every σ, and `d = Lv` at σ = 0.
    pub fn tilde_apply(&self, sigma: f64, v: &[f64]) -> Result<Vec<f64>> {
        if sigma == 0.0 {
            return self.sum_apply(v);
        }
        self.check(v)?;
        let n = self.dim;
        let mut d = vec![0.0; n];
        let mut w = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        for part in self.parts.iter().rev() {
            for ((wi, vi), di) in w.iter_mut().zip(v).zip(&d) {
                *wi = vi - sigma * di;
            }
            part.apply_into(&w, &mut tmp);
            dense::axpy(1.0, &tmp, &mut d);
        }
        Ok(d)
    }

    pub fn sum_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.dim, self.dim);
        for p in &self.parts {
            m = m.add_scaled(1.0, &p.to_dense());
        }
        m
    }

    /// Dense `L̃(σ)`, column by column.
    pub fn tilde_dense(&self, sigma: f64) -> Result<Matrix> {
        let n = self.dim;
        let mut m = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.tilde_apply(sigma, &e)?;
            e[j] = 0.0;
            for (i, c) in col.iter().enumerate() {
                m[(i, j)] = *c;
            }
        }
        Ok(m)
    }
}

/// `Σ_k (-σ)^(k-1) Σ_{i1<...<ik} L_i1 ⋯ L_ik v` by enumerating all
/// non-empty index subsets of dense parts. Exponential in `R`; for tests.
pub fn subset_expansion(parts: &[Matrix], sigma: f64, v: &[f64]) -> Vec<f64> {
    let r = parts.len();
    let mut out = vec![0.0; v.len()];
    for mask in 1u32..(1u32 << r) {
        let mut w = v.to_vec();
        for k in (0..r).rev() {
            if mask & (1 << k) != 0 {
                w = parts[k].mul_vec(&w);
            }
        }
        let k = mask.count_ones() as i32;
        dense::axpy(libm::pow(-sigma, f64::from(k - 1)), &w, &mut out);
    }
    out
}
