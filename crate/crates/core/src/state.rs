//! Pointwise fluid states and the grid/interface frame rotation.

use serde::{Deserialize, Serialize};

use crate::eos::MaterialEos;
use crate::error::{Error, Result};

/// `(ρ, u_x, u_y, p)`. In a rotated frame `ux` holds the normal and `uy` the
/// tangential component.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Primitive {
    pub rho: f64,
    pub ux: f64,
    pub uy: f64,
    pub p: f64,
}

/// `(ρ, ρu_x, ρu_y, E)` with `E` the total energy per unit volume.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Conserved {
    pub rho: f64,
    pub mx: f64,
    pub my: f64,
    pub e: f64,
}

impl Primitive {
    pub const fn new(rho: f64, ux: f64, uy: f64, p: f64) -> Self {
        Self { rho, ux, uy, p }
    }

    #[inline]
    pub fn to_array(self) -> [f64; 4] {
        [self.rho, self.ux, self.uy, self.p]
    }

    #[inline]
    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    /// `self + s * d` componentwise.
    #[inline]
    pub fn axpy(self, s: f64, d: [f64; 4]) -> Self {
        Self::new(self.rho + s * d[0], self.ux + s * d[1], self.uy + s * d[2], self.p + s * d[3])
    }

    #[inline]
    pub fn speed(&self) -> f64 {
        self.ux.hypot(self.uy)
    }

    pub fn is_finite(&self) -> bool {
        self.rho.is_finite() && self.ux.is_finite() && self.uy.is_finite() && self.p.is_finite()
    }

    pub fn to_conserved(&self, eos: &MaterialEos) -> Result<Conserved> {
        let e = eos.specific_internal_energy(self.rho, self.p)?;
        let ke = 0.5 * self.rho * (self.ux * self.ux + self.uy * self.uy);
        Ok(Conserved { rho: self.rho, mx: self.rho * self.ux, my: self.rho * self.uy, e: self.rho * e + ke })
    }

    pub fn rotate(&self, frame: &InterfaceFrame, dir: Direction) -> Primitive {
        let (a, b) = frame.rotate_vec(self.ux, self.uy, dir);
        Primitive::new(self.rho, a, b, self.p)
    }
}

impl Conserved {
    pub const fn new(rho: f64, mx: f64, my: f64, e: f64) -> Self {
        Self { rho, mx, my, e }
    }

    #[inline]
    pub fn to_array(self) -> [f64; 4] {
        [self.rho, self.mx, self.my, self.e]
    }

    #[inline]
    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_primitive(&self, eos: &MaterialEos) -> Result<Primitive> {
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::domain(format!("non-positive density {}", self.rho)));
        }
        let ux = self.mx / self.rho;
        let uy = self.my / self.rho;
        let internal = self.e - 0.5 * (self.mx * ux + self.my * uy);
        if !(internal > 0.0) {
            return Err(Error::domain(format!("non-positive internal energy {internal} (rho = {})", self.rho)));
        }
        let p = eos.pressure_from_energy(self.rho, internal / self.rho)?;
        Ok(Primitive::new(self.rho, ux, uy, p))
    }
}

pub fn prim_to_cons(w: &Primitive, eos: &MaterialEos) -> Result<Conserved> {
    w.to_conserved(eos)
}

pub fn cons_to_prim(u: &Conserved, eos: &MaterialEos) -> Result<Primitive> {
    u.to_primitive(eos)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    IntoFrame,
    OutOfFrame,
}

/// Orthonormal frame with normal `n` and tangent `t = (-n_y, n_x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceFrame {
    pub nx: f64,
    pub ny: f64,
    pub tx: f64,
    pub ty: f64,
}

impl InterfaceFrame {
    pub fn from_normal(nx: f64, ny: f64) -> Result<Self> {
        let norm = nx.hypot(ny);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::domain(format!("degenerate normal ({nx}, {ny})")));
        }
        let (nx, ny) = (nx / norm, ny / norm);
        Ok(Self { nx, ny, tx: -ny, ty: nx })
    }

    pub const X: InterfaceFrame = InterfaceFrame { nx: 1.0, ny: 0.0, tx: 0.0, ty: 1.0 };
    pub const Y: InterfaceFrame = InterfaceFrame { nx: 0.0, ny: 1.0, tx: -1.0, ty: 0.0 };

    /// Rotates a vector (or a gradient pair) between grid and frame components.
    #[inline]
    pub fn rotate_vec(&self, a: f64, b: f64, dir: Direction) -> (f64, f64) {
        match dir {
            Direction::IntoFrame => (a * self.nx + b * self.ny, a * self.tx + b * self.ty),
            Direction::OutOfFrame => (a * self.nx + b * self.tx, a * self.ny + b * self.ty),
        }
    }
}

pub fn rotate(w: &Primitive, frame: &InterfaceFrame, dir: Direction) -> Primitive {
    w.rotate(frame, dir)
}

/// Cartesian gradients of `(ρ, u_x, u_y, p)` to frame derivatives
/// `(∂/∂ξ, ∂/∂η)` of `(ρ, u_ξ, u_η, p)`.
pub fn frame_gradients(gx: [f64; 4], gy: [f64; 4], f: &InterfaceFrame) -> ([f64; 4], [f64; 4]) {
    let mut dxi = [0.0; 4];
    let mut deta = [0.0; 4];
    for k in 0..4 {
        dxi[k] = f.nx * gx[k] + f.ny * gy[k];
        deta[k] = f.tx * gx[k] + f.ty * gy[k];
    }
    for d in [&mut dxi, &mut deta] {
        let (a, b) = f.rotate_vec(d[1], d[2], Direction::IntoFrame);
        d[1] = a;
        d[2] = b;
    }
    (dxi, deta)
}

/// Inverse of [`frame_gradients`].
pub fn cartesian_gradients(dxi: [f64; 4], deta: [f64; 4], f: &InterfaceFrame) -> ([f64; 4], [f64; 4]) {
    let mut a = dxi;
    let mut b = deta;
    for d in [&mut a, &mut b] {
        let (x, y) = f.rotate_vec(d[1], d[2], Direction::OutOfFrame);
        d[1] = x;
        d[2] = y;
    }
    let mut gx = [0.0; 4];
    let mut gy = [0.0; 4];
    for k in 0..4 {
        gx[k] = f.nx * a[k] + f.tx * b[k];
        gy[k] = f.ny * a[k] + f.ty * b[k];
    }
    (gx, gy)
}
