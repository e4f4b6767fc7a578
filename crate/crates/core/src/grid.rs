use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform cell-centred grid over `[x0, x0 + nx dx] × [y0, y0 + ny dy]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, x: (f64, f64), y: (f64, f64)) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Scenario(format!("empty grid {nx}x{ny}")));
        }
        if !(x.1 > x.0) || !(y.1 > y.0) {
            return Err(Error::Scenario(format!("degenerate domain {x:?} x {y:?}")));
        }
        Ok(Self { nx, ny, x0: x.0, y0: y.0, dx: (x.1 - x.0) / nx as f64, dy: (y.1 - y.0) / ny as f64 })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn xc(&self, i: usize) -> f64 {
        self.x0 + (i as f64 + 0.5) * self.dx
    }

    #[inline]
    pub fn yc(&self, j: usize) -> f64 {
        self.y0 + (j as f64 + 0.5) * self.dy
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        (self.xc(i), self.yc(j))
    }

    pub fn x1(&self) -> f64 {
        self.x0 + self.nx as f64 * self.dx
    }

    pub fn y1(&self) -> f64 {
        self.y0 + self.ny as f64 * self.dy
    }

    pub fn h_max(&self) -> f64 {
        self.dx.max(self.dy)
    }

    pub fn h_min(&self) -> f64 {
        self.dx.min(self.dy)
    }
}
