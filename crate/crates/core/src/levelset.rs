//! Level-set interface tracking: upwind advection, geometric
//! reinitialization, region labels and interface geometry.
//!
//! `φ < 0` is medium 1 and `φ ≥ 0` medium 2; the normal `∇φ/|∇φ|` points from
//! medium 1 into medium 2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::state::InterfaceFrame;

pub const DEFAULT_BAND: usize = 4;

/// Spatial discretization of the advection step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Advection {
    /// First-order upwind, forward Euler.
    Upwind,
    /// Fifth-order WENO derivatives with third-order TVD Runge-Kutta.
    #[default]
    Weno5,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetField {
    pub grid: Grid,
    pub phi: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellLabel {
    Medium1,
    Medium2,
    /// Medium-1 cell inside the band; a ghost cell for medium 2.
    InterfaceAdjacent1,
    /// Medium-2 cell inside the band; a ghost cell for medium 1.
    InterfaceAdjacent2,
}

impl CellLabel {
    pub fn medium(self) -> u8 {
        match self {
            CellLabel::Medium1 | CellLabel::InterfaceAdjacent1 => 1,
            CellLabel::Medium2 | CellLabel::InterfaceAdjacent2 => 2,
        }
    }

    /// The medium for which this cell is a ghost cell, if any.
    pub fn ghost_for(self) -> Option<u8> {
        match self {
            CellLabel::InterfaceAdjacent1 => Some(2),
            CellLabel::InterfaceAdjacent2 => Some(1),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionMap {
    pub grid: Grid,
    pub labels: Vec<CellLabel>,
}

impl RegionMap {
    #[inline]
    pub fn label(&self, i: usize, j: usize) -> CellLabel {
        self.labels[self.grid.idx(i, j)]
    }

    /// Real cell of medium `k` or ghost cell of medium `k`.
    #[inline]
    pub fn is_active(&self, k: u8, idx: usize) -> bool {
        let l = self.labels[idx];
        l.medium() == k || l.ghost_for() == Some(k)
    }

    pub fn ghost_cells(&self, k: u8) -> impl Iterator<Item = usize> + '_ {
        self.labels.iter().enumerate().filter(move |(_, l)| l.ghost_for() == Some(k)).map(|(i, _)| i)
    }
}

/// A straight piece of the interpolated zero contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: (f64, f64),
    pub b: (f64, f64),
}

impl Segment {
    pub fn distance(&self, p: (f64, f64)) -> f64 {
        let (ex, ey) = (self.b.0 - self.a.0, self.b.1 - self.a.1);
        let (px, py) = (p.0 - self.a.0, p.1 - self.a.1);
        let len2 = ex * ex + ey * ey;
        let t = if len2 > 0.0 { ((px * ex + py * ey) / len2).clamp(0.0, 1.0) } else { 0.0 };
        (px - t * ex).hypot(py - t * ey)
    }
}

impl LevelSetField {
    pub fn new(grid: Grid, phi: Vec<f64>) -> Result<Self> {
        if phi.len() != grid.len() {
            return Err(Error::Internal(format!(
                "level set has {} values for a {}x{} grid",
                phi.len(),
                grid.nx,
                grid.ny
            )));
        }
        Ok(Self { grid, phi })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut phi = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                phi.push(f(grid.xc(i), grid.yc(j)));
            }
        }
        Self { grid, phi }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.phi[self.grid.idx(i, j)]
    }

    /// Value with mirror extension across the domain edges.
    #[inline]
    fn mirrored(&self, i: isize, j: isize) -> f64 {
        let ci = i.clamp(0, self.grid.nx as isize - 1) as usize;
        let cj = j.clamp(0, self.grid.ny as isize - 1) as usize;
        self.at(ci, cj)
    }

    /// Zero contour as segments on the dual grid of the mirror-extended field.
    pub fn zero_contour(&self) -> Vec<Segment> {
        let g = &self.grid;
        let xc = |i: isize| g.x0 + (i as f64 + 0.5) * g.dx;
        let yc = |j: isize| g.y0 + (j as f64 + 0.5) * g.dy;
        let mut segs = Vec::new();
        for j in -1..g.ny as isize {
            for i in -1..g.nx as isize {
                let corners = [
                    ((xc(i), yc(j)), self.mirrored(i, j)),
                    ((xc(i + 1), yc(j)), self.mirrored(i + 1, j)),
                    ((xc(i + 1), yc(j + 1)), self.mirrored(i + 1, j + 1)),
                    ((xc(i), yc(j + 1)), self.mirrored(i, j + 1)),
                ];
                let neg = corners.map(|c| c.1 < 0.0);
                if neg.iter().all(|&n| n) || neg.iter().all(|&n| !n) {
                    continue;
                }
                // Edge e joins corner e and corner e+1.
                let mut pts: [Option<(f64, f64)>; 4] = [None; 4];
                for e in 0..4 {
                    let (pa, fa) = corners[e];
                    let (pb, fb) = corners[(e + 1) % 4];
                    if neg[e] != neg[(e + 1) % 4] {
                        let t = fa / (fa - fb);
                        pts[e] = Some((pa.0 + t * (pb.0 - pa.0), pa.1 + t * (pb.1 - pa.1)));
                    }
                }
                let found: Vec<(usize, (f64, f64))> =
                    pts.iter().enumerate().filter_map(|(e, p)| p.map(|p| (e, p))).collect();
                match found.len() {
                    2 => segs.push(Segment { a: found[0].1, b: found[1].1 }),
                    4 => {
                        let centre = 0.25 * corners.iter().map(|c| c.1).sum::<f64>();
                        let p = |e: usize| pts[e].unwrap();
                        if (centre < 0.0) == neg[0] {
                            // Corner 0 connects to corner 2 through the centre.
                            segs.push(Segment { a: p(0), b: p(1) });
                            segs.push(Segment { a: p(2), b: p(3) });
                        } else {
                            segs.push(Segment { a: p(3), b: p(0) });
                            segs.push(Segment { a: p(1), b: p(2) });
                        }
                    }
                    _ => {}
                }
            }
        }
        segs
    }

    /// Replaces `φ` by the signed distance to its interpolated zero contour
    /// within `band + 2` cells; farther cells get `±(band + 2) h`.
    pub fn reinitialize(&self, band: usize) -> Result<LevelSetField> {
        let segs = self.zero_contour();
        if segs.is_empty() {
            return Err(Error::NoInterface);
        }
        let g = &self.grid;
        let reach = (band + 2) as f64 * g.h_max();
        let mut dist = vec![reach; g.len()];
        for s in &segs {
            let (lo_x, hi_x) = (s.a.0.min(s.b.0) - reach, s.a.0.max(s.b.0) + reach);
            let (lo_y, hi_y) = (s.a.1.min(s.b.1) - reach, s.a.1.max(s.b.1) + reach);
            let i0 = (((lo_x - g.x0) / g.dx).floor().max(0.0)) as usize;
            let i1 = ((((hi_x - g.x0) / g.dx).ceil()) as isize).clamp(0, g.nx as isize) as usize;
            let j0 = (((lo_y - g.y0) / g.dy).floor().max(0.0)) as usize;
            let j1 = ((((hi_y - g.y0) / g.dy).ceil()) as isize).clamp(0, g.ny as isize) as usize;
            for j in j0..j1 {
                for i in i0..i1 {
                    let k = g.idx(i, j);
                    let d = s.distance(g.center(i, j));
                    if d < dist[k] {
                        dist[k] = d;
                    }
                }
            }
        }
        let phi = self.phi.iter().zip(dist).map(|(&p, d)| if p < 0.0 { -d } else { d }).collect();
        Ok(LevelSetField { grid: self.grid, phi })
    }

    /// Weighted measure of `{φ < 0}` bounded by the interpolated zero contour,
    /// summed over the dual cells. `weight(x, y)` is applied at each piece's
    /// centroid.
    pub fn inside_measure(&self, weight: impl Fn(f64, f64) -> f64) -> f64 {
        let g = &self.grid;
        let xc = |i: isize| g.x0 + (i as f64 + 0.5) * g.dx;
        let yc = |j: isize| g.y0 + (j as f64 + 0.5) * g.dy;
        let mut total = 0.0;
        let mut poly: Vec<(f64, f64)> = Vec::with_capacity(8);
        for j in -1..g.ny as isize {
            for i in -1..g.nx as isize {
                let corners = [
                    ((xc(i), yc(j)), self.mirrored(i, j)),
                    ((xc(i + 1), yc(j)), self.mirrored(i + 1, j)),
                    ((xc(i + 1), yc(j + 1)), self.mirrored(i + 1, j + 1)),
                    ((xc(i), yc(j + 1)), self.mirrored(i, j + 1)),
                ];
                if corners.iter().all(|c| c.1 >= 0.0) {
                    continue;
                }
                poly.clear();
                for e in 0..4 {
                    let (pa, fa) = corners[e];
                    let (pb, fb) = corners[(e + 1) % 4];
                    if fa < 0.0 {
                        poly.push(pa);
                    }
                    if (fa < 0.0) != (fb < 0.0) {
                        let t = fa / (fa - fb);
                        poly.push((pa.0 + t * (pb.0 - pa.0), pa.1 + t * (pb.1 - pa.1)));
                    }
                }
                let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
                for k in 0..poly.len() {
                    let (p, q) = (poly[k], poly[(k + 1) % poly.len()]);
                    let c = p.0 * q.1 - q.0 * p.1;
                    a += c;
                    cx += (p.0 + q.0) * c;
                    cy += (p.1 + q.1) * c;
                }
                if a.abs() > 0.0 {
                    total += 0.5 * a.abs() * weight(cx / (3.0 * a), cy / (3.0 * a));
                }
            }
        }
        total
    }

    /// [`reinitialize`](Self::reinitialize) followed by the uniform shift of
    /// `φ` that restores the weighted measure of `{φ < 0}`.
    pub fn reinitialize_conserving(&self, band: usize, weight: impl Fn(f64, f64) -> f64) -> Result<LevelSetField> {
        let target = self.inside_measure(&weight);
        let base = self.reinitialize(band)?;
        let h = self.grid.h_max();
        let measure = |c: f64| {
            let shifted = LevelSetField { grid: self.grid, phi: base.phi.iter().map(|p| p + c).collect() };
            shifted.inside_measure(&weight)
        };
        // The measure decreases with the shift.
        let (mut lo, mut hi) = (-0.5 * h, 0.5 * h);
        if measure(lo) < target {
            hi = lo;
        } else if measure(hi) > target {
            lo = hi;
        } else {
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if measure(mid) > target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        let c = 0.5 * (lo + hi);
        Ok(LevelSetField { grid: self.grid, phi: base.phi.iter().map(|p| p + c).collect() })
    }

    /// One forward-Euler step of first-order upwind advection.
    pub fn advect(&self, velocity: &[(f64, f64)], dt: f64) -> Result<LevelSetField> {
        self.advect_with(velocity, dt, Advection::Upwind)
    }

    /// One step of `φ_t + V·∇φ = 0` with the velocity frozen at its given
    /// values.
    pub fn advect_with(&self, velocity: &[(f64, f64)], dt: f64, scheme: Advection) -> Result<LevelSetField> {
        let g = &self.grid;
        if velocity.len() != g.len() {
            return Err(Error::Internal("velocity field size mismatch".into()));
        }
        let mut courant: f64 = 0.0;
        for &(u, v) in velocity {
            courant = courant.max(u.abs() * dt / g.dx + v.abs() * dt / g.dy);
        }
        if !(courant <= 1.0) {
            return Err(Error::Cfl { dt, courant });
        }
        let rate = |phi: &[f64]| -> Vec<f64> {
            (0..g.len())
                .map(|k| {
                    let (u, v) = velocity[k];
                    if u == 0.0 && v == 0.0 {
                        return 0.0;
                    }
                    let (i, j) = ((k % g.nx) as isize, (k / g.nx) as isize);
                    let (px, py) = match scheme {
                        Advection::Upwind => (
                            upwind1(u, |m| line_x(g, phi, i + m, j), g.dx),
                            upwind1(v, |m| line_y(g, phi, i, j + m), g.dy),
                        ),
                        Advection::Weno5 => (
                            weno_upwind(u, |m| line_x(g, phi, i + m, j), g.dx),
                            weno_upwind(v, |m| line_y(g, phi, i, j + m), g.dy),
                        ),
                    };
                    -(u * px + v * py)
                })
                .collect()
        };
        let phi = match scheme {
            Advection::Upwind => {
                let l = rate(&self.phi);
                self.phi.iter().zip(&l).map(|(p, r)| p + dt * r).collect()
            }
            Advection::Weno5 => {
                let l0 = rate(&self.phi);
                let p1: Vec<f64> = self.phi.iter().zip(&l0).map(|(p, r)| p + dt * r).collect();
                let l1 = rate(&p1);
                let p2: Vec<f64> = (0..g.len()).map(|k| 0.75 * self.phi[k] + 0.25 * (p1[k] + dt * l1[k])).collect();
                let l2 = rate(&p2);
                (0..g.len()).map(|k| self.phi[k] / 3.0 + 2.0 / 3.0 * (p2[k] + dt * l2[k])).collect()
            }
        };
        Ok(LevelSetField { grid: self.grid, phi })
    }

    /// Labels every cell; cells with `|φ| ≤ band · max(dx, dy)` become
    /// interface-adjacent.
    pub fn classify(&self, band: usize) -> RegionMap {
        let width = band as f64 * self.grid.h_max();
        let labels = self
            .phi
            .iter()
            .map(|&p| match (p < 0.0, p.abs() <= width) {
                (true, false) => CellLabel::Medium1,
                (true, true) => CellLabel::InterfaceAdjacent1,
                (false, false) => CellLabel::Medium2,
                (false, true) => CellLabel::InterfaceAdjacent2,
            })
            .collect();
        RegionMap { grid: self.grid, labels }
    }

    /// `∇φ` by central differences, one-sided on the domain edges.
    pub fn gradient(&self, i: usize, j: usize) -> (f64, f64) {
        let g = &self.grid;
        let gx = if g.nx < 2 {
            0.0
        } else if i == 0 {
            (self.at(1, j) - self.at(0, j)) / g.dx
        } else if i == g.nx - 1 {
            (self.at(i, j) - self.at(i - 1, j)) / g.dx
        } else {
            (self.at(i + 1, j) - self.at(i - 1, j)) / (2.0 * g.dx)
        };
        let gy = if g.ny < 2 {
            0.0
        } else if j == 0 {
            (self.at(i, 1) - self.at(i, 0)) / g.dy
        } else if j == g.ny - 1 {
            (self.at(i, j) - self.at(i, j - 1)) / g.dy
        } else {
            (self.at(i, j + 1) - self.at(i, j - 1)) / (2.0 * g.dy)
        };
        (gx, gy)
    }

    /// Foot point `x - φ n` on the interface and the local frame.
    pub fn interface_geometry(&self, i: usize, j: usize) -> Result<((f64, f64), InterfaceFrame)> {
        let (gx, gy) = self.gradient(i, j);
        let norm = gx.hypot(gy);
        if !(norm >= 1e-8) {
            return Err(Error::DegenerateGradient { i, j });
        }
        let frame = InterfaceFrame::from_normal(gx / norm, gy / norm)?;
        let phi = self.at(i, j);
        let (x, y) = self.grid.center(i, j);
        Ok(((x - phi * frame.nx, y - phi * frame.ny), frame))
    }

    /// Zero crossings found by linear interpolation along grid rows and
    /// columns, as `(row-or-column flag, line index, coordinate)`.
    pub fn crossings(&self) -> Vec<(bool, usize, f64)> {
        let g = &self.grid;
        let mut out = Vec::new();
        for j in 0..g.ny {
            for i in 0..g.nx.saturating_sub(1) {
                let (a, b) = (self.at(i, j), self.at(i + 1, j));
                if (a < 0.0) != (b < 0.0) {
                    out.push((true, j, g.xc(i) + a / (a - b) * g.dx));
                }
            }
        }
        for i in 0..g.nx {
            for j in 0..g.ny.saturating_sub(1) {
                let (a, b) = (self.at(i, j), self.at(i, j + 1));
                if (a < 0.0) != (b < 0.0) {
                    out.push((false, i, g.yc(j) + a / (a - b) * g.dy));
                }
            }
        }
        out
    }
}

/// `φ(i, j)` with linear extrapolation past the left and right edges.
fn line_x(g: &Grid, phi: &[f64], i: isize, j: isize) -> f64 {
    let n = g.nx as isize;
    let at = |i: isize| phi[g.idx(i as usize, j as usize)];
    if n < 2 {
        at(0)
    } else if i < 0 {
        at(0) + i as f64 * (at(1) - at(0))
    } else if i >= n {
        at(n - 1) + (i - n + 1) as f64 * (at(n - 1) - at(n - 2))
    } else {
        at(i)
    }
}

/// `φ(i, j)` with linear extrapolation past the bottom and top edges.
fn line_y(g: &Grid, phi: &[f64], i: isize, j: isize) -> f64 {
    let n = g.ny as isize;
    let at = |j: isize| phi[g.idx(i as usize, j as usize)];
    if n < 2 {
        at(0)
    } else if j < 0 {
        at(0) + j as f64 * (at(1) - at(0))
    } else if j >= n {
        at(n - 1) + (j - n + 1) as f64 * (at(n - 1) - at(n - 2))
    } else {
        at(j)
    }
}

fn upwind1(a: f64, f: impl Fn(isize) -> f64, h: f64) -> f64 {
    if a > 0.0 {
        (f(0) - f(-1)) / h
    } else {
        (f(1) - f(0)) / h
    }
}

/// Upwind-biased fifth-order WENO derivative along one line.
fn weno_upwind(a: f64, f: impl Fn(isize) -> f64, h: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let d = |m: isize| (f(m + 1) - f(m)) / h;
    if a > 0.0 {
        weno5([d(-3), d(-2), d(-1), d(0), d(1)])
    } else {
        weno5([d(2), d(1), d(0), d(-1), d(-2)])
    }
}

fn weno5(v: [f64; 5]) -> f64 {
    let p1 = v[0] / 3.0 - 7.0 * v[1] / 6.0 + 11.0 * v[2] / 6.0;
    let p2 = -v[1] / 6.0 + 5.0 * v[2] / 6.0 + v[3] / 3.0;
    let p3 = v[2] / 3.0 + 5.0 * v[3] / 6.0 - v[4] / 6.0;
    let s1 = 13.0 / 12.0 * (v[0] - 2.0 * v[1] + v[2]).powi(2) + 0.25 * (v[0] - 4.0 * v[1] + 3.0 * v[2]).powi(2);
    let s2 = 13.0 / 12.0 * (v[1] - 2.0 * v[2] + v[3]).powi(2) + 0.25 * (v[1] - v[3]).powi(2);
    let s3 = 13.0 / 12.0 * (v[2] - 2.0 * v[3] + v[4]).powi(2) + 0.25 * (3.0 * v[2] - 4.0 * v[3] + v[4]).powi(2);
    let eps = 1e-6 * v.iter().fold(0.0f64, |m, x| m.max(x * x)) + 1e-99;
    let a1 = 0.1 / (s1 + eps).powi(2);
    let a2 = 0.6 / (s2 + eps).powi(2);
    let a3 = 0.3 / (s3 + eps).powi(2);
    (a1 * p1 + a2 * p2 + a3 * p3) / (a1 + a2 + a3)
}
