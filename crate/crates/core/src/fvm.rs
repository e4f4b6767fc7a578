//! Unsplit second-order finite-volume update for one medium on a structured
//! grid, with Riemann (RP) or generalized Riemann (GRP) face fluxes.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::eos::MaterialEos;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::grp::{self, GrpCase, Slope};
use crate::riemann::{self, RiemannInput};
use crate::state::{frame_gradients, Conserved, Direction, InterfaceFrame, Primitive};

/// Halo width in cells.
pub const HALO: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FluxMode {
    Rp,
    Grp,
}

impl fmt::Display for FluxMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FluxMode::Rp => "rp",
            FluxMode::Grp => "grp",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Limiter {
    #[default]
    Minmod,
    VanLeer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BcKind {
    Wall,
    /// Moving wall; the value is the grid-frame velocity component normal to
    /// the edge.
    Piston(f64),
    Outflow,
    /// Symmetry axis `r = 0`, reflective.
    Axis,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Boundaries {
    pub left: BcKind,
    pub right: BcKind,
    pub bottom: BcKind,
    pub top: BcKind,
}

impl Boundaries {
    pub const fn uniform(kind: BcKind) -> Self {
        Self { left: kind, right: kind, bottom: kind, top: kind }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Geometry {
    Planar,
    /// The given grid axis is the radius `r`.
    Axisymmetric(Axis),
}

/// Per-cell participation in a medium's update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Inactive,
    Real,
    Ghost,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub flux_mode: FluxMode,
    pub limiter: Limiter,
    pub geometry: Geometry,
    pub k_acoustic: f64,
    /// Time at the start of the step, for error context.
    pub t: f64,
}

impl Default for StepParams {
    fn default() -> Self {
        Self {
            flux_mode: FluxMode::Grp,
            limiter: Limiter::Minmod,
            geometry: Geometry::Planar,
            k_acoustic: grp::DEFAULT_K_ACOUSTIC,
            t: 0.0,
        }
    }
}

/// Cell averages of one medium.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub grid: Grid,
    pub eos: MaterialEos,
    pub cells: Vec<Conserved>,
}

impl FieldGrid {
    pub fn from_primitive(grid: Grid, eos: MaterialEos, f: impl Fn(f64, f64) -> Primitive) -> Result<Self> {
        let mut cells = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                cells.push(f(grid.xc(i), grid.yc(j)).to_conserved(&eos)?);
            }
        }
        Ok(Self { grid, eos, cells })
    }

    pub fn primitive(&self, k: usize) -> Result<Primitive> {
        self.cells[k].to_primitive(&self.eos)
    }

    pub fn total_mass(&self) -> f64 {
        self.cells.iter().map(|c| c.rho).sum::<f64>() * self.grid.dx * self.grid.dy
    }
}

/// Per-cell limited slopes over the padded grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeField {
    pub sx: Vec<Slope>,
    pub sy: Vec<Slope>,
}

/// Primitive states on the grid plus a halo of [`HALO`] cells.
#[derive(Debug, Clone)]
pub struct Padded {
    pub nx: usize,
    pub ny: usize,
    pub w: Vec<Primitive>,
    pub active: Vec<bool>,
}

impl Padded {
    #[inline]
    pub fn idx(&self, i: isize, j: isize) -> usize {
        let pi = (i + HALO as isize) as usize;
        let pj = (j + HALO as isize) as usize;
        pj * (self.nx + 2 * HALO) + pi
    }

    #[inline]
    pub fn at(&self, i: isize, j: isize) -> &Primitive {
        &self.w[self.idx(i, j)]
    }

    #[inline]
    pub fn is_active(&self, i: isize, j: isize) -> bool {
        self.active[self.idx(i, j)]
    }

    /// Interior states from the field; halo left for [`apply_bc`].
    pub fn from_field(field: &FieldGrid, roles: Option<&[Role]>) -> Result<Self> {
        let (nx, ny) = (field.grid.nx, field.grid.ny);
        let n = (nx + 2 * HALO) * (ny + 2 * HALO);
        let mut out = Padded { nx, ny, w: vec![Primitive::default(); n], active: vec![false; n] };
        for j in 0..ny {
            for i in 0..nx {
                let k = field.grid.idx(i, j);
                let on = roles.is_none_or(|r| r[k] != Role::Inactive);
                let p = out.idx(i as isize, j as isize);
                out.active[p] = on;
                if on {
                    out.w[p] = field.cells[k].to_primitive(&field.eos).map_err(|e| Error::Cell {
                        i,
                        j,
                        t: f64::NAN,
                        mode: "reconstruction".into(),
                        source: Box::new(e),
                    })?;
                }
            }
        }
        Ok(out)
    }
}

fn ghost_from(kind: BcKind, w: Primitive, normal_x: bool) -> Primitive {
    let mut g = w;
    let flip = |v: f64| -v;
    match kind {
        BcKind::Wall | BcKind::Axis => {
            if normal_x {
                g.ux = flip(g.ux)
            } else {
                g.uy = flip(g.uy)
            }
        }
        BcKind::Piston(up) => {
            if normal_x {
                g.ux = 2.0 * up - g.ux
            } else {
                g.uy = 2.0 * up - g.uy
            }
        }
        BcKind::Outflow | BcKind::Periodic => {}
    }
    g
}

/// Fills the halo: walls, axes and pistons mirror, outflow copies the edge
/// cell, periodic wraps.
pub fn apply_bc(pad: &mut Padded, bc: &Boundaries) {
    let (nx, ny) = (pad.nx as isize, pad.ny as isize);
    let h = HALO as isize;
    for j in 0..ny {
        for g in 1..=h {
            for (kind, ghost, src_mirror, src_wrap, src_edge) in
                [(bc.left, -g, g - 1, nx - g, 0), (bc.right, nx - 1 + g, nx - g, g - 1, nx - 1)]
            {
                let src = match kind {
                    BcKind::Periodic => src_wrap,
                    BcKind::Outflow => src_edge,
                    _ => src_mirror,
                };
                let (w, a) = (*pad.at(src, j), pad.is_active(src, j));
                let d = pad.idx(ghost, j);
                pad.w[d] = ghost_from(kind, w, true);
                pad.active[d] = a;
            }
        }
    }
    for i in -h..nx + h {
        for g in 1..=h {
            for (kind, ghost, src_mirror, src_wrap, src_edge) in
                [(bc.bottom, -g, g - 1, ny - g, 0), (bc.top, ny - 1 + g, ny - g, g - 1, ny - 1)]
            {
                let src = match kind {
                    BcKind::Periodic => src_wrap,
                    BcKind::Outflow => src_edge,
                    _ => src_mirror,
                };
                let (w, a) = (*pad.at(i, src), pad.is_active(i, src));
                let d = pad.idx(i, ghost);
                pad.w[d] = ghost_from(kind, w, false);
                pad.active[d] = a;
            }
        }
    }
}

#[inline]
fn minmod3(a: f64, b: f64, c: f64) -> f64 {
    if a > 0.0 && b > 0.0 && c > 0.0 {
        a.min(b).min(c)
    } else if a < 0.0 && b < 0.0 && c < 0.0 {
        a.max(b).max(c)
    } else {
        0.0
    }
}

#[inline]
fn van_leer(a: f64, b: f64) -> f64 {
    if a * b > 0.0 {
        2.0 * a * b / (a + b)
    } else {
        0.0
    }
}

#[inline]
pub fn limited_slope(limiter: Limiter, back: f64, fwd: f64) -> f64 {
    match limiter {
        Limiter::Minmod => minmod3(back, fwd, 0.5 * (back + fwd)),
        Limiter::VanLeer => van_leer(back, fwd),
    }
}

/// Limited primitive slopes; a cell whose reconstructed face values leave the
/// admissible set gets zero slopes.
pub fn reconstruct_slopes(pad: &Padded, grid: &Grid, eos: &MaterialEos, limiter: Limiter) -> SlopeField {
    let n = pad.w.len();
    let mut sx = vec![[0.0; 4]; n];
    let mut sy = vec![[0.0; 4]; n];
    let h = HALO as isize;
    let (nx, ny) = (pad.nx as isize, pad.ny as isize);
    for j in -h..ny + h {
        for i in -h..nx + h {
            let c = pad.idx(i, j);
            if !pad.active[c] {
                continue;
            }
            let w = pad.w[c].to_array();
            let mut gx = [0.0; 4];
            let mut gy = [0.0; 4];
            if i > -h && i < nx + h - 1 && pad.is_active(i - 1, j) && pad.is_active(i + 1, j) {
                let a = pad.at(i - 1, j).to_array();
                let b = pad.at(i + 1, j).to_array();
                for k in 0..4 {
                    gx[k] = limited_slope(limiter, w[k] - a[k], b[k] - w[k]) / grid.dx;
                }
            }
            if j > -h && j < ny + h - 1 && pad.is_active(i, j - 1) && pad.is_active(i, j + 1) {
                let a = pad.at(i, j - 1).to_array();
                let b = pad.at(i, j + 1).to_array();
                for k in 0..4 {
                    gy[k] = limited_slope(limiter, w[k] - a[k], b[k] - w[k]) / grid.dy;
                }
            }
            let wp = pad.w[c];
            let ok = [(&gx, 0.5 * grid.dx), (&gy, 0.5 * grid.dy)].iter().all(|(g, hh)| {
                [1.0, -1.0].iter().all(|s| {
                    let q = wp.axpy(s * hh, **g);
                    eos.is_admissible(q.rho, q.p)
                })
            });
            if ok {
                sx[c] = gx;
                sy[c] = gy;
            }
        }
    }
    SlopeField { sx, sy }
}

/// `-(u_r/r) [ρ, ρu_x, ρu_y, E + p]` for the radial velocity `u_r`.
pub fn axisymmetric_source(r: f64, w: &Primitive, eos: &MaterialEos, radial: Axis) -> Result<[f64; 4]> {
    if !(r > 0.0) {
        return Err(Error::domain(format!("source evaluated at r = {r}")));
    }
    let ur = match radial {
        Axis::X => w.ux,
        Axis::Y => w.uy,
    };
    source_with_ratio(ur / r, w, eos)
}

fn source_with_ratio(ratio: f64, w: &Primitive, eos: &MaterialEos) -> Result<[f64; 4]> {
    if ratio == 0.0 {
        return Ok([0.0; 4]);
    }
    let u = w.to_conserved(eos)?;
    Ok([-ratio * u.rho, -ratio * u.mx, -ratio * u.my, -ratio * (u.e + w.p)])
}

/// Primitive-variable form of the axisymmetric source, `(-ρ u_r/r, 0, 0, -ρc² u_r/r)`.
fn primitive_source_with_ratio(ratio: f64, w: &Primitive, eos: &MaterialEos) -> [f64; 4] {
    if ratio == 0.0 {
        return [0.0; 4];
    }
    let c2 = eos.gamma * (w.p + eos.p_inf) / w.rho;
    [-ratio * w.rho, 0.0, 0.0, -ratio * w.rho * c2]
}

/// Largest `|V| + c` over the cells selected by `roles`.
pub fn max_signal_speed(field: &FieldGrid, roles: Option<&[Role]>) -> Result<f64> {
    let mut s: f64 = 0.0;
    for (k, c) in field.cells.iter().enumerate() {
        if roles.is_some_and(|r| r[k] == Role::Inactive) {
            continue;
        }
        let w = c.to_primitive(&field.eos)?;
        let v = w.speed() + field.eos.sound_speed(w.rho, w.p)?;
        if !v.is_finite() {
            return Err(Error::domain(format!("non-finite signal speed in cell {k}")));
        }
        s = s.max(v);
    }
    Ok(s)
}

/// `cfl · min(dx, dy) / max(|V| + c)`.
pub fn compute_dt(grid: &Grid, max_speed: f64, cfl: f64) -> Result<f64> {
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::Scenario(format!("cfl must lie in (0, 1] (got {cfl})")));
    }
    if !(max_speed > 0.0) || !max_speed.is_finite() {
        return Err(Error::domain(format!("invalid maximum signal speed {max_speed}")));
    }
    Ok(cfl * grid.h_min() / max_speed)
}

/// Face-level diagnostics from one step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub acoustic_faces: usize,
    pub nonlinear_faces: usize,
    /// Ghost cells left at their old value because their update failed.
    pub ghost_failures: usize,
}

impl std::ops::AddAssign for StepStats {
    fn add_assign(&mut self, o: Self) {
        self.acoustic_faces += o.acoustic_faces;
        self.nonlinear_faces += o.nonlinear_faces;
        self.ghost_failures += o.ghost_failures;
    }
}

#[derive(Clone, Copy)]
struct FaceResult {
    flux: [f64; 4],
    /// Cartesian face state used for the source quadrature.
    state: Primitive,
}

struct FaceCtx<'a> {
    pad: &'a Padded,
    slopes: &'a SlopeField,
    grid: &'a Grid,
    eos: &'a MaterialEos,
    params: &'a StepParams,
    dt: f64,
}

impl FaceCtx<'_> {
    /// Radius of a face centre, and whether the face lies on `r = 0`.
    fn face_radius(&self, along_x: bool, i: isize, j: isize) -> Option<f64> {
        let g = self.grid;
        match self.params.geometry {
            Geometry::Planar => None,
            Geometry::Axisymmetric(Axis::X) => {
                Some(if along_x { g.x0 + (i + 1) as f64 * g.dx } else { g.x0 + (i as f64 + 0.5) * g.dx })
            }
            Geometry::Axisymmetric(Axis::Y) => {
                Some(if along_x { g.y0 + (j as f64 + 0.5) * g.dy } else { g.y0 + (j + 1) as f64 * g.dy })
            }
        }
    }

    /// `u_r / r` at a face; on the axis the adjacent interior cell's ratio.
    fn radial_ratio(&self, r: f64, w: &Primitive, along_x: bool, i: isize, j: isize) -> f64 {
        let radial = match self.params.geometry {
            Geometry::Planar => return 0.0,
            Geometry::Axisymmetric(a) => a,
        };
        let pick = |w: &Primitive| match radial {
            Axis::X => w.ux,
            Axis::Y => w.uy,
        };
        let tol = 1e-12 * self.grid.h_max();
        if r > tol {
            return pick(w) / r;
        }
        // Face on the axis: use the first interior cell beyond it.
        let (ci, cj) = if along_x { (i + 1, j) } else { (i, j + 1) };
        let rc = match radial {
            Axis::X => self.grid.x0 + (ci as f64 + 0.5) * self.grid.dx,
            Axis::Y => self.grid.y0 + (cj as f64 + 0.5) * self.grid.dy,
        };
        pick(self.pad.at(ci, cj)) / rc
    }

    /// Flux through the face between cell `(i, j)` and its `+x` or `+y`
    /// neighbour, in grid components.
    fn flux(&self, along_x: bool, i: isize, j: isize) -> Result<(FaceResult, Option<GrpCase>)> {
        let (ni, nj) = if along_x { (i + 1, j) } else { (i, j + 1) };
        let (a, b) = (self.pad.idx(i, j), self.pad.idx(ni, nj));
        let frame = if along_x { InterfaceFrame::X } else { InterfaceFrame::Y };
        let (h, sa, sb) = if along_x {
            (self.grid.dx, self.slopes.sx[a], self.slopes.sx[b])
        } else {
            (self.grid.dy, self.slopes.sy[a], self.slopes.sy[b])
        };
        let wl = self.pad.w[a].axpy(0.5 * h, sa);
        let wr = self.pad.w[b].axpy(-0.5 * h, sb);
        let input = RiemannInput::single(
            wl.rotate(&frame, Direction::IntoFrame),
            wr.rotate(&frame, Direction::IntoFrame),
            *self.eos,
        );
        let r = self.face_radius(along_x, i, j);
        let (flux_f, state_f, case) = match self.params.flux_mode {
            FluxMode::Rp => {
                let star = riemann::solve_star(&input)?;
                let (w, _) = riemann::sample_region(&input, &star, 0.0);
                (riemann::euler_flux(&w, self.eos)?, w, None)
            }
            FluxMode::Grp => {
                let (nl, tl) = frame_gradients(self.slopes.sx[a], self.slopes.sy[a], &frame);
                let (nr, tr) = frame_gradients(self.slopes.sx[b], self.slopes.sy[b], &frame);
                let (src_l, src_r) = match r {
                    Some(r) => (
                        primitive_source_with_ratio(self.radial_ratio(r, &wl, along_x, i, j), &wl, self.eos),
                        primitive_source_with_ratio(self.radial_ratio(r, &wr, along_x, i, j), &wr, self.eos),
                    ),
                    None => ([0.0; 4], [0.0; 4]),
                };
                let res_l = grp::tangential_residual(&input.left, self.eos, &tl, &src_l)?;
                let res_r = grp::tangential_residual(&input.right, self.eos, &tr, &src_r)?;
                let hterm = grp::h_term_at_mean(&input, &res_l, &res_r)?;
                let face = grp::interface_flux_grp(&input, &nl, &nr, &hterm, self.dt, h, self.params.k_acoustic)?;
                (face.flux, face.mid, Some(face.case))
            }
        };
        let (mx, my) = frame.rotate_vec(flux_f[1], flux_f[2], Direction::OutOfFrame);
        let state = state_f.rotate(&frame, Direction::OutOfFrame);
        Ok((FaceResult { flux: [flux_f[0], mx, my, flux_f[3]], state }, case))
    }
}

/// Advances one medium by `dt`. Cells with `Role::Inactive` are untouched;
/// a ghost cell whose stencil is incomplete keeps its old value.
pub fn step_single_medium(
    field: &FieldGrid,
    roles: Option<&[Role]>,
    bc: &Boundaries,
    params: &StepParams,
    dt: f64,
) -> Result<(FieldGrid, StepStats)> {
    let grid = &field.grid;
    let mut pad = Padded::from_field(field, roles)?;
    apply_bc(&mut pad, bc);
    let slopes = reconstruct_slopes(&pad, grid, &field.eos, params.limiter);
    let ctx = FaceCtx { pad: &pad, slopes: &slopes, grid, eos: &field.eos, params, dt };
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    let role = |i: isize, j: isize| -> Role {
        if i < 0 || j < 0 || i >= nx || j >= ny {
            return Role::Ghost;
        }
        roles.map_or(Role::Real, |r| r[grid.idx(i as usize, j as usize)])
    };
    let mode = params.flux_mode.to_string();
    let mut stats = StepStats::default();

    // x-faces: face (i, j) sits between cells i and i+1, i in -1..nx.
    let fx_w = grid.nx + 1;
    let mut fx: Vec<Option<FaceResult>> = vec![None; fx_w * grid.ny];
    let mut fy: Vec<Option<FaceResult>> = vec![None; grid.nx * (grid.ny + 1)];
    for along_x in [true, false] {
        let (ilo, jlo) = if along_x { (-1, 0) } else { (0, -1) };
        for j in jlo..ny {
            for i in ilo..nx {
                let (ni, nj) = if along_x { (i + 1, j) } else { (i, j + 1) };
                if !pad.is_active(i, j) || !pad.is_active(ni, nj) {
                    continue;
                }
                let real = role(i, j) == Role::Real || role(ni, nj) == Role::Real;
                match ctx.flux(along_x, i, j) {
                    Ok((f, case)) => {
                        match case {
                            Some(GrpCase::Acoustic) => stats.acoustic_faces += 1,
                            Some(GrpCase::Nonlinear) => stats.nonlinear_faces += 1,
                            None => {}
                        }
                        let slot = if along_x {
                            &mut fx[j as usize * fx_w + (i + 1) as usize]
                        } else {
                            &mut fy[(j + 1) as usize * grid.nx + i as usize]
                        };
                        *slot = Some(f);
                    }
                    Err(e) if real => {
                        let (ci, cj) = if role(i, j) == Role::Real { (i, j) } else { (ni, nj) };
                        return Err(Error::Face {
                            i: ci as usize,
                            j: cj as usize,
                            axis: if along_x { 'x' } else { 'y' },
                            source: Box::new(e),
                        });
                    }
                    Err(_) => {}
                }
            }
        }
    }

    let mut out = field.clone();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = grid.idx(i, j);
            let r = role(i as isize, j as isize);
            if r == Role::Inactive {
                continue;
            }
            let faces = [fx[j * fx_w + i], fx[j * fx_w + i + 1], fy[j * grid.nx + i], fy[(j + 1) * grid.nx + i]];
            if faces.iter().any(|f| f.is_none()) {
                if r == Role::Real {
                    return Err(Error::Internal(format!("real cell ({i}, {j}) has an inactive neighbour")));
                }
                continue;
            }
            let [w, e, s, n] = faces.map(|f| f.unwrap());
            let mut u = field.cells[k].to_array();
            for q in 0..4 {
                u[q] -= dt / grid.dx * (e.flux[q] - w.flux[q]) + dt / grid.dy * (n.flux[q] - s.flux[q]);
            }
            if let Geometry::Axisymmetric(_) = params.geometry {
                let mut sbar = [0.0; 4];
                let ii = i as isize;
                let jj = j as isize;
                for (along_x, fi, fj, face) in
                    [(true, ii - 1, jj, &w), (true, ii, jj, &e), (false, ii, jj - 1, &s), (false, ii, jj, &n)]
                {
                    let rr = ctx.face_radius(along_x, fi, fj).unwrap_or(0.0);
                    let ratio = ctx.radial_ratio(rr, &face.state, along_x, fi, fj);
                    let src = source_with_ratio(ratio, &face.state, &field.eos).map_err(|e| Error::Cell {
                        i,
                        j,
                        t: params.t,
                        mode: mode.clone(),
                        source: Box::new(e),
                    })?;
                    for q in 0..4 {
                        sbar[q] += 0.25 * src[q];
                    }
                }
                for q in 0..4 {
                    u[q] += dt * sbar[q];
                }
            }
            let new = Conserved::from_array(u);
            match new.to_primitive(&field.eos) {
                Ok(_) => out.cells[k] = new,
                Err(e) if r == Role::Real => return Err(Error::Cell { i, j, t: params.t, mode, source: Box::new(e) }),
                Err(_) => stats.ghost_failures += 1,
            }
        }
    }
    Ok((out, stats))
}
