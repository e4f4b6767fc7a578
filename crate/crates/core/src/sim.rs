//! Two-medium driver: scenario description, shock setup, and the time loop
//! coupling ghost states, per-medium updates and the level set.

use std::time::Instant;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::eos::MaterialEos;
use crate::error::{Error, Result};
use crate::fvm::{self, Axis, BcKind, Boundaries, FieldGrid, FluxMode, Geometry, Limiter, Role, StepParams};
use crate::gfm::{self, FitParams, GfmMode};
use crate::grid::Grid;
use crate::levelset::{Advection, CellLabel, LevelSetField, RegionMap};
use crate::state::Primitive;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub x: [f64; 2],
    pub y: [f64; 2],
    #[serde(default = "default_geometry")]
    pub geometry: GeometryKind,
    /// Which grid axis is the radius in axisymmetric runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radial_axis: Option<Axis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Planar,
    Axisymmetric,
}

fn default_geometry() -> GeometryKind {
    GeometryKind::Planar
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
}

/// One medium: its EOS and initial state `state + grad_x x + grad_y y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSpec {
    pub gamma: f64,
    #[serde(default)]
    pub p_inf: f64,
    /// `(ρ, u_x, u_y, p)`.
    pub state: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_x: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_y: Option<[f64; 4]>,
}

impl MediumSpec {
    pub fn uniform(eos: MaterialEos, w: Primitive) -> Self {
        Self { gamma: eos.gamma, p_inf: eos.p_inf, state: w.to_array(), grad_x: None, grad_y: None }
    }

    pub fn eos(&self) -> Result<MaterialEos> {
        MaterialEos::new(self.gamma, self.p_inf).map_err(|e| Error::Scenario(e.to_string()))
    }

    pub fn at(&self, x: f64, y: f64) -> Primitive {
        let mut w = self.state;
        for k in 0..4 {
            w[k] += self.grad_x.map_or(0.0, |g| g[k] * x) + self.grad_y.map_or(0.0, |g| g[k] * y);
        }
        Primitive::from_array(w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Media {
    #[serde(rename = "1")]
    pub one: MediumSpec,
    #[serde(rename = "2")]
    pub two: MediumSpec,
}

/// Initial interface; medium 1 is inside the circle or behind the plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum InterfaceSpec {
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    /// `n · x = offset`, medium 1 where `n · x < offset`.
    Plane {
        normal: [f64; 2],
        offset: f64,
    },
    /// Single-medium run in medium 2.
    None,
}

impl InterfaceSpec {
    pub fn phi(&self, x: f64, y: f64) -> f64 {
        match self {
            InterfaceSpec::Circle { center, radius } => (x - center[0]).hypot(y - center[1]) - radius,
            InterfaceSpec::Plane { normal, offset } => {
                let n = normal[0].hypot(normal[1]);
                (normal[0] * x + normal[1] * y) / n - offset
            }
            InterfaceSpec::None => f64::INFINITY,
        }
    }
}

/// Either a shock Mach number or a post-shock pressure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShockStrength {
    Mach(f64),
    PostPressure(f64),
}

/// A planar shock running through one medium at rest ahead of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShockSpec {
    /// Medium carrying the shock (1 or 2); its `state` is the pre-shock state.
    pub medium: u8,
    pub axis: Axis,
    pub position: f64,
    /// `+1` or `-1`: the shock moves toward increasing or decreasing coordinate.
    pub direction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mach: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_pressure: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcSpec {
    Wall,
    Piston,
    Outflow,
    Axis,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    pub left: BcSpec,
    pub right: BcSpec,
    pub bottom: BcSpec,
    pub top: BcSpec,
    /// Normal piston velocity; defaults to the post-shock velocity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub piston_speed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    pub flux: FluxMode,
    pub gfm: GfmMode,
    pub cfl: f64,
    pub end_time: f64,
    #[serde(default)]
    pub limiter: Limiter,
    #[serde(default = "default_band")]
    pub band: usize,
    #[serde(default = "default_k_acoustic")]
    pub k_acoustic: f64,
    #[serde(default = "default_fit_radius")]
    pub fit_radius: f64,
    #[serde(default)]
    pub level_set: Advection,
    /// Stop after this many steps even if `end_time` is not reached.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    /// Fixed time step instead of the CFL estimate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

fn default_band() -> usize {
    crate::levelset::DEFAULT_BAND
}
fn default_k_acoustic() -> f64 {
    crate::grp::DEFAULT_K_ACOUSTIC
}
fn default_fit_radius() -> f64 {
    FitParams::default().radius
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(default)]
    pub vtk: bool,
    #[serde(default = "default_schlieren_k")]
    pub schlieren_k: f64,
}

fn default_schlieren_k() -> f64 {
    crate::io::DEFAULT_SCHLIEREN_K
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { snapshots: Vec::new(), vtk: false, schlieren_k: default_schlieren_k() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub domain: DomainSpec,
    pub grid: GridSpec,
    pub medium: Media,
    pub interface: InterfaceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shock: Option<ShockSpec>,
    pub boundaries: BoundarySpec,
    pub numerics: Numerics,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Post-shock state, shock speed and piston (post-shock) velocity along the
/// shock axis, for a shock moving in `direction` into `pre`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockJump {
    /// `(ρ, u_n, p)` behind the shock, `u_n` along the shock axis.
    pub rho: f64,
    pub u: f64,
    pub p: f64,
    pub shock_speed: f64,
    pub piston_speed: f64,
}

/// Stiffened-gas Rankine–Hugoniot closure for a shock entering `pre` (density,
/// normal velocity, pressure).
pub fn rankine_hugoniot_post_shock(
    pre: (f64, f64, f64),
    strength: ShockStrength,
    direction: f64,
    eos: &MaterialEos,
) -> Result<ShockJump> {
    let (rho1, u1, p1) = pre;
    eos.check(rho1, p1)?;
    if direction != 1.0 && direction != -1.0 {
        return Err(Error::Scenario(format!("shock direction must be +1 or -1 (got {direction})")));
    }
    let g = eos.gamma;
    let pb1 = eos.effective_pressure(p1);
    let m2 = match strength {
        ShockStrength::Mach(m) => {
            if !(m >= 1.0) || !m.is_finite() {
                return Err(Error::Scenario(format!("shock Mach number must be at least 1 (got {m})")));
            }
            m * m
        }
        ShockStrength::PostPressure(p2) => {
            if !(p2 >= p1) || !p2.is_finite() {
                return Err(Error::Scenario(format!(
                    "post-shock pressure {p2} below the pre-shock pressure {p1} is an expansion shock"
                )));
            }
            1.0 + (eos.effective_pressure(p2) / pb1 - 1.0) * (g + 1.0) / (2.0 * g)
        }
    };
    let c1 = eos.sound_speed(rho1, p1)?;
    let w = m2.sqrt() * c1;
    let ratio = (g + 1.0) * m2 / ((g - 1.0) * m2 + 2.0);
    let p2 = pb1 * (1.0 + 2.0 * g / (g + 1.0) * (m2 - 1.0)) - eos.p_inf;
    let p2 = match strength {
        ShockStrength::PostPressure(p) => p,
        ShockStrength::Mach(_) => p2,
    };
    let rho2 = rho1 * ratio;
    let du = w * (1.0 - 1.0 / ratio);
    let u2 = u1 + direction * du;
    Ok(ShockJump { rho: rho2, u: u2, p: p2, shock_speed: u1 + direction * w, piston_speed: u2 })
}

impl ShockSpec {
    pub fn new(medium: u8, axis: Axis, position: f64, direction: f64, strength: ShockStrength) -> Self {
        let (mach, post_pressure) = match strength {
            ShockStrength::Mach(m) => (Some(m), None),
            ShockStrength::PostPressure(p) => (None, Some(p)),
        };
        Self { medium, axis, position, direction, mach, post_pressure }
    }

    pub fn strength(&self) -> Result<ShockStrength> {
        match (self.mach, self.post_pressure) {
            (Some(m), None) => Ok(ShockStrength::Mach(m)),
            (None, Some(p)) => Ok(ShockStrength::PostPressure(p)),
            _ => Err(Error::Scenario("shock needs exactly one of mach or post_pressure".into())),
        }
    }

    pub fn jump(&self, medium: &MediumSpec) -> Result<ShockJump> {
        let eos = medium.eos()?;
        let w = Primitive::from_array(medium.state);
        let u = match self.axis {
            Axis::X => w.ux,
            Axis::Y => w.uy,
        };
        rankine_hugoniot_post_shock((w.rho, u, w.p), self.strength()?, self.direction, &eos)
    }

    /// Whether `(x, y)` lies behind the shock.
    pub fn behind(&self, x: f64, y: f64) -> bool {
        let c = match self.axis {
            Axis::X => x,
            Axis::Y => y,
        };
        (c - self.position) * self.direction < 0.0
    }
}

impl Scenario {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(
            self.grid.nx,
            self.grid.ny,
            (self.domain.x[0], self.domain.x[1]),
            (self.domain.y[0], self.domain.y[1]),
        )
    }

    pub fn eos(&self) -> Result<[MaterialEos; 2]> {
        Ok([self.medium.one.eos()?, self.medium.two.eos()?])
    }

    pub fn geometry(&self) -> Result<Geometry> {
        match (self.domain.geometry, self.domain.radial_axis) {
            (GeometryKind::Planar, _) => Ok(Geometry::Planar),
            (GeometryKind::Axisymmetric, Some(a)) => Ok(Geometry::Axisymmetric(a)),
            (GeometryKind::Axisymmetric, None) => {
                Err(Error::Scenario("domain.radial_axis is required for axisymmetric runs".into()))
            }
        }
    }

    fn medium_spec(&self, k: u8) -> Result<&MediumSpec> {
        match k {
            1 => Ok(&self.medium.one),
            2 => Ok(&self.medium.two),
            _ => Err(Error::Scenario(format!("shock.medium must be 1 or 2 (got {k})"))),
        }
    }

    pub fn boundaries(&self) -> Result<Boundaries> {
        let piston = || -> Result<f64> {
            if let Some(s) = self.boundaries.piston_speed {
                return Ok(s);
            }
            let shock = self
                .shock
                .as_ref()
                .ok_or_else(|| Error::Scenario("boundaries: piston needs piston_speed or a [shock] section".into()))?;
            Ok(shock.jump(self.medium_spec(shock.medium)?)?.piston_speed)
        };
        let conv = |b: BcSpec| -> Result<BcKind> {
            Ok(match b {
                BcSpec::Wall => BcKind::Wall,
                BcSpec::Piston => BcKind::Piston(piston()?),
                BcSpec::Outflow => BcKind::Outflow,
                BcSpec::Axis => BcKind::Axis,
                BcSpec::Periodic => BcKind::Periodic,
            })
        };
        let b = &self.boundaries;
        Ok(Boundaries { left: conv(b.left)?, right: conv(b.right)?, bottom: conv(b.bottom)?, top: conv(b.top)? })
    }

    pub fn step_params(&self) -> Result<StepParams> {
        Ok(StepParams {
            flux_mode: self.numerics.flux,
            limiter: self.numerics.limiter,
            geometry: self.geometry()?,
            k_acoustic: self.numerics.k_acoustic,
            t: 0.0,
        })
    }

    pub fn fit_params(&self) -> FitParams {
        FitParams { radius: self.numerics.fit_radius, ..FitParams::default() }
    }

    /// Checks every semantic constraint on the scenario.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Scenario(m));
        if self.grid.nx < 4 || self.grid.ny < 4 {
            return bad(format!("grid must be at least 4x4 (got {}x{})", self.grid.nx, self.grid.ny));
        }
        self.grid()?;
        let eos = self.eos()?;
        for (k, m) in [&self.medium.one, &self.medium.two].into_iter().enumerate() {
            let w = Primitive::from_array(m.state);
            if !eos[k].is_admissible(w.rho, w.p) {
                return bad(format!("medium.{}.state {:?} is not admissible", k + 1, m.state));
            }
        }
        let n = &self.numerics;
        if !(n.end_time > 0.0) || !n.end_time.is_finite() {
            return bad(format!("numerics.end_time must be positive (got {})", n.end_time));
        }
        if !(n.cfl > 0.0 && n.cfl <= 1.0) {
            return bad(format!("numerics.cfl must lie in (0, 1] (got {})", n.cfl));
        }
        if n.band < 2 {
            return bad(format!("numerics.band must be at least 2 (got {})", n.band));
        }
        if !(n.k_acoustic >= 0.0) || !(n.fit_radius >= 1.0) {
            return bad("numerics.k_acoustic must be >= 0 and numerics.fit_radius >= 1".into());
        }
        if let Some(dt) = n.dt {
            if !(dt > 0.0) {
                return bad(format!("numerics.dt must be positive (got {dt})"));
            }
        }
        let s = &self.output.snapshots;
        if s.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("output.snapshots must be strictly increasing".into());
        }
        if s.iter().any(|&t| !(t >= 0.0 && t <= n.end_time)) {
            return bad(format!("output.snapshots must lie in [0, {}]", n.end_time));
        }
        if let InterfaceSpec::Circle { radius, .. } = self.interface {
            if !(radius > 0.0) {
                return bad(format!("interface.radius must be positive (got {radius})"));
            }
        }
        if let InterfaceSpec::Plane { normal, .. } = self.interface {
            if !(normal[0].hypot(normal[1]) > 0.0) {
                return bad("interface.normal must be non-zero".into());
            }
        }
        if let Some(sh) = &self.shock {
            sh.jump(self.medium_spec(sh.medium)?)?;
        }
        let b = &self.boundaries;
        if (b.left == BcSpec::Periodic) != (b.right == BcSpec::Periodic)
            || (b.bottom == BcSpec::Periodic) != (b.top == BcSpec::Periodic)
        {
            return bad("periodic boundaries must be paired".into());
        }
        let geometry = self.geometry()?;
        for (edge, spec, lower, along) in [
            ("left", b.left, true, Axis::X),
            ("right", b.right, false, Axis::X),
            ("bottom", b.bottom, true, Axis::Y),
            ("top", b.top, false, Axis::Y),
        ] {
            if spec != BcSpec::Axis {
                continue;
            }
            let ok = geometry == Geometry::Axisymmetric(along)
                && lower
                && match along {
                    Axis::X => self.domain.x[0] == 0.0,
                    Axis::Y => self.domain.y[0] == 0.0,
                };
            if !ok {
                return bad(format!(
                    "boundaries.{edge} = \"axis\" needs an axisymmetric domain starting at r = 0 on that edge"
                ));
            }
        }
        if let Geometry::Axisymmetric(a) = geometry {
            let r0 = match a {
                Axis::X => self.domain.x[0],
                Axis::Y => self.domain.y[0],
            };
            if r0 < 0.0 {
                return bad(format!("axisymmetric domain must have r >= 0 (starts at {r0})"));
            }
        }
        self.boundaries()?;
        Ok(())
    }
}

/// Names accepted by [`build_scenario`].
pub const SCENARIOS: &[&str] =
    &["shock-helium-bubble", "bubble-collapse-water", "manufactured-linear", "manufactured-equilibrium", "closed-box"];

pub const AIR: MaterialEos = MaterialEos::ideal(1.4);
pub const HELIUM: MaterialEos = MaterialEos::ideal(1.648);
/// Stiffened-gas water with `p∞` fitted to the benchmark's post-shock state.
pub const WATER: MaterialEos = MaterialEos { gamma: 4.4, p_inf: 6438.67 };

/// Built-in scenarios; `grid` overrides the default resolution.
pub fn build_scenario(name: &str, grid: Option<(usize, usize)>) -> Result<Scenario> {
    let numerics = |cfl: f64, end_time: f64| Numerics {
        flux: FluxMode::Grp,
        gfm: GfmMode::Grp,
        cfl,
        end_time,
        limiter: Limiter::Minmod,
        band: default_band(),
        k_acoustic: default_k_acoustic(),
        fit_radius: default_fit_radius(),
        level_set: Advection::default(),
        max_steps: None,
        dt: None,
    };
    let mut sc = match name {
        "shock-helium-bubble" => Scenario {
            name: name.into(),
            domain: DomainSpec {
                x: [0.0, 0.55],
                y: [0.0, 0.0445],
                geometry: GeometryKind::Axisymmetric,
                radial_axis: Some(Axis::Y),
            },
            grid: GridSpec { nx: 275, ny: 45 },
            medium: Media {
                one: MediumSpec::uniform(HELIUM, Primitive::new(0.2163, 0.0, 0.0, 1e5)),
                two: MediumSpec::uniform(AIR, Primitive::new(1.189, 0.0, 0.0, 1e5)),
            },
            interface: InterfaceSpec::Circle { center: [0.425, 0.0], radius: 0.025 },
            shock: Some(ShockSpec::new(2, Axis::X, 0.45, -1.0, ShockStrength::Mach(1.25))),
            boundaries: BoundarySpec {
                left: BcSpec::Wall,
                right: BcSpec::Piston,
                bottom: BcSpec::Axis,
                top: BcSpec::Wall,
                piston_speed: None,
            },
            numerics: numerics(0.45, 1594e-6),
            output: OutputSpec { snapshots: vec![223e-6, 350e-6, 600e-6, 1594e-6], ..OutputSpec::default() },
        },
        "bubble-collapse-water" => Scenario {
            name: name.into(),
            domain: DomainSpec {
                x: [0.0, 6.0],
                y: [0.0, 15.0],
                geometry: GeometryKind::Axisymmetric,
                radial_axis: Some(Axis::X),
            },
            grid: GridSpec { nx: 60, ny: 75 },
            medium: Media {
                one: MediumSpec::uniform(AIR, Primitive::new(0.001, 0.0, 0.0, 1.0)),
                two: MediumSpec::uniform(WATER, Primitive::new(1.0, 0.0, 0.0, 1.0)),
            },
            interface: InterfaceSpec::Circle { center: [0.0, 9.0], radius: 3.0 },
            shock: Some(ShockSpec::new(2, Axis::Y, 12.0, -1.0, ShockStrength::PostPressure(19000.0))),
            boundaries: BoundarySpec {
                left: BcSpec::Axis,
                right: BcSpec::Outflow,
                bottom: BcSpec::Outflow,
                top: BcSpec::Piston,
                piston_speed: None,
            },
            numerics: numerics(0.45, 0.02342),
            output: OutputSpec { snapshots: vec![0.012, 0.020, 0.02298, 0.02342], ..OutputSpec::default() },
        },
        "manufactured-linear" => {
            let m = MediumSpec {
                gamma: 1.4,
                p_inf: 0.0,
                state: [1.0, 0.1, -0.05, 1.0],
                grad_x: Some([0.02, 0.01, 0.0, 0.01]),
                grad_y: Some([-0.01, 0.0, 0.02, 0.015]),
            };
            Scenario {
                name: name.into(),
                domain: DomainSpec { x: [0.0, 1.0], y: [0.0, 1.0], geometry: GeometryKind::Planar, radial_axis: None },
                grid: GridSpec { nx: 40, ny: 40 },
                medium: Media { one: m.clone(), two: m },
                interface: InterfaceSpec::Circle { center: [0.5, 0.5], radius: 0.2 },
                shock: None,
                boundaries: BoundarySpec {
                    left: BcSpec::Outflow,
                    right: BcSpec::Outflow,
                    bottom: BcSpec::Outflow,
                    top: BcSpec::Outflow,
                    piston_speed: None,
                },
                numerics: Numerics { max_steps: Some(10), ..numerics(0.4, 1.0) },
                output: OutputSpec::default(),
            }
        }
        "manufactured-equilibrium" => Scenario {
            name: name.into(),
            domain: DomainSpec { x: [0.0, 1.0], y: [0.0, 1.0], geometry: GeometryKind::Planar, radial_axis: None },
            grid: GridSpec { nx: 40, ny: 40 },
            medium: Media {
                one: MediumSpec::uniform(HELIUM, Primitive::new(0.2163, 0.0, 0.0, 1e5)),
                two: MediumSpec::uniform(AIR, Primitive::new(1.189, 0.0, 0.0, 1e5)),
            },
            interface: InterfaceSpec::Circle { center: [0.5, 0.5], radius: 0.25 },
            shock: None,
            boundaries: BoundarySpec {
                left: BcSpec::Wall,
                right: BcSpec::Wall,
                bottom: BcSpec::Wall,
                top: BcSpec::Wall,
                piston_speed: None,
            },
            numerics: Numerics { max_steps: Some(100), ..numerics(0.45, 1.0) },
            output: OutputSpec::default(),
        },
        "closed-box" => Scenario {
            name: name.into(),
            domain: DomainSpec { x: [0.0, 1.0], y: [0.0, 1.0], geometry: GeometryKind::Planar, radial_axis: None },
            grid: GridSpec { nx: 40, ny: 40 },
            medium: Media {
                one: MediumSpec::uniform(HELIUM, Primitive::new(0.2, 0.0, 0.0, 1.0)),
                two: MediumSpec::uniform(AIR, Primitive::new(1.0, 0.0, 0.0, 1.0)),
            },
            interface: InterfaceSpec::Circle { center: [0.5, 0.5], radius: 0.2 },
            shock: Some(ShockSpec::new(2, Axis::X, 0.15, 1.0, ShockStrength::Mach(1.2))),
            boundaries: BoundarySpec {
                left: BcSpec::Wall,
                right: BcSpec::Wall,
                bottom: BcSpec::Wall,
                top: BcSpec::Wall,
                piston_speed: None,
            },
            numerics: Numerics { max_steps: Some(100), ..numerics(0.45, 1.0) },
            output: OutputSpec::default(),
        },
        other => return Err(Error::Scenario(format!("unknown scenario '{other}' (known: {})", SCENARIOS.join(", ")))),
    };
    if let Some((nx, ny)) = grid {
        sc.grid = GridSpec { nx, ny };
    }
    sc.validate()?;
    Ok(sc)
}

/// Composed solution at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub step: usize,
    pub grid: Grid,
    pub flux_mode: FluxMode,
    pub gfm_mode: GfmMode,
    pub phi: Vec<f64>,
    /// 1 or 2 per cell.
    pub medium: Vec<u8>,
    pub prims: Vec<Primitive>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnapshotSummary {
    pub time: f64,
    pub step: usize,
    pub bubble_volume: f64,
    pub max_pressure: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub flux: String,
    pub gfm: String,
    pub steps: usize,
    pub final_time: f64,
    pub initial_mass: f64,
    pub final_mass: f64,
    pub initial_volume: f64,
    pub final_volume: f64,
    /// Largest pressure seen in any real cell over the run.
    pub peak_pressure: f64,
    pub max_speed_ratio: f64,
    /// Ghost states replaced because the linear extrapolation was unphysical.
    pub clamps: usize,
    /// Ghost cells whose update failed and which kept their previous value.
    pub ghost_failures: usize,
    pub constant_fits: usize,
    /// Ghost cells skipped for want of nearby real cells.
    pub orphan_ghosts: usize,
    pub acoustic_faces: usize,
    pub nonlinear_faces: usize,
    pub snapshots: Vec<SnapshotSummary>,
    pub wall_seconds: f64,
}

pub struct Simulation {
    pub scenario: Scenario,
    pub grid: Grid,
    pub eos: [MaterialEos; 2],
    pub boundaries: Boundaries,
    pub params: StepParams,
    pub ls: LevelSetField,
    pub fields: [FieldGrid; 2],
    pub t: f64,
    pub step: usize,
    pub report: RunReport,
    two_media: bool,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let grid = scenario.grid()?;
        let eos = scenario.eos()?;
        let ls = LevelSetField::from_fn(grid, |x, y| scenario.interface.phi(x, y));
        let two_media = ls.phi.iter().any(|&p| p < 0.0) && ls.phi.iter().any(|&p| p >= 0.0);
        let ls = if two_media { ls.reinitialize(scenario.numerics.band)? } else { ls };
        let shock = match &scenario.shock {
            Some(s) => Some((s.clone(), s.jump(scenario.medium_spec(s.medium)?)?)),
            None => None,
        };
        let specs = [&scenario.medium.one, &scenario.medium.two];
        let mut fields = Vec::with_capacity(2);
        for k in 0..2 {
            let field = FieldGrid::from_primitive(grid, eos[k], |x, y| {
                let w = specs[k].at(x, y);
                match &shock {
                    Some((s, j)) if s.medium as usize == k + 1 && s.behind(x, y) => match s.axis {
                        Axis::X => Primitive::new(j.rho, j.u, w.uy, j.p),
                        Axis::Y => Primitive::new(j.rho, w.ux, j.u, j.p),
                    },
                    _ => w,
                }
            })
            .map_err(|e| Error::Scenario(format!("initial state of medium {}: {e}", k + 1)))?;
            fields.push(field);
        }
        let fields: [FieldGrid; 2] = fields.try_into().map_err(|_| Error::Internal("media".into()))?;
        let boundaries = scenario.boundaries()?;
        let params = scenario.step_params()?;
        let report = RunReport {
            scenario: scenario.name.clone(),
            flux: scenario.numerics.flux.to_string(),
            gfm: scenario.numerics.gfm.to_string(),
            ..RunReport::default()
        };
        let mut sim =
            Simulation { scenario, grid, eos, boundaries, params, ls, fields, t: 0.0, step: 0, report, two_media };
        sim.report.initial_mass = sim.total_mass()?;
        sim.report.initial_volume = sim.bubble_volume();
        sim.report.peak_pressure = sim.max_pressure()?;
        Ok(sim)
    }

    /// Medium (1 or 2) owning cell `k`.
    #[inline]
    pub fn medium_of(&self, k: usize) -> u8 {
        if self.ls.phi[k] < 0.0 {
            1
        } else {
            2
        }
    }

    pub fn primitive(&self, k: usize) -> Result<Primitive> {
        let m = self.medium_of(k) as usize - 1;
        self.fields[m].primitive(k)
    }

    pub fn composed(&self) -> Result<Vec<Primitive>> {
        (0..self.grid.len()).map(|k| self.primitive(k)).collect()
    }

    /// `Σ ρ dV` over real cells; `dV = 2π r dx dy` in axisymmetric runs.
    pub fn total_mass(&self) -> Result<f64> {
        let mut m = 0.0;
        for k in 0..self.grid.len() {
            m += self.fields[self.medium_of(k) as usize - 1].cells[k].rho * self.cell_volume(k);
        }
        Ok(m)
    }

    pub fn cell_volume(&self, k: usize) -> f64 {
        let g = &self.grid;
        let (i, j) = (k % g.nx, k / g.nx);
        match self.params.geometry {
            Geometry::Planar => g.dx * g.dy,
            Geometry::Axisymmetric(Axis::X) => 2.0 * std::f64::consts::PI * g.xc(i) * g.dx * g.dy,
            Geometry::Axisymmetric(Axis::Y) => 2.0 * std::f64::consts::PI * g.yc(j) * g.dx * g.dy,
        }
    }

    /// Volume (area in planar runs) of the `φ < 0` region.
    pub fn bubble_volume(&self) -> f64 {
        (0..self.grid.len()).filter(|&k| self.ls.phi[k] < 0.0).map(|k| self.cell_volume(k)).sum()
    }

    pub fn max_pressure(&self) -> Result<f64> {
        let mut p = f64::NEG_INFINITY;
        for k in 0..self.grid.len() {
            p = p.max(self.primitive(k)?.p);
        }
        Ok(p)
    }

    /// `max |V| / c` over real cells.
    pub fn max_speed_ratio(&self) -> Result<f64> {
        let mut r: f64 = 0.0;
        for k in 0..self.grid.len() {
            let m = self.medium_of(k) as usize - 1;
            let w = self.fields[m].primitive(k)?;
            r = r.max(w.speed() / self.eos[m].sound_speed(w.rho, w.p)?);
        }
        Ok(r)
    }

    pub fn snapshot(&self) -> Result<Snapshot> {
        Ok(Snapshot {
            time: self.t,
            step: self.step,
            grid: self.grid,
            flux_mode: self.scenario.numerics.flux,
            gfm_mode: self.scenario.numerics.gfm,
            phi: self.ls.phi.clone(),
            medium: (0..self.grid.len()).map(|k| self.medium_of(k)).collect(),
            prims: self.composed()?,
        })
    }

    fn roles(&self, region: &RegionMap, k: u8) -> Vec<Role> {
        region
            .labels
            .iter()
            .map(|l| {
                if l.medium() == k {
                    Role::Real
                } else if l.ghost_for() == Some(k) {
                    Role::Ghost
                } else {
                    Role::Inactive
                }
            })
            .collect()
    }

    /// One time step no longer than `max_dt`; returns the step taken.
    pub fn advance(&mut self, max_dt: f64) -> Result<f64> {
        let (step, t) = (self.step, self.t);
        self.advance_inner(max_dt).map_err(|e| Error::Step { step, t, source: Box::new(e) })
    }

    fn advance_inner(&mut self, max_dt: f64) -> Result<f64> {
        let g = self.grid;
        let n = &self.scenario.numerics;
        let region = if self.two_media {
            self.ls.classify(n.band)
        } else {
            RegionMap { grid: g, labels: vec![CellLabel::Medium2; g.len()] }
        };

        // Ghost states at the current interface.
        let mut band_velocity = Vec::new();
        if self.two_media {
            let mut prims: [Vec<Primitive>; 2] =
                [vec![Primitive::default(); g.len()], vec![Primitive::default(); g.len()]];
            for (k, l) in region.labels.iter().enumerate() {
                let m = l.medium() as usize - 1;
                prims[m][k] = self.fields[m].primitive(k)?;
            }
            let ghosts = gfm::build_ghosts(
                &self.ls,
                &region,
                [&prims[0], &prims[1]],
                self.eos,
                n.gfm,
                self.params.geometry,
                &self.scenario.fit_params(),
            )?;
            self.report.clamps += ghosts.clamps;
            self.report.constant_fits += ghosts.constant_fits;
            self.report.orphan_ghosts += ghosts.orphans;
            for m in 0..2 {
                for (k, w) in &ghosts.ghosts[m] {
                    self.fields[m].cells[*k] = w.to_conserved(&self.eos[m])?;
                }
            }
            band_velocity = ghosts.band_velocity;
        }
        let roles = [self.roles(&region, 1), self.roles(&region, 2)];

        let mut dt = match n.dt {
            Some(dt) => dt,
            None => {
                let mut speed: f64 = 0.0;
                for m in 0..2 {
                    if roles[m].iter().any(|r| *r != Role::Inactive) {
                        speed = speed.max(fvm::max_signal_speed(&self.fields[m], Some(&roles[m]))?);
                    }
                }
                fvm::compute_dt(&g, speed, n.cfl)?
            }
        };
        let clipped = dt >= max_dt;
        if clipped {
            dt = max_dt;
        }
        if !(dt > 0.0) {
            return Err(Error::Internal(format!("non-positive time step {dt:e}")));
        }

        // Interface velocity at t_n: real velocities, ghost-extended in the band.
        let mut velocity = vec![(0.0, 0.0); g.len()];
        if self.two_media {
            for k in 0..g.len() {
                let w = self.primitive(k)?;
                velocity[k] = (w.ux, w.uy);
            }
            for (k, v) in band_velocity {
                velocity[k] = v;
            }
        }

        let mut params = self.params;
        params.t = self.t;
        for m in 0..2 {
            if !roles[m].contains(&Role::Real) {
                continue;
            }
            let (next, stats) =
                fvm::step_single_medium(&self.fields[m], Some(&roles[m]), &self.boundaries, &params, dt)?;
            self.fields[m] = next;
            self.report.acoustic_faces += stats.acoustic_faces;
            self.report.nonlinear_faces += stats.nonlinear_faces;
            self.report.ghost_failures += stats.ghost_failures;
        }

        if self.two_media {
            let geometry = self.params.geometry;
            self.ls =
                self.ls.advect_with(&velocity, dt, n.level_set)?.reinitialize_conserving(
                    n.band,
                    |x, y| match geometry {
                        Geometry::Planar => 1.0,
                        Geometry::Axisymmetric(Axis::X) => x.abs(),
                        Geometry::Axisymmetric(Axis::Y) => y.abs(),
                    },
                )?;
            // Cells that changed sides take the other medium's updated value;
            // that value must be physical.
            for k in 0..g.len() {
                let m = self.medium_of(k);
                if region.labels[k].medium() != m && !region.is_active(m, k) {
                    return Err(Error::Internal(format!("interface left the ghost band at cell {k}")));
                }
            }
        }
        self.t = if clipped { self.t + max_dt } else { self.t + dt };
        self.step += 1;
        Ok(dt)
    }

    /// Runs to the end time (or `max_steps`), landing exactly on every
    /// snapshot time and handing snapshots to `sink`.
    pub fn run(&mut self, mut sink: impl FnMut(&Snapshot) -> Result<()>) -> Result<RunReport> {
        let start = Instant::now();
        let end = self.scenario.numerics.end_time;
        let mut targets: Vec<f64> = self.scenario.output.snapshots.clone();
        let mut next = 0;
        while next < targets.len() && targets[next] <= self.t {
            self.emit(&mut sink)?;
            next += 1;
        }
        if targets.last().is_none_or(|&t| t < end) {
            targets.push(end);
        }
        let max_steps = self.scenario.numerics.max_steps.unwrap_or(usize::MAX);
        while self.t < end && self.step < max_steps {
            let target = targets[next.min(targets.len() - 1)];
            let before = self.t;
            self.advance(target - self.t)?;
            if !(self.t > before) {
                return Err(Error::Internal(format!("time did not advance at step {}", self.step)));
            }
            if self.t >= target {
                // Land exactly on the scheduled time.
                self.t = target;
                if next < self.scenario.output.snapshots.len() {
                    self.emit(&mut sink)?;
                }
                next += 1;
            }
            self.report.peak_pressure = self.report.peak_pressure.max(self.max_pressure()?);
            if self.step.is_multiple_of(100) {
                info!("step {} t = {:.6e}", self.step, self.t);
            }
        }
        self.report.steps = self.step;
        self.report.final_time = self.t;
        self.report.final_mass = self.total_mass()?;
        self.report.final_volume = self.bubble_volume();
        self.report.max_speed_ratio = self.max_speed_ratio()?;
        self.report.wall_seconds = start.elapsed().as_secs_f64();
        Ok(self.report.clone())
    }

    fn emit(&mut self, sink: &mut impl FnMut(&Snapshot) -> Result<()>) -> Result<()> {
        let snap = self.snapshot()?;
        self.report.snapshots.push(SnapshotSummary {
            time: self.t,
            step: self.step,
            bubble_volume: self.bubble_volume(),
            max_pressure: self.max_pressure()?,
        });
        debug!("snapshot at t = {:e}", self.t);
        sink(&snap)
    }
}
