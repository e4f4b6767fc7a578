//! Generalized Riemann problem: interface time derivatives for piecewise
//! linear data, the tangential/source correction, and the resulting
//! second-order flux.
//!
//! All derivatives live in the primitive normal-frame basis
//! `(ρ, u_ξ, u_η, p)`.

use crate::eos::MaterialEos;
use crate::error::{Error, Result};
use crate::riemann::{self, Flux, Region, RiemannInput, StarState, Wave};
use crate::state::Primitive;

/// Spatial derivative of `(ρ, u_ξ, u_η, p)` along one direction.
pub type Slope = [f64; 4];
/// `∂w/∂t` of `(ρ, u_ξ, u_η, p)`.
pub type TimeDerivative = [f64; 4];
pub type Mat4 = [[f64; 4]; 4];

pub const DEFAULT_K_ACOUSTIC: f64 = 0.1;

#[inline]
fn dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

pub fn mat_vec(m: &Mat4, v: &[f64; 4]) -> [f64; 4] {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v), dot(&m[3], v)]
}

#[inline]
fn add(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Quasi-linear matrix `A(w)` of `w_t + A w_ξ = 0`.
pub fn primitive_jacobian(w: &Primitive, eos: &MaterialEos) -> Result<Mat4> {
    let c = eos.sound_speed(w.rho, w.p)?;
    let (r, u) = (w.rho, w.ux);
    Ok([[u, r, 0.0, 0.0], [0.0, u, 0.0, 1.0 / r], [0.0, 0.0, u, 0.0], [0.0, r * c * c, 0.0, u]])
}

/// `A = R Λ R⁻¹` in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenDecomposition {
    pub lambda: [f64; 4],
    pub r: Mat4,
    pub rinv: Mat4,
}

impl EigenDecomposition {
    pub fn new(w: &Primitive, eos: &MaterialEos) -> Result<Self> {
        let c = eos.sound_speed(w.rho, w.p).map_err(|e| Error::Degenerate(e.to_string()))?;
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Degenerate(format!("sound speed {c}")));
        }
        let (rho, u) = (w.rho, w.ux);
        let rc2 = rho * c * c;
        Ok(Self {
            lambda: [u - c, u, u, u + c],
            r: [[rho, 1.0, 0.0, rho], [-c, 0.0, 0.0, c], [0.0, 0.0, 1.0, 0.0], [rc2, 0.0, 0.0, rc2]],
            rinv: [
                [0.0, -0.5 / c, 0.0, 0.5 / rc2],
                [1.0, 0.0, 0.0, -1.0 / (c * c)],
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.5 / c, 0.0, 0.5 / rc2],
            ],
        })
    }

    /// `R diag(weights) R⁻¹ v`.
    pub fn project(&self, weights: [f64; 4], v: &[f64; 4]) -> [f64; 4] {
        let mut a = mat_vec(&self.rinv, v);
        for k in 0..4 {
            a[k] *= weights[k];
        }
        mat_vec(&self.r, &a)
    }

    pub fn lambda_plus(&self) -> [f64; 4] {
        self.lambda.map(|l| l.max(0.0))
    }

    pub fn lambda_minus(&self) -> [f64; 4] {
        self.lambda.map(|l| l.min(0.0))
    }

    pub fn i_plus(&self) -> [f64; 4] {
        self.lambda.map(|l| 0.5 * (1.0 + sign(l)))
    }

    pub fn i_minus(&self) -> [f64; 4] {
        self.lambda.map(|l| 0.5 * (1.0 - sign(l)))
    }
}

/// One-sided tangential and source contributions, already projected.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TangentialSourceTerm {
    pub left: [f64; 4],
    pub right: [f64; 4],
}

impl TangentialSourceTerm {
    pub const ZERO: TangentialSourceTerm = TangentialSourceTerm { left: [0.0; 4], right: [0.0; 4] };

    pub fn total(&self) -> [f64; 4] {
        add(self.left, self.right)
    }

    pub fn is_zero(&self) -> bool {
        self.left.iter().chain(self.right.iter()).all(|&x| x == 0.0)
    }
}

/// `B(w) w_η - S` in the primitive normal-frame basis, where `B` is the
/// tangential quasi-linear matrix and `S` the primitive-form source.
pub fn tangential_residual(w: &Primitive, eos: &MaterialEos, grad_eta: &Slope, source: &[f64; 4]) -> Result<[f64; 4]> {
    let c = eos.sound_speed(w.rho, w.p)?;
    let v = w.uy;
    let g = grad_eta;
    Ok([
        v * g[0] + w.rho * g[2] - source[0],
        v * g[1] - source[1],
        v * g[2] + g[3] / w.rho - source[2],
        v * g[3] + w.rho * c * c * g[2] - source[3],
    ])
}

/// `H_L = -R I⁺ R⁻¹ r_L`, `H_R = -R I⁻ R⁻¹ r_R` for residuals `r = B w_η - S`.
pub fn build_h_term(
    eig: &EigenDecomposition,
    residual_left: &[f64; 4],
    residual_right: &[f64; 4],
) -> TangentialSourceTerm {
    let hl = eig.project(eig.i_plus(), residual_left).map(|x| -x);
    let hr = eig.project(eig.i_minus(), residual_right).map(|x| -x);
    TangentialSourceTerm { left: hl, right: hr }
}

/// H-term with the eigensystem of the arithmetic mean of the two sides.
pub fn h_term_at_mean(
    input: &RiemannInput,
    residual_left: &[f64; 4],
    residual_right: &[f64; 4],
) -> Result<TangentialSourceTerm> {
    if residual_left.iter().chain(residual_right.iter()).all(|&x| x == 0.0) {
        return Ok(TangentialSourceTerm::ZERO);
    }
    let eig = EigenDecomposition::new(&mean_state(input), &input.eos_left)?;
    Ok(build_h_term(&eig, residual_left, residual_right))
}

pub fn mean_state(input: &RiemannInput) -> Primitive {
    let (l, r) = (input.left, input.right);
    Primitive::new(0.5 * (l.rho + r.rho), 0.5 * (l.ux + r.ux), 0.5 * (l.uy + r.uy), 0.5 * (l.p + r.p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrpCase {
    Acoustic,
    Nonlinear,
}

/// Acoustic iff the scaled jump `|(Δρ/ρ̄, Δu/c̄, Δv/c̄, Δp/(ρ̄c̄²))|` is below
/// `k_acoustic * mesh_scale`.
pub fn classify_case(
    left: &Primitive,
    right: &Primitive,
    eos: &MaterialEos,
    mesh_scale: f64,
    k_acoustic: f64,
) -> GrpCase {
    let rho = 0.5 * (left.rho + right.rho);
    let p = 0.5 * (left.p + right.p);
    let c2 = eos.gamma * (p + eos.p_inf) / rho;
    let c = c2.sqrt();
    let j = [
        (right.rho - left.rho) / rho,
        (right.ux - left.ux) / c,
        (right.uy - left.uy) / c,
        (right.p - left.p) / (rho * c2),
    ];
    let norm = dot(&j, &j).sqrt();
    if norm.is_finite() && norm < k_acoustic * mesh_scale {
        GrpCase::Acoustic
    } else {
        GrpCase::Nonlinear
    }
}

/// Linearized GRP: `-RΛ⁺R⁻¹σ_L - RΛ⁻R⁻¹σ_R + H_L + H_R` at `mid`.
pub fn acoustic_derivative(
    mid: &Primitive,
    eos: &MaterialEos,
    slope_left: &Slope,
    slope_right: &Slope,
    h: &TangentialSourceTerm,
) -> Result<TimeDerivative> {
    let eig = EigenDecomposition::new(mid, eos)?;
    let a = eig.project(eig.lambda_plus(), slope_left);
    let b = eig.project(eig.lambda_minus(), slope_right);
    let t = h.total();
    Ok([-a[0] - b[0] + t[0], -a[1] - b[1] + t[1], -a[2] - b[2] + t[2], -a[3] - b[3] + t[3]])
}

/// Nonlinear resolution of the homogeneous GRP at the contact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrpResolution {
    pub star: StarState,
    /// Material derivative `Du/Dt` at the contact, equal on both sides.
    pub du_dt: f64,
    /// Material derivative `Dp/Dt` at the contact, equal on both sides.
    pub dp_dt: f64,
    /// `∂w/∂ξ` just left of the contact.
    pub left_dx: [f64; 4],
    /// `∂w/∂ξ` just right of the contact.
    pub right_dx: [f64; 4],
    /// Squared sound speeds on either side of the contact.
    pub c2_left: f64,
    pub c2_right: f64,
}

impl GrpResolution {
    /// Material derivative of `(ρ, u, v, p)` on one side of the contact.
    pub fn material(&self, left: bool) -> TimeDerivative {
        let c2 = if left { self.c2_left } else { self.c2_right };
        [self.dp_dt / c2, self.du_dt, 0.0, self.dp_dt]
    }
}

/// One wave side seen as the left side of a (possibly mirrored) problem.
struct Side {
    w: Primitive,
    eos: MaterialEos,
    slope: Slope,
    rho_star: f64,
    wave: Wave,
    p_star: f64,
    u_star: f64,
}

impl Side {
    fn left(input: &RiemannInput, star: &StarState, slope: &Slope) -> Side {
        Side {
            w: input.left,
            eos: input.eos_left,
            slope: *slope,
            rho_star: star.rho_star_left,
            wave: star.left_wave,
            p_star: star.p_star,
            u_star: star.u_star,
        }
    }

    fn right_mirrored(input: &RiemannInput, star: &StarState, slope: &Slope) -> Side {
        let w = input.right;
        Side {
            w: Primitive::new(w.rho, -w.ux, w.uy, w.p),
            eos: input.eos_right,
            slope: [-slope[0], slope[1], -slope[2], -slope[3]],
            rho_star: star.rho_star_right,
            wave: star.right_wave,
            p_star: star.p_star,
            u_star: -star.u_star,
        }
    }

    fn gamma(&self) -> f64 {
        self.eos.gamma
    }

    fn pbar(&self) -> f64 {
        self.w.p + self.eos.p_inf
    }

    fn pbar_star(&self) -> f64 {
        self.p_star + self.eos.p_inf
    }

    fn c(&self) -> f64 {
        (self.gamma() * self.pbar() / self.w.rho).sqrt()
    }

    fn c_star(&self) -> f64 {
        (self.gamma() * self.pbar_star() / self.rho_star).sqrt()
    }

    /// `S' = p̄'/p̄ - γ ρ'/ρ` for `S = ln p̄ - γ ln ρ`.
    fn entropy_slope(&self) -> f64 {
        self.slope[3] / self.pbar() - self.gamma() * self.slope[0] / self.w.rho
    }

    /// `c² S' / (γ (γ - 1))`.
    fn sigma(&self) -> f64 {
        let g = self.gamma();
        let c = self.c();
        c * c * self.entropy_slope() / (g * (g - 1.0))
    }

    /// Slope of the Riemann invariant `u + 2c/(γ-1)`.
    fn psi_slope(&self) -> f64 {
        let g = self.gamma();
        let c = self.c();
        self.slope[1] + self.slope[3] / (self.w.rho * c) + c * self.entropy_slope() / (g * (g - 1.0))
    }

    fn outer_dt(&self) -> [f64; 4] {
        let (r, u, s) = (self.w.rho, self.w.ux, &self.slope);
        let c = self.c();
        [-(u * s[0] + r * s[1]), -(u * s[1] + s[3] / r), -(u * s[2]), -(r * c * c * s[1] + u * s[3])]
    }

    fn shock_speed(&self) -> f64 {
        let g = self.gamma();
        self.w.ux - (((g + 1.0) * self.pbar_star() + (g - 1.0) * self.pbar()) / (2.0 * self.w.rho)).sqrt()
    }

    /// `L_σ w = ∂_t w + σ ∂_ξ w` ahead of the shock.
    fn shock_path_derivative(&self, sigma: f64) -> [f64; 4] {
        let dt = self.outer_dt();
        [
            dt[0] + sigma * self.slope[0],
            dt[1] + sigma * self.slope[1],
            dt[2] + sigma * self.slope[2],
            dt[3] + sigma * self.slope[3],
        ]
    }

    /// `(a, b, d)` of `a Du/Dt + b Dp/Dt = d` at the contact.
    fn coefficients(&self) -> (f64, f64, f64) {
        let g = self.gamma();
        let rs = self.rho_star;
        let cs = self.c_star();
        match self.wave {
            Wave::Rarefaction => {
                let theta = cs / self.c();
                let k = (g + 1.0) / (2.0 * (g - 1.0));
                let m = 2.0 * g / (g - 1.0);
                let tk = theta.powf(k);
                let tm = theta.powf(m);
                let d = -tk * self.c() * self.psi_slope()
                    + self.sigma() * (2.0 * g / (3.0 * g - 1.0) * tk + (g - 1.0) / (3.0 * g - 1.0) * tm);
                (1.0, 1.0 / (rs * cs), d)
            }
            Wave::Shock => {
                let sigma = self.shock_speed();
                let (fp, fpk, frk) = self.shock_sensitivities();
                let rel = sigma - self.u_star;
                let l = self.shock_path_derivative(sigma);
                let a = 1.0 - fp * rel * rs;
                let b = fp - rel / (rs * cs * cs);
                let d = l[1] - fpk * l[3] - frk * l[0];
                (a, b, d)
            }
        }
    }

    /// Partial derivatives of the shock curve `f(p*, p_K, ρ_K)`.
    fn shock_sensitivities(&self) -> (f64, f64, f64) {
        let g = self.gamma();
        let pk = self.pbar();
        let ps = self.pbar_star();
        let a = 2.0 / ((g + 1.0) * self.w.rho);
        let b = (g - 1.0) / (g + 1.0) * pk;
        let mu2 = (g - 1.0) / (g + 1.0);
        let q = (a / (ps + b)).sqrt();
        let dp = ps - pk;
        let f = dp * q;
        let fp = q * (1.0 - 0.5 * dp / (ps + b));
        let fpk = -q * (1.0 + 0.5 * mu2 * dp / (ps + b));
        let frk = -0.5 * f / self.w.rho;
        (fp, fpk, frk)
    }

    /// `∂w/∂ξ` on the star side of this wave, given the contact derivatives.
    fn star_dx(&self, x: f64, y: f64) -> [f64; 4] {
        let g = self.gamma();
        let rs = self.rho_star;
        let cs = self.c_star();
        let c2 = cs * cs;
        let ux = -y / (rs * c2);
        let px = -rs * x;
        let vx = rs / self.w.rho * self.slope[2];
        let rhox = match self.wave {
            Wave::Rarefaction => {
                let sx = rs / self.w.rho * self.entropy_slope();
                (px - self.pbar_star() * sx) / c2
            }
            Wave::Shock => {
                let sigma = self.shock_speed();
                let rel = sigma - self.u_star;
                let l = self.shock_path_derivative(sigma);
                let z = self.pbar_star() / self.pbar();
                let den = (g - 1.0) * z + g + 1.0;
                let ratio = ((g + 1.0) * z + g - 1.0) / den;
                let dratio = 4.0 * g / (den * den);
                let rho_p = self.w.rho * dratio / self.pbar();
                let rho_pk = -self.w.rho * dratio * z / self.pbar();
                let lp_star = y + rel * px;
                let lrho_star = rho_p * lp_star + rho_pk * l[3] + ratio * l[0];
                (lrho_star - y / c2) / rel
            }
        };
        [rhox, ux, vx, px]
    }

    /// `(∂_t + s ∂_ξ) w` inside this side's fan at `t → 0+`.
    fn fan_ray(&self, s: f64) -> [f64; 4] {
        let g = self.gamma();
        let cl = self.c();
        let mu2 = (g - 1.0) / (g + 1.0);
        let psi = self.w.ux + 2.0 * cl / (g - 1.0);
        let c0 = mu2 * (psi - s);
        let theta = c0 / cl;
        let k = (g + 1.0) / (2.0 * (g - 1.0));
        let m = 2.0 * g / (g - 1.0);
        let sigma = self.sigma();
        let tk = theta.powf(k);
        let tm = theta.powf(m);
        let g_head = sigma - 2.0 * cl * self.psi_slope();
        let psi1 = tk * g_head - (g + 1.0) / (3.0 * g - 1.0) * sigma * (tm - tk);
        let phi1 = 0.5 * sigma * tm - (3.0 - g) / (2.0 * (g + 1.0)) * psi1;
        let du = 0.5 * (psi1 + phi1);
        let dc = 0.25 * (g - 1.0) * (psi1 - phi1);
        let u0 = s + c0;
        let compression = theta.powf(2.0 / (g - 1.0));
        let rho0 = self.w.rho * compression;
        let pb0 = self.pbar() * theta.powf(m);
        let ds = (s - u0) * compression * self.entropy_slope();
        let dv = (s - u0) * compression * self.slope[2];
        let dp = pb0 * (2.0 * g * dc / c0 - ds) / (g - 1.0);
        let drho = rho0 * (2.0 * dc / c0 - ds) / (g - 1.0);
        [drho, du, dv, dp]
    }

    fn ray(&self, region: Region, x: f64, y: f64, star_dx: &[f64; 4], s: f64) -> [f64; 4] {
        match region {
            Region::LeftOuter => {
                let dt = self.outer_dt();
                [
                    dt[0] + s * self.slope[0],
                    dt[1] + s * self.slope[1],
                    dt[2] + s * self.slope[2],
                    dt[3] + s * self.slope[3],
                ]
            }
            Region::LeftFan => self.fan_ray(s),
            _ => {
                let rel = s - self.u_star;
                let c2 = self.c_star().powi(2);
                [y / c2 + rel * star_dx[0], x + rel * star_dx[1], rel * star_dx[2], y + rel * star_dx[3]]
            }
        }
    }
}

fn mirror_dx(d: [f64; 4]) -> [f64; 4] {
    [-d[0], d[1], -d[2], -d[3]]
}

fn mirror_region(r: Region) -> Region {
    match r {
        Region::RightOuter => Region::LeftOuter,
        Region::RightFan => Region::LeftFan,
        Region::RightStar => Region::LeftStar,
        Region::LeftOuter => Region::RightOuter,
        Region::LeftFan => Region::RightFan,
        Region::LeftStar => Region::RightStar,
    }
}

/// Solves the 2×2 system for `(Du/Dt, Dp/Dt)` at the contact and recovers the
/// star-region spatial derivatives on both sides.
pub fn resolve(
    input: &RiemannInput,
    slope_left: &Slope,
    slope_right: &Slope,
    star: &StarState,
) -> Result<GrpResolution> {
    let sl = Side::left(input, star, slope_left);
    let sr = Side::right_mirrored(input, star, slope_right);
    let (al, bl, dl) = sl.coefficients();
    let (ar, br, dr) = sr.coefficients();
    let (ar, br, dr) = (ar, -br, -dr);
    let det = al * br - ar * bl;
    let scale = (al * br).abs().max((ar * bl).abs());
    if !(det.abs() > 1e-12 * scale) || !det.is_finite() {
        return Err(Error::Degenerate(format!("GRP contact system determinant {det:e}")));
    }
    let x = (dl * br - dr * bl) / det;
    let y = (al * dr - ar * dl) / det;
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::Degenerate("non-finite GRP contact derivatives".into()));
    }
    let left_dx = sl.star_dx(x, y);
    let right_dx = mirror_dx(sr.star_dx(-x, y));
    Ok(GrpResolution {
        star: *star,
        du_dt: x,
        dp_dt: y,
        left_dx,
        right_dx,
        c2_left: sl.c_star().powi(2),
        c2_right: sr.c_star().powi(2),
    })
}

/// `(∂_t + s ∂_ξ) w` along the ray `ξ = s t` as `t → 0+`.
pub fn ray_derivative(
    input: &RiemannInput,
    slope_left: &Slope,
    slope_right: &Slope,
    res: &GrpResolution,
    s: f64,
) -> TimeDerivative {
    let (_, region) = riemann::sample_region(input, &res.star, s);
    if region.is_left() {
        Side::left(input, &res.star, slope_left).ray(region, res.du_dt, res.dp_dt, &res.left_dx, s)
    } else {
        let side = Side::right_mirrored(input, &res.star, slope_right);
        let d = side.ray(mirror_region(region), -res.du_dt, res.dp_dt, &mirror_dx(res.right_dx), -s);
        [d[0], -d[1], d[2], d[3]]
    }
}

/// Homogeneous GRP time derivative at `ξ = 0` plus the H-term.
pub fn nonlinear_derivative(
    input: &RiemannInput,
    slope_left: &Slope,
    slope_right: &Slope,
    star: &StarState,
    h: &TangentialSourceTerm,
) -> Result<TimeDerivative> {
    let res = resolve(input, slope_left, slope_right, star)?;
    Ok(add(ray_derivative(input, slope_left, slope_right, &res, 0.0), h.total()))
}

/// `w* + (dt/2) ∂w/∂t`, checked against the EOS.
pub fn midpoint_state(base: &Primitive, ddt: &TimeDerivative, dt: f64, eos: &MaterialEos) -> Result<Primitive> {
    let w = base.axpy(0.5 * dt, *ddt);
    if !w.is_finite() || !eos.is_admissible(w.rho, w.p) {
        return Err(Error::domain(format!("unphysical mid-time state rho = {:e}, p = {:e}", w.rho, w.p)));
    }
    Ok(w)
}

/// Result of one GRP face evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrpFace {
    pub flux: Flux,
    /// Mid-time interface state.
    pub mid: Primitive,
    /// Riemann solution at `ξ = 0`.
    pub base: Primitive,
    pub case: GrpCase,
}

/// `F(w^{n+1/2})` with `w^{n+1/2} = w^{RP}(0) + (dt/2) ∂w/∂t`.
pub fn interface_flux_grp(
    input: &RiemannInput,
    slope_left: &Slope,
    slope_right: &Slope,
    h: &TangentialSourceTerm,
    dt: f64,
    mesh_scale: f64,
    k_acoustic: f64,
) -> Result<GrpFace> {
    let star = riemann::solve_star(input)?;
    let (base, region) = riemann::sample_region(input, &star, 0.0);
    let eos = if region.is_left() { input.eos_left } else { input.eos_right };
    let single = input.eos_left == input.eos_right;
    let case = if single {
        classify_case(&input.left, &input.right, &input.eos_left, mesh_scale, k_acoustic)
    } else {
        GrpCase::Nonlinear
    };
    let ddt = match case {
        GrpCase::Acoustic => acoustic_derivative(&mean_state(input), &eos, slope_left, slope_right, h)?,
        GrpCase::Nonlinear => nonlinear_derivative(input, slope_left, slope_right, &star, h)?,
    };
    let mid = midpoint_state(&base, &ddt, dt, &eos)?;
    let flux = riemann::euler_flux(&mid, &eos)?;
    Ok(GrpFace { flux, mid, base, case })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix4;
    use proptest::prelude::*;

    const AIR: MaterialEos = MaterialEos::ideal(1.4);

    fn to_na(m: &Mat4) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| m[i][j])
    }

    fn dense_projector(eig: &EigenDecomposition, weights: [f64; 4]) -> Matrix4<f64> {
        let r = to_na(&eig.r);
        let rinv = r.try_inverse().unwrap();
        r * Matrix4::from_diagonal(&weights.into()) * rinv
    }

    #[test]
    fn zero_inputs_give_zero() {
        let w = Primitive::new(1.0, 0.3, 0.1, 1.0);
        let d = acoustic_derivative(&w, &AIR, &[0.0; 4], &[0.0; 4], &TangentialSourceTerm::ZERO).unwrap();
        assert_eq!(d, [0.0; 4]);
        let inp = RiemannInput::single(Primitive::new(1.0, 0.0, 0.0, 1.0), Primitive::new(0.125, 0.0, 0.0, 0.1), AIR);
        let star = riemann::solve_star(&inp).unwrap();
        let d = nonlinear_derivative(&inp, &[0.0; 4], &[0.0; 4], &star, &TangentialSourceTerm::ZERO).unwrap();
        assert_eq!(d.map(|x| x.abs()), [0.0; 4]);
    }

    #[test]
    fn equal_source_is_reproduced() {
        let w = Primitive::new(1.0, 0.3, 0.0, 1.0);
        let eig = EigenDecomposition::new(&w, &AIR).unwrap();
        let s = [0.2, -0.1, 0.05, 0.7];
        let r = s.map(|x| -x);
        let h = build_h_term(&eig, &r, &r);
        let d = acoustic_derivative(&w, &AIR, &[0.0; 4], &[0.0; 4], &h).unwrap();
        for k in 0..4 {
            assert!((d[k] - s[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn supersonic_upwinds_from_left() {
        let w = Primitive::new(1.0, 3.0, 0.2, 1.0);
        let sl = [0.3, -0.2, 0.4, 0.5];
        let d = acoustic_derivative(&w, &AIR, &sl, &[9.0, 9.0, 9.0, 9.0], &TangentialSourceTerm::ZERO).unwrap();
        let a = primitive_jacobian(&w, &AIR).unwrap();
        let direct = to_na(&a) * nalgebra::Vector4::from(sl);
        for k in 0..4 {
            assert!((d[k] + direct[k]).abs() < 1e-13, "{k}");
        }
    }

    #[test]
    fn axisymmetric_h_split_matches_dense_products() {
        let w = Primitive::new(1.0, 0.0, 2.0, 1.0);
        let face = Primitive::new(w.rho, w.uy, -w.ux, w.p);
        let c2 = 1.4;
        let src = [-2.0, 0.0, 0.0, -2.0 * c2];
        let resid = tangential_residual(&face, &AIR, &[0.0; 4], &src).unwrap();
        let eig = EigenDecomposition::new(&Primitive::new(1.0, 0.5, 0.0, 1.0), &AIR).unwrap();
        let h = build_h_term(&eig, &resid, &resid);
        let hl = -(dense_projector(&eig, eig.i_plus()) * nalgebra::Vector4::from(resid));
        let hr = -(dense_projector(&eig, eig.i_minus()) * nalgebra::Vector4::from(resid));
        for k in 0..4 {
            assert!((h.left[k] - hl[k]).abs() < 1e-12);
            assert!((h.right[k] - hr[k]).abs() < 1e-12);
            assert!((h.left[k] + h.right[k] - src[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn classify_examples() {
        let a = Primitive::new(1.189, 0.0, 0.0, 1e5);
        assert_eq!(classify_case(&a, &a, &AIR, 1e-3, DEFAULT_K_ACOUSTIC), GrpCase::Acoustic);
        let b = Primitive::new(1.6985715, -128.67802, 0.0, 1.65625e5);
        assert_eq!(classify_case(&b, &a, &AIR, 1e-3, DEFAULT_K_ACOUSTIC), GrpCase::Nonlinear);
        let c = Primitive::new(1.189 + 1e-12, 0.0, 0.0, 1e5);
        assert_eq!(classify_case(&a, &c, &AIR, 1e-3, DEFAULT_K_ACOUSTIC), GrpCase::Acoustic);
    }

    #[test]
    fn midpoint_examples() {
        let w = Primitive::new(1.0, 0.0, 0.0, 1.0);
        assert_eq!(midpoint_state(&w, &[0.0; 4], 0.1, &AIR).unwrap(), w);
        let m = midpoint_state(&w, &[2.0, 0.0, 0.0, 0.0], 0.1, &AIR).unwrap();
        assert!((m.rho - 1.1).abs() < 1e-15);
        assert!(midpoint_state(&w, &[-30.0, 0.0, 0.0, 0.0], 0.1, &AIR).is_err());
    }

    /// Ray derivatives of quantities whose gradient is continuous across a
    /// left-facing characteristic (ψ, S, v) must agree on both sides of the
    /// fan head and tail.
    #[test]
    fn fan_matches_neighbours_at_edges() {
        let inp = RiemannInput::single(Primitive::new(1.0, 0.2, 0.1, 1.0), Primitive::new(0.3, 0.9, -0.2, 0.2), AIR);
        let sl = [0.4, -0.3, 0.7, 0.9];
        let sr = [-0.2, 0.5, 0.1, 0.3];
        let star = riemann::solve_star(&inp).unwrap();
        assert_eq!(star.left_wave, Wave::Rarefaction);
        let res = resolve(&inp, &sl, &sr, &star).unwrap();
        let side = Side::left(&inp, &star, &sl);
        let (head, tail) = riemann::left_wave_speeds(&inp, &star);
        let g = 1.4;
        let combos = |w: &Primitive, d: &[f64; 4]| {
            let c = (g * w.p / w.rho).sqrt();
            let dpsi = d[1] + d[3] / (w.rho * c) + c / (g * (g - 1.0)) * (d[3] / w.p - g * d[0] / w.rho);
            let ds = d[3] / w.p - g * d[0] / w.rho;
            [dpsi, ds, d[2]]
        };
        let fan_state = |s: f64| riemann::sample(&inp, &star, s);
        for (s, other) in [
            (head, side.ray(Region::LeftOuter, res.du_dt, res.dp_dt, &res.left_dx, head)),
            (tail, side.ray(Region::LeftStar, res.du_dt, res.dp_dt, &res.left_dx, tail)),
        ] {
            let fan = side.fan_ray(s);
            let w = fan_state(s);
            let a = combos(&w, &fan);
            let b = combos(&w, &other);
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-10 * (1.0 + b[k].abs()), "s={s} k={k}: {a:?} vs {b:?}");
            }
        }
    }

    fn nonlinear_vs_acoustic(eps: f64) -> f64 {
        let base = Primitive::new(1.0, 0.1, 0.0, 1.0);
        let right = Primitive::new(1.0 + 0.5 * eps, 0.1 - 0.3 * eps, 0.2 * eps, 1.0 + 0.8 * eps);
        let inp = RiemannInput::single(base, right, AIR);
        let sl = [0.3, -0.2, 0.1, 0.4];
        let sr = [0.2, 0.1, -0.3, 0.5];
        let star = riemann::solve_star(&inp).unwrap();
        let nl = nonlinear_derivative(&inp, &sl, &sr, &star, &TangentialSourceTerm::ZERO).unwrap();
        let ac = acoustic_derivative(&mean_state(&inp), &AIR, &sl, &sr, &TangentialSourceTerm::ZERO).unwrap();
        (0..4).map(|k| (nl[k] - ac[k]).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn acoustic_limit_is_linear_in_jump() {
        let e2 = nonlinear_vs_acoustic(1e-2);
        let e3 = nonlinear_vs_acoustic(1e-3);
        let e4 = nonlinear_vs_acoustic(1e-4);
        assert!(e3 < 0.2 * e2 && e4 < 0.2 * e3, "{e2:e} {e3:e} {e4:e}");
        assert!(e4 < 1e-3);
    }

    #[test]
    fn acoustic_limit_with_shock_pattern() {
        // Colliding weak data produces two shocks.
        for eps in [1e-3, 1e-4] {
            let l = Primitive::new(1.0, eps, 0.0, 1.0);
            let r = Primitive::new(1.0, -eps, 0.0, 1.0);
            let inp = RiemannInput::single(l, r, AIR);
            let star = riemann::solve_star(&inp).unwrap();
            assert_eq!((star.left_wave, star.right_wave), (Wave::Shock, Wave::Shock));
            let sl = [0.3, -0.2, 0.1, 0.4];
            let sr = [0.2, 0.1, -0.3, 0.5];
            let nl = nonlinear_derivative(&inp, &sl, &sr, &star, &TangentialSourceTerm::ZERO).unwrap();
            let ac = acoustic_derivative(&mean_state(&inp), &AIR, &sl, &sr, &TangentialSourceTerm::ZERO).unwrap();
            for k in 0..4 {
                assert!((nl[k] - ac[k]).abs() < 50.0 * eps, "{eps} {k} {nl:?} {ac:?}");
            }
        }
    }

    #[test]
    fn galilean_shift_of_contact_derivatives() {
        let l = Primitive::new(1.0, 0.0, 0.0, 1.0);
        let r = Primitive::new(0.125, 0.0, 0.0, 0.1);
        let sl = [0.3, -0.2, 0.1, 0.4];
        let sr = [0.2, 0.1, -0.3, 0.5];
        let run = |u: f64| {
            let inp = RiemannInput::single(
                Primitive::new(l.rho, l.ux + u, 0.0, l.p),
                Primitive::new(r.rho, r.ux + u, 0.0, r.p),
                AIR,
            );
            let star = riemann::solve_star(&inp).unwrap();
            let res = resolve(&inp, &sl, &sr, &star).unwrap();
            let ray = ray_derivative(&inp, &sl, &sr, &res, star.u_star);
            (res, ray)
        };
        let (a, ra) = run(0.0);
        let (b, rb) = run(3.7);
        assert!((a.dp_dt - b.dp_dt).abs() < 1e-10 * a.dp_dt.abs().max(1.0));
        assert!((a.du_dt - b.du_dt).abs() < 1e-10 * a.du_dt.abs().max(1.0));
        for k in 0..4 {
            assert!((ra[k] - rb[k]).abs() < 1e-9 * ra[k].abs().max(1.0));
        }
    }

    #[test]
    fn zero_slope_flux_equals_rp_flux() {
        let inp = RiemannInput::single(Primitive::new(1.0, 0.0, 0.3, 1.0), Primitive::new(0.125, 0.0, -0.1, 0.1), AIR);
        let grp = interface_flux_grp(&inp, &[0.0; 4], &[0.0; 4], &TangentialSourceTerm::ZERO, 0.01, 0.01, 0.1).unwrap();
        assert_eq!(grp.flux, riemann::interface_flux_rp(&inp).unwrap());
    }

    proptest! {
        #[test]
        fn projector_algebra(rho in 0.01f64..10.0, u in -5.0f64..5.0, v in -5.0f64..5.0, p in 0.01f64..10.0) {
            let w = Primitive::new(rho, u, v, p);
            let eig = EigenDecomposition::new(&w, &AIR).unwrap();
            let r = to_na(&eig.r);
            let rinv = to_na(&eig.rinv);
            prop_assert!((r * rinv - Matrix4::identity()).abs().max() < 1e-10);
            let a = to_na(&primitive_jacobian(&w, &AIR).unwrap());
            let rec = r * Matrix4::from_diagonal(&eig.lambda.into()) * rinv;
            prop_assert!((rec - a).abs().max() <= 1e-8 * a.abs().max());
            let lp = eig.lambda_plus();
            let lm = eig.lambda_minus();
            let ip = eig.i_plus();
            let im = eig.i_minus();
            for k in 0..4 {
                prop_assert_eq!(lp[k] + lm[k], eig.lambda[k]);
                prop_assert_eq!(ip[k] + im[k], 1.0);
            }
            for proj in [ip, im] {
                let m = r * Matrix4::from_diagonal(&proj.into()) * rinv;
                prop_assert!((m * m - m).abs().max() < 1e-10 * (1.0 + m.abs().max()));
            }
        }
    }
}
