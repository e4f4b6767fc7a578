//! Exact Riemann solver for the 1D Euler equations with a stiffened-gas
//! closure on each side.
//!
//! States are given in a normal frame: `ux` is the normal and `uy` the
//! tangential velocity. In the variable `p + p∞` each side is an ideal gas,
//! so the classical wave curves apply per side with that side's `γ`.

use crate::eos::MaterialEos;
use crate::error::{Error, Result};
use crate::state::Primitive;

const MAX_ITER: usize = 100;

/// Normal-frame flux `(mass, normal momentum, tangential momentum, energy)`.
pub type Flux = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannInput {
    pub left: Primitive,
    pub right: Primitive,
    pub eos_left: MaterialEos,
    pub eos_right: MaterialEos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wave {
    Shock,
    Rarefaction,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarState {
    pub p_star: f64,
    pub u_star: f64,
    pub rho_star_left: f64,
    pub rho_star_right: f64,
    pub left_wave: Wave,
    pub right_wave: Wave,
}

/// Where a similarity coordinate falls in the wave pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    LeftOuter,
    LeftFan,
    LeftStar,
    RightStar,
    RightFan,
    RightOuter,
}

impl Region {
    pub fn is_left(self) -> bool {
        matches!(self, Region::LeftOuter | Region::LeftFan | Region::LeftStar)
    }
}

impl RiemannInput {
    pub fn new(left: Primitive, right: Primitive, eos_left: MaterialEos, eos_right: MaterialEos) -> Self {
        Self { left, right, eos_left, eos_right }
    }

    pub fn single(left: Primitive, right: Primitive, eos: MaterialEos) -> Self {
        Self::new(left, right, eos, eos)
    }

    /// Swaps sides and reverses the normal direction.
    pub fn mirrored(&self) -> Self {
        let m = |w: Primitive| Primitive::new(w.rho, -w.ux, w.uy, w.p);
        Self::new(m(self.right), m(self.left), self.eos_right, self.eos_left)
    }

    pub fn validate(&self) -> Result<()> {
        self.eos_left.check(self.left.rho, self.left.p)?;
        self.eos_right.check(self.right.rho, self.right.p)?;
        if !self.left.is_finite() || !self.right.is_finite() {
            return Err(Error::domain("non-finite Riemann data"));
        }
        Ok(())
    }
}

/// Shock/rarefaction wave curve `f_K(p)` and its derivative for one side.
pub fn pressure_function(side: &Primitive, eos: &MaterialEos, p: f64) -> Result<(f64, f64)> {
    let pbar = p + eos.p_inf;
    if !(pbar > 0.0) {
        return Err(Error::domain(format!("trial pressure {p} below -p_inf = {}", -eos.p_inf)));
    }
    Ok(wave_curve(side, eos, pbar))
}

#[inline]
fn wave_curve(side: &Primitive, eos: &MaterialEos, pbar: f64) -> (f64, f64) {
    let g = eos.gamma;
    let pk = side.p + eos.p_inf;
    if pbar > pk {
        let a = 2.0 / ((g + 1.0) * side.rho);
        let b = (g - 1.0) / (g + 1.0) * pk;
        let q = (a / (pbar + b)).sqrt();
        let dp = pbar - pk;
        (dp * q, q * (1.0 - 0.5 * dp / (pbar + b)))
    } else {
        let c = (g * pk / side.rho).sqrt();
        let z = (g - 1.0) / (2.0 * g);
        let ratio = pbar / pk;
        let f = 2.0 * c / (g - 1.0) * (ratio.powf(z) - 1.0);
        let df = ratio.powf(-(g + 1.0) / (2.0 * g)) / (side.rho * c);
        (f, df)
    }
}

/// Lower bound of the admissible star pressure.
pub fn min_star_pressure(input: &RiemannInput) -> f64 {
    -input.eos_left.p_inf.min(input.eos_right.p_inf)
}

fn total(input: &RiemannInput, p: f64) -> (f64, f64) {
    let (fl, dl) = wave_curve(&input.left, &input.eos_left, p + input.eos_left.p_inf);
    let (fr, dr) = wave_curve(&input.right, &input.eos_right, p + input.eos_right.p_inf);
    (fl + fr + input.right.ux - input.left.ux, dl + dr)
}

fn initial_guess(input: &RiemannInput, p_min: f64) -> f64 {
    let (l, r) = (&input.left, &input.right);
    let (el, er) = (&input.eos_left, &input.eos_right);
    let cl = el.sound_speed(l.rho, l.p).unwrap_or(0.0);
    let cr = er.sound_speed(r.rho, r.p).unwrap_or(0.0);
    let guess = if el == er {
        // Two-rarefaction estimate, exact when both waves are rarefactions.
        let g = el.gamma;
        let z = (g - 1.0) / (2.0 * g);
        let (pl, pr) = (l.p + el.p_inf, r.p + el.p_inf);
        let num = cl + cr - 0.5 * (g - 1.0) * (r.ux - l.ux);
        let den = cl / pl.powf(z) + cr / pr.powf(z);
        if num > 0.0 {
            (num / den).powf(1.0 / z) - el.p_inf
        } else {
            p_min
        }
    } else {
        0.5 * (l.p + r.p) - 0.125 * (r.ux - l.ux) * (l.rho + r.rho) * (cl + cr)
    };
    let gap = l.p.min(r.p) - p_min;
    let gap = if gap > 0.0 { gap } else { l.p.max(r.p) - p_min };
    let floor = p_min + 1e-6 * gap;
    if guess.is_finite() && guess > floor {
        guess
    } else {
        floor
    }
}

/// Solves for the star region. Vacuum is an error, not a constructed fan.
pub fn solve_star(input: &RiemannInput) -> Result<StarState> {
    input.validate()?;
    let (l, r) = (&input.left, &input.right);
    if l == r && input.eos_left == input.eos_right {
        return Ok(StarState {
            p_star: l.p,
            u_star: l.ux,
            rho_star_left: l.rho,
            rho_star_right: r.rho,
            left_wave: Wave::Rarefaction,
            right_wave: Wave::Rarefaction,
        });
    }

    let p_min = min_star_pressure(input);
    let (f_min, _) = total(input, p_min);
    if f_min >= 0.0 {
        let du = r.ux - l.ux;
        return Err(Error::Vacuum { du, critical: du - f_min });
    }

    // Bracket [lo, hi] with F(lo) < 0 < F(hi); F is increasing and concave.
    let mut lo = p_min;
    let mut p = initial_guess(input, p_min);
    let (mut f, mut df) = total(input, p);
    let mut hi = f64::INFINITY;
    if f < 0.0 {
        lo = p;
    } else {
        hi = p;
    }
    if f == 0.0 {
        return Ok(finish(input, p));
    }

    for _ in 0..MAX_ITER {
        let mut next = p - f / df;
        let inside = next > lo && next < hi && next.is_finite();
        if !inside {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { lo + 2.0 * (p - p_min).max(1.0) + (p - lo).abs() };
        }
        let step = (next - p).abs();
        p = next;
        let (fv, dv) = total(input, p);
        f = fv;
        df = dv;
        if f < 0.0 {
            lo = p;
        } else {
            hi = p;
        }
        let scale = (p - p_min).abs().max(1e-300);
        if f == 0.0 || step <= 1e-14 * scale || (hi - lo) <= 1e-14 * scale {
            return Ok(finish(input, p));
        }
    }
    Err(Error::Convergence { what: "star pressure", iterations: MAX_ITER })
}

fn star_density(side: &Primitive, eos: &MaterialEos, p_star: f64) -> (f64, Wave) {
    let g = eos.gamma;
    let pk = side.p + eos.p_inf;
    let ps = p_star + eos.p_inf;
    if ps > pk {
        let z = ps / pk;
        let ratio = ((g + 1.0) * z + (g - 1.0)) / ((g - 1.0) * z + (g + 1.0));
        (side.rho * ratio, Wave::Shock)
    } else {
        (side.rho * (ps / pk).powf(1.0 / g), Wave::Rarefaction)
    }
}

fn finish(input: &RiemannInput, p: f64) -> StarState {
    let (fl, _) = wave_curve(&input.left, &input.eos_left, p + input.eos_left.p_inf);
    let (fr, _) = wave_curve(&input.right, &input.eos_right, p + input.eos_right.p_inf);
    let u = 0.5 * (input.left.ux + input.right.ux) + 0.5 * (fr - fl);
    let (rho_l, wl) = star_density(&input.left, &input.eos_left, p);
    let (rho_r, wr) = star_density(&input.right, &input.eos_right, p);
    StarState { p_star: p, u_star: u, rho_star_left: rho_l, rho_star_right: rho_r, left_wave: wl, right_wave: wr }
}

/// Wave speeds bounding the left wave: `(head, tail)`; equal for a shock.
pub fn left_wave_speeds(input: &RiemannInput, star: &StarState) -> (f64, f64) {
    let (l, eos) = (&input.left, &input.eos_left);
    let g = eos.gamma;
    let pl = l.p + eos.p_inf;
    let ps = star.p_star + eos.p_inf;
    let cl = (g * pl / l.rho).sqrt();
    match star.left_wave {
        Wave::Shock => {
            let s = l.ux - cl * ((g + 1.0) / (2.0 * g) * ps / pl + (g - 1.0) / (2.0 * g)).sqrt();
            (s, s)
        }
        Wave::Rarefaction => {
            let cs = cl * (ps / pl).powf((g - 1.0) / (2.0 * g));
            (l.ux - cl, star.u_star - cs)
        }
    }
}

/// Wave speeds bounding the right wave: `(tail, head)`.
pub fn right_wave_speeds(input: &RiemannInput, star: &StarState) -> (f64, f64) {
    let m = input.mirrored();
    let ms = mirror_star(star);
    let (h, t) = left_wave_speeds(&m, &ms);
    (-t, -h)
}

fn mirror_star(star: &StarState) -> StarState {
    StarState {
        p_star: star.p_star,
        u_star: -star.u_star,
        rho_star_left: star.rho_star_right,
        rho_star_right: star.rho_star_left,
        left_wave: star.right_wave,
        right_wave: star.left_wave,
    }
}

fn sample_left(input: &RiemannInput, star: &StarState, xi: f64) -> (Primitive, Region) {
    let (l, eos) = (&input.left, &input.eos_left);
    let star_state = Primitive::new(star.rho_star_left, star.u_star, l.uy, star.p_star);
    let (head, tail) = left_wave_speeds(input, star);
    if xi < head {
        return (*l, Region::LeftOuter);
    }
    if xi >= tail {
        return (star_state, Region::LeftStar);
    }
    let g = eos.gamma;
    let pl = l.p + eos.p_inf;
    let cl = (g * pl / l.rho).sqrt();
    let c = 2.0 / (g + 1.0) * (cl + 0.5 * (g - 1.0) * (l.ux - xi));
    let u = 2.0 / (g + 1.0) * (cl + 0.5 * (g - 1.0) * l.ux + xi);
    let ratio = c / cl;
    let rho = l.rho * ratio.powf(2.0 / (g - 1.0));
    let p = pl * ratio.powf(2.0 * g / (g - 1.0)) - eos.p_inf;
    (Primitive::new(rho, u, l.uy, p), Region::LeftFan)
}

/// Samples the self-similar solution at `xi = x / t` and reports the region.
pub fn sample_region(input: &RiemannInput, star: &StarState, xi: f64) -> (Primitive, Region) {
    if xi <= star.u_star {
        sample_left(input, star, xi)
    } else {
        let (w, region) = sample_left(&input.mirrored(), &mirror_star(star), -xi);
        let region = match region {
            Region::LeftOuter => Region::RightOuter,
            Region::LeftFan => Region::RightFan,
            _ => Region::RightStar,
        };
        (Primitive::new(w.rho, -w.ux, w.uy, w.p), region)
    }
}

pub fn sample(input: &RiemannInput, star: &StarState, xi: f64) -> Primitive {
    sample_region(input, star, xi).0
}

/// Normal-frame Euler flux of `w`.
pub fn euler_flux(w: &Primitive, eos: &MaterialEos) -> Result<Flux> {
    let e = eos.specific_internal_energy(w.rho, w.p)?;
    let big_e = w.rho * (e + 0.5 * (w.ux * w.ux + w.uy * w.uy));
    let m = w.rho * w.ux;
    Ok([m, m * w.ux + w.p, m * w.uy, w.ux * (big_e + w.p)])
}

/// Godunov flux `F(w(0))` from the exact solution.
pub fn interface_flux_rp(input: &RiemannInput) -> Result<Flux> {
    let star = solve_star(input)?;
    let (w, region) = sample_region(input, &star, 0.0);
    let eos = if region.is_left() { &input.eos_left } else { &input.eos_right };
    euler_flux(&w, eos)
}
