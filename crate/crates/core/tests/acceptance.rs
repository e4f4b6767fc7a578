//! Acceptance criteria for the solver. Each test prints one line,
//! `PASS <criterion>: <measurements>` or `FAIL <criterion>: <measurements>`,
//! and then asserts. Run with `cargo test --release --test acceptance -- --nocapture`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use grp_gfm::fvm::{self, BcKind, Boundaries, FieldGrid, FluxMode, StepParams};
use grp_gfm::gfm::GfmMode;
use grp_gfm::grid::Grid;
use grp_gfm::grp::{self, TangentialSourceTerm};
use grp_gfm::riemann::{self, RiemannInput};
use grp_gfm::sim::{build_scenario, rankine_hugoniot_post_shock, ShockStrength, Simulation, AIR, WATER};
use grp_gfm::{Error, MaterialEos, Primitive};

fn verdict(name: &str, ok: bool, detail: String) -> bool {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn rh_reproduction() {
    let start = Instant::now();
    let j = rankine_hugoniot_post_shock((1.189, 0.0, 1e5), ShockStrength::Mach(1.25), -1.0, &AIR).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let errs = [rel(j.rho, 1.6985715), rel(j.u, -128.67802), rel(j.p, 1.65625e5), rel(j.piston_speed, -128.678)];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    let ok = worst < 1e-4 && elapsed < 1e-3;
    assert!(verdict(
        "RH reproduction",
        ok,
        format!(
            "rho {:.7} u {:.5} p {:.5e} piston {:.3}; worst rel err {worst:.2e}; {:.1} us",
            j.rho,
            j.u,
            j.p,
            j.piston_speed,
            elapsed * 1e6
        )
    ));
}

#[test]
fn water_fit_closure() {
    // The printed post-shock velocity is the magnitude along the shock axis.
    let j = rankine_hugoniot_post_shock((1.0, 0.0, 1.0), ShockStrength::PostPressure(19000.0), 1.0, &WATER).unwrap();
    let errs = [rel(j.rho, 1.313345), rel(j.u.abs(), 67.3267), rel(j.p, 19000.0)];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    assert!(verdict(
        "water-fit closure",
        worst < 1e-3,
        format!(
            "gamma {} p_inf {}: rho {:.6} |u| {:.4} p {}; worst rel err {worst:.2e}",
            WATER.gamma,
            WATER.p_inf,
            j.rho,
            j.u.abs(),
            j.p
        )
    ));
}

/// Stiffened-gas pressure function of one side, written out independently of
/// the library.
fn oracle_f(rho: f64, p: f64, gamma: f64, pinf: f64, ps: f64) -> f64 {
    let c = (gamma * (p + pinf) / rho).sqrt();
    if ps > p {
        let a = 2.0 / ((gamma + 1.0) * rho);
        let b = (gamma - 1.0) / (gamma + 1.0) * (p + pinf);
        (ps - p) * (a / (ps + pinf + b)).sqrt()
    } else {
        2.0 * c / (gamma - 1.0) * (((ps + pinf) / (p + pinf)).powf((gamma - 1.0) / (2.0 * gamma)) - 1.0)
    }
}

/// `None` for vacuum, otherwise the star pressure by bisection.
fn oracle_p_star(inp: &RiemannInput) -> Option<f64> {
    let (l, r) = (&inp.left, &inp.right);
    let (el, er) = (&inp.eos_left, &inp.eos_right);
    let f = |ps: f64| {
        oracle_f(l.rho, l.p, el.gamma, el.p_inf, ps) + oracle_f(r.rho, r.p, er.gamma, er.p_inf, ps) + r.ux - l.ux
    };
    let p_min = -el.p_inf.min(er.p_inf);
    if f(p_min) >= 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (p_min, l.p.max(r.p).max(p_min + 1.0));
    while f(hi) < 0.0 {
        hi = p_min + 2.0 * (hi - p_min);
    }
    for _ in 0..500 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

fn random_side(rng: &mut ChaCha8Rng) -> (Primitive, MaterialEos) {
    let gamma = rng.gen_range(1.1..5.0);
    let p_inf = if rng.gen_bool(0.5) { 0.0 } else { 10f64.powf(rng.gen_range(-1.0..4.0)) };
    let rho = 10f64.powf(rng.gen_range(-3.0..1.0));
    let p = 10f64.powf(rng.gen_range(-2.0..4.0));
    let c = (gamma * (p + p_inf) / rho).sqrt();
    let u = c * rng.gen_range(-3.0..3.0);
    (Primitive::new(rho, u, rng.gen_range(-1.0..1.0), p), MaterialEos { gamma, p_inf })
}

#[test]
fn exact_solver_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(20240521);
    let cases: Vec<RiemannInput> = (0..1000)
        .map(|_| {
            let (l, el) = random_side(&mut rng);
            let (r, er) = random_side(&mut rng);
            RiemannInput::new(l, r, el, er)
        })
        .collect();
    let start = Instant::now();
    let (mut worst, mut vacua, mut missed, mut spurious, mut other) = (0.0f64, 0, 0, 0, 0);
    for inp in &cases {
        let got = riemann::solve_star(inp);
        match (oracle_p_star(inp), got) {
            (None, Err(Error::Vacuum { .. })) => vacua += 1,
            (None, _) => missed += 1,
            (Some(_), Err(Error::Vacuum { .. })) => spurious += 1,
            (Some(_), Err(_)) => other += 1,
            (Some(p), Ok(s)) => {
                let scale = p.abs().max(inp.eos_left.p_inf.min(inp.eos_right.p_inf));
                worst = worst.max((s.p_star - p).abs() / scale);
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = worst <= 1e-9 && missed == 0 && spurious == 0 && other == 0 && elapsed < 5.0;
    assert!(verdict(
        "exact-solver oracle equivalence",
        ok,
        format!(
            "1000 problems ({vacua} vacuum): worst rel p* err {worst:.2e}; vacuum false negatives {missed}, false positives {spurious}, other errors {other}; {elapsed:.3} s"
        )
    ));
}

/// `γ = 3` isentropic flow `p = ρ³`: the Riemann invariants `u ± √3 ρ` each
/// solve Burgers' equation, so the exact solution before breaking follows from
/// characteristics.
fn isentropic_pulse_error(n: usize, mode: FluxMode, t_end: f64) -> f64 {
    let eos = MaterialEos::ideal(3.0);
    let s3 = 3f64.sqrt();
    let rho0 = |x: f64| 1.0 + 0.2 * (2.0 * std::f64::consts::PI * x).sin();
    let invariant = |sign: f64, x: f64, t: f64| {
        let w0 = |x: f64| sign * s3 * rho0(x);
        let dw0 = |x: f64| sign * s3 * 0.4 * std::f64::consts::PI * (2.0 * std::f64::consts::PI * x).cos();
        let mut w = w0(x);
        for _ in 0..50 {
            let xi = x - w * t;
            let step = (w - w0(xi)) / (1.0 + t * dw0(xi));
            w -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        w
    };
    let g = Grid::new(n, 1, (0.0, 1.0), (0.0, 1.0 / n as f64)).unwrap();
    let mut f = FieldGrid::from_primitive(g, eos, |x, _| {
        let r = rho0(x);
        Primitive::new(r, 0.0, 0.0, r * r * r)
    })
    .unwrap();
    let bc = Boundaries::uniform(BcKind::Periodic);
    let params = StepParams { flux_mode: mode, ..StepParams::default() };
    let mut t = 0.0;
    while t < t_end {
        let dt = fvm::compute_dt(&g, fvm::max_signal_speed(&f, None).unwrap(), 0.45).unwrap().min(t_end - t);
        f = fvm::step_single_medium(&f, None, &bc, &params, dt).unwrap().0;
        t += dt;
    }
    let gauss = [
        (-0.8611363115940526, 0.3478548451374538),
        (-0.3399810435848563, 0.6521451548625461),
        (0.3399810435848563, 0.6521451548625461),
        (0.8611363115940526, 0.3478548451374538),
    ];
    (0..n)
        .map(|i| {
            let exact: f64 = gauss
                .iter()
                .map(|&(a, w)| {
                    let x = g.xc(i) + 0.5 * a * g.dx;
                    0.5 * w * (invariant(1.0, x, t) - invariant(-1.0, x, t)) / (2.0 * s3)
                })
                .sum();
            (f.primitive(i).unwrap().rho - exact).abs() * g.dx
        })
        .sum()
}

#[test]
fn convergence_orders() {
    let grids = [100, 200, 400, 800];
    let mut detail = Vec::new();
    let mut ok = true;
    for mode in [FluxMode::Grp, FluxMode::Rp] {
        let errs: Vec<f64> = grids.iter().map(|&n| isentropic_pulse_error(n, mode, 0.1)).collect();
        let orders: Vec<f64> = errs.windows(2).map(|e| (e[0] / e[1]).log2()).collect();
        let finest = *orders.last().unwrap();
        ok &= match mode {
            FluxMode::Grp => finest >= 1.8,
            FluxMode::Rp => finest <= 1.3,
        };
        detail.push(format!(
            "{mode}: L1 {} orders {}",
            errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join("/"),
            orders.iter().map(|o| format!("{o:.2}")).collect::<Vec<_>>().join("/")
        ));
    }
    assert!(verdict("convergence orders (GRP >= 1.8, RP <= 1.3)", ok, detail.join("; ")));
}

#[test]
fn sod_benchmark() {
    let n = 400;
    let eos = AIR;
    let (wl, wr) = (Primitive::new(1.0, 0.0, 0.0, 1.0), Primitive::new(0.125, 0.0, 0.0, 0.1));
    let g = Grid::new(n, 1, (0.0, 1.0), (0.0, 1.0 / n as f64)).unwrap();
    let start = Instant::now();
    let mut f = FieldGrid::from_primitive(g, eos, |x, _| if x < 0.5 { wl } else { wr }).unwrap();
    let bc =
        Boundaries { left: BcKind::Outflow, right: BcKind::Outflow, bottom: BcKind::Periodic, top: BcKind::Periodic };
    let params = StepParams { flux_mode: FluxMode::Grp, ..StepParams::default() };
    let (mut t, t_end) = (0.0, 0.2);
    while t < t_end {
        let dt = fvm::compute_dt(&g, fvm::max_signal_speed(&f, None).unwrap(), 0.45).unwrap().min(t_end - t);
        f = fvm::step_single_medium(&f, None, &bc, &params, dt).unwrap().0;
        t += dt;
    }
    let elapsed = start.elapsed().as_secs_f64();
    let input = RiemannInput::single(wl, wr, eos);
    let star = riemann::solve_star(&input).unwrap();
    let err: f64 = (0..n)
        .map(|i| {
            // Exact cell average by midpoint sub-sampling.
            let m = 64;
            let exact: f64 = (0..m)
                .map(|s| {
                    let x = g.x0 + (i as f64 + (s as f64 + 0.5) / m as f64) * g.dx;
                    riemann::sample(&input, &star, (x - 0.5) / t).rho
                })
                .sum::<f64>()
                / m as f64;
            (f.primitive(i).unwrap().rho - exact).abs() * g.dx
        })
        .sum();
    assert!(verdict(
        "Sod benchmark",
        err < 5e-3 && elapsed < 10.0,
        format!("L1 density error {err:.3e}; {elapsed:.3} s")
    ));
}

#[test]
fn equilibrium_interface() {
    let mut detail = Vec::new();
    let mut ok = true;
    for (flux, gfm) in [
        (FluxMode::Rp, GfmMode::Rp),
        (FluxMode::Grp, GfmMode::Grp),
        (FluxMode::Grp, GfmMode::Rp),
        (FluxMode::Rp, GfmMode::Grp),
    ] {
        let mut sc = build_scenario("manufactured-equilibrium", None).unwrap();
        sc.numerics.flux = flux;
        sc.numerics.gfm = gfm;
        let mut sim = Simulation::new(sc).unwrap();
        let r = sim.run(|_| Ok(())).unwrap();
        let ratio = sim.max_speed_ratio().unwrap();
        ok &= r.steps == 100 && ratio < 1e-10;
        detail.push(format!("{flux}/{gfm}: {} steps, max|u|/c {ratio:.2e}", r.steps));
    }
    assert!(verdict("equilibrium interface", ok, detail.join("; ")));
}

/// Largest primitive deviation of a two-medium run from the single-medium
/// reference advanced with the same time steps.
fn linear_deviation(gfm: GfmMode) -> f64 {
    let mut sc = build_scenario("manufactured-linear", None).unwrap();
    sc.numerics.gfm = gfm;
    let steps = sc.numerics.max_steps.unwrap();
    let mut sim = Simulation::new(sc.clone()).unwrap();
    let mut reference = sim.fields[0].clone();
    let bc = sc.boundaries().unwrap();
    let params = sc.step_params().unwrap();
    for _ in 0..steps {
        let dt = sim.advance(f64::INFINITY).unwrap();
        reference = fvm::step_single_medium(&reference, None, &bc, &params, dt).unwrap().0;
    }
    let composed = sim.composed().unwrap();
    let mut worst = 0.0f64;
    for (k, w) in composed.iter().enumerate() {
        let r = reference.primitive(k).unwrap();
        for (a, b) in w.to_array().iter().zip(r.to_array()) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

#[test]
fn linear_reproduction() {
    let grp = linear_deviation(GfmMode::Grp);
    let rp = linear_deviation(GfmMode::Rp);
    assert!(verdict(
        "linear-reproduction GFM property",
        grp < 1e-6 && rp > 10.0 * grp,
        format!("10 steps: GRP ghosts deviate {grp:.2e}, RP ghosts {rp:.2e} (ratio {:.1e})", rp / grp)
    ));
}

#[test]
fn conservation() {
    let mut detail = Vec::new();
    let mut ok = true;
    for (flux, gfm) in [(FluxMode::Grp, GfmMode::Grp), (FluxMode::Rp, GfmMode::Rp)] {
        let mut sc = build_scenario("closed-box", None).unwrap();
        sc.numerics.flux = flux;
        sc.numerics.gfm = gfm;
        let mut sim = Simulation::new(sc).unwrap();
        let m0 = sim.total_mass().unwrap();
        let r = sim.run(|_| Ok(())).unwrap();
        let drift = rel(sim.total_mass().unwrap(), m0);
        ok &= r.steps == 100 && drift < 1e-10;
        detail.push(format!("{flux}/{gfm}: {} steps, relative mass drift {drift:.2e}", r.steps));
    }
    assert!(verdict("conservation", ok, detail.join("; ")));
}

#[test]
fn desk_shock_helium_bubble() {
    let sc = build_scenario("shock-helium-bubble", Some((275, 45))).unwrap();
    assert_eq!(sc.numerics.gfm, GfmMode::Grp);
    let start = Instant::now();
    let mut sim = Simulation::new(sc.clone()).unwrap();
    let outcome = sim.run(|_| Ok(()));
    let elapsed = start.elapsed().as_secs_f64();
    let (ok, detail) = match outcome {
        Ok(r) => {
            let v0 = r.initial_volume;
            let shrunk = r.snapshots.iter().all(|s| s.bubble_volume < 0.8 * v0);
            let done = (r.final_time - sc.numerics.end_time).abs() <= 1e-12 * sc.numerics.end_time;
            let vols: Vec<String> = r
                .snapshots
                .iter()
                .map(|s| format!("{:.0}us {:.1}%", s.time * 1e6, 100.0 * (1.0 - s.bubble_volume / v0)))
                .collect();
            (
                done && elapsed < 600.0 && shrunk && r.clamps == 0,
                format!(
                    "reached {:.1} us in {elapsed:.1} s ({} steps); volume decrease {}; positivity clamps {}",
                    r.final_time * 1e6,
                    r.steps,
                    vols.join(", "),
                    r.clamps
                ),
            )
        }
        Err(e) => (false, format!("run failed after {elapsed:.1} s: {e}")),
    };
    assert!(verdict("desk-scale shock-helium-bubble", ok, detail));
}

#[test]
fn desk_bubble_collapse() {
    let mut detail = Vec::new();
    let mut ok = true;
    for mode in [(FluxMode::Grp, GfmMode::Grp), (FluxMode::Rp, GfmMode::Rp)] {
        let mut sc = build_scenario("bubble-collapse-water", Some((60, 75))).unwrap();
        sc.numerics.flux = mode.0;
        sc.numerics.gfm = mode.1;
        let end = sc.numerics.end_time;
        let mut sim = Simulation::new(sc).unwrap();
        match sim.run(|_| Ok(())) {
            Ok(r) => {
                let vols: Vec<f64> = r.snapshots.iter().map(|s| s.bubble_volume).collect();
                let decreasing = vols.len() == 4 && vols.windows(2).all(|v| v[1] < v[0]) && vols[0] < r.initial_volume;
                let done = (r.final_time - end).abs() <= 1e-12 * end;
                let peak_ok = mode.0 == FluxMode::Rp || r.peak_pressure >= 19000.0;
                ok &= done && decreasing && peak_ok;
                detail.push(format!(
                    "{}/{}: reached t {} volumes {:.2} -> {}; peak p {:.4e}",
                    mode.0,
                    mode.1,
                    r.final_time,
                    r.initial_volume,
                    vols.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>().join(", "),
                    r.peak_pressure
                ));
            }
            Err(e) => {
                ok = false;
                detail.push(format!("{}/{}: failed: {e}", mode.0, mode.1));
            }
        }
    }
    assert!(verdict("desk-scale bubble collapse", ok, detail.join("; ")));
}

#[test]
fn grp_rp_flux_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < 10_000 {
        let (l, el) = random_side(&mut rng);
        let (r, er) = random_side(&mut rng);
        let er = if rng.gen_bool(0.5) { el } else { er };
        let inp = RiemannInput::new(l, r, el, er);
        let Ok(rp) = riemann::interface_flux_rp(&inp) else { continue };
        let grp = grp::interface_flux_grp(
            &inp,
            &[0.0; 4],
            &[0.0; 4],
            &TangentialSourceTerm::ZERO,
            1e-3,
            1e-2,
            grp::DEFAULT_K_ACOUSTIC,
        )
        .unwrap();
        let scale = rp.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = rp.iter().zip(&grp.flux).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        worst = worst.max(diff / scale);
        n += 1;
    }
    assert!(verdict(
        "GRP/RP flux consistency",
        worst <= 1e-12,
        format!("{n} states: worst relative difference {worst:.2e}")
    ));
}
