//! Scenario files (TOML), plain-text snapshots, legacy VTK output and a
//! numerical schlieren field.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fvm::FluxMode;
use crate::gfm::GfmMode;
use crate::grid::Grid;
use crate::sim::{Scenario, Snapshot};
use crate::state::Primitive;

pub const SNAPSHOT_SCHEMA: u32 = 1;
pub const DEFAULT_SCHLIEREN_K: f64 = 15.0;
const COLUMNS: &str = "i j x y phi medium rho u v p";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

/// Parses and validates a scenario document.
pub fn parse_scenario_str(text: &str, path: &Path) -> Result<Scenario> {
    let sc: Scenario =
        toml::from_str(text).map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })?;
    sc.validate().map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })?;
    Ok(sc)
}

pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_scenario_str(&text, path)
}

/// Canonical TOML form; parsing it gives back the same scenario.
pub fn print_scenario(sc: &Scenario) -> Result<String> {
    toml::to_string(sc).map_err(|e| Error::Internal(format!("scenario serialization: {e}")))
}

/// Writes the snapshot text format; floats carry 17 significant digits.
pub fn format_snapshot(s: &Snapshot) -> String {
    let g = &s.grid;
    let mut out = String::with_capacity(160 * g.len() + 512);
    let _ = writeln!(out, "# grp-gfm snapshot");
    let _ = writeln!(out, "# schema = {SNAPSHOT_SCHEMA}");
    let _ = writeln!(out, "# time = {:.16e}", s.time);
    let _ = writeln!(out, "# step = {}", s.step);
    let _ = writeln!(out, "# nx = {}", g.nx);
    let _ = writeln!(out, "# ny = {}", g.ny);
    let _ = writeln!(out, "# x0 = {:.16e}", g.x0);
    let _ = writeln!(out, "# y0 = {:.16e}", g.y0);
    let _ = writeln!(out, "# dx = {:.16e}", g.dx);
    let _ = writeln!(out, "# dy = {:.16e}", g.dy);
    let _ = writeln!(out, "# flux = {}", s.flux_mode);
    let _ = writeln!(out, "# gfm = {}", s.gfm_mode);
    let _ = writeln!(out, "# columns = {COLUMNS}");
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.idx(i, j);
            let w = &s.prims[k];
            let _ = writeln!(
                out,
                "{i} {j} {:.16e} {:.16e} {:.16e} {} {:.16e} {:.16e} {:.16e} {:.16e}",
                g.xc(i),
                g.yc(j),
                s.phi[k],
                s.medium[k],
                w.rho,
                w.ux,
                w.uy,
                w.p
            );
        }
    }
    out
}

pub fn write_snapshot(s: &Snapshot, path: &Path) -> Result<()> {
    let f = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(f);
    w.write_all(format_snapshot(s).as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn parse_snapshot(text: &str, path: &Path) -> Result<Snapshot> {
    let bad = |line: usize, m: String| Error::Parse { path: path.to_path_buf(), message: format!("line {line}: {m}") };
    let mut header = std::collections::HashMap::new();
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if let Some(h) = line.strip_prefix('#') {
            if let Some((k, v)) = h.split_once('=') {
                header.insert(k.trim().to_string(), (n + 1, v.trim().to_string()));
            }
        } else if !line.trim().is_empty() {
            rows.push((n + 1, line));
        }
    }
    let get = |k: &str| -> Result<&(usize, String)> {
        header.get(k).ok_or_else(|| bad(0, format!("missing header field '{k}'")))
    };
    let num = |k: &str| -> Result<f64> {
        let (l, v) = get(k)?;
        v.parse().map_err(|_| bad(*l, format!("bad value for '{k}': {v}")))
    };
    let int = |k: &str| -> Result<usize> {
        let (l, v) = get(k)?;
        v.parse().map_err(|_| bad(*l, format!("bad value for '{k}': {v}")))
    };
    let schema = int("schema")?;
    if schema as u32 != SNAPSHOT_SCHEMA {
        return Err(bad(get("schema")?.0, format!("unsupported snapshot schema {schema}")));
    }
    let (nx, ny) = (int("nx")?, int("ny")?);
    let grid = Grid { nx, ny, x0: num("x0")?, y0: num("y0")?, dx: num("dx")?, dy: num("dy")? };
    let mode = |k: &str| -> Result<String> { Ok(get(k)?.1.clone()) };
    let flux_mode = match mode("flux")?.as_str() {
        "rp" => FluxMode::Rp,
        "grp" => FluxMode::Grp,
        other => return Err(bad(get("flux")?.0, format!("unknown flux mode '{other}'"))),
    };
    let gfm_mode = match mode("gfm")?.as_str() {
        "rp" => GfmMode::Rp,
        "grp" => GfmMode::Grp,
        other => return Err(bad(get("gfm")?.0, format!("unknown gfm mode '{other}'"))),
    };
    if rows.len() != nx * ny {
        return Err(bad(0, format!("expected {} rows, found {}", nx * ny, rows.len())));
    }
    let mut phi = vec![0.0; nx * ny];
    let mut medium = vec![0u8; nx * ny];
    let mut prims = vec![Primitive::default(); nx * ny];
    for (n, line) in rows {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 10 {
            return Err(bad(n, format!("expected 10 columns, found {}", f.len())));
        }
        let p = |s: &str| -> Result<f64> { s.parse().map_err(|_| bad(n, format!("bad number '{s}'"))) };
        let i: usize = f[0].parse().map_err(|_| bad(n, "bad i".into()))?;
        let j: usize = f[1].parse().map_err(|_| bad(n, "bad j".into()))?;
        if i >= nx || j >= ny {
            return Err(bad(n, format!("cell ({i}, {j}) outside the grid")));
        }
        let k = grid.idx(i, j);
        phi[k] = p(f[4])?;
        medium[k] = f[5].parse().map_err(|_| bad(n, "bad medium".into()))?;
        prims[k] = Primitive::new(p(f[6])?, p(f[7])?, p(f[8])?, p(f[9])?);
    }
    Ok(Snapshot { time: num("time")?, step: int("step")?, grid, flux_mode, gfm_mode, phi, medium, prims })
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_snapshot(&text, path)
}

/// `exp(-k |∇ρ| / max |∇ρ|)` with central differences (one-sided at edges).
pub fn schlieren(grid: &Grid, rho: &[f64], k: f64) -> Vec<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let at = |i: usize, j: usize| rho[grid.idx(i, j)];
    let diff = |lo: f64, hi: f64, span: f64| (hi - lo) / span;
    let mut mag = vec![0.0; grid.len()];
    for j in 0..ny {
        for i in 0..nx {
            let gx = if nx < 2 {
                0.0
            } else if i == 0 {
                diff(at(0, j), at(1, j), grid.dx)
            } else if i == nx - 1 {
                diff(at(i - 1, j), at(i, j), grid.dx)
            } else {
                diff(at(i - 1, j), at(i + 1, j), 2.0 * grid.dx)
            };
            let gy = if ny < 2 {
                0.0
            } else if j == 0 {
                diff(at(i, 0), at(i, 1), grid.dy)
            } else if j == ny - 1 {
                diff(at(i, j - 1), at(i, j), grid.dy)
            } else {
                diff(at(i, j - 1), at(i, j + 1), 2.0 * grid.dy)
            };
            mag[grid.idx(i, j)] = gx.hypot(gy);
        }
    }
    let max = mag.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return vec![1.0; grid.len()];
    }
    mag.iter().map(|m| (-k * m / max).exp()).collect()
}

/// Legacy-format structured-points file with cell-centred point data.
pub fn format_vtk(s: &Snapshot, schlieren_k: f64) -> String {
    let g = &s.grid;
    let mut out = String::with_capacity(120 * g.len());
    let _ = writeln!(out, "# vtk DataFile Version 3.0");
    let _ = writeln!(out, "grp-gfm t={:.16e}", s.time);
    let _ = writeln!(out, "ASCII");
    let _ = writeln!(out, "DATASET STRUCTURED_POINTS");
    let _ = writeln!(out, "DIMENSIONS {} {} 1", g.nx, g.ny);
    let _ = writeln!(out, "ORIGIN {:.16e} {:.16e} 0", g.xc(0), g.yc(0));
    let _ = writeln!(out, "SPACING {:.16e} {:.16e} 1", g.dx, g.dy);
    let _ = writeln!(out, "POINT_DATA {}", g.len());
    let rho: Vec<f64> = s.prims.iter().map(|w| w.rho).collect();
    let sch = schlieren(g, &rho, schlieren_k);
    let scalars: [(&str, Box<dyn Fn(usize) -> f64>); 7] = [
        ("rho", Box::new(|k| s.prims[k].rho)),
        ("u", Box::new(|k| s.prims[k].ux)),
        ("v", Box::new(|k| s.prims[k].uy)),
        ("p", Box::new(|k| s.prims[k].p)),
        ("phi", Box::new(|k| s.phi[k])),
        ("medium", Box::new(|k| s.medium[k] as f64)),
        ("schlieren", Box::new(|k| sch[k])),
    ];
    for (name, f) in scalars.iter() {
        let _ = writeln!(out, "SCALARS {name} double 1");
        let _ = writeln!(out, "LOOKUP_TABLE default");
        for k in 0..g.len() {
            let _ = writeln!(out, "{:.16e}", f(k));
        }
    }
    out
}

pub fn write_vtk(s: &Snapshot, schlieren_k: f64, path: &Path) -> Result<()> {
    fs::write(path, format_vtk(s, schlieren_k)).map_err(io_err(path))
}
