//! Lifted fields: grid samples of the angle `phi` with `u = e^{i phi}`.
//!
//! Values are cell-centered and `u` is piecewise constant (nearest-cell
//! lookup). The analysis ball `B_R` is centered at the domain center.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::fmt_f64;

/// Minimum number of cells per axis.
pub const MIN_CELLS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftedField {
    pub nx: usize,
    pub ny: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Row-major values, row 0 at `y_min`.
    pub phi: Vec<f64>,
    pub m: f64,
    pub r: f64,
}

impl LiftedField {
    /// Validating constructor.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        nx: usize,
        ny: usize,
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        phi: Vec<f64>,
        m: f64,
        r: f64,
    ) -> Result<Self> {
        let f = LiftedField {
            nx,
            ny,
            x_min,
            x_max,
            y_min,
            y_max,
            phi,
            m,
            r,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < MIN_CELLS || self.ny < MIN_CELLS {
            return Err(Error::Resolution(format!(
                "grid {}x{} is below the minimum of {MIN_CELLS} cells per axis",
                self.nx, self.ny
            )));
        }
        if self.phi.len() != self.nx * self.ny {
            return Err(Error::Resolution(format!(
                "expected {} values, got {}",
                self.nx * self.ny,
                self.phi.len()
            )));
        }
        if !(self.x_max > self.x_min && self.y_max > self.y_min) {
            return Err(Error::Geometry("empty domain rectangle".into()));
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::OutOfRange(format!(
                "M = {} must be positive",
                self.m
            )));
        }
        if !(self.r > 0.0) || self.boundary_gap() <= 0.0 {
            return Err(Error::Geometry(format!(
                "ball of radius {} is not strictly inside the domain",
                self.r
            )));
        }
        for j in 0..self.ny {
            for i in 0..self.nx {
                let v = self.phi(i, j);
                if !(0.0..=self.m).contains(&v) {
                    return Err(Error::Range {
                        i,
                        j,
                        msg: format!("phi = {v} outside [0, {}]", self.m),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / self.ny as f64
    }

    /// Larger of the two spacings.
    pub fn h(&self) -> f64 {
        self.dx().max(self.dy())
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn center(&self) -> [f64; 2] {
        [
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        ]
    }

    pub fn phi(&self, i: usize, j: usize) -> f64 {
        self.phi[j * self.nx + i]
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.x_min + (i as f64 + 0.5) * self.dx(),
            self.y_min + (j as f64 + 0.5) * self.dy(),
        ]
    }

    /// Center of lattice cell `(i, j)`, allowing indices outside the grid.
    pub fn lattice_point(&self, i: i64, j: i64) -> [f64; 2] {
        [
            self.x_min + (i as f64 + 0.5) * self.dx(),
            self.y_min + (j as f64 + 0.5) * self.dy(),
        ]
    }

    /// Cell containing `p`, clamped to the grid.
    pub fn cell_of(&self, p: [f64; 2]) -> (usize, usize) {
        let i = ((p[0] - self.x_min) / self.dx()).floor();
        let j = ((p[1] - self.y_min) / self.dy()).floor();
        (
            i.clamp(0.0, (self.nx - 1) as f64) as usize,
            j.clamp(0.0, (self.ny - 1) as f64) as usize,
        )
    }

    /// Nearest-cell value of `phi` at `p`.
    pub fn phi_at(&self, p: [f64; 2]) -> f64 {
        let (i, j) = self.cell_of(p);
        self.phi(i, j)
    }

    /// Strict membership in the open ball `B_R`.
    pub fn in_ball(&self, p: [f64; 2]) -> bool {
        let c = self.center();
        let dx = p[0] - c[0];
        let dy = p[1] - c[1];
        dx * dx + dy * dy < self.r * self.r
    }

    /// Distance from the closed ball to the domain boundary.
    pub fn boundary_gap(&self) -> f64 {
        let c = self.center();
        let gaps = [
            c[0] - self.x_min,
            self.x_max - c[0],
            c[1] - self.y_min,
            self.y_max - c[1],
        ];
        gaps.iter().cloned().fold(f64::INFINITY, f64::min) - self.r
    }

    /// Unit field `u = e^{i phi}` per cell.
    pub fn unit_field(&self) -> Vec<[f64; 2]> {
        self.phi.iter().map(|p| [p.cos(), p.sin()]).collect()
    }
}

/// Read a grid file.
pub fn load_field(path: impl AsRef<Path>) -> Result<LiftedField> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_field(&text)
}

/// Parse grid-file text: a header `nx ny x_min x_max y_min y_max M R`
/// followed by `ny` rows of `nx` values, first row at `y_min`.
pub fn parse_field(text: &str) -> Result<LiftedField> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 8 {
        return Err(Error::Parse {
            line: hline,
            msg: format!("header needs 8 fields, found {}", tokens.len()),
        });
    }
    let parse_usize = |s: &str| {
        s.parse::<usize>().map_err(|_| Error::Parse {
            line: hline,
            msg: format!("bad grid size `{s}`"),
        })
    };
    let nx = parse_usize(tokens[0])?;
    let ny = parse_usize(tokens[1])?;
    let mut hv = [0.0; 6];
    for (k, t) in tokens[2..].iter().enumerate() {
        hv[k] = parse_number(t).map_err(|msg| Error::Parse { line: hline, msg })?;
    }
    let mut phi = Vec::with_capacity(nx * ny);
    let mut last_line = hline;
    for row in 0..ny {
        let (ln, line) = lines.next().ok_or(Error::Parse {
            line: last_line + 1,
            msg: format!("missing row {row} of {ny}"),
        })?;
        last_line = ln;
        let vals: Vec<&str> = line.split_whitespace().collect();
        if vals.len() != nx {
            return Err(Error::Parse {
                line: ln,
                msg: format!("expected {nx} values, found {}", vals.len()),
            });
        }
        for v in vals {
            phi.push(parse_number(v).map_err(|msg| Error::Parse { line: ln, msg })?);
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(Error::Parse {
            line: ln,
            msg: "trailing data after the last row".into(),
        });
    }
    LiftedField::new(nx, ny, hv[0], hv[1], hv[2], hv[3], phi, hv[4], hv[5])
}

/// Serialize in the grid-file format.
pub fn field_to_string(f: &LiftedField) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} {} {} {} {} {} {} {}",
        f.nx,
        f.ny,
        fmt_f64(f.x_min),
        fmt_f64(f.x_max),
        fmt_f64(f.y_min),
        fmt_f64(f.y_max),
        fmt_f64(f.m),
        fmt_f64(f.r)
    );
    for j in 0..f.ny {
        let row: Vec<String> = (0..f.nx).map(|i| fmt_f64(f.phi(i, j))).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s
}

pub fn save_field(f: &LiftedField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, field_to_string(f)).map_err(|e| Error::io(path, e))
}

/// Parse a number, accepting multiples and fractions of `pi`
/// such as `pi`, `5pi/6`, `5*pi/6`, `-pi/4`.
pub fn parse_number(s: &str) -> std::result::Result<f64, String> {
    let t = s.trim();
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let Some(pos) = t.find("pi") else {
        return Err(format!("bad number `{s}`"));
    };
    let coef = t[..pos].trim_end_matches('*');
    let coef = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| format!("bad number `{s}`"))?,
    };
    let rest = &t[pos + 2..];
    let den = if rest.is_empty() {
        1.0
    } else if let Some(d) = rest.strip_prefix('/') {
        d.parse::<f64>().map_err(|_| format!("bad number `{s}`"))?
    } else {
        return Err(format!("bad number `{s}`"));
    };
    Ok(coef * PI / den)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Builtin {
    Constant,
    SingleJump,
    TwoJump,
    Vortex,
    Rarefaction,
}

impl std::str::FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(Builtin::Constant),
            "single_jump" => Ok(Builtin::SingleJump),
            "two_jump" => Ok(Builtin::TwoJump),
            "vortex" => Ok(Builtin::Vortex),
            "rarefaction" => Ok(Builtin::Rarefaction),
            other => Err(Error::Usage(format!("unknown builtin field `{other}`"))),
        }
    }
}

/// Parameters of a builtin family, by name.
pub type BuiltinParams = BTreeMap<String, f64>;

/// Parse `k=v,k=v` into parameters.
pub fn parse_params(s: &str) -> Result<BuiltinParams> {
    let mut out = BuiltinParams::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("parameter `{item}` is not key=value")))?;
        let v = parse_number(v).map_err(Error::Usage)?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

/// Resolve a `--field` argument: either a grid-file path or
/// `builtin:name[:k=v,...]`.
pub fn field_from_spec(spec: &str) -> Result<LiftedField> {
    match spec.strip_prefix("builtin:") {
        Some(rest) => {
            let (name, params) = rest.split_once(':').unwrap_or((rest, ""));
            make_builtin(name.parse()?, &parse_params(params)?)
        }
        None => load_field(spec),
    }
}

/// Analytic description of a straight jump line, used by oracles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpLine {
    /// A point on the line.
    pub point: [f64; 2],
    /// Unit normal pointing from the `phi_minus` side to the `phi_plus` side.
    pub normal: [f64; 2],
    pub phi_minus: f64,
    pub phi_plus: f64,
}

impl JumpLine {
    /// Signed distance, positive on the `phi_plus` side.
    pub fn signed_distance(&self, p: [f64; 2]) -> f64 {
        (p[0] - self.point[0]) * self.normal[0] + (p[1] - self.point[1]) * self.normal[1]
    }

    pub fn trace_mismatch(&self) -> f64 {
        let n = self.normal;
        let fm = self.phi_minus.cos() * n[0] + self.phi_minus.sin() * n[1];
        let fp = self.phi_plus.cos() * n[0] + self.phi_plus.sin() * n[1];
        (fm - fp).abs()
    }
}

struct Getter<'a> {
    params: &'a BuiltinParams,
    used: Vec<&'static str>,
}

impl Getter<'_> {
    fn get(&mut self, key: &'static str, default: f64) -> f64 {
        self.used.push(key);
        self.params.get(key).copied().unwrap_or(default)
    }

    fn finish(self) -> Result<()> {
        for k in self.params.keys() {
            if !self.used.iter().any(|u| u == k) {
                return Err(Error::Usage(format!("unknown field parameter `{k}`")));
            }
        }
        Ok(())
    }
}

/// Jump line of a `single_jump` builtin with the given parameters.
pub fn single_jump_line(params: &BuiltinParams) -> JumpLine {
    let mut g = Getter {
        params,
        used: Vec::new(),
    };
    jump_line_from(&mut g, [0.0, 0.0], 0.0)
}

fn jump_line_from(g: &mut Getter, center: [f64; 2], shift: f64) -> JumpLine {
    let phi_minus = g.get("phi_minus", PI / 6.0);
    let phi_plus = g.get("phi_plus", 5.0 * PI / 6.0);
    let angle = g.get("angle", FRAC_PI_2);
    let offset = g.get("offset", 0.0) + shift;
    let normal = [angle.cos(), angle.sin()];
    JumpLine {
        point: [
            center[0] + offset * normal[0],
            center[1] + offset * normal[1],
        ],
        normal,
        phi_minus,
        phi_plus,
    }
}

/// Build a test field. Common parameters: `nx` (64), `ny` (= nx),
/// `half` (half-width of the square domain, 1.25), `r` (1), `m`.
pub fn make_builtin(kind: Builtin, params: &BuiltinParams) -> Result<LiftedField> {
    let mut g = Getter {
        params,
        used: Vec::new(),
    };
    let nx = g.get("nx", 64.0);
    let ny = g.get("ny", nx);
    if nx.fract() != 0.0 || ny.fract() != 0.0 || nx < 1.0 || ny < 1.0 {
        return Err(Error::Usage("nx and ny must be positive integers".into()));
    }
    let (nx, ny) = (nx as usize, ny as usize);
    let half = g.get("half", 1.25);
    let r = g.get("r", 1.0);
    let center = [0.0, 0.0];
    let (x_min, x_max, y_min, y_max) = (-half, half, -half, half);
    let dx = 2.0 * half / nx as f64;
    let dy = 2.0 * half / ny as f64;
    let cell = |i: usize, j: usize| [x_min + (i as f64 + 0.5) * dx, y_min + (j as f64 + 0.5) * dy];
    let fill = |f: &dyn Fn([f64; 2]) -> f64| -> Vec<f64> {
        let mut v = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                v.push(f(cell(i, j)));
            }
        }
        v
    };
    let (phi, m) = match kind {
        Builtin::Constant => {
            let value = g.get("phi", PI);
            let m = g.get("m", 2.0 * PI);
            (fill(&|_| value), m)
        }
        Builtin::SingleJump => {
            let line = jump_line_from(&mut g, center, 0.0);
            let m = g.get("m", PI);
            check_trace(&line)?;
            (
                fill(&|p| {
                    if line.signed_distance(p) > 0.0 {
                        line.phi_plus
                    } else {
                        line.phi_minus
                    }
                }),
                m,
            )
        }
        Builtin::TwoJump => {
            let d = g.get("d", 0.4);
            let lower = jump_line_from(&mut g, center, -d);
            let upper = JumpLine {
                point: [
                    lower.point[0] + 2.0 * d * lower.normal[0],
                    lower.point[1] + 2.0 * d * lower.normal[1],
                ],
                ..lower
            };
            let m = g.get("m", PI);
            check_trace(&lower)?;
            (
                fill(&|p| {
                    if lower.signed_distance(p) > 0.0 && upper.signed_distance(p) <= 0.0 {
                        lower.phi_plus
                    } else {
                        lower.phi_minus
                    }
                }),
                m,
            )
        }
        Builtin::Vortex => {
            let cx = g.get("cx", 0.0);
            let cy = g.get("cy", 0.0);
            let m = g.get("m", 2.5 * PI);
            (
                fill(&|p| {
                    let mut th = (p[1] - cy).atan2(p[0] - cx);
                    if th < 0.0 {
                        th += 2.0 * PI;
                    }
                    th + FRAC_PI_2
                }),
                m,
            )
        }
        Builtin::Rarefaction => {
            let cx = g.get("cx", -2.0);
            let cy = g.get("cy", 0.0);
            let lo = g.get("theta_lo", -PI / 6.0);
            let hi = g.get("theta_hi", PI / 6.0);
            let m = g.get("m", PI);
            if !(lo < hi) {
                return Err(Error::Usage("theta_lo must be below theta_hi".into()));
            }
            (
                fill(&|p| (p[1] - cy).atan2(p[0] - cx).clamp(lo, hi) + FRAC_PI_2),
                m,
            )
        }
    };
    g.finish()?;
    LiftedField::new(nx, ny, x_min, x_max, y_min, y_max, phi, m, r)
}

fn check_trace(line: &JumpLine) -> Result<()> {
    let mismatch = line.trace_mismatch();
    if mismatch > 1e-12 {
        return Err(Error::InconsistentJump { mismatch });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub l1_residual: f64,
    /// Cell at the center of the worst test function.
    pub worst_cell: (usize, usize),
    pub tolerance: f64,
    pub passed: bool,
}

/// Profile `b(t) = (1 - t^2)^2` on `[-1, 1]`.
pub(crate) fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        let s = 1.0 - t * t;
        s * s
    }
}

pub(crate) fn bump_prime(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        -4.0 * t * (1.0 - t * t)
    }
}

/// Antiderivative of `bump` with the argument clamped to `[-1, 1]`.
pub(crate) fn bump_integral(t: f64) -> f64 {
    let t = t.clamp(-1.0, 1.0);
    let t3 = t * t * t;
    t - 2.0 * t3 / 3.0 + t3 * t * t / 5.0
}

/// `sup |b'| = 8 / (3 sqrt 3)`.
pub(crate) const BUMP_PRIME_SUP: f64 = 1.539_600_717_839_002;

/// `int |grad (b(X) b(Y))| dX dY` over the unit square `[-1,1]^2`.
fn grad_l1_reference() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        let n = 2000;
        let h = 2.0 / n as f64;
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let t = -1.0 + (k as f64 + 0.5) * h;
                (bump(t), bump_prime(t))
            })
            .collect();
        let mut acc = 0.0;
        for &(bx, dbx) in &pts {
            for &(by, dby) in &pts {
                acc += ((dbx * by).powi(2) + (bx * dby).powi(2)).sqrt();
            }
        }
        acc * h * h
    })
}

/// Tensor bump centers and scales used by the weak divergence test.
fn divergence_tests(f: &LiftedField) -> Vec<([f64; 2], f64)> {
    let w = (f.x_max - f.x_min).min(f.y_max - f.y_min);
    let mut out = Vec::new();
    for k in 0..3 {
        let s = 0.25 * w / (1 << k) as f64;
        let step = 0.5 * s;
        let mut cy = f.y_min + s;
        while cy <= f.y_max - s + 1e-12 {
            let mut cx = f.x_min + s;
            while cx <= f.x_max - s + 1e-12 {
                out.push(([cx, cy], s));
                cx += step;
            }
            cy += step;
        }
    }
    out
}

/// Exact integral of `v . grad psi` for a tensor bump against a
/// piecewise-constant cell field.
pub(crate) fn bump_flux(f: &LiftedField, v: &[[f64; 2]], c: [f64; 2], s: f64) -> f64 {
    bump_flux_by(f, c, s, |k| v[k])
}

/// As [`bump_flux`] with the cell field given by a closure over the
/// row-major cell index.
pub(crate) fn bump_flux_by(
    f: &LiftedField,
    c: [f64; 2],
    s: f64,
    v: impl Fn(usize) -> [f64; 2],
) -> f64 {
    let (dx, dy) = (f.dx(), f.dy());
    let i0 = (((c[0] - s - f.x_min) / dx).floor().max(0.0)) as usize;
    let i1 = ((((c[0] + s - f.x_min) / dx).ceil()) as usize).min(f.nx);
    let j0 = (((c[1] - s - f.y_min) / dy).floor().max(0.0)) as usize;
    let j1 = ((((c[1] + s - f.y_min) / dy).ceil()) as usize).min(f.ny);
    let col = |i: usize, origin: f64, step: f64, cen: f64| {
        let a = (origin + i as f64 * step - cen) / s;
        let b = (origin + (i + 1) as f64 * step - cen) / s;
        (bump(b) - bump(a), bump_integral(b) - bump_integral(a))
    };
    let xs: Vec<(f64, f64)> = (i0..i1).map(|i| col(i, f.x_min, dx, c[0])).collect();
    let ys: Vec<(f64, f64)> = (j0..j1).map(|j| col(j, f.y_min, dy, c[1])).collect();
    let mut acc = 0.0;
    for (jj, &(dby, iby)) in ys.iter().enumerate() {
        let row = (j0 + jj) * f.nx;
        for (ii, &(dbx, ibx)) in xs.iter().enumerate() {
            let u = v(row + i0 + ii);
            acc += u[0] * dbx * iby + u[1] * ibx * dby;
        }
    }
    acc * s
}

/// Weak divergence residual of an arbitrary cell field.
pub fn weak_divergence_residual(f: &LiftedField, v: &[[f64; 2]], tol: f64) -> DivergenceReport {
    let tests = divergence_tests(f);
    let cref = grad_l1_reference();
    let vals: Vec<f64> = tests
        .par_iter()
        .map(|&(c, s)| bump_flux(f, v, c, s).abs() / (s * cref))
        .collect();
    let mut worst = 0usize;
    let mut best = 0.0;
    for (k, &r) in vals.iter().enumerate() {
        if r > best {
            best = r;
            worst = k;
        }
    }
    let worst_cell = tests.get(worst).map(|t| f.cell_of(t.0)).unwrap_or((0, 0));
    DivergenceReport {
        l1_residual: best,
        worst_cell,
        tolerance: tol,
        passed: best <= tol,
    }
}

pub fn check_divergence_free(f: &LiftedField, tol: f64) -> DivergenceReport {
    weak_divergence_residual(f, &f.unit_field(), tol)
}

/// Mean absolute deviation of `phi` over a disk of about 2.5 cells around
/// each of `samples` equally spaced points of the circle of radius `r`.
/// Returns `(angle, oscillation)` pairs.
pub fn boundary_lebesgue_scan(f: &LiftedField, r: f64, samples: usize) -> Result<Vec<(f64, f64)>> {
    if samples < 16 {
        return Err(Error::OutOfRange(format!(
            "boundary scan needs at least 16 samples, got {samples}"
        )));
    }
    let c = f.center();
    let rho = 2.5 * f.h();
    Ok((0..samples)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / samples as f64;
            let p = [c[0] + r * th.cos(), c[1] + r * th.sin()];
            (th, disk_oscillation(f, p, rho))
        })
        .collect())
}

/// Cell values whose centers lie in the open disk `B_rho(p)`.
pub(crate) fn disk_values(f: &LiftedField, p: [f64; 2], rho: f64) -> Vec<f64> {
    let (dx, dy) = (f.dx(), f.dy());
    let i0 = ((p[0] - rho - f.x_min) / dx - 0.5).floor().max(0.0) as usize;
    let i1 = (((p[0] + rho - f.x_min) / dx - 0.5).ceil().max(0.0) as usize).min(f.nx - 1);
    let j0 = ((p[1] - rho - f.y_min) / dy - 0.5).floor().max(0.0) as usize;
    let j1 = (((p[1] + rho - f.y_min) / dy - 0.5).ceil().max(0.0) as usize).min(f.ny - 1);
    let mut out = Vec::new();
    for j in j0..=j1 {
        for i in i0..=i1 {
            let q = f.cell_center(i, j);
            if (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2) < rho * rho {
                out.push(f.phi(i, j));
            }
        }
    }
    out
}

fn disk_oscillation(f: &LiftedField, p: [f64; 2], rho: f64) -> f64 {
    let vals = disk_values(f, p, rho);
    if vals.is_empty() {
        return 0.0;
    }
    abs_deviation(&vals) / vals.len() as f64
}

/// `sum |v - mean|`, exactly zero for constant input.
pub(crate) fn abs_deviation(vals: &[f64]) -> f64 {
    let Some(&base) = vals.first() else {
        return 0.0;
    };
    let mean = base + vals.iter().fold(0.0, |s, v| s + (v - base)) / vals.len() as f64;
    vals.iter().fold(0.0, |s, v| s + (v - mean).abs())
}
