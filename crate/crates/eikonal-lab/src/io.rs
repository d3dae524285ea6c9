//! CSV and JSON artifact formats. Floats use 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinetic::Side;
use crate::lagrangian::{BuildStats, Curve, CurveEnsemble, Node};
use crate::measure::{Atom, DiscreteMeasure, MeasureKind};
use crate::rectifiability::{EventClass, PairingResult, Part, ShockFamily, SigmaSet};
use crate::transport::step::TransportStep;

/// Decimal with 17 significant digits, round-trip exact for `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    std::fs::write(path.as_ref(), text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: impl AsRef<Path>) -> Result<String> {
    std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path, e))
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("artifact serializes");
    s.push('\n');
    s
}

fn row(out: &mut String, cells: &[String]) {
    out.push_str(&cells.join(","));
    out.push('\n');
}

/// Measure CSV: `x,y,a,weight` for kinetic measures, `x,y,weight` otherwise.
pub fn measure_csv(mu: &DiscreteMeasure) -> String {
    let kinetic = mu.kind == MeasureKind::Kinetic;
    let mut out = String::from(if kinetic {
        "x,y,a,weight\n"
    } else {
        "x,y,weight\n"
    });
    for a in &mu.atoms {
        let mut cells = vec![fmt_f64(a.x[0]), fmt_f64(a.x[1])];
        if kinetic {
            cells.push(fmt_f64(a.a));
        }
        cells.push(fmt_f64(a.w));
        row(&mut out, &cells);
    }
    out
}

/// Rows of a CSV after checking its header.
fn csv_rows<'a>(text: &'a str, header: &str) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        Some((_, h)) => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header `{header}`, found `{h}`"),
            })
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                msg: "missing header".into(),
            })
        }
    }
    let width = header.split(',').count();
    let mut out = Vec::new();
    for (i, l) in lines {
        if l.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = l.split(',').map(str::trim).collect();
        if cells.len() != width {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("expected {width} columns, found {}", cells.len()),
            });
        }
        out.push((i + 1, cells));
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(cell: &str, line: usize) -> Result<T> {
    cell.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad number `{cell}`"),
    })
}

pub fn parse_measure_csv(text: &str, kind: MeasureKind, label: &str) -> Result<DiscreteMeasure> {
    let kinetic = kind == MeasureKind::Kinetic;
    let header = if kinetic {
        "x,y,a,weight"
    } else {
        "x,y,weight"
    };
    let mut atoms = Vec::new();
    for (line, c) in csv_rows(text, header)? {
        let x = [num(c[0], line)?, num(c[1], line)?];
        atoms.push(if kinetic {
            Atom::kinetic(x, num(c[2], line)?, num(c[3], line)?)
        } else {
            Atom::spatial(x, num(c[2], line)?)
        });
    }
    Ok(DiscreteMeasure::from_atoms(kind, label, atoms))
}

/// Plan CSV of one building block, sources in the excess measure and
/// destinations in the deficit measure.
pub fn plan_csv(step: &TransportStep) -> String {
    let mut out = String::from("src_x,src_y,src_a,dst_x,dst_y,dst_a,mass\n");
    for p in &step.plan.pairs {
        let s = step.rho2.atoms[p.src];
        let d = step.rho1.atoms[p.dst];
        row(
            &mut out,
            &[s.x[0], s.x[1], s.a, d.x[0], d.x[1], d.a, p.mass].map(fmt_f64),
        );
    }
    out
}

pub fn ensemble_curves_csv(ens: &CurveEnsemble) -> String {
    let mut out = String::from("id,side,weight,t_minus,t_plus\n");
    for c in &ens.curves {
        row(
            &mut out,
            &[
                c.id.to_string(),
                c.side.name().to_string(),
                fmt_f64(c.weight),
                fmt_f64(c.t_minus),
                fmt_f64(c.t_plus),
            ],
        );
    }
    out
}

pub fn ensemble_nodes_csv(ens: &CurveEnsemble) -> String {
    let mut out = String::from("id,t,x,y,a\n");
    for c in &ens.curves {
        for n in &c.nodes {
            row(
                &mut out,
                &[
                    c.id.to_string(),
                    fmt_f64(n.t),
                    fmt_f64(n.x[0]),
                    fmt_f64(n.x[1]),
                    fmt_f64(n.a),
                ],
            );
        }
    }
    out
}

/// Rebuild an ensemble from its two CSV tables. Build statistics are not
/// stored and come back empty.
pub fn parse_ensemble(curves: &str, nodes: &str, n: u32, side: Side) -> Result<CurveEnsemble> {
    let mut out = Vec::new();
    let mut index = std::collections::HashMap::new();
    for (line, c) in csv_rows(curves, "id,side,weight,t_minus,t_plus")? {
        let s: Side = c[1].parse().map_err(|_| Error::Parse {
            line,
            msg: format!("bad side `{}`", c[1]),
        })?;
        if s != side {
            return Err(Error::Parse {
                line,
                msg: format!("curve side `{}` in a {} ensemble", c[1], side.name()),
            });
        }
        let id: u64 = num(c[0], line)?;
        index.insert(id, out.len());
        out.push(Curve {
            id,
            side,
            weight: num(c[2], line)?,
            t_minus: num(c[3], line)?,
            t_plus: num(c[4], line)?,
            nodes: Vec::new(),
        });
    }
    for (line, c) in csv_rows(nodes, "id,t,x,y,a")? {
        let id: u64 = num(c[0], line)?;
        let k = *index.get(&id).ok_or_else(|| Error::Parse {
            line,
            msg: format!("node of unknown curve {id}"),
        })?;
        out[k].nodes.push(Node {
            t: num(c[1], line)?,
            x: [num(c[2], line)?, num(c[3], line)?],
            a: num(c[4], line)?,
        });
    }
    Ok(CurveEnsemble {
        n,
        side,
        curves: out,
        stats: BuildStats::default(),
    })
}

pub fn sigma_csv(sigma: &SigmaSet) -> String {
    let mut out = String::from("x,y,max_ratio\n");
    for p in &sigma.points {
        row(&mut out, &[p.x[0], p.x[1], p.max_ratio].map(fmt_f64));
    }
    out
}

pub fn shocks_csv(family: &ShockFamily) -> String {
    let mut out = String::from("anchor_x,anchor_y,l,s,f\n");
    for c in &family.curves {
        for (s, f) in c.graph() {
            row(
                &mut out,
                &[
                    fmt_f64(c.anchor[0]),
                    fmt_f64(c.anchor[1]),
                    c.l.to_string(),
                    fmt_f64(s),
                    fmt_f64(f),
                ],
            );
        }
    }
    out
}

pub const PAIRS_HEADER: &str = "part,t,x,y,a_lo,a_hi,mass,class,l";

/// Paired mass of one part, without header, summed over epigraph partners
/// for each hypograph piece and class.
pub fn pairs_rows(pairs: &PairingResult, part: Part, out: &mut String) {
    type Key = (usize, u64, u64, EventClass);
    let mut acc: std::collections::BTreeMap<Key, (f64, f64, [f64; 2])> =
        std::collections::BTreeMap::new();
    for p in &pairs.pairs {
        let key = (p.hyp, p.a_lo.to_bits(), p.a_hi.to_bits(), p.class);
        acc.entry(key).or_insert((0.0, p.t, p.x)).0 += p.mass;
    }
    for ((_, lo, hi, class), (mass, t, x)) in acc {
        let (name, l) = class.label();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            part.name(),
            fmt_f64(t),
            fmt_f64(x[0]),
            fmt_f64(x[1]),
            fmt_f64(f64::from_bits(lo)),
            fmt_f64(f64::from_bits(hi)),
            fmt_f64(mass),
            name,
            l
        );
    }
}
