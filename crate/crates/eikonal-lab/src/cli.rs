//! Pipeline driver. Stages hand over through files in the output directory.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::config::{parse_range, RunConfig};
use crate::error::{Error, Result};
use crate::field::{disk_values, field_to_string, LiftedField};
use crate::io::{self, fmt_f64, to_json, write_text};
use crate::kinetic::{entropy_measure, nu_projection, Side};
use crate::lagrangian::{
    build_representation, decomposition_residual, horizontal_error, representation_error,
    vertical_cost, CurveEnsemble, DecompositionReport, RepresentationError,
};
use crate::measure::{ABins, DiscreteMeasure, MeasureKind};
use crate::rectifiability::{
    density_dichotomy, rectifiability_report, RectifyDiagnostics, RectifyOptions, RectifyReport,
    SigmaSet,
};
use crate::testfn::space_time_family;
use crate::transport::step::building_block_map;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Kinetic,
    Represent,
    Verify,
    Rectify,
    Report,
    All,
}

#[derive(Debug, Parser)]
#[command(
    name = "eikonal-lab",
    version,
    about = "Entropy-defect laboratory for eikonal fields"
)]
pub struct Cli {
    #[command(subcommand)]
    pub action: Action,
}

#[derive(Debug, Subcommand)]
pub enum Action {
    /// Run one pipeline stage, or all of them.
    Run {
        #[arg(value_enum)]
        command: Command,
        /// Config file of `key = value` lines.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Grid file or `builtin:name[:k=v,...]`.
        #[arg(long)]
        field: Option<String>,
        /// Levels as `min:max`.
        #[arg(long)]
        n: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Number of test functions in the decomposition check.
const TEST_FUNCTIONS: usize = 20;

fn path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.out.join(name)
}

fn require(cfg: &RunConfig, name: &str, stage: &str) -> Result<PathBuf> {
    let p = path(cfg, name);
    if p.is_file() {
        Ok(p)
    } else {
        Err(Error::Dependency(format!("run {stage}")))
    }
}

fn ensemble_names(side: Side, n: u32) -> (String, String) {
    (
        format!("ensemble_{}_n{n}_curves.csv", side.name()),
        format!("ensemble_{}_n{n}_nodes.csv", side.name()),
    )
}

fn load_ensemble(cfg: &RunConfig, side: Side, n: u32) -> Result<CurveEnsemble> {
    let (c, nodes) = ensemble_names(side, n);
    let c = io::read_text(require(cfg, &c, "represent")?)?;
    let nodes = io::read_text(require(cfg, &nodes, "represent")?)?;
    io::parse_ensemble(&c, &nodes, n, side)
}

#[derive(Serialize)]
struct KineticSummary {
    field: String,
    nx: usize,
    ny: usize,
    k_bins: usize,
    m: f64,
    r: f64,
    atoms: usize,
    u_total_variation: f64,
    nu_ball: f64,
    /// Sign convention of the stored weights.
    convention: &'static str,
    note: &'static str,
}

fn stage_kinetic(cfg: &RunConfig, f: &LiftedField, bins: &ABins) -> Result<()> {
    let u = entropy_measure(f, bins);
    let nu = nu_projection(&u);
    write_text(path(cfg, "field.txt"), &field_to_string(f))?;
    write_text(path(cfg, "u.csv"), &io::measure_csv(&u))?;
    write_text(path(cfg, "nu.csv"), &io::measure_csv(&nu))?;
    let tv = u.total_variation();
    let summary = KineticSummary {
        field: cfg.field_spec()?,
        nx: f.nx,
        ny: f.ny,
        k_bins: bins.k,
        m: f.m,
        r: f.r,
        atoms: u.len(),
        u_total_variation: tv,
        nu_ball: nu.restrict(|a| f.in_ball(a.x)).total_variation(),
        convention: "weight = -(outflux jump of e^{i(phi ^ a)}) per edge and angle bin",
        note: if tv == 0.0 {
            "U vanishes"
        } else {
            "U is nonzero"
        },
    };
    write_text(path(cfg, "kinetic_summary.json"), &to_json(&summary))
}

fn stage_represent(cfg: &RunConfig, f: &LiftedField, bins: &ABins) -> Result<()> {
    require(cfg, "kinetic_summary.json", "kinetic")?;
    for n in cfg.levels() {
        let step = building_block_map(f, n, bins, Side::Hypograph)?;
        write_text(
            path(cfg, &format!("step_n{n}.json")),
            &(step.summary_json() + "\n"),
        )?;
        write_text(path(cfg, &format!("plan_n{n}.csv")), &io::plan_csv(&step))?;
        for side in [Side::Hypograph, Side::Epigraph] {
            let ens = build_representation(f, n, bins, side)?;
            let (c, nodes) = ensemble_names(side, n);
            write_text(path(cfg, &c), &io::ensemble_curves_csv(&ens))?;
            write_text(path(cfg, &nodes), &io::ensemble_nodes_csv(&ens))?;
            write_text(
                path(cfg, &format!("ensemble_{}_n{n}_stats.json", side.name())),
                &to_json(&ens.stats),
            )?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct AliveSample {
    t: f64,
    mass: f64,
}

#[derive(Serialize)]
struct LevelSummary {
    n: u32,
    e_h: f64,
    e_v: f64,
    alive_mass: Vec<AliveSample>,
    res_signed: f64,
    res_abs: f64,
}

#[derive(Serialize)]
struct VerifyDiagnostics {
    n: u32,
    e_h_epigraph: f64,
    e_v_epigraph: f64,
    representation_half: RepresentationError,
    decomposition: DecompositionReport,
    mass_balance_hypograph: f64,
    mass_balance_epigraph: f64,
}

/// `alive(1) + exited(1) - initial - injected(1)`.
fn mass_balance(ens: &CurveEnsemble) -> f64 {
    ens.alive_mass(1.0 - 1e-12) + ens.exited_mass(1.0) - ens.initial_mass() - ens.injected_mass(1.0)
}

fn stage_verify(cfg: &RunConfig, f: &LiftedField, bins: &ABins) -> Result<()> {
    let u_text = io::read_text(require(cfg, "u.csv", "kinetic")?)?;
    let u = io::parse_measure_csv(&u_text, MeasureKind::Kinetic, "U")?;
    let tests = space_time_family(f, TEST_FUNCTIONS, cfg.seed);
    for n in cfg.levels() {
        let h = load_ensemble(cfg, Side::Hypograph, n)?;
        let e = load_ensemble(cfg, Side::Epigraph, n)?;
        let tol = 1e-9 * (1.0 + h.total_weight() + e.total_weight());
        let (bh, be) = (mass_balance(&h), mass_balance(&e));
        if bh.abs() > tol || be.abs() > tol {
            return Err(Error::Invariant(format!(
                "mass accounting at n = {n} is off by {bh:e} (hypograph) and {be:e} (epigraph)"
            )));
        }
        let dec = decomposition_residual(&h, &e, &u, f, &tests);
        let steps = 16;
        let summary = LevelSummary {
            n,
            e_h: horizontal_error(&h),
            e_v: vertical_cost(&h),
            alive_mass: (0..=steps)
                .map(|k| {
                    let t = k as f64 / steps as f64;
                    AliveSample {
                        t,
                        mass: h.alive_mass(t),
                    }
                })
                .collect(),
            res_signed: dec.res_signed,
            res_abs: dec.res_abs,
        };
        write_text(path(cfg, &format!("summary_n{n}.json")), &to_json(&summary))?;
        let diag = VerifyDiagnostics {
            n,
            e_h_epigraph: horizontal_error(&e),
            e_v_epigraph: vertical_cost(&e),
            representation_half: representation_error(&h, f, bins, 0.5)?,
            decomposition: dec,
            mass_balance_hypograph: bh,
            mass_balance_epigraph: be,
        };
        write_text(path(cfg, &format!("verify_n{n}.json")), &to_json(&diag))?;
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct RectifyArtifact {
    negative: RectifyReport,
    positive: RectifyReport,
    negative_diagnostics: RectifyDiagnostics,
    positive_diagnostics: RectifyDiagnostics,
}

fn dichotomy_csv(
    cfg: &RunConfig,
    f: &LiftedField,
    nu: &DiscreteMeasure,
    sigma: &SigmaSet,
) -> Result<String> {
    let h = f.h();
    let radii = [h, 2.0 * h, 4.0 * h, 8.0 * h];
    let mut points: Vec<[f64; 2]> = Vec::new();
    let stride = sigma.points.len().div_ceil(16).max(1);
    points.extend(sigma.points.iter().step_by(stride).map(|p| p.x));
    let grid_stride = (f.nx / 8).max(1);
    for j in (grid_stride / 2..f.ny).step_by(grid_stride) {
        for i in (grid_stride / 2..f.nx).step_by(grid_stride) {
            let x = f.cell_center(i, j);
            if f.in_ball(x) {
                points.push(x);
            }
        }
    }
    let mut out = String::from("x,y,a_bar,delta,r,ratio1,ratio2,verdict\n");
    for x in points {
        let vals = disk_values(f, x, 4.0 * h);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        if vals.is_empty() {
            continue;
        }
        let delta = ((hi - lo) / 3.0).clamp(0.05, 1.5);
        let floors = (cfg.floor1 * delta, cfg.floor2 * delta.powi(3));
        let rep = density_dichotomy(f, nu, x, hi, delta, &radii, floors)?;
        for (k, r) in radii.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{:?}\n",
                fmt_f64(x[0]),
                fmt_f64(x[1]),
                fmt_f64(hi),
                fmt_f64(delta),
                fmt_f64(*r),
                fmt_f64(rep.ratio1[k]),
                fmt_f64(rep.ratio2[k]),
                rep.verdict
            ));
        }
    }
    Ok(out)
}

fn stage_rectify(cfg: &RunConfig, f: &LiftedField, bins: &ABins) -> Result<()> {
    let opts = RectifyOptions {
        sigma_threshold: cfg.sigma_threshold,
        pair_tol: cfg.pair_tol,
        nu_block: cfg.nu_block,
        ..RectifyOptions::default()
    };
    let nu_text = io::read_text(require(cfg, "nu.csv", "kinetic")?)?;
    let nu = io::parse_measure_csv(&nu_text, MeasureKind::Spatial, "nu")?;
    for n in cfg.levels() {
        let h = load_ensemble(cfg, Side::Hypograph, n)?;
        let e = load_ensemble(cfg, Side::Epigraph, n)?;
        let out = rectifiability_report(f, bins, &h, &e, &opts)?;
        if n == cfg.n_max {
            write_text(path(cfg, "sigma.csv"), &io::sigma_csv(&out.sigma))?;
            write_text(
                path(cfg, "dichotomy.csv"),
                &dichotomy_csv(cfg, f, &nu, &out.sigma)?,
            )?;
        }
        write_text(
            path(cfg, &format!("shocks_n{n}.csv")),
            &io::shocks_csv(&out.family),
        )?;
        let mut pairs = format!("{}\n", io::PAIRS_HEADER);
        io::pairs_rows(
            &out.negative_pairs,
            crate::rectifiability::Part::Negative,
            &mut pairs,
        );
        io::pairs_rows(
            &out.positive_pairs,
            crate::rectifiability::Part::Positive,
            &mut pairs,
        );
        write_text(path(cfg, &format!("pairs_n{n}.csv")), &pairs)?;
        let artifact = RectifyArtifact {
            negative: out.negative,
            positive: out.positive,
            negative_diagnostics: out.negative_diagnostics,
            positive_diagnostics: out.positive_diagnostics,
        };
        write_text(
            path(cfg, &format!("rectify_n{n}.json")),
            &to_json(&artifact),
        )?;
    }
    Ok(())
}

fn stage_report(cfg: &RunConfig) -> Result<()> {
    for n in cfg.levels() {
        let text = io::read_text(require(cfg, &format!("rectify_n{n}.json"), "rectify")?)?;
        let art: RectifyArtifact = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        write_text(
            path(cfg, &format!("report_n{n}.json")),
            &to_json(&art.negative),
        )?;
        write_text(
            path(cfg, &format!("report_positive_n{n}.json")),
            &to_json(&art.positive),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ManifestEntry {
    file: String,
    bytes: u64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a RunConfig,
    files: Vec<ManifestEntry>,
}

fn write_manifest(cfg: &RunConfig) -> Result<()> {
    let mut files = Vec::new();
    let rd = std::fs::read_dir(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    for entry in rd {
        let entry = entry.map_err(|e| Error::io(&cfg.out, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name == "manifest.json" {
            continue;
        }
        let meta = entry.metadata().map_err(|e| Error::io(entry.path(), e))?;
        if meta.is_file() {
            files.push(ManifestEntry {
                file: name,
                bytes: meta.len(),
            });
        }
    }
    files.sort_by(|a, b| a.file.cmp(&b.file));
    write_text(
        path(cfg, "manifest.json"),
        &to_json(&Manifest { config: cfg, files }),
    )
}

/// Run one command with a validated configuration.
pub fn run(command: Command, cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    let f = cfg.load_field()?;
    let bins = cfg.bins(&f);
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let work = || -> Result<()> {
        match command {
            Command::Kinetic => stage_kinetic(cfg, &f, &bins),
            Command::Represent => stage_represent(cfg, &f, &bins),
            Command::Verify => stage_verify(cfg, &f, &bins),
            Command::Rectify => stage_rectify(cfg, &f, &bins),
            Command::Report => stage_report(cfg),
            Command::All => {
                stage_kinetic(cfg, &f, &bins)?;
                stage_represent(cfg, &f, &bins)?;
                stage_verify(cfg, &f, &bins)?;
                stage_rectify(cfg, &f, &bins)?;
                stage_report(cfg)
            }
        }
    };
    match cfg.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Usage(format!("`threads`: {e}")))?
            .install(work)?,
        None => work()?,
    }
    write_manifest(cfg)
}

/// Merge the config file and flags into a run configuration.
pub fn resolve_config(
    config: Option<&Path>,
    field: Option<String>,
    n: Option<String>,
    out: Option<PathBuf>,
    threads: Option<usize>,
    seed: Option<u64>,
) -> Result<RunConfig> {
    let mut cfg = match config {
        Some(p) => RunConfig::parse(&io::read_text(p).map_err(|e| Error::Usage(e.to_string()))?)?,
        None => RunConfig::default(),
    };
    if let Some(v) = field {
        cfg.field = Some(v);
    }
    if let Some(v) = n {
        (cfg.n_min, cfg.n_max) = parse_range(&v)?;
    }
    if let Some(v) = out {
        cfg.out = v;
    }
    if let Some(v) = threads {
        cfg.threads = Some(v);
    }
    if let Some(v) = seed {
        cfg.seed = v;
    }
    Ok(cfg)
}

/// Entry point of the binary; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let Action::Run {
        command,
        config,
        field,
        n,
        out,
        threads,
        seed,
    } = cli.action;
    let result = resolve_config(config.as_deref(), field, n, out, threads, seed)
        .and_then(|cfg| run(command, &cfg));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
