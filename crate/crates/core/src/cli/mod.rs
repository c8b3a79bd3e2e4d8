//! The `quadnet` command line.
//!
//! Every command writes its outputs next to `--out` (default `./<command>`) and a
//! `<out>.json` sidecar holding the complete job configuration. Exit status is 0 on
//! success, 2 for configuration errors and 1 for runtime failures.

pub mod io;

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bifurcation::{self, RealMapFamily, ScanSettings, SweepSettings, WindowSettings};
use crate::ensemble::{self, ConfigurationFamily, FractionRaster};
use crate::error::{Error, Result};
use crate::escape;
use crate::families::{self, Branch, FamilySpec};
use crate::netcore::{Complex, MultiState, Network};
use crate::raster::{self, EscapeRaster, GridSpec};
use crate::topology::{self, BlowupSettings, Connectivity, LocusRaster};
use io::Palette;

pub const THREADS_ENV: &str = "QUADNET_THREADS";

/// Parses `a+bi`, `a-bi`, `a`, `bi` (exponents allowed).
pub fn parse_complex(s: &str) -> std::result::Result<Complex, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot parse {s:?} as a complex number (expected a+bi)");
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|re| Complex::new(re, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        v => v.parse::<f64>().map_err(|_| bad())?,
    };
    Ok(Complex::new(re.parse::<f64>().map_err(|_| bad())?, im))
}

fn complex_arg(s: &str) -> std::result::Result<[f64; 2], String> {
    parse_complex(s).map(|c| [c.re, c.im])
}

fn c_of(v: [f64; 2]) -> Complex {
    Complex::new(v[0], v[1])
}

/// `re_min,re_max,im_min,im_max`
fn window_arg(s: &str) -> std::result::Result<[f64; 4], String> {
    let parts: Vec<f64> =
        s.split(',').map(|p| p.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|e| format!("window {s:?}: {e}"))?;
    <[f64; 4]>::try_from(parts).map_err(|_| format!("window {s:?} needs four comma-separated numbers"))
}

/// `WxH` or a single side length.
fn res_arg(s: &str) -> std::result::Result<[usize; 2], String> {
    let parse = |v: &str| usize::from_str(v.trim()).map_err(|e| format!("resolution {s:?}: {e}"));
    match s.split_once(['x', 'X']) {
        Some((w, h)) => Ok([parse(w)?, parse(h)?]),
        None => parse(s).map(|n| [n, n]),
    }
}

fn grid_of(window: [f64; 4], res: [usize; 2]) -> Result<GridSpec> {
    GridSpec::new(window[0], window[1], window[2], window[3], res[0], res[1])
}

#[derive(Parser, Debug)]
#[command(name = "quadnet", version, about = "Asymptotic sets of networks of coupled complex quadratic maps")]
struct Cli {
    /// Worker threads (falls back to QUADNET_THREADS); results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Equi-M raster: every node gets the pixel as parameter.
    EquiM(RasterJob),
    /// Node-wise equi-M raster of one node.
    NodeM(NodeJob),
    /// Uni-prisoner raster over initial conditions.
    UniJ(UniJob),
    /// Escape radius under diagonal dominance.
    EscapeRadius(EscapeRadiusJob),
    /// Multi-orbit of a uniform starting state.
    Orbit(OrbitJob),
    /// Blown-up component count of the uni-prisoner set over a c window.
    ConnectednessLocus(ConnectednessJob),
    /// Membership or connectedness over the (a, b) plane.
    AbLocus(AbJob),
    /// Bifurcation sweep of a real node map, with bounded windows.
    Bifurcation(BifurcationJob),
    /// Fixed-point branches with saddle-node and period-doubling events.
    FixedScan(FixedScanJob),
    /// Main cardioid and simple-dual fixed-point curves.
    HyperbolicCurves(CurvesJob),
    /// Fraction of configurations with a bounded uni-orbit.
    CoreUniJ(CoreUniJob),
    /// Fraction of configurations with a bounded critical orbit.
    CoreEquiM(CoreEquiJob),
    /// Spectral and asymptotic classes of a configuration family.
    Classes(ClassesJob),
    /// Whether asymptotic classes agree across parameters.
    Invariance(InvarianceJob),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::EquiM(_) => "equi-m",
            Command::NodeM(_) => "node-m",
            Command::UniJ(_) => "uni-j",
            Command::EscapeRadius(_) => "escape-radius",
            Command::Orbit(_) => "orbit",
            Command::ConnectednessLocus(_) => "connectedness-locus",
            Command::AbLocus(_) => "ab-locus",
            Command::Bifurcation(_) => "bifurcation",
            Command::FixedScan(_) => "fixed-scan",
            Command::HyperbolicCurves(_) => "hyperbolic-curves",
            Command::CoreUniJ(_) => "core-uni-j",
            Command::CoreEquiM(_) => "core-equi-m",
            Command::Classes(_) => "classes",
            Command::Invariance(_) => "invariance",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
enum NetFamily {
    Single,
    SimpleDual,
    SelfDrive,
}

#[derive(Args, Debug, Serialize)]
struct NetworkArgs {
    /// Built-in family (ignored with --network).
    #[arg(long, value_enum, default_value = "self-drive")]
    family: NetFamily,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<f64>,
    /// Network JSON file.
    #[arg(long)]
    network: Option<PathBuf>,
}

impl NetworkArgs {
    fn spec(&self) -> Result<FamilySpec> {
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| Error::InvalidArgument(format!("--{name} is required for this family")));
        Ok(match self.family {
            NetFamily::Single => FamilySpec::Single,
            NetFamily::SimpleDual => FamilySpec::SimpleDual { a: need(self.a, "a")? },
            NetFamily::SelfDrive => FamilySpec::SelfDrive { a: need(self.a, "a")?, b: need(self.b, "b")? },
        })
    }

    fn build(&self) -> Result<Network> {
        match &self.network {
            Some(path) => io::read_network_json(path).map_err(|e| config_context(e, path)),
            None => self.spec()?.build(),
        }
    }
}

fn config_context(e: Error, path: &Path) -> Error {
    match e {
        Error::Io(io) => Error::InvalidArgument(format!("cannot read {}: {io}", path.display())),
        Error::Json(j) => Error::Schema { path: String::new(), message: format!("{}: {j}", path.display()) },
        other => other,
    }
}

#[derive(Args, Debug, Serialize)]
struct GridArgs {
    /// re_min,re_max,im_min,im_max
    #[arg(long, value_parser = window_arg, allow_hyphen_values = true, default_value = "-2,2,-2,2")]
    window: [f64; 4],
    /// WxH or N
    #[arg(long, value_parser = res_arg, default_value = "200x200")]
    res: [usize; 2],
}

impl GridArgs {
    fn grid(&self) -> Result<GridSpec> {
        grid_of(self.window, self.res)
    }
}

#[derive(Args, Debug, Serialize)]
struct EscapeArgs {
    #[arg(long = "max-iter", default_value_t = raster::DEFAULT_MAX_ITER)]
    max_iter: u32,
    #[arg(long = "escape-radius", default_value_t = raster::DEFAULT_ESCAPE_RADIUS)]
    escape_radius: f64,
}

#[derive(Args, Debug, Serialize)]
struct OutArgs {
    /// Output path prefix; defaults to the command name.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "grayscale")]
    palette: Palette,
}

#[derive(Args, Debug, Serialize)]
struct RasterJob {
    #[command(flatten)]
    net: NetworkArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    escape: EscapeArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
struct NodeJob {
    #[command(flatten)]
    job: RasterJob,
    /// 1-based node index.
    #[arg(long)]
    node: usize,
}

#[derive(Args, Debug, Serialize)]
struct UniJob {
    #[command(flatten)]
    job: RasterJob,
    /// Equi-parameter; defaults to the network file's parameters.
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
    c: Option<[f64; 2]>,
}

#[derive(Args, Debug, Serialize)]
struct EscapeRadiusJob {
    #[command(flatten)]
    net: NetworkArgs,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
    c: Option<[f64; 2]>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct OrbitJob {
    #[command(flatten)]
    net: NetworkArgs,
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
    c: Option<[f64; 2]>,
    /// Every node starts here.
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true, default_value = "0")]
    z0: [f64; 2],
    #[arg(long, default_value_t = 50)]
    steps: usize,
    #[arg(long = "escape-radius", default_value_t = raster::DEFAULT_ESCAPE_RADIUS)]
    escape_radius: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct BlowupArgs {
    #[arg(long = "blowup-radius", default_value_t = topology::DEFAULT_BLOWUP_RADIUS)]
    blowup_radius: f64,
    #[arg(long, default_value_t = 8)]
    connectivity: u8,
}

impl BlowupArgs {
    fn settings(&self) -> Result<BlowupSettings> {
        Ok(BlowupSettings { radius_px: self.blowup_radius, connectivity: Connectivity::try_from(self.connectivity)? })
    }
}

#[derive(Args, Debug, Serialize)]
struct ConnectednessJob {
    #[command(flatten)]
    net: NetworkArgs,
    #[arg(long = "c-window", value_parser = window_arg, allow_hyphen_values = true, default_value = "-2,1,-1.5,1.5")]
    c_window: [f64; 4],
    #[arg(long = "c-res", value_parser = res_arg, default_value = "60x60")]
    c_res: [usize; 2],
    #[arg(long = "z-window", value_parser = window_arg, allow_hyphen_values = true, default_value = "-2,2,-2,2")]
    z_window: [f64; 4],
    #[arg(long = "z-res", value_parser = res_arg, default_value = "100x100")]
    z_res: [usize; 2],
    #[command(flatten)]
    escape: EscapeArgs,
    #[command(flatten)]
    blowup: BlowupArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
enum AbMode {
    Membership,
    Connectedness,
}

#[derive(Args, Debug, Serialize)]
struct AbJob {
    #[arg(long, value_enum, default_value = "membership")]
    mode: AbMode,
    /// (a, b) window as a_min,a_max,b_min,b_max
    #[arg(long, value_parser = window_arg, allow_hyphen_values = true, default_value = "-2.75,0.75,-2.75,0.75")]
    window: [f64; 4],
    #[arg(long, value_parser = res_arg, default_value = "141x141")]
    res: [usize; 2],
    /// Equi-parameter of the membership test.
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true, default_value = "-1")]
    c0: [f64; 2],
    #[arg(long = "c-window", value_parser = window_arg, allow_hyphen_values = true, default_value = "-2,1,-1.5,1.5")]
    c_window: [f64; 4],
    #[arg(long = "c-res", value_parser = res_arg, default_value = "60x60")]
    c_res: [usize; 2],
    #[command(flatten)]
    escape: EscapeArgs,
    #[command(flatten)]
    blowup: BlowupArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
enum MapKind {
    Z3Batch4,
    Z2Even,
    Z3Limit,
}

#[derive(Args, Debug, Serialize)]
struct MapArgs {
    #[arg(long, value_enum)]
    map: MapKind,
    /// Settled input of the limit map.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    xi0: f64,
    #[arg(long = "p-min", allow_hyphen_values = true, default_value_t = -2.5)]
    p_min: f64,
    #[arg(long = "p-max", allow_hyphen_values = true, default_value_t = 1.0)]
    p_max: f64,
}

impl MapArgs {
    fn family(&self) -> RealMapFamily {
        match self.map {
            MapKind::Z3Batch4 => RealMapFamily::Z3Batch4,
            MapKind::Z2Even => RealMapFamily::Z2Even,
            MapKind::Z3Limit => RealMapFamily::Z3Limit { xi0: self.xi0 },
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct BifurcationJob {
    #[command(flatten)]
    map: MapArgs,
    #[arg(long, default_value_t = bifurcation::DEFAULT_STEPS)]
    steps: usize,
    #[arg(long, default_value_t = bifurcation::DEFAULT_TRANSIENT)]
    transient: usize,
    #[arg(long, default_value_t = bifurcation::DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    x0: f64,
    #[arg(long, default_value_t = bifurcation::DEFAULT_BOUND)]
    bound: f64,
    #[arg(long = "refine-tol", default_value_t = 1e-6)]
    refine_tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct FixedScanJob {
    #[command(flatten)]
    map: MapArgs,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[arg(long = "newton-tol", default_value_t = 1e-12)]
    newton_tol: f64,
    #[arg(long = "xi-max", default_value_t = 3.0)]
    xi_max: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct CurvesJob {
    #[arg(long, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, default_value_t = 721)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
enum EnsembleKind {
    EdgeCount,
    Bipartite,
}

#[derive(Args, Debug, Serialize)]
struct EnsembleArgs {
    #[arg(long, value_enum, default_value = "edge-count")]
    family: EnsembleKind,
    #[arg(long)]
    n: usize,
    /// Edge count (edge-count families).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long = "m-xy")]
    m_xy: Option<usize>,
    #[arg(long = "m-yx")]
    m_yx: Option<usize>,
    /// Edge weight; defaults to 1/n for edge-count and 1/2 for bipartite families.
    #[arg(long, allow_hyphen_values = true)]
    g: Option<f64>,
    /// Draw this many distinct configurations instead of enumerating all.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = ensemble::DEFAULT_CAP)]
    cap: u64,
}

impl EnsembleArgs {
    fn family(&self) -> Result<ConfigurationFamily> {
        let need = |v: Option<usize>, name: &str| v.ok_or_else(|| Error::InvalidArgument(format!("--{name} is required for this family")));
        let mut fam = match self.family {
            EnsembleKind::EdgeCount => ConfigurationFamily::edge_count(self.n, need(self.k, "k")?),
            EnsembleKind::Bipartite => ConfigurationFamily::bipartite(self.n, need(self.m_xy, "m-xy")?, need(self.m_yx, "m-yx")?, 0.5),
        };
        if let Some(g) = self.g {
            fam = fam.with_g(g);
        }
        if let Some(s) = self.sample {
            fam = fam.sampled(s, self.seed);
        }
        fam.cap = self.cap;
        Ok(fam)
    }
}

#[derive(Args, Debug, Serialize)]
struct CoreUniJob {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
    c: [f64; 2],
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    escape: EscapeArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct CoreEquiJob {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    escape: EscapeArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ClassesJob {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
    c: [f64; 2],
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    escape: EscapeArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct InvarianceJob {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    /// Repeat for each parameter (at least two).
    #[arg(long = "c", value_parser = complex_arg, allow_hyphen_values = true, required = true)]
    c_list: Vec<[f64; 2]>,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    escape: EscapeArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Output paths derived from a prefix.
struct Outputs {
    prefix: PathBuf,
    job: Value,
}

impl Outputs {
    fn new(out: &Option<PathBuf>, command: &Command, threads: Option<usize>) -> Result<Self> {
        let prefix = out.clone().unwrap_or_else(|| PathBuf::from(command.name()));
        if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let job = json!({ "job": command, "threads": threads });
        Ok(Outputs { prefix, job })
    }

    fn path(&self, ext: &str) -> PathBuf {
        let mut p = self.prefix.clone().into_os_string();
        p.push(".");
        p.push(ext);
        PathBuf::from(p)
    }

    fn sidecar(&self, extra: Value) -> Result<()> {
        let mut v = self.job.clone();
        v["result"] = extra;
        io::write_json(&self.path("json"), &v)
    }

    fn escape_raster(&self, r: &EscapeRaster, palette: Palette) -> Result<()> {
        io::write_ppm(r, palette, &self.path("ppm"))?;
        let data: Vec<f64> = r.data.iter().map(|&v| v as f64).collect();
        io::write_float_grid(&self.path("grid"), &self.path("json"), &r.grid, &data, "escape_iter", &self.job)
    }

    fn fraction(&self, r: &FractionRaster) -> Result<()> {
        let mut job = self.job.clone();
        job["config_count"] = json!(r.config_count);
        io::write_float_grid(&self.path("grid"), &self.path("json"), &r.grid, &r.data, "fraction", &job)
    }

    fn locus(&self, r: &LocusRaster, quantity: &str) -> Result<()> {
        let data: Vec<f64> = r.data.iter().map(|&v| v as f64).collect();
        io::write_float_grid(&self.path("grid"), &self.path("json"), &r.grid, &data, quantity, &self.job)
    }

    fn text(&self, ext: &str, body: &str) -> Result<()> {
        fs::write(self.path(ext), body)?;
        Ok(())
    }
}

fn out_of(command: &Command) -> &Option<PathBuf> {
    match command {
        Command::EquiM(j) => &j.out.out,
        Command::NodeM(j) => &j.job.out.out,
        Command::UniJ(j) => &j.job.out.out,
        Command::EscapeRadius(j) => &j.out,
        Command::Orbit(j) => &j.out,
        Command::ConnectednessLocus(j) => &j.out,
        Command::AbLocus(j) => &j.out,
        Command::Bifurcation(j) => &j.out,
        Command::FixedScan(j) => &j.out,
        Command::HyperbolicCurves(j) => &j.out,
        Command::CoreUniJ(j) => &j.out,
        Command::CoreEquiM(j) => &j.out,
        Command::Classes(j) => &j.out,
        Command::Invariance(j) => &j.out,
    }
}

fn with_c(net: Network, c: Option<[f64; 2]>) -> Network {
    match c {
        Some(c) => net.with_equi_param(c_of(c)),
        None => net,
    }
}

fn fmt_c(c: Complex) -> String {
    format!("{}{:+}i", c.re, c.im)
}

fn execute(command: &Command, out: &Outputs) -> Result<String> {
    Ok(match command {
        Command::EquiM(j) => {
            let r = raster::equi_m_raster(&j.net.build()?, &j.grid.grid()?, j.escape.max_iter, j.escape.escape_radius)?;
            out.escape_raster(&r, j.out.palette)?;
            format!("{}x{} pixels, {} bounded", r.grid.width, r.grid.height, r.bounded_count())
        }
        Command::NodeM(j) => {
            let net = j.job.net.build()?;
            if j.node == 0 || j.node > net.n() {
                return Err(Error::InvalidArgument(format!("--node {} outside 1..={}", j.node, net.n())));
            }
            let r = raster::node_m_raster(&net, j.node - 1, &j.job.grid.grid()?, j.job.escape.max_iter, j.job.escape.escape_radius)?;
            out.escape_raster(&r, j.job.out.palette)?;
            format!("node {}: {}x{} pixels, {} bounded", j.node, r.grid.width, r.grid.height, r.bounded_count())
        }
        Command::UniJ(j) => {
            let net = with_c(j.job.net.build()?, j.c);
            let r = raster::uni_j_raster(&net, &j.job.grid.grid()?, j.job.escape.max_iter, j.job.escape.escape_radius)?;
            out.escape_raster(&r, j.job.out.palette)?;
            format!("{}x{} pixels, {} bounded", r.grid.width, r.grid.height, r.bounded_count())
        }
        Command::EscapeRadius(j) => {
            let net = with_c(j.net.build()?, j.c);
            let delta = j.delta.unwrap_or_else(|| escape::default_delta(&net));
            let b = escape::escape_bound(&net, delta)?;
            let result = json!({ "delta": b.delta, "m": b.m, "radius": b.radius, "per_node_a": b.per_node_a, "per_node_m": b.per_node_m });
            out.sidecar(result)?;
            format!("radius {} (delta {}, M {})", b.radius, b.delta, b.m)
        }
        Command::Orbit(j) => {
            let net = with_c(j.net.build()?, j.c);
            let rec = net.iterate_orbit(&MultiState::uniform(net.n(), c_of(j.z0)), j.steps, j.escape_radius)?;
            let mut csv = String::from("t");
            for k in 1..=net.n() {
                csv.push_str(&format!(",re{k},im{k},overflow{k}"));
            }
            csv.push('\n');
            for (t, s) in rec.states.iter().enumerate() {
                csv.push_str(&t.to_string());
                for (z, o) in s.values.iter().zip(&s.overflowed) {
                    csv.push_str(&format!(",{},{},{}", z.re, z.im, u8::from(*o)));
                }
                csv.push('\n');
            }
            out.text("csv", &csv)?;
            out.sidecar(json!({ "escape_iter": rec.escape_iter }))?;
            match rec.escape_iter {
                Some(t) => format!("escaped at t={t}"),
                None => format!("bounded for {} steps", j.steps),
            }
        }
        Command::ConnectednessLocus(j) => {
            let net = j.net.build()?;
            let r = topology::uni_j_connectedness_locus(
                &net,
                &grid_of(j.c_window, j.c_res)?,
                &grid_of(j.z_window, j.z_res)?,
                j.escape.max_iter,
                j.escape.escape_radius,
                j.blowup.settings()?,
            )?;
            out.locus(&r, "component_count")?;
            let connected = r.data.iter().filter(|&&v| v == 1).count();
            format!("{}x{} parameters, {} connected", r.grid.width, r.grid.height, connected)
        }
        Command::AbLocus(j) => {
            let ab = grid_of(j.window, j.res)?;
            let fam = |a: f64, b: f64| FamilySpec::SelfDrive { a, b }.build();
            let (r, quantity) = match j.mode {
                AbMode::Membership => {
                    (topology::ab_membership_locus(fam, &ab, c_of(j.c0), j.escape.max_iter, j.escape.escape_radius)?, "member")
                }
                AbMode::Connectedness => (
                    topology::ab_connectedness_locus(
                        fam,
                        &ab,
                        &grid_of(j.c_window, j.c_res)?,
                        j.escape.max_iter,
                        j.escape.escape_radius,
                        j.blowup.settings()?,
                    )?,
                    "component_count",
                ),
            };
            out.locus(&r, quantity)?;
            let ones = r.data.iter().filter(|&&v| v == 1).count();
            format!("{}x{} (a, b) pixels, {} with value 1", ab.width, ab.height, ones)
        }
        Command::Bifurcation(j) => {
            let family = j.map.family();
            let settings = SweepSettings { transient: j.transient, samples: j.samples, x0: j.x0, bound: j.bound };
            let s = bifurcation::sweep(family, j.map.p_min, j.map.p_max, j.steps, settings)?;
            let ws = WindowSettings {
                coarse_steps: j.steps,
                refine_tol: j.refine_tol,
                x0: j.x0,
                t_max: j.transient + j.samples,
                bound: j.bound,
            };
            let windows = bifurcation::bounded_windows(family, j.map.p_min, j.map.p_max, ws)?;
            out.text("csv", &s.to_csv())?;
            out.sidecar(json!({ "windows": windows }))?;
            let list: Vec<String> = windows.iter().map(|(a, b)| format!("[{a:.4}, {b:.4}]")).collect();
            format!("{} parameters, bounded windows {}", s.records.len(), list.join(" "))
        }
        Command::FixedScan(j) => {
            let settings = ScanSettings { steps: j.steps, newton_tol: j.newton_tol, xi_max: j.xi_max };
            let scan = bifurcation::fixed_point_scan(j.map.family(), j.map.p_min, j.map.p_max, settings)?;
            out.text("csv", &scan.to_csv())?;
            let events: Vec<Value> = scan.events().map(|e| json!({ "event": e.event, "p": e.p, "xi": e.xi })).collect();
            out.sidecar(json!({ "events": events, "branches": scan.branches.len() }))?;
            format!("{} branches, {} events", scan.branches.len(), events.len())
        }
        Command::HyperbolicCurves(j) => {
            let curves = families::hyperbolic_curves(j.a, j.samples);
            let mut csv = String::from("curve,parameter,re,im\n");
            for s in &curves {
                let name = match s.branch {
                    None => "cardioid",
                    Some(Branch::Plus) => "plus",
                    Some(Branch::Minus) => "minus",
                };
                csv.push_str(&format!("{name},{},{},{}\n", s.parameter, s.point.re, s.point.im));
            }
            out.text("csv", &csv)?;
            out.sidecar(Value::Null)?;
            format!("{} curve points", curves.len())
        }
        Command::CoreUniJ(j) => {
            let configs = ensemble::enumerate(&j.ensemble.family()?)?;
            let r = ensemble::core_uni_j(&configs, c_of(j.c), &j.grid.grid()?, j.escape.max_iter, j.escape.escape_radius)?;
            out.fraction(&r)?;
            format!("{} configurations, {} core pixels", r.config_count, r.core_mask().count())
        }
        Command::CoreEquiM(j) => {
            let configs = ensemble::enumerate(&j.ensemble.family()?)?;
            let r = ensemble::core_equi_m(&configs, &j.grid.grid()?, j.escape.max_iter, j.escape.escape_radius)?;
            out.fraction(&r)?;
            format!("{} configurations, {} core pixels", r.config_count, r.core_mask().count())
        }
        Command::Classes(j) => {
            let configs = ensemble::enumerate(&j.ensemble.family()?)?;
            let spectral = ensemble::partition_spectral(&configs)?;
            let asym = ensemble::partition_asymptotic(&configs, c_of(j.c), &j.grid.grid()?, j.escape.max_iter, j.escape.escape_radius)?;
            out.text("csv", &ensemble::classes_csv(&configs, &spectral, &asym)?)?;
            out.sidecar(json!({ "configurations": configs.len(), "spectral_classes": spectral.class_count, "asymptotic_classes": asym.class_count }))?;
            format!("{} configurations, {} spectral classes, {} asymptotic classes", configs.len(), spectral.class_count, asym.class_count)
        }
        Command::Invariance(j) => {
            let configs = ensemble::enumerate(&j.ensemble.family()?)?;
            let cs: Vec<Complex> = j.c_list.iter().map(|&c| c_of(c)).collect();
            let rep = ensemble::class_invariance_experiment(&configs, &cs, &j.grid.grid()?, j.escape.max_iter, j.escape.escape_radius)?;
            let pairs: Vec<Value> = rep
                .pairs
                .iter()
                .map(|d| json!({ "a": fmt_c(cs[d.a]), "b": fmt_c(cs[d.b]), "identical": d.identical, "split_pairs": d.split_pairs }))
                .collect();
            let counts: Vec<usize> = rep.partitions.iter().map(|p| p.class_count).collect();
            out.sidecar(json!({ "all_identical": rep.all_identical, "class_counts": counts, "pairs": pairs }))?;
            match rep.first_difference {
                None => format!("{} parameters, identical partitions ({counts:?} classes)", cs.len()),
                Some((a, b)) => format!("partitions differ between {} and {}", fmt_c(cs[a]), fmt_c(cs[b])),
            }
        }
    })
}

fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidArgument(_)
            | Error::Precondition(_)
            | Error::IndexOutOfRange { .. }
            | Error::CapExceeded { .. }
            | Error::Schema { .. }
    )
}

fn threads_from_env() -> std::result::Result<Option<usize>, String> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map(Some).map_err(|_| format!("{THREADS_ENV}={v:?} is not a worker count")),
        Err(_) => Ok(None),
    }
}

/// Runs the command line `argv` (including the program name) and returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let threads = match cli.threads {
        Some(t) => Some(t),
        None => match threads_from_env() {
            Ok(t) => t,
            Err(msg) => {
                eprintln!("error: {msg}");
                return 2;
            }
        },
    };
    let started = Instant::now();
    let outcome = Outputs::new(out_of(&cli.command), &cli.command, threads)
        .and_then(|out| crate::with_threads(threads, || execute(&cli.command, &out)).and_then(|r| r));
    match outcome {
        Ok(summary) => {
            println!("{}: {summary} ({:.3} s)", cli.command.name(), started.elapsed().as_secs_f64());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            if is_config_error(&e) {
                2
            } else {
                1
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_strings() {
        assert_eq!(parse_complex("-1.15+0.26i").unwrap(), Complex::new(-1.15, 0.26));
        assert_eq!(parse_complex("-0.117-0.856i").unwrap(), Complex::new(-0.117, -0.856));
        assert_eq!(parse_complex("-1").unwrap(), Complex::new(-1.0, 0.0));
        assert_eq!(parse_complex("2i").unwrap(), Complex::new(0.0, 2.0));
        assert_eq!(parse_complex("-i").unwrap(), Complex::new(0.0, -1.0));
        assert_eq!(parse_complex("1e-3-2e+1i").unwrap(), Complex::new(1e-3, -20.0));
        assert!(parse_complex("1+").is_err());
        assert!(parse_complex("abc").is_err());
    }

    #[test]
    fn window_and_resolution() {
        assert_eq!(window_arg("-2,1,-1.5,1.5").unwrap(), [-2.0, 1.0, -1.5, 1.5]);
        assert!(window_arg("1,2,3").is_err());
        assert_eq!(res_arg("400x300").unwrap(), [400, 300]);
        assert_eq!(res_arg("141").unwrap(), [141, 141]);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["quadnet", "no-such-command"]), 2);
        assert_eq!(run(["quadnet", "equi-m", "--bogus"]), 2);
        assert_eq!(run(["quadnet", "--help"]), 0);
        // self-drive without --a is a configuration error
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("x");
        assert_eq!(run(["quadnet", "equi-m", "--res", "4", "--out", out.to_str().unwrap()]), 2);
    }
}
