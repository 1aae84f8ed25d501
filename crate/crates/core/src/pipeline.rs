//! End-to-end experiments: phantom → projections → noise → patch graph →
//! denoise → reconstruct, run on both the raw noisy sinogram and the graph
//! denoised one, plus the four-row comparison table.
//!
//! Iteration numbers in summaries and curve files count from 1 (the state
//! after the first sweep or iteration).

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::denoise::{
    argmin_score, default_gamma_grid, denoise, denoise_each, DenoiseConfig, ThresholdMode,
};
use crate::error::{Error, Result};
use crate::graph::{build_graph, extract_patches, PatchConfig, PatchGraph, SigmaRule};
use crate::image::Image;
use crate::io::{self, PgmDepth};
use crate::metrics::{l2_distance, l2_error, min_error, profile, ErrorCurve};
use crate::noise::{add_noise, NoiseSpec};
use crate::phantoms::{generate_phantom, PhantomKind};
use crate::projector::{build_projector, forward_project, Geometry, ProjectionOperator, Sinogram};
use crate::recon::{self, cimmino_spectral_radius, ArtConfig, FbpConfig, RowOrder, SirtConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Fbp,
    Art,
    Sirt,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Fbp => "FBP",
            Method::Art => "ART",
            Method::Sirt => "SIRT",
        }
    }

    fn file_stem(self) -> &'static str {
        match self {
            Method::Fbp => "fbp",
            Method::Art => "art",
            Method::Sirt => "sirt",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fbp" => Ok(Method::Fbp),
            "art" | "kaczmarz" => Ok(Method::Art),
            "sirt" | "cimmino" => Ok(Method::Sirt),
            other => Err(Error::invalid(format!("unknown method `{other}`"))),
        }
    }
}

/// Which sinogram a reconstruction was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    Raw,
    GraphDenoised,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::Raw => "raw",
            Branch::GraphDenoised => "gd",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GammaChoice {
    Fixed(f64),
    /// Try every value; each method keeps the γ with its lowest minimum error.
    Sweep(Vec<f64>),
}

/// Relaxation for SIRT.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SirtLambda {
    Fixed(f64),
    /// `1.9 / ρ(T)`, see [`SirtConfig::with_auto_lambda`].
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub phantom: PhantomKind,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    /// Defaults to `n√2`.
    pub detector_span: Option<f64>,
    pub noise_level: f64,
    pub seed: u64,
    pub patch: PatchConfig,
    pub gamma: GammaChoice,
    pub denoise: DenoiseConfig,
    pub methods: Vec<Method>,
    pub fbp: FbpConfig,
    pub art: ArtConfig,
    pub sirt_lambda: SirtLambda,
    pub sirt_iterations: usize,
    /// Defaults to the centre row.
    pub profile_row: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            phantom: PhantomKind::SheppLogan,
            n: 64,
            p: 95,
            q: 36,
            detector_span: None,
            noise_level: 0.05,
            seed: 1,
            patch: PatchConfig::default(),
            gamma: GammaChoice::Sweep(default_gamma_grid()),
            denoise: DenoiseConfig::default(),
            methods: vec![Method::Fbp, Method::Art],
            fbp: FbpConfig::default(),
            art: ArtConfig::default(),
            sirt_lambda: SirtLambda::Auto,
            sirt_iterations: 200,
            profile_row: None,
            output_dir: None,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

/// Keys accepted by [`ExperimentSpec::set`].
pub const SPEC_KEYS: &[&str] = &[
    "phantom",
    "n",
    "p",
    "q",
    "detector_span",
    "noise",
    "seed",
    "patch_side",
    "k",
    "sigma",
    "gamma",
    "epsilon",
    "max_iters",
    "threshold_mode",
    "methods",
    "fbp_filter",
    "fbp_interpolation",
    "art_lambda",
    "art_sweeps",
    "art_order",
    "sirt_lambda",
    "sirt_iterations",
    "profile_row",
    "output_dir",
];

impl ExperimentSpec {
    /// Parse `key = value` lines on top of the defaults. Blank lines and
    /// lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::invalid(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            spec.set(key.trim(), value.trim())
                .map_err(|e| Error::invalid(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::parse(&text)
    }

    /// Override one field. `gamma` takes a number, a comma separated list
    /// (swept) or `sweep` for the default grid; `sirt_lambda` takes a number
    /// or `auto`; `sigma` takes a number or `auto`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "phantom" => self.phantom = value.parse()?,
            "n" => self.n = parse_num(key, value)?,
            "p" => self.p = parse_num(key, value)?,
            "q" => self.q = parse_num(key, value)?,
            "detector_span" => {
                self.detector_span = if value == "auto" {
                    None
                } else {
                    Some(parse_num(key, value)?)
                }
            }
            "noise" => self.noise_level = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "patch_side" => self.patch.patch_side = parse_num(key, value)?,
            "k" => self.patch.k = parse_num(key, value)?,
            "sigma" => {
                self.patch.sigma_rule = if value == "auto" {
                    SigmaRule::AverageKnnDistance
                } else {
                    SigmaRule::Fixed(parse_num(key, value)?)
                }
            }
            "gamma" => {
                self.gamma = if value == "sweep" {
                    GammaChoice::Sweep(default_gamma_grid())
                } else if value.contains(',') {
                    GammaChoice::Sweep(parse_list(key, value)?)
                } else {
                    GammaChoice::Fixed(parse_num(key, value)?)
                }
            }
            "epsilon" => self.denoise.epsilon = parse_num(key, value)?,
            "max_iters" => self.denoise.max_iters = parse_num(key, value)?,
            "threshold_mode" => {
                self.denoise.threshold_mode = match value {
                    "symmetric" => ThresholdMode::Symmetric,
                    "one_sided" => ThresholdMode::OneSided,
                    _ => return Err(Error::invalid(format!("unknown threshold mode `{value}`"))),
                }
            }
            "methods" => {
                self.methods = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?
            }
            "fbp_filter" => self.fbp.filter = value.parse()?,
            "fbp_interpolation" => self.fbp.interpolation = value.parse()?,
            "art_lambda" => self.art.lambda = parse_num(key, value)?,
            "art_sweeps" => self.art.sweeps = parse_num(key, value)?,
            "art_order" => {
                self.art.row_order = match value.split_once(':') {
                    None if value == "sequential" => RowOrder::Sequential,
                    None if value == "random" => RowOrder::Randomized(self.seed),
                    Some(("random", seed)) => RowOrder::Randomized(parse_num(key, seed)?),
                    _ => return Err(Error::invalid(format!("unknown row order `{value}`"))),
                }
            }
            "sirt_lambda" => {
                self.sirt_lambda = if value == "auto" {
                    SirtLambda::Auto
                } else {
                    SirtLambda::Fixed(parse_num(key, value)?)
                }
            }
            "sirt_iterations" => self.sirt_iterations = parse_num(key, value)?,
            "profile_row" => self.profile_row = Some(parse_num(key, value)?),
            "output_dir" => self.output_dir = Some(PathBuf::from(value)),
            _ => return Err(Error::invalid(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<Geometry> {
        match self.detector_span {
            Some(span) => Geometry::new(self.n, self.p, self.q, span),
            None => Geometry::full_coverage(self.n, self.p, self.q),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::invalid(
                "at least one reconstruction method is required",
            ));
        }
        NoiseSpec::new(self.noise_level, self.seed)?;
        self.patch.validate()?;
        self.denoise.validate()?;
        match &self.gamma {
            GammaChoice::Fixed(g) => DenoiseConfig::with_gamma(*g).validate()?,
            GammaChoice::Sweep(list) => {
                if list.is_empty() {
                    return Err(Error::invalid("gamma sweep list is empty"));
                }
                for &g in list {
                    DenoiseConfig::with_gamma(g).validate()?;
                }
            }
        }
        if !(self.art.lambda > 0.0 && self.art.lambda < 2.0) || self.art.sweeps == 0 {
            return Err(Error::invalid(
                "ART needs lambda in (0, 2) and at least one sweep",
            ));
        }
        if let SirtLambda::Fixed(l) = self.sirt_lambda {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::invalid("SIRT lambda must be positive"));
            }
        }
        if self.sirt_iterations == 0 {
            return Err(Error::invalid("SIRT needs at least one iteration"));
        }
        if let Some(row) = self.profile_row {
            if row >= self.n {
                return Err(Error::invalid(format!("profile row {row} out of range")));
            }
        }
        self.geometry()?;
        Ok(())
    }
}

/// Projection operator and derived constants reused across runs.
pub struct Setup {
    pub operator: ProjectionOperator,
    /// `ρ(T)` for Cimmino relaxation.
    pub cimmino_radius: f64,
}

impl Setup {
    pub fn new(geometry: &Geometry) -> Self {
        let operator = build_projector(geometry);
        let cimmino_radius = cimmino_spectral_radius(&operator);
        Setup {
            operator,
            cimmino_radius,
        }
    }
}

/// One reconstruction's outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub method: Method,
    pub branch: Branch,
    /// γ used for the denoised branch (0 for raw).
    pub gamma: f64,
    pub final_error: f64,
    pub min_error: f64,
    /// 1-based.
    pub argmin_iteration: usize,
    pub curve: ErrorCurve,
    pub image: Image,
    /// `‖input sinogram − clean sinogram‖ / ‖clean sinogram‖`.
    pub sinogram_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub phantom: PhantomKind,
    pub noise_level: f64,
    pub seed: u64,
    pub graph_sigma: f64,
    pub graph_edges: usize,
    pub tau: f64,
    /// Ordered by method, raw before denoised.
    pub results: Vec<MethodResult>,
    /// `(γ, method, min error)` for every swept γ.
    pub sweep_scores: Vec<(f64, Method, f64)>,
    /// Files written, relative to the output directory.
    pub artifacts: Vec<PathBuf>,
}

impl ExperimentSummary {
    pub fn result(&self, method: Method, branch: Branch) -> Option<&MethodResult> {
        self.results
            .iter()
            .find(|r| r.method == method && r.branch == branch)
    }

    /// Machine-readable summary, one line per (method, branch).
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "phantom,noise,seed,method,branch,gamma,final_error,min_error,argmin_iteration,sinogram_rel_error\n",
        );
        for r in &self.results {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:e},{:e},{:e},{},{:e}",
                self.phantom,
                self.noise_level,
                self.seed,
                r.method,
                r.branch.label(),
                r.gamma,
                r.final_error,
                r.min_error,
                r.argmin_iteration,
                r.sinogram_rel_error
            );
        }
        out
    }

    /// Plain-text table.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "phantom {}  relative noise {}  seed {}\ngraph: {} edges, sigma {:.4}, tau {:.4}\n\n",
            self.phantom, self.noise_level, self.seed, self.graph_edges, self.graph_sigma, self.tau
        );
        let _ = writeln!(
            out,
            "{:<10} {:>10} {:>12} {:>12} {:>8} {:>12}",
            "method", "gamma", "final err", "min err", "argmin", "sino relerr"
        );
        for r in &self.results {
            let name = match r.branch {
                Branch::Raw => r.method.label().to_string(),
                Branch::GraphDenoised => format!("{}-GD", r.method.label()),
            };
            let _ = writeln!(
                out,
                "{:<10} {:>10.4} {:>12.4} {:>12.4} {:>8} {:>12.5}",
                name, r.gamma, r.final_error, r.min_error, r.argmin_iteration, r.sinogram_rel_error
            );
        }
        out
    }
}

fn sinogram_rel_error(values: &[f64], clean: &Sinogram) -> f64 {
    let norm = clean.norm();
    if norm == 0.0 {
        return 0.0;
    }
    l2_distance(values, clean.values()) / norm
}

struct Reconstruction {
    curve: ErrorCurve,
    image: Image,
}

fn reconstruct(
    method: Method,
    spec: &ExperimentSpec,
    setup: &Setup,
    data: &[f64],
    truth: &Image,
) -> Result<Reconstruction> {
    let a = &setup.operator;
    let n = truth.n();
    let mut tracker = |x: &[f64]| l2_distance(x, truth.pixels());
    let (image, mut curve) = match method {
        Method::Fbp => {
            let s = Sinogram::new(a.geometry().p(), a.geometry().q(), data.to_vec())?;
            let image = recon::fbp(&s, a.geometry(), &spec.fbp)?;
            let mut curve = ErrorCurve::new("FBP");
            curve.values.push(l2_error(&image, truth)?);
            (image, curve)
        }
        Method::Art => {
            let x0 = vec![0.0; n * n];
            let (x, curve) = recon::art(a, data, &spec.art, &x0, Some(&mut tracker))?;
            (Image::new(n, x)?, curve)
        }
        Method::Sirt => {
            let lambda = match spec.sirt_lambda {
                SirtLambda::Fixed(l) => l,
                SirtLambda::Auto => 1.9 / setup.cimmino_radius,
            };
            let cfg = SirtConfig {
                lambda,
                iterations: spec.sirt_iterations,
            };
            let x0 = vec![0.0; n * n];
            let (x, curve) = recon::sirt(a, data, &cfg, &x0, Some(&mut tracker))?;
            (Image::new(n, x)?, curve)
        }
    };
    curve.method_label = method.label().to_string();
    Ok(Reconstruction { curve, image })
}

fn method_result(
    method: Method,
    branch: Branch,
    gamma: f64,
    rec: Reconstruction,
    sinogram_rel_error: f64,
) -> Result<MethodResult> {
    let (k, min) = min_error(&rec.curve)?;
    Ok(MethodResult {
        method,
        branch,
        gamma,
        final_error: rec.curve.last().unwrap_or(min),
        min_error: min,
        argmin_iteration: k + 1,
        curve: rec.curve,
        image: rec.image,
        sinogram_rel_error,
    })
}

/// Intermediate products of a run, kept for artifact export.
struct RunData {
    truth: Image,
    clean: Sinogram,
    noisy: Sinogram,
    graph: PatchGraph,
    denoised: Vec<(Method, Sinogram)>,
}

/// Run one experiment. Artifacts are written when `spec.output_dir` is set.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentSummary> {
    spec.validate()?;
    let setup = Setup::new(&spec.geometry()?);
    run_with_setup(spec, &setup)
}

/// Like [`run_experiment`], reusing a prebuilt operator.
pub fn run_with_setup(spec: &ExperimentSpec, setup: &Setup) -> Result<ExperimentSummary> {
    spec.validate()?;
    if setup.operator.geometry() != &spec.geometry()? {
        return Err(Error::invalid("setup was built for a different geometry"));
    }
    let (summary, data) = execute(spec, setup)?;
    match &spec.output_dir {
        Some(dir) => write_artifacts(dir, spec, summary, &data),
        None => Ok(summary),
    }
}

fn execute(spec: &ExperimentSpec, setup: &Setup) -> Result<(ExperimentSummary, RunData)> {
    let truth = generate_phantom(spec.phantom, spec.n, spec.seed)?;
    let clean = forward_project(&setup.operator, &truth)?;
    let noisy = add_noise(&clean, &NoiseSpec::new(spec.noise_level, spec.seed)?);
    let patches = extract_patches(&noisy, &spec.patch)?;
    let graph = build_graph(&patches, &spec.patch)?;
    let tau = graph.spectral_norm();

    let mut results = Vec::new();
    let mut sweep_scores = Vec::new();
    let mut denoised = Vec::new();
    let noisy_rel = sinogram_rel_error(noisy.values(), &clean);

    let raw: Vec<MethodResult> = spec
        .methods
        .par_iter()
        .map(|&m| {
            let rec = reconstruct(m, spec, setup, noisy.values(), &truth)?;
            method_result(m, Branch::Raw, 0.0, rec, noisy_rel)
        })
        .collect::<Result<_>>()?;

    let gammas = match &spec.gamma {
        GammaChoice::Fixed(g) => vec![*g],
        GammaChoice::Sweep(list) => list.clone(),
    };
    let runs = denoise_each(noisy.values(), &graph, &gammas, &spec.denoise)?;
    // Every (γ, method) pair, then pick per method.
    let jobs: Vec<(usize, Method)> = (0..gammas.len())
        .flat_map(|g| spec.methods.iter().map(move |&m| (g, m)))
        .collect();
    let recs: Vec<Reconstruction> = jobs
        .par_iter()
        .map(|&(g, m)| reconstruct(m, spec, setup, &runs[g].0, &truth))
        .collect::<Result<_>>()?;

    for (raw_result, &method) in raw.into_iter().zip(&spec.methods) {
        let scores: Vec<(f64, f64)> = jobs
            .iter()
            .zip(&recs)
            .filter(|((_, m), _)| *m == method)
            .map(|(&(g, _), rec)| {
                let (_, min) = min_error(&rec.curve).expect("curves are non-empty");
                (gammas[g], min)
            })
            .collect();
        sweep_scores.extend(scores.iter().map(|&(g, s)| (g, method, s)));
        let best = argmin_score(&scores);
        let idx = jobs
            .iter()
            .position(|&(g, m)| g == best && m == method)
            .expect("job exists");
        let z = &runs[best].0;
        let rec = Reconstruction {
            curve: recs[idx].curve.clone(),
            image: recs[idx].image.clone(),
        };
        let rel = sinogram_rel_error(z, &clean);
        results.push(raw_result);
        results.push(method_result(
            method,
            Branch::GraphDenoised,
            gammas[best],
            rec,
            rel,
        )?);
        denoised.push((method, noisy.with_values(z.clone())?));
    }

    let summary = ExperimentSummary {
        phantom: spec.phantom,
        noise_level: spec.noise_level,
        seed: spec.seed,
        graph_sigma: graph.sigma(),
        graph_edges: graph.edge_count(),
        tau,
        results,
        sweep_scores,
        artifacts: Vec::new(),
    };
    let data = RunData {
        truth,
        clean,
        noisy,
        graph,
        denoised,
    };
    Ok((summary, data))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn write_artifacts(
    dir: &Path,
    spec: &ExperimentSpec,
    mut summary: ExperimentSummary,
    data: &RunData,
) -> Result<ExperimentSummary> {
    ensure_dir(dir)?;
    let mut files: Vec<PathBuf> = Vec::new();
    let mut record = |name: String| -> PathBuf {
        files.push(PathBuf::from(&name));
        dir.join(name)
    };

    io::write_image_raw(&record("phantom.img".into()), &data.truth)?;
    io::write_pgm(&record("phantom.pgm".into()), &data.truth, PgmDepth::Eight)?;
    io::write_sinogram_raw(&record("clean.sino".into()), &data.clean)?;
    io::write_sinogram_csv(&record("clean_sino.csv".into()), &data.clean)?;
    io::write_sinogram_raw(&record("noisy.sino".into()), &data.noisy)?;
    io::write_sinogram_csv(&record("noisy_sino.csv".into()), &data.noisy)?;
    for (method, s) in &data.denoised {
        let stem = method.file_stem();
        io::write_sinogram_raw(&record(format!("denoised_{stem}.sino")), s)?;
        io::write_sinogram_csv(&record(format!("denoised_{stem}_sino.csv")), s)?;
        let r = summary
            .result(*method, Branch::GraphDenoised)
            .expect("denoised result present");
        let (_, trace) = denoise(
            data.noisy.values(),
            &data.graph,
            &DenoiseConfig {
                gamma: r.gamma,
                ..spec.denoise
            },
        )?;
        io::write_trace_csv(&record(format!("trace_{stem}.csv")), &trace)?;
    }
    io::write_edges_csv(&record("graph_edges.csv".into()), &data.graph)?;

    let row = spec.profile_row.unwrap_or(spec.n / 2);
    io::write_profile_csv(
        &record("profile_phantom.csv".into()),
        &profile(&data.truth, row)?,
    )?;
    for r in &summary.results {
        let stem = format!("{}_{}", r.method.file_stem(), r.branch.label());
        io::write_image_raw(&record(format!("recon_{stem}.img")), &r.image)?;
        io::write_pgm(
            &record(format!("recon_{stem}.pgm")),
            &r.image,
            PgmDepth::Eight,
        )?;
        io::write_curve_csv(&record(format!("curve_{stem}.csv")), &r.curve)?;
        io::write_profile_csv(
            &record(format!("profile_{stem}.csv")),
            &profile(&r.image, row)?,
        )?;
    }
    let mut sweep = String::from("gamma,method,min_error\n");
    for (g, m, s) in &summary.sweep_scores {
        let _ = writeln!(sweep, "{g:e},{m},{s:e}");
    }
    write_text(&record("sweep.csv".into()), &sweep)?;
    write_text(&record("summary.txt".into()), &summary.to_text())?;
    write_text(&record("summary.csv".into()), &summary.to_csv())?;
    summary.artifacts = files;
    Ok(summary)
}

/// One configuration of the comparison table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRowSpec {
    pub phantom: PhantomKind,
    pub noise_level: f64,
    /// ART for Shepp-Logan, SIRT for the smooth phantom.
    pub iterative: Method,
}

pub const TABLE1_ROWS: [TableRowSpec; 4] = [
    TableRowSpec {
        phantom: PhantomKind::SheppLogan,
        noise_level: 0.05,
        iterative: Method::Art,
    },
    TableRowSpec {
        phantom: PhantomKind::SheppLogan,
        noise_level: 0.08,
        iterative: Method::Art,
    },
    TableRowSpec {
        phantom: PhantomKind::Smooth,
        noise_level: 0.05,
        iterative: Method::Sirt,
    },
    TableRowSpec {
        phantom: PhantomKind::Smooth,
        noise_level: 0.08,
        iterative: Method::Sirt,
    },
];

/// Mean and sample standard deviation over seeds (std is 0 for one seed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub mean: f64,
    pub std: f64,
}

impl Cell {
    fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let std = if samples.len() > 1 {
            (samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Cell { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub spec: TableRowSpec,
    /// FBP, FBP-GD, iterative, iterative-GD (minimum ℓ2 errors).
    pub cells: [Cell; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub seeds: Vec<u64>,
    pub rows: Vec<TableRow>,
    pub runs: Vec<ExperimentSummary>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "phantom,noise,iterative,fbp_mean,fbp_std,fbp_gd_mean,fbp_gd_std,iter_mean,iter_std,iter_gd_mean,iter_gd_std\n",
        );
        for row in &self.rows {
            let _ = write!(
                out,
                "{},{},{}",
                row.spec.phantom, row.spec.noise_level, row.spec.iterative
            );
            for c in &row.cells {
                let _ = write!(out, ",{:e},{:e}", c.mean, c.std);
            }
            out.push('\n');
        }
        out
    }

    /// Per-run lines concatenated from every experiment summary.
    pub fn runs_csv(&self) -> String {
        let mut out = String::new();
        for (k, run) in self.runs.iter().enumerate() {
            let csv = run.to_csv();
            let body = if k == 0 {
                &csv[..]
            } else {
                csv.split_once('\n').map_or("", |x| x.1)
            };
            out.push_str(body);
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "Comparison of regular and graph denoised (GD) reconstructions\nminimum l2 error, mean ± std over seeds {:?}\n\n",
            self.seeds
        );
        let mut last_iter = None;
        for row in &self.rows {
            if last_iter != Some(row.spec.iterative) {
                let it = row.spec.iterative.label();
                let _ = writeln!(
                    out,
                    "{:<26} {:>16} {:>16} {:>16} {:>16}",
                    "phantom",
                    "FBP",
                    "FBP-GD",
                    it,
                    format!("{it}-GD")
                );
                last_iter = Some(row.spec.iterative);
            }
            let name = format!("{} (RN={})", row.spec.phantom, row.spec.noise_level);
            let _ = write!(out, "{name:<26}");
            for c in &row.cells {
                let _ = write!(out, " {:>16}", format!("{:.3} ± {:.3}", c.mean, c.std));
            }
            out.push('\n');
        }
        out
    }
}

/// Overrides applied to every table run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TableOptions {
    pub base: ExperimentSpec,
    /// Replace the per-row noise levels (e.g. 0 for a degenerate check).
    pub noise_override: Option<f64>,
    /// Write full per-run artifacts under `output_dir/<phantom>_rn<η>_seed<s>`.
    pub artifacts: bool,
}

/// Run the four table configurations for every seed and aggregate.
pub fn run_table1(
    output_dir: Option<&Path>,
    seeds: &[u64],
    options: &TableOptions,
) -> Result<Table> {
    if seeds.is_empty() {
        return Err(Error::invalid("table needs at least one seed"));
    }
    let base = &options.base;
    let geometry = base.geometry()?;
    let setup = Setup::new(&geometry);

    let jobs: Vec<(usize, u64)> = (0..TABLE1_ROWS.len())
        .flat_map(|r| seeds.iter().map(move |&s| (r, s)))
        .collect();
    let runs: Vec<ExperimentSummary> = jobs
        .par_iter()
        .map(|&(r, seed)| {
            let row = TABLE1_ROWS[r];
            let noise_level = options.noise_override.unwrap_or(row.noise_level);
            let output_dir = match (output_dir, options.artifacts) {
                (Some(dir), true) => {
                    Some(dir.join(format!("{}_rn{}_seed{}", row.phantom, noise_level, seed)))
                }
                _ => None,
            };
            let spec = ExperimentSpec {
                phantom: row.phantom,
                noise_level,
                seed,
                methods: vec![Method::Fbp, row.iterative],
                output_dir,
                ..base.clone()
            };
            run_with_setup(&spec, &setup)
        })
        .collect::<Result<_>>()?;

    let rows = TABLE1_ROWS
        .iter()
        .enumerate()
        .map(|(r, &spec)| {
            let mine: Vec<&ExperimentSummary> = jobs
                .iter()
                .zip(&runs)
                .filter(|((row, _), _)| *row == r)
                .map(|(_, run)| run)
                .collect();
            let column = |method: Method, branch: Branch| {
                let samples: Vec<f64> = mine
                    .iter()
                    .map(|run| run.result(method, branch).expect("method ran").min_error)
                    .collect();
                Cell::from_samples(&samples)
            };
            TableRow {
                spec,
                cells: [
                    column(Method::Fbp, Branch::Raw),
                    column(Method::Fbp, Branch::GraphDenoised),
                    column(spec.iterative, Branch::Raw),
                    column(spec.iterative, Branch::GraphDenoised),
                ],
            }
        })
        .collect();

    let table = Table {
        seeds: seeds.to_vec(),
        rows,
        runs,
    };
    if let Some(dir) = output_dir {
        ensure_dir(dir)?;
        write_text(&dir.join("table1.txt"), &table.to_text())?;
        write_text(&dir.join("table1.csv"), &table.to_csv())?;
        write_text(&dir.join("table1_runs.csv"), &table.runs_csv())?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_spec_file() {
        let text = "
# comment
phantom = smooth
n = 32
p = 47
q = 18
noise = 0.08
gamma = 0, 0.5, 2
methods = fbp, sirt
sirt_lambda = auto
art_order = random:5
";
        let spec = ExperimentSpec::parse(text).unwrap();
        assert_eq!(spec.phantom, PhantomKind::Smooth);
        assert_eq!((spec.n, spec.p, spec.q), (32, 47, 18));
        assert_eq!(spec.gamma, GammaChoice::Sweep(vec![0.0, 0.5, 2.0]));
        assert_eq!(spec.methods, vec![Method::Fbp, Method::Sirt]);
        assert_eq!(spec.art.row_order, RowOrder::Randomized(5));
        spec.validate().unwrap();
    }

    #[test]
    fn parse_errors() {
        assert!(ExperimentSpec::parse("n 32").is_err());
        assert!(ExperimentSpec::parse("colour = red").is_err());
        assert!(ExperimentSpec::parse("n = many").is_err());
        let spec = ExperimentSpec::parse("methods = ").unwrap();
        assert!(spec.validate().is_err());
        let spec = ExperimentSpec::parse("art_lambda = 2.5").unwrap();
        assert!(spec.validate().is_err());
    }

    #[test]
    fn every_documented_key_is_accepted() {
        let values = [
            ("phantom", "grains"),
            ("n", "16"),
            ("p", "23"),
            ("q", "8"),
            ("detector_span", "auto"),
            ("noise", "0.05"),
            ("seed", "4"),
            ("patch_side", "3"),
            ("k", "4"),
            ("sigma", "auto"),
            ("gamma", "sweep"),
            ("epsilon", "1e-5"),
            ("max_iters", "100"),
            ("threshold_mode", "one_sided"),
            ("methods", "fbp,art,sirt"),
            ("fbp_filter", "cosine"),
            ("fbp_interpolation", "nearest"),
            ("art_lambda", "0.5"),
            ("art_sweeps", "3"),
            ("art_order", "sequential"),
            ("sirt_lambda", "2.0"),
            ("sirt_iterations", "4"),
            ("profile_row", "3"),
            ("output_dir", "/tmp/x"),
        ];
        assert_eq!(values.len(), SPEC_KEYS.len());
        let mut spec = ExperimentSpec::default();
        for (k, v) in values {
            assert!(SPEC_KEYS.contains(&k));
            spec.set(k, v).unwrap();
        }
        spec.validate().unwrap();
    }

    #[test]
    fn small_run_is_deterministic() {
        let spec = ExperimentSpec {
            n: 16,
            p: 23,
            q: 8,
            patch: PatchConfig {
                k: 4,
                ..PatchConfig::default()
            },
            gamma: GammaChoice::Sweep(vec![0.0, 0.1, 1.0]),
            methods: vec![Method::Fbp, Method::Art, Method::Sirt],
            art: ArtConfig {
                sweeps: 5,
                ..ArtConfig::default()
            },
            sirt_iterations: 5,
            ..ExperimentSpec::default()
        };
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.results.len(), 6);
        for m in [Method::Fbp, Method::Art, Method::Sirt] {
            let raw = a.result(m, Branch::Raw).unwrap();
            let gd = a.result(m, Branch::GraphDenoised).unwrap();
            // γ = 0 is in the sweep, so denoising can never lose.
            assert!(gd.min_error <= raw.min_error);
        }
        assert_eq!(a.sweep_scores.len(), 9);
    }

    #[test]
    fn cell_statistics() {
        let c = Cell::from_samples(&[1.0, 2.0, 3.0]);
        assert_eq!(c.mean, 2.0);
        assert_eq!(c.std, 1.0);
        assert_eq!(Cell::from_samples(&[4.0]).std, 0.0);
    }
}
