use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use graphtomo::io::{self, PgmDepth};
use graphtomo::pipeline::{run_experiment, run_table1, ExperimentSpec, TableOptions, SPEC_KEYS};
use graphtomo::recon::{self, ArtConfig, FbpConfig, Filter, Interpolation, RowOrder, SirtConfig};
use graphtomo::{
    add_noise, build_graph, build_projector, denoise, extract_patches, forward_project,
    generate_phantom, DenoiseConfig, Error, Geometry, Image, NoiseSpec, PatchConfig, PhantomKind,
    SigmaRule, ThresholdMode,
};

const GAMMA_HELP: &str =
    "Regularization weight γ. The graph TV term sums |√W_ij (z_j − z_i)| over each \
undirected edge once, so γ is twice the value a double-counted sum over ordered pairs would need.";

#[derive(Parser)]
#[command(
    name = "graphtomo",
    version,
    about = "Graph total-variation sinogram denoising and tomographic reconstruction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a test phantom.
    Phantom(PhantomArgs),
    /// Forward-project an image into a parallel-beam sinogram.
    Project(ProjectArgs),
    /// Add relative Gaussian noise to a sinogram.
    Noise(NoiseArgs),
    /// Denoise a sinogram by graph total variation on its patch graph.
    Denoise(DenoiseArgs),
    /// Reconstruct an image from a sinogram with FBP, ART or SIRT.
    Reconstruct(ReconstructArgs),
    /// Run the full raw-versus-denoised comparison for one configuration.
    Experiment(ExperimentArgs),
    /// Run the four-row comparison table over several seeds.
    Table1(TableArgs),
}

#[derive(Args)]
struct PhantomArgs {
    /// shepp-logan, smooth, binary, grains or fourphases.
    #[arg(long, default_value = "shepp-logan")]
    kind: PhantomKind,
    /// Image side in pixels.
    #[arg(short, long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Raw `IMG` output.
    #[arg(short, long)]
    out: PathBuf,
    /// Also write an 8-bit PGM preview.
    #[arg(long)]
    pgm: Option<PathBuf>,
}

#[derive(Args)]
struct GeometryArgs {
    /// Rays per angle.
    #[arg(short, long, default_value_t = 95)]
    p: usize,
    /// Angles over [0°, 180°).
    #[arg(short, long, default_value_t = 36)]
    q: usize,
    /// Detector width in pixel units (default n√2).
    #[arg(long)]
    span: Option<f64>,
}

impl GeometryArgs {
    fn geometry(&self, n: usize) -> graphtomo::Result<Geometry> {
        match self.span {
            Some(span) => Geometry::new(n, self.p, self.q, span),
            None => Geometry::full_coverage(n, self.p, self.q),
        }
    }
}

#[derive(Args)]
struct ProjectArgs {
    /// Raw `IMG` input.
    #[arg(short, long)]
    image: PathBuf,
    #[command(flatten)]
    geometry: GeometryArgs,
    /// Raw `SINO` output.
    #[arg(short, long)]
    out: PathBuf,
    /// Also write the sinogram as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(short, long)]
    sino: PathBuf,
    /// Relative noise level ‖e‖/‖s‖.
    #[arg(short, long)]
    level: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ThresholdArg {
    Symmetric,
    OneSided,
}

#[derive(Args)]
struct DenoiseArgs {
    #[arg(short, long)]
    sino: PathBuf,
    #[arg(short, long, help = GAMMA_HELP)]
    gamma: f64,
    /// Odd patch side.
    #[arg(long, default_value_t = 3)]
    patch_side: usize,
    /// Nearest neighbours per patch.
    #[arg(short, long, default_value_t = 10)]
    k: usize,
    /// Gaussian width; defaults to the mean neighbour distance.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, value_enum, default_value = "symmetric")]
    threshold_mode: ThresholdArg,
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Objective per iteration as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Patch graph edge list as CSV.
    #[arg(long)]
    edges: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Fbp,
    Art,
    Sirt,
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(short, long)]
    sino: PathBuf,
    /// Image side.
    #[arg(short, long, default_value_t = 64)]
    n: usize,
    /// Detector width in pixel units (default n√2).
    #[arg(long)]
    span: Option<f64>,
    #[arg(short, long, value_enum, default_value = "fbp")]
    method: MethodArg,
    /// FBP filter: ram-lak, shepp-logan or cosine.
    #[arg(long, default_value = "ram-lak")]
    filter: Filter,
    /// FBP interpolation: linear or nearest.
    #[arg(long, default_value = "linear")]
    interpolation: Interpolation,
    /// Relaxation. ART default 0.25; SIRT default 1.9/ρ when omitted.
    #[arg(long)]
    lambda: Option<f64>,
    /// ART sweeps or SIRT iterations.
    #[arg(long)]
    iterations: Option<usize>,
    /// Randomize the ART row order with this seed.
    #[arg(long)]
    shuffle: Option<u64>,
    /// Ground truth `IMG`; enables the per-iteration error curve.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Error curve CSV (requires --truth).
    #[arg(long, requires = "truth")]
    curve: Option<PathBuf>,
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long)]
    pgm: Option<PathBuf>,
}

#[derive(Args)]
struct SpecArgs {
    /// Spec file of `key = value` lines.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Override one spec key (repeatable), applied after all other flags.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    phantom: Option<String>,
    #[arg(short, long)]
    n: Option<String>,
    #[arg(short, long)]
    p: Option<String>,
    #[arg(short, long)]
    q: Option<String>,
    /// Relative noise level.
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// A number, a comma separated list to sweep, or `sweep` for the default grid.
    #[arg(short, long, long_help = GAMMA_HELP)]
    gamma: Option<String>,
    /// Comma separated subset of fbp, art, sirt.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    art_sweeps: Option<String>,
    #[arg(long)]
    sirt_iterations: Option<String>,
}

impl SpecArgs {
    fn build(&self) -> graphtomo::Result<ExperimentSpec> {
        let mut spec = match &self.spec {
            Some(path) => ExperimentSpec::from_file(path)?,
            None => ExperimentSpec::default(),
        };
        let flags = [
            ("phantom", &self.phantom),
            ("n", &self.n),
            ("p", &self.p),
            ("q", &self.q),
            ("noise", &self.noise),
            ("seed", &self.seed),
            ("gamma", &self.gamma),
            ("methods", &self.methods),
            ("art_sweeps", &self.art_sweeps),
            ("sirt_iterations", &self.sirt_iterations),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                spec.set(key, v)?;
            }
        }
        for kv in &self.sets {
            let (key, value) = kv.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("--set expects KEY=VALUE, got `{kv}`"))
            })?;
            spec.set(key.trim(), value.trim())?;
        }
        Ok(spec)
    }
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Output directory for all artifacts.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TableArgs {
    /// Comma separated seeds.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    seeds: Vec<u64>,
    #[arg(short, long)]
    out: PathBuf,
    /// Replace every row's noise level.
    #[arg(long)]
    noise_override: Option<f64>,
    /// Write full per-run artifacts into subdirectories.
    #[arg(long)]
    artifacts: bool,
    /// Base settings shared by all runs.
    #[command(flatten)]
    spec: SpecArgs,
}

fn write_pgm_opt(path: &Option<PathBuf>, img: &Image) -> graphtomo::Result<()> {
    match path {
        Some(p) => io::write_pgm(p, img, PgmDepth::Eight),
        None => Ok(()),
    }
}

fn write_csv_opt(path: &Option<PathBuf>, s: &graphtomo::Sinogram) -> graphtomo::Result<()> {
    match path {
        Some(p) => io::write_sinogram_csv(p, s),
        None => Ok(()),
    }
}

fn phantom(args: &PhantomArgs) -> graphtomo::Result<()> {
    let img = generate_phantom(args.kind, args.n, args.seed)?;
    io::write_image_raw(&args.out, &img)?;
    write_pgm_opt(&args.pgm, &img)
}

fn project(args: &ProjectArgs) -> graphtomo::Result<()> {
    let img = io::read_image_raw(&args.image)?;
    let a = build_projector(&args.geometry.geometry(img.n())?);
    let s = forward_project(&a, &img)?;
    io::write_sinogram_raw(&args.out, &s)?;
    write_csv_opt(&args.csv, &s)
}

fn noise(args: &NoiseArgs) -> graphtomo::Result<()> {
    let s = io::read_sinogram_raw(&args.sino)?;
    let noisy = add_noise(&s, &NoiseSpec::new(args.level, args.seed)?);
    io::write_sinogram_raw(&args.out, &noisy)?;
    write_csv_opt(&args.csv, &noisy)
}

fn denoise_cmd(args: &DenoiseArgs) -> graphtomo::Result<()> {
    let s = io::read_sinogram_raw(&args.sino)?;
    let patch = PatchConfig {
        patch_side: args.patch_side,
        k: args.k,
        sigma_rule: args
            .sigma
            .map_or(SigmaRule::AverageKnnDistance, SigmaRule::Fixed),
    };
    let graph = build_graph(&extract_patches(&s, &patch)?, &patch)?;
    let cfg = DenoiseConfig {
        gamma: args.gamma,
        epsilon: args.epsilon,
        max_iters: args.max_iters,
        threshold_mode: match args.threshold_mode {
            ThresholdArg::Symmetric => ThresholdMode::Symmetric,
            ThresholdArg::OneSided => ThresholdMode::OneSided,
        },
    };
    let (z, trace) = denoise(s.values(), &graph, &cfg)?;
    let out = s.with_values(z)?;
    io::write_sinogram_raw(&args.out, &out)?;
    write_csv_opt(&args.csv, &out)?;
    if let Some(p) = &args.trace {
        io::write_trace_csv(p, &trace)?;
    }
    if let Some(p) = &args.edges {
        io::write_edges_csv(p, &graph)?;
    }
    eprintln!(
        "{} edges, sigma {:.4}, tau {:.4}; {} iterations{}",
        graph.edge_count(),
        graph.sigma(),
        graph.spectral_norm(),
        trace.iterations_run,
        if trace.converged {
            ""
        } else {
            " (not converged)"
        }
    );
    Ok(())
}

fn reconstruct(args: &ReconstructArgs) -> graphtomo::Result<()> {
    let s = io::read_sinogram_raw(&args.sino)?;
    let geometry = match args.span {
        Some(span) => Geometry::new(args.n, s.p(), s.q(), span)?,
        None => Geometry::full_coverage(args.n, s.p(), s.q())?,
    };
    let truth = args.truth.as_deref().map(io::read_image_raw).transpose()?;
    if let Some(t) = &truth {
        if t.n() != args.n {
            return Err(Error::InvalidArgument(format!(
                "truth image has side {}, expected {}",
                t.n(),
                args.n
            )));
        }
    }
    let x0 = vec![0.0; args.n * args.n];
    let mut error_to_truth = |x: &[f64]| {
        let t = truth.as_ref().expect("tracker only installed with truth");
        x.iter()
            .zip(t.pixels())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let (img, curve) = match args.method {
        MethodArg::Fbp => {
            let cfg = FbpConfig {
                filter: args.filter,
                interpolation: args.interpolation,
            };
            (recon::fbp(&s, &geometry, &cfg)?, None)
        }
        MethodArg::Art => {
            let a = build_projector(&geometry);
            let defaults = ArtConfig::default();
            let cfg = ArtConfig {
                lambda: args.lambda.unwrap_or(defaults.lambda),
                sweeps: args.iterations.unwrap_or(defaults.sweeps),
                row_order: args
                    .shuffle
                    .map_or(RowOrder::Sequential, RowOrder::Randomized),
            };
            let tracker = truth
                .is_some()
                .then_some(&mut error_to_truth as &mut dyn FnMut(&[f64]) -> f64);
            let (x, curve) = recon::art(&a, s.values(), &cfg, &x0, tracker)?;
            (Image::new(args.n, x)?, Some(curve))
        }
        MethodArg::Sirt => {
            let a = build_projector(&geometry);
            let iterations = args.iterations.unwrap_or(SirtConfig::default().iterations);
            let cfg = match args.lambda {
                Some(lambda) => SirtConfig { lambda, iterations },
                None => SirtConfig::with_auto_lambda(&a, iterations),
            };
            let tracker = truth
                .is_some()
                .then_some(&mut error_to_truth as &mut dyn FnMut(&[f64]) -> f64);
            let (x, curve) = recon::sirt(&a, s.values(), &cfg, &x0, tracker)?;
            (Image::new(args.n, x)?, Some(curve))
        }
    };
    io::write_image_raw(&args.out, &img)?;
    write_pgm_opt(&args.pgm, &img)?;
    if let (Some(t), Some(path)) = (&truth, &args.curve) {
        let curve = match curve {
            Some(c) => c,
            None => {
                let mut c = graphtomo::ErrorCurve::new("FBP");
                c.values.push(graphtomo::l2_error(&img, t)?);
                c
            }
        };
        io::write_curve_csv(path, &curve)?;
    }
    if let Some(t) = &truth {
        eprintln!("l2 error {:.6}", graphtomo::l2_error(&img, t)?);
    }
    Ok(())
}

fn experiment(args: &ExperimentArgs) -> graphtomo::Result<()> {
    let mut spec = args.spec.build()?;
    if let Some(out) = &args.out {
        spec.output_dir = Some(out.clone());
    }
    let summary = run_experiment(&spec)?;
    print!("{}", summary.to_text());
    if let Some(dir) = &spec.output_dir {
        println!(
            "\n{} files written to {}",
            summary.artifacts.len(),
            dir.display()
        );
    }
    Ok(())
}

fn table1(args: &TableArgs) -> graphtomo::Result<()> {
    let options = TableOptions {
        base: args.spec.build()?,
        noise_override: args.noise_override,
        artifacts: args.artifacts,
    };
    let table = run_table1(Some(Path::new(&args.out)), &args.seeds, &options)?;
    print!("{}", table.to_text());
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_) | Error::Format(_) => 2,
        Error::Io { .. } => 3,
        Error::Divergence(_) => 4,
    }
}

fn main() -> ExitCode {
    let keys = format!("Spec keys: {}", SPEC_KEYS.join(", "));
    let command = Cli::command()
        .mut_subcommand("experiment", |c| c.after_help(keys.clone()))
        .mut_subcommand("table1", |c| c.after_help(keys.clone()));
    let cli = match Cli::from_arg_matches(&command.get_matches()) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let result = match &cli.command {
        Command::Phantom(a) => phantom(a),
        Command::Project(a) => project(a),
        Command::Noise(a) => noise(a),
        Command::Denoise(a) => denoise_cmd(a),
        Command::Reconstruct(a) => reconstruct(a),
        Command::Experiment(a) => experiment(a),
        Command::Table1(a) => table1(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
