use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fvml_conc::fvml::{SeededRng, SphereModel};
use fvml_conc::inference::{homogeneity_test, one_sample_test, rayleigh_test, MultiSampleDesign, TestReport};
use fvml_conc::montecarlo::{self, Design, McConfig, PowerCurve, RunManifest};
use fvml_conc::power::{power_homogeneity, power_one_sample, rayleigh_curves, write_curves_csv, TheoreticalCurve};
use fvml_conc::sphere::{SphericalSample, UnitVector};

mod dataset;
mod failure;
mod svg;

use failure::{io_context, Failure};

#[derive(Parser)]
#[command(name = "fvml", version, about = "Concentration tests for directional data on the hypersphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a FvML (or uniform, with --kappa 0) sample and write it as CSV.
    Sample(SampleArgs),
    /// Run a test on CSV data and print the report as JSON.
    #[command(subcommand)]
    Test(TestCommand),
    /// Tabulate asymptotic power curves.
    #[command(subcommand)]
    Power(PowerCommand),
    /// Run a Monte Carlo power study.
    Mc(McArgs),
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    kappa: f64,
    /// Mean direction: `e1` or comma-separated coordinates (renormalized).
    #[arg(long, default_value = "e1")]
    theta: String,
    #[arg(long)]
    n: usize,
    #[arg(long, env = "FVML_SEED", default_value_t = 1)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum TestCommand {
    /// Score test of a specified concentration, location unknown.
    OneSample {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        kappa0: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Rayleigh test of uniformity.
    Uniformity {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Test of a common concentration across samples. Give one file per
    /// sample, or files with a `sample` label column.
    Homogeneity {
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
}

#[derive(Args)]
struct CurveOutput {
    /// Grid of local shifts: `start:stop:step` or a comma-separated list.
    #[arg(long, default_value = "0:10:1", value_parser = parse_grid)]
    grid: Grid,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// CSV output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Subcommand)]
enum PowerCommand {
    /// Rayleigh test against FvML(n^{-1/2} scale c, theta).
    Rayleigh {
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
        k: Vec<usize>,
        #[arg(long, default_value_t = 0.5)]
        scale: f64,
        /// `fig1`: dimensions 2..5, c = 0..10, scale 1/2.
        #[arg(long, value_enum)]
        preset: Option<PowerPreset>,
        #[command(flatten)]
        output: CurveOutput,
    },
    /// One-sample test against kappa0 + n^{-1/2} c.
    OneSample {
        #[arg(long, value_delimiter = ',', default_value = "2")]
        k: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        kappa0: Vec<f64>,
        #[command(flatten)]
        output: CurveOutput,
    },
    /// Homogeneity test against kappa_i = kappa + n_i^{-1/2} c d_i.
    Homogeneity {
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        kappa: Vec<f64>,
        /// Sample-size ratios r_i (summing to one).
        #[arg(long, value_delimiter = ',', required = true)]
        ratios: Vec<f64>,
        /// Shift direction d_i, one entry per sample.
        #[arg(long, value_delimiter = ',', required = true)]
        direction: Vec<f64>,
        #[command(flatten)]
        output: CurveOutput,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PowerPreset {
    Fig1,
}

#[derive(Clone, Copy, ValueEnum)]
enum McPreset {
    Fig2,
    Fig2Caption,
    Fig3,
    Fig4,
}

impl McPreset {
    fn name(self) -> &'static str {
        match self {
            McPreset::Fig2 => "fig2",
            McPreset::Fig2Caption => "fig2-caption",
            McPreset::Fig3 => "fig3",
            McPreset::Fig4 => "fig4",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DesignKind {
    Rayleigh,
    Homogeneity,
}

#[derive(Args)]
struct McArgs {
    #[arg(long, value_enum, conflicts_with_all = ["design", "from_manifest"])]
    preset: Option<McPreset>,
    #[arg(long, value_enum, conflicts_with = "from_manifest")]
    design: Option<DesignKind>,
    /// Replay the campaign recorded in a manifest.
    #[arg(long)]
    from_manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Rayleigh sample sizes.
    #[arg(long, value_delimiter = ',', default_value = "200")]
    n: Vec<usize>,
    /// Homogeneity base concentrations.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    kappa: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    n1: usize,
    #[arg(long, default_value_t = 150)]
    n2: usize,
    /// Concentration added to sample 2 per unit of c.
    #[arg(long, default_value_t = 0.1)]
    shift_step: f64,
    #[arg(long, value_parser = parse_grid)]
    grid: Option<Grid>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, env = "FVML_SEED", default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    alpha: Option<f64>,
    /// Thread cap; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// CSV output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Clone, Debug)]
struct Grid(Vec<f64>);

fn parse_grid(spec: &str) -> Result<Grid, String> {
    let values: Vec<f64> = if spec.contains(':') {
        let parts: Vec<f64> = spec
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number")))
            .collect::<Result<_, _>>()?;
        let [start, stop, step] = parts[..] else {
            return Err("range grids are written start:stop:step".into());
        };
        if !(step > 0.0 && step.is_finite() && start.is_finite() && stop.is_finite() && stop >= start) {
            return Err("need finite start <= stop and step > 0".into());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=count).map(|i| start + i as f64 * step).collect()
    } else {
        spec.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number")))
            .collect::<Result<_, _>>()?
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err("grid must contain finite values".into());
    }
    Ok(Grid(values))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sample(args) => cmd_sample(args),
        Command::Test(cmd) => cmd_test(cmd),
        Command::Power(cmd) => cmd_power(cmd),
        Command::Mc(args) => cmd_mc(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(io_context(p))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(io_context(path))
}

fn parse_theta(spec: &str, k: usize) -> Result<UnitVector, Failure> {
    if let Some(index) = spec.strip_prefix('e').and_then(|i| i.parse::<usize>().ok()) {
        if index == 0 || index > k {
            return Err(Failure::Usage(format!("theta `{spec}` needs an index in 1..={k}")));
        }
        return Ok(UnitVector::basis(k, index - 1)?);
    }
    let coords: Vec<f64> = spec
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::Usage(format!("theta `{spec}` is neither e<i> nor a list of numbers")))?;
    if coords.len() != k {
        return Err(Failure::Usage(format!("theta has {} coordinates, expected k = {k}", coords.len())));
    }
    UnitVector::normalize(coords).map_err(|e| Failure::Usage(format!("theta: {e}")))
}

fn cmd_sample(args: SampleArgs) -> Result<(), Failure> {
    if args.k < 2 {
        return Err(Failure::Usage("k must be >= 2".into()));
    }
    if !(args.kappa.is_finite() && args.kappa >= 0.0) {
        return Err(Failure::Usage(format!("kappa must be >= 0, got {}", args.kappa)));
    }
    let theta = parse_theta(&args.theta, args.k)?;
    let model = SphereModel::new(args.kappa, &theta)?;
    let sample = model.sample(args.n, &mut SeededRng::new(args.seed, 0))?;
    dataset::write(output(args.out.as_deref())?, &sample)
}

fn single_sample(path: &Path) -> Result<SphericalSample, Failure> {
    let mut groups = dataset::read_path(path)?.groups()?;
    if groups.len() != 1 {
        return Err(Failure::Data(format!(
            "{}: expected a single sample, found {} labels",
            path.display(),
            groups.len()
        )));
    }
    Ok(groups.remove(0).1)
}

fn cmd_test(cmd: TestCommand) -> Result<(), Failure> {
    let report: TestReport = match cmd {
        TestCommand::OneSample { input, kappa0, alpha } => {
            if !(kappa0.is_finite() && kappa0 > 0.0) {
                return Err(Failure::Usage(format!("--kappa0 must be > 0, got {kappa0}")));
            }
            one_sample_test(&single_sample(&input)?, kappa0, alpha)?
        }
        TestCommand::Uniformity { input, alpha } => rayleigh_test(&single_sample(&input)?, alpha)?,
        TestCommand::Homogeneity { input, alpha } => {
            let mut samples = Vec::new();
            for path in &input {
                samples.extend(dataset::read_path(path)?.groups()?.into_iter().map(|(_, s)| s));
            }
            if samples.len() < 2 {
                return Err(Failure::Data("homogeneity needs at least two samples".into()));
            }
            homogeneity_test(&MultiSampleDesign::new(samples)?, alpha)?
        }
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::Io(e.to_string()))?;
    println!("{json}");
    Ok(())
}

fn cmd_power(cmd: PowerCommand) -> Result<(), Failure> {
    let (curves, title, out) = match cmd {
        PowerCommand::Rayleigh { k, scale, preset, output } => {
            let (k, scale, grid) = match preset {
                Some(PowerPreset::Fig1) => (vec![2, 3, 4, 5], 0.5, montecarlo::default_grid()),
                None => (k, scale, output.grid.0.clone()),
            };
            let curves = rayleigh_curves(&k, &grid, scale, output.alpha)?;
            (curves, "Rayleigh test: asymptotic power", output)
        }
        PowerCommand::OneSample { k, kappa0, output } => {
            let mut curves = Vec::new();
            for &dim in &k {
                for &kap in &kappa0 {
                    curves.push(TheoreticalCurve::tabulate(format!("k={dim} kappa0={kap}"), &output.grid.0, |c| {
                        power_one_sample(dim, kap, c, output.alpha)
                    })?);
                }
            }
            (curves, "One-sample test: asymptotic power", output)
        }
        PowerCommand::Homogeneity { k, kappa, ratios, direction, output } => {
            if direction.len() != ratios.len() {
                return Err(Failure::Usage(format!(
                    "--direction has {} entries but --ratios has {}",
                    direction.len(),
                    ratios.len()
                )));
            }
            let curves = kappa
                .iter()
                .map(|&kap| {
                    TheoreticalCurve::tabulate(format!("kappa={kap}"), &output.grid.0, |c| {
                        let shift: Vec<f64> = direction.iter().map(|d| c * d).collect();
                        power_homogeneity(k, kap, &ratios, &shift, output.alpha)
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            (curves, "Homogeneity test: asymptotic power", output)
        }
    };
    write_curves_csv(output(out.out.as_deref())?, &curves)?;
    if let Some(path) = &out.svg {
        let series: Vec<svg::Series> = curves
            .iter()
            .enumerate()
            .map(|(i, c)| svg::Series { label: c.label.clone(), points: c.points.clone(), dashed: false, colour: i })
            .collect();
        write_file(path, &svg::render(title, "c", &series))?;
    }
    Ok(())
}

fn mc_configs(args: &McArgs) -> Result<(Option<String>, Vec<McConfig>), Failure> {
    if let Some(path) = &args.from_manifest {
        let text = std::fs::read_to_string(path).map_err(io_context(path))?;
        let manifest: RunManifest = serde_json::from_str(&text)
            .map_err(|e| Failure::Usage(format!("{}: invalid manifest: {e}", path.display())))?;
        return Ok((manifest.preset, manifest.configs));
    }
    let (preset, mut configs) = match (args.preset, args.design) {
        (Some(p), _) => (Some(p.name().to_string()), montecarlo::preset(p.name(), args.seed)?),
        (None, Some(DesignKind::Rayleigh)) => (
            None,
            args.n.iter().map(|&n| McConfig::new(args.k, Design::Rayleigh { n }, args.seed)).collect(),
        ),
        (None, Some(DesignKind::Homogeneity)) => (
            None,
            args.kappa
                .iter()
                .map(|&kappa| {
                    let design = Design::Homogeneity { kappa, n1: args.n1, n2: args.n2, shift_step: args.shift_step };
                    McConfig::new(args.k, design, args.seed)
                })
                .collect(),
        ),
        (None, None) => return Err(Failure::Usage("give --preset, --design or --from-manifest".into())),
    };
    for cfg in &mut configs {
        if let Some(reps) = args.reps {
            cfg.replications = reps;
        }
        if let Some(alpha) = args.alpha {
            cfg.alpha = alpha;
        }
        if let Some(grid) = &args.grid {
            cfg.grid = grid.0.clone();
        }
    }
    Ok((preset, configs))
}

fn curve_label(cfg: &McConfig) -> String {
    match cfg.design {
        Design::Rayleigh { n } => format!("n={n}"),
        Design::Homogeneity { kappa, .. } => format!("kappa={kappa}"),
    }
}

fn cmd_mc(args: McArgs) -> Result<(), Failure> {
    let (preset, configs) = mc_configs(&args)?;
    if args.workers == Some(0) {
        return Err(Failure::Usage("--workers must be >= 1".into()));
    }
    let curves = configs
        .iter()
        .map(|cfg| {
            let mut run = cfg.clone();
            run.workers = args.workers;
            montecarlo::run(&run).map(|mut curve| {
                curve.config.workers = None;
                curve
            })
        })
        .collect::<Result<Vec<PowerCurve>, _>>()?;

    montecarlo::write_csv(output(args.out.as_deref())?, &curves)?;
    if let Some(path) = &args.manifest {
        let manifest = RunManifest::new(preset, configs);
        let json = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Io(e.to_string()))?;
        write_file(path, &(json + "\n"))?;
    }
    if let Some(path) = &args.svg {
        let mut series = Vec::new();
        for (i, curve) in curves.iter().enumerate() {
            let label = curve_label(&curve.config);
            series.push(svg::Series {
                label: label.clone(),
                points: curve.points.iter().map(|p| (p.c, p.p_hat)).collect(),
                dashed: false,
                colour: i,
            });
            let theory: Vec<(f64, f64)> = curve.points.iter().filter_map(|p| p.p_theory.map(|t| (p.c, t))).collect();
            if !theory.is_empty() {
                series.push(svg::Series { label: format!("{label} (asymptotic)"), points: theory, dashed: true, colour: i });
            }
        }
        let title = match curves.first().map(|c| &c.config.design) {
            Some(Design::Homogeneity { .. }) => "Homogeneity test: empirical power",
            _ => "Rayleigh test: empirical power",
        };
        write_file(path, &svg::render(title, "c", &series))?;
    }
    Ok(())
}
