//! The `run`, `generate` and `classify` subcommands.

use std::fmt;
use std::fs;
use std::io::BufWriter;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Subcommand};
use elastica_core::io::{
    apply_env_overrides, class_label, curve_to_string, parse_config, parse_curve_file, render_svg,
    write_report, CurveFile,
};
use elastica_core::{
    classify, construct_gamma_epsilon, perturb, run, sample_circle, sample_figure_eight,
    whitney_index, ClassTag, DescentParams, ElasticaError, PolyCurve,
};

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_ENGINE: u8 = 3;
pub const EXIT_UNCONVERGED: u8 = 4;

/// An error with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code,
            error: error.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

fn engine_code(e: &ElasticaError) -> u8 {
    match e {
        ElasticaError::CuspDetected { .. }
        | ElasticaError::IndexBroken { .. }
        | ElasticaError::ContradictoryFit => EXIT_ENGINE,
        _ => EXIT_FAILURE,
    }
}

fn input_code(e: &ElasticaError) -> u8 {
    match e {
        ElasticaError::CuspDetected { .. } | ElasticaError::IndexBroken { .. } => EXIT_ENGINE,
        _ => EXIT_PARSE,
    }
}

/// Descent parameters: defaults, then `--config`, then `ELASTICA_*`
/// variables, then flags.
#[derive(Debug, Clone, Default, Args)]
pub struct ParamFlags {
    /// `key = value` file with descent parameters.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Vertices after resampling (default 100).
    #[arg(long)]
    pub n: Option<usize>,
    /// Straightening coefficient (default 0.2).
    #[arg(long)]
    pub c1: Option<f64>,
    /// Resilience coefficient (default 0.2).
    #[arg(long)]
    pub c2: Option<f64>,
    /// Finite-difference step, relative to the mean edge.
    #[arg(long)]
    pub fd_step: Option<f64>,
    /// Largest relative displacement that counts as quiet.
    #[arg(long)]
    pub quiescence_tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<u64>,
    /// Iterations between snapshots (SVG frames, session frames).
    #[arg(long)]
    pub snapshot_every: Option<u64>,
}

impl ParamFlags {
    pub fn resolve<I>(&self, env: I) -> Result<DescentParams, Failure>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut p = DescentParams::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))
                .map_err(|e| Failure::new(EXIT_PARSE, e))?;
            p = parse_config(&text, &p)
                .with_context(|| format!("config {}", path.display()))
                .map_err(|e| Failure::new(EXIT_PARSE, e))?;
        }
        p = apply_env_overrides(&p, env)
            .context("environment")
            .map_err(|e| Failure::new(EXIT_PARSE, e))?;
        if let Some(v) = self.n {
            p.n = v;
        }
        if let Some(v) = self.c1 {
            p.c1 = v;
        }
        if let Some(v) = self.c2 {
            p.c2 = v;
        }
        if let Some(v) = self.fd_step {
            p.fd_step = v;
        }
        if let Some(v) = self.quiescence_tol {
            p.quiescence_tol = v;
        }
        if let Some(v) = self.max_iters {
            p.max_iters = v;
        }
        if let Some(v) = self.snapshot_every {
            p.snapshot_every = v;
        }
        p.validate().map_err(|e| Failure::new(EXIT_PARSE, e))?;
        Ok(p)
    }
}

fn load_curve_file(path: &Path) -> Result<CurveFile, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(|e| Failure::new(EXIT_PARSE, e))?;
    parse_curve_file(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(|e| Failure::new(EXIT_PARSE, e))
}

fn load_polygon(path: &Path, n: usize) -> Result<PolyCurve, Failure> {
    let file = load_curve_file(path)?;
    file.to_polygon(n).map_err(|e| {
        let code = input_code(&e);
        Failure::new(code, anyhow!(e).context(format!("input curve {}", path.display())))
    })
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Curve file to descend from.
    pub input: PathBuf,
    /// Output directory for the final curve, report and frames.
    #[arg(long, default_value = "elastica-out")]
    pub out: PathBuf,
    /// Write an SVG frame every `snapshotEvery` iterations.
    #[arg(long)]
    pub svg: bool,
    /// Jitter the starting polygon with this seed.
    #[arg(long)]
    pub perturb_seed: Option<u64>,
    #[command(flatten)]
    pub params: ParamFlags,
}

/// Outcome of `run` that the caller prints.
pub struct RunReport {
    pub summary_line: String,
    pub class: ClassTag,
}

fn io_failure(e: std::io::Error, what: &Path) -> Failure {
    Failure::new(EXIT_FAILURE, anyhow!(e).context(format!("writing {}", what.display())))
}

pub fn run_command<I>(args: &RunArgs, env: I) -> Result<RunReport, Failure>
where
    I: IntoIterator<Item = (String, String)>,
{
    let params = args.params.resolve(env)?;
    let mut curve = load_polygon(&args.input, params.n)?;
    if let Some(seed) = args.perturb_seed {
        curve = perturb(&curve, seed).map_err(|e| Failure::new(input_code(&e), e))?;
    }
    fs::create_dir_all(&args.out).map_err(|e| io_failure(e, &args.out))?;
    let frames_dir = args.out.join("frames");
    if args.svg {
        fs::create_dir_all(&frames_dir).map_err(|e| io_failure(e, &frames_dir))?;
    }
    let final_path = args.out.join("final.json");
    let mut frame_error = None;
    let result = run(&curve, &params, |s| {
        if !args.svg {
            return ControlFlow::Continue(());
        }
        let path = frames_dir.join(format!("frame-{:09}.svg", s.iteration));
        match fs::write(&path, render_svg(&s.curve)) {
            Ok(()) => ControlFlow::Continue(()),
            Err(e) => {
                frame_error = Some(io_failure(e, &path));
                ControlFlow::Break(())
            }
        }
    });
    if let Some(f) = frame_error {
        return Err(f);
    }
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            fs::write(&final_path, curve_to_string(&e.last_good.curve))
                .map_err(|io| io_failure(io, &final_path))?;
            let code = engine_code(&e.source);
            return Err(Failure::new(code, e));
        }
    };
    fs::write(&final_path, curve_to_string(&outcome.summary.last.curve))
        .map_err(|e| io_failure(e, &final_path))?;
    let report_path = args.out.join("report.csv");
    let file = fs::File::create(&report_path).map_err(|e| io_failure(e, &report_path))?;
    write_report(BufWriter::new(file), &outcome.summary, &outcome.class)
        .map_err(|e| io_failure(e, &report_path))?;
    let summary_line = format!(
        "{} index={} iterations={} energy={:e} quiescent={}",
        class_label(&outcome.class.tag),
        outcome.summary.last.index,
        outcome.summary.iterations(),
        outcome.summary.last.energy.discrete,
        outcome.summary.quiescent
    );
    Ok(RunReport {
        summary_line,
        class: outcome.class.tag,
    })
}

#[derive(Debug, Clone, Subcommand)]
pub enum GenerateKind {
    /// Regular polygon traversed |k| times.
    Circle {
        #[arg(short = 'k', default_value_t = 1, allow_negative_numbers = true)]
        k: i64,
        #[arg(short = 'N', long = "vertices", default_value_t = 100)]
        n: usize,
        /// Total length; defaults to 2 pi |k|.
        #[arg(long)]
        length: Option<f64>,
    },
    /// Figure eight traversed m times.
    Eight {
        #[arg(short = 'm', default_value_t = 1)]
        m: u32,
        #[arg(short = 'N', long = "vertices", default_value_t = 100)]
        n: usize,
        /// Total length; defaults to 2 pi m.
        #[arg(long)]
        length: Option<f64>,
    },
    /// Four-lobe deformation of the doubled eight.
    GammaEpsilon {
        #[arg(short = 'e', long = "epsilon", default_value_t = 0.05)]
        epsilon: f64,
        #[arg(short = 'N', long = "vertices", default_value_t = 100)]
        n: usize,
        /// Total length; defaults to 4 pi, the default doubled eight.
        #[arg(long)]
        length: Option<f64>,
    },
}

pub fn generate_command(kind: &GenerateKind) -> Result<String, Failure> {
    let bad = |e: ElasticaError| Failure::new(EXIT_PARSE, e);
    let tau = std::f64::consts::TAU;
    let curve = match *kind {
        GenerateKind::Circle { k, n, length } => {
            sample_circle(k, n, length.unwrap_or(tau * k.unsigned_abs() as f64)).map_err(bad)?.curve
        }
        GenerateKind::Eight { m, n, length } => {
            sample_figure_eight(m, n, length.unwrap_or(tau * m as f64)).map_err(bad)?.curve
        }
        GenerateKind::GammaEpsilon { epsilon, n, length } => {
            construct_gamma_epsilon(epsilon, n, length.unwrap_or(2.0 * tau)).map_err(bad)?
        }
    };
    Ok(curve_to_string(&curve))
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    pub input: PathBuf,
    /// Also run the descent and compare its limit with the prediction.
    #[arg(long)]
    pub descend: bool,
    #[command(flatten)]
    pub params: ParamFlags,
}

pub fn predicted_class(index: i64) -> ClassTag {
    if index == 0 {
        ClassTag::FigureEight
    } else {
        ClassTag::Circle { k: index }
    }
}

/// Returns the printed report; disagreement between descent and prediction
/// is an `EXIT_UNCONVERGED` failure carrying the same report.
pub fn classify_command<I>(args: &ClassifyArgs, env: I) -> Result<String, Failure>
where
    I: IntoIterator<Item = (String, String)>,
{
    let params = args.params.resolve(env)?;
    let curve = load_polygon(&args.input, params.n)?;
    let index = whitney_index(&curve).map_err(|e| Failure::new(input_code(&e), e))?;
    let prediction = predicted_class(index);
    let mut lines = vec![
        format!("whitneyIndex={index}"),
        format!("prediction {}", class_label(&prediction)),
    ];
    if let Ok(now) = classify(&curve, &params.tolerances()) {
        lines.push(format!("current {}", class_label(&now.tag)));
    }
    if args.descend {
        let outcome = run(&curve, &params, |_| ControlFlow::Continue(()))
            .map_err(|e| Failure::new(EXIT_ENGINE, e))?;
        lines.push(format!(
            "descent {} iterations={} quiescent={}",
            class_label(&outcome.class.tag),
            outcome.summary.iterations(),
            outcome.summary.quiescent
        ));
        let agree = outcome.class.tag == prediction;
        lines.push(format!("agreement={agree}"));
        if !agree {
            let report = lines.join("\n");
            return Err(Failure::new(
                EXIT_UNCONVERGED,
                anyhow!("descent limit disagrees with the prediction\n{report}"),
            ));
        }
    }
    Ok(lines.join("\n"))
}
