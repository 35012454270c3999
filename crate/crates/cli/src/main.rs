//! `linkfold` command-line interface.
//!
//! Exit codes: 0 success; 1 validation or planning failure (including an
//! uncertified plan or a non-convex result); 2 malformed input or usage.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use linkfold::arch::convexify_arch;
use linkfold::chain::{project, shape_classify, ChainConfig, Shape};
use linkfold::flips::{convexify_flips, DEFAULT_MAX_FLIPS};
use linkfold::io;
use linkfold::locked::{self, knot, NeedleParams};
use linkfold::motion::{apply, sample_frames, validate, MotionPlan, ValidationPolicy, ValidationReport};
use linkfold::straighten::{find_simple_projection, find_straightening_direction, straighten, DEFAULT_BUDGET};
use linkfold::{gen, Error, Point};

#[derive(Parser)]
#[command(name = "linkfold", version, about = "Plan and certify reconfigurations of polygonal chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct PolicyArgs {
    /// Initial samples per move for the validator.
    #[arg(long)]
    samples: Option<usize>,
    /// Clearance tolerance (default: 1e-9 × chain diameter).
    #[arg(long)]
    tol: Option<f64>,
}

impl PolicyArgs {
    fn policy(&self) -> ValidationPolicy {
        let mut p = ValidationPolicy { tol: self.tol, ..ValidationPolicy::default() };
        if let Some(s) = self.samples {
            p.initial_samples = s.max(1);
        }
        p
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Flips,
    Arch,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenShape {
    /// Knitting-needles chain K (open).
    NeedlesOpen,
    /// K doubled with a parallel copy, endpoints joined (closed).
    NeedlesClosed,
    /// K closed by the segment v5 v0 outside the ball (a trefoil).
    NeedlesCompletion,
    /// Random simple polygon in the xy-plane (`--n` vertices).
    Polygon,
    /// Random lifted open chain with a simple xy-projection (`--n` vertices).
    Lifted,
    /// Lifted zigzag open chain (`--n` vertices).
    Zigzag,
    /// Dart-shaped quadrilateral squashed to height `--delta`.
    Delta,
}

#[derive(Subcommand)]
enum Command {
    /// Straighten an open chain that has a simple orthogonal projection.
    Straighten {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Projection direction `x,y,z`; searched for when omitted.
        #[arg(long, value_parser = parse_direction, allow_hyphen_values = true)]
        direction: Option<Point>,
        /// Number of candidate directions tried by the search.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Convexify a planar polygon (z = 0) by pocket flips or the arch algorithm.
    Convexify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long, default_value_t = DEFAULT_MAX_FLIPS)]
        max_flips: usize,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Generate an example chain.
    Gen {
        #[arg(long, value_enum)]
        shape: GenShape,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Vertex count for random shapes.
        #[arg(long, default_value_t = 8)]
        n: usize,
        /// Height parameter for `--shape delta`.
        #[arg(long, default_value_t = 1e-2)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Certify a motion plan.
    Validate {
        #[arg(long)]
        plan: PathBuf,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Project a chain orthogonally and certify that the projection is simple.
    Project {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = parse_direction, allow_hyphen_values = true)]
        direction: Option<Point>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Knot determinant of a closed chain.
    KnotDet {
        #[arg(long = "in")]
        input: PathBuf,
        /// Number of independent projection directions to compare.
        #[arg(long, default_value_t = 3)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sample a plan into timestamped frames for external viewers.
    ExportFrames {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Frames per move.
        #[arg(long, default_value_t = 16)]
        samples: usize,
    },
}

fn parse_direction(s: &str) -> Result<Point, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad component {p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let [x, y, z] = parts[..] else { return Err("expected x,y,z".into()) };
    Point::new(x, y, z).normalized().ok_or_else(|| "direction must be nonzero and finite".into())
}

/// A failure with its exit code.
struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Planning(_)
            | Error::NoRegularProjection
            | Error::ClosureUnreachable { .. }
            | Error::DegenerateProjection(_) => 1,
            _ => 2,
        };
        Failure(code, e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(2, format!("cannot read {}: {e}", path.display())))
}

fn write_or_print(path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure(2, format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_chain(path: &Path) -> Result<ChainConfig, Failure> {
    Ok(io::chain_from_json(&read(path)?)?)
}

fn read_plan(path: &Path) -> Result<MotionPlan, Failure> {
    Ok(io::plan_from_json(&read(path)?)?)
}

fn report_failure(report: &ValidationReport) -> Failure {
    let msg = match &report.failure {
        Some(f) => {
            let witness = f.witness.map(|(i, j)| format!(", witness edges ({i}, {j})")).unwrap_or_default();
            format!("not certified: move {} at t = {}: {:?}: {}{witness}", f.move_index, f.t, f.kind, f.message)
        }
        None => "not certified".into(),
    };
    Failure(1, msg)
}

/// Validate a planner's output; only certified plans are written.
fn ship(plan: &MotionPlan, policy: &PolicyArgs, out: Option<&Path>) -> Result<ValidationReport, Failure> {
    let report = validate(plan, &policy.policy());
    if !report.certified {
        return Err(report_failure(&report));
    }
    write_or_print(out, &io::plan_to_json(plan))?;
    Ok(report)
}

fn min_clearance(report: &ValidationReport) -> f64 {
    report.moves.iter().map(|m| m.min_clearance).fold(f64::INFINITY, f64::min)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Straighten { input, out, direction, budget, seed, policy } => {
            let chain = read_chain(&input)?;
            let d = match direction {
                Some(d) => d,
                None => match find_straightening_direction(&chain, budget, seed)? {
                    Some(d) => d,
                    None => return Err(Error::NoRegularProjection.into()),
                },
            };
            let plan = straighten(&chain, d)?;
            let report = ship(&plan, &policy, out.as_deref())?;
            let end = apply(&plan)?;
            if shape_classify(&end, policy.tol) != Shape::Straight {
                return Err(Failure(1, "final configuration is not straight".into()));
            }
            eprintln!(
                "straightened along {:?} in {} moves; certified, min clearance {:.3e}",
                d.to_array(),
                plan.len(),
                min_clearance(&report)
            );
        }
        Command::Convexify { input, out, method, max_flips, policy } => {
            let polygon = read_chain(&input)?;
            match method {
                Method::Flips => {
                    let outcome = convexify_flips(&polygon, max_flips)?;
                    ship(&outcome.plan, &policy, out.as_deref())?;
                    if !outcome.convex {
                        return Err(Failure(1, format!("not convex after {} flips (cap reached)", outcome.flips())));
                    }
                    eprintln!("convexified by {} flips; certified", outcome.flips());
                }
                Method::Arch => {
                    let outcome = convexify_arch(&polygon)?;
                    ship(&outcome.plan, &policy, out.as_deref())?;
                    if !outcome.convex {
                        return Err(Failure(1, "final configuration is not convex".into()));
                    }
                    eprintln!(
                        "convexified in {} moves over {} rounds (epsilon {:.3e}); certified",
                        outcome.plan.len(),
                        outcome.rounds,
                        outcome.epsilon
                    );
                }
            }
        }
        Command::Gen { shape, out, n, delta, seed } => {
            let params = NeedleParams::default();
            let mut rng = gen::rng(seed);
            let chain = match shape {
                GenShape::NeedlesOpen => locked::make_knitting_needles(&params)?,
                GenShape::NeedlesClosed => locked::make_locked_closed(&params, locked::default_offset(&params))?,
                GenShape::NeedlesCompletion => locked::make_trefoil_completion(&params)?,
                GenShape::Polygon if n >= 3 => gen::random_simple_polygon(n, &mut rng),
                GenShape::Lifted if n >= 2 => gen::random_lifted_chain(n, &mut rng),
                GenShape::Zigzag if n >= 2 => gen::zigzag(n),
                GenShape::Delta => linkfold::flips::delta_quadrilateral(delta)?,
                _ => return Err(Failure(2, format!("--n {n} is too small for this shape"))),
            };
            write_or_print(out.as_deref(), &io::chain_to_json(&chain))?;
        }
        Command::Validate { plan, policy } => {
            let plan = read_plan(&plan)?;
            let report = validate(&plan, &policy.policy());
            if !report.certified {
                return Err(report_failure(&report));
            }
            let samples: usize = report.moves.iter().map(|m| m.samples).sum();
            println!(
                "certified: {} moves, {samples} samples, min clearance {:.6e}",
                plan.len(),
                min_clearance(&report)
            );
        }
        Command::Project { input, out, direction, budget, seed } => {
            let chain = read_chain(&input)?;
            let d = match direction {
                Some(d) => d,
                None => match find_simple_projection(&chain, budget, seed)? {
                    Some((d, _)) => d,
                    None => return Err(Failure(1, "no simple projection found within budget".into())),
                },
            };
            let proj = project(&chain, d)?;
            write_or_print(out.as_deref(), &io::chain_to_json(&proj.chain))?;
            match proj.certificate {
                Some(c) => eprintln!(
                    "simple projection along {:?}: min projected clearance {:.6e}",
                    c.direction, c.min_projected_clearance
                ),
                None => {
                    let (i, j) = proj.witness.unwrap_or((0, 0));
                    return Err(Failure(1, format!("projection is not simple: edges {i} and {j}")));
                }
            }
        }
        Command::KnotDet { input, samples, seed } => {
            let chain = read_chain(&input)?;
            let dets = knot::knot_determinants(&chain, samples.max(1), seed)?;
            if dets.iter().any(|&d| d != dets[0]) {
                return Err(Failure(1, format!("determinant differs between projections: {dets:?}")));
            }
            println!("{}", dets[0]);
        }
        Command::ExportFrames { plan, out, samples } => {
            let plan = read_plan(&plan)?;
            let frames = sample_frames(&plan, samples.max(1))?;
            write_or_print(out.as_deref(), &io::frames_to_json(&frames))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
