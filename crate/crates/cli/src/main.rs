//! `matmoment` — command-line front end for the matrix moment toolkit.
//!
//! Subcommands read JSON from a file or stdin, write JSON (or CSV for
//! tabular output) to stdout, and log diagnostics to stderr. All
//! randomized paths are reproducible through `--seed` (or the
//! `MATMOMENT_SEED` environment variable).
//!
//! Exit codes: 0 success, 1 usage, 2 certification/infeasibility,
//! 3 numerical failure, 4 I/O.

use std::io::Read;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use matmoment_core::extract::{extract, ExtractOptions};
use matmoment_core::json::*;
use matmoment_core::masses::{self, MassOptions};
use matmoment_core::spectra::{self, FeasStatus, SolveOptions};
use matmoment_core::{apolar, commutative, fixtures, hankel, transport};

mod selftest;

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_CERT: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "matmoment", version, about = "Truncated matrix moment problems: Hankel certification, atom extraction, mass sets, diagonalization, transport, apolar calculus")]
struct Cli {
    /// RNG seed (fallback: MATMOMENT_SEED, then 0)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output format for tabular results
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct InputArg {
    /// Input file (defaults to stdin)
    #[arg(long, short = 'i')]
    input: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the block Hankel matrix of a moment sequence and certify it
    Hankel {
        #[command(flatten)]
        input: InputArg,
        /// Hankel level n (requires sequence degree ≥ 2n)
        #[arg(long)]
        n: usize,
        /// Comma-separated checks: psd, rank, flat
        #[arg(long, default_value = "psd,rank")]
        check: String,
        /// Rank / PSD tolerance
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Extract an atomic representing measure from a flat positive sequence
    Extract {
        #[command(flatten)]
        input: InputArg,
        /// Flatness level m (requires degree ≥ 2m+2)
        #[arg(long)]
        m: usize,
        /// Rank / commutator tolerance
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Maximum acceptable relative moment residual
        #[arg(long, default_value_t = 1e-6)]
        residual_tol: f64,
    },
    /// Test whether a functional is a moment functional on its space
    Exists {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long, default_value_t = 20000)]
        max_iter: usize,
    },
    /// Mass-set queries at a point
    Masses {
        #[command(subcommand)]
        query: MassQuery,
    },
    /// Diagonalize a commutative matrix moment functional
    Diagonalize {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Transport a matrix moment functional under a positive map
    Transport {
        #[command(flatten)]
        input: InputArg,
        /// Positive map JSON (Kraus factors)
        #[arg(long)]
        map: String,
    },
    /// Apolar calculus on homogeneous matrix polynomials
    Apolar {
        #[command(subcommand)]
        op: ApolarOp,
    },
    /// Emit built-in problem fixtures
    Fixtures {
        #[command(subcommand)]
        which: Fixture,
    },
    /// Run the condensed property suites
    Selftest,
}

#[derive(Subcommand)]
enum MassQuery {
    /// Is the candidate exactly a mass at the point? (pinned feasibility)
    Member(MassArgs),
    /// Is the candidate dominated by some mass at the point?
    Penumbra(MassArgs),
    /// The scaling supremum sup{t : Λ − t·tr(·(x₀)M) is a moment functional}
    Imax(MassArgs),
    /// An approximately Löwner-maximal mass at the point
    Maximal(MassArgs),
    /// The ordered-maximal-mass measure construction
    Ordered {
        #[command(flatten)]
        input: InputArg,
        /// Optional first point (must lie in the core set)
        #[arg(long)]
        point: Option<String>,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
    },
    /// Per-point mass-trace suprema (the core set)
    Core {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
    },
}

#[derive(Args)]
struct MassArgs {
    #[command(flatten)]
    input: InputArg,
    /// Point label
    #[arg(long)]
    point: String,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
}

#[derive(Subcommand)]
enum ApolarOp {
    /// The apolar scalar product [P,Q]
    Product {
        /// First polynomial JSON
        p: String,
        /// Second polynomial JSON
        q: String,
    },
    /// The moment functional of a cone element, with canonical measure
    Gamma {
        #[command(flatten)]
        input: InputArg,
    },
    /// Differential application P(∂)S
    Diff {
        /// Operator polynomial JSON (degree n)
        p: String,
        /// Operand polynomial JSON (degree m ≥ n)
        s: String,
    },
}

#[derive(Subcommand)]
enum Fixture {
    /// Single-point antichain problem (q = 2, dimension 3)
    E1012,
    /// Four-point square problem with prescribed masses
    E1802 {
        /// Mass specification: "I" or a scalar multiple like "2I"
        #[arg(long, default_value = "I")]
        mass: String,
    },
    /// The no-largest-mass generator over a scalar measure
    Nolargest {
        /// m₀ at the constrained point
        #[arg(long, default_value_t = 1.0)]
        m0: f64,
        /// coupling w₀
        #[arg(long, default_value_t = 0.0)]
        w0: f64,
    },
    /// The δ₁ scalar moment sequence (all moments 1)
    DeltaHankel {
        #[arg(long, default_value_t = 4)]
        degree: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version are not usage errors
            use clap::error::ErrorKind::*;
            let _ = e.print();
            return match e.kind() {
                DisplayHelp | DisplayVersion => ExitCode::from(EXIT_OK),
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let seed = cli.seed.unwrap_or_else(|| {
        std::env::var("MATMOMENT_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(0)
    });
    match run(cli, seed) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn io(msg: impl std::fmt::Display) -> Self {
        Self {
            message: msg.to_string(),
            code: EXIT_IO,
        }
    }
    fn cert(msg: impl std::fmt::Display) -> Self {
        Self {
            message: msg.to_string(),
            code: EXIT_CERT,
        }
    }
    fn numeric(msg: impl std::fmt::Display) -> Self {
        Self {
            message: msg.to_string(),
            code: EXIT_NUMERIC,
        }
    }
    fn exit_code(&self) -> u8 {
        self.code
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

fn read_input(arg: &InputArg) -> Result<String, CliError> {
    match &arg.input {
        Some(path) if path != "-" => std::fs::read_to_string(path).map_err(CliError::io),
        _ => {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .map_err(CliError::io)?;
            Ok(buf)
        }
    }
}

fn read_file(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(CliError::io)
}

fn parse<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(CliError::io)
}

fn emit<T: serde::Serialize>(value: &T) -> Result<u8, CliError> {
    let text = serde_json::to_string_pretty(value).map_err(CliError::io)?;
    println!("{text}");
    Ok(EXIT_OK)
}

fn mass_opts(tol: f64) -> MassOptions<f64> {
    MassOptions {
        tol,
        ..MassOptions::default()
    }
}

fn load_problem(
    input: &InputArg,
) -> Result<
    (
        ProblemJson,
        matmoment_core::space::MatrixFunctionSpace<f64>,
        matmoment_core::functional::MomentFunctional<f64>,
    ),
    CliError,
> {
    let text = read_input(input)?;
    let problem: ProblemJson = parse(&text)?;
    let space = problem.space.to_core().map_err(CliError::io)?;
    let lambda = problem.functional.to_core();
    if lambda.dim() != space.dim() {
        return Err(CliError::io("functional length does not match space"));
    }
    Ok((problem, space, lambda))
}

fn feasibility_json(rep: &spectra::FeasibilityReport<f64>) -> serde_json::Value {
    serde_json::json!({
        "status": match rep.status {
            FeasStatus::Feasible => "feasible",
            FeasStatus::Infeasible => "infeasible",
            FeasStatus::Inconclusive => "inconclusive",
        },
        "distance": rep.distance,
        "iterations": rep.iterations,
        "certain": rep.certain,
        "witness": rep.witness.as_ref().map(MeasureJson::from_core),
    })
}

fn run(cli: Cli, seed: u64) -> Result<u8, CliError> {
    let mut rng = matmoment_core::testutil::rng(seed);
    match cli.command {
        Command::Hankel {
            input,
            n,
            check,
            tol,
        } => {
            let text = read_input(&input)?;
            let seq_json: MomentSequenceJson = parse(&text)?;
            let seq = seq_json.to_core().map_err(CliError::io)?;
            let h = hankel::build_hankel(&seq, n).map_err(CliError::cert)?;
            let mut out = serde_json::json!({
                "n": n,
                "size": h.size(),
                "matrix": HermMatJson::from_core(h.matrix()),
            });
            for item in check.split(',').map(str::trim) {
                match item {
                    "psd" => {
                        out["psd"] = serde_json::json!(hankel::hankel_psd(&h, tol));
                    }
                    "rank" => {
                        out["rank"] = serde_json::json!(hankel::hankel_rank(&h, tol));
                    }
                    "flat" => {
                        let fc = hankel::flat_check(&seq, n, tol).map_err(CliError::cert)?;
                        out["flat"] = serde_json::json!({
                            "is_flat": fc.is_flat(),
                            "psd_ok": fc.psd_ok,
                            "rank_lo": fc.rank_lo,
                            "rank_hi": fc.rank_hi,
                        });
                    }
                    "" => {}
                    other => {
                        return Err(CliError {
                            message: format!("unknown check {other:?}"),
                            code: EXIT_USAGE,
                        })
                    }
                }
            }
            emit(&out)
        }
        Command::Extract {
            input,
            m,
            tol,
            residual_tol,
        } => {
            let text = read_input(&input)?;
            let seq_json: MomentSequenceJson = parse(&text)?;
            let seq = seq_json.to_core().map_err(CliError::io)?;
            let opts = ExtractOptions {
                tol,
                residual_tol,
                ..ExtractOptions::default()
            };
            use matmoment_core::ExtractError::*;
            match extract(&seq, m, &opts, &mut rng) {
                Ok(res) => {
                    eprintln!(
                        "extracted {} atoms, residual {:.3e}, rank {}, commutator {:.3e}",
                        res.atoms.len(),
                        res.residual,
                        res.diagnostics.rank_lo,
                        res.diagnostics.max_commutator
                    );
                    emit(&MeasureJson::from_coord_atoms(&res.atoms))
                }
                Err(e @ (NotPositive(_) | NotFlat { .. })) => Err(CliError::cert(e)),
                Err(e) => Err(CliError::numeric(e)),
            }
        }
        Command::Exists {
            input,
            tol,
            max_iter,
        } => {
            let (problem, space, lambda) = load_problem(&input)?;
            let opts = SolveOptions {
                tol,
                max_iter,
                ..SolveOptions::default()
            };
            let pins = problem.pins_core().map_err(CliError::io)?;
            let halfspaces = problem.halfspaces_core().map_err(CliError::io)?;
            let rep = if pins.is_empty() && halfspaces.is_empty() {
                spectra::is_moment_functional(&space, &lambda, &opts).map_err(CliError::cert)?
            } else {
                spectra::Spectrahedron::new(&space, &lambda, &pins, &halfspaces)
                    .map_err(CliError::cert)?
                    .feasible(&opts, None)
            };
            let code = if rep.is_feasible() { EXIT_OK } else { EXIT_CERT };
            emit(&feasibility_json(&rep))?;
            Ok(code)
        }
        Command::Masses { query } => run_masses(query, cli.format, &mut rng),
        Command::Diagonalize { input, tol } => {
            let text = read_input(&input)?;
            let lj: MatrixFunctionalJson = parse(&text)?;
            let (_, l) = lj.to_core().map_err(CliError::io)?;
            if !commutative::is_commutative(&l, tol) {
                return Err(CliError::cert("functional is not commutative"));
            }
            let (u, scalars) = commutative::diagonalize(&l, tol).map_err(CliError::numeric)?;
            emit(&serde_json::json!({
                "U": CMatJson::from_core(&u),
                "l": scalars.iter().map(|s| s.values.clone()).collect::<Vec<_>>(),
            }))
        }
        Command::Transport { input, map } => {
            let text = read_input(&input)?;
            let lj: MatrixFunctionalJson = parse(&text)?;
            let (e, l) = lj.to_core().map_err(CliError::io)?;
            let mj: MapJson = parse(&read_file(&map)?)?;
            let phi = mj.to_core().map_err(CliError::io)?;
            let out = transport::transport_functional(&phi, &l).map_err(CliError::cert)?;
            emit(&MatrixFunctionalJson::from_core(&e, &out))
        }
        Command::Apolar { op } => run_apolar(op),
        Command::Fixtures { which } => run_fixtures(which),
        Command::Selftest => selftest::run(seed).map_err(CliError::numeric),
    }
}

fn run_masses(
    query: MassQuery,
    format: Format,
    rng: &mut matmoment_core::testutil::ChaCha8Rng,
) -> Result<u8, CliError> {
    match query {
        MassQuery::Member(args) => {
            let (problem, space, lambda) = load_problem(&args.input)?;
            let y = candidate(&problem)?;
            let rep = masses::mass_membership(&space, &lambda, &args.point, &y, &mass_opts(args.tol))
                .map_err(CliError::cert)?;
            let code = if rep.is_feasible() { EXIT_OK } else { EXIT_CERT };
            emit(&feasibility_json(&rep))?;
            Ok(code)
        }
        MassQuery::Penumbra(args) => {
            let (problem, space, lambda) = load_problem(&args.input)?;
            let y = candidate(&problem)?;
            let rep =
                masses::penumbra_membership(&space, &lambda, &args.point, &y, &mass_opts(args.tol))
                    .map_err(CliError::cert)?;
            let code = if rep.is_feasible() { EXIT_OK } else { EXIT_CERT };
            emit(&feasibility_json(&rep))?;
            Ok(code)
        }
        MassQuery::Imax(args) => {
            let (problem, space, lambda) = load_problem(&args.input)?;
            let y = candidate(&problem)?;
            let sup = masses::scaling_sup(&space, &lambda, &args.point, &y, &mass_opts(args.tol))
                .map_err(map_mass_err)?;
            emit(&serde_json::json!({ "sup": sup, "in_penumbra": sup >= 1.0 - args.tol }))
        }
        MassQuery::Maximal(args) => {
            let (problem, space, lambda) = load_problem(&args.input)?;
            let seed_mat = problem
                .seed
                .as_ref()
                .map(|s| s.to_core())
                .transpose()
                .map_err(CliError::io)?;
            let (m, certs, _) = masses::maximal_mass(
                &space,
                &lambda,
                &args.point,
                seed_mat.as_ref(),
                &mass_opts(args.tol),
                rng,
            )
            .map_err(map_mass_err)?;
            emit(&serde_json::json!({
                "mass": HermMatJson::from_core(&m),
                "probes": certs.len(),
                "max_step_bound": certs.iter().map(|c| c.max_step).fold(0.0, f64::max),
            }))
        }
        MassQuery::Ordered { input, point, tol } => {
            let (_, space, lambda) = load_problem(&input)?;
            let res = masses::ordered_maximal_measure(
                &space,
                &lambda,
                point.as_deref(),
                &mass_opts(tol),
                rng,
            )
            .map_err(map_mass_err)?;
            emit(&serde_json::json!({
                "atoms": res.atoms.iter().map(|a| serde_json::json!({
                    "point": a.point,
                    "mass": HermMatJson::from_core(&a.mass),
                })).collect::<Vec<_>>(),
                "residual": res.residual,
                "certificates": res.certificates.iter().map(|c| serde_json::json!({
                    "probes": c.len(),
                    "max_step_bound": c.iter().map(|p| p.max_step).fold(0.0, f64::max),
                })).collect::<Vec<_>>(),
            }))
        }
        MassQuery::Core { input, tol } => {
            let (_, space, lambda) = load_problem(&input)?;
            let core = masses::core_set(&space, &lambda, &mass_opts(tol)).map_err(map_mass_err)?;
            match format {
                Format::Csv => {
                    println!("point,sup_trace");
                    for c in &core {
                        println!("{},{}", c.label, c.sup_trace);
                    }
                    Ok(EXIT_OK)
                }
                Format::Json => emit(&serde_json::json!(core
                    .iter()
                    .map(|c| serde_json::json!({
                        "point": c.label,
                        "sup_trace": c.sup_trace,
                        "in_core": c.sup_trace > tol,
                    }))
                    .collect::<Vec<_>>())),
            }
        }
    }
}

fn candidate(problem: &ProblemJson) -> Result<matmoment_core::herm::HermMat<f64>, CliError> {
    problem
        .candidate
        .as_ref()
        .ok_or_else(|| CliError::io("problem JSON has no \"candidate\" matrix"))?
        .to_core()
        .map_err(CliError::io)
}

fn map_mass_err(e: matmoment_core::MassError) -> CliError {
    use matmoment_core::MassError::*;
    match e {
        IterationBoundExceeded(_) | AugmentationStalled(_) => CliError::numeric(e),
        _ => CliError::cert(e),
    }
}

fn run_apolar(op: ApolarOp) -> Result<u8, CliError> {
    match op {
        ApolarOp::Product { p, q } => {
            let pj: PolyJson = parse(&read_file(&p)?)?;
            let qj: PolyJson = parse(&read_file(&q)?)?;
            let pc = pj.to_core().map_err(CliError::io)?;
            let qc = qj.to_core().map_err(CliError::io)?;
            let v = apolar::apolar_product(&pc, &qc).map_err(CliError::cert)?;
            emit(&serde_json::json!({ "value": v }))
        }
        ApolarOp::Gamma { input } => {
            let text = read_input(&input)?;
            let cj: ConeJson = parse(&text)?;
            let cone = cj.to_core().map_err(CliError::io)?;
            let gamma = apolar::gamma_functional(&cone).map_err(CliError::numeric)?;
            emit(&serde_json::json!({
                "riesz": PolyJson::from_core(&gamma.riesz),
                "measure": MeasureJson::from_coord_atoms(&gamma.measure),
            }))
        }
        ApolarOp::Diff { p, s } => {
            let pj: PolyJson = parse(&read_file(&p)?)?;
            let sj: PolyJson = parse(&read_file(&s)?)?;
            let pc = pj.to_core().map_err(CliError::io)?;
            let sc = sj.to_core().map_err(CliError::io)?;
            let out = apolar::diff_apply(&pc, &sc).map_err(CliError::cert)?;
            emit(&PolyJson::from_core(&out))
        }
    }
}

fn run_fixtures(which: Fixture) -> Result<u8, CliError> {
    match which {
        Fixture::E1012 => {
            let fx = fixtures::e1012::<f64>().map_err(CliError::numeric)?;
            emit(&ProblemJson {
                space: SpaceJson::from_core(&fx.space),
                functional: FunctionalJson::from_core(&fx.lambda),
                pins: vec![],
                halfspaces: vec![],
                candidate: None,
                seed: None,
            })
        }
        Fixture::E1802 { mass } => {
            let m = parse_mass_spec(&mass)?;
            let fx = fixtures::e1802([m.clone(), m.clone(), m.clone(), m])
                .map_err(CliError::numeric)?;
            emit(&ProblemJson {
                space: SpaceJson::from_core(&fx.space),
                functional: FunctionalJson::from_core(&fx.lambda),
                pins: vec![],
                halfspaces: vec![],
                candidate: None,
                seed: None,
            })
        }
        Fixture::Nolargest { m0, w0 } => {
            let space = matmoment_core::space::FiniteSpace::from_coords(&[vec![0.0]])
                .map_err(CliError::io)?;
            let e = matmoment_core::space::ScalarSpace::polynomials(space, 1, 0)
                .map_err(CliError::io)?;
            let fx = masses::build_nolargest_fixture(
                &e,
                &[("x1".to_string(), m0, w0)],
                "x1",
                &MassOptions::default(),
            )
            .map_err(map_mass_err)?;
            emit(&ProblemJson {
                space: SpaceJson::from_core(&fx.space),
                functional: FunctionalJson::from_core(&fx.lambda),
                pins: vec![],
                halfspaces: vec![],
                candidate: None,
                seed: None,
            })
        }
        Fixture::DeltaHankel { degree } => {
            let seq = fixtures::delta_one_sequence::<f64>(degree);
            emit(&MomentSequenceJson::from_core(&seq))
        }
    }
}

fn parse_mass_spec(spec: &str) -> Result<matmoment_core::herm::HermMat<f64>, CliError> {
    let spec = spec.trim();
    if spec == "I" {
        return Ok(matmoment_core::herm::HermMat::identity(2));
    }
    if let Some(num) = spec.strip_suffix('I') {
        let s: f64 = num.parse().map_err(|_| CliError {
            message: format!("bad mass spec {spec:?} (use I or <scale>I)"),
            code: EXIT_USAGE,
        })?;
        return Ok(matmoment_core::herm::HermMat::identity(2).scale(s));
    }
    Err(CliError {
        message: format!("bad mass spec {spec:?} (use I or <scale>I)"),
        code: EXIT_USAGE,
    })
}
