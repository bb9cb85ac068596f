use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use twisted_core::annulus::{Endomorphism, LaurentElement, Space};
use twisted_core::config::Config;
use twisted_core::deformation::{
    basis_change_matrix, confluence_transform_certified, deform_operator, sigma_structure_identity_check, mat_identity,
};
use twisted_core::io::{self, ModuleDoc, OperatorDoc, SeriesDoc};
use twisted_core::qcomb::qbinom;
use twisted_core::twisted::{eta_convergent_check, radius_estimate};
use twisted_core::verify;
use twisted_core::{Error, PadicScalar};

#[derive(Parser, Debug)]
#[command(name = "twisted", version, about = "Twisted differential operators over closed p-adic annuli")]
struct Cli {
    /// JSON config; the reference configuration when absent
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// overrides the config seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// where to write the produced document (or the verify report)
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

/// `sigma(x) = qx + h`; the identity by default.
#[derive(clap::Args, Debug, Clone)]
struct EndoArgs {
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    q: String,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    h: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Quantum binomial (n k)_q
    Qbinom {
        n: u64,
        k: u64,
        #[arg(allow_hyphen_values = true)]
        q: String,
    },
    /// Radius certificate and eta-convergence table of a series
    Radius {
        series: PathBuf,
        #[command(flatten)]
        endo: EndoArgs,
        #[arg(long = "order")]
        order: Option<usize>,
    },
    /// Applies an operator to a series
    Apply { operator: PathBuf, series: PathBuf },
    /// Composes two operators, first o second
    Compose { first: PathBuf, second: PathBuf },
    /// Moves an operator onto another endomorphism
    Deform {
        operator: PathBuf,
        /// target endomorphism
        #[command(flatten)]
        target: EndoArgs,
    },
    /// Turns a connection into a sigma-module
    Confluence {
        connection: PathBuf,
        #[command(flatten)]
        endo: EndoArgs,
        #[arg(long = "order")]
        order: Option<usize>,
    },
    /// Runs a verification suite, or "all"
    Verify { suite: String },
}

enum Failure {
    Usage(String),
    Compute(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

struct Output {
    text: String,
    json: serde_json::Value,
    /// document to write with `--output`
    document: Option<String>,
    passed: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            match cli.format {
                Format::Text => print!("{}", out.text),
                Format::Json => println!("{}", serde_json::to_string_pretty(&out.json).expect("json output")),
            }
            if let (Some(path), Some(doc)) = (&cli.output, &out.document) {
                if let Err(e) = std::fs::write(path, doc) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(1);
                }
            }
            if out.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    for note in cfg.validate()? {
        eprintln!("warning: {note}");
    }
    Ok(cfg)
}

fn endo(args: &EndoArgs, space: Space) -> Result<Endomorphism, Failure> {
    let q = PadicScalar::parse(space.ctx, &args.q)?;
    let h = PadicScalar::parse(space.ctx, &args.h)?;
    if q.is_one() && h.is_exact_zero() {
        return Ok(Endomorphism::identity(space));
    }
    Ok(Endomorphism::new(q, h, space)?)
}

fn read_series(path: &Path, space: Space) -> Result<LaurentElement, Failure> {
    let doc: SeriesDoc = io::load_json(path)?;
    Ok(io::series_from_doc(&doc, space)?)
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    if let Command::Verify { suite } = &cli.command {
        if !verify::is_suite(suite) {
            let names: Vec<&str> = verify::SUITES.iter().map(|(n, _)| *n).collect();
            return Err(Failure::Usage(format!("unknown suite {suite:?}; expected all or one of {}", names.join(", "))));
        }
    }
    let cfg = load_config(cli)?;
    let space = cfg.space()?;
    let ctx = space.ctx;
    match &cli.command {
        Command::Qbinom { n, k, q } => {
            let q = PadicScalar::parse(ctx, q)?;
            let b = qbinom(*n, *k, &q);
            Ok(Output {
                text: format!("{}\nnorm {}\n", b.to_text(), b.norm()),
                json: json!({ "value": b.to_text(), "norm_log": b.norm().to_log_text() }),
                document: None,
                passed: true,
            })
        }
        Command::Radius { series, endo: e, order } => {
            let z = read_series(series, space)?;
            let sigma = endo(e, space)?;
            let order = order.unwrap_or(cfg.order);
            let cert = radius_estimate(&z, &sigma, order)?;
            let conv = eta_convergent_check(&z, &sigma, cfg.eta()?, order)?;
            let witness = |w: Option<usize>| w.map_or("-".to_string(), |k| k.to_string());
            let mut text = format!(
                "radius estimate {} (witness k = {})\ntail estimate {} (witness k = {})\n",
                cert.estimate,
                witness(cert.witness),
                cert.tail_estimate,
                witness(cert.tail_witness)
            );
            text += &format!("k  |d^[k] z|  |d^[k] z| eta^k  (eta = {})\n", conv.level);
            for (k, (n, v)) in cert.norms.iter().zip(&conv.values).enumerate() {
                text += &format!("{k:<3}{n:<11}{v}\n");
            }
            text += &format!("decays: {}  derivative bound holds: {}\n", conv.decays, conv.bound_holds());
            let json = json!({
                "order_K": order,
                "estimate": cert.estimate.to_string(),
                "witness": cert.witness,
                "tail_estimate": cert.tail_estimate.to_string(),
                "tail_witness": cert.tail_witness,
                "norms_log": cert.norms.iter().map(|n| n.to_log_text()).collect::<Vec<_>>(),
                "eta_values_log": conv.values.iter().map(|n| n.to_log_text()).collect::<Vec<_>>(),
                "decays": conv.decays,
                "bound_holds": conv.bound_holds(),
            });
            Ok(Output { text, json, document: None, passed: conv.bound_holds() })
        }
        Command::Apply { operator, series } => {
            let doc: OperatorDoc = io::load_json(operator)?;
            let op = io::operator_from_doc(&doc, space)?;
            let z = read_series(series, space)?;
            let out = op.apply(&z)?;
            let doc = io::series_to_doc(&out);
            Ok(Output {
                text: format!("{out}\nnorm {}  tail {}\n", out.gauss_norm(), out.tail()),
                json: serde_json::to_value(&doc).expect("series doc"),
                document: Some(io::to_json(&doc)),
                passed: true,
            })
        }
        Command::Compose { first, second } => {
            let a = io::operator_from_doc(&io::load_json(first)?, space)?;
            let b = io::operator_from_doc(&io::load_json(second)?, space)?;
            let c = a.compose(&b)?;
            let doc = io::operator_to_doc(&c)?;
            Ok(Output {
                text: format!("order {:?}  norm {}  tail {}\n", c.order(), c.norm(), c.tail()),
                json: serde_json::to_value(&doc).expect("operator doc"),
                document: Some(io::to_json(&doc)),
                passed: true,
            })
        }
        Command::Deform { operator, target } => {
            let phi = io::operator_from_doc(&io::load_json(operator)?, space)?;
            let sigma = endo(target, space)?;
            let plan = basis_change_matrix(&sigma, phi.endo(), phi.level(), cfg.order.max(phi.order().unwrap_or(0)))?;
            let out = deform_operator(&phi, &plan)?;
            let doc = io::operator_to_doc(&out)?;
            Ok(Output {
                text: format!("input norm {}\noutput norm {}  tail {}\n", phi.norm(), out.norm(), out.tail()),
                json: json!({
                    "input_norm_log": phi.norm().to_log_text(),
                    "output_norm_log": out.norm().to_log_text(),
                    "operator": doc,
                }),
                document: Some(io::to_json(&doc)),
                passed: true,
            })
        }
        Command::Confluence { connection, endo: e, order } => {
            let doc: ModuleDoc = io::load_json(connection)?;
            let m = io::connection_from_doc(&doc, space)?;
            let sigma = endo(e, space)?;
            let order = order.unwrap_or(cfg.order);
            let (s, cert) = confluence_transform_certified(&m, &sigma, Some(cfg.eta_prime()?), order)?;
            // basis vectors times 1, x and 1/x
            let basis = mat_identity(space, m.rank());
            let multipliers = [LaurentElement::one(space), LaurentElement::x(space), LaurentElement::monomial(space, -1, ctx.one())];
            let samples: Vec<_> = multipliers.iter().flat_map(|z| basis.iter().map(move |v| (z.clone(), v.clone()))).collect();
            let rep = sigma_structure_identity_check(&m, &s, &samples)?;
            let doc = io::sigma_module_to_doc(&s)?;
            let text = format!(
                "decay certificate at eta' = {} up to K = {}: decays {}, tail {} ({:?})\nidentity S - 1 = (sigma(x) - x) D: distance {} within {} -> {}\nsemilinearity: {} of {} samples failed\n",
                cert.eta_prime,
                cert.order,
                cert.decays,
                cert.tail,
                cert.tail_bound,
                rep.identity_distance,
                rep.tolerance,
                if rep.identity_holds() { "holds" } else { "FAILS" },
                rep.semilinear_failures,
                rep.semilinear_checked,
            );
            Ok(Output {
                text,
                json: json!({
                    "eta_prime_log": cert.eta_prime.to_log_text(),
                    "decays": cert.decays,
                    "tail_log": cert.tail.to_log_text(),
                    "identity_holds": rep.identity_holds(),
                    "semilinear_failures": rep.semilinear_failures,
                    "module": doc,
                }),
                document: Some(io::to_json(&doc)),
                passed: rep.passed(),
            })
        }
        Command::Verify { suite } => {
            let report = verify::run(&cfg, suite)?;
            let json = serde_json::to_value(&report).expect("report");
            Ok(Output { text: report.to_text(), document: Some(report.to_json()), json, passed: report.passed() })
        }
    }
}
