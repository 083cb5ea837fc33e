//! `sklar`: subcopula extraction, extension, composition and dependence
//! measures for discrete joint distributions.
//!
//! Exit status is 0 when every check in the report passes, 1 when one fails
//! (the report carries a witness) and 2 on bad input or usage.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use sklar_core::extension::{extend, extensions_coincide, grid_agreement, verify_copula_axioms, CopulaFn, FnCopula};
use sklar_core::marginfree::{ipf, DEFAULT_MAX_ITER, DEFAULT_TOL};
use sklar_core::measures::{margin_sensitivity, measures};
use sklar_core::oracle::{copula_integral_by_quadrature, tau_by_pair_enumeration, ProbeLattice};
use sklar_core::subcopula::{extract, verify_representation, verify_subcopula_axioms};
use sklar_core::{io, roundtrip_check, sklar_compose, Error, ExtReal, ExtensionKind, JointPmf, Margin, Rational, Scalar};

#[derive(Parser)]
#[command(name = "sklar", version, about = "Subcopulas and copula extensions of discrete joint distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract the subcopula on the range grid of the margins.
    Subcopula(InputArgs),
    /// Extend the subcopula to a copula and check the copula axioms.
    Extend {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        method: MethodArgs,
        #[command(flatten)]
        boxes: BoxArgs,
    },
    /// Build a joint from a copula and new margins.
    Compose {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        method: MethodArgs,
        /// Copula descriptor JSON (`kind` and `skeleton`); overrides --input.
        #[arg(long)]
        copula: Option<PathBuf>,
        /// JSON array of margins.
        #[arg(long)]
        margins: PathBuf,
        /// Evaluate the composed CDF at this comma-separated point instead of
        /// emitting a mass array (needed for continuous margins).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Option<Vec<String>>,
    },
    /// Check the representation, subcopula and copula axioms and the roundtrip.
    Verify {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        method: MethodArgs,
        #[command(flatten)]
        boxes: BoxArgs,
    },
    /// Extract, extend, recompose with the original margins and compare.
    Roundtrip {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        method: MethodArgs,
    },
    /// Kendall's tau and Spearman's rho.
    Measures {
        #[command(flatten)]
        input: InputArgs,
        /// Also run the brute-force references and compare.
        #[arg(long)]
        oracle: bool,
    },
    /// Compare measures and IPF cores before and after rescaling the margins.
    MarginSensitivity {
        #[command(flatten)]
        input: InputArgs,
        /// Per-axis positive weights as JSON, e.g. `[[2,1],[1,1]]`.
        #[arg(long)]
        weights: String,
    },
    /// Reshape to uniform margins by iterative proportional fitting.
    Ipf {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
    },
    /// Two extensions of one subcopula: equal on the grid, different off it,
    /// and both reproduce the joint.
    DemoNonunique {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 100)]
        resolution: u32,
    },
    /// With continuous margins every extension coincides.
    DemoUniqueContinuous {
        #[command(flatten)]
        input: InputArgs,
        /// JSON array of strictly increasing piecewise-linear margins.
        #[arg(long)]
        margins: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        resolution: u32,
    },
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    /// Defaults to the file extension; `.csv` files with an `x1` header are long form.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Treat cells as counts and normalize.
    #[arg(long)]
    counts: bool,
    #[arg(long, value_enum, default_value_t = Track::Exact)]
    track: Track,
    #[arg(long, value_enum, default_value_t = Output::Json)]
    output: Output,
}

#[derive(Args)]
struct MethodArgs {
    /// checkerboard, patchwork-m, patchwork-w or patchwork-pi
    #[arg(long, default_value = "checkerboard")]
    method: String,
}

#[derive(Args)]
struct BoxArgs {
    #[arg(long, default_value_t = 1000)]
    boxes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv2d,
    CsvLong,
    Json,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Track {
    Exact,
    Float,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Output {
    Json,
    Csv,
}

struct Outcome {
    pass: bool,
    report: Value,
    csv: Option<String>,
}

impl Outcome {
    fn json(pass: bool, report: Value) -> Self {
        Self { pass, report, csv: None }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let input = match &cli.command {
        Command::Subcopula(i) => i,
        Command::Extend { input, .. }
        | Command::Compose { input, .. }
        | Command::Verify { input, .. }
        | Command::Roundtrip { input, .. }
        | Command::Measures { input, .. }
        | Command::MarginSensitivity { input, .. }
        | Command::Ipf { input, .. }
        | Command::DemoNonunique { input, .. }
        | Command::DemoUniqueContinuous { input, .. } => input,
    };
    let result = match input.track {
        Track::Exact => run::<Rational>(&cli.command, input),
        Track::Float => run::<f64>(&cli.command, input),
    };
    match result {
        Ok(outcome) => {
            let text = match (input.output, outcome.csv) {
                (Output::Csv, Some(csv)) => csv,
                (Output::Csv, None) => {
                    eprintln!("error: this subcommand has no CSV output");
                    return ExitCode::from(2);
                }
                _ => serde_json::to_string_pretty(&outcome.report).expect("serializable") + "\n",
            };
            // a closed pipe downstream is not an error of ours
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn read_json(path: &Path) -> Result<Value, Error> {
    serde_json::from_str(&read(path)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn load_joint<T: Scalar>(args: &InputArgs) -> Result<JointPmf<T>, Error> {
    let path = args.input.as_deref().ok_or_else(|| Error::Parse("--input is required".into()))?;
    let text = read(path)?;
    let format = args.format.unwrap_or_else(|| {
        if path.extension().is_some_and(|e| e == "json") {
            Format::Json
        } else if text.trim_start().split(',').next().is_some_and(|h| h.trim() == "x1") {
            Format::CsvLong
        } else {
            Format::Csv2d
        }
    });
    match format {
        Format::Json => {
            let v = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
            let j: JointPmf<T> = io::joint_from_json(&v)?;
            if args.counts {
                JointPmf::from_counts(j.axes().to_vec(), j.mass().clone())
            } else {
                Ok(j)
            }
        }
        Format::Csv2d => io::read_csv2d(text.as_bytes(), args.counts),
        Format::CsvLong => io::read_csv_long(text.as_bytes(), args.counts),
    }
}

fn method(m: &MethodArgs) -> Result<ExtensionKind, Error> {
    ExtensionKind::from_name(&m.method)
}

fn csv_of<T: Scalar>(j: &JointPmf<T>) -> Result<String, Error> {
    let mut out = Vec::new();
    if j.dims() == 2 {
        io::write_csv2d(j, &mut out)?;
    } else {
        io::write_csv_long(j, &mut out)?;
    }
    Ok(String::from_utf8(out).expect("CSV output is UTF-8"))
}

fn run<T: Scalar>(command: &Command, args: &InputArgs) -> Result<Outcome, Error> {
    match command {
        Command::Subcopula(_) => {
            let h = extract(&load_joint::<T>(args)?);
            let axioms = verify_subcopula_axioms(&h)?;
            Ok(Outcome::json(axioms.pass, json!({ "subcopula": io::subcopula_to_json(&h)?, "axioms": axioms.to_json() })))
        }
        Command::Extend { method: m, boxes, .. } => {
            let c = extend(&extract(&load_joint::<T>(args)?), method(m)?)?;
            let axioms = verify_copula_axioms(&c, boxes.boxes, boxes.seed);
            let grid = grid_agreement(&c);
            Ok(Outcome::json(
                axioms.pass && grid.pass,
                json!({ "copula": io::copula_to_json(&c)?, "axioms": axioms.to_json(), "grid_agreement": grid.to_json() }),
            ))
        }
        Command::Compose { method: m, copula, margins, at, .. } => {
            let c = match copula {
                Some(path) => io::copula_from_json::<T>(&read_json(path)?)?,
                None => extend(&extract(&load_joint::<T>(args)?), method(m)?)?,
            };
            let margins: Vec<Margin<T>> = io::margins_from_json(&read_json(margins)?)?;
            let g = sklar_compose(c, margins.clone())?;
            if let Some(point) = at {
                let x = point.iter().map(|s| ExtReal::parse_repr(s.trim())).collect::<Result<Vec<_>, _>>()?;
                return Ok(Outcome::json(true, json!({ "x": x.iter().map(ExtReal::to_json).collect::<Vec<_>>(), "cdf": g.cdf(&x)?.to_json() })));
            }
            let j = g
                .derived()
                .ok_or_else(|| Error::Unsupported("continuous margins have no mass array; use --at".into()))?;
            let preserved = margins.iter().enumerate().all(|(k, m)| j.marginal(k).is_ok_and(|got| got == *m));
            Ok(Outcome {
                pass: preserved,
                report: json!({ "joint": io::joint_to_json(j), "margins_preserved": preserved }),
                csv: Some(csv_of(j)?),
            })
        }
        Command::Verify { method: m, boxes, .. } => {
            let j = load_joint::<T>(args)?;
            let kind = method(m)?;
            let h = extract(&j);
            let reports = [
                verify_representation(&j, &h)?,
                verify_subcopula_axioms(&h)?,
                {
                    let c = extend(&h, kind)?;
                    let mut r = verify_copula_axioms(&c, boxes.boxes, boxes.seed);
                    let g = grid_agreement(&c);
                    if !g.pass {
                        r = g;
                    }
                    r
                },
                roundtrip_check(&j, kind)?,
            ];
            let pass = reports.iter().all(|r| r.pass);
            let max = reports
                .iter()
                .map(|r| r.max_discrepancy.clone())
                .fold(T::zero(), |a, b| if b > a { b } else { a });
            Ok(Outcome::json(
                pass,
                json!({
                    "pass": pass,
                    "method": kind.name(),
                    "max_discrepancy": max.to_json(),
                    "reports": reports.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
                }),
            ))
        }
        Command::Roundtrip { method: m, .. } => {
            let r = roundtrip_check(&load_joint::<T>(args)?, method(m)?)?;
            Ok(Outcome::json(r.pass, r.to_json()))
        }
        Command::Measures { oracle, .. } => {
            let j = load_joint::<T>(args)?;
            let m = measures(&j)?;
            let mut report = m.to_json();
            let mut pass = true;
            if *oracle {
                let tau = tau_by_pair_enumeration(&j)?;
                let tau_agrees = if T::EXACT {
                    tau == m.tau
                } else {
                    (tau.to_f64_lossy() - m.tau.to_f64_lossy()).abs() <= 1e-12
                };
                let c = extend(&extract(&j.convert::<f64>()), ExtensionKind::Checkerboard)?;
                let rho = 12.0 * copula_integral_by_quadrature(&c, 1e-10)? - 3.0;
                let rho_agrees = (rho - m.rho.to_f64_lossy()).abs() <= 1e-8;
                pass = tau_agrees && rho_agrees;
                report["oracle"] = json!({
                    "tau_pair_enumeration": tau.to_json(),
                    "tau_agrees": tau_agrees,
                    "rho_quadrature": rho,
                    "rho_agrees": rho_agrees,
                });
            }
            Ok(Outcome::json(pass, report))
        }
        Command::MarginSensitivity { weights, .. } => {
            let j = load_joint::<T>(args)?;
            let w: Value = serde_json::from_str(weights).map_err(|e| Error::Parse(format!("--weights: {e}")))?;
            let s = margin_sensitivity(&j, &io::weights_from_json::<T>(&w)?)?;
            let table = [
                ("tau", s.original_measures.tau.to_repr(), s.scaled_measures.tau.to_repr()),
                ("rho", s.original_measures.rho.to_repr(), s.scaled_measures.rho.to_repr()),
                ("core_tau", format!("{:?}", s.original_core_tau), format!("{:?}", s.scaled_core_tau)),
            ];
            let mut csv = String::from("measure,original,scaled\n");
            for (name, a, b) in table {
                csv.push_str(&format!("{name},{a},{b}\n"));
            }
            Ok(Outcome { pass: s.cross_ratios_equal && s.core_distance <= 1e-8, report: s.to_json(), csv: Some(csv) })
        }
        Command::Ipf { tol, max_iter, .. } => {
            let (core, diag) = ipf(&load_joint::<T>(args)?, *tol, *max_iter)?;
            Ok(Outcome::json(diag.converged, json!({ "copula": core.to_json(), "diagnostics": diag.to_json() })))
        }
        Command::DemoNonunique { resolution, .. } => demo_nonunique::<T>(&load_joint(args)?, *resolution),
        Command::DemoUniqueContinuous { margins, resolution, .. } => {
            let margins = match margins {
                Some(path) => io::margins_from_json(&read_json(path)?)?,
                None => default_continuous_margins(),
            };
            demo_unique_continuous::<T>(&load_joint(args)?, margins, *resolution)
        }
    }
}

fn demo_nonunique<T: Scalar>(j: &JointPmf<T>, resolution: u32) -> Result<Outcome, Error> {
    let h = extract(j);
    let kinds = [ExtensionKind::Checkerboard, ExtensionKind::from_name("patchwork_m")?];
    let copulas = kinds.iter().map(|&k| extend(&h, k)).collect::<Result<Vec<_>, _>>()?;
    let grids: Vec<_> = copulas.iter().map(grid_agreement).collect();
    let roundtrips = kinds.iter().map(|&k| roundtrip_check(j, k)).collect::<Result<Vec<_>, _>>()?;
    let lattice = ProbeLattice::uniform(j.dims(), resolution);
    let diff = extensions_coincide(&copulas[0], &copulas[1], &lattice)?;
    let values: Vec<Value> = copulas.iter().map(|c| c.eval(&diff.witness).to_json()).collect();
    let differ = !diff.max_diff.is_zero();
    let pass = differ && grids.iter().chain(&roundtrips).all(|r| r.pass);
    Ok(Outcome::json(
        pass,
        json!({
            "pass": pass,
            "extensions": kinds.iter().map(|k| k.name()).collect::<Vec<_>>(),
            "grid_agreement": grids.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
            "roundtrip": roundtrips.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
            "lattice_resolution": resolution,
            "max_difference": diff.max_diff.to_json(),
            "probe": diff.witness.iter().map(Scalar::to_json).collect::<Vec<_>>(),
            "values_at_probe": values,
        }),
    ))
}

fn default_continuous_margins<T: Scalar>() -> Vec<Margin<T>> {
    let bp = |pts: &[(i64, i64, i64, i64)]| {
        Margin::piecewise_linear(pts.iter().map(|&(a, b, c, d)| (T::ratio(a, b), T::ratio(c, d))).collect())
            .expect("valid breakpoints")
    };
    vec![bp(&[(-1, 1, 0, 1), (0, 1, 1, 4), (3, 1, 1, 1)]), bp(&[(0, 1, 0, 1), (1, 1, 2, 3), (5, 1, 1, 1)])]
}

/// Composes the patchwork-M extension of the input's subcopula with
/// continuous margins, tabulates the resulting subcopula on the probe
/// lattice and compares every extension of it there. The same lattice under
/// the input's own discrete margins is reported alongside for contrast.
fn demo_unique_continuous<T: Scalar>(j: &JointPmf<T>, margins: Vec<Margin<T>>, resolution: u32) -> Result<Outcome, Error> {
    if let Some(k) = margins.iter().position(|m| !m.is_strictly_increasing()) {
        return Err(Error::InvalidMargin(format!("margin {} is not strictly increasing and continuous", k + 1)));
    }
    let base = extend(&extract(j), ExtensionKind::from_name("patchwork_m")?)?;
    let h = sklar_compose(base, margins)?.subcopula();
    let full_domain = h.has_full_domain();
    let lattice = ProbeLattice::<T>::uniform(h.dims(), resolution);
    let tabulated = h.materialize(lattice.axes().to_vec())?;
    let kinds = ["checkerboard", "patchwork_m", "patchwork_w"];
    let copulas = kinds
        .iter()
        .map(|k| extend(&tabulated, ExtensionKind::from_name(k)?))
        .collect::<Result<Vec<_>, _>>()?;
    let exact_h = FnCopula::new(h.dims(), move |u: &[T]| h.eval(u).expect("lattice lies in the domain"));
    let mut comparisons = Vec::new();
    let mut max = 0.0f64;
    for (a, ca) in copulas.iter().enumerate() {
        let against_h = extensions_coincide(ca, &exact_h, &lattice)?;
        max = max.max(against_h.max_diff.to_f64_lossy());
        comparisons.push(json!({ "pair": [kinds[a], "subcopula"], "max_diff": against_h.max_diff.to_json() }));
        for (b, cb) in copulas.iter().enumerate().skip(a + 1) {
            let d = extensions_coincide(ca, cb, &lattice)?;
            max = max.max(d.max_diff.to_f64_lossy());
            comparisons.push(json!({ "pair": [kinds[a], kinds[b]], "max_diff": d.max_diff.to_json() }));
        }
    }
    let discrete = extract(j);
    let contrast = extensions_coincide(
        &extend(&discrete, ExtensionKind::Checkerboard)?,
        &extend(&discrete, ExtensionKind::from_name("patchwork_m")?)?,
        &lattice,
    )?;
    let pass = full_domain && max <= 1e-12;
    Ok(Outcome::json(
        pass,
        json!({
            "pass": pass,
            "lattice_resolution": resolution,
            "full_domain": full_domain,
            "max_difference": max,
            "comparisons": comparisons,
            "discrete_margins_contrast": {
                "max_diff": contrast.max_diff.to_json(),
                "probe": contrast.witness.iter().map(Scalar::to_json).collect::<Vec<_>>(),
            },
        }),
    ))
}
