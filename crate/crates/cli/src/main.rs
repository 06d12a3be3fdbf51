//! Command-line front end for the S_{P,Q} kernel.
//!
//! Subcommands: `verify` runs the named verification suites and writes a
//! report-v1 JSON document; `cert` replays the full submodule construction
//! and writes a cert-v1 certificate; `move` plans and executes a
//! transitivity word; `flow` applies a single catalog flow.
//!
//! Exit codes: 0 all checks pass; 1 a verification finding; 2 invalid input;
//! 3 numeric failure.

mod suites;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use giz_core::autoflow::{self, Mode, TimeValue};
use giz_core::parse;
use giz_core::{GaussRat, Point, Surface, Sym};
use num_complex::Complex64;
use serde_json::{json, Value};
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "giz", about = "Exact verification toolkit for the surfaces yu = xP(x), xv = uQ(u), yv = P(x)Q(u)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SurfaceArgs {
    /// Polynomial P in x, e.g. "x^2 - 1"
    #[arg(long = "P")]
    p: String,
    /// Polynomial Q in u, e.g. "u - 1"
    #[arg(long = "Q")]
    q: String,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites and write a report.
    Verify {
        #[command(flatten)]
        surface: SurfaceArgs,
        /// Suites: charts, brackets, ideal, iso, lnd, all (repeatable or comma-separated)
        #[arg(long, value_delimiter = ',')]
        suite: Vec<String>,
        /// Maximum exponent for instantiated identity parameters
        #[arg(long, default_value_t = 2)]
        range: u16,
        /// Numeric tolerance for floating checks
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Seed for randomized checks
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path for the JSON report (stdout otherwise)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Include wall-clock timings (reports stop being byte-reproducible)
        #[arg(long, default_value_t = false)]
        timings: bool,
    },
    /// Build the full bracket certificate and write cert-v1 JSON.
    Cert {
        #[command(flatten)]
        surface: SurfaceArgs,
        /// Maximum exponent for the chain parameters j, k, l, m
        #[arg(long, default_value_t = 1)]
        range: u16,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan and execute an automorphism word between two points.
    Move {
        #[command(flatten)]
        surface: SurfaceArgs,
        /// Start point "x,y,u,v"
        #[arg(long)]
        from: String,
        /// End point "x,y,u,v"
        #[arg(long)]
        to: String,
        /// flows | algebraic
        #[arg(long, default_value = "algebraic")]
        mode: String,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply a single catalog flow to a point.
    Flow {
        #[command(flatten)]
        surface: SurfaceArgs,
        /// Catalog field id, e.g. phi.y2_dx
        #[arg(long)]
        field: String,
        /// Complex time "a+bi" (exact rationals accepted)
        #[arg(long)]
        time: String,
        /// Point "x,y,u,v"
        #[arg(long)]
        point: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

const EXIT_FINDING: i32 = 1;
const EXIT_INVALID: i32 = 2;
const EXIT_NUMERIC: i32 = 3;

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    };
    std::process::exit(code);
}

fn make_surface(args: &SurfaceArgs) -> Result<Surface, String> {
    let p = parse::parse_unipoly(&args.p, Sym::X).map_err(|e| format!("--P: {e}"))?;
    let q = parse::parse_unipoly(&args.q, Sym::U).map_err(|e| format!("--Q: {e}"))?;
    Surface::new(p, q).map_err(|e| e.to_string())
}

/// Parse "x,y,u,v" with entries either exact coefficients or complex floats.
fn parse_point(s: &Surface, text: &str, tol: f64) -> Result<Point, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        return Err("point must have exactly 4 comma-separated entries".into());
    }
    let exact: Option<Vec<GaussRat>> = parts
        .iter()
        .map(|p| parse::parse_scalar(p).ok())
        .collect();
    if let Some(c) = exact {
        let pt = Point::Exact([c[0].clone(), c[1].clone(), c[2].clone(), c[3].clone()]);
        if s.max_residual(&pt) != 0.0 {
            return Err("exact point does not satisfy the surface equations".into());
        }
        return Ok(pt);
    }
    let z: Result<Vec<Complex64>, _> = parts.iter().map(|p| parse::parse_complex(p)).collect();
    let z = z.map_err(|e| e.to_string())?;
    s.check_numeric([z[0], z[1], z[2], z[3]], tol)
        .map_err(|e| e.to_string())
}

fn emit(out: &Option<PathBuf>, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => {
            let mut f = std::fs::File::create(path)?;
            writeln!(f, "{text}")?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn point_json(p: &Point) -> Value {
    match p {
        Point::Exact(c) => json!(c.iter().map(|g| g.to_string()).collect::<Vec<_>>()),
        Point::Numeric { z, .. } => {
            json!(z.iter().map(|w| parse::format_complex(*w)).collect::<Vec<_>>())
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Verify { surface, suite, range, tol, seed, out, timings } => {
            let s = match make_surface(&surface) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("invalid surface: {e}");
                    return Ok(EXIT_INVALID);
                }
            };
            let config = suites::Config { range, tol, seed, timings };
            let requested = suites::expand_suites(&suite);
            let results = suites::run_suites(&s, &requested, &config);
            let all_pass = results.iter().all(|r| r.pass);
            let report = json!({
                "schema": "report-v1",
                "seed": seed,
                "surface": {"P": s.p.to_string(), "Q": s.q.to_string()},
                "config": {"range": range, "tol": tol},
                "suites": suites::suites_json(&results, timings),
            });
            emit(&out, &report)?;
            Ok(if all_pass { 0 } else { EXIT_FINDING })
        }
        Command::Cert { surface, range, out } => {
            let s = match make_surface(&surface) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("invalid surface: {e}");
                    return Ok(EXIT_INVALID);
                }
            };
            if !s.smooth {
                eprintln!("the certificate chain requires a smooth surface");
                return Ok(EXIT_INVALID);
            }
            match suites::certificate_json(&s, range) {
                Ok((value, ok)) => {
                    emit(&out, &value)?;
                    Ok(if ok { 0 } else { EXIT_FINDING })
                }
                Err(e) => {
                    eprintln!("certificate construction failed: {e}");
                    Ok(EXIT_FINDING)
                }
            }
        }
        Command::Move { surface, from, to, mode, tol, out } => {
            let s = match make_surface(&surface) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("invalid surface: {e}");
                    return Ok(EXIT_INVALID);
                }
            };
            let mode = match mode.as_str() {
                "flows" => Mode::Flows,
                "algebraic" => Mode::Algebraic,
                other => {
                    eprintln!("unknown mode `{other}` (use flows or algebraic)");
                    return Ok(EXIT_INVALID);
                }
            };
            if let Err(e) = autoflow::plan_preconditions(&s) {
                eprintln!("rejected: {e}");
                return Ok(EXIT_INVALID);
            }
            let p = match parse_point(&s, &from, tol) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("--from: {e}");
                    return Ok(EXIT_INVALID);
                }
            };
            let q = match parse_point(&s, &to, tol) {
                Ok(q) => q,
                Err(e) => {
                    eprintln!("--to: {e}");
                    return Ok(EXIT_INVALID);
                }
            };
            let word = match autoflow::plan_transitivity(&s, &p, &q, mode) {
                Ok(w) => w,
                Err(e @ autoflow::PlanError::NonSimpleRoots(_))
                | Err(e @ autoflow::PlanError::BothVanishAtZero)
                | Err(e @ autoflow::PlanError::NotOnSurface(_)) => {
                    eprintln!("rejected: {e}");
                    return Ok(EXIT_INVALID);
                }
                Err(e) => {
                    eprintln!("planning failed: {e}");
                    return Ok(EXIT_NUMERIC);
                }
            };
            match autoflow::execute_word(&s, &word, &p, tol) {
                Ok(outcome) => {
                    let endpoint = outcome.endpoint.to_complex();
                    let target = q.to_complex();
                    let scale = target.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
                    let err: f64 = endpoint
                        .iter()
                        .zip(target.iter())
                        .map(|(a, b)| (a - b).norm())
                        .fold(0.0, f64::max);
                    let doc = json!({
                        "schema": "word-v1",
                        "word": word.to_json(),
                        "endpoint": point_json(&outcome.endpoint),
                        "endpoint_error": err / scale,
                        "max_residual": outcome.max_residual,
                    });
                    emit(&out, &doc)?;
                    Ok(if err / scale <= tol.max(1e-6) { 0 } else { EXIT_NUMERIC })
                }
                Err(e) => {
                    eprintln!("execution failed: {e}");
                    Ok(EXIT_NUMERIC)
                }
            }
        }
        Command::Flow { surface, field, time, point, tol } => {
            let s = match make_surface(&surface) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("invalid surface: {e}");
                    return Ok(EXIT_INVALID);
                }
            };
            let t = match parse::parse_scalar(&time) {
                Ok(c) => TimeValue::Exact(c),
                Err(_) => match parse::parse_complex(&time) {
                    Ok(z) => TimeValue::Numeric(z),
                    Err(e) => {
                        eprintln!("--time: {e}");
                        return Ok(EXIT_INVALID);
                    }
                },
            };
            let p = match parse_point(&s, &point, tol) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("--point: {e}");
                    return Ok(EXIT_INVALID);
                }
            };
            match autoflow::closed_flow(&s, &field, &t, &p, tol) {
                Ok(endpoint) => {
                    let doc = json!({
                        "field": field,
                        "endpoint": point_json(&endpoint),
                        "max_residual": s.max_residual(&endpoint),
                    });
                    emit(&None, &doc)?;
                    Ok(0)
                }
                Err(autoflow::FlowError::UnknownField(f)) => {
                    eprintln!("unknown field `{f}`");
                    Ok(EXIT_INVALID)
                }
                Err(autoflow::FlowError::OutsideChartLocus(_)) => {
                    // fall back to numeric integration
                    match giz_core::fields::catalog_derivation(&s, &field) {
                        Ok(v) => match autoflow::numeric_flow(&s, &v, t.to_complex(), &p, tol, true) {
                            Ok(r) => {
                                let doc = json!({
                                    "field": field,
                                    "endpoint": point_json(&r.endpoint),
                                    "max_residual": r.max_residual,
                                    "integration_steps": r.steps,
                                });
                                emit(&None, &doc)?;
                                Ok(0)
                            }
                            Err(e) => {
                                eprintln!("numeric flow failed: {e}");
                                Ok(EXIT_NUMERIC)
                            }
                        },
                        Err(e) => {
                            eprintln!("{e}");
                            Ok(EXIT_INVALID)
                        }
                    }
                }
                Err(e) => {
                    eprintln!("flow failed: {e}");
                    Ok(EXIT_NUMERIC)
                }
            }
        }
    }
}
