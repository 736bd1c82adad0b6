use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use monodromy_core::chebwitness::{self, VariationRule};
use monodromy_core::decompose::{recognize_exceptional, right_components};
use monodromy_core::hyperlat::{self, BiPoly, OneForm};
use monodromy_core::permlab;
use monodromy_core::tracker::{self, LoopPath, MonodromyOptions, TrackOptions};
use monodromy_core::zerodim::{self, SimpleCycle};
use monodromy_core::{Error, RatPoly, Rational};

mod corpus;

const EXIT_REJECTED: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "monodromy",
    version,
    about = "Monodromy, decompositions and Abelian-integral certificates"
)]
struct Cli {
    #[command(flatten)]
    track: TrackFlags,

    /// Include wall-clock timings in the report.
    #[arg(long, global = true)]
    timings: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
struct TrackFlags {
    /// Maximal continuation step.
    #[arg(long, global = true)]
    step: Option<f64>,
    /// Newton corrector tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Minimal relative distance to a critical value.
    #[arg(long, global = true)]
    guard: Option<f64>,
}

impl TrackFlags {
    fn options(&self) -> Result<MonodromyOptions, Error> {
        let mut t = TrackOptions::default();
        if let Some(step) = self.step {
            t.max_step = step;
            t.initial_step = t.initial_step.min(step);
        }
        if let Some(tol) = self.tol {
            t.corrector_tol = tol;
        }
        if let Some(guard) = self.guard {
            t.collision_guard = guard;
        }
        t.validate()?;
        Ok(MonodromyOptions::new(t))
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify the monodromy group of f.
    Classify {
        #[arg(long)]
        f: String,
    },
    /// All decompositions f = g∘h and the exceptional kind.
    Decompose {
        #[arg(long)]
        f: String,
    },
    /// Loop basis, fiber and tracked permutations; optionally track one loop.
    Monodromy {
        #[arg(long)]
        f: String,
        /// Loop as JSON {"basepoint":[re,im],"vertices":[[re,im],...]}.
        #[arg(long = "loop")]
        loop_json: Option<String>,
    },
    /// Tangential-center test for a 0-dimensional Abelian integral.
    Center0 {
        #[arg(long)]
        f: String,
        #[arg(long)]
        omega: String,
        /// 1-based root labels "i,j".
        #[arg(long)]
        cycle: String,
    },
    /// Span of the monodromy orbit of a simple cycle.
    Span0 {
        #[arg(long)]
        f: String,
        #[arg(long)]
        cycle: String,
    },
    /// Orbit span of a vanishing cycle on y² + f(x) = t.
    HyperSpan {
        #[arg(long)]
        f: String,
        /// Index of the critical value in loop-basis order.
        #[arg(long, default_value_t = 0)]
        value: usize,
        /// Index of the Morse point above that value.
        #[arg(long, default_value_t = 0)]
        point: usize,
    },
    /// Tangential-center test for ω = P dx + Q dy perturbing y² + f(x).
    HyperCenter {
        #[arg(long)]
        f: String,
        /// Bivariate text: rows by power of y separated by ';'.
        #[arg(long = "P", default_value = "0")]
        p: String,
        #[arg(long = "Q", default_value = "0")]
        q: String,
        /// Rational Morse point of f.
        #[arg(long, default_value = "0")]
        morse: String,
    },
    /// Exact and numeric witnesses for y² + T_p(x).
    ChebWitness {
        /// Odd prime degree.
        #[arg(long, default_value_t = 5)]
        p: usize,
        /// Cycle index, 1 ≤ k ≤ (p−1)/2.
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Polynomial 0-form for the numeric δ_w table.
        #[arg(long, default_value = "0,0,1")]
        omega: String,
        /// Number of levels in the period table.
        #[arg(long, default_value_t = 5)]
        samples: usize,
        /// Sign convention for the basis variations.
        #[arg(long, value_enum, default_value_t = RuleArg::Equivariant)]
        rule: RuleArg,
    },
    /// Run the bundled fixtures.
    Corpus,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum RuleArg {
    Equivariant,
    Printed,
}

impl From<RuleArg> for VariationRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::Equivariant => VariationRule::Equivariant,
            RuleArg::Printed => VariationRule::Printed,
        }
    }
}

#[derive(Serialize)]
struct Report {
    command: &'static str,
    input: Value,
    result: Value,
    version: &'static str,
    options: MonodromyOptions,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings: Option<Value>,
}

fn poly(field: &str, s: &str) -> Result<RatPoly, Error> {
    s.parse().map_err(|e| match e {
        Error::Parse { position, message } => Error::Parse {
            position,
            message: format!("--{field}: {message}"),
        },
        other => other,
    })
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report values serialize")
}

fn sample_circle(count: usize, radius: f64) -> Vec<Complex64> {
    (0..count)
        .map(|j| {
            Complex64::from_polar(
                radius,
                0.3 + std::f64::consts::TAU * j as f64 / count as f64,
            )
        })
        .collect()
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn run(command: &Command, opts: &MonodromyOptions) -> Result<(&'static str, Value, Value), Error> {
    Ok(match command {
        Command::Classify { f } => {
            let fp = poly("f", f)?;
            (
                "classify",
                json!({ "f": f }),
                to_value(&permlab::classify(&fp, opts)?),
            )
        }
        Command::Decompose { f } => {
            let fp = poly("f", f)?;
            let decs = right_components(&fp);
            let exc = recognize_exceptional(&fp)?;
            (
                "decompose",
                json!({ "f": f }),
                json!({
                    "decompositions": to_value(&decs),
                    "exceptional": to_value(&exc.kind),
                    "certificate": to_value(&exc),
                }),
            )
        }
        Command::Monodromy { f, loop_json } => {
            let fp = poly("f", f)?;
            let m = tracker::compute_monodromy(&fp, opts)?;
            let mut result = json!({
                "basis": to_value(&m.basis),
                "fiber": m.fiber.iter().map(|&z| pair(z)).collect::<Vec<_>>(),
                "generators": to_value(&m.generators()),
                "swap_words": m.small.iter().map(|r| to_value(&r.swap_word)).collect::<Vec<_>>(),
                "big_loop": to_value(&m.big.permutation),
                "small_loop_product": to_value(&m.small_loop_product()),
                "riemann_hurwitz_sum": m.riemann_hurwitz_sum(),
            });
            let mut input = json!({ "f": f });
            if let Some(lj) = loop_json {
                let path = LoopPath::from_json(lj)?;
                let r = tracker::track_loop(
                    &monodromy_core::polycore::CPoly::from(&fp),
                    &path,
                    &opts.track,
                )?;
                result["loop"] = to_value(&r);
                input["loop"] = serde_json::from_str(&path.to_json()).expect("loop JSON");
            }
            ("monodromy", input, result)
        }
        Command::Center0 { f, omega, cycle } => {
            let fp = poly("f", f)?;
            let op = poly("omega", omega)?;
            let delta = SimpleCycle::parse_one_based(cycle)?;
            let cert = zerodim::center_test(&fp, &op, delta, opts)?;
            (
                "center0",
                json!({ "f": f, "omega": omega, "cycle": to_value(&delta) }),
                to_value(&cert),
            )
        }
        Command::Span0 { f, cycle } => {
            let fp = poly("f", f)?;
            let delta = SimpleCycle::parse_one_based(cycle)?;
            let r = zerodim::span_test(&fp, delta, opts)?;
            (
                "span0",
                json!({ "f": f, "cycle": to_value(&delta) }),
                to_value(&r),
            )
        }
        Command::HyperSpan { f, value, point } => {
            let fp = poly("f", f)?;
            let r = hyperlat::hyper_span(&fp, *value, *point, opts)?;
            (
                "hyper-span",
                json!({ "f": f, "value": value, "point": point }),
                to_value(&r),
            )
        }
        Command::HyperCenter { f, p, q, morse } => {
            let fp = poly("f", f)?;
            let pp: BiPoly = p.parse()?;
            let qq: BiPoly = q.parse()?;
            let c: Rational = morse.trim().parse().map_err(|_| Error::Parse {
                position: 0,
                message: format!("--morse: not a rational number: {morse}"),
            })?;
            let report = hyperlat::hyper_center_test(&fp, &OneForm::new(pp, qq), &c)?;
            (
                "hyper-center",
                json!({ "f": f, "P": p, "Q": q, "morse": morse }),
                to_value(&report),
            )
        }
        Command::ChebWitness {
            p,
            k,
            omega,
            samples,
            rule,
        } => {
            let op = poly("omega", omega)?;
            let rule = VariationRule::from(*rule);
            let variations = chebwitness::check_variations(*p, *k, rule)?;
            let other = match rule {
                VariationRule::Equivariant => VariationRule::Printed,
                VariationRule::Printed => VariationRule::Equivariant,
            };
            let delta = chebwitness::delta_w_integral(*p, *k)?;
            let ts = sample_circle(10, 0.5);
            let numeric = chebwitness::delta_w_numeric(*p, *k, &op, &ts)?;
            let periods = chebwitness::default_levels(*samples)
                .into_iter()
                .map(|t| chebwitness::period_sample(*p, *k, t))
                .collect::<Result<Vec<_>, _>>()?;
            (
                "cheb-witness",
                json!({ "p": p, "k": k, "omega": omega, "samples": samples }),
                json!({
                    "variations": to_value(&variations),
                    "other_rule": to_value(&chebwitness::check_variations(*p, *k, other)?),
                    "delta_w": to_value(&delta),
                    "delta_w_numeric": ts.iter().zip(&numeric).map(|(&t, &v)| [pair(t), pair(v)]).collect::<Vec<_>>(),
                    "periods": to_value(&periods),
                    "rank": to_value(&chebwitness::invariant_rank(*p)?),
                    "consistency": to_value(&chebwitness::monodromy_consistency(*p, rule, opts)?),
                }),
            )
        }
        Command::Corpus => ("corpus", json!({}), to_value(&corpus::run(opts))),
    })
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Parse { .. } => "Parse",
        Error::InvalidInput(_) => "InvalidInput",
        Error::NonConvergence { .. } => "NonConvergence",
        Error::Degenerate(_) => "Degenerate",
        Error::TooCloseToSigma { .. } => "TooCloseToSigma",
        Error::StepUnderflow { .. } => "StepUnderflow",
        Error::RootCollision { .. } => "RootCollision",
        Error::NotMorse(_) => "NotMorse",
        Error::CompositeModulus(_) => "CompositeModulus",
        Error::Inconsistency(_) => "Inconsistency",
    }
}

// a closed pipe downstream is not an error of ours
fn emit(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}").and_then(|_| out.flush());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let outcome = cli
        .track
        .options()
        .and_then(|opts| run(&cli.command, &opts).map(|r| (r, opts)));
    match outcome {
        Ok(((command, input, result), options)) => {
            let failed = command == "corpus" && result["failed"].as_u64().unwrap_or(0) > 0;
            let report = Report {
                command,
                input,
                result,
                version: env!("CARGO_PKG_VERSION"),
                options,
                timings: cli
                    .timings
                    .then(|| json!({ "wall_ms": started.elapsed().as_secs_f64() * 1e3 })),
            };
            emit(&serde_json::to_string(&report).expect("report serializes"));
            if failed {
                ExitCode::from(EXIT_NUMERIC)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            let body = json!({
                "error": { "kind": error_kind(&e), "message": e.to_string() },
                "version": env!("CARGO_PKG_VERSION"),
            });
            emit(&body.to_string());
            eprintln!("error: {e}");
            ExitCode::from(if e.is_rejected_input() {
                EXIT_REJECTED
            } else {
                EXIT_NUMERIC
            })
        }
    }
}
