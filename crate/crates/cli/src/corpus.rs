//! Bundled regression fixtures.

use serde::{Deserialize, Serialize};

use monodromy_core::chebwitness::{self, VariationRule};
use monodromy_core::decompose::right_components;
use monodromy_core::hyperlat::{self, BiPoly, HyperSpanVerdict, OneForm};
use monodromy_core::permlab;
use monodromy_core::tracker::{self, MonodromyOptions};
use monodromy_core::zerodim::{self, SimpleCycle, SpanResult};
use monodromy_core::{Error, RatPoly, Rational};

const FIXTURES: &str = include_str!("../fixtures/corpus.json");

#[derive(Deserialize, Debug)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum Fixture {
    Classify {
        name: String,
        f: String,
        tag: String,
    },
    Decompose {
        name: String,
        f: String,
        count: usize,
    },
    Monodromy {
        name: String,
        f: String,
    },
    Center0 {
        name: String,
        f: String,
        omega: String,
        cycle: String,
        verdict: String,
    },
    Span0 {
        name: String,
        f: String,
        cycle: String,
        verdict: String,
    },
    HyperSpan {
        name: String,
        f: String,
        verdict: String,
    },
    HyperCenter {
        name: String,
        f: String,
        #[serde(rename = "P")]
        p: String,
        #[serde(rename = "Q")]
        q: String,
        verdict: String,
    },
    ChebWitness {
        name: String,
        p: usize,
        k: usize,
    },
}

#[derive(Serialize, Debug)]
pub struct Row {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Serialize, Debug)]
pub struct Summary {
    pub rows: Vec<Row>,
    pub passed: usize,
    pub failed: usize,
}

fn expect(got: &str, want: &str) -> (bool, String) {
    (got == want, format!("got {got}, expected {want}"))
}

fn check(fx: &Fixture, opts: &MonodromyOptions) -> Result<(bool, String), Error> {
    let p = |s: &str| s.parse::<RatPoly>();
    Ok(match fx {
        Fixture::Classify { f, tag, .. } => {
            expect(permlab::classify(&p(f)?, opts)?.class.tag(), tag)
        }
        Fixture::Decompose { f, count, .. } => {
            let f = p(f)?;
            let decs = right_components(&f);
            let ok = decs.len() == *count && decs.iter().all(|d| d.compose() == f);
            (
                ok,
                format!("{} decompositions, expected {count}", decs.len()),
            )
        }
        Fixture::Monodromy { f, .. } => {
            let m = tracker::compute_monodromy(&p(f)?, opts)?;
            let n = m.degree();
            let rh = m.riemann_hurwitz_sum();
            let cycles = m.big.permutation.cycle_count();
            let ok = rh == n - 1 && cycles == 1 && m.small_loop_product() == m.big.permutation;
            (
                ok,
                format!("n = {n}, Riemann-Hurwitz sum {rh}, big loop has {cycles} cycle(s)"),
            )
        }
        Fixture::Center0 {
            f,
            omega,
            cycle,
            verdict,
            ..
        } => {
            let cert = zerodim::center_test(
                &p(f)?,
                &p(omega)?,
                SimpleCycle::parse_one_based(cycle)?,
                opts,
            )?;
            expect(
                if cert.vanishes() {
                    "Vanishes"
                } else {
                    "DoesNotVanish"
                },
                verdict,
            )
        }
        Fixture::Span0 {
            f, cycle, verdict, ..
        } => {
            let r = zerodim::span_test(&p(f)?, SimpleCycle::parse_one_based(cycle)?, opts)?;
            let got = match r {
                SpanResult::FullSpan { .. } => "FullSpan",
                SpanResult::Decomposes { .. } => "Decomposes",
            };
            expect(got, verdict)
        }
        Fixture::HyperSpan { f, verdict, .. } => {
            let r = hyperlat::hyper_span(&p(f)?, 0, 0, opts)?;
            let got = match r.verdict {
                HyperSpanVerdict::Full => "Full",
                HyperSpanVerdict::Decomposes(_) => "Decomposes",
            };
            expect(got, verdict)
        }
        Fixture::HyperCenter {
            f,
            p: pp,
            q,
            verdict,
            ..
        } => {
            let omega = OneForm::new(pp.parse::<BiPoly>()?, q.parse::<BiPoly>()?);
            let r = hyperlat::hyper_center_test(&p(f)?, &omega, &Rational::from_integer(0.into()))?;
            expect(r.tag(), verdict)
        }
        Fixture::ChebWitness { p, k, .. } => {
            let v = chebwitness::check_variations(*p, *k, VariationRule::Equivariant)?;
            let d = chebwitness::delta_w_integral(*p, *k)?;
            let samples = chebwitness::default_levels(3)
                .into_iter()
                .map(|t| chebwitness::period_sample(*p, *k, t))
                .collect::<Result<Vec<_>, _>>()?;
            let small = |z: [f64; 2]| z[0].hypot(z[1]) < 1e-8;
            let periods = samples.iter().all(|s| small(s.s_w) && small(s.c_w));
            let ok = v.var1_c && v.var1_s && v.varm1_c && d.exact_zero == (*k >= 2) && periods;
            (
                ok,
                format!(
                    "variations {:?}/{:?}, delta_w zero {}, periods vanish {periods}",
                    v.var1_c_factor, v.varm1_s_factor, d.exact_zero
                ),
            )
        }
    })
}

fn name(fx: &Fixture) -> &str {
    match fx {
        Fixture::Classify { name, .. }
        | Fixture::Decompose { name, .. }
        | Fixture::Monodromy { name, .. }
        | Fixture::Center0 { name, .. }
        | Fixture::Span0 { name, .. }
        | Fixture::HyperSpan { name, .. }
        | Fixture::HyperCenter { name, .. }
        | Fixture::ChebWitness { name, .. } => name,
    }
}

pub fn run(opts: &MonodromyOptions) -> Summary {
    let fixtures: Vec<Fixture> = serde_json::from_str(FIXTURES).expect("bundled fixtures parse");
    let rows: Vec<Row> = fixtures
        .iter()
        .map(|fx| {
            let (pass, detail) = check(fx, opts).unwrap_or_else(|e| (false, format!("error: {e}")));
            Row {
                name: name(fx).to_string(),
                pass,
                detail,
            }
        })
        .collect();
    let passed = rows.iter().filter(|r| r.pass).count();
    Summary {
        failed: rows.len() - passed,
        passed,
        rows,
    }
}
