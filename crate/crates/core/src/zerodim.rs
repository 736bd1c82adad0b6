//! Zero-dimensional Abelian integrals `I₀(t) = Σ nᵢ ω(xᵢ(t))` over the fibers of
//! `f`, the tangential-center test for simple cycles and the span dichotomy.

use std::collections::{BTreeMap, HashMap, VecDeque};

use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::decompose::{poly_text, right_components, Decomposition};
use crate::error::{Error, Result};
use crate::linalg;
use crate::permlab::{BlockSystem, PermAction, Permutation};
use crate::polycore::{rat, rat_to_f64, RatPoly, Rational};
use crate::tracker::{self, FiberTransport, MonodromyOptions};

/// Tolerance of the numeric co-fiber test `h(xᵢ) = h(xⱼ)`.
pub const COFIBER_TOL: f64 = 1e-8;
/// A sample counts as a non-vanishing witness above this modulus.
pub const WITNESS_THRESHOLD: f64 = 1e-6;
pub const WITNESS_SAMPLES: usize = 40;
pub const VERIFY_SAMPLES: usize = 20;

/// `Σ nᵢ xᵢ` with `Σ nᵢ = 0`; indices are basepoint labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZeroCycle {
    weights: BTreeMap<usize, Rational>,
}

impl ZeroCycle {
    pub fn new(weights: impl IntoIterator<Item = (usize, Rational)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, w) in weights {
            let entry = map.entry(i).or_insert_with(Rational::zero);
            *entry += w;
        }
        map.retain(|_, w| !w.is_zero());
        if map.is_empty() {
            return Err(Error::InvalidInput(
                "zero cycle has no nonzero weight".into(),
            ));
        }
        if !map.values().fold(Rational::zero(), |a, w| a + w).is_zero() {
            return Err(Error::InvalidInput(
                "zero cycle weights must sum to 0".into(),
            ));
        }
        Ok(ZeroCycle { weights: map })
    }

    pub fn weights(&self) -> &BTreeMap<usize, Rational> {
        &self.weights
    }

    pub fn dense(&self, n: usize) -> Vec<Rational> {
        (0..n)
            .map(|i| self.weights.get(&i).cloned().unwrap_or_else(Rational::zero))
            .collect()
    }

    pub fn complex_weights(&self, n: usize) -> Vec<Complex64> {
        self.dense(n)
            .iter()
            .map(|w| Complex64::new(rat_to_f64(w), 0.0))
            .collect()
    }

    pub fn max_index(&self) -> usize {
        *self.weights.keys().next_back().expect("nonempty")
    }
}

impl From<SimpleCycle> for ZeroCycle {
    fn from(c: SimpleCycle) -> Self {
        ZeroCycle::new([(c.i, rat(1)), (c.j, rat(-1))]).expect("i ≠ j")
    }
}

/// `x_i − x_j`, 0-based labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SimpleCycle {
    pub i: usize,
    pub j: usize,
}

impl SimpleCycle {
    pub fn new(i: usize, j: usize) -> Result<Self> {
        if i == j {
            return Err(Error::InvalidInput(
                "simple cycle needs two distinct roots".into(),
            ));
        }
        Ok(SimpleCycle { i, j })
    }

    /// Parses the 1-based form `"i,j"`.
    pub fn parse_one_based(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = |message: &str| Error::Parse {
            position: 0,
            message: message.into(),
        };
        if parts.len() != 2 {
            return Err(bad("cycle must be two comma-separated indices"));
        }
        let mut idx = [0usize; 2];
        for (k, p) in parts.iter().enumerate() {
            let v: usize = p
                .parse()
                .map_err(|_| bad("cycle index is not a positive integer"))?;
            if v == 0 {
                return Err(bad("cycle indices are 1-based"));
            }
            idx[k] = v - 1;
        }
        SimpleCycle::new(idx[0], idx[1])
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.i >= n || self.j >= n {
            return Err(Error::InvalidInput(format!(
                "cycle index out of range for degree {n}"
            )));
        }
        Ok(())
    }
}

impl Serialize for SimpleCycle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.i + 1, self.j + 1].serialize(s)
    }
}

/// `Σ wᵢ ω(xᵢ(t))` at each sample, with complex weights.
pub fn eval_with_weights(
    transport: &FiberTransport,
    omega: &RatPoly,
    weights: &[Complex64],
    samples: &[Complex64],
) -> Result<Vec<Complex64>> {
    if weights.len() != transport.degree() {
        return Err(Error::InvalidInput("one weight per root expected".into()));
    }
    samples
        .iter()
        .map(|&t| {
            let roots = transport.roots_at(t)?;
            Ok(roots
                .iter()
                .zip(weights)
                .map(|(&x, &w)| w * omega.eval_c(x))
                .sum())
        })
        .collect()
}

/// `I₀(t) = Σ nᵢ ω(xᵢ(t))` at each sample, roots continued from the basepoint.
pub fn eval_zero_integral(
    f: &RatPoly,
    omega: &RatPoly,
    delta: &ZeroCycle,
    samples: &[Complex64],
    opts: &MonodromyOptions,
) -> Result<Vec<Complex64>> {
    let transport = FiberTransport::new(f, opts)?;
    if delta.max_index() >= transport.degree() {
        return Err(Error::InvalidInput("cycle index out of range".into()));
    }
    eval_with_weights(
        &transport,
        omega,
        &delta.complex_weights(transport.degree()),
        samples,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub enum CenterCertificate {
    /// `f = g∘h`, `ω = η∘h`, and `h` takes one value on the cycle.
    Vanishes {
        h: RatPoly,
        g: RatPoly,
        eta: RatPoly,
    },
    DoesNotVanish {
        sample: Complex64,
        value: Complex64,
    },
}

impl Serialize for CenterCertificate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(None)?;
        match self {
            CenterCertificate::Vanishes { h, g, eta } => {
                m.serialize_entry("verdict", "Vanishes")?;
                m.serialize_entry("h", &h.to_string())?;
                m.serialize_entry("g", &g.to_string())?;
                m.serialize_entry("eta", &eta.to_string())?;
            }
            CenterCertificate::DoesNotVanish { sample, value } => {
                m.serialize_entry("verdict", "DoesNotVanish")?;
                m.serialize_entry("sample", &[sample.re, sample.im])?;
                m.serialize_entry("value", &[value.re, value.im])?;
            }
        }
        m.end()
    }
}

impl CenterCertificate {
    pub fn vanishes(&self) -> bool {
        matches!(self, CenterCertificate::Vanishes { .. })
    }
}

/// Right components of `f` by increasing degree, ending with `f` itself.
pub(crate) fn right_components_with_self(f: &RatPoly) -> Vec<Decomposition> {
    let mut out = right_components(f);
    let lead = f.leading();
    let c0 = f.coeff(0);
    // f = (lead·z + c0) ∘ h with h = (f − c0)/lead monic, h(0) = 0
    let h = (f - &RatPoly::constant(c0.clone())).scale(&(Rational::one() / &lead));
    out.push(Decomposition {
        g: RatPoly::linear(lead, c0),
        h,
    });
    out
}

fn cofiber(h: &RatPoly, a: Complex64, b: Complex64) -> bool {
    let (ha, hb) = (h.eval_c(a), h.eval_c(b));
    (ha - hb).norm() <= COFIBER_TOL * (1.0 + ha.norm().max(hb.norm()))
}

/// Decides whether `∫_δ ω` vanishes identically for a simple cycle `δ`.
///
/// A vanishing verdict carries `f = g∘h`, `ω = η∘h` with `h` constant on `δ`;
/// otherwise a sample with `|I₀| > 1e−6` is returned.
pub fn center_test(
    f: &RatPoly,
    omega: &RatPoly,
    delta: SimpleCycle,
    opts: &MonodromyOptions,
) -> Result<CenterCertificate> {
    let transport = FiberTransport::new(f, opts)?;
    delta.check(transport.degree())?;
    center_test_with(&transport, omega, delta)
}

pub fn center_test_with(
    transport: &FiberTransport,
    omega: &RatPoly,
    delta: SimpleCycle,
) -> Result<CenterCertificate> {
    let f = &transport.f;
    delta.check(transport.degree())?;
    let probes = transport.sample_circle(3);
    let mut fibers = vec![transport.fiber.clone()];
    for &t in probes.iter().take(2) {
        fibers.push(transport.roots_at(t)?);
    }
    for dec in right_components_with_self(f) {
        if !fibers
            .iter()
            .all(|x| cofiber(&dec.h, x[delta.i], x[delta.j]))
        {
            continue;
        }
        let Some(eta) = omega.expand_in(&dec.h) else {
            continue;
        };
        if dec.g.compose(&dec.h) != *f || eta.compose(&dec.h) != *omega {
            return Err(Error::Inconsistency(
                "center certificate fails to recompose".into(),
            ));
        }
        let weights = ZeroCycle::from(delta).complex_weights(transport.degree());
        let samples = transport.sample_circle(VERIFY_SAMPLES);
        let values = eval_with_weights(transport, omega, &weights, &samples)?;
        for (t, v) in samples.iter().zip(values) {
            let roots = transport.roots_at(*t)?;
            let scale = 1.0
                + roots
                    .iter()
                    .map(|&x| omega.eval_c(x).norm())
                    .fold(0.0, f64::max);
            if v.norm() > 1e-9 * scale {
                return Err(Error::Inconsistency(format!(
                    "certified center but |I₀| = {:.3e} at a sample",
                    v.norm()
                )));
            }
        }
        return Ok(CenterCertificate::Vanishes {
            h: dec.h,
            g: dec.g,
            eta,
        });
    }
    let weights = ZeroCycle::from(delta).complex_weights(transport.degree());
    let samples = transport.sample_circle(WITNESS_SAMPLES);
    for &t in &samples {
        let v = eval_with_weights(transport, omega, &weights, &[t])?[0];
        if v.norm() > WITNESS_THRESHOLD {
            return Ok(CenterCertificate::DoesNotVanish {
                sample: t,
                value: v,
            });
        }
    }
    Err(Error::Inconsistency(
        "integral vanishes at every sample but no exact certificate exists".into(),
    ))
}

/// A generator word: `k > 0` is loop `k` (1-based), `−k` its inverse; applied
/// left to right.
pub type LoopWord = Vec<i32>;

fn apply_word(gens: &[Permutation], word: &[i32], point: usize) -> usize {
    word.iter().fold(point, |p, &w| {
        let g = &gens[(w.unsigned_abs() - 1) as usize];
        if w > 0 {
            g.apply(p)
        } else {
            g.inverse().apply(p)
        }
    })
}

/// One basis element of a full span: `x_a − x_b` as the image of `δ` under `word`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpanElement {
    pub word: LoopWord,
    pub cycle: SimpleCycle,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpanResult {
    FullSpan {
        elements: Vec<SpanElement>,
        rank: usize,
    },
    Decomposes {
        decomposition: Decomposition,
        components: BlockSystem,
    },
}

impl SpanResult {
    pub fn verdict(&self) -> &'static str {
        match self {
            SpanResult::FullSpan { .. } => "FullSpan",
            SpanResult::Decomposes { .. } => "Decomposes",
        }
    }
}

impl Serialize for SpanResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("verdict", self.verdict())?;
        match self {
            SpanResult::FullSpan { elements, rank } => {
                m.serialize_entry("rank", rank)?;
                m.serialize_entry("basis", elements)?;
            }
            SpanResult::Decomposes {
                decomposition,
                components,
            } => {
                m.serialize_entry("g", &PolyText(&decomposition.g))?;
                m.serialize_entry("h", &PolyText(&decomposition.h))?;
                m.serialize_entry("components", components)?;
            }
        }
        m.end()
    }
}

struct PolyText<'a>(&'a RatPoly);

impl Serialize for PolyText<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        poly_text(self.0, s)
    }
}

/// Unordered pairs in the orbit of `{i, j}`, each with a word reaching it.
pub fn pair_orbit_words(action: &PermAction, delta: SimpleCycle) -> Vec<(SimpleCycle, LoopWord)> {
    let gens = action.generators();
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut seen = HashMap::new();
    let mut out = vec![(delta, Vec::new())];
    seen.insert(key(delta.i, delta.j), 0usize);
    let mut queue = VecDeque::from([0usize]);
    while let Some(idx) = queue.pop_front() {
        let (c, word) = out[idx].clone();
        for k in 1..=gens.len() as i32 {
            for w in [k, -k] {
                let (a, b) = (apply_word(gens, &[w], c.i), apply_word(gens, &[w], c.j));
                if seen.contains_key(&key(a, b)) {
                    continue;
                }
                let mut next = word.clone();
                next.push(w);
                seen.insert(key(a, b), out.len());
                queue.push_back(out.len());
                out.push((SimpleCycle { i: a, j: b }, next));
            }
        }
    }
    out
}

/// Decides whether the monodromy images of `δ = x_i − x_j` span the reduced
/// homology of the fiber, or else exhibits a right component `h` constant on
/// `δ`.
pub fn span_test(f: &RatPoly, delta: SimpleCycle, opts: &MonodromyOptions) -> Result<SpanResult> {
    let m = tracker::compute_monodromy(f, opts)?;
    let n = m.degree();
    delta.check(n)?;
    let action = m.action();
    let edges = pair_orbit_words(&action, delta);

    // spanning forest by BFS from δ.i
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, (c, _)) in edges.iter().enumerate() {
        adjacency[c.i].push(e);
        adjacency[c.j].push(e);
    }
    let mut component = vec![usize::MAX; n];
    let mut tree = Vec::new();
    let mut count = 0;
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        component[start] = count;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &e in &adjacency[v] {
                let c = edges[e].0;
                let other = if c.i == v { c.j } else { c.i };
                if component[other] == usize::MAX {
                    component[other] = count;
                    tree.push(e);
                    queue.push_back(other);
                }
            }
        }
        count += 1;
    }

    if count == 1 {
        let elements: Vec<SpanElement> = tree
            .iter()
            .map(|&e| SpanElement {
                word: edges[e].1.clone(),
                cycle: edges[e].0,
            })
            .collect();
        let rows: Vec<Vec<Rational>> = elements
            .iter()
            .map(|el| ZeroCycle::from(el.cycle).dense(n))
            .collect();
        let rank = linalg::rank(&rows);
        if rank != n - 1 {
            return Err(Error::Inconsistency(format!(
                "spanning tree gives rank {rank}, expected {}",
                n - 1
            )));
        }
        for el in &elements {
            let (a, b) = (
                apply_word(action.generators(), &el.word, delta.i),
                apply_word(action.generators(), &el.word, delta.j),
            );
            if (a, b) != (el.cycle.i, el.cycle.j) {
                return Err(Error::Inconsistency(
                    "span word does not reproduce its cycle".into(),
                ));
            }
        }
        return Ok(SpanResult::FullSpan { elements, rank });
    }

    let mut parts = vec![Vec::new(); count];
    for (v, &c) in component.iter().enumerate() {
        parts[c].push(v);
    }
    let components = BlockSystem::new(parts)?;
    if !components.is_invariant_under(action.generators()) {
        return Err(Error::Inconsistency(
            "orbit-graph components are not blocks".into(),
        ));
    }
    let fiber = &m.fiber;
    let decomposition = right_components(f)
        .into_iter()
        .find(|d| cofiber(&d.h, fiber[delta.i], fiber[delta.j]))
        .ok_or_else(|| {
            Error::Inconsistency("disconnected orbit graph but no rational right component".into())
        })?;
    Ok(SpanResult::Decomposes {
        decomposition,
        components,
    })
}

/// Labels of the root pairs `{i, j}` at the basepoint with `x_j = −x_i`
/// numerically (within `tol`), for symmetric examples.
pub fn antipodal_pairs(fiber: &[Complex64], tol: f64) -> Vec<SimpleCycle> {
    let mut out = Vec::new();
    for i in 0..fiber.len() {
        for j in i + 1..fiber.len() {
            if (fiber[i] + fiber[j]).norm() <= tol * (1.0 + fiber[i].norm()) {
                out.push(SimpleCycle { i, j });
            }
        }
    }
    out
}

/// All simple cycles of degree `n`, `i < j`.
pub fn all_simple_cycles(n: usize) -> Vec<SimpleCycle> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| SimpleCycle { i, j }))
        .collect()
}

/// The signed weight sum `Σ |nᵢ|`, used to scale tolerances.
pub fn weight_norm(c: &ZeroCycle) -> Rational {
    c.weights()
        .values()
        .map(|w| w.abs())
        .fold(Rational::zero(), |a, b| a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::chebyshev;

    fn p(s: &str) -> RatPoly {
        s.parse().unwrap()
    }

    fn opts() -> MonodromyOptions {
        MonodromyOptions::default()
    }

    #[test]
    fn zero_cycle_validation() {
        assert!(ZeroCycle::new([(0, rat(1)), (1, rat(1))]).is_err());
        assert!(ZeroCycle::new([(0, rat(1)), (0, rat(-1))]).is_err());
        assert!(SimpleCycle::new(2, 2).is_err());
        assert_eq!(
            SimpleCycle::parse_one_based("1, 3").unwrap(),
            SimpleCycle { i: 0, j: 2 }
        );
        assert!(SimpleCycle::parse_one_based("0,1").is_err());
        assert!(SimpleCycle::parse_one_based("1").is_err());
    }

    #[test]
    fn square_integrals() {
        let f = p("0,0,1");
        let d = ZeroCycle::from(SimpleCycle { i: 0, j: 1 });
        let samples = [
            Complex64::new(1.0, 0.3),
            Complex64::new(-2.0, 1.0),
            Complex64::new(0.5, -4.0),
        ];
        let even = eval_zero_integral(&f, &p("0,0,1"), &d, &samples, &opts()).unwrap();
        assert!(even.iter().all(|v| v.norm() < 1e-12));
        let odd = eval_zero_integral(&f, &p("0,1"), &d, &samples, &opts()).unwrap();
        for (v, t) in odd.iter().zip(samples) {
            // ±2√t on some branch
            assert!(((v * v) - 4.0 * t).norm() < 1e-9);
        }
    }

    #[test]
    fn quartic_centers() {
        let f = p("0,0,0,0,1");
        let t = FiberTransport::new(&f, &opts()).unwrap();
        let pair = antipodal_pairs(&t.fiber, 1e-9)[0];
        match center_test_with(&t, &p("0,0,1"), pair).unwrap() {
            CenterCertificate::Vanishes { h, g, eta } => {
                assert_eq!(h, p("0,0,1"));
                assert_eq!(g, p("0,0,1"));
                assert_eq!(eta, p("0,1"));
            }
            other => panic!("expected a center, got {other:?}"),
        }
        assert!(!center_test_with(&t, &p("0,0,0,1"), pair)
            .unwrap()
            .vanishes());
    }

    #[test]
    fn t9_center_through_t3() {
        let f = chebyshev(9).unwrap();
        let t3 = chebyshev(3).unwrap();
        let tr = FiberTransport::new(&f, &opts()).unwrap();
        let x = &tr.fiber;
        let pair = all_simple_cycles(9)
            .into_iter()
            .find(|c| cofiber(&t3, x[c.i], x[c.j]))
            .unwrap();
        match center_test_with(&tr, &t3, pair).unwrap() {
            CenterCertificate::Vanishes { h, eta, .. } => {
                assert_eq!(h.degree(), 3);
                assert_eq!(eta.compose(&h), t3);
            }
            other => panic!("expected a center, got {other:?}"),
        }
    }

    #[test]
    fn omega_through_f_vanishes() {
        let f = p("0,1,0,0,1");
        let omega = f.pow(2);
        let tr = FiberTransport::new(&f, &opts()).unwrap();
        let cert = center_test_with(&tr, &omega, SimpleCycle { i: 0, j: 1 }).unwrap();
        assert!(matches!(cert, CenterCertificate::Vanishes { ref h, .. } if h.degree() == 4));
    }

    #[test]
    fn span_generic_quartic() {
        let f = p("0,1,0,0,1");
        for c in all_simple_cycles(4) {
            match span_test(&f, c, &opts()).unwrap() {
                SpanResult::FullSpan { rank, elements } => {
                    assert_eq!(rank, 3);
                    assert_eq!(elements.len(), 3);
                }
                other => panic!("expected full span, got {other:?}"),
            }
        }
    }

    #[test]
    fn span_symmetric_quartic() {
        let f = p("0,0,0,0,1");
        let m = tracker::compute_monodromy(&f, &opts()).unwrap();
        let pair = antipodal_pairs(&m.fiber, 1e-9)[0];
        match span_test(&f, pair, &opts()).unwrap() {
            SpanResult::Decomposes {
                decomposition,
                components,
            } => {
                assert_eq!(decomposition.h, p("0,0,1"));
                assert_eq!(components.block_size(), 2);
            }
            other => panic!("expected decomposition, got {other:?}"),
        }
    }
}
