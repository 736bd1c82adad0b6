//! Homology of the level curves `y² + f(x) = t`, its monodromy, the reduction
//! of polynomial 1-forms, and the tangential-center test at a Morse point.
//!
//! Cycles are written in the basis `L_1..L_n` attached to the roots of
//! `f(x) = t` in rank order. Crossing ranks `i, i+1` acts on the basis by
//! `L_i ↦ 2L_i − L_{i+1}`, `L_{i+1} ↦ L_i`; a crossing of the opposite sign
//! acts by the inverse.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::chebwitness::period_integral;
use crate::decompose::{poly_text, right_components, Decomposition};
use crate::error::{Error, Result};
use crate::linalg::{self, RowSpace};
use crate::permlab::Permutation;
use crate::polycore::{critical_data, rat, CPoly, RatPoly, Rational};
use crate::tracker::{self, rank_cmp, LoopPath, MonodromyOptions, Swap, TrackOptions};
use crate::zerodim::LoopWord;

fn parity(c: &Rational) -> u8 {
    let r: BigInt = c.to_integer() % BigInt::from(2);
    r.abs().to_u8().unwrap_or(0)
}

pub type Matrix = Vec<Vec<Rational>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ring {
    Z,
    Z2,
    Q,
}

/// Coordinates over `L_1..L_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomologyVector {
    pub coords: Vec<Rational>,
}

impl HomologyVector {
    pub fn new(coords: Vec<Rational>) -> Self {
        HomologyVector { coords }
    }

    pub fn basis(n: usize, i: usize) -> Self {
        let mut coords = vec![Rational::zero(); n];
        coords[i] = Rational::one();
        HomologyVector { coords }
    }

    /// `L_i − L_j` (0-based).
    pub fn difference(n: usize, i: usize, j: usize) -> Self {
        let mut v = Self::basis(n, i);
        v.coords[j] -= Rational::one();
        v
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Whether the vector lies in the span of the differences `L_i − L_{i+1}`.
    pub fn is_closed(&self) -> bool {
        self.coords
            .iter()
            .fold(Rational::zero(), |a, c| a + c)
            .is_zero()
    }

    pub fn is_integral(&self) -> bool {
        self.coords.iter().all(|c| c.is_integer())
    }

    pub fn transform(&self, m: &Matrix) -> Self {
        HomologyVector::new(linalg::mat_vec(m, &self.coords))
    }

    pub fn mod2(&self) -> Option<Vec<u8>> {
        self.coords
            .iter()
            .map(|c| c.is_integer().then(|| parity(c)))
            .collect()
    }
}

impl Serialize for HomologyVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords
            .iter()
            .map(rational_json)
            .collect::<Vec<_>>()
            .serialize(s)
    }
}

/// Integers as JSON numbers when they fit, everything else as strings.
pub fn rational_json(r: &Rational) -> serde_json::Value {
    match (r.is_integer(), r.to_integer().to_i64()) {
        (true, Some(v)) => serde_json::Value::from(v),
        _ => serde_json::Value::from(r.to_string()),
    }
}

pub fn matrix_json(m: &Matrix) -> serde_json::Value {
    serde_json::Value::Array(
        m.iter()
            .map(|row| serde_json::Value::Array(row.iter().map(rational_json).collect()))
            .collect(),
    )
}

/// One crossing of ranks `i, i+1` (1-based) applied to coordinates.
pub fn swap_apply(v: &HomologyVector, i: usize, ring: Ring) -> Result<HomologyVector> {
    let n = v.dim();
    if i == 0 || i >= n {
        return Err(Error::InvalidInput(format!(
            "swap index {i} out of range for {n} coordinates"
        )));
    }
    let (a, b) = (v.coords[i - 1].clone(), v.coords[i].clone());
    let mut out = v.clone();
    match ring {
        Ring::Z2 => {
            let m = v.mod2().ok_or_else(|| {
                Error::InvalidInput("mod-2 reduction needs integer coordinates".into())
            })?;
            out.coords = m.iter().map(|&c| rat(c as i64)).collect();
            out.coords.swap(i - 1, i);
        }
        Ring::Z if !v.is_integral() => {
            return Err(Error::InvalidInput(
                "integer ring needs integer coordinates".into(),
            ));
        }
        Ring::Z | Ring::Q => {
            out.coords[i - 1] = &a * rat(2) + &b;
            out.coords[i] = -a;
        }
    }
    Ok(out)
}

/// The `n × n` matrix of one crossing; `sign = −1` gives the inverse.
pub fn swap_matrix(n: usize, i: usize, sign: i8) -> Matrix {
    let mut m = linalg::identity(n);
    let (r, s) = (i - 1, i);
    let block: [[i64; 2]; 2] = if sign >= 0 {
        [[2, 1], [-1, 0]]
    } else {
        [[0, -1], [1, 2]]
    };
    for (x, row) in [r, s].iter().zip(block) {
        for (y, v) in [r, s].iter().zip(row) {
            m[*x][*y] = rat(v);
        }
    }
    m
}

/// Product of the crossing matrices of `word`, first crossing applied first.
pub fn word_matrix(n: usize, word: &[Swap]) -> Matrix {
    word.iter().fold(linalg::identity(n), |acc, s| {
        linalg::mat_mul(&swap_matrix(n, s.index, s.sign), &acc)
    })
}

/// `P[π(k)][k] = 1`: the coordinate action of a relabelling.
pub fn permutation_matrix(p: &Permutation) -> Vec<Vec<u8>> {
    let n = p.degree();
    let mut m = vec![vec![0u8; n]; n];
    for k in 0..n {
        m[p.apply(k)][k] = 1;
    }
    m
}

pub fn matrix_mod2(m: &Matrix) -> Option<Vec<Vec<u8>>> {
    m.iter()
        .map(|row| {
            row.iter()
                .map(|c| c.is_integer().then(|| parity(c)))
                .collect()
        })
        .collect()
}

/// Homology action of a tracked loop with its consistency checks.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopAction {
    pub matrix: Matrix,
    pub permutation: Permutation,
    pub determinant: Rational,
    pub word: Vec<Swap>,
}

impl Serialize for LoopAction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("matrix", &matrix_json(&self.matrix))?;
        m.serialize_entry("permutation", &self.permutation)?;
        m.serialize_entry("determinant", &rational_json(&self.determinant))?;
        m.end()
    }
}

impl LoopAction {
    pub fn from_track(n: usize, permutation: Permutation, word: Vec<Swap>) -> Result<Self> {
        let matrix = word_matrix(n, &word);
        let determinant = linalg::determinant(&matrix);
        if determinant.abs() != Rational::one() {
            return Err(Error::Inconsistency(format!(
                "loop matrix has determinant {determinant}"
            )));
        }
        if matrix_mod2(&matrix) != Some(permutation_matrix(&permutation)) {
            return Err(Error::Inconsistency(
                "loop matrix mod 2 differs from the tracked permutation".into(),
            ));
        }
        Ok(LoopAction {
            matrix,
            permutation,
            determinant,
            word,
        })
    }
}

/// Tracks `path` for `f` and returns its action on the homology of `y² + f = t`.
pub fn loop_homology_action(
    f: &RatPoly,
    path: &LoopPath,
    opts: &TrackOptions,
) -> Result<LoopAction> {
    let r = tracker::track_loop(&CPoly::from(f), path, opts)?;
    LoopAction::from_track(f.degree(), r.permutation, r.swap_word)
}

/// A vanishing cycle, expressed in the basepoint frame.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VanishingCycle {
    /// Index into the loop-basis order of critical values.
    pub value_index: usize,
    #[serde(serialize_with = "crate::tracker::complex_pair::serialize")]
    pub critical_value: Complex64,
    #[serde(serialize_with = "crate::tracker::complex_pair::serialize")]
    pub critical_point: Complex64,
    /// Basepoint labels of the two colliding roots.
    pub labels: (usize, usize),
    /// Upper rank (0-based) of the colliding pair just before collision.
    pub local_rank: usize,
    pub vector: HomologyVector,
}

/// The cycle vanishing at the `point`-th Morse point over the `value_index`-th
/// critical value (loop-basis order), pulled back to the basepoint.
pub fn vanishing_cycle(
    f: &RatPoly,
    value_index: usize,
    point: usize,
    opts: &MonodromyOptions,
) -> Result<VanishingCycle> {
    let cd = critical_data(f, opts.cluster_tol)?;
    let basepoint = tracker::choose_basepoint(&cd)?;
    let basis = tracker::loop_basis_from(&cd, basepoint)?;
    let t_c = *basis.critical_values.get(value_index).ok_or_else(|| {
        Error::InvalidInput(format!("no critical value with index {}", value_index + 1))
    })?;
    let cv = cd
        .critical_values
        .iter()
        .find(|v| v.value == t_c)
        .expect("loop basis lists critical values");
    let &pidx = cv
        .points
        .get(point)
        .ok_or_else(|| Error::InvalidInput(format!("critical value has no point {}", point + 1)))?;
    let cp = &cd.critical_points[pidx];
    if cp.multiplicity != 1 {
        return Err(Error::NotMorse(format!(
            "critical point {} has multiplicity {}",
            cp.location, cp.multiplicity
        )));
    }
    let x_c = cp.location;
    let n = f.degree();
    let cf = CPoly::from(f);
    let rho = basis.radii[value_index];
    let dist = (t_c - basepoint).norm();
    let mut vertices = vec![basepoint];
    for m in 0..40 {
        let s = 1.0 - rho / dist * 0.5_f64.powi(m);
        vertices.push(basepoint + (t_c - basepoint) * s);
        let (roots, word) = tracker::track_path(&cf, &vertices, &opts.track)?;
        let mut by_distance: Vec<usize> = (0..n).collect();
        by_distance.sort_by(|&a, &b| (roots[a] - x_c).norm().total_cmp(&(roots[b] - x_c).norm()));
        let (a, b) = (by_distance[0], by_distance[1]);
        let pair_gap = (roots[a] - roots[b]).norm();
        let others = by_distance[2..]
            .iter()
            .map(|&k| (roots[k] - x_c).norm())
            .fold(f64::INFINITY, f64::min);
        if pair_gap >= 0.1 * others {
            continue;
        }
        let mut ranked: Vec<usize> = (0..n).collect();
        ranked.sort_by(|&p, &q| rank_cmp(roots[p], roots[q]));
        let rank_a = ranked.iter().position(|&l| l == a).unwrap();
        let rank_b = ranked.iter().position(|&l| l == b).unwrap();
        if rank_a.abs_diff(rank_b) != 1 {
            continue;
        }
        let (upper, lower) = if rank_a < rank_b { (a, b) } else { (b, a) };
        let k = rank_a.min(rank_b);
        let local = HomologyVector::difference(n, k, k + 1);
        let path = word_matrix(n, &word);
        let back = linalg::inverse(&path)
            .ok_or_else(|| Error::Inconsistency("path matrix is singular".into()))?;
        let vector = local.transform(&back);
        return Ok(VanishingCycle {
            value_index,
            critical_value: t_c,
            critical_point: x_c,
            labels: (upper, lower),
            local_rank: k,
            vector,
        });
    }
    Err(Error::Inconsistency(
        "colliding roots never became adjacent in rank order".into(),
    ))
}

/// Span of the orbit of a cycle under a set of invertible matrices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitSpan {
    pub dimension: usize,
    pub basis: Vec<HomologyVector>,
    /// `basis[k]` is the image of the seed under `words[k]` (see [`LoopWord`]).
    pub words: Vec<LoopWord>,
}

/// Breadth-first closure of `{δ}` under `generators` and their inverses,
/// keeping an exact row-reduced span.
pub fn orbit_span(generators: &[Matrix], delta: &HomologyVector) -> Result<OrbitSpan> {
    let n = delta.dim();
    let mut moves: Vec<(i32, Matrix)> = Vec::new();
    for (k, g) in generators.iter().enumerate() {
        let inv =
            linalg::inverse(g).ok_or_else(|| Error::Inconsistency("singular generator".into()))?;
        moves.push((k as i32 + 1, g.clone()));
        moves.push((-(k as i32) - 1, inv));
    }
    let mut span = RowSpace::new(n);
    let mut basis = Vec::new();
    let mut words = Vec::new();
    let mut queue = VecDeque::new();
    if span.insert(&delta.coords) {
        basis.push(delta.clone());
        words.push(Vec::new());
        queue.push_back(0);
    }
    while let Some(idx) = queue.pop_front() {
        for (w, m) in &moves {
            let img = basis[idx].transform(m);
            if span.insert(&img.coords) {
                let mut word: LoopWord = words[idx].clone();
                word.push(*w);
                basis.push(img);
                words.push(word);
                queue.push_back(basis.len() - 1);
            }
        }
    }
    Ok(OrbitSpan {
        dimension: span.rank(),
        basis,
        words,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum HyperSpanVerdict {
    Full,
    Decomposes(Decomposition),
}

/// Orbit span of a Morse vanishing cycle, with the decomposability cross-check.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperSpan {
    pub cycle: VanishingCycle,
    pub span: OrbitSpan,
    pub verdict: HyperSpanVerdict,
    pub actions: Vec<LoopAction>,
}

impl Serialize for HyperSpan {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("vanishing_cycle", &self.cycle)?;
        m.serialize_entry("dimension", &self.span.dimension)?;
        m.serialize_entry("full_dimension", &(self.cycle.vector.dim() - 1))?;
        m.serialize_entry("basis", &self.span.basis)?;
        m.serialize_entry("words", &self.span.words)?;
        match &self.verdict {
            HyperSpanVerdict::Full => m.serialize_entry("verdict", "Full")?,
            HyperSpanVerdict::Decomposes(d) => {
                m.serialize_entry("verdict", "Decomposes")?;
                m.serialize_entry("decomposition", d)?;
            }
        }
        m.serialize_entry("loop_actions", &self.actions)?;
        m.end()
    }
}

/// Computes the span of the monodromy orbit of the cycle vanishing at the
/// given Morse point. A deficient span must come with a right component `h`
/// identifying the colliding roots.
pub fn hyper_span(
    f: &RatPoly,
    value_index: usize,
    point: usize,
    opts: &MonodromyOptions,
) -> Result<HyperSpan> {
    let m = tracker::compute_monodromy(f, opts)?;
    let n = m.degree();
    let actions = m
        .small
        .iter()
        .map(|r| LoopAction::from_track(n, r.permutation.clone(), r.swap_word.clone()))
        .collect::<Result<Vec<_>>>()?;
    let cycle = vanishing_cycle(f, value_index, point, opts)?;
    let gens: Vec<Matrix> = actions.iter().map(|a| a.matrix.clone()).collect();
    let span = orbit_span(&gens, &cycle.vector)?;
    let verdict = if span.dimension == n - 1 {
        HyperSpanVerdict::Full
    } else {
        let (a, b) = cycle.labels;
        let (xa, xb) = (m.fiber[a], m.fiber[b]);
        let dec = right_components(f)
            .into_iter()
            .find(|d| {
                let (ha, hb) = (d.h.eval_c(xa), d.h.eval_c(xb));
                (ha - hb).norm() <= 1e-8 * (1.0 + ha.norm())
            })
            .ok_or_else(|| {
                Error::Inconsistency(format!(
                    "orbit span has dimension {} < {} but no right component joins the vanishing pair",
                    span.dimension,
                    n - 1
                ))
            })?;
        HyperSpanVerdict::Decomposes(dec)
    };
    Ok(HyperSpan {
        cycle,
        span,
        verdict,
        actions,
    })
}

/// `Σ_k rows[k](x) · y^k`.
#[derive(Clone, PartialEq, Eq)]
pub struct BiPoly {
    rows: Vec<RatPoly>,
}

impl BiPoly {
    pub fn new(mut rows: Vec<RatPoly>) -> Self {
        while rows.last().is_some_and(|r| r.is_zero()) {
            rows.pop();
        }
        BiPoly { rows }
    }

    pub fn zero() -> Self {
        BiPoly { rows: Vec::new() }
    }

    /// `p(x) · y^k`.
    pub fn term(p: RatPoly, k: usize) -> Self {
        let mut rows = vec![RatPoly::zero(); k];
        rows.push(p);
        BiPoly::new(rows)
    }

    pub fn from_x(p: RatPoly) -> Self {
        BiPoly::term(p, 0)
    }

    pub fn rows(&self) -> &[RatPoly] {
        &self.rows
    }

    pub fn row(&self, k: usize) -> RatPoly {
        self.rows.get(k).cloned().unwrap_or_else(RatPoly::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn y_degree(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    pub fn x_degree(&self) -> usize {
        self.rows.iter().map(|r| r.degree()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &BiPoly) -> BiPoly {
        let len = self.rows.len().max(other.rows.len());
        BiPoly::new((0..len).map(|k| &self.row(k) + &other.row(k)).collect())
    }

    pub fn sub(&self, other: &BiPoly) -> BiPoly {
        self.add(&other.scale(&rat(-1)))
    }

    pub fn scale(&self, c: &Rational) -> BiPoly {
        BiPoly::new(self.rows.iter().map(|r| r.scale(c)).collect())
    }

    pub fn mul(&self, other: &BiPoly) -> BiPoly {
        if self.is_zero() || other.is_zero() {
            return BiPoly::zero();
        }
        let mut rows = vec![RatPoly::zero(); self.rows.len() + other.rows.len() - 1];
        for (i, a) in self.rows.iter().enumerate() {
            for (j, b) in other.rows.iter().enumerate() {
                rows[i + j] = &rows[i + j] + &(a * b);
            }
        }
        BiPoly::new(rows)
    }

    pub fn d_dx(&self) -> BiPoly {
        BiPoly::new(self.rows.iter().map(|r| r.derivative()).collect())
    }

    pub fn d_dy(&self) -> BiPoly {
        BiPoly::new(
            self.rows
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, r)| r.scale(&rat(k as i64)))
                .collect(),
        )
    }

    pub fn eval_c(&self, x: Complex64, y: Complex64) -> Complex64 {
        self.rows
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, r| acc * y + r.eval_c(x))
    }
}

impl fmt::Display for BiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rows.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.rows.iter().map(|r| r.to_string()).collect();
        write!(f, "{}", parts.join(";"))
    }
}

impl fmt::Debug for BiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BiPoly({self})")
    }
}

impl Serialize for BiPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Rows separated by `;`, row `k` holding the `x`-coefficients of `y^k` in the
/// comma format of [`RatPoly`]. `"0;1"` is `y`; `"0,1;;2"` is `x + 2y²`.
impl FromStr for BiPoly {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut offset = 0;
        for part in s.split(';') {
            let row = if part.trim().is_empty() {
                RatPoly::zero()
            } else {
                part.parse::<RatPoly>().map_err(|e| match e {
                    Error::Parse { position, message } => Error::Parse {
                        position: position + offset,
                        message,
                    },
                    other => other,
                })?
            };
            rows.push(row);
            offset += part.len() + 1;
        }
        if rows.iter().all(|r| r.is_zero()) && s.trim().is_empty() {
            return Err(Error::Parse {
                position: 0,
                message: "empty bivariate polynomial".into(),
            });
        }
        Ok(BiPoly::new(rows))
    }
}

/// `P dx + Q dy`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OneForm {
    pub p: BiPoly,
    pub q: BiPoly,
}

impl OneForm {
    pub fn new(p: BiPoly, q: BiPoly) -> Self {
        OneForm { p, q }
    }

    /// `y·g(x) dx`.
    pub fn y_times(g: RatPoly) -> Self {
        OneForm::new(BiPoly::term(g, 1), BiPoly::zero())
    }

    /// `d(B)`.
    pub fn exact(b: &BiPoly) -> Self {
        OneForm::new(b.d_dx(), b.d_dy())
    }

    /// `A · dF` with `F = y² + f`.
    pub fn times_df(a: &BiPoly, f: &RatPoly) -> Self {
        OneForm::new(
            a.mul(&BiPoly::from_x(f.derivative())),
            a.mul(&BiPoly::term(rat(2).into_poly(), 1)),
        )
    }

    pub fn add(&self, other: &OneForm) -> OneForm {
        OneForm::new(self.p.add(&other.p), self.q.add(&other.q))
    }

    pub fn sub(&self, other: &OneForm) -> OneForm {
        OneForm::new(self.p.sub(&other.p), self.q.sub(&other.q))
    }

    pub fn is_zero(&self) -> bool {
        self.p.is_zero() && self.q.is_zero()
    }

    /// Substitutes `x ↦ x + c`.
    pub fn shift(&self, c: &Rational) -> OneForm {
        let sh = |b: &BiPoly| BiPoly::new(b.rows().iter().map(|r| r.shift(c)).collect());
        OneForm::new(sh(&self.p), sh(&self.q))
    }
}

trait IntoPoly {
    fn into_poly(self) -> RatPoly;
}

impl IntoPoly for Rational {
    fn into_poly(self) -> RatPoly {
        RatPoly::constant(self)
    }
}

/// `ω = A dF + dB + y·g(x) dx` on `F = y² + f`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReducedForm {
    pub a: BiPoly,
    pub b: BiPoly,
    #[serde(serialize_with = "poly_text")]
    pub g: RatPoly,
}

impl ReducedForm {
    /// The exact identity `ω − A dF − dB − y g dx = 0`.
    pub fn verify(&self, omega: &OneForm, f: &RatPoly) -> bool {
        omega
            .sub(&OneForm::times_df(&self.a, f))
            .sub(&OneForm::exact(&self.b))
            .sub(&OneForm::y_times(self.g.clone()))
            .is_zero()
    }
}

/// Brings `ω` to the form `A dF + dB + y·g(x) dx`.
///
/// `Q dy` terms are absorbed into `dB`; then each `a(x) y^{j+2} dx` is traded
/// for `((j+2)/2) A f′ y^j dx` modulo `d(A y^{j+2})` and `A y^j dF`, where
/// `A′ = a`, from the top power of `y` down.
pub fn reduce_one_form(omega: &OneForm, f: &RatPoly) -> ReducedForm {
    let df = f.derivative();
    let mut b = BiPoly::zero();
    let mut a_form = BiPoly::zero();
    let mut p: Vec<RatPoly> = (0..=omega.p.y_degree().max(omega.q.y_degree() + 1))
        .map(|k| omega.p.row(k))
        .collect();
    for (k, q) in omega.q.rows().iter().enumerate() {
        if q.is_zero() {
            continue;
        }
        let c = Rational::one() / rat(k as i64 + 1);
        b = b.add(&BiPoly::term(q.scale(&c), k + 1));
        p[k + 1] = &p[k + 1] - &q.derivative().scale(&c);
    }
    for m in (2..p.len()).rev() {
        let a = std::mem::replace(&mut p[m], RatPoly::zero());
        if a.is_zero() {
            continue;
        }
        let j = m - 2;
        let big_a = a.integral();
        let c = rat(m as i64) / rat(2);
        p[j] = &p[j] + &(&big_a * &df).scale(&c);
        b = b.add(&BiPoly::term(big_a.clone(), m));
        a_form = a_form.sub(&BiPoly::term(big_a.scale(&c), j));
    }
    b = b.add(&BiPoly::from_x(p[0].integral()));
    let g = p.get(1).cloned().unwrap_or_else(RatPoly::zero);
    ReducedForm { a: a_form, b, g }
}

/// Truncated power series `Σ_{k<len} c_k x^k`.
fn series_mul(a: &[Rational], b: &[Rational], len: usize) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// `p ∘ s` truncated to `len` terms; `s` has zero constant term.
fn series_compose(p: &RatPoly, s: &[Rational], len: usize) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); len];
    for c in p.coeffs().iter().rev() {
        out = series_mul(&out, s, len);
        out[0] += c;
    }
    out
}

/// The involution `σ` with `f∘σ = f`, `σ(0) = 0`, `σ′(0) = −1`, as a series of
/// `order + 1` terms. Needs `f(0) = f′(0) = 0 ≠ f″(0)`.
pub fn local_involution(f: &RatPoly, order: usize) -> Result<Vec<Rational>> {
    if !f.coeff(0).is_zero() || !f.coeff(1).is_zero() || f.coeff(2).is_zero() {
        return Err(Error::NotMorse(
            "involution needs f = a·x² + O(x³) with a ≠ 0".into(),
        ));
    }
    let len = order + 1;
    let two_a2 = f.coeff(2) * rat(2);
    let mut s = vec![Rational::zero(); len];
    if len > 1 {
        s[1] = rat(-1);
    }
    for k in 2..len {
        // coefficient k+1 of f∘σ is linear in s_k with slope −2a₂
        let c = series_compose(f, &s, k + 2);
        s[k] = (&c[k + 1] - f.coeff(k + 1)) / &two_a2;
    }
    Ok(s)
}

/// Whether `h∘σ = h` up to the series order.
pub fn invariant_under(h: &RatPoly, sigma: &[Rational]) -> bool {
    let len = sigma.len();
    let composed = series_compose(h, sigma, len);
    (0..len).all(|k| composed[k] == h.coeff(k))
}

#[derive(Clone, Debug, PartialEq)]
pub enum HyperCenter {
    /// `ω = A dF + dB + y g dx` with `g = ½ r′(f) f′` (`r` absent when `g = 0`).
    RelativelyExact {
        reduced: ReducedForm,
        r: Option<RatPoly>,
    },
    /// `f = g∘h`, `2∫ω_y = r∘h`, `h∘σ = h` at the Morse point.
    Decomposes { h: RatPoly, g: RatPoly, r: RatPoly },
    NoTangentialCenter {
        samples: Vec<(Complex64, Complex64)>,
    },
}

/// Outcome of [`hyper_center_test`], in coordinates centered at the Morse point.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperCenterReport {
    pub morse_point: Rational,
    /// `f(x + c) − f(c)`.
    pub centered: RatPoly,
    pub reduced: ReducedForm,
    pub verdict: HyperCenter,
}

impl HyperCenterReport {
    pub fn tag(&self) -> &'static str {
        match self.verdict {
            HyperCenter::RelativelyExact { .. } => "RelativelyExact",
            HyperCenter::Decomposes { .. } => "Decomposes",
            HyperCenter::NoTangentialCenter { .. } => "NoTangentialCenter",
        }
    }

    pub fn is_center(&self) -> bool {
        !matches!(self.verdict, HyperCenter::NoTangentialCenter { .. })
    }
}

impl Serialize for HyperCenterReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("verdict", self.tag())?;
        m.serialize_entry("morse_point", &self.morse_point.to_string())?;
        m.serialize_entry("centered_f", &self.centered.to_string())?;
        m.serialize_entry("reduced", &self.reduced)?;
        match &self.verdict {
            HyperCenter::RelativelyExact { r, .. } => {
                m.serialize_entry("r", &r.as_ref().map(|r| r.to_string()))?;
            }
            HyperCenter::Decomposes { h, g, r } => {
                m.serialize_entry("h", &h.to_string())?;
                m.serialize_entry("g", &g.to_string())?;
                m.serialize_entry("r", &r.to_string())?;
            }
            HyperCenter::NoTangentialCenter { samples } => {
                let rows: Vec<[[f64; 2]; 2]> = samples
                    .iter()
                    .map(|(t, v)| [[t.re, t.im], [v.re, v.im]])
                    .collect();
                m.serialize_entry("periods", &rows)?;
            }
        }
        m.end()
    }
}

/// Decides whether the Morse point `c` of `f` is a tangential center for the
/// perturbation `ω` of `y² + f(x)`.
pub fn hyper_center_test(f: &RatPoly, omega: &OneForm, c: &Rational) -> Result<HyperCenterReport> {
    if f.degree() < 2 {
        return Err(Error::InvalidInput(
            "hyper_center_test needs degree ≥ 2".into(),
        ));
    }
    let df = f.derivative();
    if !df.eval(c).is_zero() {
        return Err(Error::NotMorse(format!("{c} is not a critical point")));
    }
    if df.derivative().eval(c).is_zero() {
        return Err(Error::NotMorse(format!("critical point {c} is degenerate")));
    }
    let fc = f.eval(c);
    let centered = &f.shift(c) - &RatPoly::constant(fc);
    let om = omega.shift(c);
    let reduced = reduce_one_form(&om, &centered);
    debug_assert!(reduced.verify(&om, &centered));
    let report = |verdict| HyperCenterReport {
        morse_point: c.clone(),
        centered: centered.clone(),
        reduced: reduced.clone(),
        verdict,
    };
    if reduced.g.is_zero() {
        return Ok(report(HyperCenter::RelativelyExact {
            reduced: reduced.clone(),
            r: None,
        }));
    }
    let big_k = reduced.g.integral().scale(&rat(2));
    let order = big_k.degree() * centered.degree() + 1;
    let sigma = local_involution(&centered, order)?;
    let mut candidates = right_components(&centered);
    candidates.push(Decomposition {
        g: RatPoly::linear(centered.leading(), Rational::zero()),
        h: centered.monic(),
    });
    for dec in candidates {
        if !invariant_under(&dec.h, &sigma) {
            continue;
        }
        let Some(r) = big_k.expand_in(&dec.h) else {
            continue;
        };
        if dec.h.degree() == centered.degree() {
            // K = r∘f: y·g dx = ½ y r′(f) df is relatively exact on the curve
            let r_of_f = r.compose(&RatPoly::linear(
                Rational::one() / centered.leading(),
                Rational::zero(),
            ));
            return Ok(report(HyperCenter::RelativelyExact {
                reduced: reduced.clone(),
                r: Some(r_of_f),
            }));
        }
        return Ok(report(HyperCenter::Decomposes {
            h: dec.h,
            g: dec.g,
            r,
        }));
    }
    let samples = morse_periods(&centered, &OneForm::y_times(reduced.g.clone()))?;
    let scale = samples.iter().map(|(t, _)| t.norm()).fold(0.0, f64::max);
    if samples
        .iter()
        .all(|(_, v)| v.norm() <= 1e-12 * (1.0 + scale))
    {
        return Err(Error::Inconsistency(
            "periods vanish numerically but no center certificate exists".into(),
        ));
    }
    Ok(report(HyperCenter::NoTangentialCenter { samples }))
}

/// Periods of `ω` over the cycle vanishing at the Morse point `0` of `f`
/// (`f(0) = f′(0) = 0`), at three levels `t = f(r)` for small real `r`.
pub fn morse_periods(f: &RatPoly, omega: &OneForm) -> Result<Vec<(Complex64, Complex64)>> {
    let cd = critical_data(f, crate::polycore::DEFAULT_CLUSTER_TOL)?;
    let d = cd
        .critical_points
        .iter()
        .map(|p| p.location.norm())
        .filter(|&r| r > 1e-9)
        .fold(1.0_f64, f64::min);
    let cf = CPoly::from(f);
    let mut out = Vec::new();
    for frac in [0.35, 0.25, 0.15] {
        let r = Complex64::new(frac * d, 0.0);
        let t = cf.eval(r);
        let mut roots = cf.minus_constant(t).roots()?;
        roots.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        let mut pair = (roots[0], roots[1]);
        if pair.0.re > pair.1.re {
            pair = (pair.1, pair.0);
        }
        out.push((t, period_integral(f, t, pair, omega)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::chebyshev;

    fn p(s: &str) -> RatPoly {
        s.parse().unwrap()
    }

    fn v(xs: &[i64]) -> HomologyVector {
        HomologyVector::new(xs.iter().map(|&x| rat(x)).collect())
    }

    #[test]
    fn swap_rule() {
        assert_eq!(swap_apply(&v(&[1, 0]), 1, Ring::Z).unwrap(), v(&[2, -1]));
        assert_eq!(swap_apply(&v(&[0, 1]), 1, Ring::Z).unwrap(), v(&[1, 0]));
        assert_eq!(
            swap_apply(&v(&[3, 2, 5]), 2, Ring::Z2).unwrap(),
            v(&[1, 1, 0])
        );
        assert!(swap_apply(&v(&[1, 0]), 2, Ring::Q).is_err());
    }

    #[test]
    fn swap_matrix_properties() {
        for n in 2..6 {
            for i in 1..n {
                let s = swap_matrix(n, i, 1);
                let inv = swap_matrix(n, i, -1);
                assert_eq!(linalg::mat_mul(&s, &inv), linalg::identity(n));
                assert_eq!(linalg::determinant(&s), rat(1));
                let sq = matrix_mod2(&linalg::mat_mul(&s, &s)).unwrap();
                assert_eq!(sq, matrix_mod2(&linalg::identity(n)).unwrap());
                // S − I has rank one
                let diff: Matrix = s
                    .iter()
                    .zip(linalg::identity(n))
                    .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                    .collect();
                assert_eq!(linalg::rank(&diff), 1);
                let e = HomologyVector::basis(n, i - 1);
                assert_eq!(e.transform(&s), swap_apply(&e, i, Ring::Z).unwrap());
            }
        }
    }

    #[test]
    fn square_loop_action() {
        let f = p("0,0,1");
        let basis = tracker::loop_basis(&f, Complex64::new(1.0, 0.5)).unwrap();
        let act =
            loop_homology_action(&f, &basis.small_loops[0], &TrackOptions::default()).unwrap();
        assert_eq!(act.permutation.cycle_type(), vec![2]);
        assert_eq!(act.determinant.abs(), rat(1));
        let trivial = LoopPath::new(
            Complex64::new(1.0, 0.5),
            vec![Complex64::new(1.2, 0.5), Complex64::new(1.2, 0.7)],
        );
        let id = loop_homology_action(&f, &trivial, &TrackOptions::default()).unwrap();
        assert_eq!(id.matrix, linalg::identity(2));
    }

    #[test]
    fn t3_big_loop_is_three_cycle_mod_2() {
        let f = chebyshev(3).unwrap();
        let m = tracker::compute_monodromy(&f, &MonodromyOptions::default()).unwrap();
        let act =
            LoopAction::from_track(3, m.big.permutation.clone(), m.big.swap_word.clone()).unwrap();
        assert_eq!(act.permutation.cycle_type(), vec![3]);
    }

    #[test]
    fn vanishing_cycle_of_square() {
        let c = vanishing_cycle(&p("0,0,1"), 0, 0, &MonodromyOptions::default()).unwrap();
        assert!(c.vector.is_closed());
        assert_eq!(c.vector.mod2().unwrap(), vec![1, 1]);
    }

    #[test]
    fn spans() {
        let opts = MonodromyOptions::default();
        let generic = p("0,1,0,0,1");
        for k in 0..3 {
            let s = hyper_span(&generic, k, 0, &opts).unwrap();
            assert_eq!(s.span.dimension, 3);
            assert_eq!(s.verdict, HyperSpanVerdict::Full);
        }
        let sym = p("1,0,-2,0,1");
        let cd = critical_data(&sym, 1e-8).unwrap();
        let b = tracker::choose_basepoint(&cd).unwrap();
        let basis = tracker::loop_basis_from(&cd, b).unwrap();
        let idx = basis
            .critical_values
            .iter()
            .position(|v| (v - 1.0).norm() < 1e-9)
            .unwrap();
        let s = hyper_span(&sym, idx, 0, &opts).unwrap();
        assert!(s.span.dimension < 3);
        match s.verdict {
            HyperSpanVerdict::Decomposes(d) => assert_eq!(d.h, p("0,0,1")),
            other => panic!("expected a decomposition, got {other:?}"),
        }
    }

    #[test]
    fn bipoly_parse() {
        let b: BiPoly = "0,1;;2".parse().unwrap();
        assert_eq!(b.row(0), p("0,1"));
        assert_eq!(b.row(2), p("2"));
        assert_eq!(b.to_string(), "0,1;0;2");
        assert!("".parse::<BiPoly>().is_err());
        match "1;2,x".parse::<BiPoly>() {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reduction_examples() {
        let f = p("0,1,0,3,1");
        let y_dx = OneForm::y_times(RatPoly::one());
        let r = reduce_one_form(&y_dx, &f);
        assert!(r.a.is_zero() && r.b.is_zero());
        assert_eq!(r.g, RatPoly::one());

        let x_df = OneForm::times_df(&BiPoly::from_x(p("0,1")), &f);
        let r = reduce_one_form(&x_df, &f);
        assert_eq!(r.a, BiPoly::from_x(p("0,1")));
        assert!(r.b.is_zero() && r.g.is_zero());

        let y3 = OneForm::new(BiPoly::term(RatPoly::one(), 3), BiPoly::zero());
        let r = reduce_one_form(&y3, &f);
        assert_eq!(
            r.g,
            (&p("0,1") * &f.derivative()).scale(&crate::polycore::ratio(3, 2))
        );
        assert_eq!(r.a, BiPoly::term(p("0,-3/2"), 1));
        assert_eq!(r.b, BiPoly::term(p("0,1"), 3));
        assert!(r.verify(&y3, &f));
    }

    #[test]
    fn involution_of_cubic() {
        let f = p("0,0,1,1");
        let s = local_involution(&f, 8).unwrap();
        let fs = series_compose(&f, &s, 9);
        for k in 0..9 {
            assert_eq!(fs[k], f.coeff(k), "coefficient {k}");
        }
        assert_eq!(s[2], rat(-1));
        assert!(local_involution(&p("0,0,0,1"), 4).is_err());
    }

    #[test]
    fn hyper_centers() {
        // x² with ω = x dF + d(xy)
        let f = p("0,0,1");
        let om = OneForm::times_df(&BiPoly::from_x(p("0,1")), &f)
            .add(&OneForm::exact(&BiPoly::term(p("0,1"), 1)));
        let rep = hyper_center_test(&f, &om, &rat(0)).unwrap();
        assert_eq!(rep.tag(), "RelativelyExact");

        // f = h + h² with h = x², ω = y·r′(h)h′ dx with r = z²
        let f = p("0,0,1,0,1");
        let h = p("0,0,1");
        let om = OneForm::y_times((&h.scale(&rat(2)) * &h.derivative()).clone());
        let rep = hyper_center_test(&f, &om, &rat(0)).unwrap();
        match rep.verdict {
            HyperCenter::Decomposes { h: hh, .. } => assert_eq!(hh, h),
            other => panic!("expected decomposition, got {other:?}"),
        }

        let f = p("0,0,1,1");
        let rep = hyper_center_test(&f, &OneForm::y_times(p("0,1")), &rat(0)).unwrap();
        assert_eq!(rep.tag(), "NoTangentialCenter");

        assert!(hyper_center_test(&p("0,0,0,1"), &OneForm::y_times(p("1")), &rat(0)).is_err());
        assert!(hyper_center_test(&p("0,1,1"), &OneForm::y_times(p("1")), &rat(0)).is_err());
    }
}
