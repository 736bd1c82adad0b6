//! Fiber solving and continuation of the roots of `f(x) = t` along loops in
//! the complement of the critical values.
//!
//! Roots are ranked by decreasing imaginary part in a frame rotated clockwise
//! by [`RANK_ROTATION`]. A tracked loop yields the permutation of those ranks
//! and the word of adjacent rank exchanges met on the way, each signed by which
//! root passes on the left. Reversing a loop reverses the word and flips every
//! sign.

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permlab::{PermAction, Permutation};
use crate::polycore::{critical_data, CPoly, CriticalData, RatPoly, DEFAULT_CLUSTER_TOL};

/// Vertices on each small circle around a critical value.
pub const SMALL_LOOP_SIDES: usize = 16;
/// Vertices on the loop around infinity.
pub const BIG_LOOP_SIDES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackOptions {
    /// Initial step, as a fraction of the loop's size scale.
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    /// Newton convergence threshold, relative to `1 + |x|`.
    pub corrector_tol: f64,
    /// Minimum root separation, relative to the root spread at the start.
    pub collision_guard: f64,
}

impl Default for TrackOptions {
    fn default() -> Self {
        TrackOptions {
            initial_step: 0.02,
            max_step: 0.05,
            min_step: 1e-10,
            corrector_tol: 1e-11,
            collision_guard: 1e-6,
        }
    }
}

impl TrackOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.min_step > 0.0
            && self.min_step <= self.initial_step
            && self.initial_step <= self.max_step
            && self.corrector_tol > 0.0
            && self.collision_guard > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "inconsistent track options {self:?}"
            )))
        }
    }

    /// The same options with every step size halved.
    pub fn halved(&self) -> Self {
        TrackOptions {
            initial_step: self.initial_step / 2.0,
            max_step: self.max_step / 2.0,
            min_step: self.min_step / 2.0,
            ..*self
        }
    }
}

/// A closed polyline in the `t`-plane starting and ending at `basepoint`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopPath {
    #[serde(with = "complex_pair")]
    pub basepoint: Complex64,
    #[serde(with = "complex_pairs")]
    pub vertices: Vec<Complex64>,
    #[serde(default)]
    pub min_sigma_distance: f64,
}

impl LoopPath {
    /// Builds and closes a loop from its vertices (the basepoint is prepended
    /// and appended when missing).
    pub fn new(basepoint: Complex64, mut vertices: Vec<Complex64>) -> Self {
        if vertices.first() != Some(&basepoint) {
            vertices.insert(0, basepoint);
        }
        if vertices.last() != Some(&basepoint) || vertices.len() == 1 {
            vertices.push(basepoint);
        }
        LoopPath {
            basepoint,
            vertices,
            min_sigma_distance: 0.0,
        }
    }

    /// Parses the loop JSON format `{"basepoint":[re,im],"vertices":[[re,im],...]}`.
    pub fn from_json(s: &str) -> Result<Self> {
        let raw: LoopPath = serde_json::from_str(s).map_err(|e| Error::Parse {
            position: e.column(),
            message: e.to_string(),
        })?;
        if raw
            .vertices
            .iter()
            .chain([&raw.basepoint])
            .any(|z| !z.is_finite())
        {
            return Err(Error::InvalidInput("non-finite loop vertex".into()));
        }
        let closed = LoopPath::new(raw.basepoint, raw.vertices);
        Ok(LoopPath {
            min_sigma_distance: raw.min_sigma_distance,
            ..closed
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("loop serializes")
    }

    /// Same path traversed backwards.
    pub fn reversed(&self) -> Self {
        let mut v = self.vertices.clone();
        v.reverse();
        LoopPath {
            vertices: v,
            ..self.clone()
        }
    }

    /// Smallest distance from the polyline to any point of `sigma`.
    pub fn distance_to(&self, sigma: &[Complex64]) -> f64 {
        self.vertices
            .windows(2)
            .flat_map(|w| sigma.iter().map(move |&s| segment_distance(w[0], w[1], s)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Total length of the polyline.
    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }
}

/// Distance from `p` to the segment `[a, b]`.
pub fn segment_distance(a: Complex64, b: Complex64, p: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let s = (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (a + d * s - p).norm()
}

/// One signed exchange of adjacent ranks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Swap {
    /// 1-based: ranks `index` and `index + 1` exchanged.
    pub index: usize,
    /// `+1` when the root leaving rank `index` passes to the left of the other.
    pub sign: i8,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrackResult {
    /// Rank `k` at the start goes to rank `permutation(k)` at the end.
    pub permutation: Permutation,
    pub swap_word: Vec<Swap>,
    pub step_count: usize,
}

/// Angle (radians) of the frame in which imaginary parts are compared.
pub const RANK_ROTATION: f64 = 0.05;

/// Coordinates of `x` in the ranking frame.
pub fn rank_coord(x: Complex64) -> Complex64 {
    x * Complex64::from_polar(1.0, -RANK_ROTATION)
}

/// Sort key of the rank order.
pub fn rank_cmp(a: Complex64, b: Complex64) -> Ordering {
    let (a, b) = (rank_coord(a), rank_coord(b));
    b.im.total_cmp(&a.im).then(a.re.total_cmp(&b.re))
}

fn min_separation(roots: &[Complex64]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            m = m.min((roots[i] - roots[j]).norm());
        }
    }
    m
}

fn spread(roots: &[Complex64]) -> f64 {
    let mut m = 0.0_f64;
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            m = m.max((roots[i] - roots[j]).norm());
        }
    }
    m.max(1e-300)
}

fn fmt_c(z: Complex64) -> String {
    format!("{:.6e}{:+.6e}i", z.re, z.im)
}

/// Roots of `f(x) = t`, ranked by decreasing imaginary part.
///
/// Rejects `t` when two roots are closer than `collision_guard` times the
/// root spread, which happens exactly near a critical value.
pub fn solve_fiber_with_guard(
    f: &CPoly,
    t: Complex64,
    collision_guard: f64,
) -> Result<Vec<Complex64>> {
    if f.degree() == 0 {
        return Err(Error::InvalidInput(
            "constant polynomial has no fiber".into(),
        ));
    }
    let df = f.derivative();
    if df.degree() > 0 || df.coeffs()[0] != Complex64::new(0.0, 0.0) {
        let scale = 1.0 + t.norm();
        for c in df.roots()? {
            let v = f.eval(c);
            if (v - t).norm() <= collision_guard * scale.max(v.norm()) {
                return Err(Error::TooCloseToSigma {
                    point: fmt_c(t),
                    critical: fmt_c(v),
                    distance: (v - t).norm(),
                });
            }
        }
    }
    let g = f.minus_constant(t);
    let mut roots = g.roots()?;
    for r in &roots {
        if (f.eval(*r) - t).norm() > 1e-10 * g.abs_scale(*r).max(t.norm()).max(1e-300) {
            return Err(Error::NonConvergence {
                poly: format!("{:?}", g.coeffs()),
            });
        }
    }
    if roots.len() > 1 && min_separation(&roots) <= collision_guard * spread(&roots) {
        return Err(Error::TooCloseToSigma {
            point: fmt_c(t),
            critical: "a critical value".into(),
            distance: min_separation(&roots),
        });
    }
    roots.sort_by(|a, b| rank_cmp(*a, *b));
    Ok(roots)
}

pub fn solve_fiber(f: &CPoly, t: Complex64) -> Result<Vec<Complex64>> {
    solve_fiber_with_guard(f, t, TrackOptions::default().collision_guard)
}

/// Newton iteration on `f(x) = t` from `x`; `None` unless converged.
fn newton(f: &CPoly, t: Complex64, mut x: Complex64, tol: f64) -> Option<Complex64> {
    for _ in 0..8 {
        let (v, dv) = f.eval_with_derivative(x);
        let step = (v - t) / dv;
        if !step.is_finite() {
            return None;
        }
        x -= step;
        if step.norm() <= tol * (1.0 + x.norm()) {
            return Some(x);
        }
        // residual at rounding level: the step is noise
        if (v - t).norm() <= 64.0 * f64::EPSILON * (f.abs_scale(x) + t.norm()) {
            return Some(x);
        }
    }
    None
}

/// Continuation state: the roots, labelled by their rank at the start.
struct Continuation<'a> {
    f: &'a CPoly,
    df: CPoly,
    opts: TrackOptions,
    roots: Vec<Complex64>,
    /// `order[r]` = label of the root currently at rank `r`.
    order: Vec<usize>,
    word: Vec<Swap>,
    steps: usize,
    guard: f64,
}

enum StepOutcome {
    Accepted(Vec<Complex64>, Vec<Swap>, Vec<usize>),
    Rejected,
}

impl<'a> Continuation<'a> {
    fn start(f: &'a CPoly, t0: Complex64, opts: TrackOptions) -> Result<Self> {
        opts.validate()?;
        let roots = solve_fiber_with_guard(f, t0, opts.collision_guard)?;
        let guard = opts.collision_guard * spread(&roots);
        Ok(Continuation {
            f,
            df: f.derivative(),
            opts,
            order: (0..roots.len()).collect(),
            roots,
            word: Vec::new(),
            steps: 0,
            guard,
        })
    }

    /// Attempts to move all roots from `t` to `t_new`.
    fn try_step(&self, t_new: Complex64) -> StepOutcome {
        let n = self.roots.len();
        let mut next = Vec::with_capacity(n);
        for (k, &x) in self.roots.iter().enumerate() {
            let d_k = self
                .roots
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, &y)| (x - y).norm())
                .fold(f64::INFINITY, f64::min);
            let (v, _) = self.f.eval_with_derivative(x);
            let dv = self.df.eval(x);
            let predicted = x + (t_new - v) / dv;
            let motion = (predicted - x).norm();
            if !predicted.is_finite() || motion > 0.2 * d_k {
                return StepOutcome::Rejected;
            }
            let Some(corrected) = newton(self.f, t_new, predicted, self.opts.corrector_tol) else {
                return StepOutcome::Rejected;
            };
            if (corrected - predicted).norm() > 0.1 * d_k || (corrected - x).norm() > 0.3 * d_k {
                return StepOutcome::Rejected;
            }
            next.push(corrected);
        }
        if n > 1 && min_separation(&next) <= self.guard {
            return StepOutcome::Rejected;
        }

        // rank changes must be disjoint adjacent exchanges
        let new_order: Vec<usize> = {
            let mut idx: Vec<usize> = self.order.clone();
            idx.sort_by(|&a, &b| rank_cmp(next[a], next[b]));
            idx
        };
        let mut swaps = Vec::new();
        let mut r = 0;
        while r < n {
            if new_order[r] == self.order[r] {
                r += 1;
                continue;
            }
            if r + 1 < n && new_order[r] == self.order[r + 1] && new_order[r + 1] == self.order[r] {
                let upper = self.order[r];
                let lower = self.order[r + 1];
                // locate the crossing by linear interpolation of Im(upper − lower)
                let before = rank_coord(self.roots[upper] - self.roots[lower]);
                let after = rank_coord(next[upper] - next[lower]);
                let s = before.im / (before.im - after.im);
                if !(0.0..=1.0).contains(&s) {
                    return StepOutcome::Rejected;
                }
                let gap = before.re + s * (after.re - before.re);
                let movement = (next[upper] - self.roots[upper]).norm()
                    + (next[lower] - self.roots[lower]).norm();
                if gap.abs() <= 4.0 * movement {
                    return StepOutcome::Rejected;
                }
                swaps.push(Swap {
                    index: r + 1,
                    sign: if gap < 0.0 { 1 } else { -1 },
                });
                r += 2;
            } else {
                return StepOutcome::Rejected;
            }
        }
        StepOutcome::Accepted(next, swaps, new_order)
    }

    /// Follows the straight segment from `from` to `to`.
    fn segment(&mut self, from: Complex64, to: Complex64, scale: f64, h: &mut f64) -> Result<()> {
        let length = (to - from).norm();
        if length == 0.0 {
            return Ok(());
        }
        let mut s = 0.0;
        let mut t = from;
        while s < length {
            let step = (*h * scale).min(length - s);
            let s_new = if s + step >= length * (1.0 - 1e-15) {
                length
            } else {
                s + step
            };
            let t_new = if s_new == length {
                to
            } else {
                from + (to - from) * (s_new / length)
            };
            match self.try_step(t_new) {
                StepOutcome::Accepted(next, swaps, new_order) => {
                    self.roots = next;
                    self.order = new_order;
                    self.word.extend(swaps);
                    self.steps += 1;
                    s = s_new;
                    t = t_new;
                    *h = (*h * 1.5).min(self.opts.max_step);
                }
                StepOutcome::Rejected => {
                    *h /= 2.0;
                    if *h < self.opts.min_step {
                        if self.roots.len() > 1 && min_separation(&self.roots) < 1e3 * self.guard {
                            return Err(Error::RootCollision { at: fmt_c(t) });
                        }
                        return Err(Error::StepUnderflow { at: fmt_c(t) });
                    }
                }
            }
        }
        Ok(())
    }

    fn polyline(&mut self, vertices: &[Complex64]) -> Result<()> {
        let scale = vertices
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .fold(0.0_f64, f64::max)
            .max(1e-12);
        let mut h = self.opts.initial_step;
        for w in vertices.windows(2) {
            self.segment(w[0], w[1], scale, &mut h)?;
        }
        Ok(())
    }
}

/// Tracks all roots around `path` and reports the induced permutation of ranks.
pub fn track_loop(f: &CPoly, path: &LoopPath, opts: &TrackOptions) -> Result<TrackResult> {
    if path.vertices.len() < 2 || path.vertices.first() != path.vertices.last() {
        return Err(Error::InvalidInput("loop must be a closed polyline".into()));
    }
    let mut c = Continuation::start(f, path.basepoint, *opts)?;
    let initial = c.roots.clone();
    c.polyline(&path.vertices)?;

    let n = initial.len();
    // order[r] is the label of the root now at rank r; label k started at rank k
    let mut images = vec![0; n];
    for (r, &label) in c.order.iter().enumerate() {
        images[label] = r;
    }
    let permutation = Permutation::from_images(images)?;

    // round trip: the tracked roots are the initial fiber, permuted
    let tol =
        10.0 * opts.corrector_tol * (1.0 + initial.iter().map(|z| z.norm()).fold(0.0, f64::max))
            + 1e-9 * spread(&initial);
    for (label, &x) in c.roots.iter().enumerate() {
        let target = initial[permutation.apply(label)];
        let polished = newton(f, path.basepoint, x, opts.corrector_tol).unwrap_or(x);
        if (polished - target).norm() > tol.max(1e-8 * spread(&initial)) {
            return Err(Error::Inconsistency(format!(
                "tracked root {label} ended at {} but rank {} holds {}",
                fmt_c(polished),
                permutation.apply(label) + 1,
                fmt_c(target)
            )));
        }
    }
    let from_word = word_permutation(n, &c.word);
    if from_word != permutation {
        return Err(Error::Inconsistency(
            "swap word does not reproduce the tracked permutation".into(),
        ));
    }
    Ok(TrackResult {
        permutation,
        swap_word: c.word,
        step_count: c.steps,
    })
}

/// Composition of the adjacent transpositions of a swap word.
pub fn word_permutation(n: usize, word: &[Swap]) -> Permutation {
    // rank_of[label]
    let mut rank_of: Vec<usize> = (0..n).collect();
    let mut at_rank: Vec<usize> = (0..n).collect();
    for s in word {
        let (a, b) = (s.index - 1, s.index);
        let (la, lb) = (at_rank[a], at_rank[b]);
        at_rank.swap(a, b);
        rank_of[la] = b;
        rank_of[lb] = a;
    }
    Permutation::from_images(rank_of).expect("transpositions compose to a permutation")
}

/// Tracks roots along an open polyline; returns the roots at the end, indexed
/// by their rank at the start, and the swap word met on the way.
pub fn track_path(
    f: &CPoly,
    vertices: &[Complex64],
    opts: &TrackOptions,
) -> Result<(Vec<Complex64>, Vec<Swap>)> {
    let Some(&start) = vertices.first() else {
        return Err(Error::InvalidInput("empty path".into()));
    };
    let mut c = Continuation::start(f, start, *opts)?;
    c.polyline(vertices)?;
    Ok((c.roots, c.word))
}

/// A loop basis of `ℂ ∖ Σ` at a basepoint.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LoopBasis {
    #[serde(serialize_with = "complex_pair::serialize")]
    pub basepoint: Complex64,
    /// Critical values, in the order of `small_loops`.
    #[serde(serialize_with = "complex_pairs::serialize")]
    pub critical_values: Vec<Complex64>,
    /// Radius of the circle around each critical value.
    pub radii: Vec<f64>,
    pub small_loops: Vec<LoopPath>,
    pub big_loop: LoopPath,
}

fn circle(center: Complex64, radius: f64, start_angle: f64, sides: usize) -> Vec<Complex64> {
    (0..=sides)
        .map(|k| {
            center
                + Complex64::from_polar(
                    radius,
                    start_angle + std::f64::consts::TAU * k as f64 / sides as f64,
                )
        })
        .collect()
}

/// One loop per critical value plus a loop around infinity.
///
/// Each small loop runs straight from the basepoint toward its critical value,
/// around a counterclockwise 16-gon of radius 0.4 times the distance to the
/// nearest other critical value (and at most half the distance to the basepoint), and
/// back. Loops are ordered by the argument of `t_i − basepoint` measured
/// counterclockwise from the outward ray through the basepoint, ties by
/// modulus. Approach segments must clear every other circle.
pub fn loop_basis(f: &RatPoly, basepoint: Complex64) -> Result<LoopBasis> {
    let cd = critical_data(f, DEFAULT_CLUSTER_TOL)?;
    loop_basis_from(&cd, basepoint)
}

pub fn loop_basis_from(cd: &CriticalData, basepoint: Complex64) -> Result<LoopBasis> {
    let values = cd.values();
    let scale = values.iter().map(|v| v.norm()).fold(1.0_f64, f64::max);
    for &v in &values {
        let d = (v - basepoint).norm();
        if d <= 1e-6 * scale {
            return Err(Error::TooCloseToSigma {
                point: fmt_c(basepoint),
                critical: fmt_c(v),
                distance: d,
            });
        }
    }
    // angles measured counterclockwise from the outward ray the big loop leaves along
    let dir = if basepoint.norm() > 0.0 {
        basepoint.arg()
    } else {
        0.0
    };
    let angle = |v: Complex64| (v - basepoint).arg() - dir;
    let angle = |v: Complex64| angle(v).rem_euclid(std::f64::consts::TAU);
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        angle(values[a]).total_cmp(&angle(values[b])).then(
            (values[a] - basepoint)
                .norm()
                .total_cmp(&(values[b] - basepoint).norm()),
        )
    });
    let radius_of = |i: usize| {
        let nearest = values
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &v)| (v - values[i]).norm())
            .fold(f64::INFINITY, f64::min);
        let r = if nearest.is_finite() {
            0.4 * nearest
        } else {
            0.5 * (values[i] - basepoint).norm()
        };
        r.min(0.5 * (values[i] - basepoint).norm())
    };
    let radii: Vec<f64> = order.iter().map(|&i| radius_of(i)).collect();

    let mut small_loops = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        let t_i = values[i];
        let rho = radii[pos];
        let toward_base = (basepoint - t_i) / (basepoint - t_i).norm();
        let entry = t_i + toward_base * rho;
        for (other_pos, &j) in order.iter().enumerate() {
            if j != i && segment_distance(basepoint, entry, values[j]) <= radii[other_pos] {
                return Err(Error::Degenerate(format!(
                    "approach to {} passes through the circle around {}; choose another basepoint",
                    fmt_c(t_i),
                    fmt_c(values[j])
                )));
            }
        }
        let mut vertices = vec![basepoint];
        vertices.extend(circle(t_i, rho, toward_base.arg(), SMALL_LOOP_SIDES));
        vertices.push(basepoint);
        let mut lp = LoopPath::new(basepoint, vertices);
        lp.min_sigma_distance = lp.distance_to(&values);
        small_loops.push(lp);
    }

    let big_radius = 2.0 * values.iter().map(|v| v.norm()).fold(0.0, f64::max) + 1.0;
    let big_radius = big_radius.max(2.0 * basepoint.norm() + 1.0);
    let anchor = Complex64::from_polar(big_radius, dir);
    let mut vertices = vec![basepoint];
    vertices.extend(circle(
        Complex64::new(0.0, 0.0),
        big_radius,
        dir,
        BIG_LOOP_SIDES,
    ));
    vertices.push(basepoint);
    debug_assert!(vertices[1] == anchor || (vertices[1] - anchor).norm() < 1e-9 * big_radius);
    let mut big_loop = LoopPath::new(basepoint, vertices);
    big_loop.min_sigma_distance = big_loop.distance_to(&values);

    Ok(LoopBasis {
        basepoint,
        critical_values: order.iter().map(|&i| values[i]).collect(),
        radii,
        small_loops,
        big_loop,
    })
}

/// Picks a deterministic basepoint for which [`loop_basis`] succeeds, maximizing
/// the clearance between the loops and the critical values.
pub fn choose_basepoint(cd: &CriticalData) -> Result<Complex64> {
    let values = cd.values();
    let center: Complex64 = values.iter().sum::<Complex64>() / values.len().max(1) as f64;
    let extent = values
        .iter()
        .map(|v| (v - center).norm())
        .fold(0.0_f64, f64::max);
    let mut min_gap = f64::INFINITY;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            min_gap = min_gap.min((values[i] - values[j]).norm());
        }
    }
    if !min_gap.is_finite() {
        min_gap = 1.0;
    }
    let unit = extent + min_gap;
    // off-axis angles avoid the real symmetry of rational inputs
    let angle = |k: usize| 0.4137 + std::f64::consts::TAU * k as f64 / 16.0;
    let mut candidates = Vec::new();
    for radius in [0.1, 0.25, 0.5, 0.8, 1.3, 2.0] {
        candidates.extend((0..16).map(|k| center + Complex64::from_polar(radius * unit, angle(k))));
    }
    // a far outlier stretches the grid above; also try points local to each value
    for (i, &v) in values.iter().enumerate() {
        let nearest = values
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &w)| (w - v).norm())
            .fold(f64::INFINITY, f64::min);
        if !nearest.is_finite() {
            continue;
        }
        for scale in [0.5, 1.0, 2.0] {
            candidates
                .extend((0..16).map(|k| v + Complex64::from_polar(scale * nearest, angle(k))));
        }
    }
    let mut best: Option<(f64, Complex64)> = None;
    for b in candidates {
        let Ok(basis) = loop_basis_from(cd, b) else {
            continue;
        };
        let clearance = basis
            .small_loops
            .iter()
            .map(|l| l.min_sigma_distance)
            .fold(f64::INFINITY, f64::min)
            .min(basis.radii.iter().cloned().fold(f64::INFINITY, f64::min));
        if best.is_none_or(|(c, _)| clearance > c * (1.0 + 1e-9)) {
            best = Some((clearance, b));
        }
    }
    best.map(|(_, b)| b)
        .ok_or_else(|| Error::Degenerate("no admissible basepoint found".into()))
}

/// Tracked generators of the monodromy group.
#[derive(Clone, Debug, Serialize)]
pub struct Monodromy {
    pub basis: LoopBasis,
    pub small: Vec<TrackResult>,
    pub big: TrackResult,
    #[serde(serialize_with = "complex_pairs::serialize")]
    pub fiber: Vec<Complex64>,
}

impl Monodromy {
    pub fn degree(&self) -> usize {
        self.fiber.len()
    }

    pub fn generators(&self) -> Vec<Permutation> {
        self.small.iter().map(|r| r.permutation.clone()).collect()
    }

    pub fn action(&self) -> PermAction {
        PermAction::new(self.degree(), self.generators()).expect("generators share the degree")
    }

    /// `Σ (n − #cycles)` over the small loops; equals `n − 1` by Riemann–Hurwitz.
    pub fn riemann_hurwitz_sum(&self) -> usize {
        let n = self.degree();
        self.small
            .iter()
            .map(|r| n - r.permutation.cycle_count())
            .sum()
    }

    /// Product of the small-loop permutations in basis order (first loop first).
    pub fn small_loop_product(&self) -> Permutation {
        self.small
            .iter()
            .fold(Permutation::identity(self.degree()), |acc, r| {
                r.permutation.after(&acc)
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonodromyOptions {
    pub track: TrackOptions,
    pub cluster_tol: f64,
}

impl Default for MonodromyOptions {
    fn default() -> Self {
        MonodromyOptions::new(TrackOptions::default())
    }
}

impl MonodromyOptions {
    pub fn new(track: TrackOptions) -> Self {
        MonodromyOptions {
            track,
            cluster_tol: DEFAULT_CLUSTER_TOL,
        }
    }
}

/// Basepoint, loop basis and tracked permutations for `f`.
pub fn compute_monodromy(f: &RatPoly, opts: &MonodromyOptions) -> Result<Monodromy> {
    if f.degree() < 2 {
        return Err(Error::InvalidInput("monodromy needs degree ≥ 2".into()));
    }
    if opts.cluster_tol <= 0.0 {
        return Err(Error::InvalidInput(
            "cluster tolerance must be positive".into(),
        ));
    }
    let cd = critical_data(f, opts.cluster_tol)?;
    let basepoint = choose_basepoint(&cd)?;
    let basis = loop_basis_from(&cd, basepoint)?;
    let cf = CPoly::from(f);
    let fiber = solve_fiber_with_guard(&cf, basepoint, opts.track.collision_guard)?;
    let small = basis
        .small_loops
        .iter()
        .map(|l| track_loop(&cf, l, &opts.track))
        .collect::<Result<Vec<_>>>()?;
    let big = track_loop(&cf, &basis.big_loop, &opts.track)?;
    Ok(Monodromy {
        basis,
        small,
        big,
        fiber,
    })
}

/// Straight segment from `from` to `to`, with half-circle detours around every
/// point of `sigma` the segment would pass within its radius of.
///
/// Detours run counterclockwise around the avoided point. Radii shrink so that
/// neither endpoint lies inside a circle.
pub fn detoured_segment(
    from: Complex64,
    to: Complex64,
    sigma: &[Complex64],
    radii: &[f64],
) -> Vec<Complex64> {
    let d = to - from;
    let len = d.norm();
    let mut out = vec![from];
    if len == 0.0 {
        return out;
    }
    let dir = d / len;
    let mut detours: Vec<(f64, f64, Complex64, f64)> = Vec::new();
    for (&c, &r0) in sigma.iter().zip(radii) {
        let r = r0.min(0.5 * (c - from).norm()).min(0.5 * (c - to).norm());
        if segment_distance(from, to, c) >= r {
            continue;
        }
        // intersections of the line with the circle, as arc-length parameters
        let rel = (c - from) * dir.conj();
        let half = (r * r - rel.im * rel.im).max(0.0).sqrt();
        detours.push((rel.re - half, rel.re + half, c, r));
    }
    detours.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (s_in, s_out, c, r) in detours {
        let entry = from + dir * s_in;
        let exit = from + dir * s_out;
        let a0 = (entry - c).arg();
        let mut a1 = (exit - c).arg();
        if a1 <= a0 {
            a1 += std::f64::consts::TAU;
        }
        let pieces = 12;
        for k in 0..=pieces {
            let a = a0 + (a1 - a0) * k as f64 / pieces as f64;
            out.push(c + Complex64::from_polar(r, a));
        }
    }
    out.push(to);
    out
}

/// Continues the basepoint fiber of `f` to arbitrary points of `ℂ ∖ Σ`.
///
/// Roots keep the labels (ranks) they have at the basepoint; each target is
/// reached along the detoured straight segment from the basepoint.
#[derive(Clone, Debug)]
pub struct FiberTransport {
    pub f: RatPoly,
    pub poly: CPoly,
    pub critical: CriticalData,
    pub basepoint: Complex64,
    pub fiber: Vec<Complex64>,
    pub opts: TrackOptions,
    radii: Vec<f64>,
}

impl FiberTransport {
    pub fn new(f: &RatPoly, opts: &MonodromyOptions) -> Result<Self> {
        if f.degree() < 2 {
            return Err(Error::InvalidInput(
                "fiber transport needs degree ≥ 2".into(),
            ));
        }
        let critical = critical_data(f, opts.cluster_tol)?;
        let basepoint = choose_basepoint(&critical)?;
        let poly = CPoly::from(f);
        let fiber = solve_fiber_with_guard(&poly, basepoint, opts.track.collision_guard)?;
        let values = critical.values();
        let scale = values.iter().map(|v| v.norm()).fold(1.0_f64, f64::max);
        let radii = values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let nearest = values
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &w)| (w - v).norm())
                    .fold(scale, f64::min);
                0.4 * nearest
            })
            .collect();
        Ok(FiberTransport {
            f: f.clone(),
            poly,
            critical,
            basepoint,
            fiber,
            opts: opts.track,
            radii,
        })
    }

    pub fn degree(&self) -> usize {
        self.fiber.len()
    }

    pub fn path_to(&self, t: Complex64) -> Vec<Complex64> {
        detoured_segment(self.basepoint, t, &self.critical.values(), &self.radii)
    }

    /// The roots over `t`, indexed by their basepoint labels.
    pub fn roots_at(&self, t: Complex64) -> Result<Vec<Complex64>> {
        if t == self.basepoint {
            return Ok(self.fiber.clone());
        }
        let (roots, _) = track_path(&self.poly, &self.path_to(t), &self.opts)?;
        Ok(roots)
    }

    /// `k` points on the circle of radius `2·max|Σ|` (at least 1) about 0.
    pub fn sample_circle(&self, k: usize) -> Vec<Complex64> {
        let r = 2.0
            * self
                .critical
                .values()
                .iter()
                .map(|v| v.norm())
                .fold(0.5, f64::max);
        (0..k)
            .map(|j| Complex64::from_polar(r, 0.3183 + std::f64::consts::TAU * j as f64 / k as f64))
            .collect()
    }
}

pub(crate) mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

pub(crate) mod complex_pairs {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(zs: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        zs.iter()
            .map(|z| [z.re, z.im])
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let raw = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(raw
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::chebyshev;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cp(s: &str) -> CPoly {
        CPoly::from(&s.parse::<RatPoly>().unwrap())
    }

    #[test]
    fn fiber_of_square() {
        let roots = solve_fiber(&cp("0,0,1"), c(1.0, 0.0)).unwrap();
        assert!((roots[0] - c(-1.0, 0.0)).norm() < 1e-12);
        assert!((roots[1] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn fiber_of_cube_is_ranked() {
        let roots = solve_fiber(&cp("0,0,0,1"), c(1.0, 0.0)).unwrap();
        let h = 3f64.sqrt() / 2.0;
        assert!((roots[0] - c(-0.5, h)).norm() < 1e-12);
        assert!((roots[1] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((roots[2] - c(-0.5, -h)).norm() < 1e-12);
    }

    #[test]
    fn fiber_of_t3_at_zero() {
        let t3 = CPoly::from(&chebyshev(3).unwrap());
        let roots = solve_fiber(&t3, c(0.0, 0.0)).unwrap();
        let s = 3f64.sqrt() / 2.0;
        let mut re: Vec<f64> = roots.iter().map(|r| r.re).collect();
        re.sort_by(f64::total_cmp);
        for (a, b) in re.iter().zip([-s, 0.0, s]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn fiber_at_critical_value_is_rejected() {
        assert!(matches!(
            solve_fiber(&cp("0,0,1"), c(0.0, 0.0)),
            Err(Error::TooCloseToSigma { .. })
        ));
    }

    #[test]
    fn square_loop_swaps_sheets() {
        let f: RatPoly = "0,0,1".parse().unwrap();
        let basis = loop_basis(&f, c(1.0, 0.0)).unwrap();
        assert_eq!(basis.small_loops.len(), 1);
        let r = track_loop(
            &CPoly::from(&f),
            &basis.small_loops[0],
            &TrackOptions::default(),
        )
        .unwrap();
        assert_eq!(r.permutation.cycle_type(), vec![2]);
        assert_eq!(r.swap_word.len() % 2, 1);
    }

    #[test]
    fn reversed_loop_inverts() {
        let f = chebyshev(3).unwrap();
        let basis = loop_basis(&f, c(0.0, 1.0)).unwrap();
        assert_eq!(basis.small_loops.len(), 2);
        let cf = CPoly::from(&f);
        for l in &basis.small_loops {
            let fwd = track_loop(&cf, l, &TrackOptions::default()).unwrap();
            let back = track_loop(&cf, &l.reversed(), &TrackOptions::default()).unwrap();
            assert_eq!(back.permutation, fwd.permutation.inverse());
            let flipped: Vec<Swap> = fwd
                .swap_word
                .iter()
                .rev()
                .map(|s| Swap {
                    index: s.index,
                    sign: -s.sign,
                })
                .collect();
            assert_eq!(back.swap_word, flipped);
        }
    }

    #[test]
    fn loop_json_round_trip() {
        let s = r#"{"basepoint":[1.0,0.5],"vertices":[[2.0,0.0],[0.0,2.0]]}"#;
        let l = LoopPath::from_json(s).unwrap();
        assert_eq!(l.vertices.len(), 4);
        assert_eq!(l.vertices[0], c(1.0, 0.5));
        assert_eq!(LoopPath::from_json(&l.to_json()).unwrap(), l);
        assert!(LoopPath::from_json("{").is_err());
    }

    #[test]
    fn riemann_hurwitz_and_product_relation() {
        for s in [
            "0,0,1",
            "0,-3,0,4",
            "0,1,0,0,1",
            "0,1,1,0,0,0,1",
            "3,0,-2,0,1",
        ] {
            let f: RatPoly = s.parse().unwrap();
            let m = compute_monodromy(&f, &MonodromyOptions::default()).unwrap();
            assert_eq!(m.riemann_hurwitz_sum(), f.degree() - 1, "{s}");
            assert_eq!(m.small_loop_product(), m.big.permutation, "{s}");
            assert!(m.action().is_transitive(), "{s}");
        }
    }

    #[test]
    fn word_permutation_composes_transpositions() {
        let w = [Swap { index: 1, sign: 1 }, Swap { index: 2, sign: -1 }];
        // label 0 moves to rank 1 then rank 2
        assert_eq!(word_permutation(3, &w).images(), &[2, 0, 1]);
    }
}
