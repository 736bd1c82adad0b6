//! Exact cyclotomic bookkeeping for the Chebyshev level curves
//! `y² + T_p(x) = t`, and numeric periods of hyperelliptic 1-forms.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use gauss_quad::legendre::GaussLegendre;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hyperlat::{reduce_one_form, OneForm};
use crate::linalg;
use crate::polycore::{chebyshev, rat, CPoly, RatPoly};
use crate::tracker::{self, solve_fiber};

pub fn is_prime(n: usize) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

/// `Σ c_e ξ^e` with `ξ = e^{2πi/n}`; `coeffs[e]` for `e = 0..n`.
#[derive(Clone, PartialEq, Eq)]
pub struct CycloElement {
    n: usize,
    coeffs: Vec<BigInt>,
}

impl CycloElement {
    pub fn zero(n: usize) -> Self {
        CycloElement {
            n,
            coeffs: vec![BigInt::zero(); n],
        }
    }

    pub fn from_coeffs(n: usize, coeffs: Vec<i64>) -> Result<Self> {
        if coeffs.len() != n || n == 0 {
            return Err(Error::InvalidInput(format!("need {n} coefficients")));
        }
        Ok(CycloElement {
            n,
            coeffs: coeffs.into_iter().map(BigInt::from).collect(),
        })
    }

    /// `c · ξ^e`, exponent taken mod `n`.
    pub fn monomial(n: usize, e: i64, c: i64) -> Self {
        let mut x = CycloElement::zero(n);
        x.coeffs[e.rem_euclid(n as i64) as usize] = BigInt::from(c);
        x
    }

    pub fn one(n: usize) -> Self {
        CycloElement::monomial(n, 0, 1)
    }

    pub fn modulus(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn scale(&self, c: i64) -> Self {
        CycloElement {
            n: self.n,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(e, c)| {
                Complex64::from_polar(
                    c.to_f64().unwrap_or(f64::NAN),
                    2.0 * PI * e as f64 / self.n as f64,
                )
            })
            .sum()
    }

    /// Exact zero test; only prime moduli are supported.
    pub fn is_zero(&self) -> Result<bool> {
        cyclo_is_zero(self)
    }

    pub fn equals(&self, other: &CycloElement) -> Result<bool> {
        (self - other).is_zero()
    }

    /// Galois conjugation `ξ ↦ ξ^{-1}`.
    pub fn conj(&self) -> Self {
        let mut out = CycloElement::zero(self.n);
        for (e, c) in self.coeffs.iter().enumerate() {
            out.coeffs[(self.n - e) % self.n] += c;
        }
        out
    }

    fn check(&self, other: &CycloElement) {
        assert_eq!(self.n, other.n, "cyclotomic moduli differ");
    }
}

/// For prime `n` the relation module of `1, ξ, …, ξ^{n−1}` is spanned by
/// `(1, …, 1)`, so an element vanishes iff its coefficients are all equal.
pub fn cyclo_is_zero(x: &CycloElement) -> Result<bool> {
    if !is_prime(x.n) {
        return Err(Error::CompositeModulus(x.n));
    }
    Ok(x.coeffs.iter().all(|c| *c == x.coeffs[0]))
}

impl fmt::Debug for CycloElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(e, c)| format!("{c}·ξ^{e}"))
            .collect();
        if terms.is_empty() {
            write!(f, "0 (mod Φ_{})", self.n)
        } else {
            write!(f, "{} (mod Φ_{})", terms.join(" + "), self.n)
        }
    }
}

impl Serialize for CycloElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coeffs
            .iter()
            .map(|c| {
                c.to_i64()
                    .map(serde_json::Value::from)
                    .unwrap_or_else(|| c.to_string().into())
            })
            .collect::<Vec<_>>()
            .serialize(s)
    }
}

impl Add for &CycloElement {
    type Output = CycloElement;
    fn add(self, o: &CycloElement) -> CycloElement {
        self.check(o);
        CycloElement {
            n: self.n,
            coeffs: self
                .coeffs
                .iter()
                .zip(&o.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &CycloElement {
    type Output = CycloElement;
    fn sub(self, o: &CycloElement) -> CycloElement {
        self + &(-o)
    }
}

impl Neg for &CycloElement {
    type Output = CycloElement;
    fn neg(self) -> CycloElement {
        self.scale(-1)
    }
}

impl Mul for &CycloElement {
    type Output = CycloElement;
    fn mul(self, o: &CycloElement) -> CycloElement {
        self.check(o);
        let n = self.n;
        let mut out = CycloElement::zero(n);
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                out.coeffs[(i + j) % n] += a * b;
            }
        }
        out
    }
}

/// Coordinates over `S_0, S_2, …, S_{2(p−1)}` and `C_1, C_3, …, C_{2p−1}`
/// (indices mod `2p`): `s[ℓ]` multiplies `S_{2ℓ}`, `c[ℓ]` multiplies `C_{2ℓ+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LatticeCycle {
    pub p: usize,
    pub s: Vec<CycloElement>,
    pub c: Vec<CycloElement>,
}

impl LatticeCycle {
    pub fn zero(p: usize) -> Self {
        LatticeCycle {
            p,
            s: vec![CycloElement::zero(p); p],
            c: vec![CycloElement::zero(p); p],
        }
    }

    pub fn scale(&self, k: &CycloElement) -> Self {
        LatticeCycle {
            p: self.p,
            s: self.s.iter().map(|x| x * k).collect(),
            c: self.c.iter().map(|x| x * k).collect(),
        }
    }

    pub fn sub(&self, o: &LatticeCycle) -> Self {
        LatticeCycle {
            p: self.p,
            s: self.s.iter().zip(&o.s).map(|(a, b)| a - b).collect(),
            c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn is_zero(&self) -> Result<bool> {
        for x in self.s.iter().chain(&self.c) {
            if !x.is_zero()? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn equals(&self, o: &LatticeCycle) -> Result<bool> {
        self.sub(o).is_zero()
    }

    /// Complex coordinates, `S` block first.
    pub fn to_complex(&self) -> Vec<Complex64> {
        self.s
            .iter()
            .chain(&self.c)
            .map(|x| x.to_complex())
            .collect()
    }
}

fn check_prime(p: usize) -> Result<()> {
    if p < 3 || !is_prime(p) {
        return Err(Error::InvalidInput(format!("{p} is not an odd prime")));
    }
    Ok(())
}

fn check_k(p: usize, k: usize) -> Result<()> {
    if k == 0 || k > (p - 1) / 2 {
        return Err(Error::InvalidInput(format!(
            "k must lie in 1..={}",
            (p - 1) / 2
        )));
    }
    Ok(())
}

/// `S_w = Σ (w^ℓ − w^{−ℓ}) S_{2ℓ}` and `C_w = Σ (w^ℓ − w^{−ℓ−1}) C_{2ℓ+1}`
/// with `w = ξ^k`.
pub fn build_invariant_cycles(p: usize, k: usize) -> Result<(LatticeCycle, LatticeCycle)> {
    check_prime(p)?;
    check_k(p, k)?;
    let k = k as i64;
    let mut s_w = LatticeCycle::zero(p);
    let mut c_w = LatticeCycle::zero(p);
    for l in 0..p as i64 {
        s_w.s[l as usize] =
            &CycloElement::monomial(p, k * l, 1) - &CycloElement::monomial(p, -k * l, 1);
        c_w.c[l as usize] =
            &CycloElement::monomial(p, k * l, 1) - &CycloElement::monomial(p, -k * (l + 1), 1);
    }
    Ok((s_w, c_w))
}

/// Sign pattern of the Picard–Lefschetz rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VariationRule {
    /// `M_1(C_{2i+1}) = C_{2i+1} + S_{2i} + S_{2i+2}`,
    /// `M_{−1}(S_{2i}) = S_{2i} − C_{2i−1} − C_{2i+1}`. Commutes with the
    /// involution `a(P_ℓ) = −P_{−ℓ}`.
    Equivariant,
    /// `M_1(C_{2i+1}) = C_{2i+1} + S_{2i} − S_{2i+2}`,
    /// `M_{−1}(S_{2i}) = S_{2i} + C_{2i−1} − C_{2i+1}`.
    Printed,
}

impl VariationRule {
    /// Signs `(lower, upper)` of the two neighbours hit by `Var_σ`.
    fn signs(self, sigma: i8) -> (i64, i64) {
        match (self, sigma) {
            (VariationRule::Equivariant, 1) => (1, 1),
            (VariationRule::Equivariant, _) => (-1, -1),
            (VariationRule::Printed, _) => (1, -1),
        }
    }
}

/// `M_σ(cycle) − cycle` for the monodromy around `t = σ`, `σ = ±1`.
pub fn variation(
    p: usize,
    sigma: i8,
    cycle: &LatticeCycle,
    rule: VariationRule,
) -> Result<LatticeCycle> {
    check_prime(p)?;
    if cycle.p != p {
        return Err(Error::InvalidInput("cycle lives on another lattice".into()));
    }
    let (lo, hi) = rule.signs(sigma);
    let mut out = LatticeCycle::zero(p);
    match sigma {
        1 => {
            // C_{2i+1} ↦ lo·S_{2i} + hi·S_{2i+2}
            for i in 0..p {
                let c = &cycle.c[i];
                out.s[i] = &out.s[i] + &c.scale(lo);
                let j = (i + 1) % p;
                out.s[j] = &out.s[j] + &c.scale(hi);
            }
        }
        -1 => {
            // S_{2i} ↦ lo·C_{2i−1} + hi·C_{2i+1}; C_{2i−1} is c[i−1]
            for i in 0..p {
                let s = &cycle.s[i];
                let j = (i + p - 1) % p;
                out.c[j] = &out.c[j] + &s.scale(lo);
                out.c[i] = &out.c[i] + &s.scale(hi);
            }
        }
        _ => return Err(Error::InvalidInput("sigma must be ±1".into())),
    }
    Ok(out)
}

/// Outcome of the four variation identities for one `(p, k)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VariationCheck {
    pub p: usize,
    pub k: usize,
    pub rule: VariationRule,
    /// `Var_1(C_w) = (1 + w^{−1}) S_w`
    pub var1_c: bool,
    /// `Var_1(S_w) = 0`
    pub var1_s: bool,
    /// `Var_{−1}(C_w) = 0`
    pub varm1_c: bool,
    /// `Var_{−1}(S_w) = (−1 + w) C_w`
    pub varm1_s: bool,
    /// Which of `±(1 + w^{−1})`, `±(1 − w^{−1})` gives `Var_1(C_w)` as a multiple of `S_w`.
    pub var1_c_factor: Option<String>,
    /// Which of `±(1 + w)`, `±(−1 + w)` gives `Var_{−1}(S_w)` as a multiple of `C_w`.
    pub varm1_s_factor: Option<String>,
}

impl VariationCheck {
    pub fn all_hold(&self) -> bool {
        self.var1_c && self.var1_s && self.varm1_c && self.varm1_s
    }
}

fn match_factor(
    target: &LatticeCycle,
    base: &LatticeCycle,
    candidates: &[(String, CycloElement)],
) -> Result<Option<(String, CycloElement)>> {
    for (name, c) in candidates {
        if target.equals(&base.scale(c))? {
            return Ok(Some((name.clone(), c.clone())));
        }
    }
    Ok(None)
}

fn factor_candidates(p: usize, e: i64, sym: &str) -> Vec<(String, CycloElement)> {
    let one = CycloElement::one(p);
    let w = CycloElement::monomial(p, e, 1);
    vec![
        (format!("1+{sym}"), &one + &w),
        (format!("-(1+{sym})"), -&(&one + &w)),
        (format!("-1+{sym}"), &w - &one),
        (format!("1-{sym}"), &one - &w),
    ]
}

pub fn check_variations(p: usize, k: usize, rule: VariationRule) -> Result<VariationCheck> {
    let (s_w, c_w) = build_invariant_cycles(p, k)?;
    let ki = k as i64;
    let one = CycloElement::one(p);
    let w = CycloElement::monomial(p, ki, 1);
    let w_inv = CycloElement::monomial(p, -ki, 1);
    let v1c = variation(p, 1, &c_w, rule)?;
    let vm1s = variation(p, -1, &s_w, rule)?;
    let cands1 = factor_candidates(p, -ki, "w^-1");
    let candsm1 = factor_candidates(p, ki, "w");
    Ok(VariationCheck {
        p,
        k,
        rule,
        var1_c: v1c.equals(&s_w.scale(&(&one + &w_inv)))?,
        var1_s: variation(p, 1, &s_w, rule)?.is_zero()?,
        varm1_c: variation(p, -1, &c_w, rule)?.is_zero()?,
        varm1_s: vm1s.equals(&c_w.scale(&(&w - &one)))?,
        var1_c_factor: match_factor(&v1c, &s_w, &cands1)?.map(|x| x.0),
        varm1_s_factor: match_factor(&vm1s, &c_w, &candsm1)?.map(|x| x.0),
    })
}

/// Rank over ℂ of `{S_w, C_w : k = 1..(p−1)/2}` pushed to the `p`-cycle
/// quotient, with the smallest pivot ratio seen during elimination.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankCheck {
    pub p: usize,
    pub vectors: usize,
    pub rank: usize,
    pub min_pivot_ratio: f64,
}

pub fn invariant_rank(p: usize) -> Result<RankCheck> {
    check_prime(p)?;
    let mut rows = Vec::new();
    for k in 1..=(p - 1) / 2 {
        let (s, c) = build_invariant_cycles(p, k)?;
        rows.push(s.to_complex());
        rows.push(c.to_complex());
    }
    let vectors = rows.len();
    let scale = rows.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    let cols = 2 * p;
    let (mut rank, mut min_ratio) = (0, f64::INFINITY);
    for col in 0..cols {
        let Some((pivot, mag)) = rows[rank..]
            .iter()
            .enumerate()
            .map(|(i, r)| (i + rank, r[col].norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
        else {
            break;
        };
        if mag <= 1e-9 * scale {
            continue;
        }
        min_ratio = min_ratio.min(mag / scale);
        rows.swap(rank, pivot);
        let pr = rows[rank].clone();
        for r in rows.iter_mut().skip(rank + 1) {
            let factor = r[col] / pr[col];
            for (x, y) in r.iter_mut().zip(&pr) {
                *x -= factor * y;
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    Ok(RankCheck {
        p,
        vectors,
        rank,
        min_pivot_ratio: min_ratio,
    })
}

/// Characteristic polynomial, constant term first, via Faddeev–LeVerrier.
pub fn char_poly(m: &[Vec<crate::Rational>]) -> Vec<crate::Rational> {
    let n = m.len();
    let mut coeffs = vec![crate::Rational::zero(); n + 1];
    coeffs[n] = crate::Rational::one();
    let mut acc = linalg::identity(n);
    for k in 1..=n {
        let am = linalg::mat_mul(m, &acc);
        let trace: crate::Rational = (0..n).map(|i| am[i][i].clone()).sum();
        let c = -trace / rat(k as i64);
        coeffs[n - k] = c.clone();
        acc = am;
        for (i, row) in acc.iter_mut().enumerate() {
            row[i] += c.clone();
        }
    }
    coeffs
}

/// Restriction of a root-basis matrix to the closed cycles, in the basis
/// `e_k − e_{k+1}`.
pub fn restrict_to_closed(m: &[Vec<crate::Rational>]) -> Vec<Vec<crate::Rational>> {
    let n = m.len();
    let mut out = vec![vec![crate::Rational::zero(); n - 1]; n - 1];
    for j in 0..n - 1 {
        let image: Vec<crate::Rational> = (0..n).map(|i| &m[i][j] - &m[i][j + 1]).collect();
        let mut partial = crate::Rational::zero();
        for i in 0..n - 1 {
            partial += &image[i];
            out[i][j] = partial.clone();
        }
    }
    out
}

/// Comparison of the lattice monodromies with the tracked action on
/// `y² + T_p = t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonodromyConsistency {
    pub p: usize,
    pub rule: VariationRule,
    /// Tracked small-loop variations square to zero.
    pub tracked_nilpotent: bool,
    /// Ranks of the tracked variations on closed cycles.
    pub tracked_ranks: Vec<usize>,
    /// Characteristic polynomial of the tracked loop around infinity on
    /// closed cycles, constant term first.
    pub tracked_charpoly: Vec<String>,
    /// `Π_k det(λ − M_1 M_{−1} |V_w)` from the lattice rules, when every
    /// `V_w` is invariant.
    pub lattice_charpoly: Option<Vec<String>>,
    pub charpoly_match: bool,
}

pub fn monodromy_consistency(
    p: usize,
    rule: VariationRule,
    opts: &tracker::MonodromyOptions,
) -> Result<MonodromyConsistency> {
    check_prime(p)?;
    let tp = chebyshev(p)?;
    let m = tracker::compute_monodromy(&tp, opts)?;
    let restricted: Vec<Vec<Vec<crate::Rational>>> = m
        .small
        .iter()
        .map(|r| restrict_to_closed(&crate::hyperlat::word_matrix(p, &r.swap_word)))
        .collect();
    let id = linalg::identity(p - 1);
    let mut tracked_nilpotent = true;
    let mut tracked_ranks = Vec::new();
    for a in &restricted {
        let var: Vec<Vec<crate::Rational>> = a
            .iter()
            .zip(&id)
            .map(|(r, i)| r.iter().zip(i).map(|(x, y)| x - y).collect())
            .collect();
        tracked_nilpotent &= linalg::mat_mul(&var, &var)
            .iter()
            .flatten()
            .all(|x| x.is_zero());
        tracked_ranks.push(linalg::rank(&var));
    }
    let big = restrict_to_closed(&crate::hyperlat::word_matrix(p, &m.big.swap_word));
    let tracked: Vec<crate::Rational> = char_poly(&big);

    // lattice side: M_1 M_{−1} on V_w in the basis (S_w, C_w)
    let mut lattice = Some(vec![Complex64::new(1.0, 0.0)]);
    for k in 1..=(p - 1) / 2 {
        let (s_w, c_w) = build_invariant_cycles(p, k)?;
        let ki = k as i64;
        let mut local = None;
        let a = match_factor(
            &variation(p, 1, &c_w, rule)?,
            &s_w,
            &factor_candidates(p, -ki, ""),
        )?;
        let b = match_factor(
            &variation(p, -1, &s_w, rule)?,
            &c_w,
            &factor_candidates(p, ki, ""),
        )?;
        let stable =
            variation(p, 1, &s_w, rule)?.is_zero()? && variation(p, -1, &c_w, rule)?.is_zero()?;
        if let (Some((_, a)), Some((_, b)), true) = (a, b, stable) {
            // [[1,a],[0,1]]·[[1,0],[b,1]] has trace 2 + ab and determinant 1
            let trace = Complex64::new(2.0, 0.0) + (&a * &b).to_complex();
            local = Some([Complex64::new(1.0, 0.0), -trace, Complex64::new(1.0, 0.0)]);
        }
        lattice = match (lattice, local) {
            (Some(acc), Some(q)) => {
                let mut out = vec![Complex64::new(0.0, 0.0); acc.len() + 2];
                for (i, x) in acc.iter().enumerate() {
                    for (j, y) in q.iter().enumerate() {
                        out[i + j] += x * y;
                    }
                }
                Some(out)
            }
            _ => None,
        };
    }
    let lattice_rounded: Option<Vec<i64>> = lattice.and_then(|c| {
        c.iter()
            .map(|z| {
                let r = z.re.round();
                ((z - r).norm() < 1e-9).then_some(r as i64)
            })
            .collect()
    });
    let charpoly_match = lattice_rounded.as_ref().is_some_and(|l| {
        l.len() == tracked.len() && l.iter().zip(&tracked).all(|(a, b)| rat(*a) == *b)
    });
    Ok(MonodromyConsistency {
        p,
        rule,
        tracked_nilpotent,
        tracked_ranks,
        tracked_charpoly: tracked.iter().map(|x| x.to_string()).collect(),
        lattice_charpoly: lattice_rounded.map(|v| v.iter().map(|x| x.to_string()).collect()),
        charpoly_match,
    })
}

/// The matrix of `M_σ` on the `2p` lattice coordinates (`S` block first).
pub fn lattice_monodromy(
    p: usize,
    sigma: i8,
    rule: VariationRule,
) -> Result<Vec<Vec<crate::Rational>>> {
    let dim = 2 * p;
    let mut m = linalg::identity(dim);
    for col in 0..dim {
        let mut e = LatticeCycle::zero(p);
        if col < p {
            e.s[col] = CycloElement::one(p);
        } else {
            e.c[col - p] = CycloElement::one(p);
        }
        let v = variation(p, sigma, &e, rule)?;
        for (row, x) in v.s.iter().chain(&v.c).enumerate() {
            // basis images have integer constant coefficients only
            m[row][col] += rat(x.coeffs()[0].to_i64().unwrap_or(0));
        }
    }
    Ok(m)
}

/// `Σ_ℓ (w^ℓ − w^{−ℓ})(x_ℓ⁺ − x_ℓ⁻)` for `ω = x` on the fibers of `T_p`.
///
/// With `x_ℓ± = cos((±α + 2πℓ)/p)`, `α = arccos t`, the sum equals
/// `i·sin(α/p)·E` where `E = Σ (ξ^{kℓ} − ξ^{−kℓ})(ξ^ℓ − ξ^{−ℓ})` is exact.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaW {
    pub p: usize,
    pub k: usize,
    pub sum: CycloElement,
    pub exact_zero: bool,
}

pub fn delta_w_integral(p: usize, k: usize) -> Result<DeltaW> {
    check_prime(p)?;
    check_k(p, k)?;
    let ki = k as i64;
    let mut sum = CycloElement::zero(p);
    for l in 0..p as i64 {
        let a = &CycloElement::monomial(p, ki * l, 1) - &CycloElement::monomial(p, -ki * l, 1);
        let b = &CycloElement::monomial(p, l, 1) - &CycloElement::monomial(p, -l, 1);
        sum = &sum + &(&a * &b);
    }
    let exact_zero = sum.is_zero()?;
    Ok(DeltaW {
        p,
        k,
        sum,
        exact_zero,
    })
}

/// `x_ℓ±(t) = cos((±α + 2πℓ)/p)`, each matched against a computed root of
/// `T_p(x) = t`.
pub fn theta_roots(p: usize, t: Complex64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let tp = CPoly::from(&chebyshev(p)?);
    let fiber = solve_fiber(&tp, t)?;
    let alpha = t.acos();
    let spread = fiber.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut plus = Vec::with_capacity(p);
    let mut minus = Vec::with_capacity(p);
    for l in 0..p {
        let shift = 2.0 * PI * l as f64;
        for (sign, out) in [(1.0, &mut plus), (-1.0, &mut minus)] {
            let x = ((alpha * sign + shift) / p as f64).cos();
            let (best, d) = fiber
                .iter()
                .map(|&r| (r, (r - x).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("nonempty fiber");
            let second = fiber
                .iter()
                .map(|&r| (r - x).norm())
                .filter(|&e| e > d)
                .fold(f64::INFINITY, f64::min);
            if d > 1e-8 * spread || second < 1e3 * d.max(1e-14) && second < 1e-6 {
                return Err(Error::Inconsistency(format!(
                    "cannot match branch x_{l} at t = {t} to a computed root"
                )));
            }
            out.push(best);
        }
    }
    Ok((plus, minus))
}

/// Numeric `Σ (w^ℓ − w^{−ℓ})(ω(x_ℓ⁺) − ω(x_ℓ⁻))` at each sample.
pub fn delta_w_numeric(
    p: usize,
    k: usize,
    omega: &RatPoly,
    samples: &[Complex64],
) -> Result<Vec<Complex64>> {
    check_prime(p)?;
    check_k(p, k)?;
    let w = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / p as f64);
    samples
        .iter()
        .map(|&t| {
            let (plus, minus) = theta_roots(p, t)?;
            Ok((0..p)
                .map(|l| {
                    let weight = w.powu(l as u32) - w.powu(l as u32).inv();
                    weight * (omega.eval_c(plus[l]) - omega.eval_c(minus[l]))
                })
                .sum())
        })
        .collect()
}

const QUAD_START: usize = 64;
const QUAD_MAX: usize = 2048;
const QUAD_TOL: f64 = 1e-10;

/// `∮ y·u(z) dz` over the cycle around `e1, e2` on `y² = R(z)`, where
/// `R(z) = ρ² sin²φ · W(z)` along `z = m − ρ cos φ`.
///
/// The cycle runs from `e1` to `e2` on the sheet with `Im y ≥ 0` at the
/// midpoint (ties broken by `Re y ≥ 0`) and back on the other sheet.
pub fn segment_period(
    e1: Complex64,
    e2: Complex64,
    w: impl Fn(Complex64) -> Complex64,
    u: impl Fn(Complex64) -> Complex64,
) -> Result<Complex64> {
    let m = (e1 + e2) / 2.0;
    let rho = (e2 - e1) / 2.0;
    if rho.norm() == 0.0 {
        return Err(Error::Degenerate("branch points coincide".into()));
    }
    let w_mid = w(m);
    let mut s_mid = w_mid.sqrt();
    let y_mid = rho * s_mid;
    if y_mid.im < 0.0 || (y_mid.im == 0.0 && y_mid.re < 0.0) {
        s_mid = -s_mid;
    }
    let mut previous: Option<Complex64> = None;
    let mut n = QUAD_START;
    while n <= QUAD_MAX {
        let rule = GaussLegendre::new(n).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let mut nodes: Vec<(f64, f64)> = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, wt)| (0.5 * PI * (x + 1.0), 0.5 * PI * wt))
            .collect();
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mid = nodes.partition_point(|&(phi, _)| phi < 0.5 * PI);
        let mut roots = vec![Complex64::new(0.0, 0.0); nodes.len()];
        for range in [
            (mid..nodes.len()).collect::<Vec<_>>(),
            (0..mid).rev().collect::<Vec<_>>(),
        ] {
            let mut last = s_mid;
            for i in range {
                let z = m - rho * nodes[i].0.cos();
                let s = w(z).sqrt();
                let s = if (s - last).norm() <= (s + last).norm() {
                    s
                } else {
                    -s
                };
                roots[i] = s;
                last = s;
            }
        }
        let mut total = Complex64::new(0.0, 0.0);
        let mut scale = 0.0;
        for (i, &(phi, wt)) in nodes.iter().enumerate() {
            let z = m - rho * phi.cos();
            let sin = phi.sin();
            let term = rho * rho * sin * sin * roots[i] * u(z) * wt;
            total += term;
            scale += term.norm();
        }
        let value = total * 2.0;
        if let Some(prev) = previous {
            if (value - prev).norm() <= QUAD_TOL * (value.norm().max(2.0 * scale)).max(1e-300) {
                return Ok(value);
            }
        }
        previous = Some(value);
        n *= 2;
    }
    Err(Error::NonConvergence {
        poly: "period quadrature did not settle".into(),
    })
}

/// Period of `ω` over the cycle on `y² = t − f(x)` encircling the two branch
/// points nearest to `branch_pair`.
pub fn period_integral(
    f: &RatPoly,
    t: Complex64,
    branch_pair: (Complex64, Complex64),
    omega: &OneForm,
) -> Result<Complex64> {
    let cf = CPoly::from(f);
    let mut roots = cf.minus_constant(t).roots()?;
    let pick = |roots: &mut Vec<Complex64>, target: Complex64| {
        let (i, _) = roots
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - target).norm().total_cmp(&(b.1 - target).norm()))
            .expect("roots");
        roots.remove(i)
    };
    let e1 = pick(&mut roots, branch_pair.0);
    let e2 = pick(&mut roots, branch_pair.1);
    let gap = (e2 - e1).norm();
    let spread = roots
        .iter()
        .chain([&e1, &e2])
        .map(|z| z.norm())
        .fold(1.0, f64::max);
    if gap <= 1e-9 * spread {
        return Err(Error::Degenerate("branch points too close".into()));
    }
    for &r in &roots {
        if tracker::segment_distance(e1, e2, r) <= 1e-3 * gap {
            return Err(Error::Degenerate(
                "another branch point lies on the cycle".into(),
            ));
        }
    }
    let lead = Complex64::new(crate::polycore::rat_to_f64(&f.leading()), 0.0);
    let g = reduce_one_form(omega, f).g;
    segment_period(
        e1,
        e2,
        |z| roots.iter().fold(lead, |acc, &r| acc * (z - r)),
        |z| g.eval_c(z),
    )
}

/// Periods of `y dx` on `y² = t − cos(pθ)`, `x = cos θ`, over the lifted
/// cycles: `S̃_{2ℓ}` around `θ = (2πℓ ± α)/p` and `C̃_{2ℓ+1}` around
/// `θ = ((2ℓ+1)π ± (π − α))/p`, `α = arccos t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThetaPeriods {
    pub t: f64,
    pub s: Vec<[f64; 2]>,
    pub c: Vec<[f64; 2]>,
}

fn theta_period(p: usize, t: f64, e1: f64, e2: f64) -> Result<Complex64> {
    let pf = p as f64;
    let (e1c, e2c) = (Complex64::new(e1, 0.0), Complex64::new(e2, 0.0));
    segment_period(
        e1c,
        e2c,
        |z| {
            let r = Complex64::new(t, 0.0) - (z * pf).cos();
            r / (-(z - e1c) * (z - e2c))
        },
        |z| -z.sin(),
    )
}

pub fn theta_periods(p: usize, t: f64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    check_prime(p)?;
    if !(t > -1.0 && t < 1.0) {
        return Err(Error::InvalidInput("theta periods need −1 < t < 1".into()));
    }
    let alpha = t.acos();
    let pf = p as f64;
    let mut s = Vec::with_capacity(p);
    let mut c = Vec::with_capacity(p);
    for l in 0..p {
        let lf = l as f64;
        s.push(theta_period(
            p,
            t,
            (2.0 * PI * lf - alpha) / pf,
            (2.0 * PI * lf + alpha) / pf,
        )?);
        let centre = (2.0 * lf + 1.0) * PI;
        c.push(theta_period(
            p,
            t,
            (centre - (PI - alpha)) / pf,
            (centre + (PI - alpha)) / pf,
        )?);
    }
    Ok((s, c))
}

/// Numeric `∫_{S_w} y dx`, `∫_{C_w} y dx`, the common factor `I` of
/// `∫_{S̃_{2ℓ}} y dx = −sin(2πℓ/p)·I` with its worst residual, and `∫_{C̃_1} y dx`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodSample {
    pub t: f64,
    pub s_w: [f64; 2],
    pub c_w: [f64; 2],
    pub common_factor: [f64; 2],
    pub proportionality_residual: f64,
    pub c1: [f64; 2],
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn period_sample(p: usize, k: usize, t: f64) -> Result<PeriodSample> {
    check_k(p, k)?;
    let (s, c) = theta_periods(p, t)?;
    let (s_w, c_w) = build_invariant_cycles(p, k)?;
    let sw: Complex64 = s_w.s.iter().zip(&s).map(|(a, v)| a.to_complex() * v).sum();
    let cw: Complex64 = c_w.c.iter().zip(&c).map(|(a, v)| a.to_complex() * v).sum();
    // least-squares fit of I over ℓ
    let sines: Vec<f64> = (0..p)
        .map(|l| -(2.0 * PI * l as f64 / p as f64).sin())
        .collect();
    let denom: f64 = sines.iter().map(|x| x * x).sum();
    let factor: Complex64 = sines.iter().zip(&s).map(|(a, v)| v * *a).sum::<Complex64>() / denom;
    let residual = sines
        .iter()
        .zip(&s)
        .map(|(a, v)| (v - factor * *a).norm())
        .fold(0.0, f64::max);
    Ok(PeriodSample {
        t,
        s_w: pair(sw),
        c_w: pair(cw),
        common_factor: pair(factor),
        proportionality_residual: residual,
        c1: pair(c[0]),
    })
}

/// Standard sample levels in `(−1, 1)`.
pub fn default_levels(count: usize) -> Vec<f64> {
    (0..count)
        .map(|j| -0.8 + 1.6 * (j as f64 + 0.5) / count as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xi(p: usize, e: i64) -> CycloElement {
        CycloElement::monomial(p, e, 1)
    }

    #[test]
    fn zero_test() {
        let full = CycloElement::from_coeffs(5, vec![1, 1, 1, 1, 1]).unwrap();
        assert!(cyclo_is_zero(&full).unwrap());
        assert!(!cyclo_is_zero(&xi(5, 0)).unwrap());
        assert!(matches!(
            cyclo_is_zero(&xi(6, 0)),
            Err(Error::CompositeModulus(6))
        ));
        assert!((full.to_complex()).norm() < 1e-12);
    }

    #[test]
    fn arithmetic_matches_complex() {
        let a = &xi(7, 2) + &xi(7, -3).scale(4);
        let b = &xi(7, 5) - &xi(7, 1);
        let prod = &a * &b;
        assert!((prod.to_complex() - a.to_complex() * b.to_complex()).norm() < 1e-12);
        assert!((a.conj().to_complex() - a.to_complex().conj()).norm() < 1e-12);
    }

    #[test]
    fn invariant_cycle_examples() {
        let (s, _) = build_invariant_cycles(3, 1).unwrap();
        assert!(s.s[0].is_zero().unwrap());
        assert!(s.s[1].equals(&(&xi(3, 1) - &xi(3, 2))).unwrap());
        assert!(s.s[2].equals(&(&xi(3, 2) - &xi(3, 1))).unwrap());
        let (_, c) = build_invariant_cycles(5, 2).unwrap();
        assert!(c.c[0].equals(&(&xi(5, 0) - &xi(5, 3))).unwrap());
        assert!(build_invariant_cycles(5, 3).is_err());
        assert!(build_invariant_cycles(9, 1).is_err());
    }

    #[test]
    fn equivariant_variations() {
        for p in [3, 5, 7, 11] {
            for k in 1..=(p - 1) / 2 {
                let v = check_variations(p, k, VariationRule::Equivariant).unwrap();
                assert!(v.var1_c && v.var1_s && v.varm1_c, "{v:?}");
                assert_eq!(v.varm1_s_factor.as_deref(), Some("-(1+w)"));
            }
        }
    }

    #[test]
    fn printed_rule_breaks_equivariance() {
        let v = check_variations(5, 2, VariationRule::Printed).unwrap();
        assert!(v.var1_s && v.varm1_c);
        assert!(!v.var1_c && !v.varm1_s);
        assert_eq!(v.var1_c_factor, None);
    }

    #[test]
    fn invariant_vectors_independent() {
        for p in [3, 5, 7, 11] {
            let r = invariant_rank(p).unwrap();
            assert_eq!(r.rank, p - 1);
            assert!(r.min_pivot_ratio > 1e-6);
        }
    }

    #[test]
    fn char_poly_small() {
        let m = vec![vec![rat(2), rat(1)], vec![rat(0), rat(3)]];
        assert_eq!(char_poly(&m), vec![rat(6), rat(-5), rat(1)]);
    }

    #[test]
    fn lattice_matches_tracked_monodromy() {
        for p in [3, 5] {
            let c =
                monodromy_consistency(p, VariationRule::Equivariant, &Default::default()).unwrap();
            assert!(c.tracked_nilpotent, "{c:?}");
            assert!(c.tracked_ranks.iter().all(|&r| r == (p - 1) / 2), "{c:?}");
            assert!(c.charpoly_match, "{c:?}");
            let printed =
                monodromy_consistency(p, VariationRule::Printed, &Default::default()).unwrap();
            assert!(!printed.charpoly_match);
        }
    }

    #[test]
    fn delta_w_exact() {
        for p in [3, 5, 7, 11] {
            assert!(!delta_w_integral(p, 1).unwrap().exact_zero);
            for k in 2..=(p - 1) / 2 {
                assert!(delta_w_integral(p, k).unwrap().exact_zero);
            }
        }
        let d = delta_w_integral(5, 1).unwrap();
        assert!((d.sum.to_complex() - Complex64::new(-10.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn delta_w_numeric_agrees() {
        let samples = [Complex64::new(0.3, 0.2), Complex64::new(-0.5, 0.1)];
        let x = RatPoly::x();
        for v in delta_w_numeric(5, 2, &x, &samples).unwrap() {
            assert!(v.norm() < 1e-9);
        }
        for (v, t) in delta_w_numeric(5, 1, &x, &samples)
            .unwrap()
            .iter()
            .zip(samples)
        {
            let expected = Complex64::new(0.0, 1.0) * (t.acos() / 5.0).sin() * -10.0;
            assert!((v - expected).norm() < 1e-9);
        }
    }

    #[test]
    fn unit_circle_area() {
        let f: RatPoly = "0,0,1".parse().unwrap();
        let v = period_integral(
            &f,
            Complex64::new(1.0, 0.0),
            (Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)),
            &OneForm::y_times(RatPoly::one()),
        )
        .unwrap();
        assert!((v - Complex64::new(PI, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn exact_form_has_zero_period() {
        let f: RatPoly = "0,1,0,-2,1".parse().unwrap();
        let b: crate::hyperlat::BiPoly = "0,1,3;2;0,0,1".parse().unwrap();
        let t = Complex64::new(0.1, 0.05);
        let v = period_integral(
            &f,
            t,
            (Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.0)),
            &OneForm::exact(&b),
        )
        .unwrap();
        assert!(v.norm() < 1e-9);
    }

    #[test]
    fn chebyshev_periods() {
        for t in default_levels(5) {
            let s = period_sample(5, 2, t).unwrap();
            assert!(Complex64::new(s.s_w[0], s.s_w[1]).norm() < 1e-8, "{s:?}");
            assert!(Complex64::new(s.c_w[0], s.c_w[1]).norm() < 1e-8, "{s:?}");
            assert!(s.proportionality_residual < 1e-8, "{s:?}");
            assert!(Complex64::new(s.c1[0], s.c1[1]).norm() > 1e-3, "{s:?}");
        }
    }
}
