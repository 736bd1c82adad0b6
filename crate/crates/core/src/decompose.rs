//! Functional decomposition over ℚ and recognition of the two exceptional
//! families (powers and Chebyshev polynomials up to affine maps).

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::polycore::{
    chebyshev, critical_data, normalize_linear, rat, LinearMap, RatPoly, Rational,
    DEFAULT_CLUSTER_TOL,
};

/// `f = g ∘ h` with `h` monic, `h(0) = 0`, both of degree at least 2.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Decomposition {
    #[serde(serialize_with = "poly_text")]
    pub g: RatPoly,
    #[serde(serialize_with = "poly_text")]
    pub h: RatPoly,
}

impl Decomposition {
    pub fn compose(&self) -> RatPoly {
        self.g.compose(&self.h)
    }
}

pub(crate) fn poly_text<S: Serializer>(p: &RatPoly, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&p.to_string())
}

/// First `count` coefficients of `(Σ a_k y^k)^α` with `a_0 = 1`.
fn series_power(a: &[Rational], alpha: &Rational, count: usize) -> Vec<Rational> {
    let coef = |j: usize| a.get(j).cloned().unwrap_or_else(Rational::zero);
    let mut out = vec![Rational::one()];
    for k in 1..count {
        let mut acc = Rational::zero();
        for j in 1..=k {
            let aj = coef(j);
            if aj.is_zero() {
                continue;
            }
            let w = alpha * rat(j as i64) - rat((k - j) as i64);
            acc += w * aj * &out[k - j];
        }
        out.push(acc / rat(k as i64));
    }
    out
}

/// The unique monic `h` of degree `d` with `h(0) = 0` that could be a right
/// component of `f`: the polynomial part of `(f / lc)^{d/n}` at infinity.
pub fn candidate_right_component(f: &RatPoly, d: usize) -> Option<RatPoly> {
    let n = f.degree();
    if d == 0 || n % d != 0 {
        return None;
    }
    let monic = f.monic();
    // monic(x) = x^n · Σ a_k x^{−k}
    let a: Vec<Rational> = (0..=n).map(|k| monic.coeff(n - k)).collect();
    let alpha = Rational::new(BigInt::from(d), BigInt::from(n));
    let g = series_power(&a, &alpha, d);
    let mut coeffs = vec![Rational::zero(); d + 1];
    for (k, gk) in g.into_iter().enumerate() {
        coeffs[d - k] = gk;
    }
    Some(RatPoly::new(coeffs))
}

/// All single-step decompositions `f = g ∘ h` with `1 < deg h < deg f`,
/// sorted by `deg h`.
pub fn right_components(f: &RatPoly) -> Vec<Decomposition> {
    let n = f.degree();
    let mut out = Vec::new();
    for d in 2..n {
        if n % d != 0 {
            continue;
        }
        let Some(h) = candidate_right_component(f, d) else {
            continue;
        };
        if let Some(g) = f.expand_in(&h) {
            let dec = Decomposition { g, h };
            assert!(dec.compose() == *f, "h-adic expansion must recompose");
            assert!(
                !out.iter().any(|o: &Decomposition| o.h.degree() == d),
                "at most one normalized right component per degree"
            );
            out.push(dec);
        }
    }
    out
}

pub fn is_decomposable(f: &RatPoly) -> bool {
    !right_components(f).is_empty()
}

/// `Δ(x, y) = (f(x) − f(y)) / (x − y)`; `coefficients[i][j]` multiplies `x^i y^j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DividedDifference {
    pub coefficients: Vec<Vec<Rational>>,
}

pub fn divided_difference(f: &RatPoly) -> Result<DividedDifference> {
    let n = f.degree();
    if n < 2 {
        return Err(Error::InvalidInput(
            "divided difference needs degree ≥ 2".into(),
        ));
    }
    let coefficients = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i + j < n {
                        f.coeff(i + j + 1)
                    } else {
                        Rational::zero()
                    }
                })
                .collect()
        })
        .collect();
    Ok(DividedDifference { coefficients })
}

impl DividedDifference {
    pub fn size(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coeff(&self, i: usize, j: usize) -> Rational {
        self.coefficients
            .get(i)
            .and_then(|row| row.get(j))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn total_degree(&self) -> Option<usize> {
        let m = self.size();
        (0..m)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .filter(|&(i, j)| !self.coeff(i, j).is_zero())
            .map(|(i, j)| i + j)
            .max()
    }

    pub fn is_symmetric(&self) -> bool {
        let m = self.size();
        (0..m).all(|i| (0..m).all(|j| self.coeff(i, j) == self.coeff(j, i)))
    }

    /// Checks `(x − y)·Δ = f(x) − f(y)` coefficient by coefficient.
    pub fn verify(&self, f: &RatPoly) -> bool {
        let m = self.size() + 1;
        for i in 0..m {
            for j in 0..m {
                let lhs = (if i > 0 {
                    self.coeff(i - 1, j)
                } else {
                    Rational::zero()
                }) - (if j > 0 {
                    self.coeff(i, j - 1)
                } else {
                    Rational::zero()
                });
                let rhs = match (i, j) {
                    (0, 0) => Rational::zero(),
                    (i, 0) => f.coeff(i),
                    (0, j) => -f.coeff(j),
                    _ => Rational::zero(),
                };
                if lhs != rhs {
                    return false;
                }
            }
        }
        true
    }

    pub fn eval_c(
        &self,
        x: num_complex::Complex64,
        y: num_complex::Complex64,
    ) -> num_complex::Complex64 {
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        for (i, row) in self.coefficients.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    acc += x.powu(i as u32) * y.powu(j as u32) * crate::polycore::rat_to_f64(c);
                }
            }
        }
        acc
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ExceptionalKind {
    ChebyshevEquiv,
    PowerEquiv,
    Neither,
}

/// Outcome of [`recognize_exceptional`].
///
/// For the two exceptional kinds, `f = post ∘ model ∘ pre` where `model` is
/// `x^n` or `T_n`. When the Chebyshev scale is irrational the maps are absent
/// and `scale_squared` certifies `f = post' ∘ T_n(λ·(x + s))` with `λ² =
/// scale_squared`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Exceptional {
    pub kind: ExceptionalKind,
    pub pre: Option<LinearMap>,
    pub post: Option<LinearMap>,
    #[serde(serialize_with = "opt_rational_text")]
    pub scale_squared: Option<Rational>,
}

fn opt_rational_text<S: Serializer>(
    r: &Option<Rational>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_str(&r.to_string()),
        None => s.serialize_none(),
    }
}

impl Exceptional {
    fn neither() -> Self {
        Exceptional {
            kind: ExceptionalKind::Neither,
            pre: None,
            post: None,
            scale_squared: None,
        }
    }

    /// Recomposes `post ∘ model ∘ pre` when both maps are rational.
    pub fn reassemble(&self, n: usize) -> Option<RatPoly> {
        let (pre, post) = (self.pre.as_ref()?, self.post.as_ref()?);
        let model = match self.kind {
            ExceptionalKind::PowerEquiv => RatPoly::monomial(Rational::one(), n),
            ExceptionalKind::ChebyshevEquiv => chebyshev(n).ok()?,
            ExceptionalKind::Neither => return None,
        };
        Some(post.as_poly().compose(&model.compose(&pre.as_poly())))
    }
}

fn exact_sqrt(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let (n, d) = (r.numer(), r.denom());
    let (sn, sd) = (n.sqrt(), d.sqrt());
    (&sn * &sn == *n && &sd * &sd == *d).then(|| Rational::new(sn, sd))
}

/// Exact test of power equivalence: `f′ = c·(x − s)^{n−1}`.
fn power_certificate(f: &RatPoly) -> Result<Option<Exceptional>> {
    let norm = normalize_linear(f)?;
    let n = f.degree();
    if norm.canonical != RatPoly::monomial(Rational::one(), n) {
        return Ok(None);
    }
    Ok(Some(Exceptional {
        kind: ExceptionalKind::PowerEquiv,
        pre: Some(norm.pre),
        post: Some(norm.post),
        scale_squared: None,
    }))
}

/// Exact test of Chebyshev equivalence on the canonical form.
fn chebyshev_certificate(f: &RatPoly) -> Result<Option<Exceptional>> {
    let n = f.degree();
    if n < 3 {
        return Ok(None);
    }
    let norm = normalize_linear(f)?;
    let t = chebyshev(n)?;
    let t_lead = t.leading();
    let t_hat: Vec<Rational> = t.coeffs().iter().map(|c| c / &t_lead).collect();
    // canonical(f)(x) = canonical(T_n)(λx) / λ^n, compared through λ²
    let c = norm.canonical.coeff(n - 2);
    if c.is_zero() {
        return Ok(None);
    }
    let lambda_sq = &t_hat[n - 2] / &c;
    for k in 1..n {
        let expected = if (n - k) % 2 == 1 {
            Rational::zero()
        } else {
            let e = ((n - k) / 2) as i32;
            &t_hat[k] * num_traits::pow::Pow::pow(&lambda_sq, -e)
        };
        if norm.canonical.coeff(k) != expected {
            return Ok(None);
        }
    }
    let mut cert = Exceptional {
        kind: ExceptionalKind::ChebyshevEquiv,
        pre: None,
        post: None,
        scale_squared: Some(lambda_sq.clone()),
    };
    if let Some(lambda) = exact_sqrt(&lambda_sq) {
        // f = a·[T(λ(x+s)) − T(0)] / (lead_T·λ^n) + const
        let lead = &norm.post.a;
        let denom = &t_lead * num_traits::pow::Pow::pow(&lambda, n as u32);
        let slope = lead / &denom;
        let offset = &norm.post.b - &slope * t.coeff(0);
        let pre = LinearMap::new(lambda.clone(), &lambda * &norm.pre.b)?;
        let post = LinearMap::new(slope, offset)?;
        cert.pre = Some(pre);
        cert.post = Some(post);
        if cert.reassemble(n).as_ref() != Some(f) {
            return Err(Error::Inconsistency(
                "Chebyshev maps fail to recompose".into(),
            ));
        }
    }
    Ok(Some(cert))
}

/// Decides whether `f` is affinely equivalent to `x^n` or to `T_n`.
pub fn recognize_exceptional(f: &RatPoly) -> Result<Exceptional> {
    let n = f.degree();
    if n < 2 {
        return Err(Error::InvalidInput(
            "recognize_exceptional needs degree ≥ 2".into(),
        ));
    }
    if let Some(cert) = power_certificate(f)? {
        return Ok(cert);
    }
    let cd = critical_data(f, DEFAULT_CLUSTER_TOL)?;
    let screen = cd.r() == 2
        && cd.critical_points.iter().all(|p| p.multiplicity == 1)
        && cd.total_multiplicity() == n - 1;
    let exact = chebyshev_certificate(f)?;
    match (screen, exact) {
        (true, Some(cert)) => Ok(cert),
        (false, None) => Ok(Exceptional::neither()),
        (true, None) => Err(Error::Inconsistency(
            "two simple critical values but no Chebyshev certificate".into(),
        )),
        (false, Some(_)) => Err(Error::Inconsistency(
            "Chebyshev certificate found but critical data disagree".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::{compose, ratio};

    fn p(s: &str) -> RatPoly {
        s.parse().unwrap()
    }

    #[test]
    fn series_root_of_square() {
        // (1 + 2y + y²)^{1/2} = 1 + y
        let s = series_power(&[rat(1), rat(2), rat(1)], &ratio(1, 2), 4);
        assert_eq!(s, vec![rat(1), rat(1), rat(0), rat(0)]);
    }

    #[test]
    fn x4_decomposes_through_square() {
        let d = right_components(&p("0,0,0,0,1"));
        assert_eq!(
            d,
            vec![Decomposition {
                g: p("0,0,1"),
                h: p("0,0,1")
            }]
        );
    }

    #[test]
    fn sextic_through_cube() {
        let f = p("5,0,0,2,0,0,1");
        let d = right_components(&f);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].h, p("0,0,0,1"));
        assert_eq!(d[0].g, p("5,2,1"));
    }

    #[test]
    fn t9_through_t3() {
        let t3 = chebyshev(3).unwrap();
        let t9 = chebyshev(9).unwrap();
        assert_eq!(compose(&t3, &t3), t9);
        let d = right_components(&t9);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].h, t3.scale(&ratio(1, 4)));
        assert_eq!(d[0].compose(), t9);
    }

    #[test]
    fn t6_has_two_components() {
        let d = right_components(&chebyshev(6).unwrap());
        assert_eq!(
            d.iter().map(|x| x.h.degree()).collect::<Vec<_>>(),
            vec![2, 3]
        );
    }

    #[test]
    fn primes_and_generic_are_indecomposable() {
        assert!(right_components(&p("0,1,0,0,0,1")).is_empty());
        assert!(right_components(&p("0,1,0,0,1")).is_empty());
        assert!(right_components(&p("1,1,0,0,0,0,1")).is_empty());
    }

    #[test]
    fn divided_difference_examples() {
        let dd = divided_difference(&p("0,0,1")).unwrap();
        assert_eq!(
            dd.coefficients,
            vec![vec![rat(0), rat(1)], vec![rat(1), rat(0)]]
        );
        let dd = divided_difference(&chebyshev(3).unwrap()).unwrap();
        assert_eq!(dd.coeff(0, 0), rat(-3));
        assert_eq!(dd.coeff(2, 0), rat(4));
        assert_eq!(dd.coeff(1, 1), rat(4));
        assert_eq!(dd.coeff(0, 2), rat(4));
        assert_eq!(dd.coeff(1, 0), rat(0));
        assert!(dd.verify(&chebyshev(3).unwrap()));
        assert!(dd.is_symmetric());
        assert_eq!(dd.total_degree(), Some(2));
        assert!(!dd.verify(&p("0,0,0,1")));
    }

    #[test]
    fn exceptional_examples() {
        let e = recognize_exceptional(&p("1,3,3,1")).unwrap();
        assert_eq!(e.kind, ExceptionalKind::PowerEquiv);
        assert_eq!(e.reassemble(3), Some(p("1,3,3,1")));

        let f = p("0,-3,0,1");
        let e = recognize_exceptional(&f).unwrap();
        assert_eq!(e.kind, ExceptionalKind::ChebyshevEquiv);
        assert_eq!(e.scale_squared, Some(ratio(1, 4)));
        assert_eq!(e.pre, Some(LinearMap::new(ratio(1, 2), rat(0)).unwrap()));
        assert_eq!(e.reassemble(3), Some(f));

        assert_eq!(
            recognize_exceptional(&p("0,1,0,0,1")).unwrap().kind,
            ExceptionalKind::Neither
        );
    }

    #[test]
    fn irrational_chebyshev_scale() {
        // T_3(x·√2)
        let f = p("0,-3,0,8").scale(&ratio(1, 1));
        let e = recognize_exceptional(&f).unwrap();
        assert_eq!(e.kind, ExceptionalKind::ChebyshevEquiv);
        assert_eq!(e.scale_squared, Some(rat(2)));
        assert!(e.pre.is_none());
    }
}
