//! Exact rational polynomials, their floating images, Chebyshev polynomials,
//! critical-point data and linear normalization.

mod cpoly;
mod ratpoly;

use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::Serialize;

pub use cpoly::CPoly;
pub use ratpoly::{parse_rational, rat, rat_abs_f64, rat_to_f64, ratio, RatPoly, Rational};

use crate::error::{Error, Result};

/// Default clustering tolerance for critical values (relative).
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;

/// The Chebyshev polynomial `T_n`, via `T_{k+1} = 2x T_k − T_{k−1}`.
pub fn chebyshev(n: usize) -> Result<RatPoly> {
    if n == 0 {
        return Err(Error::InvalidInput(
            "chebyshev degree must be at least 1".into(),
        ));
    }
    let two_x = RatPoly::from_ints(&[0, 2]);
    let mut prev = RatPoly::one();
    let mut cur = RatPoly::x();
    for _ in 1..n {
        let next = &(&two_x * &cur) - &prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `g(h(x))`
pub fn compose(g: &RatPoly, h: &RatPoly) -> RatPoly {
    g.compose(h)
}

/// The affine map `x ↦ a·x + b` with `a ≠ 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearMap {
    pub a: Rational,
    pub b: Rational,
}

impl LinearMap {
    pub fn new(a: Rational, b: Rational) -> Result<Self> {
        if a.is_zero() {
            return Err(Error::InvalidInput("linear map with zero slope".into()));
        }
        Ok(LinearMap { a, b })
    }

    pub fn identity() -> Self {
        LinearMap {
            a: Rational::one(),
            b: Rational::zero(),
        }
    }

    pub fn as_poly(&self) -> RatPoly {
        RatPoly::linear(self.a.clone(), self.b.clone())
    }

    pub fn inverse(&self) -> Self {
        let a = Rational::one() / &self.a;
        let b = -&self.b * &a;
        LinearMap { a, b }
    }

    pub fn is_identity(&self) -> bool {
        self.a.is_one() && self.b.is_zero()
    }
}

impl Serialize for LinearMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (self.a.to_string(), self.b.to_string()).serialize(s)
    }
}

/// Result of [`normalize_linear`]: `f = post ∘ canonical ∘ pre`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearNormalization {
    pub canonical: RatPoly,
    pub pre: LinearMap,
    pub post: LinearMap,
}

impl LinearNormalization {
    pub fn reassemble(&self) -> RatPoly {
        self.post
            .as_poly()
            .compose(&self.canonical.compose(&self.pre.as_poly()))
    }
}

/// Canonical representative under pre/post composition with affine maps:
/// monic, no `x^{n−1}` term, zero constant term.
pub fn normalize_linear(f: &RatPoly) -> Result<LinearNormalization> {
    let n = f.degree();
    if n < 2 {
        return Err(Error::InvalidInput(
            "normalize_linear needs degree ≥ 2".into(),
        ));
    }
    let lead = f.leading();
    let shift = f.coeff(n - 1) / (&lead * rat(n as i64));
    // f(x) = F(x + shift) with F(u) = f(u − shift) depressed
    let depressed = f.shift(&-&shift);
    let constant = depressed.coeff(0);
    let without_const = &depressed - &RatPoly::constant(constant.clone());
    let canonical = without_const.scale(&(Rational::one() / &lead));
    Ok(LinearNormalization {
        canonical,
        pre: LinearMap {
            a: Rational::one(),
            b: shift,
        },
        post: LinearMap {
            a: lead,
            b: constant,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub location: Complex64,
    /// Multiplicity as a root of `f'`.
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalValue {
    pub value: Complex64,
    /// Indices into [`CriticalData::critical_points`].
    pub points: Vec<usize>,
}

/// Critical points of `f` grouped by critical value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalData {
    pub critical_points: Vec<CriticalPoint>,
    pub critical_values: Vec<CriticalValue>,
}

impl CriticalData {
    /// Number of distinct critical values.
    pub fn r(&self) -> usize {
        self.critical_values.len()
    }

    /// Distinct turning points per critical value.
    pub fn turning_counts(&self) -> Vec<usize> {
        self.critical_values
            .iter()
            .map(|v| v.points.len())
            .collect()
    }

    pub fn total_multiplicity(&self) -> usize {
        self.critical_points.iter().map(|p| p.multiplicity).sum()
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.critical_values.iter().map(|v| v.value).collect()
    }

    /// Multiplicities of the critical points over value `i`.
    pub fn multiplicities_at(&self, i: usize) -> Vec<usize> {
        self.critical_values[i]
            .points
            .iter()
            .map(|&p| self.critical_points[p].multiplicity)
            .collect()
    }
}

/// Square-free factorization (Yun): pairs `(factor, multiplicity)` with monic
/// square-free factors whose product with multiplicities is `p` up to a constant.
pub fn squarefree_factorization(p: &RatPoly) -> Vec<(RatPoly, usize)> {
    let mut out = Vec::new();
    if p.degree() == 0 {
        return out;
    }
    let dp = p.derivative();
    let mut c = p.gcd(&dp);
    let mut w = p.div_rem(&c).0;
    let mut i = 1;
    while w.degree() > 0 {
        let y = w.gcd(&c);
        let z = w.div_rem(&y).0;
        if z.degree() > 0 {
            out.push((z.monic(), i));
        }
        i += 1;
        c = c.div_rem(&y).0;
        w = y;
    }
    out
}

/// Critical points and values of `f`.
///
/// Multiplicities come from an exact square-free factorization of `f'`, so only
/// the locations and the grouping by value are numeric. Critical values are
/// grouped when they agree to `cluster_tol` relative to `max(1, max |t_i|)`; two
/// groups closer than ten times that are reported as degenerate input.
pub fn critical_data(f: &RatPoly, cluster_tol: f64) -> Result<CriticalData> {
    if f.degree() < 2 {
        return Err(Error::InvalidInput("critical_data needs degree ≥ 2".into()));
    }
    if !(cluster_tol > 0.0) {
        return Err(Error::InvalidInput(
            "cluster tolerance must be positive".into(),
        ));
    }
    let df = f.derivative();
    let mut points = Vec::new();
    for (factor, mult) in squarefree_factorization(&df) {
        for z in CPoly::from(&factor).roots()? {
            points.push(CriticalPoint {
                location: z,
                multiplicity: mult,
            });
        }
    }
    points.sort_by(|a, b| cmp_complex(a.location, b.location));

    let fc = CPoly::from(f);
    let values: Vec<Complex64> = points.iter().map(|p| fc.eval(p.location)).collect();
    let scale = values.iter().map(|v| v.norm()).fold(1.0_f64, f64::max);
    let tol = cluster_tol * scale;

    // single-linkage clustering by union-find
    let mut parent: Vec<usize> = (0..values.len()).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            if (values[i] - values[j]).norm() < tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            let d = (values[i] - values[j]).norm();
            if find(&mut parent, i) != find(&mut parent, j) && d < 10.0 * tol {
                return Err(Error::Degenerate(format!(
                    "critical values {} and {} are {d:e} apart, within ten times the clustering tolerance",
                    values[i], values[j]
                )));
            }
        }
    }

    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..values.len() {
        let root = find(&mut parent, i);
        match groups.iter_mut().find(|(r, _)| *r == root) {
            Some((_, members)) => members.push(i),
            None => groups.push((root, vec![i])),
        }
    }
    let mut critical_values: Vec<CriticalValue> = groups
        .into_iter()
        .map(|(_, members)| {
            // weight by multiplicity: the most accurate value comes from simple points
            let value =
                members.iter().map(|&m| values[m]).sum::<Complex64>() / members.len() as f64;
            CriticalValue {
                value,
                points: members,
            }
        })
        .collect();
    critical_values.sort_by(|a, b| cmp_complex(a.value, b.value));

    Ok(CriticalData {
        critical_points: points,
        critical_values,
    })
}

/// Total order on complex numbers: real part, then imaginary part.
pub fn cmp_complex(a: Complex64, b: Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> RatPoly {
        s.parse().unwrap()
    }

    #[test]
    fn chebyshev_small_degrees() {
        assert_eq!(chebyshev(1).unwrap(), p("0,1"));
        assert_eq!(chebyshev(2).unwrap(), p("-1,0,2"));
        assert_eq!(chebyshev(5).unwrap(), p("0,5,0,-20,0,16"));
        assert!(chebyshev(0).is_err());
    }

    #[test]
    fn chebyshev_matches_cosine_identity() {
        // sampled oracle: T_n(cos θ) = cos(nθ)
        for n in 1..=7 {
            let t = chebyshev(n).unwrap();
            for k in 0..10 {
                let theta = 0.37 + 0.61 * k as f64;
                let lhs = t.eval_c(Complex64::new(theta.cos(), 0.0)).re;
                assert!((lhs - (n as f64 * theta).cos()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chebyshev_semigroup() {
        let t2 = chebyshev(2).unwrap();
        let t3 = chebyshev(3).unwrap();
        assert_eq!(compose(&t2, &t3), chebyshev(6).unwrap());
    }

    #[test]
    fn critical_data_of_square() {
        let cd = critical_data(&p("0,0,1"), DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(cd.r(), 1);
        assert_eq!(cd.critical_points.len(), 1);
        assert!(cd.critical_points[0].location.norm() < 1e-14);
        assert!(cd.critical_values[0].value.norm() < 1e-14);
    }

    #[test]
    fn critical_data_of_t3() {
        let cd = critical_data(&chebyshev(3).unwrap(), DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(cd.r(), 2);
        assert_eq!(cd.turning_counts(), vec![1, 1]);
        assert!((cd.critical_values[0].value - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!((cd.critical_values[1].value - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let locs: Vec<f64> = cd.critical_points.iter().map(|c| c.location.re).collect();
        assert!((locs[0] + 0.5).abs() < 1e-12 && (locs[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn critical_data_of_quartic_power() {
        let cd = critical_data(&p("0,0,0,0,1"), DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(cd.critical_points.len(), 1);
        assert_eq!(cd.critical_points[0].multiplicity, 3);
        assert_eq!(cd.r(), 1);
    }

    #[test]
    fn critical_data_groups_chebyshev_turning_points() {
        let cd = critical_data(&chebyshev(7).unwrap(), DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(cd.r(), 2);
        assert_eq!(cd.turning_counts(), vec![3, 3]);
        assert_eq!(cd.total_multiplicity(), 6);
    }

    #[test]
    fn nearly_merging_values_are_degenerate() {
        // x^3 - 3εx has critical values ±2ε^{3/2}; ε = 5e-6 puts them 4.5e-8 apart
        let f = p("0,-3/200000,0,1");
        assert!(matches!(
            critical_data(&f, DEFAULT_CLUSTER_TOL),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn normalize_examples() {
        let n = normalize_linear(&p("3,2,1")).unwrap();
        assert_eq!(n.canonical, p("0,0,1"));
        assert_eq!(n.pre.as_poly(), p("1,1"));
        assert_eq!(n.post.as_poly(), p("2,1"));
        assert_eq!(n.reassemble(), p("3,2,1"));

        let t2 = chebyshev(2).unwrap();
        let n = normalize_linear(&t2).unwrap();
        assert_eq!(n.canonical, p("0,0,1"));
        assert_eq!(n.reassemble(), t2);

        let n = normalize_linear(&p("0,0,0,1")).unwrap();
        assert_eq!(n.canonical, p("0,0,0,1"));
        assert!(n.pre.is_identity() && n.post.is_identity());
    }

    #[test]
    fn squarefree_parts() {
        // (x-1)^2 (x+2)^3
        let f = p("-1,1").pow(2) * p("2,1").pow(3);
        let parts = squarefree_factorization(&f);
        assert_eq!(parts, vec![(p("-1,1"), 2), (p("2,1"), 3)]);
    }
}
