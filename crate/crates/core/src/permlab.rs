//! Permutation groups given by generators: orbits, 2-transitivity, block
//! systems, and the classification of polynomial monodromy groups.
//!
//! Nothing here computes group orders or stabilizer chains; every test is an
//! orbit computation on points, ordered pairs or a union-find partition, so the
//! cost is polynomial in the degree. [`PermAction::elements`] enumerates the full
//! group and exists for cross-checking on small degrees only.

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::decompose::{self, Exceptional, ExceptionalKind};
use crate::error::{Error, Result};
use crate::polycore::RatPoly;
use crate::tracker::{self, MonodromyOptions};

/// A bijection of `{0..n}`. Serialized and parsed 1-based.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            images: (0..n).collect(),
        }
    }

    /// From 0-based images; rejects non-bijections.
    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(Error::InvalidInput(format!(
                    "{images:?} is not a permutation"
                )));
            }
            seen[i] = true;
        }
        Ok(Permutation { images })
    }

    /// From 0-based cycles.
    pub fn from_cycles(n: usize, cycles: &[&[usize]]) -> Result<Self> {
        let mut images: Vec<usize> = (0..n).collect();
        for c in cycles {
            for (k, &a) in c.iter().enumerate() {
                if a >= n {
                    return Err(Error::InvalidInput(format!("point {a} out of range")));
                }
                images[a] = c[(k + 1) % c.len()];
            }
        }
        Self::from_images(images)
    }

    pub fn transposition(n: usize, a: usize, b: usize) -> Self {
        let mut images: Vec<usize> = (0..n).collect();
        images.swap(a, b);
        Permutation { images }
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    /// `self ∘ other`: apply `other` first.
    pub fn after(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.degree(), other.degree());
        Permutation {
            images: other.images.iter().map(|&i| self.images[i]).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.images.len()];
        for (i, &j) in self.images.iter().enumerate() {
            inv[j] = i;
        }
        Permutation { images: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// Cycle lengths, fixed points included, sorted descending.
    pub fn cycle_type(&self) -> Vec<usize> {
        let n = self.degree();
        let mut seen = vec![false; n];
        let mut lens = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            let mut len = 0;
            let mut i = s;
            while !seen[i] {
                seen[i] = true;
                i = self.images[i];
                len += 1;
            }
            lens.push(len);
        }
        lens.sort_unstable_by(|a, b| b.cmp(a));
        lens
    }

    pub fn cycle_count(&self) -> usize {
        self.cycle_type().len()
    }

    pub fn fixed_points(&self) -> usize {
        self.images
            .iter()
            .enumerate()
            .filter(|(i, j)| i == *j)
            .count()
    }

    /// 1-based image list.
    pub fn one_based(&self) -> Vec<usize> {
        self.images.iter().map(|i| i + 1).collect()
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.one_based().iter().map(ToString::to_string).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

impl Serialize for Permutation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(s)
    }
}

impl FromStr for Permutation {
    type Err = Error;

    /// One-line 1-based image list, with or without brackets: `"2,3,1"`, `"[2, 3, 1]"`.
    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim();
        let lead = s.len() - s.trim_start().len();
        let (body, offset) = match trimmed.strip_prefix('[') {
            Some(rest) => match rest.strip_suffix(']') {
                Some(inner) => (inner, lead + 1),
                None => {
                    return Err(Error::Parse {
                        position: lead + trimmed.len(),
                        message: "missing closing bracket".into(),
                    })
                }
            },
            None => (trimmed, lead),
        };
        if body.trim().is_empty() {
            return Ok(Permutation::identity(0));
        }
        let mut images = Vec::new();
        let mut pos = offset;
        for tok in body.split(',') {
            let t = tok.trim();
            let v: usize = t.parse().map_err(|_| Error::Parse {
                position: pos + tok.len() - tok.trim_start().len(),
                message: format!("expected a positive integer, found {t:?}"),
            })?;
            if v == 0 {
                return Err(Error::Parse {
                    position: pos,
                    message: "images are 1-based".into(),
                });
            }
            images.push(v - 1);
            pos += tok.len() + 1;
        }
        Permutation::from_images(images)
    }
}

/// A partition of `{0..n}` into blocks of equal size `d`, `1 < d < n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSystem {
    blocks: Vec<Vec<usize>>,
}

impl BlockSystem {
    /// Validates the partition shape (not invariance).
    pub fn new(mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        for b in blocks.iter_mut() {
            b.sort_unstable();
        }
        blocks.sort();
        let n: usize = blocks.iter().map(Vec::len).sum();
        let d = blocks.first().map_or(0, Vec::len);
        let mut seen = vec![false; n];
        for b in &blocks {
            if b.len() != d {
                return Err(Error::InvalidInput("blocks of unequal size".into()));
            }
            for &i in b {
                if i >= n || seen[i] {
                    return Err(Error::InvalidInput(
                        "blocks do not partition the points".into(),
                    ));
                }
                seen[i] = true;
            }
        }
        if d <= 1 || d >= n {
            return Err(Error::InvalidInput("trivial block system".into()));
        }
        Ok(BlockSystem { blocks })
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_size(&self) -> usize {
        self.blocks[0].len()
    }

    pub fn block_of(&self, i: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.contains(&i))
            .expect("point in some block")
    }

    /// Whether every permutation maps blocks onto blocks.
    pub fn is_invariant_under(&self, gens: &[Permutation]) -> bool {
        gens.iter().all(|g| {
            self.blocks.iter().all(|b| {
                let target = self.block_of(g.apply(b[0]));
                b.iter().all(|&i| self.block_of(g.apply(i)) == target)
            })
        })
    }

    /// 1-based blocks for serialization.
    pub fn one_based(&self) -> Vec<Vec<usize>> {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|i| i + 1).collect())
            .collect()
    }
}

impl Serialize for BlockSystem {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(s)
    }
}

/// Outcome of [`PermAction::minimal_block`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BlockSearch {
    Blocks(BlockSystem),
    /// No non-trivial block system puts the pair together.
    Primitive,
}

/// A group acting on `{0..n}`, given by generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermAction {
    n: usize,
    generators: Vec<Permutation>,
}

impl PermAction {
    pub fn new(n: usize, generators: Vec<Permutation>) -> Result<Self> {
        if let Some(g) = generators.iter().find(|g| g.degree() != n) {
            return Err(Error::InvalidInput(format!(
                "generator {g} has degree {} not {n}",
                g.degree()
            )));
        }
        Ok(PermAction { n, generators })
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[Permutation] {
        &self.generators
    }

    /// Generators followed by their inverses.
    fn symmetric_generators(&self) -> Vec<Permutation> {
        let mut all = self.generators.clone();
        all.extend(self.generators.iter().map(Permutation::inverse));
        all
    }

    /// Orbit of `point` in BFS order.
    pub fn orbit(&self, point: usize) -> Result<Vec<usize>> {
        if point >= self.n {
            return Err(Error::InvalidInput(format!("point {point} out of range")));
        }
        let gens = self.symmetric_generators();
        let mut seen = vec![false; self.n];
        let mut order = vec![point];
        seen[point] = true;
        let mut head = 0;
        while head < order.len() {
            let p = order[head];
            head += 1;
            for g in &gens {
                let q = g.apply(p);
                if !seen[q] {
                    seen[q] = true;
                    order.push(q);
                }
            }
        }
        Ok(order)
    }

    pub fn is_transitive(&self) -> bool {
        self.n == 0 || self.orbit(0).map(|o| o.len() == self.n).unwrap_or(false)
    }

    /// Orbit of the ordered pair `(a, b)` under the diagonal action.
    pub fn pair_orbit(&self, a: usize, b: usize) -> Vec<(usize, usize)> {
        let gens = self.symmetric_generators();
        let mut seen = HashSet::new();
        let mut queue = VecDeque::from([(a, b)]);
        let mut order = Vec::new();
        seen.insert((a, b));
        while let Some((x, y)) = queue.pop_front() {
            order.push((x, y));
            for g in &gens {
                let img = (g.apply(x), g.apply(y));
                if seen.insert(img) {
                    queue.push_back(img);
                }
            }
        }
        order
    }

    pub fn is_two_transitive(&self) -> bool {
        if self.n < 2 {
            return false;
        }
        self.pair_orbit(0, 1).len() == self.n * (self.n - 1)
    }

    /// Finest block system in which `a` and `b` share a block.
    ///
    /// Union-find refinement: start from `{a, b}` and keep merging the images of
    /// merged pairs under every generator until the partition is stable.
    pub fn minimal_block(&self, a: usize, b: usize) -> Result<BlockSearch> {
        if a == b || a >= self.n || b >= self.n {
            return Err(Error::InvalidInput(format!("invalid pair ({a}, {b})")));
        }
        if !self.is_transitive() {
            return Err(Error::InvalidInput("action is not transitive".into()));
        }
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        let mut pending = vec![(a, b)];
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra.max(rb)] = ra.min(rb);
        while let Some((x, y)) = pending.pop() {
            for g in &self.generators {
                let (gx, gy) = (g.apply(x), g.apply(y));
                let (rx, ry) = (find(&mut parent, gx), find(&mut parent, gy));
                if rx != ry {
                    parent[rx.max(ry)] = rx.min(ry);
                    pending.push((gx, gy));
                }
            }
        }
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut root_index = vec![usize::MAX; self.n];
        for i in 0..self.n {
            let r = find(&mut parent, i);
            if root_index[r] == usize::MAX {
                root_index[r] = classes.len();
                classes.push(Vec::new());
            }
            classes[root_index[r]].push(i);
        }
        if classes.len() == 1 {
            return Ok(BlockSearch::Primitive);
        }
        Ok(BlockSearch::Blocks(BlockSystem::new(classes)?))
    }

    /// A non-trivial block system if one exists.
    pub fn find_block_system(&self) -> Result<Option<BlockSystem>> {
        for b in 1..self.n {
            if let BlockSearch::Blocks(sys) = self.minimal_block(0, b)? {
                return Ok(Some(sys));
            }
        }
        Ok(None)
    }

    pub fn is_primitive(&self) -> Result<bool> {
        Ok(self.find_block_system()?.is_none())
    }

    /// Every group element, or `None` once more than `limit` are found.
    pub fn elements(&self, limit: usize) -> Option<Vec<Permutation>> {
        let id = Permutation::identity(self.n);
        let mut seen: HashSet<Permutation> = HashSet::from([id.clone()]);
        let mut order = vec![id];
        let mut head = 0;
        while head < order.len() {
            let p = order[head].clone();
            head += 1;
            for g in &self.generators {
                let q = g.after(&p);
                if seen.insert(q.clone()) {
                    if order.len() >= limit {
                        return None;
                    }
                    order.push(q);
                }
            }
        }
        Some(order)
    }
}

/// The four monodromy classes of an indecomposable-or-not polynomial.
#[derive(Clone, Debug, PartialEq)]
pub enum MonodromyClass {
    TwoTransitive,
    Imprimitive(BlockSystem),
    ChebyshevPrime(Exceptional),
    PowerPrime(Exceptional),
}

impl MonodromyClass {
    pub fn tag(&self) -> &'static str {
        match self {
            MonodromyClass::TwoTransitive => "TwoTransitive",
            MonodromyClass::Imprimitive(_) => "Imprimitive",
            MonodromyClass::ChebyshevPrime(_) => "ChebyshevPrime",
            MonodromyClass::PowerPrime(_) => "PowerPrime",
        }
    }

    pub fn blocks(&self) -> Option<&BlockSystem> {
        match self {
            MonodromyClass::Imprimitive(b) => Some(b),
            _ => None,
        }
    }
}

/// Result of [`classify`] together with the tracked generators it rests on.
#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub class: MonodromyClass,
    pub generators: Vec<Permutation>,
}

impl Serialize for Classification {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("tag", self.class.tag())?;
        m.serialize_entry(
            "blocks",
            &self
                .class
                .blocks()
                .map(|b| b.one_based())
                .unwrap_or_default(),
        )?;
        match &self.class {
            MonodromyClass::ChebyshevPrime(e) | MonodromyClass::PowerPrime(e) => {
                m.serialize_entry("maps", e)?
            }
            _ => {}
        }
        m.serialize_entry("generators", &self.generators)?;
        m.end()
    }
}

/// Tracks the monodromy of `f` and sorts it into one of the four classes.
///
/// Generators are tracked twice, the second time with halved steps, and must
/// agree. Imprimitivity is tested first, then exact exceptional recognition,
/// then 2-transitivity. The verdict must agree with exact decomposability.
pub fn classify(f: &RatPoly, opts: &MonodromyOptions) -> Result<Classification> {
    let n = f.degree();
    if n < 2 {
        return Err(Error::InvalidInput("classify needs degree ≥ 2".into()));
    }
    let m = tracker::compute_monodromy(f, opts)?;
    let fine = MonodromyOptions {
        track: opts.track.halved(),
        ..*opts
    };
    let check = tracker::compute_monodromy(f, &fine)?;
    if m.generators() != check.generators() {
        return Err(Error::Inconsistency(
            "generators changed when the step size was halved".into(),
        ));
    }
    let action = m.action();
    if !action.is_transitive() {
        return Err(Error::Inconsistency(
            "tracked monodromy is not transitive".into(),
        ));
    }
    let decomposable = decompose::is_decomposable(f);
    let blocks = action.find_block_system()?;
    if blocks.is_some() != decomposable {
        return Err(Error::Inconsistency(format!(
            "monodromy is {} but f is {} over the rationals",
            if blocks.is_some() {
                "imprimitive"
            } else {
                "primitive"
            },
            if decomposable {
                "decomposable"
            } else {
                "indecomposable"
            },
        )));
    }
    let class = if let Some(b) = blocks {
        MonodromyClass::Imprimitive(b)
    } else {
        let exc = decompose::recognize_exceptional(f)?;
        match exc.kind {
            ExceptionalKind::PowerEquiv => MonodromyClass::PowerPrime(exc),
            ExceptionalKind::ChebyshevEquiv => MonodromyClass::ChebyshevPrime(exc),
            ExceptionalKind::Neither if action.is_two_transitive() => MonodromyClass::TwoTransitive,
            ExceptionalKind::Neither => {
                return Err(Error::Inconsistency(
                    "primitive, not 2-transitive, and neither power nor Chebyshev".into(),
                ))
            }
        }
    };
    Ok(Classification {
        class,
        generators: m.generators(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::chebyshev;

    fn perm(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    fn action(n: usize, gens: &[&str]) -> PermAction {
        PermAction::new(n, gens.iter().map(|g| perm(g)).collect()).unwrap()
    }

    /// All set partitions of `{0..n}`.
    fn partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in partitions(n - 1) {
            for k in 0..p.len() {
                let mut q = p.clone();
                q[k].push(n - 1);
                out.push(q);
            }
            let mut q = p.clone();
            q.push(vec![n - 1]);
            out.push(q);
        }
        out
    }

    /// Non-trivial invariant partitions, by exhaustion.
    fn invariant_partitions(a: &PermAction) -> Vec<BlockSystem> {
        partitions(a.degree())
            .into_iter()
            .filter_map(|p| BlockSystem::new(p).ok())
            .filter(|b| b.is_invariant_under(a.generators()))
            .collect()
    }

    #[test]
    fn parse_and_display() {
        let p = perm("[2,3,1]");
        assert_eq!(p.images(), &[1, 2, 0]);
        assert_eq!(p.to_string(), "[2,3,1]");
        assert_eq!(perm("2, 3, 1"), p);
        assert!("[1,1,2]".parse::<Permutation>().is_err());
        assert!("[1,x]".parse::<Permutation>().is_err());
        assert!("[0,1]".parse::<Permutation>().is_err());
    }

    #[test]
    fn composition_and_inverse() {
        let a = perm("[2,3,1]");
        let b = perm("[2,1,3]");
        assert_eq!(a.after(&b).apply(0), a.apply(b.apply(0)));
        assert!(a.after(&a.inverse()).is_identity());
        assert_eq!(a.cycle_type(), vec![3]);
        assert_eq!(b.cycle_type(), vec![2, 1]);
    }

    #[test]
    fn orbits() {
        let a = action(3, &["[2,1,3]"]);
        assert_eq!(a.orbit(0).unwrap(), vec![0, 1]);
        assert!(!a.is_transitive());
        assert!(action(5, &["[2,3,4,5,1]"]).is_transitive());
    }

    #[test]
    fn two_transitivity() {
        assert!(action(3, &["[2,3,1]", "[2,1,3]"]).is_two_transitive());
        assert!(!action(4, &["[2,3,4,1]"]).is_two_transitive());
    }

    #[test]
    fn blocks_of_c4() {
        let a = action(4, &["[2,3,4,1]"]);
        match a.minimal_block(0, 2).unwrap() {
            BlockSearch::Blocks(b) => assert_eq!(b.one_based(), vec![vec![1, 3], vec![2, 4]]),
            BlockSearch::Primitive => panic!("C_4 is imprimitive"),
        }
        let oracle = invariant_partitions(&a);
        assert_eq!(oracle.len(), 1);
        assert!(!a.is_primitive().unwrap());
    }

    #[test]
    fn s3_and_d5_are_primitive() {
        let s3 = action(3, &["[2,3,1]", "[2,1,3]"]);
        assert!(s3.is_primitive().unwrap());
        assert!(invariant_partitions(&s3).is_empty());
        let d5 = action(5, &["[2,3,4,5,1]", "[1,5,4,3,2]"]);
        assert!(d5.is_primitive().unwrap());
        assert_eq!(d5.elements(1000).unwrap().len(), 10);
        assert!(!d5.is_two_transitive());
    }

    #[test]
    fn minimal_block_matches_exhaustion() {
        // D_4 on the square's vertices
        let d4 = action(4, &["[2,3,4,1]", "[1,4,3,2]"]);
        let oracle = invariant_partitions(&d4);
        for b in 1..4 {
            if let BlockSearch::Blocks(sys) = d4.minimal_block(0, b).unwrap() {
                assert!(oracle.contains(&sys));
                assert_eq!(sys.block_of(0), sys.block_of(b));
            } else {
                assert!(oracle.iter().all(|s| s.block_of(0) != s.block_of(b)));
            }
        }
    }

    #[test]
    fn non_transitive_rejected() {
        assert!(action(3, &["[2,1,3]"]).minimal_block(0, 1).is_err());
    }

    #[test]
    fn classify_small_cases() {
        let opts = MonodromyOptions::default();
        let c = |s: &str| classify(&s.parse().unwrap(), &opts).unwrap().class;
        assert!(matches!(c("0,0,0,0,1"), MonodromyClass::Imprimitive(b) if b.block_size() == 2));
        assert_eq!(c("0,1,0,0,1"), MonodromyClass::TwoTransitive);
        assert!(matches!(c("0,0,0,0,0,1"), MonodromyClass::PowerPrime(_)));
        assert!(matches!(
            classify(&chebyshev(5).unwrap(), &opts).unwrap().class,
            MonodromyClass::ChebyshevPrime(_)
        ));
        assert!(matches!(
            classify(&chebyshev(3).unwrap(), &opts).unwrap().class,
            MonodromyClass::ChebyshevPrime(_)
        ));
    }
}
