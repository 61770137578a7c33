//! Built-in finitely generated groups: the lattices Z^N, the free groups F_N
//! and the discrete Heisenberg group.
//!
//! Elements are stored in canonical form, so structural equality is group
//! equality. A [`GroupContext`] fixes the group and its generator set and is
//! the entry point for checked arithmetic; the element-level operations are
//! the unchecked fast path used by the assembly code.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};

/// Default cap on BFS word-length searches and ball radii for Z^N and H3.
pub const DEFAULT_RADIUS_CAP: usize = 64;
/// Default cap for free groups, whose balls grow exponentially.
pub const DEFAULT_FREE_RADIUS_CAP: usize = 12;
/// Environment variable overriding the radius cap.
pub const RADIUS_CAP_ENV: &str = "FSM_RADIUS_CAP";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupKind {
    /// Z^N under addition.
    Lattice(usize),
    /// Free group on N generators.
    Free(usize),
    /// Integer upper unitriangular 3x3 matrices.
    Heisenberg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Growth {
    SubExponential,
    Exponential,
}

impl GroupKind {
    pub fn growth(self) -> Growth {
        match self {
            GroupKind::Lattice(_) | GroupKind::Heisenberg => Growth::SubExponential,
            GroupKind::Free(_) => Growth::Exponential,
        }
    }

    pub fn is_commutative(self) -> bool {
        matches!(self, GroupKind::Lattice(_)) || self == GroupKind::Free(1)
    }

    /// Parses `Z^N:<N>`, `F:<N>` or `H3`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "H3" {
            return Ok(GroupKind::Heisenberg);
        }
        let rank = |s: &str| -> Result<usize> {
            let n: usize = s
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad rank in group spec `{spec}`")))?;
            if n == 0 {
                return Err(Error::Parse(format!("rank must be positive in `{spec}`")));
            }
            Ok(n)
        };
        if let Some(n) = spec.strip_prefix("Z^N:") {
            Ok(GroupKind::Lattice(rank(n)?))
        } else if let Some(n) = spec.strip_prefix("F:") {
            Ok(GroupKind::Free(rank(n)?))
        } else {
            Err(Error::Parse(format!(
                "unknown group spec `{spec}` (expected Z^N:<N>, F:<N> or H3)"
            )))
        }
    }

    fn default_radius_cap(self) -> usize {
        match self {
            GroupKind::Free(_) => DEFAULT_FREE_RADIUS_CAP,
            _ => DEFAULT_RADIUS_CAP,
        }
    }
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKind::Lattice(n) => write!(f, "Z^N:{n}"),
            GroupKind::Free(n) => write!(f, "F:{n}"),
            GroupKind::Heisenberg => write!(f, "H3"),
        }
    }
}

/// A group element in canonical form.
///
/// Free-group words are sequences of nonzero letters: `k > 0` is the
/// generator `u_k`, `-k` its inverse. Words are always reduced.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GroupElement {
    Lattice(Vec<i64>),
    Free(Vec<i32>),
    /// `(a, b, c)` standing for the matrix `[[1, a, c], [0, 1, b], [0, 0, 1]]`.
    Heisenberg([i64; 3]),
}

/// Total order key: word length first, then the payload lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrderKey {
    pub level: usize,
    pub payload: Vec<u64>,
}

/// Integers ordered 0, 1, -1, 2, -2, ...
fn zigzag(z: i64) -> u64 {
    if z > 0 {
        2 * z.unsigned_abs() - 1
    } else {
        2 * z.unsigned_abs()
    }
}

/// Letters ordered u1, u1', u2, u2', ...
fn letter_rank(l: i32) -> u64 {
    let g = l.unsigned_abs() as u64 - 1;
    2 * g + u64::from(l < 0)
}

impl GroupElement {
    pub fn identity(kind: GroupKind) -> Self {
        match kind {
            GroupKind::Lattice(n) => GroupElement::Lattice(vec![0; n]),
            GroupKind::Free(_) => GroupElement::Free(Vec::new()),
            GroupKind::Heisenberg => GroupElement::Heisenberg([0; 3]),
        }
    }

    /// Builds a free-group element from arbitrary letters, reducing it.
    pub fn free_word(letters: &[i32]) -> Self {
        let mut out: Vec<i32> = Vec::with_capacity(letters.len());
        for &l in letters {
            assert!(l != 0, "free-group letters are nonzero");
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        GroupElement::Free(out)
    }

    pub fn is_identity(&self) -> bool {
        match self {
            GroupElement::Lattice(v) => v.iter().all(|&x| x == 0),
            GroupElement::Free(w) => w.is_empty(),
            GroupElement::Heisenberg(h) => *h == [0; 3],
        }
    }

    pub fn same_variant(&self, other: &Self) -> bool {
        match (self, other) {
            (GroupElement::Lattice(a), GroupElement::Lattice(b)) => a.len() == b.len(),
            (GroupElement::Free(_), GroupElement::Free(_)) => true,
            (GroupElement::Heisenberg(_), GroupElement::Heisenberg(_)) => true,
            _ => false,
        }
    }

    /// Product without context validation. Panics on mismatched variants;
    /// use [`GroupContext::multiply`] for checked arithmetic.
    pub fn mul(&self, other: &Self) -> Self {
        match (self, other) {
            (GroupElement::Lattice(a), GroupElement::Lattice(b)) => {
                assert_eq!(a.len(), b.len(), "lattice dimension mismatch");
                GroupElement::Lattice(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            (GroupElement::Free(a), GroupElement::Free(b)) => {
                // cancel across the junction, the rest is already reduced
                let mut k = 0;
                while k < a.len() && k < b.len() && a[a.len() - 1 - k] == -b[k] {
                    k += 1;
                }
                let mut w = Vec::with_capacity(a.len() + b.len() - 2 * k);
                w.extend_from_slice(&a[..a.len() - k]);
                w.extend_from_slice(&b[k..]);
                GroupElement::Free(w)
            }
            (GroupElement::Heisenberg([a, b, c]), GroupElement::Heisenberg([a2, b2, c2])) => {
                GroupElement::Heisenberg([a + a2, b + b2, c + c2 + a * b2])
            }
            _ => panic!("multiplying elements of different groups"),
        }
    }

    pub fn inv(&self) -> Self {
        match self {
            GroupElement::Lattice(a) => GroupElement::Lattice(a.iter().map(|x| -x).collect()),
            GroupElement::Free(w) => GroupElement::Free(w.iter().rev().map(|l| -l).collect()),
            GroupElement::Heisenberg([a, b, c]) => GroupElement::Heisenberg([-a, -b, a * b - c]),
        }
    }

    /// Letters of a reduced free word, as one-letter elements.
    pub fn free_letters(&self) -> Option<Vec<GroupElement>> {
        match self {
            GroupElement::Free(w) => Some(w.iter().map(|&l| GroupElement::Free(vec![l])).collect()),
            _ => None,
        }
    }

    fn payload(&self) -> Vec<u64> {
        match self {
            GroupElement::Lattice(v) => v.iter().map(|&x| zigzag(x)).collect(),
            GroupElement::Free(w) => w.iter().map(|&l| letter_rank(l)).collect(),
            GroupElement::Heisenberg(h) => h.iter().map(|&x| zigzag(x)).collect(),
        }
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::Lattice(v) => {
                write!(f, "(")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            GroupElement::Free(w) if w.is_empty() => write!(f, "e"),
            GroupElement::Free(w) => {
                for &l in w {
                    write!(f, "u{}", l.unsigned_abs())?;
                    if l < 0 {
                        write!(f, "'")?;
                    }
                }
                Ok(())
            }
            GroupElement::Heisenberg([a, b, c]) => write!(f, "({a},{b},{c})"),
        }
    }
}

/// Breadth-first word-length table for a generator set.
///
/// `spheres[r]` holds the elements of word length exactly `r`; the layer
/// `r + 1` is `Omega * spheres[r]` minus everything seen before.
#[derive(Debug)]
pub(crate) struct Layers {
    gens: Vec<GroupElement>,
    dist: HashMap<GroupElement, usize>,
    spheres: Vec<Vec<GroupElement>>,
}

impl Layers {
    pub(crate) fn new(identity: GroupElement, gens: Vec<GroupElement>) -> Self {
        let mut dist = HashMap::new();
        dist.insert(identity.clone(), 0);
        Layers { gens, dist, spheres: vec![vec![identity]] }
    }

    pub(crate) fn radius(&self) -> usize {
        self.spheres.len() - 1
    }

    fn extend_once(&mut self) {
        let last = self.spheres.last().expect("sphere 0 always present");
        let r = self.spheres.len();
        let mut next = Vec::new();
        for y in last {
            for w in &self.gens {
                let x = w.mul(y);
                if !self.dist.contains_key(&x) {
                    self.dist.insert(x.clone(), r);
                    next.push(x);
                }
            }
        }
        self.spheres.push(next);
    }

    pub(crate) fn extend_to(&mut self, r: usize) {
        while self.radius() < r {
            self.extend_once();
        }
    }

    pub(crate) fn sphere(&self, r: usize) -> &[GroupElement] {
        &self.spheres[r]
    }

    /// Word length, extending the table up to `cap`.
    pub(crate) fn length(&mut self, x: &GroupElement, cap: usize) -> Option<usize> {
        loop {
            if let Some(&d) = self.dist.get(x) {
                return Some(d);
            }
            if self.radius() >= cap || self.spheres.last().is_some_and(|s| s.is_empty()) {
                return None;
            }
            self.extend_once();
        }
    }
}

/// A finite generator set Omega containing the identity.
#[derive(Clone, Debug)]
pub struct GeneratorSet {
    kind: GroupKind,
    elements: Vec<GroupElement>,
    symmetric: bool,
    user_supplied: bool,
    closed_form: bool,
    bfs_cap: usize,
    layers: Arc<Mutex<Layers>>,
}

impl PartialEq for GeneratorSet {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.elements == other.elements
    }
}

impl GeneratorSet {
    /// The symmetric default: identity plus every standard generator and its
    /// inverse.
    pub fn default_for(kind: GroupKind) -> Self {
        let mut elements = vec![GroupElement::identity(kind)];
        match kind {
            GroupKind::Lattice(n) => {
                for i in 0..n {
                    for s in [1, -1] {
                        let mut v = vec![0; n];
                        v[i] = s;
                        elements.push(GroupElement::Lattice(v));
                    }
                }
            }
            GroupKind::Free(n) => {
                for g in 1..=n as i32 {
                    elements.push(GroupElement::Free(vec![g]));
                    elements.push(GroupElement::Free(vec![-g]));
                }
            }
            GroupKind::Heisenberg => {
                for h in [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]] {
                    elements.push(GroupElement::Heisenberg(h));
                }
            }
        }
        let closed_form = !matches!(kind, GroupKind::Heisenberg);
        Self::build(kind, elements, false, closed_form)
    }

    /// A user-supplied generator set. The identity is added if missing.
    /// Whether the set generates the group as a semigroup is not checked.
    pub fn custom(kind: GroupKind, elements: Vec<GroupElement>) -> Result<Self> {
        let id = GroupElement::identity(kind);
        for x in &elements {
            if !x.same_variant(&id) || !element_fits(kind, x) {
                return Err(Error::ContextMismatch(format!("generator {x} is not an element of {kind}")));
            }
        }
        let mut elements = elements;
        if !elements.contains(&id) {
            elements.push(id);
        }
        let default = Self::default_for(kind);
        let mut sorted = elements.clone();
        sorted.sort_by_cached_key(|x| structural_key(kind, x));
        sorted.dedup();
        if sorted == default.elements {
            return Ok(default);
        }
        Ok(Self::build(kind, elements, true, false))
    }

    fn build(kind: GroupKind, elements: Vec<GroupElement>, user_supplied: bool, closed_form: bool) -> Self {
        let mut elements = elements;
        elements.sort_by_cached_key(|x| structural_key(kind, x));
        elements.dedup();
        let symmetric = elements.iter().all(|x| elements.contains(&x.inv()));
        let id = GroupElement::identity(kind);
        let gens: Vec<GroupElement> = elements.iter().filter(|x| !x.is_identity()).cloned().collect();
        GeneratorSet {
            kind,
            symmetric,
            user_supplied,
            closed_form,
            bfs_cap: DEFAULT_RADIUS_CAP,
            layers: Arc::new(Mutex::new(Layers::new(id, gens))),
            elements,
        }
    }

    /// Sets the radius cap used by the BFS word-length fallback.
    pub fn with_bfs_cap(mut self, cap: usize) -> Self {
        self.bfs_cap = cap;
        self
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    /// All elements of Omega, identity included, in canonical order.
    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    /// Omega without the identity.
    pub fn letters(&self) -> impl Iterator<Item = &GroupElement> {
        self.elements.iter().filter(|x| !x.is_identity())
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// True when semigroup generation was not verified (user-supplied sets).
    pub fn generation_unchecked(&self) -> bool {
        self.user_supplied
    }

    pub fn contains(&self, x: &GroupElement) -> bool {
        self.elements.contains(x)
    }

    /// Smallest `n` with `x` in `Omega_n`.
    pub fn word_length(&self, x: &GroupElement) -> Result<usize> {
        if !x.same_variant(&GroupElement::identity(self.kind)) || !element_fits(self.kind, x) {
            return Err(Error::ContextMismatch(format!("{x} is not an element of {}", self.kind)));
        }
        if self.closed_form {
            return Ok(closed_form_length(x));
        }
        let mut layers = self.layers.lock().expect("word-length table poisoned");
        layers.length(x, self.bfs_cap).ok_or(Error::NotGenerated {
            element: x.to_string(),
            cap: self.bfs_cap,
        })
    }

    pub(crate) fn layers(&self) -> &Arc<Mutex<Layers>> {
        &self.layers
    }

    pub(crate) fn has_closed_form(&self) -> bool {
        self.closed_form
    }
}

fn closed_form_length(x: &GroupElement) -> usize {
    match x {
        GroupElement::Lattice(v) => v.iter().map(|c| c.unsigned_abs() as usize).sum(),
        GroupElement::Free(w) => w.len(),
        GroupElement::Heisenberg(_) => unreachable!("no closed form for H3"),
    }
}

fn element_fits(kind: GroupKind, x: &GroupElement) -> bool {
    match (kind, x) {
        (GroupKind::Lattice(n), GroupElement::Lattice(v)) => v.len() == n,
        (GroupKind::Free(n), GroupElement::Free(w)) => {
            w.iter().all(|&l| l != 0 && l.unsigned_abs() as usize <= n)
                && w.windows(2).all(|p| p[0] != -p[1])
        }
        (GroupKind::Heisenberg, GroupElement::Heisenberg(_)) => true,
        _ => false,
    }
}

/// Order key that does not need a word-length table (used for sorting
/// generator sets before any context exists).
fn structural_key(kind: GroupKind, x: &GroupElement) -> OrderKey {
    let level = match (kind, x) {
        (GroupKind::Heisenberg, GroupElement::Heisenberg(h)) => {
            h.iter().map(|c| c.unsigned_abs() as usize).sum()
        }
        _ => closed_form_length(x),
    };
    OrderKey { level, payload: x.payload() }
}

/// A group together with its active generator set and resource caps.
#[derive(Debug)]
pub struct GroupContext {
    kind: GroupKind,
    generators: GeneratorSet,
    order_metric: GeneratorSet,
    radius_cap: usize,
}

impl GroupContext {
    /// Context with the default symmetric generator set. The radius cap is
    /// read from `FSM_RADIUS_CAP` when set.
    pub fn new(kind: GroupKind) -> Arc<Self> {
        Self::build(kind, GeneratorSet::default_for(kind))
    }

    /// Context with an explicit generator set.
    pub fn with_generators(generators: GeneratorSet) -> Arc<Self> {
        Self::build(generators.kind(), generators)
    }

    pub fn from_spec(spec: &str) -> Result<Arc<Self>> {
        Ok(Self::new(GroupKind::parse(spec)?))
    }

    fn build(kind: GroupKind, generators: GeneratorSet) -> Arc<Self> {
        let radius_cap = std::env::var(RADIUS_CAP_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or_else(|| kind.default_radius_cap());
        let generators = generators.with_bfs_cap(radius_cap.max(DEFAULT_RADIUS_CAP));
        Arc::new(GroupContext {
            kind,
            generators,
            order_metric: GeneratorSet::default_for(kind),
            radius_cap,
        })
    }

    /// Same group and generators with a different radius cap.
    pub fn with_radius_cap(&self, cap: usize) -> Arc<Self> {
        Arc::new(GroupContext {
            kind: self.kind,
            generators: self.generators.clone().with_bfs_cap(cap.max(DEFAULT_RADIUS_CAP)),
            order_metric: self.order_metric.clone(),
            radius_cap: cap,
        })
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn growth(&self) -> Growth {
        self.kind.growth()
    }

    pub fn generators(&self) -> &GeneratorSet {
        &self.generators
    }

    pub fn radius_cap(&self) -> usize {
        self.radius_cap
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::identity(self.kind)
    }

    pub fn contains(&self, x: &GroupElement) -> bool {
        element_fits(self.kind, x)
    }

    fn check(&self, x: &GroupElement) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::ContextMismatch(format!("{x} is not an element of {}", self.kind)))
        }
    }

    pub fn multiply(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        self.check(x)?;
        self.check(y)?;
        Ok(x.mul(y))
    }

    pub fn inverse(&self, x: &GroupElement) -> Result<GroupElement> {
        self.check(x)?;
        Ok(x.inv())
    }

    /// Canonical total-order key: word length for the default generators,
    /// then the payload with integers ordered `0, 1, -1, 2, ...` and letters
    /// ordered `u1, u1', u2, ...`.
    pub fn canonical_key(&self, x: &GroupElement) -> OrderKey {
        let level = if self.order_metric.has_closed_form() {
            closed_form_length(x)
        } else {
            let mut layers = self.order_metric.layers().lock().expect("word-length table poisoned");
            layers
                .length(x, usize::MAX)
                .expect("default generators generate the group")
        };
        OrderKey { level, payload: x.payload() }
    }

    /// Word length with respect to the context's active generator set.
    pub fn word_length(&self, x: &GroupElement) -> Result<usize> {
        self.generators.word_length(x)
    }

    /// Parses an element literal: `(a,b,...)` for Z^N, words such as
    /// `u1u2'` (or `e`) for F_N, `(a,b,c)` for H3.
    pub fn parse_element(&self, s: &str) -> Result<GroupElement> {
        let s = s.trim();
        let el = match self.kind {
            GroupKind::Lattice(n) => {
                let v = parse_tuple(s)?;
                if v.len() != n {
                    return Err(Error::Parse(format!("`{s}` has {} coordinates, expected {n}", v.len())));
                }
                GroupElement::Lattice(v)
            }
            GroupKind::Heisenberg => {
                let v = parse_tuple(s)?;
                if v.len() != 3 {
                    return Err(Error::Parse(format!("`{s}` is not a Heisenberg triple")));
                }
                GroupElement::Heisenberg([v[0], v[1], v[2]])
            }
            GroupKind::Free(_) => GroupElement::free_word(&parse_word(s)?),
        };
        self.check(&el).map_err(|_| Error::Parse(format!("`{s}` is not an element of {}", self.kind)))?;
        Ok(el)
    }
}

fn parse_tuple(s: &str) -> Result<Vec<i64>> {
    let inner = s
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .unwrap_or(s);
    inner
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| Error::Parse(format!("bad integer `{}` in `{s}`", t.trim())))
        })
        .collect()
}

fn parse_word(s: &str) -> Result<Vec<i32>> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() || compact == "e" {
        return Ok(Vec::new());
    }
    let bytes = compact.as_bytes();
    let mut letters = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'u' {
            return Err(Error::Parse(format!("bad free-group word `{s}`")));
        }
        i += 1;
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        let g: i32 = compact[start..i]
            .parse()
            .map_err(|_| Error::Parse(format!("missing generator index in `{s}`")))?;
        if g == 0 {
            return Err(Error::Parse(format!("generator indices start at 1 in `{s}`")));
        }
        if i < bytes.len() && bytes[i] == b'\'' {
            letters.push(-g);
            i += 1;
        } else {
            letters.push(g);
        }
    }
    Ok(letters)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(v: &[i64]) -> GroupElement {
        GroupElement::Lattice(v.to_vec())
    }

    fn h(a: i64, b: i64, c: i64) -> GroupElement {
        GroupElement::Heisenberg([a, b, c])
    }

    /// 3x3 integer matrix product, independent of the triple formula.
    fn mat(x: &GroupElement) -> [[i64; 3]; 3] {
        match x {
            GroupElement::Heisenberg([a, b, c]) => [[1, *a, *c], [0, 1, *b], [0, 0, 1]],
            _ => unreachable!(),
        }
    }

    fn matmul(p: [[i64; 3]; 3], q: [[i64; 3]; 3]) -> [[i64; 3]; 3] {
        let mut r = [[0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = (0..3).map(|k| p[i][k] * q[k][j]).sum();
            }
        }
        r
    }

    #[test]
    fn multiply_examples() {
        let z2 = GroupContext::new(GroupKind::Lattice(2));
        assert_eq!(z2.multiply(&z(&[1, 0]), &z(&[0, 2])).unwrap(), z(&[1, 2]));

        let f2 = GroupContext::new(GroupKind::Free(2));
        let uv = f2.parse_element("u1u2").unwrap();
        let vinv_u = f2.parse_element("u2'u1").unwrap();
        assert_eq!(f2.multiply(&uv, &vinv_u).unwrap(), f2.parse_element("u1u1").unwrap());

        let hp = h(1, 0, 0).mul(&h(0, 1, 0));
        assert_eq!(hp, h(1, 1, 1));
        assert_eq!(mat(&hp), matmul(mat(&h(1, 0, 0)), mat(&h(0, 1, 0))));
    }

    #[test]
    fn heisenberg_matches_matrix_product() {
        let samples = [h(1, 2, 3), h(-2, 5, 0), h(0, -1, 7), h(4, 4, -4)];
        for x in &samples {
            for y in &samples {
                assert_eq!(mat(&x.mul(y)), matmul(mat(x), mat(y)));
            }
        }
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(z(&[3]).inv(), z(&[-3]));
        let f2 = GroupContext::new(GroupKind::Free(2));
        let w = f2.parse_element("u1u2u1'").unwrap();
        assert_eq!(w.inv(), f2.parse_element("u1u2'u1'").unwrap());
        assert_eq!(h(1, 1, 1).inv(), h(-1, -1, 0));
        let id = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
        assert_eq!(matmul(mat(&h(1, 1, 1)), mat(&h(-1, -1, 0))), id);
    }

    #[test]
    fn mixed_context_is_rejected() {
        let z2 = GroupContext::new(GroupKind::Lattice(2));
        assert!(matches!(
            z2.multiply(&z(&[1, 0]), &z(&[1])),
            Err(Error::ContextMismatch(_))
        ));
        assert!(z2.multiply(&z(&[1, 0]), &h(0, 0, 0)).is_err());
        let f2 = GroupContext::new(GroupKind::Free(2));
        assert!(f2.inverse(&GroupElement::Free(vec![3])).is_err());
    }

    #[test]
    fn canonical_key_examples() {
        let z1 = GroupContext::new(GroupKind::Lattice(1));
        let keys: Vec<_> = [0, 1, -1, 2].iter().map(|&a| z1.canonical_key(&z(&[a]))).collect();
        assert!(keys.windows(2).all(|p| p[0] < p[1]));

        let f2 = GroupContext::new(GroupKind::Free(2));
        let e = f2.identity();
        let u = f2.parse_element("u1").unwrap();
        let ui = f2.parse_element("u1'").unwrap();
        assert!(f2.canonical_key(&e) < f2.canonical_key(&u));
        assert!(f2.canonical_key(&u) < f2.canonical_key(&ui));

        let z2 = GroupContext::new(GroupKind::Lattice(2));
        assert!(z2.canonical_key(&z(&[1, 0])) < z2.canonical_key(&z(&[1, 1])));
    }

    #[test]
    fn word_length_examples() {
        let z1 = GroupContext::new(GroupKind::Lattice(1));
        assert_eq!(z1.word_length(&z(&[5])).unwrap(), 5);
        let f2 = GroupContext::new(GroupKind::Free(2));
        assert_eq!(f2.word_length(&f2.parse_element("u1u2u1'").unwrap()).unwrap(), 3);
        let h3 = GroupContext::new(GroupKind::Heisenberg);
        assert_eq!(h3.word_length(&h(0, 0, 1)).unwrap(), 4);
        assert_eq!(h3.word_length(&h(1, 1, 1)).unwrap(), 2);
    }

    /// Independent BFS from the identity over the Cayley graph.
    #[test]
    fn heisenberg_commutator_length_by_bfs() {
        use std::collections::{HashSet, VecDeque};
        let gens = [h(1, 0, 0), h(-1, 0, 0), h(0, 1, 0), h(0, -1, 0)];
        let target = h(0, 0, 1);
        let mut seen = HashSet::from([h(0, 0, 0)]);
        let mut queue = VecDeque::from([(h(0, 0, 0), 0usize)]);
        let mut found = None;
        while let Some((x, d)) = queue.pop_front() {
            if x == target {
                found = Some(d);
                break;
            }
            for g in &gens {
                let y = g.mul(&x);
                if seen.insert(y.clone()) {
                    queue.push_back((y, d + 1));
                }
            }
        }
        assert_eq!(found, Some(4));
    }

    #[test]
    fn bfs_cap_reports_not_generated() {
        // only positive steps: -1 is never reached
        let set = GeneratorSet::custom(GroupKind::Lattice(1), vec![z(&[1])])
            .unwrap()
            .with_bfs_cap(10);
        assert!(set.generation_unchecked());
        assert!(!set.is_symmetric());
        assert_eq!(set.word_length(&z(&[7])).unwrap(), 7);
        assert!(matches!(set.word_length(&z(&[-1])), Err(Error::NotGenerated { .. })));
    }

    #[test]
    fn custom_default_is_recognized() {
        let set = GeneratorSet::custom(GroupKind::Lattice(1), vec![z(&[-1]), z(&[1])]).unwrap();
        assert!(!set.generation_unchecked());
        assert_eq!(set, GeneratorSet::default_for(GroupKind::Lattice(1)));
    }

    #[test]
    fn parse_and_display_round_trip() {
        let f3 = GroupContext::new(GroupKind::Free(3));
        let w = f3.parse_element("u1 u3' u2").unwrap();
        assert_eq!(w.to_string(), "u1u3'u2");
        assert_eq!(f3.parse_element("u1u1'").unwrap(), f3.identity());
        assert!(f3.parse_element("u4").is_err());
        assert!(f3.parse_element("x1").is_err());
        let h3 = GroupContext::new(GroupKind::Heisenberg);
        assert_eq!(h3.parse_element("(1,-2,3)").unwrap(), h(1, -2, 3));
        assert!(GroupKind::parse("Z^N:0").is_err());
        assert_eq!(GroupKind::parse("F:2").unwrap(), GroupKind::Free(2));
    }
}
