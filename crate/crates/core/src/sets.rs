//! Finite subsets of a group, word balls, Omega-interiors and boundaries,
//! translations and finite-horizon set limits.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::group::{GeneratorSet, GroupContext, GroupElement, Layers};

/// A finite set of group elements kept in canonical order.
#[derive(Clone)]
pub struct FiniteSubset {
    ctx: Arc<GroupContext>,
    elems: Vec<GroupElement>,
    index: HashMap<GroupElement, usize>,
}

impl fmt::Debug for FiniteSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.elems.iter().map(|x| x.to_string())).finish()
    }
}

impl PartialEq for FiniteSubset {
    fn eq(&self, other: &Self) -> bool {
        self.ctx.kind() == other.ctx.kind() && self.elems == other.elems
    }
}

impl Eq for FiniteSubset {}

impl FiniteSubset {
    pub fn empty(ctx: &Arc<GroupContext>) -> Self {
        FiniteSubset { ctx: ctx.clone(), elems: Vec::new(), index: HashMap::new() }
    }

    /// Collects, validates, sorts and deduplicates.
    pub fn new<I>(ctx: &Arc<GroupContext>, elems: I) -> Result<Self>
    where
        I: IntoIterator<Item = GroupElement>,
    {
        let elems: Vec<GroupElement> = elems.into_iter().collect();
        if let Some(bad) = elems.iter().find(|x| !ctx.contains(x)) {
            return Err(Error::ContextMismatch(format!("{bad} is not an element of {}", ctx.kind())));
        }
        Ok(Self::from_unsorted(ctx, elems))
    }

    pub(crate) fn from_unsorted(ctx: &Arc<GroupContext>, mut elems: Vec<GroupElement>) -> Self {
        elems.sort_by_cached_key(|x| ctx.canonical_key(x));
        elems.dedup();
        Self::from_sorted(ctx, elems)
    }

    fn from_sorted(ctx: &Arc<GroupContext>, elems: Vec<GroupElement>) -> Self {
        let index = elems.iter().enumerate().map(|(i, x)| (x.clone(), i)).collect();
        FiniteSubset { ctx: ctx.clone(), elems, index }
    }

    pub fn context(&self) -> &Arc<GroupContext> {
        &self.ctx
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elems
    }

    pub fn iter(&self) -> std::slice::Iter<'_, GroupElement> {
        self.elems.iter()
    }

    pub fn contains(&self, x: &GroupElement) -> bool {
        self.index.contains_key(x)
    }

    /// Position of `x` in the canonical basis order.
    pub fn position(&self, x: &GroupElement) -> Option<usize> {
        self.index.get(x).copied()
    }

    pub fn is_subset(&self, other: &FiniteSubset) -> bool {
        self.elems.iter().all(|x| other.contains(x))
    }

    pub fn is_disjoint(&self, other: &FiniteSubset) -> bool {
        self.elems.iter().all(|x| !other.contains(x))
    }

    pub fn union(&self, other: &FiniteSubset) -> FiniteSubset {
        let mut all = self.elems.clone();
        all.extend(other.elems.iter().filter(|x| !self.contains(x)).cloned());
        Self::from_unsorted(&self.ctx, all)
    }

    pub fn intersection(&self, other: &FiniteSubset) -> FiniteSubset {
        let kept = self.elems.iter().filter(|x| other.contains(x)).cloned().collect();
        Self::from_sorted(&self.ctx, kept)
    }

    pub fn difference(&self, other: &FiniteSubset) -> FiniteSubset {
        let kept = self.elems.iter().filter(|x| !other.contains(x)).cloned().collect();
        Self::from_sorted(&self.ctx, kept)
    }

    /// Subset selected by a predicate, order preserved.
    pub fn filter(&self, mut keep: impl FnMut(&GroupElement) -> bool) -> FiniteSubset {
        let kept = self.elems.iter().filter(|x| keep(x)).cloned().collect();
        Self::from_sorted(&self.ctx, kept)
    }

    /// `A s = { a s : a in A }`.
    pub fn translate_right(&self, s: &GroupElement) -> FiniteSubset {
        Self::from_unsorted(&self.ctx, self.elems.iter().map(|a| a.mul(s)).collect())
    }

    /// `s A = { s a : a in A }`.
    pub fn translate_left(&self, s: &GroupElement) -> FiniteSubset {
        Self::from_unsorted(&self.ctx, self.elems.iter().map(|a| s.mul(a)).collect())
    }

    /// One element literal per line, canonical order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for x in &self.elems {
            out.push_str(&x.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses the one-literal-per-line format; blank lines and `#` comments
    /// are skipped.
    pub fn parse_text(ctx: &Arc<GroupContext>, text: &str) -> Result<Self> {
        let mut elems = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let x = ctx
                .parse_element(line)
                .map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?;
            elems.push(x);
        }
        Ok(Self::from_unsorted(ctx, elems))
    }
}

/// Lazily extended word balls `Omega_0 ⊆ Omega_1 ⊆ ...`.
pub struct BallCache {
    ctx: Arc<GroupContext>,
    gens: GeneratorSet,
    layers: Layers,
    balls: Vec<FiniteSubset>,
    cap: usize,
    ordered_by_length: bool,
}

impl BallCache {
    /// Balls of the context's generator set, capped at its radius cap.
    pub fn new(ctx: &Arc<GroupContext>) -> Self {
        Self::with_generators(ctx, ctx.generators().clone(), ctx.radius_cap())
    }

    pub fn with_generators(ctx: &Arc<GroupContext>, gens: GeneratorSet, cap: usize) -> Self {
        let letters: Vec<GroupElement> = gens.letters().cloned().collect();
        let ordered_by_length = gens == GeneratorSet::default_for(ctx.kind());
        BallCache {
            ctx: ctx.clone(),
            layers: Layers::new(ctx.identity(), letters),
            gens,
            ordered_by_length,
            balls: Vec::new(),
            cap,
        }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn generators(&self) -> &GeneratorSet {
        &self.gens
    }

    pub fn context(&self) -> &Arc<GroupContext> {
        &self.ctx
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// `Omega_n`, the words of length at most `n`.
    pub fn ball(&mut self, n: usize) -> Result<&FiniteSubset> {
        if n > self.cap {
            return Err(Error::RadiusCap { requested: n, cap: self.cap });
        }
        while self.balls.len() <= n {
            let r = self.balls.len();
            self.layers.extend_to(r);
            let sphere = self.layers.sphere(r).to_vec();
            let ball = match self.balls.last() {
                None => FiniteSubset::from_unsorted(&self.ctx, sphere),
                Some(prev) if self.ordered_by_length => {
                    // canonical order is length-first, so the new sphere sorts after Omega_{r-1}
                    let mut shell = sphere;
                    shell.sort_by_cached_key(|x| self.ctx.canonical_key(x));
                    let mut elems = prev.elements().to_vec();
                    elems.extend(shell);
                    FiniteSubset::from_sorted(&self.ctx, elems)
                }
                Some(prev) => {
                    let mut elems = sphere;
                    elems.extend(prev.elements().iter().cloned());
                    FiniteSubset::from_unsorted(&self.ctx, elems)
                }
            };
            self.balls.push(ball);
        }
        Ok(&self.balls[n])
    }

    /// `Omega_n \ Omega_{n-1}` (and `{e}` for `n = 0`).
    pub fn sphere(&mut self, n: usize) -> Result<FiniteSubset> {
        let outer = self.ball(n)?.clone();
        if n == 0 {
            return Ok(outer);
        }
        let inner = self.ball(n - 1)?;
        Ok(outer.difference(inner))
    }
}

/// `∩_{ω∈Ω} (A ∩ ω⁻¹A)`, built from explicit translates and intersections.
/// The identity contributes `A ∩ A = A` and is skipped.
pub fn omega_interior(a: &FiniteSubset, omega: &GeneratorSet) -> FiniteSubset {
    let mut acc = a.clone();
    for w in omega.letters() {
        if acc.is_empty() {
            break;
        }
        let winv = w.inv();
        let shifted: HashSet<GroupElement> = a.iter().map(|x| winv.mul(x)).collect();
        acc = acc.filter(|x| shifted.contains(x));
    }
    acc
}

/// `∂_Ω A = A \ int_Ω A`; always a subset of `A`.
pub fn omega_boundary(a: &FiniteSubset, omega: &GeneratorSet) -> FiniteSubset {
    a.difference(&omega_interior(a, omega))
}

pub fn translate_right(a: &FiniteSubset, s: &GroupElement) -> FiniteSubset {
    a.translate_right(s)
}

pub fn translate_left(a: &FiniteSubset, s: &GroupElement) -> FiniteSubset {
    a.translate_left(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Constant,
    Increasing,
    Decreasing,
    NonMonotone,
}

/// Finite-horizon approximation of `limsup` and `liminf` of a set sequence
/// observed through a finite window.
///
/// With `m` terms the tail is the last `⌈m/2⌉` of them. `limsup` collects
/// window points lying in some tail term, `liminf` the points lying in every
/// tail term; these are the `k`-th stages of the defining union and
/// intersection with `k` at the start of the tail.
#[derive(Clone, Debug)]
pub struct WindowedLimits {
    pub limsup: FiniteSubset,
    pub liminf: FiniteSubset,
    /// Number of terms observed.
    pub terms: usize,
    /// 0-based index of the first tail term.
    pub tail_start: usize,
    /// Monotonicity of the window-restricted sequence over all terms.
    pub monotonicity: Monotonicity,
}

impl WindowedLimits {
    /// True when the window values are exact for the true set limits:
    /// monotone sequences with agreeing limsup and liminf.
    pub fn converged(&self) -> bool {
        self.monotonicity != Monotonicity::NonMonotone && self.limsup == self.liminf
    }
}

/// Windowed limits from a membership predicate `member(term_index, x)`.
/// Used when the terms are too large to enumerate.
pub fn windowed_limits_by<F>(window: &FiniteSubset, terms: usize, mut member: F) -> Result<WindowedLimits>
where
    F: FnMut(usize, &GroupElement) -> Result<bool>,
{
    if terms == 0 {
        return Err(Error::Argument("set limits of an empty sequence".into()));
    }
    let tail_start = terms - terms.div_ceil(2);
    let mut rows: Vec<Vec<bool>> = Vec::with_capacity(window.len());
    for x in window.iter() {
        let row = (0..terms).map(|n| member(n, x)).collect::<Result<Vec<bool>>>()?;
        rows.push(row);
    }
    let limsup = window.elements().iter().zip(&rows).filter(|(_, r)| r[tail_start..].iter().any(|&b| b));
    let limsup = FiniteSubset::from_sorted(window.context(), limsup.map(|(x, _)| x.clone()).collect());
    let liminf = window.elements().iter().zip(&rows).filter(|(_, r)| r[tail_start..].iter().all(|&b| b));
    let liminf = FiniteSubset::from_sorted(window.context(), liminf.map(|(x, _)| x.clone()).collect());

    let mut grows = false;
    let mut shrinks = false;
    for r in &rows {
        for p in r.windows(2) {
            match (p[0], p[1]) {
                (false, true) => grows = true,
                (true, false) => shrinks = true,
                _ => {}
            }
        }
    }
    let monotonicity = match (grows, shrinks) {
        (false, false) => Monotonicity::Constant,
        (true, false) => Monotonicity::Increasing,
        (false, true) => Monotonicity::Decreasing,
        (true, true) => Monotonicity::NonMonotone,
    };
    Ok(WindowedLimits { limsup, liminf, terms, tail_start, monotonicity })
}

/// Windowed limits of an explicitly given sequence of finite sets.
pub fn windowed_limits(seq: &[FiniteSubset], window: &FiniteSubset) -> Result<WindowedLimits> {
    windowed_limits_by(window, seq.len(), |n, x| Ok(seq[n].contains(x)))
}

pub fn set_limsup_window(seq: &[FiniteSubset], window: &FiniteSubset) -> Result<FiniteSubset> {
    Ok(windowed_limits(seq, window)?.limsup)
}

pub fn set_liminf_window(seq: &[FiniteSubset], window: &FiniteSubset) -> Result<FiniteSubset> {
    Ok(windowed_limits(seq, window)?.liminf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupKind;

    fn zset(ctx: &Arc<GroupContext>, r: std::ops::RangeInclusive<i64>) -> FiniteSubset {
        FiniteSubset::new(ctx, r.map(|a| GroupElement::Lattice(vec![a]))).unwrap()
    }

    #[test]
    fn ball_examples() {
        let z1 = GroupContext::new(GroupKind::Lattice(1));
        let mut balls = BallCache::new(&z1);
        assert_eq!(balls.ball(3).unwrap(), &zset(&z1, -3..=3));
        assert_eq!(balls.ball(0).unwrap().elements(), &[z1.identity()]);

        let f2 = GroupContext::new(GroupKind::Free(2));
        let mut fb = BallCache::new(&f2);
        assert_eq!(fb.ball(2).unwrap().len(), 17);
        assert_eq!(fb.ball(0).unwrap().len(), 1);

        let h3 = GroupContext::new(GroupKind::Heisenberg);
        let mut hb = BallCache::new(&h3);
        assert_eq!(hb.ball(0).unwrap().elements(), &[h3.identity()]);
    }

    /// Reduced words of length <= n by direct enumeration.
    #[test]
    fn free_ball_sizes_match_reduced_word_count() {
        fn count(n: usize) -> usize {
            let mut words: Vec<Vec<i32>> = vec![vec![]];
            let mut all = 1;
            for _ in 0..n {
                let mut next = Vec::new();
                for w in &words {
                    for l in [1, -1, 2, -2] {
                        if w.last() != Some(&-l) {
                            let mut v = w.clone();
                            v.push(l);
                            next.push(v);
                        }
                    }
                }
                all += next.len();
                words = next;
            }
            all
        }
        let f2 = GroupContext::new(GroupKind::Free(2));
        let mut fb = BallCache::new(&f2);
        for n in 0..=5 {
            assert_eq!(fb.ball(n).unwrap().len(), count(n));
        }
    }

    #[test]
    fn ball_radius_cap() {
        let f2 = GroupContext::new(GroupKind::Free(2));
        let mut fb = BallCache::new(&f2).with_cap(3);
        assert!(matches!(fb.ball(4), Err(Error::RadiusCap { requested: 4, cap: 3 })));
    }

    #[test]
    fn nested_balls_are_leading_blocks() {
        let z2 = GroupContext::new(GroupKind::Lattice(2));
        let mut balls = BallCache::new(&z2);
        let b3 = balls.ball(3).unwrap().clone();
        let b2 = balls.ball(2).unwrap().clone();
        assert_eq!(&b3.elements()[..b2.len()], b2.elements());
    }

    #[test]
    fn interior_and_boundary_examples() {
        let z1 = GroupContext::new(GroupKind::Lattice(1));
        let omega = z1.generators().clone();
        let a = zset(&z1, -3..=3);
        assert_eq!(omega_interior(&a, &omega), zset(&z1, -2..=2));
        let b = omega_boundary(&a, &omega);
        assert_eq!(b.elements(), &[GroupElement::Lattice(vec![3]), GroupElement::Lattice(vec![-3])]);
        let empty = FiniteSubset::empty(&z1);
        assert!(omega_interior(&empty, &omega).is_empty());
        assert!(omega_boundary(&empty, &omega).is_empty());

        let trivial = GeneratorSet::custom(z1.kind(), vec![]).unwrap();
        assert!(omega_boundary(&a, &trivial).is_empty());

        let z2 = GroupContext::new(GroupKind::Lattice(2));
        let mut balls = BallCache::new(&z2);
        let b2 = balls.ball(2).unwrap().clone();
        let b1 = balls.ball(1).unwrap().clone();
        let bd = omega_boundary(&b2, z2.generators());
        assert_eq!(bd.len(), 8);
        assert_eq!(bd, b2.difference(&b1));

        let f2 = GroupContext::new(GroupKind::Free(2));
        let mut fb = BallCache::new(&f2);
        let f2b = fb.ball(2).unwrap().clone();
        let f1b = fb.ball(1).unwrap().clone();
        let int = omega_interior(&f2b, f2.generators());
        assert!(f1b.is_subset(&int) && int.is_subset(&f2b));
    }

    #[test]
    fn translation_examples() {
        let z1 = GroupContext::new(GroupKind::Lattice(1));
        let a = zset(&z1, 0..=2);
        let five = GroupElement::Lattice(vec![5]);
        assert_eq!(a.translate_right(&five), zset(&z1, 5..=7));
        assert_eq!(a.translate_left(&five), a.translate_right(&five));
        assert_eq!(a.translate_right(&z1.identity()), a);

        let f2 = GroupContext::new(GroupKind::Free(2));
        let p = |s: &str| f2.parse_element(s).unwrap();
        let eu = FiniteSubset::new(&f2, [p("e"), p("u1")]).unwrap();
        assert_eq!(eu.translate_right(&p("u2")), FiniteSubset::new(&f2, [p("u2"), p("u1u2")]).unwrap());
        let v = FiniteSubset::new(&f2, [p("u2")]).unwrap();
        assert_eq!(v.translate_left(&p("u1")).elements(), &[p("u1u2")]);
        assert_eq!(v.translate_right(&p("u1")).elements(), &[p("u2u1")]);
        assert_eq!(eu.translate_left(&f2.identity()), eu);
    }

    #[test]
    fn windowed_limit_examples() {
        let z1 = GroupContext::new(GroupKind::Lattice(1));
        let window = zset(&z1, -5..=5);
        let seq: Vec<_> = (1..=10).map(|n| zset(&z1, -n..=n)).collect();
        let lim = windowed_limits(&seq, &window).unwrap();
        assert_eq!(lim.limsup, window);
        assert_eq!(lim.liminf, window);
        assert_eq!(lim.monotonicity, Monotonicity::Increasing);

        let w01 = zset(&z1, 0..=1);
        let alt: Vec<_> = (0..10).map(|n| zset(&z1, (n % 2)..=(n % 2))).collect();
        let lim = windowed_limits(&alt, &w01).unwrap();
        assert_eq!(lim.limsup, w01);
        assert!(lim.liminf.is_empty());
        assert_eq!(lim.monotonicity, Monotonicity::NonMonotone);
        assert!(!lim.converged());

        // Omega_n eta_n with eta_n = -n is {-2n..0}
        let window = zset(&z1, -10..=10);
        let shifted: Vec<_> = (1..=10).map(|n| zset(&z1, -2 * n..=0)).collect();
        let lim = windowed_limits(&shifted, &window).unwrap();
        assert_eq!(lim.limsup, zset(&z1, -10..=0));
        assert_eq!(lim.liminf, zset(&z1, -10..=0));

        assert!(matches!(windowed_limits(&[], &window), Err(Error::Argument(_))));
    }

    #[test]
    fn text_round_trip() {
        let z2 = GroupContext::new(GroupKind::Lattice(2));
        let mut balls = BallCache::new(&z2);
        let b = balls.ball(2).unwrap().clone();
        let text = b.to_text();
        assert_eq!(text.lines().count(), 13);
        assert_eq!(FiniteSubset::parse_text(&z2, &text).unwrap(), b);
        assert!(FiniteSubset::parse_text(&z2, "(1,2,3)\n").is_err());
    }
}
