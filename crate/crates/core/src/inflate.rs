//! Inflating sequences: shifts `v_n` that make the translates `Y_n v_n⁻¹`
//! pairwise disjoint, the block-diagonal operator `Op(𝐀) + P_{Γ′}` on a
//! finite window and a finite-window comparison with stability scans.

use std::collections::HashSet;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{GeneratorSet, GroupContext, GroupElement, Layers};
use crate::operator::{band_section, BandOperator, CMatrix, SectionMatrix};
use crate::sets::{BallCache, FiniteSubset};
use crate::spectral::{self, ScanThresholds, Verdict};

/// Default number of candidates examined per block.
pub const DEFAULT_POOL_LIMIT: usize = 1 << 20;

/// Γ enumerated in canonical order (length first, then payload), sphere by
/// sphere, stopping after `limit` elements.
pub struct Pool {
    ctx: Arc<GroupContext>,
    layers: Layers,
    elems: Vec<GroupElement>,
    radius: Option<usize>,
    limit: usize,
    exhausted: bool,
}

impl Pool {
    pub fn canonical(ctx: &Arc<GroupContext>, limit: usize) -> Self {
        let gens = GeneratorSet::default_for(ctx.kind());
        Pool {
            ctx: ctx.clone(),
            layers: Layers::new(ctx.identity(), gens.letters().cloned().collect()),
            elems: Vec::new(),
            radius: None,
            limit,
            exhausted: false,
        }
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    /// The `i`-th pool element, enumerating further spheres on demand.
    pub fn get(&mut self, i: usize) -> Option<&GroupElement> {
        while self.elems.len() <= i && self.elems.len() < self.limit && !self.exhausted {
            let r = self.radius.map_or(0, |r| r + 1);
            self.layers.extend_to(r);
            let mut shell = self.layers.sphere(r).to_vec();
            if shell.is_empty() {
                self.exhausted = true;
                break;
            }
            shell.sort_by_cached_key(|x| self.ctx.canonical_key(x));
            let room = self.limit - self.elems.len();
            self.elems.extend(shell.into_iter().take(room));
            self.radius = Some(r);
        }
        self.elems.get(i)
    }
}

/// Shifts `v_n` with pairwise disjoint `T_n v_n⁻¹`, where `T_n` is either
/// `Y_n` or its enlargement.
#[derive(Clone, Debug)]
pub struct InflatingSequence {
    pub shifts: Vec<GroupElement>,
    /// `Y_n v_n⁻¹`.
    pub placed: Vec<FiniteSubset>,
    /// `T_n v_n⁻¹`, the sets kept disjoint.
    pub reserved: Vec<FiniteSubset>,
}

impl InflatingSequence {
    /// Exact pairwise check of `T_i v_i⁻¹ ∩ T_j v_j⁻¹ = ∅`.
    pub fn is_pairwise_disjoint(&self) -> bool {
        self.reserved
            .iter()
            .enumerate()
            .all(|(i, a)| self.reserved[i + 1..].iter().all(|b| a.is_disjoint(b)))
    }
}

/// `(Y ∪ Ω_n)(Y ∪ Ω_n)⁻¹(Y ∪ Ω_n)`.
pub fn enlarged_target(y: &FiniteSubset, omega_n: &FiniteSubset) -> FiniteSubset {
    let s = y.union(omega_n);
    let mut quotients: HashSet<GroupElement> = HashSet::new();
    for a in s.iter() {
        for b in s.iter() {
            quotients.insert(a.mul(&b.inv()));
        }
    }
    let mut out: HashSet<GroupElement> = HashSet::new();
    for q in &quotients {
        for c in s.iter() {
            out.insert(q.mul(c));
        }
    }
    FiniteSubset::from_unsorted(y.context(), out.into_iter().collect())
}

/// Greedy placement: block `n` takes the first pool element `v` for which
/// `T_n v⁻¹` misses every earlier block. With `enlarged`, `T_n` is the
/// enlargement of `Y_n` by `Ω_n` (`n` is the 1-based block number).
pub fn greedy_inflating(
    ys: &[FiniteSubset],
    pool: &mut Pool,
    m: usize,
    enlarged: bool,
) -> Result<InflatingSequence> {
    if m > ys.len() {
        return Err(Error::Argument(format!("{m} blocks requested from {} sets", ys.len())));
    }
    let mut balls = match ys.first() {
        Some(y) if enlarged => Some(BallCache::new(y.context())),
        _ => None,
    };
    let mut occupied: HashSet<GroupElement> = HashSet::new();
    let mut seq = InflatingSequence { shifts: Vec::new(), placed: Vec::new(), reserved: Vec::new() };
    for (block, y) in ys.iter().take(m).enumerate() {
        let target = match balls.as_mut() {
            Some(b) => enlarged_target(y, b.ball(block + 1)?),
            None => y.clone(),
        };
        let mut examined = 0;
        let v = loop {
            let Some(v) = pool.get(examined).cloned() else {
                return Err(Error::PoolExhausted { block: block + 1, examined });
            };
            examined += 1;
            let vinv = v.inv();
            if target.iter().all(|a| !occupied.contains(&a.mul(&vinv))) {
                break v;
            }
        };
        let vinv = v.inv();
        let reserved = target.translate_right(&vinv);
        occupied.extend(reserved.iter().cloned());
        seq.placed.push(y.translate_right(&vinv));
        seq.reserved.push(reserved);
        seq.shifts.push(v);
    }
    Ok(seq)
}

/// `Op(𝐀) + P_{Γ′}` compressed to a window.
#[derive(Clone, Debug)]
pub struct Assembly {
    pub matrix: SectionMatrix,
    /// 0-based indices of the blocks lying inside the window.
    pub included: Vec<usize>,
    /// `|W ∩ Γ′|`.
    pub complement: usize,
}

/// Places each `A_n` (a section on `Y_n`) on `Y_n v_n⁻¹` via
/// `(a, b) ↦ (a v_n⁻¹, b v_n⁻¹)` and puts the identity on `W ∩ Γ′`.
/// Blocks outside `W` are skipped; blocks meeting `W` only partially are
/// reported by 1-based number.
pub fn assemble_op(blocks: &[SectionMatrix], seq: &InflatingSequence, window: &FiniteSubset) -> Result<Assembly> {
    if blocks.len() > seq.placed.len() {
        return Err(Error::Argument("more blocks than placed shifts".into()));
    }
    let mut included = Vec::new();
    let mut clipped = Vec::new();
    for (i, placed) in seq.placed.iter().enumerate().take(blocks.len()) {
        if placed.is_subset(window) {
            included.push(i);
        } else if !placed.is_disjoint(window) {
            clipped.push(i + 1);
        }
    }
    if !clipped.is_empty() {
        return Err(Error::WindowClip(clipped));
    }
    let mut entries = CMatrix::zeros(window.len(), window.len());
    let mut covered = vec![false; window.len()];
    for &i in &included {
        let a = &blocks[i];
        let vinv = seq.shifts[i].inv();
        let idx: Vec<usize> = a
            .basis()
            .iter()
            .map(|x| window.position(&x.mul(&vinv)).expect("block inside window"))
            .collect();
        for (c, &wc) in idx.iter().enumerate() {
            covered[wc] = true;
            for (r, &wr) in idx.iter().enumerate() {
                entries[(wr, wc)] = a.entries()[(r, c)];
            }
        }
    }
    let mut complement = 0;
    for (k, hit) in covered.iter().enumerate() {
        if !hit {
            entries[(k, k)] = 1.0.into();
            complement += 1;
        }
    }
    Ok(Assembly { matrix: SectionMatrix::new(window.clone(), entries)?, included, complement })
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowInfo {
    pub radius: Option<usize>,
    pub size: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProxyComparison {
    pub window: WindowInfo,
    pub blocks_included: usize,
    pub sigma_min_full: f64,
    pub sigma_min_minus_last: f64,
    pub scan_verdict: Verdict,
    pub proxy_verdict: Verdict,
    pub agree: bool,
    pub note: String,
}

/// Options for [`fredholm_proxy_compare`].
#[derive(Clone, Debug)]
pub struct ProxyOptions {
    pub blocks: usize,
    pub enlarged: bool,
    pub pool_limit: usize,
    pub thresholds: ScanThresholds,
    /// Explicit window; by default the smallest ball around `e` containing
    /// every placed block.
    pub window: Option<FiniteSubset>,
}

impl Default for ProxyOptions {
    fn default() -> Self {
        ProxyOptions {
            blocks: 20,
            enlarged: false,
            pool_limit: DEFAULT_POOL_LIMIT,
            thresholds: ScanThresholds::default(),
            window: None,
        }
    }
}

/// Smallest ball (for the standard generators) containing all given sets.
/// Its radius is dictated by the placement and is not bounded by the radius
/// cap; the dimension is bounded by `max_dim` instead.
fn covering_ball(ctx: &Arc<GroupContext>, sets: &[FiniteSubset], max_dim: usize) -> Result<(usize, FiniteSubset)> {
    let mut radius = 0;
    for s in sets {
        for x in s.iter() {
            radius = radius.max(ctx.word_length(x)?);
        }
    }
    let gens = GeneratorSet::default_for(ctx.kind());
    let mut balls = BallCache::with_generators(ctx, gens, radius);
    for r in 0..=radius {
        if balls.ball(r)?.len() > max_dim {
            return Err(Error::Resource(format!("window ball of radius {r} exceeds {max_dim} sites")));
        }
    }
    Ok((radius, balls.ball(radius)?.clone()))
}

/// Compares the smallest singular value of the assembled block operator on a
/// finite window with the verdict of a stability scan over the same sections.
/// The proxy verdict classifies `sigma_min_full` against `tau_stab`.
pub fn fredholm_proxy_compare(
    op: &BandOperator,
    sections: &[(usize, FiniteSubset)],
    opts: &ProxyOptions,
) -> Result<ProxyComparison> {
    let first = sections.first().ok_or_else(|| Error::Argument("no sections".into()))?;
    let ctx = first.1.context().clone();
    let m = opts.blocks.min(sections.len());
    let ys: Vec<FiniteSubset> = sections.iter().map(|(_, y)| y.clone()).collect();
    let total: usize = ys[..m].iter().map(FiniteSubset::len).sum();
    let explicit = opts.window.as_ref().map_or(0, FiniteSubset::len);
    if total.max(explicit) > opts.thresholds.max_dim {
        return Err(Error::Resource(format!(
            "{} sites needed for the window, limit {}",
            total.max(explicit),
            opts.thresholds.max_dim
        )));
    }
    let mut pool = Pool::canonical(&ctx, opts.pool_limit);
    let seq = greedy_inflating(&ys, &mut pool, m, opts.enlarged)?;
    let blocks = ys[..m].iter().map(|y| band_section(op, y)).collect::<Result<Vec<_>>>()?;

    let (radius, window) = match &opts.window {
        Some(w) => (None, w.clone()),
        None => {
            let (r, w) = covering_ball(&ctx, &seq.placed, opts.thresholds.max_dim)?;
            (Some(r), w)
        }
    };
    if window.len() > opts.thresholds.max_dim {
        return Err(Error::Resource(format!("window has {} sites, limit {}", window.len(), opts.thresholds.max_dim)));
    }
    let asm = assemble_op(&blocks, &seq, &window)?;
    let sigma_min_full = spectral::sigma_min(&asm.matrix)?;
    let sigma_min_minus_last = match asm.included.last() {
        Some(&last) => {
            let rest = window.difference(&seq.placed[last]);
            spectral::sigma_min(&asm.matrix.restrict(&rest)?)?
        }
        None => sigma_min_full,
    };
    let scan = spectral::stability_scan(op, &sections[..m], &opts.thresholds)?;
    let proxy_verdict = Verdict::from(spectral::classify(sigma_min_full, opts.thresholds.tau_stab)?);
    Ok(ProxyComparison {
        window: WindowInfo { radius, size: window.len() },
        blocks_included: asm.included.len(),
        sigma_min_full,
        sigma_min_minus_last,
        scan_verdict: scan.verdict,
        proxy_verdict,
        agree: proxy_verdict == scan.verdict,
        note: "finite-window proxy for the Fredholm property".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupKind;
    use crate::operator::C64;

    fn z(a: i64) -> GroupElement {
        GroupElement::Lattice(vec![a])
    }

    fn intervals(ctx: &Arc<GroupContext>, m: usize) -> Vec<FiniteSubset> {
        (1..=m as i64).map(|n| FiniteSubset::new(ctx, (-n..=n).map(z)).unwrap()).collect()
    }

    #[test]
    fn pool_is_canonical() {
        let ctx = GroupContext::new(GroupKind::Lattice(1));
        let mut pool = Pool::canonical(&ctx, 5);
        let got: Vec<GroupElement> = (0..6).filter_map(|i| pool.get(i).cloned()).collect();
        assert_eq!(got, vec![z(0), z(1), z(-1), z(2), z(-2)]);
    }

    #[test]
    fn greedy_on_integers() {
        let ctx = GroupContext::new(GroupKind::Lattice(1));
        let ys = intervals(&ctx, 8);
        let mut pool = Pool::canonical(&ctx, 10_000);
        let seq = greedy_inflating(&ys, &mut pool, 8, false).unwrap();
        assert_eq!(seq.shifts[0], z(0));
        assert!(seq.is_pairwise_disjoint());
        let one = greedy_inflating(&ys, &mut pool, 1, false).unwrap();
        assert_eq!(one.shifts, vec![z(0)]);
    }

    #[test]
    fn pool_exhaustion() {
        let ctx = GroupContext::new(GroupKind::Lattice(1));
        let ys = intervals(&ctx, 3);
        let mut pool = Pool::canonical(&ctx, 3);
        assert!(matches!(
            greedy_inflating(&ys, &mut pool, 3, false),
            Err(Error::PoolExhausted { block: 2, .. })
        ));
    }

    #[test]
    fn enlarged_targets() {
        let ctx = GroupContext::new(GroupKind::Lattice(1));
        let y = FiniteSubset::new(&ctx, (0..=2).map(z)).unwrap();
        let omega = FiniteSubset::new(&ctx, (-1..=1).map(z)).unwrap();
        // (Y ∪ Ω_1) = {-1..2}; differences {-3..3}; plus {-1..2}
        assert_eq!(enlarged_target(&y, &omega), FiniteSubset::new(&ctx, (-4..=5).map(z)).unwrap());
        let ys = intervals(&ctx, 4);
        let mut pool = Pool::canonical(&ctx, 10_000);
        let seq = greedy_inflating(&ys, &mut pool, 4, true).unwrap();
        assert!(seq.is_pairwise_disjoint());
    }

    #[test]
    fn assembly_examples() {
        let ctx = GroupContext::new(GroupKind::Lattice(1));
        let ys = intervals(&ctx, 3);
        let mut pool = Pool::canonical(&ctx, 10_000);
        let seq = greedy_inflating(&ys, &mut pool, 3, false).unwrap();
        let ids: Vec<SectionMatrix> = ys.iter().map(SectionMatrix::identity).collect();
        let w = FiniteSubset::new(&ctx, (-40..=40).map(z)).unwrap();
        let asm = assemble_op(&ids, &seq, &w).unwrap();
        assert!(asm.matrix.exactly_equals(&SectionMatrix::identity(&w)));
        assert_eq!(asm.included, vec![0, 1, 2]);

        let narrow = FiniteSubset::new(&ctx, (-1..=1).map(z)).unwrap();
        assert!(assemble_op(&ids[..1], &seq, &narrow).is_ok());
        let clip = FiniteSubset::new(&ctx, (0..=1).map(z)).unwrap();
        assert_eq!(assemble_op(&ids[..1], &seq, &clip).unwrap_err(), Error::WindowClip(vec![1]));
    }

    #[test]
    fn proxy_examples() {
        let ctx = GroupContext::new(GroupKind::Lattice(1));
        let sections: Vec<(usize, FiniteSubset)> =
            (0..=12).map(|n| (n, FiniteSubset::new(&ctx, (0..=n as i64).map(z)).unwrap())).collect();
        let opts = ProxyOptions { blocks: 13, ..ProxyOptions::default() };
        let two = BandOperator::scalar(&ctx, C64::new(2.0, 0.0)).add(&BandOperator::shift(z(1)));
        let rep = fredholm_proxy_compare(&two, &sections, &opts).unwrap();
        assert!(rep.sigma_min_full >= 1.0 - 1e-12);
        assert_eq!(rep.scan_verdict, Verdict::Stable);
        assert!(rep.agree);

        let l1 = BandOperator::shift(z(1));
        let rep = fredholm_proxy_compare(&l1, &sections, &opts).unwrap();
        assert_eq!(rep.sigma_min_full, 0.0);
        assert_eq!(rep.scan_verdict, Verdict::Unstable);
        assert!(rep.agree);

        let id = BandOperator::identity(&ctx);
        let rep = fredholm_proxy_compare(&id, &sections, &opts).unwrap();
        assert!((rep.sigma_min_full - 1.0).abs() < 1e-12);
        assert!(rep.agree);
    }
}
