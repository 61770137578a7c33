//! Geodesic paths, the limit sets `∪_n Ω_n η_n` along inverse geodesic
//! paths, limit-operator compressions and stability certificates built from
//! them.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{GeneratorSet, GroupContext, GroupElement, GroupKind, Growth};
use crate::operator::{band_section, BandOperator, SectionMatrix};
use crate::sets::{windowed_limits_by, BallCache, FiniteSubset, WindowedLimits};
use crate::spectral::{self, Invertibility, Verdict};

/// A word `w₁ w₂ ⋯ w_m` over `Ω \ {e}` whose prefixes `ν_n = w₁⋯w_n` lie on
/// the spheres `Ω_n \ Ω_{n-1}`.
#[derive(Clone, Debug)]
pub struct GeodesicPath {
    ctx: Arc<GroupContext>,
    gens: GeneratorSet,
    letters: Vec<GroupElement>,
    prefixes: Vec<GroupElement>,
}

impl PartialEq for GeodesicPath {
    fn eq(&self, other: &Self) -> bool {
        self.gens == other.gens && self.letters == other.letters
    }
}

/// Checks the sphere condition `|ν_n| = n` prefix by prefix. Violations are
/// reported with the 1-based index of the first offending prefix.
pub fn validate_geodesic(
    ctx: &Arc<GroupContext>,
    letters: &[GroupElement],
    gens: &GeneratorSet,
) -> Result<GeodesicPath> {
    let mut prefixes = Vec::with_capacity(letters.len());
    let mut nu = ctx.identity();
    for (i, w) in letters.iter().enumerate() {
        if w.is_identity() || !gens.contains(w) {
            return Err(Error::Argument(format!("path letter {w} is not in Omega \\ {{e}}")));
        }
        nu = ctx.multiply(&nu, w)?;
        let length = gens.word_length(&nu)?;
        if length != i + 1 {
            return Err(Error::GeodesicViolation { index: i + 1, length });
        }
        prefixes.push(nu.clone());
    }
    Ok(GeodesicPath { ctx: ctx.clone(), gens: gens.clone(), letters: letters.to_vec(), prefixes })
}

impl GeodesicPath {
    /// The pattern repeated until the path has `m` letters.
    pub fn periodic(
        ctx: &Arc<GroupContext>,
        pattern: &[GroupElement],
        m: usize,
        gens: &GeneratorSet,
    ) -> Result<Self> {
        if pattern.is_empty() {
            return Err(Error::Argument("empty path pattern".into()));
        }
        let letters: Vec<GroupElement> = pattern.iter().cycle().take(m).cloned().collect();
        validate_geodesic(ctx, &letters, gens)
    }

    pub fn context(&self) -> &Arc<GroupContext> {
        &self.ctx
    }

    pub fn generators(&self) -> &GeneratorSet {
        &self.gens
    }

    pub fn letters(&self) -> &[GroupElement] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// `ν_n`, with `ν_0 = e`.
    pub fn prefix(&self, n: usize) -> GroupElement {
        match n {
            0 => self.ctx.identity(),
            _ => self.prefixes[n - 1].clone(),
        }
    }

    /// `η_n = ν_n⁻¹`.
    pub fn inverse_prefix(&self, n: usize) -> GroupElement {
        self.prefix(n).inv()
    }

    pub fn describe(&self) -> Vec<String> {
        self.letters.iter().map(|w| w.to_string()).collect()
    }

    /// Shortest prefix whose repetition reproduces the letters.
    pub fn period(&self) -> &[GroupElement] {
        let m = self.letters.len();
        let p = (1..=m)
            .find(|&p| (p..m).all(|i| self.letters[i] == self.letters[i - p]))
            .unwrap_or(m);
        &self.letters[..p]
    }
}

/// `(∪_{n≤m} Ω_n η_n) ∩ Ω_R` for an inverse geodesic path `η`.
#[derive(Clone, Debug)]
pub struct LimitSetWindow {
    pub radius: usize,
    pub horizon: usize,
    pub realized: FiniteSubset,
    /// `Ω_n η_n ∩ Ω_R ⊆ Ω_{n+1} η_{n+1}` held for every `n < m`.
    pub monotone: bool,
}

/// `x ∈ Ω_n η_n` iff `|x ν_n| ≤ n`.
fn in_translated_ball(gens: &GeneratorSet, x: &GroupElement, nu: &GroupElement, n: usize) -> Result<bool> {
    Ok(gens.word_length(&x.mul(nu))? <= n)
}

fn window_ball(ctx: &Arc<GroupContext>, gens: &GeneratorSet, radius: usize) -> Result<FiniteSubset> {
    let mut balls = BallCache::with_generators(ctx, gens.clone(), ctx.radius_cap());
    Ok(balls.ball(radius)?.clone())
}

pub fn limit_set(path: &GeodesicPath, radius: usize) -> Result<LimitSetWindow> {
    let m = path.len();
    if m < 2 * radius || m == 0 {
        return Err(Error::InsufficientHorizon { length: m, radius, needed: (2 * radius).max(1) });
    }
    let window = window_ball(&path.ctx, &path.gens, radius)?;
    let mut monotone = true;
    let mut flags = Vec::with_capacity(window.len());
    for x in window.iter() {
        let mut seen = false;
        for n in 1..=m {
            let inside = in_translated_ball(&path.gens, x, &path.prefixes[n - 1], n)?;
            if seen && !inside {
                monotone = false;
            }
            seen |= inside;
        }
        flags.push(seen);
    }
    let mut flag = flags.into_iter();
    let realized = window.filter(|_| flag.next().unwrap_or(false));
    Ok(LimitSetWindow { radius, horizon: m, realized, monotone })
}

/// `P_𝒴 A P_𝒴` on the realized window. The identity summand on the
/// complement only adds singular values equal to 1 and is left out.
pub fn compression(op: &BandOperator, window: &LimitSetWindow) -> Result<SectionMatrix> {
    band_section(op, &window.realized)
}

/// Section sequence a certificate is requested for.
#[derive(Clone, Debug)]
pub enum SectionFamily {
    Balls,
    Explicit(Vec<FiniteSubset>),
}

/// All geodesic paths of length `m` whose letters repeat a primitive
/// pattern of length at most `period`. Patterns are enumerated in canonical
/// letter order and patterns that are not geodesic are skipped.
pub fn periodic_paths(
    ctx: &Arc<GroupContext>,
    gens: &GeneratorSet,
    period: usize,
    m: usize,
) -> Result<Vec<GeodesicPath>> {
    let letters: Vec<GroupElement> = gens.letters().cloned().collect();
    let mut out = Vec::new();
    let base = letters.len();
    for p in 1..=period {
        let count = base.checked_pow(p as u32).ok_or_else(|| Error::Resource("too many path patterns".into()))?;
        for code in 0..count {
            // digits of `code` in base |Ω \ {e}|, most significant first
            let mut idx = vec![0usize; p];
            let mut rest = code;
            for slot in idx.iter_mut().rev() {
                *slot = rest % base;
                rest /= base;
            }
            if !is_primitive(&idx) {
                continue;
            }
            let pattern: Vec<GroupElement> = idx.iter().map(|&i| letters[i].clone()).collect();
            match GeodesicPath::periodic(ctx, &pattern, m, gens) {
                Ok(path) => out.push(path),
                Err(Error::GeodesicViolation { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

fn is_primitive(idx: &[usize]) -> bool {
    let p = idx.len();
    (1..p).filter(|d| p.is_multiple_of(*d)).all(|d| (0..p).any(|i| idx[i] != idx[i % d]))
}

#[derive(Clone, Debug, Serialize)]
pub struct PathRecord {
    /// Repeating pattern of the path letters.
    pub pattern: Vec<String>,
    pub length: usize,
    pub window_size: usize,
    pub sigma_min: f64,
    pub verdict: Invertibility,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProxyRecord {
    pub dim: usize,
    pub sigma_min: f64,
    pub verdict: Invertibility,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateReport {
    pub paths: Vec<PathRecord>,
    pub window_radius: usize,
    pub verdicts: Vec<Invertibility>,
    pub whole_space: ProxyRecord,
    pub overall: Verdict,
    pub caveats: Vec<String>,
}

/// Finite-window stability certificate for the ball sections `Ω_n`: every
/// sampled inverse geodesic path must give an invertible compression and the
/// whole-space proxy `P_{Ω_R} A P_{Ω_R}` must be invertible.
pub fn stability_certificate(
    op: &BandOperator,
    gens: &GeneratorSet,
    sections: &SectionFamily,
    paths: &[GeodesicPath],
    radius: usize,
    tau: f64,
) -> Result<CertificateReport> {
    if !matches!(sections, SectionFamily::Balls) {
        return Err(Error::UnsupportedSections);
    }
    let first = paths.first().ok_or_else(|| Error::Argument("no paths to certify".into()))?;
    let ctx = first.context().clone();
    let mut records = Vec::with_capacity(paths.len());
    for path in paths {
        if path.generators() != gens {
            return Err(Error::ContextMismatch("path built over a different generator set".into()));
        }
        let window = limit_set(path, radius)?;
        let sigma = spectral::sigma_min(&compression(op, &window)?)?;
        records.push(PathRecord {
            pattern: path.period().iter().map(|w| w.to_string()).collect(),
            length: path.len(),
            window_size: window.realized.len(),
            sigma_min: sigma,
            verdict: spectral::classify(sigma, tau)?,
        });
    }
    let ball = window_ball(&ctx, gens, radius)?;
    let sigma = spectral::sigma_min(&band_section(op, &ball)?)?;
    let whole_space = ProxyRecord { dim: ball.len(), sigma_min: sigma, verdict: spectral::classify(sigma, tau)? };

    let verdicts: Vec<Invertibility> = records.iter().map(|r| r.verdict).collect();
    let all = verdicts.iter().chain(std::iter::once(&whole_space.verdict));
    let overall = if all.clone().any(|v| *v == Invertibility::Singular) {
        Verdict::Unstable
    } else if all.into_iter().all(|v| *v == Invertibility::Invertible) {
        Verdict::Stable
    } else {
        Verdict::Inconclusive
    };

    let mut caveats = vec![
        "finite path sample, finite window".to_string(),
        "identity limit operator accepted without computation".to_string(),
    ];
    if ctx.growth() == Growth::SubExponential {
        caveats.push("sub-exponential growth: uniform bound on inverses not required".into());
    }
    if ctx.kind() == GroupKind::Heisenberg {
        caveats.push("heuristic: geodesic path reduction is not established for this group".into());
    }
    if gens.generation_unchecked() {
        caveats.push("generator set supplied by user; generation not verified".into());
    }
    Ok(CertificateReport { paths: records, window_radius: radius, verdicts, whole_space, overall, caveats })
}

/// Exponent vectors for the standard lattice generators: `+e_i` gets
/// `max(x_i, 0)` and `-e_i` gets `max(-x_i, 0)`.
fn lattice_exponents(gens: &GeneratorSet, x: &GroupElement) -> Result<Vec<u64>> {
    let GroupElement::Lattice(v) = x else {
        return Err(Error::Decomposition(format!("{x} is not a lattice element")));
    };
    if *gens != GeneratorSet::default_for(gens.kind()) {
        return Err(Error::Decomposition("exponents are only recovered for the standard generators".into()));
    }
    gens.letters()
        .map(|w| match w {
            GroupElement::Lattice(u) => {
                let (i, s) = u.iter().enumerate().find(|(_, c)| **c != 0).map(|(i, c)| (i, *c)).unwrap();
                Ok((v[i] * s).max(0) as u64)
            }
            _ => unreachable!(),
        })
        .collect()
}

/// Result of the commutative extraction.
#[derive(Clone, Debug)]
pub struct Extraction {
    pub path: GeodesicPath,
    /// Indices into the input sequence of the retained terms.
    pub selected: Vec<usize>,
}

/// Extracts from `μ_n ∈ Ω_n \ Ω_{n-1}` (lattice, standard generators) a
/// subsequence that lies on one geodesic path and returns that path.
/// The input must have strictly increasing word lengths.
pub fn commutative_geodesic_extraction(
    ctx: &Arc<GroupContext>,
    mu: &[GroupElement],
    gens: &GeneratorSet,
) -> Result<Extraction> {
    if !ctx.kind().is_commutative() {
        return Err(Error::Argument(format!("{} is not commutative", ctx.kind())));
    }
    let exps = mu.iter().map(|x| lattice_exponents(gens, x)).collect::<Result<Vec<_>>>()?;
    let letters: Vec<GroupElement> = gens.letters().cloned().collect();
    extract_from_exponents(ctx, gens, &letters, &exps)
}

/// Extraction from explicit decompositions `μ_n = Π_i ω_i^{e_{in}}`, one
/// exponent vector per term, indexed like `letters`.
pub fn extract_from_exponents(
    ctx: &Arc<GroupContext>,
    gens: &GeneratorSet,
    letters: &[GroupElement],
    exps: &[Vec<u64>],
) -> Result<Extraction> {
    if exps.is_empty() {
        return Err(Error::Argument("empty sequence".into()));
    }
    if exps.iter().any(|e| e.len() != letters.len()) {
        return Err(Error::Decomposition("exponent vector length differs from the generator count".into()));
    }
    let totals: Vec<u64> = exps.iter().map(|e| e.iter().sum()).collect();
    if totals.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Argument("word lengths must increase strictly along the sequence".into()));
    }
    let mut keep: Vec<usize> = (0..exps.len()).collect();
    for coord in 0..letters.len() {
        let values: Vec<u64> = keep.iter().map(|&i| exps[i][coord]).collect();
        let constant = longest_constant(&values);
        let increasing = longest_increasing(&values);
        let chosen = if increasing.len() >= constant.len() { increasing } else { constant };
        keep = chosen.into_iter().map(|j| keep[j]).collect();
    }
    let mut path_letters = Vec::new();
    let mut current = vec![0u64; letters.len()];
    for &i in &keep {
        for (c, w) in letters.iter().enumerate() {
            let step = exps[i][c] - current[c];
            path_letters.extend(std::iter::repeat_n(w.clone(), step as usize));
            current[c] = exps[i][c];
        }
    }
    let path = validate_geodesic(ctx, &path_letters, gens)?;
    Ok(Extraction { path, selected: keep })
}

/// Positions of the most frequent value, ties to the smaller value.
fn longest_constant(values: &[u64]) -> Vec<usize> {
    let mut counts: HashMap<u64, usize> = HashMap::new();
    for v in values {
        *counts.entry(*v).or_default() += 1;
    }
    let best = counts.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(v, _)| *v);
    values.iter().enumerate().filter(|(_, v)| Some(**v) == best).map(|(i, _)| i).collect()
}

/// Positions of a longest strictly increasing subsequence, earliest first.
fn longest_increasing(values: &[u64]) -> Vec<usize> {
    let n = values.len();
    let mut len = vec![1usize; n];
    let mut prev = vec![usize::MAX; n];
    for i in 0..n {
        for j in 0..i {
            if values[j] < values[i] && len[j] + 1 > len[i] {
                len[i] = len[j] + 1;
                prev[i] = j;
            }
        }
    }
    let Some(mut i) = (0..n).max_by(|a, b| len[*a].cmp(&len[*b]).then(b.cmp(a))) else {
        return Vec::new();
    };
    let mut out = vec![i];
    while prev[i] != usize::MAX {
        i = prev[i];
        out.push(i);
    }
    out.reverse();
    out
}

/// One term `η_k` of a sequence to be stabilized, with a decomposition of
/// `η_k⁻¹` into letters of `Ω \ {e}`.
#[derive(Clone, Debug)]
pub struct DecomposedTerm {
    pub k: usize,
    pub eta: GroupElement,
    pub letters: Vec<GroupElement>,
}

/// Terms `η_k` of a free group, decomposed by their reduced words.
pub fn free_terms(ctx: &Arc<GroupContext>, terms: &[(usize, GroupElement)]) -> Result<Vec<DecomposedTerm>> {
    terms
        .iter()
        .map(|(k, eta)| {
            let inv = ctx.inverse(eta)?;
            let letters = inv
                .free_letters()
                .ok_or_else(|| Error::Decomposition(format!("{eta} is not a free-group word")))?;
            Ok(DecomposedTerm { k: *k, eta: eta.clone(), letters })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Stabilization {
    /// Path whose inverse prefixes are the stabilized `η̃_r`.
    pub path: GeodesicPath,
    /// Limit window of `Ω_r η̃_r`.
    pub window: LimitSetWindow,
    /// Windowed limits of `Ω_{k_n} η_{k_n}` on the same window.
    pub terms: WindowedLimits,
    /// `window ⊆ limsup`.
    pub included: bool,
    /// `window = limsup`.
    pub equal: bool,
}

/// Pigeonhole prefix stabilization: at each position the letter carried by
/// the most surviving terms is kept (ties by canonical order) and the other
/// terms are dropped. The result is compared against the windowed limits of
/// `Ω_{k_n} η_{k_n}` on `Ω_R`.
pub fn prefix_stabilization(
    ctx: &Arc<GroupContext>,
    gens: &GeneratorSet,
    terms: &[DecomposedTerm],
    horizon: usize,
    radius: usize,
) -> Result<Stabilization> {
    let mut survivors: Vec<&DecomposedTerm> = terms.iter().collect();
    let mut chosen = Vec::with_capacity(horizon);
    for r in 0..horizon {
        let mut counts: Vec<(GroupElement, usize)> = Vec::new();
        for t in survivors.iter().filter(|t| t.letters.len() > r) {
            match counts.iter_mut().find(|(w, _)| *w == t.letters[r]) {
                Some((_, c)) => *c += 1,
                None => counts.push((t.letters[r].clone(), 1)),
            }
        }
        let Some(best) = counts
            .into_iter()
            .max_by(|a, b| a.1.cmp(&b.1).then_with(|| ctx.canonical_key(&b.0).cmp(&ctx.canonical_key(&a.0))))
            .map(|(w, _)| w)
        else {
            return Err(Error::StabilizationHorizon { position: r + 1 });
        };
        survivors.retain(|t| t.letters.len() > r && t.letters[r] == best);
        chosen.push(best);
    }
    let path = validate_geodesic(ctx, &chosen, gens)?;
    let window = limit_set(&path, radius)?;
    let ball = window_ball(ctx, gens, radius)?;
    let limits = windowed_limits_by(&ball, terms.len(), |n, x| {
        let t = &terms[n];
        Ok(gens.word_length(&x.mul(&t.eta.inv()))? <= t.k)
    })?;
    let included = window.realized.is_subset(&limits.limsup);
    let equal = window.realized == limits.limsup;
    Ok(Stabilization { path, window, terms: limits, included, equal })
}

/// Prefix stabilization for a free group, decomposing each `η_k⁻¹` by its
/// reduced word.
pub fn free_prefix_stabilization(
    ctx: &Arc<GroupContext>,
    terms: &[(usize, GroupElement)],
    horizon: usize,
    radius: usize,
) -> Result<Stabilization> {
    if !matches!(ctx.kind(), GroupKind::Free(_)) {
        return Err(Error::Argument(format!("{} is not a free group", ctx.kind())));
    }
    let gens = ctx.generators().clone();
    prefix_stabilization(ctx, &gens, &free_terms(ctx, terms)?, horizon, radius)
}
