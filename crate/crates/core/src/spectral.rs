//! Dense singular-value computations and stability scans over sequences of
//! finite sections.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{band_section, BandOperator, CMatrix, SectionMatrix};
use crate::sets::FiniteSubset;

/// Singular values in descending order.
///
/// Real matrices take the real SVD path. A matrix with an identically zero
/// row or column is rank deficient, so its smallest singular value is set
/// to exactly zero.
pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::Numeric { row: i, col: j });
            }
        }
    }
    let mut sv: Vec<f64> = if m.iter().all(|z| z.im == 0.0) {
        let re: DMatrix<f64> = m.map(|z| z.re);
        re.singular_values().iter().copied().collect()
    } else {
        m.clone().singular_values().iter().copied().collect()
    };
    sv.sort_by(|a, b| b.total_cmp(a));
    let zero_row = (0..m.nrows()).any(|i| m.row(i).iter().all(|z| z.re == 0.0 && z.im == 0.0));
    let zero_col = (0..m.ncols()).any(|j| m.column(j).iter().all(|z| z.re == 0.0 && z.im == 0.0));
    if m.nrows() == m.ncols() && (zero_row || zero_col) {
        if let Some(last) = sv.last_mut() {
            *last = 0.0;
        }
    }
    Ok(sv)
}

/// Smallest singular value of a square section; `‖M⁻¹‖ = 1 / sigma_min`.
/// The empty matrix is treated as invertible with `sigma_min = +∞`.
pub fn sigma_min(m: &SectionMatrix) -> Result<f64> {
    sigma_min_of(m.entries())
}

pub fn sigma_min_of(m: &CMatrix) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::Argument(format!("sigma_min of a {}x{} matrix", m.nrows(), m.ncols())));
    }
    Ok(singular_values(m)?.last().copied().unwrap_or(f64::INFINITY))
}

/// Largest singular value (spectral norm); zero for the empty matrix.
pub fn operator_norm(m: &CMatrix) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

/// Cross-check route: `sqrt(λ_min(M* M))` from a Hermitian eigensolver.
pub fn sigma_min_via_gram(m: &CMatrix) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(f64::INFINITY);
    }
    let gram = m.adjoint() * m;
    let eig = gram.symmetric_eigen();
    let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(lo.max(0.0).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Invertibility {
    Invertible,
    Singular,
    Borderline,
}

impl Invertibility {
    pub fn as_str(self) -> &'static str {
        match self {
            Invertibility::Invertible => "invertible",
            Invertibility::Singular => "singular",
            Invertibility::Borderline => "borderline",
        }
    }
}

/// Invertible if `sigma_min >= tau`, singular if `sigma_min <= tau / 100`.
pub fn invertibility_test(m: &SectionMatrix, tau: f64) -> Result<Invertibility> {
    classify(sigma_min(m)?, tau)
}

pub(crate) fn classify(sigma: f64, tau: f64) -> Result<Invertibility> {
    if !(tau > 0.0) {
        return Err(Error::Argument(format!("threshold must be positive, got {tau}")));
    }
    Ok(if sigma >= tau {
        Invertibility::Invertible
    } else if sigma <= tau / 100.0 {
        Invertibility::Singular
    } else {
        Invertibility::Borderline
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Unstable,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl From<Invertibility> for Verdict {
    fn from(v: Invertibility) -> Self {
        match v {
            Invertibility::Invertible => Verdict::Stable,
            Invertibility::Singular => Verdict::Unstable,
            Invertibility::Borderline => Verdict::Inconclusive,
        }
    }
}

/// Thresholds for [`stability_scan`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanThresholds {
    /// `inf sigma_min >= tau_stab` over `n >= n0` means stable.
    pub tau_stab: f64,
    /// A non-increasing trend reaching `tau_unstab` means unstable.
    pub tau_unstab: f64,
    pub n0: usize,
    /// Largest section dimension accepted.
    pub max_dim: usize,
}

impl Default for ScanThresholds {
    fn default() -> Self {
        ScanThresholds { tau_stab: 1e-6, tau_unstab: 1e-10, n0: 5, max_dim: 4096 }
    }
}

impl ScanThresholds {
    pub fn with_tau_stab(mut self, tau: f64) -> Self {
        self.tau_stab = tau;
        self
    }

    pub fn with_n0(mut self, n0: usize) -> Self {
        self.n0 = n0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_stab > 0.0) || !(self.tau_unstab > 0.0) {
            return Err(Error::Argument("thresholds must be positive".into()));
        }
        if self.tau_unstab >= self.tau_stab {
            return Err(Error::Argument(format!(
                "tau_unstab ({}) must be below tau_stab ({})",
                self.tau_unstab, self.tau_stab
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityRecord {
    pub n: usize,
    pub dim: usize,
    pub norm: f64,
    pub sigma_min: f64,
    /// `norm / sigma_min`, infinite for singular sections.
    pub cond: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub records: Vec<StabilityRecord>,
    pub verdict: Verdict,
    pub thresholds: ScanThresholds,
    pub n_range: (usize, usize),
    /// Least-squares slope of `log sigma_min` against `n` over the final half
    /// of the records with `n >= n0`.
    pub trend_slope: Option<f64>,
    /// `min sigma_min` over `n >= n0`.
    pub inf_sigma_min: Option<f64>,
}

pub const CSV_HEADER: &str = "n,dim,norm,sigma_min,cond,verdict";

/// Fixed 17-significant-digit formatting.
pub fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.16e}")
    }
}

impl StabilityReport {
    /// CSV with header `n,dim,norm,sigma_min,cond,verdict`; the verdict
    /// column repeats the summary verdict.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.n,
                r.dim,
                fmt_f64(r.norm),
                fmt_f64(r.sigma_min),
                fmt_f64(r.cond),
                self.verdict.as_str()
            ));
        }
        out
    }

    pub fn min_sigma(&self) -> f64 {
        self.records.iter().map(|r| r.sigma_min).fold(f64::INFINITY, f64::min)
    }
}

/// Least-squares slope of `ys` against `xs`.
fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Verdict from per-`n` records.
pub(crate) fn verdict_from(records: &[StabilityRecord], th: &ScanThresholds) -> (Verdict, Option<f64>, Option<f64>) {
    let tail: Vec<&StabilityRecord> = records.iter().filter(|r| r.n >= th.n0).collect();
    if tail.is_empty() {
        return (Verdict::Inconclusive, None, None);
    }
    let inf = tail.iter().map(|r| r.sigma_min).fold(f64::INFINITY, f64::min);
    let half = &tail[tail.len() - tail.len().div_ceil(2)..];
    // values below roundoff are clamped so the fit sees a floor, not noise
    let floor = th.tau_unstab * 1e-3;
    let xs: Vec<f64> = half.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = half.iter().map(|r| r.sigma_min.max(floor).ln()).collect();
    let trend = slope(&xs, &ys);
    // a crossing that persists into the final half counts even when parity
    // oscillations tilt the fitted slope upwards
    let late_crossing = half.iter().any(|r| r.sigma_min <= th.tau_unstab);
    let verdict = if inf >= th.tau_stab {
        Verdict::Stable
    } else if inf <= th.tau_unstab && (trend <= 0.0 || late_crossing) {
        Verdict::Unstable
    } else {
        Verdict::Inconclusive
    };
    (verdict, Some(trend), Some(inf))
}

/// Computes `sigma_min(P_{Y_n} A P_{Y_n})` for each `(n, Y_n)` and derives a
/// verdict from the records with `n >= n0`: stable when their infimum is at
/// least `tau_stab`; unstable when it is at most `tau_unstab` and either the
/// log-slope over the final half is non-positive or the final half itself
/// reaches `tau_unstab`; inconclusive otherwise.
pub fn stability_scan(
    op: &BandOperator,
    sections: &[(usize, FiniteSubset)],
    th: &ScanThresholds,
) -> Result<StabilityReport> {
    th.validate()?;
    if sections.is_empty() {
        return Err(Error::Argument("stability scan needs at least one section".into()));
    }
    let mut records = Vec::with_capacity(sections.len());
    for (n, y) in sections {
        if y.len() > th.max_dim {
            return Err(Error::Resource(format!(
                "section {n} has dimension {} above the cap {}",
                y.len(),
                th.max_dim
            )));
        }
        let m = band_section(op, y)?;
        let sv = singular_values(m.entries())?;
        let norm = sv.first().copied().unwrap_or(0.0);
        let smin = sv.last().copied().unwrap_or(f64::INFINITY);
        let cond = if smin > 0.0 { norm / smin } else { f64::INFINITY };
        records.push(StabilityRecord { n: *n, dim: y.len(), norm, sigma_min: smin, cond });
    }
    let (verdict, trend_slope, inf_sigma_min) = verdict_from(&records, th);
    let n_range = (sections[0].0, sections[sections.len() - 1].0);
    Ok(StabilityReport { records, verdict, thresholds: *th, n_range, trend_slope, inf_sigma_min })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{GroupContext, GroupElement, GroupKind};
    use crate::operator::{shift_section, C64};
    use std::sync::Arc;

    fn zctx() -> Arc<GroupContext> {
        GroupContext::new(GroupKind::Lattice(1))
    }

    fn interval(ctx: &Arc<GroupContext>, lo: i64, hi: i64) -> FiniteSubset {
        FiniteSubset::new(ctx, (lo..=hi).map(|a| GroupElement::Lattice(vec![a]))).unwrap()
    }

    fn z(a: i64) -> GroupElement {
        GroupElement::Lattice(vec![a])
    }

    #[test]
    fn sigma_min_examples() {
        let ctx = zctx();
        let y = interval(&ctx, 0, 7);
        let shift = shift_section(&z(1), &y);
        assert_eq!(sigma_min(&shift).unwrap(), 0.0);
        let id = shift_section(&z(0), &y);
        assert!((sigma_min(&id).unwrap() - 1.0).abs() < 1e-14);

        let a = BandOperator::scalar(&ctx, C64::new(2.0, 0.0)).add(&BandOperator::shift(z(1)));
        let m = band_section(&a, &interval(&ctx, 0, 9)).unwrap();
        assert!(sigma_min(&m).unwrap() >= 1.0 - 1e-12);
    }

    #[test]
    fn partial_permutations_have_zero_one_singular_values() {
        let ctx = zctx();
        let y = interval(&ctx, -4, 6);
        for t in -3..=3 {
            let m = shift_section(&z(t), &y);
            for s in singular_values(m.entries()).unwrap() {
                assert!(s.abs() < 1e-12 || (s - 1.0).abs() < 1e-12, "{s}");
            }
        }
    }

    #[test]
    fn gram_route_agrees() {
        let ctx = zctx();
        let a = BandOperator::scalar(&ctx, C64::new(0.7, 0.2))
            .add(&BandOperator::shift(z(1)).scale(C64::new(0.0, 1.0)))
            .add(&BandOperator::shift(z(-2)).scale(C64::new(0.3, 0.0)));
        for hi in [3, 8, 15] {
            let m = band_section(&a, &interval(&ctx, 0, hi)).unwrap();
            let s1 = sigma_min(&m).unwrap();
            let s2 = sigma_min_via_gram(m.entries()).unwrap();
            assert!((s1 - s2).abs() < 1e-10, "{s1} vs {s2}");
        }
    }

    #[test]
    fn non_finite_entries_are_rejected() {
        let mut m = CMatrix::identity(3, 3);
        m[(1, 2)] = C64::new(f64::NAN, 0.0);
        assert!(matches!(singular_values(&m), Err(Error::Numeric { row: 1, col: 2 })));
        assert!(sigma_min_of(&CMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn invertibility_examples() {
        let ctx = zctx();
        let y = interval(&ctx, 0, 50);
        let zero = SectionMatrix::zeros(&y);
        assert_eq!(invertibility_test(&zero, 1e-6).unwrap(), Invertibility::Singular);
        let id = shift_section(&z(0), &y);
        for tau in [1e-8, 0.5, 1.0] {
            assert_eq!(invertibility_test(&id, tau).unwrap(), Invertibility::Invertible);
        }
        let shift = shift_section(&z(1), &y);
        assert_eq!(invertibility_test(&shift, 1e-8).unwrap(), Invertibility::Singular);
        assert_eq!(classify(5e-7, 1e-6).unwrap(), Invertibility::Borderline);
        assert!(classify(1.0, 0.0).is_err());
    }

    fn prefix_sections(ctx: &Arc<GroupContext>, n_max: i64) -> Vec<(usize, FiniteSubset)> {
        (0..=n_max).map(|n| (n as usize, interval(ctx, 0, n))).collect()
    }

    #[test]
    fn scan_examples() {
        let ctx = zctx();
        let secs = prefix_sections(&ctx, 30);
        let th = ScanThresholds::default();

        let shift = BandOperator::shift(z(1));
        let rep = stability_scan(&shift, &secs, &th).unwrap();
        assert_eq!(rep.verdict, Verdict::Unstable);
        assert!(rep.records.iter().all(|r| r.sigma_min == 0.0));

        let a = BandOperator::scalar(&ctx, C64::new(2.0, 0.0)).add(&shift);
        let rep = stability_scan(&a, &secs, &th.with_tau_stab(0.5)).unwrap();
        assert_eq!(rep.verdict, Verdict::Stable);

        let sym = BandOperator::shift(z(1)).add(&BandOperator::shift(z(-1)));
        let centred: Vec<_> = (0..=30).map(|n| (n as usize, interval(&ctx, -n, n))).collect();
        let rep = stability_scan(&sym, &centred, &th).unwrap();
        assert_eq!(rep.verdict, Verdict::Unstable);
        for r in &rep.records {
            assert!(r.sigma_min <= r.norm + 1e-12);
        }
    }

    #[test]
    fn scan_argument_errors() {
        let ctx = zctx();
        let secs = prefix_sections(&ctx, 3);
        let shift = BandOperator::shift(z(1));
        assert!(stability_scan(&shift, &[], &ScanThresholds::default()).is_err());
        let bad = ScanThresholds { tau_stab: -1.0, ..Default::default() };
        assert!(stability_scan(&shift, &secs, &bad).is_err());
        let tiny = ScanThresholds { max_dim: 2, ..Default::default() };
        assert!(matches!(stability_scan(&shift, &secs, &tiny), Err(Error::Resource(_))));
    }

    #[test]
    fn raising_tau_never_creates_stability() {
        let ctx = zctx();
        let secs = prefix_sections(&ctx, 20);
        let ops = [
            BandOperator::shift(z(1)),
            BandOperator::scalar(&ctx, C64::new(0.5, 0.0)).add(&BandOperator::shift(z(1))),
            BandOperator::scalar(&ctx, C64::new(2.0, 0.0)).add(&BandOperator::shift(z(1))),
        ];
        for op in &ops {
            let mut seen_non_stable = false;
            for tau in [1e-9, 1e-6, 1e-3, 0.5, 0.99, 1.5, 5.0] {
                let rep = stability_scan(op, &secs, &ScanThresholds::default().with_tau_stab(tau)).unwrap();
                if rep.verdict != Verdict::Stable {
                    seen_non_stable = true;
                } else {
                    assert!(!seen_non_stable, "verdict became stable at tau = {tau}");
                }
            }
        }
    }

    #[test]
    fn csv_layout() {
        let ctx = zctx();
        let rep = stability_scan(&BandOperator::shift(z(1)), &prefix_sections(&ctx, 2), &ScanThresholds::default())
            .unwrap();
        let csv = rep.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("0,1,0.0000000000000000e0,0.0000000000000000e0,inf,inconclusive"));
    }
}
