//! Band operators `A = Σ bᵢ L_{tᵢ}` on `l²(Γ)`, their finite sections
//! `P_Y A P_Y`, and exact checks of the identities satisfied by shifts,
//! projections and quasicommutators.
//!
//! Shifts act by `L_t δ_s = δ_{ts}`, so `(L_t u)(x) = u(t⁻¹x)` and the
//! section entry `(a, b)` of `A` is `Σ { bᵢ(a) : a = tᵢ b }`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::group::{GeneratorSet, GroupContext, GroupElement};
use crate::sets::{omega_boundary, omega_interior, BallCache, FiniteSubset};
use crate::spectral;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

type CoefficientFn = dyn Fn(&GroupElement) -> Option<C64> + Send + Sync;

/// A coefficient function `Γ → ℂ`, kept symbolic so that products and
/// adjoints of band operators stay exact.
#[derive(Clone)]
pub enum DiagonalFunction {
    Constant(C64),
    /// Finitely supported values; points outside use `default`, or fail to
    /// evaluate when there is none.
    Table { values: Arc<HashMap<GroupElement, C64>>, default: Option<C64> },
    /// Arbitrary evaluable map; `None` signals an evaluation failure.
    Func(Arc<CoefficientFn>),
    /// `x ↦ inner(by · x)`.
    Shifted { by: GroupElement, inner: Arc<DiagonalFunction> },
    Product(Arc<DiagonalFunction>, Arc<DiagonalFunction>),
    Sum(Arc<DiagonalFunction>, Arc<DiagonalFunction>),
    Conj(Arc<DiagonalFunction>),
}

impl fmt::Debug for DiagonalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagonalFunction::Constant(c) => write!(f, "{c}"),
            DiagonalFunction::Table { values, .. } => write!(f, "table[{}]", values.len()),
            DiagonalFunction::Func(_) => write!(f, "fn"),
            DiagonalFunction::Shifted { by, inner } => write!(f, "{inner:?}∘({by}·)"),
            DiagonalFunction::Product(a, b) => write!(f, "({a:?})*({b:?})"),
            DiagonalFunction::Sum(a, b) => write!(f, "({a:?})+({b:?})"),
            DiagonalFunction::Conj(a) => write!(f, "conj({a:?})"),
        }
    }
}

impl DiagonalFunction {
    pub fn constant(c: C64) -> Self {
        DiagonalFunction::Constant(c)
    }

    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(&GroupElement) -> Option<C64> + Send + Sync + 'static,
    {
        DiagonalFunction::Func(Arc::new(f))
    }

    pub fn table(values: HashMap<GroupElement, C64>, default: Option<C64>) -> Self {
        DiagonalFunction::Table { values: Arc::new(values), default }
    }

    pub fn as_constant(&self) -> Option<C64> {
        match self {
            DiagonalFunction::Constant(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(ZERO)
    }

    pub fn evaluate(&self, x: &GroupElement) -> Result<C64> {
        match self {
            DiagonalFunction::Constant(c) => Ok(*c),
            DiagonalFunction::Table { values, default } => values
                .get(x)
                .copied()
                .or(*default)
                .ok_or_else(|| Error::Evaluation(x.to_string())),
            DiagonalFunction::Func(f) => f(x).ok_or_else(|| Error::Evaluation(x.to_string())),
            DiagonalFunction::Shifted { by, inner } => inner.evaluate(&by.mul(x)),
            DiagonalFunction::Product(a, b) => Ok(a.evaluate(x)? * b.evaluate(x)?),
            DiagonalFunction::Sum(a, b) => Ok(a.evaluate(x)? + b.evaluate(x)?),
            DiagonalFunction::Conj(a) => Ok(a.evaluate(x)?.conj()),
        }
    }

    fn mul(&self, other: &Self) -> Self {
        match (self.as_constant(), other.as_constant()) {
            (Some(a), Some(b)) => DiagonalFunction::Constant(a * b),
            (Some(a), _) if a == ZERO => DiagonalFunction::Constant(ZERO),
            (_, Some(b)) if b == ZERO => DiagonalFunction::Constant(ZERO),
            (Some(a), _) if a == ONE => other.clone(),
            (_, Some(b)) if b == ONE => self.clone(),
            _ => DiagonalFunction::Product(Arc::new(self.clone()), Arc::new(other.clone())),
        }
    }

    fn add(&self, other: &Self) -> Self {
        match (self.as_constant(), other.as_constant()) {
            (Some(a), Some(b)) => DiagonalFunction::Constant(a + b),
            (Some(a), _) if a == ZERO => other.clone(),
            (_, Some(b)) if b == ZERO => self.clone(),
            _ => DiagonalFunction::Sum(Arc::new(self.clone()), Arc::new(other.clone())),
        }
    }

    fn shifted(&self, by: &GroupElement) -> Self {
        if self.as_constant().is_some() || by.is_identity() {
            self.clone()
        } else {
            DiagonalFunction::Shifted { by: by.clone(), inner: Arc::new(self.clone()) }
        }
    }

    fn conj(&self) -> Self {
        match self.as_constant() {
            Some(c) => DiagonalFunction::Constant(c.conj()),
            None => DiagonalFunction::Conj(Arc::new(self.clone())),
        }
    }
}

/// `A = Σ bᵢ L_{tᵢ}` with pairwise distinct shifts `tᵢ`.
#[derive(Clone, Debug)]
pub struct BandOperator {
    terms: Vec<(GroupElement, DiagonalFunction)>,
}

impl BandOperator {
    /// Builds an operator, merging terms with equal shifts and dropping
    /// terms whose coefficient is the constant zero.
    pub fn new(terms: Vec<(GroupElement, DiagonalFunction)>) -> Self {
        let mut merged: Vec<(GroupElement, DiagonalFunction)> = Vec::with_capacity(terms.len());
        for (t, b) in terms {
            match merged.iter_mut().find(|(s, _)| *s == t) {
                Some((_, acc)) => *acc = acc.add(&b),
                None => merged.push((t, b)),
            }
        }
        merged.retain(|(_, b)| !b.is_zero());
        BandOperator { terms: merged }
    }

    pub fn zero() -> Self {
        BandOperator { terms: Vec::new() }
    }

    /// `L_t`.
    pub fn shift(t: GroupElement) -> Self {
        Self::new(vec![(t, DiagonalFunction::Constant(ONE))])
    }

    /// `c I`.
    pub fn scalar(ctx: &GroupContext, c: C64) -> Self {
        Self::new(vec![(ctx.identity(), DiagonalFunction::Constant(c))])
    }

    pub fn identity(ctx: &GroupContext) -> Self {
        Self::scalar(ctx, ONE)
    }

    /// Multiplication operator by `b`.
    pub fn multiplication(ctx: &GroupContext, b: DiagonalFunction) -> Self {
        Self::new(vec![(ctx.identity(), b)])
    }

    /// Constant-coefficient operator `Σ cᵢ L_{tᵢ}`.
    pub fn from_constants(terms: impl IntoIterator<Item = (GroupElement, C64)>) -> Self {
        Self::new(terms.into_iter().map(|(t, c)| (t, DiagonalFunction::Constant(c))).collect())
    }

    pub fn terms(&self) -> &[(GroupElement, DiagonalFunction)] {
        &self.terms
    }

    pub fn shifts(&self) -> impl Iterator<Item = &GroupElement> {
        self.terms.iter().map(|(t, _)| t)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when every coefficient is a constant (the pure shift algebra).
    pub fn has_constant_coefficients(&self) -> bool {
        self.terms.iter().all(|(_, b)| b.as_constant().is_some())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.terms.iter().chain(&other.terms).cloned().collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> Self {
        let k = DiagonalFunction::Constant(c);
        Self::new(self.terms.iter().map(|(t, b)| (t.clone(), b.mul(&k))).collect())
    }

    /// Exact symbolic product. Uses `L_t c = (c ∘ t⁻¹·) L_t`, so
    /// `(b L_t)(c L_s) = (b · c(t⁻¹ ·)) L_{ts}`.
    pub fn product(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (t, b) in &self.terms {
            let tinv = t.inv();
            for (s, c) in &other.terms {
                terms.push((t.mul(s), b.mul(&c.shifted(&tinv))));
            }
        }
        Self::new(terms)
    }

    /// `A* = Σ conj(bᵢ(tᵢ ·)) L_{tᵢ⁻¹}`.
    pub fn adjoint(&self) -> Self {
        Self::new(
            self.terms
                .iter()
                .map(|(t, b)| (t.inv(), b.shifted(t).conj()))
                .collect(),
        )
    }
}

/// A dense matrix indexed by a finite basis in canonical order.
#[derive(Clone, Debug)]
pub struct SectionMatrix {
    basis: FiniteSubset,
    entries: CMatrix,
}

impl PartialEq for SectionMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.basis == other.basis && self.entries == other.entries
    }
}

impl SectionMatrix {
    pub fn new(basis: FiniteSubset, entries: CMatrix) -> Result<Self> {
        if entries.nrows() != basis.len() || entries.ncols() != basis.len() {
            return Err(Error::Argument(format!(
                "{}x{} entries on a basis of size {}",
                entries.nrows(),
                entries.ncols(),
                basis.len()
            )));
        }
        Ok(SectionMatrix { basis, entries })
    }

    pub fn zeros(basis: &FiniteSubset) -> Self {
        let n = basis.len();
        SectionMatrix { basis: basis.clone(), entries: CMatrix::zeros(n, n) }
    }

    pub fn identity(basis: &FiniteSubset) -> Self {
        let n = basis.len();
        SectionMatrix { basis: basis.clone(), entries: CMatrix::identity(n, n) }
    }

    pub fn basis(&self) -> &FiniteSubset {
        &self.basis
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Entry `⟨A δ_b, δ_a⟩`, zero outside the basis.
    pub fn get(&self, a: &GroupElement, b: &GroupElement) -> C64 {
        match (self.basis.position(a), self.basis.position(b)) {
            (Some(i), Some(j)) => self.entries[(i, j)],
            _ => ZERO,
        }
    }

    fn check_basis(&self, other: &Self) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::Argument("section matrices on different bases".into()));
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_basis(other)?;
        Ok(SectionMatrix { basis: self.basis.clone(), entries: sparse_aware_product(&self.entries, &other.entries) })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_basis(other)?;
        Ok(SectionMatrix { basis: self.basis.clone(), entries: &self.entries - &other.entries })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_basis(other)?;
        Ok(SectionMatrix { basis: self.basis.clone(), entries: &self.entries + &other.entries })
    }

    pub fn adjoint(&self) -> Self {
        SectionMatrix { basis: self.basis.clone(), entries: self.entries.adjoint() }
    }

    /// Product of a chain of matrices on one basis.
    pub fn chain(factors: &[&SectionMatrix]) -> Result<Self> {
        let (first, rest) = factors
            .split_first()
            .ok_or_else(|| Error::Argument("empty product".into()))?;
        rest.iter().try_fold((*first).clone(), |acc, m| acc.matmul(m))
    }

    /// Entrywise exact equality.
    pub fn exactly_equals(&self, other: &Self) -> bool {
        self.basis == other.basis && self.entries == other.entries
    }

    /// `max |self - other|` entrywise; infinite when the bases differ.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.basis != other.basis {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|z| *z == ZERO)
    }

    /// Restriction to the rows and columns of a sub-basis.
    pub fn restrict(&self, to: &FiniteSubset) -> Result<Self> {
        let idx: Vec<usize> = to
            .iter()
            .map(|x| {
                self.basis
                    .position(x)
                    .ok_or_else(|| Error::Argument(format!("{x} is not in the basis")))
            })
            .collect::<Result<_>>()?;
        let n = idx.len();
        let entries = CMatrix::from_fn(n, n, |i, j| self.entries[(idx[i], idx[j])]);
        Ok(SectionMatrix { basis: to.clone(), entries })
    }

    /// Number of nonzero entries.
    pub fn nnz(&self) -> usize {
        self.entries.iter().filter(|z| **z != ZERO).count()
    }

    /// Coordinate dump: header `dim nnz`, then `row col re im` per nonzero
    /// entry in column-major order with 0-based indices.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{} {}", self.dim(), self.nnz())?;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                let z = self.entries[(i, j)];
                if z != ZERO {
                    writeln!(w, "{i} {j} {} {}", spectral::fmt_f64(z.re), spectral::fmt_f64(z.im))?;
                }
            }
        }
        Ok(())
    }
}

/// Sections of shifts and projections are very sparse; their products are
/// accumulated column by column over the nonzeros of the right factor.
fn sparse_aware_product(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = b.nrows();
    let nnz = b.iter().filter(|z| **z != ZERO).count();
    if nnz * 4 > n * n {
        return a * b;
    }
    let mut out = CMatrix::zeros(a.nrows(), b.ncols());
    for j in 0..b.ncols() {
        for k in 0..n {
            let f = b[(k, j)];
            if f == ZERO {
                continue;
            }
            let src = a.column(k);
            let mut dst = out.column_mut(j);
            for (d, s) in dst.iter_mut().zip(src.iter()) {
                *d += s * f;
            }
        }
    }
    out
}

/// `P_Y L_t P_Y`: entry `(a, b)` is 1 iff `a = t b`.
pub fn shift_section(t: &GroupElement, y: &FiniteSubset) -> SectionMatrix {
    let mut m = SectionMatrix::zeros(y);
    for (j, b) in y.iter().enumerate() {
        if let Some(i) = y.position(&t.mul(b)) {
            m.entries[(i, j)] = ONE;
        }
    }
    m
}

/// `P_Y A P_Y` with entries `k(a, b)` for `a, b ∈ Y`.
pub fn band_section(op: &BandOperator, y: &FiniteSubset) -> Result<SectionMatrix> {
    let mut m = SectionMatrix::zeros(y);
    for (t, coeff) in op.terms() {
        for (j, b) in y.iter().enumerate() {
            let a = t.mul(b);
            if let Some(i) = y.position(&a) {
                m.entries[(i, j)] += coeff.evaluate(&a)?;
            }
        }
    }
    Ok(m)
}

/// `P_S` on the basis `Y`: ones on the diagonal positions of `S ∩ Y`.
pub fn projection_section(s: &FiniteSubset, y: &FiniteSubset) -> SectionMatrix {
    let mut m = SectionMatrix::zeros(y);
    for (i, x) in y.iter().enumerate() {
        if s.contains(x) {
            m.entries[(i, i)] = ONE;
        }
    }
    m
}

/// `Q_S = I - P_S` on the basis `Y`.
pub fn complement_projection(s: &FiniteSubset, y: &FiniteSubset) -> SectionMatrix {
    projection_section(&y.difference(s), y)
}

/// `Y ∪ TY ∪ T⁻¹Y`, iterated `depth` times, where `T` is the union of the
/// shift sets of `ops`. Any product of at most `depth` of the operators
/// applied to a vector supported in `Y` stays inside this set.
pub fn ambient_for(ops: &[&BandOperator], y: &FiniteSubset, depth: usize) -> FiniteSubset {
    let mut shifts: Vec<GroupElement> = Vec::new();
    for op in ops {
        for t in op.shifts() {
            for s in [t.clone(), t.inv()] {
                if !shifts.contains(&s) {
                    shifts.push(s);
                }
            }
        }
    }
    let mut seen: HashSet<GroupElement> = y.iter().cloned().collect();
    let mut frontier: Vec<GroupElement> = y.iter().cloned().collect();
    for _ in 0..depth {
        let mut next = Vec::new();
        for x in &frontier {
            for s in &shifts {
                let z = s.mul(x);
                if seen.insert(z.clone()) {
                    next.push(z);
                }
            }
        }
        frontier = next;
    }
    FiniteSubset::from_unsorted(y.context(), seen.into_iter().collect())
}

/// `D(A1) D(A2) - D(A1 A2)` on `Y`, with the product taken symbolically.
pub fn quasicommutator(a1: &BandOperator, a2: &BandOperator, y: &FiniteSubset) -> Result<SectionMatrix> {
    let lhs = band_section(a1, y)?.matmul(&band_section(a2, y)?)?;
    lhs.sub(&band_section(&a1.product(a2), y)?)
}

/// Second assembly route: `-(P_Y A1 Q_Y A2 P_Y)` built on an ambient set
/// containing every support reached by one band width, then restricted to `Y`.
pub fn quasicommutator_via_ambient(
    a1: &BandOperator,
    a2: &BandOperator,
    y: &FiniteSubset,
) -> Result<SectionMatrix> {
    let amb = ambient_for(&[a1, a2], y, 1);
    let p = projection_section(y, &amb);
    let q = complement_projection(y, &amb);
    let m = SectionMatrix::chain(&[&p, &band_section(a1, &amb)?, &q, &band_section(a2, &amb)?, &p])?;
    let neg = SectionMatrix { basis: amb, entries: -m.entries };
    neg.restrict(y)
}

/// Outcome of an exact identity check.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct IdentityCheck {
    pub holds: bool,
    /// `max |lhs - rhs|` entrywise.
    pub residual: f64,
    pub dim: usize,
}

impl IdentityCheck {
    pub fn compare(lhs: &SectionMatrix, rhs: &SectionMatrix) -> Self {
        IdentityCheck {
            holds: lhs.exactly_equals(rhs),
            residual: lhs.max_abs_diff(rhs),
            dim: lhs.dim(),
        }
    }

    pub fn and(self, other: Self) -> Self {
        IdentityCheck {
            holds: self.holds && other.holds,
            residual: self.residual.max(other.residual),
            dim: self.dim.max(other.dim),
        }
    }
}

/// `Q_A L_ω P_A = Q_A L_ω P_A L_{ω⁻¹} Q_A L_ω P_A`, assembled on `ambient`.
pub fn verify_qlp_identity(
    omega: &GroupElement,
    a: &FiniteSubset,
    ambient: &FiniteSubset,
) -> Result<IdentityCheck> {
    if !a.is_subset(ambient) {
        return Err(Error::AmbientWindow("A is not contained in the ambient set".into()));
    }
    let moved = a.translate_left(omega);
    if !moved.is_subset(ambient) {
        return Err(Error::AmbientWindow(format!("ωA is not contained in the ambient set (ω = {omega})")));
    }
    let p = projection_section(a, ambient);
    let q = complement_projection(a, ambient);
    let l = shift_section(omega, ambient);
    let linv = shift_section(&omega.inv(), ambient);
    let lhs = SectionMatrix::chain(&[&q, &l, &p])?;
    let rhs = SectionMatrix::chain(&[&q, &l, &p, &linv, &q, &l, &p])?;
    Ok(IdentityCheck::compare(&lhs, &rhs))
}

/// Checks on the basis `Y ∪ ω⁻¹Y ∪ ωY` that
/// `P_Y L_{ω⁻¹} Q_Y L_ω P_Y = P_{Y \ (Y ∩ ω⁻¹Y)}` and that right
/// multiplication by `P_{∂_Ω Y}` leaves this projection unchanged.
pub fn verify_boundary_factorization(
    omega: &GroupElement,
    y: &FiniteSubset,
    gens: &GeneratorSet,
) -> Result<IdentityCheck> {
    if !gens.contains(omega) {
        return Err(Error::Argument(format!("{omega} is not in the generator set")));
    }
    let winv = omega.inv();
    let pulled = y.translate_left(&winv);
    let basis = y.union(&pulled).union(&y.translate_left(omega));
    let p = projection_section(y, &basis);
    let q = complement_projection(y, &basis);
    let lhs = SectionMatrix::chain(&[&p, &shift_section(&winv, &basis), &q, &shift_section(omega, &basis), &p])?;
    let target = projection_section(&y.difference(&y.intersection(&pulled)), &basis);
    let first = IdentityCheck::compare(&lhs, &target);
    let boundary = projection_section(&omega_boundary(y, gens), &basis);
    let second = IdentityCheck::compare(&target.matmul(&boundary)?, &target);
    Ok(first.and(second))
}

/// `∏_{ω∈Ω} P_{A ∩ ω⁻¹A} = P_{int_Ω A}` on the basis `A`.
pub fn verify_interior_product(a: &FiniteSubset, gens: &GeneratorSet) -> Result<IdentityCheck> {
    let mut prod = SectionMatrix::identity(a);
    for w in gens.elements() {
        let piece = a.intersection(&a.translate_left(&w.inv()));
        prod = prod.matmul(&projection_section(&piece, a))?;
    }
    let rhs = projection_section(&omega_interior(a, gens), a);
    Ok(IdentityCheck::compare(&prod, &rhs))
}

/// Product of sections, on `basis`, of `P_Y A_1 Q_Y A_2 Q_Y ... Q_Y A_k P_Y`.
fn interleaved_chain(ops: &[BandOperator], y: &FiniteSubset, basis: &FiniteSubset) -> Result<SectionMatrix> {
    let p = projection_section(y, basis);
    let q = complement_projection(y, basis);
    let mut acc = p.clone();
    for (i, op) in ops.iter().enumerate() {
        if i > 0 {
            acc = acc.matmul(&q)?;
        }
        acc = acc.matmul(&band_section(op, basis)?)?;
    }
    acc.matmul(&p)
}

/// Checks each rewriting step of the telescoping decomposition of
/// `P_Y A_1 Q_Y A_2 Q_Y ... Q_Y A_m P_Y` (`m >= 2`):
///
/// `P A_1 Q … Q A_{j-1} Q B_j P = P A_1 Q … Q (A_{j-1} B_j) P − (P A_1 Q … Q A_{j-1} P)(P B_j P)`
///
/// with `B_j = A_j ⋯ A_m`, for `j = m, …, 2`. Everything is assembled on an
/// ambient set that no product of `m` factors can leave.
pub fn verify_telescoping(ops: &[BandOperator], y: &FiniteSubset) -> Result<IdentityCheck> {
    let m = ops.len();
    if m < 2 {
        return Err(Error::Argument("telescoping needs at least two factors".into()));
    }
    let refs: Vec<&BandOperator> = ops.iter().collect();
    let basis = ambient_for(&refs, y, m);
    let p = projection_section(y, &basis);
    let mut check = IdentityCheck { holds: true, residual: 0.0, dim: basis.len() };
    let mut tail = ops[m - 1].clone();
    for j in (1..m).rev() {
        // factors A_1 .. A_{j}, with B = A_{j+1} ⋯ A_m collapsed into `tail`
        let head = &ops[..j];
        let mut lhs_ops = head.to_vec();
        lhs_ops.push(tail.clone());
        let lhs = interleaved_chain(&lhs_ops, y, &basis)?;

        let merged = head[j - 1].product(&tail);
        let mut merged_ops = head[..j - 1].to_vec();
        merged_ops.push(merged.clone());
        let first = interleaved_chain(&merged_ops, y, &basis)?;
        let second = interleaved_chain(head, y, &basis)?
            .matmul(&SectionMatrix::chain(&[&p, &band_section(&tail, &basis)?, &p])?)?;
        check = check.and(IdentityCheck::compare(&lhs, &first.sub(&second)?));
        tail = merged;
    }
    Ok(check)
}

/// Per-radius operator norms of the ball sections `P_{Ω_n} A P_{Ω_n}`.
#[derive(Clone, Debug, serde::Serialize)]
pub struct NormScan {
    pub norms: Vec<(usize, f64)>,
    pub sup: f64,
    /// `‖A‖ - sup_n ‖A_n‖` when a reference norm was supplied.
    pub gap: Option<f64>,
}

pub fn norm_isometry_scan(
    op: &BandOperator,
    balls: &mut BallCache,
    n_max: usize,
    reference: Option<f64>,
) -> Result<NormScan> {
    let mut norms = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let y = balls.ball(n)?.clone();
        let m = band_section(op, &y)?;
        norms.push((n, spectral::operator_norm(m.entries())?));
    }
    let sup = norms.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    Ok(NormScan { norms, sup, gap: reference.map(|r| r - sup) })
}

/// Named operator presets relative to a generator set: `shift` is `L_ω` for
/// the first non-identity generator, `laplacian` is `d I - Σ_{ω≠e} L_ω` with
/// `d = |Ω| - 1`, and `2I+L1` is `2I + L_ω`.
pub fn preset(name: &str, ctx: &Arc<GroupContext>) -> Result<BandOperator> {
    let gens = ctx.generators();
    let first = gens
        .letters()
        .next()
        .cloned()
        .ok_or_else(|| Error::Argument("generator set has no non-identity element".into()))?;
    match name {
        "shift" => Ok(BandOperator::shift(first)),
        "laplacian" => {
            let degree = gens.letters().count() as f64;
            let adjacency = BandOperator::from_constants(gens.letters().map(|w| (w.clone(), ONE)));
            Ok(BandOperator::scalar(ctx, C64::new(degree, 0.0)).sub(&adjacency))
        }
        "2I+L1" => Ok(BandOperator::scalar(ctx, C64::new(2.0, 0.0)).add(&BandOperator::shift(first))),
        other => Err(Error::Argument(format!("unknown operator preset `{other}`"))),
    }
}
