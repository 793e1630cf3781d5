use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::time::{Duration, Instant};

use serde_json::json;
use thiserror::Error;

use crate::matrix::IntMatrix;
use crate::parallel::Execution;
use crate::qarith::{q_binom, QLaurent};
use crate::qtorus::{ExpVec, TorusElem};
use crate::seeds::{QuantumSeed, SeedError, Skewsymmetrizer};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RelationError {
    #[error("seed does not have principal coefficients (need m = 2n, Btilde = [B; I], Lambda = [[0,-D],[D,-DB]])")]
    NotPrincipal,
    #[error("index {index} out of range 1..={n}")]
    IndexOutOfRange { index: i64, n: usize },
    #[error("indices must be distinct, got i = j = {0}")]
    SameIndex(usize),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Seed(#[from] SeedError),
}

/// Which side the power of `x_i` sits on in a power product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    /// `y_i^t x_i^t`
    Left,
    /// `x_i^t y_i^t`
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

/// The vanishing-sum lemmas: the first-order form and its generalization
/// with outer exponent `m` and shift `t` (order `l = t + 1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LemmaVariant {
    L32,
    L41 { m: i64, t: i64 },
}

/// One verification job. Indices are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Check {
    Commutator {
        i: usize,
        j: usize,
    },
    PowerProduct {
        i: usize,
        t: u32,
        side: Side,
    },
    LemmaSum {
        i: usize,
        j: usize,
        variant: LemmaVariant,
        exploratory: bool,
    },
    Serre {
        i: usize,
        j: usize,
    },
    SerreOpposite {
        i: usize,
        j: usize,
    },
    Higher {
        i: usize,
        j: usize,
        l: i64,
        m: i64,
        exploratory: bool,
    },
    ReductionSupport {
        i: usize,
        j: usize,
        l: i64,
    },
}

impl Check {
    pub fn kind(&self) -> &'static str {
        match self {
            Check::Commutator { .. } => "COMMUTATOR",
            Check::PowerProduct { .. } => "POWER_PRODUCT",
            Check::LemmaSum {
                variant: LemmaVariant::L32,
                ..
            } => "LEMMA_L32",
            Check::LemmaSum { .. } => "LEMMA_L41",
            Check::Serre { .. } => "SERRE",
            Check::SerreOpposite { .. } => "SERRE_OPPOSITE",
            Check::Higher { .. } => "HIGHER",
            Check::ReductionSupport { .. } => "REDUCTION_SUPPORT",
        }
    }

    pub fn params(&self) -> Vec<(&'static str, String)> {
        let s = |v: i64| v.to_string();
        match *self {
            Check::Commutator { i, j }
            | Check::Serre { i, j }
            | Check::SerreOpposite { i, j }
            | Check::LemmaSum {
                i,
                j,
                variant: LemmaVariant::L32,
                ..
            } => {
                vec![("i", s(i as i64)), ("j", s(j as i64))]
            }
            Check::PowerProduct { i, t, side } => vec![
                ("i", s(i as i64)),
                ("t", s(t as i64)),
                ("side", side.to_string()),
            ],
            Check::LemmaSum {
                i,
                j,
                variant: LemmaVariant::L41 { m, t },
                ..
            } => vec![
                ("i", s(i as i64)),
                ("j", s(j as i64)),
                ("m", s(m)),
                ("t", s(t)),
            ],
            Check::Higher { i, j, l, m, .. } => vec![
                ("i", s(i as i64)),
                ("j", s(j as i64)),
                ("l", s(l)),
                ("m", s(m)),
            ],
            Check::ReductionSupport { i, j, l } => {
                vec![("i", s(i as i64)), ("j", s(j as i64)), ("l", s(l))]
            }
        }
    }

    /// `KIND(name=value,...)`
    pub fn label(&self) -> String {
        let args: Vec<String> = self
            .params()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        format!("{}({})", self.kind(), args.join(","))
    }
}

/// Result of one exact verification.
#[derive(Clone, Debug)]
pub struct VerificationCertificate {
    pub check: Check,
    /// Canonical string of the remainder; `"0"` on success.
    pub remainder: String,
    pub pass: bool,
    /// Total number of torus terms across all expanded summands, before cancellation.
    pub expanded_terms: usize,
    pub remainder_terms: usize,
    /// Set when the instance lies outside the stated parameter range.
    pub exploratory: bool,
    /// Wall time of the check. Never rendered, so reports stay deterministic.
    pub elapsed: Duration,
}

impl VerificationCertificate {
    pub fn verdict(&self) -> &'static str {
        if self.pass {
            "PASS"
        } else {
            "FAIL"
        }
    }

    /// One line: `KIND(params) = PASS|FAIL`.
    pub fn summary_line(&self) -> String {
        format!("{} = {}", self.check.label(), self.verdict())
    }

    /// Multi-line block with parameters, verdict and, on failure, the remainder.
    pub fn render_block(&self) -> String {
        let mut out = format!(
            "{}\n  verdict: {}\n  expanded terms: {}\n",
            self.check.label(),
            self.verdict(),
            self.expanded_terms
        );
        if self.exploratory {
            out.push_str("  exploratory: outside the stated parameter range\n");
        }
        if !self.pass {
            out.push_str(&format!(
                "  remainder ({} terms): {}\n",
                self.remainder_terms, self.remainder
            ));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let params: BTreeMap<&str, serde_json::Value> = self
            .check
            .params()
            .into_iter()
            .map(|(k, v)| (k, v.parse::<i64>().map_or_else(|_| json!(v), |n| json!(n))))
            .collect();
        json!({
            "kind": self.check.kind(),
            "params": params,
            "verdict": self.verdict(),
            "expanded_terms": self.expanded_terms,
            "remainder_terms": self.remainder_terms,
            "remainder": self.remainder,
            "exploratory": self.exploratory,
        })
    }
}

impl fmt::Display for VerificationCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.summary_line())
    }
}

fn require_principal(seed: &QuantumSeed) -> Result<(), RelationError> {
    if seed.is_principal() {
        Ok(())
    } else {
        Err(RelationError::NotPrincipal)
    }
}

fn check_index(seed: &QuantumSeed, i: usize) -> Result<(), RelationError> {
    if (1..=seed.n()).contains(&i) {
        Ok(())
    } else {
        Err(RelationError::IndexOutOfRange {
            index: i as i64,
            n: seed.n(),
        })
    }
}

fn check_pair(seed: &QuantumSeed, i: usize, j: usize) -> Result<(), RelationError> {
    check_index(seed, i)?;
    check_index(seed, j)?;
    if i == j {
        return Err(RelationError::SameIndex(i));
    }
    Ok(())
}

/// The one-step variables `y_1, ..., y_n` over the initial form.
pub fn one_step_variables(seed: &QuantumSeed) -> Result<Vec<TorusElem>, RelationError> {
    require_principal(seed)?;
    (1..=seed.n())
        .map(|k| seed.mutated_variable(k).map_err(RelationError::from))
        .collect()
}

/// `(q^d)^{e}` written as a half-exponent power: `q^{d e}`.
fn qd(d: i64, e: i64) -> QLaurent {
    QLaurent::q_pow(d.checked_mul(e).expect("exponent overflow"))
}

fn alt_sign(r: i64) -> QLaurent {
    QLaurent::constant(if r % 2 == 0 { 1 } else { -1 })
}

/// Per-certificate context holding the one-step variables and memoized powers.
struct Ctx<'a> {
    seed: &'a QuantumSeed,
    ys: Vec<TorusElem>,
    pows: RefCell<HashMap<(usize, u32), TorusElem>>,
    expanded: RefCell<usize>,
}

impl<'a> Ctx<'a> {
    fn new(seed: &'a QuantumSeed) -> Result<Self, RelationError> {
        Ok(Self {
            seed,
            ys: one_step_variables(seed)?,
            pows: RefCell::new(HashMap::new()),
            expanded: RefCell::new(0),
        })
    }

    fn y(&self, i: usize) -> &TorusElem {
        &self.ys[i - 1]
    }

    /// `y_i^t` by left fold, memoized.
    fn ypow(&self, i: usize, t: u32) -> TorusElem {
        if t == 0 {
            return TorusElem::one(self.seed.form());
        }
        if let Some(p) = self.pows.borrow().get(&(i, t)) {
            return p.clone();
        }
        let prev = self.ypow(i, t - 1);
        let p = &prev * self.y(i);
        self.pows.borrow_mut().insert((i, t), p.clone());
        p
    }

    /// `x_i^e` for a generator index `i` in `1..=m`.
    fn xpow(&self, i: usize, e: i64) -> TorusElem {
        TorusElem::basis(
            self.seed.form(),
            ExpVec::unit(self.seed.m(), i - 1).scale(e),
        )
        .expect("ambient length")
    }

    fn product(&self, factors: &[&TorusElem]) -> TorusElem {
        let mut acc = TorusElem::one(self.seed.form());
        for f in factors {
            acc = &acc * f;
        }
        acc
    }

    fn record(&self, summand: &TorusElem) {
        *self.expanded.borrow_mut() += summand.len();
    }

    fn expanded(&self) -> usize {
        *self.expanded.borrow()
    }
}

/// Ordered product `∏^◁_{k ∈ [1,n]} x_k^{a_k}` in the seed's order, where `a_k = exp(k)` (1-based).
pub fn ordered_mutable_product(seed: &QuantumSeed, exp: impl Fn(usize) -> i64) -> TorusElem {
    let n = seed.n();
    let m = seed.m();
    let mut a = vec![0i64; m];
    for (k, slot) in a.iter_mut().enumerate().take(n) {
        *slot = exp(k + 1);
    }
    let mut order: Vec<usize> = seed.order().to_vec();
    order.extend(n..m);
    TorusElem::ordered_product(seed.form(), &ExpVec::new(a), &order).expect("valid permutation")
}

fn pos(v: i64) -> i64 {
    v.max(0)
}

/// The scalar `A` (when `b_ij < 0`) or `C` (when `b_ij > 0`) of the commutator closed form.
pub fn commutator_scalar(seed: &QuantumSeed, i: usize, j: usize) -> QLaurent {
    let b = seed.b(i, j);
    if b < 0 {
        let di = seed.d(i);
        // q^{-d_i/2 - d_i b_ij} - q^{-d_i/2}
        QLaurent::q_half_pow(-di - 2 * di * b) - QLaurent::q_half_pow(-di)
    } else if b > 0 {
        let dj = seed.d(j);
        let bji = seed.b(j, i);
        // q^{-d_j/2} - q^{-d_j/2 - d_j b_ji}
        QLaurent::q_half_pow(-dj) - QLaurent::q_half_pow(-dj - 2 * dj * bji)
    } else {
        QLaurent::zero()
    }
}

/// The monomial `B` (when `b_ij < 0`) or `D` (when `b_ij > 0`) of the commutator closed form,
/// as a product of two `◁`-ordered products.
pub fn commutator_monomial(seed: &QuantumSeed, i: usize, j: usize) -> TorusElem {
    let sign = if seed.b(i, j) > 0 { -1 } else { 1 };
    let first =
        ordered_mutable_product(seed, |k| if k == j { 0 } else { pos(sign * seed.b(k, i)) });
    let second =
        ordered_mutable_product(seed, |k| if k == i { 0 } else { pos(-sign * seed.b(k, j)) });
    &first * &second
}

/// Closed form of `y_i y_j - y_j y_i`.
pub fn commutator_witness(
    seed: &QuantumSeed,
    i: usize,
    j: usize,
) -> Result<TorusElem, RelationError> {
    require_principal(seed)?;
    check_pair(seed, i, j)?;
    let b = seed.b(i, j);
    let bji = seed.b(j, i);
    let n = seed.n();
    let ctx_x = |k: usize, e: i64| {
        TorusElem::basis(seed.form(), ExpVec::unit(seed.m(), k - 1).scale(e)).expect("length")
    };
    let mono = commutator_monomial(seed, i, j);
    let w = if b < 0 {
        let parts = [ctx_x(i, -b - 1), ctx_x(j, bji - 1), mono, ctx_x(n + i, 1)];
        parts
            .iter()
            .fold(TorusElem::one(seed.form()), |acc, f| &acc * f)
    } else if b > 0 {
        let parts = [ctx_x(i, b - 1), ctx_x(j, -bji - 1), mono, ctx_x(n + j, 1)];
        parts
            .iter()
            .fold(TorusElem::one(seed.form()), |acc, f| &acc * f)
    } else {
        return Ok(TorusElem::zero(seed.form()));
    };
    Ok(w.scale(&commutator_scalar(seed, i, j)))
}

/// Three independent computations of a power product.
#[derive(Clone, Debug)]
pub struct PowerProductForms {
    /// Direct fold of torus multiplication.
    pub brute: TorusElem,
    /// Telescoping product of `t` two-term factors.
    pub product: TorusElem,
    /// q-binomial expansion.
    pub binomial: TorusElem,
}

pub fn power_product_forms(
    seed: &QuantumSeed,
    i: usize,
    t: u32,
    side: Side,
) -> Result<PowerProductForms, RelationError> {
    require_principal(seed)?;
    check_index(seed, i)?;
    if t == 0 {
        return Err(RelationError::Precondition("t >= 1".into()));
    }
    let ctx = Ctx::new(seed)?;
    Ok(power_product_forms_in(&ctx, i, t, side))
}

fn power_product_forms_in(ctx: &Ctx<'_>, i: usize, t: u32, side: Side) -> PowerProductForms {
    let seed = ctx.seed;
    let n = seed.n();
    let di = seed.d(i);
    let ti = t as i64;
    let yt = ctx.ypow(i, t);
    let xt = ctx.xpow(i, ti);
    let brute = match side {
        Side::Left => &yt * &xt,
        Side::Right => &xt * &yt,
    };
    let p_minus = ordered_mutable_product(seed, |v| pos(-seed.b(v, i)));
    let p_plus = &ordered_mutable_product(seed, |v| pos(seed.b(v, i))) * &ctx.xpow(n + i, 1);
    let mut product = TorusElem::one(seed.form());
    for r in 1..=ti {
        // q^{∓d_i/2 ± d_i r}
        let half = match side {
            Side::Left => -di + 2 * di * r,
            Side::Right => di - 2 * di * r,
        };
        let factor = &p_minus + &p_plus.scale(&QLaurent::q_half_pow(half));
        product = &product * &factor;
    }
    let mut binomial = TorusElem::zero(seed.form());
    for k in 0..=ti {
        let twist = match side {
            Side::Left => di * k * k,
            Side::Right => di * k * (k - 2 * ti),
        };
        let coeff = q_binom(ti, k, di).expect("positive base") * QLaurent::q_half_pow(twist);
        let left = ordered_mutable_product(seed, |v| (ti - k) * pos(-seed.b(v, i)));
        let right = ordered_mutable_product(seed, |v| k * pos(seed.b(v, i)));
        let term = ctx.product(&[&left, &right, &ctx.xpow(n + i, k)]);
        binomial = &binomial + &term.scale(&coeff);
    }
    PowerProductForms {
        brute,
        product,
        binomial,
    }
}

/// `Σ_{s=0}^{top} q^{d w s} (Σ_{r≤s} (-1)^r q^{d(r(r-1)/2 - c r)} [top+1, r]_{q^d}) y_i^{top-s} x_i^{xe} y_i^s`
fn lemma_sum(ctx: &Ctx<'_>, i: usize, top: i64, w: i64, c: i64, xe: i64) -> TorusElem {
    let d = ctx.seed.d(i);
    let xi = ctx.xpow(i, xe);
    let mut partial = QLaurent::zero();
    let mut total = TorusElem::zero(ctx.seed.form());
    for s in 0..=top {
        let dr =
            alt_sign(s) * qd(d, s * (s - 1) / 2 - c * s) * q_binom(top + 1, s, d).expect("base");
        partial += &dr;
        let coeff = qd(d, w * s) * partial.clone();
        let term = ctx
            .product(&[&ctx.ypow(i, (top - s) as u32), &xi, &ctx.ypow(i, s as u32)])
            .scale(&coeff);
        ctx.record(&term);
        total = &total + &term;
    }
    total
}

/// `Σ_{r=0}^{N} (-1)^r (q^{d_a})^{r(r-1)/2 - c r} [N, r]_{q^{d_a}} y_a^{N-r} y_b^l y_a^r`
fn serre_sum(ctx: &Ctx<'_>, a: usize, b: usize, big_n: i64, c: i64, l: u32) -> TorusElem {
    let d = ctx.seed.d(a);
    let ybl = ctx.ypow(b, l);
    let mut total = TorusElem::zero(ctx.seed.form());
    for r in 0..=big_n {
        let coeff =
            alt_sign(r) * qd(d, r * (r - 1) / 2 - c * r) * q_binom(big_n, r, d).expect("base");
        let term = ctx
            .product(&[
                &ctx.ypow(a, (big_n - r) as u32),
                &ybl,
                &ctx.ypow(a, r as u32),
            ])
            .scale(&coeff);
        ctx.record(&term);
        total = &total + &term;
    }
    total
}

/// Reversed-side family: `Σ_r (-1)^r (q^{d_j})^{r(r-1)/2} [b_ji+1, r]_{q^{d_j}} y_j^r y_i y_j^{b_ji+1-r}`.
fn serre_opposite_sum(ctx: &Ctx<'_>, i: usize, j: usize) -> TorusElem {
    let d = ctx.seed.d(j);
    let big_n = ctx.seed.b(j, i) + 1;
    let mut total = TorusElem::zero(ctx.seed.form());
    for r in 0..=big_n {
        let coeff = alt_sign(r) * qd(d, r * (r - 1) / 2) * q_binom(big_n, r, d).expect("base");
        let term = ctx
            .product(&[
                &ctx.ypow(j, r as u32),
                ctx.y(i),
                &ctx.ypow(j, (big_n - r) as u32),
            ])
            .scale(&coeff);
        ctx.record(&term);
        total = &total + &term;
    }
    total
}

/// Checks the stated range of the higher-order relation; returns the first failed inequality.
pub fn higher_precondition(b: i64, l: i64, m: i64) -> Result<(), String> {
    if l <= 0 {
        return Err(format!("l > 0 (l = {l})"));
    }
    if b == 0 {
        if m < 0 {
            return Err(format!("m >= 0 (m = {m})"));
        }
        return Ok(());
    }
    let ab = b.abs();
    if l > ab {
        return Err(if b < 0 {
            format!("-b_ij >= l (l = {l}, -b_ij = {ab})")
        } else {
            format!("b_ij >= l (l = {l}, b_ij = {ab})")
        });
    }
    if m < l * ab {
        return Err(if b < 0 {
            format!("m >= -l*b_ij (m = {m}, -l*b_ij = {})", l * ab)
        } else {
            format!("m >= l*b_ij (m = {m}, l*b_ij = {})", l * ab)
        });
    }
    Ok(())
}

/// Shape of a lemma sum: outer range `top`, weight `w` per step, twist `c` and the `x_i` exponent.
struct LemmaShape {
    top: i64,
    w: i64,
    c: i64,
    xe: i64,
}

impl From<(i64, i64, i64, i64)> for LemmaShape {
    fn from((top, w, c, xe): (i64, i64, i64, i64)) -> Self {
        Self { top, w, c, xe }
    }
}

/// Shape of the lemma sum, and the failed inequality if the instance is out of range.
fn lemma_params(
    b: i64,
    variant: LemmaVariant,
) -> Result<(LemmaShape, Option<String>), RelationError> {
    if b == 0 {
        return Err(RelationError::Precondition("b_ij != 0".into()));
    }
    match variant {
        LemmaVariant::L32 => Ok((
            if b < 0 {
                (-b, -1, 0, -b - 1)
            } else {
                (b, b, b, b - 1)
            }
            .into(),
            None,
        )),
        LemmaVariant::L41 { m, t } => {
            if t < 0 {
                return Err(RelationError::Precondition(format!("t >= 0 (t = {t})")));
            }
            if m < 0 {
                return Err(RelationError::Precondition(format!("m >= 0 (m = {m})")));
            }
            let out = higher_precondition(b, t + 1, m).err();
            Ok((
                if b < 0 {
                    (m, -1, 0, -b * (1 + t) - 1)
                } else {
                    (m, b * (1 + t), m, b * (1 + t) - 1)
                }
                .into(),
                out,
            ))
        }
    }
}

fn certify(
    check: Check,
    value: TorusElem,
    expanded: usize,
    exploratory: bool,
    start: Instant,
) -> VerificationCertificate {
    VerificationCertificate {
        check,
        pass: value.is_zero(),
        remainder: value.canonical_string(),
        remainder_terms: value.len(),
        expanded_terms: expanded,
        exploratory,
        elapsed: start.elapsed(),
    }
}

/// Runs one check against a principal seed.
pub fn run_check(
    seed: &QuantumSeed,
    check: &Check,
) -> Result<VerificationCertificate, RelationError> {
    let start = Instant::now();
    let ctx = Ctx::new(seed)?;
    match *check {
        Check::Commutator { i, j } => {
            check_pair(seed, i, j)?;
            let lhs = &(ctx.y(i) * ctx.y(j)) - &(ctx.y(j) * ctx.y(i));
            ctx.record(&lhs);
            let rem = &lhs - &commutator_witness(seed, i, j)?;
            Ok(certify(check.clone(), rem, ctx.expanded(), false, start))
        }
        Check::PowerProduct { i, t, side } => {
            check_index(seed, i)?;
            if t == 0 {
                return Err(RelationError::Precondition("t >= 1".into()));
            }
            let f = power_product_forms_in(&ctx, i, t, side);
            ctx.record(&f.brute);
            ctx.record(&f.product);
            ctx.record(&f.binomial);
            let first = &f.brute - &f.product;
            let rem = if first.is_zero() {
                &f.brute - &f.binomial
            } else {
                first
            };
            Ok(certify(check.clone(), rem, ctx.expanded(), false, start))
        }
        Check::LemmaSum {
            i,
            j,
            variant,
            exploratory,
        } => {
            check_pair(seed, i, j)?;
            let (LemmaShape { top, w, c, xe }, out) = lemma_params(seed.b(i, j), variant)?;
            if let (Some(why), false) = (&out, exploratory) {
                return Err(RelationError::Precondition(why.clone()));
            }
            let value = lemma_sum(&ctx, i, top, w, c, xe);
            Ok(certify(
                check.clone(),
                value,
                ctx.expanded(),
                out.is_some(),
                start,
            ))
        }
        Check::Serre { i, j } => {
            check_pair(seed, i, j)?;
            let b = seed.b(i, j);
            let value = if b <= 0 {
                serre_sum(&ctx, i, j, -b + 1, 0, 1)
            } else {
                serre_sum(&ctx, i, j, b + 1, b, 1)
            };
            Ok(certify(check.clone(), value, ctx.expanded(), false, start))
        }
        Check::SerreOpposite { i, j } => {
            check_pair(seed, i, j)?;
            let b = seed.b(i, j);
            if b > 0 {
                return Err(RelationError::Precondition(format!(
                    "b_ij <= 0 (b_ij = {b})"
                )));
            }
            let value = serre_opposite_sum(&ctx, i, j);
            Ok(certify(check.clone(), value, ctx.expanded(), false, start))
        }
        Check::Higher {
            i,
            j,
            l,
            m,
            exploratory,
        } => {
            check_pair(seed, i, j)?;
            if l <= 0 || m < 0 {
                return Err(RelationError::Precondition(format!(
                    "l > 0 and m >= 0 (l = {l}, m = {m})"
                )));
            }
            let b = seed.b(i, j);
            let out = higher_precondition(b, l, m).err();
            if let (Some(why), false) = (&out, exploratory) {
                return Err(RelationError::Precondition(why.clone()));
            }
            let c = if b > 0 { m } else { 0 };
            let value = serre_sum(&ctx, i, j, m + 1, c, l as u32);
            Ok(certify(
                check.clone(),
                value,
                ctx.expanded(),
                out.is_some(),
                start,
            ))
        }
        Check::ReductionSupport { i, j, l } => {
            check_pair(seed, i, j)?;
            let b = seed.b(i, j);
            if b == 0 || l <= 0 || l > b.abs() {
                return Err(RelationError::Precondition(format!(
                    "b_ij != 0 and 0 < l <= |b_ij| (l = {l}, b_ij = {b})"
                )));
            }
            let inner = reduction_inner_sum(&ctx, i, j, l);
            ctx.record(&inner);
            let n = seed.n();
            let stray: Vec<(ExpVec, QLaurent)> = inner
                .terms()
                .filter(|(e, _)| {
                    let ei = e.entries()[i - 1];
                    if b < 0 {
                        !(0..l).any(|k| ei == -b * k)
                    } else {
                        let k = e.entries()[n + j - 1];
                        !((0..l).contains(&k) && ei == b * k)
                    }
                })
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect();
            let rem = TorusElem::from_terms(seed.form(), stray).expect("same length");
            let mut cert = certify(check.clone(), rem, ctx.expanded(), false, start);
            cert.pass = cert.pass && !inner.is_zero();
            Ok(cert)
        }
    }
}

/// The inner sum whose `x_i` support the reduction step predicts:
/// for `b_ij < 0`, `Σ_{t=1}^l (q^{d_i})^{-b_ij(l-t)} y_j^{t-1} x_j^{b_ji-1} y_j^{l-t}`;
/// for `b_ij > 0`, `Σ_{t=1}^l (q^{d_j})^{t-l} y_j^{t-1} x_j^{-b_ji-1} y_j^{l-t}`.
fn reduction_inner_sum(ctx: &Ctx<'_>, i: usize, j: usize, l: i64) -> TorusElem {
    let seed = ctx.seed;
    let b = seed.b(i, j);
    let bji = seed.b(j, i);
    let (xe, weight): (i64, Box<dyn Fn(i64) -> QLaurent>) = if b < 0 {
        let di = seed.d(i);
        (bji - 1, Box::new(move |t| qd(di, -b * (l - t))))
    } else {
        let dj = seed.d(j);
        (-bji - 1, Box::new(move |t| qd(dj, t - l)))
    };
    let xj = ctx.xpow(j, xe);
    let mut total = TorusElem::zero(seed.form());
    for t in 1..=l {
        let term = ctx
            .product(&[
                &ctx.ypow(j, (t - 1) as u32),
                &xj,
                &ctx.ypow(j, (l - t) as u32),
            ])
            .scale(&weight(t));
        total = &total + &term;
    }
    total
}

pub fn commutator_check(
    seed: &QuantumSeed,
    i: usize,
    j: usize,
) -> Result<VerificationCertificate, RelationError> {
    run_check(seed, &Check::Commutator { i, j })
}

pub fn power_product_check(
    seed: &QuantumSeed,
    i: usize,
    t: u32,
    side: Side,
) -> Result<VerificationCertificate, RelationError> {
    run_check(seed, &Check::PowerProduct { i, t, side })
}

pub fn lemma_sum_check(
    seed: &QuantumSeed,
    i: usize,
    j: usize,
    variant: LemmaVariant,
) -> Result<VerificationCertificate, RelationError> {
    run_check(
        seed,
        &Check::LemmaSum {
            i,
            j,
            variant,
            exploratory: false,
        },
    )
}

pub fn serre_verify(
    seed: &QuantumSeed,
    i: usize,
    j: usize,
) -> Result<VerificationCertificate, RelationError> {
    run_check(seed, &Check::Serre { i, j })
}

pub fn serre_verify_opposite(
    seed: &QuantumSeed,
    i: usize,
    j: usize,
) -> Result<VerificationCertificate, RelationError> {
    run_check(seed, &Check::SerreOpposite { i, j })
}

pub fn higher_verify(
    seed: &QuantumSeed,
    i: usize,
    j: usize,
    l: i64,
    m: i64,
    exploratory: bool,
) -> Result<VerificationCertificate, RelationError> {
    run_check(
        seed,
        &Check::Higher {
            i,
            j,
            l,
            m,
            exploratory,
        },
    )
}

/// Runs checks with the given schedule; results keep the input order.
pub fn run_checks(
    seed: &QuantumSeed,
    checks: &[Check],
    exec: Execution,
) -> Vec<Result<VerificationCertificate, RelationError>> {
    exec.map(checks, |c| run_check(seed, c))
}

/// Generalized Cartan matrix `c_ii = 2`, `c_ij = -|b_ij|`; `D·C` is verified symmetric.
pub fn cartan_matrix(b: &IntMatrix, d: &Skewsymmetrizer) -> Result<IntMatrix, RelationError> {
    let n = b.rows();
    if b.cols() != n || d.len() != n {
        return Err(RelationError::Precondition(
            "B must be square with one symmetrizer entry per row".into(),
        ));
    }
    if let Some((i, j)) = d.violation(b) {
        return Err(RelationError::Seed(SeedError::NotSkewSymmetrizable {
            i,
            j,
        }));
    }
    let c = IntMatrix::from_fn(n, n, |i, j| if i == j { 2 } else { -b[(i, j)].abs() });
    for i in 0..n {
        for j in 0..n {
            assert_eq!(
                d.entries()[i] * c[(i, j)],
                d.entries()[j] * c[(j, i)],
                "D*C is not symmetric"
            );
        }
    }
    Ok(c)
}

/// Serre relations for every ordered pair, and the reversed-side family where `b_ij <= 0`.
pub fn quantum_group_checks(seed: &QuantumSeed) -> Vec<Check> {
    let n = seed.n();
    let mut out = Vec::new();
    for i in 1..=n {
        for j in 1..=n {
            if i == j {
                continue;
            }
            out.push(Check::Serre { i, j });
            if seed.b(i, j) <= 0 {
                out.push(Check::SerreOpposite { i, j });
            }
        }
    }
    out
}

pub fn quantum_group_suite(
    seed: &QuantumSeed,
    exec: Execution,
) -> Result<Vec<VerificationCertificate>, RelationError> {
    require_principal(seed)?;
    run_checks(seed, &quantum_group_checks(seed), exec)
        .into_iter()
        .collect()
}

/// Higher-order instances at the boundary of the stated range: for `b_ij != 0`,
/// every `l` in `1..=|b_ij|` with `m = l|b_ij|`; for `b_ij = 0`, `(l, m) = (1, 0)` and `(2, 1)`.
pub fn boundary_higher_checks(seed: &QuantumSeed) -> Vec<Check> {
    let n = seed.n();
    let mut out = Vec::new();
    for i in 1..=n {
        for j in 1..=n {
            if i == j {
                continue;
            }
            let b = seed.b(i, j).abs();
            let pairs: Vec<(i64, i64)> = if b == 0 {
                vec![(1, 0), (2, 1)]
            } else {
                (1..=b).map(|l| (l, l * b)).collect()
            };
            out.extend(pairs.into_iter().map(|(l, m)| Check::Higher {
                i,
                j,
                l,
                m,
                exploratory: false,
            }));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exam1() -> QuantumSeed {
        QuantumSeed::principal(
            &IntMatrix::from_rows(vec![vec![0, 1], vec![-2, 0]]).unwrap(),
            &Skewsymmetrizer::new(vec![2, 1]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn commutator_scalar_value() {
        let a = commutator_scalar(&exam1(), 2, 1);
        assert_eq!(a, "q^(3/2) - q^(-1/2)".parse().unwrap());
    }

    #[test]
    fn witness_matches_commutator() {
        let s = exam1();
        for (i, j) in [(1, 2), (2, 1)] {
            let c = commutator_check(&s, i, j).unwrap();
            assert!(c.pass, "{}", c.render_block());
        }
    }

    #[test]
    fn serre_and_higher_on_small_example() {
        let s = exam1();
        assert!(serre_verify(&s, 2, 1).unwrap().pass);
        assert!(serre_verify(&s, 1, 2).unwrap().pass);
        assert!(higher_verify(&s, 1, 2, 1, 2, false).unwrap().pass);
        assert!(higher_verify(&s, 2, 1, 2, 4, false).unwrap().pass);
    }

    #[test]
    fn precondition_messages_name_the_inequality() {
        let s = exam1();
        let err = higher_verify(&s, 2, 1, 3, 6, false).unwrap_err();
        assert!(err.to_string().contains("-b_ij >= l"), "{err}");
        let err = higher_verify(&s, 2, 1, 2, 3, false).unwrap_err();
        assert!(err.to_string().contains("m >= -l*b_ij"), "{err}");
        let cert = higher_verify(&s, 2, 1, 2, 3, true).unwrap();
        assert!(cert.exploratory);
        assert!(matches!(
            serre_verify_opposite(&s, 1, 2),
            Err(RelationError::Precondition(_))
        ));
        assert_eq!(
            serre_verify(&s, 1, 1).unwrap_err(),
            RelationError::SameIndex(1)
        );
    }

    #[test]
    fn cartan_of_small_example() {
        let c = cartan_matrix(
            &IntMatrix::from_rows(vec![vec![0, 1], vec![-2, 0]]).unwrap(),
            &Skewsymmetrizer::new(vec![2, 1]).unwrap(),
        )
        .unwrap();
        assert_eq!(c.to_rows(), vec![vec![2, -1], vec![-2, 2]]);
    }

    #[test]
    fn certificate_rendering() {
        let c = serre_verify(&exam1(), 2, 1).unwrap();
        assert_eq!(c.summary_line(), "SERRE(i=2,j=1) = PASS");
        assert!(c
            .render_block()
            .starts_with("SERRE(i=2,j=1)\n  verdict: PASS\n"));
        assert!(!c.render_block().contains("remainder"));
        assert_eq!(c.to_json()["params"]["i"], 2);
    }

    #[test]
    fn non_principal_rejected() {
        let s = exam1().mutate(1).unwrap();
        assert_eq!(
            one_step_variables(&s).unwrap_err(),
            RelationError::NotPrincipal
        );
    }
}
