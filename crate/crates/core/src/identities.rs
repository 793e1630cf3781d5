use std::cell::Cell;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

use thiserror::Error;

use crate::parallel::Execution;
use crate::qarith::{q_binom, q_int, QLaurent};

/// Coefficient ring for [`UniPoly`].
pub trait Coeff: Clone + PartialEq + fmt::Display {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    /// Whether the rendering needs parentheses when followed by `*var`.
    fn is_compound(&self) -> bool;
}

impl Coeff for QLaurent {
    fn zero() -> Self {
        QLaurent::zero()
    }
    fn is_zero(&self) -> bool {
        QLaurent::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn is_compound(&self) -> bool {
        self.len() > 1
    }
}

/// Polynomial in a central indeterminate named `X` with coefficients in `C`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct UniPoly<C, const X: char> {
    coeffs: BTreeMap<u32, C>,
}

impl<C: Coeff, const X: char> UniPoly<C, X> {
    pub fn zero() -> Self {
        Self {
            coeffs: BTreeMap::new(),
        }
    }

    pub fn monomial(c: C, deg: u32) -> Self {
        let mut p = Self::zero();
        if !c.is_zero() {
            p.coeffs.insert(deg, c);
        }
        p
    }

    pub fn constant(c: C) -> Self {
        Self::monomial(c, 0)
    }

    pub fn coeff(&self, deg: u32) -> C {
        self.coeffs.get(&deg).cloned().unwrap_or_else(C::zero)
    }

    pub fn degree(&self) -> Option<u32> {
        self.coeffs.keys().next_back().copied()
    }

    fn add_term(&mut self, deg: u32, c: &C) {
        if c.is_zero() {
            return;
        }
        let sum = match self.coeffs.get(&deg) {
            Some(existing) => existing.add(c),
            None => c.clone(),
        };
        if sum.is_zero() {
            self.coeffs.remove(&deg);
        } else {
            self.coeffs.insert(deg, sum);
        }
    }
}

impl<C: Coeff, const X: char> Add for &UniPoly<C, X> {
    type Output = UniPoly<C, X>;
    fn add(self, rhs: &UniPoly<C, X>) -> UniPoly<C, X> {
        let mut out = self.clone();
        for (&k, c) in &rhs.coeffs {
            out.add_term(k, c);
        }
        out
    }
}

impl<C: Coeff, const X: char> Mul for &UniPoly<C, X> {
    type Output = UniPoly<C, X>;
    // degrees add under multiplication
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: &UniPoly<C, X>) -> UniPoly<C, X> {
        let mut out = UniPoly::zero();
        for (&a, c) in &self.coeffs {
            for (&b, d) in &rhs.coeffs {
                out.add_term(a + b, &c.mul(d));
            }
        }
        out
    }
}

impl<C: Coeff, const X: char> Coeff for UniPoly<C, X> {
    fn zero() -> Self {
        UniPoly::zero()
    }
    fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn is_compound(&self) -> bool {
        self.coeffs.len() > 1 || self.coeffs.keys().any(|&k| k > 0)
    }
}

/// Ascending degree: `c0 + (c1)*x + (c2)*x^2`.
impl<C: Coeff, const X: char> fmt::Display for UniPoly<C, X> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return f.write_str("0");
        }
        for (i, (&k, c)) in self.coeffs.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            let coeff = if c.is_compound() {
                format!("({c})")
            } else {
                c.to_string()
            };
            match k {
                0 => write!(f, "{coeff}")?,
                1 => write!(f, "{coeff}*{X}")?,
                _ => write!(f, "{coeff}*{X}^{k}")?,
            }
        }
        Ok(())
    }
}

pub type PolyX = UniPoly<QLaurent, 'x'>;
pub type PolyXY = UniPoly<UniPoly<QLaurent, 'y'>, 'x'>;

/// The standalone q-identities, each with its parameter names and precondition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IdentityFamily {
    Vanishing,
    ShiftedVanishing,
    ProductExpansion,
    ProductExpansionBivar,
    Vandermonde,
    DoubleSumNeg,
    DoubleSumPos,
    Pascal,
    Reversal,
    Symmetry,
    BaseChange,
}

impl IdentityFamily {
    pub const ALL: [IdentityFamily; 11] = [
        IdentityFamily::Vanishing,
        IdentityFamily::ShiftedVanishing,
        IdentityFamily::ProductExpansion,
        IdentityFamily::ProductExpansionBivar,
        IdentityFamily::Vandermonde,
        IdentityFamily::DoubleSumNeg,
        IdentityFamily::DoubleSumPos,
        IdentityFamily::Pascal,
        IdentityFamily::Reversal,
        IdentityFamily::Symmetry,
        IdentityFamily::BaseChange,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IdentityFamily::Vanishing => "VANISHING",
            IdentityFamily::ShiftedVanishing => "SHIFTED_VANISHING",
            IdentityFamily::ProductExpansion => "PRODUCT_EXPANSION",
            IdentityFamily::ProductExpansionBivar => "PRODUCT_EXPANSION_BIVAR",
            IdentityFamily::Vandermonde => "VANDERMONDE",
            IdentityFamily::DoubleSumNeg => "DOUBLE_SUM_NEG",
            IdentityFamily::DoubleSumPos => "DOUBLE_SUM_POS",
            IdentityFamily::Pascal => "PASCAL",
            IdentityFamily::Reversal => "REVERSAL",
            IdentityFamily::Symmetry => "SYMMETRY",
            IdentityFamily::BaseChange => "BASE_CHANGE",
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            IdentityFamily::Vanishing => &["d"],
            IdentityFamily::ShiftedVanishing => &["d", "c"],
            IdentityFamily::ProductExpansion | IdentityFamily::ProductExpansionBivar => &["n"],
            IdentityFamily::Vandermonde => &["n", "d", "k"],
            IdentityFamily::DoubleSumNeg => &["n", "k"],
            IdentityFamily::DoubleSumPos => &["n", "v", "k"],
            IdentityFamily::Pascal => &["n", "r", "d"],
            IdentityFamily::Reversal => &["n", "d"],
            IdentityFamily::Symmetry => &["n", "r", "d"],
            IdentityFamily::BaseChange => &["n", "r", "d"],
        }
    }

    /// Human-readable precondition on the parameters.
    pub fn requirement(self) -> &'static str {
        match self {
            IdentityFamily::Vanishing => "d >= 1",
            IdentityFamily::ShiftedVanishing => "d >= 1 and 0 <= c <= d-1",
            IdentityFamily::ProductExpansion | IdentityFamily::ProductExpansionBivar => "n >= 1",
            IdentityFamily::Vandermonde => "k >= 0 and 0 <= d <= n",
            IdentityFamily::DoubleSumNeg => "1 <= k <= n",
            IdentityFamily::DoubleSumPos => "0 <= k <= v-1 and v <= n",
            IdentityFamily::Pascal => "n >= 0, 0 <= r <= n+1, d >= 1",
            IdentityFamily::Reversal => "n >= 0, d >= 1",
            IdentityFamily::Symmetry => "0 <= r <= n, d >= 1",
            IdentityFamily::BaseChange => "n >= 1, r >= 1, d >= 1",
        }
    }

    fn in_range(self, p: &[i64]) -> bool {
        match self {
            IdentityFamily::Vanishing => p[0] >= 1,
            IdentityFamily::ShiftedVanishing => p[0] >= 1 && 0 <= p[1] && p[1] < p[0],
            IdentityFamily::ProductExpansion | IdentityFamily::ProductExpansionBivar => p[0] >= 1,
            IdentityFamily::Vandermonde => p[2] >= 0 && 0 <= p[1] && p[1] <= p[0],
            IdentityFamily::DoubleSumNeg => 1 <= p[1] && p[1] <= p[0],
            IdentityFamily::DoubleSumPos => 0 <= p[2] && p[2] < p[1] && p[1] <= p[0],
            IdentityFamily::Pascal => p[0] >= 0 && 0 <= p[1] && p[1] <= p[0] + 1 && p[2] >= 1,
            IdentityFamily::Reversal => p[0] >= 0 && p[1] >= 1,
            IdentityFamily::Symmetry => 0 <= p[1] && p[1] <= p[0] && p[2] >= 1,
            IdentityFamily::BaseChange => p[0] >= 1 && p[1] >= 1 && p[2] >= 1,
        }
    }

    /// Every parameter tuple of the exhaustive sweep, in lexicographic order.
    pub fn sweep_params(self) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        match self {
            IdentityFamily::Vanishing => out.extend((1..=10).map(|d| vec![d])),
            IdentityFamily::ShiftedVanishing => {
                for d in 1..=10 {
                    out.extend((0..d).map(|c| vec![d, c]));
                }
            }
            IdentityFamily::ProductExpansion | IdentityFamily::ProductExpansionBivar => {
                out.extend((1..=10).map(|n| vec![n]))
            }
            IdentityFamily::Vandermonde => {
                for n in 0..=8 {
                    for d in 0..=n {
                        out.extend((0..=8).map(|k| vec![n, d, k]));
                    }
                }
            }
            IdentityFamily::DoubleSumNeg => {
                for n in 1..=8 {
                    out.extend((1..=n).map(|k| vec![n, k]));
                }
            }
            IdentityFamily::DoubleSumPos => {
                for n in 1..=8 {
                    for v in 1..=n {
                        out.extend((0..v).map(|k| vec![n, v, k]));
                    }
                }
            }
            IdentityFamily::Pascal => {
                for n in 0..=11 {
                    for r in 0..=n + 1 {
                        out.extend((1..=3).map(|d| vec![n, r, d]));
                    }
                }
            }
            IdentityFamily::Reversal => {
                for n in 0..=12 {
                    out.extend((1..=3).map(|d| vec![n, d]));
                }
            }
            IdentityFamily::Symmetry => {
                for n in 0..=10 {
                    for r in 0..=n {
                        out.extend((1..=3).map(|d| vec![n, r, d]));
                    }
                }
            }
            IdentityFamily::BaseChange => {
                for n in 1..=8 {
                    for r in 1..=8 {
                        out.extend((1..=3).map(|d| vec![n, r, d]));
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for IdentityFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IdentityFamily {
    type Err = IdentityError;
    fn from_str(s: &str) -> Result<Self, IdentityError> {
        let key = s.trim().to_ascii_uppercase().replace('-', "_");
        IdentityFamily::ALL
            .into_iter()
            .find(|f| f.name() == key)
            .ok_or_else(|| IdentityError::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IdentityError {
    #[error("unknown identity family {0:?}")]
    UnknownFamily(String),
    #[error("{family} takes {expected} parameters ({names}), got {found}")]
    Arity {
        family: IdentityFamily,
        expected: usize,
        names: String,
        found: usize,
    },
    #[error("{family}{params:?} violates the precondition {requirement}")]
    OutOfRange {
        family: IdentityFamily,
        params: Vec<i64>,
        requirement: &'static str,
    },
}

/// Outcome of one exact check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentityReport {
    pub family: IdentityFamily,
    pub params: Vec<i64>,
    pub lhs: String,
    pub rhs: String,
    pub pass: bool,
}

impl IdentityReport {
    pub fn verdict(&self) -> &'static str {
        if self.pass {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

impl fmt::Display for IdentityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self
            .family
            .param_names()
            .iter()
            .zip(&self.params)
            .map(|(n, v)| format!("{n}={v}"))
            .collect();
        write!(
            f,
            "{}({}) = {}",
            self.family,
            args.join(","),
            self.verdict()
        )
    }
}

/// Supplies q-binomials and q-integers, optionally adding 1 to the first one requested.
struct Source {
    perturb: Cell<bool>,
}

impl Source {
    fn bump(&self, v: QLaurent) -> QLaurent {
        if self.perturb.replace(false) {
            v + QLaurent::one()
        } else {
            v
        }
    }

    fn binom(&self, n: i64, r: i64, d: i64) -> QLaurent {
        self.bump(q_binom(n, r, d).expect("base is positive"))
    }

    fn int(&self, n: i64, d: i64) -> QLaurent {
        self.bump(q_int(n, d).expect("arguments checked"))
    }
}

fn qp(e: i64) -> QLaurent {
    QLaurent::q_pow(e)
}

fn sign(r: i64) -> QLaurent {
    QLaurent::constant(if r % 2 == 0 { 1 } else { -1 })
}

fn validate(family: IdentityFamily, params: &[i64]) -> Result<(), IdentityError> {
    let names = family.param_names();
    if params.len() != names.len() {
        return Err(IdentityError::Arity {
            family,
            expected: names.len(),
            names: names.join(","),
            found: params.len(),
        });
    }
    if !family.in_range(params) {
        return Err(IdentityError::OutOfRange {
            family,
            params: params.to_vec(),
            requirement: family.requirement(),
        });
    }
    Ok(())
}

/// Expands both sides of the identity exactly and compares them.
pub fn check_identity(
    family: IdentityFamily,
    params: &[i64],
) -> Result<IdentityReport, IdentityError> {
    run(family, params, false)
}

/// Same as [`check_identity`] but with the first q-binomial or q-integer increased by 1.
pub fn check_identity_perturbed(
    family: IdentityFamily,
    params: &[i64],
) -> Result<IdentityReport, IdentityError> {
    run(family, params, true)
}

fn scalar(lhs: QLaurent, rhs: QLaurent) -> (String, String, bool) {
    let pass = lhs == rhs;
    (lhs.to_string(), rhs.to_string(), pass)
}

fn run(
    family: IdentityFamily,
    params: &[i64],
    perturb: bool,
) -> Result<IdentityReport, IdentityError> {
    validate(family, params)?;
    let src = Source {
        perturb: Cell::new(perturb),
    };
    let p = params;
    let (lhs, rhs, pass) = match family {
        IdentityFamily::Vanishing | IdentityFamily::ShiftedVanishing => {
            let d = p[0];
            let c = if family == IdentityFamily::ShiftedVanishing {
                p[1]
            } else {
                0
            };
            let mut sum = QLaurent::zero();
            for r in 0..=d {
                sum += &(sign(r) * qp(r * (r - 1) / 2 - c * r) * src.binom(d, r, 1));
            }
            scalar(sum, QLaurent::zero())
        }
        IdentityFamily::ProductExpansion => {
            let n = p[0];
            let mut lhs = PolyX::constant(QLaurent::one());
            for r in 1..=n {
                let factor = &PolyX::constant(QLaurent::one()) + &PolyX::monomial(qp(r), 1);
                lhs = &lhs * &factor;
            }
            let mut rhs = PolyX::zero();
            for k in 0..=n {
                let c = src.binom(n, k, 1) * qp(k * (k + 1) / 2);
                rhs = &rhs + &PolyX::monomial(c, k as u32);
            }
            let pass = lhs == rhs;
            (lhs.to_string(), rhs.to_string(), pass)
        }
        IdentityFamily::ProductExpansionBivar => {
            type PolyY = UniPoly<QLaurent, 'y'>;
            let n = p[0];
            let y = PolyXY::constant(PolyY::monomial(QLaurent::one(), 1));
            let mut lhs = PolyXY::constant(PolyY::constant(QLaurent::one()));
            for r in 1..=n {
                let factor = &y + &PolyXY::monomial(PolyY::constant(qp(r)), 1);
                lhs = &lhs * &factor;
            }
            let mut rhs = PolyXY::zero();
            for k in 0..=n {
                let c = src.binom(n, k, 1) * qp(k * (k + 1) / 2);
                rhs = &rhs + &PolyXY::monomial(PolyY::monomial(c, (n - k) as u32), k as u32);
            }
            let pass = lhs == rhs;
            (lhs.to_string(), rhs.to_string(), pass)
        }
        IdentityFamily::Vandermonde => {
            let (n, d, k) = (p[0], p[1], p[2]);
            let lhs = src.binom(n, k, 1);
            let mut rhs = QLaurent::zero();
            for r in 0..=k {
                rhs += &(qp((d - r) * (k - r)) * src.binom(d, r, 1) * src.binom(n - d, k - r, 1));
            }
            scalar(lhs, rhs)
        }
        IdentityFamily::DoubleSumNeg | IdentityFamily::DoubleSumPos => {
            let n = p[0];
            // (weight exponent per t, extra twist per r)
            let (w, c) = if family == IdentityFamily::DoubleSumNeg {
                (-p[1], 0)
            } else {
                (p[1] - p[2], n)
            };
            let mut sum = QLaurent::zero();
            let mut partial = QLaurent::zero();
            for t in 0..=n {
                partial += &(sign(t) * qp(t * (t - 1) / 2 - c * t) * src.binom(n + 1, t, 1));
                sum += &(qp(t * w) * partial.clone());
            }
            scalar(sum, QLaurent::zero())
        }
        IdentityFamily::Pascal => {
            let (n, r, d) = (p[0], p[1], p[2]);
            let lhs = src.binom(n + 1, r, d);
            let first = src.binom(n, r, d) + qp(d * (n + 1 - r)) * src.binom(n, r - 1, d);
            let second = qp(d * r) * src.binom(n, r, d) + src.binom(n, r - 1, d);
            let pass = lhs == first && lhs == second;
            (
                format!("{lhs} | {lhs}"),
                format!("{first} | {second}"),
                pass,
            )
        }
        IdentityFamily::Reversal => {
            let (n, d) = (p[0], p[1]);
            let lhs = src.int(n, d);
            let rhs = qp(d * (n - 1)) * src.int(n, d).bar();
            scalar(lhs, rhs)
        }
        IdentityFamily::Symmetry => {
            let (n, r, d) = (p[0], p[1], p[2]);
            let lhs = src.binom(n, r, d);
            let rhs = qp(d * r * (n - r)) * src.binom(n, r, d).bar();
            scalar(lhs, rhs)
        }
        IdentityFamily::BaseChange => {
            let (n, r, d) = (p[0], p[1], p[2]);
            let lhs = src.int(n, r * d) * src.int(r, d);
            let rhs = src.int(n, d) * src.int(r, d * n);
            scalar(lhs, rhs)
        }
    };
    Ok(IdentityReport {
        family,
        params: params.to_vec(),
        lhs,
        rhs,
        pass,
    })
}

/// Runs the exhaustive sweep of one family.
pub fn sweep_family(family: IdentityFamily, exec: Execution) -> Vec<IdentityReport> {
    let params = family.sweep_params();
    exec.map(&params, |p| {
        check_identity(family, p).expect("sweep parameters satisfy the precondition")
    })
}

/// Runs every family's sweep, ordered by family then parameters.
pub fn sweep_all(exec: Execution) -> Vec<IdentityReport> {
    let jobs: Vec<(IdentityFamily, Vec<i64>)> = IdentityFamily::ALL
        .into_iter()
        .flat_map(|f| f.sweep_params().into_iter().map(move |p| (f, p)))
        .collect();
    exec.map(&jobs, |(f, p)| {
        check_identity(*f, p).expect("sweep parameters satisfy the precondition")
    })
}
