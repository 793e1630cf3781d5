use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;
use std::sync::Arc;

use num_traits::One;
use thiserror::Error;

use crate::matrix::IntMatrix;
use crate::qarith::{QArithError, QLaurent};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TorusError {
    #[error("exponent vector has length {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operands live over different skew forms")]
    FormMismatch,
    #[error("form is not skew-symmetric at ({i}, {j})")]
    NotSkew { i: usize, j: usize },
    #[error("order is not a permutation of 0..{m}")]
    NotPermutation { m: usize },
    #[error("cannot parse torus element {input:?}: {reason}")]
    Parse { input: String, reason: String },
    #[error(transparent)]
    Coefficient(#[from] QArithError),
}

/// Integer exponent vector. Ordered graded-lexicographically: first by
/// entry sum, then lexicographically by entries.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ExpVec(Vec<i64>);

impl ExpVec {
    pub fn new(entries: Vec<i64>) -> Self {
        Self(entries)
    }

    pub fn zero(m: usize) -> Self {
        Self(vec![0; m])
    }

    /// Standard basis vector with a one at 0-based position `i`.
    pub fn unit(m: usize, i: usize) -> Self {
        let mut v = vec![0; m];
        v[i] = 1;
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[i64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0)
    }

    pub fn degree(&self) -> i64 {
        self.0
            .iter()
            .try_fold(0i64, |acc, &v| acc.checked_add(v))
            .expect("exponent overflow")
    }

    pub fn scale(&self, t: i64) -> Self {
        Self(
            self.0
                .iter()
                .map(|&v| v.checked_mul(t).expect("exponent overflow"))
                .collect(),
        )
    }

    /// Componentwise `[v]_+ = max(v, 0)`.
    pub fn positive_part(&self) -> Self {
        Self(self.0.iter().map(|&v| v.max(0)).collect())
    }

    fn zip_with(&self, other: &ExpVec, f: impl Fn(i64, i64) -> Option<i64>) -> ExpVec {
        assert_eq!(self.len(), other.len(), "exponent length mismatch");
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| f(a, b).expect("exponent overflow"))
                .collect(),
        )
    }
}

impl Ord for ExpVec {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for ExpVec {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &ExpVec {
    type Output = ExpVec;
    fn add(self, rhs: &ExpVec) -> ExpVec {
        self.zip_with(rhs, i64::checked_add)
    }
}

impl Sub for &ExpVec {
    type Output = ExpVec;
    fn sub(self, rhs: &ExpVec) -> ExpVec {
        self.zip_with(rhs, i64::checked_sub)
    }
}

impl Neg for &ExpVec {
    type Output = ExpVec;
    fn neg(self) -> ExpVec {
        ExpVec(
            self.0
                .iter()
                .map(|&v| v.checked_neg().expect("exponent overflow"))
                .collect(),
        )
    }
}

impl From<Vec<i64>> for ExpVec {
    fn from(v: Vec<i64>) -> Self {
        Self(v)
    }
}

impl fmt::Display for ExpVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("]")
    }
}

/// Skew-symmetric integer form `Λ` on `Z^m`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SkewForm {
    lambda: IntMatrix,
}

impl SkewForm {
    pub fn new(lambda: IntMatrix) -> Result<Self, TorusError> {
        if let Some((i, j)) = lambda.skew_violation() {
            return Err(TorusError::NotSkew { i, j });
        }
        Ok(Self { lambda })
    }

    pub fn from_rows(rows: Vec<Vec<i64>>) -> Result<Self, TorusError> {
        let m = IntMatrix::from_rows(rows).map_err(|e| TorusError::Parse {
            input: String::new(),
            reason: e.to_string(),
        })?;
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.lambda.rows()
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.lambda
    }

    /// `λ_ij` with 0-based indices.
    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.lambda[(i, j)]
    }

    /// `Λ(e, f) = eᵀ Λ f`.
    pub fn pairing(&self, e: &ExpVec, f: &ExpVec) -> i64 {
        let m = self.dim();
        assert!(e.len() == m && f.len() == m, "exponent length mismatch");
        let mut acc: i64 = 0;
        for (i, &ei) in e.entries().iter().enumerate() {
            if ei == 0 {
                continue;
            }
            let row = self.lambda.row(i);
            let mut inner: i64 = 0;
            for (j, &fj) in f.entries().iter().enumerate() {
                if fj != 0 {
                    inner = inner
                        .checked_add(row[j].checked_mul(fj).expect("pairing overflow"))
                        .expect("pairing overflow");
                }
            }
            acc = acc
                .checked_add(ei.checked_mul(inner).expect("pairing overflow"))
                .expect("pairing overflow");
        }
        acc
    }
}

/// Finite sum `Σ c_e X^e` in the based quantum torus over a fixed form.
#[derive(Clone)]
pub struct TorusElem {
    form: Arc<SkewForm>,
    terms: BTreeMap<ExpVec, QLaurent>,
}

impl TorusElem {
    pub fn zero(form: &Arc<SkewForm>) -> Self {
        Self {
            form: Arc::clone(form),
            terms: BTreeMap::new(),
        }
    }

    pub fn one(form: &Arc<SkewForm>) -> Self {
        Self::monomial(form, ExpVec::zero(form.dim()), QLaurent::one())
            .expect("zero vector has ambient length")
    }

    /// `c · X^e`.
    pub fn monomial(form: &Arc<SkewForm>, e: ExpVec, c: QLaurent) -> Result<Self, TorusError> {
        if e.len() != form.dim() {
            return Err(TorusError::DimensionMismatch {
                expected: form.dim(),
                found: e.len(),
            });
        }
        let mut out = Self::zero(form);
        if !c.is_zero() {
            out.terms.insert(e, c);
        }
        Ok(out)
    }

    /// `X^e` with unit coefficient.
    pub fn basis(form: &Arc<SkewForm>, e: ExpVec) -> Result<Self, TorusError> {
        Self::monomial(form, e, QLaurent::one())
    }

    /// Generator `x_i = X^{e_i}` with 0-based `i`.
    pub fn generator(form: &Arc<SkewForm>, i: usize) -> Self {
        Self::basis(form, ExpVec::unit(form.dim(), i)).expect("unit vector has ambient length")
    }

    pub fn from_terms<I>(form: &Arc<SkewForm>, terms: I) -> Result<Self, TorusError>
    where
        I: IntoIterator<Item = (ExpVec, QLaurent)>,
    {
        let mut out = Self::zero(form);
        for (e, c) in terms {
            if e.len() != form.dim() {
                return Err(TorusError::DimensionMismatch {
                    expected: form.dim(),
                    found: e.len(),
                });
            }
            out.add_term(e, &c);
        }
        Ok(out)
    }

    pub fn form(&self) -> &Arc<SkewForm> {
        &self.form
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ExpVec, &QLaurent)> {
        self.terms.iter()
    }

    pub fn coeff(&self, e: &ExpVec) -> QLaurent {
        self.terms.get(e).cloned().unwrap_or_default()
    }

    /// The single `(e, c)` when the element is a nonzero monomial.
    pub fn as_monomial(&self) -> Option<(&ExpVec, &QLaurent)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    pub fn same_form(&self, other: &TorusElem) -> bool {
        Arc::ptr_eq(&self.form, &other.form) || *self.form == *other.form
    }

    fn check_form(&self, other: &TorusElem) -> Result<(), TorusError> {
        if self.same_form(other) {
            Ok(())
        } else {
            Err(TorusError::FormMismatch)
        }
    }

    fn add_term(&mut self, e: ExpVec, c: &QLaurent) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&e) {
            Some(existing) => {
                *existing += c;
                if existing.is_zero() {
                    self.terms.remove(&e);
                }
            }
            None => {
                self.terms.insert(e, c.clone());
            }
        }
    }

    pub fn try_add(&self, other: &TorusElem) -> Result<TorusElem, TorusError> {
        self.check_form(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c);
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &TorusElem) -> Result<TorusElem, TorusError> {
        self.check_form(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), &-c);
        }
        Ok(out)
    }

    /// Twisted product: `X^e X^f = q^{Λ(e,f)/2} X^{e+f}`, extended bilinearly.
    pub fn try_mul(&self, other: &TorusElem) -> Result<TorusElem, TorusError> {
        self.check_form(other)?;
        let mut out = Self::zero(&self.form);
        for (e, c) in &self.terms {
            for (f, d) in &other.terms {
                let twist = self.form.pairing(e, f);
                let coeff = (c * d).shift(twist);
                out.add_term(e + f, &coeff);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &QLaurent) -> TorusElem {
        let mut out = Self::zero(&self.form);
        if c.is_zero() {
            return out;
        }
        for (e, d) in &self.terms {
            let p = d * c;
            if !p.is_zero() {
                out.terms.insert(e.clone(), p);
            }
        }
        out
    }

    pub fn pow(&self, t: u32) -> TorusElem {
        let mut acc = Self::one(&self.form);
        for _ in 0..t {
            acc = &acc * self;
        }
        acc
    }

    /// Bar involution `q^{l/2} X^c ↦ q^{-l/2} X^c`.
    pub fn bar(&self) -> TorusElem {
        TorusElem {
            form: Arc::clone(&self.form),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), c.bar()))
                .collect(),
        }
    }

    /// Inverse of a nonzero monomial `c X^e` when `c` is a signed power of `q^{1/2}`.
    pub fn monomial_inverse(&self) -> Option<TorusElem> {
        let (e, c) = self.as_monomial()?;
        let (k, a) = c.terms().next()?;
        if c.len() != 1 || !(a.is_one() || (-a).is_one()) {
            return None;
        }
        let inv = QLaurent::monomial(a.clone(), -k);
        Some(TorusElem::monomial(&self.form, -e, inv).expect("same length"))
    }

    /// `x_{σ(1)}^{a_{σ(1)}} ⋯ x_{σ(m)}^{a_{σ(m)}}` for a 0-based permutation `σ`.
    pub fn ordered_product(
        form: &Arc<SkewForm>,
        a: &ExpVec,
        order: &[usize],
    ) -> Result<TorusElem, TorusError> {
        let m = form.dim();
        if a.len() != m {
            return Err(TorusError::DimensionMismatch {
                expected: m,
                found: a.len(),
            });
        }
        let mut seen = vec![false; m];
        if order.len() != m
            || order
                .iter()
                .any(|&i| i >= m || std::mem::replace(&mut seen[i], true))
        {
            return Err(TorusError::NotPermutation { m });
        }
        let mut acc = Self::one(form);
        for &i in order {
            let ai = a.entries()[i];
            if ai == 0 {
                continue;
            }
            let factor = Self::basis(form, ExpVec::unit(m, i).scale(ai))?;
            acc = acc.try_mul(&factor)?;
        }
        Ok(acc)
    }

    /// Ordered product in the natural order `x_1^{a_1} ⋯ x_m^{a_m}`.
    pub fn natural_product(form: &Arc<SkewForm>, a: &ExpVec) -> Result<TorusElem, TorusError> {
        let order: Vec<usize> = (0..form.dim()).collect();
        Self::ordered_product(form, a, &order)
    }

    /// Graded-lex rendering: `coeff * X^[e1,...,em]` joined by ` + `.
    pub fn canonical_string(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| {
                if c.len() > 1 {
                    format!("({c}) * X^{e}")
                } else {
                    format!("{c} * X^{e}")
                }
            })
            .collect();
        parts.join(" + ")
    }

    /// Parses the canonical grammar over a given form.
    pub fn parse(form: &Arc<SkewForm>, input: &str) -> Result<TorusElem, TorusError> {
        let err = |reason: &str| TorusError::Parse {
            input: input.to_string(),
            reason: reason.to_string(),
        };
        let s = input.trim();
        if s.is_empty() {
            return Err(err("empty input"));
        }
        if s == "0" {
            return Ok(Self::zero(form));
        }
        let mut out = Self::zero(form);
        for term in split_top_level(s).map_err(|r| err(&r))? {
            let (coeff, exp) = term
                .rsplit_once("* X^")
                .ok_or_else(|| err("term lacks `* X^[..]`"))?;
            let coeff = coeff.trim();
            let coeff = coeff
                .strip_prefix('(')
                .and_then(|c| c.strip_suffix(')'))
                .unwrap_or(coeff);
            let c: QLaurent = coeff.parse()?;
            let exp = exp
                .trim()
                .strip_prefix('[')
                .and_then(|e| e.strip_suffix(']'))
                .ok_or_else(|| err("exponent must be bracketed"))?;
            let entries = if exp.trim().is_empty() {
                Vec::new()
            } else {
                exp.split(',')
                    .map(|v| v.trim().parse::<i64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| err("bad exponent entry"))?
            };
            if entries.len() != form.dim() {
                return Err(TorusError::DimensionMismatch {
                    expected: form.dim(),
                    found: entries.len(),
                });
            }
            out.add_term(ExpVec(entries), &c);
        }
        Ok(out)
    }
}

fn split_top_level(s: &str) -> Result<Vec<&str>, String> {
    let mut parts = Vec::new();
    let mut depth: i32 = 0;
    let mut start = 0;
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' | b'[' => depth += 1,
            b')' | b']' => {
                depth -= 1;
                if depth < 0 {
                    return Err("unbalanced brackets".into());
                }
            }
            b' ' if depth == 0 && s[i..].starts_with(" + ") => {
                parts.push(&s[start..i]);
                start = i + 3;
                i += 3;
                continue;
            }
            _ => {}
        }
        i += 1;
    }
    if depth != 0 {
        return Err("unbalanced brackets".into());
    }
    parts.push(&s[start..]);
    Ok(parts)
}

impl PartialEq for TorusElem {
    fn eq(&self, other: &Self) -> bool {
        self.same_form(other) && self.terms == other.terms
    }
}

impl Eq for TorusElem {}

impl fmt::Display for TorusElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_string())
    }
}

impl fmt::Debug for TorusElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TorusElem({})", self.canonical_string())
    }
}

impl Add for &TorusElem {
    type Output = TorusElem;
    fn add(self, rhs: &TorusElem) -> TorusElem {
        self.try_add(rhs).expect("torus form mismatch")
    }
}

impl Sub for &TorusElem {
    type Output = TorusElem;
    fn sub(self, rhs: &TorusElem) -> TorusElem {
        self.try_sub(rhs).expect("torus form mismatch")
    }
}

impl Mul for &TorusElem {
    type Output = TorusElem;
    fn mul(self, rhs: &TorusElem) -> TorusElem {
        self.try_mul(rhs).expect("torus form mismatch")
    }
}

impl Neg for &TorusElem {
    type Output = TorusElem;
    fn neg(self) -> TorusElem {
        self.scale(&QLaurent::constant(-1))
    }
}

impl Add for TorusElem {
    type Output = TorusElem;
    fn add(self, rhs: TorusElem) -> TorusElem {
        &self + &rhs
    }
}

impl Sub for TorusElem {
    type Output = TorusElem;
    fn sub(self, rhs: TorusElem) -> TorusElem {
        &self - &rhs
    }
}

impl Mul for TorusElem {
    type Output = TorusElem;
    fn mul(self, rhs: TorusElem) -> TorusElem {
        &self * &rhs
    }
}

impl FromStr for ExpVec {
    type Err = TorusError;
    fn from_str(s: &str) -> Result<Self, TorusError> {
        let inner = s
            .trim()
            .strip_prefix('[')
            .and_then(|e| e.strip_suffix(']'))
            .ok_or_else(|| TorusError::Parse {
                input: s.to_string(),
                reason: "exponent must be bracketed".into(),
            })?;
        inner
            .split(',')
            .map(|v| v.trim().parse::<i64>())
            .collect::<Result<Vec<_>, _>>()
            .map(ExpVec)
            .map_err(|_| TorusError::Parse {
                input: s.to_string(),
                reason: "bad exponent entry".into(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exam1_form() -> Arc<SkewForm> {
        Arc::new(
            SkewForm::from_rows(vec![
                vec![0, 0, -2, 0],
                vec![0, 0, 0, -1],
                vec![2, 0, 0, -2],
                vec![0, 1, 2, 0],
            ])
            .unwrap(),
        )
    }

    fn ev(v: &[i64]) -> ExpVec {
        ExpVec::new(v.to_vec())
    }

    #[test]
    fn rejects_non_skew() {
        let err = SkewForm::from_rows(vec![vec![0, 1], vec![1, 0]]).unwrap_err();
        assert_eq!(err, TorusError::NotSkew { i: 0, j: 1 });
    }

    #[test]
    fn monomial_basics() {
        let f = exam1_form();
        assert_eq!(
            TorusElem::basis(&f, ExpVec::zero(4)).unwrap(),
            TorusElem::one(&f)
        );
        assert!(TorusElem::monomial(&f, ev(&[1, 0, 0, 0]), QLaurent::zero())
            .unwrap()
            .is_zero());
        assert!(matches!(
            TorusElem::basis(&f, ev(&[1, 0])),
            Err(TorusError::DimensionMismatch {
                expected: 4,
                found: 2
            })
        ));
    }

    #[test]
    fn generator_product_twist() {
        let f = exam1_form();
        let p = &TorusElem::generator(&f, 0) * &TorusElem::generator(&f, 2);
        let expect = TorusElem::monomial(&f, ev(&[1, 0, 1, 0]), QLaurent::q_pow(-1)).unwrap();
        assert_eq!(p, expect);
        let e = ev(&[1, -2, 3, 0]);
        let a = TorusElem::basis(&f, e.clone()).unwrap();
        let b = TorusElem::basis(&f, -&e).unwrap();
        assert_eq!(&a * &b, TorusElem::one(&f));
    }

    #[test]
    fn quasi_commutation() {
        let f = exam1_form();
        for i in 0..4 {
            for j in 0..4 {
                let xi = TorusElem::generator(&f, i);
                let xj = TorusElem::generator(&f, j);
                let lhs = &xi * &xj;
                let rhs = (&xj * &xi).scale(&QLaurent::q_pow(f.entry(i, j)));
                assert_eq!(lhs, rhs, "({i},{j})");
            }
        }
    }

    #[test]
    fn ordered_product_prefactor() {
        let f = exam1_form();
        let x24 = TorusElem::natural_product(&f, &ev(&[0, 1, 0, 1])).unwrap();
        let expect = TorusElem::monomial(&f, ev(&[0, 1, 0, 1]), QLaurent::q_half_pow(-1)).unwrap();
        assert_eq!(x24, expect);
        assert!(matches!(
            TorusElem::ordered_product(&f, &ev(&[0, 1, 0, 1]), &[0, 0, 1, 2]),
            Err(TorusError::NotPermutation { m: 4 })
        ));
    }

    #[test]
    fn bar_fixes_basis_and_reverses_products() {
        let f = exam1_form();
        let x = TorusElem::basis(&f, ev(&[1, -1, 2, 0])).unwrap();
        assert_eq!(x.bar(), x);
        let a = &TorusElem::generator(&f, 0) + &TorusElem::generator(&f, 2);
        let b = &TorusElem::generator(&f, 3) - &TorusElem::generator(&f, 1);
        assert_eq!((&a * &b).bar(), &b.bar() * &a.bar());
    }

    #[test]
    fn canonical_rendering() {
        let f = exam1_form();
        assert_eq!(TorusElem::zero(&f).canonical_string(), "0");
        assert_eq!(TorusElem::one(&f).canonical_string(), "1 * X^[0,0,0,0]");
        let a = TorusElem::monomial(&f, ev(&[0, 1, 0, 1]), "q^(3/2) - q^(-1/2)".parse().unwrap())
            .unwrap();
        let s = (&a + &TorusElem::generator(&f, 0)).canonical_string();
        assert_eq!(s, "1 * X^[1,0,0,0] + (-q^(-1/2) + q^(3/2)) * X^[0,1,0,1]");
        assert_eq!(TorusElem::parse(&f, &s).unwrap().canonical_string(), s);
    }

    #[test]
    fn parse_errors() {
        let f = exam1_form();
        assert!(TorusElem::parse(&f, "").is_err());
        assert!(TorusElem::parse(&f, "1 * X^[1,0]").is_err());
        assert!(TorusElem::parse(&f, "(1 * X^[1,0,0,0]").is_err());
        assert!(TorusElem::parse(&f, "q").is_err());
    }

    #[test]
    fn form_mismatch_is_reported() {
        let f = exam1_form();
        let g = Arc::new(SkewForm::from_rows(vec![vec![0, 1], vec![-1, 0]]).unwrap());
        let a = TorusElem::one(&f);
        let b = TorusElem::one(&g);
        assert_eq!(a.try_mul(&b).unwrap_err(), TorusError::FormMismatch);
        assert_ne!(a, b);
    }

    #[test]
    fn monomial_inverse_roundtrip() {
        let f = exam1_form();
        let a = TorusElem::monomial(&f, ev(&[2, 1, 0, -1]), QLaurent::q_half_pow(3)).unwrap();
        let inv = a.monomial_inverse().unwrap();
        assert_eq!(&a * &inv, TorusElem::one(&f));
        let two = &TorusElem::generator(&f, 0) + &TorusElem::generator(&f, 1);
        assert!(two.monomial_inverse().is_none());
    }

    #[test]
    fn graded_lex_order() {
        let mut v = [ev(&[0, 2]), ev(&[1, 0]), ev(&[-1, 0]), ev(&[0, 1])];
        v.sort();
        assert_eq!(v, [ev(&[-1, 0]), ev(&[0, 1]), ev(&[1, 0]), ev(&[0, 2])]);
    }
}
