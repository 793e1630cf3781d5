//! Laurent polynomials in `q^{1/2}` with integer coefficients, and the
//! q-integers, q-factorials and Gaussian binomials built on top of them.
//!
//! Exponents are stored as *half-exponents*: the key `k` stands for the
//! monomial `q^{k/2}`. A polynomial "at base `q^d`" is obtained from its
//! base-`q` counterpart by the substitution `k -> d * k`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QArithError {
    #[error("base exponent d must be positive, got {0}")]
    NonPositiveBase(i64),
    #[error("argument must be nonnegative, got {0}")]
    NegativeArgument(i64),
    #[error("factorial quotient [{n}]!/([{r}]!*[{}]!) did not divide exactly", n - r)]
    InexactDivision { n: i64, r: i64 },
    #[error("cannot parse Laurent polynomial {input:?}: {reason}")]
    Parse { input: String, reason: String },
}

pub(crate) fn checked_half(a: i64, b: i64) -> i64 {
    a.checked_add(b).expect("half-exponent overflow")
}

pub(crate) fn checked_scale(a: i64, b: i64) -> i64 {
    a.checked_mul(b).expect("half-exponent overflow")
}

/// An element of `Z[q^{1/2}, q^{-1/2}]` in canonical sparse form.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct QLaurent {
    terms: BTreeMap<i64, BigInt>,
}

impl QLaurent {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(1, 0)
    }

    /// `c * q^{half_exp/2}`.
    pub fn monomial(c: impl Into<BigInt>, half_exp: i64) -> Self {
        let c = c.into();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(half_exp, c);
        }
        Self { terms }
    }

    /// `q^{half_exp/2}`.
    pub fn q_half_pow(half_exp: i64) -> Self {
        Self::monomial(1, half_exp)
    }

    /// `q^{e}` for an integer exponent `e`.
    pub fn q_pow(e: i64) -> Self {
        Self::monomial(1, checked_scale(e, 2))
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        Self::monomial(c, 0)
    }

    /// Builds a polynomial from `(half_exp, coeff)` pairs, summing repeats.
    pub fn from_terms<I, C>(iter: I) -> Self
    where
        I: IntoIterator<Item = (i64, C)>,
        C: Into<BigInt>,
    {
        let mut out = Self::zero();
        for (k, c) in iter {
            out.add_term(k, c.into());
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&0).is_some_and(|c| c.is_one())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending half-exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &BigInt)> {
        self.terms.iter().map(|(k, c)| (*k, c))
    }

    pub fn coeff(&self, half_exp: i64) -> BigInt {
        self.terms.get(&half_exp).cloned().unwrap_or_default()
    }

    pub fn min_half_exp(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn max_half_exp(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    fn add_term(&mut self, k: i64, c: BigInt) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(k) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// The bar involution `q^{1/2} -> q^{-1/2}`.
    pub fn bar(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|(k, c)| (-k, c.clone())).collect(),
        }
    }

    /// Substitutes `q -> q^d` (half-exponent `k -> d*k`). Negative `d`
    /// inverts the base as well.
    pub fn substitute_base(&self, d: i64) -> Self {
        if d == 0 {
            let total: BigInt = self.terms.values().sum();
            return Self::constant(total);
        }
        Self {
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (checked_scale(*k, d), c.clone()))
                .collect(),
        }
    }

    /// Multiplies by `q^{half_exp/2}`.
    pub fn shift(&self, half_exp: i64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (checked_half(*k, half_exp), c.clone()))
                .collect(),
        }
    }

    pub fn scale_int(&self, c: &BigInt) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(k, v)| (*k, v * c)).collect(),
        }
    }

    /// Value at `q = 1`.
    pub fn eval_at_one(&self) -> BigInt {
        self.terms.values().sum()
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// Exact quotient `self / divisor`, or `None` if the division leaves a
    /// remainder or needs non-integer coefficients.
    pub fn div_exact(&self, divisor: &QLaurent) -> Option<QLaurent> {
        let lead_exp = divisor.max_half_exp()?;
        let lead = divisor.terms[&lead_exp].clone();
        let low_exp = divisor.min_half_exp()?;
        let mut rem = self.clone();
        let mut quot = QLaurent::zero();
        let floor = match self.min_half_exp() {
            None => return Some(QLaurent::zero()),
            Some(e) => e,
        };
        while let Some(top) = rem.max_half_exp() {
            let k = top - lead_exp;
            // every term of quot*divisor has exponent >= k_min + low_exp
            if k + low_exp < floor {
                return None;
            }
            let (c, r) = rem.terms[&top].div_rem(&lead);
            if !r.is_zero() {
                return None;
            }
            let step = QLaurent::monomial(c, k);
            rem = &rem - &(&step * divisor);
            quot = &quot + &step;
        }
        Some(quot)
    }
}

impl From<i64> for QLaurent {
    fn from(c: i64) -> Self {
        QLaurent::constant(c)
    }
}

impl Add for &QLaurent {
    type Output = QLaurent;
    fn add(self, rhs: &QLaurent) -> QLaurent {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for QLaurent {
    type Output = QLaurent;
    fn add(mut self, rhs: QLaurent) -> QLaurent {
        self += &rhs;
        self
    }
}

impl AddAssign<&QLaurent> for QLaurent {
    fn add_assign(&mut self, rhs: &QLaurent) {
        for (k, c) in &rhs.terms {
            self.add_term(*k, c.clone());
        }
    }
}

impl SubAssign<&QLaurent> for QLaurent {
    fn sub_assign(&mut self, rhs: &QLaurent) {
        for (k, c) in &rhs.terms {
            self.add_term(*k, -c);
        }
    }
}

impl Sub for &QLaurent {
    type Output = QLaurent;
    fn sub(self, rhs: &QLaurent) -> QLaurent {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Sub for QLaurent {
    type Output = QLaurent;
    fn sub(mut self, rhs: QLaurent) -> QLaurent {
        self -= &rhs;
        self
    }
}

impl Neg for &QLaurent {
    type Output = QLaurent;
    fn neg(self) -> QLaurent {
        QLaurent {
            terms: self.terms.iter().map(|(k, c)| (*k, -c)).collect(),
        }
    }
}

impl Neg for QLaurent {
    type Output = QLaurent;
    fn neg(self) -> QLaurent {
        -&self
    }
}

impl Mul for &QLaurent {
    type Output = QLaurent;
    fn mul(self, rhs: &QLaurent) -> QLaurent {
        let mut out = QLaurent::zero();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &rhs.terms {
                out.add_term(checked_half(*ka, *kb), ca * cb);
            }
        }
        out
    }
}

impl Mul for QLaurent {
    type Output = QLaurent;
    fn mul(self, rhs: QLaurent) -> QLaurent {
        &self * &rhs
    }
}

fn render_monomial(k: i64) -> String {
    if k == 0 {
        String::new()
    } else if k == 2 {
        "q".to_string()
    } else if k % 2 == 0 {
        format!("q^{}", k / 2)
    } else {
        format!("q^({}/2)", k)
    }
}

impl fmt::Display for QLaurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (idx, (k, c)) in self.terms.iter().enumerate() {
            let mono = render_monomial(*k);
            let negative = c.is_negative();
            let abs = c.abs();
            let body = if mono.is_empty() {
                abs.to_string()
            } else if abs.is_one() {
                mono
            } else {
                format!("{abs}*{mono}")
            };
            match (idx, negative) {
                (0, false) => f.write_str(&body)?,
                (0, true) => write!(f, "-{body}")?,
                (_, false) => write!(f, " + {body}")?,
                (_, true) => write!(f, " - {body}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for QLaurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QLaurent({self})")
    }
}

struct Cursor<'a> {
    input: &'a str,
    chars: Vec<char>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(input: &'a str) -> Self {
        Self {
            input,
            chars: input.chars().filter(|c| !c.is_whitespace()).collect(),
            pos: 0,
        }
    }

    fn err(&self, reason: impl Into<String>) -> QArithError {
        QArithError::Parse {
            input: self.input.to_string(),
            reason: reason.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), QArithError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{c}' at offset {}", self.pos)))
        }
    }

    fn digits(&mut self) -> Option<String> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        (self.pos > start).then(|| self.chars[start..self.pos].iter().collect())
    }

    fn signed_int(&mut self) -> Result<i64, QArithError> {
        let neg = self.eat('-');
        let d = self.digits().ok_or_else(|| self.err("expected integer"))?;
        let v: i64 = d.parse().map_err(|_| self.err("exponent out of range"))?;
        Ok(if neg { -v } else { v })
    }

    /// Exponent after `q^`, returned as a half-exponent.
    fn exponent(&mut self) -> Result<i64, QArithError> {
        if self.eat('(') {
            let num = self.signed_int()?;
            let half = if self.eat('/') {
                self.expect('2')?;
                num
            } else {
                checked_scale(num, 2)
            };
            self.expect(')')?;
            Ok(half)
        } else {
            Ok(checked_scale(self.signed_int()?, 2))
        }
    }

    fn term(&mut self) -> Result<(BigInt, i64), QArithError> {
        let coeff = match self.digits() {
            Some(d) => {
                let c: BigInt = d.parse().map_err(|_| self.err("bad coefficient"))?;
                if !self.eat('*') && self.peek() != Some('q') {
                    return Ok((c, 0));
                }
                c
            }
            None => BigInt::one(),
        };
        if !self.eat('q') {
            return Err(self.err(format!("expected 'q' at offset {}", self.pos)));
        }
        let k = if self.eat('^') { self.exponent()? } else { 2 };
        Ok((coeff, k))
    }
}

impl FromStr for QLaurent {
    type Err = QArithError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut cur = Cursor::new(s);
        if cur.chars.is_empty() {
            return Err(cur.err("empty input"));
        }
        let mut out = QLaurent::zero();
        let mut first = true;
        while cur.peek().is_some() {
            let neg = if cur.eat('-') {
                true
            } else {
                if !cur.eat('+') && !first {
                    return Err(cur.err(format!("expected '+' or '-' at offset {}", cur.pos)));
                }
                false
            };
            first = false;
            let (c, k) = cur.term()?;
            out.add_term(k, if neg { -c } else { c });
        }
        Ok(out)
    }
}

fn check_base(d: i64) -> Result<(), QArithError> {
    if d <= 0 {
        Err(QArithError::NonPositiveBase(d))
    } else {
        Ok(())
    }
}

/// `[n]_{q^d} = 1 + q^d + ... + q^{(n-1)d}`.
pub fn q_int(n: i64, d: i64) -> Result<QLaurent, QArithError> {
    check_base(d)?;
    if n < 0 {
        return Err(QArithError::NegativeArgument(n));
    }
    Ok(QLaurent::from_terms(
        (0..n).map(|j| (checked_scale(2 * j, d), 1)),
    ))
}

/// `[n]_{q^d}! = [1][2]...[n]`, and `1` for `n = 0`.
pub fn q_factorial(n: i64, d: i64) -> Result<QLaurent, QArithError> {
    check_base(d)?;
    if n < 0 {
        return Err(QArithError::NegativeArgument(n));
    }
    let mut acc = QLaurent::one();
    for i in 1..=n {
        acc = &acc * &q_int(i, d)?;
    }
    Ok(acc)
}

/// Row `n` of the base-`q` Gaussian triangle via the Pascal recurrence
/// `[n+1, r] = [n, r] + q^{n+1-r} [n, r-1]`.
fn pascal_row(n: i64) -> Vec<QLaurent> {
    let mut row = vec![QLaurent::one()];
    for level in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        for r in 0..=(level + 1) {
            let keep = row.get(r as usize).cloned().unwrap_or_default();
            let carry = if r >= 1 {
                row[(r - 1) as usize].shift(2 * (level + 1 - r))
            } else {
                QLaurent::zero()
            };
            next.push(keep + carry);
        }
        row = next;
    }
    row
}

/// Gaussian binomial `[n, r]_{q^d}`; zero outside `0 <= r <= n`.
pub fn q_binom(n: i64, r: i64, d: i64) -> Result<QLaurent, QArithError> {
    check_base(d)?;
    if r < 0 || n < 0 || r > n {
        return Ok(QLaurent::zero());
    }
    let row = pascal_row(n);
    Ok(row[r as usize].substitute_base(d))
}

/// `[n, r]_{q^d}` from the factorial quotient. Kept as an independent
/// cross-check of [`q_binom`].
pub fn q_binom_factorial(n: i64, r: i64, d: i64) -> Result<QLaurent, QArithError> {
    check_base(d)?;
    if r < 0 || n < 0 || r > n {
        return Ok(QLaurent::zero());
    }
    let num = q_factorial(n, d)?;
    let den = &q_factorial(r, d)? * &q_factorial(n - r, d)?;
    num.div_exact(&den)
        .ok_or(QArithError::InexactDivision { n, r })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ql(s: &str) -> QLaurent {
        s.parse().unwrap()
    }

    /// Base-`q` polynomial with integer exponents from a dense coefficient list.
    fn dense(coeffs: &[i64]) -> QLaurent {
        QLaurent::from_terms(coeffs.iter().enumerate().map(|(j, c)| (2 * j as i64, *c)))
    }

    #[test]
    fn add_examples() {
        assert_eq!(&ql("1 + q") + &ql("-q"), QLaurent::one());
        let f = ql("3*q^(-1/2) + q^4");
        assert_eq!(&QLaurent::zero() + &f, f);
        let a = &QLaurent::q_half_pow(3) + &(-QLaurent::q_half_pow(-1));
        assert_eq!(a.to_string(), "-q^(-1/2) + q^(3/2)");
    }

    #[test]
    fn mul_examples() {
        assert_eq!(&ql("1 - q") * &ql("1 + q"), ql("1 - q^2"));
        assert_eq!(
            &QLaurent::q_half_pow(-1) * &ql("q^2 - 1"),
            ql("q^(3/2) - q^(-1/2)")
        );
        assert!((&ql("q + 7") * &QLaurent::zero()).is_zero());
    }

    #[test]
    fn bar_examples() {
        assert_eq!(QLaurent::q_half_pow(1).bar(), QLaurent::q_half_pow(-1));
        assert_eq!(QLaurent::one().bar(), QLaurent::one());
        assert_eq!(ql("q^(3/2) - q^(-1/2)").bar(), ql("q^(-3/2) - q^(1/2)"));
    }

    /// Direct geometric-sum oracle for `[n]_{q^d}`.
    fn geometric(n: i64, d: i64) -> QLaurent {
        let mut acc = QLaurent::zero();
        let mut p = QLaurent::one();
        let step = QLaurent::q_pow(d);
        for _ in 0..n {
            acc += &p;
            p = &p * &step;
        }
        acc
    }

    #[test]
    fn q_int_examples() {
        assert!(q_int(0, 4).unwrap().is_zero());
        assert_eq!(q_int(1, 3).unwrap(), QLaurent::one());
        assert_eq!(q_int(3, 2).unwrap(), ql("1 + q^2 + q^4"));
        assert_eq!(q_int(3, 2).unwrap(), geometric(3, 2));
        for n in 0..10 {
            for d in 1..4 {
                assert_eq!(q_int(n, d).unwrap(), geometric(n, d));
            }
        }
        assert_eq!(q_int(2, 0), Err(QArithError::NonPositiveBase(0)));
        assert_eq!(q_int(2, -1), Err(QArithError::NonPositiveBase(-1)));
    }

    #[test]
    fn q_factorial_examples() {
        assert_eq!(q_factorial(0, 1).unwrap(), QLaurent::one());
        assert_eq!(q_factorial(2, 1).unwrap(), dense(&[1, 1]));
        assert_eq!(q_factorial(3, 1).unwrap(), dense(&[1, 2, 2, 1]));
        assert!(q_factorial(3, 0).is_err());
    }

    #[test]
    fn q_binom_examples() {
        assert_eq!(q_binom(3, 1, 1).unwrap(), ql("1 + q + q^2"));
        assert_eq!(q_binom(2, 1, 2).unwrap(), ql("1 + q^2"));
        for n in 0..8 {
            for d in 1..4 {
                assert!(q_binom(n, 0, d).unwrap().is_one());
                assert!(q_binom(n, n, d).unwrap().is_one());
            }
        }
        assert_eq!(q_binom(5, 2, 1).unwrap(), dense(&[1, 1, 2, 2, 2, 1, 1]));
        assert!(q_binom(4, -1, 1).unwrap().is_zero());
        assert!(q_binom(4, 5, 1).unwrap().is_zero());
        assert!(q_binom(4, 2, 0).is_err());
    }

    #[test]
    fn pascal_matches_factorial_quotient() {
        for n in 0..=10 {
            for r in 0..=n {
                for d in 1..=3 {
                    assert_eq!(
                        q_binom(n, r, d).unwrap(),
                        q_binom_factorial(n, r, d).unwrap(),
                        "[{n},{r}] at base q^{d}"
                    );
                }
            }
        }
    }

    #[test]
    fn binomial_at_one_is_ordinary_binomial() {
        for n in 0..=12i64 {
            let mut ordinary = BigInt::one();
            for r in 0..=n {
                assert_eq!(q_binom(n, r, 2).unwrap().eval_at_one(), ordinary);
                ordinary = ordinary * (n - r) / (r + 1);
            }
        }
    }

    #[test]
    fn div_exact_detects_remainder() {
        assert_eq!(ql("1 - q^2").div_exact(&ql("1 - q")), Some(ql("1 + q")));
        assert_eq!(ql("1 + q^2").div_exact(&ql("1 + q")), None);
        assert_eq!(ql("2*q").div_exact(&ql("4")), None);
        assert_eq!(
            ql("q^(-1/2) - q^(5/2)").div_exact(&ql("q^(-1/2)")),
            Some(ql("1 - q^3"))
        );
    }

    #[test]
    fn display_and_parse() {
        let cases = [
            ("0", "0"),
            ("1", "1"),
            ("-q", "-q"),
            ("q^-1", "q^-1"),
            ("q^(-1)", "q^-1"),
            ("2*q^(3/2) - 3", "-3 + 2*q^(3/2)"),
            ("q^(4/2)", "q^2"),
            ("q + q", "2*q"),
            ("q - q", "0"),
            ("5q^3", "5*q^3"),
        ];
        for (input, rendered) in cases {
            assert_eq!(ql(input).to_string(), rendered, "input {input}");
        }
        assert!("q^(1/3)".parse::<QLaurent>().is_err());
        assert!("x".parse::<QLaurent>().is_err());
        assert!("".parse::<QLaurent>().is_err());
    }
}
