use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::IntMatrix;
use crate::qarith::QLaurent;
use crate::qtorus::{ExpVec, SkewForm, TorusElem};

/// Errors raised while building, loading or mutating a seed. Indices are 1-based.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeedError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("lambda is not skew-symmetric at ({i}, {j})")]
    LambdaNotSkew { i: usize, j: usize },
    #[error("d_{i} = {value} is not positive")]
    NonPositiveSymmetrizer { i: usize, value: i64 },
    #[error("D*B is not skew-symmetric at ({i}, {j})")]
    NotSkewSymmetrizable { i: usize, j: usize },
    #[error("compatibility fails at ({i}, {j}): (Btilde^T Lambda)_{i}{j} = {found}, expected {expected}")]
    Incompatible {
        i: usize,
        j: usize,
        found: i64,
        expected: i64,
    },
    #[error("index {k} out of range 1..={n}")]
    IndexOutOfRange { k: usize, n: usize },
    #[error("order is not a permutation of 1..={n}")]
    BadOrder { n: usize },
    #[error("{0}")]
    Json(String),
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
}

/// Extended exchange matrix `B̃` (m×n), principal part on top.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ExchangeMatrix {
    btilde: IntMatrix,
}

impl ExchangeMatrix {
    pub fn new(btilde: IntMatrix) -> Result<Self, SeedError> {
        if btilde.rows() < btilde.cols() {
            return Err(SeedError::Shape(format!(
                "btilde is {}x{}, needs at least as many rows as columns",
                btilde.rows(),
                btilde.cols()
            )));
        }
        Ok(Self { btilde })
    }

    pub fn n(&self) -> usize {
        self.btilde.cols()
    }

    pub fn m(&self) -> usize {
        self.btilde.rows()
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.btilde
    }

    /// `b_ij` with 1-based indices.
    pub fn b(&self, i: usize, j: usize) -> i64 {
        self.btilde[(i - 1, j - 1)]
    }

    /// Column `b_j` (1-based) as an exponent vector of length m.
    pub fn column(&self, j: usize) -> ExpVec {
        ExpVec::new(self.btilde.column(j - 1))
    }

    /// Top n×n block.
    pub fn principal(&self) -> IntMatrix {
        IntMatrix::from_fn(self.n(), self.n(), |i, j| self.btilde[(i, j)])
    }
}

/// Positive diagonal `D` with `D·B` skew-symmetric.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Skewsymmetrizer {
    d: Vec<i64>,
}

impl Skewsymmetrizer {
    pub fn new(d: Vec<i64>) -> Result<Self, SeedError> {
        if let Some((i, &value)) = d.iter().enumerate().find(|(_, &v)| v <= 0) {
            return Err(SeedError::NonPositiveSymmetrizer { i: i + 1, value });
        }
        Ok(Self { d })
    }

    pub fn identity(n: usize) -> Self {
        Self { d: vec![1; n] }
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn entries(&self) -> &[i64] {
        &self.d
    }

    /// `d_i` with 1-based index.
    pub fn d(&self, i: usize) -> i64 {
        self.d[i - 1]
    }

    /// First `(i, j)` (1-based) with `d_i b_ij ≠ -d_j b_ji`.
    pub fn violation(&self, b: &IntMatrix) -> Option<(usize, usize)> {
        let n = self.d.len();
        for i in 0..n {
            for j in i..n {
                let lhs = self.d[i].checked_mul(b[(i, j)]).expect("overflow");
                let rhs = self.d[j].checked_mul(b[(j, i)]).expect("overflow");
                if lhs != -rhs {
                    return Some((i + 1, j + 1));
                }
            }
        }
        None
    }
}

/// A quantum seed `(x̃, Λ, B̃)` together with its skew-symmetrizer.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct QuantumSeed {
    form: Arc<SkewForm>,
    exchange: ExchangeMatrix,
    symmetrizer: Skewsymmetrizer,
    labels: Vec<String>,
    order: Vec<usize>,
}

/// On-disk seed document.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedFile {
    pub n: usize,
    pub m: usize,
    pub lambda: Vec<Vec<i64>>,
    pub btilde: Vec<Vec<i64>>,
    pub d: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    /// Linear order on the mutable indices, as a permutation of 1..=n.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<usize>>,
}

fn default_labels(m: usize) -> Vec<String> {
    (1..=m).map(|i| format!("x{i}")).collect()
}

impl QuantumSeed {
    /// Builds and validates a seed: shape, Λ skew, D positive, D·B skew, compatibility.
    pub fn new(lambda: IntMatrix, btilde: IntMatrix, d: Vec<i64>) -> Result<Self, SeedError> {
        let m = btilde.rows();
        let n = btilde.cols();
        if lambda.rows() != m || lambda.cols() != m {
            return Err(SeedError::Shape(format!(
                "lambda is {}x{}, expected {m}x{m}",
                lambda.rows(),
                lambda.cols()
            )));
        }
        if d.len() != n {
            return Err(SeedError::Shape(format!(
                "d has length {}, expected {n}",
                d.len()
            )));
        }
        let exchange = ExchangeMatrix::new(btilde)?;
        if let Some((i, j)) = lambda.skew_violation() {
            return Err(SeedError::LambdaNotSkew { i: i + 1, j: j + 1 });
        }
        let symmetrizer = Skewsymmetrizer::new(d)?;
        if let Some((i, j)) = symmetrizer.violation(&exchange.principal()) {
            return Err(SeedError::NotSkewSymmetrizable { i, j });
        }
        let form = Arc::new(SkewForm::new(lambda).expect("skewness checked above"));
        let seed = Self {
            form,
            exchange,
            symmetrizer,
            labels: default_labels(m),
            order: (0..n).collect(),
        };
        seed.validate_compatibility()?;
        Ok(seed)
    }

    /// Principal-coefficient seed: `Λ = [[0, -D], [D, -DB]]`, `B̃ = [B; I]`.
    pub fn principal(b: &IntMatrix, d: &Skewsymmetrizer) -> Result<Self, SeedError> {
        let n = b.rows();
        if b.cols() != n || d.len() != n {
            return Err(SeedError::Shape(format!(
                "B is {}x{} with {} symmetrizer entries",
                b.rows(),
                b.cols(),
                d.len()
            )));
        }
        if let Some((i, j)) = d.violation(b) {
            return Err(SeedError::NotSkewSymmetrizable { i, j });
        }
        let lambda = principal_lambda(b, d);
        let btilde = IntMatrix::from_fn(2 * n, n, |i, j| {
            if i < n {
                b[(i, j)]
            } else {
                i64::from(i - n == j)
            }
        });
        Self::new(lambda, btilde, d.entries().to_vec())
    }

    pub fn from_file(file: SeedFile) -> Result<Self, SeedError> {
        let lambda = IntMatrix::from_rows(file.lambda)
            .map_err(|e| SeedError::Shape(format!("lambda: {e}")))?;
        let btilde = IntMatrix::from_rows(file.btilde)
            .map_err(|e| SeedError::Shape(format!("btilde: {e}")))?;
        if lambda.rows() != file.m {
            return Err(SeedError::Shape(format!(
                "lambda has {} rows, m = {}",
                lambda.rows(),
                file.m
            )));
        }
        if btilde.rows() != file.m || btilde.cols() != file.n {
            return Err(SeedError::Shape(format!(
                "btilde is {}x{}, expected {}x{}",
                btilde.rows(),
                btilde.cols(),
                file.m,
                file.n
            )));
        }
        let mut seed = Self::new(lambda, btilde, file.d)?;
        if let Some(labels) = file.labels {
            seed = seed.with_labels(labels)?;
        }
        if let Some(order) = file.order {
            seed = seed.with_order(&order)?;
        }
        Ok(seed)
    }

    pub fn from_json(text: &str) -> Result<Self, SeedError> {
        let file: SeedFile =
            serde_json::from_str(text).map_err(|e| SeedError::Json(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SeedError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SeedError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn to_file(&self) -> SeedFile {
        let natural: Vec<usize> = (0..self.n()).collect();
        SeedFile {
            n: self.n(),
            m: self.m(),
            lambda: self.form.matrix().to_rows(),
            btilde: self.exchange.matrix().to_rows(),
            d: self.symmetrizer.entries().to_vec(),
            labels: (self.labels != default_labels(self.m())).then(|| self.labels.clone()),
            order: (self.order != natural).then(|| self.order.iter().map(|i| i + 1).collect()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("seed serializes")
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, SeedError> {
        if labels.len() != self.m() {
            return Err(SeedError::Shape(format!(
                "labels has length {}, expected {}",
                labels.len(),
                self.m()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    /// Sets the linear order on mutable indices from a 1-based permutation.
    pub fn with_order(mut self, order: &[usize]) -> Result<Self, SeedError> {
        let n = self.n();
        let mut seen = vec![false; n];
        let ok = order.len() == n
            && order
                .iter()
                .all(|&k| (1..=n).contains(&k) && !std::mem::replace(&mut seen[k - 1], true));
        if !ok {
            return Err(SeedError::BadOrder { n });
        }
        self.order = order.iter().map(|k| k - 1).collect();
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.exchange.n()
    }

    pub fn m(&self) -> usize {
        self.exchange.m()
    }

    pub fn form(&self) -> &Arc<SkewForm> {
        &self.form
    }

    pub fn exchange(&self) -> &ExchangeMatrix {
        &self.exchange
    }

    pub fn symmetrizer(&self) -> &Skewsymmetrizer {
        &self.symmetrizer
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// The linear order on mutable indices, 0-based.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// `λ_ij` with 1-based indices.
    pub fn lambda(&self, i: usize, j: usize) -> i64 {
        self.form.entry(i - 1, j - 1)
    }

    /// `b_ij` with 1-based indices.
    pub fn b(&self, i: usize, j: usize) -> i64 {
        self.exchange.b(i, j)
    }

    /// `d_i` with 1-based index.
    pub fn d(&self, i: usize) -> i64 {
        self.symmetrizer.d(i)
    }

    /// Checks `B̃ᵀΛ = [D 0]`, reporting the first violating (i, j), 1-based.
    pub fn validate_compatibility(&self) -> Result<(), SeedError> {
        let product = self
            .exchange
            .matrix()
            .transpose()
            .checked_mul(self.form.matrix())
            .expect("shapes agree");
        for i in 0..self.n() {
            for j in 0..self.m() {
                let expected = if i == j { self.symmetrizer.d[i] } else { 0 };
                let found = product[(i, j)];
                if found != expected {
                    return Err(SeedError::Incompatible {
                        i: i + 1,
                        j: j + 1,
                        found,
                        expected,
                    });
                }
            }
        }
        Ok(())
    }

    fn check_index(&self, k: usize) -> Result<(), SeedError> {
        if (1..=self.n()).contains(&k) {
            Ok(())
        } else {
            Err(SeedError::IndexOutOfRange { k, n: self.n() })
        }
    }

    /// Mutation in direction `k` (1-based).
    pub fn mutate(&self, k: usize) -> Result<QuantumSeed, SeedError> {
        self.check_index(k)?;
        self.validate_compatibility()?;
        let k0 = k - 1;
        let b = self.exchange.matrix();
        let btilde = IntMatrix::from_fn(self.m(), self.n(), |i, j| {
            if i == k0 || j == k0 {
                -b[(i, j)]
            } else {
                let (bik, bkj) = (b[(i, k0)], b[(k0, j)]);
                let num = bik.abs() * bkj + bik * bkj.abs();
                assert!(num % 2 == 0, "odd numerator in matrix mutation");
                b[(i, j)] + num / 2
            }
        });
        let lam = self.form.matrix();
        let mut row_k = vec![0i64; self.m()];
        for (j, slot) in row_k.iter_mut().enumerate() {
            if j == k0 {
                continue;
            }
            let mut acc = -lam[(k0, j)];
            for t in 0..self.m() {
                let btk = b[(t, k0)];
                if btk > 0 {
                    acc = acc
                        .checked_add(btk.checked_mul(lam[(t, j)]).expect("overflow"))
                        .expect("overflow");
                }
            }
            *slot = acc;
        }
        let lambda = IntMatrix::from_fn(self.m(), self.m(), |i, j| {
            if i == k0 {
                row_k[j]
            } else if j == k0 {
                -row_k[i]
            } else {
                lam[(i, j)]
            }
        });
        let mut out = QuantumSeed::new(lambda, btilde, self.symmetrizer.d.clone())?;
        out.labels = self.labels.clone();
        out.order = self.order.clone();
        Ok(out)
    }

    /// `x'_k = X^{-e_k + [b_k]_+} + X^{-e_k + [-b_k]_+}` over this seed's form.
    pub fn mutated_variable(&self, k: usize) -> Result<TorusElem, SeedError> {
        self.check_index(k)?;
        let (plus, minus) = self.exchange_exponents(k);
        let a = TorusElem::basis(&self.form, plus).expect("ambient length");
        let b = TorusElem::basis(&self.form, minus).expect("ambient length");
        Ok(&a + &b)
    }

    /// The two exponents `-e_k + [b_k]_+` and `-e_k + [-b_k]_+`.
    pub fn exchange_exponents(&self, k: usize) -> (ExpVec, ExpVec) {
        let col = self.exchange.column(k);
        let ek = ExpVec::unit(self.m(), k - 1);
        (&col.positive_part() - &ek, &(-&col).positive_part() - &ek)
    }

    /// Directed edges `i → j` (1-based) with `b_ij > 0`, sorted.
    pub fn quiver_edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut edges = Vec::new();
        for i in 1..=n {
            for j in 1..=n {
                if self.b(i, j) > 0 {
                    edges.push((i, j));
                }
            }
        }
        edges
    }

    /// True when `m = 2n`, the lower block of `B̃` is `I` and `Λ` has the principal block form.
    pub fn is_principal(&self) -> bool {
        let n = self.n();
        if self.m() != 2 * n {
            return false;
        }
        let bt = self.exchange.matrix();
        let lower_identity = (0..n).all(|i| (0..n).all(|j| bt[(n + i, j)] == i64::from(i == j)));
        lower_identity
            && *self.form.matrix()
                == principal_lambda(&self.exchange.principal(), &self.symmetrizer)
    }

    /// Cluster generator `x_i` (1-based).
    pub fn x(&self, i: usize) -> TorusElem {
        TorusElem::generator(&self.form, i - 1)
    }

    /// Monomial `x^a` as an ordered product in natural order, scaled by `c`.
    pub fn ordered_monomial(&self, a: &[i64], c: QLaurent) -> TorusElem {
        TorusElem::natural_product(&self.form, &ExpVec::new(a.to_vec()))
            .expect("ambient length")
            .scale(&c)
    }
}

fn principal_lambda(b: &IntMatrix, d: &Skewsymmetrizer) -> IntMatrix {
    let n = b.rows();
    IntMatrix::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, true) => 0,
        (true, false) => {
            if i == j - n {
                -d.d[i]
            } else {
                0
            }
        }
        (false, true) => {
            if i - n == j {
                d.d[j]
            } else {
                0
            }
        }
        (false, false) => -d.d[i - n] * b[(i - n, j - n)],
    })
}

impl fmt::Display for QuantumSeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n = {}, m = {}", self.n(), self.m())?;
        writeln!(f, "d = {:?}", self.symmetrizer.entries())?;
        writeln!(f, "lambda =\n{}", self.form.matrix())?;
        write!(f, "btilde =\n{}", self.exchange.matrix())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn exam1() -> QuantumSeed {
        QuantumSeed::principal(
            &mat(&[&[0, 1], &[-2, 0]]),
            &Skewsymmetrizer::new(vec![2, 1]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn principal_block_form() {
        let s = exam1();
        assert_eq!(
            s.form().matrix().to_rows(),
            vec![
                vec![0, 0, -2, 0],
                vec![0, 0, 0, -1],
                vec![2, 0, 0, -2],
                vec![0, 1, 2, 0]
            ]
        );
        assert_eq!(
            s.exchange().matrix().to_rows(),
            vec![vec![0, 1], vec![-2, 0], vec![1, 0], vec![0, 1]]
        );
        assert!(s.is_principal());
    }

    #[test]
    fn zero_exchange_matrix() {
        let s =
            QuantumSeed::principal(&IntMatrix::zeros(2, 2), &Skewsymmetrizer::identity(2)).unwrap();
        assert_eq!(
            s.form().matrix().to_rows(),
            vec![
                vec![0, 0, -1, 0],
                vec![0, 0, 0, -1],
                vec![1, 0, 0, 0],
                vec![0, 1, 0, 0]
            ]
        );
        assert!(s.quiver_edges().is_empty());
    }

    #[test]
    fn rejects_non_symmetrizable() {
        let err = QuantumSeed::principal(&mat(&[&[0, 1], &[-2, 0]]), &Skewsymmetrizer::identity(2))
            .unwrap_err();
        assert_eq!(err, SeedError::NotSkewSymmetrizable { i: 1, j: 2 });
        assert!(matches!(
            Skewsymmetrizer::new(vec![1, 0]),
            Err(SeedError::NonPositiveSymmetrizer { i: 2, value: 0 })
        ));
    }

    #[test]
    fn corrupted_lambda_fails_at_first_entry() {
        let s = exam1();
        let mut lam = s.form().matrix().clone();
        lam[(0, 2)] = 2;
        lam[(2, 0)] = -2;
        let err = QuantumSeed::new(lam, s.exchange().matrix().clone(), vec![2, 1]).unwrap_err();
        assert!(matches!(err, SeedError::Incompatible { i: 1, j: 1, .. }));
    }

    #[test]
    fn mutation_matches_known_matrices() {
        let s = exam1();
        let s1 = s.mutate(1).unwrap();
        assert_eq!(
            s1.form().matrix().to_rows(),
            vec![
                vec![0, 0, 2, -2],
                vec![0, 0, 0, -1],
                vec![-2, 0, 0, -2],
                vec![2, 1, 2, 0]
            ]
        );
        assert_eq!(
            s1.exchange().matrix().to_rows(),
            vec![vec![0, -1], vec![2, 0], vec![-1, 1], vec![0, 1]]
        );
        let s2 = s.mutate(2).unwrap();
        assert_eq!(
            s2.form().matrix().to_rows(),
            vec![
                vec![0, 0, -2, 0],
                vec![0, 0, 0, 1],
                vec![2, 0, 0, -2],
                vec![0, -1, 2, 0]
            ]
        );
        assert_eq!(
            s2.exchange().matrix().to_rows(),
            vec![vec![0, -1], vec![2, 0], vec![1, 0], vec![0, -1]]
        );
    }

    #[test]
    fn mutation_is_involutive() {
        let s = exam1();
        for k in 1..=2 {
            assert_eq!(s.mutate(k).unwrap().mutate(k).unwrap(), s);
        }
        assert_eq!(
            s.mutate(3).unwrap_err(),
            SeedError::IndexOutOfRange { k: 3, n: 2 }
        );
    }

    #[test]
    fn mutated_variable_exponents() {
        let s = exam1();
        let y1 = s.mutated_variable(1).unwrap();
        let expect = &TorusElem::basis(s.form(), ExpVec::new(vec![-1, 0, 1, 0])).unwrap()
            + &TorusElem::basis(s.form(), ExpVec::new(vec![-1, 2, 0, 0])).unwrap();
        assert_eq!(y1, expect);
    }

    #[test]
    fn json_roundtrip_with_order_and_labels() {
        let s = exam1()
            .with_order(&[2, 1])
            .unwrap()
            .with_labels(vec!["a".into(), "b".into(), "c".into(), "d".into()])
            .unwrap();
        let back = QuantumSeed::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.order(), &[1, 0]);
        assert_eq!(
            exam1().with_order(&[1, 1]).unwrap_err(),
            SeedError::BadOrder { n: 2 }
        );
    }

    #[test]
    fn json_shape_errors() {
        let bad = r#"{"n":2,"m":4,"lambda":[[0]],"btilde":[[0,1],[-2,0],[1,0],[0,1]],"d":[2,1]}"#;
        assert!(matches!(
            QuantumSeed::from_json(bad),
            Err(SeedError::Shape(_))
        ));
        assert!(matches!(
            QuantumSeed::from_json("{"),
            Err(SeedError::Json(_))
        ));
    }
}
