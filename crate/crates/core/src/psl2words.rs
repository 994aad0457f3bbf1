//! Integer 2×2 matrices, the projective group PSL₂(Z), words in the
//! generators S and U, and the quadratic form attached to a non-elliptic
//! element.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// A 2×2 integer matrix `(a b; c d)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mat2 {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
    pub d: BigInt,
}

impl Mat2 {
    pub fn new(a: BigInt, b: BigInt, c: BigInt, d: BigInt) -> Self {
        Self { a, b, c, d }
    }

    pub fn from_i64(a: i64, b: i64, c: i64, d: i64) -> Self {
        Self::new(a.into(), b.into(), c.into(), d.into())
    }

    pub fn identity() -> Self {
        Self::from_i64(1, 0, 0, 1)
    }

    pub fn s() -> Self {
        Self::from_i64(0, -1, 1, 0)
    }

    pub fn u() -> Self {
        Self::from_i64(0, -1, 1, 1)
    }

    pub fn t() -> Self {
        Self::from_i64(1, 1, 0, 1)
    }

    pub fn diag(a: i64, d: i64) -> Self {
        Self::from_i64(a, 0, 0, d)
    }

    pub fn det(&self) -> BigInt {
        &self.a * &self.d - &self.b * &self.c
    }

    pub fn trace(&self) -> BigInt {
        &self.a + &self.d
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: &self.a * &o.a + &self.b * &o.c,
            b: &self.a * &o.b + &self.b * &o.d,
            c: &self.c * &o.a + &self.d * &o.c,
            d: &self.c * &o.b + &self.d * &o.d,
        }
    }

    /// The adjugate `(d −b; −c a)`; the inverse when the determinant is 1.
    pub fn adjugate(&self) -> Mat2 {
        Mat2 { a: self.d.clone(), b: -&self.b, c: -&self.c, d: self.a.clone() }
    }

    pub fn neg(&self) -> Mat2 {
        Mat2 { a: -&self.a, b: -&self.b, c: -&self.c, d: -&self.d }
    }

    pub fn entries(&self) -> [&BigInt; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    /// `self · g · self⁻¹` if it is integral.
    pub fn conjugate(&self, g: &Mat2) -> Option<Mat2> {
        let n = self.det();
        let m = self.mul(g).mul(&self.adjugate());
        let mut out = Vec::with_capacity(4);
        for e in m.entries() {
            let (q, r) = e.div_rem(&n);
            if !r.is_zero() {
                return None;
            }
            out.push(q);
        }
        let [a, b, c, d]: [BigInt; 4] = out.try_into().ok()?;
        Some(Mat2::new(a, b, c, d))
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{},{}],[{},{}]]", self.a, self.b, self.c, self.d)
    }
}

impl FromStr for Mat2 {
    type Err = Error;

    /// Parses `[[a,b],[c,d]]` (whitespace is ignored).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("cannot parse matrix `{s}`"));
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let inner = compact
            .strip_prefix("[[")
            .and_then(|x| x.strip_suffix("]]"))
            .ok_or_else(bad)?;
        let rows: Vec<&str> = inner.split("],[").collect();
        if rows.len() != 2 {
            return Err(bad());
        }
        let mut e = Vec::with_capacity(4);
        for row in rows {
            let parts: Vec<&str> = row.split(',').collect();
            if parts.len() != 2 {
                return Err(bad());
            }
            for p in parts {
                e.push(p.parse::<BigInt>().map_err(|_| bad())?);
            }
        }
        let [a, b, c, d]: [BigInt; 4] = e.try_into().map_err(|_| bad())?;
        Ok(Mat2::new(a, b, c, d))
    }
}

/// An element of PSL₂(Z) stored by its canonical sign representative:
/// positive trace, or for trace zero a positive first nonzero entry.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProjectiveMatrix(Mat2);

impl ProjectiveMatrix {
    pub fn new(m: Mat2) -> Result<Self> {
        if !m.det().is_one() {
            return Err(Error::InvalidInput(format!("{m} does not have determinant 1")));
        }
        Ok(Self::canonical(m))
    }

    pub fn from_i64(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        Self::new(Mat2::from_i64(a, b, c, d))
    }

    fn canonical(m: Mat2) -> Self {
        let t = m.trace();
        let flip = if t.is_zero() {
            m.entries().into_iter().find(|e| !e.is_zero()).is_some_and(|e| e.is_negative())
        } else {
            t.is_negative()
        };
        if flip {
            Self(m.neg())
        } else {
            Self(m)
        }
    }

    pub fn identity() -> Self {
        Self(Mat2::identity())
    }

    pub fn s() -> Self {
        Self::canonical(Mat2::s())
    }

    pub fn u() -> Self {
        Self::canonical(Mat2::u())
    }

    pub fn t() -> Self {
        Self(Mat2::t())
    }

    pub fn rep(&self) -> &Mat2 {
        &self.0
    }

    pub fn mul(&self, o: &ProjectiveMatrix) -> ProjectiveMatrix {
        Self::canonical(self.0.mul(&o.0))
    }

    pub fn inverse(&self) -> ProjectiveMatrix {
        Self::canonical(self.0.adjugate())
    }

    pub fn pow(&self, n: i64) -> ProjectiveMatrix {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut acc = Self::identity();
        for _ in 0..n.unsigned_abs() {
            acc = acc.mul(&base);
        }
        acc
    }

    pub fn is_identity(&self) -> bool {
        self.0 == Mat2::identity()
    }

    pub fn classify(&self) -> Class {
        classify(self)
    }
}

impl fmt::Display for ProjectiveMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for ProjectiveMatrix {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ProjectiveMatrix::new(s.parse()?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Class {
    Identity,
    Elliptic,
    Parabolic,
    Hyperbolic,
}

pub fn classify(g: &ProjectiveMatrix) -> Class {
    let t = g.0.trace().abs();
    let two = BigInt::from(2);
    if t > two {
        Class::Hyperbolic
    } else if t < two {
        Class::Elliptic
    } else if g.is_identity() {
        Class::Identity
    } else {
        Class::Parabolic
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Letter {
    S,
    U,
    U2,
}

impl Letter {
    pub fn matrix(self) -> ProjectiveMatrix {
        match self {
            Letter::S => ProjectiveMatrix::s(),
            Letter::U => ProjectiveMatrix::u(),
            Letter::U2 => ProjectiveMatrix::u().mul(&ProjectiveMatrix::u()),
        }
    }

    pub fn inverse(self) -> Letter {
        match self {
            Letter::S => Letter::S,
            Letter::U => Letter::U2,
            Letter::U2 => Letter::U,
        }
    }

    fn u_power(self) -> u8 {
        match self {
            Letter::S => 0,
            Letter::U => 1,
            Letter::U2 => 2,
        }
    }
}

/// A freely reduced word over `{S, U, U²}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn identity() -> Self {
        Self(Vec::new())
    }

    /// Reduces the letters using `S² = U³ = 1`.
    pub fn from_letters<I: IntoIterator<Item = Letter>>(letters: I) -> Self {
        let mut w = Word::identity();
        for l in letters {
            w.push(l);
        }
        w
    }

    fn push(&mut self, l: Letter) {
        match (self.0.last().copied(), l) {
            (Some(Letter::S), Letter::S) => {
                self.0.pop();
            }
            (Some(prev), _) if prev != Letter::S && l != Letter::S => {
                self.0.pop();
                match (prev.u_power() + l.u_power()) % 3 {
                    1 => self.0.push(Letter::U),
                    2 => self.0.push(Letter::U2),
                    _ => {}
                }
            }
            _ => self.0.push(l),
        }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn eval(&self) -> ProjectiveMatrix {
        self.0.iter().fold(ProjectiveMatrix::identity(), |acc, l| acc.mul(&l.matrix()))
    }

    pub fn inverse(&self) -> Word {
        Word::from_letters(self.0.iter().rev().map(|l| l.inverse()))
    }

    pub fn concat(&self, other: &Word) -> Word {
        Word::from_letters(self.0.iter().chain(other.0.iter()).copied())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<&str> = self
            .0
            .iter()
            .map(|l| match l {
                Letter::S => "S",
                Letter::U => "U",
                Letter::U2 => "U^2",
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

impl FromStr for Word {
    type Err = Error;

    /// Parses words such as `S U^2 S U`; `1` is the empty word.
    fn from_str(s: &str) -> Result<Self> {
        let mut letters = Vec::new();
        for tok in s.split(|c: char| c.is_whitespace() || c == '*' || c == '·').filter(|t| !t.is_empty()) {
            match tok {
                "1" => {}
                "S" => letters.push(Letter::S),
                "U" | "U^1" => letters.push(Letter::U),
                "U^2" | "U²" => letters.push(Letter::U2),
                _ => return Err(Error::InvalidInput(format!("bad word letter `{tok}`"))),
            }
        }
        Ok(Word::from_letters(letters))
    }
}

fn t_power(n: &BigInt) -> Vec<Letter> {
    // T = S U and T⁻¹ = U² S in PSL₂(Z)
    let count = n.magnitude().to_u64_digits().first().copied().unwrap_or(0);
    let unit: [Letter; 2] = if n.is_negative() { [Letter::U2, Letter::S] } else { [Letter::S, Letter::U] };
    (0..count).flat_map(|_| unit).collect()
}

/// Writes `g` as a reduced word in `S` and `U`.
///
/// The bottom row is reduced Euclidean-style by right multiplication with
/// powers of `T` (floor rounding) and by `S` until `g` becomes `±T^m`.
pub fn decompose_word(g: &ProjectiveMatrix) -> Word {
    let mut m = g.rep().clone();
    // g · T^{n₁} S T^{n₂} S ⋯ = ±T^m
    let mut ops: Vec<Option<BigInt>> = Vec::new();
    while !m.c.is_zero() {
        let n = -m.d.div_floor(&m.c);
        if !n.is_zero() {
            m.b = &m.b + &m.a * &n;
            m.d = &m.d + &m.c * &n;
            ops.push(Some(n));
        }
        m = Mat2 { a: m.b.clone(), b: -&m.a, c: m.d.clone(), d: -&m.c };
        ops.push(None);
    }
    let shift = &m.b * &m.a; // a = ±1
    let mut letters = t_power(&shift);
    for op in ops.iter().rev() {
        match op {
            Some(n) => letters.extend(t_power(&-n)),
            None => letters.push(Letter::S),
        }
    }
    Word::from_letters(letters)
}

/// The binary quadratic form `q20·X1² + q11·X1X2 + q02·X2²`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadForm {
    pub q20: BigInt,
    pub q11: BigInt,
    pub q02: BigInt,
}

impl QuadForm {
    /// Coefficients in the slot order of degree-2 polynomials.
    pub fn coeffs(&self) -> [BigInt; 3] {
        [self.q20.clone(), self.q11.clone(), self.q02.clone()]
    }

    pub fn neg(&self) -> QuadForm {
        QuadForm { q20: -&self.q20, q11: -&self.q11, q02: -&self.q02 }
    }
}

impl fmt::Display for QuadForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_form(&self.coeffs()))
    }
}

/// The primitive quadratic form fixed by a hyperbolic or parabolic `g`,
/// normalized by the sign of the trace.
pub fn quadratic_form(g: &ProjectiveMatrix) -> Result<QuadForm> {
    match classify(g) {
        Class::Hyperbolic | Class::Parabolic => {}
        _ => return Err(Error::NotDefinedForElliptic(g.to_string())),
    }
    let m = g.rep();
    // canonical representative has positive trace
    let amd = &m.a - &m.d;
    let content = m.c.gcd(&amd).gcd(&m.b);
    Ok(QuadForm { q20: -&m.c / &content, q11: amd / &content, q02: &m.b / &content })
}

/// Formats a binary form of degree `len − 1` whose slot `i` is the
/// coefficient of `X1^{deg−i} X2^i`, e.g. `-X1^2 + X1*X2 + X2^2`.
pub fn format_form(coeffs: &[BigInt]) -> String {
    let deg = coeffs.len().saturating_sub(1);
    let mut out = String::new();
    for (i, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let mut mono = Vec::new();
        for (var, e) in [("X1", deg - i), ("X2", i)] {
            match e {
                0 => {}
                1 => mono.push(var.to_string()),
                _ => mono.push(format!("{var}^{e}")),
            }
        }
        let mag = c.abs();
        let body = if mono.is_empty() {
            mag.to_string()
        } else if mag.is_one() {
            mono.join("*")
        } else {
            format!("{mag}*{}", mono.join("*"))
        };
        if out.is_empty() {
            if c.is_negative() {
                out.push('-');
            }
        } else {
            out.push_str(if c.is_negative() { " - " } else { " + " });
        }
        out.push_str(&body);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pm(a: i64, b: i64, c: i64, d: i64) -> ProjectiveMatrix {
        ProjectiveMatrix::from_i64(a, b, c, d).unwrap()
    }

    #[test]
    fn generators() {
        let s = ProjectiveMatrix::s();
        let u = ProjectiveMatrix::u();
        assert!(s.mul(&s).is_identity());
        assert!(u.mul(&u).mul(&u).is_identity());
        assert_eq!(s.mul(&u), ProjectiveMatrix::t());
    }

    #[test]
    fn canonical_sign() {
        assert_eq!(pm(-1, -1, 0, -1), pm(1, 1, 0, 1));
        assert_eq!(pm(0, -1, 1, 0).rep(), &Mat2::from_i64(0, 1, -1, 0));
        assert_eq!(pm(-2, -1, -1, -1).rep(), &Mat2::from_i64(2, 1, 1, 1));
    }

    #[test]
    fn classification() {
        assert_eq!(pm(2, 1, 1, 1).classify(), Class::Hyperbolic);
        assert_eq!(ProjectiveMatrix::t().classify(), Class::Parabolic);
        assert_eq!(ProjectiveMatrix::s().classify(), Class::Elliptic);
        assert_eq!(ProjectiveMatrix::identity().classify(), Class::Identity);
        assert_eq!(pm(-1, 0, 5, -1).classify(), Class::Parabolic);
    }

    #[test]
    fn word_examples() {
        assert_eq!(decompose_word(&ProjectiveMatrix::s()).to_string(), "S");
        assert_eq!(decompose_word(&ProjectiveMatrix::t()).to_string(), "S U");
        assert_eq!(decompose_word(&pm(1, 0, 1, 1)).to_string(), "S U^2");
        assert_eq!(decompose_word(&ProjectiveMatrix::identity()).to_string(), "1");
        let w: Word = "S U^2 S U".parse().unwrap();
        assert_eq!(w.to_string(), "S U^2 S U");
        assert_eq!("U U S S U".parse::<Word>().unwrap().to_string(), "1");
    }

    #[test]
    fn quadratic_form_examples() {
        assert_eq!(quadratic_form(&pm(2, 1, 1, 1)).unwrap().to_string(), "-X1^2 + X1*X2 + X2^2");
        assert_eq!(quadratic_form(&ProjectiveMatrix::t()).unwrap().to_string(), "X2^2");
        assert_eq!(quadratic_form(&pm(1, 0, 7, 1)).unwrap().to_string(), "-X1^2");
        assert!(matches!(quadratic_form(&ProjectiveMatrix::s()), Err(Error::NotDefinedForElliptic(_))));
        assert!(quadratic_form(&ProjectiveMatrix::identity()).is_err());
    }

    #[test]
    fn matrix_parsing() {
        let m: Mat2 = "[[2, 1], [1, 1]]".parse().unwrap();
        assert_eq!(m.to_string(), "[[2,1],[1,1]]");
        assert!("[[1,2,3],[4,5]]".parse::<Mat2>().is_err());
        assert!("[[2,0],[0,1]]".parse::<ProjectiveMatrix>().is_err());
    }

    #[test]
    fn conjugation() {
        let alpha = Mat2::diag(1, 2);
        assert_eq!(alpha.conjugate(&Mat2::from_i64(1, 2, 0, 1)), Some(Mat2::from_i64(1, 1, 0, 1)));
        assert_eq!(alpha.conjugate(&Mat2::t()), None);
    }

    /// Random elements of entry size up to about 10⁶ built from generators.
    pub(crate) fn element() -> impl Strategy<Value = ProjectiveMatrix> {
        proptest::collection::vec((-30i64..30, any::<bool>()), 1..8).prop_map(|steps| {
            let mut g = ProjectiveMatrix::identity();
            for (n, swap) in steps {
                g = g.mul(&ProjectiveMatrix::t().pow(n));
                if swap {
                    g = g.mul(&ProjectiveMatrix::s());
                }
            }
            g
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn word_round_trip(g in element()) {
            let w = decompose_word(&g);
            prop_assert_eq!(w.eval(), g.clone());
            prop_assert_eq!(w.to_string().parse::<Word>().unwrap(), w.clone());
            prop_assert_eq!(w.inverse().eval(), g.inverse());
        }

        #[test]
        fn form_sign_rules(g in element()) {
            if matches!(g.classify(), Class::Hyperbolic) {
                let q = quadratic_form(&g).unwrap();
                prop_assert_eq!(quadratic_form(&g.inverse()).unwrap(), q.neg());
                let content = q.q20.gcd(&q.q11).gcd(&q.q02);
                prop_assert!(content.is_one());
            }
        }
    }
}
