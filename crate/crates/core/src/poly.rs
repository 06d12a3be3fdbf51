//! Sparse multivariate polynomials over the Gaussian rationals in the fixed
//! ambient variables `y, v, x, u` plus the auxiliary symbol `lambda`.
//!
//! The term order is degrevlex with precedence `y > v > x > u > lambda`; it is
//! the single order used everywhere (Groebner bases, normal forms, printing),
//! so structural equality of term maps is semantic equality.

use crate::gauss::GaussRat;
use num_complex::Complex64;

use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

pub const NVARS: usize = 5;

/// Ring variables in precedence order.
#[derive(Clone, Copy, PartialEq, Eq, Debug, PartialOrd, Ord, Hash)]
pub enum Sym {
    Y = 0,
    V = 1,
    X = 2,
    U = 3,
    /// The shift parameter of the explicit isomorphism; kept symbolic when
    /// verifying identities in it.
    L = 4,
}

pub const ALL_SYMS: [Sym; NVARS] = [Sym::Y, Sym::V, Sym::X, Sym::U, Sym::L];
/// Surface coordinates in the conventional display order (x, y, u, v).
pub const COORDS: [Sym; 4] = [Sym::X, Sym::Y, Sym::U, Sym::V];

impl Sym {
    pub fn name(self) -> &'static str {
        match self {
            Sym::Y => "y",
            Sym::V => "v",
            Sym::X => "x",
            Sym::U => "u",
            Sym::L => "lambda",
        }
    }

    pub fn from_name(s: &str) -> Option<Sym> {
        Some(match s {
            "y" => Sym::Y,
            "v" => Sym::V,
            "x" => Sym::X,
            "u" => Sym::U,
            "lambda" => Sym::L,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mono(pub [u16; NVARS]);

impl Mono {
    pub fn one() -> Self {
        Mono([0; NVARS])
    }

    pub fn var(s: Sym) -> Self {
        Self::var_pow(s, 1)
    }

    pub fn var_pow(s: Sym, e: u16) -> Self {
        let mut m = [0; NVARS];
        m[s as usize] = e;
        Mono(m)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn exp(&self, s: Sym) -> u16 {
        self.0[s as usize]
    }

    pub fn try_mul(&self, rhs: &Mono) -> Result<Mono, PolyError> {
        let mut out = [0u16; NVARS];
        for i in 0..NVARS {
            out[i] = self.0[i]
                .checked_add(rhs.0[i])
                .ok_or(PolyError::ExponentOverflow)?;
        }
        Ok(Mono(out))
    }

    pub fn mul(&self, rhs: &Mono) -> Mono {
        self.try_mul(rhs).expect("monomial exponent overflow")
    }

    pub fn divides(&self, rhs: &Mono) -> bool {
        self.0.iter().zip(&rhs.0).all(|(a, b)| a <= b)
    }

    /// rhs / self, assuming divisibility.
    pub fn div_into(&self, rhs: &Mono) -> Mono {
        let mut out = [0u16; NVARS];
        for i in 0..NVARS {
            out[i] = rhs.0[i] - self.0[i];
        }
        Mono(out)
    }

    pub fn lcm(&self, rhs: &Mono) -> Mono {
        let mut out = [0u16; NVARS];
        for i in 0..NVARS {
            out[i] = self.0[i].max(rhs.0[i]);
        }
        Mono(out)
    }

    pub fn gcd(&self, rhs: &Mono) -> Mono {
        let mut out = [0u16; NVARS];
        for i in 0..NVARS {
            out[i] = self.0[i].min(rhs.0[i]);
        }
        Mono(out)
    }

    pub fn is_coprime(&self, rhs: &Mono) -> bool {
        self.0.iter().zip(&rhs.0).all(|(a, b)| *a == 0 || *b == 0)
    }
}

impl Ord for Mono {
    /// Degrevlex: compare total degree, then reverse-lexicographic from the
    /// lowest-precedence variable; the monomial with the smaller exponent
    /// there is the larger one.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        for i in (0..NVARS).rev() {
            match self.0[i].cmp(&other.0[i]) {
                Ordering::Equal => {}
                Ordering::Less => return Ordering::Greater,
                Ordering::Greater => return Ordering::Less,
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Mono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        let mut first = true;
        for s in ALL_SYMS {
            let e = self.exp(s);
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "{}", s.name())?;
            } else {
                write!(f, "{}^{}", s.name(), e)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Mono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("monomial exponent overflow")]
    ExponentOverflow,
    #[error("negative exponent in pow")]
    NegativeExponent,
    #[error("variable {0} is not assigned a value")]
    Unassigned(&'static str),
    #[error("division by the zero polynomial")]
    DivisionByZero,
    #[error("the zero polynomial has no roots to classify")]
    ZeroPolynomial,
}

/// Sparse multivariate polynomial; invariant: no stored coefficient is zero.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct MultiPoly {
    terms: BTreeMap<Mono, GaussRat>,
}

impl MultiPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(GaussRat::one())
    }

    pub fn constant(c: GaussRat) -> Self {
        let mut p = Self::zero();
        if !c.is_zero() {
            p.terms.insert(Mono::one(), c);
        }
        p
    }

    pub fn var(s: Sym) -> Self {
        Self::term(GaussRat::one(), Mono::var(s))
    }

    pub fn var_pow(s: Sym, e: u16) -> Self {
        Self::term(GaussRat::one(), Mono::var_pow(s, e))
    }

    pub fn term(c: GaussRat, m: Mono) -> Self {
        let mut p = Self::zero();
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &GaussRat)> {
        self.terms.iter()
    }

    /// Leading term in the module-wide order.
    pub fn leading(&self) -> Option<(&Mono, &GaussRat)> {
        self.terms.iter().next_back()
    }

    pub fn coeff(&self, m: &Mono) -> GaussRat {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, s: Sym) -> u16 {
        self.terms.keys().map(|m| m.exp(s)).max().unwrap_or(0)
    }

    pub fn uses(&self, s: Sym) -> bool {
        self.terms.keys().any(|m| m.exp(s) > 0)
    }

    pub fn add_term(&mut self, c: &GaussRat, m: Mono) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_insert_with(GaussRat::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, rhs: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        for (m, c) in rhs.terms() {
            out.add_term(c, *m);
        }
        out
    }

    pub fn sub(&self, rhs: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        for (m, c) in rhs.terms() {
            out.add_term(&(-c), *m);
        }
        out
    }

    pub fn neg(&self) -> MultiPoly {
        MultiPoly { terms: self.terms.iter().map(|(m, c)| (*m, -c)).collect() }
    }

    pub fn scale(&self, c: &GaussRat) -> MultiPoly {
        if c.is_zero() {
            return MultiPoly::zero();
        }
        MultiPoly { terms: self.terms.iter().map(|(m, k)| (*m, k * c)).collect() }
    }

    pub fn mul(&self, rhs: &MultiPoly) -> MultiPoly {
        let mut out = MultiPoly::zero();
        for (m1, c1) in self.terms() {
            for (m2, c2) in rhs.terms() {
                out.add_term(&(c1 * c2), m1.mul(m2));
            }
        }
        out
    }

    pub fn mul_term(&self, c: &GaussRat, m: &Mono) -> MultiPoly {
        if c.is_zero() {
            return MultiPoly::zero();
        }
        MultiPoly { terms: self.terms.iter().map(|(mm, cc)| (mm.mul(m), cc * c)).collect() }
    }

    pub fn pow(&self, e: i64) -> Result<MultiPoly, PolyError> {
        if e < 0 {
            return Err(PolyError::NegativeExponent);
        }
        let mut out = MultiPoly::one();
        for _ in 0..e {
            out = out.mul(self);
        }
        Ok(out)
    }

    /// Formal partial derivative.
    pub fn derive(&self, s: Sym) -> MultiPoly {
        let mut out = MultiPoly::zero();
        for (m, c) in self.terms() {
            let e = m.exp(s);
            if e == 0 {
                continue;
            }
            let mut em = *m;
            em.0[s as usize] -= 1;
            out.add_term(&(c * &GaussRat::from_int(e as i64)), em);
        }
        out
    }

    /// Simultaneous substitution; symbols not listed stay themselves.
    pub fn substitute(&self, assign: &[(Sym, MultiPoly)]) -> MultiPoly {
        let mut out = MultiPoly::zero();
        for (m, c) in self.terms() {
            let mut t = MultiPoly::constant(c.clone());
            for s in ALL_SYMS {
                let e = m.exp(s);
                if e == 0 {
                    continue;
                }
                let image = assign.iter().find(|(a, _)| *a == s).map(|(_, p)| p);
                match image {
                    None => t = t.mul(&MultiPoly::var_pow(s, e)),
                    Some(p) => {
                        let pe = p.pow(e as i64).expect("non-negative");
                        t = t.mul(&pe);
                    }
                }
            }
            out = out.add(&t);
        }
        out
    }

    /// Floating evaluation, Horner-style in each variable; not exact.
    pub fn eval_complex(&self, point: &dyn Fn(Sym) -> Option<Complex64>) -> Result<Complex64, PolyError> {
        for s in ALL_SYMS {
            if self.uses(s) && point(s).is_none() {
                return Err(PolyError::Unassigned(s.name()));
            }
        }
        // Horner in the highest-precedence used variable, recursing through a
        // dense coefficient ladder would be overkill for sparse data; instead
        // accumulate powers per variable once.
        let mut acc = Complex64::new(0.0, 0.0);
        let mut pows: [Vec<Complex64>; NVARS] = Default::default();
        for (i, s) in ALL_SYMS.iter().enumerate() {
            let d = self.degree_in(*s) as usize;
            let mut v = Vec::with_capacity(d + 1);
            v.push(Complex64::new(1.0, 0.0));
            if d > 0 {
                let z = point(*s).unwrap();
                for k in 1..=d {
                    let prev = v[k - 1];
                    v.push(prev * z);
                }
            }
            pows[i] = v;
        }
        for (m, c) in self.terms() {
            let mut t = c.to_complex();
            for i in 0..NVARS {
                let e = m.0[i] as usize;
                if e > 0 {
                    t *= pows[i][e];
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    pub fn eval_gauss(&self, point: &dyn Fn(Sym) -> Option<GaussRat>) -> Result<GaussRat, PolyError> {
        let mut acc = GaussRat::zero();
        for (m, c) in self.terms() {
            let mut t = c.clone();
            for s in ALL_SYMS {
                let e = m.exp(s);
                if e == 0 {
                    continue;
                }
                let z = point(s).ok_or(PolyError::Unassigned(s.name()))?;
                for _ in 0..e {
                    t *= &z;
                }
            }
            acc += &t;
        }
        Ok(acc)
    }

    /// Exact polynomial division: `Some(q)` with `self = d * q`, or `None`
    /// when `self` is not divisible. Verified by re-multiplication.
    pub fn exact_divide(&self, d: &MultiPoly) -> Option<MultiPoly> {
        assert!(!d.is_zero(), "division by zero polynomial");
        let mut rem = self.clone();
        let mut q = MultiPoly::zero();
        let (dm, dc) = {
            let (m, c) = d.leading().unwrap();
            (*m, c.clone())
        };
        while let Some((m, c)) = rem.leading() {
            if !dm.divides(m) {
                return None;
            }
            let qm = dm.div_into(m);
            let qc = c / &dc;
            q.add_term(&qc, qm);
            rem = rem.sub(&d.mul_term(&qc, &qm));
        }
        debug_assert_eq!(d.mul(&q), *self);
        Some(q)
    }

    /// Greatest monomial dividing every term (exponent-wise minimum).
    pub fn monomial_content(&self) -> Mono {
        let mut it = self.terms.keys();
        let first = match it.next() {
            Some(m) => *m,
            None => return Mono::one(),
        };
        it.fold(first, |acc, m| acc.gcd(m))
    }

    /// self / m for a monomial m dividing every term.
    pub fn div_monomial(&self, m: &Mono) -> MultiPoly {
        MultiPoly { terms: self.terms.iter().map(|(mm, c)| (m.div_into(mm), c.clone())).collect() }
    }
}

impl fmt::Display for MultiPoly {
    /// Deterministic printing in descending monomial order, coefficients in
    /// lowest terms, matching the input grammar.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            let (neg, abs): (bool, GaussRat) = if c.is_real() && c.re < num_traits::Zero::zero() {
                (true, -c)
            } else {
                (false, c.clone())
            };
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{}", abs)?;
            } else if abs.is_one() {
                write!(f, "{}", m)?;
            } else {
                write!(f, "{}*{}", abs, m)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Univariate polynomial in `x` or `u`, dense ascending coefficients.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct UniPoly {
    pub var: Sym,
    coeffs: Vec<GaussRat>,
}

impl UniPoly {
    pub fn new(var: Sym, mut coeffs: Vec<GaussRat>) -> Self {
        while coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        UniPoly { var, coeffs }
    }

    pub fn zero(var: Sym) -> Self {
        UniPoly { var, coeffs: vec![] }
    }

    pub fn from_ints(var: Sym, ints: &[i64]) -> Self {
        Self::new(var, ints.iter().map(|&n| GaussRat::from_int(n)).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, k: usize) -> GaussRat {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    pub fn coeffs(&self) -> &[GaussRat] {
        &self.coeffs
    }

    pub fn leading_coeff(&self) -> GaussRat {
        self.coeffs.last().cloned().unwrap_or_default()
    }

    pub fn eval(&self, z: &GaussRat) -> GaussRat {
        let mut acc = GaussRat::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * z) + c;
        }
        acc
    }

    pub fn derivative(&self) -> UniPoly {
        if self.coeffs.len() <= 1 {
            return UniPoly::zero(self.var);
        }
        let c = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * &GaussRat::from_int(k as i64))
            .collect();
        UniPoly::new(self.var, c)
    }

    pub fn to_multipoly(&self) -> MultiPoly {
        let mut p = MultiPoly::zero();
        for (k, c) in self.coeffs.iter().enumerate() {
            p.add_term(c, Mono::var_pow(self.var, k as u16));
        }
        p
    }

    /// The polynomial `self(var + c)`.
    pub fn compose_shift(&self, c: &GaussRat) -> UniPoly {
        let shifted = self
            .to_multipoly()
            .substitute(&[(self.var, MultiPoly::var(self.var).add(&MultiPoly::constant(c.clone())))]);
        let mut coeffs = vec![GaussRat::zero(); self.degree() + 1];
        for (m, k) in shifted.terms() {
            coeffs[m.exp(self.var) as usize] = k.clone();
        }
        UniPoly::new(self.var, coeffs)
    }

    fn monic(&self) -> UniPoly {
        if self.is_zero() {
            return self.clone();
        }
        let lc = self.leading_coeff().inv();
        UniPoly::new(self.var, self.coeffs.iter().map(|c| c * &lc).collect())
    }

    fn rem(&self, d: &UniPoly) -> UniPoly {
        assert!(!d.is_zero(), "remainder by zero polynomial");
        if d.degree() == 0 {
            return UniPoly::zero(self.var);
        }
        let mut r = self.clone();
        let dl = d.leading_coeff();
        while !r.is_zero() && r.degree() >= d.degree() {
            let shift = r.degree() - d.degree();
            let q = &r.leading_coeff() / &dl;
            let mut coeffs = r.coeffs.clone();
            for (k, c) in d.coeffs.iter().enumerate() {
                let t = &coeffs[k + shift] - &(c * &q);
                coeffs[k + shift] = t;
            }
            r = UniPoly::new(r.var, coeffs);
        }
        r
    }

    /// Monic gcd by the Euclidean algorithm.
    pub fn gcd(&self, other: &UniPoly) -> UniPoly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// True iff every root is simple: gcd(P, P') is constant.
    pub fn simple_roots(&self) -> Result<bool, PolyError> {
        if self.is_zero() {
            return Err(PolyError::ZeroPolynomial);
        }
        if self.degree() == 0 {
            return Ok(true);
        }
        Ok(self.gcd(&self.derivative()).degree() == 0)
    }
}

impl fmt::Display for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.to_multipoly(), f)
    }
}

/// Rational expression `num / den` with a monomial denominator; the shape all
/// chart formulas take. Normalized so `num` and `den` share no variable.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RatioPoly {
    pub num: MultiPoly,
    pub den: Mono,
}

impl RatioPoly {
    pub fn poly(num: MultiPoly) -> Self {
        RatioPoly { num, den: Mono::one() }
    }

    pub fn new(num: MultiPoly, den: Mono) -> Self {
        let mut r = RatioPoly { num, den };
        r.normalize();
        r
    }

    pub fn zero() -> Self {
        Self::poly(MultiPoly::zero())
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.den = Mono::one();
            return;
        }
        let g = self.num.monomial_content().gcd(&self.den);
        if !g.is_one() {
            self.num = self.num.div_monomial(&g);
            self.den = g.div_into(&self.den);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_poly(&self) -> bool {
        self.den.is_one()
    }

    pub fn add(&self, rhs: &RatioPoly) -> RatioPoly {
        let l = self.den.lcm(&rhs.den);
        let a = self.num.mul_term(&GaussRat::one(), &self.den.div_into(&l));
        let b = rhs.num.mul_term(&GaussRat::one(), &rhs.den.div_into(&l));
        RatioPoly::new(a.add(&b), l)
    }

    pub fn sub(&self, rhs: &RatioPoly) -> RatioPoly {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> RatioPoly {
        RatioPoly { num: self.num.neg(), den: self.den }
    }

    pub fn mul(&self, rhs: &RatioPoly) -> RatioPoly {
        RatioPoly::new(self.num.mul(&rhs.num), self.den.mul(&rhs.den))
    }

    pub fn mul_poly(&self, p: &MultiPoly) -> RatioPoly {
        RatioPoly::new(self.num.mul(p), self.den)
    }

    pub fn scale(&self, c: &GaussRat) -> RatioPoly {
        RatioPoly::new(self.num.scale(c), self.den)
    }

    pub fn pow(&self, e: u16) -> RatioPoly {
        let mut out = RatioPoly::poly(MultiPoly::one());
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// d/ds (num / den) keeping a monomial denominator.
    pub fn derive(&self, s: Sym) -> RatioPoly {
        let e = self.den.exp(s);
        if e == 0 {
            return RatioPoly::new(self.num.derive(s), self.den);
        }
        // (n / (w^e m))' = (n' w - e n) / (w^{e+1} m)
        let n1 = self
            .num
            .derive(s)
            .mul(&MultiPoly::var(s))
            .sub(&self.num.scale(&GaussRat::from_int(e as i64)));
        RatioPoly::new(n1, self.den.mul(&Mono::var(s)))
    }

    /// Equality as rational functions (cross-multiplied).
    pub fn eq_rat(&self, rhs: &RatioPoly) -> bool {
        self.num.mul_term(&GaussRat::one(), &rhs.den)
            == rhs.num.mul_term(&GaussRat::one(), &self.den)
    }
}

impl fmt::Display for RatioPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_poly() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> MultiPoly {
        MultiPoly::var(Sym::X)
    }
    fn y() -> MultiPoly {
        MultiPoly::var(Sym::Y)
    }

    #[test]
    fn ring_op_examples() {
        // (x+y) + (x-y) = 2x
        let s = x().add(&y()).add(&x().sub(&y()));
        assert_eq!(s, x().scale(&GaussRat::from_int(2)));
        // (x-1)(x+1) = x^2 - 1
        let one = MultiPoly::one();
        let p = x().sub(&one).mul(&x().add(&one));
        assert_eq!(p, x().pow(2).unwrap().sub(&one));
        // (x + iy)^2 = x^2 + 2i xy - y^2, cross-checked by repeated addition
        let z = x().add(&y().scale(&GaussRat::i()));
        let sq = z.pow(2).unwrap();
        let by_addition = z.mul(&z);
        assert_eq!(sq, by_addition);
        let expect = x()
            .pow(2)
            .unwrap()
            .add(&x().mul(&y()).scale(&(&GaussRat::from_int(2) * &GaussRat::i())))
            .sub(&y().pow(2).unwrap());
        assert_eq!(sq, expect);
        assert!(x().pow(-1).is_err());
    }

    #[test]
    fn derive_examples() {
        // d/dx (x*(x-1)) = 2x - 1
        let p = x().mul(&x().sub(&MultiPoly::one()));
        assert_eq!(p.derive(Sym::X), x().scale(&GaussRat::from_int(2)).sub(&MultiPoly::one()));
        assert_eq!(y().pow(3).unwrap().derive(Sym::X), MultiPoly::zero());
        // d/du (x * (u - 1)) = x
        let q = x().mul(&MultiPoly::var(Sym::U).sub(&MultiPoly::one()));
        assert_eq!(q.derive(Sym::U), x());
    }

    #[test]
    fn substitute_examples() {
        // x^2 under x -> x + lambda y
        let img = x().add(&MultiPoly::var(Sym::L).mul(&y()));
        let res = x().pow(2).unwrap().substitute(&[(Sym::X, img.clone())]);
        assert_eq!(res, img.mul(&img));
        // identity assignment
        let p = x().mul(&y()).add(&MultiPoly::one());
        assert_eq!(p.substitute(&[]), p);
        // composition law
        let a = vec![(Sym::X, x().add(&y()))];
        let b = vec![(Sym::Y, y().pow(2).unwrap())];
        let lhs = p.substitute(&a).substitute(&b);
        let composed: Vec<(Sym, MultiPoly)> = vec![
            (Sym::X, a[0].1.substitute(&b)),
            (Sym::Y, y().substitute(&b)),
        ];
        assert_eq!(lhs, p.substitute(&composed));
    }

    #[test]
    fn eval_examples() {
        let p = x().pow(2).unwrap();
        let at_i = p
            .eval_complex(&|s| (s == Sym::X).then(|| Complex64::new(0.0, 1.0)))
            .unwrap();
        assert!((at_i - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        let q = x().mul(&y()).mul(&MultiPoly::var(Sym::U)).mul(&MultiPoly::var(Sym::V));
        let z = q.eval_complex(&|_| Some(Complex64::new(0.0, 0.0))).unwrap();
        assert_eq!(z, Complex64::new(0.0, 0.0));
        assert!(p.eval_complex(&|_| None).is_err());
    }

    #[test]
    fn exact_divide_examples() {
        // ((x + ly) P(x+ly) - x P(x)) / y for P = x - 1 equals l(2x-1) + l^2 y
        let l = MultiPoly::var(Sym::L);
        let cap_x = x().add(&l.mul(&y()));
        let p_of = |t: &MultiPoly| t.mul(&t.sub(&MultiPoly::one())); // t*P(t) with P = t-1... careful
        // numerator: X P(X) - x P(x) with P(t) = t - 1
        let num = p_of(&cap_x).sub(&p_of(&x()));
        let q = num.exact_divide(&y()).expect("divisible");
        let expect = l
            .mul(&x().scale(&GaussRat::from_int(2)).sub(&MultiPoly::one()))
            .add(&l.pow(2).unwrap().mul(&y()));
        assert_eq!(q, expect);
        assert!(x().pow(2).unwrap().exact_divide(&y()).is_none());
        assert_eq!(MultiPoly::zero().exact_divide(&y()), Some(MultiPoly::zero()));
    }

    #[test]
    fn simple_roots_examples() {
        let p = UniPoly::from_ints(Sym::X, &[-1, 1]); // x - 1
        assert!(p.simple_roots().unwrap());
        // x(x-1)^2 = x^3 - 2x^2 + x
        let q = UniPoly::from_ints(Sym::X, &[0, 1, -2, 1]);
        assert!(!q.simple_roots().unwrap());
        // x^2 + 1: roots +-i are distinct
        let r = UniPoly::from_ints(Sym::X, &[1, 0, 1]);
        assert!(r.simple_roots().unwrap());
        assert!(UniPoly::zero(Sym::X).simple_roots().is_err());
    }

    #[test]
    fn monomial_order_is_degrevlex() {
        // x^2 > yu in degrevlex with y > v > x > u
        let x2 = Mono::var_pow(Sym::X, 2);
        let yu = Mono::var(Sym::Y).mul(&Mono::var(Sym::U));
        assert!(x2 > yu);
        // xv > u^2
        let xv = Mono::var(Sym::X).mul(&Mono::var(Sym::V));
        let u2 = Mono::var_pow(Sym::U, 2);
        assert!(xv > u2);
        // yv > xu
        let yv = Mono::var(Sym::Y).mul(&Mono::var(Sym::V));
        let xu = Mono::var(Sym::X).mul(&Mono::var(Sym::U));
        assert!(yv > xu);
    }

    #[test]
    fn ratio_poly_derive() {
        // d/dy (x / y) = -x / y^2
        let r = RatioPoly::new(x(), Mono::var(Sym::Y));
        let d = r.derive(Sym::Y);
        assert_eq!(d, RatioPoly::new(x().neg(), Mono::var_pow(Sym::Y, 2)));
    }
}
