//! Text grammar for polynomials and points.
//!
//! Polynomials: variables `x y u v`, symbol `lambda`, imaginary unit `i`,
//! rationals `a/b`, operators `+ - * ^`, parentheses. Whitespace is
//! insignificant and there is no implicit multiplication. Printing (the
//! `Display` impls in `poly`) emits the same grammar, so round-trips are
//! stable.

use crate::gauss::GaussRat;
use crate::poly::{MultiPoly, Sym, UniPoly};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at byte {0}: {1}")]
    Syntax(usize, String),
    #[error("variable `{0}` is not allowed here (expected a polynomial in `{1}`)")]
    WrongVariable(String, String),
    #[error("expected a constant, found a variable")]
    NotAConstant,
    #[error("point must have exactly 4 comma-separated entries")]
    BadPoint,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn lex(s: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let b = s.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push((i, Tok::Plus));
                i += 1;
            }
            '-' => {
                out.push((i, Tok::Minus));
                i += 1;
            }
            '*' => {
                out.push((i, Tok::Star));
                i += 1;
            }
            '^' => {
                out.push((i, Tok::Caret));
                i += 1;
            }
            '(' => {
                out.push((i, Tok::LParen));
                i += 1;
            }
            ')' => {
                out.push((i, Tok::RParen));
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                let numer: BigInt = s[start..i].parse().unwrap();
                let mut denom = BigInt::from(1);
                if i < b.len() && b[i] == b'/' {
                    let mut j = i + 1;
                    let dstart = j;
                    while j < b.len() && b[j].is_ascii_digit() {
                        j += 1;
                    }
                    if j == dstart {
                        return Err(ParseError::Syntax(i, "expected digits after '/'".into()));
                    }
                    denom = s[dstart..j].parse().unwrap();
                    if denom.is_zero() {
                        return Err(ParseError::Syntax(dstart, "zero denominator".into()));
                    }
                    i = j;
                }
                out.push((start, Tok::Num(BigRational::new(numer, denom))));
            }
            'a'..='z' | 'A'..='Z' => {
                let start = i;
                while i < b.len() && (b[i] as char).is_ascii_alphanumeric() {
                    i += 1;
                }
                out.push((start, Tok::Ident(s[start..i].to_string())));
            }
            _ => return Err(ParseError::Syntax(i, format!("unexpected character `{}`", c))),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: &'a [(usize, Tok)],
    pos: usize,
    allowed: Option<&'a [Sym]>,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn bump(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t);
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<MultiPoly, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    acc = acc.add(&self.term()?);
                }
                Some(Tok::Minus) => {
                    self.bump();
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<MultiPoly, ParseError> {
        let mut acc = self.factor()?;
        while let Some(Tok::Star) = self.peek() {
            self.bump();
            acc = acc.mul(&self.factor()?);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<MultiPoly, ParseError> {
        if let Some(Tok::Minus) = self.peek() {
            self.bump();
            return Ok(self.factor()?.neg());
        }
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.bump();
            let at = self.here();
            match self.bump() {
                Some(Tok::Num(r)) if r.denom() == &BigInt::from(1) && r.numer() >= &BigInt::from(0) => {
                    let e: i64 = r
                        .numer()
                        .try_into()
                        .map_err(|_| ParseError::Syntax(at, "exponent too large".into()))?;
                    return base
                        .pow(e)
                        .map_err(|e| ParseError::Syntax(at, e.to_string()));
                }
                _ => return Err(ParseError::Syntax(at, "expected a non-negative integer exponent".into())),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<MultiPoly, ParseError> {
        let at = self.here();
        match self.bump().cloned() {
            Some(Tok::Num(r)) => Ok(MultiPoly::constant(GaussRat::new(r, BigRational::zero()))),
            Some(Tok::Ident(name)) => {
                if name == "i" {
                    return Ok(MultiPoly::constant(GaussRat::i()));
                }
                match Sym::from_name(&name) {
                    Some(s) => {
                        if let Some(allowed) = self.allowed {
                            if !allowed.contains(&s) {
                                return Err(ParseError::WrongVariable(
                                    name,
                                    allowed.iter().map(|v| v.name()).collect::<Vec<_>>().join(","),
                                ));
                            }
                        }
                        Ok(MultiPoly::var(s))
                    }
                    None => Err(ParseError::Syntax(at, format!("unknown symbol `{}`", name))),
                }
            }
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => Err(ParseError::Syntax(at, "unbalanced parenthesis".into())),
                }
            }
            _ => Err(ParseError::Syntax(at, "expected a value".into())),
        }
    }
}

fn parse_with(s: &str, allowed: Option<&[Sym]>) -> Result<MultiPoly, ParseError> {
    let toks = lex(s)?;
    let mut p = Parser { toks: &toks, pos: 0, allowed, end: s.len() };
    let e = p.expr()?;
    if p.pos != toks.len() {
        return Err(ParseError::Syntax(p.here(), "trailing input".into()));
    }
    Ok(e)
}

/// Parse a general polynomial in `x, y, u, v, lambda`.
pub fn parse_poly(s: &str) -> Result<MultiPoly, ParseError> {
    parse_with(s, None)
}

/// Parse a univariate polynomial restricted to `var` (`x` for P, `u` for Q).
pub fn parse_unipoly(s: &str, var: Sym) -> Result<UniPoly, ParseError> {
    let allowed = [var];
    let p = parse_with(s, Some(&allowed))?;
    let d = p.degree_in(var);
    let mut coeffs = vec![GaussRat::zero(); d as usize + 1];
    for (m, c) in p.terms() {
        coeffs[m.exp(var) as usize] = c.clone();
    }
    Ok(UniPoly::new(var, coeffs))
}

/// Parse an exact scalar (no variables).
pub fn parse_scalar(s: &str) -> Result<GaussRat, ParseError> {
    let p = parse_with(s, Some(&[]))?;
    if p.is_zero() {
        return Ok(GaussRat::zero());
    }
    if p.num_terms() == 1 {
        let (m, c) = p.terms().next().unwrap();
        if m.is_one() {
            return Ok(c.clone());
        }
    }
    Err(ParseError::NotAConstant)
}

/// Parse a complex float `a`, `bi`, `a+bi`, `a-bi` (also accepts `b*i`).
pub fn parse_complex(s: &str) -> Result<Complex64, ParseError> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(ParseError::Syntax(0, "empty number".into()));
    }
    // split at the last +/- that is not an exponent sign and not leading
    let bytes = t.as_bytes();
    let mut split = None;
    for k in (1..bytes.len()).rev() {
        let c = bytes[k] as char;
        if (c == '+' || c == '-') && !matches!(bytes[k - 1] as char, 'e' | 'E') {
            split = Some(k);
            break;
        }
    }
    let parse_part = |p: &str| -> Result<(f64, bool), ParseError> {
        // returns (value, is_imaginary)
        let (core, imag) = if let Some(stripped) = p.strip_suffix("*i") {
            (stripped, true)
        } else if let Some(stripped) = p.strip_suffix('i') {
            (stripped, true)
        } else {
            (p, false)
        };
        let v = if imag && (core.is_empty() || core == "+") {
            1.0
        } else if imag && core == "-" {
            -1.0
        } else {
            core.parse::<f64>()
                .map_err(|_| ParseError::Syntax(0, format!("bad number `{}`", p)))?
        };
        Ok((v, imag))
    };
    match split {
        None => {
            let (v, imag) = parse_part(&t)?;
            Ok(if imag { Complex64::new(0.0, v) } else { Complex64::new(v, 0.0) })
        }
        Some(k) => {
            let (a, ai) = parse_part(&t[..k])?;
            let (b, bi) = parse_part(&t[k..])?;
            if ai || !bi {
                return Err(ParseError::Syntax(k, "expected `a+bi`".into()));
            }
            Ok(Complex64::new(a, b))
        }
    }
}

/// Format a complex float deterministically in the `a+bi` grammar.
pub fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im.is_sign_negative() {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_example() {
        let p = parse_unipoly("x^2 - 3/2*x + 1", Sym::X).unwrap();
        assert_eq!(p.coeff(0), GaussRat::from_int(1));
        assert_eq!(p.coeff(1), GaussRat::from_ratio(-3, 2));
        assert_eq!(p.coeff(2), GaussRat::from_int(1));
    }

    #[test]
    fn q_context() {
        assert!(parse_unipoly("u - 1", Sym::U).is_ok());
        assert!(matches!(
            parse_unipoly("x + y", Sym::X),
            Err(ParseError::WrongVariable(..))
        ));
    }

    #[test]
    fn round_trip() {
        for s in [
            "x^2*y - 3/2*u + i*v",
            "lambda^2*y + (1 + 2*i)*x",
            "0",
            "-x + 1",
        ] {
            let p = parse_poly(s).unwrap();
            let printed = p.to_string();
            let again = parse_poly(&printed).unwrap();
            assert_eq!(p, again, "round trip through `{printed}`");
        }
    }

    #[test]
    fn complex_floats() {
        assert_eq!(parse_complex("1+2i").unwrap(), Complex64::new(1.0, 2.0));
        assert_eq!(parse_complex("-0.5-1.25i").unwrap(), Complex64::new(-0.5, -1.25));
        assert_eq!(parse_complex("3").unwrap(), Complex64::new(3.0, 0.0));
        assert_eq!(parse_complex("i").unwrap(), Complex64::new(0.0, 1.0));
        let z = Complex64::new(-1.5, 0.25);
        assert_eq!(parse_complex(&format_complex(z)).unwrap(), z);
    }
}
