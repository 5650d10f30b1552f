//! Text syntax for polynomials: `3/2*x1^2*x2 - x3 + 1`.
//!
//! Coefficients match `[+-]?(\d+(/\d+)?|\d*\.\d+)` and are read exactly
//! (decimals become rationals with a power-of-ten denominator); monomials
//! are `xI` or `xI^E` factors joined by `*`. Whitespace is ignored.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::{Exponent, PolyError, RatPoly, Rational};

struct Cursor<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            src: text.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) {
        self.pos += 1;
    }

    fn err(&self, msg: impl Into<String>) -> PolyError {
        PolyError::Parse {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn digits(&mut self) -> &'a str {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap()
    }

    fn number(&mut self) -> Result<Rational, PolyError> {
        self.skip_ws();
        let int_part = self.digits();
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            let frac = self.digits();
            if frac.is_empty() {
                return Err(self.err("expected digits after '.'"));
            }
            let num: BigInt = format!("{int_part}{frac}").parse().unwrap();
            let den = num_traits::pow(BigInt::from(10), frac.len());
            return Ok(Rational::new(num, den));
        }
        if int_part.is_empty() {
            return Err(self.err("expected a number"));
        }
        let num: BigInt = int_part.parse().unwrap();
        self.skip_ws();
        if self.src.get(self.pos) == Some(&b'/') {
            self.pos += 1;
            self.skip_ws();
            let den = self.digits();
            if den.is_empty() {
                return Err(self.err("expected a denominator"));
            }
            let den: BigInt = den.parse().unwrap();
            if den.is_zero() {
                return Err(self.err("zero denominator"));
            }
            return Ok(Rational::new(num, den));
        }
        Ok(Rational::from_integer(num))
    }
}

/// Parses a polynomial in the variables `x1..xn`.
pub fn parse_polynomial(text: &str, n: usize) -> Result<RatPoly, PolyError> {
    let mut cur = Cursor::new(text);
    let mut out = RatPoly::zero(n);
    let mut first = true;
    loop {
        let mut negative = false;
        match cur.peek() {
            None if first => return Err(cur.err("empty polynomial")),
            None => break,
            Some(b'+') | Some(b'-') => {
                negative = cur.peek() == Some(b'-');
                cur.bump();
                // a signed coefficient may follow a binary operator
                if let Some(c @ (b'+' | b'-')) = cur.peek() {
                    if c == b'-' {
                        negative = !negative;
                    }
                    cur.bump();
                }
            }
            Some(_) if first => {}
            Some(c) => return Err(cur.err(format!("expected '+' or '-', found '{}'", c as char))),
        }
        first = false;
        let (coeff, exp) = parse_term(&mut cur, n)?;
        let coeff = if negative { -coeff } else { coeff };
        out = &out + &RatPoly::monomial(exp, coeff);
    }
    Ok(out)
}

fn parse_term(cur: &mut Cursor<'_>, n: usize) -> Result<(Rational, Exponent), PolyError> {
    let mut coeff = Rational::one();
    let mut entries = vec![0u32; n];
    loop {
        match cur.peek() {
            Some(b'x') => {
                cur.bump();
                let idx = cur.digits();
                if idx.is_empty() {
                    return Err(cur.err("expected a variable index after 'x'"));
                }
                let i: usize = idx.parse().map_err(|_| cur.err("variable index too large"))?;
                if i == 0 || i > n {
                    return Err(cur.err(format!("variable x{i} outside x1..x{n}")));
                }
                let mut e = 1u32;
                if cur.peek() == Some(b'^') {
                    cur.bump();
                    cur.skip_ws();
                    let d = cur.digits();
                    if d.is_empty() {
                        return Err(cur.err("expected an exponent after '^'"));
                    }
                    e = d.parse().map_err(|_| cur.err("exponent too large"))?;
                }
                entries[i - 1] += e;
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                coeff *= cur.number()?;
            }
            Some(c) => return Err(cur.err(format!("unexpected '{}'", c as char))),
            None => return Err(cur.err("unexpected end of input")),
        }
        if cur.peek() == Some(b'*') {
            cur.bump();
        } else {
            break;
        }
    }
    Ok((coeff, Exponent::new(entries)))
}

/// Parses a rational literal such as `-3/4`, `12` or `0.125`.
pub fn parse_rational(text: &str) -> Result<Rational, PolyError> {
    let mut cur = Cursor::new(text);
    let negative = match cur.peek() {
        Some(b'-') => {
            cur.bump();
            true
        }
        Some(b'+') => {
            cur.bump();
            false
        }
        _ => false,
    };
    let v = cur.number()?;
    if cur.peek().is_some() {
        return Err(cur.err("trailing characters after number"));
    }
    Ok(if negative { -v } else { v })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> Rational {
        Rational::new(a.into(), b.into())
    }

    #[test]
    fn parses_grammar() {
        let p = parse_polynomial(" 3/2 * x1^2*x2 -x3+1 ", 3).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.coeff(&Exponent::new(vec![2, 1, 0])), q(3, 2));
        assert_eq!(p.coeff(&Exponent::new(vec![0, 0, 1])), q(-1, 1));
        assert_eq!(p.constant_term(), q(1, 1));
    }

    #[test]
    fn decimals_are_exact() {
        let p = parse_polynomial(".5*x1 + 0.25", 1).unwrap();
        assert_eq!(p.coeff(&Exponent::new(vec![1])), q(1, 2));
        assert_eq!(p.constant_term(), q(1, 4));
        assert_eq!(parse_rational("-0.125").unwrap(), q(-1, 8));
    }

    #[test]
    fn repeated_factors_multiply() {
        let p = parse_polynomial("2*x1*x1^2*3", 1).unwrap();
        assert_eq!(p.coeff(&Exponent::new(vec![3])), q(6, 1));
        let p = parse_polynomial("x1 - -2", 1).unwrap();
        assert_eq!(p.constant_term(), q(2, 1));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_polynomial("", 2).is_err());
        assert!(parse_polynomial("x3", 2).is_err());
        assert!(parse_polynomial("x0", 2).is_err());
        assert!(parse_polynomial("x1 x2", 2).is_err());
        assert!(parse_polynomial("1/0", 2).is_err());
        assert!(parse_polynomial("x1^", 2).is_err());
        assert!(parse_polynomial("(x1+1)^2", 2).is_err());
        assert!(parse_rational("1/2x").is_err());
    }
}
