//! Text format: a sum of terms `c*X1^e1*X2^e2`, e.g. `X1*X2 - 1`.
//! Variable names are case-insensitive and whitespace is ignored.

use super::MvPolynomial;
use crate::{Error, Result};

struct Cursor<'a> {
    s: &'a [u8],
    i: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<u8> {
        self.s.get(self.i).copied()
    }

    fn number(&mut self) -> Result<u64> {
        let start = self.i;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.i += 1;
        }
        if start == self.i {
            return Err(self.error("expected a number"));
        }
        std::str::from_utf8(&self.s[start..self.i])
            .unwrap()
            .parse()
            .map_err(|_| self.error("number out of range"))
    }

    fn error(&self, msg: &str) -> Error {
        Error::Parse(format!(
            "{msg} at position {} in `{}`",
            self.i,
            String::from_utf8_lossy(self.s)
        ))
    }
}

fn normalize(text: &str) -> Vec<u8> {
    text.bytes()
        .filter(|b| !b.is_ascii_whitespace())
        .map(|b| b.to_ascii_uppercase())
        .collect()
}

/// One factor: a coefficient or a variable power. Returns `(coef, var, exp)`.
fn factor(cur: &mut Cursor) -> Result<(u64, Option<(usize, u32)>)> {
    match cur.peek() {
        Some(b'0'..=b'9') => Ok((cur.number()?, None)),
        Some(b'X') => {
            cur.i += 1;
            let idx = cur.number()? as usize;
            if idx == 0 {
                return Err(cur.error("variables are numbered from X1"));
            }
            let exp = if cur.peek() == Some(b'^') {
                cur.i += 1;
                u32::try_from(cur.number()?).map_err(|_| cur.error("exponent out of range"))?
            } else {
                1
            };
            Ok((1, Some((idx - 1, exp))))
        }
        _ => Err(cur.error("expected a coefficient or a variable")),
    }
}

/// Coefficient and `(variable, exponent)` factors.
type Term = (i64, Vec<(usize, u32)>);

fn terms(text: &str) -> Result<Vec<Term>> {
    let bytes = normalize(text);
    let mut cur = Cursor { s: &bytes, i: 0 };
    let mut out = Vec::new();
    if bytes.is_empty() {
        return Err(Error::Parse("empty polynomial".into()));
    }
    loop {
        let mut sign = 1i64;
        if out.is_empty() || cur.peek().is_some() {
            match cur.peek() {
                Some(b'+') => cur.i += 1,
                Some(b'-') => {
                    sign = -1;
                    cur.i += 1
                }
                _ if out.is_empty() => {}
                _ => return Err(cur.error("expected `+` or `-`")),
            }
        }
        let mut coef: i64 = sign;
        let mut vars = Vec::new();
        loop {
            let (c, v) = factor(&mut cur)?;
            coef = coef
                .checked_mul(i64::try_from(c).map_err(|_| cur.error("coefficient out of range"))?)
                .ok_or_else(|| cur.error("coefficient overflow"))?;
            vars.extend(v);
            if cur.peek() == Some(b'*') {
                cur.i += 1;
            } else {
                break;
            }
        }
        out.push((coef, vars));
        if cur.peek().is_none() {
            return Ok(out);
        }
    }
}

/// Largest variable index (1-based) mentioned in `text`.
pub fn max_variable(text: &str) -> Result<usize> {
    Ok(terms(text)?
        .iter()
        .flat_map(|(_, vars)| vars.iter().map(|&(j, _)| j + 1))
        .max()
        .unwrap_or(0))
}

/// Parses one polynomial in `m` variables.
pub fn parse_poly(text: &str, m: usize) -> Result<MvPolynomial> {
    let parsed = terms(text)?;
    let mut dense = Vec::with_capacity(parsed.len());
    for (c, vars) in parsed {
        let mut exps = vec![0u32; m];
        for (j, e) in vars {
            if j >= m {
                return Err(Error::Parse(format!("variable X{} outside m = {m}", j + 1)));
            }
            exps[j] = exps[j]
                .checked_add(e)
                .ok_or_else(|| Error::Parse("exponent overflow".into()))?;
        }
        dense.push((c, exps));
    }
    MvPolynomial::from_terms(m, dense)
}
