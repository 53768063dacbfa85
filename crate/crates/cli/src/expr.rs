//! Arithmetic in one variable `p`, for parametrised distribution templates.

use anyhow::{anyhow, bail, Result};

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
    p: f64,
}

impl Parser<'_> {
    fn peek(&mut self) -> Option<u8> {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
        self.s.get(self.i).copied()
    }

    fn expr(&mut self) -> Result<f64> {
        let mut v = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.i += 1;
            let r = self.term()?;
            v = if c == b'+' { v + r } else { v - r };
        }
        Ok(v)
    }

    fn term(&mut self) -> Result<f64> {
        let mut v = self.power()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.i += 1;
            let r = self.power()?;
            v = if c == b'*' { v * r } else { v / r };
        }
        Ok(v)
    }

    fn power(&mut self) -> Result<f64> {
        let base = self.unary()?;
        if self.peek() == Some(b'^') {
            self.i += 1;
            let e = self.power()?;
            return Ok(base.powf(e));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<f64> {
        if self.peek() == Some(b'-') {
            self.i += 1;
            return Ok(-self.unary()?);
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<f64> {
        match self.peek() {
            Some(b'(') => {
                self.i += 1;
                let v = self.expr()?;
                if self.peek() != Some(b')') {
                    bail!("missing ')'");
                }
                self.i += 1;
                Ok(v)
            }
            Some(b'p') => {
                self.i += 1;
                Ok(self.p)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.i;
                while self.i < self.s.len() {
                    let c = self.s[self.i];
                    let exp_sign = (c == b'+' || c == b'-')
                        && self.i > start
                        && matches!(self.s[self.i - 1], b'e' | b'E');
                    if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                        self.i += 1;
                    } else {
                        break;
                    }
                }
                let t = std::str::from_utf8(&self.s[start..self.i])?;
                t.parse().map_err(|_| anyhow!("bad number '{t}'"))
            }
            Some(c) => bail!("unexpected '{}'", c as char),
            None => bail!("unexpected end of expression"),
        }
    }
}

pub fn eval(src: &str, p: f64) -> Result<f64> {
    let mut parser = Parser {
        s: src.as_bytes(),
        i: 0,
        p,
    };
    let v = parser.expr()?;
    if parser.peek().is_some() {
        bail!("trailing input in '{src}'");
    }
    Ok(v)
}

fn is_expression(body: &str) -> bool {
    !body.trim().is_empty()
        && body
            .chars()
            .all(|c| c.is_ascii_digit() || " .p+-*/^()eE".contains(c))
}

/// Replaces every `{expr}` whose body is an arithmetic expression in `p`.
/// Other braces (JSON objects) pass through.
pub fn instantiate(template: &str, p: f64) -> Result<String> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find(['{', '}']) {
            Some(close) if after.as_bytes()[close] == b'}' && is_expression(&after[..close]) => {
                let v = eval(&after[..close], p)?;
                out.push_str(&format!("{v}"));
                rest = &after[close + 1..];
            }
            _ => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}
