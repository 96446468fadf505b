//! Real polynomial expressions such as `2*x1^2 - 0.5*x2 + (x1 + 1)*x3`,
//! plus a printer for exact polynomials.

use curvesolve::multipoly::{ExactPoly, GaussianRational, RealPoly};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Var(usize),
    Op(char),
}

fn lex(s: &str, d: usize) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.' || chars[i] == 'e') {
                // allow a signed exponent right after `e`
                if chars[i] == 'e' && i + 1 < chars.len() && (chars[i + 1] == '-' || chars[i + 1] == '+') {
                    i += 1;
                }
                i += 1;
            }
            let t: String = chars[start..i].iter().collect();
            out.push(Tok::Num(t.parse().map_err(|_| format!("bad number `{t}`"))?));
        } else if c == 'x' {
            let start = i + 1;
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let t: String = chars[start..i].iter().collect();
            let k: usize = t.parse().map_err(|_| "`x` must be followed by a coordinate index".to_string())?;
            if k == 0 || k > d {
                return Err(format!("coordinate x{k} out of range 1..={d}"));
            }
            out.push(Tok::Var(k - 1));
        } else if "+-*^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(format!("unexpected character `{c}`"));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    d: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<RealPoly, String> {
        let mut acc = self.product()?;
        loop {
            if self.eat('+') {
                acc = acc.add(&self.product()?);
            } else if self.eat('-') {
                acc = acc.sub(&self.product()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> Result<RealPoly, String> {
        let mut acc = self.power()?;
        while self.eat('*') {
            acc = acc.mul(&self.power()?);
        }
        Ok(acc)
    }

    fn power(&mut self) -> Result<RealPoly, String> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let k = match self.toks.get(self.pos) {
            Some(Tok::Num(v)) if v.fract() == 0.0 && *v >= 0.0 => *v as u32,
            _ => return Err("`^` expects a non-negative integer exponent".into()),
        };
        self.pos += 1;
        let mut r = RealPoly::constant(self.d, 1.0);
        for _ in 0..k {
            r = r.mul(&base);
        }
        Ok(r)
    }

    fn atom(&mut self) -> Result<RealPoly, String> {
        let d = self.d;
        match self.toks.get(self.pos).cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(RealPoly::constant(d, v))
            }
            Some(Tok::Var(i)) => {
                self.pos += 1;
                Ok(RealPoly::coordinate(d, i))
            }
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(self.power()?.neg())
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let inner = self.sum()?;
                if !self.eat(')') {
                    return Err("missing `)`".into());
                }
                Ok(inner)
            }
            Some(t) => Err(format!("unexpected token {t:?}")),
            None => Err("unexpected end of expression".into()),
        }
    }
}

/// Parses a polynomial in `x1, …, xd`.
pub fn parse_poly(s: &str, d: usize) -> Result<RealPoly, String> {
    let toks = lex(s, d)?;
    if toks.is_empty() {
        return Err("empty expression".into());
    }
    let mut p = Parser { toks, pos: 0, d };
    let r = p.sum()?;
    if p.pos != p.toks.len() {
        return Err(format!("trailing input after token {}", p.pos));
    }
    Ok(r)
}

fn coeff_text(c: &GaussianRational) -> String {
    if c.is_real() {
        c.re.to_string()
    } else {
        format!("({} + {}i)", c.re, c.im)
    }
}

/// Human-readable form, e.g. `x1^2 + -1/2*x2`.
pub fn format_exact(p: &ExactPoly) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let one = GaussianRational::from_int(1);
    p.terms
        .iter()
        .map(|(a, c)| {
            let mono: Vec<String> = a
                .0
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| if e == 1 { format!("x{}", i + 1) } else { format!("x{}^{e}", i + 1) })
                .collect();
            match (mono.is_empty(), *c == one) {
                (true, _) => coeff_text(c),
                (false, true) => mono.join("*"),
                (false, false) => format!("{}*{}", coeff_text(c), mono.join("*")),
            }
        })
        .collect::<Vec<_>>()
        .join(" + ")
}
