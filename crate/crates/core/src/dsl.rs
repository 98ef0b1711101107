//! Text syntax for group descriptions and p.p. formulas.
//!
//! ```text
//! group    := term ("+" term)* | "0"
//! term     := atom ("^" mult)?
//! atom     := "Z(" prime "^" nat ")" | "Z(" primepower ")" | "Z(" prime "^inf)"
//!           | "Z_(" prime ")" | "Q"
//!           | "tail(" prime ("," mult)? ("," "cutoff" "=" nat)? ")" | "forall_p{" shape "}"
//! shape    := shapeterm ("+" shapeterm)*        -- "P" stands for the prime
//! mult     := nat | "w"
//! formula  := "top" | fatom ("&" fatom)*
//! fatom    := "tor(" nat ")" | "div(" prime "," nat "," nat ")"
//! ```
//!
//! Whitespace is ignored. `tail(p, mult=w)` is accepted as a spelling of `tail(p, w)`.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use crate::arith::{factorize, is_prime};
use crate::core::{
    validate, Atom, AtomError, Mult, PPFormula, PrimeTailShape, SzmielewDescription, TailSpec,
    Violation,
};

/// Byte range `[start, end)` into the parsed text.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DslError {
    #[error("syntax error at {span}: {message}")]
    Syntax { message: String, span: SourceSpan },
    #[error("{value} is not prime (at {span})")]
    NotPrime { value: u64, span: SourceSpan },
    #[error("{err} (at {span})")]
    Atom { err: AtomError, span: SourceSpan },
    #[error("invalid description: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(u64),
    Punct(char),
    End,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    span: SourceSpan,
}

fn lex(text: &str) -> Result<Vec<Token>, DslError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let span = SourceSpan { start, end: i };
            let n = text[start..i].parse::<u64>().map_err(|_| DslError::Syntax {
                message: "number too large".into(),
                span,
            })?;
            out.push(Token {
                tok: Tok::Num(n),
                span,
            });
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(text[start..i].to_string()),
                span: SourceSpan { start, end: i },
            });
        } else if b"+^(),=&{}".contains(&c) {
            out.push(Token {
                tok: Tok::Punct(c as char),
                span: SourceSpan { start: i, end: i + 1 },
            });
            i += 1;
        } else {
            // step over a whole UTF-8 character so the span stays on a boundary
            let ch = text[i..].chars().next().unwrap_or('?');
            return Err(DslError::Syntax {
                message: format!("unexpected character {ch:?}"),
                span: SourceSpan {
                    start: i,
                    end: i + ch.len_utf8(),
                },
            });
        }
    }
    out.push(Token {
        tok: Tok::End,
        span: SourceSpan {
            start: text.len(),
            end: text.len(),
        },
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self, DslError> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, DslError> {
        Err(DslError::Syntax {
            message: message.into(),
            span: self.peek().span,
        })
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(n) => format!("`{n}`"),
            Tok::Punct(c) => format!("`{c}`"),
            Tok::End => "end of input".into(),
        }
    }

    fn is_punct(&self, c: char) -> bool {
        self.peek().tok == Tok::Punct(c)
    }

    fn is_ident(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(x) if x == s)
    }

    fn expect_punct(&mut self, c: char) -> Result<(), DslError> {
        if self.is_punct(c) {
            self.next();
            Ok(())
        } else {
            let found = Self::describe(&self.peek().tok);
            self.err(format!("expected `{c}`, found {found}"))
        }
    }

    fn expect_ident(&mut self, s: &str) -> Result<(), DslError> {
        if self.is_ident(s) {
            self.next();
            Ok(())
        } else {
            let found = Self::describe(&self.peek().tok);
            self.err(format!("expected `{s}`, found {found}"))
        }
    }

    fn expect_end(&mut self) -> Result<(), DslError> {
        if self.peek().tok == Tok::End {
            Ok(())
        } else {
            let found = Self::describe(&self.peek().tok);
            self.err(format!("unexpected {found}"))
        }
    }

    fn nat(&mut self) -> Result<(u64, SourceSpan), DslError> {
        match self.peek().tok {
            Tok::Num(n) => {
                let span = self.next().span;
                Ok((n, span))
            }
            ref t => {
                let found = Self::describe(t);
                self.err(format!("expected a number, found {found}"))
            }
        }
    }

    fn nat_u32(&mut self) -> Result<u32, DslError> {
        let (n, span) = self.nat()?;
        u32::try_from(n).map_err(|_| DslError::Syntax {
            message: "exponent too large".into(),
            span,
        })
    }

    fn prime(&mut self) -> Result<u64, DslError> {
        let (n, span) = self.nat()?;
        if is_prime(n) {
            Ok(n)
        } else {
            Err(DslError::NotPrime { value: n, span })
        }
    }

    fn mult(&mut self) -> Result<Mult, DslError> {
        if self.is_ident("w") {
            self.next();
            return Ok(Mult::Omega);
        }
        Ok(Mult::Fin(self.nat()?.0))
    }

    fn opt_power(&mut self) -> Result<Option<(Mult, SourceSpan)>, DslError> {
        if self.is_punct('^') {
            let start = self.next().span.start;
            let m = self.mult()?;
            let end = self.toks[self.pos.saturating_sub(1)].span.end;
            Ok(Some((m, SourceSpan { start, end })))
        } else {
            Ok(None)
        }
    }
}

/// Adds `m` to a multiplicity slot, reporting u64 overflow as a syntax error.
fn bump(slot: &mut Mult, m: Mult, span: SourceSpan) -> Result<(), DslError> {
    *slot = slot.checked_add(m).ok_or(DslError::Syntax {
        message: "multiplicity overflow".into(),
        span,
    })?;
    Ok(())
}

enum Block {
    Cyclic(u32),
    Prufer,
    Tf,
}

/// Parses `Z(P^n)`, `Z(P^inf)` or `Z_(P)` inside `forall_p{..}` (prime
/// literal replaced by `P`) or the same with a literal prime.
fn parse_block(p: &mut Parser, formal: bool) -> Result<(Option<u64>, Block), DslError> {
    let prime = |p: &mut Parser| -> Result<Option<u64>, DslError> {
        if formal {
            p.expect_ident("P")?;
            Ok(None)
        } else {
            p.prime().map(Some)
        }
    };
    if p.is_ident("Z") {
        p.next();
        p.expect_punct('(')?;
        if !formal && matches!(p.toks.get(p.pos + 1), Some(t) if t.tok == Tok::Punct(')')) {
            // Z(m) for a prime power m.
            let (m, span) = p.nat()?;
            p.expect_punct(')')?;
            let f = factorize(m);
            return match f.into_iter().collect::<Vec<_>>().as_slice() {
                &[(q, k)] => Ok((Some(q), Block::Cyclic(k as u32))),
                _ => Err(DslError::Syntax {
                    message: format!("{m} is not a prime power"),
                    span,
                }),
            };
        }
        let q = prime(p)?;
        p.expect_punct('^')?;
        let block = if p.is_ident("inf") {
            p.next();
            Block::Prufer
        } else {
            Block::Cyclic(p.nat_u32()?)
        };
        p.expect_punct(')')?;
        Ok((q, block))
    } else if p.is_ident("Z_") {
        p.next();
        p.expect_punct('(')?;
        let q = prime(p)?;
        p.expect_punct(')')?;
        Ok((q, Block::Tf))
    } else {
        let found = Parser::describe(&p.peek().tok);
        p.err(format!("expected a group term, found {found}"))
    }
}

fn parse_shape(p: &mut Parser) -> Result<PrimeTailShape, DslError> {
    let mut shape = PrimeTailShape::default();
    loop {
        let (_, block) = parse_block(p, true)?;
        let span = p.peek().span;
        let m = p.opt_power()?.map(|x| x.0).unwrap_or(Mult::ONE);
        match block {
            Block::Cyclic(n) => bump(shape.cyclic_pattern.entry(n).or_default(), m, span)?,
            Block::Prufer => bump(&mut shape.div_mult, m, span)?,
            Block::Tf => bump(&mut shape.tf_mult, m, span)?,
        }
        if p.is_punct('+') {
            p.next();
        } else {
            return Ok(shape);
        }
    }
}

fn parse_tail(p: &mut Parser) -> Result<(u64, TailSpec), DslError> {
    p.expect_punct('(')?;
    let prime = p.prime()?;
    let mut spec = TailSpec {
        cutoff: 0,
        mult: Mult::ONE,
    };
    let mut seen_mult = false;
    while p.is_punct(',') {
        p.next();
        if p.is_ident("cutoff") {
            p.next();
            p.expect_punct('=')?;
            spec.cutoff = p.nat_u32()?;
            break;
        }
        if seen_mult {
            return p.err("expected `cutoff`");
        }
        if p.is_ident("mult") {
            p.next();
            p.expect_punct('=')?;
        }
        spec.mult = p.mult()?;
        seen_mult = true;
    }
    p.expect_punct(')')?;
    Ok((prime, spec))
}

/// Parses a group description and validates it. The result is canonicalized.
pub fn parse_group(text: &str) -> Result<SzmielewDescription, DslError> {
    let mut p = Parser::new(text)?;
    let mut d = SzmielewDescription::new();
    if matches!(p.peek().tok, Tok::Num(0)) {
        p.next();
        p.expect_end()?;
        return Ok(d);
    }
    loop {
        let start = p.peek().span;
        if p.is_ident("Q") {
            p.next();
            let m = p.opt_power()?.map(|x| x.0).unwrap_or(Mult::ONE);
            bump(&mut d.q_mult, m, start)?;
        } else if p.is_ident("tail") {
            p.next();
            let (prime, spec) = parse_tail(&mut p)?;
            if p.is_punct('^') {
                return p.err("tail takes its multiplicity as an argument: tail(p, mult)");
            }
            if d.cyclic_tail.insert(prime, spec).is_some() {
                return Err(DslError::Syntax {
                    message: format!("duplicate tail({prime})"),
                    span: start,
                });
            }
        } else if p.is_ident("forall_p") {
            p.next();
            p.expect_punct('{')?;
            let shape = parse_shape(&mut p)?;
            p.expect_punct('}')?;
            if p.is_punct('^') {
                return p.err("forall_p block takes no multiplicity");
            }
            if d.prime_tail.replace(shape).is_some() {
                return Err(DslError::Syntax {
                    message: "duplicate forall_p block".into(),
                    span: start,
                });
            }
        } else {
            let (q, block) = parse_block(&mut p, false)?;
            let q = q.expect("literal prime");
            let m = p.opt_power()?.map(|x| x.0).unwrap_or(Mult::ONE);
            match block {
                Block::Cyclic(n) => bump(d.cyclic.entry((q, n)).or_default(), m, start)?,
                Block::Prufer => bump(d.div.entry(q).or_default(), m, start)?,
                Block::Tf => bump(d.tf.entry(q).or_default(), m, start)?,
            }
        }
        if p.is_punct('+') {
            p.next();
        } else {
            p.expect_end()?;
            break;
        }
    }
    let violations = validate(&d);
    if !violations.is_empty() {
        return Err(DslError::Invalid(violations));
    }
    Ok(d.canonicalize())
}

/// Parses a conjunction of canonical atoms; `top` is the empty conjunction.
pub fn parse_formula(text: &str) -> Result<PPFormula, DslError> {
    let mut p = Parser::new(text)?;
    if p.is_ident("top") {
        p.next();
        p.expect_end()?;
        return Ok(PPFormula::top());
    }
    let mut atoms = Vec::new();
    loop {
        let start = p.peek().span.start;
        let atom = if p.is_ident("tor") {
            p.next();
            p.expect_punct('(')?;
            let (m, _) = p.nat()?;
            p.expect_punct(')')?;
            Atom::Tor(m)
        } else if p.is_ident("div") {
            p.next();
            p.expect_punct('(')?;
            let q = p.prime()?;
            p.expect_punct(',')?;
            let r = p.nat_u32()?;
            p.expect_punct(',')?;
            let s = p.nat_u32()?;
            p.expect_punct(')')?;
            Atom::Div { p: q, r, s }
        } else {
            let found = Parser::describe(&p.peek().tok);
            return p.err(format!("expected `tor(..)` or `div(..)`, found {found}"));
        };
        let end = p.toks[p.pos - 1].span.end;
        atom.validate().map_err(|err| DslError::Atom {
            err,
            span: SourceSpan { start, end },
        })?;
        atoms.push(atom);
        if p.is_punct('&') {
            p.next();
        } else {
            p.expect_end()?;
            break;
        }
    }
    Ok(PPFormula { atoms })
}

fn power(m: Mult) -> String {
    if m == Mult::ONE {
        String::new()
    } else {
        format!("^{m}")
    }
}

/// Canonical text of a description: primes ascending; per prime the cyclic
/// terms by exponent, then the tail, `Z_(p)` and `Z(p^inf)`; then `Q` and the
/// `forall_p` block.
pub fn render_group(desc: &SzmielewDescription) -> String {
    let d = desc.canonicalize();
    let mut terms = Vec::new();
    for (p, c) in d.components() {
        for (n, m) in &c.cyclic {
            terms.push(format!("Z({p}^{n}){}", power(*m)));
        }
        if let Some(t) = c.tail {
            let mut s = format!("tail({p}");
            if t.mult != Mult::ONE {
                write!(s, ",{}", t.mult).unwrap();
            }
            if t.cutoff != 0 {
                write!(s, ",cutoff={}", t.cutoff).unwrap();
            }
            s.push(')');
            terms.push(s);
        }
        if !c.tf.is_zero() || (c.is_empty() && d.tf.contains_key(&p)) {
            terms.push(format!("Z_({p}){}", power(c.tf)));
        }
        if !c.div.is_zero() {
            terms.push(format!("Z({p}^inf){}", power(c.div)));
        }
    }
    if !d.q_mult.is_zero() {
        terms.push(format!("Q{}", power(d.q_mult)));
    }
    if let Some(s) = &d.prime_tail {
        let mut inner = Vec::new();
        for (n, m) in &s.cyclic_pattern {
            inner.push(format!("Z(P^{n}){}", power(*m)));
        }
        if !s.tf_mult.is_zero() {
            inner.push(format!("Z_(P){}", power(s.tf_mult)));
        }
        if !s.div_mult.is_zero() {
            inner.push(format!("Z(P^inf){}", power(s.div_mult)));
        }
        terms.push(format!("forall_p{{{}}}", inner.join(" + ")));
    }
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

pub(crate) fn write_formula(f: &mut fmt::Formatter<'_>, phi: &PPFormula) -> fmt::Result {
    let phi = phi.canonicalize();
    if phi.atoms.is_empty() {
        return f.write_str("top");
    }
    for (i, a) in phi.atoms.iter().enumerate() {
        if i > 0 {
            f.write_str(" & ")?;
        }
        write!(f, "{a}")?;
    }
    Ok(())
}

/// Canonical text of a formula (sorted, deduplicated atoms).
pub fn render_formula(phi: &PPFormula) -> String {
    phi.to_string()
}

/// Pattern multiplicities keyed by exponent, for callers building shapes by hand.
pub fn shape(pattern: &[(u32, Mult)], tf: Mult, div: Mult) -> PrimeTailShape {
    PrimeTailShape {
        cyclic_pattern: pattern.iter().copied().collect::<BTreeMap<_, _>>(),
        tf_mult: tf,
        div_mult: div,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_examples() {
        let d = parse_group("Z(2^3)^w + Z_(5)^2 + Q").unwrap();
        assert_eq!(d.cyclic, BTreeMap::from([((2, 3), Mult::Omega)]));
        assert_eq!(d.tf, BTreeMap::from([(5, Mult::Fin(2))]));
        assert_eq!(d.q_mult, Mult::ONE);

        let d = parse_group("tail(2) + Z(3^inf)^w").unwrap();
        assert_eq!(
            d.cyclic_tail,
            BTreeMap::from([(2, TailSpec { cutoff: 0, mult: Mult::ONE })])
        );
        assert_eq!(d.div, BTreeMap::from([(3, Mult::Omega)]));

        let e = parse_group("Z(4^2)").unwrap_err();
        assert_eq!(e.to_string(), "4 is not prime (at 2..3)");
    }

    #[test]
    fn prime_power_orders() {
        assert_eq!(
            parse_group("Z(2)^w + Z(8)^w").unwrap(),
            parse_group("Z(2^1)^w + Z(2^3)^w").unwrap()
        );
        let e = parse_group("Z(6)").unwrap_err();
        assert_eq!(e.to_string(), "syntax error at 2..3: 6 is not a prime power");
        assert!(parse_group("Z(1)").is_err());
    }

    #[test]
    fn tail_spellings() {
        let a = parse_group("tail(2, mult=w)").unwrap();
        let b = parse_group("tail(2,w)").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cyclic_tail[&2].mult, Mult::Omega);
        let c = parse_group("tail(3, 2, cutoff = 4) + Z(3^4)^5").unwrap();
        assert_eq!(c.cyclic_tail[&3], TailSpec { cutoff: 4, mult: Mult::Fin(2) });
        assert!(parse_group("tail(2)^2").is_err());
        assert!(parse_group("tail(2) + tail(2)").is_err());
    }

    #[test]
    fn semantic_errors_forwarded() {
        match parse_group("tail(2) + Z(2^3)").unwrap_err() {
            DslError::Invalid(v) => {
                assert!(v[0].to_string().contains("cutoff below listed exponent"))
            }
            e => panic!("unexpected {e}"),
        }
        assert!(matches!(parse_group("Z(2^0)"), Err(DslError::Invalid(_))));
        assert!(matches!(parse_group("tail(2, 0)"), Err(DslError::Invalid(_))));
    }

    #[test]
    fn formula_examples() {
        let f = parse_formula("tor(12) & div(2,3,1)").unwrap();
        assert_eq!(f.atoms, vec![Atom::Tor(12), Atom::Div { p: 2, r: 3, s: 1 }]);
        assert_eq!(parse_formula("top").unwrap().atoms, vec![]);
        let e = parse_formula("div(2,1,1)").unwrap_err();
        assert!(e.to_string().contains("requires s < r"), "{e}");
        assert!(parse_formula("tor(0)").is_err());
        assert!(parse_formula("div(6,2,1)").is_err());
    }

    #[test]
    fn render_examples() {
        let d = SzmielewDescription::new().with_cyclic(2, 3, Mult::Omega);
        assert_eq!(render_group(&d), "Z(2^3)^w");
        assert_eq!(render_formula(&PPFormula::top()), "top");
        let d = SzmielewDescription::new()
            .with_tf(3, Mult::Fin(2))
            .with_tf(2, Mult::ONE);
        assert_eq!(render_group(&d), "Z_(2) + Z_(3)^2");
        assert_eq!(render_group(&SzmielewDescription::trivial()), "0");
    }

    #[test]
    fn shapes_round_trip() {
        for text in [
            "forall_p{Z(P^inf)^w}",
            "Z(2^1) + forall_p{Z(P^1) + Z(P^3)^w + Z_(P) + Z(P^inf)^2}",
            "Z_(2)^0 + forall_p{Z_(P)^w}",
        ] {
            let d = parse_group(text).unwrap();
            assert_eq!(render_group(&d), text);
        }
        // a listed prime identical to the shape is folded into it
        let d = parse_group("Z_(3)^w + forall_p{Z_(P)^w}").unwrap();
        assert_eq!(render_group(&d), "forall_p{Z_(P)^w}");
    }

    #[test]
    fn error_spans_are_in_bounds() {
        for text in ["Z(2^", "Z(2^3", "+", "Q Q", "tail(", "é", "forall_p{Z(2^1)}"] {
            match parse_group(text) {
                Err(DslError::Syntax { span, .. }) | Err(DslError::NotPrime { span, .. }) => {
                    assert!(span.start <= span.end && span.end <= text.len(), "{text}")
                }
                other => panic!("{text}: {other:?}"),
            }
        }
    }
}
