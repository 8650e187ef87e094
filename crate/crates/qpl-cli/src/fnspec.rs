//! Textual function specifications.
//!
//! Grammar (whitespace between tokens is ignored):
//!
//!   spec := term ('+' term)*
//!   term := 'poly:' real (',' real)*
//!         | 'defect:' integer
//!         | 'scale:' real ':(' spec ')'
//!
//! The denoted function is the sum of the terms; `poly:c0,c1,...` is the
//! polynomial in the grid coordinate, and `defect:N` stands for
//! x / (q^(2N-2) - q^(2N)), the connection form whose only defective spot
//! is N. Reals are plain decimals with an optional exponent.

use qpl::{QParam, SpectralError, SpectralFunction};
use std::fmt;
use thiserror::Error;

/// Default cap on the expanded polynomial degree of a spec.
pub const DEFAULT_MAX_DEGREE: usize = 64;
/// Hard cap on the defect index.
pub const MAX_DEFECT: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Poly(Vec<f64>),
    Defect(usize),
    Scale(f64, Box<FnSpec>),
}

/// Parsed function specification: a nonempty sum of terms.
#[derive(Clone, Debug, PartialEq)]
pub struct FnSpec {
    pub terms: Vec<Term>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("at byte {pos}: {what}")]
    Syntax { pos: usize, what: String },
    #[error("expanded degree {degree} exceeds the maximum {max}")]
    DegreeTooHigh { degree: usize, max: usize },
    #[error("defect index {n} exceeds the maximum {max}")]
    DefectTooDeep { n: usize, max: usize },
}

struct Cursor<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> Result<(), ParseError> {
        match self.peek() {
            Some(c) if c == b => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.syntax(format!("expected '{}'", b as char))),
        }
    }

    fn syntax(&self, what: impl Into<String>) -> ParseError {
        ParseError::Syntax { pos: self.pos, what: what.into() }
    }

    /// Lowercase keyword up to (not including) the next non-letter.
    fn keyword(&mut self) -> (usize, &'a str) {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        (start, std::str::from_utf8(&self.src[start..self.pos]).unwrap())
    }

    /// One decimal real: sign? digits ('.' digits?)? ([eE] sign? digits)?.
    /// Scanned contiguously so exponent signs never collide with the '+'
    /// that separates terms.
    fn number(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
            self.pos += 1;
        }
        let mut digits = 0;
        while self.src.get(self.pos).is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
            digits += 1;
        }
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            while self.src.get(self.pos).is_some_and(|b| b.is_ascii_digit()) {
                self.pos += 1;
                digits += 1;
            }
        }
        if digits == 0 {
            self.pos = start;
            return Err(self.syntax("expected a number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            let mut exp_digits = 0;
            while self.src.get(self.pos).is_some_and(|b| b.is_ascii_digit()) {
                self.pos += 1;
                exp_digits += 1;
            }
            if exp_digits == 0 {
                return Err(self.syntax("expected exponent digits"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: f64 = text
            .parse()
            .map_err(|_| ParseError::Syntax { pos: start, what: format!("bad number '{text}'") })?;
        if !value.is_finite() {
            return Err(ParseError::Syntax {
                pos: start,
                what: format!("number '{text}' overflows binary64"),
            });
        }
        Ok(value)
    }

    fn integer(&mut self) -> Result<usize, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.src.get(self.pos).is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.syntax("expected an integer"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| ParseError::Syntax { pos: start, what: "integer out of range".into() })
    }
}

impl FnSpec {
    pub fn parse(text: &str, max_degree: usize) -> Result<Self, ParseError> {
        let mut cur = Cursor { src: text.as_bytes(), pos: 0 };
        let spec = parse_spec(&mut cur)?;
        if cur.peek().is_some() {
            return Err(cur.syntax("unexpected trailing input"));
        }
        let degree = spec.degree();
        if degree > max_degree {
            return Err(ParseError::DegreeTooHigh { degree, max: max_degree });
        }
        Ok(spec)
    }

    /// Expanded polynomial degree: the maximum over the summed terms.
    pub fn degree(&self) -> usize {
        self.terms.iter().map(term_degree).max().unwrap_or(0)
    }

    /// The denoted grid function for a concrete parameter.
    pub fn to_function(&self, p: &QParam) -> Result<SpectralFunction, SpectralError> {
        let mut acc: Option<SpectralFunction> = None;
        for term in &self.terms {
            let f = match term {
                Term::Poly(coeffs) => SpectralFunction::poly(coeffs.clone())?,
                Term::Defect(n) => {
                    let slope = 1.0 / (p.point(*n - 1) - p.point(*n));
                    SpectralFunction::poly(vec![0.0, slope])?
                }
                Term::Scale(alpha, inner) => inner.to_function(p)?.scale(*alpha)?,
            };
            acc = Some(match acc {
                None => f,
                Some(sum) => sum.add(p, &f)?,
            });
        }
        Ok(acc.expect("parser guarantees at least one term"))
    }

}

fn term_degree(term: &Term) -> usize {
    match term {
        Term::Poly(coeffs) => coeffs.len().saturating_sub(1),
        Term::Defect(_) => 1,
        Term::Scale(_, inner) => inner.degree(),
    }
}

fn parse_spec(cur: &mut Cursor) -> Result<FnSpec, ParseError> {
    let mut terms = vec![parse_term(cur)?];
    while cur.peek() == Some(b'+') {
        cur.pos += 1;
        terms.push(parse_term(cur)?);
    }
    Ok(FnSpec { terms })
}

fn parse_term(cur: &mut Cursor) -> Result<Term, ParseError> {
    let (start, word) = cur.keyword();
    match word {
        "poly" => {
            cur.eat(b':')?;
            let mut coeffs = vec![cur.number()?];
            while cur.peek() == Some(b',') {
                cur.pos += 1;
                coeffs.push(cur.number()?);
            }
            Ok(Term::Poly(coeffs))
        }
        "defect" => {
            cur.eat(b':')?;
            let at = {
                cur.skip_ws();
                cur.pos
            };
            let n = cur.integer()?;
            if n == 0 {
                return Err(ParseError::Syntax {
                    pos: at,
                    what: "defect index must be at least 1".into(),
                });
            }
            if n > MAX_DEFECT {
                return Err(ParseError::DefectTooDeep { n, max: MAX_DEFECT });
            }
            Ok(Term::Defect(n))
        }
        "scale" => {
            cur.eat(b':')?;
            let alpha = cur.number()?;
            cur.eat(b':')?;
            cur.eat(b'(')?;
            let inner = parse_spec(cur)?;
            cur.eat(b')')?;
            Ok(Term::Scale(alpha, Box::new(inner)))
        }
        "" => Err(cur.syntax("expected 'poly:', 'defect:' or 'scale:'")),
        other => Err(ParseError::Syntax {
            pos: start,
            what: format!("unknown term '{other}', expected poly, defect or scale"),
        }),
    }
}

impl fmt::Display for FnSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, term) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            match term {
                Term::Poly(coeffs) => {
                    write!(f, "poly:")?;
                    for (j, c) in coeffs.iter().enumerate() {
                        if j > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{c}")?;
                    }
                }
                Term::Defect(n) => write!(f, "defect:{n}")?,
                Term::Scale(alpha, inner) => write!(f, "scale:{alpha}:({inner})")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<FnSpec, ParseError> {
        FnSpec::parse(text, DEFAULT_MAX_DEGREE)
    }

    #[test]
    fn parses_the_three_term_shapes() {
        assert_eq!(
            parse("poly:0,1").unwrap().terms,
            vec![Term::Poly(vec![0.0, 1.0])]
        );
        assert_eq!(parse("defect:3").unwrap().terms, vec![Term::Defect(3)]);
        assert_eq!(
            parse("poly:0,1 + scale:2:(defect:1)").unwrap().terms,
            vec![
                Term::Poly(vec![0.0, 1.0]),
                Term::Scale(2.0, Box::new(FnSpec { terms: vec![Term::Defect(1)] })),
            ]
        );
    }

    #[test]
    fn whitespace_between_tokens_is_ignored() {
        let spec = parse("  poly : 1 , -2.5e-1  +  defect : 4  ").unwrap();
        assert_eq!(
            spec.terms,
            vec![Term::Poly(vec![1.0, -0.25]), Term::Defect(4)]
        );
    }

    #[test]
    fn exponent_signs_do_not_split_terms() {
        let spec = parse("poly:1e+2,3E-1").unwrap();
        assert_eq!(spec.terms, vec![Term::Poly(vec![100.0, 0.3])]);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse("poly:") {
            Err(ParseError::Syntax { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("{other:?}"),
        }
        match parse("poly:1,2 + wibble:3") {
            Err(ParseError::Syntax { pos, what }) => {
                assert_eq!(pos, 11);
                assert!(what.contains("wibble"));
            }
            other => panic!("{other:?}"),
        }
        match parse("scale:2:(defect:1") {
            Err(ParseError::Syntax { pos, what }) => {
                assert_eq!(pos, 17);
                assert!(what.contains("')'"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse("defect:0"),
            Err(ParseError::Syntax { pos: 7, .. })
        ));
        assert!(matches!(
            parse("poly:1e999"),
            Err(ParseError::Syntax { pos: 5, .. })
        ));
    }

    #[test]
    fn degree_and_defect_caps_are_enforced() {
        let long = format!("poly:{}", vec!["1"; 66].join(","));
        assert_eq!(
            parse(&long),
            Err(ParseError::DegreeTooHigh { degree: 65, max: 64 })
        );
        assert!(FnSpec::parse(&long, 65).is_ok());
        assert_eq!(
            parse("defect:101"),
            Err(ParseError::DefectTooDeep { n: 101, max: 100 })
        );
        // The cap applies to the expansion, so nesting does not hide degree.
        let nested = format!("scale:2:({long})");
        assert_eq!(
            parse(&nested),
            Err(ParseError::DegreeTooHigh { degree: 65, max: 64 })
        );
    }

    #[test]
    fn defect_term_denotes_the_unit_slope_form() {
        let p = QParam::new(0.5).unwrap();
        let f = parse("defect:1").unwrap().to_function(&p).unwrap();
        assert_eq!(f.poly_coeffs().unwrap(), &[0.0, 1.0 / 0.75]);
        let sum = parse("poly:0.5 + scale:3:(defect:1)")
            .unwrap()
            .to_function(&p)
            .unwrap();
        assert_eq!(sum.poly_coeffs().unwrap(), &[0.5, 4.0]);
    }

    fn term_strategy(depth: u32) -> BoxedStrategy<Term> {
        let coeff = -1e6f64..1e6;
        let poly = proptest::collection::vec(coeff.clone(), 1..6).prop_map(Term::Poly);
        let defect = (1usize..=100).prop_map(Term::Defect);
        if depth == 0 {
            prop_oneof![poly, defect].boxed()
        } else {
            let inner = spec_strategy(depth - 1);
            prop_oneof![
                poly,
                defect,
                (-1e3f64..1e3, inner).prop_map(|(a, s)| Term::Scale(a, Box::new(s))),
            ]
            .boxed()
        }
    }

    fn spec_strategy(depth: u32) -> BoxedStrategy<FnSpec> {
        proptest::collection::vec(term_strategy(depth), 1..4)
            .prop_map(|terms| FnSpec { terms })
            .boxed()
    }

    proptest! {
        /// The `Display` form is the canonical rendering; parsing it
        /// reproduces the spec exactly.
        #[test]
        fn rendering_round_trips(spec in spec_strategy(2)) {
            let text = spec.to_string();
            let back = FnSpec::parse(&text, DEFAULT_MAX_DEGREE).unwrap();
            prop_assert_eq!(back, spec);
        }
    }
}
