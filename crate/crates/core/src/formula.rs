//! Parser for model formulas of the form
//! `marker ~ term (+ term)*` with terms `name`, `a*b`, `a:b`, `1` and
//! `f(name, by = name, K = (k1, k2, ...))`. See `docs/formula.md`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoothTerm {
    pub var: String,
    pub by: Option<String>,
    pub k: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Term {
    Main(String),
    Interaction(Vec<String>),
    Smooth(SmoothTerm),
}

impl Term {
    /// Covariate names the term refers to.
    pub fn variables(&self) -> Vec<&str> {
        match self {
            Term::Main(n) => vec![n],
            Term::Interaction(v) => v.iter().map(String::as_str).collect(),
            Term::Smooth(s) => {
                let mut v = vec![s.var.as_str()];
                if let Some(b) = &s.by {
                    v.push(b);
                }
                v
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Formula {
    pub response: String,
    /// Expanded terms; `a*b` appears as `a`, `b`, `a:b`.
    pub terms: Vec<Term>,
}

impl Formula {
    pub fn parse(s: &str) -> Result<Self> {
        Parser::new(s)?.formula()
    }

    pub fn variables(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for t in &self.terms {
            for v in t.variables() {
                if !out.iter().any(|o| o == v) {
                    out.push(v.to_string());
                }
            }
        }
        out
    }

    pub fn has_smooth(&self) -> bool {
        self.terms.iter().any(|t| matches!(t, Term::Smooth(_)))
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ~ ", self.response)?;
        if self.terms.is_empty() {
            return write!(f, "1");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            match t {
                Term::Main(n) => write!(f, "{n}")?,
                Term::Interaction(v) => write!(f, "{}", v.join(":"))?,
                Term::Smooth(s) => {
                    write!(f, "f({}", s.var)?;
                    if let Some(b) = &s.by {
                        write!(f, ", by = {b}")?;
                    }
                    let k: Vec<String> = s.k.iter().map(|k| k.to_string()).collect();
                    write!(f, ", K = ({}))", k.join(", "))?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(usize),
    Sym(char),
}

fn describe(t: &Option<Tok>) -> String {
    match t {
        Some(Tok::Ident(s)) => format!("`{s}`"),
        Some(Tok::Int(k)) => format!("`{k}`"),
        Some(Tok::Sym(c)) => format!("`{c}`"),
        None => "end of formula".into(),
    }
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '.'
}

impl Parser {
    fn new(s: &str) -> Result<Self> {
        let mut toks = Vec::new();
        let chars: Vec<char> = s.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c.is_whitespace() {
                i += 1;
            } else if "~+*:(),=".contains(c) {
                toks.push(Tok::Sym(c));
                i += 1;
            } else if is_ident_char(c) {
                let start = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                if word.chars().all(|c| c.is_ascii_digit()) {
                    let v = word
                        .parse()
                        .map_err(|_| Error::Formula(format!("bad integer `{word}`")))?;
                    toks.push(Tok::Int(v));
                } else {
                    toks.push(Tok::Ident(word));
                }
            } else {
                return Err(Error::Formula(format!("unexpected character `{c}` in `{s}`")));
            }
        }
        Ok(Self { toks, pos: 0 })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, c: char) -> Result<()> {
        match self.next() {
            Some(Tok::Sym(s)) if s == c => Ok(()),
            other => Err(Error::Formula(format!("expected `{c}`, found {}", describe(&other)))),
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s),
            other => Err(Error::Formula(format!("expected a name, found {}", describe(&other)))),
        }
    }

    fn formula(&mut self) -> Result<Formula> {
        let response = self.ident()?;
        self.expect('~')?;
        let mut terms: Vec<Term> = Vec::new();
        loop {
            for t in self.term()? {
                if !terms.contains(&t) {
                    terms.push(t);
                }
            }
            match self.next() {
                None => break,
                Some(Tok::Sym('+')) => continue,
                Some(t) => return Err(Error::Formula(format!("unexpected token {t:?}"))),
            }
        }
        Ok(Formula { response, terms })
    }

    fn term(&mut self) -> Result<Vec<Term>> {
        match self.peek() {
            Some(Tok::Int(1)) => {
                self.next();
                return Ok(Vec::new());
            }
            Some(Tok::Ident(f)) if f == "f" && self.toks.get(self.pos + 1) == Some(&Tok::Sym('(')) => {
                self.pos += 2;
                return Ok(vec![Term::Smooth(self.smooth()?)]);
            }
            _ => {}
        }
        let first = self.ident()?;
        match self.peek() {
            Some(Tok::Sym('*')) => {
                self.next();
                let second = self.ident()?;
                if first == second {
                    return Ok(vec![Term::Main(first)]);
                }
                Ok(vec![
                    Term::Main(first.clone()),
                    Term::Main(second.clone()),
                    Term::Interaction(vec![first, second]),
                ])
            }
            Some(Tok::Sym(':')) => {
                self.next();
                let second = self.ident()?;
                if first == second {
                    return Ok(vec![Term::Main(first)]);
                }
                Ok(vec![Term::Interaction(vec![first, second])])
            }
            _ => Ok(vec![Term::Main(first)]),
        }
    }

    fn smooth(&mut self) -> Result<SmoothTerm> {
        let var = self.ident()?;
        let mut by = None;
        let mut k = None;
        while let Some(Tok::Sym(',')) = self.peek() {
            self.next();
            let key = self.ident()?;
            self.expect('=')?;
            match key.as_str() {
                "by" => by = Some(self.ident()?),
                "K" => k = Some(self.int_list()?),
                other => return Err(Error::Formula(format!("unknown smooth argument `{other}`"))),
            }
        }
        self.expect(')')?;
        let k = k.unwrap_or_else(|| vec![0]);
        if by.is_none() && k.len() != 1 {
            return Err(Error::Formula("K must be a single integer without `by`".into()));
        }
        Ok(SmoothTerm { var, by, k })
    }

    fn int_list(&mut self) -> Result<Vec<usize>> {
        match self.next() {
            Some(Tok::Int(v)) => Ok(vec![v]),
            Some(Tok::Ident(c)) if c == "c" => {
                self.expect('(')?;
                self.ints_until_close()
            }
            Some(Tok::Sym('(')) => self.ints_until_close(),
            other => Err(Error::Formula(format!("expected K values, found {}", describe(&other)))),
        }
    }

    fn ints_until_close(&mut self) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        loop {
            match self.next() {
                Some(Tok::Int(v)) => out.push(v),
                other => return Err(Error::Formula(format!("expected an integer, found {}", describe(&other)))),
            }
            match self.next() {
                Some(Tok::Sym(',')) => continue,
                Some(Tok::Sym(')')) => return Ok(out),
                other => return Err(Error::Formula(format!("expected `,` or `)`, found {}", describe(&other)))),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_expands() {
        let f = Formula::parse("bmi ~ gender*age").unwrap();
        assert_eq!(f.response, "bmi");
        assert_eq!(
            f.terms,
            vec![
                Term::Main("gender".into()),
                Term::Main("age".into()),
                Term::Interaction(vec!["gender".into(), "age".into()]),
            ]
        );
    }

    #[test]
    fn smooth_terms() {
        let f = Formula::parse("bmi ~ gender + f(age, by = gender, K = c(3, 5))").unwrap();
        assert_eq!(
            f.terms[1],
            Term::Smooth(SmoothTerm { var: "age".into(), by: Some("gender".into()), k: vec![3, 5] })
        );
        let g = Formula::parse("y~f(x,K=(4))").unwrap();
        assert_eq!(g.terms[0], Term::Smooth(SmoothTerm { var: "x".into(), by: None, k: vec![4] }));
        assert_eq!(Formula::parse("y ~ f(x, K=2)").unwrap().terms.len(), 1);
        assert_eq!(Formula::parse(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn intercept_only_and_duplicates() {
        assert!(Formula::parse("y ~ 1").unwrap().terms.is_empty());
        let f = Formula::parse("y ~ a + a*b + a:b").unwrap();
        assert_eq!(f.terms.len(), 3);
        assert_eq!(f.variables(), vec!["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn errors() {
        for bad in ["y", "~ x", "y ~ x +", "y ~ f(x, K=(1,2))", "y ~ x $ z", "y ~ f(x, q=1)"] {
            assert!(matches!(Formula::parse(bad), Err(Error::Formula(_))), "{bad}");
        }
    }
}
