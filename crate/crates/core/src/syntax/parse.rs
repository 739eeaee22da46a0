use std::collections::BTreeSet;

use super::atom::Atom;
use super::program::{Database, Program, Query, Rule};
use super::term::{name, Name, Term};
use crate::error::{ParseError, ParseErrorKind, ProgramError};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Var(String),
    Quoted(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Arrow,
    Colon,
    QueryStart,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Var(s) => format!("variable `{s}`"),
            Tok::Quoted(s) => format!("constant '{s}'"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Colon => "`:`".into(),
            Tok::QueryStart => "`?-`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Pos {
    line: usize,
    col: usize,
}

fn err(pos: Pos, kind: ParseErrorKind) -> ParseError {
    ParseError {
        line: pos.line,
        col: pos.col,
        kind,
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, c: char| {
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, c);
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                let ch = chars[i];
                advance(&mut i, &mut line, &mut col, ch);
            }
            continue;
        }
        let simple = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            '.' => Some(Tok::Dot),
            ':' => Some(Tok::Colon),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push((tok, pos));
            advance(&mut i, &mut line, &mut col, c);
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            out.push((Tok::Arrow, pos));
            advance(&mut i, &mut line, &mut col, c);
            advance(&mut i, &mut line, &mut col, '>');
            continue;
        }
        if c == '?' && chars.get(i + 1) == Some(&'-') {
            out.push((Tok::QueryStart, pos));
            advance(&mut i, &mut line, &mut col, c);
            advance(&mut i, &mut line, &mut col, '-');
            continue;
        }
        if c == '\'' {
            advance(&mut i, &mut line, &mut col, c);
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None => return Err(err(pos, ParseErrorKind::UnterminatedQuote)),
                    Some('\'') => {
                        advance(&mut i, &mut line, &mut col, '\'');
                        break;
                    }
                    Some('\\') if i + 1 < chars.len() => {
                        advance(&mut i, &mut line, &mut col, '\\');
                        let e = chars[i];
                        s.push(e);
                        advance(&mut i, &mut line, &mut col, e);
                    }
                    Some(&ch) => {
                        s.push(ch);
                        advance(&mut i, &mut line, &mut col, ch);
                    }
                }
            }
            out.push((Tok::Quoted(s), pos));
            continue;
        }
        if c.is_ascii_alphanumeric() {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                let ch = chars[i];
                s.push(ch);
                advance(&mut i, &mut line, &mut col, ch);
            }
            let tok = if c.is_ascii_uppercase() {
                Tok::Var(s)
            } else {
                Tok::Ident(s)
            };
            out.push((tok, pos));
            continue;
        }
        return Err(err(pos, ParseErrorKind::UnexpectedChar(c)));
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Parser, ParseError> {
        Ok(Parser {
            toks: lex(text)?,
            at: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expected(&self, what: &str) -> ParseError {
        err(
            self.pos(),
            ParseErrorKind::Expected {
                expected: what.to_string(),
                found: self.peek().describe(),
            },
        )
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.expected(what))
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.bump();
                Ok(Term::Var(name(&v)))
            }
            Tok::Ident(c) | Tok::Quoted(c) => {
                self.bump();
                Ok(Term::Const(name(&c)))
            }
            _ => Err(self.expected("a term")),
        }
    }

    fn atom(&mut self) -> Result<(Atom, Pos), ParseError> {
        let pos = self.pos();
        let predicate = match self.peek().clone() {
            Tok::Ident(p) => {
                self.bump();
                p
            }
            _ => return Err(self.expected("a predicate name")),
        };
        let mut args = Vec::new();
        if *self.peek() == Tok::LParen {
            self.bump();
            if *self.peek() != Tok::RParen {
                args.push(self.term()?);
                while *self.peek() == Tok::Comma {
                    self.bump();
                    args.push(self.term()?);
                }
            }
            self.expect(Tok::RParen, "`)` or `,`")?;
        }
        Ok((Atom::new(name(&predicate), args), pos))
    }

    fn atoms(&mut self) -> Result<Vec<(Atom, Pos)>, ParseError> {
        let mut out = vec![self.atom()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            out.push(self.atom()?);
        }
        Ok(out)
    }

    fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }
}

struct RawRule {
    label: Option<Name>,
    body: Vec<(Atom, Pos)>,
    head: Vec<(Atom, Pos)>,
    existentials: Vec<(Name, Pos)>,
    pos: Pos,
}

fn raw_rule(p: &mut Parser) -> Result<RawRule, ParseError> {
    let pos = p.pos();
    let label = match (p.peek().clone(), p.peek2()) {
        (Tok::Ident(l) | Tok::Var(l), Tok::Colon) => {
            p.bump();
            p.bump();
            Some(name(&l))
        }
        _ => None,
    };
    let body = p.atoms()?;
    p.expect(Tok::Arrow, "`->`")?;
    let mut existentials = Vec::new();
    if matches!(p.peek(), Tok::Ident(k) if k == "exists") && matches!(p.peek2(), Tok::Var(_)) {
        p.bump();
        loop {
            let vpos = p.pos();
            match p.bump() {
                Tok::Var(v) => existentials.push((name(&v), vpos)),
                _ => {
                    p.at -= 1;
                    return Err(p.expected("an existential variable"));
                }
            }
            if *p.peek() == Tok::Comma {
                p.bump();
            } else {
                break;
            }
        }
        p.expect(Tok::Colon, "`:` after existential variables")?;
    }
    let head = p.atoms()?;
    p.expect(Tok::Dot, "`.` or `,`")?;
    Ok(RawRule {
        label,
        body,
        head,
        existentials,
        pos,
    })
}

fn invalid(pos: Pos, e: ProgramError) -> ParseError {
    err(pos, ParseErrorKind::Invalid(e))
}

/// Parses a rule file. Unlabeled rules get `r<n>` labels from their ordinal.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(text)?;
    let mut raws = Vec::new();
    while !p.at_eof() {
        raws.push(raw_rule(&mut p)?);
    }
    let explicit: BTreeSet<Name> = raws.iter().filter_map(|r| r.label.clone()).collect();
    let mut schema = std::collections::BTreeMap::<Name, usize>::new();
    let mut labels = BTreeSet::new();
    let mut rules = Vec::new();
    for (i, raw) in raws.into_iter().enumerate() {
        let label = match raw.label {
            Some(l) => l,
            None => {
                let mut candidate = format!("r{}", i + 1);
                while explicit.contains(candidate.as_str()) || labels.contains(candidate.as_str())
                {
                    candidate.push('_');
                }
                name(&candidate)
            }
        };
        if !labels.insert(label.clone()) {
            return Err(invalid(
                raw.pos,
                ProgramError::DuplicateLabel {
                    label: label.to_string(),
                },
            ));
        }
        for (atom, apos) in raw.body.iter().chain(&raw.head) {
            check_arity(&mut schema, atom, *apos)?;
        }
        let body_vars: BTreeSet<Name> = raw.body.iter().flat_map(|(a, _)| a.var_set()).collect();
        for (z, zpos) in &raw.existentials {
            if body_vars.contains(z) {
                return Err(invalid(
                    *zpos,
                    ProgramError::ExistentialInBody {
                        label: label.to_string(),
                        var: z.to_string(),
                    },
                ));
            }
        }
        let rule = Rule {
            label,
            body: raw.body.into_iter().map(|(a, _)| a).collect(),
            head: raw.head.into_iter().map(|(a, _)| a).collect(),
            existentials: raw.existentials.into_iter().map(|(z, _)| z).collect(),
        };
        rule.validate().map_err(|e| invalid(raw.pos, e))?;
        rules.push(rule);
    }
    Program::new(rules).map_err(|e| invalid(Pos { line: 1, col: 1 }, e))
}

fn check_arity(
    schema: &mut std::collections::BTreeMap<Name, usize>,
    atom: &Atom,
    pos: Pos,
) -> Result<(), ParseError> {
    match schema.get(&atom.predicate) {
        Some(&n) if n != atom.arity() => Err(invalid(
            pos,
            ProgramError::ArityMismatch {
                predicate: atom.predicate.to_string(),
                expected: n,
                found: atom.arity(),
            },
        )),
        Some(_) => Ok(()),
        None => {
            schema.insert(atom.predicate.clone(), atom.arity());
            Ok(())
        }
    }
}

/// Parses a fact file: ground atoms, each terminated by `.`.
pub fn parse_facts(text: &str) -> Result<Database, ParseError> {
    let mut p = Parser::new(text)?;
    let mut schema = std::collections::BTreeMap::new();
    let mut facts = Vec::new();
    while !p.at_eof() {
        let (atom, pos) = p.atom()?;
        p.expect(Tok::Dot, "`.` after a fact")?;
        check_arity(&mut schema, &atom, pos)?;
        if !atom.is_ground() {
            return Err(invalid(
                pos,
                ProgramError::NonGroundFact {
                    fact: atom.to_string(),
                },
            ));
        }
        facts.push(atom);
    }
    Database::new(facts).map_err(|e| invalid(Pos { line: 1, col: 1 }, e))
}

/// Parses a query file holding a single `?- atoms.` line.
pub fn parse_query(text: &str) -> Result<Query, ParseError> {
    let mut p = Parser::new(text)?;
    let pos = p.pos();
    p.expect(Tok::QueryStart, "`?-`")?;
    let atoms = p.atoms()?;
    p.expect(Tok::Dot, "`.` or `,`")?;
    if !p.at_eof() {
        return Err(p.expected("end of input after the query"));
    }
    let mut schema = std::collections::BTreeMap::new();
    for (atom, apos) in &atoms {
        check_arity(&mut schema, atom, *apos)?;
    }
    Query::new(atoms.into_iter().map(|(a, _)| a).collect()).map_err(|e| invalid(pos, e))
}

/// Parses a comma-separated list of atoms, such as a query shape.
pub fn parse_atoms(text: &str) -> Result<Vec<Atom>, ParseError> {
    let mut p = Parser::new(text)?;
    let atoms = p.atoms()?;
    if *p.peek() == Tok::Dot {
        p.bump();
    }
    if !p.at_eof() {
        return Err(p.expected("end of input"));
    }
    Ok(atoms.into_iter().map(|(a, _)| a).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIGMA1: &str = "s11: t(X, Y) -> exists Z: t(Y, Z), u(Y, Z).\n\
                          s12: t(X, Y), u(Y, Z) -> t(Y, Z), u(X, Y).\n";

    #[test]
    fn parses_sigma1() {
        let p = parse_program(SIGMA1).unwrap();
        assert_eq!(p.rules.len(), 2);
        assert_eq!(p.rules[0].existentials.len(), 1);
        assert!(p.rules[0].is_existential("Z"));
        assert!(p.rules[1].existentials.is_empty());
        assert_eq!(p.schema.len(), 2);
    }

    #[test]
    fn empty_text_is_empty_program() {
        assert!(parse_program("").unwrap().is_empty());
        assert!(parse_program("  % only a comment\n").unwrap().is_empty());
    }

    #[test]
    fn rejects_existential_in_body() {
        let e = parse_program("t(X) -> exists X: u(X).").unwrap_err();
        assert!(matches!(
            e.kind,
            ParseErrorKind::Invalid(ProgramError::ExistentialInBody { .. })
        ));
        assert_eq!((e.line, e.col), (1, 16));
    }

    #[test]
    fn rejects_arity_mismatch_with_position() {
        let e = parse_program("t(X, Y) -> u(X).\nu(X, Y) -> t(X, Y).").unwrap_err();
        assert!(matches!(
            e.kind,
            ParseErrorKind::Invalid(ProgramError::ArityMismatch { .. })
        ));
        assert_eq!((e.line, e.col), (2, 1));
    }

    #[test]
    fn rejects_unbound_head_variable() {
        let e = parse_program("t(X) -> u(X, Y).").unwrap_err();
        assert!(matches!(
            e.kind,
            ParseErrorKind::Invalid(ProgramError::UnboundHeadVariable { .. })
        ));
    }

    #[test]
    fn syntax_error_reports_location() {
        let e = parse_program("t(X) -> u(X)\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_program("t(X) -> #u(X).").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnexpectedChar('#'));
        assert_eq!((e.line, e.col), (1, 9));
    }

    #[test]
    fn default_labels_avoid_explicit_ones() {
        let p = parse_program("a(X) -> b(X).\nr1: b(X) -> c(X).").unwrap();
        assert_eq!(&*p.rules[1].label, "r1");
        assert_ne!(&*p.rules[0].label, "r1");
    }

    #[test]
    fn quoted_constants_round_trip() {
        let p = parse_program("p(X, 'Hello world', 'it\\'s') -> q(X, c1).").unwrap();
        let printed = p.to_string();
        assert_eq!(parse_program(&printed).unwrap(), p);
    }

    #[test]
    fn facts_and_queries() {
        let d = parse_facts("t(c1, c2).\nu(c1, c2).\nt(c1, c2).").unwrap();
        assert_eq!(d.facts.len(), 2);
        assert!(parse_facts("t(X, c2).").is_err());
        let q = parse_query("?- t(X, X).").unwrap();
        assert_eq!(q.body.len(), 1);
        assert!(parse_query("?- t(X, X)").is_err());
        assert!(parse_query("t(X, X).").is_err());
    }

    #[test]
    fn null_syntax_is_not_parseable() {
        assert!(parse_facts("t(_n1, c).").is_err());
    }
}
