//! Surface syntax reader.
//!
//! ```text
//! t ::= x | fun (x: T) t | tfun [X <: S] t | x y | x [S] | box x | C unbox x | let x = t in t | (t)
//! T ::= S | C S
//! S ::= X | Top | all (x: T) -> T | all [X <: S] -> T | Box T | (T)
//! C ::= {} | {id, ..., id}          id may be `cap`
//! ```
//!
//! Lowercase identifiers are term variables, capitalised ones type variables.
//! `#` starts a comment running to the end of the line.

use crate::error::{ParseError, ParseErrorKind};
use crate::syntax::{Binding, CaptureSet, Env, Shape, TVar, Term, Type, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    LBrace,
    RBrace,
    Colon,
    Comma,
    Arrow,
    Sub,
    Eq,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrack => "`[`".into(),
            Tok::RBrack => "`]`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Sub => "`<:`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "fun", "tfun", "let", "in", "box", "unbox", "all", "Top", "Box", "cap",
];

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str, first_line: usize) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut line = first_line;
    let mut col = 1;
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (l, cl) = (line, col);
        let mut push = |tok| {
            out.push(Spanned {
                tok,
                line: l,
                col: cl,
            })
        };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
                continue;
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' || c == '\'' {
                        s.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                push(Tok::Ident(s));
                continue;
            }
            _ => {}
        }
        chars.next();
        col += 1;
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBrack,
            ']' => Tok::RBrack,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            ':' => Tok::Colon,
            ',' => Tok::Comma,
            '=' => Tok::Eq,
            '-' if chars.peek() == Some(&'>') => {
                chars.next();
                col += 1;
                Tok::Arrow
            }
            '<' if chars.peek() == Some(&':') => {
                chars.next();
                col += 1;
                Tok::Sub
            }
            _ => {
                return Err(ParseError {
                    kind: ParseErrorKind::Syntax,
                    line: l,
                    col: cl,
                    message: format!("unexpected character `{c}`"),
                })
            }
        };
        out.push(Spanned {
            tok,
            line: l,
            col: cl,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

fn is_term_ident(s: &str) -> bool {
    !KEYWORDS.contains(&s) && s.starts_with(|c: char| c.is_ascii_lowercase() || c == '_')
}

fn is_type_ident(s: &str) -> bool {
    !KEYWORDS.contains(&s) && s.starts_with(|c: char| c.is_ascii_uppercase())
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(src: &str, first_line: usize) -> PResult<Self> {
        Ok(Parser {
            toks: lex(src, first_line)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_at(&self, pos: usize, kind: ParseErrorKind, message: String) -> ParseError {
        let s = &self.toks[pos];
        ParseError {
            kind,
            line: s.line,
            col: s.col,
            message,
        }
    }

    fn err(&self, message: String) -> ParseError {
        self.err_at(self.pos, ParseErrorKind::Syntax, message)
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        self.err(format!(
            "expected {wanted}, found {}",
            self.peek().describe()
        ))
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn at_term_ident(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if is_term_ident(s))
    }

    fn var(&mut self) -> PResult<Var> {
        match self.peek().clone() {
            Tok::Ident(s) if is_term_ident(&s) => {
                self.bump();
                Ok(Var::new(&s))
            }
            _ => Err(self.unexpected("a term variable")),
        }
    }

    /// A variable in an operand position; anything else there breaks MNF.
    fn operand(&mut self, what: &str) -> PResult<Var> {
        if self.at_term_ident() {
            return self.var();
        }
        if self.starts_term() {
            return Err(self.err_at(
                self.pos,
                ParseErrorKind::MnfViolation,
                format!("{what} must be a variable; bind the term with `let` first"),
            ));
        }
        Err(self.unexpected("a term variable"))
    }

    fn tvar(&mut self) -> PResult<TVar> {
        match self.peek().clone() {
            Tok::Ident(s) if is_type_ident(&s) => {
                self.bump();
                Ok(TVar::new(&s))
            }
            _ => Err(self.unexpected("a type variable")),
        }
    }

    fn capture_set(&mut self) -> PResult<CaptureSet> {
        self.expect(Tok::LBrace)?;
        let mut c = CaptureSet::empty();
        if *self.peek() == Tok::RBrace {
            self.bump();
            return Ok(c);
        }
        loop {
            if self.is_kw("cap") {
                self.bump();
                c = c.with_root(true);
            } else {
                c.insert(self.var()?);
            }
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RBrace => {
                    self.bump();
                    return Ok(c);
                }
                _ => return Err(self.unexpected("`,` or `}`")),
            }
        }
    }

    fn ty(&mut self) -> PResult<Type> {
        match self.peek() {
            Tok::LBrace => {
                let c = self.capture_set()?;
                let s = self.shape()?;
                Ok(Type::new(c, s))
            }
            Tok::LParen => {
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            _ => Ok(Type::pure(self.shape()?)),
        }
    }

    fn shape(&mut self) -> PResult<Shape> {
        match self.peek().clone() {
            Tok::LParen => {
                let at = self.pos;
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                if !t.captures.is_empty() {
                    return Err(self.err_at(
                        at,
                        ParseErrorKind::Syntax,
                        "expected a shape type, found a capturing type".into(),
                    ));
                }
                Ok(t.shape)
            }
            Tok::Ident(s) if s == "Top" => {
                self.bump();
                Ok(Shape::Top)
            }
            Tok::Ident(s) if s == "Box" => {
                self.bump();
                Ok(Type::boxed(self.ty()?))
            }
            Tok::Ident(s) if s == "all" => {
                self.bump();
                match self.peek() {
                    Tok::LParen => {
                        self.bump();
                        let x = self.var()?;
                        self.expect(Tok::Colon)?;
                        let p = self.ty()?;
                        self.expect(Tok::RParen)?;
                        self.expect(Tok::Arrow)?;
                        let r = self.ty()?;
                        Ok(Type::fun(x, p, r))
                    }
                    Tok::LBrack => {
                        self.bump();
                        let x = self.tvar()?;
                        self.expect(Tok::Sub)?;
                        let b = self.shape()?;
                        self.expect(Tok::RBrack)?;
                        self.expect(Tok::Arrow)?;
                        let r = self.ty()?;
                        Ok(Type::tfun(x, b, r))
                    }
                    _ => Err(self.unexpected("`(` or `[`")),
                }
            }
            Tok::Ident(s) if is_type_ident(&s) => {
                self.bump();
                Ok(Shape::TVar(TVar::new(&s)))
            }
            _ => Err(self.unexpected("a type")),
        }
    }

    fn starts_term(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => {
                is_term_ident(s) || matches!(s.as_str(), "fun" | "tfun" | "let" | "box")
            }
            Tok::LParen | Tok::LBrace => true,
            _ => false,
        }
    }

    fn term(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "fun" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let x = self.var()?;
                self.expect(Tok::Colon)?;
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                let body = self.term()?;
                Ok(Term::abs(x, t, body))
            }
            Tok::Ident(s) if s == "tfun" => {
                self.bump();
                self.expect(Tok::LBrack)?;
                let x = self.tvar()?;
                self.expect(Tok::Sub)?;
                let b = self.shape()?;
                self.expect(Tok::RBrack)?;
                let body = self.term()?;
                Ok(Term::tabs(x, b, body))
            }
            Tok::Ident(s) if s == "let" => {
                self.bump();
                let x = self.var()?;
                self.expect(Tok::Eq)?;
                let bound = self.term()?;
                self.expect_kw("in")?;
                let body = self.term()?;
                Ok(Term::let_(x, bound, body))
            }
            Tok::Ident(s) if s == "box" => {
                self.bump();
                let x = self.operand("the operand of `box`")?;
                self.no_trailing_operand()?;
                Ok(Term::Box(x))
            }
            Tok::LBrace => {
                let c = self.capture_set()?;
                self.expect_kw("unbox")?;
                let x = self.operand("the operand of `unbox`")?;
                self.no_trailing_operand()?;
                Ok(Term::Unbox(c, x))
            }
            Tok::LParen => {
                let at = self.pos;
                self.bump();
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                match t {
                    Term::Var(x) => self.application(x),
                    other => {
                        if self.starts_term() || *self.peek() == Tok::LBrack {
                            return Err(self.err_at(
                                at,
                                ParseErrorKind::MnfViolation,
                                "the head of an application must be a variable".into(),
                            ));
                        }
                        Ok(other)
                    }
                }
            }
            Tok::Ident(s) if is_term_ident(&s) => {
                self.bump();
                self.application(Var::new(&s))
            }
            _ => Err(self.unexpected("a term")),
        }
    }

    fn application(&mut self, head: Var) -> PResult<Term> {
        let t = if *self.peek() == Tok::LBrack {
            self.bump();
            let s = self.shape()?;
            self.expect(Tok::RBrack)?;
            Term::TApp(head, s)
        } else if self.starts_term() {
            if matches!(self.peek(), Tok::LParen)
                && matches!(self.peek_at(1), Tok::Ident(s) if is_term_ident(s))
                && *self.peek_at(2) == Tok::RParen
            {
                self.bump();
                let y = self.var()?;
                self.bump();
                Term::App(head, y)
            } else {
                let y = self.operand("the argument of an application")?;
                Term::App(head, y)
            }
        } else {
            return Ok(Term::Var(head));
        };
        self.no_trailing_operand()?;
        Ok(t)
    }

    fn no_trailing_operand(&self) -> PResult<()> {
        if self.starts_term() || *self.peek() == Tok::LBrack {
            Err(self.err_at(
                self.pos,
                ParseErrorKind::MnfViolation,
                "the head of an application must be a variable".into(),
            ))
        } else {
            Ok(())
        }
    }

    fn finish(&self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }
}

pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(src, 1)?;
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

pub fn parse_type(src: &str) -> Result<Type, ParseError> {
    let mut p = Parser::new(src, 1)?;
    let t = p.ty()?;
    p.finish()?;
    Ok(t)
}

pub fn parse_shape(src: &str) -> Result<Shape, ParseError> {
    let mut p = Parser::new(src, 1)?;
    let s = p.shape()?;
    p.finish()?;
    Ok(s)
}

pub fn parse_capture_set(src: &str) -> Result<CaptureSet, ParseError> {
    let mut p = Parser::new(src, 1)?;
    let c = p.capture_set()?;
    p.finish()?;
    Ok(c)
}

/// One binding per line: `x : T` or `X <: S`. Blank lines and `#` comments
/// are skipped.
pub fn parse_env(src: &str) -> Result<Env, ParseError> {
    let mut env = Env::new();
    for (i, line) in src.lines().enumerate() {
        let mut p = Parser::new(line, i + 1)?;
        if *p.peek() == Tok::Eof {
            continue;
        }
        let binding = match p.peek().clone() {
            Tok::Ident(s) if is_type_ident(&s) => {
                let x = p.tvar()?;
                p.expect(Tok::Sub)?;
                Binding::Type(x, p.shape()?)
            }
            _ => {
                let x = p.var()?;
                p.expect(Tok::Colon)?;
                Binding::Term(x, p.ty()?)
            }
        };
        p.finish()?;
        env.push(binding);
    }
    Ok(env)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Var {
        Var::new(s)
    }

    #[test]
    fn terms() {
        assert_eq!(parse_term("box x").unwrap(), Term::Box(v("x")));
        assert_eq!(
            parse_term("let y = f a in y").unwrap(),
            Term::let_(v("y"), Term::App(v("f"), v("a")), Term::Var(v("y")))
        );
        assert_eq!(
            parse_term("{io, cap} unbox x").unwrap(),
            Term::Unbox(CaptureSet::singleton(v("io")).with_root(true), v("x"))
        );
        assert_eq!(
            parse_term("f [Top]").unwrap(),
            Term::TApp(v("f"), Shape::Top)
        );
        assert_eq!(parse_term("(f) (x)").unwrap(), Term::App(v("f"), v("x")));
        assert_eq!(
            parse_term("let op' = ({io} unbox op) in f op'")
                .unwrap()
                .size(),
            3
        );
        assert!(matches!(
            parse_term("tfun [X <: Top] fun (a: X) a").unwrap(),
            Term::TAbs(..)
        ));
    }

    #[test]
    fn types() {
        let t = parse_type("{io} all (z: Box {x} Top) -> Top").unwrap();
        assert_eq!(t.captures, CaptureSet::singleton(v("io")));
        let Shape::Fun(z, p, r) = t.shape else {
            panic!()
        };
        assert_eq!(z, v("z"));
        assert_eq!(
            p.shape,
            Type::boxed(Type::new(CaptureSet::singleton(v("x")), Shape::Top))
        );
        assert_eq!(*r, Type::top());
        assert_eq!(parse_type("{} Top").unwrap(), parse_type("Top").unwrap());
        assert_eq!(parse_type("(Top)").unwrap(), Type::top());
        assert!(matches!(
            parse_type("all [X <: Top] -> X").unwrap().shape,
            Shape::TFun(..)
        ));
    }

    #[test]
    fn mnf_violations() {
        for src in [
            "f (g x)",
            "box (f x)",
            "(fun (z: Top) z) y",
            "f g x",
            "{io} unbox (let a = b in a)",
        ] {
            let e = parse_term(src).unwrap_err();
            assert_eq!(e.kind, ParseErrorKind::MnfViolation, "{src}: {e}");
        }
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = parse_term("let x = \n  f ) in x").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Syntax);
        assert_eq!((e.line, e.col), (2, 5));
        assert!(parse_type("{X} Top").is_err());
        assert!(parse_term("fun (X: Top) X").is_err());
        assert!(parse_term("x $").is_err());
    }

    #[test]
    fn environments() {
        let env =
            parse_env("# background\nio : {cap} Top\n\nX <: Top\nf : all (z: X) -> Top\n").unwrap();
        assert_eq!(env.len(), 3);
        assert!(env.contains_tvar(&TVar::new("X")));
        let e = parse_env("io : {cap} Top\nf :: Top").unwrap_err();
        assert_eq!(e.line, 2);
    }
}
