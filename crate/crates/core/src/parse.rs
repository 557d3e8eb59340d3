//! Recursive-descent parser for the concrete syntax.
//!
//! ```text
//! term  ::= unit (';' term)?
//! unit  ::= 'skip' | var ':=' expr | 'while' expr '{' term '}'
//!         | 'obs' '(' term ')' | 'sandbox' '{' var ':=' expr '}' | '(' term ')'
//! ctx   ::= 'hole' | 'obs' '(' ctx ')'
//! expr  ::= mul (('+' | '-') mul)*
//! mul   ::= unary ('*' unary)*
//! unary ::= 'not' unary | num | var | '(' expr ')'
//! store ::= '{'? var '=' num (',' var '=' num)* '}'?
//! ```

use crate::enumerate;
use crate::error::{Error, Result};
use crate::syntax::{BinOp, Ctx, Expr, Term};
use crate::universe::{Lang, Store, Universe, Value};
use crate::verdict::{Verdict, Witness};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(u64),
    Assign,
    Semi,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Plus,
    Minus,
    Star,
    Comma,
    Eq,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(n) => format!("`{n}`"),
            Tok::Assign => "`:=`".into(),
            Tok::Semi => "`;`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eq => "`=`".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b':' if bytes.get(i + 1) == Some(&b'=') => {
                i += 2;
                Tok::Assign
            }
            b';' => single(&mut i, Tok::Semi),
            b'(' => single(&mut i, Tok::LParen),
            b')' => single(&mut i, Tok::RParen),
            b'{' => single(&mut i, Tok::LBrace),
            b'}' => single(&mut i, Tok::RBrace),
            b'+' => single(&mut i, Tok::Plus),
            b'-' => single(&mut i, Tok::Minus),
            b'*' => single(&mut i, Tok::Star),
            b',' => single(&mut i, Tok::Comma),
            b'=' => single(&mut i, Tok::Eq),
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n = text[start..i].parse::<u64>().map_err(|_| Error::Syntax {
                    pos: start,
                    msg: "numeric literal out of range".into(),
                })?;
                Tok::Num(n)
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                Tok::Ident(text[start..i].to_string())
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(Error::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{ch}`"),
                });
            }
        };
        toks.push((start, tok));
    }
    Ok(toks)
}

fn single(i: &mut usize, t: Tok) -> Tok {
    *i += 1;
    t
}

struct Parser<'u> {
    u: &'u Universe,
    lang: Lang,
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl<'u> Parser<'u> {
    fn new(u: &'u Universe, lang: Lang, text: &str) -> Result<Self> {
        Ok(Parser {
            u,
            lang,
            toks: lex(text)?,
            pos: 0,
            end: text.len(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            pos: self.offset(),
            msg: msg.into(),
        })
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T> {
        match self.peek() {
            Some(t) => self.err(format!("expected {wanted}, found {}", t.describe())),
            None => self.err(format!("expected {wanted}, found end of input")),
        }
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.unexpected(&t.describe())
        }
    }

    fn keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn finish(&self) -> Result<()> {
        if self.pos < self.toks.len() {
            return self.unexpected("end of input");
        }
        Ok(())
    }

    fn var(&mut self) -> Result<crate::universe::VarId> {
        match self.peek().cloned() {
            Some(Tok::Ident(name)) if !Universe::is_keyword(&name) => {
                self.pos += 1;
                self.u.var(&name).ok_or(Error::UndeclaredVariable(name))
            }
            _ => self.unexpected("a variable"),
        }
    }

    fn literal(&mut self, n: u64) -> Result<Value> {
        if n > self.u.vmax() as u64 {
            return Err(Error::LiteralTooLarge {
                value: n,
                vmax: self.u.vmax(),
            });
        }
        Ok(n as Value)
    }

    fn term(&mut self) -> Result<Term> {
        let p = self.unit()?;
        if self.eat(&Tok::Semi) {
            let q = self.term()?;
            Ok(Term::seq(p, q))
        } else {
            Ok(p)
        }
    }

    fn unit(&mut self) -> Result<Term> {
        if self.keyword("skip") {
            self.pos += 1;
            return Ok(Term::skip());
        }
        if self.keyword("while") {
            self.pos += 1;
            let e = self.expr()?;
            self.expect(Tok::LBrace)?;
            let body = self.term()?;
            self.expect(Tok::RBrace)?;
            return Ok(Term::while_(e, body));
        }
        if self.keyword("obs") {
            if self.lang == Lang::Source {
                return Err(Error::TargetOnly("obs"));
            }
            self.pos += 1;
            self.expect(Tok::LParen)?;
            let p = self.term()?;
            self.expect(Tok::RParen)?;
            return Ok(Term::obs(p));
        }
        if self.keyword("sandbox") {
            if self.lang == Lang::Source {
                return Err(Error::TargetOnly("sandbox"));
            }
            self.pos += 1;
            self.expect(Tok::LBrace)?;
            let v = self.var()?;
            self.expect(Tok::Assign)?;
            let e = self.expr()?;
            self.expect(Tok::RBrace)?;
            return Ok(Term::sandbox(Term::assign(v, e)));
        }
        if self.eat(&Tok::LParen) {
            let p = self.term()?;
            self.expect(Tok::RParen)?;
            return Ok(p);
        }
        if matches!(self.peek(), Some(Tok::Ident(_))) {
            let v = self.var()?;
            self.expect(Tok::Assign)?;
            let e = self.expr()?;
            return Ok(Term::assign(v, e));
        }
        self.unexpected("a statement")
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.mul()?;
        loop {
            let op = if self.eat(&Tok::Plus) {
                BinOp::Add
            } else if self.eat(&Tok::Minus) {
                BinOp::Monus
            } else {
                return Ok(acc);
            };
            acc = Expr::bin(op, acc, self.mul()?);
        }
    }

    fn mul(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        while self.eat(&Tok::Star) {
            acc = Expr::bin(BinOp::Mul, acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.keyword("not") {
            self.pos += 1;
            return Ok(Expr::not(self.unary()?));
        }
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(Expr::Lit(self.literal(n)?))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(_)) => Ok(Expr::Var(self.var()?)),
            _ => self.unexpected("an expression"),
        }
    }

    fn ctx(&mut self) -> Result<Ctx> {
        if self.keyword("hole") {
            self.pos += 1;
            return Ok(Ctx::Hole);
        }
        if self.keyword("obs") {
            if self.lang == Lang::Source {
                return Err(Error::TargetOnly("obs"));
            }
            self.pos += 1;
            self.expect(Tok::LParen)?;
            let c = self.ctx()?;
            self.expect(Tok::RParen)?;
            return Ok(Ctx::Obs(Box::new(c)));
        }
        self.unexpected("`hole` or `obs(`")
    }

    fn store(&mut self) -> Result<Store> {
        let braced = self.eat(&Tok::LBrace);
        let mut values: Vec<Option<Value>> = vec![None; self.u.vars().len()];
        loop {
            let at = self.offset();
            let v = self.var()?;
            self.expect(Tok::Eq)?;
            let n = match self.bump() {
                Some(Tok::Num(n)) => n,
                _ => {
                    self.pos -= 1;
                    return self.unexpected("a number");
                }
            };
            if n > self.u.vmax() as u64 {
                return Err(Error::LiteralTooLarge {
                    value: n,
                    vmax: self.u.vmax(),
                });
            }
            if values[v.index()].replace(n as Value).is_some() {
                return Err(Error::Syntax {
                    pos: at,
                    msg: format!("`{}` given twice", self.u.var_name(v)),
                });
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        if braced {
            self.expect(Tok::RBrace)?;
        }
        let mut full = Vec::with_capacity(values.len());
        for (i, x) in values.into_iter().enumerate() {
            match x {
                Some(x) => full.push(x),
                None => {
                    return Err(Error::InvalidStore(format!(
                        "missing variable `{}`",
                        self.u.vars()[i].name
                    )))
                }
            }
        }
        Ok(self.u.encode(&full))
    }
}

pub fn parse_term(u: &Universe, lang: Lang, text: &str) -> Result<Term> {
    let mut p = Parser::new(u, lang, text)?;
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

pub fn parse_ctx(u: &Universe, lang: Lang, text: &str) -> Result<Ctx> {
    let mut p = Parser::new(u, lang, text)?;
    let c = p.ctx()?;
    p.finish()?;
    Ok(c)
}

pub fn parse_expr(u: &Universe, text: &str) -> Result<Expr> {
    let mut p = Parser::new(u, Lang::Source, text)?;
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

pub fn parse_store(u: &Universe, text: &str) -> Result<Store> {
    let mut p = Parser::new(u, Lang::Source, text)?;
    let s = p.store()?;
    p.finish()?;
    Ok(s)
}

/// `parse(render(x)) = x` for every enumerated term and context of both
/// languages, every enumerated expression and every store.
pub fn check_roundtrip(u: &Universe) -> Result<Verdict> {
    let mut checked = 0;
    let fail = |what: &str, text: String, checked: u64| {
        Verdict::fail(Witness::note(format!("{what} does not round-trip: {text}")), checked)
    };
    for lang in [Lang::Source, Lang::Target] {
        for p in enumerate::terms(u, lang)? {
            checked += 1;
            let text = p.render(u);
            if parse_term(u, lang, &text).ok().as_ref() != Some(&p) {
                let mut v = fail("term", text, checked);
                if let Some(w) = v.witness.as_mut() {
                    w.lang = Some(lang);
                    w.program = Some(p);
                }
                return Ok(v);
            }
        }
        for c in enumerate::contexts(u, lang)? {
            checked += 1;
            let text = c.render();
            if parse_ctx(u, lang, &text).ok().as_ref() != Some(&c) {
                return Ok(fail("context", text, checked));
            }
        }
    }
    for e in enumerate::term_exprs(u) {
        checked += 1;
        let text = e.render(u);
        if parse_expr(u, &text).ok().as_ref() != Some(&e) {
            return Ok(fail("expression", text, checked));
        }
    }
    for s in u.stores() {
        checked += 1;
        let text = u.show_store(s);
        if parse_store(u, &text).ok() != Some(s) {
            return Ok(fail("store", text, checked));
        }
    }
    Ok(Verdict::pass(checked))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Layer;
    use crate::universe::Level;

    fn u() -> Universe {
        Universe::fixture()
    }

    #[test]
    fn assignment() {
        let u = u();
        let t = parse_term(&u, Lang::Source, "h := 42").unwrap();
        assert_eq!(t, Term::assign(u.var("h").unwrap(), Expr::Lit(42)));
    }

    #[test]
    fn observer_context() {
        let u = u();
        assert_eq!(
            parse_ctx(&u, Lang::Target, "obs(hole)").unwrap(),
            Ctx::Obs(Box::new(Ctx::Hole))
        );
        assert_eq!(parse_ctx(&u, Lang::Source, "hole").unwrap(), Ctx::Hole);
        assert_eq!(
            parse_ctx(&u, Lang::Source, "obs(hole)"),
            Err(Error::TargetOnly("obs"))
        );
    }

    #[test]
    fn target_constructs_rejected_in_source() {
        let u = u();
        assert_eq!(
            parse_term(&u, Lang::Source, "obs(h := 1)"),
            Err(Error::TargetOnly("obs"))
        );
        assert_eq!(
            parse_term(&u, Lang::Source, "sandbox{ h := 1 }"),
            Err(Error::TargetOnly("sandbox"))
        );
    }

    #[test]
    fn errors() {
        let u = u();
        assert!(matches!(
            parse_term(&u, Lang::Source, "x := 1"),
            Err(Error::UndeclaredVariable(ref v)) if v == "x"
        ));
        assert!(matches!(
            parse_term(&u, Lang::Source, "h := 64"),
            Err(Error::LiteralTooLarge { value: 64, .. })
        ));
        assert!(matches!(
            parse_term(&u, Lang::Source, "h := "),
            Err(Error::Syntax { pos: 5, .. })
        ));
        assert!(matches!(
            parse_term(&u, Lang::Source, "skip skip"),
            Err(Error::Syntax { pos: 5, .. })
        ));
        assert!(matches!(
            parse_term(&u, Lang::Source, "h := 1 $"),
            Err(Error::Syntax { pos: 7, .. })
        ));
    }

    #[test]
    fn seq_is_right_associative() {
        let u = u();
        let t = parse_term(&u, Lang::Source, "skip ; skip ; skip").unwrap();
        match t.layer() {
            Layer::Seq(p, q) => {
                assert_eq!(*p, Term::skip());
                assert!(matches!(q.layer(), Layer::Seq(..)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn expression_precedence() {
        let u = u();
        let e = parse_expr(&u, "1 + 2 * 3 - not h").unwrap();
        assert_eq!(e.render(&u), "1 + 2 * 3 - not h");
        let s = u.store_of(&[("h", 0), ("l", 0)]).unwrap();
        assert_eq!(e.eval(&u, s), 6);
        let e = parse_expr(&u, "(1 + 2) * 3").unwrap();
        assert_eq!(e.eval(&u, s), 9);
    }

    #[test]
    fn stores() {
        let u = u();
        let s = parse_store(&u, "h=1,l=0").unwrap();
        assert_eq!(s, u.store_of(&[("h", 1), ("l", 0)]).unwrap());
        assert_eq!(parse_store(&u, "{l=0, h=1}").unwrap(), s);
        assert!(parse_store(&u, "h=1").is_err());
        assert!(parse_store(&u, "h=1,h=2,l=0").is_err());
        assert!(parse_store(&u, "h=99,l=0").is_err());
    }

    #[test]
    fn sandbox_and_while() {
        let u = u();
        let t = parse_term(&u, Lang::Target, "while l { sandbox{ h := h + 1 } ; obs(skip) }").unwrap();
        assert_eq!(t.render(&u), "while l { sandbox{ h := h + 1 } ; obs(skip) }");
    }
    #[test]
    fn roundtrip_on_a_small_universe() {
        let u = Universe::builder()
            .var("h", Level::High)
            .var("l", Level::Low)
            .vmax(2)
            .literals([0, 1, 2])
            .term_depth(3)
            .build()
            .unwrap();
        let v = check_roundtrip(&u).unwrap();
        assert!(v.holds, "{:?}", v.witness);
    }
}
