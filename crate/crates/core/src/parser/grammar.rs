use crate::syntax::surface::{SurfaceDef, SurfaceTerm};
use crate::syntax::{Label, TypeExpr, Var};

use super::lexer::Tok;
use super::{ParseError, Pos};

const KEYWORDS: &[&str] = &[
    "Top", "Bot", "mu", "all", "Ref", "let", "in", "ref", "nu", "lambda",
];

pub(crate) struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    scope: Vec<Var>,
    /// Cleared inside `{a = ...}` so that `;` separates definitions.
    seq_allowed: bool,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    pub(crate) fn new(toks: Vec<(Tok, Pos)>, scope: Vec<Var>) -> Parser {
        Parser {
            toks,
            at: 0,
            scope,
            seq_allowed: true,
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
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

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(ParseError::Syntax {
            pos: self.pos(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &'static str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.error(&[&format!("`{s}`")])
        }
    }

    fn expect_kw(&mut self, k: &'static str) -> PResult<()> {
        if self.is_kw(k) {
            self.bump();
            Ok(())
        } else {
            self.error(&[&format!("`{k}`")])
        }
    }

    pub(crate) fn expect_eof(&self) -> PResult<()> {
        match self.peek() {
            Tok::Eof => Ok(()),
            _ => self.error(&["end of input"]),
        }
    }

    fn binder(&mut self) -> PResult<Var> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let v = Var::new(s);
                self.bump();
                Ok(v)
            }
            _ => self.error(&["a variable"]),
        }
    }

    fn use_var(&mut self) -> PResult<Var> {
        let pos = self.pos();
        let v = self.binder()?;
        if self.scope.contains(&v) {
            Ok(v)
        } else {
            Err(ParseError::Scope { var: v, pos })
        }
    }

    fn label(&mut self, upper: bool) -> PResult<Label> {
        let what = if upper {
            "a type label"
        } else {
            "a field label"
        };
        match self.peek() {
            Tok::Ident(s)
                if s.starts_with(|c: char| {
                    if upper {
                        c.is_ascii_uppercase()
                    } else {
                        c.is_ascii_lowercase()
                    }
                }) && !KEYWORDS.contains(&s.as_str()) =>
            {
                let l = Label::new(s);
                self.bump();
                Ok(l)
            }
            _ => self.error(&[what]),
        }
    }

    fn peek_label_case(&self) -> Option<bool> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let c = s.chars().next()?;
                if c.is_ascii_uppercase() {
                    Some(true)
                } else if c.is_ascii_lowercase() {
                    Some(false)
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    fn scoped<T>(&mut self, x: &Var, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        self.scope.push(x.clone());
        let r = f(self);
        self.scope.pop();
        r
    }

    // ---- types ----

    pub(crate) fn ty(&mut self) -> PResult<TypeExpr> {
        let mut t = self.ty_atom()?;
        while self.eat_sym("/\\") {
            let u = self.ty_atom()?;
            t = TypeExpr::and(t, u);
        }
        Ok(t)
    }

    fn ty_atom(&mut self) -> PResult<TypeExpr> {
        match self.peek().clone() {
            Tok::Ident(k) if k == "Top" => {
                self.bump();
                Ok(TypeExpr::Top)
            }
            Tok::Ident(k) if k == "Bot" => {
                self.bump();
                Ok(TypeExpr::Bot)
            }
            Tok::Ident(k) if k == "Ref" => {
                self.bump();
                Ok(TypeExpr::reference(self.ty_atom()?))
            }
            Tok::Ident(k) if k == "mu" => {
                self.bump();
                self.expect_sym("(")?;
                let x = self.binder()?;
                self.expect_sym(":")?;
                let body = self.scoped(&x, |p| p.ty())?;
                self.expect_sym(")")?;
                Ok(TypeExpr::rec(x, body))
            }
            Tok::Ident(k) if k == "all" => {
                self.bump();
                self.expect_sym("(")?;
                let x = self.binder()?;
                self.expect_sym(":")?;
                let s = self.ty()?;
                self.expect_sym(")")?;
                let t = self.scoped(&x, |p| p.ty())?;
                Ok(TypeExpr::all(x, s, t))
            }
            Tok::Ident(_) => {
                let x = self.use_var()?;
                self.expect_sym(".")?;
                let a = self.label(true)?;
                Ok(TypeExpr::Sel(x, a))
            }
            Tok::Sym("(") => {
                self.bump();
                let t = self.ty()?;
                self.expect_sym(")")?;
                Ok(t)
            }
            Tok::Sym("{") => {
                self.bump();
                let mut t = self.decl()?;
                while self.eat_sym(";") {
                    t = TypeExpr::and(t, self.decl()?);
                }
                self.expect_sym("}")?;
                Ok(t)
            }
            _ => self.error(&["a type"]),
        }
    }

    fn decl(&mut self) -> PResult<TypeExpr> {
        match self.peek_label_case() {
            Some(false) => {
                let a = self.label(false)?;
                self.expect_sym(":")?;
                Ok(TypeExpr::field(a, self.ty()?))
            }
            Some(true) => {
                let a = self.label(true)?;
                if self.eat_sym("<:") {
                    return Ok(TypeExpr::member(a, TypeExpr::Bot, self.ty()?));
                }
                if !self.eat_sym(":") {
                    if self.is_sym(";") || self.is_sym("}") {
                        return Ok(TypeExpr::member(a, TypeExpr::Bot, TypeExpr::Top));
                    }
                    return self.error(&["`:`", "`<:`", "`}`"]);
                }
                let lo = self.ty()?;
                if self.eat_sym("..") {
                    let hi = self.ty()?;
                    Ok(TypeExpr::member(a, lo, hi))
                } else {
                    Ok(TypeExpr::member(a, lo.clone(), lo))
                }
            }
            None => self.error(&["a field or type label"]),
        }
    }

    // ---- terms ----

    pub(crate) fn term(&mut self) -> PResult<SurfaceTerm> {
        let t = self.asgn()?;
        if self.seq_allowed && self.eat_sym(";") {
            let u = self.term()?;
            return Ok(SurfaceTerm::Seq(Box::new(t), Box::new(u)));
        }
        Ok(t)
    }

    fn asgn(&mut self) -> PResult<SurfaceTerm> {
        let t = self.app()?;
        if self.eat_sym(":=") {
            let u = self.asgn()?;
            return Ok(SurfaceTerm::Asgn(Box::new(t), Box::new(u)));
        }
        Ok(t)
    }

    fn starts_operand(&self) -> bool {
        match self.peek() {
            Tok::Ident(k) => {
                !KEYWORDS.contains(&k.as_str())
                    || matches!(k.as_str(), "let" | "ref" | "nu" | "lambda")
            }
            Tok::Sym(s) => matches!(*s, "(" | "!"),
            Tok::Eof => false,
        }
    }

    fn app(&mut self) -> PResult<SurfaceTerm> {
        let mut t = self.postfix()?;
        while self.starts_operand() {
            let u = self.postfix()?;
            t = SurfaceTerm::App(Box::new(t), Box::new(u));
        }
        Ok(t)
    }

    fn postfix(&mut self) -> PResult<SurfaceTerm> {
        let mut t = self.unary()?;
        while self.eat_sym(".") {
            let a = self.label(false)?;
            t = SurfaceTerm::Sel(Box::new(t), a);
        }
        Ok(t)
    }

    fn unary(&mut self) -> PResult<SurfaceTerm> {
        if self.eat_sym("!") {
            return Ok(SurfaceTerm::Deref(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<SurfaceTerm> {
        match self.peek().clone() {
            Tok::Sym("(") => {
                self.bump();
                let saved = std::mem::replace(&mut self.seq_allowed, true);
                let t = self.term();
                self.seq_allowed = saved;
                let t = t?;
                self.expect_sym(")")?;
                Ok(t)
            }
            Tok::Ident(k) if k == "let" => {
                self.bump();
                let x = self.binder()?;
                self.expect_sym("=")?;
                let t = self.term()?;
                self.expect_kw("in")?;
                let u = self.scoped(&x, |p| p.term())?;
                Ok(SurfaceTerm::Let(x, Box::new(t), Box::new(u)))
            }
            Tok::Ident(k) if k == "lambda" => {
                self.bump();
                self.expect_sym("(")?;
                let x = self.binder()?;
                self.expect_sym(":")?;
                let ty = self.ty()?;
                self.expect_sym(")")?;
                let body = self.scoped(&x, |p| p.term())?;
                Ok(SurfaceTerm::Lam(x, ty, Box::new(body)))
            }
            Tok::Ident(k) if k == "ref" => {
                self.bump();
                let t = self.postfix()?;
                let ty = self.ty()?;
                Ok(SurfaceTerm::Ref(Box::new(t), ty))
            }
            Tok::Ident(k) if k == "nu" => {
                self.bump();
                self.expect_sym("(")?;
                let x = self.binder()?;
                self.scoped(&x.clone(), |p| {
                    if p.eat_sym(":") {
                        let ty = p.ty()?;
                        p.expect_sym(")")?;
                        let d = p.defs()?;
                        Ok(SurfaceTerm::Obj(x, ty, d))
                    } else {
                        p.expect_sym(")")?;
                        let d = p.defs()?;
                        p.expect_sym(":")?;
                        let ty = p.ty()?;
                        Ok(SurfaceTerm::Obj(x, ty, d))
                    }
                })
            }
            Tok::Ident(k) if KEYWORDS.contains(&k.as_str()) => self.error(&["a term"]),
            Tok::Ident(_) => Ok(SurfaceTerm::Var(self.use_var()?)),
            _ => self.error(&["a term"]),
        }
    }

    fn defs(&mut self) -> PResult<SurfaceDef> {
        let mut d = self.def_group()?;
        while self.eat_sym("/\\") {
            let e = self.def_group()?;
            d = SurfaceDef::And(Box::new(d), Box::new(e));
        }
        Ok(d)
    }

    fn def_group(&mut self) -> PResult<SurfaceDef> {
        self.expect_sym("{")?;
        let mut d = self.def()?;
        while self.eat_sym(";") {
            let e = self.def()?;
            d = SurfaceDef::And(Box::new(d), Box::new(e));
        }
        self.expect_sym("}")?;
        Ok(d)
    }

    fn def(&mut self) -> PResult<SurfaceDef> {
        match self.peek_label_case() {
            Some(false) => {
                let a = self.label(false)?;
                self.expect_sym("=")?;
                let saved = std::mem::replace(&mut self.seq_allowed, false);
                let t = self.term();
                self.seq_allowed = saved;
                Ok(SurfaceDef::Field(a, Box::new(t?)))
            }
            Some(true) => {
                let a = self.label(true)?;
                self.expect_sym("=")?;
                Ok(SurfaceDef::Type(a, self.ty()?))
            }
            None => self.error(&["a field or type label"]),
        }
    }
}
