//! Printing in the surface syntax.
//!
//! Bound variables are shown under their source spelling, primed as needed
//! to stay distinct from every free name and every enclosing binder. Free
//! variables carrying a disambiguator are shown as `name'id`.

use std::collections::BTreeSet;
use std::fmt;

use crate::syntax::{Binding, CaptureSet, Env, Shape, TVar, Term, Type, Var};
use crate::vars::{fv_all, fv_shape, fv_type, FreeVars};

fn free_name(name: &str, id: u32) -> String {
    if id == 0 {
        name.to_string()
    } else {
        format!("{name}'{id}")
    }
}

struct Printer {
    taken: BTreeSet<String>,
    vars: Vec<(Var, String)>,
    tvars: Vec<(TVar, String)>,
    out: String,
}

impl Printer {
    fn new(free: &FreeVars) -> Self {
        let mut taken = BTreeSet::new();
        taken.extend(free.vars.iter().map(|v| free_name(v.name(), v.id())));
        taken.extend(free.tvars.iter().map(|v| free_name(v.name(), v.id())));
        Printer {
            taken,
            vars: Vec::new(),
            tvars: Vec::new(),
            out: String::new(),
        }
    }

    fn pick(&mut self, base: &str) -> String {
        let mut name = base.to_string();
        while self.taken.contains(&name) {
            name.push('\'');
        }
        self.taken.insert(name.clone());
        name
    }

    fn bind_var(&mut self, x: &Var) -> String {
        let name = self.pick(x.name());
        self.vars.push((x.clone(), name.clone()));
        name
    }

    fn unbind_var(&mut self) {
        if let Some((_, name)) = self.vars.pop() {
            self.taken.remove(&name);
        }
    }

    fn bind_tvar(&mut self, x: &TVar) -> String {
        let name = self.pick(x.name());
        self.tvars.push((x.clone(), name.clone()));
        name
    }

    fn unbind_tvar(&mut self) {
        if let Some((_, name)) = self.tvars.pop() {
            self.taken.remove(&name);
        }
    }

    fn var_name(&self, x: &Var) -> String {
        match self.vars.iter().rev().find(|(v, _)| v == x) {
            Some((_, n)) => n.clone(),
            None => free_name(x.name(), x.id()),
        }
    }

    fn tvar_name(&self, x: &TVar) -> String {
        match self.tvars.iter().rev().find(|(v, _)| v == x) {
            Some((_, n)) => n.clone(),
            None => free_name(x.name(), x.id()),
        }
    }

    fn set(&mut self, c: &CaptureSet) {
        let mut parts: Vec<String> = c.vars().map(|x| self.var_name(x)).collect();
        parts.sort();
        if c.has_root() {
            parts.push("cap".into());
        }
        self.out.push('{');
        self.out.push_str(&parts.join(", "));
        self.out.push('}');
    }

    fn ty(&mut self, t: &Type) {
        if !t.captures.is_empty() {
            self.set(&t.captures);
            self.out.push(' ');
        }
        self.shape(&t.shape);
    }

    fn shape(&mut self, s: &Shape) {
        match s {
            Shape::TVar(x) => {
                let n = self.tvar_name(x);
                self.out.push_str(&n);
            }
            Shape::Top => self.out.push_str("Top"),
            Shape::Boxed(t) => {
                self.out.push_str("Box ");
                self.ty(t);
            }
            Shape::Fun(x, p, r) => {
                self.out.push_str("all (");
                let name = self.pick_preview(x.name());
                self.out.push_str(&name);
                self.out.push_str(": ");
                self.ty(p);
                self.out.push_str(") -> ");
                self.bind_var(x);
                self.ty(r);
                self.unbind_var();
            }
            Shape::TFun(x, b, r) => {
                self.out.push_str("all [");
                let name = self.pick_preview(x.name());
                self.out.push_str(&name);
                self.out.push_str(" <: ");
                self.shape(b);
                self.out.push_str("] -> ");
                self.bind_tvar(x);
                self.ty(r);
                self.unbind_tvar();
            }
        }
    }

    /// The name `pick` would return, without reserving it. Binder
    /// annotations are printed before the binder enters scope.
    fn pick_preview(&self, base: &str) -> String {
        let mut name = base.to_string();
        while self.taken.contains(&name) {
            name.push('\'');
        }
        name
    }

    fn term(&mut self, t: &Term) {
        match t {
            Term::Var(x) => {
                let n = self.var_name(x);
                self.out.push_str(&n);
            }
            Term::Box(x) => {
                let n = self.var_name(x);
                self.out.push_str("box ");
                self.out.push_str(&n);
            }
            Term::Unbox(c, x) => {
                self.set(c);
                let n = self.var_name(x);
                self.out.push_str(" unbox ");
                self.out.push_str(&n);
            }
            Term::App(f, x) => {
                let (f, x) = (self.var_name(f), self.var_name(x));
                self.out.push_str(&f);
                self.out.push(' ');
                self.out.push_str(&x);
            }
            Term::TApp(f, s) => {
                let f = self.var_name(f);
                self.out.push_str(&f);
                self.out.push_str(" [");
                self.shape(s);
                self.out.push(']');
            }
            Term::Abs(x, ty, body) => {
                self.out.push_str("fun (");
                let name = self.pick_preview(x.name());
                self.out.push_str(&name);
                self.out.push_str(": ");
                self.ty(ty);
                self.out.push_str(") ");
                self.bind_var(x);
                self.term(body);
                self.unbind_var();
            }
            Term::TAbs(x, s, body) => {
                self.out.push_str("tfun [");
                let name = self.pick_preview(x.name());
                self.out.push_str(&name);
                self.out.push_str(" <: ");
                self.shape(s);
                self.out.push_str("] ");
                self.bind_tvar(x);
                self.term(body);
                self.unbind_tvar();
            }
            Term::Let(x, s, body) => {
                self.out.push_str("let ");
                self.out.push_str(&self.pick_preview(x.name()));
                self.out.push_str(" = ");
                let atomic = matches!(**s, Term::Var(_));
                if !atomic {
                    self.out.push('(');
                }
                self.term(s);
                if !atomic {
                    self.out.push(')');
                }
                self.out.push_str(" in ");
                self.bind_var(x);
                self.term(body);
                self.unbind_var();
            }
        }
    }
}

pub fn show_type(t: &Type) -> String {
    let mut p = Printer::new(&fv_type(t));
    p.ty(t);
    p.out
}

pub fn show_shape(s: &Shape) -> String {
    let mut p = Printer::new(&fv_shape(s));
    p.shape(s);
    p.out
}

pub fn show_term(t: &Term) -> String {
    let mut p = Printer::new(&fv_all(t));
    p.term(t);
    p.out
}

pub fn show_set(c: &CaptureSet) -> String {
    let mut p = Printer::new(&FreeVars::default());
    p.set(c);
    p.out
}

pub fn show_binding(b: &Binding) -> String {
    match b {
        Binding::Term(x, t) => format!("{} : {}", free_name(x.name(), x.id()), show_type(t)),
        Binding::Type(x, s) => format!("{} <: {}", free_name(x.name(), x.id()), show_shape(s)),
    }
}

/// One binding per line, in the format [`crate::parse::parse_env`] reads.
pub fn show_env(env: &Env) -> String {
    env.bindings()
        .iter()
        .map(|b| show_binding(b) + "\n")
        .collect()
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&show_type(self))
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&show_shape(self))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&show_term(self))
    }
}

impl fmt::Display for CaptureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&show_set(self))
    }
}

impl fmt::Display for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&show_env(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::AlphaEq;
    use crate::parse::{parse_env, parse_term, parse_type};

    #[test]
    fn round_trips() {
        for src in [
            "{io} all (z: Box {x} Top) -> Top",
            "all [X <: all (a: Top) -> Top] -> {cap} X",
            "Box {a, b, cap} Top",
        ] {
            let t = parse_type(src).unwrap();
            assert_eq!(show_type(&t), src);
        }
        for src in [
            "fun (op: Box {io} all (u: Top) -> Top) let op' = ({io} unbox op) in f op'",
            "tfun [X <: Top] let y = (f [X]) in box y",
            "let k = x in k",
        ] {
            let t = parse_term(src).unwrap();
            assert_eq!(show_term(&t), src);
        }
    }

    #[test]
    fn fresh_binders_get_readable_names() {
        let t = Term::let_(
            Var::with_id("y", 4),
            Term::App(Var::new("f"), Var::new("y")),
            Term::Box(Var::with_id("y", 4)),
        );
        let shown = show_term(&t);
        assert_eq!(shown, "let y' = (f y) in box y'");
        assert!(parse_term(&shown)
            .unwrap()
            .alpha_eq(&parse_term("let q = (f y) in box q").unwrap()));
    }

    #[test]
    fn free_disambiguated_names() {
        let t = Type::new(CaptureSet::singleton(Var::with_id("x", 3)), Shape::Top);
        assert_eq!(show_type(&t), "{x'3} Top");
    }

    #[test]
    fn sibling_binders_reuse_names() {
        let t = parse_type("all (a: all (z: Top) -> Top) -> all (z: Top) -> Top").unwrap();
        assert_eq!(
            show_type(&t),
            "all (a: all (z: Top) -> Top) -> all (z: Top) -> Top"
        );
    }

    #[test]
    fn environments() {
        let src = "io : {cap} Top\nX <: Top\nf : all (z: X) -> {io} Top\n";
        assert_eq!(show_env(&parse_env(src).unwrap()), src);
    }
}
