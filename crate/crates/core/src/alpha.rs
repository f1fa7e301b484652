//! Alpha-equivalence.

use std::collections::BTreeSet;

use crate::syntax::{CaptureSet, Shape, TVar, Term, Type, Var};

pub trait AlphaEq {
    fn alpha_eq(&self, other: &Self) -> bool;
}

impl AlphaEq for Type {
    fn alpha_eq(&self, other: &Self) -> bool {
        Scopes::default().ty(self, other)
    }
}

impl AlphaEq for Shape {
    fn alpha_eq(&self, other: &Self) -> bool {
        Scopes::default().shape(self, other)
    }
}

impl AlphaEq for Term {
    fn alpha_eq(&self, other: &Self) -> bool {
        Scopes::default().term(self, other)
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Slot {
    Bound(usize),
    Free(Var),
}

/// Paired binder stacks. A variable is bound at level `i` on both sides or
/// free and identical.
#[derive(Default)]
struct Scopes {
    vars: Vec<(Var, Var)>,
    tvars: Vec<(TVar, TVar)>,
}

impl Scopes {
    fn left(&self, x: &Var) -> Slot {
        match self.vars.iter().rposition(|(l, _)| l == x) {
            Some(i) => Slot::Bound(i),
            None => Slot::Free(x.clone()),
        }
    }

    fn right(&self, x: &Var) -> Slot {
        match self.vars.iter().rposition(|(_, r)| r == x) {
            Some(i) => Slot::Bound(i),
            None => Slot::Free(x.clone()),
        }
    }

    fn var(&self, a: &Var, b: &Var) -> bool {
        self.left(a) == self.right(b)
    }

    fn tvar(&self, a: &TVar, b: &TVar) -> bool {
        let l = self.tvars.iter().rposition(|(l, _)| l == a);
        let r = self.tvars.iter().rposition(|(_, r)| r == b);
        match (l, r) {
            (Some(i), Some(j)) => i == j,
            (None, None) => a == b,
            _ => false,
        }
    }

    fn set(&self, a: &CaptureSet, b: &CaptureSet) -> bool {
        if a.has_root() != b.has_root() {
            return false;
        }
        let l: BTreeSet<Slot> = a.vars().map(|x| self.left(x)).collect();
        let r: BTreeSet<Slot> = b.vars().map(|x| self.right(x)).collect();
        l == r
    }

    fn ty(&mut self, a: &Type, b: &Type) -> bool {
        self.set(&a.captures, &b.captures) && self.shape(&a.shape, &b.shape)
    }

    fn under_var<R>(&mut self, a: &Var, b: &Var, f: impl FnOnce(&mut Self) -> R) -> R {
        self.vars.push((a.clone(), b.clone()));
        let out = f(self);
        self.vars.pop();
        out
    }

    fn under_tvar<R>(&mut self, a: &TVar, b: &TVar, f: impl FnOnce(&mut Self) -> R) -> R {
        self.tvars.push((a.clone(), b.clone()));
        let out = f(self);
        self.tvars.pop();
        out
    }

    fn shape(&mut self, a: &Shape, b: &Shape) -> bool {
        match (a, b) {
            (Shape::TVar(x), Shape::TVar(y)) => self.tvar(x, y),
            (Shape::Top, Shape::Top) => true,
            (Shape::Boxed(x), Shape::Boxed(y)) => self.ty(x, y),
            (Shape::Fun(x, p, r), Shape::Fun(y, q, s)) => {
                self.ty(p, q) && self.under_var(x, y, |sc| sc.ty(r, s))
            }
            (Shape::TFun(x, p, r), Shape::TFun(y, q, s)) => {
                self.shape(p, q) && self.under_tvar(x, y, |sc| sc.ty(r, s))
            }
            _ => false,
        }
    }

    fn term(&mut self, a: &Term, b: &Term) -> bool {
        match (a, b) {
            (Term::Var(x), Term::Var(y)) | (Term::Box(x), Term::Box(y)) => self.var(x, y),
            (Term::App(f, x), Term::App(g, y)) => self.var(f, g) && self.var(x, y),
            (Term::TApp(f, s), Term::TApp(g, t)) => self.var(f, g) && self.shape(s, t),
            (Term::Unbox(c, x), Term::Unbox(d, y)) => self.set(c, d) && self.var(x, y),
            (Term::Abs(x, p, s), Term::Abs(y, q, t)) => {
                self.ty(p, q) && self.under_var(x, y, |sc| sc.term(s, t))
            }
            (Term::TAbs(x, p, s), Term::TAbs(y, q, t)) => {
                self.shape(p, q) && self.under_tvar(x, y, |sc| sc.term(s, t))
            }
            (Term::Let(x, s1, t1), Term::Let(y, s2, t2)) => {
                self.term(s1, s2) && self.under_var(x, y, |sc| sc.term(t1, t2))
            }
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_term, parse_type};

    fn ty(s: &str) -> Type {
        parse_type(s).unwrap()
    }

    fn tm(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    #[test]
    fn binders_are_interchangeable() {
        assert!(ty("all (x: Top) -> {x} Top").alpha_eq(&ty("all (y: Top) -> {y} Top")));
        assert!(ty("all [X <: Top] -> X").alpha_eq(&ty("all [Y <: Top] -> Y")));
        assert!(tm("let a = f b in a").alpha_eq(&tm("let c = f b in c")));
        assert!(tm("fun (a: Top) f a").alpha_eq(&tm("fun (q: Top) f q")));
    }

    #[test]
    fn free_names_matter() {
        assert!(!ty("{x} Top").alpha_eq(&ty("{y} Top")));
        assert!(!ty("all (x: Top) -> {x} Top").alpha_eq(&ty("all (y: Top) -> {x} Top")));
        assert!(!tm("let a = f b in a").alpha_eq(&tm("let a = f b in b")));
        assert!(!ty("all (x: Top) -> {x, cap} Top").alpha_eq(&ty("all (y: Top) -> {y} Top")));
    }

    #[test]
    fn inner_binder_shadows() {
        assert!(ty("all (x: Top) -> all (x: Top) -> {x} Top")
            .alpha_eq(&ty("all (a: Top) -> all (b: Top) -> {b} Top")));
        assert!(!ty("all (x: Top) -> all (x: Top) -> {x} Top")
            .alpha_eq(&ty("all (a: Top) -> all (b: Top) -> {a} Top")));
    }
}
