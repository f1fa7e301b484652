//! Capture-avoiding substitution.

use std::collections::BTreeSet;

use crate::syntax::{CaptureSet, NameSupply, Names, Shape, TVar, Term, Type, Var};
use crate::vars::fv_shape;

/// A single-variable substitution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Subst {
    /// `[x := y]`: renames term positions and capture sets alike.
    Var(Var, Var),
    /// `[x := C]`: splices a capture set; only capture sets are affected.
    Set(Var, CaptureSet),
    /// `[X := S]`
    TVar(TVar, Shape),
}

impl Names for Subst {
    fn max_id(&self) -> u32 {
        match self {
            Subst::Var(x, y) => x.max_id().max(y.max_id()),
            Subst::Set(x, c) => x.max_id().max(c.max_id()),
            Subst::TVar(x, s) => x.max_id().max(s.max_id()),
        }
    }
}

struct Range {
    vars: BTreeSet<Var>,
    tvars: BTreeSet<TVar>,
}

impl Subst {
    fn range(&self) -> Range {
        match self {
            Subst::Var(_, y) => Range {
                vars: [y.clone()].into_iter().collect(),
                tvars: BTreeSet::new(),
            },
            Subst::Set(_, c) => Range {
                vars: c.vars().cloned().collect(),
                tvars: BTreeSet::new(),
            },
            Subst::TVar(_, s) => {
                let f = fv_shape(s);
                Range {
                    vars: f.vars,
                    tvars: f.tvars,
                }
            }
        }
    }

    fn shadows_var(&self, b: &Var) -> bool {
        matches!(self, Subst::Var(x, _) | Subst::Set(x, _) if x == b)
    }

    fn shadows_tvar(&self, b: &TVar) -> bool {
        matches!(self, Subst::TVar(x, _) if x == b)
    }

    pub fn set(&self, c: &CaptureSet) -> CaptureSet {
        match self {
            Subst::Var(x, y) => c.rename(x, y),
            Subst::Set(x, d) => c.splice(x, d),
            Subst::TVar(..) => c.clone(),
        }
    }

    fn var(&self, v: &Var) -> Var {
        match self {
            Subst::Var(x, y) if x == v => y.clone(),
            _ => v.clone(),
        }
    }

    pub fn type_(&self, t: &Type, names: &mut NameSupply) -> Type {
        Applier::new(self, names).ty(t)
    }

    pub fn shape(&self, s: &Shape, names: &mut NameSupply) -> Shape {
        Applier::new(self, names).shape(s)
    }

    pub fn term(&self, t: &Term, names: &mut NameSupply) -> Term {
        Applier::new(self, names).term(t)
    }
}

struct Applier<'a> {
    subst: &'a Subst,
    range: Range,
    names: &'a mut NameSupply,
}

impl<'a> Applier<'a> {
    fn new(subst: &'a Subst, names: &'a mut NameSupply) -> Self {
        names.observe(subst);
        Applier {
            subst,
            range: subst.range(),
            names,
        }
    }

    /// Freshens a term binder when it would capture part of the range.
    fn var_binder<T>(
        &mut self,
        b: &Var,
        body: &T,
        rename: impl Fn(&Subst, &T, &mut NameSupply) -> T,
    ) -> (Var, Option<T>) {
        if self.range.vars.contains(b) {
            let b2 = self.names.fresh_var(b);
            let body2 = rename(&Subst::Var(b.clone(), b2.clone()), body, self.names);
            (b2, Some(body2))
        } else {
            (b.clone(), None)
        }
    }

    fn tvar_binder<T>(
        &mut self,
        b: &TVar,
        body: &T,
        rename: impl Fn(&Subst, &T, &mut NameSupply) -> T,
    ) -> (TVar, Option<T>) {
        if self.range.tvars.contains(b) {
            let b2 = self.names.fresh_tvar(b);
            let body2 = rename(
                &Subst::TVar(b.clone(), Shape::TVar(b2.clone())),
                body,
                self.names,
            );
            (b2, Some(body2))
        } else {
            (b.clone(), None)
        }
    }

    fn ty(&mut self, t: &Type) -> Type {
        Type::new(self.subst.set(&t.captures), self.shape(&t.shape))
    }

    fn shape(&mut self, s: &Shape) -> Shape {
        match s {
            Shape::TVar(x) => match self.subst {
                Subst::TVar(y, repl) if x == y => repl.clone(),
                _ => s.clone(),
            },
            Shape::Top => Shape::Top,
            Shape::Boxed(t) => Type::boxed(self.ty(t)),
            Shape::Fun(x, p, r) => {
                let p2 = self.ty(p);
                if self.subst.shadows_var(x) {
                    return Type::fun(x.clone(), p2, (**r).clone());
                }
                let (x2, r2) = self.var_binder(x, &**r, |s, t, n| s.type_(t, n));
                Type::fun(x2, p2, self.ty(r2.as_ref().unwrap_or(r)))
            }
            Shape::TFun(x, b, r) => {
                let b2 = self.shape(b);
                if self.subst.shadows_tvar(x) {
                    return Type::tfun(x.clone(), b2, (**r).clone());
                }
                let (x2, r2) = self.tvar_binder(x, &**r, |s, t, n| s.type_(t, n));
                Type::tfun(x2, b2, self.ty(r2.as_ref().unwrap_or(r)))
            }
        }
    }

    fn term(&mut self, t: &Term) -> Term {
        match t {
            Term::Var(x) => Term::Var(self.subst.var(x)),
            Term::Box(x) => Term::Box(self.subst.var(x)),
            Term::App(x, y) => Term::App(self.subst.var(x), self.subst.var(y)),
            Term::TApp(x, s) => Term::TApp(self.subst.var(x), self.shape(s)),
            Term::Unbox(c, x) => Term::Unbox(self.subst.set(c), self.subst.var(x)),
            Term::Abs(x, ty, body) => {
                let ty2 = self.ty(ty);
                if self.subst.shadows_var(x) {
                    return Term::abs(x.clone(), ty2, (**body).clone());
                }
                let (x2, b2) = self.var_binder(x, &**body, |s, t, n| s.term(t, n));
                Term::abs(x2, ty2, self.term(b2.as_ref().unwrap_or(body)))
            }
            Term::TAbs(x, s, body) => {
                let s2 = self.shape(s);
                if self.subst.shadows_tvar(x) {
                    return Term::tabs(x.clone(), s2, (**body).clone());
                }
                let (x2, b2) = self.tvar_binder(x, &**body, |s, t, n| s.term(t, n));
                Term::tabs(x2, s2, self.term(b2.as_ref().unwrap_or(body)))
            }
            Term::Let(x, s, body) => {
                let s2 = self.term(s);
                if self.subst.shadows_var(x) {
                    return Term::let_(x.clone(), s2, (**body).clone());
                }
                let (x2, b2) = self.var_binder(x, &**body, |s, t, n| s.term(t, n));
                Term::let_(x2, s2, self.term(b2.as_ref().unwrap_or(body)))
            }
        }
    }
}

/// Substitution into a type with a private name supply.
pub fn subst_type(t: &Type, s: &Subst) -> Type {
    let mut names = NameSupply::above(t);
    s.type_(t, &mut names)
}

pub fn subst_shape(t: &Shape, s: &Subst) -> Shape {
    let mut names = NameSupply::above(t);
    s.shape(t, &mut names)
}

pub fn subst_term(t: &Term, s: &Subst) -> Term {
    let mut names = NameSupply::above(t);
    s.term(t, &mut names)
}

pub fn subst_set(c: &CaptureSet, s: &Subst) -> CaptureSet {
    s.set(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::AlphaEq;
    use crate::parse::{parse_term, parse_type};
    use crate::vars::fv_type;

    fn v(s: &str) -> Var {
        Var::new(s)
    }

    #[test]
    fn renames_terms_and_sets() {
        let t = parse_term("z w").unwrap();
        assert_eq!(
            subst_term(&t, &Subst::Var(v("z"), v("y"))),
            parse_term("y w").unwrap()
        );
        let ty = parse_type("{z} Top").unwrap();
        assert_eq!(
            subst_type(&ty, &Subst::Var(v("z"), v("y"))),
            parse_type("{y} Top").unwrap()
        );
    }

    #[test]
    fn splices_sets_only() {
        let c = CaptureSet::from_vars([v("xf"), v("a")]);
        let io = CaptureSet::singleton(v("io"));
        assert_eq!(
            subst_set(&c, &Subst::Set(v("xf"), io.clone())),
            CaptureSet::from_vars([v("io"), v("a")])
        );
        let t = parse_term("let u = {xf} unbox b in xf u").unwrap();
        let out = subst_term(&t, &Subst::Set(v("xf"), io));
        assert_eq!(out, parse_term("let u = {io} unbox b in xf u").unwrap());
    }

    #[test]
    fn avoids_capture_under_binders() {
        let ty = parse_type("all (y: Top) -> {z, y} Top").unwrap();
        let out = subst_type(&ty, &Subst::Var(v("z"), v("y")));
        let Shape::Fun(b, _, r) = &out.shape else {
            panic!()
        };
        assert_ne!(b, &v("y"));
        assert!(r.captures.contains(&v("y")));
        assert!(r.captures.contains(b));

        let ty = parse_type("all [Y <: Top] -> all (a: X) -> Y").unwrap();
        let out = subst_type(
            &ty,
            &Subst::TVar(TVar::new("X"), Shape::TVar(TVar::new("Y"))),
        );
        assert!(fv_type(&out).tvars.contains(&TVar::new("Y")));
        assert!(!fv_type(&out).tvars.contains(&TVar::new("X")));
    }

    #[test]
    fn stops_at_shadowing_binder() {
        let t = parse_term("let z = a in z").unwrap();
        assert_eq!(subst_term(&t, &Subst::Var(v("z"), v("q"))), t);
        let ty = parse_type("all (z: {z} Top) -> {z} Top").unwrap();
        assert_eq!(
            subst_type(&ty, &Subst::Var(v("z"), v("q"))),
            parse_type("all (z: {q} Top) -> {z} Top").unwrap()
        );
    }

    #[test]
    fn composition_of_renamings() {
        let t =
            parse_term("let a = fun (k: {x} Top) f k in let b = x a in {y, x} unbox b").unwrap();
        let two = subst_term(
            &subst_term(&t, &Subst::Var(v("x"), v("y"))),
            &Subst::Var(v("y"), v("z")),
        );
        let one = subst_term(
            &subst_term(&t, &Subst::Var(v("y"), v("z"))),
            &Subst::Var(v("x"), v("z")),
        );
        assert!(two.alpha_eq(&one));
    }
}
