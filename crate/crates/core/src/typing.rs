//! The syntax-directed typechecker and the avoidance operator.

use crate::checker::{with_checker, Checker, Fuel};
use crate::error::{TResult, TypeError};
use crate::subcapture::subcapture;
use crate::subst::Subst;
use crate::subtype::{var_type, widen_var};
use crate::syntax::{CaptureSet, Env, NameSupply, Shape, Term, Type, Var};
use crate::vars::cv;
use crate::wf::{wf_shape, wf_type};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Polarity {
    Co,
    Contra,
}

impl Polarity {
    fn flip(self) -> Self {
        match self {
            Polarity::Co => Polarity::Contra,
            Polarity::Contra => Polarity::Co,
        }
    }
}

struct Avoid<'a> {
    x: &'a Var,
    with: &'a CaptureSet,
    names: &'a mut NameSupply,
}

impl Avoid<'_> {
    fn set(&self, c: &CaptureSet, pol: Polarity) -> CaptureSet {
        if !c.contains(self.x) {
            return c.clone();
        }
        match pol {
            Polarity::Co => c.splice(self.x, self.with),
            Polarity::Contra => c.without(self.x),
        }
    }

    fn ty(&mut self, t: &Type, pol: Polarity) -> Type {
        Type::new(self.set(&t.captures, pol), self.shape(&t.shape, pol))
    }

    fn shape(&mut self, s: &Shape, pol: Polarity) -> Shape {
        match s {
            Shape::TVar(_) | Shape::Top => s.clone(),
            Shape::Boxed(t) => Type::boxed(self.ty(t, pol)),
            Shape::Fun(b, p, r) => {
                let p = self.ty(p, pol.flip());
                if b == self.x {
                    return Type::fun(b.clone(), p, (**r).clone());
                }
                let (b, r) = if self.with.contains(b) {
                    let fresh = self.names.fresh_var(b);
                    let r = Subst::Var(b.clone(), fresh.clone()).type_(r, self.names);
                    (fresh, r)
                } else {
                    (b.clone(), (**r).clone())
                };
                let r = self.ty(&r, pol);
                Type::fun(b, p, r)
            }
            Shape::TFun(b, bound, r) => {
                let bound = self.shape(bound, pol.flip());
                let r = self.ty(r, pol);
                Type::tfun(b.clone(), bound, r)
            }
        }
    }
}

/// The least supertype of `t` not mentioning `x`, where `x` is known to
/// capture at most `with`. Covariant occurrences of `x` are replaced by
/// `with`, contravariant ones dropped.
pub fn avoid(x: &Var, with: &CaptureSet, t: &Type) -> Type {
    let mut names = NameSupply::above(&(t, with));
    names.observe(x);
    avoid_with(x, with, t, &mut names)
}

pub(crate) fn avoid_with(x: &Var, with: &CaptureSet, t: &Type, names: &mut NameSupply) -> Type {
    Avoid { x, with, names }.ty(t, Polarity::Co)
}

pub fn typecheck(env: &Env, t: &Term, fuel: &mut Fuel) -> TResult<Type> {
    with_checker(fuel, &(env, t), |ck| ck.typecheck(env, t))
}

impl Checker {
    pub(crate) fn avoid(&mut self, x: &Var, with: &CaptureSet, t: &Type) -> Type {
        avoid_with(x, with, t, self.names())
    }

    /// Renames a term binder that would shadow something already in `env`.
    pub(crate) fn unshadow(&mut self, env: &Env, x: &Var, body: &Term) -> (Var, Term) {
        if env.contains_var(x) {
            let fresh = self.fresh_var(x);
            let body = Subst::Var(x.clone(), fresh.clone()).term(body, self.names());
            (fresh, body)
        } else {
            (x.clone(), body.clone())
        }
    }

    pub(crate) fn unshadow_tvar(
        &mut self,
        env: &Env,
        x: &crate::syntax::TVar,
        body: &Term,
    ) -> (crate::syntax::TVar, Term) {
        if env.contains_tvar(x) {
            let fresh = self.fresh_tvar(x);
            let body = Subst::TVar(x.clone(), Shape::TVar(fresh.clone())).term(body, self.names());
            (fresh, body)
        } else {
            (x.clone(), body.clone())
        }
    }

    /// Rejects an unbox annotation that is not a subset of the bound
    /// variables. A stray `cap` is an escape; an unbound name is ill-formed.
    pub(crate) fn check_unbox_annotation(
        &self,
        env: &Env,
        rule: &'static str,
        c: &CaptureSet,
    ) -> TResult<()> {
        if let Some(y) = c.vars().find(|y| !env.contains_var(y)) {
            return Err(TypeError::IllFormedType {
                var: format!("{y:?}"),
                detail: "is not bound".into(),
            });
        }
        if c.has_root() {
            return Err(TypeError::EscapeViolation {
                rule,
                set: c.clone(),
            });
        }
        Ok(())
    }

    /// Types `C unbox x`, shared by the checker and both inference engines.
    pub(crate) fn check_unbox(
        &self,
        env: &Env,
        rule: &'static str,
        annot: &CaptureSet,
        x: &Var,
    ) -> TResult<Type> {
        let xt = widen_var(env, x)?;
        let Shape::Boxed(inner) = &xt.shape else {
            return Err(TypeError::NotABoxed { rule, found: xt });
        };
        self.check_unbox_annotation(env, rule, annot)?;
        if !env.covers(&inner.captures) {
            return Err(TypeError::EscapeViolation {
                rule,
                set: inner.captures.clone(),
            });
        }
        if !subcapture(env, &inner.captures, annot) {
            return Err(TypeError::SubcaptureFailure {
                rule,
                sub: inner.captures.clone(),
                sup: annot.clone(),
            });
        }
        Ok((**inner).clone())
    }

    pub fn typecheck(&mut self, env: &Env, t: &Term) -> TResult<Type> {
        self.tick()?;
        match t {
            Term::Var(x) => var_type(env, x),
            Term::Abs(x, param, body) => {
                wf_type(env, param)?;
                let (x, body) = self.unshadow(env, x, body);
                let result = self.typecheck(&env.with_var(x.clone(), param.clone()), &body)?;
                Ok(Type::new(
                    cv(&body).without(&x),
                    Type::fun(x, param.clone(), result),
                ))
            }
            Term::TAbs(a, bound, body) => {
                wf_shape(env, bound)?;
                let (a, body) = self.unshadow_tvar(env, a, body);
                let result = self.typecheck(&env.with_tvar(a.clone(), bound.clone()), &body)?;
                Ok(Type::new(cv(&body), Type::tfun(a, bound.clone(), result)))
            }
            Term::App(f, y) => {
                let ft = widen_var(env, f)?;
                let Shape::Fun(z, param, result) = &ft.shape else {
                    return Err(TypeError::NotAFunction {
                        rule: "app",
                        found: ft,
                    });
                };
                let yt = var_type(env, y)?;
                if !self.subtype(env, &yt, param)? {
                    return Err(TypeError::SubtypeFailure {
                        rule: "app",
                        actual: yt,
                        expected: (**param).clone(),
                    });
                }
                Ok(self.rename_type(result, z, y))
            }
            Term::TApp(f, arg) => {
                let ft = widen_var(env, f)?;
                let Shape::TFun(a, bound, result) = &ft.shape else {
                    return Err(TypeError::NotATypeFunction {
                        rule: "tapp",
                        found: ft,
                    });
                };
                wf_shape(env, arg)?;
                if !self.subshape(env, arg, bound)? {
                    return Err(TypeError::SubtypeFailure {
                        rule: "tapp",
                        actual: Type::pure(arg.clone()),
                        expected: Type::pure((**bound).clone()),
                    });
                }
                Ok(Subst::TVar(a.clone(), arg.clone()).type_(result, self.names()))
            }
            Term::Box(x) => {
                let xt = var_type(env, x)?;
                if !env.covers(&xt.captures) {
                    return Err(TypeError::EscapeViolation {
                        rule: "box",
                        set: xt.captures,
                    });
                }
                Ok(Type::pure(Type::boxed(xt)))
            }
            Term::Unbox(annot, x) => self.check_unbox(env, "unbox", annot, x),
            Term::Let(x, bound, body) => {
                let bt = self.typecheck(env, bound)?;
                let (x, body) = self.unshadow(env, x, body);
                let rt = self.typecheck(&env.with_var(x.clone(), bt.clone()), &body)?;
                Ok(self.avoid(&x, &bt.captures, &rt))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::AlphaEq;
    use crate::parse::{parse_env, parse_term, parse_type};
    use crate::subtype::subtype;
    use crate::vars::fv_type;

    fn env(src: &str) -> Env {
        parse_env(src).unwrap()
    }

    fn ty(src: &str) -> Type {
        parse_type(src).unwrap()
    }

    fn check(env: &Env, src: &str) -> TResult<Type> {
        typecheck(env, &parse_term(src).unwrap(), &mut Fuel::default())
    }

    fn v(s: &str) -> Var {
        Var::new(s)
    }

    #[test]
    fn avoidance() {
        let io = CaptureSet::singleton(v("io"));
        assert_eq!(avoid(&v("x"), &io, &ty("{x} Top")), ty("{io} Top"));
        assert_eq!(
            avoid(&v("x"), &io, &ty("all (z: {x} Top) -> Top")),
            ty("all (z: {} Top) -> Top")
        );
        let t = ty("{a} all (z: {b} Top) -> Box {c} Top");
        assert_eq!(avoid(&v("x"), &io, &t), t);
        assert_eq!(
            avoid(
                &v("x"),
                &io,
                &ty("all [X <: all (z: {x} Top) -> {x} Top] -> {x} X")
            ),
            ty("all [X <: all (z: {io} Top) -> {} Top] -> {io} X")
        );
        assert_eq!(avoid(&v("x"), &io, &ty("Box {x} Top")), ty("Box {io} Top"));
        assert_eq!(
            avoid(&v("x"), &io, &ty("all (x: Top) -> {x} Top")),
            ty("all (x: Top) -> {x} Top")
        );
    }

    #[test]
    fn avoidance_renames_binders_that_would_capture() {
        let t = ty("all (io: Top) -> {x, io} Top");
        let out = avoid(&v("x"), &CaptureSet::singleton(v("io")), &t);
        assert!(out.alpha_eq(&ty("all (k: Top) -> {io, k} Top")));
    }

    #[test]
    fn avoidance_is_a_supertype() {
        let g = env("io : {cap} Top\nx : {io} all (a: Top) -> Top");
        let with = CaptureSet::singleton(v("io"));
        for src in [
            "{x} Top",
            "all (z: {x} Top) -> {x, z} Top",
            "Box {x} all (q: Top) -> {x} Top",
            "all (k: all (z: {x} Top) -> Top) -> {k} Top",
        ] {
            let t = ty(src);
            let a = avoid(&v("x"), &with, &t);
            assert!(!fv_type(&a).contains_var(&v("x")), "{src}");
            assert!(
                subtype(&g, &t, &a, &mut Fuel::default()).unwrap(),
                "{src} vs {a}"
            );
        }
    }

    #[test]
    fn examples() {
        let g = env("io : {cap} Top");
        assert_eq!(
            check(&g, "fun (z: {io} Top) z").unwrap(),
            ty("all (z: {io} Top) -> {z} Top")
        );
        assert_eq!(check(&g, "box io").unwrap(), ty("Box {io} Top"));
        assert_eq!(
            check(&g, "let y = box io in y").unwrap(),
            ty("Box {io} Top")
        );
        assert_eq!(
            check(&g, "fun (z: Top) io").unwrap(),
            ty("{io} all (z: Top) -> {io} Top")
        );
        let g2 = env("io : {cap} Top\nx : Box {cap} Top");
        assert!(matches!(
            check(&g2, "{io} unbox x"),
            Err(TypeError::EscapeViolation { .. })
        ));
        assert!(matches!(
            check(&g2, "{cap} unbox x"),
            Err(TypeError::EscapeViolation { .. })
        ));
        let g3 = env("io : {cap} Top\nx : Box {io} Top");
        assert_eq!(check(&g3, "{io} unbox x").unwrap(), ty("{io} Top"));
        assert!(matches!(
            check(&g3, "{} unbox x"),
            Err(TypeError::SubcaptureFailure { .. })
        ));
        assert!(matches!(
            check(&g3, "{zz} unbox x"),
            Err(TypeError::IllFormedType { .. })
        ));
    }

    #[test]
    fn applications() {
        let g = env("io : {cap} Top\nf : {io} all (a: {io} Top) -> {a} Top\nX <: Top\np : all [Y <: Top] -> all (q: Y) -> Top");
        assert_eq!(check(&g, "f io").unwrap(), ty("{io} Top"));
        assert!(matches!(
            check(&g, "io io"),
            Err(TypeError::NotAFunction { .. })
        ));
        assert!(matches!(
            check(&g, "io [Top]"),
            Err(TypeError::NotATypeFunction { .. })
        ));
        assert!(matches!(
            check(&g, "{io} unbox io"),
            Err(TypeError::NotABoxed { .. })
        ));
        assert_eq!(check(&g, "p [X]").unwrap(), ty("all (q: X) -> Top"));
        let g = env("io : {cap} Top\nf : all (a: {} Top) -> Top");
        assert!(matches!(
            check(&g, "f io"),
            Err(TypeError::SubtypeFailure { .. })
        ));
        assert!(matches!(
            check(&g, "f zz"),
            Err(TypeError::UnboundVariable(_))
        ));
    }

    #[test]
    fn let_avoids_the_bound_variable() {
        let g = env("io : {cap} Top\nmk : all (u: {cap} Top) -> {io} all (a: Top) -> Top");
        let t = check(&g, "let k = mk io in k").unwrap();
        assert_eq!(t, ty("{io} all (a: Top) -> Top"));
        let t = check(&g, "let k = mk io in fun (z: Top) k z").unwrap();
        assert_eq!(t, ty("{io} all (z: Top) -> Top"));
    }

    #[test]
    fn shadowing_binders_are_renamed() {
        let g = env("io : {cap} Top\nz : Top");
        let t = check(&g, "fun (z: {io} Top) z").unwrap();
        assert!(t.alpha_eq(&ty("all (z: {io} Top) -> {z} Top")));
        let t = check(&g, "let io = z in io").unwrap();
        assert_eq!(t, ty("{z} Top"));
    }
}
