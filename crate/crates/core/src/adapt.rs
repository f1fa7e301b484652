//! Box inference on terms: adaptation subtyping, which may insert `box`,
//! `unbox`, and eta-expansions to make a variable fit an expected type, and
//! the typing judgment that uses it at applications.

use crate::checker::{with_checker, Checker, Fuel};
use crate::error::{TResult, TypeError};
use crate::normalize::normalize_with;
use crate::subcapture::subcapture;
use crate::subst::Subst;
use crate::subtype::{var_type, widen_tvar, widen_var};
use crate::syntax::{CaptureSet, Env, Shape, TVar, Term, Type, Var};
use crate::vars::cv;
use crate::wf::{wf_shape, wf_type};

/// Which adaptation rule applies to an (actual, expected) pair. Both the
/// term-level and the type-level engines dispatch through this.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum AdaptRule {
    Top,
    Refl,
    /// Widen the actual type variable by one step.
    TVar(TVar),
    Box,
    Boxed,
    Unbox,
    Fun,
    TFun,
    NoRule,
}

pub(crate) fn dispatch(env: &Env, actual: &Type, expected: &Type) -> TResult<AdaptRule> {
    use crate::alpha::AlphaEq;
    let (s, u) = (&actual.shape, &expected.shape);
    Ok(match (s, u) {
        (_, Shape::Top) => AdaptRule::Top,
        _ if s.alpha_eq(u) => AdaptRule::Refl,
        (Shape::TVar(a), Shape::Boxed(_)) => {
            if matches!(widen_tvar(env, a)?, Shape::Boxed(_)) {
                AdaptRule::TVar(a.clone())
            } else {
                AdaptRule::Box
            }
        }
        (Shape::Boxed(_), Shape::Boxed(_)) => AdaptRule::Boxed,
        (_, Shape::Boxed(_)) => AdaptRule::Box,
        (Shape::TVar(a), _) => AdaptRule::TVar(a.clone()),
        (Shape::Boxed(_), _) => AdaptRule::Unbox,
        (Shape::Fun(..), Shape::Fun(..)) => AdaptRule::Fun,
        (Shape::TFun(..), Shape::TFun(..)) => AdaptRule::TFun,
        _ => AdaptRule::NoRule,
    })
}

pub(crate) fn tvar_bound(env: &Env, a: &TVar) -> TResult<Shape> {
    env.lookup_tvar(a)
        .cloned()
        .ok_or_else(|| TypeError::UnboundTypeVariable(format!("{a:?}")))
}

pub(crate) fn boxed_parts(t: &Type) -> &Type {
    match &t.shape {
        Shape::Boxed(inner) => inner,
        _ => unreachable!("dispatch guarantees a boxed shape"),
    }
}

/// Types `x` for use as the head of an application, unboxing it when its
/// widened type is boxed and the box's capture set is in scope.
pub fn unbox_var(env: &Env, x: &Var) -> TResult<(Term, Type)> {
    let t = widen_var(env, x)?;
    if let Shape::Boxed(inner) = &t.shape {
        if env.covers(&inner.captures) {
            return Ok((
                Term::Unbox(inner.captures.clone(), x.clone()),
                (**inner).clone(),
            ));
        }
    }
    Ok((Term::Var(x.clone()), t))
}

/// Adapts `x : actual` to `expected`, returning a term of the expected type.
pub fn adapt_sub(
    env: &Env,
    x: &Var,
    actual: &Type,
    expected: &Type,
    fuel: &mut Fuel,
) -> TResult<Term> {
    with_checker(fuel, &(env, x, (actual, expected)), |ck| {
        ck.adapt_sub(env, x, actual, expected)
    })
}

/// Adapts the bound variable `x` to `expected`.
pub fn box_adapt(env: &Env, x: &Var, expected: &Type, fuel: &mut Fuel) -> TResult<Term> {
    with_checker(fuel, &(env, x, expected), |ck| {
        ck.box_adapt(env, x, expected)
    })
}

/// Typechecks `t`, completing missing boxes; returns the elaborated term.
pub fn infer(env: &Env, t: &Term, fuel: &mut Fuel) -> TResult<(Term, Type)> {
    with_checker(fuel, &(env, t), |ck| ck.infer(env, t))
}

impl Checker {
    pub(crate) fn normalize(&mut self, t: &Term) -> Term {
        self.observe(t);
        normalize_with(t, self.names())
    }

    /// Fresh binders for going under a pair of dependent function types.
    pub(crate) fn fun_binders(&mut self, right: &Var) -> (Var, Var) {
        let p = self.fresh_var(right);
        let q = self.fresh_var(right);
        (p, q)
    }

    pub fn box_adapt(&mut self, env: &Env, x: &Var, expected: &Type) -> TResult<Term> {
        wf_type(env, expected)?;
        let actual = var_type(env, x)?;
        self.adapt_sub(env, x, &actual, expected)
    }

    pub fn adapt_sub(
        &mut self,
        env: &Env,
        x: &Var,
        actual: &Type,
        expected: &Type,
    ) -> TResult<Term> {
        self.tick()?;
        let subcaptures = |rule| {
            if subcapture(env, &actual.captures, &expected.captures) {
                Ok(Term::Var(x.clone()))
            } else {
                Err(TypeError::SubcaptureFailure {
                    rule,
                    sub: actual.captures.clone(),
                    sup: expected.captures.clone(),
                })
            }
        };
        match dispatch(env, actual, expected)? {
            AdaptRule::Top => subcaptures("ba-top"),
            AdaptRule::Refl => subcaptures("ba-refl"),
            AdaptRule::TVar(a) => {
                let widened = Type::new(actual.captures.clone(), tvar_bound(env, &a)?);
                self.adapt_sub(env, x, &widened, expected)
            }
            AdaptRule::Box => {
                let inner = boxed_parts(expected);
                if !env.covers(&inner.captures) {
                    return Err(TypeError::EscapeViolation {
                        rule: "ba-box",
                        set: inner.captures.clone(),
                    });
                }
                let tx = self.adapt_sub(env, x, actual, inner)?;
                let y = self.fresh_var(&Var::new("y"));
                Ok(Term::let_(y.clone(), tx, Term::Box(y)))
            }
            AdaptRule::Boxed => {
                let (from, to) = (boxed_parts(actual), boxed_parts(expected));
                let y = self.fresh_var(&Var::new("y"));
                let ty = self.adapt_sub(env, &y, from, to)?;
                if ty.as_var().is_some() {
                    if !subcapture(env, &actual.captures, &expected.captures) {
                        return Err(TypeError::SubcaptureFailure {
                            rule: "ba-boxed",
                            sub: actual.captures.clone(),
                            sup: expected.captures.clone(),
                        });
                    }
                } else if !env.covers(&from.captures) {
                    return Err(TypeError::EscapeViolation {
                        rule: "ba-boxed",
                        set: from.captures.clone(),
                    });
                }
                let z = self.fresh_var(&Var::new("z"));
                let t = Term::let_(
                    y,
                    Term::Unbox(from.captures.clone(), x.clone()),
                    Term::let_(z.clone(), ty, Term::Box(z)),
                );
                Ok(self.normalize(&t))
            }
            AdaptRule::Unbox => {
                let from = boxed_parts(actual);
                if !env.covers(&from.captures) {
                    return Err(TypeError::EscapeViolation {
                        rule: "ba-unbox",
                        set: from.captures.clone(),
                    });
                }
                let y = self.fresh_var(&Var::new("y"));
                let ty = self.adapt_sub(env, &y, from, expected)?;
                Ok(Term::let_(
                    y.clone(),
                    Term::Unbox(from.captures.clone(), x.clone()),
                    ty,
                ))
            }
            AdaptRule::Fun => {
                let (Shape::Fun(x1, u1, t1), Shape::Fun(x2, u2, t2)) =
                    (&actual.shape, &expected.shape)
                else {
                    unreachable!()
                };
                let (p, q) = self.fun_binders(x2);
                let tx = self.adapt_sub(env, &p, u2, u1)?;
                let env2 = env
                    .with_var(p.clone(), (**u2).clone())
                    .with_var(q.clone(), (**u1).clone());
                let arg = if tx.as_var().is_some() { &p } else { &q };
                let t1 = self.rename_type(t1, x1, arg);
                let t2 = self.rename_type(t2, x2, &p);
                let z = self.fresh_var(&Var::new("z"));
                let tz = self.adapt_sub(&env2, &z, &t1, &t2)?;
                let body = Term::let_(q.clone(), tx, Term::let_(z, Term::App(x.clone(), q), tz));
                let tf = self.normalize(&Term::abs(p, (**u2).clone(), body));
                self.check_closure(env, "ba-fun", x, &tf, &actual.captures, &expected.captures)?;
                Ok(tf)
            }
            AdaptRule::TFun => {
                let (Shape::TFun(a1, s1, t1), Shape::TFun(a2, s2, t2)) =
                    (&actual.shape, &expected.shape)
                else {
                    unreachable!()
                };
                if !self.subshape(env, s2, s1)? {
                    return Err(TypeError::SubtypeFailure {
                        rule: "ba-tfun",
                        actual: Type::pure((**s2).clone()),
                        expected: Type::pure((**s1).clone()),
                    });
                }
                let a = self.fresh_tvar(a2);
                let env2 = env.with_tvar(a.clone(), (**s2).clone());
                let t1 = self.rename_type_tvar(t1, a1, &a);
                let t2 = self.rename_type_tvar(t2, a2, &a);
                let z = self.fresh_var(&Var::new("z"));
                let tz = self.adapt_sub(&env2, &z, &t1, &t2)?;
                let body = Term::let_(z, Term::TApp(x.clone(), Shape::TVar(a.clone())), tz);
                let tf = self.normalize(&Term::tabs(a, (**s2).clone(), body));
                self.check_closure(env, "ba-tfun", x, &tf, &actual.captures, &expected.captures)?;
                Ok(tf)
            }
            AdaptRule::NoRule => Err(TypeError::AdaptFailure {
                rule: "adapt",
                actual: actual.clone(),
                expected: expected.clone(),
            }),
        }
    }

    /// `[x := C] cv(t) <: C'` for an eta-expansion `t` of `x : C S`.
    fn check_closure(
        &mut self,
        env: &Env,
        rule: &'static str,
        x: &Var,
        t: &Term,
        captures: &CaptureSet,
        expected: &CaptureSet,
    ) -> TResult<()> {
        let leak = Subst::Set(x.clone(), captures.clone()).set(&cv(t));
        if subcapture(env, &leak, expected) {
            Ok(())
        } else {
            Err(TypeError::SubcaptureFailure {
                rule,
                sub: leak,
                sup: expected.clone(),
            })
        }
    }

    pub fn infer(&mut self, env: &Env, t: &Term) -> TResult<(Term, Type)> {
        self.tick()?;
        match t {
            Term::Var(x) => Ok((t.clone(), var_type(env, x)?)),
            Term::Abs(x, param, body) => {
                wf_type(env, param)?;
                let (x, body) = self.unshadow(env, x, body);
                let (body, result) = self.infer(&env.with_var(x.clone(), param.clone()), &body)?;
                let captures = cv(&body).without(&x);
                Ok((
                    Term::abs(x.clone(), param.clone(), body),
                    Type::new(captures, Type::fun(x, param.clone(), result)),
                ))
            }
            Term::TAbs(a, bound, body) => {
                wf_shape(env, bound)?;
                let (a, body) = self.unshadow_tvar(env, a, body);
                let (body, result) = self.infer(&env.with_tvar(a.clone(), bound.clone()), &body)?;
                let captures = cv(&body);
                Ok((
                    Term::tabs(a.clone(), bound.clone(), body),
                    Type::new(captures, Type::tfun(a, bound.clone(), result)),
                ))
            }
            Term::App(f, y) => {
                let (tf, ft) = unbox_var(env, f)?;
                let Shape::Fun(z, param, result) = &ft.shape else {
                    return Err(TypeError::NotAFunction {
                        rule: "bi-app",
                        found: ft,
                    });
                };
                let ty = self.box_adapt(env, y, param)?;
                let f2 = self.fresh_var(f);
                let y2 = self.fresh_var(y);
                let elaborated = self.normalize(&Term::let_(
                    f2.clone(),
                    tf,
                    Term::let_(y2.clone(), ty.clone(), Term::App(f2, y2.clone())),
                ));
                let result = if ty.as_var().is_some() {
                    self.rename_type(result, z, y)
                } else {
                    let r = self.rename_type(result, z, &y2);
                    self.avoid(&y2, &param.captures, &r)
                };
                Ok((elaborated, result))
            }
            Term::TApp(f, arg) => {
                let (tf, ft) = unbox_var(env, f)?;
                let Shape::TFun(a, bound, result) = &ft.shape else {
                    return Err(TypeError::NotATypeFunction {
                        rule: "bi-tapp",
                        found: ft,
                    });
                };
                wf_shape(env, arg)?;
                if !self.subshape(env, arg, bound)? {
                    return Err(TypeError::SubtypeFailure {
                        rule: "bi-tapp",
                        actual: Type::pure(arg.clone()),
                        expected: Type::pure((**bound).clone()),
                    });
                }
                let f2 = self.fresh_var(f);
                let elaborated =
                    self.normalize(&Term::let_(f2.clone(), tf, Term::TApp(f2, arg.clone())));
                Ok((
                    elaborated,
                    Subst::TVar(a.clone(), arg.clone()).type_(result, self.names()),
                ))
            }
            Term::Box(x) => {
                let xt = var_type(env, x)?;
                if !env.covers(&xt.captures) {
                    return Err(TypeError::EscapeViolation {
                        rule: "bi-box",
                        set: xt.captures,
                    });
                }
                Ok((t.clone(), Type::pure(Type::boxed(xt))))
            }
            Term::Unbox(annot, x) => Ok((t.clone(), self.check_unbox(env, "bi-unbox", annot, x)?)),
            Term::Let(x, bound, body) => {
                let (bound, bt) = self.infer(env, bound)?;
                let (x, body) = self.unshadow(env, x, body);
                let (body, rt) = self.infer(&env.with_var(x.clone(), bt.clone()), &body)?;
                let result = self.avoid(&x, &bt.captures, &rt);
                Ok((Term::let_(x, bound, body), result))
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
    use crate::typing::typecheck;

    fn env(src: &str) -> Env {
        parse_env(src).unwrap()
    }

    fn ty(src: &str) -> Type {
        parse_type(src).unwrap()
    }

    fn tm(src: &str) -> Term {
        parse_term(src).unwrap()
    }

    fn v(s: &str) -> Var {
        Var::new(s)
    }

    fn adapt(g: &Env, x: &str, from: &str, to: &str) -> TResult<Term> {
        adapt_sub(g, &v(x), &ty(from), &ty(to), &mut Fuel::default())
    }

    /// The elaborated term must typecheck at a subtype of the expected type
    /// once `x` is bound at its assumed type.
    fn assert_sound(g: &Env, x: &str, from: &str, to: &str, t: &Term) {
        let g2 = g.with_var(v(x), ty(from));
        let got = typecheck(&g2, t, &mut Fuel::default()).unwrap();
        assert!(
            subtype(&g2, &got, &ty(to), &mut Fuel::default()).unwrap(),
            "{t} : {got} </: {to}"
        );
    }

    #[test]
    fn unboxing_heads() {
        let g = env("io : {cap} Top\nx : Box {io} all (z: Top) -> Top\nr : Box {cap} Top");
        assert_eq!(unbox_var(&g, &v("io")).unwrap(), (tm("io"), ty("{io} Top")));
        assert_eq!(
            unbox_var(&g, &v("x")).unwrap(),
            (tm("{io} unbox x"), ty("{io} all (z: Top) -> Top"))
        );
        assert_eq!(
            unbox_var(&g, &v("r")).unwrap(),
            (tm("r"), ty("{r} Box {cap} Top"))
        );
    }

    #[test]
    fn identity_when_subtype() {
        let g = env("io : {cap} Top");
        assert_eq!(adapt(&g, "x", "{io} Top", "{io} Top").unwrap(), tm("x"));
        assert_eq!(
            adapt(
                &g,
                "x",
                "{io} all (a: Top) -> Top",
                "{cap} all (a: Top) -> Top"
            )
            .unwrap(),
            tm("x")
        );
        assert_eq!(
            adapt(
                &g,
                "x",
                "all (a: {cap} Top) -> {a} Top",
                "{io} all (b: {io} Top) -> {b} Top"
            )
            .unwrap(),
            tm("x")
        );
    }

    #[test]
    fn boxing() {
        let g = env("io : {cap} Top");
        let t = adapt(&g, "x", "{io} Top", "Box {io} Top").unwrap();
        assert!(t.alpha_eq(&tm("let y = x in box y")), "{t}");
        assert_sound(&g, "x", "{io} Top", "Box {io} Top", &t);
        let b = box_adapt(&g, &v("io"), &ty("Box {io} Top"), &mut Fuel::default()).unwrap();
        assert!(b.alpha_eq(&tm("let y = io in box y")));
        assert_eq!(
            box_adapt(&g, &v("io"), &ty("{io} Top"), &mut Fuel::default()).unwrap(),
            tm("io")
        );
        assert!(matches!(
            box_adapt(&g, &v("io"), &ty("Box {nope} Top"), &mut Fuel::default()),
            Err(TypeError::IllFormedType { .. })
        ));
    }

    #[test]
    fn eta_expansion_unboxes_the_argument() {
        let g = env("io : {cap} Top\nf : all (op: {io} all (u: Top) -> Top) -> Top");
        let from = "{f} all (op: {io} all (u: Top) -> Top) -> Top";
        let to = "{io} all (op: Box {io} all (u: Top) -> Top) -> Top";
        let t = adapt(&g, "f", from, to).unwrap();
        let expected =
            tm("fun (op: Box {io} all (u: Top) -> Top) let op' = ({io} unbox op) in f op'");
        assert!(t.alpha_eq(&expected), "{t}");
        assert_eq!(cv(&t), CaptureSet::from_vars([v("f"), v("io")]));
        let got = typecheck(&g, &t, &mut Fuel::default()).unwrap();
        assert!(subtype(&g, &got, &ty(to), &mut Fuel::default()).unwrap());
    }

    #[test]
    fn boxed_to_boxed() {
        let g = env("io : {cap} Top\nX <: Top");
        let from = "Box {io} all (a: Box {io} Top) -> Top";
        let to = "Box {io} all (a: {io} Top) -> Top";
        let t = adapt(&g, "x", from, to).unwrap();
        assert!(matches!(t, Term::Let(..)));
        assert_sound(&g, "x", from, to, &t);
        let t = adapt(&g, "x", "Box {io} Top", "{cap} Box {cap} Top").unwrap();
        assert_eq!(t, tm("x"));
    }

    #[test]
    fn unboxing_the_input() {
        let g = env("io : {cap} Top");
        let t = adapt(
            &g,
            "x",
            "Box {io} all (a: Top) -> Top",
            "{io} all (a: Top) -> Top",
        )
        .unwrap();
        assert!(t.alpha_eq(&tm("let y = {io} unbox x in y")), "{t}");
        assert_sound(
            &g,
            "x",
            "Box {io} all (a: Top) -> Top",
            "{io} all (a: Top) -> Top",
            &t,
        );
    }

    #[test]
    fn type_functions() {
        let g = env("io : {cap} Top");
        let from = "all [X <: Top] -> all (a: {io} all (u: X) -> Top) -> Top";
        let to = "{io} all [Y <: Top] -> {io} all (a: Box {io} all (u: Y) -> Top) -> Top";
        let t = adapt(&g, "x", from, to).unwrap();
        assert!(matches!(t, Term::TAbs(..)), "{t}");
        assert_sound(&g, "x", from, to, &t);
        assert_eq!(
            adapt(
                &g,
                "x",
                from,
                "all [Y <: Top] -> all (b: {io} all (u: Y) -> Top) -> Top"
            )
            .unwrap(),
            tm("x")
        );
        assert_eq!(adapt(&g, "x", "Box {io} Top", "Top").unwrap(), tm("x"));
    }

    #[test]
    fn escape_checking() {
        let g = env("io : {cap} Top");
        let e = adapt(
            &g,
            "x",
            "Box {cap} all (z: Top) -> Top",
            "{cap} all (z: Top) -> Top",
        )
        .unwrap_err();
        assert!(
            matches!(
                e,
                TypeError::EscapeViolation {
                    rule: "ba-unbox",
                    ..
                }
            ),
            "{e}"
        );
        let e = adapt(
            &g,
            "x",
            "{cap} all (z: Top) -> Top",
            "Box {cap} all (z: Top) -> Top",
        )
        .unwrap_err();
        assert!(
            matches!(e, TypeError::EscapeViolation { rule: "ba-box", .. }),
            "{e}"
        );
        let g = env("f : all (c: {cap} all (u: Top) -> Top) -> Top");
        let e = adapt(
            &g,
            "f",
            "{f} all (c: {cap} all (u: Top) -> Top) -> Top",
            "{cap} all (c: Box {cap} all (u: Top) -> Top) -> Top",
        )
        .unwrap_err();
        assert!(matches!(e, TypeError::EscapeViolation { .. }), "{e}");
    }

    #[test]
    fn failures() {
        let g = env("io : {cap} Top");
        assert!(matches!(
            adapt(&g, "x", "Top", "all (a: Top) -> Top"),
            Err(TypeError::AdaptFailure { .. })
        ));
        assert!(matches!(
            adapt(&g, "x", "{io} Top", "{} Top"),
            Err(TypeError::SubcaptureFailure { .. })
        ));
        let e = adapt(
            &g,
            "x",
            "{io} all (a: Top) -> Top",
            "Box {} all (a: Top) -> Top",
        )
        .unwrap_err();
        assert!(matches!(e, TypeError::SubcaptureFailure { .. }), "{e}");
    }

    #[test]
    fn inference_examples() {
        let g = env("io : {cap} Top\ng : all (z: Box {io} Top) -> Top\ny : {io} Top");
        let (t, tt) = infer(&g, &tm("g y"), &mut Fuel::default()).unwrap();
        assert!(t.alpha_eq(&tm("let y' = box y in g y'")), "{t}");
        assert_eq!(tt, ty("Top"));
        let got = typecheck(&g, &t, &mut Fuel::default()).unwrap();
        assert!(subtype(&g, &got, &tt, &mut Fuel::default()).unwrap());

        let g = env("io : {cap} Top\nx : Box {io} Top");
        let (t, tt) = infer(&g, &tm("{io} unbox x"), &mut Fuel::default()).unwrap();
        assert_eq!((t, tt), (tm("{io} unbox x"), ty("{io} Top")));
    }

    #[test]
    fn inference_unboxes_heads() {
        let g = env("io : {cap} Top\nh : Box {io} all (a: Top) -> Top\nk : Box {io} all [X <: Top] -> Top\nu : Top");
        let (t, tt) = infer(&g, &tm("h u"), &mut Fuel::default()).unwrap();
        assert!(t.alpha_eq(&tm("let h' = ({io} unbox h) in h' u")), "{t}");
        assert_eq!(tt, ty("Top"));
        let (t, _) = infer(&g, &tm("k [Top]"), &mut Fuel::default()).unwrap();
        assert!(
            t.alpha_eq(&tm("let k' = ({io} unbox k) in k' [Top]")),
            "{t}"
        );
    }

    #[test]
    fn well_typed_terms_are_returned_unchanged() {
        let g = env("io : {cap} Top\nf : {io} all (a: {io} Top) -> {a} Top\nb : Box {io} Top\np : all [X <: Top] -> Top");
        for src in [
            "f io",
            "let k = box io in k",
            "fun (z: {io} Top) f z",
            "let q = {io} unbox b in f q",
            "p [Top]",
            "tfun [X <: Top] fun (a: X) a",
        ] {
            let t = tm(src);
            let expected = typecheck(&g, &t, &mut Fuel::default()).unwrap();
            let (t2, got) = infer(&g, &t, &mut Fuel::default()).unwrap();
            assert!(t2.alpha_eq(&t), "{src} became {t2}");
            assert!(got.alpha_eq(&expected), "{src}: {got} vs {expected}");
        }
    }
}
