//! Erasure to System F<: and a small algorithmic checker for the image.
//!
//! Erased types reuse [`Shape`] with the invariant that no capture set is
//! non-empty and no box remains, so substitution, alpha-equivalence, parsing
//! and printing all carry over.

use std::fmt;

use crate::checker::{with_checker, Checker, Fuel};
use crate::error::{TResult, TypeError};
use crate::subst::Subst;
use crate::syntax::{Binding, CaptureSet, Env, Shape, Term, Type, Var};

/// A type with no capture sets and no boxes.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct FType(Shape);

/// A term with no `box`/`unbox` and only erased annotations.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct FTerm(Term);

/// An environment whose bindings are all erased.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct FEnv(Env);

impl FType {
    pub fn shape(&self) -> &Shape {
        &self.0
    }

    pub fn top() -> Self {
        FType(Shape::Top)
    }
}

impl FTerm {
    pub fn term(&self) -> &Term {
        &self.0
    }
}

impl FEnv {
    pub fn env(&self) -> &Env {
        &self.0
    }
}

impl From<FType> for Type {
    fn from(t: FType) -> Type {
        Type::pure(t.0)
    }
}

impl From<FTerm> for Term {
    fn from(t: FTerm) -> Term {
        t.0
    }
}

impl From<FEnv> for Env {
    fn from(e: FEnv) -> Env {
        e.0
    }
}

impl fmt::Display for FType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for FTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for FEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

fn strip_shape(s: &Shape) -> Shape {
    match s {
        Shape::TVar(_) | Shape::Top => s.clone(),
        Shape::Boxed(t) => strip_shape(&t.shape),
        Shape::Fun(x, p, r) => Type::fun(x.clone(), strip_type(p), strip_type(r)),
        Shape::TFun(x, b, r) => Type::tfun(x.clone(), strip_shape(b), strip_type(r)),
    }
}

fn strip_type(t: &Type) -> Type {
    Type::pure(strip_shape(&t.shape))
}

pub fn erase(t: &Type) -> FType {
    FType(strip_shape(&t.shape))
}

pub fn erase_shape(s: &Shape) -> FType {
    FType(strip_shape(s))
}

/// `box x` and `C unbox x` both become `x`; everything else is structural.
pub fn erase_term(t: &Term) -> FTerm {
    fn go(t: &Term) -> Term {
        match t {
            Term::Var(_) | Term::App(..) => t.clone(),
            Term::Box(x) | Term::Unbox(_, x) => Term::Var(x.clone()),
            Term::TApp(f, s) => Term::TApp(f.clone(), strip_shape(s)),
            Term::Abs(x, ty, body) => Term::abs(x.clone(), strip_type(ty), go(body)),
            Term::TAbs(x, s, body) => Term::tabs(x.clone(), strip_shape(s), go(body)),
            Term::Let(x, s, body) => Term::let_(x.clone(), go(s), go(body)),
        }
    }
    FTerm(go(t))
}

pub fn erase_env(env: &Env) -> FEnv {
    FEnv(Env::from_bindings(
        env.bindings()
            .iter()
            .map(|b| match b {
                Binding::Term(x, t) => Binding::Term(x.clone(), strip_type(t)),
                Binding::Type(x, s) => Binding::Type(x.clone(), strip_shape(s)),
            })
            .collect(),
    ))
}

pub fn fsub_subtype(env: &FEnv, t: &FType, u: &FType, fuel: &mut Fuel) -> TResult<bool> {
    with_checker(fuel, &(&env.0, (&t.0, &u.0)), |ck| {
        ck.fsub_subtype(&env.0, &t.0, &u.0)
    })
}

pub fn fsub_typecheck(env: &FEnv, t: &FTerm, fuel: &mut Fuel) -> TResult<FType> {
    with_checker(fuel, &(&env.0, &t.0), |ck| {
        ck.fsub_typecheck(&env.0, &t.0).map(FType)
    })
}

fn unbound_tvar(x: &impl fmt::Debug) -> TypeError {
    TypeError::UnboundTypeVariable(format!("{x:?}"))
}

impl Checker {
    /// Promotes through type-variable bounds until a non-variable shape.
    fn fsub_widen(&mut self, env: &Env, s: &Shape) -> TResult<Shape> {
        let mut s = s.clone();
        let mut steps = 0;
        while let Shape::TVar(x) = &s {
            steps += 1;
            if steps > env.len() {
                break;
            }
            s = env.lookup_tvar(x).cloned().ok_or_else(|| unbound_tvar(x))?;
        }
        Ok(s)
    }

    pub fn fsub_subtype(&mut self, env: &Env, t: &Shape, u: &Shape) -> TResult<bool> {
        self.tick()?;
        match (t, u) {
            (Shape::TVar(a), Shape::TVar(b)) if a == b => Ok(true),
            (_, Shape::Top) => Ok(true),
            (Shape::TVar(a), _) => {
                let bound = env.lookup_tvar(a).cloned().ok_or_else(|| unbound_tvar(a))?;
                self.fsub_subtype(env, &bound, u)
            }
            (Shape::Fun(x1, p1, r1), Shape::Fun(x2, p2, r2)) => {
                if !self.fsub_subtype(env, &p2.shape, &p1.shape)? {
                    return Ok(false);
                }
                let x = self.common_var(env, x1, x2);
                let env2 = env.with_var(x, (**p2).clone());
                self.fsub_subtype(&env2, &r1.shape, &r2.shape)
            }
            (Shape::TFun(a1, b1, r1), Shape::TFun(a2, b2, r2)) => {
                if !self.fsub_subtype(env, b2, b1)? {
                    return Ok(false);
                }
                let a = self.common_tvar(env, a1, a2);
                let r1 = self.rename_type_tvar(r1, a1, &a);
                let r2 = self.rename_type_tvar(r2, a2, &a);
                let env2 = env.with_tvar(a, (**b2).clone());
                self.fsub_subtype(&env2, &r1.shape, &r2.shape)
            }
            _ => Ok(false),
        }
    }

    fn fsub_var(&self, env: &Env, x: &Var) -> TResult<Shape> {
        env.lookup(x)
            .map(|t| t.shape.clone())
            .ok_or_else(|| TypeError::UnboundVariable(format!("{x:?}")))
    }

    pub fn fsub_typecheck(&mut self, env: &Env, t: &Term) -> TResult<Shape> {
        self.tick()?;
        match t {
            Term::Var(x) => self.fsub_var(env, x),
            Term::Abs(x, param, body) => {
                let (x, body) = self.unshadow(env, x, body);
                let result = self.fsub_typecheck(&env.with_var(x.clone(), param.clone()), &body)?;
                Ok(Type::fun(x, param.clone(), Type::pure(result)))
            }
            Term::TAbs(a, bound, body) => {
                let (a, body) = self.unshadow_tvar(env, a, body);
                let result =
                    self.fsub_typecheck(&env.with_tvar(a.clone(), bound.clone()), &body)?;
                Ok(Type::tfun(a, bound.clone(), Type::pure(result)))
            }
            Term::App(f, y) => {
                let head = self.fsub_var(env, f)?;
                let head = self.fsub_widen(env, &head)?;
                let Shape::Fun(_, param, result) = &head else {
                    return Err(TypeError::NotAFunction {
                        rule: "fs-app",
                        found: Type::pure(head),
                    });
                };
                let arg = self.fsub_var(env, y)?;
                if !self.fsub_subtype(env, &arg, &param.shape)? {
                    return Err(TypeError::SubtypeFailure {
                        rule: "fs-app",
                        actual: Type::pure(arg),
                        expected: (**param).clone(),
                    });
                }
                Ok(result.shape.clone())
            }
            Term::TApp(f, arg) => {
                let head = self.fsub_var(env, f)?;
                let head = self.fsub_widen(env, &head)?;
                let Shape::TFun(a, bound, result) = &head else {
                    return Err(TypeError::NotATypeFunction {
                        rule: "fs-tapp",
                        found: Type::pure(head),
                    });
                };
                if !self.fsub_subtype(env, arg, bound)? {
                    return Err(TypeError::SubtypeFailure {
                        rule: "fs-tapp",
                        actual: Type::pure(arg.clone()),
                        expected: Type::pure((**bound).clone()),
                    });
                }
                Ok(Subst::TVar(a.clone(), arg.clone())
                    .type_(result, self.names())
                    .shape)
            }
            Term::Let(x, bound, body) => {
                let bt = self.fsub_typecheck(env, bound)?;
                let (x, body) = self.unshadow(env, x, body);
                self.fsub_typecheck(&env.with_var(x, Type::pure(bt)), &body)
            }
            Term::Box(_) | Term::Unbox(..) => Err(TypeError::IllFormedType {
                var: format!("{t}"),
                detail: "is not an erased term".into(),
            }),
        }
    }
}

/// True when `t` has the shape of an erased type: no captures, no boxes.
pub fn is_erased(t: &Type) -> bool {
    fn shape(s: &Shape) -> bool {
        match s {
            Shape::TVar(_) | Shape::Top => true,
            Shape::Boxed(_) => false,
            Shape::Fun(_, p, r) => is_erased(p) && is_erased(r),
            Shape::TFun(_, b, r) => shape(b) && is_erased(r),
        }
    }
    t.captures == CaptureSet::empty() && shape(&t.shape)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_env, parse_shape, parse_term, parse_type};
    use crate::typing::typecheck;
    use proptest::prelude::*;

    fn fty(src: &str) -> FType {
        erase(&parse_type(src).unwrap())
    }

    fn fenv(src: &str) -> FEnv {
        erase_env(&parse_env(src).unwrap())
    }

    fn sub(env: &FEnv, t: &str, u: &str) -> TResult<bool> {
        fsub_subtype(env, &fty(t), &fty(u), &mut Fuel::default())
    }

    #[test]
    fn type_erasure() {
        assert_eq!(
            fty("{io} all (z: Box {x} Top) -> Top"),
            fty("all (z: Top) -> Top")
        );
        assert_eq!(fty("X"), FType(parse_shape("X").unwrap()));
        assert_eq!(
            fty("{cap} Box {a} all [X <: Box Top] -> {a} X").to_string(),
            "all [X <: Top] -> X"
        );
    }

    #[test]
    fn term_erasure() {
        let t = erase_term(&parse_term("let y = box x in y").unwrap());
        assert_eq!(t.term(), &parse_term("let y = x in y").unwrap());
        let t = erase_term(
            &parse_term("fun (a: {io} Box {io} Top) let b = {io} unbox a in f [Box X]").unwrap(),
        );
        assert_eq!(
            t.term(),
            &parse_term("fun (a: Top) let b = a in f [X]").unwrap()
        );
    }

    #[test]
    fn subtyping() {
        let g = fenv("X <: Top");
        assert_eq!(sub(&g, "all (a: Top) -> Top", "Top"), Ok(true));
        assert_eq!(sub(&g, "X", "X"), Ok(true));
        assert_eq!(sub(&g, "all (z: Top) -> X", "all (z: X) -> X"), Ok(true));
        assert_eq!(sub(&g, "all (z: X) -> X", "all (z: Top) -> X"), Ok(false));
        assert_eq!(sub(&g, "Top", "X"), Ok(false));
        assert_eq!(
            sub(&g, "all [Y <: Top] -> Y", "all [Z <: X] -> Z"),
            Ok(true)
        );
    }

    #[test]
    fn hostile_bounds_run_out_of_fuel() {
        let g =
            fenv("X0 <: all [X1 <: Top] -> all [Y <: all [X2 <: X1] -> all [Y <: X2] -> Y] -> Y");
        let r = sub(&g, "X0", "all [X1 <: X0] -> all [Y <: X1] -> Y");
        assert_eq!(r, Err(TypeError::FuelExhausted));
    }

    #[test]
    fn typechecking() {
        let g = fenv("X <: Top\nx : X\nf : all (a: X) -> X\np : all [Y <: X] -> all (b: Y) -> Y");
        let check = |src: &str| {
            fsub_typecheck(
                &g,
                &erase_term(&parse_term(src).unwrap()),
                &mut Fuel::default(),
            )
        };
        assert_eq!(check("x").unwrap(), FType(parse_shape("X").unwrap()));
        assert_eq!(check("fun (z: Top) z").unwrap(), fty("all (z: Top) -> Top"));
        assert_eq!(check("f x").unwrap(), fty("X"));
        assert_eq!(check("let q = p [X] in q x").unwrap(), fty("X"));
        assert_eq!(
            check("let y = x in fun (u: Top) y").unwrap(),
            fty("all (u: Top) -> X")
        );
        assert!(matches!(check("x x"), Err(TypeError::NotAFunction { .. })));
        assert!(matches!(
            check("f f"),
            Err(TypeError::SubtypeFailure { .. })
        ));
    }

    #[test]
    fn erased_image_of_well_typed_terms_checks() {
        let src = "io : {cap} Top\nb : Box {io} Top\nh : Box {io} all (a: {io} Top) -> {a} Top\nX <: Box {io} Top";
        let g = parse_env(src).unwrap();
        for t in [
            "let k = {io} unbox h in k io",
            "let c = box io in c",
            "tfun [Y <: X] fun (y: Y) y",
            "{io} unbox b",
        ] {
            let t = parse_term(t).unwrap();
            typecheck(&g, &t, &mut Fuel::default()).unwrap();
            fsub_typecheck(&erase_env(&g), &erase_term(&t), &mut Fuel::default()).unwrap();
        }
    }

    fn arb_type() -> impl Strategy<Value = Type> {
        let leaf = prop_oneof![
            Just("Top"),
            Just("X"),
            Just("{a} Top"),
            Just("Box {a} X"),
            Just("{cap} Top")
        ]
        .prop_map(|s| parse_type(s).unwrap());
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(p, r)| Type::pure(Type::fun(
                    Var::new("z"),
                    p,
                    r
                ))),
                inner
                    .clone()
                    .prop_map(|t| Type::new(CaptureSet::singleton(Var::new("a")), Type::boxed(t))),
                (inner.clone(), inner).prop_map(|(b, r)| {
                    Type::pure(Type::tfun(crate::syntax::TVar::new("Y"), b.shape, r))
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn erasure_is_idempotent(t in arb_type()) {
            let once = erase(&t);
            prop_assert!(is_erased(&Type::from(once.clone())));
            prop_assert_eq!(erase(&Type::from(once.clone())), once);
        }
    }
}
