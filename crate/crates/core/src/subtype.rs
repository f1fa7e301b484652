//! Widening and algorithmic subtyping.

use crate::alpha::AlphaEq;
use crate::checker::{with_checker, Checker, Fuel};
use crate::error::{TResult, TypeError};
use crate::subcapture::subcapture;
use crate::subst::Subst;
use crate::syntax::{CaptureSet, Env, Shape, TVar, Type, Var};

/// Follows `X <: Y` chains until the bound is not a type variable.
pub fn widen_tvar(env: &Env, x: &TVar) -> TResult<Shape> {
    let mut cur = x.clone();
    for _ in 0..=env.len() {
        match env.lookup_tvar(&cur) {
            None => return Err(TypeError::UnboundTypeVariable(format!("{cur:?}"))),
            Some(Shape::TVar(y)) => cur = y.clone(),
            Some(s) => return Ok(s.clone()),
        }
    }
    Err(TypeError::IllFormedType {
        var: format!("{x:?}"),
        detail: "has a cyclic bound".into(),
    })
}

/// `{x} S` where `x : C S` is bound in `env`.
pub fn var_type(env: &Env, x: &Var) -> TResult<Type> {
    match env.lookup(x) {
        Some(t) => Ok(Type::new(CaptureSet::singleton(x.clone()), t.shape.clone())),
        None => Err(TypeError::UnboundVariable(format!("{x:?}"))),
    }
}

/// [`var_type`], widening a type-variable shape to its concrete bound.
pub fn widen_var(env: &Env, x: &Var) -> TResult<Type> {
    let t = var_type(env, x)?;
    match &t.shape {
        Shape::TVar(a) => Ok(Type::new(t.captures, widen_tvar(env, a)?)),
        _ => Ok(t),
    }
}

pub fn subtype(env: &Env, t: &Type, u: &Type, fuel: &mut Fuel) -> TResult<bool> {
    with_checker(fuel, &(env, t, u), |ck| ck.subtype(env, t, u))
}

pub fn subtype_capt(env: &Env, t: &Type, u: &Type, fuel: &mut Fuel) -> TResult<bool> {
    with_checker(fuel, &(env, t, u), |ck| ck.subtype_capt(env, t, u))
}

pub fn subshape(env: &Env, s: &Shape, u: &Shape, fuel: &mut Fuel) -> TResult<bool> {
    with_checker(fuel, &(env, s, u), |ck| ck.subshape(env, s, u))
}

impl Checker {
    /// A binder name for going under two binders at once: the right-hand
    /// one when it is not already bound, otherwise a fresh one.
    pub(crate) fn common_var(&mut self, env: &Env, left: &Var, right: &Var) -> Var {
        if left == right && !env.contains_var(right) {
            right.clone()
        } else {
            self.fresh_var(right)
        }
    }

    pub(crate) fn common_tvar(&mut self, env: &Env, left: &TVar, right: &TVar) -> TVar {
        if left == right && !env.contains_tvar(right) {
            right.clone()
        } else {
            self.fresh_tvar(right)
        }
    }

    pub(crate) fn rename_type(&mut self, t: &Type, from: &Var, to: &Var) -> Type {
        if from == to {
            return t.clone();
        }
        Subst::Var(from.clone(), to.clone()).type_(t, self.names())
    }

    pub(crate) fn rename_type_tvar(&mut self, t: &Type, from: &TVar, to: &TVar) -> Type {
        if from == to {
            return t.clone();
        }
        Subst::TVar(from.clone(), Shape::TVar(to.clone())).type_(t, self.names())
    }

    pub fn subtype(&mut self, env: &Env, t: &Type, u: &Type) -> TResult<bool> {
        self.tick()?;
        if !subcapture(env, &t.captures, &u.captures) {
            return Ok(false);
        }
        self.subshape(env, &t.shape, &u.shape)
    }

    pub fn subshape(&mut self, env: &Env, s: &Shape, u: &Shape) -> TResult<bool> {
        self.tick()?;
        match (s, u) {
            (Shape::TVar(a), Shape::TVar(b)) if a == b => Ok(true),
            (_, Shape::Top) => Ok(true),
            (Shape::TVar(a), _) => match env.lookup_tvar(a) {
                Some(bound) => {
                    let bound = bound.clone();
                    self.subshape(env, &bound, u)
                }
                None => Err(TypeError::UnboundTypeVariable(format!("{a:?}"))),
            },
            (Shape::Fun(x1, p1, r1), Shape::Fun(x2, p2, r2)) => {
                if !self.subtype(env, p2, p1)? {
                    return Ok(false);
                }
                let x = self.common_var(env, x1, x2);
                let r1 = self.rename_type(r1, x1, &x);
                let r2 = self.rename_type(r2, x2, &x);
                self.subtype(&env.with_var(x, (**p2).clone()), &r1, &r2)
            }
            (Shape::TFun(a1, b1, r1), Shape::TFun(a2, b2, r2)) => {
                if !self.subshape(env, b2, b1)? {
                    return Ok(false);
                }
                let a = self.common_tvar(env, a1, a2);
                let r1 = self.rename_type_tvar(r1, a1, &a);
                let r2 = self.rename_type_tvar(r2, a2, &a);
                self.subtype(&env.with_tvar(a, (**b2).clone()), &r1, &r2)
            }
            (Shape::Boxed(t1), Shape::Boxed(t2)) => self.subtype(env, t1, t2),
            _ => Ok(false),
        }
    }

    /// Subtyping where every structural rule carries its own subcapture
    /// premise instead of a separate capturing-type rule.
    pub fn subtype_capt(&mut self, env: &Env, t: &Type, u: &Type) -> TResult<bool> {
        self.tick()?;
        let caps = || subcapture(env, &t.captures, &u.captures);
        match (&t.shape, &u.shape) {
            (s1, s2) if s1.alpha_eq(s2) => Ok(caps()),
            (_, Shape::Top) => Ok(caps()),
            (Shape::TVar(a), _) => match env.lookup_tvar(a) {
                Some(bound) => {
                    let widened = Type::new(t.captures.clone(), bound.clone());
                    self.subtype_capt(env, &widened, u)
                }
                None => Err(TypeError::UnboundTypeVariable(format!("{a:?}"))),
            },
            (Shape::Boxed(t1), Shape::Boxed(t2)) => Ok(self.subtype_capt(env, t1, t2)? && caps()),
            (Shape::Fun(x1, p1, r1), Shape::Fun(x2, p2, r2)) => {
                if !self.subtype_capt(env, p2, p1)? {
                    return Ok(false);
                }
                let x = self.common_var(env, x1, x2);
                let r1 = self.rename_type(r1, x1, &x);
                let r2 = self.rename_type(r2, x2, &x);
                Ok(self.subtype_capt(&env.with_var(x, (**p2).clone()), &r1, &r2)? && caps())
            }
            (Shape::TFun(a1, b1, r1), Shape::TFun(a2, b2, r2)) => {
                if !self.subtype_capt(
                    env,
                    &Type::pure((**b2).clone()),
                    &Type::pure((**b1).clone()),
                )? {
                    return Ok(false);
                }
                let a = self.common_tvar(env, a1, a2);
                let r1 = self.rename_type_tvar(r1, a1, &a);
                let r2 = self.rename_type_tvar(r2, a2, &a);
                Ok(self.subtype_capt(&env.with_tvar(a, (**b2).clone()), &r1, &r2)? && caps())
            }
            _ => Ok(false),
        }
    }
}
