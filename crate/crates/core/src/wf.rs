//! Well-formedness of types and environments, and the simple-formed check.

use std::collections::BTreeSet;

use crate::error::{TResult, TypeError};
use crate::syntax::{Binding, CaptureSet, Env, Shape, Type};

fn ill(var: impl std::fmt::Debug, detail: &str) -> TypeError {
    TypeError::IllFormedType {
        var: format!("{var:?}"),
        detail: detail.to_string(),
    }
}

fn wf_set(env: &Env, c: &CaptureSet) -> TResult<()> {
    match c.vars().find(|x| !env.contains_var(x)) {
        Some(x) => Err(ill(x, "is not bound")),
        None => Ok(()),
    }
}

/// Every capture set mentions only bound variables or `cap`, and every
/// type variable is bound.
pub fn wf_type(env: &Env, t: &Type) -> TResult<()> {
    wf_set(env, &t.captures)?;
    wf_shape(env, &t.shape)
}

pub fn wf_shape(env: &Env, s: &Shape) -> TResult<()> {
    match s {
        Shape::TVar(x) => {
            if env.contains_tvar(x) {
                Ok(())
            } else {
                Err(ill(x, "is not bound"))
            }
        }
        Shape::Top => Ok(()),
        Shape::Boxed(t) => wf_type(env, t),
        Shape::Fun(x, p, r) => {
            wf_type(env, p)?;
            wf_type(&env.with_var(x.clone(), (**p).clone()), r)
        }
        Shape::TFun(x, b, r) => {
            wf_shape(env, b)?;
            wf_type(&env.with_tvar(x.clone(), (**b).clone()), r)
        }
    }
}

/// Each binding is well-formed in its prefix and no name is bound twice.
pub fn wf_env(env: &Env) -> TResult<()> {
    let mut prefix = Env::new();
    let mut vars = BTreeSet::new();
    let mut tvars = BTreeSet::new();
    for b in env.bindings() {
        match b {
            Binding::Term(x, t) => {
                wf_type(&prefix, t)?;
                if !vars.insert(x.clone()) {
                    return Err(ill(x, "is bound twice"));
                }
            }
            Binding::Type(x, s) => {
                wf_shape(&prefix, s)?;
                if !tvars.insert(x.clone()) {
                    return Err(ill(x, "is bound twice"));
                }
            }
        }
        prefix.push(b.clone());
    }
    Ok(())
}

/// A shape whose components are simple-formed, or `C S` with `S` not boxed
/// and simple-formed. An empty capture set makes `C S` a shape.
pub fn is_simple_formed(t: &Type) -> bool {
    if !t.captures.is_empty() && matches!(t.shape, Shape::Boxed(_)) {
        return false;
    }
    shape_simple_formed(&t.shape)
}

pub fn shape_simple_formed(s: &Shape) -> bool {
    match s {
        Shape::TVar(_) | Shape::Top => true,
        Shape::Boxed(t) => is_simple_formed(t),
        Shape::Fun(_, p, r) => is_simple_formed(p) && is_simple_formed(r),
        Shape::TFun(_, b, r) => shape_simple_formed(b) && is_simple_formed(r),
    }
}

pub fn env_simple_formed(env: &Env) -> bool {
    env.bindings().iter().all(|b| match b {
        Binding::Term(_, t) => is_simple_formed(t),
        Binding::Type(_, s) => shape_simple_formed(s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_env, parse_type};

    #[test]
    fn type_well_formedness() {
        let env = parse_env("io : {cap} Top").unwrap();
        assert!(wf_type(&env, &parse_type("{io} Top").unwrap()).is_ok());
        assert!(matches!(
            wf_type(&Env::new(), &parse_type("{z} Top").unwrap()),
            Err(TypeError::IllFormedType { var, .. }) if var == "z"
        ));
        assert!(wf_type(&Env::new(), &parse_type("{cap} Top").unwrap()).is_ok());
        assert!(wf_type(&Env::new(), &parse_type("all (z: Top) -> {z} Top").unwrap()).is_ok());
        assert!(wf_type(&Env::new(), &parse_type("X").unwrap()).is_err());
        assert!(wf_type(
            &Env::new(),
            &parse_type("all [X <: Top] -> all (a: X) -> {a} X").unwrap()
        )
        .is_ok());
    }

    #[test]
    fn env_well_formedness() {
        assert!(
            wf_env(&parse_env("io : {cap} Top\nf : {io} all (z: Top) -> Top").unwrap()).is_ok()
        );
        assert!(wf_env(&parse_env("f : {io} Top\nio : {cap} Top").unwrap()).is_err());
        assert!(wf_env(&parse_env("a : Top\na : Top").unwrap()).is_err());
    }

    #[test]
    fn simple_formed() {
        assert!(is_simple_formed(&parse_type("{x} Top").unwrap()));
        assert!(!is_simple_formed(
            &parse_type("Box {x} Box {y} Top").unwrap()
        ));
        assert!(is_simple_formed(
            &parse_type("{x} all (z: Box {y} Top) -> Top").unwrap()
        ));
        assert!(is_simple_formed(&parse_type("Box Box {y} Top").unwrap()));
    }
}
