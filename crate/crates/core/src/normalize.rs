//! Term normalization: let-compaction and eta-compaction, bottom-up.
//!
//! ```text
//! let y = C unbox x in box y   ~>  x
//! let y = t in y               ~>  t
//! let y = x in t               ~>  t[y := x]
//! fun (z: T) x z               ~>  x        (x != z)
//! tfun [X <: S] x [X]          ~>  x
//! ```
//!
//! At most one let rule fires per node, tried in the order above.

use crate::subst::Subst;
use crate::syntax::{NameSupply, Shape, Term, Var};

pub fn normalize(t: &Term) -> Term {
    let mut names = NameSupply::above(t);
    normalize_with(t, &mut names)
}

pub(crate) fn normalize_with(t: &Term, names: &mut NameSupply) -> Term {
    match t {
        Term::Let(x, s, body) => {
            let s = normalize_with(s, names);
            let body = normalize_with(body, names);
            compact_let(x, s, body, names)
        }
        Term::Abs(x, ty, body) => {
            let body = normalize_with(body, names);
            match &body {
                Term::App(f, a) if a == x && f != x => Term::Var(f.clone()),
                _ => Term::abs(x.clone(), ty.clone(), body),
            }
        }
        Term::TAbs(a, bound, body) => {
            let body = normalize_with(body, names);
            match &body {
                Term::TApp(f, Shape::TVar(b)) if b == a => Term::Var(f.clone()),
                _ => Term::tabs(a.clone(), bound.clone(), body),
            }
        }
        _ => t.clone(),
    }
}

fn compact_let(y: &Var, s: Term, body: Term, names: &mut NameSupply) -> Term {
    if let (Term::Unbox(_, x), Term::Box(b)) = (&s, &body) {
        if b == y {
            return Term::Var(x.clone());
        }
    }
    if matches!(&body, Term::Var(b) if b == y) {
        return s;
    }
    if let Term::Var(x) = &s {
        return Subst::Var(y.clone(), x.clone()).term(&body, names);
    }
    Term::let_(y.clone(), s, body)
}
