//! Free variables and captured variables.

use std::collections::BTreeSet;

use crate::syntax::{CaptureSet, Shape, TVar, Term, Type, Var};

/// Free term and type variables of a type.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FreeVars {
    pub vars: BTreeSet<Var>,
    pub tvars: BTreeSet<TVar>,
}

impl FreeVars {
    pub fn contains_var(&self, x: &Var) -> bool {
        self.vars.contains(x)
    }

    pub fn contains_tvar(&self, x: &TVar) -> bool {
        self.tvars.contains(x)
    }
}

pub fn fv_type(t: &Type) -> FreeVars {
    let mut out = FreeVars::default();
    collect_type(t, &mut out);
    out
}

pub fn fv_shape(s: &Shape) -> FreeVars {
    let mut out = FreeVars::default();
    collect_shape(s, &mut out);
    out
}

fn collect_set(c: &CaptureSet, out: &mut FreeVars) {
    out.vars.extend(c.vars().cloned());
}

fn collect_type(t: &Type, out: &mut FreeVars) {
    collect_set(&t.captures, out);
    collect_shape(&t.shape, out);
}

fn collect_shape(s: &Shape, out: &mut FreeVars) {
    match s {
        Shape::TVar(x) => {
            out.tvars.insert(x.clone());
        }
        Shape::Top => {}
        Shape::Fun(x, p, r) => {
            collect_type(p, out);
            let mut inner = FreeVars::default();
            collect_type(r, &mut inner);
            inner.vars.remove(x);
            out.vars.extend(inner.vars);
            out.tvars.extend(inner.tvars);
        }
        Shape::TFun(x, b, r) => {
            collect_shape(b, out);
            let mut inner = FreeVars::default();
            collect_type(r, &mut inner);
            inner.tvars.remove(x);
            out.vars.extend(inner.vars);
            out.tvars.extend(inner.tvars);
        }
        Shape::Boxed(t) => collect_type(t, out),
    }
}

/// Free term variables of a term, including those mentioned in type
/// annotations and unbox sets. Boxing does not hide anything here.
pub fn fv(t: &Term) -> BTreeSet<Var> {
    fv_all(t).vars
}

/// Free term and type variables of a term.
pub fn fv_all(t: &Term) -> FreeVars {
    let mut out = FreeVars::default();
    collect_term(t, &mut out);
    out
}

fn collect_term(t: &Term, out: &mut FreeVars) {
    match t {
        Term::Var(x) | Term::Box(x) => {
            out.vars.insert(x.clone());
        }
        Term::App(x, y) => {
            out.vars.insert(x.clone());
            out.vars.insert(y.clone());
        }
        Term::TApp(x, s) => {
            out.vars.insert(x.clone());
            collect_shape(s, out);
        }
        Term::Unbox(c, x) => {
            collect_set(c, out);
            out.vars.insert(x.clone());
        }
        Term::Abs(x, ty, body) => {
            collect_type(ty, out);
            let mut inner = FreeVars::default();
            collect_term(body, &mut inner);
            inner.vars.remove(x);
            out.vars.extend(inner.vars);
            out.tvars.extend(inner.tvars);
        }
        Term::TAbs(x, s, body) => {
            collect_shape(s, out);
            let mut inner = FreeVars::default();
            collect_term(body, &mut inner);
            inner.tvars.remove(x);
            out.vars.extend(inner.vars);
            out.tvars.extend(inner.tvars);
        }
        Term::Let(x, s, body) => {
            collect_term(s, out);
            let mut inner = FreeVars::default();
            collect_term(body, &mut inner);
            inner.vars.remove(x);
            out.vars.extend(inner.vars);
            out.tvars.extend(inner.tvars);
        }
    }
}

/// Which let-bound terms may be dropped from `cv` when unused.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LetHiding {
    /// Variables and values.
    #[default]
    Answers,
    /// Values only; a let-bound variable is always counted.
    ValuesOnly,
}

/// Captured variables of a term. Boxed variables are hidden, unboxing
/// charges the unbox set, and an unused let-bound answer does not count.
pub fn cv(t: &Term) -> CaptureSet {
    cv_with(t, LetHiding::Answers)
}

pub fn cv_with(t: &Term, hiding: LetHiding) -> CaptureSet {
    match t {
        Term::Var(x) => CaptureSet::singleton(x.clone()),
        Term::Box(_) => CaptureSet::empty(),
        Term::Unbox(c, x) => {
            let mut out = c.clone();
            out.insert(x.clone());
            out
        }
        Term::App(x, y) => CaptureSet::from_vars([x.clone(), y.clone()]),
        Term::TApp(x, _) => CaptureSet::singleton(x.clone()),
        Term::Abs(x, _, body) => cv_with(body, hiding).without(x),
        Term::TAbs(_, _, body) => cv_with(body, hiding),
        Term::Let(x, s, body) => {
            let body_cv = cv_with(body, hiding);
            let hidden = match hiding {
                LetHiding::Answers => s.kind().is_answer(),
                LetHiding::ValuesOnly => matches!(s.kind(), crate::syntax::Kind::Val),
            };
            if hidden && !body_cv.contains(x) {
                body_cv
            } else {
                cv_with(s, hiding).union(&body_cv.without(x))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_term, parse_type};

    fn set(names: &[&str]) -> CaptureSet {
        names.iter().map(|n| Var::new(n)).collect()
    }

    fn cv_of(src: &str) -> CaptureSet {
        cv(&parse_term(src).unwrap())
    }

    #[test]
    fn box_hides_and_unbox_charges() {
        assert_eq!(cv_of("box x"), CaptureSet::empty());
        assert_eq!(cv_of("{io} unbox x"), set(&["x", "io"]));
        assert_eq!(cv_of("fun (z: Top) f z"), set(&["f"]));
    }

    #[test]
    fn unused_let_bound_answer_is_hidden() {
        assert_eq!(
            cv_of("let y = (fun (z: Top) z) in box y"),
            CaptureSet::empty()
        );
        assert_eq!(cv_of("let y = x in box y"), CaptureSet::empty());
        assert_eq!(
            cv_with(
                &parse_term("let y = x in box y").unwrap(),
                LetHiding::ValuesOnly
            ),
            set(&["x"])
        );
        assert_eq!(cv_of("let y = f x in box y"), set(&["f", "x"]));
        assert_eq!(cv_of("let y = x in y"), set(&["x"]));
    }

    #[test]
    fn free_variables_see_through_boxes() {
        assert_eq!(
            fv(&parse_term("box x").unwrap()),
            [Var::new("x")].into_iter().collect()
        );
        assert_eq!(
            fv(&parse_term("let y = x in y").unwrap()),
            [Var::new("x")].into_iter().collect()
        );
        let f = fv_type(&parse_type("{x} all (z: {y} Top) -> Top").unwrap());
        assert_eq!(f.vars, [Var::new("x"), Var::new("y")].into_iter().collect());
        let g = fv_type(&parse_type("all (z: Top) -> {z, w} X").unwrap());
        assert_eq!(g.vars, [Var::new("w")].into_iter().collect());
        assert_eq!(g.tvars, [TVar::new("X")].into_iter().collect());
    }

    #[test]
    fn cv_is_within_fv() {
        for src in [
            "let a = {io} unbox b in fun (z: Top) a z",
            "tfun [X <: Top] let y = f[X] in box y",
            "let k = box c in let u = f k in u",
        ] {
            let t = parse_term(src).unwrap();
            let f = fv(&t);
            assert!(cv(&t).vars().all(|x| f.contains(x)), "{src}");
        }
    }
}
