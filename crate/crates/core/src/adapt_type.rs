//! Box inference on types only. Mirrors [`crate::adapt`] rule for rule but
//! never builds the elaborated term: adaptation reports what kind of term it
//! would produce and which variables that term would capture, with a hole
//! standing for the variable being adapted.

use crate::adapt::{boxed_parts, dispatch, tvar_bound, AdaptRule};
use crate::checker::{with_checker, Checker, Fuel, Options, TFunLeak};
use crate::error::{TResult, TypeError};
use crate::subcapture::subcapture;
use crate::subst::Subst;
use crate::subtype::{var_type, widen_var};
use crate::syntax::{kind_of, CaptureSet, Env, HoledCaptureSet, Kind, Shape, Term, Type, Var};
use crate::wf::{wf_shape, wf_type};

/// What adapting a variable would produce: the syntactic kind of the
/// elaborated term and its captured variables, the input variable as a hole.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdaptResult {
    pub kind: Kind,
    pub leak: HoledCaptureSet,
}

impl AdaptResult {
    fn identity() -> Self {
        AdaptResult {
            kind: Kind::Var,
            leak: HoledCaptureSet::hole(),
        }
    }

    fn term(leak: HoledCaptureSet) -> Self {
        AdaptResult {
            kind: Kind::Trm,
            leak,
        }
    }
}

pub fn adapt_sub_t(
    env: &Env,
    actual: &Type,
    expected: &Type,
    fuel: &mut Fuel,
) -> TResult<AdaptResult> {
    adapt_sub_t_with(env, actual, expected, fuel, Options::default())
}

pub fn adapt_sub_t_with(
    env: &Env,
    actual: &Type,
    expected: &Type,
    fuel: &mut Fuel,
    options: Options,
) -> TResult<AdaptResult> {
    with_checker(fuel, &(env, (actual, expected)), |ck| {
        ck.options = options;
        ck.adapt_sub_t(env, actual, expected)
    })
}

/// Adapts the bound variable `x` to `expected`; the leak comes back filled.
pub fn box_adapt_t(
    env: &Env,
    x: &Var,
    expected: &Type,
    fuel: &mut Fuel,
) -> TResult<(Kind, CaptureSet)> {
    with_checker(fuel, &(env, x, expected), |ck| {
        ck.box_adapt_t(env, x, expected)
    })
}

pub fn unbox_var_t(env: &Env, x: &Var) -> TResult<(Type, CaptureSet)> {
    let t = widen_var(env, x)?;
    let own = CaptureSet::singleton(x.clone());
    if let Shape::Boxed(inner) = &t.shape {
        if env.covers(&inner.captures) {
            return Ok(((**inner).clone(), inner.captures.union(&own)));
        }
    }
    Ok((t, own))
}

/// The type of the elaborated term together with its captured variables.
pub fn infer_t(env: &Env, t: &Term, fuel: &mut Fuel) -> TResult<(Type, CaptureSet)> {
    infer_t_with(env, t, fuel, Options::default())
}

pub fn infer_t_with(
    env: &Env,
    t: &Term,
    fuel: &mut Fuel,
    options: Options,
) -> TResult<(Type, CaptureSet)> {
    with_checker(fuel, &(env, t), |ck| {
        ck.options = options;
        ck.infer_t(env, t)
    })
}

impl Checker {
    pub fn box_adapt_t(
        &mut self,
        env: &Env,
        x: &Var,
        expected: &Type,
    ) -> TResult<(Kind, CaptureSet)> {
        wf_type(env, expected)?;
        let actual = var_type(env, x)?;
        let r = self.adapt_sub_t(env, &actual, expected)?;
        Ok((r.kind, r.leak.fill_var(x)))
    }

    pub fn adapt_sub_t(
        &mut self,
        env: &Env,
        actual: &Type,
        expected: &Type,
    ) -> TResult<AdaptResult> {
        self.tick()?;
        let subcaptures = |rule| {
            if subcapture(env, &actual.captures, &expected.captures) {
                Ok(AdaptResult::identity())
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
                self.adapt_sub_t(env, &widened, expected)
            }
            AdaptRule::Box => {
                let inner = boxed_parts(expected);
                if !env.covers(&inner.captures) {
                    return Err(TypeError::EscapeViolation {
                        rule: "ba-box",
                        set: inner.captures.clone(),
                    });
                }
                let r = self.adapt_sub_t(env, actual, inner)?;
                let leak = if r.kind.is_answer() {
                    HoledCaptureSet::default()
                } else {
                    r.leak
                };
                Ok(AdaptResult::term(leak))
            }
            AdaptRule::Boxed => {
                let (from, to) = (boxed_parts(actual), boxed_parts(expected));
                let r = self.adapt_sub_t(env, from, to)?;
                if r.kind == Kind::Var {
                    if !subcapture(env, &actual.captures, &expected.captures) {
                        return Err(TypeError::SubcaptureFailure {
                            rule: "ba-boxed",
                            sub: actual.captures.clone(),
                            sup: expected.captures.clone(),
                        });
                    }
                    return Ok(AdaptResult::identity());
                }
                if !env.covers(&from.captures) {
                    return Err(TypeError::EscapeViolation {
                        rule: "ba-boxed",
                        set: from.captures.clone(),
                    });
                }
                let inner = if r.kind == Kind::Val {
                    CaptureSet::empty()
                } else {
                    r.leak.base().clone()
                };
                Ok(AdaptResult::term(
                    HoledCaptureSet::hole()
                        .union_set(&from.captures)
                        .union_set(&inner),
                ))
            }
            AdaptRule::Unbox => {
                let from = boxed_parts(actual);
                if !env.covers(&from.captures) {
                    return Err(TypeError::EscapeViolation {
                        rule: "ba-unbox",
                        set: from.captures.clone(),
                    });
                }
                let r = self.adapt_sub_t(env, from, expected)?;
                Ok(AdaptResult::term(
                    HoledCaptureSet::hole()
                        .union_set(&from.captures)
                        .union_set(r.leak.base()),
                ))
            }
            AdaptRule::Fun => {
                let (Shape::Fun(x1, u1, t1), Shape::Fun(x2, u2, t2)) =
                    (&actual.shape, &expected.shape)
                else {
                    unreachable!()
                };
                let (p, q) = self.fun_binders(x2);
                let rx = self.adapt_sub_t(env, u2, u1)?;
                let env2 = env
                    .with_var(p.clone(), (**u2).clone())
                    .with_var(q.clone(), (**u1).clone());
                let arg = if rx.kind == Kind::Var { &p } else { &q };
                let t1 = self.rename_type(t1, x1, arg);
                let t2 = self.rename_type(t2, x2, &p);
                let rz = self.adapt_sub_t(&env2, &t1, &t2)?;
                let leak = rx.leak.base().union(rz.leak.base()).without(&p).without(&q);
                let leak = HoledCaptureSet::hole().union_set(&leak);
                self.check_leak(env, "ba-fun", &leak, &actual.captures, &expected.captures)?;
                let kind = if rx.kind == Kind::Var && rz.kind == Kind::Var {
                    Kind::Var
                } else {
                    Kind::Val
                };
                Ok(AdaptResult { kind, leak })
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
                let rz = self.adapt_sub_t(&env2, &t1, &t2)?;
                let leak = HoledCaptureSet::closed(rz.leak.base().clone());
                let leak = match self.options.tfun_leak {
                    TFunLeak::WithInput => leak.with_hole(),
                    TFunLeak::BodyOnly => leak,
                };
                self.check_leak(env, "ba-tfun", &leak, &actual.captures, &expected.captures)?;
                let kind = if rz.kind == Kind::Var {
                    Kind::Var
                } else {
                    Kind::Val
                };
                Ok(AdaptResult { kind, leak })
            }
            AdaptRule::NoRule => Err(TypeError::AdaptFailure {
                rule: "adapt",
                actual: actual.clone(),
                expected: expected.clone(),
            }),
        }
    }

    fn check_leak(
        &mut self,
        env: &Env,
        rule: &'static str,
        leak: &HoledCaptureSet,
        captures: &CaptureSet,
        expected: &CaptureSet,
    ) -> TResult<()> {
        let filled = leak.fill_set(captures);
        if subcapture(env, &filled, expected) {
            Ok(())
        } else {
            Err(TypeError::SubcaptureFailure {
                rule,
                sub: filled,
                sup: expected.clone(),
            })
        }
    }

    pub fn infer_t(&mut self, env: &Env, t: &Term) -> TResult<(Type, CaptureSet)> {
        self.tick()?;
        match t {
            Term::Var(x) => Ok((var_type(env, x)?, CaptureSet::singleton(x.clone()))),
            Term::Abs(x, param, body) => {
                wf_type(env, param)?;
                let (x, body) = self.unshadow(env, x, body);
                let (result, c) = self.infer_t(&env.with_var(x.clone(), param.clone()), &body)?;
                let c = c.without(&x);
                Ok((Type::new(c.clone(), Type::fun(x, param.clone(), result)), c))
            }
            Term::TAbs(a, bound, body) => {
                wf_shape(env, bound)?;
                let (a, body) = self.unshadow_tvar(env, a, body);
                let (result, c) = self.infer_t(&env.with_tvar(a.clone(), bound.clone()), &body)?;
                Ok((
                    Type::new(c.clone(), Type::tfun(a, bound.clone(), result)),
                    c,
                ))
            }
            Term::App(f, y) => {
                let (ft, cf) = unbox_var_t(env, f)?;
                let Shape::Fun(z, param, result) = &ft.shape else {
                    return Err(TypeError::NotAFunction {
                        rule: "bi-app",
                        found: ft,
                    });
                };
                let (kind, cy) = self.box_adapt_t(env, y, param)?;
                let result = if kind == Kind::Var {
                    self.rename_type(result, z, y)
                } else {
                    let z2 = self.fresh_var(z);
                    let r = self.rename_type(result, z, &z2);
                    self.avoid(&z2, &param.captures, &r)
                };
                Ok((result, cf.union(&cy)))
            }
            Term::TApp(f, arg) => {
                let (ft, c) = unbox_var_t(env, f)?;
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
                Ok((
                    Subst::TVar(a.clone(), arg.clone()).type_(result, self.names()),
                    c,
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
                Ok((Type::pure(Type::boxed(xt)), CaptureSet::empty()))
            }
            Term::Unbox(annot, x) => {
                let inner = self.check_unbox(env, "bi-unbox", annot, x)?;
                Ok((inner, annot.union(&CaptureSet::singleton(x.clone()))))
            }
            Term::Let(x, bound, body) => {
                let (bt, c1) = self.infer_t(env, bound)?;
                let (x, body) = self.unshadow(env, x, body);
                let (rt, c2) = self.infer_t(&env.with_var(x.clone(), bt.clone()), &body)?;
                let result = self.avoid(&x, &bt.captures, &rt);
                let c = if kind_of(bound).is_answer() && !c2.contains(&x) {
                    c2
                } else {
                    c1.union(&c2.without(&x))
                };
                Ok((result, c))
            }
        }
    }
}
