//! The differential properties, their case generators, and the shrinker.

use std::fmt;
use std::str::FromStr;

use capbox::vars::{fv_all, FreeVars};
use capbox::{
    adapt_sub, cv, cv_with, erase_env, erase_term, fsub_typecheck, infer, infer_t, infer_t_with,
    is_simple_formed, normalize, show_env, show_term, show_type, subtype, subtype_capt, typecheck,
    wf_env, wf_type, AlphaEq, CaptureSet, Env, Fuel, LetHiding, NameSupply, Options, Shape,
    TFunLeak, Term, Type, TypeError, Var,
};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::gen::{hostile_term, Gen, GenConfig, GenError};
use crate::mutate::{broken_cv, drop_boxes};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Property {
    AdpCompleteness,
    AdpSoundness,
    AdpAdptEquivalence,
    SubReflexivity,
    SubTransitivity,
    SubCaptEquivalence,
    AdaptIdentity,
    NormalizePreservation,
    TerminationMirror,
}

impl Property {
    pub const ALL: [Property; 9] = [
        Property::AdpCompleteness,
        Property::AdpSoundness,
        Property::AdpAdptEquivalence,
        Property::SubReflexivity,
        Property::SubTransitivity,
        Property::SubCaptEquivalence,
        Property::AdaptIdentity,
        Property::NormalizePreservation,
        Property::TerminationMirror,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::AdpCompleteness => "adp-completeness",
            Property::AdpSoundness => "adp-soundness",
            Property::AdpAdptEquivalence => "adp-adpt-equivalence",
            Property::SubReflexivity => "sub-reflexivity",
            Property::SubTransitivity => "sub-transitivity",
            Property::SubCaptEquivalence => "sub-capt-equivalence",
            Property::AdaptIdentity => "adapt-identity",
            Property::NormalizePreservation => "normalize-preservation",
            Property::TerminationMirror => "termination-mirror",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown property `{0}`")]
pub struct UnknownProperty(pub String);

impl FromStr for Property {
    type Err = UnknownProperty;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Property::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| UnknownProperty(s.to_string()))
    }
}

/// Deliberate bugs, for checking that the runner notices them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mutation {
    /// Compare against a `cv` that ignores unbox annotations.
    BrokenCv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Settings {
    pub fuel: u64,
    /// Reporting threshold for the termination mirror: a case is noted when
    /// inference spends more than this multiple of the erased check's fuel.
    pub ratio: u64,
    pub mutation: Option<Mutation>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            fuel: capbox::DEFAULT_FUEL,
            ratio: 8,
            mutation: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Input {
    Term { env: Env, term: Term },
    Types { env: Env, types: Vec<Type> },
}

/// An input in surface syntax.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputRepr {
    pub env: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub term: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub types: Vec<String>,
}

impl Input {
    pub fn env(&self) -> &Env {
        match self {
            Input::Term { env, .. } | Input::Types { env, .. } => env,
        }
    }

    pub fn render(&self) -> InputRepr {
        match self {
            Input::Term { env, term } => InputRepr {
                env: show_env(env),
                term: Some(show_term(term)),
                types: vec![],
            },
            Input::Types { env, types } => InputRepr {
                env: show_env(env),
                term: None,
                types: types.iter().map(show_type).collect(),
            },
        }
    }

    fn size(&self) -> usize {
        match self {
            Input::Term { env, term } => env.len() * 100 + term.size(),
            Input::Types { env, types } => {
                env.len() * 100 + types.iter().map(type_size).sum::<usize>()
            }
        }
    }

    /// Closed and well-formed: a precondition of every property.
    fn well_formed(&self) -> bool {
        if wf_env(self.env()).is_err() {
            return false;
        }
        match self {
            Input::Term { env, term } => {
                let FreeVars { vars, tvars } = fv_all(term);
                vars.iter().all(|x| env.contains_var(x))
                    && tvars.iter().all(|x| env.contains_tvar(x))
            }
            Input::Types { env, types } => types
                .iter()
                .all(|t| wf_type(env, t).is_ok() && is_simple_formed(t)),
        }
    }
}

fn type_size(t: &Type) -> usize {
    fn shape(s: &Shape) -> usize {
        match s {
            Shape::TVar(_) | Shape::Top => 1,
            Shape::Boxed(t) => 1 + type_size(t),
            Shape::Fun(_, p, r) => 1 + type_size(p) + type_size(r),
            Shape::TFun(_, b, r) => 1 + shape(b) + type_size(r),
        }
    }
    t.captures.len() + shape(&t.shape)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Pass,
    /// The case does not meet the property's precondition.
    Discard(String),
    /// Both sides' outputs.
    Fail(Vec<String>),
    /// Passes, with an observation worth reporting.
    Finding(String),
}

impl Verdict {
    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail(_))
    }
}

fn widen_captures(g: &mut Gen, env: &Env, c: &CaptureSet) -> CaptureSet {
    let mut c = c.clone();
    for (x, _) in env.term_vars() {
        if g.rng().gen_bool(0.2) {
            c.insert(x.clone());
        }
    }
    if g.rng().gen_bool(0.05) {
        c = c.with_root(true);
    }
    c
}

fn narrow_captures(g: &mut Gen, c: &CaptureSet) -> CaptureSet {
    let mut out: CaptureSet = c
        .vars()
        .filter(|_| g.rng().gen_bool(0.6))
        .cloned()
        .collect();
    if c.has_root() && g.rng().gen_bool(0.5) {
        out = out.with_root(true);
    }
    out
}

/// A random supertype candidate of `t`.
pub fn widen(g: &mut Gen, env: &Env, t: &Type) -> Type {
    if g.rng().gen_bool(0.15) {
        return Type::new(widen_captures(g, env, &t.captures), Shape::Top);
    }
    let shape = match &t.shape {
        Shape::TVar(x) if g.rng().gen_bool(0.3) => {
            env.lookup_tvar(x).cloned().unwrap_or(Shape::Top)
        }
        Shape::Fun(z, p, r) => {
            let p = narrow(g, env, p);
            let r = widen(g, &env.with_var(z.clone(), p.clone()), r);
            Type::fun(z.clone(), p, r)
        }
        Shape::TFun(x, b, r) => {
            let r = widen(g, &env.with_tvar(x.clone(), (**b).clone()), r);
            Type::tfun(x.clone(), (**b).clone(), r)
        }
        Shape::Boxed(inner) => Type::boxed(widen(g, env, inner)),
        s => s.clone(),
    };
    let captures = if matches!(shape, Shape::Boxed(_)) {
        t.captures.clone()
    } else {
        widen_captures(g, env, &t.captures)
    };
    let out = Type::new(captures, shape);
    if is_simple_formed(&out) {
        out
    } else {
        t.clone()
    }
}

/// A random subtype candidate of `t`.
pub fn narrow(g: &mut Gen, env: &Env, t: &Type) -> Type {
    let captures = narrow_captures(g, &t.captures);
    let shape = match &t.shape {
        Shape::Top if g.rng().gen_bool(0.3) => g.shape(env, 2),
        Shape::Fun(z, p, r) => {
            let p = widen(g, env, p);
            let r = narrow(g, &env.with_var(z.clone(), p.clone()), r);
            Type::fun(z.clone(), p, r)
        }
        Shape::TFun(x, b, r) => {
            let r = narrow(g, &env.with_tvar(x.clone(), (**b).clone()), r);
            Type::tfun(x.clone(), (**b).clone(), r)
        }
        Shape::Boxed(inner) => Type::boxed(narrow(g, env, inner)),
        s => s.clone(),
    };
    let captures = if matches!(shape, Shape::Boxed(_)) {
        CaptureSet::empty()
    } else {
        captures
    };
    let out = Type::new(captures, shape);
    if is_simple_formed(&out) {
        out
    } else {
        t.clone()
    }
}

/// The input for one case of `prop`, determined by `cfg` alone.
pub fn generate(prop: Property, cfg: &GenConfig) -> Result<Input, GenError> {
    let mut g = Gen::new(cfg);
    let term_input = |(env, term)| Input::Term { env, term };
    Ok(match prop {
        Property::AdpCompleteness | Property::NormalizePreservation => term_input(g.welltyped()?),
        Property::AdpSoundness => {
            let (env, t) = g.welltyped()?;
            Input::Term {
                env,
                term: drop_boxes(&t, cfg),
            }
        }
        Property::AdpAdptEquivalence | Property::TerminationMirror => {
            if cfg.hostile && cfg.seed.is_multiple_of(3) {
                Input::Term {
                    env: g.env(),
                    term: hostile_term(),
                }
            } else {
                let (env, t) = g.welltyped()?;
                let term = if cfg.seed.is_multiple_of(2) {
                    t
                } else {
                    drop_boxes(&t, cfg)
                };
                Input::Term { env, term }
            }
        }
        Property::SubReflexivity => {
            let env = g.env();
            let t = g.ty(&env, cfg.max_depth.min(3));
            Input::Types {
                env,
                types: vec![t],
            }
        }
        Property::SubTransitivity => {
            let env = g.env();
            let u = g.ty(&env, cfg.max_depth.min(3));
            let t = narrow(&mut g, &env, &u);
            let v = widen(&mut g, &env, &u);
            Input::Types {
                env,
                types: vec![t, u, v],
            }
        }
        Property::SubCaptEquivalence | Property::AdaptIdentity => {
            let env = g.env();
            let u = g.ty(&env, cfg.max_depth.min(3));
            let related = prop == Property::AdaptIdentity || cfg.seed.is_multiple_of(2);
            let types = if !related {
                let t = g.ty(&env, cfg.max_depth.min(3));
                vec![t, u]
            } else if g.rng().gen_bool(0.5) {
                vec![narrow(&mut g, &env, &u), u]
            } else {
                let v = widen(&mut g, &env, &u);
                vec![u, v]
            };
            Input::Types { env, types }
        }
    })
}

fn fuel(s: &Settings) -> Fuel {
    Fuel::new(s.fuel)
}

fn show_result<T: fmt::Display>(label: &str, r: &Result<T, TypeError>) -> String {
    match r {
        Ok(v) => format!("{label}: {v}"),
        Err(e) => format!("{label}: error: {e}"),
    }
}

/// Evaluates `prop` on one input.
pub fn check(prop: Property, input: &Input, s: &Settings) -> Verdict {
    if !input.well_formed() {
        return Verdict::Discard("ill-formed input".into());
    }
    match (prop, input) {
        (Property::AdpCompleteness, Input::Term { env, term }) => completeness(env, term, s),
        (Property::AdpSoundness, Input::Term { env, term }) => soundness(env, term, s),
        (Property::AdpAdptEquivalence, Input::Term { env, term }) => equivalence(env, term, s),
        (Property::NormalizePreservation, Input::Term { env, term }) => preservation(env, term, s),
        (Property::TerminationMirror, Input::Term { env, term }) => mirror(env, term, s),
        (Property::SubReflexivity, Input::Types { env, types }) if types.len() == 1 => {
            match subtype(env, &types[0], &types[0], &mut fuel(s)) {
                Ok(true) => Verdict::Pass,
                r => Verdict::Fail(vec![format!("subtype: {r:?}")]),
            }
        }
        (Property::SubTransitivity, Input::Types { env, types }) if types.len() == 3 => {
            let (t, u, v) = (&types[0], &types[1], &types[2]);
            if subtype(env, t, u, &mut fuel(s)) != Ok(true)
                || subtype(env, u, v, &mut fuel(s)) != Ok(true)
            {
                return Verdict::Discard("premises not derivable".into());
            }
            match subtype(env, t, v, &mut fuel(s)) {
                Ok(true) => Verdict::Pass,
                r => Verdict::Fail(vec![
                    "premises: true, true".into(),
                    format!("conclusion: {r:?}"),
                ]),
            }
        }
        (Property::SubCaptEquivalence, Input::Types { env, types }) if types.len() == 2 => {
            let plain = subtype(env, &types[0], &types[1], &mut fuel(s));
            let inlined = subtype_capt(env, &types[0], &types[1], &mut fuel(s));
            if plain == inlined {
                Verdict::Pass
            } else {
                Verdict::Fail(vec![
                    format!("subtype: {plain:?}"),
                    format!("subtype_capt: {inlined:?}"),
                ])
            }
        }
        (Property::AdaptIdentity, Input::Types { env, types }) if types.len() == 2 => {
            let (t, u) = (&types[0], &types[1]);
            if subtype(env, t, u, &mut fuel(s)) != Ok(true) {
                return Verdict::Discard("not a subtype".into());
            }
            let x = NameSupply::above(&(env, (t, u))).fresh_var(&Var::new("x"));
            match adapt_sub(env, &x, t, u, &mut fuel(s)) {
                Ok(Term::Var(y)) if y == x => Verdict::Pass,
                r => Verdict::Fail(vec!["subtype: true".into(), show_result("adapt", &r)]),
            }
        }
        _ => Verdict::Discard("input does not fit the property".into()),
    }
}

fn completeness(env: &Env, t: &Term, s: &Settings) -> Verdict {
    let expected = match typecheck(env, t, &mut fuel(s)) {
        Ok(ty) => ty,
        Err(e) => return Verdict::Discard(format!("ill-typed: {e}")),
    };
    match infer(env, t, &mut fuel(s)) {
        Ok((t2, ty)) if t2.alpha_eq(t) && ty.alpha_eq(&expected) => Verdict::Pass,
        r => Verdict::Fail(vec![
            format!("typecheck: {expected}"),
            show_result("infer", &r.map(|(t2, ty)| format!("{t2} : {ty}"))),
        ]),
    }
}

fn soundness(env: &Env, t: &Term, s: &Settings) -> Verdict {
    let Ok((t2, ty)) = infer(env, t, &mut fuel(s)) else {
        return Verdict::Pass;
    };
    let checked = typecheck(env, &t2, &mut fuel(s));
    let ok = match &checked {
        Ok(ty2) => subtype(env, ty2, &ty, &mut fuel(s)) == Ok(true),
        Err(_) => false,
    };
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail(vec![
            format!("infer: {t2} : {ty}"),
            show_result("typecheck", &checked),
        ])
    }
}

fn equivalence(env: &Env, t: &Term, s: &Settings) -> Verdict {
    let term_level = infer(env, t, &mut fuel(s));
    let type_level = infer_t(env, t, &mut fuel(s));
    let cv_of = |t: &Term| match s.mutation {
        Some(Mutation::BrokenCv) => broken_cv(t),
        None => cv(t),
    };
    let agree = match (&term_level, &type_level) {
        (Err(_), Err(_)) => true,
        (Ok((t2, ty)), Ok((ty2, c))) => ty.alpha_eq(ty2) && cv_of(t2) == *c,
        _ => false,
    };
    if !agree {
        return Verdict::Fail(vec![
            show_result(
                "infer",
                &term_level.map(|(t2, ty)| format!("{t2} : {ty} with cv {}", cv_of(&t2))),
            ),
            show_result(
                "infer_t",
                &type_level.map(|(ty, c)| format!("{ty} with {c}")),
            ),
        ]);
    }
    let Ok((t2, _)) = &term_level else {
        return Verdict::Pass;
    };
    let mut notes = Vec::new();
    // Hiding only value-bound lets is the other reading of the let clause.
    let values_only = cv_with(t2, LetHiding::ValuesOnly);
    if values_only != cv(t2) {
        notes.push(format!(
            "values-only cv of `{t2}` is {values_only} instead of {}",
            cv(t2)
        ));
    }
    let options = Options {
        tfun_leak: TFunLeak::BodyOnly,
    };
    if let (Ok(body_only), Ok(with_input)) =
        (infer_t_with(env, t, &mut fuel(s), options), &type_level)
    {
        if body_only != *with_input {
            notes.push(format!(
                "body-only type function leak gives {} instead of {}",
                body_only.1, with_input.1
            ));
        }
    }
    if notes.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Finding(notes.join("; "))
    }
}

fn preservation(env: &Env, t: &Term, s: &Settings) -> Verdict {
    let Ok(ty) = typecheck(env, t, &mut fuel(s)) else {
        return Verdict::Discard("ill-typed".into());
    };
    let n = normalize(t);
    let checked = typecheck(env, &n, &mut fuel(s));
    match &checked {
        Ok(ty2) if subtype(env, ty2, &ty, &mut fuel(s)) == Ok(true) => Verdict::Pass,
        _ => Verdict::Fail(vec![
            format!("original: {ty}"),
            show_result(&format!("normalized {n}"), &checked),
        ]),
    }
}

fn mirror(env: &Env, t: &Term, s: &Settings) -> Verdict {
    let mut erased_fuel = fuel(s);
    if let Err(TypeError::FuelExhausted) =
        fsub_typecheck(&erase_env(env), &erase_term(t), &mut erased_fuel)
    {
        return Verdict::Discard("erased image exhausts fuel".into());
    }
    let mut infer_fuel = fuel(s);
    match infer(env, t, &mut infer_fuel) {
        Err(TypeError::FuelExhausted) => Verdict::Fail(vec![
            format!("erased check: completes with {} fuel", erased_fuel.spent()),
            "infer: fuel exhausted".into(),
        ]),
        _ if infer_fuel.spent() > s.ratio.saturating_mul(erased_fuel.spent()) => {
            Verdict::Finding(format!(
                "infer spent {} fuel, erased check {} (over {}x)",
                infer_fuel.spent(),
                erased_fuel.spent(),
                s.ratio
            ))
        }
        _ => Verdict::Pass,
    }
}

fn shrink_type(t: &Type) -> Vec<Type> {
    let mut out = Vec::new();
    if !t.captures.is_empty() {
        out.push(Type::pure(t.shape.clone()));
    }
    if t.shape != Shape::Top {
        out.push(Type::new(t.captures.clone(), Shape::Top));
    }
    let c = &t.captures;
    match &t.shape {
        Shape::Fun(z, p, r) => {
            out.extend(
                shrink_type(p)
                    .into_iter()
                    .map(|p| Type::new(c.clone(), Type::fun(z.clone(), p, (**r).clone()))),
            );
            out.extend(
                shrink_type(r)
                    .into_iter()
                    .map(|r| Type::new(c.clone(), Type::fun(z.clone(), (**p).clone(), r))),
            );
        }
        Shape::TFun(x, b, r) => {
            if **b != Shape::Top {
                out.push(Type::new(
                    c.clone(),
                    Type::tfun(x.clone(), Shape::Top, (**r).clone()),
                ));
            }
            out.extend(
                shrink_type(r)
                    .into_iter()
                    .map(|r| Type::new(c.clone(), Type::tfun(x.clone(), (**b).clone(), r))),
            );
        }
        Shape::Boxed(inner) => {
            out.push((**inner).clone());
            out.extend(
                shrink_type(inner)
                    .into_iter()
                    .map(|i| Type::pure(Type::boxed(i))),
            );
        }
        Shape::TVar(_) | Shape::Top => {}
    }
    out
}

fn shrink_term(t: &Term) -> Vec<Term> {
    let mut out = Vec::new();
    match t {
        Term::Var(_) => {}
        Term::App(f, y) => {
            out.push(Term::Var(f.clone()));
            out.push(Term::Var(y.clone()));
        }
        Term::TApp(f, s) => {
            out.push(Term::Var(f.clone()));
            if *s != Shape::Top {
                out.push(Term::TApp(f.clone(), Shape::Top));
            }
        }
        Term::Box(x) | Term::Unbox(_, x) => out.push(Term::Var(x.clone())),
        Term::Let(x, s, b) => {
            out.push((**b).clone());
            out.push((**s).clone());
            out.extend(
                shrink_term(s)
                    .into_iter()
                    .map(|s| Term::let_(x.clone(), s, (**b).clone())),
            );
            out.extend(
                shrink_term(b)
                    .into_iter()
                    .map(|b| Term::let_(x.clone(), (**s).clone(), b)),
            );
        }
        Term::Abs(x, ty, b) => {
            out.push((**b).clone());
            out.extend(
                shrink_term(b)
                    .into_iter()
                    .map(|b| Term::abs(x.clone(), ty.clone(), b)),
            );
            out.extend(
                shrink_type(ty)
                    .into_iter()
                    .map(|ty| Term::abs(x.clone(), ty, (**b).clone())),
            );
        }
        Term::TAbs(x, s, b) => {
            out.push((**b).clone());
            if *s != Shape::Top {
                out.push(Term::tabs(x.clone(), Shape::Top, (**b).clone()));
            }
            out.extend(
                shrink_term(b)
                    .into_iter()
                    .map(|b| Term::tabs(x.clone(), s.clone(), b)),
            );
        }
    }
    out
}

/// Smaller inputs to try, environments first, then terms, then types.
fn candidates(input: &Input) -> Vec<Input> {
    let env = input.env();
    let mut out: Vec<Input> = (0..env.len())
        .map(|i| {
            let env = env.without_index(i);
            match input {
                Input::Term { term, .. } => Input::Term {
                    env,
                    term: term.clone(),
                },
                Input::Types { types, .. } => Input::Types {
                    env,
                    types: types.clone(),
                },
            }
        })
        .collect();
    match input {
        Input::Term { env, term } => {
            out.extend(shrink_term(term).into_iter().map(|term| Input::Term {
                env: env.clone(),
                term,
            }));
        }
        Input::Types { env, types } => {
            for (i, t) in types.iter().enumerate() {
                for smaller in shrink_type(t) {
                    let mut types = types.clone();
                    types[i] = smaller;
                    out.push(Input::Types {
                        env: env.clone(),
                        types,
                    });
                }
            }
        }
    }
    out
}

const SHRINK_BUDGET: usize = 2_000;

/// Greedily replaces a failing input with a smaller one that still fails.
pub fn shrink(prop: Property, input: &Input, s: &Settings) -> (Input, Verdict) {
    let mut current = input.clone();
    let mut verdict = check(prop, &current, s);
    let mut budget = SHRINK_BUDGET;
    'outer: while budget > 0 {
        for cand in candidates(&current) {
            if budget == 0 {
                break 'outer;
            }
            if cand.size() >= current.size() {
                continue;
            }
            budget -= 1;
            let v = check(prop, &cand, s);
            if v.is_fail() {
                current = cand;
                verdict = v;
                continue 'outer;
            }
        }
        break;
    }
    (current, verdict)
}
