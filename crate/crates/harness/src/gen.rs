//! Deterministic generators for environments, types and well-typed terms.
//!
//! Terms are built forward: every leaf is probed with the checker before it
//! is used, and let-bound variables enter the environment at their checked
//! type, so the result is well-typed by construction. The final term is
//! checked once more as a filter.

use capbox::{
    is_simple_formed, parse_type, wf_type, CaptureSet, Checker, Env, Fuel, Shape, TVar, Term, Type,
    Var,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    /// Upper bound on the number of bindings in a generated environment.
    pub max_env: usize,
    pub max_depth: usize,
    /// Probability of choosing a `box`/`unbox` form where one applies. At 0
    /// no box or unbox node is generated.
    pub box_bias: f64,
    /// Probability that `drop_boxes` rewrites an eligible let.
    pub drop_rate: f64,
    /// Adds bounds whose erased subtyping check diverges.
    pub hostile: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            max_env: 7,
            max_depth: 6,
            box_bias: 0.5,
            drop_rate: 0.7,
            hostile: false,
        }
    }
}

impl GenConfig {
    pub fn with_seed(&self, seed: u64) -> Self {
        GenConfig {
            seed,
            ..self.clone()
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GenError {
    #[error("no well-typed term after {0} attempts")]
    Exhausted(usize),
}

const ATTEMPTS: usize = 64;
const PROBE_FUEL: u64 = 4_000;
const CAPABILITIES: [&str; 3] = ["io", "fs", "net"];

/// Binding templates. `C` stands for a capability, `D` for a second one,
/// `X` for a type variable already in scope (or `Top` when there is none).
const TERM_KITS: &[(&str, &str)] = &[
    ("log", "{C} Top"),
    ("f", "{C} all (a: Top) -> Top"),
    ("g", "all (z: Box {C} Top) -> Top"),
    ("run", "all (k: {C} all (u: Top) -> Top) -> Top"),
    ("w", "{C} all (k: Box {C} all (u: Top) -> Top) -> Top"),
    ("b", "Box {C} Top"),
    ("h", "Box {C} all (a: Top) -> Top"),
    ("id", "all [T <: Top] -> all (x: T) -> T"),
    (
        "ap",
        "all [T <: Top] -> all (k: all (a: T) -> Top) -> all (x: T) -> Top",
    ),
    ("use", "all (c: {C} Top) -> {c} Top"),
    ("mk", "{C} all (u: Top) -> {C} all (v: Top) -> Top"),
    ("both", "{C, D} all (a: Top) -> Top"),
    ("xv", "X"),
    ("xf", "all (a: X) -> X"),
    ("pk", "all [T <: X] -> all (x: T) -> X"),
    ("cb", "all (k: Box {C} all (a: Box {C} Top) -> Top) -> Top"),
    ("takes", "{C} all (op: {C} all (u: Top) -> Top) -> Top"),
    (
        "hof",
        "all (k: {C} all (op: Box {C} all (u: Top) -> Top) -> Top) -> Top",
    ),
    ("boxed", "{C} all (z: Box {C} Top) -> Top"),
    ("hof2", "all (k: {C} all (z: {C} Top) -> Top) -> Top"),
];

const TYPE_KITS: &[&str] = &["Top", "Box {C} Top", "all (a: Top) -> Top", "X"];

/// A generator: one seeded stream of random choices.
pub struct Gen {
    rng: ChaCha8Rng,
    cfg: GenConfig,
    next: u32,
}

fn probe(env: &Env, t: &Term) -> Option<Type> {
    let mut ck = Checker::new(Fuel::new(PROBE_FUEL));
    ck.observe(&(env, t));
    ck.typecheck(env, t).ok()
}

fn widened(env: &Env, x: &Var) -> Option<Type> {
    capbox::widen_var(env, x).ok()
}

impl Gen {
    pub fn new(cfg: &GenConfig) -> Self {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cfg: cfg.clone(),
            next: 0,
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn chance(&mut self, p: f64) -> bool {
        p > 0.0 && self.rng.gen_bool(p.min(1.0))
    }

    fn boxes(&mut self) -> bool {
        let p = self.cfg.box_bias;
        self.chance(p)
    }

    pub fn fresh(&mut self, base: &str) -> Var {
        self.next += 1;
        Var::new(&format!("{base}{}", self.next))
    }

    pub fn fresh_tvar(&mut self, base: &str) -> TVar {
        self.next += 1;
        TVar::new(&format!("{base}{}", self.next))
    }

    /// Capabilities at the root plus a random selection of kits.
    pub fn env(&mut self) -> Env {
        let mut env = Env::new();
        let caps = self.rng.gen_range(1..=2);
        for name in &CAPABILITIES[..caps] {
            env.push_var(Var::new(name), Type::new(CaptureSet::root(), Shape::Top));
        }
        if self.cfg.hostile {
            for (x, src) in hostile_bindings() {
                env.push(match x {
                    Binder::Term(x) => capbox::Binding::Term(x, parse_type(src).unwrap()),
                    Binder::Type(x) => capbox::Binding::Type(x, parse_type(src).unwrap().shape),
                });
            }
        }
        let target = self.cfg.max_env.max(caps + 1);
        let mut tries = 0;
        while env.len() < target && tries < 4 * target {
            tries += 1;
            self.push_kit(&mut env);
        }
        env
    }

    fn capability(&mut self, env: &Env) -> Var {
        let caps: Vec<Var> = env
            .term_vars()
            .filter(|(_, t)| matches!(t.shape, Shape::Top) && !t.captures.is_empty())
            .map(|(x, _)| x.clone())
            .collect();
        caps.choose(&mut self.rng)
            .cloned()
            .unwrap_or_else(|| Var::new(CAPABILITIES[0]))
    }

    fn instantiate(&mut self, env: &Env, template: &str) -> Option<Type> {
        let c = self.capability(env);
        let d = self.capability(env);
        let tvars: Vec<TVar> = env.type_vars().map(|(x, _)| x.clone()).collect();
        let x = tvars
            .choose(&mut self.rng)
            .map(|x| x.name().to_string())
            .unwrap_or_else(|| "Top".into());
        let src = template
            .replace('C', c.name())
            .replace('D', d.name())
            .replace("X", &x);
        let t = parse_type(&src).ok()?;
        (wf_type(env, &t).is_ok() && is_simple_formed(&t)).then_some(t)
    }

    fn push_kit(&mut self, env: &mut Env) {
        if self.rng.gen_bool(0.2) {
            let template = TYPE_KITS.choose(&mut self.rng).unwrap();
            if let Some(bound) = self.instantiate(env, template) {
                let x = self.fresh_tvar("X");
                env.push_tvar(x, bound.shape);
            }
            return;
        }
        let (base, template) = *TERM_KITS.choose(&mut self.rng).unwrap();
        if !self.boxes() && template.contains("Box") && self.rng.gen_bool(0.5) {
            return;
        }
        if let Some(t) = self.instantiate(env, template) {
            let x = self.fresh(base);
            env.push_var(x, t);
        }
    }

    fn capture_set(&mut self, env: &Env) -> CaptureSet {
        let mut c = CaptureSet::empty();
        for (x, _) in env.term_vars() {
            if self.rng.gen_bool(0.15) {
                c.insert(x.clone());
            }
        }
        if self.rng.gen_bool(0.05) {
            c = c.with_root(true);
        }
        c
    }

    pub fn shape(&mut self, env: &Env, depth: usize) -> Shape {
        let tvars: Vec<TVar> = env.type_vars().map(|(x, _)| x.clone()).collect();
        let choice = if depth == 0 {
            self.rng.gen_range(0..2)
        } else {
            self.rng.gen_range(0..6)
        };
        match choice {
            0 => Shape::Top,
            1 => tvars
                .choose(&mut self.rng)
                .map(|x| Shape::TVar(x.clone()))
                .unwrap_or(Shape::Top),
            2 | 3 => {
                let z = self.fresh("z");
                let param = self.ty(env, depth - 1);
                let inner = env.with_var(z.clone(), param.clone());
                let result = self.ty(&inner, depth - 1);
                Type::fun(z, param, result)
            }
            4 => {
                let x = self.fresh_tvar("T");
                let bound = self.shape(env, depth - 1);
                let result = self.ty(&env.with_tvar(x.clone(), bound.clone()), depth - 1);
                Type::tfun(x, bound, result)
            }
            _ => Type::boxed(self.ty(env, depth - 1)),
        }
    }

    /// A well-formed, simple-formed type.
    pub fn ty(&mut self, env: &Env, depth: usize) -> Type {
        let shape = self.shape(env, depth);
        if matches!(shape, Shape::Boxed(_)) {
            return Type::pure(shape);
        }
        Type::new(self.capture_set(env), shape)
    }

    fn annotation(&mut self, env: &Env) -> Type {
        let declared: Vec<Type> = env
            .term_vars()
            .map(|(_, t)| t.clone())
            .filter(|t| is_simple_formed(t) && (self.cfg.box_bias > 0.0 || !has_box(t)))
            .collect();
        if !declared.is_empty() && self.rng.gen_bool(0.6) {
            return declared.choose(&mut self.rng).unwrap().clone();
        }
        loop {
            let t = self.ty(env, 2);
            if self.cfg.box_bias > 0.0 || !has_box(&t) {
                return t;
            }
        }
    }

    /// A variable, application, type application, box or unbox. Candidates
    /// mentioning `focus` are tried first most of the time.
    fn leaf(&mut self, env: &Env, focus: Option<&Var>) -> Option<Term> {
        let vars: Vec<Var> = env.term_vars().map(|(x, _)| x.clone()).collect();
        let mut apps = Vec::new();
        let mut tapps = Vec::new();
        let mut boxes = Vec::new();
        for f in &vars {
            match widened(env, f).map(|t| t.shape) {
                Some(Shape::Fun(..)) => {
                    apps.extend(vars.iter().map(|y| Term::App(f.clone(), y.clone())))
                }
                Some(Shape::TFun(_, bound, _)) => {
                    tapps.push(Term::TApp(f.clone(), (*bound).clone()));
                    tapps.extend(
                        env.type_vars()
                            .map(|(x, _)| Term::TApp(f.clone(), Shape::TVar(x.clone()))),
                    );
                    if self.cfg.box_bias > 0.0 {
                        for (_, t) in env.term_vars() {
                            if !t.captures.is_empty()
                                && is_simple_formed(t)
                                && !matches!(t.shape, Shape::Boxed(_))
                            {
                                tapps.push(Term::TApp(f.clone(), Type::boxed(t.clone())));
                            }
                        }
                    }
                }
                Some(Shape::Boxed(inner)) if self.cfg.box_bias > 0.0 => {
                    boxes.push(Term::Unbox(inner.captures.clone(), f.clone()));
                }
                _ => {}
            }
            if self.cfg.box_bias > 0.0 {
                boxes.push(Term::Box(f.clone()));
            }
        }
        let mut order: Vec<Vec<Term>> = Vec::new();
        if self.boxes() {
            order.push(boxes.clone());
        }
        let mut rest = vec![apps, tapps, vars.iter().map(Term::var).collect(), boxes];
        rest.shuffle(&mut self.rng);
        if self.rng.gen_bool(0.6) {
            rest.sort_by_key(|c| {
                c.first()
                    .map(|t| !matches!(t, Term::App(..) | Term::TApp(..)))
            });
        }
        order.extend(rest);
        let prefer_focus = focus.is_some() && self.rng.gen_bool(0.7);
        for mut candidates in order {
            candidates.shuffle(&mut self.rng);
            if prefer_focus {
                let focus = focus.unwrap();
                candidates.sort_by_key(|t| !mentions(t, focus));
            }
            for t in candidates.into_iter().take(12) {
                if probe(env, &t).is_some() {
                    return Some(t);
                }
            }
        }
        None
    }

    /// `let y = box x in f y` or `let y = C unbox x in f y`, the forms that
    /// box-dropping erases.
    fn box_pattern(&mut self, env: &Env) -> Option<Term> {
        let vars: Vec<Var> = env.term_vars().map(|(x, _)| x.clone()).collect();
        let funs: Vec<Var> = vars
            .iter()
            .filter(|f| matches!(widened(env, f).map(|t| t.shape), Some(Shape::Fun(..))))
            .cloned()
            .collect();
        let mut candidates = Vec::new();
        let mut funs = funs;
        funs.sort_by_key(|f| !matches!(widened(env, f).map(|t| t.shape), Some(Shape::Fun(_, p, _)) if matches!(p.shape, Shape::Boxed(_))));
        for x in &vars {
            let y = self.fresh("y");
            let bound = match widened(env, x).map(|t| t.shape) {
                Some(Shape::Boxed(inner)) if self.rng.gen_bool(0.5) => {
                    Term::Unbox(inner.captures.clone(), x.clone())
                }
                _ => Term::Box(x.clone()),
            };
            for (rank, f) in funs.iter().enumerate() {
                candidates.push((
                    rank,
                    Term::let_(y.clone(), bound.clone(), Term::App(f.clone(), y.clone())),
                ));
            }
        }
        candidates.shuffle(&mut self.rng);
        if self.rng.gen_bool(0.8) {
            candidates.sort_by_key(|(rank, _)| *rank);
        }
        candidates
            .into_iter()
            .map(|(_, t)| t)
            .take(24)
            .find(|t| probe(env, t).is_some())
    }

    /// `fun (op: Box P) let op' = C unbox op in f op'` for `f` taking `P`
    /// with captures `C`, or `fun (op: Q) let op' = box op in f op'` for `f`
    /// taking `Box Q`.
    fn eta_wrapper(&mut self, env: &Env) -> Option<Term> {
        let mut candidates = Vec::new();
        for (f, _) in env.term_vars() {
            let Some(Shape::Fun(_, param, _)) = widened(env, f).map(|t| t.shape) else {
                continue;
            };
            let op = self.fresh("op");
            let inner = self.fresh("op");
            let call = Term::App(f.clone(), inner.clone());
            match &param.shape {
                Shape::Boxed(q) if is_simple_formed(q) => {
                    let body = Term::let_(inner.clone(), Term::Box(op.clone()), call);
                    candidates.push(Term::abs(op, (**q).clone(), body));
                }
                Shape::Boxed(_) => {}
                _ if !param.captures.is_empty() && env.covers(&param.captures) => {
                    let body = Term::let_(
                        inner.clone(),
                        Term::Unbox(param.captures.clone(), op.clone()),
                        call,
                    );
                    candidates.push(Term::abs(
                        op,
                        Type::pure(Type::boxed((*param).clone())),
                        body,
                    ));
                }
                _ => {}
            }
        }
        candidates.shuffle(&mut self.rng);
        candidates
            .into_iter()
            .take(8)
            .find(|t| probe(env, t).is_some())
    }

    pub fn term(&mut self, env: &Env, depth: usize) -> Option<Term> {
        self.term_near(env, depth, None)
    }

    fn term_near(&mut self, env: &Env, depth: usize, focus: Option<&Var>) -> Option<Term> {
        if depth == 0 {
            return self.leaf(env, focus);
        }
        if self.boxes() && self.rng.gen_bool(0.4) {
            if let Some(t) = self.box_pattern(env) {
                return Some(t);
            }
        }
        if self.boxes() && self.rng.gen_bool(0.5) {
            if let Some(wrapper) = self.eta_wrapper(env) {
                let bt = probe(env, &wrapper)?;
                let k = self.fresh("k");
                let body = self.term_near(&env.with_var(k.clone(), bt), depth - 1, Some(&k))?;
                return Some(Term::let_(k, wrapper, body));
            }
        }
        match self.rng.gen_range(0..20) {
            0..=2 => self.leaf(env, focus),
            3..=5 => {
                let x = self.fresh("a");
                let param = self.annotation(env);
                let body =
                    self.term_near(&env.with_var(x.clone(), param.clone()), depth - 1, Some(&x))?;
                Some(Term::abs(x, param, body))
            }
            6 => {
                let x = self.fresh_tvar("X");
                let bound = match env
                    .type_vars()
                    .map(|(_, s)| s.clone())
                    .collect::<Vec<_>>()
                    .choose(&mut self.rng)
                {
                    Some(s) if self.rng.gen_bool(0.5) => s.clone(),
                    _ => Shape::Top,
                };
                let body =
                    self.term_near(&env.with_tvar(x.clone(), bound.clone()), depth - 1, focus)?;
                Some(Term::tabs(x, bound, body))
            }
            _ => {
                let mut bound = self.term_near(env, depth - 1, focus)?;
                if matches!(bound, Term::Var(_)) {
                    bound = self
                        .leaf(env, focus)
                        .filter(|t| !matches!(t, Term::Var(_)))
                        .unwrap_or(bound);
                }
                let bt = probe(env, &bound)?;
                let x = self.fresh("l");
                let body = self.term_near(&env.with_var(x.clone(), bt), depth - 1, Some(&x))?;
                Some(Term::let_(x, bound, body))
            }
        }
    }

    /// An environment and a term that typechecks in it.
    pub fn welltyped(&mut self) -> Result<(Env, Term), GenError> {
        for _ in 0..ATTEMPTS {
            let env = self.env();
            let depth = self
                .rng
                .gen_range(self.cfg.max_depth / 2..=self.cfg.max_depth)
                .max(1);
            let Some(t) = self.term(&env, depth) else {
                continue;
            };
            if probe(&env, &t).is_some() && (self.cfg.box_bias > 0.0 || !has_box_node(&t)) {
                return Ok((env, t));
            }
        }
        Err(GenError::Exhausted(ATTEMPTS))
    }
}

enum Binder {
    Term(Var),
    Type(TVar),
}

/// A bound that sends erased subtyping into an infinite regress, and a
/// function whose instantiation triggers it.
fn hostile_bindings() -> Vec<(Binder, &'static str)> {
    vec![
        (
            Binder::Type(TVar::new("X0")),
            "all [X1 <: Top] -> all [Y <: all [X2 <: X1] -> all [Y <: X2] -> Y] -> Y",
        ),
        (
            Binder::Term(Var::new("loop")),
            "all [Z <: all [X1 <: X0] -> all [Y <: X1] -> Y] -> Top",
        ),
    ]
}

/// The application that diverges under a hostile environment.
pub fn hostile_term() -> Term {
    Term::TApp(Var::new("loop"), Shape::TVar(TVar::new("X0")))
}

fn mentions(t: &Term, x: &Var) -> bool {
    match t {
        Term::Var(y) | Term::Box(y) | Term::Unbox(_, y) | Term::TApp(y, _) => y == x,
        Term::App(f, y) => f == x || y == x,
        _ => false,
    }
}

pub fn has_box(t: &Type) -> bool {
    fn shape(s: &Shape) -> bool {
        match s {
            Shape::Boxed(_) => true,
            Shape::TVar(_) | Shape::Top => false,
            Shape::Fun(_, p, r) => has_box(p) || has_box(r),
            Shape::TFun(_, b, r) => shape(b) || has_box(r),
        }
    }
    shape(&t.shape)
}

pub fn has_box_node(t: &Term) -> bool {
    match t {
        Term::Box(_) | Term::Unbox(..) => true,
        Term::Var(_) | Term::App(..) | Term::TApp(..) => false,
        Term::Abs(_, _, b) | Term::TAbs(_, _, b) => has_box_node(b),
        Term::Let(_, s, b) => has_box_node(s) || has_box_node(b),
    }
}

/// Generates an environment and a well-typed term from `cfg` alone.
pub fn gen_welltyped(cfg: &GenConfig) -> Result<(Env, Term), GenError> {
    Gen::new(cfg).welltyped()
}

/// An environment and `count` types well-formed in it.
pub fn gen_types(cfg: &GenConfig, count: usize) -> (Env, Vec<Type>) {
    let mut g = Gen::new(cfg);
    let env = g.env();
    let depth = cfg.max_depth.min(3);
    let types = (0..count).map(|_| g.ty(&env, depth)).collect();
    (env, types)
}

#[cfg(test)]
mod tests {
    use super::*;
    use capbox::{typecheck, wf_env};

    #[test]
    fn deterministic() {
        let cfg = GenConfig {
            seed: 42,
            ..GenConfig::default()
        };
        assert_eq!(gen_welltyped(&cfg).unwrap(), gen_welltyped(&cfg).unwrap());
    }

    #[test]
    fn generated_terms_typecheck() {
        for seed in 0..200 {
            let cfg = GenConfig {
                seed,
                ..GenConfig::default()
            };
            let (env, t) = gen_welltyped(&cfg).unwrap();
            wf_env(&env).unwrap();
            typecheck(&env, &t, &mut Fuel::default())
                .unwrap_or_else(|e| panic!("{seed}: {t}: {e}"));
        }
    }

    #[test]
    fn no_box_nodes_without_bias() {
        for seed in 0..100 {
            let cfg = GenConfig {
                seed,
                box_bias: 0.0,
                ..GenConfig::default()
            };
            let (_, t) = gen_welltyped(&cfg).unwrap();
            assert!(!has_box_node(&t), "{t}");
        }
    }

    #[test]
    fn generated_types_are_simple_formed() {
        for seed in 0..100 {
            let (env, types) = gen_types(
                &GenConfig {
                    seed,
                    ..GenConfig::default()
                },
                5,
            );
            for t in types {
                assert!(is_simple_formed(&t) && wf_type(&env, &t).is_ok(), "{t}");
            }
        }
    }

    #[test]
    fn hostile_environments_are_well_formed() {
        let cfg = GenConfig {
            hostile: true,
            ..GenConfig::default()
        };
        let env = Gen::new(&cfg).env();
        wf_env(&env).unwrap();
        assert!(env.contains_var(&Var::new("loop")));
    }
}
