//! Abstract syntax of the capture calculus in monadic normal form.
//!
//! Variables carry a disambiguator next to their source name so that fresh
//! binders can be introduced without touching the user's spelling. A type is
//! always stored as a capture set paired with a shape; a bare shape `S` is the
//! same value as `{} S`.

use std::collections::BTreeSet;
use std::sync::Arc;

macro_rules! name_type {
    ($(#[$meta:meta])* $ty:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $ty {
            name: Arc<str>,
            id: u32,
        }

        impl $ty {
            pub fn new(name: &str) -> Self {
                $ty { name: Arc::from(name), id: 0 }
            }

            pub fn with_id(name: &str, id: u32) -> Self {
                $ty { name: Arc::from(name), id }
            }

            pub fn name(&self) -> &str {
                &self.name
            }

            pub fn id(&self) -> u32 {
                self.id
            }

            /// A sibling with the same spelling and a different disambiguator.
            pub fn renamed(&self, id: u32) -> Self {
                $ty { name: self.name.clone(), id }
            }
        }

        impl std::fmt::Debug for $ty {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                if self.id == 0 {
                    write!(f, "{}", self.name)
                } else {
                    write!(f, "{}#{}", self.name, self.id)
                }
            }
        }
    };
}

name_type!(
    /// A term variable.
    Var
);
name_type!(
    /// A type variable.
    TVar
);

/// Source of fresh disambiguators. Each checker owns one; it is raised past
/// every identifier it has seen before handing out new names.
#[derive(Clone, Debug)]
pub struct NameSupply {
    next: u32,
}

impl Default for NameSupply {
    fn default() -> Self {
        NameSupply { next: 1 }
    }
}

impl NameSupply {
    pub fn new() -> Self {
        Self::default()
    }

    /// A supply whose names are fresh for everything mentioned by `x`.
    pub fn above<T: Names + ?Sized>(x: &T) -> Self {
        let mut s = Self::new();
        s.observe(x);
        s
    }

    pub fn observe<T: Names + ?Sized>(&mut self, x: &T) {
        let max = x.max_id();
        if max >= self.next {
            self.next = max + 1;
        }
    }

    pub fn fresh_var(&mut self, base: &Var) -> Var {
        let v = base.renamed(self.next);
        self.next += 1;
        v
    }

    pub fn fresh_tvar(&mut self, base: &TVar) -> TVar {
        let v = base.renamed(self.next);
        self.next += 1;
        v
    }
}

/// A finite set of term variables, optionally containing the root capability.
#[derive(Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct CaptureSet {
    vars: BTreeSet<Var>,
    root: bool,
}

impl CaptureSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// `{cap}`
    pub fn root() -> Self {
        CaptureSet {
            vars: BTreeSet::new(),
            root: true,
        }
    }

    pub fn singleton(x: Var) -> Self {
        CaptureSet {
            vars: [x].into_iter().collect(),
            root: false,
        }
    }

    pub fn from_vars<I: IntoIterator<Item = Var>>(vars: I) -> Self {
        CaptureSet {
            vars: vars.into_iter().collect(),
            root: false,
        }
    }

    pub fn with_root(mut self, root: bool) -> Self {
        self.root = self.root || root;
        self
    }

    pub fn has_root(&self) -> bool {
        self.root
    }

    pub fn contains(&self, x: &Var) -> bool {
        self.vars.contains(x)
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> + '_ {
        self.vars.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty() && !self.root
    }

    pub fn len(&self) -> usize {
        self.vars.len() + usize::from(self.root)
    }

    pub fn insert(&mut self, x: Var) {
        self.vars.insert(x);
    }

    pub fn remove(&mut self, x: &Var) -> bool {
        self.vars.remove(x)
    }

    pub fn union(&self, other: &CaptureSet) -> CaptureSet {
        CaptureSet {
            vars: self.vars.union(&other.vars).cloned().collect(),
            root: self.root || other.root,
        }
    }

    pub fn without(&self, x: &Var) -> CaptureSet {
        let mut c = self.clone();
        c.vars.remove(x);
        c
    }

    /// Plain set inclusion (not subcapturing).
    pub fn is_subset(&self, other: &CaptureSet) -> bool {
        (!self.root || other.root) && self.vars.is_subset(&other.vars)
    }

    /// `[x := y] C`
    pub fn rename(&self, x: &Var, y: &Var) -> CaptureSet {
        if !self.vars.contains(x) {
            return self.clone();
        }
        let mut c = self.without(x);
        c.vars.insert(y.clone());
        c
    }

    /// `[x := D] C`: splices `D` in place of `x`.
    pub fn splice(&self, x: &Var, with: &CaptureSet) -> CaptureSet {
        if !self.vars.contains(x) {
            return self.clone();
        }
        self.without(x).union(with)
    }
}

impl std::fmt::Debug for CaptureSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut set = f.debug_set();
        set.entries(self.vars.iter());
        if self.root {
            set.entry(&format_args!("cap"));
        }
        set.finish()
    }
}

impl FromIterator<Var> for CaptureSet {
    fn from_iter<I: IntoIterator<Item = Var>>(iter: I) -> Self {
        CaptureSet::from_vars(iter)
    }
}

/// A capture set that may also contain the placeholder for a not-yet-known
/// input variable. Filling the hole is the only way back to a [`CaptureSet`].
#[derive(Clone, PartialEq, Eq, Hash, Default, Debug)]
pub struct HoledCaptureSet {
    base: CaptureSet,
    hole: bool,
}

impl HoledCaptureSet {
    /// `{◊}`
    pub fn hole() -> Self {
        HoledCaptureSet {
            base: CaptureSet::empty(),
            hole: true,
        }
    }

    pub fn new(base: CaptureSet, hole: bool) -> Self {
        HoledCaptureSet { base, hole }
    }

    pub fn closed(base: CaptureSet) -> Self {
        HoledCaptureSet { base, hole: false }
    }

    pub fn has_hole(&self) -> bool {
        self.hole
    }

    pub fn base(&self) -> &CaptureSet {
        &self.base
    }

    pub fn union(&self, other: &HoledCaptureSet) -> HoledCaptureSet {
        HoledCaptureSet {
            base: self.base.union(&other.base),
            hole: self.hole || other.hole,
        }
    }

    pub fn union_set(&self, other: &CaptureSet) -> HoledCaptureSet {
        HoledCaptureSet {
            base: self.base.union(other),
            hole: self.hole,
        }
    }

    pub fn with_hole(mut self) -> Self {
        self.hole = true;
        self
    }

    pub fn without_hole(mut self) -> Self {
        self.hole = false;
        self
    }

    pub fn without(&self, x: &Var) -> HoledCaptureSet {
        HoledCaptureSet {
            base: self.base.without(x),
            hole: self.hole,
        }
    }

    /// `C[x] = C \ {◊} ∪ {x}`, or `C` unchanged when there is no hole.
    pub fn fill_var(&self, x: &Var) -> CaptureSet {
        self.fill_set(&CaptureSet::singleton(x.clone()))
    }

    pub fn fill_set(&self, filler: &CaptureSet) -> CaptureSet {
        if self.hole {
            self.base.union(filler)
        } else {
            self.base.clone()
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Shape {
    TVar(TVar),
    Top,
    /// `∀(x: T) U`, with `x` bound in `U`.
    Fun(Var, Box<Type>, Box<Type>),
    /// `∀[X <: S] T`, with `X` bound in `T`.
    TFun(TVar, Box<Shape>, Box<Type>),
    Boxed(Box<Type>),
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Type {
    pub captures: CaptureSet,
    pub shape: Shape,
}

impl Type {
    pub fn new(captures: CaptureSet, shape: Shape) -> Self {
        Type { captures, shape }
    }

    /// `S ≡ {} S`
    pub fn pure(shape: Shape) -> Self {
        Type {
            captures: CaptureSet::empty(),
            shape,
        }
    }

    pub fn top() -> Self {
        Type::pure(Shape::Top)
    }

    pub fn fun(x: Var, param: Type, result: Type) -> Shape {
        Shape::Fun(x, Box::new(param), Box::new(result))
    }

    pub fn tfun(x: TVar, bound: Shape, result: Type) -> Shape {
        Shape::TFun(x, Box::new(bound), Box::new(result))
    }

    pub fn boxed(inner: Type) -> Shape {
        Shape::Boxed(Box::new(inner))
    }
}

impl From<Shape> for Type {
    fn from(shape: Shape) -> Self {
        Type::pure(shape)
    }
}

/// The top-level capture set of a type: `cs(C S) = C`, `cs(S) = {}`.
pub fn cs(t: &Type) -> &CaptureSet {
    &t.captures
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Term {
    Var(Var),
    Abs(Var, Type, Box<Term>),
    TAbs(TVar, Shape, Box<Term>),
    App(Var, Var),
    TApp(Var, Shape),
    Box(Var),
    Unbox(CaptureSet, Var),
    Let(Var, Box<Term>, Box<Term>),
}

impl Term {
    pub fn var(x: &Var) -> Term {
        Term::Var(x.clone())
    }

    pub fn abs(x: Var, param: Type, body: Term) -> Term {
        Term::Abs(x, param, Box::new(body))
    }

    pub fn tabs(x: TVar, bound: Shape, body: Term) -> Term {
        Term::TAbs(x, bound, Box::new(body))
    }

    pub fn let_(x: Var, bound: Term, body: Term) -> Term {
        Term::Let(x, Box::new(bound), Box::new(body))
    }

    pub fn kind(&self) -> Kind {
        kind_of(self)
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(x) => Some(x),
            _ => None,
        }
    }

    /// Number of nodes, used by the shrinker and for reporting.
    pub fn size(&self) -> usize {
        match self {
            Term::Abs(_, _, b) | Term::TAbs(_, _, b) => 1 + b.size(),
            Term::Let(_, s, b) => 1 + s.size() + b.size(),
            _ => 1,
        }
    }
}

/// The three-way classification used by type-level adaptation.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Kind {
    Var,
    Val,
    Trm,
}

impl Kind {
    /// Variables and values: the terms the let-hiding clause of `cv` applies to.
    pub fn is_answer(self) -> bool {
        matches!(self, Kind::Var | Kind::Val)
    }
}

pub fn kind_of(t: &Term) -> Kind {
    match t {
        Term::Var(_) => Kind::Var,
        Term::Abs(..) | Term::TAbs(..) | Term::Box(_) => Kind::Val,
        Term::App(..) | Term::TApp(..) | Term::Let(..) | Term::Unbox(..) => Kind::Trm,
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Binding {
    Term(Var, Type),
    Type(TVar, Shape),
}

/// An ordered typing context. Later bindings may refer to earlier ones.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Env {
    bindings: Vec<Binding>,
}

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_bindings(bindings: Vec<Binding>) -> Self {
        Env { bindings }
    }

    pub fn bindings(&self) -> &[Binding] {
        &self.bindings
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn push(&mut self, b: Binding) {
        self.bindings.push(b);
    }

    pub fn push_var(&mut self, x: Var, t: Type) {
        self.bindings.push(Binding::Term(x, t));
    }

    pub fn push_tvar(&mut self, x: TVar, s: Shape) {
        self.bindings.push(Binding::Type(x, s));
    }

    pub fn with_var(&self, x: Var, t: Type) -> Env {
        let mut e = self.clone();
        e.push_var(x, t);
        e
    }

    pub fn with_tvar(&self, x: TVar, s: Shape) -> Env {
        let mut e = self.clone();
        e.push_tvar(x, s);
        e
    }

    pub fn lookup(&self, x: &Var) -> Option<&Type> {
        self.bindings.iter().rev().find_map(|b| match b {
            Binding::Term(y, t) if y == x => Some(t),
            _ => None,
        })
    }

    pub fn lookup_tvar(&self, x: &TVar) -> Option<&Shape> {
        self.bindings.iter().rev().find_map(|b| match b {
            Binding::Type(y, s) if y == x => Some(s),
            _ => None,
        })
    }

    pub fn contains_var(&self, x: &Var) -> bool {
        self.lookup(x).is_some()
    }

    pub fn contains_tvar(&self, x: &TVar) -> bool {
        self.lookup_tvar(x).is_some()
    }

    /// Position of the binding of `x`; the binding-depth measure used to
    /// argue that subcapturing terminates.
    pub fn depth(&self, x: &Var) -> Option<usize> {
        self.bindings
            .iter()
            .rposition(|b| matches!(b, Binding::Term(y, _) if y == x))
    }

    /// `C ⊆ dom(Γ)`: every element is a bound term variable and the root
    /// capability is absent.
    pub fn covers(&self, c: &CaptureSet) -> bool {
        !c.has_root() && c.vars().all(|x| self.contains_var(x))
    }

    pub fn term_vars(&self) -> impl Iterator<Item = (&Var, &Type)> + '_ {
        self.bindings.iter().filter_map(|b| match b {
            Binding::Term(x, t) => Some((x, t)),
            _ => None,
        })
    }

    pub fn type_vars(&self) -> impl Iterator<Item = (&TVar, &Shape)> + '_ {
        self.bindings.iter().filter_map(|b| match b {
            Binding::Type(x, s) => Some((x, s)),
            _ => None,
        })
    }

    /// Drops the binding at `index`; used by the shrinker.
    pub fn without_index(&self, index: usize) -> Env {
        let mut e = self.clone();
        e.bindings.remove(index);
        e
    }
}

/// Anything whose identifiers a [`NameSupply`] must stay clear of.
pub trait Names {
    fn max_id(&self) -> u32;
}

impl Names for Var {
    fn max_id(&self) -> u32 {
        self.id
    }
}

impl Names for TVar {
    fn max_id(&self) -> u32 {
        self.id
    }
}

impl Names for CaptureSet {
    fn max_id(&self) -> u32 {
        self.vars.iter().map(|v| v.id).max().unwrap_or(0)
    }
}

impl Names for HoledCaptureSet {
    fn max_id(&self) -> u32 {
        self.base.max_id()
    }
}

impl Names for Shape {
    fn max_id(&self) -> u32 {
        match self {
            Shape::TVar(x) => x.id,
            Shape::Top => 0,
            Shape::Fun(x, p, r) => x.id.max(p.max_id()).max(r.max_id()),
            Shape::TFun(x, b, r) => x.id.max(b.max_id()).max(r.max_id()),
            Shape::Boxed(t) => t.max_id(),
        }
    }
}

impl Names for Type {
    fn max_id(&self) -> u32 {
        self.captures.max_id().max(self.shape.max_id())
    }
}

impl Names for Term {
    fn max_id(&self) -> u32 {
        match self {
            Term::Var(x) | Term::Box(x) => x.id,
            Term::Abs(x, t, b) => x.id.max(t.max_id()).max(b.max_id()),
            Term::TAbs(x, s, b) => x.id.max(s.max_id()).max(b.max_id()),
            Term::App(x, y) => x.id.max(y.id),
            Term::TApp(x, s) => x.id.max(s.max_id()),
            Term::Unbox(c, x) => x.id.max(c.max_id()),
            Term::Let(x, s, b) => x.id.max(s.max_id()).max(b.max_id()),
        }
    }
}

impl Names for Binding {
    fn max_id(&self) -> u32 {
        match self {
            Binding::Term(x, t) => x.id.max(t.max_id()),
            Binding::Type(x, s) => x.id.max(s.max_id()),
        }
    }
}

impl Names for Env {
    fn max_id(&self) -> u32 {
        self.bindings.iter().map(Names::max_id).max().unwrap_or(0)
    }
}

impl<A: Names, B: Names> Names for (A, B) {
    fn max_id(&self) -> u32 {
        self.0.max_id().max(self.1.max_id())
    }
}

impl<A: Names, B: Names, C: Names> Names for (A, B, C) {
    fn max_id(&self) -> u32 {
        self.0.max_id().max(self.1.max_id()).max(self.2.max_id())
    }
}

impl<T: Names> Names for &T {
    fn max_id(&self) -> u32 {
        (**self).max_id()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Var {
        Var::new(s)
    }

    #[test]
    fn variables_compare_by_name_and_disambiguator() {
        assert_eq!(v("x"), Var::with_id("x", 0));
        assert_ne!(v("x"), Var::with_id("x", 1));
        assert_ne!(v("x"), v("y"));
    }

    #[test]
    fn fresh_names_clear_observed_ids() {
        let t = Term::App(Var::with_id("f", 7), v("a"));
        let mut names = NameSupply::above(&t);
        let f = names.fresh_var(&v("f"));
        assert!(f.id() > 7);
        assert_ne!(names.fresh_var(&v("f")), f);
    }

    #[test]
    fn capture_sets_are_sets() {
        let a = CaptureSet::from_vars([v("a"), v("b"), v("a")]);
        let b = CaptureSet::from_vars([v("b"), v("a")]);
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        assert!(CaptureSet::empty().is_subset(&a));
        assert!(!CaptureSet::root().is_subset(&a));
    }

    #[test]
    fn splice_replaces_a_member() {
        let c = CaptureSet::from_vars([v("xf"), v("a")]);
        let io = CaptureSet::singleton(v("io"));
        assert_eq!(
            c.splice(&v("xf"), &io),
            CaptureSet::from_vars([v("io"), v("a")])
        );
        assert_eq!(c.splice(&v("zz"), &io), c);
    }

    #[test]
    fn fill_hole() {
        let c = HoledCaptureSet::new(CaptureSet::singleton(v("io")), true);
        assert_eq!(
            c.fill_var(&v("x")),
            CaptureSet::from_vars([v("io"), v("x")])
        );
        let closed = HoledCaptureSet::closed(CaptureSet::singleton(v("io")));
        assert_eq!(closed.fill_var(&v("x")), CaptureSet::singleton(v("io")));
        let ab = CaptureSet::from_vars([v("a"), v("b")]);
        assert_eq!(HoledCaptureSet::hole().fill_set(&ab), ab);
    }

    #[test]
    fn kinds() {
        assert_eq!(kind_of(&Term::var(&v("x"))), Kind::Var);
        assert_eq!(kind_of(&Term::Box(v("x"))), Kind::Val);
        assert_eq!(
            kind_of(&Term::Unbox(CaptureSet::singleton(v("io")), v("x"))),
            Kind::Trm
        );
        assert_eq!(kind_of(&Term::App(v("f"), v("x"))), Kind::Trm);
        assert_eq!(
            kind_of(&Term::abs(v("z"), Type::top(), Term::var(&v("z")))),
            Kind::Val
        );
    }

    #[test]
    fn bare_shape_is_empty_capturing_type() {
        assert_eq!(
            Type::from(Shape::Top),
            Type::new(CaptureSet::empty(), Shape::Top)
        );
        assert!(cs(&Type::pure(Type::boxed(Type::new(
            CaptureSet::singleton(v("x")),
            Shape::Top
        ))))
        .is_empty());
    }

    #[test]
    fn env_depth_and_cover() {
        let mut env = Env::new();
        env.push_var(v("io"), Type::new(CaptureSet::root(), Shape::Top));
        env.push_tvar(TVar::new("X"), Shape::Top);
        env.push_var(
            v("l"),
            Type::new(CaptureSet::singleton(v("io")), Shape::Top),
        );
        assert_eq!(env.depth(&v("io")), Some(0));
        assert_eq!(env.depth(&v("l")), Some(2));
        assert!(env.covers(&CaptureSet::from_vars([v("io"), v("l")])));
        assert!(!env.covers(&CaptureSet::root()));
        assert!(!env.covers(&CaptureSet::singleton(v("z"))));
    }
}
