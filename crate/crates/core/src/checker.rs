//! Shared state threaded through every judgment: fuel and fresh names.

use crate::error::{TResult, TypeError};
use crate::syntax::{NameSupply, Names, TVar, Var};

pub const DEFAULT_FUEL: u64 = 10_000;

/// A budget of rule applications. Running out is reported as
/// [`TypeError::FuelExhausted`], never as a negative answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fuel {
    remaining: u64,
    spent: u64,
}

impl Fuel {
    pub fn new(budget: u64) -> Self {
        Fuel {
            remaining: budget,
            spent: 0,
        }
    }

    pub fn remaining(&self) -> u64 {
        self.remaining
    }

    /// Rule applications charged so far.
    pub fn spent(&self) -> u64 {
        self.spent
    }

    pub fn tick(&mut self) -> TResult<()> {
        if self.remaining == 0 {
            return Err(TypeError::FuelExhausted);
        }
        self.remaining -= 1;
        self.spent += 1;
        Ok(())
    }
}

impl Default for Fuel {
    fn default() -> Self {
        Fuel::new(DEFAULT_FUEL)
    }
}

/// How the leak of an adapted type function is computed at the type level.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TFunLeak {
    /// The adapted function's own variable is part of the leak.
    #[default]
    WithInput,
    /// Only the leak of the body adaptation, without the input variable.
    BodyOnly,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Options {
    pub tfun_leak: TFunLeak,
}

/// Owns the fuel and the fresh-name supply for one run of a judgment.
#[derive(Clone, Debug)]
pub struct Checker {
    pub fuel: Fuel,
    pub options: Options,
    names: NameSupply,
}

impl Checker {
    pub fn new(fuel: Fuel) -> Self {
        Checker {
            fuel,
            options: Options::default(),
            names: NameSupply::new(),
        }
    }

    pub fn with_options(fuel: Fuel, options: Options) -> Self {
        Checker {
            fuel,
            options,
            names: NameSupply::new(),
        }
    }

    /// Keeps fresh names clear of everything in `x`. Call on every input
    /// before running a judgment.
    pub fn observe<T: Names + ?Sized>(&mut self, x: &T) {
        self.names.observe(x);
    }

    pub(crate) fn tick(&mut self) -> TResult<()> {
        self.fuel.tick()
    }

    pub(crate) fn names(&mut self) -> &mut NameSupply {
        &mut self.names
    }

    pub fn fresh_var(&mut self, base: &Var) -> Var {
        self.names.fresh_var(base)
    }

    pub fn fresh_tvar(&mut self, base: &TVar) -> TVar {
        self.names.fresh_tvar(base)
    }
}

/// Stack reserved per unit of fuel. Every rule application may add a frame,
/// so recursion depth is bounded by the budget.
const STACK_PER_FUEL: u64 = 16 * 1024;
const MIN_STACK: u64 = 16 * 1024 * 1024;
const MAX_STACK: u64 = 8 * 1024 * 1024 * 1024;

/// Runs `f` on a thread whose stack is large enough for `fuel` nested rule
/// applications.
pub fn with_stack_for<R: Send>(fuel: Fuel, f: impl FnOnce() -> R + Send) -> R {
    let size = fuel
        .remaining()
        .saturating_mul(STACK_PER_FUEL)
        .clamp(MIN_STACK, MAX_STACK);
    std::thread::scope(|scope| {
        std::thread::Builder::new()
            .stack_size(usize::try_from(size).unwrap_or(usize::MAX))
            .spawn_scoped(scope, f)
            .expect("failed to spawn checker thread")
            .join()
            .unwrap_or_else(|e| std::panic::resume_unwind(e))
    })
}

/// Runs `f` on a checker primed with `inputs`, then hands the fuel back.
pub(crate) fn with_checker<R: Send>(
    fuel: &mut Fuel,
    inputs: &(impl Names + Sync),
    f: impl FnOnce(&mut Checker) -> R + Send,
) -> R {
    let start = *fuel;
    let (out, after) = with_stack_for(start, move || {
        let mut ck = Checker::new(start);
        ck.observe(inputs);
        let out = f(&mut ck);
        (out, ck.fuel)
    });
    *fuel = after;
    out
}
