//! Perturbations: removing box operations from well-typed programs, and a
//! deliberately wrong `cv` for checking that the runner catches bugs.

use capbox::{CaptureSet, NameSupply, Subst, Term};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gen::GenConfig;

/// Rewrites a random subset of `let y = box x in u` and
/// `let y = C unbox x in u` to `[y := x] u`. Each eligible let is dropped
/// with probability `cfg.drop_rate`, decided by a stream seeded from
/// `cfg.seed`. A function whose body becomes `f x` for its own parameter
/// `x` is then collapsed to `f`, so hand-written eta-wrappers disappear.
pub fn drop_boxes(t: &Term, cfg: &GenConfig) -> Term {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_d20b);
    let mut names = NameSupply::above(t);
    go(t, cfg.drop_rate, &mut rng, &mut names)
}

fn go(t: &Term, rate: f64, rng: &mut ChaCha8Rng, names: &mut NameSupply) -> Term {
    match t {
        Term::Let(y, s, body) => {
            if let Term::Box(x) | Term::Unbox(_, x) = &**s {
                if rate > 0.0 && rng.gen_bool(rate.min(1.0)) {
                    let body = Subst::Var(y.clone(), x.clone()).term(body, names);
                    return go(&body, rate, rng, names);
                }
            }
            let s = go(s, rate, rng, names);
            Term::let_(y.clone(), s, go(body, rate, rng, names))
        }
        Term::Abs(x, ty, body) => {
            let new_body = go(body, rate, rng, names);
            match &new_body {
                Term::App(f, a) if a == x && f != x && new_body != **body => Term::Var(f.clone()),
                _ => Term::abs(x.clone(), ty.clone(), new_body),
            }
        }
        Term::TAbs(x, s, body) => Term::tabs(x.clone(), s.clone(), go(body, rate, rng, names)),
        _ => t.clone(),
    }
}

/// Captured variables with the unbox clause forgetting its annotation.
pub fn broken_cv(t: &Term) -> CaptureSet {
    match t {
        Term::Unbox(_, x) => CaptureSet::singleton(x.clone()),
        Term::Var(_) | Term::Box(_) | Term::App(..) | Term::TApp(..) => capbox::cv(t),
        Term::Abs(x, _, body) => broken_cv(body).without(x),
        Term::TAbs(_, _, body) => broken_cv(body),
        Term::Let(x, s, body) => {
            let body_cv = broken_cv(body);
            if s.kind().is_answer() && !body_cv.contains(x) {
                body_cv
            } else {
                broken_cv(s).union(&body_cv.without(x))
            }
        }
    }
}
