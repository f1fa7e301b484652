//! Subcapturing.
//!
//! Each element of the smaller set is either a member of the larger one, or
//! (for variables) its declared capture set subcaptures the larger one. The
//! root capability has no binding, so it only succeeds by membership.
//! Recursion always moves to variables bound earlier in the environment,
//! which bounds the search without fuel.

use crate::syntax::{CaptureSet, Env, Var};

pub fn subcapture(env: &Env, sub: &CaptureSet, sup: &CaptureSet) -> bool {
    if sub.has_root() && !sup.has_root() {
        return false;
    }
    sub.vars().all(|x| var_subcaptures(env, x, sup))
}

fn var_subcaptures(env: &Env, x: &Var, sup: &CaptureSet) -> bool {
    if sup.contains(x) {
        return true;
    }
    let (Some(depth), Some(t)) = (env.depth(x), env.lookup(x)) else {
        return false;
    };
    let declared = &t.captures;
    let decreasing = declared
        .vars()
        .all(|y| env.depth(y).is_some_and(|d| d < depth));
    debug_assert!(
        decreasing || crate::wf::wf_env(env).is_err(),
        "binding depth must decrease at {x:?}"
    );
    if !decreasing {
        return false;
    }
    subcapture(env, declared, sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_capture_set, parse_env};
    use proptest::prelude::*;

    fn background() -> Env {
        parse_env(
            "file : {cap} Top\nconsole : {cap} Top\nop : {file, console} all (z: Top) -> Top\nl : {console} Top",
        )
        .unwrap()
    }

    fn sc(env: &Env, a: &str, b: &str) -> bool {
        subcapture(
            env,
            &parse_capture_set(a).unwrap(),
            &parse_capture_set(b).unwrap(),
        )
    }

    /// Independent oracle over the generated (acyclic) environments: an
    /// element is covered when it is a member, or when it has a binding and
    /// everything it declares is covered.
    fn oracle(env: &Env, sub: &CaptureSet, sup: &CaptureSet) -> bool {
        fn covered(env: &Env, x: &Var, sup: &CaptureSet) -> bool {
            sup.contains(x)
                || env.lookup(x).is_some_and(|t| {
                    (!t.captures.has_root() || sup.has_root())
                        && t.captures.vars().all(|y| covered(env, y, sup))
                })
        }
        (!sub.has_root() || sup.has_root()) && sub.vars().all(|x| covered(env, x, sup))
    }

    #[test]
    fn background_relations() {
        let env = background();
        assert!(sc(&env, "{op}", "{file, console}"));
        assert!(sc(&env, "{file}", "{file, console}"));
        assert!(sc(&env, "{l}", "{console}"));
        assert!(sc(&env, "{}", "{}"));
        assert!(!sc(&env, "{file}", "{console}"));
        assert!(!sc(&env, "{l}", "{file}"));
        assert!(sc(&env, "{l, op}", "{cap}"));
        assert!(!sc(&env, "{cap}", "{file, console}"));
        assert!(sc(&env, "{cap}", "{cap}"));
    }

    fn arb_case() -> impl Strategy<Value = (Env, CaptureSet, CaptureSet, CaptureSet)> {
        let names = ["a", "b", "c", "d", "e", "f"];
        let decl = proptest::collection::vec((proptest::bits::u8::masked(0x3f), any::<bool>()), 6);
        let set = || (proptest::bits::u8::masked(0x3f), any::<bool>());
        (decl, set(), set(), set()).prop_map(move |(decl, s1, s2, s3)| {
            let mut env = Env::new();
            for (i, (mask, root)) in decl.iter().enumerate() {
                let vars = (0..i)
                    .filter(|j| mask & (1 << j) != 0)
                    .map(|j| Var::new(names[j]));
                let c = CaptureSet::from_vars(vars).with_root(*root || i == 0);
                env.push_var(
                    Var::new(names[i]),
                    crate::syntax::Type::new(c, crate::syntax::Shape::Top),
                );
            }
            let mk = |(mask, root): (u8, bool)| {
                CaptureSet::from_vars(
                    (0..6)
                        .filter(|j| mask & (1 << j) != 0)
                        .map(|j| Var::new(names[j])),
                )
                .with_root(root)
            };
            (env, mk(s1), mk(s2), mk(s3))
        })
    }

    proptest! {
        #[test]
        fn agrees_with_reachability((env, a, b, _c) in arb_case()) {
            prop_assert_eq!(subcapture(&env, &a, &b), oracle(&env, &a, &b));
        }

        #[test]
        fn reflexive((env, a, _b, _c) in arb_case()) {
            prop_assert!(subcapture(&env, &a, &a));
        }

        #[test]
        fn transitive((env, a, b, c) in arb_case()) {
            if subcapture(&env, &a, &b) && subcapture(&env, &b, &c) {
                prop_assert!(subcapture(&env, &a, &c));
            }
        }

        #[test]
        fn monotone((env, a, b, c) in arb_case()) {
            let smaller = CaptureSet::from_vars(a.vars().filter(|x| c.contains(x)).cloned());
            if subcapture(&env, &a, &b) {
                prop_assert!(subcapture(&env, &smaller, &b));
            }
        }
    }
}
