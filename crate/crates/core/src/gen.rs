//! Random rulesets and terms for property tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::rules::{RewriteRule, RuleSet};
use crate::term::{Name, Term};

/// Size limits for [`arbitrary_ruleset`].
#[derive(Clone, Copy, Debug)]
pub struct Shape {
    /// Function symbols including `true`.
    pub symbols: usize,
    pub rules: usize,
    pub depth: usize,
}

impl Default for Shape {
    fn default() -> Self {
        Shape {
            symbols: 6,
            rules: 8,
            depth: 5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Signature {
    pub symbols: Vec<(Name, usize)>,
}

impl Signature {
    fn constants(&self) -> Vec<&(Name, usize)> {
        self.symbols.iter().filter(|(_, a)| *a == 0).collect()
    }
}

/// A random signature of at most `shape.symbols` symbols, always containing
/// `true` and at least one other constant.
pub fn random_signature<R: Rng>(rng: &mut R, shape: Shape) -> Signature {
    const NAMES: [&str; 8] = ["a", "b", "f", "g", "h", "k", "m", "p"];
    let n = rng.gen_range(2..=shape.symbols.max(2));
    let mut symbols = vec![(Name::new("true"), 0), (Name::new(NAMES[0]), 0)];
    for name in NAMES.iter().skip(1).take(n.saturating_sub(2)) {
        symbols.push((Name::new(name), rng.gen_range(0..=2)));
    }
    Signature { symbols }
}

/// A random ground term of depth at most `depth`.
pub fn ground_term<R: Rng>(rng: &mut R, sig: &Signature, depth: usize) -> Term {
    let pick = if depth <= 1 || rng.gen_bool(0.25) {
        *sig.constants().choose(rng).unwrap()
    } else {
        sig.symbols.choose(rng).unwrap()
    };
    let args = (0..pick.1)
        .map(|_| ground_term(rng, sig, depth - 1))
        .collect();
    Term::App(pick.0.clone(), args)
}

fn pattern<R: Rng>(rng: &mut R, sig: &Signature, depth: usize, vars: &mut Vec<Name>) -> Term {
    if depth > 1 && rng.gen_bool(0.45) {
        // reuse a variable now and then for nonlinear patterns
        if !vars.is_empty() && rng.gen_bool(0.15) {
            return Term::Var(vars.choose(rng).unwrap().clone());
        }
        let v = Name::new(&format!("X{}", vars.len()));
        vars.push(v.clone());
        return Term::Var(v);
    }
    let (f, arity) = sig.symbols.choose(rng).unwrap();
    let args = (0..*arity)
        .map(|_| pattern(rng, sig, depth.saturating_sub(1).max(2), vars))
        .collect();
    Term::App(f.clone(), args)
}

fn pattern_root<R: Rng>(rng: &mut R, sig: &Signature, depth: usize) -> (Term, Vec<Name>) {
    let mut vars = Vec::new();
    let (f, arity) = sig.symbols.choose(rng).unwrap();
    let args = (0..*arity).map(|_| pattern(rng, sig, depth, &mut vars)).collect();
    (Term::App(f.clone(), args), vars)
}

/// A term over `sig` and `vars` in which every variable of `unused` occurs at
/// most once (taken variables are removed from `unused`).
fn linear_term<R: Rng>(rng: &mut R, sig: &Signature, depth: usize, unused: &mut Vec<Name>) -> Term {
    if !unused.is_empty() && rng.gen_bool(0.3) {
        let i = rng.gen_range(0..unused.len());
        return Term::Var(unused.swap_remove(i));
    }
    let pick = if depth <= 1 {
        *sig.constants().choose(rng).unwrap()
    } else {
        sig.symbols.choose(rng).unwrap()
    };
    let args = (0..pick.1)
        .map(|_| linear_term(rng, sig, depth - 1, unused))
        .collect();
    Term::App(pick.0.clone(), args)
}

/// A random ruleset whose right-hand sides never duplicate a variable, so
/// terms grow by a bounded amount per step. Rules may loop or overlap.
pub fn arbitrary_ruleset<R: Rng>(rng: &mut R, sig: &Signature, shape: Shape) -> RuleSet {
    let count = rng.gen_range(1..=shape.rules.max(1));
    let mut rules = Vec::with_capacity(count);
    for i in 0..count {
        let (lhs, vars) = pattern_root(rng, sig, 3);
        let mut unused = vars.clone();
        let rhs = linear_term(rng, sig, 3, &mut unused);
        let mut conditions = Vec::new();
        if rng.gen_bool(0.35) {
            for _ in 0..rng.gen_range(1..=2) {
                let mut pool = vars.clone();
                conditions.push(linear_term(rng, sig, 2, &mut pool));
            }
        }
        rules.push(RewriteRule::new(&format!("r{i}"), lhs, rhs, conditions));
    }
    RuleSet::new(rules).expect("generated rules are well-formed")
}

/// One random (ruleset, term) pair within `shape`.
pub fn arbitrary_case<R: Rng>(rng: &mut R, shape: Shape) -> (RuleSet, Term) {
    let sig = random_signature(rng, shape);
    let rules = arbitrary_ruleset(rng, &sig, shape);
    let term = ground_term(rng, &sig, shape.depth);
    (rules, term)
}

const CONSTRUCTORS: [(&str, usize); 5] =
    [("zero", 0), ("true", 0), ("false", 0), ("s", 1), ("node", 2)];

struct Level {
    name: Name,
    arity: usize,
}

struct RhsCtx<'a> {
    lower: &'a [Level],
    current: &'a Level,
    /// Strict subterms of the recursion argument.
    rec: Vec<Name>,
}

fn constructor_term<R: Rng>(rng: &mut R, depth: usize) -> Term {
    let (c, arity) = if depth <= 1 {
        CONSTRUCTORS[rng.gen_range(0..3)]
    } else {
        *CONSTRUCTORS.choose(rng).unwrap()
    };
    Term::App(
        Name::new(c),
        (0..arity).map(|_| constructor_term(rng, depth - 1)).collect(),
    )
}

fn hier_rhs<R: Rng>(rng: &mut R, ctx: &mut RhsCtx<'_>, depth: usize, unused: &mut Vec<Name>) -> Term {
    let roll = rng.gen_range(0..10);
    if roll < 3 && !unused.is_empty() {
        let i = rng.gen_range(0..unused.len());
        let v = unused.swap_remove(i);
        ctx.rec.retain(|r| *r != v);
        return Term::Var(v);
    }
    if depth > 1 && roll < 5 && !ctx.lower.is_empty() {
        let f = &ctx.lower[rng.gen_range(0..ctx.lower.len())];
        let args = (0..f.arity)
            .map(|_| hier_rhs(rng, ctx, depth - 1, unused))
            .collect();
        return Term::App(f.name.clone(), args);
    }
    if depth > 1 && roll < 7 && !ctx.rec.is_empty() {
        let i = rng.gen_range(0..ctx.rec.len());
        let v = ctx.rec.swap_remove(i);
        unused.retain(|u| *u != v);
        let mut args = vec![Term::Var(v)];
        // the remaining arguments never call the function being defined
        let mut inner = RhsCtx {
            lower: ctx.lower,
            current: ctx.current,
            rec: Vec::new(),
        };
        for _ in 1..ctx.current.arity {
            args.push(hier_rhs(rng, &mut inner, depth - 1, unused));
        }
        return Term::App(ctx.current.name.clone(), args.into());
    }
    let (c, arity) = if depth <= 1 {
        CONSTRUCTORS[rng.gen_range(0..3)]
    } else {
        *CONSTRUCTORS.choose(rng).unwrap()
    };
    Term::App(
        Name::new(c),
        (0..arity)
            .map(|_| hier_rhs(rng, ctx, depth - 1, unused))
            .collect(),
    )
}

/// A terminating, left-linear ruleset built in levels: each defined function
/// recurses structurally on its first argument and otherwise only calls
/// functions of lower levels. Every left-hand side is covered by an
/// unconditional rule; some are preceded by a conditional variant whose
/// conditions call lower levels. Returns the rules and a handful of start
/// terms.
pub fn hierarchical_fixture<R: Rng>(rng: &mut R) -> (RuleSet, Vec<Term>) {
    let n = rng.gen_range(2..=4);
    let levels: Vec<Level> = (0..n)
        .map(|i| Level {
            name: Name::new(&format!("f{i}")),
            arity: rng.gen_range(1..=2),
        })
        .collect();
    let mut rules = Vec::new();
    for (i, level) in levels.iter().enumerate() {
        let lower = &levels[..i];
        let patterns = [
            (Term::constant("zero"), vec![]),
            (Term::app("s", vec![Term::var("X")]), vec![Name::new("X")]),
            (
                Term::app("node", vec![Term::var("X"), Term::var("Z")]),
                vec![Name::new("X"), Name::new("Z")],
            ),
            (Term::constant("true"), vec![]),
            (Term::constant("false"), vec![]),
        ];
        for (k, (first, rec)) in patterns.into_iter().enumerate() {
            let mut args = vec![first];
            let mut vars = rec.clone();
            if level.arity == 2 {
                args.push(Term::var("Y"));
                vars.push(Name::new("Y"));
            }
            let lhs = Term::App(level.name.clone(), args.into());
            if !lower.is_empty() && rng.gen_bool(0.5) {
                let conds = (0..rng.gen_range(1..=3))
                    .map(|_| {
                        let f = &lower[rng.gen_range(0..lower.len())];
                        let args = (0..f.arity)
                            .map(|_| {
                                if !vars.is_empty() && rng.gen_bool(0.6) {
                                    Term::Var(vars.choose(rng).unwrap().clone())
                                } else {
                                    constructor_term(rng, 2)
                                }
                            })
                            .collect();
                        Term::App(f.name.clone(), args)
                    })
                    .collect();
                let mut ctx = RhsCtx {
                    lower,
                    current: level,
                    rec: rec.clone(),
                };
                let rhs = hier_rhs(rng, &mut ctx, 3, &mut vars.clone());
                rules.push(RewriteRule::new(
                    &format!("{}c{k}", level.name),
                    lhs.clone(),
                    rhs,
                    conds,
                ));
            }
            let mut ctx = RhsCtx {
                lower,
                current: level,
                rec,
            };
            let rhs = hier_rhs(rng, &mut ctx, 3, &mut vars.clone());
            rules.push(RewriteRule::new(
                &format!("{}u{k}", level.name),
                lhs,
                rhs,
                vec![],
            ));
        }
    }
    let rules = RuleSet::new(rules).expect("generated rules are well-formed");

    let terms = (0..4)
        .map(|_| {
            let f = &levels[rng.gen_range(0..levels.len())];
            Term::App(
                f.name.clone(),
                (0..f.arity).map(|_| constructor_term(rng, 4)).collect(),
            )
        })
        .collect();
    (rules, terms)
}
