//! Ready-made models: n-queens and seeded random binary CSPs.

#[cfg(feature = "random")]
pub use random::{random_csp, CspShape};

/// The n-queens model in the shape of the classic Dominion example: one
/// variable per row, values are columns.
pub fn queens_source(n: usize) -> String {
    format!(
        "language Dominion 0.1
letting n = {n}
dim queens[n]: int
find queens[..]: int {{1..n}}
such that
alldifferent alldiff(queens[..])
diagonals1 [ not(eq1 eq(queens[i], add(queens[j], j-i))) |
    i in {{0..n-2}}, j in {{i+1..n-1}} ]
diagonals2 [ not(eq2 eq(queens[i], add(queens[j], i-j))) |
    i in {{0..n-2}}, j in {{i+1..n-1}} ]
"
    )
}

#[cfg(feature = "random")]
mod random {
    use std::collections::BTreeMap;

    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::domain::Domain;
    use crate::model::{Constraint, Expr, Model, VarArray, VarRef};

    /// Size limits for [`random_csp`].
    #[derive(Debug, Clone, Copy)]
    pub struct CspShape {
        pub min_vars: usize,
        pub max_vars: usize,
        pub min_domain: usize,
        pub max_domain: usize,
        /// Upper bound on the product of domain sizes.
        pub max_space: u64,
    }

    impl Default for CspShape {
        fn default() -> Self {
            Self {
                min_vars: 4,
                max_vars: 8,
                min_domain: 3,
                max_domain: 6,
                max_space: 100_000,
            }
        }
    }

    /// A random model with mostly binary constraints over one or two arrays.
    /// The same seed always yields the same model.
    pub fn random_csp(seed: u64, shape: CspShape) -> Model {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(shape.min_vars..=shape.max_vars);
        let mut sizes: Vec<usize> = (0..n)
            .map(|_| rng.gen_range(shape.min_domain..=shape.max_domain))
            .collect();
        while sizes.iter().map(|&s| s as u64).product::<u64>() > shape.max_space {
            let i = (0..n).max_by_key(|&i| (sizes[i], i)).expect("non-empty");
            sizes[i] -= 1;
        }
        let split = if n >= 4 && rng.gen_bool(0.5) {
            rng.gen_range(1..n)
        } else {
            n
        };
        let mut arrays = Vec::new();
        let mut refs = Vec::new();
        for (name, range) in [("x", 0..split), ("y", split..n)] {
            if range.is_empty() {
                continue;
            }
            // Arrays share one domain, so the smallest drawn size wins.
            let size = range.clone().map(|i| sizes[i]).min().expect("non-empty") as i64;
            let lo = rng.gen_range(-1..=1);
            let mut dom = Domain::range(lo, lo + size - 1);
            if size >= 4 && rng.gen_bool(0.25) {
                dom = dom.remove(lo + 1);
                dom = Domain::from_values(dom.iter().chain([lo + size]));
            }
            for i in 0..range.len() {
                refs.push(VarRef::new(name, i));
            }
            arrays.push(VarArray::new(name, range.len(), dom));
        }
        let var = |r: &VarRef| Expr::Var(r.clone());
        let offset = |rng: &mut ChaCha8Rng, e: Expr| match rng.gen_range(-2..=2) {
            0 => e,
            k => Expr::plus(e, k),
        };
        let count = rng.gen_range(n / 2..=n + 2);
        let mut constraints = Vec::with_capacity(count);
        for c in 0..count {
            let label = format!("c{c}");
            let mut pair = refs.choose_multiple(&mut rng, 2);
            let a = pair.next().expect("two variables").clone();
            let b = pair.next().expect("two variables").clone();
            let lhs = var(&a);
            let rhs = offset(&mut rng, var(&b));
            let con = match rng.gen_range(0..10) {
                0..=2 => Constraint::not(label.clone(), Constraint::eq(format!("{label}_e"), lhs, rhs)),
                3..=4 => Constraint::leq(label, lhs, rhs),
                5 => Constraint::eq(label, lhs, rhs),
                6 => {
                    let k = rng.gen_range(2..=n.min(4));
                    let vs = refs.choose_multiple(&mut rng, k).cloned().collect();
                    Constraint::alldiff(label, vs)
                }
                7 => {
                    let v = rng.gen_range(-1..=4);
                    Constraint::not(
                        label.clone(),
                        Constraint::and(
                            format!("{label}_a"),
                            vec![
                                Constraint::eq(format!("{label}_a0"), lhs, Expr::IntLit(v)),
                                Constraint::leq(format!("{label}_a1"), rhs, Expr::IntLit(v)),
                            ],
                        ),
                    )
                }
                8 => {
                    let v = rng.gen_range(0..=3);
                    Constraint::not(
                        label.clone(),
                        Constraint::eq(format!("{label}_e"), lhs, Expr::IntLit(v)),
                    )
                }
                _ => Constraint::not(
                    label.clone(),
                    Constraint::leq(format!("{label}_l"), offset(&mut rng, var(&b)), lhs),
                ),
            };
            constraints.push(con);
        }
        Model::new(BTreeMap::new(), arrays, constraints).expect("generated models are well formed")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_queens_matches_the_reference_text() {
        assert_eq!(queens_source(4), crate::dominion::tests::QUEENS4);
    }

    #[test]
    fn random_models_are_reproducible_and_bounded() {
        let shape = CspShape::default();
        for seed in 0..100 {
            let m = random_csp(seed, shape);
            assert_eq!(m, random_csp(seed, shape));
            assert!((shape.min_vars..=shape.max_vars).contains(&m.var_count()));
            let space: u64 = m.var_refs().map(|r| m.declared_domain(&r).unwrap().len()).product();
            assert!(space <= shape.max_space, "seed {seed}: {space}");
        }
    }
}
