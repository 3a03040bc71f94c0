//! Grid partitioning: uniform triangular terms per input and one rule per
//! cell of the Cartesian product.

use crate::error::{Error, Result};
use crate::numeric::RngStream;

use super::membership::{MembershipFn, MfKind};
use super::ops::{Defuzz, TConorm, TNorm};
use super::system::{FisKind, FuzzyRule, FuzzySystem, FuzzyVariable, RuleConsequent};

/// `k` uniformly spaced triangular terms spanning `(lo, hi)`: apexes at
/// equal steps, each triangle reaching the neighboring apexes (50% overlap),
/// which makes the terms a partition of unity on the universe.
pub fn uniform_triangles(universe: (f64, f64), k: usize) -> Result<Vec<MembershipFn>> {
    if k < 2 {
        return Err(Error::InvalidInput("grid partition needs >= 2 terms".into()));
    }
    let (lo, hi) = universe;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidInput(format!(
            "universe ({}, {}) is not a proper interval",
            lo, hi
        )));
    }
    let step = (hi - lo) / (k - 1) as f64;
    (0..k)
        .map(|i| {
            let apex = lo + i as f64 * step;
            MembershipFn::new(
                MfKind::Triangular {
                    a: apex - step,
                    b: apex,
                    c: apex + step,
                },
                term_label(i, k),
            )
        })
        .collect()
}

/// Conventional labels for small partitions, positional ones otherwise.
fn term_label(i: usize, k: usize) -> String {
    match (k, i) {
        (2, 0) => "small".into(),
        (2, 1) => "large".into(),
        (3, 0) => "small".into(),
        (3, 1) => "medium".into(),
        (3, 2) => "large".into(),
        _ => format!("t{}", i + 1),
    }
}

/// Build a complete grid-partitioned system: every input (and the Mamdani
/// output) gets `terms_per_var` uniform triangles, and the rule base covers
/// every cell of the Cartesian product. Cells are indexed with the first
/// input varying fastest. Takagi-Sugeno consequents start at zero; Mamdani
/// consequents are drawn uniformly from the output terms.
pub fn grid_partition(
    input_vars: &[FuzzyVariable],
    output_var: Option<&FuzzyVariable>,
    terms_per_var: usize,
    kind: FisKind,
    rng: &mut RngStream,
) -> Result<FuzzySystem> {
    if input_vars.is_empty() {
        return Err(Error::InvalidInput("grid partition needs inputs".into()));
    }
    let inputs: Vec<FuzzyVariable> = input_vars
        .iter()
        .map(|v| {
            FuzzyVariable::new(
                v.name.clone(),
                v.universe,
                uniform_triangles(v.universe, terms_per_var)?,
            )
        })
        .collect::<Result<_>>()?;

    let output = match (kind, output_var) {
        (FisKind::Mamdani, Some(v)) => Some(FuzzyVariable::new(
            v.name.clone(),
            v.universe,
            uniform_triangles(v.universe, terms_per_var)?,
        )?),
        (FisKind::Mamdani, None) => {
            return Err(Error::InvalidInput(
                "mamdani grid partition needs an output variable".into(),
            ));
        }
        (FisKind::TakagiSugeno, _) => None,
    };

    let d = inputs.len();
    let n_rules = terms_per_var.pow(d as u32);
    let mut rules = Vec::with_capacity(n_rules);
    for cell in 0..n_rules {
        let mut antecedent = Vec::with_capacity(d);
        let mut rest = cell;
        for _ in 0..d {
            antecedent.push(Some(rest % terms_per_var));
            rest /= terms_per_var;
        }
        let consequent = match kind {
            FisKind::TakagiSugeno => RuleConsequent::Linear {
                coeffs: vec![0.0; d],
                offset: 0.0,
            },
            FisKind::Mamdani => RuleConsequent::OutputTerm(rng.below(terms_per_var)),
        };
        rules.push(FuzzyRule {
            antecedent,
            consequent,
            weight: 1.0,
        });
    }

    let fs = FuzzySystem {
        kind,
        inputs,
        output,
        rules,
        tnorm: TNorm::Product,
        tconorm: TConorm::Max,
        defuzz: Defuzz::Centroid,
    };
    fs.validate()?;
    Ok(fs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::membership::mf_eval;
    use approx::assert_relative_eq;

    fn bare_var(name: &str, lo: f64, hi: f64) -> FuzzyVariable {
        FuzzyVariable::new(
            name,
            (lo, hi),
            vec![MembershipFn::new(
                MfKind::Triangular {
                    a: lo,
                    b: 0.5 * (lo + hi),
                    c: hi,
                },
                "placeholder",
            )
            .unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn two_by_three_gives_nine_rules() {
        let mut rng = RngStream::new(0, 0);
        let fs = grid_partition(
            &[bare_var("a", 0.0, 1.0), bare_var("b", 0.0, 1.0)],
            None,
            3,
            FisKind::TakagiSugeno,
            &mut rng,
        )
        .unwrap();
        assert_eq!(fs.rules.len(), 9);
        assert_eq!(fs.inputs[0].terms.len(), 3);
    }

    #[test]
    fn complementary_pair_sums_to_one() {
        let mut rng = RngStream::new(0, 0);
        let fs = grid_partition(
            &[bare_var("a", -1.0, 3.0)],
            None,
            2,
            FisKind::TakagiSugeno,
            &mut rng,
        )
        .unwrap();
        assert_eq!(fs.rules.len(), 2);
        for i in 0..=100 {
            let x = -1.0 + 4.0 * i as f64 / 100.0;
            let total: f64 = fs.inputs[0].terms.iter().map(|t| mf_eval(t, x)).sum();
            assert_relative_eq!(total, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn partition_of_unity_for_many_term_counts() {
        for k in 2..=6 {
            let terms = uniform_triangles((2.0, 7.0), k).unwrap();
            for i in 0..=200 {
                let x = 2.0 + 5.0 * i as f64 / 200.0;
                let total: f64 = terms.iter().map(|t| mf_eval(t, x)).sum();
                assert_relative_eq!(total, 1.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn medium_large_cell_is_rule_eight() {
        // Labels small/medium/large, 1-based rule counting: the cell
        // (input-1 = medium, input-2 = large) must be rule 8, which pins
        // the enumeration order to first-input-fastest.
        let mut rng = RngStream::new(0, 0);
        let fs = grid_partition(
            &[bare_var("a", 0.0, 1.0), bare_var("b", 0.0, 1.0)],
            None,
            3,
            FisKind::TakagiSugeno,
            &mut rng,
        )
        .unwrap();
        let medium = fs.inputs[0]
            .terms
            .iter()
            .position(|t| t.label == "medium")
            .unwrap();
        let large = fs.inputs[1]
            .terms
            .iter()
            .position(|t| t.label == "large")
            .unwrap();
        let rule_idx = fs
            .rules
            .iter()
            .position(|r| r.antecedent == vec![Some(medium), Some(large)])
            .unwrap();
        assert_eq!(rule_idx + 1, 8);
    }

    #[test]
    fn ts_consequents_start_at_zero() {
        let mut rng = RngStream::new(0, 0);
        let fs = grid_partition(
            &[bare_var("a", 0.0, 1.0)],
            None,
            4,
            FisKind::TakagiSugeno,
            &mut rng,
        )
        .unwrap();
        for r in &fs.rules {
            match &r.consequent {
                RuleConsequent::Linear { coeffs, offset } => {
                    assert!(coeffs.iter().all(|c| *c == 0.0));
                    assert_eq!(*offset, 0.0);
                }
                _ => panic!("expected linear consequent"),
            }
        }
    }

    #[test]
    fn mamdani_grid_draws_output_terms() {
        let mut rng = RngStream::new(7, 0);
        let fs = grid_partition(
            &[bare_var("a", 0.0, 1.0), bare_var("b", 0.0, 1.0)],
            Some(&bare_var("y", -2.0, 2.0)),
            3,
            FisKind::Mamdani,
            &mut rng,
        )
        .unwrap();
        assert_eq!(fs.output.as_ref().unwrap().terms.len(), 3);
        let mut seen = [false; 3];
        for r in &fs.rules {
            match r.consequent {
                RuleConsequent::OutputTerm(t) => seen[t] = true,
                _ => panic!("expected output term"),
            }
        }
        // 9 uniform draws over 3 terms: all hit with overwhelming odds.
        assert!(seen.iter().all(|s| *s));
        // Deterministic under the seed.
        let mut rng2 = RngStream::new(7, 0);
        let fs2 = grid_partition(
            &[bare_var("a", 0.0, 1.0), bare_var("b", 0.0, 1.0)],
            Some(&bare_var("y", -2.0, 2.0)),
            3,
            FisKind::Mamdani,
            &mut rng2,
        )
        .unwrap();
        assert_eq!(fs, fs2);
    }

    #[test]
    fn rejects_degenerate_requests() {
        let mut rng = RngStream::new(0, 0);
        assert!(grid_partition(
            &[bare_var("a", 0.0, 1.0)],
            None,
            1,
            FisKind::TakagiSugeno,
            &mut rng
        )
        .is_err());
        assert!(grid_partition(&[], None, 3, FisKind::TakagiSugeno, &mut rng).is_err());
        assert!(grid_partition(
            &[bare_var("a", 0.0, 1.0)],
            None,
            3,
            FisKind::Mamdani,
            &mut rng
        )
        .is_err());
    }
}
