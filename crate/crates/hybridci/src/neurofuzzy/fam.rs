//! Fuzzy associative memories: one max-min correlation matrix per rule.
//!
//! Rule weights play no part here; the reliability of weighted FAM rules
//! is questionable enough that every rule is stored at full strength.

use crate::error::{Error, Result};
use crate::fuzzy::{mf_eval, FuzzyRule, FuzzyVariable, RuleConsequent};
use crate::numeric::Matrix;

/// Per-rule correlation matrices over a discretized product of the input
/// universes (rows, first input varying fastest) and the output universe
/// (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct FAMStore {
    input_grids: Vec<Vec<f64>>,
    output_grid: Vec<f64>,
    matrices: Vec<Matrix>,
}

/// Result of an associative recall.
#[derive(Debug, Clone, PartialEq)]
pub struct FamRecall {
    /// Recalled fuzzy set on the output grid.
    pub membership: Vec<f64>,
    /// Centroid of the recalled set, or the universe midpoint when empty.
    pub value: f64,
    pub zero_activation: bool,
}

fn uniform_grid((lo, hi): (f64, f64), points: usize) -> Vec<f64> {
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|j| lo + j as f64 * step).collect()
}

/// Encode rules as max-min correlation matrices: M[cell][j] =
/// min(μ_antecedent(cell), μ_consequent(grid_j)).
pub fn fam_store(
    rules: &[FuzzyRule],
    inputs: &[FuzzyVariable],
    output: &FuzzyVariable,
    grid_points: usize,
) -> Result<FAMStore> {
    if grid_points < 8 {
        return Err(Error::InvalidInput("fam: need >= 8 grid points".into()));
    }
    if rules.is_empty() || inputs.is_empty() {
        return Err(Error::InvalidInput("fam: needs rules and inputs".into()));
    }
    for v in inputs {
        v.validate()?;
    }
    output.validate()?;

    let input_grids: Vec<Vec<f64>> = inputs
        .iter()
        .map(|v| uniform_grid(v.universe, grid_points))
        .collect();
    let output_grid = uniform_grid(output.universe, grid_points);
    let cells: usize = grid_points.pow(inputs.len() as u32);

    let mut matrices = Vec::with_capacity(rules.len());
    for (ri, rule) in rules.iter().enumerate() {
        if rule.antecedent.len() != inputs.len() {
            return Err(Error::InvalidInput(format!(
                "fam: rule {} antecedent width mismatch",
                ri
            )));
        }
        let RuleConsequent::OutputTerm(term) = &rule.consequent else {
            return Err(Error::InvalidInput(format!(
                "fam: rule {} needs an output-term consequent",
                ri
            )));
        };
        if *term >= output.terms.len() {
            return Err(Error::InvalidInput(format!(
                "fam: rule {} output term out of range",
                ri
            )));
        }
        let mut m = Matrix::zeros(cells, grid_points);
        for cell in 0..cells {
            let mu_a = cell_membership(rule, inputs, &input_grids, cell, grid_points)?;
            if mu_a == 0.0 {
                continue;
            }
            for (j, z) in output_grid.iter().enumerate() {
                m.set(cell, j, mu_a.min(mf_eval(&output.terms[*term], *z)));
            }
        }
        matrices.push(m);
    }

    Ok(FAMStore {
        input_grids,
        output_grid,
        matrices,
    })
}

/// Antecedent membership of one product-grid cell: min over the rule's
/// slots, "any" contributing 1.
fn cell_membership(
    rule: &FuzzyRule,
    inputs: &[FuzzyVariable],
    grids: &[Vec<f64>],
    cell: usize,
    grid_points: usize,
) -> Result<f64> {
    let mut mu: f64 = 1.0;
    let mut rest = cell;
    for (vi, slot) in rule.antecedent.iter().enumerate() {
        let idx = rest % grid_points;
        rest /= grid_points;
        if let Some(t) = slot {
            if *t >= inputs[vi].terms.len() {
                return Err(Error::InvalidInput(format!(
                    "fam: term {} out of range for input {}",
                    t, vi
                )));
            }
            mu = mu.min(mf_eval(&inputs[vi].terms[*t], grids[vi][idx]));
        }
    }
    Ok(mu)
}

/// Interpolation-hat fuzzification of a crisp coordinate on a uniform
/// grid; all-zero outside the grid span.
fn fuzzify_hat(grid: &[f64], x: f64) -> Vec<f64> {
    let lo = grid[0];
    let hi = grid[grid.len() - 1];
    let step = grid[1] - grid[0];
    let mut key = vec![0.0; grid.len()];
    if x < lo || x > hi {
        return key;
    }
    for (j, g) in grid.iter().enumerate() {
        key[j] = (1.0 - (x - g).abs() / step).max(0.0);
    }
    key
}

/// Max-min associative recall: fuzzify `x` into a key over the product
/// grid, compose key ∘ M per rule, aggregate rules by max, then take the
/// centroid over the output grid.
pub fn fam_recall(store: &FAMStore, x: &[f64]) -> Result<FamRecall> {
    if x.len() != store.input_grids.len() {
        return Err(Error::InvalidInput(format!(
            "fam: key width {} vs {} inputs",
            x.len(),
            store.input_grids.len()
        )));
    }
    let grid_points = store.output_grid.len();
    let per_dim: Vec<Vec<f64>> = store
        .input_grids
        .iter()
        .zip(x)
        .map(|(g, xi)| fuzzify_hat(g, *xi))
        .collect();

    let cells = store.matrices[0].rows();
    let mut key = vec![0.0; cells];
    for (cell, k) in key.iter_mut().enumerate() {
        let mut mu: f64 = 1.0;
        let mut rest = cell;
        for dim in &per_dim {
            let idx = rest % grid_points;
            rest /= grid_points;
            mu = mu.min(dim[idx]);
        }
        *k = mu;
    }

    let mut aggregate = vec![0.0f64; grid_points];
    for m in &store.matrices {
        for (cell, kc) in key.iter().enumerate() {
            if *kc == 0.0 {
                continue;
            }
            for (j, agg) in aggregate.iter_mut().enumerate() {
                *agg = agg.max(kc.min(m.get(cell, j)));
            }
        }
    }

    let total: f64 = aggregate.iter().sum();
    if total == 0.0 {
        let mid = 0.5 * (store.output_grid[0] + store.output_grid[grid_points - 1]);
        return Ok(FamRecall {
            membership: aggregate,
            value: mid,
            zero_activation: true,
        });
    }
    let weighted: f64 = aggregate
        .iter()
        .zip(&store.output_grid)
        .map(|(a, z)| a * z)
        .sum();
    Ok(FamRecall {
        membership: aggregate,
        value: weighted / total,
        zero_activation: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::{MembershipFn, MfKind};
    use crate::numeric::RngStream;
    use approx::assert_relative_eq;

    fn tri(a: f64, b: f64, c: f64, label: &str) -> MembershipFn {
        MembershipFn::new(MfKind::Triangular { a, b, c }, label).unwrap()
    }

    fn single_rule_setup() -> (Vec<FuzzyRule>, Vec<FuzzyVariable>, FuzzyVariable) {
        let input = FuzzyVariable::new("x", (0.0, 2.0), vec![tri(0.5, 1.0, 1.5, "a")]).unwrap();
        let output = FuzzyVariable::new("y", (0.0, 2.0), vec![tri(0.5, 1.0, 1.5, "b")]).unwrap();
        let rules = vec![FuzzyRule {
            antecedent: vec![Some(0)],
            consequent: RuleConsequent::OutputTerm(0),
            weight: 1.0,
        }];
        (rules, vec![input], output)
    }

    #[test]
    fn perfect_recall_at_apex() {
        let (rules, inputs, output) = single_rule_setup();
        // 17 points over (0,2): apex 1.0 sits exactly on the grid.
        let store = fam_store(&rules, &inputs, &output, 17).unwrap();
        let recall = fam_recall(&store, &[1.0]).unwrap();
        assert!(!recall.zero_activation);
        let grid = uniform_grid((0.0, 2.0), 17);
        for (got, z) in recall.membership.iter().zip(&grid) {
            assert_relative_eq!(*got, mf_eval(&output.terms[0], *z), epsilon = 1e-12);
        }
        // Symmetric consequent: centroid at its center.
        assert_relative_eq!(recall.value, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_key_flags_and_returns_midpoint() {
        let (rules, inputs, output) = single_rule_setup();
        let store = fam_store(&rules, &inputs, &output, 16).unwrap();
        let recall = fam_recall(&store, &[5.0]).unwrap();
        assert!(recall.zero_activation);
        assert!(recall.membership.iter().all(|m| *m == 0.0));
        assert_relative_eq!(recall.value, 1.0);
    }

    #[test]
    fn matches_brute_force_composition() {
        let inputs = vec![FuzzyVariable::new(
            "x",
            (0.0, 4.0),
            vec![tri(0.0, 1.0, 2.0, "low"), tri(2.0, 3.0, 4.0, "high")],
        )
        .unwrap()];
        let output = FuzzyVariable::new(
            "y",
            (0.0, 4.0),
            vec![tri(0.0, 1.0, 2.0, "small"), tri(2.0, 3.0, 4.0, "big")],
        )
        .unwrap();
        let rules = vec![
            FuzzyRule {
                antecedent: vec![Some(0)],
                consequent: RuleConsequent::OutputTerm(1),
                weight: 1.0,
            },
            FuzzyRule {
                antecedent: vec![Some(1)],
                consequent: RuleConsequent::OutputTerm(0),
                weight: 1.0,
            },
        ];
        let points = 21;
        let store = fam_store(&rules, &inputs, &output, points).unwrap();
        let grid = uniform_grid((0.0, 4.0), points);
        let mut rng = RngStream::new(13, 0);
        for _ in 0..50 {
            let x = rng.uniform(0.0, 4.0);
            let recall = fam_recall(&store, &[x]).unwrap();
            let key = fuzzify_hat(&grid, x);
            // Independent max-min composition per output point.
            for j in 0..points {
                let mut expect = 0.0f64;
                for rule in &rules {
                    let RuleConsequent::OutputTerm(t) = rule.consequent else {
                        unreachable!()
                    };
                    for (cell, kc) in key.iter().enumerate() {
                        let mu_a = mf_eval(&inputs[0].terms[rule.antecedent[0].unwrap()], grid[cell]);
                        let m = mu_a.min(mf_eval(&output.terms[t], grid[j]));
                        expect = expect.max(kc.min(m));
                    }
                }
                assert_relative_eq!(recall.membership[j], expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn recall_height_bounded_by_key_height() {
        let (rules, inputs, output) = single_rule_setup();
        let store = fam_store(&rules, &inputs, &output, 16).unwrap();
        let grid = uniform_grid((0.0, 2.0), 16);
        let mut rng = RngStream::new(14, 0);
        for _ in 0..100 {
            let x = rng.uniform(-0.5, 2.5);
            let recall = fam_recall(&store, &[x]).unwrap();
            let key_height = fuzzify_hat(&grid, x)
                .into_iter()
                .fold(0.0f64, f64::max);
            let recall_height = recall.membership.iter().cloned().fold(0.0f64, f64::max);
            assert!(
                recall_height <= key_height + 1e-12,
                "height {} exceeds key {}",
                recall_height,
                key_height
            );
        }
    }

    #[test]
    fn two_input_cells_enumerate_first_input_fastest() {
        let inputs = vec![
            FuzzyVariable::new("x1", (0.0, 1.0), vec![tri(-1.0, 0.0, 1.0, "a")]).unwrap(),
            FuzzyVariable::new("x2", (0.0, 1.0), vec![tri(0.0, 1.0, 2.0, "b")]).unwrap(),
        ];
        let output =
            FuzzyVariable::new("y", (0.0, 1.0), vec![tri(0.0, 0.5, 1.0, "c")]).unwrap();
        let rules = vec![FuzzyRule {
            antecedent: vec![Some(0), Some(0)],
            consequent: RuleConsequent::OutputTerm(0),
            weight: 1.0,
        }];
        let store = fam_store(&rules, &inputs, &output, 8).unwrap();
        // Cell k: idx1 = k % 8, idx2 = k / 8. Verify one interior cell.
        let g = uniform_grid((0.0, 1.0), 8);
        let cell = 3 + 5 * 8;
        let expect = mf_eval(&inputs[0].terms[0], g[3]).min(mf_eval(&inputs[1].terms[0], g[5]));
        let stored = store.matrices[0].get(cell, 4);
        assert_relative_eq!(
            stored,
            expect.min(mf_eval(&output.terms[0], g[4])),
            epsilon = 1e-12
        );
    }

    #[test]
    fn store_validates_inputs() {
        let (rules, inputs, output) = single_rule_setup();
        assert!(fam_store(&rules, &inputs, &output, 7).is_err());
        assert!(fam_store(&[], &inputs, &output, 16).is_err());
        let linear_rule = vec![FuzzyRule {
            antecedent: vec![Some(0)],
            consequent: RuleConsequent::Linear {
                coeffs: vec![1.0],
                offset: 0.0,
            },
            weight: 1.0,
        }];
        assert!(fam_store(&linear_rule, &inputs, &output, 16).is_err());
    }
}
