//! Branch decomposition of complementarity conditions.

use super::Polyhedron;
use crate::linalg::{neg, Vector};
use crate::scalar::int;

/// One pair `0 ≤ u(x) ⊥ v(x) ≤ 0` of linear forms on the ambient space.
#[derive(Debug, Clone)]
pub struct ComplementarityPair {
    pub nonneg: Vector,
    pub nonpos: Vector,
}

/// Expands `base ∩ {0 ≤ u_i ⊥ v_i ≤ 0}` into its `2^k` polyhedral branches:
/// each pair contributes either `{u_i = 0, v_i ≤ 0}` or `{u_i ≥ 0, v_i = 0}`.
/// The union of the branches is exactly the complementarity set.
pub fn decompose_complementarity(
    base: &Polyhedron,
    pairs: &[ComplementarityPair],
) -> Vec<Polyhedron> {
    for p in pairs {
        assert_eq!(p.nonneg.len(), base.dim, "pair dimension mismatch");
        assert_eq!(p.nonpos.len(), base.dim, "pair dimension mismatch");
    }
    let k = pairs.len();
    let mut branches = Vec::with_capacity(1 << k);
    for mask in 0u64..(1 << k) {
        let mut branch = base.clone();
        for (i, pair) in pairs.iter().enumerate() {
            if mask & (1 << i) == 0 {
                branch.add_eq(pair.nonneg.clone(), int(0));
                branch.add_ineq(pair.nonpos.clone(), int(0));
            } else {
                branch.add_ineq(neg(&pair.nonneg), int(0));
                branch.add_eq(pair.nonpos.clone(), int(0));
            }
        }
        branches.push(branch);
    }
    branches
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, Matrix};
    use crate::scalar::{is_zero, rat, Scalar};

    fn ints(v: &[i64]) -> Vector {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn one_pair_gives_two_branches() {
        let base = Polyhedron::whole_space(2);
        let pairs = vec![ComplementarityPair {
            nonneg: ints(&[1, 0]),
            nonpos: ints(&[0, 1]),
        }];
        let branches = decompose_complementarity(&base, &pairs);
        assert_eq!(branches.len(), 2);
    }

    #[test]
    fn union_property_on_rational_samples() {
        // Three pairs in R^3: u_i = x_i, v_i = -x_i + shift-free forms.
        let base = Polyhedron::whole_space(3);
        let pairs: Vec<ComplementarityPair> = (0..3)
            .map(|i| {
                let mut u = ints(&[0, 0, 0]);
                u[i] = int(1);
                let mut v = ints(&[0, 0, 0]);
                v[i] = int(-1);
                v[(i + 1) % 3] = int(1);
                ComplementarityPair {
                    nonneg: u,
                    nonpos: v,
                }
            })
            .collect();
        let branches = decompose_complementarity(&base, &pairs);
        assert_eq!(branches.len(), 8);

        let satisfies = |x: &[Scalar]| {
            pairs.iter().all(|p| {
                let u = dot(&p.nonneg, x);
                let v = dot(&p.nonpos, x);
                u >= int(0) && v <= int(0) && is_zero(&(u * v))
            })
        };
        let samples: Vec<Vector> = vec![
            ints(&[0, 0, 0]),
            ints(&[1, 0, 0]),
            ints(&[0, 1, 0]),
            ints(&[1, 1, 1]),
            ints(&[-1, 0, 0]),
            vec![rat(1, 2), int(0), rat(3, 2)],
            vec![rat(1, 3), rat(1, 3), int(0)],
        ];
        for x in &samples {
            let in_some_branch = branches.iter().any(|b| b.contains(x));
            assert_eq!(satisfies(x), in_some_branch, "sample {x:?}");
        }
    }

    #[test]
    fn branch_matrices_have_expected_shape() {
        let base = Polyhedron::from_inequalities(2, Matrix::identity(2), ints(&[1, 1]));
        let pairs = vec![ComplementarityPair {
            nonneg: ints(&[1, 0]),
            nonpos: ints(&[0, 1]),
        }];
        let branches = decompose_complementarity(&base, &pairs);
        for b in &branches {
            assert_eq!(b.a.rows() + b.e.rows(), 4);
        }
    }
}
