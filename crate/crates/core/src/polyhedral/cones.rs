//! Cone triviality, polars, extreme rays, and the zero-in-interior test.

use super::simplex::{lp_solve, LpOutcome, LpSense};
use super::{PolyhedralCone, Polyhedron};
use crate::error::Result;
use crate::linalg::{
    self, is_zero_vec, kernel_basis, normalize_inf, rank, unit, zeros, Matrix, Vector,
};
use crate::scalar::{int, is_zero, Scalar};

#[derive(Debug, Clone)]
pub enum ConeTriviality {
    Trivial,
    Nontrivial { witness: Vector },
}

impl ConeTriviality {
    pub fn is_trivial(&self) -> bool {
        matches!(self, ConeTriviality::Trivial)
    }

    pub fn witness(&self) -> Option<&Vector> {
        match self {
            ConeTriviality::Trivial => None,
            ConeTriviality::Nontrivial { witness } => Some(witness),
        }
    }
}

/// Decides `C = {0}`.
///
/// Any nonzero member scales to sup-norm one, so it suffices to push every
/// coordinate in both directions over the unit-box clip of the cone: the cone
/// is trivial iff all `2·dim` optima are zero.
pub fn cone_is_trivial(cone: &PolyhedralCone) -> Result<ConeTriviality> {
    cone_trivial_in_projection(cone, &(0..cone.dim()).collect::<Vec<_>>())
}

/// Decides whether every member of the cone vanishes on `coords`.
pub fn cone_trivial_in_projection(
    cone: &PolyhedralCone,
    coords: &[usize],
) -> Result<ConeTriviality> {
    let clipped = cone.poly.clip_to_unit_box();
    for &j in coords {
        assert!(j < cone.dim(), "projection coordinate out of range");
        for dir in [int(1), int(-1)] {
            let mut obj = zeros(cone.dim());
            obj[j] = dir;
            let out = lp_solve(&obj, &clipped, LpSense::Max)?;
            match out {
                LpOutcome::Optimal { value, point, .. } => {
                    if !is_zero(&value) {
                        debug_assert!(cone.contains(&point));
                        return Ok(ConeTriviality::Nontrivial { witness: point });
                    }
                }
                // The clipped cone always contains the origin and is bounded.
                _ => unreachable!("box-clipped cone LP must be optimal"),
            }
        }
    }
    Ok(ConeTriviality::Trivial)
}

/// Decides whether every point of a (not necessarily conic) polyhedron has
/// zero entries on `coords`; used for the inhomogeneous certifier systems
/// where multipliers enter as affine unknowns.
pub fn polyhedron_trivial_in_projection(
    region: &Polyhedron,
    coords: &[usize],
) -> Result<ConeTriviality> {
    for &j in coords {
        assert!(j < region.dim, "projection coordinate out of range");
        for dir in [int(1), int(-1)] {
            let mut obj = zeros(region.dim);
            obj[j] = dir;
            match lp_solve(&obj, region, LpSense::Max)? {
                LpOutcome::Optimal { value, point, .. } => {
                    if value > int(0) {
                        return Ok(ConeTriviality::Nontrivial { witness: point });
                    }
                }
                LpOutcome::Unbounded { point, ray } => {
                    // Walk far enough along the ray to expose the coordinate.
                    let witness = linalg::add(&point, &ray);
                    debug_assert!(region.contains(&witness));
                    return Ok(ConeTriviality::Nontrivial { witness });
                }
                LpOutcome::Infeasible { .. } => return Ok(ConeTriviality::Trivial),
            }
        }
    }
    Ok(ConeTriviality::Trivial)
}

/// Generator form of a polar cone: `{ Gᵀμ + Hᵀν | μ ≥ 0, ν free }` where the
/// nonnegative generators are the rows of the defining inequalities and the
/// free generators the rows of the equalities.
#[derive(Debug, Clone)]
pub struct PolarCone {
    pub nonneg_generators: Vec<Vector>,
    pub free_generators: Vec<Vector>,
    pub dim: usize,
}

impl PolarCone {
    /// Membership of `v` decided exactly by LP feasibility over the
    /// generator coefficients.
    pub fn contains(&self, v: &[Scalar]) -> Result<bool> {
        assert_eq!(v.len(), self.dim);
        let k = self.nonneg_generators.len();
        let l = self.free_generators.len();
        if k + l == 0 {
            return Ok(is_zero_vec(v));
        }
        // Columns are generator coefficients; rows force the combination to
        // equal v; μ ≥ 0 imposed as inequalities.
        let mut eq_rows = Vec::with_capacity(self.dim);
        for coord in 0..self.dim {
            let mut row = zeros(k + l);
            for (idx, g) in self.nonneg_generators.iter().enumerate() {
                row[idx] = g[coord].clone();
            }
            for (idx, g) in self.free_generators.iter().enumerate() {
                row[k + idx] = g[coord].clone();
            }
            eq_rows.push(row);
        }
        let mut ineq_rows = Vec::with_capacity(k);
        for idx in 0..k {
            let mut row = zeros(k + l);
            row[idx] = int(-1);
            ineq_rows.push(row);
        }
        let region = Polyhedron::new(
            k + l,
            Matrix::from_rows(ineq_rows),
            zeros(k),
            Matrix::from_rows(eq_rows),
            v.to_vec(),
        );
        Ok(lp_solve(&zeros(k + l), &region, LpSense::Min)?.is_feasible())
    }
}

/// Polar of `{x | Ax ≤ 0, Ex = 0}` via Farkas' lemma.
pub fn polar_cone(cone: &PolyhedralCone) -> PolarCone {
    let a = &cone.poly.a;
    let e = &cone.poly.e;
    PolarCone {
        nonneg_generators: (0..a.rows()).map(|i| a.row_vec(i)).collect(),
        free_generators: (0..e.rows()).map(|i| e.row_vec(i)).collect(),
        dim: cone.dim(),
    }
}

/// Frame of the cone: sup-norm-normalized representatives of all extreme
/// rays, with a lineality space contributing both signs of a basis. The
/// conic hull of the returned vectors is the cone itself.
pub fn extreme_rays(cone: &PolyhedralCone) -> Result<Vec<Vector>> {
    let dim = cone.dim();
    let lineality = cone.lineality_basis();
    let mut rays: Vec<Vector> = Vec::new();
    let push_unique = |v: Vector, rays: &mut Vec<Vector>| {
        if !rays.iter().any(|r| r == &v) {
            rays.push(v);
        }
    };
    for v in &lineality {
        let n = normalize_inf(v);
        push_unique(n.clone(), &mut rays);
        push_unique(linalg::neg(&n), &mut rays);
    }

    // Pointed part: restrict to the orthogonal complement of the lineality
    // space and enumerate rank-(dim-1) active sets.
    let mut pointed = cone.clone();
    for v in &lineality {
        pointed.add_eq(v.clone());
    }
    let a = pointed.poly.a.clone();
    let e = pointed.poly.e.clone();
    let m1 = a.rows();
    if dim == 0 {
        return Ok(rays);
    }
    let base_rank_needed = dim.saturating_sub(1);
    for mask in 0u64..(1 << m1.min(63)) {
        let subset: Vec<usize> = (0..m1).filter(|i| mask & (1 << i) != 0).collect();
        let mut stacked = e.clone();
        if !subset.is_empty() {
            stacked = stacked.vstack(&a.select_rows(&subset));
        }
        if stacked.rows() == 0 {
            // No equalities at all: a 1-dimensional ambient space can still
            // carry rays along ±e_0.
            if dim != 1 {
                continue;
            }
        } else if rank(&stacked) != base_rank_needed {
            continue;
        }
        let kernel = if stacked.rows() == 0 {
            vec![unit(1, 0)]
        } else {
            kernel_basis(&stacked)
        };
        if kernel.len() != 1 {
            continue;
        }
        let v = normalize_inf(&kernel[0]);
        for cand in [v.clone(), linalg::neg(&v)] {
            if pointed.contains(&cand) && !is_zero_vec(&cand) {
                push_unique(cand, &mut rays);
            }
        }
    }
    // Every returned ray must lie in the original cone.
    debug_assert!(rays.iter().all(|r| cone.contains(r)));
    Ok(rays)
}

/// True iff the origin lies in the interior of the convex hull of `points`.
///
/// For a finite set this is equivalent to triviality of the cone
/// `{v | pᵀv ≤ 0 for all p}`, which the 2·dim box-clipped coordinate LPs
/// decide exactly.
pub fn contains_zero_in_interior_of_hull(points: &[Vector]) -> Result<bool> {
    assert!(!points.is_empty(), "hull of an empty point list");
    let dim = points[0].len();
    let rows: Vec<Vector> = points.iter().cloned().collect();
    let cone = PolyhedralCone::new(dim, Matrix::from_rows(rows), Matrix::zero(0, dim));
    Ok(cone_is_trivial(&cone)?.is_trivial())
}

/// Exact membership of a direction in the conic hull of finitely many
/// generators, by LP feasibility.
pub fn in_conic_hull(generators: &[Vector], v: &[Scalar]) -> Result<bool> {
    let polar = PolarCone {
        nonneg_generators: generators.to_vec(),
        free_generators: Vec::new(),
        dim: v.len(),
    };
    polar.contains(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;
    use crate::scalar::rat;

    fn mat(rows: &[&[i64]]) -> Matrix {
        Matrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| int(v)).collect())
                .collect(),
        )
    }

    fn ints(v: &[i64]) -> Vector {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn trivial_cone() {
        // d ≤ 0 and -d ≤ 0 in R^2
        let cone = PolyhedralCone::new(
            2,
            mat(&[&[1, 0], &[0, 1], &[-1, 0], &[0, -1]]),
            Matrix::zero(0, 2),
        );
        assert!(cone_is_trivial(&cone).unwrap().is_trivial());
    }

    #[test]
    fn halfline_has_witness() {
        let cone = PolyhedralCone::new(1, mat(&[&[1]]), Matrix::zero(0, 1));
        let out = cone_is_trivial(&cone).unwrap();
        let w = out.witness().expect("nontrivial");
        assert_eq!(w, &ints(&[-1]));
    }

    #[test]
    fn example_3_3_system_is_trivial_on_both_branches() {
        // 3δx + δy ≤ 0, -δy ≤ 0, plus one branch of -min{δx,0} ≤ 0 each:
        // branch a: δx ≥ 0; branch b is the boundary piece δx ≤ 0 ∧ δx ≥ 0.
        let branch_a =
            PolyhedralCone::new(2, mat(&[&[3, 1], &[0, -1], &[-1, 0]]), Matrix::zero(0, 2));
        assert!(cone_is_trivial(&branch_a).unwrap().is_trivial());
        let branch_b = PolyhedralCone::new(
            2,
            mat(&[&[3, 1], &[0, -1], &[-1, 0], &[1, 0]]),
            Matrix::zero(0, 2),
        );
        assert!(cone_is_trivial(&branch_b).unwrap().is_trivial());
    }

    #[test]
    fn projection_triviality() {
        // C = {(a, b) | a = 0}
        let cone = PolyhedralCone::new(2, Matrix::zero(0, 2), mat(&[&[1, 0]]));
        assert!(cone_trivial_in_projection(&cone, &[0])
            .unwrap()
            .is_trivial());
        let out = cone_trivial_in_projection(&cone, &[1]).unwrap();
        let w = out.witness().expect("coordinate 2 is free");
        assert!(is_zero(&w[0]) && !is_zero(&w[1]));
    }

    #[test]
    fn polar_of_negative_orthant() {
        let cone = PolyhedralCone::new(2, mat(&[&[1, 0], &[0, 1]]), Matrix::zero(0, 2));
        let polar = polar_cone(&cone);
        assert!(polar.contains(&ints(&[1, 0])).unwrap());
        assert!(polar.contains(&ints(&[0, 1])).unwrap());
        assert!(polar.contains(&ints(&[2, 3])).unwrap());
        assert!(!polar.contains(&ints(&[-1, 0])).unwrap());
    }

    #[test]
    fn polar_of_origin_is_everything() {
        let cone = PolyhedralCone::new(
            2,
            mat(&[&[1, 0], &[0, 1], &[-1, 0], &[0, -1]]),
            Matrix::zero(0, 2),
        );
        let polar = polar_cone(&cone);
        for v in [[1, 1], [-5, 3], [0, -2], [7, 0]] {
            assert!(polar.contains(&ints(&v)).unwrap());
        }
    }

    #[test]
    fn polar_of_halfspace_is_a_ray() {
        // C = {d | (1,1)·d ≤ 0}; polar should be the ray through (1,1).
        // Oracle: sample the extreme rays of C and check vᵀd ≤ 0 against
        // candidate polar members.
        let cone = PolyhedralCone::new(2, mat(&[&[1, 1]]), Matrix::zero(0, 2));
        let polar = polar_cone(&cone);
        assert!(polar.contains(&ints(&[1, 1])).unwrap());
        assert!(polar.contains(&ints(&[3, 3])).unwrap());
        assert!(!polar.contains(&ints(&[1, 0])).unwrap());
        let rays = extreme_rays(&cone).unwrap();
        assert!(!rays.is_empty());
        for r in &rays {
            assert!(dot(&ints(&[1, 1]), r) <= int(0));
        }
    }

    #[test]
    fn rays_of_positive_orthant() {
        let cone = PolyhedralCone::new(2, mat(&[&[-1, 0], &[0, -1]]), Matrix::zero(0, 2));
        let rays = extreme_rays(&cone).unwrap();
        assert_eq!(rays.len(), 2);
        assert!(rays.contains(&ints(&[1, 0])));
        assert!(rays.contains(&ints(&[0, 1])));
    }

    #[test]
    fn rays_of_trivial_cone_are_empty() {
        let cone = PolyhedralCone::new(
            2,
            mat(&[&[1, 0], &[0, 1], &[-1, 0], &[0, -1]]),
            Matrix::zero(0, 2),
        );
        assert!(extreme_rays(&cone).unwrap().is_empty());
    }

    #[test]
    fn rays_of_a_line() {
        // {d | 6δy - δx = 0}: frame is ±(6,1) normalized to sup-norm 1.
        let cone = PolyhedralCone::new(2, Matrix::zero(0, 2), mat(&[&[-1, 6]]));
        let rays = extreme_rays(&cone).unwrap();
        assert_eq!(rays.len(), 2);
        assert!(rays.contains(&vec![int(1), rat(1, 6)]));
        assert!(rays.contains(&vec![int(-1), rat(-1, 6)]));
    }

    #[test]
    fn zero_in_interior_tests() {
        // Example 3.8's Q with the segment replaced by its endpoints.
        let q = vec![ints(&[3, 2]), ints(&[-1, 0]), ints(&[0, 0]), ints(&[0, -1])];
        assert!(contains_zero_in_interior_of_hull(&q).unwrap());
        let two = vec![ints(&[1, 0]), ints(&[0, 1])];
        assert!(!contains_zero_in_interior_of_hull(&two).unwrap());
        // Random-style simplex strictly containing the origin; cross-checked
        // by exhibiting strictly positive barycentric weights for 0:
        // 0 = (1/3)(1,1) + (1/3)(-2,1) + (1/3)(1,-2).
        let simplex = vec![ints(&[1, 1]), ints(&[-2, 1]), ints(&[1, -2])];
        assert!(contains_zero_in_interior_of_hull(&simplex).unwrap());
    }
}
