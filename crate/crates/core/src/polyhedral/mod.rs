//! Exact polyhedral computations: rational LP with certifying outcomes,
//! cone analysis (triviality, polars, extreme rays), polytope vertex
//! enumeration, and complementarity branch decomposition.

mod complementarity;
mod cones;
mod simplex;
mod vertices;

pub use complementarity::{decompose_complementarity, ComplementarityPair};
pub use cones::{
    cone_is_trivial, cone_trivial_in_projection, contains_zero_in_interior_of_hull, extreme_rays,
    in_conic_hull, polar_cone, polyhedron_trivial_in_projection, ConeTriviality, PolarCone,
};
pub use simplex::{lp_solve, LpOutcome, LpSense};
pub use vertices::{basic_feasible_points, tight_row_rank, vertices};

use crate::linalg::{dot, is_zero_vec, Matrix, Vector};
use crate::scalar::{int, Scalar};

/// `{ x | A x ≤ b, E x = f }` in ambient dimension `dim`.
#[derive(Debug, Clone)]
pub struct Polyhedron {
    pub dim: usize,
    pub a: Matrix,
    pub b: Vector,
    pub e: Matrix,
    pub f: Vector,
}

impl Polyhedron {
    pub fn new(dim: usize, a: Matrix, b: Vector, e: Matrix, f: Vector) -> Self {
        assert_eq!(a.cols(), dim, "inequality matrix width mismatch");
        assert_eq!(e.cols(), dim, "equality matrix width mismatch");
        assert_eq!(a.rows(), b.len(), "inequality rhs length mismatch");
        assert_eq!(e.rows(), f.len(), "equality rhs length mismatch");
        Polyhedron { dim, a, b, e, f }
    }

    pub fn from_inequalities(dim: usize, a: Matrix, b: Vector) -> Self {
        Polyhedron::new(dim, a, b, Matrix::zero(0, dim), Vec::new())
    }

    /// Free space of the given dimension.
    pub fn whole_space(dim: usize) -> Self {
        Polyhedron::new(
            dim,
            Matrix::zero(0, dim),
            Vec::new(),
            Matrix::zero(0, dim),
            Vec::new(),
        )
    }

    pub fn contains(&self, x: &[Scalar]) -> bool {
        assert_eq!(x.len(), self.dim);
        (0..self.a.rows()).all(|i| dot(self.a.row(i), x) <= self.b[i])
            && (0..self.e.rows()).all(|i| dot(self.e.row(i), x) == self.f[i])
    }

    pub fn add_ineq(&mut self, row: Vector, rhs: Scalar) {
        assert_eq!(row.len(), self.dim);
        self.a = self.a.vstack(&Matrix::from_rows(vec![row]));
        self.b.push(rhs);
    }

    pub fn add_eq(&mut self, row: Vector, rhs: Scalar) {
        assert_eq!(row.len(), self.dim);
        self.e = self.e.vstack(&Matrix::from_rows(vec![row]));
        self.f.push(rhs);
    }

    /// Intersection with `-1 ≤ x_j ≤ 1` for every coordinate.
    pub fn clip_to_unit_box(&self) -> Polyhedron {
        let mut p = self.clone();
        for j in 0..self.dim {
            let mut row = crate::linalg::zeros(self.dim);
            row[j] = int(1);
            p.add_ineq(row.clone(), int(1));
            row[j] = int(-1);
            p.add_ineq(row, int(1));
        }
        p
    }
}

/// A polyhedron with zero right-hand sides: closed under positive scaling
/// and containing the origin by construction.
#[derive(Debug, Clone)]
pub struct PolyhedralCone {
    pub poly: Polyhedron,
}

impl PolyhedralCone {
    pub fn new(dim: usize, a: Matrix, e: Matrix) -> Self {
        let bn = a.rows();
        let fn_ = e.rows();
        PolyhedralCone {
            poly: Polyhedron::new(dim, a, vec![int(0); bn], e, vec![int(0); fn_]),
        }
    }

    pub fn whole_space(dim: usize) -> Self {
        PolyhedralCone {
            poly: Polyhedron::whole_space(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.poly.dim
    }

    pub fn contains(&self, x: &[Scalar]) -> bool {
        self.poly.contains(x)
    }

    pub fn add_ineq(&mut self, row: Vector) {
        self.poly.add_ineq(row, int(0));
    }

    pub fn add_eq(&mut self, row: Vector) {
        self.poly.add_eq(row, int(0));
    }

    /// Lineality space `{x | Ax = 0, Ex = 0}` as an exact kernel basis.
    pub fn lineality_basis(&self) -> Vec<Vector> {
        let stacked = self.poly.a.vstack(&self.poly.e);
        if stacked.rows() == 0 {
            return crate::linalg::kernel_basis(&Matrix::zero(1, self.dim()))
                .into_iter()
                .filter(|v| !is_zero_vec(v))
                .collect();
        }
        crate::linalg::kernel_basis(&stacked)
    }
}
