//! Exact vertex enumeration for polytopes `{y | B y ≤ b}` by basis
//! enumeration: every dim-subset of rows is solved and filtered for
//! feasibility. Adequate for the row counts this crate targets.

use super::simplex::{lp_solve, LpOutcome, LpSense};
use super::Polyhedron;
use crate::error::{Error, Result};
use crate::linalg::{dot, solve_linear, unit, Matrix, Vector};
use crate::scalar::Scalar;

/// All vertices of a bounded polyhedron, without duplicates.
///
/// Boundedness is checked up front by maximizing `±e_j` for every
/// coordinate; an unbounded direction is an error. Equality rows are
/// honored (they join every candidate basis).
pub fn vertices(region: &Polyhedron) -> Result<Vec<Vector>> {
    let dim = region.dim;
    for j in 0..dim {
        for obj in [unit(dim, j), crate::linalg::neg(&unit(dim, j))] {
            match lp_solve(&obj, region, LpSense::Max)? {
                LpOutcome::Unbounded { .. } => return Err(Error::UnboundedPolytope(j)),
                LpOutcome::Infeasible { .. } => return Ok(Vec::new()),
                LpOutcome::Optimal { .. } => {}
            }
        }
    }
    basic_feasible_points(region)
}

/// Basic feasible points of a (possibly unbounded) polyhedron. For a pointed
/// polyhedron these are exactly its vertices.
pub fn basic_feasible_points(region: &Polyhedron) -> Result<Vec<Vector>> {
    let dim = region.dim;
    let m_eq = region.e.rows();
    let m_ineq = region.a.rows();
    let rank_eq = if m_eq == 0 {
        0
    } else {
        crate::linalg::rank(&region.e)
    };
    let need = dim.saturating_sub(rank_eq);
    let mut out: Vec<Vector> = Vec::new();
    let mut subset = Vec::new();
    enumerate_subsets(m_ineq, need, &mut subset, &mut |rows| {
        let mut stacked = region.e.clone();
        let mut rhs = region.f.clone();
        if !rows.is_empty() {
            stacked = stacked.vstack(&region.a.select_rows(rows));
            for &i in rows {
                rhs.push(region.b[i].clone());
            }
        }
        if stacked.rows() == 0 {
            return Ok(());
        }
        if crate::linalg::rank(&stacked) != dim {
            return Ok(());
        }
        if let Some(y) = solve_linear(&stacked, &rhs)? {
            if region.contains(&y) && !out.contains(&y) {
                out.push(y);
            }
        }
        Ok(())
    })?;
    out.sort_by(|a, b| cmp_lex(a, b));
    Ok(out)
}

fn cmp_lex(a: &[crate::scalar::Scalar], b: &[crate::scalar::Scalar]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

fn enumerate_subsets<F>(n: usize, k: usize, current: &mut Vec<usize>, visit: &mut F) -> Result<()>
where
    F: FnMut(&[usize]) -> Result<()>,
{
    if current.len() == k {
        return visit(current);
    }
    let start = current.last().map(|&i| i + 1).unwrap_or(0);
    for i in start..n {
        current.push(i);
        enumerate_subsets(n, k, current, visit)?;
        current.pop();
    }
    Ok(())
}

/// Number of linearly independent rows tight at `y`; every vertex must have
/// at least `dim` of them.
pub fn tight_row_rank(region: &Polyhedron, y: &[Scalar]) -> usize {
    let mut rows: Vec<Vector> = (0..region.e.rows()).map(|i| region.e.row_vec(i)).collect();
    for i in 0..region.a.rows() {
        if dot(region.a.row(i), y) == region.b[i] {
            rows.push(region.a.row_vec(i));
        }
    }
    if rows.is_empty() {
        return 0;
    }
    crate::linalg::rank(&Matrix::from_rows(rows))
}
