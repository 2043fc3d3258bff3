//! Two-phase primal simplex on exact rationals with Bland's rule.
//!
//! Free variables are split into nonnegative pairs, every row gets an
//! artificial column, and the artificial columns stay in the tableau after
//! phase one so dual multipliers can be read off their reduced costs. Bland's
//! rule makes the pivot sequence deterministic and cycle free; with exact
//! arithmetic the outcome certificates (optimal point and duals, improving
//! ray, or Farkas vector) are verified by substitution before they are
//! returned.

use super::Polyhedron;
use crate::error::{Error, Result};
use crate::linalg::{dot, zeros, Vector};
use crate::scalar::{int, is_zero, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpSense {
    Min,
    Max,
}

/// Certified outcome of an exact LP solve.
///
/// Dual multipliers are stated for the original row order and orientation:
/// for a maximization over `{Ax ≤ b, Ex = f}` they satisfy
/// `Aᵀμ + Eᵀν = c`, `μ ≥ 0`, `bᵀμ + fᵀν = value`; for minimization the
/// same holds with `c` replaced by `-c` and the value negated internally.
#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal {
        value: Scalar,
        point: Vector,
        ineq_multipliers: Vector,
        eq_multipliers: Vector,
    },
    Unbounded {
        point: Vector,
        ray: Vector,
    },
    Infeasible {
        farkas_ineq: Vector,
        farkas_eq: Vector,
    },
}

impl LpOutcome {
    pub fn optimal_value(&self) -> Option<&Scalar> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn optimal_point(&self) -> Option<&Vector> {
        match self {
            LpOutcome::Optimal { point, .. } => Some(point),
            _ => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        !matches!(self, LpOutcome::Infeasible { .. })
    }
}

struct Tableau {
    rows: usize,
    cols: usize, // structural + slack + artificial
    data: Vec<Scalar>,
    rhs: Vector,
    basis: Vec<usize>,
    n_struct: usize,
    n_slack: usize,
    /// Eligibility mask: artificial columns are frozen in phase two.
    eligible: Vec<bool>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    fn at_mut(&mut self, i: usize, j: usize) -> &mut Scalar {
        &mut self.data[i * self.cols + j]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.at(row, col).clone();
        for j in 0..self.cols {
            *self.at_mut(row, j) = self.at(row, j) / &piv;
        }
        self.rhs[row] = &self.rhs[row] / &piv;
        for i in 0..self.rows {
            if i != row && !is_zero(self.at(i, col)) {
                let factor = self.at(i, col).clone();
                for j in 0..self.cols {
                    let v = self.at(i, j) - &factor * self.at(row, j);
                    *self.at_mut(i, j) = v;
                }
                self.rhs[i] = &self.rhs[i] - &factor * &self.rhs[row];
            }
        }
        self.basis[row] = col;
    }

    /// Bland's rule primal simplex for `max cᵀz`. Returns `None` at optimum
    /// or `Some(col)` for an unbounded entering column.
    fn run(&mut self, cost: &[Scalar]) -> Option<usize> {
        loop {
            let mut duals = zeros(self.rows);
            // y = c_B per row via the unit columns of the current basis.
            for (i, &bj) in self.basis.iter().enumerate() {
                duals[i] = cost[bj].clone();
            }
            let mut entering = None;
            for j in 0..self.cols {
                if !self.eligible[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut reduced = cost[j].clone();
                for i in 0..self.rows {
                    reduced -= &duals[i] * self.at(i, j);
                }
                if reduced > int(0) {
                    entering = Some(j);
                    break; // Bland: first eligible index
                }
            }
            let Some(col) = entering else {
                return None;
            };
            let mut leaving: Option<(usize, Scalar)> = None;
            for i in 0..self.rows {
                if self.at(i, col) > &int(0) {
                    let ratio = &self.rhs[i] / self.at(i, col);
                    let better = match &leaving {
                        None => true,
                        Some((cur, best)) => {
                            &ratio < best || (&ratio == best && self.basis[i] < self.basis[*cur])
                        }
                    };
                    if better {
                        leaving = Some((i, ratio));
                    }
                }
            }
            match leaving {
                Some((row, _)) => self.pivot(row, col),
                None => return Some(col),
            }
        }
    }

    /// Reduced cost of column `j` under `cost`.
    fn reduced_cost(&self, cost: &[Scalar], j: usize) -> Scalar {
        let mut r = cost[j].clone();
        for (i, &bj) in self.basis.iter().enumerate() {
            r -= &cost[bj] * self.at(i, j);
        }
        r
    }

    fn basic_value(&self, j: usize) -> Scalar {
        self.basis
            .iter()
            .position(|&b| b == j)
            .map(|i| self.rhs[i].clone())
            .unwrap_or_else(|| int(0))
    }
}

/// Exact LP solve over a polyhedron with free variables.
///
/// Deterministic for fixed input: the tableau layout and Bland's rule leave
/// no tie-breaking freedom.
pub fn lp_solve(objective: &[Scalar], region: &Polyhedron, sense: LpSense) -> Result<LpOutcome> {
    if objective.len() != region.dim {
        return Err(Error::Dimension(format!(
            "objective length {} vs region dimension {}",
            objective.len(),
            region.dim
        )));
    }
    let dim = region.dim;
    let m1 = region.a.rows();
    let m2 = region.e.rows();
    let m = m1 + m2;
    let n_struct = 2 * dim; // x = u - v with u, v ≥ 0
    let n_slack = m1;
    let cols = n_struct + n_slack + m;

    // Row signs chosen so the internal rhs is nonnegative.
    let mut sign = vec![int(1); m];
    let mut rhs = zeros(m);
    for i in 0..m1 {
        rhs[i] = region.b[i].clone();
    }
    for i in 0..m2 {
        rhs[m1 + i] = region.f[i].clone();
    }
    for i in 0..m {
        if rhs[i] < int(0) {
            sign[i] = int(-1);
            rhs[i] = -rhs[i].clone();
        }
    }

    let mut data = vec![int(0); m * cols];
    {
        let mut set = |i: usize, j: usize, v: Scalar| data[i * cols + j] = v;
        for i in 0..m {
            let row: &[Scalar] = if i < m1 {
                region.a.row(i)
            } else {
                region.e.row(i - m1)
            };
            for j in 0..dim {
                set(i, j, &sign[i] * &row[j]);
                set(i, dim + j, -(&sign[i] * &row[j]));
            }
            if i < m1 {
                set(i, n_struct + i, sign[i].clone());
            }
            set(i, n_struct + n_slack + i, int(1));
        }
    }

    let mut tab = Tableau {
        rows: m,
        cols,
        data,
        rhs,
        basis: (0..m).map(|i| n_struct + n_slack + i).collect(),
        n_struct,
        n_slack,
        eligible: vec![true; cols],
    };

    // Phase one: drive the artificials to zero.
    let mut phase1_cost = zeros(cols);
    for i in 0..m {
        phase1_cost[n_struct + n_slack + i] = int(-1);
    }
    let unbounded = tab.run(&phase1_cost);
    debug_assert!(unbounded.is_none(), "phase one is bounded by construction");
    let phase1_value: Scalar = (0..m)
        .map(|i| tab.basic_value(n_struct + n_slack + i))
        .sum();
    if !is_zero(&phase1_value) {
        return Ok(infeasibility_certificate(&tab, &phase1_cost, region, &sign));
    }

    // Pivot lingering zero-level artificials out of the basis where possible.
    for i in 0..m {
        if tab.basis[i] >= n_struct + n_slack {
            if let Some(j) = (0..n_struct + n_slack).find(|&j| !is_zero(tab.at(i, j))) {
                tab.pivot(i, j);
            }
            // A fully zero row is redundant; its artificial stays basic at
            // level zero and never blocks a pivot.
        }
    }
    for j in 0..m {
        tab.eligible[n_struct + n_slack + j] = false;
    }

    // Phase two on the requested objective.
    let scaled_obj: Vector = match sense {
        LpSense::Max => objective.to_vec(),
        LpSense::Min => objective.iter().map(|c| -c).collect(),
    };
    let mut cost = zeros(cols);
    for j in 0..dim {
        cost[j] = scaled_obj[j].clone();
        cost[dim + j] = -scaled_obj[j].clone();
    }
    let unbounded_col = tab.run(&cost);

    let point = extract_point(&tab, dim);
    debug_assert!(region.contains(&point), "simplex point must be feasible");

    if let Some(col) = unbounded_col {
        let ray = extract_ray(&tab, dim, col);
        debug_assert!(ray_improves(&ray, &scaled_obj, region));
        return Ok(LpOutcome::Unbounded { point, ray });
    }

    let internal_value = dot(&scaled_obj, &point);
    let value = match sense {
        LpSense::Max => internal_value.clone(),
        LpSense::Min => -internal_value.clone(),
    };

    // Duals off the artificial reduced costs, mapped back through row signs.
    let mut ineq_multipliers = zeros(m1);
    let mut eq_multipliers = zeros(m2);
    for i in 0..m {
        let y = -tab.reduced_cost(&cost, n_struct + n_slack + i);
        let orig = &sign[i] * &y;
        if i < m1 {
            ineq_multipliers[i] = orig;
        } else {
            eq_multipliers[i - m1] = orig;
        }
    }
    verify_duals(
        region,
        &scaled_obj,
        &internal_value,
        &ineq_multipliers,
        &eq_multipliers,
    );

    Ok(LpOutcome::Optimal {
        value,
        point,
        ineq_multipliers,
        eq_multipliers,
    })
}

fn extract_point(tab: &Tableau, dim: usize) -> Vector {
    (0..dim)
        .map(|j| tab.basic_value(j) - tab.basic_value(dim + j))
        .collect()
}

fn extract_ray(tab: &Tableau, dim: usize, entering: usize) -> Vector {
    // Unit step on the entering variable, compensated through the basis.
    let mut z = zeros(tab.n_struct + tab.n_slack + tab.rows);
    z[entering] = int(1);
    for (i, &bj) in tab.basis.iter().enumerate() {
        z[bj] = -tab.at(i, entering).clone();
    }
    (0..dim).map(|j| &z[j] - &z[dim + j]).collect()
}

fn ray_improves(ray: &[Scalar], scaled_obj: &[Scalar], region: &Polyhedron) -> bool {
    let a_ray = region.a.mul_vec(ray);
    let e_ray = region.e.mul_vec(ray);
    a_ray.iter().all(|v| v <= &int(0)) && e_ray.iter().all(is_zero) && dot(scaled_obj, ray) > int(0)
}

fn verify_duals(
    region: &Polyhedron,
    scaled_obj: &[Scalar],
    internal_value: &Scalar,
    mu: &[Scalar],
    nu: &[Scalar],
) {
    assert!(mu.iter().all(|v| v >= &int(0)), "dual sign violation");
    for j in 0..region.dim {
        let mut lhs = int(0);
        for i in 0..region.a.rows() {
            lhs += &mu[i] * region.a.at(i, j);
        }
        for i in 0..region.e.rows() {
            lhs += &nu[i] * region.e.at(i, j);
        }
        assert_eq!(lhs, scaled_obj[j], "stationarity violation in duals");
    }
    let dual_value = dot(mu, &region.b) + dot(nu, &region.f);
    assert_eq!(&dual_value, internal_value, "strong duality gap");
}

fn infeasibility_certificate(
    tab: &Tableau,
    phase1_cost: &[Scalar],
    region: &Polyhedron,
    sign: &[Scalar],
) -> LpOutcome {
    let m1 = region.a.rows();
    let m2 = region.e.rows();
    let mut farkas_ineq = zeros(m1);
    let mut farkas_eq = zeros(m2);
    for i in 0..(m1 + m2) {
        // The artificial of row i carries phase-one cost -1, so its reduced
        // cost is -1 - y_i. Phase-one duals satisfy yᵀM ≥ 0 on structural
        // columns; on the pair (u, -u) that forces equality, so the x-part
        // of yᵀ rows vanishes and y maps to a Farkas vector.
        let r = tab.reduced_cost(phase1_cost, tab.n_struct + tab.n_slack + i);
        let y = int(-1) - r;
        let orig = &sign[i] * &y;
        if i < m1 {
            farkas_ineq[i] = orig;
        } else {
            farkas_eq[i - m1] = orig;
        }
    }
    // Certificate: w ≥ 0, wᵀA + νᵀE = 0, wᵀb + νᵀf < 0.
    for j in 0..region.dim {
        let mut lhs = int(0);
        for i in 0..m1 {
            lhs += &farkas_ineq[i] * region.a.at(i, j);
        }
        for i in 0..m2 {
            lhs += &farkas_eq[i] * region.e.at(i, j);
        }
        assert!(is_zero(&lhs), "farkas combination must cancel x");
    }
    assert!(
        farkas_ineq.iter().all(|v| v >= &int(0)),
        "farkas inequality multipliers must be nonnegative"
    );
    assert!(
        dot(&farkas_ineq, &region.b) + dot(&farkas_eq, &region.f) < int(0),
        "farkas certificate must witness an empty region"
    );
    LpOutcome::Infeasible {
        farkas_ineq,
        farkas_eq,
    }
}
