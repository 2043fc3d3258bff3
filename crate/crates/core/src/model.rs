//! Bilevel instance representation, JSON ingestion, exact point evaluation,
//! and candidate feasibility.
//!
//! An instance file fixes the upper-level smooth data as polynomials, the
//! lower level in one of four class-specific shapes, the candidate point,
//! and a block of user assertions for hypotheses that are not decidable
//! from the data. Rationals travel as `"num/den"` strings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{zeros, Matrix, Vector};
use crate::poly::{poly_from_spec, MonomialSpec, Polynomial};
use crate::polyhedral::{lp_solve, LpOutcome, LpSense, Polyhedron};
use crate::scalar::{self, abs, int, Scalar};

pub const INSTANCE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemClass {
    FullyLinear,
    LinearObjParam,
    UniqueStable,
    VfOracle,
}

impl ProblemClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemClass::FullyLinear => "fully-linear",
            ProblemClass::LinearObjParam => "linear-obj-param",
            ProblemClass::UniqueStable => "unique-stable",
            ProblemClass::VfOracle => "vf-oracle",
        }
    }
}

/// User assertions for hypotheses the engine cannot decide from the data.
/// Absent entries stay unknown; certifiers report them as such.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Assertions {
    pub k_locally_bounded: Option<bool>,
    pub lmfcq_on_solution_set: Option<bool>,
    pub acq_lower_constraint_set: Option<bool>,
    /// Candidate parameter lies in the interior of the value function domain.
    pub vf_domain_interior: Option<bool>,
    pub phi_locally_lipschitz: Option<bool>,
    pub phi_clarke_regular: Option<bool>,
    pub neg_phi_clarke_regular: Option<bool>,
    pub phi_epi_regular: Option<bool>,
    pub neg_phi_epi_regular: Option<bool>,
    pub lower_convex_in_y: Option<bool>,
    pub lower_jointly_convex: Option<bool>,
    /// Active-set tolerance for oracle-class data entered as rational
    /// approximations of irrational values; exact equality otherwise.
    pub active_tolerance: Option<String>,
}

/// One validity piece of a user-supplied value-function derivative table:
/// on the cone `{δx | R δx ≤ 0}` the directional derivative is `linᵀδx`
/// and the second-order derivative is `slopeᵀωx + δxᵀ Q δx`.
#[derive(Debug, Clone)]
pub struct OraclePiece {
    pub region: Matrix,
    pub lin: Vector,
    pub slope: Vector,
    pub quad: Matrix,
}

#[derive(Debug, Clone)]
pub enum LowerLevel {
    /// `min_y cᵀy  s.t.  A x + B y ≤ b`
    FullyLinear {
        a: Matrix,
        b_mat: Matrix,
        rhs: Vector,
        cost: Vector,
    },
    /// `min_y (A x + c)ᵀ y  s.t.  B y ≤ b`
    LinearObjParam {
        a: Matrix,
        b_mat: Matrix,
        rhs: Vector,
        cost: Vector,
    },
    /// Smooth polynomial lower level with a strongly stable solution.
    UniqueStable {
        objective: Polynomial,
        constraints: Vec<Polynomial>,
    },
    /// Smooth polynomial lower level plus user tables for φ' and φ''.
    VfOracle {
        objective: Polynomial,
        constraints: Vec<Polynomial>,
        pieces: Vec<OraclePiece>,
        subdifferential: Vec<Vector>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidatePoint {
    pub x: Vector,
    pub y: Vector,
}

impl CandidatePoint {
    pub fn joint(&self) -> Vector {
        let mut v = self.x.clone();
        v.extend(self.y.iter().cloned());
        v
    }
}

#[derive(Debug, Clone)]
pub struct BilevelInstance {
    pub name: String,
    pub class: ProblemClass,
    pub n: usize,
    pub m: usize,
    pub upper_objective: Polynomial,
    pub upper_constraints: Vec<Polynomial>,
    pub lower: LowerLevel,
    pub candidate: CandidatePoint,
    pub assertions: Assertions,
}

impl BilevelInstance {
    pub fn p(&self) -> usize {
        self.upper_constraints.len()
    }

    pub fn q(&self) -> usize {
        match &self.lower {
            LowerLevel::FullyLinear { b_mat, .. } | LowerLevel::LinearObjParam { b_mat, .. } => {
                b_mat.rows()
            }
            LowerLevel::UniqueStable { constraints, .. }
            | LowerLevel::VfOracle { constraints, .. } => constraints.len(),
        }
    }

    /// Lower objective as a polynomial over the joint (x, y) variables.
    pub fn lower_objective_poly(&self) -> Polynomial {
        let vars = self.n + self.m;
        match &self.lower {
            LowerLevel::FullyLinear { cost, .. } => {
                let mut coefs = zeros(vars);
                coefs[self.n..].clone_from_slice(cost);
                Polynomial::affine(&coefs, int(0))
            }
            LowerLevel::LinearObjParam { a, cost, .. } => {
                let mut p = Polynomial::zero(vars);
                for i in 0..self.m {
                    for j in 0..self.n {
                        let mut exps = vec![0u32; vars];
                        exps[j] += 1;
                        exps[self.n + i] += 1;
                        p.push_term(a.at(i, j).clone(), exps);
                    }
                    let mut exps = vec![0u32; vars];
                    exps[self.n + i] = 1;
                    p.push_term(cost[i].clone(), exps);
                }
                p
            }
            LowerLevel::UniqueStable { objective, .. } | LowerLevel::VfOracle { objective, .. } => {
                objective.clone()
            }
        }
    }

    /// Lower constraints as polynomials `g_i(x, y) ≤ 0` over (x, y).
    pub fn lower_constraint_polys(&self) -> Vec<Polynomial> {
        let vars = self.n + self.m;
        match &self.lower {
            LowerLevel::FullyLinear { a, b_mat, rhs, .. } => (0..b_mat.rows())
                .map(|i| {
                    let mut coefs = zeros(vars);
                    coefs[..self.n].clone_from_slice(a.row(i));
                    coefs[self.n..].clone_from_slice(b_mat.row(i));
                    Polynomial::affine(&coefs, -rhs[i].clone())
                })
                .collect(),
            LowerLevel::LinearObjParam { b_mat, rhs, .. } => (0..b_mat.rows())
                .map(|i| {
                    let mut coefs = zeros(vars);
                    coefs[self.n..].clone_from_slice(b_mat.row(i));
                    Polynomial::affine(&coefs, -rhs[i].clone())
                })
                .collect(),
            LowerLevel::UniqueStable { constraints, .. }
            | LowerLevel::VfOracle { constraints, .. } => constraints.clone(),
        }
    }

    /// True when every lower constraint is affine in y and free of x.
    pub fn lower_constraints_affine_x_free(&self) -> bool {
        let x_vars: Vec<usize> = (0..self.n).collect();
        self.lower_constraint_polys()
            .iter()
            .all(|g| g.degree() <= 1 && g.independent_of(&x_vars))
    }
}

/// All exact data of the instance at the candidate point.
#[derive(Debug, Clone)]
pub struct PointEvaluation {
    pub n: usize,
    pub m: usize,
    pub point: CandidatePoint,
    pub obj_upper: Scalar,
    pub cons_upper: Vector,
    pub obj_lower: Scalar,
    pub cons_lower: Vector,
    pub grad_upper: Vector,
    pub grads_cons_upper: Vec<Vector>,
    pub grad_lower: Vector,
    pub grads_cons_lower: Vec<Vector>,
    pub hess_upper: Matrix,
    pub hess_cons_upper: Vec<Matrix>,
    pub hess_lower: Matrix,
    pub hess_cons_lower: Vec<Matrix>,
    /// Ī^G: active upper-level constraint indices.
    pub active_upper: Vec<usize>,
    /// Ī^g: active lower-level constraint indices.
    pub active_lower: Vec<usize>,
}

impl PointEvaluation {
    pub fn grad_x<'a>(&self, v: &'a [Scalar]) -> &'a [Scalar] {
        &v[..self.n]
    }

    pub fn grad_y<'a>(&self, v: &'a [Scalar]) -> &'a [Scalar] {
        &v[self.n..]
    }

    pub fn is_active_lower(&self, i: usize) -> bool {
        self.active_lower.contains(&i)
    }
}

/// Evaluates values, gradients, Hessians, and exact active sets at the
/// candidate. Pure and deterministic.
pub fn evaluate(instance: &BilevelInstance, point: &CandidatePoint) -> Result<PointEvaluation> {
    if point.x.len() != instance.n || point.y.len() != instance.m {
        return Err(Error::Dimension(format!(
            "candidate ({}, {}) vs instance ({}, {})",
            point.x.len(),
            point.y.len(),
            instance.n,
            instance.m
        )));
    }
    let z = point.joint();
    let tol = active_tolerance(instance)?;
    let f_upper = &instance.upper_objective;
    let g_upper = &instance.upper_constraints;
    let f_lower = instance.lower_objective_poly();
    let g_lower = instance.lower_constraint_polys();

    let cons_upper: Vector = g_upper.iter().map(|p| p.eval(&z)).collect();
    let cons_lower: Vector = g_lower.iter().map(|p| p.eval(&z)).collect();
    let is_active = |v: &Scalar| match &tol {
        None => scalar::is_zero(v),
        Some(t) => abs(v) <= *t,
    };

    Ok(PointEvaluation {
        n: instance.n,
        m: instance.m,
        point: point.clone(),
        obj_upper: f_upper.eval(&z),
        cons_upper: cons_upper.clone(),
        obj_lower: f_lower.eval(&z),
        cons_lower: cons_lower.clone(),
        grad_upper: f_upper.gradient(&z),
        grads_cons_upper: g_upper.iter().map(|p| p.gradient(&z)).collect(),
        grad_lower: f_lower.gradient(&z),
        grads_cons_lower: g_lower.iter().map(|p| p.gradient(&z)).collect(),
        hess_upper: f_upper.hessian(&z),
        hess_cons_upper: g_upper.iter().map(|p| p.hessian(&z)).collect(),
        hess_lower: f_lower.hessian(&z),
        hess_cons_lower: g_lower.iter().map(|p| p.hessian(&z)).collect(),
        active_upper: (0..cons_upper.len())
            .filter(|&i| is_active(&cons_upper[i]))
            .collect(),
        active_lower: (0..cons_lower.len())
            .filter(|&i| is_active(&cons_lower[i]))
            .collect(),
    })
}

fn active_tolerance(instance: &BilevelInstance) -> Result<Option<Scalar>> {
    match (&instance.class, &instance.assertions.active_tolerance) {
        (ProblemClass::VfOracle, Some(t)) => Ok(Some(scalar::parse(t)?)),
        _ => Ok(None),
    }
}

/// Convexity of a polynomial family along the chosen variables, decided
/// exactly when the relevant Hessian block is constant (degree at most two);
/// `None` when undecidable from the data.
pub fn convexity_in(polys: &[&Polynomial], vars: &[usize], point: &[Scalar]) -> Option<bool> {
    for p in polys {
        if p.degree() > 2 {
            return None;
        }
        let h = p.hessian(point);
        let block = crate::linalg::submatrix(&h, vars, vars);
        if !crate::linalg::is_positive_semidefinite(&block) {
            return Some(false);
        }
    }
    Some(true)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "verdict")]
pub enum Feasibility {
    Feasible,
    Infeasible { reason: String },
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible)
    }
}

/// Lower-level feasible region in y for a fixed x (linear classes only).
pub fn lower_region_at(instance: &BilevelInstance, x: &[Scalar]) -> Option<Polyhedron> {
    match &instance.lower {
        LowerLevel::FullyLinear { a, b_mat, rhs, .. } => {
            let shift = a.mul_vec(x);
            let b: Vector = rhs.iter().zip(&shift).map(|(r, s)| r - s).collect();
            Some(Polyhedron::from_inequalities(
                b_mat.cols(),
                b_mat.clone(),
                b,
            ))
        }
        LowerLevel::LinearObjParam { b_mat, rhs, .. } => Some(Polyhedron::from_inequalities(
            b_mat.cols(),
            b_mat.clone(),
            rhs.clone(),
        )),
        _ => None,
    }
}

/// Lower-level objective vector in y for a fixed x (linear classes only).
pub fn lower_cost_at(instance: &BilevelInstance, x: &[Scalar]) -> Option<Vector> {
    match &instance.lower {
        LowerLevel::FullyLinear { cost, .. } => Some(cost.clone()),
        LowerLevel::LinearObjParam { a, cost, .. } => {
            let ax = a.mul_vec(x);
            Some(ax.iter().zip(cost).map(|(u, c)| u + c).collect())
        }
        _ => None,
    }
}

/// Decides bilevel feasibility of the candidate: upper constraints hold,
/// lower constraints hold, and the candidate solves the lower level. Exact
/// for the linear classes; via multiplier existence (under the class's
/// convexity reading) otherwise.
pub fn check_feasible(instance: &BilevelInstance, eval: &PointEvaluation) -> Result<Feasibility> {
    for (i, v) in eval.cons_upper.iter().enumerate() {
        if v > &int(0) {
            return Ok(Feasibility::Infeasible {
                reason: format!("upper-level constraint {i} is violated"),
            });
        }
    }
    for (i, v) in eval.cons_lower.iter().enumerate() {
        if v > &int(0) {
            return Ok(Feasibility::Infeasible {
                reason: format!("lower-level constraint {i} is violated"),
            });
        }
    }
    match &instance.lower {
        LowerLevel::FullyLinear { .. } | LowerLevel::LinearObjParam { .. } => {
            let region = lower_region_at(instance, &eval.point.x).unwrap();
            let cost = lower_cost_at(instance, &eval.point.x).unwrap();
            match lp_solve(&cost, &region, LpSense::Min)? {
                LpOutcome::Optimal { value, .. } => {
                    if value == eval.obj_lower {
                        Ok(Feasibility::Feasible)
                    } else {
                        Ok(Feasibility::Infeasible {
                            reason: format!(
                                "candidate is not lower-level optimal: f = {}, min = {}",
                                scalar::render(&eval.obj_lower),
                                scalar::render(&value)
                            ),
                        })
                    }
                }
                LpOutcome::Unbounded { .. } => Ok(Feasibility::Infeasible {
                    reason: "lower level is unbounded below at the candidate parameter".into(),
                }),
                LpOutcome::Infeasible { .. } => Ok(Feasibility::Infeasible {
                    reason: "lower level is infeasible at the candidate parameter".into(),
                }),
            }
        }
        LowerLevel::VfOracle { .. } => {
            // Membership of the candidate in the lower-level solution set is
            // not decidable from oracle tables, and stationarity may fail at
            // genuine minimizers when constraint qualifications break down.
            // Constraint satisfaction was checked above; optimality is the
            // responsibility of the table supplier.
            Ok(Feasibility::Feasible)
        }
        LowerLevel::UniqueStable { .. } => {
            // Stationarity: some λ ≥ 0 with ∇_y f + ∇_y gᵀ λ = 0 and
            // complementarity; under lower-level convexity in y this is
            // equivalent to optimality.
            let q = instance.q();
            let m = instance.m;
            let mut eq_rows = Vec::with_capacity(m);
            let mut eq_rhs = zeros(m);
            for r in 0..m {
                let mut row = zeros(q);
                for (i, g) in eval.grads_cons_lower.iter().enumerate() {
                    row[i] = eval.grad_y(g)[r].clone();
                }
                eq_rows.push(row);
                eq_rhs[r] = -eval.grad_y(&eval.grad_lower)[r].clone();
            }
            let mut region = Polyhedron::new(
                q,
                Matrix::zero(0, q),
                Vec::new(),
                Matrix::from_rows_with_width(eq_rows, q),
                eq_rhs,
            );
            for i in 0..q {
                let mut row = zeros(q);
                row[i] = int(-1);
                region.add_ineq(row, int(0)); // λ ≥ 0
                if !eval.is_active_lower(i) {
                    let mut row = zeros(q);
                    row[i] = int(1);
                    region.add_ineq(row, int(0)); // complementarity: λ_i = 0
                }
            }
            if lp_solve(&zeros(q), &region, LpSense::Min)?.is_feasible() {
                Ok(Feasibility::Feasible)
            } else {
                Ok(Feasibility::Infeasible {
                    reason: "no lower-level Lagrange multiplier exists at the candidate".into(),
                })
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Wire format
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OraclePieceSpec {
    /// Rows of the validity cone `R δx ≤ 0`.
    pub region: Vec<Vec<String>>,
    /// φ'(x̄; δx) = lin ᵀ δx on the region.
    pub lin: Vec<String>,
    /// φ''(x̄; δx, ωx) = slope ᵀ ωx + δx ᵀ quad δx on the region.
    pub slope: Vec<String>,
    pub quad: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct LowerSpec {
    // Linear classes.
    pub a: Option<Vec<Vec<String>>>,
    pub b_mat: Option<Vec<Vec<String>>>,
    pub rhs: Option<Vec<String>>,
    pub cost: Option<Vec<String>>,
    // Smooth classes.
    pub objective: Option<Vec<MonomialSpec>>,
    pub constraints: Option<Vec<Vec<MonomialSpec>>>,
    // Oracle tables.
    pub phi_pieces: Option<Vec<OraclePieceSpec>>,
    pub subdifferential: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateSpec {
    pub x: Vec<String>,
    pub y: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub class: ProblemClass,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub q: usize,
    #[serde(rename = "F")]
    pub upper_objective: Vec<MonomialSpec>,
    #[serde(rename = "G", default)]
    pub upper_constraints: Vec<Vec<MonomialSpec>>,
    pub lower: LowerSpec,
    pub candidate: CandidateSpec,
    #[serde(default)]
    pub assumptions: Assertions,
}

fn parse_vector(v: &[String]) -> Result<Vector> {
    v.iter().map(|s| scalar::parse(s)).collect()
}

fn parse_matrix(rows: &[Vec<String>], cols: usize, what: &str) -> Result<Matrix> {
    let mut out = Vec::with_capacity(rows.len());
    for r in rows {
        if r.len() != cols {
            return Err(Error::Schema(format!(
                "{what}: expected rows of width {cols}, found {}",
                r.len()
            )));
        }
        out.push(parse_vector(r)?);
    }
    Ok(Matrix::from_rows_with_width(out, cols))
}

pub fn instance_from_spec(spec: &InstanceSpec) -> Result<BilevelInstance> {
    if spec.schema_version != INSTANCE_SCHEMA_VERSION {
        return Err(Error::Schema(format!(
            "unsupported schema_version {} (expected {})",
            spec.schema_version, INSTANCE_SCHEMA_VERSION
        )));
    }
    let vars = spec.n + spec.m;
    let upper_objective = poly_from_spec(vars, &spec.upper_objective)
        .map_err(|e| Error::Schema(format!("/F: {e}")))?;
    if spec.upper_constraints.len() != spec.p {
        return Err(Error::Schema(format!(
            "/G: expected {} constraints, found {}",
            spec.p,
            spec.upper_constraints.len()
        )));
    }
    let mut upper_constraints = Vec::with_capacity(spec.p);
    for (i, g) in spec.upper_constraints.iter().enumerate() {
        upper_constraints
            .push(poly_from_spec(vars, g).map_err(|e| Error::Schema(format!("/G/{i}: {e}")))?);
    }

    let missing = |field: &str| Error::Schema(format!("/lower/{field}: required for this class"));
    let lower = match spec.class {
        ProblemClass::FullyLinear | ProblemClass::LinearObjParam => {
            let a_rows = if spec.class == ProblemClass::FullyLinear {
                spec.q
            } else {
                spec.m
            };
            let a = parse_matrix(
                spec.lower.a.as_ref().ok_or_else(|| missing("a"))?,
                spec.n,
                "/lower/a",
            )?;
            if a.rows() != a_rows {
                return Err(Error::Schema(format!(
                    "/lower/a: expected {} rows, found {}",
                    a_rows,
                    a.rows()
                )));
            }
            let b_mat = parse_matrix(
                spec.lower.b_mat.as_ref().ok_or_else(|| missing("b_mat"))?,
                spec.m,
                "/lower/b_mat",
            )?;
            if b_mat.rows() != spec.q {
                return Err(Error::Schema(format!(
                    "/lower/b_mat: expected {} rows, found {}",
                    spec.q,
                    b_mat.rows()
                )));
            }
            let rhs = parse_vector(spec.lower.rhs.as_ref().ok_or_else(|| missing("rhs"))?)?;
            if rhs.len() != spec.q {
                return Err(Error::Schema("/lower/rhs: length must equal q".into()));
            }
            let cost = parse_vector(spec.lower.cost.as_ref().ok_or_else(|| missing("cost"))?)?;
            if cost.len() != spec.m {
                return Err(Error::Schema("/lower/cost: length must equal m".into()));
            }
            if spec.class == ProblemClass::FullyLinear {
                LowerLevel::FullyLinear {
                    a,
                    b_mat,
                    rhs,
                    cost,
                }
            } else {
                LowerLevel::LinearObjParam {
                    a,
                    b_mat,
                    rhs,
                    cost,
                }
            }
        }
        ProblemClass::UniqueStable | ProblemClass::VfOracle => {
            let objective = poly_from_spec(
                vars,
                spec.lower
                    .objective
                    .as_ref()
                    .ok_or_else(|| missing("objective"))?,
            )
            .map_err(|e| Error::Schema(format!("/lower/objective: {e}")))?;
            let cons_specs = spec
                .lower
                .constraints
                .as_ref()
                .ok_or_else(|| missing("constraints"))?;
            if cons_specs.len() != spec.q {
                return Err(Error::Schema(format!(
                    "/lower/constraints: expected {} entries, found {}",
                    spec.q,
                    cons_specs.len()
                )));
            }
            let mut constraints = Vec::with_capacity(spec.q);
            for (i, c) in cons_specs.iter().enumerate() {
                constraints.push(
                    poly_from_spec(vars, c)
                        .map_err(|e| Error::Schema(format!("/lower/constraints/{i}: {e}")))?,
                );
            }
            if spec.class == ProblemClass::UniqueStable {
                LowerLevel::UniqueStable {
                    objective,
                    constraints,
                }
            } else {
                let piece_specs = spec
                    .lower
                    .phi_pieces
                    .as_ref()
                    .ok_or_else(|| missing("phi_pieces"))?;
                let mut pieces = Vec::with_capacity(piece_specs.len());
                for (i, ps) in piece_specs.iter().enumerate() {
                    let at = |e: Error| Error::Schema(format!("/lower/phi_pieces/{i}: {e}"));
                    let region = parse_matrix(&ps.region, spec.n, "region").map_err(at)?;
                    let lin = parse_vector(&ps.lin).map_err(at)?;
                    let slope = parse_vector(&ps.slope).map_err(at)?;
                    let quad = parse_matrix(&ps.quad, spec.n, "quad").map_err(at)?;
                    if lin.len() != spec.n || slope.len() != spec.n || quad.rows() != spec.n {
                        return Err(Error::Schema(format!(
                            "/lower/phi_pieces/{i}: vectors must have length n"
                        )));
                    }
                    pieces.push(OraclePiece {
                        region,
                        lin,
                        slope,
                        quad,
                    });
                }
                let subdifferential = match &spec.lower.subdifferential {
                    Some(rows) => rows
                        .iter()
                        .map(|r| parse_vector(r))
                        .collect::<Result<Vec<_>>>()?,
                    None => pieces.iter().map(|p| p.lin.clone()).collect(),
                };
                LowerLevel::VfOracle {
                    objective,
                    constraints,
                    pieces,
                    subdifferential,
                }
            }
        }
    };

    let candidate = CandidatePoint {
        x: parse_vector(&spec.candidate.x)?,
        y: parse_vector(&spec.candidate.y)?,
    };
    if candidate.x.len() != spec.n || candidate.y.len() != spec.m {
        return Err(Error::Schema(
            "/candidate: x and y must have lengths n and m".into(),
        ));
    }

    Ok(BilevelInstance {
        name: spec.name.clone(),
        class: spec.class,
        n: spec.n,
        m: spec.m,
        upper_objective,
        upper_constraints,
        lower,
        candidate,
        assertions: spec.assumptions.clone(),
    })
}

pub fn load_instance_str(text: &str) -> Result<BilevelInstance> {
    let spec: InstanceSpec = serde_json::from_str(text)
        .map_err(|e| Error::Schema(format!("instance file does not match schema: {e}")))?;
    instance_from_spec(&spec)
}
