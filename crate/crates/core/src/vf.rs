//! Optimal value function models: φ', φ'', and the Clarke subdifferential
//! polytope for each supported lower-level class, with regularity flags
//! feeding the certifiers.
//!
//! The directional derivative is piecewise linear in every class: a max of
//! linear forms over dual vertices (fully linear), a min over primal
//! vertices (linear objective parameterization), a single gradient (strongly
//! stable solutions), or user tables (oracle class). Second-order directional
//! derivatives follow the class-specific formulas; for the strongly stable
//! class the curvature term is the infimum of an exact quadratic program.

use crate::certificate::{AssumptionRecord, AssumptionStatus};
use crate::error::{Error, Result};
use crate::linalg::{dot, zeros, Matrix, Vector};
use crate::lower::{check_llicq, check_lsosc, multiplier_polytope, qp_infimum, MultiplierPolytope};
use crate::model::{BilevelInstance, LowerLevel, OraclePiece, PointEvaluation};
use crate::polyhedral::{
    basic_feasible_points, extreme_rays, lp_solve, vertices, LpOutcome, LpSense, PolyhedralCone,
    Polyhedron,
};
use crate::scalar::{int, Scalar};

/// A directional-derivative value on the extended line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DirValue {
    Finite(Scalar),
    NegInf,
}

impl DirValue {
    pub fn finite(&self) -> Option<&Scalar> {
        match self {
            DirValue::Finite(v) => Some(v),
            DirValue::NegInf => None,
        }
    }
}

#[derive(Debug, Clone)]
pub enum VfForm {
    /// φ'(x̄; δ) = max over generators of gᵀδ (convex φ).
    MaxAffine { gens: Vec<Vector> },
    /// φ'(x̄; δ) = min over generators of gᵀδ (concave φ).
    MinAffine { gens: Vec<Vector> },
    /// Continuously differentiable φ with a quadratic-program curvature term.
    Smooth { grad: Vector, multiplier: Vector },
    /// User-supplied piecewise tables.
    Oracle { pieces: Vec<OraclePiece> },
}

#[derive(Debug, Clone)]
pub struct ValueFunctionModel {
    pub form: VfForm,
    /// Generators of the Clarke subdifferential polytope ∂cφ(x̄).
    pub subdifferential: Vec<Vector>,
    pub epi_regular_phi: AssumptionStatus,
    pub epi_regular_neg_phi: AssumptionStatus,
    pub clarke_regular_phi: AssumptionStatus,
    pub clarke_regular_neg_phi: AssumptionStatus,
    /// Hypotheses discharged or assumed while building the model.
    pub assumptions: Vec<AssumptionRecord>,
}

impl ValueFunctionModel {
    /// A model whose φ is differentiable at x̄: the subdifferential is a
    /// single point.
    pub fn smooth_gradient(&self) -> Option<&Vector> {
        if self.subdifferential.len() == 1 {
            Some(&self.subdifferential[0])
        } else {
            None
        }
    }
}

fn dedup(vectors: Vec<Vector>) -> Vec<Vector> {
    let mut out: Vec<Vector> = Vec::new();
    for v in vectors {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

fn status_of(flag: Option<bool>) -> AssumptionStatus {
    match flag {
        Some(true) => AssumptionStatus::Asserted,
        Some(false) => AssumptionStatus::AssertedFalse,
        None => AssumptionStatus::Unknown,
    }
}

/// Builds the value-function model for the instance class, discharging the
/// class guards where they are decidable.
pub fn build_vf_model(
    instance: &BilevelInstance,
    eval: &PointEvaluation,
) -> Result<ValueFunctionModel> {
    let mut assumptions = Vec::new();
    match &instance.lower {
        LowerLevel::FullyLinear {
            a,
            b_mat,
            rhs,
            cost,
        } => {
            // Dual optimal set: argmax { (A x̄ - b)ᵀ λ | Bᵀ λ = -c, λ ≥ 0 }.
            let q = b_mat.rows();
            let mut region = Polyhedron::new(
                q,
                Matrix::zero(0, q),
                Vec::new(),
                b_mat.transpose(),
                cost.iter().map(|c| -c).collect(),
            );
            for i in 0..q {
                let mut row = zeros(q);
                row[i] = int(-1);
                region.add_ineq(row, int(0));
            }
            let shifted: Vector = a
                .mul_vec(&eval.point.x)
                .iter()
                .zip(rhs)
                .map(|(ax, b)| ax - b)
                .collect();
            let dual_value = match lp_solve(&shifted, &region, LpSense::Max)? {
                LpOutcome::Optimal { value, .. } => value,
                LpOutcome::Unbounded { .. } => {
                    return Err(Error::Inapplicable(
                        "lower-level dual is unbounded; primal infeasible at the candidate".into(),
                    ))
                }
                LpOutcome::Infeasible { .. } => {
                    return Err(Error::Inapplicable(
                        "lower-level dual is infeasible; value function model unavailable".into(),
                    ))
                }
            };
            let mut face = region.clone();
            face.add_eq(shifted, dual_value);
            let dual_vertices = basic_feasible_points(&face)?;
            let recession = PolyhedralCone::new(face.dim, face.a.clone(), face.e.clone());
            if !extreme_rays(&recession)?.is_empty() {
                return Err(Error::Inapplicable(
                    "dual optimal face is unbounded; subdifferential is not compact".into(),
                ));
            }
            let gens = dedup(
                dual_vertices
                    .iter()
                    .map(|lam| a.transpose().mul_vec(lam))
                    .collect(),
            );
            assumptions.push(AssumptionRecord::with_note(
                "vf_domain_interior",
                status_of(instance.assertions.vf_domain_interior),
                "proxy verified: primal feasible, dual optimal face bounded",
            ));
            let singleton = gens.len() == 1;
            Ok(ValueFunctionModel {
                subdifferential: gens.clone(),
                form: VfForm::MaxAffine { gens },
                epi_regular_phi: AssumptionStatus::Verified,
                epi_regular_neg_phi: AssumptionStatus::Verified,
                clarke_regular_phi: AssumptionStatus::Verified,
                clarke_regular_neg_phi: if singleton {
                    AssumptionStatus::Verified
                } else {
                    status_of(instance.assertions.neg_phi_clarke_regular)
                },
                assumptions,
            })
        }
        LowerLevel::LinearObjParam {
            a,
            b_mat,
            rhs,
            cost,
        } => {
            let region = Polyhedron::from_inequalities(b_mat.cols(), b_mat.clone(), rhs.clone());
            let k_vertices = vertices(&region).map_err(|e| match e {
                Error::UnboundedPolytope(_) => Error::Inapplicable(
                    "lower-level feasible set K must be compact for this class".into(),
                ),
                other => other,
            })?;
            if k_vertices.is_empty() {
                return Err(Error::Inapplicable(
                    "lower-level feasible set K is empty".into(),
                ));
            }
            assumptions.push(AssumptionRecord::new(
                "k_compact",
                AssumptionStatus::Verified,
            ));
            let cost_at: Vector = {
                let ax = a.mul_vec(&eval.point.x);
                ax.iter().zip(cost).map(|(u, c)| u + c).collect()
            };
            let values: Vec<Scalar> = k_vertices.iter().map(|y| dot(&cost_at, y)).collect();
            let min_value = values.iter().min().cloned().unwrap();
            let gens = dedup(
                k_vertices
                    .iter()
                    .zip(&values)
                    .filter(|(_, v)| **v == min_value)
                    .map(|(y, _)| a.transpose().mul_vec(y))
                    .collect(),
            );
            let singleton = gens.len() == 1;
            Ok(ValueFunctionModel {
                subdifferential: gens.clone(),
                form: VfForm::MinAffine { gens },
                epi_regular_phi: AssumptionStatus::Verified,
                epi_regular_neg_phi: AssumptionStatus::Verified,
                clarke_regular_phi: if singleton {
                    AssumptionStatus::Verified
                } else {
                    status_of(instance.assertions.phi_clarke_regular)
                },
                clarke_regular_neg_phi: AssumptionStatus::Verified,
                assumptions,
            })
        }
        LowerLevel::UniqueStable { .. } => {
            if !check_llicq(eval) {
                return Err(Error::Inapplicable(
                    "LLICQ fails at the candidate; strongly stable model unavailable".into(),
                ));
            }
            let multipliers = multiplier_polytope(eval)?;
            let Some(lam) = multipliers.unique().cloned() else {
                return Err(Error::Inapplicable(
                    "lower-level multiplier is not unique despite LLICQ".into(),
                ));
            };
            if !check_lsosc(eval, &multipliers)? {
                return Err(Error::Inapplicable(
                    "LSOSC fails at the candidate; strongly stable model unavailable".into(),
                ));
            }
            assumptions.push(AssumptionRecord::new("llicq", AssumptionStatus::Verified));
            assumptions.push(AssumptionRecord::new("lsosc", AssumptionStatus::Verified));
            let z = eval.point.joint();
            let lower_obj = instance.lower_objective_poly();
            let lower_cons = instance.lower_constraint_polys();
            let mut family: Vec<&crate::poly::Polynomial> = vec![&lower_obj];
            family.extend(lower_cons.iter());
            let y_vars: Vec<usize> = (eval.n..eval.n + eval.m).collect();
            let convexity = crate::model::convexity_in(&family, &y_vars, &z);
            assumptions.push(AssumptionRecord::with_note(
                "lower_convex_in_y",
                match convexity {
                    Some(true) => AssumptionStatus::Verified,
                    Some(false) => AssumptionStatus::Violated,
                    None => status_of(instance.assertions.lower_convex_in_y),
                },
                "required for the stationarity reading of lower-level optimality",
            ));
            // ∇φ(x̄) = ∇_x L(x̄, ȳ, λ̄).
            let mut grad = eval.grad_x(&eval.grad_lower).to_vec();
            for (i, g) in eval.grads_cons_lower.iter().enumerate() {
                let gx = eval.grad_x(g);
                for j in 0..eval.n {
                    grad[j] += &lam[i] * &gx[j];
                }
            }
            Ok(ValueFunctionModel {
                subdifferential: vec![grad.clone()],
                form: VfForm::Smooth {
                    grad,
                    multiplier: lam,
                },
                epi_regular_phi: AssumptionStatus::Verified,
                epi_regular_neg_phi: AssumptionStatus::Verified,
                clarke_regular_phi: AssumptionStatus::Verified,
                clarke_regular_neg_phi: AssumptionStatus::Verified,
                assumptions,
            })
        }
        LowerLevel::VfOracle {
            pieces,
            subdifferential,
            ..
        } => {
            if pieces.is_empty() {
                return Err(Error::Inapplicable("oracle model has no pieces".into()));
            }
            assumptions.push(AssumptionRecord::with_note(
                "oracle_tables",
                AssumptionStatus::Asserted,
                "derivative tables are user data, not derived from the instance",
            ));
            Ok(ValueFunctionModel {
                form: VfForm::Oracle {
                    pieces: pieces.clone(),
                },
                subdifferential: dedup(subdifferential.clone()),
                epi_regular_phi: status_of(instance.assertions.phi_epi_regular),
                epi_regular_neg_phi: status_of(instance.assertions.neg_phi_epi_regular),
                clarke_regular_phi: status_of(instance.assertions.phi_clarke_regular),
                clarke_regular_neg_phi: status_of(instance.assertions.neg_phi_clarke_regular),
                assumptions,
            })
        }
    }
}

fn oracle_piece_for<'a>(pieces: &'a [OraclePiece], delta_x: &[Scalar]) -> Result<&'a OraclePiece> {
    pieces
        .iter()
        .find(|p| (0..p.region.rows()).all(|i| dot(p.region.row(i), delta_x) <= int(0)))
        .ok_or_else(|| {
            Error::Inapplicable("oracle table does not cover the requested direction".into())
        })
}

/// Exact φ'(x̄; δx).
pub fn phi_dirderiv(model: &ValueFunctionModel, delta_x: &[Scalar]) -> Result<Scalar> {
    match &model.form {
        VfForm::MaxAffine { gens } => Ok(gens.iter().map(|g| dot(g, delta_x)).max().unwrap()),
        VfForm::MinAffine { gens } => Ok(gens.iter().map(|g| dot(g, delta_x)).min().unwrap()),
        VfForm::Smooth { grad, .. } => Ok(dot(grad, delta_x)),
        VfForm::Oracle { pieces } => {
            let piece = oracle_piece_for(pieces, delta_x)?;
            Ok(dot(&piece.lin, delta_x))
        }
    }
}

/// One conjunctive alternative of the φ'' structure at a fixed δx: the value
/// is `min over branches of max over rows of (slopeᵀ ωx + constant)`.
#[derive(Debug, Clone)]
pub struct SecondOrderBranch {
    /// Rows (slope over ωx, constant in δx) that bound φ'' from below
    /// conjunctively within this branch.
    pub rows: Vec<(Vector, Scalar)>,
    /// Label for branch logs: a generator index or a piece index.
    pub label: String,
}

#[derive(Debug, Clone)]
pub enum SecondOrderStructure {
    /// φ''(x̄; δx, ·) = min over branches of max over that branch's rows.
    Branches(Vec<SecondOrderBranch>),
    /// The curvature program is unbounded below: φ'' = -∞ for this δx.
    UnboundedBelow,
}

/// The φ'' structure at a fixed δx, expanded over the active generators.
///
/// For a max-form model the active set is the argmax of the first-order
/// generators (φ'' is their max, a union when moved across an inequality);
/// for a min-form model the argmin generators bound φ'' conjunctively; the
/// smooth and oracle forms contribute one affine row each.
pub fn phi_second_structure(
    model: &ValueFunctionModel,
    eval: &PointEvaluation,
    delta_x: &[Scalar],
) -> Result<SecondOrderStructure> {
    match &model.form {
        VfForm::MaxAffine { gens } => {
            let values: Vec<Scalar> = gens.iter().map(|g| dot(g, delta_x)).collect();
            let best = values.iter().max().cloned().unwrap();
            let branches = gens
                .iter()
                .enumerate()
                .filter(|(i, _)| values[*i] == best)
                .map(|(i, g)| SecondOrderBranch {
                    rows: vec![(g.clone(), int(0))],
                    label: format!("argmax-generator-{i}"),
                })
                .collect();
            Ok(SecondOrderStructure::Branches(branches))
        }
        VfForm::MinAffine { gens } => {
            let values: Vec<Scalar> = gens.iter().map(|g| dot(g, delta_x)).collect();
            let best = values.iter().min().cloned().unwrap();
            let rows = gens
                .iter()
                .enumerate()
                .filter(|(i, _)| values[*i] == best)
                .map(|(_, g)| (g.clone(), int(0)))
                .collect();
            Ok(SecondOrderStructure::Branches(vec![SecondOrderBranch {
                rows,
                label: "argmin-generators".into(),
            }]))
        }
        VfForm::Smooth { grad, multiplier } => match qp_infimum(eval, multiplier, delta_x)? {
            Some(q) => Ok(SecondOrderStructure::Branches(vec![SecondOrderBranch {
                rows: vec![(grad.clone(), q)],
                label: "smooth".into(),
            }])),
            None => Ok(SecondOrderStructure::UnboundedBelow),
        },
        VfForm::Oracle { pieces } => {
            let piece = oracle_piece_for(pieces, delta_x)?;
            let constant = piece.quad.quad_form(delta_x);
            Ok(SecondOrderStructure::Branches(vec![SecondOrderBranch {
                rows: vec![(piece.slope.clone(), constant)],
                label: "oracle-piece".into(),
            }]))
        }
    }
}

/// Exact φ''(x̄; δx, ωx).
pub fn phi_second_dirderiv(
    model: &ValueFunctionModel,
    eval: &PointEvaluation,
    delta_x: &[Scalar],
    omega_x: &[Scalar],
) -> Result<DirValue> {
    match phi_second_structure(model, eval, delta_x)? {
        SecondOrderStructure::UnboundedBelow => Ok(DirValue::NegInf),
        SecondOrderStructure::Branches(branches) => {
            // Each branch bounds φ'' from below by the min of its rows; the
            // structure's value is the best branch. This mirrors the row
            // encoding of the second-order subproblem, where the φ'' term
            // expands to "some branch satisfies all of its rows".
            let value = branches
                .iter()
                .map(|b| {
                    b.rows
                        .iter()
                        .map(|(slope, c)| dot(slope, omega_x) + c)
                        .min()
                        .unwrap()
                })
                .max()
                .unwrap();
            Ok(DirValue::Finite(value))
        }
    }
}

/// Generators of the Clarke subdifferential polytope of φ at x̄.
pub fn subdifferential_polytope(model: &ValueFunctionModel) -> &[Vector] {
    &model.subdifferential
}

/// Convenience: the multiplier set of the candidate solution, needed by
/// callers that pair the model with lower-level objects.
pub fn candidate_multipliers(eval: &PointEvaluation) -> Result<MultiplierPolytope> {
    multiplier_polytope(eval)
}
