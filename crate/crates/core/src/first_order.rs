//! First-order sufficient-condition certifiers.
//!
//! Each certifier assembles a polyhedral system (or a finite union of
//! branches) whose only solution must be trivial in the decision variables,
//! runs the exact triviality test, and emits a certificate carrying the
//! assumption ledger, the branch log, and a re-substituted witness whenever
//! the condition fails.

use crate::certificate::{
    render_vector, AssumptionRecord, AssumptionStatus, BranchRecord, Certificate, Verdict, Witness,
};
use crate::error::{Error, Result};
use crate::linalg::{self, dot, is_zero_vec, zeros, Matrix, Vector};
use crate::lower::{
    check_llicq, check_lsosc, check_smfc, check_soscms_affine, lower_solve, multiplier_polytope,
    qp_branches, solution_map_dirderiv, IndexPartition, MultiplierPolytope,
};
use crate::model::{
    convexity_in, lower_region_at, BilevelInstance, LowerLevel, PointEvaluation, ProblemClass,
};
use crate::polyhedral::{
    decompose_complementarity, lp_solve, polyhedron_trivial_in_projection, ComplementarityPair,
    ConeTriviality, LpSense, PolyhedralCone, Polyhedron,
};
use crate::scalar::{int, Scalar};
use crate::vf::{phi_dirderiv, ValueFunctionModel, VfForm};

pub const COND_VF_PRIMAL: &str = "fo-vf";
pub const COND_VF_DUAL: &str = "fo-vf-dual";
pub const COND_VF_COROLLARY: &str = "fo-vf-cor";
pub const COND_IMPLICIT: &str = "fo-implicit";
pub const COND_VA: &str = "fo-va";
pub const COND_KKT: &str = "fo-kkt";

fn lift_x(n: usize, m: usize, row_x: &[Scalar]) -> Vector {
    let mut row = row_x.to_vec();
    row.extend(zeros(m));
    debug_assert_eq!(row.len(), n + m);
    row
}

/// Strict feasibility of homogeneous rows: some d with rowᵀd ≤ -1 for all
/// rows. For positively homogeneous systems this is exactly MFCQ.
fn strict_descent_exists(rows: &[Vector], dim: usize) -> Result<bool> {
    if rows.is_empty() {
        return Ok(true);
    }
    let region = Polyhedron::new(
        dim,
        Matrix::from_rows_with_width(rows.to_vec(), dim),
        vec![int(-1); rows.len()],
        Matrix::zero(0, dim),
        Vec::new(),
    );
    Ok(lp_solve(&zeros(dim), &region, LpSense::Min)?.is_feasible())
}

fn assertion_status(flag: Option<bool>) -> AssumptionStatus {
    match flag {
        Some(true) => AssumptionStatus::Asserted,
        Some(false) => AssumptionStatus::AssertedFalse,
        None => AssumptionStatus::Unknown,
    }
}

/// Hypotheses of the value-function theorems: local boundedness of the
/// lower-level feasible set mapping at x̄ and LMFCQ at all lower-level
/// solutions for the candidate parameter.
pub fn value_function_hypotheses(
    instance: &BilevelInstance,
    eval: &PointEvaluation,
) -> Result<Vec<AssumptionRecord>> {
    let mut records = Vec::new();
    match &instance.lower {
        LowerLevel::FullyLinear { b_mat, .. } => {
            let recession =
                PolyhedralCone::new(b_mat.cols(), b_mat.clone(), Matrix::zero(0, b_mat.cols()));
            let bounded = crate::polyhedral::cone_is_trivial(&recession)?.is_trivial();
            records.push(AssumptionRecord::new(
                "k_locally_bounded",
                if bounded {
                    AssumptionStatus::Verified
                } else {
                    AssumptionStatus::Violated
                },
            ));
        }
        LowerLevel::LinearObjParam { b_mat, rhs, .. } => {
            let region = Polyhedron::from_inequalities(b_mat.cols(), b_mat.clone(), rhs.clone());
            let bounded = crate::polyhedral::vertices(&region).is_ok();
            records.push(AssumptionRecord::new(
                "k_locally_bounded",
                if bounded {
                    AssumptionStatus::Verified
                } else {
                    AssumptionStatus::Violated
                },
            ));
        }
        _ => {
            records.push(AssumptionRecord::new(
                "k_locally_bounded",
                assertion_status(instance.assertions.k_locally_bounded),
            ));
        }
    }

    match &instance.lower {
        LowerLevel::FullyLinear { .. } | LowerLevel::LinearObjParam { .. } => {
            let solution = lower_solve(instance, &eval.point.x)?;
            let Some(solution) = solution else {
                records.push(AssumptionRecord::with_note(
                    "lmfcq_on_solution_set",
                    AssumptionStatus::Violated,
                    "lower level infeasible at the candidate parameter",
                ));
                return Ok(records);
            };
            let region = lower_region_at(instance, &eval.point.x).unwrap();
            let mut all_ok = true;
            for v in &solution.face_vertices {
                let active_rows: Vec<Vector> = (0..region.a.rows())
                    .filter(|&i| dot(region.a.row(i), v) == region.b[i])
                    .map(|i| region.a.row_vec(i))
                    .collect();
                if !strict_descent_exists(&active_rows, region.dim)? {
                    all_ok = false;
                    break;
                }
            }
            let status = if !all_ok {
                AssumptionStatus::Violated
            } else if solution.face_rays.is_empty() {
                AssumptionStatus::Verified
            } else {
                // Unbounded optimal face: vertices checked, the rest taken
                // from the assertion block.
                assertion_status(instance.assertions.lmfcq_on_solution_set)
            };
            records.push(AssumptionRecord::new("lmfcq_on_solution_set", status));
        }
        _ => {
            let active_rows: Vec<Vector> = eval
                .active_lower
                .iter()
                .map(|&i| eval.grad_y(&eval.grads_cons_lower[i]).to_vec())
                .collect();
            let at_candidate = strict_descent_exists(&active_rows, eval.m)?;
            let status = if !at_candidate {
                AssumptionStatus::Violated
            } else {
                assertion_status(instance.assertions.lmfcq_on_solution_set)
            };
            records.push(AssumptionRecord::with_note(
                "lmfcq_on_solution_set",
                status,
                "verified at the candidate solution; other solutions by assertion",
            ));
        }
    }
    Ok(records)
}

fn blocking_assumption(records: &[AssumptionRecord]) -> Option<&AssumptionRecord> {
    records.iter().find(|r| !r.status.permits())
}

/// One union-piece of the expanded φ' row: the rows `∇fᵀd - aᵀδx ≤ 0` for
/// each `a`, plus validity rows on δx for oracle tables.
struct PhiRowPiece {
    f_slopes: Vec<Vector>,
    region_rows: Vec<Vector>,
    label: String,
}

fn phi_row_pieces(model: &ValueFunctionModel) -> Vec<PhiRowPiece> {
    match &model.form {
        VfForm::MaxAffine { gens } => gens
            .iter()
            .enumerate()
            .map(|(k, g)| PhiRowPiece {
                f_slopes: vec![g.clone()],
                region_rows: Vec::new(),
                label: format!("generator-{k}"),
            })
            .collect(),
        VfForm::MinAffine { gens } => vec![PhiRowPiece {
            f_slopes: gens.clone(),
            region_rows: Vec::new(),
            label: "all-generators".into(),
        }],
        VfForm::Smooth { grad, .. } => vec![PhiRowPiece {
            f_slopes: vec![grad.clone()],
            region_rows: Vec::new(),
            label: "gradient".into(),
        }],
        VfForm::Oracle { pieces } => pieces
            .iter()
            .enumerate()
            .map(|(k, p)| PhiRowPiece {
                f_slopes: vec![p.lin.clone()],
                region_rows: (0..p.region.rows()).map(|i| p.region.row_vec(i)).collect(),
                label: format!("oracle-piece-{k}"),
            })
            .collect(),
    }
}

fn base_system_rows(eval: &PointEvaluation) -> Vec<Vector> {
    let mut rows = vec![eval.grad_upper.clone()];
    for &i in &eval.active_upper {
        rows.push(eval.grads_cons_upper[i].clone());
    }
    for &i in &eval.active_lower {
        rows.push(eval.grads_cons_lower[i].clone());
    }
    rows
}

fn witness_from(direction: &[Scalar], auxiliary: Option<&[Scalar]>, verified: bool) -> Witness {
    Witness {
        direction: render_vector(direction),
        auxiliary: auxiliary.map(render_vector),
        verified,
    }
}

/// Theorem-level certifier on the value-function reformulation: the system
/// of nonascent rows for F, active G and g, and the φ' row must admit only
/// the trivial direction.
pub fn certify_vf_primal(
    instance: &BilevelInstance,
    eval: &PointEvaluation,
    model: &ValueFunctionModel,
) -> Result<Certificate> {
    let mut assumptions = value_function_hypotheses(instance, eval)?;
    assumptions.push(AssumptionRecord::with_note(
        "phi_plus_equals_phi_prime",
        AssumptionStatus::Verified,
        "directional derivative exists for every supported class; upper Dini derivative coincides",
    ));
    assumptions.extend(model.assumptions.iter().cloned());
    if let Some(block) = blocking_assumption(&assumptions) {
        let mut cert = Certificate::inapplicable(
            COND_VF_PRIMAL,
            &format!("hypothesis {} not available", block.name),
        );
        cert.assumptions = assumptions;
        return Ok(cert);
    }

    let n = eval.n;
    let m = eval.m;
    let base = base_system_rows(eval);
    let mut branches = Vec::new();
    let mut failure: Option<(Vector, String)> = None;
    for piece in phi_row_pieces(model) {
        let mut cone = PolyhedralCone::whole_space(n + m);
        for row in &base {
            cone.add_ineq(row.clone());
        }
        for slope in &piece.f_slopes {
            cone.add_ineq(linalg::sub(&eval.grad_lower, &lift_x(n, m, slope)));
        }
        for region in &piece.region_rows {
            cone.add_ineq(lift_x(n, m, region));
        }
        let triviality = crate::polyhedral::cone_is_trivial(&cone)?;
        let trivial = triviality.is_trivial();
        let witness = triviality.witness().map(|w| {
            let verified = verify_vf_primal_witness(eval, model, w);
            witness_from(w, None, verified)
        });
        if let Some(w) = triviality.witness() {
            if failure.is_none() {
                failure = Some((w.clone(), piece.label.clone()));
            }
        }
        branches.push(BranchRecord {
            label: piece.label,
            trivial,
            witness,
        });
    }

    let verdict = if failure.is_none() {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    let witness = failure.map(|(w, _)| {
        let verified = verify_vf_primal_witness(eval, model, &w);
        witness_from(&w, None, verified)
    });
    Ok(Certificate {
        condition: COND_VF_PRIMAL.into(),
        verdict,
        witness,
        assumptions,
        branches,
        notes: Vec::new(),
    })
}

/// Re-substitutes a direction into the primal system with the true φ'.
fn verify_vf_primal_witness(
    eval: &PointEvaluation,
    model: &ValueFunctionModel,
    d: &[Scalar],
) -> bool {
    if is_zero_vec(d) {
        return false;
    }
    for row in base_system_rows(eval) {
        if dot(&row, d) > int(0) {
            return false;
        }
    }
    let delta_x = &d[..eval.n];
    match phi_dirderiv(model, delta_x) {
        Ok(phi) => dot(&eval.grad_lower, d) - phi <= int(0),
        Err(_) => false,
    }
}

/// Dual-form certifier: the polar cone of the gradient bundle Q must be
/// trivial, equivalently the origin lies in the interior of conv Q.
pub fn certify_vf_dual(
    instance: &BilevelInstance,
    eval: &PointEvaluation,
    model: &ValueFunctionModel,
) -> Result<Certificate> {
    // The dual theorem needs φ locally Lipschitz at x̄ and -φ Clarke
    // regular there; the primal theorem's boundedness hypotheses are only
    // a sufficient condition for the former.
    let lipschitz = match &model.form {
        VfForm::MaxAffine { .. } | VfForm::MinAffine { .. } | VfForm::Smooth { .. } => {
            AssumptionStatus::Verified
        }
        VfForm::Oracle { .. } => assertion_status(instance.assertions.phi_locally_lipschitz),
    };
    let mut assumptions = vec![AssumptionRecord::new("phi_locally_lipschitz", lipschitz)];
    assumptions.push(AssumptionRecord::new(
        "neg_phi_clarke_regular",
        model.clarke_regular_neg_phi,
    ));
    if let Some(block) = blocking_assumption(&assumptions) {
        let mut cert = Certificate::inapplicable(
            COND_VF_DUAL,
            &format!("hypothesis {} not available", block.name),
        );
        cert.assumptions = assumptions;
        return Ok(cert);
    }

    let n = eval.n;
    let m = eval.m;
    let mut q_points: Vec<Vector> = vec![eval.grad_upper.clone()];
    for &i in &eval.active_upper {
        q_points.push(eval.grads_cons_upper[i].clone());
    }
    for xi in &model.subdifferential {
        q_points.push(linalg::sub(&eval.grad_lower, &lift_x(n, m, xi)));
    }
    for &i in &eval.active_lower {
        q_points.push(eval.grads_cons_lower[i].clone());
    }

    // Polar of the conic hull of Q: directions v with qᵀv ≤ 0 for all q.
    let cone = PolyhedralCone::new(
        n + m,
        Matrix::from_rows_with_width(q_points.clone(), n + m),
        Matrix::zero(0, n + m),
    );
    let triviality = crate::polyhedral::cone_is_trivial(&cone)?;
    let zero_interior = triviality.is_trivial();
    let verdict = if zero_interior {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    let witness = triviality.witness().map(|w| {
        let verified = q_points.iter().all(|q| dot(q, w) <= int(0)) && !is_zero_vec(w);
        witness_from(w, None, verified)
    });
    Ok(Certificate {
        condition: COND_VF_DUAL.into(),
        verdict,
        witness,
        assumptions,
        branches: vec![BranchRecord {
            label: "polar-of-conic-hull".into(),
            trivial: zero_interior,
            witness: None,
        }],
        notes: vec![format!(
            "zero_in_interior_of_hull(Q) = {zero_interior} over {} generator points",
            q_points.len()
        )],
    })
}

/// Inputs of the corollary certifier: the enumerated optimal face of the
/// lower level at x̄ and one multiplier polytope per face vertex.
pub struct SolutionFaceData {
    pub face_vertices: Vec<Vector>,
    /// Vertex lists of Λ(x̄, y_v) for each face vertex.
    pub multiplier_vertices: Vec<Vec<Vector>>,
}

/// Gathers the face data from the instance where possible.
pub fn solution_face_data(
    instance: &BilevelInstance,
    eval: &PointEvaluation,
) -> Result<SolutionFaceData> {
    match &instance.lower {
        LowerLevel::FullyLinear { .. } | LowerLevel::LinearObjParam { .. } => {
            let solution = lower_solve(instance, &eval.point.x)?.ok_or_else(|| {
                Error::Inapplicable("lower level infeasible at the candidate".into())
            })?;
            if !solution.face_rays.is_empty() {
                return Err(Error::Inapplicable(
                    "optimal face is unbounded; not enumerable".into(),
                ));
            }
            let mut multiplier_vertices = Vec::new();
            for v in &solution.face_vertices {
                let point = crate::model::CandidatePoint {
                    x: eval.point.x.clone(),
                    y: v.clone(),
                };
                let vertex_eval = crate::model::evaluate(instance, &point)?;
                let lam = multiplier_polytope(&vertex_eval)?;
                multiplier_vertices.push(lam.candidates());
            }
            Ok(SolutionFaceData {
                face_vertices: solution.face_vertices,
                multiplier_vertices,
            })
        }
        LowerLevel::UniqueStable { .. } => {
            let lam = multiplier_polytope(eval)?;
            Ok(SolutionFaceData {
                face_vertices: vec![eval.point.y.clone()],
                multiplier_vertices: vec![lam.candidates()],
            })
        }
        LowerLevel::VfOracle { .. } => Err(Error::Inapplicable(
            "solution face is not enumerable for the oracle class".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorollaryVariant {
    GeneralEstimate,
    ConvexInY,
    JointlyConvex,
}

impl CorollaryVariant {
    fn as_str(&self) -> &'static str {
        match self {
            CorollaryVariant::GeneralEstimate => "general-estimate",
            CorollaryVariant::ConvexInY => "convex-in-y",
            CorollaryVariant::JointlyConvex => "jointly-convex",
        }
    }
}

/// Certifier for the three estimate corollaries; evaluates the strongest
/// variant whose convexity hypothesis is available and reports the others
/// in the notes.
pub fn certify_vf_corollaries(
    instance: &BilevelInstance,
    eval: &PointEvaluation,
    face: &SolutionFaceData,
) -> Result<Certificate> {
    let assumptions = value_function_hypotheses(instance, eval)?;
    if let Some(block) = blocking_assumption(&assumptions) {
        let mut cert = Certificate::inapplicable(
            COND_VF_COROLLARY,
            &format!("hypothesis {} not available", block.name),
        );
        cert.assumptions = assumptions;
        return Ok(cert);
    }
    let z = eval.point.joint();
    let lower_obj = instance.lower_objective_poly();
    let lower_cons = instance.lower_constraint_polys();
    let all_vars: Vec<usize> = (0..eval.n + eval.m).collect();
    let y_vars: Vec<usize> = (eval.n..eval.n + eval.m).collect();
    let mut fam: Vec<&crate::poly::Polynomial> = vec![&lower_obj];
    fam.extend(lower_cons.iter());
    let jointly = convexity_in(&fam, &all_vars, &z);
    let in_y = convexity_in(&fam, &y_vars, &z);

    let variant = if jointly == Some(true) {
        CorollaryVariant::JointlyConvex
    } else if in_y == Some(true) {
        CorollaryVariant::ConvexInY
    } else {
        CorollaryVariant::GeneralEstimate
    };
    let mut cert = certify_corollary_variant(instance, eval, face, variant)?;
    cert.assumptions.extend(assumptions);
    cert.notes.push(format!(
        "lower level jointly convex: {jointly:?}; convex in y: {in_y:?}; variant {}",
        variant.as_str()
    ));
    Ok(cert)
}

/// Builds and checks the corollary system for a fixed variant.
pub fn certify_corollary_variant(
    instance: &BilevelInstance,
    eval: &PointEvaluation,
    face: &SolutionFaceData,
    variant: CorollaryVariant,
) -> Result<Certificate> {
    let n = eval.n;
    let m = eval.m;
    let grad_y_f = eval.grad_y(&eval.grad_lower).to_vec();
    let grad_x_f_bar = eval.grad_x(&eval.grad_lower).to_vec();

    // Estimate coefficients c_{v,w} ∈ R^n per face vertex v and multiplier
    // vertex w: (∇_x f(x̄, y_v) - ∇_x f(x̄, ȳ)) + ∇_x g(x̄, y_v)ᵀ w.
    let lower_obj = instance.lower_objective_poly();
    let lower_cons = instance.lower_constraint_polys();
    let coefficient_sets: Vec<Vec<Vector>> = match variant {
        CorollaryVariant::JointlyConvex => {
            let lam = multiplier_polytope(eval)?;
            let coeffs = lam
                .candidates()
                .iter()
                .map(|w| {
                    let mut c = zeros(n);
                    for (i, g) in lower_cons.iter().enumerate() {
                        let gx = g.gradient(&eval.point.joint());
                        for j in 0..n {
                            c[j] += &w[i] * &gx[j];
                        }
                    }
                    c
                })
                .collect::<Vec<_>>();
            vec![coeffs]
        }
        CorollaryVariant::ConvexInY | CorollaryVariant::GeneralEstimate => {
            let mut sets = Vec::new();
            for (v, ws) in face.face_vertices.iter().zip(&face.multiplier_vertices) {
                let mut zv = eval.point.x.clone();
                zv.extend(v.iter().cloned());
                let fx_v = lower_obj.gradient(&zv)[..n].to_vec();
                let mut coeffs = Vec::new();
                for w in ws {
                    let mut c = linalg::sub(&fx_v, &grad_x_f_bar);
                    for (i, g) in lower_cons.iter().enumerate() {
                        let gx = g.gradient(&zv);
                        for j in 0..n {
                            c[j] += &w[i] * &gx[j];
                        }
                    }
                    coeffs.push(c);
                }
                if coeffs.is_empty() {
                    return Err(Error::Inapplicable(
                        "a face vertex has no lower-level multiplier".into(),
                    ));
                }
                sets.push(coeffs);
            }
            sets
        }
    };

    // Row: ∇_y fᵀ δy - min over sets of max over coeffs of cᵀ δx ≤ 0,
    // expanded as: for every set, for some coeff, ∇_yfᵀδy - cᵀδx ≤ 0.
    // Branches are the choice functions across sets.
    let base = base_system_rows(eval);
    let mut choice = vec![0usize; coefficient_sets.len()];
    let mut branches = Vec::new();
    let mut failure: Option<Vector> = None;
    loop {
        let mut cone = PolyhedralCone::whole_space(n + m);
        for row in &base {
            cone.add_ineq(row.clone());
        }
        for (set, &pick) in coefficient_sets.iter().zip(&choice) {
            let c = &set[pick];
            let mut row = linalg::neg(c);
            row.extend(grad_y_f.iter().cloned());
            cone.add_ineq(row);
        }
        let triviality = crate::polyhedral::cone_is_trivial(&cone)?;
        let label = format!("choice-{choice:?}");
        if let Some(w) = triviality.witness() {
            if failure.is_none() {
                failure = Some(w.clone());
            }
        }
        branches.push(BranchRecord {
            label,
            trivial: triviality.is_trivial(),
            witness: triviality
                .witness()
                .map(|w| witness_from(w, None, !is_zero_vec(w))),
        });
        // Next choice function.
        let mut k = 0;
        loop {
            if k == choice.len() {
                break;
            }
            choice[k] += 1;
            if choice[k] < coefficient_sets[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
        if k == choice.len() {
            break;
        }
    }

    let verdict = if failure.is_none() {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    Ok(Certificate {
        condition: COND_VF_COROLLARY.into(),
        verdict,
        witness: failure.map(|w| witness_from(&w, None, !is_zero_vec(&w))),
        assumptions: vec![AssumptionRecord::with_note(
            "estimate_variant",
            AssumptionStatus::Verified,
            variant.as_str(),
        )],
        branches,
        notes: Vec::new(),
    })
}

/// Certifier over a locally single-valued, directionally differentiable
/// solution map: branch over the active sets of the parametric derivative
/// QP and require triviality of each branch's δx cone.
pub fn certify_implicit(instance: &BilevelInstance, eval: &PointEvaluation) -> Result<Certificate> {
    if instance.class != ProblemClass::UniqueStable {
        return Ok(Certificate::inapplicable(
            COND_IMPLICIT,
            "requires the strongly stable lower-level class",
        ));
    }
    let mut assumptions = Vec::new();
    if !check_llicq(eval) {
        return Ok(Certificate::inapplicable(
            COND_IMPLICIT,
            "LLICQ fails at the candidate",
        ));
    }
    assumptions.push(AssumptionRecord::new("llicq", AssumptionStatus::Verified));
    let multipliers = multiplier_polytope(eval)?;
    let Some(lam) = multipliers.unique().cloned() else {
        return Ok(Certificate::inapplicable(
            COND_IMPLICIT,
            "lower-level multiplier is not unique",
        ));
    };
    if !check_lsosc(eval, &multipliers)? {
        return Ok(Certificate::inapplicable(
            COND_IMPLICIT,
            "LSOSC fails at the candidate",
        ));
    }
    assumptions.push(AssumptionRecord::new("lsosc", AssumptionStatus::Verified));
    assumptions.push(AssumptionRecord::with_note(
        "lcrcq",
        AssumptionStatus::Verified,
        "implied by LLICQ",
    ));
    assumptions.push(AssumptionRecord::with_note(
        "lower_convex_in_y",
        assertion_status(instance.assertions.lower_convex_in_y),
        "single-valuedness of the solution map rests on the class guard",
    ));

    let n = eval.n;
    let mut branches = Vec::new();
    let mut failure: Option<(Vector, Vector)> = None;
    for branch in qp_branches(eval, &lam)? {
        let mut cone = PolyhedralCone::whole_space(n);
        for row in &branch.region_rows {
            cone.add_ineq(row.clone());
        }
        // ∇_x Fᵀ δx + ∇_y Fᵀ (T δx) ≤ 0 and the same for active G.
        let objective_rows: Vec<Vector> = std::iter::once(&eval.grad_upper)
            .chain(eval.active_upper.iter().map(|&i| &eval.grads_cons_upper[i]))
            .map(|g| {
                let gx = eval.grad_x(g);
                let gy = eval.grad_y(g);
                let mut row = gx.to_vec();
                for c in 0..n {
                    row[c] += dot(gy, &branch.map.col_vec(c));
                }
                row
            })
            .collect();
        for row in &objective_rows {
            cone.add_ineq(row.clone());
        }
        let triviality = crate::polyhedral::cone_is_trivial(&cone)?;
        let label = format!("active-set-{:?}", branch.forced);
        if let Some(dx) = triviality.witness() {
            if failure.is_none() {
                failure = Some((dx.clone(), branch.map.mul_vec(dx)));
            }
        }
        branches.push(BranchRecord {
            label,
            trivial: triviality.is_trivial(),
            witness: triviality
                .witness()
                .map(|dx| witness_from(dx, Some(&branch.map.mul_vec(dx)), true)),
        });
    }

    let witness = match &failure {
        Some((dx, dy)) => {
            // Independent re-substitution through the solution-map
            // derivative itself.
            let verified = match solution_map_dirderiv(eval, &lam, dx) {
                Ok(sprime) => {
                    let mut d = dx.clone();
                    d.extend(sprime.iter().cloned());
                    sprime == *dy
                        && dot(&eval.grad_upper, &d) <= int(0)
                        && eval
                            .active_upper
                            .iter()
                            .all(|&i| dot(&eval.grads_cons_upper[i], &d) <= int(0))
                        && !is_zero_vec(dx)
                }
                Err(_) => false,
            };
            let mut full = dx.clone();
            full.extend(dy.iter().cloned());
            Some(witness_from(&full, None, verified))
        }
        None => None,
    };
    Ok(Certificate {
        condition: COND_IMPLICIT.into(),
        verdict: if failure.is_none() {
            Verdict::Holds
        } else {
            Verdict::Fails
        },
        witness,
        assumptions,
        branches,
        notes: Vec::new(),
    })
}

/// Variational-analysis certifier for lower levels with affine,
/// parameter-free constraints: the stationarity system over
/// (δx, δy, λ, κ, μ) with branch-decomposed μ-complementarity must have no
/// solution with a nonzero (δx, δy) part.
pub fn certify_va(instance: &BilevelInstance, eval: &PointEvaluation) -> Result<Certificate> {
    if !instance.lower_constraints_affine_x_free() {
        return Ok(Certificate::inapplicable(
            COND_VA,
            "lower-level constraints must be affine in y and independent of x",
        ));
    }
    let mut assumptions = Vec::new();
    match check_soscms_affine(instance, eval) {
        Ok(true) => assumptions.push(AssumptionRecord::new("soscms", AssumptionStatus::Verified)),
        Ok(false) => {
            return Ok(Certificate::inapplicable(
                COND_VA,
                "SOSCMS fails at the candidate",
            ))
        }
        Err(e) => return Ok(Certificate::inapplicable(COND_VA, &e.to_string())),
    }
    let z = eval.point.joint();
    let lower_obj = instance.lower_objective_poly();
    let y_vars: Vec<usize> = (eval.n..eval.n + eval.m).collect();
    let f_convex_y = convexity_in(&[&lower_obj], &y_vars, &z);
    assumptions.push(AssumptionRecord::with_note(
        "lower_objective_convex_in_y",
        match f_convex_y {
            Some(true) => AssumptionStatus::Verified,
            Some(false) | None => assertion_status(instance.assertions.lower_convex_in_y),
        },
        "the stationarity inclusion itself needs only a lower-level CQ, automatic for affine g",
    ));

    let n = eval.n;
    let m = eval.m;
    let q = eval.cons_lower.len();
    // Variable layout: (δx, δy, λ, κ, μ).
    let dim = n + m + q + 1 + q;
    let dx0 = 0;
    let dy0 = n;
    let lam0 = n + m;
    let kap0 = n + m + q;
    let mu0 = n + m + q + 1;

    let mut base = Polyhedron::whole_space(dim);
    let embed = |offset: usize, v: &[Scalar]| {
        let mut row = zeros(dim);
        row[offset..offset + v.len()].clone_from_slice(v);
        row
    };
    // Nonascent rows for F and active G over (δx, δy).
    base.add_ineq(embed(dx0, &eval.grad_upper), int(0));
    for &i in &eval.active_upper {
        base.add_ineq(embed(dx0, &eval.grads_cons_upper[i]), int(0));
    }
    // Stationarity rows: ∇²_{yx}f δx + ∇²_{yy}f δy + κ ∇_yf + Σ μ_i ∇_y g_i = 0.
    let hess_f = &eval.hess_lower;
    let grad_y_f = eval.grad_y(&eval.grad_lower);
    for r in 0..m {
        let mut row = zeros(dim);
        for c in 0..n {
            row[dx0 + c] = hess_f.at(n + r, c).clone();
        }
        for c in 0..m {
            row[dy0 + c] = hess_f.at(n + r, n + c).clone();
        }
        row[kap0] = grad_y_f[r].clone();
        for i in 0..q {
            row[mu0 + i] = eval.grad_y(&eval.grads_cons_lower[i])[r].clone();
        }
        base.add_eq(row, int(0));
    }
    // Multiplier rows: ∇_y f + ∇_y gᵀ λ = 0 with λ ≥ 0 supported on Ī^g.
    for r in 0..m {
        let mut row = zeros(dim);
        for i in 0..q {
            row[lam0 + i] = eval.grad_y(&eval.grads_cons_lower[i])[r].clone();
        }
        base.add_eq(row, -grad_y_f[r].clone());
    }
    for i in 0..q {
        let mut row = zeros(dim);
        row[lam0 + i] = int(-1);
        base.add_ineq(row, int(0));
        let mut row = zeros(dim);
        row[mu0 + i] = int(-1);
        base.add_ineq(row, int(0));
        if !eval.is_active_lower(i) {
            let mut row = zeros(dim);
            row[lam0 + i] = int(1);
            base.add_eq(row, int(0));
            let mut row = zeros(dim);
            row[mu0 + i] = int(1);
            base.add_eq(row, int(0));
        }
    }
    // Critical-cone row: ∇_y fᵀ δy = 0.
    base.add_eq(embed(dy0, grad_y_f), int(0));

    // Complementarity pairs: μ_i ⊥ ∇_y g_iᵀ δy on the active set.
    let pairs: Vec<ComplementarityPair> = eval
        .active_lower
        .iter()
        .map(|&i| {
            let mut u = zeros(dim);
            u[mu0 + i] = int(1);
            let v = embed(dy0, eval.grad_y(&eval.grads_cons_lower[i]));
            ComplementarityPair {
                nonneg: u,
                nonpos: v,
            }
        })
        .collect();

    let coords: Vec<usize> = (0..n + m).collect();
    let mut branches = Vec::new();
    let mut failure: Option<Vector> = None;
    for (k, branch) in decompose_complementarity(&base, &pairs)
        .into_iter()
        .enumerate()
    {
        let triviality = polyhedron_trivial_in_projection(&branch, &coords)?;
        let label = format!("mu-branch-{k:0width$b}", width = pairs.len().max(1));
        record_branch(
            &mut branches,
            &mut failure,
            label,
            &triviality,
            &branch,
            n + m,
        );
    }
    finish_projection_certificate(COND_VA, assumptions, branches, failure, n, m)
}

fn record_branch(
    branches: &mut Vec<BranchRecord>,
    failure: &mut Option<Vector>,
    label: String,
    triviality: &ConeTriviality,
    region: &Polyhedron,
    head: usize,
) {
    let witness = triviality.witness().map(|w| {
        let verified = region.contains(w) && !is_zero_vec(&w[..head]);
        Witness {
            direction: render_vector(&w[..head]),
            auxiliary: Some(render_vector(&w[head..])),
            verified,
        }
    });
    if failure.is_none() {
        if let Some(w) = triviality.witness() {
            *failure = Some(w.clone());
        }
    }
    branches.push(BranchRecord {
        label,
        trivial: triviality.is_trivial(),
        witness,
    });
}

fn finish_projection_certificate(
    condition: &str,
    assumptions: Vec<AssumptionRecord>,
    branches: Vec<BranchRecord>,
    failure: Option<Vector>,
    n: usize,
    m: usize,
) -> Result<Certificate> {
    let witness = failure.map(|w| Witness {
        direction: render_vector(&w[..n + m]),
        auxiliary: Some(render_vector(&w[n + m..])),
        verified: !is_zero_vec(&w[..n + m]),
    });
    Ok(Certificate {
        condition: condition.into(),
        verdict: if witness.is_none() {
            Verdict::Holds
        } else {
            Verdict::Fails
        },
        witness,
        assumptions,
        branches,
        notes: Vec::new(),
    })
}

/// KKT-reformulation certifier: requires a unique lower-level multiplier
/// satisfying the strict Mangasarian-Fromovitz condition, then checks the
/// linearized complementarity system for directions with nonzero (δx, δy).
pub fn certify_kkt(instance: &BilevelInstance, eval: &PointEvaluation) -> Result<Certificate> {
    let multipliers = multiplier_polytope(eval)?;
    if multipliers.is_empty() {
        return Ok(Certificate::inapplicable(
            COND_KKT,
            "no lower-level Lagrange multiplier at the candidate",
        ));
    }
    let Some(lam) = multipliers.unique().cloned() else {
        return Ok(Certificate::inapplicable(
            COND_KKT,
            "lower-level multiplier is not unique; the KKT reformulation admits no strict minimizer",
        ));
    };
    let partition = IndexPartition::new(eval, &lam);
    if !check_smfc(eval, &partition)? {
        return Ok(Certificate::inapplicable(
            COND_KKT,
            "strict Mangasarian-Fromovitz condition fails at the multiplier",
        ));
    }
    let mut assumptions = vec![AssumptionRecord::new("smfc", AssumptionStatus::Verified)];
    let z = eval.point.joint();
    let lower_obj = instance.lower_objective_poly();
    let lower_cons = instance.lower_constraint_polys();
    let y_vars: Vec<usize> = (eval.n..eval.n + eval.m).collect();
    let mut fam: Vec<&crate::poly::Polynomial> = vec![&lower_obj];
    fam.extend(lower_cons.iter());
    let convex_y = convexity_in(&fam, &y_vars, &z);
    assumptions.push(AssumptionRecord::new(
        "lower_convex_in_y",
        match convex_y {
            Some(true) => AssumptionStatus::Verified,
            Some(false) => AssumptionStatus::Violated,
            None => assertion_status(instance.assertions.lower_convex_in_y),
        },
    ));
    assumptions.push(AssumptionRecord::with_note(
        "lower_cq_on_gph_k",
        if instance.lower_constraints_affine_x_free() {
            AssumptionStatus::Verified
        } else {
            assertion_status(instance.assertions.lmfcq_on_solution_set)
        },
        "automatic for affine constraints",
    ));

    let n = eval.n;
    let m = eval.m;
    let q = eval.cons_lower.len();
    let dim = n + m + q;
    let dl0 = n + m;
    let mut base = Polyhedron::whole_space(dim);
    let embed = |v: &[Scalar]| {
        let mut row = zeros(dim);
        row[..v.len()].clone_from_slice(v);
        row
    };
    base.add_ineq(embed(&eval.grad_upper), int(0));
    for &i in &eval.active_upper {
        base.add_ineq(embed(&eval.grads_cons_upper[i]), int(0));
    }
    // ∇²_{yx}L δx + ∇²_{yy}L δy + ∇_y gᵀ δλ = 0.
    let hess_l = crate::lower::lagrangian_hessian(eval, &lam);
    for r in 0..m {
        let mut row = zeros(dim);
        for c in 0..(n + m) {
            row[c] = hess_l.at(n + r, c).clone();
        }
        for i in 0..q {
            row[dl0 + i] = eval.grad_y(&eval.grads_cons_lower[i])[r].clone();
        }
        base.add_eq(row, int(0));
    }
    for &i in &partition.i_zero_minus {
        let mut row = zeros(dim);
        row[dl0 + i] = int(1);
        base.add_eq(row, int(0));
    }
    for &i in &partition.i_plus_zero {
        base.add_eq(embed(&eval.grads_cons_lower[i]), int(0));
    }
    let pairs: Vec<ComplementarityPair> = partition
        .i_zero_zero
        .iter()
        .map(|&i| {
            let mut u = zeros(dim);
            u[dl0 + i] = int(1);
            ComplementarityPair {
                nonneg: u,
                nonpos: embed(&eval.grads_cons_lower[i]),
            }
        })
        .collect();

    let coords: Vec<usize> = (0..n + m).collect();
    let mut branches = Vec::new();
    let mut failure: Option<Vector> = None;
    for (k, branch) in decompose_complementarity(&base, &pairs)
        .into_iter()
        .enumerate()
    {
        let triviality = polyhedron_trivial_in_projection(&branch, &coords)?;
        let label = format!(
            "complementarity-branch-{k:0width$b}",
            width = pairs.len().max(1)
        );
        record_branch(
            &mut branches,
            &mut failure,
            label,
            &triviality,
            &branch,
            n + m,
        );
    }
    finish_projection_certificate(COND_KKT, assumptions, branches, failure, n, m)
}

/// The unique multiplier and its index partition, for report quantities.
pub fn kkt_report_data(
    eval: &PointEvaluation,
) -> Result<Option<(Vector, IndexPartition, MultiplierPolytope)>> {
    let multipliers = multiplier_polytope(eval)?;
    match multipliers.unique().cloned() {
        Some(lam) => {
            let partition = IndexPartition::new(eval, &lam);
            Ok(Some((lam, partition, multipliers)))
        }
        None => Ok(None),
    }
}
