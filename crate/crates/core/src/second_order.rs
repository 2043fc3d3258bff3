//! Second-order sufficient-condition certifier on the value-function
//! reformulation: linearization and critical cones, the no-descent check,
//! the exact subproblem LP with a positivity scan over critical directions,
//! the dual Fritz-John route for smooth value functions, and the KKT-point
//! feasibility check.
//!
//! Positivity of the subproblem value for *every* nonzero critical
//! direction is not finitely reducible in general, so the certifier
//! combines exact checks at the frame rays of every cone piece with a
//! deterministic Halton scan of the piece interiors at a configurable
//! density and margin. Verdicts are sound by construction: `holds` needs
//! all exact ray values positive and all sampled normalized values at or
//! above the margin; `fails` always carries an exact rational witness.

use serde::{Deserialize, Serialize};

use crate::certificate::{render_vector, AssumptionRecord, AssumptionStatus, SoVerdict, Witness};
use crate::error::{Error, Result};
use crate::linalg::{self, dot, is_zero_vec, norm_sq, zeros, Matrix, Vector};
use crate::model::{BilevelInstance, PointEvaluation};
use crate::polyhedral::{
    basic_feasible_points, extreme_rays, lp_solve, LpOutcome, LpSense, PolyhedralCone, Polyhedron,
};
use crate::scalar::{self, int, rat, Scalar};
use crate::vf::{
    phi_second_dirderiv, phi_second_structure, DirValue, SecondOrderStructure, ValueFunctionModel,
    VfForm,
};

/// One polyhedral piece of the linearization or critical cone, tagged with
/// the φ' generator(s) active on it. The union of the pieces is the cone.
#[derive(Debug, Clone)]
pub struct ConePiece {
    pub label: String,
    pub cone: PolyhedralCone,
}

#[derive(Debug, Clone)]
pub struct ConePieces {
    pub pieces: Vec<ConePiece>,
}

impl ConePieces {
    pub fn contains(&self, d: &[Scalar]) -> bool {
        self.pieces.iter().any(|p| p.cone.contains(d))
    }
}

fn lift_x(n: usize, m: usize, row_x: &[Scalar]) -> Vector {
    let mut row = row_x.to_vec();
    row.extend(zeros(m));
    debug_assert_eq!(row.len(), n + m);
    row
}

fn cone_pieces(
    eval: &PointEvaluation,
    model: &ValueFunctionModel,
    with_objective_row: bool,
) -> ConePieces {
    let n = eval.n;
    let m = eval.m;
    let mut base: Vec<Vector> = Vec::new();
    if with_objective_row {
        base.push(eval.grad_upper.clone());
    }
    for &i in &eval.active_upper {
        base.push(eval.grads_cons_upper[i].clone());
    }
    for &i in &eval.active_lower {
        base.push(eval.grads_cons_lower[i].clone());
    }

    // φ' row expansion mirrors the first-order certifier: max-form unions,
    // min-form conjunctions, oracle pieces with their validity regions.
    struct Piece {
        slopes: Vec<Vector>,
        regions: Vec<Vector>,
        label: String,
    }
    let pieces: Vec<Piece> = match &model.form {
        VfForm::MaxAffine { gens } => gens
            .iter()
            .enumerate()
            .map(|(k, g)| Piece {
                slopes: vec![g.clone()],
                regions: Vec::new(),
                label: format!("generator-{k}"),
            })
            .collect(),
        VfForm::MinAffine { gens } => vec![Piece {
            slopes: gens.clone(),
            regions: Vec::new(),
            label: "all-generators".into(),
        }],
        VfForm::Smooth { grad, .. } => vec![Piece {
            slopes: vec![grad.clone()],
            regions: Vec::new(),
            label: "gradient".into(),
        }],
        VfForm::Oracle { pieces } => pieces
            .iter()
            .enumerate()
            .map(|(k, p)| Piece {
                slopes: vec![p.lin.clone()],
                regions: (0..p.region.rows()).map(|i| p.region.row_vec(i)).collect(),
                label: format!("oracle-piece-{k}"),
            })
            .collect(),
    };

    let mut out = Vec::new();
    for piece in pieces {
        let mut cone = PolyhedralCone::whole_space(n + m);
        for row in &base {
            cone.add_ineq(row.clone());
        }
        for slope in &piece.slopes {
            cone.add_ineq(linalg::sub(&eval.grad_lower, &lift_x(n, m, slope)));
        }
        for region in &piece.regions {
            cone.add_ineq(lift_x(n, m, region));
        }
        out.push(ConePiece {
            label: piece.label,
            cone,
        });
    }
    ConePieces { pieces: out }
}

/// Linearization cone of the value-function reformulation at the candidate.
pub fn build_linearization_cone(eval: &PointEvaluation, model: &ValueFunctionModel) -> ConePieces {
    cone_pieces(eval, model, false)
}

/// Critical cone: the linearization cone intersected with the nonascent
/// halfspace of the upper objective.
pub fn build_critical_cone(eval: &PointEvaluation, model: &ValueFunctionModel) -> ConePieces {
    cone_pieces(eval, model, true)
}

#[derive(Debug, Clone)]
pub struct NoDescent {
    pub ok: bool,
    pub witness: Option<Vector>,
}

/// Checks that the upper objective does not descend along the linearization
/// cone: per piece, the box-clipped minimum of ∇Fᵀd must be zero.
pub fn check_no_descent(eval: &PointEvaluation, lin: &ConePieces) -> Result<NoDescent> {
    for piece in &lin.pieces {
        let clipped = piece.cone.poly.clip_to_unit_box();
        match lp_solve(&eval.grad_upper, &clipped, LpSense::Min)? {
            LpOutcome::Optimal { value, point, .. } => {
                if value < int(0) {
                    return Ok(NoDescent {
                        ok: false,
                        witness: Some(point),
                    });
                }
            }
            _ => unreachable!("clipped cone LP is bounded and feasible"),
        }
    }
    Ok(NoDescent {
        ok: true,
        witness: None,
    })
}

/// Active-at-direction index sets for the subproblem rows.
fn tight_upper(eval: &PointEvaluation, d: &[Scalar]) -> Vec<usize> {
    eval.active_upper
        .iter()
        .copied()
        .filter(|&i| scalar::is_zero(&dot(&eval.grads_cons_upper[i], d)))
        .collect()
}

fn tight_lower(eval: &PointEvaluation, d: &[Scalar]) -> Vec<usize> {
    eval.active_lower
        .iter()
        .copied()
        .filter(|&i| scalar::is_zero(&dot(&eval.grads_cons_lower[i], d)))
        .collect()
}

/// Exact optimal value of the second-order subproblem at a critical
/// direction: the LP in (w, α) whose rows couple first-order slopes in w
/// with the curvature constants of d, the φ'' row expanded over the active
/// generator structure. Returns the exact rational value or -∞.
pub fn subproblem_value(
    eval: &PointEvaluation,
    model: &ValueFunctionModel,
    d: &[Scalar],
) -> Result<DirValue> {
    let n = eval.n;
    let m = eval.m;
    assert_eq!(d.len(), n + m, "direction dimension mismatch");
    let crit = build_critical_cone(eval, model);
    if !crit.contains(d) {
        return Err(Error::Inapplicable(
            "direction lies outside the critical cone".into(),
        ));
    }
    let delta_x = &d[..n];
    let structure = match phi_second_structure(model, eval, delta_x)? {
        SecondOrderStructure::UnboundedBelow => return Ok(DirValue::NegInf),
        SecondOrderStructure::Branches(branches) => branches,
    };

    // Shared rows: objective, tight upper constraints, tight lower
    // constraints. Variables (w, α); each row is coefᵀw - α ≤ -curvature.
    let mut shared: Vec<(Vector, Scalar)> = Vec::new();
    shared.push((eval.grad_upper.clone(), eval.hess_upper.quad_form(d)));
    for i in tight_upper(eval, d) {
        shared.push((
            eval.grads_cons_upper[i].clone(),
            eval.hess_cons_upper[i].quad_form(d),
        ));
    }
    let f_curvature = eval.hess_lower.quad_form(d);
    let tight_g = tight_lower(eval, d);

    let mut best: Option<Scalar> = None;
    for branch in &structure {
        let mut region = Polyhedron::whole_space(n + m + 1);
        let add_row = |region: &mut Polyhedron, coef: &[Scalar], curvature: &Scalar| {
            let mut row = coef.to_vec();
            row.push(int(-1));
            region.add_ineq(row, -curvature.clone());
        };
        for (coef, curv) in &shared {
            add_row(&mut region, coef, curv);
        }
        for (slope, constant) in &branch.rows {
            let coef = linalg::sub(&eval.grad_lower, &lift_x(n, m, slope));
            add_row(&mut region, &coef, &(f_curvature.clone() - constant));
        }
        for &i in &tight_g {
            add_row(
                &mut region,
                &eval.grads_cons_lower[i],
                &eval.hess_cons_lower[i].quad_form(d),
            );
        }
        let mut objective = zeros(n + m + 1);
        objective[n + m] = int(1);
        match lp_solve(&objective, &region, LpSense::Min)? {
            LpOutcome::Optimal { value, .. } => {
                best = Some(match best {
                    None => value,
                    Some(b) => b.min(value),
                });
            }
            LpOutcome::Unbounded { .. } => return Ok(DirValue::NegInf),
            LpOutcome::Infeasible { .. } => unreachable!("subproblem LP has w = 0 feasible"),
        }
    }
    Ok(DirValue::Finite(best.expect("at least one branch")))
}

/// Scan parameters: samples per cone piece and the positivity margin
/// applied to degree-two normalized values.
#[derive(Debug, Clone)]
pub struct ScanParams {
    pub density: usize,
    pub margin: Scalar,
}

impl Default for ScanParams {
    fn default() -> Self {
        ScanParams {
            density: 10_000,
            margin: rat(1, 1_000_000),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RayRecord {
    pub ray: Vec<String>,
    /// Exact subproblem value, or "-inf".
    pub value: String,
    pub positive: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FaceScanRecord {
    pub label: String,
    pub rays: Vec<RayRecord>,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampled_min_normalized: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin_met: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VfMultiplierCandidate {
    pub nu: Vec<String>,
    /// Hessian of the generalized Lagrangian at σ = 1 for this multiplier,
    /// excluding the value-function curvature correction (which is zero for
    /// affine value-function pieces and direction-dependent otherwise).
    pub hessian: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VfMultiplierReport {
    pub nonempty: bool,
    pub vertices: Vec<Vec<String>>,
    pub rays: Vec<Vec<String>>,
    pub candidates: Vec<VfMultiplierCandidate>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SoCertificate {
    pub condition: String,
    pub verdict: SoVerdict,
    pub assumptions: Vec<AssumptionRecord>,
    pub no_descent: bool,
    pub faces: Vec<FaceScanRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Witness>,
    pub density: usize,
    pub margin: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vf_multipliers: Option<VfMultiplierReport>,
    /// Verdict of the stronger σ = 1 condition along the scanned
    /// directions, when the dual route runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sosc_sigma_one: Option<SoVerdict>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

pub const COND_SO: &str = "so";
pub const COND_SO_DUAL: &str = "so-dual";

fn inapplicable_so(condition: &str, reason: &str) -> SoCertificate {
    SoCertificate {
        condition: condition.into(),
        verdict: SoVerdict::Inapplicable,
        assumptions: Vec::new(),
        no_descent: false,
        faces: Vec::new(),
        counterexample: None,
        density: 0,
        margin: "0".into(),
        vf_multipliers: None,
        sosc_sigma_one: None,
        notes: vec![reason.to_string()],
    }
}

/// Exact base-b radical inverse: the Halton low-discrepancy sequence as
/// rationals, so sampled directions are exact and runs are reproducible.
fn halton(mut index: u64, base: u64) -> Scalar {
    let mut num = int(0);
    let mut denom = int(1);
    let b = int(base as i64);
    while index > 0 {
        denom *= &b;
        num = num * &b + int((index % base) as i64);
        index /= base;
    }
    num / denom
}

const HALTON_BASES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn hypotheses_for_scan(
    instance: &BilevelInstance,
    eval: &PointEvaluation,
    model: &ValueFunctionModel,
) -> Result<Vec<AssumptionRecord>> {
    let mut records = Vec::new();
    let affine = instance
        .lower_constraint_polys()
        .iter()
        .all(|g| g.degree() <= 1);
    let acq = if affine {
        AssumptionRecord::with_note(
            "acq_lower_constraint_set",
            AssumptionStatus::Verified,
            "polyhedral constraint set",
        )
    } else if joint_mfcq(eval)? {
        AssumptionRecord::with_note(
            "acq_lower_constraint_set",
            AssumptionStatus::Verified,
            "MFCQ holds at the candidate and implies ACQ",
        )
    } else {
        let status = match instance.assertions.acq_lower_constraint_set {
            Some(true) => AssumptionStatus::Asserted,
            Some(false) => AssumptionStatus::AssertedFalse,
            None => AssumptionStatus::Unknown,
        };
        AssumptionRecord::new("acq_lower_constraint_set", status)
    };
    records.push(acq);
    records.push(AssumptionRecord::new(
        "neg_phi_epi_regular",
        model.epi_regular_neg_phi,
    ));
    Ok(records)
}

/// MFCQ of the joint lower-level constraint set `{(x, y) | g(x, y) ≤ 0}`
/// at the candidate: a direction with strictly negative products against
/// every active gradient.
fn joint_mfcq(eval: &PointEvaluation) -> Result<bool> {
    let rows: Vec<Vector> = eval
        .active_lower
        .iter()
        .map(|&i| eval.grads_cons_lower[i].clone())
        .collect();
    if rows.is_empty() {
        return Ok(true);
    }
    let dim = eval.n + eval.m;
    let region = Polyhedron::new(
        dim,
        Matrix::from_rows_with_width(rows.clone(), dim),
        vec![int(-1); rows.len()],
        Matrix::zero(0, dim),
        Vec::new(),
    );
    Ok(lp_solve(&zeros(dim), &region, LpSense::Min)?.is_feasible())
}

struct ScanOutcome {
    faces: Vec<FaceScanRecord>,
    counterexample: Option<(Vector, String)>,
    undetermined: bool,
}

/// Shared scan over the critical pieces; `value_at` supplies the exact
/// subproblem value for a direction (primal LP or dual LP).
fn scan_pieces<F>(crit: &ConePieces, params: &ScanParams, mut value_at: F) -> Result<ScanOutcome>
where
    F: FnMut(&[Scalar]) -> Result<DirValue>,
{
    let mut faces = Vec::new();
    let mut counterexample = None;
    let mut undetermined = false;
    for piece in &crit.pieces {
        let frame = extreme_rays(&piece.cone)?;
        if frame.is_empty() {
            faces.push(FaceScanRecord {
                label: format!("{} (trivial piece)", piece.label),
                rays: Vec::new(),
                samples: 0,
                sampled_min_normalized: None,
                margin_met: None,
            });
            continue;
        }
        let mut rays = Vec::new();
        for ray in &frame {
            let value = value_at(ray)?;
            let (text, positive) = match &value {
                DirValue::Finite(v) => (scalar::render(v), v > &int(0)),
                DirValue::NegInf => ("-inf".to_string(), false),
            };
            if !positive && counterexample.is_none() {
                counterexample = Some((ray.clone(), piece.label.clone()));
            }
            rays.push(RayRecord {
                ray: render_vector(ray),
                value: text,
                positive,
            });
        }
        // Interior sampling only matters when the piece has more than one
        // frame direction; a single ray is covered exactly by homogeneity.
        let mut sampled_min: Option<Scalar> = None;
        let mut samples = 0;
        let piece_dim = linalg::rank(&Matrix::from_rows(frame.clone()));
        if piece_dim >= 2 && counterexample.is_none() {
            for idx in 0..params.density {
                let weights: Vec<Scalar> = (0..frame.len())
                    .map(|j| {
                        let base = HALTON_BASES[j % HALTON_BASES.len()];
                        halton(idx as u64 + 1, base)
                    })
                    .collect();
                let mut dir = zeros(frame[0].len());
                for (w, r) in weights.iter().zip(&frame) {
                    dir = linalg::add(&dir, &linalg::scale(r, w));
                }
                if is_zero_vec(&dir) {
                    continue;
                }
                let dir = linalg::normalize_inf(&dir);
                samples += 1;
                let value = value_at(&dir)?;
                let normalized = match &value {
                    DirValue::Finite(v) => v / norm_sq(&dir),
                    DirValue::NegInf => {
                        counterexample = Some((dir.clone(), piece.label.clone()));
                        break;
                    }
                };
                if normalized <= int(0) {
                    counterexample = Some((dir.clone(), piece.label.clone()));
                    break;
                }
                sampled_min = Some(match sampled_min {
                    None => normalized,
                    Some(cur) => cur.min(normalized),
                });
            }
        }
        let margin_met = sampled_min.as_ref().map(|v| v >= &params.margin);
        if margin_met == Some(false) {
            undetermined = true;
        }
        faces.push(FaceScanRecord {
            label: piece.label.clone(),
            rays,
            samples,
            sampled_min_normalized: sampled_min.as_ref().map(scalar::to_f64),
            margin_met,
        });
        if counterexample.is_some() {
            break;
        }
    }
    Ok(ScanOutcome {
        faces,
        counterexample,
        undetermined,
    })
}

/// The second-order certifier: no-descent plus a positivity scan of the
/// subproblem value over the critical cone.
pub fn positivity_scan(
    instance: &BilevelInstance,
    eval: &PointEvaluation,
    model: &ValueFunctionModel,
    params: &ScanParams,
) -> Result<SoCertificate> {
    let assumptions = hypotheses_for_scan(instance, eval, model)?;
    if let Some(block) = assumptions.iter().find(|r| !r.status.permits()) {
        let mut cert =
            inapplicable_so(COND_SO, &format!("hypothesis {} not available", block.name));
        cert.assumptions = assumptions;
        return Ok(cert);
    }

    let lin = build_linearization_cone(eval, model);
    let descent = check_no_descent(eval, &lin)?;
    if !descent.ok {
        let witness = descent.witness.unwrap();
        let verified = lin.contains(&witness) && dot(&eval.grad_upper, &witness) < int(0);
        return Ok(SoCertificate {
            condition: COND_SO.into(),
            verdict: SoVerdict::Fails,
            assumptions,
            no_descent: false,
            faces: Vec::new(),
            counterexample: Some(Witness {
                direction: render_vector(&witness),
                auxiliary: None,
                verified,
            }),
            density: params.density,
            margin: scalar::render(&params.margin),
            vf_multipliers: None,
            sosc_sigma_one: None,
            notes: vec!["objective descends along the linearization cone".into()],
        });
    }

    let crit = build_critical_cone(eval, model);
    let outcome = scan_pieces(&crit, params, |d| subproblem_value(eval, model, d))?;
    let verdict = if outcome.counterexample.is_some() {
        SoVerdict::Fails
    } else if outcome.undetermined {
        SoVerdict::Undetermined
    } else {
        SoVerdict::Holds
    };
    let counterexample = outcome.counterexample.map(|(d, _)| {
        let nonpositive = match subproblem_value(eval, model, &d) {
            Ok(DirValue::Finite(v)) => v <= int(0),
            Ok(DirValue::NegInf) => true,
            Err(_) => false,
        };
        Witness {
            direction: render_vector(&d),
            auxiliary: None,
            verified: nonpositive && crit.contains(&d) && !is_zero_vec(&d),
        }
    });
    Ok(SoCertificate {
        condition: COND_SO.into(),
        verdict,
        assumptions,
        no_descent: true,
        faces: outcome.faces,
        counterexample,
        density: params.density,
        margin: scalar::render(&params.margin),
        vf_multipliers: None,
        sosc_sigma_one: None,
        notes: Vec::new(),
    })
}

/// The value-function curvature constant of a smooth model at δx:
/// φ''(x̄; δx, 0).
fn smooth_curvature(
    eval: &PointEvaluation,
    model: &ValueFunctionModel,
    delta_x: &[Scalar],
) -> Result<DirValue> {
    phi_second_dirderiv(model, eval, delta_x, &zeros(delta_x.len()))
}

/// Builds the σ = 1 multiplier polytope of the value-function
/// reformulation: ν = (ν^G, ν^vf, ν^g) ≥ 0 supported on the active sets
/// with ∇F + ∇Gᵀν^G + ν^vf (∇f - (∇φ, 0)) + ∇gᵀν^g = 0.
fn lagrange_multiplier_region(
    eval: &PointEvaluation,
    grad_phi: &[Scalar],
    tight_upper_idx: &[usize],
    tight_lower_idx: &[usize],
) -> Polyhedron {
    let n = eval.n;
    let m = eval.m;
    let p = eval.cons_upper.len();
    let q = eval.cons_lower.len();
    let dim = p + 1 + q;
    let f_col = linalg::sub(&eval.grad_lower, &lift_x(n, m, grad_phi));
    let mut region = Polyhedron::whole_space(dim);
    for r in 0..(n + m) {
        let mut row = zeros(dim);
        for i in 0..p {
            row[i] = eval.grads_cons_upper[i][r].clone();
        }
        row[p] = f_col[r].clone();
        for i in 0..q {
            row[p + 1 + i] = eval.grads_cons_lower[i][r].clone();
        }
        region.add_eq(row, -eval.grad_upper[r].clone());
    }
    for j in 0..dim {
        let mut row = zeros(dim);
        row[j] = int(-1);
        region.add_ineq(row, int(0));
    }
    for i in 0..p {
        if !tight_upper_idx.contains(&i) {
            let mut row = zeros(dim);
            row[i] = int(1);
            region.add_eq(row, int(0));
        }
    }
    for i in 0..q {
        if !tight_lower_idx.contains(&i) {
            let mut row = zeros(dim);
            row[p + 1 + i] = int(1);
            region.add_eq(row, int(0));
        }
    }
    region
}

/// Quadratic-form coefficients of the dual objective at direction d: the
/// constant σ-part and the per-multiplier coefficients.
fn dual_objective(eval: &PointEvaluation, d: &[Scalar], vf_curvature: &Scalar) -> (Scalar, Vector) {
    let p = eval.cons_upper.len();
    let q = eval.cons_lower.len();
    let sigma_part = eval.hess_upper.quad_form(d);
    let mut coefs = zeros(p + 1 + q);
    for i in 0..p {
        coefs[i] = eval.hess_cons_upper[i].quad_form(d);
    }
    coefs[p] = eval.hess_lower.quad_form(d) - vf_curvature;
    for i in 0..q {
        coefs[p + 1 + i] = eval.hess_cons_lower[i].quad_form(d);
    }
    (sigma_part, coefs)
}

/// Dual-route certifier for smooth value-function models: per scanned
/// direction, the Fritz-John dual LP value must be positive; additionally
/// reports whether the stronger σ = 1 condition holds.
pub fn dual_sosc(
    instance: &BilevelInstance,
    eval: &PointEvaluation,
    model: &ValueFunctionModel,
    params: &ScanParams,
) -> Result<SoCertificate> {
    let Some(grad_phi) = model.smooth_gradient().cloned() else {
        return Ok(inapplicable_so(
            COND_SO_DUAL,
            "value function is nonsmooth at the candidate; dual route needs a single gradient",
        ));
    };
    let assumptions = hypotheses_for_scan(instance, eval, model)?;
    if let Some(block) = assumptions.iter().find(|r| !r.status.permits()) {
        let mut cert = inapplicable_so(
            COND_SO_DUAL,
            &format!("hypothesis {} not available", block.name),
        );
        cert.assumptions = assumptions;
        return Ok(cert);
    }
    let lin = build_linearization_cone(eval, model);
    let descent = check_no_descent(eval, &lin)?;
    if !descent.ok {
        let mut cert = inapplicable_so(
            COND_SO_DUAL,
            "no-descent condition fails; the point is not even first-order stationary",
        );
        cert.assumptions = assumptions;
        cert.verdict = SoVerdict::Fails;
        cert.counterexample = descent.witness.map(|w| Witness {
            direction: render_vector(&w),
            auxiliary: None,
            verified: true,
        });
        return Ok(cert);
    }

    // Λ^vf at the candidate (full active sets: d = 0).
    let p = eval.cons_upper.len();
    let q = eval.cons_lower.len();
    let lam_region =
        lagrange_multiplier_region(eval, &grad_phi, &eval.active_upper, &eval.active_lower);
    let lam_vertices = basic_feasible_points(&lam_region)?;
    let lam_rays = if lam_vertices.is_empty() {
        Vec::new()
    } else {
        extreme_rays(&PolyhedralCone::new(
            lam_region.dim,
            lam_region.a.clone(),
            lam_region.e.clone(),
        ))?
    };
    let mut candidates = lam_vertices.clone();
    for v in &lam_vertices {
        for r in &lam_rays {
            let pushed = linalg::add(v, r);
            if !candidates.contains(&pushed) {
                candidates.push(pushed);
            }
        }
    }
    let hessian_of = |nu: &[Scalar]| -> Matrix {
        let dim = eval.n + eval.m;
        let mut h = eval.hess_upper.clone();
        for i in 0..p {
            for r in 0..dim {
                for c in 0..dim {
                    let v = h.at(r, c) + &nu[i] * eval.hess_cons_upper[i].at(r, c);
                    *h.at_mut(r, c) = v;
                }
            }
        }
        for r in 0..dim {
            for c in 0..dim {
                let v = h.at(r, c) + &nu[p] * eval.hess_lower.at(r, c);
                *h.at_mut(r, c) = v;
            }
        }
        for i in 0..q {
            for r in 0..dim {
                for c in 0..dim {
                    let v = h.at(r, c) + &nu[p + 1 + i] * eval.hess_cons_lower[i].at(r, c);
                    *h.at_mut(r, c) = v;
                }
            }
        }
        h
    };
    let vf_report = VfMultiplierReport {
        nonempty: !lam_vertices.is_empty(),
        vertices: lam_vertices.iter().map(|v| render_vector(v)).collect(),
        rays: lam_rays.iter().map(|v| render_vector(v)).collect(),
        candidates: candidates
            .iter()
            .map(|nu| {
                let h = hessian_of(nu);
                VfMultiplierCandidate {
                    nu: render_vector(nu),
                    hessian: (0..h.rows()).map(|r| render_vector(h.row(r))).collect(),
                }
            })
            .collect(),
    };

    // Per-direction dual LP over the normalized Fritz-John polytope.
    let crit = build_critical_cone(eval, model);
    let mut sigma_one_ok = Some(true);
    let mut sigma_one_applicable = !lam_vertices.is_empty();
    let mut dual_value = |d: &[Scalar]| -> Result<DirValue> {
        let delta_x = &d[..eval.n];
        let vf_curv = match smooth_curvature(eval, model, delta_x)? {
            DirValue::Finite(v) => v,
            DirValue::NegInf => return Ok(DirValue::NegInf),
        };
        let tu = tight_upper(eval, d);
        let tl = tight_lower(eval, d);
        // Fritz-John region over (σ, ν): gradient rows, supports, σ + Σν = 1.
        let dim = 1 + p + 1 + q;
        let f_col = linalg::sub(&eval.grad_lower, &lift_x(eval.n, eval.m, &grad_phi));
        let mut region = Polyhedron::whole_space(dim);
        for r in 0..(eval.n + eval.m) {
            let mut row = zeros(dim);
            row[0] = eval.grad_upper[r].clone();
            for i in 0..p {
                row[1 + i] = eval.grads_cons_upper[i][r].clone();
            }
            row[1 + p] = f_col[r].clone();
            for i in 0..q {
                row[1 + p + 1 + i] = eval.grads_cons_lower[i][r].clone();
            }
            region.add_eq(row, int(0));
        }
        for j in 0..dim {
            let mut row = zeros(dim);
            row[j] = int(-1);
            region.add_ineq(row, int(0));
        }
        for i in 0..p {
            if !tu.contains(&i) {
                let mut row = zeros(dim);
                row[1 + i] = int(1);
                region.add_eq(row, int(0));
            }
        }
        for i in 0..q {
            if !tl.contains(&i) {
                let mut row = zeros(dim);
                row[1 + p + 1 + i] = int(1);
                region.add_eq(row, int(0));
            }
        }
        region.add_eq(vec![int(1); dim], int(1));
        let (sigma_part, nu_coefs) = dual_objective(eval, d, &vf_curv);
        let mut objective = vec![sigma_part.clone()];
        objective.extend(nu_coefs.iter().cloned());
        let value = match lp_solve(&objective, &region, LpSense::Max)? {
            LpOutcome::Optimal { value, .. } => DirValue::Finite(value),
            LpOutcome::Infeasible { .. } => DirValue::NegInf,
            LpOutcome::Unbounded { .. } => {
                unreachable!("normalized Fritz-John polytope is bounded")
            }
        };
        // The σ = 1 route: max dᵀ∇²L^vf(1, ν) d over Λ^vf at the full
        // active sets, positive or unbounded means success.
        if sigma_one_applicable {
            match lp_solve(&nu_coefs, &lam_region, LpSense::Max)? {
                LpOutcome::Optimal { value, .. } => {
                    if value + &sigma_part <= int(0) {
                        sigma_one_ok = Some(false);
                    }
                }
                LpOutcome::Unbounded { .. } => {}
                LpOutcome::Infeasible { .. } => {
                    sigma_one_applicable = false;
                }
            }
        }
        Ok(value)
    };

    let outcome = scan_pieces(&crit, params, &mut dual_value)?;
    let verdict = if outcome.counterexample.is_some() {
        SoVerdict::Fails
    } else if outcome.undetermined {
        SoVerdict::Undetermined
    } else {
        SoVerdict::Holds
    };
    let sigma_one = if !sigma_one_applicable {
        SoVerdict::Inapplicable
    } else if sigma_one_ok == Some(true) {
        if outcome.undetermined {
            SoVerdict::Undetermined
        } else {
            SoVerdict::Holds
        }
    } else {
        SoVerdict::Fails
    };
    Ok(SoCertificate {
        condition: COND_SO_DUAL.into(),
        verdict,
        assumptions,
        no_descent: true,
        faces: outcome.faces,
        counterexample: outcome.counterexample.map(|(d, _)| Witness {
            direction: render_vector(&d),
            auxiliary: None,
            verified: true,
        }),
        density: params.density,
        margin: scalar::render(&params.margin),
        vf_multipliers: Some(vf_report),
        sosc_sigma_one: Some(sigma_one),
        notes: vec![
            "candidate hessians exclude the value-function curvature correction; it vanishes \
             identically for affine value-function pieces"
                .into(),
        ],
    })
}

/// Outcome of the KKT-point feasibility check of the value-function
/// reformulation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KktPointOutcome {
    pub is_kkt: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multipliers: Option<KktMultipliers>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separating_direction: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KktMultipliers {
    pub upper: Vec<String>,
    pub vf: String,
    pub lower: Vec<String>,
    /// Convex weights placing ν^vf · ξ inside ν^vf · ∂cφ(x̄).
    pub subdifferential_weights: Vec<String>,
}

/// Decides whether the candidate is a KKT point of the value-function
/// reformulation. The subdifferential inclusion is handled exactly by
/// scaling the polytope generators: ζ = ν^vf ξ = Σ θ_j v_j with θ ≥ 0 and
/// Σ θ_j = ν^vf.
pub fn kkt_point_check(
    eval: &PointEvaluation,
    model: &ValueFunctionModel,
) -> Result<KktPointOutcome> {
    let n = eval.n;
    let m = eval.m;
    let p = eval.cons_upper.len();
    let q = eval.cons_lower.len();
    let gens = &model.subdifferential;
    let k = gens.len();
    let dim = p + 1 + q + k;
    let mut region = Polyhedron::whole_space(dim);
    // x-block rows: ∇_xF + ∇_xGᵀν^G + ν^vf ∇_xf + ∇_xgᵀν^g - Σ θ_j v_j = 0.
    for r in 0..n {
        let mut row = zeros(dim);
        for i in 0..p {
            row[i] = eval.grads_cons_upper[i][r].clone();
        }
        row[p] = eval.grad_lower[r].clone();
        for i in 0..q {
            row[p + 1 + i] = eval.grads_cons_lower[i][r].clone();
        }
        for j in 0..k {
            row[p + 1 + q + j] = -gens[j][r].clone();
        }
        region.add_eq(row, -eval.grad_upper[r].clone());
    }
    // y-block rows carry no subdifferential part.
    for r in 0..m {
        let mut row = zeros(dim);
        for i in 0..p {
            row[i] = eval.grads_cons_upper[i][n + r].clone();
        }
        row[p] = eval.grad_lower[n + r].clone();
        for i in 0..q {
            row[p + 1 + i] = eval.grads_cons_lower[i][n + r].clone();
        }
        region.add_eq(row, -eval.grad_upper[n + r].clone());
    }
    // Σ θ_j = ν^vf ties the scaled subdifferential together.
    {
        let mut row = zeros(dim);
        row[p] = int(-1);
        for j in 0..k {
            row[p + 1 + q + j] = int(1);
        }
        region.add_eq(row, int(0));
    }
    for j in 0..dim {
        let mut row = zeros(dim);
        row[j] = int(-1);
        region.add_ineq(row, int(0));
    }
    for i in 0..p {
        if !eval.active_upper.contains(&i) {
            let mut row = zeros(dim);
            row[i] = int(1);
            region.add_eq(row, int(0));
        }
    }
    for i in 0..q {
        if !eval.is_active_lower(i) {
            let mut row = zeros(dim);
            row[p + 1 + i] = int(1);
            region.add_eq(row, int(0));
        }
    }
    match lp_solve(&zeros(dim), &region, LpSense::Min)? {
        LpOutcome::Optimal { point, .. } => Ok(KktPointOutcome {
            is_kkt: true,
            multipliers: Some(KktMultipliers {
                upper: render_vector(&point[..p]),
                vf: scalar::render(&point[p]),
                lower: render_vector(&point[p + 1..p + 1 + q]),
                subdifferential_weights: render_vector(&point[p + 1 + q..]),
            }),
            separating_direction: None,
        }),
        LpOutcome::Infeasible { farkas_eq, .. } => {
            // The equality-row multipliers restricted to the gradient rows
            // give (negated) a direction that separates the KKT system.
            let separating: Vector = farkas_eq[..n + m].iter().map(|v| -v).collect();
            Ok(KktPointOutcome {
                is_kkt: false,
                multipliers: None,
                separating_direction: Some(render_vector(&separating)),
            })
        }
        LpOutcome::Unbounded { .. } => unreachable!("feasibility LP with zero objective"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::evaluate;
    use crate::scalar::rat;
    use crate::testkit;
    use crate::vf::build_vf_model;

    fn setup(instance: &BilevelInstance) -> (PointEvaluation, ValueFunctionModel) {
        let eval = evaluate(instance, &instance.candidate.clone()).unwrap();
        let model = build_vf_model(instance, &eval).unwrap();
        (eval, model)
    }

    fn ints(v: &[i64]) -> Vector {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn example_5_8_cones() {
        let instance = testkit::ex58();
        let (eval, model) = setup(&instance);
        let lin = build_linearization_cone(&eval, &model);
        // L = R^2_+ as a single min-form piece.
        assert_eq!(lin.pieces.len(), 1);
        assert!(lin.contains(&ints(&[1, 0])));
        assert!(lin.contains(&ints(&[0, 1])));
        assert!(lin.contains(&ints(&[2, 3])));
        assert!(!lin.contains(&ints(&[-1, 0])));
        assert!(!lin.contains(&ints(&[0, -1])));
        // C = {0} x R_+.
        let crit = build_critical_cone(&eval, &model);
        assert!(crit.contains(&ints(&[0, 1])));
        assert!(!crit.contains(&ints(&[1, 1])));
        assert!(!crit.contains(&ints(&[0, -1])));
        assert!(check_no_descent(&eval, &lin).unwrap().ok);
    }

    #[test]
    fn example_5_10_cones_and_descent() {
        let instance = testkit::ex510();
        let (eval, model) = setup(&instance);
        let lin = build_linearization_cone(&eval, &model);
        assert!(lin.contains(&ints(&[6, 1])));
        assert!(lin.contains(&ints(&[1, 0])));
        assert!(!lin.contains(&ints(&[-6, 0])));
        assert!(check_no_descent(&eval, &lin).unwrap().ok);
        let crit = build_critical_cone(&eval, &model);
        assert!(crit.contains(&ints(&[6, 1])));
        assert!(crit.contains(&ints(&[-6, -1])));
        assert!(!crit.contains(&ints(&[1, 0])));
    }

    #[test]
    fn zero_data_gives_full_space() {
        let mut instance = testkit::ex58();
        instance.upper_objective = crate::poly::Polynomial::zero(2);
        let (eval, model) = setup(&instance);
        let crit = build_critical_cone(&eval, &model);
        // Only the lower-level rows restrict; the F row is vacuous.
        assert!(crit.contains(&ints(&[1, 1])));
        assert!(crit.contains(&ints(&[1, 0])));
    }

    #[test]
    fn subproblem_example_5_8_quarter() {
        let instance = testkit::ex58();
        let (eval, model) = setup(&instance);
        let v = subproblem_value(&eval, &model, &ints(&[0, 1])).unwrap();
        assert_eq!(v, DirValue::Finite(rat(1, 4)));
        // Degree-2 homogeneity.
        let v2 = subproblem_value(&eval, &model, &ints(&[0, 2])).unwrap();
        assert_eq!(v2, DirValue::Finite(int(1)));
        let half = subproblem_value(&eval, &model, &vec![int(0), rat(1, 2)]).unwrap();
        assert_eq!(half, DirValue::Finite(rat(1, 16)));
        // d = 0 gives value 0.
        assert_eq!(
            subproblem_value(&eval, &model, &ints(&[0, 0])).unwrap(),
            DirValue::Finite(int(0))
        );
        // Directions outside the critical cone are rejected.
        assert!(subproblem_value(&eval, &model, &ints(&[1, 0])).is_err());
    }

    #[test]
    fn subproblem_example_5_10_ray_values() {
        let instance = testkit::ex510();
        let (eval, model) = setup(&instance);
        let plus = subproblem_value(&eval, &model, &ints(&[6, 1])).unwrap();
        assert_eq!(plus, DirValue::Finite(int(26)));
        let minus = subproblem_value(&eval, &model, &ints(&[-6, -1])).unwrap();
        assert_eq!(minus, DirValue::Finite(int(26)));
        // Documented bounds: ≥ δx²/18 on the plus side, ≥ 13 δx²/18 on the minus
        // side, with equality on the minus side.
        assert!(int(26) >= rat(36, 18));
        assert_eq!(int(26), rat(13 * 36, 18));
    }

    #[test]
    fn positivity_scan_example_5_8_holds() {
        let instance = testkit::ex58();
        let (eval, model) = setup(&instance);
        let cert = positivity_scan(&instance, &eval, &model, &ScanParams::default()).unwrap();
        assert_eq!(cert.verdict, SoVerdict::Holds);
        assert!(cert.no_descent);
        // Single ray (0, 1) with exact value 1/4.
        let rays: Vec<&RayRecord> = cert.faces.iter().flat_map(|f| f.rays.iter()).collect();
        assert_eq!(rays.len(), 1);
        assert_eq!(rays[0].value, "1/4");
    }

    #[test]
    fn positivity_scan_example_5_10_holds() {
        let instance = testkit::ex510();
        let (eval, model) = setup(&instance);
        let cert = positivity_scan(&instance, &eval, &model, &ScanParams::default()).unwrap();
        assert_eq!(cert.verdict, SoVerdict::Holds);
        let rays: Vec<&RayRecord> = cert.faces.iter().flat_map(|f| f.rays.iter()).collect();
        assert_eq!(rays.len(), 2);
        for r in rays {
            assert_eq!(r.value, "13/18");
        }
    }

    #[test]
    fn positivity_scan_flat_objective_fails() {
        let mut instance = testkit::ex58();
        instance.upper_objective = crate::poly::Polynomial::zero(2);
        let (eval, model) = setup(&instance);
        let cert = positivity_scan(&instance, &eval, &model, &ScanParams::default()).unwrap();
        assert_eq!(cert.verdict, SoVerdict::Fails);
        let w = cert.counterexample.expect("witness");
        assert!(w.verified);
    }

    #[test]
    fn dual_sosc_example_5_2() {
        let instance = testkit::ex52();
        let (eval, model) = setup(&instance);
        let cert = dual_sosc(&instance, &eval, &model, &ScanParams::default()).unwrap();
        assert_eq!(cert.verdict, SoVerdict::Holds);
        assert_eq!(cert.sosc_sigma_one, Some(SoVerdict::Holds));
        let report = cert.vf_multipliers.expect("multiplier report");
        assert!(report.nonempty);
        // The pushed candidate (1, 0, 1) carries the Hessian [[1,1],[1,1]].
        let target = report
            .candidates
            .iter()
            .find(|c| c.nu == vec!["1", "0", "1"])
            .expect("candidate (1,0,1)");
        assert_eq!(target.hessian, vec![vec!["1", "1"], vec!["1", "1"]]);
        // Critical cone is the δx axis.
        let crit = build_critical_cone(&eval, &model);
        assert!(crit.contains(&ints(&[1, 0])));
        assert!(crit.contains(&ints(&[-1, 0])));
        assert!(!crit.contains(&ints(&[0, 1])));
    }

    #[test]
    fn dual_sosc_agrees_with_primal_scan_on_5_10() {
        let instance = testkit::ex510();
        let (eval, model) = setup(&instance);
        let primal = positivity_scan(&instance, &eval, &model, &ScanParams::default()).unwrap();
        let dual = dual_sosc(&instance, &eval, &model, &ScanParams::default()).unwrap();
        assert_eq!(primal.verdict, dual.verdict);
        // Strong duality: identical exact ray values along the scan.
        let pv: Vec<String> = primal
            .faces
            .iter()
            .flat_map(|f| f.rays.iter().map(|r| r.value.clone()))
            .collect();
        let dv: Vec<String> = dual
            .faces
            .iter()
            .flat_map(|f| f.rays.iter().map(|r| r.value.clone()))
            .collect();
        assert_eq!(pv, dv);
    }

    #[test]
    fn dual_sosc_rejects_nonsmooth_models() {
        let instance = testkit::ex58();
        let (eval, model) = setup(&instance);
        let cert = dual_sosc(&instance, &eval, &model, &ScanParams::default()).unwrap();
        assert_eq!(cert.verdict, SoVerdict::Inapplicable);
    }

    #[test]
    fn kkt_point_examples() {
        // Example 5.2: KKT point with ν^vf = 1, ν^g = (0, 1) among solutions.
        let instance = testkit::ex52();
        let (eval, model) = setup(&instance);
        let out = kkt_point_check(&eval, &model).unwrap();
        assert!(out.is_kkt);
        // Example 5.8: no-descent holds and the KKT system is solvable.
        let instance = testkit::ex58();
        let (eval, model) = setup(&instance);
        let out = kkt_point_check(&eval, &model).unwrap();
        assert!(out.is_kkt);
        let lin = build_linearization_cone(&eval, &model);
        assert!(check_no_descent(&eval, &lin).unwrap().ok);
        // Gradient pushed outside the polar: not a KKT point, and the
        // separating direction certifies it.
        let mut tilted = testkit::ex58();
        let mut f = crate::poly::Polynomial::zero(2);
        f.push_term(int(-1), vec![1, 0]); // F = -x: descends along δx > 0
        tilted.upper_objective = f;
        let (eval, model) = setup(&tilted);
        let out = kkt_point_check(&eval, &model).unwrap();
        assert!(!out.is_kkt);
        let dir: Vector = out
            .separating_direction
            .unwrap()
            .iter()
            .map(|s| crate::scalar::parse(s).unwrap())
            .collect();
        assert!(dot(&eval.grad_upper, &dir) < int(0));
    }

    #[test]
    fn prop_5_6_consistency_no_descent_iff_kkt() {
        for instance in [
            testkit::ex33(),
            testkit::ex38(),
            testkit::ex52(),
            testkit::ex58(),
            testkit::ex510(),
            testkit::ex_acq(),
        ] {
            let eval = evaluate(&instance, &instance.candidate.clone()).unwrap();
            let model = build_vf_model(&instance, &eval).unwrap();
            let lin = build_linearization_cone(&eval, &model);
            let nd = check_no_descent(&eval, &lin).unwrap().ok;
            let kkt = kkt_point_check(&eval, &model).unwrap().is_kkt;
            assert_eq!(nd, kkt, "instance {}", instance.name);
        }
    }

    #[test]
    fn halton_is_exact_and_deterministic() {
        assert_eq!(halton(1, 2), rat(1, 2));
        assert_eq!(halton(2, 2), rat(1, 4));
        assert_eq!(halton(3, 2), rat(3, 4));
        assert_eq!(halton(1, 3), rat(1, 3));
        assert_eq!(halton(5, 3), rat(7, 9));
    }
}
