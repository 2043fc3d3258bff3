//! Brute-force growth oracle: independent, exact validation of the growth
//! conditions the certificates license.
//!
//! The oracle grids the parameter within a radius of the candidate, solves
//! the lower level at each node (exact LP for the linear classes, Sturm
//! isolation plus interval refinement for one-dimensional polynomial lower
//! levels), and compares the upper objective against the required growth on
//! every feasible pair inside the ball. Confirmation carries the best
//! growth constant; refutation carries an explicit feasible witness below
//! the candidate value.

use serde::{Deserialize, Serialize};

use strictmin::error::Result;
use strictmin::linalg::Vector;
use strictmin::lower::lower_solve;
use strictmin::model::{BilevelInstance, CandidatePoint, LowerLevel, PointEvaluation};
use strictmin::poly::Polynomial;
use strictmin::scalar::{self, int, Scalar};

use crate::sturm::{isolate_roots, AlgebraicRoot, UniPoly};

#[derive(Debug, Clone)]
pub struct OracleParams {
    pub radius: Scalar,
    pub step: Scalar,
    pub order: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
pub enum OracleOutcome {
    Confirmed {
        /// Best growth constant over the grid: exact square, float value.
        constant_squared: String,
        constant: f64,
    },
    Refuted {
        witness_x: Vec<String>,
        witness_y_lo: Vec<String>,
        witness_y_hi: Vec<String>,
    },
    Inconclusive {
        reason: String,
    },
    Inapplicable {
        reason: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridPhi {
    pub x: Vec<String>,
    /// Exact rational value for the linear classes; decimal approximation
    /// otherwise.
    pub phi: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleReport {
    pub order: u32,
    pub radius: String,
    pub step: String,
    pub pairs_checked: usize,
    pub grid_phi: Vec<GridPhi>,
    pub outcome: OracleOutcome,
}

impl OracleReport {
    pub fn confirmed(&self) -> bool {
        matches!(self.outcome, OracleOutcome::Confirmed { .. })
    }

    pub fn refuted(&self) -> bool {
        matches!(self.outcome, OracleOutcome::Refuted { .. })
    }
}

const MAX_REFINE: usize = 200;

struct GrowthTracker {
    order: u32,
    radius_sq: Scalar,
    best_ratio_sq: Option<Scalar>,
    zero_gap: bool,
    pairs: usize,
}

impl GrowthTracker {
    /// Exact pair: returns a refutation outcome when the pair lies below
    /// the candidate value.
    fn observe_exact(
        &mut self,
        x: &[Scalar],
        y: &[Scalar],
        gap: &Scalar,
        dist_sq: &Scalar,
    ) -> Option<OracleOutcome> {
        if dist_sq > &self.radius_sq || scalar::is_zero(dist_sq) {
            return None;
        }
        self.pairs += 1;
        if gap < &int(0) {
            return Some(OracleOutcome::Refuted {
                witness_x: x.iter().map(scalar::render).collect(),
                witness_y_lo: y.iter().map(scalar::render).collect(),
                witness_y_hi: y.iter().map(scalar::render).collect(),
            });
        }
        if scalar::is_zero(gap) {
            self.zero_gap = true;
            return None;
        }
        let ratio_sq = gap * gap / pow(dist_sq, self.order);
        self.best_ratio_sq = Some(match self.best_ratio_sq.take() {
            None => ratio_sq,
            Some(cur) => cur.min(ratio_sq),
        });
        None
    }

    fn finish(self, grid_phi: Vec<GridPhi>, params: &OracleParams) -> OracleReport {
        let outcome = if self.zero_gap {
            OracleOutcome::Inconclusive {
                reason: "a distinct feasible pair attains the candidate objective value".into(),
            }
        } else {
            match self.best_ratio_sq {
                Some(r) => OracleOutcome::Confirmed {
                    constant: scalar::to_f64(&r).sqrt(),
                    constant_squared: scalar::render(&r),
                },
                None => OracleOutcome::Inconclusive {
                    reason: "no feasible pair distinct from the candidate inside the ball".into(),
                },
            }
        };
        OracleReport {
            order: params.order,
            radius: scalar::render(&params.radius),
            step: scalar::render(&params.step),
            pairs_checked: self.pairs,
            grid_phi,
            outcome,
        }
    }
}

fn pow(v: &Scalar, e: u32) -> Scalar {
    let mut acc = int(1);
    for _ in 0..e {
        acc *= v;
    }
    acc
}

fn dist_sq(x: &[Scalar], y: &[Scalar], cand: &CandidatePoint) -> Scalar {
    let mut acc = int(0);
    for (a, b) in x.iter().zip(&cand.x) {
        let d = a - b;
        acc += &d * &d;
    }
    for (a, b) in y.iter().zip(&cand.y) {
        let d = a - b;
        acc += &d * &d;
    }
    acc
}

fn grid_nodes(center: &[Scalar], radius: &Scalar, step: &Scalar) -> Vec<Vector> {
    let k_max = {
        let ratio = radius / step;
        let mut k = 0i64;
        while int(k + 1) <= ratio {
            k += 1;
        }
        k
    };
    let n = center.len();
    let mut nodes = Vec::new();
    let mut counters = vec![-k_max; n];
    loop {
        let node: Vector = center
            .iter()
            .zip(&counters)
            .map(|(c, &k)| c + int(k) * step)
            .collect();
        nodes.push(node);
        let mut i = 0;
        loop {
            if i == n {
                return nodes;
            }
            counters[i] += 1;
            if counters[i] <= k_max {
                break;
            }
            counters[i] = -k_max;
            i += 1;
        }
    }
}

/// Grid-based growth validation. Exact for the linear lower-level classes;
/// for strongly-stable polynomial lower levels with a one-dimensional
/// decision the lower level is minimized by exact root isolation.
pub fn growth_oracle(
    instance: &BilevelInstance,
    eval: &PointEvaluation,
    params: &OracleParams,
) -> Result<OracleReport> {
    if params.radius <= int(0) || params.step <= int(0) {
        return Ok(OracleReport {
            order: params.order,
            radius: scalar::render(&params.radius),
            step: scalar::render(&params.step),
            pairs_checked: 0,
            grid_phi: Vec::new(),
            outcome: OracleOutcome::Inconclusive {
                reason: "radius and step must be positive".into(),
            },
        });
    }
    match &instance.lower {
        LowerLevel::FullyLinear { .. } | LowerLevel::LinearObjParam { .. } => {
            linear_oracle(instance, eval, params)
        }
        LowerLevel::UniqueStable { .. } => {
            if instance.m != 1 {
                return Ok(inapplicable(
                    params,
                    "polynomial oracle supports one-dimensional lower levels only",
                ));
            }
            polynomial_oracle(instance, eval, params)
        }
        LowerLevel::VfOracle { .. } => Ok(inapplicable(
            params,
            "oracle-class instances carry user tables, not solvable lower levels",
        )),
    }
}

fn inapplicable(params: &OracleParams, reason: &str) -> OracleReport {
    OracleReport {
        order: params.order,
        radius: scalar::render(&params.radius),
        step: scalar::render(&params.step),
        pairs_checked: 0,
        grid_phi: Vec::new(),
        outcome: OracleOutcome::Inapplicable {
            reason: reason.into(),
        },
    }
}

fn upper_feasible(instance: &BilevelInstance, x: &[Scalar], y: &[Scalar]) -> bool {
    let mut z = x.to_vec();
    z.extend(y.iter().cloned());
    instance
        .upper_constraints
        .iter()
        .all(|g| g.eval(&z) <= int(0))
}

fn linear_oracle(
    instance: &BilevelInstance,
    eval: &PointEvaluation,
    params: &OracleParams,
) -> Result<OracleReport> {
    let cand = &eval.point;
    let f_upper = &instance.upper_objective;
    let f_bar = &eval.obj_upper;
    let mut tracker = GrowthTracker {
        order: params.order,
        radius_sq: &params.radius * &params.radius,
        best_ratio_sq: None,
        zero_gap: false,
        pairs: 0,
    };
    let mut grid_phi = Vec::new();
    for x in grid_nodes(&cand.x, &params.radius, &params.step) {
        let Some(solution) = lower_solve(instance, &x)? else {
            continue;
        };
        grid_phi.push(GridPhi {
            x: x.iter().map(scalar::render).collect(),
            phi: scalar::render(&solution.value),
        });
        // Candidate pairs: face vertices, pairwise midpoints, and (at the
        // candidate parameter) points shrinking toward ȳ along the face.
        let mut ys: Vec<Vector> = solution.face_vertices.clone();
        for i in 0..solution.face_vertices.len() {
            for j in (i + 1)..solution.face_vertices.len() {
                let mid: Vector = solution.face_vertices[i]
                    .iter()
                    .zip(&solution.face_vertices[j])
                    .map(|(a, b)| (a + b) / int(2))
                    .collect();
                if !ys.contains(&mid) {
                    ys.push(mid);
                }
            }
        }
        if x == cand.x {
            for v in &solution.face_vertices {
                let mut t = int(1);
                for _ in 0..5 {
                    t = t / int(2);
                    let shrunk: Vector = cand
                        .y
                        .iter()
                        .zip(v)
                        .map(|(c, w)| c + &t * &(w - c))
                        .collect();
                    if !ys.contains(&shrunk) {
                        ys.push(shrunk);
                    }
                }
            }
        }
        for y in ys {
            if !upper_feasible(instance, &x, &y) {
                continue;
            }
            let mut z = x.clone();
            z.extend(y.iter().cloned());
            let gap = f_upper.eval(&z) - f_bar;
            let d_sq = dist_sq(&x, &y, cand);
            if let Some(refuted) = tracker.observe_exact(&x, &y, &gap, &d_sq) {
                return Ok(OracleReport {
                    order: params.order,
                    radius: scalar::render(&params.radius),
                    step: scalar::render(&params.step),
                    pairs_checked: tracker.pairs,
                    grid_phi,
                    outcome: refuted,
                });
            }
        }
    }
    Ok(tracker.finish(grid_phi, params))
}

/// Substitutes the parameter block exactly, leaving a univariate polynomial
/// in the single decision variable.
fn substitute_x(poly: &Polynomial, n: usize, x: &[Scalar]) -> UniPoly {
    let mut coefs: Vec<Scalar> = Vec::new();
    for term in &poly.terms {
        let mut c = term.coef.clone();
        for (j, xv) in x.iter().enumerate() {
            for _ in 0..term.exps[j] {
                c *= xv;
            }
        }
        let e = term.exps[n] as usize;
        if coefs.len() <= e {
            coefs.resize(e + 1, int(0));
        }
        coefs[e] += c;
    }
    UniPoly::new(if coefs.is_empty() {
        vec![int(0)]
    } else {
        coefs
    })
}

/// A candidate minimizer: exact rational or an isolating interval.
#[derive(Debug, Clone)]
enum Point1d {
    Exact(Scalar),
    Interval(AlgebraicRoot),
}

impl Point1d {
    fn bounds(&self) -> (Scalar, Scalar) {
        match self {
            Point1d::Exact(v) => (v.clone(), v.clone()),
            Point1d::Interval(r) => (r.lo.clone(), r.hi.clone()),
        }
    }

    fn refine(&mut self) -> bool {
        match self {
            Point1d::Exact(_) => false,
            Point1d::Interval(r) => {
                if let Some(v) = r.exact() {
                    *self = Point1d::Exact(v);
                    return false;
                }
                r.refine();
                if let Some(v) = r.exact() {
                    *self = Point1d::Exact(v);
                }
                true
            }
        }
    }

    fn eval_bounds(&self, p: &UniPoly) -> (Scalar, Scalar) {
        match self {
            Point1d::Exact(v) => {
                let f = p.eval(v);
                (f.clone(), f)
            }
            Point1d::Interval(r) => p.eval_interval(&r.lo, &r.hi),
        }
    }
}

fn polynomial_oracle(
    instance: &BilevelInstance,
    eval: &PointEvaluation,
    params: &OracleParams,
) -> Result<OracleReport> {
    let n = instance.n;
    let cand = &eval.point;
    let f_bar = &eval.obj_upper;
    let mut tracker = GrowthTracker {
        order: params.order,
        radius_sq: &params.radius * &params.radius,
        best_ratio_sq: None,
        zero_gap: false,
        pairs: 0,
    };
    let mut grid_phi = Vec::new();
    let lower_obj = instance.lower_objective_poly();
    let lower_cons = instance.lower_constraint_polys();

    'grid: for x in grid_nodes(&cand.x, &params.radius, &params.step) {
        let f_uni = substitute_x(&lower_obj, n, &x);
        let g_unis: Vec<UniPoly> = lower_cons.iter().map(|g| substitute_x(g, n, &x)).collect();
        // Candidate minimizers: stationary points of f and boundary roots
        // of each constraint, filtered by feasibility.
        let mut candidates: Vec<Point1d> = Vec::new();
        for r in isolate_roots(&f_uni.derivative()) {
            candidates.push(match r.exact() {
                Some(v) => Point1d::Exact(v),
                None => Point1d::Interval(r),
            });
        }
        for g in &g_unis {
            for r in isolate_roots(g) {
                candidates.push(match r.exact() {
                    Some(v) => Point1d::Exact(v),
                    None => Point1d::Interval(r),
                });
            }
        }
        // A constant objective makes every feasible point optimal; cover
        // the ball with explicit grid values in that case.
        if f_uni.degree() == 0 {
            for y in grid_nodes(&[cand.y[0].clone()], &params.radius, &params.step) {
                candidates.push(Point1d::Exact(y[0].clone()));
            }
        }
        collapse_candidates(&mut candidates);
        // Reject the node if the feasible set is unbounded: conservative
        // sentinel check beyond every root bound.
        let sentinel = candidates
            .iter()
            .map(|c| c.bounds().1)
            .chain(std::iter::once(int(1)))
            .max()
            .unwrap()
            + int(1);
        for s in [sentinel.clone(), -sentinel] {
            if g_unis.iter().all(|g| g.eval(&s) <= int(0)) {
                return Ok(OracleReport {
                    order: params.order,
                    radius: scalar::render(&params.radius),
                    step: scalar::render(&params.step),
                    pairs_checked: tracker.pairs,
                    grid_phi,
                    outcome: OracleOutcome::Inconclusive {
                        reason: "lower-level feasible set is unbounded at a grid node".into(),
                    },
                });
            }
        }
        // Feasibility of each candidate, refining interval points until the
        // sign of every constraint is decided.
        let mut feasible: Vec<Point1d> = Vec::new();
        'cands: for mut c in candidates {
            for (gi, g) in g_unis.iter().enumerate() {
                let defining = matches!(&c, Point1d::Interval(r) if r.poly == *g);
                if defining {
                    continue; // the candidate is a root of this constraint
                }
                let mut tries = 0;
                loop {
                    let (lo, hi) = c.eval_bounds(g);
                    if hi <= int(0) {
                        break;
                    }
                    if lo > int(0) {
                        continue 'cands;
                    }
                    if !c.refine() || tries > MAX_REFINE {
                        // Cannot decide feasibility of this candidate.
                        let _ = gi;
                        continue 'cands;
                    }
                    tries += 1;
                }
            }
            feasible.push(c);
        }
        if feasible.is_empty() {
            continue; // lower level infeasible at this node
        }
        // Global minimizers of f over the feasible candidates.
        let minimizers = global_minimizers(&f_uni, feasible)?;
        let Some(minimizers) = minimizers else {
            return Ok(OracleReport {
                order: params.order,
                radius: scalar::render(&params.radius),
                step: scalar::render(&params.step),
                pairs_checked: tracker.pairs,
                grid_phi,
                outcome: OracleOutcome::Inconclusive {
                    reason: "could not separate lower-level minimizer values".into(),
                },
            });
        };
        if let Some(first) = minimizers.first() {
            let (flo, fhi) = first.eval_bounds(&f_uni);
            let approx = (scalar::to_f64(&flo) + scalar::to_f64(&fhi)) / 2.0;
            grid_phi.push(GridPhi {
                x: x.iter().map(scalar::render).collect(),
                phi: format!("{approx}"),
            });
        }

        let f_upper = &instance.upper_objective;
        let upper_uni = substitute_x(f_upper, n, &x);
        for mut y in minimizers {
            // Upper-level feasibility.
            let mut ok = true;
            for g in &instance.upper_constraints {
                let g_uni = substitute_x(g, n, &x);
                let mut tries = 0;
                loop {
                    let (lo, hi) = y.eval_bounds(&g_uni);
                    if hi <= int(0) {
                        break;
                    }
                    if lo > int(0) {
                        ok = false;
                        break;
                    }
                    if !y.refine() || tries > MAX_REFINE {
                        ok = false;
                        break;
                    }
                    tries += 1;
                }
                if !ok {
                    break;
                }
            }
            if !ok {
                continue;
            }
            match &y {
                Point1d::Exact(yv) => {
                    let gap = upper_uni.eval(yv) - f_bar;
                    let d_sq = dist_sq(&x, &[yv.clone()], cand);
                    if let Some(refuted) = tracker.observe_exact(&x, &[yv.clone()], &gap, &d_sq) {
                        return Ok(OracleReport {
                            order: params.order,
                            radius: scalar::render(&params.radius),
                            step: scalar::render(&params.step),
                            pairs_checked: tracker.pairs,
                            grid_phi,
                            outcome: refuted,
                        });
                    }
                }
                Point1d::Interval(_) => {
                    let mut tries = 0;
                    loop {
                        let (lo, hi) = y.bounds();
                        let (f_lo, f_hi) = y.eval_bounds(&upper_uni);
                        let gap_lo = &f_lo - f_bar;
                        let gap_hi = &f_hi - f_bar;
                        let dy_max =
                            scalar::abs(&(&lo - &cand.y[0])).max(scalar::abs(&(&hi - &cand.y[0])));
                        let dy_min = if &lo <= &cand.y[0] && &cand.y[0] <= &hi {
                            int(0)
                        } else {
                            scalar::abs(&(&lo - &cand.y[0])).min(scalar::abs(&(&hi - &cand.y[0])))
                        };
                        let mut dx_sq = int(0);
                        for (a, b) in x.iter().zip(&cand.x) {
                            let d = a - b;
                            dx_sq += &d * &d;
                        }
                        let dist_sq_hi = &dx_sq + &dy_max * &dy_max;
                        let dist_sq_lo = &dx_sq + &dy_min * &dy_min;
                        if dist_sq_lo > tracker.radius_sq {
                            break; // pair certainly outside the ball
                        }
                        if gap_hi < int(0) && dist_sq_hi <= tracker.radius_sq {
                            return Ok(OracleReport {
                                order: params.order,
                                radius: scalar::render(&params.radius),
                                step: scalar::render(&params.step),
                                pairs_checked: tracker.pairs,
                                grid_phi,
                                outcome: OracleOutcome::Refuted {
                                    witness_x: x.iter().map(scalar::render).collect(),
                                    witness_y_lo: vec![scalar::render(&lo)],
                                    witness_y_hi: vec![scalar::render(&hi)],
                                },
                            });
                        }
                        if gap_lo > int(0) && dist_sq_hi <= tracker.radius_sq {
                            tracker.pairs += 1;
                            let ratio_sq = &gap_lo * &gap_lo / pow(&dist_sq_hi, params.order);
                            tracker.best_ratio_sq = Some(match tracker.best_ratio_sq.take() {
                                None => ratio_sq,
                                Some(cur) => cur.min(ratio_sq),
                            });
                            break;
                        }
                        if !y.refine() || tries > MAX_REFINE {
                            return Ok(OracleReport {
                                order: params.order,
                                radius: scalar::render(&params.radius),
                                step: scalar::render(&params.step),
                                pairs_checked: tracker.pairs,
                                grid_phi,
                                outcome: OracleOutcome::Inconclusive {
                                    reason:
                                        "could not certify the objective gap at an algebraic pair"
                                            .into(),
                                },
                            });
                        }
                        tries += 1;
                        if tries > MAX_REFINE {
                            continue 'grid;
                        }
                    }
                }
            }
        }
    }
    Ok(tracker.finish(grid_phi, params))
}

/// Snaps interval candidates onto exact rational candidates they contain
/// (when the interval's defining polynomial vanishes there), then removes
/// exact duplicates. Coinciding stationary and boundary points would
/// otherwise never compare equal.
fn collapse_candidates(candidates: &mut Vec<Point1d>) {
    let exact_values: Vec<Scalar> = candidates
        .iter()
        .filter_map(|c| match c {
            Point1d::Exact(v) => Some(v.clone()),
            Point1d::Interval(_) => None,
        })
        .collect();
    for c in candidates.iter_mut() {
        if let Point1d::Interval(r) = c {
            if let Some(v) = exact_values
                .iter()
                .find(|v| &r.lo <= *v && *v <= &r.hi && scalar::is_zero(&r.poly.eval(v)))
            {
                *c = Point1d::Exact(v.clone());
            }
        }
    }
    let mut deduped: Vec<Point1d> = Vec::new();
    for c in candidates.drain(..) {
        if let Point1d::Exact(v) = &c {
            if deduped
                .iter()
                .any(|d| matches!(d, Point1d::Exact(w) if w == v))
            {
                continue;
            }
        }
        deduped.push(c);
    }
    *candidates = deduped;
}

/// Reduces a candidate list to the set of global minimizers of `f`,
/// refining intervals until every survivor is proven minimal (or exactly
/// tied); `None` when refinement cannot separate the values.
fn global_minimizers(f: &UniPoly, mut candidates: Vec<Point1d>) -> Result<Option<Vec<Point1d>>> {
    for _round in 0..MAX_REFINE {
        collapse_candidates(&mut candidates);
        // Current upper bound on the minimum value.
        let min_hi = candidates
            .iter()
            .map(|c| c.eval_bounds(f).1)
            .min()
            .expect("nonempty candidate list");
        candidates.retain(|c| c.eval_bounds(f).0 <= min_hi);
        // Resolved when every survivor's value interval has collapsed onto
        // the same exact value, or all survivors agree within exactness.
        let exact_values: Vec<Option<Scalar>> = candidates
            .iter()
            .map(|c| {
                let (lo, hi) = c.eval_bounds(f);
                if lo == hi {
                    Some(lo)
                } else {
                    None
                }
            })
            .collect();
        if exact_values.iter().all(|v| v.is_some()) {
            let values: Vec<Scalar> = exact_values.into_iter().map(|v| v.unwrap()).collect();
            let min_v = values.iter().min().unwrap().clone();
            let out: Vec<Point1d> = candidates
                .into_iter()
                .zip(values)
                .filter(|(_, v)| *v == min_v)
                .map(|(c, _)| c)
                .collect();
            return Ok(Some(out));
        }
        // Check whether a single candidate already dominates.
        if candidates.len() == 1 {
            return Ok(Some(candidates));
        }
        let mut progressed = false;
        for c in &mut candidates {
            if c.refine() {
                progressed = true;
            }
        }
        if !progressed {
            // All exact but unequal handled above; mixed exact/interval with
            // no refinement progress cannot happen.
            return Ok(Some(candidates));
        }
    }
    Ok(None)
}
