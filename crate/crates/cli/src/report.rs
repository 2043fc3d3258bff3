//! Certificate orchestration and report assembly.
//!
//! Reports are deterministic: stable field order, canonical rational
//! strings, no timestamps. Identical input and flags produce byte-identical
//! files; stage timings go to stderr only.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use strictmin::certificate::SoVerdict;
use strictmin::certificate::{AssumptionRecord, Certificate, Verdict};
use strictmin::error::{Error, Result};
use strictmin::first_order::{
    certify_implicit, certify_kkt, certify_va, certify_vf_dual, certify_vf_primal,
};
use strictmin::model::{
    check_feasible, evaluate, load_instance_str, BilevelInstance, Feasibility, PointEvaluation,
};
use strictmin::second_order::{
    dual_sosc, kkt_point_check, positivity_scan, KktPointOutcome, ScanParams, SoCertificate,
};
use strictmin::vf::{build_vf_model, ValueFunctionModel};

use crate::oracle::{growth_oracle, OracleParams, OracleReport};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub const ALL_CONDITIONS: [&str; 7] = [
    "fo-vf",
    "fo-vf-dual",
    "fo-implicit",
    "fo-va",
    "fo-kkt",
    "so",
    "so-dual",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub instance: String,
    pub instance_digest: String,
    pub class: String,
    pub candidate_x: Vec<String>,
    pub candidate_y: Vec<String>,
    pub conditions: Vec<String>,
    pub feasibility: Feasibility,
    pub certificates: Vec<Certificate>,
    pub so_certificates: Vec<SoCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kkt_point: Option<KktPointOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleReport>,
    /// Merged hypothesis ledger across all certificates, deduplicated and
    /// sorted by name.
    pub assumption_ledger: Vec<AssumptionRecord>,
    pub exit_code: i32,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub conditions: Vec<String>,
    pub scan: ScanParams,
    pub oracle: Option<OracleParams>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            conditions: ALL_CONDITIONS.iter().map(|s| s.to_string()).collect(),
            scan: ScanParams::default(),
            oracle: None,
        }
    }
}

fn digest(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// The value-function model, shared by the conditions that need it; model
/// construction failure degrades those conditions to inapplicable.
fn model_or_reason(
    instance: &BilevelInstance,
    eval: &PointEvaluation,
) -> std::result::Result<ValueFunctionModel, String> {
    build_vf_model(instance, eval).map_err(|e| e.to_string())
}

pub fn run_on_text(text: &str, config: &RunConfig) -> Result<Report> {
    let instance = load_instance_str(text)?;
    let eval = evaluate(&instance, &instance.candidate.clone())?;
    let feasibility = check_feasible(&instance, &eval)?;

    let needs_model = config
        .conditions
        .iter()
        .any(|c| matches!(c.as_str(), "fo-vf" | "fo-vf-dual" | "so" | "so-dual"));
    let model = if needs_model {
        Some(model_or_reason(&instance, &eval))
    } else {
        None
    };

    let mut certificates = Vec::new();
    let mut so_certificates = Vec::new();
    let mut kkt_point = None;
    for condition in &config.conditions {
        match condition.as_str() {
            "fo-vf" => match model.as_ref().unwrap() {
                Ok(m) => certificates.push(certify_vf_primal(&instance, &eval, m)?),
                Err(reason) => certificates.push(Certificate::inapplicable("fo-vf", reason)),
            },
            "fo-vf-dual" => match model.as_ref().unwrap() {
                Ok(m) => certificates.push(certify_vf_dual(&instance, &eval, m)?),
                Err(reason) => certificates.push(Certificate::inapplicable("fo-vf-dual", reason)),
            },
            "fo-implicit" => certificates.push(certify_implicit(&instance, &eval)?),
            "fo-va" => certificates.push(certify_va(&instance, &eval)?),
            "fo-kkt" => certificates.push(certify_kkt(&instance, &eval)?),
            "so" => match model.as_ref().unwrap() {
                Ok(m) => {
                    so_certificates.push(positivity_scan(&instance, &eval, m, &config.scan)?);
                    if kkt_point.is_none() {
                        kkt_point = Some(kkt_point_check(&eval, m)?);
                    }
                }
                Err(reason) => so_certificates.push(inapplicable_so("so", reason)),
            },
            "so-dual" => match model.as_ref().unwrap() {
                Ok(m) => {
                    so_certificates.push(dual_sosc(&instance, &eval, m, &config.scan)?);
                }
                Err(reason) => so_certificates.push(inapplicable_so("so-dual", reason)),
            },
            other => {
                return Err(Error::Schema(format!("unknown condition {other:?}")));
            }
        }
    }

    let oracle = match &config.oracle {
        Some(params) => Some(growth_oracle(&instance, &eval, params)?),
        None => None,
    };

    let exit_code = exit_code(&feasibility, &certificates, &so_certificates);
    let mut ledger: Vec<AssumptionRecord> = Vec::new();
    for c in &certificates {
        for a in &c.assumptions {
            if !ledger
                .iter()
                .any(|l| l.name == a.name && l.status == a.status)
            {
                ledger.push(a.clone());
            }
        }
    }
    for c in &so_certificates {
        for a in &c.assumptions {
            if !ledger
                .iter()
                .any(|l| l.name == a.name && l.status == a.status)
            {
                ledger.push(a.clone());
            }
        }
    }
    ledger.sort_by(|a, b| a.name.cmp(&b.name));

    Ok(Report {
        schema_version: REPORT_SCHEMA_VERSION,
        instance: instance.name.clone(),
        instance_digest: digest(text),
        class: instance.class.as_str().to_string(),
        candidate_x: instance
            .candidate
            .x
            .iter()
            .map(strictmin::scalar::render)
            .collect(),
        candidate_y: instance
            .candidate
            .y
            .iter()
            .map(strictmin::scalar::render)
            .collect(),
        conditions: config.conditions.clone(),
        feasibility,
        certificates,
        so_certificates,
        kkt_point,
        oracle,
        assumption_ledger: ledger,
        exit_code,
    })
}

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

/// Exit contract: 0 when some sufficient condition holds, 2 when none holds
/// and at least one definitively fails, 3 when only inapplicable or
/// undetermined outcomes remain, 1 reserved for input errors.
fn exit_code(
    feasibility: &Feasibility,
    certificates: &[Certificate],
    so_certificates: &[SoCertificate],
) -> i32 {
    let any_holds = certificates.iter().any(|c| c.verdict == Verdict::Holds)
        || so_certificates
            .iter()
            .any(|c| c.verdict == SoVerdict::Holds);
    if any_holds && feasibility.is_feasible() {
        return 0;
    }
    let any_fails = !feasibility.is_feasible()
        || certificates.iter().any(|c| c.verdict == Verdict::Fails)
        || so_certificates
            .iter()
            .any(|c| c.verdict == SoVerdict::Fails);
    if any_fails {
        2
    } else {
        3
    }
}

pub fn render_report(report: &Report) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serialization");
    text.push('\n');
    text
}
