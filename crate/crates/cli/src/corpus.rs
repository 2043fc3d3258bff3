//! Regression corpus runner: executes every instance in a directory against
//! its expectation file and summarizes matches and mismatches.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use strictmin::certificate::{SoVerdict, Verdict};
use strictmin::error::{Error, Result};
use strictmin::first_order::kkt_report_data;
use strictmin::lower::{check_smfc, IndexPartition};
use strictmin::model::{evaluate, load_instance_str};
use strictmin::scalar;
use strictmin::second_order::subproblem_value;
use strictmin::vf::{build_vf_model, phi_dirderiv, phi_second_dirderiv, DirValue};

use crate::oracle::OracleParams;
use crate::report::{run_on_text, Report, RunConfig};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub conditions: Vec<String>,
    pub feasible: bool,
    /// Condition name to expected verdict: holds | fails | inapplicable |
    /// undetermined.
    pub verdicts: std::collections::BTreeMap<String, String>,
    #[serde(default)]
    pub oracle: Option<OracleExpect>,
    #[serde(default)]
    pub quantities: Quantities,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleExpect {
    pub order: u32,
    pub radius: String,
    pub step: String,
    /// confirmed | refuted | inconclusive | inapplicable
    pub expect: String,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Quantities {
    pub multiplier: Option<Vec<String>>,
    pub index_partition: Option<PartitionExpect>,
    pub smfc: Option<bool>,
    pub phi_probes: Vec<PhiProbe>,
    pub phi_second_probes: Vec<PhiSecondProbe>,
    pub so_ray_values: Vec<RayValue>,
    pub so_ray_lower_bounds: Vec<RayBound>,
    pub vf_candidate: Option<VfCandidateExpect>,
    pub zero_in_interior_q: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct PartitionExpect {
    pub i_zero_minus: Vec<usize>,
    pub i_plus_zero: Vec<usize>,
    pub i_zero_zero: Vec<usize>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct PhiProbe {
    pub delta: Vec<String>,
    pub expect: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct PhiSecondProbe {
    pub delta: Vec<String>,
    pub omega: Vec<String>,
    pub expect: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct RayValue {
    pub ray: Vec<String>,
    pub value: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct RayBound {
    pub ray: Vec<String>,
    pub at_least: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct VfCandidateExpect {
    pub nu: Vec<String>,
    pub hessian: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorpusRow {
    pub instance: String,
    pub ok: bool,
    pub details: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorpusSummary {
    pub rows: Vec<CorpusRow>,
    pub passed: usize,
    pub total: usize,
}

impl CorpusSummary {
    pub fn all_ok(&self) -> bool {
        self.passed == self.total
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Holds => "holds",
        Verdict::Fails => "fails",
        Verdict::Inapplicable => "inapplicable",
    }
}

fn so_verdict_str(v: SoVerdict) -> &'static str {
    match v {
        SoVerdict::Holds => "holds",
        SoVerdict::Fails => "fails",
        SoVerdict::Undetermined => "undetermined",
        SoVerdict::Inapplicable => "inapplicable",
    }
}

fn check_quantities(
    text: &str,
    expect: &Expectation,
    report: &Report,
    details: &mut Vec<String>,
) -> Result<()> {
    let q = &expect.quantities;
    let instance = load_instance_str(text)?;
    let eval = evaluate(&instance, &instance.candidate.clone())?;

    if let Some(expected) = &q.multiplier {
        match kkt_report_data(&eval)? {
            Some((lam, _, _)) => {
                let got: Vec<String> = lam.iter().map(scalar::render).collect();
                if &got != expected {
                    details.push(format!("multiplier mismatch: got {got:?}"));
                }
            }
            None => details.push("multiplier not unique".into()),
        }
    }
    if let Some(p) = &q.index_partition {
        match kkt_report_data(&eval)? {
            Some((_, partition, _)) => {
                let expected = IndexPartition {
                    i_zero_minus: p.i_zero_minus.clone(),
                    i_plus_zero: p.i_plus_zero.clone(),
                    i_zero_zero: p.i_zero_zero.clone(),
                };
                if partition != expected {
                    details.push(format!("index partition mismatch: got {partition:?}"));
                }
            }
            None => details.push("index partition unavailable".into()),
        }
    }
    if let Some(expected) = q.smfc {
        match kkt_report_data(&eval)? {
            Some((lam, _, _)) => {
                let partition = IndexPartition::new(&eval, &lam);
                let got = check_smfc(&eval, &partition)?;
                if got != expected {
                    details.push(format!("smfc mismatch: got {got}"));
                }
            }
            None => details.push("smfc check needs a unique multiplier".into()),
        }
    }
    if !q.phi_probes.is_empty() || !q.phi_second_probes.is_empty() || q.vf_candidate.is_some() {
        let model = build_vf_model(&instance, &eval)?;
        for probe in &q.phi_probes {
            let delta: Vec<_> = probe
                .delta
                .iter()
                .map(|s| scalar::parse(s))
                .collect::<Result<_>>()?;
            let got = phi_dirderiv(&model, &delta)?;
            let expected = scalar::parse(&probe.expect)?;
            if got != expected {
                details.push(format!(
                    "phi probe {:?}: got {}, expected {}",
                    probe.delta,
                    scalar::render(&got),
                    probe.expect
                ));
            }
        }
        for probe in &q.phi_second_probes {
            let delta: Vec<_> = probe
                .delta
                .iter()
                .map(|s| scalar::parse(s))
                .collect::<Result<_>>()?;
            let omega: Vec<_> = probe
                .omega
                .iter()
                .map(|s| scalar::parse(s))
                .collect::<Result<_>>()?;
            let got = phi_second_dirderiv(&model, &eval, &delta, &omega)?;
            let expected = DirValue::Finite(scalar::parse(&probe.expect)?);
            if got != expected {
                details.push(format!("phi'' probe {:?} mismatch", probe.delta));
            }
        }
        if let Some(vc) = &q.vf_candidate {
            let dual = report
                .so_certificates
                .iter()
                .find(|c| c.condition == "so-dual")
                .and_then(|c| c.vf_multipliers.as_ref());
            match dual {
                Some(rep) => {
                    let found = rep
                        .candidates
                        .iter()
                        .any(|c| c.nu == vc.nu && c.hessian == vc.hessian);
                    if !found {
                        details.push(format!("vf multiplier candidate {:?} missing", vc.nu));
                    }
                }
                None => details.push("vf multiplier report missing".into()),
            }
        }
        for rv in &q.so_ray_values {
            let ray: Vec<_> = rv
                .ray
                .iter()
                .map(|s| scalar::parse(s))
                .collect::<Result<_>>()?;
            let got = subproblem_value(&eval, &model, &ray)?;
            let expected = DirValue::Finite(scalar::parse(&rv.value)?);
            if got != expected {
                details.push(format!("subproblem value at {:?} mismatch", rv.ray));
            }
        }
        for rb in &q.so_ray_lower_bounds {
            let ray: Vec<_> = rb
                .ray
                .iter()
                .map(|s| scalar::parse(s))
                .collect::<Result<_>>()?;
            let bound = scalar::parse(&rb.at_least)?;
            match subproblem_value(&eval, &model, &ray)? {
                DirValue::Finite(v) => {
                    if v < bound {
                        details.push(format!(
                            "subproblem value at {:?} below bound {}",
                            rb.ray, rb.at_least
                        ));
                    }
                }
                DirValue::NegInf => {
                    details.push(format!("subproblem value at {:?} unbounded", rb.ray))
                }
            }
        }
    } else {
        // Ray checks without other model quantities still need the model.
        if !q.so_ray_values.is_empty() || !q.so_ray_lower_bounds.is_empty() {
            let model = build_vf_model(&instance, &eval)?;
            for rv in &q.so_ray_values {
                let ray: Vec<_> = rv
                    .ray
                    .iter()
                    .map(|s| scalar::parse(s))
                    .collect::<Result<_>>()?;
                let got = subproblem_value(&eval, &model, &ray)?;
                let expected = DirValue::Finite(scalar::parse(&rv.value)?);
                if got != expected {
                    details.push(format!("subproblem value at {:?} mismatch", rv.ray));
                }
            }
            for rb in &q.so_ray_lower_bounds {
                let ray: Vec<_> = rb
                    .ray
                    .iter()
                    .map(|s| scalar::parse(s))
                    .collect::<Result<_>>()?;
                let bound = scalar::parse(&rb.at_least)?;
                if let DirValue::Finite(v) = subproblem_value(&eval, &model, &ray)? {
                    if v < bound {
                        details.push(format!("subproblem value at {:?} below bound", rb.ray));
                    }
                }
            }
        }
    }
    if let Some(expected) = q.zero_in_interior_q {
        // Reuse the dual certificate's recorded hull test.
        let got = report
            .certificates
            .iter()
            .find(|c| c.condition == "fo-vf-dual")
            .map(|c| c.verdict == Verdict::Holds);
        if got != Some(expected) {
            details.push("zero-in-interior hull test mismatch".into());
        }
    }
    Ok(())
}

pub fn run_one(text: &str, expect: &Expectation) -> Result<CorpusRow> {
    let config = RunConfig {
        conditions: expect.conditions.clone(),
        scan: Default::default(),
        oracle: match &expect.oracle {
            Some(o) => Some(OracleParams {
                radius: scalar::parse(&o.radius)?,
                step: scalar::parse(&o.step)?,
                order: o.order,
            }),
            None => None,
        },
    };
    let report = run_on_text(text, &config)?;
    let mut details = Vec::new();
    if report.feasibility.is_feasible() != expect.feasible {
        details.push(format!(
            "feasibility mismatch: got {:?}",
            report.feasibility
        ));
    }
    for (condition, expected) in &expect.verdicts {
        let got = report
            .certificates
            .iter()
            .find(|c| &c.condition == condition)
            .map(|c| verdict_str(c.verdict).to_string())
            .or_else(|| {
                report
                    .so_certificates
                    .iter()
                    .find(|c| &c.condition == condition)
                    .map(|c| so_verdict_str(c.verdict).to_string())
            });
        match got {
            Some(v) if &v == expected => {}
            Some(v) => details.push(format!("{condition}: got {v}, expected {expected}")),
            None => details.push(format!("{condition}: no certificate produced")),
        }
    }
    if let Some(oe) = &expect.oracle {
        let got = report
            .oracle
            .as_ref()
            .map(|o| match &o.outcome {
                crate::oracle::OracleOutcome::Confirmed { .. } => "confirmed",
                crate::oracle::OracleOutcome::Refuted { .. } => "refuted",
                crate::oracle::OracleOutcome::Inconclusive { .. } => "inconclusive",
                crate::oracle::OracleOutcome::Inapplicable { .. } => "inapplicable",
            })
            .unwrap_or("missing");
        if got != oe.expect {
            details.push(format!("oracle: got {got}, expected {}", oe.expect));
        }
    }
    check_quantities(text, expect, &report, &mut details)?;
    Ok(CorpusRow {
        instance: report.instance.clone(),
        ok: details.is_empty(),
        details,
    })
}

/// Runs every `NAME.json` + `NAME.expect.json` pair under `dir`.
pub fn run_corpus(dir: &Path) -> Result<CorpusSummary> {
    let mut names: Vec<String> = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().to_string();
        if name.ends_with(".json") && !name.ends_with(".expect.json") {
            names.push(name.trim_end_matches(".json").to_string());
        }
    }
    if names.is_empty() {
        return Err(Error::Schema(format!(
            "corpus directory {} contains no instance files",
            dir.display()
        )));
    }
    names.sort();
    let mut rows = Vec::new();
    for name in names {
        let text = fs::read_to_string(dir.join(format!("{name}.json")))?;
        let expect_path = dir.join(format!("{name}.expect.json"));
        let expect_text = fs::read_to_string(&expect_path).map_err(|e| {
            Error::Schema(format!(
                "missing expectation file {}: {e}",
                expect_path.display()
            ))
        })?;
        let expect: Expectation = serde_json::from_str(&expect_text)
            .map_err(|e| Error::Schema(format!("{}: {e}", expect_path.display())))?;
        let row = match run_one(&text, &expect) {
            Ok(row) => row,
            Err(e) => CorpusRow {
                instance: name.clone(),
                ok: false,
                details: vec![format!("error: {e}")],
            },
        };
        rows.push(row);
    }
    let passed = rows.iter().filter(|r| r.ok).count();
    let total = rows.len();
    Ok(CorpusSummary {
        rows,
        passed,
        total,
    })
}

pub fn render_summary(summary: &CorpusSummary) -> String {
    let mut out = String::new();
    out.push_str("instance        status  details\n");
    for row in &summary.rows {
        out.push_str(&format!(
            "{:<15} {:<7} {}\n",
            row.instance,
            if row.ok { "ok" } else { "MISMATCH" },
            row.details.join("; ")
        ));
    }
    out.push_str(&format!(
        "{}/{} expected verdicts\n",
        summary.passed, summary.total
    ));
    out
}
