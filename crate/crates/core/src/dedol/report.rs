use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::DedolReport;
use crate::error::{GsgiError, Result};
use crate::nn::save_checkpoint;
use crate::policies::{PolicyDescriptor, PurePolicy};

/// One JSON object per line: every iteration record, every local-phase
/// summary, then the final strategy. Each carries a `type` field.
pub fn write_report_jsonl<W: Write>(mut w: W, report: &DedolReport) -> Result<()> {
    let mut line = |kind: &str, v: Value| -> Result<()> {
        let mut v = v;
        if let Value::Object(m) = &mut v {
            m.insert("type".into(), json!(kind));
        }
        serde_json::to_writer(&mut w, &v)?;
        w.write_all(b"\n")?;
        Ok(())
    };
    for r in &report.records {
        line("iteration", serde_json::to_value(r)?)?;
    }
    for l in &report.locals {
        line("local", serde_json::to_value(l)?)?;
    }
    line(
        "final",
        json!({
            "strategy": report.final_strategy,
            "defenders": report.game.defender_ids(),
            "attackers": report.game.attacker_ids(),
            "matrix": report.game.matrix()?,
        }),
    )?;
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleEntry {
    pub id: String,
    pub prob: f64,
    pub policy: PolicyDescriptor,
}

/// Mixture weights and policy descriptions of a strategy bundle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub strategies: Vec<BundleEntry>,
}

fn descriptor(policy: &PurePolicy, id: &str, dir: &Path) -> Result<PolicyDescriptor> {
    Ok(match policy {
        PurePolicy::HeuristicAttacker(params) => PolicyDescriptor::HeuristicAttacker { params: *params },
        PurePolicy::HeuristicDefender(params) => PolicyDescriptor::HeuristicDefender { params: *params },
        PurePolicy::RandomSweep => PolicyDescriptor::RandomSweep,
        PurePolicy::Network { net, side } => {
            let file = format!("{id}.ckpt");
            save_checkpoint(net, &dir.join(&file))?;
            PolicyDescriptor::Network {
                side: *side,
                checkpoint: file,
            }
        }
        PurePolicy::UniformRandom(side) => PolicyDescriptor::UniformRandom { side: *side },
        PurePolicy::Stationary(side) => PolicyDescriptor::Stationary { side: *side },
    })
}

/// Write the final defender mixture to `dir`: one checkpoint per network
/// strategy with positive weight and a `manifest.json`.
pub fn write_strategy_bundle(dir: &Path, report: &DedolReport) -> Result<BundleManifest> {
    fs::create_dir_all(dir)?;
    let mix = &report.final_strategy.strategy;
    let mut strategies = Vec::new();
    for (id, p) in mix.ids.iter().zip(&mix.probs) {
        if *p <= 0.0 {
            continue;
        }
        let s = report
            .game
            .defenders
            .iter()
            .find(|s| &s.id == id)
            .ok_or_else(|| GsgiError::InvalidArgument(format!("unknown strategy {id}")))?;
        strategies.push(BundleEntry {
            id: id.clone(),
            prob: *p,
            policy: descriptor(&s.policy, id, dir)?,
        });
    }
    let manifest = BundleManifest { strategies };
    fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Read a bundle back as weighted policies.
pub fn load_strategy_bundle(dir: &Path) -> Result<Vec<(String, PurePolicy, f64)>> {
    let manifest: BundleManifest = serde_json::from_slice(&fs::read(dir.join("manifest.json"))?)?;
    if manifest.strategies.is_empty() {
        return Err(GsgiError::Config("empty strategy bundle".into()));
    }
    manifest
        .strategies
        .into_iter()
        .map(|e| Ok((e.id, e.policy.load(dir)?, e.prob)))
        .collect()
}
