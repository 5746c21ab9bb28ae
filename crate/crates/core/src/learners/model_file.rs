//! JSON model files: header fields plus one flat node array shared by all
//! trees. Children always sit after their parent, `-1` marks "no child".

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{RandomForestModel, TreeNode};
use crate::error::{Error, Result};
use crate::geodata::Task;
use crate::scalar::Scalar;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
struct ModelFile<T> {
    format_version: u32,
    task: Task,
    schema_hash: String,
    feature_count: usize,
    hyperparameters: Hyperparameters,
    seed: u64,
    roots: Vec<i64>,
    nodes: Vec<NodeRecord<T>>,
}

#[derive(Serialize, Deserialize)]
struct Hyperparameters {
    n_estimators: usize,
    max_depth: usize,
    features_per_split: usize,
    bootstrap: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
struct NodeRecord<T> {
    feature: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threshold: Option<T>,
    left: i64,
    right: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    class: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    counts: Option<[usize; 2]>,
}

fn flatten<T: Scalar>(node: &TreeNode<T>, out: &mut Vec<NodeRecord<T>>) -> i64 {
    let at = out.len();
    match node {
        TreeNode::Leaf { class, counts } => out.push(NodeRecord {
            feature: -1,
            threshold: None,
            left: -1,
            right: -1,
            class: Some(*class),
            counts: Some(*counts),
        }),
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            out.push(NodeRecord {
                feature: *feature as i64,
                threshold: Some(*threshold),
                left: -1,
                right: -1,
                class: None,
                counts: None,
            });
            let l = flatten(left, out);
            let r = flatten(right, out);
            out[at].left = l;
            out[at].right = r;
        }
    }
    at as i64
}

struct Rebuild<'a, T> {
    nodes: &'a [NodeRecord<T>],
    used: Vec<bool>,
    feature_count: usize,
}

impl<T: Scalar> Rebuild<'_, T> {
    fn node(&mut self, at: i64, parent: i64) -> Result<TreeNode<T>> {
        let corrupt = |m: String| Err(Error::CorruptModel(m));
        if at <= parent || at as usize >= self.nodes.len() {
            return corrupt(format!("dangling child reference {at} from node {parent}"));
        }
        let i = at as usize;
        if std::mem::replace(&mut self.used[i], true) {
            return corrupt(format!("node {i} is referenced twice"));
        }
        let rec = &self.nodes[i];
        match (rec.feature, rec.left, rec.right) {
            (-1, -1, -1) => {
                let (Some(class), Some(counts)) = (rec.class, rec.counts) else {
                    return corrupt(format!("leaf {i} lacks class or counts"));
                };
                if class > 1 || counts[0] + counts[1] == 0 {
                    return corrupt(format!("leaf {i} has class {class} and counts {counts:?}"));
                }
                Ok(TreeNode::Leaf { class, counts })
            }
            (f, l, r) if f >= 0 && l >= 0 && r >= 0 => {
                if f as usize >= self.feature_count {
                    return corrupt(format!("node {i} splits on feature {f} of {}", self.feature_count));
                }
                let Some(threshold) = rec.threshold.filter(|t| t.is_finite()) else {
                    return corrupt(format!("split {i} has no finite threshold"));
                };
                Ok(TreeNode::Split {
                    feature: f as usize,
                    threshold,
                    left: Box::new(self.node(l, at)?),
                    right: Box::new(self.node(r, at)?),
                })
            }
            _ => corrupt(format!("node {i} mixes leaf and split fields")),
        }
    }
}

pub fn model_to_json<T: Scalar>(model: &RandomForestModel<T>) -> Result<String> {
    let mut nodes = Vec::new();
    let roots = model.trees().iter().map(|t| flatten(t, &mut nodes)).collect();
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        task: model.schema.task,
        schema_hash: model.schema.hash(),
        feature_count: model.schema.len(),
        hyperparameters: Hyperparameters {
            n_estimators: model.n_estimators(),
            max_depth: model.max_depth,
            features_per_split: model.features_per_split,
            bootstrap: model.bootstrap,
        },
        seed: model.seed,
        roots,
        nodes,
    };
    let mut s = serde_json::to_string_pretty(&file)?;
    s.push('\n');
    Ok(s)
}

pub fn model_from_json<T: Scalar>(text: &str) -> Result<RandomForestModel<T>> {
    let file: ModelFile<T> = serde_json::from_str(text).map_err(|e| Error::CorruptModel(format!("unreadable: {e}")))?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::CorruptModel(format!(
            "format version {} (expected {FORMAT_VERSION})",
            file.format_version
        )));
    }
    let schema = file.task.schema();
    if file.schema_hash != schema.hash() || file.feature_count != schema.len() {
        return Err(Error::CorruptModel(format!(
            "schema hash {} / {} features does not match the {} schema",
            file.schema_hash, file.feature_count, file.task
        )));
    }
    let hp = &file.hyperparameters;
    if file.roots.len() != hp.n_estimators {
        return Err(Error::CorruptModel(format!(
            "{} roots for n_estimators = {}",
            file.roots.len(),
            hp.n_estimators
        )));
    }
    let mut rebuild = Rebuild {
        nodes: &file.nodes,
        used: vec![false; file.nodes.len()],
        feature_count: file.feature_count,
    };
    let trees = file
        .roots
        .iter()
        .map(|&r| rebuild.node(r, -1))
        .collect::<Result<Vec<_>>>()?;
    if let Some(orphan) = rebuild.used.iter().position(|u| !u) {
        return Err(Error::CorruptModel(format!("node {orphan} is unreachable")));
    }
    RandomForestModel::from_trees(
        schema,
        trees,
        hp.max_depth,
        hp.features_per_split,
        file.seed,
        hp.bootstrap,
    )
    .map_err(|e| Error::CorruptModel(e.to_string()))
}

pub fn save_model<T: Scalar>(path: impl AsRef<Path>, model: &RandomForestModel<T>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_json(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<RandomForestModel<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}

/// Short content digest of the serialized model.
pub fn model_id<T: Scalar>(model: &RandomForestModel<T>) -> Result<String> {
    let json = model_to_json(model)?;
    Ok(hex::encode(&Sha256::digest(json.as_bytes())[..8]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodata::synth_generate;
    use crate::learners::fit_forest;
    use rand::Rng;

    fn trained() -> RandomForestModel<f64> {
        let d = synth_generate::<f64>(Task::Prevention, 40, 4).unwrap();
        fit_forest(&d, 7, 5, 42).unwrap()
    }

    #[test]
    fn round_trip_preserves_predictions() {
        let m = trained();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("model.json");
        save_model(&p, &m).unwrap();
        let back: RandomForestModel<f64> = load_model(&p).unwrap();
        assert_eq!(back, m);
        let mut rng = crate::seed::rng(5);
        for _ in 0..100 {
            let x: Vec<f64> = vec![
                rng.random_range(40.0..60.0),
                rng.random_range(0.0..15.0),
                rng.random_range(0.0..5e-6),
                rng.random_range(0.0..0.5),
                rng.random_range(285.0..315.0),
                rng.random_range(-0.2..0.9),
            ];
            assert_eq!(back.vote_fraction(&x).unwrap(), m.vote_fraction(&x).unwrap());
        }
    }

    #[test]
    fn serialization_is_deterministic() {
        assert_eq!(model_to_json(&trained()).unwrap(), model_to_json(&trained()).unwrap());
        assert_eq!(model_id(&trained()).unwrap().len(), 16);
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let json = model_to_json(&trained()).unwrap();
        let cut = &json[..json.len() / 2];
        assert!(matches!(model_from_json::<f64>(cut), Err(Error::CorruptModel(_))));
    }

    #[test]
    fn dangling_child_is_corrupt() {
        let json = model_to_json(&trained()).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let nodes = v["nodes"].as_array_mut().unwrap();
        let split = nodes.iter_mut().find(|n| n["feature"].as_i64() != Some(-1)).unwrap();
        split["left"] = serde_json::json!(100_000);
        let err = model_from_json::<f64>(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("dangling"), "{err}");
    }

    #[test]
    fn schema_hash_mismatch_is_corrupt() {
        let json = model_to_json(&trained()).unwrap();
        let bad = json.replace("\"task\": \"prevention\"", "\"task\": \"detection\"");
        assert!(matches!(model_from_json::<f64>(&bad), Err(Error::CorruptModel(_))));
    }

    #[test]
    fn loaded_prevention_model_rejects_detection_width() {
        let m: RandomForestModel<f64> = model_from_json(&model_to_json(&trained()).unwrap()).unwrap();
        assert!(matches!(
            m.predict(&[0.0; 7]),
            Err(Error::DimensionMismatch { expected: 6, found: 7 })
        ));
    }
}
