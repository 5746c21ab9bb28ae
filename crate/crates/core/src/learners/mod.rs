//! Decision trees, the bagged random forest, and a logistic-regression baseline.

mod forest;
mod logistic;
mod model_file;
mod tree;

pub use forest::{fit_forest, fit_forest_with, ForestParams, RandomForestModel};
pub use logistic::{fit_logistic, LogisticModel, LogisticParams};
pub use model_file::{load_model, model_from_json, model_id, model_to_json, save_model, FORMAT_VERSION};
pub use tree::{best_split, fit_tree, Split, TreeNode};

/// Largest node size for which split scoring stays exact in 128-bit integers.
pub const MAX_TRAINING_SAMPLES: usize = 1 << 20;

/// `ceil(sqrt(d))`, the default number of candidate features per split.
pub fn default_features_per_split(n_features: usize) -> usize {
    let mut k = 0;
    while k * k < n_features {
        k += 1;
    }
    k.max(1)
}
