//! Per-channel statistics and a CART decision tree.

mod features;
mod tree;

pub use features::{
    channel_features, extract_features, feature_matrix, feature_names, FeatureVector, FEATURES_PER_CHANNEL,
    FEATURE_KINDS,
};
pub use tree::{gini, tree_fit, DecisionTree, Node, TreeParams};
