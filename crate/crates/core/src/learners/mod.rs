//! Tree learners: gradient boosting, random forest, and model selection.

pub mod cv;
pub mod forest;
pub mod gbt;
pub mod split;

pub use cv::{default_pure_grid, grid_search_cv, stratified_folds, GridSearchResult};
pub use forest::{predict_rf, train_rf, ForestModel, RfParams};
pub use gbt::{
    grow_tree, train_gbt, train_gbt_monitored, GbtModel, GbtParams, Node, Objective, TrainMonitor,
    Tree, TreeEvent,
};
pub use split::{
    find_best_split, leaf_weight, logistic_grad_hess, split_gain, GradPair, SplitCandidate,
    SplitParams,
};
