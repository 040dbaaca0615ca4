//! Feature attribution: RBF ε-SVR surrogate, exact Shapley values and
//! importance-based feature selection.

mod select;
mod shapley;
mod svr;

pub use select::{select_features, SelectionRule};
pub use shapley::{
    coalition_values, explain, global_importance, shapley_from_values, shapley_values, ShapleyAttribution,
    MAX_EXACT_FEATURES,
};
pub use svr::{rbf, train_svr, train_svr_traced, SmoTrace, SvrModel, SvrParams};
