//! Monte-Carlo conflict resolution: clustered states, episode returns,
//! averaged action values and a Normal-tail ε-greedy policy.

mod cluster;
mod features;
pub mod persist;
mod policy;
mod resolver;
mod returns;
mod table;

pub use cluster::{
    assign_cluster, fit_clusters, kmeans_pp_init, lloyd, nearest, sq_dist, ClusterError,
    ClusterModel, ClusterTurn, KMeans, NormParams,
};
pub use features::{
    build_feature_vector, FeatureDef, FeatureError, FeatureSchema, FeatureValue, FeatureVector,
};
pub use policy::{
    action_probabilities, limit, policy_params, right_tail, sample_index, select_action,
    ActionParams, PolicyParams, SIGMA_FLOOR, UNSEEN,
};
pub use resolver::{EpsilonSchedule, PolicyResolver};
pub use returns::{
    cluster_runs, episode_return, episode_returns, state_return, update_cluster_turns,
    EpisodeReturns, ReturnError,
};
pub use table::{ActionStats, ClusterStats, StateActionTable};
