//! Mining developer-communication streams for build-outcome prediction.
//!
//! Work-item records are turned into a directed communication network per
//! build, summarised by fifteen social-network metrics, and fed in
//! chronological order to incremental learners:
//!
//! * [`hoeffding`]: a Hoeffding tree with per-node [`adwin`] drift detectors,
//! * [`knn`]: a streaming k-nearest-neighbour baseline,
//!
//! evaluated prequentially (test, then train) by [`stream`].

pub mod adwin;
pub mod commgraph;
pub mod error;
pub mod hoeffding;
pub mod io;
pub mod knn;
pub mod records;
pub mod stream;

pub use adwin::{Adwin, DriftSignal};
pub use commgraph::{build_graph, feature_vector, CommGraph, FeatureVector, FEATURE_NAMES};
pub use error::{Error, Result};
pub use hoeffding::{HoeffdingTree, TreeParams, VoteReport};
pub use knn::KnnModel;
pub use records::{BuildKind, BuildRecord, ContributorId, Outcome, WorkItemRecord};
pub use stream::{ConfusionMatrix, Instance, PrequentialLog, StreamClassifier};
