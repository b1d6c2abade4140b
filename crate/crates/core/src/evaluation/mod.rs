//! Run scoring, concept-bias rates, the Hearst baseline, and attention dumps.

pub mod attention;
pub mod bias;
pub mod hearst;
pub mod metrics;

pub use attention::{abstract_token_mass, cls_attention_distribution, AttentionSource, TokenWeight};
pub use bias::{bias_map, bias_map_csv, bias_rate, BiasEntity, BiasReport, SubConcepts};
pub use hearst::{hearst_extract, Language};
pub use metrics::{parse_predictions, pooled_nc_total, review_csv, score_group, score_run, EntityPrediction, GoldEntry, GoldIndex, ScoredRun};
