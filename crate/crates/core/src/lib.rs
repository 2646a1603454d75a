//! Attribute-oriented induction over a relational fact table.
//!
//! Concept hierarchies are stored as tables (one per concept tree) next to
//! the fact table, star-schema style. The engine generalizes the tuples of a
//! target class up those hierarchies, propagates votes, applies attribute
//! and relation thresholds, and emits characteristic or discriminant rules
//! with t-weights and d-weights. Every SQL-expressible stage can also be
//! generated as a `SELECT ... GROUP BY` statement and run through the
//! bundled SQL interpreter, which serves as an independent check of the
//! engine.

pub mod dataset;
pub mod error;
pub mod export;
pub mod hierarchy;
pub mod induction;
pub mod relation;
pub mod rules;
pub mod sample;
pub mod scalar;
pub mod sql;
pub mod sqlgen;
pub mod task;
pub mod validate;
pub mod value;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use hierarchy::{ConceptTree, HierarchySet, ANY};
pub use induction::{ClassifiedRelation, GeneralizedRelation, GeneralizedTuple};
pub use relation::{Database, Relation};
pub use task::{LearningTask, Mode};
pub use value::Value;
pub use scalar::WeightScalar;

/// Exact percentage used for t-weights and d-weights.
pub type Percent = num_rational::Ratio<i64>;
pub type ExactWeightedTuple = rules::WeightedTuple<Percent>;
pub type FloatWeightedTuple = rules::WeightedTuple<f64>;
