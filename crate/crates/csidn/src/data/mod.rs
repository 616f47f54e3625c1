//! Synthetic data generation, label corruption, pseudo-labelling, and CSV
//! persistence.

pub mod circles;
pub mod csv_io;
pub mod dataset;
pub mod noise;
pub mod pseudo;

pub use circles::CirclesSpec;
pub use csv_io::{read_csv, write_csv};
pub use dataset::{Dataset, LabeledPoint};
pub use noise::{
    compute_confidence, corrupt, idn_flip_prob, ConfidenceMode, FlipLaw, NoiseKind, NoiseSpec,
};
pub use pseudo::{pseudo_label_pipeline, PseudoLabelOutcome, PseudoLabelReport};
