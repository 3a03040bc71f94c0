//! Datasets: generation, embedding, CSV persistence, splits, scoring.

mod csv;
mod dataset;
mod mackey_glass;

pub use csv::{format_csv, load_csv, parse_csv, write_csv};
pub use dataset::{
    embed_series, normalize_minmax, rmse, split, Dataset, NormParams, SplitSpec,
};
pub use mackey_glass::{gen_mackey_glass, MackeyGlassConfig};
