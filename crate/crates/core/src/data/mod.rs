//! Household power-consumption ingestion, windowing and client partitioning.

pub mod partition;
pub mod prepare;
pub mod series;
pub mod synthetic;
pub mod uci;

pub use partition::{partition, ClientPartition, PartitionMode, PartitionSpec};
pub use prepare::{prepare, ForecastData};
pub use series::{denormalize, make_windows, normalize, NormalizationStats, SlidingWindowDataset, Window, WINDOW_LEN};
pub use uci::{hourly_means, impute_missing, parse_uci_household, Feature, RawRecord};
