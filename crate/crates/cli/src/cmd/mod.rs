pub mod composite;
pub mod cot;
pub mod metrics;
pub mod rank;
