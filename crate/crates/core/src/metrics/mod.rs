//! Availability, volatility, consistency and organization reports.

pub mod availability;
pub mod consistency;
pub mod org;
pub mod volatility;

pub use availability::{
    availability, AvailabilityOptions, AvailabilityReport, Cell, MarketAvailability,
};
pub use consistency::{
    consistency, cross_market, similarity_bin, within_app_consistency, within_market_consistency,
    ConsistencyReport, CrossMarket, CrossMarketOptions, MarketPairRow, WithinApp, WithinMarket,
};
pub use org::{org_report, OrgReport, OrgRow};
pub use volatility::{
    classify_certificates, classify_signal, classify_value, is_reverted, volatility,
    volatility_of_pairs, CertChange, ValueChange, VolatilityOptions, VolatilityReport,
};

pub const REPORT_FORMAT_VERSION: u32 = 1;
