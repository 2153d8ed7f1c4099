//! Region resolution: explicit flag, then environment, then IP geolocation,
//! then a configured default aggregate.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{AggregateKind, DatasetSnapshot, GridError, RegionRecord};

pub const REGION_ENV_VAR: &str = "ENERGYUSAGE_REGION";
pub const DEFAULT_GEO_ENDPOINT: &str = "https://get.geojs.io";
pub const GEO_PATH: &str = "/v1/ip/geo.json";
pub const DEFAULT_GEO_TIMEOUT_S: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefaultRegion {
    World,
    Us,
    Europe,
}

impl DefaultRegion {
    pub fn aggregate(self) -> AggregateKind {
        match self {
            DefaultRegion::World => AggregateKind::WorldAverage,
            DefaultRegion::Us => AggregateKind::UsAverage,
            DefaultRegion::Europe => AggregateKind::EuropeAverage,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DefaultRegion::World => "world average",
            DefaultRegion::Us => "US average",
            DefaultRegion::Europe => "Europe average",
        }
    }
}

impl std::str::FromStr for DefaultRegion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "world" => Ok(DefaultRegion::World),
            "us" => Ok(DefaultRegion::Us),
            "europe" => Ok(DefaultRegion::Europe),
            other => Err(format!("`{other}` is not one of world, us, europe")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolutionMethod {
    ExplicitFlag,
    EnvVar,
    GeoIp,
    DefaultFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationResolution {
    pub region: RegionRecord,
    pub method: ResolutionMethod,
    pub detail: String,
}

/// The subset of a GeoJS-style response that region mapping needs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GeoResponse {
    pub country_code: Option<String>,
    pub region: Option<String>,
    #[serde(default)]
    pub country: Option<String>,
}

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("geolocation request failed: {0}")]
    Http(String),
    #[error("geolocation response was not valid JSON: {0}")]
    Malformed(String),
}

pub trait GeoLookup {
    fn lookup(&self) -> Result<GeoResponse, GeoError>;
}

pub struct HttpGeoLookup {
    pub endpoint: String,
    pub timeout: Duration,
}

impl Default for HttpGeoLookup {
    fn default() -> Self {
        HttpGeoLookup {
            endpoint: DEFAULT_GEO_ENDPOINT.into(),
            timeout: Duration::from_secs_f64(DEFAULT_GEO_TIMEOUT_S),
        }
    }
}

impl HttpGeoLookup {
    pub fn url(&self) -> String {
        format!("{}{GEO_PATH}", self.endpoint.trim_end_matches('/'))
    }
}

impl GeoLookup for HttpGeoLookup {
    fn lookup(&self) -> Result<GeoResponse, GeoError> {
        let agent = ureq::AgentBuilder::new().timeout(self.timeout).build();
        let response = agent
            .get(&self.url())
            .set("Accept", "application/json")
            .call()
            .map_err(|e| GeoError::Http(e.to_string()))?;
        let body = response
            .into_string()
            .map_err(|e| GeoError::Http(e.to_string()))?;
        serde_json::from_str(&body).map_err(|e| GeoError::Malformed(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocateOptions {
    /// `--location`.
    pub explicit: Option<String>,
    /// Value of the region environment variable, if set.
    pub env: Option<String>,
    pub default_choice: DefaultRegion,
    pub offline: bool,
}

impl Default for LocateOptions {
    fn default() -> Self {
        LocateOptions {
            explicit: None,
            env: None,
            default_choice: DefaultRegion::World,
            offline: false,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LocateError {
    #[error("--location: {0}")]
    Explicit(GridError),
    #[error("{REGION_ENV_VAR}: {0}")]
    Env(GridError),
}

/// Map a geolocation answer onto a snapshot region. US answers resolve to
/// the state, or to the US average when the state is missing or unknown.
pub fn region_from_geo<'a>(
    snapshot: &'a DatasetSnapshot,
    geo: &GeoResponse,
) -> Option<&'a RegionRecord> {
    let code = geo.country_code.as_deref()?.trim();
    if code.eq_ignore_ascii_case("US") {
        let state = geo
            .region
            .as_deref()
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .and_then(|name| {
                snapshot.regions().iter().find(|r| {
                    r.kind == crate::grid::RegionKind::UsState
                        && r.display_name.eq_ignore_ascii_case(name)
                })
            });
        return Some(state.unwrap_or_else(|| snapshot.aggregate(AggregateKind::UsAverage)));
    }
    snapshot
        .regions()
        .iter()
        .find(|r| r.kind == crate::grid::RegionKind::Country && r.id.eq_ignore_ascii_case(code))
}

fn describe(geo: &GeoResponse) -> String {
    format!(
        "geolocation: country_code={}, region={}",
        geo.country_code.as_deref().unwrap_or("?"),
        geo.region.as_deref().unwrap_or("?")
    )
}

/// Resolve the region to price emissions in. Only a bad explicit key (flag
/// or environment) is an error; every other path ends in a region.
pub fn resolve_location(
    options: &LocateOptions,
    snapshot: &DatasetSnapshot,
    geo: &dyn GeoLookup,
) -> Result<LocationResolution, LocateError> {
    if let Some(key) = options.explicit.as_deref() {
        let region = snapshot.lookup_region(key).map_err(LocateError::Explicit)?;
        return Ok(LocationResolution {
            region: region.clone(),
            method: ResolutionMethod::ExplicitFlag,
            detail: format!("--location {key}"),
        });
    }
    if let Some(key) = options.env.as_deref().filter(|k| !k.trim().is_empty()) {
        let region = snapshot.lookup_region(key).map_err(LocateError::Env)?;
        return Ok(LocationResolution {
            region: region.clone(),
            method: ResolutionMethod::EnvVar,
            detail: format!("{REGION_ENV_VAR}={key}"),
        });
    }
    let fallback = |detail: String| LocationResolution {
        region: snapshot
            .aggregate(options.default_choice.aggregate())
            .clone(),
        method: ResolutionMethod::DefaultFallback,
        detail,
    };
    if options.offline {
        return Ok(fallback("offline; geolocation skipped".into()));
    }
    Ok(match geo.lookup() {
        Ok(answer) => match region_from_geo(snapshot, &answer) {
            Some(region) => LocationResolution {
                region: region.clone(),
                method: ResolutionMethod::GeoIp,
                detail: describe(&answer),
            },
            None => fallback(format!("{} (no matching region)", describe(&answer))),
        },
        Err(e) => fallback(e.to_string()),
    })
}
