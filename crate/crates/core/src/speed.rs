use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedMethod {
    /// Bisection on the sign of `min G_c`.
    SharpVariational,
    /// Long-time slope of the forced curvature graph flow.
    SharpDynamic,
    /// Bisection on the pinned-relaxation drift of the weighted gradient flow.
    DiffuseVariational,
    /// Slope of the leading edge of the reaction-diffusion solution.
    DiffuseDynamic,
}

/// A selected wave speed with its provenance and numerical diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedResult {
    pub c: f64,
    pub method: SpeedMethod,
    pub bracket: Option<(f64, f64)>,
    /// Half bracket width for bisections, slope standard error for fits.
    pub residual: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

impl SpeedResult {
    pub fn new(c: f64, method: SpeedMethod, residual: f64) -> Self {
        Self {
            c,
            method,
            bracket: None,
            residual,
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }
}
