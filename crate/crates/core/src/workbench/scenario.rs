//! Scenario files: JSON with `"schema": 1`, a construction `kind` and its
//! parameters. Unknown fields are rejected.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::hamiltonian::{ExprField, HamiltonianFlags, TimeDepHamiltonian};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SAMPLES: usize = 2000;
pub const DEFAULT_SEED: u64 = 1;

/// A Hamiltonian given as an expression over `x1, y1, …` and `s`, with the
/// box carrying its support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSpec {
    pub expr: String,
    pub support_lo: Vec<f64>,
    pub support_hi: Vec<f64>,
    #[serde(default)]
    pub periodic: bool,
    #[serde(default)]
    pub vanishing_radius: Option<f64>,
    #[serde(default)]
    pub normalized: bool,
}

impl HamiltonianSpec {
    pub fn build(&self) -> Result<TimeDepHamiltonian> {
        let dim = self.support_lo.len();
        let expr = Expr::parse(&self.expr, dim)?;
        TimeDepHamiltonian::new(
            Arc::new(ExprField { expr }),
            self.support_lo.clone(),
            self.support_hi.clone(),
            HamiltonianFlags {
                periodic: self.periodic,
                vanishing_radius: self.vanishing_radius,
                normalized: self.normalized,
            },
        )
    }
}

fn default_points() -> usize {
    11
}

fn default_variant() -> String {
    "Z".into()
}

fn default_iterates() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Construction {
    /// `B^{2n+2}(C) ↪ N(Z_{C,c})`.
    Lisa {
        big: f64,
        small: f64,
        n: usize,
        #[serde(default)]
        margin: Option<f64>,
    },
    /// Square translation of `B²(c)` glued into a `Z` or `W` skeleton.
    ZAssembly {
        #[serde(default = "default_variant")]
        variant: String,
        c: f64,
        eps: f64,
    },
    /// The ball spread along `Y_N(κ)` by a strip translation of speed `nu`,
    /// or by the given Hamiltonian.
    Unwrapped {
        kappa: f64,
        n: usize,
        #[serde(default)]
        nu: Option<f64>,
        #[serde(default)]
        mu: Option<f64>,
        #[serde(default)]
        hamiltonian: Option<HamiltonianSpec>,
    },
    /// The wrapped ball for a disjoining translation of energy `e`; with
    /// `counterfactual` the disjoiner is the compressing pseudo-isotopy.
    Wrapped {
        kappa: f64,
        e: f64,
        n: usize,
        eps: f64,
        #[serde(default)]
        counterfactual: bool,
    },
    UnwrapFamily {
        lambda: f64,
        eps: f64,
        delta: f64,
        n: usize,
        #[serde(default = "default_points")]
        points: usize,
    },
    RegisoFamily {
        lambda: f64,
        eps: f64,
        delta: f64,
        n: usize,
        #[serde(default = "default_points")]
        points: usize,
    },
    /// Displacement of `B(capacity)` around `center` by the Hamiltonian.
    DisjunctionCertificate {
        hamiltonian: HamiltonianSpec,
        capacity: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default = "default_iterates")]
        iterates: usize,
        #[serde(default)]
        delta: Option<f64>,
    },
}

impl Construction {
    pub fn kind(&self) -> &'static str {
        match self {
            Construction::Lisa { .. } => "lisa",
            Construction::ZAssembly { .. } => "z-assembly",
            Construction::Unwrapped { .. } => "unwrapped",
            Construction::Wrapped { .. } => "wrapped",
            Construction::UnwrapFamily { .. } => "unwrap-family",
            Construction::RegisoFamily { .. } => "regiso-family",
            Construction::DisjunctionCertificate { .. } => "disjunction-certificate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub name: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub samples: Option<usize>,
    pub construction: Construction,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn samples(&self) -> usize {
        self.samples.unwrap_or(DEFAULT_SAMPLES)
    }

    /// Checks that do not need a construction: version, signs, counts.
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::input(format!("unsupported schema {}, expected {SCHEMA_VERSION}", self.schema)));
        }
        if self.samples == Some(0) {
            return Err(Error::input("samples must be positive"));
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::input(format!("{name} must be positive, got {v}")))
            }
        };
        let count = |name: &str, v: usize, min: usize| {
            if v >= min {
                Ok(())
            } else {
                Err(Error::input(format!("{name} must be at least {min}, got {v}")))
            }
        };
        match &self.construction {
            Construction::Lisa { big, small, n, .. } => {
                positive("big", *big)?;
                positive("small", *small)?;
                count("n", *n, 1)
            }
            Construction::ZAssembly { variant, c, eps } => {
                if variant != "Z" && variant != "W" {
                    return Err(Error::input(format!("variant must be \"Z\" or \"W\", got {variant:?}")));
                }
                positive("c", *c)?;
                positive("eps", *eps)
            }
            Construction::Unwrapped { kappa, n, nu, hamiltonian, .. } => {
                positive("kappa", *kappa)?;
                count("n", *n, 1)?;
                if nu.is_some() == hamiltonian.is_some() {
                    return Err(Error::input("give exactly one of nu and hamiltonian"));
                }
                Ok(())
            }
            Construction::Wrapped { kappa, e, n, eps, .. } => {
                positive("kappa", *kappa)?;
                positive("e", *e)?;
                positive("eps", *eps)?;
                count("n", *n, 1)
            }
            Construction::UnwrapFamily { lambda, eps, delta, n, points } | Construction::RegisoFamily { lambda, eps, delta, n, points } => {
                positive("lambda", *lambda)?;
                positive("eps", *eps)?;
                positive("delta", *delta)?;
                count("n", *n, 2)?;
                count("points", *points, 2)
            }
            Construction::DisjunctionCertificate { hamiltonian, capacity, center, iterates, .. } => {
                positive("capacity", *capacity)?;
                count("iterates", *iterates, 1)?;
                if let Some(c) = center {
                    if c.len() != hamiltonian.support_lo.len() {
                        return Err(Error::input("center and support box differ in dimension"));
                    }
                }
                hamiltonian.build().map(|_| ())
            }
        }
    }
}
