//! Closed-form reference solutions used to generate boundary data and to
//! score estimates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::math::{Dim, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    /// `x` (2D interior).
    LinearX,
    /// `x² − y²` (2D interior).
    Saddle,
    /// `Re (x + iy)³ = x³ − 3xy²` (2D interior).
    Cubic,
    /// `x / r²` (2D exterior; decays like `1/r`).
    Dipole2,
    /// `x² + y² − 2z²` (3D interior).
    Saddle3,
    /// `xyz` (3D interior).
    Xyz,
    /// `z / r³` (3D exterior).
    Dipole3,
    /// `(x² + y²)/4`, solving `Δv = 1` (2D).
    Paraboloid,
}

pub const ALL_REFERENCES: [Reference; 8] = [
    Reference::LinearX,
    Reference::Saddle,
    Reference::Cubic,
    Reference::Dipole2,
    Reference::Saddle3,
    Reference::Xyz,
    Reference::Dipole3,
    Reference::Paraboloid,
];

#[derive(Debug, PartialEq, Eq)]
pub struct UnknownReference(pub String);

impl fmt::Display for UnknownReference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<&str> = ALL_REFERENCES.iter().map(|r| r.id()).collect();
        write!(f, "unknown reference id {:?} (known: {})", self.0, ids.join(", "))
    }
}

impl std::error::Error for UnknownReference {}

impl FromStr for Reference {
    type Err = UnknownReference;
    fn from_str(s: &str) -> Result<Self, UnknownReference> {
        ALL_REFERENCES
            .into_iter()
            .find(|r| r.id() == s)
            .ok_or_else(|| UnknownReference(s.to_string()))
    }
}

impl Reference {
    pub fn id(self) -> &'static str {
        match self {
            Reference::LinearX => "linear-x",
            Reference::Saddle => "saddle",
            Reference::Cubic => "cubic",
            Reference::Dipole2 => "dipole2",
            Reference::Saddle3 => "saddle3",
            Reference::Xyz => "xyz",
            Reference::Dipole3 => "dipole3",
            Reference::Paraboloid => "paraboloid",
        }
    }

    pub fn dim(self) -> Dim {
        match self {
            Reference::Saddle3 | Reference::Xyz | Reference::Dipole3 => Dim::Three,
            _ => Dim::Two,
        }
    }

    /// Constant source `b̄` with `Δv = b̄`, for Poisson references.
    pub fn source(self) -> Option<f64> {
        match self {
            Reference::Paraboloid => Some(1.0),
            _ => None,
        }
    }

    pub fn value(self, p: &Vec3) -> f64 {
        let (x, y, z) = (p.x, p.y, p.z);
        match self {
            Reference::LinearX => x,
            Reference::Saddle => x * x - y * y,
            Reference::Cubic => x * x * x - 3.0 * x * y * y,
            Reference::Dipole2 => x / (x * x + y * y),
            Reference::Saddle3 => x * x + y * y - 2.0 * z * z,
            Reference::Xyz => x * y * z,
            Reference::Dipole3 => z / p.norm().powi(3),
            Reference::Paraboloid => 0.25 * (x * x + y * y),
        }
    }

    pub fn gradient(self, p: &Vec3) -> Vec3 {
        let (x, y, z) = (p.x, p.y, p.z);
        match self {
            Reference::LinearX => Vec3::new(1.0, 0.0, 0.0),
            Reference::Saddle => Vec3::new(2.0 * x, -2.0 * y, 0.0),
            Reference::Cubic => Vec3::new(3.0 * (x * x - y * y), -6.0 * x * y, 0.0),
            Reference::Dipole2 => {
                let r2 = x * x + y * y;
                Vec3::new((y * y - x * x) / (r2 * r2), -2.0 * x * y / (r2 * r2), 0.0)
            }
            Reference::Saddle3 => Vec3::new(2.0 * x, 2.0 * y, -4.0 * z),
            Reference::Xyz => Vec3::new(y * z, x * z, x * y),
            Reference::Dipole3 => {
                let r2 = p.norm_squared();
                let r5 = r2 * r2 * r2.sqrt();
                Vec3::new(-3.0 * x * z / r5, -3.0 * y * z / r5, (r2 - 3.0 * z * z) / r5)
            }
            Reference::Paraboloid => Vec3::new(0.5 * x, 0.5 * y, 0.0),
        }
    }
}
