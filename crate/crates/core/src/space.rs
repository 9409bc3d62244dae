//! Rank-one compact symmetric spaces and the data of their restricted root
//! systems that enter the reduced flow equation.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The four families of rank-one symmetric spaces of compact type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpaceKind {
    /// Round sphere `S^n`.
    #[serde(rename = "sphere")]
    Sphere,
    /// Complex projective space `CP^{n/2}`.
    #[serde(rename = "cp")]
    ComplexProjective,
    /// Quaternionic projective space `HP^{n/4}`.
    #[serde(rename = "qp")]
    QuaternionicProjective,
    /// Cayley plane `OP^2`, always of dimension 16.
    #[serde(rename = "op2")]
    CayleyPlane,
}

impl SpaceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SpaceKind::Sphere => "sphere",
            SpaceKind::ComplexProjective => "cp",
            SpaceKind::QuaternionicProjective => "qp",
            SpaceKind::CayleyPlane => "op2",
        }
    }
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpaceError {
    #[error("dimension {n} incompatible with {kind}: {constraint}")]
    Dimension {
        kind: SpaceKind,
        n: usize,
        constraint: &'static str,
    },
    #[error("root scale lambda1 must be positive and finite, got {0}")]
    RootScale(f64),
}

/// Root data of a rank-one symmetric space `G/K`, together with the length
/// `L` of the reduced domain `[0, L]` on which the K-invariant profile lives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricSpace {
    kind: SpaceKind,
    n: usize,
    m_lambda: usize,
    m_2lambda: usize,
    lambda1: f64,
    length: f64,
}

impl SymmetricSpace {
    /// Builds the space of the given kind and dimension with root scale
    /// `lambda1 = λ(e₁⁰)`.
    pub fn new(kind: SpaceKind, n: usize, lambda1: f64) -> Result<Self, SpaceError> {
        let dim_err = |constraint| SpaceError::Dimension { kind, n, constraint };
        let (m_lambda, m_2lambda) = match kind {
            SpaceKind::Sphere => {
                if n < 2 {
                    return Err(dim_err("n >= 2"));
                }
                (n - 1, 0)
            }
            SpaceKind::ComplexProjective => {
                if !n.is_multiple_of(2) {
                    return Err(dim_err("n even"));
                }
                if n < 4 {
                    return Err(dim_err("n >= 4"));
                }
                (n - 2, 1)
            }
            SpaceKind::QuaternionicProjective => {
                if !n.is_multiple_of(4) {
                    return Err(dim_err("n divisible by 4"));
                }
                if n < 8 {
                    return Err(dim_err("n >= 8"));
                }
                (n - 4, 3)
            }
            SpaceKind::CayleyPlane => {
                if n != 16 {
                    return Err(dim_err("n = 16"));
                }
                (8, 7)
            }
        };
        if !(lambda1 > 0.0 && lambda1.is_finite()) {
            return Err(SpaceError::RootScale(lambda1));
        }
        let length = if m_2lambda > 0 {
            PI / (2.0 * lambda1)
        } else {
            PI / lambda1
        };
        Ok(SymmetricSpace {
            kind,
            n,
            m_lambda,
            m_2lambda,
            lambda1,
            length,
        })
    }

    /// Same as [`SymmetricSpace::new`] with the unit root scale.
    pub fn with_unit_scale(kind: SpaceKind, n: usize) -> Result<Self, SpaceError> {
        Self::new(kind, n, 1.0)
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    /// Dimension of `G/K`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Multiplicity of the root `λ`.
    pub fn m_lambda(&self) -> usize {
        self.m_lambda
    }

    /// Multiplicity of the root `2λ` (zero for spheres).
    pub fn m_2lambda(&self) -> usize {
        self.m_2lambda
    }

    /// The root value `λ(e₁⁰)` on the unit vector of the flat.
    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    /// Length `L` of the reduced domain.
    pub fn length(&self) -> f64 {
        self.length
    }
}
