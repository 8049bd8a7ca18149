//! Monomial bases, Gram matching and dsos/sdsos/sos certificates.
//!
//! A polynomial `p` is dsos (sdsos, sos) when `p = zᵀ Q z` for a monomial
//! vector `z` and a Gram matrix `Q` that is diagonally dominant (scaled
//! diagonally dominant, psd). Convexity is certified through the Hessian form
//! `yᵀ H_p(x) y` over the tensor basis `y ⊗ z`.

mod check;
mod gram;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::conic::MatrixCone;
use crate::poly::{exponents_of_degree, exponents_up_to_degree, Exponent};

pub use self::check::{
    check_convexity, check_membership, convexity_basis, family_polynomial,
    quadratic_dcd_check, quadratic_dcd_check_f64, scan_csv, scan_parametric_family, GridRange,
    ScanPoint,
};
pub use self::gram::{gram_equalities, gram_expansion, GramCertificate, LinPoly};

/// Certificate strength, ordered by cone inclusion (`Dsos ⊆ Sdsos ⊆ Sos`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvexityCone {
    Dsos,
    Sdsos,
    Sos,
}

impl ConvexityCone {
    pub const ALL: [ConvexityCone; 3] = [ConvexityCone::Dsos, ConvexityCone::Sdsos, ConvexityCone::Sos];

    /// Gram-matrix cone realizing this level.
    pub fn matrix_cone(self) -> MatrixCone {
        match self {
            ConvexityCone::Dsos => MatrixCone::Dd,
            ConvexityCone::Sdsos => MatrixCone::Sdd,
            ConvexityCone::Sos => MatrixCone::Psd,
        }
    }

    pub fn from_matrix_cone(c: MatrixCone) -> Self {
        match c {
            MatrixCone::Dd => ConvexityCone::Dsos,
            MatrixCone::Sdd => ConvexityCone::Sdsos,
            MatrixCone::Psd => ConvexityCone::Sos,
        }
    }
}

impl fmt::Display for ConvexityCone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConvexityCone::Dsos => "dsos",
            ConvexityCone::Sdsos => "sdsos",
            ConvexityCone::Sos => "sos",
        })
    }
}

impl FromStr for ConvexityCone {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "dsos" => Ok(ConvexityCone::Dsos),
            "sdsos" => Ok(ConvexityCone::Sdsos),
            "sos" => Ok(ConvexityCone::Sos),
            _ => Err(format!("unknown cone {s:?} (expected dsos, sdsos or sos)")),
        }
    }
}

/// Monomials in `n` variables of degree exactly `d` (homogeneous) or at most
/// `d`, in graded-lex order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialBasis {
    pub n: usize,
    pub d: u32,
    pub homogeneous: bool,
    pub monomials: Vec<Exponent>,
}

impl MonomialBasis {
    pub fn new(n: usize, d: u32, homogeneous: bool) -> Self {
        let monomials = if homogeneous {
            exponents_of_degree(n, d)
        } else {
            exponents_up_to_degree(n, d)
        };
        MonomialBasis {
            n,
            d,
            homogeneous,
            monomials,
        }
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }
}

/// Alias matching the usual name of the constructor.
pub fn build_basis(n: usize, d: u32, homogeneous: bool) -> MonomialBasis {
    MonomialBasis::new(n, d, homogeneous)
}

/// `y ⊗ z(x)`: pairs `(k, m)` standing for `y_k · x^m`, ordered by `k` first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorBasis {
    pub base: MonomialBasis,
    pub monomials: Vec<(usize, Exponent)>,
}

impl TensorBasis {
    pub fn new(base: MonomialBasis) -> Self {
        let monomials = (0..base.n)
            .flat_map(|k| base.monomials.iter().map(move |m| (k, m.clone())))
            .collect();
        TensorBasis { base, monomials }
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    /// Position of `y_k x^m`, if present.
    pub fn index_of(&self, k: usize, m: &Exponent) -> Option<usize> {
        let j = self.base.monomials.binary_search(m).ok()?;
        (k < self.base.n).then_some(k * self.base.len() + j)
    }
}

/// Basis of a Gram representation: plain monomials for `p(x)`, tensor
/// monomials for Hessian forms in `(x, y)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GramBasis {
    Monomial(MonomialBasis),
    Tensor(TensorBasis),
}

impl GramBasis {
    pub fn len(&self) -> usize {
        match self {
            GramBasis::Monomial(b) => b.len(),
            GramBasis::Tensor(b) => b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Variable count of the represented polynomial (`n`, or `2n` for tensors).
    pub fn poly_vars(&self) -> usize {
        match self {
            GramBasis::Monomial(b) => b.n,
            GramBasis::Tensor(b) => 2 * b.base.n,
        }
    }

    /// Exponent of the `i`-th basis element in the represented polynomial's
    /// variables.
    pub fn element(&self, i: usize) -> Exponent {
        match self {
            GramBasis::Monomial(b) => b.monomials[i].clone(),
            GramBasis::Tensor(b) => {
                let (k, m) = &b.monomials[i];
                m.concat(&Exponent::unit(b.base.n, *k))
            }
        }
    }

    pub fn elements(&self) -> Vec<Exponent> {
        (0..self.len()).map(|i| self.element(i)).collect()
    }

    /// Structural checks for decoded bases: exponent lengths and degrees
    /// match the header, monomials are strictly increasing, and tensor
    /// elements follow the `(k, m)` layout.
    pub fn validate(&self) -> std::result::Result<(), String> {
        match self {
            GramBasis::Monomial(b) => b.validate(),
            GramBasis::Tensor(t) => {
                t.base.validate()?;
                let expected = t.base.n.checked_mul(t.base.len()).ok_or("tensor basis too large")?;
                if t.monomials.len() != expected {
                    return Err(format!("tensor basis has {} elements, expected {expected}", t.monomials.len()));
                }
                let layout = (0..t.base.n).flat_map(|k| t.base.monomials.iter().map(move |m| (k, m)));
                if t.monomials.iter().zip(layout).any(|((k, m), (k2, m2))| *k != k2 || m != m2) {
                    return Err("tensor basis is not ordered by (k, m)".into());
                }
                Ok(())
            }
        }
    }
}

impl MonomialBasis {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.d > u32::MAX / 2 {
            return Err(format!("basis degree {} is too large", self.d));
        }
        for m in &self.monomials {
            if m.len() != self.n {
                return Err(format!("basis monomial {m:?} has length {}, expected {}", m.len(), self.n));
            }
            let deg: u64 = m.powers().iter().map(|&p| u64::from(p)).sum();
            let ok = if self.homogeneous {
                deg == u64::from(self.d)
            } else {
                deg <= u64::from(self.d)
            };
            if !ok {
                return Err(format!("basis monomial {m:?} does not fit degree {}", self.d));
            }
        }
        if self.monomials.windows(2).any(|w| w[0] >= w[1]) {
            return Err("basis monomials are not strictly increasing".into());
        }
        Ok(())
    }
}
