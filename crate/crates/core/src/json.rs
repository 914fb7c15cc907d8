//! JSON schemas for every value crossing the CLI boundary (`f64`).
//!
//! Matrices are `{"q", "re": [[..]], "im": [[..]]}` row-major with
//! hermiticity validated on load. The index ordering of moment sequences
//! is carried by the explicit `alpha` lists, so files stay portable.

use serde::{Deserialize, Serialize};

use crate::cmat::CMat;
use crate::extract::CoordAtom;
use crate::functional::{Atom, AtomicMeasure, MatrixMomentFunctional, MomentFunctional};
use crate::herm::HermMat;
use crate::scalar::C;
use crate::space::{
    lift_scalar_space, FiniteSpace, MatrixFunctionSpace, Point, ScalarSpace, UnitElement,
};
use crate::spectra::{Halfspace, Pin};
use crate::transport::PositiveMap;
use crate::JsonError;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct HermMatJson {
    pub q: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl HermMatJson {
    pub fn from_core(m: &HermMat<f64>) -> Self {
        let q = m.dim();
        Self {
            q,
            re: (0..q)
                .map(|i| (0..q).map(|j| m.get(i, j).re).collect())
                .collect(),
            im: (0..q)
                .map(|i| (0..q).map(|j| m.get(i, j).im).collect())
                .collect(),
        }
    }

    pub fn to_core(&self) -> Result<HermMat<f64>, JsonError> {
        if self.re.len() != self.q
            || self.im.len() != self.q
            || self.re.iter().chain(self.im.iter()).any(|r| r.len() != self.q)
        {
            return Err(JsonError::Schema("matrix grid shape mismatch".into()));
        }
        let m = CMat::from_fn(self.q, self.q, |i, j| C::new(self.re[i][j], self.im[i][j]));
        Ok(HermMat::new(m)?)
    }
}

/// General complex matrix (Kraus factors).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CMatJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl CMatJson {
    pub fn from_core(m: &CMat<f64>) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            re: (0..m.rows())
                .map(|i| (0..m.cols()).map(|j| m[(i, j)].re).collect())
                .collect(),
            im: (0..m.rows())
                .map(|i| (0..m.cols()).map(|j| m[(i, j)].im).collect())
                .collect(),
        }
    }

    pub fn to_core(&self) -> Result<CMat<f64>, JsonError> {
        if self.re.len() != self.rows
            || self.im.len() != self.rows
            || self
                .re
                .iter()
                .chain(self.im.iter())
                .any(|r| r.len() != self.cols)
        {
            return Err(JsonError::Schema("matrix grid shape mismatch".into()));
        }
        Ok(CMat::from_fn(self.rows, self.cols, |i, j| {
            C::new(self.re[i][j], self.im[i][j])
        }))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PointJson {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<f64>>,
}

/// A matrix function space: per-point tables for each basis element.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SpaceJson {
    pub q: usize,
    pub points: Vec<PointJson>,
    /// `basis[i][k]` = value of basis element `i` at point `k`.
    pub basis: Vec<Vec<HermMatJson>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit: Option<UnitJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct UnitJson {
    pub coeffs: Vec<f64>,
    pub epsilon: f64,
}

impl SpaceJson {
    pub fn from_core(s: &MatrixFunctionSpace<f64>) -> Self {
        Self {
            q: s.q(),
            points: s
                .space
                .points()
                .iter()
                .map(|p| PointJson {
                    label: p.label.clone(),
                    coords: p.coords.clone(),
                })
                .collect(),
            basis: s
                .basis()
                .iter()
                .map(|table| table.iter().map(HermMatJson::from_core).collect())
                .collect(),
            unit: s.unit().map(|u| UnitJson {
                coeffs: u.coeffs.clone(),
                epsilon: u.epsilon,
            }),
        }
    }

    pub fn to_core(&self) -> Result<MatrixFunctionSpace<f64>, JsonError> {
        let fs = FiniteSpace::new(
            self.points
                .iter()
                .map(|p| Point {
                    label: p.label.clone(),
                    coords: p.coords.clone(),
                })
                .collect(),
        )?;
        let basis = self
            .basis
            .iter()
            .map(|t| t.iter().map(|m| m.to_core()).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        let unit = self.unit.as_ref().map(|u| UnitElement {
            coeffs: u.coeffs.clone(),
            epsilon: u.epsilon,
        });
        Ok(MatrixFunctionSpace::new(fs, self.q, basis, unit)?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FunctionalJson {
    pub values: Vec<f64>,
}

impl FunctionalJson {
    pub fn from_core(l: &MomentFunctional<f64>) -> Self {
        Self {
            values: l.values.clone(),
        }
    }

    pub fn to_core(&self) -> MomentFunctional<f64> {
        MomentFunctional::new(self.values.clone())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MeasureJson {
    pub atoms: Vec<AtomJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AtomJson {
    pub point: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<f64>>,
    pub mass: HermMatJson,
}

impl MeasureJson {
    pub fn from_core(m: &AtomicMeasure<f64>) -> Self {
        Self {
            atoms: m
                .atoms
                .iter()
                .map(|a| AtomJson {
                    point: a.point.clone(),
                    coords: None,
                    mass: HermMatJson::from_core(&a.mass),
                })
                .collect(),
        }
    }

    pub fn from_coord_atoms(atoms: &[CoordAtom<f64>]) -> Self {
        Self {
            atoms: atoms
                .iter()
                .enumerate()
                .map(|(i, a)| AtomJson {
                    point: format!("x{}", i + 1),
                    coords: Some(a.coords.clone()),
                    mass: HermMatJson::from_core(&a.mass),
                })
                .collect(),
        }
    }

    pub fn to_core(&self) -> Result<AtomicMeasure<f64>, JsonError> {
        Ok(AtomicMeasure::new(
            self.atoms
                .iter()
                .map(|a| {
                    Ok(Atom {
                        point: a.point.clone(),
                        mass: a.mass.to_core()?,
                    })
                })
                .collect::<Result<Vec<_>, JsonError>>()?,
        )?)
    }

    pub fn to_coord_atoms(&self) -> Result<Vec<CoordAtom<f64>>, JsonError> {
        self.atoms
            .iter()
            .map(|a| {
                Ok(CoordAtom {
                    coords: a
                        .coords
                        .clone()
                        .ok_or_else(|| JsonError::Schema(format!("atom {} has no coords", a.point)))?,
                    mass: a.mass.to_core()?,
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MomentSequenceJson {
    pub d: usize,
    pub q: usize,
    #[serde(rename = "N")]
    pub degree: usize,
    pub moments: Vec<MomentEntryJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MomentEntryJson {
    pub alpha: Vec<usize>,
    #[serde(rename = "S")]
    pub value: HermMatJson,
}

impl MomentSequenceJson {
    pub fn from_core(s: &crate::hankel::MomentSequence<f64>) -> Self {
        Self {
            d: s.d(),
            q: s.q(),
            degree: s.degree(),
            moments: s
                .entries()
                .map(|(alpha, m)| MomentEntryJson {
                    alpha: alpha.clone(),
                    value: HermMatJson::from_core(m),
                })
                .collect(),
        }
    }

    pub fn to_core(&self) -> Result<crate::hankel::MomentSequence<f64>, JsonError> {
        let entries = self
            .moments
            .iter()
            .map(|e| Ok((e.alpha.clone(), e.value.to_core()?)))
            .collect::<Result<Vec<_>, JsonError>>()?;
        crate::hankel::MomentSequence::new(self.d, self.q, self.degree, entries)
            .map_err(|e| JsonError::Schema(e.to_string()))
    }
}

/// A full mass/existence problem: space + target functional, with optional
/// pins, halfspaces and a candidate matrix for membership queries.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ProblemJson {
    pub space: SpaceJson,
    pub functional: FunctionalJson,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pins: Vec<PinJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub halfspaces: Vec<HalfspaceJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate: Option<HermMatJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<HermMatJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PinJson {
    pub point: String,
    pub mass: HermMatJson,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct HalfspaceJson {
    pub point: String,
    pub direction: HermMatJson,
    pub bound: f64,
}

impl ProblemJson {
    pub fn pins_core(&self) -> Result<Vec<Pin<f64>>, JsonError> {
        self.pins
            .iter()
            .map(|p| {
                Ok(Pin {
                    point: p.point.clone(),
                    mass: p.mass.to_core()?,
                })
            })
            .collect()
    }

    pub fn halfspaces_core(&self) -> Result<Vec<Halfspace<f64>>, JsonError> {
        self.halfspaces
            .iter()
            .map(|h| {
                Ok(Halfspace {
                    point: h.point.clone(),
                    direction: h.direction.to_core()?,
                    bound: h.bound,
                })
            })
            .collect()
    }
}

/// A matrix moment functional `L` over a scalar space given by tables.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MatrixFunctionalJson {
    pub q: usize,
    pub points: Vec<PointJson>,
    /// `tables[i][k]` = value of scalar basis function `i` at point `k`.
    pub tables: Vec<Vec<f64>>,
    pub contains_one: bool,
    pub values: Vec<HermMatJson>,
}

impl MatrixFunctionalJson {
    pub fn from_core(e: &ScalarSpace<f64>, l: &MatrixMomentFunctional<f64>) -> Self {
        Self {
            q: l.q,
            points: e
                .space
                .points()
                .iter()
                .map(|p| PointJson {
                    label: p.label.clone(),
                    coords: p.coords.clone(),
                })
                .collect(),
            tables: e.tables().to_vec(),
            contains_one: e.contains_one(),
            values: l.values.iter().map(HermMatJson::from_core).collect(),
        }
    }

    pub fn to_core(&self) -> Result<(ScalarSpace<f64>, MatrixMomentFunctional<f64>), JsonError> {
        let fs = FiniteSpace::new(
            self.points
                .iter()
                .map(|p| Point {
                    label: p.label.clone(),
                    coords: p.coords.clone(),
                })
                .collect(),
        )?;
        let e = ScalarSpace::new(fs, self.tables.clone(), self.contains_one)?;
        let l = MatrixMomentFunctional::new(
            self.q,
            self.values
                .iter()
                .map(|m| m.to_core())
                .collect::<Result<Vec<_>, _>>()?,
        )?;
        if l.values.len() != e.dim() {
            return Err(JsonError::Schema(
                "value count does not match basis size".into(),
            ));
        }
        Ok((e, l))
    }

    /// The lifted space of the scalar domain.
    pub fn lift(&self) -> Result<MatrixFunctionSpace<f64>, JsonError> {
        let (e, _) = self.to_core()?;
        Ok(lift_scalar_space(&e, self.q)?)
    }
}

/// A positive map in Kraus form.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MapJson {
    pub q: usize,
    pub p: usize,
    pub kraus: Vec<CMatJson>,
    #[serde(default)]
    pub transpose_first: bool,
}

impl MapJson {
    pub fn from_core(m: &PositiveMap<f64>) -> Self {
        Self {
            q: m.source_dim(),
            p: m.target_dim(),
            kraus: m.kraus().iter().map(CMatJson::from_core).collect(),
            transpose_first: m.transpose_first(),
        }
    }

    pub fn to_core(&self) -> Result<PositiveMap<f64>, JsonError> {
        let kraus = self
            .kraus
            .iter()
            .map(|k| k.to_core())
            .collect::<Result<Vec<_>, _>>()?;
        PositiveMap::new(self.q, self.p, kraus, self.transpose_first)
            .map_err(|e| JsonError::Schema(e.to_string()))
    }
}

/// A homogeneous matrix polynomial in apolar coefficients.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PolyJson {
    pub d: usize,
    pub m: usize,
    pub q: usize,
    pub coeffs: Vec<PolyCoeffJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PolyCoeffJson {
    pub alpha: Vec<usize>,
    #[serde(rename = "A")]
    pub value: HermMatJson,
}

impl PolyJson {
    pub fn from_core(p: &crate::apolar::MatHomPoly<f64>) -> Self {
        Self {
            d: p.d(),
            m: p.degree(),
            q: p.q(),
            coeffs: p
                .indices()
                .iter()
                .zip(p.apolar_coeffs())
                .map(|(alpha, a)| PolyCoeffJson {
                    alpha: alpha.clone(),
                    value: HermMatJson::from_core(a),
                })
                .collect(),
        }
    }

    pub fn to_core(&self) -> Result<crate::apolar::MatHomPoly<f64>, JsonError> {
        let entries = self
            .coeffs
            .iter()
            .map(|c| Ok((c.alpha.clone(), c.value.to_core()?)))
            .collect::<Result<Vec<_>, JsonError>>()?;
        crate::apolar::MatHomPoly::from_apolar_coeffs(self.d, self.m, self.q, &entries)
            .map_err(|e| JsonError::Schema(e.to_string()))
    }
}

/// A cone element as a list of `(η, C)` terms.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ConeJson {
    pub d: usize,
    pub m: usize,
    pub q: usize,
    pub terms: Vec<ConeTermJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ConeTermJson {
    pub eta: Vec<f64>,
    #[serde(rename = "C")]
    pub weight: HermMatJson,
}

impl ConeJson {
    pub fn from_core(c: &crate::apolar::ConeElement<f64>) -> Self {
        Self {
            d: c.terms().first().map(|(e, _)| e.len()).unwrap_or(0),
            m: c.degree(),
            q: c.terms().first().map(|(_, w)| w.dim()).unwrap_or(0),
            terms: c
                .terms()
                .iter()
                .map(|(eta, w)| ConeTermJson {
                    eta: eta.clone(),
                    weight: HermMatJson::from_core(w),
                })
                .collect(),
        }
    }

    pub fn to_core(&self) -> Result<crate::apolar::ConeElement<f64>, JsonError> {
        let terms = self
            .terms
            .iter()
            .map(|t| Ok((t.eta.clone(), t.weight.to_core()?)))
            .collect::<Result<Vec<_>, JsonError>>()?;
        crate::apolar::ConeElement::new(self.d, self.m, self.q, terms)
            .map_err(|e| JsonError::Schema(e.to_string()))
    }
}
