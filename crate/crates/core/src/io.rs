//! JSON documents for systems, coefficient maps and representations.
//!
//! Complex numbers are `[re, im]` pairs and matrices are arrays of rows.
//! Group elements are addressed by label wherever a document keys by group
//! element. Every document that depends on a system embeds it.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, Automorphism, CStarAlgebra};
use crate::coeff::CoeffMap;
use crate::crossed::CrossedElement;
use crate::equivariant::EquivariantRep;
use crate::error::{Error, Result};
use crate::group::{FiniteGroup, GroupDoc};
use crate::linalg::{cx, CMat, CVec};
use crate::module::{HilbertModule, ModuleOperator, ModuleVector};
use crate::system::{SystemReport, TwistedSystem};

pub type ComplexDoc = [f64; 2];
pub type MatrixDoc = Vec<Vec<ComplexDoc>>;
/// One matrix per block.
pub type ElementDoc = Vec<MatrixDoc>;

pub fn matrix_to_doc(m: &CMat) -> MatrixDoc {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

pub fn matrix_from_doc(doc: &MatrixDoc) -> Result<CMat> {
    let rows = doc.len();
    let cols = doc.first().map_or(0, Vec::len);
    if doc.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse("ragged matrix".into()));
    }
    Ok(CMat::from_fn(rows, cols, |i, j| {
        cx(doc[i][j][0], doc[i][j][1])
    }))
}

pub fn vector_to_doc(v: &CVec) -> Vec<ComplexDoc> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn vector_from_doc(doc: &[ComplexDoc]) -> CVec {
    CVec::from_iterator(doc.len(), doc.iter().map(|z| cx(z[0], z[1])))
}

pub fn element_to_doc(a: &AlgebraElement) -> ElementDoc {
    a.blocks.iter().map(matrix_to_doc).collect()
}

pub fn element_from_doc(alg: &CStarAlgebra, doc: &ElementDoc) -> Result<AlgebraElement> {
    let a = AlgebraElement {
        blocks: doc.iter().map(matrix_from_doc).collect::<Result<_>>()?,
    };
    alg.check(&a).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(a)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AutomorphismDoc {
    /// Block `k` is sent to block `perm[k]`.
    pub perm: Vec<usize>,
    pub unitary: ElementDoc,
}

/// A twisted system as a document.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    #[serde(default)]
    pub name: String,
    pub group: GroupDoc,
    pub algebra: CStarAlgebra,
    pub alpha: BTreeMap<String, AutomorphismDoc>,
    /// `sigma[g][h]`, indexed in label order of `group.labels`.
    pub sigma: Vec<Vec<ElementDoc>>,
}

/// A system document that parsed but may fail validation.
pub struct Unchecked {
    pub system: TwistedSystem,
    pub report: SystemReport,
}

impl SystemFile {
    pub fn from_system(s: &TwistedSystem) -> Self {
        let gr = s.group();
        SystemFile {
            name: s.name().to_string(),
            group: gr.to_doc(),
            algebra: s.algebra().clone(),
            alpha: gr
                .elements()
                .map(|g| {
                    let a = s.alpha(g);
                    (
                        gr.label(g).to_string(),
                        AutomorphismDoc {
                            perm: a.permutation().to_vec(),
                            unitary: element_to_doc(a.unitary()),
                        },
                    )
                })
                .collect(),
            sigma: gr
                .elements()
                .map(|g| {
                    gr.elements()
                        .map(|h| element_to_doc(s.sigma(g, h)))
                        .collect()
                })
                .collect(),
        }
    }

    /// Shape-check and assemble without enforcing the twisted-action
    /// identities; the returned report carries their residuals.
    pub fn assemble(&self) -> Result<Unchecked> {
        let parse = |e: Error| Error::Parse(e.to_string());
        let group = FiniteGroup::from_doc(&self.group).map_err(parse)?;
        let alg = &self.algebra;
        let mut alpha = Vec::with_capacity(group.order());
        for g in group.elements() {
            let label = group.label(g);
            let doc = self
                .alpha
                .get(label)
                .ok_or_else(|| Error::Parse(format!("alpha: missing entry for '{label}'")))?;
            let u = element_from_doc(alg, &doc.unitary)?;
            alpha.push(Automorphism::new(alg, doc.perm.clone(), u, f64::INFINITY).map_err(parse)?);
        }
        if let Some(extra) = self.alpha.keys().find(|k| group.index_of(k).is_none()) {
            return Err(Error::Parse(format!(
                "alpha: unknown group element '{extra}'"
            )));
        }
        let n = group.order();
        if self.sigma.len() != n || self.sigma.iter().any(|r| r.len() != n) {
            return Err(Error::Parse(format!("sigma must be a {n}×{n} table")));
        }
        let sigma = self
            .sigma
            .iter()
            .flatten()
            .map(|d| element_from_doc(alg, d))
            .collect::<Result<Vec<_>>>()?;
        let system = TwistedSystem::new(
            self.name.clone(),
            alg.clone(),
            group,
            alpha,
            sigma,
            f64::INFINITY,
        )
        .map_err(parse)?;
        let report = system.validate(f64::INFINITY)?;
        Ok(Unchecked { system, report })
    }

    pub fn build(&self, tol: f64) -> Result<TwistedSystem> {
        let u = self.assemble()?;
        u.system.validate(tol)?;
        Ok(u.system)
    }
}

fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

fn to_json<T: Serialize>(doc: &T) -> String {
    serde_json::to_string_pretty(doc).expect("documents serialize")
}

pub fn parse_system(text: &str) -> Result<SystemFile> {
    from_json(text)
}

pub fn system_to_json(s: &TwistedSystem) -> String {
    to_json(&SystemFile::from_system(s))
}

pub fn system_from_json(text: &str, tol: f64) -> Result<TwistedSystem> {
    parse_system(text)?.build(tol)
}

/// A crossed-product element keyed by group label.
pub fn crossed_to_doc(s: &TwistedSystem, f: &CrossedElement) -> BTreeMap<String, ElementDoc> {
    s.group()
        .elements()
        .map(|g| (s.group().label(g).to_string(), element_to_doc(&f.coeffs[g])))
        .collect()
}

pub fn crossed_from_doc(
    s: &TwistedSystem,
    doc: &BTreeMap<String, ElementDoc>,
) -> Result<CrossedElement> {
    let mut f = CrossedElement::zero(s);
    for (label, d) in doc {
        let g = s
            .group()
            .index_of(label)
            .ok_or_else(|| Error::Parse(format!("unknown group element '{label}'")))?;
        f.coeffs[g] = element_from_doc(s.algebra(), d)?;
    }
    Ok(f)
}

/// `T_g` as a `dimA × dimA` matrix on basis coordinates, per group label.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffFile {
    pub system: SystemFile,
    pub maps: BTreeMap<String, MatrixDoc>,
}

impl CoeffFile {
    pub fn from_map(t: &CoeffMap) -> Self {
        let s = t.system();
        CoeffFile {
            system: SystemFile::from_system(s),
            maps: s
                .group()
                .elements()
                .map(|g| (s.group().label(g).to_string(), matrix_to_doc(t.map(g))))
                .collect(),
        }
    }

    pub fn build(&self, tol: f64) -> Result<CoeffMap> {
        let s = Arc::new(self.system.build(tol)?);
        let gr = s.group();
        let maps = gr
            .elements()
            .map(|g| {
                let d = self
                    .maps
                    .get(gr.label(g))
                    .ok_or_else(|| Error::Parse(format!("maps: missing '{}'", gr.label(g))))?;
                matrix_from_doc(d)
            })
            .collect::<Result<Vec<_>>>()?;
        CoeffMap::new(s, maps).map_err(|e| Error::Parse(e.to_string()))
    }
}

pub fn coeff_to_json(t: &CoeffMap) -> String {
    to_json(&CoeffFile::from_map(t))
}

pub fn coeff_from_json(text: &str, tol: f64) -> Result<CoeffMap> {
    from_json::<CoeffFile>(text)?.build(tol)
}

/// An equivariant representation on the standard module with the given
/// ranks: `ρ` on each algebra basis element and `v(g)`, both as matrices on
/// the flattened carrier, plus optional named vectors.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentationFile {
    pub system: SystemFile,
    pub ranks: Vec<usize>,
    pub rho: Vec<MatrixDoc>,
    pub v: BTreeMap<String, MatrixDoc>,
    #[serde(default)]
    pub vectors: Vec<Vec<ComplexDoc>>,
}

impl RepresentationFile {
    pub fn from_rep(rep: &EquivariantRep, vectors: &[ModuleVector]) -> Self {
        let s = rep.system();
        let m = rep.module();
        RepresentationFile {
            system: SystemFile::from_system(s),
            ranks: m.ranks().to_vec(),
            rho: rep
                .rho_basis()
                .iter()
                .map(|r| matrix_to_doc(&r.full_matrix(m)))
                .collect(),
            v: s.group()
                .elements()
                .map(|g| {
                    (
                        s.group().label(g).to_string(),
                        matrix_to_doc(rep.v_matrix(g)),
                    )
                })
                .collect(),
            vectors: vectors
                .iter()
                .map(|x| vector_to_doc(&m.flatten(x)))
                .collect(),
        }
    }

    pub fn build(&self, tol: f64) -> Result<(EquivariantRep, Vec<ModuleVector>)> {
        let s = Arc::new(self.system.build(tol)?);
        let parse = |e: Error| Error::Parse(e.to_string());
        let module = HilbertModule::new(s.algebra().clone(), self.ranks.clone()).map_err(parse)?;
        let n = module.carrier_dim();
        let square = |m: &CMat| m.nrows() == n && m.ncols() == n;
        let mut rho = Vec::with_capacity(self.rho.len());
        for d in &self.rho {
            let m = matrix_from_doc(d)?;
            if !square(&m) {
                return Err(Error::Parse(format!("rho: expected {n}×{n} matrices")));
            }
            rho.push(ModuleOperator::from_full_matrix(
                &module,
                &module,
                &m,
                tol.max(1e-9),
            )?);
        }
        let gr = s.group();
        let mut v = Vec::with_capacity(gr.order());
        for g in gr.elements() {
            let d = self
                .v
                .get(gr.label(g))
                .ok_or_else(|| Error::Parse(format!("v: missing '{}'", gr.label(g))))?;
            let m = matrix_from_doc(d)?;
            if !square(&m) {
                return Err(Error::Parse(format!("v: expected {n}×{n} matrices")));
            }
            v.push(m);
        }
        let mut vectors = Vec::with_capacity(self.vectors.len());
        for d in &self.vectors {
            if d.len() != n {
                return Err(Error::Parse(format!("vectors: expected length {n}")));
            }
            vectors.push(module.unflatten(&vector_from_doc(d)));
        }
        let rep = EquivariantRep::new(s, module, rho, v, tol)?;
        Ok((rep, vectors))
    }
}

pub fn representation_to_json(rep: &EquivariantRep, vectors: &[ModuleVector]) -> String {
    to_json(&RepresentationFile::from_rep(rep, vectors))
}

pub fn representation_from_json(
    text: &str,
    tol: f64,
) -> Result<(EquivariantRep, Vec<ModuleVector>)> {
    from_json::<RepresentationFile>(text)?.build(tol)
}

pub fn matrix_to_json(m: &CMat) -> String {
    to_json(&matrix_to_doc(m))
}
