//! JSON documents for series, operators, xi-polynomials and modules.
//!
//! Scalars are written in their canonical text form and magnitudes as the
//! rational exponent of p, so `load(save(v)) == v` holds bit for bit.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::annulus::{AnnulusParams, Endomorphism, LaurentElement, Space};
use crate::deformation::{ConnectionModule, Matrix, SigmaModule};
use crate::error::{Error, Result};
use crate::lognorm::{parse_rational, rational_text, LogNorm};
use crate::padic::PadicScalar;
use crate::twisted::{TwistedOperator, XiBasis, XiPolynomial};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsDoc {
    pub r_log: String,
    pub r1_log: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesDoc {
    pub params: ParamsDoc,
    /// exponent (decimal text) to scalar text
    pub coeffs: BTreeMap<String, String>,
    /// `null` for a zero tail
    pub tail_log: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndoDoc {
    pub q: String,
    pub h: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorDoc {
    pub endo: EndoDoc,
    pub eta_log: String,
    pub coeffs: Vec<SeriesDoc>,
    pub tail_log: Option<String>,
    #[serde(rename = "order_K")]
    pub order: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisTag {
    Monomial,
    Divided,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XiDoc {
    pub basis: BasisTag,
    /// required for the divided basis
    pub endo: Option<EndoDoc>,
    pub eta_log: String,
    pub coeffs: Vec<SeriesDoc>,
}

/// Connections leave `order_K` and `tail_log` out.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleDoc {
    pub rank: usize,
    /// row-major, `rank * rank` entries
    pub matrix: Vec<SeriesDoc>,
    pub endo: EndoDoc,
    pub eta_log: String,
    #[serde(rename = "order_K", default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_log: Option<String>,
}

fn log_text(n: LogNorm) -> Option<String> {
    n.to_log_text()
}

fn parse_tail(t: &Option<String>) -> Result<LogNorm> {
    match t {
        None => Ok(LogNorm::Zero),
        Some(s) => LogNorm::parse_log(s),
    }
}

fn level_text(n: LogNorm) -> Result<String> {
    log_text(n).ok_or_else(|| Error::Shape("the level must be a positive magnitude".into()))
}

pub fn params_to_doc(params: &AnnulusParams) -> ParamsDoc {
    ParamsDoc { r_log: rational_text(params.outer_log), r1_log: params.inner_log.map(rational_text) }
}

pub fn params_from_doc(doc: &ParamsDoc) -> Result<AnnulusParams> {
    let r = parse_rational(&doc.r_log)?;
    match &doc.r1_log {
        Some(t) => AnnulusParams::annulus(r, parse_rational(t)?),
        None => Ok(AnnulusParams::disk(r)),
    }
}

pub fn series_to_doc(z: &LaurentElement) -> SeriesDoc {
    SeriesDoc {
        params: params_to_doc(&z.space().params),
        coeffs: z.coeffs().map(|(n, c)| (n.to_string(), c.to_text())).collect(),
        tail_log: log_text(z.tail()),
    }
}

/// Reads a series onto `space`; the annulus must match and every exponent must lie in the window.
pub fn series_from_doc(doc: &SeriesDoc, space: Space) -> Result<LaurentElement> {
    if params_from_doc(&doc.params)? != space.params {
        return Err(Error::Shape("series annulus differs from the configured annulus".into()));
    }
    let mut terms = Vec::with_capacity(doc.coeffs.len());
    for (k, v) in &doc.coeffs {
        let n: i64 = k.trim().parse().map_err(|_| Error::Parse { what: "exponent", text: k.clone() })?;
        terms.push((n, PadicScalar::parse(space.ctx, v)?));
    }
    LaurentElement::try_from_terms(space, terms, parse_tail(&doc.tail_log)?)
}

pub fn endo_to_doc(e: &Endomorphism) -> EndoDoc {
    EndoDoc { q: e.q().to_text(), h: e.h().to_text() }
}

pub fn endo_from_doc(doc: &EndoDoc, space: Space) -> Result<Endomorphism> {
    let q = PadicScalar::parse(space.ctx, &doc.q)?;
    let h = PadicScalar::parse(space.ctx, &doc.h)?;
    if q.is_one() && h.is_exact_zero() {
        return Ok(Endomorphism::identity(space));
    }
    Endomorphism::new(q, h, space)
}

pub fn operator_to_doc(op: &TwistedOperator) -> Result<OperatorDoc> {
    Ok(OperatorDoc {
        endo: endo_to_doc(op.endo()),
        eta_log: level_text(op.level())?,
        coeffs: op.coeffs().iter().map(series_to_doc).collect(),
        tail_log: log_text(op.tail()),
        order: op.max_order(),
    })
}

pub fn operator_from_doc(doc: &OperatorDoc, space: Space) -> Result<TwistedOperator> {
    let endo = endo_from_doc(&doc.endo, space)?;
    let coeffs = doc.coeffs.iter().map(|s| series_from_doc(s, space)).collect::<Result<Vec<_>>>()?;
    let eta = LogNorm::parse_log(&doc.eta_log)?;
    TwistedOperator::new(endo, eta, coeffs, parse_tail(&doc.tail_log)?, doc.order)
}

pub fn xi_to_doc(p: &XiPolynomial) -> Result<XiDoc> {
    let (basis, endo) = match p.basis() {
        XiBasis::Monomial => (BasisTag::Monomial, None),
        XiBasis::Divided(e) => (BasisTag::Divided, Some(endo_to_doc(e))),
    };
    Ok(XiDoc { basis, endo, eta_log: level_text(p.level())?, coeffs: p.coeffs().iter().map(series_to_doc).collect() })
}

pub fn xi_from_doc(doc: &XiDoc, space: Space) -> Result<XiPolynomial> {
    let coeffs = doc.coeffs.iter().map(|s| series_from_doc(s, space)).collect::<Result<Vec<_>>>()?;
    let basis = match (&doc.basis, &doc.endo) {
        (BasisTag::Monomial, _) => XiBasis::Monomial,
        (BasisTag::Divided, Some(e)) => XiBasis::Divided(endo_from_doc(e, space)?),
        (BasisTag::Divided, None) => return Err(Error::Shape("divided basis without an endomorphism".into())),
    };
    XiPolynomial::new(space, coeffs, basis, LogNorm::parse_log(&doc.eta_log)?)
}

fn matrix_to_docs(m: &Matrix) -> Vec<SeriesDoc> {
    m.iter().flatten().map(series_to_doc).collect()
}

fn matrix_from_docs(rank: usize, docs: &[SeriesDoc], space: Space) -> Result<Matrix> {
    if docs.len() != rank * rank {
        return Err(Error::Shape(format!("{} matrix entries for rank {rank}", docs.len())));
    }
    let flat = docs.iter().map(|d| series_from_doc(d, space)).collect::<Result<Vec<_>>>()?;
    Ok(flat.chunks(rank).map(<[LaurentElement]>::to_vec).collect())
}

pub fn connection_to_doc(m: &ConnectionModule) -> Result<ModuleDoc> {
    Ok(ModuleDoc {
        rank: m.rank(),
        matrix: matrix_to_docs(m.matrix()),
        endo: endo_to_doc(m.endo()),
        eta_log: level_text(m.level())?,
        order: None,
        tail_log: None,
    })
}

pub fn connection_from_doc(doc: &ModuleDoc, space: Space) -> Result<ConnectionModule> {
    let matrix = matrix_from_docs(doc.rank, &doc.matrix, space)?;
    ConnectionModule::new(matrix, endo_from_doc(&doc.endo, space)?, LogNorm::parse_log(&doc.eta_log)?)
}

pub fn sigma_module_to_doc(s: &SigmaModule) -> Result<ModuleDoc> {
    Ok(ModuleDoc {
        rank: s.rank(),
        matrix: matrix_to_docs(s.matrix()),
        endo: endo_to_doc(s.endo()),
        eta_log: level_text(s.level())?,
        order: Some(s.order()),
        tail_log: log_text(s.tail()),
    })
}

pub fn sigma_module_from_doc(doc: &ModuleDoc, space: Space) -> Result<SigmaModule> {
    let matrix = matrix_from_docs(doc.rank, &doc.matrix, space)?;
    let order = doc.order.ok_or_else(|| Error::Shape("sigma-module document without order_K".into()))?;
    SigmaModule::new(matrix, endo_from_doc(&doc.endo, space)?, LogNorm::parse_log(&doc.eta_log)?, order, parse_tail(&doc.tail_log)?)
}

pub fn to_json<T: Serialize>(doc: &T) -> String {
    serde_json::to_string_pretty(doc).expect("documents serialize")
}

pub fn save_json<T: Serialize>(path: &Path, doc: &T) -> Result<()> {
    std::fs::write(path, to_json(doc) + "\n")?;
    Ok(())
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
