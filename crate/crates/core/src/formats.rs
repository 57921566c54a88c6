//! JSON interchange for representation bundles and semigroup generators.
//!
//! Rep bundle: `{"groupoid": {...}, "dims": {"x": n}, "U": {"g": M}}`,
//! blockwise `U_g: H_{s(g)} → H_{r(g)}` in orthonormal coordinates. A
//! complex entry is a number or `[re, im]`. With several coefficients,
//! `dims` values are arrays (one dimension per `w`) and `U` values are
//! arrays of matrices. Unit arrows may be omitted (identity).
//!
//! Semigroup file: `{"generators": [{"dom": [...], "map": {"x": "y"}}]}`;
//! each generator is resolved to the bisection of arrows `x → map(x)`,
//! which must be unique unless listed explicitly under `"arrows"`.

use crate::crossed::is_bisection;
use crate::fingroupoid::{FiniteGroupoid, GroupoidFile, MeasuredGroupoid};
use crate::hilbmod::Correspondence;
use crate::linalg::{CMat, C64};
use crate::reps::{blockwise, from_cocycle, CocycleFamily, RepError, Representation};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("json: {0}")]
    Json(String),
    #[error("groupoid: {0}")]
    Groupoid(String),
    #[error("dims: {0}")]
    Dims(String),
    #[error("U[{arrow}]: {reason}")]
    Block { arrow: String, reason: String },
    #[error("generator {index}: {reason}")]
    Generator { index: usize, reason: String },
    #[error(transparent)]
    Rep(#[from] RepError),
}

fn complex(v: &Value) -> Option<C64> {
    match v {
        Value::Number(n) => n.as_f64().map(|re| C64::new(re, 0.0)),
        Value::Array(a) if a.len() == 2 => Some(C64::new(a[0].as_f64()?, a[1].as_f64()?)),
        _ => None,
    }
}

/// A matrix as an array of rows; `rows × cols` is enforced (an empty
/// array stands for any matrix with a zero dimension).
pub fn parse_matrix(v: &Value, rows: usize, cols: usize) -> Result<CMat, String> {
    let rs = v.as_array().ok_or("expected an array of rows")?;
    if rows == 0 || cols == 0 {
        if rs.iter().all(|r| r.as_array().is_some_and(|r| r.is_empty())) && (rs.is_empty() || rs.len() == rows) {
            return Ok(CMat::zeros(rows, cols));
        }
        return Err(format!("expected an empty {rows}×{cols} matrix"));
    }
    if rs.len() != rows {
        return Err(format!("expected {rows} rows, found {}", rs.len()));
    }
    let mut m = CMat::zeros(rows, cols);
    for (i, r) in rs.iter().enumerate() {
        let r = r.as_array().ok_or("row is not an array")?;
        if r.len() != cols {
            return Err(format!("row {i}: expected {cols} entries, found {}", r.len()));
        }
        for (j, e) in r.iter().enumerate() {
            m[(i, j)] = complex(e).ok_or_else(|| format!("entry ({i},{j}) is not a number or [re, im]"))?;
        }
    }
    Ok(m)
}

pub fn matrix_json(m: &CMat) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect())).collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepBundle {
    pub groupoid: GroupoidFile,
    pub dims: BTreeMap<String, Value>,
    #[serde(rename = "U")]
    pub u: BTreeMap<String, Value>,
}

pub fn measured_from_file(name: &str, file: &GroupoidFile) -> Result<MeasuredGroupoid, FormatError> {
    let (g, c) = file.to_groupoid().map_err(|e| FormatError::Groupoid(e.to_string()))?;
    MeasuredGroupoid::new(name, g, c).map_err(|e| FormatError::Groupoid(e.to_string()))
}

impl RepBundle {
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        serde_json::from_str(text).map_err(|e| FormatError::Json(e.to_string()))
    }

    pub fn to_representation(&self, name: &str) -> Result<Representation, FormatError> {
        let mg = Arc::new(measured_from_file(name, &self.groupoid)?);
        let g = &mg.g;
        for k in self.dims.keys() {
            if g.object_index(k).is_none() {
                return Err(FormatError::Dims(format!("unknown object `{k}`")));
            }
        }
        let mut n_coeff = None;
        let mut dims = Vec::with_capacity(g.n_objects());
        for x in &g.object_ids {
            let row: Vec<usize> = match self.dims.get(x) {
                None => return Err(FormatError::Dims(format!("missing object `{x}`"))),
                Some(Value::Number(n)) => vec![n.as_u64().ok_or_else(|| FormatError::Dims(format!("`{x}`: not a dimension")))? as usize],
                Some(Value::Array(a)) => a
                    .iter()
                    .map(|v| v.as_u64().map(|n| n as usize))
                    .collect::<Option<_>>()
                    .ok_or_else(|| FormatError::Dims(format!("`{x}`: not a list of dimensions")))?,
                Some(_) => return Err(FormatError::Dims(format!("`{x}`: not a dimension"))),
            };
            match n_coeff {
                None => n_coeff = Some(row.len()),
                Some(n) if n != row.len() => return Err(FormatError::Dims("inconsistent number of coefficients".into())),
                _ => {}
            }
            dims.push(row);
        }
        let scalar = self.dims.values().all(|v| v.is_number());
        let module = Correspondence::from_dims(&dims);
        for k in self.u.keys() {
            if g.arrow_index(k).is_none() {
                return Err(FormatError::Block { arrow: k.clone(), reason: "unknown arrow".into() });
            }
        }
        let mut blocks = Vec::with_capacity(g.n_arrows());
        for a in 0..g.n_arrows() {
            let id = &g.arrow_ids[a];
            let (s, r) = (g.src[a], g.rng[a]);
            let err = |reason: String| FormatError::Block { arrow: id.clone(), reason };
            let per_w = match self.u.get(id) {
                None if g.is_unit(a) => dims[s].iter().map(|&d| CMat::identity(d, d)).collect(),
                None => return Err(err("missing".into())),
                Some(v) if scalar => vec![parse_matrix(v, dims[r][0], dims[s][0]).map_err(err)?],
                Some(v) => {
                    let list = v.as_array().ok_or_else(|| err("expected one matrix per coefficient".into()))?;
                    if list.len() != dims[s].len() {
                        return Err(err(format!("expected {} matrices", dims[s].len())));
                    }
                    list.iter()
                        .enumerate()
                        .map(|(w, m)| parse_matrix(m, dims[r][w], dims[s][w]))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(err)?
                }
            };
            blocks.push(per_w);
        }
        Ok(from_cocycle(mg, module, &CocycleFamily { blocks })?)
    }

    /// The bundle of a representation with unit-weight fibres per `(x, w)`.
    pub fn from_representation(rep: &Representation) -> Result<Self, FormatError> {
        let mg = &rep.mg;
        let g = &mg.g;
        let fam = blockwise(rep)?;
        let n_coeff = rep.n_coeff();
        let dims = (0..g.n_objects())
            .map(|x| {
                let row: Vec<usize> = (0..n_coeff).map(|w| rep.module.fiber_dim(x, w)).collect();
                let v = if n_coeff == 1 { json!(row[0]) } else { json!(row) };
                (g.object_ids[x].clone(), v)
            })
            .collect();
        let u = (0..g.n_arrows())
            .map(|a| {
                let v = if n_coeff == 1 {
                    matrix_json(&fam.blocks[a][0])
                } else {
                    Value::Array(fam.blocks[a].iter().map(matrix_json).collect())
                };
                (g.arrow_ids[a].clone(), v)
            })
            .collect();
        Ok(RepBundle { groupoid: GroupoidFile::from_groupoid(g, Some(&mg.haar.c)), dims, u })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub dom: Vec<String>,
    pub map: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrows: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemigroupFile {
    pub generators: Vec<GeneratorSpec>,
}

impl SemigroupFile {
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        serde_json::from_str(text).map_err(|e| FormatError::Json(e.to_string()))
    }

    /// Each generator as an arrow bitmask of `g`.
    pub fn to_bisections(&self, g: &FiniteGroupoid) -> Result<Vec<u64>, FormatError> {
        if g.n_arrows() > 64 {
            return Err(FormatError::Groupoid("more than 64 arrows".into()));
        }
        self.generators.iter().enumerate().map(|(index, generator)| resolve(g, index, generator)).collect()
    }
}

fn resolve(g: &FiniteGroupoid, index: usize, generator: &GeneratorSpec) -> Result<u64, FormatError> {
    let fail = |reason: String| FormatError::Generator { index, reason };
    let obj = |s: &str| g.object_index(s).ok_or_else(|| fail(format!("unknown object `{s}`")));
    let mut dom = Vec::new();
    for x in &generator.dom {
        dom.push(obj(x)?);
    }
    for k in generator.map.keys() {
        if !generator.dom.contains(k) {
            return Err(fail(format!("`{k}` is mapped but not in dom")));
        }
    }
    let mut mask = 0u64;
    match &generator.arrows {
        Some(ids) => {
            for id in ids {
                let a = g.arrow_index(id).ok_or_else(|| fail(format!("unknown arrow `{id}`")))?;
                mask |= 1 << a;
            }
        }
        None => {
            for (x, name) in dom.iter().zip(&generator.dom) {
                let y = obj(generator.map.get(name).ok_or_else(|| fail(format!("`{name}` has no image")))?)?;
                let cands: Vec<usize> = (0..g.n_arrows()).filter(|&a| g.src[a] == *x && g.rng[a] == y).collect();
                match cands.as_slice() {
                    [a] => mask |= 1 << a,
                    [] => return Err(fail(format!("no arrow {name} → {}", g.object_ids[y]))),
                    _ => return Err(fail(format!("{} arrows {name} → {}; list them under \"arrows\"", cands.len(), g.object_ids[y]))),
                }
            }
        }
    }
    if !is_bisection(g, mask) {
        return Err(fail("arrows do not form a bisection".into()));
    }
    let srcs: Vec<usize> = (0..g.n_arrows()).filter(|&a| mask >> a & 1 == 1).map(|a| g.src[a]).collect();
    let mut want = dom.clone();
    want.sort_unstable();
    let mut got = srcs.clone();
    got.sort_unstable();
    if want != got {
        return Err(fail("sources of the arrows differ from dom".into()));
    }
    for a in (0..g.n_arrows()).filter(|&a| mask >> a & 1 == 1) {
        let x = &g.object_ids[g.src[a]];
        if generator.map.get(x).is_some_and(|y| *y != g.object_ids[g.rng[a]]) {
            return Err(fail(format!("arrow {} does not map {x} to {}", g.arrow_ids[a], generator.map[x])));
        }
    }
    Ok(mask)
}
