//! Scheme files (JSON) and decay tables (CSV).
//!
//! A scheme file is an object with `dim`, `gates` (each with `prob`,
//! `ideal_unitary` as a d×d array of `[re, im]` pairs, optional `noise` and
//! `inverting_noise`), and optional `placement`, `rho0`, `m0`,
//! `intermediate` and `povm` (`factored`, `xeb` or `cycle`). Errors carry the
//! JSON path of the offending field, or the line and column of a syntax error.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::{Result, UrbError};
use crate::linalg::{c, max_abs_diff_c, CMat, RMat};
use crate::schemes::{
    build_cycle_benchmarking, computational_dephasing, DecayDataset, NoiseModel, NoiseSpec, Placement, PovmRule,
    UrbScheme,
};
use crate::superops::pauli::n_qubits_for_dim;
use crate::superops::{DensityMatrix, HermitianOperator, PovmElement, Superoperator};
use crate::twirling::{GateElement, GateEnsemble};

/// Entries of `U†U − I` up to this size are removed by a polar correction;
/// larger defects are rejected.
pub const UNITARY_TOL: f64 = 1e-6;

pub const CSV_HEADER: &str = "m,p_hat,std_err,K,shots,seed";

#[derive(Clone, Copy)]
struct Node<'a> {
    value: &'a Value,
}

struct Cursor<'a> {
    node: Node<'a>,
    path: String,
}

impl<'a> Cursor<'a> {
    fn root(value: &'a Value) -> Self {
        Self {
            node: Node { value },
            path: "$".into(),
        }
    }

    fn err(&self, msg: impl Into<String>) -> UrbError {
        UrbError::parse(self.path.clone(), msg)
    }

    fn object(&self) -> Result<&'a Map<String, Value>> {
        self.node
            .value
            .as_object()
            .ok_or_else(|| self.err(format!("expected an object, found {}", kind(self.node.value))))
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for k in self.object()?.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(self.err(format!("unknown field '{k}' (expected one of: {})", allowed.join(", "))));
            }
        }
        Ok(())
    }

    fn child_path(&self, key: &str) -> String {
        if self.path == "$" {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn opt(&self, key: &str) -> Result<Option<Cursor<'a>>> {
        Ok(self.object()?.get(key).map(|value| Cursor {
            node: Node { value },
            path: self.child_path(key),
        }))
    }

    fn field(&self, key: &str) -> Result<Cursor<'a>> {
        self.opt(key)?
            .ok_or_else(|| UrbError::parse(self.child_path(key), "missing required field"))
    }

    fn items(&self) -> Result<Vec<Cursor<'a>>> {
        let arr = self
            .node
            .value
            .as_array()
            .ok_or_else(|| self.err(format!("expected an array, found {}", kind(self.node.value))))?;
        Ok(arr
            .iter()
            .enumerate()
            .map(|(i, value)| Cursor {
                node: Node { value },
                path: format!("{}[{i}]", self.path),
            })
            .collect())
    }

    fn f64(&self) -> Result<f64> {
        self.node
            .value
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| self.err(format!("expected a finite number, found {}", kind(self.node.value))))
    }

    fn usize(&self) -> Result<usize> {
        self.node.value.as_u64().map(|x| x as usize).ok_or_else(|| {
            self.err(format!(
                "expected a non-negative integer, found {}",
                kind(self.node.value)
            ))
        })
    }

    fn str(&self) -> Result<&'a str> {
        self.node
            .value
            .as_str()
            .ok_or_else(|| self.err(format!("expected a string, found {}", kind(self.node.value))))
    }

    fn complex_matrix(&self, d: usize) -> Result<CMat> {
        let rows = self.items()?;
        if rows.len() != d {
            return Err(self.err(format!("expected {d} rows, found {}", rows.len())));
        }
        let mut m = CMat::zeros(d, d);
        for (i, row) in rows.iter().enumerate() {
            let cols = row.items()?;
            if cols.len() != d {
                return Err(row.err(format!("expected {d} entries, found {}", cols.len())));
            }
            for (j, e) in cols.iter().enumerate() {
                let pair = e.items()?;
                if pair.len() != 2 {
                    return Err(e.err("expected an [re, im] pair"));
                }
                m[(i, j)] = c(pair[0].f64()?, pair[1].f64()?);
            }
        }
        Ok(m)
    }

    fn real_matrix(&self, n: usize) -> Result<RMat> {
        let rows = self.items()?;
        if rows.len() != n {
            return Err(self.err(format!("expected {n} rows, found {}", rows.len())));
        }
        let mut m = RMat::zeros(n, n);
        for (i, row) in rows.iter().enumerate() {
            let cols = row.items()?;
            if cols.len() != n {
                return Err(row.err(format!("expected {n} entries, found {}", cols.len())));
            }
            for (j, e) in cols.iter().enumerate() {
                m[(i, j)] = e.f64()?;
            }
        }
        Ok(m)
    }

    fn wrap<T>(&self, r: Result<T>) -> Result<T> {
        r.map_err(|e| match e {
            UrbError::Parse { .. } => e,
            other => self.err(other.to_string()),
        })
    }
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

/// Nearest unitary `WV†` from the SVD `U = WΣV†`.
fn polar_unitary(u: &CMat) -> Option<CMat> {
    let svd = u.clone().svd(true, true);
    Some(svd.u? * svd.v_t?)
}

fn parse_unitary(cur: &Cursor, d: usize) -> Result<CMat> {
    let u = cur.complex_matrix(d)?;
    let defect = max_abs_diff_c(&(u.adjoint() * &u), &CMat::identity(d, d));
    if defect > UNITARY_TOL {
        return Err(cur.err(format!("matrix is not unitary (max |U†U − I| = {defect:.3e})")));
    }
    polar_unitary(&u).ok_or_else(|| cur.err("singular value decomposition failed"))
}

fn parse_noise(cur: &Cursor, d: usize) -> Result<NoiseModel> {
    if let Value::String(s) = cur.node.value {
        return match s.as_str() {
            "none" => Ok(NoiseModel::None),
            other => Err(cur.err(format!(
                "unknown noise '{other}'; use \"none\" or an object with a \"type\""
            ))),
        };
    }
    let ty = cur.field("type")?;
    let model = match ty.str()? {
        "none" => {
            cur.check_keys(&["type"])?;
            NoiseModel::None
        }
        "depolarizing" => {
            cur.check_keys(&["type", "q"])?;
            NoiseModel::Depolarizing { q: cur.field("q")?.f64()? }
        }
        "replacement" => {
            cur.check_keys(&["type", "p", "state"])?;
            let st = cur.field("state")?;
            let state = st.wrap(DensityMatrix::from_matrix(st.complex_matrix(d)?))?;
            NoiseModel::Replacement {
                p: cur.field("p")?.f64()?,
                state,
            }
        }
        "amplitude-damping" => {
            cur.check_keys(&["type", "gamma"])?;
            NoiseModel::AmplitudeDamping {
                gamma: cur.field("gamma")?.f64()?,
            }
        }
        "bit-flip" => {
            cur.check_keys(&["type", "p"])?;
            NoiseModel::BitFlip { p: cur.field("p")?.f64()? }
        }
        "pauli" => {
            cur.check_keys(&["type", "probs"])?;
            let probs = cur.field("probs")?.items()?.iter().map(|x| x.f64()).collect::<Result<_>>()?;
            NoiseModel::Pauli { probs }
        }
        "kraus" => {
            cur.check_keys(&["type", "ops"])?;
            let ops = cur
                .field("ops")?
                .items()?
                .iter()
                .map(|x| x.complex_matrix(d))
                .collect::<Result<_>>()?;
            NoiseModel::Kraus { ops }
        }
        "ptm" => {
            cur.check_keys(&["type", "matrix"])?;
            let m = cur.field("matrix")?;
            NoiseModel::Channel(m.wrap(Superoperator::from_ptm(m.real_matrix(d * d)?))?)
        }
        other => {
            return Err(ty.err(format!(
                "unknown noise type '{other}' (expected none, depolarizing, replacement, amplitude-damping, bit-flip, pauli, kraus or ptm)"
            )))
        }
    };
    cur.wrap(model.channel(d))?;
    Ok(model)
}

fn parse_placement(cur: Option<Cursor>) -> Result<Placement> {
    match cur {
        None => Ok(Placement::InBetween),
        Some(c) => {
            let s = c.str()?;
            c.wrap(s.parse())
        }
    }
}

struct GateEntry {
    prob: f64,
    unitary: CMat,
    noise: NoiseModel,
    inverting: Option<NoiseModel>,
}

/// Parses scheme-file text into a validated scheme.
pub fn parse_scheme(text: &str) -> Result<UrbScheme> {
    let value: Value = serde_json::from_str(text).map_err(|e| {
        UrbError::parse(
            format!("line {}, column {}", e.line(), e.column()),
            format!("invalid JSON ({:?}): {e}", e.classify()),
        )
    })?;
    let root = Cursor::root(&value);
    root.check_keys(&[
        "name",
        "dim",
        "gates",
        "placement",
        "rho0",
        "m0",
        "intermediate",
        "povm",
    ])?;
    if let Some(n) = root.opt("name")? {
        n.str()?;
    }
    let dim_cur = root.field("dim")?;
    let d = dim_cur.usize()?;
    dim_cur.wrap(n_qubits_for_dim(d))?;
    let placement = parse_placement(root.opt("placement")?)?;
    let povm = match root.opt("povm")? {
        None => "factored",
        Some(p) => match p.str()? {
            s @ ("factored" | "xeb" | "cycle") => s,
            other => return Err(p.err(format!("unknown povm '{other}' (expected factored, xeb or cycle)"))),
        },
    };

    let gates_cur = root.field("gates")?;
    let items = gates_cur.items()?;
    if items.is_empty() {
        return Err(gates_cur.err("gate list is empty"));
    }
    let mut gates = Vec::with_capacity(items.len());
    for g in &items {
        g.check_keys(&["prob", "ideal_unitary", "noise", "inverting_noise"])?;
        let pc = g.field("prob")?;
        let prob = pc.f64()?;
        if prob < 0.0 {
            return Err(pc.err(format!("probability {prob} is negative")));
        }
        let unitary = parse_unitary(&g.field("ideal_unitary")?, d)?;
        let noise = match g.opt("noise")? {
            Some(n) => parse_noise(&n, d)?,
            None => NoiseModel::None,
        };
        let inverting = g.opt("inverting_noise")?.map(|n| parse_noise(&n, d)).transpose()?;
        gates.push(GateEntry {
            prob,
            unitary,
            noise,
            inverting,
        });
    }
    let total: f64 = gates.iter().map(|g| g.prob).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(gates_cur.err(format!("probabilities sum to {total}, not 1")));
    }

    let rho0 = match root.opt("rho0")? {
        Some(r) => r.wrap(DensityMatrix::from_matrix(r.complex_matrix(d)?))?,
        None => DensityMatrix::basis_state(d, 0)?,
    };
    let m0 = match root.opt("m0")? {
        Some(r) => r.wrap(PovmElement::from_matrix(r.complex_matrix(d)?))?,
        None => PovmElement::projector(d, 0)?,
    };
    let intermediate = match root.opt("intermediate")? {
        Some(n) => Some(parse_noise(&n, d)?),
        None => None,
    };

    match povm {
        "cycle" => {
            if gates.len() != 1 {
                return Err(gates_cur.err("a cycle scheme lists exactly one gate, the benchmarked cycle"));
            }
            for key in ["rho0", "m0", "intermediate"] {
                if root.opt(key)?.is_some() {
                    return Err(UrbError::parse(key, "not configurable for cycle schemes"));
                }
            }
            let g = &gates[0];
            let spec = NoiseSpec::uniform(g.noise.clone())
                .with_inverting(g.inverting.clone().unwrap_or(NoiseModel::None))
                .with_placement(placement);
            root.wrap(build_cycle_benchmarking(&g.unitary, &spec))
        }
        "xeb" => {
            for key in ["rho0", "m0", "intermediate"] {
                if root.opt(key)?.is_some() {
                    return Err(UrbError::parse(key, "not configurable for xeb schemes"));
                }
            }
            let mut elements = Vec::with_capacity(gates.len());
            for (g, cur) in gates.iter().zip(&items) {
                if g.inverting.is_some() {
                    return Err(UrbError::parse(
                        format!("{}.inverting_noise", cur.path),
                        "xeb schemes invert with the ideal circuit",
                    ));
                }
                let ideal = Superoperator::unitary(&g.unitary)?;
                let (phi, _) = NoiseSpec::uniform(g.noise.clone())
                    .with_placement(placement)
                    .maps(&ideal, 0, 1)?;
                elements.push(GateElement::with_maps(g.prob, g.unitary.clone(), phi, ideal.adjoint())?);
            }
            let ensemble = gates_cur.wrap(GateEnsemble::new(elements))?;
            UrbScheme::new(
                ensemble,
                PovmElement::projector(d, 0)?,
                computational_dephasing(d)?,
                DensityMatrix::basis_state(d, 0)?,
                PovmRule::Xeb,
            )
        }
        _ => {
            let mut elements = Vec::with_capacity(gates.len());
            for (g, cur) in gates.iter().zip(&items) {
                let spec = NoiseSpec::uniform(g.noise.clone())
                    .with_inverting(g.inverting.clone().unwrap_or(NoiseModel::None))
                    .with_placement(placement);
                let (phi, inv) = cur.wrap(spec.maps(&Superoperator::unitary(&g.unitary)?, 0, 1))?;
                elements.push(GateElement::with_maps(g.prob, g.unitary.clone(), phi, inv)?);
            }
            let ensemble = gates_cur.wrap(GateEnsemble::new(elements))?;
            let intermediate = match intermediate {
                Some(n) => n.channel(d)?,
                None => Superoperator::identity(d)?,
            };
            let mut s = root.wrap(UrbScheme::new(ensemble, m0, intermediate, rho0, PovmRule::Factored))?;
            if gates
                .iter()
                .all(|g| g.noise == gates[0].noise && g.inverting == gates[0].inverting)
            {
                s.noise = Some(
                    NoiseSpec::uniform(gates[0].noise.clone())
                        .with_inverting(gates[0].inverting.clone().unwrap_or(NoiseModel::None))
                        .with_placement(placement),
                );
            }
            Ok(s)
        }
    }
}

pub fn load_scheme(path: impl AsRef<Path>) -> Result<UrbScheme> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| UrbError::parse(path.display().to_string(), format!("cannot read file: {e}")))?;
    parse_scheme(&text)
}

pub fn matrix_to_json(m: &CMat) -> Value {
    Value::Array(
        m.row_iter()
            .map(|row| Value::Array(row.iter().map(|z| json!([z.re, z.im])).collect()))
            .collect(),
    )
}

pub fn noise_to_json(model: &NoiseModel) -> Value {
    match model {
        NoiseModel::None => json!("none"),
        NoiseModel::Depolarizing { q } => json!({"type": "depolarizing", "q": q}),
        NoiseModel::Replacement { p, state } => {
            json!({"type": "replacement", "p": p, "state": matrix_to_json(state.entries())})
        }
        NoiseModel::AmplitudeDamping { gamma } => {
            json!({"type": "amplitude-damping", "gamma": gamma})
        }
        NoiseModel::BitFlip { p } => json!({"type": "bit-flip", "p": p}),
        NoiseModel::Pauli { probs } => json!({"type": "pauli", "probs": probs}),
        NoiseModel::Kraus { ops } => {
            json!({"type": "kraus", "ops": ops.iter().map(matrix_to_json).collect::<Vec<_>>()})
        }
        NoiseModel::Channel(t) => {
            let ptm = t.ptm();
            let rows: Vec<Vec<f64>> = ptm.row_iter().map(|r| r.iter().copied().collect()).collect();
            json!({"type": "ptm", "matrix": rows})
        }
    }
}

/// Scheme-file document for explicit gates with `|0⟩` preparation and
/// measurement.
pub fn scheme_document(name: &str, unitaries: &[CMat], probs: &[f64], noise: &NoiseSpec, povm: &str) -> Result<Value> {
    if unitaries.is_empty() || unitaries.len() != probs.len() {
        return Err(UrbError::invariant("need one probability per gate"));
    }
    let n = unitaries.len();
    let gates: Vec<Value> = unitaries
        .iter()
        .zip(probs)
        .enumerate()
        .map(|(i, (u, p))| {
            let model = match &noise.gate {
                crate::schemes::GateNoise::Uniform(m) => m,
                crate::schemes::GateNoise::PerGate(t) => &t[i.min(t.len() - 1)],
            };
            let mut g = json!({"prob": p, "ideal_unitary": matrix_to_json(u), "noise": noise_to_json(model)});
            if noise.inverting != NoiseModel::None {
                g["inverting_noise"] = noise_to_json(&noise.inverting);
            }
            g
        })
        .collect();
    if let crate::schemes::GateNoise::PerGate(t) = &noise.gate {
        if t.len() != n {
            return Err(UrbError::DimensionMismatch {
                expected: n,
                got: t.len(),
            });
        }
    }
    let placement = match noise.placement {
        Placement::InBetween => "in-between",
        Placement::Sandwiched => "sandwiched",
    };
    Ok(json!({
        "name": name,
        "dim": unitaries[0].nrows(),
        "placement": placement,
        "povm": povm,
        "gates": gates,
    }))
}

/// Decay table with floats at 17 significant digits.
pub fn write_decay_csv(data: &DecayDataset) -> Result<String> {
    data.validate()?;
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for ((m, p), se) in data.m_values.iter().zip(&data.estimates).zip(&data.std_errors) {
        writeln!(
            out,
            "{m},{p:.16e},{se:.16e},{},{},{}",
            data.sequences, data.shots, data.seed
        )
        .expect("writing to a string");
    }
    Ok(out)
}

pub fn parse_decay_csv(text: &str) -> Result<DecayDataset> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| UrbError::parse("line 1", "empty decay table"))?;
    if header.trim() != CSV_HEADER {
        return Err(UrbError::parse("line 1", format!("expected header '{CSV_HEADER}'")));
    }
    let mut data = DecayDataset {
        m_values: Vec::new(),
        estimates: Vec::new(),
        std_errors: Vec::new(),
        sequences: 0,
        shots: 0,
        seed: 0,
    };
    for (i, line) in lines {
        let at = format!("line {}", i + 1);
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 6 {
            return Err(UrbError::parse(at, format!("expected 6 columns, found {}", cols.len())));
        }
        let bad = |name: &str| UrbError::parse(at.clone(), format!("cannot parse {name}"));
        let m: u32 = cols[0].parse().map_err(|_| bad("m"))?;
        let p: f64 = cols[1].parse().map_err(|_| bad("p_hat"))?;
        let se: f64 = cols[2].parse().map_err(|_| bad("std_err"))?;
        let k: usize = cols[3].parse().map_err(|_| bad("K"))?;
        let shots: u64 = cols[4].parse().map_err(|_| bad("shots"))?;
        let seed: u64 = cols[5].parse().map_err(|_| bad("seed"))?;
        if data.m_values.is_empty() {
            (data.sequences, data.shots, data.seed) = (k, shots, seed);
        } else if (k, shots, seed) != (data.sequences, data.shots, data.seed) {
            return Err(UrbError::parse(at, "K, shots and seed must agree across rows"));
        }
        data.m_values.push(m);
        data.estimates.push(p);
        data.std_errors.push(se);
    }
    data.validate().map_err(|e| UrbError::parse("table", e.to_string()))?;
    Ok(data)
}

/// Hermitian operator from a `[re, im]` matrix document.
pub fn hermitian_from_json(v: &Value, d: usize) -> Result<HermitianOperator> {
    let cur = Cursor::root(v);
    cur.wrap(HermitianOperator::new(cur.complex_matrix(d)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::hadamard;

    #[test]
    fn document_round_trip() {
        let noise = NoiseSpec::uniform(NoiseModel::AmplitudeDamping { gamma: 0.1 })
            .with_inverting(NoiseModel::Depolarizing { q: 0.97 })
            .with_placement(Placement::Sandwiched);
        let doc = scheme_document(
            "h",
            &[hadamard(), CMat::identity(2, 2)],
            &[0.5, 0.5],
            &noise,
            "factored",
        )
        .unwrap();
        let s = parse_scheme(&doc.to_string()).unwrap();
        let direct = crate::schemes::build_scheme(&[hadamard(), CMat::identity(2, 2)], &[0.5, 0.5], &noise).unwrap();
        for (a, b) in s.ensemble.elements().iter().zip(direct.ensemble.elements()) {
            assert!((a.implementation.ptm() - b.implementation.ptm()).amax() < 1e-14);
            assert!((a.inverting.ptm() - b.inverting.ptm()).amax() < 1e-14);
        }
        assert_eq!(s.noise, Some(noise));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let data = DecayDataset {
            m_values: vec![1, 2, 4],
            estimates: vec![0.95, 1.0 / 3.0, 0.123456789012345678],
            std_errors: vec![1e-3, 0.0, 2.5e-17],
            sequences: 10,
            shots: 100,
            seed: u64::MAX,
        };
        let text = write_decay_csv(&data).unwrap();
        assert_eq!(parse_decay_csv(&text).unwrap(), data);
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_scheme("{\n  \"dim\": 2,\n  \"gates\": [\n}").unwrap_err();
        assert!(err.to_string().contains("line 4"), "{err}");
    }
}
