//! Standard gates and finite groups used as benchmarking ensembles.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Result, UrbError};
use crate::linalg::{c, CMat};
use crate::superops::pauli::PauliBasis;

pub fn hadamard() -> CMat {
    let h = c(FRAC_1_SQRT_2, 0.0);
    CMat::from_row_slice(2, 2, &[h, h, h, -h])
}

pub fn phase_s() -> CMat {
    CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)])
}

/// `diag(1, e^{iπ/4})`.
pub fn t_gate() -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(FRAC_1_SQRT_2, FRAC_1_SQRT_2)],
    )
}

/// CNOT with the first (most significant) qubit as control.
pub fn cnot() -> CMat {
    let mut m = CMat::zeros(4, 4);
    m[(0, 0)] = c(1.0, 0.0);
    m[(1, 1)] = c(1.0, 0.0);
    m[(2, 3)] = c(1.0, 0.0);
    m[(3, 2)] = c(1.0, 0.0);
    m
}

/// `gate` acting on `qubit` of an `n`-qubit register (qubit 0 most significant).
pub fn embed(gate: &CMat, qubit: usize, n: usize) -> CMat {
    let mut m = CMat::identity(1, 1);
    for q in 0..n {
        if q == qubit {
            m = m.kronecker(gate);
        } else {
            m = m.kronecker(&CMat::identity(2, 2));
        }
    }
    m
}

/// Rescales `u` by a global phase so that its first non-negligible entry
/// (column-major) is real and positive.
pub fn phase_normalize(u: &CMat) -> CMat {
    for z in u.iter() {
        if z.norm() > 1e-6 {
            let ph = z.conj() / z.norm();
            return u.map(|w| w * ph);
        }
    }
    u.clone()
}

fn phase_key(u: &CMat) -> Vec<i64> {
    let n = phase_normalize(u);
    n.iter()
        .flat_map(|z| [(z.re * 1e6).round() as i64, (z.im * 1e6).round() as i64])
        .collect()
}

/// Closure of `generators` under multiplication, modulo global phase.
pub fn generate_group(generators: &[CMat], limit: usize) -> Result<Vec<CMat>> {
    let d = generators
        .first()
        .map(|g| g.nrows())
        .ok_or_else(|| UrbError::invariant("no generators"))?;
    let id = CMat::identity(d, d);
    let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut elements = vec![id.clone()];
    seen.insert(phase_key(&id), 0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for g in generators {
            let next = phase_normalize(&(g * &elements[i]));
            let key = phase_key(&next);
            if !seen.contains_key(&key) {
                if elements.len() >= limit {
                    return Err(UrbError::Size(format!("group exceeds {limit} elements")));
                }
                seen.insert(key, elements.len());
                queue.push_back(elements.len());
                elements.push(next);
            }
        }
    }
    Ok(elements)
}

/// The `n`-qubit Clifford group modulo phases (24 elements for one qubit,
/// 11520 for two).
pub fn clifford_group(n_qubits: usize) -> Result<Vec<CMat>> {
    if !(1..=2).contains(&n_qubits) {
        return Err(UrbError::Size(format!(
            "Clifford groups are provided for 1 or 2 qubits, got {n_qubits}"
        )));
    }
    let mut gens = Vec::new();
    for q in 0..n_qubits {
        gens.push(embed(&hadamard(), q, n_qubits));
        gens.push(embed(&phase_s(), q, n_qubits));
    }
    if n_qubits == 2 {
        gens.push(cnot());
    }
    generate_group(&gens, 20_000)
}

/// The `d²` Pauli strings as unitaries.
pub fn pauli_group(n_qubits: usize) -> Result<Vec<CMat>> {
    Ok(PauliBasis::shared(n_qubits)?.elements().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clifford_orders() {
        assert_eq!(clifford_group(1).unwrap().len(), 24);
        assert_eq!(clifford_group(2).unwrap().len(), 11520);
    }

    #[test]
    fn t_is_not_clifford() {
        let group = clifford_group(1).unwrap();
        let key = phase_key(&t_gate());
        assert!(group.iter().all(|g| phase_key(g) != key));
    }

    #[test]
    fn cyclic_group_from_t() {
        assert_eq!(generate_group(&[t_gate()], 100).unwrap().len(), 8);
    }
}
