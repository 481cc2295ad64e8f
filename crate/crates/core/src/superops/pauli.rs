use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::{Result, UrbError};
use crate::linalg::{c, CMat};

pub const MAX_QUBITS: usize = 4;

/// Phase of the single-qubit product `σ_a σ_b = phase · σ_{a^b}` with the
/// ordering I=0, X=1, Y=2, Z=3.
fn single_qubit_phase(a: usize, b: usize) -> Complex64 {
    match (a, b) {
        (1, 2) | (2, 3) | (3, 1) => c(0.0, 1.0),
        (2, 1) | (3, 2) | (1, 3) => c(0.0, -1.0),
        _ => c(1.0, 0.0),
    }
}

fn single_qubit_matrix(k: usize) -> CMat {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    match k {
        0 => CMat::from_row_slice(2, 2, &[o, z, z, o]),
        1 => CMat::from_row_slice(2, 2, &[z, o, o, z]),
        2 => CMat::from_row_slice(2, 2, &[z, -i, i, z]),
        _ => CMat::from_row_slice(2, 2, &[o, z, z, -o]),
    }
}

/// The `n`-qubit Pauli strings, ordered lexicographically over `{I, X, Y, Z}`
/// with the first qubit most significant. Element 0 is the identity.
#[derive(Debug, Clone)]
pub struct PauliBasis {
    n_qubits: usize,
    dim: usize,
    elements: Vec<CMat>,
    /// Each Pauli string is a monomial matrix: row `r` has its single nonzero
    /// entry `phase[r]` in column `col[r]`.
    monomial: Vec<(Vec<usize>, Vec<Complex64>)>,
}

impl PauliBasis {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(UrbError::Size(format!(
                "pauli basis supports 1..={MAX_QUBITS} qubits, got {n_qubits}"
            )));
        }
        let dim = 1usize << n_qubits;
        let count = dim * dim;
        let mut elements = Vec::with_capacity(count);
        for idx in 0..count {
            let mut m = CMat::from_element(1, 1, c(1.0, 0.0));
            for q in 0..n_qubits {
                let digit = (idx >> (2 * (n_qubits - 1 - q))) & 3;
                m = m.kronecker(&single_qubit_matrix(digit));
            }
            elements.push(m);
        }
        let monomial = elements
            .iter()
            .map(|p| {
                let mut col = vec![0; dim];
                let mut phase = vec![c(0.0, 0.0); dim];
                for r in 0..dim {
                    for k in 0..dim {
                        if p[(r, k)].norm() > 0.5 {
                            col[r] = k;
                            phase[r] = p[(r, k)];
                        }
                    }
                }
                (col, phase)
            })
            .collect();
        Ok(Self {
            n_qubits,
            dim,
            elements,
            monomial,
        })
    }

    /// Process-wide cached basis for `n_qubits`.
    pub fn shared(n_qubits: usize) -> Result<Arc<PauliBasis>> {
        static CACHE: OnceLock<Vec<OnceLock<Arc<PauliBasis>>>> = OnceLock::new();
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(UrbError::Size(format!(
                "pauli basis supports 1..={MAX_QUBITS} qubits, got {n_qubits}"
            )));
        }
        let slots = CACHE.get_or_init(|| (0..=MAX_QUBITS).map(|_| OnceLock::new()).collect());
        let slot = &slots[n_qubits];
        if let Some(b) = slot.get() {
            return Ok(b.clone());
        }
        let basis = Arc::new(PauliBasis::new(n_qubits)?);
        Ok(slot.get_or_init(|| basis).clone())
    }

    /// Shared basis for a Hilbert-space dimension (must be a power of two).
    pub fn for_dim(dim: usize) -> Result<Arc<PauliBasis>> {
        Self::shared(n_qubits_for_dim(dim)?)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[CMat] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &CMat {
        &self.elements[i]
    }

    /// `P_a P_b = phase · P_{a^b}`.
    pub fn product(&self, a: usize, b: usize) -> (Complex64, usize) {
        let mut phase = c(1.0, 0.0);
        for q in 0..self.n_qubits {
            let shift = 2 * q;
            phase *= single_qubit_phase((a >> shift) & 3, (b >> shift) & 3);
        }
        (phase, a ^ b)
    }

    /// `tr[P_a P_i P_b P_j] / d`.
    pub fn quad_trace(&self, a: usize, i: usize, b: usize, j: usize) -> Complex64 {
        let (s1, u) = self.product(a, i);
        let (s2, v) = self.product(b, j);
        if u == v {
            // P_u P_u = I
            s1 * s2
        } else {
            c(0.0, 0.0)
        }
    }

    /// `tr[P_k X]` using the monomial structure.
    pub fn trace_with(&self, k: usize, x: &CMat) -> Complex64 {
        let (col, phase) = &self.monomial[k];
        let mut acc = c(0.0, 0.0);
        for r in 0..self.dim {
            acc += phase[r] * x[(col[r], r)];
        }
        acc
    }

    /// Complex coefficients `x_k = tr[P_k X]/d` so that `X = Σ x_k P_k`.
    pub fn coords_complex(&self, x: &CMat) -> Vec<Complex64> {
        let d = self.dim as f64;
        (0..self.len()).map(|k| self.trace_with(k, x) / d).collect()
    }

    pub fn from_coords_complex(&self, coords: &[Complex64]) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for (k, &w) in coords.iter().enumerate() {
            if w.norm() == 0.0 {
                continue;
            }
            let (col, phase) = &self.monomial[k];
            for r in 0..self.dim {
                out[(r, col[r])] += w * phase[r];
            }
        }
        out
    }

    pub fn from_coords_real(&self, coords: &[f64]) -> CMat {
        let cc: Vec<Complex64> = coords.iter().map(|&x| c(x, 0.0)).collect();
        self.from_coords_complex(&cc)
    }

    pub fn label(&self, idx: usize) -> String {
        (0..self.n_qubits)
            .map(|q| match (idx >> (2 * (self.n_qubits - 1 - q))) & 3 {
                0 => 'I',
                1 => 'X',
                2 => 'Y',
                _ => 'Z',
            })
            .collect()
    }
}

/// Number of qubits for a power-of-two dimension.
pub fn n_qubits_for_dim(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(UrbError::Size(format!(
            "dimension must be a power of two >= 2, got {dim}"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Pauli basis constructor with the `1..=4` qubit cap.
pub fn pauli_basis(n_qubits: usize) -> Result<Arc<PauliBasis>> {
    PauliBasis::shared(n_qubits)
}
