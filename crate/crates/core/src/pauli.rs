//! Pauli strings and the Pauli-coefficient representation of operators.
//!
//! A Pauli string on `n` qubits is indexed by `μ ∈ 0..4ⁿ` with base-4 digits
//! `I=0, X=1, Y=2, Z=3`, qubit 0 being the most significant digit. Index 0 is
//! the identity. Each string acts as a signed, phased bit-flip on
//! computational basis states, which keeps conversions at `O(4ⁿ·2ⁿ)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::operator::HermitianOperator;

/// Single-qubit Pauli label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn digit(self) -> usize {
        self as usize
    }
}

/// Bit masks describing how a Pauli string acts on basis states:
/// `Γ|y⟩ = i^{n_y} (−1)^{|y ∧ phase|} |y ⊕ flip⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct PauliMasks {
    pub flip: usize,
    pub phase: usize,
    pub n_y: u32,
}

impl PauliMasks {
    pub fn from_index(n: usize, mu: usize) -> Self {
        let mut flip = 0;
        let mut phase = 0;
        let mut n_y = 0;
        for q in 0..n {
            let digit = (mu >> (2 * (n - 1 - q))) & 3;
            let bit = 1 << (n - 1 - q);
            match digit {
                1 => flip |= bit,
                2 => {
                    flip |= bit;
                    phase |= bit;
                    n_y += 1;
                }
                3 => phase |= bit,
                _ => {}
            }
        }
        Self { flip, phase, n_y }
    }

    /// Global factor `i^{n_y}`.
    fn prefactor(&self) -> Complex64 {
        match self.n_y % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    /// Matrix element `⟨y ⊕ flip|Γ|y⟩`.
    #[inline]
    fn element(&self, y: usize, pre: Complex64) -> Complex64 {
        if (y & self.phase).count_ones() % 2 == 0 {
            pre
        } else {
            -pre
        }
    }
}

/// Pauli string index from a label such as `"XIZ"`.
pub fn pauli_index(label: &str) -> Result<usize> {
    if label.is_empty() {
        return Err(invalid("Pauli label must contain at least one character"));
    }
    label.chars().try_fold(0usize, |acc, c| {
        Pauli::from_char(c)
            .map(|p| acc * 4 + p.digit())
            .ok_or_else(|| invalid(format!("illegal Pauli character {c:?} in {label:?}")))
    })
}

/// Label of the Pauli string with index `mu` on `n` qubits.
pub fn pauli_label(n: usize, mu: usize) -> String {
    (0..n)
        .map(|q| Pauli::ALL[(mu >> (2 * (n - 1 - q))) & 3].as_char())
        .collect()
}

/// Number of non-identity factors of Pauli string `mu`.
pub fn pauli_weight(n: usize, mu: usize) -> usize {
    (0..n).filter(|q| (mu >> (2 * q)) & 3 != 0).count()
}

/// The tensor product of Pauli matrices named by `label`, e.g. `"XZ"` is `σ_x ⊗ σ_z`.
pub fn pauli_string(label: &str) -> Result<HermitianOperator> {
    let mu = pauli_index(label)?;
    Ok(pauli_operator(label.chars().count(), mu))
}

/// Dense matrix of Pauli string `mu` on `n` qubits.
pub fn pauli_operator(n: usize, mu: usize) -> HermitianOperator {
    let mut coeffs = vec![0.0; 1 << (2 * n)];
    coeffs[mu] = 1.0;
    from_pauli_coefficients(n, &coeffs)
}

/// Orthonormal basis of traceless Hermitian operators, `Γ_μ/√(2ⁿ)` for `μ ≥ 1`.
pub fn traceless_basis(n: usize) -> Vec<HermitianOperator> {
    let norm = 1.0 / ((1usize << n) as f64).sqrt();
    (1..1usize << (2 * n))
        .map(|mu| pauli_operator(n, mu) * norm)
        .collect()
}

/// `Σ_μ c_μ Γ_μ` for real coefficients indexed by Pauli string.
pub fn from_pauli_coefficients(n: usize, coeffs: &[f64]) -> HermitianOperator {
    let d = 1usize << n;
    assert_eq!(coeffs.len(), d * d, "expected 4^n Pauli coefficients");
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    for (mu, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let masks = PauliMasks::from_index(n, mu);
        let pre = masks.prefactor() * c;
        for y in 0..d {
            m[(y ^ masks.flip, y)] += masks.element(y, pre);
        }
    }
    HermitianOperator::hermitize(m)
}

/// `T_μ = tr(op Γ_μ)` for every Pauli string.
///
/// With flip mask `x` and phase mask `z`, `tr(ρΓ) = i^{|x∧z|} Σ_y ρ_{y,y⊕x} (−1)^{|y∧z|}`,
/// one Walsh–Hadamard transform per flip mask.
pub fn pauli_expectations(op: &HermitianOperator) -> Vec<f64> {
    let d = op.dim();
    let n = d.trailing_zeros() as usize;
    let m = op.matrix();
    let mut table = vec![0.0; d * d];
    let mut re = vec![0.0; d];
    let mut im = vec![0.0; d];
    for x in 0..d {
        for y in 0..d {
            let c = m[(y, y ^ x)];
            re[y] = c.re;
            im[y] = c.im;
        }
        walsh_hadamard(&mut re);
        walsh_hadamard(&mut im);
        for z in 0..d {
            table[x * d + z] = match (x & z).count_ones() % 4 {
                0 => re[z],
                1 => -im[z],
                2 => -re[z],
                _ => im[z],
            };
        }
    }
    (0..d * d)
        .map(|mu| {
            let masks = PauliMasks::from_index(n, mu);
            table[masks.flip * d + masks.phase]
        })
        .collect()
}

/// In-place unnormalized Walsh–Hadamard transform; `x.len()` is a power of two.
pub(crate) fn walsh_hadamard(x: &mut [f64]) {
    let n = x.len();
    let mut h = 1;
    while h < n {
        for i in (0..n).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (x[j], x[j + h]);
                x[j] = a + b;
                x[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Coordinates `x_i = tr(S_i ρ)` in the orthonormal traceless basis.
pub fn traceless_coordinates(op: &HermitianOperator) -> Vec<f64> {
    let norm = 1.0 / (op.dim() as f64).sqrt();
    pauli_expectations(op)[1..].iter().map(|t| t * norm).collect()
}

/// Inverse of [`traceless_coordinates`] for a given identity coefficient:
/// `l₀𝟙 + Σ_i l_i S_i`.
pub fn from_traceless_coordinates(n: usize, identity: f64, coords: &[f64]) -> HermitianOperator {
    let d = 1usize << n;
    let norm = 1.0 / (d as f64).sqrt();
    let mut coeffs = Vec::with_capacity(d * d);
    coeffs.push(identity);
    coeffs.extend(coords.iter().map(|x| x * norm));
    from_pauli_coefficients(n, &coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_string_is_identity() {
        for n in 1..=4 {
            let label = "I".repeat(n);
            let op = pauli_string(&label).unwrap();
            assert_eq!(op.max_abs_diff(&HermitianOperator::identity(1 << n)), 0.0);
        }
    }

    #[test]
    fn single_qubit_matrices() {
        let x = pauli_string("X").unwrap();
        assert_eq!(x.get(0, 1), Complex64::new(1.0, 0.0));
        assert_eq!(x.get(1, 0), Complex64::new(1.0, 0.0));
        assert_eq!(x.get(0, 0), Complex64::new(0.0, 0.0));
        let y = pauli_string("Y").unwrap();
        assert_eq!(y.get(0, 1), Complex64::new(0.0, -1.0));
        assert_eq!(y.get(1, 0), Complex64::new(0.0, 1.0));
        let z = pauli_string("Z").unwrap();
        assert_eq!(z.get(1, 1), Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn strings_match_kron_of_factors() {
        for label in ["XY", "ZI", "YZX", "IYY"] {
            let factors: Vec<_> = label
                .chars()
                .map(|c| pauli_string(&c.to_string()).unwrap())
                .collect();
            let k = crate::operator::kron(&factors).unwrap();
            assert!(k.max_abs_diff(&pauli_string(label).unwrap()) < 1e-15, "{label}");
        }
    }

    #[test]
    fn illegal_character_rejected() {
        assert!(pauli_string("XA").is_err());
        assert!(pauli_string("").is_err());
    }

    #[test]
    fn two_qubit_trace_table_is_orthogonal() {
        let ops: Vec<_> = (0..16).map(|mu| pauli_operator(2, mu)).collect();
        for (a, pa) in ops.iter().enumerate() {
            for (b, pb) in ops.iter().enumerate() {
                let expected = if a == b { 4.0 } else { 0.0 };
                assert!((pa.inner(pb) - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn traceless_basis_single_qubit() {
        let basis = traceless_basis(1);
        assert_eq!(basis.len(), 3);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for (op, label) in basis.iter().zip(["X", "Y", "Z"]) {
            let expected = pauli_string(label).unwrap() * s;
            assert!(op.max_abs_diff(&expected) < 1e-15);
            assert!(op.trace().abs() < 1e-15);
        }
    }

    #[test]
    fn traceless_gram_is_identity_for_two_qubits() {
        let basis = traceless_basis(2);
        assert_eq!(basis.len(), 15);
        for (i, a) in basis.iter().enumerate() {
            assert!(a.trace().abs() < 1e-15);
            for (j, b) in basis.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((a.inner(b) - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn expectations_roundtrip() {
        let op = crate::testutil::random_hermitian(3, 11);
        let t = pauli_expectations(&op);
        let coeffs: Vec<f64> = t.iter().map(|x| x / 8.0).collect();
        let back = from_pauli_coefficients(3, &coeffs);
        assert!(back.max_abs_diff(&op) < 1e-13);
        for mu in [0, 5, 17, 63] {
            let direct = op.inner(&pauli_operator(3, mu));
            assert!((direct - t[mu]).abs() < 1e-12);
        }
    }

    #[test]
    fn labels_and_weights() {
        assert_eq!(pauli_label(3, pauli_index("XIZ").unwrap()), "XIZ");
        assert_eq!(pauli_weight(3, pauli_index("XIZ").unwrap()), 2);
        assert_eq!(pauli_index("IIX").unwrap(), 1);
    }
}
