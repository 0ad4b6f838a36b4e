//! Two-site averaged superoperator `m_t = avg_U U^{(x)t,t}` over a gate
//! distribution on U(4), expressed as a matrix over a local basis pair.
//!
//! Two evaluation paths are provided: the exact permutation-projector formula
//! for Haar on U(4), and factorized Pauli-transfer products for finite
//! dagger-symmetrized gate sets.

use ndarray::{Array1, Array2};
use ndarray_linalg::Inverse;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moment_space::{
    catalan, cycle_trace, factorial, gram_matrix, kron, pauli, pauli2, pair_ket, permutation_ket,
    u2_invariant_basis, OperatorKet, PauliString, Perm,
};

const HERMITICITY_TOL: f64 = 1e-8;

fn c64(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Max-entry deviation of `U^dag U` from the identity.
pub fn unitarity_deviation(u: &Array2<C64>) -> f64 {
    let d = u.dim().0;
    let uhu = u.mapv(|v| v.conj()).reversed_axes().dot(u);
    let mut dev = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let want = if i == j { c64(1.0) } else { c64(0.0) };
            dev = dev.max((uhu[[i, j]] - want).norm());
        }
    }
    dev
}

fn check_unitary(u: &Array2<C64>, tol: f64) -> Result<()> {
    let dev = unitarity_deviation(u);
    if dev > tol {
        return Err(Error::NonUnitary { deviation: dev });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Local bases
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisKind {
    /// All 4^t normalized Pauli strings.
    FullPauli,
    /// The C_t-dimensional U(2)-invariant restriction.
    Invariant,
}

/// An orthonormal basis of (a subspace of) the site-local moment space.
#[derive(Debug, Clone)]
pub struct LocalBasis {
    t: usize,
    kind: BasisKind,
    kets: Vec<OperatorKet>,
    /// Expansion of each basis ket over normalized Pauli strings, `[idx, s]`.
    pauli_coeffs: Array2<C64>,
}

impl LocalBasis {
    pub fn new(t: usize, kind: BasisKind) -> Result<Self> {
        let kets = match kind {
            BasisKind::FullPauli => (0..4usize.pow(t as u32))
                .map(|s| PauliString::from_index(s, t).normalized_ket())
                .collect::<Result<Vec<_>>>()?,
            BasisKind::Invariant => u2_invariant_basis(t)?,
        };
        let np = 4usize.pow(t as u32);
        let mut pauli_coeffs = Array2::zeros((kets.len(), np));
        for (i, ket) in kets.iter().enumerate() {
            match kind {
                BasisKind::FullPauli => pauli_coeffs[[i, i]] = c64(1.0),
                BasisKind::Invariant => {
                    for s in 0..np {
                        let p = PauliString::from_index(s, t).normalized_ket()?;
                        let ov = p.inner(ket);
                        if ov.norm() > 1e-14 {
                            pauli_coeffs[[i, s]] = ov;
                        }
                    }
                }
            }
        }
        Ok(LocalBasis { t, kind, kets, pauli_coeffs })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.kets.len()
    }

    pub fn kets(&self) -> &[OperatorKet] {
        &self.kets
    }

    pub fn pauli_coeffs(&self) -> &Array2<C64> {
        &self.pauli_coeffs
    }

    /// Nonzero Pauli-string components of basis element `idx`.
    pub fn pauli_support(&self, idx: usize) -> Vec<(usize, C64)> {
        self.pauli_coeffs
            .row(idx)
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm() > 1e-14)
            .map(|(s, v)| (s, *v))
            .collect()
    }

    /// Coordinates of the normalized permutation ket `|sigma>>/2^{t/2}` in this
    /// basis. Errors if the ket does not lie in the span.
    pub fn permutation_coords(&self, sigma: &Perm) -> Result<Array1<C64>> {
        let ket = permutation_ket(sigma, 2)?;
        let norm = ket.norm();
        let mut coords = Array1::zeros(self.dim());
        let mut residual = ket.clone();
        for (i, b) in self.kets.iter().enumerate() {
            let ov = b.inner(&ket);
            coords[i] = ov / norm;
            residual.add_scaled(-ov, b);
        }
        let res = residual.norm() / norm;
        if res > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "permutation ket outside basis span (residual {res:.3e})"
            )));
        }
        Ok(coords)
    }
}

// ---------------------------------------------------------------------------
// Gate distributions
// ---------------------------------------------------------------------------

/// A dagger-symmetrized probability distribution over two-qubit unitaries.
#[derive(Debug, Clone)]
pub enum GateDistribution {
    HaarU4,
    FiniteSet {
        name: String,
        gates: Vec<Array2<C64>>,
        weights: Vec<f64>,
    },
}

impl GateDistribution {
    pub fn haar_u4() -> Self {
        GateDistribution::HaarU4
    }

    /// Build a finite distribution. Unless `already_symmetric` is set, the
    /// set is closed under Hermitian conjugation: gates and their daggers at
    /// half weight, with exact duplicates (matrix distance < 1e-12) merged.
    pub fn finite(
        name: impl Into<String>,
        gates: Vec<Array2<C64>>,
        weights: Vec<f64>,
        already_symmetric: bool,
    ) -> Result<Self> {
        if gates.is_empty() || gates.len() != weights.len() {
            return Err(Error::InvalidInput("gates/weights length mismatch".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::BadWeights { sum });
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::BadWeights { sum });
        }
        for g in &gates {
            if g.dim() != (4, 4) {
                return Err(Error::InvalidInput("gates must be 4x4".into()));
            }
            check_unitary(g, 1e-10)?;
        }
        let (gates, weights) = if already_symmetric {
            (gates, weights)
        } else {
            let mut out_g: Vec<Array2<C64>> = Vec::new();
            let mut out_w: Vec<f64> = Vec::new();
            let push = |g: Array2<C64>, w: f64, out_g: &mut Vec<Array2<C64>>, out_w: &mut Vec<f64>| {
                for (i, h) in out_g.iter().enumerate() {
                    let dist: f64 = h
                        .iter()
                        .zip(g.iter())
                        .map(|(a, b)| (a - b).norm_sqr())
                        .sum::<f64>()
                        .sqrt();
                    if dist < 1e-12 {
                        out_w[i] += w;
                        return;
                    }
                }
                out_g.push(g);
                out_w.push(w);
            };
            for (g, &w) in gates.iter().zip(weights.iter()) {
                let dag = g.mapv(|v| v.conj()).reversed_axes().to_owned();
                push(g.clone(), w / 2.0, &mut out_g, &mut out_w);
                push(dag, w / 2.0, &mut out_g, &mut out_w);
            }
            (out_g, out_w)
        };
        Ok(GateDistribution::FiniteSet { name: name.into(), gates, weights })
    }

    /// A small dagger-symmetrized universal reference set: both CNOT
    /// orientations plus local H and T factors, uniformly weighted.
    pub fn universal_demo() -> Self {
        let gates = vec![
            cnot(0, 1),
            cnot(1, 0),
            kron(&hadamard(), &pauli(0)),
            kron(&pauli(0), &hadamard()),
            kron(&t_gate(), &pauli(0)),
            kron(&pauli(0), &t_gate()),
        ];
        let n = gates.len();
        GateDistribution::finite("universal-demo", gates, vec![1.0 / n as f64; n], false)
            .expect("demo set is valid")
    }

    pub fn name(&self) -> &str {
        match self {
            GateDistribution::HaarU4 => "haar-u4",
            GateDistribution::FiniteSet { name, .. } => name,
        }
    }

    pub fn is_haar(&self) -> bool {
        matches!(self, GateDistribution::HaarU4)
    }

    /// Whether the distribution is invariant under conjugation by the
    /// two-qubit SWAP (checked numerically for finite sets).
    pub fn swap_invariant(&self) -> bool {
        match self {
            GateDistribution::HaarU4 => true,
            GateDistribution::FiniteSet { gates, weights, .. } => {
                let s = swap_gate();
                for (g, &w) in gates.iter().zip(weights.iter()) {
                    let sgs = s.dot(g).dot(&s);
                    let mut matched = 0.0f64;
                    for (h, &wh) in gates.iter().zip(weights.iter()) {
                        let dist: f64 = h
                            .iter()
                            .zip(sgs.iter())
                            .map(|(a, b)| (a - b).norm_sqr())
                            .sum::<f64>()
                            .sqrt();
                        if dist < 1e-10 {
                            matched += wh;
                        }
                    }
                    if (matched - w).abs() > 1e-10 {
                        return false;
                    }
                }
                true
            }
        }
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: GateSetFile = serde_json::from_str(&text)?;
        let mut gates = Vec::new();
        let mut weights = Vec::new();
        for entry in file.gates {
            let mut m = Array2::zeros((4, 4));
            if entry.matrix.len() != 4 || entry.matrix.iter().any(|r| r.len() != 4) {
                return Err(Error::InvalidInput("gate matrix must be 4x4".into()));
            }
            for (i, row) in entry.matrix.iter().enumerate() {
                for (j, &[re, im]) in row.iter().enumerate() {
                    m[[i, j]] = C64::new(re, im);
                }
            }
            gates.push(m);
            weights.push(entry.weight);
        }
        GateDistribution::finite(file.name, gates, weights, file.symmetric.unwrap_or(false))
    }
}

#[derive(Serialize, Deserialize)]
struct GateSetFile {
    name: String,
    #[serde(default)]
    symmetric: Option<bool>,
    gates: Vec<GateEntry>,
}

#[derive(Serialize, Deserialize)]
struct GateEntry {
    weight: f64,
    matrix: Vec<Vec<[f64; 2]>>,
}

// common two-qubit gates

pub fn hadamard() -> Array2<C64> {
    let s = 1.0 / 2f64.sqrt();
    Array2::from_shape_vec((2, 2), vec![c64(s), c64(s), c64(s), c64(-s)]).unwrap()
}

pub fn t_gate() -> Array2<C64> {
    let mut m = Array2::zeros((2, 2));
    m[[0, 0]] = c64(1.0);
    m[[1, 1]] = C64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    m
}

/// CNOT with the given control/target qubits (0 or 1) of the pair.
pub fn cnot(control: usize, target: usize) -> Array2<C64> {
    assert!(control < 2 && target < 2 && control != target);
    let mut m = Array2::zeros((4, 4));
    for basis in 0..4 {
        let bits = [basis >> 1 & 1, basis & 1];
        let mut out = bits;
        if bits[control] == 1 {
            out[target] ^= 1;
        }
        m[[out[0] * 2 + out[1], basis]] = c64(1.0);
    }
    m
}

pub fn swap_gate() -> Array2<C64> {
    let mut m = Array2::zeros((4, 4));
    for a in 0..2 {
        for b in 0..2 {
            m[[b * 2 + a, a * 2 + b]] = c64(1.0);
        }
    }
    m
}

/// The canonical nonlocal gate `exp{i(q XX + r YY + s ZZ)}`.
pub fn canonical_gate(q: f64, r: f64, s: f64) -> Array2<C64> {
    let factor = |theta: f64, p: usize| -> Array2<C64> {
        let pp = pauli2(p, p);
        let mut m = Array2::zeros((4, 4));
        for i in 0..4 {
            m[[i, i]] = c64(theta.cos());
        }
        m + pp.mapv(|v| v * C64::new(0.0, theta.sin()))
    };
    factor(q, 1).dot(&factor(r, 2)).dot(&factor(s, 3))
}

// ---------------------------------------------------------------------------
// Pauli transfer matrix
// ---------------------------------------------------------------------------

/// The 16x16 real transfer matrix of conjugation by a two-qubit unitary in the
/// normalized Pauli basis: `R[(p',q'),(p,q)] = tr[(s_p' (x) s_q') U (s_p (x) s_q) U^dag]/4`.
pub fn pauli_transfer_matrix(u: &Array2<C64>) -> Result<Array2<f64>> {
    check_unitary(u, 1e-10)?;
    let udag = u.mapv(|v| v.conj()).reversed_axes().to_owned();
    let mut r = Array2::zeros((16, 16));
    let paulis: Vec<Array2<C64>> = (0..16).map(|i| pauli2(i / 4, i % 4)).collect();
    for col in 0..16 {
        let conj = u.dot(&paulis[col]).dot(&udag);
        for row in 0..16 {
            let tr: C64 = paulis[row]
                .iter()
                .zip(conj.t().iter())
                .map(|(a, b)| a * b)
                .sum();
            debug_assert!(tr.im.abs() < 1e-9);
            r[[row, col]] = tr.re / 4.0;
        }
    }
    Ok(r)
}

// ---------------------------------------------------------------------------
// The averaged two-site operator
// ---------------------------------------------------------------------------

/// Matrix of `m_t` over pairs of local basis elements: entry
/// `[(alpha,gamma),(beta,delta)] = <<e_alpha e_gamma| m_t |e_beta e_delta>>`,
/// row index `alpha*d + gamma`.
#[derive(Debug, Clone)]
pub struct LocalMomentOperator {
    t: usize,
    basis: LocalBasis,
    matrix: Array2<C64>,
    asymmetry: f64,
    swap_invariant: bool,
}

impl LocalMomentOperator {
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn basis(&self) -> &LocalBasis {
        &self.basis
    }

    pub fn dim_local(&self) -> usize {
        self.basis.dim()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    /// `c_{alpha beta gamma delta} = <<alpha gamma| m_t |beta delta>>`.
    pub fn element(&self, alpha: usize, beta: usize, gamma: usize, delta: usize) -> C64 {
        let d = self.basis.dim();
        self.matrix[[alpha * d + gamma, beta * d + delta]]
    }

    /// Pre-symmetrization Hermiticity deviation.
    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    pub fn swap_invariant(&self) -> bool {
        self.swap_invariant
    }

    /// Nonzero coefficients `(alpha, beta, gamma, delta, c)` above `tol`.
    pub fn nonzero_coefficients(&self, tol: f64) -> Vec<(usize, usize, usize, usize, C64)> {
        let d = self.basis.dim();
        let mut out = Vec::new();
        for alpha in 0..d {
            for gamma in 0..d {
                for beta in 0..d {
                    for delta in 0..d {
                        let c = self.matrix[[alpha * d + gamma, beta * d + delta]];
                        if c.norm() > tol {
                            out.push((alpha, beta, gamma, delta, c));
                        }
                    }
                }
            }
        }
        out
    }
}

/// Overlap of a two-site product ket with the two-site permutation ket
/// `|sigma^{(2)}>>`, evaluated densely for t <= 3 and by cycle-factorized
/// traces of Pauli products above.
pub fn pair_perm_overlap(a: &OperatorKet, b: &OperatorKet, sigma: &Perm) -> Result<C64> {
    let t = a.t();
    if t <= 3 {
        let pair = pair_ket(a, b)?;
        let two_site = permutation_ket(sigma, 4)?;
        Ok(pair.inner(&two_site))
    } else {
        // expand both sites over Pauli strings; each term factorizes over cycles
        let np = 4usize.pow(t as u32);
        let norm = 2f64.powi(t as i32);
        let mut total = c64(0.0);
        for s in 0..np {
            let ps = PauliString::from_index(s, t);
            let ca = ps.normalized_ket()?.inner(a);
            if ca.norm() < 1e-15 {
                continue;
            }
            for u in 0..np {
                let pu = PauliString::from_index(u, t);
                let cb = pu.normalized_ket()?.inner(b);
                if cb.norm() < 1e-15 {
                    continue;
                }
                let mats: Vec<Array2<C64>> = (0..t)
                    .map(|k| pauli2(ps.labels()[k] as usize, pu.labels()[k] as usize))
                    .collect();
                total += ca.conj() * cb.conj() * cycle_trace(sigma, &mats) / c64(norm);
                // the bra is the Pauli pair; its coefficients enter conjugated
            }
        }
        // total currently holds <<pair_pauli|sigma>> weighted by conj coeffs of
        // (a,b) expansion: <<ab|sigma>> = sum conj(c_a c_b) <<P_s P_u|sigma>>
        Ok(total)
    }
}

/// Single matrix element of the Haar-on-U(4) average, via the exact
/// permutation-projector formula. Requires t <= 4 so the two-site Gram matrix
/// is invertible.
pub fn haar_m_element(
    t: usize,
    bra_pair: (&OperatorKet, &OperatorKet),
    ket_pair: (&OperatorKet, &OperatorKet),
) -> Result<C64> {
    if t > 4 {
        return Err(Error::GramSingular { t, local_dim: 4 });
    }
    let g = gram_matrix(t, 4)?;
    let ginv = g.inv().map_err(|_| Error::GramSingular { t, local_dim: 4 })?;
    let perms = Perm::all(t);
    let bra_ov: Vec<C64> = perms
        .iter()
        .map(|s| pair_perm_overlap(bra_pair.0, bra_pair.1, s))
        .collect::<Result<Vec<_>>>()?;
    let ket_ov: Vec<C64> = perms
        .iter()
        .map(|s| pair_perm_overlap(ket_pair.0, ket_pair.1, s))
        .collect::<Result<Vec<_>>>()?;
    let mut out = c64(0.0);
    for (i, _) in perms.iter().enumerate() {
        for (j, _) in perms.iter().enumerate() {
            out += bra_ov[i] * c64(ginv[[i, j]]) * ket_ov[j].conj();
        }
    }
    Ok(out)
}

/// Build the full matrix of `m_t` over the requested basis pair.
///
/// `quadrature_samples` is reserved for continuous non-Haar distributions,
/// which are not supported; it is ignored for the Haar and finite paths.
pub fn build_local_moment_operator(
    dist: &GateDistribution,
    t: usize,
    kind: BasisKind,
    _quadrature_samples: usize,
) -> Result<LocalMomentOperator> {
    let basis = LocalBasis::new(t, kind)?;
    let mut matrix = match dist {
        GateDistribution::HaarU4 => haar_matrix(t, &basis)?,
        GateDistribution::FiniteSet { gates, weights, .. } => {
            finite_matrix(t, &basis, gates, weights)?
        }
    };
    // Hermitian symmetrization with asymmetry diagnostic
    let d2 = matrix.dim().0;
    let mut asymmetry = 0.0f64;
    for i in 0..d2 {
        for j in i..d2 {
            let a = matrix[[i, j]];
            let b = matrix[[j, i]].conj();
            asymmetry = asymmetry.max((a - b).norm());
            let avg = (a + b) / 2.0;
            matrix[[i, j]] = avg;
            matrix[[j, i]] = avg.conj();
        }
    }
    if asymmetry > HERMITICITY_TOL {
        return Err(Error::Asymmetry { asymmetry, tolerance: HERMITICITY_TOL });
    }
    Ok(LocalMomentOperator {
        t,
        basis,
        matrix,
        asymmetry,
        swap_invariant: dist.swap_invariant(),
    })
}

/// Haar path: `m_t` is the orthogonal projector onto the span of the two-site
/// permutation kets; elements via integer Gram matrices.
fn haar_matrix(t: usize, basis: &LocalBasis) -> Result<Array2<C64>> {
    if t > 4 {
        return Err(Error::GramSingular { t, local_dim: 4 });
    }
    let g = gram_matrix(t, 4)?;
    let ginv = g.inv().map_err(|_| Error::GramSingular { t, local_dim: 4 })?;
    let perms = Perm::all(t);
    let d = basis.dim();
    let np = 4usize.pow(t as u32);
    let norm = 2f64.powi(t as i32);

    // Pauli-pair overlaps with each permutation ket, then contract with the
    // basis expansion coefficients
    let supports: Vec<Vec<(usize, C64)>> = (0..d).map(|i| basis.pauli_support(i)).collect();
    let pauli_mats: Vec<Array2<C64>> = (0..16).map(|i| pauli2(i / 4, i % 4)).collect();
    let mut overlaps: Vec<Array2<C64>> = Vec::with_capacity(perms.len());
    for sigma in &perms {
        // ov[s, u] = <<(P_s/2^{t/2})(P_u/2^{t/2}) | sigma^{(2)}>>
        let mut ov = Array2::zeros((np, np));
        for s in 0..np {
            let ls = PauliString::from_index(s, t);
            for u in 0..np {
                let lu = PauliString::from_index(u, t);
                let mats: Vec<Array2<C64>> = (0..t)
                    .map(|k| {
                        pauli_mats[ls.labels()[k] as usize * 4 + lu.labels()[k] as usize].clone()
                    })
                    .collect();
                ov[[s, u]] = cycle_trace(sigma, &mats) / c64(norm);
            }
        }
        // o[alpha, gamma] = sum_{s,u} conj(A[alpha,s] A[gamma,u]) ov[s,u]
        let mut o = Array2::zeros((d, d));
        for alpha in 0..d {
            for gamma in 0..d {
                let mut acc = c64(0.0);
                for &(s, cs) in &supports[alpha] {
                    for &(u, cu) in &supports[gamma] {
                        acc += cs.conj() * cu.conj() * ov[[s, u]];
                    }
                }
                o[[alpha, gamma]] = acc;
            }
        }
        overlaps.push(o);
    }

    // m = F^T Ginv conj(F) with F[i, (alpha,gamma)] = <<e_alpha e_gamma|sigma_i^{(2)}>>
    let k = perms.len();
    let mut f = Array2::zeros((k, d * d));
    for (i, o) in overlaps.iter().enumerate() {
        for alpha in 0..d {
            for gamma in 0..d {
                f[[i, alpha * d + gamma]] = o[[alpha, gamma]];
            }
        }
    }
    let h = ginv.mapv(c64).dot(&f.mapv(|v| v.conj()));
    Ok(f.t().dot(&h))
}

/// Finite path: weighted average of factorized Pauli-transfer products,
/// accumulated in the full Pauli pair basis and transformed if needed.
fn finite_matrix(
    t: usize,
    basis: &LocalBasis,
    gates: &[Array2<C64>],
    weights: &[f64],
) -> Result<Array2<C64>> {
    let np = 4usize.pow(t as u32);
    if np * np > 1 << 24 {
        return Err(Error::DimensionOverflow { t, local_dim: 4, dim: np * np });
    }
    let mut full = Array2::<f64>::zeros((np * np, np * np));
    let mut digits = |mut idx: usize| -> Vec<usize> {
        let mut d = vec![0usize; t];
        for k in (0..t).rev() {
            d[k] = idx % 4;
            idx /= 4;
        }
        d
    };
    let row_digits: Vec<Vec<usize>> = (0..np).map(&mut digits).collect();
    for (u, &w) in gates.iter().zip(weights.iter()) {
        let r = pauli_transfer_matrix(u)?;
        for s in 0..np {
            for sp in 0..np {
                for b in 0..np {
                    for bp in 0..np {
                        let mut prod = w;
                        for k in 0..t {
                            prod *= r[[
                                row_digits[s][k] * 4 + row_digits[sp][k],
                                row_digits[b][k] * 4 + row_digits[bp][k],
                            ]];
                            if prod == 0.0 {
                                break;
                            }
                        }
                        full[[s * np + sp, b * np + bp]] += prod;
                    }
                }
            }
        }
    }
    match basis.kind() {
        BasisKind::FullPauli => Ok(full.mapv(c64)),
        BasisKind::Invariant => {
            let d = basis.dim();
            // pair transform: out = (A (x) A) full (A (x) A)^dag
            let mut half = Array2::<C64>::zeros((d * d, np * np));
            for alpha in 0..d {
                for gamma in 0..d {
                    for col in 0..np * np {
                        let mut acc = c64(0.0);
                        for &(s, cs) in basis.pauli_support(alpha).iter() {
                            for &(u, cu) in basis.pauli_support(gamma).iter() {
                                acc += cs.conj() * cu.conj() * c64(full[[s * np + u, col]]);
                            }
                        }
                        half[[alpha * d + gamma, col]] = acc;
                    }
                }
            }
            let mut out = Array2::<C64>::zeros((d * d, d * d));
            for row in 0..d * d {
                for beta in 0..d {
                    for delta in 0..d {
                        let mut acc = c64(0.0);
                        for &(s, cs) in basis.pauli_support(beta).iter() {
                            for &(u, cu) in basis.pauli_support(delta).iter() {
                                acc += half[[row, s * np + u]] * cs * cu;
                            }
                        }
                        out[[row, beta * d + delta]] = acc;
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Total number of invariant-basis elements for order t (Catalan number),
/// exposed for sector-dimension arithmetic.
pub fn invariant_dim(t: usize) -> usize {
    catalan(t)
}

/// Factorial, re-exported for sector bookkeeping.
pub fn permutation_count(t: usize) -> usize {
    factorial(t)
}
