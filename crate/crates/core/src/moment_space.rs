//! Algebra of local moment spaces: Pauli strings, permutation operator kets,
//! Gram matrices and the U(2)-invariant (commutant) basis.
//!
//! Operators on t copies of a local space of dimension `local_dim` are stored
//! as vectorized "operator kets": a dense complex vector of length
//! `local_dim^{2t}`, with the t ket-copy indices (row-major, copy 1 outermost)
//! followed by the t bra-copy indices. With this layout the flat vector is
//! exactly the row-major flattening of the operator matrix, and
//! `<<A|B>> = tr(A^dag B)` is the conjugated dot product.

use ndarray::{Array1, Array2};
use ndarray_linalg::Eigh;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Single-qubit Pauli matrix, `p` in 0..=3 (I, x, y, z).
pub fn pauli(p: usize) -> Array2<C64> {
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let z = C64::new(0.0, 0.0);
    match p {
        0 => Array2::from_shape_vec((2, 2), vec![o, z, z, o]).unwrap(),
        1 => Array2::from_shape_vec((2, 2), vec![z, o, o, z]).unwrap(),
        2 => Array2::from_shape_vec((2, 2), vec![z, -i, i, z]).unwrap(),
        3 => Array2::from_shape_vec((2, 2), vec![o, z, z, -o]).unwrap(),
        _ => panic!("pauli label {p} out of range"),
    }
}

/// Two-qubit Pauli `sigma_p (x) sigma_q` as a 4x4 matrix.
pub fn pauli2(p: usize, q: usize) -> Array2<C64> {
    kron(&pauli(p), &pauli(q))
}

/// Kronecker product with the left factor outermost.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::zeros((ra * rb, ca * cb));
    for ia in 0..ra {
        for ja in 0..ca {
            let f = a[[ia, ja]];
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for ib in 0..rb {
                for jb in 0..cb {
                    out[[ia * rb + ib, ja * cb + jb]] = f * b[[ib, jb]];
                }
            }
        }
    }
    out
}

/// Catalan number C_t = (2t)! / ((t+1)! t!).
pub fn catalan(t: usize) -> usize {
    let mut c: u128 = 1;
    for k in 0..t as u128 {
        c = c * 2 * (2 * k + 1) / (k + 2);
    }
    c as usize
}

pub fn factorial(t: usize) -> usize {
    (1..=t).product::<usize>().max(1)
}

// ---------------------------------------------------------------------------
// Permutations
// ---------------------------------------------------------------------------

/// Permutation of {0..t-1} in one-line notation: `map[k]` is the image of k.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Perm {
    map: Vec<usize>,
}

impl Perm {
    pub fn identity(t: usize) -> Self {
        Perm { map: (0..t).collect() }
    }

    pub fn from_one_line(map: Vec<usize>) -> Result<Self> {
        let t = map.len();
        let mut seen = vec![false; t];
        for &m in &map {
            if m >= t || seen[m] {
                return Err(Error::InvalidInput(format!("{map:?} is not a permutation")));
            }
            seen[m] = true;
        }
        Ok(Perm { map })
    }

    pub fn degree(&self) -> usize {
        self.map.len()
    }

    pub fn apply(&self, k: usize) -> usize {
        self.map[k]
    }

    pub fn one_line(&self) -> &[usize] {
        &self.map
    }

    /// (self . other)(k) = self(other(k)).
    pub fn compose(&self, other: &Perm) -> Perm {
        Perm { map: other.map.iter().map(|&k| self.map[k]).collect() }
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0; self.map.len()];
        for (k, &m) in self.map.iter().enumerate() {
            inv[m] = k;
        }
        Perm { map: inv }
    }

    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let t = self.map.len();
        let mut seen = vec![false; t];
        let mut cycles = Vec::new();
        for start in 0..t {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut k = self.map[start];
            while k != start {
                seen[k] = true;
                cycle.push(k);
                k = self.map[k];
            }
            cycles.push(cycle);
        }
        cycles
    }

    pub fn cycle_count(&self) -> usize {
        self.cycles().len()
    }

    /// All permutations of degree t in lexicographic order of one-line notation.
    pub fn all(t: usize) -> Vec<Perm> {
        use itertools::Itertools;
        (0..t)
            .permutations(t)
            .map(|map| Perm { map })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Operator kets
// ---------------------------------------------------------------------------

/// A vectorized operator on t copies of a `local_dim`-dimensional space.
#[derive(Debug, Clone)]
pub struct OperatorKet {
    t: usize,
    local_dim: usize,
    coeffs: Array1<C64>,
}

/// Dense realization caps; larger t must use factorized evaluation.
fn check_dense_cap(t: usize, local_dim: usize) -> Result<()> {
    let cap = match local_dim {
        2 => 5,
        4 => 4,
        _ => return Err(Error::InvalidInput(format!("unsupported local_dim {local_dim}"))),
    };
    if t == 0 || t > cap {
        let dim = local_dim.pow(2 * t as u32);
        return Err(Error::DimensionOverflow { t, local_dim, dim });
    }
    Ok(())
}

impl OperatorKet {
    /// Vectorize a `local_dim^t x local_dim^t` operator matrix.
    pub fn from_matrix(m: &Array2<C64>, t: usize, local_dim: usize) -> Result<Self> {
        check_dense_cap(t, local_dim)?;
        let d = local_dim.pow(t as u32);
        if m.dim() != (d, d) {
            return Err(Error::BasisMismatch { expected: d, got: m.dim().0 });
        }
        let coeffs = Array1::from_iter(m.iter().cloned());
        Ok(OperatorKet { t, local_dim, coeffs })
    }

    pub fn zeros(t: usize, local_dim: usize) -> Result<Self> {
        check_dense_cap(t, local_dim)?;
        let d = local_dim.pow(t as u32);
        Ok(OperatorKet { t, local_dim, coeffs: Array1::zeros(d * d) })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn coeffs(&self) -> &Array1<C64> {
        &self.coeffs
    }

    /// The operator as a dense matrix.
    pub fn to_matrix(&self) -> Array2<C64> {
        let d = self.local_dim.pow(self.t as u32);
        Array2::from_shape_vec((d, d), self.coeffs.to_vec()).unwrap()
    }

    /// Hilbert-Schmidt inner product `<<self|other>> = tr(self^dag other)`.
    pub fn inner(&self, other: &OperatorKet) -> C64 {
        assert_eq!(self.coeffs.len(), other.coeffs.len(), "operator ket dimension mismatch");
        self.coeffs
            .iter()
            .zip(other.coeffs.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.sqrt()
    }

    pub fn normalized(&self) -> OperatorKet {
        let n = self.norm();
        OperatorKet {
            t: self.t,
            local_dim: self.local_dim,
            coeffs: self.coeffs.mapv(|c| c / n),
        }
    }

    pub fn scaled(&self, f: C64) -> OperatorKet {
        OperatorKet {
            t: self.t,
            local_dim: self.local_dim,
            coeffs: self.coeffs.mapv(|c| c * f),
        }
    }

    pub fn add_scaled(&mut self, f: C64, other: &OperatorKet) {
        for (a, b) in self.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *a += f * b;
        }
    }
}

/// Two-site product ket: the operator `A (x) B` on t copies of the combined
/// pair space, with per-copy index `4*a_k + b_k` interleaving site indices.
pub fn pair_ket(a: &OperatorKet, b: &OperatorKet) -> Result<OperatorKet> {
    assert_eq!(a.local_dim, 2);
    assert_eq!(b.local_dim, 2);
    assert_eq!(a.t, b.t);
    let t = a.t;
    check_dense_cap(t, 4)?;
    let da = 1usize << t; // 2^t
    let d = da * da; // 4^t
    let mut m = Array2::zeros((d, d));
    let am = a.to_matrix();
    let bm = b.to_matrix();
    // row index r over (C4)^{(x)t}: copy-k digit (a_k, b_k); split into the
    // site-1 row index and the site-2 row index by de-interleaving bit pairs
    for r in 0..d {
        let (ra, rb) = split_pair_index(r, t);
        for c in 0..d {
            let (ca, cb) = split_pair_index(c, t);
            m[[r, c]] = am[[ra, ca]] * bm[[rb, cb]];
        }
    }
    OperatorKet::from_matrix(&m, t, 4)
}

/// Split a base-4 multi-index (t digits) into two base-2 multi-indices.
fn split_pair_index(idx: usize, t: usize) -> (usize, usize) {
    let mut a = 0usize;
    let mut b = 0usize;
    let mut rest = idx;
    let mut digits = vec![0usize; t];
    for k in (0..t).rev() {
        digits[k] = rest % 4;
        rest /= 4;
    }
    for k in 0..t {
        a = a * 2 + digits[k] / 2;
        b = b * 2 + digits[k] % 2;
    }
    (a, b)
}

// ---------------------------------------------------------------------------
// Pauli strings
// ---------------------------------------------------------------------------

/// A t-fold tensor product of single-qubit Paulis, labels in {0,1,2,3}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliString {
    labels: Vec<u8>,
}

impl PauliString {
    pub fn new(labels: Vec<u8>) -> Result<Self> {
        if labels.iter().any(|&l| l > 3) {
            return Err(Error::InvalidInput("Pauli labels must be in 0..=3".into()));
        }
        Ok(PauliString { labels })
    }

    /// String with index `s` in 0..4^t, base-4 digits with copy 1 outermost.
    pub fn from_index(s: usize, t: usize) -> Self {
        let mut labels = vec![0u8; t];
        let mut rest = s;
        for k in (0..t).rev() {
            labels[k] = (rest % 4) as u8;
            rest /= 4;
        }
        PauliString { labels }
    }

    pub fn index(&self) -> usize {
        self.labels.iter().fold(0, |acc, &l| acc * 4 + l as usize)
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Number of non-identity factors.
    pub fn degree(&self) -> usize {
        self.labels.iter().filter(|&&l| l != 0).count()
    }

    pub fn to_matrix(&self) -> Array2<C64> {
        let mut m = pauli(self.labels[0] as usize);
        for &l in &self.labels[1..] {
            m = kron(&m, &pauli(l as usize));
        }
        m
    }

    /// Unnormalized ket; Hilbert-Schmidt norm 2^{t/2}.
    pub fn ket(&self) -> Result<OperatorKet> {
        OperatorKet::from_matrix(&self.to_matrix(), self.labels.len(), 2)
    }

    /// Orthonormal basis ket, divided by 2^{t/2}.
    pub fn normalized_ket(&self) -> Result<OperatorKet> {
        let t = self.labels.len();
        Ok(self.ket()?.scaled(C64::new(1.0 / 2f64.powi(t as i32).sqrt(), 0.0)))
    }
}

// ---------------------------------------------------------------------------
// Permutation kets, Gram matrices, invariant basis
// ---------------------------------------------------------------------------

/// The vectorized permutation operator
/// `P_sigma = sum |i_1..i_t><i_{sigma(1)}..i_{sigma(t)}|` over per-copy indices.
pub fn permutation_ket(sigma: &Perm, local_dim: usize) -> Result<OperatorKet> {
    let t = sigma.degree();
    check_dense_cap(t, local_dim)?;
    let d = local_dim.pow(t as u32);
    let mut m = Array2::zeros((d, d));
    let mut digits = vec![0usize; t];
    for row in 0..d {
        let mut rest = row;
        for k in (0..t).rev() {
            digits[k] = rest % local_dim;
            rest /= local_dim;
        }
        // column digit k is i_{sigma(k)}
        let mut col = 0usize;
        for k in 0..t {
            col = col * local_dim + digits[sigma.apply(k)];
        }
        m[[row, col]] = C64::new(1.0, 0.0);
    }
    OperatorKet::from_matrix(&m, t, local_dim)
}

/// Gram matrix of permutation kets: entry (sigma, tau) is
/// `local_dim^{cycles(sigma^{-1} tau)}`, over permutations in lexicographic order.
pub fn gram_matrix(t: usize, local_dim: usize) -> Result<Array2<f64>> {
    if t > 5 {
        return Err(Error::DimensionOverflow { t, local_dim, dim: factorial(t) });
    }
    let perms = Perm::all(t);
    let k = perms.len();
    let mut g = Array2::zeros((k, k));
    for (i, s) in perms.iter().enumerate() {
        for (j, u) in perms.iter().enumerate() {
            let c = s.inverse().compose(u).cycle_count();
            g[[i, j]] = (local_dim as f64).powi(c as i32);
        }
    }
    Ok(g)
}

/// Numerical rank of a symmetric PSD matrix, relative tolerance on eigenvalues.
pub fn psd_rank(g: &Array2<f64>, rel_tol: f64) -> usize {
    let (w, _) = g.eigh(ndarray_linalg::UPLO::Lower).expect("symmetric eigensolve");
    let max = w.iter().cloned().fold(0.0f64, f64::max);
    w.iter().filter(|&&x| x > rel_tol * max).count()
}

/// Orthonormal basis of the commutant of `{U^{(x)t} : U in U(2)}` inside the
/// 4^t-dimensional local moment space, with the normalized identity ket first.
///
/// Built by modified Gram-Schmidt over the t! permutation kets (identity
/// first, then lexicographic order); the Gram-matrix rank must equal the
/// Catalan number C_t or an error is returned.
pub fn u2_invariant_basis(t: usize) -> Result<Vec<OperatorKet>> {
    let g = gram_matrix(t, 2)?;
    let tfac = factorial(t);
    let ct = catalan(t);
    let rank = psd_rank(&g, 1e-9);
    if tfac - rank != tfac - ct {
        return Err(Error::GramNullSpace { found: tfac - rank, expected: tfac - ct });
    }
    let mut basis: Vec<OperatorKet> = Vec::with_capacity(ct);
    for sigma in Perm::all(t) {
        let mut v = permutation_ket(&sigma, 2)?;
        let orig = v.norm();
        for b in &basis {
            let ov = b.inner(&v);
            v.add_scaled(-ov, b);
        }
        if v.norm() > 1e-7 * orig {
            basis.push(v.normalized());
        }
    }
    if basis.len() != ct {
        return Err(Error::GramNullSpace { found: tfac - basis.len(), expected: tfac - ct });
    }
    Ok(basis)
}

/// `tr(M^dag P_sigma)` factorized over the cycles of sigma: the product over
/// cycles of the trace of the per-copy factors multiplied in cycle order.
///
/// `mats[k]` is the (Hermitian or general) per-copy factor of `M^dag`; for
/// Hermitian factors this equals the overlap of the product ket with the
/// permutation ket.
pub fn cycle_trace(sigma: &Perm, mats: &[Array2<C64>]) -> C64 {
    let mut out = C64::new(1.0, 0.0);
    for cycle in sigma.cycles() {
        // trace of the ordered product along the cycle
        let first = &mats[cycle[0]];
        let mut prod = first.clone();
        for &k in cycle.iter().skip(1) {
            prod = prod.dot(&mats[k]);
        }
        let tr: C64 = (0..prod.dim().0).map(|i| prod[[i, i]]).sum();
        out *= tr;
    }
    out
}
