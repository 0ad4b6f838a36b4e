//! The chain-averaged superoperator in the totally symmetric (bosonic Fock)
//! sector, and its spectral gap with exact deflation of the eigenvalue-1
//! permutation subspace.

use ndarray::{Array1, Array2};
use ndarray_linalg::Eigh;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gate_averaging::{BasisKind, LocalMomentOperator};
use crate::moment_space::Perm;

/// Default cap on the sector dimension.
pub const DEFAULT_DIM_CAP: usize = 200_000;
/// Dense eigensolver is used up to this dimension, Lanczos above.
pub const DENSE_THRESHOLD: usize = 4000;

fn c64(re: f64) -> C64 {
    C64::new(re, 0.0)
}

// ---------------------------------------------------------------------------
// Occupation basis
// ---------------------------------------------------------------------------

/// Bosonic occupation vectors (n_1,...,n_d) with fixed total n, ordered
/// lexicographically descending, with a rank/unrank bijection.
#[derive(Debug, Clone)]
pub struct OccupationBasis {
    d_loc: usize,
    n: usize,
    states: Vec<Vec<u32>>,
}

/// C(d+n-1, n), the number of occupation vectors.
pub fn occupation_count(d_loc: usize, n: usize) -> usize {
    let mut c: u128 = 1;
    for k in 0..(d_loc as u128 - 1) {
        c = c * (n as u128 + k + 1) / (k + 1);
    }
    c as usize
}

impl OccupationBasis {
    pub fn new(d_loc: usize, n: usize, cap: usize) -> Result<Self> {
        assert!(d_loc >= 1);
        let dim = occupation_count(d_loc, n);
        if dim > cap {
            return Err(Error::CapExceeded { dim, cap });
        }
        let mut states = Vec::with_capacity(dim);
        fn fill(states: &mut Vec<Vec<u32>>, prefix: &mut Vec<u32>, remaining: u32, slots: usize) {
            if slots == 1 {
                prefix.push(remaining);
                states.push(prefix.clone());
                prefix.pop();
                return;
            }
            for first in (0..=remaining).rev() {
                prefix.push(first);
                fill(states, prefix, remaining - first, slots - 1);
                prefix.pop();
            }
        }
        let mut prefix = Vec::with_capacity(d_loc);
        fill(&mut states, &mut prefix, n as u32, d_loc);
        debug_assert_eq!(states.len(), dim);
        Ok(OccupationBasis { d_loc, n, states })
    }

    pub fn d_loc(&self) -> usize {
        self.d_loc
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn unrank(&self, k: usize) -> &[u32] {
        &self.states[k]
    }

    /// Rank of an occupation vector, by the combinatorial number system.
    pub fn rank(&self, occ: &[u32]) -> usize {
        debug_assert_eq!(occ.len(), self.d_loc);
        let mut rank = 0usize;
        let mut remaining = self.n as u32;
        for (pos, &o) in occ.iter().enumerate() {
            let slots = self.d_loc - pos;
            if slots == 1 {
                break;
            }
            // states whose digit at `pos` is larger than `o` come first
            for first in (o + 1)..=remaining {
                rank += occupation_count(slots - 1, (remaining - first) as usize);
            }
            remaining -= o;
        }
        rank
    }
}

/// Symmetric Fock-space image of the n-fold product of a normalized local
/// amplitude vector: amplitude sqrt(n!/prod n_a!) prod v_a^{n_a}.
pub fn product_state_in_fock(v: &Array1<C64>, n: usize, basis: &OccupationBasis) -> Result<Array1<C64>> {
    if basis.d_loc() != v.len() {
        return Err(Error::BasisMismatch { expected: basis.d_loc(), got: v.len() });
    }
    if basis.n() != n {
        return Err(Error::InvalidInput(format!(
            "basis holds {} excitations, requested {n}",
            basis.n()
        )));
    }
    let norm: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::Unnormalized { norm });
    }
    let mut out = Array1::zeros(basis.dim());
    for k in 0..basis.dim() {
        let occ = basis.unrank(k);
        // multinomial coefficient n!/prod n_a!
        let mut coef = 1.0f64;
        let mut used = 0u32;
        for &na in occ {
            for j in 1..=na {
                coef *= (used + j) as f64 / j as f64;
            }
            used += na;
        }
        let mut amp = c64(coef.sqrt());
        for (a, &na) in occ.iter().enumerate() {
            amp *= v[a].powu(na);
        }
        out[k] = amp;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Assembled sector matrix
// ---------------------------------------------------------------------------

/// The chain-averaged superoperator restricted to the totally symmetric
/// sector, stored as sparse rows of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct SymmetricMomentMatrix {
    n: usize,
    t: usize,
    basis_kind: BasisKind,
    occupations: OccupationBasis,
    rows: Vec<Vec<(usize, C64)>>,
    asymmetry: f64,
}

impl SymmetricMomentMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.occupations.dim()
    }

    pub fn basis_kind(&self) -> BasisKind {
        self.basis_kind
    }

    pub fn occupations(&self) -> &OccupationBasis {
        &self.occupations
    }

    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    pub fn matvec(&self, v: &Array1<C64>) -> Array1<C64> {
        let mut out = Array1::zeros(self.dim());
        for (i, row) in self.rows.iter().enumerate() {
            let mut acc = c64(0.0);
            for &(j, m) in row {
                acc += m * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let d = self.dim();
        let mut m = Array2::zeros((d, d));
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[[i, j]] = v;
            }
        }
        m
    }
}

/// Assemble `M_t` in the symmetric sector from the two-site coefficients
/// `c_{alpha beta gamma delta}` via the normal-ordered two-body action
/// `a+_alpha a+_gamma a_beta a_delta / (n(n-1))`.
pub fn assemble_symmetric_moment_matrix(
    m_local: &LocalMomentOperator,
    n: usize,
    cap: usize,
) -> Result<SymmetricMomentMatrix> {
    if n < 2 {
        return Err(Error::InvalidInput("need n >= 2 qubits".into()));
    }
    let d_loc = m_local.dim_local();
    let occupations = OccupationBasis::new(d_loc, n, cap)?;
    let dim = occupations.dim();
    let coeffs = m_local.nonzero_coefficients(1e-14);
    let prefactor = 1.0 / (n as f64 * (n as f64 - 1.0));

    // column images, built in parallel, then Hermitian-symmetrized
    let columns: Vec<Vec<(usize, C64)>> = (0..dim)
        .into_par_iter()
        .map(|col| {
            let occ = occupations.unrank(col);
            let mut entries: std::collections::HashMap<usize, C64> = std::collections::HashMap::new();
            let mut work = occ.to_vec();
            for &(alpha, beta, gamma, delta, c) in &coeffs {
                // a_delta then a_beta
                if work[delta] == 0 {
                    continue;
                }
                let mut amp = (work[delta] as f64).sqrt();
                work[delta] -= 1;
                if work[beta] == 0 {
                    work[delta] += 1;
                    continue;
                }
                amp *= (work[beta] as f64).sqrt();
                work[beta] -= 1;
                // a+_gamma then a+_alpha
                amp *= (work[gamma] as f64 + 1.0).sqrt();
                work[gamma] += 1;
                amp *= (work[alpha] as f64 + 1.0).sqrt();
                work[alpha] += 1;
                let row = occupations.rank(&work);
                *entries.entry(row).or_insert(c64(0.0)) += c * c64(amp * prefactor);
                // restore
                work[alpha] -= 1;
                work[gamma] -= 1;
                work[beta] += 1;
                work[delta] += 1;
            }
            let mut v: Vec<(usize, C64)> = entries.into_iter().collect();
            v.sort_unstable_by_key(|&(r, _)| r);
            v
        })
        .collect();

    // transpose to rows and symmetrize: M <- (M + M^dag)/2
    let mut row_maps: Vec<std::collections::HashMap<usize, (C64, C64)>> =
        vec![std::collections::HashMap::new(); dim];
    for (col, entries) in columns.iter().enumerate() {
        for &(row, v) in entries {
            row_maps[row].entry(col).or_insert((c64(0.0), c64(0.0))).0 = v;
            row_maps[col].entry(row).or_insert((c64(0.0), c64(0.0))).1 = v.conj();
        }
    }
    let mut asymmetry = 0.0f64;
    let mut rows: Vec<Vec<(usize, C64)>> = Vec::with_capacity(dim);
    for map in row_maps {
        let mut row: Vec<(usize, C64)> = map
            .into_iter()
            .map(|(j, (a, b))| {
                asymmetry = asymmetry.max((a - b).norm());
                (j, (a + b) / 2.0)
            })
            .collect();
        row.sort_unstable_by_key(|&(j, _)| j);
        rows.push(row);
    }
    if asymmetry > 1e-8 {
        return Err(Error::Asymmetry { asymmetry, tolerance: 1e-8 });
    }
    Ok(SymmetricMomentMatrix {
        n,
        t: m_local.t(),
        basis_kind: m_local.basis().kind(),
        occupations,
        rows,
        asymmetry,
    })
}

/// Fock-space images of the normalized permutation product kets
/// `(|sigma>>/2^{t/2})^{(x)n}`, the exact eigenvalue-1 eigenvectors.
pub fn permutation_fixed_vectors(
    m_local: &LocalMomentOperator,
    basis: &OccupationBasis,
) -> Result<Vec<Array1<C64>>> {
    let t = m_local.t();
    Perm::all(t)
        .iter()
        .map(|sigma| {
            let coords = m_local.basis().permutation_coords(sigma)?;
            product_state_in_fock(&coords, basis.n(), basis)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Spectral gap
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum SolveMethod {
    Dense,
    Iterative,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SpectralResult {
    pub unit_multiplicity: usize,
    pub lambda1: f64,
    pub gap: f64,
    pub method: SolveMethod,
    pub residual: f64,
}

/// Orthonormalize a set of vectors, dropping near-dependent ones.
fn orthonormalize(vectors: &[Array1<C64>]) -> Vec<Array1<C64>> {
    let mut basis: Vec<Array1<C64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let ov: C64 = b.iter().zip(w.iter()).map(|(a, c)| a.conj() * c).sum();
                for (wi, bi) in w.iter_mut().zip(b.iter()) {
                    *wi -= ov * bi;
                }
            }
        }
        let norm: f64 = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            basis.push(w.mapv(|x| x / norm));
        }
    }
    basis
}

/// Spectral gap with exact deflation of the span of the supplied eigenvalue-1
/// vectors. Dense symmetric eigensolve up to `DENSE_THRESHOLD`, Lanczos with
/// full reorthogonalization above.
pub fn spectral_gap(
    m: &SymmetricMomentMatrix,
    known_fixed_vectors: &[Array1<C64>],
) -> Result<SpectralResult> {
    let dim = m.dim();
    // verify the supplied vectors are fixed points
    for v in known_fixed_vectors {
        let mv = m.matvec(v);
        let res: f64 = mv
            .iter()
            .zip(v.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if res > 1e-8 {
            return Err(Error::NotFixedPoint { residual: res });
        }
    }
    let fixed = orthonormalize(known_fixed_vectors);
    let mult = fixed.len();
    if mult == 0 {
        return Err(Error::InvalidInput("no fixed vectors supplied".into()));
    }

    if dim <= DENSE_THRESHOLD {
        let dense = m.to_dense();
        let (w, vecs) = dense
            .eigh(ndarray_linalg::UPLO::Lower)
            .map_err(|e| Error::InvalidInput(format!("dense eigensolve failed: {e}")))?;
        // eigenvalues ascending; the `mult` largest are the exact fixed points
        let k = w.len();
        for idx in (k - mult)..k {
            if (w[idx] - 1.0).abs() > 1e-8 {
                return Err(Error::NotFixedPoint { residual: (w[idx] - 1.0).abs() });
            }
        }
        let lambda1 = w[k - mult - 1];
        let vec = vecs.column(k - mult - 1).to_owned();
        let mv = m.matvec(&vec);
        let residual: f64 = mv
            .iter()
            .zip(vec.iter())
            .map(|(a, b)| (a - c64(lambda1) * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        Ok(SpectralResult {
            unit_multiplicity: mult,
            lambda1,
            gap: 1.0 - lambda1,
            method: SolveMethod::Dense,
            residual,
        })
    } else {
        let (lambda1, residual) = lanczos_deflated(m, &fixed)?;
        Ok(SpectralResult {
            unit_multiplicity: mult,
            lambda1,
            gap: 1.0 - lambda1,
            method: SolveMethod::Iterative,
            residual,
        })
    }
}

/// Largest eigenvalue of `M` on the orthogonal complement of `deflate`,
/// by Lanczos on the shifted operator `M + 1` (spectrum in [0, 2]) with full
/// reorthogonalization against both the Krylov basis and the deflation space.
fn lanczos_deflated(
    m: &SymmetricMomentMatrix,
    deflate: &[Array1<C64>],
) -> Result<(f64, f64)> {
    let dim = m.dim();
    let max_iter = 600.min(dim);
    let tol = 1e-11;

    let project_out = |v: &mut Array1<C64>| {
        for q in deflate {
            let ov: C64 = q.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            for (vi, qi) in v.iter_mut().zip(q.iter()) {
                *vi -= ov * qi;
            }
        }
    };

    // deterministic pseudo-random start vector
    let mut v0 = Array1::from_shape_fn(dim, |i| {
        let x = ((i as u64).wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407)
            >> 33) as f64;
        c64(x / (1u64 << 31) as f64 - 1.0)
    });
    project_out(&mut v0);
    let n0: f64 = v0.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if n0 < 1e-12 {
        return Err(Error::InvalidInput("start vector annihilated by deflation".into()));
    }
    let mut basis: Vec<Array1<C64>> = vec![v0.mapv(|x| x / n0)];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    for _ in 0..max_iter {
        let vk = basis.last().unwrap().clone();
        let mut w = m.matvec(&vk);
        // shifted operator M + 1 keeps the target extremal and positive
        for (wi, vi) in w.iter_mut().zip(vk.iter()) {
            *wi += *vi;
        }
        project_out(&mut w);
        let alpha: f64 = vk
            .iter()
            .zip(w.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum();
        alphas.push(alpha);
        // full reorthogonalization, two passes: a single Gram-Schmidt sweep
        // leaves an O(eps) residual that the iteration amplifies geometrically
        for _ in 0..2 {
            for b in &basis {
                let ov: C64 = b.iter().zip(w.iter()).map(|(a, c)| a.conj() * c).sum();
                for (wi, bi) in w.iter_mut().zip(b.iter()) {
                    *wi -= ov * bi;
                }
            }
            project_out(&mut w);
        }
        let beta: f64 = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();

        // Residual estimate for the top Ritz pair: beta times the last
        // component of the tridiagonal eigenvector. This is the true Lanczos
        // error bound, immune to temporary Ritz-value plateaus.
        let k = alphas.len();
        let mut tri = Array2::<f64>::zeros((k, k));
        for i in 0..k {
            tri[[i, i]] = alphas[i];
            if i + 1 < k {
                tri[[i, i + 1]] = betas[i];
                tri[[i + 1, i]] = betas[i];
            }
        }
        let (_, vecs_tri) = tri
            .eigh(ndarray_linalg::UPLO::Lower)
            .map_err(|e| Error::InvalidInput(format!("tridiagonal eigensolve failed: {e}")))?;
        let estimate = beta * vecs_tri[[k - 1, k - 1]].abs();
        if estimate < tol || beta < 1e-14 {
            return finish_lanczos(m, &basis, &alphas, &betas, deflate);
        }
        betas.push(beta);
        basis.push(w.mapv(|x| x / beta));
    }
    Err(Error::NonConvergence { iterations: max_iter, residual: f64::NAN })
}

fn finish_lanczos(
    m: &SymmetricMomentMatrix,
    basis: &[Array1<C64>],
    alphas: &[f64],
    betas: &[f64],
    deflate: &[Array1<C64>],
) -> Result<(f64, f64)> {
    let k = alphas.len();
    let mut tri = Array2::<f64>::zeros((k, k));
    for i in 0..k {
        tri[[i, i]] = alphas[i];
        if i + 1 < k {
            tri[[i, i + 1]] = betas[i];
            tri[[i + 1, i]] = betas[i];
        }
    }
    let (w_tri, vecs) = tri
        .eigh(ndarray_linalg::UPLO::Lower)
        .map_err(|e| Error::InvalidInput(format!("tridiagonal eigensolve failed: {e}")))?;
    let shifted = w_tri[k - 1];
    let lambda1 = shifted - 1.0;
    let coeff = vecs.column(k - 1);
    let dim = m.dim();
    let mut vec = Array1::<C64>::zeros(dim);
    for (b, &c) in basis.iter().zip(coeff.iter()) {
        for (vi, bi) in vec.iter_mut().zip(b.iter()) {
            *vi += c64(c) * bi;
        }
    }
    let norm: f64 = vec.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let vec = vec.mapv(|x| x / norm);
    let mut mv = m.matvec(&vec);
    for q in deflate {
        let ov: C64 = q.iter().zip(mv.iter()).map(|(a, b)| a.conj() * b).sum();
        for (vi, qi) in mv.iter_mut().zip(q.iter()) {
            *vi -= ov * qi;
        }
    }
    let residual: f64 = mv
        .iter()
        .zip(vec.iter())
        .map(|(a, b)| (a - c64(lambda1) * b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if residual > 1e-7 {
        return Err(Error::NonConvergence { iterations: k, residual });
    }
    Ok((lambda1, residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate_averaging::{build_local_moment_operator, BasisKind, GateDistribution};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn occupation_basis_small() {
        let b = OccupationBasis::new(2, 3, DEFAULT_DIM_CAP).unwrap();
        let expected: Vec<Vec<u32>> = vec![vec![3, 0], vec![2, 1], vec![1, 2], vec![0, 3]];
        assert_eq!(b.dim(), 4);
        for (k, occ) in expected.iter().enumerate() {
            assert_eq!(b.unrank(k), occ.as_slice());
            assert_eq!(b.rank(occ), k);
        }
    }

    #[test]
    fn occupation_count_matches_formula() {
        assert_eq!(occupation_count(5, 20), 10626);
        assert_eq!(occupation_count(2, 10), 11);
        assert_eq!(occupation_count(16, 3), 816);
    }

    #[test]
    fn rank_unrank_roundtrip() {
        for (d, n) in [(3usize, 5usize), (4, 4), (6, 3)] {
            let b = OccupationBasis::new(d, n, DEFAULT_DIM_CAP).unwrap();
            for k in 0..b.dim() {
                let occ = b.unrank(k).to_vec();
                assert_eq!(b.rank(&occ), k, "d={d} n={n} k={k}");
                assert_eq!(occ.iter().sum::<u32>(), n as u32);
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        match OccupationBasis::new(5, 20, 100) {
            Err(Error::CapExceeded { dim, cap }) => {
                assert_eq!(dim, 10626);
                assert_eq!(cap, 100);
            }
            other => panic!("expected CapExceeded, got {other:?}"),
        }
    }

    #[test]
    fn product_state_multinomial_amplitudes() {
        let v = array![c64(0.6), c64(0.8)];
        let b = OccupationBasis::new(2, 2, DEFAULT_DIM_CAP).unwrap();
        let f = product_state_in_fock(&v, 2, &b).unwrap();
        assert_abs_diff_eq!(f[0].re, 0.36, epsilon = 1e-14);
        assert_abs_diff_eq!(f[1].re, 2f64.sqrt() * 0.48, epsilon = 1e-14);
        assert_abs_diff_eq!(f[2].re, 0.64, epsilon = 1e-14);
        let norm: f64 = f.iter().map(|x| x.norm_sqr()).sum();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn product_state_rejects_unnormalized() {
        let v = array![c64(1.0), c64(1.0)];
        let b = OccupationBasis::new(2, 2, DEFAULT_DIM_CAP).unwrap();
        assert!(matches!(
            product_state_in_fock(&v, 2, &b),
            Err(Error::Unnormalized { .. })
        ));
    }

    /// At n=2 the sector matrix is just the swap-symmetrized two-site operator
    /// restricted to the symmetric (boson) subspace.
    #[test]
    fn two_site_reduction() {
        let m_local =
            build_local_moment_operator(&GateDistribution::universal_demo(), 2, BasisKind::Invariant, 0)
                .unwrap();
        let d = m_local.dim_local();
        let sector = assemble_symmetric_moment_matrix(&m_local, 2, DEFAULT_DIM_CAP).unwrap();
        let basis = sector.occupations();
        let dense = sector.to_dense();
        // embed each occupation state as a symmetric two-site vector
        let embed = |occ: &[u32]| -> Array1<C64> {
            let mut v = Array1::<C64>::zeros(d * d);
            let filled: Vec<usize> = (0..d).filter(|&a| occ[a] > 0).collect();
            if filled.len() == 1 {
                let a = filled[0];
                v[a * d + a] = c64(1.0);
            } else {
                let (a, g) = (filled[0], filled[1]);
                v[a * d + g] = c64(1.0 / 2f64.sqrt());
                v[g * d + a] = c64(1.0 / 2f64.sqrt());
            }
            v
        };
        let m = m_local.matrix();
        for i in 0..basis.dim() {
            for j in 0..basis.dim() {
                let vi = embed(basis.unrank(i));
                let vj = embed(basis.unrank(j));
                let mut expect = c64(0.0);
                for r in 0..d * d {
                    for c in 0..d * d {
                        // symmetrize over the pair swap on both indices
                        let (ra, rg) = (r / d, r % d);
                        let (ca, cg) = (c / d, c % d);
                        let msym = (m[[r, c]] + m[[rg * d + ra, cg * d + ca]]) / 2.0;
                        expect += vi[r].conj() * msym * vj[c];
                    }
                }
                assert_abs_diff_eq!(dense[[i, j]].re, expect.re, epsilon = 1e-10);
                assert_abs_diff_eq!(dense[[i, j]].im, expect.im, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn haar_second_order_small_chain() {
        let m_local =
            build_local_moment_operator(&GateDistribution::haar_u4(), 2, BasisKind::Invariant, 0)
                .unwrap();
        let sector = assemble_symmetric_moment_matrix(&m_local, 4, DEFAULT_DIM_CAP).unwrap();
        assert_eq!(sector.dim(), 5);
        let fixed = permutation_fixed_vectors(&m_local, sector.occupations()).unwrap();
        assert_eq!(fixed.len(), 2);
        let result = spectral_gap(&sector, &fixed).unwrap();
        assert_eq!(result.unit_multiplicity, 2);
        assert_eq!(result.method, SolveMethod::Dense);
        assert!(result.gap > 0.0 && result.gap < 1.0, "gap {}", result.gap);
        // mean-field prediction 6/(5n) should already be within ~20% at n=4
        let mf = 6.0 / (5.0 * 4.0);
        assert!((result.gap - mf).abs() / mf < 0.25, "gap {}", result.gap);
    }

    /// For a Haar-averaged pair at n=2, the two-site operator is an orthogonal
    /// projector, so the subleading eigenvalue is 0 and the gap is exactly 1.
    #[test]
    fn haar_two_qubit_gap_is_one() {
        let m_local =
            build_local_moment_operator(&GateDistribution::haar_u4(), 2, BasisKind::Invariant, 0)
                .unwrap();
        let sector = assemble_symmetric_moment_matrix(&m_local, 2, DEFAULT_DIM_CAP).unwrap();
        let fixed = permutation_fixed_vectors(&m_local, sector.occupations()).unwrap();
        let result = spectral_gap(&sector, &fixed).unwrap();
        assert_eq!(result.unit_multiplicity, 2);
        assert_abs_diff_eq!(result.gap, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn permutation_kets_are_fixed_points() {
        for (t, kind, n) in [
            (1usize, BasisKind::FullPauli, 3usize),
            (2, BasisKind::Invariant, 5),
            (2, BasisKind::FullPauli, 3),
        ] {
            let m_local =
                build_local_moment_operator(&GateDistribution::universal_demo(), t, kind, 0).unwrap();
            let sector = assemble_symmetric_moment_matrix(&m_local, n, DEFAULT_DIM_CAP).unwrap();
            let fixed = permutation_fixed_vectors(&m_local, sector.occupations()).unwrap();
            for v in &fixed {
                let mv = sector.matvec(v);
                let res: f64 = mv
                    .iter()
                    .zip(v.iter())
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!(res < 1e-9, "t={t} n={n} residual {res}");
            }
        }
    }

    #[test]
    fn sector_spectrum_is_contractive() {
        let m_local =
            build_local_moment_operator(&GateDistribution::universal_demo(), 2, BasisKind::Invariant, 0)
                .unwrap();
        let sector = assemble_symmetric_moment_matrix(&m_local, 6, DEFAULT_DIM_CAP).unwrap();
        let (w, _) = sector.to_dense().eigh(ndarray_linalg::UPLO::Lower).unwrap();
        for &ev in w.iter() {
            assert!(ev > -1.0 - 1e-9 && ev < 1.0 + 1e-9, "eigenvalue {ev}");
        }
    }

    #[test]
    fn lanczos_matches_dense() {
        let m_local =
            build_local_moment_operator(&GateDistribution::haar_u4(), 2, BasisKind::Invariant, 0)
                .unwrap();
        let sector = assemble_symmetric_moment_matrix(&m_local, 12, DEFAULT_DIM_CAP).unwrap();
        let fixed = permutation_fixed_vectors(&m_local, sector.occupations()).unwrap();
        let dense_result = spectral_gap(&sector, &fixed).unwrap();
        let ortho = orthonormalize(&fixed);
        let (lambda1, residual) = lanczos_deflated(&sector, &ortho).unwrap();
        assert_abs_diff_eq!(lambda1, dense_result.lambda1, epsilon = 1e-8);
        assert!(residual < 1e-7);
    }

    #[test]
    fn rejects_non_fixed_vector() {
        let m_local =
            build_local_moment_operator(&GateDistribution::haar_u4(), 2, BasisKind::Invariant, 0)
                .unwrap();
        let sector = assemble_symmetric_moment_matrix(&m_local, 3, DEFAULT_DIM_CAP).unwrap();
        let mut bogus = Array1::<C64>::zeros(sector.dim());
        bogus[1] = c64(1.0);
        assert!(matches!(
            spectral_gap(&sector, &[bogus]),
            Err(Error::NotFixedPoint { .. })
        ));
    }
}
