//! Hamiltonian matrices and the sparse observables used for Peres lattices.

use faer::Mat;

use crate::error::{ChaosError, Result};
use crate::model::ModelParams;

use super::basis::{displacement, Basis, BasisScheme, BasisState};
use super::overlap::DisplacementTable;

pub const DEFAULT_MAX_DIM: usize = 20_000;

/// `<j, m + 1| J_+ |j, m>`
fn raise(two_j: u32, two_m: i32) -> f64 {
    let j = 0.5 * two_j as f64;
    let m = 0.5 * two_m as f64;
    (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

/// Dense real symmetric Hamiltonian in `basis`. Fails rather than truncating
/// when the dimension exceeds `max_dim`.
pub fn assemble_hamiltonian(basis: &Basis, params: &ModelParams, max_dim: usize) -> Result<Mat<f64>> {
    let dim = basis.dim();
    if dim > max_dim {
        return Err(ChaosError::DimensionOverflow { dim, max: max_dim });
    }
    if basis.two_j != params.two_j {
        return Err(crate::error::invalid("basis", "spin length differs from the model parameters"));
    }
    let mut h = Mat::<f64>::zeros(dim, dim);
    match basis.spec.scheme {
        BasisScheme::Fock | BasisScheme::FockParity | BasisScheme::TcLambdaBlock => fill_product(basis, params, &mut h),
        BasisScheme::CoherentParity => {
            params.require_dicke()?;
            fill_coherent(basis, params, &mut h);
        }
    }
    Ok(h)
}

/// Product basis: only the terms that raise `n` are generated and mirrored,
/// so the matrix is symmetric by construction.
fn fill_product(basis: &Basis, params: &ModelParams, h: &mut Mat<f64>) {
    let g = params.gamma / params.n_atoms().sqrt();
    let delta = params.delta();
    for (s, st) in basis.states.iter().enumerate() {
        h[(s, s)] = params.omega * st.n as f64 + params.omega0 * st.m();
        let up = ((st.n + 1) as f64).sqrt();
        // a^dag J_-
        if let Some(t) = basis.index_of(st.n + 1, st.two_m - 2) {
            let v = g * up * raise(basis.two_j, st.two_m - 2);
            h[(t, s)] = v;
            h[(s, t)] = v;
        }
        // delta a^dag J_+
        if delta != 0.0 {
            if let Some(t) = basis.index_of(st.n + 1, st.two_m + 2) {
                let v = delta * g * up * raise(basis.two_j, st.two_m);
                h[(t, s)] = v;
                h[(s, t)] = v;
            }
        }
    }
}

/// `<m' +- 1| J_z |m'>` between `J_x` eigenstates `|m'>_x = exp(-i pi J_y / 2) |m'>_z`.
fn jz_in_x_basis(two_j: u32, two_m_to: i32, two_m_from: i32) -> f64 {
    let lower = two_m_to.min(two_m_from);
    -0.5 * raise(two_j, lower)
}

/// Coherent parity basis. With `G = 2 gamma / (omega sqrt(N))` the Dicke
/// Hamiltonian is `omega A^dag A - omega G^2 J_x^2 + omega0 J_z` where
/// `A = a + G J_x`; the first two terms are diagonal, and `J_z` links
/// `m' -> m' +- 1` with the oscillator overlap `<N'| D(+-G) |N>`.
///
/// For parity-adapted states `|a> = n_a (|N, m'> + s_a |N, -m'>)` with
/// `s_a = p (-1)^N`, any parity-invariant operator has
/// `<b|O|a> = 2 n_a n_b (<N', m''|O|N, m'> + s_a <N', m''|O|N, -m'>)`.
fn fill_coherent(basis: &Basis, params: &ModelParams, h: &mut Mat<f64>) {
    let dim = basis.dim();
    let two_j = basis.two_j;
    let p = basis.spec.parity.sign();
    let gg = 2.0 * params.gamma / (params.omega * params.n_atoms().sqrt());
    let table = DisplacementTable::new(gg, basis.spec.n_max);
    let norm = |st: &BasisState| if st.two_m == 0 { 0.5 } else { std::f64::consts::FRAC_1_SQRT_2 };
    for (a, sa) in basis.states.iter().enumerate() {
        let m = sa.m();
        h[(a, a)] += params.omega * sa.n as f64 - params.omega * gg * gg * m * m;
        let s_a = p * if sa.n % 2 == 0 { 1.0 } else { -1.0 };
        for (two_mk, weight) in [(sa.two_m, 1.0), (-sa.two_m, s_a)] {
            for two_mb in [two_mk - 2, two_mk + 2] {
                if two_mb < 0 || two_mb > two_j as i32 {
                    continue;
                }
                let jz = params.omega0 * jz_in_x_basis(two_j, two_mb, two_mk);
                // beta = alpha(m_k) - alpha(m_b) = +-G
                let beta = displacement(params, 0.5 * two_mk as f64) - displacement(params, 0.5 * two_mb as f64);
                let positive = beta > 0.0;
                for nb in 0..=basis.spec.n_max {
                    let Some(b) = basis.index_of(nb, two_mb) else { continue };
                    let ov = if positive { table.get(nb, sa.n) } else { table.get_negated(nb, sa.n) };
                    h[(b, a)] += 2.0 * norm(sa) * norm(&basis.states[b]) * weight * jz * ov;
                }
            }
        }
    }
    // The two routes to each entry agree up to rounding; make it exact.
    for c in 0..dim {
        for r in c + 1..dim {
            let (x, y) = (h[(r, c)], h[(c, r)]);
            debug_assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()), "asymmetry at ({r},{c}): {x} vs {y}");
            let v = 0.5 * (x + y);
            h[(r, c)] = v;
            h[(c, r)] = v;
        }
    }
}

/// Sparse symmetric operator as `(row, col, value)` triplets, both triangles stored.
#[derive(Debug, Clone, Default)]
pub struct SparseOp {
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseOp {
    /// `v^T O v` for a column of the eigenvector matrix.
    pub fn expectation(&self, v: faer::ColRef<'_, f64>) -> f64 {
        self.entries.iter().map(|&(r, c, x)| v[r] * x * v[c]).sum()
    }
}

/// The Peres operators `J_z`, `J_x^2` and `a^dag a` in a product-type basis.
pub fn product_observables(basis: &Basis) -> [SparseOp; 3] {
    let j = basis.j();
    let mut jz = SparseOp::default();
    let mut jx2 = SparseOp::default();
    let mut n = SparseOp::default();
    for (s, st) in basis.states.iter().enumerate() {
        let m = st.m();
        jz.entries.push((s, s, m));
        n.entries.push((s, s, st.n as f64));
        // J_x^2 = (J_+^2 + J_-^2 + J_+ J_- + J_- J_+) / 4
        jx2.entries.push((s, s, 0.5 * (j * (j + 1.0) - m * m)));
        if let Some(t) = basis.index_of(st.n, st.two_m + 4) {
            let v = 0.25 * raise(basis.two_j, st.two_m) * raise(basis.two_j, st.two_m + 2);
            jx2.entries.push((t, s, v));
            jx2.entries.push((s, t, v));
        }
    }
    [jz, jx2, n]
}

/// `a^dag a = A^dag A - G J_x (A + A^dag) + G^2 J_x^2` in the coherent parity
/// basis; it does not mix different `|m'|`.
pub fn coherent_photon_number(basis: &Basis, params: &ModelParams) -> SparseOp {
    let gg = 2.0 * params.gamma / (params.omega * params.n_atoms().sqrt());
    let mut op = SparseOp::default();
    for (s, st) in basis.states.iter().enumerate() {
        let m = st.m();
        op.entries.push((s, s, st.n as f64 + gg * gg * m * m));
        if let Some(t) = basis.index_of(st.n + 1, st.two_m) {
            let v = -gg * m * ((st.n + 1) as f64).sqrt();
            op.entries.push((t, s, v));
            op.entries.push((s, t, v));
        }
    }
    op
}

/// Diagonal part `omega N - omega G^2 m'^2` of the coherent-basis Hamiltonian.
pub fn coherent_diagonal(basis: &Basis, params: &ModelParams) -> Vec<f64> {
    let gg = 2.0 * params.gamma / (params.omega * params.n_atoms().sqrt());
    basis
        .states
        .iter()
        .map(|st| params.omega * st.n as f64 - params.omega * gg * gg * st.m() * st.m())
        .collect()
}
