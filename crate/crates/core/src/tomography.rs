//! State and process tomography by linear inversion with a projection back
//! onto physical states/channels.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolve::{depolarize, validate_density, Space, StepPolicy};
use crate::fit::linear_lsq;
use crate::gates::{simulate_gate, synthesize, target_unitary, GateSettings, GateSpec, NamedGate, Scheme};
use crate::numerics::{c, cr, eigh, pauli, sqrtm_psd, CMatrix, C64, ZERO};
use crate::readout::{Readout, Shots};
use crate::table::CsvTable;

/// Pauli label → ⟨P⟩. Labels use I/X/Y/Z, first character = first tensor
/// factor (nuclear spin for two qubits).
pub type Expectations = BTreeMap<String, f64>;

fn qubits_for_dim(dim: usize) -> Result<usize> {
    match dim {
        2 => Ok(1),
        4 => Ok(2),
        _ => Err(Error::Dimension(format!("tomography supports d = 2 or 4, got {dim}"))),
    }
}

fn identity_label(n: usize) -> String {
    "I".repeat(n)
}

fn paulis(n: usize) -> Vec<(String, CMatrix)> {
    pauli::labels(n)
        .into_iter()
        .map(|l| {
            let m = pauli::from_label(&l).expect("generated label");
            (l, m)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub matrix: CMatrix,
}

/// Real/imaginary parts of a matrix with row/column labels, for export.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexTable {
    pub basis: Vec<String>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl ComplexTable {
    pub fn new(basis: Vec<String>, m: &CMatrix) -> Self {
        let n = m.rows();
        ComplexTable {
            basis,
            re: (0..n).map(|i| (0..n).map(|j| m[(i, j)].re).collect()).collect(),
            im: (0..n).map(|i| (0..n).map(|j| m[(i, j)].im).collect()).collect(),
        }
    }

    /// One row per matrix element: (row, col, re, im), bar-chart layout.
    pub fn bars(&self) -> CsvTable {
        let mut t = CsvTable::new(&["row", "col", "re", "im"]);
        for (i, ri) in self.basis.iter().enumerate() {
            for (j, cj) in self.basis.iter().enumerate() {
                t.push(vec![
                    ri.clone(),
                    cj.clone(),
                    crate::table::fmt_num(self.re[i][j]),
                    crate::table::fmt_num(self.im[i][j]),
                ]);
            }
        }
        t
    }
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        validate_density(&matrix, 1e-10)?;
        Ok(DensityMatrix { matrix })
    }

    pub fn pure(psi: &[C64]) -> Result<Self> {
        DensityMatrix::new(CMatrix::projector(psi))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn export(&self) -> ComplexTable {
        let n = self.dim();
        let width = n.trailing_zeros() as usize;
        let basis = (0..n).map(|k| format!("{:0width$b}", k, width = width)).collect();
        ComplexTable::new(basis, &self.matrix)
    }
}

/// ⟨P⟩ = Tr(Pρ) for every non-identity Pauli string.
pub fn pauli_expectations(rho: &CMatrix) -> Result<Expectations> {
    let n = qubits_for_dim(rho.rows())?;
    let id = identity_label(n);
    Ok(paulis(n)
        .into_iter()
        .filter(|(l, _)| *l != id)
        .map(|(l, p)| {
            let v = (&p * rho).trace().re;
            (l, v)
        })
        .collect())
}

/// Expectations estimated through the readout model: each Pauli setting is
/// a two-outcome measurement with P(+1) = (1 + ⟨P⟩)/2, on its own stream.
pub fn measure_expectations(
    rho: &CMatrix,
    readout: &Readout,
    shots: Shots,
    seed: u64,
    stream_base: u64,
) -> Result<Expectations> {
    readout.validate()?;
    let exact = pauli_expectations(rho)?;
    Ok(exact
        .into_iter()
        .enumerate()
        .map(|(k, (l, v))| {
            let p = readout.estimate(0.5 * (1.0 + v), shots, seed, stream_base + k as u64);
            (l, 2.0 * p - 1.0)
        })
        .collect())
}

/// Nearest unit-trace PSD matrix in Frobenius norm: eigenvalues are shifted
/// by a common amount and clipped at zero so they sum to one.
pub fn project_to_state(h: &CMatrix) -> Result<CMatrix> {
    let (vals, vecs) = eigh(&h.hermitian_part())?;
    let clipped = simplex_projection(&vals);
    let d: Vec<C64> = clipped.into_iter().map(cr).collect();
    Ok(&(&vecs * &CMatrix::from_diag(&d)) * &vecs.adjoint())
}

/// Euclidean projection of `v` onto {x ≥ 0, Σx = 1}.
fn simplex_projection(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut shift = 0.0;
    for (k, &x) in sorted.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            shift = t;
        }
    }
    v.iter().map(|x| (x - shift).max(0.0)).collect()
}

/// Linear inversion ρ = (1/d)(I + Σ⟨P⟩P) followed by projection onto the
/// physical states.
pub fn qst(exp: &Expectations, dim: usize) -> Result<DensityMatrix> {
    let n = qubits_for_dim(dim)?;
    let id = identity_label(n);
    let ops = paulis(n);
    let missing: Vec<String> = ops
        .iter()
        .filter(|(l, _)| *l != id && !exp.contains_key(l))
        .map(|(l, _)| l.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingSettings(missing));
    }
    let mut rho = CMatrix::identity(dim);
    for (l, p) in &ops {
        if *l != id {
            rho = &rho + &p.scale_re(exp[l]);
        }
    }
    let rho = rho.scale_re(1.0 / dim as f64);
    DensityMatrix::new(project_to_state(&rho)?)
}

/// Uhlmann fidelity (Tr√(√ρ σ √ρ))².
pub fn state_fidelity(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    if rho.rows() != sigma.rows() || !rho.is_square() || !sigma.is_square() {
        return Err(Error::Dimension(format!(
            "state_fidelity: {}×{} vs {}×{}",
            rho.rows(),
            rho.cols(),
            sigma.rows(),
            sigma.cols()
        )));
    }
    let s = sqrtm_psd(&rho.hermitian_part())?;
    let m = &(&s * sigma) * &s;
    let root: f64 = eigh(&m.hermitian_part())?
        .0
        .into_iter()
        .map(|e| e.max(0.0).sqrt())
        .sum();
    Ok((root * root).clamp(0.0, 1.0))
}

/// Single-qubit χ in the basis {I, σ_x, σ_y, σ_z}: E(ρ) = Σ χ_mn P_m ρ P_n†.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMatrix {
    pub chi: CMatrix,
}

/// v_m[(i,a)] = P_m[a,i]; χ_mn = v_m† J v_n / d² with J the Choi matrix
/// J[(i,a),(j,b)] = E(|i⟩⟨j|)[a,b].
fn choi_basis() -> Vec<Vec<C64>> {
    pauli::basis()
        .iter()
        .map(|p| {
            let mut v = vec![ZERO; 4];
            for i in 0..2 {
                for a in 0..2 {
                    v[i * 2 + a] = p[(a, i)];
                }
            }
            v
        })
        .collect()
}

fn chi_from_choi(j: &CMatrix) -> CMatrix {
    let basis = choi_basis();
    let mut chi = CMatrix::zeros(4, 4);
    for m in 0..4 {
        for n in 0..4 {
            let jn = j.mat_vec(&basis[n]);
            let val: C64 = basis[m].iter().zip(&jn).map(|(a, b)| a.conj() * b).sum();
            chi[(m, n)] = val / 4.0;
        }
    }
    chi
}

fn choi_from_chi(chi: &CMatrix) -> CMatrix {
    let basis = choi_basis();
    let mut j = CMatrix::zeros(4, 4);
    for m in 0..4 {
        for n in 0..4 {
            j = &j + &CMatrix::outer(&basis[m], &basis[n]).scale(chi[(m, n)]);
        }
    }
    j
}

/// Choi matrix of the map with Pauli transfer matrix `r` (rows: output
/// Pauli, columns: input Pauli), R_lk = Tr(P_l E(P_k))/2.
fn choi_from_ptm(r: &[[f64; 4]; 4]) -> CMatrix {
    let ps = pauli::basis();
    let mut j = CMatrix::zeros(4, 4);
    for i in 0..2 {
        for jj in 0..2 {
            // E(|i⟩⟨j|) = ½ Σ_k Tr(P_k |i⟩⟨j|) Σ_l R_lk P_l
            let mut e = CMatrix::zeros(2, 2);
            for k in 0..4 {
                let coef = ps[k][(jj, i)] * 0.5;
                if coef == ZERO {
                    continue;
                }
                for l in 0..4 {
                    e = &e + &ps[l].scale(coef * r[l][k]);
                }
            }
            for a in 0..2 {
                for b in 0..2 {
                    j[(i * 2 + a, jj * 2 + b)] = e[(a, b)];
                }
            }
        }
    }
    j
}

/// Σ_a J[(i,a),(j,a)] — equals I for a trace-preserving map.
fn choi_partial_trace(j: &CMatrix) -> CMatrix {
    let mut m = CMatrix::zeros(2, 2);
    for i in 0..2 {
        for jj in 0..2 {
            m[(i, jj)] = j[(i * 2, jj * 2)] + j[(i * 2 + 1, jj * 2 + 1)];
        }
    }
    m
}

fn project_tp(j: &CMatrix) -> CMatrix {
    let defect = &choi_partial_trace(j) - &CMatrix::identity(2);
    let mut out = j.clone();
    for i in 0..2 {
        for jj in 0..2 {
            for a in 0..2 {
                out[(i * 2 + a, jj * 2 + a)] -= defect[(i, jj)] / 2.0;
            }
        }
    }
    out
}

fn project_psd(j: &CMatrix) -> Result<CMatrix> {
    let (vals, vecs) = eigh(&j.hermitian_part())?;
    let d: Vec<C64> = vals.into_iter().map(|v| cr(v.max(0.0))).collect();
    Ok(&(&vecs * &CMatrix::from_diag(&d)) * &vecs.adjoint())
}

impl ProcessMatrix {
    /// χ_mn = c_m c_n* for U = Σ c_m P_m.
    pub fn from_unitary(u: &CMatrix) -> Self {
        let coeffs: Vec<C64> = pauli::basis().iter().map(|p| (p * u).trace() / 2.0).collect();
        ProcessMatrix {
            chi: CMatrix::outer(&coeffs, &coeffs),
        }
    }

    pub fn depolarizing(p: f64) -> Self {
        ProcessMatrix {
            chi: CMatrix::from_real_diag(&[1.0 - 0.75 * p, p / 4.0, p / 4.0, p / 4.0]),
        }
    }

    pub fn from_ptm(r: &[[f64; 4]; 4]) -> Self {
        ProcessMatrix {
            chi: chi_from_choi(&choi_from_ptm(r)),
        }
    }

    /// max |Σ χ_mn P_n†P_m − I|.
    pub fn tp_defect(&self) -> f64 {
        (&choi_partial_trace(&choi_from_chi(&self.chi)) - &CMatrix::identity(2)).max_abs()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(eigh(&self.chi.hermitian_part())?.0.into_iter().fold(f64::INFINITY, f64::min))
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let ps = pauli::basis();
        let mut out = CMatrix::zeros(2, 2);
        for m in 0..4 {
            for n in 0..4 {
                let term = &(&ps[m] * rho) * &ps[n];
                out = &out + &term.scale(self.chi[(m, n)]);
            }
        }
        out
    }

    /// Alternates PSD and TP projections of the Choi matrix until both hold;
    /// the last step is the TP projection, so trace preservation is exact.
    pub fn project_physical(&self) -> Result<ProcessMatrix> {
        let mut j = choi_from_chi(&self.chi).hermitian_part();
        let physical = |j: &CMatrix| -> Result<bool> {
            let min = eigh(j)?.0.into_iter().fold(f64::INFINITY, f64::min);
            let tp = (&choi_partial_trace(j) - &CMatrix::identity(2)).max_abs();
            Ok(min >= -1e-12 && tp <= 1e-12)
        };
        for _ in 0..5000 {
            if physical(&j)? {
                break;
            }
            j = project_tp(&project_psd(&j)?).hermitian_part();
        }
        Ok(ProcessMatrix {
            chi: chi_from_choi(&j),
        })
    }

    pub fn export(&self) -> ComplexTable {
        ComplexTable::new(
            pauli::LABELS.iter().map(|c| c.to_string()).collect(),
            &self.chi,
        )
    }
}

/// |Tr(χ_E χ_id†)|.
pub fn process_fidelity(chi_e: &ProcessMatrix, chi_id: &ProcessMatrix) -> f64 {
    (&chi_e.chi * &chi_id.chi.adjoint()).trace().norm()
}

/// Input states U_g|0⟩ for each gate of `set`.
pub fn input_states(set: &[GateSpec]) -> Vec<CMatrix> {
    set.iter()
        .map(|g| {
            let psi = target_unitary(g).column(0);
            CMatrix::projector(&psi)
        })
        .collect()
}

fn bloch_column(rho: &CMatrix) -> [f64; 4] {
    let ps = pauli::basis();
    [
        1.0,
        (&ps[1] * rho).trace().re,
        (&ps[2] * rho).trace().re,
        (&ps[3] * rho).trace().re,
    ]
}

/// Process tomography of `channel` from the given input states. Output
/// expectations are estimated through `readout`; the Pauli transfer matrix
/// is solved in least squares and converted to χ, then projected onto
/// completely positive trace-preserving maps if needed.
pub fn qpt(
    channel: &(dyn Fn(&CMatrix) -> CMatrix + Sync),
    inputs: &[CMatrix],
    readout: &Readout,
    shots: Shots,
    seed: u64,
) -> Result<ProcessMatrix> {
    use rayon::prelude::*;
    if inputs.iter().any(|r| r.rows() != 2) {
        return Err(Error::Dimension("process tomography supports one qubit".into()));
    }
    let r_in: Vec<[f64; 4]> = inputs.iter().map(bloch_column).collect();
    let a: Vec<Vec<f64>> = r_in.iter().map(|col| col.to_vec()).collect();
    let rank = numeric_rank(&a);
    if rank < 4 {
        return Err(Error::RankDeficient { rank, required: 4 });
    }
    let outputs: Vec<Expectations> = inputs
        .par_iter()
        .enumerate()
        .map(|(k, rho)| measure_expectations(&channel(rho), readout, shots, seed, 3 * k as u64))
        .collect::<Result<_>>()?;
    let mut r = [[0.0; 4]; 4];
    r[0] = [1.0, 0.0, 0.0, 0.0];
    for (l, label) in ["X", "Y", "Z"].iter().enumerate() {
        let y: Vec<f64> = outputs.iter().map(|e| e[*label]).collect();
        let row = linear_lsq(&a, &y)?;
        r[l + 1].copy_from_slice(&row);
    }
    let raw = ProcessMatrix::from_ptm(&r);
    if raw.min_eigenvalue()? >= -1e-12 && raw.tp_defect() <= 1e-12 {
        Ok(raw)
    } else {
        raw.project_physical()
    }
}

fn numeric_rank(rows: &[Vec<f64>]) -> usize {
    let m = rows.len();
    let k = rows.first().map(|r| r.len()).unwrap_or(0);
    let mat = nalgebra::DMatrix::from_fn(m, k, |i, j| rows[i][j]);
    let sv = mat.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > 1e-9 * top.max(1e-300)).count()
}

/// State-preparation, per-gate and measurement depolarizing strengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseProfile {
    pub prep_depol: f64,
    pub gate_depol: f64,
    pub meas_depol: f64,
}

impl NoiseProfile {
    pub fn noiseless() -> Self {
        NoiseProfile {
            prep_depol: 0.0,
            gate_depol: 0.0,
            meas_depol: 0.0,
        }
    }

    /// Gate error fixed to `gate_depol`; preparation and measurement share
    /// the remaining error equally so that a unitary gate's process fidelity
    /// is `target`. The composite Bloch shrink is (1−s)²(1−g) = 1 − 4(1−F)/3.
    pub fn calibrated(target: f64, gate_depol: f64) -> Result<Self> {
        let total = 1.0 - 4.0 * (1.0 - target) / 3.0;
        let spam = total / (1.0 - gate_depol);
        if !(spam > 0.0 && spam <= 1.0) {
            return Err(Error::Domain(format!(
                "process fidelity {target} is unreachable with gate error {gate_depol}"
            )));
        }
        let s = 1.0 - spam.sqrt();
        Ok(NoiseProfile {
            prep_depol: s,
            gate_depol,
            meas_depol: s,
        })
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("prep_depol", self.prep_depol),
            ("gate_depol", self.gate_depol),
            ("meas_depol", self.meas_depol),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Argument(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }

    /// ρ ↦ D_meas(D_gate(M D_prep(ρ) M†)).
    pub fn channel<'a>(&'a self, m: &'a CMatrix) -> impl Fn(&CMatrix) -> CMatrix + Sync + 'a {
        move |rho| {
            let prepared = depolarize(rho, self.prep_depol);
            let out = &(m * &prepared) * &m.adjoint();
            depolarize(&depolarize(&out, self.gate_depol), self.meas_depol)
        }
    }
}

impl Default for NoiseProfile {
    /// Gate error 1 − F_X = 0.0078 with SPAM set for a 0.984 process fidelity.
    fn default() -> Self {
        NoiseProfile::calibrated(0.984, 0.0078).expect("reachable")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateQpt {
    pub gate: NamedGate,
    pub chi: ProcessMatrix,
    pub ideal: ProcessMatrix,
    pub fidelity: f64,
}

/// QPT of the six tomography gates, simulated with `scheme` and wrapped in
/// the noise profile.
#[allow(clippy::too_many_arguments)]
pub fn qpt_gate_suite(
    scheme: Scheme,
    settings: &GateSettings,
    policy: &StepPolicy,
    profile: &NoiseProfile,
    readout: &Readout,
    shots: Shots,
    seed: u64,
) -> Result<Vec<GateQpt>> {
    profile.validate()?;
    let set: Vec<GateSpec> = NamedGate::TOMOGRAPHY_SET.iter().map(|&g| g.into()).collect();
    let inputs = input_states(&set);
    set.iter()
        .zip(NamedGate::TOMOGRAPHY_SET)
        .enumerate()
        .map(|(k, (spec, gate))| {
            let s = synthesize(spec, scheme, settings)?;
            let sim = simulate_gate(&s, &Space::Electron, policy)?;
            let chi = qpt(
                &profile.channel(&sim.block),
                &inputs,
                readout,
                shots,
                seed.wrapping_add(k as u64),
            )?;
            let ideal = ProcessMatrix::from_unitary(&target_unitary(spec));
            let fidelity = process_fidelity(&chi, &ideal);
            Ok(GateQpt {
                gate,
                chi,
                ideal,
                fidelity,
            })
        })
        .collect()
}

pub fn average_fidelity(results: &[GateQpt]) -> f64 {
    results.iter().map(|r| r.fidelity).sum::<f64>() / results.len().max(1) as f64
}

/// Basis state |k⟩ of dimension `d` as a complex vector.
pub fn basis_state(d: usize, k: usize) -> Vec<C64> {
    let mut v = vec![ZERO; d];
    v[k] = c(1.0, 0.0);
    v
}
