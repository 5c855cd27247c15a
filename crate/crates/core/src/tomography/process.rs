//! Restricted pure-process tomography: a 6×4 single-photon transfer matrix
//! fitted to coincidence data from several gate inputs.

use nalgebra::{Matrix4, SMatrix, SVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::analyzer::AnalyzerSetting;
use super::dataset::{TomoDataset, TomoPoint};
use crate::detection::{MultiPairMode, SourceModel};
use crate::error::{invalid, Error, Result};
use crate::fock::{ModeSet, Polarization, PureState};
use crate::gates::cnot::{CONTROL, DUMP1, DUMP2, TARGET};
use crate::gates::{CnotCircuit, TwoQubitState};
use rayon::prelude::*;

use crate::optimize::{minimize, numeric_gradient, Options};

pub type Mat64 = SMatrix<Complex64, 6, 4>;
type Vec6 = SVector<Complex64, 6>;
type Sym6 = SMatrix<Complex64, 6, 6>;

/// Input columns.
pub const INPUT_MODES: [(&str, Polarization); 4] = [
    (CONTROL, Polarization::H),
    (CONTROL, Polarization::V),
    (TARGET, Polarization::H),
    (TARGET, Polarization::V),
];

/// Output rows: the four inputs followed by the two dump ports.
pub const OUTPUT_MODES: [(&str, Polarization); 6] = [
    (CONTROL, Polarization::H),
    (CONTROL, Polarization::V),
    (TARGET, Polarization::H),
    (TARGET, Polarization::V),
    (DUMP1, Polarization::H),
    (DUMP2, Polarization::H),
];

const COLUMN_NORM_TOL: f64 = 1e-9;

/// Column of the input mode carrying logical value `bit` on `arm` (0 = control).
fn input_col(arm: usize, bit: usize) -> usize {
    2 * arm + Polarization::from_logical(bit).jones_index()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessMatrix {
    m: Mat64,
}

impl ProcessMatrix {
    pub fn new(m: Mat64) -> Result<Self> {
        for (j, col) in m.column_iter().enumerate() {
            let n = col.norm();
            if !(n <= 1.0 + COLUMN_NORM_TOL) {
                return Err(invalid("m", format!("column {j} has norm {n} > 1")));
            }
        }
        Ok(ProcessMatrix { m })
    }

    /// The circuit's own transfer restricted to the tracked modes.
    pub fn from_circuit(circuit: &CnotCircuit) -> Self {
        let u = circuit.transfer().matrix();
        let m = Mat64::from_fn(|r, c| {
            let (op, opol) = OUTPUT_MODES[r];
            let (ip, ipol) = INPUT_MODES[c];
            u[(circuit.mode(op, opol, 0), circuit.mode(ip, ipol, 0))]
        });
        ProcessMatrix { m }
    }

    pub fn matrix(&self) -> &Mat64 {
        &self.m
    }

    /// Post-selected two-photon operator on the logical basis (VV, VH, HV, HH).
    pub fn post_selected_operator(&self) -> Matrix4<Complex64> {
        let m = &self.m;
        Matrix4::from_fn(|row, col| {
            let (oc, ot) = (input_col(0, row / 2), input_col(1, row % 2));
            let (ic, it) = (input_col(0, col / 2), input_col(1, col % 2));
            m[(oc, ic)] * m[(ot, it)] + m[(oc, it)] * m[(ot, ic)]
        })
    }

    /// Row-major `[re, im]` pairs.
    pub fn to_pairs(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(24);
        for r in 0..6 {
            for c in 0..4 {
                out.push([self.m[(r, c)].re, self.m[(r, c)].im]);
            }
        }
        out
    }

    /// Scaled by a complex number, bypassing the column-norm check.
    pub fn scaled(&self, z: Complex64) -> Self {
        ProcessMatrix { m: self.m * z }
    }
}

/// |Tr(A_i†A_m)|² / (Tr(A_i†A_i)·Tr(A_m†A_m)).
pub fn operator_fidelity(a_m: &Matrix4<Complex64>, ideal: &Matrix4<Complex64>) -> Result<f64> {
    let nm = (a_m.adjoint() * a_m).trace().re;
    let ni = (ideal.adjoint() * ideal).trace().re;
    if !(nm > 1e-300) || !(ni > 1e-300) {
        return Err(invalid("process", "post-selected operator has zero norm"));
    }
    Ok((ideal.adjoint() * a_m).trace().norm_sqr() / (nm * ni))
}

pub fn process_fidelity(m: &ProcessMatrix, ideal: &Matrix4<Complex64>) -> Result<f64> {
    operator_fidelity(&m.post_selected_operator(), ideal)
}

/// Pair-number moments used by the rate model.
#[derive(Clone, Copy, Debug)]
struct PairMoments {
    p1: f64,
    p2: f64,
    /// Σ_{n≥3} P(n)·n
    n3: f64,
    /// Σ_{n≥3} P(n)·n(n−1)
    nn3: f64,
    mu: f64,
}

impl PairMoments {
    fn of(source: &SourceModel) -> Self {
        let mut n3 = 0.0;
        let mut nn3 = 0.0;
        for n in 3..400 {
            let p = source.pair_probability(n);
            n3 += p * n as f64;
            nn3 += p * (n * (n - 1)) as f64;
            if p < 1e-20 {
                break;
            }
        }
        PairMoments {
            p1: source.pair_probability(1),
            p2: source.pair_probability(2),
            n3,
            nn3,
            mu: source.mean_pairs,
        }
    }
}

/// Quantities of one (input, analyzer) pair that do not depend on M.
#[derive(Clone, Debug)]
struct InputGeometry {
    /// Symmetric two-photon input amplitudes over the 4 input modes.
    psi: Matrix4<Complex64>,
    rho_c: nalgebra::Matrix2<Complex64>,
    rho_t: nalgebra::Matrix2<Complex64>,
    /// ‖(C†)²|0⟩‖² of the input pair operator.
    z2: f64,
}

impl InputGeometry {
    fn new(input: &TwoQubitState) -> Result<Self> {
        let mut psi = Matrix4::zeros();
        let mut rho_c = nalgebra::Matrix2::zeros();
        let mut rho_t = nalgebra::Matrix2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                let a = input.amplitude(i, j) * 0.5;
                psi[(input_col(0, i), input_col(1, j))] += a;
                psi[(input_col(1, j), input_col(0, i))] += a;
                for k in 0..2 {
                    rho_c[(i, j)] += input.amplitude(i, k) * input.amplitude(j, k).conj();
                    rho_t[(i, j)] += input.amplitude(k, i) * input.amplitude(k, j).conj();
                }
            }
        }
        let modes = std::sync::Arc::new(ModeSet::grid(&["0", "1"], &Polarization::BOTH, 1)?);
        let mut mono = Vec::new();
        for (a, ia) in single_pair(input) {
            for (b, ib) in single_pair(input) {
                mono.push((a * b, vec![ia.0, ia.1, ib.0, ib.1]));
            }
        }
        let (_, z2) = PureState::from_polynomial(modes, &mono)?;
        Ok(InputGeometry {
            psi,
            rho_c,
            rho_t,
            z2,
        })
    }
}

fn single_pair(input: &TwoQubitState) -> Vec<(Complex64, (usize, usize))> {
    let mut out = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            let a = input.amplitude(i, j);
            if a.norm() > 0.0 {
                out.push((a, (input_col(0, i), input_col(1, j))));
            }
        }
    }
    out
}

/// Annihilation-side vectors of the two detection modes for a setting.
fn detection_vectors(setting: &AnalyzerSetting) -> (Vec6, Vec6) {
    let mut u1 = Vec6::zeros();
    let mut u2 = Vec6::zeros();
    let (kc, kt) = (setting.arm_ket(0), setting.arm_ket(1));
    // arm kets are in logical (V, H) order; rows are (H, V) per port.
    u1[0] = kc[1].conj();
    u1[1] = kc[0].conj();
    u2[2] = kt[1].conj();
    u2[3] = kt[0].conj();
    (u1, u2)
}

/// Per-window coincidence rates predicted from M (linear in detector efficiencies).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PredictedRates {
    /// One pair: ⟨k1 k2⟩.
    pub single: f64,
    /// All multi-pair contributions to ⟨k1 k2⟩ minus the accidental estimate ⟨k1⟩⟨k2⟩.
    pub multi_excess: f64,
}

impl PredictedRates {
    pub fn corrected(&self) -> f64 {
        self.single + self.multi_excess
    }
}

fn predict(
    m: &Mat64,
    geo: &InputGeometry,
    u1: &Vec6,
    u2: &Vec6,
    mom: &PairMoments,
    mode: MultiPairMode,
) -> PredictedRates {
    let g: Sym6 = m * geo.psi * m.transpose();
    predict_with(m, &g, geo, u1, u2, mom, mode)
}

fn predict_with(
    m: &Mat64,
    g: &Sym6,
    geo: &InputGeometry,
    u1: &Vec6,
    u2: &Vec6,
    mom: &PairMoments,
    mode: MultiPairMode,
) -> PredictedRates {
    let g = *g;
    let g1 = g * u1;
    let g2 = g * u2;
    let s = (u2.transpose() * g * u1)[(0, 0)];
    let single = 4.0 * s.norm_sqr();

    // Landing probabilities of each photon on each detector, ignoring interference.
    let x1 = m.transpose() * u1;
    let x2 = m.transpose() * u2;
    let land = |x: &SVector<Complex64, 4>, rho: &nalgebra::Matrix2<Complex64>, arm: usize| {
        let mut p = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                p += (rho[(a, b)] * x[input_col(arm, a)] * x[input_col(arm, b)].conj()).re;
            }
        }
        p
    };
    let (pc1, pc2) = (land(&x1, &geo.rho_c, 0), land(&x2, &geo.rho_c, 0));
    let (pt1, pt2) = (land(&x1, &geo.rho_t, 1), land(&x2, &geo.rho_t, 1));
    let (a1, a2) = (pc1 + pt1, pc2 + pt2);
    let e_inc = pc1 * pt2 + pt1 * pc2;

    let two = match mode {
        MultiPairMode::Exact => {
            let four = Complex64::new(4.0, 0.0);
            let a = (g2 * g1.transpose() + g1 * g2.transpose()) * four + g * (four * s);
            2.0 * a.norm_squared() / geo.z2
        }
        MultiPairMode::Incoherent => 2.0 * e_inc + 2.0 * a1 * a2,
    };
    let many = mom.n3 * e_inc + mom.nn3 * a1 * a2;
    PredictedRates {
        single: mom.p1 * single,
        multi_excess: mom.p2 * two + many - mom.mu * mom.mu * a1 * a2,
    }
}

/// Expected accidental-subtracted counts for every point of `dataset` under M.
pub fn predict_counts(
    m: &ProcessMatrix,
    dataset: &TomoDataset,
    source: &SourceModel,
    mode: MultiPairMode,
) -> Result<Vec<PredictedRates>> {
    let input = dataset
        .input
        .as_ref()
        .ok_or_else(|| Error::Precondition("dataset has no recorded gate input".into()))?;
    let geo = InputGeometry::new(input)?;
    let mom = PairMoments::of(source);
    Ok(dataset
        .points
        .iter()
        .map(|p| {
            let (u1, u2) = detection_vectors(&p.setting);
            let r = predict(&m.m, &geo, &u1, &u2, &mom, mode);
            let k = dataset.exposure * p.weight;
            PredictedRates {
                single: k * r.single,
                multi_excess: k * r.multi_excess,
            }
        })
        .collect())
}

/// Removes the predicted multi-pair excess from every corrected count.
pub fn multipair_correct(
    dataset: &TomoDataset,
    m: &ProcessMatrix,
    source: &SourceModel,
    mode: MultiPairMode,
) -> Result<TomoDataset> {
    if source.mean_pairs == 0.0 {
        return Ok(dataset.clone());
    }
    let pred = predict_counts(m, dataset, source, mode)?;
    let mut out = dataset.clone();
    for (p, r) in out.points.iter_mut().zip(pred) {
        p.corrected -= r.multi_excess;
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ProcessFitOptions {
    pub source: SourceModel,
    pub mode: MultiPairMode,
    pub starts: usize,
    pub perturbation: f64,
    pub seed: u64,
    pub optimizer: Options,
}

impl ProcessFitOptions {
    pub fn new(source: SourceModel, mode: MultiPairMode) -> Self {
        ProcessFitOptions {
            source,
            mode,
            starts: 5,
            perturbation: 0.1,
            seed: 0x5eed,
            optimizer: Options {
                max_iter: 600,
                rel_tol: 1e-10,
                grad_tol: 1e-8,
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProcessFit {
    pub process: ProcessMatrix,
    /// χ²/2 at the optimum.
    pub objective: f64,
    /// Mean |prediction − data| in units of each point's standard deviation.
    pub mean_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Which start produced the best fit (0 = ideal circuit).
    pub best_start: usize,
}

/// Columns whose overall phase is fixed by convention: the control-H column
/// carries the global phase, and the target columns' phases are invisible
/// whenever the target photon is only sent in as H or V.
const GAUGE_COLUMNS: [usize; 3] = [0, 2, 3];

/// Free real parameters of M. In each gauge column the largest element of the
/// reference matrix among the detected rows keeps the reference phase; only
/// its magnitude is free.
#[derive(Clone, Debug)]
struct Layout {
    entries: Vec<(usize, usize, bool)>,
    /// (row, unit phase) of the pinned element per column.
    pinned: [Option<(usize, Complex64)>; 4],
}

impl Layout {
    fn new(reference: &Mat64) -> Self {
        let mut pinned = [None; 4];
        for c in GAUGE_COLUMNS {
            let col = reference.column(c);
            // Dump rows are never detected, so their phases cannot anchor a column.
            let mut r = 0;
            for k in 1..4 {
                if col[k].norm() > col[r].norm() + 1e-9 {
                    r = k;
                }
            }
            if col[r].norm() > 0.0 {
                pinned[c] = Some((r, col[r] / col[r].norm()));
            }
        }
        let mut entries = Vec::with_capacity(48);
        for (c, pin) in pinned.iter().enumerate() {
            for r in 0..6 {
                entries.push((r, c, false));
                if pin.map(|(pr, _)| pr) != Some(r) {
                    entries.push((r, c, true));
                }
            }
        }
        Layout { entries, pinned }
    }

    /// Rotates gauge columns so their pinned elements carry the reference phase.
    fn align(&self, m: &Mat64) -> Mat64 {
        let mut out = *m;
        for (c, pin) in self.pinned.iter().enumerate() {
            if let Some((r, ph)) = pin {
                let z = out[(*r, c)];
                if z.norm() > 0.0 {
                    let rot = ph * z.conj() / z.norm();
                    out.column_mut(c).iter_mut().for_each(|x| *x *= rot);
                }
            }
        }
        out
    }

    fn len(&self) -> usize {
        self.entries.len() + 4
    }

    /// Unconstrained reals to M. Each column is a direction (the listed entries)
    /// scaled to norm |sin t_c|, with the four angles t_c last.
    fn to_m(&self, p: &[f64]) -> Mat64 {
        debug_assert_eq!(p.len(), self.len());
        let mut m = Mat64::zeros();
        for (&(r, c, imag), x) in self.entries.iter().zip(p) {
            if imag {
                m[(r, c)].im = *x;
            } else {
                m[(r, c)].re = *x;
            }
        }
        for (c, pin) in self.pinned.iter().enumerate() {
            if let Some((r, ph)) = pin {
                m[(*r, c)] = ph * m[(*r, c)].re;
            }
        }
        let angles = &p[self.entries.len()..];
        for (mut col, t) in m.column_iter_mut().zip(angles) {
            let n = col.norm();
            if n > 0.0 {
                col *= Complex64::new(t.sin().abs() / n, 0.0);
            }
        }
        m
    }

    fn to_params(&self, m: &Mat64) -> Vec<f64> {
        let mut m = self.align(m);
        for (c, pin) in self.pinned.iter().enumerate() {
            if let Some((r, ph)) = pin {
                m[(*r, c)] = Complex64::new((m[(*r, c)] * ph.conj()).re, 0.0);
            }
        }
        let norms: Vec<f64> = m.column_iter().map(|c| c.norm()).collect();
        let mut p: Vec<f64> = self
            .entries
            .iter()
            .map(|&(r, c, imag)| {
                let z = if norms[c] > 0.0 { m[(r, c)] / norms[c] } else { Complex64::new(0.0, 0.0) };
                if imag {
                    z.im
                } else {
                    z.re
                }
            })
            .collect();
        p.extend(norms.iter().map(|n| n.min(1.0).asin()));
        p
    }
}

struct Prepared<'a> {
    layout: Layout,
    points: Vec<(&'a TomoPoint, f64, Vec6, Vec6, usize)>,
    geos: Vec<InputGeometry>,
    mom: PairMoments,
    mode: MultiPairMode,
}

impl Prepared<'_> {
    fn residuals(&self, m: &Mat64) -> impl Iterator<Item = f64> + '_ {
        let m = *m;
        let gs: Vec<Sym6> = self.geos.iter().map(|geo| m * geo.psi * m.transpose()).collect();
        self.points.iter().map(move |(p, k, u1, u2, g)| {
            let r = predict_with(&m, &gs[*g], &self.geos[*g], u1, u2, &self.mom, self.mode);
            (k * r.corrected() - p.corrected) / TomoDataset::variance(p).sqrt()
        })
    }

    fn chi2(&self, params: &[f64]) -> f64 {
        let m = self.layout.to_m(params);
        0.5 * self.residuals(&m).map(|z| z * z).sum::<f64>()
    }
}

fn is_logical_basis(s: &TwoQubitState) -> Option<usize> {
    (0..4).find(|&i| (s.amplitude(i / 2, i % 2).norm_sqr() - 1.0).abs() < 1e-12)
}

/// Multi-start least-squares fit of M to all datasets.
pub fn fit_pure_process(datasets: &[TomoDataset], opts: &ProcessFitOptions) -> Result<ProcessFit> {
    let mut seen = [false; 4];
    let mut superpositions = 0;
    for d in datasets {
        let input = d
            .input
            .as_ref()
            .ok_or_else(|| Error::Precondition("dataset has no recorded gate input".into()))?;
        if !(d.exposure > 0.0) {
            return Err(Error::Precondition("dataset exposure must be positive".into()));
        }
        match is_logical_basis(input) {
            Some(i) => seen[i] = true,
            None => superpositions += 1,
        }
    }
    if !seen.iter().all(|&s| s) || superpositions < 4 {
        return Err(Error::Precondition(
            "process fit needs all four logical inputs and at least four superposition inputs".into(),
        ));
    }

    let geos = datasets
        .iter()
        .map(|d| InputGeometry::new(d.input.as_ref().expect("checked")))
        .collect::<Result<Vec<_>>>()?;
    let mut points = Vec::new();
    for (gi, d) in datasets.iter().enumerate() {
        for p in &d.points {
            let (u1, u2) = detection_vectors(&p.setting);
            points.push((p, d.exposure * p.weight, u1, u2, gi));
        }
    }
    let ideal_m = *ProcessMatrix::from_circuit(CnotCircuit::shared()).matrix();
    let layout = Layout::new(&ideal_m);
    let ideal = layout.to_params(&ideal_m);
    let prep = Prepared {
        layout,
        points,
        geos,
        mom: PairMoments::of(&opts.source),
        mode: opts.mode,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts: Vec<Vec<f64>> = (0..opts.starts.max(1))
        .map(|start| {
            if start == 0 {
                return ideal.clone();
            }
            ideal
                .iter()
                .map(|x| {
                    let (a, b): (f64, f64) = (rng.random(), rng.random());
                    x + opts.perturbation
                        * (-2.0 * (1.0 - a).ln()).sqrt()
                        * (2.0 * std::f64::consts::PI * b).cos()
                })
                .collect()
        })
        .collect();
    let outcomes: Vec<_> = starts
        .par_iter()
        .map(|x0| {
            minimize(
                |x| (prep.chi2(x), numeric_gradient(|y| prep.chi2(y), x, 1e-6)),
                x0,
                opts.optimizer,
            )
        })
        .collect();
    let best = outcomes
        .into_iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.f.total_cmp(&b.f));
    let (best_start, out) = best.expect("at least one start");
    let m = prep.layout.to_m(&out.x);
    let n = prep.points.len() as f64;
    let mean_residual = prep.residuals(&m).map(f64::abs).sum::<f64>() / n;
    Ok(ProcessFit {
        process: ProcessMatrix::new(m)?,
        objective: out.f,
        mean_residual,
        iterations: out.iterations,
        converged: out.converged,
        best_start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::OutcomeModel;
    use crate::gates::{ideal_cnot, BellState, QsSpec};
    use crate::tomography::analyzer::standard_settings;

    #[test]
    fn ideal_process_reproduces_the_gate() {
        let pm = ProcessMatrix::from_circuit(CnotCircuit::shared());
        let f = process_fidelity(&pm, &ideal_cnot()).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
        for c in pm.matrix().column_iter() {
            assert!((c.norm() - 1.0).abs() < 1e-12);
        }
        let a = pm.post_selected_operator();
        assert!((a - CnotCircuit::shared().operator()).norm() < 1e-14);
    }

    #[test]
    fn closed_form_rates_match_fock_tables() {
        // Same moments evaluated by full Fock evolution through the 16-mode circuit.
        let c = CnotCircuit::shared();
        let pm = ProcessMatrix::from_circuit(c);
        let only = |p1, p2| PairMoments { p1, p2, n3: 0.0, nn3: 0.0, mu: 0.0 };
        for input in [TwoQubitState::basis(2), BellState::PsiMinus.gate_input()] {
            let geo = InputGeometry::new(&input).unwrap();
            for s in standard_settings().iter().step_by(3) {
                let (u1, u2) = detection_vectors(s);
                for mode in [MultiPairMode::Exact, MultiPairMode::Incoherent] {
                    let model = OutcomeModel::build(c, &input, QsSpec::ideal(), s, mode).unwrap();
                    let k1k2 = |n: usize| model.table(n).expect(|k| k as f64, |k| k as f64);
                    let one = predict(pm.matrix(), &geo, &u1, &u2, &only(1.0, 0.0), mode);
                    assert!((one.single - k1k2(1)).abs() < 1e-12);
                    let two = predict(pm.matrix(), &geo, &u1, &u2, &only(0.0, 1.0), mode);
                    assert!((two.multi_excess - k1k2(2)).abs() < 1e-12, "{mode:?}");
                }
            }
        }
    }

    #[test]
    fn fidelity_is_phase_invariant() {
        let pm = ProcessMatrix::from_circuit(CnotCircuit::shared());
        let z = Complex64::from_polar(0.7, 1.3);
        let f = process_fidelity(&pm.scaled(z), &ideal_cnot()).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_process_is_rejected() {
        let pm = ProcessMatrix::new(Mat64::zeros()).unwrap();
        assert!(process_fidelity(&pm, &ideal_cnot()).is_err());
    }

    #[test]
    fn column_norm_bound_enforced() {
        let mut m = Mat64::zeros();
        m[(0, 0)] = Complex64::new(1.1, 0.0);
        assert!(ProcessMatrix::new(m).is_err());
    }

    #[test]
    fn parameter_map_round_trip_below_saturation() {
        let pm = ProcessMatrix::from_circuit(CnotCircuit::shared()).scaled(Complex64::new(0.9, 0.0));
        let layout = Layout::new(pm.matrix());
        assert_eq!(layout.len(), 49);
        let aligned = layout.align(pm.matrix());
        let back = layout.to_m(&layout.to_params(pm.matrix()));
        assert!((back - aligned).norm() < 1e-12);
        let f = process_fidelity(&ProcessMatrix::new(aligned).unwrap(), &ideal_cnot()).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
    }
}
