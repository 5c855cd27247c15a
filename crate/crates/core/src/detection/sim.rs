//! Window-by-window Monte Carlo of heralded coincidence counting.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{DetectorModel, RunConfig, SourceModel};
use super::outcomes::OutcomeModel;
use crate::error::{Error, Result};
use crate::gates::{CnotCircuit, TwoQubitState};
use crate::tomography::AnalyzerSetting;

/// Windows per parallel work unit.
pub const CHUNK_WINDOWS: u64 = 1 << 16;

/// 32-bit words reserved per window in the per-setting stream.
const WORDS_PER_WINDOW: u128 = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub setting: AnalyzerSetting,
    /// Herald and gated detector firing in the same window.
    pub total: u64,
    /// Herald firing together with the gated detector one window earlier.
    pub accidental: u64,
    pub singles1: u64,
    pub singles2: u64,
}

impl CountRecord {
    pub fn setting_id(&self) -> usize {
        self.setting.id
    }

    pub fn corrected(&self) -> f64 {
        subtract_accidentals(self)
    }
}

/// `total − accidental`, negative values kept.
pub fn subtract_accidentals(record: &CountRecord) -> f64 {
    record.total as f64 - record.accidental as f64
}

/// Uniform double in [0, 1) from the top 53 bits.
fn unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Inverse-CDF pair count for `u ∈ [0, 1)`.
fn pair_count(source: &SourceModel, cdf: &[f64], u: f64) -> usize {
    if let Some(n) = cdf.iter().position(|&c| u < c) {
        return n;
    }
    let mut n = cdf.len();
    let mut acc = *cdf.last().unwrap_or(&0.0);
    loop {
        acc += source.pair_probability(n);
        if u < acc || n > 10_000 {
            return n;
        }
        n += 1;
    }
}

fn pair_cdf(source: &SourceModel) -> Vec<f64> {
    let mut cdf = Vec::new();
    let mut acc = 0.0;
    for n in 0..64 {
        acc += source.pair_probability(n);
        cdf.push(acc);
        if 1.0 - acc < 1e-17 {
            break;
        }
    }
    cdf
}

/// Draws a pair count from one 64-bit word of `rng`.
pub fn sample_pair_count(source: &SourceModel, rng: &mut impl RngCore) -> usize {
    pair_count(source, &pair_cdf(source), unit(rng.next_u64()))
}

struct WindowSampler<'a> {
    model: &'a OutcomeModel,
    source: &'a SourceModel,
    cdf: Vec<f64>,
    herald: &'a DetectorModel,
    gated: &'a DetectorModel,
    ph: Vec<f64>,
    pg: Vec<f64>,
}

impl<'a> WindowSampler<'a> {
    fn new(
        model: &'a OutcomeModel,
        source: &'a SourceModel,
        herald: &'a DetectorModel,
        gated: &'a DetectorModel,
    ) -> Self {
        let tab = |d: &DetectorModel| (0..=32).map(|k| d.click_probability(k, source.raman_prob)).collect();
        WindowSampler {
            model,
            source,
            cdf: pair_cdf(source),
            herald,
            gated,
            ph: tab(herald),
            pg: tab(gated),
        }
    }

    fn click(table: &[f64], d: &DetectorModel, raman: f64, k: usize) -> f64 {
        table.get(k).copied().unwrap_or_else(|| d.click_probability(k, raman))
    }

    /// Draw order within the window's four words: pair count, herald, gated, outcome.
    fn window(&self, w: [u64; 4]) -> (bool, bool) {
        let n = pair_count(self.source, &self.cdf, unit(w[0]));
        let (k1, k2) = if n == 0 {
            (0, 0)
        } else {
            self.model.table(n).sample(unit(w[3]))
        };
        let raman = self.source.raman_prob;
        let h = unit(w[1]) < Self::click(&self.ph, self.herald, raman, k1);
        let g = unit(w[2]) < Self::click(&self.pg, self.gated, raman, k2);
        (h, g)
    }
}

fn stream_at(seed: u64, stream: u64, window: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(window as u128 * WORDS_PER_WINDOW);
    rng
}

fn draw(rng: &mut ChaCha8Rng) -> [u64; 4] {
    [rng.next_u64(), rng.next_u64(), rng.next_u64(), rng.next_u64()]
}

fn add_counts(a: [u64; 4], b: [u64; 4]) -> Result<[u64; 4]> {
    let mut out = [0u64; 4];
    for i in 0..4 {
        out[i] = a[i]
            .checked_add(b[i])
            .ok_or_else(|| Error::CountOverflow("count aggregation overflowed u64".into()))?;
    }
    Ok(out)
}

/// Counts `[total, accidental, singles1, singles2]` over windows `1..=n_gates`.
/// Window 0 only supplies the gated outcome preceding window 1.
fn count_setting(sampler: &WindowSampler<'_>, seed: u64, stream: u64, n_gates: u64) -> Result<[u64; 4]> {
    let last = n_gates;
    let n_chunks = last / CHUNK_WINDOWS + 1;
    (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK_WINDOWS;
            let end = (start + CHUNK_WINDOWS).min(last + 1);
            let mut prev_gated = if start == 0 {
                false
            } else {
                sampler.window(draw(&mut stream_at(seed, stream, start - 1))).1
            };
            let mut rng = stream_at(seed, stream, start);
            let mut acc = [0u64; 4];
            for w in start..end {
                let (h, g) = sampler.window(draw(&mut rng));
                if w >= 1 {
                    acc[0] += (h && g) as u64;
                    acc[1] += (h && prev_gated) as u64;
                    acc[2] += h as u64;
                    acc[3] += g as u64;
                }
                prev_gated = g;
            }
            Ok(acc)
        })
        .try_reduce(|| [0u64; 4], add_counts)
}

/// Simulates every analyzer setting of `cfg` for one gate input.
///
/// Setting `i` of the list uses ChaCha stream `i`; window `w` consumes words
/// `8w..8w+8` of it, so results do not depend on chunking or thread count.
pub fn simulate_counts(
    circuit: &CnotCircuit,
    input: &TwoQubitState,
    source: &SourceModel,
    herald: &DetectorModel,
    gated: &DetectorModel,
    cfg: &RunConfig,
) -> Result<Vec<CountRecord>> {
    cfg.validate()?;
    for (i, s) in cfg.settings.iter().enumerate() {
        if cfg.settings[..i].iter().any(|o| o.id == s.id) {
            return Err(Error::InvalidSettings(format!("duplicate setting id {}", s.id)));
        }
    }
    let spec = source.qs_spec();
    cfg.settings
        .iter()
        .enumerate()
        .map(|(i, setting)| {
            let model = OutcomeModel::build(circuit, input, spec, setting, cfg.multi_pair_mode)?;
            let sampler = WindowSampler::new(&model, source, herald, gated);
            let [total, accidental, singles1, singles2] =
                count_setting(&sampler, cfg.seed, i as u64, cfg.n_gates)?;
            Ok(CountRecord {
                setting: setting.clone(),
                total,
                accidental,
                singles1,
                singles2,
            })
        })
        .collect()
}
