use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qubit::SingleRailQubit;

/// Amplitude (squared norm) pushed past the truncation that is still tolerated.
pub const LEAKAGE_TOLERANCE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Multi-mode photon-number state truncated at `N` photons per mode.
///
/// Stored as a weighted ensemble of pure branches; a pure state is a single
/// branch of weight one. Branch vectors are dense over occupation tuples,
/// mode 0 being the most significant digit in base `N + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    modes: usize,
    truncation: usize,
    branches: Vec<(f64, Vec<Complex64>)>,
}

impl FockState {
    pub fn vacuum(modes: usize, truncation: usize) -> Self {
        let mut v = vec![ZERO; (truncation + 1).pow(modes as u32)];
        v[0] = Complex64::new(1.0, 0.0);
        FockState {
            modes,
            truncation,
            branches: vec![(1.0, v)],
        }
    }

    /// Pure superposition of occupation tuples.
    pub fn from_basis(
        modes: usize,
        truncation: usize,
        terms: &[(Vec<usize>, Complex64)],
    ) -> Result<Self> {
        let mut state = FockState {
            modes,
            truncation,
            branches: vec![(1.0, vec![ZERO; (truncation + 1).pow(modes as u32)])],
        };
        for (occ, amp) in terms {
            let idx = state.index_of(occ)?;
            state.branches[0].1[idx] += amp;
        }
        Ok(state)
    }

    /// The qubit `E|ψ⟩⟨ψ| + (1 − E)|0⟩⟨0|` in `mode`, every other mode in vacuum.
    pub fn from_qubit(
        q: &SingleRailQubit,
        modes: usize,
        truncation: usize,
        mode: usize,
    ) -> Result<Self> {
        if mode >= modes {
            return Err(Error::InvalidArgument(format!(
                "mode {mode} out of range for {modes} modes"
            )));
        }
        let e = q.efficiency();
        let mut occ = vec![0; modes];
        let vac = FockState::from_basis(
            modes,
            truncation,
            &[(occ.clone(), Complex64::new(1.0, 0.0))],
        )?;
        if e == 0.0 {
            return Ok(vac);
        }
        if truncation == 0 {
            return Err(Error::TruncationOverflow {
                leaked: e * q.beta().norm_sqr(),
                truncation,
            });
        }
        occ[mode] = 1;
        let coherent = FockState::from_basis(
            modes,
            truncation,
            &[(vec![0; modes], q.alpha()), (occ, q.beta())],
        )?;
        let mut branches = vec![(e, coherent.branches[0].1.clone())];
        if e < 1.0 {
            branches.push((1.0 - e, vac.branches[0].1.clone()));
        }
        Ok(FockState {
            modes,
            truncation,
            branches,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn branches(&self) -> &[(f64, Vec<Complex64>)] {
        &self.branches
    }

    fn stride(&self, mode: usize) -> usize {
        (self.truncation + 1).pow((self.modes - 1 - mode) as u32)
    }

    fn occupation(&self, index: usize, mode: usize) -> usize {
        (index / self.stride(mode)) % (self.truncation + 1)
    }

    fn index_of(&self, occ: &[usize]) -> Result<usize> {
        if occ.len() != self.modes {
            return Err(Error::InvalidArgument(
                "occupation tuple has the wrong length".into(),
            ));
        }
        let mut idx = 0;
        for &n in occ {
            if n > self.truncation {
                return Err(Error::TruncationOverflow {
                    leaked: f64::INFINITY,
                    truncation: self.truncation,
                });
            }
            idx = idx * (self.truncation + 1) + n;
        }
        Ok(idx)
    }

    /// Pure-branch amplitude; only meaningful for single-branch states.
    pub fn amplitude(&self, occ: &[usize]) -> Result<Complex64> {
        let idx = self.index_of(occ)?;
        Ok(self.branches[0].1[idx])
    }

    /// `Σ wᵢ ‖ψᵢ‖²`: one for normalized states, the success weight after a projection.
    pub fn norm(&self) -> f64 {
        self.branches
            .iter()
            .map(|(w, v)| w * v.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum()
    }

    /// Beam splitter on `(a, b)`: `a† → r a† + t b†`, `b† → t a† − r b†`.
    pub fn apply_beam_splitter(&self, mode_a: usize, mode_b: usize, t: f64) -> Result<FockState> {
        if mode_a >= self.modes || mode_b >= self.modes || mode_a == mode_b {
            return Err(Error::InvalidArgument(format!(
                "invalid mode pair ({mode_a}, {mode_b})"
            )));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidArgument(format!(
                "transmissivity {t} outside [0, 1]"
            )));
        }
        let r = (1.0 - t * t).max(0.0).sqrt();
        let n_max = self.truncation;
        let fact = factorials(2 * n_max);
        let (sa, sb) = (self.stride(mode_a), self.stride(mode_b));
        let mut leaked = 0.0;
        let mut branches = Vec::with_capacity(self.branches.len());
        for (w, v) in &self.branches {
            let mut out = vec![ZERO; v.len()];
            // overflow[(base, p, q)] collects amplitude landing beyond the truncation
            let mut overflow = std::collections::HashMap::new();
            for (i, &amp) in v.iter().enumerate() {
                if amp == ZERO {
                    continue;
                }
                let (na, nb) = (self.occupation(i, mode_a), self.occupation(i, mode_b));
                let base = i - na * sa - nb * sb;
                let norm_in = (fact[na] * fact[nb]).sqrt();
                for k in 0..=na {
                    let ca = binomial(&fact, na, k) * r.powi(k as i32) * t.powi((na - k) as i32);
                    for l in 0..=nb {
                        let cb =
                            binomial(&fact, nb, l) * t.powi(l as i32) * (-r).powi((nb - l) as i32);
                        let (p, q) = (k + l, na - k + nb - l);
                        let coeff = ca * cb * (fact[p] * fact[q]).sqrt() / norm_in;
                        if coeff == 0.0 {
                            continue;
                        }
                        if p > n_max || q > n_max {
                            *overflow.entry((base, p, q)).or_insert(ZERO) += amp * coeff;
                        } else {
                            out[base + p * sa + q * sb] += amp * coeff;
                        }
                    }
                }
            }
            leaked += w * overflow
                .values()
                .map(|z: &Complex64| z.norm_sqr())
                .sum::<f64>();
            branches.push((*w, out));
        }
        if leaked > LEAKAGE_TOLERANCE {
            return Err(Error::TruncationOverflow {
                leaked,
                truncation: n_max,
            });
        }
        Ok(FockState {
            modes: self.modes,
            truncation: self.truncation,
            branches,
        })
    }

    /// `|n⟩ → e^{inχ}|n⟩` on one mode.
    pub fn apply_phase(&self, mode: usize, chi: f64) -> Result<FockState> {
        if mode >= self.modes {
            return Err(Error::InvalidArgument(format!("mode {mode} out of range")));
        }
        let mut out = self.clone();
        for (_, v) in &mut out.branches {
            for (i, z) in v.iter_mut().enumerate() {
                let n = self.occupation(i, mode);
                *z *= Complex64::from_polar(1.0, n as f64 * chi);
            }
        }
        Ok(out)
    }

    /// Contracts `mode` with the bra whose components are `bra[n] = ⟨χ|n⟩`;
    /// the mode is removed and the result left unnormalized.
    pub fn project(&self, mode: usize, bra: &[Complex64]) -> Result<FockState> {
        if mode >= self.modes {
            return Err(Error::InvalidArgument(format!("mode {mode} out of range")));
        }
        if bra.len() != self.truncation + 1 {
            return Err(Error::InvalidArgument(format!(
                "projector has {} components, truncation needs {}",
                bra.len(),
                self.truncation + 1
            )));
        }
        let remaining = self.modes - 1;
        let dim = (self.truncation + 1).pow(remaining as u32);
        let stride = self.stride(mode);
        let d = self.truncation + 1;
        let branches = self
            .branches
            .iter()
            .map(|(w, v)| {
                let mut out = vec![ZERO; dim];
                for (i, &amp) in v.iter().enumerate() {
                    if amp == ZERO {
                        continue;
                    }
                    let n = (i / stride) % d;
                    // drop the digit of `mode`
                    let high = i / (stride * d);
                    let low = i % stride;
                    out[high * stride + low] += bra[n] * amp;
                }
                (*w, out)
            })
            .collect();
        Ok(FockState {
            modes: remaining,
            truncation: self.truncation,
            branches,
        })
    }

    /// Reduced (unnormalized) density matrix of one mode, tracing the rest.
    pub fn reduced_density(&self, mode: usize) -> Result<DMatrix<Complex64>> {
        if mode >= self.modes {
            return Err(Error::InvalidArgument(format!("mode {mode} out of range")));
        }
        let d = self.truncation + 1;
        let stride = self.stride(mode);
        let mut rho = DMatrix::<Complex64>::zeros(d, d);
        for (w, v) in &self.branches {
            for (i, &a) in v.iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                let n = (i / stride) % d;
                let base = i - n * stride;
                for m in 0..d {
                    let b = v[base + m * stride];
                    if b != ZERO {
                        rho[(n, m)] += a * b.conj() * *w;
                    }
                }
            }
        }
        Ok(rho)
    }
}

fn factorials(n: usize) -> Vec<f64> {
    let mut f = vec![1.0; n + 1];
    for k in 1..=n {
        f[k] = f[k - 1] * k as f64;
    }
    f
}

fn binomial(fact: &[f64], n: usize, k: usize) -> f64 {
    fact[n] / (fact[k] * fact[n - k])
}
