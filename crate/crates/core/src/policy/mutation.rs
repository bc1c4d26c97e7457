//! Position-plus-residue mutation policy used by the mutation environments.

use serde::{Deserialize, Serialize};

use super::{check_finite, row_kl, LogProbGrad};
use crate::dist::{argmax, log_softmax_unchecked, softmax_unchecked, CategoricalDist};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Real;
use crate::sequence::Sequence;

/// Weight on the position term of the combined log-probability.
pub const DEFAULT_POSITION_WEIGHT: f64 = 0.5;
/// Stochastic-mode cut-off on masked position probabilities.
pub const DEFAULT_POSITION_THRESHOLD: f64 = 0.5;
/// Default mutation budget per call of [`MutationPolicy::mutate_step`].
pub const DEFAULT_MAX_SITES: usize = 4;

/// A single edit: substitute `residue` at `position`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MutationAction {
    pub position: usize,
    pub residue: usize,
}

/// Residue (amino-acid) and position temperatures.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Temperatures<F> {
    pub residue: F,
    pub position: F,
}

impl<F: Real> Default for Temperatures<F> {
    fn default() -> Self {
        Self {
            residue: F::one(),
            position: F::one(),
        }
    }
}

impl<F: Real> Temperatures<F> {
    pub fn uniform(t: F) -> Self {
        Self {
            residue: t,
            position: t,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.residue > F::zero() && self.position > F::zero() {
            Ok(())
        } else {
            Err(Error::input("temperatures must be > 0"))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MutateOptions<F> {
    pub max_sites: usize,
    pub temperatures: Temperatures<F>,
    pub position_threshold: F,
    pub stochastic: bool,
}

impl<F: Real> Default for MutateOptions<F> {
    fn default() -> Self {
        Self {
            max_sites: DEFAULT_MAX_SITES,
            temperatures: Temperatures::default(),
            position_threshold: F::of(DEFAULT_POSITION_THRESHOLD),
            stochastic: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MutationOutcome<F> {
    pub sequence: Sequence,
    pub actions: Vec<MutationAction>,
    /// Sum of the per-site combined log-probabilities.
    pub log_prob: F,
}

/// Position head `[L]` plus per-position residue logits `[L x A]`.
///
/// Flat parameter layout: `[position (L) | residue (L x A)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MutationPolicy<F> {
    length: usize,
    alphabet_size: usize,
    params: Vec<F>,
    position_weight: F,
}

impl<F: Real> MutationPolicy<F> {
    pub fn new(
        position_logits: Vec<F>,
        residue_logits: Vec<F>,
        alphabet_size: usize,
        position_weight: F,
    ) -> Result<Self> {
        let length = position_logits.len();
        if residue_logits.len() != length * alphabet_size {
            return Err(Error::input(format!(
                "residue logits must be {length}x{alphabet_size}, got {} entries",
                residue_logits.len()
            )));
        }
        let mut params = position_logits;
        params.extend(residue_logits);
        Self::from_params(length, alphabet_size, params, position_weight)
    }

    pub(crate) fn from_params(
        length: usize,
        alphabet_size: usize,
        params: Vec<F>,
        position_weight: F,
    ) -> Result<Self> {
        if length == 0 || alphabet_size < 2 {
            return Err(Error::input(
                "mutation policy needs length >= 1 and alphabet size >= 2",
            ));
        }
        if params.len() != length * (alphabet_size + 1) {
            return Err(Error::input("mutation parameter vector has the wrong size"));
        }
        check_finite(&params, "mutation logits")?;
        if !(position_weight >= F::zero()) || !position_weight.is_finite() {
            return Err(Error::input("position_weight must be finite and >= 0"));
        }
        Ok(Self {
            length,
            alphabet_size,
            params,
            position_weight,
        })
    }

    pub fn uniform(length: usize, alphabet_size: usize) -> Self {
        Self::from_params(
            length,
            alphabet_size,
            vec![F::zero(); length * (alphabet_size + 1)],
            F::of(DEFAULT_POSITION_WEIGHT),
        )
        .expect("valid dimensions")
    }

    pub fn random(length: usize, alphabet_size: usize, scale: f64, rng: &mut RngStream) -> Self {
        let params = (0..length * (alphabet_size + 1))
            .map(|_| F::of(scale * rng.normal()))
            .collect();
        Self::from_params(length, alphabet_size, params, F::of(DEFAULT_POSITION_WEIGHT))
            .expect("finite logits")
    }

    pub fn family(&self) -> &'static str {
        "mutation"
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn position_weight(&self) -> F {
        self.position_weight
    }

    pub fn set_position_weight(&mut self, w: F) {
        self.position_weight = w;
    }

    pub fn params(&self) -> &[F] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [F] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn position_logits(&self) -> &[F] {
        &self.params[..self.length]
    }

    pub fn residue_row(&self, position: usize) -> &[F] {
        let start = self.residue_offset(position);
        &self.params[start..start + self.alphabet_size]
    }

    fn residue_offset(&self, position: usize) -> usize {
        self.length + position * self.alphabet_size
    }

    fn check_mask(&self, mask: &[bool]) -> Result<()> {
        if mask.len() != self.length {
            return Err(Error::input(format!(
                "mask length {} does not match policy length {}",
                mask.len(),
                self.length
            )));
        }
        if !mask.iter().any(|&m| m) {
            return Err(Error::input("mask has no mutable position"));
        }
        Ok(())
    }

    fn check_sequence(&self, seq: &Sequence, what: &str) -> Result<()> {
        if seq.len() != self.length {
            return Err(Error::input(format!(
                "{what} length {} does not match policy length {}",
                seq.len(),
                self.length
            )));
        }
        if seq.tokens().iter().any(|&t| t >= self.alphabet_size) {
            return Err(Error::input(format!("{what} has an out-of-range token")));
        }
        Ok(())
    }

    /// Position distribution restricted to the mask and renormalized.
    pub fn position_dist(&self, mask: &[bool], position_temp: F) -> Result<CategoricalDist<F>> {
        self.check_mask(mask)?;
        if !(position_temp > F::zero()) {
            return Err(Error::input("position temperature must be > 0"));
        }
        let lp = masked_log_softmax(self.position_logits(), mask, position_temp);
        CategoricalDist::new(lp.into_iter().map(|l| l.exp()).collect())
    }

    /// Residue distribution at `position` with `excluded` zeroed and renormalized.
    pub fn residue_dist(
        &self,
        position: usize,
        excluded: usize,
        temperature: F,
    ) -> Result<CategoricalDist<F>> {
        if position >= self.length || excluded >= self.alphabet_size {
            return Err(Error::input("position or residue out of range"));
        }
        if !(temperature > F::zero()) {
            return Err(Error::input("temperature must be > 0"));
        }
        let allowed: Vec<bool> = (0..self.alphabet_size).map(|r| r != excluded).collect();
        let lp = masked_log_softmax(self.residue_row(position), &allowed, temperature);
        CategoricalDist::new(lp.into_iter().map(|l| l.exp()).collect())
    }

    fn check_action(
        &self,
        wild_type: &Sequence,
        action: MutationAction,
        mask: &[bool],
    ) -> Result<()> {
        self.check_mask(mask)?;
        self.check_sequence(wild_type, "wild type")?;
        if action.position >= self.length || action.residue >= self.alphabet_size {
            return Err(Error::action(format!("{action:?} is out of range")));
        }
        if !mask[action.position] {
            return Err(Error::action(format!(
                "position {} is outside the mutable mask",
                action.position
            )));
        }
        if wild_type.tokens()[action.position] == action.residue {
            return Err(Error::action(format!(
                "residue {} is the wild-type residue at position {}",
                action.residue, action.position
            )));
        }
        Ok(())
    }

    /// `log pi_AA(residue | position) + w * log pi_pos(position)`, where the
    /// residue distribution excludes the wild-type residue and the position
    /// distribution is restricted to the mask, both renormalized.
    pub fn mutation_log_prob(
        &self,
        wild_type: &Sequence,
        action: MutationAction,
        mask: &[bool],
        temps: Temperatures<F>,
    ) -> Result<F> {
        Ok(self.grad_mutation_log_prob(wild_type, action, mask, temps)?.log_prob)
    }

    /// Combined log-probability with its closed-form gradient.
    pub fn grad_mutation_log_prob(
        &self,
        wild_type: &Sequence,
        action: MutationAction,
        mask: &[bool],
        temps: Temperatures<F>,
    ) -> Result<LogProbGrad<F>> {
        self.check_action(wild_type, action, mask)?;
        temps.validate()?;
        let mut grad = vec![F::zero(); self.params.len()];

        let pos_lp = masked_log_softmax(self.position_logits(), mask, temps.position);
        let w = self.position_weight;
        for (j, &l) in pos_lp.iter().enumerate() {
            if mask[j] {
                grad[j] = -w * l.exp() / temps.position;
            }
        }
        grad[action.position] = grad[action.position] + w / temps.position;

        let excluded = wild_type.tokens()[action.position];
        let allowed: Vec<bool> = (0..self.alphabet_size).map(|r| r != excluded).collect();
        let row_lp = masked_log_softmax(self.residue_row(action.position), &allowed, temps.residue);
        let off = self.residue_offset(action.position);
        for (j, &l) in row_lp.iter().enumerate() {
            if allowed[j] {
                grad[off + j] = -l.exp() / temps.residue;
            }
        }
        grad[off + action.residue] = grad[off + action.residue] + F::one() / temps.residue;

        Ok(LogProbGrad {
            log_prob: row_lp[action.residue] + w * pos_lp[action.position],
            grad,
        })
    }

    /// Draws one legal action: a masked position, then a non-wild-type residue.
    pub fn sample_action(
        &self,
        wild_type: &Sequence,
        mask: &[bool],
        temps: Temperatures<F>,
        rng: &mut RngStream,
    ) -> Result<(MutationAction, F)> {
        temps.validate()?;
        self.check_sequence(wild_type, "wild type")?;
        let position = self.position_dist(mask, temps.position)?.sample(rng);
        let residue = self
            .residue_dist(position, wild_type.tokens()[position], temps.residue)?
            .sample(rng);
        let action = MutationAction { position, residue };
        let lp = self.mutation_log_prob(wild_type, action, mask, temps)?;
        Ok((action, lp))
    }

    /// Multi-site policy-guided mutation of `state`.
    ///
    /// Stochastic mode draws, without replacement and proportionally to the
    /// masked position probabilities, up to `max_sites` of the positions whose
    /// masked probability exceeds the threshold (falling back to the single
    /// most probable masked position when none does), then samples residues.
    /// Deterministic mode takes the top-`max_sites` masked positions and the
    /// argmax residues. The wild-type residue is never emitted at a selected site.
    pub fn mutate_step(
        &self,
        state: &Sequence,
        wild_type: &Sequence,
        mask: &[bool],
        opts: &MutateOptions<F>,
        rng: &mut RngStream,
    ) -> Result<MutationOutcome<F>> {
        if opts.max_sites == 0 {
            return Err(Error::input("max_sites must be >= 1"));
        }
        self.check_mask(mask)?;
        self.check_sequence(state, "state")?;
        self.check_sequence(wild_type, "wild type")?;
        opts.temperatures.validate()?;

        // Unrenormalized masked probabilities, as thresholded by the selection rule.
        let p_pos = softmax_unchecked(self.position_logits(), opts.temperatures.position);
        let masked: Vec<F> = p_pos
            .iter()
            .zip(mask)
            .map(|(&p, &m)| if m { p } else { F::zero() })
            .collect();
        let masked_positions: Vec<usize> = (0..self.length).filter(|&i| mask[i]).collect();

        let sites: Vec<usize> = if opts.stochastic {
            let candidates: Vec<usize> = masked_positions
                .iter()
                .copied()
                .filter(|&i| masked[i] > opts.position_threshold)
                .collect();
            if candidates.is_empty() {
                vec![best_of(&masked, &masked_positions)]
            } else {
                draw_without_replacement(&masked, candidates, opts.max_sites, rng)
            }
        } else {
            let mut order = masked_positions.clone();
            order.sort_by(|&a, &b| {
                masked[b]
                    .partial_cmp(&masked[a])
                    .expect("finite probabilities")
                    .then(a.cmp(&b))
            });
            order.truncate(opts.max_sites);
            order
        };

        let mut tokens = state.tokens().to_vec();
        let mut actions = Vec::with_capacity(sites.len());
        let mut log_prob = F::zero();
        for site in sites {
            let dist =
                self.residue_dist(site, wild_type.tokens()[site], opts.temperatures.residue)?;
            let residue = if opts.stochastic {
                dist.sample(rng)
            } else {
                dist.argmax()
            };
            let action = MutationAction {
                position: site,
                residue,
            };
            log_prob = log_prob
                + self.mutation_log_prob(wild_type, action, mask, opts.temperatures)?;
            tokens[site] = residue;
            actions.push(action);
        }
        Ok(MutationOutcome {
            sequence: Sequence::from_raw(tokens),
            actions,
            log_prob,
        })
    }

    /// Entropy of the masked position distribution and its gradient.
    pub fn position_entropy(&self, mask: &[bool], position_temp: F) -> Result<(F, Vec<F>)> {
        self.check_mask(mask)?;
        if !(position_temp > F::zero()) {
            return Err(Error::input("position temperature must be > 0"));
        }
        let lp = masked_log_softmax(self.position_logits(), mask, position_temp);
        let h = -lp
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(&l, _)| l.exp() * l)
            .sum::<F>();
        let mut grad = vec![F::zero(); self.params.len()];
        for j in 0..self.length {
            if mask[j] {
                let p = lp[j].exp();
                grad[j] = -p * (lp[j] + h) / position_temp;
            }
        }
        Ok((h, grad))
    }

    /// Mean over `sites` of `KL(softmax(row_self) || softmax(row_ref))` on the
    /// residue rows (temperature 1), with its gradient.
    pub fn site_kl(&self, reference: &Self, sites: &[usize]) -> Result<(F, Vec<F>)> {
        if reference.params.len() != self.params.len() {
            return Err(Error::input("reference policy has a different parameter layout"));
        }
        let mut grad = vec![F::zero(); self.params.len()];
        if sites.is_empty() {
            return Ok((F::zero(), grad));
        }
        let n = F::of_usize(sites.len());
        let mut total = F::zero();
        for &site in sites {
            if site >= self.length {
                return Err(Error::input(format!("site {site} out of range")));
            }
            let (kl, g) = row_kl(self.residue_row(site), reference.residue_row(site));
            total = total + kl;
            let off = self.residue_offset(site);
            for (j, gj) in g.into_iter().enumerate() {
                grad[off + j] = grad[off + j] + gj / n;
            }
        }
        Ok((total / n, grad))
    }
}

/// Log-softmax over the entries where `allowed` is true; others get `-inf`.
fn masked_log_softmax<F: Real>(logits: &[F], allowed: &[bool], temperature: F) -> Vec<F> {
    let kept: Vec<F> = logits
        .iter()
        .zip(allowed)
        .filter(|(_, &a)| a)
        .map(|(&l, _)| l)
        .collect();
    let lp = log_softmax_unchecked(&kept, temperature);
    let mut it = lp.into_iter();
    allowed
        .iter()
        .map(|&a| {
            if a {
                it.next().expect("one value per allowed entry")
            } else {
                F::neg_infinity()
            }
        })
        .collect()
}

fn best_of<F: Real>(probs: &[F], positions: &[usize]) -> usize {
    let vals: Vec<F> = positions.iter().map(|&i| probs[i]).collect();
    positions[argmax(&vals)]
}

fn draw_without_replacement<F: Real>(
    weights: &[F],
    mut candidates: Vec<usize>,
    count: usize,
    rng: &mut RngStream,
) -> Vec<usize> {
    let mut picked = Vec::new();
    while picked.len() < count && !candidates.is_empty() {
        let w: Vec<F> = candidates.iter().map(|&i| weights[i]).collect();
        let idx = CategoricalDist::from_weights(w)
            .expect("candidates carry positive mass")
            .sample(rng);
        picked.push(candidates.remove(idx));
    }
    picked.sort_unstable();
    picked
}
