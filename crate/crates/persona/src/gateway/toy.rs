// SPDX-License-Identifier: MIT OR Apache-2.0

//! A tiny, self-contained causal language model implementing the gateway
//! contract in pure Rust.
//!
//! The model exists so that every pipeline in this crate can run end to end
//! on CPU with full determinism: seeded sampling, per-layer residual capture,
//! and residual injection all behave exactly like a real backend, just at toy
//! scale. Weights are derived from a parameter seed, so a given
//! `(config, seed)` pair names one fixed model build.
//!
//! Architecture: token embedding plus sinusoidal positions, then `L` causal
//! blocks. Each block mixes the current position with an exponential moving
//! average of earlier positions and adds a `tanh` update to the residual
//! stream. Hook `l` sits directly after block `l`; injections are added and
//! captures read there. There is no final norm, so an injection at hook `L-1`
//! enters the unembedding linearly — which is what makes analytic logit
//! oracles possible (see [`ToyCausalLm::next_token_logits`]).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gateway::{
    ActivationTrace, Generation, GenerationRequest, ModelDescriptor, ModelGateway, PositionKind,
    Role, SteeringSpec,
};

/// Which forward positions receive steering injections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InjectPositions {
    /// Prompt processing and every decode step (default).
    #[default]
    All,
    /// Decode steps only; prompt positions stay untouched.
    GeneratedOnly,
}

/// Build-time configuration for [`ToyCausalLm`].
#[derive(Debug, Clone)]
pub struct ToyConfig {
    pub hidden_dim: usize,
    pub num_layers: usize,
    pub vocab_size: usize,
    pub max_positions: usize,
    /// Seed from which all weights are derived.
    pub param_seed: u64,
    pub inject_positions: InjectPositions,
    /// Position coverage of captured traces.
    pub capture_positions: PositionKind,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            hidden_dim: 32,
            num_layers: 4,
            vocab_size: 256,
            max_positions: 4096,
            param_seed: 0,
            inject_positions: InjectPositions::All,
            capture_positions: PositionKind::GeneratedOnly,
        }
    }
}

/// EMA decay used by the causal context mixer.
const CONTEXT_DECAY: f64 = 0.75;

const SYLLABLES: [&str; 16] = [
    "ba", "de", "ki", "lo", "mu", "na", "re", "si", "ta", "vu", "za", "po", "fe", "gi", "ho", "wa",
];

/// The toy model. See the module docs.
pub struct ToyCausalLm {
    config: ToyConfig,
    embed: Vec<f32>,   // vocab x d
    unembed: Vec<f32>, // vocab x d
    self_w: Vec<Vec<f32>>, // per layer, d x d
    ctx_w: Vec<Vec<f32>>,  // per layer, d x d
    closed: bool,
}

impl ToyCausalLm {
    pub fn new(config: ToyConfig) -> Self {
        assert!(config.hidden_dim > 0 && config.num_layers > 0 && config.vocab_size > 1);
        let d = config.hidden_dim;
        let v = config.vocab_size;
        let mut rng = ChaCha8Rng::seed_from_u64(config.param_seed);
        let scale = 1.0 / (d as f32).sqrt();
        let mut mat = |rows: usize, cols: usize| -> Vec<f32> {
            (0..rows * cols)
                .map(|_| rng.gen_range(-scale..scale))
                .collect()
        };
        let embed = mat(v, d);
        let unembed = mat(v, d);
        let self_w = (0..config.num_layers).map(|_| mat(d, d)).collect();
        let ctx_w = (0..config.num_layers).map(|_| mat(d, d)).collect();
        ToyCausalLm {
            config,
            embed,
            unembed,
            self_w,
            ctx_w,
            closed: false,
        }
    }

    pub fn config(&self) -> &ToyConfig {
        &self.config
    }

    /// Release the handle; all subsequent calls return `ModelUnavailable`.
    pub fn close(&mut self) {
        self.closed = true;
    }

    /// Overwrite the unembedding row of `token`.
    ///
    /// Setting the row to a direction `u` plants an analytic oracle: because
    /// hook `L-1` feeds the unembedding linearly, injecting `alpha * u` there
    /// shifts the token's logit by exactly `alpha * |u|^2`.
    pub fn set_unembed_row(&mut self, token: usize, row: &[f32]) -> Result<()> {
        let d = self.config.hidden_dim;
        if token >= self.config.vocab_size {
            return Err(Error::Precondition(format!(
                "token {token} out of vocab range {}",
                self.config.vocab_size
            )));
        }
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
        self.unembed[token * d..(token + 1) * d].copy_from_slice(row);
        Ok(())
    }

    /// Map a word to its token id (stable FNV-1a hash modulo vocab).
    pub fn token_for_word(&self, word: &str) -> usize {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in word.as_bytes() {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        (h % self.config.vocab_size as u64) as usize
    }

    /// Pseudo-word spelled for a token id.
    pub fn word_for_token(&self, token: usize) -> String {
        let n = SYLLABLES.len();
        let mut id = token;
        let mut out = String::new();
        loop {
            out.push_str(SYLLABLES[id % n]);
            id /= n;
            if id == 0 {
                break;
            }
        }
        out
    }

    fn render_prompt(&self, request: &GenerationRequest) -> Vec<usize> {
        let mut tokens = Vec::new();
        let push_text = |tokens: &mut Vec<usize>, marker: &str, text: &str| {
            tokens.push(self.token_for_word(marker));
            for word in text.split_whitespace() {
                tokens.push(self.token_for_word(word));
            }
        };
        if let Some(sys) = &request.system_prompt {
            push_text(&mut tokens, "<|system|>", sys);
        }
        for msg in &request.messages {
            let marker = match msg.role {
                Role::System => "<|system|>",
                Role::User => "<|user|>",
                Role::Assistant => "<|assistant|>",
            };
            push_text(&mut tokens, marker, &msg.text);
        }
        tokens.push(self.token_for_word("<|assistant|>"));
        tokens
    }

    fn ensure_open(&self) -> Result<()> {
        if self.closed {
            return Err(Error::ModelUnavailable("handle closed".into()));
        }
        Ok(())
    }

    /// Core forward + sampling loop shared by every generation entry point.
    fn run(
        &self,
        request: &GenerationRequest,
        injections: &[(usize, Vec<f32>)],
        capture_layer: Option<usize>,
    ) -> Result<(Generation, Option<ActivationTrace>)> {
        self.ensure_open()?;
        request.validate()?;
        if let Some(layer) = capture_layer {
            if layer >= self.config.num_layers {
                return Err(Error::LayerOutOfRange {
                    layer,
                    num_layers: self.config.num_layers,
                });
            }
        }

        let prompt = self.render_prompt(request);
        let total = prompt.len() + request.sampling.max_new_tokens;
        if total > self.config.max_positions {
            return Err(Error::ContextOverflow {
                needed: total,
                max: self.config.max_positions,
            });
        }

        let d = self.config.hidden_dim;
        let mut state = LayerState::new(self.config.num_layers, d);
        let mut rng = ChaCha8Rng::seed_from_u64(request.seed);
        let mut captured: Vec<Vec<f32>> = Vec::new();
        let mut last_hook: Vec<f32> = vec![0.0; d];

        // Prompt pass.
        let mut logits = vec![0.0f64; self.config.vocab_size];
        for (pos, &tok) in prompt.iter().enumerate() {
            let inject_here = matches!(self.config.inject_positions, InjectPositions::All);
            let h = self.feed(
                tok,
                pos,
                &mut state,
                if inject_here { injections } else { &[] },
                capture_layer,
                &mut last_hook,
            );
            if capture_layer.is_some()
                && self.config.capture_positions == PositionKind::AllPositions
                && pos + 1 < prompt.len()
            {
                captured.push(last_hook.clone());
            }
            if pos + 1 == prompt.len() {
                logits = self.unembed_logits(&h);
            }
        }

        // Decode steps.
        let mut generated: Vec<usize> = Vec::with_capacity(request.sampling.max_new_tokens);
        for step in 0..request.sampling.max_new_tokens {
            if capture_layer.is_some() {
                // `last_hook` holds the hook value at the position whose
                // logits produce this token.
                captured.push(last_hook.clone());
            }
            let tok = sample(&logits, &request.sampling, &mut rng);
            generated.push(tok);
            if step + 1 < request.sampling.max_new_tokens {
                let pos = prompt.len() + step;
                let h = self.feed(tok, pos, &mut state, injections, capture_layer, &mut last_hook);
                logits = self.unembed_logits(&h);
            }
        }

        let text = generated
            .iter()
            .map(|&t| self.word_for_token(t))
            .collect::<Vec<_>>()
            .join(" ");
        let generation = Generation {
            text,
            token_count: generated.len(),
        };
        let trace = capture_layer.map(|layer| ActivationTrace {
            layer,
            positions: captured,
            position_kind: self.config.capture_positions,
        });
        Ok((generation, trace))
    }

    /// Feed one token at `pos`; returns the final-hook hidden state and
    /// stores the capture-hook value in `last_hook`.
    fn feed(
        &self,
        token: usize,
        pos: usize,
        state: &mut LayerState,
        injections: &[(usize, Vec<f32>)],
        capture_layer: Option<usize>,
        last_hook: &mut Vec<f32>,
    ) -> Vec<f32> {
        let d = self.config.hidden_dim;
        let mut h: Vec<f32> = self.embed[token * d..(token + 1) * d].to_vec();
        for (i, value) in h.iter_mut().enumerate() {
            *value += positional(pos, i, d);
        }
        for layer in 0..self.config.num_layers {
            state.advance(layer, &h);
            let ctx = state.context(layer);
            let self_w = &self.self_w[layer];
            let ctx_w = &self.ctx_w[layer];
            let mut update = vec![0.0f32; d];
            for (i, u) in update.iter_mut().enumerate() {
                let mut acc = 0.0f64;
                let row = i * d;
                for ((&w_self, &w_ctx), (&hv, &cv)) in self_w[row..row + d]
                    .iter()
                    .zip(&ctx_w[row..row + d])
                    .zip(h.iter().zip(ctx.iter()))
                {
                    acc += f64::from(w_self) * f64::from(hv);
                    acc += f64::from(w_ctx) * cv;
                }
                *u = acc.tanh() as f32;
            }
            for (hv, uv) in h.iter_mut().zip(update.iter()) {
                *hv += uv;
            }
            // Hook `layer`: injection first, capture reads the injected value.
            if let Some((_, vector)) = injections.iter().find(|(l, _)| *l == layer) {
                for (hv, iv) in h.iter_mut().zip(vector.iter()) {
                    *hv += iv;
                }
            }
            if capture_layer == Some(layer) {
                last_hook.clear();
                last_hook.extend_from_slice(&h);
            }
        }
        h
    }

    fn unembed_logits(&self, h: &[f32]) -> Vec<f64> {
        let d = self.config.hidden_dim;
        (0..self.config.vocab_size)
            .map(|t| {
                self.unembed[t * d..(t + 1) * d]
                    .iter()
                    .zip(h.iter())
                    .map(|(&w, &hv)| f64::from(w) * f64::from(hv))
                    .sum()
            })
            .collect()
    }

    /// Logits for the token that would follow the prompt, under `spec`.
    ///
    /// No sampling happens; this is the inspection window used by analytic
    /// steering checks.
    pub fn next_token_logits(
        &self,
        request: &GenerationRequest,
        spec: &SteeringSpec,
    ) -> Result<Vec<f64>> {
        self.ensure_open()?;
        request.validate()?;
        let injections = spec.canonicalize(&self.descriptor())?;
        let prompt = self.render_prompt(request);
        if prompt.len() >= self.config.max_positions {
            return Err(Error::ContextOverflow {
                needed: prompt.len(),
                max: self.config.max_positions,
            });
        }
        let mut state = LayerState::new(self.config.num_layers, self.config.hidden_dim);
        let mut last_hook = vec![0.0; self.config.hidden_dim];
        let mut h = Vec::new();
        for (pos, &tok) in prompt.iter().enumerate() {
            h = self.feed(tok, pos, &mut state, &injections, None, &mut last_hook);
        }
        Ok(self.unembed_logits(&h))
    }

    fn descriptor(&self) -> ModelDescriptor {
        ModelDescriptor {
            model_id: format!(
                "toy-causal-d{}-l{}-v{}-s{}",
                self.config.hidden_dim,
                self.config.num_layers,
                self.config.vocab_size,
                self.config.param_seed
            ),
            hidden_dim: self.config.hidden_dim,
            num_layers: self.config.num_layers,
            tokenizer_id: format!("toy-hash-v{}", self.config.vocab_size),
        }
    }
}

impl ModelGateway for ToyCausalLm {
    fn describe(&self) -> Result<ModelDescriptor> {
        self.ensure_open()?;
        Ok(self.descriptor())
    }

    fn generate(&mut self, request: &GenerationRequest) -> Result<Generation> {
        let (generation, _) = self.run(request, &[], None)?;
        Ok(generation)
    }

    fn generate_with_capture(
        &mut self,
        request: &GenerationRequest,
        layer: usize,
    ) -> Result<(Generation, ActivationTrace)> {
        let (generation, trace) = self.run(request, &[], Some(layer))?;
        Ok((generation, trace.expect("capture layer was requested")))
    }

    fn generate_with_steering(
        &mut self,
        request: &GenerationRequest,
        spec: &SteeringSpec,
    ) -> Result<Generation> {
        self.ensure_open()?;
        let injections = spec.canonicalize(&self.descriptor())?;
        let (generation, _) = self.run(request, &injections, None)?;
        Ok(generation)
    }
}

/// Per-layer causal EMA state for one forward pass.
struct LayerState {
    running: Vec<Vec<f64>>,
    norm: Vec<f64>,
}

impl LayerState {
    fn new(num_layers: usize, dim: usize) -> Self {
        LayerState {
            running: vec![vec![0.0; dim]; num_layers],
            norm: vec![0.0; num_layers],
        }
    }

    fn advance(&mut self, layer: usize, h: &[f32]) {
        let r = &mut self.running[layer];
        for (rv, hv) in r.iter_mut().zip(h.iter()) {
            *rv = CONTEXT_DECAY * *rv + f64::from(*hv);
        }
        self.norm[layer] = CONTEXT_DECAY * self.norm[layer] + 1.0;
    }

    fn context(&self, layer: usize) -> Vec<f64> {
        let n = self.norm[layer];
        self.running[layer].iter().map(|r| r / n).collect()
    }
}

fn positional(pos: usize, i: usize, dim: usize) -> f32 {
    let angle = pos as f64 / 10_000f64.powf((2 * (i / 2)) as f64 / dim as f64);
    let v = if i.is_multiple_of(2) {
        angle.sin()
    } else {
        angle.cos()
    };
    (0.1 * v) as f32
}

fn sample(logits: &[f64], sampling: &super::SamplingParams, rng: &mut ChaCha8Rng) -> usize {
    if sampling.temperature == 0.0 {
        let mut best = 0usize;
        for (i, &l) in logits.iter().enumerate() {
            if l > logits[best] {
                best = i;
            }
        }
        return best;
    }
    let temp = f64::from(sampling.temperature);
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<(usize, f64)> = logits
        .iter()
        .enumerate()
        .map(|(i, &l)| (i, ((l - max) / temp).exp()))
        .collect();
    let total: f64 = probs.iter().map(|(_, p)| p).sum();
    for (_, p) in &mut probs {
        *p /= total;
    }
    // Highest probability first; ties broken by token id for determinism.
    probs.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let top_p = f64::from(sampling.top_p);
    let mut nucleus: Vec<(usize, f64)> = Vec::new();
    let mut acc = 0.0;
    for (i, p) in probs {
        nucleus.push((i, p));
        acc += p;
        if acc >= top_p {
            break;
        }
    }
    let mass: f64 = nucleus.iter().map(|(_, p)| p).sum();
    let u: f64 = rng.gen::<f64>() * mass;
    let mut cum = 0.0;
    for (i, p) in &nucleus {
        cum += p;
        if u < cum {
            return *i;
        }
    }
    nucleus.last().map(|(i, _)| *i).unwrap_or(0)
}
