//! Seeded sampling of valid ledger traces.

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ledger_trace::{InitialConditions, LedgerLabel, LedgerTrace, SlotRange};
use super::TracePrefix;
use crate::exec::Exec;
use crate::ledger::{
    step_ledger_with, AdditionalChecks, Output, Slot, TokenId, Tx, TxInput, UtxoSet,
    ValidityInterval, Value,
};

/// Proposes the next step of a trace. Proposals are re-validated by the caller.
pub trait TxGenerator: Sync {
    fn propose(&self, rng: &mut ChaCha8Rng, slot: Slot, utxo: &UtxoSet) -> Option<(Slot, Tx)>;
}

/// Spends random outputs into random new outputs, conserving every token except an
/// optional unique token that it may mint, move or burn.
#[derive(Clone, Debug)]
pub struct RandomSpender {
    pub max_inputs: usize,
    pub max_outputs: usize,
    pub addresses: u8,
    pub max_slot_step: u64,
    pub interval_slack: u64,
    pub unique_token: Option<TokenId>,
    pub mint_probability: f64,
    pub burn_probability: f64,
}

impl Default for RandomSpender {
    fn default() -> Self {
        RandomSpender {
            max_inputs: 3,
            max_outputs: 3,
            addresses: 4,
            max_slot_step: 3,
            interval_slack: 4,
            unique_token: None,
            mint_probability: 0.3,
            burn_probability: 0.2,
        }
    }
}

impl RandomSpender {
    pub fn with_unique_token(token: TokenId) -> Self {
        RandomSpender {
            unique_token: Some(token),
            ..Default::default()
        }
    }
}

/// Splits `qty` into `parts` random non-negative pieces.
fn split(rng: &mut ChaCha8Rng, qty: u64, parts: usize) -> Vec<u64> {
    let mut cuts: Vec<u64> = (1..parts).map(|_| rng.gen_range(0..=qty)).collect();
    cuts.push(0);
    cuts.push(qty);
    cuts.sort_unstable();
    cuts.windows(2).map(|w| w[1] - w[0]).collect()
}

impl TxGenerator for RandomSpender {
    fn propose(&self, rng: &mut ChaCha8Rng, slot: Slot, utxo: &UtxoSet) -> Option<(Slot, Tx)> {
        if utxo.is_empty() {
            return None;
        }
        let entries: Vec<(_, _)> = utxo.iter().collect();
        let k = rng.gen_range(1..=self.max_inputs.max(1).min(entries.len()));
        let mut picked: Vec<usize> = sample(rng, entries.len(), k).into_vec();
        picked.sort_unstable();
        let inputs: Vec<TxInput> = picked
            .iter()
            .map(|&i| TxInput::new(*entries[i].0, entries[i].1.clone()))
            .collect();

        let m = rng.gen_range(1..=self.max_outputs.max(1));
        let mut values = vec![Value::new(); m];
        let mut totals = Value::new();
        for input in &inputs {
            for (tok, q) in input.output.value.iter() {
                let prev = totals.quantity(tok);
                totals.insert(tok.clone(), prev + q);
            }
        }
        for (tok, q) in totals.iter() {
            if Some(tok) == self.unique_token.as_ref() {
                continue;
            }
            for (v, part) in values.iter_mut().zip(split(rng, q, m)) {
                v.insert(tok.clone(), part);
            }
        }
        if let Some(tok) = &self.unique_token {
            let held = totals.quantity(tok);
            let place = if held > 0 {
                !rng.gen_bool(self.burn_probability)
            } else {
                utxo.token_total(tok) == 0 && rng.gen_bool(self.mint_probability)
            };
            if place {
                let j = rng.gen_range(0..m);
                values[j].insert(tok.clone(), 1);
            }
        }
        let outputs = values
            .into_iter()
            .map(|v| {
                let addr = vec![b'a' + rng.gen_range(0..self.addresses.max(1))];
                let datum = rng.gen::<[u8; 2]>().to_vec();
                Output::new(addr, v, datum)
            })
            .collect();

        let q = Slot(slot.0 + rng.gen_range(0..=self.max_slot_step));
        let start = q.0.saturating_sub(rng.gen_range(0..=self.interval_slack));
        let end = q.0 + 1 + rng.gen_range(0..=self.interval_slack);
        let iv = ValidityInterval::new(Slot(start), Slot(end)).ok()?;
        let nonce = rng.gen::<[u8; 8]>().to_vec();
        Tx::new(inputs, outputs, iv, nonce).ok().map(|t| (q, t))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratedTrace {
    pub trace: LedgerTrace,
    /// The generator stopped before reaching the requested depth.
    pub exhausted: bool,
}

const ATTEMPTS: usize = 16;

/// Extends `trace` until it has `depth` states or the generator runs dry.
fn grow(
    rng: &mut ChaCha8Rng,
    mut trace: LedgerTrace,
    start_slot: Slot,
    first_slots: SlotRange,
    gen: &dyn TxGenerator,
    hook: &dyn AdditionalChecks,
    depth: usize,
) -> GeneratedTrace {
    let mut slot = trace.labels().last().map_or(start_slot, |l| l.slot);
    while trace.len() < depth {
        let u = trace.last().clone();
        let step = (0..ATTEMPTS).find_map(|_| {
            let (q, t) = gen.propose(rng, slot, &u)?;
            let in_order = if trace.len() == 1 {
                first_slots.contains(q)
            } else {
                q >= slot
            };
            if !in_order {
                return None;
            }
            step_ledger_with(hook, q, &u, &t).ok()
        });
        let Some(step) = step else {
            return GeneratedTrace {
                trace,
                exhausted: true,
            };
        };
        let (q, _, tx, to) = step.into_parts();
        slot = q;
        trace.push(Some(LedgerLabel { slot: q, tx }), to);
    }
    GeneratedTrace {
        trace,
        exhausted: false,
    }
}

fn trace_seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| master.next_u64()).collect()
}

/// Samples `count` valid traces of `depth` states starting from the genesis UTxO.
///
/// Each trace draws from its own stream derived from `seed`, so the output does not
/// depend on the execution mode.
pub fn generate_valid_traces(
    init: &InitialConditions,
    gen: &dyn TxGenerator,
    hook: &dyn AdditionalChecks,
    depth: usize,
    count: usize,
    seed: u64,
    exec: Exec,
) -> Vec<GeneratedTrace> {
    let depth = depth.max(1);
    let u0 = init
        .genesis_utxo()
        .expect("genesis transactions have distinct hashes");
    let seeds = trace_seeds(seed, count);
    exec.map(&seeds, |&s| {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let q0 = Slot(rng.gen_range(init.slots.start.0..init.slots.end.0));
        grow(
            &mut rng,
            TracePrefix::single(u0.clone()),
            q0,
            init.slots,
            gen,
            hook,
            depth,
        )
    })
}

/// Keeps the first `keep` states of `base` and regrows it to `depth` states.
pub fn extend_trace(
    init: &InitialConditions,
    base: &LedgerTrace,
    keep: usize,
    gen: &dyn TxGenerator,
    hook: &dyn AdditionalChecks,
    depth: usize,
    seed: u64,
) -> GeneratedTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let head = base.head(keep);
    let q0 = if head.len() > 1 {
        head.labels()[0].slot
    } else {
        Slot(rng.gen_range(init.slots.start.0..init.slots.end.0))
    };
    grow(&mut rng, head, q0, init.slots, gen, hook, depth)
}

/// A genesis transaction with `n` outputs of a base token, spread over a few
/// addresses.
pub fn random_genesis(rng: &mut ChaCha8Rng, n: usize, tag: u8) -> Tx {
    let outs = (0..n)
        .map(|_| {
            let qty = rng.gen_range(1..=1_000);
            Output::new(
                vec![b'a' + rng.gen_range(0..4)],
                Value::single(TokenId::new("ada"), qty),
                Vec::new(),
            )
        })
        .collect();
    Tx::new(Vec::new(), outs, ValidityInterval::always(), vec![tag])
        .expect("inputless transactions are always well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::AcceptAll;
    use crate::trace::{validate_lifted, Validity};

    fn init(seed: u64) -> InitialConditions {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        InitialConditions::new(
            vec![
                random_genesis(&mut rng, 4, 0),
                random_genesis(&mut rng, 2, 1),
            ],
            SlotRange::new(Slot(0), Slot(5)).unwrap(),
        )
    }

    #[test]
    fn count_zero() {
        let i = init(1);
        let g = RandomSpender::default();
        assert!(generate_valid_traces(&i, &g, &AcceptAll, 5, 0, 9, Exec::Parallel).is_empty());
    }

    #[test]
    fn generated_traces_validate() {
        let i = init(2);
        let g = RandomSpender::default();
        let ts = generate_valid_traces(&i, &g, &AcceptAll, 8, 30, 7, Exec::Parallel);
        assert_eq!(ts.len(), 30);
        for t in &ts {
            assert_eq!(
                validate_lifted(&i, &AcceptAll, &t.trace),
                Ok(Validity::Valid)
            );
            assert!(t.exhausted || t.trace.len() == 8);
        }
    }

    #[test]
    fn deterministic_across_modes() {
        let i = init(3);
        let g = RandomSpender::with_unique_token(TokenId::new("NFT"));
        let a = generate_valid_traces(&i, &g, &AcceptAll, 6, 10, 42, Exec::Sequential);
        let b = generate_valid_traces(&i, &g, &AcceptAll, 6, 10, 42, Exec::Parallel);
        assert_eq!(a, b);
        let c = generate_valid_traces(&i, &g, &AcceptAll, 6, 10, 43, Exec::Parallel);
        assert_ne!(a, c);
    }

    #[test]
    fn extension_shares_head() {
        let i = init(4);
        let g = RandomSpender::default();
        let base = &generate_valid_traces(&i, &g, &AcceptAll, 6, 1, 1, Exec::Sequential)[0];
        let ext = extend_trace(&i, &base.trace, 3, &g, &AcceptAll, 6, 99);
        assert_eq!(&ext.trace.states()[..3], &base.trace.states()[..3]);
        assert_eq!(
            validate_lifted(&i, &AcceptAll, &ext.trace),
            Ok(Validity::Valid)
        );
    }

    #[test]
    fn split_conserves() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for parts in 1..5 {
            assert_eq!(split(&mut rng, 77, parts).iter().sum::<u64>(), 77);
        }
    }
}
