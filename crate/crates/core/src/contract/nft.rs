//! A unique token: its total quantity on the ledger may never exceed one.

use serde::{Deserialize, Serialize};

use super::{ContractSpec, StructuredContract};
use crate::ledger::{AdditionalChecks, Slot, TokenId, Tx, UtxoSet};

pub const TOKEN: &str = "NFT";

pub fn token() -> TokenId {
    TokenId::new(TOKEN)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NftInput {
    Mint,
    Burn,
    Noop,
    /// A change in quantity other than -1, 0 or +1.
    Invalid(i128),
}

#[derive(Clone, Copy, Debug, Default)]
pub struct NftSpec;

impl ContractSpec for NftSpec {
    type State = u64;
    type Input = NftInput;

    fn step(&self, s: &u64, i: &NftInput) -> Option<u64> {
        match i {
            NftInput::Mint if *s < 1 => Some(s + 1),
            NftInput::Burn if *s >= 1 => Some(s - 1),
            NftInput::Noop => Some(*s),
            _ => None,
        }
    }

    fn is_initial(&self, s: &u64) -> bool {
        *s <= 1
    }
}

fn quantity_change(tx: &Tx, tok: &TokenId) -> i128 {
    let out: i128 = tx
        .outputs()
        .iter()
        .map(|o| o.value.quantity(tok) as i128)
        .sum();
    let inp: i128 = tx
        .inputs()
        .iter()
        .map(|i| i.output.value.quantity(tok) as i128)
        .sum();
    out - inp
}

pub fn classify(tx: &Tx) -> NftInput {
    match quantity_change(tx, &token()) {
        1 => NftInput::Mint,
        -1 => NftInput::Burn,
        0 => NftInput::Noop,
        d => NftInput::Invalid(d),
    }
}

/// Ledger-side minting policy: at most one unit minted or burnt per transaction,
/// and never more than one unit in circulation.
#[derive(Clone, Debug)]
pub struct MintingPolicy {
    pub token: TokenId,
}

impl Default for MintingPolicy {
    fn default() -> Self {
        MintingPolicy { token: token() }
    }
}

impl AdditionalChecks for MintingPolicy {
    fn check(&self, _: Slot, utxo: &UtxoSet, tx: &Tx) -> Result<(), String> {
        let d = quantity_change(tx, &self.token);
        if !(-1..=1).contains(&d) {
            return Err(format!("quantity change {d} out of range"));
        }
        if utxo.token_total(&self.token) as i128 + d > 1 {
            return Err("would exceed one unit in circulation".into());
        }
        Ok(())
    }
}

pub fn contract() -> StructuredContract<NftSpec> {
    let tok = token();
    StructuredContract::new(
        "nft",
        NftSpec,
        move |u: &UtxoSet| Some(u.token_total(&tok)),
        classify,
    )
    .with_hook(MintingPolicy::default())
}

/// Mutant: ignores outputs at index 0.
pub fn broken_pi() -> StructuredContract<NftSpec> {
    let tok = token();
    contract()
        .renamed("nft-broken-pi")
        .with_pi(move |u: &UtxoSet| {
            Some(
                u.iter()
                    .filter(|(k, _)| k.ix >= 1)
                    .map(|(_, o)| o.value.quantity(&tok))
                    .sum(),
            )
        })
}

/// Mutant: classifies every transaction as a no-op.
pub fn broken_kappa() -> StructuredContract<NftSpec> {
    contract()
        .renamed("nft-broken-kappa")
        .with_kappa(|_: &Tx| NftInput::Noop)
}
