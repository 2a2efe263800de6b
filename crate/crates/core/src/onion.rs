//! Onion routers, circuits, layered encryption and the client-to-exit
//! transfer pipeline shared by oTor, mTor and cTor.
//!
//! Layer encryption is a keyed XOR stream. The keystream for one layer is
//! ChaCha20 seeded with SHA-256 over (router key, circuit id, cell sequence
//! number, layer depth). Including the depth makes peeling order-sensitive:
//! a layer only comes off when the right key is used at the right depth.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::codec::{self, CodedCell, GeneratorMatrix};
use crate::error::{Error, Result};
use crate::rng::{self, SimRng};
use crate::variant::TorConfig;

/// Layers on a freshly wrapped cell: entry, middle, exit.
pub const HOPS: u8 = 3;

const LAYER_KEY_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RouterId(pub u32);

impl fmt::Display for RouterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OR{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RouterKind {
    Bridge,
    Middle,
    Exit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OnionRouter {
    pub id: RouterId,
    pub kind: RouterKind,
    pub layer_key: Vec<u8>,
}

/// Immutable set of routers for one run. Bridge ids come first, then
/// middles, then exits.
#[derive(Debug, Clone)]
pub struct RouterRegistry {
    bridges: Vec<OnionRouter>,
    middles: Vec<OnionRouter>,
    exits: Vec<OnionRouter>,
}

impl RouterRegistry {
    /// Registry with `bridges` bridges (ids `0..bridges`) and the given
    /// number of middle and exit relays, keys drawn from `seed`.
    pub fn generate(bridges: usize, middles: usize, exits: usize, seed: u64) -> Self {
        let mut rng = rng::rng_from_seed(seed);
        let mut next_id = 0u32;
        let mut make = |count: usize, kind: RouterKind| -> Vec<OnionRouter> {
            (0..count)
                .map(|_| {
                    let mut layer_key = vec![0u8; LAYER_KEY_LEN];
                    rng.fill_bytes(&mut layer_key);
                    let id = RouterId(next_id);
                    next_id += 1;
                    OnionRouter { id, kind, layer_key }
                })
                .collect()
        };
        let bridges = make(bridges, RouterKind::Bridge);
        let middles = make(middles, RouterKind::Middle);
        let exits = make(exits, RouterKind::Exit);
        RouterRegistry {
            bridges,
            middles,
            exits,
        }
    }

    pub fn from_routers(routers: Vec<OnionRouter>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut reg = RouterRegistry {
            bridges: Vec::new(),
            middles: Vec::new(),
            exits: Vec::new(),
        };
        for router in routers {
            if !seen.insert(router.id) {
                return Err(Error::Configuration(format!("duplicate router id {}", router.id)));
            }
            match router.kind {
                RouterKind::Bridge => reg.bridges.push(router),
                RouterKind::Middle => reg.middles.push(router),
                RouterKind::Exit => reg.exits.push(router),
            }
        }
        Ok(reg)
    }

    pub fn bridges(&self) -> &[OnionRouter] {
        &self.bridges
    }

    pub fn middles(&self) -> &[OnionRouter] {
        &self.middles
    }

    pub fn exits(&self) -> &[OnionRouter] {
        &self.exits
    }

    pub fn bridge(&self, id: RouterId) -> Option<&OnionRouter> {
        self.bridges.iter().find(|b| b.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    pub id: u32,
    pub entry: OnionRouter,
    pub middle: OnionRouter,
    pub exit: OnionRouter,
    pub blocked: bool,
}

/// `n` circuits with distinct entries and middles and one shared exit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitSet {
    circuits: Vec<Circuit>,
}

impl CircuitSet {
    pub fn new(circuits: Vec<Circuit>) -> Result<Self> {
        let set = CircuitSet { circuits };
        set.check_disjoint()?;
        Ok(set)
    }

    fn check_disjoint(&self) -> Result<()> {
        let Some(first) = self.circuits.first() else {
            return Err(Error::Configuration("a circuit set needs at least one circuit".into()));
        };
        let exit = first.exit.id;
        let mut seen = HashSet::new();
        for c in &self.circuits {
            if c.exit.id != exit {
                return Err(Error::Configuration("circuits must share one exit".into()));
            }
            if !seen.insert(c.entry.id) || !seen.insert(c.middle.id) {
                return Err(Error::Configuration(
                    "entries and middles must be pairwise distinct".into(),
                ));
            }
        }
        if seen.contains(&exit) {
            return Err(Error::Configuration("exit reused as entry or middle".into()));
        }
        Ok(())
    }

    pub fn circuits(&self) -> &[Circuit] {
        &self.circuits
    }

    pub fn len(&self) -> usize {
        self.circuits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.circuits.is_empty()
    }

    /// All distinct routers used by the set (2n + 1).
    pub fn distinct_routers(&self) -> usize {
        let mut ids: HashSet<RouterId> = HashSet::new();
        for c in &self.circuits {
            ids.extend([c.entry.id, c.middle.id, c.exit.id]);
        }
        ids.len()
    }

    /// Marks each circuit blocked iff `is_blocked(entry)` holds.
    pub fn mark_blocked<F: Fn(RouterId) -> bool>(&mut self, is_blocked: F) {
        for c in &mut self.circuits {
            c.blocked = is_blocked(c.entry.id);
        }
    }

    pub fn block_indices(&mut self, indices: &[usize]) -> Result<()> {
        for &i in indices {
            let n = self.circuits.len();
            let c = self
                .circuits
                .get_mut(i)
                .ok_or_else(|| Error::Configuration(format!("circuit index {i} out of range 0..{n}")))?;
            c.blocked = true;
        }
        Ok(())
    }

    pub fn blocked_count(&self) -> usize {
        self.circuits.iter().filter(|c| c.blocked).count()
    }
}

/// Builds one circuit per chosen bridge. Middles and the exit are drawn
/// uniformly without replacement from the registry's non-bridge relays.
pub fn build_circuits(
    bridge_choices: &[RouterId],
    registry: &RouterRegistry,
    rng: &mut SimRng,
) -> Result<CircuitSet> {
    let n = bridge_choices.len();
    if n == 0 {
        return Err(Error::Configuration("need at least one bridge".into()));
    }
    if registry.middles.len() < n {
        return Err(Error::Configuration(format!(
            "{} middle relays available, {n} needed",
            registry.middles.len()
        )));
    }
    if registry.exits.is_empty() {
        return Err(Error::Configuration("no exit relays available".into()));
    }
    let entries = bridge_choices
        .iter()
        .map(|id| {
            registry
                .bridge(*id)
                .cloned()
                .ok_or_else(|| Error::Configuration(format!("unknown bridge {id}")))
        })
        .collect::<Result<Vec<_>>>()?;

    let middles = rng::sample_without_replacement(rng, &registry.middles, n);
    let exit = rng::sample_without_replacement(rng, &registry.exits, 1).remove(0);
    let circuits = entries
        .into_iter()
        .zip(middles)
        .enumerate()
        .map(|(i, (entry, middle))| Circuit {
            id: i as u32,
            entry,
            middle,
            exit: exit.clone(),
            blocked: false,
        })
        .collect();
    CircuitSet::new(circuits)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayeredCell {
    pub bytes: Vec<u8>,
    pub layers_remaining: u8,
    pub circuit_id: u32,
    pub sequence: u64,
}

fn apply_layer(bytes: &mut [u8], key: &[u8], circuit_id: u32, sequence: u64, depth: u8) {
    let mut h = Sha256::new();
    h.update(b"ctor-layer");
    h.update((key.len() as u32).to_be_bytes());
    h.update(key);
    h.update(circuit_id.to_be_bytes());
    h.update(sequence.to_be_bytes());
    h.update([depth]);
    let seed: [u8; 32] = h.finalize().into();
    let mut stream = vec![0u8; bytes.len()];
    ChaCha20Rng::from_seed(seed).fill_bytes(&mut stream);
    bytes.iter_mut().zip(stream).for_each(|(b, k)| *b ^= k);
}

/// Adds the exit, middle and entry layers, innermost first.
pub fn wrap_layers(cell_bytes: &[u8], circuit: &Circuit, sequence: u64) -> Result<LayeredCell> {
    let hops = [&circuit.exit, &circuit.middle, &circuit.entry];
    if let Some(r) = hops.iter().find(|r| r.layer_key.is_empty()) {
        return Err(Error::Configuration(format!("router {} has an empty layer key", r.id)));
    }
    let mut bytes = cell_bytes.to_vec();
    for (depth, router) in (1..=HOPS).zip(hops) {
        apply_layer(&mut bytes, &router.layer_key, circuit.id, sequence, depth);
    }
    Ok(LayeredCell {
        bytes,
        layers_remaining: HOPS,
        circuit_id: circuit.id,
        sequence,
    })
}

/// Removes the outermost layer with `router`'s key.
pub fn peel_layer(mut cell: LayeredCell, router: &OnionRouter) -> Result<LayeredCell> {
    if cell.layers_remaining == 0 {
        return Err(Error::Protocol("no layers left to peel".into()));
    }
    if router.layer_key.is_empty() {
        return Err(Error::Configuration(format!("router {} has an empty layer key", router.id)));
    }
    apply_layer(
        &mut cell.bytes,
        &router.layer_key,
        cell.circuit_id,
        cell.sequence,
        cell.layers_remaining,
    );
    cell.layers_remaining -= 1;
    Ok(cell)
}

/// Sends every coded cell over the circuit matching its subflow index and
/// returns what the exit receives, fully peeled, in arrival order. Blocked
/// circuits drop their whole sub-flow silently.
pub fn transmit(circuits: &CircuitSet, coded: &[Vec<CodedCell>], k: usize) -> Result<Vec<CodedCell>> {
    let mut delivered = Vec::new();
    for generation in coded {
        for cell in generation {
            let circuit = circuits
                .circuits
                .get(cell.subflow_index as usize)
                .ok_or_else(|| {
                    Error::Configuration(format!(
                        "subflow {} has no circuit ({} circuits)",
                        cell.subflow_index,
                        circuits.len()
                    ))
                })?;
            if circuit.blocked {
                continue;
            }
            let sequence = u64::from(cell.generation_id);
            let mut layered = wrap_layers(&cell.to_wire(), circuit, sequence)?;
            for hop in [&circuit.entry, &circuit.middle, &circuit.exit] {
                layered = peel_layer(layered, hop)?;
            }
            delivered.push(CodedCell::from_wire(&layered.bytes, k)?);
        }
    }
    Ok(delivered)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferReport {
    pub generations: usize,
    /// Cells reaching the exit, per generation id.
    pub delivered_per_generation: Vec<usize>,
    /// Recovered message, or why the transfer was interrupted.
    pub outcome: Result<Vec<u8>>,
}

impl TransferReport {
    pub fn success(&self) -> bool {
        self.outcome.is_ok()
    }
}

/// One message from client to exit over `circuits`, using the default MDS
/// generator for `config`.
pub fn run_transfer(config: &TorConfig, message: &[u8], circuits: &CircuitSet) -> Result<TransferReport> {
    config.validate()?;
    let matrix = GeneratorMatrix::build(config.params)?;
    run_transfer_with_matrix(config, &matrix, message, circuits)
}

pub fn run_transfer_with_matrix(
    config: &TorConfig,
    matrix: &GeneratorMatrix,
    message: &[u8],
    circuits: &CircuitSet,
) -> Result<TransferReport> {
    config.validate()?;
    let params = config.params;
    if matrix.params() != params {
        return Err(Error::Configuration(format!(
            "generator built for {}, config wants {}",
            matrix.params(),
            params
        )));
    }
    if circuits.len() != params.n {
        return Err(Error::Configuration(format!(
            "{} needs {} circuits, got {}",
            config,
            params.n,
            circuits.len()
        )));
    }

    let generations = codec::split_message(message, params.k)?;
    let coded = generations
        .iter()
        .map(|g| codec::encode_generation(g, matrix))
        .collect::<Result<Vec<_>>>()?;
    let received = transmit(circuits, &coded, params.k)?;

    let mut by_generation: BTreeMap<u32, Vec<CodedCell>> = BTreeMap::new();
    for cell in received {
        by_generation.entry(cell.generation_id).or_default().push(cell);
    }
    let delivered_per_generation = (0..generations.len() as u32)
        .map(|id| by_generation.get(&id).map_or(0, Vec::len))
        .collect();

    let decode_all = || -> Result<Vec<u8>> {
        let mut decoded = Vec::with_capacity(generations.len());
        for id in 0..generations.len() as u32 {
            let cells = by_generation.get(&id).map(Vec::as_slice).unwrap_or(&[]);
            if cells.is_empty() {
                return Err(Error::UnrecoverableGeneration {
                    generation_id: id,
                    rank: 0,
                    k: params.k,
                });
            }
            decoded.push(codec::decode_generation(cells, params)?);
        }
        let bytes = codec::reassemble_message(&decoded)?;
        if bytes != message {
            return Err(Error::Structural("recovered bytes differ from the message".into()));
        }
        Ok(bytes)
    };

    Ok(TransferReport {
        generations: generations.len(),
        delivered_per_generation,
        outcome: decode_all(),
    })
}
