//! Randomness plumbing. Protocol code draws field elements through
//! [`Randomness`]; the simulator hands out one independent stream per
//! (actor, phase) pair so that adversarial behaviour cannot shift honest
//! randomness, and the audit replaces all streams with an enumerated tape.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

use crate::gf::{FMatrix, Field};

pub trait Randomness {
    fn elem(&mut self, field: Field) -> u64;

    fn matrix(&mut self, field: Field, rows: usize, cols: usize) -> FMatrix {
        let data = (0..rows * cols).map(|_| self.elem(field)).collect();
        FMatrix::new(field, rows, cols, data).expect("sized data")
    }
}

impl<R: RngCore> Randomness for R {
    fn elem(&mut self, field: Field) -> u64 {
        self.random_range(0..field.modulus())
    }
}

/// Who is drawing randomness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Actor {
    Source(usize),
    Worker(usize),
    Adversary,
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Actor::Source(g) => write!(f, "s{g}"),
            Actor::Worker(n) => write!(f, "w{n}"),
            Actor::Adversary => write!(f, "adv"),
        }
    }
}

pub trait Coins: Send {
    fn draw(&mut self, actor: Actor, stream: &str, field: Field) -> u64;
}

/// Seeds a ChaCha stream from SHA-256 of the run seed and a label.
pub fn derive_rng(seed: u64, label: &str) -> ChaCha12Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    let digest: [u8; 32] = h.finalize().into();
    ChaCha12Rng::from_seed(digest)
}

/// One ChaCha stream per (actor, stream label), derived from the run seed.
pub struct SeededCoins {
    seed: u64,
    streams: HashMap<(Actor, String), ChaCha12Rng>,
}

impl SeededCoins {
    pub fn new(seed: u64) -> Self {
        SeededCoins {
            seed,
            streams: HashMap::new(),
        }
    }
}

impl Coins for SeededCoins {
    fn draw(&mut self, actor: Actor, stream: &str, field: Field) -> u64 {
        let seed = self.seed;
        let rng = self
            .streams
            .entry((actor, stream.to_string()))
            .or_insert_with(|| derive_rng(seed, &format!("{actor}/{stream}")));
        rng.elem(field)
    }
}

/// Replays a fixed tape of field elements in draw order. Actors in `fixed`
/// always draw zero and do not consume the tape; past the end of the tape
/// every draw is zero and is counted in `overrun`.
pub struct TapeCoins {
    tape: Vec<u64>,
    pos: usize,
    fixed: BTreeSet<Actor>,
    pub overrun: usize,
    drawn: Option<Arc<AtomicUsize>>,
}

impl TapeCoins {
    pub fn new(tape: Vec<u64>, fixed: BTreeSet<Actor>) -> Self {
        TapeCoins {
            tape,
            pos: 0,
            fixed,
            overrun: 0,
            drawn: None,
        }
    }

    /// Like [`TapeCoins::new`], also returning a handle that counts the
    /// non-fixed draws after the coins have been moved into a network.
    pub fn counted(tape: Vec<u64>, fixed: BTreeSet<Actor>) -> (Self, Arc<AtomicUsize>) {
        let drawn = Arc::new(AtomicUsize::new(0));
        let mut c = TapeCoins::new(tape, fixed);
        c.drawn = Some(drawn.clone());
        (c, drawn)
    }

    pub fn consumed(&self) -> usize {
        self.pos + self.overrun
    }
}

impl Coins for TapeCoins {
    fn draw(&mut self, actor: Actor, _stream: &str, field: Field) -> u64 {
        if self.fixed.contains(&actor) {
            return 0;
        }
        if let Some(d) = &self.drawn {
            d.fetch_add(1, Ordering::Relaxed);
        }
        match self.tape.get(self.pos) {
            Some(&v) => {
                self.pos += 1;
                field.elem(v)
            }
            None => {
                self.overrun += 1;
                0
            }
        }
    }
}

/// A [`Randomness`] view onto one stream of a [`Coins`] source.
pub struct Stream<'a> {
    coins: &'a mut dyn Coins,
    actor: Actor,
    label: &'a str,
}

impl<'a> Stream<'a> {
    pub fn new(coins: &'a mut dyn Coins, actor: Actor, label: &'a str) -> Self {
        Stream {
            coins,
            actor,
            label,
        }
    }
}

impl Randomness for Stream<'_> {
    fn elem(&mut self, field: Field) -> u64 {
        self.coins.draw(self.actor, self.label, field)
    }
}
