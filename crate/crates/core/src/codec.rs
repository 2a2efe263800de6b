//! Generation-based systematic (n, k) erasure coding over GF(2^8).
//!
//! A message is framed with an 8-byte big-endian length, cut into 512-byte
//! cells and grouped into generations of `k` cells. Each generation is
//! encoded into `n = k + r` coded cells; any `k` of them with independent
//! coefficient vectors reconstruct the generation.
//!
//! The default generator is the identity stacked on a column-normalised
//! Cauchy block, so every k-row subset is invertible and a single parity
//! row is plain XOR parity.

use std::fmt;

use itertools::Itertools;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gf::{self, Gf256};

/// Bytes in one cell.
pub const CELL_SIZE: usize = 512;

/// Bytes of the big-endian length frame that precedes the message.
pub const LENGTH_PREFIX: usize = 8;

/// Largest `n`: coded positions must be distinct field elements and fit the
/// one-byte subflow index.
pub const MAX_CODED_CELLS: usize = 255;

/// Wire header size for a coded cell, excluding the coefficient vector.
pub const WIRE_HEADER: usize = 4 + 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CodeParams {
    pub n: usize,
    pub k: usize,
    pub r: usize,
}

impl CodeParams {
    pub fn new(k: usize, r: usize) -> Result<Self> {
        let params = CodeParams { n: k + r, k, r };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Parameter("k must be at least 1".into()));
        }
        if self.n != self.k + self.r {
            return Err(Error::Parameter(format!(
                "n = {} must equal k + r = {} + {}",
                self.n, self.k, self.r
            )));
        }
        if self.n > MAX_CODED_CELLS {
            return Err(Error::Parameter(format!(
                "n = {} exceeds the field bound {}",
                self.n, MAX_CODED_CELLS
            )));
        }
        Ok(())
    }

    /// Size in bytes of one coded cell on the simulation wire.
    pub fn wire_len(&self) -> usize {
        WIRE_HEADER + self.k + CELL_SIZE
    }
}

impl fmt::Display for CodeParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n={}, k={}, r={})", self.n, self.k, self.r)
    }
}

/// A fixed 512-byte transport unit.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Cell(Box<[u8; CELL_SIZE]>);

impl Cell {
    pub fn zeroed() -> Self {
        Cell(Box::new([0u8; CELL_SIZE]))
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self> {
        let arr: [u8; CELL_SIZE] = bytes.try_into().map_err(|_| {
            Error::Structural(format!(
                "cell payload must be {CELL_SIZE} bytes, got {}",
                bytes.len()
            ))
        })?;
        Ok(Cell(Box::new(arr)))
    }

    pub fn as_bytes(&self) -> &[u8; CELL_SIZE] {
        &self.0
    }

    pub fn as_bytes_mut(&mut self) -> &mut [u8; CELL_SIZE] {
        &mut self.0
    }
}

impl fmt::Debug for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cell({:02x?}..)", &self.0[..8])
    }
}

/// `k` original cells encoded together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generation {
    pub generation_id: u32,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedCell {
    pub generation_id: u32,
    /// Coded position, which is also the circuit that carries the cell.
    pub subflow_index: u8,
    pub coefficients: Vec<Gf256>,
    pub payload: Cell,
}

impl CodedCell {
    /// `generation_id (4 BE) | subflow_index (1) | k coefficients | 512 payload`.
    pub fn to_wire(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(WIRE_HEADER + self.coefficients.len() + CELL_SIZE);
        out.extend_from_slice(&self.generation_id.to_be_bytes());
        out.push(self.subflow_index);
        out.extend(self.coefficients.iter().map(|c| c.value()));
        out.extend_from_slice(self.payload.as_bytes());
        out
    }

    pub fn from_wire(bytes: &[u8], k: usize) -> Result<Self> {
        let expected = WIRE_HEADER + k + CELL_SIZE;
        if bytes.len() != expected {
            return Err(Error::Structural(format!(
                "coded cell wire length {} != {expected} for k = {k}",
                bytes.len()
            )));
        }
        let generation_id = u32::from_be_bytes(bytes[0..4].try_into().unwrap());
        let subflow_index = bytes[4];
        let coefficients = bytes[WIRE_HEADER..WIRE_HEADER + k]
            .iter()
            .copied()
            .map(Gf256)
            .collect();
        let payload = Cell::from_slice(&bytes[WIRE_HEADER + k..])?;
        Ok(CodedCell {
            generation_id,
            subflow_index,
            coefficients,
            payload,
        })
    }
}

/// `n` coefficient rows of length `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorMatrix {
    params: CodeParams,
    rows: Vec<Vec<Gf256>>,
}

impl GeneratorMatrix {
    /// Deterministic systematic MDS generator for `params`.
    pub fn build(params: CodeParams) -> Result<Self> {
        params.validate()?;
        let CodeParams { k, r, .. } = params;
        let mut rows = identity(k);

        // Cauchy block C[i][j] = 1 / (x_i + y_j), x_i = k + i, y_j = j. The
        // points are distinct so every denominator is nonzero and every square
        // minor of C is nonsingular. Scaling columns keeps that property and
        // turns the first parity row into all ones.
        let cauchy = |i: usize, j: usize| {
            (Gf256((k + i) as u8) + Gf256(j as u8))
                .inv()
                .expect("Cauchy points are distinct")
        };
        for i in 0..r {
            let row = (0..k).map(|j| cauchy(i, j) / cauchy(0, j)).collect();
            rows.push(row);
        }
        Ok(GeneratorMatrix { params, rows })
    }

    /// Systematic generator with uniformly random nonzero parity
    /// coefficients. Not guaranteed MDS; see [`GeneratorMatrix::singular_subset_fraction`].
    pub fn random<R: Rng + ?Sized>(params: CodeParams, rng: &mut R) -> Result<Self> {
        params.validate()?;
        let mut rows = identity(params.k);
        for _ in 0..params.r {
            rows.push((0..params.k).map(|_| Gf256(rng.gen_range(1..=255))).collect());
        }
        Ok(GeneratorMatrix { params, rows })
    }

    pub fn from_rows(params: CodeParams, rows: Vec<Vec<Gf256>>) -> Result<Self> {
        params.validate()?;
        if rows.len() != params.n || rows.iter().any(|row| row.len() != params.k) {
            return Err(Error::Structural(format!(
                "generator must be {}x{}",
                params.n, params.k
            )));
        }
        Ok(GeneratorMatrix { params, rows })
    }

    pub fn params(&self) -> CodeParams {
        self.params
    }

    pub fn rows(&self) -> &[Vec<Gf256>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[Gf256] {
        &self.rows[i]
    }

    pub fn is_systematic(&self) -> bool {
        self.rows[..self.params.k] == identity(self.params.k)[..]
    }

    /// Fraction of k-row subsets whose submatrix is singular. Zero for an
    /// MDS generator.
    pub fn singular_subset_fraction(&self) -> f64 {
        let k = self.params.k;
        let (mut singular, mut total) = (0u64, 0u64);
        for subset in (0..self.params.n).combinations(k) {
            let sub: Vec<Vec<Gf256>> = subset.iter().map(|&i| self.rows[i].clone()).collect();
            total += 1;
            if rank(sub) < k {
                singular += 1;
            }
        }
        singular as f64 / total as f64
    }

    pub fn is_mds(&self) -> bool {
        self.singular_subset_fraction() == 0.0
    }
}

fn identity(k: usize) -> Vec<Vec<Gf256>> {
    (0..k)
        .map(|i| {
            (0..k)
                .map(|j| if i == j { Gf256::ONE } else { Gf256::ZERO })
                .collect()
        })
        .collect()
}

/// Rank of a matrix over GF(2^8).
pub fn rank(mut m: Vec<Vec<Gf256>>) -> usize {
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..m.len()).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        let inv = m[rank][col].inv().unwrap();
        for v in m[rank].iter_mut() {
            *v *= inv;
        }
        for i in 0..m.len() {
            if i != rank && !m[i][col].is_zero() {
                let f = m[i][col];
                let (src, dst) = if i < rank {
                    let (a, b) = m.split_at_mut(rank);
                    (&b[0], &mut a[i])
                } else {
                    let (a, b) = m.split_at_mut(i);
                    (&a[rank], &mut b[0])
                };
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += f * *s;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Encodes one generation into `n` coded cells; the first `k` are the
/// original cells verbatim.
pub fn encode_generation(generation: &Generation, matrix: &GeneratorMatrix) -> Result<Vec<CodedCell>> {
    let params = matrix.params();
    if generation.cells.len() != params.k {
        return Err(Error::Structural(format!(
            "generation {} has {} cells, expected k = {}",
            generation.generation_id,
            generation.cells.len(),
            params.k
        )));
    }
    let coded = matrix
        .rows()
        .iter()
        .enumerate()
        .map(|(index, row)| {
            let mut payload = Cell::zeroed();
            for (coef, cell) in row.iter().zip(&generation.cells) {
                gf::mul_add_slice(payload.as_bytes_mut(), cell.as_bytes(), *coef);
            }
            CodedCell {
                generation_id: generation.generation_id,
                subflow_index: index as u8,
                coefficients: row.clone(),
                payload,
            }
        })
        .collect();
    Ok(coded)
}

/// Recovers the original `k` cells from any set of received coded cells of
/// one generation whose coefficient vectors span the full space.
pub fn decode_generation(received: &[CodedCell], params: CodeParams) -> Result<Generation> {
    params.validate()?;
    let k = params.k;
    let Some(first) = received.first() else {
        return Err(Error::Structural(
            "no coded cells given; generation id unknown".into(),
        ));
    };
    let generation_id = first.generation_id;
    for cell in received {
        if cell.generation_id != generation_id {
            return Err(Error::Structural(format!(
                "mixed generations {} and {} in one decode",
                generation_id, cell.generation_id
            )));
        }
        if cell.coefficients.len() != k {
            return Err(Error::Structural(format!(
                "coefficient vector of length {} for k = {k}",
                cell.coefficients.len()
            )));
        }
    }

    // All systematic positions present: nothing to solve.
    let mut systematic: Vec<Option<&CodedCell>> = vec![None; k];
    for cell in received {
        if let Some(j) = unit_position(&cell.coefficients) {
            systematic[j].get_or_insert(cell);
        }
    }
    if systematic.iter().all(Option::is_some) {
        let cells = systematic
            .into_iter()
            .map(|c| c.unwrap().payload.clone())
            .collect();
        return Ok(Generation {
            generation_id,
            cells,
        });
    }

    // Gauss-Jordan on [coefficients | payload].
    let mut rows: Vec<(Vec<Gf256>, Cell)> = received
        .iter()
        .map(|c| (c.coefficients.clone(), c.payload.clone()))
        .collect();
    let mut rank = 0;
    for col in 0..k {
        let Some(pivot) = (rank..rows.len()).find(|&i| !rows[i].0[col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let inv = rows[rank].0[col].inv().unwrap();
        {
            let (coefs, payload) = &mut rows[rank];
            coefs.iter_mut().for_each(|v| *v *= inv);
            gf::scale_slice(payload.as_bytes_mut(), inv);
        }
        let (pivot_coefs, pivot_payload) = rows[rank].clone();
        for (i, (coefs, payload)) in rows.iter_mut().enumerate() {
            let f = coefs[col];
            if i == rank || f.is_zero() {
                continue;
            }
            for (d, s) in coefs.iter_mut().zip(&pivot_coefs) {
                *d += f * *s;
            }
            gf::mul_add_slice(payload.as_bytes_mut(), pivot_payload.as_bytes(), f);
        }
        rank += 1;
    }
    if rank < k {
        return Err(Error::UnrecoverableGeneration {
            generation_id,
            rank,
            k,
        });
    }
    // With full column rank the pivots sit on the diagonal of the first k rows.
    let cells = rows.into_iter().take(k).map(|(_, payload)| payload).collect();
    Ok(Generation {
        generation_id,
        cells,
    })
}

fn unit_position(coefs: &[Gf256]) -> Option<usize> {
    let mut pos = None;
    for (j, c) in coefs.iter().enumerate() {
        match c.value() {
            0 => {}
            1 if pos.is_none() => pos = Some(j),
            _ => return None,
        }
    }
    pos
}

/// Number of cells `split_message` produces for a message of `len` bytes.
pub fn framed_cell_count(len: usize, k: usize) -> usize {
    let cells = (len + LENGTH_PREFIX).div_ceil(CELL_SIZE);
    cells.div_ceil(k) * k
}

/// Frames, pads and groups a message into generations with ids from 0.
pub fn split_message(message: &[u8], k: usize) -> Result<Vec<Generation>> {
    if message.is_empty() {
        return Err(Error::Domain("cannot split an empty message".into()));
    }
    if k == 0 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    let total = framed_cell_count(message.len(), k);
    let generations = total / k;
    if generations > u32::MAX as usize + 1 {
        return Err(Error::Domain("message needs more than 2^32 generations".into()));
    }
    let mut stream = Vec::with_capacity(total * CELL_SIZE);
    stream.extend_from_slice(&(message.len() as u64).to_be_bytes());
    stream.extend_from_slice(message);
    stream.resize(total * CELL_SIZE, 0);

    let cells: Vec<Cell> = stream
        .chunks_exact(CELL_SIZE)
        .map(|chunk| Cell::from_slice(chunk).unwrap())
        .collect();
    Ok(cells
        .into_iter()
        .chunks(k)
        .into_iter()
        .enumerate()
        .map(|(id, chunk)| Generation {
            generation_id: id as u32,
            cells: chunk.collect(),
        })
        .collect())
}

/// Inverse of [`split_message`].
pub fn reassemble_message(generations: &[Generation]) -> Result<Vec<u8>> {
    for (expected, generation) in generations.iter().enumerate() {
        if generation.generation_id as usize != expected {
            return Err(Error::Structural(format!(
                "missing generation {expected} (found {})",
                generation.generation_id
            )));
        }
    }
    let stream: Vec<u8> = generations
        .iter()
        .flat_map(|g| g.cells.iter())
        .flat_map(|c| c.as_bytes().iter().copied())
        .collect();
    if stream.len() < LENGTH_PREFIX {
        return Err(Error::Structural("no length frame".into()));
    }
    let len = u64::from_be_bytes(stream[..LENGTH_PREFIX].try_into().unwrap());
    let available = (stream.len() - LENGTH_PREFIX) as u64;
    if len == 0 {
        return Err(Error::Structural("zero-length frame".into()));
    }
    if len > available {
        return Err(Error::Structural(format!(
            "length frame {len} exceeds {available} available bytes"
        )));
    }
    Ok(stream[LENGTH_PREFIX..LENGTH_PREFIX + len as usize].to_vec())
}
