//! Sequence datasets: synthetic correlated SDR sequences, protein FASTA
//! files and the built-in list of one hundred four-letter words.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::metrics::sdr_capacity;
use crate::rng::Rng;
use crate::sdr::{random_sdr, Sdr};

pub const AMINO_ACIDS: &str = "ACDEFGHIKLMNPQRSTVWY";
pub const DEFAULT_PROTEIN_CAP: usize = 500;

const WORDS: &str = include_str!("../data/words.txt");

/// Injective symbol → SDR table, deterministic from its seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    n: usize,
    w: usize,
    seed: u64,
    table: BTreeMap<char, Sdr>,
}

impl Codebook {
    pub fn new(symbols: impl IntoIterator<Item = char>, n: usize, w: usize, seed: u64) -> Result<Self> {
        let mut symbols: Vec<char> = symbols.into_iter().collect();
        symbols.sort_unstable();
        symbols.dedup();
        if sdr_capacity(n as u64, w as u64)? < symbols.len().into() {
            return Err(Error::param(format!(
                "{} symbols do not fit in distinct {n}-bit SDRs with {w} active",
                symbols.len()
            )));
        }
        let mut rng = Rng::new(seed);
        let mut table = BTreeMap::new();
        for s in symbols {
            let sdr = loop {
                let candidate = random_sdr(n, w, &mut rng)?;
                if !table.values().any(|v| v == &candidate) {
                    break candidate;
                }
            };
            table.insert(s, sdr);
        }
        Ok(Self { n, w, seed, table })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn get(&self, symbol: char) -> Option<&Sdr> {
        self.table.get(&symbol)
    }

    pub fn entries(&self) -> impl Iterator<Item = (char, &Sdr)> {
        self.table.iter().map(|(&c, s)| (c, s))
    }

    pub fn encode(&self, text: &str) -> Result<Vec<Sdr>> {
        text.chars()
            .map(|c| {
                self.get(c)
                    .cloned()
                    .ok_or_else(|| Error::InvalidInput(format!("symbol {c:?} not in codebook")))
            })
            .collect()
    }

    /// Exact reverse lookup.
    pub fn decode(&self, sdr: &Sdr) -> Option<char> {
        self.table.iter().find(|(_, v)| *v == sdr).map(|(&c, _)| c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSet {
    pub sequences: Vec<Vec<Sdr>>,
    /// Declared `1 - vocab / T`, for generated sets.
    pub correlation: Option<f64>,
    /// Distinct patterns per sequence (generated sets) or codebook size.
    pub vocab: usize,
}

impl SequenceSet {
    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }
}

/// `max(1, round((1 - correlation) * T))`, half-up, capped at `T`.
pub fn vocab_for(t: usize, correlation: f64) -> usize {
    let v = ((1.0 - correlation) * t as f64 + 0.5).floor() as usize;
    v.clamp(1, t)
}

/// Random sequences of length `t` with `vocab_for(t, correlation)` distinct
/// patterns each. Position 0 holds a pattern used nowhere else in its
/// sequence and distinct from every other sequence's start.
pub fn gen_sequences(
    count: usize,
    t: usize,
    correlation: f64,
    n: usize,
    w: usize,
    rng: &mut Rng,
) -> Result<SequenceSet> {
    if t < 2 {
        return Err(Error::param("sequence length must be at least 2"));
    }
    if !(0.0..1.0).contains(&correlation) {
        return Err(Error::param(format!("correlation {correlation} not in [0,1)")));
    }
    if w > n || n == 0 {
        return Err(Error::param(format!("invalid SDR shape n={n}, w={w}")));
    }
    let vocab = vocab_for(t, correlation);
    let needed = (count * vocab) as u64;
    if sdr_capacity(n as u64, w as u64)? < needed.into() {
        return Err(Error::param("not enough distinct SDRs for the requested set"));
    }
    let mut starts: Vec<Sdr> = Vec::with_capacity(count);
    let mut sequences = Vec::with_capacity(count);
    for _ in 0..count {
        let mut items: Vec<Sdr> = Vec::with_capacity(vocab);
        while items.len() < vocab {
            let candidate = random_sdr(n, w, rng)?;
            let clash = items.contains(&candidate) || (items.is_empty() && starts.contains(&candidate));
            if !clash {
                items.push(candidate);
            }
        }
        starts.push(items[0].clone());
        let seq = if vocab == 1 {
            vec![items[0].clone(); t]
        } else {
            let rest = &items[1..];
            let mut layout: Vec<usize> = (0..rest.len()).collect();
            layout.extend((rest.len()..t - 1).map(|_| rng.random_range(0..rest.len() as u32) as usize));
            layout.shuffle(rng);
            std::iter::once(items[0].clone())
                .chain(layout.into_iter().map(|k| rest[k].clone()))
                .collect()
        };
        sequences.push(seq);
    }
    Ok(SequenceSet {
        sequences,
        correlation: Some(correlation),
        vocab,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FastaRecord {
    pub header: String,
    pub residues: String,
}

/// Parses FASTA text. Residues must be one of the twenty standard amino
/// acid codes (either case); whitespace inside sequence lines is ignored.
pub fn parse_fasta(text: &str) -> Result<Vec<FastaRecord>> {
    let mut records: Vec<FastaRecord> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        if let Some(header) = line.strip_prefix('>') {
            records.push(FastaRecord {
                header: header.trim().to_string(),
                residues: String::new(),
            });
            continue;
        }
        if line.trim().is_empty() || line.starts_with(';') {
            continue;
        }
        let Some(record) = records.last_mut() else {
            return Err(Error::Parse {
                line: line_no,
                column: 1,
                reason: "sequence data before the first '>' header".into(),
            });
        };
        for (col, ch) in line.chars().enumerate() {
            if ch.is_ascii_whitespace() {
                continue;
            }
            let up = ch.to_ascii_uppercase();
            if !AMINO_ACIDS.contains(up) {
                return Err(Error::Parse {
                    line: line_no,
                    column: col + 1,
                    reason: format!("{ch:?} is not an amino acid code"),
                });
            }
            record.residues.push(up);
        }
    }
    if records.is_empty() {
        return Err(Error::InvalidInput("FASTA input has no records".into()));
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FastaOptions {
    pub codebook_seed: u64,
    pub n: usize,
    pub w: usize,
    /// Longer records are truncated to this many residues.
    pub max_len: usize,
}

impl FastaOptions {
    pub fn new(codebook_seed: u64) -> Self {
        Self {
            codebook_seed,
            n: 100,
            w: 5,
            max_len: DEFAULT_PROTEIN_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProteinSet {
    pub set: SequenceSet,
    pub codebook: Codebook,
    pub headers: Vec<String>,
    /// Residue strings actually encoded (after truncation).
    pub residues: Vec<String>,
    /// Records dropped because their first residue was already taken.
    pub dropped_duplicate_start: usize,
    pub dropped_empty: usize,
    pub truncated: usize,
    pub max_len: usize,
}

/// Loads proteins with the default 100-bit, 5-active codebook and cap.
pub fn load_fasta(path: impl AsRef<Path>, codebook_seed: u64) -> Result<ProteinSet> {
    load_fasta_with(path, &FastaOptions::new(codebook_seed))
}

pub fn load_fasta_with(path: impl AsRef<Path>, opts: &FastaOptions) -> Result<ProteinSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    proteins_from_str(&text, opts)
}

pub fn proteins_from_str(text: &str, opts: &FastaOptions) -> Result<ProteinSet> {
    if opts.max_len == 0 {
        return Err(Error::param("protein length cap must be positive"));
    }
    let records = parse_fasta(text)?;
    let codebook = Codebook::new(AMINO_ACIDS.chars(), opts.n, opts.w, opts.codebook_seed)?;
    let mut out = ProteinSet {
        set: SequenceSet {
            sequences: Vec::new(),
            correlation: None,
            vocab: codebook.len(),
        },
        codebook,
        headers: Vec::new(),
        residues: Vec::new(),
        dropped_duplicate_start: 0,
        dropped_empty: 0,
        truncated: 0,
        max_len: opts.max_len,
    };
    let mut seen_starts = Vec::new();
    for rec in records {
        let Some(first) = rec.residues.chars().next() else {
            out.dropped_empty += 1;
            continue;
        };
        if seen_starts.contains(&first) {
            out.dropped_duplicate_start += 1;
            continue;
        }
        seen_starts.push(first);
        let mut residues = rec.residues;
        if residues.len() > opts.max_len {
            residues.truncate(opts.max_len);
            out.truncated += 1;
        }
        out.set.sequences.push(out.codebook.encode(&residues)?);
        out.headers.push(rec.header);
        out.residues.push(residues);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordSet {
    pub set: SequenceSet,
    pub words: Vec<String>,
    pub codebook: Codebook,
}

pub fn words() -> Vec<&'static str> {
    WORDS.lines().map(str::trim).filter(|l| !l.is_empty()).collect()
}

/// The built-in hundred four-letter words as letter-SDR sequences.
pub fn word_dataset(codebook_seed: u64, n: usize, w: usize) -> Result<WordSet> {
    let words: Vec<String> = words().into_iter().map(String::from).collect();
    let codebook = Codebook::new(words.iter().flat_map(|w| w.chars()), n, w, codebook_seed)?;
    let sequences = words
        .iter()
        .map(|word| codebook.encode(word))
        .collect::<Result<Vec<_>>>()?;
    Ok(WordSet {
        set: SequenceSet {
            sequences,
            correlation: None,
            vocab: codebook.len(),
        },
        words,
        codebook,
    })
}
