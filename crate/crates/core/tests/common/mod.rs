#![allow(dead_code)]

//! Test support: an independent direct implementation of the selection rule,
//! synthetic stream builders and a minimal HTTP fixture.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub mod oracle {
    //! Straight-line metric formulas, written without reference to the
    //! library code. DSS is kept as an exact fraction.

    use std::cmp::Ordering;

    pub fn eoe(rows: &[Vec<f64>]) -> f64 {
        let n = rows.len();
        assert!(n >= 1);
        if n == 1 {
            return 0.0;
        }
        let mut w = Vec::new();
        for r in rows {
            let mut s = 0.0;
            for v in r {
                s += v * v;
            }
            w.push(s.sqrt());
        }
        let mut total = 0.0;
        for x in &w {
            total += x;
        }
        if total == 0.0 {
            return 0.0;
        }
        let mut h = 0.0;
        for x in &w {
            let p = x / total;
            if p > 0.0 {
                h -= p * p.ln();
            }
        }
        h / (n as f64).ln()
    }

    /// Exact DSS as (numerator, denominator).
    #[derive(Debug, Clone, Copy)]
    pub struct Frac(pub u64, pub u64);

    impl Frac {
        pub fn cmp(self, o: Frac) -> Ordering {
            (self.0 * o.1).cmp(&(o.0 * self.1))
        }
        pub fn value(self) -> f64 {
            self.0 as f64 / self.1 as f64
        }
    }

    pub fn dss(tokens: &[&str], lexicons: &[Vec<&str>]) -> Frac {
        let mut hits = 0u64;
        for lex in lexicons {
            for t in tokens {
                if lex.contains(t) {
                    hits += 1;
                }
            }
        }
        Frac(hits, (lexicons.len() * tokens.len()) as u64)
    }

    pub fn dominant(tokens: &[&str], lexicons: &[Vec<&str>]) -> usize {
        let mut best = 0;
        let mut best_count = 0;
        for (i, lex) in lexicons.iter().enumerate() {
            let c = tokens.iter().filter(|t| lex.contains(t)).count();
            if c > best_count {
                best = i;
                best_count = c;
            }
        }
        best
    }

    pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    }

    pub fn idd(e: &[f64], dom: usize, peers: &[(Vec<f64>, usize)]) -> f64 {
        let same: Vec<&Vec<f64>> = peers.iter().filter(|p| p.1 == dom).map(|p| &p.0).collect();
        if same.is_empty() {
            return 1.0;
        }
        same.iter().map(|s| 1.0 - cosine(e, s)).sum::<f64>() / same.len() as f64
    }
}

/// One synthetic dialogue with its per-token and pooled embeddings.
#[derive(Debug, Clone)]
pub struct SyntheticSet {
    pub id: String,
    pub question: String,
    pub response: String,
    pub rows: Vec<Vec<f64>>,
    pub pooled: Vec<f64>,
}

impl SyntheticSet {
    pub fn tokens(&self) -> Vec<&str> {
        self.question
            .split_whitespace()
            .chain(self.response.split_whitespace())
            .collect()
    }
}

/// Decision in a library-independent form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleDecision {
    Empty(usize),
    Replace(usize, String),
    Reject,
}

/// Direct transcription of the fill-then-dominate rule with frozen scores
/// and a uniform `gen_range(0..|dominated|)` tie-break in bin order.
pub struct OracleBuffer<'a> {
    capacity: usize,
    lexicons: &'a [Vec<&'a str>],
    bins: Vec<(String, f64, oracle::Frac, f64, Vec<f64>, usize)>,
    rng: ChaCha8Rng,
}

impl<'a> OracleBuffer<'a> {
    pub fn new(capacity: usize, lexicons: &'a [Vec<&'a str>], seed: u64) -> Self {
        OracleBuffer {
            capacity,
            lexicons,
            bins: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn offer(&mut self, s: &SyntheticSet) -> OracleDecision {
        let tokens = s.tokens();
        let eoe = oracle::eoe(&s.rows);
        let dss = oracle::dss(&tokens, self.lexicons);
        let dom = oracle::dominant(&tokens, self.lexicons);
        let peers: Vec<(Vec<f64>, usize)> =
            self.bins.iter().map(|b| (b.4.clone(), b.5)).collect();
        let idd = oracle::idd(&s.pooled, dom, &peers);
        let rec = (s.id.clone(), eoe, dss, idd, s.pooled.clone(), dom);

        if self.bins.len() < self.capacity {
            self.bins.push(rec);
            return OracleDecision::Empty(self.bins.len() - 1);
        }
        let mut dominated = Vec::new();
        for (i, b) in self.bins.iter().enumerate() {
            if eoe > b.1 && dss.cmp(b.2) == std::cmp::Ordering::Greater && idd > b.3 {
                dominated.push(i);
            }
        }
        if dominated.is_empty() {
            return OracleDecision::Reject;
        }
        let pick = dominated[self.rng.gen_range(0..dominated.len())];
        let victim = std::mem::replace(&mut self.bins[pick], rec);
        OracleDecision::Replace(pick, victim.0)
    }
}

pub fn gaussian_unit(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

pub const DOMAINS: [(&str, [&str; 12]); 3] = [
    (
        "medical",
        [
            "dose", "vial", "inhale", "inject", "pills", "ingredient", "pelvis", "arm", "sinus",
            "chest", "lymph", "tonsil",
        ],
    ),
    (
        "emotion",
        [
            "bunker", "cautionary", "chasm", "lucky", "merriment", "hilarious", "advocate",
            "alliance", "cohesion", "fear", "trust", "surprise",
        ],
    ),
    (
        "tech",
        [
            "server", "kernel", "compiler", "socket", "thread", "cache", "router", "driver",
            "packet", "binary", "linker", "module",
        ],
    ),
];

pub const FILLER: [&str; 24] = [
    "the", "a", "it", "so", "well", "just", "thing", "stuff", "okay", "yes", "no", "maybe",
    "like", "really", "there", "that", "this", "then", "what", "more", "some", "very", "much",
    "any",
];

pub fn lexicon_json() -> String {
    let domains: Vec<serde_json::Value> = DOMAINS
        .iter()
        .map(|(id, toks)| serde_json::json!({"id": id, "tokens": toks}))
        .collect();
    serde_json::json!({ "domains": domains }).to_string()
}

pub fn lexicon_lists() -> Vec<Vec<&'static str>> {
    DOMAINS.iter().map(|(_, t)| t.to_vec()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    HighQuality,
    Filler,
    DecoyEoe,
    DecoyDss,
    DecoyIdd,
}

/// Stream with a planted quality signal.
///
/// * 10% high-quality: ~60% domain vocabulary, near-uniform token norms,
///   isotropic pooled vectors.
/// * 60% filler: no domain words, one dominant token norm, pooled vectors
///   along a shared direction `c` with magnitudes spread over [1, 100].
/// * 10% each of three decoys that are each best on a single metric:
///   perfectly uniform norms (EOE), all-domain vocabulary (DSS), or pooled
///   vectors along `-c` (IDD). Otherwise they look like filler.
pub fn planted_stream(seed: u64, n: usize, dim: usize) -> (Vec<SyntheticSet>, Vec<Kind>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let axis = gaussian_unit(&mut rng, dim);
    let mut sets = Vec::with_capacity(n);
    let mut kinds = Vec::with_capacity(n);
    for i in 0..n {
        let u: f64 = rng.gen();
        let kind = match u {
            u if u < 0.10 => Kind::HighQuality,
            u if u < 0.70 => Kind::Filler,
            u if u < 0.80 => Kind::DecoyEoe,
            u if u < 0.90 => Kind::DecoyDss,
            _ => Kind::DecoyIdd,
        };
        let domain = rng.gen_range(0..DOMAINS.len());
        let words: Vec<&str> = (0..12)
            .map(|_| {
                let lexical = match kind {
                    Kind::HighQuality => rng.gen_bool(0.6),
                    Kind::DecoyDss => true,
                    _ => false,
                };
                if lexical {
                    DOMAINS[domain].1[rng.gen_range(0..12)]
                } else {
                    FILLER[rng.gen_range(0..FILLER.len())]
                }
            })
            .collect();
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|j| {
                let norm = match kind {
                    Kind::HighQuality => rng.gen_range(0.8..1.2),
                    Kind::DecoyEoe => 1.0,
                    _ if j == 0 => 6.0,
                    _ => rng.gen_range(0.1..0.4),
                };
                scaled(&gaussian_unit(&mut rng, dim), norm)
            })
            .collect();
        let pooled = match kind {
            Kind::HighQuality => gaussian_unit(&mut rng, dim),
            _ => {
                let sign = if kind == Kind::DecoyIdd { -1.0 } else { 1.0 };
                let noise = gaussian_unit(&mut rng, dim);
                let dir: Vec<f64> = axis
                    .iter()
                    .zip(&noise)
                    .map(|(a, e)| sign * a + 0.05 * e)
                    .collect();
                let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
                let magnitude = (rng.gen_range(0.0..100f64.ln())).exp();
                scaled(&dir, magnitude / len)
            }
        };
        sets.push(SyntheticSet {
            id: format!("s{i:05}"),
            question: words[..6].join(" "),
            response: words[6..].join(" "),
            rows,
            pooled,
        });
        kinds.push(kind);
    }
    (sets, kinds)
}

/// Random sets over a small vocabulary for oracle comparisons. Token counts
/// range from 1 to 6.
pub fn random_sets(rng: &mut impl Rng, n: usize, dim: usize) -> Vec<SyntheticSet> {
    let vocab: Vec<&str> = DOMAINS
        .iter()
        .flat_map(|(_, t)| t[..3].iter().copied())
        .chain(FILLER[..4].iter().copied())
        .collect();
    (0..n)
        .map(|i| {
            let len = rng.gen_range(1..=6);
            let words: Vec<&str> = (0..len).map(|_| vocab[rng.gen_range(0..vocab.len())]).collect();
            let split = rng.gen_range(1..=len);
            let rows: Vec<Vec<f64>> = (0..len)
                .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let pooled = (0..dim)
                .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / len as f64)
                .collect();
            SyntheticSet {
                id: format!("r{i}"),
                question: words[..split].join(" "),
                response: words[split..].join(" "),
                rows,
                pooled,
            }
        })
        .collect()
}

pub struct StreamFiles {
    pub dataset: PathBuf,
    pub embeddings: PathBuf,
    pub lexicon: PathBuf,
}

pub fn write_stream(dir: &Path, sets: &[SyntheticSet]) -> StreamFiles {
    std::fs::create_dir_all(dir).unwrap();
    let dataset = dir.join("stream.jsonl");
    let embeddings = dir.join("embeddings.jsonl");
    let lexicon = dir.join("lexicon.json");
    let mut d = std::io::BufWriter::new(std::fs::File::create(&dataset).unwrap());
    let mut e = std::io::BufWriter::new(std::fs::File::create(&embeddings).unwrap());
    for s in sets {
        writeln!(
            d,
            "{}",
            serde_json::json!({"id": s.id, "question": s.question, "response": s.response})
        )
        .unwrap();
        writeln!(
            e,
            "{}",
            serde_json::json!({"id": s.id, "pooled": s.pooled, "token_vectors": s.rows})
        )
        .unwrap();
    }
    d.flush().unwrap();
    e.flush().unwrap();
    std::fs::write(&lexicon, lexicon_json()).unwrap();
    StreamFiles {
        dataset,
        embeddings,
        lexicon,
    }
}

/// Plain-text stream for runs with the hash provider.
pub fn write_text_stream(dir: &Path, n: usize, seed: u64) -> (PathBuf, PathBuf) {
    std::fs::create_dir_all(dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dataset = dir.join("stream.jsonl");
    let mut d = std::io::BufWriter::new(std::fs::File::create(&dataset).unwrap());
    for i in 0..n {
        let domain = &DOMAINS[rng.gen_range(0..DOMAINS.len())].1;
        let mut pick = |k: usize, p: f64| -> String {
            (0..k)
                .map(|_| {
                    if rng.gen_bool(p) {
                        domain[rng.gen_range(0..12)]
                    } else {
                        FILLER[rng.gen_range(0..FILLER.len())]
                    }
                })
                .collect::<Vec<_>>()
                .join(" ")
        };
        let p = if i % 10 == 0 { 0.6 } else { 0.1 };
        let q = format!("{}?", pick(rng_len(i), p));
        let r = pick(8, p);
        writeln!(d, "{}", serde_json::json!({"id": format!("t{i}"), "question": q, "response": r}))
            .unwrap();
    }
    d.flush().unwrap();
    let lexicon = dir.join("lexicon.json");
    std::fs::write(&lexicon, lexicon_json()).unwrap();
    (dataset, lexicon)
}

fn rng_len(i: usize) -> usize {
    4 + i % 7
}

/// Serves canned replies over HTTP/1.1 on a loopback port. Each connection
/// handles one request and is then closed.
pub struct Fixture {
    pub url: String,
    pub hits: Arc<AtomicUsize>,
    pub bodies: Arc<std::sync::Mutex<Vec<String>>>,
}

pub fn serve<F>(reply: F) -> Fixture
where
    F: Fn(usize, &str) -> (u16, String) + Send + Sync + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let bodies = Arc::new(std::sync::Mutex::new(Vec::new()));
    let (h, b) = (Arc::clone(&hits), Arc::clone(&bodies));
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut headers = HashMap::new();
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            loop {
                line.clear();
                if reader.read_line(&mut line).unwrap() == 0 || line == "\r\n" {
                    break;
                }
                if let Some((k, v)) = line.split_once(':') {
                    headers.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
                }
            }
            let len: usize = headers
                .get("content-length")
                .and_then(|v| v.parse().ok())
                .unwrap_or(0);
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            let body = String::from_utf8(body).unwrap();
            let n = h.fetch_add(1, Ordering::SeqCst);
            b.lock().unwrap().push(body.clone());
            let (status, text) = reply(n, &body);
            let resp = format!(
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{text}",
                text.len()
            );
            let _ = stream.write_all(resp.as_bytes());
        }
    });
    Fixture { url, hits, bodies }
}

/// Loads synthetic sets into run inputs backed by an in-memory provider.
pub fn inputs_for(sets: &[SyntheticSet]) -> dsel::harness::Inputs {
    use dsel::embeddings::{EmbeddingRecord, FileEmbedder};
    let provider = FileEmbedder::from_records(sets.iter().map(|s| EmbeddingRecord {
        id: s.id.clone(),
        pooled: s.pooled.clone(),
        token_vectors: Some(s.rows.clone()),
    }))
    .unwrap();
    let store = dsel::lexicon::LexiconStore::new(DOMAINS.iter().map(|(id, t)| (*id, t.to_vec())))
        .unwrap();
    dsel::harness::Inputs {
        store: Arc::new(store),
        dialogues: Arc::new(
            sets.iter()
                .map(|s| dsel::DialogueSet::new(&s.id, &s.question, &s.response).unwrap())
                .collect(),
        ),
        oracle: Arc::new(HashMap::new()),
        provider: Arc::new(provider),
        generator: None,
    }
}

pub fn to_oracle_decision(d: &dsel::buffer::Decision) -> OracleDecision {
    use dsel::buffer::Decision;
    match d {
        Decision::AdmittedIntoEmptyBin { bin } => OracleDecision::Empty(*bin),
        Decision::Replaced { bin, victim_id } => OracleDecision::Replace(*bin, victim_id.clone()),
        Decision::Rejected => OracleDecision::Reject,
    }
}

/// Replays `trials` random streams (up to 50 sets, up to 4 bins, d = 8)
/// through the dominance pipeline and the direct oracle. Returns one line per
/// mismatching decision, the number of decisions compared and how many of
/// them were replacements.
pub fn dominance_mismatches(trials: usize, seed: u64) -> (Vec<String>, usize, usize) {
    let lexicons = lexicon_lists();
    let policies = dsel::buffer::PolicyRegistry::with_builtins();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = Vec::new();
    let mut compared = 0;
    let mut replaced = 0;
    for trial in 0..trials {
        let n = rng.gen_range(1..=50);
        let k = rng.gen_range(1..=4);
        let buffer_seed: u64 = rng.gen();
        let sets = random_sets(&mut rng, n, 8);
        let inputs = inputs_for(&sets);
        let mut cfg = dsel::harness::RunConfig::new("-", "-");
        cfg.bins = k;
        cfg.seed = buffer_seed;
        let mut pipeline = dsel::harness::Pipeline::new(&cfg, &inputs, &policies).unwrap();
        let mut reference = OracleBuffer::new(k, &lexicons, buffer_seed);
        for (i, s) in sets.iter().enumerate() {
            let got = to_oracle_decision(&pipeline.process(&inputs.dialogues[i]).unwrap());
            let want = reference.offer(s);
            compared += 1;
            replaced += matches!(want, OracleDecision::Replace(..)) as usize;
            if got != want {
                mismatches.push(format!("trial {trial} set {i}: engine {got:?}, oracle {want:?}"));
                break;
            }
        }
    }
    (mismatches, compared, replaced)
}

/// Exhaustive optimum of the k-center objective for a small instance.
pub fn optimal_radius(points: &[Vec<f64>], k: usize) -> f64 {
    let n = points.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let r = points
            .iter()
            .map(|p| {
                (0..n)
                    .filter(|c| mask & (1 << c) != 0)
                    .map(|c| {
                        p.iter().zip(&points[c]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        best = best.min(r);
    }
    best
}

/// Runs `trials` random k-center instances of at most 8 points; returns
/// the instances where the greedy radius exceeds twice the optimum.
pub fn kcenter_violations(trials: usize, seed: u64) -> Vec<String> {
    use dsel::buffer::{covering_radius, farthest_first};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = Vec::new();
    for t in 0..trials {
        let n = rng.gen_range(1..=8);
        let k = rng.gen_range(1..=n);
        let dim = rng.gen_range(1..=4);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.gen_range(-10.0..10.0)).collect())
            .collect();
        let start = rng.gen_range(0..n);
        let refs: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
        let centers = farthest_first(&refs, k, start);
        let greedy = covering_radius(&refs, &centers);
        let opt = optimal_radius(&points, k);
        if centers.len() != k || greedy > 2.0 * opt + 1e-12 {
            bad.push(format!("instance {t}: n={n} k={k} greedy={greedy} opt={opt}"));
        }
    }
    bad
}
