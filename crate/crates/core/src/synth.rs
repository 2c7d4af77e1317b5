//! Synthetic KDD99-format corpora for tests and demos.
//!
//! Every label gets a seeded prototype (protocol, service, flag and a mean
//! for each continuous column); records scatter around their prototype and
//! occasionally borrow another label's categorical values, so classes overlap
//! without being identical. The output is valid KDD99 wire format and goes
//! through the same parser as real data.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{CATEGORICAL_POSITIONS, NUM_FEATURES};

const PROTOCOLS: [&str; 3] = ["icmp", "tcp", "udp"];
const SERVICES: [&str; 12] = [
    "auth", "domain_u", "ecr_i", "eco_i", "finger", "ftp", "ftp_data", "http", "private",
    "smtp", "telnet", "other",
];
const FLAGS: [&str; 6] = ["REJ", "RSTO", "RSTR", "S0", "SF", "SH"];

/// Rate-valued columns (bounded to [0, 1]).
fn is_rate(position: usize) -> bool {
    (24..=30).contains(&position) || (33..=40).contains(&position)
}

struct Prototype {
    protocol: usize,
    service: usize,
    flag: usize,
    means: [f64; NUM_FEATURES],
}

fn prototype(label_index: usize, seed: u64) -> Prototype {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(label_index as u64 + 1)));
    let mut means = [0.0; NUM_FEATURES];
    for (p, m) in means.iter_mut().enumerate() {
        *m = if is_rate(p) {
            rng.random_range(0.0..1.0)
        } else if CATEGORICAL_POSITIONS.contains(&p) {
            0.0
        } else {
            // log-uniform magnitudes like KDD byte counts and connection counts
            10f64.powf(rng.random_range(-1.0..3.0))
        };
    }
    Prototype {
        protocol: rng.random_range(0..PROTOCOLS.len()),
        service: rng.random_range(0..SERVICES.len()),
        flag: rng.random_range(0..FLAGS.len()),
        means,
    }
}

/// Label counts plus generation parameters.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub counts: Vec<(String, usize)>,
    pub seed: u64,
    /// Probability that a record takes a categorical value at random.
    pub categorical_noise: f64,
    /// Relative spread of continuous values around the prototype.
    pub spread: f64,
}

impl SyntheticCorpus {
    pub fn new<S: Into<String>>(counts: impl IntoIterator<Item = (S, usize)>, seed: u64) -> Self {
        Self {
            counts: counts.into_iter().map(|(l, n)| (l.into(), n)).collect(),
            seed,
            categorical_noise: 0.05,
            spread: 0.6,
        }
    }

    pub fn len(&self) -> usize {
        self.counts.iter().map(|(_, n)| n).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes dot-terminated KDD99 lines, labels interleaved in a seeded order.
    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let protos: Vec<Prototype> = (0..self.counts.len()).map(|i| prototype(i, self.seed)).collect();
        let mut order: Vec<usize> = self
            .counts
            .iter()
            .enumerate()
            .flat_map(|(i, (_, n))| std::iter::repeat_n(i, *n))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let mut fields: Vec<String> = Vec::with_capacity(NUM_FEATURES + 1);
        for label in order {
            let p = &protos[label];
            fields.clear();
            for pos in 0..NUM_FEATURES {
                let noisy = rng.random::<f64>() < self.categorical_noise;
                let value = match pos {
                    1 => PROTOCOLS[if noisy { rng.random_range(0..3) } else { p.protocol }].to_string(),
                    2 => SERVICES[if noisy { rng.random_range(0..SERVICES.len()) } else { p.service }].to_string(),
                    3 => FLAGS[if noisy { rng.random_range(0..FLAGS.len()) } else { p.flag }].to_string(),
                    _ if is_rate(pos) => {
                        let v: f64 = p.means[pos] + self.spread * 0.25 * (rng.random::<f64>() - 0.5);
                        format!("{:.2}", v.clamp(0.0, 1.0))
                    }
                    _ => {
                        let factor = 1.0 + self.spread * (rng.random::<f64>() - 0.5);
                        format!("{}", (p.means[pos] * factor).round().max(0.0))
                    }
                };
                fields.push(value);
            }
            fields.push(format!("{}.", self.counts[label].0));
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("ASCII output")
    }
}

/// Label mix with the class structure of the 10% KDD99 file, scaled down by
/// `divisor` (each present label keeps at least `min_count` rows).
pub fn kdd_like_counts(divisor: usize, min_count: usize) -> Vec<(String, usize)> {
    const TEN_PERCENT: [(&str, usize); 23] = [
        ("smurf", 280_790),
        ("neptune", 107_201),
        ("normal", 97_278),
        ("back", 2_203),
        ("satan", 1_589),
        ("ipsweep", 1_247),
        ("portsweep", 1_040),
        ("warezclient", 1_020),
        ("teardrop", 979),
        ("pod", 264),
        ("nmap", 231),
        ("guess_passwd", 53),
        ("buffer_overflow", 30),
        ("land", 21),
        ("warezmaster", 20),
        ("imap", 12),
        ("rootkit", 10),
        ("loadmodule", 9),
        ("ftp_write", 8),
        ("multihop", 7),
        ("phf", 4),
        ("perl", 3),
        ("spy", 2),
    ];
    TEN_PERCENT
        .iter()
        .map(|(l, n)| (l.to_string(), (n / divisor.max(1)).max(min_count)))
        .collect()
}
