use ids_core::dataset::{
    build_schema, coarse_counts, default_taxonomy, parse_kdd, Category, RawRecord, NUM_FEATURES,
};
use ids_core::mlp::softmax_rows;
use ids_core::preprocess::{
    allocate_test_counts, class_weights, encode, stratified_partition, Granularity,
};
use ndarray::Array2;
use proptest::prelude::*;

const PROTOCOLS: [&str; 3] = ["icmp", "tcp", "udp"];
const SERVICES: [&str; 6] = ["http", "smtp", "ftp_data", "private", "ecr_i", "other"];
const FLAGS: [&str; 4] = ["SF", "S0", "REJ", "RSTO"];
const LABELS: [&str; 8] = [
    "normal", "smurf", "neptune", "back", "satan", "ipsweep", "guess_passwd", "rootkit",
];

fn record() -> impl Strategy<Value = RawRecord> {
    (
        0..PROTOCOLS.len(),
        0..SERVICES.len(),
        0..FLAGS.len(),
        prop::collection::vec(0u32..5000, NUM_FEATURES - 3),
        0..LABELS.len(),
    )
        .prop_map(|(p, s, f, nums, l)| {
            let mut nums = nums.into_iter();
            let values = (0..NUM_FEATURES)
                .map(|pos| match pos {
                    1 => PROTOCOLS[p].to_string(),
                    2 => SERVICES[s].to_string(),
                    3 => FLAGS[f].to_string(),
                    _ => {
                        let v = nums.next().unwrap();
                        if pos >= 24 { format!("{:.2}", v as f64 / 5000.0) } else { v.to_string() }
                    }
                })
                .collect();
            RawRecord { values, label: LABELS[l].to_string() }
        })
}

fn records(max: usize) -> impl Strategy<Value = Vec<RawRecord>> {
    prop::collection::vec(record(), 1..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn serialize_then_parse_is_identity(recs in records(40)) {
        let text: String = recs.iter().map(|r| r.to_kdd_line() + "\n").collect();
        prop_assert_eq!(parse_kdd(text.as_bytes()).unwrap(), recs);
    }

    #[test]
    fn schema_ignores_record_order(recs in records(40), rot in 0usize..40) {
        let mut shuffled = recs.clone();
        shuffled.reverse();
        let k = rot % shuffled.len();
        shuffled.rotate_left(k);
        let a = build_schema(&recs).unwrap();
        prop_assert_eq!(&a, &build_schema(&shuffled).unwrap());
        prop_assert!(a.validate().is_ok());
    }

    #[test]
    fn encoded_rows_are_well_formed(recs in records(60)) {
        let schema = build_schema(&recs).unwrap();
        let t = default_taxonomy();
        let ds = encode(&recs, &schema, &t, Granularity::Fine, None).unwrap();
        prop_assert_eq!(ds.width(), schema.encoded_width());
        let n_cont = schema.continuous_positions().len();
        for row in ds.x.rows() {
            prop_assert!(row.iter().take(n_cont).all(|&v| (0.0..=1.0).contains(&v)));
            let mut start = n_cont;
            for vocab in &schema.vocabularies {
                let block = &row.as_slice().unwrap()[start..start + vocab.len()];
                prop_assert_eq!(block.iter().filter(|&&v| v == 1.0).count(), 1);
                prop_assert_eq!(block.iter().filter(|&&v| v == 0.0).count(), vocab.len() - 1);
                start += vocab.len();
            }
        }
        let counts = coarse_counts(&recs, &t).unwrap();
        let coarse = ds.coarse_labels(&t).unwrap();
        for cat in Category::ALL {
            let n = coarse.iter().filter(|&&c| c as usize == cat.index()).count() as u64;
            prop_assert_eq!(n, counts.get(cat));
        }
        prop_assert_eq!(counts.total(), recs.len() as u64);
    }

    #[test]
    fn split_partitions_and_stratifies(
        counts in prop::collection::vec(1usize..60, 1..8),
        frac in 0.05f64..0.95,
        seed in any::<u64>(),
    ) {
        let labels: Vec<u16> = counts
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(c as u16, n))
            .collect();
        let p = stratified_partition(&labels, counts.len(), frac, seed).unwrap();
        let mut all: Vec<usize> = p.train.iter().chain(&p.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        for (c, &n) in counts.iter().enumerate() {
            let in_test = p.test.iter().filter(|&&i| labels[i] as usize == c).count();
            prop_assert!((in_test as f64 - n as f64 * frac).abs() < 1.0);
            prop_assert!(in_test < n, "class {} lost every training row", c);
        }
        prop_assert_eq!(p, stratified_partition(&labels, counts.len(), frac, seed).unwrap());
    }

    #[test]
    fn test_size_is_ceiling_when_classes_have_room(
        counts in prop::collection::vec(2usize..500, 1..10),
        frac in 0.05f64..0.5,
    ) {
        let total: usize = counts.iter().sum();
        let alloc = allocate_test_counts(&counts, frac).unwrap();
        prop_assert_eq!(alloc.iter().sum::<usize>(), (total as f64 * frac).ceil() as usize);
    }

    #[test]
    fn class_weights_have_unit_mean(counts in prop::collection::vec(1usize..300, 1..10)) {
        let y: Vec<u16> = counts
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(c as u16, n))
            .collect();
        let w = class_weights(&y, counts.len()).unwrap();
        let mean = w.as_slice().iter().sum::<f64>() / counts.len() as f64;
        prop_assert!((mean - 1.0).abs() < 1e-12);
        // rarer classes never weigh less
        for a in 0..counts.len() {
            for b in 0..counts.len() {
                if counts[a] < counts[b] {
                    prop_assert!(w.get(a) > w.get(b));
                }
            }
        }
    }

    #[test]
    fn balanced_labels_give_unit_weights(k in 1usize..12, per in 1usize..50) {
        let y: Vec<u16> = (0..k * per).map(|i| (i % k) as u16).collect();
        let w = class_weights(&y, k).unwrap();
        prop_assert!(w.as_slice().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn softmax_rows_are_distributions(
        vals in prop::collection::vec(-700.0f64..700.0, 2..60),
        k in 2usize..6,
    ) {
        let n = vals.len() / k;
        prop_assume!(n > 0);
        let mut m = Array2::from_shape_vec((n, k), vals[..n * k].to_vec()).unwrap();
        let argmax: Vec<usize> = m
            .rows()
            .into_iter()
            .map(|r| r.iter().enumerate().fold(0, |b, (i, &v)| if v > r[b] { i } else { b }))
            .collect();
        softmax_rows(&mut m);
        for (row, &am) in m.rows().into_iter().zip(&argmax) {
            prop_assert!((row.sum() - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|&p| (0.0..=1.0).contains(&p)));
            prop_assert!(row.iter().all(|&p| p <= row[am]));
        }
    }
}
