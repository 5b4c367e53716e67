use cluefuse::index::{build_index, decode_index, encode_index, load_index, save_index, Bm25Params, PersistError, Stemming, TokenizerConfig};
use cluefuse::Passage;
use proptest::prelude::*;

fn corpus(rng: &mut impl rand::Rng) -> Vec<Passage> {
    cluefuse_testkit::random_corpus(rng, 50, 30)
        .into_iter()
        .enumerate()
        .map(|(i, d)| Passage::new(format!("doc-{i}"), if i % 3 == 0 { "Title Words" } else { "" }, d.join(" ")))
        .collect()
}

#[test]
fn round_trip_preserves_search() {
    let mut rng = cluefuse_testkit::rng(21);
    let cfg = TokenizerConfig {
        stemming: Stemming::Porter,
        stopword_removal: true,
        ..TokenizerConfig::default()
    };
    let index = build_index(corpus(&mut rng), cfg, Bm25Params { k1: 1.2, b: 0.75 }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("idx.cfix");
    save_index(&index, &path).unwrap();
    let loaded = load_index(&path).unwrap();
    assert_eq!(loaded.tokenizer_config(), &cfg);
    for _ in 0..100 {
        let q = cluefuse_testkit::random_query(&mut rng, 30).join(" ");
        assert_eq!(index.search("q", &q, 20), loaded.search("q", &q, 20));
    }
}

proptest! {
    #[test]
    fn decoder_never_panics(data in prop::collection::vec(any::<u8>(), 0..256)) {
        let _ = decode_index(&data);
    }

    #[test]
    fn single_byte_corruption_is_detected_or_harmless(pos in any::<prop::sample::Index>(), byte in any::<u8>()) {
        let index = build_index(
            vec![Passage::new("a", "", "x y z"), Passage::new("b", "", "y y w")],
            TokenizerConfig::default(),
            Bm25Params::default(),
        ).unwrap();
        let mut data = encode_index(&index);
        let i = pos.index(data.len());
        data[i] = byte;
        match decode_index(&data) {
            Ok(idx) => { prop_assert_eq!(idx.num_docs(), 2); }
            Err(PersistError::Corrupt(_) | PersistError::VersionMismatch { .. }) => {}
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }
}
