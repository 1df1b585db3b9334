use std::collections::HashSet;

use evsynth_core::evsnet::{self, decode_checkpoint, encode_checkpoint, EvsNetConfig};
use evsynth_core::io;
use evsynth_core::{Event, EventList, FrameSeq, LifParams, SurrogateConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_events(n: usize, seed: u64) -> EventList {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (640usize, 480usize);
    let mut keys = HashSet::new();
    let mut events = Vec::with_capacity(n);
    while events.len() < n {
        let e = Event::new(r.random_range(0..4_000_000_000u64), r.random_range(0..w as u16), r.random_range(0..h as u16), 1);
        if keys.insert((e.t_us, e.x, e.y)) {
            events.push(Event { p: if r.random::<bool>() { 1 } else { -1 }, ..e });
        }
    }
    EventList::from_unsorted(w, h, events).unwrap()
}

#[test]
fn evt1_10k_round_trip_bit_exact() {
    let e = random_events(10_000, 1);
    let mut bytes = Vec::new();
    io::encode_evt1(&e, &mut bytes).unwrap();
    assert_eq!(bytes.len(), 14 + 9 * 10_000);
    assert_eq!(io::decode_evt1(&bytes).unwrap(), e);
    let mut again = Vec::new();
    io::encode_evt1(&io::decode_evt1(&bytes).unwrap(), &mut again).unwrap();
    assert_eq!(bytes, again);
}

#[test]
fn csv_10k_round_trip() {
    let e = random_events(10_000, 2);
    let mut text = Vec::new();
    io::encode_csv(&e, &mut text).unwrap();
    assert_eq!(io::decode_csv(text.as_slice(), Some((640, 480))).unwrap(), e);
}

#[test]
fn files_choose_format_by_extension() {
    let dir = tempfile::tempdir().unwrap();
    let e = random_events(500, 3);
    for name in ["a.evt", "a.csv"] {
        let path = dir.path().join(name);
        io::write_events(&path, &e).unwrap();
        assert_eq!(io::read_events(&path, Some((640, 480))).unwrap(), e);
    }
    let head = std::fs::read(dir.path().join("a.evt")).unwrap();
    assert_eq!(&head[..4], io::EVT1_MAGIC);
}

fn arb_frames() -> impl Strategy<Value = FrameSeq> {
    (1usize..6, 1usize..6, 2usize..5, 1.0f32..5000.0).prop_flat_map(|(w, h, n, fps)| {
        prop::collection::vec(0.0f32..100.0, w * h * n * 3)
            .prop_map(move |d| FrameSeq::new(w, h, fps as f64, d).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fseq_round_trip(f in arb_frames()) {
        let mut bytes = Vec::new();
        io::encode_fseq(&f, &mut bytes).unwrap();
        let back = io::decode_fseq(&bytes).unwrap();
        let bits = |s: &[f32]| s.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(back.data()), bits(f.data()));
        prop_assert_eq!(back, f);
    }

    #[test]
    fn evsn_round_trip(c in 1usize..6, k in prop::sample::select(vec![1usize, 3, 5, 7]), m in 1usize..3, seed: u64, tau in 1.5f64..10.0) {
        let cfg = EvsNetConfig {
            channels: c,
            kernel: k,
            depth: m,
            lif: LifParams { tau, v_th: 1.0 },
            surrogate: SurrogateConfig::default(),
        };
        let mut p = evsnet::init_params(&cfg, seed).unwrap();
        for (i, v) in p.as_mut_slice().iter_mut().enumerate() {
            *v += (i as f32) * 1e-3;
        }
        let mut bytes = Vec::new();
        encode_checkpoint(&p, &mut bytes).unwrap();
        let back = decode_checkpoint(&bytes).unwrap();
        let bits = |s: &[f32]| s.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(back.as_slice()), bits(p.as_slice()));
        prop_assert_eq!(back.config().kernel, k);
    }
}
