use std::time::{Duration, Instant};

use evsynth_bench::{log_diffs, network};
use evsynth_core::evsnet::infer_stream;
use evsynth_core::InitialState;

fn best_of(runs: usize, f: impl Fn()) -> Duration {
    (0..runs)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed()
        })
        .min()
        .unwrap()
}

#[test]
fn inference_time_is_linear_in_pixels() {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let p = network();
    let (small, large) = (log_diffs(32, 64), log_diffs(64, 64));
    let (ts, tl) = pool.install(|| {
        infer_stream(&small, &p, InitialState::Zero).unwrap();
        (
            best_of(3, || drop(infer_stream(&small, &p, InitialState::Zero).unwrap())),
            best_of(3, || drop(infer_stream(&large, &p, InitialState::Zero).unwrap())),
        )
    });
    let ratio = tl.as_secs_f64() / ts.as_secs_f64();
    assert!((3.2..=4.8).contains(&ratio), "64x64 / 32x32 time ratio {ratio:.2} ({tl:?} / {ts:?})");
}
