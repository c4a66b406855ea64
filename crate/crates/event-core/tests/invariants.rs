//! Property tests for binning conservation, bin partitioning, and
//! serialization round-trips.

use event_core::{bin_events, read_events, write_events, Event, Polarity};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn arb_stream(max_len: usize) -> impl Strategy<Value = Vec<Event>> {
    prop::collection::vec(
        (0u16..32, 0u16..24, 0u64..10_000, prop::bool::ANY),
        0..max_len,
    )
    .prop_map(|mut raw| {
        raw.sort_by_key(|r| r.2);
        raw.into_iter()
            .map(|(x, y, t, on)| {
                Event::new(x, y, t, if on { Polarity::On } else { Polarity::Off })
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Conservation: volume total equals the number of in-window events.
    #[test]
    fn binning_conserves_event_count(
        events in arb_stream(300),
        t_start in 0u64..8_000,
        dt in 1u64..4_000,
        bins in 1usize..8,
    ) {
        let v = bin_events(&events, t_start, dt, bins, 24, 32).unwrap();
        let in_window = events
            .iter()
            .filter(|e| e.t >= t_start && e.t < t_start + dt)
            .count() as u64;
        prop_assert_eq!(v.total(), in_window);
    }

    // Partition: summing all bins elementwise equals the B=1 volume.
    #[test]
    fn bins_partition_the_single_bin_volume(
        events in arb_stream(300),
        t_start in 0u64..8_000,
        dt in 1u64..4_000,
        bins in 2usize..8,
    ) {
        let multi = bin_events(&events, t_start, dt, bins, 24, 32).unwrap();
        let single = bin_events(&events, t_start, dt, 1, 24, 32).unwrap();
        let cell_stride = 2 * 24 * 32;
        for cell in 0..cell_stride {
            let summed: u32 = (0..bins).map(|b| multi.bin_slice(b)[cell]).sum();
            prop_assert_eq!(summed, single.bin_slice(0)[cell]);
        }
    }

    // Round-trip identity on valid streams.
    #[test]
    fn file_round_trip_is_identity(events in arb_stream(200)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stream.events");
        write_events(&events, 32, 24, &path).unwrap();
        let (header, back) = read_events(&path).unwrap();
        prop_assert_eq!(header.count as usize, events.len());
        prop_assert_eq!(back, events);
    }
}

// One million random sorted events: write, read, rewrite, byte-compare.
#[test]
fn million_event_round_trip_is_byte_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE5E17);
    let n = 1_000_000usize;
    let mut t = 0u64;
    let events: Vec<Event> = (0..n)
        .map(|_| {
            t += rng.gen_range(0..100);
            let p = if rng.gen_bool(0.5) { Polarity::On } else { Polarity::Off };
            Event::new(rng.gen_range(0..640), rng.gen_range(0..480), t, p)
        })
        .collect();

    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.events");
    let second = dir.path().join("second.events");
    write_events(&events, 640, 480, &first).unwrap();
    let (_, back) = read_events(&first).unwrap();
    assert_eq!(back.len(), n);
    write_events(&back, 640, 480, &second).unwrap();
    let a = std::fs::read(&first).unwrap();
    let b = std::fs::read(&second).unwrap();
    assert_eq!(a, b, "rewrite must be byte-identical");
}
