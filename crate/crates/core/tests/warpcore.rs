mod common;

use flowgate::frame::resize_bilinear;
use flowgate::synth::{generate_clip, SceneSpec, SpriteSpec, Texture, NoiseSpec};
use flowgate::warp::{backward_warp, occlusion_from_energy, occlusion_pipeline, splat_energy, EnergyThresholds};
use flowgate::{BorderMode, EnergyMap, FlowDirection, FlowField, Frame};
use proptest::prelude::*;

fn frame_strategy(max: usize) -> impl Strategy<Value = Frame> {
    (1..=max, 1..=max, 1..=3usize).prop_flat_map(|(h, w, c)| {
        proptest::collection::vec(0.0f64..=1.0, h * w * c).prop_map(move |d| Frame::new(h, w, c, d).unwrap())
    })
}

proptest! {
    #[test]
    fn zero_flow_warp_is_identity(f in frame_strategy(9)) {
        let z = FlowField::zeros(f.height(), f.width(), FlowDirection::Backward);
        prop_assert_eq!(&backward_warp(&f, &z, BorderMode::Clamp).unwrap(), &f);
        prop_assert_eq!(&backward_warp(&f, &z, BorderMode::Zero).unwrap(), &f);
    }

    #[test]
    fn in_bounds_splat_conserves_energy(h in 3usize..12, w in 3usize..12, seed in any::<u64>()) {
        let mut rng = flowgate::synth::SceneRng::new(seed);
        // Keep every target strictly inside so all four corners land in-bounds.
        let flow = FlowField::from_fn(h, w, FlowDirection::Forward, |i, j| {
            let ty = rng.uniform(0.0, (h - 1) as f64 - 1e-9);
            let tx = rng.uniform(0.0, (w - 1) as f64 - 1e-9);
            [tx - j as f64, ty - i as f64]
        })
        .unwrap();
        let e = splat_energy(&flow).unwrap();
        prop_assert!((e.total() - (h * w) as f64).abs() < 1e-4);
        prop_assert!(e.density().iter().all(|&d| d >= 0.0));
    }

    #[test]
    fn widening_thresholds_never_removes_valid(
        density in proptest::collection::vec(0.0f64..4.0, 30),
        lo in 0.0f64..1.0, hi in 1.0f64..3.0, dlo in 0.0f64..0.5, dhi in 0.0f64..1.0,
    ) {
        let e = EnergyMap::new(5, 6, density).unwrap();
        let narrow = occlusion_from_energy(&e, EnergyThresholds { lo, hi, eps: 1e-6 }).unwrap();
        let wide = occlusion_from_energy(&e, EnergyThresholds { lo: lo - dlo, hi: hi + dhi, eps: 1e-6 }).unwrap();
        for (a, b) in narrow.values().iter().zip(wide.values()) {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn resize_stays_within_input_range(f in frame_strategy(8), nh in 1usize..20, nw in 1usize..20) {
        let (lo, hi) = f.min_max();
        let r = resize_bilinear(&f, nh, nw).unwrap();
        let (rlo, rhi) = r.min_max();
        prop_assert!(rlo >= lo - 1e-6 && rhi <= hi + 1e-6);
    }
}

#[test]
fn hand_examples() {
    let src = Frame::new(1, 2, 1, vec![0.0, 1.0]).unwrap();
    let f = FlowField::new(1, 2, FlowDirection::Backward, vec![[0.5, 0.0], [0.0, 0.0]]).unwrap();
    assert_eq!(backward_warp(&src, &f, BorderMode::Clamp).unwrap().get(0, 0, 0), 0.5);

    let src = Frame::new(1, 3, 1, vec![0.1, 0.2, 0.3]).unwrap();
    let f = FlowField::uniform(1, 3, FlowDirection::Backward, [1.0, 0.0]);
    assert_eq!(backward_warp(&src, &f, BorderMode::Clamp).unwrap().data(), &[0.2, 0.3, 0.3]);

    let f = FlowField::new(1, 3, FlowDirection::Forward, vec![[2.0, 0.0], [0.0, 0.0], [0.0, 0.0]]).unwrap();
    let (e, m) = occlusion_pipeline(&f).unwrap();
    assert_eq!(e.density(), &[0.0, 1.0, 2.0]);
    assert_eq!(m.values(), &[0, 1, 0]);

    let f = FlowField::new(1, 2, FlowDirection::Forward, vec![[0.5, 0.0], [0.0, 0.0]]).unwrap();
    assert_eq!(splat_energy(&f).unwrap().density(), &[0.5, 1.5]);
}

/// Pixels where warping with the true flow ghosts are the ones the energy
/// mask flags.
#[test]
fn ghosting_is_covered_by_mask() {
    for (seed, velocity) in [(1u64, [4.0, 0.0]), (2, [-3.0, 2.0]), (3, [2.5, -1.5]), (4, [0.0, 5.0])] {
        let spec = SceneSpec {
            seed,
            height: 64,
            width: 64,
            num_frames: 3,
            background: Texture::Noise(NoiseSpec {
                seed: seed * 31,
                cell: 12.0,
                low: [0.05, 0.05, 0.05],
                high: [0.5, 0.55, 0.45],
            }),
            sprite: SpriteSpec {
                height: 20,
                width: 24,
                texture: Texture::Noise(NoiseSpec {
                    seed: seed * 31 + 1,
                    cell: 6.0,
                    low: [0.5, 0.45, 0.55],
                    high: [0.95, 0.95, 0.9],
                }),
                alpha: None,
            },
            start: [20.0, 18.0],
            velocity,
            allow_clipping: false,
        };
        let scene = generate_clip(&spec).unwrap();
        let gt = scene.ground_truth();
        let frames = scene.clip.frames();
        let warped = backward_warp(&frames[0], &gt.backward[0], BorderMode::Clamp).unwrap();
        let (_, mask) = occlusion_pipeline(&gt.forward[0]).unwrap();
        let (mut ghost, mut covered) = (0usize, 0usize);
        for i in 0..64 {
            for j in 0..64 {
                let err = (0..3).map(|c| (warped.get(i, j, c) - frames[1].get(i, j, c)).abs()).fold(0.0, f64::max);
                if err > 0.1 {
                    ghost += 1;
                    covered += usize::from(!mask.is_valid(i, j));
                }
            }
        }
        assert!(ghost > 0, "scene {seed} shows no ghosting");
        let frac = covered as f64 / ghost as f64;
        assert!(frac >= 0.8, "scene {seed}: only {frac:.3} of {ghost} ghost pixels masked");
    }
}
