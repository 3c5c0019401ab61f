use std::collections::BTreeSet;

use layoutcal::attention::{bilinear, locate_region, AttnMap, AttnStack, Grid, MapKind, PixelRegion, TensorFile};
use layoutcal::bench::{generate_benchmark, BenchConfig};
use layoutcal::layout::{parse_layout, LayoutConfig, RelationVocabulary};
use layoutcal::rectify::{adjustment_mask, inter_adjust, intra_adjust, rectify_stack, transfer_activation, LayerRegions, PlanEntry, RectificationPlan};
use layoutcal::layout::RelBox;
use layoutcal::sim::brute_force_locate;
use proptest::prelude::*;

/// Half-pixel bilinear sampling written out per output cell.
fn bilinear_oracle(src: &Grid, w: usize, h: usize) -> Vec<f64> {
    let sample = |x: f64, y: f64| {
        let x = x.max(0.0).min((src.width() - 1) as f64);
        let y = y.max(0.0).min((src.height() - 1) as f64);
        let (x0, y0) = (x.floor() as usize, y.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(src.width() - 1), (y0 + 1).min(src.height() - 1));
        let (fx, fy) = (x - x0 as f64, y - y0 as f64);
        let top = src.get(y0, x0) * (1.0 - fx) + src.get(y0, x1) * fx;
        let bottom = src.get(y1, x0) * (1.0 - fx) + src.get(y1, x1) * fx;
        top * (1.0 - fy) + bottom * fy
    };
    let mut out = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            let x = (c as f64 + 0.5) * src.width() as f64 / w as f64 - 0.5;
            let y = (r as f64 + 0.5) * src.height() as f64 / h as f64 - 0.5;
            out.push(sample(x, y));
        }
    }
    out
}

fn grid_strategy(max: usize, lo: f64, hi: f64) -> impl Strategy<Value = Grid> {
    (1..=max, 1..=max).prop_flat_map(move |(w, h)| {
        prop::collection::vec(lo..hi, w * h).prop_map(move |v| Grid::new(w, h, v).unwrap())
    })
}

#[test]
fn bilinear_two_to_four_by_hand() {
    let g = Grid::new(2, 2, vec![0.0, 4.0, 8.0, 12.0]).unwrap();
    let up = bilinear(&g, 4, 4);
    assert_eq!(&up.values()[0..4], &[0.0, 1.0, 3.0, 4.0]);
    assert_eq!(&up.values()[4..8], &[2.0, 3.0, 5.0, 6.0]);
    assert_eq!(&up.values()[12..16], &[8.0, 9.0, 11.0, 12.0]);
}

#[test]
fn transfer_resamples_two_by_two_into_four_by_four() {
    let g = Grid::from_fn(8, 8, |r, c| (r * 8 + c) as f64 * 0.1 - 2.0).unwrap();
    let src = PixelRegion::new(5, 7, 5, 7).unwrap();
    let dst = PixelRegion::new(0, 4, 0, 4).unwrap();
    let out = transfer_activation(&g, &src, &dst).unwrap();
    let expected = bilinear_oracle(&g.patch(&src), 4, 4);
    for r in 0..4 {
        for c in 0..4 {
            assert!((out.get(r, c) - expected[r * 4 + c]).abs() < 1e-6);
        }
    }
    // the vacated source keeps the map minimum
    for r in 5..7 {
        for c in 5..7 {
            assert_eq!(out.get(r, c), -2.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bilinear_matches_oracle(g in grid_strategy(9, -5.0, 5.0), w in 1usize..20, h in 1usize..20) {
        let fast = bilinear(&g, w, h);
        let oracle = bilinear_oracle(&g, w, h);
        for (a, b) in fast.values().iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn locate_matches_brute_force(g in grid_strategy(10, -1.0, 1.0), fw in 0.0f64..1.0, fh in 0.0f64..1.0, quantize in any::<bool>()) {
        // coarse values make exact ties common
        let g = if quantize {
            let mut q = g.clone();
            q.map_cells(|_, _, v| (v * 2.0).round());
            q
        } else { g };
        let w = 1 + (fw * (g.width() - 1) as f64) as usize;
        let h = 1 + (fh * (g.height() - 1) as f64) as usize;
        prop_assert_eq!(locate_region(&g, (w, h)).unwrap(), brute_force_locate(&g, (w, h)).unwrap());
    }

    #[test]
    fn window_too_large_is_rejected(g in grid_strategy(6, 0.0, 1.0)) {
        prop_assert!(locate_region(&g, (g.width() + 1, 1)).is_err());
        prop_assert!(brute_force_locate(&g, (1, g.height() + 1)).is_err());
    }

    #[test]
    fn transfer_moves_the_argmax(g in grid_strategy(10, 0.0, 1.0), seed in any::<u64>()) {
        let (w, h) = (g.width(), g.height());
        prop_assume!(w >= 2 && h >= 1);
        // window of width 1..w/2 picks distinct src and dst columns
        let ww = 1 + (seed as usize % (w / 2).max(1)).min(w / 2 - 1 + usize::from(w / 2 == 0));
        let src = PixelRegion::new(0, h, 0, ww).unwrap();
        let dst = PixelRegion::new(0, h, w - ww, w).unwrap();
        let mut g = g;
        g.set(0, 0, 2.0); // unique max inside src
        let out = transfer_activation(&g, &src, &dst).unwrap();
        let (mut best, mut at) = (f64::MIN, (0, 0));
        for r in 0..h {
            for c in 0..w {
                if out.get(r, c) > best {
                    best = out.get(r, c);
                    at = (r, c);
                }
            }
        }
        prop_assert!(dst.contains(at.0, at.1));
    }

    #[test]
    fn intra_ratio_is_alpha_squared(v in -50.0f64..50.0, alpha in 0.05f64..50.0) {
        prop_assume!(v.abs() > 1e-6);
        let g = Grid::new(2, 1, vec![v, v]).unwrap();
        let out = intra_adjust(&g, &PixelRegion::new(0, 1, 0, 1).unwrap(), alpha).unwrap();
        let ratio = out.values()[0] / out.values()[1];
        prop_assert!((ratio - alpha * alpha).abs() <= 1e-9 * alpha * alpha);
    }

    // spreads past ~36 underflow the softmax below half an ulp of 1.0,
    // where 1 - s rounds to exactly 1
    #[test]
    fn mask_is_bounded_and_monotone(g in grid_strategy(8, -15.0, 15.0), other in -10.0f64..10.0) {
        let m = adjustment_mask(&g);
        let max = g.max();
        let total: f64 = g.values().iter().map(|v| (v - max).exp()).sum();
        let soft: Vec<f64> = g.values().iter().map(|v| (v - max).exp() / total).collect();
        for (i, &mi) in m.values().iter().enumerate() {
            prop_assert!((0.0..1.0).contains(&mi));
            for (j, &mj) in m.values().iter().enumerate() {
                if g.values()[i] > g.values()[j] {
                    prop_assert!(mi <= mj);
                    if soft[i] - soft[j] > 1e-15 {
                        prop_assert!(mi < mj);
                    }
                }
            }
        }
        let layer = AttnMap::new(MapKind::Logits, vec![g.clone(), Grid::filled(g.width(), g.height(), other)]).unwrap();
        let out = inter_adjust(&layer, 0).unwrap();
        prop_assert_eq!(out.token(0), &g);
        for v in out.token(1).values() {
            prop_assert!(v * other >= 0.0);
            prop_assert!(v.abs() <= other.abs());
        }
    }

    #[test]
    fn rectification_respects_skip_layers(seed in 0u64..1000, n_layers in 1usize..5, k in 0usize..3) {
        let layers = (0..n_layers).map(|l| {
            let grids = (0..3).map(|t| Grid::from_fn(6, 6, |r, c| ((seed as usize + r * 7 + c * 3 + t * 11 + l) % 17) as f64 - 8.0).unwrap()).collect();
            AttnMap::new(MapKind::Logits, grids).unwrap()
        }).collect();
        let stack = AttnStack::new(1, layers).unwrap();
        let src = PixelRegion::new(3, 6, 3, 6).unwrap();
        let dst = PixelRegion::new(0, 3, 0, 3).unwrap();
        let plan = RectificationPlan {
            merged_width: 6, merged_height: 6,
            entries: vec![PlanEntry {
                object: 0, token: k, target_box: RelBox::new(0.25, 0.25, 0.5, 0.5).unwrap(), source: src, target: dst,
                layers: vec![LayerRegions { width: 6, height: 6, source: src, target: dst }; n_layers],
            }],
        };
        let skip: BTreeSet<usize> = [1, n_layers].into();
        let out = rectify_stack(&stack, &plan, 10.0, &skip).unwrap();
        for l in 0..n_layers {
            if skip.contains(&(l + 1)) {
                prop_assert_eq!(out.layer(l), stack.layer(l));
            } else {
                // other tokens only ever see the mask of the edited map
                let mask = adjustment_mask(out.layer(l).token(k));
                for g in (0..3).filter(|g| *g != k) {
                    for (i, v) in out.layer(l).token(g).values().iter().enumerate() {
                        prop_assert_eq!(*v, stack.layer(l).token(g).values()[i] * mask.values()[i]);
                    }
                }
            }
        }
    }

    #[test]
    fn tensor_file_round_trip(values in prop::collection::vec(-1e6f32..1e6, 2 * 4 * 4 * 3 + 2 * 2 * 2 * 3)) {
        let mut it = values.into_iter().map(f64::from);
        let mut stacks = Vec::new();
        for step in [2usize, 1] {
            let layers = [(4usize, 4usize), (2, 2)].iter().map(|&(w, h)| {
                let grids: Vec<Vec<f64>> = vec![Vec::new(); 3];
                let mut grids = grids;
                for _ in 0..w * h {
                    for g in grids.iter_mut() {
                        g.push(it.next().unwrap());
                    }
                }
                AttnMap::new(MapKind::Logits, grids.into_iter().map(|v| Grid::new(w, h, v).unwrap()).collect()).unwrap()
            }).collect();
            stacks.push(AttnStack::new(step, layers).unwrap());
        }
        let file = TensorFile::new(stacks).unwrap();
        let bytes = file.to_bytes();
        let back = TensorFile::from_bytes(&bytes).unwrap();
        prop_assert_eq!(&back, &file);
        prop_assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn truncated_tensor_files_fail(cut in 1usize..40) {
        let g = Grid::filled(4, 4, 1.0);
        let stack = AttnStack::new(1, vec![AttnMap::new(MapKind::Logits, vec![g]).unwrap()]).unwrap();
        let bytes = TensorFile::new(vec![stack]).unwrap().to_bytes();
        prop_assert!(TensorFile::from_bytes(&bytes[..bytes.len() - cut]).is_err());
    }

    #[test]
    fn bench_boxes_stay_in_the_unit_square(seed in 0u64..500) {
        let prompts = generate_benchmark(5, &BenchConfig { seed, ..Default::default() }).unwrap();
        for p in prompts {
            let layout = parse_layout(&p.text, &RelationVocabulary::default(), &LayoutConfig::default()).unwrap();
            for b in &layout.boxes {
                prop_assert!(b.x0() >= -1e-12 && b.y0() >= -1e-12 && b.x1() <= 1.0 + 1e-12 && b.y1() <= 1.0 + 1e-12);
                prop_assert!(b.w >= 0.1 - 1e-12 && b.h >= 0.1 - 1e-12);
            }
        }
    }
}

#[test]
fn relative_chains_keep_their_order() {
    let vocab = RelationVocabulary::default();
    let cfg = LayoutConfig::default();
    let cases = [
        ("a dog to the left of a cat", 0usize, 1usize, true),
        ("a dog to the right of a cat", 1, 0, true),
        ("a bird above a horse", 0, 1, false),
        ("a bird below a horse", 1, 0, false),
        ("a cat to the left of a dog and a dog to the left of a bus", 0, 2, true),
    ];
    for (prompt, first, second, horizontal) in cases {
        let l = parse_layout(prompt, &vocab, &cfg).unwrap();
        let (a, b) = (l.box_of(first), l.box_of(second));
        if horizontal {
            assert!(a.x1() <= b.x0() + 1e-12, "{prompt}");
        } else {
            assert!(a.y1() <= b.y0() + 1e-12, "{prompt}");
        }
    }
}
