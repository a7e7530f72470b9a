//! Acceptance suite. Each test prints one PASS/FAIL line for its criterion
//! and then asserts it. Every tolerance and budget is pinned below.

mod common;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{grid_clip, random_label, random_shape, report};
use videomix::localize::{
    average_precision, default_thresholds, evaluate_map, extract_proposals, GtSegment, Proposal, ProposalConfig,
    TCam,
};
use videomix::mixers::{videomix_batch, videomix_multi, BatchMixConfig, MixSource};
use videomix::sampler::{build_mask, exact_fraction, sample_lambda, Mask};
use videomix::stcam::{st_cam, FeatureMap};
use videomix::tensor::BatchItem;
use videomix::toylab::{
    run_experiment, soft_ce_loss, Augmentation, ExperimentConfig, SyntheticSpec, ToyModel, TrainConfig,
};
use videomix::vct::{read_vct, write_vct, Dtype};
use videomix::wstal::{gen_feature_videos, localization_report, train_head, FeatureVideoSpec, HeadTrainConfig};
use videomix::{ClipBatch, Extent, MixVariant, RngStream, Shape, SoftLabel, VideoClip};

const C1_INSTANCES: usize = 200;
const C1_BUDGET: Duration = Duration::from_secs(10);
const C2_MIXES: usize = 10_000;
const C2_TOL: f64 = 1e-9;
const C3_INSTANCES: usize = 2_000;
const C4_DRAWS: usize = 100_000;
const C4_MEAN_RANGE: (f64, f64) = (0.48, 0.52);
const C4_TAIL_RANGE: (f64, f64) = (0.60, 0.72);
const C4_ORACLE_TOL: f64 = 0.01;
const C5_INSTANCES: usize = 50;
const C5_REL_TOL: f64 = 1e-4;
const C5_EPS: f64 = 1e-5;
const C6_SEEDS: u64 = 5;
const C6_BUDGET: Duration = Duration::from_secs(300);
const C7_SEEDS: u64 = 5;
const C7_BUDGET: Duration = Duration::from_secs(120);
const C9_CLIPS: usize = 1_000;
const C9_U8_TOL: f32 = 1.0 / 510.0;
const C10_LINEAR_TOL: f64 = 1e-6;

fn bits(clip: &VideoClip) -> Vec<u32> {
    clip.data().iter().map(|v| v.to_bits()).collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn criterion_01_mix_equals_mask_and_ownership_oracles() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut failures = Vec::new();
    for case in 0..C1_INSTANCES {
        let shape = random_shape(&mut rng, 6, 9, 3);
        let extent = Extent::from(shape);
        let variant = MixVariant::ALL[case % 4];
        let n_videos = 2 + (case / 4) % 3;
        let classes = rng.random_range(2..6);
        let clips: Vec<VideoClip> = (0..n_videos).map(|_| grid_clip(shape, &mut rng)).collect();
        let labels: Vec<SoftLabel> = (0..n_videos).map(|_| random_label(&mut rng, classes)).collect();
        let ids: Vec<String> = (0..n_videos).map(|i| format!("v{i}")).collect();
        let sources: Vec<MixSource> = (0..n_videos)
            .map(|i| MixSource {
                id: &ids[i],
                clip: &clips[i],
                label: &labels[i],
            })
            .collect();
        let alpha = [0.2, 1.0, 2.0][case % 3];
        let (out, label, recipe) =
            videomix_multi(sources[0], &sources[1..], variant, alpha, RngStream::new(case as u64)).unwrap();

        // per-voxel ownership: the last paste whose cuboids contain the voxel
        let mut owners = vec![0usize; extent.voxels()];
        let mut ownership = clips[0].data().to_vec();
        for t in 0..shape.frames {
            for h in 0..shape.height {
                for w in 0..shape.width {
                    let mut owner = 0;
                    for (j, paste) in recipe.pastes.iter().enumerate() {
                        if paste.cuboids.iter().any(|c| c.contains(t, h, w)) {
                            owner = j + 1;
                        }
                    }
                    owners[(t * shape.height + h) * shape.width + w] = owner;
                    for c in 0..shape.channels {
                        let i = shape.offset(t, h, w, c);
                        ownership[i] = clips[owner].data()[i];
                    }
                }
            }
        }

        // mask formula: x <- K * x + (1 - K) * x_j with K the keep mask
        let mut formula = clips[0].data().to_vec();
        for (j, paste) in recipe.pastes.iter().enumerate() {
            let m = Mask::from_cuboids(&paste.cuboids, extent).unwrap();
            for t in 0..shape.frames {
                for h in 0..shape.height {
                    for w in 0..shape.width {
                        let keep = if m.get(t, h, w) { 0.0f32 } else { 1.0f32 };
                        for c in 0..shape.channels {
                            let i = shape.offset(t, h, w, c);
                            formula[i] = keep * formula[i] + (1.0 - keep) * clips[j + 1].data()[i];
                        }
                    }
                }
            }
        }

        let total = extent.voxels() as f64;
        let mut expected = vec![0.0; classes];
        for (j, l) in labels.iter().enumerate() {
            let frac = owners.iter().filter(|&&o| o == j).count() as f64 / total;
            for (e, m) in expected.iter_mut().zip(l.masses()) {
                *e += frac * m;
            }
        }

        let out_bits = bits(&out);
        let ok = out_bits == ownership.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            && out_bits == formula.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            && label.masses() == expected.as_slice();
        if !ok {
            failures.push(format!("case {case} {variant} n={n_videos} {shape}"));
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < C1_BUDGET;
    report(
        1,
        pass,
        &format!("{C1_INSTANCES} instances, {} mismatches, {:.2?} (budget {:?})", failures.len(), elapsed, C1_BUDGET),
    );
    assert!(failures.is_empty(), "{failures:?}");
    assert!(elapsed < C1_BUDGET);
}

#[test]
fn criterion_02_label_mass_conservation() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    let mut negatives = 0usize;
    for case in 0..C2_MIXES {
        let shape = random_shape(&mut rng, 4, 6, 1);
        let classes = rng.random_range(2..8);
        let n = rng.random_range(2..=4);
        let clips: Vec<VideoClip> = (0..n).map(|_| VideoClip::zeros(shape).unwrap()).collect();
        let labels: Vec<SoftLabel> = (0..n).map(|_| random_label(&mut rng, classes)).collect();
        let sources: Vec<MixSource> = (0..n)
            .map(|i| MixSource {
                id: "x",
                clip: &clips[i],
                label: &labels[i],
            })
            .collect();
        let variant = MixVariant::ALL[case % 4];
        let alpha = rng.random_range(0.1..3.0);
        let (_, label, _) = videomix_multi(sources[0], &sources[1..], variant, alpha, RngStream::new(case as u64)).unwrap();
        worst = worst.max((label.masses().iter().sum::<f64>() - 1.0).abs());
        negatives += label.masses().iter().filter(|&&m| m < 0.0).count();
    }
    let pass = worst <= C2_TOL && negatives == 0;
    report(2, pass, &format!("{C2_MIXES} mixes, max |sum-1| = {worst:e}, negative entries = {negatives}"));
    assert!(pass);
}

#[test]
fn criterion_03_exact_fraction_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut mismatches = 0usize;
    for case in 0..C3_INSTANCES {
        let shape = random_shape(&mut rng, 8, 12, 1);
        let extent = Extent::from(shape);
        let variant = MixVariant::ALL[case % 4];
        let (a, b) = (VideoClip::zeros(shape).unwrap(), VideoClip::zeros(shape).unwrap());
        let y = SoftLabel::one_hot(0, 2).unwrap();
        let (_, _, recipe) = videomix_multi(
            MixSource { id: "a", clip: &a, label: &y },
            &[MixSource { id: "b", clip: &b, label: &y }],
            variant,
            1.0,
            RngStream::new(case as u64),
        )
        .unwrap();
        let cuboids = &recipe.pastes[0].cuboids;
        let mask = Mask::from_cuboids(cuboids, extent).unwrap();
        let keep_mask_mean = mask.data().iter().filter(|&&m| m == 0).count() as f64 / extent.voxels() as f64;
        let mut ok = recipe.keep_fraction.get() == keep_mask_mean && recipe.cut_fraction.get() == mask.mean();
        if cuboids.len() == 1 {
            ok &= exact_fraction(&cuboids[0], extent).unwrap().get() == build_mask(&cuboids[0], extent).unwrap().mean();
            ok &= recipe.cut_fraction.get() == exact_fraction(&cuboids[0], extent).unwrap().get();
        }
        ok &= recipe.keep_fraction.get() + recipe.cut_fraction.get() == 1.0;
        if !ok {
            mismatches += 1;
        }
    }
    report(3, mismatches == 0, &format!("{C3_INSTANCES} instances, {mismatches} mismatches"));
    assert_eq!(mismatches, 0);
}

/// `P(lambda < x)` for `Beta(a, a)`, `a < 1`, by Simpson integration after
/// substituting `x = u^(1/a)`, which removes the endpoint singularity.
fn beta_sym_cdf(a: f64, x: f64) -> f64 {
    let integral = |upper: f64| {
        let n = 20_000;
        let h = upper / n as f64;
        let f = |u: f64| (1.0 - u.powf(1.0 / a)).powf(a - 1.0) / a;
        let mut s = f(0.0) + f(upper);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let half = integral(0.5f64.powf(a));
    integral(x.powf(a)) / (2.0 * half)
}

#[test]
fn criterion_04_beta_sampler_distribution() {
    let mut gen = RngStream::new(404).generator();
    let mean = (0..C4_DRAWS).map(|_| sample_lambda(1.0, &mut gen).unwrap().get()).sum::<f64>() / C4_DRAWS as f64;
    let mut gen = RngStream::new(405).generator();
    let tail = (0..C4_DRAWS)
        .filter(|_| {
            let l = sample_lambda(0.2, &mut gen).unwrap().get();
            !(0.1..=0.9).contains(&l)
        })
        .count() as f64
        / C4_DRAWS as f64;
    let oracle = 2.0 * beta_sym_cdf(0.2, 0.1);
    let pass = (C4_MEAN_RANGE.0..=C4_MEAN_RANGE.1).contains(&mean)
        && (C4_TAIL_RANGE.0..=C4_TAIL_RANGE.1).contains(&tail)
        && (tail - oracle).abs() < C4_ORACLE_TOL;
    report(
        4,
        pass,
        &format!("alpha=1 mean {mean:.4}; alpha=0.2 tail {tail:.4} vs integrated {oracle:.4}"),
    );
    assert!(pass);
}

#[test]
fn criterion_05_gradient_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst = 0.0f64;
    for case in 0..C5_INSTANCES {
        let shape = Shape::new(2 * rng.random_range(1..3), 4 * rng.random_range(1..3), 4 * rng.random_range(1..3), rng.random_range(1..4));
        let classes = rng.random_range(2..6);
        let mut model = ToyModel::new(shape, classes, case as u64).unwrap();
        model.weights.iter_mut().for_each(|w| *w = rng.random_range(-2.0..2.0));
        model.bias.iter_mut().for_each(|b| *b = rng.random_range(-1.0..1.0));
        let clip = grid_clip(shape, &mut rng);
        let label = random_label(&mut rng, classes);
        let (_, grad) = model.loss_and_grad(&clip, &label).unwrap();
        let loss_at = |m: &ToyModel| m.loss_and_grad(&clip, &label).unwrap().0;
        let n_w = model.weights.len();
        for p in 0..n_w + classes {
            let mut plus = model.clone();
            let mut minus = model.clone();
            let analytic = if p < n_w {
                plus.weights[p] += C5_EPS;
                minus.weights[p] -= C5_EPS;
                grad.weights[p]
            } else {
                plus.bias[p - n_w] += C5_EPS;
                minus.bias[p - n_w] -= C5_EPS;
                grad.bias[p - n_w]
            };
            let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * C5_EPS);
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3);
            worst = worst.max(rel);
        }
        // logit-level check of the loss itself
        let logits: Vec<f64> = (0..classes).map(|_| rng.random_range(-5.0..5.0)).collect();
        let (_, g) = soft_ce_loss(&logits, &label).unwrap();
        for k in 0..classes {
            let mut lp = logits.clone();
            let mut lm = logits.clone();
            lp[k] += C5_EPS;
            lm[k] -= C5_EPS;
            let numeric = (soft_ce_loss(&lp, &label).unwrap().0 - soft_ce_loss(&lm, &label).unwrap().0) / (2.0 * C5_EPS);
            worst = worst.max((g[k] - numeric).abs() / g[k].abs().max(numeric.abs()).max(1e-3));
        }
    }
    report(5, worst < C5_REL_TOL, &format!("{C5_INSTANCES} instances, worst relative error {worst:e}"));
    assert!(worst < C5_REL_TOL);
}

#[test]
fn criterion_06_videomix_reduces_scene_bias() {
    let start = Instant::now();
    let run = |aug: Augmentation| -> (Vec<f64>, Vec<f64>) {
        (0..C6_SEEDS)
            .map(|seed| {
                let cfg = ExperimentConfig {
                    data: SyntheticSpec {
                        seed,
                        ..SyntheticSpec::default()
                    },
                    train: TrainConfig {
                        aug,
                        seed,
                        ..TrainConfig::default()
                    },
                };
                let out = run_experiment(&cfg).unwrap();
                (out.test_top1, out.metrics.last().unwrap().val_loss)
            })
            .unzip()
    };
    let (acc_none, loss_none) = run(Augmentation::None);
    let (acc_mix, loss_mix) = run(Augmentation::VideoMix(MixVariant::Spatial));
    let elapsed = start.elapsed();
    let (a0, a1, l0, l1) = (median(acc_none), median(acc_mix), median(loss_none), median(loss_mix));
    let pass = a1 > a0 && l1 < l0 && elapsed < C6_BUDGET;
    report(
        6,
        pass,
        &format!(
            "median test top-1 none {a0:.4} vs spatial {a1:.4} (margin {:+.4}); median val loss none {l0:.4} vs spatial {l1:.4}; {:.1?}",
            a1 - a0,
            elapsed
        ),
    );
    assert!(elapsed < C6_BUDGET);
    assert!(a1 > a0, "VideoMix median top-1 {a1} does not exceed baseline {a0}");
    assert!(l1 < l0, "VideoMix median val loss {l1} is not below baseline {l0}");
}

fn prop(start: usize, end: usize, score: f64) -> Proposal {
    Proposal {
        video_id: "v".into(),
        class: 0,
        start,
        end,
        score,
    }
}

fn gt(start: usize, end: usize) -> GtSegment {
    GtSegment {
        video_id: "v".into(),
        class: 0,
        start,
        end,
    }
}

#[test]
fn criterion_07_localization_benchmark() {
    let th = default_thresholds();
    let fixture_ok = average_precision(&[prop(0, 6, 1.0)], &[gt(0, 10)], 0, 0.5) == Some(1.0)
        && average_precision(&[prop(20, 30, 0.9), prop(0, 10, 0.4)], &[gt(0, 10)], 0, 0.5) == Some(0.5)
        && evaluate_map(&[prop(0, 11, 1.0)], &[gt(0, 20)], &th).map == 5.0 / 9.0;

    let start = Instant::now();
    let run = |featmix: bool| -> Vec<f64> {
        (0..C7_SEEDS)
            .map(|seed| {
                let spec = FeatureVideoSpec {
                    seed,
                    ..FeatureVideoSpec::default()
                };
                let (train, _) = gen_feature_videos(&spec, 0).unwrap();
                let (test, gts) = gen_feature_videos(&spec, 1).unwrap();
                let head = train_head(
                    &train,
                    &HeadTrainConfig {
                        featmix,
                        seed,
                        ..HeadTrainConfig::default()
                    },
                )
                .unwrap();
                localization_report(&head, &test, &gts, &th).unwrap().map
            })
            .collect()
    };
    let (base, mixed) = (median(run(false)), median(run(true)));
    let elapsed = start.elapsed();
    let pass = fixture_ok && mixed >= base && elapsed < C7_BUDGET;
    report(
        7,
        pass,
        &format!(
            "fixtures {}; median mAP@[0.1:0.9] none {base:.4} vs temporal mix {mixed:.4} (margin {:+.4}); {:.1?}",
            if fixture_ok { "exact" } else { "WRONG" },
            mixed - base,
            elapsed
        ),
    );
    assert!(fixture_ok);
    assert!(elapsed < C7_BUDGET);
    assert!(mixed >= base, "feature mixing median mAP {mixed} below baseline {base}");
}

#[test]
fn criterion_08_tcam_threshold_fixture() {
    let cam = TCam::new(5, 1, vec![0.1, 0.9, 0.8, 0.2, 0.6]).unwrap();
    let spans: Vec<(usize, usize)> = extract_proposals(&cam, 0, "v", &ProposalConfig::default())
        .iter()
        .map(|p| (p.start, p.end))
        .collect();
    let pass = spans == vec![(1, 3), (4, 5)];
    report(8, pass, &format!("proposals {spans:?}"));
    assert!(pass);
}

#[test]
fn criterion_09_vct_roundtrip() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut f32_failures = 0usize;
    let mut worst_u8 = 0.0f32;
    for _ in 0..C9_CLIPS {
        let shape = random_shape(&mut rng, 4, 8, 3);
        let raw: Vec<f32> = (0..shape.len())
            .map(|_| f32::from_bits(rng.random::<u32>()))
            .map(|v| if v.is_finite() { v } else { 0.5 })
            .collect();
        let clip = VideoClip::new(shape, raw).unwrap();
        if bits(&read_vct(&write_vct(&clip, Dtype::F32).unwrap()).unwrap()) != bits(&clip) {
            f32_failures += 1;
        }
        let unit = VideoClip::new(shape, (0..shape.len()).map(|_| rng.random::<f32>()).collect()).unwrap();
        let back = read_vct(&write_vct(&unit, Dtype::U8).unwrap()).unwrap();
        for (a, b) in unit.data().iter().zip(back.data()) {
            worst_u8 = worst_u8.max((a - b).abs());
        }
    }
    let pass = f32_failures == 0 && worst_u8 <= C9_U8_TOL;
    report(
        9,
        pass,
        &format!("{C9_CLIPS} clips, f32 mismatches {f32_failures}, worst u8 error {worst_u8:e} (limit {C9_U8_TOL:e})"),
    );
    assert!(pass);
}

#[test]
fn criterion_10_stcam_linearity_and_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut worst_linear = 0.0f64;
    let mut oracle_mismatch = 0usize;
    for _ in 0..50 {
        let channels = rng.random_range(1..8);
        let extent = Extent::new(rng.random_range(1..5), rng.random_range(1..6), rng.random_range(1..6));
        let data: Vec<f64> = (0..channels * extent.voxels()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let fm = FeatureMap::new(channels, extent, data).unwrap();
        let w1: Vec<f64> = (0..channels).map(|_| rng.random_range(-2.0..2.0)).collect();
        let w2: Vec<f64> = (0..channels).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let combo: Vec<f64> = w1.iter().zip(&w2).map(|(x, y)| a * x + b * y).collect();
        let (c1, c2, cc) = (st_cam(&fm, &w1).unwrap(), st_cam(&fm, &w2).unwrap(), st_cam(&fm, &combo).unwrap());
        for i in 0..cc.volume.len() {
            worst_linear = worst_linear.max((cc.volume[i] - (a * c1.volume[i] + b * c2.volume[i])).abs());
        }
        for t in 0..extent.frames {
            for h in 0..extent.height {
                for w in 0..extent.width {
                    let mut acc = 0.0;
                    for (c, wc) in w1.iter().enumerate() {
                        acc += fm.get(c, t, h, w) * wc;
                    }
                    if acc.to_bits() != c1.get(t, h, w).to_bits() {
                        oracle_mismatch += 1;
                    }
                }
            }
        }
    }
    let pass = worst_linear < C10_LINEAR_TOL && oracle_mismatch == 0;
    report(10, pass, &format!("worst linearity residual {worst_linear:e}, oracle mismatches {oracle_mismatch}"));
    assert!(pass);
}

fn cli_determinism() -> Vec<String> {
    use std::process::Command;
    let bin = env!("CARGO_BIN_EXE_videomix");
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    let shape = Shape::new(4, 8, 8, 3);
    std::fs::write(p("a.vct"), write_vct(&grid_clip(shape, &mut rng), Dtype::F32).unwrap()).unwrap();
    std::fs::write(p("b.vct"), write_vct(&grid_clip(shape, &mut rng), Dtype::F32).unwrap()).unwrap();
    std::fs::write(
        p("labels.jsonl"),
        "{\"id\":\"a\",\"label\":[1.0,0.0,0.0]}\n{\"id\":\"b\",\"label\":[0.0,0.0,1.0]}\n",
    )
    .unwrap();
    let tcam: Vec<f32> = (0..40).map(|i| ((i * 7) % 11) as f32 / 10.0 - 0.3).collect();
    std::fs::write(p("vid.vct"), write_vct(&VideoClip::new(Shape::new(20, 1, 1, 2), tcam).unwrap(), Dtype::F32).unwrap())
        .unwrap();
    std::fs::write(p("gt.json"), "[{\"video_id\":\"vid\",\"class\":0,\"start\":2,\"end\":9}]").unwrap();
    let fmap: Vec<f32> = (0..2 * 3 * 3 * 4).map(|i| (i % 5) as f32 - 2.0).collect();
    std::fs::write(p("fmap.vct"), write_vct(&VideoClip::new(Shape::new(2, 3, 3, 4), fmap).unwrap(), Dtype::F32).unwrap())
        .unwrap();
    std::fs::write(p("head.json"), "{\"weights\":[[1,0,-1,0.5],[0,1,0,-1]],\"bias\":[0,0]}").unwrap();
    std::fs::write(
        p("toy.cfg"),
        "clips_per_class = 4\nframes = 4\nheight = 8\nwidth = 8\nepochs = 2\nbatch_size = 4\naug = videomix-st\n",
    )
    .unwrap();

    let s = |x: &str| x.to_owned();
    let path = |x: &str| p(x).to_string_lossy().into_owned();
    let commands: Vec<(&str, Vec<String>, Vec<String>)> = vec![
        (
            "augment",
            vec![s("augment"), s("--a"), path("a.vct"), s("--b"), path("b.vct"), s("--labels"), path("labels.jsonl"),
                 s("--variant"), s("st"), s("--alpha"), s("1.0"), s("--seed"), s("7"), s("--out"), path("mix.vct")],
            vec![path("mix.vct"), path("mix.vct.label.jsonl"), path("mix.vct.recipe.json")],
        ),
        (
            "sample-mask",
            vec![s("sample-mask"), s("--variant"), s("perframe"), s("--seed"), s("3"), s("--frames"), s("4"),
                 s("--height"), s("9"), s("--width"), s("7"), s("--out"), path("mask.vct")],
            vec![path("mask.vct")],
        ),
        (
            "train-toy",
            vec![s("train-toy"), s("--config"), path("toy.cfg"), s("--out-csv"), path("metrics.csv")],
            vec![path("metrics.csv")],
        ),
        (
            "eval-wstal",
            vec![s("eval-wstal"), s("--tcam"), path("vid.vct"), s("--gt"), path("gt.json")],
            vec![],
        ),
        (
            "cam",
            vec![s("cam"), s("--features"), path("fmap.vct"), s("--weights"), path("head.json"), s("--class"), s("0"),
                 s("--height"), s("6"), s("--width"), s("6"), s("--out"), path("cam.vct")],
            vec![path("cam.vct")],
        ),
    ];
    let mut failures = Vec::new();
    for (name, args, outputs) in commands {
        let mut runs = Vec::new();
        for _ in 0..2 {
            let out = Command::new(bin).args(&args).output().unwrap();
            let files: Vec<Vec<u8>> = outputs.iter().map(|f| std::fs::read(f).unwrap_or_default()).collect();
            runs.push((out.status.code(), out.stdout, files));
        }
        if runs[0].0 != Some(0) || runs[0] != runs[1] {
            failures.push(name.to_owned());
        }
    }
    failures
}

fn batch_under_pool(threads: usize, batch: &ClipBatch, cfg: &BatchMixConfig) -> Vec<(Vec<u32>, Vec<f64>)> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| videomix_batch(batch, cfg, RngStream::new(77).with_epoch(3).with_batch(5)).unwrap())
        .items
        .into_iter()
        .map(|m| (bits(&m.clip), m.label.masses().to_vec()))
        .collect()
}

#[test]
fn criterion_11_determinism() {
    let cli_failures = cli_determinism();
    let mut rng = ChaCha8Rng::seed_from_u64(1112);
    let shape = Shape::new(4, 9, 9, 3);
    let batch = ClipBatch::new(
        (0..16)
            .map(|i| BatchItem {
                id: format!("item{i}"),
                clip: grid_clip(shape, &mut rng),
                label: SoftLabel::one_hot(i % 5, 5).unwrap(),
            })
            .collect(),
    )
    .unwrap();
    let mut pool_mismatch = Vec::new();
    for variant in MixVariant::ALL {
        for n_videos in 2..=4 {
            let cfg = BatchMixConfig {
                n_videos,
                ..BatchMixConfig::new(variant, 1.0)
            };
            if batch_under_pool(1, &batch, &cfg) != batch_under_pool(4, &batch, &cfg) {
                pool_mismatch.push(format!("{variant}/{n_videos}"));
            }
        }
    }
    let pass = cli_failures.is_empty() && pool_mismatch.is_empty();
    report(
        11,
        pass,
        &format!("CLI subcommands differing across runs: {cli_failures:?}; batch results differing for 1 vs 4 threads: {pool_mismatch:?}"),
    );
    assert!(pass);
}
