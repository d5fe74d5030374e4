//! Acceptance gate: nine end-to-end properties of the detector, the three
//! matching stages, the error measures and the batch runner. Each prints
//! one PASS/FAIL line; any failure makes the process exit nonzero.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use stratasift::eval::{
    compute_error_measures, d_prime, equal_error_threshold, sweep_thresholds, ComparisonScore,
    Label, ScoreRecord, StratumLevel,
};
use stratasift::harness::{
    generate_synthetic, map_point, run_experiment, write_experiment, CacheLocation,
    ExperimentOptions, GroundTruth, SyntheticGenerator, TransformSpec,
};
use stratasift::keypoint::{descriptor_distance, Keypoint, KeypointSet, DESCRIPTOR_LEN};
use stratasift::matching::{match_keypoints, strata1_match, MatchSet};
use stratasift::sift::detect;
use stratasift::{IrisImage, PipelineConfig, SiftParams};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn keypoints(image: &IrisImage) -> KeypointSet {
    detect(image, &SiftParams::default()).expect("detection succeeds on synthetic images")
}

fn random_descriptor(rng: &mut impl Rng) -> Vec<f32> {
    let mut v: Vec<f32> = (0..DESCRIPTOR_LEN).map(|_| rng.random::<f32>()).collect();
    let n = v.iter().map(|x| x * x).sum::<f32>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}

fn at_polar(center: f64, rho: f64, deg: f64, descriptor: Vec<f32>) -> Keypoint {
    let (s, c) = deg.to_radians().sin_cos();
    Keypoint {
        x: center + rho * c,
        y: center + rho * s,
        sigma: 2.0,
        orientation: 0.0,
        descriptor,
    }
}

fn pair_set(m: &MatchSet) -> HashSet<(usize, usize)> {
    m.pairs.iter().map(|p| (p.i, p.j)).collect()
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Rnew ⊆ Rinter ⊆ R on 200 seeded synthetic comparisons.
fn subset_monotonicity() -> Outcome {
    let generator = SyntheticGenerator::new(1001, TransformSpec::default()).map_err(|e| e.to_string())?;
    let subjects = 40;
    let sets: Vec<Vec<KeypointSet>> = (0..subjects)
        .into_par_iter()
        .map(|s| {
            generator
                .subject_instances(s, 3)
                .expect("render")
                .iter()
                .map(|inst| keypoints(&inst.image))
                .collect()
        })
        .collect();
    let radii: Vec<Vec<u32>> = (0..subjects)
        .map(|s| generator.transforms(s, 3).into_iter().map(|t| t.1).collect())
        .collect();
    let mut comparisons = Vec::new();
    for s in 0..subjects {
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            comparisons.push(((s, a), (s, b)));
        }
        comparisons.push(((s, 0), ((s + 1) % subjects, 1)));
        comparisons.push(((s, 2), ((s + 7) % subjects, 0)));
    }
    let config = PipelineConfig::default();
    let mut strict = 0;
    for &((gs, gi), (ps, pi)) in &comparisons {
        let r = match_keypoints(
            &sets[gs][gi],
            f64::from(radii[gs][gi]),
            &sets[ps][pi],
            f64::from(radii[ps][pi]),
            &config,
        )
        .map_err(|e| e.to_string())?;
        let (all, inter, new) = (pair_set(&r.r), pair_set(&r.rinter), pair_set(&r.rnew));
        ensure(new.is_subset(&inter) && inter.is_subset(&all), || {
            format!("inclusion broken for ({gs},{gi}) vs ({ps},{pi})")
        })?;
        if new.len() < all.len() {
            strict += 1;
        }
    }
    Ok(format!(
        "{} comparisons, all nested; {strict} with pairs removed",
        comparisons.len()
    ))
}

/// Strata II peak within one bin of the true rotation in at least 90% of trials.
fn rotation_recovery() -> Outcome {
    let generator = SyntheticGenerator::new(2002, TransformSpec::default()).map_err(|e| e.to_string())?;
    let angles = [10.0, 45.0, 90.0, 180.0, 300.0];
    let trials = 50;
    let config = PipelineConfig::default();
    let hits: Vec<[bool; 5]> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let texture = generator.texture(t);
            let base = texture.render_instance(64, 0.0, 0.0, 0, "base").expect("render");
            let kb = keypoints(&base);
            let mut out = [false; 5];
            for (k, &alpha) in angles.iter().enumerate() {
                let probe = texture.render_instance(64, alpha, 0.0, 0, "probe").expect("render");
                let kp = keypoints(&probe);
                let r = match_keypoints(&kb, 64.0, &kp, 64.0, &config);
                out[k] = matches!(r, Ok(ref r) if r.histogram.as_ref()
                    .is_some_and(|h| circular_distance(h.peak_center, alpha) <= 36.0));
            }
            out
        })
        .collect();
    let mut detail = Vec::new();
    let mut ok = true;
    for (k, alpha) in angles.iter().enumerate() {
        let n = hits.iter().filter(|h| h[k]).count();
        detail.push(format!("{alpha}°: {n}/{trials}"));
        ok &= n * 10 >= trials * 9;
    }
    let detail = detail.join(", ");
    ensure(ok, || format!("below 90%: {detail}"))?;
    Ok(detail)
}

/// Correct survivors have psi within tolerance of sf; injected pairs with
/// psi outside it never survive.
fn scale_recovery() -> Outcome {
    let generator = SyntheticGenerator::new(3003, TransformSpec::default()).map_err(|e| e.to_string())?;
    let config = PipelineConfig::default();
    let tol = config.scale_tolerance;
    let rm = 60u32;
    let mut detail = Vec::new();
    for s in [0.8, 1.0, 1.2] {
        let rn = (s * f64::from(rm)).round() as u32;
        let sf = f64::from(rn) / f64::from(rm);
        let trials: Vec<Result<(usize, usize, usize, usize), String>> = (0..20usize)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(t as u64 * 31 + rn as u64);
                let alpha: f64 = rng.random_range(0.0..360.0);
                let texture = generator.texture(t);
                let g_img = texture.render_instance(rm, 0.0, 0.0, 0, "g").expect("render");
                let p_img = texture.render_instance(rn, alpha, 0.0, 0, "p").expect("render");
                let mut kg = keypoints(&g_img);
                let mut kp = keypoints(&p_img);
                let (m, n) = (kg.cardinality(), kp.cardinality());
                let injected = 5;
                for _ in 0..injected {
                    let d = random_descriptor(&mut rng);
                    let rho = rng.random_range(0.25..0.45) * f64::from(rm);
                    let theta = rng.random_range(0.0..360.0);
                    let off = rng.random_range(tol + 0.1..tol + 0.6);
                    let psi = if rng.random_bool(0.5) || sf - off <= 0.05 { sf + off } else { sf - off };
                    kg.keypoints.push(at_polar(f64::from(rm), rho, theta, d.clone()));
                    kp.keypoints.push(at_polar(f64::from(rn), psi * rho, theta + alpha, d));
                }
                let r = match_keypoints(&kg, f64::from(rm), &kp, f64::from(rn), &config)
                    .map_err(|e| e.to_string())?;
                let (all, inter, new) = (pair_set(&r.r), pair_set(&r.rinter), pair_set(&r.rnew));
                let mut reached = 0;
                for k in 0..injected {
                    let pair = (m + k, n + k);
                    if !all.contains(&pair) {
                        return Err(format!("trial {t}: injected pair {pair:?} not paired"));
                    }
                    if inter.contains(&pair) {
                        reached += 1;
                    }
                    if new.contains(&pair) {
                        return Err(format!("trial {t}: injected pair {pair:?} survived"));
                    }
                }
                let from = (GroundTruth { rotation_deg: 0.0, scale: 1.0 }, rm);
                let to = (GroundTruth { rotation_deg: alpha, scale: sf }, rn);
                let c = (f64::from(rm), f64::from(rn));
                let mut correct = 0;
                for &(i, j) in new.iter().filter(|&&(i, _)| i < m) {
                    let (g, p) = (kg.get(i), kp.get(j));
                    let expected = map_point((g.x, g.y), from, to);
                    if (expected.0 - p.x).hypot(expected.1 - p.y) > 2.0 {
                        continue;
                    }
                    correct += 1;
                    let psi = (p.x - c.1).hypot(p.y - c.1) / (g.x - c.0).hypot(g.y - c.0);
                    if !(psi >= sf - tol && psi <= sf + tol) {
                        return Err(format!("trial {t}: correct pair ({i},{j}) has psi {psi}"));
                    }
                }
                Ok((correct, new.len(), reached, injected))
            })
            .collect();
        let mut totals = (0, 0, 0, 0);
        for trial in trials {
            let (c, kept, reached, inj) = trial?;
            totals = (totals.0 + c, totals.1 + kept, totals.2 + reached, totals.3 + inj);
        }
        ensure(totals.0 > 0, || format!("s = {s}: no correct surviving pairs"))?;
        detail.push(format!(
            "s={s} (rn={rn}): {}/{} survivors correct and in range, {}/{} impairments removed ({} reached scale stage)",
            totals.0, totals.1, totals.3, totals.3, totals.2
        ));
    }
    Ok(detail.join("; "))
}

/// FAR does not grow across strata at stratum I's equal-error threshold,
/// and separability improves after gradient filtering.
fn far_reduction() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let manifest = generate_synthetic(dir.path(), 4004, 40, 3, &TransformSpec::default())
        .map_err(|e| e.to_string())?;
    let options = ExperimentOptions {
        stratum: StratumLevel::I,
        cache: CacheLocation::Disabled,
        ..ExperimentOptions::default()
    };
    let out = run_experiment(&manifest, &options).map_err(|e| e.to_string())?;
    ensure(out.metadata.failures.is_empty(), || format!("failures: {:?}", out.metadata.failures))?;
    let scores = |level| ScoreRecord::scores(&out.records, level);
    let t = equal_error_threshold(&scores(StratumLevel::I)).map_err(|e| e.to_string())?;
    let reports: Vec<_> = StratumLevel::ALL
        .iter()
        .map(|&l| compute_error_measures(&scores(l), t).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let (f1, f2, f3) = (reports[0].far, reports[1].far, reports[2].far);
    let (d1, d2) = (reports[0].d_prime, reports[1].d_prime);
    let detail = format!(
        "{} comparisons, threshold {t}: FAR {f1:.2} -> {f2:.2} -> {f3:.2}, d' {d1:.3} -> {d2:.3} -> {:.3}",
        out.records.len(),
        reports[2].d_prime
    );
    ensure(f3 <= f2 && f2 <= f1 && d2 > d1, || detail.clone())?;
    Ok(detail)
}

/// Full-matrix greedy pairing, recomputed from scratch every round.
fn brute_force_strata1(g: &KeypointSet, p: &KeypointSet, ratio: f64) -> Vec<(usize, usize, f64)> {
    let (m, n) = (g.cardinality(), p.cardinality());
    let d: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..n).map(|j| descriptor_distance(&g.get(i).descriptor, &p.get(j).descriptor)).collect())
        .collect();
    let mut gfree = vec![true; m];
    let mut pfree = vec![true; n];
    let mut out = Vec::new();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..m {
            if !gfree[i] {
                continue;
            }
            for j in 0..n {
                if !pfree[j] {
                    continue;
                }
                // j must be i's nearest free probe (ties to the lower index)
                let nearest = (0..n).filter(|&k| pfree[k]).all(|k| {
                    d[i][k] > d[i][j] || (d[i][k] == d[i][j] && k >= j)
                });
                if !nearest {
                    continue;
                }
                let second = (0..n)
                    .filter(|&k| pfree[k] && k != j)
                    .map(|k| d[i][k])
                    .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.min(x))));
                if second.is_some_and(|d2| d[i][j] > ratio * d2) {
                    continue;
                }
                let better = best.is_none_or(|(bd, bi, bj)| {
                    d[i][j] < bd || (d[i][j] == bd && (i, j) < (bi, bj))
                });
                if better {
                    best = Some((d[i][j], i, j));
                }
            }
        }
        let Some((dist, i, j)) = best else { break };
        gfree[i] = false;
        pfree[j] = false;
        out.push((i, j, dist));
    }
    out
}

fn strata1_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5005);
    let mut total_pairs = 0;
    for instance in 0..100 {
        let m = rng.random_range(1..=20);
        let n = rng.random_range(1..=20);
        let g: Vec<Keypoint> = (0..m)
            .map(|_| at_polar(32.0, 10.0, 0.0, random_descriptor(&mut rng)))
            .collect();
        let mut p: Vec<Keypoint> = (0..n)
            .map(|_| at_polar(32.0, 10.0, 0.0, random_descriptor(&mut rng)))
            .collect();
        // plant noisy copies so some pairs are clearly nearest
        for (k, slot) in p.iter_mut().enumerate().take(n.min(m)) {
            if rng.random_bool(0.6) {
                let noise = rng.random_range(0.0..0.05f32);
                slot.descriptor = g[k].descriptor.iter().map(|v| v + noise * rng.random::<f32>()).collect();
            }
        }
        if instance % 10 == 0 && m > 1 {
            // exact duplicates force distance ties
            p[0].descriptor = g[1].descriptor.clone();
        }
        let (gs, ps) = (KeypointSet::new(g, "g"), KeypointSet::new(p, "p"));
        let ratio = rng.random_range(0.5..0.99);
        let fast: Vec<(usize, usize, f64)> = strata1_match(&gs, &ps, ratio)
            .pairs
            .iter()
            .map(|q| (q.i, q.j, q.descriptor_distance))
            .collect();
        let slow = brute_force_strata1(&gs, &ps, ratio);
        ensure(fast == slow, || {
            format!("instance {instance} (m={m}, n={n}, ratio={ratio}): {fast:?} vs {slow:?}")
        })?;
        total_pairs += fast.len();
    }
    Ok(format!("100 instances identical, {total_pairs} pairs in total"))
}

fn worked_example() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6006);
    let mut g = Vec::new();
    let mut p = Vec::new();
    for k in 0..10 {
        let d = random_descriptor(&mut rng);
        let theta = 36.0 * k as f64 + 7.0;
        g.push(at_polar(64.0, 30.0, theta, d.clone()));
        p.push(at_polar(64.0, 30.0, theta + 18.0, d));
    }
    let (gs, ps) = (KeypointSet::new(g, "g"), KeypointSet::new(p, "p"));
    let config = PipelineConfig::default();
    let r = match_keypoints(&gs, 64.0, &ps, 64.0, &config).map_err(|e| e.to_string())?;
    let dump = r.diagnostics(&gs, &ps, &config).to_json_pretty().map_err(|e| e.to_string())?;
    let v: serde_json::Value = serde_json::from_str(&dump).map_err(|e| e.to_string())?;
    let peak_index = v["histogram"]["peak_index"].as_u64();
    let center = v["histogram"]["peak_center"].as_f64();
    let low = v["verdict"]["retained_range"]["low"].as_f64();
    let high = v["verdict"]["retained_range"]["high"].as_f64();
    let bits = |x: Option<f64>, want: f64| x.is_some_and(|x| x.to_bits() == want.to_bits());
    let detail = format!("peak bin {peak_index:?}, center {center:?}, range ({low:?}, {high:?})");
    ensure(
        peak_index == Some(0) && bits(center, 18.0) && bits(low, 288.0) && bits(high, 108.0),
        || detail.clone(),
    )?;
    Ok(detail)
}

fn self_match() -> Outcome {
    let generator = SyntheticGenerator::new(7007, TransformSpec::default()).map_err(|e| e.to_string())?;
    let config = PipelineConfig::default();
    let results: Vec<Result<usize, String>> = (0..10usize)
        .into_par_iter()
        .flat_map_iter(|s| generator.subject_instances(s, 3).expect("render"))
        .map(|inst| {
            let k = keypoints(&inst.image);
            let r = f64::from(inst.image.radius());
            let res = match_keypoints(&k, r, &k, r, &config).map_err(|e| e.to_string())?;
            let e = res.etas();
            let id = inst.image.id().to_string();
            ensure(e.r == e.rinter && e.rinter == e.rnew && e.r == k.cardinality(), || {
                format!("{id}: etas {e:?} for {} keypoints", k.cardinality())
            })?;
            let h = res.histogram.as_ref().ok_or_else(|| format!("{id}: no histogram"))?;
            for pair in res.diagnostics(&k, &k, &config).pairs {
                let gamma = pair.gamma.ok_or_else(|| format!("{id}: degenerate pair"))?;
                ensure(h.bin_of(gamma) == h.bin_of(0.0), || format!("{id}: gamma {gamma}"))?;
                let psi = pair.psi.ok_or_else(|| format!("{id}: no psi"))?;
                ensure((psi - 1.0).abs() <= 1e-6, || format!("{id}: psi {psi}"))?;
            }
            Ok(e.r)
        })
        .collect();
    let etas = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(format!(
        "{} images, eta range {}..={}",
        etas.len(),
        etas.iter().min().unwrap_or(&0),
        etas.iter().max().unwrap_or(&0)
    ))
}

fn metrics() -> Outcome {
    let score = |eta, label| ComparisonScore {
        gallery_id: "g".into(),
        probe_id: "p".into(),
        eta_final: eta,
        label,
        stratum_used: StratumLevel::III,
    };
    let fixture = vec![
        score(8, Label::Genuine),
        score(2, Label::Genuine),
        score(1, Label::Impostor),
        score(6, Label::Impostor),
    ];
    let r = compute_error_measures(&fixture, 5).map_err(|e| e.to_string())?;
    ensure((r.far, r.frr, r.acc) == (50.0, 50.0, 50.0), || format!("fixture gave {r:?}"))?;
    let sweep = sweep_thresholds(&fixture).map_err(|e| e.to_string())?;
    for p in &sweep.points {
        let t = p.threshold as usize;
        let far = [1usize, 6].iter().filter(|&&e| e >= t).count() as f64 * 50.0;
        let frr = [8usize, 2].iter().filter(|&&e| e < t).count() as f64 * 50.0;
        ensure(p.far == far && p.frr == frr && p.acc == 100.0 - (far + frr) / 2.0, || {
            format!("sweep point {p:?}")
        })?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8008);
    let gen = Normal::new(50.0, 10.0).map_err(|e| e.to_string())?;
    let imp = Normal::new(10.0, 10.0).map_err(|e| e.to_string())?;
    let g: Vec<f64> = (0..1000).map(|_| gen.sample(&mut rng)).collect();
    let i: Vec<f64> = (0..1000).map(|_| imp.sample(&mut rng)).collect();
    let d = d_prime(&g, &i);
    ensure((d - 4.0).abs() <= 0.2, || format!("d' = {d}"))?;
    Ok(format!("fixture FAR/FRR/ACC 50/50/50, {} sweep points exact, d' = {d:.4}", sweep.points.len()))
}

fn determinism() -> Outcome {
    let data = tempfile::tempdir().map_err(|e| e.to_string())?;
    let manifest = generate_synthetic(data.path(), 9009, 6, 3, &TransformSpec::default())
        .map_err(|e| e.to_string())?;
    let run = |workers, cache: CacheLocation| -> Result<Vec<u8>, String> {
        let out_dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let options = ExperimentOptions {
            workers: Some(workers),
            cache,
            ..ExperimentOptions::default()
        };
        let out = run_experiment(&manifest, &options).map_err(|e| e.to_string())?;
        write_experiment(out_dir.path(), &out, options.histogram_bins).map_err(|e| e.to_string())?;
        std::fs::read(out_dir.path().join("scores.csv")).map_err(|e| e.to_string())
    };
    let cache = tempfile::tempdir().map_err(|e| e.to_string())?;
    let shared = CacheLocation::Dir(cache.path().to_path_buf());
    let a = run(1, CacheLocation::Disabled)?;
    let b = run(4, shared.clone())?;
    let c = run(3, shared)?;
    ensure(a == b && b == c, || "score CSVs differ between runs".into())?;
    Ok(format!(
        "3 runs (fresh, cold cache, warm cache) byte-identical, {} bytes",
        a.len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 9] = [
        ("subset monotonicity", subset_monotonicity, Duration::from_secs(300)),
        ("rotation recovery", rotation_recovery, Duration::from_secs(300)),
        ("scale recovery", scale_recovery, Duration::MAX),
        ("FAR reduction direction", far_reduction, Duration::MAX),
        ("pairing oracle equivalence", strata1_oracle, Duration::from_secs(60)),
        ("worked example conformance", worked_example, Duration::MAX),
        ("self-match identity", self_match, Duration::MAX),
        ("metric correctness", metrics, Duration::MAX),
        ("determinism", determinism, Duration::MAX),
    ];
    let mut failed = 0;
    for (k, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > *budget => Err(format!("{detail} (took {elapsed:.1?}, budget {budget:?})")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {} {name} [{elapsed:.1?}]: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name} [{elapsed:.1?}]: {detail}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
