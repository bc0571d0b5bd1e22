//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so the lines always reach the terminal.

use std::process::{Command, ExitCode};
use std::time::Instant;

use gammaclust::hardness::{check_reduction, small_instances};
use gammaclust::laminar::{build_forest, enumerate_ball_clusters};
use gammaclust::metric::{partition_distance, Clustering, MetricSpace};
use gammaclust::oracle::{
    enumerate_all_clusterings, enumerate_all_clusters, gen_blobs, gen_cycle4, gen_paired,
    gen_planted, gen_random_euclidean, gen_uniform, PlantedSpec, MAX_CLUSTERING_N, MAX_CLUSTER_N,
};
use gammaclust::partitions::RgsIter;
use gammaclust::sampler::find_all_clusterings;
use gammaclust::sampler::montecarlo::{self, MonteCarloConfig};
use gammaclust::verify::{
    check_regularity, is_cluster, is_clustering, log_max_clusterings, min_separation,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn line(id: usize, name: &str, o: &Outcome, secs: f64) -> bool {
    println!(
        "criterion {id} [{name}]: {} ({}; {secs:.1}s)",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail
    );
    o.pass
}

/// Seeded small Euclidean spaces: even seeds uniform in the unit square,
/// odd seeds three tight blobs.
fn test_space(seed: u64) -> MetricSpace {
    let n = 4 + (seed as usize % 6);
    if seed.is_multiple_of(2) {
        gen_random_euclidean(n, 2, seed).unwrap()
    } else {
        gen_blobs(n, 2, 3, 0.05, seed).unwrap()
    }
}

/// Accepted clusterings shared between criteria.
#[derive(Default)]
struct Shared {
    accepted: Vec<(MetricSpace, Clustering, f64)>,
    /// (alpha, gamma, oracle clusterings) per space of criterion 1.
    oracle_sets: Vec<(MetricSpace, f64, f64, Vec<Clustering>)>,
}

const C1_PARAMS: [(f64, f64); 3] = [(0.3, 1.5), (0.25, 2.0), (0.2, 3.0)];

fn criterion1(shared: &mut Shared) -> Outcome {
    let (mut runs, mut misses, mut extras, mut total) = (0, 0, 0, 0);
    let mut first_bad = None;
    for seed in 0..50u64 {
        let s = test_space(seed);
        for &(a, g) in &C1_PARAMS {
            let oracle = enumerate_all_clusterings(&s, a, g, MAX_CLUSTERING_N).unwrap();
            let found = find_all_clusterings(&s, a, g, seed, 20).unwrap();
            runs += 1;
            total += oracle.len();
            let miss = oracle.iter().filter(|c| !found.contains(c)).count();
            let extra = found.iter().filter(|c| !oracle.contains(c)).count();
            if miss + extra > 0 && first_bad.is_none() {
                first_bad = Some(format!("seed {seed} ({a},{g})"));
            }
            misses += miss;
            extras += extra;
            for c in &found {
                shared.accepted.push((s.clone(), c.clone(), g));
            }
            shared.oracle_sets.push((s.clone(), a, g, oracle));
        }
    }
    Outcome {
        pass: misses == 0 && extras == 0,
        detail: format!(
            "{runs} runs on 50 spaces, {total} oracle clusterings, {misses} misses, {extras} extras{}",
            first_bad.map(|b| format!(", first mismatch {b}")).unwrap_or_default()
        ),
    }
}

/// Number of partitions of 0..n into members of `family` (bitmasks), with at
/// least `min_parts` parts.
fn count_covers(n: usize, family: &[u32], min_parts: usize) -> usize {
    fn go(left: u32, parts: usize, family: &[u32], min_parts: usize) -> usize {
        if left == 0 {
            return (parts >= min_parts) as usize;
        }
        let low = left & left.wrapping_neg();
        family
            .iter()
            .filter(|&&f| f & low != 0 && f & !left == 0)
            .map(|&f| go(left & !f, parts + 1, family, min_parts))
            .sum()
    }
    go((1u32 << n) - 1, 0, family, min_parts)
}

fn mask(set: &[usize]) -> u32 {
    set.iter().fold(0, |m, &x| m | 1 << x)
}

fn criterion2(shared: &mut Shared) -> Outcome {
    let (
        mut cases,
        mut set_mismatch,
        mut verdict_mismatch,
        mut minimal_mismatch,
        mut reverify_fail,
    ) = (0, 0, 0, 0, 0);
    let mut with_partition = 0;
    for seed in 1000..1100u64 {
        let s = test_space(seed);
        let n = s.n();
        for &g in &[3.1, 4.0, 10.0] {
            for &a in &[1.0 / n as f64, 0.25] {
                cases += 1;
                let balls = enumerate_ball_clusters(&s, a, g).unwrap();
                let mut got: Vec<Vec<usize>> = balls.iter().map(|b| b.members.clone()).collect();
                got.sort();
                let mut want = enumerate_all_clusters(&s, a, g, MAX_CLUSTER_N).unwrap();
                want.sort();
                set_mismatch += (got != want) as usize;

                let forest = build_forest(n, &balls).unwrap();
                let family: Vec<u32> = want.iter().map(|c| mask(c)).collect();
                let oracle_exists = count_covers(n, &family, 2) > 0;
                let p = forest.find_partition(2);
                verdict_mismatch += (p.is_some() != oracle_exists) as usize;
                verdict_mismatch += forest.find_partition(1).is_none() as usize;
                if forest.count_partitions() != count_covers(n, &family, 1) as f64 {
                    verdict_mismatch += 1;
                }

                let minimal: Vec<u32> = family
                    .iter()
                    .copied()
                    .filter(|&f| !family.iter().any(|&h| h != f && h & f == h))
                    .collect();
                let oracle_min = count_covers(n, &minimal, 1);
                let mp = forest.minimal_partition();
                minimal_mismatch += (oracle_min > 1 || (oracle_min == 1) != mp.is_some()) as usize;

                for c in p.iter().chain(mp.iter()) {
                    with_partition += 1;
                    for part in c.parts() {
                        reverify_fail += !is_cluster(&s, &part, a, g).unwrap().ok as usize;
                    }
                    if is_clustering(&s, c, a, g).unwrap().ok {
                        shared.accepted.push((s.clone(), c.clone(), g));
                    }
                }
            }
        }
    }
    Outcome {
        pass: set_mismatch + verdict_mismatch + minimal_mismatch + reverify_fail == 0,
        detail: format!(
            "{cases} cases on 100 spaces, {with_partition} partitions returned; mismatches: cluster sets {set_mismatch}, \
             existence {verdict_mismatch}, minimal {minimal_mismatch}, re-verify {reverify_fail}"
        ),
    }
}

fn criterion3(shared: &Shared) -> Outcome {
    let (mut checks, mut violations) = (0, 0);
    for (s, c, g) in &shared.accepted {
        let r = check_regularity(s, c, *g).unwrap();
        checks += r.checks;
        violations += r.violations.len();
    }
    Outcome {
        pass: violations == 0 && checks >= 10_000,
        detail: format!(
            "{} clusterings, {checks} point-pair checks, {violations} violations",
            shared.accepted.len()
        ),
    }
}

fn criterion4(shared: &Shared) -> Outcome {
    let (mut pairs, mut violations, mut count_over) = (0, 0, 0);
    let mut min_slack = f64::INFINITY;
    for (s, a, g, set) in &shared.oracle_sets {
        let sep = min_separation(*a, *g);
        for i in 0..set.len() {
            for j in (i + 1)..set.len() {
                let d = partition_distance(s, &set[i], &set[j]).unwrap();
                pairs += 1;
                min_slack = min_slack.min(d - sep);
                violations += (d < sep) as usize;
            }
        }
        count_over += ((set.len() as f64).ln() > log_max_clusterings(*a, *g)) as usize;
    }
    Outcome {
        pass: violations == 0 && count_over == 0,
        detail: format!(
            "{pairs} pairs, {violations} below separation, min distance minus bound {min_slack:.4}, count bound exceeded {count_over} times"
        ),
    }
}

fn criterion5() -> Outcome {
    let p = gen_planted(&PlantedSpec {
        part_sizes: vec![50; 4],
        intra_scale: 1.0,
        intra_jitter: 0.5,
        inter_distance: 6.0,
        target_gamma: 2.0,
        seed: 0,
    })
    .unwrap();
    let cfg = MonteCarloConfig {
        alpha: 0.2,
        gamma: 2.0,
        eps: 0.5,
        sample_sizes: vec![20, 50, 100],
        trials: 2000,
        seed: 0,
        points: montecarlo::default_points(&p.clustering),
    };
    let r = montecarlo::run(&p.space, &p.clustering, &cfg).unwrap();
    let bounds: Vec<String> = cfg
        .sample_sizes
        .iter()
        .map(|&m| {
            format!(
                "m={m}: {:.4}",
                montecarlo::concentration_bound(0.2, 2.0, 0.5, m)
            )
        })
        .collect();
    Outcome {
        pass: r.ok,
        detail: format!(
            "{} (point, part, m) rows, max empirical frequency {:.4}, bounds {}",
            r.rows.len(),
            r.max_frequency,
            bounds.join(", ")
        ),
    }
}

fn criterion6() -> Outcome {
    let all = small_instances(2, 4);
    let (mut bad, mut solvable, mut connected, mut constructive_ok) = (0, 0, 0, 0);
    for inst in &all {
        let r = check_reduction(inst).unwrap();
        bad += !r.ok as usize;
        solvable += r.matching.is_some() as usize;
        connected += r.connected as usize;
        if let Some(v) = &r.constructive {
            constructive_ok += (v.isolated.ok && v.clustering.ok && v.parts_are_clusters) as usize;
        }
    }
    Outcome {
        pass: bad == 0 && constructive_ok == solvable,
        detail: format!(
            "{} instances ({solvable} solvable, {connected} connected), {bad} failing, \
             constructive partition verified {constructive_ok}/{solvable}",
            all.len()
        ),
    }
}

fn criterion7() -> Outcome {
    let mut failures = Vec::new();
    let c4 = gen_cycle4();
    let consecutive = [
        Clustering::new(vec![0, 0, 1, 1]).unwrap(),
        Clustering::new(vec![0, 1, 1, 0]).unwrap(),
    ];
    for c in &consecutive {
        if !is_clustering(&c4, c, 0.5, 3.0).unwrap().ok {
            failures.push("C4 consecutive pairs at 3");
        }
        if is_clustering(&c4, c, 0.5, 3.01).unwrap().ok {
            failures.push("C4 consecutive pairs at 3.01");
        }
        for part in c.parts() {
            if !is_cluster(&c4, &part, 0.5, 3.0).unwrap().ok
                || is_cluster(&c4, &part, 0.5, 3.01).unwrap().ok
            {
                failures.push("C4 consecutive pair as a cluster");
            }
        }
    }
    if is_clustering(&c4, &Clustering::new(vec![0, 1, 0, 1]).unwrap(), 0.5, 3.0)
        .unwrap()
        .ok
    {
        failures.push("C4 diagonal pairing at 3");
    }

    // Uniform metric: partitions with parts of size ≥ αn, at γ = n/(n−1),
    // are exactly the clusterings.
    let mut uniform_checked = 0;
    for n in 2..=8usize {
        let s = gen_uniform(n).unwrap();
        let g = n as f64 / (n as f64 - 1.0);
        for min_size in 1..=n {
            let a = min_size as f64 / n as f64;
            let expected: Vec<Clustering> = RgsIter::new(n, n)
                .map(|r| Clustering::new(r.iter().map(|&v| v as i32).collect()).unwrap())
                .filter(|c| c.parts().iter().all(|p| p.len() >= min_size))
                .collect();
            let got = enumerate_all_clusterings(&s, a, g, MAX_CLUSTERING_N).unwrap();
            uniform_checked += expected.len();
            if got != expected {
                failures.push("uniform metric clusterings");
            }
        }
    }

    // Paired space: all 2^n keep-or-split choices are partitions into
    // clusters and clusterings. The whole space adds one more partition
    // unless it is itself the single pair.
    let mut paired_checked = 0;
    for pairs in 1..=4usize {
        for &g in &[2.0, 3.5, 10.0] {
            let s = gen_paired(pairs, g).unwrap();
            let a = 1.0 / (2 * pairs) as f64;
            for choice in 0..(1u32 << pairs) {
                let mut parts: Vec<Vec<usize>> = Vec::new();
                for i in 0..pairs {
                    if choice >> i & 1 == 1 {
                        parts.push(vec![2 * i, 2 * i + 1]);
                    } else {
                        parts.push(vec![2 * i]);
                        parts.push(vec![2 * i + 1]);
                    }
                }
                let c = Clustering::from_parts(2 * pairs, &parts).unwrap();
                paired_checked += 1;
                if !is_clustering(&s, &c, a, g).unwrap().ok
                    || !parts.iter().all(|p| is_cluster(&s, p, a, g).unwrap().ok)
                {
                    failures.push("paired keep-or-split partition");
                }
            }
            let family: Vec<u32> = enumerate_all_clusters(&s, a, g, MAX_CLUSTER_N)
                .unwrap()
                .iter()
                .map(|c| mask(c))
                .collect();
            let expected = (1usize << pairs) + (pairs > 1) as usize;
            if count_covers(2 * pairs, &family, 1) != expected {
                failures.push("paired partition count");
            }
            if g > 3.0 {
                let forest =
                    build_forest(2 * pairs, &enumerate_ball_clusters(&s, a, g).unwrap()).unwrap();
                if forest.count_partitions() != expected as f64 {
                    failures.push("paired forest count");
                }
            }
        }
    }
    failures.dedup();
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "C4 fixtures, {uniform_checked} uniform-metric partitions, {paired_checked} paired partitions{}",
            if failures.is_empty() {
                String::new()
            } else {
                format!("; failed: {}", failures.join(", "))
            }
        ),
    }
}

fn criterion8() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_gammaclust");
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let run = |args: &[&str], threads: &str| -> Vec<u8> {
        let out = Command::new(bin)
            .args(args)
            .env("GAMMACLUST_THREADS", threads)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };
    let setup = |args: &[&str], file: &str| std::fs::write(path(file), run(args, "1")).unwrap();
    setup(&["gen", "blobs", "--n", "9", "--seed", "7"], "blobs.json");
    setup(&["gen", "paired", "--n", "3", "--far", "4"], "paired.json");
    setup(&["gen", "cycle4"], "c4.json");
    std::fs::write(path("c4_labels.json"), "[0, 0, 1, 1]").unwrap();
    std::fs::write(
        path("cycle.json"),
        r#"{"n": 4, "edges": [[0,1],[1,2],[2,3],[3,0]]}"#,
    )
    .unwrap();

    let (blobs, paired, c4, labels, cycle) = (
        path("blobs.json"),
        path("paired.json"),
        path("c4.json"),
        path("c4_labels.json"),
        path("cycle.json"),
    );
    let commands: Vec<Vec<&str>> = vec![
        vec!["gen", "euclidean", "--n", "9", "--seed", "3"],
        vec![
            "gen", "planted", "--parts", "10,10,10", "--seed", "3", "--json",
        ],
        vec![
            "find", "--space", &blobs, "--alpha", "0.2", "--gamma", "3", "--seed", "5", "--reps",
            "20", "--json",
        ],
        vec![
            "find", "--space", &blobs, "--alpha", "0.25", "--gamma", "2", "--seed", "5",
        ],
        vec![
            "oracle", "--space", &blobs, "--alpha", "0.2", "--gamma", "3",
        ],
        vec![
            "oracle",
            "--space",
            &blobs,
            "--alpha",
            "0.2",
            "--gamma",
            "3",
            "--clusters",
        ],
        vec![
            "balls", "--space", &paired, "--alpha", "0.1666", "--gamma", "3.5",
        ],
        vec![
            "partition",
            "--space",
            &paired,
            "--alpha",
            "0.1666",
            "--gamma",
            "3.5",
            "--min-parts",
            "2",
        ],
        vec![
            "partition",
            "--space",
            &paired,
            "--alpha",
            "0.1666",
            "--gamma",
            "3.5",
            "--minimal",
        ],
        vec![
            "verify",
            "--space",
            &c4,
            "--labels",
            &labels,
            "--alpha",
            "0.5",
            "--gamma",
            "3",
            "--regularity",
        ],
        vec!["gadget", "--q", "1", "--triples", "1,1,1"],
        vec![
            "check-reduction",
            "--q",
            "2",
            "--triples",
            "1,1,1;1,2,2;2,2,2;2,1,1",
        ],
        vec![
            "match25", "--graph", &cycle, "--alpha", "0.5", "--eps", "0.5",
        ],
        vec!["bounds", "--alpha", "0.25", "--gamma", "2"],
        vec![
            "montecarlo",
            "--m",
            "20,50",
            "--trials",
            "300",
            "--seed",
            "2",
        ],
    ];
    let mut differing = Vec::new();
    for cmd in &commands {
        let reference = run(cmd, "1");
        for threads in ["1", "4", "8"] {
            if run(cmd, threads) != reference {
                differing.push(format!("{} (threads {threads})", cmd[0]));
            }
        }
    }
    Outcome {
        pass: differing.is_empty(),
        detail: format!(
            "{} commands x threads 1, 1, 4, 8: {} differing{}",
            commands.len(),
            differing.len(),
            if differing.is_empty() {
                String::new()
            } else {
                format!(": {}", differing.join(", "))
            }
        ),
    }
}

fn main() -> ExitCode {
    let mut shared = Shared::default();
    let mut all = true;
    let mut timed = |id: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        all &= line(id, name, &o, t.elapsed().as_secs_f64());
    };
    timed(1, "sampler matches brute force", &mut || {
        criterion1(&mut shared)
    });
    timed(
        2,
        "ball clusters and partitions match brute force",
        &mut || criterion2(&mut shared),
    );
    timed(3, "regularity of accepted clusterings", &mut || {
        criterion3(&shared)
    });
    timed(4, "separation and count bounds", &mut || {
        criterion4(&shared)
    });
    timed(5, "sampling concentration bound", &mut criterion5);
    timed(6, "3DM reduction equivalences", &mut criterion6);
    timed(7, "sharpness fixtures", &mut criterion7);
    timed(8, "CLI determinism across thread counts", &mut criterion8);
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
