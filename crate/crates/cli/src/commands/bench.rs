//! `bench`: timing tables for the three cost claims — constant per-shot
//! post-processing in d, polynomial block reduction in n, and the
//! quadratic dense-oracle baseline.
//!
//! Outputs: `bench_post_processing.csv` (nanos per shot vs d),
//! `bench_dense_oracle.csv` (seconds per dense tr(AB) vs d),
//! `bench_reduction.csv` (nanos per block reduction vs n at r = n/2), and
//! `bench_summary.json` with the fitted log-log slopes. Each row reports
//! the best of `--repeats` passes.

use std::hint::black_box;
use std::time::Instant;

use num_complex::Complex;
use serde::Serialize;

use ddb_shadow::channel::{single_shot_estimate, FnObservable};
use ddb_shadow::ensemble::{draw_random_snapshot, SnapshotId};
use ddb_shadow::linalg::{trace_inner, ComplexMatrix, RandomStream};
use ddb_shadow::stabilizer::{random_affine_stabilizer, reduce_to_block};
use ddb_shadow::{Error, Result};

use crate::inputs::{loglog_slope, parse_dims, resolve_seed};
use crate::manifest::{config_echo, csv_comment, Emitter};
use crate::BenchArgs;

/// Qubit counts for the reduction table; structural work only, so the cap
/// is the 60-qubit mask width, not the amplitude cap.
const REDUCTION_QUBITS: [usize; 6] = [8, 16, 24, 32, 40, 48];

#[derive(Serialize)]
struct BenchSummary {
    /// Per-shot nanos at the largest dim over the smallest; near 1 when
    /// post-processing cost is independent of d.
    per_shot_ratio_largest_vs_smallest: f64,
    /// Slope of ln(seconds) vs ln(d) for the dense oracle; near 2.
    dense_oracle_loglog_slope: f64,
    /// Slope of ln(nanos) vs ln(n) for the reduction; small polynomial.
    reduction_loglog_slope: f64,
}

pub fn run(args: &BenchArgs) -> Result<()> {
    let seed = resolve_seed(args.common.seed)?;
    let mut dims = parse_dims(&args.dims)?;
    dims.sort_unstable();
    dims.dedup();
    if dims.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "dims",
            message: "need at least two dimensions to fit slopes".into(),
        });
    }
    if args.shots == 0 || args.repeats == 0 {
        return Err(Error::InvalidParameter {
            name: "shots/repeats",
            message: "must be at least 1".into(),
        });
    }
    let mut emitter = Emitter::new(&args.common.out)?;

    // Per-shot post-processing: one banded-formula observable per dim so
    // only the O(1) arithmetic is timed, never a d x d enumeration.
    let mut per_shot = csv_comment(seed);
    per_shot.push_str("d,shots,best_seconds,nanos_per_shot\n");
    let mut shot_points = Vec::new();
    for &d in &dims {
        let obs = FnObservable::new(d, 0.0, None, |r: usize, c: usize| {
            if r == c {
                Complex::new(0.0, 0.0)
            } else {
                Complex::new(1.0 / (1.0 + (r as f64 - c as f64).abs()), 0.0)
            }
        })?;
        let mut rng = RandomStream::new(seed, d as u64);
        let snaps: Vec<SnapshotId> = (0..args.shots)
            .map(|_| draw_random_snapshot(d, &mut rng))
            .collect::<Result<_>>()?;
        let mut best = f64::INFINITY;
        for _ in 0..args.repeats {
            let t0 = Instant::now();
            let mut acc = 0.0f64;
            for s in &snaps {
                acc += single_shot_estimate(&obs, s)?.value;
            }
            black_box(acc);
            best = best.min(t0.elapsed().as_secs_f64());
        }
        let nanos = best * 1e9 / args.shots as f64;
        per_shot.push_str(&format!("{d},{},{best:.6e},{nanos:.3}\n", args.shots));
        shot_points.push((d as f64, nanos));
    }
    emitter.write_text("bench_post_processing.csv", &per_shot)?;

    // Dense-oracle baseline: full tr(AB) on deterministic Hermitian
    // matrices, the O(d^2) cost the per-shot formulas avoid.
    let mut dense = csv_comment(seed);
    dense.push_str("d,best_seconds\n");
    let mut dense_points = Vec::new();
    for &d in &dims {
        let a = ComplexMatrix::<f64>::from_fn(d, |r, c| {
            Complex::new(1.0 / (1.0 + (r + c) as f64), 0.0)
        })?;
        let b = ComplexMatrix::<f64>::from_fn(d, |r, c| {
            Complex::new(
                1.0 / (1.0 + (r as f64 - c as f64).abs()),
                if r < c { 0.1 } else if r > c { -0.1 } else { 0.0 },
            )
        })?;
        let mut best = f64::INFINITY;
        for _ in 0..args.repeats {
            let t0 = Instant::now();
            black_box(trace_inner(&a, &b)?);
            best = best.min(t0.elapsed().as_secs_f64());
        }
        dense.push_str(&format!("{d},{best:.6e}\n"));
        dense_points.push((d as f64, best));
    }
    emitter.write_text("bench_dense_oracle.csv", &dense)?;

    // Block reduction: GF(2) inversion plus index-map assembly at r = n/2.
    let mut reduction = csv_comment(seed);
    reduction.push_str("n,r,best_nanos\n");
    let mut reduction_points = Vec::new();
    for (i, &n) in REDUCTION_QUBITS.iter().enumerate() {
        let r = n / 2;
        let mut rng = RandomStream::new(seed, 1000 + i as u64);
        let psi = random_affine_stabilizer(n, r, &mut rng)?;
        let mut best = f64::INFINITY;
        for _ in 0..args.repeats {
            let t0 = Instant::now();
            black_box(reduce_to_block(&psi)?);
            best = best.min(t0.elapsed().as_secs_f64());
        }
        let nanos = best * 1e9;
        reduction.push_str(&format!("{n},{r},{nanos:.0}\n"));
        reduction_points.push((n as f64, nanos));
    }
    emitter.write_text("bench_reduction.csv", &reduction)?;

    let smallest = shot_points.first().expect("dims checked non-empty").1;
    let largest = shot_points.last().expect("dims checked non-empty").1;
    let summary = BenchSummary {
        per_shot_ratio_largest_vs_smallest: largest / smallest,
        dense_oracle_loglog_slope: loglog_slope(&dense_points),
        reduction_loglog_slope: loglog_slope(&reduction_points),
    };
    emitter.write_json("bench_summary.json", &summary)?;
    emitter.finish("bench", config_echo(args)?, seed)
}
