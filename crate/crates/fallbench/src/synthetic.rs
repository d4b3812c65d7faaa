//! Seeded generator for a small trial tree in the on-disk dataset format.
//! Used by the test suite and handy for desk runs without the real data:
//! 3 subjects x 4 activities x 1 trial = 12 files.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::{ActivityKind, SubjectId};

pub const FIXTURE_SAMPLES_PER_TRIAL: usize = 40;

/// Writes the fixture tree under `root`. Deterministic for a given seed.
pub fn write_fixture_tree(root: &Path, seed: u64) -> std::io::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let subjects = ["SA01", "SA02", "SE01"];
    let activities = ["D01", "D02", "F01", "F02"];
    for subj in subjects {
        let dir = root.join(subj);
        fs::create_dir_all(&dir)?;
        let _valid: SubjectId = subj.parse().expect("fixture subject valid");
        for act in activities {
            let kind = if act.starts_with('D') {
                ActivityKind::Adl
            } else {
                ActivityKind::Fall
            };
            let path = dir.join(format!("{act}_{subj}_R01.txt"));
            let mut file = fs::File::create(&path)?;
            for i in 0..FIXTURE_SAMPLES_PER_TRIAL {
                let row = fixture_sample(&mut rng, kind, i);
                let fields: Vec<String> = row.iter().map(i32::to_string).collect();
                writeln!(file, "{};", fields.join(","))?;
            }
        }
    }
    Ok(())
}

/// ADLs hover near a quiet baseline; falls carry a mid-trial impact
/// spike across all channels, so the classes are separable.
fn fixture_sample(rng: &mut ChaCha8Rng, kind: ActivityKind, index: usize) -> [i32; 9] {
    let mut row = [0i32; 9];
    let impact = matches!(kind, ActivityKind::Fall)
        && (FIXTURE_SAMPLES_PER_TRIAL / 2..FIXTURE_SAMPLES_PER_TRIAL / 2 + 8).contains(&index);
    for (c, slot) in row.iter_mut().enumerate() {
        let noise = rng.gen_range(-20..=20);
        let base = match c {
            2 => 256, // ~1 g gravity on the first accelerometer z axis
            8 => 512, // ~0.5 g on the second accelerometer z axis
            _ => 0,
        };
        let spike = if impact {
            match c / 3 {
                0 => 2000,
                1 => 12000,
                _ => 4000,
            }
        } else {
            0
        };
        *slot = base + noise + spike;
    }
    row
}
