use numscore::attributes::{Attribute, LevelOrder};
use numscore::cot::{merge_self_labels, parse_response, ConversationRecord, Forge, Template};
use numscore::expectation::MaskMode;
use numscore::score::QuantizerConfig;
use numscore::sim::{emulate_training, uniform_grid_sampler, EmulationConfig, SimKind};
use proptest::prelude::*;

fn attrs_json(eye: u8, comp: u8, clarity: u8) -> String {
    format!(
        r#"{{"eye_catching":{eye},"composition":{comp},"subject_integrity":3,"subject_clutter":3,"background_clutter":2,"level_shot":1,"image_clarity":{clarity},"exposure":3,"saturation":3}}"#
    )
}

fn row() -> impl Strategy<Value = (f64, u8, u8, u8)> {
    (
        0.0..=100.0f64,
        Attribute::EyeCatching.code_range(),
        Attribute::Composition.code_range(),
        Attribute::ImageClarity.code_range(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn merged_labels_survive_build_and_parse(
        rows in prop::collection::vec(row(), 1..8),
        low_first in any::<bool>(),
    ) {
        let mut mos = String::new();
        let mut attrs = String::new();
        for (i, (m, eye, comp, clarity)) in rows.iter().enumerate() {
            mos.push_str(&format!("{{\"id\":\"r{i}\",\"mos\":{m}}}\n"));
            attrs.push_str(&format!("{{\"id\":\"r{i}\",\"attributes\":{}}}\n", attrs_json(*eye, *comp, *clarity)));
        }
        let cfg = QuantizerConfig::new(3, 0.0, 100.0).unwrap();
        let merged = merge_self_labels(mos.as_bytes(), attrs.as_bytes(), &cfg).unwrap();
        prop_assert_eq!(merged.records.len(), rows.len());
        prop_assert!(merged.skipped.is_empty());

        let order = if low_first { LevelOrder::LowToHigh } else { LevelOrder::HighToLow };
        let forge = Forge::default();
        for rec in &merged.records {
            for form in [Template::Q1r1, Template::Q2r2, Template::Q3r3] {
                let sample = forge.build_stage2(&rec.id, &rec.score, rec.attributes.as_ref(), form, order).unwrap();
                let line = serde_json::to_string(&ConversationRecord::from(&sample)).unwrap();
                let back: ConversationRecord = serde_json::from_str(&line).unwrap();
                prop_assert_eq!(back.meta.template, form);
                let parsed = parse_response(&back.messages[1].content, form).unwrap();
                prop_assert_eq!(parsed.score.as_ref(), Some(&rec.score));
                if form != Template::Q1r1 {
                    prop_assert_eq!(parsed.attributes.unwrap().complete().unwrap(), rec.attributes.unwrap());
                }
            }
        }
    }
}

#[test]
fn emulation_does_not_depend_on_thread_count() {
    let cfg = EmulationConfig {
        kind: SimKind::Adjacent,
        start_prob: 0.3,
        end_prob: 0.9,
        start_spread: 1.0,
        end_spread: 0.6,
        steps: 40,
        batch: 8,
        seed: 5,
        mask_mode: MaskMode::Verbatim,
    };
    let parallel = emulate_training(&cfg, uniform_grid_sampler(3)).unwrap();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| emulate_training(&cfg, uniform_grid_sampler(3)).unwrap());
    assert_eq!(parallel, single);
    let other =
        emulate_training(&EmulationConfig { seed: 6, ..cfg }, uniform_grid_sampler(3)).unwrap();
    assert_ne!(parallel, other);
}
