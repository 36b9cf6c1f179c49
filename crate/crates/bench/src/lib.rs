//! Synthetic inputs shared by the benchmarks.

use layoutminer_core::{
    Annotation, AnnotationBody, BlobHash, CropRegion, Dataset, EventKind, InteractionEvent, Layout,
    Pose, ScenarioKey, Screenshot, UiType, Widget, WidgetId,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn scenario() -> ScenarioKey {
    ScenarioKey::new("P01", "office", "focus work").unwrap()
}

fn pose(rng: &mut impl Rng, spread: f64) -> Pose {
    Pose::at(
        rng.random_range(-spread..spread),
        rng.random_range(0.0..2.5),
        rng.random_range(-spread..spread),
    )
}

/// `n` events over `n / 4` widgets: each widget added once, the rest updates.
pub fn event_log(n: usize, seed: u64) -> Vec<InteractionEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let widgets = (n / 4).max(1);
    (0..n)
        .map(|i| {
            let (w, kind) = if i < widgets {
                (i, EventKind::Add)
            } else {
                (rng.random_range(0..widgets), EventKind::Update)
            };
            InteractionEvent {
                seq: i as u64 + 1,
                scenario: scenario(),
                widget_id: WidgetId::new(format!("w{w}")),
                kind,
                pose: pose(&mut rng, 3.0),
                at_ms: i as u64,
            }
        })
        .collect()
}

/// A layout with `n` widgets scattered over a room of `spread` meters.
pub fn layout(n: usize, spread: f64, seed: u64) -> Layout {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut l = Layout::empty(scenario());
    for i in 0..n {
        l.placements
            .insert(WidgetId::new(format!("w{i}")), pose(&mut rng, spread));
    }
    l.as_of_seq = n as u64;
    l
}

/// Roughly the size of a full study: `participants` x 3 environments,
/// about 7 annotated widgets each.
pub fn dataset(participants: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ds = Dataset::default();
    for p in 0..participants {
        let pid = format!("P{p:02}");
        let shot = format!("{pid}-s");
        ds.screenshots.insert(
            shot.as_str().into(),
            Screenshot {
                id: shot.as_str().into(),
                participant_id: pid.clone(),
                image_ref: BlobHash::new(format!("{shot}-img")),
                app_hint: None,
                captured_at_ms: 0,
                redacted: false,
            },
        );
        for env in ["home", "office", "cafe"] {
            let key = ScenarioKey::new(&pid, env, "task").unwrap();
            for i in 0..rng.random_range(2..12) {
                let id = format!("{pid}-{env}-{i}");
                ds.widgets.insert(
                    id.as_str().into(),
                    Widget {
                        id: id.as_str().into(),
                        screenshot_id: shot.as_str().into(),
                        crop: CropRegion::FULL,
                        image_ref: BlobHash::new(format!("{id}-img")),
                        created_at_ms: 0,
                    },
                );
                ds.push_event(&key, id.as_str(), EventKind::Add, pose(&mut rng, 2.0));
                ds.annotations.insert(
                    id.as_str().into(),
                    Annotation {
                        widget_id: id.as_str().into(),
                        body: AnnotationBody {
                            app_name: format!("App {}", rng.random_range(0..40)),
                            functionality: format!("function {}", rng.random_range(0..20)),
                            ui_types: [UiType::ALL[rng.random_range(0..3)]].into(),
                            category: "Productivity".into(),
                            cluster_id: Some(format!("c{}", i % 3).into()),
                            ..Default::default()
                        },
                        version: 1,
                    },
                );
            }
        }
    }
    ds
}
