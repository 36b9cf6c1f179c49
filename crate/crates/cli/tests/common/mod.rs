#![allow(dead_code)]

use std::path::Path;

use layoutminer_core::{
    ActivityType, AnnotationBody, CropRegion, EventKind, Pose, ScenarioKey, Screenshot,
    ScreenshotId, Store, UiType, Widget, WidgetId,
};
use rand::Rng;

pub const CATEGORIES: [&str; 5] = [
    "Productivity",
    "Weather",
    "Music",
    "Social Networking",
    "Finance",
];
pub const ENVIRONMENTS: [&str; 3] = ["home", "office", "cafe"];
pub const TASKS: [&str; 2] = ["relaxing", "focus work"];
const UI_TYPES: [UiType; 3] = UiType::ALL;

/// Populates `store` with a random but valid dataset: screenshots, widgets
/// (some cropped), placements with adjustments, and annotations on most
/// widgets (each with probability `annotate_prob`). Returns the number of widgets created.
pub fn populate(
    store: &Store,
    rng: &mut impl Rng,
    participants: usize,
    max_widgets: usize,
    annotate_prob: f64,
) -> usize {
    let png = layoutminer_sim::synthetic_screenshot("fixture");
    let blob = store.put_blob(&png).unwrap();
    let mut made = 0;
    for p in 0..participants {
        let pid = format!("P{p:02}");
        let shot = ScreenshotId::new(format!("s-{pid}"));
        store
            .put_screenshot(Screenshot {
                id: shot.clone(),
                participant_id: pid.clone(),
                image_ref: blob.clone(),
                app_hint: None,
                captured_at_ms: p as u64,
                redacted: false,
            })
            .unwrap();
        for env in ENVIRONMENTS {
            if rng.random_bool(0.3) {
                continue;
            }
            let task = TASKS[rng.random_range(0..TASKS.len())];
            let key = ScenarioKey::new(&pid, env, task).unwrap();
            store.register_scenario(&key).unwrap();
            let n = rng.random_range(1..=max_widgets);
            for i in 0..n {
                let id = WidgetId::new(format!("{pid}-{env}-{i}"));
                let crop = if rng.random_bool(0.5) {
                    CropRegion::FULL
                } else {
                    CropRegion::new(0.1, 0.2, 0.6, 0.5).unwrap()
                };
                store
                    .put_widget(Widget {
                        id: id.clone(),
                        screenshot_id: shot.clone(),
                        crop,
                        image_ref: blob.clone(),
                        created_at_ms: i as u64,
                    })
                    .unwrap();
                made += 1;
                let pose = |rng: &mut dyn rand::RngCore| {
                    Pose::at(
                        rng.random_range(-2.0..2.0),
                        rng.random_range(0.5..2.0),
                        rng.random_range(-2.0..2.0),
                    )
                };
                store
                    .append_event(&key, &id, EventKind::Add, pose(rng), i as u64)
                    .unwrap();
                while rng.random_bool(0.3) {
                    store
                        .append_event(&key, &id, EventKind::Update, pose(rng), i as u64)
                        .unwrap();
                }
                if rng.random_bool(annotate_prob) {
                    let mut body = AnnotationBody {
                        app_name: format!("App {}", rng.random_range(0..8)),
                        functionality: ["app icon", "clock", "inbox"][rng.random_range(0..3)]
                            .into(),
                        category: CATEGORIES[rng.random_range(0..CATEGORIES.len())].into(),
                        ..Default::default()
                    };
                    body.ui_types.insert(UI_TYPES[rng.random_range(0..3)]);
                    if rng.random_bool(0.3) {
                        body.ui_types.insert(UI_TYPES[rng.random_range(0..3)]);
                    }
                    body.cluster_id = Some(format!("{pid}-{env}-c{}", i % 3).into());
                    body.activity_type = Some(ActivityType::ALL[rng.random_range(0..3)]);
                    store.upsert_annotation(&id, body, 0).unwrap();
                }
            }
        }
    }
    made
}

/// Builds a store at `dir`, closes it, and returns the widget count.
pub fn fixture_store(dir: &Path, seed: u64) -> usize {
    use rand::SeedableRng;
    let store = Store::open(dir).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    populate(&store, &mut rng, 6, 6, 1.0)
}
