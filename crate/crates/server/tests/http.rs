use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use base64::Engine as _;
use layoutminer_core::Store;
use layoutminer_server::{spawn_background, ServerHandle};
use serde_json::{json, Value};

struct Client {
    base: String,
    agent: ureq::Agent,
}

impl Client {
    fn new(server: &ServerHandle) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            base: server.base_url(),
            agent,
        }
    }

    fn finish(mut resp: ureq::http::Response<ureq::Body>) -> (u16, Value) {
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().unwrap();
        let value = if text.is_empty() {
            Value::Null
        } else {
            serde_json::from_str(&text).unwrap_or(Value::String(text))
        };
        (status, value)
    }

    fn get(&self, path: &str) -> (u16, Value) {
        Self::finish(
            self.agent
                .get(format!("{}{path}", self.base))
                .call()
                .unwrap(),
        )
    }

    fn post(&self, path: &str, body: Value) -> (u16, Value) {
        self.post_as(path, body, None)
    }

    fn post_as(&self, path: &str, body: Value, role: Option<(&str, &str)>) -> (u16, Value) {
        let mut req = self.agent.post(format!("{}{path}", self.base));
        if let Some((id, role)) = role {
            req = req.header("x-client-id", id).header("x-client-role", role);
        }
        Self::finish(req.send_json(&body).unwrap())
    }

    fn put(&self, path: &str, body: Value) -> (u16, Value) {
        Self::finish(
            self.agent
                .put(format!("{}{path}", self.base))
                .send_json(&body)
                .unwrap(),
        )
    }
}

fn png(w: u32, h: u32) -> String {
    let img = image::RgbImage::from_fn(w, h, |x, y| image::Rgb([x as u8, y as u8, 7]));
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png).unwrap();
    base64::engine::general_purpose::STANDARD.encode(out.into_inner())
}

fn pose(x: f64) -> Value {
    json!({"px": x, "py": 1.5, "pz": -1.0, "qw": 1.0, "qx": 0.0, "qy": 0.0, "qz": 0.0})
}

const SCN: &str = "/scenarios/P1/office/work";

/// Server with one registered scenario, one screenshot and `n` widgets.
fn setup(n: usize) -> (ServerHandle, Client, Vec<String>) {
    let server =
        spawn_background(Arc::new(Store::in_memory()), "127.0.0.1:0".parse().unwrap()).unwrap();
    let c = Client::new(&server);
    let (s, _) = c.post(
        "/scenarios",
        json!({"participant_id": "P1", "environment": "office", "task": "work"}),
    );
    assert_eq!(s, 200);
    let (s, shot) = c.post(
        "/screenshots",
        json!({"participant_id": "P1", "app_hint": "Mail", "image_base64": png(40, 80)}),
    );
    assert_eq!(s, 201, "{shot}");
    let mut ids = Vec::new();
    for i in 0..n {
        let (s, w) = c.post(
            "/widgets",
            json!({
                "screenshot_id": shot["screenshot_id"],
                "crop": {"x0": 0.0, "y0": 0.1 * i as f64, "x1": 0.5, "y1": 0.1 * i as f64 + 0.1},
            }),
        );
        assert_eq!(s, 201, "{w}");
        ids.push(w["widget_id"].as_str().unwrap().to_owned());
    }
    (server, c, ids)
}

#[test]
fn place_adjust_reselect_over_http() {
    let (_server, c, ids) = setup(2);
    let (s, ack) = c.post(
        &format!("{SCN}/events"),
        json!({"widget_id": ids[0], "kind": "add", "pose": pose(0.0)}),
    );
    assert_eq!((s, ack["seq"].as_u64()), (200, Some(1)));
    c.post(
        &format!("{SCN}/events"),
        json!({"widget_id": ids[1], "kind": "add", "pose": pose(1.0)}),
    );
    // adjust: update without widget id moves the last placed widget
    let (_, ack) = c.post(
        &format!("{SCN}/events"),
        json!({"kind": "update", "pose": pose(2.0)}),
    );
    assert_eq!(ack["seq"], 3);
    // reselect
    let (_, ack) = c.post(
        &format!("{SCN}/events"),
        json!({"widget_id": ids[0], "kind": "update", "pose": pose(3.0)}),
    );
    assert_eq!(ack["seq"], 4);

    let (s, layout) = c.get(&format!("{SCN}/layout"));
    assert_eq!(s, 200);
    assert_eq!(layout["as_of_seq"], 4);
    assert_eq!(layout["placements"][&ids[0]]["px"], 3.0);
    assert_eq!(layout["placements"][&ids[1]]["px"], 2.0);

    let (_, feed) = c.get(&format!("{SCN}/changes?since=2"));
    assert_eq!(feed["max_seq"], 4);
    let seqs: Vec<u64> = feed["events"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["seq"].as_u64().unwrap())
        .collect();
    assert_eq!(seqs, [3, 4]);
}

#[test]
fn error_bodies() {
    let (_server, c, ids) = setup(1);
    let (s, e) = c.post(
        &format!("{SCN}/events"),
        json!({"widget_id": "nope", "kind": "add", "pose": pose(0.0)}),
    );
    assert_eq!((s, e["error_code"].as_str()), (404, Some("UnknownWidget")));

    let (s, e) = c.post(
        &format!("{SCN}/events"),
        json!({"widget_id": ids[0], "kind": "update", "pose": pose(0.0)}),
    );
    assert_eq!(
        (s, e["error_code"].as_str()),
        (409, Some("UpdateBeforeAdd"))
    );

    let (s, e) = c.post(
        &format!("{SCN}/events"),
        json!({"kind": "update", "pose": pose(0.0)}),
    );
    assert_eq!((s, e["error_code"].as_str()), (409, Some("NoLastWidget")));

    let (s, e) = c.post_as(
        &format!("{SCN}/events"),
        json!({"widget_id": ids[0], "kind": "add", "pose": pose(0.0)}),
        Some(("hmd", "preview")),
    );
    assert_eq!((s, e["error_code"].as_str()), (403, Some("WrongRole")));

    let (s, e) = c.post(
        "/scenarios/P9/x/y/events",
        json!({"widget_id": ids[0], "kind": "add", "pose": pose(0.0)}),
    );
    assert_eq!(
        (s, e["error_code"].as_str()),
        (404, Some("UnknownScenario"))
    );

    let bad_pose = json!({"px": 0, "py": 0, "pz": 0, "qw": 2.0, "qx": 0, "qy": 0, "qz": 0});
    let (s, e) = c.post(
        &format!("{SCN}/events"),
        json!({"widget_id": ids[0], "kind": "add", "pose": bad_pose}),
    );
    assert_eq!(
        (s, e["error_code"].as_str()),
        (422, Some("NonUnitQuaternion"))
    );

    let (s, e) = c.post(&format!("{SCN}/events"), json!({"kind": "sideways"}));
    assert_eq!((s, e["error_code"].as_str()), (400, Some("InvalidRequest")));

    let (s, e) = c.get(&format!("{SCN}/changes?since=abc"));
    assert_eq!((s, e["error_code"].as_str()), (400, Some("InvalidRequest")));
    let (s, e) = c.get("/scenarios/P9/x/y/changes?since=0");
    assert_eq!(
        (s, e["error_code"].as_str()),
        (404, Some("UnknownScenario"))
    );
}

#[test]
fn long_poll_wakes_on_append() {
    let (server, c, ids) = setup(1);
    let base = server.base_url();
    let w = ids[0].clone();
    let writer = thread::spawn(move || {
        thread::sleep(Duration::from_millis(150));
        let agent: ureq::Agent = ureq::Agent::config_builder().build().into();
        agent
            .post(format!("{base}{SCN}/events"))
            .send_json(json!({"widget_id": w, "kind": "add", "pose": pose(0.0)}))
            .unwrap();
    });
    let start = Instant::now();
    let (s, feed) = c.get(&format!("{SCN}/changes?since=0&wait_ms=10000"));
    assert_eq!(s, 200);
    assert_eq!(feed["events"].as_array().unwrap().len(), 1);
    assert!(start.elapsed() < Duration::from_secs(5));
    writer.join().unwrap();

    let start = Instant::now();
    let (_, feed) = c.get(&format!("{SCN}/changes?since=1&wait_ms=100"));
    assert!(feed["events"].as_array().unwrap().is_empty());
    assert!(start.elapsed() >= Duration::from_millis(90));
}

#[test]
fn widget_images_cropped_server_side() {
    let (_server, c, ids) = setup(1);
    let (_, w) = c.get(&format!("/widgets/{}", ids[0]));
    let hash = w["image_ref"].as_str().unwrap();
    let url = format!("{}/blobs/{hash}", c.base);
    let mut resp = c.agent.get(url).call().unwrap();
    assert_eq!(resp.headers()["content-type"], "image/png");
    let bytes = resp.body_mut().read_to_vec().unwrap();
    let img = image::load_from_memory(&bytes).unwrap();
    // 40x80 screenshot, crop x 0..0.5, y 0..0.1 → 20x8
    assert_eq!((img.width(), img.height()), (20, 8));
}

#[test]
fn pose_samples_and_scenes() {
    let (_server, c, ids) = setup(2);
    for (i, t) in [(0, 10), (1, 20)] {
        let (s, _) = c.post(
            &format!("{SCN}/pose_samples"),
            json!({"pose": pose(i as f64), "at_ms": t}),
        );
        assert_eq!(s, 200);
    }
    let (s, e) = c.post(
        &format!("{SCN}/pose_samples"),
        json!({"pose": pose(0.0), "at_ms": 5}),
    );
    assert_eq!(
        (s, e["error_code"].as_str()),
        (409, Some("TimestampRegression"))
    );
    let (_, trace) = c.get(&format!("{SCN}/pose_samples"));
    assert_eq!(trace.as_array().unwrap().len(), 2);

    for (i, w) in ids.iter().enumerate() {
        c.post(
            &format!("{SCN}/events"),
            json!({"widget_id": w, "kind": "add", "pose": pose(i as f64)}),
        );
    }
    let (s, scene) = c.get(&format!("{SCN}/scene"));
    assert_eq!(s, 200, "{scene}");
    assert_eq!(scene["schema"], "layoutminer.scene/1");
    assert_eq!(scene["widgets"].as_array().unwrap().len(), 2);
    let (_, first) = c.get(&format!("{SCN}/scene?as_of=1"));
    assert_eq!(first["widgets"].as_array().unwrap().len(), 1);
    let (_, history) = c.get(&format!("{SCN}/history"));
    let history = history.as_array().unwrap();
    assert_eq!(history.len(), 2);
    assert_eq!(history[1], scene);
}

fn annotation(category: &str, functionality: &str, expected: u64) -> Value {
    json!({
        "app_name": "Mail",
        "functionality": functionality,
        "ui_types": ["InformationalComponent"],
        "category": category,
        "expected_version": expected,
    })
}

#[test]
fn annotation_api() {
    let (_server, c, ids) = setup(3);
    for (i, w) in ids.iter().enumerate() {
        c.post(
            &format!("{SCN}/events"),
            json!({"widget_id": w, "kind": "add", "pose": pose(i as f64)}),
        );
    }
    let path = |w: &str| format!("/api/widgets/{w}/annotation");
    let (s, ack) = c.put(&path(&ids[0]), annotation("Productivity", "Email inbox", 0));
    assert_eq!((s, ack["version"].as_u64()), (200, Some(1)));
    let (s, e) = c.put(&path(&ids[0]), annotation("Productivity", "Email inbox", 0));
    assert_eq!(
        (s, e["error_code"].as_str()),
        (409, Some("VersionConflict"))
    );
    let (s, e) = c.put(&path(&ids[1]), annotation("NotACategory", "x", 0));
    assert_eq!(
        (s, e["error_code"].as_str()),
        (422, Some("InvalidCategory"))
    );
    let (s, e) = c.put(&path("ghost"), annotation("Productivity", "x", 0));
    assert_eq!((s, e["error_code"].as_str()), (404, Some("UnknownWidget")));
    c.put(&path(&ids[1]), annotation("Finance", "Emoji", 0));
    c.put(&path(&ids[2]), annotation("Productivity", "Email inbox", 0));

    let (s, page) =
        c.get("/api/widgets?q=&filter.environment=&sort=category:asc&offset=0&limit=50");
    assert_eq!(s, 200, "{page}");
    assert_eq!(page["total_count"], 3);
    assert_eq!(page["rows"][0]["annotation"]["category"], "Finance");

    let (_, page) = c.get("/api/widgets?q=email&limit=1");
    assert_eq!(page["total_count"], 2);
    assert_eq!(page["rows"].as_array().unwrap().len(), 1);

    let (_, page) = c.get("/api/widgets?filter.environment=kitchen");
    assert_eq!(page["total_count"], 0);

    for (url, code) in [
        ("/api/widgets?filter.colour=red", "InvalidFilterField"),
        ("/api/widgets?sort=colour:asc", "InvalidSortField"),
        ("/api/widgets?limit=0", "InvalidLimit"),
        ("/api/suggest?field=category&prefix=", "InvalidField"),
    ] {
        let (s, e) = c.get(url);
        assert_eq!((s, e["error_code"].as_str()), (400, Some(code)), "{url}");
    }

    let (_, sugg) = c.get("/api/suggest?field=functionality&prefix=em&k=10");
    assert_eq!(sugg, json!(["Email inbox", "Emoji"]));

    let (s, summary) = c.get("/api/summary");
    assert_eq!(s, 200, "{summary}");
    assert_eq!(summary["overview"]["widgets"], 3);
    assert_eq!(summary["unannotated_widgets"], 0);
    assert_eq!(
        summary["category_distribution"]["entries"]["Productivity"]["count"],
        2
    );

    let (_, ann) = c.get(&path(&ids[0]));
    assert_eq!(ann["version"], 1);
}

#[test]
fn empty_summary() {
    let server =
        spawn_background(Arc::new(Store::in_memory()), "127.0.0.1:0".parse().unwrap()).unwrap();
    let c = Client::new(&server);
    let (s, summary) = c.get("/api/summary");
    assert_eq!(s, 200);
    assert_eq!(summary["overview"]["widgets"], 0);
    assert!(summary["category_distribution"].is_null());
    server.shutdown().unwrap();
}

#[test]
fn concurrent_writers_get_contiguous_seqs() {
    let (server, _c, ids) = setup(1);
    let base = server.base_url();
    let agent: ureq::Agent = ureq::Agent::config_builder().build().into();
    agent
        .post(format!("{base}{SCN}/events"))
        .send_json(json!({"widget_id": ids[0], "kind": "add", "pose": pose(0.0)}))
        .unwrap();
    let threads: Vec<_> = (0..4)
        .map(|t| {
            let base = base.clone();
            let w = ids[0].clone();
            thread::spawn(move || {
                let agent: ureq::Agent = ureq::Agent::config_builder().build().into();
                (0..10)
                    .map(|i| {
                        agent
                            .post(format!("{base}{SCN}/events"))
                            .header("x-client-id", format!("c{t}"))
                            .send_json(
                                json!({"widget_id": w, "kind": "update", "pose": pose(i as f64)}),
                            )
                            .unwrap()
                            .body_mut()
                            .read_json::<Value>()
                            .unwrap()["seq"]
                            .as_u64()
                            .unwrap()
                    })
                    .collect::<Vec<_>>()
            })
        })
        .collect();
    let mut seqs: Vec<u64> = threads
        .into_iter()
        .flat_map(|t| t.join().unwrap())
        .collect();
    seqs.sort();
    assert_eq!(seqs, (2..=41).collect::<Vec<_>>());
}
