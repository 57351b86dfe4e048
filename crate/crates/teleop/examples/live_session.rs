//! Serves a live scenario on an ephemeral port, connects to it over
//! WebSocket like a console would, pushes the informed robot for a second,
//! then pauses the session.
//!
//! ```text
//! cargo run -p swarmlink-teleop --example live_session
//! ```

use std::path::PathBuf;

use futures::{SinkExt, StreamExt};
use serde_json::{json, Value};
use swarmlink::simulator::Scenario;
use swarmlink_teleop::{ServiceConfig, TeleopService};
use tokio_tungstenite::tungstenite::Message;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/live_teleop.json"));
    let service = TeleopService::start(Scenario::load(&path)?, ServiceConfig::default())?;
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let addr = listener.local_addr()?;
    let (stop_tx, stop_rx) = tokio::sync::oneshot::channel::<()>();
    let server = async move {
        service
            .serve_on(listener, async {
                let _ = stop_rx.await;
            })
            .await
    };
    let server = tokio::spawn(server);

    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await?;
    let next_json = |msg: Message| -> Option<Value> {
        match msg {
            Message::Text(t) => serde_json::from_str(t.as_str()).ok(),
            _ => None,
        }
    };

    let hello = next_json(ws.next().await.ok_or("closed")??).ok_or("no hello")?;
    let summary = &hello["scenario"];
    println!(
        "connected as client {} to {} ({} robots, r = {}, f_bar = {}, {} Hz)",
        hello["client"], summary["name"], summary["n_robots"], summary["r"], summary["f_bar"], hello["rate_hz"]
    );

    ws.send(Message::text(json!({"type": "force", "fx": 5.0, "fy": 0.0, "seq": 1}).to_string())).await?;
    let mut frames = 0;
    while frames < 30 {
        let Some(msg) = next_json(ws.next().await.ok_or("closed")??) else { continue };
        match msg["type"].as_str() {
            Some("ack") => println!(
                "force acknowledged, clamped to ({:.3}, {:.3})",
                msg["fx"].as_f64().unwrap_or(0.0),
                msg["fy"].as_f64().unwrap_or(0.0)
            ),
            Some("frame") => {
                frames += 1;
                if frames % 10 == 0 {
                    let lead = &msg["robots"][0]["x"];
                    let longest = msg["edges"]
                        .as_array()
                        .map_or(0.0, |e| e.iter().filter_map(|e| e["d"].as_f64()).fold(0.0, f64::max));
                    println!(
                        "t = {:.2} s  robot 1 at ({:+.3}, {:+.3})  longest link {longest:.3}  V = {:.4}",
                        msg["t"].as_f64().unwrap_or(0.0),
                        lead[0].as_f64().unwrap_or(0.0),
                        lead[1].as_f64().unwrap_or(0.0),
                        msg["V"].as_f64().unwrap_or(0.0)
                    );
                }
            }
            _ => {}
        }
    }

    ws.send(Message::text(json!({"type": "control", "action": "pause"}).to_string())).await?;
    loop {
        let Some(msg) = next_json(ws.next().await.ok_or("closed")??) else { continue };
        if msg["type"] == "status" {
            println!("session {} at t = {:.2} s", msg["state"], msg["t"].as_f64().unwrap_or(0.0));
            break;
        }
    }
    ws.close(None).await?;
    let _ = stop_tx.send(());
    server.await??;
    Ok(())
}
