//! Wire format: one JSON document per WebSocket text message,
//! `{"type": ..., "seq": ..., "payload": {...}}`.

use arn_core::constraints::{ConstraintSet, Window};
use arn_core::domain::{DoorState, Pose, RobotStatus, StationKind, WorldMap};
use arn_core::human::FeedbackKind;
use arn_core::mediator::{DoorView, Frame, RobotView};
use arn_core::scenario::Scenario;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageType {
    Frame,
    Feedback,
    DoorCommand,
    Hello,
    Ack,
    Error,
}

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("unknown message type `{0}`")]
    UnknownType(String),
    #[error("unknown feedback kind `{0}`; expected busy_2_min or busy_4_min")]
    UnknownFeedback(String),
    #[error("message type `{0}` is not accepted from clients")]
    NotInbound(String),
    #[error("seq {got} does not increase past {last}")]
    StaleSeq { got: u64, last: u64 },
}

/// Rounds to the 3 decimals the wire carries.
pub fn round3(x: f64) -> f64 {
    let r = (x * 1000.0).round() / 1000.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    #[serde(rename = "type")]
    kind: MessageType,
    seq: u64,
    payload: &'a T,
}

fn envelope<T: Serialize>(kind: MessageType, seq: u64, payload: &T) -> String {
    serde_json::to_string(&Envelope { kind, seq, payload }).expect("wire types serialize")
}

// frames

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WirePose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireRobot {
    pub id: usize,
    pub pose: WirePose,
    pub trajectory: Vec<[f64; 2]>,
    pub action: Option<String>,
    pub status: RobotStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireDoor {
    pub id: String,
    pub state: DoorState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireWindow {
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FramePayload {
    pub tick: f64,
    pub robots: Vec<WireRobot>,
    pub doors: Vec<WireDoor>,
    pub constraints: Vec<WireWindow>,
}

impl From<&Frame> for FramePayload {
    fn from(f: &Frame) -> Self {
        FramePayload {
            tick: round3(f.tick),
            robots: f
                .robots
                .iter()
                .map(|r| WireRobot {
                    id: r.id,
                    pose: WirePose {
                        x: round3(r.pose.x),
                        y: round3(r.pose.y),
                        heading: round3(r.pose.heading),
                    },
                    trajectory: r.trajectory.iter().map(|&(x, y)| [round3(x), round3(y)]).collect(),
                    action: r.action.clone(),
                    status: r.status,
                })
                .collect(),
            doors: f
                .doors
                .iter()
                .map(|d| WireDoor {
                    id: d.id.clone(),
                    state: d.state,
                })
                .collect(),
            constraints: f
                .constraints
                .windows()
                .iter()
                .map(|w| WireWindow {
                    start: round3(w.start),
                    end: round3(w.end),
                })
                .collect(),
        }
    }
}

impl From<FramePayload> for Frame {
    fn from(p: FramePayload) -> Self {
        Frame {
            tick: p.tick,
            robots: p
                .robots
                .into_iter()
                .map(|r| RobotView {
                    id: r.id,
                    pose: Pose::new(r.pose.x, r.pose.y, r.pose.heading),
                    trajectory: r.trajectory.into_iter().map(|[x, y]| (x, y)).collect(),
                    action: r.action,
                    status: r.status,
                })
                .collect(),
            doors: p
                .doors
                .into_iter()
                .map(|d| DoorView { id: d.id, state: d.state })
                .collect(),
            constraints: ConstraintSet::new(p.constraints.into_iter().map(|w| Window::new(w.start, w.end))),
        }
    }
}

pub fn encode_frame(seq: u64, frame: &Frame) -> String {
    envelope(MessageType::Frame, seq, &FramePayload::from(frame))
}

/// Decodes a frame message; used by tests and clients written in Rust.
pub fn decode_frame(text: &str) -> Result<(u64, Frame), ProtocolError> {
    let (kind, seq, payload) = split(text)?;
    if kind != MessageType::Frame {
        return Err(ProtocolError::Malformed(format!("expected a frame, got {kind:?}")));
    }
    let p: FramePayload = serde_json::from_value(payload).map_err(|e| ProtocolError::Malformed(e.to_string()))?;
    Ok((seq, p.into()))
}

// hello

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireNode {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireEdge {
    pub from: String,
    pub to: String,
    pub length: f64,
    pub door: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireDoorSpec {
    pub id: String,
    pub assisted: bool,
    pub auto_close_after: f64,
    /// The two nodes the door connects.
    pub between: [String; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireStation {
    pub id: String,
    pub node: String,
    pub kind: StationKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapGeometry {
    pub nodes: Vec<WireNode>,
    pub edges: Vec<WireEdge>,
    pub doors: Vec<WireDoorSpec>,
    pub stations: Vec<WireStation>,
}

impl From<&WorldMap> for MapGeometry {
    fn from(w: &WorldMap) -> Self {
        MapGeometry {
            nodes: w
                .nodes()
                .iter()
                .map(|n| WireNode {
                    id: n.id.clone(),
                    x: round3(n.x),
                    y: round3(n.y),
                })
                .collect(),
            edges: w
                .edges()
                .iter()
                .map(|e| WireEdge {
                    from: e.from.clone(),
                    to: e.to.clone(),
                    length: round3(e.length),
                    door: e.door.clone(),
                })
                .collect(),
            doors: w
                .doors()
                .iter()
                .enumerate()
                .map(|(i, d)| {
                    let (a, b) = w.door_endpoints(i);
                    WireDoorSpec {
                        id: d.id.clone(),
                        assisted: d.assisted,
                        auto_close_after: d.auto_close_after,
                        between: [w.nodes()[a].id.clone(), w.nodes()[b].id.clone()],
                    }
                })
                .collect(),
            stations: w
                .stations()
                .iter()
                .map(|s| WireStation {
                    id: s.id.clone(),
                    node: s.node.clone(),
                    kind: s.kind,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HelloPayload {
    pub protocol: u32,
    pub scenario: String,
    pub robots: usize,
    /// Simulation seconds per tick.
    pub dt: f64,
    /// Simulation clock when the hello was sent.
    pub clock: f64,
    pub map: MapGeometry,
}

impl HelloPayload {
    pub fn new(scenario: &Scenario, clock: f64) -> Self {
        HelloPayload {
            protocol: PROTOCOL_VERSION,
            scenario: scenario.name.clone(),
            robots: scenario.robot_count(),
            dt: arn_core::sim::DT,
            clock: round3(clock),
            map: MapGeometry::from(&scenario.world),
        }
    }
}

pub fn encode_hello(seq: u64, hello: &HelloPayload) -> String {
    envelope(MessageType::Hello, seq, hello)
}

// acks and errors

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AckPayload {
    /// Seq of the client message being acknowledged.
    pub ack: u64,
    /// Simulation clock when the input was accepted.
    pub clock: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPayload {
    /// Seq of the offending client message, when it could be read.
    pub ack: Option<u64>,
    pub message: String,
}

pub fn encode_ack(seq: u64, ack: u64, clock: f64) -> String {
    envelope(MessageType::Ack, seq, &AckPayload { ack, clock: round3(clock) })
}

pub fn encode_error(seq: u64, ack: Option<u64>, message: &str) -> String {
    envelope(
        MessageType::Error,
        seq,
        &ErrorPayload {
            ack,
            message: message.to_string(),
        },
    )
}

// inbound

#[derive(Debug, Clone, PartialEq)]
pub enum Inbound {
    Feedback(FeedbackKind),
    /// Open the door with this id.
    DoorCommand(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FeedbackPayload {
    kind: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DoorCommandPayload {
    door: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnvelope {
    #[serde(rename = "type")]
    kind: String,
    seq: u64,
    #[serde(default)]
    payload: Value,
}

fn split(text: &str) -> Result<(MessageType, u64, Value), ProtocolError> {
    let raw: RawEnvelope = serde_json::from_str(text).map_err(|e| ProtocolError::Malformed(e.to_string()))?;
    let kind: MessageType = serde_json::from_value(Value::String(raw.kind.clone()))
        .map_err(|_| ProtocolError::UnknownType(raw.kind))?;
    Ok((kind, raw.seq, raw.payload))
}

/// Seq of a message, if it can be read at all.
pub fn peek_seq(text: &str) -> Option<u64> {
    serde_json::from_str::<Value>(text).ok()?.get("seq")?.as_u64()
}

/// Decodes a client message into its seq and the input it carries.
pub fn decode_inbound(text: &str) -> Result<(u64, Inbound), ProtocolError> {
    let (kind, seq, payload) = split(text)?;
    let malformed = |e: serde_json::Error| ProtocolError::Malformed(e.to_string());
    let input = match kind {
        MessageType::Feedback => {
            let p: FeedbackPayload = serde_json::from_value(payload).map_err(malformed)?;
            Inbound::Feedback(FeedbackKind::parse(&p.kind).ok_or(ProtocolError::UnknownFeedback(p.kind))?)
        }
        MessageType::DoorCommand => {
            let p: DoorCommandPayload = serde_json::from_value(payload).map_err(malformed)?;
            Inbound::DoorCommand(p.door)
        }
        other => {
            let name = serde_json::to_value(other).expect("serializable");
            return Err(ProtocolError::NotInbound(name.as_str().unwrap_or_default().to_string()));
        }
    };
    Ok((seq, input))
}

pub fn encode_feedback(seq: u64, kind: FeedbackKind) -> String {
    envelope(MessageType::Feedback, seq, &serde_json::json!({ "kind": kind.as_str() }))
}

pub fn encode_door_command(seq: u64, door: &str) -> String {
    envelope(MessageType::DoorCommand, seq, &serde_json::json!({ "door": door }))
}
