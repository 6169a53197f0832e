use serde::Serialize;
use serde_json::{Map, Value};

use super::TransportError;
use crate::swarm::MavState;
use crate::MavId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    GainUpdate,
    StartFlight,
    CostReport,
    StateNotify,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::GainUpdate => "GAIN_UPDATE",
            Kind::StartFlight => "START_FLIGHT",
            Kind::CostReport => "COST_REPORT",
            Kind::StateNotify => "STATE_NOTIFY",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "GAIN_UPDATE" => Kind::GainUpdate,
            "START_FLIGHT" => Kind::StartFlight,
            "COST_REPORT" => Kind::CostReport,
            "STATE_NOTIFY" => Kind::StateNotify,
            _ => return None,
        })
    }

    fn fields(&self) -> &'static [&'static str] {
        match self {
            Kind::GainUpdate => &["k_p", "k_d"],
            Kind::StartFlight => &["primitive_id"],
            Kind::CostReport => &["j"],
            Kind::StateNotify => &["state"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Payload {
    GainUpdate { k_p: f64, k_d: f64 },
    StartFlight { primitive_id: u32 },
    CostReport { j: f64 },
    StateNotify { state: MavState },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Message {
    pub seq: u64,
    pub mav_id: MavId,
    pub payload: Payload,
}

impl Message {
    pub fn kind(&self) -> Kind {
        match self.payload {
            Payload::GainUpdate { .. } => Kind::GainUpdate,
            Payload::StartFlight { .. } => Kind::StartFlight,
            Payload::CostReport { .. } => Kind::CostReport,
            Payload::StateNotify { .. } => Kind::StateNotify,
        }
    }

    pub fn gain_update(seq: u64, mav_id: MavId, k_p: f64, k_d: f64) -> Self {
        Self {
            seq,
            mav_id,
            payload: Payload::GainUpdate { k_p, k_d },
        }
    }

    pub fn start_flight(seq: u64, mav_id: MavId, primitive_id: u32) -> Self {
        Self {
            seq,
            mav_id,
            payload: Payload::StartFlight { primitive_id },
        }
    }

    pub fn cost_report(seq: u64, mav_id: MavId, j: f64) -> Self {
        Self {
            seq,
            mav_id,
            payload: Payload::CostReport { j },
        }
    }

    pub fn state_notify(seq: u64, mav_id: MavId, state: MavState) -> Self {
        Self {
            seq,
            mav_id,
            payload: Payload::StateNotify { state },
        }
    }
}

#[derive(Serialize)]
struct Gains<'a> {
    kind: &'a str,
    seq: u64,
    mav_id: MavId,
    k_p: f64,
    k_d: f64,
}

#[derive(Serialize)]
struct Start<'a> {
    kind: &'a str,
    seq: u64,
    mav_id: MavId,
    primitive_id: u32,
}

#[derive(Serialize)]
struct Report<'a> {
    kind: &'a str,
    seq: u64,
    mav_id: MavId,
    j: f64,
}

#[derive(Serialize)]
struct Notify<'a> {
    kind: &'a str,
    seq: u64,
    mav_id: MavId,
    state: &'a str,
}

/// One JSON object terminated by a single LF.
pub fn encode(msg: &Message) -> Vec<u8> {
    let kind = msg.kind().as_str();
    let (seq, mav_id) = (msg.seq, msg.mav_id);
    let mut line = match msg.payload {
        Payload::GainUpdate { k_p, k_d } => serde_json::to_vec(&Gains {
            kind,
            seq,
            mav_id,
            k_p,
            k_d,
        }),
        Payload::StartFlight { primitive_id } => serde_json::to_vec(&Start {
            kind,
            seq,
            mav_id,
            primitive_id,
        }),
        Payload::CostReport { j } => serde_json::to_vec(&Report {
            kind,
            seq,
            mav_id,
            j,
        }),
        Payload::StateNotify { state } => serde_json::to_vec(&Notify {
            kind,
            seq,
            mav_id,
            state: state.as_str(),
        }),
    }
    .expect("flat structs always serialize");
    line.push(b'\n');
    line
}

fn schema(field: &'static str, reason: impl Into<String>) -> TransportError {
    TransportError::Schema {
        field,
        reason: reason.into(),
    }
}

fn take_u64(obj: &Map<String, Value>, field: &'static str) -> Result<u64, TransportError> {
    obj.get(field)
        .ok_or_else(|| schema(field, "missing"))?
        .as_u64()
        .ok_or_else(|| schema(field, "expected a non-negative integer"))
}

fn take_f64(obj: &Map<String, Value>, field: &'static str) -> Result<f64, TransportError> {
    let v = obj.get(field).ok_or_else(|| schema(field, "missing"))?;
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| schema(field, "not representable")),
        _ => Err(schema(field, "expected a number")),
    }
}

/// Strict inverse of [`encode`]. A single trailing LF is accepted.
pub fn decode(line: &[u8]) -> Result<Message, TransportError> {
    let body = line.strip_suffix(b"\n").unwrap_or(line);
    let value: Value = serde_json::from_slice(body).map_err(|e| {
        // Lines never contain newlines, so the column locates the byte.
        let offset = if e.line() <= 1 {
            e.column().saturating_sub(1)
        } else {
            body.len()
        };
        TransportError::Malformed {
            offset: offset.min(body.len()),
            reason: e.to_string(),
        }
    })?;
    let Value::Object(obj) = value else {
        return Err(TransportError::Malformed {
            offset: 0,
            reason: "expected a JSON object".into(),
        });
    };

    let kind_name = obj
        .get("kind")
        .ok_or_else(|| schema("kind", "missing"))?
        .as_str()
        .ok_or_else(|| schema("kind", "expected a string"))?;
    let kind =
        Kind::parse(kind_name).ok_or_else(|| TransportError::UnknownKind(kind_name.into()))?;

    for key in obj.keys() {
        let known = matches!(key.as_str(), "kind" | "seq" | "mav_id")
            || kind.fields().contains(&key.as_str());
        if !known {
            return Err(TransportError::Schema {
                field: "<extra>",
                reason: format!("unknown field `{key}` for {}", kind.as_str()),
            });
        }
    }

    let seq = take_u64(&obj, "seq")?;
    let mav_id =
        MavId::try_from(take_u64(&obj, "mav_id")?).map_err(|_| schema("mav_id", "out of range"))?;
    let payload = match kind {
        Kind::GainUpdate => Payload::GainUpdate {
            k_p: take_f64(&obj, "k_p")?,
            k_d: take_f64(&obj, "k_d")?,
        },
        Kind::StartFlight => Payload::StartFlight {
            primitive_id: u32::try_from(take_u64(&obj, "primitive_id")?)
                .map_err(|_| schema("primitive_id", "out of range"))?,
        },
        Kind::CostReport => {
            let j = take_f64(&obj, "j")?;
            if !(j.is_finite() && j >= 0.0) {
                return Err(schema("j", "must be finite and >= 0"));
            }
            Payload::CostReport { j }
        }
        Kind::StateNotify => {
            let name = obj
                .get("state")
                .ok_or_else(|| schema("state", "missing"))?
                .as_str()
                .ok_or_else(|| schema("state", "expected a string"))?;
            Payload::StateNotify {
                state: MavState::parse(name)
                    .ok_or_else(|| schema("state", format!("unknown state `{name}`")))?,
            }
        }
    };
    Ok(Message {
        seq,
        mav_id,
        payload,
    })
}
