//! Pseudocode rendering and the matching algorithm-file parser.
//!
//! ```text
//! when RB-Broadcast(m) do:
//!     SEND to all(<type0,m>) if received (<type0,m>) from 0 distinct parties and not already sent;
//!     STOP if received (<type0,m>) from 0 distinct parties;
//! when receive(m) do:
//!     DELIVER(<m>) if received (<type0,m>) from 0 distinct parties and not already delivered;
//!     STOP if received (<type0,m>) from 0 distinct parties;
//! ```

use std::fmt::Write as _;

use thiserror::Error;

use super::{Action, AlgorithmDraft, Condition, Fanout, HandlerId, Logic, MessageType, ProtocolError, ThresholdKind};

const BROADCAST_HEADER: &str = "when RB-Broadcast(m) do:";
const RECEIVE_HEADER: &str = "when receive(m) do:";
const INDENT: &str = "    ";

pub fn render_pseudocode(alg: &AlgorithmDraft) -> Result<String, ProtocolError> {
    if !alg.is_complete() {
        return Err(ProtocolError::Incomplete);
    }
    let mut out = String::new();
    for (header, handler) in [
        (BROADCAST_HEADER, HandlerId::Broadcast),
        (RECEIVE_HEADER, HandlerId::Receive),
    ] {
        out.push_str(header);
        out.push('\n');
        for &a in alg.handler(handler) {
            out.push_str(INDENT);
            out.push_str(&render_action(a));
            out.push('\n');
        }
    }
    Ok(out)
}

fn render_action(a: Action) -> String {
    let mut s = String::new();
    let guard = match a.logic() {
        Logic::Send { to, msg_type } => {
            let target = match to {
                Fanout::All => "all",
                Fanout::Neighbours => "neighbours",
                Fanout::Myself => "myself",
            };
            let _ = write!(s, "SEND to {target}(<{msg_type},m>)");
            " and not already sent"
        }
        Logic::Deliver => {
            s.push_str("DELIVER(<m>)");
            " and not already delivered"
        }
        Logic::Stop => {
            s.push_str("STOP");
            ""
        }
    };
    let c = a.condition();
    let parties = if c.threshold() == ThresholdKind::One {
        "party"
    } else {
        "parties"
    };
    let _ = write!(
        s,
        " if received (<{},m>) from {} distinct {parties}{guard};",
        c.msg_type(),
        c.threshold().symbol()
    );
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message} (at `{token}`)")]
pub struct ParseError {
    pub line: usize,
    pub token: String,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, token: &str, message: impl Into<String>) -> Self {
        Self {
            line,
            token: token.to_string(),
            message: message.into(),
        }
    }
}

/// Parses the text produced by [`render_pseudocode`].
///
/// Blank lines and lines starting with `#` are ignored; `⟨ ⟩` may stand in for
/// `< >`, and "neighbors" is accepted for "neighbours".
pub fn parse_algorithm(text: &str) -> Result<AlgorithmDraft, ParseError> {
    let mut handlers: [Vec<Action>; 2] = [Vec::new(), Vec::new()];
    let mut current: Option<usize> = None;
    let mut seen = [false; 2];
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        last_line = line_no;
        let normalized = line.replace('⟨', "<").replace('⟩', ">").replace('−', "-");
        let header = normalized.trim_end_matches(':');
        if header == BROADCAST_HEADER.trim_end_matches(':') || header == RECEIVE_HEADER.trim_end_matches(':') {
            let h = usize::from(header.starts_with("when receive"));
            if seen[h] {
                return Err(ParseError::new(line_no, line, "handler declared twice"));
            }
            if h == 1 && !seen[0] {
                return Err(ParseError::new(line_no, line, "RB-Broadcast handler must come first"));
            }
            if let Some(prev) = current {
                if handlers[prev].last().is_none_or(|a| !a.is_stop()) {
                    return Err(ParseError::new(
                        line_no,
                        line,
                        "previous handler does not end with STOP",
                    ));
                }
            }
            seen[h] = true;
            current = Some(h);
            continue;
        }
        let Some(h) = current else {
            return Err(ParseError::new(
                line_no,
                first_token(line),
                "action outside of a handler",
            ));
        };
        if handlers[h].last().is_some_and(|a| a.is_stop()) {
            return Err(ParseError::new(line_no, first_token(line), "action after STOP"));
        }
        handlers[h].push(parse_action(&normalized, line_no)?);
    }

    if !seen[1] {
        return Err(ParseError::new(
            last_line.max(1),
            "",
            "missing `when receive(m) do:` handler",
        ));
    }
    let [broadcast, receive] = handlers;
    AlgorithmDraft::from_handlers(broadcast, receive).map_err(|e| ParseError::new(last_line, "", e.to_string()))
}

fn first_token(s: &str) -> &str {
    s.split_whitespace().next().unwrap_or(s)
}

fn parse_action(line: &str, line_no: usize) -> Result<Action, ParseError> {
    let body = line.trim_end_matches(';').trim_end();
    let err = |tok: &str, msg: &str| ParseError::new(line_no, tok, msg);

    let (logic_text, cond_text) = match body.find(" if received ") {
        Some(i) => (&body[..i], Some(&body[i + " if received ".len()..])),
        None => (body, None),
    };

    let logic = if logic_text == "STOP" {
        Logic::Stop
    } else if logic_text == "DELIVER(<m>)" || logic_text == "DELIVER(m)" {
        Logic::Deliver
    } else if let Some(rest) = logic_text.strip_prefix("SEND to ") {
        let (target, arg) = rest
            .split_once('(')
            .ok_or_else(|| err(logic_text, "expected `(<typeK,m>)` after SEND target"))?;
        let to = match target {
            "all" => Fanout::All,
            "neighbours" | "neighbors" => Fanout::Neighbours,
            "myself" => Fanout::Myself,
            other => return Err(err(other, "unknown SEND target")),
        };
        let arg = arg.strip_suffix(')').ok_or_else(|| err(arg, "unclosed `(`"))?;
        Logic::Send {
            to,
            msg_type: parse_message(arg).ok_or_else(|| err(arg, "expected `<typeK,m>`"))?,
        }
    } else {
        return Err(err(first_token(logic_text), "unknown action"));
    };

    let condition = match cond_text {
        // a bare STOP is the tautology
        None if logic == Logic::Stop => Condition::ZERO,
        None => return Err(err(logic_text, "missing `if received ...` condition")),
        Some(cond) => parse_condition(cond, logic, line_no)?,
    };
    Action::new(logic, condition).map_err(|e| err(body, &e.to_string()))
}

fn parse_condition(cond: &str, logic: Logic, line_no: usize) -> Result<Condition, ParseError> {
    let err = |tok: &str, msg: &str| ParseError::new(line_no, tok, msg);
    let cond = cond.trim();
    let inner = cond
        .strip_prefix('(')
        .and_then(|c| c.split_once(')'))
        .ok_or_else(|| err(cond, "expected `(<typeK,m>)`"))?;
    let msg_type = parse_message(inner.0).ok_or_else(|| err(inner.0, "expected `<typeK,m>`"))?;
    let rest = inner.1.trim_start();
    let rest = rest
        .strip_prefix("from ")
        .ok_or_else(|| err(first_token(rest), "expected `from`"))?;
    let (threshold_tok, rest) = rest.split_once(' ').unwrap_or((rest, ""));
    let threshold = match threshold_tok {
        "0" => ThresholdKind::Zero,
        "1" => ThresholdKind::One,
        "F+1" => ThresholdKind::FPlusOne,
        "(N+F)/2" => ThresholdKind::HalfNPlusF,
        "N-F" => ThresholdKind::NMinusF,
        other => return Err(err(other, "unknown threshold")),
    };
    let rest = rest
        .strip_prefix("distinct parties")
        .or_else(|| rest.strip_prefix("distinct party"))
        .or_else(|| rest.strip_prefix("distinct processes"))
        .or_else(|| rest.strip_prefix("distinct process"))
        .ok_or_else(|| err(first_token(rest), "expected `distinct parties`"))?
        .trim();
    let expected_guard = match logic {
        Logic::Send { .. } => Some("and not already sent"),
        Logic::Deliver => Some("and not already delivered"),
        Logic::Stop => None,
    };
    if !rest.is_empty() && Some(rest) != expected_guard {
        return Err(err(rest, "unexpected trailing text"));
    }
    Ok(Condition::new(threshold, msg_type))
}

fn parse_message(s: &str) -> Option<MessageType> {
    let s = s.trim().strip_prefix('<')?.strip_suffix('>')?;
    let (ty, content) = s.split_once(',')?;
    if content.trim() != "m" {
        return None;
    }
    ty.trim().strip_prefix("type")?.parse::<u8>().ok().map(MessageType)
}
